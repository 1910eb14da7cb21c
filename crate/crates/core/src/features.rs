//! Corner detection and pyramidal Lucas-Kanade point tracking.

use image::RgbImage;
use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Sub-pixel image location; `u` is the column, `v` the row.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pixel<T> {
    pub u: T,
    pub v: T,
}

impl<T: Real> Pixel<T> {
    pub fn new(u: T, v: T) -> Self {
        Self { u, v }
    }

    /// `[u, v, 1]`
    pub fn homogeneous(&self) -> Vector3<T> {
        Vector3::new(self.u, self.v, T::one())
    }

    pub fn distance(&self, other: &Self) -> T {
        ((self.u - other.u).powi(2) + (self.v - other.v).powi(2)).sqrt()
    }

    /// Integer pixel after rounding half away from zero.
    pub fn rounded(&self) -> (i64, i64) {
        (
            self.u.to_f64_lossy().round() as i64,
            self.v.to_f64_lossy().round() as i64,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairStatus {
    Tracked,
    Lost,
    Filtered,
}

/// A point tracked from the previous frame (`p1`) into the current one (`p2`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchedPair<T> {
    pub p1: Pixel<T>,
    pub p2: Pixel<T>,
    pub status: PairStatus,
}

impl<T: Real> MatchedPair<T> {
    pub fn tracked(p1: Pixel<T>, p2: Pixel<T>) -> Self {
        Self {
            p1,
            p2,
            status: PairStatus::Tracked,
        }
    }

    pub fn is_tracked(&self) -> bool {
        self.status == PairStatus::Tracked
    }

    pub fn h1(&self) -> Vector3<T> {
        self.p1.homogeneous()
    }

    pub fn h2(&self) -> Vector3<T> {
        self.p2.homogeneous()
    }
}

/// Single channel `f32` image, row major.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f32>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f32) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self { width, height, data }
    }

    /// Luma `0.299 R + 0.587 G + 0.114 B`, rounded to an integer level.
    pub fn from_rgb(rgb: &RgbImage) -> Self {
        let (w, h) = rgb.dimensions();
        let data = rgb
            .pixels()
            .map(|p| {
                let [r, g, b] = p.0;
                (0.299 * r as f32 + 0.587 * g as f32 + 0.114 * b as f32).round()
            })
            .collect();
        Self {
            width: w as usize,
            height: h as usize,
            data,
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    #[inline]
    fn get_clamped(&self, x: isize, y: isize) -> f32 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.data[y * self.width + x]
    }

    /// Bilinear sample with clamp-to-edge addressing.
    #[inline]
    pub fn sample(&self, x: f32, y: f32) -> f32 {
        let x0 = x.floor();
        let y0 = y.floor();
        let fx = x - x0;
        let fy = y - y0;
        let (xi, yi) = (x0 as isize, y0 as isize);
        let a = self.get_clamped(xi, yi);
        let b = self.get_clamped(xi + 1, yi);
        let c = self.get_clamped(xi, yi + 1);
        let d = self.get_clamped(xi + 1, yi + 1);
        (a * (1.0 - fx) + b * fx) * (1.0 - fy) + (c * (1.0 - fx) + d * fx) * fy
    }

    /// Bilinear samples of the `side`×`side` grid whose top-left sample is
    /// at `(x, y)`, row-major into `out`. Matches [`GrayImage::sample`].
    fn sample_window(&self, x: f32, y: f32, side: usize, out: &mut [f32]) {
        let x0 = x.floor();
        let y0 = y.floor();
        let (fx, fy) = (x - x0, y - y0);
        let (xi, yi) = (x0 as isize, y0 as isize);
        let inside = xi >= 0 && yi >= 0 && xi as usize + side < self.width && yi as usize + side < self.height;
        if !inside {
            for (k, o) in out.iter_mut().enumerate().take(side * side) {
                *o = self.sample(x + (k % side) as f32, y + (k / side) as f32);
            }
            return;
        }
        let (w00, w10) = ((1.0 - fx) * (1.0 - fy), fx * (1.0 - fy));
        let (w01, w11) = ((1.0 - fx) * fy, fx * fy);
        let stride = self.width;
        for r in 0..side {
            let row = (yi as usize + r) * stride + xi as usize;
            let top = &self.data[row..row + side + 1];
            let bottom = &self.data[row + stride..row + stride + side + 1];
            let dst = &mut out[r * side..(r + 1) * side];
            for c in 0..side {
                dst[c] = top[c] * w00 + top[c + 1] * w10 + bottom[c] * w01 + bottom[c + 1] * w11;
            }
        }
    }

    fn downsample(&self) -> Self {
        // separable [1 4 6 4 1]/16 blur, keep even samples
        const K: [f32; 5] = [1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0];
        let (w, h) = (self.width, self.height);
        let nw = w.div_ceil(2);
        let nh = h.div_ceil(2);
        let mut tmp = GrayImage::new(nw, h);
        for y in 0..h {
            for nx in 0..nw {
                let cx = (2 * nx) as isize;
                let mut acc = 0.0;
                for (k, wgt) in K.iter().enumerate() {
                    acc += wgt * self.get_clamped(cx + k as isize - 2, y as isize);
                }
                tmp.data[y * nw + nx] = acc;
            }
        }
        let mut out = GrayImage::new(nw, nh);
        for ny in 0..nh {
            let cy = (2 * ny) as isize;
            for x in 0..nw {
                let mut acc = 0.0;
                for (k, wgt) in K.iter().enumerate() {
                    acc += wgt * tmp.get_clamped(x as isize, cy + k as isize - 2);
                }
                out.data[ny * nw + x] = acc;
            }
        }
        out
    }

    /// Scharr derivatives, normalized so a unit ramp has unit slope.
    fn gradients(&self) -> (GrayImage, GrayImage) {
        let (w, h) = (self.width, self.height);
        let mut gx = GrayImage::new(w, h);
        let mut gy = GrayImage::new(w, h);
        for y in 0..h as isize {
            for x in 0..w as isize {
                let p = |dx: isize, dy: isize| self.get_clamped(x + dx, y + dy);
                let dx = 3.0 * (p(1, -1) - p(-1, -1)) + 10.0 * (p(1, 0) - p(-1, 0)) + 3.0 * (p(1, 1) - p(-1, 1));
                let dy = 3.0 * (p(-1, 1) - p(-1, -1)) + 10.0 * (p(0, 1) - p(0, -1)) + 3.0 * (p(1, 1) - p(1, -1));
                let i = y as usize * w + x as usize;
                gx.data[i] = dx / 32.0;
                gy.data[i] = dy / 32.0;
            }
        }
        (gx, gy)
    }
}

/// Progressively half-resolution copies of a single channel image, with the
/// derivative images used by the tracker.
#[derive(Debug, Clone)]
pub struct ImagePyramid {
    pub levels: Vec<GrayImage>,
    grad_x: Vec<GrayImage>,
    grad_y: Vec<GrayImage>,
}

impl ImagePyramid {
    /// `level_count` counts the source level, so 3 means full, half and
    /// quarter resolution.
    pub fn build(image: GrayImage, level_count: usize) -> Self {
        let level_count = level_count.max(1);
        let mut levels = vec![image];
        while levels.len() < level_count {
            let next = levels.last().unwrap().downsample();
            levels.push(next);
        }
        let (grad_x, grad_y) = levels.iter().map(GrayImage::gradients).unzip();
        Self { levels, grad_x, grad_y }
    }

    pub fn from_rgb(rgb: &RgbImage, level_count: usize) -> Self {
        Self::build(GrayImage::from_rgb(rgb), level_count)
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    pub fn base(&self) -> &GrayImage {
        &self.levels[0]
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.levels[0].width, self.levels[0].height)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CornerParams {
    pub max_count: usize,
    /// Fraction of the strongest response a corner must reach, in `(0, 1]`.
    pub quality: f32,
    pub min_distance: f32,
}

impl Default for CornerParams {
    fn default() -> Self {
        Self {
            max_count: 500,
            quality: 0.01,
            min_distance: 10.0,
        }
    }
}

const CORNER_BORDER: usize = 3;

/// Minimum-eigenvalue response of the 3x3-summed structure tensor.
pub fn min_eigen_response(image: &GrayImage) -> GrayImage {
    let (w, h) = (image.width, image.height);
    let mut gxx = GrayImage::new(w, h);
    let mut gxy = GrayImage::new(w, h);
    let mut gyy = GrayImage::new(w, h);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let p = |dx: isize, dy: isize| image.get_clamped(x + dx, y + dy);
            // Sobel, scaled to unit slope
            let dx = ((p(1, -1) - p(-1, -1)) + 2.0 * (p(1, 0) - p(-1, 0)) + (p(1, 1) - p(-1, 1))) / 8.0;
            let dy = ((p(-1, 1) - p(-1, -1)) + 2.0 * (p(0, 1) - p(0, -1)) + (p(1, 1) - p(1, -1))) / 8.0;
            let i = y as usize * w + x as usize;
            gxx.data[i] = dx * dx;
            gxy.data[i] = dx * dy;
            gyy.data[i] = dy * dy;
        }
    }
    let mut out = GrayImage::new(w, h);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let (mut a, mut b, mut c) = (0.0f32, 0.0f32, 0.0f32);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    a += gxx.get_clamped(x + dx, y + dy);
                    b += gxy.get_clamped(x + dx, y + dy);
                    c += gyy.get_clamped(x + dx, y + dy);
                }
            }
            let half_tr = 0.5 * (a + c);
            let disc = (0.25 * (a - c) * (a - c) + b * b).sqrt();
            out.data[y as usize * w + x as usize] = (half_tr - disc).max(0.0);
        }
    }
    out
}

/// Shi-Tomasi style corners, strongest first, at least `min_distance` apart
/// and at least 3 px from the border.
pub fn detect_corners(image: &GrayImage, params: &CornerParams) -> Vec<Pixel<f64>> {
    detect_corners_excluding(image, params, &[])
}

/// Like [`detect_corners`], but also keeps `min_distance` from `existing`.
/// The result holds only the new corners.
pub fn detect_corners_excluding(image: &GrayImage, params: &CornerParams, existing: &[Pixel<f64>]) -> Vec<Pixel<f64>> {
    let (w, h) = (image.width, image.height);
    if params.max_count == 0 || w <= 2 * CORNER_BORDER || h <= 2 * CORNER_BORDER {
        return Vec::new();
    }
    let resp = min_eigen_response(image);
    let max_resp = resp.data.iter().copied().fold(0.0f32, f32::max);
    if !(max_resp > 0.0) {
        return Vec::new();
    }
    let threshold = params.quality * max_resp;

    let mut candidates: Vec<(f32, usize, usize)> = Vec::new();
    for y in CORNER_BORDER..h - CORNER_BORDER {
        for x in CORNER_BORDER..w - CORNER_BORDER {
            let r = resp.get(x, y);
            if r < threshold || r <= 0.0 {
                continue;
            }
            let mut is_max = true;
            'nb: for dy in -1isize..=1 {
                for dx in -1isize..=1 {
                    if (dx != 0 || dy != 0) && resp.get_clamped(x as isize + dx, y as isize + dy) > r {
                        is_max = false;
                        break 'nb;
                    }
                }
            }
            if is_max {
                candidates.push((r, y, x));
            }
        }
    }
    // strongest first; ties resolved in raster order
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut grid = SpacingGrid::new(w, h, params.min_distance);
    for p in existing {
        grid.insert(*p);
    }
    let mut out = Vec::new();
    for (_, y, x) in candidates {
        if out.len() >= params.max_count {
            break;
        }
        let p = Pixel::new(x as f64, y as f64);
        if grid.is_free(&p) {
            grid.insert(p);
            out.push(p);
        }
    }
    out
}

/// Tops up a tracked point set with fresh corners once fewer than half of
/// `max_count` survive. New corners keep `min_distance` from survivors.
pub fn replenish_corners(survivors: Vec<Pixel<f64>>, image: &GrayImage, params: &CornerParams) -> Vec<Pixel<f64>> {
    if survivors.len() * 2 >= params.max_count {
        return survivors;
    }
    let room = params.max_count - survivors.len();
    let fresh = detect_corners_excluding(
        image,
        &CornerParams {
            max_count: room,
            ..*params
        },
        &survivors,
    );
    let mut all = survivors;
    all.extend(fresh);
    all
}

/// Bucket grid for minimum-distance queries.
struct SpacingGrid {
    cell: f64,
    min_dist: f64,
    cols: usize,
    rows: usize,
    buckets: Vec<Vec<Pixel<f64>>>,
}

impl SpacingGrid {
    fn new(w: usize, h: usize, min_distance: f32) -> Self {
        let min_dist = min_distance.max(0.0) as f64;
        let cell = min_dist.max(1.0);
        let cols = (w as f64 / cell).ceil() as usize + 1;
        let rows = (h as f64 / cell).ceil() as usize + 1;
        Self {
            cell,
            min_dist,
            cols,
            rows,
            buckets: vec![Vec::new(); cols * rows],
        }
    }

    fn cell_of(&self, p: &Pixel<f64>) -> (usize, usize) {
        let cx = ((p.u / self.cell).floor().max(0.0) as usize).min(self.cols - 1);
        let cy = ((p.v / self.cell).floor().max(0.0) as usize).min(self.rows - 1);
        (cx, cy)
    }

    fn insert(&mut self, p: Pixel<f64>) {
        let (cx, cy) = self.cell_of(&p);
        self.buckets[cy * self.cols + cx].push(p);
    }

    fn is_free(&self, p: &Pixel<f64>) -> bool {
        if self.min_dist <= 0.0 {
            return true;
        }
        let (cx, cy) = self.cell_of(p);
        for y in cy.saturating_sub(1)..=(cy + 1).min(self.rows - 1) {
            for x in cx.saturating_sub(1)..=(cx + 1).min(self.cols - 1) {
                if self.buckets[y * self.cols + x]
                    .iter()
                    .any(|q| q.distance(p) < self.min_dist)
                {
                    return false;
                }
            }
        }
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LkParams {
    /// Odd window side length in pixels.
    pub window: usize,
    pub max_iters: usize,
    /// Convergence threshold on the update step, in pixels.
    pub eps: f32,
    /// Pyramid levels, including the full-resolution one.
    pub levels: usize,
    /// Minimum eigenvalue of the normalized gradient matrix.
    pub min_eigen: f32,
}

impl Default for LkParams {
    fn default() -> Self {
        Self {
            window: 21,
            max_iters: 30,
            eps: 0.01,
            levels: 3,
            min_eigen: 1e-4,
        }
    }
}

/// Tracks `points` from `prev` into `cur`, coarse to fine.
///
/// Returns one pair per input point. A pair is `Tracked` only if the
/// iteration converged on every level and both the source and final windows
/// lie inside the full-resolution image.
pub fn track_pyr_lk(
    prev: &ImagePyramid,
    cur: &ImagePyramid,
    points: &[Pixel<f64>],
    params: &LkParams,
) -> Result<Vec<MatchedPair<f64>>> {
    if prev.dimensions() != cur.dimensions() || prev.level_count() != cur.level_count() {
        return Err(Error::Contract(format!(
            "pyramid mismatch: {:?}/{} vs {:?}/{}",
            prev.dimensions(),
            prev.level_count(),
            cur.dimensions(),
            cur.level_count()
        )));
    }
    if params.window.is_multiple_of(2) || params.window < 3 {
        return Err(Error::Config(format!(
            "LK window must be odd and >= 3, got {}",
            params.window
        )));
    }
    let mut scratch = LkScratch::new(params.window);
    Ok(points
        .iter()
        .map(|p| track_point(prev, cur, *p, params, &mut scratch))
        .collect())
}

struct LkScratch {
    ival: Vec<f32>,
    ix: Vec<f32>,
    iy: Vec<f32>,
    jval: Vec<f32>,
}

impl LkScratch {
    fn new(window: usize) -> Self {
        let n = window * window;
        Self {
            ival: vec![0.0; n],
            ix: vec![0.0; n],
            iy: vec![0.0; n],
            jval: vec![0.0; n],
        }
    }
}

const LANES: usize = 8;

/// `Σ (i - j)·ix` and `Σ (i - j)·iy`, accumulated in independent lanes so
/// the loop vectorizes.
fn mismatch(ival: &[f32], jval: &[f32], ix: &[f32], iy: &[f32]) -> (f32, f32) {
    let mut bx = [0.0f32; LANES];
    let mut by = [0.0f32; LANES];
    let n = ival.len() / LANES * LANES;
    for (((i, j), gx), gy) in ival[..n]
        .chunks_exact(LANES)
        .zip(jval[..n].chunks_exact(LANES))
        .zip(ix[..n].chunks_exact(LANES))
        .zip(iy[..n].chunks_exact(LANES))
    {
        for l in 0..LANES {
            let d = i[l] - j[l];
            bx[l] += d * gx[l];
            by[l] += d * gy[l];
        }
    }
    let (mut sx, mut sy) = (bx.iter().sum::<f32>(), by.iter().sum::<f32>());
    for k in n..ival.len() {
        let d = ival[k] - jval[k];
        sx += d * ix[k];
        sy += d * iy[k];
    }
    (sx, sy)
}

fn window_inside(img: &GrayImage, x: f32, y: f32, half: f32) -> bool {
    x - half >= 0.0 && y - half >= 0.0 && x + half <= (img.width - 1) as f32 && y + half <= (img.height - 1) as f32
}

fn track_point(
    prev: &ImagePyramid,
    cur: &ImagePyramid,
    p1: Pixel<f64>,
    params: &LkParams,
    s: &mut LkScratch,
) -> MatchedPair<f64> {
    let lost = MatchedPair {
        p1,
        p2: p1,
        status: PairStatus::Lost,
    };
    let half = (params.window / 2) as isize;
    let halff = half as f32;
    let n = (params.window * params.window) as f32;
    if !(p1.u.is_finite() && p1.v.is_finite()) || !window_inside(prev.base(), p1.u as f32, p1.v as f32, halff) {
        return lost;
    }

    let top = prev.level_count() - 1;
    let mut guess = (0.0f32, 0.0f32);
    for level in (0..=top).rev() {
        let scale = 1.0 / (1u32 << level) as f32;
        let (px, py) = (p1.u as f32 * scale, p1.v as f32 * scale);
        let img_p = &prev.levels[level];
        let gx = &prev.grad_x[level];
        let gy = &prev.grad_y[level];
        let img_c = &cur.levels[level];

        let side = params.window;
        img_p.sample_window(px - halff, py - halff, side, &mut s.ival);
        gx.sample_window(px - halff, py - halff, side, &mut s.ix);
        gy.sample_window(px - halff, py - halff, side, &mut s.iy);
        let (mut a, mut b, mut c) = (0.0f32, 0.0f32, 0.0f32);
        for (&ix, &iy) in s.ix.iter().zip(&s.iy) {
            a += ix * ix;
            b += ix * iy;
            c += iy * iy;
        }
        let det = a * c - b * b;
        let min_eig = (0.5 * (a + c) - (0.25 * (a - c) * (a - c) + b * b).sqrt()) / n;
        if !(min_eig >= params.min_eigen) || det.abs() < f32::EPSILON {
            return lost;
        }

        let (mut d_x, mut d_y) = guess;
        let mut converged = false;
        for _ in 0..params.max_iters {
            img_c.sample_window(px - halff + d_x, py - halff + d_y, side, &mut s.jval);
            let (bx, by) = mismatch(&s.ival, &s.jval, &s.ix, &s.iy);
            let step_x = (c * bx - b * by) / det;
            let step_y = (a * by - b * bx) / det;
            d_x += step_x;
            d_y += step_y;
            if !(d_x.is_finite() && d_y.is_finite()) {
                return lost;
            }
            if step_x * step_x + step_y * step_y < params.eps * params.eps {
                converged = true;
                break;
            }
        }
        if !converged {
            return lost;
        }
        guess = if level > 0 { (2.0 * d_x, 2.0 * d_y) } else { (d_x, d_y) };
    }

    let p2 = Pixel::new(p1.u + guess.0 as f64, p1.v + guess.1 as f64);
    if !window_inside(cur.base(), p2.u as f32, p2.v as f32, halff) {
        return MatchedPair {
            p1,
            p2,
            status: PairStatus::Lost,
        };
    }
    MatchedPair::tracked(p1, p2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairFilterParams {
    pub edge_margin: f64,
    /// Maximum sum of absolute differences over the two 3x3 patches.
    pub patch_diff_max: f32,
}

impl Default for PairFilterParams {
    fn default() -> Self {
        Self {
            edge_margin: 3.0,
            patch_diff_max: 1000.0,
        }
    }
}

/// Marks tracked pairs near the border or with dissimilar 3x3 patches as
/// `Filtered`. Order and count are preserved; non-tracked pairs pass through.
pub fn filter_matched_pairs(
    pairs: &[MatchedPair<f64>],
    prev: &GrayImage,
    cur: &GrayImage,
    params: &PairFilterParams,
) -> Vec<MatchedPair<f64>> {
    pairs
        .iter()
        .map(|pair| {
            if !pair.is_tracked() {
                return *pair;
            }
            let keep = away_from_border(&pair.p1, prev, params.edge_margin)
                && away_from_border(&pair.p2, cur, params.edge_margin)
                && patch_sad(prev, &pair.p1, cur, &pair.p2) <= params.patch_diff_max;
            MatchedPair {
                status: if keep {
                    PairStatus::Tracked
                } else {
                    PairStatus::Filtered
                },
                ..*pair
            }
        })
        .collect()
}

fn away_from_border(p: &Pixel<f64>, img: &GrayImage, margin: f64) -> bool {
    // a 3x3 patch needs at least one pixel of margin
    let margin = margin.max(1.0);
    p.u >= margin && p.v >= margin && p.u <= img.width as f64 - 1.0 - margin && p.v <= img.height as f64 - 1.0 - margin
}

/// Sum of absolute differences between the 3x3 patches centered on the
/// rounded positions of `a` and `b`.
pub fn patch_sad(img_a: &GrayImage, a: &Pixel<f64>, img_b: &GrayImage, b: &Pixel<f64>) -> f32 {
    let (ax, ay) = a.rounded();
    let (bx, by) = b.rounded();
    let mut sad = 0.0;
    for dy in -1..=1isize {
        for dx in -1..=1isize {
            sad += (img_a.get_clamped(ax as isize + dx, ay as isize + dy)
                - img_b.get_clamped(bx as isize + dx, by as isize + dy))
            .abs();
        }
    }
    sad
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Smooth band-limited texture built from a handful of sinusoids.
    pub(crate) fn texture(x: f32, y: f32) -> f32 {
        128.0
            + 40.0 * (0.21 * x + 0.13 * y).sin()
            + 30.0 * (0.17 * y - 0.05 * x + 1.0).cos()
            + 25.0 * (0.31 * x + 0.29 * y + 2.0).sin() * (0.11 * y).cos()
            + 15.0 * (0.43 * x - 0.37 * y).sin()
    }

    fn checkerboard(square: usize, n: usize) -> GrayImage {
        GrayImage::from_fn(square * n, square * n, |x, y| {
            if ((x / square) + (y / square)).is_multiple_of(2) {
                255.0
            } else {
                0.0
            }
        })
    }

    #[test]
    fn luma_rounding() {
        let mut rgb = RgbImage::new(2, 1);
        rgb.put_pixel(0, 0, image::Rgb([255, 0, 0]));
        rgb.put_pixel(1, 0, image::Rgb([10, 20, 30]));
        let g = GrayImage::from_rgb(&rgb);
        assert_eq!(g.data, vec![76.0, 18.0]); // 76.245, 18.11
    }

    #[test]
    fn pyramid_dimensions_halve_with_ceiling() {
        let pyr = ImagePyramid::build(GrayImage::new(101, 55), 4);
        let dims: Vec<_> = pyr.levels.iter().map(|l| (l.width, l.height)).collect();
        assert_eq!(dims, vec![(101, 55), (51, 28), (26, 14), (13, 7)]);
    }

    #[test]
    fn constant_image_has_no_corners() {
        let img = GrayImage::from_fn(64, 64, |_, _| 77.0);
        assert!(detect_corners(&img, &CornerParams::default()).is_empty());
    }

    #[test]
    fn checkerboard_corners_at_intersections() {
        let img = checkerboard(32, 8);
        let corners = detect_corners(
            &img,
            &CornerParams {
                max_count: 100,
                quality: 0.1,
                min_distance: 10.0,
            },
        );
        assert_eq!(corners.len(), 49);
        for c in &corners {
            // intersections sit between pixels 32k-1 and 32k
            let near = |t: f64| ((t + 0.5) / 32.0).round() * 32.0 - 0.5;
            assert!(
                (c.u - near(c.u)).abs() <= 1.0 && (c.v - near(c.v)).abs() <= 1.0,
                "{c:?}"
            );
        }
    }

    #[test]
    fn min_distance_suppresses_weaker_corner() {
        // Two bright squares whose corners are 2 px apart; the right one has
        // more contrast and wins.
        let img = GrayImage::from_fn(64, 64, |x, y| {
            if (20..30).contains(&x) && (20..30).contains(&y) {
                120.0
            } else if (32..42).contains(&x) && (20..30).contains(&y) {
                250.0
            } else {
                0.0
            }
        });
        let all = detect_corners(
            &img,
            &CornerParams {
                max_count: 100,
                quality: 0.05,
                min_distance: 1.0,
            },
        );
        let near_gap = |c: &Pixel<f64>| (c.u - 31.0).abs() <= 3.0 && (c.v - 20.0).abs() <= 2.0;
        let a = all.iter().filter(|c| near_gap(c)).count();
        assert!(a >= 2, "expected both corners without suppression: {all:?}");

        let spaced = detect_corners(
            &img,
            &CornerParams {
                max_count: 100,
                quality: 0.05,
                min_distance: 10.0,
            },
        );
        let kept: Vec<_> = spaced.iter().filter(|c| near_gap(c)).collect();
        assert_eq!(kept.len(), 1, "{spaced:?}");
        assert!(kept[0].u >= 31.0, "stronger corner is on the brighter square: {kept:?}");
        for (i, a) in spaced.iter().enumerate() {
            for b in &spaced[i + 1..] {
                assert!(a.distance(b) >= 10.0);
            }
        }
    }

    #[test]
    fn detection_is_deterministic_and_respects_border() {
        let img = GrayImage::from_fn(120, 90, |x, y| texture(x as f32, y as f32));
        let p = CornerParams {
            max_count: 80,
            quality: 0.01,
            min_distance: 5.0,
        };
        let a = detect_corners(&img, &p);
        assert_eq!(a, detect_corners(&img, &p));
        assert!(!a.is_empty() && a.len() <= 80);
        for c in &a {
            assert!(c.u >= 3.0 && c.v >= 3.0 && c.u <= 116.0 && c.v <= 86.0);
        }
    }

    #[test]
    fn replenish_only_below_half() {
        let img = GrayImage::from_fn(120, 90, |x, y| texture(x as f32, y as f32));
        let p = CornerParams {
            max_count: 40,
            quality: 0.01,
            min_distance: 8.0,
        };
        let many: Vec<_> = (0..20).map(|i| Pixel::new(10.0 + i as f64, 50.0)).collect();
        assert_eq!(replenish_corners(many.clone(), &img, &p), many);
        let few = vec![Pixel::new(60.0, 45.0)];
        let topped = replenish_corners(few.clone(), &img, &p);
        assert!(topped.len() > 1 && topped.len() <= 40);
        assert_eq!(topped[0], few[0]);
        for q in &topped[1..] {
            assert!(q.distance(&few[0]) >= 8.0);
        }
    }

    fn shifted_pair(w: usize, h: usize, sx: f32, sy: f32) -> (ImagePyramid, ImagePyramid) {
        let a = GrayImage::from_fn(w, h, |x, y| texture(x as f32, y as f32));
        let b = GrayImage::from_fn(w, h, |x, y| texture(x as f32 - sx, y as f32 - sy));
        (ImagePyramid::build(a, 3), ImagePyramid::build(b, 3))
    }

    #[test]
    fn zero_motion_tracks_in_place() {
        let (a, _) = shifted_pair(160, 120, 0.0, 0.0);
        let pts: Vec<_> = (0..5).map(|i| Pixel::new(40.0 + 15.0 * i as f64, 60.0)).collect();
        let pairs = track_pyr_lk(&a, &a, &pts, &LkParams::default()).unwrap();
        for p in &pairs {
            assert!(p.is_tracked());
            assert!(p.p1.distance(&p.p2) < 0.05);
        }
    }

    #[test]
    fn integer_shift_recovered() {
        let (a, b) = shifted_pair(200, 160, 5.0, 3.0);
        let pts: Vec<_> = (0..4)
            .flat_map(|i| (0..3).map(move |j| Pixel::new(50.0 + 30.0 * i as f64, 50.0 + 25.0 * j as f64)))
            .collect();
        let pairs = track_pyr_lk(&a, &b, &pts, &LkParams::default()).unwrap();
        for p in &pairs {
            assert!(p.is_tracked(), "{p:?}");
            assert!(
                (p.p2.u - p.p1.u - 5.0).abs() < 0.1 && (p.p2.v - p.p1.v - 3.0).abs() < 0.1,
                "{p:?}"
            );
        }
    }

    #[test]
    fn point_near_border_is_lost() {
        let (a, b) = shifted_pair(160, 120, 0.0, 0.0);
        let pairs = track_pyr_lk(&a, &b, &[Pixel::new(157.0, 60.0)], &LkParams::default()).unwrap();
        assert_eq!(pairs[0].status, PairStatus::Lost);
    }

    #[test]
    fn pyramid_mismatch_is_an_error() {
        let a = ImagePyramid::build(GrayImage::new(40, 40), 3);
        let b = ImagePyramid::build(GrayImage::new(41, 40), 3);
        assert!(matches!(
            track_pyr_lk(&a, &b, &[], &LkParams::default()),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn filter_border_and_patch_rules() {
        let img = GrayImage::from_fn(40, 40, |x, y| texture(x as f32, y as f32));
        let params = PairFilterParams::default();
        let border = MatchedPair::tracked(Pixel::new(20.0, 20.0), Pixel::new(1.0, 1.0));
        let inner = MatchedPair::tracked(Pixel::new(20.0, 20.0), Pixel::new(20.0, 20.0));
        let out = filter_matched_pairs(&[border, inner], &img, &img, &params);
        assert_eq!(out[0].status, PairStatus::Filtered);
        assert_eq!(out[1].status, PairStatus::Tracked);

        // binary patch vs its inverse: SAD = 9 * 255 = 2295
        let a = GrayImage::from_fn(20, 20, |x, _| if x < 10 { 255.0 } else { 0.0 });
        let b = GrayImage::from_fn(20, 20, |x, _| if x < 10 { 0.0 } else { 255.0 });
        let pair = MatchedPair::tracked(Pixel::new(5.0, 10.0), Pixel::new(5.0, 10.0));
        assert_eq!(patch_sad(&a, &pair.p1, &b, &pair.p2), 2295.0);
        let out = filter_matched_pairs(
            &[pair],
            &a,
            &b,
            &PairFilterParams {
                edge_margin: 3.0,
                patch_diff_max: 500.0,
            },
        );
        assert_eq!(out[0].status, PairStatus::Filtered);
    }

    #[test]
    fn filter_preserves_order_and_count() {
        let img = GrayImage::from_fn(40, 40, |x, y| texture(x as f32, y as f32));
        let pairs: Vec<_> = (0..30)
            .map(|i| MatchedPair::tracked(Pixel::new(i as f64 + 0.5, 20.0), Pixel::new(i as f64, 20.0)))
            .collect();
        let out = filter_matched_pairs(&pairs, &img, &img, &PairFilterParams::default());
        assert_eq!(out.len(), pairs.len());
        for (a, b) in pairs.iter().zip(&out) {
            assert_eq!((a.p1, a.p2), (b.p1, b.p2));
        }
    }
}
