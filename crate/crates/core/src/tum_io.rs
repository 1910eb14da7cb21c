//! Reading and writing TUM RGB-D style datasets.
//!
//! List files (`rgb.txt`, `depth.txt`) hold `timestamp filename` lines,
//! trajectories hold `timestamp tx ty tz qx qy qz qw` lines, and `#` starts a
//! comment line. Depth images are 16-bit single channel PNGs where 0 means
//! "no measurement".

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use image::{ImageBuffer, Luma, RgbImage};
use nalgebra::{Isometry3, Point3, Quaternion, Translation3, UnitQuaternion, Vector3};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::segmentation::LabelMask;

/// TUM convention: 5000 raw units per meter.
pub const DEFAULT_DEPTH_SCALE: f64 = 5000.0;
/// Default maximum timestamp difference when associating streams.
pub const DEFAULT_MAX_DIFF: f64 = 0.02;

/// Seconds since epoch as recorded in dataset files.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Timestamp(pub f64);

impl Timestamp {
    pub fn seconds(self) -> f64 {
        self.0
    }
}

impl std::fmt::Display for Timestamp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.6}", self.0)
    }
}

/// Rigid transform with a unit quaternion rotation.
///
/// A camera pose maps camera coordinates into world coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseSE3<T: Real> {
    pub translation: Vector3<T>,
    pub rotation: UnitQuaternion<T>,
}

impl<T: Real> PoseSE3<T> {
    pub fn identity() -> Self {
        Self {
            translation: Vector3::zeros(),
            rotation: UnitQuaternion::identity(),
        }
    }

    pub fn new(translation: Vector3<T>, rotation: UnitQuaternion<T>) -> Self {
        Self {
            translation,
            rotation: renormalize(rotation),
        }
    }

    /// Builds a pose from TUM field order `(qx, qy, qz, qw)`, normalizing the
    /// quaternion. Fails on a zero or non-finite quaternion.
    pub fn from_tum(t: [T; 3], q: [T; 4]) -> Result<Self> {
        let quat = Quaternion::new(q[3], q[0], q[1], q[2]);
        let norm = quat.norm();
        if !(norm > T::zero()) || !norm.is_finite() {
            return Err(Error::Domain(format!(
                "quaternion norm {} is not usable",
                norm.to_f64_lossy()
            )));
        }
        Ok(Self {
            translation: Vector3::new(t[0], t[1], t[2]),
            rotation: UnitQuaternion::new_normalize(quat),
        })
    }

    pub fn from_isometry(iso: &Isometry3<T>) -> Self {
        Self::new(iso.translation.vector, iso.rotation)
    }

    pub fn to_isometry(&self) -> Isometry3<T> {
        Isometry3::from_parts(Translation3::from(self.translation), self.rotation)
    }

    /// `(qx, qy, qz, qw)`
    pub fn quaternion_tum(&self) -> [T; 4] {
        let q = self.rotation.quaternion();
        [q.i, q.j, q.k, q.w]
    }

    /// `self ∘ other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &Self) -> Self {
        Self::new(
            self.rotation * other.translation + self.translation,
            self.rotation * other.rotation,
        )
    }

    pub fn inverse(&self) -> Self {
        let inv = self.rotation.inverse();
        Self::new(-(inv * self.translation), inv)
    }

    pub fn transform_point(&self, p: &Point3<T>) -> Point3<T> {
        self.rotation * p + self.translation
    }

    /// Rotation angle in radians, in `[0, π]`.
    pub fn rotation_angle(&self) -> T {
        self.rotation.angle()
    }
}

impl<T: Real> Default for PoseSE3<T> {
    fn default() -> Self {
        Self::identity()
    }
}

fn renormalize<T: Real>(q: UnitQuaternion<T>) -> UnitQuaternion<T> {
    UnitQuaternion::new_normalize(q.into_inner())
}

/// Timestamped poses with strictly increasing timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T: Real> {
    entries: Vec<(Timestamp, PoseSE3<T>)>,
}

impl<T: Real> Default for Trajectory<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> Trajectory<T> {
    pub fn new() -> Self {
        Self { entries: Vec::new() }
    }

    pub fn from_entries(entries: Vec<(Timestamp, PoseSE3<T>)>) -> Result<Self> {
        let mut traj = Self::new();
        for (t, p) in entries {
            traj.push(t, p)?;
        }
        Ok(traj)
    }

    pub fn push(&mut self, t: Timestamp, pose: PoseSE3<T>) -> Result<()> {
        if let Some((prev, _)) = self.entries.last() {
            if t.0 <= prev.0 {
                return Err(Error::Ordering {
                    prev: prev.0,
                    next: t.0,
                });
            }
        }
        self.entries.push((t, pose));
        Ok(())
    }

    pub fn entries(&self) -> &[(Timestamp, PoseSE3<T>)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn last(&self) -> Option<&(Timestamp, PoseSE3<T>)> {
        self.entries.last()
    }

    pub fn timestamps(&self) -> Vec<Timestamp> {
        self.entries.iter().map(|(t, _)| *t).collect()
    }

    /// Applies `f` to every pose, keeping timestamps.
    pub fn map_poses(&self, f: impl Fn(&PoseSE3<T>) -> PoseSE3<T>) -> Self {
        Self {
            entries: self.entries.iter().map(|(t, p)| (*t, f(p))).collect(),
        }
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let line = line.trim();
        (!line.is_empty() && !line.starts_with('#')).then_some((i + 1, line))
    })
}

/// Parses a TUM trajectory file (`timestamp tx ty tz qx qy qz qw`).
pub fn parse_trajectory_file(path: impl AsRef<Path>) -> Result<Trajectory<f64>> {
    let path = path.as_ref();
    parse_trajectory_str(&read_text(path)?, path)
}

pub fn parse_trajectory_str(text: &str, origin: &Path) -> Result<Trajectory<f64>> {
    let mut traj = Trajectory::new();
    for (lineno, line) in data_lines(text) {
        let parse_err = |msg: String| Error::Parse {
            path: origin.to_path_buf(),
            line: lineno,
            msg,
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 8 {
            return Err(parse_err(format!("expected 8 fields, found {}", fields.len())));
        }
        let mut vals = [0.0f64; 8];
        for (v, f) in vals.iter_mut().zip(&fields) {
            *v = f
                .parse::<f64>()
                .map_err(|_| parse_err(format!("not a number: {f:?}")))?;
            if !v.is_finite() {
                return Err(parse_err(format!("non-finite value: {f:?}")));
            }
        }
        if vals[0] < 0.0 {
            return Err(parse_err("negative timestamp".into()));
        }
        let pose = PoseSE3::from_tum([vals[1], vals[2], vals[3]], [vals[4], vals[5], vals[6], vals[7]])
            .map_err(|e| parse_err(e.to_string()))?;
        traj.push(Timestamp(vals[0]), pose)?;
    }
    Ok(traj)
}

/// Formats a trajectory with 6 decimals for timestamps and 7 for pose fields.
pub fn format_trajectory<T: Real>(traj: &Trajectory<T>) -> String {
    let mut out = String::with_capacity(traj.len() * 80);
    for (t, pose) in traj.entries() {
        let tr = pose.translation;
        let q = pose.quaternion_tum();
        let _ = writeln!(
            out,
            "{:.6} {:.7} {:.7} {:.7} {:.7} {:.7} {:.7} {:.7}",
            t.0,
            tr.x.to_f64_lossy(),
            tr.y.to_f64_lossy(),
            tr.z.to_f64_lossy(),
            q[0].to_f64_lossy(),
            q[1].to_f64_lossy(),
            q[2].to_f64_lossy(),
            q[3].to_f64_lossy()
        );
    }
    out
}

pub fn write_trajectory<T: Real>(traj: &Trajectory<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_trajectory(traj)).map_err(|e| Error::io(path, e))
}

/// One `timestamp filename` entry of `rgb.txt` / `depth.txt`.
#[derive(Debug, Clone, PartialEq)]
pub struct ListEntry {
    pub timestamp: Timestamp,
    pub file: String,
}

pub fn parse_image_list(path: impl AsRef<Path>) -> Result<Vec<ListEntry>> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let mut out: Vec<ListEntry> = Vec::new();
    for (lineno, line) in data_lines(&text) {
        let parse_err = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line: lineno,
            msg,
        };
        let mut it = line.split_whitespace();
        let (Some(ts), Some(file), None) = (it.next(), it.next(), it.next()) else {
            return Err(parse_err("expected \"timestamp filename\"".into()));
        };
        let ts: f64 = ts.parse().map_err(|_| parse_err(format!("not a number: {ts:?}")))?;
        if !(ts >= 0.0) {
            return Err(parse_err("negative timestamp".into()));
        }
        if let Some(prev) = out.last() {
            if ts < prev.timestamp.0 {
                return Err(Error::Ordering {
                    prev: prev.timestamp.0,
                    next: ts,
                });
            }
        }
        out.push(ListEntry {
            timestamp: Timestamp(ts),
            file: file.to_string(),
        });
    }
    Ok(out)
}

pub fn format_image_list(entries: &[ListEntry], header: &str) -> String {
    let mut out = String::new();
    for line in header.lines() {
        let _ = writeln!(out, "# {line}");
    }
    for e in entries {
        let _ = writeln!(out, "{:.6} {}", e.timestamp.0, e.file);
    }
    out
}

/// Greedy one-to-one association by nearest timestamp.
///
/// Candidate pairs with `|Δt| <= max_diff` are taken in order of increasing
/// `|Δt|`, skipping elements already used. Returns index pairs `(ia, ib)`
/// sorted by `ia`. Both inputs must be sorted by timestamp.
pub fn associate_streams(a: &[Timestamp], b: &[Timestamp], max_diff: f64) -> Vec<(usize, usize)> {
    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    let mut lo = 0usize;
    for (ia, ta) in a.iter().enumerate() {
        while lo < b.len() && b[lo].0 < ta.0 - max_diff {
            lo += 1;
        }
        let mut ib = lo;
        while ib < b.len() && b[ib].0 <= ta.0 + max_diff {
            let d = (ta.0 - b[ib].0).abs();
            if d <= max_diff {
                candidates.push((d, ia, ib));
            }
            ib += 1;
        }
    }
    candidates.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut used_a = vec![false; a.len()];
    let mut used_b = vec![false; b.len()];
    let mut pairs = Vec::new();
    for (_, ia, ib) in candidates {
        if !used_a[ia] && !used_b[ib] {
            used_a[ia] = true;
            used_b[ib] = true;
            pairs.push((ia, ib));
        }
    }
    pairs.sort_unstable();
    pairs
}

/// Raw 16-bit depth image. A raw value of 0 marks a missing measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    pub width: u32,
    pub height: u32,
    pub raw: Vec<u16>,
    /// Raw units per meter.
    pub depth_scale: f64,
}

impl DepthImage {
    pub fn new(width: u32, height: u32, raw: Vec<u16>, depth_scale: f64) -> Result<Self> {
        if raw.len() != (width as usize) * (height as usize) {
            return Err(Error::Contract(format!(
                "depth buffer has {} values for {width}x{height}",
                raw.len()
            )));
        }
        if !(depth_scale > 0.0) {
            return Err(Error::Config(format!("depth_scale must be > 0, got {depth_scale}")));
        }
        Ok(Self {
            width,
            height,
            raw,
            depth_scale,
        })
    }

    pub fn zeros(width: u32, height: u32, depth_scale: f64) -> Self {
        Self {
            width,
            height,
            raw: vec![0; width as usize * height as usize],
            depth_scale,
        }
    }

    #[inline]
    pub fn raw_at(&self, x: u32, y: u32) -> u16 {
        self.raw[y as usize * self.width as usize + x as usize]
    }

    /// Depth in meters, `None` where no measurement exists.
    #[inline]
    pub fn meters_at(&self, x: u32, y: u32) -> Option<f64> {
        raw_to_meters(self.raw_at(x, y), self.depth_scale)
    }

    /// Depth at a sub-pixel location.
    ///
    /// Inverse depth is interpolated bilinearly when all four neighbours are
    /// valid and agree within `max_rel_jump`; this is exact for planar
    /// surfaces. Otherwise the nearest pixel is used.
    pub fn meters_interpolated(&self, u: f64, v: f64, max_rel_jump: f64) -> Option<f64> {
        if !(u >= 0.0 && v >= 0.0) || u > (self.width - 1) as f64 || v > (self.height - 1) as f64 {
            return None;
        }
        let x0 = (u.floor() as u32).min(self.width.saturating_sub(2));
        let y0 = (v.floor() as u32).min(self.height.saturating_sub(2));
        let nearest = || self.meters_at(u.round() as u32, v.round() as u32);
        if self.width < 2 || self.height < 2 {
            return nearest();
        }
        let d = [
            self.meters_at(x0, y0),
            self.meters_at(x0 + 1, y0),
            self.meters_at(x0, y0 + 1),
            self.meters_at(x0 + 1, y0 + 1),
        ];
        let [Some(d00), Some(d10), Some(d01), Some(d11)] = d else {
            return nearest();
        };
        let lo = d00.min(d10).min(d01).min(d11);
        let hi = d00.max(d10).max(d01).max(d11);
        if hi - lo > max_rel_jump * lo {
            return nearest();
        }
        let fx = u - x0 as f64;
        let fy = v - y0 as f64;
        let inv = (1.0 - fx) * (1.0 - fy) / d00 + fx * (1.0 - fy) / d10 + (1.0 - fx) * fy / d01 + fx * fy / d11;
        Some(1.0 / inv)
    }
}

#[inline]
pub fn raw_to_meters(raw: u16, depth_scale: f64) -> Option<f64> {
    (raw != 0).then(|| raw as f64 / depth_scale)
}

/// Loads a 16-bit single channel depth PNG, keeping raw values.
pub fn load_depth(path: impl AsRef<Path>, depth_scale: f64) -> Result<DepthImage> {
    let path = path.as_ref();
    let img = image::ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?
        .decode()
        .map_err(|e| Error::image(path, e))?;
    match img {
        image::DynamicImage::ImageLuma16(buf) => {
            let (w, h) = buf.dimensions();
            DepthImage::new(w, h, buf.into_raw(), depth_scale)
        }
        other => Err(Error::Format(format!(
            "{}: expected 16-bit single channel depth, found {:?}",
            path.display(),
            other.color()
        ))),
    }
}

pub fn save_depth(depth: &DepthImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let buf: ImageBuffer<Luma<u16>, Vec<u16>> = ImageBuffer::from_raw(depth.width, depth.height, depth.raw.clone())
        .ok_or_else(|| Error::Contract("depth buffer size".into()))?;
    buf.save(path).map_err(|e| Error::image(path, e))
}

pub fn load_rgb(path: impl AsRef<Path>) -> Result<RgbImage> {
    let path = path.as_ref();
    let img = image::open(path).map_err(|e| Error::image(path, e))?;
    Ok(img.to_rgb8())
}

/// Timestamped RGB-D frame, optionally joined with a label mask.
#[derive(Debug, Clone)]
pub struct Frame {
    pub timestamp: Timestamp,
    pub rgb: RgbImage,
    pub depth: DepthImage,
    pub mask: Option<LabelMask>,
}

impl Frame {
    pub fn new(timestamp: Timestamp, rgb: RgbImage, depth: DepthImage) -> Result<Self> {
        if rgb.dimensions() != (depth.width, depth.height) {
            return Err(Error::DimensionMismatch {
                expected: rgb.dimensions(),
                got: (depth.width, depth.height),
            });
        }
        Ok(Self {
            timestamp,
            rgb,
            depth,
            mask: None,
        })
    }

    pub fn dimensions(&self) -> (u32, u32) {
        self.rgb.dimensions()
    }
}

/// One associated rgb/depth record of a dataset directory.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecord {
    pub timestamp: Timestamp,
    pub rgb_file: String,
    pub depth_file: String,
}

/// A TUM-layout dataset directory with its rgb and depth streams associated.
#[derive(Debug, Clone)]
pub struct TumDataset {
    pub root: PathBuf,
    pub records: Vec<FrameRecord>,
    pub depth_scale: f64,
}

impl TumDataset {
    pub fn open(root: impl AsRef<Path>, depth_scale: f64, max_diff: f64) -> Result<Self> {
        let root = root.as_ref().to_path_buf();
        let rgb = parse_image_list(root.join("rgb.txt"))?;
        let depth = parse_image_list(root.join("depth.txt"))?;
        let ta: Vec<Timestamp> = rgb.iter().map(|e| e.timestamp).collect();
        let tb: Vec<Timestamp> = depth.iter().map(|e| e.timestamp).collect();
        let records = associate_streams(&ta, &tb, max_diff)
            .into_iter()
            .map(|(ia, ib)| FrameRecord {
                timestamp: rgb[ia].timestamp,
                rgb_file: rgb[ia].file.clone(),
                depth_file: depth[ib].file.clone(),
            })
            .collect();
        Ok(Self {
            root,
            records,
            depth_scale,
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn load_frame(&self, index: usize) -> Result<Frame> {
        let rec = &self.records[index];
        let rgb = load_rgb(self.root.join(&rec.rgb_file))?;
        let depth = load_depth(self.root.join(&rec.depth_file), self.depth_scale)?;
        Frame::new(rec.timestamp, rgb, depth)
    }

    pub fn groundtruth(&self) -> Result<Option<Trajectory<f64>>> {
        let path = self.root.join("groundtruth.txt");
        if path.exists() {
            parse_trajectory_file(path).map(Some)
        } else {
            Ok(None)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse(text: &str) -> Result<Trajectory<f64>> {
        parse_trajectory_str(text, Path::new("mem"))
    }

    #[test]
    fn single_identity_line() {
        let t = parse("0.0 0 0 0 0 0 0 1\n").unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.entries()[0].1, PoseSE3::identity());
    }

    #[test]
    fn comments_and_blank_lines_skipped() {
        let t = parse("# comment\n\n1.0 1 2 3 0 0 0 1\n2.0 1 2 3 0 0 0 1\n").unwrap();
        assert_eq!(t.len(), 2);
    }

    #[test]
    fn quaternion_is_normalized() {
        let t = parse("1.0 0 0 0 0 0 0 2").unwrap();
        assert_eq!(t.entries()[0].1.quaternion_tum(), [0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn malformed_lines_cite_line_number() {
        match parse("# c\n1.0 0 0 0 0 0 1\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        match parse("1.0 0 0 x 0 0 0 1\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn non_monotonic_timestamps_rejected() {
        assert!(matches!(
            parse("2.0 0 0 0 0 0 0 1\n1.0 0 0 0 0 0 0 1\n"),
            Err(Error::Ordering { .. })
        ));
    }

    #[test]
    fn association_examples() {
        let ts = |v: &[f64]| v.iter().map(|&x| Timestamp(x)).collect::<Vec<_>>();
        assert_eq!(associate_streams(&ts(&[1.0, 2.0]), &ts(&[1.0, 2.0]), 0.02).len(), 2);
        assert_eq!(associate_streams(&ts(&[1.00]), &ts(&[1.01]), 0.02).len(), 1);
        assert!(associate_streams(&ts(&[1.00]), &ts(&[1.05]), 0.02).is_empty());
    }

    #[test]
    fn association_prefers_nearest() {
        let a = [Timestamp(1.0), Timestamp(1.03)];
        let b = [Timestamp(1.015), Timestamp(1.031)];
        assert_eq!(associate_streams(&a, &b, 0.02), vec![(0, 0), (1, 1)]);
    }

    #[test]
    fn depth_conversion() {
        assert_eq!(raw_to_meters(5000, 5000.0), Some(1.0));
        assert_eq!(raw_to_meters(0, 5000.0), None);
    }

    #[test]
    fn depth_png_roundtrip_and_format_check() {
        let dir = tempfile::tempdir().unwrap();
        let d = DepthImage::new(3, 2, vec![0, 5000, 10000, 1, 2, 65535], 5000.0).unwrap();
        let p = dir.path().join("d.png");
        save_depth(&d, &p).unwrap();
        let back = load_depth(&p, 5000.0).unwrap();
        assert_eq!(back, d);
        assert_eq!(back.meters_at(1, 0), Some(1.0));
        assert_eq!(back.meters_at(0, 0), None);

        let p8 = dir.path().join("g.png");
        image::GrayImage::new(4, 4).save(&p8).unwrap();
        assert!(matches!(load_depth(&p8, 5000.0), Err(Error::Format(_))));
    }

    #[test]
    fn interpolated_depth_is_exact_on_planes() {
        // 1/z affine in pixel coordinates, as for a plane seen by a pinhole.
        let (w, h) = (8u32, 8u32);
        let inv = |u: f64, v: f64| 0.3 + 0.01 * u + 0.02 * v;
        let raw: Vec<u16> = (0..h)
            .flat_map(|y| (0..w).map(move |x| (5000.0 / inv(x as f64, y as f64)).round() as u16))
            .collect();
        let d = DepthImage::new(w, h, raw, 5000.0).unwrap();
        let z = d.meters_interpolated(3.25, 4.5, 0.1).unwrap();
        assert!((z - 1.0 / inv(3.25, 4.5)).abs() < 1e-3);
    }

    #[test]
    fn frame_dimensions_checked() {
        let rgb = RgbImage::new(4, 3);
        assert!(Frame::new(Timestamp(0.0), rgb.clone(), DepthImage::zeros(4, 3, 5000.0)).is_ok());
        assert!(Frame::new(Timestamp(0.0), rgb, DepthImage::zeros(3, 3, 5000.0)).is_err());
    }

    fn arb_pose() -> impl Strategy<Value = PoseSE3<f64>> {
        (
            prop::array::uniform3(-10.0f64..10.0),
            prop::array::uniform4(-1.0f64..1.0),
        )
            .prop_filter_map("zero quaternion", |(t, q)| PoseSE3::from_tum(t, q).ok())
    }

    proptest! {
        #[test]
        fn trajectory_roundtrip(poses in prop::collection::vec(arb_pose(), 1..20), t0 in 0.0f64..1e9) {
            let traj = Trajectory::from_entries(
                poses.into_iter().enumerate().map(|(i, p)| (Timestamp(t0 + i as f64 * 0.5), p)).collect()
            ).unwrap();
            let back = parse(&format_trajectory(&traj)).unwrap();
            prop_assert_eq!(back.len(), traj.len());
            for ((ta, pa), (tb, pb)) in traj.entries().iter().zip(back.entries()) {
                prop_assert!((ta.0 - tb.0).abs() < 1e-6);
                prop_assert!((pa.translation - pb.translation).norm() < 1e-6);
                // q and -q are the same rotation
                prop_assert!(pa.rotation.angle_to(&pb.rotation) < 1e-6);
            }
        }

        #[test]
        fn association_symmetric_and_bounded(
            mut a in prop::collection::vec(0.0f64..10.0, 0..40),
            mut b in prop::collection::vec(0.0f64..10.0, 0..40),
            max_diff in 0.001f64..0.5,
        ) {
            a.sort_by(f64::total_cmp);
            b.sort_by(f64::total_cmp);
            let ta: Vec<_> = a.iter().map(|&x| Timestamp(x)).collect();
            let tb: Vec<_> = b.iter().map(|&x| Timestamp(x)).collect();
            let ab = associate_streams(&ta, &tb, max_diff);
            let ba = associate_streams(&tb, &ta, max_diff);
            prop_assert_eq!(ab.len(), ba.len());
            for &(i, j) in &ab {
                prop_assert!((a[i] - b[j]).abs() <= max_diff);
            }
            let mut used: Vec<usize> = ab.iter().map(|p| p.1).collect();
            used.sort_unstable();
            used.dedup();
            prop_assert_eq!(used.len(), ab.len());
        }
    }
}
