//! Fundamental matrix estimation and the epipolar moving-consistency check.
//!
//! A tracked point that belongs to the rigid scene must land on the epipolar
//! line of its previous position. Points whose distance to that line exceeds
//! a threshold are reported as dynamic.

use nalgebra::{DMatrix, Matrix3, Vector3};
use rand::seq::index::sample;
use rand::Rng;

use crate::error::{Error, Result};
use crate::features::{
    filter_matched_pairs, track_pyr_lk, ImagePyramid, LkParams, MatchedPair, PairFilterParams, Pixel,
};
use crate::scalar::Real;

/// Conditioning ratio (8th / 1st singular value of the normalized design
/// matrix) below which the fit is reported as near-degenerate.
const CONDITIONING_WARN: f64 = 1e-6;

/// 3x3 fundamental matrix with `P2ᵀ F P1 = 0` for corresponding points.
///
/// Estimated matrices have rank 2 and unit Frobenius norm. Matrices built via
/// [`FundamentalMatrix::from_matrix`] are used as given.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FundamentalMatrix<T: Real> {
    pub m: Matrix3<T>,
}

impl<T: Real> FundamentalMatrix<T> {
    pub fn from_matrix(m: Matrix3<T>) -> Self {
        Self { m }
    }

    /// Projects `m` onto the rank-2 matrices, scales it to unit Frobenius
    /// norm and makes its largest-magnitude entry positive.
    pub fn rank2_normalized(m: Matrix3<T>) -> Result<Self> {
        let svd = m.svd(true, true);
        let (u, v_t) = match (svd.u, svd.v_t) {
            (Some(u), Some(v_t)) => (u, v_t),
            _ => return Err(Error::Degenerate("SVD of fundamental matrix failed".into())),
        };
        let mut s = svd.singular_values;
        let imin = s.imin();
        s[imin] = T::zero();
        Self::unit_scaled(u * Matrix3::from_diagonal(&s) * v_t)
    }

    /// Scales `m` to unit Frobenius norm with its largest-magnitude entry
    /// positive. Rank is left as is.
    pub fn unit_scaled(m: Matrix3<T>) -> Result<Self> {
        let norm = m.norm();
        if !(norm > T::zero()) {
            return Err(Error::Degenerate("fundamental matrix is zero".into()));
        }
        let mut out = m / norm;
        let imax = out.iamax_full();
        if out[imax] < T::zero() {
            out = -out;
        }
        Ok(Self { m: out })
    }

    /// `P2ᵀ F P1`
    pub fn residual(&self, p1: &Pixel<T>, p2: &Pixel<T>) -> T {
        p2.homogeneous().dot(&(self.m * p1.homogeneous()))
    }
}

/// Homogeneous line `x·u + y·v + z = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpipolarLine<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> EpipolarLine<T> {
    pub fn normal_norm(&self) -> T {
        (self.x * self.x + self.y * self.y).sqrt()
    }

    pub fn is_degenerate(&self) -> bool {
        self.x == T::zero() && self.y == T::zero()
    }
}

/// `l1 = F · [u1, v1, 1]`
pub fn epipolar_line<T: Real>(f: &FundamentalMatrix<T>, p1: &Pixel<T>) -> EpipolarLine<T> {
    let l: Vector3<T> = f.m * p1.homogeneous();
    EpipolarLine { x: l.x, y: l.y, z: l.z }
}

/// Distance in pixels from `p2` to the epipolar line of `p1`:
/// `|P2ᵀ F P1| / sqrt(X² + Y²)`.
pub fn epipolar_distance<T: Real>(f: &FundamentalMatrix<T>, p1: &Pixel<T>, p2: &Pixel<T>) -> Result<T> {
    let line = epipolar_line(f, p1);
    let denom = line.normal_norm();
    if !(denom > T::zero()) {
        return Err(Error::Degenerate(format!(
            "epipolar line of ({}, {}) has zero normal",
            p1.u.to_f64_lossy(),
            p1.v.to_f64_lossy()
        )));
    }
    let num = (line.x * p2.u + line.y * p2.v + line.z).abs();
    Ok(num / denom)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionCheckConfig<T> {
    /// Distance above which a tracked point is dynamic, in pixels.
    pub epsilon: T,
    /// Inlier distance for fundamental matrix RANSAC, in pixels.
    pub ransac_threshold: T,
    pub ransac_max_iters: usize,
    pub ransac_confidence: T,
}

impl<T: Real> Default for MotionCheckConfig<T> {
    fn default() -> Self {
        Self {
            epsilon: T::lit(1.0),
            ransac_threshold: T::lit(0.5),
            ransac_max_iters: 500,
            ransac_confidence: T::lit(0.99),
        }
    }
}

impl<T: Real> MotionCheckConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let ok = self.epsilon > T::zero()
            && self.ransac_threshold > T::zero()
            && self.ransac_max_iters > 0
            && self.ransac_confidence > T::zero()
            && self.ransac_confidence < T::one();
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid motion check config: {self:?}")))
        }
    }
}

/// Current-frame points flagged as dynamic, with their indices into the pair
/// list they came from.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DynamicPointSet<T> {
    pub points: Vec<Pixel<T>>,
    pub indices: Vec<usize>,
}

impl<T> DynamicPointSet<T> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Isotropic normalization: centroid to the origin, mean distance √2.
fn normalizing_transform<T: Real>(pts: impl Iterator<Item = Pixel<T>> + Clone) -> Result<Matrix3<T>> {
    let mut n = T::zero();
    let (mut cu, mut cv) = (T::zero(), T::zero());
    for p in pts.clone() {
        cu += p.u;
        cv += p.v;
        n += T::one();
    }
    cu /= n;
    cv /= n;
    let mut mean = T::zero();
    for p in pts {
        mean += ((p.u - cu).powi(2) + (p.v - cv).powi(2)).sqrt();
    }
    mean /= n;
    if !(mean > T::zero()) {
        return Err(Error::Degenerate("all points coincide".into()));
    }
    let s = T::lit(std::f64::consts::SQRT_2) / mean;
    Ok(Matrix3::new(
        s,
        T::zero(),
        -s * cu,
        T::zero(),
        s,
        -s * cv,
        T::zero(),
        T::zero(),
        T::one(),
    ))
}

/// Normalized eight-point estimate plus the conditioning ratio of the design
/// matrix (8th over 1st singular value).
pub fn eight_point_with_conditioning<T: Real>(pairs: &[MatchedPair<T>]) -> Result<(FundamentalMatrix<T>, T)> {
    if pairs.len() < 8 {
        return Err(Error::Arity {
            needed: 8,
            got: pairs.len(),
        });
    }
    let t1 = normalizing_transform(pairs.iter().map(|p| p.p1))?;
    let t2 = normalizing_transform(pairs.iter().map(|p| p.p2))?;

    // Pad to at least 9 rows so the SVD yields the full right singular basis.
    let rows = pairs.len().max(9);
    let mut a = DMatrix::<T>::zeros(rows, 9);
    for (r, pair) in pairs.iter().enumerate() {
        let x1 = t1 * pair.h1();
        let x2 = t2 * pair.h2();
        let (u1, v1) = (x1.x / x1.z, x1.y / x1.z);
        let (u2, v2) = (x2.x / x2.z, x2.y / x2.z);
        let row = [u2 * u1, u2 * v1, u2, v2 * u1, v2 * v1, v2, u1, v1, T::one()];
        for (c, v) in row.into_iter().enumerate() {
            a[(r, c)] = v;
        }
    }
    let svd = a.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Degenerate("SVD of design matrix failed".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| {
        svd.singular_values[j]
            .partial_cmp(&svd.singular_values[i])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let s_max = svd.singular_values[order[0]];
    let s8 = svd.singular_values[order[7]];
    let tol = T::default_epsilon() * T::lit(1e4) * s_max;
    if !(s_max > T::zero()) || !(s8 > tol) {
        return Err(Error::Degenerate("design matrix has rank < 8".into()));
    }
    let null = v_t.row(order[8]);
    let fn_ = Matrix3::new(
        null[0], null[1], null[2], null[3], null[4], null[5], null[6], null[7], null[8],
    );
    // rank 2 is enforced where the entries are well scaled
    let fn_ = FundamentalMatrix::rank2_normalized(fn_)?.m;
    let f = FundamentalMatrix::unit_scaled(t2.transpose() * fn_ * t1)?;
    Ok((f, s8 / s_max))
}

/// Least-squares fundamental matrix from ≥ 8 correspondences on isotropically
/// normalized coordinates, with rank 2 enforced.
pub fn eight_point_fundamental<T: Real>(pairs: &[MatchedPair<T>]) -> Result<FundamentalMatrix<T>> {
    eight_point_with_conditioning(pairs).map(|(f, _)| f)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RansacFundamental<T: Real> {
    pub fundamental: FundamentalMatrix<T>,
    pub inliers: Vec<bool>,
    pub iterations: usize,
    /// Conditioning of the final refit; tiny values indicate near-zero
    /// parallax where F is poorly determined.
    pub conditioning: T,
}

impl<T: Real> RansacFundamental<T> {
    pub fn inlier_count(&self) -> usize {
        self.inliers.iter().filter(|&&b| b).count()
    }
}

fn score<T: Real>(f: &FundamentalMatrix<T>, pairs: &[MatchedPair<T>], threshold: T) -> (usize, T) {
    let mut count = 0;
    let mut sum = T::zero();
    for p in pairs {
        if let Ok(d) = epipolar_distance(f, &p.p1, &p.p2) {
            if d < threshold {
                count += 1;
                sum += d;
            }
        }
    }
    (count, sum)
}

fn required_iterations<T: Real>(inlier_ratio: T, confidence: T, cap: usize) -> usize {
    let w8 = inlier_ratio.powi(8);
    if w8 >= T::one() {
        return 1;
    }
    if !(w8 > T::zero()) {
        return cap;
    }
    let n = (T::one() - confidence).ln() / (T::one() - w8).ln();
    let n = n.ceil().to_f64_lossy();
    if n.is_finite() && n >= 0.0 {
        (n as usize).clamp(1, cap)
    } else {
        cap
    }
}

/// RANSAC over eight-point hypotheses.
///
/// Hypotheses are scored by inlier count with ties broken by the lower sum
/// of inlier distances. The iteration budget shrinks adaptively from
/// `ransac_max_iters` as the best inlier ratio improves. The winner is refit
/// on its inliers and the flags are recomputed against the refit.
pub fn ransac_fundamental<T: Real, R: Rng + ?Sized>(
    pairs: &[MatchedPair<T>],
    cfg: &MotionCheckConfig<T>,
    rng: &mut R,
) -> Result<RansacFundamental<T>> {
    cfg.validate()?;
    let n = pairs.len();
    if n < 8 {
        return Err(Error::Arity { needed: 8, got: n });
    }
    let mut best: Option<(usize, T, FundamentalMatrix<T>)> = None;
    let mut budget = cfg.ransac_max_iters;
    let mut iterations = 0;
    let mut subset = Vec::with_capacity(8);
    while iterations < budget {
        iterations += 1;
        subset.clear();
        subset.extend(sample(rng, n, 8).into_iter().map(|i| pairs[i]));
        let Ok(f) = eight_point_fundamental(&subset) else {
            continue;
        };
        let (count, sum) = score(&f, pairs, cfg.ransac_threshold);
        let better = match &best {
            None => true,
            Some((bc, bs, _)) => count > *bc || (count == *bc && sum < *bs),
        };
        if better {
            best = Some((count, sum, f));
            let ratio = T::from_usize(count).unwrap() / T::from_usize(n).unwrap();
            budget = required_iterations(ratio, cfg.ransac_confidence, cfg.ransac_max_iters).max(iterations);
        }
    }
    let Some((count, _, hypothesis)) = best.filter(|b| b.0 >= 8) else {
        return Err(Error::EstimationFailed(format!(
            "best fundamental matrix hypothesis has fewer than 8 inliers among {n} pairs"
        )));
    };
    log::trace!("fundamental RANSAC: {count}/{n} inliers after {iterations} iterations");

    let flags_for = |f: &FundamentalMatrix<T>| -> Vec<bool> {
        pairs
            .iter()
            .map(|p| matches!(epipolar_distance(f, &p.p1, &p.p2), Ok(d) if d < cfg.ransac_threshold))
            .collect()
    };
    let hyp_flags = flags_for(&hypothesis);
    let inlier_pairs: Vec<_> = pairs
        .iter()
        .zip(&hyp_flags)
        .filter(|(_, &b)| b)
        .map(|(p, _)| *p)
        .collect();
    let (fundamental, inliers, conditioning) = match eight_point_with_conditioning(&inlier_pairs) {
        Ok((f, cond)) => {
            let flags = flags_for(&f);
            if flags.iter().filter(|&&b| b).count() >= 8 {
                (f, flags, cond)
            } else {
                (hypothesis, hyp_flags, cond)
            }
        }
        Err(_) => (hypothesis, hyp_flags, T::zero()),
    };
    if conditioning < T::lit(CONDITIONING_WARN) {
        log::warn!(
            "fundamental matrix poorly conditioned ({:.3e}); camera motion may lack parallax",
            conditioning.to_f64_lossy()
        );
    }
    Ok(RansacFundamental {
        fundamental,
        inliers,
        iterations,
        conditioning,
    })
}

/// Flags pairs whose current point lies farther than `epsilon` from its
/// epipolar line. Only `Tracked` pairs are considered; degenerate lines are
/// treated as static.
pub fn classify_dynamic<T: Real>(pairs: &[MatchedPair<T>], f: &FundamentalMatrix<T>, epsilon: T) -> DynamicPointSet<T> {
    let mut set = DynamicPointSet {
        points: Vec::new(),
        indices: Vec::new(),
    };
    for (i, p) in pairs.iter().enumerate() {
        if !p.is_tracked() {
            continue;
        }
        if let Ok(d) = epipolar_distance(f, &p.p1, &p.p2) {
            if d > epsilon {
                set.points.push(p.p2);
                set.indices.push(i);
            }
        }
    }
    set
}

/// Outcome of one moving-consistency check.
#[derive(Debug, Clone)]
pub struct DynamicCheck {
    /// One entry per input point: lost, filtered or tracked.
    pub pairs: Vec<MatchedPair<f64>>,
    pub dynamic: DynamicPointSet<f64>,
    pub fundamental: FundamentalMatrix<f64>,
    /// RANSAC inlier flags, aligned with `pairs` (false for non-tracked).
    pub inliers: Vec<bool>,
}

impl DynamicCheck {
    pub fn tracked_count(&self) -> usize {
        self.pairs.iter().filter(|p| p.is_tracked()).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TrackingParams {
    pub lk: LkParams,
    pub filter: PairFilterParams,
}

/// Tracks `prev_points` into the current frame, drops unreliable pairs, fits
/// F with RANSAC, and flags every surviving pair whose epipolar distance
/// exceeds `cfg.epsilon`.
pub fn detect_dynamic_points<R: Rng + ?Sized>(
    prev: &ImagePyramid,
    cur: &ImagePyramid,
    prev_points: &[Pixel<f64>],
    cfg: &MotionCheckConfig<f64>,
    tracking: &TrackingParams,
    rng: &mut R,
) -> Result<DynamicCheck> {
    if prev_points.len() < 8 {
        return Err(Error::Arity {
            needed: 8,
            got: prev_points.len(),
        });
    }
    let tracked = track_pyr_lk(prev, cur, prev_points, &tracking.lk)?;
    let pairs = filter_matched_pairs(&tracked, prev.base(), cur.base(), &tracking.filter);
    let survivors: Vec<usize> = (0..pairs.len()).filter(|&i| pairs[i].is_tracked()).collect();
    if survivors.len() < 8 {
        return Err(Error::EstimationFailed(format!(
            "only {} pairs survive tracking and filtering",
            survivors.len()
        )));
    }
    let subset: Vec<_> = survivors.iter().map(|&i| pairs[i]).collect();
    let fit = ransac_fundamental(&subset, cfg, rng)?;
    let mut inliers = vec![false; pairs.len()];
    for (k, &i) in survivors.iter().enumerate() {
        inliers[i] = fit.inliers[k];
    }
    let dynamic = classify_dynamic(&pairs, &fit.fundamental, cfg.epsilon);
    Ok(DynamicCheck {
        pairs,
        dynamic,
        fundamental: fit.fundamental,
        inliers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Point3, Rotation3};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn skew(t: Vector3<f64>) -> Matrix3<f64> {
        Matrix3::new(0.0, -t.z, t.y, t.z, 0.0, -t.x, -t.y, t.x, 0.0)
    }

    /// Normalized-camera correspondences (identity intrinsics) for a camera
    /// that moves by `(r, t)`: X2 = R X1 + t.
    fn synth_pairs(n: usize, r: Rotation3<f64>, t: Vector3<f64>, seed: u64) -> Vec<MatchedPair<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let x = Point3::new(
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(3.0..6.0),
                );
                let y = r * x + t;
                MatchedPair::tracked(Pixel::new(x.x / x.z, x.y / x.z), Pixel::new(y.x / y.z, y.y / y.z))
            })
            .collect()
    }

    fn same_up_to_scale(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
        let an = a / a.norm();
        let bn = b / b.norm();
        (an - bn).amax().min((an + bn).amax())
    }

    #[test]
    fn line_examples() {
        let f = FundamentalMatrix::from_matrix(Matrix3::new(0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0));
        assert_eq!(
            epipolar_line(&f, &Pixel::new(10.0, 5.0)),
            EpipolarLine {
                x: 0.0,
                y: -1.0,
                z: 5.0
            }
        );
        let g = FundamentalMatrix::from_matrix(Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0));
        assert_eq!(
            epipolar_line(&g, &Pixel::new(1.0, 0.0)),
            EpipolarLine { x: 0.0, y: 1.0, z: 0.0 }
        );
        let f2 = FundamentalMatrix::from_matrix(f.m * 2.0);
        assert_eq!(
            epipolar_line(&f2, &Pixel::new(10.0, 5.0)),
            EpipolarLine {
                x: 0.0,
                y: -2.0,
                z: 10.0
            }
        );
    }

    #[test]
    fn distance_examples() {
        let f = FundamentalMatrix::from_matrix(Matrix3::new(0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0));
        let p1 = Pixel::new(10.0, 5.0);
        assert_eq!(epipolar_distance(&f, &p1, &Pixel::new(20.0, 5.0)).unwrap(), 0.0);
        assert_eq!(epipolar_distance(&f, &p1, &Pixel::new(20.0, 8.0)).unwrap(), 3.0);
        let g = FundamentalMatrix::from_matrix(Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0));
        assert_eq!(
            epipolar_distance(&g, &Pixel::new(1.0, 0.0), &Pixel::new(0.0, 1.0)).unwrap(),
            1.0
        );
        // the epipole maps to a degenerate line
        assert!(matches!(
            epipolar_distance(&g, &Pixel::new(0.0, 0.0), &Pixel::new(0.0, 1.0)),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn eight_point_pure_x_translation() {
        let pairs = synth_pairs(20, Rotation3::identity(), Vector3::new(1.0, 0.0, 0.0), 1);
        let f = eight_point_fundamental(&pairs).unwrap();
        let expected = skew(Vector3::new(1.0, 0.0, 0.0));
        assert!(same_up_to_scale(&f.m, &expected) < 1e-6, "{}", f.m);
        for p in &pairs {
            assert!(f.residual(&p.p1, &p.p2).abs() < 1e-8);
        }
        assert!((f.m.norm() - 1.0).abs() < 1e-12);
        assert!(f.m.determinant().abs() < 1e-12);
    }

    #[test]
    fn eight_point_general_motion_f32() {
        let r = Rotation3::from_euler_angles(0.05, -0.1, 0.03);
        let pairs = synth_pairs(30, r, Vector3::new(0.3, -0.1, 0.05), 2);
        let pairs32: Vec<MatchedPair<f32>> = pairs
            .iter()
            .map(|p| {
                MatchedPair::tracked(
                    Pixel::new(p.p1.u as f32, p.p1.v as f32),
                    Pixel::new(p.p2.u as f32, p.p2.v as f32),
                )
            })
            .collect();
        let f = eight_point_fundamental(&pairs32).unwrap();
        let truth = skew(Vector3::new(0.3, -0.1, 0.05)) * r.matrix();
        let fm = f.m.map(|x| x as f64);
        assert!(same_up_to_scale(&fm, &truth) < 1e-3);
    }

    #[test]
    fn eight_point_arity_and_degeneracy() {
        let pairs = synth_pairs(7, Rotation3::identity(), Vector3::new(1.0, 0.0, 0.0), 3);
        assert!(matches!(
            eight_point_fundamental(&pairs),
            Err(Error::Arity { needed: 8, got: 7 })
        ));
        let same = vec![MatchedPair::tracked(Pixel::new(1.0, 2.0), Pixel::new(3.0, 4.0)); 10];
        assert!(matches!(eight_point_fundamental(&same), Err(Error::Degenerate(_))));
    }

    #[test]
    fn ransac_outlier_free_matches_eight_point() {
        let r = Rotation3::from_euler_angles(0.02, 0.04, -0.01);
        let pairs = synth_pairs(100, r, Vector3::new(0.2, 0.05, 0.0), 4);
        let cfg = MotionCheckConfig {
            ransac_threshold: 1e-3,
            ..Default::default()
        };
        let fit = ransac_fundamental(&pairs, &cfg, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert!(fit.inliers.iter().all(|&b| b));
        let direct = eight_point_fundamental(&pairs).unwrap();
        assert!(same_up_to_scale(&fit.fundamental.m, &direct.m) < 1e-9);
    }

    #[test]
    fn ransac_arity() {
        let pairs = synth_pairs(7, Rotation3::identity(), Vector3::new(1.0, 0.0, 0.0), 3);
        let r = ransac_fundamental(&pairs, &MotionCheckConfig::default(), &mut ChaCha8Rng::seed_from_u64(0));
        assert!(matches!(r, Err(Error::Arity { .. })));
    }

    #[test]
    fn ransac_is_reproducible_with_seed() {
        let mut pairs = synth_pairs(60, Rotation3::identity(), Vector3::new(0.5, 0.1, 0.0), 5);
        for p in pairs.iter_mut().take(10) {
            p.p2.v += 0.3;
        }
        let cfg = MotionCheckConfig {
            ransac_threshold: 1e-3,
            ..Default::default()
        };
        let a = ransac_fundamental(&pairs, &cfg, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        let b = ransac_fundamental(&pairs, &cfg, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn classify_skips_degenerate_and_untracked() {
        let g = FundamentalMatrix::from_matrix(Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0));
        let mut lost = MatchedPair::tracked(Pixel::new(1.0, 0.0), Pixel::new(0.0, 9.0));
        lost.status = crate::features::PairStatus::Lost;
        let pairs = vec![
            MatchedPair::tracked(Pixel::new(0.0, 0.0), Pixel::new(5.0, 5.0)), // epipole
            MatchedPair::tracked(Pixel::new(1.0, 0.0), Pixel::new(0.0, 9.0)), // D = 9
            MatchedPair::tracked(Pixel::new(1.0, 0.0), Pixel::new(3.0, 0.5)), // D = 0.5
            lost,
        ];
        let s = classify_dynamic(&pairs, &g, 1.0);
        assert_eq!(s.indices, vec![1]);
    }

    #[test]
    fn pure_rotation_is_reported_poorly_conditioned() {
        // all points related by a homography: the design matrix loses rank
        let r = Rotation3::from_euler_angles(0.0, 0.05, 0.0);
        let pairs = synth_pairs(40, r, Vector3::zeros(), 6);
        match eight_point_with_conditioning(&pairs) {
            Ok((_, cond)) => assert!(cond < 1e-6, "{cond}"),
            Err(Error::Degenerate(_)) => {}
            Err(e) => panic!("{e}"),
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn distance_invariant_to_positive_scaling(
                m in prop::array::uniform9(-5.0f64..5.0),
                p in prop::array::uniform4(-100.0f64..100.0),
                s in 0.01f64..100.0,
            ) {
                let f = FundamentalMatrix::from_matrix(Matrix3::from_row_slice(&m));
                let g = FundamentalMatrix::from_matrix(f.m * s);
                let (p1, p2) = (Pixel::new(p[0], p[1]), Pixel::new(p[2], p[3]));
                if let (Ok(a), Ok(b)) = (epipolar_distance(&f, &p1, &p2), epipolar_distance(&g, &p1, &p2)) {
                    prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
                }
            }

            #[test]
            fn estimates_are_rank2_unit_norm(
                seed in 0u64..1000,
                t in prop::array::uniform3(-1.0f64..1.0),
                e in prop::array::uniform3(-0.2f64..0.2),
            ) {
                let t = Vector3::from(t);
                prop_assume!(t.norm() > 0.05);
                let pairs = synth_pairs(15, Rotation3::from_euler_angles(e[0], e[1], e[2]), t, seed);
                if let Ok(f) = eight_point_fundamental(&pairs) {
                    prop_assert!((f.m.norm() - 1.0).abs() < 1e-12);
                    let sv = f.m.singular_values();
                    prop_assert!(sv.min() < 1e-12);
                }
            }
        }
    }
}
