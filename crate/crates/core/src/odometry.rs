//! Frame-to-frame pose from depth-backed correspondences.

use std::path::Path;
use std::sync::Arc;

use nalgebra::{Matrix3, Matrix6, Point3, RowVector3, UnitQuaternion, Vector3, Vector6};
use rand::seq::index::sample;
use rand::Rng;

use crate::error::{Error, Result};
use crate::features::{MatchedPair, Pixel};
use crate::kv::KeyValues;
use crate::rejection::RegionVerdict;
use crate::scalar::Real;
use crate::segmentation::LabelMask;
use crate::tum_io::{DepthImage, PoseSE3, Timestamp, Trajectory, DEFAULT_DEPTH_SCALE};

/// Pinhole intrinsics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics<T> {
    pub fx: T,
    pub fy: T,
    pub cx: T,
    pub cy: T,
}

impl<T: Real> CameraIntrinsics<T> {
    pub fn new(fx: T, fy: T, cx: T, cy: T) -> Result<Self> {
        if !(fx > T::zero() && fy > T::zero()) {
            return Err(Error::Config("focal lengths must be positive".into()));
        }
        Ok(Self { fx, fy, cx, cy })
    }

    pub fn project(&self, p: &Point3<T>) -> Pixel<T> {
        Pixel::new(self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy)
    }
}

/// Intrinsics plus the depth encoding of one dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraConfig {
    pub intrinsics: CameraIntrinsics<f64>,
    pub depth_scale: f64,
}

/// TUM freiburg3 calibration, shipped as a data file.
pub const TUM_FR3_INTRINSICS: &str = include_str!("../data/tum_fr3.intrinsics");

impl CameraConfig {
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let kv = KeyValues::parse(text, origin)?;
        let depth_scale = kv.get("depth_scale")?.unwrap_or(DEFAULT_DEPTH_SCALE);
        if !(depth_scale > 0.0) {
            return Err(Error::Config(format!("depth_scale must be > 0, got {depth_scale}")));
        }
        Ok(Self {
            intrinsics: CameraIntrinsics::new(
                kv.require("fx")?,
                kv.require("fy")?,
                kv.require("cx")?,
                kv.require("cy")?,
            )?,
            depth_scale,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let kv_text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
        Self::parse(&kv_text, path.as_ref())
    }

    pub fn tum_fr3() -> Self {
        Self::parse(TUM_FR3_INTRINSICS, Path::new("tum_fr3.intrinsics")).expect("bundled intrinsics parse")
    }

    pub fn format(&self) -> String {
        let k = &self.intrinsics;
        format!(
            "fx {}\nfy {}\ncx {}\ncy {}\ndepth_scale {}\n",
            k.fx, k.fy, k.cx, k.cy, self.depth_scale
        )
    }
}

/// Inverse pinhole projection at metric depth.
pub fn backproject<T: Real>(p: &Pixel<T>, depth_m: T, k: &CameraIntrinsics<T>) -> Result<Point3<T>> {
    if !(depth_m > T::zero()) {
        return Err(Error::Domain(format!("invalid depth {}", depth_m.to_f64_lossy())));
    }
    Ok(Point3::new(
        (p.u - k.cx) * depth_m / k.fx,
        (p.v - k.cy) * depth_m / k.fy,
        depth_m,
    ))
}

/// Least-squares rigid transform (no scale) with `dst ≈ R·src + t`.
pub fn umeyama_align<T: Real>(src: &[Point3<T>], dst: &[Point3<T>]) -> Result<PoseSE3<T>> {
    if src.len() != dst.len() {
        return Err(Error::Arity {
            needed: src.len(),
            got: dst.len(),
        });
    }
    if src.len() < 3 {
        return Err(Error::Arity {
            needed: 3,
            got: src.len(),
        });
    }
    let n = T::from_usize(src.len()).unwrap();
    let mean = |pts: &[Point3<T>]| pts.iter().fold(Vector3::zeros(), |acc, p| acc + p.coords) / n;
    let mu_s = mean(src);
    let mu_d = mean(dst);

    let mut cov = Matrix3::zeros();
    let mut spread = Matrix3::zeros();
    for (s, d) in src.iter().zip(dst) {
        let sc = s.coords - mu_s;
        cov += (d.coords - mu_d) * sc.transpose();
        spread += sc * sc.transpose();
    }
    cov /= n;
    spread /= n;

    let sv = spread.symmetric_eigenvalues();
    let mut ev: Vec<T> = sv.iter().copied().collect();
    ev.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    if !(ev[0] > T::zero()) || ev[1] <= ev[0] * T::default_epsilon().sqrt() {
        return Err(Error::Degenerate("source points are collinear".into()));
    }
    rotation_from_cross_covariance(&cov, &mu_s, &mu_d)
}

/// Same least-squares fit without the collinearity check. For collinear
/// points the rotation about the common line is arbitrary, which leaves
/// point-to-point residuals unchanged.
pub(crate) fn align_points_unchecked<T: Real>(src: &[Point3<T>], dst: &[Point3<T>]) -> Result<PoseSE3<T>> {
    if src.len() != dst.len() || src.is_empty() {
        return Err(Error::Arity {
            needed: src.len().max(1),
            got: dst.len(),
        });
    }
    let n = T::from_usize(src.len()).unwrap();
    let mean = |pts: &[Point3<T>]| pts.iter().fold(Vector3::zeros(), |acc, p| acc + p.coords) / n;
    let mu_s = mean(src);
    let mu_d = mean(dst);
    let mut cov = Matrix3::zeros();
    for (s, d) in src.iter().zip(dst) {
        cov += (d.coords - mu_d) * (s.coords - mu_s).transpose();
    }
    rotation_from_cross_covariance(&(cov / n), &mu_s, &mu_d)
}

fn rotation_from_cross_covariance<T: Real>(
    cov: &Matrix3<T>,
    mu_s: &Vector3<T>,
    mu_d: &Vector3<T>,
) -> Result<PoseSE3<T>> {
    let svd = cov.svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::Degenerate("SVD of cross-covariance failed".into())),
    };
    let mut s = Matrix3::identity();
    if u.determinant() * v_t.determinant() < T::zero() {
        // flip the axis of the smallest singular value
        let imin = svd.singular_values.imin();
        s[(imin, imin)] = -T::one();
    }
    let r = u * s * v_t;
    let t = mu_d - r * mu_s;
    let rot = nalgebra::UnitQuaternion::from_matrix(&r);
    Ok(PoseSE3::new(t, rot))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RigidFit<T: Real> {
    pub pose: PoseSE3<T>,
    pub inliers: Vec<bool>,
}

impl<T: Real> RigidFit<T> {
    pub fn inlier_count(&self) -> usize {
        self.inliers.iter().filter(|&&b| b).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidRansacParams<T> {
    pub inlier_dist_m: T,
    pub max_iters: usize,
}

impl<T: Real> Default for RigidRansacParams<T> {
    fn default() -> Self {
        Self {
            inlier_dist_m: T::lit(0.05),
            max_iters: 200,
        }
    }
}

fn rigid_score<T: Real>(pose: &PoseSE3<T>, pairs: &[(Point3<T>, Point3<T>)], thr: T) -> (usize, T) {
    let mut count = 0;
    let mut sum = T::zero();
    for (s, d) in pairs {
        let r = (d - pose.transform_point(s)).norm();
        if r < thr {
            count += 1;
            sum += r;
        }
    }
    (count, sum)
}

/// RANSAC over 3-point Umeyama fits, `dst ≈ pose · src`. The best hypothesis
/// (most inliers, then lowest residual sum) is refit on its inliers.
pub fn ransac_rigid_pose<T: Real, R: Rng + ?Sized>(
    pairs: &[(Point3<T>, Point3<T>)],
    params: &RigidRansacParams<T>,
    rng: &mut R,
) -> Result<RigidFit<T>> {
    let n = pairs.len();
    if n < 3 {
        return Err(Error::Arity { needed: 3, got: n });
    }
    let mut best: Option<(usize, T, PoseSE3<T>)> = None;
    let (mut src, mut dst) = (Vec::with_capacity(3), Vec::with_capacity(3));
    for _ in 0..params.max_iters.max(1) {
        src.clear();
        dst.clear();
        for i in sample(rng, n, 3) {
            src.push(pairs[i].0);
            dst.push(pairs[i].1);
        }
        let Ok(pose) = umeyama_align(&src, &dst) else {
            continue;
        };
        let (count, sum) = rigid_score(&pose, pairs, params.inlier_dist_m);
        let better = match &best {
            None => true,
            Some((bc, bs, _)) => count > *bc || (count == *bc && sum < *bs),
        };
        if better {
            best = Some((count, sum, pose));
            if count == n {
                break;
            }
        }
    }
    let Some((_, _, hypothesis)) = best.filter(|b| b.0 >= 3) else {
        return Err(Error::EstimationFailed(format!(
            "no rigid hypothesis with 3 inliers among {n} pairs"
        )));
    };
    let flags = |pose: &PoseSE3<T>| -> Vec<bool> {
        pairs
            .iter()
            .map(|(s, d)| (d - pose.transform_point(s)).norm() < params.inlier_dist_m)
            .collect()
    };
    let hyp_flags = flags(&hypothesis);
    let (s_in, d_in): (Vec<_>, Vec<_>) = pairs
        .iter()
        .zip(&hyp_flags)
        .filter(|(_, &b)| b)
        .map(|(p, _)| *p)
        .unzip();
    match umeyama_align(&s_in, &d_in) {
        Ok(pose) => Ok(RigidFit {
            inliers: flags(&pose),
            pose,
        }),
        Err(_) => Ok(RigidFit {
            pose: hypothesis,
            inliers: hyp_flags,
        }),
    }
}

/// One correspondence seen in both cameras: `src` in the frame moved by the
/// pose, `dst` in the target frame, each with the pixel it was measured at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation<T: Real> {
    pub src: Point3<T>,
    pub src_px: Pixel<T>,
    pub dst: Point3<T>,
    pub dst_px: Pixel<T>,
}

/// Gauss-Newton refinement of `dst ≈ pose · src` on reprojection error in
/// both images, with a Huber weight of `huber_px`.
///
/// Point-to-point fits weight the lateral error of far points by their
/// depth, so sub-pixel tracking noise on distant surfaces leaks into the
/// rotation. Pixel residuals weight every track equally.
pub fn refine_reprojection<T: Real>(
    pose: &PoseSE3<T>,
    obs: &[Observation<T>],
    k: &CameraIntrinsics<T>,
    iters: usize,
    huber_px: T,
) -> PoseSE3<T> {
    let mut pose = *pose;
    if obs.len() < 3 {
        return pose;
    }
    // d(pixel)/d(camera point)
    let proj_jac = |y: &Point3<T>| {
        let iz = T::one() / y.z;
        (
            RowVector3::new(k.fx * iz, T::zero(), -k.fx * y.x * iz * iz),
            RowVector3::new(T::zero(), k.fy * iz, -k.fy * y.y * iz * iz),
        )
    };
    let cost = |pose: &PoseSE3<T>| {
        let inv = pose.inverse();
        obs.iter().fold(T::zero(), |acc, o| {
            let a = k.project(&pose.transform_point(&o.src));
            let b = k.project(&inv.transform_point(&o.dst));
            acc + huber_cost(a.distance(&o.dst_px), huber_px) + huber_cost(b.distance(&o.src_px), huber_px)
        })
    };
    let mut current = cost(&pose);
    for _ in 0..iters {
        let r_t = pose.rotation.to_rotation_matrix().into_inner().transpose();
        let inv = pose.inverse();
        let mut h = Matrix6::<T>::zeros();
        let mut g = Vector6::<T>::zeros();
        let mut add = |y: &Point3<T>, target: &Pixel<T>, dy_dw: Matrix3<T>, dy_dv: Matrix3<T>| {
            if !(y.z > T::zero()) {
                return;
            }
            let p = k.project(y);
            let r = [p.u - target.u, p.v - target.v];
            let w = huber_weight((r[0] * r[0] + r[1] * r[1]).sqrt(), huber_px);
            let (ju, jv) = proj_jac(y);
            for (jp, ri) in [(ju, r[0]), (jv, r[1])] {
                let (a, b) = (jp * dy_dw, jp * dy_dv);
                let j = Vector6::new(a[0], a[1], a[2], b[0], b[1], b[2]);
                h += j * j.transpose() * w;
                g += j * (ri * w);
            }
        };
        for o in obs {
            // pose' = exp(ξ)·pose, ξ = (ω, v)
            let y = pose.transform_point(&o.src);
            add(&y, &o.dst_px, -y.coords.cross_matrix(), Matrix3::identity());
            let z = inv.transform_point(&o.dst);
            add(&z, &o.src_px, r_t * o.dst.coords.cross_matrix(), -r_t);
        }
        let Some(step) = h.cholesky().map(|c| c.solve(&-g)) else {
            break;
        };
        let dr = UnitQuaternion::from_scaled_axis(Vector3::new(step[0], step[1], step[2]));
        let candidate = PoseSE3::new(
            dr * pose.translation + Vector3::new(step[3], step[4], step[5]),
            dr * pose.rotation,
        );
        let next = cost(&candidate);
        if !(next <= current) {
            break;
        }
        pose = candidate;
        let done = current - next <= current * T::lit(1e-12);
        current = next;
        if done {
            break;
        }
    }
    pose
}

fn huber_weight<T: Real>(r: T, k: T) -> T {
    if r <= k {
        T::one()
    } else {
        k / r
    }
}

fn huber_cost<T: Real>(r: T, k: T) -> T {
    if r <= k {
        r * r / T::lit(2.0)
    } else {
        k * (r - k / T::lit(2.0))
    }
}

/// Relative motion of the current camera expressed in the previous camera
/// frame, from pairs whose endpoints both have valid depth.
///
/// Pairs whose tracking window crosses a depth crease are left out when
/// enough others remain. The RANSAC pose is then refined on reprojection
/// error over its inliers.
///
/// Returns the fit together with the number of pairs that had usable depth.
pub fn estimate_relative_pose<R: Rng + ?Sized>(
    pairs: &[MatchedPair<f64>],
    prev_depth: &DepthImage,
    cur_depth: &DepthImage,
    k: &CameraIntrinsics<f64>,
    params: &RigidRansacParams<f64>,
    rng: &mut R,
) -> Result<(RigidFit<f64>, usize)> {
    const MAX_REL_JUMP: f64 = 0.05;
    let obs: Vec<Observation<f64>> = pairs
        .iter()
        .filter_map(|pair| {
            let z1 = prev_depth.meters_interpolated(pair.p1.u, pair.p1.v, MAX_REL_JUMP)?;
            let z2 = cur_depth.meters_interpolated(pair.p2.u, pair.p2.v, MAX_REL_JUMP)?;
            Some(Observation {
                src: backproject(&pair.p2, z2, k).ok()?,
                src_px: pair.p2,
                dst: backproject(&pair.p1, z1, k).ok()?,
                dst_px: pair.p1,
            })
        })
        .collect();
    let planar: Vec<Observation<f64>> = obs
        .iter()
        .filter(|o| {
            locally_planar(prev_depth, &o.dst_px, PLANARITY_RADIUS_PX, PLANARITY_TOL)
                && locally_planar(cur_depth, &o.src_px, PLANARITY_RADIUS_PX, PLANARITY_TOL)
        })
        .copied()
        .collect();
    let obs = if planar.len() >= MIN_PLANAR { planar } else { obs };
    let cloud: Vec<(Point3<f64>, Point3<f64>)> = obs.iter().map(|o| (o.src, o.dst)).collect();
    let mut fit = ransac_rigid_pose(&cloud, params, rng)?;
    let inliers: Vec<Observation<f64>> = obs
        .iter()
        .zip(&fit.inliers)
        .filter(|(_, &b)| b)
        .map(|(o, _)| *o)
        .collect();
    fit.pose = refine_reprojection(&fit.pose, &inliers, k, REFINE_ITERS, REFINE_HUBER_PX);
    Ok((fit, obs.len()))
}

/// Whether inverse depth is affine across a `2r+1` window around `p`, up to
/// a relative tolerance. Trackers average the flow over their window, so a
/// crease or edge inside it biases the track even when the center is fine.
pub fn locally_planar(depth: &DepthImage, p: &Pixel<f64>, r: f64, tol: f64) -> bool {
    let inv = |du: f64, dv: f64| {
        depth
            .meters_interpolated(p.u + du, p.v + dv, f64::INFINITY)
            .map(|z| 1.0 / z)
    };
    let Some(c) = inv(0.0, 0.0) else {
        return false;
    };
    [(r, 0.0), (0.0, r), (r, r), (r, -r)]
        .iter()
        .all(|&(du, dv)| match (inv(du, dv), inv(-du, -dv)) {
            (Some(a), Some(b)) => (a + b - 2.0 * c).abs() <= tol * c,
            _ => false,
        })
}

const PLANARITY_RADIUS_PX: f64 = 10.0;
const PLANARITY_TOL: f64 = 0.02;
const MIN_PLANAR: usize = 20;
const REFINE_ITERS: usize = 10;
const REFINE_HUBER_PX: f64 = 1.0;

/// Appends `last_pose ∘ relative` at time `t`; an empty trajectory starts at
/// the identity. Returns the new world pose.
pub fn advance_trajectory<T: Real>(
    traj: &mut Trajectory<T>,
    relative: &PoseSE3<T>,
    t: Timestamp,
) -> Result<PoseSE3<T>> {
    let pose = match traj.last() {
        None => PoseSE3::identity(),
        Some((_, last)) => last.compose(relative),
    };
    traj.push(t, pose)?;
    Ok(pose)
}

/// Frame fused into the map.
#[derive(Debug, Clone)]
pub struct Keyframe {
    pub frame_id: usize,
    pub timestamp: Timestamp,
    /// Camera to world.
    pub pose: PoseSE3<f64>,
    pub depth: Arc<DepthImage>,
    pub mask: Option<Arc<LabelMask>>,
    /// `None` when no motion verdicts exist for the frame.
    pub verdicts: Option<Arc<Vec<RegionVerdict>>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyframeThresholds<T> {
    pub translation_m: T,
    pub rotation_deg: T,
    pub max_gap: usize,
}

impl<T: Real> Default for KeyframeThresholds<T> {
    fn default() -> Self {
        Self {
            translation_m: T::lit(0.1),
            rotation_deg: T::lit(10.0),
            max_gap: 30,
        }
    }
}

/// `last` is the previous keyframe's `(frame id, pose)`; `None` before the
/// first keyframe.
pub fn select_keyframe<T: Real>(
    last: Option<(usize, &PoseSE3<T>)>,
    current: &PoseSE3<T>,
    frame_id: usize,
    thresholds: &KeyframeThresholds<T>,
) -> bool {
    let Some((last_id, last_pose)) = last else {
        return true;
    };
    let delta = last_pose.inverse().compose(current);
    let angle_deg = delta.rotation_angle().degrees();
    delta.translation.norm() > thresholds.translation_m
        || angle_deg > thresholds.rotation_deg
        || frame_id.saturating_sub(last_id) >= thresholds.max_gap
}
