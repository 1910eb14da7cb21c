//! Per-frame pipeline: track → motion check ∥ mask fetch → rejection →
//! pose → keyframe → map.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::epipolar::{detect_dynamic_points, MotionCheckConfig, TrackingParams};
use crate::error::{Error, Result};
use crate::features::{detect_corners, replenish_corners, CornerParams, ImagePyramid, MatchedPair, PairStatus, Pixel};
use crate::kv::KeyValues;
use crate::octomap::{insert_keyframe_cloud, MapConfig, SemanticOctree};
use crate::odometry::{
    advance_trajectory, estimate_relative_pose, select_keyframe, CameraConfig, Keyframe, KeyframeThresholds,
    RigidRansacParams,
};
use crate::rejection::{classify_region_motion, reject_outliers, RegionVerdict, RejectionConfig};
use crate::segmentation::{
    extract_regions, AsyncMaskProvider, ClassTable, DirectoryMaskSource, LabelMask, MaskRequest,
    DEFAULT_MIN_REGION_AREA,
};
use crate::tum_io::{format_trajectory, PoseSE3, Trajectory, TumDataset, DEFAULT_MAX_DIFF};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub dataset: PathBuf,
    /// Mask directory; `<dataset>/masks` when unset.
    pub masks: Option<PathBuf>,
    pub camera: CameraConfig,
    pub max_diff: f64,
    pub corners: CornerParams,
    pub tracking: TrackingParams,
    pub motion: MotionCheckConfig<f64>,
    pub rejection: RejectionConfig,
    pub min_region_area: usize,
    pub rigid: RigidRansacParams<f64>,
    pub map: MapConfig<f64>,
    pub build_map: bool,
    /// Pixel step when inserting keyframe clouds.
    pub map_stride: usize,
    pub keyframes: KeyframeThresholds<f64>,
    /// Off reproduces the baseline: no masks, no rejection.
    pub dynamic_filter: bool,
    pub seed: u64,
    pub max_frames: Option<usize>,
}

impl PipelineConfig {
    /// Defaults for a dataset directory. Intrinsics come from
    /// `<dataset>/intrinsics.txt` when present, else the TUM fr3 calibration.
    pub fn new(dataset: impl Into<PathBuf>) -> Result<Self> {
        let dataset = dataset.into();
        let local = dataset.join(crate::synthbench::INTRINSICS_FILE);
        let camera = if local.is_file() {
            CameraConfig::load(&local)?
        } else {
            CameraConfig::tum_fr3()
        };
        Ok(Self {
            dataset,
            masks: None,
            camera,
            max_diff: DEFAULT_MAX_DIFF,
            corners: CornerParams::default(),
            tracking: TrackingParams::default(),
            motion: MotionCheckConfig::default(),
            rejection: RejectionConfig::default(),
            min_region_area: DEFAULT_MIN_REGION_AREA,
            rigid: RigidRansacParams::default(),
            map: MapConfig::default(),
            build_map: true,
            map_stride: 4,
            keyframes: KeyframeThresholds::default(),
            dynamic_filter: true,
            seed: 0,
            max_frames: None,
        })
    }

    pub fn mask_dir(&self) -> PathBuf {
        self.masks.clone().unwrap_or_else(|| self.dataset.join("masks"))
    }

    /// Applies a key-value override file. Unknown keys are an error.
    pub fn apply_overrides(&mut self, kv: &KeyValues) -> Result<()> {
        for key in kv.keys() {
            match key {
                "max_diff" => kv.apply(key, &mut self.max_diff)?,
                "max_corners" => kv.apply(key, &mut self.corners.max_count)?,
                "corner_quality" => kv.apply(key, &mut self.corners.quality)?,
                "corner_min_distance" => kv.apply(key, &mut self.corners.min_distance)?,
                "lk_window" => kv.apply(key, &mut self.tracking.lk.window)?,
                "lk_levels" => kv.apply(key, &mut self.tracking.lk.levels)?,
                "lk_max_iters" => kv.apply(key, &mut self.tracking.lk.max_iters)?,
                "lk_eps" => kv.apply(key, &mut self.tracking.lk.eps)?,
                "lk_min_eigen" => kv.apply(key, &mut self.tracking.lk.min_eigen)?,
                "edge_margin" => kv.apply(key, &mut self.tracking.filter.edge_margin)?,
                "patch_diff_max" => kv.apply(key, &mut self.tracking.filter.patch_diff_max)?,
                "epsilon" => kv.apply(key, &mut self.motion.epsilon)?,
                "ransac_threshold" => kv.apply(key, &mut self.motion.ransac_threshold)?,
                "ransac_max_iters" => kv.apply(key, &mut self.motion.ransac_max_iters)?,
                "ransac_confidence" => kv.apply(key, &mut self.motion.ransac_confidence)?,
                "moving_min_points" => kv.apply(key, &mut self.rejection.moving_min_points)?,
                "judge_all_classes" => kv.apply(key, &mut self.rejection.judge_all_classes)?,
                "dynamic_classes" => {
                    let raw = kv.raw(key).unwrap_or("");
                    self.rejection.dynamic_classes = raw
                        .split(|c: char| c == ',' || c.is_whitespace())
                        .filter(|s| !s.is_empty())
                        .map(|s| {
                            s.parse::<u8>()
                                .map_err(|_| Error::Config(format!("dynamic_classes: bad class id {s:?}")))
                        })
                        .collect::<Result<BTreeSet<u8>>>()?;
                }
                "min_region_area" => kv.apply(key, &mut self.min_region_area)?,
                "rigid_inlier_dist" => kv.apply(key, &mut self.rigid.inlier_dist_m)?,
                "rigid_max_iters" => kv.apply(key, &mut self.rigid.max_iters)?,
                "map_resolution" => kv.apply(key, &mut self.map.resolution)?,
                "tau_hit" => kv.apply(key, &mut self.map.tau_hit)?,
                "tau_miss" => kv.apply(key, &mut self.map.tau_miss)?,
                "l_min" => kv.apply(key, &mut self.map.l_min)?,
                "l_max" => kv.apply(key, &mut self.map.l_max)?,
                "occupancy_threshold" => kv.apply(key, &mut self.map.occupancy_threshold)?,
                "raycast_free_space" => kv.apply(key, &mut self.map.raycast_free_space)?,
                "surface_guard" => kv.apply(key, &mut self.map.surface_guard)?,
                "build_map" => kv.apply(key, &mut self.build_map)?,
                "map_stride" => kv.apply(key, &mut self.map_stride)?,
                "keyframe_translation" => kv.apply(key, &mut self.keyframes.translation_m)?,
                "keyframe_rotation_deg" => kv.apply(key, &mut self.keyframes.rotation_deg)?,
                "keyframe_max_gap" => kv.apply(key, &mut self.keyframes.max_gap)?,
                "dynamic_filter" => kv.apply(key, &mut self.dynamic_filter)?,
                "seed" => kv.apply(key, &mut self.seed)?,
                "max_frames" => {
                    let mut n = 0usize;
                    kv.apply(key, &mut n)?;
                    self.max_frames = Some(n);
                }
                other => return Err(Error::Config(format!("unknown config key {other:?}"))),
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.motion.validate()?;
        self.rejection.validate()?;
        self.map.validate()?;
        if self.corners.max_count < 8 || !(self.corners.quality > 0.0 && self.corners.quality <= 1.0) {
            return Err(Error::Config("corner parameters out of range".into()));
        }
        if self.tracking.lk.window.is_multiple_of(2) || self.tracking.lk.levels == 0 {
            return Err(Error::Config("LK window must be odd and levels >= 1".into()));
        }
        if self.map_stride == 0 {
            return Err(Error::Config("map_stride must be >= 1".into()));
        }
        Ok(())
    }

    /// The effective settings as `key value` lines.
    pub fn format(&self) -> String {
        let classes: Vec<String> = self.rejection.dynamic_classes.iter().map(u8::to_string).collect();
        let lines = [
            ("dataset", self.dataset.display().to_string()),
            ("masks", self.mask_dir().display().to_string()),
            ("fx", self.camera.intrinsics.fx.to_string()),
            ("fy", self.camera.intrinsics.fy.to_string()),
            ("cx", self.camera.intrinsics.cx.to_string()),
            ("cy", self.camera.intrinsics.cy.to_string()),
            ("depth_scale", self.camera.depth_scale.to_string()),
            ("max_diff", self.max_diff.to_string()),
            ("max_corners", self.corners.max_count.to_string()),
            ("corner_quality", self.corners.quality.to_string()),
            ("corner_min_distance", self.corners.min_distance.to_string()),
            ("lk_window", self.tracking.lk.window.to_string()),
            ("lk_levels", self.tracking.lk.levels.to_string()),
            ("epsilon", self.motion.epsilon.to_string()),
            ("ransac_threshold", self.motion.ransac_threshold.to_string()),
            ("ransac_max_iters", self.motion.ransac_max_iters.to_string()),
            ("moving_min_points", self.rejection.moving_min_points.to_string()),
            ("dynamic_classes", classes.join(",")),
            ("rigid_inlier_dist", self.rigid.inlier_dist_m.to_string()),
            ("map_resolution", self.map.resolution.to_string()),
            ("tau_hit", self.map.tau_hit.to_string()),
            ("tau_miss", self.map.tau_miss.to_string()),
            ("occupancy_threshold", self.map.occupancy_threshold.to_string()),
            ("raycast_free_space", self.map.raycast_free_space.to_string()),
            ("surface_guard", self.map.surface_guard.to_string()),
            ("keyframe_translation", self.keyframes.translation_m.to_string()),
            ("keyframe_rotation_deg", self.keyframes.rotation_deg.to_string()),
            ("keyframe_max_gap", self.keyframes.max_gap.to_string()),
            ("dynamic_filter", self.dynamic_filter.to_string()),
            ("seed", self.seed.to_string()),
        ];
        lines.iter().map(|(k, v)| format!("{k} {v}\n")).collect()
    }
}

/// Counts for one processed frame. `stable + rejected == survivors`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FrameCounts {
    /// Pairs the optical flow tracked.
    pub tracked: usize,
    /// Tracked pairs left after the border and patch filters.
    pub survivors: usize,
    pub dynamic: usize,
    pub rejected: usize,
    pub stable: usize,
    pub moving_regions: usize,
    pub pose_inliers: usize,
    pub mask_available: bool,
    pub lost: bool,
    pub keyframe: bool,
}

/// Milliseconds spent per stage in one frame. `segmentation_fetch_ms` is
/// the time spent blocked on the mask after the motion check finished.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StageTimings {
    pub feature_extraction_ms: f64,
    pub motion_check_ms: f64,
    pub segmentation_fetch_ms: f64,
    pub pose_ms: f64,
    pub map_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameReport {
    pub index: usize,
    pub timestamp: f64,
    pub counts: FrameCounts,
    pub timings: StageTimings,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MapSummary {
    pub keyframes: usize,
    pub leaves: usize,
    pub occupied_voxels: usize,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub trajectory: Trajectory<f64>,
    pub frames: Vec<FrameReport>,
    pub map_summary: MapSummary,
    pub map: Option<SemanticOctree<f64>>,
    pub config: PipelineConfig,
}

impl RunReport {
    pub fn lost_frames(&self) -> usize {
        self.frames.iter().filter(|f| f.counts.lost).count()
    }

    pub fn mean_timings(&self) -> StageTimings {
        let n = self.frames.len().max(1) as f64;
        let mut m = StageTimings::default();
        for f in &self.frames {
            m.feature_extraction_ms += f.timings.feature_extraction_ms / n;
            m.motion_check_ms += f.timings.motion_check_ms / n;
            m.segmentation_fetch_ms += f.timings.segmentation_fetch_ms / n;
            m.pose_ms += f.timings.pose_ms / n;
            m.map_ms += f.timings.map_ms / n;
        }
        m
    }

    /// Summary as `key value` lines.
    pub fn format_summary(&self) -> String {
        let t = self.mean_timings();
        let mut out = String::new();
        let _ = writeln!(out, "frames {}", self.frames.len());
        let _ = writeln!(out, "lost_frames {}", self.lost_frames());
        let _ = writeln!(out, "keyframes {}", self.map_summary.keyframes);
        let _ = writeln!(out, "map_leaves {}", self.map_summary.leaves);
        let _ = writeln!(out, "occupied_voxels {}", self.map_summary.occupied_voxels);
        let total = |f: fn(&FrameCounts) -> usize| self.frames.iter().map(|r| f(&r.counts)).sum::<usize>();
        let _ = writeln!(out, "total_tracked {}", total(|c| c.tracked));
        let _ = writeln!(out, "total_dynamic {}", total(|c| c.dynamic));
        let _ = writeln!(out, "total_rejected {}", total(|c| c.rejected));
        let _ = writeln!(out, "mean_feature_extraction_ms {:.3}", t.feature_extraction_ms);
        let _ = writeln!(out, "mean_motion_check_ms {:.3}", t.motion_check_ms);
        let _ = writeln!(out, "mean_segmentation_fetch_ms {:.3}", t.segmentation_fetch_ms);
        let _ = writeln!(out, "mean_pose_ms {:.3}", t.pose_ms);
        let _ = writeln!(out, "mean_map_ms {:.3}", t.map_ms);
        out.push_str("# configuration\n");
        out.push_str(&self.config.format());
        out
    }

    pub fn format_frames_csv(&self) -> String {
        let mut out = String::from(
            "index,timestamp,tracked,survivors,dynamic,rejected,stable,moving_regions,pose_inliers,mask,lost,keyframe,\
             feature_ms,motion_check_ms,segmentation_fetch_ms,pose_ms,map_ms\n",
        );
        for f in &self.frames {
            let c = &f.counts;
            let t = &f.timings;
            let _ = writeln!(
                out,
                "{},{:.6},{},{},{},{},{},{},{},{},{},{},{:.3},{:.3},{:.3},{:.3},{:.3}",
                f.index,
                f.timestamp,
                c.tracked,
                c.survivors,
                c.dynamic,
                c.rejected,
                c.stable,
                c.moving_regions,
                c.pose_inliers,
                c.mask_available as u8,
                c.lost as u8,
                c.keyframe as u8,
                t.feature_extraction_ms,
                t.motion_check_ms,
                t.segmentation_fetch_ms,
                t.pose_ms,
                t.map_ms
            );
        }
        out
    }

    /// Writes `trajectory.txt`, `report.txt` and `frames.csv` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, text) in [
            ("trajectory.txt", format_trajectory(&self.trajectory)),
            ("report.txt", self.format_summary()),
            ("frames.csv", self.format_frames_csv()),
        ] {
            let p = dir.join(name);
            std::fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
        }
        Ok(())
    }
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn class_table_for(dataset: &Path) -> Result<Arc<ClassTable>> {
    let p = dataset.join(crate::synthbench::CLASSES_FILE);
    Ok(Arc::new(if p.is_file() {
        ClassTable::load(p)?
    } else {
        ClassTable::pascal_voc()
    }))
}

struct Previous {
    pyramid: ImagePyramid,
    depth: Arc<crate::tum_io::DepthImage>,
    points: Vec<Pixel<f64>>,
}

/// Runs the whole sequence. Deterministic for a fixed configuration.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunReport> {
    cfg.validate()?;
    let dataset = TumDataset::open(&cfg.dataset, cfg.camera.depth_scale, cfg.max_diff)?;
    let n = cfg.max_frames.map_or(dataset.len(), |m| m.min(dataset.len()));
    if n < 2 {
        return Err(Error::InsufficientOverlap(format!(
            "{n} associated frames, need at least 2"
        )));
    }
    let k = cfg.camera.intrinsics;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let provider = if cfg.dynamic_filter {
        let dir = cfg.mask_dir();
        if !dir.is_dir() {
            log::warn!(
                "mask directory {} not found; no regions will be rejected",
                dir.display()
            );
        }
        let source = DirectoryMaskSource::new(dir, class_table_for(&cfg.dataset)?);
        Some(AsyncMaskProvider::spawn(Arc::new(source)))
    } else {
        None
    };
    let request = |i: usize| MaskRequest {
        frame_id: i,
        timestamp: dataset.records[i].timestamp,
        key: dataset.records[i].rgb_file.clone(),
        dimensions: (0, 0),
    };

    let mut map = if cfg.build_map {
        Some(SemanticOctree::new(cfg.map)?)
    } else {
        None
    };
    let mut map_summary = MapSummary::default();
    let mut trajectory = Trajectory::new();
    let mut frames = Vec::with_capacity(n);
    let mut last_keyframe: Option<(usize, PoseSE3<f64>)>;

    let insert = |map: &mut Option<SemanticOctree<f64>>, kf: &Keyframe, summary: &mut MapSummary| -> Result<()> {
        if let Some(m) = map.as_mut() {
            insert_keyframe_cloud(m, kf, &k, cfg.map_stride, &cfg.rejection.dynamic_classes)?;
            summary.keyframes += 1;
        }
        Ok(())
    };

    // first frame
    let t0 = Instant::now();
    let frame = dataset.load_frame(0)?;
    let dims = frame.dimensions();
    let pending = provider.as_ref().map(|p| {
        p.request(MaskRequest {
            dimensions: dims,
            ..request(0)
        })
    });
    let pyramid = ImagePyramid::from_rgb(&frame.rgb, cfg.tracking.lk.levels);
    let points = detect_corners(pyramid.base(), &cfg.corners);
    let feature_ms = ms_since(t0);
    let t_wait = Instant::now();
    let mask0 = match pending {
        Some(p) => p.wait()?.into_mask(),
        None => None,
    };
    let fetch_ms = ms_since(t_wait);
    let pose0 = advance_trajectory(&mut trajectory, &PoseSE3::identity(), frame.timestamp)?;
    let depth = Arc::new(frame.depth);
    let t_map = Instant::now();
    let kf = Keyframe {
        frame_id: 0,
        timestamp: frame.timestamp,
        pose: pose0,
        depth: depth.clone(),
        mask: mask0.clone().map(Arc::new),
        verdicts: None,
    };
    insert(&mut map, &kf, &mut map_summary)?;
    last_keyframe = Some((0, pose0));
    frames.push(FrameReport {
        index: 0,
        timestamp: frame.timestamp.0,
        counts: FrameCounts {
            mask_available: mask0.is_some(),
            keyframe: true,
            ..Default::default()
        },
        timings: StageTimings {
            feature_extraction_ms: feature_ms,
            segmentation_fetch_ms: fetch_ms,
            map_ms: ms_since(t_map),
            ..Default::default()
        },
    });
    let mut prev = Previous { pyramid, depth, points };

    for i in 1..n {
        let mut timings = StageTimings::default();
        let mut counts = FrameCounts::default();

        let t = Instant::now();
        let frame = dataset.load_frame(i)?;
        let pending = provider.as_ref().map(|p| {
            p.request(MaskRequest {
                dimensions: frame.dimensions(),
                ..request(i)
            })
        });
        let pyramid = ImagePyramid::from_rgb(&frame.rgb, cfg.tracking.lk.levels);
        timings.feature_extraction_ms = ms_since(t);

        // motion check overlaps the mask fetch
        let t = Instant::now();
        let check = detect_dynamic_points(
            &prev.pyramid,
            &pyramid,
            &prev.points,
            &cfg.motion,
            &cfg.tracking,
            &mut rng,
        );
        timings.motion_check_ms = ms_since(t);

        let t = Instant::now();
        let mask: Option<LabelMask> = match pending {
            Some(p) => p.wait()?.into_mask(),
            None => None,
        };
        timings.segmentation_fetch_ms = ms_since(t);
        counts.mask_available = mask.is_some();

        let depth = Arc::new(frame.depth);
        let mut verdicts: Option<Vec<RegionVerdict>> = None;
        let mut next_points: Vec<Pixel<f64>> = Vec::new();
        let relative = match &check {
            Ok(check) => {
                counts.tracked = check.pairs.iter().filter(|p| p.status != PairStatus::Lost).count();
                let survivors: Vec<MatchedPair<f64>> = check.pairs.iter().filter(|p| p.is_tracked()).copied().collect();
                counts.survivors = survivors.len();
                counts.dynamic = check.dynamic.len();
                let (stable, removed) = match &mask {
                    Some(m) if cfg.dynamic_filter => {
                        let regions = extract_regions(m, cfg.min_region_area);
                        let v = classify_region_motion(&regions, &check.dynamic, &cfg.rejection);
                        counts.moving_regions = v.iter().filter(|r| r.is_moving()).count();
                        let split = reject_outliers(&survivors, &v, &cfg.rejection);
                        verdicts = Some(v);
                        split
                    }
                    _ => (survivors, Vec::new()),
                };
                counts.stable = stable.len();
                counts.rejected = removed.len();
                next_points = stable.iter().map(|p| p.p2).collect();

                let t = Instant::now();
                let fit = estimate_relative_pose(&stable, &prev.depth, &depth, &k, &cfg.rigid, &mut rng);
                timings.pose_ms = ms_since(t);
                match fit {
                    Ok((fit, _)) => {
                        counts.pose_inliers = fit.inlier_count();
                        Some(fit.pose)
                    }
                    Err(e) => {
                        log::debug!("frame {i}: pose estimation failed: {e}");
                        None
                    }
                }
            }
            Err(e) => {
                log::debug!("frame {i}: motion check failed: {e}");
                None
            }
        };
        counts.lost = relative.is_none();
        let pose = advance_trajectory(
            &mut trajectory,
            &relative.unwrap_or_else(PoseSE3::identity),
            frame.timestamp,
        )?;

        let t = Instant::now();
        let is_kf =
            !counts.lost && select_keyframe(last_keyframe.as_ref().map(|(id, p)| (*id, p)), &pose, i, &cfg.keyframes);
        if is_kf {
            counts.keyframe = true;
            let kf = Keyframe {
                frame_id: i,
                timestamp: frame.timestamp,
                pose,
                depth: depth.clone(),
                mask: mask.map(Arc::new),
                verdicts: verdicts.map(Arc::new),
            };
            insert(&mut map, &kf, &mut map_summary)?;
            last_keyframe = Some((i, pose));
        }
        timings.map_ms = ms_since(t);

        let t = Instant::now();
        let points = replenish_corners(next_points, pyramid.base(), &cfg.corners);
        timings.feature_extraction_ms += ms_since(t);

        frames.push(FrameReport {
            index: i,
            timestamp: frame.timestamp.0,
            counts,
            timings,
        });
        prev = Previous { pyramid, depth, points };
    }

    if let Some(m) = &map {
        map_summary.leaves = m.leaves().len();
        map_summary.occupied_voxels = m.occupied_voxels().len();
    }
    Ok(RunReport {
        trajectory,
        frames,
        map_summary,
        map,
        config: cfg.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthbench::{generate_scene, write_as_tum, SceneSpec};

    fn override_cfg(text: &str) -> Result<PipelineConfig> {
        let mut cfg = PipelineConfig::new("/nonexistent")?;
        cfg.apply_overrides(&KeyValues::parse(text, Path::new("cfg"))?)?;
        cfg.validate()?;
        Ok(cfg)
    }

    #[test]
    fn config_overrides() {
        let cfg = override_cfg("epsilon 2.5\ndynamic_classes 15, 9\nseed = 42\nraycast_free_space false\n").unwrap();
        assert_eq!(cfg.motion.epsilon, 2.5);
        assert_eq!(cfg.rejection.dynamic_classes, BTreeSet::from([9, 15]));
        assert_eq!(cfg.seed, 42);
        assert!(!cfg.map.raycast_free_space);
        assert!(matches!(override_cfg("bogus 1\n"), Err(Error::Config(_))));
        assert!(override_cfg("epsilon -1\n").is_err());
        assert!(override_cfg("lk_window 20\n").is_err());
        assert!(cfg.format().contains("epsilon 2.5\n"));
    }

    #[test]
    fn too_short_dataset_is_an_error() {
        let mut spec = SceneSpec::static_room(1);
        spec.width = 64;
        spec.height = 48;
        let seq = generate_scene(&spec).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_as_tum(&seq, dir.path()).unwrap();
        let cfg = PipelineConfig::new(dir.path()).unwrap();
        assert!(matches!(run_pipeline(&cfg), Err(Error::InsufficientOverlap(_))));
    }
}
