//! Per-object motion verdicts and removal of features on moving objects.

use std::collections::BTreeSet;

use crate::epipolar::DynamicPointSet;
use crate::error::{Error, Result};
use crate::features::MatchedPair;
use crate::scalar::Real;
use crate::segmentation::{point_in_region, SemanticRegion, PERSON};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Motion {
    Moving,
    Static,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionVerdict {
    pub region: SemanticRegion,
    pub dynamic_count: usize,
    pub verdict: Motion,
}

impl RegionVerdict {
    pub fn is_moving(&self) -> bool {
        self.verdict == Motion::Moving
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RejectionConfig {
    /// Dynamic points needed inside a region to call it moving.
    pub moving_min_points: usize,
    pub dynamic_classes: BTreeSet<u8>,
    /// Judge regions of every class, not only `dynamic_classes`.
    pub judge_all_classes: bool,
}

impl Default for RejectionConfig {
    fn default() -> Self {
        Self {
            moving_min_points: 3,
            dynamic_classes: BTreeSet::from([PERSON]),
            judge_all_classes: false,
        }
    }
}

impl RejectionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.moving_min_points == 0 {
            return Err(Error::Config("moving_min_points must be >= 1".into()));
        }
        Ok(())
    }

    pub fn is_dynamic_class(&self, class_id: u8) -> bool {
        self.dynamic_classes.contains(&class_id)
    }
}

/// Counts the dynamic points inside each judged region and calls it moving
/// once the count reaches `moving_min_points`. Regions outside the dynamic
/// classes are skipped unless `judge_all_classes` is set.
pub fn classify_region_motion<T: Real>(
    regions: &[SemanticRegion],
    dynamic: &DynamicPointSet<T>,
    cfg: &RejectionConfig,
) -> Vec<RegionVerdict> {
    regions
        .iter()
        .filter(|r| cfg.judge_all_classes || cfg.is_dynamic_class(r.class_id))
        .map(|region| {
            let dynamic_count = dynamic.points.iter().filter(|p| point_in_region(region, p)).count();
            RegionVerdict {
                region: region.clone(),
                dynamic_count,
                verdict: if dynamic_count >= cfg.moving_min_points {
                    Motion::Moving
                } else {
                    Motion::Static
                },
            }
        })
        .collect()
}

/// Splits pairs into those kept for pose estimation and those whose current
/// point lies on a moving object of a dynamic class.
pub fn reject_outliers<T: Real>(
    pairs: &[MatchedPair<T>],
    verdicts: &[RegionVerdict],
    cfg: &RejectionConfig,
) -> (Vec<MatchedPair<T>>, Vec<MatchedPair<T>>) {
    let moving: Vec<&SemanticRegion> = verdicts
        .iter()
        .filter(|v| v.is_moving() && cfg.is_dynamic_class(v.region.class_id))
        .map(|v| &v.region)
        .collect();
    if moving.is_empty() {
        return (pairs.to_vec(), Vec::new());
    }
    pairs
        .iter()
        .partition(|pair| !moving.iter().any(|r| point_in_region(r, &pair.p2)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::Pixel;
    use crate::segmentation::{extract_regions, LabelMask};
    use proptest::prelude::*;

    fn person_rect(x0: u32, y0: u32, x1: u32, y1: u32) -> Vec<SemanticRegion> {
        let mut m = LabelMask::background(100, 100);
        for y in y0..y1 {
            for x in x0..x1 {
                m.set(x, y, PERSON);
            }
        }
        extract_regions(&m, 1)
    }

    fn dyn_set(points: &[(f64, f64)]) -> DynamicPointSet<f64> {
        DynamicPointSet {
            points: points.iter().map(|&(u, v)| Pixel::new(u, v)).collect(),
            indices: (0..points.len()).collect(),
        }
    }

    /// 10x10 grid of pairs at (5 + 10i, 5 + 10j).
    fn grid_pairs() -> Vec<MatchedPair<f64>> {
        (0..10)
            .flat_map(|j| {
                (0..10).map(move |i| {
                    let p = Pixel::new(5.0 + 10.0 * i as f64, 5.0 + 10.0 * j as f64);
                    MatchedPair::tracked(p, p)
                })
            })
            .collect()
    }

    #[test]
    fn verdict_counts() {
        let regions = person_rect(10, 10, 60, 60);
        let cfg = RejectionConfig::default();
        let inside: Vec<_> = (0..10).map(|i| (12.0 + 4.0 * i as f64, 30.0)).collect();
        let v = classify_region_motion(&regions, &dyn_set(&inside), &cfg);
        assert_eq!(v[0].dynamic_count, 10);
        assert_eq!(v[0].verdict, Motion::Moving);

        let v = classify_region_motion(&regions, &dyn_set(&[(80.0, 80.0)]), &cfg);
        assert_eq!(v[0].verdict, Motion::Static);
        let v = classify_region_motion(&regions, &dyn_set(&[]), &cfg);
        assert!(v.iter().all(|v| v.verdict == Motion::Static));
    }

    #[test]
    fn no_person_keeps_everything() {
        let pairs = grid_pairs();
        let (stable, removed) = reject_outliers(&pairs, &[], &RejectionConfig::default());
        assert_eq!(stable, pairs);
        assert!(removed.is_empty());
    }

    #[test]
    fn moving_person_removes_inside_pairs() {
        let pairs = grid_pairs();
        // covers x in {25,35,45,55} and y in {5,15,25}: 12 pairs
        let regions = person_rect(20, 0, 60, 30);
        let cfg = RejectionConfig::default();
        let s = dyn_set(&[(25.0, 5.0), (35.0, 15.0), (45.0, 25.0)]);
        let verdicts = classify_region_motion(&regions, &s, &cfg);
        let (stable, removed) = reject_outliers(&pairs, &verdicts, &cfg);
        assert_eq!((stable.len(), removed.len()), (88, 12));
        assert!(removed.iter().all(|p| point_in_region(&regions[0], &p.p2)));
        assert!(stable.iter().all(|p| !point_in_region(&regions[0], &p.p2)));
    }

    #[test]
    fn static_person_keeps_everything() {
        let pairs = grid_pairs();
        let regions = person_rect(20, 0, 60, 30);
        let cfg = RejectionConfig::default();
        let verdicts = classify_region_motion(&regions, &dyn_set(&[]), &cfg);
        let (stable, removed) = reject_outliers(&pairs, &verdicts, &cfg);
        assert_eq!(stable, pairs);
        assert!(removed.is_empty());
    }

    #[test]
    fn dynamic_points_outside_dynamic_classes_are_not_removed() {
        let mut m = LabelMask::background(100, 100);
        for y in 0..30 {
            for x in 20..60 {
                m.set(x, y, 9); // chair
            }
        }
        let regions = extract_regions(&m, 1);
        let cfg = RejectionConfig::default();
        let s = dyn_set(&[(25.0, 5.0), (35.0, 15.0), (45.0, 25.0), (90.0, 90.0)]);
        let verdicts = classify_region_motion(&regions, &s, &cfg);
        assert!(verdicts.is_empty());
        let (stable, _) = reject_outliers(&grid_pairs(), &verdicts, &cfg);
        assert_eq!(stable.len(), 100);

        // judging all classes reports the chair as moving but still keeps its points
        let all = RejectionConfig {
            judge_all_classes: true,
            ..cfg.clone()
        };
        let verdicts = classify_region_motion(&regions, &s, &all);
        assert!(verdicts[0].is_moving());
        assert_eq!(reject_outliers(&grid_pairs(), &verdicts, &all).0.len(), 100);
    }

    proptest! {
        #[test]
        fn partition_and_monotonicity(
            pts in prop::collection::vec((0.0f64..100.0, 0.0f64..100.0), 0..40),
            extra in prop::collection::vec((0.0f64..100.0, 0.0f64..100.0), 0..20),
            min_pts in 1usize..5,
        ) {
            let regions = person_rect(20, 10, 70, 60);
            let cfg = RejectionConfig { moving_min_points: min_pts, ..Default::default() };
            let small = dyn_set(&pts);
            let big = dyn_set(&pts.iter().chain(&extra).copied().collect::<Vec<_>>());
            let v_small = classify_region_motion(&regions, &small, &cfg);
            let v_big = classify_region_motion(&regions, &big, &cfg);
            for (a, b) in v_small.iter().zip(&v_big) {
                prop_assert!(!(a.is_moving() && !b.is_moving()));
            }
            let pairs = grid_pairs();
            let (stable, removed) = reject_outliers(&pairs, &v_big, &cfg);
            prop_assert_eq!(stable.len() + removed.len(), pairs.len());
            // order preserved: both lists are subsequences of the input
            let mut it = pairs.iter();
            for s in &stable {
                prop_assert!(it.any(|p| p == s));
            }
            let mut it = pairs.iter();
            for r in &removed {
                prop_assert!(it.any(|p| p == r));
            }
        }
    }
}
