//! Semantic occupancy octree with log-odds fusion.
//!
//! Each leaf voxel stores a clamped log-odds occupancy score and a histogram
//! of the class ids observed in it. Only voxels whose occupancy probability
//! exceeds the configured threshold are reported as occupied, so surfaces
//! seen a single time or later carved away by free-space rays drop out.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Point3, Vector3};

use crate::error::{Error, Result};
use crate::features::Pixel;
use crate::odometry::{backproject, CameraIntrinsics, Keyframe};
use crate::scalar::Real;

/// `log(p / (1 - p))`
pub fn log_odds<T: Real>(p: T) -> Result<T> {
    if !(p > T::zero() && p < T::one()) {
        return Err(Error::Domain(format!(
            "probability {} outside (0, 1)",
            p.to_f64_lossy()
        )));
    }
    Ok((p / (T::one() - p)).ln())
}

/// `exp(l) / (exp(l) + 1)`, evaluated without overflow for large `|l|`.
pub fn probability<T: Real>(l: T) -> T {
    if l >= T::zero() {
        T::one() / (T::one() + (-l).exp())
    } else {
        let e = l.exp();
        e / (e + T::one())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelFusion {
    /// Observation counts per class; the most frequent class wins.
    Counts,
    /// Clamped per-class log-odds; the observed class gains `tau_hit`, the
    /// other known classes receive `tau_miss`.
    LogOdds,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapConfig<T> {
    /// Voxel edge length in meters.
    pub resolution: T,
    pub tau_hit: T,
    pub tau_miss: T,
    pub l_min: T,
    pub l_max: T,
    pub occupancy_threshold: T,
    pub raycast_free_space: bool,
    /// Voxels within this Chebyshev distance (in voxels) of a scan's
    /// endpoint voxels are not carved by that scan.
    pub surface_guard: u32,
    pub label_fusion: LabelFusion,
}

impl<T: Real> Default for MapConfig<T> {
    fn default() -> Self {
        Self {
            resolution: T::lit(0.05),
            tau_hit: T::lit(0.85),
            tau_miss: T::lit(-0.4),
            l_min: T::lit(-2.0),
            l_max: T::lit(3.5),
            occupancy_threshold: T::lit(0.7),
            raycast_free_space: true,
            surface_guard: 2,
            label_fusion: LabelFusion::Counts,
        }
    }
}

impl<T: Real> MapConfig<T> {
    /// Literal additive update: misses contribute nothing and no free space
    /// is carved.
    pub fn hits_only() -> Self {
        Self {
            tau_miss: T::zero(),
            raycast_free_space: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.resolution > T::zero()
            && self.tau_hit > T::zero()
            && self.tau_miss <= T::zero()
            && self.l_min < T::zero()
            && T::zero() < self.l_max
            && self.occupancy_threshold > T::lit(0.5)
            && self.occupancy_threshold < T::one();
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid map config: {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observation {
    Occupied,
    Free,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VoxelState<T> {
    pub log_odds: T,
    pub label_counts: BTreeMap<u8, u32>,
    /// Only populated under [`LabelFusion::LogOdds`].
    pub label_log_odds: BTreeMap<u8, T>,
}

impl<T: Real> Default for VoxelState<T> {
    fn default() -> Self {
        Self {
            log_odds: T::zero(),
            label_counts: BTreeMap::new(),
            label_log_odds: BTreeMap::new(),
        }
    }
}

impl<T: Real> VoxelState<T> {
    pub fn probability(&self) -> T {
        probability(self.log_odds)
    }

    /// Fused class; ties go to the lower class id. `None` if never labeled.
    pub fn label(&self, fusion: LabelFusion) -> Option<u8> {
        match fusion {
            LabelFusion::Counts => self
                .label_counts
                .iter()
                .fold(None, |best: Option<(u8, u32)>, (&c, &n)| match best {
                    Some((_, bn)) if bn >= n => best,
                    _ => Some((c, n)),
                })
                .map(|(c, _)| c),
            LabelFusion::LogOdds => self
                .label_log_odds
                .iter()
                .fold(None, |best: Option<(u8, T)>, (&c, &l)| match best {
                    Some((_, bl)) if bl >= l => best,
                    _ => Some((c, l)),
                })
                .map(|(c, _)| c),
        }
    }

    pub fn apply(&mut self, observation: Observation, class_id: Option<u8>, cfg: &MapConfig<T>) {
        let delta = match observation {
            Observation::Occupied => cfg.tau_hit,
            Observation::Free => cfg.tau_miss,
        };
        self.log_odds = clamp(self.log_odds + delta, cfg.l_min, cfg.l_max);
        if let (Observation::Occupied, Some(c)) = (observation, class_id) {
            *self.label_counts.entry(c).or_insert(0) += 1;
            if cfg.label_fusion == LabelFusion::LogOdds {
                for (&k, l) in self.label_log_odds.iter_mut() {
                    if k != c {
                        *l = clamp(*l + cfg.tau_miss, cfg.l_min, cfg.l_max);
                    }
                }
                let l = self.label_log_odds.entry(c).or_insert(T::zero());
                *l = clamp(*l + cfg.tau_hit, cfg.l_min, cfg.l_max);
            }
        }
    }
}

fn clamp<T: Real>(v: T, lo: T, hi: T) -> T {
    if v < lo {
        lo
    } else if v > hi {
        hi
    } else {
        v
    }
}

/// Pure form of [`VoxelState::apply`].
pub fn update_voxel<T: Real>(
    state: &VoxelState<T>,
    observation: Observation,
    class_id: Option<u8>,
    cfg: &MapConfig<T>,
) -> VoxelState<T> {
    let mut next = state.clone();
    next.apply(observation, class_id, cfg);
    next
}

/// Integer voxel index: `floor(coordinate / resolution)` per axis.
pub type VoxelKey = [i64; 3];

const NONE: u32 = u32::MAX;
const MAX_DEPTH: u32 = 60;

#[derive(Debug, Clone)]
enum Node<T> {
    Inner([u32; 8]),
    Leaf(VoxelState<T>),
}

/// Octree of [`VoxelState`] leaves over a cube of `2^depth` voxels per edge
/// that grows by re-rooting when a key falls outside.
#[derive(Debug, Clone)]
pub struct SemanticOctree<T: Real> {
    cfg: MapConfig<T>,
    nodes: Vec<Node<T>>,
    root: u32,
    depth: u32,
    origin: VoxelKey,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OccupiedVoxel<T: Real> {
    pub key: VoxelKey,
    pub center: Point3<T>,
    pub label: u8,
    pub probability: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct InsertSummary {
    pub points: usize,
    pub skipped_dynamic: usize,
    pub occupied_updates: usize,
    pub free_updates: usize,
}

impl<T: Real> SemanticOctree<T> {
    pub fn new(cfg: MapConfig<T>) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            nodes: Vec::new(),
            root: NONE,
            depth: 0,
            origin: [0; 3],
        })
    }

    pub fn config(&self) -> &MapConfig<T> {
        &self.cfg
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// Edge length of the covered cube in meters.
    pub fn extent(&self) -> T {
        self.cfg.resolution * T::from_u64(1u64 << self.depth).unwrap()
    }

    pub fn key_of(&self, p: &Point3<T>) -> VoxelKey {
        let r = self.cfg.resolution;
        [
            (p.x / r).floor().to_f64_lossy() as i64,
            (p.y / r).floor().to_f64_lossy() as i64,
            (p.z / r).floor().to_f64_lossy() as i64,
        ]
    }

    pub fn center_of(&self, key: &VoxelKey) -> Point3<T> {
        let r = self.cfg.resolution;
        let half = T::lit(0.5);
        let c = |k: i64| (T::from_i64(k).unwrap() + half) * r;
        Point3::new(c(key[0]), c(key[1]), c(key[2]))
    }

    fn covers(&self, key: &VoxelKey) -> bool {
        let size = 1i64 << self.depth;
        (0..3).all(|a| key[a] >= self.origin[a] && key[a] < self.origin[a] + size)
    }

    fn grow_towards(&mut self, key: &VoxelKey) -> Result<()> {
        if self.root == NONE {
            self.origin = *key;
            self.depth = 0;
            self.nodes.push(Node::Leaf(VoxelState::default()));
            self.root = (self.nodes.len() - 1) as u32;
            return Ok(());
        }
        while !self.covers(key) {
            if self.depth >= MAX_DEPTH {
                return Err(Error::Contract(format!("voxel key {key:?} out of range")));
            }
            let size = 1i64 << self.depth;
            let mut child_idx = 0usize;
            for a in 0..3 {
                if key[a] < self.origin[a] {
                    self.origin[a] -= size;
                    child_idx |= 1 << a;
                }
            }
            let mut children = [NONE; 8];
            children[child_idx] = self.root;
            self.nodes.push(Node::Inner(children));
            self.root = (self.nodes.len() - 1) as u32;
            self.depth += 1;
        }
        Ok(())
    }

    fn child_index(&self, key: &VoxelKey, level: u32) -> usize {
        let mut idx = 0;
        for a in 0..3 {
            if ((key[a] - self.origin[a]) >> level) & 1 == 1 {
                idx |= 1 << a;
            }
        }
        idx
    }

    fn leaf_mut(&mut self, key: &VoxelKey) -> Result<&mut VoxelState<T>> {
        self.grow_towards(key)?;
        let mut node = self.root;
        for level in (0..self.depth).rev() {
            let idx = self.child_index(key, level);
            let next = match &self.nodes[node as usize] {
                Node::Inner(children) => children[idx],
                Node::Leaf(_) => unreachable!("leaf above depth 0"),
            };
            node = if next == NONE {
                let fresh = if level == 0 {
                    Node::Leaf(VoxelState::default())
                } else {
                    Node::Inner([NONE; 8])
                };
                self.nodes.push(fresh);
                let id = (self.nodes.len() - 1) as u32;
                if let Node::Inner(children) = &mut self.nodes[node as usize] {
                    children[idx] = id;
                }
                id
            } else {
                next
            };
        }
        match &mut self.nodes[node as usize] {
            Node::Leaf(state) => Ok(state),
            Node::Inner(_) => unreachable!("inner node at depth 0"),
        }
    }

    pub fn get(&self, key: &VoxelKey) -> Option<&VoxelState<T>> {
        if self.root == NONE || !self.covers(key) {
            return None;
        }
        let mut node = self.root;
        for level in (0..self.depth).rev() {
            match &self.nodes[node as usize] {
                Node::Inner(children) => {
                    node = children[self.child_index(key, level)];
                    if node == NONE {
                        return None;
                    }
                }
                Node::Leaf(_) => return None,
            }
        }
        match &self.nodes[node as usize] {
            Node::Leaf(s) => Some(s),
            Node::Inner(_) => None,
        }
    }

    pub fn update(&mut self, key: &VoxelKey, observation: Observation, class_id: Option<u8>) -> Result<()> {
        let cfg = self.cfg;
        self.leaf_mut(key)?.apply(observation, class_id, &cfg);
        Ok(())
    }

    /// Every stored leaf with its key, in key order.
    pub fn leaves(&self) -> Vec<(VoxelKey, &VoxelState<T>)> {
        let mut out = Vec::new();
        if self.root != NONE {
            self.collect(self.root, self.depth, self.origin, &mut out);
        }
        out.sort_by_key(|a| a.0);
        out
    }

    fn collect<'a>(&'a self, node: u32, level: u32, origin: VoxelKey, out: &mut Vec<(VoxelKey, &'a VoxelState<T>)>) {
        match &self.nodes[node as usize] {
            Node::Leaf(s) => out.push((origin, s)),
            Node::Inner(children) => {
                let half = 1i64 << (level - 1);
                for (idx, &c) in children.iter().enumerate() {
                    if c == NONE {
                        continue;
                    }
                    let mut o = origin;
                    for (a, slot) in o.iter_mut().enumerate() {
                        if idx & (1 << a) != 0 {
                            *slot += half;
                        }
                    }
                    self.collect(c, level - 1, o, out);
                }
            }
        }
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf(_))).count()
    }

    /// Applies one scan: each voxel is updated at most once, and a voxel hit
    /// by any endpoint is never carved in the same scan. Endpoint classes
    /// are fused by majority vote (ties to the lower id).
    pub fn integrate_scan(
        &mut self,
        sensor_origin: &Point3<T>,
        endpoints: &[(Point3<T>, Option<u8>)],
    ) -> Result<InsertSummary> {
        let mut hits: HashMap<VoxelKey, BTreeMap<u8, u32>> = HashMap::new();
        let mut unlabeled_hits: HashSet<VoxelKey> = HashSet::new();
        for (p, class) in endpoints {
            let key = self.key_of(p);
            match class {
                Some(c) => *hits.entry(key).or_default().entry(*c).or_insert(0) += 1,
                None => {
                    unlabeled_hits.insert(key);
                }
            }
        }
        let mut free: HashSet<VoxelKey> = HashSet::new();
        if self.cfg.raycast_free_space {
            let start = self.key_of(sensor_origin);
            for (p, _) in endpoints {
                traverse_ray(sensor_origin, p, self.cfg.resolution, start, self.key_of(p), |k| {
                    free.insert(k);
                });
            }
        }
        let mut summary = InsertSummary {
            points: endpoints.len(),
            ..Default::default()
        };
        let g = self.cfg.surface_guard as i64;
        let mut guarded: HashSet<VoxelKey> = HashSet::new();
        for k in hits.keys().chain(unlabeled_hits.iter()) {
            for dx in -g..=g {
                for dy in -g..=g {
                    for dz in -g..=g {
                        guarded.insert([k[0] + dx, k[1] + dy, k[2] + dz]);
                    }
                }
            }
        }
        let mut free_keys: Vec<VoxelKey> = free.into_iter().filter(|k| !guarded.contains(k)).collect();
        free_keys.sort_unstable();
        for k in &free_keys {
            self.update(k, Observation::Free, None)?;
        }
        summary.free_updates = free_keys.len();

        let mut hit_keys: BTreeMap<VoxelKey, Option<u8>> = unlabeled_hits.into_iter().map(|k| (k, None)).collect();
        for (k, hist) in hits {
            let best = hist
                .iter()
                .fold(None, |b: Option<(u8, u32)>, (&c, &n)| match b {
                    Some((_, bn)) if bn >= n => b,
                    _ => Some((c, n)),
                })
                .map(|(c, _)| c);
            hit_keys.insert(k, best);
        }
        for (k, class) in &hit_keys {
            self.update(k, Observation::Occupied, *class)?;
        }
        summary.occupied_updates = hit_keys.len();
        Ok(summary)
    }

    /// Voxels with occupancy probability above the threshold, in key order.
    pub fn occupied_voxels(&self) -> Vec<OccupiedVoxel<T>> {
        self.leaves()
            .into_iter()
            .filter_map(|(key, s)| {
                let p = s.probability();
                (p > self.cfg.occupancy_threshold).then(|| OccupiedVoxel {
                    key,
                    center: self.center_of(&key),
                    label: s.label(self.cfg.label_fusion).unwrap_or(0),
                    probability: p,
                })
            })
            .collect()
    }

    /// Occupied cells of the voxels whose center height (z) lies in
    /// `[z_min, z_max]`.
    pub fn project_costmap(&self, z_min: T, z_max: T) -> Result<CostMap> {
        project_voxels(&self.occupied_voxels(), self.cfg.resolution, z_min, z_max)
    }
}

/// Visits every voxel crossed by the segment `from → to`, excluding the end
/// voxel, by 3D grid stepping.
pub fn traverse_ray<T: Real>(
    from: &Point3<T>,
    to: &Point3<T>,
    resolution: T,
    start: VoxelKey,
    end: VoxelKey,
    mut visit: impl FnMut(VoxelKey),
) {
    let dir: Vector3<T> = to - from;
    let mut key = start;
    let mut step = [0i64; 3];
    let mut t_max = [T::max_value().unwrap(); 3];
    let mut t_delta = [T::max_value().unwrap(); 3];
    for a in 0..3 {
        if dir[a] > T::zero() {
            step[a] = 1;
            let boundary = T::from_i64(key[a] + 1).unwrap() * resolution;
            t_max[a] = (boundary - from[a]) / dir[a];
            t_delta[a] = resolution / dir[a];
        } else if dir[a] < T::zero() {
            step[a] = -1;
            let boundary = T::from_i64(key[a]).unwrap() * resolution;
            t_max[a] = (boundary - from[a]) / dir[a];
            t_delta[a] = -resolution / dir[a];
        }
    }
    let budget: i64 = (0..3).map(|a| (end[a] - start[a]).abs()).sum::<i64>() + 3;
    for _ in 0..budget {
        if key == end {
            return;
        }
        visit(key);
        let a = if t_max[0] <= t_max[1] && t_max[0] <= t_max[2] {
            0
        } else if t_max[1] <= t_max[2] {
            1
        } else {
            2
        };
        if t_max[a] > T::one() {
            // numerically past the endpoint
            return;
        }
        key[a] += step[a];
        t_max[a] += t_delta[a];
    }
}

/// Back-projects every `stride`-th valid depth pixel of a keyframe into the
/// world and integrates the resulting scan.
///
/// Pixels of moving regions in `dynamic_classes` are skipped. When the
/// keyframe carries a mask but no verdicts (no motion check was possible),
/// every pixel of a dynamic class is skipped.
pub fn insert_keyframe_cloud(
    map: &mut SemanticOctree<f64>,
    kf: &Keyframe,
    k: &CameraIntrinsics<f64>,
    stride: usize,
    dynamic_classes: &BTreeSet<u8>,
) -> Result<InsertSummary> {
    let depth = &kf.depth;
    if depth.raw.is_empty() {
        return Err(Error::Contract("keyframe has no depth image".into()));
    }
    let (w, h) = (depth.width as usize, depth.height as usize);
    if let Some(mask) = &kf.mask {
        if mask.dimensions() != (depth.width, depth.height) {
            return Err(Error::DimensionMismatch {
                expected: (depth.width, depth.height),
                got: mask.dimensions(),
            });
        }
    }
    let mut skip = vec![false; w * h];
    match (&kf.mask, &kf.verdicts) {
        (Some(_), Some(verdicts)) => {
            for v in verdicts.iter() {
                if v.is_moving() && dynamic_classes.contains(&v.region.class_id) {
                    for &(x, y) in &v.region.pixels {
                        skip[y as usize * w + x as usize] = true;
                    }
                }
            }
        }
        (Some(mask), None) => {
            for (s, c) in skip.iter_mut().zip(&mask.labels) {
                *s = dynamic_classes.contains(c);
            }
        }
        (None, _) => {}
    }

    let stride = stride.max(1);
    let mut endpoints = Vec::new();
    let mut skipped = 0;
    for y in (0..h).step_by(stride) {
        for x in (0..w).step_by(stride) {
            let Some(z) = depth.meters_at(x as u32, y as u32) else {
                continue;
            };
            if skip[y * w + x] {
                skipped += 1;
                continue;
            }
            let cam = backproject(&Pixel::new(x as f64, y as f64), z, k)?;
            let class = kf.mask.as_ref().map(|m| m.get(x as u32, y as u32));
            endpoints.push((kf.pose.transform_point(&cam), class));
        }
    }
    let origin = Point3::from(kf.pose.translation);
    let mut summary = map.integrate_scan(&origin, &endpoints)?;
    summary.skipped_dynamic = skipped;
    Ok(summary)
}

/// 2D occupancy grid on the x/y plane. Cell `(i, j)` covers
/// `[origin + i·res, origin + (i+1)·res)` on x and likewise on y.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMap {
    pub resolution: f64,
    pub origin_x: f64,
    pub origin_y: f64,
    pub width: usize,
    pub height: usize,
    pub occupied: Vec<bool>,
}

impl CostMap {
    pub fn is_occupied(&self, i: usize, j: usize) -> bool {
        self.occupied[j * self.width + i]
    }

    pub fn occupied_count(&self) -> usize {
        self.occupied.iter().filter(|&&b| b).count()
    }

    /// Plain PGM; 0 = occupied, 255 = free. The top row is the largest y.
    pub fn to_pgm(&self) -> String {
        let mut out = format!(
            "P2\n# resolution {} origin {} {}\n{} {}\n255\n",
            self.resolution, self.origin_x, self.origin_y, self.width, self.height
        );
        for j in (0..self.height).rev() {
            let row: Vec<&str> = (0..self.width)
                .map(|i| if self.is_occupied(i, j) { "0" } else { "255" })
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }
}

/// Projects occupied voxels with center height in `[z_min, z_max]` onto the
/// ground plane. The grid spans exactly the projected cells.
pub fn project_voxels<T: Real>(voxels: &[OccupiedVoxel<T>], resolution: T, z_min: T, z_max: T) -> Result<CostMap> {
    if !(z_min < z_max) {
        return Err(Error::Domain("costmap band needs z_min < z_max".into()));
    }
    let res = resolution.to_f64_lossy();
    let cells: BTreeSet<(i64, i64)> = voxels
        .iter()
        .filter(|v| v.center.z >= z_min && v.center.z <= z_max)
        .map(|v| {
            (
                (v.center.x.to_f64_lossy() / res).floor() as i64,
                (v.center.y.to_f64_lossy() / res).floor() as i64,
            )
        })
        .collect();
    if cells.is_empty() {
        return Ok(CostMap {
            resolution: res,
            origin_x: 0.0,
            origin_y: 0.0,
            width: 0,
            height: 0,
            occupied: Vec::new(),
        });
    }
    let min_i = cells.iter().map(|c| c.0).min().unwrap();
    let max_i = cells.iter().map(|c| c.0).max().unwrap();
    let min_j = cells.iter().map(|c| c.1).min().unwrap();
    let max_j = cells.iter().map(|c| c.1).max().unwrap();
    let width = (max_i - min_i + 1) as usize;
    let height = (max_j - min_j + 1) as usize;
    let mut occupied = vec![false; width * height];
    for (i, j) in cells {
        occupied[(j - min_j) as usize * width + (i - min_i) as usize] = true;
    }
    Ok(CostMap {
        resolution: res,
        origin_x: min_i as f64 * res,
        origin_y: min_j as f64 * res,
        width,
        height,
        occupied,
    })
}

/// PASCAL VOC color map.
pub fn class_color(class_id: u8) -> [u8; 3] {
    let mut c = class_id;
    let mut rgb = [0u8; 3];
    for shift in (0..8).rev() {
        rgb[0] |= (c & 1) << shift;
        rgb[1] |= ((c >> 1) & 1) << shift;
        rgb[2] |= ((c >> 2) & 1) << shift;
        c >>= 3;
    }
    rgb
}

/// `x y z class_id p` per line.
pub fn format_voxel_points<T: Real>(voxels: &[OccupiedVoxel<T>]) -> String {
    let mut out = String::from("# x y z class_id p\n");
    for v in voxels {
        let _ = writeln!(
            out,
            "{:.4} {:.4} {:.4} {} {:.6}",
            v.center.x.to_f64_lossy(),
            v.center.y.to_f64_lossy(),
            v.center.z.to_f64_lossy(),
            v.label,
            v.probability.to_f64_lossy()
        );
    }
    out
}

pub fn parse_voxel_points(text: &str, origin: &Path) -> Result<Vec<OccupiedVoxel<f64>>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| Error::Parse {
            path: origin.to_path_buf(),
            line: i + 1,
            msg,
        };
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 5 {
            return Err(err(format!("expected 5 fields, found {}", f.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| err(format!("not a number: {s:?}")));
        let label: u8 = f[3].parse().map_err(|_| err(format!("bad class id {:?}", f[3])))?;
        out.push(OccupiedVoxel {
            key: [0; 3],
            center: Point3::new(num(f[0])?, num(f[1])?, num(f[2])?),
            label,
            probability: num(f[4])?,
        });
    }
    Ok(out)
}

/// ASCII PLY with per-vertex class colors.
pub fn format_ply<T: Real>(voxels: &[OccupiedVoxel<T>]) -> String {
    let mut out = format!(
        "ply\nformat ascii 1.0\nelement vertex {}\nproperty float x\nproperty float y\nproperty float z\n\
         property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n",
        voxels.len()
    );
    for v in voxels {
        let [r, g, b] = class_color(v.label);
        let _ = writeln!(
            out,
            "{:.4} {:.4} {:.4} {r} {g} {b}",
            v.center.x.to_f64_lossy(),
            v.center.y.to_f64_lossy(),
            v.center.z.to_f64_lossy()
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rejection::{Motion, RegionVerdict};
    use crate::segmentation::{extract_regions, LabelMask, PERSON};
    use crate::tum_io::{DepthImage, PoseSE3, Timestamp};
    use proptest::prelude::*;
    use std::sync::Arc;

    #[test]
    fn logit_examples() {
        assert_eq!(log_odds(0.5f64).unwrap(), 0.0);
        assert_eq!(probability(0.0f64), 0.5);
        let p = probability(2.55f64);
        assert!((p - 0.927_574).abs() < 1e-5, "{p}");
        assert!(log_odds(0.0f64).is_err() && log_odds(1.0f64).is_err());
        assert!(probability(1e4f64) <= 1.0 && probability(-1e4f64) >= 0.0);
    }

    #[test]
    fn voxel_update_examples() {
        let cfg = MapConfig::<f64>::default();
        let mut s = VoxelState::default();
        for _ in 0..3 {
            s = update_voxel(&s, Observation::Occupied, None, &cfg);
        }
        assert!((s.log_odds - 2.55).abs() < 1e-12);
        assert!((s.probability() - probability(2.55)).abs() < 1e-15);

        let s = update_voxel(&VoxelState::default(), Observation::Free, None, &cfg);
        assert_eq!(s.log_odds, -0.4);

        let mut s = VoxelState::default();
        for _ in 0..100 {
            s.apply(Observation::Occupied, Some(3), &cfg);
        }
        assert_eq!(s.log_odds, 3.5);
        assert_eq!(s.label_counts[&3], 100);
    }

    #[test]
    fn label_ties_go_to_lower_id() {
        let cfg = MapConfig::<f64>::default();
        let mut s = VoxelState::default();
        s.apply(Observation::Occupied, Some(9), &cfg);
        s.apply(Observation::Occupied, Some(4), &cfg);
        assert_eq!(s.label(LabelFusion::Counts), Some(4));
        s.apply(Observation::Occupied, Some(9), &cfg);
        assert_eq!(s.label(LabelFusion::Counts), Some(9));
    }

    #[test]
    fn log_odds_label_fusion() {
        let cfg = MapConfig::<f64> {
            label_fusion: LabelFusion::LogOdds,
            ..Default::default()
        };
        let mut s = VoxelState::default();
        s.apply(Observation::Occupied, Some(9), &cfg);
        s.apply(Observation::Occupied, Some(4), &cfg);
        s.apply(Observation::Occupied, Some(4), &cfg);
        assert_eq!(s.label(LabelFusion::LogOdds), Some(4));
        assert!(s.label_log_odds[&9] < s.label_log_odds[&4]);
    }

    #[test]
    fn octree_grows_and_keeps_leaves() {
        let mut map = SemanticOctree::new(MapConfig::<f64>::hits_only()).unwrap();
        let keys = [[0, 0, 0], [5, -3, 2], [-17, 40, 1], [1000, 0, -1000]];
        for k in &keys {
            map.update(k, Observation::Occupied, Some(1)).unwrap();
        }
        map.update(&keys[1], Observation::Occupied, Some(1)).unwrap();
        let leaves = map.leaves();
        assert_eq!(leaves.len(), 4);
        for k in &keys {
            assert!(map.get(k).is_some());
        }
        assert!((map.get(&keys[1]).unwrap().log_odds - 1.7).abs() < 1e-12);
        assert!(map.get(&[1, 1, 1]).is_none());
        // depth is the smallest power of two covering the key span
        let span = 2017f64;
        assert_eq!(map.depth(), span.log2().ceil() as u32);
        assert!(map.extent() >= span * 0.05);
    }

    #[test]
    fn ray_traversal_visits_contiguous_cells() {
        let from = Point3::new(0.01, 0.02, 0.03);
        let to = Point3::new(0.93, -0.41, 0.27);
        let res = 0.1;
        let key = |p: &Point3<f64>| {
            [
                (p.x / res).floor() as i64,
                (p.y / res).floor() as i64,
                (p.z / res).floor() as i64,
            ]
        };
        let mut cells = Vec::new();
        traverse_ray(&from, &to, res, key(&from), key(&to), |k| cells.push(k));
        assert_eq!(cells[0], key(&from));
        assert!(!cells.contains(&key(&to)));
        for w in cells.windows(2) {
            let d: i64 = (0..3).map(|a| (w[0][a] - w[1][a]).abs()).sum();
            assert_eq!(d, 1);
        }
        let last = cells.last().unwrap();
        let d: i64 = (0..3).map(|a| (last[a] - key(&to)[a]).abs()).sum();
        assert_eq!(d, 1);
        // brute force: dense samples along the segment hit only visited cells
        for i in 0..1000 {
            let t = i as f64 / 1000.0;
            let p = from + (to - from) * t;
            let k = key(&p);
            assert!(cells.contains(&k) || k == key(&to));
        }
    }

    fn single_pixel_keyframe(
        w: u32,
        h: u32,
        mask: Option<LabelMask>,
        verdicts: Option<Vec<RegionVerdict>>,
    ) -> Keyframe {
        let mut depth = DepthImage::zeros(w, h, 5000.0);
        depth.raw[(h / 2 * w + w / 2) as usize] = 5000;
        Keyframe {
            frame_id: 0,
            timestamp: Timestamp(0.0),
            pose: PoseSE3::identity(),
            depth: Arc::new(depth),
            mask: mask.map(Arc::new),
            verdicts: verdicts.map(Arc::new),
        }
    }

    fn intrinsics(w: u32, h: u32) -> CameraIntrinsics<f64> {
        CameraIntrinsics::new(100.0, 100.0, (w / 2) as f64, (h / 2) as f64).unwrap()
    }

    #[test]
    fn single_point_insertion() {
        let mut map = SemanticOctree::new(MapConfig::<f64>::hits_only()).unwrap();
        let kf = single_pixel_keyframe(9, 7, None, None);
        let s = insert_keyframe_cloud(&mut map, &kf, &intrinsics(9, 7), 1, &BTreeSet::new()).unwrap();
        assert_eq!(s.occupied_updates, 1);
        assert_eq!(map.leaves().len(), 1);
        assert_eq!(map.leaves()[0].0, map.key_of(&Point3::new(0.0, 0.0, 1.0)));

        for k in 2..=6usize {
            insert_keyframe_cloud(&mut map, &kf, &intrinsics(9, 7), 1, &BTreeSet::new()).unwrap();
            let l = map.leaves()[0].1.log_odds;
            assert!((l - (k as f64 * 0.85).min(3.5)).abs() < 1e-12);
        }
    }

    #[test]
    fn raycast_carves_free_space_before_the_hit() {
        let cfg = MapConfig::<f64> {
            surface_guard: 0,
            ..MapConfig::default()
        };
        let mut map = SemanticOctree::new(cfg).unwrap();
        let kf = single_pixel_keyframe(9, 7, None, None);
        let s = insert_keyframe_cloud(&mut map, &kf, &intrinsics(9, 7), 1, &BTreeSet::new()).unwrap();
        assert_eq!(s.occupied_updates, 1);
        assert_eq!(s.free_updates, 20); // z in [0, 1) at 0.05
                                        // a single hit (p = 0.7006) clears the default 0.7 threshold
        let occ = map.occupied_voxels();
        assert_eq!(occ.len(), 1);
        assert_eq!(occ[0].key, [0, 0, 20]);
        let free: Vec<_> = map.leaves().into_iter().filter(|(_, s)| s.log_odds < 0.0).collect();
        assert_eq!(free.len(), 20);
        assert!(free.iter().all(|(k, s)| k[0] == 0 && k[1] == 0 && s.log_odds == -0.4));

        // a second scan whose ray passes through the old endpoint carves it
        let mut far = single_pixel_keyframe(9, 7, None, None);
        Arc::make_mut(&mut far.depth).raw[(7 / 2 * 9 + 9 / 2) as usize] = 10000;
        insert_keyframe_cloud(&mut map, &far, &intrinsics(9, 7), 1, &BTreeSet::new()).unwrap();
        let l = map.get(&[0, 0, 20]).unwrap().log_odds;
        assert!((l - 0.45).abs() < 1e-12);
        assert!(map.occupied_voxels().iter().all(|v| v.key != [0, 0, 20]));
    }

    #[test]
    fn surface_guard_spares_voxels_next_to_the_hit() {
        let mut map = SemanticOctree::new(MapConfig::<f64>::default()).unwrap();
        let kf = single_pixel_keyframe(9, 7, None, None);
        let s = insert_keyframe_cloud(&mut map, &kf, &intrinsics(9, 7), 1, &BTreeSet::new()).unwrap();
        assert_eq!(s.free_updates, 18);
        assert!(map.get(&[0, 0, 18]).is_none() && map.get(&[0, 0, 19]).is_none());
        assert_eq!(map.get(&[0, 0, 17]).unwrap().log_odds, -0.4);
    }

    #[test]
    fn moving_person_pixels_are_skipped() {
        let (w, h) = (9, 7);
        let mut mask = LabelMask::background(w, h);
        for y in 0..h {
            for x in 2..7 {
                mask.set(x, y, PERSON);
            }
        }
        let region = extract_regions(&mask, 1).remove(0);
        let dyn_classes = BTreeSet::from([PERSON]);
        let moving = vec![RegionVerdict {
            region: region.clone(),
            dynamic_count: 5,
            verdict: Motion::Moving,
        }];
        let mut map = SemanticOctree::new(MapConfig::<f64>::hits_only()).unwrap();
        let kf = single_pixel_keyframe(w, h, Some(mask.clone()), Some(moving));
        let s = insert_keyframe_cloud(&mut map, &kf, &intrinsics(w, h), 1, &dyn_classes).unwrap();
        assert_eq!((s.occupied_updates, s.skipped_dynamic), (0, 1));
        assert!(map.leaves().is_empty());

        // no verdicts: dynamic classes withheld
        let kf = single_pixel_keyframe(w, h, Some(mask.clone()), None);
        let s = insert_keyframe_cloud(&mut map, &kf, &intrinsics(w, h), 1, &dyn_classes).unwrap();
        assert_eq!(s.occupied_updates, 0);

        // static person is mapped with its label
        let still = vec![RegionVerdict {
            region,
            dynamic_count: 0,
            verdict: Motion::Static,
        }];
        let kf = single_pixel_keyframe(w, h, Some(mask), Some(still));
        let s = insert_keyframe_cloud(&mut map, &kf, &intrinsics(w, h), 1, &dyn_classes).unwrap();
        assert_eq!(s.occupied_updates, 1);
        assert_eq!(map.leaves()[0].1.label(LabelFusion::Counts), Some(PERSON));
    }

    #[test]
    fn occupied_threshold_examples() {
        let mut map = SemanticOctree::new(MapConfig::<f64>::hits_only()).unwrap();
        assert!(map.occupied_voxels().is_empty());
        for _ in 0..3 {
            map.update(&[0, 0, 0], Observation::Occupied, Some(7)).unwrap();
        }
        map.update(&[4, 0, 0], Observation::Occupied, Some(7)).unwrap();
        let occ = map.occupied_voxels();
        // 0.7006 > 0.7 keeps the single hit at the default threshold
        assert_eq!(occ.len(), 2);
        assert!((occ[0].probability - 0.927_574).abs() < 1e-5);

        let strict = SemanticOctree {
            cfg: MapConfig {
                occupancy_threshold: 0.71,
                ..MapConfig::hits_only()
            },
            ..map.clone()
        };
        let occ = strict.occupied_voxels();
        assert_eq!(occ.len(), 1);
        assert_eq!(occ[0].key, [0, 0, 0]);
        assert_eq!(occ[0].label, 7);
    }

    fn voxel(x: f64, y: f64, z: f64) -> OccupiedVoxel<f64> {
        OccupiedVoxel {
            key: [0; 3],
            center: Point3::new(x, y, z),
            label: 1,
            probability: 0.9,
        }
    }

    #[test]
    fn costmap_examples() {
        let one = [voxel(0.125, 0.125, 0.5)];
        let grid = project_voxels(&one, 0.05, 0.1, 1.5).unwrap();
        assert_eq!(grid.occupied_count(), 1);
        let grid = project_voxels(&one, 0.05, 1.0, 1.5).unwrap();
        assert_eq!(grid.occupied_count(), 0);
        let stacked = [voxel(0.125, 0.125, 0.525), voxel(0.125, 0.125, 0.575)];
        let grid = project_voxels(&stacked, 0.05, 0.1, 1.5).unwrap();
        assert_eq!((grid.width, grid.height, grid.occupied_count()), (1, 1, 1));
        assert!(project_voxels(&one, 0.05, 1.0, 1.0).is_err());
        let pgm = grid.to_pgm();
        assert!(pgm.starts_with("P2\n# resolution 0.05 origin"));
        assert!(pgm.ends_with("0\n"));
    }

    #[test]
    fn exports_roundtrip_and_palette() {
        assert_eq!(class_color(0), [0, 0, 0]);
        assert_eq!(class_color(15), [192, 128, 128]);
        let vox = vec![voxel(0.1, 0.2, 0.3), voxel(-1.0, 2.0, 0.5)];
        let text = format_voxel_points(&vox);
        let back = parse_voxel_points(&text, Path::new("m")).unwrap();
        assert_eq!(back.len(), 2);
        assert!((back[1].center - vox[1].center).norm() < 1e-4);
        let ply = format_ply(&vox);
        assert!(ply.contains("element vertex 2"));
        assert_eq!(ply.lines().count(), 10 + 2);
    }

    proptest! {
        #[test]
        fn log_odds_stays_clamped(obs in prop::collection::vec(any::<bool>(), 0..200)) {
            let cfg = MapConfig::<f64>::default();
            let mut s = VoxelState::default();
            for o in obs {
                s.apply(if o { Observation::Occupied } else { Observation::Free }, Some(o as u8), &cfg);
                prop_assert!(s.log_odds >= cfg.l_min && s.log_odds <= cfg.l_max);
            }
            if let Some(l) = s.label(LabelFusion::Counts) {
                prop_assert!(s.label_counts.contains_key(&l));
            }
        }

        #[test]
        fn logit_roundtrip(p in 0.001f64..0.999) {
            prop_assert!((probability(log_odds(p).unwrap()) - p).abs() < 1e-12);
        }
    }
}
