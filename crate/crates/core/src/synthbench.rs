//! Deterministic synthetic RGB-D sequences: a textured box room, a camera on
//! a scripted path and an optional labeled plane moving on its own.
//!
//! The world frame is the camera frame at time zero of a camera with
//! `x` right, `y` down and `z` forward. Every frame comes with exact depth,
//! an exact label mask and the exact camera pose, and the sequence can
//! answer where any pixel's surface point lands in another frame.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use image::{Rgb, RgbImage};
use nalgebra::{Matrix3, Point3, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::epipolar::FundamentalMatrix;
use crate::error::{Error, Result};
use crate::features::Pixel;
use crate::odometry::{CameraConfig, CameraIntrinsics};
use crate::segmentation::{save_mask, ClassTable, LabelMask, BACKGROUND, PERSON};
use crate::tum_io::{
    format_image_list, format_trajectory, save_depth, ListEntry, PoseSE3, Timestamp, Trajectory, DEFAULT_DEPTH_SCALE,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoomSpec {
    /// Side walls at `x = ±half_width`.
    pub half_width: f64,
    pub floor_y: f64,
    pub ceiling_y: f64,
    pub back_z: f64,
    /// Near end of floor, ceiling and side walls (behind the camera).
    pub front_z: f64,
}

impl Default for RoomSpec {
    fn default() -> Self {
        Self {
            half_width: 1.5,
            floor_y: 1.0,
            ceiling_y: -1.2,
            back_z: 3.0,
            front_z: -1.0,
        }
    }
}

/// Camera pose at frame `i`: position `start + i·velocity`, yaw
/// `yaw_amplitude · sin(2πi / yaw_period)` about the vertical axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraPath {
    pub start: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub yaw_amplitude: f64,
    pub yaw_period: f64,
}

impl Default for CameraPath {
    fn default() -> Self {
        Self {
            start: Vector3::zeros(),
            velocity: Vector3::new(0.01, 0.0, 0.0),
            yaw_amplitude: 0.0,
            yaw_period: 60.0,
        }
    }
}

/// Labeled rectangle, turned by `yaw` radians about the vertical axis
/// (0 is fronto-parallel to the back wall). Its center at frame `i` is
/// `center + (camera shift if follow_camera) + s(i)·direction`, where `s`
/// is a triangle wave advancing `speed` meters every frame and reversing
/// every `period / 2` frames (`period == 0` never reverses).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectSpec {
    pub class_id: u8,
    pub width: f64,
    pub height: f64,
    pub center: Point3<f64>,
    pub follow_camera: bool,
    pub direction: Vector3<f64>,
    pub speed: f64,
    pub period: usize,
    pub yaw: f64,
}

impl Default for ObjectSpec {
    fn default() -> Self {
        Self {
            class_id: PERSON,
            width: 0.5,
            height: 0.7,
            center: Point3::new(0.0, 0.05, 1.6),
            follow_camera: true,
            direction: Vector3::new(0.0, 1.0, 0.0),
            speed: 0.04,
            period: 20,
            yaw: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub seed: u64,
    pub width: u32,
    pub height: u32,
    pub intrinsics: CameraIntrinsics<f64>,
    pub depth_scale: f64,
    pub frames: usize,
    pub start_time: f64,
    pub frame_interval: f64,
    pub room: RoomSpec,
    pub camera: CameraPath,
    pub object: Option<ObjectSpec>,
    /// Value-noise cell sizes in meters, one octave each.
    pub texture_cells: Vec<f64>,
    /// Subsamples per pixel edge for the color image.
    pub supersample: u32,
    /// Gaussian depth noise in meters; 0 disables it.
    pub depth_noise_sigma: f64,
    /// Grow (> 0) or shrink (< 0) the object mask by this many pixels.
    pub mask_morph: i32,
}

impl SceneSpec {
    /// Translating camera, empty room.
    pub fn static_room(frames: usize) -> Self {
        Self {
            seed: 7,
            width: 320,
            height: 240,
            intrinsics: CameraIntrinsics {
                fx: 260.0,
                fy: 260.0,
                cx: 159.5,
                cy: 119.5,
            },
            depth_scale: DEFAULT_DEPTH_SCALE,
            frames,
            start_time: 1.0,
            frame_interval: 1.0 / 30.0,
            room: RoomSpec::default(),
            camera: CameraPath::default(),
            object: None,
            texture_cells: vec![0.04, 0.08, 0.16],
            supersample: 2,
            depth_noise_sigma: 0.0,
            mask_morph: 0,
        }
    }

    /// Translating camera plus a person-labeled plane moving up and down
    /// in front of the back wall, covering about 12% of the image.
    pub fn moving_object(frames: usize) -> Self {
        Self {
            object: Some(ObjectSpec::default()),
            ..Self::static_room(frames)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let r = &self.room;
        let bad = |m: &str| Err(Error::Config(format!("scene spec: {m}")));
        if self.frames == 0 {
            return bad("empty camera path");
        }
        if self.width < 8 || self.height < 8 {
            return bad("image too small");
        }
        if !(r.half_width > 0.0 && r.floor_y > r.ceiling_y && r.back_z > r.front_z) {
            return bad("zero-size room");
        }
        if !(self.frame_interval > 0.0 && self.depth_scale > 0.0 && self.supersample >= 1) {
            return bad("non-positive interval, depth scale or supersampling");
        }
        if self.texture_cells.is_empty() || self.texture_cells.iter().any(|&c| !(c > 0.0)) {
            return bad("texture cells must be positive");
        }
        if let Some(o) = &self.object {
            if !(o.width > 0.0 && o.height > 0.0) {
                return bad("zero-size object");
            }
            if o.class_id == BACKGROUND || !ClassTable::pascal_voc().contains(o.class_id) {
                return bad("object class not in the class table");
            }
        }
        CameraIntrinsics::new(
            self.intrinsics.fx,
            self.intrinsics.fy,
            self.intrinsics.cx,
            self.intrinsics.cy,
        )?;
        Ok(())
    }

    pub fn camera_pose(&self, i: usize) -> PoseSE3<f64> {
        let c = &self.camera;
        let yaw = if c.yaw_period > 0.0 {
            c.yaw_amplitude * (2.0 * std::f64::consts::PI * i as f64 / c.yaw_period).sin()
        } else {
            0.0
        };
        PoseSE3::new(
            c.start + c.velocity * i as f64,
            UnitQuaternion::from_axis_angle(&Vector3::y_axis(), yaw),
        )
    }

    pub fn timestamp(&self, i: usize) -> Timestamp {
        Timestamp(self.start_time + i as f64 * self.frame_interval)
    }

    /// Object center at frame `i`, if there is an object.
    pub fn object_center(&self, i: usize) -> Option<Point3<f64>> {
        let o = self.object.as_ref()?;
        let s = if o.period < 2 {
            o.speed * i as f64
        } else {
            let half = o.period / 2;
            let phase = i % (2 * half);
            let steps = if phase <= half { phase } else { 2 * half - phase };
            o.speed * (steps as f64 - half as f64 / 2.0)
        };
        let mut c = o.center + o.direction * s;
        if o.follow_camera {
            c += self.camera_pose(i).translation - self.camera_pose(0).translation;
        }
        Some(c)
    }
}

/// Which generating surface a pixel sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Surface {
    Back,
    Floor,
    Ceiling,
    Left,
    Right,
    Object,
}

const WALLS: [Surface; 5] = [
    Surface::Back,
    Surface::Floor,
    Surface::Ceiling,
    Surface::Left,
    Surface::Right,
];

#[derive(Debug, Clone, Copy)]
struct Quad {
    surface: Surface,
    origin: Point3<f64>,
    axis_a: Vector3<f64>,
    axis_b: Vector3<f64>,
    extent_a: f64,
    extent_b: f64,
    normal: Vector3<f64>,
}

impl Quad {
    fn new(surface: Surface, origin: Point3<f64>, a: Vector3<f64>, b: Vector3<f64>) -> Self {
        Self {
            surface,
            origin,
            axis_a: a.normalize(),
            axis_b: b.normalize(),
            extent_a: a.norm(),
            extent_b: b.norm(),
            normal: a.cross(&b).normalize(),
        }
    }

    /// Ray parameter and surface coordinates of the hit, if any.
    fn intersect(&self, o: &Point3<f64>, d: &Vector3<f64>) -> Option<(f64, f64, f64)> {
        let denom = self.normal.dot(d);
        if denom.abs() < 1e-12 {
            return None;
        }
        let t = self.normal.dot(&(self.origin - o)) / denom;
        if t <= 1e-9 {
            return None;
        }
        let rel = o + d * t - self.origin;
        let a = rel.dot(&self.axis_a);
        let b = rel.dot(&self.axis_b);
        (a >= 0.0 && a <= self.extent_a && b >= 0.0 && b <= self.extent_b).then_some((t, a, b))
    }
}

/// Ray hit on a generating surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceHit {
    pub surface: Surface,
    /// World point.
    pub point: Point3<f64>,
    /// Depth along the camera's optical axis.
    pub depth: f64,
    /// Surface-local coordinates in meters (texture space).
    pub local: (f64, f64),
}

#[derive(Debug, Clone)]
pub struct SyntheticFrameBundle {
    pub index: usize,
    pub timestamp: Timestamp,
    pub rgb: RgbImage,
    pub depth: crate::tum_io::DepthImage,
    pub mask: LabelMask,
    pub pose: PoseSE3<f64>,
    /// Pixels whose center ray hits the object, in raster order.
    pub object_pixels: Vec<(u32, u32)>,
}

#[derive(Debug, Clone)]
pub struct SyntheticSequence {
    pub spec: SceneSpec,
    pub frames: Vec<SyntheticFrameBundle>,
    pub groundtruth: Trajectory<f64>,
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn lattice(seed: u64, ix: i64, iy: i64) -> f64 {
    let h = splitmix(seed ^ splitmix((ix as u64).wrapping_mul(0x1000_0000_01B3) ^ (iy as u64).rotate_left(29)));
    (h >> 11) as f64 / (1u64 << 53) as f64
}

fn value_noise(seed: u64, x: f64, y: f64) -> f64 {
    let (fx, fy) = (x.floor(), y.floor());
    let (ix, iy) = (fx as i64, fy as i64);
    let (tx, ty) = (x - fx, y - fy);
    let v00 = lattice(seed, ix, iy);
    let v10 = lattice(seed, ix + 1, iy);
    let v01 = lattice(seed, ix, iy + 1);
    let v11 = lattice(seed, ix + 1, iy + 1);
    let top = v00 + (v10 - v00) * tx;
    let bottom = v01 + (v11 - v01) * tx;
    top + (bottom - top) * ty
}

/// Renderer state for one spec.
struct Scene<'a> {
    spec: &'a SceneSpec,
    walls: Vec<Quad>,
}

impl<'a> Scene<'a> {
    fn new(spec: &'a SceneSpec) -> Self {
        let r = &spec.room;
        let (w, fy, cy, bz, fz) = (r.half_width, r.floor_y, r.ceiling_y, r.back_z, r.front_z);
        let walls = vec![
            Quad::new(
                Surface::Back,
                Point3::new(-w, cy, bz),
                Vector3::new(2.0 * w, 0.0, 0.0),
                Vector3::new(0.0, fy - cy, 0.0),
            ),
            Quad::new(
                Surface::Floor,
                Point3::new(-w, fy, fz),
                Vector3::new(2.0 * w, 0.0, 0.0),
                Vector3::new(0.0, 0.0, bz - fz),
            ),
            Quad::new(
                Surface::Ceiling,
                Point3::new(-w, cy, fz),
                Vector3::new(2.0 * w, 0.0, 0.0),
                Vector3::new(0.0, 0.0, bz - fz),
            ),
            Quad::new(
                Surface::Left,
                Point3::new(-w, cy, fz),
                Vector3::new(0.0, 0.0, bz - fz),
                Vector3::new(0.0, fy - cy, 0.0),
            ),
            Quad::new(
                Surface::Right,
                Point3::new(w, cy, fz),
                Vector3::new(0.0, 0.0, bz - fz),
                Vector3::new(0.0, fy - cy, 0.0),
            ),
        ];
        Self { spec, walls }
    }

    fn object_quad(&self, frame: usize) -> Option<Quad> {
        let o = self.spec.object.as_ref()?;
        let c = self.spec.object_center(frame)?;
        let across = Vector3::new(o.yaw.cos(), 0.0, -o.yaw.sin()) * o.width;
        let down = Vector3::new(0.0, o.height, 0.0);
        Some(Quad::new(Surface::Object, c - across / 2.0 - down / 2.0, across, down))
    }

    fn cast(&self, object: Option<&Quad>, pose: &PoseSE3<f64>, u: f64, v: f64) -> Option<SurfaceHit> {
        let k = &self.spec.intrinsics;
        let d_cam = Vector3::new((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
        let d = pose.rotation * d_cam;
        let o = Point3::from(pose.translation);
        let mut best: Option<(f64, f64, f64, Surface)> = None;
        for q in self.walls.iter().chain(object) {
            if let Some((t, a, b)) = q.intersect(&o, &d) {
                if best.is_none_or(|(bt, ..)| t < bt) {
                    best = Some((t, a, b, q.surface));
                }
            }
        }
        best.map(|(t, a, b, surface)| SurfaceHit {
            surface,
            point: o + d * t,
            depth: t,
            local: (a, b),
        })
    }

    fn intensity(&self, hit: &SurfaceHit) -> u8 {
        let plane_seed = match hit.surface {
            Surface::Back => 1,
            Surface::Floor => 2,
            Surface::Ceiling => 3,
            Surface::Left => 4,
            Surface::Right => 5,
            Surface::Object => 6,
        };
        let base = splitmix(self.spec.seed ^ (plane_seed << 32));
        let mut sum = 0.0;
        let mut weight = 0.0;
        for (octave, &cell) in self.spec.texture_cells.iter().enumerate() {
            let w = 1.0 / (octave as f64 + 1.0);
            sum += w * value_noise(splitmix(base + octave as u64), hit.local.0 / cell, hit.local.1 / cell);
            weight += w;
        }
        let mean_level = if hit.surface == Surface::Object { 0.35 } else { 0.5 };
        let value = mean_level + 1.6 * (sum / weight - 0.5);
        (20.0 + 215.0 * value.clamp(0.0, 1.0)).round() as u8
    }

    fn render(&self, i: usize) -> Result<SyntheticFrameBundle> {
        let spec = self.spec;
        let (w, h) = (spec.width, spec.height);
        let pose = spec.camera_pose(i);
        let object = self.object_quad(i);
        let mut rgb = RgbImage::new(w, h);
        let mut raw = vec![0u16; (w * h) as usize];
        let mut mask = LabelMask::background(w, h);
        let mut object_pixels = Vec::new();
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix(spec.seed ^ (i as u64).wrapping_mul(0xA24B_AED4_963E_E407)));
        let ss = spec.supersample;
        for y in 0..h {
            for x in 0..w {
                let center = self.cast(object.as_ref(), &pose, x as f64, y as f64);
                if let Some(hit) = &center {
                    let mut z = hit.depth;
                    if spec.depth_noise_sigma > 0.0 {
                        let (u1, u2): (f64, f64) = (rng.gen::<f64>().max(1e-300), rng.gen());
                        z += spec.depth_noise_sigma * (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
                    }
                    raw[(y * w + x) as usize] = (z * spec.depth_scale).round().clamp(0.0, u16::MAX as f64) as u16;
                    if hit.surface == Surface::Object {
                        mask.set(x, y, spec.object.as_ref().map_or(BACKGROUND, |o| o.class_id));
                        object_pixels.push((x, y));
                    }
                }
                let mut acc = 0u32;
                let mut n = 0u32;
                for sy in 0..ss {
                    for sx in 0..ss {
                        let du = (sx as f64 + 0.5) / ss as f64 - 0.5;
                        let dv = (sy as f64 + 0.5) / ss as f64 - 0.5;
                        let hit = if ss == 1 {
                            center
                        } else {
                            self.cast(object.as_ref(), &pose, x as f64 + du, y as f64 + dv)
                        };
                        if let Some(hit) = hit {
                            acc += self.intensity(&hit) as u32;
                            n += 1;
                        }
                    }
                }
                let g = (acc + n / 2).checked_div(n).unwrap_or(0) as u8;
                rgb.put_pixel(x, y, Rgb([g, g, g]));
            }
        }
        if spec.mask_morph != 0 {
            if let Some(o) = &spec.object {
                morph_mask(&mut mask, o.class_id, spec.mask_morph);
            }
        }
        Ok(SyntheticFrameBundle {
            index: i,
            timestamp: spec.timestamp(i),
            rgb,
            depth: crate::tum_io::DepthImage::new(w, h, raw, spec.depth_scale)?,
            mask,
            pose,
            object_pixels,
        })
    }
}

/// 4-neighborhood dilation (`steps > 0`) or erosion (`steps < 0`) of one
/// class in place.
fn morph_mask(mask: &mut LabelMask, class_id: u8, steps: i32) {
    let (w, h) = mask.dimensions();
    for _ in 0..steps.unsigned_abs() {
        let before = mask.clone();
        for y in 0..h {
            for x in 0..w {
                let neighbors = [(x.wrapping_sub(1), y), (x + 1, y), (x, y.wrapping_sub(1)), (x, y + 1)];
                let touching = |want: bool| {
                    neighbors
                        .iter()
                        .any(|&(nx, ny)| nx < w && ny < h && (before.get(nx, ny) == class_id) == want)
                };
                let is_obj = before.get(x, y) == class_id;
                if steps > 0 && !is_obj && touching(true) {
                    mask.set(x, y, class_id);
                } else if steps < 0 && is_obj && touching(false) {
                    mask.set(x, y, BACKGROUND);
                }
            }
        }
    }
}

/// Renders every frame of `spec`. Frames are rendered in parallel; the
/// output is identical to a sequential render.
pub fn generate_scene(spec: &SceneSpec) -> Result<SyntheticSequence> {
    spec.validate()?;
    let scene = Scene::new(spec);
    let workers = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(spec.frames);
    let mut slots: Vec<Option<Result<SyntheticFrameBundle>>> = (0..spec.frames).map(|_| None).collect();
    std::thread::scope(|s| {
        let chunk = spec.frames.div_ceil(workers);
        for (c, out) in slots.chunks_mut(chunk).enumerate() {
            let scene = &scene;
            s.spawn(move || {
                for (k, slot) in out.iter_mut().enumerate() {
                    *slot = Some(scene.render(c * chunk + k));
                }
            });
        }
    });
    let frames = slots
        .into_iter()
        .map(|s| s.expect("every frame rendered"))
        .collect::<Result<Vec<_>>>()?;
    let groundtruth = Trajectory::from_entries(frames.iter().map(|f| (f.timestamp, f.pose)).collect())?;
    Ok(SyntheticSequence {
        spec: spec.clone(),
        frames,
        groundtruth,
    })
}

impl SyntheticSequence {
    fn scene(&self) -> Scene<'_> {
        Scene::new(&self.spec)
    }

    /// Surface seen through pixel `p` of frame `i`.
    pub fn surface_at(&self, i: usize, p: &Pixel<f64>) -> Option<SurfaceHit> {
        let scene = self.scene();
        let obj = scene.object_quad(i);
        scene.cast(obj.as_ref(), &self.spec.camera_pose(i), p.u, p.v)
    }

    /// Where the surface point seen at `p` in frame `i` projects in frame
    /// `j`, moving with the object if it lies on it. Occlusion in frame `j`
    /// is not checked.
    pub fn true_correspondence(&self, i: usize, j: usize, p: &Pixel<f64>) -> Option<(Pixel<f64>, Surface)> {
        let hit = self.surface_at(i, p)?;
        let mut world = hit.point;
        if hit.surface == Surface::Object {
            world += self.spec.object_center(j)? - self.spec.object_center(i)?;
        }
        let cam = self.spec.camera_pose(j).inverse().transform_point(&world);
        if cam.z <= 0.0 {
            return None;
        }
        Some((self.spec.intrinsics.project(&cam), hit.surface))
    }

    /// Fundamental matrix of the static scene between frames `i` and `j`
    /// with `p_jᵀ F p_i = 0`.
    pub fn true_fundamental(&self, i: usize, j: usize) -> Result<FundamentalMatrix<f64>> {
        let rel = self.spec.camera_pose(j).inverse().compose(&self.spec.camera_pose(i));
        let t = rel.translation;
        if t.norm() < 1e-12 {
            return Err(Error::Degenerate("no camera translation between frames".into()));
        }
        let r = rel.rotation.to_rotation_matrix().into_inner();
        let e = t.cross_matrix() * r;
        let k = &self.spec.intrinsics;
        let kinv = Matrix3::new(
            1.0 / k.fx,
            0.0,
            -k.cx / k.fx,
            0.0,
            1.0 / k.fy,
            -k.cy / k.fy,
            0.0,
            0.0,
            1.0,
        );
        FundamentalMatrix::rank2_normalized(kinv.transpose() * e * kinv)
    }

    pub fn camera_config(&self) -> CameraConfig {
        CameraConfig {
            intrinsics: self.spec.intrinsics,
            depth_scale: self.spec.depth_scale,
        }
    }
}

/// Paths written by [`write_as_tum`].
#[derive(Debug, Clone, PartialEq)]
pub struct TumLayout {
    pub root: PathBuf,
    pub masks: PathBuf,
    pub intrinsics: PathBuf,
    pub classes: PathBuf,
}

pub const INTRINSICS_FILE: &str = "intrinsics.txt";
pub const CLASSES_FILE: &str = "classes.txt";

/// Writes the sequence as a TUM-layout directory: `rgb/`, `depth/`,
/// `masks/`, `rgb.txt`, `depth.txt`, `groundtruth.txt`, plus the camera
/// intrinsics and the class table.
pub fn write_as_tum(seq: &SyntheticSequence, dir: impl AsRef<Path>) -> Result<TumLayout> {
    let root = dir.as_ref().to_path_buf();
    for sub in ["rgb", "depth", "masks"] {
        let p = root.join(sub);
        std::fs::create_dir_all(&p).map_err(|e| Error::io(&p, e))?;
    }
    let mut rgb_list = Vec::new();
    let mut depth_list = Vec::new();
    for f in &seq.frames {
        let name = format!("{:.6}.png", f.timestamp.0);
        let rgb_rel = format!("rgb/{name}");
        let depth_rel = format!("depth/{name}");
        let path = root.join(&rgb_rel);
        f.rgb.save(&path).map_err(|e| Error::image(&path, e))?;
        save_depth(&f.depth, root.join(&depth_rel))?;
        save_mask(&f.mask, root.join("masks").join(&name))?;
        rgb_list.push(ListEntry {
            timestamp: f.timestamp,
            file: rgb_rel,
        });
        depth_list.push(ListEntry {
            timestamp: f.timestamp,
            file: depth_rel,
        });
    }
    let write = |name: &str, text: String| -> Result<PathBuf> {
        let p = root.join(name);
        std::fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
        Ok(p)
    };
    write(
        "rgb.txt",
        format_image_list(&rgb_list, "color images\ntimestamp filename"),
    )?;
    write(
        "depth.txt",
        format_image_list(&depth_list, "depth maps\ntimestamp filename"),
    )?;
    write(
        "groundtruth.txt",
        format!(
            "# ground truth trajectory\n# timestamp tx ty tz qx qy qz qw\n{}",
            format_trajectory(&seq.groundtruth)
        ),
    )?;
    let intrinsics = write(INTRINSICS_FILE, seq.camera_config().format())?;
    let classes = write(CLASSES_FILE, ClassTable::pascal_voc().format())?;
    Ok(TumLayout {
        masks: root.join("masks"),
        root,
        intrinsics,
        classes,
    })
}

/// The class table written next to every synthetic dataset.
pub fn synthetic_classes() -> Arc<ClassTable> {
    Arc::new(ClassTable::pascal_voc())
}

/// True for the room surfaces.
pub fn is_wall(s: Surface) -> bool {
    WALLS.contains(&s)
}
