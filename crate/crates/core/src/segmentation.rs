//! Per-frame label masks, their connected regions, and the mask provider.
//!
//! Masks are 8-bit single channel PNGs whose pixel value is a class id
//! (PASCAL VOC indexing, 0 = background). A mask lives under `masks/` with
//! the same file name as its RGB image.

use std::collections::{BTreeMap, VecDeque};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::sync::Arc;
use std::thread;

use crate::error::{Error, Result};
use crate::features::Pixel;
use crate::scalar::Real;
use crate::tum_io::Timestamp;

pub const BACKGROUND: u8 = 0;
pub const PERSON: u8 = 15;
pub const DEFAULT_MIN_REGION_AREA: usize = 100;

const VOC_CLASSES: [&str; 21] = [
    "background",
    "aeroplane",
    "bicycle",
    "bird",
    "boat",
    "bottle",
    "bus",
    "car",
    "cat",
    "chair",
    "cow",
    "diningtable",
    "dog",
    "horse",
    "motorbike",
    "person",
    "pottedplant",
    "sheep",
    "sofa",
    "train",
    "tvmonitor",
];

/// Class id → name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassTable {
    names: BTreeMap<u8, String>,
}

impl Default for ClassTable {
    fn default() -> Self {
        Self::pascal_voc()
    }
}

impl ClassTable {
    pub fn pascal_voc() -> Self {
        Self {
            names: VOC_CLASSES
                .iter()
                .enumerate()
                .map(|(i, n)| (i as u8, n.to_string()))
                .collect(),
        }
    }

    pub fn name(&self, id: u8) -> Option<&str> {
        self.names.get(&id).map(String::as_str)
    }

    pub fn id(&self, name: &str) -> Option<u8> {
        self.names.iter().find(|(_, n)| n.as_str() == name).map(|(id, _)| *id)
    }

    pub fn contains(&self, id: u8) -> bool {
        self.names.contains_key(&id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u8, &str)> {
        self.names.iter().map(|(k, v)| (*k, v.as_str()))
    }

    /// Parses `id name` lines; `#` starts a comment.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut names = BTreeMap::new();
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
            let (id, name) = line
                .split_once(char::is_whitespace)
                .ok_or_else(|| err("expected \"id name\"".into()))?;
            let id: u8 = id.parse().map_err(|_| err(format!("bad class id {id:?}")))?;
            if names.insert(id, name.trim().to_string()).is_some() {
                return Err(err(format!("duplicate class id {id}")));
            }
        }
        Ok(Self { names })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn format(&self) -> String {
        self.names.iter().map(|(id, n)| format!("{id} {n}\n")).collect()
    }
}

/// Pixel-wise class ids for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMask {
    pub width: u32,
    pub height: u32,
    pub labels: Vec<u8>,
    pub classes: Arc<ClassTable>,
}

impl LabelMask {
    pub fn new(width: u32, height: u32, labels: Vec<u8>, classes: Arc<ClassTable>) -> Result<Self> {
        if labels.len() != width as usize * height as usize {
            return Err(Error::Contract(format!(
                "mask buffer has {} labels for {width}x{height}",
                labels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            labels,
            classes,
        })
    }

    pub fn background(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            labels: vec![BACKGROUND; width as usize * height as usize],
            classes: Arc::new(ClassTable::pascal_voc()),
        }
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.labels[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, class_id: u8) {
        self.labels[y as usize * self.width as usize + x as usize] = class_id;
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }
}

pub fn load_mask(path: impl AsRef<Path>, classes: Arc<ClassTable>) -> Result<LabelMask> {
    let path = path.as_ref();
    let img = image::open(path).map_err(|e| Error::image(path, e))?;
    match img {
        image::DynamicImage::ImageLuma8(buf) => {
            let (w, h) = buf.dimensions();
            LabelMask::new(w, h, buf.into_raw(), classes)
        }
        other => Err(Error::Format(format!(
            "{}: expected 8-bit single channel mask, found {:?}",
            path.display(),
            other.color()
        ))),
    }
}

pub fn save_mask(mask: &LabelMask, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let buf = image::GrayImage::from_raw(mask.width, mask.height, mask.labels.clone())
        .ok_or_else(|| Error::Contract("mask buffer size".into()))?;
    buf.save(path).map_err(|e| Error::image(path, e))
}

/// Axis-aligned pixel box, `[min, max)` on both axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundingBox {
    pub min_x: u32,
    pub min_y: u32,
    pub max_x: u32,
    pub max_y: u32,
}

impl BoundingBox {
    pub fn contains(&self, x: i64, y: i64) -> bool {
        x >= self.min_x as i64 && y >= self.min_y as i64 && x < self.max_x as i64 && y < self.max_y as i64
    }
}

/// A 4-connected component of one class.
#[derive(Debug, Clone, PartialEq)]
pub struct SemanticRegion {
    pub class_id: u8,
    /// `(x, y)` sorted in raster order.
    pub pixels: Vec<(u32, u32)>,
    pub bbox: BoundingBox,
}

impl SemanticRegion {
    pub fn area(&self) -> usize {
        self.pixels.len()
    }

    pub fn contains_pixel(&self, x: i64, y: i64) -> bool {
        if !self.bbox.contains(x, y) {
            return false;
        }
        let key = (y as u32, x as u32);
        self.pixels.binary_search_by(|&(px, py)| (py, px).cmp(&key)).is_ok()
    }
}

/// True iff the rounded pixel coordinate belongs to the region.
pub fn point_in_region<T: Real>(region: &SemanticRegion, p: &Pixel<T>) -> bool {
    let (x, y) = p.rounded();
    region.contains_pixel(x, y)
}

/// Connected regions of every nonzero class, at least `min_region_area`
/// pixels each, ordered by class id then area (largest first).
pub fn extract_regions(mask: &LabelMask, min_region_area: usize) -> Vec<SemanticRegion> {
    let (w, h) = (mask.width as usize, mask.height as usize);
    let mut seen = vec![false; w * h];
    let mut regions = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        let class_id = mask.labels[start];
        if class_id == BACKGROUND || seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut pixels = Vec::new();
        while let Some(i) = queue.pop_front() {
            let (x, y) = (i % w, i / w);
            pixels.push((x as u32, y as u32));
            let mut visit = |j: usize| {
                if !seen[j] && mask.labels[j] == class_id {
                    seen[j] = true;
                    queue.push_back(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < w {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - w);
            }
            if y + 1 < h {
                visit(i + w);
            }
        }
        if pixels.len() < min_region_area.max(1) {
            continue;
        }
        pixels.sort_unstable_by_key(|&(x, y)| (y, x));
        let bbox = BoundingBox {
            min_x: pixels.iter().map(|p| p.0).min().unwrap(),
            min_y: pixels[0].1,
            max_x: pixels.iter().map(|p| p.0).max().unwrap() + 1,
            max_y: pixels[pixels.len() - 1].1 + 1,
        };
        regions.push(SemanticRegion { class_id, pixels, bbox });
    }
    // stable sort keeps raster order of first pixel among equal keys
    regions.sort_by(|a, b| a.class_id.cmp(&b.class_id).then(b.area().cmp(&a.area())));
    regions
}

/// Identifies the mask wanted for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskRequest {
    pub frame_id: usize,
    pub timestamp: Timestamp,
    /// RGB file name; the mask shares its file name.
    pub key: String,
    /// Frame `(width, height)` the mask must match.
    pub dimensions: (u32, u32),
}

#[derive(Debug, Clone, PartialEq)]
pub enum MaskResult {
    Available(LabelMask),
    Unavailable,
}

impl MaskResult {
    pub fn into_mask(self) -> Option<LabelMask> {
        match self {
            MaskResult::Available(m) => Some(m),
            MaskResult::Unavailable => None,
        }
    }
}

/// Anything that can answer a [`MaskRequest`] synchronously.
pub trait MaskSource: Send + Sync {
    fn fetch(&self, request: &MaskRequest) -> Result<MaskResult>;
}

/// Masks stored as `<dir>/<file name of the RGB image>`.
#[derive(Debug, Clone)]
pub struct DirectoryMaskSource {
    pub dir: PathBuf,
    pub classes: Arc<ClassTable>,
}

impl DirectoryMaskSource {
    pub fn new(dir: impl Into<PathBuf>, classes: Arc<ClassTable>) -> Self {
        Self {
            dir: dir.into(),
            classes,
        }
    }

    pub fn path_for(&self, key: &str) -> PathBuf {
        let name = Path::new(key)
            .file_name()
            .map(PathBuf::from)
            .unwrap_or_else(|| key.into());
        self.dir.join(name)
    }
}

impl MaskSource for DirectoryMaskSource {
    fn fetch(&self, request: &MaskRequest) -> Result<MaskResult> {
        let path = self.path_for(&request.key);
        if !path.is_file() {
            return Ok(MaskResult::Unavailable);
        }
        let mask = load_mask(&path, self.classes.clone())?;
        if mask.dimensions() != request.dimensions {
            return Err(Error::DimensionMismatch {
                expected: request.dimensions,
                got: mask.dimensions(),
            });
        }
        Ok(MaskResult::Available(mask))
    }
}

/// Synchronous lookup.
pub fn mask_provider_get(provider: &dyn MaskSource, request: &MaskRequest) -> Result<MaskResult> {
    provider.fetch(request)
}

type Job = (MaskRequest, mpsc::SyncSender<Result<MaskResult>>);

/// Serves mask requests on a background thread so the caller can do other
/// work (the motion check) while a mask loads.
pub struct AsyncMaskProvider {
    jobs: Option<mpsc::Sender<Job>>,
    worker: Option<thread::JoinHandle<()>>,
}

/// Handle for a request in flight.
pub struct PendingMask {
    rx: mpsc::Receiver<Result<MaskResult>>,
}

impl PendingMask {
    /// Blocks until the result arrives.
    pub fn wait(self) -> Result<MaskResult> {
        self.rx
            .recv()
            .unwrap_or_else(|_| Err(Error::Contract("mask worker stopped".into())))
    }
}

impl AsyncMaskProvider {
    pub fn spawn(source: Arc<dyn MaskSource>) -> Self {
        let (tx, rx) = mpsc::channel::<Job>();
        let worker = thread::Builder::new()
            .name("mask-provider".into())
            .spawn(move || {
                for (req, reply) in rx {
                    let _ = reply.send(source.fetch(&req));
                }
            })
            .expect("spawn mask provider thread");
        Self {
            jobs: Some(tx),
            worker: Some(worker),
        }
    }

    pub fn request(&self, request: MaskRequest) -> PendingMask {
        let (reply, rx) = mpsc::sync_channel(1);
        if let Some(jobs) = &self.jobs {
            let _ = jobs.send((request, reply));
        }
        PendingMask { rx }
    }
}

impl Drop for AsyncMaskProvider {
    fn drop(&mut self) {
        self.jobs.take();
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}
