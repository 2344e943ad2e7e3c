//! Populating an account's 45 face images from a local photo corpus.
//!
//! Two routes produce [`FaceImage`]s:
//!
//! * **jack**: each friend's photo goes through a [`FaceDetector`]; the first
//!   box it reports is cropped, whoever's face that is.
//! * **jill**: a tag manifest already names a box per friend, so nothing is
//!   detected; the box is cropped directly.
//!
//! Both run on the same worker pool ([`run_pipeline`]): one friend per task,
//! results published as they finish so a caller can start choosing faces
//! before the run ends. Image ids are derived from `(friend_name, photo_id,
//! box)`, which makes the final result set independent of worker count and
//! completion order.

use std::collections::HashSet;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::sync::{Arc, Mutex, MutexGuard};
use std::thread::{self, JoinHandle};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::grid::{ImageId, CELLS};
use crate::ppm::{Ppm, PpmError};

pub const FACES_DIR: &str = "faces";
pub const CROPS_DIR: &str = "crops";
pub const INDEX_FILE: &str = "index.json";
pub const SIDECAR_SUFFIX: &str = ".faces.json";

#[derive(Debug, Error)]
pub enum BootstrapError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("no face found for {0}")]
    NoFace(String),
    #[error("box {face_box:?} exceeds {width}x{height} photo")]
    OutOfBounds {
        face_box: FaceBox,
        width: u32,
        height: u32,
    },
    #[error("expected {expected} images, got {actual}")]
    Cardinality { expected: usize, actual: usize },
    #[error("unknown image {0}")]
    UnknownImage(String),
    #[error("image {0} chosen twice")]
    Duplicate(String),
    #[error("{0}")]
    Invalid(String),
}

impl BootstrapError {
    fn io(path: &Path, source: io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    fn from_ppm(path: &Path, err: PpmError) -> Self {
        match err {
            PpmError::Io(e) => Self::io(path, e),
            PpmError::Format(message) => Self::Format {
                path: path.to_path_buf(),
                message,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PhotoRef {
    pub photo_id: String,
    pub path: PathBuf,
}

/// Pixel rectangle with a top-left origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FaceBox {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl FaceBox {
    pub fn new(x: u32, y: u32, w: u32, h: u32) -> Self {
        Self { x, y, w, h }
    }

    pub fn fits(&self, width: u32, height: u32) -> bool {
        self.w > 0
            && self.h > 0
            && self.x.checked_add(self.w).is_some_and(|r| r <= width)
            && self.y.checked_add(self.h).is_some_and(|b| b <= height)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagEntry {
    pub photo: PhotoRef,
    pub friend_name: String,
    pub face_box: FaceBox,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FaceImage {
    pub image_id: ImageId,
    pub friend_name: String,
    pub source: PhotoRef,
    #[serde(rename = "box")]
    pub face_box: FaceBox,
    pub crop_path: PathBuf,
}

/// One row of `faces/index.json`. `crop_path` is relative to the `faces/`
/// directory.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct IndexEntry {
    pub image_id: ImageId,
    pub friend_name: String,
    pub photo_id: String,
    #[serde(rename = "box")]
    pub face_box: FaceBox,
    pub crop_path: String,
}

/// Stable id for a crop: `face-` plus 16 hex digits of SHA-256 over the
/// friend name, photo id and box.
pub fn derive_image_id(friend_name: &str, photo_id: &str, b: &FaceBox) -> ImageId {
    let mut h = Sha256::new();
    h.update(friend_name.as_bytes());
    h.update([0x1f]);
    h.update(photo_id.as_bytes());
    h.update([0x1f]);
    h.update(format!("{},{},{},{}", b.x, b.y, b.w, b.h).as_bytes());
    let digest = h.finalize();
    ImageId::new(format!("face-{}", &hex::encode(digest)[..16])).expect("non-empty")
}

/// Produces candidate face boxes for a photo, in a deterministic order.
pub trait FaceDetector: Send + Sync {
    fn detect(&self, photo: &PhotoRef) -> Result<Vec<FaceBox>, BootstrapError>;
}

/// Stand-in detector that reads `<photo>.faces.json`, a JSON array of boxes.
/// A photo without a sidecar has no faces.
#[derive(Debug, Clone, Copy, Default)]
pub struct SidecarDetector;

pub fn sidecar_path(photo: &Path) -> PathBuf {
    let mut s = photo.as_os_str().to_owned();
    s.push(SIDECAR_SUFFIX);
    PathBuf::from(s)
}

impl FaceDetector for SidecarDetector {
    fn detect(&self, photo: &PhotoRef) -> Result<Vec<FaceBox>, BootstrapError> {
        let path = sidecar_path(&photo.path);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(BootstrapError::io(&path, e)),
        };
        serde_json::from_slice(&bytes).map_err(|e| BootstrapError::Format {
            path,
            message: e.to_string(),
        })
    }
}

pub fn detect_faces(
    photo: &PhotoRef,
    detector: &dyn FaceDetector,
) -> Result<Vec<FaceBox>, BootstrapError> {
    fs::File::open(&photo.path).map_err(|e| BootstrapError::io(&photo.path, e))?;
    detector.detect(photo)
}

/// Crops `face_box` out of the photo into `crops_dir/<image_id>.ppm`.
pub fn crop_face(
    photo: &PhotoRef,
    friend_name: &str,
    face_box: FaceBox,
    crops_dir: &Path,
) -> Result<FaceImage, BootstrapError> {
    if friend_name.is_empty() {
        return Err(BootstrapError::Invalid("empty friend name".into()));
    }
    let img = Ppm::read(&photo.path).map_err(|e| BootstrapError::from_ppm(&photo.path, e))?;
    let crop = img
        .crop(face_box.x, face_box.y, face_box.w, face_box.h)
        .ok_or(BootstrapError::OutOfBounds {
            face_box,
            width: img.width,
            height: img.height,
        })?;
    let image_id = derive_image_id(friend_name, &photo.photo_id, &face_box);
    fs::create_dir_all(crops_dir).map_err(|e| BootstrapError::io(crops_dir, e))?;
    let crop_path = crops_dir.join(format!("{image_id}.ppm"));
    crop.write(&crop_path)
        .map_err(|e| BootstrapError::from_ppm(&crop_path, e))?;
    Ok(FaceImage {
        image_id,
        friend_name: friend_name.to_string(),
        source: photo.clone(),
        face_box,
        crop_path,
    })
}

/// Crops the first detected face. No attempt is made to check that the face
/// belongs to the friend.
pub fn extract_first_face(
    photo: &PhotoRef,
    friend_name: &str,
    detector: &dyn FaceDetector,
    crops_dir: &Path,
) -> Result<FaceImage, BootstrapError> {
    let first = detect_faces(photo, detector)?
        .into_iter()
        .next()
        .ok_or_else(|| BootstrapError::NoFace(friend_name.to_string()))?;
    crop_face(photo, friend_name, first, crops_dir)
}

#[derive(Debug, Deserialize)]
struct ManifestRow {
    photo_id: String,
    photo_path: PathBuf,
    friend_name: String,
    #[serde(rename = "box")]
    face_box: FaceBox,
}

/// Parses a tag manifest. Relative photo paths resolve against the
/// manifest's directory.
pub fn load_manifest(manifest_path: &Path) -> Result<Vec<TagEntry>, BootstrapError> {
    let bytes = fs::read(manifest_path).map_err(|e| BootstrapError::io(manifest_path, e))?;
    let rows: Vec<ManifestRow> =
        serde_json::from_slice(&bytes).map_err(|e| BootstrapError::Format {
            path: manifest_path.to_path_buf(),
            message: e.to_string(),
        })?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    Ok(rows
        .into_iter()
        .map(|r| TagEntry {
            photo: PhotoRef {
                photo_id: r.photo_id,
                path: base.join(r.photo_path),
            },
            friend_name: r.friend_name,
            face_box: r.face_box,
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Jack,
    Jill,
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub mode: Mode,
    pub workers: usize,
    /// Crops go to `output_dir/faces/crops`, the index to
    /// `output_dir/faces/index.json`.
    pub output_dir: PathBuf,
}

impl PipelineConfig {
    pub fn faces_dir(&self) -> PathBuf {
        self.output_dir.join(FACES_DIR)
    }

    pub fn crops_dir(&self) -> PathBuf {
        self.faces_dir().join(CROPS_DIR)
    }

    pub fn index_path(&self) -> PathBuf {
        self.faces_dir().join(INDEX_FILE)
    }
}

/// Unit of work: one friend, one photo, and in jill mode the tagged box.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FriendJob {
    pub friend_name: String,
    pub photo: PhotoRef,
    pub tag: Option<FaceBox>,
}

impl From<TagEntry> for FriendJob {
    fn from(t: TagEntry) -> Self {
        Self {
            friend_name: t.friend_name,
            photo: t.photo,
            tag: Some(t.face_box),
        }
    }
}

/// Every `*.ppm` in `dir`, sorted by file name; the file stem is both the
/// friend name and the photo id.
pub fn friends_from_corpus(dir: &Path) -> Result<Vec<FriendJob>, BootstrapError> {
    let mut photos = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| BootstrapError::io(dir, e))? {
        let path = entry.map_err(|e| BootstrapError::io(dir, e))?.path();
        if path.extension().is_some_and(|e| e == "ppm") {
            photos.push(path);
        }
    }
    photos.sort();
    Ok(photos
        .into_iter()
        .map(|path| {
            let stem = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            FriendJob {
                friend_name: stem.clone(),
                photo: PhotoRef {
                    photo_id: stem,
                    path,
                },
                tag: None,
            }
        })
        .collect())
}

/// A friend that produced no face, and why.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Skipped {
    pub friend_name: String,
    pub photo_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PipelineEvent {
    Extracted(FaceImage),
    Skipped(Skipped),
}

#[derive(Debug, Default)]
struct Progress {
    images: Vec<FaceImage>,
    skipped: Vec<Skipped>,
    seen: HashSet<ImageId>,
    done: usize,
}

/// Shared view of a running pipeline, safe to poll from any thread.
#[derive(Debug)]
pub struct PipelineProgress {
    total: usize,
    inner: Mutex<Progress>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProgressSnapshot {
    pub total: usize,
    pub done: usize,
    pub finished: bool,
    /// Completion order.
    pub images: Vec<FaceImage>,
    pub skipped: Vec<Skipped>,
}

impl PipelineProgress {
    fn lock(&self) -> MutexGuard<'_, Progress> {
        self.inner.lock().unwrap_or_else(|p| p.into_inner())
    }

    pub fn snapshot(&self) -> ProgressSnapshot {
        let p = self.lock();
        ProgressSnapshot {
            total: self.total,
            done: p.done,
            finished: p.done == self.total,
            images: p.images.clone(),
            skipped: p.skipped.clone(),
        }
    }

    pub fn results_so_far(&self) -> Vec<FaceImage> {
        self.lock().images.clone()
    }

    pub fn is_finished(&self) -> bool {
        self.lock().done == self.total
    }

    fn publish(&self, job: &FriendJob, result: Result<FaceImage, BootstrapError>) -> PipelineEvent {
        let mut p = self.lock();
        p.done += 1;
        let skip = |reason: String| Skipped {
            friend_name: job.friend_name.clone(),
            photo_id: job.photo.photo_id.clone(),
            reason,
        };
        match result {
            Ok(face) if !p.seen.insert(face.image_id.clone()) => {
                let s = skip(format!("duplicate of {}", face.image_id));
                p.skipped.push(s.clone());
                PipelineEvent::Skipped(s)
            }
            Ok(face) => {
                p.images.push(face.clone());
                PipelineEvent::Extracted(face)
            }
            Err(e) => {
                let s = skip(e.to_string());
                p.skipped.push(s.clone());
                PipelineEvent::Skipped(s)
            }
        }
    }
}

/// Final, order-normalized outcome of a run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BootstrapOutcome {
    /// Sorted by image id.
    pub images: Vec<FaceImage>,
    pub skipped: Vec<Skipped>,
    pub index_path: PathBuf,
}

pub struct PipelineHandle {
    config: PipelineConfig,
    progress: Arc<PipelineProgress>,
    events: mpsc::Receiver<PipelineEvent>,
    workers: Vec<JoinHandle<()>>,
}

impl PipelineHandle {
    pub fn progress(&self) -> Arc<PipelineProgress> {
        Arc::clone(&self.progress)
    }

    /// Next completed friend, blocking; `None` once every friend is done.
    pub fn recv(&self) -> Option<PipelineEvent> {
        self.events.recv().ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = PipelineEvent> + '_ {
        self.events.iter()
    }

    /// Waits for all workers, then writes `faces/index.json` sorted by image
    /// id.
    pub fn join(self) -> Result<BootstrapOutcome, BootstrapError> {
        for w in self.workers {
            w.join()
                .map_err(|_| BootstrapError::Invalid("pipeline worker panicked".into()))?;
        }
        let p = self.progress.lock();
        let mut images = p.images.clone();
        let mut skipped = p.skipped.clone();
        drop(p);
        images.sort_by(|a, b| a.image_id.cmp(&b.image_id));
        skipped.sort();
        let index_path = write_index(&self.config, &images)?;
        Ok(BootstrapOutcome {
            images,
            skipped,
            index_path,
        })
    }
}

fn process(
    job: &FriendJob,
    mode: Mode,
    detector: &dyn FaceDetector,
    crops_dir: &Path,
) -> Result<FaceImage, BootstrapError> {
    match mode {
        Mode::Jack => extract_first_face(&job.photo, &job.friend_name, detector, crops_dir),
        Mode::Jill => {
            let face_box = job
                .tag
                .ok_or_else(|| BootstrapError::Invalid("no tag for friend".into()))?;
            crop_face(&job.photo, &job.friend_name, face_box, crops_dir)
        }
    }
}

/// Starts `config.workers` threads that drain the friend list, one friend per
/// task. Failures are recorded as skips and never stop the run.
pub fn run_pipeline(
    config: PipelineConfig,
    friends: Vec<FriendJob>,
    detector: Arc<dyn FaceDetector>,
) -> Result<PipelineHandle, BootstrapError> {
    if config.workers == 0 {
        return Err(BootstrapError::Invalid("workers must be at least 1".into()));
    }
    let crops_dir = config.crops_dir();
    fs::create_dir_all(&crops_dir).map_err(|e| BootstrapError::io(&crops_dir, e))?;
    let progress = Arc::new(PipelineProgress {
        total: friends.len(),
        inner: Mutex::new(Progress::default()),
    });
    let jobs = Arc::new(friends);
    let next = Arc::new(AtomicUsize::new(0));
    let (tx, rx) = mpsc::channel();
    let workers = (0..config.workers.min(jobs.len().max(1)))
        .map(|_| {
            let (jobs, next, progress, detector, tx, crops_dir) = (
                Arc::clone(&jobs),
                Arc::clone(&next),
                Arc::clone(&progress),
                Arc::clone(&detector),
                tx.clone(),
                crops_dir.clone(),
            );
            let mode = config.mode;
            thread::spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(job) = jobs.get(i) else { break };
                let result = process(job, mode, detector.as_ref(), &crops_dir);
                let event = progress.publish(job, result);
                // receiver may be gone; results still land in `progress`
                let _ = tx.send(event);
            })
        })
        .collect();
    Ok(PipelineHandle {
        config,
        progress,
        events: rx,
        workers,
    })
}

impl From<&FaceImage> for IndexEntry {
    fn from(f: &FaceImage) -> Self {
        Self {
            image_id: f.image_id.clone(),
            friend_name: f.friend_name.clone(),
            photo_id: f.source.photo_id.clone(),
            face_box: f.face_box,
            crop_path: format!("{CROPS_DIR}/{}.ppm", f.image_id),
        }
    }
}

/// Index rows sorted by image id.
pub fn index_entries(images: &[FaceImage]) -> Vec<IndexEntry> {
    let mut rows: Vec<IndexEntry> = images.iter().map(IndexEntry::from).collect();
    rows.sort();
    rows
}

fn write_index(config: &PipelineConfig, images: &[FaceImage]) -> Result<PathBuf, BootstrapError> {
    let path = config.index_path();
    let json = serde_json::to_vec_pretty(&index_entries(images)).expect("index serializes");
    fs::write(&path, json).map_err(|e| BootstrapError::io(&path, e))?;
    Ok(path)
}

pub fn read_index(path: &Path) -> Result<Vec<IndexEntry>, BootstrapError> {
    let bytes = fs::read(path).map_err(|e| BootstrapError::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| BootstrapError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Tag-driven bootstrap on a single worker: one face per valid manifest
/// entry, invalid entries recorded as skips.
pub fn ingest_tags(
    manifest_path: &Path,
    output_dir: &Path,
) -> Result<BootstrapOutcome, BootstrapError> {
    let friends = load_manifest(manifest_path)?
        .into_iter()
        .map(FriendJob::from)
        .collect();
    let config = PipelineConfig {
        mode: Mode::Jill,
        workers: 1,
        output_dir: output_dir.to_path_buf(),
    };
    run_pipeline(config, friends, Arc::new(SidecarDetector))?.join()
}

/// Checks the user's pick of 45 faces against what the pipeline produced.
pub fn select_for_registration(
    results: &[FaceImage],
    chosen: &[ImageId],
) -> Result<Vec<ImageId>, BootstrapError> {
    let known: Vec<ImageId> = results.iter().map(|f| f.image_id.clone()).collect();
    select_ids(&known, chosen)
}

/// [`select_for_registration`] against a plain list of known ids.
pub fn select_ids(known: &[ImageId], chosen: &[ImageId]) -> Result<Vec<ImageId>, BootstrapError> {
    if chosen.len() != CELLS {
        return Err(BootstrapError::Cardinality {
            expected: CELLS,
            actual: chosen.len(),
        });
    }
    let known: HashSet<&ImageId> = known.iter().collect();
    let mut seen = HashSet::new();
    for id in chosen {
        if !known.contains(id) {
            return Err(BootstrapError::UnknownImage(id.to_string()));
        }
        if !seen.insert(id) {
            return Err(BootstrapError::Duplicate(id.to_string()));
        }
    }
    Ok(chosen.to_vec())
}
