//! Labeled latent-resolution datasets from a corpus of ≥1080-line sources.
//!
//! A corpus directory holds image files (PNG/JPEG) and, optionally, one
//! subdirectory of frame images per video. Every source is degraded into
//! several variants; corners are detected on each degraded variant and the
//! patches around them are packed into per-split shards.

mod manifest;
mod procedural;
mod shard;

use std::path::{Path, PathBuf};

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::imaging::{degrade, detect_corners, load_image, CornerSet, Plane, ResampleMethod};
use crate::models::{mask_locations, propagate_mask, Architecture, PATCH, STRIDE};
use crate::numkernel::{parallel_map, seeded_rng};

pub use manifest::{Label, Manifest, ManifestEntry, SourceKind, Split};
pub use procedural::{procedural_image, procedural_video, write_procedural_corpus};
pub use shard::{read_shard, write_shard, PatchRecord};

/// Nominal heights of the six classes, class 1 first.
pub const CLASS_HEIGHTS: [usize; 6] = [144, 240, 360, 480, 720, 1080];
pub const SOURCE_MIN_HEIGHT: usize = 1080;

pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const DATASET_FILE: &str = "dataset.json";

/// Shard file holding the corner-centered patches of a split.
pub fn patch_shard_name(split: Split) -> &'static str {
    match split {
        Split::Train => "train_patches.lpch",
        Split::Test => "test_patches.lpch",
    }
}

/// Shard file holding the receptive windows of the propagated corner cells.
pub fn window_shard_name(split: Split) -> &'static str {
    match split {
        Split::Train => "train_windows.lpch",
        Split::Test => "test_windows.lpch",
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SynthMode {
    Class,
    Reg,
}

impl std::str::FromStr for SynthMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "class" => Ok(SynthMode::Class),
            "reg" => Ok(SynthMode::Reg),
            _ => Err(Error::InvalidArgument(format!("unknown mode {s:?} (expected class or reg)"))),
        }
    }
}

fn check_class(cls: u8) -> Result<()> {
    if (1..=6).contains(&cls) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("class {cls} outside 1..=6")))
    }
}

/// k = height/1080 for a class.
pub fn class_factor(cls: u8) -> Result<f64> {
    check_class(cls)?;
    Ok(CLASS_HEIGHTS[cls as usize - 1] as f64 / 1080.0)
}

/// "144p" … "1080p".
pub fn class_name(cls: u8) -> String {
    match CLASS_HEIGHTS.get((cls as usize).wrapping_sub(1)) {
        Some(h) => format!("{h}p"),
        None => format!("class{cls}"),
    }
}

fn check_source(p: &Plane) -> Result<()> {
    if p.h() < SOURCE_MIN_HEIGHT {
        return Err(Error::InvalidArgument(format!(
            "source is {}×{}, needs at least {SOURCE_MIN_HEIGHT} lines",
            p.h(),
            p.w()
        )));
    }
    Ok(())
}

pub fn make_class_variant(p: &Plane, cls: u8, method: ResampleMethod) -> Result<(Plane, u8)> {
    check_source(p)?;
    Ok((degrade(p, class_factor(cls)?, method)?, cls))
}

/// Degrades by k = a/100 and returns the target a/100.
pub fn make_reg_variant(p: &Plane, a: u32, method: ResampleMethod) -> Result<(Plane, f64)> {
    check_source(p)?;
    if !(1..=100).contains(&a) {
        return Err(Error::InvalidArgument(format!("a = {a} outside 1..=100")));
    }
    let k = a as f64 / 100.0;
    Ok((degrade(p, k, method)?, k))
}

/// Class whose nominal height is closest; ties go to the higher class.
pub fn nearest_class(native_height: usize) -> u8 {
    let mut best = 0;
    for (i, &h) in CLASS_HEIGHTS.iter().enumerate() {
        if h.abs_diff(native_height) <= CLASS_HEIGHTS[best].abs_diff(native_height) {
            best = i;
        }
    }
    best as u8 + 1
}

/// Assigns each of `n_sources` sources to train or test: a seeded shuffle,
/// then the first round(fraction·n) go to train (at least one per side).
pub fn split_corpus(n_sources: usize, fraction: f64, seed: u64) -> Result<Vec<Split>> {
    if n_sources == 0 {
        return Err(Error::Empty("corpus"));
    }
    if n_sources < 2 {
        return Err(Error::InvalidArgument("splitting needs at least 2 sources".into()));
    }
    let n_train = ((fraction * n_sources as f64).round() as usize).clamp(1, n_sources - 1);
    let mut order: Vec<usize> = (0..n_sources).collect();
    let mut rng = seeded_rng(seed ^ 0x5350_4c49_5400);
    for i in (1..n_sources).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    let mut splits = vec![Split::Test; n_sources];
    for &i in &order[..n_train] {
        splits[i] = Split::Train;
    }
    Ok(splits)
}

/// A crop centered on a corner: rows `row−size/2 .. row+size−size/2`.
#[derive(Clone, Debug, PartialEq)]
pub struct CenteredPatch {
    pub row: usize,
    pub col: usize,
    pub pixels: Plane,
}

/// Crops a size×size patch around each corner, skipping corners whose crop
/// would leave the plane (closer than size/2 to a border).
pub fn extract_patches(p: &Plane, corners: &CornerSet, size: usize) -> Vec<CenteredPatch> {
    let half = size / 2;
    corners
        .points
        .iter()
        .filter(|c| c.row >= half && c.col >= half && c.row + (size - half) <= p.h() && c.col + (size - half) <= p.w())
        .map(|c| CenteredPatch {
            row: c.row,
            col: c.col,
            pixels: p.crop(c.row - half, c.col - half, size, size).expect("bounds checked"),
        })
        .collect()
}

/// Top-left corners of the receptive windows of the output cells that the
/// corner mask propagates to.
pub fn mask_windows(arch: &Architecture, p: &Plane, corners: &CornerSet) -> Result<Vec<(usize, usize)>> {
    let t = propagate_mask(arch, &corners.to_mask())?;
    Ok(mask_locations(&t)
        .into_iter()
        .map(|(x, y)| (x * STRIDE, y * STRIDE))
        .filter(|&(r, c)| r + PATCH <= p.h() && c + PATCH <= p.w())
        .collect())
}

/// `count` frame indices spread uniformly over `0..n` (all of them if n ≤ count).
pub fn frame_indices(n: usize, count: usize) -> Vec<usize> {
    if n <= count {
        return (0..n).collect();
    }
    if count == 1 {
        return vec![0];
    }
    (0..count)
        .map(|i| (i * (n - 1) + (count - 1) / 2) / (count - 1))
        .collect()
}

fn is_image_file(p: &Path) -> bool {
    p.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "jpg" | "jpeg"))
}

fn sorted_dir(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut v = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(dir, err)))
        .collect::<Result<Vec<_>>>()?;
    v.sort();
    Ok(v)
}

/// Frame files of a video directory in filename order, thinned to `count`.
pub fn video_frame_paths(dir: &Path, count: usize) -> Result<Vec<PathBuf>> {
    let frames: Vec<PathBuf> = sorted_dir(dir)?.into_iter().filter(|p| is_image_file(p)).collect();
    if frames.is_empty() {
        return Err(Error::InvalidArgument(format!("{}: no frame images", dir.display())));
    }
    Ok(frame_indices(frames.len(), count).into_iter().map(|i| frames[i].clone()).collect())
}

/// Decoded frames of one video plus its id (the directory name).
pub struct Video {
    pub id: String,
    pub frames: Vec<(PathBuf, Plane)>,
}

pub fn ingest_video(dir: &Path, count: usize) -> Result<Video> {
    let id = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| dir.display().to_string());
    let frames = video_frame_paths(dir, count)?
        .into_iter()
        .map(|p| load_image(&p).map(|img| (p, img.plane)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Video { id, frames })
}

#[derive(Clone, Debug, PartialEq)]
pub enum CorpusSource {
    Image(PathBuf),
    Video { id: String, frames: Vec<PathBuf> },
}

/// Image files and video directories of a corpus, in filename order.
pub fn scan_corpus(dir: &Path, frames_per_video: usize) -> Result<Vec<CorpusSource>> {
    let mut out = Vec::new();
    for path in sorted_dir(dir)? {
        if path.is_dir() {
            let id = path.file_name().unwrap().to_string_lossy().into_owned();
            out.push(CorpusSource::Video {
                id,
                frames: video_frame_paths(&path, frames_per_video)?,
            });
        } else if is_image_file(&path) {
            out.push(CorpusSource::Image(path));
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidArgument(format!("{}: no images or video directories", dir.display())));
    }
    Ok(out)
}

/// Dataset-level metadata written next to the manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub mode: SynthMode,
    pub corpus: String,
    pub sources: usize,
    pub entries: usize,
    pub train_patches: usize,
    pub test_patches: usize,
    pub train_windows: usize,
    pub test_windows: usize,
    pub config: serde_json::Value,
}

/// Result of synthesizing one source: entries (ids unset) and patches keyed by the entry's index within the source.
struct SourceOutput {
    entries: Vec<ManifestEntry>,
    patches: Vec<(usize, CenteredPatch)>,
    windows: Vec<(usize, CenteredPatch)>,
}

fn mix(seed: u64, a: u64, b: u64) -> u64 {
    let mut x = seed ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    x ^= x >> 31;
    x.wrapping_mul(0xBF58_476D_1CE4_E5B9)
}

fn sample<T: Clone>(items: Vec<T>, cap: usize, seed: u64) -> Vec<T> {
    if items.len() <= cap {
        return items;
    }
    let mut rng = seeded_rng(seed);
    let mut idx: Vec<usize> = (0..items.len()).collect::<Vec<_>>().choose_multiple(&mut rng, cap).copied().collect();
    idx.sort_unstable();
    idx.into_iter().map(|i| items[i].clone()).collect()
}

/// Degradation factors and labels of every variant of source `index`.
pub fn source_variants(mode: SynthMode, index: usize, cfg: &RunConfig) -> Vec<(f64, Label)> {
    match mode {
        SynthMode::Class => (1..=6u8)
            .map(|c| (class_factor(c).expect("valid class"), Label::Class(c)))
            .collect(),
        SynthMode::Reg => {
            let mut rng = seeded_rng(mix(cfg.seed, index as u64, 0x0052_4547));
            (0..cfg.reg_variants)
                .map(|_| {
                    let a: u32 = rng.random_range(1..=100);
                    let k = a as f64 / 100.0;
                    (k, Label::Target(k))
                })
                .collect()
        }
    }
}

fn synth_source(
    index: usize,
    source: &CorpusSource,
    split: Split,
    mode: SynthMode,
    cfg: &RunConfig,
    arch: &Architecture,
) -> Result<SourceOutput> {
    let (frames, kind, video_id): (Vec<PathBuf>, SourceKind, Option<String>) = match source {
        CorpusSource::Image(p) => (vec![p.clone()], SourceKind::Image, None),
        CorpusSource::Video { id, frames } => (frames.clone(), SourceKind::VideoFrame, Some(id.clone())),
    };
    let corner_cfg = cfg.corner_config();
    let variants = source_variants(mode, index, cfg);
    let mut out = SourceOutput {
        entries: Vec::new(),
        patches: Vec::new(),
        windows: Vec::new(),
    };
    for (fi, frame_path) in frames.iter().enumerate() {
        let plane = load_image(frame_path)?.plane;
        check_source(&plane).map_err(|e| Error::InvalidArgument(format!("{}: {e}", frame_path.display())))?;
        for (vi, &(factor, label)) in variants.iter().enumerate() {
            let degraded = degrade(&plane, factor, cfg.resample)?;
            let corners = detect_corners(&degraded, &corner_cfg)?;
            let local = out.entries.len();
            out.entries.push(ManifestEntry {
                id: 0,
                source: index as u32,
                source_path: frame_path.display().to_string(),
                kind,
                video_id: video_id.clone(),
                variant: vi as u32,
                factor,
                label,
                split,
                corner_count: corners.len() as u32,
            });
            if cfg.patches_per_image == 0 {
                continue;
            }
            let key = mix(cfg.seed, index as u64, ((fi as u64) << 16) | vi as u64);
            let patches = sample(extract_patches(&degraded, &corners, PATCH), cfg.patches_per_image, key);
            out.patches.extend(patches.into_iter().map(|p| (local, p)));
            let windows = sample(mask_windows(arch, &degraded, &corners)?, cfg.patches_per_image, key ^ 1);
            out.windows.extend(windows.into_iter().map(|(r, c)| {
                (
                    local,
                    CenteredPatch {
                        row: r + PATCH / 2,
                        col: c + PATCH / 2,
                        pixels: degraded.crop(r, c, PATCH, PATCH).expect("window in bounds"),
                    },
                )
            }));
        }
    }
    Ok(out)
}

/// Builds a dataset from `corpus` into `out`: `manifest.jsonl`,
/// `dataset.json` and patch/window shards for both splits.
pub fn synthesize(corpus: &Path, out: &Path, mode: SynthMode, cfg: &RunConfig) -> Result<Manifest> {
    cfg.validate()?;
    let sources = scan_corpus(corpus, cfg.frames_per_video)?;
    let splits = split_corpus(sources.len(), cfg.split_fraction, cfg.seed)?;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let arch = Architecture::standard(1);

    let results = parallel_map(sources.len(), |i| synth_source(i, &sources[i], splits[i], mode, cfg, &arch));

    let mut manifest = Manifest::default();
    let mut patches = [Vec::new(), Vec::new()];
    let mut windows = [Vec::new(), Vec::new()];
    for (i, result) in results.into_iter().enumerate() {
        let r = result?;
        let slot = (splits[i] == Split::Test) as usize;
        let base = manifest.entries.len();
        for (j, mut e) in r.entries.into_iter().enumerate() {
            e.id = (base + j) as u32;
            manifest.entries.push(e);
        }
        let to_record = |(local, p): (usize, CenteredPatch), manifest: &Manifest| PatchRecord {
            label: manifest.entries[base + local].label.as_f32(),
            entry: (base + local) as u32,
            row: p.row as u32,
            col: p.col as u32,
            pixels: p.pixels,
        };
        patches[slot].extend(r.patches.into_iter().map(|x| to_record(x, &manifest)));
        windows[slot].extend(r.windows.into_iter().map(|x| to_record(x, &manifest)));
    }

    manifest.write(&out.join(MANIFEST_FILE))?;
    for (slot, split) in [Split::Train, Split::Test].into_iter().enumerate() {
        write_shard(&out.join(patch_shard_name(split)), &patches[slot])?;
        write_shard(&out.join(window_shard_name(split)), &windows[slot])?;
    }
    let info = DatasetInfo {
        mode,
        corpus: corpus.display().to_string(),
        sources: sources.len(),
        entries: manifest.entries.len(),
        train_patches: patches[0].len(),
        test_patches: patches[1].len(),
        train_windows: windows[0].len(),
        test_windows: windows[1].len(),
        config: cfg.to_json(),
    };
    let path = out.join(DATASET_FILE);
    let text = serde_json::to_string_pretty(&info).expect("plain struct") + "\n";
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

/// A synthesized dataset on disk.
pub struct Dataset {
    pub dir: PathBuf,
    pub info: DatasetInfo,
    pub config: RunConfig,
    pub manifest: Manifest,
}

impl Dataset {
    pub fn open(dir: &Path) -> Result<Self> {
        let path = dir.join(DATASET_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let info: DatasetInfo =
            serde_json::from_str(&text).map_err(|e| Error::format("dataset.json", e.to_string()))?;
        let config: RunConfig = serde_json::from_value(info.config.clone())
            .map_err(|e| Error::format("dataset.json config", e.to_string()))?;
        let manifest = Manifest::read(&dir.join(MANIFEST_FILE))?;
        Ok(Dataset {
            dir: dir.to_path_buf(),
            info,
            config,
            manifest,
        })
    }

    pub fn patches(&self, split: Split) -> Result<Vec<PatchRecord>> {
        read_shard(&self.dir.join(patch_shard_name(split)))
    }

    pub fn windows(&self, split: Split) -> Result<Vec<PatchRecord>> {
        read_shard(&self.dir.join(window_shard_name(split)))
    }

    /// Calls `f` with every entry of `split` and its degraded image, loading
    /// each source file once.
    pub fn for_each_image(&self, split: Split, mut f: impl FnMut(&ManifestEntry, &Plane) -> Result<()>) -> Result<()> {
        let mut loaded: Option<(String, Plane)> = None;
        for e in self.manifest.split(split) {
            if loaded.as_ref().map(|(p, _)| p != &e.source_path).unwrap_or(true) {
                loaded = Some((e.source_path.clone(), load_image(Path::new(&e.source_path))?.plane));
            }
            let source = &loaded.as_ref().expect("just loaded").1;
            let degraded = degrade(source, e.factor, self.config.resample)?;
            f(e, &degraded)?;
        }
        Ok(())
    }
}
