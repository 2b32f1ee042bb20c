//! Composition indexing and retrieval: per-image analysis records persisted
//! to disk, scene similarity from segmentation plus vanishing-point layout,
//! and sketch queries over detected triangles.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::imagebuf::ImageBuffer;
use crate::labels::RegionLabelMap;
use crate::line_segments::{detect_line_segments, LsdConfig};
use crate::metrics::{rand_index, PartitionPair};
use crate::par::maybe_par_map;
use crate::segmentation::{segment_image, SegmentationConfig};
use crate::triangles::{ransac_detect, RansacConfig, SketchQuery, TriangleCandidate};
use crate::vanishing_point::{detect_dominant_vp, VpSearchConfig};

/// Fixed comparison grid for scene distances; label maps and vanishing
/// points are resampled into it so that images of different sizes and
/// orientations are comparable.
pub const COMPARE_W: u32 = 250;
pub const COMPARE_H: u32 = 165;

/// Which analysis stages an index runs per image: scene indexes need the
/// segmentation and vanishing point, portrait indexes need line segments
/// and triangles, and `Full` runs everything.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnalysisMode {
    #[default]
    Full,
    Scene,
    Portrait,
}

impl std::str::FromStr for AnalysisMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(AnalysisMode::Full),
            "scene" => Ok(AnalysisMode::Scene),
            "portrait" => Ok(AnalysisMode::Portrait),
            other => Err(Error::InvalidInput(format!("unknown mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct AnalysisParams {
    pub mode: AnalysisMode,
    pub seg: SegmentationConfig,
    pub vp: VpSearchConfig,
    pub lsd: LsdConfig,
    pub ransac: RansacConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RetrievalConfig {
    /// Weight of the vanishing-point term in the scene distance.
    pub alpha: f64,
    pub topk: usize,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        RetrievalConfig { alpha: 0.5, topk: 8 }
    }
}

impl RetrievalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0) {
            return Err(Error::InvalidInput("alpha must be non-negative".into()));
        }
        if self.topk == 0 {
            return Err(Error::InvalidInput("topk must be positive".into()));
        }
        Ok(())
    }
}

/// Analysis results for one indexed image (the label map is stored in a
/// sidecar PNG, everything else in the record itself).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalysisRecord {
    pub image_id: String,
    pub width: u32,
    pub height: u32,
    pub content_hash: String,
    pub vp: Option<Point2>,
    pub vp_score: f64,
    pub region_count: u32,
    pub segment_count: usize,
    pub triangles: Vec<TriangleCandidate>,
}

#[derive(Debug, Clone)]
pub struct IndexEntry {
    pub record: AnalysisRecord,
    pub labels: RegionLabelMap,
}

#[derive(Debug, Clone)]
pub struct CompositionIndex {
    pub params: AnalysisParams,
    /// Sorted by `image_id`.
    pub entries: Vec<IndexEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestImage {
    image_id: String,
    record_file: String,
    labels_file: String,
    content_hash: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    version: u32,
    params: AnalysisParams,
    images: Vec<ManifestImage>,
}

pub fn hash_bytes(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut s = String::with_capacity(64);
    for b in digest {
        s.push_str(&format!("{:02x}", b));
    }
    s
}

/// Run the analysis pipeline on one canonical-size image, honoring the
/// stage selection in `params.mode`.
pub fn analyze_image(img: &ImageBuffer, params: &AnalysisParams) -> Result<(AnalysisRecord, RegionLabelMap)> {
    let (vp, vp_score, labels) = if params.mode == AnalysisMode::Portrait {
        let all = vec![0u32; (img.width() * img.height()) as usize];
        (None, 0.0, RegionLabelMap::from_labels(img.width(), img.height(), &all)?)
    } else {
        let vp_map = detect_dominant_vp(img, &params.vp)?;
        let (labels, _) = segment_image(img, vp_map.best, &params.seg)?;
        let vp = if vp_map.best_score > 0.0 { Some(vp_map.best) } else { None };
        (vp, vp_map.best_score, labels)
    };
    let (segments, triangles) = if params.mode == AnalysisMode::Scene {
        (Vec::new(), Vec::new())
    } else {
        let segments = detect_line_segments(img, &params.lsd, None)?;
        let triangles = ransac_detect(&segments, &params.ransac, img.width(), img.height())?;
        (segments, triangles)
    };
    Ok((
        AnalysisRecord {
            image_id: String::new(),
            width: img.width(),
            height: img.height(),
            content_hash: String::new(),
            vp,
            vp_score,
            region_count: labels.num_regions(),
            segment_count: segments.len(),
            triangles,
        },
        labels,
    ))
}

/// Nearest-neighbor resampling of a label map to the comparison grid.
pub fn resample_labels(map: &RegionLabelMap, tw: u32, th: u32) -> RegionLabelMap {
    let (sw, sh) = (map.width(), map.height());
    let mut raw = Vec::with_capacity((tw * th) as usize);
    for y in 0..th {
        for x in 0..tw {
            let sx = (((x as f64 + 0.5) * sw as f64 / tw as f64) as u32).min(sw - 1);
            let sy = (((y as f64 + 0.5) * sh as f64 / th as f64) as u32).min(sh - 1);
            raw.push(map.get(sx, sy));
        }
    }
    RegionLabelMap::from_labels(tw, th, &raw).expect("sizes match by construction")
}

fn vp_in_compare_grid(vp: Option<Point2>, w: u32, h: u32) -> Option<Point2> {
    vp.map(|p| Point2::new(p.x * COMPARE_W as f64 / w as f64, p.y * COMPARE_H as f64 / h as f64))
}

/// Scene distance between two analyzed images:
/// `(1 - RI) + alpha * |P_i - P_j| / diag`, both terms evaluated on the
/// common comparison grid. A vanishing point present on only one side
/// incurs the maximum penalty `alpha`.
pub fn scene_distance(a: &IndexEntry, b: &IndexEntry, alpha: f64) -> f64 {
    let la = resample_labels(&a.labels, COMPARE_W, COMPARE_H);
    let lb = resample_labels(&b.labels, COMPARE_W, COMPARE_H);
    let pair = PartitionPair::new(&la, &lb).expect("comparison grids match");
    let seg_term = 1.0 - rand_index(&pair);
    let diag = ((COMPARE_W * COMPARE_W + COMPARE_H * COMPARE_H) as f64).sqrt();
    let va = vp_in_compare_grid(a.record.vp, a.record.width, a.record.height);
    let vb = vp_in_compare_grid(b.record.vp, b.record.width, b.record.height);
    let vp_term = match (va, vb) {
        (Some(pa), Some(pb)) => (pa.distance(&pb) / diag).min(1.0),
        (None, None) => 0.0,
        _ => 1.0,
    };
    seg_term + alpha * vp_term
}

/// Rank indexed images against a query image, ascending by scene distance.
/// Ties break on `image_id` so results are stable.
pub fn query_scene(
    img: &ImageBuffer,
    index: &CompositionIndex,
    cfg: &RetrievalConfig,
) -> Result<Vec<(String, f64)>> {
    cfg.validate()?;
    let (record, labels) = analyze_image(img, &index.params)?;
    let query = IndexEntry { record, labels };
    let mut scored: Vec<(String, f64)> = maybe_par_map(&index.entries, |e| {
        (e.record.image_id.clone(), scene_distance(&query, e, cfg.alpha))
    });
    scored.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    scored.truncate(cfg.topk);
    Ok(scored)
}

/// Rank indexed images against a two-line sketch, descending by the best
/// continuity ratio among matching triangle candidates. Images with no
/// matching candidate are omitted.
pub fn query_sketch(
    query: &SketchQuery,
    index: &CompositionIndex,
    cfg: &RetrievalConfig,
) -> Result<Vec<(String, f64)>> {
    cfg.validate()?;
    query.validate()?;
    let mut scored: Vec<(String, f64)> = index
        .entries
        .iter()
        .filter_map(|e| {
            let matched = crate::triangles::match_sketch(query, &e.record.triangles);
            matched.first().map(|t| (e.record.image_id.clone(), t.continuity_ratio))
        })
        .collect();
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    scored.truncate(cfg.topk);
    Ok(scored)
}

struct LockGuard {
    path: PathBuf,
}

impl LockGuard {
    fn acquire(dir: &Path) -> Result<Self> {
        let path = dir.join(".lock");
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(LockGuard { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(Error::Index(format!(
                "index at {} is locked by another build (remove {} if stale)",
                dir.display(),
                path.display()
            ))),
            Err(e) => Err(e.into()),
        }
    }
}

impl Drop for LockGuard {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

fn list_images(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if !path.is_file() {
            continue;
        }
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
        if matches!(ext.as_str(), "png" | "jpg" | "jpeg") {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

/// Outcome of an index build: the index itself plus per-file warnings for
/// inputs that were skipped.
pub struct BuildOutcome {
    pub index: CompositionIndex,
    pub warnings: Vec<String>,
    /// Number of images reused unchanged from the previous build.
    pub reused: usize,
}

/// Build (or incrementally rebuild) a composition index from every image in
/// `input_dir`, persisting it under `out_dir`. Images whose content hash is
/// unchanged since the previous build are not re-analyzed.
pub fn build_index(input_dir: &Path, out_dir: &Path, params: &AnalysisParams) -> Result<BuildOutcome> {
    fs::create_dir_all(out_dir)?;
    let _lock = LockGuard::acquire(out_dir)?;

    let previous: HashMap<String, ManifestImage> = match load_manifest(out_dir) {
        Ok(m) if serde_json::to_string(&m.params).unwrap() == serde_json::to_string(params).unwrap() => {
            m.images.into_iter().map(|i| (i.image_id.clone(), i)).collect()
        }
        _ => HashMap::new(),
    };

    let files = list_images(input_dir)?;
    // hash and id every input up front; duplicates of an id are an error
    let mut jobs: Vec<(String, PathBuf, String)> = Vec::new();
    let mut warnings = Vec::new();
    for path in files {
        let id = path
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| Error::InvalidInput(format!("bad file name {}", path.display())))?
            .to_string();
        match fs::read(&path) {
            Ok(bytes) => jobs.push((id, path, hash_bytes(&bytes))),
            Err(e) => warnings.push(format!("skipping {}: {}", path.display(), e)),
        }
    }
    jobs.sort_by(|a, b| a.0.cmp(&b.0));
    for w in jobs.windows(2) {
        if w[0].0 == w[1].0 {
            return Err(Error::Index(format!("duplicate image id '{}'", w[0].0)));
        }
    }

    let results: Vec<(String, std::result::Result<Option<IndexEntry>, String>)> =
        maybe_par_map(&jobs, |(id, path, hash)| {
            if let Some(prev) = previous.get(id) {
                if &prev.content_hash == hash {
                    if let Ok(entry) = load_entry(out_dir, prev) {
                        return (id.clone(), Ok(Some(entry)));
                    }
                }
            }
            let img = match ImageBuffer::load(path).and_then(|i| crate::imagebuf::resize_canonical(&i)) {
                Ok(i) => i,
                Err(e) => return (id.clone(), Err(format!("skipping {}: {}", path.display(), e))),
            };
            match analyze_image(&img, params) {
                Ok((mut record, labels)) => {
                    record.image_id = id.clone();
                    record.content_hash = hash.clone();
                    (id.clone(), Ok(Some(IndexEntry { record, labels })))
                }
                Err(e) => (id.clone(), Err(format!("skipping {}: {}", path.display(), e))),
            }
        });

    let mut entries = Vec::new();
    let mut reused = 0usize;
    for (id, res) in results {
        match res {
            Ok(Some(entry)) => {
                if previous.get(&id).map(|p| p.content_hash == entry.record.content_hash).unwrap_or(false)
                {
                    reused += 1;
                }
                entries.push(entry);
            }
            Ok(None) => {}
            Err(w) => warnings.push(w),
        }
    }
    entries.sort_by(|a, b| a.record.image_id.cmp(&b.record.image_id));

    let index = CompositionIndex { params: params.clone(), entries };
    save_index(&index, out_dir)?;
    Ok(BuildOutcome { index, warnings, reused })
}

fn load_manifest(dir: &Path) -> Result<Manifest> {
    let bytes = fs::read(dir.join("manifest.json"))?;
    Ok(serde_json::from_slice(&bytes)?)
}

fn load_entry(dir: &Path, image: &ManifestImage) -> Result<IndexEntry> {
    let record: AnalysisRecord = serde_json::from_slice(&fs::read(dir.join(&image.record_file))?)?;
    let labels = RegionLabelMap::load_png(dir.join(&image.labels_file))?;
    if labels.width() != record.width || labels.height() != record.height {
        return Err(Error::Index(format!("label map size mismatch for '{}'", image.image_id)));
    }
    Ok(IndexEntry { record, labels })
}

/// Persist the index: a manifest plus one JSON record and one 16-bit label
/// PNG per image. Output is deterministic for identical inputs.
pub fn save_index(index: &CompositionIndex, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut images = Vec::with_capacity(index.entries.len());
    for entry in &index.entries {
        let id = &entry.record.image_id;
        let record_file = format!("{}.json", id);
        let labels_file = format!("{}.labels.png", id);
        fs::write(dir.join(&record_file), serde_json::to_vec_pretty(&entry.record)?)?;
        entry.labels.save_png(dir.join(&labels_file))?;
        images.push(ManifestImage {
            image_id: id.clone(),
            record_file,
            labels_file,
            content_hash: entry.record.content_hash.clone(),
        });
    }
    let manifest = Manifest { version: 1, params: index.params.clone(), images };
    fs::write(dir.join("manifest.json"), serde_json::to_vec_pretty(&manifest)?)?;
    Ok(())
}

/// Load a previously persisted index.
pub fn load_index(dir: &Path) -> Result<CompositionIndex> {
    let manifest = load_manifest(dir)?;
    if manifest.version != 1 {
        return Err(Error::Index(format!("unsupported index version {}", manifest.version)));
    }
    let mut entries = Vec::with_capacity(manifest.images.len());
    for image in &manifest.images {
        let mut entry = load_entry(dir, image)?;
        if entry.record.image_id != image.image_id {
            entry.record.image_id = image.image_id.clone();
        }
        entries.push(entry);
    }
    entries.sort_by(|a, b| a.record.image_id.cmp(&b.record.image_id));
    Ok(CompositionIndex { params: manifest.params, entries })
}
