//! Split generation, manifests and resume.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::assets::{combinations, material_catalog, mesh_catalog, Combination};
use super::config::{DatasetConfig, Split};
use super::derive_seed;
use super::sample::{generate_sample, read_meta, sample_files, ImageScales, SampleMeta, SampleSpec};
use crate::error::{Error, Result};
use crate::io::{config_hash, MapSetMeta};

pub const MANIFEST_NAME: &str = "manifest.ndjson";
pub const MANIFEST_VERSION: u32 = 1;

/// Samples generated in parallel between manifest flushes.
const BATCH: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestHeader {
    pub version: u32,
    pub split: String,
    pub config_hash: String,
    pub config: DatasetConfig,
    pub samples: usize,
}

/// One generated sample; paths are relative to the manifest directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub id: String,
    pub index: usize,
    pub dir: String,
    pub mesh: String,
    pub material: String,
    pub rotation: [f64; 4],
    pub seed: u64,
    pub width: usize,
    pub height: usize,
    pub files: Vec<String>,
    pub scales: ImageScales,
    pub gt: MapSetMeta,
}

impl SampleRecord {
    pub fn from_meta(index: usize, dir: &str, meta: &SampleMeta) -> Self {
        Self {
            id: meta.id.clone(),
            index,
            dir: dir.to_string(),
            mesh: meta.mesh.clone(),
            material: meta.material.clone(),
            rotation: meta.rotation,
            seed: meta.seed,
            width: meta.camera.width,
            height: meta.camera.height,
            files: sample_files().iter().map(|f| format!("{dir}/{f}")).collect(),
            scales: meta.scales,
            gt: meta.gt,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedSample {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestSummary {
    pub requested: usize,
    pub generated: usize,
    /// Samples whose rendering was unusable (e.g. empty coverage).
    pub rejected: Vec<SkippedSample>,
    /// Samples whose assets failed to load or whose files failed to write.
    pub failed: Vec<SkippedSample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ManifestEntry {
    Header(ManifestHeader),
    Sample(SampleRecord),
    Summary(ManifestSummary),
}

/// A parsed manifest. `root` is the directory holding it, against which
/// sample paths resolve.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub root: PathBuf,
    pub header: ManifestHeader,
    pub samples: Vec<SampleRecord>,
    pub summary: Option<ManifestSummary>,
}

impl Manifest {
    pub fn sample_dir(&self, r: &SampleRecord) -> PathBuf {
        self.root.join(&r.dir)
    }
}

/// Accepts the manifest file or the directory that contains it.
pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let file = if path.is_dir() { path.join(MANIFEST_NAME) } else { path.to_path_buf() };
    let f = File::open(&file).map_err(|e| Error::io(&file, e))?;
    let root = file.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut header = None;
    let mut samples = Vec::new();
    let mut summary = None;
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(&file, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: ManifestEntry = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: file.clone(),
            line: i + 1,
            msg: e.to_string(),
        })?;
        match entry {
            ManifestEntry::Header(h) => header = Some(h),
            ManifestEntry::Sample(s) => samples.push(s),
            ManifestEntry::Summary(s) => summary = Some(s),
        }
    }
    let header = header.ok_or_else(|| Error::Parse {
        path: file.clone(),
        line: 1,
        msg: "manifest has no header record".into(),
    })?;
    Ok(Manifest {
        root,
        header,
        samples,
        summary,
    })
}

pub fn sample_id(split: Split, index: usize) -> String {
    format!("{}_{index:06}", split.as_str())
}

/// A sample counts as complete once its `meta.json` (written last) and
/// every other file exist.
fn completed(dir: &Path) -> Option<SampleMeta> {
    if !sample_files().iter().all(|f| dir.join(f).is_file()) {
        return None;
    }
    read_meta(dir).ok()
}

enum Outcome {
    Done(SampleRecord),
    Rejected(SkippedSample),
    Failed(SkippedSample),
}

fn run_one(cfg: &DatasetConfig, split: Split, split_dir: &Path, c: &Combination, resume: bool) -> Outcome {
    let id = sample_id(split, c.index);
    let dir = split_dir.join(&id);
    if resume {
        if let Some(meta) = completed(&dir) {
            return Outcome::Done(SampleRecord::from_meta(c.index, &id, &meta));
        }
    }
    let (mesh_off, mat_off) = cfg.catalog_offset(split);
    let mesh_asset = &mesh_catalog(cfg)[mesh_off + c.mesh];
    let mat_asset = &material_catalog(cfg)[mat_off + c.material];
    let skip = |reason: String| SkippedSample { id: id.clone(), reason };
    let assets = mesh_asset.load().and_then(|m| Ok((m, mat_asset.load(cfg)?)));
    let (mesh, textures) = match assets {
        Ok(a) => a,
        Err(e) => {
            log::warn!("{id}: asset load failed: {e}");
            return Outcome::Failed(skip(format!("asset load failed: {e}")));
        }
    };
    let spec = SampleSpec {
        id: id.clone(),
        split: Some(split.as_str().to_string()),
        mesh_id: mesh_asset.id(),
        material_id: mat_asset.id(),
        seed: derive_seed(cfg.seed, &["sample", split.as_str(), &c.index.to_string()]),
    };
    // Stale partial output from an interrupted run must not leak into the new sample.
    if dir.exists() {
        if let Err(e) = std::fs::remove_dir_all(&dir) {
            return Outcome::Failed(skip(format!("cannot clear {}: {e}", dir.display())));
        }
    }
    match generate_sample(&mesh, &textures, &spec, cfg, &dir) {
        Ok(meta) => Outcome::Done(SampleRecord::from_meta(c.index, &id, &meta)),
        Err(Error::Rejected(reason)) => {
            log::info!("{id}: rejected: {reason}");
            let _ = std::fs::remove_dir_all(&dir);
            Outcome::Rejected(skip(reason))
        }
        Err(e) => {
            log::warn!("{id}: failed: {e}");
            Outcome::Failed(skip(e.to_string()))
        }
    }
}

/// Generates one split into `<root>/<split>/` and writes its manifest.
/// Samples are rendered in parallel; records are appended in index order
/// by this thread only, so the manifest is identical for any thread count.
/// With `resume`, complete sample directories are reused as they are.
pub fn generate_split(cfg: &DatasetConfig, root: &Path, split: Split, resume: bool) -> Result<Manifest> {
    cfg.validate()?;
    let split_dir = root.join(split.as_str());
    std::fs::create_dir_all(&split_dir).map_err(|e| Error::io(&split_dir, e))?;
    let sc = cfg.split(split);
    let combos = combinations(sc.meshes, sc.materials, sc.sample_count());
    let header = ManifestHeader {
        version: MANIFEST_VERSION,
        split: split.as_str().to_string(),
        config_hash: config_hash(cfg),
        config: cfg.clone(),
        samples: combos.len(),
    };

    let path = split_dir.join(MANIFEST_NAME);
    let tmp = split_dir.join(format!("{MANIFEST_NAME}.partial"));
    let f = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    let mut out = BufWriter::new(f);
    let emit = |out: &mut BufWriter<File>, e: &ManifestEntry| -> Result<()> {
        serde_json::to_writer(&mut *out, e)?;
        out.write_all(b"\n").map_err(|e| Error::io(&tmp, e))?;
        Ok(())
    };
    emit(&mut out, &ManifestEntry::Header(header.clone()))?;

    let mut samples = Vec::new();
    let mut summary = ManifestSummary {
        requested: combos.len(),
        generated: 0,
        rejected: Vec::new(),
        failed: Vec::new(),
    };
    for batch in combos.chunks(BATCH) {
        let outcomes: Vec<Outcome> = batch
            .par_iter()
            .map(|c| run_one(cfg, split, &split_dir, c, resume))
            .collect();
        for o in outcomes {
            match o {
                Outcome::Done(r) => {
                    emit(&mut out, &ManifestEntry::Sample(r.clone()))?;
                    samples.push(r);
                }
                Outcome::Rejected(s) => summary.rejected.push(s),
                Outcome::Failed(s) => summary.failed.push(s),
            }
        }
        out.flush().map_err(|e| Error::io(&tmp, e))?;
    }
    summary.generated = samples.len();
    emit(&mut out, &ManifestEntry::Summary(summary.clone()))?;
    out.flush().map_err(|e| Error::io(&tmp, e))?;
    drop(out);
    std::fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))?;
    log::info!(
        "{}: {} samples, {} rejected, {} failed",
        split.as_str(),
        summary.generated,
        summary.rejected.len(),
        summary.failed.len()
    );
    Ok(Manifest {
        root: split_dir,
        header,
        samples,
        summary: Some(summary),
    })
}

/// Generates the requested splits (train first).
pub fn generate_dataset(cfg: &DatasetConfig, root: &Path, splits: &[Split], resume: bool) -> Result<Vec<Manifest>> {
    splits.iter().map(|&s| generate_split(cfg, root, s, resume)).collect()
}
