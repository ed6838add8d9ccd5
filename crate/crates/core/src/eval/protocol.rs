//! Per-sample evaluation: map metrics and relit renderings.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{l1_depth, l1_metric, median, tonemap};
use crate::brdf::Vec3;
use crate::dataset::{derive_seed, load_capture, load_ground_truth, Manifest, SampleRecord};
use crate::error::{Error, Result};
use crate::grid::{Grid, Mask};
use crate::io::{self, MapSetMeta};
use crate::maps::SvbrdfMaps;
use crate::render::{render_relit, Camera, PointLight};

/// Name of the per-sample decoding metadata in a results directory.
pub const PREDICTION_META: &str = "maps.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Test manifest; may also be given on the command line.
    pub manifest: Option<PathBuf>,
    pub n_relights: usize,
    /// Half-angle of the cone around the view axis that light directions
    /// are drawn from.
    pub cone_deg: f64,
    /// Light distance from the object center, as multiples of the camera
    /// distance.
    pub distance_range: [f64; 2],
    /// Light intensity in units of `object_distance²`, i.e. irradiance at
    /// the object center when the light sits at the camera distance.
    pub intensity: f64,
    pub seed: u64,
    pub method: String,
    pub gamma: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            manifest: None,
            n_relights: 20,
            cone_deg: 60.0,
            distance_range: [0.8, 1.5],
            intensity: 1.0,
            seed: 0,
            method: "fit".into(),
            gamma: 2.2,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if self.n_relights < 1 {
            return bad("n_relights must be >= 1");
        }
        if !(0.0..=90.0).contains(&self.cone_deg) {
            return bad("cone_deg must be in [0, 90]");
        }
        let [lo, hi] = self.distance_range;
        if !(lo > 0.0 && hi >= lo) {
            return bad("distance_range must be positive and ordered");
        }
        if !(self.intensity > 0.0 && self.gamma > 0.0) {
            return bad("intensity and gamma must be positive");
        }
        Ok(())
    }
}

/// Where the evaluated object sits: camera at the origin looking down −z,
/// object center at `(0, 0, −object_distance)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelightGeometry {
    pub camera: Camera,
    pub object_distance: f64,
}

/// The `i`-th relight of sample `id`; depends only on `(cfg.seed, id, i)`.
pub fn relight_light(cfg: &EvalConfig, geo: &RelightGeometry, id: &str, i: usize) -> PointLight {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &["relight", id, &i.to_string()]));
    // Uniform over the spherical cap around +z (towards the camera).
    let cos_max = cfg.cone_deg.to_radians().cos();
    let ct = rng.random_range(cos_max..=1.0);
    let phi = rng.random_range(0.0..2.0 * PI);
    let [lo, hi] = cfg.distance_range;
    let k = if hi > lo { rng.random_range(lo..=hi) } else { lo };
    let st = (1.0 - ct * ct).max(0.0).sqrt();
    let d = geo.object_distance;
    let center = Vec3::new(0.0, 0.0, -d);
    let p = center + Vec3::new(st * phi.cos(), st * phi.sin(), ct) * (k * d);
    PointLight {
        position: [p.x, p.y, p.z],
        intensity: [cfg.intensity * d * d; 3],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub id: String,
    pub method: String,
    pub l1_normal: f64,
    pub l1_depth: f64,
    /// Mean over relights, on tonemapped values.
    pub l1_render: f64,
    /// Same, on linear radiance.
    pub l1_render_linear: f64,
    pub l1_diffuse: f64,
    pub l1_specular: f64,
    pub l1_roughness: f64,
    pub relights: usize,
    /// Why the sample could not be evaluated; its metrics are then NaN.
    pub flagged: Option<String>,
}

impl MetricsRow {
    pub fn flagged(id: &str, method: &str, reason: String) -> Self {
        Self {
            id: id.to_string(),
            method: method.to_string(),
            l1_normal: f64::NAN,
            l1_depth: f64::NAN,
            l1_render: f64::NAN,
            l1_render_linear: f64::NAN,
            l1_diffuse: f64::NAN,
            l1_specular: f64::NAN,
            l1_roughness: f64::NAN,
            relights: 0,
            flagged: Some(reason),
        }
    }

    pub const METRICS: [&'static str; 7] = [
        "l1_normal",
        "l1_depth",
        "l1_render",
        "l1_render_linear",
        "l1_diffuse",
        "l1_specular",
        "l1_roughness",
    ];

    pub fn values(&self) -> [f64; 7] {
        [
            self.l1_normal,
            self.l1_depth,
            self.l1_render,
            self.l1_render_linear,
            self.l1_diffuse,
            self.l1_specular,
            self.l1_roughness,
        ]
    }
}

/// Relit renderings of the ground truth and the prediction for every light.
pub fn relight_pair(
    gt: &SvbrdfMaps,
    pred: &SvbrdfMaps,
    geo: &RelightGeometry,
    id: &str,
    cfg: &EvalConfig,
) -> Result<Vec<(crate::RadianceImage, crate::RadianceImage)>> {
    (0..cfg.n_relights)
        .map(|i| {
            let light = relight_light(cfg, geo, id, i);
            Ok((render_relit(gt, &light, &geo.camera)?, render_relit(pred, &light, &geo.camera)?))
        })
        .collect()
}

/// Compares a prediction to the ground truth on the ground-truth mask.
pub fn evaluate_maps(
    gt: &SvbrdfMaps,
    pred: &SvbrdfMaps,
    geo: &RelightGeometry,
    id: &str,
    cfg: &EvalConfig,
) -> Result<MetricsRow> {
    let mask = &gt.mask;
    if mask.count() == 0 {
        return Err(Error::EmptyMask);
    }
    let mut pred = pred.clone();
    // The prediction is judged on the ground-truth coverage.
    pred.mask = mask.clone();
    let mut render = 0.0;
    let mut linear = 0.0;
    for (a, b) in relight_pair(gt, &pred, geo, id, cfg)? {
        linear += l1_metric(&b, &a, mask)?;
        let tm = |g: &crate::RadianceImage| g.map(|p| p.map(|v| tonemap(v, cfg.gamma)));
        render += l1_metric(&tm(&b), &tm(&a), mask)?;
    }
    let n = cfg.n_relights as f64;
    Ok(MetricsRow {
        id: id.to_string(),
        method: cfg.method.clone(),
        l1_normal: l1_metric(&pred.normal, &gt.normal, mask)?,
        l1_depth: l1_depth(&pred.depth, &gt.depth, mask)?,
        l1_render: render / n,
        l1_render_linear: linear / n,
        l1_diffuse: l1_metric(&pred.diffuse, &gt.diffuse, mask)?,
        l1_specular: l1_metric(&pred.specular, &gt.specular, mask)?,
        l1_roughness: l1_metric(&pred.roughness, &gt.roughness, mask)?,
        relights: cfg.n_relights,
        flagged: None,
    })
}

/// Writes the five prediction maps and their decoding metadata.
pub fn write_prediction(dir: &Path, maps: &SvbrdfMaps) -> Result<MapSetMeta> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let meta = io::write_map_set(dir, "", maps)?;
    let path = dir.join(PREDICTION_META);
    std::fs::write(&path, serde_json::to_string_pretty(&meta)? + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(meta)
}

pub fn read_prediction(dir: &Path, mask: &Mask) -> Result<SvbrdfMaps> {
    let path = dir.join(PREDICTION_META);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let meta: MapSetMeta = serde_json::from_str(&text)?;
    io::read_map_set(dir, "", &meta, mask)
}

/// Summary statistics of one metric over the unflagged rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub median: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub method: String,
    pub count: usize,
    pub flagged: usize,
    pub metrics: BTreeMap<String, Stat>,
}

/// Aggregates rows of one method. Rows are reduced in id order, so the
/// result does not depend on evaluation order.
pub fn aggregate(method: &str, rows: &[MetricsRow]) -> Aggregate {
    let mut ok: Vec<&MetricsRow> = rows.iter().filter(|r| r.method == method && r.flagged.is_none()).collect();
    ok.sort_by(|a, b| a.id.cmp(&b.id));
    let flagged = rows.iter().filter(|r| r.method == method && r.flagged.is_some()).count();
    let metrics = MetricsRow::METRICS
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let v: Vec<f64> = ok.iter().map(|r| r.values()[k]).collect();
            let mean = if v.is_empty() { f64::NAN } else { v.iter().sum::<f64>() / v.len() as f64 };
            (name.to_string(), Stat { mean, median: median(&v) })
        })
        .collect();
    Aggregate {
        method: method.to_string(),
        count: ok.len(),
        flagged,
        metrics,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsTable {
    pub rows: Vec<MetricsRow>,
    pub aggregates: Vec<Aggregate>,
}

impl MetricsTable {
    /// Builds the table with one aggregate per method, in first-seen order.
    pub fn new(rows: Vec<MetricsRow>) -> Self {
        let mut methods: Vec<String> = Vec::new();
        for r in &rows {
            if !methods.contains(&r.method) {
                methods.push(r.method.clone());
            }
        }
        let aggregates = methods.iter().map(|m| aggregate(m, &rows)).collect();
        Self { rows, aggregates }
    }

    pub fn aggregate(&self, method: &str) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.method == method)
    }
}

impl Aggregate {
    pub fn stat(&self, metric: &str) -> Option<Stat> {
        self.metrics.get(metric).copied()
    }
}

fn evaluate_record(results: &Path, manifest: &Manifest, r: &SampleRecord, cfg: &EvalConfig) -> Result<MetricsRow> {
    let sample = manifest.sample_dir(r);
    let cap = load_capture(&sample)?;
    let gt = load_ground_truth(&sample, &cap.meta, &cap.mask)?;
    let pred = read_prediction(&results.join(&r.dir), &cap.mask)?;
    let geo = RelightGeometry {
        camera: cap.meta.camera,
        object_distance: cap.meta.object_distance,
    };
    evaluate_maps(&gt, &pred, &geo, &r.id, cfg)
}

/// Evaluates the predictions in `<results>/<sample dir>/` for every sample
/// of a manifest. Samples whose prediction cannot be read are flagged and
/// left out of the aggregates.
pub fn evaluate(results: &Path, manifest: &Manifest, cfg: &EvalConfig) -> Result<MetricsTable> {
    cfg.validate()?;
    let rows: Vec<MetricsRow> = manifest
        .samples
        .par_iter()
        .map(|r| match evaluate_record(results, manifest, r, cfg) {
            Ok(row) => row,
            Err(e) => {
                log::warn!("{}: not evaluated: {e}", r.id);
                MetricsRow::flagged(&r.id, &cfg.method, e.to_string())
            }
        })
        .collect();
    Ok(MetricsTable::new(rows))
}

/// Rows of tiles, each resampled (nearest neighbour) to a square of the
/// largest tile height, separated by 2-pixel gaps.
pub fn comparison_grid(rows: &[Vec<Grid<[u8; 3]>>]) -> Grid<[u8; 3]> {
    const GAP: usize = 2;
    let h = rows.iter().flatten().map(|t| t.height()).max().unwrap_or(1);
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0).max(1);
    let (w, hh) = (cols * (h + GAP), rows.len().max(1) * (h + GAP));
    let mut out = Grid::filled(w, hh, [255u8; 3]);
    for (ri, row) in rows.iter().enumerate() {
        for (ci, tile) in row.iter().enumerate() {
            let (tw, th) = tile.dims();
            for y in 0..h {
                for x in 0..h {
                    let p = *tile.get(x * tw / h, y * th / h);
                    out.set(ci * (h + GAP) + x, ri * (h + GAP) + y, p);
                }
            }
        }
    }
    out
}
