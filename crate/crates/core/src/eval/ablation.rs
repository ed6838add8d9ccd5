//! Benchmark manifests and the fitting ablation harness.

use serde::{Deserialize, Serialize};

use super::protocol::{evaluate_maps, EvalConfig, MetricsRow, MetricsTable, RelightGeometry};
use crate::dataset::{combinations, material_catalog, mesh_catalog, sample_id, Combination, DatasetConfig, Split};
use crate::error::Result;
use crate::grid::{Mask, ScalarMap};
use crate::inverse::{fit_svbrdf, DepthPrior, FitConfig, FitInput, FitMode};
use crate::maps::SvbrdfMaps;
use crate::render::{Camera, FlashLight};
use crate::stokes::PolarizedImages;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRecord {
    pub id: String,
    pub mesh: String,
    pub material: String,
    pub combination: Combination,
}

/// The test-split combinations as (mesh id, material id) records.
pub fn build_benchmark(cfg: &DatasetConfig) -> Result<Vec<BenchmarkRecord>> {
    cfg.validate()?;
    let (mo, ao) = cfg.catalog_offset(Split::Test);
    let meshes = mesh_catalog(cfg);
    let mats = material_catalog(cfg);
    let t = &cfg.test;
    Ok(combinations(t.meshes, t.materials, t.sample_count())
        .into_iter()
        .map(|c| BenchmarkRecord {
            id: sample_id(Split::Test, c.index),
            mesh: meshes[mo + c.mesh].id(),
            material: mats[ao + c.material].id(),
            combination: c,
        })
        .collect())
}

/// One observed sample with its ground truth.
#[derive(Debug, Clone)]
pub struct AblationSample {
    pub id: String,
    pub images: PolarizedImages,
    pub mask: Mask,
    pub camera: Camera,
    pub flash: FlashLight,
    pub depth_prior: ScalarMap,
    pub object_distance: f64,
    pub gt: SvbrdfMaps,
}

/// An ablation that this crate cannot run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalAblation {
    pub tag: String,
    pub description: String,
    pub component: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub modes: Vec<FitMode>,
    pub table: MetricsTable,
    pub not_run: Vec<ExternalAblation>,
}

/// Fits every sample in every mode (full first) and evaluates each result;
/// rows are tagged with the mode name.
pub fn ablation_suite(
    samples: &[AblationSample],
    modes: &[FitMode],
    fit: &FitConfig,
    eval: &EvalConfig,
) -> Result<AblationTable> {
    let mut modes = modes.to_vec();
    modes.retain(|&m| m != FitMode::Full);
    modes.insert(0, FitMode::Full);
    let mut rows: Vec<MetricsRow> = Vec::new();
    for &mode in &modes {
        let cfg = FitConfig { mode, ..fit.clone() };
        let ecfg = EvalConfig {
            method: mode.as_str().to_string(),
            ..eval.clone()
        };
        for s in samples {
            let input = FitInput {
                images: &s.images,
                mask: &s.mask,
                camera: &s.camera,
                flash: &s.flash,
                depth: DepthPrior::Map(&s.depth_prior),
                cue: None,
            };
            let res = fit_svbrdf(&input, &cfg)?;
            let geo = RelightGeometry {
                camera: s.camera,
                object_distance: s.object_distance,
            };
            rows.push(evaluate_maps(&s.gt, &res.maps, &geo, &s.id, &ecfg)?);
        }
    }
    Ok(AblationTable {
        modes,
        table: MetricsTable::new(rows),
        not_run: vec![ExternalAblation {
            tag: "a".into(),
            description: "without res-blocks on the skip connections".into(),
            component: "neural".into(),
        }],
    })
}
