//! The evaluation protocol: benchmark composition, relit-rendering metrics,
//! and a fitted prediction scored against ground truth.

use polcap::eval::{build_benchmark, evaluate_maps, EvalConfig, RelightGeometry};
use polcap::dataset::DatasetConfig;
use polcap::inverse::{fit_svbrdf, DepthPrior, FitConfig, FitInput};
use polcap::render::fixtures::{sphere_scene, SPHERE_DISTANCE};
use polcap::render::{render_capture, Material, RenderOptions};

fn main() -> polcap::Result<()> {
    let bench = build_benchmark(&DatasetConfig::default())?;
    println!("benchmark: {} records, first {} / {}", bench.len(), bench[0].mesh, bench[0].material);

    let scene = sphere_scene(64, 4, Material::uniform([0.5, 0.5, 0.6], [0.2; 3], 0.4));
    let r = render_capture(&scene, RenderOptions::default())?;
    let geo = RelightGeometry {
        camera: scene.camera,
        object_distance: SPHERE_DISTANCE,
    };
    let cfg = EvalConfig::default();
    let same = evaluate_maps(&r.gt, &r.gt, &geo, "sphere", &cfg)?;
    println!("GT vs GT: normal {} depth {} render {:.1e}", same.l1_normal, same.l1_depth, same.l1_render);

    let input = FitInput {
        images: &r.images,
        mask: &r.gbuffer.mask,
        camera: &scene.camera,
        flash: &r.flash,
        depth: DepthPrior::Constant(SPHERE_DISTANCE - 0.5),
        cue: None,
    };
    let fit = fit_svbrdf(&input, &FitConfig::default())?;
    let row = evaluate_maps(&r.gt, &fit.maps, &geo, "sphere", &cfg)?;
    println!(
        "fit: normal {:.4} depth {:.4} render {:.4} (linear {:.4}) over {} relights",
        row.l1_normal, row.l1_depth, row.l1_render, row.l1_render_linear, row.relights
    );
    Ok(())
}
