//! Fitting ablations: full model, no polarized rendering loss, and no
//! polarization at all, scored with the evaluation protocol.

use polcap::eval::{ablation_suite, AblationSample, EvalConfig};
use polcap::inverse::{FitConfig, FitMode};
use polcap::render::fixtures::{sphere_scene, textured_plane_scene, SPHERE_DISTANCE};
use polcap::render::{render_capture, Material, RenderOptions, Scene};

fn sample(id: &str, scene: &Scene, distance: f64) -> polcap::Result<AblationSample> {
    let r = render_capture(scene, RenderOptions::default())?;
    Ok(AblationSample {
        id: id.into(),
        images: r.images,
        mask: r.gbuffer.mask,
        camera: scene.camera,
        flash: r.flash,
        depth_prior: r.gt.depth.clone(),
        object_distance: distance,
        gt: r.gt,
    })
}

fn main() -> polcap::Result<()> {
    let samples = [
        sample("sphere", &sphere_scene(48, 4, Material::uniform([0.7, 0.45, 0.25], [0.3; 3], 0.35)), SPHERE_DISTANCE)?,
        sample("plane", &textured_plane_scene(48, 5), 3.0)?,
    ];
    let eval = EvalConfig {
        n_relights: 8,
        ..Default::default()
    };
    let t = ablation_suite(&samples, &FitMode::ALL, &FitConfig::default(), &eval)?;
    println!("{:<18} {:>10} {:>10} {:>10}", "mode", "l1_normal", "l1_depth", "l1_render");
    for a in &t.table.aggregates {
        let m = |k: &str| a.stat(k).map_or(f64::NAN, |s| s.mean);
        println!("{:<18} {:>10.4} {:>10.4} {:>10.4}", a.method, m("l1_normal"), m("l1_depth"), m("l1_render"));
    }
    for x in &t.not_run {
        println!("ablation {} ({}) applies to the {} component only", x.tag, x.description, x.component);
    }
    Ok(())
}
