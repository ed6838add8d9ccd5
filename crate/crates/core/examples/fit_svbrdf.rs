//! Recovers normals, albedos and roughness from a single polarized flash
//! capture, with and without polarization cues.

use polcap::inverse::{fit_svbrdf, DepthPrior, FitConfig, FitInput, FitMode};
use polcap::render::fixtures::{sphere_scene, textured_plane_scene};
use polcap::render::{render_capture, Material, RenderOptions, Scene};

fn report(name: &str, scene: &Scene) -> polcap::Result<()> {
    let r = render_capture(scene, RenderOptions::default())?;
    for mode in FitMode::ALL {
        let input = FitInput {
            images: &r.images,
            mask: &r.gbuffer.mask,
            camera: &scene.camera,
            flash: &r.flash,
            depth: DepthPrior::Map(&r.gt.depth),
            cue: None,
        };
        let cfg = FitConfig { mode, ..Default::default() };
        let fit = fit_svbrdf(&input, &cfg)?;
        let (mut normal, mut albedo, mut n) = (0.0, 0.0, 0.0);
        for i in 0..r.gt.mask.len() {
            if r.gt.mask.data()[i] {
                normal += fit.maps.normal.data()[i].angle(&r.gt.normal.data()[i]).to_degrees();
                albedo += (0..3)
                    .map(|k| (fit.maps.diffuse.data()[i][k] - r.gt.diffuse.data()[i][k]).abs())
                    .sum::<f64>()
                    / 3.0;
                n += 1.0;
            }
        }
        println!(
            "{name:<6} {:<18} normal {:7.3} deg  albedo L1 {:.4}  render loss {:.2e}  best iter {}",
            mode.as_str(),
            normal / n,
            albedo / n,
            fit.report.best.polarized_render_term,
            fit.report.best_iteration
        );
    }
    Ok(())
}

fn main() -> polcap::Result<()> {
    report("sphere", &sphere_scene(64, 4, Material::uniform([0.7, 0.45, 0.25], [0.3; 3], 0.35)))?;
    report("plane", &textured_plane_scene(64, 11))
}
