//! Depth from a normal map: integrates the normals of a rendered sphere
//! and compares against the rasterized depth.

use polcap::inverse::integrate_normals;
use polcap::render::fixtures::sphere_scene;
use polcap::render::{render_capture, Material, RenderOptions};

fn main() -> polcap::Result<()> {
    let scene = sphere_scene(128, 5, Material::uniform([0.5; 3], [0.04; 3], 0.5));
    let r = render_capture(&scene, RenderOptions::default())?;
    let mask = &r.gt.mask;
    let depths: Vec<f64> = (0..mask.len()).filter(|&i| mask.data()[i]).map(|i| r.gt.depth.data()[i]).collect();
    let median = polcap::eval::median(&depths);
    let spacing = scene.camera.pixel_footprint(median);
    let height = integrate_normals(&r.gt.normal, mask, spacing)?;

    // Height points towards the camera; compare against depth after
    // removing the mean of each.
    let n = depths.len() as f64;
    let mean_depth = depths.iter().sum::<f64>() / n;
    let mut se = 0.0;
    for i in 0..mask.len() {
        if mask.data()[i] {
            let e = (-height.data()[i]) - (r.gt.depth.data()[i] - mean_depth);
            se += e * e;
        }
    }
    println!("pixel footprint {spacing:.4}, depth RMSE vs rasterized depth {:.4}", (se / n).sqrt());
    println!("(orthographic integration of a perspective view; the residual is the projection mismatch)");
    Ok(())
}
