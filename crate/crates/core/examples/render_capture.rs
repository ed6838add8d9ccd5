//! Renders a polarized flash capture of a mesh (built-in or OBJ) and writes
//! it in the dataset layout.
//!
//! `cargo run --example render_capture -- [mesh.obj] [out_dir]`

use std::path::PathBuf;

use nalgebra::UnitQuaternion;
use polcap::brdf::Vec3;
use polcap::dataset::write_capture;
use polcap::render::{load_obj, render_capture, Camera, FlashLight, Material, Mesh, RenderOptions, Scene, TextureSet};

fn main() -> polcap::Result<()> {
    let mut args = std::env::args().skip(1);
    let mesh = match args.next() {
        Some(p) if p.ends_with(".obj") => load_obj(&p)?.normalized(),
        _ => Mesh::torus(0.35, 96, 48).normalized(),
    };
    let out = PathBuf::from(args.next().unwrap_or_else(|| "render_capture_out".into()));

    let camera = Camera::square(40.0, 256)?;
    let d = camera.framing_distance(1.0, 1.1);
    let scene = Scene {
        mesh,
        material: Material::textured(TextureSet::procedural(3, 256)),
        rotation: UnitQuaternion::from_euler_angles(0.9, 0.3, 0.0),
        translation: Vec3::new(0.0, 0.0, -d),
        camera,
        flash: FlashLight::white(d * d),
    };
    let cap = render_capture(
        &scene,
        RenderOptions {
            auto_exposure: Some(1.0),
            ..Default::default()
        },
    )?;
    let files = write_capture(&out, &cap, 0.0, 0)?;
    println!(
        "{} covered pixels, flash {:.3}, image scales {:?}",
        files.coverage, cap.flash.intensity[0], files.scales
    );
    println!("wrote {}", out.display());
    Ok(())
}
