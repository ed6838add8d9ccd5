//! Stokes parameters from three polarizer angles, and re-filtering them at
//! arbitrary angles.

use polcap::render::fixtures::sphere_scene;
use polcap::render::{render_capture, Material, RenderOptions};
use polcap::stokes::{compute_stokes, derive_inputs, dop_aolp, filter_image, CaptureSet};

fn main() -> polcap::Result<()> {
    let scene = sphere_scene(128, 4, Material::uniform([0.6, 0.45, 0.3], [0.2; 3], 0.3));
    let r = render_capture(&scene, RenderOptions::default())?;
    let capture = CaptureSet::new(r.images.i0.clone(), r.images.i45.clone(), r.images.i90.clone())?;
    let s = compute_stokes(&capture)?;
    let derived = derive_inputs(&capture)?;

    let mut worst: f64 = 0.0;
    for (phi, img) in [(0.0, &r.images.i0), (45.0, &r.images.i45), (90.0, &r.images.i90), (135.0, &derived.i135)] {
        let f = filter_image(&s, phi)?;
        for (a, b) in f.data().iter().zip(img.data()) {
            for k in 0..3 {
                worst = worst.max((a[k] - b[k]).abs());
            }
        }
    }
    println!("re-filtering error at 0/45/90/135 deg: {worst:.2e}");

    let d = dop_aolp(&s);
    let (cx, cy) = (100, 64);
    println!(
        "pixel ({cx}, {cy}): dop {:.4}, aolp {:.2} deg",
        d.dop.get(cx, cy),
        d.aolp.get(cx, cy).to_degrees()
    );
    for phi in [0.0, 30.0, 60.0, 90.0, 120.0, 150.0] {
        let f = filter_image(&s, phi)?;
        println!("  I({phi:>5.1}) = {:.5}", f.get(cx, cy)[0]);
    }
    Ok(())
}
