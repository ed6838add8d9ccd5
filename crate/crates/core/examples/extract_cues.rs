//! Normalized Stokes and diffuse-color cues from a rendered capture, plus
//! the normal azimuth they encode.

use polcap::cues::diffuse_color;
use polcap::render::fixtures::{sphere_scene, SPHERE_DISTANCE};
use polcap::render::{render_capture, Material, RenderOptions};
use polcap::stokes::{compute_stokes, default_epsilon, normalize_stokes, CaptureSet};

fn main() -> polcap::Result<()> {
    let scene = sphere_scene(96, 4, Material::uniform([0.8, 0.3, 0.2], [0.3; 3], 0.25));
    let r = render_capture(&scene, RenderOptions::default())?;
    let s = compute_stokes(&CaptureSet::new(r.images.i0, r.images.i45, r.images.i90)?)?;
    let eps = default_epsilon(&s);
    let cue = normalize_stokes(&s, eps);
    let color = diffuse_color(&s, eps, None);
    println!("sphere at {SPHERE_DISTANCE}, epsilon {eps:.2e}");
    println!("stokes cue valid on {} px, diffuse cue on {} px", cue.valid.count(), color.valid.count());

    for (x, y) in [(80, 48), (48, 16), (20, 70)] {
        let u = cue.u.get(x, y);
        // The cue encodes the polarization orientation (normal azimuth + 90°).
        let azimuth = (0.5 * u[1].atan2(u[0]) - std::f64::consts::FRAC_PI_2).to_degrees();
        let n = r.gt.normal.get(x, y);
        println!(
            "({x:>2}, {y:>2}) u = ({:+.3}, {:+.3})  azimuth {azimuth:+7.2} deg (mod 180)  true {:+7.2} deg  color {:?}",
            u[0],
            u[1],
            n.y.atan2(n.x).to_degrees(),
            color.rgb.get(x, y).map(|v| (v * 1000.0).round() / 1000.0)
        );
    }
    Ok(())
}
