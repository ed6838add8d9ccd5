//! Fast invariant checks bundled with the binary.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::brdf::{diffuse_dop, fresnel, Vec3, DEFAULT_IOR};
use crate::grid::Grid;
use crate::inverse::{fit_svbrdf, integrate_normals, DepthPrior, FitConfig, FitInput};
use crate::io::Encoding;
use crate::render::fixtures::{analytic_sphere_normal, sphere_scene, SPHERE_DISTANCE};
use crate::render::{render_capture, Material, RenderOptions};
use crate::stokes::{compute_stokes, dop_aolp, filter_image, CaptureSet, CAPTURE_ANGLES_DEG};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, passed: bool, detail: String) -> Check {
    Check {
        name: name.into(),
        passed,
        detail,
    }
}

fn stokes_round_trip() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        // Physically consistent captures: random Stokes vectors with dop ≤ 1.
        let (w, h) = (6, 5);
        let mut imgs: [crate::RadianceImage; 3] = [(); 3].map(|_| Grid::zeros(w, h));
        for i in 0..w * h {
            for k in 0..3 {
                let s0: f64 = rng.random_range(0.1..2.0);
                let p: f64 = rng.random_range(0.0..1.0);
                let a: f64 = rng.random_range(0.0..PI);
                let (s1, s2) = (s0 * p * (2.0 * a).cos(), s0 * p * (2.0 * a).sin());
                for (j, img) in imgs.iter_mut().enumerate() {
                    let phi = (CAPTURE_ANGLES_DEG[j]).to_radians();
                    img.data_mut()[i][k] = 0.5 * (s0 + s1 * (2.0 * phi).cos() + s2 * (2.0 * phi).sin());
                }
            }
        }
        let [i0, i45, i90] = imgs;
        let c = CaptureSet::new(i0, i45, i90).expect("consistent dims");
        let s = compute_stokes(&c).expect("valid capture");
        for (img, phi) in [&c.i0, &c.i45, &c.i90].into_iter().zip(CAPTURE_ANGLES_DEG) {
            let f = filter_image(&s, phi).expect("physical");
            for (a, b) in f.data().iter().zip(img.data()) {
                for k in 0..3 {
                    worst = worst.max((a[k] - b[k]).abs() / b[k].abs().max(1e-12));
                }
            }
        }
    }
    check("stokes_round_trip", worst < 1e-6, format!("max relative error {worst:.2e}"))
}

fn fresnel_physics() -> Check {
    let brewster = fresnel(DEFAULT_IOR.atan(), DEFAULT_IOR).expect("valid angle");
    let normal = fresnel(0.0, DEFAULT_IOR).expect("valid angle");
    let mut mono = diffuse_dop(0.0, DEFAULT_IOR) == 0.0;
    let mut prev = 0.0;
    for k in 1..900 {
        let v = diffuse_dop((k as f64 * 0.1).to_radians(), DEFAULT_IOR);
        mono &= v > prev;
        prev = v;
    }
    let ok = brewster.r_p < 1e-9 && (normal.r_s - 0.04).abs() < 1e-12 && (normal.r_p - 0.04).abs() < 1e-12 && mono;
    check(
        "fresnel_and_dop",
        ok,
        format!("r_p(brewster) {:.1e}, r(0) {:.4}, dop monotone {mono}", brewster.r_p, normal.r_s),
    )
}

fn sphere_aolp() -> Check {
    let scene = sphere_scene(128, 4, Material::uniform([0.6, 0.5, 0.4], [0.3; 3], 0.3));
    let r = render_capture(&scene, RenderOptions::default()).expect("fixture renders");
    let d = dop_aolp(&r.stokes);
    let center = Vec3::new(0.0, 0.0, -SPHERE_DISTANCE);
    let mut errs = Vec::new();
    for y in 0..128 {
        for x in 0..128 {
            if !*r.gbuffer.mask.get(x, y) || *d.dop.get(x, y) <= 0.01 {
                continue;
            }
            let Some(n) = analytic_sphere_normal(&scene.camera, &center, 1.0, x, y) else {
                continue;
            };
            let want = (n.y.atan2(n.x) + FRAC_PI_2).rem_euclid(PI);
            let e = (d.aolp.get(x, y) - want).rem_euclid(PI);
            errs.push(e.min(PI - e).to_degrees());
        }
    }
    errs.sort_by(f64::total_cmp);
    let med = errs.get(errs.len() / 2).copied().unwrap_or(f64::INFINITY);
    check("sphere_aolp", med < 1.0 && errs.len() > 1000, format!("median {med:.3}° over {} px", errs.len()))
}

fn paraboloid_integration() -> Check {
    let n = 32;
    let h = 1.0 / n as f64;
    let z = |x: f64, y: f64| 0.5 * (x * x + y * y);
    let coord = |i: usize| (i as f64 + 0.5) * h - 0.5;
    let normals = Grid::from_fn(n, n, |i, j| {
        // Columns advance along +x, rows along −y.
        let (x, y) = (coord(i), -coord(j));
        Vec3::new(-x, -y, 1.0).normalize()
    });
    let mask = Grid::filled(n, n, true);
    let Ok(d) = integrate_normals(&normals, &mask, h) else {
        return check("normal_integration", false, "integration failed".into());
    };
    // The normals belong to the height field z, recovered up to a constant.
    let truth = Grid::from_fn(n, n, |i, j| z(coord(i), -coord(j)));
    let mean = |g: &Grid<f64>| g.data().iter().sum::<f64>() / g.len() as f64;
    let (md, mt) = (mean(&d), mean(&truth));
    let rmse = (d.data().iter().zip(truth.data()).map(|(a, b)| (a - md - (b - mt)).powi(2)).sum::<f64>() / d.len() as f64).sqrt();
    check("normal_integration", rmse < 1e-3, format!("rmse {rmse:.2e}"))
}

fn small_fit() -> Check {
    let scene = sphere_scene(24, 3, Material::uniform([0.7, 0.45, 0.25], [0.3; 3], 0.35));
    let r = render_capture(&scene, RenderOptions::default()).expect("fixture renders");
    let input = FitInput {
        images: &r.images,
        mask: &r.gbuffer.mask,
        camera: &scene.camera,
        flash: &r.flash,
        depth: DepthPrior::Map(&r.gt.depth),
        cue: None,
    };
    let cfg = FitConfig {
        iterations: 40,
        ..Default::default()
    };
    match fit_svbrdf(&input, &cfg) {
        Ok(f) => {
            let (mut e, mut n) = (0.0, 0.0);
            for i in 0..r.gt.mask.len() {
                if r.gt.mask.data()[i] {
                    e += f.maps.normal.data()[i].angle(&r.gt.normal.data()[i]).to_degrees();
                    n += 1.0;
                }
            }
            let e = e / n;
            check("sphere_fit", e < 3.0, format!("mean normal error {e:.3}°"))
        }
        Err(err) => check("sphere_fit", false, err.to_string()),
    }
}

fn png16_encoding() -> Check {
    let e = Encoding { offset: 0.0, scale: 3.7 };
    let mut worst: f64 = 0.0;
    for k in 0..=1000 {
        let v = 3.7 * k as f64 / 1000.0;
        worst = worst.max((e.decode(e.encode(v)) - v).abs());
    }
    let ok = worst <= e.half_step() + 1e-12 && e.decode(e.encode(3.7)) == 3.7;
    check("png16_quantization", ok, format!("max error {worst:.2e} vs half step {:.2e}", e.half_step()))
}

pub fn run_selftest() -> Vec<Check> {
    vec![
        stokes_round_trip(),
        fresnel_physics(),
        sphere_aolp(),
        paraboloid_integration(),
        small_fit(),
        png16_encoding(),
    ]
}
