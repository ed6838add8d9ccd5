//! Recovery properties of the per-capture fit on rendered fixtures.

use std::f64::consts::{FRAC_PI_2, PI};

use polcap::eval::{evaluate_maps, EvalConfig, RelightGeometry};
use polcap::inverse::{fit_svbrdf, DepthPrior, FitConfig, FitInput, FitMode, FitResult};
use polcap::render::fixtures::{sphere_scene, textured_plane_scene, SPHERE_DISTANCE};
use polcap::render::{render_capture, Material, RenderOptions, RenderedCapture, Scene};
use polcap::stokes::{compute_stokes, default_epsilon, normalize_stokes, CaptureSet};

fn sphere() -> Scene {
    sphere_scene(48, 4, Material::uniform([0.7, 0.45, 0.25], [0.3; 3], 0.35))
}

fn fit(scene: &Scene, r: &RenderedCapture, mode: FitMode) -> FitResult {
    let input = FitInput {
        images: &r.images,
        mask: &r.gbuffer.mask,
        camera: &scene.camera,
        flash: &r.flash,
        depth: DepthPrior::Map(&r.gt.depth),
        cue: None,
    };
    fit_svbrdf(&input, &FitConfig { mode, ..Default::default() }).unwrap()
}

/// Azimuth difference modulo π, in degrees.
fn azimuth_error(a: f64, b: f64) -> f64 {
    let e = (a - b).rem_euclid(PI);
    e.min(PI - e).to_degrees()
}

#[test]
fn stokes_cue_fixes_azimuth_up_to_ambiguity() {
    for scene in [sphere(), {
        let mut s = sphere();
        s.mesh = polcap::render::Mesh::blob(2, 4).normalized();
        s
    }] {
        let r = render_capture(&scene, RenderOptions::default()).unwrap();
        let s = compute_stokes(&CaptureSet::new(r.images.i0.clone(), r.images.i45.clone(), r.images.i90.clone()).unwrap()).unwrap();
        let cue = normalize_stokes(&s, default_epsilon(&s));
        let (mut ok, mut n) = (0, 0);
        for i in 0..cue.valid.len() {
            if !cue.valid.data()[i] || !r.gt.mask.data()[i] {
                continue;
            }
            let nrm = r.gt.normal.data()[i];
            let w = scene.camera.width;
            let v = -scene.camera.unproject(i % w, i / w, r.gt.depth.data()[i]).normalize();
            // The cue carries the orientation of n × v in the image plane; it
            // equals the image azimuth of n only for rays through the normal's
            // plane of symmetry (e.g. an on-axis sphere).
            let e = nrm.cross(&v);
            if e.x.hypot(e.y) < 1e-3 {
                continue;
            }
            let u = cue.u.data()[i];
            let from_cue = 0.5 * u[1].atan2(u[0]) - FRAC_PI_2;
            n += 1;
            if azimuth_error(from_cue, e.y.atan2(e.x) - FRAC_PI_2) < 1.0 {
                ok += 1;
            }
        }
        assert!(ok as f64 >= 0.99 * n as f64, "{ok}/{n}");
    }
}

#[test]
fn textured_plane_roughness_is_recovered() {
    let scene = textured_plane_scene(48, 11);
    let r = render_capture(&scene, RenderOptions::default()).unwrap();
    let f = fit(&scene, &r, FitMode::Full);
    let (mut ok, mut n) = (0, 0);
    for i in 0..r.gt.mask.len() {
        if r.gt.mask.data()[i] {
            n += 1;
            if (f.maps.roughness.data()[i] - r.gt.roughness.data()[i]).abs() <= 0.1 {
                ok += 1;
            }
        }
    }
    assert!(ok as f64 >= 0.8 * n as f64, "{ok}/{n}");
}

#[test]
fn withholding_polarization_hurts_azimuth_and_metrics() {
    let scene = sphere();
    let r = render_capture(&scene, RenderOptions::default()).unwrap();
    let full = fit(&scene, &r, FitMode::Full);
    let blind = fit(&scene, &r, FitMode::NoPolarization);
    let mean_azimuth = |f: &FitResult| {
        let (mut sum, mut n) = (0.0, 0.0);
        for i in 0..r.gt.mask.len() {
            let g = r.gt.normal.data()[i];
            if r.gt.mask.data()[i] && g.x.hypot(g.y) > 0.05 {
                let p = f.maps.normal.data()[i];
                let e = (p.y.atan2(p.x) - g.y.atan2(g.x)).rem_euclid(2.0 * PI);
                sum += e.min(2.0 * PI - e).to_degrees();
                n += 1.0;
            }
        }
        sum / n
    };
    assert!(mean_azimuth(&blind) > mean_azimuth(&full));

    let geo = RelightGeometry {
        camera: scene.camera,
        object_distance: SPHERE_DISTANCE,
    };
    let cfg = EvalConfig::default();
    let a = evaluate_maps(&r.gt, &full.maps, &geo, "sphere", &cfg).unwrap();
    let b = evaluate_maps(&r.gt, &blind.maps, &geo, "sphere", &cfg).unwrap();
    assert!(b.l1_normal >= a.l1_normal, "{} < {}", b.l1_normal, a.l1_normal);
}

#[test]
fn constant_depth_prior_still_recovers_normals() {
    let scene = sphere();
    let r = render_capture(&scene, RenderOptions::default()).unwrap();
    let input = FitInput {
        images: &r.images,
        mask: &r.gbuffer.mask,
        camera: &scene.camera,
        flash: &r.flash,
        depth: DepthPrior::Constant(SPHERE_DISTANCE - 0.5),
        cue: None,
    };
    let f = fit_svbrdf(&input, &FitConfig::default()).unwrap();
    let (mut sum, mut n) = (0.0, 0.0);
    for i in 0..r.gt.mask.len() {
        if r.gt.mask.data()[i] {
            sum += f.maps.normal.data()[i].angle(&r.gt.normal.data()[i]).to_degrees();
            n += 1.0;
        }
    }
    // Wrong geometry biases the view directions; the error stays moderate.
    assert!(sum / n < 10.0, "{}°", sum / n);
}
