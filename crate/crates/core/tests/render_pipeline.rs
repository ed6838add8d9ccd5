//! Rasterizer, shader and capture pipeline against analytic oracles.

use std::path::PathBuf;

use polcap::brdf::Vec3;
use polcap::render::fixtures::{analytic_sphere_normal, sphere_scene, SPHERE_DISTANCE};
use polcap::render::{load_obj, render_capture, Material, Mesh, RenderOptions, RenderedCapture, Scene};
use polcap::stokes::{compute_stokes, CaptureSet};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn material() -> Material {
    Material::uniform([0.6, 0.5, 0.4], [0.3; 3], 0.3)
}

#[test]
fn quad_obj_loads_two_triangles() {
    let m = load_obj(fixture("quad.obj")).unwrap();
    assert_eq!(m.positions.len(), 4);
    assert_eq!(m.triangles.len(), 2);
    assert_eq!(m.uvs.len(), 4);
}

#[test]
fn icosphere_obj_normals_are_unit() {
    let m = load_obj(fixture("icosphere.obj")).unwrap();
    assert_eq!(m.triangles.len(), 320);
    assert_eq!(m.normals.len(), m.positions.len());
    for n in &m.normals {
        assert!((n.norm() - 1.0).abs() < 1e-6, "{}", n.norm());
    }
}

#[test]
fn obj_sphere_renders_like_builtin() {
    let mut scene = sphere_scene(64, 2, material());
    let builtin = render_capture(&scene, RenderOptions::default()).unwrap();
    scene.mesh = load_obj(fixture("icosphere.obj")).unwrap();
    let loaded = render_capture(&scene, RenderOptions::default()).unwrap();
    assert_eq!(builtin.gbuffer.mask, loaded.gbuffer.mask);
    let worst = builtin
        .gt
        .normal
        .data()
        .iter()
        .zip(loaded.gt.normal.data())
        .zip(builtin.gbuffer.mask.data())
        .filter(|(_, &m)| m)
        .map(|((a, b), _)| a.angle(b).to_degrees())
        .fold(0.0, f64::max);
    assert!(worst < 1e-3, "{worst}");
}

#[test]
fn sphere_normals_match_analytic_at_512() {
    let scene = sphere_scene(512, 6, material());
    let r = render_capture(&scene, RenderOptions::default()).unwrap();
    let center = Vec3::new(0.0, 0.0, -SPHERE_DISTANCE);
    let (mut sum, mut n) = (0.0, 0.0);
    for y in 0..512 {
        for x in 0..512 {
            if !*r.gbuffer.mask.get(x, y) {
                continue;
            }
            if let Some(a) = analytic_sphere_normal(&scene.camera, &center, 1.0, x, y) {
                sum += a.angle(r.gt.normal.get(x, y)).to_degrees();
                n += 1.0;
            }
        }
    }
    assert!(n > 100_000.0);
    assert!(sum / n < 0.5, "mean error {}°", sum / n);
}

#[test]
fn stokes_recovered_from_rendered_capture() {
    let scene = sphere_scene(128, 4, material());
    let r = render_capture(&scene, RenderOptions::default()).unwrap();
    let s = compute_stokes(&CaptureSet::new(r.images.i0.clone(), r.images.i45.clone(), r.images.i90.clone()).unwrap()).unwrap();
    for (a, b) in [(&s.s0, &r.stokes.s0), (&s.s1, &r.stokes.s1), (&s.s2, &r.stokes.s2)] {
        for (p, q) in a.data().iter().zip(b.data()) {
            for k in 0..3 {
                assert!((p[k] - q[k]).abs() <= 1e-6 * q[k].abs().max(1e-3), "{} vs {}", p[k], q[k]);
            }
        }
    }
}

/// Mean angle between rasterized normals and normals from central
/// differences of the unprojected depth map, on pixels at least two pixels
/// from the silhouette.
fn depth_normal_discrepancy(scene: &Scene, r: &RenderedCapture) -> f64 {
    let cam = &scene.camera;
    let (w, h) = r.gt.dims();
    let inside = |x: usize, y: usize| {
        (x.saturating_sub(2)..=(x + 2).min(w - 1)).all(|i| (y.saturating_sub(2)..=(y + 2).min(h - 1)).all(|j| *r.gt.mask.get(i, j)))
            && x >= 2
            && y >= 2
            && x + 2 < w
            && y + 2 < h
    };
    let p = |x: usize, y: usize| cam.unproject(x, y, *r.gt.depth.get(x, y));
    let (mut sum, mut n) = (0.0, 0.0);
    for y in 0..h {
        for x in 0..w {
            if !inside(x, y) {
                continue;
            }
            let mut d = (p(x + 1, y) - p(x - 1, y)).cross(&(p(x, y + 1) - p(x, y - 1))).normalize();
            if d.dot(&p(x, y)) > 0.0 {
                d = -d;
            }
            sum += d.angle(r.gt.normal.get(x, y)).to_degrees();
            n += 1.0;
        }
    }
    assert!(n > 100.0, "too few interior pixels");
    sum / n
}

#[test]
fn depth_and_normals_are_consistent() {
    let sphere = sphere_scene(256, 5, material());
    let mut blob = sphere_scene(256, 0, material());
    blob.mesh = Mesh::blob(5, 4).normalized();
    let mut torus = sphere_scene(256, 0, material());
    torus.mesh = Mesh::torus(0.4, 128, 64).normalized();
    torus.rotation = nalgebra::UnitQuaternion::from_euler_angles(0.6, 0.2, 0.0);
    for (name, scene) in [("sphere", sphere), ("blob", blob), ("torus", torus)] {
        let r = render_capture(&scene, RenderOptions::default()).unwrap();
        let e = depth_normal_discrepancy(&scene, &r);
        assert!(e < 3.0, "{name}: {e}°");
    }
}
