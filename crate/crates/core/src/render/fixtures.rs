//! Analytic scenes used by examples, tests and the self-test.

use nalgebra::UnitQuaternion;

use super::{Camera, FlashLight, Material, Mesh, Scene, TextureSet};
use crate::brdf::Vec3;

/// Distance from the camera to the sphere fixture's center.
pub const SPHERE_DISTANCE: f64 = 3.2;

/// Unit icosphere centered on the optical axis at [`SPHERE_DISTANCE`].
pub fn sphere_scene(resolution: usize, subdivisions: u32, material: Material) -> Scene {
    Scene {
        mesh: Mesh::icosphere(subdivisions),
        material,
        rotation: UnitQuaternion::identity(),
        translation: Vec3::new(0.0, 0.0, -SPHERE_DISTANCE),
        camera: Camera::square(40.0, resolution).expect("valid fixture camera"),
        flash: FlashLight::white(SPHERE_DISTANCE * SPHERE_DISTANCE),
    }
}

/// Front-facing plane at distance 3 that covers the whole frame.
pub fn plane_scene(resolution: usize, material: Material) -> Scene {
    let d = 3.0;
    let mut mesh = Mesh::plane(8);
    for p in &mut mesh.positions {
        *p *= 2.0;
    }
    Scene {
        mesh,
        material,
        rotation: UnitQuaternion::identity(),
        translation: Vec3::new(0.0, 0.0, -d),
        camera: Camera::square(40.0, resolution).expect("valid fixture camera"),
        flash: FlashLight::white(d * d),
    }
}

/// The plane fixture with a procedural diffuse texture, uniform gray
/// specular albedo 0.25 and roughness 0.3.
pub fn textured_plane_scene(resolution: usize, seed: u64) -> Scene {
    let mut tex = TextureSet::procedural(seed, 64);
    for p in tex.specular.data_mut() {
        *p = [0.25; 3];
    }
    for p in tex.roughness.data_mut() {
        *p = 0.3;
    }
    plane_scene(resolution, Material::textured(tex))
}

/// Exact normal of the sphere `(center, radius)` seen through pixel `(x, y)`.
pub fn analytic_sphere_normal(camera: &Camera, center: &Vec3, radius: f64, x: usize, y: usize) -> Option<Vec3> {
    let d = camera.ray(x, y).normalize();
    let b = d.dot(center);
    let disc = b * b - (center.norm_squared() - radius * radius);
    if disc <= 0.0 {
        return None;
    }
    let t = b - disc.sqrt();
    Some(((d * t) - center) / radius)
}
