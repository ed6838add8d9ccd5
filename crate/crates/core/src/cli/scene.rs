//! Scene description files for `render`.

use std::path::{Path, PathBuf};

use nalgebra::UnitQuaternion;
use serde::{Deserialize, Serialize};

use crate::brdf::Vec3;
use crate::dataset::{derive_seed, load_texture_dir};
use crate::error::{Error, Result};
use crate::render::{load_obj, Camera, FlashLight, Material, Mesh, Scene, TextureSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeshSpec {
    Icosphere {
        #[serde(default = "default_subdivisions")]
        subdivisions: u32,
    },
    Torus {
        #[serde(default = "default_minor")]
        minor_ratio: f64,
    },
    Blob {
        #[serde(default)]
        seed: u64,
    },
    Plane,
    Obj {
        path: PathBuf,
    },
}

fn default_subdivisions() -> u32 {
    4
}

fn default_minor() -> f64 {
    0.35
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MaterialSpec {
    Uniform {
        diffuse: [f64; 3],
        specular: [f64; 3],
        roughness: f64,
    },
    /// Seeded procedural texture set; mixed with the global seed.
    Procedural {
        #[serde(default)]
        seed: u64,
        #[serde(default = "default_texture_res")]
        resolution: usize,
        #[serde(default = "one")]
        uv_scale: f64,
    },
    /// Directory with `diffuse.png`, `specular.png`, `roughness.png`.
    Textures {
        dir: PathBuf,
        #[serde(default = "one")]
        uv_scale: f64,
    },
}

fn default_texture_res() -> usize {
    256
}

fn one() -> f64 {
    1.0
}

/// A single-object capture setup. The object is normalized to unit radius
/// (the plane spans `[-2, 2]²`) and placed on the optical axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneFile {
    pub mesh: MeshSpec,
    pub material: MaterialSpec,
    pub resolution: usize,
    pub fov_deg: f64,
    /// Camera to object-center distance; framed automatically when absent.
    pub distance: Option<f64>,
    /// Object rotation as XYZ Euler angles in degrees.
    pub rotation_deg: [f64; 3],
    /// Auto-exposure target for the 99th percentile of `s0`; when absent
    /// the flash intensity is `flash · distance²`.
    pub exposure: Option<f64>,
    pub flash: f64,
    pub noise_sigma: f64,
}

impl Default for SceneFile {
    fn default() -> Self {
        Self {
            mesh: MeshSpec::Icosphere { subdivisions: 4 },
            material: MaterialSpec::Uniform {
                diffuse: [0.6, 0.4, 0.3],
                specular: [0.25; 3],
                roughness: 0.3,
            },
            resolution: 256,
            fov_deg: 40.0,
            distance: None,
            rotation_deg: [0.0; 3],
            exposure: None,
            flash: 1.0,
            noise_sigma: 0.0,
        }
    }
}

impl SceneFile {
    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let mut s: SceneFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let MeshSpec::Obj { path } = &mut s.mesh {
            fix(path);
        }
        if let MaterialSpec::Textures { dir, .. } = &mut s.material {
            fix(dir);
        }
        Ok(s)
    }

    pub fn mesh_id(&self) -> String {
        match &self.mesh {
            MeshSpec::Icosphere { subdivisions } => format!("icosphere:{subdivisions}"),
            MeshSpec::Torus { minor_ratio } => format!("torus:{minor_ratio}"),
            MeshSpec::Blob { seed } => format!("blob:{seed}"),
            MeshSpec::Plane => "plane".into(),
            MeshSpec::Obj { path } => format!("obj:{}", path.display()),
        }
    }

    pub fn material_id(&self) -> String {
        match &self.material {
            MaterialSpec::Uniform { .. } => "uniform".into(),
            MaterialSpec::Procedural { seed, .. } => format!("procedural:{seed}"),
            MaterialSpec::Textures { dir, .. } => format!("dir:{}", dir.display()),
        }
    }

    /// Builds the scene; also returns the object's depth extent in front
    /// of its center (the radius for normalized meshes).
    pub fn build(&self, seed: u64) -> Result<(Scene, f64)> {
        let (mesh, radius) = match &self.mesh {
            MeshSpec::Icosphere { subdivisions } => (Mesh::icosphere(*subdivisions).normalized(), 1.0),
            MeshSpec::Torus { minor_ratio } => (Mesh::torus(*minor_ratio, 96, 48).normalized(), 1.0),
            MeshSpec::Blob { seed } => (Mesh::blob(*seed, 4).normalized(), 1.0),
            MeshSpec::Plane => {
                let mut m = Mesh::plane(8);
                for p in &mut m.positions {
                    *p *= 2.0;
                }
                // Flat: no depth extent in front of its center.
                (m, 0.0)
            }
            MeshSpec::Obj { path } => (load_obj(path)?.normalized(), 1.0),
        };
        let material = match &self.material {
            MaterialSpec::Uniform {
                diffuse,
                specular,
                roughness,
            } => Material::uniform(*diffuse, *specular, *roughness),
            MaterialSpec::Procedural {
                seed: s,
                resolution,
                uv_scale,
            } => Material::Textured {
                textures: TextureSet::procedural(derive_seed(seed, &["scene-material", &s.to_string()]), *resolution),
                uv_scale: *uv_scale,
                uv_offset: [0.0, 0.0],
            },
            MaterialSpec::Textures { dir, uv_scale } => Material::Textured {
                textures: load_texture_dir(dir)?,
                uv_scale: *uv_scale,
                uv_offset: [0.0, 0.0],
            },
        };
        let camera = Camera::square(self.fov_deg, self.resolution)?;
        let d = match self.distance {
            Some(d) => d,
            None if matches!(self.mesh, MeshSpec::Plane) => 3.0,
            None => camera.framing_distance(radius, 1.1),
        };
        let [rx, ry, rz] = self.rotation_deg.map(f64::to_radians);
        let scene = Scene {
            mesh,
            material,
            rotation: UnitQuaternion::from_euler_angles(rx, ry, rz),
            translation: Vec3::new(0.0, 0.0, -d),
            camera,
            flash: FlashLight::white(self.flash * d * d),
        };
        scene.validate()?;
        Ok((scene, radius))
    }
}
