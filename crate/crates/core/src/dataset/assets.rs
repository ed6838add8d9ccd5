//! Mesh and material catalogs.

use std::path::{Path, PathBuf};

use super::config::DatasetConfig;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::render::{load_obj, Mesh, TextureSet};

#[derive(Debug, Clone, PartialEq)]
pub enum MeshAsset {
    Obj(PathBuf),
    /// 0: icosphere, 1: torus, otherwise a seeded blob.
    Builtin(usize),
}

impl MeshAsset {
    pub fn id(&self) -> String {
        match self {
            MeshAsset::Obj(p) => format!("obj:{}", p.display()),
            MeshAsset::Builtin(k) => format!("builtin:{k:03}"),
        }
    }

    /// Loaded mesh, centered and scaled to unit radius.
    pub fn load(&self) -> Result<Mesh> {
        let m = match self {
            MeshAsset::Obj(p) => load_obj(p)?,
            MeshAsset::Builtin(0) => Mesh::icosphere(4),
            MeshAsset::Builtin(1) => Mesh::torus(0.35, 96, 48),
            MeshAsset::Builtin(k) => Mesh::blob(*k as u64, 4),
        };
        Ok(m.normalized())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MaterialAsset {
    /// Directory with `diffuse.png`, `specular.png` and `roughness.png`.
    Dir(PathBuf),
    Procedural(usize),
}

impl MaterialAsset {
    pub fn id(&self) -> String {
        match self {
            MaterialAsset::Dir(p) => format!("dir:{}", p.display()),
            MaterialAsset::Procedural(k) => format!("procedural:{k:04}"),
        }
    }

    pub fn load(&self, cfg: &DatasetConfig) -> Result<TextureSet> {
        match self {
            MaterialAsset::Dir(p) => load_texture_dir(p),
            MaterialAsset::Procedural(k) => Ok(TextureSet::procedural(
                super::derive_seed(cfg.seed, &["material", &k.to_string()]),
                cfg.texture_resolution,
            )),
        }
    }
}

pub fn mesh_catalog(cfg: &DatasetConfig) -> Vec<MeshAsset> {
    cfg.meshes
        .paths
        .iter()
        .cloned()
        .map(MeshAsset::Obj)
        .chain((0..cfg.meshes.builtin).map(MeshAsset::Builtin))
        .collect()
}

pub fn material_catalog(cfg: &DatasetConfig) -> Vec<MaterialAsset> {
    cfg.materials
        .dirs
        .iter()
        .cloned()
        .map(MaterialAsset::Dir)
        .chain((0..cfg.materials.procedural).map(MaterialAsset::Procedural))
        .collect()
}

/// Reads a texture set; 8- or 16-bit PNGs are taken as linear values in
/// `[0, 1]`. A single-channel specular map is broadcast to RGB.
pub fn load_texture_dir(dir: &Path) -> Result<TextureSet> {
    let open = |name: &str| -> Result<image::DynamicImage> {
        let p = dir.join(name);
        if !p.exists() {
            return Err(Error::MissingFile(p));
        }
        Ok(image::open(&p)?)
    };
    let rgb = |img: image::DynamicImage| -> Result<Grid<[f64; 3]>> {
        let img = img.into_rgb16();
        let (w, h) = (img.width() as usize, img.height() as usize);
        Grid::from_vec(w, h, img.pixels().map(|p| p.0.map(|v| v as f64 / 65535.0)).collect())
    };
    let diffuse = rgb(open("diffuse.png")?)?;
    let specular = rgb(open("specular.png")?)?;
    let rough = open("roughness.png")?.into_luma16();
    let (w, h) = (rough.width() as usize, rough.height() as usize);
    let roughness = Grid::from_vec(
        w,
        h,
        rough
            .pixels()
            .map(|p| (p.0[0] as f64 / 65535.0).clamp(crate::brdf::ALPHA_MIN, 1.0))
            .collect(),
    )?;
    Ok(TextureSet {
        diffuse,
        specular,
        roughness,
    })
}

/// One (mesh, material, rotation) combination of a split, as indices into
/// the split's asset ranges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Combination {
    pub index: usize,
    pub mesh: usize,
    pub material: usize,
    /// How many times this mesh × material pair occurred before.
    pub rotation: usize,
}

/// Enumerates `samples` combinations cycling through all mesh × material
/// pairs; pairs repeat (with a new random rotation) once exhausted.
pub fn combinations(meshes: usize, materials: usize, samples: usize) -> Vec<Combination> {
    let pairs = meshes * materials;
    (0..samples)
        .map(|k| {
            let p = k % pairs;
            Combination {
                index: k,
                mesh: p % meshes,
                material: p / meshes,
                rotation: k / pairs,
            }
        })
        .collect()
}
