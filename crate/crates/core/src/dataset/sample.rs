//! On-disk layout of one capture: polarized images, cues, ground truth.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::{UnitQuaternion, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::config::DatasetConfig;
use crate::brdf::Vec3;
use crate::cues::diffuse_color;
use crate::error::{Error, Result};
use crate::grid::{Grid, Mask};
use crate::io::{self, Encoding, Exposure, MapSetMeta};
use crate::maps::SvbrdfMaps;
use crate::render::{render_capture, Camera, FlashLight, Material, Mesh, RenderOptions, RenderedCapture, Scene, TextureSet};
use crate::stokes::{
    add_stokes_noise, compute_stokes, default_epsilon, normalize_stokes, visualize_stokes, CaptureSet, NormalizedStokesMap,
    PolarizedImages,
};

pub const POLARIZED_FILES: [&str; 4] = ["i000.png", "i045.png", "i090.png", "i135.png"];
pub const CUE_FILES: [&str; 2] = ["stokes_norm.png", "diffuse_cue.png"];
pub const GT_FILES: [&str; 5] = [
    "gt_diffuse.png",
    "gt_specular.png",
    "gt_roughness.png",
    "gt_normal.png",
    "gt_depth.png",
];
pub const EXTRA_FILES: [&str; 4] = ["full.png", "stokes_vis.png", "mask.png", "meta.json"];

/// Every file of a sample directory.
pub fn sample_files() -> Vec<&'static str> {
    POLARIZED_FILES
        .iter()
        .chain(&CUE_FILES)
        .chain(&GT_FILES)
        .chain(&EXTRA_FILES)
        .copied()
        .collect()
}

/// Decoding scales of the radiance images (`value = raw / 65535 · scale`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImageScales {
    pub i000: f64,
    pub i045: f64,
    pub i090: f64,
    pub i135: f64,
    pub full: f64,
}

impl ImageScales {
    pub fn by_angle(&self) -> [f64; 4] {
        [self.i000, self.i045, self.i090, self.i135]
    }
}

/// Everything needed to decode and re-render a capture (`meta.json`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub id: String,
    #[serde(default)]
    pub split: Option<String>,
    pub mesh: String,
    pub material: String,
    pub seed: u64,
    /// Unit quaternion `[w, x, y, z]`.
    pub rotation: [f64; 4],
    pub uv_scale: f64,
    pub uv_offset: [f64; 2],
    pub camera: Camera,
    /// Flash after auto-exposure.
    pub flash: FlashLight,
    /// Camera to object-center distance.
    pub object_distance: f64,
    pub object_radius: f64,
    pub noise_sigma: f64,
    pub coverage: usize,
    pub scales: ImageScales,
    pub gt: MapSetMeta,
}

/// What [`write_capture`] produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaptureFiles {
    pub scales: ImageScales,
    pub gt: MapSetMeta,
    pub coverage: usize,
}

/// Stokes cue image: R flags valid pixels, G/B hold `(u + 1) / 2`.
pub fn write_stokes_cue(m: &NormalizedStokesMap, path: impl AsRef<Path>) -> Result<()> {
    let g = Grid::from_fn(m.u.width(), m.u.height(), |x, y| {
        let i = y * m.u.width() + x;
        let u = m.u.data()[i];
        if m.valid.data()[i] {
            [1.0, 0.5 * (u[0] + 1.0), 0.5 * (u[1] + 1.0)]
        } else {
            [0.0, 0.5, 0.5]
        }
    });
    io::write_rgb16_map(&g, Encoding::UNIT, path)
}

pub fn read_stokes_cue(path: impl AsRef<Path>) -> Result<NormalizedStokesMap> {
    let (g, _) = io::read_rgb16(path.as_ref(), Encoding::UNIT, None)?;
    let valid = g.map(|p| p[0] >= 0.5);
    let u = Grid::from_fn(g.width(), g.height(), |x, y| {
        let i = y * g.width() + x;
        let p = g.data()[i];
        if valid.data()[i] {
            [2.0 * p[1] - 1.0, 2.0 * p[2] - 1.0]
        } else {
            [0.0, 0.0]
        }
    });
    Ok(NormalizedStokesMap { u, valid })
}

/// Cues computed from (decoded) polarized images: the noiseless normalized
/// Stokes map and the diffuse color.
pub fn cues_from_images(images: &CaptureSet, saturated: Option<&Mask>) -> Result<(NormalizedStokesMap, crate::cues::DiffuseColorMap)> {
    let s = compute_stokes(images)?;
    let eps = default_epsilon(&s);
    Ok((normalize_stokes(&s, eps), diffuse_color(&s, eps, saturated)))
}

/// Writes a rendered capture in the sample layout (everything except
/// `meta.json`). Cues are computed from the written, quantized images so
/// that they agree with what a reader decodes.
pub fn write_capture(dir: &Path, cap: &RenderedCapture, noise_sigma: f64, noise_seed: u64) -> Result<CaptureFiles> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut scales = [0.0; 4];
    for ((name, img), s) in POLARIZED_FILES.iter().zip(cap.images.by_angle()).zip(scales.iter_mut()) {
        *s = io::png16_write(img, dir.join(name), Exposure::Max)?.scale;
    }
    let full = Grid::from_fn(cap.images.i0.width(), cap.images.i0.height(), |x, y| {
        let (a, b) = (cap.images.i0.get(x, y), cap.images.i90.get(x, y));
        [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
    });
    let full_scale = io::png16_write(&full, dir.join("full.png"), Exposure::Max)?.scale;

    let decoded = CaptureSet::new(
        io::png16_read(dir.join(POLARIZED_FILES[0]), scales[0])?,
        io::png16_read(dir.join(POLARIZED_FILES[1]), scales[1])?,
        io::png16_read(dir.join(POLARIZED_FILES[2]), scales[2])?,
    )?;
    let (stokes_map, diffuse) = cues_from_images(&decoded, None)?;
    let noisy = add_stokes_noise(&stokes_map, noise_sigma, noise_seed)?;
    write_stokes_cue(&noisy, dir.join(CUE_FILES[0]))?;
    io::write_rgb8(&visualize_stokes(&noisy), dir.join("stokes_vis.png"))?;
    let cue = Grid::from_fn(diffuse.rgb.width(), diffuse.rgb.height(), |x, y| {
        if *diffuse.valid.get(x, y) {
            *diffuse.rgb.get(x, y)
        } else {
            [0.0; 3]
        }
    });
    io::write_rgb16_map(&cue, Encoding::UNIT, dir.join(CUE_FILES[1]))?;

    let gt = io::write_map_set(dir, "gt_", &cap.gt)?;
    io::write_mask(&cap.gbuffer.mask, dir.join("mask.png"))?;
    Ok(CaptureFiles {
        scales: ImageScales {
            i000: scales[0],
            i045: scales[1],
            i090: scales[2],
            i135: scales[3],
            full: full_scale,
        },
        gt,
        coverage: cap.gbuffer.mask.count(),
    })
}

pub fn write_meta(dir: &Path, meta: &SampleMeta) -> Result<()> {
    let path = dir.join("meta.json");
    let text = serde_json::to_string_pretty(meta)?;
    std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
}

pub fn read_meta(dir: &Path) -> Result<SampleMeta> {
    let path = dir.join("meta.json");
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// A capture read back from disk.
#[derive(Debug, Clone)]
pub struct LoadedCapture {
    pub meta: SampleMeta,
    pub images: PolarizedImages,
    pub mask: Mask,
    /// Pixels with any polarized channel at the PNG ceiling.
    pub saturated: Mask,
}

/// Reads the polarized images of a capture directory. `i135.png` may be
/// absent, in which case it is derived as `i0 + i90 − i45`; without
/// `mask.png` the mask is `s0 > 0`.
pub fn load_capture(dir: &Path) -> Result<LoadedCapture> {
    let meta = read_meta(dir)?;
    let dims = Some((meta.camera.width, meta.camera.height));
    let scales = meta.scales.by_angle();
    let mut imgs = Vec::new();
    let mut saturated = Grid::filled(meta.camera.width, meta.camera.height, false);
    for (name, scale) in POLARIZED_FILES.iter().zip(scales).take(3) {
        let (img, sat) = io::read_rgb16(&dir.join(name), Encoding { offset: 0.0, scale }, dims)?;
        for (a, b) in saturated.data_mut().iter_mut().zip(sat.data()) {
            *a |= *b;
        }
        imgs.push(img);
    }
    let i90 = imgs.pop().expect("three images");
    let i45 = imgs.pop().expect("three images");
    let i0 = imgs.pop().expect("three images");
    let capture = CaptureSet::new(i0, i45, i90)?;
    let p135 = dir.join(POLARIZED_FILES[3]);
    let images = if p135.exists() {
        let (i135, _) = io::read_rgb16(&p135, Encoding { offset: 0.0, scale: scales[3] }, dims)?;
        PolarizedImages {
            i0: capture.i0,
            i45: capture.i45,
            i90: capture.i90,
            i135,
        }
    } else {
        PolarizedImages::from_capture(&capture)?
    };
    let mask_path = dir.join("mask.png");
    let mask = if mask_path.exists() {
        io::read_mask(&mask_path)?
    } else {
        Grid::from_fn(meta.camera.width, meta.camera.height, |x, y| {
            let (a, b) = (images.i0.get(x, y), images.i90.get(x, y));
            (0..3).any(|k| a[k] + b[k] > 0.0)
        })
    };
    mask.ensure_same_dims(&images.i0, "mask")?;
    Ok(LoadedCapture {
        meta,
        images,
        mask,
        saturated,
    })
}

/// Ground-truth maps of a sample directory.
pub fn load_ground_truth(dir: &Path, meta: &SampleMeta, mask: &Mask) -> Result<SvbrdfMaps> {
    io::read_map_set(dir, "gt_", &meta.gt, mask)
}

/// Random object pose: uniform azimuth about the vertical axis and uniform
/// elevation within `±max_elevation`, or uniform over SO(3).
pub fn random_rotation(rng: &mut ChaCha8Rng, full_so3: bool, max_elevation_deg: f64) -> UnitQuaternion<f64> {
    if full_so3 {
        let q = Vector4::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
        UnitQuaternion::from_quaternion(nalgebra::Quaternion::from(q))
    } else {
        let az = rng.random_range(0.0..2.0 * PI);
        let m = max_elevation_deg.to_radians();
        let el = if m > 0.0 { rng.random_range(-m..=m) } else { 0.0 };
        UnitQuaternion::from_axis_angle(&Vec3::x_axis(), el) * UnitQuaternion::from_axis_angle(&Vec3::y_axis(), az)
    }
}

/// Identity of one sample to generate.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSpec {
    pub id: String,
    pub split: Option<String>,
    pub mesh_id: String,
    pub material_id: String,
    pub seed: u64,
}

/// Renders one sample into `dir`: random pose and UV placement from the
/// seed, auto-exposed flash, cues with noise, ground truth. Deterministic in
/// `(mesh, textures, spec, cfg)`.
pub fn generate_sample(mesh: &Mesh, textures: &TextureSet, spec: &SampleSpec, cfg: &DatasetConfig, dir: &Path) -> Result<SampleMeta> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let rotation = random_rotation(&mut rng, cfg.rotation.full_so3, cfg.rotation.max_elevation_deg);
    let uv_scale = if cfg.uv_scale[1] > cfg.uv_scale[0] {
        rng.random_range(cfg.uv_scale[0]..cfg.uv_scale[1])
    } else {
        cfg.uv_scale[0]
    };
    let uv_offset = [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
    let noise_seed: u64 = rng.random();

    let camera = Camera::square(cfg.fov_deg, cfg.resolution)?;
    let radius = 1.0;
    let distance = camera.framing_distance(radius, cfg.margin);
    let scene = Scene {
        mesh: mesh.clone(),
        material: Material::Textured {
            textures: textures.clone(),
            uv_scale,
            uv_offset,
        },
        rotation,
        translation: Vec3::new(0.0, 0.0, -distance),
        camera,
        flash: FlashLight::white(distance * distance),
    };
    scene.validate()?;
    let cap = render_capture(
        &scene,
        RenderOptions {
            auto_exposure: Some(cfg.exposure),
            ..Default::default()
        },
    )?;
    if cap.gbuffer.mask.count() == 0 {
        return Err(Error::Rejected(format!("{}: rendering has empty coverage", spec.id)));
    }
    let files = write_capture(dir, &cap, cfg.noise_sigma, noise_seed)?;
    let q = rotation.into_inner();
    let meta = SampleMeta {
        id: spec.id.clone(),
        split: spec.split.clone(),
        mesh: spec.mesh_id.clone(),
        material: spec.material_id.clone(),
        seed: spec.seed,
        rotation: [q.w, q.i, q.j, q.k],
        uv_scale,
        uv_offset,
        camera,
        flash: cap.flash,
        object_distance: distance,
        object_radius: radius,
        noise_sigma: cfg.noise_sigma,
        coverage: files.coverage,
        scales: files.scales,
        gt: files.gt,
    };
    write_meta(dir, &meta)?;
    Ok(meta)
}
