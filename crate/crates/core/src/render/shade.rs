//! Deferred polarized shading under a collocated flash.
//!
//! Diffuse exitance is partially linearly polarized with degree
//! [`diffuse_dop_cos`] and orientation along `e = n × v`, i.e. perpendicular
//! to the plane of incidence. For a viewing ray along the optical axis this
//! is the normal's image-plane azimuth plus 90°, and it is invariant under
//! flipping the azimuth by π.

use std::f64::consts::FRAC_1_PI;

use rayon::prelude::*;

use super::camera::{Camera, FlashLight, PointLight};
use super::raster::{ground_truth_maps, rasterize, GBuffer, Scene};
use crate::brdf::{collocated_specular, diffuse_dop_cos, eval_brdf, fresnel_cos, MaterialSample, Vec3, DEFAULT_IOR};
use crate::error::{Error, Result};
use crate::grid::{Grid, RadianceImage, Rgb};
use crate::maps::SvbrdfMaps;
use crate::stokes::{filter_image, PolarizedImages, StokesImage};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ShadeOptions {
    /// Adds polarization of the specular lobe (degree from the Fresnel
    /// reflectances at the zenith angle, orthogonal to the diffuse
    /// orientation). Off for synthesis.
    pub specular_polarization: bool,
    /// Forces zero polarization everywhere.
    pub unpolarized: bool,
}

/// `(cos 2χ, sin 2χ)` of the diffuse polarization orientation, and whether
/// it is defined (`n` not parallel to `v`).
#[inline]
pub fn orientation(n: &Vec3, v: &Vec3) -> (f64, f64) {
    let ex = n.y * v.z - n.z * v.y;
    let ey = n.z * v.x - n.x * v.z;
    let r2 = ex * ex + ey * ey;
    if r2 < 1e-30 {
        (0.0, 0.0)
    } else {
        ((ex * ex - ey * ey) / r2, 2.0 * ex * ey / r2)
    }
}

/// Stokes components `[s0, s1, s2]` (RGB each) leaving surface point `p`
/// (camera space) towards the camera.
pub fn shade_point(p: &Vec3, m: &MaterialSample, flash: &FlashLight, opts: ShadeOptions) -> [Rgb; 3] {
    let d2 = p.norm_squared();
    let v = -p / d2.sqrt();
    let c = m.normal.dot(&v);
    if c <= 0.0 {
        return [[0.0; 3]; 3];
    }
    let e: Rgb = flash.intensity.map(|i| i / d2);
    let (g, _, _) = collocated_specular(c, m.roughness, m.ior);
    let ld: Rgb = std::array::from_fn(|k| m.diffuse_albedo[k] * c * FRAC_1_PI * e[k]);
    let ls: Rgb = std::array::from_fn(|k| m.specular_albedo[k] * g * e[k]);
    let s0 = std::array::from_fn(|k| ld[k] + ls[k]);
    if opts.unpolarized {
        return [s0, [0.0; 3], [0.0; 3]];
    }
    let (dop, _) = diffuse_dop_cos(c, m.ior);
    let (cc, ss) = orientation(&m.normal, &v);
    let mut s1: Rgb = std::array::from_fn(|k| ld[k] * dop * cc);
    let mut s2: Rgb = std::array::from_fn(|k| ld[k] * dop * ss);
    if opts.specular_polarization {
        let f = fresnel_cos(c, m.ior);
        let dop_s = (f.r_s - f.r_p) / (f.r_s + f.r_p);
        for k in 0..3 {
            s1[k] -= ls[k] * dop_s * cc;
            s2[k] -= ls[k] * dop_s * ss;
        }
    }
    [s0, s1, s2]
}

fn assemble(w: usize, h: usize, px: Vec<[Rgb; 3]>) -> StokesImage {
    let mut s = StokesImage::zeros(w, h);
    for (i, [a, b, c]) in px.into_iter().enumerate() {
        s.s0.data_mut()[i] = a;
        s.s1.data_mut()[i] = b;
        s.s2.data_mut()[i] = c;
    }
    s
}

/// Shades a G-buffer with per-pixel materials. Uncovered pixels are zero.
pub fn shade_polarized(
    g: &GBuffer,
    materials: &Grid<MaterialSample>,
    flash: &FlashLight,
    opts: ShadeOptions,
) -> Result<StokesImage> {
    g.mask.ensure_same_dims(materials, "materials")?;
    let (w, h) = g.dims();
    let px: Vec<[Rgb; 3]> = (0..w * h)
        .into_par_iter()
        .map(|i| {
            if g.mask.data()[i] {
                shade_point(&g.position.data()[i], &materials.data()[i], flash, opts)
            } else {
                [[0.0; 3]; 3]
            }
        })
        .collect();
    Ok(assemble(w, h, px))
}

/// Material at pixel `i` of a map set.
pub fn material_at(maps: &SvbrdfMaps, i: usize) -> MaterialSample {
    MaterialSample {
        diffuse_albedo: maps.diffuse.data()[i],
        specular_albedo: maps.specular.data()[i],
        roughness: maps.roughness.data()[i],
        normal: maps.normal.data()[i],
        ior: DEFAULT_IOR,
    }
}

/// Shades a map set directly; positions come from the depth map.
pub fn shade_maps(maps: &SvbrdfMaps, camera: &Camera, flash: &FlashLight, opts: ShadeOptions) -> StokesImage {
    let (w, h) = maps.dims();
    let px: Vec<[Rgb; 3]> = (0..w * h)
        .into_par_iter()
        .map(|i| {
            if maps.mask.data()[i] {
                let p = camera.unproject(i % w, i / w, maps.depth.data()[i]);
                shade_point(&p, &material_at(maps, i), flash, opts)
            } else {
                [[0.0; 3]; 3]
            }
        })
        .collect();
    assemble(w, h, px)
}

pub fn filter_all(s: &StokesImage) -> Result<PolarizedImages> {
    Ok(PolarizedImages {
        i0: filter_image(s, 0.0)?,
        i45: filter_image(s, 45.0)?,
        i90: filter_image(s, 90.0)?,
        i135: filter_image(s, 135.0)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RenderOptions {
    pub shade: ShadeOptions,
    /// Rescales the flash so the 99th percentile of covered-pixel `s0`
    /// (max channel) equals this value.
    pub auto_exposure: Option<f64>,
}


#[derive(Debug, Clone)]
pub struct RenderedCapture {
    pub images: PolarizedImages,
    pub stokes: StokesImage,
    pub gbuffer: GBuffer,
    pub gt: SvbrdfMaps,
    /// Flash actually used, after auto-exposure.
    pub flash: FlashLight,
}

/// Renders the four polarizer-filtered images with ground truth.
pub fn render_capture(scene: &Scene, opts: RenderOptions) -> Result<RenderedCapture> {
    let g = rasterize(scene)?;
    let gt = ground_truth_maps(&scene.material, &g);
    let (w, h) = g.dims();
    let materials = Grid::from_fn(w, h, |x, y| {
        let i = y * w + x;
        if g.mask.data()[i] {
            material_at(&gt, i)
        } else {
            MaterialSample::new([0.0; 3], [0.0; 3], 1.0, Vec3::z())
        }
    });
    let mut flash = scene.flash;
    let mut stokes = shade_polarized(&g, &materials, &flash, opts.shade)?;
    if let Some(target) = opts.auto_exposure {
        let mut vals: Vec<f64> = stokes
            .s0
            .data()
            .iter()
            .zip(g.mask.data())
            .filter(|(_, &m)| m)
            .map(|(p, _)| p[0].max(p[1]).max(p[2]))
            .collect();
        if !vals.is_empty() {
            vals.sort_by(f64::total_cmp);
            let p99 = vals[((vals.len() - 1) as f64 * 0.99).round() as usize];
            if p99 > 0.0 {
                let k = target / p99;
                flash = flash.scaled(k);
                stokes = shade_polarized(&g, &materials, &flash, opts.shade)?;
            }
        }
    }
    let images = filter_all(&stokes)?;
    Ok(RenderedCapture {
        images,
        stokes,
        gbuffer: g,
        gt,
        flash,
    })
}

/// Unpolarized radiance of a map set lit by an arbitrary point light.
/// Surface positions are reconstructed from the depth map.
pub fn render_relit(maps: &SvbrdfMaps, light: &PointLight, camera: &Camera) -> Result<RadianceImage> {
    let (w, h) = maps.dims();
    if (camera.width, camera.height) != (w, h) {
        return Err(Error::DimensionMismatch(format!(
            "camera {}x{} vs maps {w}x{h}",
            camera.width, camera.height
        )));
    }
    let lp = light.position();
    let px: Vec<Rgb> = (0..w * h)
        .into_par_iter()
        .map(|i| {
            if !maps.mask.data()[i] {
                return [0.0; 3];
            }
            let p = camera.unproject(i % w, i / w, maps.depth.data()[i]);
            let to_light = lp - p;
            let d2 = to_light.norm_squared();
            if d2 <= 0.0 {
                return [0.0; 3];
            }
            let l = to_light / d2.sqrt();
            let v = -p.normalize();
            let (d, s) = eval_brdf(&material_at(maps, i), &l, &v);
            std::array::from_fn(|k| (d[k] + s[k]) * light.intensity[k] / d2)
        })
        .collect();
    Grid::from_vec(w, h, px)
}
