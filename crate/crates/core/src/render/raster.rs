use nalgebra::UnitQuaternion;
use rayon::prelude::*;

use super::camera::{Camera, FlashLight};
use super::material::Material;
use super::mesh::Mesh;
use crate::brdf::Vec3;
use crate::error::{Error, Result};
use crate::grid::{Grid, Mask, ScalarMap};
use crate::maps::SvbrdfMaps;

/// Minimum camera-space depth of any vertex.
pub const NEAR_PLANE: f64 = 1e-2;

const BAND_ROWS: usize = 16;

#[derive(Debug, Clone)]
pub struct Scene {
    pub mesh: Mesh,
    pub material: Material,
    pub rotation: UnitQuaternion<f64>,
    pub translation: Vec3,
    pub camera: Camera,
    pub flash: FlashLight,
}

impl Scene {
    pub fn validate(&self) -> Result<()> {
        self.mesh.validate()?;
        self.camera.validate()?;
        self.flash.validate()?;
        for p in &self.mesh.positions {
            let q = self.rotation * p + self.translation;
            if -q.z <= NEAR_PLANE {
                return Err(Error::InvalidInput(format!(
                    "vertex at camera-space depth {:.4} is not in front of the near plane",
                    -q.z
                )));
            }
        }
        Ok(())
    }
}

/// Per-pixel geometry at pixel centers, camera space.
#[derive(Debug, Clone, PartialEq)]
pub struct GBuffer {
    pub position: Grid<Vec3>,
    pub normal: Grid<Vec3>,
    pub uv: Grid<[f64; 2]>,
    /// Distance along −z.
    pub depth: ScalarMap,
    pub mask: Mask,
}

impl GBuffer {
    pub fn dims(&self) -> (usize, usize) {
        self.mask.dims()
    }
}

struct Prepared {
    id: u32,
    screen: [(f64, f64); 3],
    depth: [f64; 3],
    area: f64,
    x0: usize,
    x1: usize,
    y0: usize,
    y1: usize,
}

#[inline]
fn edge(a: (f64, f64), b: (f64, f64), p: (f64, f64)) -> f64 {
    (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0)
}

/// Z-buffer rasterization with back-face culling and perspective-correct
/// attribute interpolation. Deterministic for a given scene: ties in depth
/// keep the lower triangle index.
pub fn rasterize(scene: &Scene) -> Result<GBuffer> {
    scene.validate()?;
    let cam = scene.camera;
    let (w, h) = (cam.width, cam.height);
    let mesh = &scene.mesh;
    let pos: Vec<Vec3> = mesh
        .positions
        .iter()
        .map(|p| scene.rotation * p + scene.translation)
        .collect();
    let nrm: Vec<Vec3> = mesh.normals.iter().map(|n| scene.rotation * n).collect();
    let proj: Vec<(f64, f64, f64)> = pos.iter().map(|p| cam.project(p)).collect();

    let prepared: Vec<Prepared> = mesh
        .triangles
        .iter()
        .enumerate()
        .filter_map(|(id, t)| {
            let [a, b, c] = t.map(|i| pos[i as usize]);
            if (b - a).cross(&(c - a)).dot(&a) >= 0.0 {
                return None;
            }
            let screen = t.map(|i| (proj[i as usize].0, proj[i as usize].1));
            let depth = t.map(|i| proj[i as usize].2);
            let area = edge(screen[0], screen[1], screen[2]);
            if area == 0.0 {
                return None;
            }
            let xmin = screen.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
            let xmax = screen.iter().map(|s| s.0).fold(f64::NEG_INFINITY, f64::max);
            let ymin = screen.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
            let ymax = screen.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
            // pixel x covers center x + 0.5
            let x0 = (xmin - 0.5).ceil().max(0.0);
            let x1 = (xmax - 0.5).floor().min(w as f64 - 1.0);
            let y0 = (ymin - 0.5).ceil().max(0.0);
            let y1 = (ymax - 0.5).floor().min(h as f64 - 1.0);
            if x0 > x1 || y0 > y1 {
                return None;
            }
            Some(Prepared {
                id: id as u32,
                screen,
                depth,
                area,
                x0: x0 as usize,
                x1: x1 as usize,
                y0: y0 as usize,
                y1: y1 as usize,
            })
        })
        .collect();

    let bands: Vec<(usize, usize)> = (0..h)
        .step_by(BAND_ROWS)
        .map(|y| (y, (y + BAND_ROWS).min(h)))
        .collect();

    // (triangle id, perspective-correct barycentrics, depth) per pixel
    type Frag = Option<(u32, [f64; 3], f64)>;
    let frags: Vec<Vec<Frag>> = bands
        .par_iter()
        .map(|&(ya, yb)| {
            let mut zbuf = vec![f64::INFINITY; (yb - ya) * w];
            let mut out: Vec<Frag> = vec![None; (yb - ya) * w];
            for t in &prepared {
                if t.y1 < ya || t.y0 >= yb {
                    continue;
                }
                for y in t.y0.max(ya)..=t.y1.min(yb - 1) {
                    for x in t.x0..=t.x1 {
                        let p = (x as f64 + 0.5, y as f64 + 0.5);
                        let b = [
                            edge(t.screen[1], t.screen[2], p) / t.area,
                            edge(t.screen[2], t.screen[0], p) / t.area,
                            edge(t.screen[0], t.screen[1], p) / t.area,
                        ];
                        if b.iter().any(|&v| v < 0.0) {
                            continue;
                        }
                        let inv = [b[0] / t.depth[0], b[1] / t.depth[1], b[2] / t.depth[2]];
                        let depth = 1.0 / (inv[0] + inv[1] + inv[2]);
                        let k = (y - ya) * w + x;
                        if depth < zbuf[k] {
                            zbuf[k] = depth;
                            out[k] = Some((t.id, inv.map(|v| v * depth), depth));
                        }
                    }
                }
            }
            out
        })
        .collect();

    let n = w * h;
    let mut position = Vec::with_capacity(n);
    let mut normal = Vec::with_capacity(n);
    let mut uv = Vec::with_capacity(n);
    let mut depth = Vec::with_capacity(n);
    let mut mask = Vec::with_capacity(n);
    for (i, f) in frags.into_iter().flatten().enumerate() {
        let (x, y) = (i % w, i / w);
        match f {
            Some((id, b, d)) => {
                let t = mesh.triangles[id as usize];
                let nn: Vec3 = (0..3).map(|k| nrm[t[k] as usize] * b[k]).sum();
                let tuv = (0..3).fold([0.0, 0.0], |acc, k| {
                    let u = mesh.uvs[t[k] as usize];
                    [acc[0] + b[k] * u[0], acc[1] + b[k] * u[1]]
                });
                position.push(cam.unproject(x, y, d));
                normal.push(nn.try_normalize(1e-300).unwrap_or_else(Vec3::z));
                uv.push(tuv);
                depth.push(d);
                mask.push(true);
            }
            None => {
                position.push(Vec3::zeros());
                normal.push(Vec3::zeros());
                uv.push([0.0, 0.0]);
                depth.push(0.0);
                mask.push(false);
            }
        }
    }
    Ok(GBuffer {
        position: Grid::from_vec(w, h, position)?,
        normal: Grid::from_vec(w, h, normal)?,
        uv: Grid::from_vec(w, h, uv)?,
        depth: Grid::from_vec(w, h, depth)?,
        mask: Grid::from_vec(w, h, mask)?,
    })
}

/// Ground-truth maps: reflectance sampled through the G-buffer UVs,
/// normal and depth from the G-buffer.
pub fn ground_truth_maps(material: &Material, g: &GBuffer) -> SvbrdfMaps {
    let (w, h) = g.dims();
    let mut maps = SvbrdfMaps::empty(w, h);
    for i in 0..w * h {
        if !g.mask.data()[i] {
            continue;
        }
        let r = material.sample(g.uv.data()[i]);
        maps.diffuse.data_mut()[i] = r.diffuse;
        maps.specular.data_mut()[i] = r.specular;
        maps.roughness.data_mut()[i] = r.roughness;
        maps.normal.data_mut()[i] = g.normal.data()[i];
        maps.depth.data_mut()[i] = g.depth.data()[i];
        maps.mask.data_mut()[i] = true;
    }
    maps
}
