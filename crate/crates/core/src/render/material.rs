use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::brdf::ALPHA_MIN;
use crate::grid::{Grid, Rgb, ScalarMap};

/// Reflectance texture maps sampled by UV with wrap-around.
#[derive(Debug, Clone, PartialEq)]
pub struct TextureSet {
    pub diffuse: Grid<Rgb>,
    pub specular: Grid<Rgb>,
    pub roughness: ScalarMap,
}

/// Per-point reflectance without geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reflectance {
    pub diffuse: Rgb,
    pub specular: Rgb,
    pub roughness: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Material {
    Uniform(Reflectance),
    Textured {
        textures: TextureSet,
        uv_scale: f64,
        uv_offset: [f64; 2],
    },
}

impl Material {
    pub fn uniform(diffuse: Rgb, specular: Rgb, roughness: f64) -> Self {
        Material::Uniform(Reflectance {
            diffuse,
            specular,
            roughness: roughness.clamp(ALPHA_MIN, 1.0),
        })
    }

    pub fn textured(textures: TextureSet) -> Self {
        Material::Textured {
            textures,
            uv_scale: 1.0,
            uv_offset: [0.0, 0.0],
        }
    }

    pub fn sample(&self, uv: [f64; 2]) -> Reflectance {
        match self {
            Material::Uniform(r) => *r,
            Material::Textured {
                textures,
                uv_scale,
                uv_offset,
            } => {
                let u = uv[0] * uv_scale + uv_offset[0];
                let v = uv[1] * uv_scale + uv_offset[1];
                Reflectance {
                    diffuse: bilinear(&textures.diffuse, u, v, |p| *p),
                    specular: bilinear(&textures.specular, u, v, |p| *p),
                    roughness: bilinear(&textures.roughness, u, v, |p| [*p; 3])[0]
                        .clamp(ALPHA_MIN, 1.0),
                }
            }
        }
    }
}

fn bilinear<T>(g: &Grid<T>, u: f64, v: f64, get: impl Fn(&T) -> Rgb) -> Rgb {
    let (w, h) = (g.width() as f64, g.height() as f64);
    let x = u.rem_euclid(1.0) * w - 0.5;
    let y = v.rem_euclid(1.0) * h - 0.5;
    let (x0, y0) = (x.floor(), y.floor());
    let (fx, fy) = (x - x0, y - y0);
    let wrap = |i: f64, n: f64| i.rem_euclid(n) as usize;
    let xs = [wrap(x0, w), wrap(x0 + 1.0, w)];
    let ys = [wrap(y0, h), wrap(y0 + 1.0, h)];
    let mut out = [0.0; 3];
    for (j, wy) in [(0, 1.0 - fy), (1, fy)] {
        for (i, wx) in [(0, 1.0 - fx), (1, fx)] {
            let p = get(g.get(xs[i], ys[j]));
            for k in 0..3 {
                out[k] += wx * wy * p[k];
            }
        }
    }
    out
}

/// Smooth tileable value noise in `[0, 1]` on a `cells × cells` lattice.
fn value_noise(rng: &mut ChaCha8Rng, res: usize, cells: usize) -> Vec<f64> {
    let lattice: Vec<f64> = (0..cells * cells).map(|_| rng.random::<f64>()).collect();
    let smooth = |t: f64| t * t * (3.0 - 2.0 * t);
    let mut out = Vec::with_capacity(res * res);
    for y in 0..res {
        for x in 0..res {
            let fx = (x as f64 + 0.5) / res as f64 * cells as f64;
            let fy = (y as f64 + 0.5) / res as f64 * cells as f64;
            let (ix, iy) = (fx.floor() as usize, fy.floor() as usize);
            let (tx, ty) = (smooth(fx.fract()), smooth(fy.fract()));
            let at = |i: usize, j: usize| lattice[(j % cells) * cells + (i % cells)];
            let a = at(ix, iy) * (1.0 - tx) + at(ix + 1, iy) * tx;
            let b = at(ix, iy + 1) * (1.0 - tx) + at(ix + 1, iy + 1) * tx;
            out.push(a * (1.0 - ty) + b * ty);
        }
    }
    out
}

impl TextureSet {
    pub fn uniform(res: usize, r: Reflectance) -> Self {
        Self {
            diffuse: Grid::filled(res, res, r.diffuse),
            specular: Grid::filled(res, res, r.specular),
            roughness: Grid::filled(res, res, r.roughness),
        }
    }

    /// Random two-tone material: a noise or checker pattern blends two
    /// diffuse colors, with correlated specular and roughness variation.
    pub fn procedural(seed: u64, res: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let color = |rng: &mut ChaCha8Rng| -> Rgb {
            let base: f64 = rng.random_range(0.15..0.85);
            std::array::from_fn(|_| (base * rng.random_range(0.5..1.2)).clamp(0.02, 0.95))
        };
        let d0 = color(&mut rng);
        let d1 = color(&mut rng);
        let spec0: f64 = rng.random_range(0.05..0.6);
        let spec1: f64 = rng.random_range(0.05..0.6);
        let tint: f64 = rng.random_range(0.0..0.3);
        let rough0: f64 = rng.random_range(0.15..0.9);
        let rough1: f64 = rng.random_range(0.15..0.9);
        let checker = rng.random_bool(0.3);
        let cells = rng.random_range(2..7);
        let pattern: Vec<f64> = if checker {
            (0..res * res)
                .map(|i| {
                    let (x, y) = (i % res * cells / res, i / res * cells / res);
                    ((x + y) % 2) as f64
                })
                .collect()
        } else {
            let n = value_noise(&mut rng, res, cells);
            let sharp: f64 = rng.random_range(1.0..6.0);
            n.into_iter()
                .map(|t| (0.5 + (t - 0.5) * sharp).clamp(0.0, 1.0))
                .collect()
        };
        let lerp = |a: f64, b: f64, t: f64| a + (b - a) * t;
        let diffuse = pattern
            .iter()
            .map(|&t| std::array::from_fn(|k| lerp(d0[k], d1[k], t)))
            .collect();
        let specular = pattern
            .iter()
            .map(|&t| {
                let s = lerp(spec0, spec1, t);
                std::array::from_fn(|k| (s * (1.0 - tint + tint * d0[k])).clamp(0.0, 1.0))
            })
            .collect();
        let roughness = pattern
            .iter()
            .map(|&t| lerp(rough0, rough1, t).clamp(ALPHA_MIN, 1.0))
            .collect();
        Self {
            diffuse: Grid::from_vec(res, res, diffuse).expect("res > 0"),
            specular: Grid::from_vec(res, res, specular).expect("res > 0"),
            roughness: Grid::from_vec(res, res, roughness).expect("res > 0"),
        }
    }
}
