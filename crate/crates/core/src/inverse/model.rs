//! Per-pixel forward model of the collocated-flash polarized shading, with a
//! hand-derived vector–Jacobian product.
//!
//! Parameters of one pixel are packed as `[ρd r, ρd g, ρd b, ρs r, ρs g, ρs b,
//! α, a, b]` where `(a, b)` is the stereographic encoding of the
//! camera-space normal.

use std::f64::consts::FRAC_1_PI;

use crate::brdf::{collocated_specular, diffuse_dop_cos, Vec3, DEFAULT_IOR};
use crate::grid::Rgb;
use crate::render::orientation;

pub const N_PARAMS: usize = 9;
pub const DIFFUSE: usize = 0;
pub const SPECULAR: usize = 3;
pub const ROUGHNESS: usize = 6;
pub const NORMAL_A: usize = 7;
pub const NORMAL_B: usize = 8;

pub type Params = [f64; N_PARAMS];

/// `n = (2a, 2b, 1 − a² − b²) / (1 + a² + b²)`.
pub fn from_stereo(a: f64, b: f64) -> Vec3 {
    let q = 1.0 + a * a + b * b;
    Vec3::new(2.0 * a / q, 2.0 * b / q, (2.0 - q) / q)
}

/// Inverse of [`from_stereo`]; `n` must not be `−z`.
pub fn to_stereo(n: &Vec3) -> (f64, f64) {
    let d = 1.0 + n.z;
    (n.x / d, n.y / d)
}

/// Normal and its partials with respect to `a` and `b`.
pub fn stereo_jacobian(a: f64, b: f64) -> (Vec3, Vec3, Vec3) {
    let q = 1.0 + a * a + b * b;
    let q2 = q * q;
    let n = from_stereo(a, b);
    let da = Vec3::new((2.0 * q - 4.0 * a * a) / q2, -4.0 * a * b / q2, -4.0 * a / q2);
    let db = Vec3::new(-4.0 * a * b / q2, (2.0 * q - 4.0 * b * b) / q2, -4.0 * b / q2);
    (n, da, db)
}

pub fn pack(diffuse: Rgb, specular: Rgb, roughness: f64, normal: &Vec3) -> Params {
    let (a, b) = to_stereo(normal);
    [
        diffuse[0], diffuse[1], diffuse[2], specular[0], specular[1], specular[2], roughness, a, b,
    ]
}

pub fn diffuse_of(p: &Params) -> Rgb {
    [p[DIFFUSE], p[DIFFUSE + 1], p[DIFFUSE + 2]]
}

pub fn specular_of(p: &Params) -> Rgb {
    [p[SPECULAR], p[SPECULAR + 1], p[SPECULAR + 2]]
}

pub fn normal_of(p: &Params) -> Vec3 {
    from_stereo(p[NORMAL_A], p[NORMAL_B])
}

/// Fixed geometry of one pixel: view direction and flash irradiance.
#[derive(Debug, Clone, Copy)]
pub struct PixelModel {
    pub view: Vec3,
    pub irradiance: Rgb,
}

impl PixelModel {
    pub fn new(position: &Vec3, intensity: &Rgb) -> Self {
        let d2 = position.norm_squared();
        Self {
            view: -position / d2.sqrt(),
            irradiance: intensity.map(|i| i / d2),
        }
    }

    /// `[s0, s1, s2]`; identical to the deferred shader without specular
    /// polarization.
    pub fn stokes(&self, p: &Params) -> [Rgb; 3] {
        let n = normal_of(p);
        let c = n.dot(&self.view);
        if c <= 0.0 {
            return [[0.0; 3]; 3];
        }
        let e = self.irradiance;
        let (g, _, _) = collocated_specular(c, p[ROUGHNESS], DEFAULT_IOR);
        let (dop, _) = diffuse_dop_cos(c, DEFAULT_IOR);
        let (oc, os) = orientation(&n, &self.view);
        let mut out = [[0.0; 3]; 3];
        for k in 0..3 {
            let ld = p[DIFFUSE + k] * c * FRAC_1_PI * e[k];
            out[0][k] = ld + p[SPECULAR + k] * g * e[k];
            out[1][k] = ld * dop * oc;
            out[2][k] = ld * dop * os;
        }
        out
    }

    /// Gradient of `Σ_k w0_k·s0_k + w1_k·s1_k + w2_k·s2_k` with respect to the
    /// packed parameters.
    pub fn vjp(&self, p: &Params, w: &[Rgb; 3]) -> Params {
        let mut grad = [0.0; N_PARAMS];
        let (n, n_a, n_b) = stereo_jacobian(p[NORMAL_A], p[NORMAL_B]);
        let v = self.view;
        let c = n.dot(&v);
        if c <= 0.0 {
            return grad;
        }
        let e = self.irradiance;
        let (g, g_c, g_a) = collocated_specular(c, p[ROUGHNESS], DEFAULT_IOR);
        let (dop, dop_c) = diffuse_dop_cos(c, DEFAULT_IOR);

        let ex = n.y * v.z - n.z * v.y;
        let ey = n.z * v.x - n.x * v.z;
        let r2 = ex * ex + ey * ey;
        let (oc, os) = orientation(&n, &v);

        let [w0, w1, w2] = w;
        let (mut d_c, mut d_oc, mut d_os) = (0.0, 0.0, 0.0);
        for k in 0..3 {
            let a = p[DIFFUSE + k] * e[k] * FRAC_1_PI;
            let pol = w1[k] * oc + w2[k] * os;
            grad[DIFFUSE + k] = (w0[k] + pol * dop) * c * e[k] * FRAC_1_PI;
            grad[SPECULAR + k] = w0[k] * g * e[k];
            grad[ROUGHNESS] += w0[k] * p[SPECULAR + k] * e[k] * g_a;
            d_c += w0[k] * (a + p[SPECULAR + k] * e[k] * g_c) + pol * a * (dop + c * dop_c);
            d_oc += w1[k] * a * c * dop;
            d_os += w2[k] * a * c * dop;
        }

        let mut d_n = v * d_c;
        if r2 >= 1e-30 {
            let r4 = r2 * r2;
            let oc_ex = 4.0 * ex * ey * ey / r4;
            let oc_ey = -4.0 * ey * ex * ex / r4;
            let os_ex = 2.0 * ey * (ey * ey - ex * ex) / r4;
            let os_ey = 2.0 * ex * (ex * ex - ey * ey) / r4;
            let d_ex = d_oc * oc_ex + d_os * os_ex;
            let d_ey = d_oc * oc_ey + d_os * os_ey;
            d_n += Vec3::new(0.0, v.z, -v.y) * d_ex + Vec3::new(-v.z, 0.0, v.x) * d_ey;
        }
        grad[NORMAL_A] = d_n.dot(&n_a);
        grad[NORMAL_B] = d_n.dot(&n_b);
        grad
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brdf::MaterialSample;
    use crate::render::{shade_point, FlashLight, ShadeOptions};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn stereo_round_trip() {
        for n in [Vec3::z(), Vec3::new(0.3, -0.5, 0.2).normalize(), Vec3::new(0.9, 0.1, -0.3).normalize()] {
            let (a, b) = to_stereo(&n);
            assert!((from_stereo(a, b) - n).norm() < 1e-12);
        }
    }

    #[test]
    fn matches_deferred_shader() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let flash = FlashLight::new([4.0, 3.0, 5.0]).unwrap();
        for _ in 0..200 {
            let pos = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), -rng.random_range(2.0..4.0));
            let n = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-0.2..1.0)).normalize();
            let m = MaterialSample::new([0.3, 0.6, 0.1], [0.2, 0.25, 0.3], rng.random_range(0.05..1.0), n);
            let want = shade_point(&pos, &m, &flash, ShadeOptions::default());
            let got = PixelModel::new(&pos, &flash.intensity).stokes(&pack(
                m.diffuse_albedo,
                m.specular_albedo,
                m.roughness,
                &n,
            ));
            for s in 0..3 {
                for k in 0..3 {
                    assert!((want[s][k] - got[s][k]).abs() < 1e-12 * want[0][k].max(1.0));
                }
            }
        }
    }

    #[test]
    fn vjp_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let pos = Vec3::new(rng.random_range(-0.8..0.8), rng.random_range(-0.8..0.8), -3.0);
            let model = PixelModel::new(&pos, &[9.0, 8.0, 10.0]);
            let n = (model.view + Vec3::new(rng.random_range(-0.6..0.6), rng.random_range(-0.6..0.6), 0.0)).normalize();
            let p = pack(
                [rng.random(), rng.random(), rng.random()],
                [rng.random(), rng.random(), rng.random()],
                rng.random_range(0.1..1.0),
                &n,
            );
            let w: [Rgb; 3] = std::array::from_fn(|_| std::array::from_fn(|_| rng.random_range(-1.0..1.0)));
            let f = |q: &Params| {
                let s = model.stokes(q);
                (0..3).map(|j| (0..3).map(|k| w[j][k] * s[j][k]).sum::<f64>()).sum::<f64>()
            };
            let g = model.vjp(&p, &w);
            for i in 0..N_PARAMS {
                let h = 1e-6;
                let (mut a, mut b) = (p, p);
                a[i] += h;
                b[i] -= h;
                let fd = (f(&a) - f(&b)) / (2.0 * h);
                assert!((fd - g[i]).abs() < 1e-6 * (1.0 + fd.abs()), "param {i}: {fd} vs {}", g[i]);
            }
        }
    }
}
