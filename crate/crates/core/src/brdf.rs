//! Dielectric reflectance: Fresnel equations, GGX microfacet specular with
//! height-correlated Smith masking, Lambertian diffuse, and the degree of
//! polarization of diffusely exitant light.
//!
//! Roughness is the GGX `α` directly, floored at [`ALPHA_MIN`].

use std::f64::consts::{FRAC_1_PI, FRAC_PI_2, PI};

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::grid::Rgb;

pub type Vec3 = Vector3<f64>;

pub const ALPHA_MIN: f64 = 0.01;
pub const DEFAULT_IOR: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialSample {
    pub diffuse_albedo: Rgb,
    pub specular_albedo: Rgb,
    pub roughness: f64,
    pub normal: Vec3,
    pub ior: f64,
}

impl MaterialSample {
    pub fn new(diffuse_albedo: Rgb, specular_albedo: Rgb, roughness: f64, normal: Vec3) -> Self {
        Self {
            diffuse_albedo,
            specular_albedo,
            roughness: roughness.max(ALPHA_MIN),
            normal: normal.normalize(),
            ior: DEFAULT_IOR,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FresnelCoefficients {
    /// Perpendicular (s) power reflectance.
    pub r_s: f64,
    /// Parallel (p) power reflectance.
    pub r_p: f64,
}

impl FresnelCoefficients {
    pub fn unpolarized(&self) -> f64 {
        0.5 * (self.r_s + self.r_p)
    }
}

/// Fresnel reflectances for incidence angle `theta` (radians) from air onto a
/// dielectric of index `n`.
pub fn fresnel(theta: f64, n: f64) -> Result<FresnelCoefficients> {
    if !(0.0..FRAC_PI_2).contains(&theta) {
        return Err(Error::Domain(format!(
            "incidence angle {:.4}° outside [0°, 90°)",
            theta.to_degrees()
        )));
    }
    if n <= 1.0 {
        return Err(Error::Domain(format!("refractive index {n} must exceed 1")));
    }
    Ok(fresnel_cos(theta.cos(), n))
}

/// Fresnel reflectances from the cosine of the incidence angle, `cos_i` in `[0, 1]`.
pub fn fresnel_cos(cos_i: f64, n: f64) -> FresnelCoefficients {
    let ci = cos_i.clamp(0.0, 1.0);
    let sin2_t = (1.0 - ci * ci) / (n * n);
    let ct = (1.0 - sin2_t).max(0.0).sqrt();
    let rs = (ci - n * ct) / (ci + n * ct);
    let rp = (n * ci - ct) / (n * ci + ct);
    FresnelCoefficients {
        r_s: rs * rs,
        r_p: rp * rp,
    }
}

/// Degree of linear polarization of diffuse exitance at exitance angle
/// `theta` (radians).
pub fn diffuse_dop(theta: f64, n: f64) -> f64 {
    diffuse_dop_cos(theta.cos(), n).0
}

/// Diffuse degree of polarization as a function of `c = cos θ`, with its
/// derivative `dρ/dc`.
pub fn diffuse_dop_cos(c: f64, n: f64) -> (f64, f64) {
    let c = c.clamp(0.0, 1.0);
    let a = (n - 1.0 / n).powi(2);
    let b = (n + 1.0 / n).powi(2);
    let s = 1.0 - c * c;
    let w = (n * n - s).sqrt();
    let num = a * s;
    let den = 2.0 + 2.0 * n * n - b * s + 4.0 * c * w;
    let dnum = -2.0 * c * a;
    let dden = 2.0 * c * b + 4.0 * w + 4.0 * c * c / w;
    (num / den, (dnum * den - num * dden) / (den * den))
}

/// GGX normal distribution for `c = n·h`.
pub fn ggx_d(c: f64, alpha: f64) -> f64 {
    let a2 = alpha * alpha;
    let k = c * c * (a2 - 1.0) + 1.0;
    a2 / (PI * k * k)
}

/// `sqrt(c² + α²(1 − c²))`; the Smith Λ term is `(m / c − 1) / 2`.
#[inline]
fn smith_m(c: f64, alpha: f64) -> f64 {
    (c * c + alpha * alpha * (1.0 - c * c)).sqrt()
}

/// Height-correlated Smith masking-shadowing `G2(l, v)` from `n·l`, `n·v`.
pub fn smith_g2(nl: f64, nv: f64, alpha: f64) -> f64 {
    let ml = smith_m(nl, alpha);
    let mv = smith_m(nv, alpha);
    2.0 * nl * nv / (mv * nl + ml * nv)
}

/// Evaluates diffuse and specular radiance factors for unit `light_dir` and
/// `view_dir` (both pointing away from the surface). The factors include the
/// `n·l` cosine; multiply by irradiance to get radiance.
pub fn eval_brdf(m: &MaterialSample, light_dir: &Vec3, view_dir: &Vec3) -> (Rgb, Rgb) {
    let nl = m.normal.dot(light_dir);
    let nv = m.normal.dot(view_dir);
    if nl <= 0.0 || nv <= 0.0 {
        return ([0.0; 3], [0.0; 3]);
    }
    let alpha = m.roughness.max(ALPHA_MIN);
    let h = (light_dir + view_dir).normalize();
    let nh = m.normal.dot(&h).clamp(0.0, 1.0);
    let lh = light_dir.dot(&h).clamp(0.0, 1.0);
    let f = fresnel_cos(lh, m.ior).unpolarized();
    let d = ggx_d(nh, alpha);
    // D G F / (4 nl nv) · nl with G expanded to keep grazing angles finite.
    let ml = smith_m(nl, alpha);
    let mv = smith_m(nv, alpha);
    let spec = d * f * nl / (2.0 * (mv * nl + ml * nv));
    let diff = FRAC_1_PI * nl;
    (
        m.diffuse_albedo.map(|a| a * diff),
        m.specular_albedo.map(|a| a * spec),
    )
}

/// Specular factor for collocated light and view (`l = v`), per unit specular
/// albedo, together with its partials `(g, ∂g/∂c, ∂g/∂α)` where `c = n·v`.
///
/// With `h = v` the Fresnel term is evaluated at normal incidence.
pub fn collocated_specular(c: f64, alpha: f64, ior: f64) -> (f64, f64, f64) {
    let f0 = fresnel_cos(1.0, ior).unpolarized();
    let a2 = alpha * alpha;
    let k = c * c * (a2 - 1.0) + 1.0;
    let d = a2 / (PI * k * k);
    let d_c = -4.0 * a2 * c * (a2 - 1.0) / (PI * k * k * k);
    let d_a = (2.0 * alpha * k - 4.0 * alpha * a2 * c * c) / (PI * k * k * k);
    let m = smith_m(c, alpha);
    let m_c = c * (1.0 - a2) / m;
    let m_a = alpha * (1.0 - c * c) / m;
    let g = 0.25 * f0 * d / m;
    let g_c = 0.25 * f0 * (d_c / m - d * m_c / (m * m));
    let g_a = 0.25 * f0 * (d_a / m - d * m_a / (m * m));
    (g, g_c, g_a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fresnel_examples() {
        let f = fresnel(0.0, 1.5).unwrap();
        assert_abs_diff_eq!(f.r_s, 0.04, epsilon = 1e-15);
        assert_abs_diff_eq!(f.r_p, 0.04, epsilon = 1e-15);
        let f = fresnel(1.5f64.atan(), 1.5).unwrap();
        assert!(f.r_p < 1e-9, "{}", f.r_p);
        let f = fresnel(89.999f64.to_radians(), 1.5).unwrap();
        assert!(f.r_s > 0.999 && f.r_p > 0.999, "{f:?}");
        assert!(fresnel(FRAC_PI_2, 1.5).is_err());
        assert!(fresnel(0.3, 1.0).is_err());
    }

    #[test]
    fn fresnel_ordering_and_monotone_limit() {
        let mut prev_s = 0.0;
        for k in 1..900 {
            let f = fresnel((k as f64 * 0.1).to_radians(), 1.5).unwrap();
            assert!(f.r_p < f.r_s, "k={k}");
            assert!(f.r_s >= prev_s);
            prev_s = f.r_s;
        }
    }

    #[test]
    fn diffuse_dop_examples() {
        assert_eq!(diffuse_dop(0.0, 1.5), 0.0);
        assert_abs_diff_eq!(diffuse_dop(FRAC_PI_2, 1.5), 0.384_615_384_6, epsilon = 1e-9);
        let mut prev = -1.0;
        for k in 0..900 {
            let p = diffuse_dop((k as f64 * 0.1).to_radians(), 1.5);
            assert!(p > prev && p < 1.0);
            prev = p;
        }
    }

    #[test]
    fn diffuse_dop_derivative_matches_finite_difference() {
        for c in [0.05, 0.3, 0.7, 0.95] {
            let h = 1e-6;
            let fd = (diffuse_dop_cos(c + h, 1.5).0 - diffuse_dop_cos(c - h, 1.5).0) / (2.0 * h);
            assert_abs_diff_eq!(diffuse_dop_cos(c, 1.5).1, fd, epsilon = 1e-7);
        }
    }

    #[test]
    fn lambert_at_normal_incidence() {
        let n = Vec3::z();
        let m = MaterialSample::new([1.0; 3], [0.0; 3], 0.5, n);
        let (d, s) = eval_brdf(&m, &n, &n);
        for k in 0..3 {
            assert_abs_diff_eq!(d[k], FRAC_1_PI, epsilon = 1e-15);
            assert_eq!(s[k], 0.0);
        }
        let below = Vec3::new(0.0, 0.6, -0.8);
        assert_eq!(eval_brdf(&m, &below, &n), ([0.0; 3], [0.0; 3]));
    }

    #[test]
    fn specular_reciprocity_and_finiteness() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = Vec3::new(0.1, -0.2, 1.0).normalize();
        for _ in 0..500 {
            let l = random_upper(&mut rng, &n);
            let v = random_upper(&mut rng, &n);
            let alpha = rng.random_range(ALPHA_MIN..1.0);
            let m = MaterialSample::new([0.5; 3], [0.7; 3], alpha, n);
            let (_, s_lv) = eval_brdf(&m, &l, &v);
            let (_, s_vl) = eval_brdf(&m, &v, &l);
            // reciprocity holds for the BRDF, i.e. after dividing out n·l
            let a = s_lv[0] / n.dot(&l);
            let b = s_vl[0] / n.dot(&v);
            assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0), "{a} vs {b}");
            assert!(s_lv[0].is_finite() && s_lv[0] >= 0.0);
        }
        // Near-mirror at grazing.
        let m = MaterialSample::new([0.5; 3], [1.0; 3], ALPHA_MIN, Vec3::z());
        let g = Vec3::new(1.0, 0.0, 1e-6).normalize();
        let (d, s) = eval_brdf(&m, &g, &g);
        assert!(d[0].is_finite() && s[0].is_finite() && s[0] >= 0.0);
    }

    fn random_upper(rng: &mut ChaCha8Rng, n: &Vec3) -> Vec3 {
        loop {
            let v = Vec3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            let l = v.norm();
            if l > 1e-3 && l <= 1.0 && v.dot(n) > 1e-3 {
                return v / l;
            }
        }
    }

    #[test]
    fn white_furnace_bound() {
        // Hemisphere integral of outgoing radiance under unit irradiance,
        // uniform hemisphere sampling (pdf 1 / 2π), 10⁵ samples.
        let n = Vec3::z();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (rd, rs, alpha, view_deg) in [
            (0.7, 0.3, 0.3, 0.0),
            (0.5, 0.5, 0.5, 45.0),
            (0.0, 1.0, 0.8, 70.0),
            (0.9, 0.1, 1.0, 20.0),
        ] {
            let m = MaterialSample::new([rd; 3], [rs; 3], alpha, n);
            let t: f64 = f64::to_radians(view_deg);
            let v = Vec3::new(t.sin(), 0.0, t.cos());
            let samples = 100_000;
            let mut sum = 0.0;
            for _ in 0..samples {
                let z: f64 = rng.random_range(0.0..1.0);
                let phi: f64 = rng.random_range(0.0..2.0 * PI);
                let r = (1.0 - z * z).sqrt();
                let l = Vec3::new(r * phi.cos(), r * phi.sin(), z);
                let (d, s) = eval_brdf(&m, &l, &v);
                sum += (d[0] + s[0]) * 2.0 * PI;
            }
            let albedo = sum / samples as f64;
            assert!(albedo <= 1.02, "albedo {albedo} for {rd} {rs} {alpha}");
        }
    }

    #[test]
    fn collocated_matches_general_and_derivatives() {
        for (c, alpha) in [(0.9, 0.3), (0.4, 0.05), (0.99, 0.8), (0.1, 0.5)] {
            let (g, gc, ga) = collocated_specular(c, alpha, DEFAULT_IOR);
            let s = (1.0f64 - c * c).sqrt();
            let v = Vec3::new(s, 0.0, c);
            let m = MaterialSample::new([0.0; 3], [1.0; 3], alpha, Vec3::z());
            let (_, spec) = eval_brdf(&m, &v, &v);
            assert_abs_diff_eq!(spec[0], g, epsilon = 1e-12 * g.max(1.0));
            let h = 1e-6;
            let fc = (collocated_specular(c + h, alpha, 1.5).0 - collocated_specular(c - h, alpha, 1.5).0) / (2.0 * h);
            let fa = (collocated_specular(c, alpha + h, 1.5).0 - collocated_specular(c, alpha - h, 1.5).0) / (2.0 * h);
            assert!((gc - fc).abs() < 1e-6 * gc.abs().max(1.0), "{gc} {fc}");
            assert!((ga - fa).abs() < 1e-6 * ga.abs().max(1.0), "{ga} {fa}");
        }
    }
}
