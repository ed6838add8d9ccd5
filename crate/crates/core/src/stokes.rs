//! Linear Stokes algebra over RGB images.
//!
//! Polarizer angles are measured in the camera frame: 0° along image +x
//! (right), increasing counter-clockwise towards image +y (up).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{rgb_mean, Grid, Mask, RadianceImage, Rgb, ScalarMap};

/// Three polarizer-filtered captures at 0°, 45° and 90°.
#[derive(Debug, Clone, PartialEq)]
pub struct CaptureSet {
    pub i0: RadianceImage,
    pub i45: RadianceImage,
    pub i90: RadianceImage,
}

impl CaptureSet {
    pub fn new(i0: RadianceImage, i45: RadianceImage, i90: RadianceImage) -> Result<Self> {
        let c = Self { i0, i45, i90 };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        self.i0.ensure_same_dims(&self.i45, "capture i0/i45")?;
        self.i0.ensure_same_dims(&self.i90, "capture i0/i90")?;
        self.i0.check_radiance("i0")?;
        self.i45.check_radiance("i45")?;
        self.i90.check_radiance("i90")
    }

    pub fn dims(&self) -> (usize, usize) {
        self.i0.dims()
    }
}

/// The four filtered images used as observations: 0°, 45°, 90°, 135°.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarizedImages {
    pub i0: RadianceImage,
    pub i45: RadianceImage,
    pub i90: RadianceImage,
    pub i135: RadianceImage,
}

/// Polarizer angles of [`PolarizedImages`], in degrees.
pub const CAPTURE_ANGLES_DEG: [f64; 4] = [0.0, 45.0, 90.0, 135.0];

impl PolarizedImages {
    pub fn from_capture(c: &CaptureSet) -> Result<Self> {
        let derived = derive_inputs(c)?;
        Ok(Self {
            i0: c.i0.clone(),
            i45: c.i45.clone(),
            i90: c.i90.clone(),
            i135: derived.i135,
        })
    }

    pub fn capture_set(&self) -> CaptureSet {
        CaptureSet {
            i0: self.i0.clone(),
            i45: self.i45.clone(),
            i90: self.i90.clone(),
        }
    }

    pub fn by_angle(&self) -> [&RadianceImage; 4] {
        [&self.i0, &self.i45, &self.i90, &self.i135]
    }

    pub fn dims(&self) -> (usize, usize) {
        self.i0.dims()
    }

    pub fn validate(&self) -> Result<()> {
        for (img, name) in self.by_angle().into_iter().zip(["i0", "i45", "i90", "i135"]) {
            self.i0.ensure_same_dims(img, name)?;
            img.check_radiance(name)?;
        }
        Ok(())
    }
}

/// Per-pixel, per-channel linear Stokes components.
#[derive(Debug, Clone, PartialEq)]
pub struct StokesImage {
    pub s0: Grid<Rgb>,
    pub s1: Grid<Rgb>,
    pub s2: Grid<Rgb>,
}

impl StokesImage {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            s0: Grid::zeros(width, height),
            s1: Grid::zeros(width, height),
            s2: Grid::zeros(width, height),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        self.s0.dims()
    }

    pub fn width(&self) -> usize {
        self.s0.width()
    }

    pub fn height(&self) -> usize {
        self.s0.height()
    }

    pub fn pixel(&self, i: usize) -> [Rgb; 3] {
        [self.s0.data()[i], self.s1.data()[i], self.s2.data()[i]]
    }
}

/// `(cos 2φ, sin 2φ)` with exact values on multiples of 45°.
pub fn double_angle_trig(phi_deg: f64) -> (f64, f64) {
    let twice = (2.0 * phi_deg).rem_euclid(360.0);
    if twice == 0.0 {
        (1.0, 0.0)
    } else if twice == 90.0 {
        (0.0, 1.0)
    } else if twice == 180.0 {
        (-1.0, 0.0)
    } else if twice == 270.0 {
        (0.0, -1.0)
    } else {
        let r = twice.to_radians();
        (r.cos(), r.sin())
    }
}

pub fn compute_stokes(c: &CaptureSet) -> Result<StokesImage> {
    c.i0.ensure_same_dims(&c.i45, "capture i0/i45")?;
    c.i0.ensure_same_dims(&c.i90, "capture i0/i90")?;
    let (w, h) = c.dims();
    let n = w * h;
    let mut s0 = Vec::with_capacity(n);
    let mut s1 = Vec::with_capacity(n);
    let mut s2 = Vec::with_capacity(n);
    for ((a, b), v) in c.i0.data().iter().zip(c.i45.data()).zip(c.i90.data()) {
        let t0: Rgb = std::array::from_fn(|k| a[k] + v[k]);
        s1.push(std::array::from_fn(|k| a[k] - v[k]));
        s2.push(std::array::from_fn(|k| 2.0 * b[k] - t0[k]));
        s0.push(t0);
    }
    Ok(StokesImage {
        s0: Grid::from_vec(w, h, s0)?,
        s1: Grid::from_vec(w, h, s1)?,
        s2: Grid::from_vec(w, h, s2)?,
    })
}

/// Response of an ideal linear polarizer at `phi_deg`:
/// `I(φ) = (s0 + s1 cos 2φ + s2 sin 2φ) / 2`.
pub fn filter_image(s: &StokesImage, phi_deg: f64) -> Result<RadianceImage> {
    let (c, sn) = double_angle_trig(phi_deg);
    let w = s.width();
    let mut out = Vec::with_capacity(s.s0.len());
    for (i, ((a, b), d)) in s.s0.data().iter().zip(s.s1.data()).zip(s.s2.data()).enumerate() {
        let mut px = [0.0; 3];
        for k in 0..3 {
            let v = 0.5 * (a[k] + b[k] * c + d[k] * sn);
            if !v.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "non-finite Stokes value at pixel ({}, {})",
                    i % w,
                    i / w
                )));
            }
            if v < 0.0 {
                if v > -1e-9 * a[k].max(1.0) {
                    px[k] = 0.0;
                } else {
                    return Err(Error::UnphysicalStokes {
                        x: i % w,
                        y: i / w,
                        value: v,
                    });
                }
            } else {
                px[k] = v;
            }
        }
        out.push(px);
    }
    Grid::from_vec(w, s.height(), out)
}

/// The two derived network inputs.
#[derive(Debug, Clone)]
pub struct DerivedInputs {
    pub full: RadianceImage,
    pub i135: RadianceImage,
    /// Number of channel values of `i135` that were negative and clamped.
    pub clamped_negative: usize,
}

/// `full = i0 + i90` and `i135 = full − i45`.
pub fn derive_inputs(c: &CaptureSet) -> Result<DerivedInputs> {
    c.i0.ensure_same_dims(&c.i45, "capture i0/i45")?;
    c.i0.ensure_same_dims(&c.i90, "capture i0/i90")?;
    let (w, h) = c.dims();
    let mut clamped = 0;
    let mut full = Vec::with_capacity(w * h);
    let mut i135 = Vec::with_capacity(w * h);
    for ((a, b), v) in c.i0.data().iter().zip(c.i45.data()).zip(c.i90.data()) {
        let f: Rgb = std::array::from_fn(|k| a[k] + v[k]);
        let mut q = [0.0; 3];
        for k in 0..3 {
            let d = f[k] - b[k];
            if d < 0.0 {
                clamped += 1;
            } else {
                q[k] = d;
            }
        }
        full.push(f);
        i135.push(q);
    }
    if clamped > 0 {
        log::warn!("i135: clamped {clamped} negative channel values to zero");
    }
    Ok(DerivedInputs {
        full: Grid::from_vec(w, h, full)?,
        i135: Grid::from_vec(w, h, i135)?,
        clamped_negative: clamped,
    })
}

/// Unit-length `(s1, s2)` direction per pixel with a validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedStokesMap {
    pub u: Grid<[f64; 2]>,
    pub valid: Mask,
}

impl NormalizedStokesMap {
    pub fn dims(&self) -> (usize, usize) {
        self.u.dims()
    }
}

/// `1e-4 ×` the mean of `s0` over all pixels and channels.
pub fn default_epsilon(s: &StokesImage) -> f64 {
    1e-4 * s.s0.mean_value()
}

pub fn normalize_stokes(s: &StokesImage, epsilon: f64) -> NormalizedStokesMap {
    let (w, h) = s.dims();
    let (u, valid): (Vec<[f64; 2]>, Vec<bool>) = s
        .s1
        .data()
        .par_iter()
        .zip(s.s2.data().par_iter())
        .map(|(a, b)| {
            let (q1, q2) = (rgb_mean(a), rgb_mean(b));
            let l = q1.hypot(q2);
            if l > epsilon {
                ([q1 / l, q2 / l], true)
            } else {
                ([0.0, 0.0], false)
            }
        })
        .unzip();
    NormalizedStokesMap {
        u: Grid::from_vec(w, h, u).expect("dims come from a valid grid"),
        valid: Grid::from_vec(w, h, valid).expect("dims come from a valid grid"),
    }
}

/// Degree and angle of linear polarization of the channel-averaged Stokes vector.
#[derive(Debug, Clone)]
pub struct DopAolp {
    pub dop: ScalarMap,
    /// Radians in `[0, π)`.
    pub aolp: ScalarMap,
    /// False where `s0 = 0` and both maps were set to zero.
    pub defined: Mask,
}

/// Maps `0.5·atan2(s2, s1)` into `[0, π)`.
pub fn aolp_from(s1: f64, s2: f64) -> f64 {
    let a = (0.5 * s2.atan2(s1)).rem_euclid(std::f64::consts::PI);
    if a >= std::f64::consts::PI {
        0.0
    } else {
        a
    }
}

pub fn dop_aolp(s: &StokesImage) -> DopAolp {
    let (w, h) = s.dims();
    let n = w * h;
    let mut dop = Vec::with_capacity(n);
    let mut aolp = Vec::with_capacity(n);
    let mut defined = Vec::with_capacity(n);
    for i in 0..n {
        let [a, b, c] = s.pixel(i);
        let (q0, q1, q2) = (rgb_mean(&a), rgb_mean(&b), rgb_mean(&c));
        if q0 > 0.0 {
            dop.push(q1.hypot(q2) / q0);
            aolp.push(aolp_from(q1, q2));
            defined.push(true);
        } else {
            dop.push(0.0);
            aolp.push(0.0);
            defined.push(false);
        }
    }
    DopAolp {
        dop: Grid::from_vec(w, h, dop).expect("valid dims"),
        aolp: Grid::from_vec(w, h, aolp).expect("valid dims"),
        defined: Grid::from_vec(w, h, defined).expect("valid dims"),
    }
}

/// Perturbs valid directions with isotropic Gaussian noise and re-normalizes.
pub fn add_stokes_noise(m: &NormalizedStokesMap, sigma: f64, seed: u64) -> Result<NormalizedStokesMap> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidInput(format!("noise sigma must be >= 0, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(m.clone());
    }
    let normal = Normal::new(0.0, sigma).expect("sigma checked above");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = m.clone();
    for (u, &valid) in out.u.data_mut().iter_mut().zip(m.valid.data()) {
        // Draw for every pixel so the noise field does not depend on the mask.
        let g1 = normal.sample(&mut rng);
        let g2 = normal.sample(&mut rng);
        if !valid {
            continue;
        }
        let p = [u[0] + g1, u[1] + g2];
        let l = p[0].hypot(p[1]);
        if l > 0.0 {
            *u = [p[0] / l, p[1] / l];
        }
    }
    Ok(out)
}

/// 8-bit visualization: R fixed at 0.5, G and B carry `(u + 1) / 2`.
/// Invalid pixels are black.
pub fn visualize_stokes(m: &NormalizedStokesMap) -> Grid<[u8; 3]> {
    let (w, h) = m.dims();
    Grid::from_fn(w, h, |x, y| {
        if !*m.valid.get(x, y) {
            return [0, 0, 0];
        }
        let u = m.u.get(x, y);
        [
            quantize_u8(0.5),
            quantize_u8((u[0] + 1.0) / 2.0),
            quantize_u8((u[1] + 1.0) / 2.0),
        ]
    })
}

/// `floor(clamp(v, 0, 1) · 255)`.
pub fn quantize_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).floor() as u8
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn uniform(v: Rgb) -> RadianceImage {
        Grid::filled(2, 2, v)
    }

    fn capture(a: f64, b: f64, c: f64) -> CaptureSet {
        CaptureSet::new(uniform([a; 3]), uniform([b; 3]), uniform([c; 3])).unwrap()
    }

    fn sinusoid(s: [f64; 3], phi_deg: f64) -> f64 {
        let r = (2.0 * phi_deg).to_radians();
        0.5 * (s[0] + s[1] * r.cos() + s[2] * r.sin())
    }

    #[test]
    fn stokes_from_three_angles() {
        let s = compute_stokes(&capture(1.0, 0.5, 0.0)).unwrap();
        assert_eq!(s.pixel(0), [[1.0; 3], [1.0; 3], [0.0; 3]]);

        let s = compute_stokes(&capture(0.7, 0.7, 0.7)).unwrap();
        assert_abs_diff_eq!(s.s0.get(1, 1)[0], 1.4, epsilon = 1e-15);
        assert_eq!(s.s1.get(1, 1)[0], 0.0);
        assert_abs_diff_eq!(s.s2.get(1, 1)[0], 0.0, epsilon = 1e-15);

        let s = compute_stokes(&capture(0.6, 0.9, 0.6)).unwrap();
        let [a, b, c] = s.pixel(3);
        assert_abs_diff_eq!(a[1], 1.2, epsilon = 1e-12);
        assert_abs_diff_eq!(b[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c[1], 0.6, epsilon = 1e-12);
        // Sinusoid model reproduces the three samples.
        for (phi, want) in [(0.0, 0.6), (45.0, 0.9), (90.0, 0.6)] {
            assert_abs_diff_eq!(sinusoid([a[1], b[1], c[1]], phi), want, epsilon = 1e-12);
        }
    }

    #[test]
    fn mismatched_capture_is_rejected() {
        let err = compute_stokes(&CaptureSet {
            i0: Grid::zeros(2, 2),
            i45: Grid::zeros(3, 2),
            i90: Grid::zeros(2, 2),
        });
        assert!(matches!(err, Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn filter_examples() {
        let c = capture(0.6, 0.9, 0.6);
        let s = compute_stokes(&c).unwrap();
        assert_eq!(filter_image(&s, 0.0).unwrap(), c.i0);
        let i135 = filter_image(&s, 135.0).unwrap();
        assert_abs_diff_eq!(i135.get(0, 0)[2], 0.3, epsilon = 1e-12);
        let i45 = filter_image(&s, 45.0).unwrap();
        assert_abs_diff_eq!(i135.get(0, 0)[2] + i45.get(0, 0)[2], 1.2, epsilon = 1e-12);

        let unpol = StokesImage {
            s0: uniform([0.8; 3]),
            s1: uniform([0.0; 3]),
            s2: uniform([0.0; 3]),
        };
        for phi in [0.0, 17.0, 45.0, 133.3] {
            assert_abs_diff_eq!(filter_image(&unpol, phi).unwrap().get(1, 0)[0], 0.4, epsilon = 1e-15);
        }
    }

    #[test]
    fn filter_rejects_unphysical() {
        let s = StokesImage {
            s0: uniform([1.0; 3]),
            s1: uniform([-1.5; 3]),
            s2: uniform([0.0; 3]),
        };
        assert!(matches!(filter_image(&s, 0.0), Err(Error::UnphysicalStokes { .. })));
        let tiny = StokesImage {
            s0: uniform([1.0; 3]),
            s1: uniform([-1.0 - 1e-12; 3]),
            s2: uniform([0.0; 3]),
        };
        assert_eq!(filter_image(&tiny, 0.0).unwrap().get(0, 0), &[0.0; 3]);
    }

    #[test]
    fn derived_inputs() {
        let d = derive_inputs(&capture(1.0, 0.5, 0.0)).unwrap();
        assert_eq!(d.full.get(0, 0), &[1.0; 3]);
        assert_eq!(d.i135.get(0, 0), &[0.5; 3]);
        let d = derive_inputs(&capture(0.25, 0.25, 0.25)).unwrap();
        assert_eq!(d.full.get(0, 0), &[0.5; 3]);
        assert_eq!(d.i135.get(0, 0), &[0.25; 3]);
        assert_eq!(d.clamped_negative, 0);
        // Noisy input: i45 larger than i0 + i90.
        let d = derive_inputs(&capture(0.1, 0.5, 0.1)).unwrap();
        assert_eq!(d.i135.get(0, 0), &[0.0; 3]);
        assert_eq!(d.clamped_negative, 12);
    }

    #[test]
    fn normalization() {
        let mut s = StokesImage::zeros(2, 1);
        s.s0.set(0, 0, [1.0; 3]);
        s.s1.set(0, 0, [0.3; 3]);
        s.s2.set(0, 0, [0.4; 3]);
        let m = normalize_stokes(&s, 1e-4);
        assert_abs_diff_eq!(m.u.get(0, 0)[0], 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(m.u.get(0, 0)[1], 0.8, epsilon = 1e-12);
        assert!(*m.valid.get(0, 0));
        assert_eq!(m.u.get(1, 0), &[0.0, 0.0]);
        assert!(!*m.valid.get(1, 0));
    }

    #[test]
    fn channel_average_before_normalizing() {
        let mut s = StokesImage::zeros(1, 1);
        s.s0.set(0, 0, [1.0; 3]);
        s.s1.set(0, 0, [0.3, 0.0, 0.0]);
        s.s2.set(0, 0, [0.0, 0.0, 0.3]);
        let m = normalize_stokes(&s, 1e-6);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(m.u.get(0, 0)[0], r, epsilon = 1e-12);
        assert_abs_diff_eq!(m.u.get(0, 0)[1], r, epsilon = 1e-12);
    }

    #[test]
    fn dop_and_aolp() {
        let mut s = StokesImage::zeros(4, 1);
        s.s0.set(0, 0, [2.0; 3]);
        s.s0.set(1, 0, [1.0; 3]);
        s.s1.set(1, 0, [1.0; 3]);
        s.s0.set(2, 0, [1.0; 3]);
        s.s2.set(2, 0, [1.0; 3]);
        let d = dop_aolp(&s);
        assert_eq!(*d.dop.get(0, 0), 0.0);
        assert_abs_diff_eq!(*d.dop.get(1, 0), 1.0, epsilon = 1e-15);
        assert_eq!(*d.aolp.get(1, 0), 0.0);
        assert_abs_diff_eq!(*d.dop.get(2, 0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(*d.aolp.get(2, 0), std::f64::consts::FRAC_PI_4, epsilon = 1e-15);
        assert!(!*d.defined.get(3, 0));

        // Brute-force argmax over 3600 polarizer angles.
        let best = (0..3600)
            .map(|k| k as f64 * 0.05)
            .max_by(|a, b| sinusoid([1.0, 0.0, 1.0], *a).total_cmp(&sinusoid([1.0, 0.0, 1.0], *b)))
            .unwrap();
        assert_abs_diff_eq!(best.to_radians(), *d.aolp.get(2, 0), epsilon = 1e-3);
    }

    #[test]
    fn aolp_is_in_half_open_range() {
        for (a, b) in [(-1.0, -1e-300), (-1.0, 0.0), (1.0, -1e-17), (0.0, -1.0)] {
            let v = aolp_from(a, b);
            assert!((0.0..std::f64::consts::PI).contains(&v), "{v}");
        }
    }

    #[test]
    fn noise_zero_and_determinism() {
        let mut s = StokesImage::zeros(8, 8);
        for (i, p) in s.s1.data_mut().iter_mut().enumerate() {
            *p = [(i as f64).sin(); 3];
        }
        for p in s.s2.data_mut() {
            *p = [0.3; 3];
        }
        let m = normalize_stokes(&s, 1e-6);
        assert_eq!(add_stokes_noise(&m, 0.0, 4).unwrap(), m);
        let a = add_stokes_noise(&m, 0.2, 9).unwrap();
        let b = add_stokes_noise(&m, 0.2, 9).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, m);
        assert_eq!(a.valid, m.valid);
        for u in a.u.data() {
            assert_abs_diff_eq!(u[0].hypot(u[1]), 1.0, epsilon = 1e-12);
        }
        assert!(add_stokes_noise(&m, -1.0, 0).is_err());
    }

    #[test]
    fn noise_matches_monte_carlo_deviation() {
        // Mean |Δangle| of a unit vector plus N(0, 0.1²) noise, estimated
        // independently with 10⁶ samples: 0.080075 (standard error 6e-5).
        const EXPECTED: f64 = 0.080075;
        let n = 512;
        let m = NormalizedStokesMap {
            u: Grid::from_fn(n, n, |x, y| {
                let a = (x * 7 + y * 13) as f64 * 0.01;
                [a.cos(), a.sin()]
            }),
            valid: Grid::filled(n, n, true),
        };
        let noisy = add_stokes_noise(&m, 0.1, 2024).unwrap();
        let mean: f64 = m
            .u
            .data()
            .iter()
            .zip(noisy.u.data())
            .map(|(a, b)| (a[0] * b[1] - a[1] * b[0]).atan2(a[0] * b[0] + a[1] * b[1]).abs())
            .sum::<f64>()
            / (n * n) as f64;
        assert!((mean - EXPECTED).abs() < 6e-4, "mean deviation {mean}");
    }

    #[test]
    fn visualization_convention() {
        let m = NormalizedStokesMap {
            u: Grid::from_vec(3, 1, vec![[1.0, 0.0], [0.0, -1.0], [0.6, 0.8]]).unwrap(),
            valid: Grid::from_vec(3, 1, vec![true, true, false]).unwrap(),
        };
        let v = visualize_stokes(&m);
        assert_eq!(v.get(0, 0), &[127, 255, 127]);
        assert_eq!(v.get(1, 0), &[127, 127, 0]);
        assert_eq!(v.get(2, 0), &[0, 0, 0]);
    }
}
