//! Reflectance cue: normalized diffuse color from the minimum of the
//! per-pixel polarizer response.
//!
//! Three polarizer angles determine the sinusoid `I(φ)` exactly, so the fit
//! is the closed form from the Stokes components rather than an iterative
//! solve.

use crate::grid::{Grid, Mask, Rgb};
use crate::stokes::{aolp_from, StokesImage};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SinusoidFit {
    pub i_min: f64,
    pub i_max: f64,
    /// Polarizer angle of maximum transmission, radians in `[0, π)`.
    pub phase: f64,
}

impl SinusoidFit {
    pub fn from_stokes(s0: f64, s1: f64, s2: f64) -> Self {
        let l = s1.hypot(s2);
        let i_min = (0.5 * (s0 - l)).max(0.0);
        let i_max = (0.5 * (s0 + l)).max(i_min);
        let phase = if l > 0.0 { aolp_from(s1, s2) } else { 0.0 };
        Self { i_min, i_max, phase }
    }

    /// Evaluates the fitted response at polarizer angle `phi` (radians).
    pub fn eval(&self, phi: f64) -> f64 {
        let mid = 0.5 * (self.i_max + self.i_min);
        let amp = 0.5 * (self.i_max - self.i_min);
        mid + amp * (2.0 * (phi - self.phase)).cos()
    }
}

pub fn fit_sinusoid(s: &StokesImage) -> Grid<[SinusoidFit; 3]> {
    let (w, h) = s.dims();
    Grid::from_vec(
        w,
        h,
        (0..w * h)
            .map(|i| {
                let [a, b, c] = s.pixel(i);
                std::array::from_fn(|k| SinusoidFit::from_stokes(a[k], b[k], c[k]))
            })
            .collect(),
    )
    .expect("dims come from a valid grid")
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffuseColorMap {
    /// Max channel is 1 on valid pixels; invalid pixels are black.
    pub rgb: Grid<Rgb>,
    pub valid: Mask,
}

/// Normalized diffuse color: per-channel response minima divided by their
/// maximum channel. Pixels whose maximum is `<= epsilon` or that are flagged
/// in `saturated` are invalid.
pub fn diffuse_color(s: &StokesImage, epsilon: f64, saturated: Option<&Mask>) -> DiffuseColorMap {
    let fits = fit_sinusoid(s);
    let (w, h) = s.dims();
    let mut rgb = Vec::with_capacity(w * h);
    let mut valid = Vec::with_capacity(w * h);
    for (i, f) in fits.data().iter().enumerate() {
        let mins: Rgb = std::array::from_fn(|k| f[k].i_min);
        let m = mins[0].max(mins[1]).max(mins[2]);
        let sat = saturated.is_some_and(|s| s.data()[i]);
        if m > epsilon && !sat {
            rgb.push(mins.map(|v| (v / m).clamp(0.0, 1.0)));
            valid.push(true);
        } else {
            rgb.push([0.0; 3]);
            valid.push(false);
        }
    }
    DiffuseColorMap {
        rgb: Grid::from_vec(w, h, rgb).expect("valid dims"),
        valid: Grid::from_vec(w, h, valid).expect("valid dims"),
    }
}

/// HSV hue in degrees of an RGB triple, `None` for achromatic colors.
pub fn hue_degrees(c: Rgb) -> Option<f64> {
    let max = c[0].max(c[1]).max(c[2]);
    let min = c[0].min(c[1]).min(c[2]);
    let d = max - min;
    if d <= 0.0 {
        return None;
    }
    let h = if max == c[0] {
        ((c[1] - c[2]) / d).rem_euclid(6.0)
    } else if max == c[1] {
        (c[2] - c[0]) / d + 2.0
    } else {
        (c[0] - c[1]) / d + 4.0
    };
    Some(60.0 * h)
}
