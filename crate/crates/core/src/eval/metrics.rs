//! Masked L1 metrics.

use crate::brdf::Vec3;
use crate::error::{Error, Result};
use crate::grid::{Grid, Mask, ScalarMap};

/// Pixel types that can be compared channel by channel.
pub trait Channels {
    fn channels(&self) -> &[f64];
}

impl Channels for f64 {
    fn channels(&self) -> &[f64] {
        std::slice::from_ref(self)
    }
}

impl<const N: usize> Channels for [f64; N] {
    fn channels(&self) -> &[f64] {
        self
    }
}

impl Channels for Vec3 {
    fn channels(&self) -> &[f64] {
        self.as_slice()
    }
}

/// Mean absolute difference over masked pixels and channels.
pub fn l1_metric<T: Channels>(pred: &Grid<T>, gt: &Grid<T>, mask: &Mask) -> Result<f64> {
    mask.ensure_same_dims(pred, "prediction")?;
    mask.ensure_same_dims(gt, "ground truth")?;
    let mut sum = 0.0;
    let mut n = 0usize;
    for ((p, g), &m) in pred.data().iter().zip(gt.data()).zip(mask.data()) {
        if !m {
            continue;
        }
        for (a, b) in p.channels().iter().zip(g.channels()) {
            sum += (a - b).abs();
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::EmptyMask);
    }
    Ok(sum / n as f64)
}

pub fn masked_median(map: &ScalarMap, mask: &Mask) -> Result<f64> {
    let mut v: Vec<f64> = map.data().iter().zip(mask.data()).filter(|(_, &m)| m).map(|(&d, _)| d).collect();
    if v.is_empty() {
        return Err(Error::EmptyMask);
    }
    v.sort_by(f64::total_cmp);
    let k = v.len() / 2;
    Ok(if v.len() % 2 == 1 { v[k] } else { 0.5 * (v[k - 1] + v[k]) })
}

/// Depth L1 after shifting the prediction so that masked medians agree:
/// single-view depth from integrated normals is only known up to an offset.
pub fn l1_depth(pred: &ScalarMap, gt: &ScalarMap, mask: &Mask) -> Result<f64> {
    let shift = masked_median(gt, mask)? - masked_median(pred, mask)?;
    let aligned = pred.map(|d| d + shift);
    l1_metric(&aligned, gt, mask)
}

/// Display transform for the rendering metric: `clamp(v, 0, 1)^(1/γ)`.
pub fn tonemap(v: f64, gamma: f64) -> f64 {
    v.clamp(0.0, 1.0).powf(1.0 / gamma)
}

/// Median of a sample (NaN for an empty one).
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len() / 2;
    if v.len() % 2 == 1 {
        v[k]
    } else {
        0.5 * (v[k - 1] + v[k])
    }
}
