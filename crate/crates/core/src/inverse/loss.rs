//! Polarized rendering loss: mean absolute difference between the four
//! re-rendered polarizer-filtered images and the observed ones, plus an
//! optional L1 term against reference maps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{pack, stereo_jacobian, Params, PixelModel, DIFFUSE, NORMAL_A, NORMAL_B, N_PARAMS, ROUGHNESS, SPECULAR};
use crate::error::{Error, Result};
use crate::grid::{Grid, Mask, Rgb, ScalarMap};
use crate::maps::SvbrdfMaps;
use crate::render::{Camera, FlashLight};
use crate::stokes::{double_angle_trig, PolarizedImages, CAPTURE_ANGLES_DEG};

/// Which rendering is compared against the observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RenderLoss {
    /// The four polarizer-filtered images.
    #[default]
    Polarized,
    /// Total intensity only (`s0` against `i0 + i90`).
    Intensity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub render: f64,
    pub map: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { render: 1.0, map: 1.0 }
    }
}

/// A capture to explain: polarizer-filtered images, coverage and lighting.
#[derive(Debug, Clone, Copy)]
pub struct Observation<'a> {
    pub images: &'a PolarizedImages,
    pub mask: &'a Mask,
    pub camera: &'a Camera,
    pub flash: &'a FlashLight,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LossOptions<'a> {
    pub kind: RenderLoss,
    pub weights: LossWeights,
    /// Reference maps for the L1 map term (training-data case).
    pub reference: Option<&'a SvbrdfMaps>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct LossBreakdown {
    pub total: f64,
    pub l1_map_term: f64,
    pub polarized_render_term: f64,
    /// Mean absolute error of each filtered image (0°, 45°, 90°, 135°); zero
    /// for the intensity loss.
    pub per_angle: [f64; 4],
}

/// Gradients with respect to the maps; the normal gradient is expressed in
/// the stereographic parameters `(a, b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGradients {
    pub diffuse: Grid<Rgb>,
    pub specular: Grid<Rgb>,
    pub roughness: ScalarMap,
    pub normal: Grid<[f64; 2]>,
}

#[derive(Debug, Clone)]
pub(crate) struct Target {
    pub index: usize,
    pub angles: [Rgb; 4],
    pub full: Rgb,
    pub reference: Option<Params>,
}

/// Masked observation prepared for repeated evaluation.
#[derive(Debug, Clone)]
pub(crate) struct Problem {
    pub targets: Vec<Target>,
    pub kind: RenderLoss,
    pub weights: LossWeights,
    trig: [(f64, f64); 4],
}

const CHUNK: usize = 256;

impl Problem {
    pub fn new(obs: &Observation, kind: RenderLoss, weights: LossWeights, reference: Option<&SvbrdfMaps>) -> Result<Self> {
        obs.images.validate()?;
        let mask = obs.mask;
        mask.ensure_same_dims(&obs.images.i0, "observed images")?;
        if (obs.camera.width, obs.camera.height) != mask.dims() {
            return Err(Error::DimensionMismatch(format!(
                "camera {}x{} vs mask {}x{}",
                obs.camera.width,
                obs.camera.height,
                mask.width(),
                mask.height()
            )));
        }
        if let Some(r) = reference {
            mask.ensure_same_dims(&r.mask, "reference maps")?;
        }
        let imgs = obs.images.by_angle();
        let targets: Vec<Target> = (0..mask.len())
            .filter(|&i| mask.data()[i])
            .map(|i| {
                let angles = imgs.map(|g| g.data()[i]);
                Target {
                    index: i,
                    angles,
                    full: std::array::from_fn(|k| angles[0][k] + angles[2][k]),
                    reference: reference.map(|r| params_at(r, i)),
                }
            })
            .collect();
        if targets.is_empty() {
            return Err(Error::EmptyMask);
        }
        Ok(Self {
            targets,
            kind,
            weights,
            trig: CAPTURE_ANGLES_DEG.map(double_angle_trig),
        })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    /// Per-pixel raw sums `[angle sums × 4, intensity sum, map sum]` and,
    /// optionally, the gradient of the weighted total.
    fn pixel(&self, t: &Target, m: &PixelModel, p: &Params, grad: Option<&mut Params>) -> [f64; 6] {
        let n = self.len() as f64;
        let s = m.stokes(p);
        let mut acc = [0.0; 6];
        let mut w = [[0.0; 3]; 3];
        match self.kind {
            RenderLoss::Polarized => {
                let scale = self.weights.render / (12.0 * n);
                for (a, &(cs, sn)) in self.trig.iter().enumerate() {
                    for k in 0..3 {
                        let r = 0.5 * (s[0][k] + cs * s[1][k] + sn * s[2][k]) - t.angles[a][k];
                        acc[a] += r.abs();
                        let sg = kink_sign(r, t.angles[a][k]) * scale;
                        w[0][k] += 0.5 * sg;
                        w[1][k] += 0.5 * cs * sg;
                        w[2][k] += 0.5 * sn * sg;
                    }
                }
            }
            RenderLoss::Intensity => {
                let scale = self.weights.render / (3.0 * n);
                for k in 0..3 {
                    let r = s[0][k] - t.full[k];
                    acc[4] += r.abs();
                    w[0][k] = kink_sign(r, t.full[k]) * scale;
                }
            }
        }
        let mut g = grad.map(|g| {
            *g = m.vjp(p, &w);
            g
        });
        if let Some(r) = &t.reference {
            let wm = self.weights.map;
            for k in 0..3 {
                for off in [DIFFUSE, SPECULAR] {
                    let d = p[off + k] - r[off + k];
                    acc[5] += d.abs() / 3.0;
                    if let Some(g) = g.as_deref_mut() {
                        g[off + k] += wm * kink_sign(d, 1.0) / (3.0 * n);
                    }
                }
            }
            let d = p[ROUGHNESS] - r[ROUGHNESS];
            acc[5] += d.abs();
            let (np, na, nb) = stereo_jacobian(p[NORMAL_A], p[NORMAL_B]);
            let nr = super::model::from_stereo(r[NORMAL_A], r[NORMAL_B]);
            let dn = np - nr;
            acc[5] += dn.abs().sum() / 3.0;
            if let Some(g) = g {
                g[ROUGHNESS] += wm * kink_sign(d, 1.0) / n;
                let sg = dn.map(|x| kink_sign(x, 1.0)) * (wm / (3.0 * n));
                g[NORMAL_A] += sg.dot(&na);
                g[NORMAL_B] += sg.dot(&nb);
            }
        }
        acc
    }

    fn breakdown(&self, sums: [f64; 6]) -> LossBreakdown {
        let n = self.len() as f64;
        let (render, per_angle) = match self.kind {
            RenderLoss::Polarized => {
                let pa = [0, 1, 2, 3].map(|a| sums[a] / (3.0 * n));
                (pa.iter().sum::<f64>() / 4.0, pa)
            }
            RenderLoss::Intensity => (sums[4] / (3.0 * n), [0.0; 4]),
        };
        let map = sums[5] / n;
        LossBreakdown {
            total: self.weights.render * render + self.weights.map * map,
            l1_map_term: map,
            polarized_render_term: render,
            per_angle,
        }
    }

    /// Loss of packed parameters (one per target) under fixed pixel models.
    /// Reductions run over fixed-size chunks in order, so results do not
    /// depend on the thread count.
    pub fn evaluate(&self, models: &[PixelModel], params: &[Params], grads: Option<&mut [Params]>) -> LossBreakdown {
        let chunk_sums: Vec<[f64; 6]> = match grads {
            Some(grads) => self
                .targets
                .par_chunks(CHUNK)
                .zip(models.par_chunks(CHUNK))
                .zip(params.par_chunks(CHUNK))
                .zip(grads.par_chunks_mut(CHUNK))
                .map(|(((ts, ms), ps), gs)| {
                    let mut acc = [0.0; 6];
                    for (((t, m), p), g) in ts.iter().zip(ms).zip(ps).zip(gs.iter_mut()) {
                        add(&mut acc, self.pixel(t, m, p, Some(g)));
                    }
                    acc
                })
                .collect(),
            None => self
                .targets
                .par_chunks(CHUNK)
                .zip(models.par_chunks(CHUNK))
                .zip(params.par_chunks(CHUNK))
                .map(|((ts, ms), ps)| {
                    let mut acc = [0.0; 6];
                    for ((t, m), p) in ts.iter().zip(ms).zip(ps) {
                        add(&mut acc, self.pixel(t, m, p, None));
                    }
                    acc
                })
                .collect(),
        };
        let mut sums = [0.0; 6];
        for c in chunk_sums {
            add(&mut sums, c);
        }
        self.breakdown(sums)
    }

    pub fn models_from_depth(&self, depth: &ScalarMap, camera: &Camera, flash: &FlashLight) -> Vec<PixelModel> {
        let w = depth.width();
        self.targets
            .iter()
            .map(|t| {
                let p = camera.unproject(t.index % w, t.index / w, depth.data()[t.index]);
                PixelModel::new(&p, &flash.intensity)
            })
            .collect()
    }
}

fn add(acc: &mut [f64; 6], x: [f64; 6]) {
    for (a, b) in acc.iter_mut().zip(x) {
        *a += b;
    }
}

/// Subgradient of `|x|` with value 0 at the kink.
#[inline]
pub(crate) fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Residuals within round-off of zero (relative to the observed `scale`)
/// are treated as exact zeros of `|r|`.
#[inline]
fn kink_sign(r: f64, scale: f64) -> f64 {
    if r.abs() <= KINK_TOLERANCE * scale.abs().max(f64::MIN_POSITIVE) {
        0.0
    } else {
        sign(r)
    }
}

pub const KINK_TOLERANCE: f64 = 1e-12;

pub(crate) fn params_at(maps: &SvbrdfMaps, i: usize) -> Params {
    pack(
        maps.diffuse.data()[i],
        maps.specular.data()[i],
        maps.roughness.data()[i],
        &maps.normal.data()[i],
    )
}

fn prepare(pred: &SvbrdfMaps, obs: &Observation, opts: &LossOptions) -> Result<(Problem, Vec<PixelModel>, Vec<Params>)> {
    obs.mask.ensure_same_dims(&pred.mask, "predicted maps")?;
    let problem = Problem::new(obs, opts.kind, opts.weights, opts.reference)?;
    let models = problem.models_from_depth(&pred.depth, obs.camera, obs.flash);
    let params = problem.targets.iter().map(|t| params_at(pred, t.index)).collect();
    Ok((problem, models, params))
}

/// Loss of predicted maps against an observation. Surface positions come
/// from the predicted depth; pixels outside the observation mask are ignored.
pub fn polarized_render_loss(pred: &SvbrdfMaps, obs: &Observation, opts: &LossOptions) -> Result<LossBreakdown> {
    let (problem, models, params) = prepare(pred, obs, opts)?;
    Ok(problem.evaluate(&models, &params, None))
}

/// Analytic gradients of [`polarized_render_loss`]'s total with depth held
/// fixed. Entries outside the mask are zero.
pub fn loss_gradients(pred: &SvbrdfMaps, obs: &Observation, opts: &LossOptions) -> Result<ParamGradients> {
    let (problem, models, params) = prepare(pred, obs, opts)?;
    let mut grads = vec![[0.0; N_PARAMS]; params.len()];
    problem.evaluate(&models, &params, Some(&mut grads));
    let (w, h) = pred.dims();
    let mut out = ParamGradients {
        diffuse: Grid::zeros(w, h),
        specular: Grid::zeros(w, h),
        roughness: Grid::zeros(w, h),
        normal: Grid::zeros(w, h),
    };
    for (t, g) in problem.targets.iter().zip(&grads) {
        let i = t.index;
        out.diffuse.data_mut()[i] = [g[DIFFUSE], g[DIFFUSE + 1], g[DIFFUSE + 2]];
        out.specular.data_mut()[i] = [g[SPECULAR], g[SPECULAR + 1], g[SPECULAR + 2]];
        out.roughness.data_mut()[i] = g[ROUGHNESS];
        out.normal.data_mut()[i] = [g[NORMAL_A], g[NORMAL_B]];
    }
    Ok(out)
}
