//! Per-pixel recovery of the five maps from one polarized flash capture.

use std::f64::consts::PI;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::integrate::integrate_normals;
use super::loss::{sign, LossBreakdown, LossWeights, Observation, Problem, RenderLoss, Target};
use super::model::*;
use crate::brdf::{collocated_specular, diffuse_dop_cos, Vec3, ALPHA_MIN, DEFAULT_IOR};
use crate::error::{Error, Result};
use crate::grid::{Grid, Mask, Rgb, ScalarMap};
use crate::maps::SvbrdfMaps;
use crate::render::{Camera, FlashLight};
use crate::stokes::{NormalizedStokesMap, PolarizedImages};

/// Which inputs and loss the fit may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FitMode {
    /// Polarization cues for initialization and the polarized rendering loss.
    #[default]
    Full,
    /// Cue initialization, but the loss compares total intensity only.
    NoPolarizedLoss,
    /// Neither cues nor polarized loss: a single flash image.
    NoPolarization,
}

impl FitMode {
    pub const ALL: [FitMode; 3] = [FitMode::Full, FitMode::NoPolarizedLoss, FitMode::NoPolarization];

    pub fn as_str(self) -> &'static str {
        match self {
            FitMode::Full => "full",
            FitMode::NoPolarizedLoss => "no_polarized_loss",
            FitMode::NoPolarization => "no_polarization",
        }
    }

    fn uses_cues(self) -> bool {
        self != FitMode::NoPolarization
    }

    fn loss(self) -> RenderLoss {
        match self {
            FitMode::Full => RenderLoss::Polarized,
            _ => RenderLoss::Intensity,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SpecularParam {
    /// One specular albedo shared by the three channels.
    #[default]
    Gray,
    Rgb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    Constant,
    /// Cosine decay from the base step to `final_fraction` of it.
    #[default]
    Cosine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub iterations: usize,
    pub learning_rate: f64,
    pub schedule: Schedule,
    pub final_fraction: f64,
    pub specular: SpecularParam,
    /// Weight of the anisotropic total variation on normals and roughness.
    pub smoothness: f64,
    pub weights: LossWeights,
    pub mode: FitMode,
    /// Recorded for provenance; the fit itself draws no random numbers.
    pub seed: u64,
    /// Stop once the objective falls to this value.
    pub tolerance: f64,
    /// Abort after this many consecutive objective increases.
    pub divergence_window: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            iterations: 500,
            learning_rate: 1e-2,
            schedule: Schedule::Cosine,
            final_fraction: 0.01,
            specular: SpecularParam::Gray,
            smoothness: 1e-3,
            weights: LossWeights::default(),
            mode: FitMode::Full,
            seed: 0,
            tolerance: 0.0,
            divergence_window: 50,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.iterations < 1 {
            return bad("iterations must be >= 1".into());
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return bad(format!("learning_rate {} must be positive", self.learning_rate));
        }
        if !(self.final_fraction > 0.0 && self.final_fraction <= 1.0) {
            return bad(format!("final_fraction {} must be in (0, 1]", self.final_fraction));
        }
        if self.smoothness < 0.0 || self.weights.render < 0.0 || self.weights.map < 0.0 || self.tolerance < 0.0 {
            return bad("weights and tolerance must be non-negative".into());
        }
        if self.divergence_window < 1 {
            return bad("divergence_window must be >= 1".into());
        }
        Ok(())
    }

    fn step(&self, t: usize) -> f64 {
        match self.schedule {
            Schedule::Constant => self.learning_rate,
            Schedule::Cosine => {
                let f = self.final_fraction;
                let x = if self.iterations > 1 {
                    t as f64 / (self.iterations - 1) as f64
                } else {
                    1.0
                };
                self.learning_rate * (f + (1.0 - f) * 0.5 * (1.0 + (PI * x).cos()))
            }
        }
    }
}

/// Surface positions used while fitting.
#[derive(Debug, Clone, Copy)]
pub enum DepthPrior<'a> {
    Map(&'a ScalarMap),
    /// Every pixel at this distance along the viewing axis.
    Constant(f64),
}

#[derive(Debug, Clone, Copy)]
pub struct FitInput<'a> {
    pub images: &'a PolarizedImages,
    pub mask: &'a Mask,
    pub camera: &'a Camera,
    pub flash: &'a FlashLight,
    pub depth: DepthPrior<'a>,
    /// Normalized Stokes cue; derived from `images` when absent.
    pub cue: Option<&'a NormalizedStokesMap>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub init_ms: f64,
    pub optimize_ms: f64,
    pub integrate_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub mode: FitMode,
    pub config_hash: String,
    pub pixels: usize,
    pub iterations: usize,
    pub best_iteration: usize,
    pub initial: LossBreakdown,
    /// Loss of the returned (best) parameters.
    pub best: LossBreakdown,
    /// Objective (loss + smoothness) per iteration.
    pub objective: Vec<f64>,
    pub render_term: Vec<f64>,
    pub timings: Timings,
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub maps: SvbrdfMaps,
    pub report: FitReport,
}

/// Smallest admissible `n·v` after each step.
const MIN_COS: f64 = 0.02;

struct Adam {
    m: Vec<Params>,
    v: Vec<Params>,
    t: i32,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize) -> Self {
        Self {
            m: vec![[0.0; N_PARAMS]; n],
            v: vec![[0.0; N_PARAMS]; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [Params], grads: &[Params], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        params
            .par_iter_mut()
            .zip(grads.par_iter())
            .zip(self.m.par_iter_mut().zip(self.v.par_iter_mut()))
            .for_each(|((p, g), (m, v))| {
                for i in 0..N_PARAMS {
                    m[i] = Self::B1 * m[i] + (1.0 - Self::B1) * g[i];
                    v[i] = Self::B2 * v[i] + (1.0 - Self::B2) * g[i] * g[i];
                    p[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + Self::EPS);
                }
            });
    }
}

/// Inverts the monotone diffuse degree of polarization: `c` with `ρ(c) = p`.
pub fn invert_diffuse_dop(p: f64, ior: f64) -> f64 {
    if p <= 0.0 {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    if p >= diffuse_dop_cos(0.0, ior).0 {
        return 0.0;
    }
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if diffuse_dop_cos(mid, ior).0 > p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Specular albedo and roughness reproducing `ρs·g(c, α) = gs`, preferring
/// `α` near 0.5 while keeping `ρs ≤ 1`.
fn split_specular(gs: f64, c: f64) -> (f64, f64) {
    if gs <= 0.0 {
        return (0.0, 0.5);
    }
    let candidates = (0..48).map(|i| ALPHA_MIN * (1.0 / ALPHA_MIN).powf(i as f64 / 47.0));
    let mut best: Option<(f64, f64, f64)> = None;
    let mut strongest = (0.0, 0.5);
    for a in candidates {
        let g = collocated_specular(c, a, DEFAULT_IOR).0;
        if g > strongest.0 {
            strongest = (g, a);
        }
        let rho = gs / g;
        if rho <= 1.0 {
            let d = (a / 0.5).ln().abs();
            if best.is_none_or(|b| d < b.2) {
                best = Some((rho, a, d));
            }
        }
    }
    match best {
        Some((rho, a, _)) => (rho, a),
        None => (1.0, strongest.1),
    }
}

/// Closed-form initialization from the observed Stokes components.
///
/// Per channel the diffuse and specular terms share the degree of
/// polarization, so `|s12_k| = ρ·D_k` and `s0_k = D_k + G`; with a colored
/// diffuse term this pins `ρ` (and hence the zenith angle) by least squares
/// over the channels. Gray pixels fall back to the pure-diffuse assumption.
fn init_with_cues(t: &Target, m: &PixelModel, orient: Option<(f64, f64)>, outward: (f64, f64)) -> (Params, SpecularObs) {
    let a = &t.angles;
    let s0: Rgb = std::array::from_fn(|k| 0.5 * (a[0][k] + a[1][k] + a[2][k] + a[3][k]));
    let l: Rgb = std::array::from_fn(|k| (a[0][k] - a[2][k]).hypot(a[1][k] - a[3][k]));
    let v = m.view;
    let e = m.irradiance;
    let mean = |x: &Rgb| (x[0] + x[1] + x[2]) / 3.0;
    let (m0, ml) = (mean(&s0), mean(&l));
    if m0 <= 0.0 {
        return (pack([0.0; 3], [0.0; 3], 0.5, &v), SpecularObs::default());
    }
    let dop_max = diffuse_dop_cos(0.0, DEFAULT_IOR).0 * (1.0 - 1e-9);
    let p_lo = (0..3).filter(|&k| s0[k] > 0.0).map(|k| l[k] / s0[k]).fold(0.0, f64::max);
    let (mut sab, mut sbb, mut sll) = (0.0, 0.0, 0.0);
    for k in 0..3 {
        let (da, db) = (s0[k] - m0, l[k] - ml);
        sab += da * db;
        sbb += db * db;
        sll += l[k] * l[k];
    }
    let mut p = if sab > 0.0 && sbb > 1e-16 * sll { sbb / sab } else { p_lo };
    p = p.max(p_lo).min(dop_max);

    let (c, n) = match orient {
        Some((oc, os)) if p > 0.0 => {
            let c = invert_diffuse_dop(p, DEFAULT_IOR).max(MIN_COS);
            // Polarization direction χ with (cos 2χ, sin 2χ) = (oc, os).
            let chi = 0.5 * os.atan2(oc);
            let ez = -(chi.cos() * v.x + chi.sin() * v.y) / v.z;
            let e_dir = Vec3::new(chi.cos(), chi.sin(), ez).normalize();
            let mut tdir = v.cross(&e_dir);
            if tdir.x * outward.0 + tdir.y * outward.1 < 0.0 {
                tdir = -tdir;
            }
            (c, v * c + tdir * (1.0 - c * c).sqrt())
        }
        _ => (1.0, v),
    };
    let d: Rgb = std::array::from_fn(|k| if p > 0.0 { (l[k] / p).min(s0[k]) } else { s0[k] });
    let diffuse: Rgb = std::array::from_fn(|k| (d[k] * PI / (c * e[k])).clamp(0.0, 1.0));
    let gs: Rgb = std::array::from_fn(|k| ((s0[k] - d[k]) / e[k]).max(0.0));
    let obs = SpecularObs { gs, c };
    let (rho, alpha) = split_specular(mean(&gs), c);
    (pack(diffuse, obs.albedo(rho / mean(&gs).max(f64::MIN_POSITIVE)), alpha, &n), obs)
}

/// Specular radiance per unit irradiance, `ρs·g(c, α)`, and the `c` it was
/// observed at.
#[derive(Debug, Clone, Copy, Default)]
struct SpecularObs {
    gs: Rgb,
    c: f64,
}

impl SpecularObs {
    fn albedo(&self, inv_g: f64) -> Rgb {
        self.gs.map(|v| (v * inv_g).clamp(0.0, 1.0))
    }

    fn mean(&self) -> f64 {
        (self.gs[0] + self.gs[1] + self.gs[2]) / 3.0
    }
}

/// One roughness for the whole capture: the `α` whose implied specular
/// albedo `ρs = gs / g(c, α)` varies least between neighbouring pixels
/// (plus a penalty for `ρs > 1`). Per pixel only `ρs·g` is observable; across
/// pixels the angular falloff of `g` separates the two.
fn global_roughness(obs: &[SpecularObs], pairs: &[(usize, usize)]) -> Option<f64> {
    let active = |o: &SpecularObs| o.mean() > 0.0 && o.c > MIN_COS;
    if obs.iter().filter(|o| active(o)).count() < 2 {
        return None;
    }
    let cost = |alpha: f64| -> f64 {
        let rho: Vec<f64> = obs
            .iter()
            .map(|o| if active(o) { o.mean() / collocated_specular(o.c, alpha, DEFAULT_IOR).0 } else { f64::NAN })
            .collect();
        let tv: f64 = pairs
            .iter()
            .map(|&(i, j)| (rho[i] - rho[j]).abs())
            .filter(|v| v.is_finite())
            .sum();
        let over: f64 = rho.iter().filter(|v| v.is_finite()).map(|v| (v - 1.0).max(0.0)).sum();
        tv + 10.0 * over
    };
    let grid: Vec<f64> = (0..64).map(|i| ALPHA_MIN * (1.0 / ALPHA_MIN).powf(i as f64 / 63.0)).collect();
    let costs: Vec<f64> = grid.par_iter().map(|&a| cost(a)).collect();
    let k = (0..grid.len()).min_by(|&a, &b| costs[a].total_cmp(&costs[b]))?;
    // Golden-section refinement in log α between the neighbouring grid nodes.
    let (mut lo, mut hi) = (grid[k.saturating_sub(1)].ln(), grid[(k + 1).min(grid.len() - 1)].ln());
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut x1, mut x2) = (hi - phi * (hi - lo), lo + phi * (hi - lo));
    let (mut f1, mut f2) = (cost(x1.exp()), cost(x2.exp()));
    for _ in 0..40 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = cost(x1.exp());
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = cost(x2.exp());
        }
    }
    let best = 0.5 * (lo + hi);
    Some(if cost(best.exp()) <= costs[k] { best.exp() } else { grid[k] })
}

/// Initialization without polarization: frontal normals, albedo from the
/// flash image, default specular.
fn init_plain(t: &Target, m: &PixelModel) -> (Params, SpecularObs) {
    let diffuse: Rgb = std::array::from_fn(|k| (t.full[k] * PI / m.irradiance[k]).clamp(0.0, 1.0));
    (pack(diffuse, [0.04; 3], 0.5, &m.view), SpecularObs::default())
}

fn project(p: &mut Params, m: &PixelModel, gray: bool) {
    if gray {
        let s = (p[SPECULAR] + p[SPECULAR + 1] + p[SPECULAR + 2]) / 3.0;
        p[SPECULAR..SPECULAR + 3].fill(s);
    }
    for v in &mut p[DIFFUSE..SPECULAR + 3] {
        *v = v.clamp(0.0, 1.0);
    }
    p[ROUGHNESS] = p[ROUGHNESS].clamp(ALPHA_MIN, 1.0);
    let n = normal_of(p);
    let c = n.dot(&m.view);
    if c < MIN_COS {
        let perp = (n - m.view * c).try_normalize(1e-12).unwrap_or_else(|| {
            m.view.cross(&Vec3::x()).try_normalize(1e-12).unwrap_or_else(Vec3::y)
        });
        let fixed = m.view * MIN_COS + perp * (1.0 - MIN_COS * MIN_COS).sqrt();
        let (a, b) = to_stereo(&fixed);
        p[NORMAL_A] = a;
        p[NORMAL_B] = b;
    }
}

/// Anisotropic TV on normal components and roughness, averaged per pixel.
struct Smoothness {
    /// Masked right, lower, left and upper neighbours of each target;
    /// the value sums over the first two so every pair counts once.
    neighbours: Vec<[Option<usize>; 4]>,
    weight: f64,
}

impl Smoothness {
    fn new(targets: &[Target], w: usize, h: usize, weight: f64) -> Self {
        let mut slot = vec![None; w * h];
        for (k, t) in targets.iter().enumerate() {
            slot[t.index] = Some(k);
        }
        let neighbours = targets
            .iter()
            .map(|t| {
                let (x, y) = (t.index % w, t.index / w);
                [
                    (x + 1 < w).then(|| slot[t.index + 1]).flatten(),
                    (y + 1 < h).then(|| slot[t.index + w]).flatten(),
                    (x > 0).then(|| slot[t.index - 1]).flatten(),
                    (y > 0).then(|| slot[t.index - w]).flatten(),
                ]
            })
            .collect();
        Self {
            neighbours,
            weight: weight / targets.len() as f64,
        }
    }

    fn term(a: &Vec3, ra: f64, b: &Vec3, rb: f64) -> f64 {
        (a - b).abs().sum() + (ra - rb).abs()
    }

    /// Adds the gradient to `grads` and returns the value.
    fn apply(&self, params: &[Params], normals: &[Vec3], grads: &mut [Params]) -> f64 {
        if self.weight == 0.0 {
            return 0.0;
        }
        let w = self.weight;
        let value: f64 = self
            .neighbours
            .iter()
            .enumerate()
            .map(|(k, nb)| {
                nb[..2]
                    .iter()
                    .flatten()
                    .map(|&j| Self::term(&normals[k], params[k][ROUGHNESS], &normals[j], params[j][ROUGHNESS]))
                    .sum::<f64>()
            })
            .sum();
        grads.par_iter_mut().enumerate().for_each(|(k, g)| {
            let mut dn = Vec3::zeros();
            let mut dr = 0.0;
            for &j in self.neighbours[k].iter().flatten() {
                dn += (normals[k] - normals[j]).map(sign);
                dr += sign(params[k][ROUGHNESS] - params[j][ROUGHNESS]);
            }
            let (_, na, nb) = stereo_jacobian(params[k][NORMAL_A], params[k][NORMAL_B]);
            g[NORMAL_A] += w * dn.dot(&na);
            g[NORMAL_B] += w * dn.dot(&nb);
            g[ROUGHNESS] += w * dr;
        });
        w * value
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Recovers diffuse and specular albedo, roughness, normals and depth.
///
/// Parameters are initialized from the polarization cues (unless the mode
/// withholds them), refined with Adam on the rendering loss plus the
/// smoothness prior, and re-projected to their feasible ranges after each
/// step. The best iterate is returned. Depth is integrated from the
/// recovered normals and placed at the median prior depth.
pub fn fit_svbrdf(input: &FitInput, cfg: &FitConfig) -> Result<FitResult> {
    cfg.validate()?;
    let t0 = Instant::now();
    let obs = Observation {
        images: input.images,
        mask: input.mask,
        camera: input.camera,
        flash: input.flash,
    };
    let (w, h) = input.mask.dims();
    let depth = match input.depth {
        DepthPrior::Map(d) => {
            input.mask.ensure_same_dims(d, "depth prior")?;
            d.clone()
        }
        DepthPrior::Constant(d) if d > 0.0 && d.is_finite() => Grid::filled(w, h, d),
        DepthPrior::Constant(d) => return Err(Error::InvalidInput(format!("working distance {d} must be positive"))),
    };
    if let Some(cue) = input.cue {
        input.mask.ensure_same_dims(&cue.valid, "stokes cue")?;
    }
    let problem = Problem::new(&obs, cfg.mode.loss(), cfg.weights, None)?;
    let models = problem.models_from_depth(&depth, input.camera, input.flash);
    let gray = cfg.specular == SpecularParam::Gray;

    let (cx, cy) = {
        let n = problem.len() as f64;
        let sx: f64 = problem.targets.iter().map(|t| (t.index % w) as f64).sum();
        let sy: f64 = problem.targets.iter().map(|t| (t.index / w) as f64).sum();
        (sx / n, sy / n)
    };
    let (mut params, spec_obs): (Vec<Params>, Vec<SpecularObs>) = problem
        .targets
        .par_iter()
        .zip(models.par_iter())
        .map(|(t, m)| {
            if cfg.mode.uses_cues() {
                let orient = match input.cue {
                    Some(cue) => cue.valid.data()[t.index].then(|| {
                        let u = cue.u.data()[t.index];
                        (u[0], u[1])
                    }),
                    None => {
                        let a = &t.angles;
                        let q1: f64 = (0..3).map(|k| a[0][k] - a[2][k]).sum();
                        let q2: f64 = (0..3).map(|k| a[1][k] - a[3][k]).sum();
                        let s0: f64 = (0..3).map(|k| a[0][k] + a[2][k]).sum();
                        let l = q1.hypot(q2);
                        (l > 1e-12 * s0).then(|| (q1 / l, q2 / l))
                    }
                };
                let (x, y) = ((t.index % w) as f64, (t.index / w) as f64);
                init_with_cues(t, m, orient, (x - cx, cy - y))
            } else {
                init_plain(t, m)
            }
        })
        .unzip();
    let smooth = Smoothness::new(&problem.targets, w, h, cfg.smoothness);
    if cfg.mode.uses_cues() {
        let pairs: Vec<(usize, usize)> = smooth
            .neighbours
            .iter()
            .enumerate()
            .flat_map(|(k, nb)| nb[..2].iter().flatten().map(move |&j| (k, j)))
            .collect();
        if let Some(alpha) = global_roughness(&spec_obs, &pairs) {
            for (p, o) in params.iter_mut().zip(&spec_obs) {
                if o.mean() > 0.0 && o.c > MIN_COS {
                    let g = collocated_specular(o.c, alpha, DEFAULT_IOR).0;
                    let rho = o.albedo(1.0 / g);
                    p[SPECULAR..SPECULAR + 3].copy_from_slice(&rho);
                    p[ROUGHNESS] = alpha;
                }
            }
        }
    }
    params.par_iter_mut().zip(models.par_iter()).for_each(|(p, m)| project(p, m, gray));
    let init_ms = t0.elapsed().as_secs_f64() * 1e3;

    let t1 = Instant::now();
    let mut adam = Adam::new(params.len());
    let mut grads = vec![[0.0; N_PARAMS]; params.len()];
    let mut best_params = params.clone();
    let mut best = (f64::INFINITY, LossBreakdown::default(), 0usize);
    let mut initial = None;
    let mut objective = Vec::with_capacity(cfg.iterations + 1);
    let mut render_term = Vec::with_capacity(cfg.iterations + 1);
    let mut increases = 0;
    for it in 0..=cfg.iterations {
        let loss = problem.evaluate(&models, &params, Some(&mut grads));
        let normals: Vec<Vec3> = params.iter().map(normal_of).collect();
        let obj = loss.total + smooth.apply(&params, &normals, &mut grads);
        if !obj.is_finite() {
            return Err(Error::Diverged(format!("non-finite objective at iteration {it}")));
        }
        initial.get_or_insert(loss);
        if let Some(&prev) = objective.last() {
            increases = if obj > prev { increases + 1 } else { 0 };
        }
        objective.push(obj);
        render_term.push(loss.polarized_render_term);
        if obj < best.0 {
            best = (obj, loss, it);
            best_params.clone_from(&params);
        }
        if increases >= cfg.divergence_window {
            return Err(Error::Diverged(format!(
                "objective rose for {increases} consecutive iterations (iteration {it}: {obj:.3e}, best {:.3e} at {})",
                best.0, best.2
            )));
        }
        if it == cfg.iterations || obj <= cfg.tolerance {
            break;
        }
        if gray {
            for g in grads.iter_mut() {
                let s = g[SPECULAR] + g[SPECULAR + 1] + g[SPECULAR + 2];
                g[SPECULAR..SPECULAR + 3].fill(s);
            }
        }
        adam.step(&mut params, &grads, cfg.step(it));
        params.par_iter_mut().zip(models.par_iter()).for_each(|(p, m)| project(p, m, gray));
    }
    let optimize_ms = t1.elapsed().as_secs_f64() * 1e3;

    let t2 = Instant::now();
    let mut maps = SvbrdfMaps::empty(w, h);
    maps.mask = input.mask.clone();
    for (t, p) in problem.targets.iter().zip(&best_params) {
        let i = t.index;
        maps.diffuse.data_mut()[i] = diffuse_of(p);
        maps.specular.data_mut()[i] = specular_of(p);
        maps.roughness.data_mut()[i] = p[ROUGHNESS];
        maps.normal.data_mut()[i] = normal_of(p);
    }
    let reference = median(problem.targets.iter().map(|t| depth.data()[t.index]).collect());
    let height = integrate_normals(&maps.normal, &maps.mask, input.camera.pixel_footprint(reference))?;
    for t in &problem.targets {
        maps.depth.data_mut()[t.index] = reference - height.data()[t.index];
    }
    let integrate_ms = t2.elapsed().as_secs_f64() * 1e3;

    Ok(FitResult {
        maps,
        report: FitReport {
            mode: cfg.mode,
            config_hash: crate::io::config_hash(cfg),
            pixels: problem.len(),
            iterations: objective.len() - 1,
            best_iteration: best.2,
            initial: initial.unwrap_or_default(),
            best: best.1,
            objective,
            render_term,
            timings: Timings {
                init_ms,
                optimize_ms,
                integrate_ms,
            },
        },
    })
}
