//! White-noise gain `α(t) = α₀ + ᾱ(t)` with `⟨ᾱ(t₁)ᾱ(t₂)⟩ = 2σ²δ(t₁−t₂)`
//! driving the momentum equation, Monte Carlo ensembles over it, and the
//! closed-form second-moment laws they are compared against.
//!
//! Each path draws from its own ChaCha8 stream selected by
//! `(seed, path_index)`, and ensemble reductions run over fixed-size blocks
//! merged in index order, so results do not depend on thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{finite, KkError, Result};
use crate::riccati::DAMPING_COEFF;

/// `|k|` above which a path is marked blown up and frozen.
pub const BLOWUP_THRESHOLD: f64 = 1e12;

/// Paths per reduction block. Fixed so the summation tree is independent of
/// the rayon pool.
const BLOCK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    #[default]
    Ito,
    Stratonovich,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseModel {
    pub alpha0: f64,
    pub sigma2: f64,
    pub convention: Convention,
    pub seed: u64,
    pub dt: f64,
}

impl NoiseModel {
    pub fn new(alpha0: f64, sigma2: f64, convention: Convention, seed: u64, dt: f64) -> Result<Self> {
        finite("alpha0", alpha0)?;
        finite("sigma2", sigma2)?;
        if sigma2 < 0.0 {
            return Err(KkError::Domain { constraint: "noise intensity sigma2 >= 0", value: sigma2 });
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(KkError::Domain { constraint: "time step dt > 0", value: dt });
        }
        Ok(Self { alpha0, sigma2, convention, seed, dt })
    }

    /// Standard deviation of one noise increment, `sqrt(2σ²dt)`.
    pub fn increment_std(&self) -> f64 {
        (2.0 * self.sigma2 * self.dt).sqrt()
    }

    fn stream(&self, path_index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(path_index);
        rng
    }

    /// Number of whole steps spanned by a uniform grid with spacing `dt`.
    pub fn steps_for(&self, t_grid: &[f64]) -> Result<usize> {
        step_indices(t_grid, self.dt).map(|ix| ix.last().copied().unwrap_or(0))
    }
}

/// Uniform grid `0, dt, …, n·dt` with `n = round(t_max/dt)`.
pub fn time_grid(dt: f64, t_max: f64) -> Vec<f64> {
    let n = (t_max / dt).round() as usize;
    (0..=n).map(|i| i as f64 * dt).collect()
}

/// Maps output times to step counts; each must be a whole multiple of `dt`.
fn step_indices(t_grid: &[f64], dt: f64) -> Result<Vec<usize>> {
    if t_grid.first() != Some(&0.0) {
        return Err(KkError::InvalidConfig("output grid must start at t = 0".into()));
    }
    let mut out = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let steps = (t / dt).round();
        if !t.is_finite() || (steps * dt - t).abs() > 1e-9 * t.abs().max(dt) {
            return Err(KkError::InvalidConfig(format!("output time {t} is not a multiple of dt = {dt}")));
        }
        let steps = steps as usize;
        if out.last().is_some_and(|&prev| steps < prev) {
            return Err(KkError::InvalidConfig("output grid must be ascending".into()));
        }
        out.push(steps);
    }
    Ok(out)
}

/// Gain increments `∫α dt` over each step of `t_grid`: `α₀dt + ΔW` with
/// `ΔW ~ N(0, 2σ²dt)`.
pub fn sample_path(noise: &NoiseModel, path_index: u64, t_grid: &[f64]) -> Result<Vec<f64>> {
    let n = noise.steps_for(t_grid)?;
    Ok(increments(noise, path_index).take(n).collect())
}

fn increments(noise: &NoiseModel, path_index: u64) -> impl Iterator<Item = f64> {
    let mut rng = noise.stream(path_index);
    let drift = noise.alpha0 * noise.dt;
    let std = noise.increment_std();
    std::iter::repeat_with(move || {
        let z: f64 = StandardNormal.sample(&mut rng);
        drift + std * z
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdePath {
    /// `k` at each time of the requested grid.
    pub k: Vec<f64>,
    /// Time at which `|k|` first exceeded [`BLOWUP_THRESHOLD`].
    pub blown_up_at: Option<f64>,
}

/// Streams one path step by step, calling `visit(step, k, alive)` after
/// every step (and once for the initial value with `step = 0`). Returns
/// the blow-up step, if any.
fn drive_path(
    noise: &NoiseModel,
    beta: f64,
    k0: f64,
    n_steps: usize,
    path_index: u64,
    mut visit: impl FnMut(usize, f64, bool),
) -> Option<usize> {
    let dt = noise.dt;
    let damping = DAMPING_COEFF * beta;
    let drift = |k: f64| noise.alpha0 * k - damping * k * k;
    let std = noise.increment_std();
    let mut rng = noise.stream(path_index);
    let mut k = k0;
    let mut blown = None;
    visit(0, k, true);
    for step in 1..=n_steps {
        // One normal per step regardless of state keeps streams aligned
        // with `sample_path`.
        let z: f64 = StandardNormal.sample(&mut rng);
        if blown.is_none() {
            let dw = std * z;
            k = match noise.convention {
                Convention::Ito => k + drift(k) * dt + k * dw,
                Convention::Stratonovich => {
                    let pred = k + drift(k) * dt + k * dw;
                    k + 0.5 * (drift(k) + drift(pred)) * dt + 0.5 * (k + pred) * dw
                }
            };
            if !k.is_finite() || k.abs() > BLOWUP_THRESHOLD {
                blown = Some(step);
                if !k.is_finite() {
                    k = BLOWUP_THRESHOLD.copysign(k);
                }
            }
        }
        visit(step, k, blown.is_none());
    }
    blown
}

/// One path of the stochastic momentum equation sampled on `t_grid`.
/// Itô paths use Euler–Maruyama, Stratonovich paths stochastic Heun.
pub fn integrate_sde(noise: &NoiseModel, beta: f64, k0: f64, path_index: u64, t_grid: &[f64]) -> Result<SdePath> {
    finite("beta", beta)?;
    finite("k0", k0)?;
    let steps = step_indices(t_grid, noise.dt)?;
    let n = *steps.last().unwrap_or(&0);
    let mut k = Vec::with_capacity(steps.len());
    let mut next = 0;
    let blown = drive_path(noise, beta, k0, n, path_index, |step, v, _| {
        while next < steps.len() && steps[next] == step {
            k.push(v);
            next += 1;
        }
    });
    Ok(SdePath { k, blown_up_at: blown.map(|s| s as f64 * noise.dt) })
}

/// One-pass mean/variance accumulator with an order-fixed merge.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub n: u64,
    pub mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        self.mean += d * other.n as f64 / n as f64;
        self.m2 += other.m2 + d * d * (self.n as f64 * other.n as f64 / n as f64);
        self.n = n;
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.n == 0 {
            f64::NAN
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleStats {
    pub t_grid: Vec<f64>,
    pub mean_k: Vec<f64>,
    pub mean_k2: Vec<f64>,
    pub se_k: Vec<f64>,
    pub se_k2: Vec<f64>,
    pub n_paths: usize,
    /// Paths not yet blown up at each output time. Blown-up paths stay in
    /// the averages at their frozen value.
    pub survived: Vec<usize>,
}

impl EnsembleStats {
    pub fn survived_paths(&self) -> usize {
        self.survived.last().copied().unwrap_or(0)
    }
}

#[derive(Clone)]
struct BlockAcc {
    k: Vec<Moments>,
    k2: Vec<Moments>,
    survived: Vec<usize>,
}

impl BlockAcc {
    fn new(n: usize) -> Self {
        Self { k: vec![Moments::default(); n], k2: vec![Moments::default(); n], survived: vec![0; n] }
    }

    fn merge(&mut self, other: &BlockAcc) {
        for i in 0..self.k.len() {
            self.k[i].merge(&other.k[i]);
            self.k2[i].merge(&other.k2[i]);
            self.survived[i] += other.survived[i];
        }
    }
}

pub const MIN_PATHS: usize = 100;

/// Monte Carlo estimates of `⟨k⟩` and `⟨k²⟩` on the output grid `t_grid`
/// (times must be whole multiples of `noise.dt`).
pub fn ensemble_moments(
    noise: &NoiseModel,
    beta: f64,
    k0: f64,
    t_grid: &[f64],
    n_paths: usize,
) -> Result<EnsembleStats> {
    finite("beta", beta)?;
    finite("k0", k0)?;
    if n_paths < MIN_PATHS {
        return Err(KkError::InvalidConfig(format!("need at least {MIN_PATHS} paths, got {n_paths}")));
    }
    let steps = step_indices(t_grid, noise.dt)?;
    let n_out = steps.len();
    let n_steps = *steps.last().unwrap_or(&0);
    let n_blocks = n_paths.div_ceil(BLOCK);

    let blocks: Vec<BlockAcc> = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let mut acc = BlockAcc::new(n_out);
            for p in (b * BLOCK)..((b + 1) * BLOCK).min(n_paths) {
                let mut next = 0;
                drive_path(noise, beta, k0, n_steps, p as u64, |step, k, alive| {
                    while next < n_out && steps[next] == step {
                        acc.k[next].push(k);
                        acc.k2[next].push(k * k);
                        acc.survived[next] += usize::from(alive);
                        next += 1;
                    }
                });
            }
            acc
        })
        .collect();

    let mut total = BlockAcc::new(n_out);
    for b in &blocks {
        total.merge(b);
    }
    if total.survived.last().copied().unwrap_or(0) == 0 {
        return Err(KkError::DegenerateEnsemble { n_paths });
    }
    Ok(EnsembleStats {
        t_grid: t_grid.to_vec(),
        mean_k: total.k.iter().map(|m| m.mean).collect(),
        mean_k2: total.k2.iter().map(|m| m.mean).collect(),
        se_k: total.k.iter().map(Moments::std_error).collect(),
        se_k2: total.k2.iter().map(Moments::std_error).collect(),
        n_paths,
        survived: total.survived,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentFormula {
    pub value: f64,
    /// Bracket went negative (or, for the linear law, `σ²t >= 1`).
    pub flagged: bool,
}

/// `⟨k²⟩ = k₀²e^{2σ²t}[1 − (4/5)(βk₀/σ²)(e^{2σ²t} − 1)]`, evaluated
/// literally. At `σ² = 0` the `σ² → 0` limit `k₀²(1 − (8/5)βk₀t)` is used.
pub fn paper_moment_formula(sigma2: f64, beta: f64, k0: f64, t: f64) -> Result<MomentFormula> {
    for (what, v) in [("sigma2", sigma2), ("beta", beta), ("k0", k0), ("t", t)] {
        finite(what, v)?;
    }
    if sigma2 < 0.0 {
        return Err(KkError::Domain { constraint: "noise intensity sigma2 >= 0", value: sigma2 });
    }
    let (growth, bracket) = if sigma2 == 0.0 {
        (1.0, 1.0 - 2.0 * DAMPING_COEFF * beta * k0 * t)
    } else {
        let x = 2.0 * sigma2 * t;
        (x.exp(), 1.0 - DAMPING_COEFF * beta * k0 / sigma2 * x.exp_m1())
    };
    Ok(MomentFormula { value: k0 * k0 * growth * bracket, flagged: bracket < 0.0 })
}

/// Straight-line law `⟨k²⟩ = k₀²[1 + 2(σ² − (4/5)βk₀)t]`, valid for `σ²t < 1`.
pub fn linearized_moment_formula(sigma2: f64, beta: f64, k0: f64, t: f64) -> Result<MomentFormula> {
    for (what, v) in [("sigma2", sigma2), ("beta", beta), ("k0", k0), ("t", t)] {
        finite(what, v)?;
    }
    let slope = 2.0 * (sigma2 - DAMPING_COEFF * beta * k0);
    Ok(MomentFormula { value: k0 * k0 * (1.0 + slope * t), flagged: sigma2 * t >= 1.0 })
}

/// First order in `β` of the exact Itô second moment (α₀ = 0):
/// `k₀²e^{2σ²t}[1 − (2/5)(βk₀/σ²)(e^{4σ²t} − 1)]`, from
/// `d⟨k²⟩/dt = 2σ²⟨k²⟩ − (8/5)β⟨k³⟩` with the `β = 0` value
/// `⟨k³⟩ = k₀³e^{6σ²t}`. Used as a diagnostic next to
/// [`paper_moment_formula`], which agrees with it only to leading order in `σ²t`.
pub fn ito_first_order_moment(sigma2: f64, beta: f64, k0: f64, t: f64) -> f64 {
    let correction = if sigma2 == 0.0 {
        2.0 * DAMPING_COEFF * beta * k0 * t
    } else {
        0.5 * DAMPING_COEFF * beta * k0 / sigma2 * (4.0 * sigma2 * t).exp_m1()
    };
    k0 * k0 * (2.0 * sigma2 * t).exp() * (1.0 - correction)
}
