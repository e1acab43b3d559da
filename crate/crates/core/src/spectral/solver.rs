//! Fourier pseudospectral integration of
//!
//! ```text
//! u_t + 4u²u_x − (75/2)u_x u_xx − 15u u_xxx + u_xxxxx = α(t)u + β u_xx
//! ```
//!
//! The nonlinear part is evaluated in flux form, `u_t ⊃ ∂ₓF` with
//! `F = −(4/3)u³ + (45/4)u_x² + 15u u_xx`, so the discrete mass `Σu dx` is
//! conserved to rounding. The linear symbol `−iκ⁵ + α − βκ²` is handled
//! exactly by the exponential integrators.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::Grid;
use crate::error::{KkError, Result};

const CONTOUR_POINTS: usize = 64;

/// Source of the gain coefficient `α(t)`.
#[derive(Clone)]
pub enum AlphaSource {
    Constant(f64),
    /// One value per time step; step `i` uses `values[i]` on `[t_i, t_{i+1})`.
    Path(Arc<[f64]>),
    /// Evaluated at the start of each step and frozen across it.
    Function(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for AlphaSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(a) => write!(f, "Constant({a})"),
            Self::Path(p) => write!(f, "Path(len = {})", p.len()),
            Self::Function(_) => write!(f, "Function"),
        }
    }
}

impl AlphaSource {
    /// Piecewise-constant `α` from noise increments `∫α dt` over each step.
    pub fn from_increments(increments: &[f64], dt: f64) -> Self {
        Self::Path(increments.iter().map(|d| d / dt).collect())
    }

    fn at(&self, step: usize, t: f64) -> Result<f64> {
        match self {
            Self::Constant(a) => Ok(*a),
            Self::Path(p) => p.get(step).copied().ok_or_else(|| {
                KkError::InvalidConfig(format!("alpha path has {} samples, step {step} requested", p.len()))
            }),
            Self::Function(f) => Ok(f(t)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Integrating-factor RK4.
    IfRk4,
    /// Cox-Matthews ETDRK4 with contour-integral coefficients.
    Etdrk4,
}

#[derive(Debug, Clone)]
pub struct PdeConfig {
    pub alpha: AlphaSource,
    pub beta: f64,
    pub dt: f64,
    pub scheme: Scheme,
    pub dealias: bool,
    /// Switches the flux term off, leaving the linear problem.
    pub nonlinear: bool,
}

impl Default for PdeConfig {
    fn default() -> Self {
        Self {
            alpha: AlphaSource::Constant(0.0),
            beta: 0.0,
            dt: 1e-3,
            scheme: Scheme::Etdrk4,
            dealias: true,
            nonlinear: true,
        }
    }
}

impl PdeConfig {
    /// Validates the parameters. For the integrating-factor scheme the
    /// per-step phase rotation `dt·max|κ|⁵` of the fastest retained mode
    /// must stay below `2π`.
    pub fn check(&self, grid: &Grid) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(KkError::InvalidConfig(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(KkError::InvalidConfig(format!("beta must be >= 0, got {}", self.beta)));
        }
        if self.scheme == Scheme::IfRk4 {
            let rotation = self.dt * grid.max_wavenumber(self.dealias).powi(5);
            if rotation >= 2.0 * PI {
                return Err(KkError::InvalidConfig(format!(
                    "dt = {} rotates the fastest mode by {rotation:.3} rad per step (limit 2π)",
                    self.dt
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Diagnostics {
    /// `Σu² dx`
    pub momentum: f64,
    /// `Σu_x² dx`
    pub grad2: f64,
    /// `Σu_x³ dx`
    pub cubic_flux: f64,
    /// `Σu dx`
    pub mass: f64,
    /// Largest imaginary part dropped by the last real projection.
    pub imag_residue: f64,
}

impl Diagnostics {
    pub fn of(u: &[f64], grid: &Grid) -> Self {
        let ux = grid.derivative(u, 1);
        let dx = grid.dx();
        Self {
            momentum: u.iter().map(|v| v * v).sum::<f64>() * dx,
            grad2: ux.iter().map(|v| v * v).sum::<f64>() * dx,
            cubic_flux: ux.iter().map(|v| v * v * v).sum::<f64>() * dx,
            mass: u.iter().sum::<f64>() * dx,
            imag_residue: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdeState {
    pub t: f64,
    pub u: Vec<f64>,
    pub diagnostics: Diagnostics,
}

impl PdeState {
    pub fn new(t: f64, u: Vec<f64>, grid: &Grid) -> Result<Self> {
        if u.len() != grid.len() {
            return Err(KkError::InvalidGrid(format!(
                "field has {} samples, grid has {}",
                u.len(),
                grid.len()
            )));
        }
        if let Some(bad) = u.iter().find(|v| !v.is_finite()) {
            return Err(KkError::NonFinite { what: "u", value: *bad });
        }
        let diagnostics = Diagnostics::of(&u, grid);
        Ok(Self { t, u, diagnostics })
    }

    pub fn from_fn(t: f64, grid: &Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(t, grid.points().into_iter().map(f).collect(), grid)
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.diagnostics.momentum
    }
}

fn check_finite(u: &[f64], t: f64) -> Result<()> {
    if u.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(KkError::Diverged { t, last_valid_t: t })
    }
}

/// Spectrum of the flux-form nonlinear tendency `∂ₓF`.
fn nonlinear_spectrum(grid: &Grid, spec: &[Complex64], dealias: bool) -> Vec<Complex64> {
    let (u, _) = grid.inverse(spec);
    let ux = grid.derivative_from_spectrum(spec, 1);
    let uxx = grid.derivative_from_spectrum(spec, 2);
    let mut flux: Vec<Complex64> = u
        .iter()
        .zip(&ux)
        .zip(&uxx)
        .map(|((&u, &ux), &uxx)| {
            Complex64::new(-4.0 / 3.0 * u * u * u + 11.25 * ux * ux + 15.0 * u * uxx, 0.0)
        })
        .collect();
    grid.forward_complex(&mut flux);
    if dealias {
        grid.apply_dealias(&mut flux);
    }
    for (f, &k) in flux.iter_mut().zip(grid.wavenumbers()) {
        *f *= Complex64::new(0.0, k);
    }
    flux
}

fn linear_symbol(k: f64, alpha: f64, beta: f64) -> Complex64 {
    Complex64::new(alpha - beta * k * k, -k.powi(5))
}

/// Tendency `u_t` of the perturbed equation at a single instant.
pub fn kk_rhs(u: &[f64], grid: &Grid, alpha_val: f64, beta: f64, dealias: bool) -> Result<Vec<f64>> {
    check_finite(u, f64::NAN)?;
    if u.len() != grid.len() {
        return Err(KkError::InvalidGrid(format!("field has {} samples, grid has {}", u.len(), grid.len())));
    }
    let spec = grid.forward(u);
    let mut tend = nonlinear_spectrum(grid, &spec, dealias);
    for ((t, s), &k) in tend.iter_mut().zip(&spec).zip(grid.wavenumbers()) {
        *t += linear_symbol(k, alpha_val, beta) * s;
    }
    Ok(grid.inverse(&tend).0)
}

/// `R = 2Σu·u_t dx − [2αΣu² dx − 2βΣu_x² dx − (15/2)Σu_x³ dx]`.
///
/// Integrating `2u·u_t` by parts, the quartic and fifth-derivative terms
/// drop out and `75 u u_x u_xx`, `30 u² u_xxx` combine into
/// `−(15/2)∫u_x³`. `R` vanishes for any field up to aliasing and rounding.
pub fn momentum_balance_residual(state: &PdeState, alpha_val: f64, beta: f64, grid: &Grid, dealias: bool) -> f64 {
    let Ok(ut) = kk_rhs(&state.u, grid, alpha_val, beta, dealias) else {
        return f64::NAN;
    };
    let dp_dt = 2.0 * grid.integrate(&state.u.iter().zip(&ut).map(|(a, b)| a * b).collect::<Vec<_>>());
    let d = &state.diagnostics;
    dp_dt - (2.0 * alpha_val * d.momentum - 2.0 * beta * d.grad2 - 7.5 * d.cubic_flux)
}

struct EtdCoefficients {
    alpha: f64,
    dt: f64,
    e: Vec<Complex64>,
    e2: Vec<Complex64>,
    q: Vec<Complex64>,
    f1: Vec<Complex64>,
    f2: Vec<Complex64>,
    f3: Vec<Complex64>,
}

impl EtdCoefficients {
    fn new(grid: &Grid, alpha: f64, beta: f64, dt: f64) -> Self {
        let n = grid.len();
        let roots: Vec<Complex64> = (0..CONTOUR_POINTS)
            .map(|j| Complex64::from_polar(1.0, 2.0 * PI * (j as f64 + 0.5) / CONTOUR_POINTS as f64))
            .collect();
        let mut c = Self {
            alpha,
            dt,
            e: Vec::with_capacity(n),
            e2: Vec::with_capacity(n),
            q: Vec::with_capacity(n),
            f1: Vec::with_capacity(n),
            f2: Vec::with_capacity(n),
            f3: Vec::with_capacity(n),
        };
        let m = CONTOUR_POINTS as f64;
        for &k in grid.wavenumbers() {
            let lh = linear_symbol(k, alpha, beta) * dt;
            c.e.push(lh.exp());
            c.e2.push((lh * 0.5).exp());
            let zero = Complex64::new(0.0, 0.0);
            let (mut q, mut f1, mut f2, mut f3) = (zero, zero, zero, zero);
            for r in &roots {
                let z: Complex64 = lh + r;
                let ez = z.exp();
                let z3 = z * z * z;
                q += ((z * 0.5).exp() - 1.0) / z;
                f1 += (-4.0 - z + ez * (4.0 - 3.0 * z + z * z)) / z3;
                f2 += (2.0 + z + ez * (z - 2.0)) / z3;
                f3 += (-4.0 - 3.0 * z - z * z + ez * (4.0 - z)) / z3;
            }
            c.q.push(q * (dt / m));
            c.f1.push(f1 * (dt / m));
            c.f2.push(f2 * (dt / m));
            c.f3.push(f3 * (dt / m));
        }
        c
    }
}

/// Owns the grid-sized workspace of one simulation.
pub struct Solver {
    grid: Grid,
    config: PdeConfig,
    etd: Option<EtdCoefficients>,
    steps_taken: usize,
}

impl Solver {
    pub fn new(grid: Grid, config: PdeConfig) -> Result<Self> {
        config.check(&grid)?;
        Ok(Self { grid, config, etd: None, steps_taken: 0 })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn config(&self) -> &PdeConfig {
        &self.config
    }

    fn nonlinear(&self, spec: &[Complex64]) -> Vec<Complex64> {
        if self.config.nonlinear {
            nonlinear_spectrum(&self.grid, spec, self.config.dealias)
        } else {
            vec![Complex64::new(0.0, 0.0); spec.len()]
        }
    }

    /// Advances one step of size `dt` (negative `dt` integrates backwards).
    pub fn step_with(&mut self, state: &PdeState, alpha: f64, dt: f64) -> Result<PdeState> {
        let v = self.grid.forward(&state.u);
        let next = match self.config.scheme {
            Scheme::IfRk4 => self.ifrk4(&v, alpha, dt),
            Scheme::Etdrk4 => self.etdrk4(&v, alpha, dt),
        };
        let (u, residue) = self.grid.inverse(&next);
        let t = state.t + dt;
        if u.iter().any(|v| !v.is_finite()) {
            return Err(KkError::Diverged { t, last_valid_t: state.t });
        }
        let mut diagnostics = Diagnostics::of(&u, &self.grid);
        diagnostics.imag_residue = residue;
        Ok(PdeState { t, u, diagnostics })
    }

    pub fn step(&mut self, state: &PdeState) -> Result<PdeState> {
        let alpha = self.config.alpha.at(self.steps_taken, state.t)?;
        let next = self.step_with(state, alpha, self.config.dt)?;
        self.steps_taken += 1;
        Ok(next)
    }

    fn ifrk4(&self, v: &[Complex64], alpha: f64, h: f64) -> Vec<Complex64> {
        let beta = self.config.beta;
        let e2: Vec<Complex64> = self
            .grid
            .wavenumbers()
            .iter()
            .map(|&k| (linear_symbol(k, alpha, beta) * (0.5 * h)).exp())
            .collect();
        let combine = |x: &[Complex64], y: &[Complex64], s: f64| -> Vec<Complex64> {
            x.iter().zip(y).zip(&e2).map(|((a, b), e)| e * (a + b * s)).collect()
        };
        let a = self.nonlinear(v);
        let s1 = combine(v, &a, 0.5 * h);
        let b = self.nonlinear(&s1);
        let ev: Vec<Complex64> = v.iter().zip(&e2).map(|(a, e)| a * e).collect();
        let s2: Vec<Complex64> = ev.iter().zip(&b).map(|(a, b)| a + b * (0.5 * h)).collect();
        let c = self.nonlinear(&s2);
        let s3 = combine(&ev, &c, h);
        let d = self.nonlinear(&s3);
        (0..v.len())
            .map(|j| {
                let e = e2[j];
                let ee = e * e;
                ee * v[j] + (ee * a[j] + e * (b[j] + c[j]) * 2.0 + d[j]) * (h / 6.0)
            })
            .collect()
    }

    fn etdrk4(&mut self, v: &[Complex64], alpha: f64, h: f64) -> Vec<Complex64> {
        let stale = self.etd.as_ref().is_none_or(|c| c.alpha != alpha || c.dt != h);
        if stale {
            self.etd = Some(EtdCoefficients::new(&self.grid, alpha, self.config.beta, h));
        }
        let nv = self.nonlinear(v);
        let c = self.etd.as_ref().expect("coefficients initialised above");
        let a: Vec<Complex64> = (0..v.len()).map(|j| c.e2[j] * v[j] + c.q[j] * nv[j]).collect();
        let na = self.nonlinear(&a);
        let c = self.etd.as_ref().expect("coefficients initialised above");
        let b: Vec<Complex64> = (0..v.len()).map(|j| c.e2[j] * v[j] + c.q[j] * na[j]).collect();
        let nb = self.nonlinear(&b);
        let c = self.etd.as_ref().expect("coefficients initialised above");
        let cc: Vec<Complex64> =
            (0..v.len()).map(|j| c.e2[j] * a[j] + c.q[j] * (nb[j] * 2.0 - nv[j])).collect();
        let nc = self.nonlinear(&cc);
        let c = self.etd.as_ref().expect("coefficients initialised above");
        (0..v.len())
            .map(|j| c.e[j] * v[j] + nv[j] * c.f1[j] + (na[j] + nb[j]) * c.f2[j] * 2.0 + nc[j] * c.f3[j])
            .collect()
    }
}

/// One step from `state` using a fresh solver. `step_index` selects the
/// sample of a stored `α` path.
pub fn step(state: &PdeState, config: &PdeConfig, grid: &Grid, step_index: usize) -> Result<PdeState> {
    let mut solver = Solver::new(grid.clone(), config.clone())?;
    solver.steps_taken = step_index;
    solver.step(state)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub alpha: f64,
    #[serde(flatten)]
    pub diagnostics: Diagnostics,
    pub balance_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub u: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub snapshots: Vec<Snapshot>,
    pub final_state: PdeState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Record diagnostics every this many steps (and at the end).
    pub sample_every: usize,
    /// Record full fields every this many steps; `None` disables snapshots.
    pub snapshot_every: Option<usize>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { sample_every: 1, snapshot_every: None }
    }
}

/// Integrates to `t_end` (rounded to a whole number of steps).
pub fn run_pde(initial: &PdeState, config: &PdeConfig, grid: &Grid, t_end: f64, opts: RunOptions) -> Result<Trajectory> {
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(KkError::InvalidConfig(format!("T must be positive, got {t_end}")));
    }
    if opts.sample_every == 0 || opts.snapshot_every == Some(0) {
        return Err(KkError::InvalidConfig("sampling intervals must be >= 1".into()));
    }
    let mut solver = Solver::new(grid.clone(), config.clone())?;
    let n_steps = ((t_end / config.dt).round() as usize).max(1);
    if let AlphaSource::Path(p) = &config.alpha {
        if p.len() < n_steps {
            return Err(KkError::InvalidConfig(format!(
                "alpha path has {} samples but the run needs {n_steps}",
                p.len()
            )));
        }
    }

    let sample = |state: &PdeState, alpha: f64| Sample {
        t: state.t,
        alpha,
        diagnostics: state.diagnostics,
        balance_residual: momentum_balance_residual(state, alpha, config.beta, grid, config.dealias),
    };

    let mut state = initial.clone();
    let alpha0 = config.alpha.at(0, state.t)?;
    let mut samples = vec![sample(&state, alpha0)];
    let mut snapshots = Vec::new();
    if opts.snapshot_every.is_some() {
        snapshots.push(Snapshot { t: state.t, u: state.u.clone() });
    }
    for i in 1..=n_steps {
        state = solver.step(&state)?;
        if i % opts.sample_every == 0 || i == n_steps {
            // α in effect over the step that starts here
            let alpha = config.alpha.at(i.min(n_steps - 1), state.t).unwrap_or(f64::NAN);
            samples.push(sample(&state, alpha));
        }
        if let Some(every) = opts.snapshot_every {
            if i % every == 0 || i == n_steps {
                snapshots.push(Snapshot { t: state.t, u: state.u.clone() });
            }
        }
    }
    Ok(Trajectory { samples, snapshots, final_state: state })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::new(2.0 * PI, 64).unwrap()
    }

    #[test]
    fn zero_field_has_zero_tendency() {
        let g = grid();
        let u = vec![0.0; 64];
        assert!(kk_rhs(&u, &g, 0.7, 0.2, true).unwrap().iter().all(|&v| v == 0.0));
        let s = PdeState::new(0.0, u, &g).unwrap();
        assert_eq!(momentum_balance_residual(&s, 0.3, 0.1, &g, true), 0.0);
        let next = step(&s, &PdeConfig::default(), &g, 0).unwrap();
        assert!(next.u.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn small_mode_tendency_is_fifth_derivative() {
        let g = grid();
        let eps = 1e-9;
        let u: Vec<f64> = g.points().iter().map(|x| eps * (2.0 * x).sin()).collect();
        let ut = kk_rhs(&u, &g, 0.0, 0.0, true).unwrap();
        for (j, x) in g.points().iter().enumerate() {
            // −∂ₓ⁵ sin(2x) = −32 cos(2x)
            assert!((ut[j] + 32.0 * eps * (2.0 * x).cos()).abs() < 1e-14);
        }
    }

    #[test]
    fn nan_field_is_diverged() {
        let g = grid();
        let mut u = vec![0.0; 64];
        u[3] = f64::NAN;
        assert!(matches!(kk_rhs(&u, &g, 0.0, 0.0, true), Err(KkError::Diverged { .. })));
        assert!(PdeState::new(0.0, u, &g).is_err());
    }

    #[test]
    fn stability_guard() {
        let g = Grid::new(2.0 * PI, 256).unwrap();
        let cfg = PdeConfig { scheme: Scheme::IfRk4, dt: 1e-3, ..Default::default() };
        assert!(cfg.check(&g).is_err());
        let cfg = PdeConfig { scheme: Scheme::Etdrk4, ..cfg };
        assert!(cfg.check(&g).is_ok());
        let bad = PdeConfig { beta: -1.0, ..Default::default() };
        assert!(bad.check(&g).is_err());
    }

    #[test]
    fn path_too_short_is_rejected() {
        let g = grid();
        let s = PdeState::new(0.0, vec![0.0; 64], &g).unwrap();
        let cfg = PdeConfig { alpha: AlphaSource::Path(vec![0.1; 5].into()), dt: 0.01, ..Default::default() };
        let opts = RunOptions::default();
        assert!(run_pde(&s, &cfg, &g, 0.1, opts).is_err());
        assert!(run_pde(&s, &cfg, &g, 0.05, opts).is_ok());
    }

    #[test]
    fn pure_gain_matches_exponential() {
        let g = Grid::new(20.0 * PI, 64).unwrap();
        let a = 0.4;
        let s = PdeState::from_fn(0.0, &g, |x| (0.1 * x).cos() + 0.5 * (0.3 * x).sin()).unwrap();
        for scheme in [Scheme::IfRk4, Scheme::Etdrk4] {
            let cfg = PdeConfig { alpha: AlphaSource::Constant(a), dt: 1e-3, scheme, nonlinear: false, ..Default::default() };
            let tr = run_pde(&s, &cfg, &g, 1.0, RunOptions { sample_every: 100, snapshot_every: None }).unwrap();
            let p = tr.final_state.diagnostics.momentum;
            let expect = s.diagnostics.momentum * (2.0 * a).exp();
            assert!((p - expect).abs() < 1e-8 * expect, "{scheme:?}: {p} vs {expect}");
        }
    }
}
