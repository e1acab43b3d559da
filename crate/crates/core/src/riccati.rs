//! Deterministic momentum dynamics `dk/dt = α(t) k − (4/5) β k²`.
//!
//! Three independent routes are provided: fixed-step RK4, the exact
//! closed form `k₀e^{G}/(1 + (4/5)βk₀F)` with `G(t) = ∫₀ᵗα` and
//! `F(t) = ∫₀ᵗe^{G}`, and its first-order expansion in `β`.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{finite, KkError, Result};
use crate::quadrature;

/// Coefficient of the quadratic damping term.
pub const DAMPING_COEFF: f64 = 0.8;

/// Absolute tolerance for the inner integrals of the closed form.
pub const CLOSED_FORM_TOL: f64 = 1e-10;

/// Magnitude treated as numerical blow-up by the RK4 integrator.
const BLOWUP: f64 = 1e150;

#[derive(Clone)]
pub enum AlphaFn {
    Constant(f64),
    /// Linear interpolation between samples, constant beyond the ends.
    Sampled { times: Vec<f64>, values: Vec<f64> },
    Function(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for AlphaFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(a) => write!(f, "Constant({a})"),
            Self::Sampled { times, .. } => write!(f, "Sampled(len = {})", times.len()),
            Self::Function(_) => write!(f, "Function"),
        }
    }
}

impl AlphaFn {
    pub fn sampled(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() || times.is_empty() {
            return Err(KkError::InvalidConfig("alpha samples need matching, non-empty times and values".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(KkError::InvalidConfig("alpha sample times must be strictly ascending".into()));
        }
        Ok(Self::Sampled { times, values })
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            Self::Constant(a) => *a,
            Self::Function(f) => f(t),
            Self::Sampled { times, values } => {
                let i = times.partition_point(|&s| s <= t);
                if i == 0 {
                    values[0]
                } else if i == times.len() {
                    values[times.len() - 1]
                } else {
                    let (t0, t1) = (times[i - 1], times[i]);
                    let w = (t - t0) / (t1 - t0);
                    values[i - 1] * (1.0 - w) + values[i] * w
                }
            }
        }
    }

    /// `G(t) = ∫₀ᵗ α(s) ds`.
    pub fn integral(&self, t: f64) -> Result<f64> {
        match self {
            Self::Constant(a) => Ok(a * t),
            Self::Function(f) => Ok(quadrature::integrate(|s| f(s), 0.0, t, CLOSED_FORM_TOL * 1e-2)?.value),
            Self::Sampled { times, .. } => {
                // Piecewise linear: integrate exactly between breakpoints.
                let mut knots = vec![0.0];
                knots.extend(times.iter().copied().filter(|&s| s > 0.0 && s < t));
                knots.push(t);
                Ok(knots.windows(2).map(|w| 0.5 * (w[1] - w[0]) * (self.value(w[0]) + self.value(w[1]))).sum())
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct RiccatiModel {
    pub alpha: AlphaFn,
    pub beta: f64,
    pub k0: f64,
}

impl RiccatiModel {
    pub fn new(alpha: AlphaFn, beta: f64, k0: f64) -> Result<Self> {
        finite("beta", beta)?;
        finite("k0", k0)?;
        if beta < 0.0 {
            return Err(KkError::Domain { constraint: "beta >= 0", value: beta });
        }
        Ok(Self { alpha, beta, k0 })
    }

    pub fn constant(alpha: f64, beta: f64, k0: f64) -> Result<Self> {
        finite("alpha", alpha)?;
        Self::new(AlphaFn::Constant(alpha), beta, k0)
    }

    /// `F(t) = ∫₀ᵗ e^{G(s)} ds`.
    pub fn growth_integral(&self, t: f64) -> Result<f64> {
        if let AlphaFn::Constant(a) = self.alpha {
            // exp_m1 keeps F accurate for small a·t.
            return Ok(if a == 0.0 { t } else { (a * t).exp_m1() / a });
        }
        let q = quadrature::integrate(
            |s| self.alpha.integral(s).map(f64::exp).unwrap_or(f64::NAN),
            0.0,
            t,
            CLOSED_FORM_TOL,
        )?;
        Ok(q.value)
    }
}

pub fn riccati_rhs(k: f64, alpha_val: f64, beta: f64) -> f64 {
    alpha_val * k - DAMPING_COEFF * beta * k * k
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    match t_grid.first() {
        None => return Err(KkError::InvalidConfig("empty time grid".into())),
        Some(&t0) if t0 != 0.0 => {
            return Err(KkError::InvalidConfig(format!("time grid must start at 0, starts at {t0}")));
        }
        _ => {}
    }
    if t_grid.iter().any(|t| !t.is_finite()) || t_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(KkError::InvalidConfig("time grid must be finite and ascending".into()));
    }
    Ok(())
}

/// Fixed-step classical RK4 for a scalar ODE `y' = f(t, y)`.
///
/// The step is `h = (t_end − t_start)/steps`; each output interval is split
/// into `ceil(len/h)` equal substeps so every grid time is hit exactly.
pub fn rk4_path<F: Fn(f64, f64) -> f64>(f: F, y0: f64, t_grid: &[f64], steps: usize) -> Result<Vec<f64>> {
    let (Some(&t_start), Some(&t_end)) = (t_grid.first(), t_grid.last()) else {
        return Err(KkError::InvalidConfig("empty time grid".into()));
    };
    if steps == 0 {
        return Err(KkError::InvalidConfig("RK4 needs at least one step".into()));
    }
    let h_max = ((t_end - t_start) / steps as f64).abs();
    let mut y = y0;
    let mut out = Vec::with_capacity(t_grid.len());
    out.push(y);
    for w in t_grid.windows(2) {
        let span = w[1] - w[0];
        let n = if h_max > 0.0 { (span.abs() / h_max * (1.0 - 1e-12)).ceil().max(1.0) as usize } else { 1 };
        let h = span / n as f64;
        for i in 0..n {
            let t = w[0] + i as f64 * h;
            let k1 = f(t, y);
            let k2 = f(t + 0.5 * h, y + 0.5 * h * k1);
            let k3 = f(t + 0.5 * h, y + 0.5 * h * k2);
            let k4 = f(t + h, y + h * k3);
            y += h / 6.0 * (k1 + 2.0 * (k2 + k3) + k4);
            if !y.is_finite() || y.abs() > BLOWUP {
                return Err(KkError::Blowup { t_estimate: t + h });
            }
        }
        out.push(y);
    }
    Ok(out)
}

pub fn solve_riccati_numeric(model: &RiccatiModel, t_grid: &[f64], steps: usize) -> Result<Vec<f64>> {
    check_grid(t_grid)?;
    rk4_path(|t, k| riccati_rhs(k, model.alpha.value(t), model.beta), model.k0, t_grid, steps)
}

/// Exact solution `k₀e^{G(t)} / (1 + (4/5)βk₀F(t))`.
pub fn riccati_closed_form(model: &RiccatiModel, t: f64) -> Result<f64> {
    finite("t", t)?;
    if model.k0 == 0.0 {
        return Ok(0.0);
    }
    let g = model.alpha.integral(t)?;
    let f = model.growth_integral(t)?;
    let denominator = 1.0 + DAMPING_COEFF * model.beta * model.k0 * f;
    if denominator <= 0.0 {
        return Err(KkError::FiniteTimeSingularity { t, denominator });
    }
    Ok(model.k0 * g.exp() / denominator)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Perturbative {
    pub value: f64,
    /// `(4/5)β|k₀|F(t)`
    pub expansion_parameter: f64,
    /// Set when the expansion parameter reaches 0.5.
    pub out_of_range: bool,
}

/// First-order-in-β form `k₀e^{G}[1 − (4/5)βk₀F]`.
pub fn riccati_perturbative(model: &RiccatiModel, t: f64) -> Result<Perturbative> {
    finite("t", t)?;
    let g = model.alpha.integral(t)?;
    let f = model.growth_integral(t)?;
    let x = DAMPING_COEFF * model.beta * model.k0 * f;
    let expansion_parameter = x.abs();
    Ok(Perturbative {
        value: model.k0 * g.exp() * (1.0 - x),
        expansion_parameter,
        out_of_range: expansion_parameter >= 0.5,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub k_numeric: f64,
    pub k_closed: f64,
    pub k_perturbative: f64,
}

/// The three solvers side by side on `t_grid`.
pub fn riccati_trajectory(model: &RiccatiModel, t_grid: &[f64], steps: usize) -> Result<Vec<TrajectoryRow>> {
    let numeric = solve_riccati_numeric(model, t_grid, steps)?;
    t_grid
        .iter()
        .zip(numeric)
        .map(|(&t, k_numeric)| {
            Ok(TrajectoryRow {
                t,
                k_numeric,
                k_closed: riccati_closed_form(model, t)?,
                k_perturbative: riccati_perturbative(model, t)?.value,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(t_end: f64, n: usize) -> Vec<f64> {
        (0..=n).map(|i| t_end * i as f64 / n as f64).collect()
    }

    #[test]
    fn rhs_fixed_points() {
        assert_eq!(riccati_rhs(0.0, 3.0, 2.0), 0.0);
        assert_eq!(riccati_rhs(1.0, 1.0, 0.0), 1.0);
        let (a, b) = (0.7, 0.3);
        assert!(riccati_rhs(1.25 * a / b, a, b).abs() < 1e-15);
    }

    #[test]
    fn numeric_trivial_and_logistic() {
        let m = RiccatiModel::constant(0.0, 0.0, 1.3).unwrap();
        assert!(solve_riccati_numeric(&m, &grid(2.0, 10), 100).unwrap().iter().all(|&k| k == 1.3));

        let (a, b) = (1.0, 0.5);
        let m = RiccatiModel::constant(a, b, 0.1).unwrap();
        let path = solve_riccati_numeric(&m, &grid(40.0, 4), 40_000).unwrap();
        assert!((path[4] - 5.0 * a / (4.0 * b)).abs() < 1e-10);
    }

    #[test]
    fn algebraic_decay() {
        let (b, k0) = (0.3, 2.0);
        let m = RiccatiModel::constant(0.0, b, k0).unwrap();
        let ts = grid(3.0, 30);
        let path = solve_riccati_numeric(&m, &ts, 3000).unwrap();
        for (t, k) in ts.iter().zip(&path) {
            let exact = k0 / (1.0 + 0.8 * b * k0 * t);
            assert!((k - exact).abs() < 1e-12 * exact);
            assert!((riccati_closed_form(&m, *t).unwrap() - exact).abs() < 1e-14);
        }
    }

    #[test]
    fn grid_must_start_at_zero() {
        let m = RiccatiModel::constant(1.0, 0.0, 1.0).unwrap();
        assert!(solve_riccati_numeric(&m, &[0.5, 1.0], 10).is_err());
        assert!(solve_riccati_numeric(&m, &[], 10).is_err());
        assert!(solve_riccati_numeric(&m, &[0.0, 1.0, 0.5], 10).is_err());
    }

    #[test]
    fn blowup_is_reported() {
        // k0 < 0 with β > 0: k' = -0.8 β k² drives k to -∞ at t = 1/(0.8 β |k0|)
        let m = RiccatiModel::constant(0.0, 1.0, -1.0).unwrap();
        let err = solve_riccati_numeric(&m, &grid(3.0, 3), 30_000).unwrap_err();
        match err {
            KkError::Blowup { t_estimate } => assert!((t_estimate - 1.25).abs() < 0.01, "{t_estimate}"),
            e => panic!("unexpected {e:?}"),
        }
        assert!(matches!(riccati_closed_form(&m, 2.0), Err(KkError::FiniteTimeSingularity { .. })));
    }

    #[test]
    fn closed_form_matches_numeric() {
        let m = RiccatiModel::constant(1.0, 0.1, 1.0).unwrap();
        assert_eq!(riccati_closed_form(&m, 0.0).unwrap(), 1.0);
        let path = solve_riccati_numeric(&m, &[0.0, 1.0], 10_000).unwrap();
        let closed = riccati_closed_form(&m, 1.0).unwrap();
        assert!((path[1] - closed).abs() < 1e-8 * closed);
    }

    #[test]
    fn time_varying_alpha_routes_agree() {
        let f = AlphaFn::Function(Arc::new(|t: f64| 0.5 + 0.8 * (3.0 * t).sin()));
        let m = RiccatiModel::new(f, 0.2, 1.5).unwrap();
        let ts = grid(2.0, 8);
        let path = solve_riccati_numeric(&m, &ts, 20_000).unwrap();
        for (t, k) in ts.iter().zip(&path) {
            let c = riccati_closed_form(&m, *t).unwrap();
            assert!((k - c).abs() < 1e-8 * c.abs(), "t={t}: {k} vs {c}");
        }
    }

    #[test]
    fn sampled_alpha_integral_is_exact() {
        let a = AlphaFn::sampled(vec![0.0, 1.0, 2.0], vec![0.0, 2.0, 0.0]).unwrap();
        assert_eq!(a.value(0.5), 1.0);
        assert!((a.integral(2.0).unwrap() - 2.0).abs() < 1e-15);
        assert!((a.integral(1.5).unwrap() - 1.75).abs() < 1e-15);
        assert_eq!(a.value(5.0), 0.0);
        assert!(AlphaFn::sampled(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn perturbative_values() {
        let m = RiccatiModel::constant(0.7, 0.0, 1.2).unwrap();
        let p = riccati_perturbative(&m, 1.3).unwrap();
        assert_eq!(p.value, 1.2 * (0.7f64 * 1.3).exp());
        assert!(!p.out_of_range);

        let m = RiccatiModel::constant(0.0, 0.01, 1.0).unwrap();
        let p = riccati_perturbative(&m, 1.0).unwrap();
        assert!((p.value - 0.992).abs() < 1e-15);
        assert!((riccati_closed_form(&m, 1.0).unwrap() - 1.0 / 1.008).abs() < 1e-15);
        assert!((p.value - 1.0 / 1.008).abs() < 1e-4);

        let m = RiccatiModel::constant(1.0, 1e-3, 1.0).unwrap();
        for t in grid(1.0, 20) {
            let c = riccati_closed_form(&m, t).unwrap();
            let p = riccati_perturbative(&m, t).unwrap().value;
            assert!((p - c).abs() / c < 1e-5);
        }

        let wide = RiccatiModel::constant(1.0, 1.0, 1.0).unwrap();
        assert!(riccati_perturbative(&wide, 1.0).unwrap().out_of_range);
    }

    #[test]
    fn zero_momentum_is_invariant() {
        let m = RiccatiModel::constant(0.9, 0.4, 0.0).unwrap();
        let ts = grid(2.0, 10);
        assert!(solve_riccati_numeric(&m, &ts, 100).unwrap().iter().all(|&k| k == 0.0));
        for t in ts {
            assert_eq!(riccati_closed_form(&m, t).unwrap(), 0.0);
            assert_eq!(riccati_perturbative(&m, t).unwrap().value, 0.0);
        }
    }

    #[test]
    fn negative_beta_rejected() {
        assert!(RiccatiModel::constant(1.0, -0.1, 1.0).is_err());
        assert!(RiccatiModel::constant(f64::NAN, 0.1, 1.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn closed_vs_numeric(a in -1.0f64..1.0, b in 0.0f64..1.0, k0 in 0.0f64..2.0, t in 0.0f64..2.0) {
            let m = RiccatiModel::constant(a, b, k0).unwrap();
            let ts = [0.0, t];
            let path = solve_riccati_numeric(&m, &ts, 10_000).unwrap();
            let c = riccati_closed_form(&m, t).unwrap();
            prop_assert!((path[1] - c).abs() <= 1e-7 * c.abs().max(1e-300));
        }

        #[test]
        fn positive_paths_stay_positive(a in -3.0f64..3.0, b in 0.0f64..5.0, k0 in 1e-3f64..10.0) {
            let m = RiccatiModel::constant(a, b, k0).unwrap();
            let path = solve_riccati_numeric(&m, &grid(2.0, 20), 4000).unwrap();
            prop_assert!(path.iter().all(|&k| k > 0.0));
        }
    }
}
