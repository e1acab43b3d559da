//! Reduction of `dk/dt = n + m t + λ k²` to Painlevé II and a fixed-step
//! integrator for `q'' = z q + 2 q³ + δ`.
//!
//! With `τ = n + m t`, differentiating once gives
//! `d²k/dτ² = 1/m + (2λ/m²) k τ + (2λ²/m²) k³`. The scalings
//! `k = a q`, `τ = b z` with `a = (2m/λ²)^{1/3}` and `b = (m²/(2λ))^{1/3}`
//! turn this into PII with `δ = b²/(a m) = 1/2`. Keeping a free `δ` gives
//! the second-order family `k'' = 2mδ + 2λk(n + m t) + 2λ²k³`, of which the
//! first-order equation is the `δ = 1/2` member.

use serde::Serialize;

use crate::error::{finite, KkError, Result};

/// `|q|` beyond which integration stops at a movable pole.
pub const POLE_THRESHOLD: f64 = 1e8;

/// Max FD residual for a solution grid to count as accepted.
pub const RESIDUAL_TOL: f64 = 1e-8;

const POLE_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PainleveProblem {
    pub n: f64,
    pub m: f64,
    pub lambda: f64,
    pub delta: f64,
    /// `a` in `k = a q`.
    pub k_scale: f64,
    /// `b` in `n + m t = b z`.
    pub tau_scale: f64,
}

/// Builds the scaling maps for `dk/dt = n + m t + λk²`. The resulting
/// problem carries `δ = 1/2`, the value the first-order equation forces.
pub fn reduce_to_pii(n: f64, m: f64, lambda: f64) -> Result<PainleveProblem> {
    finite("n", n)?;
    finite("m", m)?;
    finite("lambda", lambda)?;
    if m == 0.0 {
        return Err(KkError::SingularScaling("m"));
    }
    if lambda == 0.0 {
        return Err(KkError::SingularScaling("lambda"));
    }
    let k_scale = (2.0 * m / (lambda * lambda)).cbrt();
    let tau_scale = (m * m / (2.0 * lambda)).cbrt();
    let delta = tau_scale * tau_scale / (k_scale * m);
    Ok(PainleveProblem { n, m, lambda, delta, k_scale, tau_scale })
}

impl PainleveProblem {
    /// Same maps, different PII parameter (the second-order family).
    pub fn with_delta(self, delta: f64) -> Self {
        Self { delta, ..self }
    }

    /// `z = (n + m t)/b`.
    pub fn z_of_t(&self, t: f64) -> f64 {
        (self.n + self.m * t) / self.tau_scale
    }

    pub fn t_of_z(&self, z: f64) -> f64 {
        (self.tau_scale * z - self.n) / self.m
    }

    /// `(t, k) → (z, q)`
    pub fn to_pii(&self, t: f64, k: f64) -> (f64, f64) {
        (self.z_of_t(t), k / self.k_scale)
    }

    /// `(z, q) → (t, k)`
    pub fn from_pii(&self, z: f64, q: f64) -> (f64, f64) {
        (self.t_of_z(z), self.k_scale * q)
    }

    /// `dq/dz` from `dk/dt`.
    pub fn dq_dz(&self, dk_dt: f64) -> f64 {
        dk_dt * self.tau_scale / (self.m * self.k_scale)
    }

    pub fn dk_dt(&self, dq_dz: f64) -> f64 {
        dq_dz * self.m * self.k_scale / self.tau_scale
    }

    /// Right side of the first-order equation `n + m t + λk²`.
    pub fn first_order_rhs(&self, t: f64, k: f64) -> f64 {
        self.n + self.m * t + self.lambda * k * k
    }

    /// Right side of `k'' = 2mδ + 2λk(n + m t) + 2λ²k³`.
    pub fn second_order_rhs(&self, t: f64, k: f64) -> f64 {
        2.0 * self.m * self.delta
            + 2.0 * self.lambda * k * (self.n + self.m * t)
            + 2.0 * self.lambda * self.lambda * k * k * k
    }
}

pub fn pii_rhs(z: f64, q: f64, delta: f64) -> f64 {
    z * q + 2.0 * q * q * q + delta
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Termination {
    Completed,
    /// Stopped at `|q| > POLE_THRESHOLD`; `z_pole` extrapolates `q ~ c/(z − z₀)`.
    Pole { z_stop: f64, z_pole: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PiiSolution {
    pub delta: f64,
    pub z: Vec<f64>,
    pub q: Vec<f64>,
    pub q_prime: Vec<f64>,
    /// `|q'' − (zq + 2q³ + δ)|` with `q''` from 4th-order differences of `q'`.
    pub residual: Vec<f64>,
    pub termination: Termination,
}

impl PiiSolution {
    pub fn max_residual(&self) -> f64 {
        self.residual.iter().fold(0.0, |m, &r| m.max(r))
    }

    pub fn accepted(&self) -> bool {
        self.max_residual() < RESIDUAL_TOL
    }
}

/// Fourth-order finite-difference derivative of samples on a uniform grid
/// of spacing `h`. Needs at least five samples.
pub fn fd_derivative(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    assert!(n >= 5, "fourth-order differences need 5 samples");
    let s = 1.0 / (12.0 * h);
    (0..n)
        .map(|j| {
            if j == 0 {
                (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) * s
            } else if j == 1 {
                (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) * s
            } else if j == n - 2 {
                (3.0 * f[n - 1] + 10.0 * f[n - 2] - 18.0 * f[n - 3] + 6.0 * f[n - 4] - f[n - 5]) * s
            } else if j == n - 1 {
                (25.0 * f[n - 1] - 48.0 * f[n - 2] + 36.0 * f[n - 3] - 16.0 * f[n - 4] + 3.0 * f[n - 5]) * s
            } else {
                (-f[j + 2] + 8.0 * f[j + 1] - 8.0 * f[j - 1] + f[j - 2]) * s
            }
        })
        .collect()
}

/// PII residual on a uniform `z` grid given `q` and `q'` samples.
pub fn pii_residual(z: &[f64], q: &[f64], q_prime: &[f64], delta: f64) -> Vec<f64> {
    if z.len() < 5 {
        return vec![f64::NAN; z.len()];
    }
    let h = (z[z.len() - 1] - z[0]) / (z.len() - 1) as f64;
    let qpp = fd_derivative(q_prime, h);
    (0..z.len()).map(|j| (qpp[j] - pii_rhs(z[j], q[j], delta)).abs()).collect()
}

/// RK4 over `[z_start, z_end]` (either direction) in `steps` equal steps.
pub fn solve_pii(delta: f64, q0: f64, q0_prime: f64, z_start: f64, z_end: f64, steps: usize) -> Result<PiiSolution> {
    for (what, v) in [("delta", delta), ("q0", q0), ("q0_prime", q0_prime), ("z_start", z_start), ("z_end", z_end)] {
        finite(what, v)?;
    }
    if steps == 0 {
        return Err(KkError::InvalidConfig("PII integration needs at least one step".into()));
    }
    let h = (z_end - z_start) / steps as f64;
    let f = |z: f64, q: f64, p: f64| (p, pii_rhs(z, q, delta));

    let mut z = Vec::with_capacity(steps + 1);
    let mut qs = Vec::with_capacity(steps + 1);
    let mut ps = Vec::with_capacity(steps + 1);
    let (mut q, mut p) = (q0, q0_prime);
    z.push(z_start);
    qs.push(q);
    ps.push(p);
    let mut termination = Termination::Completed;
    for i in 0..steps {
        let zi = z_start + i as f64 * h;
        let (a1, b1) = f(zi, q, p);
        let (a2, b2) = f(zi + 0.5 * h, q + 0.5 * h * a1, p + 0.5 * h * b1);
        let (a3, b3) = f(zi + 0.5 * h, q + 0.5 * h * a2, p + 0.5 * h * b2);
        let (a4, b4) = f(zi + h, q + h * a3, p + h * b3);
        let nq = q + h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        let np = p + h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
        if !nq.is_finite() || !np.is_finite() || nq.abs() > POLE_THRESHOLD {
            // q ~ c/(z − z₀) ⇒ z₀ ≈ z + q/q′ from the last accepted point
            termination = Termination::Pole { z_stop: zi, z_pole: zi + q / p };
            break;
        }
        q = nq;
        p = np;
        z.push(z_start + (i + 1) as f64 * h);
        qs.push(q);
        ps.push(p);
    }
    let residual = pii_residual(&z, &qs, &ps, delta);
    Ok(PiiSolution { delta, z, q: qs, q_prime: ps, residual, termination })
}

/// Polynomial with coefficients in ascending powers.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly(pub Vec<f64>);

impl Poly {
    pub fn eval(&self, z: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * z + c)
    }

    pub fn derivative(&self) -> Poly {
        Poly(self.0.iter().enumerate().skip(1).map(|(i, &c)| i as f64 * c).collect())
    }

    fn mul(&self, other: &Poly) -> Poly {
        if self.0.is_empty() || other.0.is_empty() {
            return Poly(vec![]);
        }
        let mut out = vec![0.0; self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly(out)
    }

    fn sub(&self, other: &Poly) -> Poly {
        let n = self.0.len().max(other.0.len());
        Poly((0..n).map(|i| self.0.get(i).unwrap_or(&0.0) - other.0.get(i).unwrap_or(&0.0)).collect())
    }

    fn scale(&self, s: f64) -> Poly {
        Poly(self.0.iter().map(|c| c * s).collect())
    }

    fn trim(mut self) -> Poly {
        while self.0.last() == Some(&0.0) {
            self.0.pop();
        }
        self
    }

    /// Exact division by a monic-leading divisor; the remainder must vanish.
    fn div_exact(&self, d: &Poly) -> Poly {
        let mut rem = self.clone().trim().0;
        let d = d.clone().trim().0;
        let lead = *d.last().expect("nonzero divisor");
        if rem.len() < d.len() {
            return Poly(vec![0.0]);
        }
        let mut quot = vec![0.0; rem.len() - d.len() + 1];
        for i in (0..quot.len()).rev() {
            let c = rem[i + d.len() - 1] / lead;
            quot[i] = c;
            for (j, dj) in d.iter().enumerate() {
                rem[i + j] -= c * dj;
            }
        }
        debug_assert!(rem.iter().all(|r| r.abs() < 1e-9), "non-exact division: {rem:?}");
        Poly(quot)
    }
}

/// Yablonskii–Vorob'ev polynomial `Q_n` from
/// `Q_{n+1} Q_{n−1} = z Q_n² − 4 [Q_n Q_n'' − (Q_n')²]`, `Q_0 = 1`, `Q_1 = z`.
pub fn yablonskii_vorobev(n: usize) -> Poly {
    let mut prev = Poly(vec![1.0]);
    let mut cur = Poly(vec![0.0, 1.0]);
    if n == 0 {
        return prev;
    }
    for _ in 1..n {
        let d1 = cur.derivative();
        let d2 = d1.derivative();
        let zq2 = Poly(vec![0.0, 1.0]).mul(&cur.mul(&cur));
        let bracket = cur.mul(&d2).sub(&d1.mul(&d1)).scale(4.0);
        let next = zq2.sub(&bracket).div_exact(&prev);
        prev = cur;
        cur = next;
    }
    cur
}

/// `q_n = d/dz ln(Q_{n−1}/Q_n)` and its derivative for `n ≥ 1`.
fn rational_member(n: usize, z: f64) -> Result<(f64, f64)> {
    let pairs = [yablonskii_vorobev(n - 1), yablonskii_vorobev(n)];
    let mut q = 0.0;
    let mut qp = 0.0;
    for (sign, poly) in [1.0, -1.0].into_iter().zip(&pairs) {
        let v = poly.eval(z);
        if v.abs() < POLE_GUARD {
            return Err(KkError::Pole { z });
        }
        let d1 = poly.derivative();
        let d2 = d1.derivative();
        let r = d1.eval(z) / v;
        q += sign * r;
        qp += sign * (d2.eval(z) / v - r * r);
    }
    Ok((q, qp))
}

fn rational_checked(delta: i32, z: f64) -> Result<(f64, f64)> {
    finite("z", z)?;
    if !(-2..=2).contains(&delta) {
        return Err(KkError::InvalidConfig(format!("rational solutions are tabulated for |delta| <= 2, got {delta}")));
    }
    if delta == 0 {
        return Ok((0.0, 0.0));
    }
    let (q, qp) = rational_member(delta.unsigned_abs() as usize, z)?;
    let sign = f64::from(delta.signum());
    Ok((sign * q, sign * qp))
}

/// Exact rational PII solution for integer `δ ∈ [−2, 2]`: `0`, `∓1/z`,
/// and `±(1/z − 3z²/(z³ + 4))`.
pub fn pii_exact_rational(delta: i32, z: f64) -> Result<f64> {
    rational_checked(delta, z).map(|(q, _)| q)
}

/// `dq/dz` of [`pii_exact_rational`].
pub fn pii_exact_rational_derivative(delta: i32, z: f64) -> Result<f64> {
    rational_checked(delta, z).map(|(_, qp)| qp)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReductionCheck {
    pub z: Vec<f64>,
    pub q: Vec<f64>,
    pub q_prime: Vec<f64>,
    pub residual: Vec<f64>,
}

impl ReductionCheck {
    pub fn max_residual(&self) -> f64 {
        self.residual.iter().fold(0.0, |m, &r| m.max(r))
    }
}

/// Transports a sampled solution `k(t)` of the first-order equation onto the
/// PII variables and measures the PII residual there. `t_grid` must be
/// uniform.
pub fn reduction_residual(problem: &PainleveProblem, t_grid: &[f64], k: &[f64]) -> Result<ReductionCheck> {
    if t_grid.len() != k.len() || t_grid.len() < 5 {
        return Err(KkError::InvalidConfig("need at least 5 matching (t, k) samples".into()));
    }
    let mut z = Vec::with_capacity(k.len());
    let mut q = Vec::with_capacity(k.len());
    let mut q_prime = Vec::with_capacity(k.len());
    for (&t, &kv) in t_grid.iter().zip(k) {
        let (zi, qi) = problem.to_pii(t, kv);
        z.push(zi);
        q.push(qi);
        q_prime.push(problem.dq_dz(problem.first_order_rhs(t, kv)));
    }
    // z is affine in t, so reversed grids (m < 0) are still uniform.
    let residual = pii_residual(&z, &q, &q_prime, problem.delta);
    Ok(ReductionCheck { z, q, q_prime, residual })
}
