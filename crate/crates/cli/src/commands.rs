use anyhow::Result;
use kklab_core::painleve::{
    pii_exact_rational, pii_exact_rational_derivative, reduce_to_pii, reduction_residual, solve_pii, PainleveProblem,
    Termination, RESIDUAL_TOL,
};
use kklab_core::riccati::{riccati_trajectory, rk4_path, RiccatiModel};
use kklab_core::soliton::{audit_momentum_derivation, sech_moment, soliton_profile, MomentumAudit, SolitonParams};
use kklab_core::spectral::snapshot::{encode, write_csv_frame};
use kklab_core::spectral::{kk_rhs, run_pde, AlphaSource, Grid, PdeConfig, PdeState, RunOptions};
use kklab_core::stochastic::{
    ensemble_moments, linearized_moment_formula, paper_moment_formula, sample_path, time_grid, Convention,
    EnsembleStats, NoiseModel,
};
use serde::Serialize;

use crate::config::{AuditConfig, EnsembleConfig, Format, OdeConfig, PdeConfigFile, PiiConfig, SolitonConfig};
use crate::output::{OutDir, Table};

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    let h = (b - a) / (n - 1) as f64;
    (0..n).map(|i| if i == n - 1 { b } else { a + i as f64 * h }).collect()
}

pub fn soliton(c: &SolitonConfig, out: &mut OutDir, format: Format) -> Result<()> {
    let params = SolitonParams::new(c.k)?;
    let xs = linspace(c.x_min, c.x_max, c.nx);
    let mut surface = Table::new(&["t", "x", "u"]);
    for &t in &linspace(c.t_min, c.t_max, c.nt) {
        for &x in &xs {
            surface.push(vec![t, x, soliton_profile(&params, x, t)?]);
        }
    }
    out.table("soliton_surface", &surface, format)?;
    let mut slice = Table::new(&["t", "x", "u"]);
    for &x in &xs {
        slice.push(vec![c.slice_t, x, soliton_profile(&params, x, c.slice_t)?]);
    }
    out.table("soliton_slice", &slice, format)
}

#[derive(Serialize)]
struct SechMoment {
    n: u32,
    quadrature: f64,
    closed_form: f64,
}

#[derive(Serialize)]
struct AuditReport {
    audit: MomentumAudit,
    sech_moments: Vec<SechMoment>,
}

pub fn audit(c: &AuditConfig, out: &mut OutDir, format: Format) -> Result<()> {
    let params = SolitonParams::new(c.k)?;
    let audit = audit_momentum_derivation(&params, c.alpha, c.beta)?;
    let mut table = Table::new(&["n", "quadrature", "closed_form"]);
    let mut sech_moments = Vec::new();
    for (n, closed_form) in [(2, 2.0), (4, 4.0 / 3.0), (6, 16.0 / 15.0), (8, 32.0 / 35.0)] {
        let quadrature = sech_moment(n)?;
        table.push(vec![f64::from(n), quadrature, closed_form]);
        sech_moments.push(SechMoment { n, quadrature, closed_form });
    }
    out.table("sech_moments", &table, format)?;
    out.json("momentum_audit.json", &AuditReport { audit, sech_moments })
}

pub fn ode(c: &OdeConfig, out: &mut OutDir, format: Format) -> Result<()> {
    let model = RiccatiModel::constant(c.alpha, c.beta, c.k0)?;
    let grid = linspace(0.0, c.t_max, c.samples + 1);
    let rows = riccati_trajectory(&model, &grid, c.rk4_steps)?;
    let mut table = Table::new(&["t", "k_numeric", "k_closed", "k_perturbative"]);
    for r in rows {
        table.push(vec![r.t, r.k_numeric, r.k_closed, r.k_perturbative]);
    }
    out.table("ode_trajectory", &table, format)
}

fn output_grid(c: &EnsembleConfig) -> Vec<f64> {
    let per = (c.output_dt / c.dt).round() as usize;
    let n_out = (c.t_max / c.output_dt).round() as usize;
    // Exact multiples of dt, so the ensemble maps them to whole steps.
    (0..=n_out).map(|i| (i * per) as f64 * c.dt).collect()
}

fn run_ensemble(c: &EnsembleConfig, sigma2: f64, beta: f64, grid: &[f64]) -> Result<EnsembleStats> {
    let noise = NoiseModel::new(c.alpha0, sigma2, c.convention, c.seed, c.dt)?;
    Ok(ensemble_moments(&noise, beta, c.k0, grid, c.n_paths)?)
}

pub fn ensemble(c: &EnsembleConfig, out: &mut OutDir, format: Format) -> Result<()> {
    let grid = output_grid(c);
    let mut fig3 = Table::new(&["sigma2", "t", "mean_k2", "se_k2", "paper_formula", "paper_flagged"]);
    let mut fig4 = Table::new(&["sigma2", "t", "mean_k2", "se_k2", "exact"]);
    let mut fig5 = Table::new(&["sigma2", "t", "mean_k2", "se_k2", "paper_formula", "linearized_formula"]);
    let rate = match c.convention {
        Convention::Ito => 2.0,
        Convention::Stratonovich => 4.0,
    };
    for &sigma2 in &c.sigma2 {
        let stats = run_ensemble(c, sigma2, c.beta, &grid)?;
        let mut table = Table::new(&[
            "t",
            "mean_k",
            "mean_k2",
            "se_k",
            "se_k2",
            "paper_formula",
            "linearized_formula",
            "survived",
        ]);
        for (i, &t) in grid.iter().enumerate() {
            let paper = paper_moment_formula(sigma2, c.beta, c.k0, t)?;
            let flagged = f64::from(u8::from(paper.flagged));
            let paper = paper.value;
            let linear = linearized_moment_formula(sigma2, c.beta, c.k0, t)?;
            table.push(vec![
                t,
                stats.mean_k[i],
                stats.mean_k2[i],
                stats.se_k[i],
                stats.se_k2[i],
                paper,
                linear.value,
                stats.survived[i] as f64,
            ]);
            fig3.push(vec![sigma2, t, stats.mean_k2[i], stats.se_k2[i], paper, flagged]);
            if !linear.flagged {
                fig5.push(vec![sigma2, t, stats.mean_k2[i], stats.se_k2[i], paper, linear.value]);
            }
        }
        out.table(&format!("ensemble_sigma2_{sigma2}"), &table, format)?;

        let free = run_ensemble(c, sigma2, 0.0, &grid)?;
        for (i, &t) in grid.iter().enumerate() {
            let exact = c.k0 * c.k0 * ((2.0 * c.alpha0 + rate * sigma2) * t).exp();
            fig4.push(vec![sigma2, t, free.mean_k2[i], free.se_k2[i], exact]);
        }
    }
    out.table("figure3", &fig3, format)?;
    out.table("figure4", &fig4, format)?;
    out.table("figure5", &fig5, format)
}

#[derive(Serialize)]
struct AnsatzResidual {
    /// `max |V u_x − u_t|` at `t = 0`, with `u_t` from the full tendency.
    max_abs: f64,
    l2: f64,
    /// `l2` relative to `‖V u_x‖`.
    relative_l2: f64,
}

#[derive(Serialize)]
struct PdeReport {
    steps: usize,
    final_t: f64,
    ansatz_residual: AnsatzResidual,
    momentum_initial: f64,
    momentum_final: f64,
    momentum_drift_relative: f64,
    mass_drift_relative: f64,
    max_abs_balance_residual: f64,
    max_relative_balance_residual: f64,
    max_imag_residue: f64,
}

fn ansatz_residual(grid: &Grid, params: &SolitonParams, state: &PdeState, dealias: bool) -> Result<AnsatzResidual> {
    // A travelling profile u(x + Vt) has u_t = V u_x.
    let ut = kk_rhs(&state.u, grid, 0.0, 0.0, dealias)?;
    let ux = grid.derivative(&state.u, 1);
    let v = params.velocity();
    let r: Vec<f64> = ux.iter().zip(&ut).map(|(d, t)| v * d - t).collect();
    let l2 = grid.integrate(&r.iter().map(|x| x * x).collect::<Vec<_>>()).sqrt();
    let norm = grid.integrate(&ux.iter().map(|d| (v * d).powi(2)).collect::<Vec<_>>()).sqrt();
    Ok(AnsatzResidual {
        max_abs: r.iter().fold(0.0, |m, x| m.max(x.abs())),
        l2,
        relative_l2: if norm > 0.0 { l2 / norm } else { f64::NAN },
    })
}

pub fn pde(c: &PdeConfigFile, out: &mut OutDir, format: Format) -> Result<()> {
    let grid = Grid::new(c.length, c.n)?;
    let params = SolitonParams::new(c.k)?;
    let initial = PdeState::from_fn(0.0, &grid, |x| soliton_profile(&params, x, 0.0).unwrap_or(f64::NAN))?;
    let steps = ((c.t_end / c.dt).round() as usize).max(1);
    let alpha = if c.sigma2 > 0.0 {
        let noise = NoiseModel::new(c.alpha, c.sigma2, Convention::Ito, c.seed, c.dt)?;
        let incr = sample_path(&noise, 0, &time_grid(c.dt, steps as f64 * c.dt))?;
        AlphaSource::from_increments(&incr, c.dt)
    } else {
        AlphaSource::Constant(c.alpha)
    };
    let config = PdeConfig { alpha, beta: c.beta, dt: c.dt, scheme: c.scheme, dealias: c.dealias, nonlinear: true };
    let opts = RunOptions { sample_every: c.sample_every, snapshot_every: c.snapshot_every };
    let residual = ansatz_residual(&grid, &params, &initial, c.dealias)?;
    let tr = run_pde(&initial, &config, &grid, steps as f64 * c.dt, opts)?;

    let mut diag = Table::new(&["t", "P", "grad2", "cubic_flux", "mass", "balance_residual"]);
    let mut max_abs: f64 = 0.0;
    let mut max_rel: f64 = 0.0;
    let mut max_imag: f64 = 0.0;
    for s in &tr.samples {
        let d = &s.diagnostics;
        diag.push(vec![s.t, d.momentum, d.grad2, d.cubic_flux, d.mass, s.balance_residual]);
        max_abs = max_abs.max(s.balance_residual.abs());
        if d.momentum > 0.0 {
            max_rel = max_rel.max(s.balance_residual.abs() / d.momentum);
        }
        max_imag = max_imag.max(d.imag_residue);
    }
    out.table("pde_diagnostics", &diag, format)?;

    if !tr.snapshots.is_empty() {
        let mut csv = String::from("t,x,u\n");
        for (i, snap) in tr.snapshots.iter().enumerate() {
            write_csv_frame(&mut csv, &grid, snap.t, &snap.u);
            out.write(&format!("snapshot_{i:05}.kksnap"), encode(grid.length(), snap.t, &snap.u))?;
        }
        out.write("pde_snapshots.csv", csv)?;
    }
    let last = &tr.final_state;
    out.write("final.kksnap", encode(grid.length(), last.t, &last.u))?;

    let p0 = initial.diagnostics.momentum;
    let m0 = initial.diagnostics.mass;
    let rel = |a: f64, b: f64| if b != 0.0 { (a - b).abs() / b.abs() } else { (a - b).abs() };
    out.json(
        "pde_report.json",
        &PdeReport {
            steps,
            final_t: last.t,
            ansatz_residual: residual,
            momentum_initial: p0,
            momentum_final: last.diagnostics.momentum,
            momentum_drift_relative: rel(last.diagnostics.momentum, p0),
            mass_drift_relative: rel(last.diagnostics.mass, m0),
            max_abs_balance_residual: max_abs,
            max_relative_balance_residual: max_rel,
            max_imag_residue: max_imag,
        },
    )
}

#[derive(Serialize)]
struct ReductionReport {
    problem: PainleveProblem,
    k0: f64,
    points: usize,
    max_residual: f64,
}

#[derive(Serialize)]
struct PiiReport {
    delta: f64,
    q0: f64,
    q0_prime: f64,
    points: usize,
    termination: Termination,
    pole_terminated: bool,
    max_residual: f64,
    residual_tol: f64,
    accepted: bool,
    /// Max deviation from the rational solution, for integer `δ`.
    max_error_vs_rational: Option<f64>,
    reduction: ReductionReport,
}

fn integer_delta(delta: f64) -> Option<i32> {
    (delta.fract() == 0.0 && delta.abs() <= 2.0).then_some(delta as i32)
}

pub fn pii(c: &PiiConfig, out: &mut OutDir, format: Format) -> Result<()> {
    let rational = integer_delta(c.delta);
    let q0 = match (c.q0, rational) {
        (Some(q), _) => q,
        (None, Some(d)) => pii_exact_rational(d, c.z_start)?,
        (None, None) => unreachable!("validated config"),
    };
    let q0_prime = match (c.q0_prime, rational) {
        (Some(p), _) => p,
        (None, Some(d)) => pii_exact_rational_derivative(d, c.z_start)?,
        (None, None) => unreachable!("validated config"),
    };
    let sol = solve_pii(c.delta, q0, q0_prime, c.z_start, c.z_end, c.steps)?;
    let mut table = Table::new(&["z", "q", "q_prime", "residual"]);
    for i in 0..sol.z.len() {
        table.push(vec![sol.z[i], sol.q[i], sol.q_prime[i], sol.residual[i]]);
    }
    out.table("pii_solution", &table, format)?;

    let max_error_vs_rational = match (rational, c.q0.is_none() && c.q0_prime.is_none()) {
        (Some(d), true) => Some(
            sol.z
                .iter()
                .zip(&sol.q)
                .map(|(&z, &q)| pii_exact_rational(d, z).map(|e| (e - q).abs()).unwrap_or(f64::INFINITY))
                .fold(0.0, f64::max),
        ),
        _ => None,
    };

    let r = &c.reduction;
    let problem = reduce_to_pii(r.n, r.m, r.lambda)?;
    let t = linspace(0.0, r.t_end, r.steps + 1);
    let k = rk4_path(|t, k| problem.first_order_rhs(t, k), r.k0, &t, r.steps)?;
    let check = reduction_residual(&problem, &t, &k)?;

    out.json(
        "pii_report.json",
        &PiiReport {
            delta: c.delta,
            q0,
            q0_prime,
            points: sol.z.len(),
            termination: sol.termination,
            pole_terminated: matches!(sol.termination, Termination::Pole { .. }),
            max_residual: sol.max_residual(),
            residual_tol: RESIDUAL_TOL,
            accepted: sol.accepted(),
            max_error_vs_rational,
            reduction: ReductionReport { problem, k0: r.k0, points: t.len(), max_residual: check.max_residual() },
        },
    )
}
