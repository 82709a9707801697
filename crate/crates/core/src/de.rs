//! Density evolution on the erasure channel: fixed-point iteration, threshold
//! bisection, and the grid-discretised linear program used as a baseline for
//! the semidefinite design.

use serde::{Deserialize, Serialize};

use crate::ensemble::{DegreeDistribution, EnsembleSpec};
use crate::error::{Error, Result};
use crate::polynomial::check_node_transfer;
use crate::solver::{solve_lp_discretized, ConicProblem, LinearForm, Sense, SolveStatus, SolverOptions, VarKind};

/// Final erasure fraction below which decoding is considered successful.
pub const ZERO_CUTOFF: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeTrace {
    /// `x_0 = ε, x_1, …` up to and including the final value.
    pub values: Vec<f64>,
    pub converged: bool,
    pub final_value: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeOptions {
    pub max_iters: usize,
    /// Stop once `|x_{ℓ+1} - x_ℓ| < tol`.
    pub tol: f64,
}

impl Default for DeOptions {
    fn default() -> Self {
        DeOptions { max_iters: 10_000, tol: 1e-12 }
    }
}

/// Iterates `x_{ℓ+1} = ε λ(1 - ρ(1 - x_ℓ))` from `x_0 = ε`.
pub fn de_iterate(spec: &EnsembleSpec, opts: &DeOptions) -> DeTrace {
    let lam = spec.lambda.polynomial();
    let rho = spec.rho.polynomial();
    let eps = spec.epsilon;
    let mut x = eps;
    let mut values = vec![x];
    let mut iterations = 0;
    while iterations < opts.max_iters {
        let next = eps * lam.evaluate(1.0 - rho.evaluate(1.0 - x));
        iterations += 1;
        values.push(next);
        let done = (next - x).abs() < opts.tol;
        x = next;
        if done {
            break;
        }
    }
    DeTrace { values, converged: x < ZERO_CUTOFF, final_value: x, iterations }
}

/// The converged-to-zero predicate without recording the trace. Stops as soon
/// as `x` drops below the cutoff (the sequence is non-increasing, so it would
/// stay there) or stops moving.
fn de_converges(lambda: &DegreeDistribution, rho: &DegreeDistribution, eps: f64, budget: usize) -> bool {
    let lam = lambda.polynomial();
    let rho = rho.polynomial();
    let mut x = eps;
    for _ in 0..budget {
        if x < ZERO_CUTOFF {
            return true;
        }
        let next = eps * lam.evaluate(1.0 - rho.evaluate(1.0 - x));
        if next >= x {
            return false;
        }
        x = next;
    }
    x < ZERO_CUTOFF
}

/// Largest `ε` (to within `precision`) for which DE converges to zero.
///
/// Near a threshold set by the stability condition the iteration contracts
/// only linearly, at a rate `1 - O(ε* - ε)`, so each probe is given a budget of
/// `40 / precision` steps instead of the plain iteration's default.
pub fn bisect_threshold(lambda: &DegreeDistribution, rho: &DegreeDistribution, precision: f64) -> Result<f64> {
    lambda.validate()?;
    rho.validate()?;
    if !(precision > 0.0 && precision < 1.0) {
        return Err(Error::InvalidArgument(format!("precision must lie in (0, 1), got {precision}")));
    }
    let budget = (40.0 / precision).ceil() as usize;
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > precision {
        let mid = 0.5 * (lo + hi);
        if de_converges(lambda, rho, mid, budget) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    debug_assert!(
        lo <= rho.inverse_mean() / lambda.inverse_mean() + precision,
        "threshold {lo} exceeds the capacity bound"
    );
    Ok(lo)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    /// Number of grid points; `None` marks the semidefinite reference row.
    pub n: Option<usize>,
    pub status: SolveStatus,
    /// `λ_2 … λ_Dv`.
    pub lambda: Vec<f64>,
    pub objective: f64,
    pub rate: f64,
}

/// `(1 - ρ(1 - ε x))^{i-1}` for `i = 2..=max_var_degree`.
fn transfer_powers(rho: &DegreeDistribution, eps: f64, x: f64, max_var_degree: usize) -> Vec<f64> {
    let y = check_node_transfer(rho, eps).evaluate(x);
    (2..=max_var_degree).map(|i| y.powi(i as i32 - 1)).collect()
}

/// Linear program enforcing the DE inequality only at `x_k = k / n`:
///
/// ```text
/// max Σ λ_i / i  s.t.  Σ λ_i (1 - ρ(1 - ε x_k))^{i-1} ≤ x_k,  Σ λ_i = 1,  0 ≤ λ_i ≤ 1
/// ```
///
/// It is built in dual form, which has one row per `λ_i` instead of one per
/// grid point; the optimal `λ` are the row multipliers.
pub fn build_discretized_lp(rho: &DegreeDistribution, eps: f64, max_var_degree: usize, n: usize) -> Result<ConicProblem> {
    rho.validate()?;
    if !(eps.is_finite() && (0.0..1.0).contains(&eps)) {
        return Err(Error::InvalidEpsilon(eps, "[0, 1)"));
    }
    if max_var_degree < 2 {
        return Err(Error::InvalidArgument(format!("maximum variable degree {max_var_degree} is below 2")));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("grid size must be at least 1".into()));
    }
    let taps = max_var_degree - 1;
    let mut problem = ConicProblem::new(Sense::Minimize);
    let mut objective = LinearForm::new();
    let mut rows = vec![LinearForm::new(); taps];

    for k in 1..=n {
        let x = k as f64 / n as f64;
        let mu = problem.add_scalar(format!("mu_{k}"), VarKind::NonNegative);
        objective.add(mu, x);
        for (row, g) in rows.iter_mut().zip(transfer_powers(rho, eps, x, max_var_degree)) {
            row.add(mu, g);
        }
    }
    let nu = problem.add_scalar("nu", VarKind::Free);
    objective.add(nu, 1.0);
    for (t, row) in rows.iter_mut().enumerate() {
        let w = problem.add_scalar(format!("w_{}", t + 2), VarKind::NonNegative);
        let z = problem.add_scalar(format!("z_{}", t + 2), VarKind::NonNegative);
        objective.add(w, 1.0);
        row.add(nu, 1.0).add(w, 1.0).add(z, -1.0);
    }
    problem.set_objective(objective, 0.0);
    for (t, row) in rows.into_iter().enumerate() {
        problem.add_equality(row, 1.0 / (t + 2) as f64);
    }
    Ok(problem)
}

/// Solves [`build_discretized_lp`] for each grid size. Solver failures are
/// recorded in the row's status rather than aborting the sweep.
pub fn lp_baseline_sweep(
    rho: &DegreeDistribution,
    eps: f64,
    max_var_degree: usize,
    grid_sizes: &[usize],
    opts: &SolverOptions,
) -> Result<Vec<SweepRow>> {
    let mut out = Vec::with_capacity(grid_sizes.len());
    for &n in grid_sizes {
        let problem = build_discretized_lp(rho, eps, max_var_degree, n)?;
        let sol = solve_lp_discretized(&problem, opts)?;
        let row = if sol.is_optimal() {
            let lambda: Vec<f64> = sol.duals.clone();
            let objective = sol.objective;
            SweepRow { n: Some(n), status: sol.status, lambda, objective, rate: 1.0 - rho.inverse_mean() / objective }
        } else {
            SweepRow {
                n: Some(n),
                status: sol.status,
                lambda: vec![f64::NAN; max_var_degree - 1],
                objective: f64::NAN,
                rate: f64::NAN,
            }
        };
        out.push(row);
    }
    Ok(out)
}

/// Six significant digits, `inf`/`nan` spelled out.
pub fn format_sig6(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let exp = v.abs().log10().floor() as i32;
    if !(-4..6).contains(&exp) {
        return format!("{v:.5e}");
    }
    let decimals = (5 - exp).max(0) as usize;
    let s = format!("{v:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// CSV with header `N,rate,objective,lambda_2,…,lambda_Dv[,status]`. Rows with
/// `n = None` are written with `N = inf`. The status column is present only
/// when some row is not optimal.
pub fn sweep_csv(rows: &[SweepRow], max_var_degree: usize) -> String {
    let with_status = rows.iter().any(|r| r.status != SolveStatus::Optimal);
    let mut header = vec!["N".to_string(), "rate".into(), "objective".into()];
    header.extend((2..=max_var_degree).map(|i| format!("lambda_{i}")));
    if with_status {
        header.push("status".into());
    }
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        let mut cells = vec![r.n.map_or("inf".to_string(), |n| n.to_string()), format_sig6(r.rate), format_sig6(r.objective)];
        cells.extend(r.lambda.iter().map(|&v| format_sig6(v)));
        if with_status {
            let status = serde_json::to_value(r.status).ok().and_then(|v| v.as_str().map(str::to_string));
            cells.push(status.unwrap_or_default());
        }
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}
