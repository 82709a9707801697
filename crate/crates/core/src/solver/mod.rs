//! Dense primal-dual interior-point solver for conic programs with free,
//! nonnegative and boxed scalars plus one PSD block.

mod ipm;
mod problem;
mod standard;

use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};

pub use problem::{ConicProblem, ConicSolution, Equality, LinearForm, ScalarVar, Sense, SolveStatus, VarKind, VarRef};

use crate::error::{Error, Result};
use ipm::Outcome;
use standard::StandardForm;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Relative tolerance on primal residual, dual residual and duality gap.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-8, max_iters: 200 }
    }
}

pub fn solve(problem: &ConicProblem, opts: &SolverOptions) -> Result<ConicSolution> {
    solve_inner(problem, opts, None)
}

/// [`solve`] that writes one line per iteration (gap, residuals, step) to `trace`.
pub fn solve_traced(problem: &ConicProblem, opts: &SolverOptions, trace: &mut dyn Write) -> Result<ConicSolution> {
    solve_inner(problem, opts, Some(trace))
}

/// Linear programs: the same iteration restricted to the orthant.
pub fn solve_lp_discretized(problem: &ConicProblem, opts: &SolverOptions) -> Result<ConicSolution> {
    if problem.psd_dim != 0 {
        return Err(Error::InvalidProblem(format!(
            "linear program expected, found a PSD block of dimension {}",
            problem.psd_dim
        )));
    }
    solve_inner(problem, opts, None)
}

fn solve_inner(problem: &ConicProblem, opts: &SolverOptions, trace: Option<&mut dyn Write>) -> Result<ConicSolution> {
    problem.validate()?;
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {}", opts.tol)));
    }
    let Ok(sf) = StandardForm::from_problem(problem) else {
        return Ok(status_only(problem, SolveStatus::Infeasible, 0));
    };
    let result = ipm::run(&sf, opts, trace);
    let pt = &result.point;
    let status = match result.outcome {
        Outcome::Optimal => SolveStatus::Optimal,
        Outcome::PrimalInfeasible => return Ok(status_only(problem, SolveStatus::Infeasible, result.iterations)),
        Outcome::DualInfeasible => return Ok(status_only(problem, SolveStatus::Unbounded, result.iterations)),
        Outcome::Failed => SolveStatus::NumericalFailure,
    };

    let tau = pt.tau;
    let scalars = sf.user_scalars(&(&pt.x_free / tau), &(&pt.x_lin / tau));
    let psd = (problem.psd_dim > 0).then(|| {
        let mut b = &pt.x_psd / tau;
        let t = b.transpose();
        b = (b + t) * 0.5;
        b
    });
    let duals = sf.user_duals(&(&pt.y / tau), problem.sense);
    let internal_primal = (sf.c_free.dot(&pt.x_free) + sf.c_lin.dot(&pt.x_lin) + dot(&sf.c_psd, &pt.x_psd)) / tau;
    let internal_dual = sf.b.dot(&pt.y) / tau;
    let objective = sf.internal_to_user_objective(internal_primal, problem.sense, problem.objective_constant);
    let dual_objective = sf.internal_to_user_objective(internal_dual, problem.sense, problem.objective_constant);

    let psd_min_eigenvalue = psd
        .as_ref()
        .map_or(f64::INFINITY, |b| SymmetricEigen::new(b.clone()).eigenvalues.min());

    // Independent residual pass on the user's own rows.
    let mut max_residual = 0.0f64;
    let mut max_scaled_residual = 0.0f64;
    for eq in &problem.equalities {
        let r = (eq.form.evaluate(&scalars, psd.as_ref()) - eq.rhs).abs();
        max_residual = max_residual.max(r);
        let norm = eq.form.max_abs_coeff();
        if norm > 0.0 {
            max_scaled_residual = max_scaled_residual.max(r / norm);
        }
    }
    let box_violation = problem
        .scalars
        .iter()
        .zip(&scalars)
        .map(|(v, &x)| match v.kind {
            VarKind::Free => 0.0,
            VarKind::NonNegative => (-x).max(0.0),
            VarKind::Boxed { lo, hi } => (lo - x).max(x - hi).max(0.0),
        })
        .fold(0.0, f64::max);

    let b_scale = 1.0 + sf.b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let status = if status == SolveStatus::Optimal
        && (max_scaled_residual > 10.0 * opts.tol * b_scale
            || box_violation > 10.0 * opts.tol * b_scale
            || psd_min_eigenvalue < -1e-9)
    {
        SolveStatus::NumericalFailure
    } else {
        status
    };

    Ok(ConicSolution {
        status,
        scalars,
        psd,
        duals,
        objective,
        dual_objective,
        gap: (objective - dual_objective).abs(),
        max_residual,
        psd_min_eigenvalue,
        iterations: result.iterations,
    })
}

fn dot(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

fn status_only(problem: &ConicProblem, status: SolveStatus, iterations: usize) -> ConicSolution {
    // Conventional optimal values: +∞ for an infeasible minimisation, -∞ for an
    // unbounded one, mirrored for maximisation.
    let inf = match (status, problem.sense) {
        (SolveStatus::Infeasible, Sense::Minimize) | (SolveStatus::Unbounded, Sense::Maximize) => f64::INFINITY,
        _ => f64::NEG_INFINITY,
    };
    ConicSolution {
        status,
        scalars: vec![f64::NAN; problem.scalars.len()],
        psd: None,
        duals: vec![f64::NAN; problem.equalities.len()],
        objective: inf,
        dual_objective: inf,
        gap: f64::NAN,
        max_residual: f64::NAN,
        psd_min_eigenvalue: f64::NAN,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> SolverOptions {
        SolverOptions::default()
    }

    #[test]
    fn bounded_lp() {
        // maximize x s.t. x + s = 1, x, s ≥ 0
        let mut p = ConicProblem::new(Sense::Maximize);
        let x = p.add_scalar("x", VarKind::NonNegative);
        let s = p.add_scalar("s", VarKind::NonNegative);
        p.set_objective(LinearForm::new().with(x, 1.0), 0.0);
        p.add_equality(LinearForm::new().with(x, 1.0).with(s, 1.0), 1.0);
        let sol = solve(&p, &opts()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.value(x) - 1.0).abs() < 1e-7);
        assert!((sol.objective - 1.0).abs() < 1e-7);
        assert!(sol.objective <= sol.dual_objective + 1e-8 * (1.0 + sol.objective.abs()));
    }

    #[test]
    fn boxed_variable_without_rows() {
        let mut p = ConicProblem::new(Sense::Maximize);
        let x = p.add_scalar("x", VarKind::Boxed { lo: -2.0, hi: 3.0 });
        p.set_objective(LinearForm::new().with(x, 2.0), 1.0);
        let sol = solve(&p, &opts()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.value(x) - 3.0).abs() < 1e-7);
        assert!((sol.objective - 7.0).abs() < 1e-7);
    }

    #[test]
    fn free_variables() {
        // minimize x1 + 2 x2 with x1 free, x2 ≥ 0, x1 - x2 = -1, x1 + x2 ≥ 3 (slack)
        let mut p = ConicProblem::new(Sense::Minimize);
        let x1 = p.add_scalar("x1", VarKind::Free);
        let x2 = p.add_scalar("x2", VarKind::NonNegative);
        let s = p.add_scalar("s", VarKind::NonNegative);
        p.set_objective(LinearForm::new().with(x1, 1.0).with(x2, 2.0), 0.0);
        p.add_equality(LinearForm::new().with(x1, 1.0).with(x2, -1.0), -1.0);
        p.add_equality(LinearForm::new().with(x1, 1.0).with(x2, 1.0).with(s, -1.0), 3.0);
        let sol = solve(&p, &opts()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.value(x1) - 1.0).abs() < 1e-6);
        assert!((sol.value(x2) - 2.0).abs() < 1e-6);
        assert!((sol.objective - 5.0).abs() < 1e-6);
    }

    #[test]
    fn detects_infeasible_lp() {
        let mut p = ConicProblem::new(Sense::Minimize);
        let x = p.add_scalar("x", VarKind::NonNegative);
        p.set_objective(LinearForm::new().with(x, 1.0), 0.0);
        p.add_equality(LinearForm::new().with(x, 1.0), -1.0);
        let sol = solve(&p, &opts()).unwrap();
        assert_eq!(sol.status, SolveStatus::Infeasible);
    }

    #[test]
    fn detects_unbounded_lp() {
        let mut p = ConicProblem::new(Sense::Maximize);
        let x = p.add_scalar("x", VarKind::NonNegative);
        let y = p.add_scalar("y", VarKind::NonNegative);
        p.set_objective(LinearForm::new().with(x, 1.0), 0.0);
        p.add_equality(LinearForm::new().with(x, 1.0).with(y, -1.0), 0.0);
        let sol = solve(&p, &opts()).unwrap();
        assert_eq!(sol.status, SolveStatus::Unbounded);
    }

    #[test]
    fn empty_row_with_nonzero_rhs_is_infeasible() {
        let mut p = ConicProblem::new(Sense::Minimize);
        p.add_scalar("x", VarKind::NonNegative);
        p.add_equality(LinearForm::new(), 1.0);
        assert_eq!(solve(&p, &opts()).unwrap().status, SolveStatus::Infeasible);
    }

    #[test]
    fn small_sdp() {
        // minimize trace(B) s.t. B_01 = 1 over 2×2 PSD: optimum 2 at [[1,1],[1,1]].
        let mut p = ConicProblem::new(Sense::Minimize);
        p.set_psd_dim(2);
        p.set_objective(LinearForm::new().with(VarRef::Psd(0, 0), 1.0).with(VarRef::Psd(1, 1), 1.0), 0.0);
        p.add_equality(LinearForm::new().with(VarRef::Psd(1, 0), 1.0), 1.0);
        let sol = solve(&p, &opts()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.objective - 2.0).abs() < 1e-7);
        let b = sol.psd.as_ref().unwrap();
        assert!((b[(0, 0)] - 1.0).abs() < 1e-6);
        assert!(sol.psd_min_eigenvalue > -1e-9);
    }

    #[test]
    fn infeasible_sdp() {
        // B_00 = -1 cannot hold for PSD B.
        let mut p = ConicProblem::new(Sense::Minimize);
        p.set_psd_dim(2);
        p.add_equality(LinearForm::new().with(VarRef::Psd(0, 0), 1.0), -1.0);
        let sol = solve(&p, &opts()).unwrap();
        assert_eq!(sol.status, SolveStatus::Infeasible);
    }

    #[test]
    fn rejects_malformed_problems() {
        let mut p = ConicProblem::new(Sense::Minimize);
        p.add_equality(LinearForm::new().with(VarRef::Scalar(3), 1.0), 0.0);
        assert!(matches!(solve(&p, &opts()), Err(Error::InvalidProblem(_))));

        let mut p = ConicProblem::new(Sense::Minimize);
        p.set_psd_dim(1);
        p.add_equality(LinearForm::new().with(VarRef::Psd(0, 1), 1.0), 0.0);
        assert!(solve(&p, &opts()).is_err());

        let mut p = ConicProblem::new(Sense::Minimize);
        p.add_scalar("x", VarKind::Boxed { lo: 1.0, hi: 0.0 });
        assert!(solve(&p, &opts()).is_err());

        let mut p = ConicProblem::new(Sense::Minimize);
        p.set_psd_dim(1);
        assert!(solve_lp_discretized(&p, &opts()).is_err());
    }

    #[test]
    fn trace_has_one_line_per_iteration() {
        let mut p = ConicProblem::new(Sense::Maximize);
        let x = p.add_scalar("x", VarKind::Boxed { lo: 0.0, hi: 1.0 });
        p.set_objective(LinearForm::new().with(x, 1.0), 0.0);
        let mut buf = Vec::new();
        let sol = solve_traced(&p, &opts(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), sol.iterations + 1);
        assert!(text.lines().next().unwrap().contains("gap"));
    }
}
