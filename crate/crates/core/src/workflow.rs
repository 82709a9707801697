//! End-to-end commands behind the command-line tool. Each returns a
//! [`RunReport`]; the binary only parses arguments and prints.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::de::{bisect_threshold, de_iterate, lp_baseline_sweep, sweep_csv, DeOptions, SweepRow};
use crate::ensemble::{
    capacity_gap, check_de_feasible, stability_lambda2_bound, CheckMode, DegreeDistribution, EnsembleSpec,
    FeasibilityReport,
};
use crate::error::{Error, Result};
use crate::solver::{SolveStatus, SolverOptions};
use crate::sos::{
    build_nlp1, build_nlp2, build_nlp3, solve_certified, CertifiedSolution, SosProgram, MIN_CERTIFICATE_TOL,
};

/// Precision of the bisection threshold reported by `threshold` and `verify`.
pub const BISECTION_PRECISION: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportStatus {
    /// Optimiser converged, the certificate verified and DE agrees.
    Optimal,
    /// A given ensemble passes the DE check.
    Feasible,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

impl ReportStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            ReportStatus::Optimal | ReportStatus::Feasible => 0,
            ReportStatus::Infeasible | ReportStatus::Unbounded => 2,
            ReportStatus::NumericalFailure => 3,
        }
    }
}

impl From<SolveStatus> for ReportStatus {
    fn from(s: SolveStatus) -> Self {
        match s {
            SolveStatus::Optimal => ReportStatus::Optimal,
            SolveStatus::Infeasible => ReportStatus::Infeasible,
            SolveStatus::Unbounded => ReportStatus::Unbounded,
            SolveStatus::NumericalFailure => ReportStatus::NumericalFailure,
        }
    }
}

/// Wall-clock seconds. Always compares equal, so reports from identical
/// inputs compare equal.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Elapsed(pub f64);

impl PartialEq for Elapsed {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

/// The command's inputs, echoed back.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InputEcho {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<DegreeDistribution>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<DegreeDistribution>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_degree: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<ThresholdMethod>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_sizes: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSummary {
    pub status: SolveStatus,
    pub iterations: usize,
    pub objective: f64,
    pub duality_gap: f64,
    pub max_residual: f64,
    /// Tolerance of the solve whose result is reported.
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateSummary {
    pub valid: bool,
    pub psd_ok: bool,
    pub reconstruction_ok: bool,
    pub min_eig: f64,
    pub max_residual: f64,
    pub gram_dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeSummary {
    pub grid: FeasibilityReport,
    pub minimum: FeasibilityReport,
    /// Plain DE iteration from `x_0 = ε`.
    pub iteration_converged: bool,
    pub iteration_final_value: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilitySummary {
    pub lambda2: f64,
    pub bound: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSummary {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sdp: Option<f64>,
    /// `1 / t` for the `t` the certificate actually proves (at most `sdp`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sdp_certified: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bisect: Option<f64>,
    /// `bisect - ε` when checking a given ensemble.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub input: InputEcho,
    pub status: ReportStatus,
    #[serde(default)]
    pub degenerate_epsilon: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<EnsembleSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub de: Option<DeSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stability: Option<StabilitySummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<ThresholdSummary>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub duration_seconds: Elapsed,
}

impl RunReport {
    fn new(command: &str, input: InputEcho) -> Self {
        RunReport {
            command: command.to_string(),
            input,
            status: ReportStatus::NumericalFailure,
            degenerate_epsilon: false,
            ensemble: None,
            rate: None,
            capacity: None,
            gap: None,
            solver: None,
            certificate: None,
            de: None,
            stability: None,
            threshold: None,
            notes: Vec::new(),
            duration_seconds: Elapsed::default(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.status.exit_code()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }

    /// Header plus one row: the scalar results and the ensemble's taps.
    pub fn to_csv(&self) -> String {
        let status = serde_json::to_value(self.status).ok().and_then(|v| v.as_str().map(str::to_string));
        let opt = |v: Option<f64>| v.map_or(String::new(), crate::de::format_sig6);
        let th = self.threshold.as_ref();
        let mut header: Vec<String> =
            ["command", "status", "epsilon", "rate", "capacity", "gap", "threshold_sdp", "threshold_bisect"]
                .iter()
                .map(|s| s.to_string())
                .collect();
        let mut row = vec![
            self.command.clone(),
            status.unwrap_or_default(),
            opt(self.ensemble.as_ref().map(|e| e.epsilon)),
            opt(self.rate),
            opt(self.capacity),
            opt(self.gap),
            opt(th.and_then(|t| t.sdp)),
            opt(th.and_then(|t| t.bisect)),
        ];
        if let Some(e) = &self.ensemble {
            for (i, v) in e.lambda.iter() {
                header.push(format!("lambda_{i}"));
                row.push(crate::de::format_sig6(v));
            }
            for (j, v) in e.rho.iter() {
                header.push(format!("rho_{j}"));
                row.push(crate::de::format_sig6(v));
            }
        }
        format!("{}\n{}\n", header.join(","), row.join(","))
    }

    /// Rate, capacity, gap and DE summary for a finished ensemble.
    fn describe(&mut self, spec: EnsembleSpec) {
        let rate = spec.design_rate();
        self.rate = Some(rate);
        self.capacity = Some(1.0 - spec.epsilon);
        self.gap = capacity_gap(rate, spec.epsilon).ok();
        self.stability = stability_lambda2_bound(&spec.rho, spec.epsilon).ok().map(|bound| {
            let lambda2 = spec.lambda.get(2);
            StabilitySummary { lambda2, bound, satisfied: lambda2 <= bound + 1e-9 }
        });
        self.de = Some(de_summary(&spec));
        self.ensemble = Some(spec);
    }
}

fn de_summary(spec: &EnsembleSpec) -> DeSummary {
    let trace = de_iterate(spec, &DeOptions::default());
    DeSummary {
        grid: check_de_feasible(spec, CheckMode::Grid),
        minimum: check_de_feasible(spec, CheckMode::Minimum),
        iteration_converged: trace.converged,
        iteration_final_value: trace.final_value,
        iterations: trace.iterations,
    }
}

fn solver_summary(c: &CertifiedSolution) -> SolverSummary {
    SolverSummary {
        status: c.solution.status,
        iterations: c.solution.iterations,
        objective: c.solution.objective,
        duality_gap: c.solution.gap,
        max_residual: c.solution.max_residual,
        tol: c.tol,
    }
}

fn certificate_summary(prog: &SosProgram, c: &CertifiedSolution) -> Option<CertificateSummary> {
    let cert = c.certified.as_ref()?;
    Some(CertificateSummary {
        valid: cert.report.is_valid(),
        psd_ok: cert.report.psd_ok,
        reconstruction_ok: cert.report.reconstruction_ok,
        min_eig: cert.report.min_eig,
        max_residual: cert.report.max_residual,
        gram_dim: prog.psd_dim(),
    })
}

fn solver_options(tol: f64) -> Result<SolverOptions> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tol must be a positive number, got {tol}")));
    }
    Ok(SolverOptions { tol, ..SolverOptions::default() })
}

/// Downgrades an optimal solve that lacks a valid certificate or passing DE
/// checks.
fn settle_optimal(report: &mut RunReport) {
    if report.status != ReportStatus::Optimal {
        return;
    }
    if !report.certificate.as_ref().is_some_and(|c| c.valid) {
        report.status = ReportStatus::NumericalFailure;
        report.notes.push("solver converged but the Gram certificate did not verify".into());
    } else if !report.de.as_ref().is_some_and(|d| d.grid.feasible && d.minimum.feasible) {
        report.status = ReportStatus::NumericalFailure;
        report.notes.push("solver converged but the recovered ensemble fails the DE check".into());
    }
}

/// Grid and local-minimum DE checks, the pair `verify` applies.
fn de_feasible(spec: &EnsembleSpec) -> bool {
    check_de_feasible(spec, CheckMode::Grid).feasible && check_de_feasible(spec, CheckMode::Minimum).feasible
}

/// Solves a design program and builds the ensemble from its solution.
///
/// A certificate allows `P` to dip below zero by an amount that shrinks with
/// the tolerance, so a certified design failing the DE checks (typically
/// at an interior tangency) is re-solved at a tenth of the tolerance, down to
/// [`MIN_CERTIFICATE_TOL`].
fn solve_design(
    prog: &SosProgram,
    opts: &SolverOptions,
    make_spec: impl Fn(DegreeDistribution) -> Result<EnsembleSpec>,
) -> Result<(CertifiedSolution, Option<EnsembleSpec>)> {
    let mut opts = *opts;
    loop {
        let c = solve_certified(prog, &opts)?;
        let spec = if c.solution.is_optimal() { Some(make_spec(prog.distribution(&c.solution)?)?) } else { None };
        let consistent = match &spec {
            Some(spec) if c.is_certified() => de_feasible(spec),
            _ => true,
        };
        if consistent || c.tol / 10.0 < MIN_CERTIFICATE_TOL {
            return Ok((c, spec));
        }
        opts.tol = c.tol / 10.0;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeLambdaArgs {
    pub rho: DegreeDistribution,
    pub epsilon: f64,
    pub max_var_degree: usize,
    pub tol: f64,
}

/// Maximum-rate `λ` for fixed `ρ` and `ε`.
pub fn cmd_optimize_lambda(args: &OptimizeLambdaArgs) -> Result<RunReport> {
    let start = Instant::now();
    let opts = solver_options(args.tol)?;
    let prog = build_nlp1(&args.rho, args.epsilon, args.max_var_degree)?;
    let mut report = RunReport::new(
        "optimize-lambda",
        InputEcho {
            rho: Some(args.rho.clone()),
            epsilon: Some(args.epsilon),
            max_degree: Some(args.max_var_degree),
            tol: Some(args.tol),
            ..InputEcho::default()
        },
    );
    report.degenerate_epsilon = prog.degenerate_epsilon;
    if prog.degenerate_epsilon {
        report.notes.push("epsilon = 0: every distribution is decodable, the optimum is trivial".into());
    }
    let (c, spec) = solve_design(&prog, &opts, |lambda| EnsembleSpec::new(lambda, args.rho.clone(), args.epsilon))?;
    report.status = c.solution.status.into();
    report.solver = Some(solver_summary(&c));
    report.certificate = certificate_summary(&prog, &c);
    if let Some(spec) = spec {
        report.describe(spec);
    }
    settle_optimal(&mut report);
    report.duration_seconds = Elapsed(start.elapsed().as_secs_f64());
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeRhoArgs {
    pub lambda: DegreeDistribution,
    pub epsilon: f64,
    pub max_check_degree: usize,
    pub tol: f64,
}

/// Maximum-rate `ρ` for fixed `λ` and `ε`.
pub fn cmd_optimize_rho(args: &OptimizeRhoArgs) -> Result<RunReport> {
    let start = Instant::now();
    let opts = solver_options(args.tol)?;
    let prog = build_nlp2(&args.lambda, args.epsilon, args.max_check_degree)?;
    let mut report = RunReport::new(
        "optimize-rho",
        InputEcho {
            lambda: Some(args.lambda.clone()),
            epsilon: Some(args.epsilon),
            max_degree: Some(args.max_check_degree),
            tol: Some(args.tol),
            ..InputEcho::default()
        },
    );
    report.degenerate_epsilon = prog.degenerate_epsilon;
    if prog.degenerate_epsilon {
        report.notes.push("epsilon = 0: every distribution is decodable, the optimum is trivial".into());
    }
    let (c, spec) = solve_design(&prog, &opts, |rho| EnsembleSpec::new(args.lambda.clone(), rho, args.epsilon))?;
    report.status = c.solution.status.into();
    report.solver = Some(solver_summary(&c));
    report.certificate = certificate_summary(&prog, &c);
    if let Some(spec) = spec {
        report.describe(spec);
    }
    settle_optimal(&mut report);
    report.duration_seconds = Elapsed(start.elapsed().as_secs_f64());
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdMethod {
    Sdp,
    Bisect,
    Both,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdArgs {
    pub lambda: DegreeDistribution,
    pub rho: DegreeDistribution,
    pub method: ThresholdMethod,
    pub tol: f64,
}

/// Decoding threshold `ε*` by semidefinite programming, bisection or both.
/// The reported ensemble sits at the smallest threshold found.
pub fn cmd_threshold(args: &ThresholdArgs) -> Result<RunReport> {
    let start = Instant::now();
    let opts = solver_options(args.tol)?;
    let mut report = RunReport::new(
        "threshold",
        InputEcho {
            lambda: Some(args.lambda.clone()),
            rho: Some(args.rho.clone()),
            method: Some(args.method),
            tol: Some(args.tol),
            ..InputEcho::default()
        },
    );
    let mut summary = ThresholdSummary { sdp: None, sdp_certified: None, bisect: None, margin: None };
    let mut status = ReportStatus::Feasible;

    if matches!(args.method, ThresholdMethod::Sdp | ThresholdMethod::Both) {
        let prog = build_nlp3(&args.lambda, &args.rho)?;
        let c = solve_certified(&prog, &opts)?;
        status = c.solution.status.into();
        report.solver = Some(solver_summary(&c));
        if c.solution.is_optimal() {
            report.certificate = certificate_summary(&prog, &c);
            summary.sdp = Some(1.0 / c.solution.objective);
            summary.sdp_certified = c.certified.as_ref().map(|cert| 1.0 / cert.values[0]);
        }
    }
    if matches!(args.method, ThresholdMethod::Bisect | ThresholdMethod::Both) {
        summary.bisect = Some(bisect_threshold(&args.lambda, &args.rho, BISECTION_PRECISION)?);
    }

    let eps = [summary.sdp_certified, summary.bisect].into_iter().flatten().fold(f64::INFINITY, f64::min);
    if eps.is_finite() {
        report.describe(EnsembleSpec::new(args.lambda.clone(), args.rho.clone(), eps.min(1.0))?);
    }
    report.threshold = Some(summary);
    report.status = status;
    if report.status == ReportStatus::Optimal {
        settle_optimal(&mut report);
    }
    report.duration_seconds = Elapsed(start.elapsed().as_secs_f64());
    Ok(report)
}

/// DE feasibility, rate, stability and threshold margin of a given ensemble.
pub fn cmd_verify(spec: &EnsembleSpec) -> Result<RunReport> {
    let start = Instant::now();
    let mut report = RunReport::new(
        "verify",
        InputEcho {
            lambda: Some(spec.lambda.clone()),
            rho: Some(spec.rho.clone()),
            epsilon: Some(spec.epsilon),
            ..InputEcho::default()
        },
    );
    report.degenerate_epsilon = spec.epsilon == 0.0;
    report.describe(spec.clone());
    let bisect = bisect_threshold(&spec.lambda, &spec.rho, BISECTION_PRECISION)?;
    report.threshold = Some(ThresholdSummary {
        sdp: None,
        sdp_certified: None,
        bisect: Some(bisect),
        margin: Some(bisect - spec.epsilon),
    });
    let de = report.de.as_ref().expect("describe fills the DE summary");
    report.status = if de.grid.feasible && de.minimum.feasible {
        ReportStatus::Feasible
    } else {
        ReportStatus::Infeasible
    };
    report.duration_seconds = Elapsed(start.elapsed().as_secs_f64());
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepArgs {
    pub rho: DegreeDistribution,
    pub epsilon: f64,
    pub max_var_degree: usize,
    pub grid_sizes: Vec<usize>,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    /// One row per grid size, then the semidefinite reference row.
    pub rows: Vec<SweepRow>,
    pub csv: String,
    /// 0 when at least one row succeeded, 3 otherwise.
    pub exit_code: i32,
}

/// Discretised-LP rows for each grid size plus the semidefinite reference.
pub fn cmd_sweep(args: &SweepArgs) -> Result<SweepOutput> {
    let opts = solver_options(args.tol)?;
    let mut rows = lp_baseline_sweep(&args.rho, args.epsilon, args.max_var_degree, &args.grid_sizes, &opts)?;

    let prog = build_nlp1(&args.rho, args.epsilon, args.max_var_degree)?;
    let c = solve_certified(&prog, &opts)?;
    let reference = if c.is_certified() {
        let lambda: Vec<f64> = prog.decision_values(&c.solution);
        let objective = c.solution.objective;
        SweepRow { n: None, status: SolveStatus::Optimal, lambda, objective, rate: 1.0 - args.rho.inverse_mean() / objective }
    } else {
        let status = match c.solution.status {
            SolveStatus::Optimal => SolveStatus::NumericalFailure,
            other => other,
        };
        let nan = f64::NAN;
        SweepRow { n: None, status, lambda: vec![nan; args.max_var_degree - 1], objective: nan, rate: nan }
    };
    rows.push(reference);
    let csv = sweep_csv(&rows, args.max_var_degree);
    let exit_code = if rows.iter().any(|r| r.status == SolveStatus::Optimal) { 0 } else { 3 };
    Ok(SweepOutput { rows, csv, exit_code })
}

/// Optional ensemble fields, as read from a `--spec` file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialSpec {
    #[serde(default)]
    pub lambda: Option<DegreeDistribution>,
    #[serde(default)]
    pub rho: Option<DegreeDistribution>,
    #[serde(default)]
    pub epsilon: Option<f64>,
}

impl PartialSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidArgument(format!("spec file: {e}")))
    }

    /// Fields present in `other` take precedence.
    pub fn overlay(self, other: PartialSpec) -> PartialSpec {
        PartialSpec {
            lambda: other.lambda.or(self.lambda),
            rho: other.rho.or(self.rho),
            epsilon: other.epsilon.or(self.epsilon),
        }
    }

    pub fn require_lambda(&self) -> Result<DegreeDistribution> {
        self.lambda.clone().ok_or_else(|| Error::InvalidArgument("lambda: missing (use --lambda or --spec)".into()))
    }

    pub fn require_rho(&self) -> Result<DegreeDistribution> {
        self.rho.clone().ok_or_else(|| Error::InvalidArgument("rho: missing (use --rho or --spec)".into()))
    }

    pub fn require_epsilon(&self) -> Result<f64> {
        self.epsilon.ok_or_else(|| Error::InvalidArgument("epsilon: missing (use --epsilon or --spec)".into()))
    }

    pub fn require_full(&self) -> Result<EnsembleSpec> {
        EnsembleSpec::new(self.require_lambda()?, self.require_rho()?, self.require_epsilon()?)
            .map_err(|e| Error::InvalidArgument(format!("spec: {e}")))
    }
}

/// Parses an inline distribution such as `{"6": 1.0}`, naming `field` in errors.
pub fn parse_distribution(field: &str, text: &str) -> Result<DegreeDistribution> {
    serde_json::from_str(text).map_err(|e| Error::InvalidArgument(format!("{field}: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dd(pairs: &[(usize, f64)]) -> DegreeDistribution {
        DegreeDistribution::new(pairs.iter().copied()).unwrap()
    }

    #[test]
    fn optimize_lambda_code3() {
        let r = cmd_optimize_lambda(&OptimizeLambdaArgs { rho: dd(&[(6, 1.0)]), epsilon: 0.49, max_var_degree: 7, tol: 1e-8 })
            .unwrap();
        assert_eq!(r.status, ReportStatus::Optimal, "{:?}", r.notes);
        assert!((r.rate.unwrap() - 0.4922).abs() < 2e-3);
        assert!((r.gap.unwrap() - 0.0349).abs() < 2e-3);
        assert!(r.certificate.as_ref().unwrap().valid);
        assert!(r.de.as_ref().unwrap().grid.feasible);
        assert_eq!(r.exit_code(), 0);
    }

    #[test]
    fn degenerate_epsilon_is_flagged() {
        let r = cmd_optimize_lambda(&OptimizeLambdaArgs { rho: dd(&[(2, 1.0)]), epsilon: 0.0, max_var_degree: 3, tol: 1e-8 })
            .unwrap();
        assert!(r.degenerate_epsilon);
        assert_eq!(r.status, ReportStatus::Optimal);
        let e = r.ensemble.unwrap();
        assert!((e.lambda.get(2) - 1.0).abs() < 1e-6);
        assert!((r.solver.unwrap().objective - 0.5).abs() < 1e-7);
    }

    #[test]
    fn unreachable_rate_is_infeasible_not_a_failure() {
        let r = cmd_optimize_lambda(&OptimizeLambdaArgs {
            rho: dd(&[(5, 1.0)]),
            epsilon: 0.7769167104415811,
            max_var_degree: 11,
            tol: 1e-8,
        })
        .unwrap();
        assert_eq!(r.status, ReportStatus::Infeasible);
        assert_eq!(r.exit_code(), 2);
    }

    #[test]
    fn optimize_rho_trivial() {
        let r = cmd_optimize_rho(&OptimizeRhoArgs { lambda: dd(&[(2, 1.0)]), epsilon: 0.5, max_check_degree: 2, tol: 1e-8 })
            .unwrap();
        assert_eq!(r.status, ReportStatus::Optimal, "{:?}", r.notes);
        assert!((r.ensemble.unwrap().rho.get(2) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn threshold_both_methods_agree() {
        let r = cmd_threshold(&ThresholdArgs {
            lambda: dd(&[(3, 1.0)]),
            rho: dd(&[(6, 1.0)]),
            method: ThresholdMethod::Both,
            tol: 1e-8,
        })
        .unwrap();
        assert_eq!(r.status, ReportStatus::Optimal, "{:?}", r.notes);
        let t = r.threshold.unwrap();
        assert!((t.sdp.unwrap() - t.bisect.unwrap()).abs() < 1e-4);
        assert!((t.sdp.unwrap() - 0.4294).abs() < 1e-3);
    }

    #[test]
    fn verify_reports_infeasible_above_threshold() {
        let lambda = DegreeDistribution::normalized([(2, 0.4021), (3, 0.2137), (7, 0.3902)]).unwrap();
        let ok = cmd_verify(&EnsembleSpec::new(lambda.clone(), dd(&[(6, 1.0)]), 0.49).unwrap()).unwrap();
        assert_eq!(ok.status, ReportStatus::Feasible);
        assert!(ok.threshold.unwrap().margin.unwrap() >= -1e-4);
        let bad = cmd_verify(&EnsembleSpec::new(lambda, dd(&[(6, 1.0)]), 0.60).unwrap()).unwrap();
        assert_eq!(bad.status, ReportStatus::Infeasible);
        assert_eq!(bad.exit_code(), 2);
        assert!(bad.de.unwrap().minimum.worst_value < 0.0);
    }

    #[test]
    fn report_round_trips_through_json() {
        let r = cmd_optimize_lambda(&OptimizeLambdaArgs { rho: dd(&[(4, 1.0)]), epsilon: 0.64, max_var_degree: 5, tol: 1e-8 })
            .unwrap();
        let back: RunReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
        let mut other = r.clone();
        other.duration_seconds = Elapsed(123.0);
        assert_eq!(other, r);
    }

    #[test]
    fn sweep_with_empty_grid_has_only_reference_row() {
        let out = cmd_sweep(&SweepArgs {
            rho: dd(&[(5, 1.0)]),
            epsilon: 0.56,
            max_var_degree: 5,
            grid_sizes: vec![],
            tol: 1e-8,
        })
        .unwrap();
        assert_eq!(out.rows.len(), 1);
        assert_eq!(out.exit_code, 0);
        assert!(out.csv.lines().nth(1).unwrap().starts_with("inf,"));
    }

    #[test]
    fn partial_specs() {
        let base = PartialSpec::from_json(r#"{"rho": {"6": 1.0}, "epsilon": 0.4}"#).unwrap();
        let merged = base.overlay(PartialSpec { epsilon: Some(0.3), ..PartialSpec::default() });
        assert_eq!(merged.require_epsilon().unwrap(), 0.3);
        assert!(merged.require_lambda().unwrap_err().to_string().contains("lambda"));
        assert!(PartialSpec::from_json(r#"{"rh": {}}"#).is_err());
        let err = parse_distribution("rho", r#"{"1": 1.0}"#).unwrap_err();
        assert!(err.to_string().starts_with("invalid argument: rho:"));
    }
}
