//! Sum-of-squares reformulation of "polynomial ≥ 0 on `[0, 1]`".
//!
//! A polynomial `P` of degree at most `q` is nonnegative on `[0, 1]` iff
//! `Π(x) = (1 + x²)^q P(x² / (1 + x²))` is nonnegative on the real line, and
//! a univariate polynomial is nonnegative on the real line iff it is a sum of
//! squares, i.e. `Π_l = Σ_{i+j=l} B_ij` for some PSD Gram matrix `B`. Every
//! coefficient of `Π` is linear in the coefficients of `P`, so a family of
//! polynomials that is affine in some decision variables turns into linear
//! equalities plus one PSD block.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::ensemble::{check_polynomial_nonnegative, CheckMode, DegreeDistribution, GRID_POINTS};
use crate::error::{Error, Result};
use crate::polynomial::{binomial, Polynomial};
use crate::solver::{solve, ConicProblem, ConicSolution, LinearForm, Sense, SolverOptions, VarKind, VarRef};

/// Symmetry tolerance for certificates (relative to the spectral norm).
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;
/// PSD tolerance: `λ_min(B) ≥ -1e-9 (1 + ‖B‖)`.
pub const PSD_TOLERANCE: f64 = 1e-9;
/// Per-coefficient reconstruction tolerance, relative to the magnitude of the
/// terms being summed.
pub const RECONSTRUCTION_TOLERANCE: f64 = 1e-7;

/// Polynomial whose coefficients are affine in named decision variables:
/// `constant(x) + Σ_v var_v · terms[v](x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinePolynomialFamily {
    pub variable_names: Vec<String>,
    pub constant: Polynomial,
    pub terms: Vec<Polynomial>,
}

impl AffinePolynomialFamily {
    pub fn new(constant: Polynomial) -> Self {
        AffinePolynomialFamily { variable_names: Vec::new(), constant, terms: Vec::new() }
    }

    pub fn push(&mut self, name: impl Into<String>, poly: Polynomial) {
        self.variable_names.push(name.into());
        self.terms.push(poly);
    }

    /// Highest power with a structurally nonzero coefficient.
    pub fn degree(&self) -> Option<usize> {
        std::iter::once(&self.constant).chain(&self.terms).filter_map(Polynomial::degree).max()
    }

    /// Coefficient of `x^k` as `(constant, [per-variable coefficients])`.
    pub fn coefficient(&self, k: usize) -> (f64, Vec<f64>) {
        (self.constant.coeff(k), self.terms.iter().map(|t| t.coeff(k)).collect())
    }

    pub fn evaluate(&self, values: &[f64]) -> Polynomial {
        assert_eq!(values.len(), self.terms.len(), "one value per decision variable");
        self.terms
            .iter()
            .zip(values)
            .fold(self.constant.clone(), |acc, (t, &v)| acc.add(&t.scale(v)))
    }

    /// Applies [`lift_to_real_line`] to every member; the lift is linear, so
    /// this commutes with [`AffinePolynomialFamily::evaluate`].
    pub fn lift(&self, q: usize) -> Result<AffinePolynomialFamily> {
        Ok(AffinePolynomialFamily {
            variable_names: self.variable_names.clone(),
            constant: lift_to_real_line(&self.constant, q)?,
            terms: self.terms.iter().map(|t| lift_to_real_line(t, q)).collect::<Result<_>>()?,
        })
    }
}

/// `Π(x) = (1 + x²)^q P(x² / (1 + x²)) = Σ_j p_j x^{2j} (1 + x²)^{q-j}`.
///
/// Even coefficients are `Π_{2m} = Σ_{i≤m} p_i C(q - i, m - i)`; odd ones are 0.
pub fn lift_to_real_line(p: &Polynomial, q: usize) -> Result<Polynomial> {
    if let Some(deg) = p.degree() {
        if deg > q {
            return Err(Error::DegreeBound { bound: q, degree: deg });
        }
    }
    let mut out = vec![0.0; 2 * q + 1];
    for m in 0..=q {
        out[2 * m] = (0..=m.min(p.coeffs().len().saturating_sub(1)))
            .map(|i| p.coeff(i) * binomial(q - i, m - i))
            .sum();
    }
    Ok(Polynomial::new(out))
}

/// `P(x) ↦ P(x²)`: nonnegativity on `[0, ∞)` becomes nonnegativity on ℝ.
pub fn lift_to_half_line(p: &Polynomial) -> Polynomial {
    let mut out = vec![0.0; 2 * p.coeffs().len()];
    for (k, &c) in p.coeffs().iter().enumerate() {
        out[2 * k] = c;
    }
    Polynomial::new(out)
}

/// Test helper: does the sign of `min P` on `[0, 1]` agree with the sign of
/// `min Π` on ℝ?
///
/// `Π` is evaluated from its own coefficients at `x = sqrt(t / (1 - t))` for
/// a uniform grid of `t ∈ [0, 1)`, normalised by `(1 + x²)^q`; its behaviour
/// at infinity (the `t = 1` end) is its leading coefficient `Π_{2q} = P(1)`.
pub fn lift_preserves_nonnegativity_check(p: &Polynomial, q: usize) -> Result<bool> {
    let lifted = lift_to_real_line(p, q)?;
    let min_p = check_polynomial_nonnegative(p, CheckMode::Minimum).worst_value;
    let last = (GRID_POINTS - 1) as f64;
    let mut min_pi = lifted.coeff(2 * q);
    for k in 0..GRID_POINTS - 1 {
        let t = k as f64 / last;
        let x = (t / (1.0 - t)).sqrt();
        let v = lifted.evaluate(x) / (1.0 + x * x).powi(q as i32);
        min_pi = min_pi.min(v);
    }
    let tol = 1e-9 * (1.0 + p.max_abs_coeff());
    Ok((min_p >= -tol) == (min_pi >= -tol))
}

/// Gram matrix witnessing that `Π` is a sum of squares.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SosCertificate {
    pub gram: DMatrix<f64>,
    /// Half-degree of the lifted polynomial; `gram` is `(q+1) × (q+1)`.
    pub q: usize,
}

impl SosCertificate {
    pub fn new(gram: DMatrix<f64>) -> Result<Self> {
        if gram.nrows() != gram.ncols() || gram.nrows() == 0 {
            return Err(Error::DimensionMismatch { expected: gram.nrows(), found: gram.ncols() });
        }
        let q = gram.nrows() - 1;
        Ok(SosCertificate { gram, q })
    }

    /// `Σ_{i+j=l} B_ij` for `l = 0..=2q`.
    pub fn anti_diagonal_sums(&self) -> Vec<f64> {
        let n = self.gram.nrows();
        let mut out = vec![0.0; 2 * n - 1];
        for i in 0..n {
            for j in 0..n {
                out[i + j] += self.gram[(i, j)];
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub psd_ok: bool,
    pub reconstruction_ok: bool,
    pub symmetric_ok: bool,
    pub min_eig: f64,
    /// Largest normalised anti-diagonal mismatch.
    pub max_residual: f64,
}

impl CertificateReport {
    pub fn is_valid(&self) -> bool {
        self.psd_ok && self.reconstruction_ok && self.symmetric_ok
    }
}

/// Checks that `cert` is PSD and that its anti-diagonal sums reproduce `target`.
///
/// The residual for coefficient `l` is
/// `|Π_l - Σ_{i+j=l} B_ij| / (1 + |Π_l| + Σ_{i+j=l} |B_ij|)`.
pub fn verify_certificate(cert: &SosCertificate, target: &Polynomial) -> Result<CertificateReport> {
    let n = cert.gram.nrows();
    if cert.gram.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: cert.gram.ncols() });
    }
    if let Some(deg) = target.degree() {
        let needed = deg.div_ceil(2) + 1;
        if needed > n {
            return Err(Error::DimensionMismatch { expected: needed, found: n });
        }
    }
    let eig = SymmetricEigen::new(cert.gram.clone()).eigenvalues;
    let min_eig = eig.min();
    let norm = eig.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let asym = (&cert.gram - cert.gram.transpose()).amax();

    let mut sums = vec![0.0; 2 * n - 1];
    let mut mags = vec![0.0; 2 * n - 1];
    for i in 0..n {
        for j in 0..n {
            sums[i + j] += cert.gram[(i, j)];
            mags[i + j] += cert.gram[(i, j)].abs();
        }
    }
    let max_residual = (0..2 * n - 1)
        .map(|l| (target.coeff(l) - sums[l]).abs() / (1.0 + target.coeff(l).abs() + mags[l]))
        .fold(0.0, f64::max);

    Ok(CertificateReport {
        psd_ok: min_eig >= -PSD_TOLERANCE * (1.0 + norm),
        reconstruction_ok: max_residual <= RECONSTRUCTION_TOLERANCE,
        symmetric_ok: asym <= SYMMETRY_TOLERANCE * (1.0 + norm),
        min_eig,
        max_residual,
    })
}

/// Relative increases of `t` tried when certifying a threshold program.
pub const THRESHOLD_MARGINS: [f64; 3] = [1e-8, 1e-7, 1e-6];

/// A certificate with its verification report and the decision values it
/// certifies (equal to the solver's, except for a threshold margin).
#[derive(Debug, Clone)]
pub struct Certified {
    pub certificate: SosCertificate,
    pub report: CertificateReport,
    pub values: Vec<f64>,
}

/// Which optimisation a [`SosProgram`] encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProgramKind {
    /// Maximise `Σ λ_i / i` for fixed `ρ` and `ε`.
    OptimizeLambda,
    /// Minimise `Σ ρ_j / j` for fixed `λ` and `ε`.
    OptimizeRho,
    /// Minimise `t = 1/ε` for fixed `λ` and `ρ`.
    Threshold,
    /// A caller-supplied family, see [`build_family_program`].
    Custom,
}

/// A conic program produced by one of the builders, with the bookkeeping
/// needed to read decision values and a Gram certificate off a solution.
#[derive(Debug, Clone)]
pub struct SosProgram {
    pub kind: ProgramKind,
    pub problem: ConicProblem,
    /// Constraint polynomial on `[0, 1]`, affine in the decision variables.
    pub family: AffinePolynomialFamily,
    /// `family` is written in `u = 1 - x`. The map keeps `[0, 1]`, and for
    /// the density-evolution forms it keeps the expanded coefficients small:
    /// `ρ(1 - ε + εu)` has nonnegative coefficients summing to one, whereas
    /// `ρ(1 - εx)` has alternating binomial ones.
    pub reflected: bool,
    /// `family` lifted to the real line.
    pub lifted: AffinePolynomialFamily,
    pub q: usize,
    /// `(node degree, variable)` for λ/ρ programs; `(0, t)` for thresholds.
    pub decision_vars: Vec<(usize, VarRef)>,
    /// The Gram block is `B = D B̃ D` with `D = diag(gram_scale)`.
    pub gram_scale: Vec<f64>,
    /// The Gram basis is `x^gram_low, …, x^gram_high`; monomials outside it
    /// are dropped because the matching coefficients of `Π` vanish identically.
    pub gram_low: usize,
    pub gram_high: usize,
    /// `ε = 0`: every distribution is feasible.
    pub degenerate_epsilon: bool,
}

impl SosProgram {
    /// Side of the solver's PSD block.
    pub fn psd_dim(&self) -> usize {
        self.gram_high + 1 - self.gram_low
    }

    /// Number of Gram-matching equalities.
    pub fn lift_equalities(&self) -> usize {
        2 * self.psd_dim() - 1
    }

    /// Full `(q+1)`-square Gram matrix from a scaled solver block.
    fn embed(&self, scaled: &DMatrix<f64>) -> DMatrix<f64> {
        let (lo, hi, d) = (self.gram_low, self.gram_high, &self.gram_scale);
        DMatrix::from_fn(self.q + 1, self.q + 1, |i, j| {
            if (lo..=hi).contains(&i) && (lo..=hi).contains(&j) { d[i] * d[j] * scaled[(i - lo, j - lo)] } else { 0.0 }
        })
    }

    pub fn decision_values(&self, sol: &ConicSolution) -> Vec<f64> {
        self.decision_vars.iter().map(|&(_, v)| sol.value(v)).collect()
    }

    /// Gram matrix in the plain monomial basis, as returned by the solver.
    pub fn raw_certificate(&self, sol: &ConicSolution) -> Option<SosCertificate> {
        SosCertificate::new(self.embed(sol.psd.as_ref()?)).ok()
    }

    /// [`SosProgram::raw_certificate`] projected onto `{B : Σ_{i+j=l} B_ij = Π_l}`
    /// for the solution's decision values.
    ///
    /// The interior-point iterate misses the anti-diagonal equalities by
    /// roughly `μ (1 + x²)^q`, which swamps the small low-order coefficients
    /// of `Π`. The correction is first taken in the metric of `B` itself,
    /// `ΔB = B Aᵀ(z) B`, which keeps it in the range of `B`; a least-squares
    /// pass in the scaled basis removes what is left.
    pub fn projected_certificate(&self, sol: &ConicSolution) -> Option<SosCertificate> {
        let scaled = sol.psd.as_ref()?;
        let target = self.target(&self.decision_values(sol));
        let (lo, hi) = (self.gram_low, self.gram_high);
        let projected = project_gram(scaled, &self.gram_scale[lo..=hi], &target, 2 * lo);
        SosCertificate::new(self.embed(&projected)).ok()
    }

    /// Best available certificate for the solution.
    ///
    /// Tries the projected certificate, then the raw one. A threshold program
    /// may also certify a marginally larger `t` (any `t' ≥ t` stays feasible):
    /// raising `t` by `δ` adds `δ (1 - u)` to the family, i.e. `δ (1 + x²)^{q-1}`
    /// to `Π`, which has the PSD Gram diagonal `δ diag(C(q-1, 0), …, C(q-1, q-1), 0)`.
    /// If nothing verifies, the projected certificate is returned with its
    /// failing report.
    pub fn certificate(&self, sol: &ConicSolution) -> Option<Certified> {
        let values = self.decision_values(sol);
        let target = self.target(&values);
        let check = |certificate: SosCertificate, values: Vec<f64>, target: &Polynomial| {
            let report = verify_certificate(&certificate, target).ok()?;
            Some(Certified { certificate, report, values })
        };
        let projected = check(self.projected_certificate(sol)?, values.clone(), &target)?;
        if projected.report.is_valid() {
            return Some(projected);
        }
        if let Some(raw) = check(self.raw_certificate(sol)?, values.clone(), &target) {
            if raw.report.is_valid() {
                return Some(raw);
            }
        }
        if self.kind == ProgramKind::Threshold {
            let t = values[0];
            for margin in THRESHOLD_MARGINS {
                let delta = margin * t;
                let q = self.q;
                let bump = DMatrix::from_fn(q + 1, q + 1, |i, j| {
                    if i == j && i < q { delta * binomial(q - 1, i) } else { 0.0 }
                });
                let cert = SosCertificate::new(&projected.certificate.gram + bump).ok()?;
                let bumped = self.target(&[t + delta]);
                if let Some(c) = check(cert, vec![t + delta], &bumped) {
                    if c.report.is_valid() {
                        return Some(c);
                    }
                }
            }
        }
        Some(projected)
    }

    /// `Π` at the solution's decision values.
    pub fn target(&self, values: &[f64]) -> Polynomial {
        self.lifted.evaluate(values)
    }

    /// Decision values as a degree distribution (λ or ρ programs).
    pub fn distribution(&self, sol: &ConicSolution) -> Result<DegreeDistribution> {
        if matches!(self.kind, ProgramKind::Threshold | ProgramKind::Custom) {
            return Err(Error::InvalidArgument(format!("{:?} programs have no distribution", self.kind)));
        }
        DegreeDistribution::normalized(self.decision_vars.iter().map(|&(deg, v)| (deg, sol.value(v).max(0.0))))
    }
}

/// Attaches the lifted Gram constraints for `family` to `problem`.
///
/// Lifted family, Gram scaling and Gram basis range set up by
/// [`attach_gram_constraints`].
struct GramLayout {
    q: usize,
    lifted: AffinePolynomialFamily,
    scale: Vec<f64>,
    low: usize,
    high: usize,
}

/// Relative size below which a lifted coefficient counts as identically zero.
const VANISHING_TOLERANCE: f64 = 1e-13;

/// Attaches the lifted Gram constraints for `family` to `problem`.
///
/// The Gram block is expressed in the basis `sqrt(C(q, i)) x^i`, under which
/// `(1 + x²)^q` has the identity as Gram matrix, and each equality is
/// normalised to unit max-coefficient.
///
/// When `Π_0, …, Π_{2k-1}` vanish identically, any Gram matrix of `Π` has
/// zero leading `k` rows, so the basis starts at `x^k`; likewise at the top.
/// Keeping those rows would let `B_{0l}` drift by `O(sqrt(tol))` and with it
/// the coefficients of `Π` next to the zero ones, which are exactly the ones
/// that decide stability.
fn attach_gram_constraints(
    problem: &mut ConicProblem,
    family: &AffinePolynomialFamily,
    vars: &[VarRef],
) -> Result<GramLayout> {
    let q = family.degree().unwrap_or(0).max(1);
    let lifted = family.lift(q)?;
    let magnitude = {
        let abs = |p: &Polynomial| Polynomial::new(p.coeffs().iter().map(|c| c.abs()).collect());
        let mut f = AffinePolynomialFamily::new(abs(&family.constant));
        for (name, term) in family.variable_names.iter().zip(&family.terms) {
            f.push(name.clone(), abs(term));
        }
        f.lift(q)?
    };
    let scale: Vec<f64> = (0..=q).map(|i| binomial(q, i).sqrt()).collect();
    let vanishes = |l: usize| {
        let (c0, cv) = lifted.coefficient(l);
        let (m0, mv) = magnitude.coefficient(l);
        c0.abs() <= VANISHING_TOLERANCE * (1.0 + m0)
            && cv.iter().zip(&mv).all(|(c, m)| c.abs() <= VANISHING_TOLERANCE * (1.0 + m))
    };
    let (mut low, mut high) = (0, q);
    while low < high && vanishes(2 * low) && vanishes(2 * low + 1) {
        low += 1;
    }
    while high > low && vanishes(2 * high) && vanishes(2 * high - 1) {
        high -= 1;
    }
    problem.set_psd_dim(high + 1 - low);
    for l in 2 * low..=2 * high {
        let (c0, cv) = lifted.coefficient(l);
        // Σ_{i+j=l} B_ij - Σ_v cv_v var_v = c0
        let mut form = LinearForm::new();
        for i in l.saturating_sub(high).max(low)..=l / 2 {
            let j = l - i;
            let mult = if i == j { 1.0 } else { 2.0 };
            form.add(VarRef::Psd(i - low, j - low), mult * scale[i] * scale[j]);
        }
        for (&v, &c) in vars.iter().zip(&cv) {
            form.add(v, -c);
        }
        let norm = form.max_abs_coeff().max(c0.abs());
        problem.add_equality(form.scaled(1.0 / norm), c0 / norm);
    }
    Ok(GramLayout { q, lifted, scale, low, high })
}

/// Anti-diagonal sums of `D B̃ D`, i.e. the polynomial a scaled Gram matrix represents.
fn scaled_sums(b: &DMatrix<f64>, d: &[f64]) -> Vec<f64> {
    let n = b.nrows();
    let mut out = vec![0.0; 2 * n - 1];
    for i in 0..n {
        for j in 0..n {
            out[i + j] += d[i] * d[j] * b[(i, j)];
        }
    }
    out
}

/// Moves the scaled Gram matrix `b` onto `Σ_{i+j=l} d_i d_j b_ij = Π_{l+shift}`.
fn project_gram(b: &DMatrix<f64>, d: &[f64], target: &Polynomial, shift: usize) -> DMatrix<f64> {
    let n = b.nrows();
    let rows = 2 * n - 1;
    let mut norms = vec![0.0; rows];
    for i in 0..n {
        for j in 0..n {
            norms[i + j] += (d[i] * d[j]).powi(2);
        }
    }
    let residual = |b: &DMatrix<f64>| {
        let sums = scaled_sums(b, d);
        DVector::from_fn(rows, |l, _| (target.coeff(l + shift) - sums[l]) / norms[l].sqrt())
    };
    let weight = |l: usize| DMatrix::from_fn(n, n, |i, j| if i + j == l { d[i] * d[j] } else { 0.0 });

    // Row-normalised `M z = r` with `M_lk = ⟨W_l, B W_k B⟩`.
    let pullbacks: Vec<DMatrix<f64>> = (0..rows).map(|k| b * weight(k) * b / norms[k].sqrt()).collect();
    let mut m = DMatrix::zeros(rows, rows);
    for (k, g) in pullbacks.iter().enumerate() {
        for l in 0..rows {
            let v: f64 = (l.saturating_sub(n - 1)..=l.min(n - 1)).map(|i| d[i] * d[l - i] * g[(i, l - i)]).sum();
            m[(l, k)] = v / norms[l].sqrt();
        }
    }
    let svd = m.svd(true, true);
    let cutoff = 1e-13 * svd.singular_values.max();
    let mut out = b.clone();
    for _ in 0..3 {
        let Ok(z) = svd.solve(&residual(&out), cutoff) else { break };
        for (g, zk) in pullbacks.iter().zip(z.iter()) {
            out += g * *zk;
        }
    }

    let r = residual(&out);
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] += r[i + j] * d[i] * d[j] / norms[i + j].sqrt();
        }
    }
    let t = out.transpose();
    (out + t) * 0.5
}

/// `1 - ρ(1 - ε + εu)`, the check-node transfer in `u = 1 - x`.
fn reflected_check_transfer(rho: &DegreeDistribution, eps: f64) -> Polynomial {
    Polynomial::constant(1.0).sub(&rho.polynomial().compose(&Polynomial::new(vec![1.0 - eps, eps])))
}

fn check_open_epsilon(eps: f64) -> Result<bool> {
    if !(eps.is_finite() && (0.0..1.0).contains(&eps)) {
        return Err(Error::InvalidEpsilon(eps, "[0, 1)"));
    }
    Ok(eps == 0.0)
}

/// Maximum-rate variable-node distribution for fixed `ρ` and `ε`:
///
/// ```text
/// max Σ λ_i / i  s.t.  Σ λ_i = 1,  0 ≤ λ_i ≤ 1,
///                      x - Σ λ_i (1 - ρ(1 - εx))^{i-1} ≥ 0 on [0, 1]
/// ```
///
/// The family is built in `u = 1 - x`, see [`SosProgram::reflected`].
pub fn build_nlp1(rho: &DegreeDistribution, eps: f64, max_var_degree: usize) -> Result<SosProgram> {
    rho.validate()?;
    let degenerate = check_open_epsilon(eps)?;
    if max_var_degree < 2 {
        return Err(Error::InvalidArgument(format!("maximum variable degree {max_var_degree} is below 2")));
    }
    let inner = reflected_check_transfer(rho, eps);
    let mut family = AffinePolynomialFamily::new(Polynomial::new(vec![1.0, -1.0]));
    let mut problem = ConicProblem::new(Sense::Maximize);
    let mut decision_vars = Vec::new();
    let mut objective = LinearForm::new();
    let mut simplex = LinearForm::new();
    for i in 2..=max_var_degree {
        let name = format!("lambda_{i}");
        let v = problem.add_scalar(name.clone(), VarKind::Boxed { lo: 0.0, hi: 1.0 });
        family.push(name, inner.power(i - 1).scale(-1.0));
        objective.add(v, 1.0 / i as f64);
        simplex.add(v, 1.0);
        decision_vars.push((i, v));
    }
    problem.set_objective(objective, 0.0);
    problem.add_equality(simplex, 1.0);
    let vars: Vec<VarRef> = decision_vars.iter().map(|&(_, v)| v).collect();
    let layout = attach_gram_constraints(&mut problem, &family, &vars)?;
    Ok(SosProgram {
        kind: ProgramKind::OptimizeLambda,
        problem,
        family,
        reflected: true,
        lifted: layout.lifted,
        q: layout.q,
        decision_vars,
        gram_scale: layout.scale,
        gram_low: layout.low,
        gram_high: layout.high,
        degenerate_epsilon: degenerate,
    })
}

/// Maximum-rate check-node distribution for fixed `λ` and `ε`:
///
/// ```text
/// min Σ ρ_j / j  s.t.  Σ ρ_j = 1,  0 ≤ ρ_j ≤ 1,
///                      Σ ρ_j (1 - ελ(x))^{j-1} - 1 + x ≥ 0 on [0, 1]
/// ```
pub fn build_nlp2(lambda: &DegreeDistribution, eps: f64, max_check_degree: usize) -> Result<SosProgram> {
    lambda.validate()?;
    let degenerate = check_open_epsilon(eps)?;
    if max_check_degree < 2 {
        return Err(Error::InvalidArgument(format!("maximum check degree {max_check_degree} is below 2")));
    }
    let base = Polynomial::constant(1.0).sub(&lambda.polynomial().scale(eps));
    let mut family = AffinePolynomialFamily::new(Polynomial::new(vec![-1.0, 1.0]));
    let mut problem = ConicProblem::new(Sense::Minimize);
    let mut decision_vars = Vec::new();
    let mut objective = LinearForm::new();
    let mut simplex = LinearForm::new();
    for j in 2..=max_check_degree {
        let name = format!("rho_{j}");
        let v = problem.add_scalar(name.clone(), VarKind::Boxed { lo: 0.0, hi: 1.0 });
        family.push(name, base.power(j - 1));
        objective.add(v, 1.0 / j as f64);
        simplex.add(v, 1.0);
        decision_vars.push((j, v));
    }
    problem.set_objective(objective, 0.0);
    problem.add_equality(simplex, 1.0);
    let vars: Vec<VarRef> = decision_vars.iter().map(|&(_, v)| v).collect();
    let layout = attach_gram_constraints(&mut problem, &family, &vars)?;
    Ok(SosProgram {
        kind: ProgramKind::OptimizeRho,
        problem,
        family,
        reflected: false,
        lifted: layout.lifted,
        q: layout.q,
        decision_vars,
        gram_scale: layout.scale,
        gram_low: layout.low,
        gram_high: layout.high,
        degenerate_epsilon: degenerate,
    })
}

/// Threshold program: `min t` over `t ≥ 1` with `t x - λ(1 - ρ(1 - x)) ≥ 0`
/// on `[0, 1]`; the decoding threshold is `1 / t*`. Built in `u = 1 - x`.
pub fn build_nlp3(lambda: &DegreeDistribution, rho: &DegreeDistribution) -> Result<SosProgram> {
    lambda.validate()?;
    rho.validate()?;
    let composed = lambda.polynomial().compose(&reflected_check_transfer(rho, 1.0));
    let mut family = AffinePolynomialFamily::new(composed.scale(-1.0));
    family.push("t", Polynomial::new(vec![1.0, -1.0]));
    let mut problem = ConicProblem::new(Sense::Minimize);
    let t = problem.add_scalar("t", VarKind::Boxed { lo: 1.0, hi: f64::INFINITY });
    problem.set_objective(LinearForm::new().with(t, 1.0), 0.0);
    let layout = attach_gram_constraints(&mut problem, &family, &[t])?;
    Ok(SosProgram {
        kind: ProgramKind::Threshold,
        problem,
        family,
        reflected: true,
        lifted: layout.lifted,
        q: layout.q,
        decision_vars: vec![(0, t)],
        gram_scale: layout.scale,
        gram_low: layout.low,
        gram_high: layout.high,
        degenerate_epsilon: false,
    })
}

/// Optimises a linear objective over the family's variables, each boxed in
/// `bounds`, subject to the family being nonnegative on `[0, 1]`. With no
/// variables this is a plain nonnegativity test.
pub fn build_family_program(
    family: AffinePolynomialFamily,
    sense: Sense,
    objective: &[f64],
    bounds: &[(f64, f64)],
) -> Result<SosProgram> {
    let n = family.variable_names.len();
    if objective.len() != n || bounds.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: objective.len().min(bounds.len()) });
    }
    let mut problem = ConicProblem::new(sense);
    let mut form = LinearForm::new();
    let mut decision_vars = Vec::new();
    for ((name, &c), &(lo, hi)) in family.variable_names.iter().zip(objective).zip(bounds) {
        let kind = if lo == f64::NEG_INFINITY && hi == f64::INFINITY { VarKind::Free } else { VarKind::Boxed { lo, hi } };
        let v = problem.add_scalar(name.clone(), kind);
        form.add(v, c);
        decision_vars.push((0, v));
    }
    problem.set_objective(form, 0.0);
    let vars: Vec<VarRef> = decision_vars.iter().map(|&(_, v)| v).collect();
    let layout = attach_gram_constraints(&mut problem, &family, &vars)?;
    Ok(SosProgram {
        kind: ProgramKind::Custom,
        problem,
        family,
        reflected: false,
        lifted: layout.lifted,
        q: layout.q,
        decision_vars,
        gram_scale: layout.scale,
        gram_low: layout.low,
        gram_high: layout.high,
        degenerate_epsilon: false,
    })
}

/// Outcome of [`solve_certified`].
#[derive(Debug, Clone)]
pub struct CertifiedSolution {
    pub solution: ConicSolution,
    pub certified: Option<Certified>,
    /// Tolerance of the solve that produced `solution`.
    pub tol: f64,
}

impl CertifiedSolution {
    pub fn is_certified(&self) -> bool {
        self.solution.is_optimal() && self.certified.as_ref().is_some_and(|c| c.report.is_valid())
    }
}

/// Smallest tolerance [`solve_certified`] will tighten to.
pub const MIN_CERTIFICATE_TOL: f64 = 1e-10;

/// Solves `prog` and extracts a Gram certificate. If the certificate does not
/// verify, the program is re-solved once at a tenth of the tolerance and the
/// tighter result is kept when it is optimal and certified.
pub fn solve_certified(prog: &SosProgram, opts: &SolverOptions) -> Result<CertifiedSolution> {
    let attempt = |opts: &SolverOptions| -> Result<CertifiedSolution> {
        let solution = solve(&prog.problem, opts)?;
        let certified = if solution.is_optimal() { prog.certificate(&solution) } else { None };
        Ok(CertifiedSolution { solution, certified, tol: opts.tol })
    };
    let first = attempt(opts)?;
    if first.is_certified() || !first.solution.is_optimal() || opts.tol / 10.0 < MIN_CERTIFICATE_TOL {
        return Ok(first);
    }
    let tighter = attempt(&SolverOptions { tol: opts.tol / 10.0, ..*opts })?;
    Ok(if tighter.is_certified() { tighter } else { first })
}
