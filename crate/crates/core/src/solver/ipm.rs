//! Homogeneous self-dual primal-dual interior-point iteration over
//! `R^f × R^n_+ × S^d_+`.
//!
//! The embedding
//!
//! ```text
//!  A x - b τ       = 0
//! -Aᵀy - s + c τ   = 0      (s_free = 0)
//!  bᵀy - cᵀx - κ   = 0
//! ```
//!
//! is followed from an infeasible interior start with Nesterov-Todd scaling
//! on the PSD block and a Mehrotra predictor-corrector step. Newton systems
//! are reduced to the `m × m` Schur complement `A W² Aᵀ`, bordered by the free
//! columns when there are any.

use std::io::Write;

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen, LU};

use super::standard::StandardForm;
use super::SolverOptions;

/// Fraction of the distance to the cone boundary taken per step.
const STEP_FRACTION: f64 = 0.99;
/// Iterations allowed without meaningful progress before giving up.
const STALL_LIMIT: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Outcome {
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    Failed,
}

#[derive(Debug, Clone)]
pub(crate) struct Iterate {
    pub x_free: DVector<f64>,
    pub x_lin: DVector<f64>,
    pub x_psd: DMatrix<f64>,
    pub y: DVector<f64>,
    pub s_lin: DVector<f64>,
    pub s_psd: DMatrix<f64>,
    pub tau: f64,
    pub kappa: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct IpmResult {
    pub outcome: Outcome,
    pub point: Iterate,
    pub iterations: usize,
}

/// A search direction over every block of the embedding.
#[derive(Debug, Clone)]
struct Direction {
    x_free: DVector<f64>,
    x_lin: DVector<f64>,
    x_psd: DMatrix<f64>,
    y: DVector<f64>,
    s_lin: DVector<f64>,
    s_psd: DMatrix<f64>,
    tau: f64,
    kappa: f64,
}

struct Residuals {
    p: DVector<f64>,
    d_free: DVector<f64>,
    d_lin: DVector<f64>,
    d_psd: DMatrix<f64>,
    g: f64,
}

/// Nesterov-Todd scaling of the current cone point.
struct Scaling {
    /// Orthant: `w = sqrt(x / s)`, scaled point `λ = sqrt(x s)`.
    w_lin: DVector<f64>,
    lambda_lin: DVector<f64>,
    /// PSD: `R⁻¹ X R⁻ᵀ = Rᵀ S R = diag(λ)`.
    r: DMatrix<f64>,
    r_inv: DMatrix<f64>,
    lambda_psd: DVector<f64>,
    /// `W = R Rᵀ`, so that `W S W = X`.
    w: DMatrix<f64>,
    chol_x: DMatrix<f64>,
    chol_s: DMatrix<f64>,
}

enum Factor {
    Cholesky(Cholesky<f64, nalgebra::Dyn>),
    Lu(LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
}

impl Factor {
    fn solve(&self, rhs: &DVector<f64>) -> Option<DVector<f64>> {
        match self {
            Factor::Cholesky(c) => Some(c.solve(rhs)),
            Factor::Lu(l) => l.solve(rhs),
        }
    }
}

struct NewtonSystem {
    factor: Factor,
    /// `[0 A_fᵀ; A_f M]`, kept for iterative refinement.
    kkt: DMatrix<f64>,
}

impl NewtonSystem {
    fn solve(&self, rhs: &DVector<f64>) -> Option<DVector<f64>> {
        let mut sol = self.factor.solve(rhs)?;
        for _ in 0..2 {
            let res = rhs - &self.kkt * &sol;
            let corr = self.factor.solve(&res)?;
            sol += corr;
        }
        Some(sol)
    }
}

pub(crate) fn run(sf: &StandardForm, opts: &SolverOptions, mut trace: Option<&mut dyn Write>) -> IpmResult {
    let d = sf.dim;
    let nu = (sf.n_lin() + d) as f64;
    let mut it = Iterate {
        x_free: DVector::zeros(sf.n_free()),
        x_lin: DVector::from_element(sf.n_lin(), 1.0),
        x_psd: DMatrix::identity(d, d),
        y: DVector::zeros(sf.m),
        s_lin: DVector::from_element(sf.n_lin(), 1.0),
        s_psd: DMatrix::identity(d, d),
        tau: 1.0,
        kappa: 1.0,
    };

    let b_norm = vec_amax(&sf.b);
    let c_norm = vec_amax(&sf.c_free).max(vec_amax(&sf.c_lin)).max(mat_amax(&sf.c_psd));
    let mut stall = 0;
    let mut best_merit = f64::INFINITY;

    for iter in 0..opts.max_iters {
        let res = residuals(sf, &it);
        let mu = complementarity(&it) / (nu + 1.0);

        // Convergence tests on the de-homogenised point.
        let pobj = objective(sf, &it);
        let dobj = sf.b.dot(&it.y);
        let pres = vec_amax(&res.p) / it.tau / (1.0 + b_norm);
        let dres = dual_residual_norm(&res) / it.tau / (1.0 + c_norm);
        let gap = (pobj - dobj).abs() / it.tau / (1.0 + (pobj / it.tau).abs());
        if let Some(w) = trace.as_deref_mut() {
            let _ = write!(w, "{iter:4} gap {gap:10.3e} pres {pres:10.3e} dres {dres:10.3e} mu {mu:10.3e} tau {:9.3e} kappa {:9.3e}", it.tau, it.kappa);
        }
        if pres <= opts.tol && dres <= opts.tol && gap <= opts.tol {
            if let Some(w) = trace.as_deref_mut() {
                let _ = writeln!(w);
            }
            return IpmResult { outcome: Outcome::Optimal, point: it, iterations: iter };
        }
        if let Some(outcome) = infeasibility(sf, &it, opts.tol) {
            if let Some(w) = trace.as_deref_mut() {
                let _ = writeln!(w);
            }
            return IpmResult { outcome, point: it, iterations: iter };
        }

        // Progress towards either an optimum or a Farkas certificate counts.
        let (pinf, dinf) = infeasibility_ratios(sf, &it);
        let merit = pres.max(dres).max(gap).min(pinf).min(dinf);
        if merit < 0.5 * best_merit {
            best_merit = merit;
            stall = 0;
        } else {
            stall += 1;
            if stall >= STALL_LIMIT && merit > best_merit * 0.9 {
                if let Some(w) = trace.as_deref_mut() {
                    let _ = writeln!(w, " stalled");
                }
                return IpmResult { outcome: Outcome::Failed, point: it, iterations: iter };
            }
        }

        let Some(scaling) = nt_scaling(&it) else {
            if let Some(w) = trace.as_deref_mut() {
                let _ = writeln!(w, " scaling failed");
            }
            return IpmResult { outcome: Outcome::Failed, point: it, iterations: iter };
        };
        let Some(system) = newton_system(sf, &scaling) else {
            if let Some(w) = trace.as_deref_mut() {
                let _ = writeln!(w, " factorization failed");
            }
            return IpmResult { outcome: Outcome::Failed, point: it, iterations: iter };
        };
        let Some(fixed) = FixedPart::new(sf, &scaling, &system) else {
            return IpmResult { outcome: Outcome::Failed, point: it, iterations: iter };
        };

        // Predictor.
        let rhs_lin = -scaling.lambda_lin.component_mul(&scaling.lambda_lin);
        let rhs_psd = -DMatrix::from_diagonal(&scaling.lambda_psd.map(|l| l * l));
        let rhs_tk = -it.tau * it.kappa;
        let Some(aff) = direction(sf, &it, &res, &scaling, &system, &fixed, 1.0, &rhs_lin, &rhs_psd, rhs_tk) else {
            return IpmResult { outcome: Outcome::Failed, point: it, iterations: iter };
        };
        let alpha_aff = max_step(&it, &aff, &scaling);
        let sigma = (1.0 - alpha_aff.min(1.0)).powi(3).clamp(0.0, 1.0);

        // Corrector.
        let eta = 1.0 - sigma;
        let dxa_s = (&aff.x_lin).component_div(&scaling.w_lin);
        let dsa_s = (&aff.s_lin).component_mul(&scaling.w_lin);
        let rhs_lin = rhs_lin + DVector::from_element(sf.n_lin(), sigma * mu) - dxa_s.component_mul(&dsa_s);
        let mut rhs_psd = rhs_psd + DMatrix::identity(d, d) * (sigma * mu);
        if d > 0 {
            let dx_t = &scaling.r_inv * &aff.x_psd * scaling.r_inv.transpose();
            let ds_t = scaling.r.transpose() * &aff.s_psd * &scaling.r;
            let prod = &dx_t * &ds_t;
            rhs_psd -= (&prod + prod.transpose()) * 0.5;
        }
        let rhs_tk = rhs_tk + sigma * mu - aff.tau * aff.kappa;
        let Some(dir) = direction(sf, &it, &res, &scaling, &system, &fixed, eta, &rhs_lin, &rhs_psd, rhs_tk) else {
            return IpmResult { outcome: Outcome::Failed, point: it, iterations: iter };
        };
        let alpha = (STEP_FRACTION * max_step(&it, &dir, &scaling)).min(1.0);
        if let Some(w) = trace.as_deref_mut() {
            let _ = writeln!(w, " sigma {sigma:8.2e} step {alpha:8.2e}");
        }
        if alpha < 1e-10 {
            return IpmResult { outcome: Outcome::Failed, point: it, iterations: iter };
        }

        it.x_free.axpy(alpha, &dir.x_free, 1.0);
        it.x_lin.axpy(alpha, &dir.x_lin, 1.0);
        it.x_psd += &dir.x_psd * alpha;
        it.y.axpy(alpha, &dir.y, 1.0);
        it.s_lin.axpy(alpha, &dir.s_lin, 1.0);
        it.s_psd += &dir.s_psd * alpha;
        it.tau += alpha * dir.tau;
        it.kappa += alpha * dir.kappa;
        symmetrize(&mut it.x_psd);
        symmetrize(&mut it.s_psd);
    }
    IpmResult { outcome: Outcome::Failed, point: it, iterations: opts.max_iters }
}

fn mat_amax(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

fn vec_amax(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

fn inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

fn complementarity(it: &Iterate) -> f64 {
    it.x_lin.dot(&it.s_lin) + inner(&it.x_psd, &it.s_psd) + it.tau * it.kappa
}

fn objective(sf: &StandardForm, it: &Iterate) -> f64 {
    sf.c_free.dot(&it.x_free) + sf.c_lin.dot(&it.x_lin) + inner(&sf.c_psd, &it.x_psd)
}

fn residuals(sf: &StandardForm, it: &Iterate) -> Residuals {
    let ax = sf.apply(&it.x_free, &it.x_lin, &it.x_psd);
    let (atf, atl, ats) = sf.apply_transpose(&it.y);
    Residuals {
        p: &sf.b * it.tau - ax,
        d_free: &sf.c_free * it.tau - atf,
        d_lin: &sf.c_lin * it.tau - atl - &it.s_lin,
        d_psd: &sf.c_psd * it.tau - ats - &it.s_psd,
        g: it.kappa + objective(sf, it) - sf.b.dot(&it.y),
    }
}

fn dual_residual_norm(r: &Residuals) -> f64 {
    vec_amax(&r.d_free).max(vec_amax(&r.d_lin)).max(mat_amax(&r.d_psd))
}

/// How far `(y, s)` and `x` are from Farkas certificates, each relative to
/// the objective value that makes it one: `‖Aᵀy + s‖ / bᵀy` and `‖Ax‖ / -cᵀx`.
/// Infinite when the sign is wrong.
fn infeasibility_ratios(sf: &StandardForm, it: &Iterate) -> (f64, f64) {
    let by = sf.b.dot(&it.y);
    let primal = if by > 0.0 {
        let (atf, atl, ats) = sf.apply_transpose(&it.y);
        let lhs = vec_amax(&atf)
            .max(vec_amax(&(atl + &it.s_lin)))
            .max(mat_amax(&(ats + &it.s_psd)));
        lhs / by
    } else {
        f64::INFINITY
    };
    let cx = objective(sf, it);
    let dual = if cx < 0.0 {
        let ax = sf.apply(&it.x_free, &it.x_lin, &it.x_psd);
        vec_amax(&ax) / -cx
    } else {
        f64::INFINITY
    };
    (primal, dual)
}

fn infeasibility(sf: &StandardForm, it: &Iterate, tol: f64) -> Option<Outcome> {
    let (primal, dual) = infeasibility_ratios(sf, it);
    if primal <= tol {
        Some(Outcome::PrimalInfeasible)
    } else if dual <= tol {
        Some(Outcome::DualInfeasible)
    } else {
        None
    }
}

fn nt_scaling(it: &Iterate) -> Option<Scaling> {
    let w_lin = it.x_lin.zip_map(&it.s_lin, |x, s| (x / s).sqrt());
    let lambda_lin = it.x_lin.zip_map(&it.s_lin, |x, s| (x * s).sqrt());
    let d = it.x_psd.nrows();
    if d == 0 {
        let e = DMatrix::zeros(0, 0);
        return Some(Scaling {
            w_lin,
            lambda_lin,
            r: e.clone(),
            r_inv: e.clone(),
            lambda_psd: DVector::zeros(0),
            w: e.clone(),
            chol_x: e.clone(),
            chol_s: e,
        });
    }
    let lx = it.x_psd.clone().cholesky()?.l();
    let ls = it.s_psd.clone().cholesky()?.l();
    let svd = (ls.transpose() * &lx).svd(true, true);
    let u_t = svd.v_t?;
    let v = u_t.transpose();
    let lambda = svd.singular_values;
    if lambda.iter().any(|&l| !(l > 0.0)) {
        return None;
    }
    let inv_sqrt = lambda.map(|l| 1.0 / l.sqrt());
    let sqrt = lambda.map(|l| l.sqrt());
    let r = &lx * &v * DMatrix::from_diagonal(&inv_sqrt);
    let lx_inv = lx.clone().solve_lower_triangular(&DMatrix::identity(d, d))?;
    let r_inv = DMatrix::from_diagonal(&sqrt) * v.transpose() * lx_inv;
    let w = &r * r.transpose();
    Some(Scaling {
        w_lin,
        lambda_lin,
        r,
        r_inv,
        lambda_psd: lambda,
        w,
        chol_x: lx,
        chol_s: ls,
    })
}

/// `W² U = W U W` on the PSD block.
fn scale_psd(s: &Scaling, u: &DMatrix<f64>) -> DMatrix<f64> {
    &s.w * u * &s.w
}

fn newton_system(sf: &StandardForm, sc: &Scaling) -> Option<NewtonSystem> {
    let m = sf.m;
    let d = sf.dim;
    let mut schur = DMatrix::zeros(m, m);
    for (col, &w) in sf.lin_cols.iter().zip(sc.w_lin.iter()) {
        let w2 = w * w;
        for &(r1, v1) in col {
            for &(r2, v2) in col {
                schur[(r1, r2)] += w2 * v1 * v2;
            }
        }
    }
    if d > 0 {
        for k in 0..m {
            if sf.psd_rows[k].is_empty() {
                continue;
            }
            let mut g = DMatrix::zeros(d, d);
            for &(i, j, v) in &sf.psd_rows[k] {
                let wi = sc.w.column(i);
                let wj = sc.w.column(j);
                if i == j {
                    g.ger(v, &wi, &wi, 1.0);
                } else {
                    g.ger(0.5 * v, &wi, &wj, 1.0);
                    g.ger(0.5 * v, &wj, &wi, 1.0);
                }
            }
            for l in k..m {
                let val: f64 = sf.psd_rows[l].iter().map(|&(i, j, v)| v * g[(i, j)]).sum();
                schur[(k, l)] += val;
                if l != k {
                    schur[(l, k)] += val;
                }
            }
        }
    }
    let nf = sf.n_free();
    if nf == 0 {
        let reg = 1e-14 * (1.0 + vec_amax(&schur.diagonal()));
        let mut regularized = schur.clone();
        for i in 0..m {
            regularized[(i, i)] += reg;
        }
        let factor = match regularized.clone().cholesky() {
            Some(c) => Factor::Cholesky(c),
            None => Factor::Lu(regularized.lu()),
        };
        return Some(NewtonSystem { factor, kkt: schur });
    }
    let n = nf + m;
    let mut kkt = DMatrix::zeros(n, n);
    kkt.view_mut((nf, nf), (m, m)).copy_from(&schur);
    for (f, col) in sf.free_cols.iter().enumerate() {
        for &(r, v) in col {
            kkt[(f, nf + r)] = v;
            kkt[(nf + r, f)] = v;
        }
    }
    let lu = kkt.clone().lu();
    if !lu.is_invertible() {
        return None;
    }
    Some(NewtonSystem { factor: Factor::Lu(lu), kkt })
}

/// Parts of the Newton solution that depend on `dτ` only (fixed per iteration).
struct FixedPart {
    v_free: DVector<f64>,
    v_y: DVector<f64>,
    v_lin: DVector<f64>,
    v_psd: DMatrix<f64>,
}

impl FixedPart {
    fn new(sf: &StandardForm, sc: &Scaling, sys: &NewtonSystem) -> Option<Self> {
        let w2c_lin = sc.w_lin.map(|w| w * w).component_mul(&sf.c_lin);
        let w2c_psd = if sf.dim > 0 { scale_psd(sc, &sf.c_psd) } else { DMatrix::zeros(0, 0) };
        let q2 = sf.apply(&DVector::zeros(sf.n_free()), &w2c_lin, &w2c_psd) + &sf.b;
        let rhs = stack(&sf.c_free, &q2);
        let sol = sys.solve(&rhs)?;
        let nf = sf.n_free();
        let v_free = sol.rows(0, nf).into_owned();
        let v_y = sol.rows(nf, sf.m).into_owned();
        let (_, atl, ats) = sf.apply_transpose(&v_y);
        let v_lin = sc.w_lin.map(|w| w * w).component_mul(&atl) - w2c_lin;
        let v_psd = if sf.dim > 0 { scale_psd(sc, &ats) - w2c_psd } else { DMatrix::zeros(0, 0) };
        Some(FixedPart { v_free, v_y, v_lin, v_psd })
    }
}

fn stack(a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(a.len() + b.len(), a.iter().chain(b.iter()).copied())
}

/// Newton direction for residual reduction `eta` and scaled complementarity
/// targets `rhs_lin`, `rhs_psd` (in the NT-scaled frame) and `rhs_tk`.
#[allow(clippy::too_many_arguments)]
fn direction(
    sf: &StandardForm,
    it: &Iterate,
    res: &Residuals,
    sc: &Scaling,
    sys: &NewtonSystem,
    fixed: &FixedPart,
    eta: f64,
    rhs_lin: &DVector<f64>,
    rhs_psd: &DMatrix<f64>,
    rhs_tk: f64,
) -> Option<Direction> {
    let d = sf.dim;
    let w2 = sc.w_lin.map(|w| w * w);
    let h_lin = sc.w_lin.component_mul(&rhs_lin.component_div(&sc.lambda_lin));
    let h_psd = if d > 0 {
        let lam = &sc.lambda_psd;
        let z = DMatrix::from_fn(d, d, |i, j| 2.0 * rhs_psd[(i, j)] / (lam[i] + lam[j]));
        &sc.r * z * sc.r.transpose()
    } else {
        DMatrix::zeros(0, 0)
    };
    let w2rd_lin = w2.component_mul(&res.d_lin) * eta;
    let w2rd_psd = if d > 0 { scale_psd(sc, &res.d_psd) * eta } else { DMatrix::zeros(0, 0) };

    let p1 = &res.d_free * eta;
    let p2 = &res.p * eta - sf.apply(&DVector::zeros(sf.n_free()), &h_lin, &h_psd)
        + sf.apply(&DVector::zeros(sf.n_free()), &w2rd_lin, &w2rd_psd);
    let sol = sys.solve(&stack(&p1, &p2))?;
    let nf = sf.n_free();
    let u_free = sol.rows(0, nf).into_owned();
    let u_y = sol.rows(nf, sf.m).into_owned();
    let (_, atl, ats) = sf.apply_transpose(&u_y);
    let u_lin = &h_lin - &w2rd_lin + w2.component_mul(&atl);
    let u_psd = if d > 0 { &h_psd - &w2rd_psd + scale_psd(sc, &ats) } else { DMatrix::zeros(0, 0) };

    let c_dot = |f: &DVector<f64>, l: &DVector<f64>, p: &DMatrix<f64>| {
        sf.c_free.dot(f) + sf.c_lin.dot(l) + inner(&sf.c_psd, p)
    };
    let denom = -it.kappa / it.tau + c_dot(&fixed.v_free, &fixed.v_lin, &fixed.v_psd) - sf.b.dot(&fixed.v_y);
    let numer = -eta * res.g - rhs_tk / it.tau - c_dot(&u_free, &u_lin, &u_psd) + sf.b.dot(&u_y);
    if denom == 0.0 || !denom.is_finite() {
        return None;
    }
    let dtau = numer / denom;

    let mut x_free = u_free + &fixed.v_free * dtau;
    let mut y = u_y + &fixed.v_y * dtau;
    let mut x_lin = u_lin + &fixed.v_lin * dtau;
    let mut x_psd = u_psd + &fixed.v_psd * dtau;

    // Refine against `A dx - b dτ = η r_p` with the exact operator; the
    // assembled Schur complement loses accuracy as the scaling degenerates.
    for _ in 0..2 {
        let err = &res.p * eta + &sf.b * dtau - sf.apply(&x_free, &x_lin, &x_psd);
        let corr = sys.solve(&stack(&DVector::zeros(sf.n_free()), &err))?;
        let c_free = corr.rows(0, nf).into_owned();
        let c_y = corr.rows(nf, sf.m).into_owned();
        let (_, atl, ats) = sf.apply_transpose(&c_y);
        x_free += c_free;
        x_lin += w2.component_mul(&atl);
        if d > 0 {
            x_psd += scale_psd(sc, &ats);
        }
        y += c_y;
    }
    let (_, atl, ats) = sf.apply_transpose(&y);
    let s_lin = &res.d_lin * eta - atl + &sf.c_lin * dtau;
    let mut s_psd = &res.d_psd * eta - ats + &sf.c_psd * dtau;
    symmetrize(&mut x_psd);
    symmetrize(&mut s_psd);
    let dkappa = (rhs_tk - it.kappa * dtau) / it.tau;
    let dir = Direction { x_free, x_lin, x_psd, y, s_lin, s_psd, tau: dtau, kappa: dkappa };
    if !dir.tau.is_finite() || dir.y.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some(dir)
}

/// Largest `α` keeping the iterate inside the cone (capped at a large value).
fn max_step(it: &Iterate, dir: &Direction, sc: &Scaling) -> f64 {
    let mut alpha = 1e6_f64;
    for (x, dx) in it.x_lin.iter().zip(dir.x_lin.iter()).chain(it.s_lin.iter().zip(dir.s_lin.iter())) {
        if *dx < 0.0 {
            alpha = alpha.min(-x / dx);
        }
    }
    if dir.tau < 0.0 {
        alpha = alpha.min(-it.tau / dir.tau);
    }
    if dir.kappa < 0.0 {
        alpha = alpha.min(-it.kappa / dir.kappa);
    }
    if it.x_psd.nrows() > 0 {
        alpha = alpha.min(psd_step(&sc.chol_x, &dir.x_psd));
        alpha = alpha.min(psd_step(&sc.chol_s, &dir.s_psd));
    }
    alpha
}

/// Largest `α` with `L Lᵀ + α Δ ⪰ 0`.
fn psd_step(l: &DMatrix<f64>, delta: &DMatrix<f64>) -> f64 {
    let Some(t) = l.clone().solve_lower_triangular(delta) else {
        return 0.0;
    };
    let Some(mut t) = l.clone().solve_lower_triangular(&t.transpose()) else {
        return 0.0;
    };
    symmetrize(&mut t);
    let min_eig = SymmetricEigen::new(t).eigenvalues.min();
    if min_eig < 0.0 {
        -1.0 / min_eig
    } else {
        f64::INFINITY
    }
}
