//! Dense univariate polynomials over `f64` and the density-evolution
//! polynomial `P(x) = x - λ(1 - ρ(1 - εx))`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::ensemble::DegreeDistribution;
use crate::error::{Error, Result};

/// Trailing coefficients at or below this magnitude are dropped.
pub const TRIM_TOLERANCE: f64 = 1e-14;

/// Largest constant-term residue tolerated before `P(0)` is pinned to zero.
const ORIGIN_RESIDUE_LIMIT: f64 = 1e-12;

/// Dense polynomial in the monomial basis; `coeffs[k]` multiplies `x^k`.
///
/// The zero polynomial stores no coefficients and has no degree
/// (conventionally `-1`).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "Vec<f64>", into = "Vec<f64>")]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl From<Vec<f64>> for Polynomial {
    fn from(coeffs: Vec<f64>) -> Self {
        Polynomial::new(coeffs)
    }
}

impl From<Polynomial> for Vec<f64> {
    fn from(p: Polynomial) -> Self {
        p.coeffs
    }
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        let mut p = Polynomial { coeffs };
        p.trim();
        p
    }

    pub fn zero() -> Self {
        Polynomial { coeffs: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Polynomial::new(vec![c])
    }

    /// The identity polynomial `x`.
    pub fn x() -> Self {
        Polynomial::monomial(1, 1.0)
    }

    /// `c · x^k`
    pub fn monomial(k: usize, c: f64) -> Self {
        let mut coeffs = vec![0.0; k + 1];
        coeffs[k] = c;
        Polynomial::new(coeffs)
    }

    fn trim(&mut self) {
        while let Some(&last) = self.coeffs.last() {
            if last.abs() <= TRIM_TOLERANCE {
                self.coeffs.pop();
            } else {
                break;
            }
        }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient of `x^k`, zero past the stored degree.
    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Horner evaluation.
    pub fn evaluate(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(other.coeffs.len());
        Polynomial::new((0..n).map(|k| self.coeff(k) + other.coeff(k)).collect())
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Polynomial {
        Polynomial::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    /// Full convolution product.
    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        if self.is_zero() || other.is_zero() {
            return Polynomial::zero();
        }
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }

    /// `self^k` by repeated multiplication; `power(0)` is the constant 1.
    pub fn power(&self, k: usize) -> Polynomial {
        (0..k).fold(Polynomial::constant(1.0), |acc, _| acc.mul(self))
    }

    /// `self(inner(x))`, accumulated Horner-style.
    pub fn compose(&self, inner: &Polynomial) -> Polynomial {
        self.coeffs
            .iter()
            .rev()
            .fold(Polynomial::zero(), |acc, &c| acc.mul(inner).add(&Polynomial::constant(c)))
    }

    pub fn derivative(&self) -> Polynomial {
        Polynomial::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| k as f64 * c)
                .collect(),
        )
    }

    /// Copy with the constant term replaced by `c`.
    pub fn with_constant_term(&self, c: f64) -> Polynomial {
        let mut coeffs = self.coeffs.clone();
        if coeffs.is_empty() {
            coeffs.push(c);
        } else {
            coeffs[0] = c;
        }
        Polynomial::new(coeffs)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            if !first {
                write!(f, " {} ", if c < 0.0 { '-' } else { '+' })?;
            } else if c < 0.0 {
                write!(f, "-")?;
            }
            first = false;
            let a = c.abs();
            match k {
                0 => write!(f, "{a}")?,
                1 => write!(f, "{a}x")?,
                _ => write!(f, "{a}x^{k}")?,
            }
        }
        Ok(())
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        Polynomial::add(self, rhs)
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        Polynomial::sub(self, rhs)
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        Polynomial::mul(self, rhs)
    }
}

impl Mul<f64> for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: f64) -> Polynomial {
        self.scale(rhs)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

pub(crate) fn check_epsilon_closed(eps: f64) -> Result<()> {
    if eps.is_finite() && (0.0..=1.0).contains(&eps) {
        Ok(())
    } else {
        Err(Error::InvalidEpsilon(eps, "[0, 1]"))
    }
}

/// Inner polynomial `1 - ρ(1 - εx)` shared by the density-evolution forms.
pub(crate) fn check_node_transfer(rho: &DegreeDistribution, eps: f64) -> Polynomial {
    let arg = Polynomial::new(vec![1.0, -eps]);
    let composed = rho.polynomial().compose(&arg);
    // ρ(1) = 1, so the constant term is 0 up to rounding.
    (&Polynomial::constant(1.0) - &composed).with_constant_term(0.0)
}

/// `P(x) = x - Σ λ_i (1 - ρ(1 - εx))^{i-1}`, nonnegative on `[0, 1]` exactly
/// when the ensemble decodes to zero erasures at erasure probability `eps`.
///
/// The constant term vanishes analytically and is pinned to `0.0`.
pub fn de_polynomial(lambda: &DegreeDistribution, rho: &DegreeDistribution, eps: f64) -> Result<Polynomial> {
    check_epsilon_closed(eps)?;
    lambda.validate()?;
    rho.validate()?;
    let inner = check_node_transfer(rho, eps);
    let composed = lambda.polynomial().compose(&inner);
    let p = &Polynomial::x() - &composed;
    let residue = p.coeff(0);
    assert!(
        residue.abs() <= ORIGIN_RESIDUE_LIMIT,
        "P(0) residue {residue} exceeds {ORIGIN_RESIDUE_LIMIT}"
    );
    Ok(p.with_constant_term(0.0))
}

/// Expands `(a_1 x + a_2 x^2 + … + a_n x^n)^power` by the multinomial theorem.
///
/// `a[l - 1]` holds `a_l`. Entry `m` of the result is the coefficient of `x^m`.
/// This does not go through [`Polynomial::mul`], so it can serve as an
/// independent check of [`Polynomial::power`].
pub fn multinomial_power(a: &[f64], power: usize) -> Vec<f64> {
    let n = a.len();
    let mut out = vec![0.0; n * power + 1];
    if n == 0 {
        if power == 0 {
            out[0] = 1.0;
        }
        return out;
    }
    let log_fact: Vec<f64> = (0..=power).scan(0.0, |s, k| {
        if k > 0 {
            *s += (k as f64).ln();
        }
        Some(*s)
    }).collect();
    let mut counts = vec![0usize; n];
    fn visit(
        slot: usize,
        remaining: usize,
        counts: &mut [usize],
        a: &[f64],
        log_fact: &[f64],
        power: usize,
        out: &mut [f64],
    ) {
        if slot + 1 == counts.len() {
            counts[slot] = remaining;
            let mut log_coeff = log_fact[power];
            let mut prod = 1.0;
            let mut m = 0;
            for (l, &c) in counts.iter().enumerate() {
                log_coeff -= log_fact[c];
                prod *= a[l].powi(c as i32);
                m += (l + 1) * c;
            }
            out[m] += log_coeff.exp().round() * prod;
            return;
        }
        for c in 0..=remaining {
            counts[slot] = c;
            visit(slot + 1, remaining - c, counts, a, log_fact, power, out);
        }
    }
    visit(0, power, &mut counts, a, &log_fact, power, &mut out);
    out
}

/// Closed-form coefficients `p_0..=p_q` of the density-evolution polynomial
/// for a check-regular ensemble `ρ(x) = x^n`.
///
/// Each `(1 - (1 - εx)^n)^{i-1}` is expanded by [`multinomial_power`] with
/// `a_l = (-1)^{l+1} C(n, l) ε^l`, then `p_j = [j = 1] - Σ_i λ_i φ_{j,i-1}`.
pub fn lemma2_coefficients(lambda: &DegreeDistribution, n: usize, eps: f64) -> Vec<f64> {
    assert!(n >= 1, "check-node exponent must be positive");
    let a: Vec<f64> = (1..=n)
        .map(|l| {
            let sign = if l % 2 == 1 { 1.0 } else { -1.0 };
            sign * binomial(n, l) * eps.powi(l as i32)
        })
        .collect();
    let max_var = lambda.max_degree();
    let q = n * (max_var - 1);
    let mut p = vec![0.0; q.max(1) + 1];
    p[1] = 1.0;
    for (i, weight) in lambda.iter() {
        let psi = multinomial_power(&a, i - 1);
        for (j, phi) in psi.iter().enumerate() {
            p[j] -= weight * phi;
        }
    }
    p
}

/// Binomial coefficient `C(n, k)` as a float (zero when `k > n`).
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64).round()
}
