//! Edge-perspective degree distributions, ensemble arithmetic and the
//! zero-error density-evolution check.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polynomial::{de_polynomial, Polynomial};

/// Tolerance on `Σ coefficients = 1`.
pub const SIMPLEX_TOLERANCE: f64 = 1e-9;

/// Minimum of `P` on `[0, 1]` accepted as zero-error decodable.
pub const FEASIBILITY_TOLERANCE: f64 = -1e-9;

pub const GRID_POINTS: usize = 10_001;
pub const CRITICAL_SCAN_POINTS: usize = 4_096;

/// Edge-perspective degree distribution `Σ_i c_i x^{i-1}`, keyed by node degree `i ≥ 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<usize, f64>", into = "BTreeMap<usize, f64>")]
pub struct DegreeDistribution {
    entries: BTreeMap<usize, f64>,
}

impl TryFrom<BTreeMap<usize, f64>> for DegreeDistribution {
    type Error = Error;
    fn try_from(entries: BTreeMap<usize, f64>) -> Result<Self> {
        let d = DegreeDistribution { entries };
        d.validate()?;
        Ok(d)
    }
}

impl From<DegreeDistribution> for BTreeMap<usize, f64> {
    fn from(d: DegreeDistribution) -> Self {
        d.entries
    }
}

impl DegreeDistribution {
    /// Validating constructor. Repeated degrees are summed.
    pub fn new(entries: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (i, c) in entries {
            *map.entry(i).or_insert(0.0) += c;
        }
        DegreeDistribution::try_from(map)
    }

    /// Regular distribution: all edges on degree-`degree` nodes.
    pub fn regular(degree: usize) -> Result<Self> {
        DegreeDistribution::new([(degree, 1.0)])
    }

    /// Builds from nonnegative weights that need not sum to one (printed
    /// tables, solver output). Zero weights are dropped and values in
    /// `[-1e-7, 0)` are treated as rounding noise.
    pub fn normalized(weights: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (i, c) in weights {
            if !c.is_finite() || c < -1e-7 {
                return Err(Error::InvalidDistribution(format!("weight {c} for degree {i}")));
            }
            if c > 0.0 {
                *map.entry(i).or_insert(0.0) += c;
            }
        }
        let total: f64 = map.values().sum();
        if total <= 0.0 {
            return Err(Error::InvalidDistribution("weights sum to zero".into()));
        }
        for c in map.values_mut() {
            *c /= total;
        }
        DegreeDistribution::try_from(map)
    }

    pub fn validate(&self) -> Result<()> {
        if self.entries.is_empty() {
            return Err(Error::InvalidDistribution("no entries".into()));
        }
        for (&i, &c) in &self.entries {
            if i < 2 {
                return Err(Error::InvalidDistribution(format!("degree {i} is below 2")));
            }
            if !(0.0..=1.0).contains(&c) {
                return Err(Error::InvalidDistribution(format!("coefficient {c} for degree {i} is outside [0, 1]")));
            }
        }
        let total: f64 = self.entries.values().sum();
        if (total - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("coefficients sum to {total}, not 1")));
        }
        Ok(())
    }

    /// `(degree, coefficient)` pairs in increasing degree.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.entries.iter().map(|(&i, &c)| (i, c))
    }

    /// Coefficient for node degree `i` (zero when absent).
    pub fn get(&self, i: usize) -> f64 {
        self.entries.get(&i).copied().unwrap_or(0.0)
    }

    /// Largest node degree present.
    pub fn max_degree(&self) -> usize {
        self.entries.keys().next_back().copied().unwrap_or(0)
    }

    /// `Σ_i c_i x^{i-1}`
    pub fn polynomial(&self) -> Polynomial {
        let mut coeffs = vec![0.0; self.max_degree()];
        for (i, c) in self.iter() {
            coeffs[i - 1] += c;
        }
        Polynomial::new(coeffs)
    }

    /// `Σ_i c_i / i`
    pub fn inverse_mean(&self) -> f64 {
        self.iter().map(|(i, c)| c / i as f64).sum()
    }

    /// Derivative of the edge polynomial at one, `Σ_i c_i (i-1)`.
    pub fn derivative_at_one(&self) -> f64 {
        self.iter().map(|(i, c)| c * (i - 1) as f64).sum()
    }
}

/// One design point: a variable-node distribution, a check-node
/// distribution and the channel erasure probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawEnsembleSpec")]
pub struct EnsembleSpec {
    pub lambda: DegreeDistribution,
    pub rho: DegreeDistribution,
    pub epsilon: f64,
}

#[derive(Deserialize)]
struct RawEnsembleSpec {
    lambda: DegreeDistribution,
    rho: DegreeDistribution,
    epsilon: f64,
}

impl TryFrom<RawEnsembleSpec> for EnsembleSpec {
    type Error = Error;
    fn try_from(raw: RawEnsembleSpec) -> Result<Self> {
        EnsembleSpec::new(raw.lambda, raw.rho, raw.epsilon)
    }
}

impl EnsembleSpec {
    pub fn new(lambda: DegreeDistribution, rho: DegreeDistribution, epsilon: f64) -> Result<Self> {
        if !(epsilon.is_finite() && (0.0..=1.0).contains(&epsilon)) {
            return Err(Error::InvalidEpsilon(epsilon, "[0, 1]"));
        }
        lambda.validate()?;
        rho.validate()?;
        Ok(EnsembleSpec { lambda, rho, epsilon })
    }

    pub fn design_rate(&self) -> f64 {
        design_rate(&self.lambda, &self.rho)
    }

    pub fn de_polynomial(&self) -> Polynomial {
        de_polynomial(&self.lambda, &self.rho, self.epsilon).expect("spec invariants hold")
    }
}

/// `R = 1 - (Σ ρ_j / j) / (Σ λ_i / i)`
pub fn design_rate(lambda: &DegreeDistribution, rho: &DegreeDistribution) -> f64 {
    1.0 - rho.inverse_mean() / lambda.inverse_mean()
}

/// `δ = 1 - R / (1 - ε)`
pub fn capacity_gap(rate: f64, eps: f64) -> Result<f64> {
    if !(eps.is_finite() && (0.0..1.0).contains(&eps)) {
        return Err(Error::InvalidEpsilon(eps, "[0, 1)"));
    }
    Ok(1.0 - rate / (1.0 - eps))
}

/// Largest `λ_2` compatible with zero-error decoding near the origin,
/// `1 / (ε ρ'(1))`.
pub fn stability_lambda2_bound(rho: &DegreeDistribution, eps: f64) -> Result<f64> {
    if !(eps.is_finite() && eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidEpsilon(eps, "(0, 1]"));
    }
    Ok(1.0 / (eps * rho.derivative_at_one()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckMode {
    /// Uniform grid only.
    Grid,
    /// Grid plus every critical point of `P` inside `(0, 1)`.
    Minimum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub worst_x: f64,
    pub worst_value: f64,
}

/// Checks `P(x) = x - λ(1 - ρ(1 - εx)) ≥ 0` on `[0, 1]`.
///
/// `P` is evaluated through `λ` and `ρ` rather than its expanded
/// coefficients, which cancel badly once the degree passes a few dozen.
pub fn check_de_feasible(spec: &EnsembleSpec, mode: CheckMode) -> FeasibilityReport {
    let (lam, rho, eps) = (spec.lambda.polynomial(), spec.rho.polynomial(), spec.epsilon);
    let (dlam, drho) = (lam.derivative(), rho.derivative());
    let p = |x: f64| x - lam.evaluate(1.0 - rho.evaluate(1.0 - eps * x));
    let dp = |x: f64| {
        let z = 1.0 - eps * x;
        1.0 - eps * dlam.evaluate(1.0 - rho.evaluate(z)) * drho.evaluate(z)
    };
    check_nonnegative(p, dp, mode)
}

/// Minimum search for an arbitrary polynomial on `[0, 1]`, same rules as
/// [`check_de_feasible`].
pub fn check_polynomial_nonnegative(p: &Polynomial, mode: CheckMode) -> FeasibilityReport {
    let dp = p.derivative();
    check_nonnegative(|x| p.evaluate(x), |x| dp.evaluate(x), mode)
}

fn check_nonnegative(p: impl Fn(f64) -> f64, dp: impl Fn(f64) -> f64, mode: CheckMode) -> FeasibilityReport {
    let mut worst = (0.0, p(0.0));
    let mut consider = |x: f64| {
        let v = p(x);
        if v < worst.1 {
            worst = (x, v);
        }
    };
    let last = (GRID_POINTS - 1) as f64;
    for k in 0..GRID_POINTS {
        consider(k as f64 / last);
    }
    if mode == CheckMode::Minimum {
        for x in critical_points(dp) {
            consider(x);
        }
    }
    FeasibilityReport {
        feasible: worst.1 >= FEASIBILITY_TOLERANCE,
        worst_x: worst.0,
        worst_value: worst.1,
    }
}

/// Roots of `dp` in `(0, 1)` located by bisection between sign changes on
/// a uniform scan.
fn critical_points(dp: impl Fn(f64) -> f64) -> Vec<f64> {
    let n = CRITICAL_SCAN_POINTS;
    let mut roots = Vec::new();
    let mut prev_x = 0.0;
    let mut prev_v = dp(0.0);
    for k in 1..n {
        let x = k as f64 / (n - 1) as f64;
        let v = dp(x);
        if v == 0.0 {
            roots.push(x);
        } else if prev_v != 0.0 && prev_v.signum() != v.signum() {
            let (mut lo, mut hi, mut flo) = (prev_x, x, prev_v);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                let fm = dp(mid);
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if fm.signum() == flo.signum() {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        prev_x = x;
        prev_v = v;
    }
    roots
}

#[cfg(test)]
mod tests {
    use super::*;

    fn code(entries: &[(usize, f64)]) -> DegreeDistribution {
        DegreeDistribution::normalized(entries.iter().copied()).unwrap()
    }

    #[test]
    fn rejects_invalid_distributions() {
        assert!(DegreeDistribution::new([(1, 1.0)]).is_err());
        assert!(DegreeDistribution::new([(2, 0.5), (3, 0.4)]).is_err());
        assert!(DegreeDistribution::new([(2, -0.1), (3, 1.1)]).is_err());
        assert!(DegreeDistribution::new(Vec::new()).is_err());
        assert!(DegreeDistribution::normalized([(2, 0.0)]).is_err());
        assert!(DegreeDistribution::new([(2, 0.5), (3, 0.5)]).is_ok());
    }

    #[test]
    fn polynomial_uses_edge_exponents() {
        let d = DegreeDistribution::new([(2, 0.25), (4, 0.75)]).unwrap();
        assert_eq!(d.polynomial().coeffs(), &[0.0, 0.25, 0.0, 0.75]);
        assert_eq!(d.max_degree(), 4);
        assert!((d.derivative_at_one() - 2.5).abs() < 1e-15);
    }

    #[test]
    fn design_rates() {
        let x = DegreeDistribution::regular(2).unwrap();
        assert_eq!(design_rate(&x, &x), 0.0);
        let code1 = code(&[(2, 0.5208), (3, 0.1458), (5, 0.3333)]);
        let r = design_rate(&code1, &DegreeDistribution::regular(4).unwrap());
        assert!((r - 0.3346).abs() < 5e-4, "{r}");
        let code5 = code(&[(2, 0.4331), (3, 0.1583), (5, 0.4086)]);
        let r = design_rate(&code5, &DegreeDistribution::regular(8).unwrap());
        assert!((r - 0.6439).abs() < 5e-4, "{r}");
    }

    #[test]
    fn gaps() {
        assert_eq!(capacity_gap(0.6, 0.4).unwrap(), 0.0);
        assert!((capacity_gap(0.4922, 0.49).unwrap() - 0.0349).abs() < 1e-3);
        assert!((capacity_gap(0.593, 0.38).unwrap() - 0.0435).abs() < 1e-3);
        assert!(capacity_gap(0.5, 1.0).is_err());
    }

    #[test]
    fn stability_bounds() {
        let b = stability_lambda2_bound(&DegreeDistribution::regular(4).unwrap(), 0.64).unwrap();
        assert!((b - 0.520833).abs() < 1e-6);
        assert!((b - 0.5208).abs() < 1e-4);
        let b = stability_lambda2_bound(&DegreeDistribution::regular(6).unwrap(), 0.49).unwrap();
        assert!((b - 0.408163).abs() < 1e-6);
        assert!(0.4021 <= b);
        let b = stability_lambda2_bound(&DegreeDistribution::regular(2).unwrap(), 0.25).unwrap();
        assert_eq!(b, 4.0);
        assert!(stability_lambda2_bound(&DegreeDistribution::regular(2).unwrap(), 0.0).is_err());
    }

    #[test]
    fn feasibility_checks() {
        let x = DegreeDistribution::regular(2).unwrap();
        let spec = EnsembleSpec::new(x.clone(), x, 0.5).unwrap();
        let r = check_de_feasible(&spec, CheckMode::Minimum);
        assert!(r.feasible);
        assert_eq!(r.worst_x, 0.0);
        assert_eq!(r.worst_value, 0.0);

        let lambda = code(&[(2, 0.4021), (3, 0.2137), (7, 0.3902)]);
        let rho = DegreeDistribution::regular(6).unwrap();
        let spec = EnsembleSpec::new(lambda.clone(), rho.clone(), 0.49).unwrap();
        assert!(check_de_feasible(&spec, CheckMode::Grid).feasible);
        assert!(check_de_feasible(&spec, CheckMode::Minimum).feasible);

        let spec = EnsembleSpec::new(lambda, rho, 0.60).unwrap();
        let r = check_de_feasible(&spec, CheckMode::Minimum);
        assert!(!r.feasible);
        assert!(r.worst_value < 0.0 && r.worst_x > 0.0);
    }

    #[test]
    fn critical_points_find_interior_minimum() {
        // (x - 0.3)^2 - 1e-6 dips below zero only near 0.3.
        let p = Polynomial::new(vec![0.09 - 1e-6, -0.6, 1.0]);
        let r = check_polynomial_nonnegative(&p, CheckMode::Minimum);
        assert!(!r.feasible);
        assert!((r.worst_x - 0.3).abs() < 1e-12);
        assert!((r.worst_value + 1e-6).abs() < 1e-12);
    }

    #[test]
    fn spec_json_schema() {
        let json = r#"{"lambda": {"2": 0.4, "3": 0.2, "7": 0.4}, "rho": {"6": 1.0}, "epsilon": 0.49}"#;
        let spec: EnsembleSpec = serde_json::from_str(json).unwrap();
        assert_eq!(spec.rho.max_degree(), 6);
        assert_eq!(spec.lambda.get(7), 0.4);
        let back = serde_json::to_string(&spec).unwrap();
        let again: EnsembleSpec = serde_json::from_str(&back).unwrap();
        assert_eq!(spec, again);

        let bad = r#"{"lambda": {"1": 1.0}, "rho": {"6": 1.0}, "epsilon": 0.49}"#;
        assert!(serde_json::from_str::<EnsembleSpec>(bad).is_err());
        let bad = r#"{"lambda": {"2": 1.0}, "rho": {"6": 1.0}, "epsilon": 1.49}"#;
        assert!(serde_json::from_str::<EnsembleSpec>(bad).is_err());
    }
}
