use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Minimize,
    Maximize,
}

/// Domain of a scalar decision variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum VarKind {
    Free,
    NonNegative,
    /// `lo ≤ x ≤ hi`; either side may be infinite.
    Boxed { lo: f64, hi: f64 },
}

/// Handle to a scalar variable or to an entry of the PSD block.
///
/// `Psd(i, j)` and `Psd(j, i)` name the same symmetric entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarRef {
    Scalar(usize),
    Psd(usize, usize),
}

impl VarRef {
    pub(crate) fn canonical(self) -> VarRef {
        match self {
            VarRef::Psd(i, j) if i > j => VarRef::Psd(j, i),
            other => other,
        }
    }
}

/// Sparse linear form `Σ coef · var`. A `Psd(i, j)` term multiplies the
/// single entry `B_ij`, not `B_ij + B_ji`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearForm {
    terms: Vec<(VarRef, f64)>,
}

impl LinearForm {
    pub fn new() -> Self {
        LinearForm::default()
    }

    pub fn add(&mut self, var: VarRef, coef: f64) -> &mut Self {
        if coef != 0.0 {
            self.terms.push((var.canonical(), coef));
        }
        self
    }

    pub fn with(mut self, var: VarRef, coef: f64) -> Self {
        self.add(var, coef);
        self
    }

    pub fn terms(&self) -> &[(VarRef, f64)] {
        &self.terms
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.iter().fold(0.0, |m, (_, c)| m.max(c.abs()))
    }

    pub fn scaled(&self, s: f64) -> LinearForm {
        LinearForm {
            terms: self.terms.iter().map(|&(v, c)| (v, c * s)).collect(),
        }
    }

    pub fn evaluate(&self, scalars: &[f64], psd: Option<&DMatrix<f64>>) -> f64 {
        self.terms
            .iter()
            .map(|&(v, c)| match v {
                VarRef::Scalar(k) => c * scalars[k],
                VarRef::Psd(i, j) => c * psd.map_or(0.0, |b| b[(i, j)]),
            })
            .sum()
    }
}

impl FromIterator<(VarRef, f64)> for LinearForm {
    fn from_iter<T: IntoIterator<Item = (VarRef, f64)>>(iter: T) -> Self {
        let mut form = LinearForm::new();
        for (v, c) in iter {
            form.add(v, c);
        }
        form
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarVar {
    pub name: String,
    pub kind: VarKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Equality {
    pub form: LinearForm,
    pub rhs: f64,
}

/// Conic program over scalar variables and at most one symmetric PSD block:
///
/// ```text
/// optimize  objective(x, B) + constant
/// s.t.      form_k(x, B) = rhs_k
///           x_i ∈ kind_i,  B ⪰ 0
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct ConicProblem {
    pub sense: Sense,
    pub objective: LinearForm,
    pub objective_constant: f64,
    pub scalars: Vec<ScalarVar>,
    pub psd_dim: usize,
    pub equalities: Vec<Equality>,
}

impl ConicProblem {
    pub fn new(sense: Sense) -> Self {
        ConicProblem {
            sense,
            objective: LinearForm::new(),
            objective_constant: 0.0,
            scalars: Vec::new(),
            psd_dim: 0,
            equalities: Vec::new(),
        }
    }

    pub fn add_scalar(&mut self, name: impl Into<String>, kind: VarKind) -> VarRef {
        self.scalars.push(ScalarVar { name: name.into(), kind });
        VarRef::Scalar(self.scalars.len() - 1)
    }

    pub fn set_psd_dim(&mut self, dim: usize) {
        self.psd_dim = dim;
    }

    pub fn set_objective(&mut self, form: LinearForm, constant: f64) {
        self.objective = form;
        self.objective_constant = constant;
    }

    pub fn add_equality(&mut self, form: LinearForm, rhs: f64) {
        self.equalities.push(Equality { form, rhs });
    }

    pub fn scalar_index(&self, name: &str) -> Option<usize> {
        self.scalars.iter().position(|v| v.name == name)
    }

    pub fn validate(&self) -> Result<()> {
        let check_form = |form: &LinearForm, what: &str| -> Result<()> {
            for &(v, c) in form.terms() {
                if !c.is_finite() {
                    return Err(Error::InvalidProblem(format!("{what} has non-finite coefficient")));
                }
                match v {
                    VarRef::Scalar(k) if k >= self.scalars.len() => {
                        return Err(Error::InvalidProblem(format!("{what} references undeclared scalar {k}")));
                    }
                    VarRef::Psd(i, j) if i >= self.psd_dim || j >= self.psd_dim => {
                        return Err(Error::InvalidProblem(format!(
                            "{what} references PSD entry ({i}, {j}) outside a block of dimension {}",
                            self.psd_dim
                        )));
                    }
                    _ => {}
                }
            }
            Ok(())
        };
        check_form(&self.objective, "objective")?;
        if !self.objective_constant.is_finite() {
            return Err(Error::InvalidProblem("objective constant is not finite".into()));
        }
        for (k, eq) in self.equalities.iter().enumerate() {
            check_form(&eq.form, &format!("equality {k}"))?;
            if !eq.rhs.is_finite() {
                return Err(Error::InvalidProblem(format!("equality {k} has non-finite rhs")));
            }
        }
        for v in &self.scalars {
            if let VarKind::Boxed { lo, hi } = v.kind {
                if lo.is_nan() || hi.is_nan() || lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                    return Err(Error::InvalidProblem(format!("variable {} has empty box [{lo}, {hi}]", v.name)));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

#[derive(Debug, Clone)]
pub struct ConicSolution {
    pub status: SolveStatus,
    /// One value per declared scalar variable.
    pub scalars: Vec<f64>,
    pub psd: Option<DMatrix<f64>>,
    /// Multipliers of the equalities, in the problem's own sense.
    pub duals: Vec<f64>,
    /// Primal objective including the constant.
    pub objective: f64,
    pub dual_objective: f64,
    pub gap: f64,
    /// Largest `|form_k - rhs_k|` over the equalities at the returned point.
    pub max_residual: f64,
    /// Smallest eigenvalue of the PSD block (`+inf` without one).
    pub psd_min_eigenvalue: f64,
    pub iterations: usize,
}

impl ConicSolution {
    pub fn value(&self, var: VarRef) -> f64 {
        match var.canonical() {
            VarRef::Scalar(k) => self.scalars[k],
            VarRef::Psd(i, j) => self.psd.as_ref().map_or(f64::NAN, |b| b[(i, j)]),
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}
