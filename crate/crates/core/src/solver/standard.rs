//! Lowering of [`ConicProblem`] to the internal standard form
//!
//! ```text
//! minimize  cᵀx   s.t.  A x = b,   x = (x_free, x_lin ≥ 0, X ⪰ 0)
//! ```
//!
//! with each row scaled to unit max-norm and the objective to unit max-norm.

use nalgebra::{DMatrix, DVector};

use super::problem::{ConicProblem, Sense, VarKind, VarRef};

/// How a user scalar maps onto internal variables: `value = offset + sign · internal`.
#[derive(Debug, Clone, Copy)]
enum Slot {
    Free(usize),
    Lin { index: usize, offset: f64, sign: f64 },
}

#[derive(Debug, Clone)]
pub(crate) struct StandardForm {
    pub m: usize,
    pub dim: usize,
    /// Sparse columns `(row, coef)` of the free block.
    pub free_cols: Vec<Vec<(usize, f64)>>,
    pub lin_cols: Vec<Vec<(usize, f64)>>,
    /// Per-row sparse entries `(i ≤ j, coef)` acting on `X_ij`.
    pub psd_rows: Vec<Vec<(usize, usize, f64)>>,
    pub c_free: DVector<f64>,
    pub c_lin: DVector<f64>,
    /// Symmetric matrix with `⟨C, X⟩` equal to the objective's PSD part.
    pub c_psd: DMatrix<f64>,
    pub b: DVector<f64>,
    /// Multiplier that undoes row scaling: `row_user = row_scaled / row_scale`.
    pub row_scale: DVector<f64>,
    pub obj_scale: f64,
    slots: Vec<Slot>,
    /// Constant added to the internal objective (internal sense, unscaled).
    obj_offset: f64,
    user_rows: usize,
    /// Original row index of each retained row, when empty rows were dropped.
    kept_rows: Option<Vec<usize>>,
}

/// Empty rows that cannot be satisfied make the problem trivially infeasible.
#[derive(Debug)]
pub(crate) struct TriviallyInfeasible;

impl StandardForm {
    pub fn from_problem(p: &ConicProblem) -> Result<Self, TriviallyInfeasible> {
        let sign_obj = match p.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let mut slots = Vec::with_capacity(p.scalars.len());
        let mut n_free = 0;
        let mut n_lin = 0;
        // Upper-bound rows appended after the user rows: (lin index u, lin index v, width)
        let mut box_rows = Vec::new();
        for v in &p.scalars {
            let slot = match v.kind {
                VarKind::Free => {
                    n_free += 1;
                    Slot::Free(n_free - 1)
                }
                VarKind::NonNegative => {
                    n_lin += 1;
                    Slot::Lin { index: n_lin - 1, offset: 0.0, sign: 1.0 }
                }
                VarKind::Boxed { lo, hi } => match (lo.is_finite(), hi.is_finite()) {
                    (false, false) => {
                        n_free += 1;
                        Slot::Free(n_free - 1)
                    }
                    (true, false) => {
                        n_lin += 1;
                        Slot::Lin { index: n_lin - 1, offset: lo, sign: 1.0 }
                    }
                    (false, true) => {
                        n_lin += 1;
                        Slot::Lin { index: n_lin - 1, offset: hi, sign: -1.0 }
                    }
                    (true, true) => {
                        n_lin += 2;
                        box_rows.push((n_lin - 2, n_lin - 1, hi - lo));
                        Slot::Lin { index: n_lin - 2, offset: lo, sign: 1.0 }
                    }
                },
            };
            slots.push(slot);
        }

        let user_rows = p.equalities.len();
        let m = user_rows + box_rows.len();
        let dim = p.psd_dim;
        let mut free_cols = vec![Vec::new(); n_free];
        let mut lin_cols = vec![Vec::new(); n_lin];
        let mut psd_rows = vec![Vec::new(); m];
        let mut b = DVector::zeros(m);

        for (row, eq) in p.equalities.iter().enumerate() {
            let mut rhs = eq.rhs;
            for &(v, c) in eq.form.terms() {
                match v {
                    VarRef::Scalar(k) => match slots[k] {
                        Slot::Free(f) => free_cols[f].push((row, c)),
                        Slot::Lin { index, offset, sign } => {
                            lin_cols[index].push((row, c * sign));
                            rhs -= c * offset;
                        }
                    },
                    VarRef::Psd(i, j) => psd_rows[row].push((i, j, c)),
                }
            }
            b[row] = rhs;
        }
        for (k, &(u, v, width)) in box_rows.iter().enumerate() {
            let row = user_rows + k;
            lin_cols[u].push((row, 1.0));
            lin_cols[v].push((row, 1.0));
            b[row] = width;
        }
        merge_duplicates(&mut free_cols);
        merge_duplicates(&mut lin_cols);
        for row in psd_rows.iter_mut() {
            row.sort_by_key(|&(i, j, _)| (i, j));
            row.dedup_by(|a, b| {
                if a.0 == b.0 && a.1 == b.1 {
                    b.2 += a.2;
                    true
                } else {
                    false
                }
            });
        }

        let mut c_free = DVector::zeros(n_free);
        let mut c_lin = DVector::zeros(n_lin);
        let mut c_psd = DMatrix::zeros(dim, dim);
        let mut obj_offset = 0.0;
        for &(v, c) in p.objective.terms() {
            let c = c * sign_obj;
            match v {
                VarRef::Scalar(k) => match slots[k] {
                    Slot::Free(f) => c_free[f] += c,
                    Slot::Lin { index, offset, sign } => {
                        c_lin[index] += c * sign;
                        obj_offset += c * offset;
                    }
                },
                VarRef::Psd(i, j) => add_sym(&mut c_psd, i, j, c),
            }
        }

        // Row equilibration.
        let mut row_norm = vec![0.0f64; m];
        for col in free_cols.iter().chain(lin_cols.iter()) {
            for &(r, c) in col {
                row_norm[r] = row_norm[r].max(c.abs());
            }
        }
        for (r, entries) in psd_rows.iter().enumerate() {
            for &(_, _, c) in entries {
                row_norm[r] = row_norm[r].max(c.abs());
            }
        }
        let mut row_scale = DVector::from_element(m, 1.0);
        let mut keep = vec![true; m];
        for r in 0..m {
            if row_norm[r] == 0.0 {
                if b[r].abs() > 1e-12 {
                    return Err(TriviallyInfeasible);
                }
                keep[r] = false;
            } else {
                row_scale[r] = 1.0 / row_norm[r];
            }
        }
        for col in free_cols.iter_mut().chain(lin_cols.iter_mut()) {
            for (r, c) in col.iter_mut() {
                *c *= row_scale[*r];
            }
        }
        for (r, entries) in psd_rows.iter_mut().enumerate() {
            for e in entries.iter_mut() {
                e.2 *= row_scale[r];
            }
        }
        for r in 0..m {
            b[r] *= row_scale[r];
        }

        let c_max = c_free
            .iter()
            .chain(c_lin.iter())
            .chain(c_psd.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()));
        let obj_scale = c_max.max(1.0);
        c_free /= obj_scale;
        c_lin /= obj_scale;
        c_psd /= obj_scale;

        let mut sf = StandardForm {
            m,
            dim,
            free_cols,
            lin_cols,
            psd_rows,
            c_free,
            c_lin,
            c_psd,
            b,
            row_scale,
            obj_scale,
            slots,
            obj_offset,
            user_rows,
            kept_rows: None,
        };
        if keep.iter().any(|k| !k) {
            sf.drop_rows(&keep);
        }
        Ok(sf)
    }

    fn drop_rows(&mut self, keep: &[bool]) {
        let mut new_index = vec![usize::MAX; keep.len()];
        let mut next = 0;
        for (r, &k) in keep.iter().enumerate() {
            if k {
                new_index[r] = next;
                next += 1;
            }
        }
        for col in self.free_cols.iter_mut().chain(self.lin_cols.iter_mut()) {
            col.retain(|(r, _)| keep[*r]);
            for (r, _) in col.iter_mut() {
                *r = new_index[*r];
            }
        }
        let rows = std::mem::take(&mut self.psd_rows);
        self.psd_rows = rows.into_iter().zip(keep).filter(|(_, &k)| k).map(|(r, _)| r).collect();
        self.b = DVector::from_iterator(next, self.b.iter().zip(keep).filter(|(_, &k)| k).map(|(v, _)| *v));
        // Remember original positions for dual recovery.
        let scale = std::mem::replace(&mut self.row_scale, DVector::zeros(0));
        self.row_scale = DVector::from_iterator(next, scale.iter().zip(keep).filter(|(_, &k)| k).map(|(v, _)| *v));
        self.kept_rows = Some(keep.iter().enumerate().filter(|(_, &k)| k).map(|(r, _)| r).collect());
        self.m = next;
    }

    pub fn n_free(&self) -> usize {
        self.free_cols.len()
    }

    pub fn n_lin(&self) -> usize {
        self.lin_cols.len()
    }

    /// `A x`
    pub fn apply(&self, x_free: &DVector<f64>, x_lin: &DVector<f64>, x_psd: &DMatrix<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.m);
        for (col, &v) in self.free_cols.iter().zip(x_free.iter()) {
            for &(r, c) in col {
                out[r] += c * v;
            }
        }
        for (col, &v) in self.lin_cols.iter().zip(x_lin.iter()) {
            for &(r, c) in col {
                out[r] += c * v;
            }
        }
        for (r, entries) in self.psd_rows.iter().enumerate() {
            out[r] += entries.iter().map(|&(i, j, c)| c * x_psd[(i, j)]).sum::<f64>();
        }
        out
    }

    /// `Aᵀ y`, split by block.
    pub fn apply_transpose(&self, y: &DVector<f64>) -> (DVector<f64>, DVector<f64>, DMatrix<f64>) {
        let col_dot = |col: &Vec<(usize, f64)>| col.iter().map(|&(r, c)| c * y[r]).sum::<f64>();
        let f = DVector::from_iterator(self.n_free(), self.free_cols.iter().map(col_dot));
        let l = DVector::from_iterator(self.n_lin(), self.lin_cols.iter().map(col_dot));
        let mut s = DMatrix::zeros(self.dim, self.dim);
        for (r, entries) in self.psd_rows.iter().enumerate() {
            for &(i, j, c) in entries {
                add_sym(&mut s, i, j, c * y[r]);
            }
        }
        (f, l, s)
    }

    /// Maps an internal primal point back to user scalars (unscaled).
    pub fn user_scalars(&self, x_free: &DVector<f64>, x_lin: &DVector<f64>) -> Vec<f64> {
        self.slots
            .iter()
            .map(|slot| match *slot {
                Slot::Free(f) => x_free[f],
                Slot::Lin { index, offset, sign } => offset + sign * x_lin[index],
            })
            .collect()
    }

    /// Maps internal multipliers to the user's equality rows and sense.
    pub fn user_duals(&self, y: &DVector<f64>, sense: Sense) -> Vec<f64> {
        let sign = match sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let mut out = vec![0.0; self.user_rows];
        for r in 0..self.m {
            let orig = self.kept_rows.as_ref().map_or(r, |k| k[r]);
            if orig < self.user_rows {
                out[orig] = sign * y[r] * self.row_scale[r] * self.obj_scale;
            }
        }
        out
    }

    /// Internal (minimization, unscaled) objective value of `cᵀx / obj_scale`-scaled data.
    pub fn internal_to_user_objective(&self, internal_scaled: f64, sense: Sense, constant: f64) -> f64 {
        let v = internal_scaled * self.obj_scale + self.obj_offset;
        match sense {
            Sense::Minimize => v + constant,
            Sense::Maximize => -v + constant,
        }
    }
}

/// Adds `c` to the form `⟨M, X⟩` so that it contributes `c · X_ij`.
pub(crate) fn add_sym(m: &mut DMatrix<f64>, i: usize, j: usize, c: f64) {
    if i == j {
        m[(i, i)] += c;
    } else {
        m[(i, j)] += 0.5 * c;
        m[(j, i)] += 0.5 * c;
    }
}

fn merge_duplicates(cols: &mut [Vec<(usize, f64)>]) {
    for col in cols {
        col.sort_by_key(|&(r, _)| r);
        col.dedup_by(|a, b| {
            if a.0 == b.0 {
                b.1 += a.1;
                true
            } else {
                false
            }
        });
    }
}
