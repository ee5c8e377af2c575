//! Facets of the optimizer simplex: the regions where a given learner action
//! is a best response, their margin-shifted variants, inducibility gaps and
//! the sensitivity constant.

use crate::error::{Error, Result};
use crate::game::{equiv_classes, EquivClassRep, Matrix};
use crate::linprog::{feasible, minimax_gap, Halfspace};

/// Relative determinant threshold for the submatrix invertibility test.
pub const INVERTIBLE_TOL: f64 = 1e-10;

/// Largest stacked dimension accepted by [`sensitivity_constant`].
pub const SENSITIVITY_MAX_DIM: usize = 7;

/// Direction of a margin shift.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MarginSign {
    /// Relax every constraint by `d`.
    Optimistic,
    /// Tighten every constraint by `d`.
    Pessimistic,
}

impl MarginSign {
    fn bound(self, d: f64) -> f64 {
        match self {
            MarginSign::Optimistic => d,
            MarginSign::Pessimistic => -d,
        }
    }
}

/// `(B_i°)ᵀ x ≤ 0`: one halfspace per non-pivot learner action.
pub fn facet_constraints(rep: &EquivClassRep) -> Result<Vec<Halfspace>> {
    shifted_constraints(rep, 0.0)
}

fn shifted_constraints(rep: &EquivClassRep, bound: f64) -> Result<Vec<Halfspace>> {
    if rep.is_degenerate() {
        return Err(Error::DegenerateClass);
    }
    let cols = rep.columns();
    Ok((0..cols.cols())
        .map(|k| Halfspace::new(cols.col(k), bound))
        .collect())
}

/// An estimated facet shifted by a margin.
#[derive(Clone, Debug, PartialEq)]
pub struct MarginFacet {
    pub base: EquivClassRep,
    pub margin: f64,
    pub sign: MarginSign,
}

impl MarginFacet {
    pub fn new(base: EquivClassRep, margin: f64, sign: MarginSign) -> Result<Self> {
        if margin.is_nan() || margin < 0.0 {
            return Err(Error::InvalidParameter(format!("margin {margin} must be >= 0")));
        }
        Ok(MarginFacet { base, margin, sign })
    }

    pub fn constraints(&self) -> Result<Vec<Halfspace>> {
        shifted_constraints(&self.base, self.sign.bound(self.margin))
    }
}

/// `(B̂_i°)ᵀ x ≤ ±d·1`.
pub fn margin_facet(rep_hat: &EquivClassRep, d: f64, sign: MarginSign) -> Result<Vec<Halfspace>> {
    MarginFacet::new(rep_hat.clone(), d, sign)?.constraints()
}

/// `C_i = min_x max_j xᵀ(B_i°)_{:,j}`; positive exactly when the facet is empty.
pub fn inducibility_gap(rep: &EquivClassRep) -> Result<f64> {
    if rep.is_degenerate() {
        return Err(Error::DegenerateClass);
    }
    minimax_gap(rep.columns())
}

/// Membership test for a halfspace system.
pub fn contains(system: &[Halfspace], x: &[f64], tol: f64) -> bool {
    system.iter().all(|h| h.contains(x, tol))
}

/// Exact facets of a learner matrix together with their inducibility gaps.
#[derive(Clone, Debug)]
pub struct FacetSystem {
    facets: Vec<Facet>,
}

#[derive(Clone, Debug)]
pub struct Facet {
    pub action: usize,
    pub constraints: Vec<Halfspace>,
    pub inducibility_gap: f64,
    pub empty: bool,
}

impl FacetSystem {
    pub fn new(b: &Matrix) -> Result<Self> {
        let facets = equiv_classes(b)
            .into_iter()
            .map(|rep| {
                let constraints = facet_constraints(&rep)?;
                let gap = inducibility_gap(&rep)?;
                Ok(Facet {
                    action: rep.pivot(),
                    constraints,
                    inducibility_gap: gap,
                    empty: gap > 0.0,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FacetSystem { facets })
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn facet(&self, i: usize) -> &Facet {
        &self.facets[i]
    }

    /// Actions whose facet contains `x`.
    pub fn membership(&self, x: &[f64], tol: f64) -> Vec<usize> {
        self.facets
            .iter()
            .filter(|f| contains(&f.constraints, x, tol))
            .map(|f| f.action)
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FacetStatus {
    NonEmptyCertified,
    EmptyCertified,
    Undetermined,
}

/// Decides emptiness of every facet from estimated class representations.
///
/// Empty is certified when the optimistic facet is infeasible, non-empty when
/// the pessimistic facet is feasible. Anything else needs a smaller margin.
pub fn identify_facets(reps_hat: &[EquivClassRep], d: f64) -> Result<Vec<FacetStatus>> {
    reps_hat
        .iter()
        .map(|rep| {
            let m = rep.columns().rows();
            if rep.is_degenerate() {
                // every action is a best response everywhere
                return Ok(FacetStatus::NonEmptyCertified);
            }
            let optimistic = margin_facet(rep, d, MarginSign::Optimistic)?;
            if !feasible(&optimistic, m)? {
                return Ok(FacetStatus::EmptyCertified);
            }
            let pessimistic = margin_facet(rep, d, MarginSign::Pessimistic)?;
            Ok(if feasible(&pessimistic, m)? {
                FacetStatus::NonEmptyCertified
            } else {
                FacetStatus::Undetermined
            })
        })
        .collect()
}

/// 25 log-spaced values from 1e-3 to 1e3.
pub fn default_eps_grid() -> Vec<f64> {
    (0..25).map(|k| 10f64.powf(-3.0 + 6.0 * k as f64 / 24.0)).collect()
}

/// Upper approximation of the sensitivity constant of `mat` (shape
/// `(n−1) × m`): stack `ε·1ᵀ` under it, take the largest `‖·⁻¹‖_∞` over all
/// invertible square submatrices, and minimize over the `ε` grid.
pub fn sensitivity_constant(mat: &Matrix, eps_grid: &[f64]) -> Result<f64> {
    let (k, m) = (mat.rows() + 1, mat.cols());
    if k > SENSITIVITY_MAX_DIM || m > SENSITIVITY_MAX_DIM {
        return Err(Error::InvalidParameter(format!(
            "sensitivity enumeration limited to {SENSITIVITY_MAX_DIM}x{SENSITIVITY_MAX_DIM}, got {k}x{m}"
        )));
    }
    if eps_grid.is_empty() || eps_grid.iter().any(|&e| !(e.is_finite() && e != 0.0)) {
        return Err(Error::InvalidParameter("epsilon grid must be finite and nonzero".into()));
    }
    if !mat.is_finite() {
        return Err(Error::NonFinite("sensitivity matrix"));
    }
    let row_subsets = subsets(k);
    let col_subsets = subsets(m);
    let mut best = f64::INFINITY;
    for &eps in eps_grid {
        let stacked: Vec<Vec<f64>> = (0..k)
            .map(|r| {
                if r + 1 < k {
                    mat.row(r).to_vec()
                } else {
                    vec![eps; m]
                }
            })
            .collect();
        let mut worst: f64 = 0.0;
        for rows in &row_subsets {
            for cols in col_subsets.iter().filter(|c| c.len() == rows.len()) {
                let sub: Vec<Vec<f64>> = rows
                    .iter()
                    .map(|&r| cols.iter().map(|&c| stacked[r][c]).collect())
                    .collect();
                if let Some(norm) = inverse_inf_norm(sub) {
                    worst = worst.max(norm);
                }
            }
        }
        best = best.min(worst);
    }
    Ok(best)
}

/// Nonempty index subsets of `0..n`.
fn subsets(n: usize) -> Vec<Vec<usize>> {
    (1u32..(1 << n))
        .map(|mask| (0..n).filter(|&i| mask & (1 << i) != 0).collect())
        .collect()
}

/// `‖S⁻¹‖_∞` if `S` passes the relative determinant test.
fn inverse_inf_norm(mut a: Vec<Vec<f64>>) -> Option<f64> {
    let n = a.len();
    let scale: f64 = a
        .iter()
        .map(|row| row.iter().fold(0.0f64, |acc, v| acc.max(v.abs())))
        .product();
    if scale == 0.0 {
        return None;
    }
    let mut inv: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut det = 1.0;
    for col in 0..n {
        let piv = (col..n).max_by(|&r1, &r2| a[r1][col].abs().total_cmp(&a[r2][col].abs()))?;
        if a[piv][col] == 0.0 {
            return None;
        }
        if piv != col {
            a.swap(piv, col);
            inv.swap(piv, col);
            det = -det;
        }
        let p = a[col][col];
        det *= p;
        for j in 0..n {
            a[col][j] /= p;
            inv[col][j] /= p;
        }
        for r in 0..n {
            if r != col {
                let f = a[r][col];
                if f != 0.0 {
                    for j in 0..n {
                        a[r][j] -= f * a[col][j];
                        inv[r][j] -= f * inv[col][j];
                    }
                }
            }
        }
    }
    if det.abs() <= INVERTIBLE_TOL * scale {
        return None;
    }
    Some(
        inv.iter()
            .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max),
    )
}
