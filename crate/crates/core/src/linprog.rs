//! Dense two-phase primal simplex for small LPs over the probability simplex.
//!
//! Every program here has the shape `max cᵀx  s.t. Gx ≤ b, 1ᵀx = 1, x ≥ 0`
//! with a handful of variables, so a textbook tableau with Bland's rule is
//! enough. Bland's rule guarantees termination on degenerate problems.

use crate::error::{Error, Result};
use crate::game::{Matrix, ProbVector};

/// Phase-one residual above which a problem is declared infeasible.
pub const FEAS_TOL: f64 = 1e-7;
/// Smallest magnitude accepted as a pivot element.
pub const PIVOT_TOL: f64 = 1e-10;

const MAX_PIVOTS: usize = 50_000;

/// `normalᵀ x ≤ bound`.
#[derive(Clone, Debug, PartialEq)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub bound: f64,
}

impl Halfspace {
    pub fn new(normal: Vec<f64>, bound: f64) -> Self {
        Halfspace { normal, bound }
    }

    pub fn slack(&self, x: &[f64]) -> f64 {
        self.bound - self.normal.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.slack(x) >= -tol
    }
}

/// Maximize `objective · x` over the simplex intersected with `constraints`.
#[derive(Clone, Debug, PartialEq)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub constraints: Vec<Halfspace>,
}

impl LpProblem {
    pub fn new(objective: Vec<f64>, constraints: Vec<Halfspace>) -> Self {
        LpProblem {
            objective,
            constraints,
        }
    }

    pub fn dim(&self) -> usize {
        self.objective.len()
    }

    fn validate(&self) -> Result<()> {
        let m = self.dim();
        if m == 0 {
            return Err(Error::InvalidParameter("LP over an empty simplex".into()));
        }
        if self.objective.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("LP objective"));
        }
        for h in &self.constraints {
            if h.normal.len() != m {
                return Err(Error::DimensionMismatch(format!(
                    "constraint of length {} in a {m}-dimensional LP",
                    h.normal.len()
                )));
            }
            if !h.bound.is_finite() || h.normal.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("LP constraint"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpSolution {
    Optimal { x: ProbVector, value: f64 },
    Infeasible,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        matches!(self, LpSolution::Optimal { .. })
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            LpSolution::Optimal { value, .. } => Some(*value),
            LpSolution::Infeasible => None,
        }
    }

    pub fn point(&self) -> Option<&ProbVector> {
        match self {
            LpSolution::Optimal { x, .. } => Some(x),
            LpSolution::Infeasible => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Relation {
    Le,
    Ge,
    Eq,
}

/// A row of a general LP in nonnegative variables.
struct Row {
    coeffs: Vec<f64>,
    rel: Relation,
    rhs: f64,
}

/// `max objective·z  s.t. rows, z ≥ 0`. `Ok(None)` when infeasible.
///
/// Boundedness is the caller's responsibility; every program built in this
/// crate contains the simplex equality row.
fn tableau_maximize(objective: &[f64], rows: Vec<Row>) -> Result<Option<(Vec<f64>, f64)>> {
    let nv = objective.len();
    let mut rows: Vec<Row> = rows
        .into_iter()
        .map(|mut r| {
            if r.rhs < 0.0 {
                r.coeffs.iter_mut().for_each(|c| *c = -*c);
                r.rhs = -r.rhs;
                r.rel = match r.rel {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
            }
            r
        })
        .collect();

    // column layout: structural | slack/surplus | artificial | rhs
    let n_slack = rows.iter().filter(|r| r.rel != Relation::Eq).count();
    let n_art = rows.iter().filter(|r| r.rel != Relation::Le).count();
    let width = nv + n_slack + n_art;
    let art_start = nv + n_slack;

    let mut tab: Vec<Vec<f64>> = Vec::with_capacity(rows.len());
    let mut basis = Vec::with_capacity(rows.len());
    let (mut s, mut a) = (nv, art_start);
    for r in rows.drain(..) {
        let mut line = vec![0.0; width + 1];
        line[..nv].copy_from_slice(&r.coeffs);
        line[width] = r.rhs;
        match r.rel {
            Relation::Le => {
                line[s] = 1.0;
                basis.push(s);
                s += 1;
            }
            Relation::Ge => {
                line[s] = -1.0;
                s += 1;
                line[a] = 1.0;
                basis.push(a);
                a += 1;
            }
            Relation::Eq => {
                line[a] = 1.0;
                basis.push(a);
                a += 1;
            }
        }
        tab.push(line);
    }

    let mut t = Tableau { tab, basis, width };

    if n_art > 0 {
        // phase one: maximize −Σ artificials
        let mut cost = vec![0.0; width];
        cost[art_start..].iter_mut().for_each(|c| *c = -1.0);
        let residual = -t.optimize(&cost, width)?;
        if residual > FEAS_TOL {
            return Ok(None);
        }
        t.expel_artificials(art_start);
    }

    let mut cost = vec![0.0; width];
    cost[..nv].copy_from_slice(objective);
    let value = t.optimize(&cost, art_start)?;

    let mut z = vec![0.0; nv];
    for (r, &b) in t.basis.iter().enumerate() {
        if b < nv {
            z[b] = t.tab[r][width].max(0.0);
        }
    }
    Ok(Some((z, value)))
}

struct Tableau {
    tab: Vec<Vec<f64>>,
    basis: Vec<usize>,
    width: usize,
}

impl Tableau {
    /// Maximizes `cost · z` using only columns `< allowed` as entering
    /// candidates. Returns the optimal value.
    fn optimize(&mut self, cost: &[f64], allowed: usize) -> Result<f64> {
        let w = self.width;
        for _ in 0..MAX_PIVOTS {
            // reduced cost c_j − c_Bᵀ B⁻¹ a_j, recomputed from the basis each step
            let entering = (0..allowed).find(|&j| {
                if self.basis.contains(&j) {
                    return false;
                }
                let reduced = cost[j]
                    - self
                        .basis
                        .iter()
                        .zip(&self.tab)
                        .map(|(&b, row)| cost[b] * row[j])
                        .sum::<f64>();
                reduced > PIVOT_TOL
            });
            let Some(col) = entering else {
                return Ok(self
                    .basis
                    .iter()
                    .zip(&self.tab)
                    .map(|(&b, row)| cost[b] * row[w])
                    .sum());
            };
            // ratio test; ties go to the smallest basic index (Bland)
            let mut leave: Option<(usize, f64)> = None;
            for (r, row) in self.tab.iter().enumerate() {
                if row[col] > PIVOT_TOL {
                    let ratio = row[w] / row[col];
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((lr, lratio)) => {
                            if ratio < lratio - 1e-12
                                || (ratio <= lratio + 1e-12 && self.basis[r] < self.basis[lr])
                            {
                                Some((r, ratio))
                            } else {
                                Some((lr, lratio))
                            }
                        }
                    };
                }
            }
            let Some((row, _)) = leave else {
                return Err(Error::Numeric("unbounded linear program".into()));
            };
            self.pivot(row, col);
        }
        Err(Error::Numeric("simplex pivot limit reached".into()))
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.tab[row][col];
        self.tab[row].iter_mut().for_each(|v| *v /= p);
        let pivot_row = self.tab[row].clone();
        for (r, line) in self.tab.iter_mut().enumerate() {
            if r == row {
                continue;
            }
            let f = line[col];
            if f != 0.0 {
                for (v, pv) in line.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
        self.basis[row] = col;
    }

    /// Drives zero-valued artificials out of the basis; rows where that is
    /// impossible are redundant and get removed.
    fn expel_artificials(&mut self, art_start: usize) {
        let mut r = 0;
        while r < self.tab.len() {
            if self.basis[r] >= art_start {
                let col = (0..art_start).find(|&j| self.tab[r][j].abs() > PIVOT_TOL);
                match col {
                    Some(j) => {
                        self.pivot(r, j);
                        r += 1;
                    }
                    None => {
                        self.tab.remove(r);
                        self.basis.remove(r);
                    }
                }
            } else {
                r += 1;
            }
        }
    }
}

/// Normalizes constraints: drops all-zero rows with nonnegative bound and
/// reports `false` if an all-zero row has a negative bound.
fn prune(constraints: &[Halfspace]) -> Option<Vec<&Halfspace>> {
    let mut kept = Vec::with_capacity(constraints.len());
    for h in constraints {
        if h.normal.iter().all(|&v| v == 0.0) {
            if h.bound < 0.0 {
                return None;
            }
        } else {
            kept.push(h);
        }
    }
    Some(kept)
}

fn simplex_rows(m: usize, constraints: &[&Halfspace]) -> Vec<Row> {
    let mut rows: Vec<Row> = constraints
        .iter()
        .map(|h| Row {
            coeffs: h.normal.clone(),
            rel: Relation::Le,
            rhs: h.bound,
        })
        .collect();
    rows.push(Row {
        coeffs: vec![1.0; m],
        rel: Relation::Eq,
        rhs: 1.0,
    });
    rows
}

/// Projects a basic solution back onto the simplex (clears round-off).
fn to_simplex(mut z: Vec<f64>) -> Result<ProbVector> {
    z.iter_mut().for_each(|v| *v = v.max(0.0));
    let s: f64 = z.iter().sum();
    if !(s > 0.5 && s < 1.5) {
        return Err(Error::Numeric(format!("LP solution has mass {s}")));
    }
    z.iter_mut().for_each(|v| *v /= s);
    Ok(ProbVector::from_vec_unchecked(z))
}

/// Solves `max cᵀx` over the simplex and the halfspaces of `problem`.
pub fn solve_lp(problem: &LpProblem) -> Result<LpSolution> {
    problem.validate()?;
    let m = problem.dim();
    let Some(kept) = prune(&problem.constraints) else {
        return Ok(LpSolution::Infeasible);
    };
    let Some((z, _)) = tableau_maximize(&problem.objective, simplex_rows(m, &kept))? else {
        return Ok(LpSolution::Infeasible);
    };
    let x = to_simplex(z)?;
    let worst = kept
        .iter()
        .map(|h| -h.slack(x.as_slice()))
        .fold(f64::NEG_INFINITY, f64::max);
    if worst > 10.0 * FEAS_TOL {
        return Err(Error::Numeric(format!(
            "LP solution violates a constraint by {worst}"
        )));
    }
    let value = problem
        .objective
        .iter()
        .zip(x.as_slice())
        .map(|(c, v)| c * v)
        .sum();
    Ok(LpSolution::Optimal { x, value })
}

/// Whether the halfspaces intersect the `m`-simplex.
pub fn feasible(constraints: &[Halfspace], m: usize) -> Result<bool> {
    let problem = LpProblem::new(vec![0.0; m], constraints.to_vec());
    problem.validate()?;
    let Some(kept) = prune(constraints) else {
        return Ok(false);
    };
    Ok(tableau_maximize(&vec![0.0; m], simplex_rows(m, &kept))?.is_some())
}

/// `min_{x∈Δ_m} max_j xᵀM_{:,j}` via `min s  s.t. xᵀM_{:,j} ≤ s`.
///
/// Returns `-inf` for a matrix with no columns.
pub fn minimax_gap(mat: &Matrix) -> Result<f64> {
    if !mat.is_finite() {
        return Err(Error::NonFinite("minimax matrix"));
    }
    let (m, k) = (mat.rows(), mat.cols());
    if k == 0 {
        return Ok(f64::NEG_INFINITY);
    }
    // s = floor + u with u ≥ 0; the min entry lower-bounds every column value
    let floor = (0..m)
        .flat_map(|i| mat.row(i).iter().copied())
        .fold(f64::INFINITY, f64::min);
    let mut rows: Vec<Row> = (0..k)
        .map(|j| {
            let mut coeffs = mat.col(j);
            coeffs.push(-1.0);
            Row {
                coeffs,
                rel: Relation::Le,
                rhs: floor,
            }
        })
        .collect();
    let mut simplex = vec![1.0; m];
    simplex.push(0.0);
    rows.push(Row {
        coeffs: simplex,
        rel: Relation::Eq,
        rhs: 1.0,
    });
    let mut objective = vec![0.0; m];
    objective.push(-1.0);
    match tableau_maximize(&objective, rows)? {
        Some((_, value)) => Ok(floor - value),
        None => Err(Error::Numeric("minimax LP reported infeasible".into())),
    }
}
