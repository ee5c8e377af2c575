//! Game primitives: payoff matrices, mixed strategies, best responses, regret
//! accounting and payoff-matrix equivalence classes.

use std::fmt;
use std::ops::Index;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default tie tolerance for best-response sets.
pub const BR_TOL: f64 = 1e-9;

const SIMPLEX_NEG_TOL: f64 = 1e-12;
const SIMPLEX_SUM_TOL: f64 = 1e-9;

/// Dense row-major real matrix. Serializes as a list of rows.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Builds a matrix from nested rows, rejecting ragged input.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if r == 0 || c == 0 {
            return Err(Error::DimensionMismatch("empty matrix".into()));
        }
        if let Some(bad) = rows.iter().position(|row| row.len() != c) {
            return Err(Error::DimensionMismatch(format!(
                "ragged matrix: row {bad} has {} entries, expected {c}",
                rows[bad].len()
            )));
        }
        Ok(Matrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self[(i, j)];
            }
        }
        t
    }

    /// Entrywise `f`.
    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Max absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    /// `xᵀ M` for a vector `x` of length `rows`.
    pub fn left_mul(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows, "left_mul dimension");
        let mut out = vec![0.0; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (o, &v) in out.iter_mut().zip(self.row(i)) {
                *o += xi * v;
            }
        }
        out
    }

    /// `M y` for a vector `y` of length `cols`.
    pub fn right_mul(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.cols, "right_mul dimension");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(y).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `xᵀ M y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        self.left_mul(x).iter().zip(y).map(|(a, b)| a * b).sum()
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.to_rows()).finish()
    }
}

impl TryFrom<Vec<Vec<f64>>> for Matrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Matrix::from_rows(rows)
    }
}

impl From<Matrix> for Vec<Vec<f64>> {
    fn from(m: Matrix) -> Self {
        m.to_rows()
    }
}

/// A point of the probability simplex (a mixed strategy).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    /// Validates nonnegativity (up to 1e-12, clamped) and unit sum (1e-9).
    pub fn new(mut entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::NotOnSimplex("empty vector".into()));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("probability vector"));
        }
        if let Some(v) = entries.iter().find(|&&v| v < -SIMPLEX_NEG_TOL) {
            return Err(Error::NotOnSimplex(format!("negative entry {v}")));
        }
        let sum: f64 = entries.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_SUM_TOL {
            return Err(Error::NotOnSimplex(format!("entries sum to {sum}")));
        }
        for v in entries.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        Ok(ProbVector(entries))
    }

    pub fn uniform(n: usize) -> Self {
        ProbVector(vec![1.0 / n as f64; n])
    }

    /// The pure strategy `e_i` in dimension `n`.
    pub fn vertex(n: usize, i: usize) -> Self {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        ProbVector(v)
    }

    /// `(p, 1 - p)`.
    pub fn two(p: f64) -> Self {
        ProbVector(vec![p, 1.0 - p])
    }

    pub(crate) fn from_vec_unchecked(v: Vec<f64>) -> Self {
        ProbVector(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// L1 distance.
    pub fn l1_distance(&self, other: &ProbVector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).sum()
    }
}

impl Index<usize> for ProbVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl TryFrom<Vec<f64>> for ProbVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        ProbVector::new(v)
    }
}

impl From<ProbVector> for Vec<f64> {
    fn from(p: ProbVector) -> Self {
        p.0
    }
}

/// Two-player bimatrix game; `a` pays the optimizer (rows), `b` the learner
/// (columns).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGame", into = "RawGame")]
pub struct GameInstance {
    a: Matrix,
    b: Matrix,
}

#[derive(Serialize, Deserialize)]
struct RawGame {
    #[serde(rename = "A")]
    a: Matrix,
    #[serde(rename = "B")]
    b: Matrix,
}

impl TryFrom<RawGame> for GameInstance {
    type Error = Error;

    fn try_from(raw: RawGame) -> Result<Self> {
        GameInstance::new(raw.a, raw.b)
    }
}

impl From<GameInstance> for RawGame {
    fn from(g: GameInstance) -> Self {
        RawGame { a: g.a, b: g.b }
    }
}

impl GameInstance {
    pub fn new(a: Matrix, b: Matrix) -> Result<Self> {
        if a.rows() != b.rows() || a.cols() != b.cols() {
            return Err(Error::DimensionMismatch(format!(
                "A is {}x{} but B is {}x{}",
                a.rows(),
                a.cols(),
                b.rows(),
                b.cols()
            )));
        }
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::NonFinite("payoff matrix"));
        }
        Ok(GameInstance { a, b })
    }

    /// Convenience constructor from nested row literals.
    pub fn from_rows(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>) -> Result<Self> {
        GameInstance::new(Matrix::from_rows(a)?, Matrix::from_rows(b)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        GameInstance::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &Matrix {
        &self.b
    }

    /// Number of optimizer actions.
    pub fn m(&self) -> usize {
        self.a.rows()
    }

    /// Number of learner actions.
    pub fn n(&self) -> usize {
        self.a.cols()
    }

    /// Replaces the learner matrix, keeping `A`.
    pub fn with_learner_matrix(&self, b: Matrix) -> Result<Self> {
        GameInstance::new(self.a.clone(), b)
    }
}

/// Returns `(xᵀAy, xᵀBy)`.
pub fn payoff(game: &GameInstance, x: &ProbVector, y: &ProbVector) -> Result<(f64, f64)> {
    if x.len() != game.m() || y.len() != game.n() {
        return Err(Error::DimensionMismatch(format!(
            "strategies of length ({}, {}) for a {}x{} game",
            x.len(),
            y.len(),
            game.m(),
            game.n()
        )));
    }
    Ok((
        game.a.bilinear(x.as_slice(), y.as_slice()),
        game.b.bilinear(x.as_slice(), y.as_slice()),
    ))
}

/// Learner columns whose payoff against `x` is within `tol` of the maximum.
pub fn best_response_set(b: &Matrix, x: &ProbVector, tol: f64) -> Vec<usize> {
    let values = b.left_mul(x.as_slice());
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v >= best - tol)
        .map(|(j, _)| j)
        .collect()
}

/// Best response with optimistic tie-breaking: among the learner's best
/// responses pick the one that pays the optimizer most, lowest index on ties.
pub fn best_response_optimistic(game: &GameInstance, x: &ProbVector) -> usize {
    let opt_values = game.a.left_mul(x.as_slice());
    let mut best: Option<usize> = None;
    for j in best_response_set(&game.b, x, BR_TOL) {
        match best {
            Some(k) if opt_values[j] <= opt_values[k] => {}
            _ => best = Some(j),
        }
    }
    best.expect("best response set is never empty")
}

/// One round of play.
#[derive(Clone, Debug, PartialEq)]
pub struct Round {
    pub t: usize,
    pub x: ProbVector,
    pub y: ProbVector,
    pub payoff_opt: f64,
    pub payoff_learner: f64,
}

/// Full record of a repeated-game run.
#[derive(Clone, Debug)]
pub struct Trace {
    game: GameInstance,
    seed: u64,
    rounds: Vec<Round>,
}

impl Trace {
    pub fn new(game: GameInstance, seed: u64) -> Self {
        Trace {
            game,
            seed,
            rounds: Vec::new(),
        }
    }

    /// Appends round `len() + 1`, evaluating both payoffs.
    pub fn push(&mut self, x: ProbVector, y: ProbVector) -> Result<()> {
        let (payoff_opt, payoff_learner) = payoff(&self.game, &x, &y)?;
        self.rounds.push(Round {
            t: self.rounds.len() + 1,
            x,
            y,
            payoff_opt,
            payoff_learner,
        });
        Ok(())
    }

    pub fn game(&self) -> &GameInstance {
        &self.game
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn rounds(&self) -> &[Round] {
        &self.rounds
    }

    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }
}

/// Hindsight learner regret of a trajectory, evaluated with learner matrix `b`.
///
/// The hindsight maximum over `Δ_n` is attained at a vertex because the
/// objective is linear in `y`, so only pure columns are scanned.
pub fn trajectory_regret(b: &Matrix, trace: &Trace) -> Result<f64> {
    if trace.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let mut column_totals = vec![0.0; b.cols()];
    let mut realized = 0.0;
    for r in trace.rounds() {
        let xb = b.left_mul(r.x.as_slice());
        for (tot, v) in column_totals.iter_mut().zip(&xb) {
            *tot += v;
        }
        realized += xb.iter().zip(r.y.as_slice()).map(|(a, c)| a * c).sum::<f64>();
    }
    let best = column_totals.into_iter().fold(f64::NEG_INFINITY, f64::max);
    Ok(best - realized)
}

/// `T · V* − Σ xᵀAy`.
pub fn stackelberg_regret(game: &GameInstance, v_star: f64, trace: &Trace) -> f64 {
    let earned: f64 = trace
        .rounds()
        .iter()
        .map(|r| game.a.bilinear(r.x.as_slice(), r.y.as_slice()))
        .sum();
    trace.len() as f64 * v_star - earned
}

/// Normalized column-difference representation of the equivalence class of a
/// learner matrix, relative to a pivot column.
#[derive(Clone, Debug, PartialEq)]
pub struct EquivClassRep {
    pivot: usize,
    columns: Matrix,
    degenerate: bool,
}

impl EquivClassRep {
    pub fn pivot(&self) -> usize {
        self.pivot
    }

    /// `m × (n−1)` matrix; column `k` corresponds to the `k`-th learner action
    /// other than the pivot, in ascending order.
    pub fn columns(&self) -> &Matrix {
        &self.columns
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    /// Original learner column index of representation column `k`.
    pub fn original_index(&self, k: usize) -> usize {
        if k < self.pivot {
            k
        } else {
            k + 1
        }
    }
}

/// `max_{j1,j2} ‖B_{:,j1} − B_{:,j2}‖_∞`.
pub fn column_spread(b: &Matrix) -> f64 {
    let mut spread: f64 = 0.0;
    for j1 in 0..b.cols() {
        for j2 in (j1 + 1)..b.cols() {
            for i in 0..b.rows() {
                spread = spread.max((b[(i, j1)] - b[(i, j2)]).abs());
            }
        }
    }
    spread
}

/// Builds the class representation of `b` for the given pivot column.
pub fn equiv_class(b: &Matrix, pivot: usize) -> Result<EquivClassRep> {
    if pivot >= b.cols() {
        return Err(Error::InvalidParameter(format!(
            "pivot {pivot} out of range for {} columns",
            b.cols()
        )));
    }
    let spread = column_spread(b);
    let degenerate = spread == 0.0;
    let mut columns = Matrix::zeros(b.rows(), b.cols() - 1);
    if !degenerate {
        for (k, j) in (0..b.cols()).filter(|&j| j != pivot).enumerate() {
            for i in 0..b.rows() {
                columns.set(i, k, (b[(i, j)] - b[(i, pivot)]) / spread);
            }
        }
    }
    Ok(EquivClassRep {
        pivot,
        columns,
        degenerate,
    })
}

/// Representations for every pivot `0..n`.
pub fn equiv_classes(b: &Matrix) -> Vec<EquivClassRep> {
    (0..b.cols())
        .map(|i| equiv_class(b, i).expect("pivot in range"))
        .collect()
}

/// Max-entry norm of the difference of two representations on the same pivot.
pub fn class_difference(c1: &EquivClassRep, c2: &EquivClassRep) -> Result<f64> {
    if c1.pivot != c2.pivot {
        return Err(Error::PivotMismatch(c1.pivot, c2.pivot));
    }
    let (a, b) = (&c1.columns, &c2.columns);
    if a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(Error::DimensionMismatch(
            "class representations of different shapes".into(),
        ));
    }
    let mut diff: f64 = 0.0;
    for i in 0..a.rows() {
        for k in 0..a.cols() {
            diff = diff.max((a[(i, k)] - b[(i, k)]).abs());
        }
    }
    Ok(diff)
}

/// Largest class difference over all pivots.
pub fn max_class_difference(b1: &Matrix, b2: &Matrix) -> Result<f64> {
    if b1.cols() != b2.cols() {
        return Err(Error::DimensionMismatch("learner matrices differ in width".into()));
    }
    let mut worst: f64 = 0.0;
    for i in 0..b1.cols() {
        worst = worst.max(class_difference(&equiv_class(b1, i)?, &equiv_class(b2, i)?)?);
    }
    Ok(worst)
}

/// All points of `Δ_m` whose coordinates are multiples of `1/resolution`.
pub fn simplex_grid(m: usize, resolution: usize) -> Vec<Vec<f64>> {
    fn fill(slot: usize, left: usize, counts: &mut Vec<usize>, res: usize, out: &mut Vec<Vec<f64>>) {
        if slot + 1 == counts.len() {
            counts[slot] = left;
            out.push(counts.iter().map(|&c| c as f64 / res as f64).collect());
            return;
        }
        for c in 0..=left {
            counts[slot] = c;
            fill(slot + 1, left - c, counts, res, out);
        }
    }
    let mut out = Vec::new();
    if m == 0 || resolution == 0 {
        return out;
    }
    fill(0, resolution, &mut vec![0; m], resolution, &mut out);
    out
}
