//! Optimizer strategies: binary-search steering against ascent learners,
//! payoff recovery against KL mirror ascent, a fixed commitment, and online
//! gradient ascent as a baseline.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{equiv_classes, Matrix, ProbVector};
use crate::learners::project_simplex;
use crate::stackelberg::{solve_extra_pessimistic, MarginOutcome};

/// Coarse label of what an optimizer is doing in a round.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Phase {
    Explore,
    Commit,
    Online,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Explore => "explore",
            Phase::Commit => "commit",
            Phase::Online => "online",
        }
    }
}

/// What an explore-then-commit optimizer learned, for reporting.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CommitSummary {
    pub committed: Option<ProbVector>,
    /// Rounds spent before the commitment.
    pub explore_rounds: usize,
    /// Final binary-search endpoints `(p_L*, p_R*)`.
    pub bracket: Option<(f64, f64)>,
    /// Probes whose learner action did not move at all.
    pub degenerate_probes: usize,
    /// Estimated learner matrix (up to row shifts).
    pub estimate: Option<Matrix>,
    /// The margin-adjusted commit was infeasible and a pure fallback was used.
    pub fallback: bool,
}

/// An optimizer plays `current()` and then observes the learner's action for
/// that round. It never sees the learner's payoff matrix.
pub trait Optimizer: Send {
    fn current(&self) -> &ProbVector;
    fn observe(&mut self, y: &ProbVector) -> Result<()>;
    fn phase(&self) -> Phase;
    fn summary(&self) -> CommitSummary {
        CommitSummary::default()
    }
}

/// Best pure optimizer action against a fixed learner column; lowest index on
/// ties.
fn best_row_against(a: &Matrix, column: usize) -> usize {
    (0..a.rows()).fold(0, |best, r| if a[(r, column)] > a[(best, column)] { r } else { best })
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum PaalStage {
    Probe0,
    Probe1 { br0: usize },
    Search { p_l: f64, p_r: f64 },
    Committed,
}

/// Explore-then-commit against an ascent learner with two actions.
///
/// `test(p)` plays `(p, 1−p)` twice and reads the learner's best response off
/// the direction of its move. After probing both vertices, a binary search
/// narrows the indifference point to width `d`, pessimistic facet intervals
/// are cut `d` away from the bracket, and the best endpoint is played forever.
#[derive(Clone, Debug)]
pub struct Paal {
    a: Matrix,
    d: f64,
    stage: PaalStage,
    first_q: Option<f64>,
    x: ProbVector,
    rounds: usize,
    summary: CommitSummary,
}

impl Paal {
    pub fn new(a: Matrix, d: f64) -> Result<Self> {
        if a.rows() != 2 || a.cols() != 2 {
            return Err(Error::DimensionMismatch("binary-search steering needs a 2x2 game".into()));
        }
        if !(d > 0.0 && d < 1.0) {
            return Err(Error::InvalidParameter(format!("accuracy margin {d} must be in (0, 1)")));
        }
        Ok(Paal {
            a,
            d,
            stage: PaalStage::Probe0,
            first_q: None,
            x: ProbVector::two(0.0),
            rounds: 0,
            summary: CommitSummary::default(),
        })
    }

    fn probe_point(&self) -> f64 {
        match self.stage {
            PaalStage::Probe0 => 0.0,
            PaalStage::Probe1 { .. } => 1.0,
            PaalStage::Search { p_l, p_r } => (p_l + p_r) / 2.0,
            PaalStage::Committed => unreachable!("no probes after commit"),
        }
    }

    /// Learner column inferred from two consecutive first coordinates.
    fn infer(&mut self, q_prev: f64, q_next: f64) -> usize {
        if q_next > q_prev {
            return 0;
        }
        if q_next == q_prev {
            self.summary.degenerate_probes += 1;
            // an ascent learner only stays put on a best response; at e_1
            // that best response is column 1
            if q_prev >= 1.0 {
                return 0;
            }
        }
        1
    }

    fn commit(&mut self, x: ProbVector) {
        self.summary.committed = Some(x.clone());
        self.summary.explore_rounds = self.rounds;
        self.x = x;
        self.stage = PaalStage::Committed;
    }

    fn commit_pessimistic(&mut self, p_l: f64, p_r: f64) {
        let d = self.d;
        self.summary.bracket = Some((p_l, p_r));
        // intervals of the first coordinate p where each column is safe
        let (e1, e2) = if p_l < p_r {
            ((0.0, (p_l - d).max(0.0)), ((p_r + d).min(1.0), 1.0))
        } else {
            (((p_l + d).min(1.0), 1.0), (0.0, (p_r - d).max(0.0)))
        };
        let value = |p: f64, col: usize| p * self.a[(0, col)] + (1.0 - p) * self.a[(1, col)];
        let mut best = (f64::NEG_INFINITY, 0.0);
        for (col, (lo, hi)) in [(0, e1), (1, e2)] {
            for p in [lo, hi] {
                let v = value(p, col);
                if v > best.0 {
                    best = (v, p);
                }
            }
        }
        self.commit(ProbVector::two(best.1));
    }

    fn on_test_result(&mut self, br: usize) {
        match self.stage {
            PaalStage::Probe0 => self.stage = PaalStage::Probe1 { br0: br },
            PaalStage::Probe1 { br0 } => {
                if br0 == br {
                    let row = best_row_against(&self.a, br);
                    self.commit(ProbVector::vertex(2, row));
                    return;
                }
                let p_l = if br == 0 { 1.0 } else { 0.0 };
                self.stage = PaalStage::Search { p_l, p_r: 1.0 - p_l };
            }
            PaalStage::Search { p_l, p_r } => {
                let mid = (p_l + p_r) / 2.0;
                let (p_l, p_r) = if br == 0 { (mid, p_r) } else { (p_l, mid) };
                if (p_l - p_r).abs() <= self.d {
                    self.commit_pessimistic(p_l, p_r);
                    return;
                }
                self.stage = PaalStage::Search { p_l, p_r };
            }
            PaalStage::Committed => {}
        }
    }
}

impl Optimizer for Paal {
    fn current(&self) -> &ProbVector {
        &self.x
    }

    fn observe(&mut self, y: &ProbVector) -> Result<()> {
        if y.len() != 2 {
            return Err(Error::DimensionMismatch("learner action length".into()));
        }
        if self.stage == PaalStage::Committed {
            return Ok(());
        }
        self.rounds += 1;
        let q = y[0];
        match self.first_q.take() {
            None => self.first_q = Some(q),
            Some(q_prev) => {
                let br = self.infer(q_prev, q);
                self.on_test_result(br);
            }
        }
        if self.stage != PaalStage::Committed {
            self.x = ProbVector::two(self.probe_point());
        }
        Ok(())
    }

    fn phase(&self) -> Phase {
        if self.stage == PaalStage::Committed {
            Phase::Commit
        } else {
            Phase::Explore
        }
    }

    fn summary(&self) -> CommitSummary {
        self.summary.clone()
    }
}

/// Default slack `√(f(T)/T)` with `f(T) = √T`.
pub fn default_pamd_slack(horizon: usize) -> f64 {
    let t = horizon as f64;
    (t.sqrt() / t).sqrt()
}

/// Explore-then-commit against KL mirror ascent with a known weight schedule
/// `η_t = η₀·√t`.
///
/// Each pure row is played for `k + 1` rounds. By stationarity of the KL
/// step, `η_t·(log(y_{t+1}/y_t) + 1)` equals row `i` of `B` up to a multiple
/// of `1` plus noise, so averaging recovers the row's equivalence class.
#[derive(Clone, Debug)]
pub struct Pamd {
    a: Matrix,
    n: usize,
    k: usize,
    margin: f64,
    slack: f64,
    learner_eta0: f64,
    round: usize,
    row: usize,
    step_in_row: usize,
    prev_y: Option<ProbVector>,
    sums: Vec<Vec<f64>>,
    x: ProbVector,
    committed: bool,
    summary: CommitSummary,
}

impl Pamd {
    pub fn new(a: Matrix, k: usize, margin: f64, slack: f64, learner_eta0: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("exploration steps k must be >= 1".into()));
        }
        if !(margin >= 0.0 && slack >= 0.0 && margin.is_finite() && slack.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "margin {margin} and slack {slack} must be finite and >= 0"
            )));
        }
        if !(learner_eta0 > 0.0 && learner_eta0.is_finite()) {
            return Err(Error::InvalidParameter("learner eta0 must be positive".into()));
        }
        let (m, n) = (a.rows(), a.cols());
        Ok(Pamd {
            a,
            n,
            k,
            margin,
            slack,
            learner_eta0,
            round: 0,
            row: 0,
            step_in_row: 0,
            prev_y: None,
            sums: vec![vec![0.0; n]; m],
            x: ProbVector::vertex(m, 0),
            committed: false,
            summary: CommitSummary::default(),
        })
    }

    fn finish(&mut self) -> Result<()> {
        let b_hat = Matrix::from_rows(
            self.sums
                .iter()
                .map(|row| row.iter().map(|v| v / self.k as f64).collect())
                .collect(),
        )?;
        let reps = equiv_classes(&b_hat);
        let x = match solve_extra_pessimistic(&self.a, &reps, self.margin, self.slack)? {
            MarginOutcome::Solved(s) => s.x_star,
            MarginOutcome::AllInfeasible { .. } => {
                self.summary.fallback = true;
                self.pure_fallback(&b_hat)
            }
        };
        self.summary.estimate = Some(b_hat);
        self.summary.committed = Some(x.clone());
        self.summary.explore_rounds = self.round;
        self.x = x;
        self.committed = true;
        Ok(())
    }

    /// Best pure row against the estimated best response to it.
    fn pure_fallback(&self, b_hat: &Matrix) -> ProbVector {
        let m = self.a.rows();
        let value = |r: usize| {
            let row = b_hat.row(r);
            let top = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (0..self.n)
                .filter(|&j| row[j] >= top - crate::game::BR_TOL)
                .map(|j| self.a[(r, j)])
                .fold(f64::NEG_INFINITY, f64::max)
        };
        let best = (0..m).fold(0, |b, r| if value(r) > value(b) { r } else { b });
        ProbVector::vertex(m, best)
    }
}

impl Optimizer for Pamd {
    fn current(&self) -> &ProbVector {
        &self.x
    }

    fn observe(&mut self, y: &ProbVector) -> Result<()> {
        if y.len() != self.n {
            return Err(Error::DimensionMismatch("learner action length".into()));
        }
        if self.committed {
            return Ok(());
        }
        self.round += 1;
        if self.step_in_row > 0 {
            // the pair (y_{τ}, y_{τ+1}) with τ the previous round
            let prev = self.prev_y.as_ref().expect("set on the previous round");
            let eta = self.learner_eta0 * ((self.round - 1) as f64).sqrt();
            for (j, sum) in self.sums[self.row].iter_mut().enumerate() {
                if prev[j] <= 0.0 || y[j] <= 0.0 {
                    return Err(Error::Numeric("learner action left the KL domain".into()));
                }
                *sum += eta * ((y[j] / prev[j]).ln() + 1.0);
            }
        }
        self.prev_y = Some(y.clone());
        self.step_in_row += 1;
        // k pairs come from k + 1 rounds of the same row
        if self.step_in_row == self.k + 1 {
            self.row += 1;
            self.step_in_row = 0;
            if self.row == self.a.rows() {
                return self.finish();
            }
            self.x = ProbVector::vertex(self.a.rows(), self.row);
        }
        Ok(())
    }

    fn phase(&self) -> Phase {
        if self.committed {
            Phase::Commit
        } else {
            Phase::Explore
        }
    }

    fn summary(&self) -> CommitSummary {
        self.summary.clone()
    }
}

/// Plays one action forever.
#[derive(Clone, Debug)]
pub struct FixedCommit {
    x: ProbVector,
}

impl FixedCommit {
    pub fn new(x: ProbVector) -> Self {
        FixedCommit { x }
    }
}

impl Optimizer for FixedCommit {
    fn current(&self) -> &ProbVector {
        &self.x
    }

    fn observe(&mut self, _y: &ProbVector) -> Result<()> {
        Ok(())
    }

    fn phase(&self) -> Phase {
        Phase::Commit
    }

    fn summary(&self) -> CommitSummary {
        CommitSummary {
            committed: Some(self.x.clone()),
            ..CommitSummary::default()
        }
    }
}

/// Projected online gradient ascent on the optimizer's own payoff,
/// `x_{t+1} = Π_Δ(x_t + η_t·A y_t)` with `η_t = η₀/√t`.
#[derive(Clone, Debug)]
pub struct OgaOptimizer {
    a: Matrix,
    eta0: f64,
    t: usize,
    x: ProbVector,
}

impl OgaOptimizer {
    pub fn new(a: Matrix, eta0: f64) -> Result<Self> {
        if !(eta0 > 0.0 && eta0.is_finite()) {
            return Err(Error::InvalidParameter(format!("eta0 {eta0} must be positive")));
        }
        let m = a.rows();
        Ok(OgaOptimizer {
            a,
            eta0,
            t: 1,
            x: ProbVector::uniform(m),
        })
    }
}

impl Optimizer for OgaOptimizer {
    fn current(&self) -> &ProbVector {
        &self.x
    }

    fn observe(&mut self, y: &ProbVector) -> Result<()> {
        if y.len() != self.a.cols() {
            return Err(Error::DimensionMismatch("learner action length".into()));
        }
        let eta = self.eta0 / (self.t as f64).sqrt();
        let grad = self.a.right_mul(y.as_slice());
        let moved: Vec<f64> = self.x.as_slice().iter().zip(&grad).map(|(x, g)| x + eta * g).collect();
        self.x = project_simplex(&moved)?;
        self.t += 1;
        Ok(())
    }

    fn phase(&self) -> Phase {
        Phase::Online
    }
}

fn default_opt_eta0() -> f64 {
    0.5
}

fn default_learner_eta0() -> f64 {
    1.0
}

/// Serializable optimizer configuration, e.g. `{"kind": "paal", "d": 0.01}`
/// or `{"kind": "pamd", "k": 50, "margin": 0.02}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OptimizerSpec {
    Paal {
        d: f64,
    },
    /// `slack` defaults to `√(√T/T)`; `learner_eta0` is the known weight
    /// scale of the learner's schedule.
    Pamd {
        k: usize,
        margin: f64,
        #[serde(default)]
        slack: Option<f64>,
        #[serde(default = "default_learner_eta0")]
        learner_eta0: f64,
    },
    Fixed {
        x: Vec<f64>,
    },
    Oga {
        #[serde(default = "default_opt_eta0")]
        eta0: f64,
    },
}

impl OptimizerSpec {
    /// Instantiates the optimizer for payoff matrix `a` and horizon `T`.
    pub fn build(&self, a: &Matrix, horizon: usize) -> Result<Box<dyn Optimizer>> {
        Ok(match self {
            OptimizerSpec::Paal { d } => Box::new(Paal::new(a.clone(), *d)?),
            OptimizerSpec::Pamd {
                k,
                margin,
                slack,
                learner_eta0,
            } => Box::new(Pamd::new(
                a.clone(),
                *k,
                *margin,
                slack.unwrap_or_else(|| default_pamd_slack(horizon)),
                *learner_eta0,
            )?),
            OptimizerSpec::Fixed { x } => {
                let x = ProbVector::new(x.clone())?;
                if x.len() != a.rows() {
                    return Err(Error::DimensionMismatch(format!(
                        "fixed action has {} entries, optimizer has {} actions",
                        x.len(),
                        a.rows()
                    )));
                }
                Box::new(FixedCommit::new(x))
            }
            OptimizerSpec::Oga { eta0 } => Box::new(OgaOptimizer::new(a.clone(), *eta0)?),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{best_response_set, max_class_difference, GameInstance};
    use crate::learners::{KlLearner, Learner, OgaLearner};
    use crate::stackelberg::solve_exact;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn m(rows: Vec<Vec<f64>>) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    /// Plays the two strategies against each other for `rounds` rounds.
    fn play(opt: &mut dyn Optimizer, learner: &mut dyn Learner, rounds: usize) -> Vec<(ProbVector, ProbVector)> {
        let mut out = Vec::with_capacity(rounds);
        for _ in 0..rounds {
            let (x, y) = (opt.current().clone(), learner.current().clone());
            opt.observe(&y).unwrap();
            learner.observe(&x).unwrap();
            out.push((x, y));
        }
        out
    }

    fn instance1() -> GameInstance {
        GameInstance::from_rows(
            vec![vec![5., 0.], vec![0., 3.]],
            vec![vec![-2., 2.], vec![3., -3.]],
        )
        .unwrap()
    }

    fn run_paal(g: &GameInstance, d: f64, rounds: usize) -> (CommitSummary, Vec<(ProbVector, ProbVector)>) {
        let mut opt = Paal::new(g.a().clone(), d).unwrap();
        let mut learner = OgaLearner::new(g.b().clone(), 1.0, ProbVector::uniform(2)).unwrap();
        let rounds = play(&mut opt, &mut learner, rounds);
        (opt.summary(), rounds)
    }

    #[test]
    fn paal_instance1_bracket() {
        let (s, _) = run_paal(&instance1(), 0.01, 200);
        let (pl, pr) = s.bracket.unwrap();
        assert!((pl - pr).abs() <= 0.01);
        assert!(pl.min(pr) <= 0.6 && 0.6 <= pl.max(pr), "{pl} {pr}");
        assert!(s.explore_rounds <= 2 * (7 + 3));
        let x = s.committed.unwrap();
        assert!(x[0] >= 0.6 - 0.02 && x[0] <= 0.6, "{x:?}");
    }

    #[test]
    fn paal_dominant_column_commits_immediately() {
        let eps = 0.1;
        let g = GameInstance::from_rows(
            vec![vec![0., 0.], vec![1., eps]],
            vec![vec![0., eps], vec![0., 1.]],
        )
        .unwrap();
        let (s, _) = run_paal(&g, 0.01, 50);
        assert_eq!(s.explore_rounds, 4);
        assert_eq!(s.bracket, None);
        assert_eq!(s.committed.unwrap(), ProbVector::vertex(2, 1));
    }

    #[test]
    fn paal_matching_pennies() {
        let g = GameInstance::from_rows(
            vec![vec![1., -1.], vec![-1., 1.]],
            vec![vec![-1., 1.], vec![1., -1.]],
        )
        .unwrap();
        let (s, _) = run_paal(&g, 0.01, 200);
        let (pl, pr) = s.bracket.unwrap();
        assert!(pl.min(pr) <= 0.5 && 0.5 <= pl.max(pr));
        let x = s.committed.unwrap();
        assert!((x[0] - 0.5).abs() <= 0.01 + (pl - pr).abs() + 1e-12);
    }

    #[test]
    fn paal_probe_budget_and_determinism() {
        for d in [0.2, 0.05, 0.01, 0.001] {
            let (s, trace) = run_paal(&instance1(), d, 100);
            let bound = 2 * ((1.0 / d).log2().ceil() as usize + 3);
            assert!(s.explore_rounds <= bound, "d = {d}: {}", s.explore_rounds);
            let (s2, trace2) = run_paal(&instance1(), d, 100);
            assert_eq!(s, s2);
            assert_eq!(trace, trace2);
        }
    }

    #[test]
    fn paal_bracket_contains_indifference_on_random_games() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        let d = 0.01;
        let mut checked = 0;
        while checked < 40 {
            let draw = |rng: &mut ChaCha8Rng| -> Vec<Vec<f64>> {
                (0..2).map(|_| (0..2).map(|_| rng.random_range(-5.0..5.0)).collect()).collect()
            };
            let g = GameInstance::from_rows(draw(&mut rng), draw(&mut rng)).unwrap();
            let b = g.b();
            // learner indifferent at p* where p·δ_1 + (1−p)·δ_2 = 0
            let (d1, d2) = (b[(0, 0)] - b[(0, 1)], b[(1, 0)] - b[(1, 1)]);
            if d1 * d2 >= 0.0 {
                continue;
            }
            let p_star = d2 / (d2 - d1);
            if !(d..=1.0 - d).contains(&p_star) {
                continue;
            }
            let (s, _) = run_paal(&g, d, 100);
            let (pl, pr) = s.bracket.unwrap();
            assert!(pl.min(pr) - 1e-12 <= p_star && p_star <= pl.max(pr) + 1e-12);
            // endpoints keep their best-response orientation
            let br_at = |p: f64| best_response_set(b, &ProbVector::two(p), 0.0);
            assert!(br_at(pl).contains(&0));
            assert!(br_at(pr).contains(&1));
            checked += 1;
        }
    }

    #[test]
    fn paal_pinned_learner_reads_as_stationary_best_response() {
        // learner starts at e_1 where column 1 is the best response to x = (0,1)
        let g = instance1();
        let mut opt = Paal::new(g.a().clone(), 0.01).unwrap();
        let mut learner = OgaLearner::new(g.b().clone(), 1.0, ProbVector::vertex(2, 0)).unwrap();
        play(&mut opt, &mut learner, 100);
        let s = opt.summary();
        assert!(s.degenerate_probes > 0);
        let (pl, pr) = s.bracket.unwrap();
        assert!(pl.min(pr) <= 0.6 && 0.6 <= pl.max(pr), "{pl} {pr}");
    }

    #[test]
    fn paal_rejects_bad_parameters() {
        assert!(Paal::new(Matrix::identity(3), 0.1).is_err());
        assert!(Paal::new(Matrix::identity(2), 0.0).is_err());
        assert!(Paal::new(Matrix::identity(2), 1.0).is_err());
    }

    fn kl_game() -> GameInstance {
        GameInstance::from_rows(
            vec![vec![0., 1.], vec![5., 0.]],
            vec![vec![2., -2.], vec![-3., 3.]],
        )
        .unwrap()
    }

    fn run_pamd(g: &GameInstance, k: usize, margin: f64, noise: f64, seed: u64, rounds: usize) -> CommitSummary {
        let mut opt = Pamd::new(g.a().clone(), k, margin, 0.0, 1.0).unwrap();
        let mut learner =
            KlLearner::new(g.b().clone(), 1.0, noise, ProbVector::uniform(g.n()), seed).unwrap();
        play(&mut opt, &mut learner, rounds);
        opt.summary()
    }

    #[test]
    fn pamd_noiseless_recovery() {
        let s = run_pamd(&kl_game(), 5, 0.01, 0.0, 0, 20);
        assert_eq!(s.explore_rounds, 12);
        let diff = max_class_difference(kl_game().b(), s.estimate.as_ref().unwrap()).unwrap();
        assert!(diff <= 1e-6, "{diff}");
    }

    #[test]
    fn pamd_noiseless_recovery_on_random_games() {
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        for _ in 0..30 {
            let size = rng.random_range(2..=3);
            let draw = |rng: &mut ChaCha8Rng| -> Vec<Vec<f64>> {
                (0..size).map(|_| (0..size).map(|_| rng.random_range(-5.0..5.0)).collect()).collect()
            };
            let g = GameInstance::from_rows(draw(&mut rng), draw(&mut rng)).unwrap();
            let s = run_pamd(&g, 5, 0.05, 0.0, 0, 6 * size + 1);
            let diff = max_class_difference(g.b(), s.estimate.as_ref().unwrap()).unwrap();
            assert!(diff <= 1e-6, "{diff}");
        }
    }

    #[test]
    fn pamd_commit_is_safe_when_margin_covers_error() {
        let g = kl_game();
        let mut safe = 0;
        for seed in 0..20 {
            let s = run_pamd(&g, 50, 0.1, 0.05, seed, 110);
            let diff = max_class_difference(g.b(), s.estimate.as_ref().unwrap()).unwrap();
            if s.fallback || diff > 0.1 {
                continue;
            }
            let x = s.committed.unwrap();
            let exact = solve_exact(&g).unwrap();
            assert_eq!(best_response_set(g.b(), &x, 1e-9), vec![exact.response]);
            safe += 1;
        }
        assert!(safe >= 15);
    }

    #[test]
    fn pamd_falls_back_when_over_tightened() {
        let s = run_pamd(&kl_game(), 5, 5.0, 0.0, 0, 20);
        assert!(s.fallback);
        assert!(s.committed.is_some());
    }

    #[test]
    fn oga_optimizer_moves_toward_better_row() {
        let a = m(vec![vec![1.0, 1.0], vec![0.0, 0.0]]);
        let mut opt = OgaOptimizer::new(a, 0.5).unwrap();
        for _ in 0..100 {
            opt.observe(&ProbVector::uniform(2)).unwrap();
        }
        assert_eq!(opt.current(), &ProbVector::vertex(2, 0));
        assert_eq!(opt.phase(), Phase::Online);
    }

    #[test]
    fn spec_round_trip() {
        let s: OptimizerSpec = serde_json::from_str(r#"{"kind": "paal", "d": 0.01}"#).unwrap();
        assert_eq!(s, OptimizerSpec::Paal { d: 0.01 });
        let s: OptimizerSpec =
            serde_json::from_str(r#"{"kind": "pamd", "k": 50, "margin": 0.02}"#).unwrap();
        assert_eq!(
            s,
            OptimizerSpec::Pamd { k: 50, margin: 0.02, slack: None, learner_eta0: 1.0 }
        );
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<OptimizerSpec>(&text).unwrap(), s);
        assert!(OptimizerSpec::Fixed { x: vec![1.0] }.build(&Matrix::identity(2), 10).is_err());
        assert!(OptimizerSpec::Pamd { k: 0, margin: 0.1, slack: None, learner_eta0: 1.0 }
            .build(&Matrix::identity(2), 10)
            .is_err());
        assert!((default_pamd_slack(10_000) - 0.1).abs() < 1e-12);
    }
}
