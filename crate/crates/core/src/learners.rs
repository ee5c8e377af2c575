//! Learner dynamics: projected gradient ascent, KL mirror ascent, the
//! threshold switcher used in the impossibility construction, a budget
//! learner that spends a fixed regret allowance, and a constant action.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{Matrix, ProbVector};

/// Euclidean projection onto the probability simplex (sort and threshold).
pub fn project_simplex(v: &[f64]) -> Result<ProbVector> {
    if v.is_empty() {
        return Err(Error::InvalidParameter("projection of an empty vector".into()));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("projection input"));
    }
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumsum += uj;
        let candidate = (cumsum - 1.0) / (j + 1) as f64;
        if uj - candidate > 0.0 {
            theta = candidate;
        }
    }
    let mut w: Vec<f64> = v.iter().map(|x| (x - theta).max(0.0)).collect();
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= s);
    Ok(ProbVector::from_vec_unchecked(w))
}

/// `Π_Δ(y + η·Bᵀx)`.
pub fn oga_step(y: &ProbVector, x_prev: &ProbVector, b: &Matrix, eta: f64) -> Result<ProbVector> {
    check_dims(y, x_prev, b)?;
    let grad = b.left_mul(x_prev.as_slice());
    let moved: Vec<f64> = y.as_slice().iter().zip(&grad).map(|(a, g)| a + eta * g).collect();
    project_simplex(&moved)
}

/// `y_{t+1,i} ∝ y_{t,i}·exp((Bᵀx + ξ)_i / η)`, computed in log space.
pub fn kl_mirror_step(
    y: &ProbVector,
    x_prev: &ProbVector,
    b: &Matrix,
    eta: f64,
    noise: &[f64],
) -> Result<ProbVector> {
    check_dims(y, x_prev, b)?;
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::InvalidParameter(format!("eta {eta} must be positive")));
    }
    if noise.len() != y.len() {
        return Err(Error::DimensionMismatch("noise length differs from n".into()));
    }
    if y.as_slice().iter().any(|&v| v <= 0.0) {
        return Err(Error::InvalidParameter("KL step needs a strictly positive y".into()));
    }
    let mut logits: Vec<f64> = y.as_slice().iter().map(|v| v.ln()).collect();
    let grad = b.left_mul(x_prev.as_slice());
    for ((l, g), xi) in logits.iter_mut().zip(&grad).zip(noise) {
        *l += (g + xi) / eta;
    }
    Ok(softmax(&mut logits))
}

/// Normalizes logits in place (log-sum-exp) and returns the distribution.
/// Entries are floored at the smallest positive float so the KL domain is
/// never left.
fn softmax(logits: &mut [f64]) -> ProbVector {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    logits.iter_mut().for_each(|l| *l -= lse);
    ProbVector::from_vec_unchecked(
        logits.iter().map(|l| l.exp().max(f64::MIN_POSITIVE)).collect(),
    )
}

fn check_dims(y: &ProbVector, x: &ProbVector, b: &Matrix) -> Result<()> {
    if x.len() != b.rows() || y.len() != b.cols() {
        return Err(Error::DimensionMismatch(format!(
            "x has {} entries, y has {}, B is {}x{}",
            x.len(),
            y.len(),
            b.rows(),
            b.cols()
        )));
    }
    Ok(())
}

/// A learner repeatedly plays `current()` and then observes the optimizer's
/// action for that round.
pub trait Learner: Send {
    /// Action for the upcoming round.
    fn current(&self) -> &ProbVector;
    /// Updates after a round in which the optimizer played `x`.
    fn observe(&mut self, x: &ProbVector) -> Result<()>;
}

/// Projected online gradient ascent with `η_t = η₀/√t`.
#[derive(Clone, Debug)]
pub struct OgaLearner {
    b: Matrix,
    eta0: f64,
    t: usize,
    y: ProbVector,
}

impl OgaLearner {
    pub fn new(b: Matrix, eta0: f64, y_init: ProbVector) -> Result<Self> {
        positive("eta0", eta0)?;
        check_init(&b, &y_init)?;
        Ok(OgaLearner { b, eta0, t: 1, y: y_init })
    }

    pub fn eta(&self) -> f64 {
        self.eta0 / (self.t as f64).sqrt()
    }
}

impl Learner for OgaLearner {
    fn current(&self) -> &ProbVector {
        &self.y
    }

    fn observe(&mut self, x: &ProbVector) -> Result<()> {
        self.y = oga_step(&self.y, x, &self.b, self.eta())?;
        self.t += 1;
        Ok(())
    }
}

/// Stochastic mirror ascent with the KL divergence, regularizer weight
/// `η_t = η₀·√t` and Gaussian gradient noise of scale `R`.
#[derive(Clone, Debug)]
pub struct KlLearner {
    b: Matrix,
    eta0: f64,
    noise: Option<Normal<f64>>,
    rng: ChaCha8Rng,
    t: usize,
    logits: Vec<f64>,
    y: ProbVector,
}

impl KlLearner {
    pub fn new(b: Matrix, eta0: f64, noise_scale: f64, y_init: ProbVector, seed: u64) -> Result<Self> {
        positive("eta0", eta0)?;
        if !(noise_scale >= 0.0 && noise_scale.is_finite()) {
            return Err(Error::InvalidParameter(format!("noise scale {noise_scale} must be >= 0")));
        }
        check_init(&b, &y_init)?;
        if y_init.as_slice().iter().any(|&v| v <= 0.0) {
            return Err(Error::InvalidParameter("KL learner needs a strictly positive y_init".into()));
        }
        let noise = (noise_scale > 0.0)
            .then(|| Normal::new(0.0, noise_scale).expect("scale checked above"));
        Ok(KlLearner {
            b,
            eta0,
            noise,
            rng: ChaCha8Rng::seed_from_u64(seed),
            t: 1,
            logits: y_init.as_slice().iter().map(|v| v.ln()).collect(),
            y: y_init,
        })
    }

    pub fn eta(&self) -> f64 {
        self.eta0 * (self.t as f64).sqrt()
    }
}

impl Learner for KlLearner {
    fn current(&self) -> &ProbVector {
        &self.y
    }

    fn observe(&mut self, x: &ProbVector) -> Result<()> {
        if x.len() != self.b.rows() {
            return Err(Error::DimensionMismatch("optimizer action length".into()));
        }
        let eta = self.eta();
        let grad = self.b.left_mul(x.as_slice());
        for (l, g) in self.logits.iter_mut().zip(grad) {
            let xi = match &self.noise {
                Some(dist) => dist.sample(&mut self.rng),
                None => 0.0,
            };
            *l += (g + xi) / eta;
        }
        self.y = softmax(&mut self.logits);
        self.t += 1;
        Ok(())
    }
}

/// Plays `(0,1)` while tracking the optimizer's Stackelberg regret on the
/// reference game `G₁`; once it reaches `threshold`, switches for good to KL
/// mirror ascent on its own matrix, restarted from the uniform action.
#[derive(Clone, Debug)]
pub struct SwitcherLearner {
    g1_a: Matrix,
    epsilon: f64,
    threshold: f64,
    stack_regret: f64,
    observed: usize,
    switched_at: Option<usize>,
    fallback: KlLearner,
    hold: ProbVector,
}

impl SwitcherLearner {
    pub fn new(b: Matrix, g1_a: Matrix, epsilon: f64, threshold: f64, eta0: f64) -> Result<Self> {
        if b.cols() != 2 || g1_a.cols() != 2 || g1_a.rows() != b.rows() {
            return Err(Error::DimensionMismatch(
                "switcher needs two learner actions and matching reference game".into(),
            ));
        }
        if threshold.is_nan() || threshold < 0.0 {
            return Err(Error::InvalidParameter(format!("threshold {threshold} must be >= 0")));
        }
        let fallback = KlLearner::new(b, eta0, 0.0, ProbVector::uniform(2), 0)?;
        Ok(SwitcherLearner {
            g1_a,
            epsilon,
            threshold,
            stack_regret: 0.0,
            observed: 0,
            switched_at: None,
            fallback,
            hold: ProbVector::vertex(2, 1),
        })
    }

    /// Number of observed rounds at the moment of switching.
    pub fn switched_at(&self) -> Option<usize> {
        self.switched_at
    }

    pub fn tracked_regret(&self) -> f64 {
        self.stack_regret
    }
}

impl Learner for SwitcherLearner {
    fn current(&self) -> &ProbVector {
        match self.switched_at {
            Some(_) => self.fallback.current(),
            None => &self.hold,
        }
    }

    fn observe(&mut self, x: &ProbVector) -> Result<()> {
        if self.switched_at.is_some() {
            return self.fallback.observe(x);
        }
        if x.len() != self.g1_a.rows() {
            return Err(Error::DimensionMismatch("optimizer action length".into()));
        }
        self.observed += 1;
        self.stack_regret += self.epsilon - self.g1_a.bilinear(x.as_slice(), self.hold.as_slice());
        if self.stack_regret >= self.threshold {
            self.switched_at = Some(self.observed);
        }
        Ok(())
    }
}

/// Schedule of the budget learner against a constant optimizer action.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BudgetPlan {
    /// Rounds `1..=hold` play `(0,1)`; the rest play `(1,0)`.
    pub hold: usize,
}

impl BudgetPlan {
    pub fn action(&self, t: usize) -> ProbVector {
        if t <= self.hold {
            ProbVector::vertex(2, 1)
        } else {
            ProbVector::vertex(2, 0)
        }
    }
}

/// Against `x` with `x₂ < x₁`, stays on the worse action `(0,1)` exactly long
/// enough to spend the regret budget `f_T`, then plays the best response.
pub fn budget_learner_plan(x: &ProbVector, f_t: f64, horizon: usize) -> Result<BudgetPlan> {
    if x.len() != 2 {
        return Err(Error::DimensionMismatch("budget learner needs m = 2".into()));
    }
    if horizon == 0 {
        return Err(Error::InvalidParameter("horizon must be >= 1".into()));
    }
    if !(f_t >= 0.0 && f_t.is_finite()) {
        return Err(Error::InvalidParameter(format!("budget {f_t} must be >= 0")));
    }
    let (x1, x2) = (x[0], x[1]);
    let hold = if x2 >= x1 {
        horizon
    } else {
        ((f_t / (1.0 - 2.0 * x2)).floor() as usize).min(horizon)
    };
    Ok(BudgetPlan { hold })
}

/// Budget learner as a [`Learner`]: plays `(0,1)` in round 1, then follows
/// the plan computed from the optimizer's first action.
#[derive(Clone, Debug)]
pub struct BudgetLearner {
    f_t: f64,
    horizon: usize,
    t: usize,
    plan: Option<BudgetPlan>,
    y: ProbVector,
}

impl BudgetLearner {
    pub fn new(f_t: f64, horizon: usize) -> Result<Self> {
        if !(f_t >= 0.0 && f_t.is_finite()) {
            return Err(Error::InvalidParameter(format!("budget {f_t} must be >= 0")));
        }
        Ok(BudgetLearner {
            f_t,
            horizon,
            t: 1,
            plan: None,
            y: ProbVector::vertex(2, 1),
        })
    }

    pub fn plan(&self) -> Option<BudgetPlan> {
        self.plan
    }
}

impl Learner for BudgetLearner {
    fn current(&self) -> &ProbVector {
        &self.y
    }

    fn observe(&mut self, x: &ProbVector) -> Result<()> {
        if self.plan.is_none() {
            self.plan = Some(budget_learner_plan(x, self.f_t, self.horizon)?);
        }
        self.t += 1;
        self.y = self.plan.expect("set above").action(self.t);
        Ok(())
    }
}

/// Constant action.
#[derive(Clone, Debug)]
pub struct FixedLearner {
    y: ProbVector,
}

impl FixedLearner {
    pub fn new(y: ProbVector) -> Self {
        FixedLearner { y }
    }
}

impl Learner for FixedLearner {
    fn current(&self) -> &ProbVector {
        &self.y
    }

    fn observe(&mut self, _x: &ProbVector) -> Result<()> {
        Ok(())
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
    }
}

fn check_init(b: &Matrix, y: &ProbVector) -> Result<()> {
    if y.len() != b.cols() {
        return Err(Error::DimensionMismatch(format!(
            "y_init has {} entries, learner has {} actions",
            y.len(),
            b.cols()
        )));
    }
    Ok(())
}

/// Regret allowance `f(T)`: a constant or `T^exponent`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Budget {
    Constant(f64),
    Power(f64),
}

impl Budget {
    pub fn at(&self, horizon: usize) -> f64 {
        match *self {
            Budget::Constant(c) => c,
            Budget::Power(p) => (horizon as f64).powf(p),
        }
    }
}

fn default_eta0() -> f64 {
    1.0
}

/// Serializable learner configuration, e.g.
/// `{"kind": "oga", "eta0": 1.0, "y_init": [0.5, 0.5]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LearnerSpec {
    Oga {
        #[serde(default = "default_eta0")]
        eta0: f64,
        #[serde(default)]
        y_init: Option<Vec<f64>>,
    },
    Kl {
        #[serde(default = "default_eta0")]
        eta0: f64,
        #[serde(default)]
        noise: f64,
        #[serde(default)]
        y_init: Option<Vec<f64>>,
    },
    /// Reference game `G₁ = [[0,0],[1,ε]]` unless `g1_a` is given; the
    /// threshold defaults to `√(T·√T)`.
    Switcher {
        epsilon: f64,
        #[serde(default)]
        threshold: Option<f64>,
        #[serde(default)]
        g1_a: Option<Vec<Vec<f64>>>,
        #[serde(default = "default_eta0")]
        eta0: f64,
    },
    Budget {
        budget: Budget,
    },
    Fixed {
        y: Vec<f64>,
    },
}

impl LearnerSpec {
    /// Instantiates the learner for learner matrix `b`, horizon `T` and seed.
    pub fn build(&self, b: &Matrix, horizon: usize, seed: u64) -> Result<Box<dyn Learner>> {
        let init = |y: &Option<Vec<f64>>| match y {
            Some(v) => ProbVector::new(v.clone()),
            None => Ok(ProbVector::uniform(b.cols())),
        };
        Ok(match self {
            LearnerSpec::Oga { eta0, y_init } => {
                Box::new(OgaLearner::new(b.clone(), *eta0, init(y_init)?)?)
            }
            LearnerSpec::Kl { eta0, noise, y_init } => {
                Box::new(KlLearner::new(b.clone(), *eta0, *noise, init(y_init)?, seed)?)
            }
            LearnerSpec::Switcher {
                epsilon,
                threshold,
                g1_a,
                eta0,
            } => {
                let g1_a = match g1_a {
                    Some(rows) => Matrix::from_rows(rows.clone())?,
                    None => Matrix::from_rows(vec![vec![0.0, 0.0], vec![1.0, *epsilon]])?,
                };
                let t = horizon as f64;
                let threshold = threshold.unwrap_or_else(|| (t * t.sqrt()).sqrt());
                Box::new(SwitcherLearner::new(b.clone(), g1_a, *epsilon, threshold, *eta0)?)
            }
            LearnerSpec::Budget { budget } => {
                if b.cols() != 2 || b.rows() != 2 {
                    return Err(Error::DimensionMismatch("budget learner needs a 2x2 game".into()));
                }
                Box::new(BudgetLearner::new(budget.at(horizon), horizon)?)
            }
            LearnerSpec::Fixed { y } => {
                let y = ProbVector::new(y.clone())?;
                check_init(b, &y)?;
                Box::new(FixedLearner::new(y))
            }
        })
    }
}
