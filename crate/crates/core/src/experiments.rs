//! Registered experiment configurations and their CSV outputs.

use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::game::GameInstance;
use crate::learners::{Budget, LearnerSpec};
use crate::sim::{run_seeds, write_aggregate, write_metrics_file, SimResult};
use crate::steering::OptimizerSpec;

pub const EXPERIMENT_NAMES: [&str; 6] = [
    "matching-pennies",
    "instance1",
    "instance2",
    "pamd-kl",
    "lower-bound-sweep",
    "impossibility",
];

/// Horizon of the dynamics experiments.
pub const DYNAMICS_T: usize = 100_000;
/// Horizon of the KL payoff-recovery experiment.
pub const PAMD_T: usize = 200_000;
/// Horizon of the lower-bound sweep.
pub const SWEEP_T: usize = 1_000_000;
/// Budget exponent in the lower-bound sweep, `f(T) = T^0.6`.
pub const SWEEP_BUDGET_POWER: f64 = 0.6;
/// Margin used by the ascent-learner steering runs.
pub const PAAL_D: f64 = 0.01;
/// Gap parameter of the impossibility game pair.
pub const IMPOSSIBILITY_EPS: f64 = 0.1;

/// Named game instances used by the registry.
pub mod games {
    use crate::game::GameInstance;

    fn g(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>) -> GameInstance {
        GameInstance::from_rows(a, b).expect("registry games are valid")
    }

    pub fn matching_pennies() -> GameInstance {
        g(vec![vec![1., -1.], vec![-1., 1.]], vec![vec![-1., 1.], vec![1., -1.]])
    }

    pub fn instance1() -> GameInstance {
        g(vec![vec![5., 0.], vec![0., 3.]], vec![vec![-2., 2.], vec![3., -3.]])
    }

    pub fn instance2() -> GameInstance {
        g(vec![vec![2., 0.], vec![3., 1.]], vec![vec![1., 0.], vec![0., 2.]])
    }

    pub fn kl_game() -> GameInstance {
        g(vec![vec![0., 1.], vec![5., 0.]], vec![vec![2., -2.], vec![-3., 3.]])
    }

    /// Optimizer matrix `[[0,0],[3,1]]` against the identity learner.
    pub fn lower_bound() -> GameInstance {
        g(vec![vec![0., 0.], vec![3., 1.]], vec![vec![1., 0.], vec![0., 1.]])
    }

    pub fn impossibility_g1(eps: f64) -> GameInstance {
        g(vec![vec![0., 0.], vec![1., eps]], vec![vec![0., eps], vec![0., 1.]])
    }

    pub fn impossibility_g2(eps: f64) -> GameInstance {
        g(vec![vec![0., 0.], vec![1., eps]], vec![vec![1., 0.], vec![0., 1.]])
    }
}

/// One optimizer/learner pairing inside an experiment.
#[derive(Clone, Debug)]
pub struct RegisteredRun {
    pub label: String,
    pub game: GameInstance,
    pub optimizer: OptimizerSpec,
    pub learner: LearnerSpec,
    pub horizon: usize,
    pub record_every: usize,
}

#[derive(Clone, Debug)]
pub struct Experiment {
    pub name: &'static str,
    pub runs: Vec<RegisteredRun>,
    /// Runs are seed-independent; only the first seed is simulated.
    pub deterministic: bool,
}

/// `x₂` grid of the lower-bound sweep: 0.30, 0.31, ..., 0.49.
pub fn sweep_grid() -> Vec<f64> {
    (30..50).map(|k| k as f64 / 100.0).collect()
}

/// Closed-form Stackelberg regret of committing to `(1 − x₂, x₂)` against
/// the budget learner on the lower-bound game.
pub fn sweep_formula(x2: f64, horizon: usize, f_t: f64) -> f64 {
    let t = horizon as f64;
    (1.5 - 3.0 * x2) * t + 2.0 * x2 * f_t / (1.0 - 2.0 * x2)
}

fn dynamics(game: GameInstance) -> Vec<RegisteredRun> {
    let learner = LearnerSpec::Oga { eta0: 1.0, y_init: None };
    vec![
        RegisteredRun {
            label: "paal".into(),
            game: game.clone(),
            optimizer: OptimizerSpec::Paal { d: PAAL_D },
            learner: learner.clone(),
            horizon: DYNAMICS_T,
            record_every: 100,
        },
        RegisteredRun {
            label: "oga".into(),
            game,
            optimizer: OptimizerSpec::Oga { eta0: 0.5 },
            learner,
            horizon: DYNAMICS_T,
            record_every: 100,
        },
    ]
}

/// Looks up a registered experiment.
pub fn experiment(name: &str) -> Result<Experiment> {
    let (name, runs, deterministic) = match name {
        "matching-pennies" => ("matching-pennies", dynamics(games::matching_pennies()), false),
        "instance1" => ("instance1", dynamics(games::instance1()), false),
        "instance2" => ("instance2", dynamics(games::instance2()), false),
        "pamd-kl" => {
            let runs = [0.01, 0.02, 0.05]
                .into_iter()
                .map(|d| RegisteredRun {
                    label: format!("pamd_d{d}"),
                    game: games::kl_game(),
                    optimizer: OptimizerSpec::Pamd {
                        k: 50,
                        margin: d,
                        slack: Some(0.0),
                        learner_eta0: 1.0,
                    },
                    learner: LearnerSpec::Kl { eta0: 1.0, noise: 0.05, y_init: None },
                    horizon: PAMD_T,
                    record_every: 100,
                })
                .collect();
            ("pamd-kl", runs, false)
        }
        "lower-bound-sweep" => {
            let runs = sweep_grid()
                .into_iter()
                .map(|x2| RegisteredRun {
                    label: format!("x2_{x2:.2}"),
                    game: games::lower_bound(),
                    optimizer: OptimizerSpec::Fixed { x: vec![1.0 - x2, x2] },
                    learner: LearnerSpec::Budget { budget: Budget::Power(SWEEP_BUDGET_POWER) },
                    horizon: SWEEP_T,
                    record_every: 10_000,
                })
                .collect();
            ("lower-bound-sweep", runs, true)
        }
        "impossibility" => {
            let eps = IMPOSSIBILITY_EPS;
            let learner = LearnerSpec::Switcher {
                epsilon: eps,
                threshold: None,
                g1_a: None,
                eta0: 1.0,
            };
            let fixed = OptimizerSpec::Fixed { x: vec![0.0, 1.0] };
            let runs = [("g1", games::impossibility_g1(eps)), ("g2", games::impossibility_g2(eps))]
                .into_iter()
                .map(|(label, game)| RegisteredRun {
                    label: label.into(),
                    game,
                    optimizer: fixed.clone(),
                    learner: learner.clone(),
                    horizon: DYNAMICS_T,
                    record_every: 100,
                })
                .collect();
            ("impossibility", runs, true)
        }
        other => {
            return Err(Error::Config(format!(
                "unknown experiment {other:?}; available: {}",
                EXPERIMENT_NAMES.join(", ")
            )))
        }
    };
    Ok(Experiment { name, runs, deterministic })
}

/// All seeds of one registered run.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub label: String,
    pub results: Vec<SimResult>,
}

/// Runs every configuration of `name`. With `out_dir`, writes one CSV per
/// seed (`{label}_seed{S}.csv`), one `{label}_aggregate.csv` per run, and for
/// the lower-bound sweep a `sweep.csv` summary.
pub fn run_experiment(name: &str, seeds: &[u64], out_dir: Option<&Path>) -> Result<Vec<RunOutcome>> {
    let exp = experiment(name)?;
    if seeds.is_empty() {
        return Err(Error::Config("seeds must be nonempty".into()));
    }
    let seeds = if exp.deterministic { &seeds[..1] } else { seeds };
    let outcomes = exp
        .runs
        .par_iter()
        .map(|run| {
            let results = run_seeds(
                &run.game,
                &run.optimizer,
                &run.learner,
                run.horizon,
                seeds,
                run.record_every,
            )?;
            Ok(RunOutcome { label: run.label.clone(), results })
        })
        .collect::<Result<Vec<_>>>()?;
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
        for (run, outcome) in exp.runs.iter().zip(&outcomes) {
            let (m, n) = (run.game.m(), run.game.n());
            for r in &outcome.results {
                let path = dir.join(format!("{}_seed{}.csv", run.label, r.seed));
                write_metrics_file(path, &r.rows, m, n)?;
            }
            let agg = fs::File::create(dir.join(format!("{}_aggregate.csv", run.label)))?;
            write_aggregate(agg, &outcome.results, m, n)?;
        }
        if exp.name == "lower-bound-sweep" {
            write_sweep_summary(&dir.join("sweep.csv"), &exp.runs, &outcomes)?;
        }
    }
    Ok(outcomes)
}

fn write_sweep_summary(path: &Path, runs: &[RegisteredRun], outcomes: &[RunOutcome]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["x2", "stackreg", "formula", "f_T"])?;
    for (run, outcome) in runs.iter().zip(outcomes) {
        let OptimizerSpec::Fixed { x } = &run.optimizer else {
            unreachable!("sweep runs commit to a fixed action");
        };
        let f_t = Budget::Power(SWEEP_BUDGET_POWER).at(run.horizon);
        let r = &outcome.results[0];
        w.write_record([
            x[1].to_string(),
            r.cum_stackreg_opt.to_string(),
            sweep_formula(x[1], run.horizon, f_t).to_string(),
            f_t.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
