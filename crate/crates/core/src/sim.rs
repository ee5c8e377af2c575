//! Repeated-play harness: runs an optimizer against a learner, tracks both
//! cumulative regrets, thins the per-round metrics and writes CSV.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{GameInstance, ProbVector};
use crate::learners::LearnerSpec;
use crate::stackelberg::solve_exact;
use crate::steering::{CommitSummary, OptimizerSpec, Phase};

/// One recorded round.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRow {
    pub t: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub payoff_opt: f64,
    pub payoff_learner: f64,
    pub cum_regret_learner: f64,
    pub cum_stackreg_opt: f64,
    pub phase: Phase,
}

/// Outcome of a single seeded run.
#[derive(Clone, Debug)]
pub struct SimResult {
    pub seed: u64,
    pub horizon: usize,
    pub stackelberg_value: f64,
    pub rows: Vec<MetricsRow>,
    pub cum_regret_learner: f64,
    pub cum_stackreg_opt: f64,
    pub summary: CommitSummary,
}

impl SimResult {
    /// Mean optimizer payoff over rounds `after+1..=T`, recovered from the
    /// Stackelberg-regret column. `after` must be a recorded round or 0.
    pub fn mean_payoff_after(&self, after: usize) -> Option<f64> {
        let earned = |row: &MetricsRow| row.t as f64 * self.stackelberg_value - row.cum_stackreg_opt;
        let last = self.rows.last()?;
        if last.t != self.horizon || after >= self.horizon {
            return None;
        }
        let before = match after {
            0 => 0.0,
            t => earned(self.rows.iter().find(|r| r.t == t)?),
        };
        Some((earned(last) - before) / (self.horizon - after) as f64)
    }
}

/// Game given inline or as a path to a JSON file.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GameSource {
    Inline(GameInstance),
    Path(String),
}

impl GameSource {
    pub fn load(&self) -> Result<GameInstance> {
        match self {
            GameSource::Inline(g) => Ok(g.clone()),
            GameSource::Path(p) => GameInstance::load(p),
        }
    }
}

fn default_record_every() -> usize {
    1
}

/// Everything needed to reproduce a batch of runs.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub game: GameSource,
    pub optimizer: OptimizerSpec,
    pub learner: LearnerSpec,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub outputs: Option<String>,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::Config("T must be >= 1".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds must be nonempty".into()));
        }
        if self.record_every == 0 {
            return Err(Error::Config("record_every must be >= 1".into()));
        }
        Ok(())
    }

    /// Runs every seed in parallel; results come back in seed order.
    pub fn run(&self) -> Result<Vec<SimResult>> {
        self.validate()?;
        let game = self.game.load()?;
        run_seeds(
            &game,
            &self.optimizer,
            &self.learner,
            self.horizon,
            &self.seeds,
            self.record_every,
        )
    }
}

fn config_err(field: &str, e: Error) -> Error {
    match e {
        Error::NonFinite(_) | Error::Numeric(_) => e,
        other => Error::Config(format!("{field}: {other}")),
    }
}

/// Plays `horizon` simultaneous rounds and records metrics.
///
/// A round is recorded when `t = 1`, `t` is a multiple of `record_every`,
/// `t = T`, or the optimizer's phase differs from the previous round.
pub fn run_simulation(
    game: &GameInstance,
    optimizer: &OptimizerSpec,
    learner: &LearnerSpec,
    horizon: usize,
    seed: u64,
    record_every: usize,
) -> Result<SimResult> {
    if horizon == 0 {
        return Err(Error::Config("T must be >= 1".into()));
    }
    if record_every == 0 {
        return Err(Error::Config("record_every must be >= 1".into()));
    }
    let mut opt = optimizer
        .build(game.a(), horizon)
        .map_err(|e| config_err("optimizer", e))?;
    let mut lrn = learner
        .build(game.b(), horizon, seed)
        .map_err(|e| config_err("learner", e))?;
    let value = solve_exact(game)?.value;

    let (a, b) = (game.a(), game.b());
    let mut column_totals = vec![0.0; game.n()];
    let mut realized = 0.0;
    let mut stackreg = 0.0;
    let mut prev_phase = None;
    let mut rows = Vec::new();
    for t in 1..=horizon {
        let phase = opt.phase();
        let x: ProbVector = opt.current().clone();
        let y: ProbVector = lrn.current().clone();
        if x.len() != game.m() || y.len() != game.n() {
            return Err(Error::DimensionMismatch("strategy emitted a wrong-sized action".into()));
        }
        let xb = b.left_mul(x.as_slice());
        let payoff_learner: f64 = xb.iter().zip(y.as_slice()).map(|(u, v)| u * v).sum();
        let payoff_opt = a.bilinear(x.as_slice(), y.as_slice());
        if !(payoff_opt.is_finite() && payoff_learner.is_finite()) {
            return Err(Error::NonFinite("round payoff"));
        }
        for (tot, v) in column_totals.iter_mut().zip(&xb) {
            *tot += v;
        }
        realized += payoff_learner;
        stackreg += value - payoff_opt;

        let transition = prev_phase.is_some_and(|p| p != phase);
        if t == 1 || t % record_every == 0 || t == horizon || transition {
            let best = column_totals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            rows.push(MetricsRow {
                t,
                x: x.as_slice().to_vec(),
                y: y.as_slice().to_vec(),
                payoff_opt,
                payoff_learner,
                cum_regret_learner: best - realized,
                cum_stackreg_opt: stackreg,
                phase,
            });
        }
        prev_phase = Some(phase);

        opt.observe(&y)?;
        lrn.observe(&x)?;
    }
    let best = column_totals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(SimResult {
        seed,
        horizon,
        stackelberg_value: value,
        rows,
        cum_regret_learner: best - realized,
        cum_stackreg_opt: stackreg,
        summary: opt.summary(),
    })
}

/// Runs one simulation per seed in parallel, returned in seed order.
pub fn run_seeds(
    game: &GameInstance,
    optimizer: &OptimizerSpec,
    learner: &LearnerSpec,
    horizon: usize,
    seeds: &[u64],
    record_every: usize,
) -> Result<Vec<SimResult>> {
    seeds
        .par_iter()
        .map(|&s| run_simulation(game, optimizer, learner, horizon, s, record_every))
        .collect()
}

/// `t,x_1..x_m,y_1..y_n,payoff_opt,payoff_learner,cum_regret_learner,cum_stackreg_opt,phase`
pub fn csv_header(m: usize, n: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend((1..=m).map(|i| format!("x_{i}")));
    h.extend((1..=n).map(|j| format!("y_{j}")));
    h.extend(
        ["payoff_opt", "payoff_learner", "cum_regret_learner", "cum_stackreg_opt", "phase"]
            .map(String::from),
    );
    h
}

fn row_fields(r: &MetricsRow) -> Vec<String> {
    let mut f = vec![r.t.to_string()];
    f.extend(r.x.iter().chain(&r.y).map(|v| v.to_string()));
    f.extend(
        [r.payoff_opt, r.payoff_learner, r.cum_regret_learner, r.cum_stackreg_opt]
            .map(|v| v.to_string()),
    );
    f.push(r.phase.as_str().to_string());
    f
}

/// Writes metrics rows as CSV. Floats use the shortest round-trip form, so
/// identical runs give byte-identical files.
pub fn write_metrics<W: Write>(out: W, rows: &[MetricsRow], m: usize, n: usize) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(csv_header(m, n))?;
    for r in rows {
        w.write_record(row_fields(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_metrics_file(path: impl AsRef<Path>, rows: &[MetricsRow], m: usize, n: usize) -> Result<()> {
    write_metrics(File::create(path)?, rows, m, n)
}

/// Parses a metrics CSV back into rows.
pub fn read_metrics(path: impl AsRef<Path>) -> Result<(usize, usize, Vec<MetricsRow>)> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    let m = header.iter().filter(|h| h.starts_with("x_")).count();
    let n = header.iter().filter(|h| h.starts_with("y_")).count();
    if header.iter().collect::<Vec<_>>() != csv_header(m, n) {
        return Err(Error::Config(format!("unexpected metrics header: {header:?}")));
    }
    let num = |s: &str| -> Result<f64> {
        s.parse::<f64>()
            .map_err(|_| Error::Config(format!("bad number {s:?} in metrics CSV")))
    };
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let f: Vec<&str> = rec.iter().collect();
        let phase = match f[m + n + 5] {
            "explore" => Phase::Explore,
            "commit" => Phase::Commit,
            "online" => Phase::Online,
            other => return Err(Error::Config(format!("unknown phase {other:?}"))),
        };
        rows.push(MetricsRow {
            t: f[0]
                .parse()
                .map_err(|_| Error::Config(format!("bad round index {:?}", f[0])))?,
            x: f[1..=m].iter().map(|s| num(s)).collect::<Result<_>>()?,
            y: f[m + 1..=m + n].iter().map(|s| num(s)).collect::<Result<_>>()?,
            payoff_opt: num(f[m + n + 1])?,
            payoff_learner: num(f[m + n + 2])?,
            cum_regret_learner: num(f[m + n + 3])?,
            cum_stackreg_opt: num(f[m + n + 4])?,
            phase,
        });
    }
    Ok((m, n, rows))
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, var.sqrt())
}

/// Mean and sample standard deviation across seeds at every round recorded
/// by all runs.
pub fn write_aggregate<W: Write>(out: W, results: &[SimResult], m: usize, n: usize) -> Result<()> {
    let Some(first) = results.first() else {
        return Err(Error::Config("no runs to aggregate".into()));
    };
    let metric_names: Vec<String> = csv_header(m, n)[1..m + n + 5].to_vec();
    let mut header = vec!["t".to_string()];
    for name in &metric_names {
        header.push(format!("{name}_mean"));
        header.push(format!("{name}_std"));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&header)?;
    for row in &first.rows {
        let at_t: Vec<&MetricsRow> = results
            .iter()
            .filter_map(|r| r.rows.iter().find(|q| q.t == row.t))
            .collect();
        if at_t.len() != results.len() {
            continue;
        }
        let metrics = |r: &MetricsRow| -> Vec<f64> {
            let mut v: Vec<f64> = r.x.iter().chain(&r.y).copied().collect();
            v.extend([r.payoff_opt, r.payoff_learner, r.cum_regret_learner, r.cum_stackreg_opt]);
            v
        };
        let per_run: Vec<Vec<f64>> = at_t.iter().map(|r| metrics(r)).collect();
        let mut rec = vec![row.t.to_string()];
        for k in 0..metric_names.len() {
            let column: Vec<f64> = per_run.iter().map(|v| v[k]).collect();
            let (mean, std) = mean_std(&column);
            rec.push(mean.to_string());
            rec.push(std.to_string());
        }
        w.write_record(rec)?;
    }
    w.flush()?;
    Ok(())
}
