use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use stacklab::experiments::{run_experiment, EXPERIMENT_NAMES};
use stacklab::facets::FacetSystem;
use stacklab::game::simplex_grid;
use stacklab::sim::write_metrics_file;
use stacklab::{
    run_simulation, solve_exact, Error, GameInstance, LearnerSpec, LpSolution, OptimizerSpec,
    StackelbergSolution, BR_TOL,
};

#[derive(Parser)]
#[command(name = "stacklab", version, about = "Steering no-regret learners in repeated bimatrix games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the Stackelberg game exactly and print the solution as JSON.
    Solve {
        #[arg(long)]
        game: PathBuf,
    },
    /// Run one seeded simulation and write its metrics CSV.
    Simulate {
        #[arg(long)]
        game: PathBuf,
        /// Optimizer spec, inline JSON or a path to a JSON file.
        #[arg(long)]
        optimizer: String,
        /// Learner spec, inline JSON or a path to a JSON file.
        #[arg(long)]
        learner: String,
        #[arg(long)]
        rounds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        record_every: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a registered experiment.
    Experiment {
        #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(EXPERIMENT_NAMES))]
        name: String,
        #[arg(long, default_value = "results")]
        out: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "0")]
        seeds: Vec<u64>,
    },
    /// Sample facet membership over a simplex grid (m <= 3).
    Facets {
        #[arg(long)]
        game: PathBuf,
        #[arg(long, default_value_t = 100)]
        resolution: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<Error>().map_or(2, Error::exit_code);
            ExitCode::from(code as u8)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Solve { game } => {
            let game = load_game(&game)?;
            let solution = solve_exact(&game)?;
            println!("{}", serde_json::to_string_pretty(&solution_json(&solution))?);
        }
        Command::Simulate { game, optimizer, learner, rounds, seed, record_every, out } => {
            let game = load_game(&game)?;
            let optimizer: OptimizerSpec = parse_spec(&optimizer, "optimizer")?;
            let learner: LearnerSpec = parse_spec(&learner, "learner")?;
            let result = run_simulation(&game, &optimizer, &learner, rounds, seed, record_every)?;
            write_metrics_file(&out, &result.rows, game.m(), game.n())?;
            eprintln!(
                "T={rounds} seed={seed}: learner regret {:.4}, Stackelberg regret {:.4}",
                result.cum_regret_learner, result.cum_stackreg_opt
            );
        }
        Command::Experiment { name, out, seeds } => {
            let outcomes = run_experiment(&name, &seeds, Some(&out))?;
            for o in &outcomes {
                for r in &o.results {
                    eprintln!(
                        "{name}/{} seed {}: Stackelberg regret {:.4}",
                        o.label, r.seed, r.cum_stackreg_opt
                    );
                }
            }
            eprintln!("wrote results to {}", out.display());
        }
        Command::Facets { game, resolution, out } => {
            let game = load_game(&game)?;
            write_facets(&game, resolution, &out)?;
        }
    }
    Ok(())
}

fn load_game(path: &Path) -> Result<GameInstance> {
    GameInstance::load(path).with_context(|| format!("loading game {}", path.display()))
}

/// Accepts inline JSON, falling back to reading the argument as a file path.
fn parse_spec<T: serde::de::DeserializeOwned>(arg: &str, what: &str) -> Result<T> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        fs::read_to_string(arg).map_err(|e| Error::Config(format!("{what}: cannot read {arg}: {e}")))?
    };
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{what}: {e}")).into())
}

fn solution_json(s: &StackelbergSolution) -> Value {
    let per_facet: Vec<Value> = s
        .per_facet
        .iter()
        .map(|f| match &f.solution {
            LpSolution::Optimal { value, .. } => {
                json!({"response": f.action + 1, "status": "optimal", "value": value})
            }
            LpSolution::Infeasible => {
                json!({"response": f.action + 1, "status": "infeasible", "value": null})
            }
        })
        .collect();
    json!({
        "value": s.value,
        "x_star": s.x_star.as_slice(),
        "response": s.response + 1,
        "per_facet": per_facet,
    })
}

fn write_facets(game: &GameInstance, resolution: usize, out: &Path) -> Result<()> {
    let (m, n) = (game.m(), game.n());
    if m > 3 {
        return Err(Error::Config(format!("facets: grid sampling supports m <= 3, got {m}")).into());
    }
    if resolution == 0 {
        return Err(Error::Config("facets: resolution must be positive".into()).into());
    }
    let system = FacetSystem::new(game.b())?;
    let mut w = BufWriter::new(File::create(out).map_err(Error::from)?);
    let header: Vec<String> = (1..=m)
        .map(|i| format!("x_{i}"))
        .chain((1..=n).map(|j| format!("facet_{j}")))
        .collect();
    writeln!(w, "{}", header.join(","))?;
    for x in simplex_grid(m, resolution) {
        let members = system.membership(&x, BR_TOL);
        let fields: Vec<String> = x
            .iter()
            .map(|v| v.to_string())
            .chain((0..n).map(|j| u8::from(members.contains(&j)).to_string()))
            .collect();
        writeln!(w, "{}", fields.join(","))?;
    }
    w.flush()?;
    Ok(())
}
