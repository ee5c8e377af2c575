//! Steering no-regret learners to Stackelberg equilibria in repeated
//! bimatrix games.
//!
//! The crate covers the whole pipeline: exact and margin-adjusted Stackelberg
//! computation through per-facet linear programs, learner dynamics (projected
//! gradient ascent, KL mirror ascent and two adversarial constructions),
//! explore-then-commit optimizers, and a simulation harness that writes CSV
//! traces.

pub mod error;
pub mod game;
pub mod experiments;
pub mod facets;
pub mod learners;
pub mod linprog;
pub mod sim;
pub mod stackelberg;
pub mod steering;

pub use error::{Error, Result};
pub use facets::{
    facet_constraints, identify_facets, inducibility_gap, margin_facet, sensitivity_constant,
    FacetStatus, FacetSystem, MarginSign,
};
pub use game::{
    best_response_optimistic, best_response_set, class_difference, equiv_class, equiv_classes,
    max_class_difference, payoff, stackelberg_regret, trajectory_regret, EquivClassRep,
    GameInstance, Matrix, ProbVector, Round, Trace, BR_TOL,
};
pub use learners::{Learner, LearnerSpec};
pub use linprog::{Halfspace, LpProblem, LpSolution};
pub use sim::{run_simulation, ExperimentConfig, MetricsRow, SimResult};
pub use stackelberg::{
    brute_force_oracle, solve_exact, solve_extra_pessimistic, solve_margin, MarginOutcome,
    StackelbergSolution,
};
pub use steering::{Optimizer, OptimizerSpec, Phase};
