//! Adaptive lighting controller.
//!
//! A zero-order Takagi-Sugeno fuzzy system maps glare index, age, activity
//! and chronotype to a light intensity in `[0, 100]`. User corrections are
//! turned into rewards for a pair of Q-tables ("too bright" / "too dark")
//! and drive gradient steps on the rule consequents and Gaussian means, so
//! the suggestions drift toward the individual's preference.
//!
//! - [`inference`]: firing strengths, output, surface grids
//! - [`adapt`]: reward, Q-tables, TD update, parameter adaptation
//! - [`engine`]: learning state, sessions and persisted profiles
//! - [`sim`]: simulated users and the experiment harness
//! - [`store`]: directory of profile documents (feature `store`, on by default)

pub mod adapt;
pub mod engine;
pub mod error;
pub mod inference;
pub mod membership;
pub mod rules;
pub mod sim;
#[cfg(feature = "store")]
pub mod store;
pub mod variables;

pub use adapt::{
    action_index, adapt_parameters, adaptation_step, mean_gradient_factor, reward, state_index,
    td_update, AdaptationDelta, DriveSignal, FeedbackEvent, LearnerConfig, QTablePair, TableUsed,
};
pub use engine::{Engine, FeedbackOutcome, Session, UserProfile};
pub use error::{Error, Result};
pub use inference::{Axis, FiringVector, Fis, SurfaceGrid, DEFAULT_ACTIVATION_FLOOR};
pub use membership::{membership, MembershipFunction, MfKind};
pub use rules::{
    build_rule_base, export_rules, parse_rules, OutputLevel, Rule, RuleBase, OUTPUT_LEVELS,
};
#[cfg(feature = "store")]
pub use store::ProfileStore;
pub use sim::{
    learning_rate_sweep, run_experiment, ExperimentPreset, ExperimentRunner, ExperimentSpec,
    SimulatedUser, TrialRecord, TrialTrace, UserPolicy,
};
pub use variables::{
    build_default_variables, Activity, Chronotype, FuzzyVariable, InputState, VariableKind,
    Variables,
};
