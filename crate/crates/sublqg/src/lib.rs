//! Decentralized LQG controller synthesis for systems with substitutable
//! control actions.
//!
//! For a linear plant whose dynamics and cost depend on the joint action only
//! through `B U_t` and `N U_t`, a controller `i` can substitute for the whole
//! team whenever `range([B; N]) ⊆ range([Bⁱ; Nⁱ])`. This crate decides that
//! condition, builds the substitution maps `Λⁱ`, and synthesizes decentralized
//! state-feedback and output-feedback strategies that provably achieve the
//! centralized-optimal quadratic cost. Exact cost evaluation by covariance
//! propagation and seeded Monte Carlo simulation verify the equality on every
//! model.
//!
//! Start with [`model::SystemModel`] (or a JSON scenario via
//! [`model::load_scenario`]), then:
//!
//! - [`substitution::check_substitutable`] decides substitutability and
//!   returns the maps `Λⁱ`,
//! - [`lqr::solve_centralized_lqr`] produces the optimal gains `K_t`,
//! - [`kalman::solve_kalman`] produces filter gains `L_t` for output feedback,
//! - [`decentralized::StrategyProfile`] assembles per-controller strategies,
//! - [`sim::simulate`] runs seeded closed-loop rollouts,
//! - [`analysis::compare`] reports exact and Monte Carlo costs side by side.
//!
//! The `sublqg` binary exposes the same pipeline as `check`, `solve`,
//! `simulate`, `compare`, and `generate` subcommands over JSON scenario files.

pub mod analysis;
pub mod cli;
pub mod decentralized;
pub mod kalman;
pub mod linalg;
pub mod lqr;
pub mod model;
pub mod rng;
pub mod sim;
pub mod substitution;

pub use analysis::{compare, exact_expected_cost, monte_carlo_cost, CostReport};
pub use decentralized::{
    check_information_feasibility, InfoStructure, Signal, StrategyProfile,
};
pub use kalman::{solve_kalman, FilterSchedule};
pub use lqr::{solve_centralized_lqr, GainSchedule};
pub use model::{
    load_scenario, save_scenario, validate_model, Mode, Partition, ScenarioConfig, StrategyKind,
    SystemModel,
};
pub use sim::{simulate, RunTrace, TraceSet};
pub use substitution::{
    check_substitutable, generate_substitutable, substitution_map, GeneratorConfig,
    SubstitutionSet,
};
