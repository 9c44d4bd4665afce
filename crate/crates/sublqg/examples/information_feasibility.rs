//! Auditing who actually uses which signals.
//!
//! The checker treats strategies as black boxes: it replays recorded
//! trajectories with one past signal perturbed at a time and flags any
//! action that moves although the signal is outside the controller's
//! declared information set. Decentralized output feedback passes under its
//! minimal set (own observations and own past actions); the centralized law
//! fails the same audit, and the violations name the borrowed signals.
//!
//! ```bash
//! cargo run --example information_feasibility
//! ```

use sublqg::decentralized::{check_information_feasibility, InfoStructure, StrategyProfile};
use sublqg::model::StrategyKind;
use sublqg::sim::simulate;
use sublqg::substitution::{generate_substitutable, GeneratorConfig};

fn main() {
    let mut config = GeneratorConfig::output_feedback(3, 2, 1, 2);
    config.horizon = 5;
    let model = generate_substitutable(&config, 21).unwrap();

    let decentralized = StrategyProfile::build(&model, StrategyKind::DecentralizedOf).unwrap();
    let centralized = StrategyProfile::build(&model, StrategyKind::CentralizedOf).unwrap();
    println!("declared (decentralized): {:?}", decentralized.declared);

    let histories = simulate(&model, &decentralized, 8, 3).unwrap().histories();
    let report = check_information_feasibility(&decentralized, &model, &histories).unwrap();
    println!(
        "decentralized under minimal sets: feasible = {} after {} probes",
        report.feasible, report.checked
    );

    // the centralized estimator reads every observation block; declaring
    // only the controller's own channel must fail
    let restricted = centralized.with_declared(InfoStructure::OwnObsHistory);
    let histories = simulate(&model, &restricted, 8, 3).unwrap().histories();
    let report = check_information_feasibility(&restricted, &model, &histories).unwrap();
    println!(
        "centralized under own-channel sets: feasible = {}",
        report.feasible
    );
    for v in report.violations.iter().take(6) {
        println!(
            "  controller {} at t={} moved {:.3e} when {:?} changed",
            v.controller,
            v.t + 1,
            v.action_delta,
            v.signal
        );
    }
}
