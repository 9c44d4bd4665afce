//! Solving the centralized LQR gain schedule, including the singular case.
//!
//! The scalar plant with cost x² + u² reproduces the closed-form gains
//! K_1 = -0.5, K_2 = 0 and values P_1 = 1.5, P_2 = 1. The two-controller sum
//! plant has a rank-one action Hessian at every step (only u¹ + u² matters),
//! which the solver flags while returning minimum-norm gains.
//!
//! ```bash
//! cargo run --example solve_gains
//! ```

use nalgebra::{dmatrix, DMatrix};
use sublqg::lqr::{gain_block, solve_centralized_lqr};
use sublqg::model::{Partition, SystemModel};

fn main() {
    let scalar = SystemModel {
        a: dmatrix![1.0],
        b: dmatrix![1.0],
        m: dmatrix![1.0; 0.0],
        n: dmatrix![0.0; 1.0],
        c: None,
        sigma_x: dmatrix![1.0],
        sigma_w: dmatrix![0.0],
        sigma_v: None,
        controller_partition: Partition::uniform(1, 1),
        state_partition: Some(Partition::uniform(1, 1)),
        observation_partition: None,
        horizon: 2,
        num_controllers: 1,
    };
    let schedule = solve_centralized_lqr(&scalar);
    println!("scalar plant, horizon 2:");
    for t in 0..schedule.horizon() {
        println!(
            "  t={} K = {:+.4}  P = {:.4}",
            t + 1,
            schedule.k[t][(0, 0)],
            schedule.p[t][(0, 0)]
        );
    }

    let sum = SystemModel {
        a: dmatrix![0.8, 0.1; 0.0, 0.9],
        b: dmatrix![1.0, 1.0; 0.5, 0.5],
        m: dmatrix![1.0, 0.0; 0.0, 1.0; 0.0, 0.0],
        n: dmatrix![0.0, 0.0; 0.0, 0.0; 1.0, 1.0],
        c: None,
        sigma_x: DMatrix::identity(2, 2),
        sigma_w: DMatrix::identity(2, 2) * 0.1,
        sigma_v: None,
        controller_partition: Partition::uniform(2, 1),
        state_partition: Some(Partition::uniform(2, 1)),
        observation_partition: None,
        horizon: 4,
        num_controllers: 2,
    };
    let schedule = solve_centralized_lqr(&sum);
    println!(
        "sum plant: every action Hessian is singular, flagged steps {:?}",
        schedule.singular_steps
    );
    // minimum-norm splits the shared action evenly between the controllers
    for t in 0..schedule.horizon() {
        println!("  t={} K =\n{}", t + 1, schedule.k[t]);
    }
    let block = gain_block(&schedule, 0, 1).unwrap();
    println!("first-step gain columns for subsystem 1:\n{block}");
}
