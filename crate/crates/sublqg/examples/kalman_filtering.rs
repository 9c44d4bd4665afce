//! Time-varying Kalman filtering and the batch conditioning cross-check.
//!
//! Runs one noisy trajectory of the output-feedback sum plant, tracks the
//! recursive estimate Z_t, and recomputes each Z_t by conditioning the joint
//! Gaussian of the whole history in one shot. The two agree to rounding.
//!
//! ```bash
//! cargo run --example kalman_filtering
//! ```

use nalgebra::{dmatrix, DMatrix, DVector};
use sublqg::kalman::{batch_conditioning_oracle, centralized_estimate_update, initial_estimate, solve_kalman};
use sublqg::model::{Partition, SystemModel};
use sublqg::sim::{draw_noise, step_dynamics};

fn main() {
    let model = SystemModel {
        a: dmatrix![0.8, 0.1; 0.0, 0.9],
        b: dmatrix![1.0, 1.0; 0.5, 0.5],
        m: dmatrix![1.0, 0.0; 0.0, 1.0; 0.0, 0.0],
        n: dmatrix![0.0, 0.0; 0.0, 0.0; 1.0, 1.0],
        c: Some(dmatrix![1.0, 0.0; 1.0, 1.0]),
        sigma_x: DMatrix::identity(2, 2),
        sigma_w: DMatrix::identity(2, 2) * 0.1,
        sigma_v: Some(DMatrix::identity(2, 2) * 0.2),
        controller_partition: Partition::uniform(2, 1),
        state_partition: Some(Partition::uniform(2, 1)),
        observation_partition: Some(Partition::uniform(2, 1)),
        horizon: 6,
        num_controllers: 2,
    };
    let filter = solve_kalman(&model).unwrap();
    println!("filter gains:");
    for (t, l) in filter.l.iter().enumerate() {
        println!("  t={} |L| = {:.4}", t + 1, l.amax());
    }

    // one open-loop trajectory with a fixed input sequence
    let bundle = draw_noise(&model, 5, 0);
    let c = model.c.as_ref().unwrap();
    let u_fixed = DVector::from_vec(vec![0.25, -0.5]);

    let mut x = bundle.x1.clone();
    let mut y_hist = vec![c * &x + &bundle.v[0]];
    let mut u_hist: Vec<DVector<f64>> = Vec::new();
    let mut z = initial_estimate(&filter, &y_hist[0]);

    for t in 0..model.horizon - 1 {
        x = step_dynamics(&model, &x, &u_fixed, &bundle.w[t]);
        let y = c * &x + &bundle.v[t + 1];
        z = centralized_estimate_update(&model, &filter, t, &z, &u_fixed, &y);
        u_hist.push(u_fixed.clone());
        y_hist.push(y);

        let batch = batch_conditioning_oracle(&model, &u_hist, &y_hist).unwrap();
        println!(
            "  t={} recursive z = [{:+.4}, {:+.4}]  batch gap {:.3e}  state error {:.4}",
            t + 2,
            z[0],
            z[1],
            (&batch - &z).amax(),
            (&x - &z).amax()
        );
    }
}
