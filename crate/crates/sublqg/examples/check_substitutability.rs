//! Deciding substitutability and building the substitution maps.
//!
//! Two controllers drive the same plant through the sum of their scalar
//! actions, so either one can replicate any joint action. A third variant
//! breaks the overlap and is rejected.
//!
//! ```bash
//! cargo run --example check_substitutability
//! ```

use nalgebra::{dmatrix, DMatrix, DVector};
use sublqg::model::{Partition, SystemModel};
use sublqg::substitution::{apply_substitution, check_substitutable, substitution_map};

fn sum_model() -> SystemModel {
    SystemModel {
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
    }
}

fn main() {
    let model = sum_model();
    let subs = check_substitutable(&model);
    println!("substitutable: {}", subs.substitutable);
    for i in 0..model.num_controllers {
        println!(
            "  controller {i}: residual {:.3e} (tolerance {:.3e})",
            subs.residuals[i], subs.tolerance
        );
    }

    // each map sends a joint action to the single action with the same effect
    let u = DVector::from_vec(vec![0.3, -1.2]);
    for i in 0..model.num_controllers {
        let lambda = substitution_map(&model, i);
        let v = apply_substitution(&subs, &u, i).unwrap();
        assert_eq!(&lambda * &u, v);
        let joint_effect = &model.b * &u;
        let solo_effect = model.b_block(i) * &v;
        println!(
            "  controller {i} replays u = {:?} as v = {:.4}, effect gap {:.3e}",
            u.as_slice(),
            v[0],
            (joint_effect - solo_effect).amax()
        );
    }

    // breaking the overlap: controller 1 keeps the cost channel only, so
    // controller 0's dynamics effect is out of its range
    let mut broken = sum_model();
    broken.b = dmatrix![1.0, 0.0; 0.5, 0.0];
    let verdict = check_substitutable(&broken);
    println!(
        "broken variant substitutable: {} (residuals {:?})",
        verdict.substitutable, verdict.residuals
    );
}
