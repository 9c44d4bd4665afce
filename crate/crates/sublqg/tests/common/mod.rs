//! Shared fixtures and corpus builders for the integration suites.
//!
//! The library's internal test fixtures are not visible from integration
//! tests, so the two handwritten models are restated here.

#![allow(dead_code)]

use nalgebra::{dmatrix, DMatrix, DVector, SVD};
use sublqg::model::{Partition, SystemModel};
use sublqg::substitution::{generate_substitutable, GeneratorConfig};

/// Two controllers with identical scalar input blocks: dynamics and cost
/// depend only on u¹ + u², so either controller can stand in for both.
pub fn sum_example_sf() -> SystemModel {
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

/// The sum example with a two-row observation, one row per controller.
pub fn sum_example_of() -> SystemModel {
    let mut model = sum_example_sf();
    model.c = Some(dmatrix![1.0, 0.0; 1.0, 1.0]);
    model.sigma_v = Some(DMatrix::identity(2, 2) * 0.2);
    model.observation_partition = Some(Partition::uniform(2, 1));
    model
}

/// Scalar two-step regulator with hand-computable gains: K at the final
/// step is 0, the first-step gain is -1/2, and the first value matrix 3/2.
pub fn scalar_regulator() -> SystemModel {
    SystemModel {
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
    }
}

/// Scalar observer with unit state and observation noise: the first filter
/// gain is 1/2 and the first conditional variance 1/2.
pub fn scalar_observer() -> SystemModel {
    let mut model = scalar_regulator();
    model.c = Some(dmatrix![1.0]);
    model.sigma_v = Some(dmatrix![1.0]);
    model.sigma_w = dmatrix![0.5];
    model.observation_partition = Some(Partition::uniform(1, 1));
    model.horizon = 4;
    model
}

/// Shape table the corpora cycle through: (d_x, cost rows, block width,
/// controllers). Widths stay below d_x + d_c so an out-of-range direction
/// always exists for [`break_substitutability`], and d_x ≥ controllers so
/// every model carries a state partition.
const SHAPES: [(usize, usize, usize, usize); 5] =
    [(3, 2, 1, 2), (4, 3, 2, 2), (4, 2, 1, 3), (5, 3, 1, 2), (3, 3, 2, 3)];

/// Deterministic batch of substitutable state-feedback models.
pub fn sf_corpus(count: usize, base_seed: u64) -> Vec<SystemModel> {
    (0..count)
        .map(|i| {
            let (d_x, d_c, w, n) = SHAPES[i % SHAPES.len()];
            let config = GeneratorConfig::state_feedback(d_x, d_c, w, n);
            generate_substitutable(&config, base_seed + i as u64).unwrap()
        })
        .collect()
}

/// Deterministic batch of substitutable output-feedback models; observation
/// blocks alternate between one and two rows.
pub fn of_corpus(count: usize, base_seed: u64) -> Vec<SystemModel> {
    (0..count)
        .map(|i| {
            let (d_x, d_c, w, n) = SHAPES[i % SHAPES.len()];
            let mut config = GeneratorConfig::output_feedback(d_x, d_c, w, n);
            if i % 2 == 1 {
                let mut sizes = vec![1; n];
                sizes[0] = 2;
                config.observation_sizes = Some(sizes);
            }
            generate_substitutable(&config, base_seed + i as u64).unwrap()
        })
        .collect()
}

/// Stacked action pair [B; N].
pub fn stacked_pair(model: &SystemModel) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(model.d_x() + model.m.nrows(), model.d_u());
    s.rows_mut(0, model.d_x()).copy_from(&model.b);
    s.rows_mut(model.d_x(), model.m.nrows()).copy_from(&model.n);
    s
}

/// Stacked action pair of controller `i` only, [Bⁱ; Nⁱ].
pub fn stacked_block(model: &SystemModel, i: usize) -> DMatrix<f64> {
    let range = model.controller_partition.range(i);
    stacked_pair(model).columns(range.start, range.len()).into()
}

/// Pushes one column of controller 1's action block out of the common range,
/// so controller 0 can no longer reproduce the joint action.
///
/// The injected direction is the least-squares residual of a basis vector
/// against controller 0's stacked block, scaled to the pair's norm so the
/// violation clears any relative tolerance. Panics if controller 0 already
/// spans the whole stacked space (no such direction exists).
pub fn break_substitutability(model: &SystemModel) -> SystemModel {
    let s0 = stacked_block(model, 0);
    let rows = s0.nrows();
    let svd = SVD::new(s0.clone(), true, true);
    let escape = (0..rows)
        .map(|k| {
            let e = DVector::from_fn(rows, |r, _| if r == k { 1.0 } else { 0.0 });
            let fit = svd.solve(&e, 1e-12).expect("svd least squares");
            &e - &s0 * fit
        })
        .find(|r| r.norm() > 1e-6)
        .expect("controller 0 spans the whole stacked space; cannot break it");
    let direction = &escape / escape.norm() * (1.0 + stacked_pair(model).amax());

    let mut broken = model.clone();
    let col = model.controller_partition.offset(1);
    for r in 0..model.d_x() {
        broken.b[(r, col)] += direction[r];
    }
    for r in 0..model.m.nrows() {
        broken.n[(r, col)] += direction[model.d_x() + r];
    }
    broken
}
