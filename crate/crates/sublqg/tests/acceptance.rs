//! Acceptance gate: one test per shipped guarantee, each printing a single
//! pass line with the measured worst case (visible with `--nocapture`).
//!
//! ```bash
//! cargo test --test acceptance -- --nocapture
//! ```

mod common;

use std::time::Instant;

use common::*;
use nalgebra::{DMatrix, DVector};
use sublqg::analysis::{exact_expected_cost, monte_carlo_cost};
use sublqg::decentralized::{
    check_information_feasibility, InfoStructure, StrategyProfile,
};
use sublqg::kalman::{batch_conditioning_oracle, solve_kalman};
use sublqg::lqr::solve_centralized_lqr;
use sublqg::model::{Mode, StrategyKind, SystemModel};
use sublqg::rng::{NoiseStream, StreamKind};
use sublqg::sim::simulate;
use sublqg::substitution::{check_substitutable, generate_substitutable, GeneratorConfig};

fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + a.abs().max(b.abs()))
}

/// Deterministic pseudo-random unit-scale vector for probing.
fn probe_vector(len: usize, seed: u64, t: usize) -> DVector<f64> {
    let mut stream = NoiseStream::new(seed, 0, StreamKind::Generator, t);
    DVector::from_vec(stream.standard_normal_vec(len))
}

#[test]
fn criterion_01_substitutability_soundness() {
    let start = Instant::now();
    let shapes = [(3, 2, 1, 2), (4, 3, 2, 2), (2, 2, 1, 3), (5, 3, 1, 2), (3, 3, 2, 3)];
    let mut worst = 0.0_f64;
    let mut models = Vec::new();
    for seed in 1..=100u64 {
        let (d_x, d_c, w, n) = shapes[seed as usize % shapes.len()];
        let model = if seed % 2 == 0 {
            generate_substitutable(&GeneratorConfig::output_feedback(d_x, d_c, w, n), seed)
        } else {
            generate_substitutable(&GeneratorConfig::state_feedback(d_x, d_c, w, n), seed)
        }
        .unwrap();
        let subs = check_substitutable(&model);
        let residual = subs.residuals.iter().cloned().fold(0.0_f64, f64::max);
        assert!(
            subs.substitutable && residual <= 1e-10,
            "seed {seed}: substitutable={} residual={residual:.3e}",
            subs.substitutable
        );
        worst = worst.max(residual);
        models.push(model);
    }
    for (i, model) in models.iter().enumerate() {
        let broken = break_substitutability(model);
        let subs = check_substitutable(&broken);
        assert!(!subs.substitutable, "perturbed model {i} still passed");
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:.2?}");
    println!(
        "criterion 01 pass: 100 generated models substitutable (worst residual {worst:.3e}), \
         100 perturbed models rejected, in {elapsed:.2?}"
    );
}

#[test]
fn criterion_02_substitution_exactness() {
    let mut models = sf_corpus(10, 300);
    models.extend(of_corpus(10, 350));
    let mut worst = 0.0_f64;
    for (m_idx, model) in models.iter().enumerate() {
        let subs = check_substitutable(model);
        assert!(subs.substitutable);
        for k in 0..1000 {
            let u = probe_vector(model.d_u(), 2000 + m_idx as u64, k);
            let tol = 1e-10 * (1.0 + u.amax());
            for i in 0..model.num_controllers {
                let v = subs.lambda(i) * &u;
                let b_gap = (&model.b * &u - model.b_block(i) * &v).amax();
                let n_gap = (&model.n * &u - model.n_block(i) * &v).amax();
                assert!(
                    b_gap <= tol && n_gap <= tol,
                    "model {m_idx} controller {i}: B gap {b_gap:.3e}, N gap {n_gap:.3e}"
                );
                worst = worst.max(b_gap.max(n_gap));
            }
        }
    }
    println!(
        "criterion 02 pass: substituted actions reproduce B and N effects on \
         20 models x 1000 actions (worst gap {worst:.3e})"
    );
}

/// Minimum of the deterministic quadratic cost over the whole open-loop
/// action sequence from a fixed x_1, by one least-squares solve. Independent
/// of the Riccati recursion.
fn brute_force_minimum_cost(model: &SystemModel, x1: &DVector<f64>) -> f64 {
    let t_max = model.horizon;
    let (d_u, d_c) = (model.d_u(), model.m.nrows());
    let mut f = DMatrix::<f64>::zeros(t_max * d_c, t_max * d_u);
    let mut g = DVector::<f64>::zeros(t_max * d_c);
    // x_t = A^{t-1} x_1 + sum_{k<t} A^{t-1-k} B u_k, row block t holds
    // M x_t + N u_t
    let mut a_pow_x1 = x1.clone();
    let mut reach: Vec<DMatrix<f64>> = Vec::new(); // A^{t-1-k} B per lag
    for t in 0..t_max {
        g.rows_mut(t * d_c, d_c).copy_from(&(&model.m * &a_pow_x1));
        for (k, map) in reach.iter().enumerate() {
            f.view_mut((t * d_c, k * d_u), (d_c, d_u))
                .copy_from(&(&model.m * map));
        }
        f.view_mut((t * d_c, t * d_u), (d_c, d_u)).copy_from(&model.n);
        reach = reach.iter().map(|map| &model.a * map).collect();
        reach.push(model.b.clone());
        a_pow_x1 = &model.a * a_pow_x1;
    }
    let best = nalgebra::SVD::new(f.clone(), true, true)
        .solve(&(-&g), 1e-12)
        .expect("least squares");
    (f * best + g).norm_squared()
}

/// Deterministic rollout of the synthesized feedback from x_1.
fn feedback_rollout_cost(model: &SystemModel, x1: &DVector<f64>) -> f64 {
    let schedule = solve_centralized_lqr(model);
    let mut x = x1.clone();
    let mut cost = 0.0;
    for t in 0..model.horizon {
        let u = &schedule.k[t] * &x;
        cost += (&model.m * &x + &model.n * &u).norm_squared();
        x = &model.a * x + &model.b * u;
    }
    cost
}

#[test]
fn criterion_03_lqr_matches_brute_force() {
    let shapes = [(2, 2, 1, 1), (3, 2, 1, 2), (4, 3, 1, 3), (3, 3, 3, 1), (4, 2, 2, 1)];
    let mut worst = 0.0_f64;
    for i in 0..20u64 {
        let (d_x, d_c, w, n) = shapes[i as usize % shapes.len()];
        let mut config = GeneratorConfig::state_feedback(d_x, d_c, w, n);
        config.horizon = 2 + (i as usize % 3);
        let model = generate_substitutable(&config, 3000 + i).unwrap();
        let x1 = probe_vector(model.d_x(), 3100 + i, 0);
        let predicted = (x1.transpose() * &solve_centralized_lqr(&model).p[0] * &x1)[(0, 0)];
        let brute = brute_force_minimum_cost(&model, &x1);
        let rollout = feedback_rollout_cost(&model, &x1);
        let gap = relative_gap(predicted, brute).max(relative_gap(predicted, rollout));
        assert!(
            gap <= 1e-6,
            "model {i}: predicted {predicted:.9}, brute force {brute:.9}, rollout {rollout:.9}"
        );
        worst = worst.max(gap);
    }

    let schedule = solve_centralized_lqr(&scalar_regulator());
    assert!((schedule.k[1][(0, 0)] - 0.0).abs() <= 1e-12);
    assert!((schedule.k[0][(0, 0)] - (-0.5)).abs() <= 1e-12);
    assert!((schedule.p[0][(0, 0)] - 1.5).abs() <= 1e-12);
    println!(
        "criterion 03 pass: value matrix meets brute-force optimum on 20 models \
         (worst relative gap {worst:.3e}); scalar gains -1/2, 0 and value 3/2 exact"
    );
}

#[test]
fn criterion_04_kalman_matches_batch_conditioning() {
    let mut worst = 0.0_f64;
    for (m_idx, model) in of_corpus(20, 500).iter().enumerate() {
        let profile = StrategyProfile::build(model, StrategyKind::CentralizedOf).unwrap();
        let trace = &simulate(model, &profile, 4000 + m_idx as u64, 1).unwrap().runs[0];
        for steps in 1..=4usize {
            let batch =
                batch_conditioning_oracle(model, &trace.u[..steps - 1], &trace.y[..steps])
                    .unwrap();
            let gap = (&trace.z[steps - 1] - batch).amax();
            assert!(gap <= 1e-7, "model {m_idx} step {steps}: gap {gap:.3e}");
            worst = worst.max(gap);
        }
    }

    let schedule = solve_kalman(&scalar_observer()).unwrap();
    assert!((schedule.l[0][(0, 0)] - 0.5).abs() <= 1e-15);
    assert!((schedule.sigma[0][(0, 0)] - 0.5).abs() <= 1e-15);
    println!(
        "criterion 04 pass: recursive estimates match joint-Gaussian conditioning on \
         20 models x 4 steps (worst gap {worst:.3e}); scalar gain and variance 1/2 exact"
    );
}

#[test]
fn criterion_05_estimator_sum_identity() {
    let mut worst = 0.0_f64;
    for (m_idx, model) in of_corpus(20, 600).iter().enumerate() {
        assert_eq!(model.horizon, 10);
        let profile = StrategyProfile::build(model, StrategyKind::DecentralizedOf).unwrap();
        let set = simulate(model, &profile, 5000 + m_idx as u64, 100).unwrap();
        let residual = set
            .summary()
            .estimator_sum_residual_max
            .expect("decentralized runs track the estimator sum");
        assert!(residual <= 1e-8, "model {m_idx}: residual {residual:.3e}");
        worst = worst.max(residual);
    }
    println!(
        "criterion 05 pass: local estimates sum to the centralized estimate over \
         20 models x 100 runs x 10 steps (worst scaled residual {worst:.3e})"
    );
}

#[test]
fn criterion_06_state_feedback_equivalence() {
    let mut worst = 0.0_f64;
    for (m_idx, model) in sf_corpus(20, 700).iter().enumerate() {
        let cen = StrategyProfile::build(model, StrategyKind::CentralizedSf).unwrap();
        let dec = StrategyProfile::build(model, StrategyKind::DecentralizedSf).unwrap();
        let seed = 6000 + m_idx as u64;
        let cen_set = simulate(model, &cen, seed, 50).unwrap();
        let dec_set = simulate(model, &dec, seed, 50).unwrap();
        for (a, b) in cen_set.runs.iter().zip(&dec_set.runs) {
            for (xa, xb) in a.x.iter().zip(&b.x) {
                let gap = (xa - xb).amax() / (1.0 + xa.amax());
                assert!(gap <= 1e-8, "model {m_idx} run {}: state gap {gap:.3e}", a.run);
                worst = worst.max(gap);
            }
            let gap = relative_gap(a.total_cost, b.total_cost);
            assert!(gap <= 1e-8, "model {m_idx} run {}: cost gap {gap:.3e}", a.run);
            worst = worst.max(gap);
        }
    }
    println!(
        "criterion 06 pass: state-feedback trajectories and per-run costs coincide on \
         20 models x 50 paired runs (worst relative gap {worst:.3e})"
    );
}

#[test]
fn criterion_07_output_feedback_equivalence() {
    let mut worst_run = 0.0_f64;
    let mut worst_exact = 0.0_f64;
    for (m_idx, model) in of_corpus(20, 800).iter().enumerate() {
        let cen = StrategyProfile::build(model, StrategyKind::CentralizedOf).unwrap();
        let dec = StrategyProfile::build(model, StrategyKind::DecentralizedOf).unwrap();
        let seed = 7000 + m_idx as u64;
        let cen_set = simulate(model, &cen, seed, 50).unwrap();
        let dec_set = simulate(model, &dec, seed, 50).unwrap();
        for (a, b) in cen_set.runs.iter().zip(&dec_set.runs) {
            let gap = relative_gap(a.total_cost, b.total_cost);
            assert!(gap <= 1e-8, "model {m_idx} run {}: cost gap {gap:.3e}", a.run);
            worst_run = worst_run.max(gap);
        }
        let exact_gap = relative_gap(
            exact_expected_cost(model, &cen).unwrap(),
            exact_expected_cost(model, &dec).unwrap(),
        );
        assert!(exact_gap <= 1e-9, "model {m_idx}: exact gap {exact_gap:.3e}");
        worst_exact = worst_exact.max(exact_gap);
    }
    println!(
        "criterion 07 pass: output-feedback per-run costs coincide on 20 models x 50 \
         paired runs (worst {worst_run:.3e}); exact expected costs match (worst {worst_exact:.3e})"
    );
}

#[test]
fn criterion_08_baseline_ordering() {
    let mut models = sf_corpus(10, 900);
    models.extend(of_corpus(10, 950));
    let mut strictly_worse = 0usize;
    for (m_idx, model) in models.iter().enumerate() {
        let (cen_kind, dec_kind) = match model.mode() {
            Mode::StateFeedback => (StrategyKind::CentralizedSf, StrategyKind::DecentralizedSf),
            Mode::OutputFeedback => (StrategyKind::CentralizedOf, StrategyKind::DecentralizedOf),
        };
        let cen = exact_expected_cost(
            model,
            &StrategyProfile::build(model, cen_kind).unwrap(),
        )
        .unwrap();
        let dec = exact_expected_cost(
            model,
            &StrategyProfile::build(model, dec_kind).unwrap(),
        )
        .unwrap();
        let zero = exact_expected_cost(
            model,
            &StrategyProfile::build(model, StrategyKind::Zero).unwrap(),
        )
        .unwrap();
        assert!(relative_gap(cen, dec) <= 1e-9, "model {m_idx}: cen {cen} dec {dec}");
        assert!(
            zero >= cen - 1e-9 * (1.0 + cen.abs()),
            "model {m_idx}: baseline {zero} beat optimum {cen}"
        );
        if zero > cen + 1e-6 * (1.0 + cen.abs()) {
            strictly_worse += 1;
        }
    }
    assert!(strictly_worse >= 18, "only {strictly_worse}/20 strictly worse");
    println!(
        "criterion 08 pass: doing nothing never beats the optimum on 20 models and is \
         strictly worse on {strictly_worse}/20"
    );
}

#[test]
fn criterion_09_information_feasibility() {
    let cases = [
        (sf_corpus(3, 1100), StrategyKind::CentralizedSf, StrategyKind::DecentralizedSf,
         InfoStructure::OwnCurrentState),
        (of_corpus(3, 1150), StrategyKind::CentralizedOf, StrategyKind::DecentralizedOf,
         InfoStructure::OwnObsHistory),
    ];
    for (models, cen_kind, dec_kind, minimal) in cases {
        for (m_idx, model) in models.iter().enumerate() {
            let dec = StrategyProfile::build(model, dec_kind)
                .unwrap()
                .with_declared(minimal);
            let histories = simulate(model, &dec, 8000 + m_idx as u64, 2)
                .unwrap()
                .histories();
            let report = check_information_feasibility(&dec, model, &histories).unwrap();
            assert!(
                report.feasible,
                "{dec_kind:?} on model {m_idx} violated {minimal:?}: {:?}",
                report.violations.first()
            );

            let cen = StrategyProfile::build(model, cen_kind)
                .unwrap()
                .with_declared(minimal);
            let histories = simulate(model, &cen, 8000 + m_idx as u64, 2)
                .unwrap()
                .histories();
            let report = check_information_feasibility(&cen, model, &histories).unwrap();
            assert!(
                !report.feasible,
                "{cen_kind:?} on model {m_idx} passed under {minimal:?}"
            );
        }
    }
    println!(
        "criterion 09 pass: decentralized profiles use only their declared minimal \
         information on 6 models; centralized profiles fail the same audit"
    );
}

#[test]
fn criterion_10_statistical_consistency() {
    let sf_model = &sf_corpus(1, 42)[0];
    let of_model = &of_corpus(1, 43)[0];
    let cases: [(&SystemModel, StrategyKind); 6] = [
        (sf_model, StrategyKind::CentralizedSf),
        (sf_model, StrategyKind::DecentralizedSf),
        (sf_model, StrategyKind::Zero),
        (of_model, StrategyKind::CentralizedOf),
        (of_model, StrategyKind::DecentralizedOf),
        (of_model, StrategyKind::Zero),
    ];
    let mut worst_sigma = 0.0_f64;
    for (model, kind) in cases {
        let profile = StrategyProfile::build(model, kind).unwrap();
        let exact = exact_expected_cost(model, &profile).unwrap();
        let stats = monte_carlo_cost(model, &profile, 9000, 5000, 4).unwrap();
        let sigmas = (stats.mean - exact).abs() / stats.std_error;
        assert!(
            sigmas <= 3.0,
            "{kind:?}: mean {} vs exact {exact} is {sigmas:.2} standard errors",
            stats.mean
        );
        worst_sigma = worst_sigma.max(sigmas);
    }
    println!(
        "criterion 10 pass: 5000-run Monte Carlo means sit within 3 standard errors of \
         the exact costs for all five profiles (worst {worst_sigma:.2} SE)"
    );
}
