//! Exact expected costs by covariance propagation, Monte Carlo estimates,
//! and the centralized-versus-decentralized comparison report.
//!
//! The exact routine never samples: it propagates the covariance of an
//! augmented state (plant state plus whichever estimates the profile keeps)
//! through the closed loop and accumulates `tr(Rᵀ R Cov)` per stage. The
//! Monte Carlo routine reuses the seeded simulator, so exact and sampled
//! numbers for the same profile are independent computations of one quantity.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::decentralized::{StrategyError, StrategyProfile};
use crate::model::{Mode, StrategyKind, SystemModel};
use crate::sim::{simulate_with_jobs, SimError, TraceSet};
use crate::substitution::check_substitutable;

/// Relative tolerance for "two exact costs are the same number".
pub const EXACT_COST_TOL: f64 = 1e-9;
/// Relative tolerance for pathwise per-run cost agreement.
pub const PATHWISE_COST_TOL: f64 = 1e-8;

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error(
        "model is not substitutable (max residual {max_residual:.3e}); \
         centralized exact cost {centralized_cost}"
    )]
    NotSubstitutable {
        residuals: Vec<f64>,
        max_residual: f64,
        centralized_cost: f64,
    },
    #[error("exact cost needs one strategy kind shared by all controllers")]
    NonuniformProfile,
    #[error("profile is missing its {which} schedule")]
    MissingSchedule { which: &'static str },
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

fn require_mode(model: &SystemModel, kind: StrategyKind) -> Result<(), AnalysisError> {
    match kind.required_mode() {
        Some(required) if required != model.mode() => {
            Err(AnalysisError::Strategy(StrategyError::ModeMismatch {
                kind,
                required,
                actual: model.mode(),
            }))
        }
        _ => Ok(()),
    }
}

fn set_block(target: &mut DMatrix<f64>, row: usize, col: usize, block: &DMatrix<f64>) {
    target
        .view_mut((row, col), (block.nrows(), block.ncols()))
        .copy_from(block);
}

fn block_diag(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    set_block(&mut out, 0, 0, a);
    set_block(&mut out, a.nrows(), a.ncols(), b);
    out
}

/// One covariance-propagation stage: cost of `R ξ` plus the transition
/// `ξ⁺ = G ξ + H η` with `η ~ N(0, Σ_η)`.
fn propagate(
    cov: &mut DMatrix<f64>,
    r: &DMatrix<f64>,
    transition: Option<(&DMatrix<f64>, &DMatrix<f64>, &DMatrix<f64>)>,
) -> f64 {
    let stage = (r * &*cov * r.transpose()).trace();
    if let Some((g, h, sigma)) = transition {
        *cov = g * &*cov * g.transpose() + h * sigma * h.transpose();
    }
    stage
}

/// Closed-loop cost when `u_t = D_t x_t` for a given schedule of state maps.
fn state_feedback_cost(model: &SystemModel, d: &dyn Fn(usize) -> DMatrix<f64>) -> f64 {
    let mut cov = model.sigma_x.clone();
    let mut total = 0.0;
    for t in 0..model.horizon {
        let d_t = d(t);
        let r = &model.m + &model.n * &d_t;
        let g = &model.a + &model.b * &d_t;
        let last = t + 1 == model.horizon;
        total += propagate(
            &mut cov,
            &r,
            (!last).then_some((&g, &DMatrix::identity(model.d_x(), model.d_x()), &model.sigma_w)),
        );
    }
    total
}

/// Expected total cost of the profile in closed loop, computed exactly.
///
/// Requires all controllers to share one strategy kind; mixed profiles are
/// rejected because their closed loop has no single augmented-state form
/// implemented here.
pub fn exact_expected_cost(
    model: &SystemModel,
    profile: &StrategyProfile,
) -> Result<f64, AnalysisError> {
    let kind = profile
        .uniform_kind()
        .ok_or(AnalysisError::NonuniformProfile)?;
    require_mode(model, kind)?;
    let gains = || {
        profile
            .gains
            .as_ref()
            .ok_or(AnalysisError::MissingSchedule { which: "gain" })
    };
    let filter = || {
        profile
            .filter
            .as_ref()
            .ok_or(AnalysisError::MissingSchedule { which: "filter" })
    };
    match kind {
        StrategyKind::Zero => {
            let zero = DMatrix::zeros(model.d_u(), model.d_x());
            Ok(state_feedback_cost(model, &|_| zero.clone()))
        }
        StrategyKind::CentralizedSf => {
            let gains = gains()?;
            Ok(state_feedback_cost(model, &|t| gains.k[t].clone()))
        }
        StrategyKind::DecentralizedSf => {
            let gains = gains()?;
            let subs = profile
                .substitution
                .as_ref()
                .ok_or(AnalysisError::MissingSchedule { which: "substitution" })?;
            let sp = gains
                .state_partition
                .as_ref()
                .ok_or(AnalysisError::Strategy(StrategyError::Lqr(
                    crate::lqr::LqrError::MissingPartition,
                )))?;
            let cp = &model.controller_partition;
            // Block-diagonal-in-structure map: controller i feeds Λⁱ Kⁱ_t
            // of its own state block into its own action block.
            let d = |t: usize| {
                let mut d_t = DMatrix::zeros(model.d_u(), model.d_x());
                for i in 0..model.num_controllers {
                    let rows = cp.range(i);
                    let cols = sp.range(i);
                    let k_block = gains.k[t].columns(cols.start, cols.len()).into_owned();
                    let action_map = subs.lambdas[i].clone() * k_block;
                    d_t.view_mut((rows.start, cols.start), (rows.len(), cols.len()))
                        .copy_from(&action_map);
                }
                d_t
            };
            Ok(state_feedback_cost(model, &d))
        }
        StrategyKind::CentralizedOf => {
            let gains = gains()?;
            let filter = filter()?;
            let c = model.c.as_ref().expect("output-feedback mode checked");
            let sigma_v = model.sigma_v.as_ref().expect("output-feedback mode checked");
            let d_x = model.d_x();
            let d_y = model.d_y();
            let eye_x = DMatrix::identity(d_x, d_x);

            // Augmented state (x_t; z_t); the estimate is driven by y_{t+1}.
            let mut init = DMatrix::zeros(2 * d_x, d_x + d_y);
            set_block(&mut init, 0, 0, &eye_x);
            set_block(&mut init, d_x, 0, &(&filter.l[0] * c));
            set_block(&mut init, d_x, d_x, &filter.l[0]);
            let noise0 = block_diag(&model.sigma_x, sigma_v);
            let mut cov = &init * noise0 * init.transpose();
            let sigma_step = block_diag(&model.sigma_w, sigma_v);

            let mut total = 0.0;
            for t in 0..model.horizon {
                let k = &gains.k[t];
                let mut r = DMatrix::zeros(model.d_c(), 2 * d_x);
                set_block(&mut r, 0, 0, &model.m);
                set_block(&mut r, 0, d_x, &(&model.n * k));
                let last = t + 1 == model.horizon;
                if last {
                    total += propagate(&mut cov, &r, None);
                    break;
                }
                let l = &filter.l[t + 1];
                let lc = l * c;
                let mut g = DMatrix::zeros(2 * d_x, 2 * d_x);
                set_block(&mut g, 0, 0, &model.a);
                set_block(&mut g, 0, d_x, &(&model.b * k));
                set_block(&mut g, d_x, 0, &(&lc * &model.a));
                // z' = (I - L'C)(A + BK)z + L'y' and y' carries another BKz
                // through the plant, leaving A + BK - L'CA in total.
                set_block(&mut g, d_x, d_x, &(&model.a + &model.b * k - &lc * &model.a));
                let mut h = DMatrix::zeros(2 * d_x, d_x + d_y);
                set_block(&mut h, 0, 0, &eye_x);
                set_block(&mut h, d_x, 0, &lc);
                set_block(&mut h, d_x, d_x, l);
                total += propagate(&mut cov, &r, Some((&g, &h, &sigma_step)));
            }
            Ok(total)
        }
        StrategyKind::DecentralizedOf => {
            let gains = gains()?;
            let filter = filter()?;
            let subs = profile
                .substitution
                .as_ref()
                .ok_or(AnalysisError::MissingSchedule { which: "substitution" })?;
            let c = model.c.as_ref().expect("output-feedback mode checked");
            let sigma_v = model.sigma_v.as_ref().expect("output-feedback mode checked");
            let op = model
                .observation_partition
                .as_ref()
                .expect("output-feedback mode checked");
            let n = model.num_controllers;
            let cp = &model.controller_partition;
            let d_x = model.d_x();
            let d_y = model.d_y();
            let aug = (n + 1) * d_x;
            let eye_x = DMatrix::identity(d_x, d_x);

            // L with all observation columns outside controller i zeroed:
            // the part of the joint filter gain that i's own channel drives.
            let masked_gain = |l: &DMatrix<f64>, i: usize| {
                let mut out = DMatrix::zeros(d_x, d_y);
                let r = op.range(i);
                out.columns_mut(r.start, r.len())
                    .copy_from(&l.columns(r.start, r.len()));
                out
            };
            // Joint-action map of controller i reading its own estimate:
            // rows outside action block i are zero.
            let action_embed = |t: usize, i: usize| {
                let mut w = DMatrix::zeros(model.d_u(), d_x);
                let r = cp.range(i);
                w.rows_mut(r.start, r.len())
                    .copy_from(&(subs.lambdas[i].clone() * &gains.k[t]));
                w
            };

            // Augmented state (x_t; s_t⁰; …; s_t^{n-1}).
            let mut init = DMatrix::zeros(aug, d_x + d_y);
            set_block(&mut init, 0, 0, &eye_x);
            for i in 0..n {
                let li = masked_gain(&filter.l[0], i);
                set_block(&mut init, (i + 1) * d_x, 0, &(&li * c));
                set_block(&mut init, (i + 1) * d_x, d_x, &li);
            }
            let noise0 = block_diag(&model.sigma_x, sigma_v);
            let mut cov = &init * noise0 * init.transpose();
            let sigma_step = block_diag(&model.sigma_w, sigma_v);

            let mut total = 0.0;
            for t in 0..model.horizon {
                let embeds: Vec<DMatrix<f64>> = (0..n).map(|i| action_embed(t, i)).collect();
                let mut r = DMatrix::zeros(model.d_c(), aug);
                set_block(&mut r, 0, 0, &model.m);
                for (i, w) in embeds.iter().enumerate() {
                    set_block(&mut r, 0, (i + 1) * d_x, &(&model.n * w));
                }
                let last = t + 1 == model.horizon;
                if last {
                    total += propagate(&mut cov, &r, None);
                    break;
                }
                let l = &filter.l[t + 1];
                let lc = l * c;
                let mut g = DMatrix::zeros(aug, aug);
                let mut h = DMatrix::zeros(aug, d_x + d_y);
                set_block(&mut g, 0, 0, &model.a);
                set_block(&mut h, 0, 0, &eye_x);
                for (j, w) in embeds.iter().enumerate() {
                    set_block(&mut g, 0, (j + 1) * d_x, &(&model.b * w));
                }
                for i in 0..n {
                    let li = masked_gain(l, i);
                    let lic = &li * c;
                    let row = (i + 1) * d_x;
                    set_block(&mut g, row, 0, &(&lic * &model.a));
                    // Own-estimate recursion plus the slice of y⁺ each
                    // estimate contributes through the joint action.
                    let b_i = model.b_block(i);
                    let own =
                        (&eye_x - &lc) * (&model.a + b_i * subs.lambdas[i].clone() * &gains.k[t]);
                    for (j, w) in embeds.iter().enumerate() {
                        let mut block = &lic * &model.b * w;
                        if i == j {
                            block += &own;
                        }
                        set_block(&mut g, row, (j + 1) * d_x, &block);
                    }
                    set_block(&mut h, row, 0, &lic);
                    set_block(&mut h, row, d_x, &li);
                }
                total += propagate(&mut cov, &r, Some((&g, &h, &sigma_step)));
            }
            Ok(total)
        }
    }
}

/// Mean, spread, and confidence interval of sampled total costs.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CostStats {
    pub mean: f64,
    pub std_error: f64,
    pub ci95_half_width: f64,
}

impl CostStats {
    fn from_traces(set: &TraceSet) -> Self {
        let std_error = set.std_error();
        CostStats {
            mean: set.mean_cost(),
            std_error,
            ci95_half_width: 1.96 * std_error,
        }
    }
}

/// Monte Carlo estimate of the expected total cost over `runs` seeded
/// trajectories. Needs at least two runs for a meaningful standard error.
pub fn monte_carlo_cost(
    model: &SystemModel,
    profile: &StrategyProfile,
    seed: u64,
    runs: u32,
    jobs: usize,
) -> Result<CostStats, SimError> {
    assert!(runs >= 2, "standard error needs at least two runs");
    let set = simulate_with_jobs(model, profile, seed, runs, jobs)?;
    Ok(CostStats::from_traces(&set))
}

/// Exact and sampled cost of one profile.
#[derive(Debug, Clone, Serialize)]
pub struct ProfileCost {
    pub profile: StrategyKind,
    pub exact: f64,
    pub mc_mean: f64,
    pub mc_std_error: f64,
    pub mc_ci95_half_width: f64,
}

/// Pass/fail summary of the comparison, with pinned tolerances.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CostVerdict {
    /// Per-run decentralized cost matches centralized within
    /// [`PATHWISE_COST_TOL`] relative.
    pub pathwise_equal: bool,
    /// Exact decentralized cost matches centralized within
    /// [`EXACT_COST_TOL`] relative.
    pub exact_equal: bool,
    /// The zero baseline is no cheaper than the optimum.
    pub baseline_ordered: bool,
    /// Every Monte Carlo mean is within three standard errors of its exact
    /// value.
    pub mc_consistent: bool,
}

impl CostVerdict {
    pub fn all_pass(&self) -> bool {
        self.pathwise_equal && self.exact_equal && self.baseline_ordered && self.mc_consistent
    }
}

/// Per-run paired costs under common random numbers.
#[derive(Debug, Clone, Copy)]
pub struct PairedRun {
    pub run: u64,
    pub centralized: f64,
    pub decentralized: f64,
    pub zero: f64,
}

/// Everything the cost comparison produces. Serializes to the JSON report;
/// the per-run pairs stay out of the JSON and feed the CSV writer instead.
#[derive(Debug, Clone, Serialize)]
pub struct CostReport {
    pub mode: Mode,
    pub substitutable: bool,
    pub residuals: Vec<f64>,
    pub seed: u64,
    pub num_runs: u32,
    pub profiles: Vec<ProfileCost>,
    pub pathwise_max_relative_gap: f64,
    pub exact_relative_gap: f64,
    /// Largest normalized gap between the centralized estimate and the sum
    /// of local estimates, over all decentralized runs (output feedback).
    pub estimator_sum_residual_max: Option<f64>,
    pub verdict: CostVerdict,
    #[serde(skip)]
    pub paired: Vec<PairedRun>,
}

/// Solves the model both ways and checks, exactly and by paired sampling,
/// that the decentralized controllers recover the centralized cost.
///
/// The three profiles (centralized, decentralized, zero) share the seed, so
/// their per-run costs are paired through common random numbers.
pub fn compare(
    model: &SystemModel,
    seed: u64,
    runs: u32,
    jobs: usize,
) -> Result<CostReport, AnalysisError> {
    assert!(runs >= 2, "paired comparison needs at least two runs");
    let subs = check_substitutable(model);
    let mode = model.mode();
    let (cen_kind, dec_kind) = match mode {
        Mode::StateFeedback => (StrategyKind::CentralizedSf, StrategyKind::DecentralizedSf),
        Mode::OutputFeedback => (StrategyKind::CentralizedOf, StrategyKind::DecentralizedOf),
    };

    let cen = StrategyProfile::build(model, cen_kind)?;
    let exact_cen = exact_expected_cost(model, &cen)?;
    if !subs.substitutable {
        let max_residual = subs.residuals.iter().cloned().fold(0.0, f64::max);
        return Err(AnalysisError::NotSubstitutable {
            residuals: subs.residuals,
            max_residual,
            centralized_cost: exact_cen,
        });
    }
    let dec = StrategyProfile::build(model, dec_kind)?;
    let zero = StrategyProfile::build(model, StrategyKind::Zero)?;
    let exact_dec = exact_expected_cost(model, &dec)?;
    let exact_zero = exact_expected_cost(model, &zero)?;

    let cen_set = simulate_with_jobs(model, &cen, seed, runs, jobs)?;
    let dec_set = simulate_with_jobs(model, &dec, seed, runs, jobs)?;
    let zero_set = simulate_with_jobs(model, &zero, seed, runs, jobs)?;

    let paired: Vec<PairedRun> = cen_set
        .runs
        .iter()
        .zip(&dec_set.runs)
        .zip(&zero_set.runs)
        .map(|((c, d), z)| PairedRun {
            run: c.run,
            centralized: c.total_cost,
            decentralized: d.total_cost,
            zero: z.total_cost,
        })
        .collect();
    let pathwise_max_relative_gap = paired
        .iter()
        .map(|p| (p.decentralized - p.centralized).abs() / (1.0 + p.centralized.abs()))
        .fold(0.0, f64::max);
    let exact_relative_gap = (exact_dec - exact_cen).abs() / (1.0 + exact_cen.abs());
    let estimator_sum_residual_max = dec_set.summary().estimator_sum_residual_max;

    let stats = [
        CostStats::from_traces(&cen_set),
        CostStats::from_traces(&dec_set),
        CostStats::from_traces(&zero_set),
    ];
    let exacts = [exact_cen, exact_dec, exact_zero];
    let kinds = [cen_kind, dec_kind, StrategyKind::Zero];
    let profiles: Vec<ProfileCost> = kinds
        .iter()
        .zip(&stats)
        .zip(&exacts)
        .map(|((&profile, s), &exact)| ProfileCost {
            profile,
            exact,
            mc_mean: s.mean,
            mc_std_error: s.std_error,
            mc_ci95_half_width: s.ci95_half_width,
        })
        .collect();

    let mc_consistent = profiles.iter().all(|p| {
        (p.mc_mean - p.exact).abs() <= 3.0 * p.mc_std_error + EXACT_COST_TOL * (1.0 + p.exact)
    });
    let verdict = CostVerdict {
        pathwise_equal: pathwise_max_relative_gap <= PATHWISE_COST_TOL,
        exact_equal: exact_relative_gap <= EXACT_COST_TOL,
        baseline_ordered: exact_zero >= exact_cen - EXACT_COST_TOL * (1.0 + exact_cen.abs()),
        mc_consistent,
    };

    Ok(CostReport {
        mode,
        substitutable: true,
        residuals: subs.residuals,
        seed,
        num_runs: runs,
        profiles,
        pathwise_max_relative_gap,
        exact_relative_gap,
        estimator_sum_residual_max,
        verdict,
        paired,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::testutil::{sum_example_of, sum_example_sf};
    use crate::substitution::{generate_substitutable, GeneratorConfig};
    use nalgebra::DMatrix;

    #[test]
    fn zero_strategy_cost_has_a_closed_form_when_a_vanishes() {
        let mut model = sum_example_sf();
        model.a = DMatrix::zeros(2, 2);
        let profile = StrategyProfile::build(&model, StrategyKind::Zero).unwrap();
        let cost = exact_expected_cost(&model, &profile).unwrap();
        // cov is Sigma_x at t=1 and Sigma_w afterwards
        let mtm = model.m.transpose() * &model.m;
        let expected = (&mtm * &model.sigma_x).trace()
            + (model.horizon - 1) as f64 * (&mtm * &model.sigma_w).trace();
        assert!((cost - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn scalar_optimum_equals_value_times_initial_variance() {
        // A=1, B=1, M=(1,0), N=(0,1), T=2, Sigma_x=1, Sigma_w=0:
        // optimal cost is P_1 = 1.5.
        let mut model = sum_example_sf();
        model.a = DMatrix::identity(1, 1);
        model.b = DMatrix::from_element(1, 1, 1.0);
        model.m = DMatrix::from_row_slice(2, 1, &[1.0, 0.0]);
        model.n = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        model.sigma_x = DMatrix::identity(1, 1);
        model.sigma_w = DMatrix::zeros(1, 1);
        model.controller_partition = crate::model::Partition::uniform(1, 1);
        model.state_partition = Some(crate::model::Partition::uniform(1, 1));
        model.horizon = 2;
        model.num_controllers = 1;
        model.check().unwrap();
        let profile = StrategyProfile::build(&model, StrategyKind::CentralizedSf).unwrap();
        let cost = exact_expected_cost(&model, &profile).unwrap();
        assert!((cost - 1.5).abs() <= 1e-12, "cost {cost}");
    }

    #[test]
    fn decentralized_state_feedback_is_exactly_centralized_optimal() {
        for seed in [1u64, 2, 3] {
            let mut config = GeneratorConfig::state_feedback(4, 3, 2, 2);
            config.horizon = 6;
            let model = generate_substitutable(&config, seed).unwrap();
            let cen = StrategyProfile::build(&model, StrategyKind::CentralizedSf).unwrap();
            let dec = StrategyProfile::build(&model, StrategyKind::DecentralizedSf).unwrap();
            let a = exact_expected_cost(&model, &cen).unwrap();
            let b = exact_expected_cost(&model, &dec).unwrap();
            assert!((a - b).abs() <= EXACT_COST_TOL * (1.0 + a), "{a} vs {b}");
        }
    }

    #[test]
    fn decentralized_output_feedback_is_exactly_centralized_optimal() {
        let model = sum_example_of();
        let cen = StrategyProfile::build(&model, StrategyKind::CentralizedOf).unwrap();
        let dec = StrategyProfile::build(&model, StrategyKind::DecentralizedOf).unwrap();
        let a = exact_expected_cost(&model, &cen).unwrap();
        let b = exact_expected_cost(&model, &dec).unwrap();
        assert!((a - b).abs() <= EXACT_COST_TOL * (1.0 + a), "{a} vs {b}");
    }

    #[test]
    fn monte_carlo_agrees_with_the_exact_cost() {
        let model = sum_example_of();
        for kind in [StrategyKind::CentralizedOf, StrategyKind::DecentralizedOf] {
            let profile = StrategyProfile::build(&model, kind).unwrap();
            let exact = exact_expected_cost(&model, &profile).unwrap();
            let stats = monte_carlo_cost(&model, &profile, 7, 400, 1).unwrap();
            assert!(
                (stats.mean - exact).abs() <= 3.0 * stats.std_error,
                "{kind}: mean {} exact {exact} se {}",
                stats.mean,
                stats.std_error
            );
        }
    }

    #[test]
    fn frozen_world_has_zero_cost_and_zero_spread() {
        let mut model = sum_example_sf();
        model.sigma_x = DMatrix::zeros(2, 2);
        model.sigma_w = DMatrix::zeros(2, 2);
        let profile = StrategyProfile::build(&model, StrategyKind::CentralizedSf).unwrap();
        let exact = exact_expected_cost(&model, &profile).unwrap();
        let stats = monte_carlo_cost(&model, &profile, 0, 4, 1).unwrap();
        assert_eq!(exact, 0.0);
        assert_eq!(stats.mean, 0.0);
        assert_eq!(stats.std_error, 0.0);
    }

    #[test]
    fn comparison_report_passes_on_a_substitutable_model() {
        let model = sum_example_sf();
        let report = compare(&model, 13, 64, 1).unwrap();
        assert!(report.substitutable);
        assert!(report.verdict.all_pass(), "verdict {:?}", report.verdict);
        assert_eq!(report.profiles.len(), 3);
        assert_eq!(report.paired.len(), 64);
        let zero = report.profiles.last().unwrap();
        let cen = &report.profiles[0];
        assert!(zero.exact >= cen.exact);
    }

    #[test]
    fn comparison_still_prices_the_centralized_controller_when_rejecting() {
        let mut model = sum_example_sf();
        // controller 1 loses its actuation overlap: only B's first column
        // stays reachable from controller 0's pair
        model.b = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.5, 1.0]);
        model.n = DMatrix::from_row_slice(3, 2, &[0.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        model.check().unwrap();
        match compare(&model, 0, 2, 1) {
            Err(AnalysisError::NotSubstitutable {
                centralized_cost, ..
            }) => assert!(centralized_cost > 0.0),
            other => panic!("expected NotSubstitutable, got {other:?}"),
        }
    }

    #[test]
    fn mixed_profiles_are_rejected_by_the_exact_routine() {
        let model = sum_example_sf();
        let profile = StrategyProfile::build(&model, StrategyKind::CentralizedSf).unwrap();
        let mixed = StrategyProfile {
            kinds: vec![StrategyKind::CentralizedSf, StrategyKind::Zero],
            ..profile
        };
        assert!(matches!(
            exact_expected_cost(&model, &mixed),
            Err(AnalysisError::NonuniformProfile)
        ));
    }
}
