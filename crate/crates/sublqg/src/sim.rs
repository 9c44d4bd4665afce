//! Seeded closed-loop simulation with common random numbers.
//!
//! Every primitive draw is addressed by `(seed, run, signal, t)`, so two
//! profiles simulated with the same seed see identical noise and their
//! per-run costs are directly comparable. Runs are independent and can be
//! simulated in parallel without changing any byte of the result.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;
use std::path::Path;

use crate::decentralized::{
    decentralized_of_action, decentralized_sf_action, LocalEstimatorState, RecordedHistory,
    StrategyError, StrategyProfile,
};
use crate::kalman::{centralized_estimate_update, initial_estimate};
use crate::linalg::psd_factor;
use crate::model::{Mode, StrategyKind, SystemModel};
use crate::rng::{NoiseStream, StreamKind};

/// All primitive randomness of one run: x_1, w_{1:T-1}, and (output-feedback
/// mode) v_{1:T}. A pure function of `(seed, run)` for a fixed model.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseBundle {
    pub x1: DVector<f64>,
    pub w: Vec<DVector<f64>>,
    pub v: Vec<DVector<f64>>,
    pub seed: u64,
    pub run: u64,
}

/// Draws one run's noise. Covariances are factored by symmetric
/// eigendecomposition with negative eigenvalues clamped to zero, so singular
/// (even zero) covariances are fine.
pub fn draw_noise(model: &SystemModel, seed: u64, run: u64) -> NoiseBundle {
    let f_x = psd_factor(&model.sigma_x);
    let f_w = psd_factor(&model.sigma_w);
    let draw = |kind: StreamKind, t: usize, factor: &nalgebra::DMatrix<f64>| {
        let mut stream = NoiseStream::new(seed, run, kind, t);
        let z = DVector::from_vec(stream.standard_normal_vec(factor.ncols()));
        factor * z
    };
    let x1 = draw(StreamKind::InitialState, 0, &f_x);
    let w = (0..model.horizon.saturating_sub(1))
        .map(|t| draw(StreamKind::ProcessNoise, t, &f_w))
        .collect();
    let v = match &model.sigma_v {
        Some(sigma_v) => {
            let f_v = psd_factor(sigma_v);
            (0..model.horizon)
                .map(|t| draw(StreamKind::ObservationNoise, t, &f_v))
                .collect()
        }
        None => Vec::new(),
    };
    NoiseBundle { x1, w, v, seed, run }
}

/// x_{t+1} = A x_t + B u_t + w_t.
pub fn step_dynamics(
    model: &SystemModel,
    x: &DVector<f64>,
    u: &DVector<f64>,
    w: &DVector<f64>,
) -> DVector<f64> {
    &model.a * x + &model.b * u + w
}

/// One simulated trajectory with every signal recorded.
///
/// `z` and `s` are filled only for estimator-based profiles; `y` whenever the
/// model has an observation channel. Residual maxima are normalized:
/// `‖z_t − Σᵢ s_tⁱ‖_∞ / (1 + ‖z_t‖_∞)` for the estimator sum, and the
/// matching form against the centralized reference action for superposition.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub run: u64,
    pub x: Vec<DVector<f64>>,
    pub y: Vec<DVector<f64>>,
    pub u: Vec<DVector<f64>>,
    pub z: Vec<DVector<f64>>,
    /// `s[t][i]` is controller `i`'s local estimate at step `t`.
    pub s: Vec<Vec<DVector<f64>>>,
    pub stage_costs: Vec<f64>,
    pub total_cost: f64,
    pub estimator_sum_residual_max: Option<f64>,
    pub superposition_residual_max: Option<f64>,
}

impl RunTrace {
    /// The signals the feasibility checker replays against.
    pub fn history(&self) -> RecordedHistory {
        RecordedHistory {
            x: self.x.clone(),
            y: self.y.clone(),
            u: self.u.clone(),
        }
    }
}

/// Every run of one simulated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSet {
    pub kinds: Vec<StrategyKind>,
    pub seed: u64,
    pub horizon: usize,
    pub runs: Vec<RunTrace>,
}

/// Aggregate statistics of a [`TraceSet`], shaped for JSON emission.
#[derive(Debug, Clone, Serialize)]
pub struct TraceSummary {
    /// The shared strategy kind, or null for mixed profiles.
    pub profile: Option<StrategyKind>,
    pub seed: u64,
    pub num_runs: usize,
    pub horizon: usize,
    pub mean_cost: f64,
    pub std_error: f64,
    pub ci95_half_width: f64,
    pub min_cost: f64,
    pub max_cost: f64,
    pub estimator_sum_residual_max: Option<f64>,
    pub superposition_residual_max: Option<f64>,
}

impl TraceSet {
    pub fn mean_cost(&self) -> f64 {
        let n = self.runs.len() as f64;
        self.runs.iter().map(|r| r.total_cost).sum::<f64>() / n
    }

    /// Standard error of the mean cost (zero for fewer than two runs).
    pub fn std_error(&self) -> f64 {
        let n = self.runs.len();
        if n < 2 {
            return 0.0;
        }
        let mean = self.mean_cost();
        let var = self
            .runs
            .iter()
            .map(|r| (r.total_cost - mean).powi(2))
            .sum::<f64>()
            / (n as f64 - 1.0);
        (var / n as f64).sqrt()
    }

    pub fn summary(&self) -> TraceSummary {
        let std_error = self.std_error();
        let fold_max = |f: fn(&RunTrace) -> Option<f64>| {
            self.runs
                .iter()
                .filter_map(f)
                .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))))
        };
        TraceSummary {
            profile: uniform_kind(&self.kinds),
            seed: self.seed,
            num_runs: self.runs.len(),
            horizon: self.horizon,
            mean_cost: self.mean_cost(),
            std_error,
            ci95_half_width: 1.96 * std_error,
            min_cost: self
                .runs
                .iter()
                .map(|r| r.total_cost)
                .fold(f64::INFINITY, f64::min),
            max_cost: self
                .runs
                .iter()
                .map(|r| r.total_cost)
                .fold(f64::NEG_INFINITY, f64::max),
            estimator_sum_residual_max: fold_max(|r| r.estimator_sum_residual_max),
            superposition_residual_max: fold_max(|r| r.superposition_residual_max),
        }
    }

    pub fn histories(&self) -> Vec<RecordedHistory> {
        self.runs.iter().map(RunTrace::history).collect()
    }
}

fn uniform_kind(kinds: &[StrategyKind]) -> Option<StrategyKind> {
    let first = *kinds.first()?;
    kinds.iter().all(|&k| k == first).then_some(first)
}

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error("profile does not match the model: {detail}")]
    ProfileMismatch { detail: String },
}

fn check_profile(model: &SystemModel, profile: &StrategyProfile) -> Result<(), SimError> {
    let mismatch = |detail: String| Err(SimError::ProfileMismatch { detail });
    if profile.kinds.len() != model.num_controllers {
        return mismatch(format!(
            "{} strategy kinds for {} controllers",
            profile.kinds.len(),
            model.num_controllers
        ));
    }
    for &kind in &profile.kinds {
        if let Some(required) = kind.required_mode() {
            if required != model.mode() {
                return mismatch(format!("{kind} needs the other feedback mode"));
            }
        }
    }
    if profile.kinds.iter().any(|&k| k != StrategyKind::Zero) {
        match &profile.gains {
            None => return mismatch("gain schedule missing".into()),
            Some(g) if g.horizon() != model.horizon => {
                return mismatch("gain schedule horizon differs from the model".into())
            }
            Some(g) if g.k[0].ncols() != model.d_x() || g.k[0].nrows() != model.d_u() => {
                return mismatch("gain dimensions differ from the model".into())
            }
            _ => {}
        }
    }
    if profile.needs_filter() {
        match &profile.filter {
            None => return mismatch("filter schedule missing".into()),
            Some(f) if f.horizon() != model.horizon => {
                return mismatch("filter schedule horizon differs from the model".into())
            }
            _ => {}
        }
    }
    Ok(())
}

/// Simulates `runs` independent seeded trajectories sequentially.
pub fn simulate(
    model: &SystemModel,
    profile: &StrategyProfile,
    seed: u64,
    runs: u32,
) -> Result<TraceSet, SimError> {
    simulate_with_jobs(model, profile, seed, runs, 1)
}

/// [`simulate`] with `jobs` worker threads. The result is bit-identical for
/// any job count; only wall time changes.
pub fn simulate_with_jobs(
    model: &SystemModel,
    profile: &StrategyProfile,
    seed: u64,
    runs: u32,
    jobs: usize,
) -> Result<TraceSet, SimError> {
    check_profile(model, profile)?;
    let indices: Vec<u64> = (0..runs as u64).collect();
    let traces: Result<Vec<RunTrace>, StrategyError> = if jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .expect("worker pool");
        pool.install(|| {
            indices
                .par_iter()
                .map(|&run| run_once(model, profile, seed, run))
                .collect()
        })
    } else {
        indices
            .iter()
            .map(|&run| run_once(model, profile, seed, run))
            .collect()
    };
    Ok(TraceSet {
        kinds: profile.kinds.clone(),
        seed,
        horizon: model.horizon,
        runs: traces?,
    })
}

/// Reference action for the superposition residual: the centralized gain
/// applied to the state (state feedback) or to the centralized estimate
/// (output feedback), when the whole profile targets that reference.
fn superposition_reference(kinds: &[StrategyKind]) -> Option<Mode> {
    if kinds
        .iter()
        .all(|k| matches!(k, StrategyKind::CentralizedSf | StrategyKind::DecentralizedSf))
    {
        Some(Mode::StateFeedback)
    } else if kinds
        .iter()
        .all(|k| matches!(k, StrategyKind::CentralizedOf | StrategyKind::DecentralizedOf))
    {
        Some(Mode::OutputFeedback)
    } else {
        None
    }
}

fn run_once(
    model: &SystemModel,
    profile: &StrategyProfile,
    seed: u64,
    run: u64,
) -> Result<RunTrace, StrategyError> {
    let bundle = draw_noise(model, seed, run);
    let horizon = model.horizon;
    let n = model.num_controllers;
    let cp = &model.controller_partition;
    let track_estimators = profile.needs_filter();
    let reference = superposition_reference(&profile.kinds);

    let mut x = Vec::with_capacity(horizon);
    let mut y = Vec::new();
    let mut u = Vec::with_capacity(horizon);
    let mut z = Vec::new();
    let mut s = Vec::new();
    let mut stage_costs = Vec::with_capacity(horizon);
    let mut estimator_residual: Option<f64> = track_estimators.then_some(0.0);
    let mut superposition_residual: Option<f64> = reference.map(|_| 0.0);

    x.push(bundle.x1.clone());
    if let Some(c) = &model.c {
        y.push(c * &x[0] + &bundle.v[0]);
    }
    let mut local = if track_estimators {
        let filter = profile.filter.as_ref().expect("filter checked");
        z.push(initial_estimate(filter, &y[0]));
        let local = LocalEstimatorState::initialize(model, filter, &y[0]);
        s.push(local.s.clone());
        Some(local)
    } else {
        None
    };

    for t in 0..horizon {
        let mut u_t = DVector::zeros(model.d_u());
        for i in 0..n {
            let r = cp.range(i);
            let action = match profile.kinds[i] {
                StrategyKind::Zero => DVector::zeros(r.len()),
                StrategyKind::CentralizedSf => {
                    let full = &profile.gains.as_ref().expect("gains checked").k[t] * &x[t];
                    full.rows(r.start, r.len()).into_owned()
                }
                StrategyKind::DecentralizedSf => {
                    let gains = profile.gains.as_ref().expect("gains checked");
                    let subs = profile.substitution.as_ref().expect("substitution solved");
                    let sp = gains
                        .state_partition
                        .as_ref()
                        .ok_or(StrategyError::Lqr(crate::lqr::LqrError::MissingPartition))?;
                    let sr = sp.range(i);
                    let x_i = x[t].rows(sr.start, sr.len()).into_owned();
                    decentralized_sf_action(i, &x_i, t, gains, subs)?
                }
                StrategyKind::CentralizedOf => {
                    let full = &profile.gains.as_ref().expect("gains checked").k[t] * &z[t];
                    full.rows(r.start, r.len()).into_owned()
                }
                StrategyKind::DecentralizedOf => {
                    let gains = profile.gains.as_ref().expect("gains checked");
                    let subs = profile.substitution.as_ref().expect("substitution solved");
                    let local = local.as_ref().expect("estimators tracked");
                    decentralized_of_action(i, &local.s[i], t, gains, subs)?
                }
            };
            u_t.rows_mut(r.start, r.len()).copy_from(&action);
        }

        let residual_vec = &model.m * &x[t] + &model.n * &u_t;
        stage_costs.push(residual_vec.dot(&residual_vec));

        if let (Some(max), Some(mode)) = (superposition_residual.as_mut(), reference) {
            let k = &profile.gains.as_ref().expect("gains checked").k[t];
            let u_ref = match mode {
                Mode::StateFeedback => k * &x[t],
                Mode::OutputFeedback => k * &z[t],
            };
            let diff = &u_t - &u_ref;
            let b_gap = (&model.b * &diff).amax();
            let n_gap = (&model.n * &diff).amax();
            let scale = 1.0 + u_ref.amax();
            *max = max.max(b_gap.max(n_gap) / scale);
        }
        if let (Some(max), Some(local)) = (estimator_residual.as_mut(), local.as_ref()) {
            let gap = (local.sum() - &z[t]).amax() / (1.0 + z[t].amax());
            *max = max.max(gap);
        }

        if t + 1 < horizon {
            x.push(step_dynamics(model, &x[t], &u_t, &bundle.w[t]));
            if let Some(c) = &model.c {
                y.push(c * &x[t + 1] + &bundle.v[t + 1]);
            }
            if let Some(local) = local.as_mut() {
                let filter = profile.filter.as_ref().expect("filter checked");
                z.push(centralized_estimate_update(
                    model,
                    filter,
                    t,
                    &z[t],
                    &u_t,
                    &y[t + 1],
                ));
                local.step(model, filter, t, &u_t, &y[t + 1]);
                s.push(local.s.clone());
            }
        }
        u.push(u_t);
    }

    Ok(RunTrace {
        run,
        total_cost: stage_costs.iter().sum(),
        x,
        y,
        u,
        z,
        s,
        stage_costs,
        estimator_sum_residual_max: estimator_residual,
        superposition_residual_max: superposition_residual,
    })
}

/// Writes every recorded signal as CSV with header `t,run,kind,index,value`.
///
/// `t` is one-based in the file; `index` is the zero-based component within
/// the signal vector. Signal kinds are `x`, `u`, `y`, `z`, `s<i>` (local
/// estimator of controller `i`), and `cost` (stage cost, index 0).
pub fn save_trace(set: &TraceSet, path: impl AsRef<Path>) -> std::io::Result<()> {
    let file = std::fs::File::create(path)?;
    let mut out = std::io::BufWriter::new(file);
    writeln!(out, "t,run,kind,index,value")?;
    for trace in &set.runs {
        for t in 0..set.horizon {
            let mut row = |kind: &str, vec: &DVector<f64>| -> std::io::Result<()> {
                for (index, value) in vec.iter().enumerate() {
                    writeln!(out, "{},{},{},{},{}", t + 1, trace.run, kind, index, value)?;
                }
                Ok(())
            };
            row("x", &trace.x[t])?;
            row("u", &trace.u[t])?;
            if let Some(yv) = trace.y.get(t) {
                row("y", yv)?;
            }
            if let Some(zv) = trace.z.get(t) {
                row("z", zv)?;
            }
            if let Some(sv) = trace.s.get(t) {
                for (i, si) in sv.iter().enumerate() {
                    row(&format!("s{i}"), si)?;
                }
            }
            writeln!(out, "{},{},cost,0,{}", t + 1, trace.run, trace.stage_costs[t])?;
        }
    }
    out.flush()
}
