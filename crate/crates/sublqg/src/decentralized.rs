//! Decentralized strategies built from the substitution maps, and the
//! black-box information-feasibility checker.
//!
//! State feedback: controller `i` applies u_tⁱ = Λⁱ K_tⁱ x_tⁱ, a memoryless
//! function of its own subsystem state. Output feedback: controller `i`
//! maintains a local estimator S_tⁱ from its own observations and actions
//! only, and applies u_tⁱ = Λⁱ K_t S_tⁱ. In both cases the per-controller
//! effects superpose to the centralized-optimal B K_t and N K_t terms, so the
//! closed loop reproduces the centralized cost exactly.

use nalgebra::DVector;
use serde::Serialize;

use crate::kalman::{solve_kalman, FilterSchedule, KalmanError};
use crate::lqr::{gain_block, solve_centralized_lqr, GainSchedule, LqrError};
use crate::model::{Mode, StrategyKind, SystemModel};
use crate::rng::{NoiseStream, StreamKind};
use crate::substitution::{check_substitutable, SubstitutionError, SubstitutionSet};

/// A failure to assemble or evaluate a strategy.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StrategyError {
    #[error("strategy {kind} needs a {required} model but this one is {actual}")]
    ModeMismatch {
        kind: StrategyKind,
        required: Mode,
        actual: Mode,
    },
    #[error(transparent)]
    Substitution(#[from] SubstitutionError),
    #[error(transparent)]
    Kalman(#[from] KalmanError),
    #[error(transparent)]
    Lqr(#[from] LqrError),
}

/// What each controller is allowed to read at decision time. Used only by
/// the feasibility checker; the strategies themselves are fixed maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InfoStructure {
    /// Nothing at all (open loop).
    Nothing,
    /// {X_tⁱ}: own subsystem state, current step only.
    OwnCurrentState,
    /// {X_{1:t}ⁱ, U_{1:t-1}ⁱ}
    OwnStateHistory,
    /// {X_{1:t}, U_{1:t-1}}
    FullStateHistory,
    /// {Y_{1:t}ⁱ, U_{1:t-1}ⁱ}
    OwnObsHistory,
    /// {Y_{1:t}, U_{1:t-1}}
    FullObsHistory,
}

/// One observable signal instance in a recorded trajectory. Times are
/// zero-based steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "signal")]
pub enum Signal {
    /// Subsystem state block `X_tᵇ`.
    State { block: usize, t: usize },
    /// Observation block `Y_tⁱ`.
    Observation { controller: usize, t: usize },
    /// Action block `U_tⁱ`.
    Action { controller: usize, t: usize },
}

impl InfoStructure {
    /// Whether `signal` is visible to controller `owner` deciding at step
    /// `t_now`.
    pub fn contains(self, owner: usize, signal: Signal, t_now: usize) -> bool {
        use InfoStructure::*;
        match (self, signal) {
            (Nothing, _) => false,
            (OwnCurrentState, Signal::State { block, t }) => block == owner && t == t_now,
            (OwnCurrentState, _) => false,
            (OwnStateHistory, Signal::State { block, t }) => block == owner && t <= t_now,
            (OwnStateHistory, Signal::Action { controller, t }) => {
                controller == owner && t < t_now
            }
            (OwnStateHistory, Signal::Observation { .. }) => false,
            (FullStateHistory, Signal::State { t, .. }) => t <= t_now,
            (FullStateHistory, Signal::Action { t, .. }) => t < t_now,
            (FullStateHistory, Signal::Observation { .. }) => false,
            (OwnObsHistory, Signal::Observation { controller, t }) => {
                controller == owner && t <= t_now
            }
            (OwnObsHistory, Signal::Action { controller, t }) => controller == owner && t < t_now,
            (OwnObsHistory, Signal::State { .. }) => false,
            (FullObsHistory, Signal::Observation { t, .. }) => t <= t_now,
            (FullObsHistory, Signal::Action { t, .. }) => t < t_now,
            (FullObsHistory, Signal::State { .. }) => false,
        }
    }

    /// The smallest declared set under which the strategy kind is feasible.
    pub fn minimal_for(kind: StrategyKind) -> InfoStructure {
        match kind {
            StrategyKind::CentralizedSf => InfoStructure::FullStateHistory,
            StrategyKind::DecentralizedSf => InfoStructure::OwnCurrentState,
            StrategyKind::CentralizedOf => InfoStructure::FullObsHistory,
            StrategyKind::DecentralizedOf => InfoStructure::OwnObsHistory,
            StrategyKind::Zero => InfoStructure::Nothing,
        }
    }
}

/// A closed-loop policy per controller with whatever schedules the kinds
/// need, plus each controller's declared information structure.
#[derive(Debug, Clone)]
pub struct StrategyProfile {
    pub kinds: Vec<StrategyKind>,
    pub gains: Option<GainSchedule>,
    pub filter: Option<FilterSchedule>,
    pub substitution: Option<SubstitutionSet>,
    pub declared: Vec<InfoStructure>,
}

impl StrategyProfile {
    /// Solves every schedule the kind needs and declares the minimal
    /// information sets. Fails when the kind does not match the model's
    /// feedback mode, the model is not substitutable (decentralized kinds),
    /// or a solver refuses.
    pub fn build(model: &SystemModel, kind: StrategyKind) -> Result<Self, StrategyError> {
        if let Some(required) = kind.required_mode() {
            if required != model.mode() {
                return Err(StrategyError::ModeMismatch {
                    kind,
                    required,
                    actual: model.mode(),
                });
            }
        }
        let needs_gains = kind != StrategyKind::Zero;
        let needs_filter = matches!(
            kind,
            StrategyKind::CentralizedOf | StrategyKind::DecentralizedOf
        );
        let needs_substitution = matches!(
            kind,
            StrategyKind::DecentralizedSf | StrategyKind::DecentralizedOf
        );

        if kind == StrategyKind::DecentralizedSf && model.state_partition.is_none() {
            return Err(StrategyError::Lqr(LqrError::MissingPartition));
        }
        let substitution = if needs_substitution {
            let subs = check_substitutable(model);
            for i in 0..model.num_controllers {
                subs.require(i)?;
            }
            Some(subs)
        } else {
            None
        };
        let gains = needs_gains.then(|| solve_centralized_lqr(model));
        let filter = if needs_filter {
            Some(solve_kalman(model)?)
        } else {
            None
        };
        let declared = vec![InfoStructure::minimal_for(kind); model.num_controllers];
        Ok(StrategyProfile {
            kinds: vec![kind; model.num_controllers],
            gains,
            filter,
            substitution,
            declared,
        })
    }

    /// Replaces every controller's declared information set.
    pub fn with_declared(mut self, declared: InfoStructure) -> Self {
        for d in &mut self.declared {
            *d = declared;
        }
        self
    }

    /// The single kind shared by all controllers, if uniform.
    pub fn uniform_kind(&self) -> Option<StrategyKind> {
        let first = *self.kinds.first()?;
        self.kinds.iter().all(|&k| k == first).then_some(first)
    }

    /// Whether any controller runs an estimator-based strategy.
    pub fn needs_filter(&self) -> bool {
        self.kinds.iter().any(|k| {
            matches!(
                k,
                StrategyKind::CentralizedOf | StrategyKind::DecentralizedOf
            )
        })
    }

    fn gains(&self) -> Result<&GainSchedule, StrategyError> {
        // Zero-only profiles never land here
        self.gains.as_ref().ok_or(StrategyError::Lqr(LqrError::MissingPartition))
    }
}

/// u_tⁱ = Λⁱ K_tⁱ x_tⁱ: controller `i`'s state-feedback action from its own
/// current subsystem state.
pub fn decentralized_sf_action(
    i: usize,
    x_i: &DVector<f64>,
    t: usize,
    gains: &GainSchedule,
    subs: &SubstitutionSet,
) -> Result<DVector<f64>, StrategyError> {
    let lambda = subs.require(i)?;
    let block = gain_block(gains, t, i)?;
    Ok(lambda * (block * x_i))
}

/// u_tⁱ = Λⁱ K_t s_tⁱ: controller `i`'s output-feedback action from its local
/// estimator.
pub fn decentralized_of_action(
    i: usize,
    s_i: &DVector<f64>,
    t: usize,
    gains: &GainSchedule,
    subs: &SubstitutionSet,
) -> Result<DVector<f64>, StrategyError> {
    Ok(subs.require(i)? * (&gains.k[t] * s_i))
}

/// S_1ⁱ = L_1ⁱ Y_1ⁱ.
pub fn initial_local_estimate(
    filter: &FilterSchedule,
    i: usize,
    y1_i: &DVector<f64>,
) -> DVector<f64> {
    filter.l_block(0, i) * y1_i
}

/// S_{t+1}ⁱ = (I − L_{t+1}C)(A S_tⁱ + Bⁱ U_tⁱ) + L_{t+1}ⁱ Y_{t+1}ⁱ, reading
/// only controller `i`'s own action and observation blocks. `t` is the
/// zero-based index of `s_i`.
pub fn local_estimate_update(
    model: &SystemModel,
    filter: &FilterSchedule,
    i: usize,
    t: usize,
    s_i: &DVector<f64>,
    u_i: &DVector<f64>,
    y_next_i: &DVector<f64>,
) -> DVector<f64> {
    let c = model.c.as_ref().expect("output-feedback model");
    let l_next = &filter.l[t + 1];
    let predicted = &model.a * s_i + model.b_block(i) * u_i;
    &predicted - l_next * (c * &predicted) + filter.l_block(t + 1, i) * y_next_i
}

/// The state-feedback local contribution vec(0, …, x_tⁱ, …, 0): subsystem
/// `i`'s state embedded in the full state dimension. The contributions sum to
/// the state itself.
pub fn sf_local_estimate(model: &SystemModel, x: &DVector<f64>, i: usize) -> DVector<f64> {
    let partition = model
        .state_partition
        .as_ref()
        .expect("state partition present");
    let r = partition.range(i);
    let mut s = DVector::zeros(model.d_x());
    s.rows_mut(r.start, r.len()).copy_from(&x.rows(r.start, r.len()));
    s
}

/// Every controller's local estimator, advanced in lockstep during a
/// simulation. The sum of the vectors tracks the centralized estimate.
#[derive(Debug, Clone)]
pub struct LocalEstimatorState {
    pub s: Vec<DVector<f64>>,
}

impl LocalEstimatorState {
    /// S_1ⁱ = L_1ⁱ Y_1ⁱ for every controller, slicing `y1` by the
    /// observation partition.
    pub fn initialize(model: &SystemModel, filter: &FilterSchedule, y1: &DVector<f64>) -> Self {
        let op = &filter.observation_partition;
        let s = (0..model.num_controllers)
            .map(|i| {
                let r = op.range(i);
                initial_local_estimate(filter, i, &y1.rows(r.start, r.len()).into_owned())
            })
            .collect();
        LocalEstimatorState { s }
    }

    /// Advances every estimator one step using each controller's own blocks
    /// of the applied joint action and the next observation.
    pub fn step(
        &mut self,
        model: &SystemModel,
        filter: &FilterSchedule,
        t: usize,
        u: &DVector<f64>,
        y_next: &DVector<f64>,
    ) {
        let op = &filter.observation_partition;
        let cp = &model.controller_partition;
        for i in 0..self.s.len() {
            let ur = cp.range(i);
            let yr = op.range(i);
            self.s[i] = local_estimate_update(
                model,
                filter,
                i,
                t,
                &self.s[i],
                &u.rows(ur.start, ur.len()).into_owned(),
                &y_next.rows(yr.start, yr.len()).into_owned(),
            );
        }
    }

    /// Σᵢ S_tⁱ, the decomposition of the centralized estimate.
    pub fn sum(&self) -> DVector<f64> {
        let mut total = DVector::zeros(self.s[0].len());
        for s in &self.s {
            total += s;
        }
        total
    }
}

/// One recorded trajectory: states, observations (empty in state-feedback
/// mode), and applied joint actions, indexed by step.
#[derive(Debug, Clone)]
pub struct RecordedHistory {
    pub x: Vec<DVector<f64>>,
    pub y: Vec<DVector<f64>>,
    pub u: Vec<DVector<f64>>,
}

/// Recomputes controller `i`'s action at step `t` from a recorded history,
/// exactly as the strategy would have produced it online. Estimator-based
/// strategies replay their recursions from the recorded observations and
/// actions.
pub fn replay_action(
    profile: &StrategyProfile,
    model: &SystemModel,
    history: &RecordedHistory,
    i: usize,
    t: usize,
) -> Result<DVector<f64>, StrategyError> {
    let cp = &model.controller_partition;
    let block = |v: &DVector<f64>| {
        let r = cp.range(i);
        v.rows(r.start, r.len()).into_owned()
    };
    match profile.kinds[i] {
        StrategyKind::Zero => Ok(DVector::zeros(cp.size(i))),
        StrategyKind::CentralizedSf => {
            let k = &profile.gains()?.k[t];
            Ok(block(&(k * &history.x[t])))
        }
        StrategyKind::DecentralizedSf => {
            let gains = profile.gains()?;
            let subs = profile.substitution.as_ref().expect("substitution solved");
            let sp = gains
                .state_partition
                .as_ref()
                .ok_or(StrategyError::Lqr(LqrError::MissingPartition))?;
            let r = sp.range(i);
            let x_i = history.x[t].rows(r.start, r.len()).into_owned();
            decentralized_sf_action(i, &x_i, t, gains, subs)
        }
        StrategyKind::CentralizedOf => {
            let filter = profile.filter.as_ref().expect("filter solved");
            let mut z = crate::kalman::initial_estimate(filter, &history.y[0]);
            for s in 0..t {
                z = crate::kalman::centralized_estimate_update(
                    model,
                    filter,
                    s,
                    &z,
                    &history.u[s],
                    &history.y[s + 1],
                );
            }
            let k = &profile.gains()?.k[t];
            Ok(block(&(k * &z)))
        }
        StrategyKind::DecentralizedOf => {
            let filter = profile.filter.as_ref().expect("filter solved");
            let subs = profile.substitution.as_ref().expect("substitution solved");
            let yr = filter.observation_partition.range(i);
            let y_block =
                |s: usize| history.y[s].rows(yr.start, yr.len()).into_owned();
            let mut s_i = initial_local_estimate(filter, i, &y_block(0));
            for s in 0..t {
                s_i = local_estimate_update(
                    model,
                    filter,
                    i,
                    s,
                    &s_i,
                    &block(&history.u[s]),
                    &y_block(s + 1),
                );
            }
            decentralized_of_action(i, &s_i, t, profile.gains()?, subs)
        }
    }
}

/// One detected dependence on an undeclared signal.
#[derive(Debug, Clone, Serialize)]
pub struct FeasibilityViolation {
    pub controller: usize,
    pub t: usize,
    #[serde(flatten)]
    pub signal: Signal,
    pub action_delta: f64,
}

/// Outcome of [`check_information_feasibility`].
#[derive(Debug, Clone, Serialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub violations: Vec<FeasibilityViolation>,
    /// Number of (controller, step, signal) perturbations replayed.
    pub checked: usize,
}

/// Black-box feasibility: perturbs every recorded signal outside each
/// controller's declared information set and asserts the replayed action is
/// unchanged (within 1e-12 absolute). Any movement is a dependence on an
/// undeclared signal and is reported as a violation.
///
/// Replay only reads signals at or before the decision step, so future
/// signals are trivially independent and are not enumerated.
pub fn check_information_feasibility(
    profile: &StrategyProfile,
    model: &SystemModel,
    histories: &[RecordedHistory],
) -> Result<FeasibilityReport, StrategyError> {
    const ACTION_TOL: f64 = 1e-12;
    let horizon = model.horizon;
    let n = model.num_controllers;
    let state_blocks = model
        .state_partition
        .as_ref()
        .map_or(1, |p| p.len());
    let mut violations = Vec::new();
    let mut checked = 0usize;

    for history in histories {
        for i in 0..n {
            for t in 0..horizon {
                let baseline = replay_action(profile, model, history, i, t)?;
                let mut signals = Vec::new();
                for s in 0..=t {
                    for block in 0..state_blocks {
                        signals.push(Signal::State { block, t: s });
                    }
                    if !history.y.is_empty() {
                        for controller in 0..n {
                            signals.push(Signal::Observation { controller, t: s });
                        }
                    }
                    if s < t {
                        for controller in 0..n {
                            signals.push(Signal::Action { controller, t: s });
                        }
                    }
                }
                for signal in signals {
                    if profile.declared[i].contains(i, signal, t) {
                        continue;
                    }
                    checked += 1;
                    let perturbed = perturb(model, history, signal);
                    let action = replay_action(profile, model, &perturbed, i, t)?;
                    let action_delta = (&action - &baseline).amax();
                    if action_delta > ACTION_TOL {
                        violations.push(FeasibilityViolation {
                            controller: i,
                            t,
                            signal,
                            action_delta,
                        });
                    }
                }
            }
        }
    }

    Ok(FeasibilityReport {
        feasible: violations.is_empty(),
        violations,
        checked,
    })
}

/// Clones the history with one signal block shifted by a deterministic
/// pseudorandom offset.
fn perturb(model: &SystemModel, history: &RecordedHistory, signal: Signal) -> RecordedHistory {
    let mut out = history.clone();
    let (vec, range, key) = match signal {
        Signal::State { block, t } => {
            let range = match &model.state_partition {
                Some(p) => p.range(block),
                None => 0..model.d_x(),
            };
            (&mut out.x[t], range, (1, block, t))
        }
        Signal::Observation { controller, t } => {
            let range = model
                .observation_partition
                .as_ref()
                .expect("observation partition present")
                .range(controller);
            (&mut out.y[t], range, (2, controller, t))
        }
        Signal::Action { controller, t } => {
            let range = model.controller_partition.range(controller);
            (&mut out.u[t], range, (3, controller, t))
        }
    };
    let mut stream = NoiseStream::new(
        0xD15F_EA51 ^ (key.0 as u64),
        key.1 as u64,
        StreamKind::Generator,
        key.2,
    );
    for idx in range {
        vec[idx] += stream.next_standard_normal();
    }
    out
}
