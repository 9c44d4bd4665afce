//! Time-varying Kalman filter for the centralized estimate Z_t.
//!
//! Z_t = E[X_t | Y_{1:t}, U_{1:t-1}] evolves by the standard
//! measurement-update recursion. Gains and posterior covariances depend only
//! on the model, never on data, so one [`FilterSchedule`] serves every
//! trajectory. The first update conditions on Y_1 with the prior Σ_x, which
//! also fixes Z_1 = L_1 Y_1 for zero-mean X_1.

use nalgebra::{DMatrix, DVector};

use crate::linalg::{psd_floor, solve_spd, vcat, MAX_CONDITION};
use crate::model::{Partition, SystemModel};

/// Filter gains and posterior covariances, one entry per step.
///
/// Zero-based: `l[t]` is the gain applied to the observation at step `t`
/// (`l[0]` conditions on the first measurement), `sigma[t]` is the posterior
/// state covariance after that update. The observation partition allows
/// slicing the per-controller column blocks L_tⁱ.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterSchedule {
    pub l: Vec<DMatrix<f64>>,
    pub sigma: Vec<DMatrix<f64>>,
    pub observation_partition: Partition,
}

impl FilterSchedule {
    pub fn horizon(&self) -> usize {
        self.l.len()
    }

    /// Column block L_tⁱ aligned with controller `i`'s observation rows.
    /// Concatenating all blocks reproduces L_t exactly.
    pub fn l_block(&self, t: usize, i: usize) -> DMatrix<f64> {
        let r = self.observation_partition.range(i);
        self.l[t].columns(r.start, r.len()).into_owned()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KalmanError {
    #[error(
        "innovation covariance at step {t} is not invertible (condition {condition:.3e})"
    )]
    SingularInnovation { t: usize, condition: f64 },
    #[error("stacked observation covariance is singular in batch conditioning")]
    SingularObservationCovariance,
    #[error("model has no observation channel (state-feedback mode)")]
    NotOutputFeedback,
}

/// Runs the gain/covariance recursion over the whole horizon.
///
/// Step 0 uses the prior Σ_x; step t+1 uses the prior AΣ_tAᵀ + Σ_w:
///
/// ```text
/// S_t = C·prior·Cᵀ + Σ_v
/// L_t = prior·Cᵀ·S_t⁻¹
/// Σ_t = (I − L_tC)·prior
/// ```
///
/// Each Σ_t is symmetrized with eigenvalues floored at zero. The innovation
/// solve refuses condition numbers above 1e12.
pub fn solve_kalman(model: &SystemModel) -> Result<FilterSchedule, KalmanError> {
    let c = model.c.as_ref().ok_or(KalmanError::NotOutputFeedback)?;
    let sigma_v = model.sigma_v.as_ref().ok_or(KalmanError::NotOutputFeedback)?;
    let observation_partition = model
        .observation_partition
        .clone()
        .ok_or(KalmanError::NotOutputFeedback)?;
    let d_x = model.d_x();
    let eye = DMatrix::identity(d_x, d_x);

    let mut l = Vec::with_capacity(model.horizon);
    let mut sigma = Vec::with_capacity(model.horizon);
    let mut prior = model.sigma_x.clone();
    for t in 0..model.horizon {
        let innovation = c * &prior * c.transpose() + sigma_v;
        let gain_t = solve_spd(&innovation, &(c * &prior), MAX_CONDITION)
            .map_err(|issue| KalmanError::SingularInnovation {
                t,
                condition: issue.condition,
            })?
            .transpose();
        let posterior = psd_floor(&((&eye - &gain_t * c) * &prior));
        l.push(gain_t);
        sigma.push(posterior);
        if t + 1 < model.horizon {
            prior = &model.a * &sigma[t] * model.a.transpose() + &model.sigma_w;
        }
    }

    Ok(FilterSchedule {
        l,
        sigma,
        observation_partition,
    })
}

/// Z_1 = L_1 Y_1, the first conditional mean for zero-mean X_1.
pub fn initial_estimate(schedule: &FilterSchedule, y1: &DVector<f64>) -> DVector<f64> {
    &schedule.l[0] * y1
}

/// Z_{t+1} = (I − L_{t+1}C)(A Z_t + B U_t) + L_{t+1} Y_{t+1}, with `t` the
/// zero-based index of `z_t`.
pub fn centralized_estimate_update(
    model: &SystemModel,
    schedule: &FilterSchedule,
    t: usize,
    z_t: &DVector<f64>,
    u_t: &DVector<f64>,
    y_next: &DVector<f64>,
) -> DVector<f64> {
    let c = model.c.as_ref().expect("output-feedback model");
    let l_next = &schedule.l[t + 1];
    let predicted = &model.a * z_t + &model.b * u_t;
    &predicted - l_next * (c * &predicted) + l_next * y_next
}

/// E[X_t | Y_{1:t} = y, U_{1:t-1} = u] by one joint-Gaussian conditioning.
///
/// Builds the linear maps from the primitive vector (x_1, w_{1:t-1}, v_{1:t})
/// to X_t and the stacked observations, forms the joint covariance
/// explicitly, and solves once. Independent of the recursion above; intended
/// as a verification oracle.
pub fn batch_conditioning_oracle(
    model: &SystemModel,
    u_hist: &[DVector<f64>],
    y_hist: &[DVector<f64>],
) -> Result<DVector<f64>, KalmanError> {
    let c = model.c.as_ref().ok_or(KalmanError::NotOutputFeedback)?;
    let sigma_v = model.sigma_v.as_ref().ok_or(KalmanError::NotOutputFeedback)?;
    let steps = y_hist.len();
    assert!(steps >= 1 && steps <= model.horizon);
    assert_eq!(u_hist.len(), steps - 1, "one control per dynamics step");
    let d_x = model.d_x();
    let d_y = model.d_y();

    // primitive stack (x_1, w_1..w_{steps-1}, v_1..v_steps)
    let dim = d_x * steps + d_y * steps;
    let w_offset = |s: usize| d_x + s * d_x;
    let v_offset = |s: usize| d_x * steps + s * d_y;

    let mut sigma_xi = DMatrix::zeros(dim, dim);
    sigma_xi
        .view_mut((0, 0), (d_x, d_x))
        .copy_from(&model.sigma_x);
    for s in 0..steps - 1 {
        sigma_xi
            .view_mut((w_offset(s), w_offset(s)), (d_x, d_x))
            .copy_from(&model.sigma_w);
    }
    for s in 0..steps {
        sigma_xi
            .view_mut((v_offset(s), v_offset(s)), (d_y, d_y))
            .copy_from(sigma_v);
    }

    // X_{s+1} = A X_s + B u_s + W_s: state maps and control-driven means
    let mut state_map = DMatrix::zeros(d_x, dim);
    state_map
        .view_mut((0, 0), (d_x, d_x))
        .copy_from(&DMatrix::identity(d_x, d_x));
    let mut mean = DVector::zeros(d_x);
    let mut obs_maps = Vec::with_capacity(steps);
    let mut obs_means = Vec::with_capacity(steps);
    #[allow(clippy::needless_range_loop)] // s drives the block offsets, not one array
    for s in 0..steps {
        let mut h = c * &state_map;
        let mut vsel = h.view_mut((0, v_offset(s)), (d_y, d_y));
        vsel += DMatrix::identity(d_y, d_y);
        obs_maps.push(h);
        obs_means.push(c * &mean);
        if s + 1 < steps {
            state_map = &model.a * &state_map;
            state_map
                .view_mut((0, w_offset(s)), (d_x, d_x))
                .copy_from(&DMatrix::identity(d_x, d_x));
            mean = &model.a * &mean + &model.b * &u_hist[s];
        }
    }

    let obs_refs: Vec<&DMatrix<f64>> = obs_maps.iter().collect();
    let h = vcat(&obs_refs);
    let cov_yy = &h * &sigma_xi * h.transpose();
    let cov_xy = &state_map * &sigma_xi * h.transpose();

    let mut innovation = DVector::zeros(d_y * steps);
    for s in 0..steps {
        innovation
            .rows_mut(s * d_y, d_y)
            .copy_from(&(&y_hist[s] - &obs_means[s]));
    }
    let innovation_mat = DMatrix::from_column_slice(d_y * steps, 1, innovation.as_slice());
    let solved = solve_spd(&cov_yy, &innovation_mat, MAX_CONDITION)
        .map_err(|_| KalmanError::SingularObservationCovariance)?;
    let delta = &cov_xy * solved;
    Ok(&mean + DVector::from_column_slice(delta.as_slice()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hcat, max_abs};
    use crate::model::testutil::sum_example_of;
    use crate::rng::{NoiseStream, StreamKind};
    use crate::substitution::gaussian_vector;
    use nalgebra::dmatrix;

    fn scalar_of_model() -> SystemModel {
        SystemModel {
            a: dmatrix![1.0],
            b: dmatrix![1.0],
            m: dmatrix![1.0],
            n: dmatrix![0.0],
            c: Some(dmatrix![1.0]),
            sigma_x: dmatrix![1.0],
            sigma_w: dmatrix![1.0],
            sigma_v: Some(dmatrix![1.0]),
            controller_partition: Partition::uniform(1, 1),
            state_partition: Some(Partition::uniform(1, 1)),
            observation_partition: Some(Partition::uniform(1, 1)),
            horizon: 3,
            num_controllers: 1,
        }
    }

    #[test]
    fn scalar_recursion_matches_hand_values() {
        let model = scalar_of_model();
        model.check().unwrap();
        let schedule = solve_kalman(&model).unwrap();
        assert!((schedule.l[0][(0, 0)] - 0.5).abs() <= 1e-15);
        assert!((schedule.sigma[0][(0, 0)] - 0.5).abs() <= 1e-15);
        // prior at step 1 is 0.5 + 1 = 1.5
        assert!((schedule.l[1][(0, 0)] - 0.6).abs() <= 1e-15);
        assert!((schedule.sigma[1][(0, 0)] - 0.6).abs() <= 1e-15);
    }

    #[test]
    fn uninformative_observation_keeps_the_prior() {
        let mut model = scalar_of_model();
        model.sigma_v = Some(dmatrix![1e12]);
        let schedule = solve_kalman(&model).unwrap();
        assert!(schedule.l[0][(0, 0)].abs() <= 1e-11);
        assert!((schedule.sigma[0][(0, 0)] - 1.0).abs() <= 1e-11);
    }

    #[test]
    fn zero_gain_update_is_pure_prediction() {
        let model = sum_example_of();
        let mut schedule = solve_kalman(&model).unwrap();
        for l in &mut schedule.l {
            l.fill(0.0);
        }
        let z = DVector::from_vec(vec![0.3, -0.7]);
        let u = DVector::from_vec(vec![1.0, -2.0]);
        let y = DVector::from_vec(vec![5.0, 5.0]);
        let next = centralized_estimate_update(&model, &schedule, 0, &z, &u, &y);
        let expected = &model.a * &z + &model.b * &u;
        assert!(max_abs(&DMatrix::from_column_slice(2, 1, (&next - expected).as_slice())) <= 1e-15);
    }

    #[test]
    fn gain_blocks_tile_the_gain() {
        let model = sum_example_of();
        let schedule = solve_kalman(&model).unwrap();
        for t in 0..model.horizon {
            let tiled = hcat(&[&schedule.l_block(t, 0), &schedule.l_block(t, 1)]);
            assert_eq!(tiled, schedule.l[t]);
        }
    }

    #[test]
    fn state_feedback_model_is_refused() {
        let model = crate::model::testutil::sum_example_sf();
        assert_eq!(solve_kalman(&model), Err(KalmanError::NotOutputFeedback));
    }

    #[test]
    fn degenerate_innovation_is_refused() {
        let mut model = sum_example_of();
        // duplicated observation rows with zero measurement noise
        model.c = Some(dmatrix![1.0, 0.0; 1.0, 0.0]);
        model.sigma_v = Some(DMatrix::zeros(2, 2));
        model.check().unwrap();
        assert!(matches!(
            solve_kalman(&model),
            Err(KalmanError::SingularInnovation { t: 0, .. })
        ));
    }

    #[test]
    fn oracle_first_step_reduces_to_the_first_gain() {
        let model = sum_example_of();
        let schedule = solve_kalman(&model).unwrap();
        let y1 = DVector::from_vec(vec![0.4, -1.2]);
        let oracle =
            batch_conditioning_oracle(&model, &[], std::slice::from_ref(&y1)).unwrap();
        let recursive = initial_estimate(&schedule, &y1);
        assert!((&oracle - &recursive).amax() <= 1e-12);
    }

    #[test]
    fn oracle_matches_recursion_along_a_trajectory() {
        let model = sum_example_of();
        let schedule = solve_kalman(&model).unwrap();
        let c = model.c.as_ref().unwrap();
        let mut stream = NoiseStream::new(99, 0, StreamKind::Generator, 0);

        let mut x = gaussian_vector(&model.sigma_x, &mut stream);
        let mut y_hist = vec![c * &x + gaussian_vector(model.sigma_v.as_ref().unwrap(), &mut stream)];
        let mut u_hist: Vec<DVector<f64>> = Vec::new();
        let mut z = initial_estimate(&schedule, &y_hist[0]);

        for t in 0..model.horizon - 1 {
            // arbitrary known controls exercise the mean propagation
            let u = DVector::from_vec(stream.standard_normal_vec(model.d_u()));
            x = &model.a * &x + &model.b * &u + gaussian_vector(&model.sigma_w, &mut stream);
            let y = c * &x + gaussian_vector(model.sigma_v.as_ref().unwrap(), &mut stream);
            z = centralized_estimate_update(&model, &schedule, t, &z, &u, &y);
            u_hist.push(u);
            y_hist.push(y);
            let oracle = batch_conditioning_oracle(&model, &u_hist, &y_hist).unwrap();
            assert!(
                (&oracle - &z).amax() <= 1e-10,
                "step {t}: oracle {oracle:?} vs recursive {z:?}"
            );
        }
    }
}
