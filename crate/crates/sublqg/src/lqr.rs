//! Centralized finite-horizon LQR with the cost cross term.
//!
//! Minimizes E Σ_{t=1..T} ‖M X_t + N U_t‖² over linear state-feedback laws by
//! the backward Riccati recursion with terminal value zero. The stage Hessian
//! G_t = NᵀN + BᵀP_{t+1}B may be singular (the cost never requires NᵀN ≻ 0);
//! those steps take the minimum-norm stationary gain and are flagged rather
//! than rejected.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::linalg::{symmetric_part, PINV_RCOND};
use crate::model::{Partition, SystemModel};

/// Time-indexed gains K_t and value matrices P_t.
///
/// Zero-based: `k[t]` acts at step `t` for `t = 0..T`, `p[t]` is the
/// cost-to-go matrix at step `t` with `p[T] = 0`. The schedule carries the
/// model's state partition so per-subsystem column blocks can be sliced
/// without the model at hand.
#[derive(Debug, Clone, PartialEq)]
pub struct GainSchedule {
    pub k: Vec<DMatrix<f64>>,
    pub p: Vec<DMatrix<f64>>,
    /// Steps whose Hessian G_t was numerically singular (condition above
    /// 1e12); their gains are minimum-norm stationary solutions.
    pub singular_steps: Vec<usize>,
    pub state_partition: Option<Partition>,
}

impl GainSchedule {
    /// Number of control steps T.
    pub fn horizon(&self) -> usize {
        self.k.len()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LqrError {
    #[error("state_partition required for per-subsystem gain blocks")]
    MissingPartition,
}

/// Backward Riccati recursion over the full horizon.
///
/// With P_{T+1} = 0 and for t = T..1:
///
/// ```text
/// G_t = NᵀN + BᵀP_{t+1}B
/// K_t = −G_t⁻¹ (NᵀM + BᵀP_{t+1}A)
/// P_t = (M + NK_t)ᵀ(M + NK_t) + (A + BK_t)ᵀ P_{t+1} (A + BK_t)
/// ```
///
/// The value update uses the closed-loop form rather than the expanded
/// `MᵀM + AᵀP_{t+1}A + rhsᵀK_t`: the two agree at the stationary gain, but
/// the expanded form reaches small values by cancellation. When the cost is
/// (nearly) fully cancellable the leftover noise is then amplified by the
/// closed loop each backward step, while the Gram form stays at true scale.
///
/// P_t is symmetrized every step. Singular G_t falls back to the
/// pseudo-inverse (the stationarity system is always consistent because the
/// right-hand side lies in range(G_t)); the step index is recorded in
/// `singular_steps`.
pub fn solve_centralized_lqr(model: &SystemModel) -> GainSchedule {
    let t_max = model.horizon;
    let d_x = model.d_x();
    let d_u = model.d_u();
    let (a, b, m, n) = (&model.a, &model.b, &model.m, &model.n);
    let ntn = n.transpose() * n;
    let ntm = n.transpose() * m;

    let mut p = vec![DMatrix::zeros(d_x, d_x); t_max + 1];
    let mut k = vec![DMatrix::zeros(d_u, d_x); t_max];
    let mut singular_steps = Vec::new();

    for t in (0..t_max).rev() {
        let bp = b.transpose() * &p[t + 1];
        let g = symmetric_part(&(&ntn + &bp * b));
        let rhs = &ntm + &bp * a;
        let (neg_k, singular) = solve_stationarity(&g, &rhs);
        if singular {
            singular_steps.push(t);
        }
        k[t] = -neg_k;
        let cost_closed = m + n * &k[t];
        let dyn_closed = a + b * &k[t];
        let pt =
            cost_closed.transpose() * cost_closed + dyn_closed.transpose() * &p[t + 1] * dyn_closed;
        p[t] = symmetric_part(&pt);
    }
    singular_steps.reverse();

    GainSchedule {
        k,
        p,
        singular_steps,
        state_partition: model.state_partition.clone(),
    }
}

/// Solves G x = rhs for symmetric PSD G, returning the minimum-norm solution
/// and whether G was numerically singular.
fn solve_stationarity(g: &DMatrix<f64>, rhs: &DMatrix<f64>) -> (DMatrix<f64>, bool) {
    let eig = SymmetricEigen::new(g.clone());
    let lmax = eig.eigenvalues.iter().fold(0.0_f64, |a, &l| a.max(l));
    let thresh = lmax * PINV_RCOND;
    let mut singular = false;
    let mut qt_rhs = eig.eigenvectors.transpose() * rhs;
    for (i, &l) in eig.eigenvalues.iter().enumerate() {
        let mut row = qt_rhs.row_mut(i);
        if l > 0.0 && l >= thresh {
            row /= l;
        } else {
            row.fill(0.0);
            singular = true;
        }
    }
    (&eig.eigenvectors * qt_rhs, singular)
}

/// Column block K_tⁱ of the gain aligned with subsystem state block `i`
/// (0-based). Concatenating all blocks reproduces K_t exactly.
pub fn gain_block(
    schedule: &GainSchedule,
    t: usize,
    i: usize,
) -> Result<DMatrix<f64>, LqrError> {
    let partition = schedule
        .state_partition
        .as_ref()
        .ok_or(LqrError::MissingPartition)?;
    let r = partition.range(i);
    Ok(schedule.k[t].columns(r.start, r.len()).into_owned())
}
