//! Open-loop substitutability: deciding it and constructing the maps Λⁱ.
//!
//! Controller `i` can stand in for the whole team when every joint action
//! `u` has a local action `vⁱ` with `B u = Bⁱ vⁱ` and `N u = Nⁱ vⁱ`, i.e.
//! `range([B; N]) ⊆ range([Bⁱ; Nⁱ])`. The canonical choice is the minimum-norm
//! solution `vⁱ = Λⁱ u` with `Λⁱ = pinv([Bⁱ; Nⁱ])·[B; N]`; substitutability is
//! decided numerically by the reconstruction residual of that map.

use nalgebra::{DMatrix, DVector};

use crate::linalg::{inf_norm, max_abs, pinv, psd_factor, spectral_radius, vcat};
use crate::model::{Partition, SystemModel};
use crate::rng::{NoiseStream, StreamKind};

/// The substitution maps for every controller plus the numerical verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct SubstitutionSet {
    /// Λⁱ, one d_uⁱ×d_u matrix per controller.
    pub lambdas: Vec<DMatrix<f64>>,
    /// max entrywise error of [Bⁱ;Nⁱ]Λⁱ against [B;N], per controller.
    pub residuals: Vec<f64>,
    /// residual(i) ≤ tolerance
    pub per_controller: Vec<bool>,
    /// All controllers can substitute.
    pub substitutable: bool,
    /// The residual threshold 1e-8·(1+‖[B;N]‖_∞) used for the verdict.
    pub tolerance: f64,
}

impl SubstitutionSet {
    pub fn lambda(&self, i: usize) -> &DMatrix<f64> {
        &self.lambdas[i]
    }

    /// Λⁱ, or the per-controller refusal when the residual is above
    /// tolerance.
    pub fn require(&self, i: usize) -> Result<&DMatrix<f64>, SubstitutionError> {
        if self.per_controller[i] {
            Ok(&self.lambdas[i])
        } else {
            Err(SubstitutionError::NotSubstitutable {
                controller: i,
                residual: self.residuals[i],
                tolerance: self.tolerance,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SubstitutionError {
    #[error(
        "controller {controller} cannot substitute: residual {residual:.3e} exceeds {tolerance:.3e}"
    )]
    NotSubstitutable {
        controller: usize,
        residual: f64,
        tolerance: f64,
    },
    #[error("generator failed to reach its rank conditions after {attempts} attempts")]
    RankFailure { attempts: usize },
}

/// Λⁱ = pinv([Bⁱ; Nⁱ])·[B; N], the minimum-norm replication map for
/// controller `i` (0-based). The pseudo-inverse zeroes singular values below
/// σ_max·1e-12.
pub fn substitution_map(model: &SystemModel, i: usize) -> DMatrix<f64> {
    let stacked = vcat(&[&model.b, &model.n]);
    let own = vcat(&[&model.b_block(i), &model.n_block(i)]);
    pinv(&own) * stacked
}

/// Computes every Λⁱ and decides substitutability by residual.
pub fn check_substitutable(model: &SystemModel) -> SubstitutionSet {
    let stacked = vcat(&[&model.b, &model.n]);
    let tolerance = 1e-8 * (1.0 + inf_norm(&stacked));
    let n = model.num_controllers;
    let mut lambdas = Vec::with_capacity(n);
    let mut residuals = Vec::with_capacity(n);
    let mut per_controller = Vec::with_capacity(n);
    for i in 0..n {
        let own = vcat(&[&model.b_block(i), &model.n_block(i)]);
        let lambda = pinv(&own) * &stacked;
        let residual = max_abs(&(&own * &lambda - &stacked));
        per_controller.push(residual <= tolerance);
        residuals.push(residual);
        lambdas.push(lambda);
    }
    SubstitutionSet {
        substitutable: per_controller.iter().all(|&ok| ok),
        lambdas,
        residuals,
        per_controller,
        tolerance,
    }
}

/// vⁱ = Λⁱ u, controller `i`'s action replicating the joint action `u`.
pub fn apply_substitution(
    subs: &SubstitutionSet,
    u: &DVector<f64>,
    i: usize,
) -> Result<DVector<f64>, SubstitutionError> {
    Ok(subs.require(i)? * u)
}

/// Shape of a randomly generated substitutable model.
#[derive(Debug, Clone)]
pub struct GeneratorConfig {
    pub d_x: usize,
    /// Cost output dimension (rows of M and N).
    pub d_c: usize,
    /// Common controller block width; all blocks are this wide.
    pub block_width: usize,
    pub num_controllers: usize,
    pub horizon: usize,
    /// Observation block sizes per controller; `Some` switches the model to
    /// output feedback.
    pub observation_sizes: Option<Vec<usize>>,
}

impl GeneratorConfig {
    /// State-feedback shape with horizon 10.
    pub fn state_feedback(d_x: usize, d_c: usize, block_width: usize, n: usize) -> Self {
        GeneratorConfig {
            d_x,
            d_c,
            block_width,
            num_controllers: n,
            horizon: 10,
            observation_sizes: None,
        }
    }

    /// Output-feedback shape with one observation row per controller and
    /// horizon 10.
    pub fn output_feedback(d_x: usize, d_c: usize, block_width: usize, n: usize) -> Self {
        GeneratorConfig {
            observation_sizes: Some(vec![1; n]),
            ..Self::state_feedback(d_x, d_c, block_width, n)
        }
    }
}

const GENERATOR_ATTEMPTS: usize = 64;

/// Draws a random substitutable model: a full-column-rank base pair (B¹, N¹)
/// and invertible mixers Rⁱ with R¹ = I give Bⁱ = B¹Rⁱ, Nⁱ = N¹Rⁱ, so every
/// controller spans the same range by construction. A, M, and SPD covariances
/// are drawn alongside. Deterministic per seed.
pub fn generate_substitutable(
    config: &GeneratorConfig,
    seed: u64,
) -> Result<SystemModel, SubstitutionError> {
    assert!(config.d_x >= 1 && config.d_c >= 1);
    assert!(config.block_width >= 1 && config.num_controllers >= 1);
    assert!(config.horizon >= 1);
    let w = config.block_width;
    let n = config.num_controllers;
    let mut stream = NoiseStream::new(seed, 0, StreamKind::Generator, 0);

    // base pair: [B¹;N¹] must have full column rank so pinv([Bⁱ;Nⁱ])[Bⁱ;Nⁱ] = I
    let (b1, n1) = {
        let mut found = None;
        for _ in 0..GENERATOR_ATTEMPTS {
            let b1 = gaussian_matrix(&mut stream, config.d_x, w);
            let n1 = gaussian_matrix(&mut stream, config.d_c, w);
            if well_conditioned(&vcat(&[&b1, &n1]), 1e-3) {
                found = Some((b1, n1));
                break;
            }
        }
        found.ok_or(SubstitutionError::RankFailure {
            attempts: GENERATOR_ATTEMPTS,
        })?
    };

    let mut b_blocks = vec![b1.clone()];
    let mut n_blocks = vec![n1.clone()];
    for _ in 1..n {
        let mixer = {
            let mut found = None;
            for _ in 0..GENERATOR_ATTEMPTS {
                let r = gaussian_matrix(&mut stream, w, w);
                if well_conditioned(&r, 1e-2) {
                    found = Some(r);
                    break;
                }
            }
            found.ok_or(SubstitutionError::RankFailure {
                attempts: GENERATOR_ATTEMPTS,
            })?
        };
        b_blocks.push(&b1 * &mixer);
        n_blocks.push(&n1 * &mixer);
    }
    let b = vcat_free_hcat(&b_blocks);
    let n_mat = vcat_free_hcat(&n_blocks);

    // marginally stable dynamics keep trajectories at a testable scale
    let a = {
        let raw = gaussian_matrix(&mut stream, config.d_x, config.d_x);
        let rho = spectral_radius(&raw);
        if rho > 1e-9 {
            raw * (0.95 / rho)
        } else {
            raw + DMatrix::identity(config.d_x, config.d_x) * 0.5
        }
    };
    let m = gaussian_matrix(&mut stream, config.d_c, config.d_x);
    let sigma_x = random_spd(config.d_x, &mut stream);
    let sigma_w = random_spd(config.d_x, &mut stream);

    let (c, sigma_v, observation_partition) = match &config.observation_sizes {
        Some(sizes) => {
            assert_eq!(sizes.len(), n, "one observation block per controller");
            assert!(sizes.iter().all(|&s| s >= 1));
            let d_y: usize = sizes.iter().sum();
            let c = gaussian_matrix(&mut stream, d_y, config.d_x);
            let sv = random_spd(d_y, &mut stream);
            (Some(c), Some(sv), Some(Partition::new(sizes.clone())))
        }
        None => (None, None, None),
    };

    let state_partition = if config.d_x >= n {
        Some(near_equal_partition(config.d_x, n))
    } else {
        None
    };

    let model = SystemModel {
        a,
        b,
        m,
        n: n_mat,
        c,
        sigma_x,
        sigma_w,
        sigma_v,
        controller_partition: Partition::uniform(n, w),
        state_partition,
        observation_partition,
        horizon: config.horizon,
        num_controllers: n,
    };
    debug_assert!(model.check().is_ok());
    Ok(model)
}

/// Splits `total` into `blocks` near-equal positive widths.
fn near_equal_partition(total: usize, blocks: usize) -> Partition {
    let base = total / blocks;
    let rem = total % blocks;
    Partition::new(
        (0..blocks)
            .map(|i| base + usize::from(i < rem))
            .collect(),
    )
}

fn well_conditioned(m: &DMatrix<f64>, min_ratio: f64) -> bool {
    let svd = m.clone().svd(false, false);
    let smax = svd.singular_values.iter().fold(0.0_f64, |a, &s| a.max(s));
    let smin = svd
        .singular_values
        .iter()
        .fold(f64::INFINITY, |a, &s| a.min(s));
    smax > 0.0 && smin / smax >= min_ratio
}

fn vcat_free_hcat(blocks: &[DMatrix<f64>]) -> DMatrix<f64> {
    let refs: Vec<&DMatrix<f64>> = blocks.iter().collect();
    crate::linalg::hcat(&refs)
}

fn gaussian_matrix(stream: &mut NoiseStream, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| stream.next_standard_normal())
}

/// SPD covariance helper shared with tests and examples.
pub fn random_spd(dim: usize, stream: &mut NoiseStream) -> DMatrix<f64> {
    let g = DMatrix::from_fn(dim, dim, |_, _| stream.next_standard_normal());
    &g * g.transpose() / dim as f64 + DMatrix::identity(dim, dim) * 0.1
}

/// Draws a zero-mean Gaussian vector with the given covariance.
pub fn gaussian_vector(sigma: &DMatrix<f64>, stream: &mut NoiseStream) -> DVector<f64> {
    let f = psd_factor(sigma);
    let z = DVector::from_vec(stream.standard_normal_vec(f.ncols()));
    f * z
}
