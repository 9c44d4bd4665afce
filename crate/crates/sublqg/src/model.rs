//! System model, dimension partitions, and scenario ingestion.
//!
//! A [`SystemModel`] is the linear time-invariant plant
//!
//! ```text
//! X_{t+1} = A X_t + B U_t + W_t          t = 1..T-1
//! Y_t     = C X_t + V_t                  (output-feedback mode only)
//! cost    = Σ_{t=1..T} ‖M X_t + N U_t‖²
//! ```
//!
//! with the joint action `U_t` split across `n` controllers by a column
//! [`Partition`] of `B` and `N`. Feedback mode is inferred from the presence
//! of `C`: absent means every controller sees state directly, present means
//! controllers see noisy linear observations split by an observation
//! partition.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::Range;
use std::path::Path;

use crate::linalg::{inf_norm, max_abs, sym_extremes};

/// Block widths splitting one vector dimension across controllers or
/// subsystems.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Partition {
    sizes: Vec<usize>,
}

impl Partition {
    pub fn new(sizes: Vec<usize>) -> Self {
        Partition { sizes }
    }

    /// `blocks` blocks of equal width `width`.
    pub fn uniform(blocks: usize, width: usize) -> Self {
        Partition {
            sizes: vec![width; blocks],
        }
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Number of blocks.
    pub fn len(&self) -> usize {
        self.sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }

    /// Sum of all block widths.
    pub fn total(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn size(&self, i: usize) -> usize {
        self.sizes[i]
    }

    pub fn offset(&self, i: usize) -> usize {
        self.sizes[..i].iter().sum()
    }

    /// Index range of block `i` within the partitioned dimension.
    pub fn range(&self, i: usize) -> Range<usize> {
        let start = self.offset(i);
        start..start + self.sizes[i]
    }
}

/// Feedback mode, inferred from the presence of `C`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    StateFeedback,
    OutputFeedback,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::StateFeedback => "state-feedback",
            Mode::OutputFeedback => "output-feedback",
        })
    }
}

/// Closed-loop strategy selector used by scenarios, the simulator, and the
/// CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyKind {
    /// u_t = K_t x_t, every controller sees the full state.
    CentralizedSf,
    /// u_tⁱ = Λⁱ K_tⁱ x_tⁱ, each controller sees only its own subsystem state.
    DecentralizedSf,
    /// u_t = K_t z_t with the centralized Kalman estimate z_t.
    CentralizedOf,
    /// u_tⁱ = Λⁱ K_t s_tⁱ with controller-local estimators s_tⁱ.
    DecentralizedOf,
    /// u_t = 0 baseline.
    Zero,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 5] = [
        StrategyKind::CentralizedSf,
        StrategyKind::DecentralizedSf,
        StrategyKind::CentralizedOf,
        StrategyKind::DecentralizedOf,
        StrategyKind::Zero,
    ];

    /// The feedback mode this strategy requires, if any (`Zero` runs in
    /// either).
    pub fn required_mode(self) -> Option<Mode> {
        match self {
            StrategyKind::CentralizedSf | StrategyKind::DecentralizedSf => {
                Some(Mode::StateFeedback)
            }
            StrategyKind::CentralizedOf | StrategyKind::DecentralizedOf => {
                Some(Mode::OutputFeedback)
            }
            StrategyKind::Zero => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            StrategyKind::CentralizedSf => "centralized-sf",
            StrategyKind::DecentralizedSf => "decentralized-sf",
            StrategyKind::CentralizedOf => "centralized-of",
            StrategyKind::DecentralizedOf => "decentralized-of",
            StrategyKind::Zero => "zero",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One failed model invariant. `what` names the offending field.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelViolation {
    #[error("{what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: String,
        expected: String,
        found: String,
    },
    #[error("{what} is not symmetric: asymmetry {asymmetry:.3e} exceeds 1e-12 relative")]
    NotSymmetric { what: String, asymmetry: f64 },
    #[error("{what} is not positive semidefinite: min eigenvalue {min_eigenvalue:.3e}")]
    NotPsd { what: String, min_eigenvalue: f64 },
    #[error("{what}: {detail}")]
    PartitionArity { what: String, detail: String },
    #[error("inconsistent feedback mode: {detail}")]
    ModeMismatch { detail: String },
}

/// Every invariant violation found in one validation pass.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub struct ValidationError {
    pub violations: Vec<ModelViolation>,
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid model: ")?;
        for (k, v) in self.violations.iter().enumerate() {
            if k > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

mod serde_matrix {
    use super::rows_to_matrix;
    use nalgebra::DMatrix;
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, ser: S) -> Result<S::Ok, S::Error> {
        let mut seq = ser.serialize_seq(Some(m.nrows()))?;
        for i in 0..m.nrows() {
            let row: Vec<f64> = m.row(i).iter().copied().collect();
            seq.serialize_element(&row)?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<DMatrix<f64>, D::Error> {
        let rows: Vec<Vec<f64>> = Vec::deserialize(de)?;
        rows_to_matrix(&rows).map_err(serde::de::Error::custom)
    }
}

mod serde_matrix_opt {
    use super::rows_to_matrix;
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        m: &Option<DMatrix<f64>>,
        ser: S,
    ) -> Result<S::Ok, S::Error> {
        match m {
            Some(m) => super::serde_matrix::serialize(m, ser),
            None => ser.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        de: D,
    ) -> Result<Option<DMatrix<f64>>, D::Error> {
        let rows: Option<Vec<Vec<f64>>> = Option::deserialize(de)?;
        rows.map(|r| rows_to_matrix(&r).map_err(serde::de::Error::custom))
            .transpose()
    }
}

fn rows_to_matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>, String> {
    if rows.is_empty() {
        return Err("matrix must have at least one row".to_string());
    }
    let ncols = rows[0].len();
    if ncols == 0 {
        return Err("matrix rows must be nonempty".to_string());
    }
    if rows.iter().any(|r| r.len() != ncols) {
        return Err("matrix rows must all have the same length".to_string());
    }
    Ok(DMatrix::from_row_iterator(
        rows.len(),
        ncols,
        rows.iter().flatten().copied(),
    ))
}

/// The plant, cost, noise statistics, and dimension partitions.
///
/// Serializes to JSON with matrices as row-major nested arrays under the keys
/// `A, B, M, N, C, Sigma_x, Sigma_w, Sigma_v`; the controller count uses the
/// key `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemModel {
    #[serde(rename = "A", with = "serde_matrix")]
    pub a: DMatrix<f64>,
    #[serde(rename = "B", with = "serde_matrix")]
    pub b: DMatrix<f64>,
    #[serde(rename = "M", with = "serde_matrix")]
    pub m: DMatrix<f64>,
    #[serde(rename = "N", with = "serde_matrix")]
    pub n: DMatrix<f64>,
    #[serde(
        rename = "C",
        with = "serde_matrix_opt",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub c: Option<DMatrix<f64>>,
    #[serde(rename = "Sigma_x", with = "serde_matrix")]
    pub sigma_x: DMatrix<f64>,
    #[serde(rename = "Sigma_w", with = "serde_matrix")]
    pub sigma_w: DMatrix<f64>,
    #[serde(
        rename = "Sigma_v",
        with = "serde_matrix_opt",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub sigma_v: Option<DMatrix<f64>>,
    /// Column blocks of `B` and `N`, one per controller.
    pub controller_partition: Partition,
    /// Subsystem split of the state vector; required by decentralized state
    /// feedback, unused otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state_partition: Option<Partition>,
    /// Row blocks of `C`, one per controller; required in output-feedback
    /// mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observation_partition: Option<Partition>,
    /// Number of cost stages `T`; dynamics run for `T - 1` steps.
    pub horizon: usize,
    /// Number of controllers.
    #[serde(rename = "n")]
    pub num_controllers: usize,
}

impl SystemModel {
    pub fn d_x(&self) -> usize {
        self.a.nrows()
    }

    pub fn d_u(&self) -> usize {
        self.b.ncols()
    }

    /// Cost output dimension (rows of `M` and `N`).
    pub fn d_c(&self) -> usize {
        self.m.nrows()
    }

    /// Observation dimension; zero in state-feedback mode.
    pub fn d_y(&self) -> usize {
        self.c.as_ref().map_or(0, |c| c.nrows())
    }

    pub fn mode(&self) -> Mode {
        if self.c.is_some() {
            Mode::OutputFeedback
        } else {
            Mode::StateFeedback
        }
    }

    /// Column block `Bⁱ` of the dynamics input matrix.
    pub fn b_block(&self, i: usize) -> DMatrix<f64> {
        let r = self.controller_partition.range(i);
        self.b.columns(r.start, r.len()).into_owned()
    }

    /// Column block `Nⁱ` of the cost input matrix.
    pub fn n_block(&self, i: usize) -> DMatrix<f64> {
        let r = self.controller_partition.range(i);
        self.n.columns(r.start, r.len()).into_owned()
    }

    /// Validation with all violations collected, usable on borrowed models.
    pub fn check(&self) -> Result<(), ValidationError> {
        let mut v: Vec<ModelViolation> = Vec::new();
        let d_x = self.d_x();
        let d_u = self.d_u();
        let d_c = self.d_c();
        let n = self.num_controllers;

        let mut dim = |what: &str, expected: String, found: String| {
            v.push(ModelViolation::DimensionMismatch {
                what: what.to_string(),
                expected,
                found,
            });
        };

        if self.horizon == 0 {
            dim("horizon", "at least 1".into(), "0".into());
        }
        if n == 0 {
            dim("n", "at least 1".into(), "0".into());
        }
        if self.a.ncols() != d_x {
            dim(
                "A",
                format!("square {d_x}x{d_x}"),
                format!("{}x{}", self.a.nrows(), self.a.ncols()),
            );
        }
        if self.b.nrows() != d_x {
            dim(
                "B",
                format!("{d_x} rows"),
                format!("{} rows", self.b.nrows()),
            );
        }
        if self.m.ncols() != d_x {
            dim(
                "M",
                format!("{d_x} columns"),
                format!("{} columns", self.m.ncols()),
            );
        }
        if self.n.nrows() != d_c || self.n.ncols() != d_u {
            dim(
                "N",
                format!("{d_c}x{d_u}"),
                format!("{}x{}", self.n.nrows(), self.n.ncols()),
            );
        }

        check_partition(
            &mut v,
            "controller_partition",
            &self.controller_partition,
            n,
            d_u,
            "d_u",
        );
        if let Some(sp) = &self.state_partition {
            check_partition(&mut v, "state_partition", sp, n, d_x, "d_x");
        }

        check_covariance(&mut v, "Sigma_x", &self.sigma_x, d_x);
        check_covariance(&mut v, "Sigma_w", &self.sigma_w, d_x);

        match (&self.c, &self.sigma_v) {
            (Some(c), sigma_v) => {
                let d_y = c.nrows();
                if c.ncols() != d_x {
                    v.push(ModelViolation::DimensionMismatch {
                        what: "C".into(),
                        expected: format!("{d_x} columns"),
                        found: format!("{} columns", c.ncols()),
                    });
                }
                match sigma_v {
                    Some(sv) => check_covariance(&mut v, "Sigma_v", sv, d_y),
                    None => v.push(ModelViolation::ModeMismatch {
                        detail: "C present but Sigma_v absent".into(),
                    }),
                }
                match &self.observation_partition {
                    Some(op) => {
                        check_partition(&mut v, "observation_partition", op, n, d_y, "d_y")
                    }
                    None => v.push(ModelViolation::ModeMismatch {
                        detail: "C present but observation_partition absent".into(),
                    }),
                }
            }
            (None, Some(_)) => v.push(ModelViolation::ModeMismatch {
                detail: "Sigma_v present but C absent".into(),
            }),
            (None, None) => {
                if self.observation_partition.is_some() {
                    v.push(ModelViolation::ModeMismatch {
                        detail: "observation_partition present but C absent".into(),
                    });
                }
            }
        }

        if v.is_empty() {
            Ok(())
        } else {
            Err(ValidationError { violations: v })
        }
    }
}

fn check_partition(
    v: &mut Vec<ModelViolation>,
    what: &str,
    p: &Partition,
    n: usize,
    total: usize,
    total_name: &str,
) {
    if p.len() != n {
        v.push(ModelViolation::PartitionArity {
            what: what.to_string(),
            detail: format!("{} blocks declared but n = {}", p.len(), n),
        });
    }
    if p.sizes().contains(&0) {
        v.push(ModelViolation::PartitionArity {
            what: what.to_string(),
            detail: "block widths must be at least 1".to_string(),
        });
    }
    if p.total() != total {
        v.push(ModelViolation::PartitionArity {
            what: what.to_string(),
            detail: format!("block widths sum to {} but {} = {}", p.total(), total_name, total),
        });
    }
}

fn check_covariance(v: &mut Vec<ModelViolation>, what: &str, sigma: &DMatrix<f64>, dim: usize) {
    if sigma.nrows() != dim || sigma.ncols() != dim {
        v.push(ModelViolation::DimensionMismatch {
            what: what.to_string(),
            expected: format!("{dim}x{dim}"),
            found: format!("{}x{}", sigma.nrows(), sigma.ncols()),
        });
        return;
    }
    let asym = max_abs(&(sigma - sigma.transpose()));
    if asym > 1e-12 * inf_norm(sigma) {
        v.push(ModelViolation::NotSymmetric {
            what: what.to_string(),
            asymmetry: asym,
        });
        return;
    }
    let (min_eig, two_norm) = sym_extremes(sigma);
    if min_eig < -1e-10 * two_norm {
        v.push(ModelViolation::NotPsd {
            what: what.to_string(),
            min_eigenvalue: min_eig,
        });
    }
}

/// Returns the model unchanged iff every invariant holds; otherwise the full
/// list of violations. Idempotent.
pub fn validate_model(raw: SystemModel) -> Result<SystemModel, ValidationError> {
    raw.check()?;
    Ok(raw)
}

/// Optional artifact destinations named by a scenario file.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputPaths {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_csv: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<String>,
}

impl OutputPaths {
    pub fn is_empty(&self) -> bool {
        self.trace_csv.is_none() && self.summary.is_none() && self.report.is_none()
    }
}

fn default_num_runs() -> u32 {
    1
}

/// One experiment: a model plus seed, run count, strategy selector, and
/// output paths. Scenario files are this struct in JSON with the model keys
/// inline at the top level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    #[serde(flatten)]
    pub model: SystemModel,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_num_runs")]
    pub num_runs: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<StrategyKind>,
    #[serde(default, skip_serializing_if = "OutputPaths::is_empty")]
    pub outputs: OutputPaths,
}

impl ScenarioConfig {
    /// Bare scenario around a model: seed 0, one run, no profile, no outputs.
    pub fn from_model(model: SystemModel) -> Self {
        ScenarioConfig {
            model,
            seed: 0,
            num_runs: 1,
            profile: None,
            outputs: OutputPaths::default(),
        }
    }
}

/// Failure to read, parse, or validate a scenario file.
#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {detail}")]
    Parse { detail: String },
    #[error("missing field `{field}`: {context}")]
    MissingField { field: String, context: String },
    #[error(transparent)]
    Validation(#[from] ValidationError),
}

/// Reads and fully validates a scenario file. Round-trip stable with
/// [`save_scenario`]: matrix entries survive as shortest round-trip decimals.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<ScenarioConfig, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_scenario(&text)
}

/// [`load_scenario`] on in-memory JSON text.
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig, ScenarioError> {
    let config: ScenarioConfig =
        serde_json::from_str(text).map_err(|e| ScenarioError::Parse {
            detail: e.to_string(),
        })?;
    if config.num_runs == 0 {
        return Err(ScenarioError::Parse {
            detail: "num_runs must be at least 1".to_string(),
        });
    }
    // schema completeness before invariant checks: a C without its noise
    // statistics is a truncated file, not a bad model
    if config.model.c.is_some() {
        if config.model.sigma_v.is_none() {
            return Err(ScenarioError::MissingField {
                field: "Sigma_v".to_string(),
                context: "required when C is present".to_string(),
            });
        }
        if config.model.observation_partition.is_none() {
            return Err(ScenarioError::MissingField {
                field: "observation_partition".to_string(),
                context: "required when C is present".to_string(),
            });
        }
    }
    config.model.check()?;
    Ok(config)
}

/// Writes a scenario as pretty-printed JSON.
pub fn save_scenario(config: &ScenarioConfig, path: impl AsRef<Path>) -> Result<(), ScenarioError> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(config).map_err(|e| ScenarioError::Parse {
        detail: e.to_string(),
    })?;
    text.push('\n');
    std::fs::write(path, text).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })
}
