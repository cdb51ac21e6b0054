//! JSON experiment configuration.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use calorix_core::{build_mesh, CoefficientMatrix, CrossSection, CylinderMesh, MeshResolution, Parity};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// The tasks a configuration can select, in catalog order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskName {
    VerifyKernels,
    VerifyJumps,
    VerifyIdentities,
    PolyTable,
    Solve,
    Completeness,
}

impl TaskName {
    pub const ALL: [TaskName; 6] = [
        TaskName::VerifyKernels,
        TaskName::VerifyJumps,
        TaskName::VerifyIdentities,
        TaskName::PolyTable,
        TaskName::Solve,
        TaskName::Completeness,
    ];

    pub fn label(self) -> &'static str {
        match self {
            TaskName::VerifyKernels => "verify-kernels",
            TaskName::VerifyJumps => "verify-jumps",
            TaskName::VerifyIdentities => "verify-identities",
            TaskName::PolyTable => "poly-table",
            TaskName::Solve => "solve",
            TaskName::Completeness => "completeness",
        }
    }
}

impl fmt::Display for TaskName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for TaskName {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        TaskName::ALL
            .into_iter()
            .find(|t| t.label() == s)
            .ok_or_else(|| CliError::Config(format!("unknown task {s:?}; run `calorix list-tasks`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorBlock {
    pub n: usize,
    /// Rows of the symmetric positive definite matrix `A`.
    pub matrix: Vec<Vec<f64>>,
    #[serde(default = "default_parity")]
    pub parity: Parity,
}

fn default_parity() -> Parity {
    Parity::V
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryBlock {
    pub cross_section: CrossSection,
    pub final_time: f64,
}

/// Boundary data of `solve` and `completeness`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DataSpec {
    /// `exp(<x, xi> +- t <A xi, xi>)`, sign matching the parity.
    CaloricExponential { xi: Vec<f64> },
    /// Member `v_alpha` or `w_alpha` of the configured family.
    CaloricPolynomial { alpha: Vec<u32> },
    /// `|x_index|`, not caloric.
    AbsCoordinate { index: usize },
    Constant { value: f64 },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degrees: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_degree: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rcond: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<DataSpec>,
    /// Number of random probe points (`verify-kernels`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probes: Option<usize>,
    /// Number of random densities (`verify-jumps`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub densities: Option<usize>,
    /// Number of lateral nodes per density (`verify-jumps`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<usize>,
    /// Compare jump errors against a once-refined mesh (`verify-jumps`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refine: Option<bool>,
    /// Upper bound on the final residual (`solve`, `completeness`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_residual: Option<f64>,
    /// Check the top-degree fit on a once-refined mesh (`completeness`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cross_validate: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    /// Relative to the directory of the configuration file.
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
    /// Record wall-clock timings; off by default so reports are reproducible.
    #[serde(default)]
    pub timing: bool,
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self { directory: default_directory(), formats: default_formats(), timing: false }
    }
}

fn default_directory() -> PathBuf {
    PathBuf::from("out")
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

fn default_mesh() -> MeshResolution {
    MeshResolution::new(64, 16, 16)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Optional; must agree with the task named on the command line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<TaskName>,
    pub operator: OperatorBlock,
    pub geometry: GeometryBlock,
    #[serde(default = "default_mesh")]
    pub mesh: MeshResolution,
    #[serde(default)]
    pub params: TaskParams,
    #[serde(default)]
    pub output: OutputBlock,
    #[serde(default)]
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let config: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| CliError::Config(format!("malformed configuration: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Structural checks that do not need the mesh.
    pub fn validate(&self) -> Result<(), CliError> {
        let n = self.operator.n;
        let invalid = |msg: String| Err(CliError::Config(msg));
        if n == 0 {
            return invalid("operator.n must be at least 1".into());
        }
        if self.operator.matrix.len() != n || self.operator.matrix.iter().any(|r| r.len() != n) {
            return invalid(format!("operator.matrix must be {n} x {n}"));
        }
        self.coefficients()?;
        if self.geometry.cross_section.dim() != n {
            return invalid(format!(
                "cross-section {} lives in dimension {}, operator.n = {n}",
                self.geometry.cross_section,
                self.geometry.cross_section.dim()
            ));
        }
        if !(self.geometry.final_time > 0.0 && self.geometry.final_time.is_finite()) {
            return invalid("geometry.final_time must be positive".into());
        }
        let p = &self.params;
        if let Some(r) = p.rcond {
            if !(r > 0.0 && r < 1.0) {
                return invalid(format!("params.rcond must lie in (0, 1), got {r}"));
            }
        }
        if let Some(d) = &p.degrees {
            if d.is_empty() || d.windows(2).any(|w| w[0] >= w[1]) {
                return invalid("params.degrees must be non-empty and strictly increasing".into());
            }
        }
        if let Some(data) = &p.data {
            match data {
                DataSpec::CaloricExponential { xi } if xi.len() != n => {
                    return invalid(format!("data.xi must have {n} entries"));
                }
                DataSpec::CaloricPolynomial { alpha } if alpha.len() != n => {
                    return invalid(format!("data.alpha must have {n} entries"));
                }
                DataSpec::AbsCoordinate { index } if *index >= n => {
                    return invalid(format!("data.index must be below {n}"));
                }
                _ => {}
            }
        }
        if self.output.formats.is_empty() {
            return invalid("output.formats must not be empty".into());
        }
        Ok(())
    }

    /// Checks that the task named on the command line matches the file and
    /// that its required parameters are present.
    pub fn validate_for(&self, task: TaskName) -> Result<(), CliError> {
        if let Some(t) = self.task {
            if t != task {
                return Err(CliError::Config(format!("configuration is for task {t}, not {task}")));
            }
        }
        let p = &self.params;
        let missing = |what: &str| Err(CliError::Config(format!("task {task} needs params.{what}")));
        match task {
            TaskName::Solve if p.degree.is_none() => missing("degree"),
            TaskName::Solve | TaskName::Completeness if p.data.is_none() => missing("data"),
            TaskName::Completeness if p.degrees.is_none() => missing("degrees"),
            _ => Ok(()),
        }
    }

    pub fn coefficients(&self) -> Result<CoefficientMatrix, CliError> {
        CoefficientMatrix::new(self.operator.n, &self.operator.matrix).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn mesh(&self) -> Result<CylinderMesh, CliError> {
        self.mesh_with(self.mesh)
    }

    pub fn mesh_with(&self, res: MeshResolution) -> Result<CylinderMesh, CliError> {
        build_mesh(&self.geometry.cross_section, &self.coefficients()?, self.geometry.final_time, res)
            .map_err(|e| CliError::Config(e.to_string()))
    }

    /// Compact JSON echo embedded in every report.
    pub fn echo(&self) -> String {
        serde_json::to_string(self).expect("configuration serializes")
    }
}
