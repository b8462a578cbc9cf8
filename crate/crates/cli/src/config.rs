//! Experiment configuration: a JSON file whose keys can be overridden from
//! the command line.

use std::fmt;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use qcomp_core::source::{DEFAULT_CLASS_CAP, DEFAULT_DENSE_CAP, DEFAULT_WORD_CAP_BITS};
use qcomp_core::validate::ValidationConfig;
use qcomp_core::{ComplexMatrix, DensityOperator, MarkovChain, SourceModel};
use serde::{Deserialize, Serialize};

/// Problem with the configuration file or its values (exit code 2).
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Complex matrix as separate real and imaginary row lists.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSpec {
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

impl MatrixSpec {
    fn to_matrix(&self, what: &str) -> Result<ComplexMatrix, ConfigError> {
        let rows = self.re.len();
        let cols = self.re.first().map_or(0, Vec::len);
        let im = self.im.clone().unwrap_or_else(|| vec![vec![0.0; cols]; rows]);
        if rows == 0
            || self.re.iter().any(|r| r.len() != cols)
            || im.len() != rows
            || im.iter().any(|r| r.len() != cols)
        {
            return Err(ConfigError(format!("{what}: ragged or empty matrix")));
        }
        let data = (0..rows)
            .flat_map(|i| (0..cols).map(move |j| (i, j)))
            .map(|(i, j)| Complex64::new(self.re[i][j], im[i][j]))
            .collect();
        ComplexMatrix::from_vec(rows, cols, data).map_err(|e| ConfigError(format!("{what}: {e}")))
    }
}

/// `"identity"`, `"hadamard"` or an explicit matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RotationSpec {
    Named(String),
    Matrix(MatrixSpec),
}

impl RotationSpec {
    fn to_matrix(&self, dim: usize) -> Result<ComplexMatrix, ConfigError> {
        match self {
            RotationSpec::Named(name) => match name.as_str() {
                "identity" => Ok(ComplexMatrix::identity(dim)),
                "hadamard" if dim == 2 => Ok(ComplexMatrix::hadamard()),
                "hadamard" => Err(ConfigError("hadamard rotation needs a qubit source".into())),
                other => Err(ConfigError(format!("unknown rotation {other:?}"))),
            },
            RotationSpec::Matrix(m) => m.to_matrix("rotation"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceSpec {
    /// Product source; give either the site eigenvalues (optionally rotated)
    /// or the full site state.
    Iid {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        eigenvalues: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        state: Option<MatrixSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rotation: Option<RotationSpec>,
    },
    RotatedMarkov {
        transition: Vec<Vec<f64>>,
        /// Defaults to the stationary distribution.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        initial: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rotation: Option<RotationSpec>,
    },
}

impl SourceSpec {
    pub fn build(&self) -> Result<SourceModel, ConfigError> {
        let invalid = |e: qcomp_core::Error| ConfigError(format!("source: {e}"));
        match self {
            SourceSpec::Iid {
                eigenvalues,
                state,
                rotation,
            } => {
                let site = match (eigenvalues, state) {
                    (Some(ev), None) => DensityOperator::diagonal(ev).map_err(invalid)?,
                    (None, Some(m)) => DensityOperator::new(m.to_matrix("state")?).map_err(invalid)?,
                    _ => return Err(ConfigError("iid source needs exactly one of eigenvalues, state".into())),
                };
                let site = match rotation {
                    Some(r) => {
                        let u = r.to_matrix(site.dim())?;
                        check_unitary(&u, site.dim())?;
                        site.conjugate(&u)
                    }
                    None => site,
                };
                Ok(SourceModel::iid(site))
            }
            SourceSpec::RotatedMarkov {
                transition,
                initial,
                rotation,
            } => {
                let chain = match initial {
                    Some(init) => MarkovChain::with_initial(transition, init.clone()),
                    None => MarkovChain::new(transition),
                }
                .map_err(invalid)?;
                let u = match rotation {
                    Some(r) => r.to_matrix(chain.dim())?,
                    None => ComplexMatrix::identity(chain.dim()),
                };
                SourceModel::rotated_markov(chain, u).map_err(invalid)
            }
        }
    }
}

fn check_unitary(u: &ComplexMatrix, dim: usize) -> Result<(), ConfigError> {
    if u.rows() != dim || u.cols() != dim {
        return Err(ConfigError(format!("rotation must be {dim}x{dim}")));
    }
    let dev = u.adjoint().matmul(u).max_abs_diff(&ComplexMatrix::identity(dim));
    if dev > 1e-10 {
        return Err(ConfigError(format!(
            "source: invalid source (unitary): |U^dagger U - 1|_max = {dev:e}"
        )));
    }
    Ok(())
}

/// `eps_n = max(epsilon_min, c / sqrt(n))`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    pub c: f64,
    pub epsilon_min: f64,
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            c: 1.0,
            epsilon_min: 0.01,
        }
    }
}

impl Schedule {
    pub fn epsilon(&self, n: usize) -> f64 {
        (self.c / (n as f64).sqrt()).max(self.epsilon_min).min(0.999)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidationSpec {
    pub fidelity_trials: usize,
    pub monotonicity_trials: usize,
    pub beta_trials: usize,
    pub spectrum_n_max: usize,
    pub consistency_n_max: usize,
}

impl Default for ValidationSpec {
    fn default() -> Self {
        let v = ValidationConfig::default();
        Self {
            fidelity_trials: v.fidelity_trials,
            monotonicity_trials: v.monotonicity_trials,
            beta_trials: v.beta_trials,
            spectrum_n_max: v.spectrum_n_max,
            consistency_n_max: v.consistency_n_max,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Label written to the `source` column; defaults to the source kind.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub source: SourceSpec,
    #[serde(default = "default_n_list")]
    pub n_list: Vec<usize>,
    #[serde(default = "default_epsilons")]
    pub epsilon_list: Vec<f64>,
    #[serde(default = "default_rates")]
    pub target_rates: Vec<f64>,
    #[serde(default = "default_dense_cap")]
    pub dense_cap: usize,
    #[serde(default = "default_word_cap_bits")]
    pub word_cap_bits: f64,
    #[serde(default = "default_class_cap")]
    pub class_cap: usize,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub format: Format,
    #[serde(default)]
    pub schedule: Schedule,
    #[serde(default)]
    pub validation: ValidationSpec,
}

fn default_n_list() -> Vec<usize> {
    vec![1, 2, 4, 6, 8, 10, 16, 32, 64, 128, 256, 512, 1000]
}

fn default_epsilons() -> Vec<f64> {
    vec![0.01, 0.1, 0.3]
}

fn default_rates() -> Vec<f64> {
    vec![0.25]
}

fn default_dense_cap() -> usize {
    DEFAULT_DENSE_CAP
}

fn default_word_cap_bits() -> f64 {
    DEFAULT_WORD_CAP_BITS
}

fn default_class_cap() -> usize {
    DEFAULT_CLASS_CAP
}

fn default_out() -> PathBuf {
    PathBuf::from("qcomp-results")
}

fn default_seed() -> u64 {
    ValidationConfig::default().seed
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            name: None,
            source: SourceSpec::Iid {
                eigenvalues: Some(vec![0.9, 0.1]),
                state: None,
                rotation: Some(RotationSpec::Named("hadamard".into())),
            },
            n_list: default_n_list(),
            epsilon_list: default_epsilons(),
            target_rates: default_rates(),
            dense_cap: default_dense_cap(),
            word_cap_bits: default_word_cap_bits(),
            class_cap: default_class_cap(),
            out: default_out(),
            seed: default_seed(),
            format: Format::Csv,
            schedule: Schedule::default(),
            validation: ValidationSpec::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError(e.to_string()))
    }

    pub fn source_label(&self) -> String {
        self.name.clone().unwrap_or_else(|| {
            match self.source {
                SourceSpec::Iid { .. } => "iid",
                SourceSpec::RotatedMarkov { .. } => "rotated_markov",
            }
            .to_string()
        })
    }

    /// Range checks on everything except the source itself.
    pub fn check(&self) -> Result<(), ConfigError> {
        if self.n_list.is_empty() || self.n_list[0] == 0 || self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ConfigError(
                "n_list must be strictly ascending positive integers".into(),
            ));
        }
        if let Some(e) = self.epsilon_list.iter().find(|&&e| !(e > 0.0 && e < 1.0)) {
            return Err(ConfigError(format!("epsilon {e} outside (0, 1)")));
        }
        if !(self.schedule.c > 0.0) || !(self.schedule.epsilon_min > 0.0 && self.schedule.epsilon_min < 1.0) {
            return Err(ConfigError("schedule needs c > 0 and epsilon_min in (0, 1)".into()));
        }
        if self.dense_cap == 0 {
            return Err(ConfigError("dense_cap must be positive".into()));
        }
        Ok(())
    }

    /// Builds the source and checks target rates against its site dimension.
    pub fn build_source(&self) -> Result<SourceModel, ConfigError> {
        let src = self
            .source
            .build()?
            .with_dense_cap(self.dense_cap)
            .with_word_cap_bits(self.word_cap_bits)
            .with_class_cap(self.class_cap);
        let max_rate = (src.site_dim() as f64).log2();
        if let Some(r) = self.target_rates.iter().find(|&&r| !(r > 0.0 && r <= max_rate + 1e-12)) {
            return Err(ConfigError(format!("target rate {r} outside (0, {max_rate}]")));
        }
        Ok(src)
    }

    /// Suite settings; `source` joins the reference sources in the suites
    /// that iterate over sources.
    pub fn validation_config(&self, source: Option<SourceModel>) -> ValidationConfig {
        ValidationConfig {
            seed: self.seed,
            fidelity_trials: self.validation.fidelity_trials,
            monotonicity_trials: self.validation.monotonicity_trials,
            beta_trials: self.validation.beta_trials,
            spectrum_n_max: self.validation.spectrum_n_max,
            consistency_n_max: self.validation.consistency_n_max,
            dense_cap: self.dense_cap,
            extra_sources: source.into_iter().collect(),
        }
    }
}
