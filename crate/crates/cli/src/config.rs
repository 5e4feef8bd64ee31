//! TOML experiment configs for `nf`, `stab` and `split`.
//!
//! Unknown keys are rejected. Relative paths are resolved against the
//! directory of the config file.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use resonorm::normalform::NormalFormOptions;
use resonorm::splitting::ManifoldOptions;

/// A config file that could not be read or parsed; exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
    parse(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))
}

/// Parses TOML; the error message carries line and column.
pub fn parse<T: DeserializeOwned>(text: &str) -> Result<T, ConfigError> {
    toml::from_str(text).map_err(|e| {
        let msg = e.message().to_string();
        match e.span() {
            Some(span) => {
                let (line, column) = line_column(text, span.start);
                ConfigError(format!("line {line}, column {column}: {msg}"))
            }
            None => ConfigError(msg),
        }
    })
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

pub fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.parent().unwrap_or(Path::new(".")).join(p)
    }
}

/// Optional settings for `nf --config`.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NfConfig {
    pub normal_form: NormalFormOptions,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StabFamily {
    /// Single resonant mode rebuilt for each eps.
    Demo,
    /// `f = 0`.
    Unperturbed,
    /// The perturbation in `ham`, scaled to `|f|_{C^k} = eps`.
    Scaled,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabConfig {
    pub omega: String,
    pub family: StabFamily,
    /// Perturbation file for `family = "scaled"`.
    #[serde(default)]
    pub ham: Option<PathBuf>,
    pub k: u32,
    pub eps: Vec<f64>,
    pub delta: f64,
    pub horizon: f64,
    #[serde(default = "one")]
    pub radius: f64,
    pub out: PathBuf,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitMode {
    /// One splitting matrix at the configured couplings.
    Single,
    /// Splitting against each entry of `mus` at fixed lambda.
    MuSweep,
    /// `mu = lambda^(k-2)`, `lambda = 1 / Delta*(c / sqrt(eps))` over `eps_list`.
    Scaling,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    /// Fast frequency, a single-entry spec such as `"1/4"`.
    pub varpi: String,
    #[serde(default = "one")]
    pub eps: f64,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default)]
    pub mu: f64,
    #[serde(default = "single")]
    pub mode: SplitMode,
    #[serde(default)]
    pub mus: Vec<f64>,
    #[serde(default)]
    pub eps_list: Vec<f64>,
    #[serde(default)]
    pub scaling: ScalingSection,
    #[serde(default)]
    pub manifold: ManifoldOptions,
    pub out: PathBuf,
}

fn single() -> SplitMode {
    SplitMode::Single
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingSection {
    pub k: u32,
    pub c: f64,
    pub radius: f64,
}

impl Default for ScalingSection {
    fn default() -> Self {
        let d = resonorm::splitting::ScalingOptions::default();
        ScalingSection {
            k: d.k,
            c: d.c,
            radius: d.radius,
        }
    }
}
