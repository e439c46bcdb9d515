//! JSON run configuration shared by the command-line tool and the examples.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::control::ControlGrid;
use crate::error::{Error, Result};
use crate::jumps::BoundedControl;
use crate::marks::{JumpCoefficient, MarkSpace, TimeProfile};
use crate::nonlinearity::{PsiKind, PsiSpec};
use crate::rate::{EventSpec, RateOptions};
use crate::skeleton::{Model, SolverConfig};
use crate::spectral::{OperatorKind, OperatorSpec, SpectralField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorFamily {
    Laplacian,
    Fractional,
    Explicit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorConfig {
    pub kind: OperatorFamily,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub eigenvalues: Option<Vec<f64>>,
    /// Mode count; may be omitted for an explicit spectrum.
    #[serde(rename = "K", default)]
    pub modes: Option<usize>,
}

impl OperatorConfig {
    pub fn build(&self) -> Result<OperatorSpec> {
        match self.kind {
            OperatorFamily::Laplacian => OperatorSpec::laplacian(self.modes_required()?),
            OperatorFamily::Fractional => {
                let alpha = self
                    .alpha
                    .ok_or_else(|| Error::Config("fractional operator needs `alpha`".into()))?;
                OperatorSpec::fractional(alpha, self.modes_required()?)
            }
            OperatorFamily::Explicit => {
                let ev = self
                    .eigenvalues
                    .clone()
                    .ok_or_else(|| Error::Config("explicit operator needs `eigenvalues`".into()))?;
                let k = self.modes.unwrap_or(ev.len());
                OperatorSpec::new(OperatorKind::Explicit(ev), k)
            }
        }
    }

    fn modes_required(&self) -> Result<usize> {
        self.modes.ok_or_else(|| Error::Config("operator needs `K`".into()))
    }
}

fn default_beta() -> TimeProfile {
    TimeProfile::Constant
}

/// Finite mark space together with the jump coefficient
/// `f(t, x, z_j) = sigma_j beta(t) (c x + eta)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub marks: Vec<f64>,
    pub weights: Vec<f64>,
    pub sigma: Vec<f64>,
    #[serde(default = "default_beta")]
    pub beta: TimeProfile,
    #[serde(default)]
    pub c: f64,
    pub eta: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ControlFamily {
    /// `1 + amplitude sin(2 pi freq t / T)` on every mark.
    Oscillating { freq: f64, amplitude: f64 },
}

/// Exactly one of `file`, `constant` or `family`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ControlConfig {
    /// CSV matrix, one row per time cell and one column per mark. A header
    /// row is allowed.
    #[serde(default)]
    pub file: Option<PathBuf>,
    #[serde(default)]
    pub constant: Option<f64>,
    #[serde(default)]
    pub family: Option<ControlFamily>,
    /// Cells for `constant` and `family`; defaults to the solver's `n_t`.
    #[serde(default)]
    pub n_cells: Option<usize>,
}

impl ControlConfig {
    pub fn build(&self, marks: usize, horizon: f64, default_cells: usize, base_dir: &Path) -> Result<ControlGrid> {
        let chosen = usize::from(self.file.is_some()) + usize::from(self.constant.is_some()) + usize::from(self.family.is_some());
        if chosen != 1 {
            return Err(Error::Config("control needs exactly one of `file`, `constant`, `family`".into()));
        }
        let cells = self.n_cells.unwrap_or(default_cells);
        if let Some(v) = self.constant {
            return ControlGrid::constant(cells, marks, horizon, v);
        }
        if let Some(ControlFamily::Oscillating { freq, amplitude }) = self.family {
            return ControlGrid::oscillating(cells, marks, horizon, freq, amplitude);
        }
        let path = self.file.as_ref().expect("checked above");
        let path = if path.is_relative() { base_dir.join(path) } else { path.clone() };
        read_control_csv(&path, marks, horizon)
    }
}

pub fn read_control_csv(path: &Path, marks: usize, horizon: f64) -> Result<ControlGrid> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_path(path)?;
    let mut values = Vec::new();
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec?;
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(|s| s.trim().parse::<f64>()).collect();
        match parsed {
            Ok(row) => {
                if row.len() != marks {
                    return Err(Error::DimensionMismatch {
                        expected: marks,
                        found: row.len(),
                    });
                }
                values.extend(row);
                rows += 1;
            }
            Err(_) if rows == 0 && values.is_empty() => continue,
            Err(e) => return Err(Error::Config(format!("{}: {e}", path.display()))),
        }
    }
    ControlGrid::new(rows, marks, horizon, values)
}

fn default_horizon() -> f64 {
    1.0
}

fn default_eps() -> f64 {
    0.1
}

fn default_trials() -> usize {
    100
}

fn default_n_bound() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Config {
    pub operator: OperatorConfig,
    pub psi: PsiKind,
    pub noise: NoiseConfig,
    #[serde(rename = "T", default = "default_horizon")]
    pub horizon: f64,
    /// Initial coefficients; zeros when omitted.
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub control: Option<ControlConfig>,
    /// Bound `n` of the controlled-noise class used by `sample`.
    #[serde(default = "default_n_bound")]
    pub n_bound: usize,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default)]
    pub eps_list: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub event: Option<EventSpec>,
    #[serde(default)]
    pub rate: RateOptions,
    /// Directory used to resolve relative paths; set by [`Config::from_path`].
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_json(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn model(&self) -> Result<Model> {
        let op = self.operator.build()?;
        let psi = PsiSpec::new(self.psi)?;
        let n = &self.noise;
        let marks = MarkSpace::new(n.marks.clone(), n.weights.clone())?;
        let jump = JumpCoefficient::new(&op, n.sigma.clone(), n.beta, SpectralField::new(n.eta.clone())?, n.c)?;
        Model::new(op, psi, jump, marks, self.horizon)
    }

    pub fn x0(&self, modes: usize) -> Result<SpectralField> {
        match &self.x0 {
            None => Ok(SpectralField::zeros(modes)),
            Some(v) => {
                if v.len() != modes {
                    return Err(Error::DimensionMismatch {
                        expected: modes,
                        found: v.len(),
                    });
                }
                SpectralField::new(v.clone())
            }
        }
    }

    /// The configured control, or the null control on `n_t` cells.
    pub fn control(&self, model: &Model) -> Result<ControlGrid> {
        match &self.control {
            None => ControlGrid::ones(self.solver.n_t, model.marks.len(), model.horizon),
            Some(c) => c.build(model.marks.len(), model.horizon, self.solver.n_t, &self.base_dir),
        }
    }

    pub fn bounded_control(&self, model: &Model) -> Result<Option<BoundedControl>> {
        match &self.control {
            None => Ok(None),
            Some(_) => Ok(Some(BoundedControl::new(self.control(model)?, self.n_bound)?)),
        }
    }
}
