//! Run configuration: which densities to compare, which observables to push
//! through the Stein equation, and where the report goes.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use stein_core::density::spec::DensitySpec;
use stein_core::{Density, ObservableSpec, QuadratureSpec, SteinError};

use crate::output::Format;

/// A density given either in the command-line grammar (`"exp:2"`) or as a
/// full JSON object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DensityInput {
    Text(String),
    Spec(DensitySpec),
}

impl DensityInput {
    pub fn build(&self, base_dir: Option<&Path>) -> stein_core::Result<Density> {
        match self {
            DensityInput::Text(s) => DensitySpec::from_str(s)?.build_in(base_dir),
            DensityInput::Spec(s) => s.build_in(base_dir),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ObservableInput {
    Text(String),
    Spec(ObservableSpec),
}

impl ObservableInput {
    pub fn spec(&self) -> stein_core::Result<ObservableSpec> {
        match self {
            ObservableInput::Text(s) => s.parse(),
            ObservableInput::Spec(s) => Ok(s.clone()),
        }
    }
}

/// Overrides for the outer integrals. Solver internals keep their own
/// tighter settings.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadOverrides {
    pub abs_tol: Option<f64>,
    pub rel_tol: Option<f64>,
    pub max_subdivisions: Option<usize>,
}

impl QuadOverrides {
    pub fn apply(&self) -> stein_core::Result<QuadratureSpec> {
        let mut spec = QuadratureSpec::tight();
        if let Some(t) = self.abs_tol {
            spec.abs_tol = t;
        }
        if let Some(t) = self.rel_tol {
            spec.rel_tol = t;
        }
        if let Some(n) = self.max_subdivisions {
            spec.max_subdivisions = n;
        }
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSizes {
    /// Points for the factorization comparison.
    pub factorization: usize,
    /// Points for the Stein-equation residual scan.
    pub residual: usize,
}

impl Default for GridSizes {
    fn default() -> Self {
        Self {
            factorization: 201,
            residual: 101,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub format: Format,
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub target: DensityInput,
    pub alternatives: Vec<DensityInput>,
    #[serde(default = "default_observables")]
    pub observables: Vec<ObservableInput>,
    #[serde(default)]
    pub quad: QuadOverrides,
    #[serde(default)]
    pub grid: GridSizes,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_observables() -> Vec<ObservableInput> {
    vec![
        ObservableInput::Spec(ObservableSpec::Poly { coeffs: vec![0.0, 1.0] }),
        ObservableInput::Spec(ObservableSpec::Poly {
            coeffs: vec![0.0, 0.0, 1.0],
        }),
        ObservableInput::Spec(ObservableSpec::TvSign),
    ]
}

/// Everything a run needs, built and validated.
pub struct Resolved {
    pub target: Density,
    pub alternatives: Vec<Density>,
    pub observables: Vec<ObservableSpec>,
    pub quad: QuadratureSpec,
    pub grid: GridSizes,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))
    }

    /// Build every density and check the shared-support requirement before
    /// any integral is taken.
    pub fn resolve(&self, base_dir: Option<&Path>) -> stein_core::Result<Resolved> {
        if self.alternatives.is_empty() {
            return Err(SteinError::InvalidParameter(
                "config needs at least one alternative".into(),
            ));
        }
        let target = self.target.build(base_dir)?;
        let alternatives = self
            .alternatives
            .iter()
            .map(|a| a.build(base_dir))
            .collect::<stein_core::Result<Vec<_>>>()?;
        for q in &alternatives {
            target
                .support()
                .ensure_same(&q.support())
                .map_err(|_| SteinError::SupportMismatch {
                    left: format!("{} on {}", target.label(), target.support()),
                    right: format!("{} on {}", q.label(), q.support()),
                })?;
        }
        let observables = self
            .observables
            .iter()
            .map(ObservableInput::spec)
            .collect::<stein_core::Result<Vec<_>>>()?;
        Ok(Resolved {
            target,
            alternatives,
            observables,
            quad: self.quad.apply()?,
            grid: self.grid,
        })
    }
}
