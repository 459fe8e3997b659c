//! TOML run configuration.
//!
//! A config names a region family, a window, a weight, and optionally an
//! experiment or a sampling job. Unknown keys are rejected so that a typo
//! fails loudly instead of silently running defaults. Builders hand back
//! the core types; grid-backed templates are certified against their
//! declared constants at load time.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{PxgError, Result};
use crate::functional::WeightSpec;
use crate::geom::Window;
use crate::harness::ExperimentPlan;
use crate::io;
use crate::pointproc::ProcessKind;
use crate::regions::{
    self, BuiltinTemplate, FamilyKind, RegionFamily, Template, TemplateConstants,
};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub family: FamilyConfig,
    pub window: Window,
    #[serde(default)]
    pub weight: WeightConfig,
    #[serde(default)]
    pub experiment: Option<ExperimentConfig>,
    #[serde(default)]
    pub sample: Option<SampleConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    pub kind: FamilyKind,
    pub dim: usize,
    /// Required iff kind = template_isotropic.
    #[serde(default)]
    pub template: Option<TemplateConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemplateConfig {
    /// One of the certified built-ins...
    #[serde(default)]
    pub builtin: Option<BuiltinTemplate>,
    /// ...or a signed-distance grid file plus declared constants.
    #[serde(default)]
    pub grid_file: Option<PathBuf>,
    #[serde(default)]
    pub normalized_diameter: Option<f64>,
    #[serde(default)]
    pub ball_ratio: Option<f64>,
    #[serde(default)]
    pub inscribed_center: Option<Vec<f64>>,
    /// Randomized certification budget for grid templates (0 skips).
    #[serde(default = "default_certify_samples")]
    pub certify_samples: usize,
    #[serde(default)]
    pub certify_seed: u64,
}

fn default_certify_samples() -> usize {
    2000
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct WeightConfig {
    /// Power-weight exponent; 1 when the block is omitted.
    #[serde(default)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Variance,
    Clt,
    Tails,
    Stabilize,
}

impl ExperimentKind {
    pub fn label(&self) -> &'static str {
        match self {
            ExperimentKind::Variance => "variance",
            ExperimentKind::Clt => "clt",
            ExperimentKind::Tails => "tails",
            ExperimentKind::Stabilize => "stabilize",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub t_values: Vec<f64>,
    pub replications: usize,
    pub seed: u64,
    #[serde(default)]
    pub process: Option<ProcessKind>,
    /// Lattice spacing for tails/stabilize; window diameter / 32 if absent.
    #[serde(default)]
    pub spacing: Option<f64>,
    #[serde(default)]
    pub r_grid: Option<Vec<f64>>,
    /// Base set for stabilize; window center if absent.
    #[serde(default)]
    pub base_center: Option<Vec<f64>>,
    #[serde(default)]
    pub base_radius: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleConfig {
    pub t: f64,
    pub seed: u64,
    #[serde(default)]
    pub process: Option<ProcessKind>,
    #[serde(default)]
    pub format: Option<PointsFormat>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointsFormat {
    Csv,
    Binary,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub prefix: Option<String>,
}

impl RunConfig {
    pub fn from_str_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| PxgError::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_str_toml(&text).map_err(|e| match e {
            PxgError::Config(msg) => PxgError::config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.window.validate()?;
        if self.window.dim() != self.family.dim {
            return Err(PxgError::config(format!(
                "window dimension {} does not match family dimension {}",
                self.window.dim(),
                self.family.dim
            )));
        }
        match self.family.kind {
            FamilyKind::TemplateIsotropic => {
                let t = self.family.template.as_ref().ok_or_else(|| {
                    PxgError::config("template_isotropic family needs a [family.template] block")
                })?;
                match (&t.builtin, &t.grid_file) {
                    (Some(_), Some(_)) => {
                        return Err(PxgError::config(
                            "template: give either builtin or grid_file, not both",
                        ))
                    }
                    (None, None) => {
                        return Err(PxgError::config(
                            "template: needs builtin or grid_file",
                        ))
                    }
                    (Some(_), None) => {
                        if t.normalized_diameter.is_some()
                            || t.ball_ratio.is_some()
                            || t.inscribed_center.is_some()
                        {
                            return Err(PxgError::config(
                                "template: constants are certified for built-ins; remove them",
                            ));
                        }
                    }
                    (None, Some(_)) => {
                        if t.normalized_diameter.is_none()
                            || t.ball_ratio.is_none()
                            || t.inscribed_center.is_none()
                        {
                            return Err(PxgError::config(
                                "template: grid_file needs normalized_diameter, ball_ratio, and inscribed_center",
                            ));
                        }
                    }
                }
            }
            _ => {
                if self.family.template.is_some() {
                    return Err(PxgError::config(format!(
                        "family kind '{}' takes no template block",
                        match self.family.kind {
                            FamilyKind::Gabriel => "gabriel",
                            FamilyKind::RelativeNeighborhood => "relative_neighborhood",
                            FamilyKind::TemplateIsotropic => unreachable!(),
                        }
                    )));
                }
            }
        }
        if let Some(exp) = &self.experiment {
            if exp.t_values.is_empty() {
                return Err(PxgError::config("experiment.t_values must be non-empty"));
            }
            if exp.t_values.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(PxgError::config(
                    "experiment.t_values must be strictly increasing",
                ));
            }
            if exp.replications < 2 {
                return Err(PxgError::config("experiment.replications must be >= 2"));
            }
            if let Some(s) = exp.spacing {
                if !(s.is_finite() && s > 0.0) {
                    return Err(PxgError::config("experiment.spacing must be > 0"));
                }
            }
        }
        if let Some(s) = &self.sample {
            if !(s.t.is_finite() && s.t > 0.0) {
                return Err(PxgError::config("sample.t must be finite and > 0"));
            }
        }
        Ok(())
    }

    /// Builds the region family; grid templates are read from disk and
    /// certified against their declared constants.
    pub fn build_family(&self) -> Result<RegionFamily> {
        let dim = self.family.dim;
        match self.family.kind {
            FamilyKind::Gabriel => RegionFamily::gabriel(dim),
            FamilyKind::RelativeNeighborhood => RegionFamily::relative_neighborhood(dim),
            FamilyKind::TemplateIsotropic => {
                let t = self
                    .family
                    .template
                    .as_ref()
                    .expect("validated: template block present");
                if let Some(b) = t.builtin {
                    return RegionFamily::builtin_template(dim, b);
                }
                let path = t.grid_file.as_ref().expect("validated: grid_file present");
                let grid = io::read_sdf_grid(path)?;
                let mut axis = vec![0.0; dim];
                axis[0] = 1.0;
                let family = RegionFamily::template_isotropic(
                    dim,
                    Template::Grid(grid),
                    axis,
                    TemplateConstants {
                        normalized_diameter: t.normalized_diameter.expect("validated"),
                        ball_ratio: t.ball_ratio.expect("validated"),
                        inscribed_center: t.inscribed_center.clone().expect("validated"),
                    },
                )?;
                if t.certify_samples > 0 {
                    let report =
                        regions::certify_constants(&family, t.certify_samples, t.certify_seed)?;
                    if !report.is_ok() {
                        return Err(PxgError::config(format!(
                            "grid template failed certification against its declared constants: {report:?}"
                        )));
                    }
                }
                Ok(family)
            }
        }
    }

    pub fn build_weight(&self) -> Result<WeightSpec> {
        WeightSpec::power(self.weight.alpha.unwrap_or(1.0))
    }

    /// Builds the Monte Carlo plan from the experiment block.
    pub fn build_plan(&self) -> Result<ExperimentPlan> {
        let exp = self
            .experiment
            .as_ref()
            .ok_or_else(|| PxgError::config("config has no [experiment] block"))?;
        let plan = ExperimentPlan {
            family: self.build_family()?,
            window: self.window.clone(),
            weight: self.build_weight()?,
            process: exp.process.unwrap_or(ProcessKind::Poisson),
            t_values: exp.t_values.clone(),
            replications: exp.replications,
            seed: exp.seed,
        };
        plan.validate()?;
        Ok(plan)
    }

    /// Lattice spacing for stabilization scans: explicit, or diameter/32.
    pub fn spacing(&self) -> f64 {
        self.experiment
            .as_ref()
            .and_then(|e| e.spacing)
            .unwrap_or(self.window.diameter() / 32.0)
    }
}
