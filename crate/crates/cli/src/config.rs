//! Run configuration: JSON file values, command-line overrides and the
//! per-command defaults, merged in that order of precedence:
//! flag > config file > default.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use bouncer::basis::Bouncer;
use bouncer::propagator::{GridSpec, Stencil};
use bouncer::qfi::QfiModel;
use bouncer::units::{make_constants, ConstantOverrides, PhysicalConstants};
use serde::{Deserialize, Serialize};

/// Input rejected before any computation. Maps to exit code 2.
#[derive(Debug)]
pub struct InvalidInput(pub String);

impl fmt::Display for InvalidInput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InvalidInput {}

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    InvalidInput(msg.into()).into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum StencilChoice {
    Standard,
    Compact,
}

impl From<StencilChoice> for Stencil {
    fn from(s: StencilChoice) -> Self {
        match s {
            StencilChoice::Standard => Stencil::Standard,
            StencilChoice::Compact => Stencil::Compact,
        }
    }
}

/// Flat JSON config file. Every key carries its unit; unknown keys are errors.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub mass_kg: Option<f64>,
    pub g_m_per_s2: Option<f64>,
    pub hbar_j_s: Option<f64>,
    pub c_m_per_s: Option<f64>,
    pub mu_n_j_per_t: Option<f64>,
    pub field_tesla: Option<f64>,
    pub fields_tesla: Option<Vec<f64>>,
    pub level: Option<usize>,
    pub levels: Option<Vec<usize>>,
    pub time_max_s: Option<f64>,
    pub samples: Option<usize>,
    pub grid_z_max_m: Option<f64>,
    pub grid_points: Option<usize>,
    pub grid_dt_s: Option<f64>,
    pub grid_stencil: Option<StencilChoice>,
    pub epsilon: Option<f64>,
    pub sigma_m: Option<f64>,
    pub models: Option<Vec<String>>,
    pub delta_override: Option<f64>,
    pub tolerance_scale: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| invalid(format!("config {}: {e}", path.display())))
    }

    /// Fill every unset key of `self` from `lower`.
    pub fn or(self, lower: FileConfig) -> FileConfig {
        FileConfig {
            mass_kg: self.mass_kg.or(lower.mass_kg),
            g_m_per_s2: self.g_m_per_s2.or(lower.g_m_per_s2),
            hbar_j_s: self.hbar_j_s.or(lower.hbar_j_s),
            c_m_per_s: self.c_m_per_s.or(lower.c_m_per_s),
            mu_n_j_per_t: self.mu_n_j_per_t.or(lower.mu_n_j_per_t),
            field_tesla: self.field_tesla.or(lower.field_tesla),
            fields_tesla: self.fields_tesla.or(lower.fields_tesla),
            level: self.level.or(lower.level),
            levels: self.levels.or(lower.levels),
            time_max_s: self.time_max_s.or(lower.time_max_s),
            samples: self.samples.or(lower.samples),
            grid_z_max_m: self.grid_z_max_m.or(lower.grid_z_max_m),
            grid_points: self.grid_points.or(lower.grid_points),
            grid_dt_s: self.grid_dt_s.or(lower.grid_dt_s),
            grid_stencil: self.grid_stencil.or(lower.grid_stencil),
            epsilon: self.epsilon.or(lower.epsilon),
            sigma_m: self.sigma_m.or(lower.sigma_m),
            models: self.models.or(lower.models),
            delta_override: self.delta_override.or(lower.delta_override),
            tolerance_scale: self.tolerance_scale.or(lower.tolerance_scale),
            out: self.out.or(lower.out),
            format: self.format.or(lower.format),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Spectrum,
    Table1,
    Interference,
    Qfi,
    Freefall,
    Check,
}

impl Command {
    fn defaults(self) -> FileConfig {
        let mut d = FileConfig {
            field_tesla: Some(45.0),
            fields_tesla: Some(vec![45.0, 1200.0, 1e7]),
            level: Some(1),
            levels: Some(vec![1, 2, 3, 4]),
            epsilon: Some(1e-6),
            sigma_m: Some(1e-6),
            tolerance_scale: Some(1.0),
            format: Some(Format::Csv),
            ..FileConfig::default()
        };
        let (t_max, samples) = match self {
            Command::Interference => (2e-9, 201),
            Command::Qfi => (3e-3, 31),
            Command::Freefall => (0.1, 101),
            _ => (1e-3, 11),
        };
        d.time_max_s = Some(t_max);
        d.samples = Some(samples);
        d.models = Some(
            [QfiModel::Numeric, QfiModel::ShortTime, QfiModel::Semiclassical, QfiModel::FullAnalytic]
                .iter()
                .map(|m| m.label().to_string())
                .collect(),
        );
        d
    }
}

/// Fully resolved and validated configuration. Its JSON form, which omits
/// the output path, is what the output header hashes.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub constants: PhysicalConstants,
    pub field_tesla: f64,
    pub fields_tesla: Vec<f64>,
    pub level: usize,
    pub levels: Vec<usize>,
    pub time_max_s: f64,
    pub samples: usize,
    pub grid: GridSpec,
    pub epsilon: f64,
    pub sigma_m: f64,
    pub models: Vec<QfiModel>,
    pub delta_override: Option<f64>,
    pub tolerance_scale: f64,
    pub format: Format,
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(invalid(format!("{name} must be finite and positive, got {v}")))
    }
}

impl RunConfig {
    /// Merge `flags` over `file` over the command defaults and validate.
    pub fn resolve(command: Command, flags: FileConfig, file: FileConfig) -> Result<Self> {
        let c = flags.or(file).or(command.defaults());
        let unwrap = |name: &str| invalid(format!("missing value for {name}"));

        let overrides = ConstantOverrides {
            m: c.mass_kg,
            g: c.g_m_per_s2,
            hbar: c.hbar_j_s,
            c: c.c_m_per_s,
            mu_n: c.mu_n_j_per_t,
        };
        let constants = make_constants(&overrides).map_err(|e| invalid(format!("constants: {e}")))?;

        let field_tesla = c.field_tesla.ok_or_else(|| unwrap("field_tesla"))?;
        if !field_tesla.is_finite() || field_tesla < 0.0 {
            return Err(invalid(format!("field_tesla must be finite and non-negative, got {field_tesla}")));
        }
        let fields_tesla = c.fields_tesla.ok_or_else(|| unwrap("fields_tesla"))?;
        if fields_tesla.is_empty() || fields_tesla.iter().any(|b| !b.is_finite() || *b < 0.0) {
            return Err(invalid("fields_tesla must be a non-empty list of finite, non-negative values"));
        }
        let level = c.level.ok_or_else(|| unwrap("level"))?;
        let levels = c.levels.ok_or_else(|| unwrap("levels"))?;
        if level == 0 || levels.is_empty() || levels.contains(&0) {
            return Err(invalid("levels are numbered from 1 and the list must be non-empty"));
        }
        let time_max_s = positive("time_max_s", c.time_max_s.ok_or_else(|| unwrap("time_max_s"))?)?;
        let samples = c.samples.ok_or_else(|| unwrap("samples"))?;
        if samples < 2 {
            return Err(invalid(format!("samples must be at least 2, got {samples}")));
        }

        let d = GridSpec::default();
        let grid = GridSpec {
            z_max: c.grid_z_max_m.unwrap_or(d.z_max),
            points: c.grid_points.unwrap_or(d.points),
            dt: c.grid_dt_s.unwrap_or(d.dt),
            stencil: c.grid_stencil.map(Stencil::from).unwrap_or(d.stencil),
        };
        grid.validate().map_err(|e| invalid(format!("grid: {e}")))?;

        let epsilon = c.epsilon.ok_or_else(|| unwrap("epsilon"))?;
        if !(epsilon > 0.0 && epsilon < 0.1) {
            return Err(invalid(format!("epsilon must lie in (0, 0.1), got {epsilon}")));
        }
        let sigma_m = positive("sigma_m", c.sigma_m.ok_or_else(|| unwrap("sigma_m"))?)?;
        let models = c
            .models
            .ok_or_else(|| unwrap("models"))?
            .iter()
            .map(|s| QfiModel::parse(s).ok_or_else(|| invalid(format!("unknown QFI model '{s}'"))))
            .collect::<Result<Vec<_>>>()?;
        if models.is_empty() {
            return Err(invalid("models must not be empty"));
        }
        if let Some(d) = c.delta_override {
            if !(d > 0.0 && d < 1.0) {
                return Err(invalid(format!("delta_override must lie in (0, 1), got {d}")));
            }
        }
        let tolerance_scale = positive("tolerance_scale", c.tolerance_scale.ok_or_else(|| unwrap("tolerance_scale"))?)?;

        Ok(RunConfig {
            command,
            constants,
            field_tesla,
            fields_tesla,
            level,
            levels,
            time_max_s,
            samples,
            grid,
            epsilon,
            sigma_m,
            models,
            delta_override: c.delta_override,
            tolerance_scale,
            format: c.format.unwrap_or_default(),
            out: c.out,
        })
    }

    pub fn system(&self) -> Result<Bouncer> {
        Bouncer::new(self.constants).map_err(|e| invalid(format!("constants: {e}")))
    }

    /// Evenly spaced sample times on [0, time_max_s].
    pub fn times(&self) -> Vec<f64> {
        let last = (self.samples - 1) as f64;
        (0..self.samples).map(|i| self.time_max_s * i as f64 / last).collect()
    }

    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}
