//! Run configuration, read from TOML. Unknown keys are rejected.

use crate::domain::{estimate_c0_eta0, DomainSpec};
use crate::flow::FlowSettings;
use crate::maps::BoundaryMap;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed configuration: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Solve,
    CheckHypothesis,
    DensityOracle,
    Exterior,
}

impl Mode {
    pub fn label(self) -> &'static str {
        match self {
            Mode::Solve => "solve",
            Mode::CheckHypothesis => "check",
            Mode::DensityOracle => "density",
            Mode::Exterior => "exterior",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowConfig {
    pub cfl: f64,
    pub tol_residual: f64,
    pub max_steps: usize,
    pub monitor_every: usize,
    pub blowup_guard: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        let d = FlowSettings::default();
        Self {
            cfl: d.cfl,
            tol_residual: d.tol_residual,
            max_steps: d.max_steps,
            monitor_every: d.monitor_every,
            blowup_guard: d.blowup_guard,
        }
    }
}

impl FlowConfig {
    pub fn settings(&self) -> FlowSettings {
        FlowSettings {
            cfl: self.cfl,
            tol_residual: self.tol_residual,
            max_steps: self.max_steps,
            monitor_every: self.monitor_every,
            blowup_guard: self.blowup_guard,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HypothesisConfig {
    /// Band width; chosen by scanning `(0, δ₀)` when absent.
    pub delta: Option<f64>,
    /// Margin for condition B.
    pub c: f64,
    /// Evaluate the barrier `S` on the band at every monitor.
    pub barrier: bool,
    /// Use the `4n(1+μ)` constant in the boundary gradient bound.
    pub ball_sharp_constant: bool,
}

impl Default for HypothesisConfig {
    fn default() -> Self {
        Self {
            delta: None,
            c: 0.5,
            barrier: true,
            ball_sharp_constant: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExteriorConfig {
    /// Truncation radii `r₁ < … < r_K`.
    pub radii: Vec<f64>,
    /// Probe sphere radii for the decay table.
    pub probes: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityCase {
    Plane,
    OffsetPlane,
    HalfPlane,
    SphereCap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityConfig {
    pub case: DensityCase,
    #[serde(default = "default_time_gap")]
    pub time_gap: f64,
    /// Fibre offset of the plane for `offset_plane`.
    #[serde(default)]
    pub offset: f64,
    #[serde(default = "default_density_tol")]
    pub tolerance: f64,
}

fn default_time_gap() -> f64 {
    0.004
}

fn default_density_tol() -> f64 {
    1e-3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    /// Target grid spacing.
    pub h: f64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub domain: Option<DomainSpec>,
    #[serde(default)]
    pub boundary: Option<BoundaryMap>,
    #[serde(default)]
    pub flow: FlowConfig,
    #[serde(default)]
    pub hypothesis: HypothesisConfig,
    #[serde(default)]
    pub exterior: Option<ExteriorConfig>,
    #[serde(default)]
    pub density: Option<DensityConfig>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<RunConfig, ConfigError> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        RunConfig::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serialises")
    }

    pub fn domain(&self) -> Result<&DomainSpec, ConfigError> {
        self.domain
            .as_ref()
            .ok_or_else(|| ConfigError::Invalid("missing [domain]".into()))
    }

    pub fn boundary(&self) -> Result<&BoundaryMap, ConfigError> {
        self.boundary
            .as_ref()
            .ok_or_else(|| ConfigError::Invalid("missing [boundary]".into()))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |s: String| Err(ConfigError::Invalid(s));
        if !(self.h > 0.0 && self.h.is_finite()) {
            return bad(format!("h must be positive, got {}", self.h));
        }
        let f = &self.flow;
        if !(f.cfl > 0.0 && f.cfl < 1.0) {
            return bad("flow.cfl must lie in (0, 1)".into());
        }
        if !(f.tol_residual > 0.0) {
            return bad("flow.tol_residual must be positive".into());
        }
        if f.monitor_every == 0 {
            return bad("flow.monitor_every must be at least 1".into());
        }
        if let Some(d) = self.hypothesis.delta {
            if !(d > 0.0) {
                return bad("hypothesis.delta must be positive".into());
            }
        }
        if self.mode == Mode::DensityOracle {
            let Some(d) = &self.density else {
                return bad("density mode needs [density]".into());
            };
            if !(d.time_gap > 0.0) {
                return bad("density.time_gap must be positive".into());
            }
            return Ok(());
        }
        let domain = self.domain()?;
        domain
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.boundary()?
            .validate(domain.dim())
            .map_err(ConfigError::Invalid)?;
        if self.mode == Mode::Exterior {
            let DomainSpec::Exterior { inner, .. } = domain else {
                return bad("exterior mode needs an exterior domain".into());
            };
            let Some(ext) = &self.exterior else {
                return bad("exterior mode needs [exterior]".into());
            };
            if !(self.hypothesis.c > 0.0 && self.hypothesis.c < 1.0) {
                return bad("hypothesis.c must lie in (0, 1)".into());
            }
            if ext.radii.is_empty() || ext.radii.windows(2).any(|w| !(w[1] > w[0])) {
                return bad("exterior.radii must be non-empty and strictly increasing".into());
            }
            let r0 = r0_threshold(domain, *inner);
            if !(ext.radii[0] > r0) {
                return bad(format!(
                    "first radius {} must exceed diam + 2 eta0 + d0 = {r0}",
                    ext.radii[0]
                ));
            }
            let rk = *ext.radii.last().unwrap();
            if ext.probes.is_empty() || ext.probes.iter().any(|&p| !(p > *inner && p < rk)) {
                return bad("exterior.probes must lie strictly between the excluded ball and the largest radius".into());
            }
        }
        Ok(())
    }
}

/// `diam(∂E) + 2η₀ + d₀` for an exterior domain, with the origin of the
/// truncation balls at the excluded ball's centre so that `d₀` equals its
/// radius.
pub fn r0_threshold(domain: &DomainSpec, inner: f64) -> f64 {
    let eta0 = estimate_c0_eta0(domain).eta0;
    2.0 * inner + 2.0 * eta0 + inner
}

#[cfg(test)]
mod tests {
    use super::*;

    const SOLVE: &str = r#"
mode = "solve"
h = 0.0625

[domain]
kind = "ball"
center = [0.0, 0.0]
radius = 1.0

[boundary]
family = "linear"
offset = [0.0]
matrix = [[0.02, 0.0]]
"#;

    #[test]
    fn parses_and_round_trips() {
        let cfg = RunConfig::from_toml(SOLVE).unwrap();
        assert_eq!(cfg.mode, Mode::Solve);
        assert_eq!(cfg.flow.cfl, 0.9);
        let again = RunConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = format!("{SOLVE}\n[flow]\ncfl = 0.5\nspeed = 3\n");
        assert!(matches!(RunConfig::from_toml(&text), Err(ConfigError::Parse(_))));
        let text = SOLVE.replace("radius = 1.0", "radius = 1.0\nwobble = 2");
        assert!(matches!(RunConfig::from_toml(&text), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn exterior_radius_condition() {
        let text = r#"
mode = "exterior"
h = 0.1

[domain]
kind = "exterior"
center = [0.0, 0.0]
inner = 1.0
truncation = 6.0

[boundary]
family = "constant"
value = [0.0]

[exterior]
radii = [3.5, 5.0]
probes = [2.0]
"#;
        let err = RunConfig::from_toml(text).unwrap_err();
        assert!(err.to_string().contains("must exceed"));
        let ok = text.replace("[3.5, 5.0]", "[4.5, 5.0]");
        RunConfig::from_toml(&ok).unwrap();
    }
}
