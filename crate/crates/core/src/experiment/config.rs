//! Scenario configuration, read from and written to TOML.

use crate::gas::GasParams;
use crate::hypotheses::{Bands, BumpSpec, Geometry};
use crate::identities::{Precision, SampleSpec, DEFAULT_SAMPLES, DEFAULT_TOLERANCE};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("config does not parse: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("config does not serialize: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error("invalid config key `{key}`: {detail}")]
    Invalid { key: &'static str, detail: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    /// Full certification of a blow-up scenario.
    #[default]
    Certify,
    /// Data below the blow-up threshold; passes when the run reaches `T`
    /// without a trigger.
    Control,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GasConfig {
    pub gamma: f64,
    pub k: f64,
    pub m: u32,
}

impl Default for GasConfig {
    fn default() -> Self {
        Self { gamma: 3.0, k: 1.0, m: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BumpConfig {
    pub enabled: bool,
    pub half_width: f64,
    pub order: u32,
    /// Target `β̃₀(r*)`; `-1.1 N` when absent.
    pub target_beta_star: Option<f64>,
    pub baseline_beta_factor: f64,
    pub blend_length: f64,
    pub min_points_per_half_width: f64,
}

impl Default for BumpConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            half_width: 4.5e-4,
            order: 4,
            target_beta_star: None,
            baseline_beta_factor: 1.05,
            blend_length: 4e-4,
            min_points_per_half_width: 8.0,
        }
    }
}

impl BumpConfig {
    pub fn to_spec(&self, finest_dr: Option<f64>) -> BumpSpec {
        BumpSpec {
            enabled: self.enabled,
            half_width: self.half_width,
            order: self.order,
            target_beta_star: self.target_beta_star,
            baseline_beta_factor: self.baseline_beta_factor,
            blend_length: self.blend_length,
            finest_dr,
            min_points_per_half_width: self.min_points_per_half_width,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Primary grid size.
    pub n: usize,
    /// Grid used for the truncation-error estimate.
    pub coarse_n: usize,
    /// Grids for the Riccati residual study, ascending.
    pub refinement: Vec<usize>,
    pub cfl: f64,
    /// Simulated time as a multiple of `T`.
    pub t_end_factor: f64,
    pub t_cap: Option<f64>,
    /// Defaults to `0.2 (r2 - r1) + (u_hi + h_hi) t_end`.
    pub pad_left: Option<f64>,
    /// Defaults to `0.2 (r2 - r1)`.
    pub pad_right: Option<f64>,
    pub stride: Option<usize>,
    pub trigger_factor: f64,
    pub trigger_ceiling: Option<f64>,
    pub max_steps: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            n: 16384,
            coarse_n: 8192,
            refinement: vec![4096, 8192, 16384],
            cfl: 0.4,
            t_end_factor: 1.1,
            t_cap: None,
            pad_left: None,
            pad_right: None,
            stride: None,
            trigger_factor: 20.0,
            trigger_ceiling: None,
            max_steps: 10_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsConfig {
    /// Family-1 paths started evenly inside `(r1, r2)`, in addition to the
    /// one from `r*`.
    pub paths: usize,
    pub trace_rtol: f64,
    pub trace_atol: f64,
    /// A bound counts as violated only when breached by more than this
    /// multiple of its truncation estimate.
    pub lemma_tolerance_factor: f64,
    /// Relative coarse/fine disagreement at which the bound comparison
    /// stops trusting the fine grid.
    pub resolution_rel: f64,
    /// Residual study horizon as a fraction of the finest trigger time.
    pub residual_cutoff: f64,
    pub residual_order_min: f64,
    /// Largest admissible residual on the finest grid, in units of
    /// `N² h_hi^-λ`.
    pub residual_max: f64,
    pub check_samples: usize,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            paths: 5,
            trace_rtol: 1e-8,
            trace_atol: 1e-12,
            lemma_tolerance_factor: 3.0,
            resolution_rel: 0.05,
            residual_cutoff: 0.8,
            residual_order_min: 2.0,
            residual_max: 1e-3,
            check_samples: crate::hypotheses::DEFAULT_CHECK_SAMPLES,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdentityConfig {
    pub enabled: bool,
    pub samples: usize,
    pub tolerance: f64,
    pub precision: Precision,
    pub gamma_max: f64,
    pub gamma_three_fraction: f64,
}

impl Default for IdentityConfig {
    fn default() -> Self {
        let s = SampleSpec::default();
        Self {
            enabled: true,
            samples: DEFAULT_SAMPLES,
            tolerance: DEFAULT_TOLERANCE,
            precision: s.precision,
            gamma_max: s.gamma_max,
            gamma_three_fraction: s.gamma_three_fraction,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StageConfig {
    pub hypotheses: bool,
    pub simulate: bool,
}

impl Default for StageConfig {
    fn default() -> Self {
        Self { hypotheses: true, simulate: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<String>,
    /// Write every simulated field in binary form for report-only reruns.
    pub store_fields: bool,
    /// Write every k-th stored frame to the snapshot table.
    pub snapshot_every: usize,
    pub snapshot_node_stride: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: None, store_fields: false, snapshot_every: 20, snapshot_node_stride: 16 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub kind: ScenarioKind,
    pub seed: u64,
    pub gas: GasConfig,
    pub bands: Bands,
    pub geometry: Geometry,
    pub bump: BumpConfig,
    pub solver: SolverConfig,
    pub diagnostics: DiagnosticsConfig,
    pub identities: IdentityConfig,
    pub stages: StageConfig,
    pub output: OutputConfig,
}

pub const CANONICAL_BANDS: Bands =
    Bands { h_lo: 0.2, h_hi: 1.0, u_lo_mag: 2.5, u_hi_mag: 4.0, alpha_lo: 11.0, alpha_hi: 14.0, beta_bar: 61.0 };

pub const CANONICAL_GEOMETRY: Geometry = Geometry { r0: 1.0, r1: 1.0025, r2: 1.0065, r_star: 1.005 };

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self::canonical()
    }
}

impl ScenarioConfig {
    /// Thin supersonic shell at `γ = 3` whose bump puts `β̃₀(r*)` at `-1.1 N`.
    pub fn canonical() -> Self {
        Self {
            name: "canonical".into(),
            kind: ScenarioKind::Certify,
            seed: 0x5eed,
            gas: GasConfig::default(),
            bands: CANONICAL_BANDS,
            geometry: CANONICAL_GEOMETRY,
            bump: BumpConfig::default(),
            solver: SolverConfig::default(),
            diagnostics: DiagnosticsConfig::default(),
            identities: IdentityConfig::default(),
            stages: StageConfig::default(),
            output: OutputConfig::default(),
        }
    }

    /// The canonical ramp without its bump, run to `T` on the primary grid.
    pub fn control() -> Self {
        let mut c = Self::canonical();
        c.name = "control".into();
        c.kind = ScenarioKind::Control;
        c.bump.enabled = false;
        c
    }

    /// Parses and validates.
    pub fn from_toml_str(s: &str) -> Result<Self, ConfigError> {
        let c = Self::parse_toml_str(s)?;
        c.validate()?;
        Ok(c)
    }

    /// Parses without validating.
    pub fn parse_toml_str(s: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(s)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let s = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Read { path: path.display().to_string(), source })?;
        Self::from_toml_str(&s)
    }

    pub fn to_toml_string(&self) -> Result<String, ConfigError> {
        Ok(toml::to_string(self)?)
    }

    /// SHA-256 of the serialized config, hex encoded. The output directory
    /// and the field-storage switch are left out: neither changes any
    /// number, and stored fields must stay loadable by a run that does not
    /// store them again.
    pub fn hash(&self) -> Result<String, ConfigError> {
        let mut c = self.clone();
        c.output.dir = None;
        c.output.store_fields = false;
        let text = c.to_toml_string()?;
        Ok(hex::encode(Sha256::digest(text.as_bytes())))
    }

    pub fn params(&self) -> Result<GasParams, ConfigError> {
        GasParams::new(self.gas.gamma, self.gas.k, self.gas.m)
            .map_err(|e| ConfigError::Invalid { key: "gas", detail: e.to_string() })
    }

    pub fn sample_spec(&self) -> SampleSpec {
        let i = &self.identities;
        SampleSpec {
            samples: i.samples,
            seed: self.seed,
            gamma_three_fraction: i.gamma_three_fraction,
            gamma_max: i.gamma_max,
            precision: i.precision,
            tolerance: i.tolerance,
        }
    }

    /// Every grid the scenario simulates, ascending and without repeats.
    pub fn grids(&self) -> Vec<usize> {
        let s = &self.solver;
        let mut g = vec![s.n];
        if self.kind == ScenarioKind::Certify {
            g.push(s.coarse_n);
            g.extend(&s.refinement);
        }
        g.sort_unstable();
        g.dedup();
        g
    }

    /// Structural checks. Mathematical hypotheses are left to the
    /// hypothesis gate.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |key, detail: String| Err(ConfigError::Invalid { key, detail });
        self.params()?;
        if self.seed > i64::MAX as u64 {
            return bad("seed", format!("{} exceeds {}", self.seed, i64::MAX));
        }
        let s = &self.solver;
        if s.n < 16 {
            return bad("solver.n", format!("{} < 16", s.n));
        }
        if self.kind == ScenarioKind::Certify {
            if !(s.coarse_n >= 16 && s.coarse_n < s.n) {
                return bad("solver.coarse_n", format!("need 16 <= coarse_n < n, got {}", s.coarse_n));
            }
            if s.refinement.len() < 2 || s.refinement.windows(2).any(|w| w[0] >= w[1]) || s.refinement[0] < 16 {
                return bad("solver.refinement", format!("need at least two ascending grids >= 16, got {:?}", s.refinement));
            }
        }
        if !(s.cfl > 0.0 && s.cfl <= 1.0) {
            return bad("solver.cfl", format!("{} not in (0, 1]", s.cfl));
        }
        if !(s.t_end_factor >= 1.0 && s.t_end_factor.is_finite()) {
            return bad("solver.t_end_factor", format!("{} < 1", s.t_end_factor));
        }
        if !(s.trigger_factor > 1.0) {
            return bad("solver.trigger_factor", format!("{} <= 1", s.trigger_factor));
        }
        for (key, v) in [("solver.pad_left", s.pad_left), ("solver.pad_right", s.pad_right), ("solver.t_cap", s.t_cap)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return bad(key, format!("{v} not positive"));
                }
            }
        }
        if s.stride == Some(0) {
            return bad("solver.stride", "0".into());
        }
        let d = &self.diagnostics;
        if d.paths == 0 {
            return bad("diagnostics.paths", "0".into());
        }
        if !(d.residual_cutoff > 0.0 && d.residual_cutoff <= 1.0) {
            return bad("diagnostics.residual_cutoff", format!("{} not in (0, 1]", d.residual_cutoff));
        }
        for (key, v) in [
            ("diagnostics.trace_rtol", d.trace_rtol),
            ("diagnostics.trace_atol", d.trace_atol),
            ("diagnostics.lemma_tolerance_factor", d.lemma_tolerance_factor),
            ("diagnostics.resolution_rel", d.resolution_rel),
            ("diagnostics.residual_max", d.residual_max),
        ] {
            if !(v > 0.0) {
                return bad(key, format!("{v} not positive"));
            }
        }
        if d.check_samples < 2 {
            return bad("diagnostics.check_samples", format!("{} < 2", d.check_samples));
        }
        if self.identities.enabled && self.identities.samples == 0 {
            return bad("identities.samples", "0".into());
        }
        if self.stages.simulate && !self.stages.hypotheses {
            return bad("stages.simulate", "simulation needs the hypothesis stage".into());
        }
        if self.output.snapshot_every == 0 || self.output.snapshot_node_stride == 0 {
            return bad("output", "snapshot strides must be positive".into());
        }
        if !(self.bump.order <= 10) {
            return bad("bump.order", format!("{} > 10", self.bump.order));
        }
        Ok(())
    }
}
