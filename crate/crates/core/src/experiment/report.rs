//! Structured records of a scenario run.

use super::config::ScenarioKind;
use crate::characteristics::{Binding, Termination};
use crate::hypotheses::{CheckReport, Condition, HypothesisSet};
use crate::identities::IdentityReport;
use crate::solver::StopReason;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Identities,
    Hypotheses,
    Simulate,
    Certify,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityGate {
    pub reports: Vec<IdentityReport>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintRecord {
    pub condition: Condition,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisGate {
    pub constants: Option<HypothesisSet>,
    /// Set when the constants or the generator reject the inputs.
    pub rejected: Option<ConstraintRecord>,
    pub check: Option<CheckReport>,
    /// A-priori lower bound on the boundary intersection time used to cap
    /// `T` before any simulation.
    pub t_m_lower_bound: f64,
    /// Conditions not required for this scenario kind.
    pub waived: Vec<Condition>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRun {
    pub n: usize,
    pub dr: f64,
    pub stop_reason: StopReason,
    pub stop_time: f64,
    pub steps: usize,
    pub stride: usize,
    pub frames: usize,
    pub max_store_interval: f64,
    pub initial_max_gradient: f64,
    pub ceiling: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub r_min: f64,
    pub r_max: f64,
    pub t_end: f64,
    pub runs: Vec<GridRun>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmegaSummary {
    pub t_tilde: f64,
    pub t_m: Option<f64>,
    pub t_m_lower_bound: f64,
    pub t: f64,
    pub extent: f64,
    pub binding: Binding,
    pub truncated: Option<Termination>,
    /// False when the measured `t_m` falls below `T`.
    pub t_within_t_m: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LemmaBound {
    Velocity,
    SoundSpeed,
    OutgoingSpeed,
    AlphaTilde,
    BetaTilde,
}

impl LemmaBound {
    pub const ALL: [LemmaBound; 5] = [
        LemmaBound::Velocity,
        LemmaBound::SoundSpeed,
        LemmaBound::OutgoingSpeed,
        LemmaBound::AlphaTilde,
        LemmaBound::BetaTilde,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            LemmaBound::Velocity => "u",
            LemmaBound::SoundSpeed => "h",
            LemmaBound::OutgoingSpeed => "c2",
            LemmaBound::AlphaTilde => "alpha_t",
            LemmaBound::BetaTilde => "beta_t",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaRow {
    pub bound: LemmaBound,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub min_value: f64,
    pub max_value: f64,
    /// Smallest slack to either bound over the checked points.
    pub margin: f64,
    pub worst_r: f64,
    pub worst_t: f64,
    /// Largest coarse/fine disagreement of the quantity.
    pub estimate: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaTable {
    pub certified_time: f64,
    pub frames: usize,
    pub points: usize,
    /// Points also covered by the coarse field.
    pub compared_points: usize,
    pub tolerance_factor: f64,
    pub rows: Vec<LemmaRow>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundComparison {
    /// `β̃₀(r*)` of the analytic profile.
    pub beta0_star_profile: f64,
    /// `β̃₀(r*)` of the simulated field, which anchors the curve.
    pub beta0_star: f64,
    pub t_b: f64,
    pub asymptote_within_window: bool,
    pub resolution_limit: f64,
    pub points: usize,
    pub checked_points: usize,
    /// Smallest `margin + tolerance` over the checked points.
    pub min_slack: f64,
    pub min_margin: f64,
    /// First checked time with `observed < bound` before tolerances.
    pub first_negative_margin_t: Option<f64>,
    pub max_tolerance: f64,
    pub worst_t: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremRecord {
    pub n_rate: f64,
    pub n_terms: [f64; 3],
    pub n_binding: usize,
    pub window: f64,
    pub t: f64,
    pub trigger_time: Option<f64>,
    pub store_interval: f64,
    /// `window + store_interval - trigger_time`.
    pub trigger_slack: Option<f64>,
    pub trigger_within_window: bool,
    pub bound: BoundComparison,
    pub window_within_t: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathResidual {
    pub start_r: f64,
    pub samples: usize,
    pub termination: Termination,
    /// In units of `N² h_hi^-λ`.
    pub max_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualGrid {
    pub n: usize,
    pub cutoff: f64,
    pub paths: Vec<PathResidual>,
    pub max_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceAppendix {
    pub natural_unit: f64,
    pub cutoff: f64,
    pub grids: Vec<ResidualGrid>,
    /// Observed order between successive grids.
    pub orders: Vec<f64>,
    pub min_order: f64,
    pub finest_max: f64,
    pub paths_used: usize,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlRecord {
    pub t: f64,
    pub stop_reason: StopReason,
    pub stop_time: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub scenario: String,
    pub kind: ScenarioKind,
    pub config_hash: String,
    pub seed: u64,
    pub stages_run: Vec<Stage>,
    /// First stage whose gate failed.
    pub halted_at: Option<Stage>,
    pub identities: Option<IdentityGate>,
    pub hypotheses: Option<HypothesisGate>,
    pub simulation: Option<SimulationSummary>,
    pub omega: Option<OmegaSummary>,
    pub lemma: Option<LemmaTable>,
    pub theorem: Option<TheoremRecord>,
    pub convergence: Option<ConvergenceAppendix>,
    pub control: Option<ControlRecord>,
    pub pass: bool,
}

impl CertificationReport {
    pub fn new(scenario: String, kind: ScenarioKind, config_hash: String, seed: u64) -> Self {
        Self {
            scenario,
            kind,
            config_hash,
            seed,
            stages_run: Vec::new(),
            halted_at: None,
            identities: None,
            hypotheses: None,
            simulation: None,
            omega: None,
            lemma: None,
            theorem: None,
            convergence: None,
            control: None,
            pass: false,
        }
    }
}
