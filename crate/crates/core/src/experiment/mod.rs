//! End-to-end scenarios: identity gate, initial data, simulation and
//! certification of the invariant bounds and the blow-up time.
//!
//! Stages run in a fixed order and each consumes only validated output of
//! its predecessor. A falsified claim yields a failing report; only
//! infrastructure problems surface as errors.

pub mod config;
pub mod output;
pub mod report;
pub mod stationary;
pub mod store;

use crate::characteristics::{
    build_omega_t, path_derivative_residual, trace_path, trace_path_in, CharPath, Family, OmegaT, Quantity,
    TraceError, TraceOptions,
};
use crate::gas::{alpha_beta, GasParams, KernelError, PointState};
use crate::hypotheses::{
    blowup_bound_curve, bound_at, check_initial_data, compute_constants, generate_initial_data, Condition,
    GeneratedProfile, HypothesisError, HypothesisSet, NONSTRICT_RTOL,
};
use crate::identities;
use crate::solver::{build_initial_field, simulate, Grid, SimControls, Simulation, SolverError, StopReason};
use config::{ConfigError, ScenarioConfig, ScenarioKind};
use report::*;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("stage `{stage:?}` failed: {detail}")]
    Stage { stage: Stage, detail: String },
    #[error("i/o failure on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("stored fields unusable: {0}")]
    Store(String),
}

pub type Result<T> = std::result::Result<T, ExperimentError>;

fn stage_err(stage: Stage) -> impl Fn(String) -> ExperimentError {
    move |detail| ExperimentError::Stage { stage, detail }
}

impl From<SolverError> for ExperimentError {
    fn from(e: SolverError) -> Self {
        ExperimentError::Stage { stage: Stage::Simulate, detail: e.to_string() }
    }
}

impl From<TraceError> for ExperimentError {
    fn from(e: TraceError) -> Self {
        ExperimentError::Stage { stage: Stage::Certify, detail: e.to_string() }
    }
}

impl From<KernelError> for ExperimentError {
    fn from(e: KernelError) -> Self {
        ExperimentError::Stage { stage: Stage::Certify, detail: e.to_string() }
    }
}

/// Where the simulated fields come from.
#[derive(Debug, Clone, Copy)]
pub enum FieldSource<'a> {
    Simulate,
    /// Fields written by an earlier run with `output.store_fields`.
    Stored(&'a Path),
}

/// Spatial extent and simulated time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub r_min: f64,
    pub r_max: f64,
    pub t_end: f64,
}

impl Domain {
    pub fn grid(&self, n: usize) -> std::result::Result<Grid, SolverError> {
        Grid::new(self.r_min, self.r_max, n)
    }
}

/// Both families move toward the axis, so the left pad absorbs the inward
/// motion of the region while the right pad only separates the data from
/// the held inflow nodes.
pub fn domain(cfg: &ScenarioConfig, hs: &HypothesisSet) -> Domain {
    let g = &hs.geometry;
    let b = &hs.bands;
    let t_end = match cfg.kind {
        ScenarioKind::Certify => hs.t * cfg.solver.t_end_factor,
        ScenarioKind::Control => hs.t,
    };
    let len = g.width();
    let left = cfg.solver.pad_left.unwrap_or(0.2 * len + (b.u_hi_mag + b.h_hi) * t_end);
    let right = cfg.solver.pad_right.unwrap_or(0.2 * len);
    Domain { r_min: g.r1 - left, r_max: g.r2 + right, t_end }
}

/// One row of the bound-versus-observed comparison along the path from
/// `(r*, 0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundRow {
    pub t: f64,
    pub r: f64,
    pub bound: f64,
    pub observed: f64,
    pub margin: f64,
    pub richardson: f64,
    pub interpolation: f64,
    pub tolerance: f64,
    pub checked: bool,
}

pub struct Artifacts {
    pub params: GasParams,
    pub constants: HypothesisSet,
    pub profile: GeneratedProfile,
    pub domain: Domain,
    /// Ascending in grid size.
    pub runs: Vec<(usize, Simulation)>,
    pub primary: usize,
    pub omega: Option<OmegaT>,
    /// Family-1 paths on the primary grid, the one from `r*` first.
    pub paths: Vec<CharPath>,
    pub bound_rows: Vec<BoundRow>,
}

impl Artifacts {
    pub fn run(&self, n: usize) -> Option<&Simulation> {
        self.runs.iter().find(|(k, _)| *k == n).map(|(_, s)| s)
    }

    pub fn primary_run(&self) -> &Simulation {
        self.run(self.primary).expect("primary grid is always simulated")
    }
}

pub struct ScenarioRun {
    pub report: CertificationReport,
    pub artifacts: Option<Artifacts>,
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioRun> {
    run_scenario_from(cfg, FieldSource::Simulate)
}

pub fn run_scenario_from(cfg: &ScenarioConfig, source: FieldSource<'_>) -> Result<ScenarioRun> {
    cfg.validate()?;
    let params = cfg.params()?;
    let mut report = CertificationReport::new(cfg.name.clone(), cfg.kind, cfg.hash()?, cfg.seed);
    let done = |mut report: CertificationReport, artifacts| {
        report.pass = report.halted_at.is_none() && report.pass;
        Ok(ScenarioRun { report, artifacts })
    };

    report.pass = true;
    if cfg.identities.enabled {
        report.stages_run.push(Stage::Identities);
        let reports = identities::verify_all(&cfg.sample_spec());
        let pass = reports.iter().all(|r| r.pass);
        report.identities = Some(IdentityGate { reports, pass });
        if !pass {
            report.halted_at = Some(Stage::Identities);
            return done(report, None);
        }
    }
    if !cfg.stages.hypotheses {
        return done(report, None);
    }

    report.stages_run.push(Stage::Hypotheses);
    let (gate, accepted) = hypothesis_gate(cfg, &params);
    let pass = gate.pass;
    report.hypotheses = Some(gate);
    let Some((hs, profile)) = accepted.filter(|_| pass) else {
        report.halted_at = Some(Stage::Hypotheses);
        return done(report, None);
    };
    if !cfg.stages.simulate {
        return done(report, None);
    }

    report.stages_run.push(Stage::Simulate);
    let dom = domain(cfg, &hs);
    let runs = match source {
        FieldSource::Simulate => simulate_all(cfg, &params, &profile, &dom)?,
        FieldSource::Stored(dir) => store::load_runs(dir, cfg, &params, &dom)?,
    };
    report.simulation = Some(SimulationSummary {
        r_min: dom.r_min,
        r_max: dom.r_max,
        t_end: dom.t_end,
        runs: runs.iter().map(|(n, s)| grid_run(*n, s)).collect(),
    });
    let mut artifacts = Artifacts {
        params,
        constants: hs,
        profile,
        domain: dom,
        runs,
        primary: cfg.solver.n,
        omega: None,
        paths: Vec::new(),
        bound_rows: Vec::new(),
    };

    match cfg.kind {
        ScenarioKind::Control => {
            let sim = artifacts.primary_run();
            let pass = sim.stop_reason == StopReason::Completed && sim.stop_time == dom.t_end;
            report.control =
                Some(ControlRecord { t: hs.t, stop_reason: sim.stop_reason.clone(), stop_time: sim.stop_time, pass });
            report.pass = pass;
        }
        ScenarioKind::Certify => {
            report.stages_run.push(Stage::Certify);
            let beta0_profile = report
                .hypotheses
                .as_ref()
                .and_then(|g| g.check.as_ref())
                .map(|c| c.beta0_star)
                .unwrap_or(f64::NAN);
            certify(cfg, &mut artifacts, &mut report, beta0_profile)?;
        }
    }
    done(report, Some(artifacts))
}

fn rejected(condition: Condition, detail: String) -> Option<ConstraintRecord> {
    Some(ConstraintRecord { condition, detail })
}

fn hypothesis_rejection(e: HypothesisError) -> ConstraintRecord {
    match e {
        HypothesisError::ConstraintViolation { condition, detail } | HypothesisError::Infeasible { condition, detail } => {
            ConstraintRecord { condition, detail }
        }
        HypothesisError::GeneratorCheckFailed(list) => ConstraintRecord {
            condition: list.first().copied().unwrap_or(Condition::Sonic),
            detail: format!("generated data fails {list:?}"),
        },
        HypothesisError::Profile { r, detail } => {
            ConstraintRecord { condition: Condition::Sonic, detail: format!("r = {r}: {detail}") }
        }
        HypothesisError::NonNegativeBeta(b) => {
            ConstraintRecord { condition: Condition::BlowupThreshold, detail: format!("beta0_star = {b}") }
        }
    }
}

/// Derived constants, generated data and its check. `T` is capped by the
/// a-priori lower bound on `t_m`, so the measured intersection can only
/// confirm it.
pub fn hypothesis_gate(cfg: &ScenarioConfig, params: &GasParams) -> (HypothesisGate, Option<(HypothesisSet, GeneratedProfile)>) {
    let mut gate = HypothesisGate {
        constants: None,
        rejected: None,
        check: None,
        t_m_lower_bound: f64::NAN,
        waived: Vec::new(),
        pass: false,
    };
    let cap = cfg.solver.t_cap;
    let first = match compute_constants(&cfg.bands, &cfg.geometry, params, None, cap) {
        Ok(h) => h,
        Err(e) => {
            gate.rejected = Some(hypothesis_rejection(e));
            return (gate, None);
        }
    };
    let lb = first.t_m_lower_bound();
    gate.t_m_lower_bound = lb;
    let hs = match compute_constants(&cfg.bands, &cfg.geometry, params, lb.is_finite().then_some(lb), cap) {
        Ok(h) => h,
        Err(e) => {
            gate.rejected = Some(hypothesis_rejection(e));
            return (gate, None);
        }
    };
    gate.constants = Some(hs);
    let dom = domain(cfg, &hs);
    let finest = cfg.grids().last().copied().unwrap_or(cfg.solver.n);
    let finest_dr = (dom.r_max - dom.r_min) / (finest - 1) as f64;
    let profile = match generate_initial_data(&hs, &cfg.bump.to_spec(Some(finest_dr)), params) {
        Ok(p) => p,
        Err(e) => {
            gate.rejected = Some(hypothesis_rejection(e));
            return (gate, None);
        }
    };
    let check = match check_initial_data(&profile, &hs, params, cfg.diagnostics.check_samples) {
        Ok(c) => c,
        Err(e) => {
            gate.rejected = Some(hypothesis_rejection(e));
            return (gate, None);
        }
    };
    if cfg.kind == ScenarioKind::Control {
        gate.waived.push(Condition::BlowupThreshold);
    }
    gate.pass = check.records.iter().all(|r| r.satisfied || gate.waived.contains(&r.condition));
    if !gate.pass {
        let first_fail = check.records.iter().find(|r| !r.satisfied && !gate.waived.contains(&r.condition));
        gate.rejected = first_fail.and_then(|r| rejected(r.condition, format!("margin {}", r.margin)));
    }
    gate.check = Some(check);
    (gate, Some((hs, profile)))
}

pub fn sim_controls(cfg: &ScenarioConfig, dom: &Domain) -> SimControls {
    let s = &cfg.solver;
    SimControls {
        cfl: s.cfl,
        t_end: dom.t_end,
        stride: s.stride,
        trigger_factor: s.trigger_factor,
        trigger_ceiling: s.trigger_ceiling,
        max_steps: s.max_steps,
        ..Default::default()
    }
}

pub fn simulate_all(
    cfg: &ScenarioConfig,
    params: &GasParams,
    profile: &GeneratedProfile,
    dom: &Domain,
) -> Result<Vec<(usize, Simulation)>> {
    cfg.grids().into_iter().map(|n| Ok((n, simulate_grid(cfg, params, profile, dom, n)?))).collect()
}

pub fn simulate_grid(
    cfg: &ScenarioConfig,
    params: &GasParams,
    profile: &GeneratedProfile,
    dom: &Domain,
    n: usize,
) -> Result<Simulation> {
    let grid = dom.grid(n)?;
    let ic = build_initial_field(profile, &grid)?;
    Ok(simulate(&ic, &grid, params, &sim_controls(cfg, dom))?)
}

pub fn omega_summary(omega: &OmegaT, hs: &HypothesisSet) -> OmegaSummary {
    OmegaSummary {
        t_tilde: hs.t_tilde,
        t_m: omega.t_m,
        t_m_lower_bound: hs.t_m_lower_bound(),
        t: hs.t,
        extent: omega.extent,
        binding: omega.binding,
        truncated: omega.truncated,
        t_within_t_m: omega.t_m.map_or(true, |tm| hs.t <= tm * (1.0 + NONSTRICT_RTOL)),
    }
}

pub fn grid_run(n: usize, s: &Simulation) -> GridRun {
    GridRun {
        n,
        dr: s.field.grid.dr,
        stop_reason: s.stop_reason.clone(),
        stop_time: s.stop_time,
        steps: s.steps,
        stride: s.stride,
        frames: s.field.frames().len(),
        max_store_interval: s.field.max_store_interval(),
        initial_max_gradient: s.initial_max_gradient,
        ceiling: s.ceiling,
    }
}

pub fn trigger_time(s: &Simulation) -> Option<f64> {
    matches!(s.stop_reason, StopReason::BlowUpTrigger { .. }).then_some(s.stop_time)
}

pub fn trace_options(cfg: &ScenarioConfig) -> TraceOptions {
    TraceOptions { rtol: cfg.diagnostics.trace_rtol, atol: cfg.diagnostics.trace_atol, ..Default::default() }
}

/// Start radii of the family-1 diagnostic paths: `r*` first, then evenly
/// spaced interior points of `(r1, r2)`.
pub fn path_starts(cfg: &ScenarioConfig) -> Vec<f64> {
    let g = &cfg.geometry;
    let k = cfg.diagnostics.paths;
    let mut v = vec![g.r_star];
    for j in 0..k {
        let r = g.r1 + g.width() * (j + 1) as f64 / (k + 1) as f64;
        if r != g.r_star {
            v.push(r);
        }
    }
    v
}

fn certify(cfg: &ScenarioConfig, art: &mut Artifacts, report: &mut CertificationReport, beta0_profile: f64) -> Result<()> {
    let params = art.params;
    let hs = art.constants;
    let g = hs.geometry;
    let opts = trace_options(cfg);
    let fine = art.primary_run();
    let coarse = art
        .run(cfg.solver.coarse_n)
        .ok_or_else(|| ExperimentError::Store(format!("no field for coarse grid {}", cfg.solver.coarse_n)))?;

    let omega = build_omega_t(&fine.field, &params, g.r1, g.r2, hs.t_tilde, hs.t, &opts)?;
    let omega_summary = omega_summary(&omega, &hs);

    let lemma = lemma_table(fine, coarse, &omega, &hs, &params, cfg.diagnostics.lemma_tolerance_factor)?;
    let (theorem, rows) = theorem_record(cfg, fine, coarse, &hs, &params, beta0_profile, &opts)?;
    let convergence = residual_study(cfg, &art.runs, &hs, &params, &opts)?;

    let mut paths = Vec::new();
    for r0 in path_starts(cfg) {
        paths.push(trace_path_in(&fine.field, &params, Family::One, (r0, 0.0), omega.extent, &opts, Some(&omega))?);
    }

    report.pass = omega_summary.t_within_t_m && lemma.pass && theorem.pass && convergence.pass;
    report.omega = Some(omega_summary);
    report.lemma = Some(lemma);
    report.theorem = Some(theorem);
    report.convergence = Some(convergence);
    art.omega = Some(omega);
    art.paths = paths;
    art.bound_rows = rows;
    Ok(())
}

/// `[u, h, c2, α̃, β̃]` at one point.
fn lemma_quantities(r: f64, h: f64, u: f64, h_r: f64, u_r: f64, params: &GasParams) -> std::result::Result<[f64; 5], KernelError> {
    let s = PointState::new(r, h, u)?;
    let (a, b) = alpha_beta(&s, u_r, h_r, params)?;
    let w = params.weight(h);
    Ok([u, h, u + h, w * a, w * b])
}

struct BoundAcc {
    lower: Option<f64>,
    upper: Option<f64>,
    min: f64,
    max: f64,
    margin: f64,
    worst: (f64, f64),
    estimate: f64,
}

impl BoundAcc {
    fn new(lower: Option<f64>, upper: Option<f64>) -> Self {
        Self {
            lower,
            upper,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
            margin: f64::INFINITY,
            worst: (f64::NAN, f64::NAN),
            estimate: 0.0,
        }
    }

    fn update(&mut self, v: f64, r: f64, t: f64) {
        self.min = self.min.min(v);
        self.max = self.max.max(v);
        let lo = self.lower.map_or(f64::INFINITY, |l| v - l);
        let hi = self.upper.map_or(f64::INFINITY, |u| u - v);
        let m = lo.min(hi);
        if m < self.margin || m.is_nan() {
            self.margin = m;
            self.worst = (r, t);
        }
    }
}

/// Five invariant bounds at every stored grid point of the region, with
/// the coarse/fine disagreement as truncation estimate.
pub fn lemma_table(
    fine: &Simulation,
    coarse: &Simulation,
    omega: &OmegaT,
    hs: &HypothesisSet,
    params: &GasParams,
    factor: f64,
) -> Result<LemmaTable> {
    let b = &hs.bands;
    let mut acc = [
        BoundAcc::new(Some(-(b.u_hi_mag + b.h_hi)), Some(-b.u_lo_mag)),
        BoundAcc::new(Some(b.h_lo / std::f64::consts::E), Some(b.h_hi)),
        BoundAcc::new(None, Some(-0.5 * b.u_lo_mag)),
        BoundAcc::new(Some(hs.alpha_star_lo), Some(hs.alpha_star_hi)),
        BoundAcc::new(None, Some(-b.beta_bar)),
    ];
    let grid = fine.field.grid;
    let (mut frames, mut points, mut compared) = (0usize, 0usize, 0usize);
    for (k, frame) in fine.field.frames().iter().enumerate() {
        let t = frame.snapshot.t;
        if t > omega.extent {
            break;
        }
        let (Some(left), Some(right)) = (omega.left_at(t), omega.right_at(t)) else {
            continue;
        };
        frames += 1;
        let (h_r, u_r) = fine.field.frame_gradients(k);
        let lo = ((left - grid.r_min) / grid.dr).ceil().max(0.0) as usize;
        let hi = (((right - grid.r_min) / grid.dr).floor() as usize).min(grid.n - 1);
        for i in lo..=hi {
            let r = grid.r(i);
            if r < left || r > right {
                continue;
            }
            let s = &frame.snapshot;
            let q = lemma_quantities(r, s.h[i], s.u[i], h_r[i], u_r[i], params)?;
            points += 1;
            for (a, v) in acc.iter_mut().zip(q) {
                a.update(v, r, t);
            }
            if coarse.field.contains(r, t) {
                let c = coarse.field.query_gradient(r, t)?;
                let qc = lemma_quantities(r, c.h, c.u, c.h_r, c.u_r, params)?;
                compared += 1;
                for ((a, v), w) in acc.iter_mut().zip(q).zip(qc) {
                    a.estimate = a.estimate.max((v - w).abs());
                }
            }
        }
    }
    let rows: Vec<LemmaRow> = LemmaBound::ALL
        .iter()
        .zip(acc)
        .map(|(&bound, a)| LemmaRow {
            bound,
            lower: a.lower,
            upper: a.upper,
            min_value: a.min,
            max_value: a.max,
            margin: a.margin,
            worst_r: a.worst.0,
            worst_t: a.worst.1,
            estimate: a.estimate,
            pass: points > 0 && a.margin > -factor * a.estimate,
        })
        .collect();
    let pass = rows.iter().all(|r| r.pass);
    Ok(LemmaTable {
        certified_time: omega.extent,
        frames,
        points,
        compared_points: compared,
        tolerance_factor: factor,
        rows,
        pass,
    })
}

fn weighted_beta(r: f64, h: f64, u: f64, h_r: f64, u_r: f64, params: &GasParams) -> std::result::Result<f64, KernelError> {
    let s = PointState::new(r, h, u)?;
    Ok(params.weight(h) * alpha_beta(&s, u_r, h_r, params)?.1)
}

/// Blow-up time against the window `1/N`, and `-β̃` along the path from
/// `(r*, 0)` against the hyperbolic lower bound.
pub fn theorem_record(
    cfg: &ScenarioConfig,
    fine: &Simulation,
    coarse: &Simulation,
    hs: &HypothesisSet,
    params: &GasParams,
    beta0_profile: f64,
    opts: &TraceOptions,
) -> Result<(TheoremRecord, Vec<BoundRow>)> {
    let r_star = hs.geometry.r_star;
    let path = trace_path(&fine.field, params, Family::One, (r_star, 0.0), fine.field.t_end(), opts)?;
    let beta0 = path.samples[0].grad.beta_t;
    let curve = blowup_bound_curve(beta0, hs, params, &[]).map_err(|e| stage_err(Stage::Certify)(e.to_string()))?;
    let rel = cfg.diagnostics.resolution_rel;
    let mut rows = Vec::with_capacity(path.samples.len());
    let mut resolved = true;
    let mut resolution_limit = path.t_end();
    for s in &path.samples {
        let observed = -s.grad.beta_t;
        let bound = bound_at(beta0, hs.bands.h_hi, params, s.t);
        let richardson = if coarse.field.contains(s.r, s.t) {
            let c = coarse.field.query_gradient(s.r, s.t)?;
            (weighted_beta(s.r, c.h, c.u, c.h_r, c.u_r, params)? - s.grad.beta_t).abs()
        } else {
            f64::NAN
        };
        let (hs_r, us_r) = fine.field.value_slope(s.r, s.t)?;
        let interpolation = (weighted_beta(s.r, s.state.h, s.state.u, hs_r, us_r, params)? - s.grad.beta_t).abs();
        let tolerance = richardson + interpolation;
        if resolved && !(richardson <= rel * observed.abs() && bound.is_finite()) {
            resolved = false;
            resolution_limit = s.t;
        }
        rows.push(BoundRow {
            t: s.t,
            r: s.r,
            bound,
            observed,
            margin: observed - bound,
            richardson,
            interpolation,
            tolerance,
            checked: resolved,
        });
    }
    let checked: Vec<&BoundRow> = rows.iter().filter(|r| r.checked).collect();
    let mut min_slack = f64::INFINITY;
    let mut min_margin = f64::INFINITY;
    let mut max_tol: f64 = 0.0;
    let mut worst_t = f64::NAN;
    for r in &checked {
        let slack = r.margin + r.tolerance;
        if slack < min_slack {
            min_slack = slack;
            worst_t = r.t;
        }
        min_margin = min_margin.min(r.margin);
        max_tol = max_tol.max(r.tolerance);
    }
    let bound = BoundComparison {
        beta0_star_profile: beta0_profile,
        beta0_star: beta0,
        first_negative_margin_t: checked.iter().find(|r| r.margin < 0.0).map(|r| r.t),
        t_b: curve.t_b,
        asymptote_within_window: curve.asymptote_within_window,
        resolution_limit,
        points: rows.len(),
        checked_points: checked.len(),
        min_slack,
        min_margin,
        max_tolerance: max_tol,
        worst_t,
        pass: checked.len() >= 5 && min_slack >= 0.0,
    };
    let window = hs.blowup_window();
    let trigger = trigger_time(fine);
    let store_interval = fine.field.max_store_interval();
    let trigger_slack = trigger.map(|t| window + store_interval - t);
    let trigger_within_window = trigger_slack.is_some_and(|s| s >= 0.0);
    let window_within_t = window <= hs.t * (1.0 + NONSTRICT_RTOL);
    let pass = trigger_within_window && bound.pass && window_within_t;
    Ok((
        TheoremRecord {
            n_rate: hs.n_rate,
            n_terms: hs.n_terms,
            n_binding: hs.n_binding(),
            window,
            t: hs.t,
            trigger_time: trigger,
            store_interval,
            trigger_slack,
            trigger_within_window,
            bound,
            window_within_t,
            pass,
        },
        rows,
    ))
}

/// `β̃` transport residual along family-1 paths inside each grid's own
/// region, up to a common cutoff tied to the finest grid's trigger time.
pub fn residual_study(
    cfg: &ScenarioConfig,
    runs: &[(usize, Simulation)],
    hs: &HypothesisSet,
    params: &GasParams,
    opts: &TraceOptions,
) -> Result<ConvergenceAppendix> {
    let g = &hs.geometry;
    let d = &cfg.diagnostics;
    let unit = hs.n_rate * hs.n_rate * hs.bands.h_hi.powf(-params.lambda);
    let find = |n: usize| {
        runs.iter()
            .find(|(k, _)| *k == n)
            .map(|(_, s)| s)
            .ok_or_else(|| ExperimentError::Store(format!("no field for refinement grid {n}")))
    };
    let finest = find(*cfg.solver.refinement.last().expect("validated non-empty"))?;
    let cutoff = d.residual_cutoff * trigger_time(finest).unwrap_or(finest.stop_time);
    let starts = path_starts(cfg);
    let mut grids = Vec::new();
    for &n in &cfg.solver.refinement {
        let sim = find(n)?;
        let omega = build_omega_t(&sim.field, params, g.r1, g.r2, hs.t_tilde, hs.t, opts)?;
        let mut paths = Vec::new();
        for &r0 in &starts {
            let path = trace_path_in(&sim.field, params, Family::One, (r0, 0.0), cutoff, opts, Some(&omega))?;
            let max_residual = match path_derivative_residual(&path, params) {
                Ok(series) => series
                    .iter()
                    .find(|s| s.quantity == Quantity::BetaTilde)
                    .map_or(f64::NAN, |s| s.max_abs / unit),
                Err(TraceError::TooShort { .. }) => f64::NAN,
                Err(e) => return Err(e.into()),
            };
            paths.push(PathResidual { start_r: r0, samples: path.samples.len(), termination: path.termination, max_residual });
        }
        let max_residual = paths.iter().map(|p| p.max_residual).filter(|v| v.is_finite()).fold(0.0, f64::max);
        grids.push(ResidualGrid { n, cutoff, paths, max_residual });
    }
    let paths_used = (0..starts.len()).filter(|&j| grids.iter().all(|g| g.paths[j].max_residual.is_finite())).count();
    let orders: Vec<f64> = grids
        .windows(2)
        .map(|w| (w[0].max_residual / w[1].max_residual).ln() / (w[1].n as f64 / w[0].n as f64).ln())
        .collect();
    let min_order = orders.iter().cloned().fold(f64::INFINITY, f64::min);
    let finest_max = grids.last().map_or(f64::NAN, |g| g.max_residual);
    let pass = paths_used >= 5 && min_order >= d.residual_order_min && finest_max <= d.residual_max;
    Ok(ConvergenceAppendix { natural_unit: unit, cutoff, grids, orders, min_order, finest_max, paths_used, pass })
}
