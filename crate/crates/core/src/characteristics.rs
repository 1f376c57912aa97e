//! Characteristic curves traced through a stored field, the domain of
//! determinacy bounded by two of them, and along-path diagnostics.

use crate::gas::{self, GasParams, GradientState, KernelError, PointState};
use crate::solver::{SolverError, SpaceTimeField};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("start point (r = {r}, t = {t}) outside the field")]
    StartOutside { r: f64, t: f64 },
    #[error("path has {len} samples, need at least {need}")]
    TooShort { len: usize, need: usize },
    #[error("unknown quantity `{0}`")]
    UnknownQuantity(String),
    #[error("invalid boundary radii r1 = {r1}, r2 = {r2}")]
    InvalidBoundary { r1: f64, r2: f64 },
    #[error(transparent)]
    Field(#[from] SolverError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

pub type Result<T> = std::result::Result<T, TraceError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    /// Speed `u - h`.
    One,
    /// Speed `u + h`.
    Two,
}

impl Family {
    pub fn speed(&self, h: f64, u: f64) -> f64 {
        match self {
            Family::One => u - h,
            Family::Two => u + h,
        }
    }

    pub fn index(&self) -> u8 {
        match self {
            Family::One => 1,
            Family::Two => 2,
        }
    }
}

impl FromStr for Family {
    type Err = TraceError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1" | "one" => Ok(Family::One),
            "2" | "two" => Ok(Family::Two),
            other => Err(TraceError::UnknownQuantity(format!("family {other}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    ReachedStop,
    LeftTrustedRegion,
    LeftHull,
    /// The stored field ended first, which on blow-up runs means the
    /// trigger fired.
    FieldEnd,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSample {
    pub t: f64,
    pub r: f64,
    pub state: PointState,
    pub grad: GradientState,
}

#[derive(Debug, Clone)]
pub struct CharPath {
    pub family: Family,
    pub start: (f64, f64),
    pub samples: Vec<PathSample>,
    pub termination: Termination,
}

impl CharPath {
    pub fn last(&self) -> &PathSample {
        self.samples.last().expect("paths hold at least the start sample")
    }

    fn speed(&self, k: usize) -> f64 {
        let s = &self.samples[k].state;
        self.family.speed(s.h, s.u)
    }

    /// Radius at time `t` by cubic Hermite interpolation of the samples
    /// with their characteristic slopes.
    pub fn r_at(&self, t: f64) -> Option<f64> {
        let s = &self.samples;
        if s.is_empty() || t < s[0].t || t > s[s.len() - 1].t {
            return None;
        }
        if s.len() == 1 {
            return Some(s[0].r);
        }
        let k = match s.binary_search_by(|p| p.t.total_cmp(&t)) {
            Ok(k) => return Some(s[k].r),
            Err(k) => k - 1,
        };
        let dt = s[k + 1].t - s[k].t;
        let x = (t - s[k].t) / dt;
        let x2 = x * x;
        let x3 = x2 * x;
        Some(
            (2.0 * x3 - 3.0 * x2 + 1.0) * s[k].r
                + (x3 - 2.0 * x2 + x) * dt * self.speed(k)
                + (-2.0 * x3 + 3.0 * x2) * s[k + 1].r
                + (x3 - x2) * dt * self.speed(k + 1),
        )
    }

    pub fn t_end(&self) -> f64 {
        self.last().t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Spacing of recorded samples; half the largest store interval when
    /// `None`.
    pub sample_dt: Option<f64>,
    pub max_substeps: usize,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self { rtol: 1e-8, atol: 1e-12, sample_dt: None, max_substeps: 1_000_000 }
    }
}

impl TraceOptions {
    fn spacing(&self, field: &SpaceTimeField) -> f64 {
        match self.sample_dt {
            Some(dt) => dt,
            None => {
                let store = field.max_store_interval();
                if store > 0.0 {
                    0.5 * store
                } else {
                    field.grid.dr
                }
            }
        }
    }
}

fn sample(field: &SpaceTimeField, params: &GasParams, r: f64, t: f64) -> Result<PathSample> {
    let f = field.query_gradient(r, t)?;
    let state = PointState::new(r, f.h, f.u)?;
    let grad = GradientState::from_gradients(&state, f.u_r, f.h_r, params)?;
    Ok(PathSample { t, r, state, grad })
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

struct Tracer<'a> {
    field: &'a SpaceTimeField,
    family: Family,
    opts: TraceOptions,
}

impl Tracer<'_> {
    fn speed(&self, r: f64, t: f64) -> Option<f64> {
        self.field.query(r, t).ok().map(|(h, u)| self.family.speed(h, u))
    }

    /// Adaptive integration from `(r, t0)` to exactly `t1`. `None` when a
    /// stage leaves the field.
    fn advance(&self, mut r: f64, t0: f64, t1: f64, dt_guess: &mut f64) -> Option<f64> {
        let mut t = t0;
        let mut k1 = self.speed(r, t)?;
        let mut steps = 0;
        while t < t1 {
            steps += 1;
            if steps > self.opts.max_substeps {
                return None;
            }
            let dt = dt_guess.min(t1 - t);
            let last = dt >= t1 - t;
            let mut k = [0.0; 7];
            k[0] = k1;
            let mut ok = true;
            for s in 1..7 {
                let rs = r + dt * (0..s).map(|j| A[s][j] * k[j]).sum::<f64>();
                match self.speed(rs, (t + C[s] * dt).min(t1)) {
                    Some(v) => k[s] = v,
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok {
                // Retry smaller; a path truly outside is caught once dt is tiny.
                *dt_guess = 0.5 * dt;
                if *dt_guess < 1e-14 * (1.0 + t.abs()) {
                    return None;
                }
                continue;
            }
            let r5 = r + dt * (0..7).map(|j| B5[j] * k[j]).sum::<f64>();
            let r4 = r + dt * (0..7).map(|j| B4[j] * k[j]).sum::<f64>();
            let scale = self.opts.atol + self.opts.rtol * r.abs().max(r5.abs());
            let err = (r5 - r4).abs() / scale;
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if err <= 1.0 {
                r = r5;
                t = if last { t1 } else { t + dt };
                k1 = k[6];
                *dt_guess = dt * factor;
            } else {
                *dt_guess = dt * factor;
            }
        }
        Some(r)
    }
}

/// Region used to stop paths before they reach its boundary.
pub trait TrustedRegion {
    /// True when `(r, t)` is inside with at least `margin` clearance.
    fn inside_with_margin(&self, r: f64, t: f64, margin: f64) -> bool;
}

/// Traces `dr/dt = c_family(r, t)` from `start` until `t_stop`, recording
/// samples on a uniform time lattice starting at the start time.
pub fn trace_path(
    field: &SpaceTimeField,
    params: &GasParams,
    family: Family,
    start: (f64, f64),
    t_stop: f64,
    opts: &TraceOptions,
) -> Result<CharPath> {
    trace_path_in(field, params, family, start, t_stop, opts, None)
}

pub fn trace_path_in(
    field: &SpaceTimeField,
    params: &GasParams,
    family: Family,
    start: (f64, f64),
    t_stop: f64,
    opts: &TraceOptions,
    region: Option<&dyn TrustedRegion>,
) -> Result<CharPath> {
    let (r0, t0) = start;
    if !field.contains(r0, t0) {
        return Err(TraceError::StartOutside { r: r0, t: t0 });
    }
    let tracer = Tracer { field, family, opts: *opts };
    let spacing = opts.spacing(field);
    let (horizon, end_reason) = if t_stop > field.t_end() {
        (field.t_end(), Termination::FieldEnd)
    } else {
        (t_stop, Termination::ReachedStop)
    };
    let mut samples = vec![sample(field, params, r0, t0)?];
    let mut dt_guess = spacing;
    let mut r = r0;
    let mut j = 0usize;
    let margin = field.grid.dr;
    let termination = loop {
        let t_prev = t0 + j as f64 * spacing;
        if t_prev >= horizon {
            break end_reason;
        }
        let mut t_next = t0 + (j + 1) as f64 * spacing;
        if t_next > horizon || horizon - t_next < 1e-9 * spacing {
            t_next = horizon;
        }
        let Some(r_next) = tracer.advance(r, t_prev, t_next, &mut dt_guess) else {
            break Termination::LeftHull;
        };
        if let Some(reg) = region {
            if !reg.inside_with_margin(r_next, t_next, margin) {
                break Termination::LeftTrustedRegion;
            }
        }
        let Ok(s) = sample(field, params, r_next, t_next) else {
            break Termination::LeftHull;
        };
        samples.push(s);
        r = r_next;
        j += 1;
        if t_next >= horizon {
            break end_reason;
        }
    };
    Ok(CharPath { family, start, samples, termination })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Binding {
    TTilde,
    Tm,
    TEnd,
}

/// Domain of determinacy between the 2-characteristic from `(r1, 0)` and
/// the 1-characteristic from `(r2, 0)`.
#[derive(Debug, Clone)]
pub struct OmegaT {
    pub left: CharPath,
    pub right: CharPath,
    /// Boundary intersection time; `None` when it lies beyond the traced
    /// horizon.
    pub t_m: Option<f64>,
    pub t_tilde: f64,
    pub t_end: f64,
    /// `min(T̃, t_m, t_end)`.
    pub extent: f64,
    pub binding: Binding,
    /// Set when a boundary path stopped before the requested horizon.
    pub truncated: Option<Termination>,
}

impl OmegaT {
    pub fn left_at(&self, t: f64) -> Option<f64> {
        self.left.r_at(t)
    }

    pub fn right_at(&self, t: f64) -> Option<f64> {
        self.right.r_at(t)
    }

    pub fn contains(&self, r: f64, t: f64) -> bool {
        self.inside_with_margin(r, t, 0.0)
    }
}

impl TrustedRegion for OmegaT {
    fn inside_with_margin(&self, r: f64, t: f64, margin: f64) -> bool {
        if !(t >= 0.0 && t <= self.extent) {
            return false;
        }
        match (self.left_at(t), self.right_at(t)) {
            (Some(a), Some(b)) => r >= a + margin && r <= b - margin,
            _ => false,
        }
    }
}

/// Bisection of `f` on a bracketing interval to relative tolerance `rtol`.
fn bisect(mut a: f64, mut b: f64, f: impl Fn(f64) -> f64, rtol: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if (b - a) <= rtol * mid.abs().max(f64::MIN_POSITIVE) {
            break;
        }
        let fm = f(mid);
        if (fm > 0.0) == (fa > 0.0) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

pub fn build_omega_t(
    field: &SpaceTimeField,
    params: &GasParams,
    r1: f64,
    r2: f64,
    t_tilde: f64,
    t_end: f64,
    opts: &TraceOptions,
) -> Result<OmegaT> {
    if !(r1 < r2) {
        return Err(TraceError::InvalidBoundary { r1, r2 });
    }
    let t0 = field.t_start();
    let left = trace_path(field, params, Family::Two, (r1, t0), t_end, opts)?;
    let right = trace_path(field, params, Family::One, (r2, t0), t_end, opts)?;
    let horizon = left.t_end().min(right.t_end());
    let gap = |t: f64| right.r_at(t).unwrap_or(f64::NAN) - left.r_at(t).unwrap_or(f64::NAN);
    let mut t_m = None;
    let times: Vec<f64> = left.samples.iter().map(|s| s.t).filter(|&t| t <= horizon).collect();
    for w in times.windows(2) {
        if gap(w[1]) <= 0.0 && gap(w[0]) > 0.0 {
            t_m = Some(bisect(w[0], w[1], gap, 1e-10));
            break;
        }
    }
    let mut extent = t_tilde;
    let mut binding = Binding::TTilde;
    if let Some(tm) = t_m {
        if tm < extent {
            extent = tm;
            binding = Binding::Tm;
        }
    }
    if t_end < extent {
        extent = t_end;
        binding = Binding::TEnd;
    }
    let truncated = [left.termination, right.termination]
        .into_iter()
        .find(|&r| r != Termination::ReachedStop && horizon < extent);
    extent = extent.min(horizon);
    Ok(OmegaT { left, right, t_m, t_tilde, t_end, extent, binding, truncated })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    H,
    U,
    C1,
    C2,
    Alpha,
    Beta,
    AlphaTilde,
    BetaTilde,
    W,
    Z,
}

impl Quantity {
    pub const ALL: [Quantity; 10] = [
        Quantity::H,
        Quantity::U,
        Quantity::C1,
        Quantity::C2,
        Quantity::Alpha,
        Quantity::Beta,
        Quantity::AlphaTilde,
        Quantity::BetaTilde,
        Quantity::W,
        Quantity::Z,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Quantity::H => "h",
            Quantity::U => "u",
            Quantity::C1 => "c1",
            Quantity::C2 => "c2",
            Quantity::Alpha => "alpha",
            Quantity::Beta => "beta",
            Quantity::AlphaTilde => "alpha_t",
            Quantity::BetaTilde => "beta_t",
            Quantity::W => "w",
            Quantity::Z => "z",
        }
    }

    pub fn of(&self, s: &PathSample, params: &GasParams) -> f64 {
        let (w, z) = gas::riemann_from_state(&s.state, params);
        match self {
            Quantity::H => s.state.h,
            Quantity::U => s.state.u,
            Quantity::C1 => s.state.c1(),
            Quantity::C2 => s.state.c2(),
            Quantity::Alpha => s.grad.alpha,
            Quantity::Beta => s.grad.beta,
            Quantity::AlphaTilde => s.grad.alpha_t,
            Quantity::BetaTilde => s.grad.beta_t,
            Quantity::W => w,
            Quantity::Z => z,
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Quantity {
    type Err = TraceError;
    fn from_str(s: &str) -> Result<Self> {
        Quantity::ALL
            .into_iter()
            .find(|q| q.name() == s)
            .ok_or_else(|| TraceError::UnknownQuantity(s.to_string()))
    }
}

pub fn sample_along_path(path: &CharPath, quantity: Quantity, params: &GasParams) -> Result<Vec<(f64, f64)>> {
    if path.samples.is_empty() {
        return Err(TraceError::TooShort { len: 0, need: 1 });
    }
    Ok(path.samples.iter().map(|s| (s.t, quantity.of(s, params))).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualPoint {
    pub t: f64,
    pub r: f64,
    /// Finite-difference derivative along the path.
    pub along: f64,
    /// Analytic right-hand side.
    pub predicted: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualSeries {
    pub quantity: Quantity,
    pub points: Vec<ResidualPoint>,
    pub max_abs: f64,
}

/// Fourth-order centered derivative of uniformly spaced samples.
fn centered_d1(v: &[f64], k: usize, dt: f64) -> f64 {
    (v[k - 2] - 8.0 * v[k - 1] + 8.0 * v[k + 1] - v[k + 2]) / (12.0 * dt)
}

fn predicted(q: Quantity, s: &PathSample, params: &GasParams) -> Result<f64> {
    let st = &s.state;
    Ok(match q {
        Quantity::BetaTilde => gas::riccati_rhs_tilde(s.grad.alpha_t, s.grad.beta_t, st, params)?.0,
        Quantity::AlphaTilde => gas::riccati_rhs_tilde(s.grad.alpha_t, s.grad.beta_t, st, params)?.1,
        Quantity::H => gas::directional_derivs(st, s.grad.alpha_t, params)?.d1_h,
        Quantity::U => gas::directional_derivs(st, s.grad.alpha_t, params)?.d1_u,
        Quantity::C2 => gas::directional_derivs(st, s.grad.alpha_t, params)?.d1_c2,
        Quantity::Z => gas::riemann_sources(st, params).1,
        Quantity::W => gas::riemann_sources(st, params).0,
        other => return Err(TraceError::UnknownQuantity(format!("no transport law for {other}"))),
    })
}

/// Quantities with a transport law along the given family.
pub fn checked_quantities(family: Family) -> &'static [Quantity] {
    match family {
        Family::One => &[Quantity::BetaTilde, Quantity::H, Quantity::U, Quantity::C2, Quantity::Z],
        Family::Two => &[Quantity::AlphaTilde, Quantity::W],
    }
}

/// Along-path derivative of each checked quantity minus its analytic
/// right-hand side, on the interior of the uniform part of the path.
pub fn path_derivative_residual(path: &CharPath, params: &GasParams) -> Result<Vec<ResidualSeries>> {
    let s = &path.samples;
    if s.len() < 5 {
        return Err(TraceError::TooShort { len: s.len(), need: 5 });
    }
    let dt = s[1].t - s[0].t;
    // A final sample clipped to the horizon breaks uniform spacing.
    let mut n = s.len();
    if ((s[n - 1].t - s[n - 2].t) - dt).abs() > 1e-9 * dt {
        n -= 1;
    }
    if n < 5 {
        return Err(TraceError::TooShort { len: n, need: 5 });
    }
    let mut out = Vec::new();
    for &q in checked_quantities(path.family) {
        let v: Vec<f64> = s[..n].iter().map(|p| q.of(p, params)).collect();
        let mut points = Vec::with_capacity(n - 4);
        let mut max_abs: f64 = 0.0;
        for k in 2..n - 2 {
            let along = centered_d1(&v, k, dt);
            let pred = predicted(q, &s[k], params)?;
            let residual = along - pred;
            max_abs = max_abs.max(residual.abs());
            points.push(ResidualPoint { t: s[k].t, r: s[k].r, along, predicted: pred, residual });
        }
        out.push(ResidualSeries { quantity: q, points, max_abs });
    }
    Ok(out)
}
