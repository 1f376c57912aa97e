//! Hypotheses on the initial data for inward supersonic blow-up, their
//! derived constants, a checker for given profiles, and a generator that
//! builds admissible profiles by construction.

use crate::gas::{GasParams, PointState};
use crate::profile::{ProfilePoint, RadialProfile};
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Relative slack granted to the non-strict inequalities.
pub const NONSTRICT_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Gamma,
    RadiiOrder,
    SoundSpeedOrder,
    VelocityOrder,
    AlphaBandOrder,
    SoundSpeedBand,
    VelocityBand,
    AlphaBand,
    BetaBand,
    AlphaFloor,
    BetaFloor,
    BlowupThreshold,
    AlphaSlopeBudget,
    BetaSlopeBudget,
    BumpPlacement,
    BumpAmplitude,
    Resolution,
    Sonic,
}

impl Condition {
    pub fn as_str(&self) -> &'static str {
        match self {
            Condition::Gamma => "gamma_at_least_three",
            Condition::RadiiOrder => "radii_order",
            Condition::SoundSpeedOrder => "sound_speed_order",
            Condition::VelocityOrder => "velocity_order",
            Condition::AlphaBandOrder => "alpha_band_order",
            Condition::SoundSpeedBand => "sound_speed_band",
            Condition::VelocityBand => "velocity_band",
            Condition::AlphaBand => "alpha_band",
            Condition::BetaBand => "beta_band",
            Condition::AlphaFloor => "alpha_floor",
            Condition::BetaFloor => "beta_floor",
            Condition::BlowupThreshold => "blowup_threshold",
            Condition::AlphaSlopeBudget => "alpha_slope_budget",
            Condition::BetaSlopeBudget => "beta_slope_budget",
            Condition::BumpPlacement => "bump_placement",
            Condition::BumpAmplitude => "bump_amplitude",
            Condition::Resolution => "resolution",
            Condition::Sonic => "sonic",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error)]
pub enum HypothesisError {
    #[error("constraint `{condition}` violated: {detail}")]
    ConstraintViolation { condition: Condition, detail: String },
    #[error("infeasible request, binding constraint `{condition}`: {detail}")]
    Infeasible { condition: Condition, detail: String },
    #[error("generated data failed its own check: {0:?}")]
    GeneratorCheckFailed(Vec<Condition>),
    #[error("profile evaluation failed at r = {r}: {detail}")]
    Profile { r: f64, detail: String },
    #[error("bound curve needs beta0_star < 0, got {0}")]
    NonNegativeBeta(f64),
}

pub type Result<T> = std::result::Result<T, HypothesisError>;

fn violation<T>(condition: Condition, detail: String) -> Result<T> {
    Err(HypothesisError::ConstraintViolation { condition, detail })
}

/// Band constants. `u_lo_mag` is the lower bound on `|u|`, `u_hi_mag` the
/// upper one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bands {
    pub h_lo: f64,
    pub h_hi: f64,
    pub u_lo_mag: f64,
    pub u_hi_mag: f64,
    pub alpha_lo: f64,
    pub alpha_hi: f64,
    pub beta_bar: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub r0: f64,
    pub r1: f64,
    pub r2: f64,
    pub r_star: f64,
}

impl Geometry {
    pub fn width(&self) -> f64 {
        self.r2 - self.r1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HypothesisSet {
    pub params: GasParams,
    pub bands: Bands,
    pub geometry: Geometry,
    /// Lower invariant bound on the weighted rarefaction gradient.
    pub alpha_star_lo: f64,
    /// Upper invariant bound on the weighted rarefaction gradient.
    pub alpha_star_hi: f64,
    /// Floor that `beta_bar` must exceed.
    pub beta_floor: f64,
    /// `[(r1 - r0)/(u_hi + 2 h_hi), 2 h_lo^λ / ((γ-1) α*)]`.
    pub t_tilde_terms: [f64; 2],
    pub t_tilde: f64,
    pub t: f64,
    /// `[beta_bar h_hi^-λ, 1/T, (u_hi + 2 h_hi)/(r* - r1)]`.
    pub n_terms: [f64; 3],
    pub n_rate: f64,
}

impl HypothesisSet {
    pub fn blowup_window(&self) -> f64 {
        1.0 / self.n_rate
    }

    /// Index of the largest term of `N`.
    pub fn n_binding(&self) -> usize {
        let t = self.n_terms;
        (0..3).fold(0, |b, i| if t[i] > t[b] { i } else { b })
    }

    /// Lower bound on the boundary intersection time from the band speeds:
    /// the right boundary moves no faster than `u_hi + 2 h_hi` and the left
    /// one at least `u_lo / 2` toward the axis.
    pub fn t_m_lower_bound(&self) -> f64 {
        let b = &self.bands;
        let closing = b.u_hi_mag + 2.0 * b.h_hi - 0.5 * b.u_lo_mag;
        if closing <= 0.0 {
            f64::INFINITY
        } else {
            self.geometry.width() / closing
        }
    }
}

fn nonstrict_ge(a: f64, b: f64) -> bool {
    a - b >= -NONSTRICT_RTOL * a.abs().max(b.abs())
}

/// Derived constants. `T = min(T̃, t_m_estimate, t_cap)` over whichever of
/// the optional bounds are given.
pub fn compute_constants(
    bands: &Bands,
    geometry: &Geometry,
    params: &GasParams,
    t_m_estimate: Option<f64>,
    t_cap: Option<f64>,
) -> Result<HypothesisSet> {
    let g = params.gamma;
    if !(g >= 3.0) {
        return violation(Condition::Gamma, format!("gamma = {g}"));
    }
    let Geometry { r0, r1, r2, r_star } = *geometry;
    if !(0.0 < r0 && r0 < r1 && r1 < r_star && r_star < r2) {
        return violation(Condition::RadiiOrder, format!("need 0 < r0 < r1 < r* < r2, got {r0}, {r1}, {r_star}, {r2}"));
    }
    let b = bands;
    if !(0.0 < b.h_lo && b.h_lo < b.h_hi && b.h_hi < 0.5 * b.u_lo_mag) {
        return violation(
            Condition::SoundSpeedOrder,
            format!("need 0 < h_lo < h_hi < u_lo/2, got {}, {}, {}", b.h_lo, b.h_hi, 0.5 * b.u_lo_mag),
        );
    }
    if !(b.u_lo_mag < b.u_hi_mag) {
        return violation(Condition::VelocityOrder, format!("need u_lo < u_hi, got {} >= {}", b.u_lo_mag, b.u_hi_mag));
    }
    if !(0.0 < b.alpha_lo && b.alpha_lo < b.alpha_hi && b.beta_bar > 0.0) {
        return violation(
            Condition::AlphaBandOrder,
            format!("need 0 < alpha_lo < alpha_hi and beta_bar > 0, got {}, {}, {}", b.alpha_lo, b.alpha_hi, b.beta_bar),
        );
    }
    let lam = params.lambda;
    let m = params.m_f64();
    let alpha_star_lo = 2.0 * m * (b.u_hi_mag + b.h_hi) / r0 * b.h_hi.powf(lam);
    if !nonstrict_ge(b.alpha_lo, alpha_star_lo) {
        return violation(Condition::AlphaFloor, format!("alpha_lo = {} < {alpha_star_lo}", b.alpha_lo));
    }
    let beta_floor = (g + 1.0) * r2 * b.alpha_lo * b.alpha_lo / (2.0 * m * b.u_hi_mag) * b.h_lo.powf(-lam);
    if !(b.beta_bar > beta_floor) {
        return violation(Condition::BetaFloor, format!("beta_bar = {} <= {beta_floor}", b.beta_bar));
    }
    let alpha_star_hi = (b.h_hi / b.h_lo).powf(params.growth_exponent()) * b.alpha_hi;
    let t_tilde_terms = [
        (r1 - r0) / (b.u_hi_mag + 2.0 * b.h_hi),
        2.0 / ((g - 1.0) * alpha_star_hi) * b.h_lo.powf(lam),
    ];
    let t_tilde = t_tilde_terms[0].min(t_tilde_terms[1]);
    let mut t = t_tilde;
    for bound in [t_m_estimate, t_cap].into_iter().flatten() {
        t = t.min(bound);
    }
    let n_terms = [b.beta_bar * b.h_hi.powf(-lam), 1.0 / t, (b.u_hi_mag + 2.0 * b.h_hi) / (r_star - r1)];
    let n_rate = n_terms.iter().cloned().fold(0.0, f64::max);
    Ok(HypothesisSet {
        params: *params,
        bands: *bands,
        geometry: *geometry,
        alpha_star_lo,
        alpha_star_hi,
        beta_floor,
        t_tilde_terms,
        t_tilde,
        t,
        n_terms,
        n_rate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub condition: Condition,
    pub satisfied: bool,
    /// Signed slack; negative when violated.
    pub margin: f64,
    pub worst_radius: Option<f64>,
}

/// Weighted gradients of the form without the `2/(γ−1)` factor on `h₀′`,
/// reported next to the gated evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnscaledForm {
    pub max_abs_diff_alpha: f64,
    pub max_abs_diff_beta: f64,
    pub alpha_band_margin: f64,
    pub beta_band_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub records: Vec<CheckRecord>,
    pub pass: bool,
    pub beta0_star: f64,
    pub unscaled_form: UnscaledForm,
    pub samples: usize,
}

impl CheckReport {
    pub fn failing(&self) -> Vec<Condition> {
        self.records.iter().filter(|r| !r.satisfied).map(|r| r.condition).collect()
    }

    pub fn record(&self, c: Condition) -> Option<&CheckRecord> {
        self.records.iter().find(|r| r.condition == c)
    }
}

/// Weighted gradients `(α̃, β̃)` of a profile point.
pub fn weighted_gradients(r: f64, p: &ProfilePoint, params: &GasParams) -> Result<(f64, f64)> {
    let s = PointState::new(r, p.h, p.u).map_err(|e| HypothesisError::Profile { r, detail: e.to_string() })?;
    let (a, b) = crate::gas::alpha_beta(&s, p.u_r, p.h_r, params).map_err(|e| HypothesisError::ConstraintViolation {
        condition: Condition::Sonic,
        detail: format!("r = {r}: {e}"),
    })?;
    let w = params.weight(p.h);
    Ok((w * a, w * b))
}

fn unscaled_gradients(r: f64, p: &ProfilePoint, params: &GasParams) -> (f64, f64) {
    let m = params.m_f64();
    let w = params.weight(p.h);
    let a = p.u_r + p.h_r + m * p.h * p.u / (r * (p.u + p.h));
    let b = p.u_r - p.h_r - m * p.h * p.u / (r * (p.u - p.h));
    (w * a, w * b)
}

struct Extremum {
    margin: f64,
    at: f64,
}

impl Extremum {
    fn new() -> Self {
        Self { margin: f64::INFINITY, at: f64::NAN }
    }
    fn update(&mut self, margin: f64, r: f64) {
        if margin < self.margin || margin.is_nan() {
            self.margin = margin;
            self.at = r;
        }
    }
}

pub const DEFAULT_CHECK_SAMPLES: usize = 4001;

/// Evaluates the bands on `samples` evenly spaced radii of `[r1, r2]` plus
/// `r*`, the constant conditions, and the blow-up threshold at `r*`.
pub fn check_initial_data(
    profile: &dyn RadialProfile,
    hs: &HypothesisSet,
    params: &GasParams,
    samples: usize,
) -> Result<CheckReport> {
    let g = &hs.geometry;
    let b = &hs.bands;
    let samples = samples.max(2);
    let mut radii: Vec<f64> = (0..samples).map(|i| g.r1 + g.width() * i as f64 / (samples - 1) as f64).collect();
    radii.push(g.r_star);
    let mut h_band = Extremum::new();
    let mut u_band = Extremum::new();
    let mut a_band = Extremum::new();
    let mut b_band = Extremum::new();
    let mut lit_a = Extremum::new();
    let mut lit_b = Extremum::new();
    let (mut diff_a, mut diff_b): (f64, f64) = (0.0, 0.0);
    for &r in &radii {
        let p = profile.eval(r);
        if !(p.h.is_finite() && p.u.is_finite() && p.h_r.is_finite() && p.u_r.is_finite()) {
            return Err(HypothesisError::Profile { r, detail: "non-finite profile or derivative".into() });
        }
        h_band.update((p.h - b.h_lo).min(b.h_hi - p.h), r);
        u_band.update((p.u + b.u_hi_mag).min(-b.u_lo_mag - p.u), r);
        let (at, bt) = weighted_gradients(r, &p, params)?;
        a_band.update((at - b.alpha_lo).min(b.alpha_hi - at), r);
        b_band.update(-b.beta_bar - bt, r);
        let (la, lb) = unscaled_gradients(r, &p, params);
        lit_a.update((la - b.alpha_lo).min(b.alpha_hi - la), r);
        lit_b.update(-b.beta_bar - lb, r);
        diff_a = diff_a.max((la - at).abs());
        diff_b = diff_b.max((lb - bt).abs());
    }
    let p_star = profile.eval(g.r_star);
    let (_, beta0_star) = weighted_gradients(g.r_star, &p_star, params)?;
    let strict = |c: Condition, e: Extremum| CheckRecord {
        condition: c,
        satisfied: e.margin > 0.0,
        margin: e.margin,
        worst_radius: Some(e.at),
    };
    let threshold_margin = -hs.n_rate - beta0_star;
    let records = vec![
        strict(Condition::SoundSpeedBand, h_band),
        strict(Condition::VelocityBand, u_band),
        strict(Condition::AlphaBand, a_band),
        strict(Condition::BetaBand, b_band),
        CheckRecord {
            condition: Condition::AlphaFloor,
            satisfied: nonstrict_ge(b.alpha_lo, hs.alpha_star_lo),
            margin: b.alpha_lo - hs.alpha_star_lo,
            worst_radius: None,
        },
        CheckRecord {
            condition: Condition::BetaFloor,
            satisfied: b.beta_bar > hs.beta_floor,
            margin: b.beta_bar - hs.beta_floor,
            worst_radius: None,
        },
        CheckRecord {
            condition: Condition::BlowupThreshold,
            satisfied: nonstrict_ge(-beta0_star, hs.n_rate),
            margin: threshold_margin,
            worst_radius: Some(g.r_star),
        },
    ];
    let pass = records.iter().all(|r| r.satisfied);
    Ok(CheckReport {
        records,
        pass,
        beta0_star,
        unscaled_form: UnscaledForm {
            max_abs_diff_alpha: diff_a,
            max_abs_diff_beta: diff_b,
            alpha_band_margin: lit_a.margin,
            beta_band_margin: lit_b.margin,
        },
        samples: radii.len(),
    })
}

/// Compactly supported bump used to steepen the compressive gradient at
/// `r*`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpSpec {
    /// Without the bump the data is the baseline ramp alone, which does not
    /// meet the blow-up threshold.
    pub enabled: bool,
    pub half_width: f64,
    /// Exponent `p` of the mollifier `(1 - s²)^p`.
    pub order: u32,
    /// Target `β̃₀(r*)`; `-1.1 N` when `None`.
    pub target_beta_star: Option<f64>,
    /// Baseline `β̃₀` as a multiple of `-beta_bar`.
    pub baseline_beta_factor: f64,
    /// Length over which the data blends to constants outside `[r1, r2]`.
    pub blend_length: f64,
    /// Grid spacing available to resolve the bump, per the configured
    /// finest grid.
    pub finest_dr: Option<f64>,
    /// Minimum grid points across one half-width.
    pub min_points_per_half_width: f64,
}

impl Default for BumpSpec {
    fn default() -> Self {
        Self {
            enabled: true,
            half_width: 2e-4,
            order: 4,
            target_beta_star: None,
            baseline_beta_factor: 1.05,
            blend_length: 1e-3,
            finest_dr: None,
            min_points_per_half_width: 8.0,
        }
    }
}

/// Mollifier `(1 - s²)^p` and its antiderivative from `-1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct Mollifier {
    order: u32,
    /// Antiderivative coefficients in `s`, lowest degree first.
    anti: [f64; 24],
    total: f64,
}

impl Mollifier {
    fn new(order: u32) -> Self {
        assert!(order <= 10, "mollifier order above 10 unsupported");
        // (1 - s²)^p = Σ_k C(p,k) (-1)^k s^{2k}
        let mut anti = [0.0; 24];
        let mut binom = 1.0;
        for k in 0..=order as usize {
            if k > 0 {
                binom *= (order as usize - k + 1) as f64 / k as f64;
            }
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            anti[2 * k + 1] = sign * binom / (2 * k + 1) as f64;
        }
        let mut m = Self { order, anti, total: 0.0 };
        let at_minus_one = m.poly(-1.0);
        m.anti[0] = -at_minus_one;
        m.total = m.poly(1.0);
        m
    }

    fn poly(&self, s: f64) -> f64 {
        self.anti.iter().rev().fold(0.0, |acc, c| acc * s + c)
    }

    fn psi(&self, s: f64) -> f64 {
        if s.abs() >= 1.0 {
            0.0
        } else {
            (1.0 - s * s).powi(self.order as i32)
        }
    }

    fn dpsi(&self, s: f64) -> f64 {
        if s.abs() >= 1.0 || self.order == 0 {
            0.0
        } else {
            -2.0 * self.order as f64 * s * (1.0 - s * s).powi(self.order as i32 - 1)
        }
    }

    /// `∫_{-1}^{s} ψ`.
    fn big_psi(&self, s: f64) -> f64 {
        if s <= -1.0 {
            0.0
        } else if s >= 1.0 {
            self.total
        } else {
            self.poly(s)
        }
    }
}

fn smootherstep(x: f64) -> f64 {
    x * x * x * (x * (6.0 * x - 15.0) + 10.0)
}

/// `∫_0^x (1 - S)` and `∫_0^x s (1 - S)` for the smootherstep `S`.
fn blend_integrals(x: f64) -> (f64, f64) {
    let x = x.min(1.0);
    let x2 = x * x;
    let x4 = x2 * x2;
    let p0 = x - x4 * x2 + 3.0 * x4 * x - 2.5 * x4;
    let p1 = 0.5 * x2 - 6.0 / 7.0 * x4 * x2 * x + 2.5 * x4 * x2 - 2.0 * x4 * x;
    (p0, p1)
}

/// Core data: linear ramps in `(u, h)` plus the bump, on `[r1, r2]`,
/// extended outside by a C² blend to constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratedProfile {
    pub gamma: f64,
    pub r1: f64,
    pub r2: f64,
    pub r_center: f64,
    pub u_center: f64,
    pub h_center: f64,
    /// Baseline slopes `u₀′`, `h₀′`.
    pub u_slope: f64,
    pub h_slope: f64,
    pub r_star: f64,
    pub half_width: f64,
    /// Bump amplitude: the drop it adds to the unweighted `β₀` at `r*`.
    pub amplitude: f64,
    pub blend_length: f64,
    mollifier: Mollifier,
}

/// Value, first and second derivative.
type Jet = (f64, f64, f64);

impl GeneratedProfile {
    fn kappa(&self) -> f64 {
        2.0 / (self.gamma - 1.0)
    }

    fn core(&self, r: f64) -> (Jet, Jet) {
        let x = r - self.r_center;
        let s = (r - self.r_star) / self.half_width;
        let aw = self.amplitude * self.half_width;
        let big = self.mollifier.big_psi(s);
        let psi = self.mollifier.psi(s);
        let dpsi = self.mollifier.dpsi(s) / self.half_width;
        let k = self.kappa();
        let u = (
            self.u_center + self.u_slope * x - 0.5 * aw * big,
            self.u_slope - 0.5 * self.amplitude * psi,
            -0.5 * self.amplitude * dpsi,
        );
        let h = (
            self.h_center + self.h_slope * x + 0.5 * aw / k * big,
            self.h_slope + 0.5 * self.amplitude / k * psi,
            0.5 * self.amplitude / k * dpsi,
        );
        (h, u)
    }

    fn extend(&self, edge: Jet, y: f64) -> (f64, f64) {
        let (g0, g1, g2) = edge;
        let l = self.blend_length;
        let sign = y.signum();
        let x = y.abs() / l;
        let (p0, p1) = blend_integrals(x);
        let value = g0 + sign * l * (g1 * p0 + sign * g2 * l * p1);
        let slope = if x >= 1.0 { 0.0 } else { (g1 + g2 * y) * (1.0 - smootherstep(x)) };
        (value, slope)
    }
}

impl RadialProfile for GeneratedProfile {
    fn eval(&self, r: f64) -> ProfilePoint {
        if r >= self.r1 && r <= self.r2 {
            let (h, u) = self.core(r);
            return ProfilePoint { h: h.0, u: u.0, h_r: h.1, u_r: u.1 };
        }
        let edge = if r < self.r1 { self.r1 } else { self.r2 };
        let (h, u) = self.core(edge);
        let (hv, hs) = self.extend(h, r - edge);
        let (uv, us) = self.extend(u, r - edge);
        ProfilePoint { h: hv, u: uv, h_r: hs, u_r: us }
    }
}

fn sources(r: f64, h: f64, u: f64, params: &GasParams) -> (f64, f64) {
    let m = params.m_f64();
    (m * h * u / (r * (u + h)), -m * h * u / (r * (u - h)))
}

fn range_over(profile: &GeneratedProfile, r1: f64, r2: f64, n: usize) -> ((f64, f64), (f64, f64)) {
    let mut h = (f64::INFINITY, f64::NEG_INFINITY);
    let mut u = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..n {
        let p = profile.eval(r1 + (r2 - r1) * i as f64 / (n - 1) as f64);
        h = (h.0.min(p.h), h.1.max(p.h));
        u = (u.0.min(p.u), u.1.max(p.u));
    }
    (h, u)
}

fn infeasible<T>(condition: Condition, detail: String) -> Result<T> {
    Err(HypothesisError::Infeasible { condition, detail })
}

/// Builds profiles meeting every hypothesis: linear ramps placing `α̃₀`
/// mid-band and `β̃₀` just below `-beta_bar`, plus a bump at `r*` that
/// lowers `β̃₀(r*)` to the target while leaving the `α` gradient bracket
/// unchanged. The result is checked before it is returned.
pub fn generate_initial_data(hs: &HypothesisSet, bump: &BumpSpec, params: &GasParams) -> Result<GeneratedProfile> {
    let g = &hs.geometry;
    let b = &hs.bands;
    let k = params.kappa();
    let w = bump.half_width;
    let len = g.width();

    let budget = (b.u_hi_mag - b.u_lo_mag) + k * (b.h_hi - b.h_lo);
    if b.alpha_lo * len > budget {
        return infeasible(
            Condition::AlphaSlopeBudget,
            format!("alpha_lo (r2 - r1) = {} exceeds band variation {budget}", b.alpha_lo * len),
        );
    }
    if b.beta_bar * len > budget {
        return infeasible(
            Condition::BetaSlopeBudget,
            format!("beta_bar (r2 - r1) = {} exceeds band variation {budget}", b.beta_bar * len),
        );
    }
    if bump.enabled && !(w > 0.0 && g.r_star - w > g.r1 && g.r_star + w < g.r2) {
        return infeasible(Condition::BumpPlacement, format!("bump [{}, {}] not inside (r1, r2)", g.r_star - w, g.r_star + w));
    }
    if let (true, Some(dr)) = (bump.enabled, bump.finest_dr) {
        let pts = w / dr;
        if pts < bump.min_points_per_half_width {
            return infeasible(
                Condition::Resolution,
                format!(
                    "{pts:.2} grid points per bump half-width at the finest grid, need {}",
                    bump.min_points_per_half_width
                ),
            );
        }
    }

    let target_star = bump.target_beta_star.unwrap_or(-1.1 * hs.n_rate);
    let alpha_target = 0.5 * (b.alpha_lo + b.alpha_hi);
    let beta_base = -bump.baseline_beta_factor * b.beta_bar;
    let r_center = 0.5 * (g.r1 + g.r2);
    let mut p = GeneratedProfile {
        gamma: params.gamma,
        r1: g.r1,
        r2: g.r2,
        r_center,
        u_center: -0.5 * (b.u_lo_mag + b.u_hi_mag),
        h_center: 0.5 * (b.h_lo + b.h_hi),
        u_slope: 0.0,
        h_slope: 0.0,
        r_star: g.r_star,
        half_width: w,
        amplitude: 0.0,
        blend_length: bump.blend_length,
        mollifier: Mollifier::new(bump.order),
    };
    let h_mid = 0.5 * (b.h_lo + b.h_hi);
    let u_mid = -0.5 * (b.u_lo_mag + b.u_hi_mag);
    for _ in 0..200 {
        let prev = (p.u_center, p.h_center, p.u_slope, p.h_slope, p.amplitude);
        // Slopes from the gradient targets at the centre state.
        let (sa, sb) = sources(r_center, p.h_center, p.u_center, params);
        let wc = params.weight(p.h_center);
        let s_sum = alpha_target / wc - sa;
        let d_sum = beta_base / wc - sb;
        p.u_slope = 0.5 * (s_sum + d_sum);
        p.h_slope = 0.5 * (s_sum - d_sum) / k;
        if bump.enabled {
            solve_amplitude(&mut p, target_star, params);
        }
        // Centre both bands.
        let ((hmin, hmax), (umin, umax)) = range_over(&p, g.r1, g.r2, 801);
        p.h_center += h_mid - 0.5 * (hmin + hmax);
        p.u_center += u_mid - 0.5 * (umin + umax);
        let now = (p.u_center, p.h_center, p.u_slope, p.h_slope, p.amplitude);
        let change = [now.0 - prev.0, now.1 - prev.1, now.2 - prev.2, now.3 - prev.3, now.4 - prev.4];
        let scale = [now.0, now.1, now.2, now.3, now.4];
        if change.iter().zip(scale).all(|(c, s)| c.abs() <= 1e-15 * s.abs().max(1.0)) {
            break;
        }
    }
    if bump.enabled {
        solve_amplitude(&mut p, target_star, params);
    }

    let ((hmin, hmax), (umin, umax)) = range_over(&p, g.r1, g.r2, 4001);
    if hmax - hmin >= b.h_hi - b.h_lo {
        return infeasible(
            Condition::SoundSpeedBand,
            format!("h varies by {} over [r1, r2], band width {}", hmax - hmin, b.h_hi - b.h_lo),
        );
    }
    if umax - umin >= b.u_hi_mag - b.u_lo_mag {
        return infeasible(
            Condition::VelocityBand,
            format!("u varies by {} over [r1, r2], band width {}", umax - umin, b.u_hi_mag - b.u_lo_mag),
        );
    }
    if bump.enabled && !(p.amplitude > 0.0) {
        return infeasible(Condition::BumpAmplitude, format!("bump amplitude {} not positive", p.amplitude));
    }
    let report = check_initial_data(&p, hs, params, DEFAULT_CHECK_SAMPLES)?;
    let mut failing = report.failing();
    if !bump.enabled {
        failing.retain(|&c| c != Condition::BlowupThreshold);
    }
    if !failing.is_empty() {
        if failing.len() == 1 {
            let rec = report.record(failing[0]).expect("listed as failing");
            return infeasible(failing[0], format!("margin {} at r = {:?}", rec.margin, rec.worst_radius));
        }
        return Err(HypothesisError::GeneratorCheckFailed(failing));
    }
    Ok(p)
}

/// Sets the amplitude so that `β̃₀(r*)` hits the target; the state at `r*`
/// depends on the amplitude, so iterate.
fn solve_amplitude(p: &mut GeneratedProfile, target: f64, params: &GasParams) {
    let k = p.kappa();
    for _ in 0..100 {
        let pt = p.eval(p.r_star);
        let (_, sb) = sources(p.r_star, pt.h, pt.u, params);
        let base = p.u_slope - k * p.h_slope + sb;
        let next = base - target / params.weight(pt.h);
        if (next - p.amplitude).abs() <= 1e-16 * next.abs() {
            p.amplitude = next;
            break;
        }
        p.amplitude = next;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCurve {
    pub beta0_star: f64,
    /// Vertical asymptote `-1 / (β̃₀ h_hi^-λ)`.
    pub t_b: f64,
    /// `(t, lower bound on -β̃)`; infinite at and past the asymptote.
    pub points: Vec<(f64, f64)>,
    pub asymptote_within_window: bool,
}

pub fn bound_at(beta0_star: f64, h_hi: f64, params: &GasParams, t: f64) -> f64 {
    let denom = 1.0 + beta0_star * h_hi.powf(-params.lambda) * t;
    if denom <= 0.0 {
        f64::INFINITY
    } else {
        -beta0_star / denom
    }
}

pub fn blowup_bound_curve(beta0_star: f64, hs: &HypothesisSet, params: &GasParams, t_grid: &[f64]) -> Result<BoundCurve> {
    if !(beta0_star < 0.0) {
        return Err(HypothesisError::NonNegativeBeta(beta0_star));
    }
    let h_hi = hs.bands.h_hi;
    let t_b = -1.0 / (beta0_star * h_hi.powf(-params.lambda));
    let points = t_grid.iter().map(|&t| (t, bound_at(beta0_star, h_hi, params, t))).collect();
    Ok(BoundCurve {
        beta0_star,
        t_b,
        points,
        asymptote_within_window: t_b <= hs.blowup_window() * (1.0 + NONSTRICT_RTOL),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p3() -> GasParams {
        GasParams::new(3.0, 1.0, 1).unwrap()
    }

    #[test]
    fn mollifier_integrals() {
        let m = Mollifier::new(4);
        assert!((m.total - 256.0 / 315.0).abs() < 1e-15);
        assert_eq!(m.big_psi(-1.0), 0.0);
        assert!((m.big_psi(0.0) - 128.0 / 315.0).abs() < 1e-15);
        let e = 1e-6;
        assert!(((m.big_psi(0.3 + e) - m.big_psi(0.3 - e)) / (2.0 * e) - m.psi(0.3)).abs() < 1e-9);
    }

    #[test]
    fn blend_is_c2_and_flat() {
        let (p0, p1) = blend_integrals(1.0);
        assert!((p0 - 0.5).abs() < 1e-15);
        assert!((p1 - (0.5 - 6.0 / 7.0 + 2.5 - 2.0)).abs() < 1e-15);
        let e = 1e-7;
        let (a, _) = blend_integrals(0.4 - e);
        let (b, _) = blend_integrals(0.4 + e);
        assert!(((b - a) / (2.0 * e) - (1.0 - smootherstep(0.4))).abs() < 1e-8);
    }

    #[test]
    fn bound_curve_simple_values() {
        let b = Bands { h_lo: 0.5, h_hi: 1.0, u_lo_mag: 2.5, u_hi_mag: 4.0, alpha_lo: 11.0, alpha_hi: 14.0, beta_bar: 61.0 };
        let g = Geometry { r0: 1.0, r1: 1.0025, r2: 1.0065, r_star: 1.005 };
        let hs = compute_constants(&b, &g, &p3(), None, None).unwrap();
        let c = blowup_bound_curve(-100.0, &hs, &p3(), &[0.0, 0.005, 0.01]).unwrap();
        assert_eq!(c.points[0].1, 100.0);
        assert!((c.points[1].1 - 200.0).abs() < 1e-12);
        assert!(c.points[2].1.is_infinite());
        assert!((c.t_b - 0.01).abs() < 1e-15);
        assert!(blowup_bound_curve(0.0, &hs, &p3(), &[0.0]).is_err());
    }
}
