//! Randomized verification of the algebraic identities behind the Riccati
//! system, evaluated in double-double arithmetic by default and optionally
//! in exact rational arithmetic.
//!
//! Every report also cross-checks the double-precision kernel in
//! [`crate::gas`] against the extended-precision reference.

pub mod forms;
pub mod scalar;

use crate::gas::{self, GasParams, PointState};
use forms::{Balance, Sample};
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scalar::{Dd, Real};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Default gate on the normalized residual.
pub const DEFAULT_TOLERANCE: f64 = 1e-11;
pub const DEFAULT_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdentityId {
    BChain,
    RiccatiEquiv,
    TildeChainRule,
    DirectionalIdentities,
}

impl IdentityId {
    pub const ALL: [IdentityId; 4] = [
        IdentityId::BChain,
        IdentityId::RiccatiEquiv,
        IdentityId::TildeChainRule,
        IdentityId::DirectionalIdentities,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            IdentityId::BChain => "b_chain",
            IdentityId::RiccatiEquiv => "riccati_equiv",
            IdentityId::TildeChainRule => "tilde_chainrule",
            IdentityId::DirectionalIdentities => "directional_identities",
        }
    }
}

impl fmt::Display for IdentityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    /// Double-double arithmetic (about 106 bits).
    Extended,
    /// Exact rational arithmetic; every residual of the algebraic corpus is
    /// identically zero.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub samples: usize,
    pub seed: u64,
    /// Fraction of draws pinned to gamma = 3.
    pub gamma_three_fraction: f64,
    pub gamma_max: f64,
    pub precision: Precision,
    pub tolerance: f64,
}

impl Default for SampleSpec {
    fn default() -> Self {
        Self {
            samples: DEFAULT_SAMPLES,
            seed: 0x5eed,
            gamma_three_fraction: 0.2,
            gamma_max: 7.0,
            precision: Precision::Extended,
            tolerance: DEFAULT_TOLERANCE,
        }
    }
}

/// One drawn point of the sample domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplePoint {
    pub gamma: f64,
    pub m: u32,
    pub r: f64,
    pub u: f64,
    pub h: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl SamplePoint {
    fn sample<T: Real>(&self) -> Sample<T> {
        Sample::from_f64(self.gamma, self.m, self.r, self.u, self.h, self.alpha, self.beta)
    }

    fn params(&self) -> GasParams {
        GasParams::new(self.gamma, 1.0, self.m).expect("sampled gamma > 1")
    }

    fn state(&self) -> PointState {
        PointState::new(self.r, self.h, self.u).expect("sampled state valid")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub identity_id: IdentityId,
    pub samples: usize,
    /// Samples drawn from the degenerate `γ = 3` family.
    pub gamma_three_samples: usize,
    /// Max of the algebraic and kernel residuals.
    pub max_abs_residual: f64,
    /// Residual of the identity itself in the requested precision.
    pub algebraic_residual: f64,
    /// Residual of the double-precision kernel against the reference.
    pub kernel_residual: f64,
    pub worst_point: Option<SamplePoint>,
    pub tolerance: f64,
    pub pass: bool,
}

impl IdentityReport {
    fn new(id: IdentityId, tolerance: f64) -> Self {
        Self {
            identity_id: id,
            samples: 0,
            gamma_three_samples: 0,
            max_abs_residual: 0.0,
            algebraic_residual: 0.0,
            kernel_residual: 0.0,
            worst_point: None,
            tolerance,
            pass: true,
        }
    }

    fn record(&mut self, point: SamplePoint, algebraic: f64, kernel: f64) {
        self.samples += 1;
        self.gamma_three_samples += usize::from(point.gamma == 3.0);
        // NaN residuals must fail, so compare with negated predicates.
        let worst = algebraic.max(kernel);
        let worst = if algebraic.is_nan() || kernel.is_nan() { f64::NAN } else { worst };
        if !(worst <= self.max_abs_residual) {
            self.max_abs_residual = worst;
            self.worst_point = Some(point);
        }
        if !(algebraic <= self.algebraic_residual) {
            self.algebraic_residual = algebraic;
        }
        if !(kernel <= self.kernel_residual) {
            self.kernel_residual = kernel;
        }
        self.pass = self.max_abs_residual <= self.tolerance;
    }

    /// Associative max-residual merge.
    pub fn merge(mut self, other: IdentityReport) -> IdentityReport {
        assert_eq!(self.identity_id, other.identity_id);
        self.samples += other.samples;
        self.gamma_three_samples += other.gamma_three_samples;
        if !(other.max_abs_residual <= self.max_abs_residual) {
            self.max_abs_residual = other.max_abs_residual;
            self.worst_point = other.worst_point;
        }
        self.algebraic_residual = self.algebraic_residual.max(other.algebraic_residual);
        self.kernel_residual = self.kernel_residual.max(other.kernel_residual);
        self.pass = self.max_abs_residual <= self.tolerance;
        self
    }
}

/// Relative width below which a draw counts as sonic and is rejected.
const SONIC_REJECT: f64 = 1e-3;

fn draw(rng: &mut ChaCha8Rng, spec: &SampleSpec, avoid_sonic: bool) -> SamplePoint {
    loop {
        let gamma = if rng.gen::<f64>() < spec.gamma_three_fraction {
            3.0
        } else {
            rng.gen_range(3.0..spec.gamma_max)
        };
        let m = rng.gen_range(1..=2u32);
        let r = rng.gen_range(0.1..10.0);
        let u: f64 = rng.gen_range(-10.0..10.0);
        let h = 10f64.powf(rng.gen_range(-2.0..2.0));
        let alpha = rng.gen_range(-1.0..1.0) * 10f64.powf(rng.gen_range(-2.0..2.0));
        let beta = rng.gen_range(-1.0..1.0) * 10f64.powf(rng.gen_range(-2.0..2.0));
        let scale = u.abs() + h;
        if avoid_sonic && ((u - h).abs() < SONIC_REJECT * scale || (u + h).abs() < SONIC_REJECT * scale) {
            continue;
        }
        return SamplePoint { gamma, m, r, u, h, alpha, beta };
    }
}

fn points(spec: &SampleSpec, avoid_sonic: bool) -> Vec<SamplePoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    (0..spec.samples).map(|_| draw(&mut rng, spec, avoid_sonic)).collect()
}

fn rel(kernel: f64, reference: f64, scale: f64) -> f64 {
    if scale == 0.0 {
        return (kernel - reference).abs();
    }
    (kernel - reference).abs() / scale
}

fn b_chain_residual<T: Real>(p: &SamplePoint) -> f64 {
    let s = p.sample::<T>();
    forms::chain_residual(&forms::b_chain_c2(&s)).max(forms::chain_residual(&forms::b_chain_c1(&s)))
}

/// Both polynomial chains reducing the `B` combinations to `(gamma-3) u^2 h^2`.
pub fn verify_b_chain(spec: &SampleSpec) -> IdentityReport {
    let mut report = IdentityReport::new(IdentityId::BChain, spec.tolerance);
    for p in points(spec, false) {
        let algebraic = match spec.precision {
            Precision::Extended => b_chain_residual::<Dd>(&p),
            Precision::Exact => b_chain_residual::<BigRational>(&p),
        };
        report.record(p, algebraic, 0.0);
    }
    report
}

fn pair_residual<T: Real>(a: &Balance<T>, b: &Balance<T>) -> f64 {
    a.residual().max(b.residual())
}

fn riccati_equiv_algebraic<T: Real>(s: &Sample<T>) -> f64 {
    let beta = Balance::new(forms::lemma_beta_terms(s), forms::simplified_beta_terms(s));
    let alpha = Balance::new(forms::lemma_alpha_terms(s), forms::simplified_alpha_terms(s));
    pair_residual(&beta, &alpha)
}

/// Lemma-form and reduced-form Riccati right-hand sides coincide.
pub fn verify_riccati_equiv(spec: &SampleSpec) -> IdentityReport {
    let mut report = IdentityReport::new(IdentityId::RiccatiEquiv, spec.tolerance);
    for p in points(spec, true) {
        let dd = p.sample::<Dd>();
        let algebraic = match spec.precision {
            Precision::Extended => riccati_equiv_algebraic(&dd),
            Precision::Exact => riccati_equiv_algebraic(&p.sample::<BigRational>()),
        };
        let kernel = riccati_kernel_residual(&p, &dd);
        report.record(p, algebraic, kernel);
    }
    report
}

fn riccati_kernel_residual(p: &SamplePoint, dd: &Sample<Dd>) -> f64 {
    let params = p.params();
    let s = p.state();
    let beta_terms = forms::simplified_beta_terms(dd);
    let alpha_terms = forms::simplified_alpha_terms(dd);
    let beta_ref = Balance::new(beta_terms.clone(), forms::lemma_beta_terms(dd));
    let alpha_ref = Balance::new(alpha_terms.clone(), forms::lemma_alpha_terms(dd));
    let (b_ref, a_ref) = (beta_ref.lhs_sum().to_f64(), alpha_ref.lhs_sum().to_f64());
    let (b_scale, a_scale) = (beta_ref.scale().to_f64(), alpha_ref.scale().to_f64());
    let mut worst: f64 = 0.0;
    for (d1b, d2a) in [
        gas::riccati_rhs_lemma(p.alpha, p.beta, &s, &params),
        gas::riccati_rhs_simplified(p.alpha, p.beta, &s, &params),
    ]
    .into_iter()
    .map(|r| r.unwrap_or((f64::NAN, f64::NAN)))
    {
        worst = worst.max(rel(d1b, b_ref, b_scale)).max(rel(d2a, a_ref, a_scale));
        if d1b.is_nan() || d2a.is_nan() {
            return f64::NAN;
        }
    }
    worst
}

fn tilde_algebraic<T: Real>(s: &Sample<T>) -> f64 {
    pair_residual(&forms::tilde_beta_chain(s), &forms::tilde_alpha_chain(s))
}

/// The weighted system follows from the reduced system by the chain rule
/// through `h^lambda`, using `∂1 h` and its 2-family analogue.
pub fn verify_tilde_chainrule(spec: &SampleSpec) -> IdentityReport {
    let mut report = IdentityReport::new(IdentityId::TildeChainRule, spec.tolerance);
    for p in points(spec, true) {
        let dd = p.sample::<Dd>();
        let algebraic = match spec.precision {
            Precision::Extended => tilde_algebraic(&dd),
            Precision::Exact => tilde_algebraic(&p.sample::<BigRational>()),
        };
        let kernel = tilde_kernel_residual(&p, &dd);
        report.record(p, algebraic, kernel);
    }
    report
}

fn tilde_kernel_residual(p: &SamplePoint, dd: &Sample<Dd>) -> f64 {
    let params = p.params();
    let s = p.state();
    let w = params.weight(p.h);
    let Ok((d1bt, d2at)) = gas::riccati_rhs_tilde(w * p.alpha, w * p.beta, &s, &params) else {
        return f64::NAN;
    };
    let beta = forms::tilde_beta_chain(dd);
    let alpha = forms::tilde_alpha_chain(dd);
    rel(d1bt / w, beta.rhs_sum().to_f64(), beta.scale().to_f64())
        .max(rel(d2at / w, alpha.rhs_sum().to_f64(), alpha.scale().to_f64()))
}

fn directional_algebraic<T: Real>(s: &Sample<T>) -> f64 {
    forms::directional_balances(s)
        .iter()
        .map(|(_, b)| b.residual())
        .fold(0.0, f64::max)
}

/// Closed forms of the 1-directional derivatives of `h`, `u`, `c2`, the
/// 2-directional derivative of `h`, and the Riemann-variable source terms,
/// each against direct evaluation from the primitive system.
pub fn verify_directional_identities(spec: &SampleSpec) -> IdentityReport {
    let mut report = IdentityReport::new(IdentityId::DirectionalIdentities, spec.tolerance);
    for p in points(spec, true) {
        let dd = p.sample::<Dd>();
        let algebraic = match spec.precision {
            Precision::Extended => directional_algebraic(&dd),
            Precision::Exact => directional_algebraic(&p.sample::<BigRational>()),
        };
        let kernel = directional_kernel_residual(&p, &dd);
        report.record(p, algebraic, kernel);
    }
    report
}

fn directional_kernel_residual(p: &SamplePoint, dd: &Sample<Dd>) -> f64 {
    let params = p.params();
    let s = p.state();
    let at = params.weight(p.h) * p.alpha;
    let Ok(d) = gas::directional_derivs(&s, at, &params) else {
        return f64::NAN;
    };
    let balances = forms::directional_balances(dd);
    let kernel = [d.d1_h, d.d1_u, d.d1_c2];
    let mut worst: f64 = 0.0;
    for (i, value) in kernel.into_iter().enumerate() {
        let b = &balances[i].1;
        worst = worst.max(rel(value, b.rhs_sum().to_f64(), b.scale().to_f64()));
    }
    // Riemann sources from the kernel.
    let (d2w, d1z) = gas::riemann_sources(&s, &params);
    let (bz, bw) = (&balances[4].1, &balances[5].1);
    worst
        .max(rel(d1z, bz.rhs_sum().to_f64(), bz.scale().to_f64()))
        .max(rel(d2w, bw.rhs_sum().to_f64(), bw.scale().to_f64()))
}

pub fn verify(id: IdentityId, spec: &SampleSpec) -> IdentityReport {
    match id {
        IdentityId::BChain => verify_b_chain(spec),
        IdentityId::RiccatiEquiv => verify_riccati_equiv(spec),
        IdentityId::TildeChainRule => verify_tilde_chainrule(spec),
        IdentityId::DirectionalIdentities => verify_directional_identities(spec),
    }
}

pub fn verify_all(spec: &SampleSpec) -> Vec<IdentityReport> {
    IdentityId::ALL.iter().map(|id| verify(*id, spec)).collect()
}
