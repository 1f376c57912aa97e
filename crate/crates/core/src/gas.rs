//! Pointwise kernel for the radially symmetric isentropic Euler system written
//! in sound-speed form:
//!
//! ```text
//! h_t + u h_r + (γ-1)/2 h u_r = -(γ-1)/2 m u h / r
//! u_t + u u_r + 2/(γ-1) h h_r = 0
//! ```
//!
//! Everything here is a total function of its arguments. Coefficients that
//! divide by a characteristic speed return [`KernelError::Sonic`] when that
//! speed is within the relative guard band of zero.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative width of the band around `c1 = 0` / `c2 = 0` treated as sonic.
pub const SONIC_GUARD: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("sonic state: c1 = {c1:e}, c2 = {c2:e} (coefficients singular)")]
    Sonic { c1: f64, c2: f64 },
    #[error("invalid Riemann pair w = {w}, z = {z}: requires w > z")]
    Vacuum { w: f64, z: f64 },
}

pub type Result<T> = std::result::Result<T, KernelError>;

/// Gas and geometry constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GasParams {
    pub gamma: f64,
    /// EOS constant in `p = K rho^gamma`.
    pub k: f64,
    /// Symmetry exponent: 1 cylindrical, 2 spherical.
    pub m: u32,
    /// Weight exponent `(gamma - 3) / (2 (gamma - 1))`.
    pub lambda: f64,
}

impl GasParams {
    pub fn new(gamma: f64, k: f64, m: u32) -> Result<Self> {
        if !(gamma > 1.0) || !gamma.is_finite() {
            return Err(KernelError::Domain(format!("gamma must exceed 1, got {gamma}")));
        }
        if !(k > 0.0) || !k.is_finite() {
            return Err(KernelError::Domain(format!("K must be positive, got {k}")));
        }
        if m == 0 {
            return Err(KernelError::Domain("symmetry exponent m must be >= 1".into()));
        }
        Ok(Self {
            gamma,
            k,
            m,
            lambda: (gamma - 3.0) / (2.0 * (gamma - 1.0)),
        })
    }

    /// `2 / (gamma - 1)`, the sound-speed weight in the Riemann variables.
    pub fn kappa(&self) -> f64 {
        2.0 / (self.gamma - 1.0)
    }

    pub fn m_f64(&self) -> f64 {
        self.m as f64
    }

    /// `(gamma + 1) / (2 (gamma - 1))`, equal to `1 - lambda`.
    pub fn growth_exponent(&self) -> f64 {
        (self.gamma + 1.0) / (2.0 * (self.gamma - 1.0))
    }

    /// `h^lambda`. Exactly 1 when gamma = 3.
    pub fn weight(&self, h: f64) -> f64 {
        if self.lambda == 0.0 {
            1.0
        } else {
            h.powf(self.lambda)
        }
    }
}

/// Sound speed `h = sqrt(K gamma) rho^((gamma-1)/2)`.
pub fn sound_speed(rho: f64, params: &GasParams) -> Result<f64> {
    if !(rho > 0.0) {
        return Err(KernelError::Domain(format!("density must be positive, got {rho}")));
    }
    Ok((params.k * params.gamma).sqrt() * rho.powf(0.5 * (params.gamma - 1.0)))
}

pub fn density_from_sound_speed(h: f64, params: &GasParams) -> Result<f64> {
    if !(h > 0.0) {
        return Err(KernelError::Domain(format!("sound speed must be positive, got {h}")));
    }
    Ok((h * h / (params.k * params.gamma)).powf(1.0 / (params.gamma - 1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointState {
    pub r: f64,
    pub h: f64,
    pub u: f64,
}

impl PointState {
    pub fn new(r: f64, h: f64, u: f64) -> Result<Self> {
        if !(r > 0.0) {
            return Err(KernelError::Domain(format!("radius must be positive, got {r}")));
        }
        if !(h > 0.0) {
            return Err(KernelError::Domain(format!("sound speed must be positive, got {h}")));
        }
        if !u.is_finite() {
            return Err(KernelError::Domain(format!("velocity must be finite, got {u}")));
        }
        Ok(Self { r, h, u })
    }

    pub fn c1(&self) -> f64 {
        self.u - self.h
    }

    pub fn c2(&self) -> f64 {
        self.u + self.h
    }

    /// `u < -h < 0`, i.e. both families move toward the axis.
    pub fn is_supersonic_inward(&self) -> bool {
        self.c2() < 0.0
    }

    fn sonic_scale(&self) -> f64 {
        SONIC_GUARD * (self.u.abs() + self.h)
    }

    fn guard_c2(&self) -> Result<f64> {
        let c2 = self.c2();
        if c2.abs() <= self.sonic_scale() {
            return Err(KernelError::Sonic { c1: self.c1(), c2 });
        }
        Ok(c2)
    }

    fn guard_both(&self) -> Result<(f64, f64)> {
        let (c1, c2) = (self.c1(), self.c2());
        let eps = self.sonic_scale();
        if c1.abs() <= eps || c2.abs() <= eps {
            return Err(KernelError::Sonic { c1, c2 });
        }
        Ok((c1, c2))
    }
}

pub fn char_speeds(s: &PointState) -> (f64, f64) {
    (s.c1(), s.c2())
}

/// `(w, z) = (u + 2h/(gamma-1), u - 2h/(gamma-1))`.
pub fn riemann_from_state(s: &PointState, params: &GasParams) -> (f64, f64) {
    let k = params.kappa();
    (s.u + k * s.h, s.u - k * s.h)
}

/// Inverse of [`riemann_from_state`]: returns `(u, h)`.
pub fn state_from_riemann(w: f64, z: f64, params: &GasParams) -> Result<(f64, f64)> {
    if !(w > z) {
        return Err(KernelError::Vacuum { w, z });
    }
    Ok((0.5 * (w + z), 0.25 * (params.gamma - 1.0) * (w - z)))
}

/// Spatial derivatives together with the gradient variables they define.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientState {
    pub u_r: f64,
    pub h_r: f64,
    pub alpha: f64,
    pub beta: f64,
    pub alpha_t: f64,
    pub beta_t: f64,
}

impl GradientState {
    pub fn from_gradients(s: &PointState, u_r: f64, h_r: f64, params: &GasParams) -> Result<Self> {
        let (alpha, beta) = alpha_beta(s, u_r, h_r, params)?;
        let (alpha_t, beta_t) = weight_tilde(alpha, beta, s.h, params)?;
        Ok(Self { u_r, h_r, alpha, beta, alpha_t, beta_t })
    }
}

/// Gradient variables:
/// `alpha = u_r + k h_r + m h u / (r c2)`, `beta = u_r - k h_r - m h u / (r c1)`.
pub fn alpha_beta(s: &PointState, u_r: f64, h_r: f64, params: &GasParams) -> Result<(f64, f64)> {
    let (c1, c2) = s.guard_both()?;
    let k = params.kappa();
    let src = params.m_f64() * s.h * s.u / s.r;
    Ok((u_r + k * h_r + src / c2, u_r - k * h_r - src / c1))
}

/// Recovers `(u_r, h_r)` from `(alpha, beta)`.
pub fn invert_gradients(s: &PointState, alpha: f64, beta: f64, params: &GasParams) -> Result<(f64, f64)> {
    let (c1, c2) = s.guard_both()?;
    let m = params.m_f64();
    let denom = s.r * c1 * c2;
    let h_r = 0.25 * (params.gamma - 1.0) * (alpha - beta - 2.0 * m * s.u * s.u * s.h / denom);
    let u_r = 0.5 * (alpha + beta) + m * s.u * s.h * s.h / denom;
    Ok((u_r, h_r))
}

pub fn weight_tilde(alpha: f64, beta: f64, h: f64, params: &GasParams) -> Result<(f64, f64)> {
    if !(h > 0.0) {
        return Err(KernelError::Domain(format!("sound speed must be positive, got {h}")));
    }
    let w = params.weight(h);
    Ok((w * alpha, w * beta))
}

pub fn unweight_tilde(alpha_t: f64, beta_t: f64, h: f64, params: &GasParams) -> Result<(f64, f64)> {
    if !(h > 0.0) {
        return Err(KernelError::Domain(format!("sound speed must be positive, got {h}")));
    }
    let w = params.weight(h);
    Ok((alpha_t / w, beta_t / w))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiccatiCoeffs {
    pub a1: f64,
    pub a2: f64,
    pub b1: f64,
    pub b2: f64,
}

pub fn riccati_coeffs(s: &PointState, params: &GasParams) -> Result<RiccatiCoeffs> {
    let (c1, c2) = s.guard_both()?;
    let g = params.gamma;
    let m = params.m_f64();
    let (r, u, h) = (s.r, s.u, s.h);
    let common = 0.5 * (g - 1.0) * u * u - h * h;
    let a1 = m * c2 / (2.0 * r * c1 * c1) * common;
    let a2 = m * c1 / (2.0 * r * c2 * c2) * common;
    let q = 0.25 * (g - 1.0);
    let b1 = m / (r * c1 * c1)
        * (q * u * u * u - 0.5 * h * h * h - q * u * u * h + 0.5 * u * h * h
            + h * u * c1 / c2 * (h + 0.5 * (g - 1.0) * u));
    let b2 = m / (r * c2 * c2)
        * (q * u * u * u + 0.5 * h * h * h + q * u * u * h + 0.5 * u * h * h
            + h * u * c2 / c1 * (h - 0.5 * (g - 1.0) * u));
    Ok(RiccatiCoeffs { a1, a2, b1, b2 })
}

/// Right-hand sides `(∂1 beta, ∂2 alpha)` in the Lemma form with `B1`, `B2`.
pub fn riccati_rhs_lemma(alpha: f64, beta: f64, s: &PointState, params: &GasParams) -> Result<(f64, f64)> {
    let c = riccati_coeffs(s, params)?;
    let g = params.gamma;
    let d1_beta = -0.25 * (1.0 + g) * beta * beta - 0.25 * (3.0 - g) * alpha * beta + c.a1 * alpha
        - c.b1 * beta;
    let d2_alpha = -0.25 * (g + 1.0) * alpha * alpha - 0.25 * (3.0 - g) * alpha * beta + c.a2 * beta
        - c.b2 * alpha;
    Ok((d1_beta, d2_alpha))
}

/// Right-hand sides `(∂1 beta, ∂2 alpha)` after the `B` coefficients are
/// reduced; the damping terms carry the factor `(gamma - 3)`.
pub fn riccati_rhs_simplified(alpha: f64, beta: f64, s: &PointState, params: &GasParams) -> Result<(f64, f64)> {
    let (c1, c2) = s.guard_both()?;
    let c = riccati_coeffs(s, params)?;
    let g = params.gamma;
    let m = params.m_f64();
    let (r, u, h) = (s.r, s.u, s.h);
    let damp = (g - 3.0) * m / r * u * u * h * h;
    let d1_beta = -0.25 * (g + 1.0) * beta * beta + 0.25 * (g - 3.0) * alpha * beta
        + c.a1 * (alpha - beta)
        + damp / (c1 * c1 * c2) * beta;
    let d2_alpha = -0.25 * (g + 1.0) * alpha * alpha + 0.25 * (g - 3.0) * alpha * beta
        + c.a2 * (beta - alpha)
        + damp / (c2 * c2 * c1) * alpha;
    Ok((d1_beta, d2_alpha))
}

/// Right-hand sides `(∂1 beta_t, ∂2 alpha_t)` of the weighted system, whose
/// quadratic terms are decoupled.
pub fn riccati_rhs_tilde(alpha_t: f64, beta_t: f64, s: &PointState, params: &GasParams) -> Result<(f64, f64)> {
    let (c1, c2) = s.guard_both()?;
    let g = params.gamma;
    let m = params.m_f64();
    let (r, u, h) = (s.r, s.u, s.h);
    let inv_w = 1.0 / params.weight(h);
    let common = 0.5 * (g - 1.0) * u * u - h * h;
    let d1_beta_t = -0.25 * (g + 1.0) * inv_w * beta_t * beta_t
        + m * c2 / (2.0 * r * c1 * c1) * common * alpha_t
        - m * ((g - 3.0) * u * u + (u + h) * (u + h)) / (2.0 * r * c1) * beta_t;
    let d2_alpha_t = -0.25 * (g + 1.0) * inv_w * alpha_t * alpha_t
        + m * c1 / (2.0 * r * c2 * c2) * common * beta_t
        - m * ((g - 3.0) * u * u + (u - h) * (u - h)) / (2.0 * r * c2) * alpha_t;
    Ok((d1_beta_t, d2_alpha_t))
}

/// 1-directional derivatives of `h`, `u` and `c2` predicted from `alpha_t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionalDerivs {
    pub d1_h: f64,
    pub d1_u: f64,
    pub d1_c2: f64,
}

pub fn directional_derivs(s: &PointState, alpha_t: f64, params: &GasParams) -> Result<DirectionalDerivs> {
    let c2 = s.guard_c2()?;
    let g = params.gamma;
    let m = params.m_f64();
    let (r, u, h) = (s.r, s.u, s.h);
    let w = params.weight(h);
    let lead = h.powf(params.growth_exponent());
    let d1_h = -0.5 * (g - 1.0) * lead * (alpha_t + m * u * u / (r * c2) * w);
    let d1_u = -lead * (alpha_t - m * u * h / (r * c2) * w);
    let d1_c2 = -0.5 * (g + 1.0)
        * lead
        * (alpha_t + m * u * ((g - 1.0) * u - 2.0 * h) / ((g + 1.0) * r * c2) * w);
    Ok(DirectionalDerivs { d1_h, d1_u, d1_c2 })
}

/// Source terms of the Riemann-variable equations: `∂2 w = -m u h / r`,
/// `∂1 z = m u h / r`. Returns `(∂2 w, ∂1 z)`.
pub fn riemann_sources(s: &PointState, params: &GasParams) -> (f64, f64) {
    let src = params.m_f64() * s.u * s.h / s.r;
    (-src, src)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn p3(m: u32) -> GasParams {
        GasParams::new(3.0, 1.0, m).unwrap()
    }

    fn ref_state() -> PointState {
        PointState::new(2.0, 0.5, -2.0).unwrap()
    }

    #[test]
    fn lambda_matches_definition() {
        let p = GasParams::new(5.0, 2.0, 2).unwrap();
        assert_eq!(p.lambda, 0.25);
        assert_eq!(p3(1).lambda, 0.0);
        assert!(GasParams::new(1.0, 1.0, 1).is_err());
        assert!(GasParams::new(3.0, 0.0, 1).is_err());
        assert!(GasParams::new(3.0, 1.0, 0).is_err());
    }

    #[test]
    fn sound_speed_examples() {
        let p = GasParams::new(3.0, 1.0 / 3.0, 1).unwrap();
        assert_relative_eq!(sound_speed(2.0, &p).unwrap(), 2.0, max_relative = 1e-15);
        let p = GasParams::new(1.4, 0.7, 2).unwrap();
        assert_relative_eq!(sound_speed(1.0, &p).unwrap(), (0.7f64 * 1.4).sqrt(), max_relative = 1e-15);
        // mpmath, 40 digits: sqrt(10) * 0.7^2
        let p = GasParams::new(5.0, 2.0, 1).unwrap();
        assert_relative_eq!(
            sound_speed(0.7, &p).unwrap(),
            1.549516053482505872679457836772032081523,
            max_relative = 1e-15
        );
        assert!(sound_speed(0.0, &p).is_err());
        assert!(sound_speed(-1.0, &p).is_err());
    }

    #[test]
    fn char_speed_examples() {
        let s = PointState::new(1.0, 0.5, -2.0).unwrap();
        assert_eq!(char_speeds(&s), (-2.5, -1.5));
        let s = PointState::new(1.0, 1.0, 0.0).unwrap();
        assert_eq!(char_speeds(&s), (-1.0, 1.0));
        let s = PointState::new(1.0, 0.75, -0.75).unwrap();
        assert_eq!(s.c2(), 0.0);
        assert!(matches!(alpha_beta(&s, 0.0, 0.0, &p3(1)), Err(KernelError::Sonic { .. })));
    }

    #[test]
    fn riemann_examples() {
        let s = PointState::new(1.0, 0.5, -2.0).unwrap();
        assert_eq!(riemann_from_state(&s, &p3(1)), (-1.5, -2.5));
        let p5 = GasParams::new(5.0, 1.0, 1).unwrap();
        let s = PointState::new(1.0, 2.0, 1.0).unwrap();
        assert_eq!(riemann_from_state(&s, &p5), (2.0, 0.0));
        assert_eq!(state_from_riemann(2.0, 0.0, &p5).unwrap(), (1.0, 2.0));
        assert!(matches!(state_from_riemann(1.0, 1.0, &p5), Err(KernelError::Vacuum { .. })));
    }

    #[test]
    fn alpha_beta_reference_point() {
        let (a, b) = alpha_beta(&ref_state(), 1.0, 0.0, &p3(1)).unwrap();
        assert_relative_eq!(a, 4.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(b, 0.8, max_relative = 1e-15);
        let s = PointState::new(1.0, 0.7, 0.0).unwrap();
        assert_eq!(alpha_beta(&s, 0.0, 0.0, &p3(2)).unwrap(), (0.0, 0.0));
        let (u_r, h_r) = invert_gradients(&ref_state(), 4.0 / 3.0, 0.8, &p3(1)).unwrap();
        assert_relative_eq!(u_r, 1.0, max_relative = 1e-14);
        assert!(h_r.abs() < 1e-14);
    }

    #[test]
    fn weight_examples() {
        let (a, b) = weight_tilde(1.7, -3.2, 0.4, &p3(1)).unwrap();
        assert_eq!((a, b), (1.7, -3.2));
        let p5 = GasParams::new(5.0, 1.0, 1).unwrap();
        let (a, _) = weight_tilde(1.0, 1.0, 4.0, &p5).unwrap();
        assert_relative_eq!(a, 2f64.sqrt(), max_relative = 1e-15);
        assert!(weight_tilde(1.0, 1.0, 0.0, &p5).is_err());
        assert!(unweight_tilde(1.0, 1.0, -1.0, &p5).is_err());
    }

    #[test]
    fn coefficient_examples() {
        let c = riccati_coeffs(&ref_state(), &p3(1)).unwrap();
        assert_relative_eq!(c.a1, -0.225, max_relative = 1e-15);
        // (gamma-1)/2 u^2 = h^2 at gamma = 3 means |u| = h, which is sonic; use gamma = 5.
        let p5 = GasParams::new(5.0, 1.0, 1).unwrap();
        let h: f64 = 1.0;
        let u = -h / 2f64.sqrt();
        let s = PointState::new(1.3, h, u).unwrap();
        let c = riccati_coeffs(&s, &p5).unwrap();
        assert!(c.a1.abs() < 1e-14 && c.a2.abs() < 1e-14);
    }

    #[test]
    fn coefficient_reflection() {
        // u -> -u swaps c1 <-> -c2, giving A2(-u) = -A1(u) and B2(-u) = -B1(u).
        let p = GasParams::new(4.2, 1.0, 2).unwrap();
        let s = PointState::new(1.7, 0.6, -2.3).unwrap();
        let sr = PointState::new(1.7, 0.6, 2.3).unwrap();
        let c = riccati_coeffs(&s, &p).unwrap();
        let cr = riccati_coeffs(&sr, &p).unwrap();
        assert_relative_eq!(cr.a2, -c.a1, max_relative = 1e-13);
        assert_relative_eq!(cr.b2, -c.b1, max_relative = 1e-13);
        assert_relative_eq!(cr.b1, -c.b2, max_relative = 1e-13);
    }

    #[test]
    fn riccati_reference_values() {
        let s = ref_state();
        let p = p3(1);
        let (a, b) = (4.0 / 3.0, 0.8);
        // Exact rationals: d1_beta = -19/25, d2_alpha = -11/9.
        let (d1b, d2a) = riccati_rhs_lemma(a, b, &s, &p).unwrap();
        assert_relative_eq!(d1b, -0.76, max_relative = 1e-14);
        assert_relative_eq!(d2a, -11.0 / 9.0, max_relative = 1e-14);
        let (d1b_s, d2a_s) = riccati_rhs_simplified(a, b, &s, &p).unwrap();
        assert_relative_eq!(d1b_s, d1b, max_relative = 1e-14);
        assert_relative_eq!(d2a_s, d2a, max_relative = 1e-14);
        let (d1bt, d2at) = riccati_rhs_tilde(a, b, &s, &p).unwrap();
        assert_relative_eq!(d1bt, -0.76, max_relative = 1e-14);
        assert_relative_eq!(d2at, d2a, max_relative = 1e-13);
    }

    #[test]
    fn simplified_form_special_cases() {
        let s = PointState::new(1.4, 0.8, -3.1).unwrap();
        let p = p3(2);
        let c = riccati_coeffs(&s, &p).unwrap();
        let (a, b) = (2.5, -7.0);
        let (d1b, _) = riccati_rhs_simplified(a, b, &s, &p).unwrap();
        assert_relative_eq!(d1b, -b * b + c.a1 * (a - b), max_relative = 1e-14);

        let p = GasParams::new(4.5, 1.0, 1).unwrap();
        let (c1, c2) = (s.c1(), s.c2());
        let (d1b, _) = riccati_rhs_simplified(b, b, &s, &p).unwrap();
        let g = p.gamma;
        let expected = -(g + 1.0) / 4.0 * b * b + (g - 3.0) / 4.0 * b * b
            + (g - 3.0) / s.r * s.u * s.u * s.h * s.h / (c1 * c1 * c2) * b;
        assert_relative_eq!(d1b, expected, max_relative = 1e-13);
    }

    #[test]
    fn homogeneity_is_exact() {
        let s = PointState::new(0.9, 1.2, -4.0).unwrap();
        for p in [p3(1), GasParams::new(6.0, 1.0, 2).unwrap()] {
            assert_eq!(riccati_rhs_lemma(0.0, 0.0, &s, &p).unwrap(), (0.0, 0.0));
            assert_eq!(riccati_rhs_simplified(0.0, 0.0, &s, &p).unwrap(), (0.0, 0.0));
            assert_eq!(riccati_rhs_tilde(0.0, 0.0, &s, &p).unwrap(), (0.0, 0.0));
        }
    }

    #[test]
    fn directional_reference_values() {
        let d = directional_derivs(&ref_state(), 4.0 / 3.0, &p3(1)).unwrap();
        // Exact rationals: 0, -1/2, -1/2 (the alpha bracket of ∂1h vanishes here).
        assert!(d.d1_h.abs() < 1e-15);
        assert_relative_eq!(d.d1_u, -0.5, max_relative = 1e-14);
        assert_relative_eq!(d.d1_c2, -0.5, max_relative = 1e-14);

        let p = GasParams::new(5.0, 1.0, 2).unwrap();
        let s = PointState::new(1.1, 0.9, -3.0).unwrap();
        let at = -(p.m_f64() * s.u * s.u / (s.r * s.c2())) * p.weight(s.h);
        let d = directional_derivs(&s, at, &p).unwrap();
        assert!(d.d1_h.abs() < 1e-14);
    }

    #[test]
    fn gamma_three_degeneracy() {
        let p = p3(2);
        let s = PointState::new(1.3, 0.7, -2.9).unwrap();
        let g = GradientState::from_gradients(&s, 3.0, -1.5, &p).unwrap();
        assert_eq!(g.alpha, g.alpha_t);
        assert_eq!(g.beta, g.beta_t);
    }

    fn valid_point() -> impl Strategy<Value = (GasParams, PointState)> {
        (3.0f64..7.0, 1u32..3, 0.1f64..10.0, -2.0f64..2.0, -10.0f64..10.0).prop_filter_map(
            "away from sonic",
            |(g, m, r, lh, u)| {
                let h = 10f64.powf(lh);
                let s = PointState::new(r, h, u).ok()?;
                let scale = u.abs() + h;
                if s.c1().abs() < 1e-3 * scale || s.c2().abs() < 1e-3 * scale {
                    return None;
                }
                Some((GasParams::new(g, 1.0, m).unwrap(), s))
            },
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]

        #[test]
        fn riemann_round_trip((p, s) in valid_point()) {
            let (w, z) = riemann_from_state(&s, &p);
            let (u, h) = state_from_riemann(w, z, &p).unwrap();
            let scale = s.u.abs() + s.h;
            prop_assert!((u - s.u).abs() <= 1e-13 * scale);
            prop_assert!((h - s.h).abs() <= 1e-13 * scale);
        }

        #[test]
        fn gradient_round_trip((p, s) in valid_point(), u_r in -50.0f64..50.0, h_r in -50.0f64..50.0) {
            let (a, b) = alpha_beta(&s, u_r, h_r, &p).unwrap();
            let (u2, h2) = invert_gradients(&s, a, b, &p).unwrap();
            let scale = u_r.abs() + h_r.abs() + a.abs() + b.abs();
            prop_assert!((u2 - u_r).abs() <= 1e-13 * scale, "{} vs {}", u2, u_r);
            prop_assert!((h2 - h_r).abs() <= 1e-13 * scale, "{} vs {}", h2, h_r);
        }

        #[test]
        fn weight_round_trip((p, s) in valid_point(), a in -1e3f64..1e3, b in -1e3f64..1e3) {
            let (at, bt) = weight_tilde(a, b, s.h, &p).unwrap();
            let (a2, b2) = unweight_tilde(at, bt, s.h, &p).unwrap();
            prop_assert!((a2 - a).abs() <= 1e-13 * a.abs().max(1e-300));
            prop_assert!((b2 - b).abs() <= 1e-13 * b.abs().max(1e-300));
        }

        #[test]
        fn c2_derivative_is_sum((p, s) in valid_point(), at in -100.0f64..100.0) {
            let d = directional_derivs(&s, at, &p).unwrap();
            let scale = d.d1_h.abs() + d.d1_u.abs();
            prop_assert!((d.d1_c2 - d.d1_u - d.d1_h).abs() <= 1e-12 * scale.max(1e-300));
        }
    }
}
