//! Steady supersonic inflow: constant mass flux `r^m ρ u` and Bernoulli
//! constant `u²/2 + h²/(γ−1)`, solved pointwise on the supersonic branch.

use super::{Grid, Result, SolverError};
use crate::gas::{density_from_sound_speed, GasParams, PointState};
use crate::profile::{ProfilePoint, RadialProfile};

#[derive(Debug, Clone)]
pub struct StationaryProfile {
    pub params: GasParams,
    /// `r^m ρ u`, negative for inflow.
    pub mass_flux: f64,
    /// `u²/2 + h²/(γ−1)`.
    pub bernoulli: f64,
    /// Radius at which the branch turns sonic.
    pub critical_radius: f64,
    pub r: Vec<f64>,
    pub h: Vec<f64>,
    pub u: Vec<f64>,
}

fn flux_density(speed: f64, bernoulli: f64, params: &GasParams) -> f64 {
    let h2 = (params.gamma - 1.0) * (bernoulli - 0.5 * speed * speed);
    if h2 <= 0.0 {
        return 0.0;
    }
    let rho = (h2 / (params.k * params.gamma)).powf(1.0 / (params.gamma - 1.0));
    rho * speed
}

impl StationaryProfile {
    fn sonic_speed(&self) -> f64 {
        (2.0 * (self.params.gamma - 1.0) * self.bernoulli / (self.params.gamma + 1.0)).sqrt()
    }

    /// `(h, u)` at radius `r` by bisection on `|u|` between the sonic speed
    /// and the vacuum limit `sqrt(2 C₂)`.
    pub fn state_at(&self, r: f64) -> Result<(f64, f64)> {
        if !(r > self.critical_radius) {
            return Err(SolverError::BranchCrossing { critical_radius: self.critical_radius });
        }
        let target = self.mass_flux.abs() / r.powf(self.params.m_f64());
        let mut lo = self.sonic_speed();
        let mut hi = (2.0 * self.bernoulli).sqrt();
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            // Flux density decreases with speed on the supersonic branch.
            if flux_density(mid, self.bernoulli, &self.params) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let s = 0.5 * (lo + hi);
        let h = ((self.params.gamma - 1.0) * (self.bernoulli - 0.5 * s * s)).sqrt();
        Ok((h, -s))
    }

    /// Relative drift of both invariants over the tabulated points.
    pub fn invariant_drift(&self) -> Result<(f64, f64)> {
        let m = self.params.m_f64();
        let mut flux: f64 = 0.0;
        let mut bern: f64 = 0.0;
        for i in 0..self.r.len() {
            let rho = density_from_sound_speed(self.h[i], &self.params)?;
            let c1 = self.r[i].powf(m) * rho * self.u[i];
            let c2 = 0.5 * self.u[i] * self.u[i] + self.h[i] * self.h[i] / (self.params.gamma - 1.0);
            flux = flux.max(((c1 - self.mass_flux) / self.mass_flux).abs());
            bern = bern.max(((c2 - self.bernoulli) / self.bernoulli).abs());
        }
        Ok((flux, bern))
    }
}

impl RadialProfile for StationaryProfile {
    fn eval(&self, r: f64) -> ProfilePoint {
        let (h, u) = self.state_at(r).unwrap_or((f64::NAN, f64::NAN));
        let (c1, c2) = (u - h, u + h);
        let u_r = self.params.m_f64() * u * h * h / (r * c1 * c2);
        let h_r = -(self.params.gamma - 1.0) * u * u_r / (2.0 * h);
        ProfilePoint { h, u, h_r, u_r }
    }
}

/// Stationary profile through the anchor state, tabulated on `grid`.
pub fn stationary_profile(
    r_anchor: f64,
    h_anchor: f64,
    u_anchor: f64,
    grid: &Grid,
    params: &GasParams,
) -> Result<StationaryProfile> {
    let anchor = PointState::new(r_anchor, h_anchor, u_anchor)?;
    if !anchor.is_supersonic_inward() {
        return Err(SolverError::InvalidAnchor(format!(
            "need u < -h < 0, got u = {u_anchor}, h = {h_anchor}"
        )));
    }
    let m = params.m_f64();
    let rho = density_from_sound_speed(h_anchor, params)?;
    let mass_flux = r_anchor.powf(m) * rho * u_anchor;
    let bernoulli = 0.5 * u_anchor * u_anchor + h_anchor * h_anchor / (params.gamma - 1.0);
    let mut p = StationaryProfile {
        params: *params,
        mass_flux,
        bernoulli,
        critical_radius: 0.0,
        r: Vec::new(),
        h: Vec::new(),
        u: Vec::new(),
    };
    let sonic = flux_density(p.sonic_speed(), bernoulli, params);
    p.critical_radius = (mass_flux.abs() / sonic).powf(1.0 / m);
    if grid.r_min <= p.critical_radius {
        return Err(SolverError::BranchCrossing { critical_radius: p.critical_radius });
    }
    for r in grid.radii() {
        let (h, u) = p.state_at(r)?;
        p.r.push(r);
        p.h.push(h);
        p.u.push(u);
    }
    Ok(p)
}
