//! Refinement study on a steady supersonic inflow: the solver should hold
//! the profile still up to truncation error.

use crate::gas::{alpha_beta, GasParams, PointState};
use crate::solver::stationary::stationary_profile;
use crate::solver::{build_initial_field, simulate, Grid, SimControls, SolverError};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationarySetup {
    pub r_min: f64,
    pub r_max: f64,
    pub h_anchor: f64,
    pub u_anchor: f64,
    pub t_end: f64,
}

impl Default for StationarySetup {
    fn default() -> Self {
        Self { r_min: 1.0, r_max: 2.0, h_anchor: 0.5, u_anchor: -3.0, t_end: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryGrid {
    pub n: usize,
    pub dr: f64,
    /// Relative drift of `(r^m ρ u, u²/2 + h²/(γ−1))` over the nodes.
    pub invariant_drift: (f64, f64),
    /// `max |(h, u)(t_end) - (h, u)(0)|`.
    pub drift: f64,
    /// `max(|α|, |β|)` of the discrete profile.
    pub gradient_max: f64,
    pub gradient_over_dr4: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryStudy {
    pub setup: StationarySetup,
    pub grids: Vec<StationaryGrid>,
    pub orders: Vec<f64>,
    /// Largest over smallest `gradient_over_dr4`.
    pub constant_spread: f64,
}

pub fn stationary_study(params: &GasParams, setup: &StationarySetup, grids: &[usize]) -> Result<StationaryStudy, SolverError> {
    let mut out = Vec::new();
    for &n in grids {
        let grid = Grid::new(setup.r_min, setup.r_max, n)?;
        let prof = stationary_profile(setup.r_min, setup.h_anchor, setup.u_anchor, &grid, params)?;
        let invariant_drift = prof.invariant_drift()?;
        let ic = build_initial_field(&prof, &grid)?;
        let hr = crate::solver::stencil::d1(&ic.h, grid.dr);
        let ur = crate::solver::stencil::d1(&ic.u, grid.dr);
        let mut gradient_max: f64 = 0.0;
        for i in 0..n {
            let s = PointState::new(grid.r(i), ic.h[i], ic.u[i])?;
            let (a, b) = alpha_beta(&s, ur[i], hr[i], params)?;
            gradient_max = gradient_max.max(a.abs()).max(b.abs());
        }
        let controls = SimControls { t_end: setup.t_end, ..Default::default() };
        let sim = simulate(&ic, &grid, params, &controls)?;
        let last = &sim.field.frames()[sim.field.frames().len() - 1].snapshot;
        let drift = (0..n)
            .map(|i| (last.h[i] - ic.h[i]).abs().max((last.u[i] - ic.u[i]).abs()))
            .fold(0.0, f64::max);
        out.push(StationaryGrid {
            n,
            dr: grid.dr,
            invariant_drift,
            drift,
            gradient_max,
            gradient_over_dr4: gradient_max / grid.dr.powi(4),
        });
    }
    let orders = out
        .windows(2)
        .map(|w| (w[0].drift / w[1].drift).ln() / (w[0].dr / w[1].dr).ln())
        .collect();
    let consts: Vec<f64> = out.iter().map(|g| g.gradient_over_dr4).collect();
    let hi = consts.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = consts.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(StationaryStudy { setup: *setup, grids: out, orders, constant_spread: hi / lo })
}
