//! Method-of-lines integrator for the sound-speed/velocity form of the
//! radial Euler system: fourth-order central differences in `r`, classical
//! four-stage Runge–Kutta in `t`.
//!
//! The right end of the interval is an inflow boundary for supersonic
//! inward flow (both families move toward the axis) and takes Dirichlet
//! data on its last two nodes. The left end is pure outflow and uses
//! one-sided stencils with no boundary condition.

pub mod field;
pub mod stationary;
pub mod stencil;

pub use field::{FieldSample, FieldSnapshot, Frame, SpaceTimeField};
pub use stationary::{stationary_profile, StationaryProfile};

use crate::gas::{GasParams, KernelError};
use crate::profile::RadialProfile;
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid field: {0}")]
    InvalidField(String),
    #[error("vacuum: h = {h} at r = {r}")]
    Vacuum { r: f64, h: f64 },
    #[error("non-finite value at t = {t}")]
    NonFinite { t: f64 },
    #[error("time step {dt} exceeds CFL limit {limit}")]
    Cfl { dt: f64, limit: f64 },
    #[error("query (r = {r}, t = {t}) outside the stored field")]
    OutsideHull { r: f64, t: f64 },
    #[error("sonic point inside the interval at critical radius {critical_radius}")]
    BranchCrossing { critical_radius: f64 },
    #[error("invalid stationary anchor: {0}")]
    InvalidAnchor(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

pub type Result<T> = std::result::Result<T, SolverError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub r_min: f64,
    pub r_max: f64,
    pub n: usize,
    pub dr: f64,
}

impl Grid {
    pub const MIN_POINTS: usize = 16;

    pub fn new(r_min: f64, r_max: f64, n: usize) -> Result<Self> {
        if !(r_min > 0.0) || !(r_max > r_min) || !r_max.is_finite() {
            return Err(SolverError::InvalidGrid(format!("need 0 < r_min < r_max, got [{r_min}, {r_max}]")));
        }
        if n < Self::MIN_POINTS {
            return Err(SolverError::InvalidGrid(format!("n = {n} below {}", Self::MIN_POINTS)));
        }
        Ok(Self { r_min, r_max, n, dr: (r_max - r_min) / (n - 1) as f64 })
    }

    pub fn r(&self, i: usize) -> f64 {
        if i == self.n - 1 {
            self.r_max
        } else {
            self.r_min + i as f64 * self.dr
        }
    }

    pub fn radii(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.r(i)).collect()
    }
}

/// Samples `(h0, u0)` at the grid nodes.
pub fn build_initial_field(profile: &dyn RadialProfile, grid: &Grid) -> Result<FieldSnapshot> {
    let mut h = Vec::with_capacity(grid.n);
    let mut u = Vec::with_capacity(grid.n);
    for r in grid.radii() {
        let p = profile.eval(r);
        if !(p.h > 0.0) {
            return Err(SolverError::Vacuum { r, h: p.h });
        }
        h.push(p.h);
        u.push(p.u);
    }
    Ok(FieldSnapshot { t: 0.0, h, u })
}

/// Source term added to `(h_t, u_t)`, used for manufactured solutions.
pub type Forcing = Arc<dyn Fn(f64, f64) -> (f64, f64) + Send + Sync>;

/// Exact `(h, u, h_t, u_t)` at a boundary node.
pub type BoundaryData = Arc<dyn Fn(f64, f64) -> [f64; 4] + Send + Sync>;

/// Number of Dirichlet nodes at the inflow end.
pub const INFLOW_NODES: usize = 2;

#[derive(Clone, Default)]
pub enum InflowBoundary {
    /// Hold the initial values.
    #[default]
    HoldInitial,
    Prescribed(BoundaryData),
}

#[derive(Clone)]
pub struct SimControls {
    pub cfl: f64,
    pub t_end: f64,
    /// Store every `stride`-th step; chosen so that the store interval does
    /// not exceed `dr` when `None`.
    pub stride: Option<usize>,
    /// Trigger when max(|u_r|, |h_r|) exceeds this multiple of its initial
    /// value (or of max(|u| + h) / (r_max - r_min) if that is larger).
    pub trigger_factor: f64,
    /// Absolute gradient ceiling; overrides `trigger_factor` when set.
    pub trigger_ceiling: Option<f64>,
    pub dt_min: f64,
    pub max_steps: usize,
    pub inflow: InflowBoundary,
    pub forcing: Option<Forcing>,
}

impl Default for SimControls {
    fn default() -> Self {
        Self {
            cfl: 0.4,
            t_end: 0.1,
            stride: None,
            trigger_factor: 1e4,
            trigger_ceiling: None,
            dt_min: 1e-14,
            max_steps: 50_000_000,
            inflow: InflowBoundary::HoldInitial,
            forcing: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StopReason {
    Completed,
    BlowUpTrigger { max_gradient: f64, ceiling: f64 },
    Vacuum { r: f64 },
    NonFinite,
    DtUnderflow { dt: f64 },
    StepLimit,
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub field: SpaceTimeField,
    pub stop_reason: StopReason,
    pub stop_time: f64,
    pub steps: usize,
    pub stride: usize,
    pub initial_max_gradient: f64,
    pub ceiling: f64,
}

/// `(h_t, u_t)` from the PDE at every node, one-sided stencils at both ends.
pub fn rhs_eval(snap: &FieldSnapshot, grid: &Grid, params: &GasParams) -> (Vec<f64>, Vec<f64>) {
    let mut ht = vec![0.0; grid.n];
    let mut ut = vec![0.0; grid.n];
    rhs_into(&snap.h, &snap.u, snap.t, grid, params, None, &mut ht, &mut ut);
    (ht, ut)
}

#[allow(clippy::too_many_arguments)]
fn rhs_into(
    h: &[f64],
    u: &[f64],
    t: f64,
    grid: &Grid,
    params: &GasParams,
    forcing: Option<&Forcing>,
    ht: &mut [f64],
    ut: &mut [f64],
) {
    let half = 0.5 * (params.gamma - 1.0);
    let kappa = params.kappa();
    let m = params.m_f64();
    let dr = grid.dr;
    for i in 0..grid.n {
        let r = grid.r(i);
        let hr = stencil::d1_at(h, i, dr);
        let ur = stencil::d1_at(u, i, dr);
        ht[i] = -u[i] * hr - half * h[i] * ur - half * m * u[i] * h[i] / r;
        ut[i] = -u[i] * ur - kappa * h[i] * hr;
        if let Some(f) = forcing {
            let (fh, fu) = f(r, t);
            ht[i] += fh;
            ut[i] += fu;
        }
    }
}

fn max_gradient(h: &[f64], u: &[f64], dr: f64) -> f64 {
    (0..h.len())
        .map(|i| stencil::d1_at(h, i, dr).abs().max(stencil::d1_at(u, i, dr).abs()))
        .fold(0.0, f64::max)
}

/// Largest stable step for the current state.
pub fn cfl_limit(snap: &FieldSnapshot, grid: &Grid, cfl: f64) -> f64 {
    let speed = snap.h.iter().zip(&snap.u).map(|(h, u)| u.abs() + h).fold(0.0, f64::max);
    cfl * grid.dr / speed
}

struct Stepper<'a> {
    grid: &'a Grid,
    params: &'a GasParams,
    inflow: &'a InflowBoundary,
    forcing: Option<&'a Forcing>,
    initial: (Vec<f64>, Vec<f64>),
    k: [(Vec<f64>, Vec<f64>); 4],
    stage: (Vec<f64>, Vec<f64>),
}

impl<'a> Stepper<'a> {
    fn new(
        grid: &'a Grid,
        params: &'a GasParams,
        inflow: &'a InflowBoundary,
        forcing: Option<&'a Forcing>,
        init: &FieldSnapshot,
    ) -> Self {
        let z = || (vec![0.0; grid.n], vec![0.0; grid.n]);
        Self {
            grid,
            params,
            inflow,
            forcing,
            initial: (init.h.clone(), init.u.clone()),
            k: [z(), z(), z(), z()],
            stage: z(),
        }
    }

    /// Time derivative with the inflow condition applied.
    fn eval(&self, h: &[f64], u: &[f64], t: f64, out: &mut (Vec<f64>, Vec<f64>)) {
        rhs_into(h, u, t, self.grid, self.params, self.forcing, &mut out.0, &mut out.1);
        let n = self.grid.n;
        for i in n - INFLOW_NODES..n {
            match self.inflow {
                InflowBoundary::HoldInitial => {
                    out.0[i] = 0.0;
                    out.1[i] = 0.0;
                }
                InflowBoundary::Prescribed(b) => {
                    let d = b(self.grid.r(i), t);
                    out.0[i] = d[2];
                    out.1[i] = d[3];
                }
            }
        }
    }

    fn pin(&self, h: &mut [f64], u: &mut [f64], t: f64) {
        let n = self.grid.n;
        for i in n - INFLOW_NODES..n {
            match self.inflow {
                InflowBoundary::HoldInitial => {
                    h[i] = self.initial.0[i];
                    u[i] = self.initial.1[i];
                }
                InflowBoundary::Prescribed(b) => {
                    let d = b(self.grid.r(i), t);
                    h[i] = d[0];
                    u[i] = d[1];
                }
            }
        }
    }

    fn step(&mut self, s: &FieldSnapshot, dt: f64) -> FieldSnapshot {
        let n = self.grid.n;
        let mut k = std::mem::take(&mut self.k);
        let mut stage = std::mem::take(&mut self.stage);
        self.eval(&s.h, &s.u, s.t, &mut k[0]);
        for (j, c) in [(1usize, 0.5), (2, 0.5), (3, 1.0)] {
            for i in 0..n {
                stage.0[i] = s.h[i] + c * dt * k[j - 1].0[i];
                stage.1[i] = s.u[i] + c * dt * k[j - 1].1[i];
            }
            self.eval(&stage.0, &stage.1, s.t + c * dt, &mut k[j]);
        }
        let mut h = vec![0.0; n];
        let mut u = vec![0.0; n];
        for i in 0..n {
            h[i] = s.h[i] + dt / 6.0 * (k[0].0[i] + 2.0 * k[1].0[i] + 2.0 * k[2].0[i] + k[3].0[i]);
            u[i] = s.u[i] + dt / 6.0 * (k[0].1[i] + 2.0 * k[1].1[i] + 2.0 * k[2].1[i] + k[3].1[i]);
        }
        let t = s.t + dt;
        self.pin(&mut h, &mut u, t);
        self.k = k;
        self.stage = stage;
        FieldSnapshot { t, h, u }
    }

    fn frame(&self, s: FieldSnapshot) -> Frame {
        let mut d = (vec![0.0; self.grid.n], vec![0.0; self.grid.n]);
        self.eval(&s.h, &s.u, s.t, &mut d);
        Frame { snapshot: s, h_t: d.0, u_t: d.1 }
    }
}

/// One RK4 step holding the initial values on the inflow nodes.
pub fn step(snap: &FieldSnapshot, dt: f64, grid: &Grid, params: &GasParams, cfl: f64) -> Result<FieldSnapshot> {
    let limit = cfl_limit(snap, grid, cfl);
    if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
        return Err(SolverError::Cfl { dt, limit });
    }
    let inflow = InflowBoundary::HoldInitial;
    let mut st = Stepper::new(grid, params, &inflow, None, snap);
    Ok(st.step(snap, dt))
}

fn check_state(s: &FieldSnapshot, grid: &Grid) -> Option<StopReason> {
    for i in 0..grid.n {
        if !s.h[i].is_finite() || !s.u[i].is_finite() {
            return Some(StopReason::NonFinite);
        }
        if !(s.h[i] > 0.0) {
            return Some(StopReason::Vacuum { r: grid.r(i) });
        }
    }
    None
}

/// Integrates from `ic` to `controls.t_end` or the first stop condition.
///
/// States that fail the vacuum or finiteness check are never stored, so a
/// returned field is positive everywhere.
pub fn simulate(ic: &FieldSnapshot, grid: &Grid, params: &GasParams, controls: &SimControls) -> Result<Simulation> {
    if ic.h.len() != grid.n || ic.u.len() != grid.n {
        return Err(SolverError::InvalidField("initial arrays do not match grid".into()));
    }
    for i in 0..grid.n {
        if !ic.h[i].is_finite() || !ic.u[i].is_finite() {
            return Err(SolverError::NonFinite { t: ic.t });
        }
        if !(ic.h[i] > 0.0) {
            return Err(SolverError::Vacuum { r: grid.r(i), h: ic.h[i] });
        }
    }
    let mut stepper = Stepper::new(grid, params, &controls.inflow, controls.forcing.as_ref(), ic);
    let g0 = max_gradient(&ic.h, &ic.u, grid.dr);
    // Flat data has no gradient to scale by; fall back to speed over length.
    let speed = ic.h.iter().zip(&ic.u).map(|(h, u)| u.abs() + h).fold(0.0, f64::max);
    let g_ref = g0.max(speed / (grid.r_max - grid.r_min));
    let ceiling = controls.trigger_ceiling.unwrap_or(controls.trigger_factor * g_ref);
    let dt0 = cfl_limit(ic, grid, controls.cfl);
    let stride = controls.stride.unwrap_or_else(|| ((grid.dr / dt0).floor() as usize).max(1));

    let mut frames = vec![stepper.frame(ic.clone())];
    let mut current = ic.clone();
    let mut steps = 0usize;
    let mut since_store = 0usize;
    let t_end = controls.t_end;
    let stop_reason = loop {
        if current.t >= t_end {
            break StopReason::Completed;
        }
        if steps >= controls.max_steps {
            break StopReason::StepLimit;
        }
        let mut dt = cfl_limit(&current, grid, controls.cfl);
        if !(dt >= controls.dt_min) {
            break StopReason::DtUnderflow { dt };
        }
        let remaining = t_end - current.t;
        // Land exactly on t_end instead of leaving a sliver step.
        if dt >= remaining || remaining - dt < 1e-9 * dt {
            dt = remaining;
        }
        let mut next = stepper.step(&current, dt);
        if dt == remaining {
            next.t = t_end;
        }
        if let Some(reason) = check_state(&next, grid) {
            break reason;
        }
        steps += 1;
        since_store += 1;
        current = next;
        let g = max_gradient(&current.h, &current.u, grid.dr);
        if g > ceiling {
            frames.push(stepper.frame(current.clone()));
            break StopReason::BlowUpTrigger { max_gradient: g, ceiling };
        }
        if since_store >= stride || current.t >= t_end {
            frames.push(stepper.frame(current.clone()));
            since_store = 0;
        }
    };
    if frames.last().map(|f| f.snapshot.t) != Some(current.t) {
        frames.push(stepper.frame(current.clone()));
    }
    let stop_time = current.t;
    Ok(Simulation {
        field: SpaceTimeField::new(*grid, frames)?,
        stop_reason,
        stop_time,
        steps,
        stride,
        initial_max_gradient: g0,
        ceiling,
    })
}

/// Rebuilds a field from stored snapshots, recomputing time derivatives
/// with the initial values held on the inflow nodes.
pub fn field_from_snapshots(grid: &Grid, params: &GasParams, snaps: Vec<FieldSnapshot>) -> Result<SpaceTimeField> {
    let first = snaps.first().ok_or_else(|| SolverError::InvalidField("no snapshots".into()))?.clone();
    let inflow = InflowBoundary::HoldInitial;
    let stepper = Stepper::new(grid, params, &inflow, None, &first);
    let frames = snaps.into_iter().map(|s| stepper.frame(s)).collect();
    SpaceTimeField::new(*grid, frames)
}

/// Total mass `∫ r^m ρ dr` by composite Simpson (trapezoid on a final odd
/// interval).
pub fn total_mass(snap: &FieldSnapshot, grid: &Grid, params: &GasParams) -> Result<f64> {
    let m = params.m_f64();
    let mut vals = Vec::with_capacity(grid.n);
    for i in 0..grid.n {
        let rho = crate::gas::density_from_sound_speed(snap.h[i], params)?;
        vals.push(grid.r(i).powf(m) * rho);
    }
    Ok(simpson(&vals, grid.dr))
}

/// Mass flux `r^m ρ u` at node `i`.
pub fn mass_flux(snap: &FieldSnapshot, grid: &Grid, params: &GasParams, i: usize) -> Result<f64> {
    let rho = crate::gas::density_from_sound_speed(snap.h[i], params)?;
    Ok(grid.r(i).powf(params.m_f64()) * rho * snap.u[i])
}

fn simpson(v: &[f64], dx: f64) -> f64 {
    let n = v.len();
    let even = if (n - 1) % 2 == 0 { n } else { n - 1 };
    let mut s = v[0] + v[even - 1];
    for (j, x) in v.iter().enumerate().take(even - 1).skip(1) {
        s += if j % 2 == 1 { 4.0 * x } else { 2.0 * x };
    }
    let mut total = s * dx / 3.0;
    if even != n {
        total += 0.5 * dx * (v[n - 2] + v[n - 1]);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::ConstantProfile;

    #[test]
    fn grid_validation() {
        assert!(Grid::new(0.0, 1.0, 32).is_err());
        assert!(Grid::new(1.0, 1.0, 32).is_err());
        assert!(Grid::new(1.0, 2.0, 15).is_err());
        let g = Grid::new(1.0, 2.0, 17).unwrap();
        assert_eq!(g.dr, 1.0 / 16.0);
        assert_eq!(g.r(16), 2.0);
    }

    #[test]
    fn constant_state_rhs_is_pure_source() {
        let params = GasParams::new(3.0, 1.0, 1).unwrap();
        let grid = Grid::new(1.0, 2.0, 32).unwrap();
        let snap = build_initial_field(&ConstantProfile { h: 1.0, u: -3.0 }, &grid).unwrap();
        assert!(snap.h.iter().all(|&h| h == 1.0) && snap.u.iter().all(|&u| u == -3.0));
        let (ht, ut) = rhs_eval(&snap, &grid, &params);
        for i in 0..grid.n {
            let expect = -(params.gamma - 1.0) / 2.0 * 1.0 * -3.0 * 1.0 / grid.r(i);
            assert!((ht[i] - expect).abs() < 1e-14);
            assert_eq!(ut[i], 0.0);
        }
    }

    #[test]
    fn vacuum_initial_data_rejected() {
        let grid = Grid::new(1.0, 2.0, 32).unwrap();
        assert!(matches!(
            build_initial_field(&ConstantProfile { h: 0.0, u: -3.0 }, &grid),
            Err(SolverError::Vacuum { .. })
        ));
    }

    #[test]
    fn cfl_violation_rejected() {
        let params = GasParams::new(3.0, 1.0, 1).unwrap();
        let grid = Grid::new(1.0, 2.0, 32).unwrap();
        let snap = build_initial_field(&ConstantProfile { h: 1.0, u: -3.0 }, &grid).unwrap();
        let limit = cfl_limit(&snap, &grid, 0.4);
        assert!(step(&snap, limit, &grid, &params, 0.4).is_ok());
        assert!(matches!(step(&snap, 1.01 * limit, &grid, &params, 0.4), Err(SolverError::Cfl { .. })));
    }

    #[test]
    fn simpson_integrates_cubics() {
        let v: Vec<f64> = (0..11).map(|i| (i as f64 * 0.1).powi(3)).collect();
        assert!((simpson(&v, 0.1) - 0.25).abs() < 1e-14);
    }
}
