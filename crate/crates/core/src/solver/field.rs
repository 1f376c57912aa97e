//! Stored solution history and its space-time interpolant.

use super::stencil::{d1_at, d2_at};
use super::{Grid, SolverError};

/// One time level of `(h, u)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSnapshot {
    pub t: f64,
    pub h: Vec<f64>,
    pub u: Vec<f64>,
}

/// A stored snapshot together with its time derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub snapshot: FieldSnapshot,
    pub h_t: Vec<f64>,
    pub u_t: Vec<f64>,
}

/// Interpolated state and first radial gradients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub h: f64,
    pub u: f64,
    pub h_r: f64,
    pub u_r: f64,
}

/// Time-ordered frames on a fixed grid, queried by cubic Hermite
/// interpolation in both `r` and `t`.
///
/// Nodal radial derivatives come from the solver's own stencils, so values
/// are C¹ in `r`. Gradients interpolate nodal first derivatives with nodal
/// second derivatives, which makes them C¹ as well.
#[derive(Debug, Clone)]
pub struct SpaceTimeField {
    pub grid: Grid,
    frames: Vec<Frame>,
}

#[derive(Clone, Copy)]
enum Var {
    H,
    U,
}

/// Nodal value and first two radial derivatives of a quantity and of its
/// time derivative.
#[derive(Clone, Copy, Default)]
struct Jet {
    f: [f64; 3],
    ft: [f64; 3],
}

fn hermite(s: f64) -> [f64; 4] {
    let s2 = s * s;
    let s3 = s2 * s;
    [2.0 * s3 - 3.0 * s2 + 1.0, s3 - 2.0 * s2 + s, -2.0 * s3 + 3.0 * s2, s3 - s2]
}

fn hermite_ds(s: f64) -> [f64; 4] {
    let s2 = s * s;
    [6.0 * s2 - 6.0 * s, 3.0 * s2 - 4.0 * s + 1.0, -6.0 * s2 + 6.0 * s, 3.0 * s2 - 2.0 * s]
}

fn combine(w: [f64; 4], f0: f64, d0: f64, f1: f64, d1: f64, step: f64) -> f64 {
    w[0] * f0 + w[1] * step * d0 + w[2] * f1 + w[3] * step * d1
}

impl SpaceTimeField {
    pub fn new(grid: Grid, frames: Vec<Frame>) -> Result<Self, SolverError> {
        if frames.is_empty() {
            return Err(SolverError::InvalidField("no frames".into()));
        }
        for f in &frames {
            let s = &f.snapshot;
            if s.h.len() != grid.n || s.u.len() != grid.n || f.h_t.len() != grid.n || f.u_t.len() != grid.n {
                return Err(SolverError::InvalidField(format!("frame at t={} has wrong length", s.t)));
            }
        }
        if frames.windows(2).any(|w| !(w[1].snapshot.t > w[0].snapshot.t)) {
            return Err(SolverError::InvalidField("timestamps not strictly increasing".into()));
        }
        Ok(Self { grid, frames })
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn times(&self) -> Vec<f64> {
        self.frames.iter().map(|f| f.snapshot.t).collect()
    }

    pub fn t_start(&self) -> f64 {
        self.frames[0].snapshot.t
    }

    pub fn t_end(&self) -> f64 {
        self.frames[self.frames.len() - 1].snapshot.t
    }

    pub fn contains(&self, r: f64, t: f64) -> bool {
        r >= self.grid.r_min && r <= self.grid.r_max && t >= self.t_start() && t <= self.t_end()
    }

    /// Largest stored time step.
    pub fn max_store_interval(&self) -> f64 {
        self.frames
            .windows(2)
            .map(|w| w[1].snapshot.t - w[0].snapshot.t)
            .fold(0.0, f64::max)
    }

    fn locate_time(&self, t: f64) -> (usize, f64) {
        let k = match self.frames.binary_search_by(|f| f.snapshot.t.total_cmp(&t)) {
            Ok(k) => k,
            Err(k) => k.saturating_sub(1),
        };
        let k = k.min(self.frames.len().saturating_sub(2));
        if self.frames.len() == 1 {
            return (0, 0.0);
        }
        let (t0, t1) = (self.frames[k].snapshot.t, self.frames[k + 1].snapshot.t);
        (k, (t - t0) / (t1 - t0))
    }

    fn locate_space(&self, r: f64) -> (usize, f64) {
        let x = (r - self.grid.r_min) / self.grid.dr;
        let i = (x.floor() as usize).min(self.grid.n - 2);
        (i, x - i as f64)
    }

    fn jet(&self, k: usize, var: Var, i: usize, order: usize) -> Jet {
        let fr = &self.frames[k];
        let (f, ft) = match var {
            Var::H => (&fr.snapshot.h, &fr.h_t),
            Var::U => (&fr.snapshot.u, &fr.u_t),
        };
        let dr = self.grid.dr;
        let mut j = Jet { f: [f[i], d1_at(f, i, dr), 0.0], ft: [ft[i], d1_at(ft, i, dr), 0.0] };
        if order > 1 {
            j.f[2] = d2_at(f, i, dr);
            j.ft[2] = d2_at(ft, i, dr);
        }
        j
    }

    /// Nodal jet at time `t` by Hermite interpolation between frames.
    fn jet_at_time(&self, var: Var, i: usize, k: usize, s: f64, order: usize) -> [f64; 3] {
        let a = self.jet(k, var, i, order);
        if self.frames.len() == 1 {
            return a.f;
        }
        let b = self.jet(k + 1, var, i, order);
        let dt = self.frames[k + 1].snapshot.t - self.frames[k].snapshot.t;
        let w = hermite(s);
        let mut out = [0.0; 3];
        for d in 0..=order.min(2) {
            out[d] = combine(w, a.f[d], a.ft[d], b.f[d], b.ft[d], dt);
        }
        out
    }

    fn check(&self, r: f64, t: f64) -> Result<(), SolverError> {
        if self.contains(r, t) {
            Ok(())
        } else {
            Err(SolverError::OutsideHull { r, t })
        }
    }

    fn interp(&self, var: Var, r: f64, t: f64, with_gradient: bool) -> (f64, f64) {
        let (k, st) = self.locate_time(t);
        let (i, sr) = self.locate_space(r);
        let order = if with_gradient { 2 } else { 1 };
        let a = self.jet_at_time(var, i, k, st, order);
        let b = self.jet_at_time(var, i + 1, k, st, order);
        let dr = self.grid.dr;
        let value = combine(hermite(sr), a[0], a[1], b[0], b[1], dr);
        let grad = if with_gradient { combine(hermite(sr), a[1], a[2], b[1], b[2], dr) } else { 0.0 };
        (value, grad)
    }

    /// `(h, u)` at `(r, t)`.
    pub fn query(&self, r: f64, t: f64) -> Result<(f64, f64), SolverError> {
        self.check(r, t)?;
        Ok((self.interp(Var::H, r, t, false).0, self.interp(Var::U, r, t, false).0))
    }

    /// `(h, u)` and their radial gradients at `(r, t)`.
    pub fn query_gradient(&self, r: f64, t: f64) -> Result<FieldSample, SolverError> {
        self.check(r, t)?;
        let (h, h_r) = self.interp(Var::H, r, t, true);
        let (u, u_r) = self.interp(Var::U, r, t, true);
        Ok(FieldSample { h, u, h_r, u_r })
    }

    /// Radial derivative of the value interpolant itself, for consistency
    /// checks of the two interpolation paths.
    pub fn value_slope(&self, r: f64, t: f64) -> Result<(f64, f64), SolverError> {
        self.check(r, t)?;
        let (k, st) = self.locate_time(t);
        let (i, sr) = self.locate_space(r);
        let dr = self.grid.dr;
        let mut out = [0.0; 2];
        for (slot, var) in [Var::H, Var::U].into_iter().enumerate() {
            let a = self.jet_at_time(var, i, k, st, 1);
            let b = self.jet_at_time(var, i + 1, k, st, 1);
            out[slot] = combine(hermite_ds(sr), a[0], a[1], b[0], b[1], dr) / dr;
        }
        Ok((out[0], out[1]))
    }

    /// Nodal gradients of a stored frame by the solver stencil.
    pub fn frame_gradients(&self, k: usize) -> (Vec<f64>, Vec<f64>) {
        let s = &self.frames[k].snapshot;
        (super::stencil::d1(&s.h, self.grid.dr), super::stencil::d1(&s.u, self.grid.dr))
    }
}
