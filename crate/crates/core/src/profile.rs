//! Radial initial-data profiles with analytic first derivatives.

/// Value and first radial derivative of `(h, u)` at one radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfilePoint {
    pub h: f64,
    pub u: f64,
    pub h_r: f64,
    pub u_r: f64,
}

pub trait RadialProfile {
    fn eval(&self, r: f64) -> ProfilePoint;
}

/// Spatially constant state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantProfile {
    pub h: f64,
    pub u: f64,
}

impl RadialProfile for ConstantProfile {
    fn eval(&self, _r: f64) -> ProfilePoint {
        ProfilePoint { h: self.h, u: self.u, h_r: 0.0, u_r: 0.0 }
    }
}

impl<F> RadialProfile for F
where
    F: Fn(f64) -> ProfilePoint,
{
    fn eval(&self, r: f64) -> ProfilePoint {
        self(r)
    }
}

/// Profile given at sorted radii, interpolated by cubic Hermite polynomials
/// built from the tabulated values and derivatives. Evaluates to NaN outside
/// the table.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedProfile {
    r: Vec<f64>,
    points: Vec<ProfilePoint>,
}

impl TabulatedProfile {
    /// Needs at least two strictly increasing radii.
    pub fn new(rows: Vec<(f64, ProfilePoint)>) -> Option<Self> {
        if rows.len() < 2 || rows.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return None;
        }
        let (r, points) = rows.into_iter().unzip();
        Some(Self { r, points })
    }

    pub fn range(&self) -> (f64, f64) {
        (self.r[0], self.r[self.r.len() - 1])
    }
}

fn hermite(f0: f64, d0: f64, f1: f64, d1: f64, dx: f64, s: f64) -> (f64, f64) {
    let s2 = s * s;
    let s3 = s2 * s;
    let v = (2.0 * s3 - 3.0 * s2 + 1.0) * f0 + (s3 - 2.0 * s2 + s) * dx * d0 + (-2.0 * s3 + 3.0 * s2) * f1 + (s3 - s2) * dx * d1;
    let dv = ((6.0 * s2 - 6.0 * s) * f0 + (-6.0 * s2 + 6.0 * s) * f1) / dx + (3.0 * s2 - 4.0 * s + 1.0) * d0 + (3.0 * s2 - 2.0 * s) * d1;
    (v, dv)
}

impl RadialProfile for TabulatedProfile {
    fn eval(&self, r: f64) -> ProfilePoint {
        let (lo, hi) = self.range();
        if !(r >= lo && r <= hi) {
            return ProfilePoint { h: f64::NAN, u: f64::NAN, h_r: f64::NAN, u_r: f64::NAN };
        }
        let k = self.r.partition_point(|&x| x <= r).clamp(1, self.r.len() - 1) - 1;
        let dx = self.r[k + 1] - self.r[k];
        let s = (r - self.r[k]) / dx;
        let (a, b) = (&self.points[k], &self.points[k + 1]);
        let (h, h_r) = hermite(a.h, a.h_r, b.h, b.h_r, dx, s);
        let (u, u_r) = hermite(a.u, a.u_r, b.u, b.u_r, dx, s);
        ProfilePoint { h, u, h_r, u_r }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tabulated_cubics_are_exact() {
        let f = |r: f64| ProfilePoint { h: 1.0 + r * r * r, u: -3.0 + r * r, h_r: 3.0 * r * r, u_r: 2.0 * r };
        let rows = (0..5).map(|i| (0.5 * i as f64, f(0.5 * i as f64))).collect();
        let tab = TabulatedProfile::new(rows).unwrap();
        for r in [0.0, 0.3, 1.1, 1.75, 2.0] {
            let (a, b) = (tab.eval(r), f(r));
            assert!((a.h - b.h).abs() < 1e-14 && (a.u - b.u).abs() < 1e-14);
            assert!((a.h_r - b.h_r).abs() < 1e-13 && (a.u_r - b.u_r).abs() < 1e-13);
        }
        assert!(tab.eval(2.1).h.is_nan());
        assert!(TabulatedProfile::new(vec![(0.0, f(0.0)), (0.0, f(0.0))]).is_none());
    }
}
