use inwave_core::experiment::stationary::{stationary_study, StationarySetup};
use inwave_core::gas::GasParams;
use inwave_core::profile::ProfilePoint;
use inwave_core::solver::*;
use std::f64::consts::PI;
use std::sync::Arc;

fn p3() -> GasParams {
    GasParams::new(3.0, 1.0, 1).unwrap()
}

#[test]
fn stationary_drift_converges_at_fourth_order() {
    let study = stationary_study(&p3(), &StationarySetup::default(), &[256, 512, 1024]).unwrap();
    for g in &study.grids {
        assert!(g.invariant_drift.0 <= 1e-10 && g.invariant_drift.1 <= 1e-10, "{:?}", g.invariant_drift);
    }
    assert!(study.orders.iter().all(|&p| p >= 3.5), "orders {:?}", study.orders);
    assert!(study.constant_spread < 2.0, "spread {}", study.constant_spread);
}

#[test]
fn stationary_study_other_gammas_converge() {
    for gamma in [5.0 / 3.0, 5.0] {
        let p = GasParams::new(gamma, 1.0, 2).unwrap();
        let study = stationary_study(&p, &StationarySetup::default(), &[128, 256, 512]).unwrap();
        assert!(study.orders.iter().all(|&q| q >= 3.5), "gamma {gamma}: {:?}", study.orders);
    }
}

struct Manufactured {
    params: GasParams,
}

impl Manufactured {
    fn h(&self, r: f64, t: f64) -> (f64, f64, f64) {
        let a = 2.0 * PI * (r - t);
        (0.5 + 0.05 * a.sin(), 0.1 * PI * a.cos(), -0.1 * PI * a.cos())
    }

    fn u(&self, r: f64, t: f64) -> (f64, f64, f64) {
        let a = 2.0 * PI * (r + t);
        (-3.0 + 0.1 * a.cos(), -0.2 * PI * a.sin(), -0.2 * PI * a.sin())
    }

    /// `(value, r-derivative, t-derivative)` for both fields.
    fn forcing(&self, r: f64, t: f64) -> (f64, f64) {
        let (h, h_r, h_t) = self.h(r, t);
        let (u, u_r, u_t) = self.u(r, t);
        let half = 0.5 * (self.params.gamma - 1.0);
        let m = self.params.m_f64();
        let rhs_h = -u * h_r - half * h * u_r - half * m * u * h / r;
        let rhs_u = -u * u_r - self.params.kappa() * h * h_r;
        (h_t - rhs_h, u_t - rhs_u)
    }
}

fn mms_error(n: usize, gamma: f64) -> f64 {
    let params = GasParams::new(gamma, 1.0, 1).unwrap();
    let grid = Grid::new(1.0, 2.0, n).unwrap();
    let mms = Arc::new(Manufactured { params });
    let m0 = mms.clone();
    let ic = build_initial_field(
        &|r: f64| {
            let (h, h_r, _) = m0.h(r, 0.0);
            let (u, u_r, _) = m0.u(r, 0.0);
            ProfilePoint { h, u, h_r, u_r }
        },
        &grid,
    )
    .unwrap();
    let mf = mms.clone();
    let mb = mms.clone();
    let controls = SimControls {
        t_end: 0.1,
        forcing: Some(Arc::new(move |r, t| mf.forcing(r, t))),
        inflow: InflowBoundary::Prescribed(Arc::new(move |r, t| {
            let (h, _, h_t) = mb.h(r, t);
            let (u, _, u_t) = mb.u(r, t);
            [h, u, h_t, u_t]
        })),
        ..Default::default()
    };
    let sim = simulate(&ic, &grid, &params, &controls).unwrap();
    assert_eq!(sim.stop_reason, StopReason::Completed);
    let last = &sim.field.frames().last().unwrap().snapshot;
    assert_eq!(last.t, 0.1);
    (0..n)
        .map(|i| {
            let r = grid.r(i);
            (last.h[i] - mms.h(r, 0.1).0).abs().max((last.u[i] - mms.u(r, 0.1).0).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn manufactured_solution_converges_at_fourth_order() {
    for gamma in [3.0, 1.4] {
        let e: Vec<f64> = [64, 128, 256].iter().map(|&n| mms_error(n, gamma)).collect();
        for w in e.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order >= 3.5, "gamma {gamma}: errors {e:?}");
        }
    }
}

fn wavy(r: f64) -> ProfilePoint {
    let a = 2.0 * PI * r;
    ProfilePoint { h: 0.6 + 0.05 * a.sin(), u: -3.0 + 0.05 * a.cos(), h_r: 0.1 * PI * a.cos(), u_r: -0.1 * PI * a.sin() }
}

/// Relative mismatch between the mass change over the evolved nodes and the
/// time-integrated boundary flux. The data is stationary near the held
/// inflow nodes, so the boundary is compatible with the interior.
fn mass_mismatch(n: usize) -> f64 {
    let params = p3();
    let grid = Grid::new(1.0, 2.0, n).unwrap();
    let last = grid.n - 1 - INFLOW_NODES;
    let sub = Grid::new(grid.r_min, grid.r(last), last + 1).unwrap();
    let st = stationary_profile(1.0, 0.5, -3.0, &grid, &params).unwrap();
    let bumped = |r: f64| {
        let (h, u) = st.state_at(r).unwrap();
        let x = (r - 1.5) / 0.08;
        let b = 0.02 * (-x * x).exp();
        ProfilePoint { h: h + b, u: u - b, h_r: 0.0, u_r: 0.0 }
    };
    let ic = build_initial_field(&bumped, &grid).unwrap();
    let controls = SimControls { t_end: 0.05, stride: Some(1), ..Default::default() };
    let sim = simulate(&ic, &grid, &params, &controls).unwrap();
    let frames = sim.field.frames();
    let net = |f: &Frame| {
        mass_flux(&f.snapshot, &grid, &params, 0).unwrap() - mass_flux(&f.snapshot, &grid, &params, last).unwrap()
    };
    let mass = |f: &Frame| {
        let s = &f.snapshot;
        let cut = FieldSnapshot { t: s.t, h: s.h[..=last].to_vec(), u: s.u[..=last].to_vec() };
        total_mass(&cut, &sub, &params).unwrap()
    };
    let mut inflow = 0.0;
    for w in frames.windows(2) {
        inflow += 0.5 * (w[1].snapshot.t - w[0].snapshot.t) * (net(&w[0]) + net(&w[1]));
    }
    let m0 = mass(&frames[0]);
    (mass(&frames[frames.len() - 1]) - m0 - inflow).abs() / m0
}

#[test]
fn mass_changes_only_by_boundary_flux() {
    let coarse = mass_mismatch(515);
    let fine = mass_mismatch(1027);
    assert!(fine < 1e-11, "relative mismatch {fine}");
    assert!((coarse / fine).log2() > 3.5, "{coarse} -> {fine}");
}

#[test]
fn sound_speed_stays_positive() {
    let params = p3();
    let grid = Grid::new(1.0, 2.0, 257).unwrap();
    let ic = build_initial_field(&wavy, &grid).unwrap();
    let sim = simulate(&ic, &grid, &params, &SimControls { t_end: 0.1, ..Default::default() }).unwrap();
    assert_eq!(sim.stop_reason, StopReason::Completed);
    for f in sim.field.frames() {
        assert!(f.snapshot.h.iter().all(|&h| h > 0.0));
    }
}

#[test]
fn reruns_are_bit_identical() {
    let params = p3();
    let grid = Grid::new(1.0, 2.0, 200).unwrap();
    let ic = build_initial_field(&wavy, &grid).unwrap();
    let c = SimControls { t_end: 0.02, ..Default::default() };
    let a = simulate(&ic, &grid, &params, &c).unwrap();
    let b = simulate(&ic, &grid, &params, &c).unwrap();
    assert_eq!(a.field.frames(), b.field.frames());
}

#[test]
fn stored_snapshots_rebuild_the_same_field() {
    let params = p3();
    let grid = Grid::new(1.0, 2.0, 200).unwrap();
    let ic = build_initial_field(&wavy, &grid).unwrap();
    let sim = simulate(&ic, &grid, &params, &SimControls { t_end: 0.02, ..Default::default() }).unwrap();
    let snaps = sim.field.frames().iter().map(|f| f.snapshot.clone()).collect();
    let rebuilt = field_from_snapshots(&grid, &params, snaps).unwrap();
    assert_eq!(rebuilt.frames(), sim.field.frames());
}

#[test]
fn steep_compression_fires_the_trigger() {
    let params = p3();
    let grid = Grid::new(1.0, 2.0, 513).unwrap();
    // Opposite signs of u_r and h_r drive β negative.
    let steep = |r: f64| {
        let x = (r - 1.5) / 0.05;
        let s = 20.0 / x.cosh().powi(2);
        ProfilePoint { h: 0.6 + 0.1 * x.tanh(), u: -3.0 - 0.3 * x.tanh(), h_r: 0.1 * s, u_r: -0.3 * s }
    };
    let ic = build_initial_field(&steep, &grid).unwrap();
    let sim = simulate(&ic, &grid, &params, &SimControls { t_end: 1.0, trigger_factor: 20.0, ..Default::default() }).unwrap();
    assert!(matches!(sim.stop_reason, StopReason::BlowUpTrigger { .. }), "{:?}", sim.stop_reason);
    assert!(sim.stop_time < 1.0);
}
