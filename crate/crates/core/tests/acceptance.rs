//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use inwave_core::experiment::config::ScenarioConfig;
use inwave_core::experiment::output::emit_outputs;
use inwave_core::experiment::report::Stage;
use inwave_core::experiment::stationary::{stationary_study, StationarySetup};
use inwave_core::experiment::{run_scenario, ScenarioRun};
use inwave_core::gas::GasParams;
use inwave_core::identities::{verify_all, SampleSpec};
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

struct Line {
    id: u32,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn identities() -> Line {
    let spec = SampleSpec { samples: 10_000, ..SampleSpec::default() };
    let start = Instant::now();
    let reports = verify_all(&spec);
    let elapsed = start.elapsed();
    let worst = reports.iter().map(|r| r.max_abs_residual).fold(0.0, f64::max);
    let samples = reports.iter().map(|r| r.samples).min().unwrap_or(0);
    let gamma3 = reports.iter().all(|r| r.gamma_three_samples > 0);
    let pass = reports.len() == 4
        && reports.iter().all(|r| r.pass)
        && worst <= 1e-11
        && samples >= 10_000
        && gamma3
        && spec.gamma_max >= 7.0
        && elapsed <= Duration::from_secs(10);
    Line {
        id: 1,
        name: "identity suite",
        pass,
        detail: format!(
            "4 identities, max residual {worst:.2e} <= 1e-11, min samples {samples}, gamma=3 family sampled {gamma3}, {:.2}s <= 10s",
            elapsed.as_secs_f64()
        ),
    }
}

fn stationary() -> Line {
    let params = GasParams::new(3.0, 1.0, 1).unwrap();
    let start = Instant::now();
    let study = match stationary_study(&params, &StationarySetup::default(), &[256, 512, 1024]) {
        Ok(s) => s,
        Err(e) => return Line { id: 2, name: "stationary oracle", pass: false, detail: e.to_string() },
    };
    let elapsed = start.elapsed();
    let inv = study.grids.iter().map(|g| g.invariant_drift.0.max(g.invariant_drift.1)).fold(0.0, f64::max);
    let min_order = study.orders.iter().cloned().fold(f64::INFINITY, f64::min);
    let decreasing = study.grids.windows(2).all(|w| w[1].drift < w[0].drift);
    let pass = inv <= 1e-10 && decreasing && min_order >= 3.5 && study.constant_spread <= 2.0 && elapsed <= Duration::from_secs(60);
    Line {
        id: 2,
        name: "stationary oracle",
        pass,
        detail: format!(
            "invariant drift {inv:.2e} <= 1e-10, drift orders {:?} >= 3.5, |alpha|,|beta|/dr^4 spread {:.2} <= 2, {:.2}s <= 60s",
            study.orders.iter().map(|o| (o * 100.0).round() / 100.0).collect::<Vec<_>>(),
            study.constant_spread,
            elapsed.as_secs_f64()
        ),
    }
}

fn convergence(run: &ScenarioRun) -> Line {
    let Some(c) = run.report.convergence.as_ref() else {
        return Line { id: 3, name: "Riccati cross-check", pass: false, detail: "no convergence appendix".into() };
    };
    let pass = c.paths_used >= 5 && c.min_order >= 2.0 && c.finest_max <= 1e-3 && c.pass;
    Line {
        id: 3,
        name: "Riccati cross-check",
        pass,
        detail: format!(
            "{} family-1 paths, grids {:?}, orders {:?} >= 2, finest max {:.2e} <= 1e-3 (units N^2 h_hi^-lambda) before t = {:.4e}",
            c.paths_used,
            c.grids.iter().map(|g| g.n).collect::<Vec<_>>(),
            c.orders.iter().map(|o| (o * 100.0).round() / 100.0).collect::<Vec<_>>(),
            c.finest_max,
            c.cutoff
        ),
    }
}

fn lemma(run: &ScenarioRun, elapsed: Duration, n: usize) -> Line {
    let Some(l) = run.report.lemma.as_ref() else {
        return Line { id: 4, name: "invariant region", pass: false, detail: "no lemma table".into() };
    };
    let margins: Vec<String> = l.rows.iter().map(|r| format!("{}={:.3}", r.bound.name(), r.margin)).collect();
    let pass = l.pass && l.rows.len() == 5 && elapsed <= Duration::from_secs(300) && n <= 16384;
    Line {
        id: 4,
        name: "invariant region",
        pass,
        detail: format!(
            "{} grid points in the region, margins [{}], all > -3x estimate, full run {:.1}s <= 300s at n={n}",
            l.points,
            margins.join(", "),
            elapsed.as_secs_f64()
        ),
    }
}

fn theorem(run: &ScenarioRun) -> Line {
    let Some(t) = run.report.theorem.as_ref() else {
        return Line { id: 5, name: "blow-up time", pass: false, detail: "no theorem record".into() };
    };
    let b = &t.bound;
    Line {
        id: 5,
        name: "blow-up time",
        pass: t.pass && t.trigger_within_window && b.pass && t.window_within_t,
        detail: format!(
            "(a) trigger {} <= 1/N + dt_store = {:.4e}; (b) {} of {} points checked to t = {:.4e}, min slack {:.2e} >= 0, max tolerance {:.2e}; (c) 1/N = {:.4e} <= T = {:.4e}",
            t.trigger_time.map_or("none".into(), |x| format!("{x:.4e}")),
            t.window + t.store_interval,
            b.checked_points,
            b.points,
            b.resolution_limit,
            b.min_slack,
            b.max_tolerance,
            t.window,
            t.t
        ),
    }
}

fn controls() -> Line {
    let mut ctl = ScenarioConfig::control();
    ctl.identities.enabled = false;
    let mut bad = ScenarioConfig::canonical();
    bad.identities.enabled = false;
    bad.bands.beta_bar = 60.0;
    match (run_scenario(&ctl), run_scenario(&bad)) {
        (Ok(c), Ok(b)) => {
            let rec = c.report.control.as_ref();
            let completed = rec.is_some_and(|r| r.pass);
            let rejected = b.report.halted_at == Some(Stage::Hypotheses)
                && !b.report.stages_run.contains(&Stage::Simulate)
                && b.report.simulation.is_none();
            let condition = b.report.hypotheses.as_ref().and_then(|g| g.rejected.as_ref()).map(|r| r.condition.as_str());
            Line {
                id: 6,
                name: "negative controls",
                pass: completed && rejected,
                detail: format!(
                    "control stopped {:?} at t = {:.4e} (T = {:.4e}); beta_bar below floor halted at hypotheses ({}) with no simulation",
                    rec.map(|r| &r.stop_reason),
                    rec.map_or(f64::NAN, |r| r.stop_time),
                    rec.map_or(f64::NAN, |r| r.t),
                    condition.unwrap_or("none")
                ),
            }
        }
        (a, b) => Line {
            id: 6,
            name: "negative controls",
            pass: false,
            detail: format!("control: {:?}, violating: {:?}", a.err(), b.err()),
        },
    }
}

fn same_files(a: &Path, b: &Path) -> Result<usize, String> {
    let mut count = 0;
    for entry in std::fs::read_dir(a).map_err(|e| e.to_string())? {
        let name = entry.map_err(|e| e.to_string())?.file_name();
        let pa = a.join(&name);
        if !pa.is_file() {
            continue;
        }
        let x = std::fs::read(&pa).map_err(|e| e.to_string())?;
        let y = std::fs::read(b.join(&name)).map_err(|e| format!("{name:?}: {e}"))?;
        if x != y {
            return Err(format!("{name:?} differs"));
        }
        count += 1;
    }
    Ok(count)
}

fn determinism(cfg: &ScenarioConfig, first: &ScenarioRun) -> Line {
    let line = |pass, detail| Line { id: 7, name: "determinism", pass, detail };
    let (Ok(da), Ok(db)) = (tempfile::tempdir(), tempfile::tempdir()) else {
        return line(false, "cannot create output directories".into());
    };
    let second = match run_scenario(cfg) {
        Ok(r) => r,
        Err(e) => return line(false, e.to_string()),
    };
    if let Err(e) = emit_outputs(&first.report, first.artifacts.as_ref(), cfg, da.path())
        .and_then(|_| emit_outputs(&second.report, second.artifacts.as_ref(), cfg, db.path()))
    {
        return line(false, e.to_string());
    }
    match same_files(da.path(), db.path()) {
        Ok(n) => line(n >= 8, format!("{n} report files byte-identical across two runs (config hash {})", &first.report.config_hash[..16])),
        Err(e) => line(false, e),
    }
}

fn main() -> ExitCode {
    let mut lines = vec![identities(), stationary()];
    let cfg = ScenarioConfig::canonical();
    let start = Instant::now();
    match run_scenario(&cfg) {
        Ok(run) => {
            let elapsed = start.elapsed();
            lines.push(convergence(&run));
            lines.push(lemma(&run, elapsed, cfg.solver.n));
            lines.push(theorem(&run));
            lines.push(controls());
            lines.push(determinism(&cfg, &run));
        }
        Err(e) => {
            for (id, name) in [(3, "Riccati cross-check"), (4, "invariant region"), (5, "blow-up time")] {
                lines.push(Line { id, name, pass: false, detail: format!("canonical run failed: {e}") });
            }
            lines.push(controls());
            lines.push(Line { id: 7, name: "determinism", pass: false, detail: "canonical run failed".into() });
        }
    }
    let mut all = true;
    for l in &lines {
        println!("[{}] criterion {} {}: {}", if l.pass { "PASS" } else { "FAIL" }, l.id, l.name, l.detail);
        all &= l.pass;
    }
    println!("acceptance: {} of {} criteria pass", lines.iter().filter(|l| l.pass).count(), lines.len());
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
