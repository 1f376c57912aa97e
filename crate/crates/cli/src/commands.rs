use crate::{Builtin, Cli, Command, Global, Outcome, SimArgs};
use anyhow::{anyhow, bail, Context, Result};
use inwave_core::characteristics::{build_omega_t, trace_path, Family};
use inwave_core::experiment::config::{ScenarioConfig, ScenarioKind};
use inwave_core::experiment::output::{emit_outputs, fmt_f64, omega_table, path_table, snapshot_table};
use inwave_core::experiment::report::HypothesisGate;
use inwave_core::experiment::stationary::{stationary_study, StationarySetup};
use inwave_core::experiment::{
    domain, grid_run, hypothesis_gate, omega_summary, residual_study, run_scenario_from, simulate_grid, trace_options,
    Domain, FieldSource,
};
use inwave_core::gas::GasParams;
use inwave_core::hypotheses::{check_initial_data, weighted_gradients, GeneratedProfile, HypothesisSet};
use inwave_core::identities::verify_all;
use inwave_core::profile::{ProfilePoint, RadialProfile, TabulatedProfile};
use inwave_core::solver::Simulation;
use log::info;
use serde_json::json;
use std::path::{Path, PathBuf};

fn load_config(g: &Global) -> Result<ScenarioConfig> {
    let mut cfg = match &g.config {
        Some(path) => ScenarioConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
        None => match g.scenario {
            Builtin::Canonical => ScenarioConfig::canonical(),
            Builtin::Control => ScenarioConfig::control(),
        },
    };
    if let Some(seed) = g.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(g: &Global, cfg: &ScenarioConfig) -> Result<PathBuf> {
    let dir = g
        .output
        .clone()
        .or_else(|| cfg.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    info!("wrote {}", path.display());
    Ok(())
}

fn write_json<T: serde::Serialize + ?Sized>(dir: &Path, name: &str, v: &T) -> Result<()> {
    write(dir, name, &(serde_json::to_string_pretty(v)? + "\n"))
}

fn outcome(pass: bool) -> Outcome {
    if pass {
        Outcome::Pass
    } else {
        Outcome::Fail
    }
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    let cfg = load_config(&cli.global)?;
    match &cli.command {
        Command::PrintConfig => {
            print!("{}", cfg.to_toml_string()?);
            Ok(Outcome::Pass)
        }
        Command::VerifyIdentities { samples } => verify_identities(&cli.global, cfg, *samples),
        Command::MakeIc => make_ic(&cli.global, &cfg),
        Command::CheckHypotheses { profile } => check_hypotheses(&cli.global, &cfg, profile.as_deref()),
        Command::Simulate(args) => simulate_cmd(&cli.global, cfg, args),
        Command::Trace { sim, family, r, t, t_stop } => trace_cmd(&cli.global, cfg, sim, *family, *r, *t, *t_stop),
        Command::Omega(args) => omega_cmd(&cli.global, cfg, args),
        Command::Certify { store_fields, report_only } => certify(&cli.global, cfg, *store_fields, report_only.as_deref()),
        Command::Convergence { grids, riccati } => convergence(&cli.global, &cfg, grids, *riccati),
    }
}

fn verify_identities(g: &Global, cfg: ScenarioConfig, samples: Option<usize>) -> Result<Outcome> {
    let mut spec = cfg.sample_spec();
    if let Some(n) = samples {
        spec.samples = n;
    }
    info!("checking identities on {} samples", spec.samples);
    let reports = verify_all(&spec);
    for r in &reports {
        println!(
            "{:<28} samples {:>7}  max residual {:.3e}  {}",
            r.identity_id.as_str(),
            r.samples,
            r.max_abs_residual,
            if r.pass { "PASS" } else { "FAIL" }
        );
    }
    write_json(&out_dir(g, &cfg)?, "identities.json", &reports)?;
    Ok(outcome(reports.iter().all(|r| r.pass)))
}

fn print_gate(gate: &HypothesisGate) {
    if let Some(r) = &gate.rejected {
        println!("rejected: {} ({})", r.condition.as_str(), r.detail);
    }
    if let Some(check) = &gate.check {
        for rec in &check.records {
            let waived = gate.waived.contains(&rec.condition);
            let status = match (rec.satisfied, waived) {
                (true, _) => "ok",
                (false, true) => "waived",
                (false, false) => "FAIL",
            };
            println!("{:<22} margin {:>12.4e}  {status}", rec.condition.as_str(), rec.margin);
        }
    }
    println!("hypotheses: {}", if gate.pass { "PASS" } else { "FAIL" });
}

type Accepted = (HypothesisSet, GeneratedProfile);

fn gate(cfg: &ScenarioConfig, params: &GasParams) -> (HypothesisGate, Option<Accepted>) {
    let (gate, accepted) = hypothesis_gate(cfg, params);
    let accepted = accepted.filter(|_| gate.pass);
    (gate, accepted)
}

fn make_ic(g: &Global, cfg: &ScenarioConfig) -> Result<Outcome> {
    let params = cfg.params()?;
    let dir = out_dir(g, cfg)?;
    let (gate, accepted) = gate(cfg, &params);
    print_gate(&gate);
    write_json(&dir, "check.json", &gate)?;
    let Some((hs, profile)) = accepted else {
        return Ok(Outcome::Fail);
    };
    write(&dir, "hypotheses.toml", &toml::to_string(&hs)?)?;
    let grid = domain(cfg, &hs).grid(cfg.solver.n)?;
    let hash = cfg.hash()?;
    let mut text = format!("# config_hash={hash}\n");
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["r", "h", "u", "h_r", "u_r", "alpha_t", "beta_t"])?;
    for r in grid.radii() {
        let p = profile.eval(r);
        let (a, b) = weighted_gradients(r, &p, &params)?;
        w.write_record([r, p.h, p.u, p.h_r, p.u_r, a, b].map(fmt_f64))?;
    }
    text.push_str(std::str::from_utf8(&w.into_inner()?)?);
    write(&dir, "profile.csv", &text)?;
    Ok(Outcome::Pass)
}

fn read_profile(path: &Path) -> Result<TabulatedProfile> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| anyhow!("{} has no `{name}` column", path.display()))
    };
    let idx = [col("r")?, col("h")?, col("u")?, col("h_r")?, col("u_r")?];
    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let mut v = [0.0; 5];
        for (k, &i) in idx.iter().enumerate() {
            let cell = rec.get(i).ok_or_else(|| anyhow!("row {}: missing column", line + 1))?;
            v[k] = cell.parse().with_context(|| format!("row {}: `{cell}`", line + 1))?;
        }
        rows.push((v[0], ProfilePoint { h: v[1], u: v[2], h_r: v[3], u_r: v[4] }));
    }
    TabulatedProfile::new(rows).ok_or_else(|| anyhow!("{}: need two or more rows with increasing r", path.display()))
}

fn check_hypotheses(g: &Global, cfg: &ScenarioConfig, profile: Option<&Path>) -> Result<Outcome> {
    let params = cfg.params()?;
    let dir = out_dir(g, cfg)?;
    let (mut gate, _) = hypothesis_gate(cfg, &params);
    if let (Some(path), Some(hs)) = (profile, gate.constants) {
        let table = read_profile(path)?;
        let check = check_initial_data(&table, &hs, &params, cfg.diagnostics.check_samples)?;
        gate.rejected = None;
        gate.pass = check.records.iter().all(|r| r.satisfied || gate.waived.contains(&r.condition));
        gate.check = Some(check);
    }
    print_gate(&gate);
    write_json(&dir, "check.json", &gate)?;
    Ok(outcome(gate.pass))
}

fn apply(cfg: &mut ScenarioConfig, a: &SimArgs) {
    let s = &mut cfg.solver;
    if let Some(n) = a.n {
        s.n = n;
    }
    s.cfl = a.cfl.unwrap_or(s.cfl);
    s.pad_left = a.pad_left.or(s.pad_left);
    s.pad_right = a.pad_right.or(s.pad_right);
    s.stride = a.stride.or(s.stride);
    s.trigger_ceiling = a.trigger_ceiling.or(s.trigger_ceiling);
}

struct Single {
    params: GasParams,
    hs: HypothesisSet,
    dom: Domain,
    sim: Simulation,
}

/// Hypothesis gate plus one simulated grid; `None` when the gate rejects.
fn simulate_single(cfg: &mut ScenarioConfig, a: &SimArgs) -> Result<Option<Single>> {
    apply(cfg, a);
    if cfg.solver.n < 16 || !(cfg.solver.cfl > 0.0 && cfg.solver.cfl <= 1.0) {
        bail!("need n >= 16 and cfl in (0, 1]");
    }
    let params = cfg.params()?;
    let (gate, accepted) = gate(cfg, &params);
    let Some((hs, profile)) = accepted else {
        print_gate(&gate);
        return Ok(None);
    };
    let mut dom = domain(cfg, &hs);
    if let Some(t) = a.t_end {
        dom.t_end = t;
    }
    info!("simulating n = {} on [{}, {}] to t = {}", cfg.solver.n, dom.r_min, dom.r_max, dom.t_end);
    let sim = simulate_grid(cfg, &params, &profile, &dom, cfg.solver.n)?;
    info!("stopped at t = {} ({:?})", sim.stop_time, sim.stop_reason);
    Ok(Some(Single { params, hs, dom, sim }))
}

fn simulate_cmd(g: &Global, mut cfg: ScenarioConfig, a: &SimArgs) -> Result<Outcome> {
    let Some(s) = simulate_single(&mut cfg, a)? else {
        return Ok(Outcome::Fail);
    };
    let dir = out_dir(g, &cfg)?;
    let hash = cfg.hash()?;
    write(&dir, "snapshots.csv", &snapshot_table(&s.sim, &s.params, cfg.output.snapshot_every, cfg.output.snapshot_node_stride, &hash))?;
    let meta = json!({
        "config_hash": hash,
        "params": s.params,
        "r_min": s.dom.r_min,
        "r_max": s.dom.r_max,
        "t_end": s.dom.t_end,
        "run": grid_run(cfg.solver.n, &s.sim),
    });
    write_json(&dir, "run.json", &meta)?;
    println!("stop reason {:?} at t = {}", s.sim.stop_reason, fmt_f64(s.sim.stop_time));
    Ok(Outcome::Pass)
}

fn trace_cmd(
    g: &Global,
    mut cfg: ScenarioConfig,
    a: &SimArgs,
    family: u8,
    r: Option<f64>,
    t: f64,
    t_stop: Option<f64>,
) -> Result<Outcome> {
    let family = match family {
        1 => Family::One,
        2 => Family::Two,
        other => bail!("family must be 1 or 2, got {other}"),
    };
    let Some(s) = simulate_single(&mut cfg, a)? else {
        return Ok(Outcome::Fail);
    };
    let start = (r.unwrap_or(s.hs.geometry.r_star), t);
    let stop = t_stop.unwrap_or_else(|| s.sim.field.t_end());
    let path = trace_path(&s.sim.field, &s.params, family, start, stop, &trace_options(&cfg))?;
    println!("{} samples, ended at t = {} ({:?})", path.samples.len(), fmt_f64(path.t_end()), path.termination);
    let dir = out_dir(g, &cfg)?;
    write(&dir, "trace.csv", &path_table(std::slice::from_ref(&path), &s.params, &cfg.hash()?))?;
    Ok(Outcome::Pass)
}

fn omega_cmd(g: &Global, mut cfg: ScenarioConfig, a: &SimArgs) -> Result<Outcome> {
    let Some(s) = simulate_single(&mut cfg, a)? else {
        return Ok(Outcome::Fail);
    };
    let geo = &s.hs.geometry;
    let om = build_omega_t(&s.sim.field, &s.params, geo.r1, geo.r2, s.hs.t_tilde, s.hs.t, &trace_options(&cfg))?;
    let summary = omega_summary(&om, &s.hs);
    println!(
        "extent {} bound by {:?}, t_m {}",
        fmt_f64(summary.extent),
        summary.binding,
        summary.t_m.map_or("beyond the field".into(), fmt_f64)
    );
    let dir = out_dir(g, &cfg)?;
    write(&dir, "omega.csv", &omega_table(&om, &cfg.hash()?))?;
    write_json(&dir, "omega.json", &summary)?;
    Ok(outcome(summary.t_within_t_m))
}

fn certify(g: &Global, mut cfg: ScenarioConfig, store_fields: bool, report_only: Option<&Path>) -> Result<Outcome> {
    cfg.output.store_fields |= store_fields;
    let fields = report_only.map(|d| if d.join("fields").is_dir() { d.join("fields") } else { d.to_path_buf() });
    let source = fields.as_deref().map_or(FieldSource::Simulate, FieldSource::Stored);
    info!("running scenario `{}` ({:?})", cfg.name, cfg.kind);
    let run = run_scenario_from(&cfg, source)?;
    let dir = out_dir(g, &cfg)?;
    let files = emit_outputs(&run.report, run.artifacts.as_ref(), &cfg, &dir)?;
    info!("wrote {} files to {}", files.len(), dir.display());
    let r = &run.report;
    if let Some(stage) = r.halted_at {
        println!("halted at {stage:?}");
    }
    if let Some(h) = &r.hypotheses {
        if let Some(rej) = &h.rejected {
            println!("hypotheses rejected: {} ({})", rej.condition.as_str(), rej.detail);
        }
    }
    if let Some(l) = &r.lemma {
        for row in &l.rows {
            println!("bound {:<8} margin {:>12}  estimate {:>12}  {}", row.bound.name(), fmt_f64(row.margin), fmt_f64(row.estimate), pass_str(row.pass));
        }
    }
    if let Some(t) = &r.theorem {
        println!(
            "trigger {} vs window {} (+{}), bound check {} of {} points, {}",
            t.trigger_time.map_or("none".into(), fmt_f64),
            fmt_f64(t.window),
            fmt_f64(t.store_interval),
            t.bound.checked_points,
            t.bound.points,
            pass_str(t.pass)
        );
    }
    if let Some(c) = &r.convergence {
        println!("residual orders {:?}, finest {}, {}", c.orders, fmt_f64(c.finest_max), pass_str(c.pass));
    }
    if let Some(c) = &r.control {
        println!("control stopped {:?} at {} of {}, {}", c.stop_reason, fmt_f64(c.stop_time), fmt_f64(c.t), pass_str(c.pass));
    }
    println!("scenario `{}`: {}", cfg.name, pass_str(r.pass));
    Ok(outcome(r.pass))
}

fn pass_str(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn convergence(g: &Global, cfg: &ScenarioConfig, grids: &[usize], riccati: bool) -> Result<Outcome> {
    let params = cfg.params()?;
    let setup = StationarySetup::default();
    let study = stationary_study(&params, &setup, grids)?;
    let inv = study.grids.iter().map(|g| g.invariant_drift.0.max(g.invariant_drift.1)).fold(0.0, f64::max);
    let min_order = study.orders.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut pass = inv <= 1e-10 && min_order >= 3.5 && study.constant_spread <= 2.0;
    println!("stationary: drift orders {:?}, invariant drift {:.2e}, dr^4 constant spread {:.3}", study.orders, inv, study.constant_spread);

    let mut residuals = None;
    if riccati {
        if cfg.kind != ScenarioKind::Certify {
            bail!("the residual study needs a certify scenario");
        }
        let (gate, accepted) = gate(cfg, &params);
        let Some((hs, profile)) = accepted else {
            print_gate(&gate);
            return Ok(Outcome::Fail);
        };
        let dom = domain(cfg, &hs);
        let mut runs = Vec::new();
        for &n in &cfg.solver.refinement {
            info!("simulating n = {n}");
            runs.push((n, simulate_grid(cfg, &params, &profile, &dom, n)?));
        }
        let app = residual_study(cfg, &runs, &hs, &params, &trace_options(cfg))?;
        println!("riccati: orders {:?}, finest max {:.3e}, paths {}", app.orders, app.finest_max, app.paths_used);
        pass &= app.pass;
        residuals = Some(app);
    }
    let dir = out_dir(g, cfg)?;
    write_json(&dir, "convergence.json", &json!({ "config_hash": cfg.hash()?, "stationary": study, "riccati": residuals }))?;
    Ok(outcome(pass))
}
