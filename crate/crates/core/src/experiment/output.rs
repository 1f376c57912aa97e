//! Report files of a scenario run. Every file records the config hash;
//! numbers are written as shortest round-trip decimals so that reruns are
//! byte-identical.

use super::config::ScenarioConfig;
use super::report::CertificationReport;
use super::{store, Artifacts, ExperimentError, Result};
use crate::characteristics::{CharPath, OmegaT, Quantity};
use crate::gas::{density_from_sound_speed, GasParams};
use crate::solver::Simulation;
use serde::Serialize;
use std::path::{Path, PathBuf};

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io { path: path.display().to_string(), source }
}

struct Table {
    text: String,
}

impl Table {
    fn new(hash: &str, header: &[&str]) -> Self {
        let mut text = format!("# config_hash={hash}\n");
        text.push_str(&header.join(","));
        text.push('\n');
        Self { text }
    }

    fn row(&mut self, cells: &[String]) {
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }
}

fn write_file(dir: &Path, name: &str, contents: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(io_err(&path))?;
    written.push(path);
    Ok(())
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("report types serialize") + "\n"
}

#[derive(Serialize)]
struct Metadata<'a> {
    config_hash: &'a str,
    scenario: &'a str,
    seed: u64,
    version: &'a str,
    pass: bool,
    grids: Vec<usize>,
    files: Vec<String>,
}

/// Writes the report, metadata and, when a simulation ran, the data
/// tables. Returns the files written.
pub fn emit_outputs(
    report: &CertificationReport,
    artifacts: Option<&Artifacts>,
    cfg: &ScenarioConfig,
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let hash = report.config_hash.as_str();
    let mut written = Vec::new();
    write_file(dir, "config.toml", &cfg.to_toml_string()?, &mut written)?;
    write_file(dir, "report.json", &json(report), &mut written)?;
    if let Some(art) = artifacts {
        write_file(dir, "snapshots.csv", &snapshots_csv(art, cfg, hash), &mut written)?;
        write_file(dir, "paths.csv", &paths_csv(art, hash), &mut written)?;
        if let Some(text) = omega_csv(art, hash) {
            write_file(dir, "omega.csv", &text, &mut written)?;
        }
        if !art.bound_rows.is_empty() {
            write_file(dir, "bound.csv", &bound_csv(art, hash), &mut written)?;
        }
        if let Some(c) = &report.convergence {
            let mut t = Table::new(hash, &["n", "start_r", "samples", "max_residual"]);
            for g in &c.grids {
                for p in &g.paths {
                    t.row(&[g.n.to_string(), fmt_f64(p.start_r), p.samples.to_string(), fmt_f64(p.max_residual)]);
                }
            }
            write_file(dir, "convergence.csv", &t.text, &mut written)?;
        }
        if cfg.output.store_fields {
            let fields = dir.join("fields");
            for (n, sim) in &art.runs {
                store::write_run(&fields, hash, *n, sim)?;
                written.push(fields.join(format!("n{n}.bin")));
                written.push(fields.join(format!("n{n}.json")));
            }
        }
    }
    let files = written
        .iter()
        .map(|p| p.strip_prefix(dir).unwrap_or(p).display().to_string())
        .collect();
    let meta = Metadata {
        config_hash: hash,
        scenario: &report.scenario,
        seed: report.seed,
        version: env!("CARGO_PKG_VERSION"),
        pass: report.pass,
        grids: artifacts.map(|a| a.runs.iter().map(|(n, _)| *n).collect()).unwrap_or_default(),
        files,
    };
    write_file(dir, "metadata.json", &json(&meta), &mut written)?;
    Ok(written)
}

fn snapshots_csv(art: &Artifacts, cfg: &ScenarioConfig, hash: &str) -> String {
    snapshot_table(art.primary_run(), &art.params, cfg.output.snapshot_every, cfg.output.snapshot_node_stride, hash)
}

/// Every `every`-th stored frame plus the last, every `stride`-th node.
pub fn snapshot_table(sim: &Simulation, params: &GasParams, every: usize, stride: usize, hash: &str) -> String {
    let frames = sim.field.frames();
    let grid = sim.field.grid;
    let mut t = Table::new(hash, &["t", "r", "h", "u", "rho"]);
    for (k, f) in frames.iter().enumerate() {
        if k % every.max(1) != 0 && k + 1 != frames.len() {
            continue;
        }
        let s = &f.snapshot;
        for i in (0..grid.n).step_by(stride.max(1)) {
            let rho = density_from_sound_speed(s.h[i], params).unwrap_or(f64::NAN);
            t.row(&[fmt_f64(s.t), fmt_f64(grid.r(i)), fmt_f64(s.h[i]), fmt_f64(s.u[i]), fmt_f64(rho)]);
        }
    }
    t.text
}

fn omega_csv(art: &Artifacts, hash: &str) -> Option<String> {
    art.omega.as_ref().map(|om| omega_table(om, hash))
}

/// Both boundaries of the region at the left boundary's sample times.
pub fn omega_table(om: &OmegaT, hash: &str) -> String {
    let mut t = Table::new(hash, &["t", "left", "right"]);
    for s in &om.left.samples {
        if s.t > om.extent {
            break;
        }
        let right = om.right_at(s.t).map_or(f64::NAN, |r| r);
        t.row(&[fmt_f64(s.t), fmt_f64(s.r), fmt_f64(right)]);
    }
    t.text
}

fn paths_csv(art: &Artifacts, hash: &str) -> String {
    path_table(&art.paths, &art.params, hash)
}

/// Column order of the per-path series.
pub const PATH_QUANTITIES: [Quantity; 10] = [
    Quantity::H,
    Quantity::U,
    Quantity::C1,
    Quantity::C2,
    Quantity::W,
    Quantity::Z,
    Quantity::Alpha,
    Quantity::Beta,
    Quantity::AlphaTilde,
    Quantity::BetaTilde,
];

pub fn path_table(paths: &[CharPath], params: &GasParams, hash: &str) -> String {
    let mut header = vec!["path", "family", "start_r", "start_t", "t", "r"];
    header.extend(PATH_QUANTITIES.iter().map(|q| q.name()));
    let mut t = Table::new(hash, &header);
    for (j, p) in paths.iter().enumerate() {
        for s in &p.samples {
            let mut cells = vec![
                j.to_string(),
                p.family.index().to_string(),
                fmt_f64(p.start.0),
                fmt_f64(p.start.1),
                fmt_f64(s.t),
                fmt_f64(s.r),
            ];
            cells.extend(PATH_QUANTITIES.iter().map(|q| fmt_f64(q.of(s, params))));
            t.row(&cells);
        }
    }
    t.text
}

fn bound_csv(art: &Artifacts, hash: &str) -> String {
    let mut t = Table::new(hash, &["t", "bound", "observed", "margin", "tolerance", "checked"]);
    for r in &art.bound_rows {
        let checked = u8::from(r.checked).to_string();
        t.row(&[fmt_f64(r.t), fmt_f64(r.bound), fmt_f64(r.observed), fmt_f64(r.margin), fmt_f64(r.tolerance), checked]);
    }
    t.text
}
