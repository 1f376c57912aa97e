//! Binary storage of simulated fields for report-only reruns.
//!
//! Each grid gets `n<size>.bin` with the stored `(h, u)` snapshots and
//! `n<size>.json` with the run summary. Time derivatives are recomputed on
//! load by the same routine the solver uses, so a reloaded field is
//! bit-identical to the original.

use super::config::ScenarioConfig;
use super::{Domain, ExperimentError, Result};
use crate::gas::GasParams;
use crate::solver::{field_from_snapshots, FieldSnapshot, Simulation, StopReason};
use serde::{Deserialize, Serialize};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 8] = b"INWFLD01";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RunMeta {
    config_hash: String,
    n: usize,
    r_min: f64,
    r_max: f64,
    stop_reason: StopReason,
    stop_time: f64,
    steps: usize,
    stride: usize,
    initial_max_gradient: f64,
    ceiling: f64,
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io { path: path.display().to_string(), source }
}

pub fn write_run(dir: &Path, config_hash: &str, n: usize, sim: &Simulation) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let grid = sim.field.grid;
    let meta = RunMeta {
        config_hash: config_hash.to_string(),
        n,
        r_min: grid.r_min,
        r_max: grid.r_max,
        stop_reason: sim.stop_reason.clone(),
        stop_time: sim.stop_time,
        steps: sim.steps,
        stride: sim.stride,
        initial_max_gradient: sim.initial_max_gradient,
        ceiling: sim.ceiling,
    };
    let meta_path = dir.join(format!("n{n}.json"));
    let text = serde_json::to_string_pretty(&meta).expect("run metadata serializes");
    std::fs::write(&meta_path, text + "\n").map_err(io_err(&meta_path))?;

    let bin_path = dir.join(format!("n{n}.bin"));
    let file = std::fs::File::create(&bin_path).map_err(io_err(&bin_path))?;
    let mut w = BufWriter::new(file);
    let frames = sim.field.frames();
    let mut put = |bytes: &[u8]| w.write_all(bytes).map_err(io_err(&bin_path));
    put(MAGIC)?;
    put(&(grid.n as u64).to_le_bytes())?;
    put(&(frames.len() as u64).to_le_bytes())?;
    for f in frames {
        put(&f.snapshot.t.to_le_bytes())?;
        for v in f.snapshot.h.iter().chain(&f.snapshot.u) {
            put(&v.to_le_bytes())?;
        }
    }
    w.flush().map_err(io_err(&bin_path))
}

fn read_u64(r: &mut impl Read, path: &Path) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(io_err(path))?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read, path: &Path) -> Result<f64> {
    Ok(f64::from_bits(read_u64(r, path)?))
}

pub fn read_run(dir: &Path, config_hash: &str, n: usize, dom: &Domain, params: &GasParams) -> Result<Simulation> {
    let meta_path = dir.join(format!("n{n}.json"));
    let text = std::fs::read_to_string(&meta_path).map_err(io_err(&meta_path))?;
    let meta: RunMeta = serde_json::from_str(&text).map_err(|e| ExperimentError::Store(format!("{}: {e}", meta_path.display())))?;
    if meta.config_hash != config_hash {
        return Err(ExperimentError::Store(format!(
            "{} was written for config {} but the current config hashes to {config_hash}",
            meta_path.display(),
            meta.config_hash
        )));
    }
    if meta.n != n || meta.r_min != dom.r_min || meta.r_max != dom.r_max {
        return Err(ExperimentError::Store(format!("{} does not match the scenario grid", meta_path.display())));
    }
    let grid = dom.grid(n)?;
    let bin_path = dir.join(format!("n{n}.bin"));
    let file = std::fs::File::open(&bin_path).map_err(io_err(&bin_path))?;
    let mut r = BufReader::new(file);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(io_err(&bin_path))?;
    if &magic != MAGIC {
        return Err(ExperimentError::Store(format!("{} is not a field file", bin_path.display())));
    }
    if read_u64(&mut r, &bin_path)? as usize != n {
        return Err(ExperimentError::Store(format!("{} has the wrong grid size", bin_path.display())));
    }
    let count = read_u64(&mut r, &bin_path)? as usize;
    let mut snaps = Vec::with_capacity(count);
    for _ in 0..count {
        let t = read_f64(&mut r, &bin_path)?;
        let mut h = Vec::with_capacity(n);
        let mut u = Vec::with_capacity(n);
        for _ in 0..n {
            h.push(read_f64(&mut r, &bin_path)?);
        }
        for _ in 0..n {
            u.push(read_f64(&mut r, &bin_path)?);
        }
        snaps.push(FieldSnapshot { t, h, u });
    }
    Ok(Simulation {
        field: field_from_snapshots(&grid, params, snaps)?,
        stop_reason: meta.stop_reason,
        stop_time: meta.stop_time,
        steps: meta.steps,
        stride: meta.stride,
        initial_max_gradient: meta.initial_max_gradient,
        ceiling: meta.ceiling,
    })
}

pub fn load_runs(dir: &Path, cfg: &ScenarioConfig, params: &GasParams, dom: &Domain) -> Result<Vec<(usize, Simulation)>> {
    let hash = cfg.hash()?;
    cfg.grids().into_iter().map(|n| Ok((n, read_run(dir, &hash, n, dom, params)?))).collect()
}
