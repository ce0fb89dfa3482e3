//! Subcommand bodies. Each returns the process exit code and prints a single
//! diagnostic line on failure.

use std::path::Path;

use anyhow::{bail, Context, Result};

use grazing_core::bounds::{run_suite, summarize, Suite, SuiteOptions, VerificationRecord};
use grazing_core::collision::QuadratureSpec;
use grazing_core::grid::{encode_snapshot, read_snapshot, GridSpec, SnapshotFormat, SnapshotHeader};
use grazing_core::integrator::{max_dt, run, Frame, TimeSeriesRecord};
use grazing_core::landau::{grazing_gap, loglog_slope, GrazingGapRecord};

use crate::config::{self, GrazingFile, SimulateFile, SnapshotKind};
use crate::manifest::ManifestBuilder;

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_BREACH: u8 = 2;

fn fail(err: anyhow::Error) -> u8 {
    eprintln!("error: {err:#}");
    EXIT_CONFIG
}

fn config_dir(path: &Path) -> &Path {
    path.parent().unwrap_or(Path::new("."))
}

fn csv(header: &str, rows: impl Iterator<Item = String>) -> Vec<u8> {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row);
        out.push('\n');
    }
    out.into_bytes()
}

pub fn simulate(path: &Path) -> u8 {
    match simulate_inner(path) {
        Ok(code) => code,
        Err(e) => fail(e),
    }
}

fn simulate_inner(path: &Path) -> Result<u8> {
    let (file, bytes): (SimulateFile, _) = config::load(path)?;
    let cfg = file.simulation()?;
    let base = config_dir(path);
    let f0 = file.initial.build(cfg.grid, base)?;
    let limit = max_dt(&f0, &cfg.kernel);
    if cfg.dt > limit {
        bail!(
            "dt = {} violates the positivity condition dt <= eps/(8*mass) = {limit} \
             (delta <= eps/8 for unit mass)",
            cfg.dt
        );
    }
    let out_dir = base.join(&file.output.dir);
    let mut manifest = ManifestBuilder::new(&out_dir, "simulate", &bytes)?;
    let (ext, format) = match file.output.snapshot_format {
        SnapshotKind::Text => ("txt", SnapshotFormat::Text),
        SnapshotKind::Bin => ("bin", SnapshotFormat::Binary),
    };
    let every = file.output.snapshot_every;
    let total = cfg.step_count();
    let (eps, gamma) = (cfg.kernel.eps(), cfg.kernel.gamma());
    let mut snapshots = Vec::new();
    let outcome = run(&f0, &cfg, |frame: Frame<'_>| {
        if every > 0 && (frame.step % every == 0 || frame.step == total) {
            let header = SnapshotHeader {
                n: cfg.grid.n(),
                v_max: cfg.grid.v_max(),
                time: frame.t,
                eps,
                gamma,
            };
            let name = format!("snapshot_{:06}.{ext}", frame.step);
            std::fs::write(out_dir.join(&name), encode_snapshot(frame.state, &header, format))?;
            snapshots.push(name);
        }
        Ok(())
    })?;
    manifest.write(
        "timeseries.csv",
        &csv(
            &TimeSeriesRecord::header(&cfg.lp_list),
            outcome.records.iter().map(TimeSeriesRecord::to_row),
        ),
    )?;
    for name in &snapshots {
        manifest.record(name);
    }
    let code = if outcome.breach.is_some() { EXIT_BREACH } else { EXIT_OK };
    manifest.finish(code)?;
    if let Some(b) = &outcome.breach {
        eprintln!("monitor breach at step {} (t = {}): {}", b.step, b.t, b.what);
    } else {
        println!(
            "completed {} steps to t = {}; output in {}",
            outcome.steps_taken,
            cfg.t_end,
            out_dir.display()
        );
    }
    Ok(code)
}

pub fn verify(suite: &str, seed: u64, trials: usize, out: &Path) -> u8 {
    match verify_inner(suite, seed, trials, out) {
        Ok(code) => code,
        Err(e) => fail(e),
    }
}

fn verify_inner(suite: &str, seed: u64, trials: usize, out: &Path) -> Result<u8> {
    let suite: Suite = suite.parse()?;
    let opts = SuiteOptions {
        seed,
        trials,
        ..SuiteOptions::default()
    };
    let invocation = format!("verify {suite} --seed {seed} --trials {trials}");
    let mut manifest = ManifestBuilder::new(out, &invocation, invocation.as_bytes())?;
    let records = run_suite(suite, &opts)?;
    let name = format!("verify_{suite}.csv");
    manifest.write(
        &name,
        &csv(VerificationRecord::HEADER, records.iter().map(VerificationRecord::to_row)),
    )?;
    let summary = summarize(&records);
    let code = if summary.failures == 0 { EXIT_OK } else { EXIT_BREACH };
    manifest.finish(code)?;
    let margin = summary
        .min_relative_margin
        .map_or_else(|| "n/a".to_string(), |m| m.to_string());
    println!(
        "{suite}: {} records, {} failures, smallest relative margin {margin}",
        summary.total, summary.failures
    );
    for r in records.iter().filter(|r| !r.pass) {
        eprintln!("violation: {}", r.to_row());
    }
    Ok(code)
}

pub fn grazing(path: &Path) -> u8 {
    match grazing_inner(path) {
        Ok(code) => code,
        Err(e) => fail(e),
    }
}

fn grazing_inner(path: &Path) -> Result<u8> {
    let (file, bytes): (GrazingFile, _) = config::load(path)?;
    let kernels = file.kernels()?;
    let grid = GridSpec::new(file.grid.n, file.grid.v_max)?;
    let quad = QuadratureSpec::new(file.quadrature.m_phi)?;
    let phi = file.test_function.build()?;
    let base = config_dir(path);
    let f = file.initial.build(grid, base)?;
    let out_dir = base.join(&file.output.dir);
    let mut manifest = ManifestBuilder::new(&out_dir, "grazing", &bytes)?;
    let records = grazing_gap(&f, &file.initial.id(), &phi, &kernels, &quad)
        .context("grazing comparison failed")?;
    manifest.write(
        "grazing_gap.csv",
        &csv(GrazingGapRecord::HEADER, records.iter().map(GrazingGapRecord::to_row)),
    )?;
    let slope = loglog_slope(&records);
    let summary = match slope {
        Some(s) => format!("loglog_slope={s}\n"),
        None => "loglog_slope=none\n".to_string(),
    };
    manifest.write("grazing_summary.txt", summary.as_bytes())?;
    manifest.finish(EXIT_OK)?;
    for r in &records {
        println!("eps={} gap={}", r.eps, r.gap);
    }
    print!("{summary}");
    Ok(EXIT_OK)
}

pub fn moments(path: &Path, lp: &[f64]) -> u8 {
    let result = (|| -> Result<()> {
        let (header, f) = read_snapshot(path)?;
        let m = f.moments(lp)?;
        println!("n={} v_max={} time={} eps={} gamma={}", header.n, header.v_max, header.time, header.eps, header.gamma);
        println!("mass={}", m.mass);
        println!("momentum={},{},{}", m.momentum.x, m.momentum.y, m.momentum.z);
        println!("energy={}", m.energy);
        println!("temperature={}", m.temperature());
        println!("entropy={}", m.entropy);
        println!("llogl={}", m.llogl);
        for (p, norm) in &m.lp_norms {
            println!("lp_{p}={norm}");
        }
        println!("boundary_mass={}", f.boundary_mass());
        Ok(())
    })();
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => fail(e),
    }
}
