//! Seed fan-out, file emission and the stdout table.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use fusekit_core::scenarios::{compute_pooled_metrics, run_scenario, ScenarioTrace, Summary};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::output::{write_plot_csv, write_summary, write_trace_csv};
use crate::CliError;

/// Pooled per-state containment below this fails `--check`.
pub const CHECK_MIN_CONTAINMENT: f64 = 0.95;

#[derive(Debug, Clone)]
pub struct RunReport {
    pub seeds: Vec<u64>,
    pub per_seed: Vec<Summary>,
    pub pooled: Summary,
    pub files: Vec<PathBuf>,
}

impl RunReport {
    pub fn passes_check(&self) -> bool {
        self.pooled.min_containment() >= CHECK_MIN_CONTAINMENT
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })
}

fn io_at(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn emit_seed_files(config: &RunConfig, trace: &ScenarioTrace) -> Result<Vec<PathBuf>, CliError> {
    let mut files = Vec::new();
    if config.emit.trace_csv {
        let path = config.output_dir.join(format!("trace_{}.csv", trace.seed));
        write_trace_csv(create(&path)?, trace).map_err(io_at(&path))?;
        files.push(path);
    }
    if config.emit.plot_data {
        let path = config.output_dir.join(format!("plot_{}.csv", trace.seed));
        write_plot_csv(create(&path)?, trace).map_err(io_at(&path))?;
        files.push(path);
    }
    Ok(files)
}

/// Runs every seed in parallel, writes the requested files and returns the
/// per-seed and pooled summaries.
pub fn execute(config: &RunConfig) -> Result<RunReport, CliError> {
    let seeds = config.seeds.expand();
    let emits = config.emit.trace_csv || config.emit.plot_data || config.emit.summary;
    if emits {
        fs::create_dir_all(&config.output_dir).map_err(io_at(&config.output_dir))?;
    }
    let results: Vec<(ScenarioTrace, Vec<PathBuf>)> = seeds
        .par_iter()
        .map(|&seed| {
            let trace =
                run_scenario(&config.scenario, seed).map_err(|source| CliError::Simulation { seed, source })?;
            let files = emit_seed_files(config, &trace)?;
            Ok((trace, files))
        })
        .collect::<Result<_, CliError>>()?;
    let (traces, files): (Vec<ScenarioTrace>, Vec<Vec<PathBuf>>) = results.into_iter().unzip();
    let pooled = compute_pooled_metrics(&traces).map_err(CliError::Metrics)?;
    let mut files: Vec<PathBuf> = files.into_iter().flatten().collect();
    if config.emit.summary {
        let path = config.output_dir.join("summary.txt");
        write_summary(create(&path)?, config, &seeds, &pooled).map_err(io_at(&path))?;
        files.push(path);
    }
    Ok(RunReport {
        seeds,
        per_seed: traces.into_iter().map(|t| t.summary).collect(),
        pooled,
        files,
    })
}

fn table_row(label: &str, s: &Summary) -> String {
    let mut row = format!("{label:>8}");
    for v in &s.rmse {
        let _ = write!(row, " {v:>11.4e}");
    }
    for v in &s.containment {
        let _ = write!(row, " {v:>8.4}");
    }
    match &s.innovation {
        Some(inn) => {
            let _ = write!(row, " {:>8.4}", inn.mean_nis);
            for m in &inn.mean {
                let _ = write!(row, " {m:>11.3e}");
            }
        }
        None => {
            let _ = write!(row, " {:>8}", "-");
        }
    }
    row
}

/// Fixed-width table of per-seed rows plus a pooled row.
pub fn render_table(report: &RunReport) -> String {
    let n = report.pooled.rmse.len();
    let d = report.pooled.innovation.as_ref().map_or(0, |i| i.mean.len());
    let mut out = format!("{:>8}", "seed");
    for i in 0..n {
        let _ = write!(out, " {:>11}", format!("rmse_{i}"));
    }
    for i in 0..n {
        let _ = write!(out, " {:>8}", format!("in3s_{i}"));
    }
    let _ = write!(out, " {:>8}", "nis");
    for j in 0..d {
        let _ = write!(out, " {:>11}", format!("nu_mean_{j}"));
    }
    out.push('\n');
    for (seed, s) in report.seeds.iter().zip(&report.per_seed) {
        out.push_str(&table_row(&seed.to_string(), s));
        out.push('\n');
    }
    out.push_str(&table_row("pooled", &report.pooled));
    out.push('\n');
    out
}
