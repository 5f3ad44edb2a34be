//! Trace CSV, plot CSV and summary files.
//!
//! Reals are written with 17 significant digits in scientific notation
//! (`{:.16e}`), which is locale independent and round-trips every `f64`.
//! Absent values are the literal `NA`.

use std::io::{self, Write};

use fusekit_core::scenarios::{ScenarioTrace, Summary};

use crate::config::{config_pairs, RunConfig};

pub const MISSING: &str = "NA";

pub fn format_real(v: f64) -> String {
    format!("{v:.16e}")
}

fn indexed(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (0..n).map(move |i| format!("{prefix}_{i}"))
}

/// `t, x_true_*, z_*, x_hat_*, p_diag_*, nu_*, sig3_*`
pub fn trace_header(state_dim: usize, meas_dim: usize) -> Vec<String> {
    std::iter::once("t".to_string())
        .chain(indexed("x_true", state_dim))
        .chain(indexed("z", meas_dim))
        .chain(indexed("x_hat", state_dim))
        .chain(indexed("p_diag", state_dim))
        .chain(indexed("nu", meas_dim))
        .chain(indexed("sig3", state_dim))
        .collect()
}

fn push_optional(row: &mut Vec<String>, values: Option<&[f64]>, n: usize) {
    match values {
        Some(v) => row.extend(v.iter().map(|x| format_real(*x))),
        None => row.extend(std::iter::repeat_n(MISSING.to_string(), n)),
    }
}

pub fn write_trace_csv<W: Write>(w: W, trace: &ScenarioTrace) -> io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(trace_header(trace.state_dim, trace.meas_dim))?;
    for r in &trace.records {
        let mut row = vec![format_real(r.t)];
        row.extend(r.x_true.iter().map(|x| format_real(*x)));
        push_optional(&mut row, r.z.as_deref(), trace.meas_dim);
        row.extend(r.x_hat.iter().map(|x| format_real(*x)));
        row.extend(r.p_diag.iter().map(|x| format_real(*x)));
        push_optional(&mut row, r.nu(), trace.meas_dim);
        row.extend(r.three_sigma.iter().map(|x| format_real(*x)));
        out.write_record(&row)?;
    }
    out.flush()
}

/// Per state: truth, estimate and the 3σ band edges; then measurements.
pub fn write_plot_csv<W: Write>(w: W, trace: &ScenarioTrace) -> io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["t".to_string()];
    for i in 0..trace.state_dim {
        header.extend(["truth", "estimate", "lower", "upper"].map(|c| format!("{c}_{i}")));
    }
    header.extend(indexed("z", trace.meas_dim));
    out.write_record(&header)?;
    for r in &trace.records {
        let mut row = vec![format_real(r.t)];
        for i in 0..trace.state_dim {
            let (x, s) = (r.x_hat[i], r.three_sigma[i]);
            row.extend([r.x_true[i], x, x - s, x + s].map(format_real));
        }
        push_optional(&mut row, r.z.as_deref(), trace.meas_dim);
        out.write_record(&row)?;
    }
    out.flush()
}

/// `key: value` pairs for a summary. Reals use `Display`, which is the
/// shortest string that parses back to the same `f64`.
pub fn summary_pairs(s: &Summary) -> Vec<(String, String)> {
    let mut out = vec![
        ("records".to_string(), s.records.to_string()),
        ("updates".to_string(), s.updates.to_string()),
    ];
    for (i, v) in s.rmse.iter().enumerate() {
        out.push((format!("rmse_{i}"), v.to_string()));
    }
    for (i, v) in s.containment.iter().enumerate() {
        out.push((format!("containment_{i}"), v.to_string()));
    }
    out.push(("containment_fraction".into(), s.containment_fraction.to_string()));
    if let Some(inn) = &s.innovation {
        out.push(("innovation_count".into(), inn.count.to_string()));
        for (i, v) in inn.mean.iter().enumerate() {
            out.push((format!("innovation_mean_{i}"), v.to_string()));
        }
        let d = inn.sample_cov.rows();
        for i in 0..d {
            for j in 0..d {
                out.push((format!("innovation_cov_{i}_{j}"), inn.sample_cov.get(i, j).to_string()));
            }
        }
        out.push(("mean_nis".into(), inn.mean_nis.to_string()));
    }
    if let Some(var) = &s.innovation_var_mean {
        for (i, v) in var.iter().enumerate() {
            out.push((format!("innovation_var_mean_{i}"), v.to_string()));
        }
    }
    out
}

/// Pooled summary followed by the effective configuration under
/// `config.` keys.
pub fn write_summary<W: Write>(mut w: W, config: &RunConfig, seeds: &[u64], pooled: &Summary) -> io::Result<()> {
    writeln!(w, "scenario: {}", config.scenario.name())?;
    writeln!(
        w,
        "seeds: {}",
        seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(",")
    )?;
    for (k, v) in summary_pairs(pooled) {
        writeln!(w, "{k}: {v}")?;
    }
    for (k, v) in config_pairs(config) {
        writeln!(w, "config.{k}: {v}")?;
    }
    w.flush()
}
