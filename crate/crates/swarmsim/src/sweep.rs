//! Density sweeps: the cross product (uav counts x controllers x seeds),
//! run in parallel with a deterministic merge, plus the comparison table and
//! the resolution-time figure.

use std::collections::BTreeMap;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use swarmsim_core::metrics::{least_squares_slope, MetricsReport};
use swarmsim_core::mlp::MlpModel;
use swarmsim_core::scenario::Controller;
use swarmsim_core::{run, ScenarioConfig};

use crate::io::SWEEP_HEADER;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub uav_count: u32,
    pub controller: Controller,
    pub seed: u64,
    pub report: MetricsReport,
}

/// Run the full cross product. Per-run failures are recorded and the sweep
/// continues; rows come back sorted by (uav_count, controller, seed).
pub fn run_sweep(
    base: &ScenarioConfig,
    counts: &[u32],
    controllers: &[Controller],
    seeds: u64,
    model: Option<&MlpModel>,
    parallel: bool,
) -> (Vec<SweepRow>, Vec<String>) {
    let mut jobs: Vec<(u32, Controller, u64)> = Vec::new();
    for &n in counts {
        for &ctrl in controllers {
            for seed in 0..seeds {
                jobs.push((n, ctrl, seed));
            }
        }
    }

    let execute = |&(n, ctrl, seed): &(u32, Controller, u64)| -> Result<SweepRow, String> {
        let mut cfg = base.clone();
        cfg.n_uavs = n as usize;
        cfg.controller = ctrl;
        cfg.seed = seed;
        cfg.scripted_uavs.clear();
        match run(&cfg, model) {
            Ok(out) => Ok(SweepRow { uav_count: n, controller: ctrl, seed, report: out.report }),
            Err(e) => Err(format!("run n={n} controller={} seed={seed}: {e}", ctrl.name())),
        }
    };

    let results: Vec<Result<SweepRow, String>> = if parallel {
        jobs.par_iter().map(execute).collect()
    } else {
        jobs.iter().map(execute).collect()
    };

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(row) => rows.push(row),
            Err(msg) => failures.push(msg),
        }
    }
    rows.sort_by_key(|r| (r.uav_count, r.controller.name(), r.seed));
    (rows, failures)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        let m = &r.report;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.uav_count,
            r.controller.name(),
            r.seed,
            fmt_opt(m.avg_resolution_time_ms),
            fmt_opt(m.resolution_accuracy_pct),
            m.throughput_dpm,
            fmt_opt(m.edge_latency_ms),
            m.counts.conflicts,
            m.counts.losses,
            m.counts.expired,
            m.counts.degraded,
            m.counts.handovers,
        ));
    }
    out
}

/// One parsed sweep.csv data row (only the fields the tables need).
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub uav_count: u32,
    pub controller: String,
    pub seed: u64,
    pub avg_resolution_time_ms: Option<f64>,
    pub resolution_accuracy_pct: Option<f64>,
    pub throughput_dpm: f64,
    pub edge_latency_ms: Option<f64>,
}

pub fn sweep_from_csv(text: &str) -> Result<Vec<CsvRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == SWEEP_HEADER => {}
        _ => bail!("sweep.csv row 1: expected header `{SWEEP_HEADER}`"),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let row = i + 1;
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 12 {
            bail!("sweep.csv row {row}: expected 12 fields, got {}", f.len());
        }
        let opt = |s: &str, name: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                Ok(Some(s.parse().with_context(|| {
                    format!("sweep.csv row {row}: bad {name}")
                })?))
            }
        };
        rows.push(CsvRow {
            uav_count: f[0]
                .parse()
                .with_context(|| format!("sweep.csv row {row}: bad uav_count"))?,
            controller: f[1].to_string(),
            seed: f[2]
                .parse()
                .with_context(|| format!("sweep.csv row {row}: bad seed"))?,
            avg_resolution_time_ms: opt(f[3], "avg_resolution_time_ms")?,
            resolution_accuracy_pct: opt(f[4], "resolution_accuracy_pct")?,
            throughput_dpm: f[5]
                .parse()
                .with_context(|| format!("sweep.csv row {row}: bad throughput_dpm"))?,
            edge_latency_ms: opt(f[6], "edge_latency_ms")?,
        });
    }
    Ok(rows)
}

/// Mean and sample standard deviation over the defined values of a metric.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Aggregate {
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub n: usize,
}

pub fn aggregate(values: impl IntoIterator<Item = Option<f64>>) -> Aggregate {
    let defined: Vec<f64> = values.into_iter().flatten().collect();
    let n = defined.len();
    match swarmsim_core::metrics::mean_std(&defined) {
        None => Aggregate::default(),
        Some((mean, pop_std)) => {
            let std = (n > 1).then(|| pop_std * (n as f64 / (n as f64 - 1.0)).sqrt());
            Aggregate { mean: Some(mean), std, n }
        }
    }
}

/// Per-density means for one controller.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DensityStats {
    pub resolution_time: Aggregate,
    pub accuracy: Aggregate,
    pub throughput: Aggregate,
    pub latency: Aggregate,
}

pub type SweepTable = BTreeMap<u32, DensityStats>;

/// Fold parsed rows into one table per controller name.
pub fn build_tables(rows: &[CsvRow]) -> BTreeMap<String, SweepTable> {
    let mut grouped: BTreeMap<(String, u32), Vec<&CsvRow>> = BTreeMap::new();
    for r in rows {
        grouped.entry((r.controller.clone(), r.uav_count)).or_default().push(r);
    }
    let mut tables: BTreeMap<String, SweepTable> = BTreeMap::new();
    for ((ctrl, count), rs) in grouped {
        let stats = DensityStats {
            resolution_time: aggregate(rs.iter().map(|r| r.avg_resolution_time_ms)),
            accuracy: aggregate(rs.iter().map(|r| r.resolution_accuracy_pct)),
            throughput: aggregate(rs.iter().map(|r| Some(r.throughput_dpm))),
            latency: aggregate(rs.iter().map(|r| r.edge_latency_ms)),
        };
        tables.entry(ctrl).or_default().insert(count, stats);
    }
    tables
}

/// Slope of mean resolution time per +50 UAVs across a table.
pub fn scalability_slope(table: &SweepTable) -> Option<f64> {
    let pts: Vec<(f64, f64)> = table
        .iter()
        .filter_map(|(&n, s)| s.resolution_time.mean.map(|m| (n as f64, m)))
        .collect();
    least_squares_slope(&pts).map(|per_uav| per_uav * 50.0)
}

fn fmt_cell(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.1}"),
        None => String::from("-"),
    }
}

/// Side-by-side grid of the two controllers plus a central/edge speedup
/// column, one row per density.
pub fn compare(edge: &SweepTable, central: &SweepTable) -> Result<String> {
    let missing_in = |name: &str, have: &SweepTable, want: &SweepTable| -> Vec<String> {
        want.keys()
            .filter(|k| !have.contains_key(k))
            .map(|k| format!("{name} missing density {k}"))
            .collect()
    };
    let mut missing = missing_in("edge", edge, central);
    missing.extend(missing_in("centralized", central, edge));
    if !missing.is_empty() {
        bail!("mismatched densities: {}", missing.join(", "));
    }

    let mut out = String::new();
    out.push_str(
        "uavs  edge_rt_ms  central_rt_ms  speedup  edge_acc_pct  central_acc_pct  edge_dpm  central_dpm\n",
    );
    for (&n, e) in edge {
        let c = &central[&n];
        let speedup = match (e.resolution_time.mean, c.resolution_time.mean) {
            (Some(er), Some(cr)) if er > 0.0 => format!("{:.2}", cr / er),
            _ => String::from("-"),
        };
        out.push_str(&format!(
            "{n:<5} {:>10}  {:>13}  {speedup:>7}  {:>12}  {:>15}  {:>8}  {:>11}\n",
            fmt_cell(e.resolution_time.mean),
            fmt_cell(c.resolution_time.mean),
            fmt_cell(e.accuracy.mean),
            fmt_cell(c.accuracy.mean),
            fmt_cell(e.throughput.mean),
            fmt_cell(c.throughput.mean),
        ));
    }
    out.push_str(&format!(
        "scalability_slope_ms_per_50_uavs: edge={} central={}\n",
        fmt_cell(scalability_slope(edge)),
        fmt_cell(scalability_slope(central)),
    ));
    Ok(out)
}

/// Line chart of mean resolution time vs UAV count, one polyline per
/// controller.
pub fn figure_svg(series: &[(String, Vec<(u32, f64)>)]) -> String {
    const W: f64 = 800.0;
    const H: f64 = 500.0;
    const ML: f64 = 80.0;
    const MR: f64 = 40.0;
    const MT: f64 = 60.0;
    const MB: f64 = 70.0;
    const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

    let xs: Vec<f64> = series.iter().flat_map(|(_, pts)| pts.iter().map(|p| p.0 as f64)).collect();
    let ys: Vec<f64> = series.iter().flat_map(|(_, pts)| pts.iter().map(|p| p.1)).collect();
    let (x0, x1) = (
        xs.iter().copied().fold(f64::INFINITY, f64::min).min(0.0),
        xs.iter().copied().fold(0.0, f64::max).max(1.0),
    );
    let y1 = ys.iter().copied().fold(0.0, f64::max).max(1.0) * 1.1;
    let sx = |x: f64| ML + (x - x0) / (x1 - x0) * (W - ML - MR);
    let sy = |y: f64| H - MB - y / y1 * (H - MT - MB);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"30\" text-anchor=\"middle\" font-size=\"18\">Average Conflict Resolution Time Vs Number of UAVs</text>\n",
        W / 2.0
    ));
    // Axes.
    svg.push_str(&format!(
        "<line x1=\"{ML}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        H - MB,
        W - MR,
        H - MB
    ));
    svg.push_str(&format!(
        "<line x1=\"{ML}\" y1=\"{MT}\" x2=\"{ML}\" y2=\"{}\" stroke=\"black\"/>\n",
        H - MB
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"14\">Number of UAVs</text>\n",
        (ML + W - MR) / 2.0,
        H - 20.0
    ));
    svg.push_str(&format!(
        "<text x=\"20\" y=\"{}\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 20 {})\">Avg Resolution Time (ms)</text>\n",
        (MT + H - MB) / 2.0,
        (MT + H - MB) / 2.0
    ));
    // Tick labels on x for each observed count.
    let mut counts: Vec<f64> = xs.clone();
    counts.sort_by(f64::total_cmp);
    counts.dedup();
    for x in &counts {
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"12\">{}</text>\n",
            sx(*x),
            H - MB + 20.0,
            x
        ));
    }
    for i in 0..=4 {
        let y = y1 * i as f64 / 4.0;
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-size=\"12\">{:.0}</text>\n",
            ML - 8.0,
            sy(y) + 4.0,
            y
        ));
    }
    for (i, (name, pts)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x as f64), sy(y))).collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"/>\n",
            path.join(" ")
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"13\" fill=\"{color}\">{name}</text>\n",
            W - MR - 140.0,
            MT + 20.0 * (i as f64 + 1.0)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Build the figure series (mean resolution time per density) from parsed
/// sweep rows.
pub fn figure_series(rows: &[CsvRow]) -> Vec<(String, Vec<(u32, f64)>)> {
    build_tables(rows)
        .into_iter()
        .map(|(name, table)| {
            let pts = table
                .iter()
                .filter_map(|(&n, s)| s.resolution_time.mean.map(|m| (n, m)))
                .collect();
            (name, pts)
        })
        .collect()
}
