//! Subcommand implementations. Exit codes: 0 success, 1 parse/validation
//! problems, 2 I/O failures.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use swarmsim_core::mlp::{agreement, mlp_train, Hyperparams, MlpModel, N_CLASSES};
use swarmsim_core::scenario::{echo_config, Controller, PolicyKind};
use swarmsim_core::{generate_training_set, load_config, run, ScenarioConfig};

use crate::io;
use crate::sweep;

#[derive(Parser)]
#[command(name = "swarmsim", version, about = "Deterministic UAV swarm deconfliction simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Subcommand)]
pub enum Cmd {
    /// Execute a single simulation run and write its artifacts.
    Run(RunArgs),
    /// Run a density sweep across controllers and seeds.
    Sweep(SweepArgs),
    /// Generate oracle-labeled scenes and train the maneuver classifier.
    Train(TrainArgs),
    /// Summarize an existing sweep.csv as a controller comparison table.
    Compare(CompareArgs),
    /// Render the resolution-time figure from an existing sweep.csv.
    Plot(PlotArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ControllerArg {
    Edge,
    Centralized,
}

impl From<ControllerArg> for Controller {
    fn from(v: ControllerArg) -> Controller {
        match v {
            ControllerArg::Edge => Controller::Edge,
            ControllerArg::Centralized => Controller::Centralized,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    Oracle,
    Mlp,
}

impl From<PolicyArg> for PolicyKind {
    fn from(v: PolicyArg) -> PolicyKind {
        match v {
            PolicyArg::Oracle => PolicyKind::Oracle,
            PolicyArg::Mlp => PolicyKind::Mlp,
        }
    }
}

#[derive(Args)]
pub struct RunArgs {
    /// Scenario config file; defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override the config's RNG seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the config's controller.
    #[arg(long, value_enum)]
    pub controller: Option<ControllerArg>,
    /// Override the config's maneuver policy.
    #[arg(long, value_enum)]
    pub policy: Option<PolicyArg>,
    /// Trained model file (required for the mlp policy).
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Comma-separated list of swarm sizes, e.g. 50,100,150,200.
    #[arg(long)]
    pub uavs: String,
    /// Number of seeds per cell (seeds 0..N-1).
    #[arg(long, default_value_t = 10)]
    pub seeds: u64,
    /// Sweep both controllers instead of just the configured one.
    #[arg(long)]
    pub both: bool,
    #[arg(long, value_enum)]
    pub controller: Option<ControllerArg>,
    #[arg(long, value_enum)]
    pub policy: Option<PolicyArg>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Number of labeled scenes to generate (90/10 train/held-out split).
    #[arg(long, default_value_t = 50_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Output model file.
    #[arg(long, default_value = "model.txt")]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct CompareArgs {
    /// Directory holding sweep.csv; comparison.txt is written next to it.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct PlotArgs {
    /// Directory holding sweep.csv; figure5.svg is written next to it.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

/// Failures carry the process exit code they should produce.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

fn usage(message: impl Into<String>) -> CliError {
    CliError { code: 1, message: message.into() }
}

fn io_failure(context: &str, err: impl std::fmt::Display) -> CliError {
    CliError { code: 2, message: format!("{context}: {err}") }
}

type CmdResult = Result<(), CliError>;

pub fn dispatch(cli: Cli) -> i32 {
    let result = match cli.cmd {
        Cmd::Run(args) => cmd_run(&args),
        Cmd::Sweep(args) => cmd_sweep(&args),
        Cmd::Train(args) => cmd_train(&args),
        Cmd::Compare(args) => cmd_compare(&args),
        Cmd::Plot(args) => cmd_plot(&args),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

fn load_scenario(path: Option<&Path>) -> Result<ScenarioConfig, CliError> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p)
            .map_err(|e| io_failure(&format!("reading {}", p.display()), e))?,
        None => String::new(),
    };
    load_config(&text).map_err(|e| usage(e.to_string()))
}

fn apply_overrides(
    cfg: &mut ScenarioConfig,
    seed: Option<u64>,
    controller: Option<ControllerArg>,
    policy: Option<PolicyArg>,
) {
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(c) = controller {
        cfg.controller = c.into();
    }
    if let Some(p) = policy {
        cfg.policy = p.into();
    }
}

fn load_policy_model(cfg: &ScenarioConfig, model: Option<&Path>) -> Result<Option<MlpModel>, CliError> {
    if cfg.policy != PolicyKind::Mlp {
        return Ok(None);
    }
    let path = model.ok_or_else(|| usage("policy mlp requires --model PATH"))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| io_failure(&format!("reading {}", path.display()), e))?;
    MlpModel::from_text(&text)
        .map(Some)
        .map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> CmdResult {
    std::fs::write(path, contents)
        .map_err(|e| io_failure(&format!("writing {}", path.display()), e))
}

fn ensure_dir(dir: &Path) -> CmdResult {
    std::fs::create_dir_all(dir)
        .map_err(|e| io_failure(&format!("creating {}", dir.display()), e))
}

pub fn cmd_run(args: &RunArgs) -> CmdResult {
    let mut cfg = load_scenario(args.config.as_deref())?;
    apply_overrides(&mut cfg, args.seed, args.controller, args.policy);
    let model = load_policy_model(&cfg, args.model.as_deref())?;

    let out = run(&cfg, model.as_ref()).map_err(|e| usage(e.to_string()))?;

    ensure_dir(&args.out)?;
    let log_csv = io::log_to_csv(&out.log);
    let metrics = io::report_to_string(&out.report);
    write_file(&args.out.join("log.csv"), &log_csv)?;
    write_file(&args.out.join("metrics.json"), &metrics)?;
    let manifest = io::manifest_json(
        &echo_config(&cfg),
        cfg.seed,
        &[
            ("log.csv", io::sha256_hex(log_csv.as_bytes())),
            ("metrics.json", io::sha256_hex(metrics.as_bytes())),
        ],
    );
    write_file(&args.out.join("manifest.json"), &manifest)?;

    println!(
        "run complete: {} conflicts, {} resolved, {} deliveries -> {}",
        out.report.counts.conflicts,
        out.report.resolved,
        out.report.deliveries,
        args.out.display()
    );
    Ok(())
}

fn parse_uav_list(text: &str) -> Result<Vec<u32>, CliError> {
    let counts: Result<Vec<u32>, _> = text
        .split(',')
        .map(|s| s.trim().parse::<u32>())
        .collect();
    let counts = counts.map_err(|_| usage(format!("bad --uavs list `{text}`")))?;
    if counts.is_empty() || counts.iter().any(|&c| c == 0) {
        return Err(usage(format!("bad --uavs list `{text}`")));
    }
    Ok(counts)
}

pub fn cmd_sweep(args: &SweepArgs) -> CmdResult {
    let counts = parse_uav_list(&args.uavs)?;
    if args.seeds == 0 {
        return Err(usage("--seeds must be at least 1"));
    }
    let mut cfg = load_scenario(args.config.as_deref())?;
    apply_overrides(&mut cfg, None, args.controller, args.policy);
    let model = load_policy_model(&cfg, args.model.as_deref())?;

    let controllers: Vec<Controller> = if args.both {
        vec![Controller::Edge, Controller::Centralized]
    } else {
        vec![cfg.controller]
    };

    let (rows, failures) =
        sweep::run_sweep(&cfg, &counts, &controllers, args.seeds, model.as_ref(), true);

    ensure_dir(&args.out)?;
    let csv = sweep::sweep_to_csv(&rows);
    write_file(&args.out.join("sweep.csv"), &csv)?;
    let mut artifacts = vec![("sweep.csv", io::sha256_hex(csv.as_bytes()))];

    let parsed = sweep::sweep_from_csv(&csv).map_err(|e| usage(format!("{e:#}")))?;
    let mut svg_digest = None;
    let mut cmp_digest = None;
    if controllers.len() == 2 {
        let tables = sweep::build_tables(&parsed);
        if let (Some(edge), Some(central)) = (tables.get("edge"), tables.get("centralized")) {
            let doc = sweep::compare(edge, central).map_err(|e| usage(e.to_string()))?;
            print!("{doc}");
            write_file(&args.out.join("comparison.txt"), &doc)?;
            cmp_digest = Some(io::sha256_hex(doc.as_bytes()));
        }
    }
    let series = sweep::figure_series(&parsed);
    if !series.is_empty() {
        let svg = sweep::figure_svg(&series);
        write_file(&args.out.join("figure5.svg"), &svg)?;
        svg_digest = Some(io::sha256_hex(svg.as_bytes()));
    }
    if let Some(d) = cmp_digest {
        artifacts.push(("comparison.txt", d));
    }
    if let Some(d) = svg_digest {
        artifacts.push(("figure5.svg", d));
    }
    let manifest = io::manifest_json(&echo_config(&cfg), cfg.seed, &artifacts);
    write_file(&args.out.join("manifest.json"), &manifest)?;

    for f in &failures {
        eprintln!("sweep failure: {f}");
    }
    if failures.is_empty() {
        println!("sweep complete: {} rows -> {}", rows.len(), args.out.display());
        Ok(())
    } else {
        Err(usage(format!("{} of {} runs failed", failures.len(), rows.len() + failures.len())))
    }
}

pub fn cmd_train(args: &TrainArgs) -> CmdResult {
    let cfg = load_scenario(args.config.as_deref())?;
    if args.samples < 10 {
        return Err(usage(format!(
            "--samples {} is too small: class coverage impossible",
            args.samples
        )));
    }
    let dataset = generate_training_set(args.samples, &cfg, args.seed);
    let split = dataset.len() * 9 / 10;
    let (train, held_out) = dataset.split_at(split);

    let mut seen = [false; N_CLASSES];
    for s in train {
        seen[s.label.index()] = true;
    }
    if seen.iter().any(|&c| !c) {
        return Err(usage(format!(
            "training split of {} samples does not cover all {N_CLASSES} maneuver classes",
            train.len()
        )));
    }

    let (model, train_acc) = mlp_train(train, Hyperparams::default(), args.seed)
        .map_err(|e| usage(e.to_string()))?;
    let held_out_acc = agreement(&model, held_out).map_err(|e| usage(e.to_string()))?;
    write_file(&args.out, &model.to_text())?;
    // Companion dump of the training split for inspection.
    let stem = args.out.file_stem().and_then(|s| s.to_str()).unwrap_or("model");
    let csv_path = args.out.with_file_name(format!("{stem}_training.csv"));
    write_file(&csv_path, &io::training_set_to_csv(train))?;
    println!(
        "trained on {} samples: training accuracy {:.1}%, held-out agreement {:.1}% ({} scenes) -> {}",
        train.len(),
        100.0 * train_acc,
        100.0 * held_out_acc,
        held_out.len(),
        args.out.display()
    );
    Ok(())
}

fn read_sweep_rows(dir: &Path) -> Result<Vec<sweep::CsvRow>, CliError> {
    let path = dir.join("sweep.csv");
    let text = std::fs::read_to_string(&path)
        .map_err(|e| io_failure(&format!("reading {}", path.display()), e))?;
    sweep::sweep_from_csv(&text).map_err(|e| usage(format!("{e:#}")))
}

pub fn cmd_compare(args: &CompareArgs) -> CmdResult {
    let rows = read_sweep_rows(&args.out)?;
    let tables = sweep::build_tables(&rows);
    let edge = tables
        .get("edge")
        .ok_or_else(|| usage("sweep.csv has no edge rows"))?;
    let central = tables
        .get("centralized")
        .ok_or_else(|| usage("sweep.csv has no centralized rows"))?;
    let doc = sweep::compare(edge, central).map_err(|e| usage(e.to_string()))?;
    print!("{doc}");
    write_file(&args.out.join("comparison.txt"), &doc)
}

pub fn cmd_plot(args: &PlotArgs) -> CmdResult {
    let rows = read_sweep_rows(&args.out)?;
    let series = sweep::figure_series(&rows);
    if series.is_empty() {
        return Err(usage("sweep.csv has no rows with resolution-time data"));
    }
    let svg = sweep::figure_svg(&series);
    write_file(&args.out.join("figure5.svg"), &svg)?;
    println!("figure written to {}", args.out.join("figure5.svg").display());
    Ok(())
}
