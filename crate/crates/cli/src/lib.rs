//! Subcommands of the `hedac` binary: run, validate, incline and
//! export-plots.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use hedac_core::sim::{
    export_plots, load_config, RunSummary, RunWriter, ValidatedScenario, METRICS_FILE,
    SUMMARY_FILE, TRAJECTORY_FILE,
};
use hedac_core::{InclineReport, ScenarioConfig, SimError};

/// Exit status of a successful invocation.
pub const EXIT_OK: u8 = 0;
/// Exit status when the configuration, terrain or run directory is invalid.
pub const EXIT_VALIDATION: u8 = 2;
/// Exit status when a run fails after validation.
pub const EXIT_RUNTIME: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "hedac", version, about = "Multi-UAV terrain survey simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a scenario and simulate it, writing artifacts to --out.
    Run(RunArgs),
    /// Validate a scenario without stepping it.
    Validate(ConfigArgs),
    /// Print the incline compatibility table of a scenario.
    Incline(ConfigArgs),
    /// Convert a completed run directory into plot-ready CSV series.
    ExportPlots(ExportArgs),
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// Scenario TOML file.
    #[arg(long)]
    pub config: PathBuf,
    /// Accept terrain steeper than some UAV type supports.
    #[arg(long)]
    pub override_incline: bool,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub scenario: ConfigArgs,
    /// Output directory for the run artifacts.
    #[arg(long)]
    pub out: PathBuf,
    /// Write field snapshots every N steps (0: final only).
    #[arg(long)]
    pub snapshot_stride: Option<usize>,
    /// Accepted and ignored; the pipeline is deterministic.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Completed run directory.
    #[arg(long)]
    pub run: PathBuf,
    /// Directory for the exported series.
    #[arg(long)]
    pub out: PathBuf,
    /// Scenario TOML of the run; accepted for symmetry, not read.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Failure with the exit status it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn validation(message: impl fmt::Display) -> Self {
        Self {
            code: EXIT_VALIDATION,
            message: message.to_string(),
        }
    }

    fn runtime(message: impl fmt::Display) -> Self {
        Self {
            code: EXIT_RUNTIME,
            message: message.to_string(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Run(a) => run(&a, out),
        Command::Validate(a) => validate(&a, out),
        Command::Incline(a) => incline(&a, out),
        Command::ExportPlots(a) => export(&a, out),
    }
}

fn base_dir(config: &Path) -> &Path {
    config.parent().unwrap_or(Path::new("."))
}

fn load(path: &Path) -> Result<ScenarioConfig, CliError> {
    load_config(path).map_err(CliError::validation)
}

fn validated(cfg: &ScenarioConfig, a: &ConfigArgs) -> Result<ValidatedScenario, CliError> {
    cfg.validate(base_dir(&a.config), a.override_incline)
        .map_err(CliError::validation)
}

fn io(e: std::io::Error) -> CliError {
    CliError::runtime(e)
}

fn print_warnings(v: &ValidatedScenario) {
    for w in &v.warnings {
        eprintln!("warning: {w}");
    }
}

fn run(a: &RunArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut cfg = load(&a.scenario.config)?;
    if let Some(seed) = a.seed {
        cfg.seed = Some(seed);
    }
    if let Some(stride) = a.snapshot_stride {
        cfg.output.snapshot_stride = stride;
    }
    let v = validated(&cfg, &a.scenario)?;
    print_warnings(&v);
    let mut sim = v.simulation().map_err(CliError::validation)?;
    let total = v.scenario.steps;
    let mut writer =
        RunWriter::create(&a.out, cfg.output.snapshot_stride).map_err(CliError::runtime)?;
    let runtime = |e: SimError| CliError::runtime(e);
    writer.start(&sim).map_err(runtime)?;
    let tick = (total / 10).max(1);
    sim.run_with(|s| {
        writer.after_step(s)?;
        let k = s.records().len() - 1;
        if k % tick == 0 || k == total {
            eprintln!("step {k}/{total}  η = {:.4}", s.eta());
        }
        Ok(())
    })
    .map_err(runtime)?;
    let summary = writer.finish(&sim).map_err(runtime)?;
    print_summary(&summary, &a.out, out).map_err(io)
}

fn print_summary(s: &RunSummary, dir: &Path, out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "run written to {}", dir.display())?;
    writeln!(out, "steps                  {}", s.steps)?;
    writeln!(out, "final η                {:.4}", s.final_eta)?;
    writeln!(
        out,
        "step compute (s)       mean {:.4}  max {:.4}",
        s.mean_compute_seconds, s.max_compute_seconds
    )?;
    writeln!(out, "escape activations     {}", s.escape_activations)?;
    match s.min_pairwise_clearance {
        Some(c) => writeln!(out, "min pairwise distance  {c:.2} m")?,
        None => writeln!(out, "min pairwise distance  -")?,
    }
    writeln!(
        out,
        "min altitude AGL       {:.2} m",
        s.min_altitude_above_terrain
    )?;
    writeln!(out, "constraint violations  {}", s.violations)
}

fn validate(a: &ConfigArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = load(&a.config)?;
    let v = validated(&cfg, a)?;
    print_warnings(&v);
    let mesh = &v.scenario.terrain.mesh;
    let w = |e| io(e);
    writeln!(out, "{}: valid", a.config.display()).map_err(w)?;
    writeln!(
        out,
        "mesh        {} nodes, {} triangles, {:.0} m²",
        mesh.node_count(),
        mesh.triangle_count(),
        mesh.area()
    )
    .map_err(w)?;
    writeln!(
        out,
        "time        {} steps of {} s",
        v.scenario.steps, v.scenario.dt
    )
    .map_err(w)?;
    for (i, (spec, s)) in v.scenario.fleet.iter().enumerate() {
        writeln!(
            out,
            "uav {i}       type {} at ({:.1}, {:.1}), heading {:.1}°",
            spec.name,
            s.x,
            s.y,
            s.theta.to_degrees()
        )
        .map_err(w)?;
    }
    write_incline(&v.incline, out).map_err(w)
}

/// Table of supported inclines per UAV type followed by the terrain's
/// steepest incline.
pub fn write_incline(r: &InclineReport, out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(
        out,
        "{:<10} {:>10} {:>12}",
        "UAV type", "κ [°]", "compatible"
    )?;
    for e in &r.entries {
        writeln!(
            out,
            "{:<10} {:>10.1} {:>12}",
            e.name,
            e.kappa.to_degrees(),
            if e.compatible { "yes" } else { "no" }
        )?;
    }
    writeln!(out, "κ_T,max [°] {:.1}", r.terrain_max.to_degrees())
}

fn incline(a: &ConfigArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = load(&a.config)?;
    let terrain = cfg
        .load_terrain(base_dir(&a.config))
        .map_err(CliError::validation)?;
    let report = cfg.incline_report(&terrain).map_err(CliError::validation)?;
    write_incline(&report, out).map_err(io)?;
    if report.all_compatible() || a.override_incline || cfg.override_incline {
        Ok(())
    } else {
        Err(CliError::validation(
            "terrain is steeper than some UAV types support",
        ))
    }
}

fn export(a: &ExportArgs, out: &mut dyn Write) -> Result<(), CliError> {
    for f in [SUMMARY_FILE, TRAJECTORY_FILE, METRICS_FILE] {
        if !a.run.join(f).is_file() {
            return Err(CliError::validation(format!(
                "{} is not a completed run directory (missing {f})",
                a.run.display()
            )));
        }
    }
    let written = export_plots(&a.run, &a.out).map_err(CliError::runtime)?;
    for p in written {
        writeln!(out, "{}", p.display()).map_err(io)?;
    }
    Ok(())
}
