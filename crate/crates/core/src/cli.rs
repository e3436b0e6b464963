//! Command-line front end.
//!
//! Every subcommand reads an optional TOML scenario (`--config`), applies
//! `--set section.key=value` overrides and writes its artifacts to `--out`.
//! Failures exit with status 1 after appending a JSON record to
//! `<out>/error.jsonl` and echoing it on stderr.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use serde_json::json;

use crate::analysis::{angles_deg, beampattern_from_currents, hpbw, induced_currents, spacing_distribution, AngleGrid};
use crate::baseline::{phase_profile_config, phases_to_loads};
use crate::channel::{ChannelState, RisConfig};
use crate::error::{Error, Result};
use crate::impedance::{assemble, DipoleLayout};
use crate::io;
use crate::scenario::{parse_scenario_with_overrides, Scenario};
use crate::shape_opt::run_t3dris;

#[derive(Debug, Parser)]
#[command(name = "conformal-ris", version, about = "Joint shape and load optimization of 3D RIS")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Scenario file (TOML); defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Override a scenario key, e.g. `--set scenario.n=16`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the joint optimizer; writes layout.csv, reactances.csv, trace.csv.
    Optimize,
    /// Phase-profile loads on the initial layout; writes layout.csv, reactances.csv.
    Baseline,
    /// Radiation pattern; writes beampattern.csv and beampattern_cut.csv.
    Beampattern {
        /// Directory with layout.csv and reactances.csv from an earlier run;
        /// without it the optimizer runs first.
        #[arg(long)]
        from: Option<PathBuf>,
        /// Grid step in degrees.
        #[arg(long, default_value_t = 1.0)]
        step: f64,
        /// Elevation of the azimuth cut in degrees; defaults to the UE direction.
        #[arg(long)]
        elevation: Option<f64>,
    },
    /// Histogram of λ/d over element pairs; writes spacing.csv.
    Spacing {
        /// Directory with a layout.csv; without it the initial layout is used.
        #[arg(long)]
        from: Option<PathBuf>,
        #[arg(long, default_value_t = 90.0)]
        percentile: f64,
        #[arg(long, default_value_t = 20)]
        bins: usize,
    },
    /// Optimizer runs over several element counts; writes sweep.csv.
    Sweep {
        #[arg(long, value_delimiter = ',', default_values_t = vec![8usize, 16, 32, 64])]
        n_values: Vec<usize>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Optimize => "optimize",
            Command::Baseline => "baseline",
            Command::Beampattern { .. } => "beampattern",
            Command::Spacing { .. } => "spacing",
            Command::Sweep { .. } => "sweep",
        }
    }
}

/// Parses `args` (including the program name), runs the command and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            let record = json!({
                "command": cli.command.name(),
                "kind": e.kind(),
                "message": e.to_string(),
            });
            eprintln!("{record}");
            if fs::create_dir_all(&cli.out).is_ok() {
                use std::io::Write;
                if let Ok(mut f) = fs::OpenOptions::new().create(true).append(true).open(cli.out.join("error.jsonl")) {
                    let _ = writeln!(f, "{record}");
                }
            }
            1
        }
    }
}

fn load_scenario(cli: &Cli) -> Result<Scenario> {
    let text = match &cli.config {
        Some(path) => fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::ConfigNotFound(path.display().to_string()),
            _ => Error::Io(format!("{}: {e}", path.display())),
        })?,
        None => String::new(),
    };
    parse_scenario_with_overrides(&text, &cli.overrides)
}

fn execute(cli: &Cli) -> Result<()> {
    let scenario = load_scenario(cli)?;
    fs::create_dir_all(&cli.out).map_err(|e| Error::Io(format!("{}: {e}", cli.out.display())))?;
    let work = || dispatch(cli, &scenario);
    match cli.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    }
}

fn dispatch(cli: &Cli, scenario: &Scenario) -> Result<()> {
    let out = &cli.out;
    let (files, summary) = match &cli.command {
        Command::Optimize => optimize(scenario, out)?,
        Command::Baseline => baseline(scenario, out)?,
        Command::Beampattern { from, step, elevation } => beampattern(scenario, out, from.as_deref(), *step, *elevation)?,
        Command::Spacing { from, percentile, bins } => spacing(scenario, out, from.as_deref(), *percentile, *bins)?,
        Command::Sweep { n_values } => sweep(scenario, out, n_values)?,
    };
    let created = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let manifest = json!({
        "command": cli.command.name(),
        "package": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "created_unix_s": created,
        "config": cli.config.as_ref().map(|p| p.display().to_string()),
        "overrides": cli.overrides,
        "scenario": scenario,
        "outputs": files,
        "summary": summary,
        "determinism": "no random numbers are drawn; data files depend only on the resolved scenario",
    });
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Io(e.to_string()))?;
    io::write(out, "manifest.json", &(text + "\n"))
}

type Outputs = (Vec<&'static str>, serde_json::Value);

fn optimized(scenario: &Scenario) -> Result<(DipoleLayout, RisConfig, crate::shape_opt::OptimizerTrace)> {
    let layout0 = scenario.initial_layout()?;
    let set = scenario.feasible_set(&layout0);
    run_t3dris(scenario, &layout0, &set, &scenario.b_box, &scenario.solver)
}

fn optimize(scenario: &Scenario, out: &Path) -> Result<Outputs> {
    let (layout, cfg, trace) = optimized(scenario)?;
    io::write(out, "layout.csv", &io::layout_csv(&layout))?;
    io::write(out, "reactances.csv", &io::reactances_csv(&cfg))?;
    io::write(out, "trace.csv", &io::trace_csv(&trace))?;
    let summary = json!({
        "initial_snr_db": trace.initial_snr_db(),
        "final_snr_db": trace.final_snr_db(),
        "iterations": trace.iterations(),
        "converged": trace.converged,
        "colinear_fixes": trace.colinear_fixes,
    });
    Ok((vec!["layout.csv", "reactances.csv", "trace.csv"], summary))
}

fn baseline(scenario: &Scenario, out: &Path) -> Result<Outputs> {
    let layout = scenario.initial_layout()?;
    let imp = assemble(&layout, &scenario.p_bs, &scenario.p_ue)?;
    let theta = phase_profile_config(&imp);
    let (cfg, clamps) = phases_to_loads(&theta, imp.z_ss[(0, 0)], scenario.r0, &scenario.b_box)?;
    let state = ChannelState::new(imp, cfg.clone(), scenario.y0)?;
    io::write(out, "layout.csv", &io::layout_csv(&layout))?;
    io::write(out, "reactances.csv", &io::reactances_csv(&cfg))?;
    let summary = json!({ "snr_db": scenario.snr_db(state.h()), "clamped_loads": clamps });
    Ok((vec!["layout.csv", "reactances.csv"], summary))
}

fn read_layout(scenario: &Scenario, dir: &Path) -> Result<DipoleLayout> {
    let text = fs::read_to_string(dir.join("layout.csv")).map_err(|e| Error::Io(format!("{}: {e}", dir.join("layout.csv").display())))?;
    DipoleLayout::half_wave(io::parse_layout(&text)?, scenario.lambda, scenario.wire_radius)
}

fn beampattern(scenario: &Scenario, out: &Path, from: Option<&Path>, step: f64, elevation: Option<f64>) -> Result<Outputs> {
    if !(step > 0.0 && step <= 90.0) {
        return Err(Error::InvalidInput(format!("grid step must be in (0, 90], got {step}")));
    }
    let (layout, cfg) = match from {
        Some(dir) => {
            let layout = read_layout(scenario, dir)?;
            let text = fs::read_to_string(dir.join("reactances.csv"))
                .map_err(|e| Error::Io(format!("{}: {e}", dir.join("reactances.csv").display())))?;
            (layout, io::parse_reactances(&text)?)
        }
        None => {
            let (layout, cfg, _) = optimized(scenario)?;
            (layout, cfg)
        }
    };
    let imp = assemble(&layout, &scenario.p_bs, &scenario.p_ue)?;
    let currents = induced_currents(&imp, &cfg)?;
    let grid = AngleGrid::uniform(step);
    let pattern = beampattern_from_currents(&layout, &currents, &grid)?;
    let (ue_el, ue_az) = angles_deg(&layout.centroid(), &scenario.p_ue);
    let (cut_el, cut) = pattern.azimuth_cut(elevation.unwrap_or(ue_el));
    io::write(out, "beampattern.csv", &io::beampattern_csv(&pattern))?;
    io::write(out, "beampattern_cut.csv", &io::cut_csv(&grid.azimuth_deg, &cut))?;
    let summary = json!({
        "cut_elevation_deg": cut_el,
        "ue_elevation_deg": ue_el,
        "ue_azimuth_deg": ue_az,
        "hpbw_deg": hpbw(&grid.azimuth_deg, &cut).ok(),
    });
    Ok((vec!["beampattern.csv", "beampattern_cut.csv"], summary))
}

fn spacing(scenario: &Scenario, out: &Path, from: Option<&Path>, percentile: f64, bins: usize) -> Result<Outputs> {
    let layout = match from {
        Some(dir) => read_layout(scenario, dir)?,
        None => scenario.initial_layout()?,
    };
    let hist = spacing_distribution(&layout, scenario.lambda, percentile, bins)?;
    io::write(out, "spacing.csv", &io::spacing_csv(&hist))?;
    let summary = json!({ "percentile": percentile, "threshold": hist.threshold, "pairs": hist.values.len() });
    Ok((vec!["spacing.csv"], summary))
}

fn sweep(scenario: &Scenario, out: &Path, n_values: &[usize]) -> Result<Outputs> {
    let mut csv = String::from("n,iterations,initial_snr_db,final_snr_db,wall_time_s,time_per_iteration_s\n");
    for &n in n_values {
        let s = Scenario { n, ..scenario.clone() };
        let started = Instant::now();
        let (_, _, trace) = optimized(&s)?;
        let wall = started.elapsed().as_secs_f64();
        let per_iter: f64 = trace.records[1..].iter().map(|r| r.wall_time_s).sum::<f64>() / trace.iterations().max(1) as f64;
        csv.push_str(&format!(
            "{n},{},{},{},{},{}\n",
            trace.iterations(),
            io::fmt_f64(trace.initial_snr_db()),
            io::fmt_f64(trace.final_snr_db()),
            io::fmt_f64(wall),
            io::fmt_f64(per_iter)
        ));
    }
    io::write(out, "sweep.csv", &csv)?;
    Ok((vec!["sweep.csv"], json!({ "n_values": n_values })))
}
