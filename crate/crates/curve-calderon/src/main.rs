use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use curve_calderon::scenario::{self, Log, Scenario, ScenarioConfig, SweepAxis};

#[derive(Parser)]
#[command(name = "curve-calderon", version, about = "CGO reconstruction of conductivities on bordered algebraic curves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Scenario file (TOML, or JSON); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for sampling and noise.
    #[arg(long)]
    seed: Option<u64>,
    /// Run a single resolution instead of the configured ladder.
    #[arg(long)]
    resolution: Option<f64>,
    /// Run a single λ, given as `re,im`.
    #[arg(long, value_parser = parse_lambda, allow_hyphen_values = true)]
    lambda: Option<[f64; 2]>,
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Build and write the meshes of the resolution ladder.
    Mesh(Common),
    /// Meshes plus the forward solve at every (h, λ).
    Forward(Common),
    /// Forward solves plus synthetic boundary data.
    SynthData(Common),
    /// Invert the boundary data previously written by `synth-data`.
    Invert(Common),
    /// Run the estimate checks.
    Validate(Common),
    /// Run the pipeline along one axis and tabulate the results.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        axis: AxisArg,
    },
    /// The whole configured pipeline.
    Run(Common),
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum AxisArg {
    Lambda,
    Resolution,
    Noise,
}

fn parse_lambda(s: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected `re,im`, got `{s}`"));
    }
    let re = parts[0].trim().parse::<f64>().map_err(|e| e.to_string())?;
    let im = parts[1].trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok([re, im])
}

/// Load the scenario and apply the command-line overrides. Nothing is
/// written before this succeeds.
fn load(common: &Common) -> curve_calderon::Result<(Scenario, PathBuf)> {
    let (mut cfg, base) = match &common.config {
        Some(p) => (ScenarioConfig::read(p)?, p.parent().map(Path::to_path_buf).unwrap_or_default()),
        None => (ScenarioConfig::default(), PathBuf::from(".")),
    };
    if let Some(out) = &common.out {
        cfg.out = out.clone();
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(h) = common.resolution {
        cfg.resolutions = vec![h];
    }
    if let Some(l) = common.lambda {
        cfg.lambdas = vec![l];
    }
    let out = cfg.out.clone();
    Ok((Scenario::new(cfg, &base)?, out))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let common = match &cli.command {
        Command::Mesh(c)
        | Command::Forward(c)
        | Command::SynthData(c)
        | Command::Invert(c)
        | Command::Validate(c)
        | Command::Run(c) => c.clone(),
        Command::Sweep { common, .. } => common.clone(),
    };
    let (mut sc, out) = match load(&common) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("[config] {e}");
            return ExitCode::from(2);
        }
    };
    let log = Log { quiet: common.quiet };
    let result = match cli.command {
        Command::Mesh(_) => scenario::write_meshes(&sc, &out, log).map(|_| true).map_err(|e| e.to_string()),
        Command::Forward(_) | Command::SynthData(_) => {
            sc.config.stages.synth_data = matches!(cli.command, Command::SynthData(_));
            sc.config.stages.invert = false;
            scenario::run_ladder(&sc, &out, log)
                .map_err(|e| e.to_string())
                .and_then(|rows| finish(&out, &rows, log))
        }
        Command::Invert(_) => {
            let rows = scenario::invert_from_files(&sc, &out, log);
            finish(&out, &rows, log)
        }
        Command::Validate(_) => scenario::validate(&sc, log)
            .and_then(|reps| {
                scenario::write_estimates(&out, &reps)?;
                for r in &reps {
                    log.info(&format!("{:<28} pass={} exponent={:?}", r.estimate_id, r.pass, r.exponent));
                }
                Ok(reps.iter().all(|r| r.pass || r.inconclusive))
            })
            .map_err(|e| format!("[validate] {e}")),
        Command::Sweep { axis, .. } => {
            let axis = match axis {
                AxisArg::Lambda => SweepAxis::Lambda,
                AxisArg::Resolution => SweepAxis::Resolution,
                AxisArg::Noise => SweepAxis::Noise,
            };
            // per-point failures are part of the table, not of the exit status
            scenario::sweep(&sc, axis, &out, log).map(|_| true).map_err(|e| format!("[sweep] {e}"))
        }
        Command::Run(_) => scenario::run(&sc, &out, log)
            .map(|v| {
                for e in v.stage_errors.iter().chain(&v.failed_assertions) {
                    eprintln!("{e}");
                }
                v.ok()
            })
            .map_err(|e| format!("[run] {e}")),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(msg) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
    }
}

fn finish(out: &Path, rows: &[scenario::PointSummary], log: Log) -> Result<bool, String> {
    curve_calderon::report::write_json(&out.join("summary.json"), rows).map_err(|e| e.to_string())?;
    scenario::write_plot_data(out, rows).map_err(|e| e.to_string())?;
    let failed: Vec<&String> = rows.iter().filter_map(|r| r.error.as_ref()).collect();
    for e in &failed {
        log.info(e);
    }
    Ok(failed.is_empty())
}
