use std::path::PathBuf;
use std::process::ExitCode;

use bouncer_cli::{list_presets, parse_with_base, resolve_out_dir, run_scenario, CliError, RunOptions};
use clap::Parser;

/// Run n-slit flux-line experiments and write plot-ready artifacts.
#[derive(Debug, Parser)]
#[command(name = "bouncer", version)]
struct Args {
    /// TOML experiment configuration.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Built-in preset, used as the base of --config when given.
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
    /// Output directory (default: outputs.directory, then $BOUNCER_OUT_DIR, then ./bouncer-out).
    #[arg(long, value_name = "PATH")]
    out_dir: Option<PathBuf>,
    /// Ensemble seed, overriding the config.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Worker threads for the ensemble.
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
    /// Cross-check channel velocities against the grid solver and fail on disagreement.
    #[arg(long)]
    check_oracle: bool,
    /// Write the intensity field grid.
    #[arg(long)]
    emit_fields: bool,
    /// Print the built-in presets and exit.
    #[arg(long)]
    list_presets: bool,
}

fn run(args: Args) -> Result<(), CliError> {
    if args.list_presets {
        for p in list_presets() {
            println!("{:<14} {}", p.name, p.description);
        }
        return Ok(());
    }
    let text = match &args.config {
        Some(path) => std::fs::read_to_string(path).map_err(|e| {
            CliError::Config(bouncer_cli::ConfigError {
                violations: vec![bouncer_cli::Violation {
                    path: String::new(),
                    message: format!("cannot read {}: {e}", path.display()),
                }],
            })
        })?,
        None if args.preset.is_some() => String::new(),
        None => {
            return Err(CliError::Config(bouncer_cli::ConfigError {
                violations: vec![bouncer_cli::Violation {
                    path: String::new(),
                    message: "pass --config PATH or --preset NAME (see --list-presets)".into(),
                }],
            }))
        }
    };
    let mut config = parse_with_base(&text, args.preset.as_deref())?;
    if let Some(seed) = args.seed {
        config.ensemble.seed = seed;
    }
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Guard(format!("thread pool: {e}")))?;
    }
    let out_dir = resolve_out_dir(
        args.out_dir.as_deref(),
        &config,
        std::env::var_os(bouncer_cli::OUT_DIR_ENV),
    );
    let options = RunOptions {
        out_dir: out_dir.clone(),
        check_oracle: args.check_oracle,
        emit_fields: args.emit_fields,
    };
    let (manifest, output) = run_scenario(&config, &options)?;
    for p in &output.summary.particles {
        println!(
            "particle {}: {} trajectories, {} stopped at nodes, KS distance {:.4}, minima {}/{}",
            p.particle,
            p.count,
            p.flagged,
            p.screen.ks_distance,
            p.screen.histogram_minima.len(),
            p.screen.analytic_minima.len()
        );
        for k in &p.kicks {
            println!(
                "  kick at t = {}: mean {:.4e} +- {:.1e} ({:.1} standard errors)",
                k.event_time, k.mean, k.std_error, k.significance
            );
        }
    }
    println!(
        "wrote {} artifacts and manifest.json to {}",
        manifest.artifacts.len(),
        out_dir.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
