use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use h1stiefel_cli::commands::{self, Outcome};
use h1stiefel_cli::config::{RunConfig, Setup};
use h1stiefel_cli::CliError;

/// Numerical checks for Stiefel and Grassmann manifolds over a discretized H1 space.
#[derive(Parser, Debug)]
#[command(name = "h1stiefel", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    global: GlobalArgs,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory for reports.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true)]
    trials: Option<usize>,

    /// Matrix file with the reference basis (n x N).
    #[arg(long, global = true)]
    frame: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Run every randomized property suite and write validate.json.
    Validate,
    /// Cross-section residuals at increasing distances; writes section_demo.csv.
    SectionDemo,
    /// Truncated square-root series against the eigen oracle; writes sqrt_bench.csv.
    SqrtBench,
    /// Curve lengths and norm comparisons; writes geometry.csv and sandwich.csv.
    Geometry,
}

fn resolve(args: &GlobalArgs) -> Result<RunConfig, CliError> {
    let mut config = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(out) = &args.out {
        config.output_dir = out.clone();
    }
    if let Some(trials) = args.trials {
        config.trials = trials;
    }
    if let Some(frame) = &args.frame {
        config.reference_frame = Some(frame.clone());
    }
    Ok(config)
}

fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let config = resolve(&cli.global)?;
    let setup = Setup::new(&config)?;
    match cli.command {
        Command::Validate => commands::validate(&config, &setup),
        Command::SectionDemo => commands::section_demo(&config, &setup),
        Command::SqrtBench => commands::sqrt_bench(&config, &setup),
        Command::Geometry => commands::geometry(&config, &setup),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(outcome) => {
            let mut stdout = std::io::stdout().lock();
            let _ = outcome
                .lines
                .iter()
                .try_for_each(|line| writeln!(stdout, "{line}"))
                .and_then(|_| outcome.files.iter().try_for_each(|f| writeln!(stdout, "wrote {}", f.display())));
            ExitCode::from(if outcome.pass { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
