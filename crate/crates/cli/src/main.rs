//! `gibbsfield`: exact Markov/Gibbs random field computations from a field-spec file.

mod commands;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use gibbsfield::field::set_guard_limit;
use gibbsfield::{parse_spec, Model, Pattern};

use commands::{CliError, CliResult, SampleMethod};
use output::Report;

#[derive(Parser)]
#[command(
    name = "gibbsfield",
    version,
    about = "Exact Markov and Gibbs random fields with hard constraints"
)]
struct Cli {
    /// Field-spec document (TOML).
    #[arg(long, global = true)]
    spec: Option<PathBuf>,

    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Tsv)]
    format: Format,

    /// Maximum number of patterns (or table entries) any enumeration may produce.
    #[arg(long, global = true)]
    guard_limit: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Tsv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Exact,
    Gibbs,
}

#[derive(Subcommand)]
enum Command {
    /// Field summary: pattern count, constraint-set size, flip-graph components.
    Info,
    /// List the patterns satisfying every constraint.
    Support,
    /// The joint distribution on the constraint set, with ln k and P(C).
    Joint {
        /// Probabilities of the flip-graph components, for conditionals that
        /// cannot fix them (comma-separated, ordered by smallest member).
        #[arg(long, value_delimiter = ',')]
        masses: Option<Vec<f64>>,
    },
    /// Canonical clique potentials, minimal clique set and neighborhoods.
    Decompose,
    /// Run every applicable consistency check; exit 1 if any fails.
    Check {
        /// Absolute tolerance for the checks.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Draw patterns from the model.
    Sample {
        #[arg(long, value_enum, default_value_t = Method::Exact)]
        method: Method,
        /// Number of samples (after burn-in for the Gibbs sampler).
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Sweeps discarded before recording (Gibbs sampler only).
        #[arg(long, default_value_t = 0)]
        burn_in: usize,
        /// Initial pattern for the Gibbs sampler, comma-separated labels
        /// (default: the first pattern of the constraint set).
        #[arg(long, value_delimiter = ',')]
        init: Option<Vec<usize>>,
    },
}

fn load(path: &Option<PathBuf>) -> CliResult<Model> {
    let path = path
        .as_ref()
        .ok_or_else(|| CliError::Input("missing --spec <path>".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    Ok(parse_spec(&text)?)
}

fn run(cli: Cli) -> CliResult<(Report, i32)> {
    if let Some(limit) = cli.guard_limit {
        set_guard_limit(limit);
    }
    let model = load(&cli.spec)?;
    Ok(match cli.command {
        Command::Info => (commands::info(&model)?, 0),
        Command::Support => (commands::support(&model)?, 0),
        Command::Joint { masses } => (commands::joint(&model, masses.as_deref())?, 0),
        Command::Decompose => (commands::decompose(&model)?, 0),
        Command::Check { tol } => commands::check(&model, tol)?,
        Command::Sample {
            method,
            n,
            seed,
            burn_in,
            init,
        } => {
            let method = match method {
                Method::Exact => SampleMethod::Exact,
                Method::Gibbs => SampleMethod::Gibbs {
                    burn_in,
                    init: init.map(Pattern::new),
                },
            };
            (commands::sample(&model, method, n, seed)?, 0)
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let format = cli.format;
    match run(cli) {
        Ok((report, code)) => {
            let text = match format {
                Format::Tsv => report.render_tsv(),
                Format::Json => report.render_json(),
            };
            // a closed pipe is not an error worth reporting
            let _ = std::io::stdout().lock().write_all(text.as_bytes());
            ExitCode::from(code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
