use clap::{Parser, Subcommand};
use pathbound::BoundMethod;
use pathbound_cli::problem::Overrides;
use pathbound_cli::{cmd_gap_study, cmd_rate_study, cmd_solve, cmd_table, GapStudyArgs, SolveArgs};
use std::path::PathBuf;
use std::process::ExitCode;

/// Dynamic optimization with path constraints enforced over the whole
/// continuous horizon.
#[derive(Parser)]
#[command(name = "pathbound", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a problem file and write a JSON report.
    Solve {
        /// Problem file (JSON).
        #[arg(long)]
        problem: PathBuf,
        /// Bound construction: tb (Taylor-Bernstein) or tm (Taylor-model).
        #[arg(long, default_value = "tb")]
        method: String,
        /// Report output path.
        #[arg(long)]
        out: PathBuf,
        /// Taylor expansion order override.
        #[arg(long)]
        q: Option<usize>,
        /// Bernstein degree override.
        #[arg(long)]
        r: Option<usize>,
        /// Smoothing parameter override.
        #[arg(long)]
        rho: Option<f64>,
        /// Stationarity tolerance override.
        #[arg(long = "eps-stat")]
        eps_stat: Option<f64>,
        /// Activity tolerance override.
        #[arg(long = "eps-act")]
        eps_act: Option<f64>,
        /// Outer iteration budget.
        #[arg(long = "max-iters")]
        max_iters: Option<usize>,
        /// Seed echoed into the report for reproducibility bookkeeping.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Start controls: one value per channel (replicated) or the full
        /// flat vector, comma-separated. Defaults to the box midpoint.
        #[arg(long = "u0")]
        start_controls: Option<String>,
    },
    /// Sample random controls and compare both bounds' overestimation gaps.
    GapStudy {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Enclosure-decay study on built-in test polynomials.
    RateStudy {
        #[arg(long)]
        out: PathBuf,
    },
    /// Aggregate solve reports into a comparison table (CSV).
    Table {
        /// Report files to aggregate.
        #[arg(long, num_args = 1.., required = true)]
        reports: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}

fn run(cli: Cli) -> Result<i32, pathbound_cli::CliError> {
    match cli.command {
        Command::Solve {
            problem,
            method,
            out,
            q,
            r,
            rho,
            eps_stat,
            eps_act,
            max_iters,
            seed,
            start_controls,
        } => {
            let method: BoundMethod = method
                .parse()
                .map_err(pathbound_cli::CliError::Config)?;
            let args = SolveArgs {
                problem,
                method,
                out,
                overrides: Overrides { q, r, rho, eps_stat, eps_act },
                max_iters,
                seed,
                start_controls,
            };
            let (report, code) = cmd_solve(&args)?;
            eprintln!(
                "{}: {} cost={:.6} iterations={} constraints={:?} wall={:.2}s",
                report.problem,
                report.status,
                report.cost,
                report.iterations,
                report.final_constraint_counts,
                report.wall_time_s
            );
            Ok(code)
        }
        Command::GapStudy { problem, samples, seed, out } => {
            let study = cmd_gap_study(&GapStudyArgs { problem, samples, seed, out })?;
            eprintln!(
                "gap study: median tb={:.4e} tm={:.4e}, iqr tb={:.4e} tm={:.4e} ({} samples)",
                study.tb.median,
                study.tm.median,
                study.tb.iqr(),
                study.tm.iqr(),
                study.tb.samples_used
            );
            Ok(pathbound_cli::EXIT_OK)
        }
        Command::RateStudy { out } => {
            let study = cmd_rate_study(&out)?;
            for s in &study.slopes {
                eprintln!(
                    "{}: bernstein slope {:.3}, interval slope {:.3}",
                    s.polynomial, s.bernstein_slope, s.interval_slope
                );
            }
            Ok(pathbound_cli::EXIT_OK)
        }
        Command::Table { reports, out } => {
            cmd_table(&reports, &out)?;
            Ok(pathbound_cli::EXIT_OK)
        }
    }
}
