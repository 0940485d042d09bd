//! Command-line front end: run solves, emit bound reports and series tables,
//! compare against the finite-difference reference, and serialize results.
//!
//! Exit codes: 0 success, 2 success with a proven-regime warning (the run is
//! valid but outside the coupling range the convergence theory covers),
//! 1 failure.

mod output;

use clap::{Args, Parser, Subcommand, ValueEnum};
use doublewell::bounds::{analytic_bounds, j_envelope_check, verify};
use doublewell::iterate_even::solve_even;
use doublewell::model::ModelParams;
use doublewell::oracle::{default_step, oracle_levels};
use doublewell::plus_odd::{solve_odd, solve_plus};
use doublewell::series::{asymptotic_check, build_pyramid, optimal_truncation, table1_ratios};
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(
    name = "doublewell",
    about = "Iterative eigenstate solver for the one-dimensional quartic double well",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
struct NumericArgs {
    /// Coupling of the quartic well (must be > 1)
    #[arg(long)]
    g: f64,
    /// Domain cutoff override
    #[arg(long)]
    x_max: Option<f64>,
    /// Grid density override (default 2000)
    #[arg(long)]
    n_cells: Option<usize>,
    /// Energy-shift convergence tolerance override
    #[arg(long)]
    tol_energy: Option<f64>,
    /// Iterate sup-norm tolerance override
    #[arg(long)]
    tol_fn: Option<f64>,
    /// Iteration cap override
    #[arg(long)]
    max_iter: Option<usize>,
}

impl NumericArgs {
    fn params(&self) -> doublewell::Result<ModelParams> {
        let mut p = ModelParams::new(self.g)?;
        if let Some(x) = self.x_max {
            p = p.with_x_max(x)?;
        }
        if let Some(n) = self.n_cells {
            p = p.with_n_cells(n)?;
        }
        if let Some(t) = self.tol_energy {
            p.tol_energy = t;
        }
        if let Some(t) = self.tol_fn {
            p.tol_fn = t;
        }
        if let Some(m) = self.max_iter {
            p.max_iter = m;
        }
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Output path (stdout when omitted)
    #[arg(long)]
    out: Option<std::path::PathBuf>,
    /// Output format
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Keep every n-th grid row in solution tables
    #[arg(long, default_value_t = 1)]
    stride: usize,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the lowest even state
    SolveEven {
        #[command(flatten)]
        numeric: NumericArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Solve the Robin-boundary intermediate state
    SolvePlus {
        #[command(flatten)]
        numeric: NumericArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Solve the lowest odd state
    SolveOdd {
        #[command(flatten)]
        numeric: NumericArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Evaluate analytic bounds and verify them against a full solve
    Bounds {
        #[command(flatten)]
        numeric: NumericArgs,
        #[command(flatten)]
        output: OutputArgs,
        /// Emit closed-form bounds only, without running solves
        #[arg(long)]
        skeleton: bool,
    },
    /// Generate the exact series-coefficient table
    Series {
        /// Highest order to generate
        #[arg(long, default_value_t = 10)]
        m_max: usize,
        /// Optional coupling for the truncation diagnostic
        #[arg(long)]
        g: Option<f64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run the finite-difference reference solver
    Oracle {
        #[command(flatten)]
        numeric: NumericArgs,
        /// Mesh step override (default 0.01/sqrt(g))
        #[arg(long)]
        step: Option<f64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Compare the iterative energies against the reference solver
    Compare {
        #[command(flatten)]
        numeric: NumericArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
}

fn main() -> ExitCode {
    // clap's default error exit code collides with the regime-warning code;
    // usage errors must exit 1, help/version 0
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e)
            if e.kind() == clap::error::ErrorKind::DisplayHelp
                || e.kind() == clap::error::ErrorKind::DisplayVersion =>
        {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::FAILURE;
        }
    };
    match run(cli) {
        Ok(regime_warning) => {
            if regime_warning {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> doublewell::Result<bool> {
    match cli.command {
        Command::SolveEven { numeric, output } => {
            let params = numeric.params()?;
            let sol = solve_even(&params)?;
            let doc = output::even_document(&sol, output.stride.max(1));
            output::emit(&output.out, output.format == Format::Csv, &doc)?;
            Ok(sol.trace.regime_warning)
        }
        Command::SolvePlus { numeric, output } => {
            let params = numeric.params()?;
            let sol = solve_plus(&params)?;
            let doc = output::plus_document(&sol, output.stride.max(1));
            output::emit(&output.out, output.format == Format::Csv, &doc)?;
            Ok(sol.trace.regime_warning)
        }
        Command::SolveOdd { numeric, output } => {
            let params = numeric.params()?;
            let sol = solve_odd(&params)?;
            let doc = output::odd_document(&sol, output.stride.max(1));
            output::emit(&output.out, output.format == Format::Csv, &doc)?;
            Ok(sol.trace.regime_warning)
        }
        Command::Bounds {
            numeric,
            output,
            skeleton,
        } => {
            let params = numeric.params()?;
            if skeleton {
                let report = analytic_bounds(params.g)?;
                let doc = output::bounds_document(&report, None, None);
                output::emit(&output.out, output.format == Format::Csv, &doc)?;
                return Ok(params.g < 5.0);
            }
            let even = solve_even(&params)?;
            let odd = solve_odd(&params)?;
            let (report, quantities) = verify(&even, &odd.plus, &odd)?;
            let envelope = j_envelope_check(&params)?;
            let warn = report.status != doublewell::bounds::ReportStatus::Pass;
            let doc = output::bounds_document(&report, Some(&quantities), Some(&envelope));
            output::emit(&output.out, output.format == Format::Csv, &doc)?;
            if report.status == doublewell::bounds::ReportStatus::Fail {
                return Err(doublewell::Error::ShapeViolation(
                    "bound verification failed; see report".to_string(),
                ));
            }
            Ok(warn)
        }
        Command::Series { m_max, g, output } => {
            let table = build_pyramid(m_max)?;
            let ratios = table1_ratios(&table);
            let growth = asymptotic_check(&table);
            let truncation = g.and_then(|g| optimal_truncation(&table, g).map(|m| (g, m)));
            let doc = output::series_document(&table, &ratios, &growth, truncation);
            output::emit(&output.out, output.format == Format::Csv, &doc)?;
            Ok(false)
        }
        Command::Oracle {
            numeric,
            step,
            output,
        } => {
            let params = numeric.params()?;
            let h = step.unwrap_or_else(|| default_step(params.g));
            let levels = oracle_levels(params.g, h, params.x_max)?;
            let doc = output::oracle_document(&levels);
            output::emit(&output.out, output.format == Format::Csv, &doc)?;
            Ok(false)
        }
        Command::Compare { numeric, output } => {
            let params = numeric.params()?;
            let threads: usize = std::env::var("DOUBLEWELL_THREADS")
                .ok()
                .and_then(|v| v.parse().ok())
                .unwrap_or(2);
            let h = default_step(params.g);
            let (iterative, reference) = if threads >= 2 {
                std::thread::scope(|scope| {
                    let oracle_job = scope.spawn(|| oracle_levels(params.g, h, params.x_max));
                    let even = solve_even(&params);
                    let odd = solve_odd(&params);
                    let levels = oracle_job.join().expect("oracle thread panicked");
                    ((even, odd), levels)
                })
            } else {
                let even = solve_even(&params);
                let odd = solve_odd(&params);
                let levels = oracle_levels(params.g, h, params.x_max);
                ((even, odd), levels)
            };
            let even = iterative.0?;
            let odd = iterative.1?;
            let levels = reference?;
            let warn = even.trace.regime_warning;
            let doc = output::compare_document(&even, &odd, &levels);
            output::emit(&output.out, output.format == Format::Csv, &doc)?;
            Ok(warn)
        }
    }
}
