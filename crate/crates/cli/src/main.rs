use clap::{Args, Parser, Subcommand};
use oscil_cli::config::{ConfigFile, RunConfig};
use oscil_cli::harness::{
    self, params_command, run_figure, run_solve, run_table, HarnessError, Method, Problem, Scale,
};
use std::path::PathBuf;
use std::process::ExitCode;

/// Spectral energy-conserving integrators for highly-oscillatory
/// Hamiltonian problems, with reproducible benchmark tables.
#[derive(Parser)]
#[command(name = "oscil", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one problem with one method and report its errors.
    Solve(SolveArgs),
    /// Reproduce a benchmark table as CSV.
    Table {
        /// One of: duffing-classical, duffing-gauss, duffing-shbvm,
        /// fpu-classical, fpu-gauss, fpu-shbvm, nls-gauss, nls-shbvm.
        #[arg(long)]
        id: String,
        /// desk: first two rows per method block; full: all published rows.
        #[arg(long, default_value = "desk")]
        scale: String,
    },
    /// Emit figure data as CSV.
    Figure {
        /// One of: g-bound, phi-u, time-vs-N.
        #[arg(long)]
        id: String,
    },
    /// Print the truncation indices selected for a given omega*h.
    Params {
        #[arg(long = "omega-h")]
        omega_h: f64,
        #[arg(long, default_value_t = 1.0)]
        nu: f64,
    },
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long = "t-end")]
    t_end: Option<f64>,
    #[arg(long)]
    nu: Option<f64>,
    /// Frequency estimate, or `auto` for the problem default.
    #[arg(long)]
    omega: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Plain-text key = value configuration file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn parse_omega(text: &str) -> Result<Option<f64>, HarnessError> {
    if text.eq_ignore_ascii_case("auto") {
        return Ok(None);
    }
    text.parse::<f64>()
        .map(Some)
        .map_err(|_| HarnessError::Config(format!("invalid omega value {text:?}")))
}

fn build_run_config(args: &SolveArgs) -> Result<RunConfig, HarnessError> {
    let file = match &args.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let problem_text = args
        .problem
        .clone()
        .or(file.problem)
        .ok_or_else(|| HarnessError::Config("missing --problem".into()))?;
    let method_text = args
        .method
        .clone()
        .or(file.method)
        .ok_or_else(|| HarnessError::Config("missing --method".into()))?;
    let steps = args
        .steps
        .or(file.steps)
        .ok_or_else(|| HarnessError::Config("missing --steps".into()))?;
    if steps == 0 {
        return Err(HarnessError::Config("--steps must be at least 1".into()));
    }
    let problem: Problem = problem_text.parse()?;
    let method: Method = method_text.parse()?;
    let omega = match &args.omega {
        Some(text) => parse_omega(text)?,
        None => match &file.omega {
            Some(text) => parse_omega(text)?,
            None => None,
        },
    };
    let mut cfg = RunConfig::new(problem, method, steps);
    cfg.t_end = args.t_end.or(file.t_end);
    cfg.nu = args.nu.or(file.nu);
    cfg.omega = omega;
    if let Some(u) = file.u {
        cfg.u = u;
    }
    cfg.out = args.out.clone().or(file.out);
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Solve(args) => {
            let cfg = build_run_config(&args)?;
            let record = run_solve(&cfg)?;
            let out = cfg.out.clone().unwrap_or_else(|| {
                PathBuf::from(format!("{}-{}-N{}.csv", cfg.problem, cfg.method, cfg.steps))
            });
            harness::write_csv(&out, std::slice::from_ref(&record))?;
            let triple = record
                .params
                .map(|(s0, s, k)| format!(" (s0,s,k)=({s0},{s},{k})"))
                .unwrap_or_default();
            let e_p = record
                .e_p
                .map(|v| format!(" e_p={v:.3e}"))
                .unwrap_or_default();
            println!(
                "{} {} N={}: e_q={:.3e}{} e_H={:.3e}{} time={:.3}s -> {}",
                cfg.problem,
                cfg.method,
                record.n,
                record.e_q,
                e_p,
                record.e_h,
                triple,
                record.time_s,
                out.display()
            );
            Ok(())
        }
        Command::Table { id, scale } => {
            let scale: Scale = scale.parse()?;
            let paths = run_table(&id, scale, std::path::Path::new("."))?;
            for p in paths {
                println!("wrote {}", p.display());
            }
            Ok(())
        }
        Command::Figure { id } => {
            let path = run_figure(&id, std::path::Path::new("."))?;
            println!("wrote {}", path.display());
            Ok(())
        }
        Command::Params { omega_h, nu } => {
            if omega_h <= 0.0 || nu < 1.0 {
                return Err(HarnessError::Config(
                    "params needs omega-h > 0 and nu >= 1".into(),
                ));
            }
            println!("{}", params_command(omega_h, nu, oscil_core::DEFAULT_EPSILON)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
