use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use jsac_sdr::baselines::all_baselines;
use jsac_sdr::cli::{
    baseline_rows, emit_csv, emit_diagnostics, parse_seed_range, run_verify, solve_point,
    sweep_scenario, to_db, AlphaGrid, RunConfig,
};
use jsac_sdr::linalg::CVector;
use jsac_sdr::scenario::{generate, Scenario};
use jsac_sdr::sdp::SolveDiagnostics;
use jsac_sdr::Result;

#[derive(Parser)]
#[command(
    name = "jsac",
    version,
    about = "Optimal joint sensing and communication beamforming for two cell-free APs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Input {
    /// JSON config (scenario keys, optional `tau_rank` and `alphas`)
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV with columns h1_re,h1_im,...,g2_im replacing the generated channels
    #[arg(long)]
    channels: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one α and print the optimum as JSON
    Solve {
        #[arg(long)]
        alpha: f64,
        #[command(flatten)]
        input: Input,
    },
    /// Sweep α and write region.csv, points.csv and baselines.csv
    Sweep {
        /// Point count (uniform from 1 to 0) or comma-separated α list
        #[arg(long)]
        alphas: Option<AlphaGrid>,
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Also write diagnostics.json with one record per solve
        #[arg(long)]
        diagnostics: bool,
    },
    /// Print the benchmark operating points
    Baselines {
        #[command(flatten)]
        input: Input,
    },
    /// Run every optimality certificate; exits nonzero on failure
    Verify {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Half-open seed range `a..b`
        #[arg(long)]
        seeds: Option<String>,
    },
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

fn load(input: &Input) -> Result<(RunConfig, Scenario)> {
    let config = load_config(input.config.as_deref())?;
    let scenario = match &input.channels {
        Some(p) => Scenario::from_channels_csv(p, config.scenario.clone())?,
        None => generate(&config.scenario)?,
    };
    Ok((config, scenario))
}

#[derive(Serialize)]
struct SolveOutput {
    alpha: f64,
    value: f64,
    snr_c: f64,
    snr_s: f64,
    snr_c_db: f64,
    snr_s_db: f64,
    w1: CVector,
    w2: CVector,
    lambda1: f64,
    lambda2: f64,
    diagnostics: SolveDiagnostics,
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Solve { alpha, input } => {
            let (config, s) = load(&input)?;
            let (sol, point) = solve_point(&s, alpha, &config.tolerances())?;
            let out = SolveOutput {
                alpha,
                value: sol.primal_value,
                snr_c: point.snr_c,
                snr_s: point.snr_s,
                snr_c_db: point.snr_c_db,
                snr_s_db: point.snr_s_db,
                w1: sol.pair.w1.clone(),
                w2: sol.pair.w2.clone(),
                lambda1: sol.rank_certificate.lambda1,
                lambda2: sol.rank_certificate.lambda2,
                diagnostics: point.diagnostics,
            };
            println!("{}", serde_json::to_string_pretty(&out)?);
        }
        Command::Sweep {
            alphas,
            input,
            out,
            diagnostics,
        } => {
            let (config, s) = load(&input)?;
            let grid = alphas
                .or_else(|| config.alphas.clone().map(AlphaGrid::List))
                .unwrap_or(AlphaGrid::Count(101));
            let report = sweep_scenario(&s, &grid.values()?, &config.tolerances())?;
            emit_csv(&report, &out)?;
            if diagnostics {
                emit_diagnostics(&report, out.join("diagnostics.json"))?;
            }
            let c = &report.certificates;
            println!(
                "{} points, {} on the frontier; max lambda2/lambda1 {:.1e}, max rel gap {:.1e}, max Tr(WZ) {:.1e}",
                report.points.len(),
                report.frontier().len(),
                c.max_eigen_ratio,
                c.max_relative_gap,
                c.max_complementarity
            );
            if !report.is_monotone() {
                eprintln!(
                    "warning: frontier not monotone (violation {:.3e})",
                    report.monotonicity_violation()
                );
            }
        }
        Command::Baselines { input } => {
            let (_, s) = load(&input)?;
            println!("name,snr_c_db,snr_s_db");
            for (name, c, sn) in baseline_rows(&all_baselines(&s)) {
                println!("{name},{:.6},{:.6}", to_db(c), to_db(sn));
            }
        }
        Command::Verify { config, seeds } => {
            let config = load_config(config.as_deref())?;
            let seeds = seeds.as_deref().map(parse_seed_range).transpose()?;
            let report = run_verify(&config, seeds)?;
            println!("{report}");
            if !report.passed() {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
