//! Command-line front end: solve single instances, run Monte Carlo sweeps,
//! compare BB against AO, and generate channel files.
//!
//! Exit codes: 0 on success, 2 when a solve is infeasible or degraded,
//! 1 on usage or input errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use maxmin_beam::ao::{ao_solve, AoConfig};
use maxmin_beam::io;
use maxmin_beam::model::{ChannelSet, PhaseConstraint, Solution, SolveStatus};
use maxmin_beam::sweep::{run_sweep, SweepConfig};
use maxmin_beam::{
    generate_channels, solve_binary, solve_continuous_with, solve_mary, SbbOptions,
};

#[derive(Parser)]
#[command(name = "maxmin-beam", version, about = "Max-min analog beamforming solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance from a channel file.
    Solve(SolveArgs),
    /// Run a Monte Carlo sweep described by a JSON config.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print BB and AO objectives plus their relative gap for one instance.
    Compare {
        #[arg(long)]
        channels: PathBuf,
        /// Number of discrete phase levels.
        #[arg(long, default_value_t = 4)]
        m: u32,
    },
    /// Generate a seeded Rayleigh channel file.
    GenChannels {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n: usize,
        /// Trial index within the seed's stream.
        #[arg(long, default_value_t = 0)]
        trial: u64,
        #[arg(long, default_value_t = 1.0)]
        sigma2: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    channels: PathBuf,
    /// binary | mary | continuous | ao-binary | ao-mary | ao-continuous
    #[arg(long)]
    mode: String,
    /// Number of discrete phase levels for the mary modes.
    #[arg(long)]
    m: Option<u32>,
    /// Certified-gap tolerance for the continuous solver.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Total transmit power budget (linear units).
    #[arg(long, conflicts_with = "power_dbm")]
    power_linear: Option<f64>,
    /// Total transmit power budget in dBm (linear = 10^(dBm/10)).
    #[arg(long)]
    power_dbm: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Solve(args) => solve_command(args),
        Command::Sweep { config, out } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| format!("cannot read {}: {e}", config.display()))?;
            let cfg: SweepConfig =
                serde_json::from_str(&text).map_err(|e| format!("bad sweep config: {e}"))?;
            let rows = run_sweep(&cfg);
            io::write_sweep_csv(&out, &rows).map_err(|e| e.to_string())?;
            println!("wrote {} rows to {}", rows.len(), out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Compare { channels, m } => {
            let ch = io::read_channels(&channels).map_err(|e| e.to_string())?;
            let bb = solve_mary(&ch, m).map_err(|e| e.to_string())?;
            let ao = ao_solve(&ch, PhaseConstraint::Mary { m }, &AoConfig::default())
                .map_err(|e| e.to_string())?;
            println!("bb objective: {}", io::format_float(bb.objective));
            println!("ao objective: {}", io::format_float(ao.objective));
            let gap = if bb.objective.is_finite() && bb.objective > 0.0 {
                (ao.objective - bb.objective) / bb.objective
            } else {
                0.0
            };
            println!("relative gap:  {}", io::format_float(gap));
            Ok(exit_for(&bb))
        }
        Command::GenChannels {
            seed,
            k,
            n,
            trial,
            sigma2,
            out,
        } => {
            if k == 0 || n == 0 {
                return Err("need k >= 1 and n >= 1".into());
            }
            let ch = generate_channels(seed, trial, k, n);
            let ch = if sigma2 == 1.0 {
                ch
            } else {
                ChannelSet::new(ch.channels().to_vec(), sigma2)
                    .map_err(|e| e.to_string())?
            };
            io::write_channels(&out, &ch).map_err(|e| e.to_string())?;
            println!("wrote {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn solve_command(args: SolveArgs) -> Result<ExitCode, String> {
    let ch = io::read_channels(&args.channels).map_err(|e| e.to_string())?;
    let power = match (args.power_linear, args.power_dbm) {
        (Some(p), None) => p,
        (None, Some(d)) => 10f64.powf(d / 10.0),
        (None, None) => 10.0, // 10 dBm default
        (Some(_), Some(_)) => unreachable!("clap forbids both"),
    };
    if !(power > 0.0) {
        return Err(format!("power budget must be positive, got {power}"));
    }
    let epsilon = args.epsilon.unwrap_or(1e-3);
    let m = args.m.unwrap_or(4);

    let mut sol: Solution = match args.mode.as_str() {
        "binary" => solve_binary(&ch),
        "mary" => solve_mary(&ch, m),
        "continuous" => {
            let opts = SbbOptions {
                epsilon,
                ..SbbOptions::default()
            };
            solve_continuous_with(&ch, &opts)
        }
        "ao-binary" => ao_solve(&ch, PhaseConstraint::Binary, &AoConfig::default()),
        "ao-mary" => ao_solve(&ch, PhaseConstraint::Mary { m }, &AoConfig::default()),
        "ao-continuous" => ao_solve(&ch, PhaseConstraint::Continuous, &AoConfig::default()),
        other => return Err(format!("unknown mode `{other}`")),
    }
    .map_err(|e| e.to_string())?;
    sol.rescale_power(power);
    io::write_solution(&args.out, &sol).map_err(|e| e.to_string())?;
    println!(
        "objective {}  snr_floor {}  status {:?}",
        io::format_float(sol.objective),
        io::format_float(sol.snr_floor),
        sol.status
    );
    Ok(exit_for(&sol))
}

fn exit_for(sol: &Solution) -> ExitCode {
    match sol.status {
        SolveStatus::Infeasible | SolveStatus::Degraded => ExitCode::from(2),
        _ => ExitCode::SUCCESS,
    }
}
