use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use mmplc_core::analysis::regime_report;
use mmplc_core::experiments::{
    edge_law_experiment, emit_csv, emit_svg_scatter, fig1_experiment, lsv_law_experiment, read_csv,
    regime_scan, run_monte_carlo, DEFAULT_SEED, DEFAULT_Y_PRIME_GRID,
};
use mmplc_core::{NoiseMode, PrecoderKind, SimConfig, SystemParams};

#[derive(Parser)]
#[command(
    name = "mmplc",
    version,
    about = "Monte-Carlo experiments for MIMO physical-layer encryption"
)]
struct Cli {
    /// Master seed for every random stream.
    #[arg(long, global = true, env = "MMPLC_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,

    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte-Carlo simulation and print the aggregate report as JSON.
    Simulate(SimulateArgs),
    /// Advantage of the inverse precoder over square channels.
    Fig1 {
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        /// Per-trial CSV output.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Scatter of log10(adv) against trial index.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Extreme singular values of tall Gaussian matrices against their limits.
    Edges {
        #[arg(long, default_value_t = 200)]
        nt: usize,
        /// Row-to-column ratio.
        #[arg(long, default_value_t = 4.0)]
        yp: f64,
        #[arg(long, default_value_t = 500)]
        trials: usize,
    },
    /// Least singular value of square Gaussian matrices against its limit law.
    Lsv {
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
    },
    /// Hardness and zero-forcing break conditions for one point or a scan.
    Regime(RegimeArgs),
    /// Render log10(adv) from a simulation CSV as an SVG scatter.
    Plot {
        csv: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Height of the reference line; defaults to log10(n_t²) for `--n`.
        #[arg(long)]
        reference: Option<f64>,
        #[arg(long, default_value_t = 200)]
        n: usize,
    },
}

#[derive(Args)]
struct SystemArgs {
    #[arg(long, default_value_t = 64)]
    nt: usize,
    #[arg(long, default_value_t = 64)]
    nr: usize,
    #[arg(long, default_value_t = 64)]
    nrp: usize,
    #[arg(long, default_value_t = 2)]
    m: u32,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Eavesdropper noise scale; defaults to `--alpha`.
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, default_value_t = 0.05)]
    eps: f64,
    #[arg(long, default_value_t = 0.01)]
    epsp: f64,
}

impl SystemArgs {
    fn params(&self) -> Result<SystemParams> {
        let beta = self.beta.unwrap_or(self.alpha);
        Ok(SystemParams::with_beta(
            self.nt, self.nr, self.nrp, self.m, self.alpha, beta,
        )?)
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[arg(long, default_value = "svd")]
    precoder: PrecoderKind,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    /// Clamp estimates to the constellation before symbol comparison.
    #[arg(long)]
    clamp: bool,
    /// Noise setting: fixed, cap or silent.
    #[arg(long, default_value = "fixed")]
    noise: NoiseMode,
    /// Per-trial CSV output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RegimeArgs {
    #[command(flatten)]
    system: SystemArgs,
    /// Scan `n_t` values over the default ratio grid instead of one point.
    #[arg(long, value_delimiter = ',')]
    scan: Option<Vec<usize>>,
    /// `mα = √n_t · (1 + margin)` in scan mode.
    #[arg(long, default_value_t = 0.0125)]
    margin: f64,
    /// Print JSON instead of the text block.
    #[arg(long)]
    json: bool,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let seed = cli.seed;
    let workers = cli.workers;
    match cli.command {
        Command::Simulate(a) => {
            let mut config = SimConfig::new(a.system.params()?, a.precoder, a.trials, seed);
            config.epsilon = a.system.eps;
            config.epsilon_prime = a.system.epsp;
            config.clamp_mode = a.clamp;
            config.noise = a.noise;
            config.workers = workers;
            config.output_path = a.out;
            let run = run_monte_carlo(&config)?;
            println!("{}", run.report.to_json()?);
        }
        Command::Fig1 {
            n,
            trials,
            out,
            svg,
        } => {
            let report = fig1_experiment(n, trials, seed, workers)?;
            if let Some(path) = &out {
                emit_csv(&report.records, path)?;
            }
            if let Some(path) = &svg {
                emit_svg_scatter(
                    &report.log10_adv_series(),
                    report.reference_log10,
                    "log10 adv",
                    path,
                )?;
            }
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Edges { nt, yp, trials } => {
            let report = edge_law_experiment(nt, yp, trials, seed, workers)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Lsv { n, trials } => {
            let report = lsv_law_experiment(n, trials, seed, workers)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Regime(a) => match &a.scan {
            Some(n_ts) => {
                let scan = regime_scan(
                    n_ts,
                    DEFAULT_Y_PRIME_GRID,
                    a.system.eps,
                    a.system.epsp,
                    a.margin,
                )?;
                if a.json {
                    println!("{}", serde_json::to_string_pretty(&scan)?);
                } else {
                    print!("{scan}");
                }
            }
            None => {
                let report = regime_report(&a.system.params()?, a.system.eps, a.system.epsp)?;
                if a.json {
                    println!("{}", report.to_json()?);
                } else {
                    println!("{report}");
                }
            }
        },
        Command::Plot {
            csv,
            out,
            reference,
            n,
        } => {
            let records = read_csv(&csv)?;
            let series: Vec<f64> = records
                .iter()
                .filter(|r| !r.failed)
                .map(|r| r.log10_adv)
                .collect();
            if series.is_empty() {
                bail!("{} has no completed trials", csv.display());
            }
            let reference = reference.unwrap_or(2.0 * (n as f64).log10());
            emit_svg_scatter(&series, reference, "log10 adv", &out)
                .with_context(|| format!("plotting {}", csv.display()))?;
            eprintln!("wrote {} points to {}", series.len(), out.display());
        }
    }
    Ok(())
}
