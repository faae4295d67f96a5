use clap::Parser;
use skg_sim::config::{Experiment, ExperimentConfig};
use skg_sim::run_experiment;
use std::path::PathBuf;
use std::process::ExitCode;

/// Multicarrier SKG scheduling simulator and protocol demo.
#[derive(Parser, Debug)]
#[command(name = "skg-sim", version, about)]
struct Cli {
    /// efficiency | set_size | effective_rate | protocol_demo | selftest
    experiment: String,

    /// Flat key=value config file (CLI flags take precedence).
    #[arg(long)]
    config: Option<PathBuf>,

    /// Number of subcarriers N.
    #[arg(long)]
    n: Option<usize>,

    /// SNR grid in dB, e.g. "10" or "0.2,5,10".
    #[arg(long = "snr-db")]
    snr_db: Option<String>,

    /// Inverse code rate grid, e.g. "2" or "2,3".
    #[arg(long)]
    kappa: Option<String>,

    /// Key-to-data ratio grid, e.g. "1e-4:1:25log" or "0.001,0.1".
    #[arg(long = "beta-grid")]
    beta_grid: Option<String>,

    /// Delay exponent grid, e.g. "0.0001,100".
    #[arg(long)]
    theta: Option<String>,

    /// CSI error variance grid.
    #[arg(long = "sigma-e2")]
    sigma_e2: Option<String>,

    /// Monte Carlo trials per grid point.
    #[arg(long)]
    trials: Option<usize>,

    /// Master seed; identical seeds reproduce identical CSV bytes.
    #[arg(long)]
    seed: Option<u64>,

    /// Fixed-point grid for the knapsack DP, bits/s/Hz.
    #[arg(long = "dp-resolution")]
    dp_resolution: Option<f64>,

    /// Frame-duration x bandwidth product in the delay exponent.
    #[arg(long)]
    tfb: Option<f64>,

    /// Worker threads (0 = rayon default).
    #[arg(long)]
    threads: Option<usize>,

    /// CSV output path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,

    /// protocol_demo: flip this wire bit of the first extended ciphertext.
    #[arg(long = "tamper-bit")]
    tamper_bit: Option<usize>,

    /// protocol_demo: consume every CRP, then resume via 0-RTT.
    #[arg(long = "exhaust-crps")]
    exhaust_crps: bool,
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig, String> {
    let experiment: Experiment = cli.experiment.parse().map_err(|e| format!("{e}"))?;
    let mut cfg = ExperimentConfig::defaults(experiment);
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        cfg.apply_file(&text).map_err(|e| format!("{e}"))?;
    }
    let mut apply = |key: &str, value: Option<String>| -> Result<(), String> {
        if let Some(v) = value {
            cfg.apply_kv(key, &v).map_err(|e| format!("{e}"))?;
        }
        Ok(())
    };
    apply("n", cli.n.map(|v| v.to_string()))?;
    apply("snr_db", cli.snr_db.clone())?;
    apply("kappa", cli.kappa.clone())?;
    apply("beta", cli.beta_grid.clone())?;
    apply("theta", cli.theta.clone())?;
    apply("sigma_e2", cli.sigma_e2.clone())?;
    apply("trials", cli.trials.map(|v| v.to_string()))?;
    apply("seed", cli.seed.map(|v| v.to_string()))?;
    apply("dp_resolution", cli.dp_resolution.map(|v| v.to_string()))?;
    apply("tfb", cli.tfb.map(|v| v.to_string()))?;
    apply("threads", cli.threads.map(|v| v.to_string()))?;
    if let Some(out) = &cli.out {
        cfg.output_path = Some(out.clone());
    }
    cfg.tamper_bit = cli.tamper_bit;
    cfg.exhaust_crps = cli.exhaust_crps;
    cfg.validate().map_err(|e| format!("{e}"))?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match build_config(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };

    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot build thread pool: {e}");
            return ExitCode::from(1);
        }
    };

    let outcome = pool.install(|| run_experiment(&cfg));
    match outcome {
        Ok(run) => {
            if !run.summary.is_empty() {
                print!("{}", run.summary);
            }
            if !run.csv.is_empty() {
                match &cfg.output_path {
                    Some(path) => {
                        if let Err(e) = std::fs::write(path, run.csv.as_bytes()) {
                            eprintln!("error: cannot write {}: {e}", path.display());
                            return ExitCode::from(1);
                        }
                        println!("wrote {}", path.display());
                    }
                    None => print!("{}", run.csv),
                }
            }
            if run.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
