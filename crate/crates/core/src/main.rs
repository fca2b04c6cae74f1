use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cavity_thermo::commands;
use cavity_thermo::config::parse_config;
use cavity_thermo::Error;

#[derive(Parser, Debug)]
#[command(name = "cavity-thermo", version, about = "Measured-work thermodynamics of a driven cavity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run forward and backward ensembles and write work_samples.csv.
    Simulate,
    /// Analyze a work-samples file: report.json, crooks_points.csv, histogram.csv.
    Analyze {
        /// Samples file (default: <out>/work_samples.csv).
        #[arg(long)]
        samples: Option<PathBuf>,
    },
    /// Run the acceptance suite and print PASS/FAIL per criterion.
    Verify,
    /// Write the data files behind the figures.
    Figures,
}

/// Flags mirror config keys with dashes and override the config file.
#[derive(Args, Debug, Default)]
struct Flags {
    /// Config file of `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<String>,
    #[arg(long, global = true)]
    seed: Option<String>,
    #[arg(long = "n-traj", global = true)]
    n_traj: Option<String>,
    #[arg(long, global = true)]
    dt: Option<String>,
    /// 2000 trajectories and doubled statistical tolerances.
    #[arg(long, global = true)]
    quick: bool,
    #[arg(long, global = true)]
    hbar: Option<String>,
    #[arg(long, global = true)]
    omega: Option<String>,
    #[arg(long, global = true)]
    g: Option<String>,
    #[arg(long, global = true)]
    gamma: Option<String>,
    #[arg(long, global = true)]
    nbar: Option<String>,
    #[arg(long, global = true)]
    eta: Option<String>,
    #[arg(long, global = true)]
    shape: Option<String>,
    #[arg(long, global = true)]
    sigma: Option<String>,
    #[arg(long, global = true)]
    t0: Option<String>,
    #[arg(long, global = true)]
    tau: Option<String>,
    #[arg(long = "record-stride", global = true)]
    record_stride: Option<String>,
    #[arg(long = "burn-in", global = true)]
    burn_in: Option<String>,
    #[arg(long, global = true)]
    initial: Option<String>,
    #[arg(long, global = true)]
    workers: Option<String>,
    #[arg(long = "record-traj", global = true)]
    record_traj: Option<String>,
    /// Comma-separated outputs: trajectories,samples,histograms,crooks,report,figures.
    #[arg(long, global = true)]
    emit: Option<String>,
    /// Any config key as KEY=VALUE; may repeat.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Flags {
    fn overrides(&self) -> Result<Vec<(String, String)>, Error> {
        let named = [
            ("output_dir", &self.out),
            ("seed", &self.seed),
            ("n_traj", &self.n_traj),
            ("dt", &self.dt),
            ("hbar", &self.hbar),
            ("omega", &self.omega),
            ("g", &self.g),
            ("gamma", &self.gamma),
            ("nbar", &self.nbar),
            ("eta", &self.eta),
            ("shape", &self.shape),
            ("sigma", &self.sigma),
            ("t0", &self.t0),
            ("tau", &self.tau),
            ("record_stride", &self.record_stride),
            ("burn_in", &self.burn_in),
            ("initial", &self.initial),
            ("workers", &self.workers),
            ("record_traj", &self.record_traj),
            ("emit", &self.emit),
        ];
        let mut out: Vec<(String, String)> = Vec::new();
        for kv in &self.set {
            let (k, v) = kv.split_once('=').ok_or_else(|| Error::Config {
                key: kv.clone(),
                line: 0,
                message: "expected KEY=VALUE".into(),
            })?;
            out.push((k.trim().to_string(), v.trim().to_string()));
        }
        out.extend(
            named
                .into_iter()
                .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone()))),
        );
        if self.quick {
            out.push(("quick".into(), "true".into()));
        }
        Ok(out)
    }
}

fn run(cli: &Cli) -> Result<i32, Error> {
    let cfg = parse_config(cli.flags.config.as_deref(), &cli.flags.overrides()?)?;
    match &cli.command {
        Command::Simulate => commands::cmd_simulate(&cfg).map(|_| 0),
        Command::Analyze { samples } => commands::cmd_analyze(&cfg, samples.as_deref()).map(|_| 0),
        Command::Verify => commands::cmd_verify(&cfg, &mut std::io::stdout().lock()),
        Command::Figures => commands::cmd_figures(&cfg).map(|_| 0),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
