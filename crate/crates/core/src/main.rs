use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qhid::config::ExperimentConfig;
use qhid::experiment::{build_basis, describe_basis, describe_truth, Experiment};
use qhid::io;
use qhid::Result;

#[derive(Parser)]
#[command(name = "qhid", version, about = "Hamiltonian identification under colored measurement noise")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the configured system and write trajectory.csv and ground_truth.txt.
    Simulate(Common),
    /// Identify unknown parameters from a trajectory CSV.
    Identify {
        #[command(flatten)]
        common: Common,
        /// Trajectory CSV; defaults to <out>/trajectory.csv.
        #[arg(long)]
        trajectory: Option<PathBuf>,
    },
    /// Compare theoretical and Welch-estimated noise spectra.
    NoiseCheck(Common),
    /// Dump the basis and its structure constants.
    Basis(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to out/<config name>.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    starts: Option<usize>,
}

impl Common {
    fn load(&self) -> Result<(ExperimentConfig, PathBuf)> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.sampling.seed = seed;
            cfg.identify.seed = seed;
        }
        if let Some(starts) = self.starts {
            cfg.identify.starts = starts;
        }
        cfg.validate()?;
        let out = match &self.out {
            Some(p) => p.clone(),
            None => {
                let stem = self
                    .config
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| cfg.slug());
                Path::new("out").join(stem)
            }
        };
        fs::create_dir_all(&out)?;
        Ok((cfg, out))
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(c) => {
            let (cfg, out) = c.load()?;
            let exp = Experiment::new(cfg)?;
            let sim = exp.simulate()?;
            let extra: Vec<(&str, Vec<f64>)> = sim
                .quantum
                .channel_names
                .iter()
                .enumerate()
                .map(|(l, n)| (n.as_str(), sim.quantum.channel(l)))
                .collect();
            io::write_trajectory(&out.join("trajectory.csv"), &sim.measured, &extra)?;
            fs::write(out.join("ground_truth.txt"), describe_truth(&exp, &sim.truth)?)?;
            println!("wrote {} samples to {}", sim.measured.len(), out.display());
        }
        Command::Identify { common, trajectory } => {
            let (cfg, out) = common.load()?;
            let exp = Experiment::new(cfg)?;
            let path = trajectory.unwrap_or_else(|| out.join("trajectory.csv"));
            let traj = io::read_trajectory(&path)?;
            let res = exp.identify(&traj)?;
            let real = res.realization.as_ref().expect("identify records the realization");
            io::write_singular_values(&out.join("singular_values.csv"), &real.singular_values)?;
            fs::write(out.join("realization.txt"), io::format_realization(&real.era))?;
            fs::write(out.join("report.txt"), io::format_report(&res))?;
            io::write_histories(&out.join("histories.csv"), &res)?;
            let best = res.best_solution();
            for (n, v) in res.names.iter().zip(&best.params) {
                println!("{n} = {v:.10}");
            }
            println!("residual {:.3e}, {} solution cluster(s)", best.residual, res.solutions.len());
        }
        Command::NoiseCheck(c) => {
            let (cfg, out) = c.load()?;
            let exp = Experiment::new(cfg)?;
            let chk = exp.noise_check()?;
            io::write_csv(
                &out.join("noise_psd.csv"),
                &["omega", "S_theory", "S_welch_tf", "S_welch_realization"],
                &[&chk.omega, &chk.theory, &chk.welch_tf, &chk.welch_realization],
            )?;
            println!("wrote {} frequencies to {}", chk.omega.len(), out.display());
        }
        Command::Basis(c) => {
            let (cfg, out) = c.load()?;
            let basis = build_basis(&cfg)?;
            fs::write(out.join("basis.txt"), describe_basis(&basis))?;
            println!("{} elements of su({})", basis.len(), basis.dim());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
