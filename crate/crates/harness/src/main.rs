use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use rfusion::config_file::parse_scenario;
use rfusion::core::config::{Algorithm, Scenario, ScenarioConfig};
use rfusion::core::scenario::generate_episode;
use rfusion::episode_io::{read_episode, write_episode};
use rfusion::output::{write_comm, write_rmse, write_sweep, write_table1, write_trmse, Provenance};
use rfusion::runner::{
    episode_seed, replay, run_monte_carlo, run_sweep, run_table1, with_jobs, SweepParam, SweepSpec,
};

/// Outlier-robust decentralized fusion experiments.
#[derive(Parser, Debug)]
#[command(name = "rfusion", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Monte Carlo run: per-step RMSE, TRMSE and communication tables.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Also save the first run's episode in the columnar text format.
        #[arg(long, value_name = "PATH")]
        episode_out: Option<PathBuf>,
    },
    /// TRMSE over a grid of one parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// K, L, lambda, alpha or e0 (f0 follows as 1 - e0).
        #[arg(long)]
        param: SweepParam,
        /// Comma-separated grid.
        #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
        values: Vec<f64>,
    },
    /// TRMSE of the decentralized filters for L = 1..5.
    Table1 {
        #[command(flatten)]
        common: Common,
    },
    /// Rerun the filters on a saved episode.
    Replay {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "PATH")]
        episode: PathBuf,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Scenario file (TOML); defaults apply when omitted.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Master seed, overriding the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Comma-separated algorithm names, overriding the configuration.
    #[arg(long, value_delimiter = ',')]
    algorithms: Option<Vec<Algorithm>>,
}

impl Common {
    fn resolve(&self) -> Result<ScenarioConfig> {
        let mut cfg = match &self.config {
            Some(p) => parse_scenario(p)?,
            None => ScenarioConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(algs) = &self.algorithms {
            cfg.algorithms = algs.clone();
        }
        cfg.validate()?;
        fs::create_dir_all(&self.out)
            .with_context(|| format!("cannot create {}", self.out.display()))?;
        Ok(cfg)
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    let f = File::create(&path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn write_run(dir: &Path, prov: &Provenance, result: &rfusion::runner::RunResult) -> Result<()> {
    write_rmse(create(dir, "rmse.csv")?, prov, result)?;
    write_trmse(create(dir, "trmse.csv")?, prov, result)?;
    write_comm(create(dir, "comm.csv")?, prov, result)?;
    for r in &result.results {
        for (run, msg) in &r.failures {
            eprintln!("warning: {} run {run} failed: {msg}", r.algorithm);
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate {
            common,
            episode_out,
        } => {
            let cfg = common.resolve()?;
            if let Some(path) = episode_out {
                let scenario = Scenario::build(&cfg)?;
                let ep = generate_episode(&scenario.episode, episode_seed(cfg.seed, 0))?;
                let mut w = BufWriter::new(File::create(&path)?);
                write_episode(&mut w, &scenario, &ep)?;
                w.flush()?;
            }
            let result = with_jobs(common.jobs, || run_monte_carlo(&cfg))??;
            write_run(&common.out, &Provenance::new("simulate", &cfg), &result)
        }
        Command::Sweep {
            common,
            param,
            values,
        } => {
            let cfg = common.resolve()?;
            let spec = SweepSpec { param, values };
            let points = with_jobs(common.jobs, || run_sweep(&cfg, &spec))??;
            let grid: Vec<String> = spec.values.iter().map(f64::to_string).collect();
            let prov =
                Provenance::new("sweep", &cfg).with("sweep", format!("{param}={}", grid.join(",")));
            write_sweep(create(&common.out, "sweep.csv")?, &prov, param, &points)
        }
        Command::Table1 { common } => {
            let cfg = common.resolve()?;
            let points = with_jobs(common.jobs, || run_table1(&cfg))??;
            write_table1(
                create(&common.out, "table1.csv")?,
                &Provenance::new("table1", &cfg),
                &points,
            )
        }
        Command::Replay { common, episode } => {
            let cfg = common.resolve()?;
            let scenario = Scenario::build(&cfg)?;
            let file = File::open(&episode)
                .with_context(|| format!("cannot read {}", episode.display()))?;
            let ep = read_episode(BufReader::new(file), &scenario)
                .with_context(|| format!("in {}", episode.display()))?;
            let result = replay(&cfg, &ep)?;
            let prov = Provenance::new("replay", &result.config)
                .with("episode", episode.display().to_string());
            write_run(&common.out, &prov, &result)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
