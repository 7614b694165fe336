//! Paired Monte Carlo runs: every algorithm of a run sees the same episode.

use std::fmt;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use rfusion_core::config::{Algorithm, RmseNodes, Scenario, ScenarioConfig};
use rfusion_core::consensus::CommStats;
use rfusion_core::metrics::{rmse, run_errors, run_trmse, trmse, RunErrors};
use rfusion_core::rng::derive_seed;
use rfusion_core::scenario::{generate_episode, Episode};
use rfusion_core::track::{track_episode, Track};

/// Mean final indicator over outlying and nominal measurements.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct IndicatorTally {
    pub outlier_sum: f64,
    pub outlier_count: u64,
    pub nominal_sum: f64,
    pub nominal_count: u64,
}

impl IndicatorTally {
    fn from_track(track: &Track, ep: &Episode) -> Self {
        let mut tally = Self::default();
        for (step, records) in track.indicators.iter().zip(&ep.measurements) {
            for &(node, z) in step {
                let Some(rec) = records.iter().find(|r| r.node == node) else {
                    continue;
                };
                if rec.is_outlier {
                    tally.outlier_sum += z;
                    tally.outlier_count += 1;
                } else {
                    tally.nominal_sum += z;
                    tally.nominal_count += 1;
                }
            }
        }
        tally
    }

    fn merge(&mut self, other: &Self) {
        self.outlier_sum += other.outlier_sum;
        self.outlier_count += other.outlier_count;
        self.nominal_sum += other.nominal_sum;
        self.nominal_count += other.nominal_count;
    }

    pub fn outlier_mean(&self) -> Option<f64> {
        (self.outlier_count > 0).then(|| self.outlier_sum / self.outlier_count as f64)
    }

    pub fn nominal_mean(&self) -> Option<f64> {
        (self.nominal_count > 0).then(|| self.nominal_sum / self.nominal_count as f64)
    }
}

/// Everything recorded for one algorithm across the runs.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmResult {
    pub algorithm: Algorithm,
    /// Squared position errors of each successful run, in run order.
    pub errors: Vec<RunErrors>,
    /// Time-averaged RMS error per run; `None` where the run failed.
    pub run_trmse: Vec<Option<f64>>,
    /// Communication volume summed over successful runs.
    pub comm: CommStats,
    pub indicators: IndicatorTally,
    /// `(run index, diagnostic)` for runs whose filter failed.
    pub failures: Vec<(usize, String)>,
}

impl AlgorithmResult {
    pub fn rmse(&self) -> Result<Vec<f64>> {
        rmse(&self.errors).with_context(|| format!("{}: no usable runs", self.algorithm))
    }

    pub fn trmse(&self) -> Result<f64> {
        Ok(trmse(&self.rmse()?)?)
    }

    pub fn successful_runs(&self) -> usize {
        self.errors.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub config: ScenarioConfig,
    pub results: Vec<AlgorithmResult>,
}

impl RunResult {
    pub fn get(&self, algorithm: Algorithm) -> Option<&AlgorithmResult> {
        self.results.iter().find(|r| r.algorithm == algorithm)
    }
}

struct Outcome {
    errors: RunErrors,
    trmse: f64,
    comm: CommStats,
    indicators: IndicatorTally,
}

fn evaluate(
    algorithm: Algorithm,
    scenario: &Scenario,
    ep: &Episode,
    nodes: Option<&[usize]>,
) -> rfusion_core::Result<Outcome> {
    let track = track_episode(algorithm, scenario, ep)?;
    let subset = if algorithm.is_decentralized() {
        nodes
    } else {
        None
    };
    let errors = run_errors(&track.estimates, &ep.truth, subset)?;
    if errors.iter().flatten().any(|e| !e.is_finite()) {
        return Err(rfusion_core::Error::Decomposition(
            "estimate diverged".into(),
        ));
    }
    Ok(Outcome {
        trmse: run_trmse(&errors)?,
        indicators: IndicatorTally::from_track(&track, ep),
        comm: track.comm,
        errors,
    })
}

fn assemble<'a>(
    algorithm: Algorithm,
    runs: impl Iterator<Item = &'a Result<Outcome, String>>,
) -> AlgorithmResult {
    let mut r = AlgorithmResult {
        algorithm,
        errors: Vec::new(),
        run_trmse: Vec::new(),
        comm: CommStats::default(),
        indicators: IndicatorTally::default(),
        failures: Vec::new(),
    };
    for (i, run) in runs.enumerate() {
        match run {
            Ok(o) => {
                r.errors.push(o.errors.clone());
                r.run_trmse.push(Some(o.trmse));
                r.comm.merge(&o.comm);
                r.indicators.merge(&o.indicators);
            }
            Err(msg) => {
                r.run_trmse.push(None);
                r.failures.push((i, msg.clone()));
            }
        }
    }
    r
}

/// Run `f` on a pool of `jobs` workers (all cores if `None`).
pub fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j.max(1));
    }
    Ok(builder
        .build()
        .context("cannot start worker pool")?
        .install(f))
}

/// Episode seed of run `index` under a master seed.
pub fn episode_seed(master: u64, index: usize) -> u64 {
    derive_seed(master, index as u64)
}

/// `cfg.runs` paired runs of every algorithm in `cfg.algorithms`.
///
/// Runs are evaluated in parallel on the current rayon pool and reduced in
/// run order, so results do not depend on the number of workers.
pub fn run_monte_carlo(cfg: &ScenarioConfig) -> Result<RunResult> {
    let scenario = Scenario::build(cfg)?;
    let sensor_nodes: Vec<usize> = scenario.sensors().iter().map(|(n, _)| *n).collect();
    let nodes = match cfg.rmse_nodes {
        RmseNodes::All => None,
        RmseNodes::Sensors => Some(sensor_nodes.as_slice()),
    };
    let per_run: Vec<Vec<Result<Outcome, String>>> = (0..cfg.runs)
        .into_par_iter()
        .map(
            |i| match generate_episode(&scenario.episode, episode_seed(cfg.seed, i)) {
                Ok(ep) => cfg
                    .algorithms
                    .iter()
                    .map(|&a| evaluate(a, &scenario, &ep, nodes).map_err(|e| e.to_string()))
                    .collect(),
                Err(e) => {
                    let msg = format!("episode generation: {e}");
                    cfg.algorithms.iter().map(|_| Err(msg.clone())).collect()
                }
            },
        )
        .collect();

    let results = cfg
        .algorithms
        .iter()
        .enumerate()
        .map(|(k, &algorithm)| assemble(algorithm, per_run.iter().map(|run| &run[k])))
        .collect();
    Ok(RunResult {
        config: cfg.clone(),
        results,
    })
}

/// Parameter varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    VbIters,
    ConsensusRounds,
    Lambda,
    Alpha,
    /// `e0` with `f0 = 1 - e0`.
    E0,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::VbIters => "K",
            SweepParam::ConsensusRounds => "L",
            SweepParam::Lambda => "lambda",
            SweepParam::Alpha => "alpha",
            SweepParam::E0 => "e0",
        }
    }

    /// Copy of `base` with the parameter set to `value`.
    pub fn apply(self, base: &ScenarioConfig, value: f64) -> Result<ScenarioConfig> {
        let count = |v: f64| -> Result<usize> {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                bail!("{} takes nonnegative integers, got {v}", self.name())
            }
        };
        let mut cfg = base.clone();
        match self {
            SweepParam::VbIters => cfg.vb_iters = count(value)?,
            SweepParam::ConsensusRounds => cfg.consensus_rounds = count(value)?,
            SweepParam::Lambda => cfg.lambda = value,
            SweepParam::Alpha => cfg.alpha = value,
            SweepParam::E0 => {
                cfg.e0 = value;
                cfg.f0 = 1.0 - value;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParam {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "K" | "k" | "vb_iters" => SweepParam::VbIters,
            "L" | "l" | "consensus_rounds" => SweepParam::ConsensusRounds,
            "lambda" => SweepParam::Lambda,
            "alpha" => SweepParam::Alpha,
            "e0" => SweepParam::E0,
            other => {
                bail!("unknown sweep parameter '{other}' (expected K, L, lambda, alpha or e0)")
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub result: RunResult,
}

/// One [`run_monte_carlo`] per grid value, all with the base seed.
pub fn run_sweep(base: &ScenarioConfig, spec: &SweepSpec) -> Result<Vec<SweepPoint>> {
    if spec.values.is_empty() {
        bail!("sweep over {} has no values", spec.param);
    }
    spec.values
        .iter()
        .map(|&value| {
            let cfg = spec.param.apply(base, value)?;
            Ok(SweepPoint {
                value,
                result: run_monte_carlo(&cfg)?,
            })
        })
        .collect()
}

/// Algorithms reported in the consensus-step table.
pub const TABLE1_ALGORITHMS: [Algorithm; 3] =
    [Algorithm::DRcif1, Algorithm::DRcif2, Algorithm::DCifT];

/// TRMSE for `L = 1..=5` of the decentralized algorithms.
pub fn run_table1(base: &ScenarioConfig) -> Result<Vec<SweepPoint>> {
    let cfg = ScenarioConfig {
        algorithms: TABLE1_ALGORITHMS.to_vec(),
        ..base.clone()
    };
    run_sweep(
        &cfg,
        &SweepSpec {
            param: SweepParam::ConsensusRounds,
            values: (1..=5).map(f64::from).collect(),
        },
    )
}

/// Run every algorithm of `cfg` over a single given episode.
pub fn replay(cfg: &ScenarioConfig, ep: &Episode) -> Result<RunResult> {
    let scenario = Scenario::build(cfg)?;
    let sensor_nodes: Vec<usize> = scenario.sensors().iter().map(|(n, _)| *n).collect();
    let nodes = match cfg.rmse_nodes {
        RmseNodes::All => None,
        RmseNodes::Sensors => Some(sensor_nodes.as_slice()),
    };
    let results = cfg
        .algorithms
        .iter()
        .map(|&a| {
            let outcome = evaluate(a, &scenario, ep, nodes).map_err(|e| e.to_string());
            assemble(a, std::iter::once(&outcome))
        })
        .collect();
    Ok(RunResult {
        config: ScenarioConfig {
            runs: 1,
            steps: ep.measurements.len(),
            ..cfg.clone()
        },
        results,
    })
}
