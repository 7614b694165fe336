//! CSV artifacts. Every file starts with `#`-prefixed provenance lines
//! carrying the version, command, seed, configuration hash and the full
//! resolved configuration, so each artifact can be regenerated from its
//! header alone.
//!
//! Schemas (after the header):
//!
//! * `rmse.csv`: `t,<algorithm>...`, one row per step.
//! * `trmse.csv`: `algorithm,trmse,runs_ok,runs_failed,mean_z_outlier,mean_z_nominal`.
//! * `comm.csv`: `algorithm,prior_rounds,prior_reals,likelihood_rounds,likelihood_reals,reals_per_node_step`.
//! * `sweep.csv`: `param,value,algorithm,trmse,runs_ok,runs_failed`.
//! * `table1.csv`: `algorithm,L=1,...,L=5`.

use std::io::Write;

use anyhow::Result;
use rfusion_core::config::ScenarioConfig;

use crate::config_file::{config_hash, render};
use crate::runner::{RunResult, SweepParam, SweepPoint, TABLE1_ALGORITHMS};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone)]
pub struct Provenance {
    pub command: String,
    /// Additional `key: value` lines, e.g. the sweep grid.
    pub extra: Vec<(String, String)>,
    pub config: ScenarioConfig,
}

impl Provenance {
    pub fn new(command: impl Into<String>, config: &ScenarioConfig) -> Self {
        Self {
            command: command.into(),
            extra: Vec::new(),
            config: config.clone(),
        }
    }

    pub fn with(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.extra.push((key.into(), value.into()));
        self
    }

    pub fn write<W: Write>(&self, w: &mut W, artifact: &str) -> Result<()> {
        writeln!(w, "# rfusion {VERSION}")?;
        writeln!(w, "# artifact: {artifact}")?;
        writeln!(w, "# command: {}", self.command)?;
        writeln!(w, "# seed: {}", self.config.seed)?;
        writeln!(w, "# config_sha256: {}", config_hash(&self.config))?;
        for (k, v) in &self.extra {
            writeln!(w, "# {k}: {v}")?;
        }
        writeln!(w, "# config:")?;
        for line in render(&self.config).lines() {
            writeln!(w, "#   {line}")?;
        }
        Ok(())
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

fn trmse_cell(r: &crate::runner::AlgorithmResult) -> String {
    r.trmse()
        .map_or_else(|_| "NaN".to_string(), |v| v.to_string())
}

pub fn write_rmse<W: Write>(mut w: W, prov: &Provenance, result: &RunResult) -> Result<()> {
    prov.write(&mut w, "rmse")?;
    let mut csv = csv::Writer::from_writer(w);
    let mut header = vec!["t".to_string()];
    header.extend(result.results.iter().map(|r| r.algorithm.to_string()));
    csv.write_record(&header)?;
    let curves: Vec<Option<Vec<f64>>> = result.results.iter().map(|r| r.rmse().ok()).collect();
    for t in 0..result.config.steps {
        let mut row = vec![(t + 1).to_string()];
        row.extend(curves.iter().map(|c| opt(c.as_ref().map(|c| c[t]))));
        csv.write_record(&row)?;
    }
    csv.flush()?;
    Ok(())
}

pub fn write_trmse<W: Write>(mut w: W, prov: &Provenance, result: &RunResult) -> Result<()> {
    prov.write(&mut w, "trmse")?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record([
        "algorithm",
        "trmse",
        "runs_ok",
        "runs_failed",
        "mean_z_outlier",
        "mean_z_nominal",
    ])?;
    for r in &result.results {
        csv.write_record([
            r.algorithm.to_string(),
            trmse_cell(r),
            r.successful_runs().to_string(),
            r.failures.len().to_string(),
            opt(r.indicators.outlier_mean()),
            opt(r.indicators.nominal_mean()),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

pub fn write_comm<W: Write>(mut w: W, prov: &Provenance, result: &RunResult) -> Result<()> {
    prov.write(&mut w, "comm")?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record([
        "algorithm",
        "prior_rounds",
        "prior_reals",
        "likelihood_rounds",
        "likelihood_reals",
        "reals_per_node_step",
    ])?;
    let nodes =
        result.config.active_sensors + result.config.passive_sensors + result.config.comm_nodes;
    for r in &result.results {
        let c = r.comm;
        let node_steps = (r.successful_runs() * result.config.steps * nodes) as f64;
        let per = if r.algorithm.is_decentralized() && node_steps > 0.0 {
            (c.total_reals() as f64 / node_steps).to_string()
        } else {
            "0".to_string()
        };
        csv.write_record([
            r.algorithm.to_string(),
            c.prior_rounds.to_string(),
            c.prior_reals.to_string(),
            c.likelihood_rounds.to_string(),
            c.likelihood_reals.to_string(),
            per,
        ])?;
    }
    csv.flush()?;
    Ok(())
}

pub fn write_sweep<W: Write>(
    mut w: W,
    prov: &Provenance,
    param: SweepParam,
    points: &[SweepPoint],
) -> Result<()> {
    prov.write(&mut w, "sweep")?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record([
        "param",
        "value",
        "algorithm",
        "trmse",
        "runs_ok",
        "runs_failed",
    ])?;
    for p in points {
        for r in &p.result.results {
            csv.write_record([
                param.name().to_string(),
                p.value.to_string(),
                r.algorithm.to_string(),
                trmse_cell(r),
                r.successful_runs().to_string(),
                r.failures.len().to_string(),
            ])?;
        }
    }
    csv.flush()?;
    Ok(())
}

pub fn write_table1<W: Write>(mut w: W, prov: &Provenance, points: &[SweepPoint]) -> Result<()> {
    prov.write(&mut w, "table1")?;
    let mut csv = csv::Writer::from_writer(w);
    let mut header = vec!["algorithm".to_string()];
    header.extend(points.iter().map(|p| format!("L={}", p.value)));
    csv.write_record(&header)?;
    for alg in TABLE1_ALGORITHMS {
        let mut row = vec![alg.to_string()];
        row.extend(points.iter().map(|p| {
            p.result
                .get(alg)
                .map_or_else(|| "NaN".to_string(), trmse_cell)
        }));
        csv.write_record(&row)?;
    }
    csv.flush()?;
    Ok(())
}
