//! Columnar text format for episodes.
//!
//! One record per line, `t,node,kind,values,outlier`, after a `#` header:
//!
//! * `0,,init,<x̂₀|₀>,` the filters' initial estimate;
//! * `t,,truth,<x_t>,` the true state at step `t`;
//! * `t,<node>,active|passive,<y>,0|1` one measurement and its outlier label.
//!
//! Vector components are `;`-separated and written in shortest round-trip
//! form, so reading a file back reproduces the episode bit for bit.

use std::io::{BufRead, Write};

use anyhow::{bail, ensure, Context, Result};
use rfusion_core::config::Scenario;
use rfusion_core::scenario::{CtState, Episode, MeasurementRecord};
use rfusion_core::DVector;

pub const HEADER: &str = "# rfusion episode v1\n# t,node,kind,values,outlier\n";

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format!("{v:?}"))
        .collect::<Vec<_>>()
        .join(";")
}

fn split(field: &str) -> Result<Vec<f64>> {
    field
        .split(';')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .with_context(|| format!("bad number '{v}'"))
        })
        .collect()
}

pub fn write_episode<W: Write>(mut w: W, scenario: &Scenario, ep: &Episode) -> Result<()> {
    w.write_all(HEADER.as_bytes())?;
    writeln!(w, "0,,init,{},", join(ep.initial_estimate.as_slice()))?;
    for (t, (x, records)) in ep.truth.iter().zip(&ep.measurements).enumerate() {
        let t = t + 1;
        writeln!(w, "{t},,truth,{},", join(&x.to_array()))?;
        for r in records {
            let kind = scenario
                .sensor(r.node)
                .with_context(|| format!("node {} is not a sensor", r.node))?
                .kind;
            writeln!(
                w,
                "{t},{},{},{},{}",
                r.node,
                kind.name(),
                join(r.value.as_slice()),
                u8::from(r.is_outlier)
            )?;
        }
    }
    Ok(())
}

/// Read an episode and check it against the scenario's sensors.
pub fn read_episode<R: BufRead>(r: R, scenario: &Scenario) -> Result<Episode> {
    let mut init = None;
    let mut truth = Vec::new();
    let mut measurements: Vec<Vec<MeasurementRecord>> = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parse = || -> Result<()> {
            let fields: Vec<&str> = line.split(',').collect();
            ensure!(
                fields.len() == 5,
                "expected 5 fields, found {}",
                fields.len()
            );
            let t: usize = fields[0].parse().context("bad step index")?;
            let values = split(fields[3])?;
            match fields[2] {
                "init" => {
                    ensure!(t == 0 && init.is_none(), "misplaced init record");
                    init = Some(DVector::from_vec(values));
                }
                "truth" => {
                    ensure!(t == truth.len() + 1, "truth for step {t} out of order");
                    truth.push(CtState::from_slice(&values)?);
                    measurements.push(Vec::new());
                }
                kind => {
                    ensure!(
                        t == truth.len() && t > 0,
                        "measurement for step {t} before its truth record"
                    );
                    let node: usize = fields[1].parse().context("bad node id")?;
                    let sensor = scenario
                        .sensor(node)
                        .with_context(|| format!("node {node} is not a sensor in this scenario"))?;
                    ensure!(
                        kind == sensor.kind.name(),
                        "node {node} is {}, not {kind}",
                        sensor.kind.name()
                    );
                    ensure!(
                        values.len() == sensor.kind.dim(),
                        "wrong measurement length"
                    );
                    let is_outlier = match fields[4] {
                        "0" => false,
                        "1" => true,
                        other => bail!("bad outlier flag '{other}'"),
                    };
                    measurements[t - 1].push(MeasurementRecord {
                        node,
                        value: DVector::from_vec(values),
                        is_outlier,
                    });
                }
            }
            Ok(())
        };
        parse().with_context(|| format!("episode line {lineno}"))?;
    }
    let initial_estimate = init.context("episode has no init record")?;
    let sensors = scenario.sensors().len();
    for (t, m) in measurements.iter().enumerate() {
        ensure!(
            m.len() == sensors,
            "step {} has {} measurements for {sensors} sensors",
            t + 1,
            m.len()
        );
    }
    Ok(Episode {
        truth,
        measurements,
        initial_estimate,
    })
}
