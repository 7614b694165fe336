//! Running one filter over one synthesized episode.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::DVector;

use crate::config::{Algorithm, Scenario};
use crate::consensus::CommStats;
use crate::filters::{
    ccif_step, crcif_step, dcif_step, drcif1_step, drcif2_step, CentralFilterState, Motion,
    Network, NodeFilterState, Observation,
};
use crate::gauss::GaussianBelief;
use crate::scenario::{Episode, SensorSpec};
use crate::{Error, Result};

/// Filter output for one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub algorithm: Algorithm,
    /// `estimates[t][k]`: posterior mean at step `t+1` of the `k`-th
    /// estimating node (the fusion center only, for centralized filters).
    pub estimates: Vec<Vec<DVector<f64>>>,
    /// `indicators[t]`: `(node, ⟨z⟩)` for every sensor; empty for the
    /// clairvoyant baselines.
    pub indicators: Vec<Vec<(usize, f64)>>,
    pub comm: CommStats,
}

fn observations<'s>(
    scenario: &'s Scenario,
    episode: &Episode,
    t: usize,
    clairvoyant: bool,
) -> Result<Vec<Observation<'s, SensorSpec>>> {
    let alpha = scenario.episode.contamination.alpha;
    episode.measurements[t]
        .iter()
        .map(|rec| {
            let model = scenario.sensor(rec.node).ok_or_else(|| {
                Error::InvalidDimension(format!("measurement from non-sensor node {}", rec.node))
            })?;
            let scale = if clairvoyant && rec.is_outlier {
                alpha
            } else {
                1.0
            };
            Ok(Observation {
                node: rec.node,
                model,
                value: rec.value.clone(),
                cov: &model.nominal_cov * scale,
            })
        })
        .collect()
}

pub fn track_episode(
    algorithm: Algorithm,
    scenario: &Scenario,
    episode: &Episode,
) -> Result<Track> {
    let prior = GaussianBelief::new(
        episode.initial_estimate.clone(),
        scenario.initial_cov().clone(),
    )?;
    let motion = Motion {
        dynamics: &scenario.dynamics,
        process_cov: &scenario.process_cov,
    };
    let net = Network {
        graph: &scenario.graph,
        weights: &scenario.weights,
        deltas: &scenario.deltas,
    };
    let params = &scenario.params;
    let steps = episode.measurements.len();
    let mut estimates = Vec::with_capacity(steps);
    let mut indicators = Vec::with_capacity(steps);
    let clairvoyant = algorithm.is_clairvoyant();

    if algorithm.is_decentralized() {
        let mut state = NodeFilterState::uniform(prior, scenario.graph.node_count());
        for t in 0..steps {
            let obs = observations(scenario, episode, t, clairvoyant)?;
            state = match algorithm {
                Algorithm::DRcif1 => drcif1_step(&state, &obs, motion, net, params)?,
                Algorithm::DRcif2 => drcif2_step(&state, &obs, motion, net, params)?,
                _ => dcif_step(&state, &obs, motion, net, params.consensus_rounds)?,
            };
            estimates.push(state.beliefs.iter().map(|b| b.mean.clone()).collect());
            indicators.push(
                state
                    .indicators
                    .iter()
                    .enumerate()
                    .filter_map(|(node, ind)| ind.map(|i| (node, i.z_mean)))
                    .collect(),
            );
        }
        Ok(Track {
            algorithm,
            estimates,
            indicators,
            comm: state.comm,
        })
    } else {
        let mut state = CentralFilterState::new(prior);
        for t in 0..steps {
            let obs = observations(scenario, episode, t, clairvoyant)?;
            state = match algorithm {
                Algorithm::CRcif => crcif_step(&state, &obs, motion, params)?,
                _ => ccif_step(&state, &obs, motion)?,
            };
            estimates.push(alloc::vec![state.belief.mean.clone()]);
            indicators.push(
                obs.iter()
                    .zip(&state.indicators)
                    .map(|(o, i)| (o.node, i.z_mean))
                    .collect(),
            );
        }
        Ok(Track {
            algorithm,
            estimates,
            indicators,
            comm: CommStats::default(),
        })
    }
}
