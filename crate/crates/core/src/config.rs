//! Scenario description and its validated, ready-to-run form.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::consensus::{
    compute_delta, connect_geometric, metropolis_weights, random_geometric_graph, ConsensusWeights,
    NetworkGraph,
};
use crate::filters::FilterParams;
use crate::float;
use crate::rng::{derive_seed, stream_rng, Stream};
use crate::scenario::{
    process_cov, turn, ContaminationSpec, CoordinatedTurn, CtState, EpisodeSpec, SensorSpec,
    STATE_DIM,
};
use crate::vb::BetaPrior;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "cRCIF")]
    CRcif,
    #[serde(rename = "dRCIF-1")]
    DRcif1,
    #[serde(rename = "dRCIF-2")]
    DRcif2,
    #[serde(rename = "cCIF-t")]
    CCifT,
    #[serde(rename = "dCIF-t")]
    DCifT,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::CRcif,
        Algorithm::DRcif1,
        Algorithm::DRcif2,
        Algorithm::CCifT,
        Algorithm::DCifT,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::CRcif => "cRCIF",
            Algorithm::DRcif1 => "dRCIF-1",
            Algorithm::DRcif2 => "dRCIF-2",
            Algorithm::CCifT => "cCIF-t",
            Algorithm::DCifT => "dCIF-t",
        }
    }

    pub fn is_decentralized(self) -> bool {
        matches!(
            self,
            Algorithm::DRcif1 | Algorithm::DRcif2 | Algorithm::DCifT
        )
    }

    /// Uses the true noise component of each measurement.
    pub fn is_clairvoyant(self) -> bool {
        matches!(self, Algorithm::CCifT | Algorithm::DCifT)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown algorithm '{s}'")))
    }
}

/// Which nodes enter the decentralized RMSE average.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RmseNodes {
    #[default]
    All,
    Sensors,
}

/// Full experiment description. Every field has a default, so an empty
/// configuration file describes the reference maneuvering-target scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    // motion
    pub dt: f64,
    pub q1: f64,
    pub q2: f64,
    pub x0: [f64; STATE_DIM],
    pub p0_diag: [f64; STATE_DIM],

    // network
    pub active_sensors: usize,
    pub passive_sensors: usize,
    pub comm_nodes: usize,
    /// Seed for node placement, links and roles; derived from `seed` if absent.
    pub topology_seed: Option<u64>,
    /// Explicit undirected links. Roles then follow node order: active
    /// sensors first, passive sensors next, communication nodes last.
    pub edges: Option<Vec<[usize; 2]>>,
    /// Explicit node positions in meters.
    pub positions: Option<Vec<[f64; 2]>>,
    /// Deployment region `[x_min, y_min, x_max, y_max]` in meters.
    pub region: [f64; 4],
    /// Starting link radius as a fraction of the region side.
    pub link_radius: f64,
    /// Generated topologies put sensors only on nodes at least this far (m)
    /// from the noise-free trajectory.
    pub sensor_standoff: f64,

    // sensors
    pub range_var: f64,
    pub bearing_var: f64,
    pub passive_bearing_var: f64,

    // contamination
    pub lambda: f64,
    pub alpha: f64,

    // filters
    pub vb_iters: usize,
    pub consensus_rounds: usize,
    pub e0: f64,
    pub f0: f64,

    // runs
    pub runs: usize,
    pub steps: usize,
    pub seed: u64,
    pub algorithms: Vec<Algorithm>,
    pub rmse_nodes: RmseNodes,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            dt: 1.0,
            q1: 0.1,
            q2: 1.75e-4,
            x0: [1000.0, 50.0, 2000.0, -50.0, 0.053],
            p0_diag: [10000.0, 100.0, 10000.0, 100.0, 3.04e-6],
            active_sensors: 5,
            passive_sensors: 10,
            comm_nodes: 65,
            topology_seed: None,
            edges: None,
            positions: None,
            region: [0.0, 500.0, 4000.0, 4500.0],
            link_radius: 0.2,
            sensor_standoff: 200.0,
            range_var: 100.0,
            bearing_var: 1.22e-5,
            passive_bearing_var: 1.22e-5,
            lambda: 0.2,
            alpha: 100.0,
            vb_iters: 3,
            consensus_rounds: 5,
            e0: 0.9,
            f0: 0.1,
            runs: 100,
            steps: 50,
            seed: 0,
            algorithms: Algorithm::ALL.to_vec(),
            rmse_nodes: RmseNodes::All,
        }
    }
}

fn check(cond: bool, msg: impl Into<String>) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Config(msg.into()))
    }
}

impl ScenarioConfig {
    pub fn node_count(&self) -> usize {
        self.active_sensors + self.passive_sensors + self.comm_nodes
    }

    pub fn sensor_count(&self) -> usize {
        self.active_sensors + self.passive_sensors
    }

    pub fn topology_seed(&self) -> u64 {
        self.topology_seed
            .unwrap_or_else(|| derive_seed(self.seed, u64::MAX))
    }

    pub fn filter_params(&self) -> Result<FilterParams> {
        FilterParams::new(
            self.vb_iters,
            self.consensus_rounds,
            BetaPrior::new(self.e0, self.f0)?,
        )
    }

    pub fn contamination(&self) -> Result<ContaminationSpec> {
        ContaminationSpec::new(self.lambda, self.alpha)
    }

    /// Field-level checks. Graph connectivity is checked by [`Scenario::build`].
    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v > 0.0 && v.is_finite();
        let nonneg = |v: f64| v >= 0.0 && v.is_finite();
        check(pos(self.dt), "dt must be positive")?;
        check(
            nonneg(self.q1) && nonneg(self.q2),
            "q1 and q2 must be nonnegative",
        )?;
        check(self.x0.iter().all(|v| v.is_finite()), "x0 must be finite")?;
        check(
            self.p0_diag.iter().all(|&v| pos(v)),
            "p0_diag must be positive (P0 not PD)",
        )?;
        check(self.sensor_count() > 0, "at least one sensor is required")?;
        check(
            pos(self.range_var) && pos(self.bearing_var) && pos(self.passive_bearing_var),
            "sensor noise variances must be positive (R not PD)",
        )?;
        check((0.0..=1.0).contains(&self.lambda), "lambda out of [0,1]")?;
        check(
            self.alpha >= 1.0 && self.alpha.is_finite(),
            "alpha must be >= 1",
        )?;
        check(self.vb_iters >= 1, "vb_iters must be >= 1")?;
        check(pos(self.e0) && pos(self.f0), "e0 and f0 must be positive")?;
        check(self.runs >= 1, "runs must be >= 1")?;
        check(self.steps >= 1, "steps must be >= 1")?;
        check(
            !self.algorithms.is_empty(),
            "at least one algorithm is required",
        )?;
        let [x_min, y_min, x_max, y_max] = self.region;
        check(
            x_max > x_min && y_max > y_min && self.region.iter().all(|v| v.is_finite()),
            "region must have positive extent",
        )?;
        check(pos(self.link_radius), "link_radius must be positive")?;
        check(
            self.sensor_standoff >= 0.0 && self.sensor_standoff.is_finite(),
            "sensor_standoff must be nonnegative",
        )?;
        if let Some(p) = &self.positions {
            check(
                p.len() == self.node_count(),
                format!("{} positions for {} nodes", p.len(), self.node_count()),
            )?;
            check(
                p.iter().flatten().all(|v| v.is_finite()),
                "positions must be finite",
            )?;
        }
        Ok(())
    }
}

/// A validated scenario with its deployment materialized: topology,
/// consensus weights, `δ` corrections and sensor models.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub graph: NetworkGraph,
    pub weights: ConsensusWeights,
    pub deltas: Vec<f64>,
    /// Node positions in meters.
    pub positions: Vec<[f64; 2]>,
    pub episode: EpisodeSpec,
    pub dynamics: CoordinatedTurn,
    pub process_cov: DMatrix<f64>,
    pub params: FilterParams,
    sensor_at: Vec<Option<usize>>,
}

impl Scenario {
    pub fn build(config: &ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let nodes = config.node_count();
        let sensors = config.sensor_count();
        let seed = config.topology_seed();
        let [x_min, y_min, x_max, y_max] = config.region;
        let to_meters = |p: [f64; 2]| {
            [
                x_min + p[0] * (x_max - x_min),
                y_min + p[1] * (y_max - y_min),
            ]
        };

        let (positions, edges, roles) = match &config.edges {
            Some(edges) => {
                let edges: Vec<(usize, usize)> = edges.iter().map(|e| (e[0], e[1])).collect();
                let positions = match &config.positions {
                    Some(p) => p.clone(),
                    None => {
                        let mut rng = stream_rng(seed, Stream::Placement);
                        (0..nodes)
                            .map(|_| {
                                to_meters([
                                    rand::Rng::random(&mut rng),
                                    rand::Rng::random(&mut rng),
                                ])
                            })
                            .collect()
                    }
                };
                (positions, edges, (0..nodes).collect::<Vec<_>>())
            }
            None => {
                let (unit, edges) = match &config.positions {
                    Some(p) => {
                        let unit: Vec<[f64; 2]> = p
                            .iter()
                            .map(|q| {
                                [
                                    (q[0] - x_min) / (x_max - x_min),
                                    (q[1] - y_min) / (y_max - y_min),
                                ]
                            })
                            .collect();
                        let (edges, _) = connect_geometric(&unit, config.link_radius)?;
                        (unit, edges)
                    }
                    None => {
                        let mut rng = stream_rng(seed, Stream::Topology);
                        let (unit, edges, _) =
                            random_geometric_graph(nodes, config.link_radius, &mut rng)?;
                        (unit, edges)
                    }
                };
                let positions: Vec<[f64; 2]> = match &config.positions {
                    Some(p) => p.clone(),
                    None => unit.into_iter().map(to_meters).collect(),
                };
                let mut roles: Vec<usize> = (0..nodes).collect();
                roles.shuffle(&mut stream_rng(seed, Stream::Roles));
                if config.sensor_standoff > 0.0 {
                    let path = nominal_path(config)?;
                    let clear = |node: &usize| {
                        let [x, y] = positions[*node];
                        path.iter()
                            .all(|p| float::hypot(p[0] - x, p[1] - y) >= config.sensor_standoff)
                    };
                    let (mut eligible, rest): (Vec<usize>, Vec<usize>) =
                        roles.into_iter().partition(clear);
                    if eligible.len() < sensors {
                        return Err(Error::Config(format!(
                            "only {} nodes lie {} m from the trajectory, {sensors} sensors requested",
                            eligible.len(),
                            config.sensor_standoff
                        )));
                    }
                    eligible.extend(rest);
                    roles = eligible;
                }
                (positions, edges, roles)
            }
        };

        // roles[k] is the node holding the k-th role slot.
        let sensor_ids: Vec<usize> = roles[..sensors].to_vec();
        let graph = NetworkGraph::new(nodes, &sensor_ids, &edges)?;
        if !graph.is_connected() {
            return Err(Error::Config("graph not connected".into()));
        }
        let weights = metropolis_weights(&graph)?;
        let deltas = compute_delta(&graph, &weights, config.consensus_rounds)?;

        let mut sensor_at = alloc::vec![None; nodes];
        let mut placed = Vec::with_capacity(sensors);
        let mut by_node: Vec<(usize, SensorSpec)> = roles[..sensors]
            .iter()
            .enumerate()
            .map(|(k, &node)| {
                let spec = if k < config.active_sensors {
                    SensorSpec::active(positions[node], config.range_var, config.bearing_var)
                } else {
                    SensorSpec::passive(positions[node], config.passive_bearing_var)
                };
                (node, spec)
            })
            .collect();
        by_node.sort_by_key(|(node, _)| *node);
        for (i, (node, spec)) in by_node.into_iter().enumerate() {
            sensor_at[node] = Some(i);
            placed.push((node, spec));
        }

        let episode = EpisodeSpec {
            dt: config.dt,
            q1: config.q1,
            q2: config.q2,
            x0: CtState::from_slice(&config.x0)?,
            p0: DMatrix::from_diagonal(&DVector::from_row_slice(&config.p0_diag)),
            sensors: placed,
            contamination: config.contamination()?,
            steps: config.steps,
        };
        Ok(Self {
            config: config.clone(),
            graph,
            weights,
            deltas,
            positions,
            process_cov: process_cov(config.dt, config.q1, config.q2),
            dynamics: CoordinatedTurn { dt: config.dt },
            params: config.filter_params()?,
            episode,
            sensor_at,
        })
    }

    /// Sensor model at `node`, if it is a sensor.
    pub fn sensor(&self, node: usize) -> Option<&SensorSpec> {
        self.sensor_at
            .get(node)
            .copied()
            .flatten()
            .map(|i| &self.episode.sensors[i].1)
    }

    pub fn sensors(&self) -> &[(usize, SensorSpec)] {
        &self.episode.sensors
    }

    pub fn initial_cov(&self) -> &DMatrix<f64> {
        &self.episode.p0
    }

    /// Short human-readable summary of the deployment.
    pub fn describe(&self) -> String {
        format!(
            "{} nodes ({} active, {} passive, {} comm), {} links",
            self.graph.node_count(),
            self.config.active_sensors,
            self.config.passive_sensors,
            self.config.comm_nodes,
            self.graph.edges().len()
        )
    }
}

/// Noise-free target positions from `x0` for `steps` steps, `x0` included.
fn nominal_path(config: &ScenarioConfig) -> Result<Vec<[f64; 2]>> {
    let mut x = CtState::from_slice(&config.x0)?;
    let mut path = alloc::vec![x.position()];
    for _ in 0..config.steps {
        x = turn(&x, config.dt);
        path.push(x.position());
    }
    Ok(path)
}
