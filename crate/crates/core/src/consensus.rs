//! Network topology and iterated neighborhood averaging.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::gauss::{InfoContribution, InformationPair};
use crate::{Error, Result};

/// Undirected graph over sensor and communication nodes.
///
/// Node neighborhoods `N_s` include `s` itself; the edge list never does.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkGraph {
    node_count: usize,
    sensor_ids: Vec<usize>,
    comm_ids: Vec<usize>,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

impl NetworkGraph {
    /// Build a graph. Every node not listed in `sensor_ids` is a
    /// communication node. Duplicate edges are merged; self-loops and
    /// out-of-range endpoints are rejected. Connectivity is *not* required
    /// here; see [`NetworkGraph::is_connected`].
    pub fn new(node_count: usize, sensor_ids: &[usize], edges: &[(usize, usize)]) -> Result<Self> {
        if node_count == 0 {
            return Err(Error::Topology("graph has no nodes".into()));
        }
        let mut is_sensor = vec![false; node_count];
        for &s in sensor_ids {
            if s >= node_count {
                return Err(Error::Topology(format!(
                    "sensor id {s} out of range for {node_count} nodes"
                )));
            }
            if is_sensor[s] {
                return Err(Error::Topology(format!("sensor id {s} listed twice")));
            }
            is_sensor[s] = true;
        }
        let mut norm: Vec<(usize, usize)> = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a >= node_count || b >= node_count {
                return Err(Error::Topology(format!(
                    "edge ({a}, {b}) out of range for {node_count} nodes"
                )));
            }
            if a == b {
                return Err(Error::Topology(format!("self-loop at node {a}")));
            }
            norm.push((a.min(b), a.max(b)));
        }
        norm.sort_unstable();
        norm.dedup();
        let mut adjacency = vec![Vec::new(); node_count];
        for &(a, b) in &norm {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
        }
        let sensor_ids = (0..node_count).filter(|&i| is_sensor[i]).collect();
        let comm_ids = (0..node_count).filter(|&i| !is_sensor[i]).collect();
        Ok(Self {
            node_count,
            sensor_ids,
            comm_ids,
            edges: norm,
            adjacency,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn sensor_ids(&self) -> &[usize] {
        &self.sensor_ids
    }

    pub fn comm_ids(&self) -> &[usize] {
        &self.comm_ids
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn is_sensor(&self, node: usize) -> bool {
        self.sensor_ids.binary_search(&node).is_ok()
    }

    /// Neighbors of `node`, excluding itself.
    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.adjacency[node]
    }

    /// `|N_s|`: degree plus one.
    pub fn neighborhood_size(&self, node: usize) -> usize {
        self.adjacency[node].len() + 1
    }

    pub fn hop_distances(&self, from: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.node_count];
        let mut queue = VecDeque::new();
        dist[from] = Some(0);
        queue.push_back(from);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap_or(0);
            for &v in &self.adjacency[u] {
                if dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    pub fn is_connected(&self) -> bool {
        self.hop_distances(0).iter().all(Option::is_some)
    }
}

/// Row-stochastic consensus matrix `κ` with a sparse row view.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusWeights {
    pub weights: DMatrix<f64>,
    rows: Vec<Vec<(usize, f64)>>,
}

impl ConsensusWeights {
    /// Wrap an arbitrary weight matrix. Rows must be nonnegative and sum to 1.
    pub fn from_matrix(weights: DMatrix<f64>) -> Result<Self> {
        if !weights.is_square() {
            return Err(Error::InvalidDimension(
                "consensus weights must be square".into(),
            ));
        }
        let n = weights.nrows();
        let mut rows = Vec::with_capacity(n);
        for i in 0..n {
            let mut row = Vec::new();
            let mut sum = 0.0;
            for j in 0..n {
                let w = weights[(i, j)];
                if w < 0.0 || !w.is_finite() {
                    return Err(Error::Domain(format!("weight κ[{i},{j}] = {w}")));
                }
                if w != 0.0 {
                    row.push((j, w));
                    sum += w;
                }
            }
            if crate::float::abs(sum - 1.0) > 1e-12 {
                return Err(Error::Domain(format!("row {i} of κ sums to {sum}")));
            }
            rows.push(row);
        }
        Ok(Self { weights, rows })
    }

    pub fn node_count(&self) -> usize {
        self.rows.len()
    }

    /// Nonzero `(j, κ_ij)` entries of row `i`, including the diagonal.
    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }
}

/// Metropolis weights `κ_sj = 1/max(|N_s|, |N_j|)` on edges, with the
/// diagonal absorbing the remainder of each row.
pub fn metropolis_weights(g: &NetworkGraph) -> Result<ConsensusWeights> {
    if !g.is_connected() {
        return Err(Error::Topology("graph not connected".into()));
    }
    let n = g.node_count();
    let mut weights = DMatrix::zeros(n, n);
    for s in 0..n {
        let mut off = 0.0;
        for &j in g.neighbors(s) {
            let w = 1.0 / g.neighborhood_size(s).max(g.neighborhood_size(j)) as f64;
            weights[(s, j)] = w;
            off += w;
        }
        weights[(s, s)] = 1.0 - off;
    }
    ConsensusWeights::from_matrix(weights)
}

/// A quantity that can be averaged across nodes.
pub trait Mixable: Clone {
    fn zero_like(&self) -> Self;
    /// `self += w * other`
    fn accumulate(&mut self, w: f64, other: &Self);
}

impl Mixable for f64 {
    fn zero_like(&self) -> Self {
        0.0
    }

    fn accumulate(&mut self, w: f64, other: &Self) {
        *self += w * other;
    }
}

impl Mixable for DVector<f64> {
    fn zero_like(&self) -> Self {
        DVector::zeros(self.len())
    }

    fn accumulate(&mut self, w: f64, other: &Self) {
        self.axpy(w, other, 1.0);
    }
}

impl Mixable for InformationPair {
    fn zero_like(&self) -> Self {
        let n = self.dim();
        InformationPair {
            info_matrix: DMatrix::zeros(n, n),
            info_vector: DVector::zeros(n),
        }
    }

    fn accumulate(&mut self, w: f64, other: &Self) {
        self.info_matrix
            .zip_apply(&other.info_matrix, |a, b| *a += w * b);
        self.info_vector.axpy(w, &other.info_vector, 1.0);
    }
}

impl Mixable for InfoContribution {
    fn zero_like(&self) -> Self {
        InfoContribution::zeros(self.dim())
    }

    fn accumulate(&mut self, w: f64, other: &Self) {
        self.delta_matrix
            .zip_apply(&other.delta_matrix, |a, b| *a += w * b);
        self.delta_vector.axpy(w, &other.delta_vector, 1.0);
    }
}

/// `rounds` synchronous rounds of `x_s ← Σ_j κ_sj x_j`.
pub fn consensus_rounds<T: Mixable>(
    slots: &[T],
    w: &ConsensusWeights,
    rounds: usize,
) -> Result<Vec<T>> {
    if slots.len() != w.node_count() {
        return Err(Error::InvalidDimension(format!(
            "{} slots for {} nodes",
            slots.len(),
            w.node_count()
        )));
    }
    let mut current = slots.to_vec();
    for _ in 0..rounds {
        current = (0..current.len())
            .map(|i| {
                let mut acc = current[i].zero_like();
                for &(j, k) in w.row(i) {
                    acc.accumulate(k, &current[j]);
                }
                acc
            })
            .collect();
    }
    Ok(current)
}

/// Overweighting correction `δ_s = 1/θ_s^L` from scalar consensus on the
/// sensor indicator, with `δ_s = 1` where no sensor is within reach.
pub fn compute_delta(g: &NetworkGraph, w: &ConsensusWeights, rounds: usize) -> Result<Vec<f64>> {
    let theta0: Vec<f64> = (0..g.node_count())
        .map(|s| if g.is_sensor(s) { 1.0 } else { 0.0 })
        .collect();
    let theta = consensus_rounds(&theta0, w, rounds)?;
    Ok(theta
        .into_iter()
        .map(|t| if t == 0.0 { 1.0 } else { 1.0 / t })
        .collect())
}

/// Reals sent by one node per consensus round for an `n`-state information
/// pair: the upper triangle of the matrix plus the vector.
pub fn reals_per_message(n: usize) -> u64 {
    ((n * n + 3 * n) / 2) as u64
}

/// Communication volume accumulated by the decentralized filters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CommStats {
    pub prior_rounds: u64,
    pub prior_reals: u64,
    pub likelihood_rounds: u64,
    pub likelihood_reals: u64,
}

impl CommStats {
    pub fn record_prior(&mut self, nodes: usize, n: usize, rounds: usize) {
        self.prior_rounds += rounds as u64;
        self.prior_reals += rounds as u64 * nodes as u64 * reals_per_message(n);
    }

    pub fn record_likelihood(&mut self, nodes: usize, n: usize, rounds: usize) {
        self.likelihood_rounds += rounds as u64;
        self.likelihood_reals += rounds as u64 * nodes as u64 * reals_per_message(n);
    }

    pub fn total_reals(&self) -> u64 {
        self.prior_reals + self.likelihood_reals
    }

    pub fn merge(&mut self, other: &CommStats) {
        self.prior_rounds += other.prior_rounds;
        self.prior_reals += other.prior_reals;
        self.likelihood_rounds += other.likelihood_rounds;
        self.likelihood_reals += other.likelihood_reals;
    }
}

/// Node positions, edge list and final connection radius.
pub type GeometricGraph = (Vec<[f64; 2]>, Vec<(usize, usize)>, f64);

/// Random geometric graph on the unit square.
///
/// Nodes are placed uniformly; the connection radius starts at
/// `initial_radius` and grows by 10% until the graph is connected.
/// Returns node positions, the edge list and the final radius.
pub fn random_geometric_graph<R: Rng + ?Sized>(
    node_count: usize,
    initial_radius: f64,
    rng: &mut R,
) -> Result<GeometricGraph> {
    if node_count == 0 {
        return Err(Error::Topology("graph has no nodes".into()));
    }
    if !(initial_radius > 0.0) {
        return Err(Error::Domain(format!(
            "radius {initial_radius} must be positive"
        )));
    }
    let positions: Vec<[f64; 2]> = (0..node_count)
        .map(|_| [rng.random::<f64>(), rng.random::<f64>()])
        .collect();
    let (edges, radius) = connect_geometric(&positions, initial_radius)?;
    Ok((positions, edges, radius))
}

/// Links between nodes closer than a radius that starts at `initial_radius`
/// and grows by 10% until the graph is connected. Returns the edges and the
/// final radius.
pub fn connect_geometric(
    positions: &[[f64; 2]],
    initial_radius: f64,
) -> Result<(Vec<(usize, usize)>, f64)> {
    if positions.is_empty() {
        return Err(Error::Topology("graph has no nodes".into()));
    }
    if !(initial_radius > 0.0) {
        return Err(Error::Domain(format!(
            "radius {initial_radius} must be positive"
        )));
    }
    let mut radius = initial_radius;
    loop {
        let edges = geometric_edges(positions, radius);
        let g = NetworkGraph::new(positions.len(), &[], &edges)?;
        if g.is_connected() {
            return Ok((edges, radius));
        }
        radius *= 1.1;
    }
}

fn geometric_edges(positions: &[[f64; 2]], radius: f64) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for i in 0..positions.len() {
        for j in (i + 1)..positions.len() {
            let dx = positions[i][0] - positions[j][0];
            let dy = positions[i][1] - positions[j][1];
            if dx * dx + dy * dy <= radius * radius {
                edges.push((i, j));
            }
        }
    }
    edges
}
