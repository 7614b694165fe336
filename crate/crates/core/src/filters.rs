//! One-step transitions of the robust fusion filters and their clairvoyant
//! baselines.
//!
//! * [`crcif_step`]: centralized robust filter, VB over all sensors at a
//!   fusion center.
//! * [`drcif1_step`]: decentralized, likelihood consensus inside every VB
//!   sweep.
//! * [`drcif2_step`]: decentralized, local VB at each sensor followed by a
//!   single likelihood consensus.
//! * [`ccif_step`] / [`dcif_step`]: non-robust filters fed the true
//!   per-measurement noise covariance.
//!
//! Pseudo-measurement matrices and adjusted measurements are computed once
//! per step from the (local) prediction and are not refreshed inside the VB
//! loop; the updated posterior only feeds the discrepancy statistic.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::consensus::{consensus_rounds, CommStats, ConsensusWeights, NetworkGraph};
use crate::gauss::{
    correct, from_information, info_contribution, linearize_measurement, predict, Dynamics,
    GaussianBelief, InfoContribution, InformationPair, LinearizedMeasurement, MeasurementModel,
};
use crate::linalg::symmetrize;
use crate::vb::{expected_discrepancy, update_beta, update_indicator, BetaPrior, IndicatorState};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterParams {
    /// Number of VB sweeps `K` per time step.
    pub vb_iters: usize,
    /// Consensus rounds `L` for both prior and likelihood consensus.
    pub consensus_rounds: usize,
    pub beta_prior: BetaPrior,
}

impl FilterParams {
    pub fn new(vb_iters: usize, consensus_rounds: usize, beta_prior: BetaPrior) -> Result<Self> {
        if vb_iters == 0 {
            return Err(Error::Domain(
                "at least one VB iteration is required".into(),
            ));
        }
        BetaPrior::new(beta_prior.e0, beta_prior.f0)?;
        Ok(Self {
            vb_iters,
            consensus_rounds,
            beta_prior,
        })
    }
}

impl Default for FilterParams {
    fn default() -> Self {
        Self {
            vb_iters: 3,
            consensus_rounds: 5,
            beta_prior: BetaPrior::default(),
        }
    }
}

/// One sensor's measurement at the current step.
///
/// `cov` is the covariance the filter is told to use: the nominal `R` for
/// robust filters, the true one for clairvoyant filters.
#[derive(Debug, Clone)]
pub struct Observation<'a, M: ?Sized> {
    pub node: usize,
    pub model: &'a M,
    pub value: DVector<f64>,
    pub cov: DMatrix<f64>,
}

/// Motion model shared by every node.
#[derive(Debug)]
pub struct Motion<'a, D: ?Sized> {
    pub dynamics: &'a D,
    pub process_cov: &'a DMatrix<f64>,
}

impl<D: ?Sized> Clone for Motion<'_, D> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<D: ?Sized> Copy for Motion<'_, D> {}

/// Topology-dependent inputs of the decentralized filters.
#[derive(Debug, Clone, Copy)]
pub struct Network<'a> {
    pub graph: &'a NetworkGraph,
    pub weights: &'a ConsensusWeights,
    /// Per-node overweighting correction `δ_s`.
    pub deltas: &'a [f64],
}

#[derive(Debug, Clone, PartialEq)]
pub struct CentralFilterState {
    pub belief: GaussianBelief,
    /// Final indicator per observation of the last step, in input order.
    pub indicators: Vec<IndicatorState>,
}

impl CentralFilterState {
    pub fn new(belief: GaussianBelief) -> Self {
        Self {
            belief,
            indicators: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeFilterState {
    /// One belief per node, sensors and communication nodes alike.
    pub beliefs: Vec<GaussianBelief>,
    /// Final indicator of each sensor node at the last step; `None` for
    /// communication nodes.
    pub indicators: Vec<Option<IndicatorState>>,
    /// Cumulative communication volume.
    pub comm: CommStats,
}

impl NodeFilterState {
    /// Every node starts from the same belief.
    pub fn uniform(belief: GaussianBelief, node_count: usize) -> Self {
        Self {
            beliefs: vec![belief; node_count],
            indicators: vec![None; node_count],
            comm: CommStats::default(),
        }
    }
}

fn vb_sweep<M: MeasurementModel + ?Sized>(
    ind: IndicatorState,
    posterior: &GaussianBelief,
    obs: &Observation<'_, M>,
    prior: BetaPrior,
) -> Result<IndicatorState> {
    let d = expected_discrepancy(posterior, obs.model, &obs.value, &obs.cov)?;
    Ok(update_beta(update_indicator(ind, d), prior))
}

/// `Γ = Γ_prior + δ I`, `γ = γ_prior + δ i`, then moment form.
fn fuse(
    prior: &InformationPair,
    likelihood: &InfoContribution,
    delta: f64,
) -> Result<GaussianBelief> {
    let mut info_matrix = prior.info_matrix.clone();
    info_matrix.zip_apply(&likelihood.delta_matrix, |a, b| *a += delta * b);
    symmetrize(&mut info_matrix);
    let mut info_vector = prior.info_vector.clone();
    info_vector.axpy(delta, &likelihood.delta_vector, 1.0);
    from_information(&InformationPair {
        info_matrix,
        info_vector,
    })
}

/// Centralized robust cubature information filter.
pub fn crcif_step<D, M>(
    state: &CentralFilterState,
    observations: &[Observation<'_, M>],
    motion: Motion<'_, D>,
    params: &FilterParams,
) -> Result<CentralFilterState>
where
    D: Dynamics + ?Sized,
    M: MeasurementModel + ?Sized,
{
    let (pred, pred_info) = predict(&state.belief, motion.dynamics, motion.process_cov)?;
    let lms = observations
        .iter()
        .map(|o| linearize_measurement(&pred, &pred_info, o.model, &o.value))
        .collect::<Result<Vec<_>>>()?;
    let mut indicators = vec![IndicatorState::initial(params.beta_prior); observations.len()];
    let mut posterior = pred;
    for _ in 0..params.vb_iters.max(1) {
        let contributions = lms
            .iter()
            .zip(observations)
            .zip(&indicators)
            .map(|((lm, o), ind)| info_contribution(lm, &o.cov, ind.z_mean))
            .collect::<Result<Vec<_>>>()?;
        posterior = correct(&pred_info, &contributions)?.1;
        for (ind, o) in indicators.iter_mut().zip(observations) {
            *ind = vb_sweep(*ind, &posterior, o, params.beta_prior)?;
        }
    }
    Ok(CentralFilterState {
        belief: posterior,
        indicators,
    })
}

/// Centralized CIF with the measurement covariances taken at face value
/// (the clairvoyant baseline when those are the true covariances).
pub fn ccif_step<D, M>(
    state: &CentralFilterState,
    observations: &[Observation<'_, M>],
    motion: Motion<'_, D>,
) -> Result<CentralFilterState>
where
    D: Dynamics + ?Sized,
    M: MeasurementModel + ?Sized,
{
    let (pred, pred_info) = predict(&state.belief, motion.dynamics, motion.process_cov)?;
    let contributions = observations
        .iter()
        .map(|o| {
            let lm = linearize_measurement(&pred, &pred_info, o.model, &o.value)?;
            info_contribution(&lm, &o.cov, 1.0)
        })
        .collect::<Result<Vec<_>>>()?;
    let (_, belief) = correct(&pred_info, &contributions)?;
    Ok(CentralFilterState::new(belief))
}

/// Shared front half of the decentralized filters: per-node prediction,
/// per-sensor linearization and prior consensus.
struct LocalPrediction<'o, 'a, M: ?Sized> {
    /// Observation at each node, if it is a sensor.
    obs: Vec<Option<&'o Observation<'a, M>>>,
    lms: Vec<Option<LinearizedMeasurement>>,
    /// Prior information after `L` consensus rounds.
    prior: Vec<InformationPair>,
    n: usize,
}

fn predict_network<'o, 'a, D, M>(
    state: &NodeFilterState,
    observations: &'o [Observation<'a, M>],
    motion: Motion<'_, D>,
    net: Network<'_>,
    rounds: usize,
    comm: &mut CommStats,
) -> Result<LocalPrediction<'o, 'a, M>>
where
    D: Dynamics + ?Sized,
    M: MeasurementModel + ?Sized,
{
    let nodes = net.graph.node_count();
    if state.beliefs.len() != nodes
        || net.deltas.len() != nodes
        || net.weights.node_count() != nodes
    {
        return Err(Error::InvalidDimension(format!(
            "{} beliefs / {} deltas / {} weight rows for a {nodes}-node graph",
            state.beliefs.len(),
            net.deltas.len(),
            net.weights.node_count()
        )));
    }
    let mut obs: Vec<Option<&'o Observation<'a, M>>> = vec![None; nodes];
    for o in observations {
        if o.node >= nodes || !net.graph.is_sensor(o.node) {
            return Err(Error::InvalidDimension(format!(
                "observation from node {} which is not a sensor",
                o.node
            )));
        }
        if obs[o.node].replace(o).is_some() {
            return Err(Error::InvalidDimension(format!(
                "node {} reported more than one measurement",
                o.node
            )));
        }
    }
    if let Some(&s) = net.graph.sensor_ids().iter().find(|&&s| obs[s].is_none()) {
        return Err(Error::InvalidDimension(format!(
            "sensor {s} reported no measurement"
        )));
    }

    let n = state.beliefs[0].dim();
    let mut infos = Vec::with_capacity(nodes);
    let mut lms = Vec::with_capacity(nodes);
    for (belief, o) in state.beliefs.iter().zip(&obs) {
        let (pred, pred_info) = predict(belief, motion.dynamics, motion.process_cov)?;
        lms.push(match o {
            Some(o) => Some(linearize_measurement(&pred, &pred_info, o.model, &o.value)?),
            None => None,
        });
        infos.push(pred_info);
    }
    let prior = consensus_rounds(&infos, net.weights, rounds)?;
    comm.record_prior(nodes, n, rounds);
    Ok(LocalPrediction { obs, lms, prior, n })
}

/// Likelihood consensus followed by the `δ`-scaled fuse at every node.
fn consensus_fuse(
    local: &[InfoContribution],
    prior: &[InformationPair],
    net: Network<'_>,
    rounds: usize,
    comm: &mut CommStats,
) -> Result<Vec<GaussianBelief>> {
    let shared = consensus_rounds(local, net.weights, rounds)?;
    comm.record_likelihood(local.len(), prior[0].dim(), rounds);
    prior
        .iter()
        .zip(&shared)
        .zip(net.deltas)
        .map(|((p, l), &delta)| fuse(p, l, delta))
        .collect()
}

/// Decentralized robust CIF with likelihood consensus in every VB sweep.
pub fn drcif1_step<D, M>(
    state: &NodeFilterState,
    observations: &[Observation<'_, M>],
    motion: Motion<'_, D>,
    net: Network<'_>,
    params: &FilterParams,
) -> Result<NodeFilterState>
where
    D: Dynamics + ?Sized,
    M: MeasurementModel + ?Sized,
{
    let rounds = params.consensus_rounds;
    let mut comm = state.comm;
    let local = predict_network(state, observations, motion, net, rounds, &mut comm)?;
    let mut indicators: Vec<Option<IndicatorState>> = local
        .obs
        .iter()
        .map(|o| o.map(|_| IndicatorState::initial(params.beta_prior)))
        .collect();

    let mut beliefs = Vec::new();
    for _ in 0..params.vb_iters.max(1) {
        let contributions = local
            .lms
            .iter()
            .zip(&local.obs)
            .zip(&indicators)
            .map(|((lm, o), ind)| match (lm, o, ind) {
                (Some(lm), Some(o), Some(ind)) => info_contribution(lm, &o.cov, ind.z_mean),
                _ => Ok(InfoContribution::zeros(local.n)),
            })
            .collect::<Result<Vec<_>>>()?;
        beliefs = consensus_fuse(&contributions, &local.prior, net, rounds, &mut comm)?;
        for ((ind, o), post) in indicators.iter_mut().zip(&local.obs).zip(&beliefs) {
            if let (Some(ind), Some(o)) = (ind.as_mut(), o) {
                *ind = vb_sweep(*ind, post, o, params.beta_prior)?;
            }
        }
    }
    Ok(NodeFilterState {
        beliefs,
        indicators,
        comm,
    })
}

/// Reduced-communication decentralized robust CIF: each sensor runs its VB
/// loop against the consensus prior and its own measurement, then a single
/// likelihood consensus shares the final contributions.
///
/// The shared contribution is the one fused in the last sweep, i.e. weighted
/// by the indicator from the second-to-last sweep, matching the centralized
/// filter's ordering.
pub fn drcif2_step<D, M>(
    state: &NodeFilterState,
    observations: &[Observation<'_, M>],
    motion: Motion<'_, D>,
    net: Network<'_>,
    params: &FilterParams,
) -> Result<NodeFilterState>
where
    D: Dynamics + ?Sized,
    M: MeasurementModel + ?Sized,
{
    let rounds = params.consensus_rounds;
    let mut comm = state.comm;
    let local = predict_network(state, observations, motion, net, rounds, &mut comm)?;

    let mut indicators = vec![None; local.obs.len()];
    let mut contributions = Vec::with_capacity(local.obs.len());
    for (s, (lm, o)) in local.lms.iter().zip(&local.obs).enumerate() {
        let (Some(lm), Some(o)) = (lm, o) else {
            contributions.push(InfoContribution::zeros(local.n));
            continue;
        };
        let mut ind = IndicatorState::initial(params.beta_prior);
        let mut last = None;
        for _ in 0..params.vb_iters.max(1) {
            let c = info_contribution(lm, &o.cov, ind.z_mean)?;
            let (_, post) = correct(&local.prior[s], core::slice::from_ref(&c))?;
            ind = vb_sweep(ind, &post, o, params.beta_prior)?;
            last = Some(c);
        }
        indicators[s] = Some(ind);
        contributions.push(last.unwrap_or_else(|| InfoContribution::zeros(local.n)));
    }
    let beliefs = consensus_fuse(&contributions, &local.prior, net, rounds, &mut comm)?;
    Ok(NodeFilterState {
        beliefs,
        indicators,
        comm,
    })
}

/// Decentralized hybrid-consensus CIF with the measurement covariances taken
/// at face value (the clairvoyant baseline when they are the true ones).
pub fn dcif_step<D, M>(
    state: &NodeFilterState,
    observations: &[Observation<'_, M>],
    motion: Motion<'_, D>,
    net: Network<'_>,
    consensus_rounds: usize,
) -> Result<NodeFilterState>
where
    D: Dynamics + ?Sized,
    M: MeasurementModel + ?Sized,
{
    let mut comm = state.comm;
    let local = predict_network(
        state,
        observations,
        motion,
        net,
        consensus_rounds,
        &mut comm,
    )?;
    let contributions = local
        .lms
        .iter()
        .zip(&local.obs)
        .map(|(lm, o)| match (lm, o) {
            (Some(lm), Some(o)) => info_contribution(lm, &o.cov, 1.0),
            _ => Ok(InfoContribution::zeros(local.n)),
        })
        .collect::<Result<Vec<_>>>()?;
    let beliefs = consensus_fuse(
        &contributions,
        &local.prior,
        net,
        consensus_rounds,
        &mut comm,
    )?;
    Ok(NodeFilterState {
        beliefs,
        indicators: vec![None; local.obs.len()],
        comm,
    })
}
