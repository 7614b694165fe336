//! Maneuvering-target scenario: coordinated-turn motion, range/bearing
//! sensors, Gaussian-mixture outlier contamination and episode synthesis.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::float;
use crate::gauss::{Dynamics, MeasurementModel};
use crate::linalg::{sampling_factor, wrap_angle};
use crate::rng::{stream_rng, Stream};
use crate::{Error, Result};

/// Dimension of the coordinated-turn state.
pub const STATE_DIM: usize = 5;

/// Below this `|ω Δt|` the turn matrix is replaced by its constant-velocity
/// limit.
pub const TURN_RATE_EPS: f64 = 1e-8;

/// `[a, ȧ, b, ḃ, ω]`: planar position (m), velocity (m/s), turn rate (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CtState {
    pub a: f64,
    pub a_dot: f64,
    pub b: f64,
    pub b_dot: f64,
    pub omega: f64,
}

impl CtState {
    pub fn from_slice(x: &[f64]) -> Result<Self> {
        match *x {
            [a, a_dot, b, b_dot, omega] => Ok(Self {
                a,
                a_dot,
                b,
                b_dot,
                omega,
            }),
            _ => Err(Error::InvalidDimension(format!(
                "coordinated-turn state has {STATE_DIM} components, got {}",
                x.len()
            ))),
        }
    }

    pub fn to_array(self) -> [f64; STATE_DIM] {
        [self.a, self.a_dot, self.b, self.b_dot, self.omega]
    }

    pub fn to_vector(self) -> DVector<f64> {
        DVector::from_row_slice(&self.to_array())
    }

    pub fn position(&self) -> [f64; 2] {
        [self.a, self.b]
    }
}

/// Noise-free coordinated-turn step at the current turn rate.
pub fn turn(x: &CtState, dt: f64) -> CtState {
    let wt = x.omega * dt;
    let (s_w, c_w, sin_wt, cos_wt) = if float::abs(wt) < TURN_RATE_EPS {
        (dt, 0.0, 0.0, 1.0)
    } else {
        let (s, c) = (float::sin(wt), float::cos(wt));
        (s / x.omega, (1.0 - c) / x.omega, s, c)
    };
    CtState {
        a: x.a + s_w * x.a_dot - c_w * x.b_dot,
        a_dot: cos_wt * x.a_dot - sin_wt * x.b_dot,
        b: x.b + c_w * x.a_dot + s_w * x.b_dot,
        b_dot: sin_wt * x.a_dot + cos_wt * x.b_dot,
        omega: x.omega,
    }
}

/// `blockdiag(q₁M, q₁M, q₂)` with `M = [[Δt³/3, Δt²/2], [Δt²/2, Δt]]`.
pub fn process_cov(dt: f64, q1: f64, q2: f64) -> DMatrix<f64> {
    let m11 = dt * dt * dt / 3.0;
    let m12 = dt * dt / 2.0;
    let mut q = DMatrix::zeros(STATE_DIM, STATE_DIM);
    for k in [0, 2] {
        q[(k, k)] = q1 * m11;
        q[(k, k + 1)] = q1 * m12;
        q[(k + 1, k)] = q1 * m12;
        q[(k + 1, k + 1)] = q1 * dt;
    }
    q[(4, 4)] = q2;
    q
}

/// Coordinated-turn transition as a filter-side [`Dynamics`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoordinatedTurn {
    pub dt: f64,
}

impl Dynamics for CoordinatedTurn {
    fn transition(&self, x: &DVector<f64>) -> DVector<f64> {
        match CtState::from_slice(x.as_slice()) {
            Ok(s) => turn(&s, self.dt).to_vector(),
            Err(_) => DVector::from_element(x.len(), f64::NAN),
        }
    }
}

fn standard_normals<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DVector<f64> {
    DVector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)))
}

/// Sample `x' = turn(x) + v`, `v ~ N(0, Q)`.
pub fn ct_transition<R: Rng + ?Sized>(
    x: &CtState,
    dt: f64,
    q1: f64,
    q2: f64,
    rng: &mut R,
) -> Result<CtState> {
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("time step {dt} must be positive")));
    }
    let factor = sampling_factor(&process_cov(dt, q1, q2))?;
    let noise = factor * standard_normals(rng, STATE_DIM);
    let mean = turn(x, dt).to_vector();
    CtState::from_slice((mean + noise).as_slice())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SensorKind {
    /// Range and bearing.
    Active,
    /// Bearing only.
    Passive,
}

impl SensorKind {
    pub fn dim(self) -> usize {
        match self {
            SensorKind::Active => 2,
            SensorKind::Passive => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SensorKind::Active => "active",
            SensorKind::Passive => "passive",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensorSpec {
    pub kind: SensorKind,
    /// `(p_x, p_y)` in meters.
    pub position: [f64; 2],
    /// Nominal noise covariance `R` (2×2 active, 1×1 passive).
    pub nominal_cov: DMatrix<f64>,
}

impl SensorSpec {
    pub fn active(position: [f64; 2], range_var: f64, bearing_var: f64) -> Self {
        Self {
            kind: SensorKind::Active,
            position,
            nominal_cov: DMatrix::from_diagonal(&DVector::from_row_slice(&[
                range_var,
                bearing_var,
            ])),
        }
    }

    pub fn passive(position: [f64; 2], bearing_var: f64) -> Self {
        Self {
            kind: SensorKind::Passive,
            position,
            nominal_cov: DMatrix::from_element(1, 1, bearing_var),
        }
    }

    fn relative(&self, a: f64, b: f64) -> Result<(f64, f64)> {
        let dx = a - self.position[0];
        let dy = b - self.position[1];
        if !(dx.is_finite() && dy.is_finite()) {
            return Err(Error::Geometry("non-finite target position".into()));
        }
        if dx == 0.0 && dy == 0.0 {
            return Err(Error::Geometry(format!(
                "target coincides with sensor at ({}, {})",
                self.position[0], self.position[1]
            )));
        }
        Ok((dx, dy))
    }

    fn bearing_index(&self) -> usize {
        match self.kind {
            SensorKind::Active => 1,
            SensorKind::Passive => 0,
        }
    }
}

/// Noiseless measurement of `x` by `s`.
pub fn measure(s: &SensorSpec, x: &CtState) -> Result<DVector<f64>> {
    let (dx, dy) = s.relative(x.a, x.b)?;
    let bearing = wrap_angle(float::atan2(dy, dx));
    Ok(match s.kind {
        SensorKind::Active => DVector::from_row_slice(&[float::hypot(dx, dy), bearing]),
        SensorKind::Passive => DVector::from_element(1, bearing),
    })
}

impl MeasurementModel for SensorSpec {
    fn dim(&self) -> usize {
        self.kind.dim()
    }

    fn observe(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != STATE_DIM {
            return Err(Error::InvalidDimension(format!(
                "sensor expects a {STATE_DIM}-state, got {}",
                x.len()
            )));
        }
        let (dx, dy) = self.relative(x[0], x[2])?;
        let bearing = wrap_angle(float::atan2(dy, dx));
        Ok(match self.kind {
            SensorKind::Active => DVector::from_row_slice(&[float::hypot(dx, dy), bearing]),
            SensorKind::Passive => DVector::from_element(1, bearing),
        })
    }

    fn difference(&self, a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
        let mut d = a - b;
        let k = self.bearing_index();
        d[k] = wrap_angle(d[k]);
        d
    }

    fn weighted_mean(&self, points: &[DVector<f64>], weights: &[f64]) -> DVector<f64> {
        // Average bearings as offsets from the first point so that a cloud
        // straddling ±π does not collapse to the opposite direction.
        let Some(reference) = points.first() else {
            return DVector::zeros(self.dim());
        };
        let mut acc = DVector::zeros(self.dim());
        for (p, &w) in points.iter().zip(weights) {
            acc.axpy(w, &self.difference(p, reference), 1.0);
        }
        let mut mean = reference + acc;
        let k = self.bearing_index();
        mean[k] = wrap_angle(mean[k]);
        mean
    }
}

/// Outlier model: `N(0, R)` w.p. `1 - λ`, `N(0, αR)` w.p. `λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContaminationSpec {
    pub lambda: f64,
    pub alpha: f64,
}

impl ContaminationSpec {
    pub fn new(lambda: f64, alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::Config("lambda out of [0,1]".into()));
        }
        if !(alpha >= 1.0 && alpha.is_finite()) {
            return Err(Error::Config("alpha must be >= 1".into()));
        }
        Ok(Self { lambda, alpha })
    }
}

/// Draw one measurement-noise vector and its outlier label.
pub fn contaminate<R: Rng + ?Sized>(
    s: &SensorSpec,
    c: &ContaminationSpec,
    rng: &mut R,
) -> Result<(DVector<f64>, bool)> {
    // Always consume the uniform so the label stream is independent of λ = 0.
    let u: f64 = rng.random();
    let is_outlier = u < c.lambda;
    let scale = if is_outlier { c.alpha } else { 1.0 };
    let factor = sampling_factor(&(&s.nominal_cov * scale))?;
    Ok((factor * standard_normals(rng, s.dim()), is_outlier))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    pub node: usize,
    pub value: DVector<f64>,
    /// Ground truth, visible only to clairvoyant filters and metrics.
    pub is_outlier: bool,
}

/// Everything needed to synthesize an episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeSpec {
    pub dt: f64,
    pub q1: f64,
    pub q2: f64,
    pub x0: CtState,
    /// Covariance of the filters' initial estimate around `x0`.
    pub p0: DMatrix<f64>,
    /// `(node id, sensor)` pairs in node order.
    pub sensors: Vec<(usize, SensorSpec)>,
    pub contamination: ContaminationSpec,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    /// True states at `t = 1..=T`.
    pub truth: Vec<CtState>,
    /// `measurements[t-1]` holds one record per sensor, in sensor order.
    pub measurements: Vec<Vec<MeasurementRecord>>,
    /// Filters' initial estimate `x̂₀|₀ ~ N(x₀, P₀)`.
    pub initial_estimate: DVector<f64>,
}

/// Synthesize a trajectory, its contaminated measurements and an initial
/// estimate. Deterministic in `seed`; each ingredient has its own stream.
pub fn generate_episode(spec: &EpisodeSpec, seed: u64) -> Result<Episode> {
    let mut motion_rng = stream_rng(seed, Stream::Trajectory);
    let mut noise_rng = stream_rng(seed, Stream::MeasurementNoise);
    let mut init_rng = stream_rng(seed, Stream::InitialEstimate);

    let init_factor = sampling_factor(&spec.p0)?;
    let initial_estimate =
        spec.x0.to_vector() + init_factor * standard_normals(&mut init_rng, STATE_DIM);

    let mut truth = Vec::with_capacity(spec.steps);
    let mut measurements = Vec::with_capacity(spec.steps);
    let mut x = spec.x0;
    for _ in 0..spec.steps {
        x = ct_transition(&x, spec.dt, spec.q1, spec.q2, &mut motion_rng)?;
        let mut records = Vec::with_capacity(spec.sensors.len());
        for (node, sensor) in &spec.sensors {
            let clean = measure(sensor, &x)?;
            let (noise, is_outlier) = contaminate(sensor, &spec.contamination, &mut noise_rng)?;
            let mut value = clean + noise;
            let k = sensor.bearing_index();
            value[k] = wrap_angle(value[k]);
            records.push(MeasurementRecord {
                node: *node,
                value,
                is_outlier,
            });
        }
        truth.push(x);
        measurements.push(records);
    }
    Ok(Episode {
        truth,
        measurements,
        initial_estimate,
    })
}
