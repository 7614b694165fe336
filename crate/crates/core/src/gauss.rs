//! Cubature transform and the single-sensor cubature information filter.
//!
//! Beliefs travel in two forms: moment form ([`GaussianBelief`]) for
//! propagation through nonlinear maps, and information form
//! ([`InformationPair`]) where multi-sensor fusion is plain addition.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::float;
use crate::linalg::{robust_cholesky, spd_inverse, sqrt_factor, symmetrize, symmetrized};
use crate::{Error, Result};

/// State transition `x ↦ f(x)`.
pub trait Dynamics {
    fn transition(&self, x: &DVector<f64>) -> DVector<f64>;
}

impl<F> Dynamics for F
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    fn transition(&self, x: &DVector<f64>) -> DVector<f64> {
        self(x)
    }
}

/// A sensor's noiseless measurement function `x ↦ h(x)`.
pub trait MeasurementModel {
    /// Measurement dimension `m`.
    fn dim(&self) -> usize;

    /// Evaluate `h(x)`. Fails where the geometry is undefined.
    fn observe(&self, x: &DVector<f64>) -> Result<DVector<f64>>;

    /// Residual `a - b` in measurement space. Angular components must be
    /// wrapped by implementors that have them.
    fn difference(&self, a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
        a - b
    }

    /// Weighted mean of measurement-space points.
    fn weighted_mean(&self, points: &[DVector<f64>], weights: &[f64]) -> DVector<f64> {
        let mut acc = DVector::zeros(self.dim());
        for (p, &w) in points.iter().zip(weights) {
            acc.axpy(w, p, 1.0);
        }
        acc
    }
}

/// `x ↦ A x`.
#[derive(Debug, Clone)]
pub struct LinearDynamics(pub DMatrix<f64>);

impl Dynamics for LinearDynamics {
    fn transition(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.0 * x
    }
}

/// `x ↦ H x`.
#[derive(Debug, Clone)]
pub struct LinearMeasurement(pub DMatrix<f64>);

impl MeasurementModel for LinearMeasurement {
    fn dim(&self) -> usize {
        self.0.nrows()
    }

    fn observe(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != self.0.ncols() {
            return Err(Error::InvalidDimension(format!(
                "linear measurement expects {} states, got {}",
                self.0.ncols(),
                x.len()
            )));
        }
        Ok(&self.0 * x)
    }
}

/// Moment-form Gaussian `N(mean, cov)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianBelief {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl GaussianBelief {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let n = mean.len();
        if n == 0 || cov.nrows() != n || cov.ncols() != n {
            return Err(Error::InvalidDimension(format!(
                "mean of length {n} with {}x{} covariance",
                cov.nrows(),
                cov.ncols()
            )));
        }
        Ok(Self { mean, cov })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Information-form Gaussian: `Γ = P⁻¹`, `γ = Γ x̂`.
#[derive(Debug, Clone, PartialEq)]
pub struct InformationPair {
    pub info_matrix: DMatrix<f64>,
    pub info_vector: DVector<f64>,
}

impl InformationPair {
    pub fn new(info_matrix: DMatrix<f64>, info_vector: DVector<f64>) -> Result<Self> {
        let n = info_vector.len();
        if info_matrix.nrows() != n || info_matrix.ncols() != n {
            return Err(Error::InvalidDimension(format!(
                "information vector of length {n} with {}x{} matrix",
                info_matrix.nrows(),
                info_matrix.ncols()
            )));
        }
        Ok(Self {
            info_matrix,
            info_vector,
        })
    }

    pub fn dim(&self) -> usize {
        self.info_vector.len()
    }
}

/// Equally weighted third-degree spherical-radial points `±√n eᵢ`.
#[derive(Debug, Clone, PartialEq)]
pub struct CubatureSet {
    pub points: Vec<DVector<f64>>,
    pub weights: Vec<f64>,
}

impl CubatureSet {
    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, |p| p.len())
    }

    /// Map the standard points through `x̂ + S η` for the given belief.
    pub fn transform(&self, belief: &GaussianBelief) -> Result<Vec<DVector<f64>>> {
        let s = sqrt_factor(&belief.cov)?;
        Ok(self
            .points
            .iter()
            .map(|eta| &belief.mean + &s * eta)
            .collect())
    }
}

/// Statistically linearized measurement for one sensor at one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedMeasurement {
    /// Pseudo-measurement matrix `H` (m×n).
    pub pseudo_matrix: DMatrix<f64>,
    /// Cubature prediction `ŷ`.
    pub predicted_meas: DVector<f64>,
    /// `ỹ = (y - ŷ) + H x̂`.
    pub adjusted_meas: DVector<f64>,
    /// Cross-covariance `P_xy` (n×m).
    pub cross_cov: DMatrix<f64>,
}

/// Additive correction terms `(I, i)` contributed by one measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct InfoContribution {
    pub delta_matrix: DMatrix<f64>,
    pub delta_vector: DVector<f64>,
}

impl InfoContribution {
    pub fn zeros(n: usize) -> Self {
        Self {
            delta_matrix: DMatrix::zeros(n, n),
            delta_vector: DVector::zeros(n),
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            delta_matrix: &self.delta_matrix * c,
            delta_vector: &self.delta_vector * c,
        }
    }

    pub fn dim(&self) -> usize {
        self.delta_vector.len()
    }
}

pub fn generate_cubature_points(n: usize) -> Result<CubatureSet> {
    if n == 0 {
        return Err(Error::InvalidDimension("cubature rule needs n >= 1".into()));
    }
    let r = float::sqrt(n as f64);
    let w = 1.0 / (2 * n) as f64;
    let mut points = Vec::with_capacity(2 * n);
    for sign in [1.0, -1.0] {
        for i in 0..n {
            let mut p = DVector::zeros(n);
            p[i] = sign * r;
            points.push(p);
        }
    }
    Ok(CubatureSet {
        points,
        weights: alloc::vec![w; 2 * n],
    })
}

pub fn to_information(b: &GaussianBelief) -> Result<InformationPair> {
    let info_matrix = spd_inverse(&b.cov)?;
    let info_vector = &info_matrix * &b.mean;
    Ok(InformationPair {
        info_matrix,
        info_vector,
    })
}

pub fn from_information(p: &InformationPair) -> Result<GaussianBelief> {
    let chol = robust_cholesky(&p.info_matrix)?;
    let mean = chol.solve(&p.info_vector);
    let cov = symmetrized(chol.inverse());
    if mean.iter().any(|v| !v.is_finite()) {
        return Err(Error::Decomposition("recovered mean is not finite".into()));
    }
    Ok(GaussianBelief { mean, cov })
}

/// Time update: propagate the cubature points of `prior` through the
/// dynamics and add the process covariance.
pub fn predict<D: Dynamics + ?Sized>(
    prior: &GaussianBelief,
    dynamics: &D,
    process_cov: &DMatrix<f64>,
) -> Result<(GaussianBelief, InformationPair)> {
    let n = prior.dim();
    if process_cov.nrows() != n || process_cov.ncols() != n {
        return Err(Error::InvalidDimension(format!(
            "process covariance is {}x{}, state dimension {n}",
            process_cov.nrows(),
            process_cov.ncols()
        )));
    }
    let rule = generate_cubature_points(n)?;
    let propagated: Vec<DVector<f64>> = rule
        .transform(prior)?
        .iter()
        .map(|x| dynamics.transition(x))
        .collect();

    let mut mean = DVector::zeros(n);
    for (chi, &w) in propagated.iter().zip(&rule.weights) {
        mean.axpy(w, chi, 1.0);
    }
    let mut cov = process_cov.clone();
    for (chi, &w) in propagated.iter().zip(&rule.weights) {
        let d = chi - &mean;
        cov.ger(w, &d, &d, 1.0);
    }
    symmetrize(&mut cov);

    let belief = GaussianBelief { mean, cov };
    let info = to_information(&belief)?;
    Ok((belief, info))
}

/// Statistical linearization of `model` about the predicted belief.
///
/// `H = (Γ P_xy)ᵀ` is m×n so that `I = Hᵀ R⁻¹ H` and `ỹ = y - ŷ + H x̂` are
/// well formed; for linear `h(x) = Hx` it reproduces `H` exactly.
pub fn linearize_measurement<M: MeasurementModel + ?Sized>(
    pred: &GaussianBelief,
    pred_info: &InformationPair,
    model: &M,
    raw_meas: &DVector<f64>,
) -> Result<LinearizedMeasurement> {
    let n = pred.dim();
    let m = model.dim();
    if raw_meas.len() != m {
        return Err(Error::InvalidDimension(format!(
            "measurement of length {} for a {m}-dimensional sensor",
            raw_meas.len()
        )));
    }
    if pred_info.dim() != n {
        return Err(Error::InvalidDimension(
            "prediction and its information form disagree in dimension".into(),
        ));
    }
    let rule = generate_cubature_points(n)?;
    let points = rule.transform(pred)?;
    let observed = points
        .iter()
        .map(|p| model.observe(p))
        .collect::<Result<Vec<_>>>()?;
    let predicted_meas = model.weighted_mean(&observed, &rule.weights);

    let mut cross_cov = DMatrix::zeros(n, m);
    for ((p, y), &w) in points.iter().zip(&observed).zip(&rule.weights) {
        let dx = p - &pred.mean;
        let dy = model.difference(y, &predicted_meas);
        cross_cov.ger(w, &dx, &dy, 1.0);
    }
    let pseudo_matrix = (&pred_info.info_matrix * &cross_cov).transpose();
    let adjusted_meas = model.difference(raw_meas, &predicted_meas) + &pseudo_matrix * &pred.mean;
    Ok(LinearizedMeasurement {
        pseudo_matrix,
        predicted_meas,
        adjusted_meas,
        cross_cov,
    })
}

/// Indicator-weighted correction terms `I = z HᵀR⁻¹H`, `i = z HᵀR⁻¹ỹ`.
pub fn info_contribution(
    lm: &LinearizedMeasurement,
    meas_cov: &DMatrix<f64>,
    indicator: f64,
) -> Result<InfoContribution> {
    if !(0.0..=1.0).contains(&indicator) {
        return Err(Error::Domain(format!(
            "indicator {indicator} outside [0, 1]"
        )));
    }
    let m = lm.pseudo_matrix.nrows();
    if meas_cov.nrows() != m || meas_cov.ncols() != m || lm.adjusted_meas.len() != m {
        return Err(Error::InvalidDimension(format!(
            "measurement covariance is {}x{}, pseudo matrix has {m} rows",
            meas_cov.nrows(),
            meas_cov.ncols()
        )));
    }
    let ht_rinv = lm.pseudo_matrix.transpose() * spd_inverse(meas_cov)?;
    let mut delta_matrix = &ht_rinv * &lm.pseudo_matrix;
    symmetrize(&mut delta_matrix);
    let delta_vector = &ht_rinv * &lm.adjusted_meas;
    Ok(InfoContribution {
        delta_matrix: delta_matrix * indicator,
        delta_vector: delta_vector * indicator,
    })
}

/// Additive measurement update in information form.
pub fn correct(
    pred_info: &InformationPair,
    contributions: &[InfoContribution],
) -> Result<(InformationPair, GaussianBelief)> {
    let n = pred_info.dim();
    let mut info_matrix = pred_info.info_matrix.clone();
    let mut info_vector = pred_info.info_vector.clone();
    for c in contributions {
        if c.dim() != n || c.delta_matrix.nrows() != n {
            return Err(Error::InvalidDimension(format!(
                "contribution of dimension {} for state dimension {n}",
                c.dim()
            )));
        }
        info_matrix += &c.delta_matrix;
        info_vector += &c.delta_vector;
    }
    symmetrize(&mut info_matrix);
    let post_info = InformationPair {
        info_matrix,
        info_vector,
    };
    let post = from_information(&post_info)?;
    Ok((post_info, post))
}
