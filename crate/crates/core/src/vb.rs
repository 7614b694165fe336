//! Beta-Bernoulli outlier indicators.
//!
//! Each measurement carries a latent indicator `z ∈ {0, 1}` (1 = nominal)
//! with a Bernoulli prior whose success probability is Beta(e₀, f₀). The
//! mean-field factors for `z` and `π` have closed-form updates.

use alloc::format;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::float;
use crate::gauss::{GaussianBelief, MeasurementModel};
use crate::linalg::{sampling_factor, spd_inverse};
use crate::{Error, Result};

/// Beta hyperparameters `(e₀, f₀)` of the indicator prior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaPrior {
    pub e0: f64,
    pub f0: f64,
}

impl BetaPrior {
    pub fn new(e0: f64, f0: f64) -> Result<Self> {
        if !(e0 > 0.0 && e0.is_finite() && f0 > 0.0 && f0.is_finite()) {
            return Err(Error::Domain(format!(
                "beta prior parameters must be positive, got ({e0}, {f0})"
            )));
        }
        Ok(Self { e0, f0 })
    }
}

impl Default for BetaPrior {
    fn default() -> Self {
        Self { e0: 0.9, f0: 0.1 }
    }
}

/// Variational state of one indicator: `⟨z⟩` and `q(π) = Beta(e, f)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndicatorState {
    pub z_mean: f64,
    pub e: f64,
    pub f: f64,
}

impl IndicatorState {
    /// Start of a VB loop: trust the measurement, beta at the prior.
    pub fn initial(prior: BetaPrior) -> Self {
        Self {
            z_mean: 1.0,
            e: prior.e0,
            f: prior.f0,
        }
    }
}

/// `tr(D R⁻¹)` where `D = E[(y - h(x))(y - h(x))ᵀ]` under the posterior.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Discrepancy {
    pub stat: f64,
}

pub fn expected_discrepancy<M: MeasurementModel + ?Sized>(
    posterior: &GaussianBelief,
    meas_fn: &M,
    raw_meas: &DVector<f64>,
    meas_cov: &DMatrix<f64>,
) -> Result<Discrepancy> {
    let n = posterior.dim();
    let m = meas_fn.dim();
    if raw_meas.len() != m || meas_cov.nrows() != m || meas_cov.ncols() != m {
        return Err(Error::InvalidDimension(format!(
            "measurement of length {} / covariance {}x{} for a {m}-dimensional sensor",
            raw_meas.len(),
            meas_cov.nrows(),
            meas_cov.ncols()
        )));
    }
    let s = sampling_factor(&posterior.cov)?;
    let radius = float::sqrt(n as f64);
    let w = 1.0 / (2 * n) as f64;
    let mut second = DMatrix::zeros(m, m);
    for i in 0..n {
        let offset = s.column(i) * radius;
        for point in [&posterior.mean + &offset, &posterior.mean - &offset] {
            let r = meas_fn.difference(raw_meas, &meas_fn.observe(&point)?);
            second.ger(w, &r, &r, 1.0);
        }
    }
    let rinv = spd_inverse(meas_cov)?;
    let stat = (second * rinv).trace().max(0.0);
    Ok(Discrepancy { stat })
}

/// Mean-field update of `⟨z⟩`, evaluated as a logistic of the log-odds.
pub fn update_indicator(st: IndicatorState, d: Discrepancy) -> IndicatorState {
    let psi_sum = digamma_unchecked(st.e + st.f);
    let log_nominal = digamma_unchecked(st.e) - psi_sum - 0.5 * d.stat;
    let log_outlier = digamma_unchecked(st.f) - psi_sum;
    IndicatorState {
        z_mean: logistic(log_nominal - log_outlier),
        ..st
    }
}

/// `e = e₀ + ⟨z⟩`, `f = f₀ + 1 - ⟨z⟩`.
pub fn update_beta(st: IndicatorState, priors: BetaPrior) -> IndicatorState {
    IndicatorState {
        e: priors.e0 + st.z_mean,
        f: priors.f0 + 1.0 - st.z_mean,
        ..st
    }
}

fn logistic(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + float::exp(-t))
    } else {
        let et = float::exp(t);
        et / (1.0 + et)
    }
}

/// Digamma function `Ψ(x)` for `x > 0`.
pub fn digamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("digamma undefined at {x}")));
    }
    Ok(digamma_unchecked(x))
}

fn digamma_unchecked(mut x: f64) -> f64 {
    // Shift above 6 with Ψ(x) = Ψ(x+1) - 1/x, then the Bernoulli expansion.
    let mut acc = 0.0;
    while x < 6.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2
                        * (1.0 / 252.0
                            - inv2
                                * (1.0 / 240.0
                                    - inv2
                                        * (1.0 / 132.0
                                            - inv2 * (691.0 / 32760.0 - inv2 / 12.0))))));
    acc + float::ln(x) - 0.5 * inv - series
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauss::LinearMeasurement;
    use approx::assert_relative_eq;
    use nalgebra::{dmatrix, dvector};

    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

    #[test]
    fn digamma_known_values() {
        assert_relative_eq!(digamma(1.0).unwrap(), -EULER_GAMMA, epsilon = 1e-12);
        assert_relative_eq!(
            digamma(0.5).unwrap(),
            -EULER_GAMMA - 2.0 * core::f64::consts::LN_2,
            epsilon = 1e-12
        );
        assert_relative_eq!(digamma(0.5).unwrap(), -1.963_510_026_0, epsilon = 1e-10);
    }

    #[test]
    fn digamma_domain() {
        assert!(matches!(digamma(0.0), Err(Error::Domain(_))));
        assert!(matches!(digamma(-1.5), Err(Error::Domain(_))));
        assert!(matches!(digamma(f64::NAN), Err(Error::Domain(_))));
    }

    #[test]
    fn symmetric_beta_gives_half() {
        for e in [0.1, 0.5, 1.0, 3.0] {
            let st = IndicatorState {
                z_mean: 1.0,
                e,
                f: e,
            };
            let z = update_indicator(st, Discrepancy { stat: 0.0 }).z_mean;
            assert_relative_eq!(z, 0.5, epsilon = 1e-15);
        }
    }

    #[test]
    fn large_discrepancy_flags_outlier() {
        let st = IndicatorState {
            z_mean: 1.0,
            e: 0.9,
            f: 0.1,
        };
        let z = update_indicator(st, Discrepancy { stat: 40.0 }).z_mean;
        // tabulated Ψ(0.9) and Ψ(0.1)
        let logit: f64 = -0.754_926_949_947_051_4 - (-10.423_754_940_411_076) - 20.0;
        let expected = 1.0 / (1.0 + (-logit).exp());
        assert_relative_eq!(z, expected, max_relative = 1e-12);
        assert!(z < 1e-4, "z = {z}");
    }

    #[test]
    fn indicator_saturates_without_nan() {
        let st = IndicatorState {
            z_mean: 1.0,
            e: 0.9,
            f: 0.1,
        };
        let z = update_indicator(st, Discrepancy { stat: 1e6 }).z_mean;
        assert!((0.0..1e-300).contains(&z));
    }

    #[test]
    fn beta_update_examples() {
        let p = BetaPrior::new(0.9, 0.1).unwrap();
        let st = update_beta(
            IndicatorState {
                z_mean: 1.0,
                e: 0.0,
                f: 0.0,
            },
            p,
        );
        assert_relative_eq!(st.e, 1.9, epsilon = 1e-15);
        assert_relative_eq!(st.f, 0.1, epsilon = 1e-15);
        let st = update_beta(
            IndicatorState {
                z_mean: 0.0,
                e: 0.0,
                f: 0.0,
            },
            p,
        );
        assert_relative_eq!(st.e, 0.9, epsilon = 1e-15);
        assert_relative_eq!(st.f, 1.1, epsilon = 1e-15);
        let half = BetaPrior::new(0.5, 0.5).unwrap();
        let st = update_beta(
            IndicatorState {
                z_mean: 0.5,
                e: 0.0,
                f: 0.0,
            },
            half,
        );
        assert_eq!((st.e, st.f), (1.0, 1.0));
    }

    #[test]
    fn beta_prior_validation() {
        assert!(BetaPrior::new(0.0, 1.0).is_err());
        assert!(BetaPrior::new(1.0, -0.1).is_err());
    }

    #[test]
    fn point_mass_discrepancy() {
        let h = LinearMeasurement(dmatrix![1.0, 0.0; 0.0, 1.0]);
        let point = GaussianBelief::new(dvector![1.0, 2.0], DMatrix::zeros(2, 2)).unwrap();
        let r = dmatrix![2.0, 0.5; 0.5, 1.0];

        let exact = expected_discrepancy(&point, &h, &dvector![1.0, 2.0], &r).unwrap();
        assert_eq!(exact.stat, 0.0);

        let resid = dvector![0.7, -1.2];
        let y = dvector![1.0, 2.0] + &resid;
        let d = expected_discrepancy(&point, &h, &y, &r).unwrap();
        let expected = (resid.transpose() * r.clone().try_inverse().unwrap() * &resid)[(0, 0)];
        assert_relative_eq!(d.stat, expected, epsilon = 1e-12);
    }

    #[test]
    fn scalar_point_mass_zero() {
        let h = LinearMeasurement(dmatrix![1.0]);
        let point = GaussianBelief::new(dvector![3.0], DMatrix::zeros(1, 1)).unwrap();
        let d = expected_discrepancy(&point, &h, &dvector![3.0], &dmatrix![1.0]).unwrap();
        assert_eq!(d.stat, 0.0);
    }
}
