//! Sample-moment oracles for the scenario generator and the prediction step.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rfusion_core::gauss::{predict, GaussianBelief};
use rfusion_core::linalg::sqrt_factor;
use rfusion_core::scenario::{
    contaminate, ct_transition, process_cov, turn, ContaminationSpec, CoordinatedTurn, CtState,
    SensorSpec,
};

const DRAWS: usize = 1_000_000;

fn sample_cov(samples: impl Iterator<Item = DVector<f64>>, dim: usize) -> DMatrix<f64> {
    let mut sum = DVector::zeros(dim);
    let mut outer = DMatrix::zeros(dim, dim);
    let mut count = 0.0;
    for v in samples {
        sum += &v;
        outer.ger(1.0, &v, &v, 1.0);
        count += 1.0;
    }
    let mean = sum / count;
    outer / count - &mean * mean.transpose()
}

/// Diagonal entries within `tol` relative; off-diagonal entries within `tol`
/// of the geometric mean of the two variances.
fn assert_cov_close(got: &DMatrix<f64>, want: &DMatrix<f64>, tol: f64) {
    for i in 0..want.nrows() {
        for j in 0..want.ncols() {
            let scale = (want[(i, i)] * want[(j, j)]).sqrt();
            let err = (got[(i, j)] - want[(i, j)]).abs() / scale;
            assert!(
                err < tol,
                "entry ({i},{j}): got {} want {}",
                got[(i, j)],
                want[(i, j)]
            );
        }
    }
}

#[test]
fn process_noise_covariance() {
    let x = CtState::from_slice(&[1000.0, 50.0, 2000.0, -50.0, 0.053]).unwrap();
    let mean = turn(&x, 1.0).to_vector();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let samples = (0..DRAWS).map(|_| {
        ct_transition(&x, 1.0, 0.1, 1.75e-4, &mut rng)
            .unwrap()
            .to_vector()
            - &mean
    });
    let got = sample_cov(samples, 5);
    assert_cov_close(&got, &process_cov(1.0, 0.1, 1.75e-4), 0.02);
}

#[test]
fn contamination_mixture_moments() {
    let s = SensorSpec::active([0.0, 0.0], 100.0, 1.22e-5);
    let c = ContaminationSpec::new(0.4, 100.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut outliers = 0usize;
    let samples: Vec<DVector<f64>> = (0..DRAWS)
        .map(|_| {
            let (v, o) = contaminate(&s, &c, &mut rng).unwrap();
            outliers += o as usize;
            v
        })
        .collect();
    let got = sample_cov(samples.into_iter(), 2);
    let want = &s.nominal_cov * (1.0 - 0.4 + 0.4 * 100.0);
    assert_cov_close(&got, &want, 0.03);
    let rate = outliers as f64 / DRAWS as f64;
    assert!((rate - 0.4).abs() < 0.005, "outlier rate {rate}");
}

#[test]
fn cubature_prediction_mean_matches_sampling() {
    let x0 = DVector::from_row_slice(&[1000.0, 50.0, 2000.0, -50.0, 0.053]);
    let p0 = DMatrix::from_diagonal(&DVector::from_row_slice(&[1e4, 100.0, 1e4, 100.0, 3.04e-6]));
    let prior = GaussianBelief::new(x0.clone(), p0.clone()).unwrap();
    let (pred, _) = predict(&prior, &CoordinatedTurn { dt: 1.0 }, &DMatrix::zeros(5, 5)).unwrap();

    let l = sqrt_factor(&p0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut sum = DVector::zeros(5);
    for _ in 0..DRAWS {
        let z = DVector::from_fn(5, |_, _| StandardNormal.sample(&mut rng));
        let x = CtState::from_slice((&x0 + &l * z).as_slice()).unwrap();
        sum += turn(&x, 1.0).to_vector();
    }
    let mc = sum / DRAWS as f64;
    for k in 0..5 {
        let rel = (pred.mean[k] - mc[k]).abs() / mc[k].abs();
        assert!(
            rel < 5e-4,
            "component {k}: cubature {} vs sampled {}",
            pred.mean[k],
            mc[k]
        );
    }
}
