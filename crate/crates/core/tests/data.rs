use bayes_ratio::bayes::{generate_data, ObservationSet};
use bayes_ratio::randfield::{BasisOptions, CovarianceSpec, KlBasis};
use bayes_ratio::stats;

fn basis() -> KlBasis {
    KlBasis::build(CovarianceSpec::new(1.0, 0.3).unwrap(), 40, 32, BasisOptions::default()).unwrap()
}

#[test]
fn data_is_deterministic_in_its_seeds() {
    let b = basis();
    let a = generate_data(1, &b, 32, 9, 0.09, 2, 1e-12).unwrap();
    assert_eq!(a, generate_data(1, &b, 32, 9, 0.09, 2, 1e-12).unwrap());
    assert_ne!(a.y, generate_data(1, &b, 32, 9, 0.09, 3, 1e-12).unwrap().y);
    assert_ne!(a.noiseless, generate_data(4, &b, 32, 9, 0.09, 2, 1e-12).unwrap().noiseless);
}

#[test]
fn noise_has_the_requested_variance() {
    let b = basis();
    let sigma2 = 0.09;
    let mut residuals = Vec::new();
    for noise_seed in 0..300 {
        let d = generate_data(1, &b, 32, 25, sigma2, noise_seed, 1e-12).unwrap();
        residuals.extend(d.y.iter().zip(&d.noiseless).map(|(y, c)| y - c));
    }
    let n = residuals.len() as f64;
    let mean = stats::mean(&residuals);
    let var = stats::sample_variance(&residuals);
    assert!(mean.abs() < 4.0 * (sigma2 / n).sqrt(), "mean {mean}");
    // var of the sample variance is 2 sigma^4 / (n - 1)
    assert!((var - sigma2).abs() < 4.0 * sigma2 * (2.0 / (n - 1.0)).sqrt(), "variance {var}");
}

#[test]
fn rescaled_noise_keeps_the_standardised_draw() {
    let b = basis();
    let d = generate_data(1, &b, 32, 9, 0.09, 2, 1e-12).unwrap();
    let e = d.with_noise_variance(0.01).unwrap();
    for i in 0..9 {
        let za = (d.y[i] - d.noiseless[i]) / 0.09f64.sqrt();
        let zb = (e.y[i] - e.noiseless[i]) / 0.01f64.sqrt();
        assert!((za - zb).abs() < 1e-12);
    }
    assert!(d.with_noise_variance(0.0).is_err());
}

#[test]
fn noiseless_observations_are_pressures_in_range() {
    let b = basis();
    let d = generate_data(3, &b, 32, 16, 0.09, 2, 1e-12).unwrap();
    assert!(d.noiseless.iter().all(|v| (0.0..=1.0).contains(v)));
}

#[test]
fn data_file_round_trip() {
    let b = basis();
    let d = generate_data(1, &b, 32, 9, 0.09, 2, 1e-12).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("data.txt");
    d.save(&path).unwrap();
    assert_eq!(ObservationSet::load(&path).unwrap(), d);
}
