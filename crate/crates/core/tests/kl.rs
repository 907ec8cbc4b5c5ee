mod common;

use bayes_ratio::fem::MeshLevel;
use bayes_ratio::randfield::{modes_1d, BasisOptions, CovarianceSpec, KlBasis};

#[test]
fn one_dimensional_eigenvalues_match_nystrom() {
    let oracle = common::nystrom_eigenvalues(0.3, 800, 10);
    let modes = modes_1d(0.3, 10).unwrap();
    for (m, want) in modes.iter().zip(&oracle) {
        let rel = (m.eigenvalue - want).abs() / want;
        assert!(rel < 1e-3, "{} vs {want}: rel {rel:e}", m.eigenvalue);
    }
}

#[test]
fn eigenfunctions_satisfy_the_integral_equation() {
    let lambda = 0.3;
    let n = 20_000;
    let h = 1.0 / n as f64;
    for m in modes_1d(lambda, 6).unwrap() {
        for x in [0.0, 0.13, 0.5, 0.77, 1.0] {
            let integral: f64 = (0..n)
                .map(|i| {
                    let t = (i as f64 + 0.5) * h;
                    h * (-(x - t).abs() / lambda).exp() * m.eval(t)
                })
                .sum();
            assert!((integral - m.eigenvalue * m.eval(x)).abs() < 1e-6, "mode {m:?} at {x}");
        }
    }
}

#[test]
fn mercer_sum_bounded_by_variance_and_captures_most_at_centre() {
    let spec = CovarianceSpec::new(1.0, 0.3).unwrap();
    let basis = KlBasis::build(spec, 200, 64, BasisOptions::default()).unwrap();
    let mut max = 0.0f64;
    for i in 0..=64 {
        for k in 0..=64 {
            max = max.max(basis.mercer_partial_sum(i, k, 200));
        }
    }
    assert!(max <= 1.0 + 1e-12);
    let centre = basis.mercer_partial_sum(32, 32, 200);
    assert!(centre >= 0.9, "captured variance at centre {centre}");
}

#[test]
fn eigenfunctions_are_orthonormal_on_the_square() {
    let spec = CovarianceSpec::new(1.0, 0.3).unwrap();
    let basis = KlBasis::build(spec, 12, 64, BasisOptions::default()).unwrap();
    let n = 200;
    let h = 1.0 / n as f64;
    for a in 0..12 {
        for b in 0..=a {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let x = [(i as f64 + 0.5) * h, (j as f64 + 0.5) * h];
                    s += h * h * basis.eigenfunction(a, x) * basis.eigenfunction(b, x);
                }
            }
            let want = if a == b { 1.0 } else { 0.0 };
            assert!((s - want).abs() < 1e-3, "({a},{b}): {s}");
        }
    }
}

#[test]
fn coarse_meshes_read_the_fine_tabulation() {
    let spec = CovarianceSpec::new(1.0, 0.3).unwrap();
    let basis = KlBasis::build(spec, 50, 64, BasisOptions::default()).unwrap();
    let xi = bayes_ratio::randfield::sample_parameters(&basis, 17);
    let fine = basis.log_field(&xi, &MeshLevel::uniform(64).unwrap()).unwrap();
    let coarse = basis.log_field(&xi, &MeshLevel::uniform(16).unwrap()).unwrap();
    for j in 0..=16 {
        for i in 0..=16 {
            assert_eq!(coarse[j * 17 + i], fine[(4 * j) * 65 + 4 * i]);
        }
    }
}
