mod common;

use common::{characteristic_polynomial, polynomial_roots, random_hermitian};
use precoding_core::baselines::{covariance, evd_precoder, svd_precoder};
use precoding_core::link::effective_gain;
use precoding_core::numerics::{complex_gaussian, hermitian_evd, random_unit_vector, SimRng};
use precoding_core::{CMat, CVec};
use proptest::prelude::*;

#[test]
fn eigenvalues_match_characteristic_polynomial_roots() {
    let mut rng = SimRng::new(200, 0);
    for _ in 0..50 {
        let a = random_hermitian(4, &mut rng);
        let eig = hermitian_evd(&a).unwrap();
        let roots = polynomial_roots(&characteristic_polynomial(&a));
        for (l, r) in eig.values.iter().zip(&roots) {
            assert!((l - r.re).abs() < 1e-8, "{l} vs {r}");
            assert!(r.im.abs() < 1e-6);
        }
    }
}

#[test]
fn covariance_matches_entrywise_sum() {
    let mut rng = SimRng::new(201, 0);
    let pilots: Vec<CMat> = (0..3)
        .map(|_| complex_gaussian(2, 4, 1.0, &mut rng).unwrap())
        .collect();
    let r = covariance(&pilots).unwrap();
    for i in 0..4 {
        for j in 0..4 {
            let mut s = num_complex::Complex::new(0.0, 0.0);
            for h in &pilots {
                for row in 0..2 {
                    s += h[(row, i)].conj() * h[(row, j)];
                }
            }
            assert!((r.r()[(i, j)] - s / 3.0).norm() < 1e-12);
        }
    }
}

#[test]
fn analytic_precoders_dominate_random_search() {
    let mut rng = SimRng::new(202, 0);
    for _ in 0..3 {
        let h: CMat = complex_gaussian(2, 4, 1.0, &mut rng).unwrap();
        let w = svd_precoder(&h).unwrap();
        let best = effective_gain(&h, &w);
        let lambda = hermitian_evd(&h.gram()).unwrap().values[0];
        assert!((best - lambda).abs() < 1e-9);
        let cov = covariance(&[h.clone(), complex_gaussian(2, 4, 1.0, &mut rng).unwrap()]).unwrap();
        let v = evd_precoder(&cov).unwrap();
        let q = cov.r().quadratic_form(v.w()).unwrap();
        for _ in 0..20_000 {
            let u: CVec = random_unit_vector(4, &mut rng);
            assert!(h.mul_vec(&u).unwrap().norm_sqr() <= best + 1e-9);
            assert!(cov.r().quadratic_form(&u).unwrap() <= q + 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(common::cases(64))]

    #[test]
    fn decomposition_invariants(seed in any::<u64>(), n in 1usize..9) {
        let mut rng = SimRng::new(seed, 0);
        let a = random_hermitian(n, &mut rng);
        let eig = hermitian_evd(&a).unwrap();
        let scale = a.frobenius_norm().max(1.0);
        for (l, v) in eig.values.iter().zip(&eig.vectors) {
            let av = a.mul_vec(v).unwrap();
            let lv = v.scale(num_complex::Complex::new(*l, 0.0));
            prop_assert!(av.sub(&lv).norm() < 1e-9 * scale);
            prop_assert!((v.norm() - 1.0).abs() < 1e-12);
        }
        for i in 0..n {
            for j in (i + 1)..n {
                prop_assert!(eig.vectors[i].dot(&eig.vectors[j]).norm() < 1e-10);
            }
        }
        prop_assert!(eig.values.windows(2).all(|w| w[0] >= w[1]));
        let trace: f64 = eig.values.iter().sum();
        prop_assert!((trace - a.trace().re).abs() < 1e-10 * scale);
    }

    #[test]
    fn gram_eigenvalues_are_nonnegative(seed in any::<u64>(), rows in 1usize..4) {
        let mut rng = SimRng::new(seed, 1);
        let h: CMat = complex_gaussian(rows, 4, 1.0, &mut rng).unwrap();
        let pilots = vec![h.clone(), h.scale(0.5)];
        let cov = covariance(&pilots).unwrap();
        prop_assert!(cov.r().hermitian_defect() < 1e-10);
        let eig = hermitian_evd(cov.r()).unwrap();
        prop_assert!(eig.values.iter().all(|&l| l >= -1e-10));
    }
}
