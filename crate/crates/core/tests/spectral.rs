mod common;

use std::time::Instant;

use common::*;
use num_complex::Complex64;
use proptest::prelude::*;
use specdim::spectral::{amplitude_spectrum, dft_direct, fft_forward, FftPlan};

fn tested_lengths() -> Vec<usize> {
    (1..=64).chain([96, 153, 256, 768]).collect()
}

#[test]
fn oracle_equivalence_all_lengths() {
    for n in tested_lengths() {
        for seed in 0..3 {
            let x = random_complex(n, 1000 * n as u64 + seed);
            let diff = max_abs_diff(&fft_forward(&x).unwrap(), &dft_direct(&x).unwrap());
            assert!(diff < 1e-9, "n={n} seed={seed} diff={diff:e}");
        }
    }
}

#[test]
fn random_real_768_matches_direct() {
    let x = as_complex(&random_real(768, 3));
    assert!(max_abs_diff(&fft_forward(&x).unwrap(), &dft_direct(&x).unwrap()) < 1e-9);
}

#[test]
fn parseval_153_direct() {
    let x = random_complex(153, 8);
    let spec = dft_direct(&x).unwrap();
    let time: f64 = x.iter().map(|c| c.norm_sqr()).sum();
    let freq: f64 = spec.iter().map(|c| c.norm_sqr()).sum::<f64>() / 153.0;
    assert!(((time - freq) / time).abs() < 1e-9);
}

#[test]
fn parseval_and_symmetry_all_lengths() {
    for n in tested_lengths() {
        let x = random_real(n, 77 + n as u64);
        let spec = fft_forward(&as_complex(&x)).unwrap();
        let time: f64 = x.iter().map(|v| v * v).sum();
        let freq: f64 = spec.iter().map(|c| c.norm_sqr()).sum::<f64>() / n as f64;
        assert!(((time - freq) / time).abs() < 1e-9, "n={n}");
        let amp = amplitude_spectrum(&spec).unwrap();
        for k in 1..n {
            assert!((spec[k] - spec[n - k].conj()).norm() < 1e-9, "n={n} k={k}");
            assert!((amp[k] - amp[n - k]).abs() < 1e-9, "n={n} k={k}");
        }
    }
}

#[test]
fn plan_reuse_is_bit_identical() {
    let plan = FftPlan::new(768).unwrap();
    let x = random_real(768, 5);
    let a = plan.forward_real(&x).unwrap();
    let b = plan.forward_real(&x).unwrap();
    let c = fft_forward(&as_complex(&x)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a, c);
}

#[test]
fn concurrent_calls_agree() {
    let x = random_complex(768, 9);
    let expected = fft_forward(&x).unwrap();
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..4).map(|_| s.spawn(|| fft_forward(&x).unwrap())).collect();
        for h in handles {
            assert_eq!(h.join().unwrap(), expected);
        }
    });
}

#[test]
fn fft_at_768_is_much_faster_than_direct() {
    let x = random_complex(768, 4);
    let time = |f: &dyn Fn() -> Vec<Complex64>| {
        let mut best = f64::MAX;
        for _ in 0..5 {
            let t = Instant::now();
            std::hint::black_box(f());
            best = best.min(t.elapsed().as_secs_f64());
        }
        best
    };
    let fast = time(&|| fft_forward(&x).unwrap());
    let slow = time(&|| dft_direct(&x).unwrap());
    assert!(slow / fast >= 10.0, "speedup only {:.1}x", slow / fast);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn linearity(n in 1usize..200, seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let x = random_complex(n, seed);
        let y = random_complex(n, seed.wrapping_add(1));
        let mix: Vec<Complex64> = x.iter().zip(&y).map(|(p, q)| p * a + q * b).collect();
        let fx = fft_forward(&x).unwrap();
        let fy = fft_forward(&y).unwrap();
        let expected: Vec<Complex64> = fx.iter().zip(&fy).map(|(p, q)| p * a + q * b).collect();
        prop_assert!(max_abs_diff(&fft_forward(&mix).unwrap(), &expected) < 1e-9);
    }

    #[test]
    fn matches_direct_for_arbitrary_lengths(n in 1usize..400, seed in any::<u64>()) {
        let x = random_complex(n, seed);
        prop_assert!(max_abs_diff(&fft_forward(&x).unwrap(), &dft_direct(&x).unwrap()) < 1e-9);
    }

    #[test]
    fn amplitudes_non_negative(n in 1usize..100, seed in any::<u64>()) {
        let amp = amplitude_spectrum(&random_complex(n, seed)).unwrap();
        prop_assert_eq!(amp.len(), n);
        prop_assert!(amp.iter().all(|a| *a >= 0.0 && a.is_finite()));
    }
}
