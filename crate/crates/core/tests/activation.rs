mod common;

use std::f64::consts::{FRAC_2_PI, FRAC_PI_2};

use fourier_contour::activation::{
    activate, activate_inverse, activation_derivative, inverse_scalar, refine, refine_gradient,
    refine_gradient_limit, Logits, OffsetVector, DEFAULT_DELTA,
};
use fourier_contour::check::{central_difference, relative_error};
use fourier_contour::codec::{check_bounds, FourierDescriptor};
use proptest::prelude::*;
use rand::Rng;

use common::rng;

const K: usize = 3;
const LEN: usize = 4 * K + 2;

fn is_dc(i: usize) -> bool {
    i == 2 * K || i == 2 * K + 1
}

/// Valid descriptor with `delta * |c| <= 0.95` on non-dc entries.
fn random_prev(rng: &mut impl Rng) -> FourierDescriptor {
    let coeffs = (0..LEN)
        .map(|i| {
            if is_dc(i) {
                rng.gen_range(0.025..0.975)
            } else {
                rng.gen_range(-0.95..0.95) / DEFAULT_DELTA
            }
        })
        .collect();
    FourierDescriptor::new(K, coeffs).unwrap()
}

fn random_offset(rng: &mut impl Rng, scale: f64) -> OffsetVector {
    OffsetVector::new(K, (0..LEN).map(|_| rng.gen_range(-scale..scale)).collect()).unwrap()
}

/// Scalar refinement written out independently of the library.
fn refine_scalar(c: f64, o: f64, dc: bool) -> f64 {
    if dc {
        let z = (c / (1.0 - c)).ln() + o;
        1.0 / (1.0 + (-z).exp())
    } else {
        ((c * FRAC_PI_2).atanh() * o.exp()).tanh() / FRAC_PI_2
    }
}

#[test]
fn gradient_matches_finite_differences() {
    let mut rng = rng(10);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let prev = random_prev(&mut rng);
        let offset = random_offset(&mut rng, 1.0);
        let grad = refine_gradient(&prev, &offset, DEFAULT_DELTA).unwrap();
        for (i, &g) in grad.iter().enumerate() {
            let c = prev.as_slice()[i];
            let fd = central_difference(
                |o| refine_scalar(c, o, is_dc(i)),
                offset.as_slice()[i],
                1e-6,
            );
            worst = worst.max(relative_error(g, fd));
        }
    }
    assert!(worst < 1e-5, "max relative error {worst}");
}

#[test]
fn gradient_near_zero_offset_approaches_limit() {
    let mut rng = rng(11);
    for _ in 0..200 {
        let prev = random_prev(&mut rng);
        let offset = random_offset(&mut rng, 1e-4);
        let grad = refine_gradient(&prev, &offset, DEFAULT_DELTA).unwrap();
        let limit = refine_gradient_limit(&prev, DEFAULT_DELTA).unwrap();
        for i in 0..LEN {
            assert!(relative_error(grad[i], limit[i]) < 1e-3);
        }
    }
}

#[test]
fn gradient_at_zero_equals_limit_closed_form() {
    let mut rng = rng(12);
    for _ in 0..200 {
        let prev = random_prev(&mut rng);
        let grad = refine_gradient(&prev, &OffsetVector::zeros(K), DEFAULT_DELTA).unwrap();
        for (i, &c) in prev.as_slice().iter().enumerate() {
            // f'(f^{-1}(c)) written via the output value: sigma' = c(1-c),
            // (tanh/delta)' = (1 - (delta c)^2) / delta
            let expected = if is_dc(i) {
                c * (1.0 - c)
            } else {
                let t = c * FRAC_PI_2;
                (1.0 - t * t) / FRAC_PI_2 * t.atanh()
            };
            assert!(relative_error(grad[i], expected) < 1e-10);
        }
    }
}

#[test]
fn weighting_factor_is_monotone_in_magnitude() {
    // |f^{-1}(c)| grows with |c| on non-dc entries, so the multiplicative
    // update's zero-offset gradient carries a weight that grows with |c|
    // relative to the additive one.
    let grid: Vec<f64> = (0..2000).map(|i| i as f64 / 2000.0 * FRAC_2_PI).collect();
    let mut last = -1.0;
    for &c in &grid {
        let z = inverse_scalar(c, false, DEFAULT_DELTA).unwrap().abs();
        let additive = activation_derivative(z, false, DEFAULT_DELTA);
        let multiplicative = activation_derivative(z, false, DEFAULT_DELTA) * z;
        let ratio = if additive > 0.0 {
            multiplicative / additive
        } else {
            0.0
        };
        assert!(ratio >= last);
        last = ratio;
        let neg = inverse_scalar(-c, false, DEFAULT_DELTA).unwrap().abs();
        assert_eq!(neg, z);
    }
}

#[test]
fn full_gradient_peaks_before_the_range_boundary() {
    // (1 - t^2) artanh(t) / delta with t = delta |c| rises then falls; the
    // maximum sits where 2 t artanh(t) = 1.
    let g = |t: f64| {
        let c = t / DEFAULT_DELTA;
        let fd = FourierDescriptor::new(1, vec![c, 0.0, 0.5, 0.5, 0.0, 0.0]).unwrap();
        refine_gradient(&fd, &OffsetVector::zeros(1), DEFAULT_DELTA).unwrap()[0]
    };
    assert!(g(0.3) < g(0.6));
    assert!(g(0.95) < g(0.7));
    let (mut lo, mut hi) = (0.1f64, 0.99f64);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if 2.0 * mid * mid.atanh() < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let peak = g(lo);
    for i in 1..999 {
        assert!(g(i as f64 / 1000.0) <= peak + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn activation_round_trip(values in prop::collection::vec(-15.0f64..15.0, LEN)) {
        let fd = activate(&Logits::new(K, values).unwrap(), DEFAULT_DELTA);
        prop_assert!(check_bounds(&fd).is_within());
        let back = activate(&activate_inverse(&fd, DEFAULT_DELTA).unwrap(), DEFAULT_DELTA);
        for (a, b) in back.as_slice().iter().zip(fd.as_slice()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn refine_stays_in_range(seed in any::<u64>()) {
        let mut r = rng(seed);
        let prev = random_prev(&mut r);
        let offset = random_offset(&mut r, 2.0);
        let out = refine(&prev, &offset, DEFAULT_DELTA).unwrap();
        prop_assert!(activate_inverse(&out, DEFAULT_DELTA).is_ok());
    }

    #[test]
    fn zero_offset_is_identity(seed in any::<u64>()) {
        let prev = random_prev(&mut rng(seed));
        let out = refine(&prev, &OffsetVector::zeros(K), DEFAULT_DELTA).unwrap();
        for (a, b) in out.as_slice().iter().zip(prev.as_slice()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn refinement_composes(seed in any::<u64>()) {
        let mut r = rng(seed);
        let prev = random_prev(&mut r);
        let o1 = random_offset(&mut r, 0.5);
        let o2 = random_offset(&mut r, 0.5);
        let sum = OffsetVector::new(
            K,
            o1.as_slice().iter().zip(o2.as_slice()).map(|(a, b)| a + b).collect(),
        ).unwrap();
        let twice = refine(&refine(&prev, &o1, DEFAULT_DELTA).unwrap(), &o2, DEFAULT_DELTA).unwrap();
        let once = refine(&prev, &sum, DEFAULT_DELTA).unwrap();
        for (a, b) in twice.as_slice().iter().zip(once.as_slice()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn refine_matches_scalar_oracle(seed in any::<u64>()) {
        let mut r = rng(seed);
        let prev = random_prev(&mut r);
        let offset = random_offset(&mut r, 1.0);
        let out = refine(&prev, &offset, DEFAULT_DELTA).unwrap();
        for i in 0..LEN {
            let expected = refine_scalar(prev.as_slice()[i], offset.as_slice()[i], is_dc(i));
            prop_assert!((out.as_slice()[i] - expected).abs() < 1e-14);
        }
    }
}
