//! Property tests over random fields.

use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use nodal_lab::bounds::{calibrate_c, stirling_c3_check, BoundShape};
use nodal_lab::certifier::{certify_zero_bound, Segment};
use nodal_lab::experiment::sweep::flat_spectrum;
use nodal_lab::experiment::verify::dense_zero_count;
use nodal_lab::gevrey::{synth_random_gevrey, GevreyParams};
use nodal_lab::nodal::zeros_1d;
use nodal_lab::solver::sine_mode;
use nodal_lab::SpectralField;

fn field(seed: u64, dim: usize, cutoff: usize, flat: bool) -> SpectralField {
    if flat {
        flat_spectrum(seed, dim, cutoff).unwrap()
    } else {
        let p = GevreyParams::new(1.0, 0.2).unwrap();
        synth_random_gevrey(seed, dim, p, 1.5, cutoff, 1.0).unwrap()
    }
}

fn brute_product(u: &SpectralField, v: &SpectralField) -> SpectralField {
    let j = u.cutoff() as i64;
    let d = u.dim();
    let range = |lim: i64| if d == 2 { -lim..=lim } else { 0..=0 };
    SpectralField::from_fn(d, u.cutoff(), |k| {
        let mut s = Complex64::new(0.0, 0.0);
        for a in -j..=j {
            for b in range(j) {
                let m = [k[0] - a, k[1] - b];
                if m[0].abs() <= j && m[1].abs() <= j {
                    s += u.get([a, b]) * v.get(m);
                }
            }
        }
        s
    })
    .unwrap()
}

fn max_diff(a: &SpectralField, b: &SpectralField) -> f64 {
    a.coeffs()
        .iter()
        .zip(b.coeffs())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn parseval(seed in any::<u64>(), dim in 1usize..=2, cutoff in 1usize..=12, flat in any::<bool>()) {
        let f = field(seed, dim, cutoff, flat);
        let n = 2 * cutoff + 2;
        let g = f.to_grid(n).unwrap();
        let h = (2.0 * PI / n as f64).powi(dim as i32);
        let grid_sq: f64 = g.values().iter().map(|v| v * v).sum::<f64>() * h;
        let l2 = f.l2_norm();
        prop_assert!((grid_sq - l2 * l2).abs() <= 1e-12 * l2 * l2);
    }

    #[test]
    fn dealiased_product_is_exact(seed in any::<u64>(), dim in 1usize..=2, cutoff in 1usize..=8) {
        let u = field(seed, dim, cutoff, true);
        let v = field(seed ^ 1, dim, cutoff, false);
        let fast = u.pointwise_product(&v).unwrap();
        let slow = brute_product(&u, &v);
        let scale = u.sobolev_linf_bound() * v.sobolev_linf_bound();
        prop_assert!(max_diff(&fast, &slow) <= 1e-12 * scale.max(1.0));
    }

    #[test]
    fn gevrey_multipliers_compose(seed in any::<u64>(), dim in 1usize..=2, cutoff in 1usize..=10,
                                  a in 0.0f64..0.5, b in 0.0f64..0.5, beta in 0.3f64..=1.0) {
        let f = field(seed, dim, cutoff, true);
        let two = f.apply_gevrey_multiplier(a, beta).unwrap().apply_gevrey_multiplier(b, beta).unwrap();
        let one = f.apply_gevrey_multiplier(a + b, beta).unwrap();
        prop_assert!(max_diff(&two, &one) <= 1e-12 * one.max_amplitude());
    }

    #[test]
    fn operators_commute(seed in any::<u64>(), dim in 1usize..=2, cutoff in 1usize..=10,
                         s in 0.0f64..2.0, tau in 0.0f64..0.5) {
        let f = field(seed, dim, cutoff, false);
        let ag = f.apply_a_power(s).unwrap().apply_gevrey_multiplier(tau, 0.5).unwrap();
        let ga = f.apply_gevrey_multiplier(tau, 0.5).unwrap().apply_a_power(s).unwrap();
        prop_assert!(max_diff(&ag, &ga) <= 1e-12 * ag.max_amplitude().max(1e-300));
    }

    #[test]
    fn l1_bound_dominates_grid(seed in any::<u64>(), dim in 1usize..=2, cutoff in 1usize..=12, flat in any::<bool>()) {
        let f = field(seed, dim, cutoff, flat);
        for n in [2 * cutoff + 2, 4 * cutoff + 4] {
            prop_assert!(f.to_grid(n).unwrap().max_abs() <= f.sobolev_linf_bound() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn zeros_survive_refinement(seed in any::<u64>(), cutoff in 1usize..=32, flat in any::<bool>()) {
        let f = field(seed, 1, cutoff, flat);
        let a = zeros_1d(&f, 4).unwrap();
        let b = zeros_1d(&f, 8).unwrap();
        prop_assert_eq!(a.count(), b.count());
    }

    #[test]
    fn certificates_are_sound(seed in any::<u64>(), cutoff in 1usize..=32, flat in any::<bool>(),
                              c in 0.0f64..(2.0 * PI), h in 0.005f64..=0.5) {
        let f = field(seed, 1, cutoff, flat);
        let seg = Segment::new(c, h).unwrap();
        let out = certify_zero_bound(&f, seg, 200).unwrap();
        let n = out.nstar().expect("certified");
        prop_assert!(dense_zero_count(&f, seg, 4000) < n);
    }

    #[test]
    fn sine_certificate_scaling(k in 1i64..=32, len in 0.01f64..=1.0, c in 0.0f64..(2.0 * PI)) {
        let f = sine_mode(1, 32, k).unwrap();
        let out = certify_zero_bound(&f, Segment::new(c, len / 2.0).unwrap(), 200).unwrap();
        let n = out.nstar().expect("certified") as f64;
        prop_assert!(n <= 4.0 * (k as f64 * len + 10.0));
    }

    #[test]
    fn calibration_is_monotone(pairs in prop::collection::vec((1e-3f64..0.3, 0.0f64..100.0), 2..20),
                               extra in (1e-3f64..0.3, 0.0f64..100.0)) {
        let shape = BoundShape::MainBound { beta: 0.75 };
        let before = calibrate_c(&pairs, shape).unwrap().value;
        let mut more = pairs.clone();
        more.push(extra);
        prop_assert!(calibrate_c(&more, shape).unwrap().value >= before);
    }
}

#[test]
fn stirling_check_is_nonincreasing() {
    let mut prev = f64::INFINITY;
    for n in [1, 2, 5, 10, 50, 100, 200, 300] {
        let c = stirling_c3_check(n).unwrap();
        assert!(c <= prev, "n = {n}: {c} > {prev}");
        prev = c;
    }
}

#[test]
fn zeros_stable_under_oversample_doubling() {
    for seed in 0..100u64 {
        let cutoff = 1 + (seed % 32) as usize;
        let f = field(seed, 1, cutoff, seed % 2 == 0);
        let a = zeros_1d(&f, 8).unwrap();
        let b = zeros_1d(&f, 16).unwrap();
        assert_eq!(a.count(), b.count(), "seed {seed}, J = {cutoff}");
        for (x, y) in a.zeros.iter().zip(&b.zeros) {
            assert!((x - y).abs() < 1e-9);
        }
    }
}
