use nodal_lab::experiment::sweep::flat_spectrum;
use nodal_lab::gevrey::{synth_random_gevrey, CoefficientSet, GevreyParams};
use nodal_lab::solver::{sine_mode, solve, verify_lower_bound, SolverConfig};
use nodal_lab::SpectralField;

fn params() -> GevreyParams {
    GevreyParams::new(1.0, 0.1).unwrap()
}

fn at(t: f64, dt: f64) -> SolverConfig {
    SolverConfig {
        dt,
        t0: t,
        snapshot_times: vec![t],
        gevrey_radii: vec![],
    }
}

fn rel_error(a: &SpectralField, b: &SpectralField) -> f64 {
    a.axpy(-1.0, b).unwrap().l2_norm() / b.l2_norm()
}

#[test]
fn unit_potential_matches_closed_form_at_fourth_order() {
    let u0 = sine_mode(1, 4, 3).unwrap();
    let v = SpectralField::constant(1, 4, 1.0).unwrap();
    let w = vec![SpectralField::zeros(1, 4).unwrap()];
    let c = CoefficientSet::certify(v, w, params()).unwrap();
    let exact = u0.scaled((-0.8f64).exp());
    let err = |dt| rel_error(&solve(&u0, &c, &at(0.1, dt)).unwrap().snapshots[0].u, &exact);
    assert!(err(1e-3) < 1e-8);
    let ratio = err(0.02) / err(0.01);
    assert!((14.0..=18.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn random_coefficients_converge_at_fourth_order() {
    let c = CoefficientSet::synthesize(11, 1, 12, params(), 2.0, 0.3).unwrap();
    let u0 = synth_random_gevrey(5, 1, params(), 2.0, 12, 1.0).unwrap();
    let reference = solve(&u0, &c, &at(0.1, 0.1 / 640.0)).unwrap().snapshots[0].u.clone();
    let err = |dt| rel_error(&solve(&u0, &c, &at(0.1, dt)).unwrap().snapshots[0].u, &reference);
    // Exact divisors of the horizon, so halving dt doubles the step count.
    let dt = 0.1 / 16.0;
    assert!(dt <= SolverConfig::max_stable_dt(&[0.1], &c, 12));
    let ratio = err(dt) / err(dt / 2.0);
    assert!((14.0..=18.0).contains(&ratio), "ratio {ratio} at dt {dt}");
}

#[test]
fn heat_dirichlet_quotient_is_nonincreasing() {
    let c = CoefficientSet::zero(1, 24, params()).unwrap();
    let times: Vec<f64> = (1..=20).map(|k| k as f64 * 0.005).collect();
    let cfg = SolverConfig {
        dt: 0.005,
        t0: 0.1,
        snapshot_times: times,
        gevrey_radii: vec![],
    };
    for seed in 0..50 {
        let u0 = if seed % 2 == 0 {
            flat_spectrum(seed, 1, 24).unwrap()
        } else {
            synth_random_gevrey(seed, 1, params(), 1.2, 24, 1.0).unwrap()
        };
        let rec = solve(&u0, &c, &cfg).unwrap();
        let mut prev = f64::INFINITY;
        for s in &rec.snapshots {
            assert!(s.qd <= prev * (1.0 + 1e-12), "seed {seed} at t = {}", s.t);
            prev = s.qd;
        }
    }
}

#[test]
fn lower_bound_holds_in_two_dimensions() {
    let times = nodal_lab::bounds::log_grid(1e-3, 0.2, 6);
    for seed in 0..3 {
        let c = CoefficientSet::synthesize(seed, 2, 6, params(), 2.0, 0.3).unwrap();
        let u0 = synth_random_gevrey(seed + 100, 2, params(), 2.0, 6, 1.0).unwrap();
        let cfg = SolverConfig {
            dt: SolverConfig::max_stable_dt(&times, &c, 6),
            t0: 0.2,
            snapshot_times: times.clone(),
            gevrey_radii: vec![],
        };
        let rec = solve(&u0, &c, &cfg).unwrap();
        let k = c.constants;
        assert!(verify_lower_bound(&rec, k.m0, k.m1, rec.q0).pass, "seed {seed}");
    }
}
