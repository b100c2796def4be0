//! Every bound formula against a second, independently written evaluation
//! (log-domain products, different association order) on random inputs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nodal_lab::bounds::{
    beta_mu, choose_r, eq50_upper, global_bound_from_covering, main_bound, mu_closed_form, n0,
    necessary_condition_lhs, observability_exponent, t_max, BoundConstants, ConstantOverrides, MuContext,
};
use nodal_lab::gevrey::{CertifiedConstants, GevreyParams};

const TOL: f64 = 1e-12;

fn close(a: f64, b: f64, scale: f64) -> bool {
    (a - b).abs() <= TOL * scale.max(a.abs()).max(1.0)
}

struct Draw {
    t: f64,
    beta: f64,
    m: f64,
    bc: BoundConstants,
}

fn draw(rng: &mut ChaCha8Rng) -> Draw {
    let beta = [0.5, 0.75, 1.0, rng.gen_range(0.3..1.0)][rng.gen_range(0..4)];
    let t = (rng.gen_range((1e-4f64).ln()..t_max().ln())).exp();
    let certified = CertifiedConstants {
        m0: rng.gen_range(0.0..5.0),
        m1: rng.gen_range(1.0..5.0),
        kv: rng.gen_range(0.0..10.0),
        kw: rng.gen_range(0.0..10.0),
    };
    let params = GevreyParams::new(beta, rng.gen_range(0.01..1.0)).unwrap();
    let m = rng.gen_range(1.0f64..1e6);
    let overrides = ConstantOverrides {
        k: Some(rng.gen_range(0.0..3.0)),
        m: Some(m),
        c0: Some(rng.gen_range(1.1..5.0)),
        ..Default::default()
    };
    let bc = BoundConstants::new(rng.gen_range(0.0..50.0), certified, params, overrides).unwrap();
    Draw { t, beta, m, bc }
}

fn main_bound_2(t: f64, beta: f64, c: f64) -> f64 {
    let l = -t.ln();
    (c.ln() - t.ln() / beta + (2.0 / beta - 2.0) * l.ln()).exp()
}

fn choose_r_2(t: f64, beta: f64, m: f64) -> f64 {
    let p = (1.0 - beta) / beta;
    let l = -t.ln();
    f64::min((p * (t.ln() - l.ln()) - m.ln()).exp(), 0.5)
}

fn n0_2(t: f64, r: f64, k: f64, d: usize) -> f64 {
    ((k * k) * 2.0 * (-r.ln())) / t + (2 * d + 1) as f64
}

/// Returns the value and the sum of absolute term sizes.
fn lhs_2(n: f64, r: f64, t: f64, bc: &BoundConstants, d: f64) -> (f64, f64) {
    let b = bc.beta;
    let terms = [
        bc.c0.ln() * n,
        bc.c0.ln() * (bc.k * bc.k) * (-r.ln()) / t,
        bc.c0.ln() * t * bc.c1,
        bc.c0.ln() * bc.c2 * (-(b / (2.0 - b)) * t.ln()).exp(),
        r.ln() * n + r.ln() * d * 0.5,
        -n.ln() * 0.5 - n.ln() * n,
        -bc.c3.ln() * n,
        (n + 2.0 * d).ln() * (n + 2.0 * d) / b,
    ];
    (terms.iter().rev().sum(), terms.iter().map(|x| x.abs()).sum())
}

fn eq50_2(n0: f64, r: f64, t: f64, bc: &BoundConstants, d: f64) -> (f64, f64) {
    let b = bc.beta;
    let log_inner = 2.0 * bc.c0.ln() + r.ln() + 2f64.ln() / b + (1.0 / b - 1.0) * n0.ln() - bc.c3.ln();
    let terms = [
        bc.c0.ln() * (bc.c1 * t),
        bc.c0.ln() * bc.c2 * t.powf(-b / (2.0 - b)),
        log_inner * n0,
        (2.0 * d / b) * (2f64.ln() + n0.ln()),
    ];
    (terms.iter().rev().sum(), terms.iter().map(|x| x.abs()).sum())
}

fn beta_mu_2(mu: f64, t: f64, c: MuContext) -> (f64, f64) {
    let inv_t = t.recip();
    let inv_sq = t.powf(-0.5);
    let a = inv_sq + inv_t + c.m0 * c.m0 * t * t + c.m1 * c.m1 * (1.0 + t) + c.q0 * t;
    let b = inv_sq + inv_t + t * c.m0 + c.m1 * (c.m1 * t + t.sqrt());
    let log_part = a * (t.ln() - 2.0 * mu.ln());
    (c.c * (log_part + b), c.c * (log_part.abs() + b.abs()))
}

#[test]
fn independent_paths_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..500 {
        let Draw { t, beta, m, bc } = draw(&mut rng);
        let d = rng.gen_range(1..=2usize);
        let c = rng.gen_range(0.1..10.0);
        assert!(close(main_bound(t, beta, c).unwrap(), main_bound_2(t, beta, c), 0.0));

        let r = choose_r(t, beta, m);
        assert!(close(r, choose_r_2(t, beta, m), 0.0), "r at t={t}, β={beta}, M={m}");

        let raw = n0_2(t, r, bc.k, d);
        if (raw - raw.round()).abs() > 1e-9 {
            assert_eq!(n0(t, r, bc.k, d), raw.floor() as u64);
        }

        let n = rng.gen_range(1..5000u64);
        let (v, scale) = lhs_2(n as f64, r, t, &bc, d as f64);
        assert!(close(necessary_condition_lhs(n, r, t, &bc, d), v, scale));

        let (v, scale) = eq50_2(n as f64, r, t, &bc, d as f64);
        assert!(close(eq50_upper(n, r, t, &bc, d), v, scale));

        let cov = global_bound_from_covering(t, &bc, d).unwrap();
        assert!(close(cov, n0(t, r, bc.k, d) as f64 / choose_r_2(t, beta, m), 0.0));

        let mu0 = rng.gen_range(0.01..=0.5);
        assert!(close(observability_exponent(mu0, t, bc.k), -(bc.k * bc.k) * mu0.ln() / t, 0.0));
        let mu = mu_closed_form(t, mu0, bc.k.max(0.1));
        let expect = (mu0.ln() + 0.5 * (t.ln() - 2f64.ln()) - bc.k.max(0.1).ln() - 0.5 * (-mu0.ln()).ln()).exp();
        assert!(close(mu, expect, 0.0));

        let ctx = MuContext {
            q0: bc.q0,
            m0: bc.m0,
            m1: bc.m1,
            c: rng.gen_range(0.1..3.0),
        };
        let mu = rng.gen_range(1e-4..0.2);
        let a = beta_mu(mu, t, ctx);
        let (b, scale) = beta_mu_2(mu, t, ctx);
        assert!(close(a, b, scale), "β(μ) {a} vs {b}");
    }
}

#[test]
fn eq50_dominates_lhs_at_n0() {
    // Paired evaluation on 20 random parameter draws.
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let Draw { t, beta, m, bc } = draw(&mut rng);
        let d = rng.gen_range(1..=2usize);
        let r = choose_r(t, beta, m);
        let n = n0(t, r, bc.k, d);
        let lhs = necessary_condition_lhs(n, r, t, &bc, d);
        let upper = eq50_upper(n, r, t, &bc, d);
        assert!(upper >= lhs - 1e-9 * lhs.abs().max(1.0), "t={t} β={beta}: {upper} < {lhs}");
    }
}
