//! Self-verification suite: each item is a small experiment with a known answer.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use super::config::ExperimentConfig;
use super::fit::fit_power;
use super::sweep::flat_spectrum;
use crate::bounds::{log_grid, stirling_c3_check, stirling_holds, DEFAULT_C3, STIRLING_NMAX};
use crate::certifier::{certify_zero_bound, Segment, DEFAULT_NMAX};
use crate::error::Result;
use crate::fourier::SpectralField;
use crate::gevrey::{synth_random_gevrey, CoefficientSet, GevreyParams};
use crate::nodal::{max_line_intersections, NodalCurve2D, Point, ProbePointSet};
use crate::solver::{
    heat_semigroup_gevrey_max, log_gevrey_norm, sine_mode, solve, verify_lower_bound,
    SolverConfig,
};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyItem {
    pub name: String,
    pub pass: bool,
    pub detail: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub config_hash: String,
    pub items: Vec<VerifyItem>,
    pub pass: bool,
}

impl VerifyReport {
    pub fn item(&self, name: &str) -> Option<&VerifyItem> {
        self.items.iter().find(|i| i.name == name)
    }
}

fn item(name: &str, outcome: Result<(bool, Value)>) -> VerifyItem {
    let (pass, detail) = outcome.unwrap_or_else(|e| (false, json!({ "error": e.to_string() })));
    VerifyItem {
        name: name.into(),
        pass,
        detail,
    }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

/// `sin 3x` under pure heat flow and under `u_t = Δu + u`, both at `t = 0.1`
/// with step `dt`.
pub fn heat_exactness(dt: f64) -> Result<(bool, Value)> {
    let params = GevreyParams::new(1.0, 0.1)?;
    let u0 = sine_mode(1, 4, 3)?;
    let cfg = SolverConfig {
        dt,
        t0: 0.1,
        snapshot_times: vec![0.1],
        gevrey_radii: vec![],
    };
    let heat = solve(&u0, &CoefficientSet::zero(1, 4, params)?, &cfg)?;
    let expect = PI.sqrt() * (-0.9f64).exp();
    let heat_err = rel(heat.snapshots[0].l2, expect);

    let v = SpectralField::constant(1, 4, 1.0)?;
    let w = vec![SpectralField::zeros(1, 4)?];
    let pot = solve(&u0, &CoefficientSet::certify(v, w, params)?, &cfg)?;
    let exact = u0.scaled((-0.8f64).exp());
    let diff = pot.snapshots[0].u.axpy(-1.0, &exact)?;
    let pot_err = diff.l2_norm() / exact.l2_norm();
    let pass = heat_err <= 1e-10 && pot_err <= 1e-8;
    Ok((
        pass,
        json!({ "dt": dt, "heat_rel_error": heat_err, "potential_rel_error": pot_err }),
    ))
}

/// Lower bound `‖u(t)‖² ≥ e^{-2t(M1+M0+q0)} ‖u0‖²` across random coefficient seeds.
pub fn lower_bound_scan(config: &ExperimentConfig, seeds: &[u64]) -> Result<(bool, Value)> {
    let params = GevreyParams::new(config.beta, config.delta)?;
    let cutoff = config.cutoff.min(16);
    let times = log_grid(1e-3, 0.3, 8);
    let mut worst = f64::INFINITY;
    let mut failed = Vec::new();
    for &seed in seeds {
        let coeffs = CoefficientSet::synthesize(seed, config.dim, cutoff, params, config.margin, config.amplitude)?;
        let u0 = synth_random_gevrey(seed ^ 0x5EED, config.dim, params, config.margin, cutoff, 1.0)?;
        let cfg = SolverConfig {
            dt: SolverConfig::max_stable_dt(&times, &coeffs, cutoff),
            t0: 0.3,
            snapshot_times: times.clone(),
            gevrey_radii: vec![],
        };
        let rec = solve(&u0, &coeffs, &cfg)?;
        let c = coeffs.constants;
        let rep = verify_lower_bound(&rec, c.m0, c.m1, rec.q0);
        worst = rep.rows.iter().map(|r| r.margin).fold(worst, f64::min);
        if !rep.pass {
            failed.push(seed);
        }
    }
    Ok((
        failed.is_empty(),
        json!({ "seeds": seeds.len(), "failed_seeds": failed, "min_margin": worst }),
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GevreyShapeRow {
    pub t: f64,
    pub g: f64,
    pub oracle: f64,
}

/// Pure heat from a flat spectrum: measured `g(t) = log(‖e^{δA^{1/2}}u‖/‖u‖)`
/// against `max_j (δ j - t j²)`, plus the fitted power of `1/t`.
pub fn gevrey_shape(seed: u64, cutoff: usize, delta: f64, times: &[f64]) -> Result<(Vec<GevreyShapeRow>, f64)> {
    let params = GevreyParams::new(1.0, delta)?;
    let u0 = flat_spectrum(seed, 1, cutoff)?;
    let heat = CoefficientSet::zero(1, cutoff, params)?;
    let cfg = SolverConfig {
        dt: SolverConfig::max_stable_dt(times, &heat, cutoff),
        t0: *times.last().expect("nonempty"),
        snapshot_times: times.to_vec(),
        gevrey_radii: vec![(delta, 1.0)],
    };
    let rec = solve(&u0, &heat, &cfg)?;
    let rows: Vec<_> = rec
        .snapshots
        .iter()
        .map(|s| GevreyShapeRow {
            t: s.t,
            g: log_gevrey_norm(&s.u, delta, 1.0).unwrap_or(f64::INFINITY) - s.l2.ln(),
            oracle: heat_semigroup_gevrey_max(s.t, delta, 1.0, cutoff),
        })
        .collect();
    let slope = fit_power(&rows.iter().map(|r| (r.t, r.g)).collect::<Vec<_>>())?.a;
    Ok((rows, slope))
}

fn gevrey_item(seed: u64) -> Result<(bool, Value)> {
    let cutoff = 64;
    let times = log_grid(1e-3, 0.1, 9);
    let (rows, slope) = gevrey_shape(seed, cutoff, 0.1, &times)?;
    let slack = (4.0 * cutoff as f64 + 1.0).ln();
    let worst = rows.iter().map(|r| (r.g - r.oracle).abs()).fold(0.0, f64::max);
    Ok((
        worst <= slack,
        json!({ "max_oracle_gap": worst, "slack": slack, "fitted_power": slope, "rows": rows }),
    ))
}

/// `k` pairwise disjoint chords of the circle of radius `radius` about
/// `center`: a uniformly shuffled balanced bracket word matches `2k` sorted
/// random angles without crossings.
pub fn chord_ensemble(seed: u64, k: usize, center: Point, radius: f64) -> Vec<[Point; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut angles: Vec<f64> = (0..2 * k).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
    angles.sort_by(f64::total_cmp);
    let mut word: Vec<i32> = (0..2 * k).map(|i| if i < k { 1 } else { -1 }).collect();
    word.shuffle(&mut rng);
    // Cycle lemma: rotating to start just after the minimal prefix sum balances the word.
    let (mut sum, mut min, mut at) = (0, 0, 0);
    for (i, &s) in word.iter().enumerate() {
        sum += s;
        if sum < min {
            min = sum;
            at = i + 1;
        }
    }
    let len = word.len().max(1);
    word.rotate_left(at % len);
    let point = |a: f64| [center[0] + radius * a.cos(), center[1] + radius * a.sin()];
    let mut stack = Vec::new();
    let mut chords = Vec::with_capacity(k);
    for (i, &s) in word.iter().enumerate() {
        let idx = (i + at) % len;
        if s == 1 {
            stack.push(idx);
        } else {
            let open = stack.pop().expect("balanced word");
            chords.push([point(angles[open]), point(angles[idx])]);
        }
    }
    chords
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChordSample {
    pub seed: u64,
    pub chords: usize,
    pub length: f64,
    pub n_sampled: usize,
}

/// Ensemble `i` uses seed `base + i` and `1 + (seed mod 50)` chords of `B_2`
/// about `(π, π)`; `n_sampled` uses the probe set of radius 1 and `angles` directions.
pub fn chord_samples(base: u64, count: usize, angles: usize) -> Result<Vec<ChordSample>> {
    let center = [PI, PI];
    let probes = ProbePointSet::new(center, 1.0, 2)?;
    (0..count as u64)
        .map(|i| {
            let seed = base + i;
            let k = 1 + (seed % 50) as usize;
            let curve = NodalCurve2D::from_segments(chord_ensemble(seed, k, center, 2.0));
            Ok(ChordSample {
                seed,
                chords: k,
                length: curve.total_length,
                n_sampled: max_line_intersections(&curve, &probes, angles)?,
            })
        })
        .collect()
}

/// Calibrates `C` in `length ≤ C n_sampled` on `train`; counts violations on `test`.
pub fn l03_calibrate(train: &[ChordSample], test: &[ChordSample]) -> (f64, usize) {
    let c = train
        .iter()
        .map(|s| s.length / s.n_sampled as f64)
        .fold(0.0, f64::max);
    let violations = test.iter().filter(|s| s.length > c * s.n_sampled as f64).count();
    (c, violations)
}

fn l03_item(seed: u64) -> Result<(bool, Value)> {
    let samples = chord_samples(seed.wrapping_mul(1000), 40, 256)?;
    let (train, test) = samples.split_at(20);
    let (c, violations) = l03_calibrate(train, test);
    Ok((
        violations == 0 && c.is_finite(),
        json!({ "ensembles": samples.len(), "c": c, "violations": violations }),
    ))
}

fn stirling_item() -> Result<(bool, Value)> {
    let c300 = stirling_c3_check(STIRLING_NMAX)?;
    let c100 = stirling_c3_check(100)?;
    let c30 = stirling_c3_check(30)?;
    let default_ok = stirling_holds(DEFAULT_C3, STIRLING_NMAX);
    let monotone = c30 >= c100 && c100 >= c300;
    Ok((
        default_ok && monotone,
        json!({
            "c3_max_300": c300,
            "c3_max_100": c100,
            "c3_max_30": c30,
            "default_c3": DEFAULT_C3,
            "default_c3_holds": default_ok,
            "in_interval_0367_0368": c300 > 0.367 && c300 < 0.368,
        }),
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertifierScan {
    pub pairs: usize,
    pub certified: usize,
    pub violations: usize,
    pub median_ratio: f64,
    pub max_nstar: usize,
}

/// Sign changes of `f` on `m + 1` equispaced points of the segment.
pub fn dense_zero_count(f: &SpectralField, seg: Segment, m: usize) -> usize {
    let mut count = 0;
    let mut prev = f.eval(&[seg.start()]);
    for k in 1..=m {
        let x = seg.start() + seg.length() * k as f64 / m as f64;
        let v = f.eval(&[x]);
        if (prev < 0.0 && v >= 0.0) || (prev > 0.0 && v <= 0.0) || prev == 0.0 {
            count += 1;
        }
        prev = v;
    }
    count
}

/// Random 1D fields (`J ≤ 32`, alternately flat and Gevrey-decaying) on random
/// segments of length at most 1; a violation is a dense-scan count `≥ n*`.
pub fn certifier_scan(seed: u64, pairs: usize) -> Result<CertifierScan> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = GevreyParams::new(1.0, 0.1)?;
    let mut ratios = Vec::with_capacity(pairs);
    let (mut certified, mut violations, mut max_nstar) = (0, 0, 0);
    for i in 0..pairs {
        let cutoff = rng.gen_range(1..=32);
        let fseed: u64 = rng.gen();
        let f = if i % 2 == 0 {
            flat_spectrum(fseed, 1, cutoff)?
        } else {
            synth_random_gevrey(fseed, 1, params, 1.5, cutoff, 1.0)?
        };
        let seg = Segment::new(rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.005..=0.5))?;
        let Some(n) = certify_zero_bound(&f, seg, DEFAULT_NMAX)?.nstar() else {
            continue;
        };
        certified += 1;
        max_nstar = max_nstar.max(n);
        let zeros = dense_zero_count(&f, seg, 4000);
        if zeros >= n {
            violations += 1;
        }
        ratios.push(n as f64 / (zeros + 1) as f64);
    }
    ratios.sort_by(f64::total_cmp);
    let median_ratio = if ratios.is_empty() {
        f64::NAN
    } else {
        ratios[ratios.len() / 2]
    };
    Ok(CertifierScan {
        pairs,
        certified,
        violations,
        median_ratio,
        max_nstar,
    })
}

fn certifier_item(seed: u64) -> Result<(bool, Value)> {
    let scan = certifier_scan(seed, 200)?;
    let pass = scan.violations == 0 && scan.certified == scan.pairs && scan.median_ratio <= 8.0;
    Ok((pass, serde_json::to_value(&scan).expect("plain data")))
}

/// Runs every item; failures are data, never errors.
pub fn verify_suite(config: &ExperimentConfig) -> VerifyReport {
    let seed = config.seeds.first().copied().unwrap_or(0);
    let seeds: Vec<u64> = (0..5).map(|k| seed.wrapping_add(k)).collect();
    let items = vec![
        item("heat_exactness", heat_exactness(config.dt)),
        item("lower_bound", lower_bound_scan(config, &seeds)),
        item("gevrey_smoothing", gevrey_item(seed)),
        item("l03_chords", l03_item(seed)),
        item("stirling", stirling_item()),
        item("certifier_soundness", certifier_item(seed)),
    ];
    let pass = items.iter().all(|i| i.pass);
    VerifyReport {
        config_hash: config.content_hash(),
        items,
        pass,
    }
}
