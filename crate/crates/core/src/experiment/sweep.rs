//! Parameter sweeps over the time grid and their CSV/JSON artifacts.

use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::config::{CoefficientMode, ExperimentConfig, InitialData};
use super::fit::{fit_log_law, ScalingFit};
use crate::bounds::{
    bisect_m_star, calibrate_c, choose_r, global_bound_from_covering, main_bound, n0, BoundConstants,
    BoundShape, Calibration,
};
use crate::certifier::{certify_on_line, certify_zero_bound, CertificateRow, Segment, CERTIFICATE_CSV_HEADER};
use crate::error::{Error, Result};
use crate::fourier::SpectralField;
use crate::gevrey::{synth_random_gevrey, CoefficientSet, GevreyParams};
use crate::nodal::{measure, NodalMeasurement, ProbePointSet, NODAL_CSV_HEADER};
use crate::solver::{sine_mode, solve, write_diagnostics_csv, SolveRecord, SolverConfig};

/// Unit-modulus coefficients with uniformly random phases on every retained
/// mode; the zero mode is `±1`.
pub fn flat_spectrum(seed: u64, dim: usize, cutoff: usize) -> Result<SpectralField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = SpectralField::zeros(dim, cutoff)?;
    let modes: Vec<_> = f.mode_iter().collect();
    for j in modes {
        if j < [0, 0] {
            continue;
        }
        let c = if j == [0, 0] {
            Complex64::new(if rng.gen::<bool>() { 1.0 } else { -1.0 }, 0.0)
        } else {
            Complex64::from_polar(1.0, rng.gen_range(0.0..2.0 * PI))
        };
        f.set_mode(j, c)?;
    }
    Ok(f)
}

/// Initial datum for one seed.
pub fn initial_field(config: &ExperimentConfig, seed: u64) -> Result<SpectralField> {
    let (d, j) = (config.dim, config.cutoff);
    let half = Complex64::new(0.5, 0.0);
    match config.initial {
        InitialData::Sin3 => sine_mode(d, j, 3),
        InitialData::CosX => SpectralField::from_modes(d, j, &[([1, 0], half)]),
        InitialData::CosSum => {
            if d != 2 {
                return Err(Error::Config("cos_sum needs dim = 2".into()));
            }
            SpectralField::from_modes(d, j, &[([1, 0], half), ([0, 1], half)])
        }
        InitialData::Flat => flat_spectrum(seed ^ 0xF1A7, d, j),
        InitialData::Random => {
            let params = GevreyParams::new(config.beta, config.delta)?;
            synth_random_gevrey(seed ^ 0x5EED, d, params, config.margin, j, 1.0)
        }
    }
}

pub fn coefficients(config: &ExperimentConfig, seed: u64) -> Result<CoefficientSet> {
    let params = GevreyParams::new(config.beta, config.delta)?;
    match config.coefficients {
        CoefficientMode::None => CoefficientSet::zero(config.dim, config.cutoff, params),
        CoefficientMode::Random => CoefficientSet::synthesize(
            seed,
            config.dim,
            config.cutoff,
            params,
            config.margin,
            config.amplitude,
        ),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertificateSummary {
    pub certified: usize,
    pub inconclusive: usize,
    pub max_nstar: Option<usize>,
    pub rows: Vec<CertificateRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub id: usize,
    pub t: f64,
    pub seed: u64,
    pub measurement: NodalMeasurement,
    /// `main_bound(t, β, 1)`.
    pub main_bound_unit: f64,
    pub covering: f64,
    pub r: f64,
    pub n0: u64,
    pub certificates: CertificateSummary,
}

/// Solver output and bound constants of one seed.
#[derive(Clone, Debug, PartialEq)]
pub struct SeedRun {
    pub seed: u64,
    pub record: SolveRecord,
    pub constants: BoundConstants,
    /// `true` when `M` was bisected rather than configured.
    pub m_bisected: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Split {
    pub calibration_t: Option<f64>,
    pub train_ids: Vec<usize>,
    pub test_ids: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub id: usize,
    pub t: f64,
    pub seed: u64,
    pub measured: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitRow {
    pub target: FitTarget,
    pub fit: Option<ScalingFit>,
    pub note: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FitTarget {
    Measurement,
    Bound,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub config_hash: String,
    pub t_grid: Vec<f64>,
    pub runs: Vec<SeedRun>,
    /// Sorted by `(seed, t)`; `rows[i].id == i`.
    pub rows: Vec<SweepRow>,
    pub calibration: Calibration,
    /// Constant used for the verdicts: the override if set, else the calibrated value.
    pub cmain: f64,
    pub split: Split,
    pub verdicts: Vec<Verdict>,
    pub fits: Vec<FitRow>,
}

impl SweepResult {
    pub fn dominance_holds(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }
}

fn tagged(t: f64, seed: u64) -> impl Fn(Error) -> Error {
    move |e| match e {
        e @ Error::Tagged { .. } => e,
        e => Error::Tagged {
            t,
            seed,
            source: Box::new(e),
        },
    }
}

fn certify_snapshot(u: &SpectralField, r: f64, config: &ExperimentConfig) -> Result<CertificateSummary> {
    let mut rows = Vec::new();
    if u.dim() == 1 {
        let probes = ProbePointSet::new([PI, 0.0], r, 1)?;
        for p in &probes.points {
            let out = certify_zero_bound(u, Segment::new(p[0], 2.0 * r)?, config.nmax)?;
            rows.push(CertificateRow::new(*p, 0.0, r, &out));
        }
    } else {
        let probes = ProbePointSet::new([PI, PI], r, 2)?;
        for p in &probes.points {
            for k in 0..config.probe_angles {
                let theta = PI * k as f64 / config.probe_angles as f64;
                let out = certify_on_line(u, *p, theta, r, config.nmax)?;
                rows.push(CertificateRow::new(*p, theta, r, &out));
            }
        }
    }
    let certified = rows.iter().filter(|r| r.nstar.is_some()).count();
    Ok(CertificateSummary {
        certified,
        inconclusive: rows.len() - certified,
        max_nstar: rows.iter().filter_map(|r| r.nstar).max(),
        rows,
    })
}

struct SeedOutput {
    run: SeedRun,
    rows: Vec<SweepRow>,
}

fn run_seed(config: &ExperimentConfig, seed: u64, grid: &[f64]) -> Result<SeedOutput> {
    let t_end = *grid.last().expect("validated grid");
    let coeffs = coefficients(config, seed).map_err(tagged(0.0, seed))?;
    let u0 = initial_field(config, seed).map_err(tagged(0.0, seed))?;
    let dt = config
        .dt
        .min(SolverConfig::max_stable_dt(grid, &coeffs, config.cutoff));
    let solver = SolverConfig {
        dt,
        t0: t_end,
        snapshot_times: grid.to_vec(),
        gevrey_radii: vec![(config.delta, config.beta)],
    };
    let record = solve(&u0, &coeffs, &solver).map_err(tagged(t_end, seed))?;
    let mut bc = BoundConstants::new(record.q0, coeffs.constants, coeffs.params, config.overrides)
        .map_err(tagged(t_end, seed))?;
    let m_bisected = config.overrides.m.is_none();
    if m_bisected {
        bc.m = bisect_m_star(&bc, config.dim, grid).map_err(tagged(t_end, seed))?;
    }
    let mut rows = Vec::with_capacity(grid.len());
    for snap in &record.snapshots {
        let t = snap.t;
        let tag = tagged(t, seed);
        let measurement = measure(&snap.u, t, config.resolution).map_err(&tag)?;
        let r = choose_r(t, bc.beta, bc.m);
        rows.push(SweepRow {
            id: 0,
            t,
            seed,
            measurement,
            main_bound_unit: main_bound(t, bc.beta, 1.0).map_err(&tag)?,
            covering: global_bound_from_covering(t, &bc, config.dim).map_err(&tag)?,
            r,
            n0: n0(t, r, bc.k, config.dim),
            certificates: certify_snapshot(&snap.u, r, config).map_err(&tag)?,
        });
    }
    Ok(SeedOutput {
        run: SeedRun {
            seed,
            record,
            constants: bc,
            m_bisected,
        },
        rows,
    })
}

/// Train ids are the rows whose `t` is in the upper half of the grid (or
/// `t ≥ calibration_t`); the rest are test ids.
fn split_rows(config: &ExperimentConfig, grid: &[f64], rows: &[SweepRow]) -> Split {
    let threshold = config.calibration_t.unwrap_or(grid[grid.len() / 2]);
    let (train, test): (Vec<_>, Vec<_>) = rows.iter().partition(|r| r.t >= threshold);
    Split {
        calibration_t: config.calibration_t,
        train_ids: train.iter().map(|r| r.id).collect(),
        test_ids: test.iter().map(|r| r.id).collect(),
    }
}

/// Pointwise maximum over seeds, one entry per grid time.
fn envelope(grid: &[f64], rows: &[SweepRow], value: impl Fn(&SweepRow) -> f64) -> Vec<(f64, f64)> {
    grid.iter()
        .map(|&t| {
            let y = rows
                .iter()
                .filter(|r| r.t == t)
                .map(&value)
                .fold(f64::NEG_INFINITY, f64::max);
            (t, y)
        })
        .collect()
}

/// Fits the scaling law of the measured nodal size or of the covering bound
/// (both as the maximum over seeds at each `t`).
pub fn fit_scaling(result: &SweepResult, which: FitTarget) -> Result<ScalingFit> {
    let pts = match which {
        FitTarget::Measurement => envelope(&result.t_grid, &result.rows, |r| r.measurement.value),
        FitTarget::Bound => envelope(&result.t_grid, &result.rows, |r| r.covering),
    };
    fit_log_law(&pts)
}

/// Solves once per seed, measures every snapshot, evaluates the bounds,
/// certifies the probe lines, calibrates `Cmain` and records dominance.
/// Seeds run in parallel; the merge is ordered by seed, then by `t`.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepResult> {
    config.validate()?;
    let grid = config.t_grid();
    let mut seeds = config.seeds.clone();
    seeds.sort_unstable();
    seeds.dedup();
    let outputs: Vec<Result<SeedOutput>> = seeds.par_iter().map(|&s| run_seed(config, s, &grid)).collect();
    let mut runs = Vec::with_capacity(outputs.len());
    let mut rows = Vec::new();
    for out in outputs {
        let out = out?;
        runs.push(out.run);
        rows.extend(out.rows);
    }
    for (i, r) in rows.iter_mut().enumerate() {
        r.id = i;
    }
    let split = split_rows(config, &grid, &rows);
    let pairs: Vec<(f64, f64)> = split
        .train_ids
        .iter()
        .map(|&i| (rows[i].t, rows[i].measurement.value))
        .collect();
    let calibration = calibrate_c(&pairs, BoundShape::MainBound { beta: config.beta })?;
    let cmain = config.overrides.cmain.unwrap_or(calibration.value);
    let verdicts = split
        .test_ids
        .iter()
        .map(|&i| {
            let r = &rows[i];
            let bound = cmain * r.main_bound_unit;
            Verdict {
                id: i,
                t: r.t,
                seed: r.seed,
                measured: r.measurement.value,
                bound,
                pass: r.measurement.value <= bound,
            }
        })
        .collect();
    let mut result = SweepResult {
        config_hash: config.content_hash(),
        t_grid: grid,
        runs,
        rows,
        calibration,
        cmain,
        split,
        verdicts,
        fits: Vec::new(),
    };
    result.fits = [FitTarget::Measurement, FitTarget::Bound]
        .into_iter()
        .map(|target| match fit_scaling(&result, target) {
            Ok(fit) => FitRow {
                target,
                fit: Some(fit),
                note: None,
            },
            Err(e) => FitRow {
                target,
                fit: None,
                note: Some(e.to_string()),
            },
        })
        .collect();
    Ok(result)
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    fs::File::create(dir.join(name))?.write_all(bytes)?;
    Ok(())
}

fn json_bytes(v: &serde_json::Value) -> Result<Vec<u8>> {
    let mut s = serde_json::to_vec_pretty(v).map_err(|e| Error::Io(e.to_string()))?;
    s.push(b'\n');
    Ok(s)
}

/// `diagnostics.csv` for all seeds, with `seed` and `config_hash` columns.
pub fn diagnostics_csv(result: &SweepResult) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for (i, run) in result.runs.iter().enumerate() {
        let mut buf = Vec::new();
        let extra = [("seed", run.seed.to_string()), ("config_hash", result.config_hash.clone())];
        write_diagnostics_csv(&run.record, &extra, &mut buf)?;
        let skip = if i == 0 {
            0
        } else {
            buf.iter().position(|&b| b == b'\n').map_or(buf.len(), |p| p + 1)
        };
        out.extend_from_slice(&buf[skip..]);
    }
    Ok(out)
}

pub fn nodal_csv(result: &SweepResult) -> Vec<u8> {
    let mut s = format!("{NODAL_CSV_HEADER},seed,config_hash\n");
    for r in &result.rows {
        s.push_str(&format!("{},{},{}\n", r.measurement.csv_row(), r.seed, result.config_hash));
    }
    s.into_bytes()
}

pub fn certificates_csv(result: &SweepResult) -> Vec<u8> {
    let mut s = format!("{CERTIFICATE_CSV_HEADER},t,seed,config_hash\n");
    for r in &result.rows {
        for c in &r.certificates.rows {
            s.push_str(&format!("{},{:.16e},{},{}\n", c.csv_row(), r.t, r.seed, result.config_hash));
        }
    }
    s.into_bytes()
}

pub fn bounds_json(result: &SweepResult) -> serde_json::Value {
    let constants: Vec<_> = result
        .runs
        .iter()
        .map(|run| json!({ "seed": run.seed, "m_bisected": run.m_bisected, "constants": run.constants }))
        .collect();
    let rows: Vec<_> = result
        .rows
        .iter()
        .map(|r| {
            let main = result.cmain * r.main_bound_unit;
            json!({
                "id": r.id,
                "t": r.t,
                "seed": r.seed,
                "r": r.r,
                "n0": r.n0,
                "main_bound_unit": r.main_bound_unit,
                "main_bound": main,
                "covering": r.covering,
                "covering_over_main_unit": r.covering / r.main_bound_unit,
                "config_hash": result.config_hash,
            })
        })
        .collect();
    json!({
        "config_hash": result.config_hash,
        "constants": constants,
        "calibration": {
            "value": result.calibration.value,
            "degenerate": result.calibration.degenerate,
            "shape": result.calibration.shape,
            "binding_id": result.split.train_ids.get(result.calibration.binding),
            "train_ids": result.split.train_ids,
        },
        "cmain": result.cmain,
        "rows": rows,
    })
}

pub fn report_json(config: &ExperimentConfig, result: &SweepResult) -> serde_json::Value {
    let dts: Vec<_> = result
        .runs
        .iter()
        .map(|r| json!({ "seed": r.seed, "dt": r.record.dt, "q0": r.record.q0 }))
        .collect();
    json!({
        "config_hash": result.config_hash,
        "config": config,
        "t_grid": result.t_grid,
        "solves": dts,
        "split": result.split,
        "cmain": result.cmain,
        "verdicts": result.verdicts,
        "dominance": result.dominance_holds(),
        "fits": result.fits,
        "errors": Vec::<String>::new(),
        "pass": result.dominance_holds(),
    })
}

/// Writes the five sweep artifacts into `dir`, creating it if needed.
pub fn write_outputs(config: &ExperimentConfig, result: &SweepResult, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_file(dir, "diagnostics.csv", &diagnostics_csv(result)?)?;
    write_file(dir, "nodal.csv", &nodal_csv(result))?;
    write_file(dir, "certificates.csv", &certificates_csv(result))?;
    write_file(dir, "bounds.json", &json_bytes(&bounds_json(result))?)?;
    write_file(dir, "report.json", &json_bytes(&report_json(config, result))?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::t_max;

    fn heat_config(initial: InitialData, dim: usize) -> ExperimentConfig {
        ExperimentConfig {
            seeds: vec![7],
            dim,
            cutoff: 4,
            coefficients: CoefficientMode::None,
            initial,
            t_min: 1e-2,
            points_per_decade: 4,
            dt: 1e-2,
            resolution: 256,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn sin3_counts_six_and_calibrates() {
        let cfg = heat_config(InitialData::Sin3, 1);
        let res = run_sweep(&cfg).unwrap();
        assert!(res.rows.iter().all(|r| r.measurement.value == 6.0));
        assert!((res.calibration.value - 6.0 * t_max()).abs() < 1e-12);
        assert!(res.dominance_holds());
        assert!(!res.split.train_ids.is_empty() && !res.split.test_ids.is_empty());
        for v in &res.verdicts {
            assert!(!res.split.train_ids.contains(&v.id));
        }
    }

    #[test]
    fn cos_x_length_is_4pi() {
        let cfg = heat_config(InitialData::CosX, 2);
        let res = run_sweep(&cfg).unwrap();
        for r in &res.rows {
            assert!((r.measurement.value / (4.0 * PI) - 1.0).abs() < 5e-3);
        }
        assert!(res.calibration.value <= 4.0 * PI * t_max() * (1.0 + 5e-3));
        assert!(res.dominance_holds());
    }

    #[test]
    fn empty_grid_is_config_error() {
        let mut cfg = heat_config(InitialData::Sin3, 1);
        cfg.t_min = 0.5;
        assert!(matches!(run_sweep(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn errors_carry_tag() {
        let mut cfg = heat_config(InitialData::Sin3, 1);
        cfg.cutoff = 2;
        match run_sweep(&cfg) {
            Err(Error::Tagged { seed: 7, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn flat_spectrum_is_unit_modulus() {
        let f = flat_spectrum(3, 2, 5).unwrap();
        assert!(f.modes().all(|(_, c)| (c.norm() - 1.0).abs() < 1e-14));
    }
}
