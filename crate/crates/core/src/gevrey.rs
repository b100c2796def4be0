//! Gevrey-regular coefficient fields `v`, `w` and their certified constants.

use std::f64::consts::PI;
use std::fs;
use std::io::BufReader;
use std::path::Path;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fourier::{check_gevrey_args, gevrey_exponent, mode_norm, mode_norm_sq, SpectralField, LOG_CAP};

/// Gevrey parameters: `β ∈ (0, 1]` is the inverse Gevrey exponent, `δ > 0` the radius.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GevreyParams {
    pub beta: f64,
    pub delta: f64,
}

impl GevreyParams {
    pub fn new(beta: f64, delta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(invalid(format!("β must lie in (0, 1], got {beta}")));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(invalid(format!("δ must be positive, got {delta}")));
        }
        Ok(Self { beta, delta })
    }
}

/// Certified constants of a coefficient pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifiedConstants {
    pub m0: f64,
    pub m1: f64,
    pub kv: f64,
    pub kw: f64,
}

/// Coefficients `(v, w)` of `u_t - Δu = w·∇u + vu` with their certificates.
/// Coefficients are time independent, so the sup over the time interval is the
/// single-time value.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientSet {
    pub v: SpectralField,
    pub w: Vec<SpectralField>,
    pub params: GevreyParams,
    pub constants: CertifiedConstants,
    pub time_independent: bool,
}

impl CoefficientSet {
    pub fn certify(v: SpectralField, w: Vec<SpectralField>, params: GevreyParams) -> Result<Self> {
        let constants = certify_constants(&v, &w, params)?;
        Ok(Self {
            v,
            w,
            params,
            constants,
            time_independent: true,
        })
    }

    /// `v = 0`, `w = 0` (pure heat equation).
    pub fn zero(dim: usize, cutoff: usize, params: GevreyParams) -> Result<Self> {
        let v = SpectralField::zeros(dim, cutoff)?;
        let w = vec![v.clone(); dim];
        Self::certify(v, w, params)
    }

    /// Random `v` and `w` drawn with [`synth_random_gevrey`] from seeds derived from `seed`.
    pub fn synthesize(
        seed: u64,
        dim: usize,
        cutoff: usize,
        params: GevreyParams,
        margin: f64,
        amplitude: f64,
    ) -> Result<Self> {
        let v = synth_random_gevrey(seed, dim, params, margin, cutoff, amplitude)?;
        let w = (0..dim)
            .map(|k| {
                synth_random_gevrey(
                    seed.wrapping_mul(0x9E37_79B9).wrapping_add(k as u64 + 1),
                    dim,
                    params,
                    margin,
                    cutoff,
                    amplitude,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Self::certify(v, w, params)
    }

    pub fn dim(&self) -> usize {
        self.v.dim()
    }

    pub fn has_no_terms(&self) -> bool {
        self.v.is_zero() && self.w.iter().all(|f| f.is_zero())
    }

    /// Writes `v.snap`, `w<k>.snap` and `manifest.txt` into `dir`.
    pub fn write_bundle(&self, dir: &Path, seed: Option<u64>) -> Result<()> {
        fs::create_dir_all(dir)?;
        self.v.write_snapshot(0.0, fs::File::create(dir.join("v.snap"))?)?;
        for (k, wk) in self.w.iter().enumerate() {
            wk.write_snapshot(0.0, fs::File::create(dir.join(format!("w{k}.snap")))?)?;
        }
        let c = &self.constants;
        let mut manifest = format!(
            "beta={:.16e}\ndelta={:.16e}\nM0={:.16e}\nM1={:.16e}\nKv={:.16e}\nKw={:.16e}\n",
            self.params.beta, self.params.delta, c.m0, c.m1, c.kv, c.kw
        );
        if let Some(s) = seed {
            manifest.push_str(&format!("seed={s}\n"));
        }
        fs::write(dir.join("manifest.txt"), manifest)?;
        Ok(())
    }

    /// Reads a bundle written by [`CoefficientSet::write_bundle`] and re-certifies it.
    pub fn read_bundle(dir: &Path) -> Result<Self> {
        let manifest = fs::read_to_string(dir.join("manifest.txt"))?;
        let mut beta = None;
        let mut delta = None;
        for (i, line) in manifest.lines().enumerate() {
            if let Some((k, val)) = line.split_once('=') {
                let parse = |s: &str| {
                    s.trim().parse::<f64>().map_err(|e| Error::Parse {
                        line: i + 1,
                        msg: e.to_string(),
                    })
                };
                match k.trim() {
                    "beta" => beta = Some(parse(val)?),
                    "delta" => delta = Some(parse(val)?),
                    _ => {}
                }
            }
        }
        let params = GevreyParams::new(
            beta.ok_or_else(|| invalid("manifest lacks beta"))?,
            delta.ok_or_else(|| invalid("manifest lacks delta"))?,
        )?;
        let read = |name: &str| -> Result<SpectralField> {
            let f = fs::File::open(dir.join(name))?;
            Ok(SpectralField::read_snapshot(BufReader::new(f))?.0)
        };
        let v = read("v.snap")?;
        let w = (0..v.dim())
            .map(|k| read(&format!("w{k}.snap")))
            .collect::<Result<Vec<_>>>()?;
        Self::certify(v, w, params)
    }
}

/// Random field with coefficients `g_j · amplitude · e^{-margin δ |j|^β}`, `g_j`
/// standard complex Gaussian (`E|g_j|² = 1`, real at `j = 0`), Hermitian symmetric.
/// Deterministic in `seed`.
pub fn synth_random_gevrey(
    seed: u64,
    dim: usize,
    params: GevreyParams,
    margin: f64,
    cutoff: usize,
    amplitude: f64,
) -> Result<SpectralField> {
    if !(margin > 1.0) {
        return Err(invalid(format!("margin must exceed 1, got {margin}")));
    }
    let budget = margin * params.delta * (cutoff as f64).powf(params.beta);
    if budget > LOG_CAP {
        return Err(Error::Overflow {
            mode: [cutoff as i64, 0],
            exponent: budget,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = SpectralField::zeros(dim, cutoff)?;
    let modes: Vec<_> = f.mode_iter().collect();
    let half = std::f64::consts::FRAC_1_SQRT_2;
    for j in modes {
        // Lexicographically negative modes are set through their partner.
        if j < [0, 0] {
            continue;
        }
        let decay = amplitude * (-margin * gevrey_exponent(params.delta, params.beta, j)).exp();
        let a: f64 = StandardNormal.sample(&mut rng);
        let b: f64 = StandardNormal.sample(&mut rng);
        let g = if j == [0, 0] {
            Complex64::new(a, 0.0)
        } else {
            Complex64::new(a * half, b * half)
        };
        f.set_mode(j, g * decay)?;
    }
    Ok(f)
}

/// Rigorous upper bound on `sup |f|`: the grid maximum on an `8J` grid plus the
/// second-order Taylor gap between grid points, capped by the `ℓ¹` bound.
pub fn certified_sup(f: &SpectralField) -> Result<f64> {
    let l1 = f.sobolev_linf_bound();
    if f.is_zero() {
        return Ok(0.0);
    }
    let n = (8 * f.cutoff()).max(crate::fourier::min_resolution(f.cutoff()));
    let grid_max = f.to_grid(n)?.max_abs();
    let hessian: f64 = f.modes().map(|(j, c)| mode_norm_sq(j) * c.norm()).sum();
    let gap = 0.5 * f.dim() as f64 * (PI / n as f64).powi(2) * hessian;
    Ok(l1.min(grid_max + gap))
}

fn log_kweight(dim: usize, params: GevreyParams, j: crate::fourier::Mode) -> f64 {
    let s = mode_norm(j);
    (s.powi(2 * dim as i32) + 1.0).ln() + gevrey_exponent(params.delta, params.beta, j)
}

fn check_in_class(f: &SpectralField, params: GevreyParams) -> Result<()> {
    for (j, c) in f.modes() {
        if c.norm() == 0.0 {
            continue;
        }
        let e = gevrey_exponent(params.delta, params.beta, j);
        if e > LOG_CAP {
            return Err(Error::NotInClass {
                delta: params.delta,
                reason: format!("exponent {e:.1} at mode {j:?}"),
            });
        }
    }
    Ok(())
}

/// `log ‖(A^d + I) e^{δ A^{β/2}} f‖_{L²}`.
pub fn log_k_norm(f: &SpectralField, params: GevreyParams) -> Result<f64> {
    check_gevrey_args(params.delta, params.beta)?;
    check_in_class(f, params)?;
    Ok(f.log_weighted_norm(|j| log_kweight(f.dim(), params, j)))
}

/// Certifies `M0`, `M1` (both clamped to at least 1), `Kv` and `Kw`.
pub fn certify_constants(
    v: &SpectralField,
    w: &[SpectralField],
    params: GevreyParams,
) -> Result<CertifiedConstants> {
    let dim = v.dim();
    if w.len() != dim {
        return Err(Error::DimMismatch {
            left: dim,
            right: w.len(),
        });
    }
    for wk in w {
        if wk.dim() != dim {
            return Err(Error::DimMismatch {
                left: dim,
                right: wk.dim(),
            });
        }
    }
    let m0 = certified_sup(v)?.max(1.0);

    let mut w_sq = 0.0;
    let mut dw_sq = 0.0;
    for wk in w {
        w_sq += certified_sup(wk)?.powi(2);
        for d in wk.gradient() {
            dw_sq += certified_sup(&d)?.powi(2);
        }
    }
    let m1 = (w_sq.sqrt() + dw_sq.sqrt()).max(1.0);

    let kv = log_k_norm(v, params)?.exp();
    let mut kw_sq = 0.0;
    for wk in w {
        kw_sq += (2.0 * log_k_norm(wk, params)?).exp();
    }
    let kw = kw_sq.sqrt();
    for (name, val) in [("Kv", kv), ("Kw", kw)] {
        if !val.is_finite() {
            return Err(Error::NotInClass {
                delta: params.delta,
                reason: format!("{name} is not finite"),
            });
        }
    }
    Ok(CertifiedConstants { m0, m1, kv, kw })
}

/// `t0 ≤ 1 / (C M1²)`.
pub fn check_time_horizon(t0: f64, m1: f64, c: f64) -> bool {
    t0 <= 1.0 / (c * m1 * m1)
}
