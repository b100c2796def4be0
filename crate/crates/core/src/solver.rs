//! Time stepping for `u_t - Δu = w·∇u + vu` on the torus.
//!
//! The Laplacian is integrated exactly through the multiplier `e^{-|j|² dt}`;
//! the coefficient terms are advanced with classical RK4 in the
//! integrating-factor variables and evaluated pseudo-spectrally.

use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::fourier::{gevrey_exponent, mode_norm_sq, SpectralField, LOG_CAP};
use crate::gevrey::CoefficientSet;

/// Relative slack allowed by [`verify_lower_bound`].
pub const LOWER_BOUND_SLACK: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub dt: f64,
    pub t0: f64,
    pub snapshot_times: Vec<f64>,
    /// `(δ', β)` pairs at which `‖e^{δ' A^{β/2}} u(t)‖` is recorded.
    pub gevrey_radii: Vec<(f64, f64)>,
}

impl SolverConfig {
    /// Checks the configuration against the coefficients and the cutoff.
    pub fn validate(&self, coeffs: &CoefficientSet, cutoff: usize) -> Result<()> {
        if !(self.dt > 0.0) || !(self.t0 > 0.0) {
            return Err(invalid("dt and t0 must be positive"));
        }
        if self.snapshot_times.is_empty() {
            return Err(invalid("no snapshot times"));
        }
        let mut prev = 0.0;
        let mut min_gap = f64::INFINITY;
        for &t in &self.snapshot_times {
            if !(t > prev) {
                return Err(invalid(format!(
                    "snapshot times must be sorted and positive, got {t} after {prev}"
                )));
            }
            min_gap = min_gap.min(t - prev);
            prev = t;
        }
        if prev > self.t0 * (1.0 + 1e-12) {
            return Err(invalid(format!("snapshot {prev} beyond horizon {}", self.t0)));
        }
        if self.dt > min_gap * (1.0 + 1e-12) {
            return Err(invalid(format!(
                "dt {} exceeds the snapshot spacing {min_gap}",
                self.dt
            )));
        }
        let c = &coeffs.constants;
        let stiffness = self.dt * (c.m1 * cutoff as f64 + c.m0);
        if stiffness > 0.5 {
            return Err(invalid(format!(
                "dt·(M1·J + M0) = {stiffness:.4} exceeds 0.5"
            )));
        }
        for &(d, b) in &self.gevrey_radii {
            crate::fourier::check_gevrey_args(d, b)?;
        }
        Ok(())
    }

    /// Largest step compatible with the snapshot spacing and the accuracy constraint.
    pub fn max_stable_dt(snapshot_times: &[f64], coeffs: &CoefficientSet, cutoff: usize) -> f64 {
        let mut prev = 0.0;
        let mut gap = f64::INFINITY;
        for &t in snapshot_times {
            gap = gap.min(t - prev);
            prev = t;
        }
        let c = &coeffs.constants;
        gap.min(0.5 / (c.m1 * cutoff as f64 + c.m0))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub u: SpectralField,
    pub l2: f64,
    pub qd: f64,
    /// `log ‖e^{δ' A^{β/2}} u(t)‖` per configured radius, `None` past the overflow guard.
    pub log_gevrey: Vec<Option<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveRecord {
    pub u0: SpectralField,
    pub l2_0: f64,
    pub dt: f64,
    pub gevrey_radii: Vec<(f64, f64)>,
    pub snapshots: Vec<Snapshot>,
    /// Maximum of the recorded Dirichlet quotients.
    pub q0: f64,
}

/// `w·∇u + vu`.
fn forcing(u: &SpectralField, coeffs: &CoefficientSet) -> Result<SpectralField> {
    let mut out = if coeffs.v.is_zero() {
        SpectralField::zeros(u.dim(), u.cutoff())?
    } else {
        coeffs.v.pointwise_product(u)?
    };
    for (wk, du) in coeffs.w.iter().zip(u.gradient()) {
        if wk.is_zero() {
            continue;
        }
        out = out.add(&wk.pointwise_product(&du)?)?;
    }
    Ok(out)
}

fn heat_factor(u: &SpectralField, tau: f64) -> SpectralField {
    u.map_modes(|j, c| c * (-mode_norm_sq(j) * tau).exp())
}

/// One integrating-factor RK4 step of size `dt`.
pub fn step(u: &SpectralField, coeffs: &CoefficientSet, dt: f64) -> Result<SpectralField> {
    if coeffs.dim() != u.dim() {
        return Err(Error::DimMismatch {
            left: u.dim(),
            right: coeffs.dim(),
        });
    }
    if coeffs.has_no_terms() {
        return Ok(heat_factor(u, dt));
    }
    let h2 = 0.5 * dt;
    let k1 = forcing(u, coeffs)?;
    let eu = heat_factor(u, h2);
    let k2 = forcing(&heat_factor(&u.axpy(h2, &k1)?, h2), coeffs)?;
    let k3 = forcing(&eu.axpy(h2, &k2)?, coeffs)?;
    let k4 = forcing(&heat_factor(&eu.axpy(dt, &k3)?, h2), coeffs)?;
    // E u + dt/6 (E k1 + 2 E½ (k2 + k3) + k4)
    let mid = k2.add(&k3)?.scaled(2.0);
    let acc = heat_factor(&heat_factor(&k1, h2).add(&mid)?, h2).add(&k4)?;
    let next = heat_factor(u, dt).axpy(dt / 6.0, &acc)?;
    if !next.is_finite() {
        return Err(Error::Diverged { t: dt });
    }
    Ok(next)
}

/// `Σ|j|²|u_j|² / Σ|u_j|²`.
pub fn dirichlet_quotient(u: &SpectralField) -> Result<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for (j, c) in u.modes() {
        let a = c.norm_sqr();
        num += mode_norm_sq(j) * a;
        den += a;
    }
    if den == 0.0 {
        return Err(Error::ZeroField);
    }
    Ok(num / den)
}

/// `log ‖e^{δ A^{β/2}} u‖`, or `None` when a nonzero mode exceeds the exponent cap.
pub fn log_gevrey_norm(u: &SpectralField, delta: f64, beta: f64) -> Option<f64> {
    let capped = u
        .modes()
        .any(|(j, c)| c.norm() > 0.0 && gevrey_exponent(delta, beta, j) > LOG_CAP);
    if capped {
        None
    } else {
        Some(u.log_weighted_norm(|j| gevrey_exponent(delta, beta, j)))
    }
}

/// Evolves `u0` to every snapshot time, landing exactly on each one.
pub fn solve(u0: &SpectralField, coeffs: &CoefficientSet, config: &SolverConfig) -> Result<SolveRecord> {
    if u0.is_zero() {
        return Err(Error::ZeroField);
    }
    config.validate(coeffs, u0.cutoff())?;
    let mut u = u0.clone();
    let mut t = 0.0;
    let mut snapshots = Vec::with_capacity(config.snapshot_times.len());
    for &ts in &config.snapshot_times {
        let span = ts - t;
        let steps = ((span / config.dt) - 1e-9).ceil().max(1.0) as usize;
        let h = span / steps as f64;
        for k in 0..steps {
            u = step(&u, coeffs, h).map_err(|e| match e {
                Error::Diverged { .. } => Error::Diverged { t: t + (k + 1) as f64 * h },
                other => other,
            })?;
        }
        t = ts;
        let l2 = u.l2_norm();
        if !(l2 > 0.0) {
            return Err(Error::Fault(format!("solution vanished at t = {ts}")));
        }
        let qd = dirichlet_quotient(&u)?;
        let log_gevrey = config
            .gevrey_radii
            .iter()
            .map(|&(d, b)| log_gevrey_norm(&u, d, b))
            .collect();
        snapshots.push(Snapshot {
            t: ts,
            u: u.clone(),
            l2,
            qd,
            log_gevrey,
        });
    }
    let q0 = snapshots.iter().fold(0.0, |m: f64, s| m.max(s.qd));
    Ok(SolveRecord {
        l2_0: u0.l2_norm(),
        u0: u0.clone(),
        dt: config.dt,
        gevrey_radii: config.gevrey_radii.clone(),
        snapshots,
        q0,
    })
}

/// Writes `t,l2,qD,gevrey_<δ>_<β>,...` rows with 17 significant digits.
/// `extra` appends constant trailing columns (name, value).
pub fn write_diagnostics_csv<W: Write>(
    rec: &SolveRecord,
    extra: &[(&str, String)],
    mut w: W,
) -> Result<()> {
    let mut header = String::from("t,l2,qD");
    for (d, b) in &rec.gevrey_radii {
        header.push_str(&format!(",gevrey_{d}_{b}"));
    }
    for (name, _) in extra {
        header.push(',');
        header.push_str(name);
    }
    writeln!(w, "{header}")?;
    for s in &rec.snapshots {
        let mut row = format!("{:.16e},{:.16e},{:.16e}", s.t, s.l2, s.qd);
        for g in &s.log_gevrey {
            match g {
                Some(lg) => row.push_str(&format!(",{:.16e}", lg.exp())),
                None => row.push_str(",overflow"),
            }
        }
        for (_, v) in extra {
            row.push(',');
            row.push_str(v);
        }
        writeln!(w, "{row}")?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LowerBoundRow {
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LowerBoundReport {
    pub rows: Vec<LowerBoundRow>,
    pub pass: bool,
}

/// Checks `‖u(t)‖² ≥ e^{-2t(M1 + M0 + q0)} ‖u0‖²` at every snapshot.
pub fn verify_lower_bound(rec: &SolveRecord, m0: f64, m1: f64, q0: f64) -> LowerBoundReport {
    let base = rec.l2_0 * rec.l2_0;
    let rows: Vec<LowerBoundRow> = rec
        .snapshots
        .iter()
        .map(|s| {
            let lhs = s.l2 * s.l2;
            let rhs = (-2.0 * s.t * (m1 + m0 + q0)).exp() * base;
            LowerBoundRow {
                t: s.t,
                lhs,
                rhs,
                margin: lhs / rhs,
                pass: lhs >= rhs * (1.0 - LOWER_BOUND_SLACK),
            }
        })
        .collect();
    let pass = rows.iter().all(|r| r.pass);
    LowerBoundReport { rows, pass }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GevreyRow {
    pub t: f64,
    /// `log(‖e^{δ A^{β/2}} u(t)‖ / ‖u(t)‖)`.
    pub g: f64,
    /// `δ^{2/(2-β)} t^{-β/(2-β)} + t C1`.
    pub envelope: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GevreySmoothingReport {
    pub delta: f64,
    pub beta: f64,
    pub rows: Vec<GevreyRow>,
    pub skipped: Vec<f64>,
    /// Least-squares scalar `a` in `g ≈ a · envelope`.
    pub fitted_a: f64,
    /// Smallest `a` with `g ≤ a · envelope` at every row.
    pub dominating_a: f64,
    /// `max (g - a·env) / (a·env)` over rows, for the least-squares `a`.
    pub max_relative_violation: f64,
    pub pass: bool,
}

/// Shape of the Gevrey envelope `δ^{2/(2-β)} t^{-β/(2-β)} + t C1`.
pub fn gevrey_envelope(t: f64, delta: f64, beta: f64, c1: f64) -> f64 {
    delta.powf(2.0 / (2.0 - beta)) * t.powf(-beta / (2.0 - beta)) + t * c1
}

/// Fits `g(t) ≤ a (δ^{2/(2-β)} t^{-β/(2-β)} + t C1)` over the recorded snapshots.
pub fn verify_gevrey_smoothing(rec: &SolveRecord, delta: f64, beta: f64, c1: f64) -> GevreySmoothingReport {
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for s in &rec.snapshots {
        match log_gevrey_norm(&s.u, delta, beta) {
            Some(lg) => rows.push(GevreyRow {
                t: s.t,
                g: lg - s.l2.ln(),
                envelope: gevrey_envelope(s.t, delta, beta, c1),
            }),
            None => skipped.push(s.t),
        }
    }
    let num: f64 = rows.iter().map(|r| r.g * r.envelope).sum();
    let den: f64 = rows.iter().map(|r| r.envelope * r.envelope).sum();
    let fitted_a = if den > 0.0 { num / den } else { f64::NAN };
    let dominating_a = rows
        .iter()
        .map(|r| r.g / r.envelope)
        .fold(f64::NEG_INFINITY, f64::max);
    let max_relative_violation = rows
        .iter()
        .map(|r| (r.g - fitted_a * r.envelope) / (fitted_a * r.envelope))
        .fold(f64::NEG_INFINITY, f64::max);
    let pass = !rows.is_empty()
        && rows.iter().all(|r| r.g.is_finite() && r.envelope > 0.0)
        && fitted_a.is_finite()
        && dominating_a.is_finite();
    GevreySmoothingReport {
        delta,
        beta,
        rows,
        skipped,
        fitted_a,
        dominating_a,
        max_relative_violation,
        pass,
    }
}

/// `max_{0 ≤ j ≤ Jmax} (δ j^β - t j²)` over integers.
pub fn heat_semigroup_gevrey_max(t: f64, delta: f64, beta: f64, jmax: usize) -> f64 {
    (0..=jmax)
        .map(|j| {
            let j = j as f64;
            let growth = if j == 0.0 { 0.0 } else { delta * j.powf(beta) };
            growth - t * j * j
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `sin(kx)` on `T^dim` at the given cutoff.
pub fn sine_mode(dim: usize, cutoff: usize, k: i64) -> Result<SpectralField> {
    SpectralField::from_modes(dim, cutoff, &[([k, 0], Complex64::new(0.0, -0.5))])
}
