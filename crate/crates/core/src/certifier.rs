//! Certified upper bounds on the number of zeros, counted with multiplicity,
//! of a band-limited function on a segment.
//!
//! If `u` has `n` zeros on a segment of length `L`, Hermite interpolation gives
//! `‖u‖_∞ ≤ L^n / n! · ‖u^{(n)}‖_∞`. A witness point where `|u|` exceeds the
//! right side therefore proves that there are fewer than `n` zeros. All
//! comparisons are made in log domain with a relative slack on the right side.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::fourier::{SpectralField, LOG_CAP};
use crate::nodal::Point;

/// Relative slack added to the right-hand side to absorb floating-point rounding.
pub const LOG_SLACK: f64 = 1e-6;
pub const DEFAULT_NMAX: usize = 200;
/// Largest derivative order accepted by [`derivative_sup`].
pub const MAX_ORDER: usize = 400;

/// A real trigonometric sum `s ↦ Σ c_k e^{i ω_k s}` with real frequencies.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigSum {
    terms: Vec<(f64, Complex64)>,
}

impl TrigSum {
    pub fn from_field_1d(f: &SpectralField) -> Result<Self> {
        if f.dim() != 1 {
            return Err(Error::DimMismatch {
                left: f.dim(),
                right: 1,
            });
        }
        Ok(Self {
            terms: f
                .modes()
                .filter(|(_, c)| c.norm() > 0.0)
                .map(|(j, c)| (j[0] as f64, c))
                .collect(),
        })
    }

    /// Restriction of a 2D field to the line `s ↦ p + s (cos θ, sin θ)`.
    pub fn restrict_2d(f: &SpectralField, p: Point, theta: f64) -> Result<Self> {
        if f.dim() != 2 {
            return Err(Error::DimMismatch {
                left: f.dim(),
                right: 2,
            });
        }
        let e = [theta.cos(), theta.sin()];
        Ok(Self {
            terms: f
                .modes()
                .filter(|(_, c)| c.norm() > 0.0)
                .map(|(j, c)| {
                    let (a, b) = (j[0] as f64, j[1] as f64);
                    let omega = a * e[0] + b * e[1];
                    (omega, c * Complex64::from_polar(1.0, a * p[0] + b * p[1]))
                })
                .collect(),
        })
    }

    pub fn eval(&self, s: f64) -> f64 {
        self.terms
            .iter()
            .map(|(w, c)| (c * Complex64::from_polar(1.0, w * s)).re)
            .sum()
    }

    pub fn max_frequency(&self) -> f64 {
        self.terms.iter().fold(0.0, |m, (w, _)| m.max(w.abs()))
    }

    /// `log Σ |ω|^n |c|`, a global bound on `log ‖u^{(n)}‖_∞`; `-∞` if the sum vanishes.
    pub fn log_derivative_bound(&self, n: usize) -> f64 {
        let logs: Vec<f64> = self
            .terms
            .iter()
            .filter(|(w, _)| n == 0 || *w != 0.0)
            .map(|(w, c)| n as f64 * w.abs().ln() + c.norm().ln())
            .collect();
        crate::fourier::log_sum_exp(&logs)
    }
}

/// Segment `[center - halflength, center + halflength]` within one period.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Segment {
    pub center: f64,
    pub halflength: f64,
}

impl Segment {
    pub fn new(center: f64, halflength: f64) -> Result<Self> {
        if !(halflength > 0.0 && halflength <= PI) {
            return Err(invalid(format!(
                "segment half-length must lie in (0, π], got {halflength}"
            )));
        }
        Ok(Self { center, halflength })
    }

    pub fn length(&self) -> f64 {
        2.0 * self.halflength
    }

    pub fn start(&self) -> f64 {
        self.center - self.halflength
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ZeroCertificate {
    /// Zero count with multiplicity on the segment is strictly below `nstar`.
    pub nstar: usize,
    /// Witnessed lower bound on `‖u‖_{L∞(seg)}`.
    pub sup_u: f64,
    /// Upper bound on `‖u^{(n*)}‖_{L∞(seg)}`.
    pub deriv_bound: f64,
    pub log_sup: f64,
    /// `log(len^{n*} / n*! · deriv_bound) + log(1 + slack)`.
    pub log_rhs: f64,
    pub log_margin: f64,
}

impl ZeroCertificate {
    /// Recomputes the strict inequality from the stored logs.
    pub fn holds(&self) -> bool {
        self.log_sup > self.log_rhs
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum CertifyOutcome {
    Certified(ZeroCertificate),
    Inconclusive { reason: String },
}

impl CertifyOutcome {
    pub fn certificate(&self) -> Option<&ZeroCertificate> {
        match self {
            CertifyOutcome::Certified(c) => Some(c),
            CertifyOutcome::Inconclusive { .. } => None,
        }
    }

    pub fn nstar(&self) -> Option<usize> {
        self.certificate().map(|c| c.nstar)
    }
}

/// `Σ |j|^n |u_j|`, valid on every segment.
pub fn derivative_sup(f: &SpectralField, n: usize, _seg: Segment) -> Result<f64> {
    if n > MAX_ORDER {
        return Err(invalid(format!("derivative order {n} exceeds {MAX_ORDER}")));
    }
    let lb = TrigSum::from_field_1d(f)?.log_derivative_bound(n);
    if lb > LOG_CAP {
        return Err(Error::Overflow {
            mode: [f.cutoff() as i64, 0],
            exponent: lb,
        });
    }
    Ok(lb.exp())
}

fn witness_sup(g: &TrigSum, seg: Segment) -> f64 {
    let len = seg.length();
    let m = (8.0 * g.max_frequency() * len).ceil().max(256.0) as usize;
    (0..=m)
        .map(|k| g.eval(seg.start() + len * k as f64 / m as f64).abs())
        .fold(0.0, f64::max)
}

/// Smallest `n ≤ nmax` with `max|u| > len^n / n! · ‖u^{(n)}‖` on the segment.
pub fn certify_trig_sum(g: &TrigSum, seg: Segment, nmax: usize) -> CertifyOutcome {
    let sup_u = witness_sup(g, seg);
    if !(sup_u > 0.0) {
        return CertifyOutcome::Inconclusive {
            reason: "function vanishes on the witness grid".into(),
        };
    }
    let log_sup = sup_u.ln();
    let log_len = seg.length().ln();
    let slack = LOG_SLACK.ln_1p();
    let mut log_fact = 0.0;
    for n in 1..=nmax.min(MAX_ORDER) {
        log_fact += (n as f64).ln();
        let log_d = g.log_derivative_bound(n);
        let log_rhs = n as f64 * log_len - log_fact + log_d + slack;
        if log_sup > log_rhs {
            return CertifyOutcome::Certified(ZeroCertificate {
                nstar: n,
                sup_u,
                deriv_bound: log_d.exp(),
                log_sup,
                log_rhs,
                log_margin: log_sup - log_rhs,
            });
        }
    }
    CertifyOutcome::Inconclusive {
        reason: format!("no certificate up to n = {nmax}"),
    }
}

pub fn certify_zero_bound(f: &SpectralField, seg: Segment, nmax: usize) -> Result<CertifyOutcome> {
    Ok(certify_trig_sum(&TrigSum::from_field_1d(f)?, seg, nmax))
}

/// Certifies the zero count of a 2D field on `l ∩ B_{2r}(p)` for the line
/// through `p` with direction `θ`.
pub fn certify_on_line(f2d: &SpectralField, p: Point, theta: f64, r: f64, nmax: usize) -> Result<CertifyOutcome> {
    let g = TrigSum::restrict_2d(f2d, p, theta)?;
    let seg = Segment::new(0.0, 2.0 * r)?;
    Ok(certify_trig_sum(&g, seg, nmax))
}

/// One row of `certificates.csv` (`p,theta,r,nstar,log_margin`); `p` is written as `x y`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertificateRow {
    pub p: Point,
    pub theta: f64,
    pub r: f64,
    pub nstar: Option<usize>,
    pub log_margin: Option<f64>,
}

pub const CERTIFICATE_CSV_HEADER: &str = "p,theta,r,nstar,log_margin";

impl CertificateRow {
    pub fn new(p: Point, theta: f64, r: f64, outcome: &CertifyOutcome) -> Self {
        Self {
            p,
            theta,
            r,
            nstar: outcome.nstar(),
            log_margin: outcome.certificate().map(|c| c.log_margin),
        }
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{:.16e} {:.16e},{:.16e},{:.16e},{},{}",
            self.p[0],
            self.p[1],
            self.theta,
            self.r,
            self.nstar.map(|n| n.to_string()).unwrap_or_else(|| "inconclusive".into()),
            self.log_margin.map(|m| format!("{m:.16e}")).unwrap_or_default()
        )
    }
}
