//! Closed-form bound evaluators and calibration of the anonymous constants.
//!
//! Every quantity here is a plain formula of its arguments. The constants the
//! theory only asserts to exist (`C0`, `K`, `M`, `C3`, the main-bound `C`)
//! are explicit fields of [`BoundConstants`] with documented defaults.

use std::f64::consts::E;

use num_bigint::BigUint;
use num_traits::One;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::fourier::LOG_CAP;
use crate::gevrey::{CertifiedConstants, GevreyParams};

/// Default Stirling constant; validated exactly up to `n = 300`.
pub const DEFAULT_C3: f64 = 0.36;
pub const STIRLING_NMAX: usize = 300;

/// Largest admissible time, so that `log(1/t) ≥ 1`.
pub fn t_max() -> f64 {
    (-1.0f64).exp()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundConstants {
    pub q0: f64,
    pub m0: f64,
    pub m1: f64,
    pub kv: f64,
    pub kw: f64,
    pub delta: f64,
    pub beta: f64,
    /// Observability constant.
    pub k: f64,
    /// Radius constant in the choice of `r`.
    pub m: f64,
    pub c0: f64,
    /// `Kw² + Kv + M1 + M0 + q0`.
    pub c1: f64,
    /// `δ^{2/(2-β)}`.
    pub c2: f64,
    pub c3: f64,
    pub cmain: f64,
}

/// Optional overrides for the configured constants.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct ConstantOverrides {
    pub c0: Option<f64>,
    pub k: Option<f64>,
    pub m: Option<f64>,
    pub c3: Option<f64>,
    pub cmain: Option<f64>,
}

impl BoundConstants {
    pub fn new(
        q0: f64,
        certified: CertifiedConstants,
        params: GevreyParams,
        overrides: ConstantOverrides,
    ) -> Result<Self> {
        let mut bc = Self {
            q0,
            m0: certified.m0,
            m1: certified.m1,
            kv: certified.kv,
            kw: certified.kw,
            delta: params.delta,
            beta: params.beta,
            k: overrides.k.unwrap_or(1.0),
            m: overrides.m.unwrap_or(1.0),
            c0: overrides.c0.unwrap_or(E),
            c1: 0.0,
            c2: 0.0,
            c3: overrides.c3.unwrap_or(DEFAULT_C3),
            cmain: overrides.cmain.unwrap_or(1.0),
        };
        bc.recompute();
        if !(bc.c0 > 1.0) {
            return Err(invalid(format!("C0 must exceed 1, got {}", bc.c0)));
        }
        if !(bc.k >= 0.0) || !(bc.m >= 1.0) {
            return Err(invalid("K must be ≥ 0 and M ≥ 1"));
        }
        if !(bc.c3 > 0.0 && bc.c3 <= 1.0 / E) || !stirling_holds(bc.c3, STIRLING_NMAX) {
            return Err(invalid(format!(
                "C3 = {} fails the Stirling inequality up to n = {STIRLING_NMAX}",
                bc.c3
            )));
        }
        Ok(bc)
    }

    /// Recomputes the derived constants `C1` and `C2`.
    pub fn recompute(&mut self) {
        self.c1 = self.kw * self.kw + self.kv + self.m1 + self.m0 + self.q0;
        self.c2 = self.delta.powf(2.0 / (2.0 - self.beta));
    }

    pub fn with_beta(&self, beta: f64) -> Self {
        let mut out = self.clone();
        out.beta = beta;
        out.recompute();
        out
    }

    pub fn with_m(&self, m: f64) -> Self {
        let mut out = self.clone();
        out.m = m;
        out
    }
}

fn check_t(t: f64) -> Result<()> {
    if !(t > 0.0 && t <= t_max() * (1.0 + 1e-15)) {
        return Err(invalid(format!("t = {t} outside (0, e^-1]")));
    }
    Ok(())
}

/// `C (1/t)^{1/β} log^{2(1/β - 1)}(1/t)`.
pub fn main_bound(t: f64, beta: f64, cmain: f64) -> Result<f64> {
    check_t(t)?;
    let l = (1.0 / t).ln();
    Ok(cmain * (1.0 / t).powf(1.0 / beta) * l.powf(2.0 * (1.0 / beta - 1.0)))
}

/// `t^{1/β-1} / (log^{1/β-1}(1/t) M)`, clamped to `(0, 1/2]`. Requires `t ≤ e^{-1}`.
pub fn choose_r(t: f64, beta: f64, m: f64) -> f64 {
    let p = 1.0 / beta - 1.0;
    let r = t.powf(p) / ((1.0 / t).ln().powf(p) * m);
    r.min(0.5)
}

/// `floor(2 K² log(1/r) / t + 2d + 1)`.
pub fn n0(t: f64, r: f64, k: f64, d: usize) -> u64 {
    (2.0 * k * k * (1.0 / r).ln() / t + 2.0 * d as f64 + 1.0).floor() as u64
}

/// Left side of the logarithmic necessary condition for `n` zeros; the
/// condition holds iff the value is `≥ 0`.
pub fn necessary_condition_lhs(n: u64, r: f64, t: f64, bc: &BoundConstants, d: usize) -> f64 {
    let n = n as f64;
    let d = d as f64;
    let beta = bc.beta;
    let k2 = bc.k * bc.k;
    (n + k2 * (1.0 / r).ln() / t + bc.c1 * t + bc.c2 * t.powf(-beta / (2.0 - beta))) * bc.c0.ln()
        + (n + d / 2.0) * r.ln()
        - (0.5 + n) * n.ln()
        - n * bc.c3.ln()
        + (n + 2.0 * d) / beta * (n + 2.0 * d).ln()
}

/// Upper bound for the left side at `n = n0`.
pub fn eq50_upper(n0: u64, r: f64, t: f64, bc: &BoundConstants, d: usize) -> f64 {
    let n0 = n0 as f64;
    let beta = bc.beta;
    let inner = bc.c0 * bc.c0 * r * 2f64.powf(1.0 / beta) * n0.powf(1.0 / beta - 1.0) / bc.c3;
    (bc.c1 * t + bc.c2 * t.powf(-beta / (2.0 - beta))) * bc.c0.ln()
        + n0 * inner.ln()
        + 2.0 * d as f64 / beta * (2.0 * n0).ln()
}

/// `n0(t, r, K, d) / r` with `r = choose_r(t, β, M)`.
pub fn global_bound_from_covering(t: f64, bc: &BoundConstants, d: usize) -> Result<f64> {
    check_t(t)?;
    let r = choose_r(t, bc.beta, bc.m);
    Ok(n0(t, r, bc.k, d) as f64 / r)
}

/// `K² log(1/μ0) / t`.
pub fn observability_exponent(mu0: f64, t: f64, k: f64) -> f64 {
    k * k * (1.0 / mu0).ln() / t
}

/// Constants entering `β(μ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MuContext {
    pub q0: f64,
    pub m0: f64,
    pub m1: f64,
    pub c: f64,
}

/// `β(μ)` from the local observability estimate.
pub fn beta_mu(mu: f64, t: f64, ctx: MuContext) -> f64 {
    let MuContext { q0, m0, m1, c } = ctx;
    let sq = t.sqrt();
    c * (t * q0 + m1 * m1 + m1 * m1 * t + m0 * m0 * t * t + 1.0 / t + 1.0 / sq) * (t / (mu * mu)).ln()
        + c * (m1 * sq + m1 * m1 * t + m0 * t + 1.0 / t + 1.0 / sq)
}

/// `1/μ² ≥ (C/μ0²) log(1/μ) + C(β(μ)+1)/δ0²` and `0 < μ < min(√(t/2), μ0)`.
pub fn check_mu_admissible(mu: f64, mu0: f64, delta0: f64, t: f64, ctx: MuContext) -> bool {
    if !(mu > 0.0 && mu < (t / 2.0).sqrt().min(mu0)) {
        return false;
    }
    let lhs = 1.0 / (mu * mu);
    let rhs = ctx.c / (mu0 * mu0) * (1.0 / mu).ln() + ctx.c * (beta_mu(mu, t, ctx) + 1.0) / (delta0 * delta0);
    lhs >= rhs
}

/// `μ0 √(t/2) / (K log^{1/2}(1/μ0))`.
pub fn mu_closed_form(t: f64, mu0: f64, k: f64) -> f64 {
    mu0 * (t / 2.0).sqrt() / (k * (1.0 / mu0).ln().sqrt())
}

/// Exact check of `C3^n n^{n+1/2} < n!` for `1 ≤ n ≤ nmax`, squared to stay in
/// integers: `C3 = a / 2^s` turns it into `a^{2n} n^{2n+1} < 2^{2ns} (n!)²`.
pub fn stirling_holds(c3: f64, nmax: usize) -> bool {
    if !(c3 > 0.0) || !c3.is_finite() {
        return false;
    }
    let (num, scale) = dyadic(c3);
    stirling_holds_rational(&num, &(BigUint::one() << scale), nmax)
}

/// `c3 = num · 2^{-scale}` exactly.
fn dyadic(x: f64) -> (BigUint, usize) {
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, e) = if exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), exp - 1075)
    };
    if e >= 0 {
        (BigUint::from(mant) << e as usize, 0)
    } else {
        (BigUint::from(mant), (-e) as usize)
    }
}

fn stirling_holds_rational(num: &BigUint, den: &BigUint, nmax: usize) -> bool {
    let num2 = num * num;
    let den2 = den * den;
    let mut fact = BigUint::one();
    let mut num_pow = BigUint::one();
    let mut den_pow = BigUint::one();
    for n in 1..=nmax {
        fact *= BigUint::from(n);
        num_pow *= &num2;
        den_pow *= &den2;
        let nn = BigUint::from(n);
        let lhs = &num_pow * nn.pow(2 * n as u32 + 1);
        let rhs = &den_pow * &fact * &fact;
        if lhs >= rhs {
            return false;
        }
    }
    true
}

/// Largest `C3` on the `10⁻⁶` grid with `C3^n n^{n+1/2} < n!` for all `1 ≤ n ≤ nmax`.
pub fn stirling_c3_check(nmax: usize) -> Result<f64> {
    if nmax == 0 || nmax > STIRLING_NMAX {
        return Err(invalid(format!("nmax must lie in [1, {STIRLING_NMAX}]")));
    }
    let mut log_fact = 0.0;
    let mut cand = f64::INFINITY;
    for n in 1..=nmax {
        let nf = n as f64;
        log_fact += nf.ln();
        cand = cand.min(((log_fact - (nf + 0.5) * nf.ln()) / nf).exp());
    }
    let scale = 1_000_000u64;
    let den = BigUint::from(scale);
    let mut k = (cand * scale as f64).floor() as u64 + 1;
    // walk down to the largest grid value that passes exactly
    while k > 0 && !stirling_holds_rational(&BigUint::from(k), &den, nmax) {
        k -= 1;
    }
    Ok(k as f64 / scale as f64)
}

/// Shape functions available for calibration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum BoundShape {
    /// `(1/t)^{1/β} log^{2(1/β-1)}(1/t)`.
    MainBound { beta: f64 },
    /// `1/t`.
    InverseT,
    /// `(1/t)^p`.
    Power { exponent: f64 },
}

impl BoundShape {
    pub fn eval(&self, t: f64) -> Result<f64> {
        match *self {
            BoundShape::MainBound { beta } => main_bound(t, beta, 1.0),
            BoundShape::InverseT => Ok(1.0 / t),
            BoundShape::Power { exponent } => Ok(t.powf(-exponent)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Calibration {
    pub value: f64,
    pub degenerate: bool,
    /// Index of the training pair that fixes the constant.
    pub binding: usize,
    pub shape: BoundShape,
}

/// Smallest constant `C` with `value ≤ C · shape(t)` on every training pair.
pub fn calibrate_c(pairs: &[(f64, f64)], shape: BoundShape) -> Result<Calibration> {
    if pairs.len() < 2 {
        return Err(invalid(format!(
            "calibration needs at least two pairs, got {}",
            pairs.len()
        )));
    }
    let mut best = 0.0;
    let mut binding = 0;
    for (i, &(t, y)) in pairs.iter().enumerate() {
        let c = y / shape.eval(t)?;
        if c > best {
            best = c;
            binding = i;
        }
    }
    let degenerate = !(best > 0.0);
    Ok(Calibration {
        value: if degenerate { f64::MIN_POSITIVE } else { best },
        degenerate,
        binding,
        shape,
    })
}

/// Smallest `M` (by bisection in `log M`) such that the necessary condition
/// fails at `n = n0` for every `t` of the grid, with `r = choose_r(t, β, M)`.
pub fn bisect_m_star(bc: &BoundConstants, d: usize, t_grid: &[f64]) -> Result<f64> {
    let fails_everywhere = |m: f64| {
        t_grid.iter().all(|&t| {
            let r = choose_r(t, bc.beta, m);
            necessary_condition_lhs(n0(t, r, bc.k, d), r, t, bc, d) < 0.0
        })
    };
    if fails_everywhere(1.0) {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (0.0f64, LOG_CAP);
    if !fails_everywhere(hi.exp()) {
        return Err(Error::InvalidParameter(
            "no M ≤ e^700 makes the necessary condition fail on the grid".into(),
        ));
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if fails_everywhere(mid.exp()) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi.exp())
}

/// `count` points log-spaced on `[a, b]`, with both ends exact.
pub fn log_grid(a: f64, b: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![a];
    }
    let (la, lb) = (a.ln(), b.ln());
    let mut g: Vec<f64> = (0..count)
        .map(|i| (la + (lb - la) * i as f64 / (count - 1) as f64).exp())
        .collect();
    g[0] = a;
    g[count - 1] = b;
    g
}
