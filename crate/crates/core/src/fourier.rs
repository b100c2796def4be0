//! Truncated Fourier series on the flat torus `T^d = [0, 2π)^d`, `d ∈ {1, 2}`.
//!
//! A [`SpectralField`] stores the amplitudes `u_j` for every mode `j` with
//! `|j|_∞ ≤ J` in a dense row-major array. Real-valuedness is carried by the
//! Hermitian symmetry `u_{-j} = conj(u_j)`, which every constructor checks.
//! Multipliers use the Euclidean mode norm (the symbol of `-Δ` is `|j|²`);
//! the sup norm only shapes the truncation box.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Error, Result};

/// Largest exponent accepted for a multiplier `e^{x}` before it is treated as overflow.
pub const LOG_CAP: f64 = 700.0;

/// Fourier mode index. The second component is always zero in one dimension.
pub type Mode = [i64; 2];

/// Squared Euclidean norm of a mode.
#[inline]
pub fn mode_norm_sq(j: Mode) -> f64 {
    (j[0] * j[0] + j[1] * j[1]) as f64
}

#[inline]
pub fn mode_norm(j: Mode) -> f64 {
    mode_norm_sq(j).sqrt()
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 1 || dim == 2 {
        Ok(())
    } else {
        Err(Error::UnsupportedDim(dim))
    }
}

/// Smallest resolution without aliasing on synthesis from cutoff `J`.
pub fn min_resolution(cutoff: usize) -> usize {
    2 * cutoff + 2
}

/// Smallest FFT-friendly size (factors 2, 3, 5 only) not below `n`.
pub fn fft_friendly(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut k = m;
        for p in [2, 3, 5] {
            while k.is_multiple_of(p) {
                k /= p;
            }
        }
        if k == 1 {
            return m;
        }
        m += 1;
    }
}

/// Grid size used for dealiased products at cutoff `J`.
pub fn dealias_resolution(cutoff: usize) -> usize {
    fft_friendly((3 * cutoff + 1).max(min_resolution(cutoff)))
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

/// Unnormalized d-dimensional FFT of a row-major `n^dim` array.
/// `inverse` uses the `e^{+i j x}` kernel (synthesis).
fn fft_nd(data: &mut [Complex64], dim: usize, n: usize, inverse: bool) {
    let fft = plan(n, inverse);
    if dim == 1 {
        fft.process(data);
        return;
    }
    // rows
    fft.process(data);
    // columns via transpose
    let mut t = vec![Complex64::new(0.0, 0.0); n * n];
    transpose(data, &mut t, n);
    fft.process(&mut t);
    transpose(&t, data, n);
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], n: usize) {
    for r in 0..n {
        for c in 0..n {
            dst[c * n + r] = src[r * n + c];
        }
    }
}

/// Real samples on the equispaced grid `x_k = 2πk/N`, row-major in 2D
/// (`values[k1 * N + k2]` is the value at `(x_{k1}, y_{k2})`).
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    dim: usize,
    n: usize,
    values: Vec<f64>,
}

impl GridField {
    pub fn new(dim: usize, n: usize, values: Vec<f64>) -> Result<Self> {
        check_dim(dim)?;
        if values.len() != n.pow(dim as u32) {
            return Err(invalid(format!(
                "grid of {} values does not match {}^{}",
                values.len(),
                n,
                dim
            )));
        }
        Ok(Self { dim, n, values })
    }

    /// Samples `f` at the grid points.
    pub fn from_fn(dim: usize, n: usize, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        check_dim(dim)?;
        let h = 2.0 * PI / n as f64;
        let values = match dim {
            1 => (0..n).map(|k| f(&[k as f64 * h])).collect(),
            _ => (0..n * n)
                .map(|idx| f(&[(idx / n) as f64 * h, (idx % n) as f64 * h]))
                .collect(),
        };
        Ok(Self { dim, n, values })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn resolution(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    /// Value at grid index `(k1, k2)` with periodic wraparound.
    pub fn at(&self, k1: i64, k2: i64) -> f64 {
        let n = self.n as i64;
        let a = k1.rem_euclid(n) as usize;
        if self.dim == 1 {
            self.values[a]
        } else {
            let b = k2.rem_euclid(n) as usize;
            self.values[a * self.n + b]
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Truncated Fourier representation of a real periodic function on `T^dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    dim: usize,
    cutoff: usize,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(dim: usize, cutoff: usize) -> Result<Self> {
        check_dim(dim)?;
        let w = 2 * cutoff + 1;
        Ok(Self {
            dim,
            cutoff,
            coeffs: vec![Complex64::new(0.0, 0.0); w.pow(dim as u32)],
        })
    }

    pub fn constant(dim: usize, cutoff: usize, c: f64) -> Result<Self> {
        let mut f = Self::zeros(dim, cutoff)?;
        let i = f.index([0, 0]).expect("zero mode is always retained");
        f.coeffs[i] = Complex64::new(c, 0.0);
        Ok(f)
    }

    /// Builds a field from a list of modes; each entry also sets the
    /// conjugate partner `-j`. The zero mode must be real.
    pub fn from_modes(dim: usize, cutoff: usize, modes: &[(Mode, Complex64)]) -> Result<Self> {
        let mut f = Self::zeros(dim, cutoff)?;
        for &(j, c) in modes {
            f.set_mode(j, c)?;
        }
        Ok(f)
    }

    /// Builds a field from `coef(j)` evaluated on every retained mode and
    /// validates Hermitian symmetry.
    pub fn from_fn(dim: usize, cutoff: usize, coef: impl Fn(Mode) -> Complex64) -> Result<Self> {
        let mut f = Self::zeros(dim, cutoff)?;
        let modes: Vec<Mode> = f.mode_iter().collect();
        for (slot, j) in f.coeffs.iter_mut().zip(modes) {
            *slot = coef(j);
        }
        f.check_hermitian()?;
        Ok(f)
    }

    /// Sets `u_j = c` and `u_{-j} = conj(c)`.
    pub fn set_mode(&mut self, j: Mode, c: Complex64) -> Result<()> {
        let i = self
            .index(j)
            .ok_or_else(|| invalid(format!("mode {j:?} outside cutoff {}", self.cutoff)))?;
        let k = self.index([-j[0], -j[1]]).expect("box is symmetric");
        if i == k {
            if c.im.abs() > 1e-14 * c.re.abs().max(1.0) {
                return Err(Error::NotReal(format!("zero mode has imaginary part {}", c.im)));
            }
            self.coeffs[i] = Complex64::new(c.re, 0.0);
        } else {
            self.coeffs[i] = c;
            self.coeffs[k] = c.conj();
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    fn width(&self) -> usize {
        2 * self.cutoff + 1
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Storage index of mode `j`, or `None` if it lies outside the box.
    pub fn index(&self, j: Mode) -> Option<usize> {
        let c = self.cutoff as i64;
        if j[0].abs() > c || j[1].abs() > c || (self.dim == 1 && j[1] != 0) {
            return None;
        }
        let a = (j[0] + c) as usize;
        Some(if self.dim == 1 {
            a
        } else {
            a * self.width() + (j[1] + c) as usize
        })
    }

    /// Amplitude of mode `j` (zero outside the box).
    pub fn get(&self, j: Mode) -> Complex64 {
        self.index(j)
            .map(|i| self.coeffs[i])
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    fn mode_at(&self, i: usize) -> Mode {
        let c = self.cutoff as i64;
        if self.dim == 1 {
            [i as i64 - c, 0]
        } else {
            let w = self.width();
            [(i / w) as i64 - c, (i % w) as i64 - c]
        }
    }

    /// Retained modes in lexicographic order.
    pub fn mode_iter(&self) -> impl Iterator<Item = Mode> + '_ {
        (0..self.coeffs.len()).map(move |i| self.mode_at(i))
    }

    /// `(mode, amplitude)` pairs in lexicographic order.
    pub fn modes(&self) -> impl Iterator<Item = (Mode, Complex64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(i, &c)| (self.mode_at(i), c))
    }

    /// Applies a mode-wise map. The map must respect `m(-j, conj c) = conj m(j, c)`.
    pub fn map_modes(&self, mut m: impl FnMut(Mode, Complex64) -> Complex64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| m(self.mode_at(i), c))
            .collect();
        Self {
            dim: self.dim,
            cutoff: self.cutoff,
            coeffs,
        }
    }

    pub fn max_amplitude(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.norm()))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    fn check_hermitian(&self) -> Result<()> {
        let scale = self.max_amplitude();
        for (i, j) in self.mode_iter().enumerate() {
            let k = self.index([-j[0], -j[1]]).expect("box is symmetric");
            let d = (self.coeffs[i] - self.coeffs[k].conj()).norm();
            if d > 1e-12 * scale {
                return Err(Error::NotReal(format!(
                    "u at {:?} is not the conjugate of u at {:?}",
                    j,
                    [-j[0], -j[1]]
                )));
            }
        }
        Ok(())
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        if self.cutoff != other.cutoff {
            return Err(Error::CutoffMismatch {
                left: self.cutoff,
                right: other.cutoff,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.axpy(1.0, other)
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(x, y)| x + y * a)
            .collect();
        Ok(Self {
            dim: self.dim,
            cutoff: self.cutoff,
            coeffs,
        })
    }

    pub fn scaled(&self, a: f64) -> Self {
        self.map_modes(|_, c| c * a)
    }

    /// Re-expresses the field at another cutoff, dropping or zero-padding modes.
    pub fn with_cutoff(&self, cutoff: usize) -> Self {
        let mut out = Self::zeros(self.dim, cutoff).expect("dim already validated");
        for (i, j) in out.mode_iter().collect::<Vec<_>>().into_iter().enumerate() {
            out.coeffs[i] = self.get(j);
        }
        out
    }

    /// Point evaluation by direct summation of the series.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let (x0, x1) = (x[0], if self.dim == 2 { x[1] } else { 0.0 });
        self.modes()
            .map(|(j, c)| {
                let phase = j[0] as f64 * x0 + j[1] as f64 * x1;
                c.re * phase.cos() - c.im * phase.sin()
            })
            .sum()
    }

    /// `‖f‖_{L²(T^d)} = sqrt((2π)^d Σ|u_j|²)`.
    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self.coeffs.iter().map(|c| c.norm_sqr()).sum();
        ((2.0 * PI).powi(self.dim as i32) * s).sqrt()
    }

    /// `L²` inner product `(f, g) = (2π)^d Σ u_j conj(g_j)` (real for real fields).
    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.check_same_shape(other)?;
        let s: f64 = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a * b.conj()).re)
            .sum();
        Ok((2.0 * PI).powi(self.dim as i32) * s)
    }

    /// Natural log of `‖W f‖_{L²}` for the diagonal multiplier `W_j = e^{log_weight(j)}`,
    /// evaluated without forming the weights. Returns `-∞` for the zero field.
    pub fn log_weighted_norm(&self, log_weight: impl Fn(Mode) -> f64) -> f64 {
        let terms: Vec<f64> = self
            .modes()
            .filter(|(_, c)| c.norm_sqr() > 0.0)
            .map(|(j, c)| 2.0 * (log_weight(j) + c.norm().ln()))
            .collect();
        let lse = log_sum_exp(&terms);
        0.5 * (lse + self.dim as f64 * (2.0 * PI).ln())
    }

    /// `A^s` with `A = -Δ`: multiplies `u_j` by `|j|^{2s}`; the zero mode maps to 0 for `s > 0`.
    pub fn apply_a_power(&self, s: f64) -> Result<Self> {
        if !(s >= 0.0) {
            return Err(invalid(format!("A power must be nonnegative, got {s}")));
        }
        Ok(self.map_modes(|j, c| {
            let n2 = mode_norm_sq(j);
            if s == 0.0 {
                c
            } else if n2 == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                c * n2.powf(s)
            }
        }))
    }

    /// `e^{τ A^{β/2}}`: multiplies `u_j` by `e^{τ |j|^β}`.
    pub fn apply_gevrey_multiplier(&self, tau: f64, beta: f64) -> Result<Self> {
        check_gevrey_args(tau, beta)?;
        let mut err = None;
        let out = self.map_modes(|j, c| {
            let e = gevrey_exponent(tau, beta, j);
            if e > LOG_CAP {
                err.get_or_insert(Error::Overflow { mode: j, exponent: e });
                c
            } else {
                c * e.exp()
            }
        });
        match err {
            Some(e) => Err(e),
            None => Ok(out),
        }
    }

    /// Components `∂_k f` with coefficients `i j_k u_j`.
    pub fn gradient(&self) -> Vec<SpectralField> {
        (0..self.dim)
            .map(|k| self.map_modes(|j, c| c * Complex64::new(0.0, j[k] as f64)))
            .collect()
    }

    /// Synthesis on an `N^dim` grid.
    pub fn to_grid(&self, n: usize) -> Result<GridField> {
        let required = min_resolution(self.cutoff);
        if n < required {
            return Err(Error::Resolution { given: n, required });
        }
        let mut buf = vec![Complex64::new(0.0, 0.0); n.pow(self.dim as u32)];
        let ni = n as i64;
        for (j, c) in self.modes() {
            let a = j[0].rem_euclid(ni) as usize;
            let idx = if self.dim == 1 {
                a
            } else {
                a * n + j[1].rem_euclid(ni) as usize
            };
            buf[idx] = c;
        }
        fft_nd(&mut buf, self.dim, n, true);
        let tol = 1e-12 * self.max_amplitude().max(1e-300) * (self.coeffs.len() as f64).sqrt();
        let worst = buf.iter().fold(0.0f64, |m, z| m.max(z.im.abs()));
        if worst > tol {
            return Err(Error::NotReal(format!(
                "synthesis imaginary residue {worst:e} exceeds {tol:e}"
            )));
        }
        Ok(GridField {
            dim: self.dim,
            n,
            values: buf.into_iter().map(|z| z.re).collect(),
        })
    }

    /// Analysis of grid samples, keeping modes with `|j|_∞ ≤ J`.
    pub fn from_grid(g: &GridField, cutoff: usize) -> Result<Self> {
        let required = min_resolution(cutoff);
        if g.n < required {
            return Err(Error::Resolution {
                given: g.n,
                required,
            });
        }
        let n = g.n;
        let mut buf: Vec<Complex64> = g.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft_nd(&mut buf, g.dim, n, false);
        let scale = 1.0 / (n as f64).powi(g.dim as i32);
        let mut out = Self::zeros(g.dim, cutoff)?;
        let ni = n as i64;
        let raw: Vec<Complex64> = out
            .mode_iter()
            .map(|j| {
                let a = j[0].rem_euclid(ni) as usize;
                let idx = if g.dim == 1 {
                    a
                } else {
                    a * n + j[1].rem_euclid(ni) as usize
                };
                buf[idx] * scale
            })
            .collect();
        // Enforce exact symmetry; real input already satisfies it up to rounding.
        let modes: Vec<Mode> = out.mode_iter().collect();
        for (i, j) in modes.into_iter().enumerate() {
            let k = out.index([-j[0], -j[1]]).expect("box is symmetric");
            let v = (raw[i] + raw[k].conj()) * 0.5;
            out.coeffs[i] = if i == k { Complex64::new(v.re, 0.0) } else { v };
        }
        Ok(out)
    }

    /// Truncated product with 2/3-rule dealiasing; exact convolution restricted to `|j|_∞ ≤ J`.
    pub fn pointwise_product(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        let cutoff = self.cutoff.max(other.cutoff);
        let a = self.with_cutoff(cutoff);
        let b = other.with_cutoff(cutoff);
        let n = dealias_resolution(cutoff);
        let ga = a.to_grid(n)?;
        let gb = b.to_grid(n)?;
        let values = ga.values.iter().zip(&gb.values).map(|(x, y)| x * y).collect();
        let prod = GridField {
            dim: self.dim,
            n,
            values,
        };
        Self::from_grid(&prod, self.cutoff)
    }

    /// `Σ_j |u_j|`, a rigorous upper bound for the sup norm.
    pub fn sobolev_linf_bound(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).sum()
    }

    /// Writes the field snapshot format: header `dim J t`, then `j1 [j2] re im`
    /// per retained mode in lexicographic order, 17 significant digits.
    pub fn write_snapshot<W: Write>(&self, t: f64, mut w: W) -> Result<()> {
        writeln!(w, "{} {} {:.16e}", self.dim, self.cutoff, t)?;
        let mut line = String::new();
        for (j, c) in self.modes() {
            line.clear();
            if self.dim == 1 {
                write!(line, "{}", j[0]).unwrap();
            } else {
                write!(line, "{} {}", j[0], j[1]).unwrap();
            }
            writeln!(w, "{} {:.16e} {:.16e}", line, c.re, c.im)?;
        }
        Ok(())
    }

    /// Parses the snapshot format written by [`SpectralField::write_snapshot`].
    pub fn read_snapshot<R: BufRead>(r: R) -> Result<(Self, f64)> {
        let mut lines = r.lines().enumerate();
        let (_, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "empty snapshot".into(),
        })?;
        let header = header?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 3 {
            return Err(Error::Parse {
                line: 1,
                msg: format!("expected `dim J t`, got `{header}`"),
            });
        }
        let perr = |line: usize, msg: String| Error::Parse { line, msg };
        let dim: usize = h[0].parse().map_err(|e| perr(1, format!("dim: {e}")))?;
        let cutoff: usize = h[1].parse().map_err(|e| perr(1, format!("J: {e}")))?;
        let t: f64 = h[2].parse().map_err(|e| perr(1, format!("t: {e}")))?;
        let mut f = Self::zeros(dim, cutoff)?;
        let mut seen = 0usize;
        for (ln, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != dim + 2 {
                return Err(perr(ln + 1, format!("expected {} columns", dim + 2)));
            }
            let mut j = [0i64; 2];
            for k in 0..dim {
                j[k] = parts[k]
                    .parse()
                    .map_err(|e| perr(ln + 1, format!("mode: {e}")))?;
            }
            let re: f64 = parts[dim]
                .parse()
                .map_err(|e| perr(ln + 1, format!("re: {e}")))?;
            let im: f64 = parts[dim + 1]
                .parse()
                .map_err(|e| perr(ln + 1, format!("im: {e}")))?;
            let i = f
                .index(j)
                .ok_or_else(|| perr(ln + 1, format!("mode {j:?} outside cutoff")))?;
            f.coeffs[i] = Complex64::new(re, im);
            seen += 1;
        }
        if seen != f.coeffs.len() {
            return Err(perr(0, format!("expected {} modes, read {seen}", f.coeffs.len())));
        }
        f.check_hermitian()?;
        Ok((f, t))
    }
}

/// `τ |j|^β`, the exponent of the Gevrey multiplier at mode `j`.
#[inline]
pub fn gevrey_exponent(tau: f64, beta: f64, j: Mode) -> f64 {
    let n = mode_norm(j);
    if n == 0.0 || tau == 0.0 {
        0.0
    } else {
        tau * n.powf(beta)
    }
}

pub(crate) fn check_gevrey_args(tau: f64, beta: f64) -> Result<()> {
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(invalid(format!("Gevrey radius must be finite and ≥ 0, got {tau}")));
    }
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(invalid(format!("β must lie in (0, 1], got {beta}")));
    }
    Ok(())
}

/// Numerically stable `log Σ e^{x_i}`; `-∞` for an empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}
