//! Nodal set measurement: 1D roots, 2D contour length, line probes and local `L²` ratios.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::fourier::{min_resolution, SpectralField};

pub type Point = [f64; 2];

const TWO_PI: f64 = 2.0 * PI;

/// Zeros of a 1D field on `[0, 2π)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NodalSet1D {
    pub zeros: Vec<f64>,
    /// Near-zeros without a sign change (`|u| < 1e-8 sup` grid minima, or cells
    /// the curvature bound could not clear); not counted.
    pub suspects: Vec<f64>,
    pub tolerance: f64,
}

impl NodalSet1D {
    pub fn count(&self) -> usize {
        self.zeros.len()
    }
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut flo = f(lo);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Cells narrower than this that still cannot be cleared are reported as suspects.
const MIN_CELL: f64 = 1e-12;

/// Searches `[x0, x1]`, where `f` has the same nonzero sign at both ends, for
/// hidden sign changes. The cell is zero free once `min(|f0|, |f1|)` exceeds
/// `m2 h² / 8`, the deviation bound from the linear interpolant.
#[allow(clippy::too_many_arguments)]
fn refine_cell(
    eval: &impl Fn(f64) -> f64,
    x0: f64,
    x1: f64,
    f0: f64,
    f1: f64,
    m2: f64,
    zeros: &mut Vec<f64>,
    suspects: &mut Vec<f64>,
) {
    let h = x1 - x0;
    if f0.abs().min(f1.abs()) > m2 * h * h / 8.0 {
        return;
    }
    let xm = 0.5 * (x0 + x1);
    if h < MIN_CELL {
        suspects.push(xm.rem_euclid(TWO_PI));
        return;
    }
    let fm = eval(xm);
    if fm == 0.0 {
        suspects.push(xm.rem_euclid(TWO_PI));
    } else if (fm > 0.0) != (f0 > 0.0) {
        zeros.push(bisect(eval, x0, xm, MIN_CELL).rem_euclid(TWO_PI));
        zeros.push(bisect(eval, xm, x1, MIN_CELL).rem_euclid(TWO_PI));
    } else {
        refine_cell(eval, x0, xm, f0, fm, m2, zeros, suspects);
        refine_cell(eval, xm, x1, fm, f1, m2, zeros, suspects);
    }
}

/// Sign changes on an `oversample · J` grid, each refined by bisection to `1e-12`.
/// Cells without a sign change are subdivided until the curvature bound
/// `Σ|j|²|u_j|` rules out a hidden pair of zeros.
pub fn zeros_1d(f: &SpectralField, oversample: usize) -> Result<NodalSet1D> {
    if f.dim() != 1 {
        return Err(Error::DimMismatch {
            left: f.dim(),
            right: 1,
        });
    }
    if f.is_zero() {
        return Err(Error::ZeroField);
    }
    let m = (oversample * f.cutoff()).max(min_resolution(f.cutoff()));
    let g = f.to_grid(m)?;
    let v = g.values();
    let h = TWO_PI / m as f64;
    let sup = f.sobolev_linf_bound();
    let m2: f64 = f.modes().map(|(j, c)| (j[0] * j[0]) as f64 * c.norm()).sum();
    let tol = MIN_CELL;
    let eval = |x: f64| f.eval(&[x]);
    let mut zeros = Vec::new();
    let mut suspects = Vec::new();
    for k in 0..m {
        let a = v[k];
        let b = v[(k + 1) % m];
        let prev = v[(k + m - 1) % m];
        if a == 0.0 {
            if prev * b < 0.0 {
                zeros.push(k as f64 * h);
            } else {
                suspects.push(k as f64 * h);
            }
            continue;
        }
        if a * b < 0.0 {
            let x = bisect(eval, k as f64 * h, (k + 1) as f64 * h, tol);
            zeros.push(x.rem_euclid(TWO_PI));
        } else {
            if a.abs() < 1e-8 * sup && a.abs() <= prev.abs() && a.abs() <= b.abs() && prev * a > 0.0 {
                suspects.push(k as f64 * h);
            }
            if b != 0.0 {
                refine_cell(&eval, k as f64 * h, (k + 1) as f64 * h, a, b, m2, &mut zeros, &mut suspects);
            }
        }
    }
    zeros.sort_by(f64::total_cmp);
    suspects.sort_by(f64::total_cmp);
    suspects.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    Ok(NodalSet1D {
        zeros,
        suspects,
        tolerance: tol,
    })
}

/// Polyline approximation of a 2D nodal set.
#[derive(Clone, Debug, PartialEq)]
pub struct NodalCurve2D {
    pub segments: Vec<[Point; 2]>,
    pub total_length: f64,
    pub resolution: usize,
    /// Length at twice the resolution, for a convergence estimate.
    pub refined_length: Option<f64>,
    /// Segments live on the torus `[0, 2π)²` and wrap around.
    pub periodic: bool,
}

impl NodalCurve2D {
    /// Builds a planar (non-periodic) curve from explicit segments.
    pub fn from_segments(segments: Vec<[Point; 2]>) -> Self {
        let total_length = segments.iter().map(seg_len).sum();
        Self {
            segments,
            total_length,
            resolution: 0,
            refined_length: None,
            periodic: false,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Writes `x1,y1,x2,y2` per segment.
    pub fn write_polyline_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x1,y1,x2,y2")?;
        for [a, b] in &self.segments {
            writeln!(w, "{:.16e},{:.16e},{:.16e},{:.16e}", a[0], a[1], b[0], b[1])?;
        }
        Ok(())
    }
}

fn seg_len(s: &[Point; 2]) -> f64 {
    ((s[1][0] - s[0][0]).powi(2) + (s[1][1] - s[0][1]).powi(2)).sqrt()
}

/// Marching squares on the periodic `N × N` synthesis. Saddle cells are
/// resolved by the sign of the cell-center average.
pub fn contour_segments(f: &SpectralField, n: usize) -> Result<Vec<[Point; 2]>> {
    let g = f.to_grid(n)?;
    let h = TWO_PI / n as f64;
    let mut out = Vec::new();
    for k1 in 0..n as i64 {
        for k2 in 0..n as i64 {
            let x0 = k1 as f64 * h;
            let y0 = k2 as f64 * h;
            let corners = [
                ([x0, y0], g.at(k1, k2)),
                ([x0 + h, y0], g.at(k1 + 1, k2)),
                ([x0 + h, y0 + h], g.at(k1 + 1, k2 + 1)),
                ([x0, y0 + h], g.at(k1, k2 + 1)),
            ];
            let pos: [bool; 4] = std::array::from_fn(|i| corners[i].1 > 0.0);
            let mut crossings: Vec<(usize, Point)> = Vec::with_capacity(4);
            for e in 0..4 {
                let (pa, va) = corners[e];
                let (pb, vb) = corners[(e + 1) % 4];
                if pos[e] != pos[(e + 1) % 4] {
                    let s = va / (va - vb);
                    crossings.push((e, [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])]));
                }
            }
            match crossings.len() {
                2 => out.push([crossings[0].1, crossings[1].1]),
                4 => {
                    let center = corners.iter().map(|c| c.1).sum::<f64>() / 4.0;
                    let p = |e: usize| crossings[e].1;
                    if (center > 0.0) == pos[0] {
                        // corners 0 and 2 connect through the center; cut off 1 and 3
                        out.push([p(0), p(1)]);
                        out.push([p(2), p(3)]);
                    } else {
                        out.push([p(3), p(0)]);
                        out.push([p(1), p(2)]);
                    }
                }
                _ => {}
            }
        }
    }
    Ok(out)
}

/// Nodal length of a 2D field at resolution `N`, with the value at `2N`.
pub fn nodal_length_2d(f: &SpectralField, n: usize) -> Result<NodalCurve2D> {
    if f.dim() != 2 {
        return Err(Error::DimMismatch {
            left: f.dim(),
            right: 2,
        });
    }
    let required = (4 * f.cutoff()).max(min_resolution(f.cutoff()));
    if n < required {
        return Err(Error::Resolution { given: n, required });
    }
    let segments = contour_segments(f, n)?;
    let total_length = segments.iter().map(seg_len).sum();
    let refined: f64 = contour_segments(f, 2 * n)?.iter().map(seg_len).sum();
    Ok(NodalCurve2D {
        segments,
        total_length,
        resolution: n,
        refined_length: Some(refined),
        periodic: true,
    })
}

/// Smallest `|∇f|` at segment midpoints relative to the `ℓ¹` sup bound of `f`.
pub fn min_gradient_ratio(f: &SpectralField, curve: &NodalCurve2D) -> f64 {
    let grad = f.gradient();
    let sup = f.sobolev_linf_bound();
    curve
        .segments
        .iter()
        .map(|[a, b]| {
            let m = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
            let gx = grad[0].eval(&m);
            let gy = grad[1].eval(&m);
            (gx * gx + gy * gy).sqrt() / sup
        })
        .fold(f64::INFINITY, f64::min)
}

/// Samples `s ↦ f(p + s (cos θ, sin θ))` at `samples` equispaced `s ∈ [-halflen, halflen]`.
pub fn line_restriction(
    f: &SpectralField,
    p: Point,
    theta: f64,
    halflen: f64,
    samples: usize,
) -> Vec<(f64, f64)> {
    let e = [theta.cos(), theta.sin()];
    let samples = samples.max(2);
    (0..samples)
        .map(|k| {
            let s = -halflen + 2.0 * halflen * k as f64 / (samples - 1) as f64;
            (s, f.eval(&[p[0] + s * e[0], p[1] + s * e[1]]))
        })
        .collect()
}

/// Probe points `p_{±j}` near `p ± r e_j`, ordered `+1, -1, +2, -2`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbePointSet {
    pub center: Point,
    pub r: f64,
    pub dim: usize,
    pub points: Vec<Point>,
}

impl ProbePointSet {
    /// Probes exactly at `p ± r e_j`.
    pub fn new(center: Point, r: f64, dim: usize) -> Result<Self> {
        if !(r > 0.0) {
            return Err(invalid(format!("probe radius must be positive, got {r}")));
        }
        if dim != 1 && dim != 2 {
            return Err(Error::UnsupportedDim(dim));
        }
        let mut points = Vec::with_capacity(2 * dim);
        for j in 0..dim {
            for sign in [1.0, -1.0] {
                let mut q = center;
                q[j] += sign * r;
                points.push(q);
            }
        }
        Ok(Self {
            center,
            r,
            dim,
            points,
        })
    }

    /// Probes displaced uniformly within `B_{r/10d}(p ± r e_j)`.
    pub fn jittered(center: Point, r: f64, dim: usize, seed: u64) -> Result<Self> {
        let mut set = Self::new(center, r, dim)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rad = r / (10.0 * dim as f64);
        for q in &mut set.points {
            let (a, b) = loop {
                let a: f64 = rng.gen_range(-1.0..1.0);
                let b: f64 = if dim == 2 { rng.gen_range(-1.0..1.0) } else { 0.0 };
                if a * a + b * b < 1.0 {
                    break (a, b);
                }
            };
            q[0] += a * rad;
            q[1] += b * rad;
        }
        Ok(set)
    }

    /// Each probe lies within `r/(10d)` of its nominal position.
    pub fn is_valid(&self) -> bool {
        let nominal = Self::new(self.center, self.r, self.dim).expect("validated on construction");
        let rad = self.r / (10.0 * self.dim as f64);
        self.points.iter().zip(&nominal.points).all(|(q, p)| {
            ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt() <= rad * (1.0 + 1e-12)
        })
    }
}

fn chord_crossings(segments: &[[Point; 2]], periodic: bool, q: Point, theta: f64, center: Point, radius: f64) -> usize {
    let e = [theta.cos(), theta.sin()];
    let shifts: &[f64] = if periodic { &[-TWO_PI, 0.0, TWO_PI] } else { &[0.0] };
    let mut count = 0;
    for [a0, b0] in segments {
        for &sx in shifts {
            for &sy in shifts {
                let a = [a0[0] + sx, a0[1] + sy];
                let b = [b0[0] + sx, b0[1] + sy];
                let sa = e[0] * (a[1] - q[1]) - e[1] * (a[0] - q[0]);
                let sb = e[0] * (b[1] - q[1]) - e[1] * (b[0] - q[0]);
                if (sa > 0.0) == (sb > 0.0) {
                    continue;
                }
                let s = sa / (sa - sb);
                let x = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
                let d2 = (x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2);
                if d2 <= radius * radius {
                    count += 1;
                }
            }
        }
    }
    count
}

/// Largest number of crossings between the curve and a chord of `B_{2r}(p)`
/// through any probe, over `angles` equispaced directions in `[0, π)`.
/// A lower bound for the true maximum over all lines.
pub fn max_line_intersections(curve: &NodalCurve2D, probes: &ProbePointSet, angles: usize) -> Result<usize> {
    if angles < 64 {
        return Err(invalid(format!("need at least 64 angles, got {angles}")));
    }
    if curve.is_empty() {
        return Ok(0);
    }
    let radius = 2.0 * probes.r;
    let mut best = 0;
    for &q in &probes.points {
        for k in 0..angles {
            let theta = PI * k as f64 / angles as f64;
            best = best.max(chord_crossings(
                &curve.segments,
                curve.periodic,
                q,
                theta,
                probes.center,
                radius,
            ));
        }
    }
    Ok(best)
}

/// `C n r^{d-1}`.
pub fn l03_estimate(n: usize, r: f64, d: usize, c: f64) -> f64 {
    c * n as f64 * r.powi(d as i32 - 1)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct L2Ratio {
    pub ratio: f64,
    pub refined_ratio: f64,
}

fn ball_integral(f: &SpectralField, p: Point, r: f64, n: usize) -> f64 {
    if f.dim() == 1 {
        let h = 2.0 * r / n as f64;
        (0..n)
            .map(|k| {
                let x = p[0] - r + (k as f64 + 0.5) * h;
                f.eval(&[x]).powi(2)
            })
            .sum::<f64>()
            * h
    } else {
        // Rows in y with exact chord extent; row coefficients make each
        // point evaluation O(J).
        let cutoff = f.cutoff() as i64;
        let hy = 2.0 * r / n as f64;
        let mut total = 0.0;
        let mut row = vec![Complex64::new(0.0, 0.0); (2 * cutoff + 1) as usize];
        for i in 0..n {
            let dy = -r + (i as f64 + 0.5) * hy;
            let y = p[1] + dy;
            let half = (r * r - dy * dy).max(0.0).sqrt();
            for (j1, slot) in (-cutoff..=cutoff).zip(row.iter_mut()) {
                *slot = (-cutoff..=cutoff)
                    .map(|j2| f.get([j1, j2]) * Complex64::from_polar(1.0, j2 as f64 * y))
                    .sum();
            }
            let hx = 2.0 * half / n as f64;
            let mut acc = 0.0;
            for k in 0..n {
                let x = p[0] - half + (k as f64 + 0.5) * hx;
                let v: f64 = (-cutoff..=cutoff)
                    .zip(&row)
                    .map(|(j1, c)| (c * Complex64::from_polar(1.0, j1 as f64 * x)).re)
                    .sum();
                acc += v * v;
            }
            total += acc * hx * hy;
        }
        total
    }
}

/// `‖f‖²_{L²(T^d)} / ‖f‖²_{L²(B_r(p))}` with midpoint quadrature at `N` and `2N`.
pub fn local_l2_ratio(f: &SpectralField, p: Point, r: f64, n: usize) -> Result<L2Ratio> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(invalid(format!("ball radius must lie in (0, 1], got {r}")));
    }
    let global = f.l2_norm().powi(2);
    let mut ratios = [0.0; 2];
    for (slot, res) in ratios.iter_mut().zip([n, 2 * n]) {
        let local = ball_integral(f, p, r, res);
        if !(local >= 1e-300) {
            return Err(Error::EffectiveVanishing(local));
        }
        *slot = global / local;
    }
    Ok(L2Ratio {
        ratio: ratios[0],
        refined_ratio: ratios[1],
    })
}

/// Least-squares fit `log ratio ≈ a log(1/r) + b` over the given radii.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ObservabilityFit {
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
}

pub fn observability_fit(f: &SpectralField, p: Point, radii: &[f64], n: usize) -> Result<ObservabilityFit> {
    if radii.len() < 2 {
        return Err(invalid("need at least two radii"));
    }
    let pts = radii
        .iter()
        .map(|&r| Ok(((1.0 / r).ln(), local_l2_ratio(f, p, r, n)?.refined_ratio.ln())))
        .collect::<Result<Vec<_>>>()?;
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (pts
        .iter()
        .map(|p| (p.1 - slope * p.0 - intercept).powi(2))
        .sum::<f64>()
        / k)
        .sqrt();
    Ok(ObservabilityFit {
        slope,
        intercept,
        residual,
    })
}

/// One row of `nodal.csv`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NodalMeasurement {
    pub t: f64,
    pub method: String,
    pub resolution: usize,
    pub value: f64,
    pub refined_value: f64,
    pub n_line_max: Option<usize>,
}

pub const NODAL_CSV_HEADER: &str = "t,method,resolution,value,refined_value,n_line_max";

impl NodalMeasurement {
    pub fn csv_row(&self) -> String {
        format!(
            "{:.16e},{},{},{:.16e},{:.16e},{}",
            self.t,
            self.method,
            self.resolution,
            self.value,
            self.refined_value,
            self.n_line_max.map(|n| n.to_string()).unwrap_or_default()
        )
    }
}

/// Measures `H^{d-1}(N)`: zero count in 1D, contour length in 2D.
pub fn measure(f: &SpectralField, t: f64, resolution: usize) -> Result<NodalMeasurement> {
    match f.dim() {
        1 => {
            let over = (resolution / f.cutoff().max(1)).max(2);
            let a = zeros_1d(f, over)?.count();
            let b = zeros_1d(f, 2 * over)?.count();
            Ok(NodalMeasurement {
                t,
                method: "zero_count".into(),
                resolution: over * f.cutoff().max(1),
                value: a as f64,
                refined_value: b as f64,
                n_line_max: None,
            })
        }
        _ => {
            let curve = nodal_length_2d(f, resolution)?;
            let probes = ProbePointSet::new([PI, PI], PI / 4.0, 2)?;
            let n = max_line_intersections(&curve, &probes, 64)?;
            Ok(NodalMeasurement {
                t,
                method: "contour_length".into(),
                resolution,
                value: curve.total_length,
                refined_value: curve.refined_length.unwrap_or(f64::NAN),
                n_line_max: Some(n),
            })
        }
    }
}
