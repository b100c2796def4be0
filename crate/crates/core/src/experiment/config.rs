//! Experiment configuration and its flat `key=value` file form.
//!
//! Keys (one per line, `#` starts a comment, blank lines ignored):
//!
//! | key | meaning |
//! |-----|---------|
//! | `seeds` | comma separated list of `u64` seeds |
//! | `dim` | 1 or 2 |
//! | `cutoff` | Fourier cutoff `J` |
//! | `beta`, `delta` | Gevrey class of the coefficients |
//! | `margin`, `amplitude` | decay margin and scale of synthesized coefficients |
//! | `dt` | solver step |
//! | `t_min`, `t_max`, `points_per_decade` | log-spaced time grid |
//! | `resolution` | nodal measurement grid |
//! | `initial` | `sin3`, `cosx`, `cos_sum`, `flat` or `random` |
//! | `coefficients` | `none` or `random` |
//! | `c0`, `k`, `m`, `c3`, `cmain` | bound constant overrides (`auto` for default) |
//! | `nmax` | certifier order limit |
//! | `calibration_t` | training set is `t ≥ calibration_t` (`auto`: largest half) |
//! | `probe_angles` | directions per probe point for line certificates (2D) |
//! | `output_dir` | directory for CSV/JSON artifacts |

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;
use sha1::{Digest, Sha1};

use crate::bounds::{log_grid, t_max, ConstantOverrides};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialData {
    /// `sin 3x`.
    Sin3,
    /// `cos x`.
    CosX,
    /// `cos x + cos y`.
    CosSum,
    /// Unit-modulus coefficients with random phases up to the cutoff.
    Flat,
    /// Gevrey-decaying random field, same recipe as the coefficients.
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientMode {
    None,
    Random,
}

impl InitialData {
    fn name(self) -> &'static str {
        match self {
            InitialData::Sin3 => "sin3",
            InitialData::CosX => "cosx",
            InitialData::CosSum => "cos_sum",
            InitialData::Flat => "flat",
            InitialData::Random => "random",
        }
    }
}

impl FromStr for InitialData {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "sin3" => InitialData::Sin3,
            "cosx" => InitialData::CosX,
            "cos_sum" => InitialData::CosSum,
            "flat" => InitialData::Flat,
            "random" => InitialData::Random,
            other => return Err(Error::Config(format!("unknown initial data `{other}`"))),
        })
    }
}

impl FromStr for CoefficientMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(CoefficientMode::None),
            "random" => Ok(CoefficientMode::Random),
            other => Err(Error::Config(format!("unknown coefficient mode `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub seeds: Vec<u64>,
    pub dim: usize,
    pub cutoff: usize,
    pub beta: f64,
    pub delta: f64,
    pub margin: f64,
    pub amplitude: f64,
    pub dt: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub points_per_decade: usize,
    pub resolution: usize,
    pub initial: InitialData,
    pub coefficients: CoefficientMode,
    pub overrides: ConstantOverrides,
    pub nmax: usize,
    pub calibration_t: Option<f64>,
    pub probe_angles: usize,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seeds: vec![0],
            dim: 1,
            cutoff: 32,
            beta: 1.0,
            delta: 0.1,
            margin: 2.0,
            amplitude: 0.5,
            dt: 1e-3,
            t_min: 1e-2,
            t_max: t_max(),
            points_per_decade: 8,
            resolution: 256,
            initial: InitialData::Random,
            coefficients: CoefficientMode::Random,
            overrides: ConstantOverrides::default(),
            nmax: crate::certifier::DEFAULT_NMAX,
            calibration_t: None,
            probe_angles: 4,
            output_dir: PathBuf::from("out"),
        }
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_else(|| "auto".into())
}

fn parse_opt(line: usize, s: &str) -> Result<Option<f64>> {
    if s == "auto" {
        Ok(None)
    } else {
        parse(line, s).map(Some)
    }
}

fn parse<T: FromStr>(line: usize, s: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    s.parse().map_err(|e: T::Err| Error::Parse {
        line,
        msg: format!("`{s}`: {e}"),
    })
}

impl ExperimentConfig {
    /// Log-spaced grid from `t_min` to `t_max`, always containing both ends.
    pub fn t_grid(&self) -> Vec<f64> {
        let decades = (self.t_max / self.t_min).log10();
        let count = ((decades * self.points_per_decade as f64).round() as usize + 1).max(2);
        log_grid(self.t_min, self.t_max, count)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.seeds.is_empty() {
            return fail("no seeds".into());
        }
        if self.dim != 1 && self.dim != 2 {
            return fail(format!("dim must be 1 or 2, got {}", self.dim));
        }
        if self.cutoff == 0 {
            return fail("cutoff must be positive".into());
        }
        if !(self.t_min > 0.0 && self.t_min < self.t_max) {
            return fail(format!("empty t grid: t_min = {}, t_max = {}", self.t_min, self.t_max));
        }
        if self.t_max > t_max() * (1.0 + 1e-15) {
            return fail(format!("t_max = {} exceeds e^-1", self.t_max));
        }
        if self.points_per_decade == 0 {
            return fail("points_per_decade must be positive".into());
        }
        if !(self.dt > 0.0) {
            return fail("dt must be positive".into());
        }
        if self.nmax == 0 || self.probe_angles == 0 {
            return fail("nmax and probe_angles must be positive".into());
        }
        crate::gevrey::GevreyParams::new(self.beta, self.delta)?;
        let grid = self.t_grid();
        if grid.windows(2).any(|w| !(w[0] < w[1])) {
            return fail("t grid is not strictly increasing".into());
        }
        if let Some(tc) = self.calibration_t {
            let train = grid.iter().filter(|&&t| t >= tc).count();
            if train < 2 || train == grid.len() {
                return fail(format!("calibration_t = {tc} leaves no usable train/test split"));
            }
        }
        Ok(())
    }

    /// The file form. `parse` of this text reproduces `self` exactly.
    pub fn to_text(&self) -> String {
        let seeds: Vec<String> = self.seeds.iter().map(u64::to_string).collect();
        let o = &self.overrides;
        let lines = [
            format!("seeds={}", seeds.join(",")),
            format!("dim={}", self.dim),
            format!("cutoff={}", self.cutoff),
            format!("beta={:?}", self.beta),
            format!("delta={:?}", self.delta),
            format!("margin={:?}", self.margin),
            format!("amplitude={:?}", self.amplitude),
            format!("dt={:?}", self.dt),
            format!("t_min={:?}", self.t_min),
            format!("t_max={:?}", self.t_max),
            format!("points_per_decade={}", self.points_per_decade),
            format!("resolution={}", self.resolution),
            format!("initial={}", self.initial.name()),
            format!(
                "coefficients={}",
                match self.coefficients {
                    CoefficientMode::None => "none",
                    CoefficientMode::Random => "random",
                }
            ),
            format!("c0={}", opt(o.c0)),
            format!("k={}", opt(o.k)),
            format!("m={}", opt(o.m)),
            format!("c3={}", opt(o.c3)),
            format!("cmain={}", opt(o.cmain)),
            format!("nmax={}", self.nmax),
            format!("calibration_t={}", opt(self.calibration_t)),
            format!("probe_angles={}", self.probe_angles),
            format!("output_dir={}", self.output_dir.display()),
        ];
        let mut s = lines.join("\n");
        s.push('\n');
        s
    }

    /// Parses the file form on top of the defaults. Unknown keys are errors.
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body.split_once('=').ok_or_else(|| Error::Parse {
                line,
                msg: format!("expected key=value, got `{body}`"),
            })?;
            c.set(line, key.trim(), value.trim())?;
        }
        Ok(c)
    }

    /// Sets one key from its text value; `line` is used in error messages.
    pub fn set(&mut self, line: usize, key: &str, v: &str) -> Result<()> {
        match key {
            "seeds" => {
                self.seeds = v
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| parse(line, s.trim()))
                    .collect::<Result<_>>()?
            }
            "dim" => self.dim = parse(line, v)?,
            "cutoff" => self.cutoff = parse(line, v)?,
            "beta" => self.beta = parse(line, v)?,
            "delta" => self.delta = parse(line, v)?,
            "margin" => self.margin = parse(line, v)?,
            "amplitude" => self.amplitude = parse(line, v)?,
            "dt" => self.dt = parse(line, v)?,
            "t_min" => self.t_min = parse(line, v)?,
            "t_max" => self.t_max = parse(line, v)?,
            "points_per_decade" => self.points_per_decade = parse(line, v)?,
            "resolution" => self.resolution = parse(line, v)?,
            "initial" => self.initial = v.parse()?,
            "coefficients" => self.coefficients = v.parse()?,
            "c0" => self.overrides.c0 = parse_opt(line, v)?,
            "k" => self.overrides.k = parse_opt(line, v)?,
            "m" => self.overrides.m = parse_opt(line, v)?,
            "c3" => self.overrides.c3 = parse_opt(line, v)?,
            "cmain" => self.overrides.cmain = parse_opt(line, v)?,
            "nmax" => self.nmax = parse(line, v)?,
            "calibration_t" => self.calibration_t = parse_opt(line, v)?,
            "probe_angles" => self.probe_angles = parse(line, v)?,
            "output_dir" => self.output_dir = PathBuf::from(v),
            other => {
                return Err(Error::Parse {
                    line,
                    msg: format!("unknown key `{other}`"),
                })
            }
        }
        Ok(())
    }

    /// Git blob hash (`sha1("blob <len>\0" + text)`) of the file form.
    pub fn content_hash(&self) -> String {
        git_blob_sha1(self.to_text().as_bytes())
    }
}

pub fn git_blob_sha1(bytes: &[u8]) -> String {
    let mut h = Sha1::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}
