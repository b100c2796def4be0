//! `nodal-lab`: command line front end for the nodal set laboratory.

use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use nodal_lab::bounds::{
    bisect_m_star, choose_r, global_bound_from_covering, main_bound, n0, stirling_c3_check, BoundConstants,
    STIRLING_NMAX,
};
use nodal_lab::certifier::{certify_on_line, certify_zero_bound, CertificateRow, Segment, CERTIFICATE_CSV_HEADER};
use nodal_lab::experiment::sweep::{coefficients, initial_field};
use nodal_lab::experiment::{fit_log_law, run_sweep, verify_suite, write_outputs, ExperimentConfig};
use nodal_lab::nodal::{measure, NODAL_CSV_HEADER};
use nodal_lab::solver::{solve, write_diagnostics_csv, SolverConfig};
use nodal_lab::SpectralField;

#[derive(Parser)]
#[command(name = "nodal-lab", version, about = "Nodal sets of parabolic equations with Gevrey coefficients")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Every flag overrides the key of the same name in the config file.
#[derive(Args, Clone, Debug, Default)]
struct ConfigArgs {
    /// Flat key=value config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seeds: Option<String>,
    #[arg(long, global = true)]
    dim: Option<String>,
    #[arg(long, global = true)]
    cutoff: Option<String>,
    #[arg(long, global = true)]
    beta: Option<String>,
    #[arg(long, global = true)]
    delta: Option<String>,
    #[arg(long, global = true)]
    margin: Option<String>,
    #[arg(long, global = true)]
    amplitude: Option<String>,
    #[arg(long, global = true)]
    dt: Option<String>,
    #[arg(long, global = true)]
    t_min: Option<String>,
    #[arg(long, global = true)]
    t_max: Option<String>,
    #[arg(long, global = true)]
    points_per_decade: Option<String>,
    #[arg(long, global = true)]
    resolution: Option<String>,
    #[arg(long, global = true)]
    initial: Option<String>,
    #[arg(long, global = true)]
    coefficients: Option<String>,
    #[arg(long, global = true)]
    c0: Option<String>,
    #[arg(long, global = true)]
    k: Option<String>,
    #[arg(long, global = true)]
    m: Option<String>,
    #[arg(long, global = true)]
    c3: Option<String>,
    #[arg(long, global = true)]
    cmain: Option<String>,
    #[arg(long, global = true)]
    nmax: Option<String>,
    #[arg(long, global = true)]
    calibration_t: Option<String>,
    #[arg(long, global = true)]
    probe_angles: Option<String>,
    #[arg(long, global = true)]
    output_dir: Option<String>,
}

impl ConfigArgs {
    fn load(&self) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => {
                let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                ExperimentConfig::parse(&text)?
            }
            None => ExperimentConfig::default(),
        };
        let flags = [
            ("seeds", &self.seeds),
            ("dim", &self.dim),
            ("cutoff", &self.cutoff),
            ("beta", &self.beta),
            ("delta", &self.delta),
            ("margin", &self.margin),
            ("amplitude", &self.amplitude),
            ("dt", &self.dt),
            ("t_min", &self.t_min),
            ("t_max", &self.t_max),
            ("points_per_decade", &self.points_per_decade),
            ("resolution", &self.resolution),
            ("initial", &self.initial),
            ("coefficients", &self.coefficients),
            ("c0", &self.c0),
            ("k", &self.k),
            ("m", &self.m),
            ("c3", &self.c3),
            ("cmain", &self.cmain),
            ("nmax", &self.nmax),
            ("calibration_t", &self.calibration_t),
            ("probe_angles", &self.probe_angles),
            ("output_dir", &self.output_dir),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(0, key, v).with_context(|| format!("--{key}"))?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize and certify coefficient bundles, one directory per seed.
    Synth {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Solve on the time grid; writes diagnostics.csv and snapshot files.
    Solve {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Measure the nodal set of a snapshot file.
    Measure {
        snapshot: PathBuf,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Certify a zero count bound for a snapshot: on `[x - h, x + h]` in 1D,
    /// on the line through `x,y` at angle `theta` within `2r` in 2D.
    Certify {
        snapshot: PathBuf,
        /// Point, `x` or `x,y`.
        #[arg(long, default_value = "3.141592653589793")]
        at: String,
        /// Half length (1D) or `r` (2D).
        #[arg(long, default_value_t = 0.25)]
        r: f64,
        #[arg(long, default_value_t = 0.0)]
        theta: f64,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Evaluate the bound formulas on the time grid; writes bounds.json.
    Bound {
        /// Dirichlet quotient bound q0 used in the constants.
        #[arg(long, default_value_t = 1.0)]
        q0: f64,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Full sweep; writes all five artifacts.
    Sweep {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Fit `log y = a log(1/t) + b log log(1/t) + c` to a CSV column
    /// (maximum over rows sharing a `t`).
    Fit {
        csv: PathBuf,
        #[arg(long, default_value = "value")]
        column: String,
    },
    /// Run the verification suite; writes report.json.
    Verify {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
}

fn write_json(path: &Path, v: &serde_json::Value) -> anyhow::Result<()> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    fs::write(path, s).with_context(|| format!("writing {}", path.display()))
}

fn read_snapshot(path: &Path) -> anyhow::Result<(SpectralField, f64)> {
    let f = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(SpectralField::read_snapshot(BufReader::new(f))?)
}

fn synth(cfg: &ExperimentConfig) -> anyhow::Result<bool> {
    for &seed in &cfg.seeds {
        let dir = cfg.output_dir.join(format!("seed_{seed}"));
        fs::create_dir_all(&dir)?;
        let c = coefficients(cfg, seed)?;
        c.write_bundle(&dir, Some(seed))?;
        println!("{}", dir.display());
    }
    Ok(true)
}

fn solve_cmd(cfg: &ExperimentConfig) -> anyhow::Result<bool> {
    let grid = cfg.t_grid();
    let snaps = cfg.output_dir.join("snapshots");
    fs::create_dir_all(&snaps)?;
    let hash = cfg.content_hash();
    let mut out = Vec::new();
    for (i, &seed) in cfg.seeds.iter().enumerate() {
        let coeffs = coefficients(cfg, seed)?;
        let u0 = initial_field(cfg, seed)?;
        let solver = SolverConfig {
            dt: cfg.dt.min(SolverConfig::max_stable_dt(&grid, &coeffs, cfg.cutoff)),
            t0: *grid.last().expect("validated grid"),
            snapshot_times: grid.clone(),
            gevrey_radii: vec![(cfg.delta, cfg.beta)],
        };
        let rec = solve(&u0, &coeffs, &solver)?;
        let mut buf = Vec::new();
        write_diagnostics_csv(&rec, &[("seed", seed.to_string()), ("config_hash", hash.clone())], &mut buf)?;
        let skip = if i == 0 { 0 } else { buf.iter().position(|&b| b == b'\n').map_or(0, |p| p + 1) };
        out.extend_from_slice(&buf[skip..]);
        for (k, s) in rec.snapshots.iter().enumerate() {
            let f = fs::File::create(snaps.join(format!("seed{seed}_{k:03}.snap")))?;
            s.u.write_snapshot(s.t, io::BufWriter::new(f))?;
        }
    }
    fs::write(cfg.output_dir.join("diagnostics.csv"), out)?;
    Ok(true)
}

fn measure_cmd(path: &Path, cfg: &ExperimentConfig) -> anyhow::Result<bool> {
    let (u, t) = read_snapshot(path)?;
    let m = measure(&u, t, cfg.resolution)?;
    println!("{NODAL_CSV_HEADER}\n{}", m.csv_row());
    Ok(true)
}

fn certify_cmd(path: &Path, at: &str, r: f64, theta: f64, cfg: &ExperimentConfig) -> anyhow::Result<bool> {
    let (u, _) = read_snapshot(path)?;
    let coords: Vec<f64> = at
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .context("--at")?;
    let (p, out) = match (u.dim(), coords.as_slice()) {
        (1, [x]) => ([*x, 0.0], certify_zero_bound(&u, Segment::new(*x, r)?, cfg.nmax)?),
        (2, [x, y]) => ([*x, *y], certify_on_line(&u, [*x, *y], theta, r, cfg.nmax)?),
        (d, c) => bail!("--at has {} coordinates for a {d}D snapshot", c.len()),
    };
    println!("{CERTIFICATE_CSV_HEADER}\n{}", CertificateRow::new(p, theta, r, &out).csv_row());
    Ok(out.nstar().is_some())
}

fn bound_cmd(q0: f64, cfg: &ExperimentConfig) -> anyhow::Result<bool> {
    let grid = cfg.t_grid();
    let coeffs = coefficients(cfg, cfg.seeds[0])?;
    let mut bc = BoundConstants::new(q0, coeffs.constants, coeffs.params, cfg.overrides)?;
    let bisected = cfg.overrides.m.is_none();
    if bisected {
        bc.m = bisect_m_star(&bc, cfg.dim, &grid)?;
    }
    let hash = cfg.content_hash();
    let mut rows = Vec::new();
    for &t in &grid {
        let r = choose_r(t, bc.beta, bc.m);
        let mb = main_bound(t, bc.beta, bc.cmain)?;
        let cov = global_bound_from_covering(t, &bc, cfg.dim)?;
        rows.push(json!({
            "t": t, "r": r, "n0": n0(t, r, bc.k, cfg.dim),
            "main_bound": mb, "covering": cov, "covering_over_main": cov / mb,
            "config_hash": hash,
        }));
    }
    fs::create_dir_all(&cfg.output_dir)?;
    write_json(
        &cfg.output_dir.join("bounds.json"),
        &json!({
            "config_hash": hash,
            "constants": bc,
            "m_bisected": bisected,
            "stirling_c3_max": stirling_c3_check(STIRLING_NMAX)?,
            "rows": rows,
        }),
    )?;
    Ok(true)
}

fn sweep_cmd(cfg: &ExperimentConfig) -> anyhow::Result<bool> {
    let res = run_sweep(cfg)?;
    write_outputs(cfg, &res, &cfg.output_dir)?;
    let failed = res.verdicts.iter().filter(|v| !v.pass).count();
    println!(
        "{} rows, Cmain = {:.6e}, {} of {} test verdicts failed",
        res.rows.len(),
        res.cmain,
        failed,
        res.verdicts.len()
    );
    Ok(res.dominance_holds())
}

fn fit_cmd(path: &Path, column: &str) -> anyhow::Result<bool> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().context("empty CSV")?.split(',').collect();
    let find = |name: &str| header.iter().position(|h| *h == name);
    let ti = find("t").context("no `t` column")?;
    let yi = find(column).with_context(|| format!("no `{column}` column"))?;
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for (n, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        let parse = |i: usize| -> anyhow::Result<f64> {
            let cell = cells.get(i).with_context(|| format!("row {} is short", n + 2))?;
            cell.parse().with_context(|| format!("row {}: `{cell}`", n + 2))
        };
        let (t, y) = (parse(ti)?, parse(yi)?);
        match pts.iter_mut().find(|p| p.0 == t) {
            Some(p) => p.1 = p.1.max(y),
            None => pts.push((t, y)),
        }
    }
    let fit = fit_log_law(&pts)?;
    println!("{}", serde_json::to_string_pretty(&fit)?);
    Ok(true)
}

fn verify_cmd(cfg: &ExperimentConfig) -> anyhow::Result<bool> {
    let report = verify_suite(cfg);
    fs::create_dir_all(&cfg.output_dir)?;
    write_json(&cfg.output_dir.join("report.json"), &serde_json::to_value(&report)?)?;
    let mut out = io::stdout().lock();
    for item in &report.items {
        writeln!(out, "{:<22} {}", item.name, if item.pass { "pass" } else { "FAIL" })?;
    }
    Ok(report.pass)
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Synth { cfg } => synth(&cfg.load()?),
        Command::Solve { cfg } => solve_cmd(&cfg.load()?),
        Command::Measure { snapshot, cfg } => measure_cmd(&snapshot, &cfg.load()?),
        Command::Certify {
            snapshot,
            at,
            r,
            theta,
            cfg,
        } => certify_cmd(&snapshot, &at, r, theta, &cfg.load()?),
        Command::Bound { q0, cfg } => bound_cmd(q0, &cfg.load()?),
        Command::Sweep { cfg } => sweep_cmd(&cfg.load()?),
        Command::Fit { csv, column } => fit_cmd(&csv, &column),
        Command::Verify { cfg } => verify_cmd(&cfg.load()?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
