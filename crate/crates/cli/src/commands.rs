//! One function per subcommand. Each returns the process exit code.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use log::info;
use serde::{Deserialize, Serialize};

use cocolab::assumptions::AssumptionOptions;
use cocolab::export::{write_bundles_csv, write_sweep_csv, SWEEP_COLUMNS};
use cocolab::lyapunov::{bundle_integrals, LyapunovRecord};
use cocolab::sweep::{geometric_gaps, summarize, SweepSummary};
use cocolab::{
    compute_bundles, difference_field, find_edge, le_norm_growth, run_sweep, verify_assumptions, AssumptionReport,
    EdgeEstimate, LabError, LyapunovEstimate, Sl2Generator, SweepRecord,
};

use crate::cache::{run_key, RunDir};
use crate::config::ExperimentConfig;
use crate::error::CliError;

pub struct Context {
    pub config: ExperimentConfig,
    pub out: PathBuf,
    pub use_cache: bool,
}

impl Context {
    fn run_dir(&self, command: &str, args: &[(&str, String)]) -> Result<RunDir, CliError> {
        let key = run_key(&self.config, command, args);
        let dir = RunDir::open(&self.out, &key, self.use_cache)?;
        info!("{command}: {} {}", if dir.hit { "cache hit" } else { "computing into" }, dir.path.display());
        Ok(dir)
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn print_file(path: &Path) -> Result<(), CliError> {
    print!("{}", std::fs::read_to_string(path)?);
    Ok(())
}

fn arg(x: f64) -> String {
    format!("{x:e}")
}

#[derive(Debug, Serialize, Deserialize)]
pub struct LeReport {
    pub t: f64,
    pub norm_growth: LyapunovEstimate,
    pub bundle: Option<LyapunovRecord>,
    /// `|L_norm − L_bundle|`.
    pub difference: Option<f64>,
    pub agree: Option<bool>,
    pub bundle_error: Option<String>,
}

pub fn le(ctx: &Context, t: f64) -> Result<i32, CliError> {
    let dir = ctx.run_dir("le", &[("t", arg(t))])?;
    let path = dir.file("le.json");
    if dir.hit {
        print_file(&path)?;
        return Ok(0);
    }
    let cfg = &ctx.config;
    let family = cfg.builder()(t);
    let norm = le_norm_growth(&family, cfg.numerics.norm_steps, cfg.numerics.burn_in, 0.0)?;
    let bundle = compute_bundles(&family, cfg.numerics.grid, &cfg.bundle_options()).and_then(|b| {
        let field = difference_field(&b)?;
        bundle_integrals(&b, Some(&field), &Sl2Generator::SHEAR, &cfg.quadrature_options())
    });
    let report = match &bundle {
        Ok(q) => {
            let diff = (q.lyapunov.value - norm.value).abs();
            LeReport {
                t,
                norm_growth: norm,
                bundle: Some(LyapunovRecord::new(t, &q.lyapunov, &q.derivative)),
                difference: Some(diff),
                agree: Some(diff <= 3.0 * (q.lyapunov.error_estimate + norm.error_estimate)),
                bundle_error: None,
            }
        }
        Err(e) => LeReport {
            t,
            norm_growth: norm,
            bundle: None,
            difference: None,
            agree: None,
            bundle_error: Some(e.to_string()),
        },
    };
    write_json(&path, &report)?;
    print_file(&path)?;
    match bundle {
        Ok(_) => {
            dir.finish()?;
            Ok(0)
        }
        Err(e) => {
            eprintln!("error: {e}");
            Ok(2)
        }
    }
}

pub fn bundles(ctx: &Context, t: f64) -> Result<i32, CliError> {
    let dir = ctx.run_dir("bundles", &[("t", arg(t))])?;
    let path = dir.file("bundles.csv");
    if !dir.hit {
        let cfg = &ctx.config;
        let b = compute_bundles(&cfg.builder()(t), cfg.numerics.grid, &cfg.bundle_options())?;
        let mut w = BufWriter::new(File::create(&path)?);
        write_bundles_csv(&mut w, &b)?;
        w.flush()?;
        dir.finish()?;
    }
    println!("{}", path.display());
    Ok(0)
}

fn locate_edge(cfg: &ExperimentConfig) -> Result<EdgeEstimate, CliError> {
    let (lo, hi) = cfg.bracket();
    Ok(find_edge(cfg.builder(), lo, hi, cfg.numerics.bisection_tol, &cfg.certify_options())?)
}

pub fn edge(ctx: &Context) -> Result<i32, CliError> {
    let dir = ctx.run_dir("edge", &[])?;
    let path = dir.file("edge.json");
    if !dir.hit {
        let e = locate_edge(&ctx.config)?;
        write_json(&path, &e)?;
        dir.finish()?;
        println!("t0 = {:.12} (bracket width {:e})", e.t0, e.width);
    }
    println!("{}", path.display());
    Ok(0)
}

/// `t₀` from the config, or by bisection.
fn edge_location(cfg: &ExperimentConfig) -> Result<f64, CliError> {
    match cfg.sweep.t0 {
        Some(t0) => Ok(t0),
        None => {
            let e = locate_edge(cfg)?;
            info!("edge located at {:.12}", e.t0);
            Ok(e.t0)
        }
    }
}

/// The headline numbers of an assumption report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AssumptionDigest {
    pub t: f64,
    pub gap: f64,
    pub growth_rate_a: f64,
    pub growth_ok: bool,
    pub quad_constant_c1: f64,
    pub c2: f64,
    pub interval_ok: bool,
    pub outside_floor_fraction: f64,
    pub outside_floor_ok: bool,
    pub s_bound_ok: bool,
    pub violations: usize,
}

impl AssumptionDigest {
    fn new(t: f64, gap: f64, r: &AssumptionReport) -> Self {
        Self {
            t,
            gap,
            growth_rate_a: r.growth_rate_a,
            growth_ok: r.growth_ok,
            quad_constant_c1: r.quad_constant_c1,
            c2: r.c2,
            interval_ok: r.interval_ok,
            outside_floor_fraction: r.outside_floor_fraction,
            outside_floor_ok: r.outside_floor_ok,
            s_bound_ok: r.s_bound_ok,
            violations: r.violations.len(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SweepReport {
    #[serde(flatten)]
    pub summary: SweepSummary,
    pub assumptions: Vec<AssumptionDigest>,
}

fn assumption_report(cfg: &ExperimentConfig, t: f64) -> Result<AssumptionReport, CliError> {
    let b = compute_bundles(&cfg.builder()(t), cfg.numerics.grid, &cfg.bundle_options())?;
    let field = difference_field(&b)?;
    Ok(verify_assumptions(&b.evaluator(), field.theta_c, field.d_min, &AssumptionOptions::default())?)
}

pub fn sweep(ctx: &Context) -> Result<i32, CliError> {
    let dir = ctx.run_dir("sweep", &[])?;
    let csv = dir.file("sweep.csv");
    let json = dir.file("summary.json");
    if !dir.hit {
        let cfg = &ctx.config;
        let t0 = edge_location(cfg)?;
        let gaps = geometric_gaps(cfg.sweep.g0, cfg.sweep.ratio, cfg.sweep.count);
        let records = run_sweep(&cfg.builder(), t0, &gaps, &cfg.sweep_options())?;
        let mut w = BufWriter::new(File::create(&csv)?);
        write_sweep_csv(&mut w, &records)?;
        w.flush()?;
        // Digests at the outermost and innermost successful points.
        let ok: Vec<&SweepRecord> = records.iter().filter(|r| r.is_ok()).collect();
        let mut digests = Vec::new();
        for r in ok.first().into_iter().chain(ok.last().filter(|_| ok.len() > 1)) {
            match assumption_report(cfg, r.t) {
                Ok(rep) => digests.push(AssumptionDigest::new(r.t, r.gap, &rep)),
                Err(e) => log::warn!("assumption check at t={} failed: {e}", r.t),
            }
        }
        let report = SweepReport {
            summary: summarize(t0, &records, cfg.sweep.l_edge),
            assumptions: digests,
        };
        write_json(&json, &report)?;
        dir.finish()?;
        print_fit_line(&report.summary);
    }
    println!("{}", csv.display());
    Ok(0)
}

fn print_fit_line(s: &SweepSummary) {
    let show = |f: &Option<cocolab::PowerLawFit>| match f {
        Some(f) => format!("{:.4} (r2 {:.5})", f.exponent, f.r_squared),
        None => "n/a".into(),
    };
    println!(
        "records {} failed {} | d_min exponent {} | holder exponent {} | K2/K1 {}",
        s.n_records,
        s.n_failed,
        show(&s.distance_fit),
        show(&s.holder_fit),
        s.bounds.map_or("n/a".into(), |b| format!("{:.4}", b.ratio))
    );
}

#[derive(Debug, Serialize, Deserialize)]
pub struct VerifyReport {
    pub t: f64,
    pub gap: Option<f64>,
    pub report: AssumptionReport,
}

pub fn verify(ctx: &Context, t: Option<f64>, gap: Option<f64>) -> Result<i32, CliError> {
    let args: Vec<(&str, String)> = match (t, gap) {
        (Some(t), None) => vec![("t", arg(t))],
        (None, Some(g)) => vec![("gap", arg(g))],
        _ => return Err(CliError::Config("verify needs exactly one of --t and --gap".into())),
    };
    let dir = ctx.run_dir("verify", &args)?;
    let path = dir.file("verify.json");
    if !dir.hit {
        let cfg = &ctx.config;
        let t = match (t, gap) {
            (Some(t), _) => t,
            (_, Some(g)) if g > 0.0 => edge_location(cfg)? - g,
            (_, g) => return Err(CliError::Config(format!("--gap must be positive, got {g:?}"))),
        };
        let report = VerifyReport {
            t,
            gap,
            report: assumption_report(cfg, t)?,
        };
        write_json(&path, &report)?;
        dir.finish()?;
        for v in &report.report.violations {
            println!("violation {:?}: {}", v.clause, v.detail);
        }
    }
    println!("{}", path.display());
    Ok(0)
}

fn parse_f64(s: &str, line: usize) -> Result<f64, CliError> {
    s.trim()
        .parse()
        .map_err(|_| CliError::Config(format!("sweep csv line {line}: bad number {s:?}")))
}

/// Reads a file written by `sweep`.
pub fn read_sweep_csv(text: &str) -> Result<Vec<SweepRecord>, CliError> {
    let mut lines = text.lines();
    if lines.next() != Some(SWEEP_COLUMNS) {
        return Err(CliError::Config(format!("sweep csv must start with the header {SWEEP_COLUMNS}")));
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| {
            let line = i + 2;
            let cols: Vec<&str> = l.splitn(10, ',').collect();
            if cols.len() != 10 {
                return Err(CliError::Config(format!("sweep csv line {line}: expected 10 columns")));
            }
            let x: Vec<f64> = cols[..9].iter().map(|c| parse_f64(c, line)).collect::<Result<_, _>>()?;
            Ok(SweepRecord {
                t: x[0],
                gap: x[1],
                d_min: x[2],
                theta_c: x[3],
                l: x[4],
                dldt_bundle: x[5],
                dldt_fd: x[6],
                err_l: x[7],
                err_dldt: x[8],
                err_fd: f64::NAN,
                iterations: 0,
                multiple_minima: false,
                status: cols[9].to_string(),
            })
        })
        .collect()
}

pub fn fit(ctx: &Context, input: &Path) -> Result<i32, CliError> {
    let text = std::fs::read_to_string(input)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", input.display())))?;
    let records = read_sweep_csv(&text)?;
    let first = records
        .first()
        .ok_or_else(|| CliError::Config("sweep csv has no records".into()))?;
    let t0 = ctx.config.sweep.t0.unwrap_or(first.t + first.gap);
    let summary = summarize(t0, &records, ctx.config.sweep.l_edge);
    if summary.distance_fit.is_none() && summary.holder_fit.is_none() {
        return Err(LabError::DegenerateFit(summary.notes.join("; ")).into());
    }
    let dir = ctx.run_dir("fit", &[("csv", text)])?;
    let path = dir.file("summary.json");
    write_json(&path, &summary)?;
    dir.finish()?;
    print_fit_line(&summary);
    Ok(0)
}
