//! Command-line front end: `analyze`, `verify`, `properties` and `catalog`.
//!
//! Exit codes: 0 success or PASS, 1 FAIL, 2 usage or configuration error,
//! 3 certification refused, 4 INCONCLUSIVE.

pub mod config;
pub mod harness;
pub mod report;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gramian::{certify_ntf, full_space_check, CertifyMode};
use crate::grid::Grid;
use crate::lattice::IndexWindow;
use crate::spectra::piecewise::Piecewise;
use crate::spectra::{
    catalog_names, parse_selector_with, perturb, quasi_orthogonalize, GeneratorSpectrum,
    GeneratorSystem, Role,
};
use crate::trace::{dimension_function, local_trace, spectral_function, CertifiedSystem, PositiveOperator, TraceProfile};
use crate::trace::TraceValue;
use crate::wavelet::{
    characterize_ntf_wavelet, mra_consistency, quasi_affine_system, scaling_wavelet_match, EquationReport,
    WaveletSystem,
};

pub use config::{Format, RunConfig};
pub use report::{exit_code, ProfileSummary, Report, Timing};

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_REFUSED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "sitrace", version, about = "Local trace functions of shift-invariant spaces")]
struct Cli {
    /// Sectioned `key = value` configuration file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Dimension, spectral and optional trace profiles of a system.
    Analyze(Flags),
    /// Run one certificate.
    Verify {
        check: Check,
        #[command(flatten)]
        flags: Flags,
    },
    /// Run the identity harness over the catalog.
    Properties(Flags),
    /// List the catalog systems.
    Catalog,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Check {
    Ntf,
    FullSpace,
    Wavelet,
    ScalingMatch,
    Mra,
}

#[derive(Debug, Default, Args)]
struct Flags {
    #[arg(long)]
    system: Option<String>,
    #[arg(long)]
    wavelet: Option<String>,
    #[arg(long)]
    scaling: Option<String>,
    /// Integer matrix as a row-major comma list.
    #[arg(long, allow_hyphen_values = true)]
    dilation: Option<String>,
    /// Points per axis.
    #[arg(long)]
    grid: Option<usize>,
    /// Window radius K.
    #[arg(long)]
    window: Option<usize>,
    /// Scale depth J.
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    s_range: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    seed: Option<String>,
    /// Output directory for the report and CSV files.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<String>,
    /// `projection`, `delta` or `gramian-match`.
    #[arg(long)]
    mode: Option<String>,
    /// `identity`, `delta:<k>` or `random:<rank>`.
    #[arg(long)]
    operator: Option<String>,
    #[arg(long)]
    quasi_orthogonalize: bool,
    #[arg(long)]
    unchecked: bool,
    #[arg(long)]
    perturb: Option<f64>,
    /// Record wall-clock time in the report.
    #[arg(long)]
    timing: bool,
}

impl Flags {
    fn apply(&self, cfg: &mut RunConfig) -> Result<()> {
        if let Some(v) = &self.system {
            cfg.system = Some(v.clone());
        }
        if let Some(v) = &self.wavelet {
            cfg.wavelet = Some(v.clone());
        }
        if let Some(v) = &self.scaling {
            cfg.scaling = Some(v.clone());
        }
        if let Some(v) = &self.dilation {
            cfg.dilation = config::parse_dilation(v)?;
        }
        if let Some(v) = self.grid {
            cfg.grid = v;
        }
        if let Some(v) = self.window {
            cfg.window = v;
        }
        if let Some(v) = self.depth {
            cfg.depth = v;
        }
        if let Some(v) = self.s_range {
            cfg.s_range = v;
        }
        if let Some(v) = self.tol {
            cfg.tol = v;
        }
        if let Some(v) = &self.seed {
            cfg.seed = config::parse_seed(v)?;
        }
        if let Some(v) = &self.out {
            cfg.out = Some(v.clone());
        }
        if let Some(v) = &self.format {
            cfg.format = v.parse()?;
        }
        if let Some(v) = &self.mode {
            cfg.ntf_mode = v.clone();
        }
        if let Some(v) = &self.operator {
            cfg.operator = Some(v.clone());
        }
        if let Some(v) = self.perturb {
            cfg.perturb = v;
        }
        cfg.quasi_orthogonalize |= self.quasi_orthogonalize;
        cfg.unchecked |= self.unchecked;
        cfg.timing |= self.timing;
        cfg.validate()
    }
}

/// Parse arguments, run, print, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { 0 };
        }
    };
    if let Err(e) = init_threads() {
        eprintln!("sitrace: {e}");
        return EXIT_CONFIG;
    }
    match dispatch(cli) {
        Ok(code) => code,
        Err(e @ Error::NotCertified(_)) => {
            eprintln!("sitrace: refused: {e}");
            eprintln!("sitrace: pass --quasi-orthogonalize or --unchecked to proceed");
            EXIT_REFUSED
        }
        Err(e) => {
            eprintln!("sitrace: {e}");
            EXIT_CONFIG
        }
    }
}

/// Cap the worker pool with `SITRACE_THREADS`.
fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var("SITRACE_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Error::config("SITRACE_THREADS", format!("expected a positive integer, got `{v}`")))?;
    // a second initialization in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn load(path: Option<&Path>, flags: &Flags) -> Result<RunConfig> {
    let mut cfg = match path {
        Some(p) => RunConfig::parse(&fs::read_to_string(p)?)?,
        None => RunConfig::default(),
    };
    flags.apply(&mut cfg)?;
    Ok(cfg)
}

fn dispatch(cli: Cli) -> Result<i32> {
    let path = cli.config.as_deref();
    match &cli.command {
        Command::Catalog => {
            for (name, about) in catalog_names() {
                println!("{name:<24} {about}");
            }
            Ok(0)
        }
        Command::Analyze(flags) => analyze(&load(path, flags)?),
        Command::Verify { check, flags } => verify(*check, &load(path, flags)?),
        Command::Properties(flags) => properties(&load(path, flags)?),
    }
}

/// Resolve a selector, with `piecewise` naming the configured pieces.
pub fn resolve(cfg: &RunConfig, selector: &str) -> Result<GeneratorSystem> {
    let pieces = if cfg.pieces.is_empty() {
        None
    } else {
        Some(Piecewise::parse(&cfg.pieces)?)
    };
    let extra = |t: &str| -> Option<GeneratorSystem> {
        match (t, &pieces) {
            ("piecewise", Some(p)) => Some(GeneratorSystem::single(GeneratorSpectrum::new(
                "piecewise",
                std::sync::Arc::new(p.clone()),
            ))),
            _ => None,
        }
    };
    let sys = parse_selector_with(selector, &extra)?;
    if cfg.perturb == 0.0 {
        return Ok(sys);
    }
    // noise on the first generator only
    let mut gens = sys.generators().to_vec();
    gens[0] = perturb(&gens[0], cfg.perturb);
    GeneratorSystem::new(sys.dim(), gens, sys.role())
}

fn required<'a>(v: &'a Option<String>, field: &str) -> Result<&'a str> {
    v.as_deref().ok_or_else(|| Error::config(field, "required"))
}

fn write_file(dir: &Path, name: &str, text: &str) -> Result<String> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), text)?;
    Ok(name.to_string())
}

fn summarize(name: &str, p: &TraceProfile, file: Option<String>) -> ProfileSummary {
    ProfileSummary {
        name: name.to_string(),
        file,
        points: p.len(),
        min: p.values.iter().copied().fold(f64::INFINITY, f64::min),
        max: p.values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        max_error_bar: p.errors.iter().copied().fold(0.0, f64::max),
        non_integer_points: p.non_integer_points,
    }
}

fn operator_from(cfg: &RunConfig, text: &str, w: &IndexWindow) -> Result<PositiveOperator> {
    let bad = |m: &str| Error::config("system.operator", format!("`{text}`: {m}"));
    if text == "identity" {
        return Ok(PositiveOperator::identity(w));
    }
    if let Some(k) = text.strip_prefix("delta:") {
        let k = k
            .split(';')
            .map(|v| v.trim().parse::<i64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| bad("expected `delta:<k1;k2;...>`"))?;
        if k.len() != w.dim() {
            return Err(bad("index dimension does not match the system"));
        }
        return PositiveOperator::delta(w, &k).map_err(|e| bad(&e.to_string()));
    }
    if let Some(r) = text.strip_prefix("random:") {
        let rank: usize = r.parse().ok().filter(|r| *r > 0).ok_or_else(|| bad("expected `random:<rank>`"))?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        return Ok(PositiveOperator::random_psd(w, rank, &mut rng));
    }
    Err(bad("expected identity, delta:<k> or random:<rank>"))
}

fn finish(mut report: Report, cfg: &RunConfig, started: Instant, stdout_csv: Option<String>) -> Result<()> {
    if cfg.timing {
        report.timing = Some(Timing {
            seconds: started.elapsed().as_secs_f64(),
        });
    }
    if let Some(dir) = &cfg.out {
        write_file(dir, "report.json", &report.to_json())?;
    }
    eprint!("{}", report.table());
    match cfg.format {
        Format::Json => print!("{}", report.to_json()),
        Format::Csv => print!("{}", stdout_csv.unwrap_or_else(|| report.checks_csv())),
    }
    Ok(())
}

fn analyze(cfg: &RunConfig) -> Result<i32> {
    let started = Instant::now();
    let mut sys = resolve(cfg, required(&cfg.system, "system.system")?)?;
    let dim = sys.dim();
    let w = IndexWindow::new(dim, cfg.window)?;
    let grid = Grid::base(dim, cfg.grid)?;
    if cfg.quasi_orthogonalize {
        sys = GeneratorSystem::new(
            dim,
            sys.generators().iter().map(|g| quasi_orthogonalize(g, &w, cfg.rank_tol)).collect(),
            Role::Unverified,
        )?;
    }
    let mut report = Report::new("analyze", cfg);
    let cs = if cfg.unchecked {
        report.notes.push("certification skipped".into());
        CertifiedSystem::unchecked(sys, &w)
    } else {
        let cs = CertifiedSystem::certify(sys, &grid, &w, cfg.tol)?;
        if let Some(c) = cs.certificate() {
            report.push(c.clone());
        }
        cs
    };
    let dimension = dimension_function(&cs, &grid)?;
    let wide = Grid::cube(dim, -2.0 * std::f64::consts::PI, 2.0 * std::f64::consts::PI, cfg.grid)?;
    let spectral = spectral_function(&cs, &wide)?;
    let mut profiles = vec![("dimension", dimension), ("spectral", spectral)];
    if let Some(op) = &cfg.operator {
        let t = operator_from(cfg, op, &w)?;
        let vals = grid
            .points()
            .iter()
            .map(|xi| local_trace(&cs, &t, xi))
            .collect::<Result<Vec<TraceValue>>>()?;
        profiles.push(("trace", TraceProfile::new(format!("fiber-sum:{op}"), grid.points().to_vec(), vals)));
    }
    for (name, p) in &profiles {
        let file = match &cfg.out {
            Some(dir) => Some(write_file(dir, &format!("{name}.csv"), &p.to_csv())?),
            None => None,
        };
        report.profiles.push(summarize(name, p, file));
    }
    let csv = profiles[0].1.to_csv();
    finish(report, cfg, started, Some(csv))?;
    Ok(0)
}

fn wavelet_system(cfg: &RunConfig) -> Result<WaveletSystem> {
    let name = cfg
        .wavelet
        .as_deref()
        .or(cfg.system.as_deref())
        .ok_or_else(|| Error::config("system.wavelet", "required"))?;
    WaveletSystem::new(resolve(cfg, name)?, cfg.dilation_matrix()?, cfg.depth, cfg.semiorthogonal)
}

fn verify(check: Check, cfg: &RunConfig) -> Result<i32> {
    let started = Instant::now();
    let mut report = Report::new("verify", cfg);
    let mut rows: Option<EquationReport> = None;
    match check {
        Check::Ntf => {
            let sys = resolve(cfg, required(&cfg.system, "system.system")?)?;
            let mode = CertifyMode::parse(&cfg.ntf_mode)?;
            let reference = match (mode, &cfg.scaling) {
                (CertifyMode::GramianMatch, Some(s)) => Some(resolve(cfg, s)?),
                (CertifyMode::GramianMatch, None) => return Err(Error::config("system.scaling", "required as the reference")),
                _ => None,
            };
            let w = IndexWindow::new(sys.dim(), cfg.window)?;
            let grid = Grid::base(sys.dim(), cfg.grid)?;
            report.push(certify_ntf(&sys, &grid, &w, cfg.tol, mode, reference.as_ref())?);
        }
        Check::FullSpace => {
            let (sys, w) = match (&cfg.wavelet, &cfg.system) {
                (Some(_), _) => {
                    let ws = wavelet_system(cfg)?;
                    let w = IndexWindow::new(ws.dim(), cfg.window)?;
                    let fine = ((2 * cfg.window + 1) as f64).log2().ceil() as usize + 1;
                    (quasi_affine_system(&ws, fine)?, w)
                }
                (None, Some(s)) => {
                    let sys = resolve(cfg, s)?;
                    let w = IndexWindow::new(sys.dim(), cfg.window)?;
                    (sys, w)
                }
                (None, None) => return Err(Error::config("system.system", "required")),
            };
            let grid = Grid::base(sys.dim(), cfg.grid)?;
            report.push(full_space_check(&sys, &grid, &w, cfg.tol)?);
        }
        Check::Wavelet => {
            let ws = wavelet_system(cfg)?;
            let grid = Grid::base(ws.dim(), cfg.grid)?;
            rows = Some(characterize_ntf_wavelet(&ws, &grid, cfg.s_range, cfg.tol)?);
        }
        Check::ScalingMatch | Check::Mra => {
            let ws = wavelet_system(cfg)?;
            let phi = resolve(cfg, required(&cfg.scaling, "system.scaling")?)?;
            let grid = Grid::base(ws.dim(), cfg.grid)?;
            rows = Some(if check == Check::Mra {
                mra_consistency(&ws, &phi, &grid, cfg.s_range, cfg.tol, false)?
            } else {
                scaling_wavelet_match(&ws, &phi, &grid, cfg.s_range, cfg.tol)?
            });
        }
    }
    let mut csv = None;
    if let Some(r) = rows {
        if r.certificate.max_tail_bound > cfg.tail_tol {
            report.notes.push(format!(
                "truncation bound {:e} exceeds the tail tolerance {:e}",
                r.certificate.max_tail_bound, cfg.tail_tol
            ));
        }
        let text = r.to_csv();
        if let Some(dir) = &cfg.out {
            write_file(dir, "residuals.csv", &text)?;
        }
        csv = Some(text);
        report.push(r.certificate);
    }
    let code = exit_code(report.verdict());
    finish(report, cfg, started, csv)?;
    Ok(code)
}

fn properties(cfg: &RunConfig) -> Result<i32> {
    let started = Instant::now();
    let (checks, notes) = harness::run_properties(cfg)?;
    let mut report = Report::new("properties", cfg);
    report.notes = notes;
    for c in checks {
        report.push(c);
    }
    let code = exit_code(report.verdict());
    finish(report, cfg, started, None)?;
    Ok(code)
}
