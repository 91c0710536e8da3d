//! Subcommands `trace | stack | extract | fit | design`.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Command, Format, RunConfig, Spacing};
use crate::error::{Error, Result};
use crate::logfit::{self, FitConfig, FitResult};
use crate::output::{to_json_string, Cell, Table};
use crate::prefractal::{self, PrefractalSpec, DEFAULT_MARGIN};
use crate::quadrature::{QuadratureSpec, Scheme};
use crate::scatter1d::{self, ExtractionOptions, ExtractionResult, GapConvention, PlateStack};
use crate::trace_core::{CoefficientModel, Harmonic, SpectralParams, ThermalState, TraceReport};

/// Environment variable naming the directory used when `--out` is absent.
pub const OUT_DIR_ENV: &str = "CASIMIR_TRACE_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "casimir-trace", version, about = "Running-coefficient Casimir trace toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Energies, pressures, traces and curvature over a separation sweep
    Trace(RunArgs),
    /// Interaction energy of a δ-plate stack
    Stack(RunArgs),
    /// Running coefficient C_n(d) of a Cantor stack
    Extract(RunArgs),
    /// Log-periodic fit of an extracted coefficient curve
    Fit(RunArgs),
    /// Prefractal design sheet
    Design(RunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Configuration file (flat `key = value`)
    #[arg(long)]
    pub config: PathBuf,
    /// Output file; defaults to $CASIMIR_TRACE_OUT_DIR/<command>.<format> or stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output format
    #[arg(long, value_parser = ["csv", "json"])]
    pub format: Option<String>,
    /// Window margin for `design`: d must not exceed L/margin
    #[arg(long)]
    pub margin: Option<f64>,
    /// Worker threads for sweeps (output order never depends on this)
    #[arg(long)]
    pub threads: Option<usize>,
}

impl Sub {
    pub fn split(&self) -> (Command, &RunArgs) {
        match self {
            Sub::Trace(a) => (Command::Trace, a),
            Sub::Stack(a) => (Command::Stack, a),
            Sub::Extract(a) => (Command::Extract, a),
            Sub::Fit(a) => (Command::Fit, a),
            Sub::Design(a) => (Command::Design, a),
        }
    }
}

/// Rendered result: the main document plus an optional JSON side document.
#[derive(Clone, Debug, PartialEq)]
pub struct Rendered {
    pub main: String,
    pub sidecar: Option<String>,
}

/// Parses, runs, and writes one invocation.
pub fn execute(cli: &Cli) -> Result<()> {
    let (command, args) = cli.command.split();
    let cfg = RunConfig::load(command, &args.config)?;
    let format = match (&args.format, cfg.raw("format")) {
        (Some(f), _) => f.parse()?,
        (None, Some(f)) => f.parse()?,
        (None, None) => Format::Csv,
    };
    if args.margin.is_some() && command != Command::Design {
        return Err(Error::Usage("--margin only applies to `design`".into()));
    }
    let threads = args.threads.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Usage(format!("cannot start {threads} worker threads: {e}")))?;
    let rendered = pool.install(|| render(&cfg, format, args.margin))?;

    let out = match (&args.out, cfg.path("out")) {
        (Some(p), _) => Some(p.clone()),
        (None, Some(p)) => Some(p),
        (None, None) => std::env::var_os(OUT_DIR_ENV).map(|dir| {
            let ext = match format {
                Format::Csv => "csv",
                Format::Json => "json",
            };
            PathBuf::from(dir).join(format!("{}.{ext}", command.name()))
        }),
    };
    match out {
        Some(path) => {
            write_file(&path, &rendered.main)?;
            if let Some(side) = &rendered.sidecar {
                write_file(&sidecar_path(&path), side)?;
            }
        }
        None => {
            print!("{}", rendered.main);
            if let Some(side) = &rendered.sidecar {
                // keeps stdout a valid CSV for readers that skip `#` lines
                println!("# fit: {side}");
            }
        }
    }
    Ok(())
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::Usage(format!("cannot create {}: {e}", dir.display())))?;
    }
    std::fs::write(path, text).map_err(|e| Error::Usage(format!("cannot write {}: {e}", path.display())))
}

/// `<out>.fit.json` next to a CSV output.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".fit.json");
    out.with_file_name(name)
}

/// Runs the configured command and renders it in `format`.
pub fn render(cfg: &RunConfig, format: Format, margin: Option<f64>) -> Result<Rendered> {
    let command = cfg.command;
    let (table, extra): (Table, Option<Value>) = match command {
        Command::Trace => (trace_table(&run_trace(cfg)?), None),
        Command::Stack => {
            let s = run_stack(cfg)?;
            (s.table(), None)
        }
        Command::Extract => {
            let report = run_extract(cfg)?;
            let fit = report.fit.as_ref().map(fit_json).transpose()?;
            (extraction_table(&report.result), fit)
        }
        Command::Fit => {
            let report = run_fit(cfg)?;
            let summary = report.summary_json()?;
            return match format {
                Format::Json => Ok(Rendered {
                    main: to_json_string(&summary)? + "\n",
                    sidecar: None,
                }),
                Format::Csv => Ok(Rendered {
                    main: report.table().to_csv()?,
                    sidecar: Some(to_json_string(&summary)?),
                }),
            };
        }
        Command::Design => {
            let sheet = run_design(cfg, margin)?;
            let table = sheet.table();
            if format == Format::Json {
                let mut doc = serde_json::to_value(&sheet).map_err(|e| Error::Usage(e.to_string()))?;
                doc["levels"] = table.to_json_rows();
                return Ok(Rendered {
                    main: to_json_string(&doc)? + "\n",
                    sidecar: None,
                });
            }
            (table, None)
        }
    };
    match format {
        Format::Csv => Ok(Rendered {
            main: table.to_csv()?,
            sidecar: extra.map(|v| to_json_string(&v)).transpose()?,
        }),
        Format::Json => {
            let mut doc = json!({ "command": command.name(), "rows": table.to_json_rows() });
            if let Some(fit) = extra {
                doc["fit"] = fit;
            }
            Ok(Rendered {
                main: to_json_string(&doc)? + "\n",
                sidecar: None,
            })
        }
    }
}

fn quadrature_spec(cfg: &RunConfig) -> Result<QuadratureSpec> {
    let d = QuadratureSpec::default();
    let spec = QuadratureSpec {
        scheme: cfg.get::<String>("scheme")?.map_or(Ok(d.scheme), |s| s.parse::<Scheme>())?,
        nodes: cfg.get_or("nodes", d.nodes)?,
        rel_tol: cfg.get_or("rel_tol", d.rel_tol)?,
        kappa_max: cfg.get_or("kappa_max", d.kappa_max)?,
    };
    spec.validate()?;
    Ok(spec)
}

fn usage(e: Error) -> Error {
    match e {
        Error::Domain(msg) => Error::Usage(msg),
        other => other,
    }
}

/// Coefficient model from `model = <fit json>` or from inline keys.
pub fn coefficient_model(cfg: &RunConfig) -> Result<CoefficientModel> {
    const INLINE: [&str; 4] = ["c0", "period", "reduction", "ell_star"];
    let harmonics = cfg.harmonics()?;
    if let Some(path) = cfg.path("model") {
        if let Some(k) = INLINE.iter().find(|k| cfg.has(k)) {
            return Err(Error::Usage(format!("key `{k}` conflicts with `model`")));
        }
        if !harmonics.is_empty() {
            return Err(Error::Usage("harmonic keys conflict with `model`".into()));
        }
        return load_model(&path);
    }
    let c0: f64 = cfg.require("c0")?;
    let period = match (cfg.get::<f64>("period")?, cfg.get::<f64>("reduction")?) {
        (Some(_), Some(_)) => return Err(Error::Usage("give either `period` or `reduction`, not both".into())),
        (Some(p), None) => p,
        (None, Some(b)) => {
            if !(b > 1.0) {
                return Err(Error::Usage(format!("key `reduction` must exceed 1, got {b}")));
            }
            b.ln()
        }
        (None, None) if harmonics.is_empty() => 1.0,
        (None, None) => return Err(Error::Usage("harmonics need `period` or `reduction`".into())),
    };
    let harmonics = harmonics.into_iter().map(|(cos, sin)| Harmonic { cos, sin }).collect();
    CoefficientModel::new(c0, period, harmonics, cfg.get_or("ell_star", 1.0)?).map_err(usage)
}

fn load_model(path: &Path) -> Result<CoefficientModel> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Usage(format!("cannot read model {}: {e}", path.display())))?;
    let doc: Value =
        serde_json::from_str(&text).map_err(|e| Error::Usage(format!("model {}: {e}", path.display())))?;
    let node = doc.get("model").cloned().unwrap_or(doc);
    let m: CoefficientModel =
        serde_json::from_value(node).map_err(|e| Error::Usage(format!("model {}: {e}", path.display())))?;
    CoefficientModel::new(m.c0, m.period, m.harmonics, m.ell_star).map_err(usage)
}

fn thermal(cfg: &RunConfig) -> Result<ThermalState> {
    let params = match (cfg.get::<f64>("d_s")?, cfg.get::<f64>("d_h")?, cfg.get::<f64>("d_w")?) {
        (Some(ds), h, w) => SpectralParams::with_dimensions(ds, h, w),
        (None, Some(h), Some(w)) => SpectralParams::from_walk(h, w),
        _ => return Err(Error::Usage("missing required key `d_s` (or both `d_h` and `d_w`)".into())),
    }
    .map_err(usage)?;
    ThermalState::new(cfg.get_or("u_th", 0.0)?, cfg.get_or("v_s", 1.0)?, params.d_s).map_err(usage)
}

/// Reads column `name` of a CSV file with a header row.
pub fn read_csv_column(path: &Path, name: &str) -> Result<Vec<f64>> {
    Ok(read_csv_columns(path, &[name])?.remove(0))
}

fn read_csv_columns(path: &Path, names: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Usage(format!("cannot read {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Usage(format!("{}: {e}", path.display())))?
        .clone();
    let idx: Vec<usize> = names
        .iter()
        .map(|n| {
            headers
                .iter()
                .position(|h| h == *n)
                .ok_or_else(|| Error::Usage(format!("{}: no column `{n}`", path.display())))
        })
        .collect::<Result<_>>()?;
    let mut cols = vec![Vec::new(); names.len()];
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Usage(format!("{}: {e}", path.display())))?;
        for (col, &i) in cols.iter_mut().zip(&idx) {
            let field = record.get(i).unwrap_or("");
            col.push(field.parse::<f64>().map_err(|_| {
                Error::Usage(format!("{}: row {}: cannot parse `{field}`", path.display(), line + 1))
            })?);
        }
    }
    Ok(cols)
}

/// One [`TraceReport`] per sweep point, in sweep order.
pub fn run_trace(cfg: &RunConfig) -> Result<Vec<TraceReport>> {
    let model = coefficient_model(cfg)?;
    let thermal = thermal(cfg)?;
    let g: f64 = cfg.get_or("g_newton", 1.0)?;
    let grid = match (cfg.path("grid"), cfg.sweep(Spacing::Log)?) {
        (Some(_), Some(_)) => return Err(Error::Usage("give either `grid` or sweep keys, not both".into())),
        (Some(path), None) => read_csv_column(&path, "d")?,
        (None, Some(sweep)) => sweep.grid(),
        (None, None) => return Err(Error::Usage("missing sweep keys `d_min`, `d_max`, `points` or `grid`".into())),
    };
    grid.par_iter()
        .map(|&d| TraceReport::evaluate(&model, &thermal, d, g).map_err(usage))
        .collect()
}

pub fn trace_table(rows: &[TraceReport]) -> Table {
    let mut t = Table::new(TraceReport::COLUMNS);
    for r in rows {
        t.push(r.values().iter().map(|&v| Cell::Num(v)).collect());
    }
    t
}

#[derive(Clone, Debug, PartialEq)]
pub struct StackSummary {
    pub stack: PlateStack,
    pub energy: f64,
    pub dirichlet_energy: f64,
    pub scheme: Scheme,
    pub evaluations: usize,
    pub error_estimate: f64,
}

impl StackSummary {
    pub fn table(&self) -> Table {
        let mut t = Table::new([
            "plates",
            "extent",
            "min_gap",
            "energy_per_area",
            "dirichlet_energy_per_area",
            "scheme",
            "evaluations",
            "error_estimate",
        ]);
        t.push(vec![
            Cell::Int(self.stack.len() as i64),
            Cell::Num(self.stack.extent()),
            Cell::Num(self.stack.min_gap().unwrap_or(0.0)),
            Cell::Num(self.energy),
            Cell::Num(self.dirichlet_energy),
            Cell::Text(
                match self.scheme {
                    Scheme::FixedNode => "fixed-node",
                    Scheme::Adaptive => "adaptive",
                }
                .into(),
            ),
            Cell::Int(self.evaluations as i64),
            Cell::Num(self.error_estimate),
        ]);
        t
    }
}

fn stack_from_config(cfg: &RunConfig) -> Result<PlateStack> {
    if cfg.has("cantor_level") {
        if let Some(k) = ["positions", "couplings"].iter().find(|k| cfg.has(k)) {
            return Err(Error::Usage(format!("key `{k}` conflicts with `cantor_level`")));
        }
        return scatter1d::cantor_stack(
            cfg.require("cantor_level")?,
            cfg.get_or("outer", 1.0)?,
            cfg.require("lambda")?,
            cfg.get_or("reduction", 3.0)?,
        )
        .map_err(usage);
    }
    let positions = cfg
        .list("positions")?
        .ok_or_else(|| Error::Usage("missing required key `positions` (or `cantor_level`)".into()))?;
    let couplings = match (cfg.list("couplings")?, cfg.get::<f64>("lambda")?) {
        (Some(_), Some(_)) => return Err(Error::Usage("give either `couplings` or `lambda`, not both".into())),
        (Some(c), None) => c,
        (None, Some(l)) => vec![l; positions.len()],
        (None, None) => return Err(Error::Usage("missing required key `couplings` or `lambda`".into())),
    };
    PlateStack::new(positions, couplings).map_err(usage)
}

pub fn run_stack(cfg: &RunConfig) -> Result<StackSummary> {
    let stack = stack_from_config(cfg)?;
    let quad = quadrature_spec(cfg)?;
    if stack.len() < 2 {
        return Err(Error::Usage("a stack needs at least two plates".into()));
    }
    let out = scatter1d::stack_energy_detailed(&stack, &quad)?;
    Ok(StackSummary {
        dirichlet_energy: scatter1d::dirichlet_energy_per_area(&stack),
        energy: out.value,
        scheme: out.scheme,
        evaluations: out.evaluations,
        error_estimate: out.error,
        stack,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExtractReport {
    pub options: ExtractionOptions,
    pub result: ExtractionResult,
    pub fit: Option<FitResult>,
}

pub fn run_extract(cfg: &RunConfig) -> Result<ExtractReport> {
    let options = ExtractionOptions {
        level: cfg.require("level")?,
        lambda_hat: cfg.require("lambda_hat")?,
        reduction: cfg.get_or("reduction", 3.0)?,
        convention: cfg.get::<String>("gap")?.map_or(Ok(GapConvention::Smallest), |s| s.parse())?,
    };
    let quad = quadrature_spec(cfg)?;
    let sweep = cfg
        .sweep(Spacing::Log)?
        .ok_or_else(|| Error::Usage("missing sweep keys `d_min`, `d_max`, `points`".into()))?;
    let want_fit = cfg.bool("fit")?;
    if !want_fit && ["max_harmonics", "ridge", "ell_star"].iter().any(|k| cfg.has(k)) {
        return Err(Error::Usage("fit keys given without `fit = true`".into()));
    }
    let result = scatter1d::extract_with(&options, &sweep.grid(), &quad).map_err(usage)?;
    let fit = if want_fit {
        let ell_star: f64 = cfg.get_or("ell_star", 1.0)?;
        let mut fc = FitConfig::for_reduction(options.reduction, cfg.get_or("max_harmonics", 1)?).map_err(usage)?;
        fc.regularization = cfg.get_or("ridge", 0.0)?;
        fc.ell_star = ell_star;
        let x: Vec<f64> = result.d_grid.iter().map(|d| (d / ell_star).ln()).collect();
        Some(logfit::fit_log_periodic(&x, &result.c_values, &fc).map_err(usage_if_shape)?)
    } else {
        None
    };
    Ok(ExtractReport { options, result, fit })
}

fn usage_if_shape(e: Error) -> Error {
    // too few points for the requested order is a configuration problem
    match e {
        Error::Domain(msg) => Error::Usage(msg),
        other => other,
    }
}

pub fn extraction_table(r: &ExtractionResult) -> Table {
    let mut t = Table::new(["d", "C", "dC_dlnd", "trace"]);
    for i in 0..r.d_grid.len() {
        t.push(vec![
            Cell::Num(r.d_grid[i]),
            Cell::Num(r.c_values[i]),
            Cell::Num(r.logderivs[i]),
            Cell::Num(r.traces[i]),
        ]);
    }
    t
}

fn fit_json(fit: &FitResult) -> Result<Value> {
    #[derive(Serialize)]
    struct Block<'a> {
        model: &'a CoefficientModel,
        residual_rms: f64,
        short_span: bool,
        residuals: &'a [f64],
    }
    serde_json::to_value(Block {
        model: &fit.model,
        residual_rms: fit.residual_rms,
        short_span: fit.short_span,
        residuals: &fit.residuals,
    })
    .map_err(|e| Error::Usage(e.to_string()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitReport {
    pub d: Vec<f64>,
    pub x: Vec<f64>,
    pub c: Vec<f64>,
    pub fit: FitResult,
    pub residual_by_order: Vec<(usize, f64)>,
    pub period_scan: Vec<(f64, f64)>,
}

impl FitReport {
    pub fn table(&self) -> Table {
        let mut t = Table::new(["d", "x", "C", "fitted", "residual", "predicted_trace"]);
        for i in 0..self.d.len() {
            let fitted = self.fit.model.value_at(self.x[i]);
            let trace = logfit::predicted_trace(&self.fit, self.d[i]).unwrap_or(f64::NAN);
            t.push(vec![
                Cell::Num(self.d[i]),
                Cell::Num(self.x[i]),
                Cell::Num(self.c[i]),
                Cell::Num(fitted),
                Cell::Num(self.fit.residuals[i]),
                Cell::Num(trace),
            ]);
        }
        t
    }

    pub fn summary_json(&self) -> Result<Value> {
        let mut doc = fit_json(&self.fit)?;
        doc["residual_by_order"] = Value::Array(
            self.residual_by_order
                .iter()
                .map(|(k, r)| json!({ "max_harmonics": k, "residual_rms": r }))
                .collect(),
        );
        if !self.period_scan.is_empty() {
            doc["period_scan"] = Value::Array(
                self.period_scan
                    .iter()
                    .map(|(p, r)| json!({ "period": p, "residual_rms": r }))
                    .collect(),
            );
        }
        doc["rows"] = self.table().to_json_rows();
        Ok(doc)
    }
}

pub fn run_fit(cfg: &RunConfig) -> Result<FitReport> {
    let input = cfg
        .path("input")
        .ok_or_else(|| Error::Usage("missing required key `input`".into()))?;
    let mut cols = read_csv_columns(&input, &["d", "C"])?;
    let c = cols.pop().expect("two columns");
    let d = cols.pop().expect("two columns");
    let period = match (cfg.get::<f64>("period")?, cfg.get::<f64>("reduction")?) {
        (Some(_), Some(_)) => return Err(Error::Usage("give either `period` or `reduction`, not both".into())),
        (Some(p), None) => p,
        (None, Some(b)) if b > 1.0 => b.ln(),
        (None, Some(b)) => return Err(Error::Usage(format!("key `reduction` must exceed 1, got {b}"))),
        (None, None) => 3f64.ln(),
    };
    let ell_star: f64 = cfg.get_or("ell_star", 1.0)?;
    let fc = FitConfig {
        period,
        max_harmonics: cfg.get_or("max_harmonics", 1)?,
        regularization: cfg.get_or("ridge", 0.0)?,
        ell_star,
    };
    if d.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::Usage(format!("{}: separations must be positive", input.display())));
    }
    let x: Vec<f64> = d.iter().map(|v| (v / ell_star).ln()).collect();
    let fit = logfit::fit_log_periodic(&x, &c, &fc).map_err(usage_if_shape)?;
    let residual_by_order = logfit::residual_by_order(&x, &c, &fc)?;
    let period_scan = match (cfg.get::<f64>("scan_min")?, cfg.get::<f64>("scan_max")?) {
        (None, None) => Vec::new(),
        (Some(lo), Some(hi)) if lo > 0.0 && hi > lo => {
            let n: usize = cfg.get_or("scan_points", 41)?;
            if n < 2 {
                return Err(Error::Usage("scan_points must be at least 2".into()));
            }
            let trials: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
            logfit::period_scan(&x, &c, &fc, &trials)?
        }
        _ => return Err(Error::Usage("period scan needs 0 < scan_min < scan_max".into())),
    };
    Ok(FitReport {
        d,
        x,
        c,
        fit,
        residual_by_order,
        period_scan,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DesignSheet {
    pub outer: f64,
    pub reduction: f64,
    pub d: f64,
    pub margin: f64,
    pub min_level: u32,
    #[serde(skip)]
    pub levels: Vec<(u32, f64, bool)>,
}

impl DesignSheet {
    pub fn table(&self) -> Table {
        let mut t = Table::new(["n", "ell_n", "in_window", "min_level"]);
        for &(n, ell, inside) in &self.levels {
            t.push(vec![
                Cell::Int(n as i64),
                Cell::Num(ell),
                Cell::Bool(inside),
                Cell::Bool(n == self.min_level),
            ]);
        }
        t
    }
}

pub fn run_design(cfg: &RunConfig, margin_flag: Option<f64>) -> Result<DesignSheet> {
    let outer: f64 = cfg.require("outer")?;
    let reduction: f64 = cfg.require("reduction")?;
    let d: f64 = cfg.require("d")?;
    let margin = match margin_flag {
        Some(m) => m,
        None => cfg.get_or("margin", DEFAULT_MARGIN)?,
    };
    let min_level = prefractal::min_level(outer, d, reduction).map_err(usage)?;
    let levels = (0..=min_level + 2)
        .map(|n| {
            let spec = PrefractalSpec::new(outer, reduction, n).map_err(usage)?;
            Ok((n, spec.min_feature(), prefractal::in_window(&spec, d, margin).map_err(usage)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DesignSheet {
        outer,
        reduction,
        d,
        margin,
        min_level,
        levels,
    })
}
