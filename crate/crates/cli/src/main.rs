//! `sidewall` — build, mesh, solve and sweep pad-edge cross-sections, and
//! relate the results to measured qubits.

mod config;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sidewall::fem::{adaptive_epr_with, compute_epr, solve_potential_with};
use sidewall::geometry::{build_cross_section, validate_cross_section, CrossSection};
use sidewall::mesh::{generate_mesh, mesh_quality, Mesh, SizeField};
use sidewall::qanalysis::{self as qa, QubitRecord};
use sidewall::study::{convergence_study, optimize_geometry, reproduce_figures, run_sweep, run_undercut_sweep};

use config::RunConfig;

#[derive(Debug)]
pub enum CliError {
    /// Bad input: exit 1.
    Validation(String),
    /// The numerics failed: exit 2.
    Numerical(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) | CliError::Numerical(m) => f.write_str(m),
        }
    }
}

/// Attaches `context` to a library error and sorts it by exit code.
fn lib<E: Into<sidewall::Error>>(context: &str) -> impl FnOnce(E) -> CliError + '_ {
    move |e| {
        let e: sidewall::Error = e.into();
        let m = format!("{context}: {e}");
        if e.is_validation() {
            CliError::Validation(m)
        } else {
            CliError::Numerical(m)
        }
    }
}

#[derive(Parser)]
#[command(name = "sidewall", version, about = "Surface participation ratios of superconducting pad edges")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; defaults apply to anything left out.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for output files; overrides `io.outdir`.
    #[arg(long, global = true)]
    outdir: Option<PathBuf>,
    /// Worker threads for sweeps and restarts.
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Build the cross-section; JSON on stdout or cross_section.{json,txt}.
    Geom,
    /// Mesh it; quality JSON on stdout, mesh.{txt,vtk} in the outdir.
    Mesh,
    /// One solve on the initial mesh; EprReport on stdout, solution.vtk.
    Solve,
    /// Adaptive participation ratios; EprReport on stdout.
    Epr,
    /// Sweep one geometry parameter; CSV on stdout.
    Sweep {
        #[arg(long)]
        axis: Option<String>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        values: Option<Vec<f64>>,
    },
    /// Undercut distance and angle sweeps; stacked CSV on stdout.
    Undercut {
        #[arg(long, value_delimiter = ',')]
        x_values: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        beta_values: Option<Vec<f64>>,
    },
    /// Refinement study per element order; JSON on stdout.
    Converge {
        #[arg(long, value_delimiter = ',')]
        orders: Option<Vec<u8>>,
        #[arg(long)]
        generations: Option<u32>,
    },
    /// Minimise EPR_sum over `optimize.bounds`; JSON on stdout.
    Optimize {
        /// Seeds the random restarts.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write the figure tables into the outdir.
    Figures,
    /// Load qubits, rank-correlate features with Q, optionally build a band.
    Analyze(AnalyzeArgs),
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Qubit table CSV.
    #[arg(long)]
    qubits: PathBuf,
    /// Extra per-qubit features (`chip_id,qubit_id,feat:<name>:<unit>...`).
    #[arg(long)]
    feature_table: Vec<PathBuf>,
    /// Features to correlate; all by default. `trench_depth_nm` and
    /// `trench_depth` name the same nm-valued feature.
    #[arg(long)]
    feature: Vec<String>,
    /// Average per-chip statistics instead of pooling.
    #[arg(long)]
    group_by_chip: bool,
    /// Build a prediction band for this chip from the configured sweep.
    #[arg(long)]
    band_chip: Option<String>,
    /// Record feature matching the sweep axis; defaults to the axis name.
    #[arg(long)]
    band_feature: Option<String>,
    /// Anchor qubit id; defaults to the chip's best-measured qubit.
    #[arg(long)]
    anchor: Option<String>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(d) = cli.common.outdir {
        cfg.io.outdir = Some(d);
    }
    if let Some(n) = cli.common.jobs {
        if n == 0 {
            return Err(CliError::Validation("--jobs: must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Validation(format!("--jobs: {e}")))?;
    }
    let out = Output::new(&cfg)?;
    match cli.command {
        Command::Geom => geom(&cfg, &out),
        Command::Mesh => mesh(&cfg, &out),
        Command::Solve => solve(&cfg, &out),
        Command::Epr => {
            let (report, _) = adaptive_epr_with(&cfg.geometry, &cfg.adaptive()).map_err(lib("epr"))?;
            out.write("epr.json", "json", &json(&report))?;
            print(&json(&report));
            Ok(())
        }
        Command::Sweep { axis, values } => {
            let axis = axis.unwrap_or(cfg.sweep.axis.clone());
            let values = values.unwrap_or(cfg.sweep.values.clone());
            let flag = if cli.common.config.is_some() { "sweep (config sweep.axis/values or --axis/--values)" } else { "sweep (--axis/--values)" };
            let r = run_sweep(&cfg.geometry, &axis, &values, &cfg.adaptive()).map_err(lib(flag))?;
            out.write(&format!("sweep_{axis}.csv"), "csv", &r.to_csv())?;
            out.write(&format!("sweep_{axis}.json"), "json", &json(&r))?;
            print(&r.to_csv());
            Ok(())
        }
        Command::Undercut { x_values, beta_values } => {
            let x = x_values.unwrap_or(cfg.sweep.x_values.clone());
            let beta = beta_values.unwrap_or(cfg.sweep.beta_values.clone());
            let (rx, rb) = run_undercut_sweep(&cfg.geometry, &x, &beta, &cfg.adaptive()).map_err(lib("undercut (geometry.trench_depth, sweep.x_values/beta_values)"))?;
            out.write("undercut_x.csv", "csv", &rx.to_csv())?;
            out.write("undercut_beta.csv", "csv", &rb.to_csv())?;
            let mut s = String::new();
            for r in [&rx, &rb] {
                for line in r.to_csv().lines().skip(usize::from(!s.is_empty())) {
                    let axis = if s.is_empty() { "axis" } else { r.axis.as_str() };
                    let _ = writeln!(s, "{axis},{line}");
                }
            }
            print(&s);
            Ok(())
        }
        Command::Converge { orders, generations } => {
            let orders = orders.unwrap_or(cfg.convergence.orders.clone());
            let generations = generations.unwrap_or(cfg.convergence.max_generations);
            let r = convergence_study(&cfg.geometry, &orders, generations, &cfg.adaptive()).map_err(lib("converge (convergence.orders/max_generations)"))?;
            let mut csv = String::from("order,generation,elements,epr_sum,w0_j_per_m\n");
            for row in &r.rows {
                let _ = writeln!(csv, "{},{},{},{},{}", row.order, row.generation, row.elements, row.epr_sum, row.w0);
            }
            out.write("convergence.csv", "csv", &csv)?;
            out.write("convergence.json", "json", &json(&r))?;
            if r.non_convergent {
                eprintln!("warning: element orders disagree by {:.1}%", 100.0 * r.cross_order);
            }
            print(&json(&r));
            Ok(())
        }
        Command::Optimize { seed } => {
            let r = optimize_geometry(&cfg.optimize.bounds, &cfg.geometry, &cfg.optimize_options(seed)).map_err(lib("optimize (optimize.bounds)"))?;
            let mut csv = String::from("start,objective,params,error\n");
            for e in &r.log {
                let params: Vec<String> = e.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
                let _ = writeln!(csv, "{},{},{},{}", e.start, e.objective, params.join(";"), e.error.as_deref().unwrap_or(""));
            }
            out.write("optimize_log.csv", "csv", &csv)?;
            out.write("optimize.json", "json", &json(&r))?;
            print(&json(&r));
            Ok(())
        }
        Command::Figures => {
            let dir = out.dir.as_ref().ok_or_else(|| CliError::Validation("figures: --outdir (or io.outdir) is required".into()))?;
            let files = reproduce_figures(dir, &cfg.geometry, &cfg.figures, &cfg.adaptive()).map_err(lib("figures (config figures)"))?;
            for f in files {
                println!("{}", f.display());
            }
            Ok(())
        }
        Command::Analyze(a) => analyze(&cfg, &out, &a),
    }
}

struct Output {
    dir: Option<PathBuf>,
    io: config::IoConfig,
}

impl Output {
    fn new(cfg: &RunConfig) -> Result<Self, CliError> {
        if let Some(d) = &cfg.io.outdir {
            std::fs::create_dir_all(d).map_err(|e| CliError::Validation(format!("--outdir {}: {e}", d.display())))?;
        }
        Ok(Output { dir: cfg.io.outdir.clone(), io: cfg.io.clone() })
    }

    /// Writes `name` into the outdir when there is one and `format` is wanted.
    fn write(&self, name: &str, format: &str, body: &str) -> Result<(), CliError> {
        let Some(dir) = &self.dir else { return Ok(()) };
        if !self.io.wants(format) {
            return Ok(());
        }
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|e| CliError::Validation(format!("--outdir: writing {}: {e}", path.display())))
    }
}

fn json(v: &impl Serialize) -> String {
    serde_json::to_string_pretty(v).expect("plain data serialises") + "\n"
}

fn print(s: &str) {
    use std::io::Write;
    let _ = std::io::stdout().write_all(s.as_bytes());
}

fn section(cfg: &RunConfig) -> Result<CrossSection, CliError> {
    let cs = build_cross_section(&cfg.geometry).map_err(lib("geometry"))?;
    let v = validate_cross_section(&cs);
    if !v.is_empty() {
        return Err(CliError::Validation(format!("geometry: cross-section fails validation: {v:?}")));
    }
    Ok(cs)
}

fn initial_mesh(cfg: &RunConfig, cs: &CrossSection) -> Result<Mesh, CliError> {
    let sf = SizeField::for_params(&cfg.geometry, cs).with_overrides(&cfg.mesh);
    generate_mesh(cs, &sf).map_err(lib("mesh"))
}

fn geom(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let cs = section(cfg)?;
    if out.dir.is_some() {
        out.write("cross_section.json", "json", &json(&cs))?;
        out.write("cross_section.txt", "ascii", &cs.to_ascii())
    } else {
        print(&json(&cs));
        Ok(())
    }
}

fn mesh(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let cs = section(cfg)?;
    let m = initial_mesh(cfg, &cs)?;
    out.write("mesh.txt", "ascii", &m.to_ascii())?;
    out.write("mesh.vtk", "vtk", &m.to_vtk(&[], &[]))?;
    print(&json(&mesh_quality(&m)));
    Ok(())
}

fn solve(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let cs = section(cfg)?;
    let m = initial_mesh(cfg, &cs)?;
    let a = cfg.adaptive();
    let sol = solve_potential_with(&m, a.v_pad, a.order, &a.solver).map_err(lib("solve (solver)"))?;
    let report = compute_epr(&sol);
    out.write("solution.vtk", "vtk", &sol.to_vtk())?;
    out.write("epr.json", "json", &json(&report))?;
    print(&json(&report));
    Ok(())
}

/// Finds the feature `name` names: exactly, or as `<feature>_<unit>`.
fn resolve_feature(records: &[QubitRecord], name: &str) -> Option<String> {
    if records.iter().any(|r| r.features.contains_key(name)) {
        return Some(name.to_string());
    }
    records.iter().flat_map(|r| &r.features).find(|(k, f)| name == format!("{k}_{}", f.unit)).map(|(k, _)| k.clone())
}

fn analyze(cfg: &RunConfig, out: &Output, a: &AnalyzeArgs) -> Result<(), CliError> {
    let bad = |flag: String| move |e: qa::AnalysisError| CliError::Validation(format!("{flag}: {e}"));
    let mut records = qa::load_qubit_table(&a.qubits).map_err(bad(format!("--qubits {}", a.qubits.display())))?;
    for t in &a.feature_table {
        let text = std::fs::read_to_string(t).map_err(|e| CliError::Validation(format!("--feature-table {}: {e}", t.display())))?;
        qa::attach_features(&mut records, &text).map_err(bad(format!("--feature-table {}", t.display())))?;
    }
    eprintln!("loaded {} records", records.len());
    for r in records.iter().filter(|r| r.q_mismatch) {
        eprintln!("warning: {} printed Q {:?} differs from 2πfT1 = {:.4e}", r.id(), r.q_printed, r.q);
    }

    let names: Vec<String> = if a.feature.is_empty() {
        let all: std::collections::BTreeSet<&String> = records.iter().flat_map(|r| r.features.keys()).collect();
        all.into_iter().cloned().collect()
    } else {
        a.feature
            .iter()
            .map(|f| resolve_feature(&records, f).ok_or_else(|| CliError::Validation(format!("--feature {f}: no record carries it"))))
            .collect::<Result<_, _>>()?
    };
    let mut csv = String::from("feature,n,spearman,kendall,sign,grouped\n");
    for name in &names {
        match qa::correlate_feature(&records, name, a.group_by_chip) {
            Ok(c) => {
                let _ = writeln!(csv, "{},{},{},{},{},{}", c.feature, c.n, c.spearman, c.kendall, c.sign, c.grouped);
            }
            // one unusable feature out of many is reported, not fatal
            Err(e) if a.feature.is_empty() => eprintln!("skipping {name}: {e}"),
            Err(e) => return Err(CliError::Validation(format!("--feature {name}: {e}"))),
        }
    }
    out.write("correlations.csv", "csv", &csv)?;
    print(&csv);

    if let Some(chip) = &a.band_chip {
        band(cfg, out, a, &records, chip)?;
    }
    Ok(())
}

fn band(cfg: &RunConfig, out: &Output, a: &AnalyzeArgs, records: &[QubitRecord], chip: &str) -> Result<(), CliError> {
    let chip_records: Vec<QubitRecord> = records.iter().filter(|r| r.chip_id == chip).cloned().collect();
    if chip_records.is_empty() {
        return Err(CliError::Validation(format!("--band-chip {chip}: no such chip")));
    }
    let anchor = match &a.anchor {
        Some(q) => chip_records.iter().find(|r| &r.qubit_id == q).ok_or_else(|| CliError::Validation(format!("--anchor {q}: not on chip {chip}")))?,
        None => qa::default_anchor(&chip_records, chip).expect("chip is non-empty"),
    };
    let wanted = a.band_feature.clone().unwrap_or(cfg.sweep.axis.clone());
    let feature = resolve_feature(&chip_records, &wanted).ok_or_else(|| CliError::Validation(format!("--band-feature {wanted}: chip {chip} does not carry it")))?;
    let anchor_value = anchor.feature(&feature).ok_or_else(|| CliError::Validation(format!("--anchor: {} lacks `{feature}`", anchor.id())))?;

    let sweep = run_sweep(&cfg.geometry, &cfg.sweep.axis, &cfg.sweep.values, &cfg.adaptive()).map_err(lib("sweep (config sweep.axis/values)"))?;
    let curve = qa::EprCurve::try_from(&sweep).map_err(|e| CliError::Validation(format!("sweep.values: {e}")))?;
    let band = qa::predict_q_band(&curve, &cfg.lossmodel.model(), &feature, anchor, anchor_value, cfg.lossmodel.rel_err)
        .map_err(|e| CliError::Validation(format!("--anchor {}: {e}", anchor.id())))?;
    let (members, summary) = qa::band_membership(&chip_records, &band).map_err(|e| CliError::Validation(format!("--band-feature {feature}: {e}")))?;
    let mut csv = String::from("record,value,q,side\n");
    for m in &members {
        let side = serde_json::to_value(m.side).expect("unit enum");
        let _ = writeln!(csv, "{},{},{},{}", m.record, m.value, m.q, side.as_str().unwrap_or_default());
    }
    out.write("band.csv", "csv", &band.to_csv())?;
    out.write("membership.csv", "csv", &csv)?;
    eprintln!(
        "band for chip {chip} anchored at {} ({feature} = {anchor_value}): {}/{} inside, {} below, {} above, {} out of range",
        anchor.id(),
        summary.inside,
        summary.total,
        summary.below,
        summary.above,
        summary.out_of_range
    );
    Ok(())
}

