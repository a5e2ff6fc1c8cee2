//! `vgeo`: batch front-end for regularity checks, ε-paths, geodesics and
//! descent paths.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use vgeo::cones::AmenableRep;
use vgeo::geodesics::averaging_map;
use vgeo::optimality::{descent_path, Objective};
use vgeo::paths::build_eps_path;
use vgeo::regularity::{
    check_function_approx_convexity, check_intrinsic_approx_convexity, check_super_regularity, check_uag,
    clarke_verdict, probe_prox_regularity, search_eps_path_violation, Property, RegularityVerdict,
};
use vgeo::report::{
    read_verdicts_csv, to_json, write_curve_csv, write_descent_csv, write_matrix_csv, write_verdicts_csv, VerdictRow,
};
use vgeo::sets::spec::load_spec;
use vgeo::sets::{catalog, ProjectionConfig, SetOracle};
use vgeo::Point;

const DEFAULT_SEED: u64 = 42;

#[derive(Parser, Debug)]
#[command(name = "vgeo", version, about = "Feasible paths, geodesics and regularity checks for constrained sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run regularity checks over an (ε, r) grid; exit 2 when a violation is found.
    Check(CheckArgs),
    /// Build and verify an ε-path between two members.
    Path(PathArgs),
    /// Midpoint-projection geodesic between two members.
    Geodesic(GeodesicArgs),
    /// Feasible descent path for an objective.
    Descend(DescendArgs),
    /// Merge verdict CSVs into a property by (ε, r) matrix.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct SetArgs {
    /// Catalog set name (see `docs/set-spec.md`).
    #[arg(long, conflicts_with = "spec")]
    catalog: Option<String>,
    /// JSON set specification.
    #[arg(long)]
    spec: Option<PathBuf>,
}

impl SetArgs {
    fn load(&self) -> Result<SetOracle> {
        match (&self.catalog, &self.spec) {
            (Some(name), None) => Ok(catalog(name)?),
            (None, Some(path)) => load_spec(path).with_context(|| format!("loading {}", path.display())),
            _ => bail!("give exactly one of --catalog or --spec"),
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[command(flatten)]
    set: SetArgs,
    /// Base point x̄, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    point: String,
    /// Comma-separated properties, or `all`.
    #[arg(long, default_value = "all")]
    property: String,
    /// Comma-separated ε values (default ½, ¼, …, 2⁻⁶).
    #[arg(long)]
    eps: Option<String>,
    /// Comma-separated radii (default 2⁻², …, 2⁻⁹).
    #[arg(long)]
    radius: Option<String>,
    #[arg(long, default_value_t = 16)]
    samples: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Lattice size of the prox-regularity probe.
    #[arg(long, default_value_t = 15)]
    grid: usize,
    /// Objective for function-approx-convexity, in `x1, …, xn`.
    #[arg(long)]
    objective: Option<String>,
    /// Output file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args, Debug)]
struct PathArgs {
    #[command(flatten)]
    set: SetArgs,
    #[arg(long, allow_hyphen_values = true)]
    from: String,
    #[arg(long, allow_hyphen_values = true)]
    to: String,
    #[arg(long)]
    eps: f64,
    /// Curve CSV output (t, x.., dx..).
    #[arg(long)]
    curve: Option<PathBuf>,
    /// Report JSON output (stdout when absent).
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GeodesicArgs {
    #[command(flatten)]
    set: SetArgs,
    #[arg(long, allow_hyphen_values = true)]
    from: String,
    #[arg(long, allow_hyphen_values = true)]
    to: String,
    #[arg(long, default_value_t = vgeo::geodesics::DEFAULT_LEVELS)]
    levels: usize,
    #[arg(long)]
    curve: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DescendArgs {
    #[command(flatten)]
    set: SetArgs,
    #[arg(long, allow_hyphen_values = true)]
    point: String,
    /// Objective in `x1, …, xn`.
    #[arg(long, allow_hyphen_values = true)]
    objective: String,
    /// Tangent direction; defaults to the worst sampled tangent.
    #[arg(long, allow_hyphen_values = true)]
    direction: Option<String>,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Per-node CSV output (t, x.., f).
    #[arg(long)]
    curve: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Directory of verdict CSVs (or individual files).
    #[arg(long, required = true, num_args = 1..)]
    input: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| anyhow!("not a number: `{t}`")))
        .collect()
}

fn parse_point(s: &str, dim: usize) -> Result<Point> {
    let v = parse_list(s)?;
    if v.len() != dim {
        bail!("point `{s}` has {} coordinates, the set lives in dimension {dim}", v.len());
    }
    Ok(Point::from_vec(v))
}

fn sink(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn write_json(path: &Option<PathBuf>, value: &serde_json::Value) -> Result<()> {
    let mut w = sink(path)?;
    writeln!(w, "{}", serde_json::to_string_pretty(value)?)?;
    w.flush()?;
    Ok(())
}

fn dyadic(from: i32, to: i32) -> Vec<f64> {
    (from..=to).map(|k| f64::powi(2.0, -k)).collect()
}

fn properties(spec: &str, c: &SetOracle, x: &Point, objective: bool) -> Result<Vec<Property>> {
    if spec == "all" {
        let mut out = vec![
            Property::SuperRegularity,
            Property::Uag,
            Property::IntrinsicApproxConvexity,
            Property::ProxRegularity,
            Property::EpsPath,
        ];
        if objective {
            out.push(Property::FunctionApproxConvexity);
        }
        if c.exact_cones(x).is_some() {
            out.push(Property::ClarkeRegularity);
        }
        return Ok(out);
    }
    spec.split(',').map(|p| Ok(p.trim().parse::<Property>()?)).collect()
}

/// Structured pairs `(x̄, m)` at dyadic parameters inside `B_r(x̄)`.
fn path_pairs(c: &SetOracle, x: &Point, r: f64) -> Vec<(Point, Point)> {
    (1..=3)
        .flat_map(|j| c.param_members(r / f64::from(1u32 << j)))
        .filter(|m| (m - x).norm() <= r && (m - x).norm() > 0.0)
        .map(|m| (x.clone(), m))
        .collect()
}

fn cmd_check(a: &CheckArgs) -> Result<ExitCode> {
    let c = a.set.load()?;
    let x = parse_point(&a.point, c.dim)?;
    let props = properties(&a.property, &c, &x, a.objective.is_some())?;
    let eps_list = a.eps.as_deref().map(parse_list).transpose()?.unwrap_or_else(|| dyadic(1, 6));
    let radii = a.radius.as_deref().map(parse_list).transpose()?.unwrap_or_else(|| dyadic(2, 9));
    let objective = a.objective.as_deref().map(|s| Objective::parse(c.dim, s)).transpose()?;
    let mut verdicts: Vec<RegularityVerdict> = Vec::new();
    for p in &props {
        match p {
            Property::ClarkeRegularity => verdicts.push(clarke_verdict(&c, &x)?),
            Property::ProxRegularity => {
                for &r in &radii {
                    verdicts.push(probe_prox_regularity(&c, &x, r, a.grid, a.seed)?);
                }
            }
            _ => {
                for &e in &eps_list {
                    for &r in &radii {
                        let v = match p {
                            Property::SuperRegularity => check_super_regularity(&c, &x, e, r, a.samples, a.seed)?,
                            Property::Uag => check_uag(&c, &x, e, r, a.samples, a.seed, None)?,
                            Property::IntrinsicApproxConvexity => check_intrinsic_approx_convexity(&c, &x, e, r, a.samples, a.seed)?,
                            Property::FunctionApproxConvexity => {
                                let f = objective
                                    .as_ref()
                                    .ok_or_else(|| anyhow!("function-approx-convexity needs --objective"))?;
                                check_function_approx_convexity(f.label(), |z: &Point| f.value(z), &x, e, r, a.samples, a.seed)?
                            }
                            Property::EpsPath => {
                                let pairs = path_pairs(&c, &x, r);
                                let mut v = search_eps_path_violation(&c, &x, e, &pairs, r / 100.0)?;
                                v.radius = r;
                                v.seed = a.seed;
                                v
                            }
                            Property::ClarkeRegularity | Property::ProxRegularity => unreachable!(),
                        };
                        verdicts.push(v);
                    }
                }
            }
        }
    }
    let mut w = sink(&a.out)?;
    match a.format {
        Format::Csv => write_verdicts_csv(&verdicts, &mut w)?,
        Format::Json => writeln!(w, "{}", to_json(&verdicts)?)?,
    }
    w.flush()?;
    let violated = verdicts.iter().filter(|v| v.violated()).count();
    eprintln!("{} verdicts, {violated} violated", verdicts.len());
    Ok(if violated > 0 { ExitCode::from(2) } else { ExitCode::SUCCESS })
}

fn cmd_path(a: &PathArgs) -> Result<ExitCode> {
    let c = a.set.load()?;
    let (x, xp) = (parse_point(&a.from, c.dim)?, parse_point(&a.to, c.dim)?);
    let rep = AmenableRep::from_oracle(&c, &x).context("ε-paths need an amenable representation")?;
    let (curve, report) = build_eps_path(&rep, &x, &xp, a.eps)?;
    if let Some(path) = &a.curve {
        write_curve_csv(&curve, BufWriter::new(File::create(path)?))?;
    }
    write_json(
        &a.report,
        &json!({ "set": c.name, "from": row(&x), "to": row(&xp), "tag": curve.tag(), "report": report }),
    )?;
    Ok(ExitCode::SUCCESS)
}

fn row(p: &Point) -> Vec<f64> {
    p.iter().copied().collect()
}

fn cmd_geodesic(a: &GeodesicArgs) -> Result<ExitCode> {
    let c = a.set.load()?;
    let (x, xp) = (parse_point(&a.from, c.dim)?, parse_point(&a.to, c.dim)?);
    let (curve, trace) = averaging_map(&c, &x, &xp, a.levels, &ProjectionConfig::default())?;
    if let Some(path) = &a.curve {
        write_curve_csv(&curve, BufWriter::new(File::create(path)?))?;
    }
    write_json(
        &a.report,
        &json!({
            "set": c.name,
            "from": row(&x),
            "to": row(&xp),
            "levels": trace.levels.len() - 1,
            "length": curve.length(),
            "level_lengths": trace.lengths(),
            "max_displacements": trace.displacements(),
            "converged": trace.converged,
            "second_difference": trace.second_difference,
        }),
    )?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_descend(a: &DescendArgs) -> Result<ExitCode> {
    let c = a.set.load()?;
    let x = parse_point(&a.point, c.dim)?;
    let f = Objective::parse(c.dim, &a.objective)?;
    let dir = a.direction.as_deref().map(|s| parse_point(s, c.dim)).transpose()?;
    let report = descent_path(&f, &c, &x, dir, a.tol)?;
    if let Some(path) = &a.curve {
        write_descent_csv(&report, BufWriter::new(File::create(path)?))?;
    }
    write_json(&a.report, &serde_json::to_value(&report)?)?;
    Ok(ExitCode::SUCCESS)
}

fn verdict_files(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(p)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|e| e == "csv"))
                .collect();
            found.sort();
            files.extend(found);
        } else if p.is_file() {
            files.push(p.clone());
        } else {
            bail!("missing input: {}", p.display());
        }
    }
    Ok(files)
}

fn cmd_report(a: &ReportArgs) -> Result<ExitCode> {
    let files = verdict_files(&a.input)?;
    if files.is_empty() {
        let names: Vec<String> = a.input.iter().map(|p| p.display().to_string()).collect();
        bail!("no verdict CSV files in {}", names.join(", "));
    }
    let mut rows: Vec<VerdictRow> = Vec::new();
    for f in &files {
        rows.extend(read_verdicts_csv(File::open(f)?).with_context(|| format!("reading {}", f.display()))?);
    }
    let mut w = sink(&a.out)?;
    write_matrix_csv(&rows, &mut w)?;
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("VGEO_THREADS") {
        let n: usize = v.parse().map_err(|_| anyhow!("VGEO_THREADS must be a positive integer, got `{v}`"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global()?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<ExitCode> {
    configure_threads()?;
    match &cli.command {
        Command::Check(a) => cmd_check(a),
        Command::Path(a) => cmd_path(a),
        Command::Geodesic(a) => cmd_geodesic(a),
        Command::Descend(a) => cmd_descend(a),
        Command::Report(a) => cmd_report(a),
    }
}

fn main() -> ExitCode {
    // Usage errors exit 1 so that 2 keeps meaning "violation found".
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
