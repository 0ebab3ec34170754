//! Command-line front end. Every run prints one JSON report; tables are
//! embedded as CSV strings.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::embedding::{
    choose_km, compression_obstruction, distortion_bounds, RhoSpec, DEFAULT_OBSTRUCTION_FACTOR,
};
use crate::error::{Error, Result};
use crate::family::FamilySpec;
use crate::folner::{rel, rel_profile, Mode, DEFAULT_EXACT_THRESHOLD};
use crate::graph::{elementary_lengths, CayleyGraph, ExportFormat, DEFAULT_VERTEX_CAP};
use crate::groups::{order_of_generator, GroupSpec, MarkedGroup};
use crate::ring::Ring;
use crate::spectral::{
    expander_scan, kappa_interval, laplacian_lambda1_with, Method, ScanReport, DEFAULT_TOL,
    DENSE_LIMIT,
};
use crate::topology::{agreement_radius, converge_certify};
use crate::union::{build_union, DEFAULT_MATRIX_LIMIT};
use crate::words::DEFAULT_BALL_CAP;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
/// Version of the JSON report layout.
pub const FORMAT_VERSION: u32 = 1;

const LONG_VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (report format 1)");

#[derive(Debug, Parser)]
#[command(name = "boxspace", version = LONG_VERSION, about = "Marked groups, Cayley graphs and box spaces")]
pub struct Cli {
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct FamilyArgs {
    /// Base spec with one free parameter, e.g. `sym` or `sl,ring=zmod{km},gens=st`.
    #[arg(long)]
    pub family: String,
    /// Inclusive index range `a..b[:step]`.
    #[arg(long, conflicts_with = "primes")]
    pub range: Option<String>,
    /// Explicit index list.
    #[arg(long)]
    pub primes: Option<String>,
    /// `k_m` rule: a constant, a list, or `plan:<rho>[,s=..][,c=..]`.
    #[arg(long)]
    pub km: Option<String>,
}

impl FamilyArgs {
    fn text(&self) -> String {
        let mut text = self.family.clone();
        for (flag, value) in [("--range", &self.range), ("--primes", &self.primes), ("--km", &self.km)] {
            if let Some(v) = value {
                text.push_str(&format!(" {flag} {v}"));
            }
        }
        text
    }

    fn parse(&self) -> Result<FamilySpec> {
        FamilySpec::parse(&self.text())
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum MethodArg {
    Auto,
    Dense,
    Iterative,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum FormatArg {
    Dot,
    Edges,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Agreement radius of two marked groups.
    BallAgree {
        #[arg(long)]
        first: String,
        #[arg(long)]
        second: String,
        #[arg(long)]
        radius: usize,
        #[arg(long, default_value_t = DEFAULT_BALL_CAP)]
        cap: usize,
    },
    /// Agreement radii of a family against a limit.
    Converge {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long)]
        limit: String,
        #[arg(long)]
        radius: usize,
        #[arg(long, default_value_t = DEFAULT_BALL_CAP)]
        cap: usize,
    },
    /// Relative boundary `Rel(G; R)`, or its profile up to `R`.
    Folner {
        #[arg(long)]
        group: String,
        #[arg(long)]
        radius: usize,
        #[arg(long, default_value_t = DEFAULT_EXACT_THRESHOLD)]
        threshold: usize,
        #[arg(long)]
        heuristic: bool,
        #[arg(long)]
        profile: bool,
    },
    /// Cayley graph export.
    Graph {
        #[arg(long)]
        group: String,
        #[arg(long, value_enum, default_value = "json")]
        format: FormatArg,
        #[arg(long, default_value_t = DEFAULT_VERTEX_CAP)]
        cap: usize,
    },
    /// Spectral gap of the Laplacian.
    Spectral {
        #[arg(long)]
        group: String,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long, value_enum, default_value = "auto")]
        method: MethodArg,
        #[arg(long, default_value_t = DEFAULT_VERTEX_CAP)]
        cap: usize,
    },
    /// Spectral gaps over a family.
    ExpanderScan {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_VERTEX_CAP)]
        cap: usize,
    },
    /// Distortion bracket into Hilbert space.
    Distortion {
        #[arg(long)]
        group: String,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_VERTEX_CAP)]
        cap: usize,
    },
    /// Coarse disjoint union of a family.
    Union {
        #[command(flatten)]
        family: FamilyArgs,
        /// Distance queries `index:vertex,index:vertex`.
        #[arg(long)]
        query: Vec<String>,
        #[arg(long, default_value_t = DEFAULT_MATRIX_LIMIT)]
        matrix_limit: usize,
        #[arg(long, default_value_t = DEFAULT_VERTEX_CAP)]
        cap: usize,
    },
    /// Compression obstruction trend over a family.
    Compression {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long)]
        rho: String,
        #[arg(long, default_value_t = DEFAULT_OBSTRUCTION_FACTOR)]
        factor: f64,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_VERTEX_CAP)]
        cap: usize,
    },
    /// Tower-form `k_m` plan.
    ChooseK {
        #[arg(long)]
        rho: String,
        /// Values of `m`, as `a..b[:step]`.
        #[arg(long)]
        m_range: String,
        #[arg(long, default_value_t = 3)]
        s: u32,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
    },
    /// Order of one generator (1-based).
    Order {
        #[arg(long)]
        group: String,
        #[arg(long)]
        generator: usize,
        #[arg(long, default_value_t = 1 << 20)]
        cap: u64,
    },
    /// Word lengths of the standard elementary generators of `SL(m, R)`.
    ElementaryLengths {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        ring: String,
        #[arg(long, default_value_t = DEFAULT_VERTEX_CAP)]
        cap: usize,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::BallAgree { .. } => "ball-agree",
            Command::Converge { .. } => "converge",
            Command::Folner { .. } => "folner",
            Command::Graph { .. } => "graph",
            Command::Spectral { .. } => "spectral",
            Command::ExpanderScan { .. } => "expander-scan",
            Command::Distortion { .. } => "distortion",
            Command::Union { .. } => "union",
            Command::Compression { .. } => "compression",
            Command::ChooseK { .. } => "choose-k",
            Command::Order { .. } => "order",
            Command::ElementaryLengths { .. } => "elementary-lengths",
        }
    }
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub command: String,
    pub config: Value,
    pub result: Value,
    pub tables: Value,
    pub tool_version: String,
    pub format_version: u32,
    pub wall_time_ms: u128,
}

/// Exit status for an error: 2 for invalid input, 3 for caps and numerics.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::CapExceeded(_) | Error::ExactTooLarge { .. } | Error::NumericalFailure(_) => 3,
        Error::Internal(_) | Error::Io(_) => 1,
        _ => 2,
    }
}

pub fn error_json(e: &Error) -> String {
    json!({"error": {"kind": e.kind(), "message": e.to_string()}}).to_string()
}

fn group(text: &str) -> Result<MarkedGroup> {
    MarkedGroup::new(text.parse::<GroupSpec>()?)
}

fn graph(text: &str, cap: usize) -> Result<CayleyGraph> {
    CayleyGraph::build(&group(text)?, cap)
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report values serialize")
}

fn parse_range(text: &str) -> Result<Vec<u64>> {
    // Reuse the family grammar on a throwaway base.
    Ok(FamilySpec::parse(&format!("sym --range {text}"))
        .map_err(|e| match e {
            Error::Parse { position, message } => Error::parse(position.saturating_sub(12), message),
            other => other,
        })?
        .indices)
}

fn spectral_method(g: &CayleyGraph, m: MethodArg) -> Method {
    match m {
        MethodArg::Dense => Method::Dense,
        MethodArg::Iterative => Method::Iterative,
        MethodArg::Auto if g.len() <= DENSE_LIMIT => Method::Dense,
        MethodArg::Auto => Method::Iterative,
    }
}

/// Runs one command and returns `(result, tables, config)`.
fn execute(command: &Command) -> Result<(Value, Value, Value)> {
    let none = Value::Object(Default::default());
    Ok(match command {
        Command::BallAgree {
            first,
            second,
            radius,
            cap,
        } => {
            let r = agreement_radius(&group(first)?, &group(second)?, *radius, *cap)?;
            (
                to_value(&r),
                none,
                json!({"first": first, "second": second, "radius": radius, "cap": cap}),
            )
        }
        Command::Converge {
            family,
            limit,
            radius,
            cap,
        } => {
            let spec = family.parse()?;
            let members = spec
                .members()?
                .into_iter()
                .map(|m| Ok((m.index, m.km, MarkedGroup::new(m.spec)?)))
                .collect::<Result<Vec<_>>>()?;
            let rows = converge_certify(&members, &group(limit)?, *radius, *cap)?;
            let mut csv = String::from("index,km,spec,radius,threshold_met,agrees\n");
            for r in &rows {
                let km = r.km.map(|k| k.to_string()).unwrap_or_default();
                csv.push_str(&format!(
                    "{},{km},\"{}\",{},{},{}\n",
                    r.index, r.spec, r.radius, r.threshold_met, r.agrees
                ));
            }
            (
                json!({"rows": rows}),
                json!({"agreement": csv}),
                json!({"family": spec.to_string(), "limit": limit, "radius": radius, "cap": cap}),
            )
        }
        Command::Folner {
            group: text,
            radius,
            threshold,
            heuristic,
            profile,
        } => {
            let g = group(text)?;
            let config =
                json!({"group": text, "radius": radius, "threshold": threshold, "heuristic": heuristic, "profile": profile});
            if *profile {
                let p = rel_profile(&g, *radius, *threshold)?;
                let rows: Vec<Value> = p
                    .entries
                    .iter()
                    .map(|e| json!({"radius": e.radius, "num": e.value.num, "den": e.value.den, "exact": e.exact}))
                    .collect();
                (json!({"profile": rows}), json!({"profile": p.to_csv()}), config)
            } else {
                let mode = if *heuristic { Mode::Heuristic } else { Mode::Exact };
                let e = rel(&g, *radius, mode, *threshold)?;
                (
                    json!({
                        "radius": e.radius,
                        "num": e.value.num,
                        "den": e.value.den,
                        "value": e.value.to_f64(),
                        "exact": e.exact,
                        "witness_size": e.witness.len(),
                    }),
                    none,
                    config,
                )
            }
        }
        Command::Graph { group: text, format, cap } => {
            let g = graph(text, *cap)?;
            let fmt = match format {
                FormatArg::Dot => ExportFormat::Dot,
                FormatArg::Edges => ExportFormat::Edges,
                FormatArg::Json => ExportFormat::Json,
            };
            let mut buf = Vec::new();
            g.export(fmt, &mut buf)?;
            let body = String::from_utf8(buf).expect("exports are UTF-8");
            let result = match format {
                FormatArg::Json => serde_json::from_str(&body).expect("graph JSON is valid"),
                _ => json!({"vertices": g.len(), "edge_count": g.edge_count(), "diameter": g.diameter()}),
            };
            let tables = match format {
                FormatArg::Json => none,
                FormatArg::Dot => json!({"dot": body}),
                FormatArg::Edges => json!({"edges": body}),
            };
            (result, tables, json!({"group": text, "format": format!("{format:?}").to_lowercase(), "cap": cap}))
        }
        Command::Spectral {
            group: text,
            tol,
            method,
            cap,
        } => {
            let g = graph(text, *cap)?;
            let r = laplacian_lambda1_with(&g, *tol, spectral_method(&g, *method))?;
            let kappa = kappa_interval(r.lambda1, g.degree());
            let csv = format!("{}\n{}\n", crate::spectral::SpectralReport::csv_header(), r.csv_row());
            (
                json!({"report": r, "kappa": kappa}),
                json!({"spectral": csv}),
                json!({"group": text, "tol": tol, "method": format!("{method:?}").to_lowercase(), "cap": cap}),
            )
        }
        Command::ExpanderScan { family, tol, cap } => {
            let spec = family.parse()?;
            let graphs = spec
                .members()?
                .into_iter()
                .map(|m| CayleyGraph::build(&MarkedGroup::new(m.spec)?, *cap))
                .collect::<Result<Vec<_>>>()?;
            let scan: ScanReport = expander_scan(&graphs, *tol)?;
            (
                to_value(&scan),
                json!({"scan": scan.to_csv()}),
                json!({"family": spec.to_string(), "tol": tol, "cap": cap}),
            )
        }
        Command::Distortion { group: text, tol, cap } => {
            let g = graph(text, *cap)?;
            let r = laplacian_lambda1_with(&g, *tol, spectral_method(&g, MethodArg::Auto))?;
            let b = distortion_bounds(&g, &r)?;
            (to_value(&b), none, json!({"group": text, "tol": tol, "cap": cap}))
        }
        Command::Union {
            family,
            query,
            matrix_limit,
            cap,
        } => {
            let spec = family.parse()?;
            let u = build_union(&spec, *cap)?;
            let mut answers = Vec::new();
            for q in query {
                let point = |p: &str| -> Result<(u64, usize)> {
                    let (i, v) = p
                        .split_once(':')
                        .ok_or_else(|| Error::parse(0, format!("expected `index:vertex`, got `{p}`")))?;
                    let bad = || Error::parse(0, format!("bad point `{p}`"));
                    Ok((i.parse().map_err(|_| bad())?, v.parse().map_err(|_| bad())?))
                };
                let (a, b) = q
                    .split_once(',')
                    .ok_or_else(|| Error::parse(0, format!("expected two points, got `{q}`")))?;
                let (a, b) = (point(a)?, point(b)?);
                answers.push(json!({"a": [a.0, a.1], "b": [b.0, b.1], "dist": u.dist(a, b)?}));
            }
            let export = u.export(*matrix_limit)?;
            (
                json!({"union": export, "queries": answers}),
                none,
                json!({"family": spec.to_string(), "queries": query, "matrix_limit": matrix_limit, "cap": cap}),
            )
        }
        Command::Compression {
            family,
            rho,
            factor,
            tol,
            cap,
        } => {
            let spec = family.parse()?;
            let rho_spec = RhoSpec::parse(rho)?;
            let mut data = Vec::new();
            for m in spec.members()? {
                let g = CayleyGraph::build(&MarkedGroup::new(m.spec)?, *cap)?;
                let r = laplacian_lambda1_with(&g, *tol, spectral_method(&g, MethodArg::Auto))?;
                let b = distortion_bounds(&g, &r)?;
                data.push((b.diam as f64, b.lower_jv));
            }
            let report = compression_obstruction(&data, &rho_spec, *factor)?;
            let mut csv = String::from("diam,lower,ratio\n");
            for r in &report.rows {
                csv.push_str(&format!("{},{},{}\n", r.diam, r.lower, r.ratio));
            }
            (
                to_value(&report),
                json!({"compression": csv}),
                json!({"family": spec.to_string(), "rho": rho, "factor": factor, "tol": tol, "cap": cap}),
            )
        }
        Command::ChooseK { rho, m_range, s, c } => {
            let ms = parse_range(m_range)?;
            let plan = choose_km(&RhoSpec::parse(rho)?, &ms, *s, *c)?;
            let mut csv = String::from("m,tower_height,top_value\n");
            for r in &plan.rows {
                csv.push_str(&format!("{},{},{}\n", r.m, r.tower_height, r.top_value));
            }
            (
                to_value(&plan),
                json!({"plan": csv}),
                json!({"rho": rho, "m_range": m_range, "s": s, "c": c}),
            )
        }
        Command::Order {
            group: text,
            generator,
            cap,
        } => {
            let order = order_of_generator(&group(text)?, *generator, *cap)?;
            (
                json!({"order": order.to_string()}),
                none,
                json!({"group": text, "generator": generator, "cap": cap}),
            )
        }
        Command::ElementaryLengths { m, ring, cap } => {
            let ring_value: Ring = format!("sl:m={m},ring={ring},gens=st")
                .parse::<GroupSpec>()
                .map(|s| match s {
                    GroupSpec::Sl { ring, .. } => ring,
                    _ => unreachable!(),
                })?;
            let table = elementary_lengths(*m, ring_value, *cap)?;
            let mut csv = String::from("i,j,sign,length\n");
            for r in &table.rows {
                csv.push_str(&format!("{},{},{},{}\n", r.i, r.j, r.sign, r.length));
            }
            (
                to_value(&table),
                json!({"lengths": csv}),
                json!({"m": m, "ring": ring, "cap": cap}),
            )
        }
    })
}

/// Runs a parsed command line and returns the report.
pub fn run_cli(cli: &Cli) -> Result<RunReport> {
    let start = Instant::now();
    let work = || execute(&cli.command);
    let (result, tables, config) = match cli.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Internal(e.to_string()))?
            .install(work)?,
        None => work()?,
    };
    Ok(RunReport {
        command: cli.command.name().to_string(),
        config,
        result,
        tables,
        tool_version: TOOL_VERSION.to_string(),
        format_version: FORMAT_VERSION,
        wall_time_ms: start.elapsed().as_millis(),
    })
}

/// Entry point: parses `args`, writes the report or an error JSON, and
/// returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return 0;
            }
            let err = Error::parse(0, e.to_string().trim().to_string());
            let _ = writeln!(stderr, "{}", error_json(&err));
            return 2;
        }
    };
    let outcome = run_cli(&cli).and_then(|report| {
        let text = serde_json::to_string_pretty(&report).expect("report serializes");
        match &cli.out {
            Some(path) => std::fs::write(path, text + "\n").map_err(Error::from),
            None => writeln!(stdout, "{text}").map_err(Error::from),
        }
    });
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "{}", error_json(&e));
            exit_code(&e)
        }
    }
}
