use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use accr_core::analysis::{
    self, classify, geometry_records, membership_records, soliton_records, validation_records, ConeConstants,
    SampleSet, SolitonVerdict,
};
use accr_core::manifold::{builtin_source, BUILTIN_NAMES};
use accr_core::report::{CheckRecord, Report, Verdict};
use accr_core::tolerance::Tolerances;
use accr_core::{load_manifold, AccRStructure, ConstantBindings, Execution, MetricTag, Potential};
use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use sha2::{Digest, Sha256};

const DEFAULT_INPUT: &str = "builtin:cone-flat-fiber";

#[derive(Parser, Debug)]
#[command(
    name = "accr",
    version,
    about = "Checks almost contact B-metric manifolds given in one chart"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the structure identities and the signature.
    Validate(Common),
    /// Sasaki-like, F5, F5^0 and F0 membership.
    Classify(Common),
    /// Connection, curvature and F identities for both metrics.
    Curvature(Common),
    /// Solve the Yamabe almost soliton equation for a potential.
    Soliton(SolitonArgs),
    /// Reproduce the cone example (defaults to the builtin cone).
    #[command(name = "verify-paper")]
    VerifyCone(Common),
    /// validate + curvature + classify in one report.
    Report(Common),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Manifold file, or builtin:NAME.
    input: Option<String>,
    /// Builtin manifold name.
    #[arg(long, conflicts_with = "input")]
    builtin: Option<String>,
    /// Total number of sample points, pinned points included.
    #[arg(long, default_value_t = 64, value_parser = clap::value_parser!(u64).range(1..))]
    samples: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Pinned sample point, e.g. t=2,u=0,v=0. Repeatable.
    #[arg(long = "point")]
    points: Vec<String>,
    /// Constant binding name=value. Repeatable.
    #[arg(long = "const")]
    consts: Vec<String>,
    /// One tolerance for every check.
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(short = 'o', long = "output")]
    output: Option<PathBuf>,
    /// Leave wall time out so reports are byte-identical across runs.
    #[arg(long)]
    omit_timing: bool,
    /// Evaluate samples one at a time.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args, Debug, Clone)]
struct SolitonArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "g")]
    metric: MetricTag,
    /// k in the vertical potential k xi.
    #[arg(long, conflicts_with = "potential_field")]
    potential_k: Option<String>,
    /// Potential components separated by ';'.
    #[arg(long)]
    potential_field: Option<String>,
    /// Exit 1 unless the verdict is soliton.
    #[arg(long)]
    expect_soliton: bool,
}

struct Loaded {
    identity: String,
    structure: AccRStructure,
    bindings: BTreeMap<String, f64>,
    points: Vec<Vec<f64>>,
    tol: Tolerances,
    exec: Execution,
}

fn parse_assignments(items: &[String], what: &str) -> Result<Vec<(String, f64)>> {
    let mut out = Vec::new();
    for item in items {
        for part in item.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (name, value) = part
                .split_once('=')
                .ok_or_else(|| anyhow!("{what} `{part}` is not of the form name=value"))?;
            let value: f64 = value
                .trim()
                .parse()
                .with_context(|| format!("{what} `{part}` has a non-numeric value"))?;
            out.push((name.trim().to_string(), value));
        }
    }
    Ok(out)
}

fn parse_point(src: &str, coords: &[String]) -> Result<Vec<f64>> {
    let pairs = parse_assignments(&[src.to_string()], "point")?;
    let mut point = vec![None; coords.len()];
    for (name, value) in pairs {
        let i = coords
            .iter()
            .position(|c| *c == name)
            .ok_or_else(|| anyhow!("point `{src}` names unknown coordinate `{name}`"))?;
        point[i] = Some(value);
    }
    point
        .into_iter()
        .zip(coords)
        .map(|(v, c)| v.ok_or_else(|| anyhow!("point `{src}` is missing coordinate `{c}`")))
        .collect()
}

fn read_input(common: &Common, default: Option<&str>) -> Result<(String, Vec<u8>)> {
    let source = match (&common.builtin, &common.input) {
        (Some(name), _) => format!("builtin:{name}"),
        (None, Some(input)) => input.clone(),
        (None, None) => default
            .map(str::to_string)
            .ok_or_else(|| anyhow!("no manifold given; pass a file, builtin:NAME or --builtin NAME"))?,
    };
    if let Some(name) = source.strip_prefix("builtin:") {
        let src = builtin_source(name)
            .ok_or_else(|| anyhow!("unknown builtin `{name}` (known: {})", BUILTIN_NAMES.join(", ")))?;
        return Ok((source.clone(), src.as_bytes().to_vec()));
    }
    let bytes = std::fs::read(&source).with_context(|| format!("cannot read `{source}`"))?;
    let mut identity = String::from("sha256:");
    for b in Sha256::digest(&bytes) {
        let _ = write!(identity, "{b:02x}");
    }
    Ok((identity, bytes))
}

fn load(common: &Common, default_input: Option<&str>, default_consts: &[(&str, f64)]) -> Result<Loaded> {
    let (identity, bytes) = read_input(common, default_input)?;
    let structure = load_manifold(&bytes).with_context(|| format!("cannot load {identity}"))?;
    let mut bindings: BTreeMap<String, f64> = default_consts.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    bindings.extend(parse_assignments(&common.consts, "constant")?);
    let mut cb = ConstantBindings::new();
    for (k, v) in &bindings {
        cb.bind(k.clone(), *v)
            .with_context(|| format!("cannot bind constant `{k}`"))?;
    }
    let structure = structure.bind(&cb)?;
    let mut points = common
        .points
        .iter()
        .map(|p| parse_point(p, &structure.chart.coordinates))
        .collect::<Result<Vec<_>>>()?;
    for p in &points {
        structure.check_point(p)?;
    }
    let extra = (common.samples as usize).saturating_sub(points.len());
    if extra > 0 {
        points.extend(structure.chart.latin_hypercube(extra, common.seed));
    }
    let tol = match common.tolerance {
        Some(t) if !(t > 0.0 && t.is_finite()) => bail!("tolerance must be positive, got {t}"),
        Some(t) => Tolerances::uniform(t),
        None => Tolerances::default(),
    };
    let exec = if common.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    Ok(Loaded {
        identity,
        structure,
        bindings,
        points,
        tol,
        exec,
    })
}

fn config_echo(command: &str, common: &Common, l: &Loaded, extra: serde_json::Value) -> serde_json::Value {
    let mut cfg = json!({
        "command": command,
        "samples": common.samples,
        "seed": common.seed,
        "constants": l.bindings,
        "tolerances": l.tol,
        "points": l.points,
    });
    if let (Some(obj), serde_json::Value::Object(more)) = (cfg.as_object_mut(), extra) {
        obj.extend(more);
    }
    cfg
}

struct Outcome {
    report: Report,
    failed: bool,
}

fn finish(
    command: &str,
    common: &Common,
    l: &Loaded,
    extra: serde_json::Value,
    checks: Vec<CheckRecord>,
    started: Instant,
    failed: impl Fn(&[CheckRecord]) -> bool,
) -> Outcome {
    let failed = failed(&checks);
    let report = Report {
        manifold: l.identity.clone(),
        config: config_echo(command, common, l, extra),
        checks,
        wall_ms: (!common.omit_timing).then(|| started.elapsed().as_secs_f64() * 1e3),
    };
    Outcome { report, failed }
}

fn any_failed(checks: &[CheckRecord]) -> bool {
    checks.iter().any(CheckRecord::failed)
}

/// Membership verdicts describe the manifold; they do not fail a run.
fn any_failed_outside_classes(checks: &[CheckRecord]) -> bool {
    checks.iter().any(|c| c.failed() && !c.name.starts_with("class."))
}

fn cmd_validate(common: &Common, started: Instant) -> Result<Outcome> {
    let l = load(common, None, &[])?;
    let v = l.structure.validate_with_tolerance(&l.points, l.tol.differential)?;
    let checks = validation_records(&v);
    Ok(finish("validate", common, &l, json!({}), checks, started, any_failed))
}

fn cmd_classify(common: &Common, started: Instant) -> Result<Outcome> {
    let l = load(common, None, &[])?;
    let set = SampleSet::compute(&l.structure, &l.points, l.exec)?;
    let m = classify(&set, &l.tol);
    let checks = membership_records(&m, &l.tol);
    Ok(finish(
        "classify",
        common,
        &l,
        json!({ "membership": m }),
        checks,
        started,
        any_failed_outside_classes,
    ))
}

fn cmd_curvature(common: &Common, started: Instant) -> Result<Outcome> {
    let l = load(common, None, &[])?;
    let set = SampleSet::compute(&l.structure, &l.points, l.exec)?;
    let checks = geometry_records(&l.structure, &set, &l.tol)?;
    Ok(finish("curvature", common, &l, json!({}), checks, started, any_failed))
}

fn cmd_report(common: &Common, started: Instant) -> Result<Outcome> {
    let l = load(common, None, &[])?;
    let v = l.structure.validate_with_tolerance(&l.points, l.tol.differential)?;
    let mut checks = validation_records(&v);
    let set = SampleSet::compute(&l.structure, &l.points, l.exec)?;
    checks.extend(geometry_records(&l.structure, &set, &l.tol)?);
    let m = classify(&set, &l.tol);
    checks.extend(membership_records(&m, &l.tol));
    Ok(finish(
        "report",
        common,
        &l,
        json!({ "membership": m }),
        checks,
        started,
        any_failed_outside_classes,
    ))
}

fn cmd_soliton(args: &SolitonArgs, started: Instant) -> Result<Outcome> {
    let common = &args.common;
    let l = load(common, None, &[])?;
    let s = &l.structure;
    let names: Vec<String> = l.bindings.keys().cloned().collect();
    let parse = |src: &str| {
        let e = s
            .chart
            .parse_with(src, &names)
            .with_context(|| format!("cannot parse potential `{src}`"))?;
        if let Some(c) = e.constants().into_iter().find(|c| !l.bindings.contains_key(c)) {
            bail!("potential uses unbound constant `{c}`");
        }
        Ok(e)
    };
    let mut checks = Vec::new();
    let potential = match (&args.potential_k, &args.potential_field) {
        (Some(k), _) => {
            let p = Potential::Vertical(parse(k)?);
            p.into_vertical(s, args.metric, &l.points)?.as_potential()
        }
        (None, Some(field)) => {
            let comps = field.split(';').map(parse).collect::<Result<Vec<_>>>()?;
            if comps.len() != s.dim() {
                bail!(
                    "potential field has {} components, manifold dimension is {}",
                    comps.len(),
                    s.dim()
                );
            }
            let p = Potential::Field(comps);
            match p.clone().into_vertical(s, args.metric, &l.points) {
                Ok(v) => v.as_potential(),
                Err(accr_core::manifold::ManifoldError::NotVertical(why)) => {
                    checks.push(
                        CheckRecord::from_residuals("potential.vertical", &format!("theta = k xi: {why}"), vec![], 0.0)
                            .with_verdict(Verdict::Fail),
                    );
                    p
                }
                Err(e) => return Err(e.into()),
            }
        }
        (None, None) => bail!("soliton needs --potential-k or --potential-field"),
    };
    let geoms = SampleSet::compute(s, &l.points, l.exec)?;
    let result = analysis::yamabe_soliton_solve(s, geoms.tagged(args.metric), &potential, &l.tol)?;
    checks.extend(soliton_records(&result, &l.tol));
    let expect = args.expect_soliton;
    let verdict = result.verdict;
    let extra = json!({
        "metric": args.metric,
        "potential_k": args.potential_k,
        "potential_field": args.potential_field,
        "verdict": verdict,
        "taxonomy": result.torse_forming.as_ref().map(|t| t.taxonomy.names()),
    });
    Ok(finish("soliton", common, &l, extra, checks, started, move |c| {
        let precondition = c
            .iter()
            .any(|r| (r.name.ends_with(".lie_routes") || r.name == "potential.vertical") && r.failed());
        precondition || (expect && verdict != SolitonVerdict::Soliton)
    }))
}

fn cmd_verify_cone(common: &Common, started: Instant) -> Result<Outcome> {
    let defaults = ConeConstants::default();
    let l = load(
        common,
        Some(DEFAULT_INPUT),
        &[
            ("c", defaults.c),
            ("ct", defaults.c_tilde),
            ("kprime", defaults.k_prime),
        ],
    )?;
    let consts = ConeConstants {
        c: l.bindings["c"],
        c_tilde: l.bindings["ct"],
        k_prime: l.bindings["kprime"],
    };
    let checks = analysis::verify_cone_suite(&l.structure, consts, &l.points, l.exec, &l.tol)?;
    Ok(finish(
        "verify-paper",
        common,
        &l,
        json!({}),
        checks,
        started,
        any_failed,
    ))
}

fn emit(outcome: &Outcome, common: &Common) -> Result<()> {
    let text = match common.format {
        Format::Json => outcome.report.to_json(),
        Format::Table => outcome.report.to_table(),
    };
    match &common.output {
        Some(path) => std::fs::write(path, text).with_context(|| format!("cannot write `{}`", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let (outcome, common) = match &cli.command {
        Command::Validate(c) => (cmd_validate(c, started), c),
        Command::Classify(c) => (cmd_classify(c, started), c),
        Command::Curvature(c) => (cmd_curvature(c, started), c),
        Command::Soliton(a) => (cmd_soliton(a, started), &a.common),
        Command::VerifyCone(c) => (cmd_verify_cone(c, started), c),
        Command::Report(c) => (cmd_report(c, started), c),
    };
    let outcome = match outcome {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = emit(&outcome, common) {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    if outcome.failed {
        for c in outcome.report.checks.iter().filter(|c| c.failed()) {
            eprintln!(
                "FAIL {} (residual {:.3e}, tolerance {:.1e}): {}",
                c.name, c.residual, c.tolerance, c.anchor
            );
        }
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}
