//! Command-line front end: `gen`, `reduce`, `test`, `decode`, `solve`,
//! `verify`, `report`.
//!
//! Every run is a pure function of its arguments — outputs embed the exact
//! config and seed used, nothing embeds wall-clock — so identical argv gives
//! byte-identical files. Exit codes: 0 success, 1 a verify bound failed,
//! 2 usage or capacity trouble.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::analysis::{
    agreement, decode_lc, decode_ug, decode_ug_instance, lp_consistent, max_agreement_exact,
    LpOutcome,
};
use crate::dataset::{read_examples, write_examples, write_to, DatasetHeader};
use crate::gadgets::{
    default_beta, default_delta, estimate_pass_probability, matching_dictator, t2_dictator,
    GadgetConfig, Variant,
};
use crate::gauss::RngSeed;
use crate::poly::Polynomial;
use crate::reduction::{
    build_folding, generate_planted_lc, generate_planted_ug, instance_hash, reduce_lc, reduce_ug,
    take_examples, Instance, InstanceDocument, ReductionConfig,
};
use crate::verify::{run_suite, VerifyParams};
use crate::{Error, Result};

#[derive(Parser)]
#[command(
    name = "ptflab",
    version,
    about = "Dictator-test gadgets, UG/LC reductions, and PTF agreement solvers at desk scale"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a planted Unique Games or Label Cover instance.
    Gen(GenArgs),
    /// Stream labeled examples from an instance into an example-set file.
    Reduce(ReduceArgs),
    /// Estimate a polynomial's pass probability under a dictator test.
    Test(TestArgs),
    /// Decode candidate labels from a hypothesis polynomial.
    Decode(DecodeArgs),
    /// Run the LP feasibility / exact max-agreement solvers on an example set.
    Solve(SolveArgs),
    /// Run acceptance checks and report pass/fail per bound.
    Verify(VerifyArgs),
    /// Summarize an instance or example-set file with its provenance.
    Report(ReportArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum InstanceKind {
    Ug,
    Lc,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(clap::Args)]
struct GenArgs {
    /// Instance kind.
    #[arg(value_enum)]
    kind: InstanceKind,
    #[arg(long, default_value_t = 4)]
    nu: usize,
    #[arg(long, default_value_t = 4)]
    nv: usize,
    /// u-side graph degree.
    #[arg(long, default_value_t = 2)]
    deg: usize,
    /// Alphabet size (u-side for lc).
    #[arg(long, default_value_t = 4)]
    k: usize,
    /// v-side alphabet for lc (default 2k).
    #[arg(long)]
    m: Option<usize>,
    /// Fraction of edges whose constraint is rerandomized.
    #[arg(long, default_value_t = 0.0)]
    eta: f64,
    /// Record the planted labeling in the output document.
    #[arg(long)]
    planted: bool,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output path (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct ReduceArgs {
    /// Instance file produced by `gen`.
    #[arg(long)]
    instance: PathBuf,
    /// Gadget degree (Unique Games reductions; Label Cover is linear).
    #[arg(long, default_value_t = 1)]
    d: usize,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Number of examples to draw.
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Example sets are CSV; `--format json` is rejected.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct TestArgs {
    /// t1 | td | t2
    #[arg(long, default_value = "td")]
    variant: String,
    #[arg(long, default_value_t = 16)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// dictator:i | const:c | file:path
    #[arg(long, default_value = "dictator:1")]
    poly: String,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct DecodeArgs {
    /// Hypothesis to decode: file:path (a polynomial JSON).
    #[arg(long)]
    poly: String,
    /// Decode against a whole instance; omit for single-edge decoding.
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Required for single-edge decoding; defaults to 1/log2(k) with an instance.
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct SolveArgs {
    /// Example-set file produced by `reduce`.
    #[arg(long)]
    instance: PathBuf,
    /// Hypothesis degree.
    #[arg(long, alias = "degree", default_value_t = 1)]
    d: usize,
    /// Run the margin-1 LP feasibility solver (default when no mode is given).
    #[arg(long)]
    lp: bool,
    /// Run the exact arrangement-enumeration optimum.
    #[arg(long)]
    exact: bool,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct VerifyArgs {
    /// all | completeness | soundness | reduction | gauss | solvers | determinism
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long, default_value_t = 16)]
    n: usize,
    /// Restrict degree-swept checks to one degree.
    #[arg(long)]
    d: Option<usize>,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct ReportArgs {
    /// Instance or example-set file.
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parses argv, runs the subcommand, maps the outcome to an exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    crate::par::init_threads(std::env::var("PTFLAB_THREADS").ok().and_then(|v| v.parse().ok()));
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Gen(args) => cmd_gen(args),
        Command::Reduce(args) => cmd_reduce(args),
        Command::Test(args) => cmd_test(args),
        Command::Decode(args) => cmd_decode(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Report(args) => cmd_report(args),
    }
}

fn require_json(format: Format, what: &str) -> Result<()> {
    if format != Format::Json {
        return Err(Error::invalid(format!("{what} reports are JSON; pass --format json")));
    }
    Ok(())
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn load_poly(path: &Path) -> Result<Polynomial> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

/// Resolves a `dictator:i | const:c | file:path` spec against a test config.
fn resolve_poly(spec: &str, cfg: &GadgetConfig) -> Result<Polynomial> {
    match spec.split_once(':') {
        Some(("dictator", i)) => {
            let i: usize = i
                .parse()
                .map_err(|_| Error::invalid(format!("bad dictator index '{i}'")))?;
            match cfg.variant {
                Variant::T1 | Variant::Td => matching_dictator(cfg.n, cfg.d, i),
                Variant::T2 => t2_dictator(cfg.n, i),
            }
        }
        Some(("const", c)) => {
            let c: f64 =
                c.parse().map_err(|_| Error::invalid(format!("bad constant '{c}'")))?;
            Polynomial::constant(cfg.example_dimension(), c)
        }
        Some(("file", path)) => load_poly(Path::new(path)),
        _ => Err(Error::invalid(format!(
            "bad poly spec '{spec}' (expected dictator:i | const:c | file:path)"
        ))),
    }
}

fn cmd_gen(args: GenArgs) -> Result<i32> {
    let seed = RngSeed::new(args.seed);
    let doc = match args.kind {
        InstanceKind::Ug => {
            let (inst, plant) =
                generate_planted_ug(args.nu, args.nv, args.deg, args.k, args.eta, seed)?;
            InstanceDocument {
                instance: Instance::Ug(inst),
                planted: args.planted.then_some(plant),
            }
        }
        InstanceKind::Lc => {
            let m = args.m.unwrap_or(2 * args.k);
            let (inst, plant) =
                generate_planted_lc(args.nu, args.nv, args.deg, args.k, m, args.eta, seed)?;
            InstanceDocument {
                instance: Instance::Lc(inst),
                planted: args.planted.then_some(plant),
            }
        }
    };
    eprintln!("instance {} (seed {})", instance_hash(&doc.instance), args.seed);
    match &args.out {
        Some(path) => doc.write(path)?,
        None => println!("{}", doc.to_json()?),
    }
    Ok(0)
}

fn cmd_reduce(args: ReduceArgs) -> Result<i32> {
    if args.format != Format::Csv {
        return Err(Error::invalid("example sets are CSV; pass --format csv"));
    }
    let doc = InstanceDocument::read(&args.instance)?;
    let seed = RngSeed::new(args.seed);
    let hash = instance_hash(&doc.instance);
    let (dim, cfg, examples) = match &doc.instance {
        Instance::Ug(inst) => {
            let base = ReductionConfig::for_ug(inst, args.d, seed)?;
            let cfg = ReductionConfig::with_params(
                base.d,
                args.beta.unwrap_or(base.beta),
                args.delta.unwrap_or(base.delta),
                seed,
            )?;
            let examples = take_examples(reduce_ug(inst, &cfg), args.samples)?;
            (inst.example_dimension(), cfg, examples)
        }
        Instance::Lc(inst) => {
            let base = ReductionConfig::for_lc(inst, seed)?;
            let cfg = ReductionConfig::with_params(
                base.d,
                args.beta.unwrap_or(base.beta),
                args.delta.unwrap_or(base.delta),
                seed,
            )?;
            let basis = build_folding(inst);
            let examples = take_examples(reduce_lc(inst, &basis, &cfg)?, args.samples)?;
            (inst.example_dimension(), cfg, examples)
        }
    };
    let source = json!({
        "command": "reduce",
        "instance": hash,
        "d": cfg.d,
        "beta": cfg.beta,
        "delta": cfg.delta,
    });
    let header = DatasetHeader { dim, seed, count: examples.len(), source };
    match &args.out {
        Some(path) => write_examples(path, &header, &examples)?,
        None => write_to(&mut std::io::stdout().lock(), &header, &examples)?,
    }
    Ok(0)
}

fn cmd_test(args: TestArgs) -> Result<i32> {
    require_json(args.format, "test")?;
    let variant: Variant = args.variant.parse()?;
    let cfg = GadgetConfig::with_params(
        variant,
        args.n,
        args.d,
        args.beta.unwrap_or(default_beta(args.n)),
        args.delta.unwrap_or(default_delta(variant, args.n)),
        RngSeed::new(args.seed),
    )?;
    let f = resolve_poly(&args.poly, &cfg)?;
    let est = estimate_pass_probability(&f, &cfg, args.samples)?;
    let report = json!({
        "command": "test",
        "config": cfg,
        "poly": args.poly,
        "samples": est.samples,
        "estimate": est.estimate,
        "ci99": est.ci99,
    });
    emit(&report, args.out.as_deref())?;
    Ok(0)
}

fn cmd_decode(args: DecodeArgs) -> Result<i32> {
    require_json(args.format, "decode")?;
    let f = match args.poly.split_once(':') {
        Some(("file", path)) => load_poly(Path::new(path))?,
        _ => return Err(Error::invalid("decode needs --poly file:path")),
    };
    let report = match &args.instance {
        Some(path) => {
            let doc = InstanceDocument::read(path)?;
            let hash = instance_hash(&doc.instance);
            match &doc.instance {
                Instance::Ug(inst) => {
                    let beta = args.beta.unwrap_or(1.0 / (inst.k() as f64).log2());
                    let decoded = decode_ug_instance(&f, inst, beta)?;
                    let within = decoded.within_caps();
                    json!({
                        "command": "decode",
                        "mode": "ug_instance",
                        "instance": hash,
                        "beta": beta,
                        "within_caps": within,
                        "decoded": decoded,
                    })
                }
                Instance::Lc(inst) => {
                    let decoded = decode_lc(&f, inst)?;
                    let within = decoded.within_caps();
                    json!({
                        "command": "decode",
                        "mode": "lc_instance",
                        "instance": hash,
                        "within_caps": within,
                        "decoded": decoded,
                    })
                }
            }
        }
        None => {
            let beta = args
                .beta
                .ok_or_else(|| Error::invalid("single-edge decode needs --beta"))?;
            let decoded = decode_ug(&f, beta)?;
            let within = decoded.within_caps();
            json!({
                "command": "decode",
                "mode": "edge",
                "beta": beta,
                "within_caps": within,
                "decoded": decoded,
            })
        }
    };
    emit(&report, args.out.as_deref())?;
    Ok(0)
}

fn cmd_solve(args: SolveArgs) -> Result<i32> {
    require_json(args.format, "solve")?;
    let (header, examples) = read_examples(&args.instance)?;
    let mut body = serde_json::Map::new();
    body.insert("command".into(), json!("solve"));
    body.insert("dataset".into(), json!(header));
    body.insert("examples".into(), json!(examples.len()));
    body.insert("d".into(), json!(args.d));
    if args.lp || !args.exact {
        let lp = match lp_consistent(&examples, header.dim, args.d)? {
            LpOutcome::Feasible(h) => {
                let rep = agreement(&h, &examples)?;
                json!({ "outcome": "feasible", "agreement": rep.agreement, "witness": h })
            }
            LpOutcome::Infeasible => json!({ "outcome": "infeasible" }),
        };
        body.insert("lp".into(), lp);
    }
    if args.exact {
        let (fraction, witness) = max_agreement_exact(&examples, header.dim, args.d)?;
        body.insert(
            "exact".into(),
            json!({ "max_agreement": fraction, "witness": witness }),
        );
    }
    emit(&serde_json::Value::Object(body), args.out.as_deref())?;
    Ok(0)
}

fn cmd_verify(args: VerifyArgs) -> Result<i32> {
    require_json(args.format, "verify")?;
    let params =
        VerifyParams { n: args.n, d: args.d, samples: args.samples, seed: args.seed };
    let report = run_suite(&args.suite, &params)?;
    for check in &report.checks {
        eprintln!(
            "{} {}: {}",
            check.id,
            check.name,
            if check.pass { "pass" } else { "FAIL" }
        );
    }
    emit(&report, args.out.as_deref())?;
    Ok(if report.pass { 0 } else { 1 })
}

fn cmd_report(args: ReportArgs) -> Result<i32> {
    require_json(args.format, "report")?;
    let report = match InstanceDocument::read(&args.instance) {
        Ok(doc) => {
            let hash = instance_hash(&doc.instance);
            match &doc.instance {
                Instance::Ug(inst) => json!({
                    "command": "report",
                    "kind": "ug",
                    "instance": hash,
                    "U": inst.nu(),
                    "V": inst.nv(),
                    "k": inst.k(),
                    "edges": inst.edges().len(),
                    "example_dimension": inst.example_dimension(),
                    "planted": doc.planted.is_some(),
                }),
                Instance::Lc(inst) => json!({
                    "command": "report",
                    "kind": "lc",
                    "instance": hash,
                    "U": inst.nu(),
                    "V": inst.nv(),
                    "k": inst.k(),
                    "m": inst.m(),
                    "edges": inst.edges().len(),
                    "example_dimension": inst.example_dimension(),
                    "planted": doc.planted.is_some(),
                }),
            }
        }
        Err(_) => {
            let (header, examples) = read_examples(&args.instance)?;
            let positives = examples.iter().filter(|e| e.b == 1).count();
            json!({
                "command": "report",
                "kind": "examples",
                "header": header,
                "rows": examples.len(),
                "positive_fraction": positives as f64 / examples.len() as f64,
            })
        }
    };
    emit(&report, args.out.as_deref())?;
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_vec(args: &[&str]) -> i32 {
        run(args.iter().map(|s| s.to_string()))
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run_vec(&["ptflab", "nonsense"]), 2);
        assert_eq!(run_vec(&["ptflab", "test", "--variant", "bogus", "--samples", "10"]), 2);
        assert_eq!(run_vec(&["ptflab", "verify", "--suite", "bogus"]), 2);
        assert_eq!(run_vec(&["ptflab", "reduce", "--instance", "/nope.json"]), 2);
    }

    #[test]
    fn help_and_version_exit_0() {
        assert_eq!(run_vec(&["ptflab", "--help"]), 0);
        assert_eq!(run_vec(&["ptflab", "--version"]), 0);
    }

    #[test]
    fn poly_spec_parses_and_rejects() {
        let cfg = GadgetConfig::new(Variant::Td, 8, 2, RngSeed::new(1)).unwrap();
        assert_eq!(resolve_poly("dictator:3", &cfg).unwrap().dim(), 16);
        assert_eq!(resolve_poly("const:-2.5", &cfg).unwrap().constant_term(), -2.5);
        assert!(resolve_poly("dictator:x", &cfg).is_err());
        assert!(resolve_poly("gibberish", &cfg).is_err());
        let t2 = GadgetConfig::new(Variant::T2, 8, 2, RngSeed::new(1)).unwrap();
        assert_eq!(resolve_poly("dictator:0", &t2).unwrap().dim(), 8);
    }

    #[test]
    fn test_subcommand_writes_report() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("report.json");
        let code = run_vec(&[
            "ptflab", "test", "--variant", "td", "--n", "8", "--d", "2", "--samples", "2000",
            "--seed", "5", "--out", out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        let text = std::fs::read_to_string(&out).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["samples"], 2000);
        assert_eq!(v["config"]["n"], 8);
        assert!(v["estimate"].as_f64().unwrap() > 0.5);
    }

    #[test]
    fn gen_reduce_solve_pipeline() {
        let dir = tempfile::tempdir().unwrap();
        let inst = dir.path().join("inst.json");
        let data = dir.path().join("data.csv");
        let solved = dir.path().join("solved.json");
        assert_eq!(
            run_vec(&[
                "ptflab", "gen", "ug", "--nu", "2", "--nv", "2", "--deg", "2", "--k", "3",
                "--eta", "0", "--planted", "--seed", "11", "--out",
                inst.to_str().unwrap(),
            ]),
            0
        );
        assert_eq!(
            run_vec(&[
                "ptflab", "reduce", "--instance", inst.to_str().unwrap(), "--d", "1",
                "--samples", "40", "--seed", "12", "--out", data.to_str().unwrap(),
            ]),
            0
        );
        assert_eq!(
            run_vec(&[
                "ptflab", "solve", "--instance", data.to_str().unwrap(), "--degree", "1",
                "--lp", "--out", solved.to_str().unwrap(),
            ]),
            0
        );
        let v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&solved).unwrap()).unwrap();
        assert_eq!(v["examples"], 40);
        assert!(v["lp"]["outcome"].is_string());
    }

    #[test]
    fn verify_solvers_suite_passes_quickly() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("verify.json");
        let code = run_vec(&[
            "ptflab", "verify", "--suite", "solvers", "--n", "8", "--samples", "2000",
            "--seed", "9", "--out", out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        let v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
        assert_eq!(v["suite"], "solvers");
        assert_eq!(v["pass"], true);
    }

    #[test]
    fn format_mismatch_is_a_usage_error() {
        assert_eq!(run_vec(&["ptflab", "verify", "--suite", "solvers", "--format", "csv"]), 2);
        let dir = tempfile::tempdir().unwrap();
        let inst = dir.path().join("i.json");
        assert_eq!(
            run_vec(&[
                "ptflab", "gen", "lc", "--nu", "2", "--nv", "2", "--deg", "2", "--k", "2",
                "--seed", "3", "--out", inst.to_str().unwrap()
            ]),
            0
        );
        assert_eq!(
            run_vec(&[
                "ptflab", "reduce", "--instance", inst.to_str().unwrap(), "--format", "json"
            ]),
            2
        );
    }
}
