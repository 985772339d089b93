use std::fs;
use std::io::Write;

use jlo_core::acceptance::{self, CriterionReport};
use jlo_core::expectations::{heat_expectation, HeatContext, Method, VertexSet, DEFAULT_SAMPLES};
use jlo_core::homotopy::{beta_independence, endpoint_grid, sweep_invariant, DeformationFamily, SweepTable};
use jlo_core::jlo::{equivariant_index_beta, jlo_component, pair, PairingInput, PairingOptions};
use jlo_core::linalg::{c, CMat};
use jlo_core::split::{coupling_sweep, split_pairing, CouplingMode, SplitTriple};
use jlo_core::triple::{SpectralTriple, ValidationReport};
use jlo_core::Error;
use serde_json::{json, Value};

use crate::input::{parse_grid, parse_list, Doc, SchemaError};
use crate::{Cli, Command, MethodArg};

pub const EXIT_OK: u8 = 0;
pub const EXIT_VALIDATION: u8 = 1;
pub const EXIT_CONVERGENCE: u8 = 2;
pub const EXIT_IO: u8 = 3;

enum Failure {
    Schema(String),
    Io(String),
    Core(Error),
    /// A check that ran to completion and failed; the payload is the report.
    Rejected(Value),
}

impl From<SchemaError> for Failure {
    fn from(e: SchemaError) -> Self {
        Failure::Schema(e.0)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

/// A successful result, either JSON or CSV text.
enum Payload {
    Json(Value),
    Csv(Vec<u8>),
}

type Outcome = Result<Payload, Failure>;

pub fn run(cli: &Cli) -> u8 {
    let outcome = dispatch(cli);
    let (code, body) = match outcome {
        Ok(Payload::Csv(bytes)) => return emit_bytes(cli, &bytes, EXIT_OK),
        Ok(Payload::Json(v)) => (EXIT_OK, envelope(cli, "result", v)),
        Err(Failure::Rejected(v)) => (EXIT_VALIDATION, envelope(cli, "result", v)),
        Err(f) => {
            let (code, kind, message) = classify(f);
            eprintln!("jlo: {message}");
            let err = json!({ "kind": kind, "message": message, "exit_code": code });
            (code, envelope(cli, "error", err))
        }
    };
    match crate::output::to_bytes(&body) {
        Ok(bytes) => emit_bytes(cli, &bytes, code),
        Err(e) => {
            eprintln!("jlo: cannot serialize output: {e}");
            EXIT_IO
        }
    }
}

fn emit_bytes(cli: &Cli, bytes: &[u8], code: u8) -> u8 {
    let written = match &cli.opts.output {
        Some(p) => fs::write(p, bytes).map_err(|e| format!("{}: {e}", p.display())),
        None => std::io::stdout().write_all(bytes).map_err(|e| e.to_string()),
    };
    match written {
        Ok(()) => code,
        Err(e) => {
            eprintln!("jlo: cannot write output: {e}");
            EXIT_IO
        }
    }
}

fn classify(f: Failure) -> (u8, String, String) {
    match f {
        Failure::Schema(m) => (EXIT_IO, "Schema".into(), m),
        Failure::Io(m) => (EXIT_IO, "Io".into(), m),
        Failure::Rejected(_) => unreachable!("handled by run"),
        Failure::Core(e) => {
            let kind = format!("{e:?}");
            let kind = kind.split(|ch: char| !ch.is_alphanumeric()).next().unwrap_or("").to_string();
            let code = if e.is_validation() {
                EXIT_VALIDATION
            } else if e.is_convergence() || matches!(e, Error::ComplexityCap { .. } | Error::NonFinite(_)) {
                EXIT_CONVERGENCE
            } else {
                EXIT_IO
            };
            (code, kind, e.to_string())
        }
    }
}

fn command_name(c: Command) -> &'static str {
    match c {
        Command::Validate => "validate",
        Command::Index => "index",
        Command::Pair => "pair",
        Command::Jlo => "jlo",
        Command::Sweep => "sweep",
        Command::BetaScan => "beta-scan",
        Command::Endpoint => "endpoint",
        Command::SplitPair => "split-pair",
        Command::CouplingSweep => "coupling-sweep",
        Command::Selftest => "selftest",
    }
}

fn envelope(cli: &Cli, key: &str, v: Value) -> Value {
    let o = &cli.opts;
    let mut out = serde_json::Map::new();
    out.insert("command".into(), json!(command_name(cli.command)));
    out.insert(
        "provenance".into(),
        json!({
            "tool": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "seed": o.seed,
            "quad_nodes": o.quad_nodes,
            "max_level": o.max_level,
            "series_tol": o.tol,
            "method": match o.method { MethodArg::Exact => "exact", MethodArg::Quadrature => "quadrature" },
            "lambda_grid": o.lambda_grid,
            "eps_grid": o.eps_grid,
            "beta_list": o.beta_list,
            "defaults": {
                "quad_nodes": jlo_core::jlo::DEFAULT_QUAD_NODES,
                "max_level": jlo_core::jlo::DEFAULT_MAX_LEVEL,
                "series_tol": jlo_core::jlo::DEFAULT_SERIES_TOL,
                "triple_tol": jlo_core::triple::DEFAULT_TOL,
                "mc_samples": DEFAULT_SAMPLES,
            },
        }),
    );
    out.insert(key.into(), v);
    Value::Object(out)
}

fn to_value<T: serde::Serialize>(v: &T) -> Result<Value, Failure> {
    serde_json::to_value(v).map_err(|e| Failure::Io(e.to_string()))
}

fn load(cli: &Cli) -> Result<Doc, Failure> {
    let path = cli
        .opts
        .input
        .as_ref()
        .ok_or_else(|| Failure::Schema("--input is required for this command".into()))?;
    let text = fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    Ok(Doc::parse(&text)?)
}

fn grid(flag: &Option<String>, name: &str, list: bool) -> Result<Vec<f64>, Failure> {
    let s = flag.as_ref().ok_or_else(|| Failure::Schema(format!("--{name} is required for this command")))?;
    Ok(if list { parse_list(s)? } else { parse_grid(s)? })
}

fn options(cli: &Cli, doc: &Doc) -> Result<PairingOptions, Failure> {
    Ok(PairingOptions {
        quad_nodes: cli.opts.quad_nodes,
        max_level: cli.opts.max_level,
        tol: cli.opts.tol,
        beta: doc.f64_or("beta", 1.0)?,
    })
}

/// `a` (default `"gamma"`), `m` (default 1) and `g` (default 0).
fn pairing_input(doc: &Doc, dim: usize, gamma: &CMat) -> Result<PairingInput, Failure> {
    let m = doc.usize_or("m", 1)?;
    if m == 0 {
        return Err(Failure::Schema("\"m\" must be positive".into()));
    }
    let g = doc.usize_or("g", 0)?;
    let a = if doc.has("a") {
        doc.operator("a", dim, m, gamma)?
    } else {
        jlo_core::linalg::identity(m).kronecker(gamma)
    };
    Ok(PairingInput::new(a, m, g))
}

fn validated(t: &SpectralTriple) -> Result<(), Failure> {
    reject_if_failed(t.validate()?)
}

fn validated_split(s: &SplitTriple) -> Result<(), Failure> {
    reject_if_failed(s.validate()?)
}

fn reject_if_failed(r: ValidationReport) -> Result<(), Failure> {
    if r.pass {
        Ok(())
    } else {
        Err(Failure::Rejected(json!({ "validation": to_value(&r)? })))
    }
}

fn table(cli: &Cli, t: &SweepTable) -> Outcome {
    let csv = cli
        .opts
        .output
        .as_ref()
        .and_then(|p| p.extension())
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if csv {
        let mut buf = Vec::new();
        t.write_csv(&mut buf)?;
        Ok(Payload::Csv(buf))
    } else {
        Ok(Payload::Json(to_value(t)?))
    }
}

fn dispatch(cli: &Cli) -> Outcome {
    match cli.command {
        Command::Validate => validate(cli),
        Command::Index => index(cli),
        Command::Pair => pair_cmd(cli),
        Command::Jlo => jlo(cli),
        Command::Sweep => sweep(cli),
        Command::BetaScan => beta_scan(cli),
        Command::Endpoint => endpoint(cli),
        Command::SplitPair => split_pair(cli),
        Command::CouplingSweep => coupling(cli),
        Command::Selftest => selftest(cli),
    }
}

fn validate(cli: &Cli) -> Outcome {
    let doc = load(cli)?;
    let report = if doc.has("Q1") {
        doc.split()?.validate()?
    } else {
        doc.triple()?.validate()?
    };
    let v = json!({ "validation": to_value(&report)? });
    if report.pass {
        Ok(Payload::Json(v))
    } else {
        Err(Failure::Rejected(v))
    }
}

fn index(cli: &Cli) -> Outcome {
    let doc = load(cli)?;
    let t = doc.triple()?;
    validated(&t)?;
    let beta = doc.f64_or("beta", 1.0)?;
    let g = doc.usize_or("g", 0)?;
    let chars = (0..t.order())
        .map(|h| equivariant_index_beta(&t, h, beta))
        .collect::<jlo_core::Result<Vec<_>>>()?;
    let value = *chars.get(g).ok_or(Error::GroupIndex { index: g, order: t.order() })?;
    Ok(Payload::Json(json!({ "g": g, "beta": beta, "value": value, "characters": chars })))
}

fn pair_cmd(cli: &Cli) -> Outcome {
    let doc = load(cli)?;
    let t = doc.triple()?;
    validated(&t)?;
    let input = pairing_input(&doc, t.dim, &t.gamma)?;
    let r = pair(&t, &input, options(cli, &doc)?)?;
    Ok(Payload::Json(to_value(&r)?))
}

fn jlo(cli: &Cli) -> Outcome {
    let doc = load(cli)?;
    let t = doc.triple()?;
    validated(&t)?;
    let args = doc.matrices("args", t.dim)?;
    let g = doc.usize_or("g", 0)?;
    let beta = doc.f64_or("beta", 1.0)?;
    let (value, err, method) = match cli.opts.method {
        MethodArg::Exact => (jlo_component(&t, &args, g, beta)?, 0.0, "exact"),
        MethodArg::Quadrature => {
            if args.is_empty() {
                return Err(Error::InvalidInput("empty argument list".into()).into());
            }
            if !(beta > 0.0) {
                return Err(Error::InvalidInput(format!("beta = {beta} must be positive")).into());
            }
            let mut v = vec![args[0].clone()];
            for a in &args[1..] {
                v.push(t.derivative(a)?);
            }
            let n = (args.len() - 1) as f64;
            let ctx = HeatContext::from_triple(&t)?;
            let method = Method::Quadrature { samples: DEFAULT_SAMPLES, seed: cli.opts.seed };
            let e = heat_expectation(&ctx, &VertexSet::new(v).with_beta(beta), g, method)?;
            let s = beta.powf(-0.5 * n);
            (e.value * s, e.estimated_error * s, "quadrature")
        }
    };
    Ok(Payload::Json(json!({
        "level": args.len() - 1,
        "g": g,
        "beta": beta,
        "method": method,
        "value": value,
        "estimated_error": err,
    })))
}

fn family(doc: &Doc, t: SpectralTriple, grid: &[f64]) -> Result<DeformationFamily, Failure> {
    let dq = doc.matrix("dQ", t.dim)?;
    let interval = (grid[0], grid[grid.len() - 1]);
    let mut f = DeformationFamily::linear(t.clone(), dq, interval);
    if let Some(z) = doc.matrix_opt("ZstarZ", t.dim)? {
        f = f.with_regularizer(z);
    }
    Ok(f)
}

fn sweep(cli: &Cli) -> Outcome {
    let doc = load(cli)?;
    let lambdas = grid(&cli.opts.lambda_grid, "lambda-grid", false)?;
    let t = doc.triple()?;
    validated(&t)?;
    let input = pairing_input(&doc, t.dim, &t.gamma)?;
    let f = family(&doc, t, &lambdas)?;
    let table_ = sweep_invariant(&f, &input, &lambdas, options(cli, &doc)?)?;
    table(cli, &table_)
}

fn beta_scan(cli: &Cli) -> Outcome {
    let doc = load(cli)?;
    let betas = grid(&cli.opts.beta_list, "beta-list", true)?;
    let t = doc.triple()?;
    validated(&t)?;
    let input = pairing_input(&doc, t.dim, &t.gamma)?;
    let table_ = beta_independence(&t, &input, &betas, options(cli, &doc)?)?;
    table(cli, &table_)
}

fn endpoint(cli: &Cli) -> Outcome {
    let doc = load(cli)?;
    let lambdas = grid(&cli.opts.lambda_grid, "lambda-grid", false)?;
    let eps = grid(&cli.opts.eps_grid, "eps-grid", false)?;
    let t = doc.triple()?;
    validated(&t)?;
    let input = pairing_input(&doc, t.dim, &t.gamma)?;
    let f = family(&doc, t, &lambdas)?;
    let g = endpoint_grid(&f, &eps, &lambdas, &input, cli.opts.quad_nodes)?;
    if cli.opts.output.as_ref().and_then(|p| p.extension()).is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        return table(cli, &g.table);
    }
    Ok(Payload::Json(to_value(&g)?))
}

fn split_pair(cli: &Cli) -> Outcome {
    let doc = load(cli)?;
    let s = doc.split()?;
    validated_split(&s)?;
    let input = pairing_input(&doc, s.dim, &s.gamma)?;
    let r = split_pairing(&s, &input, options(cli, &doc)?)?;
    Ok(Payload::Json(to_value(&r)?))
}

fn coupling(cli: &Cli) -> Outcome {
    let doc = load(cli)?;
    let lambdas = grid(&cli.opts.lambda_grid, "lambda-grid", false)?;
    let s = doc.split()?;
    let d = s.dim;
    let zero = CMat::zeros(d, d);
    let dq1 = doc.matrix_opt("dQ1", d)?.unwrap_or_else(|| zero.clone());
    let dq2 = doc.matrix_opt("dQ2", d)?.unwrap_or(zero);
    let mode = match doc.str_or("mode", "momentum-fixed")? {
        "momentum-fixed" => CouplingMode::MomentumFixed,
        "q1-commutes" => CouplingMode::Q1Commutes,
        other => return Err(Failure::Schema(format!("unknown mode \"{other}\""))),
    };
    let input = pairing_input(&doc, d, &s.gamma)?;
    let fam = move |l: f64| {
        let mut x = s.clone();
        x.q1 = &s.q1 + &dq1 * c(l, 0.0);
        x.q2 = &s.q2 + &dq2 * c(l, 0.0);
        x
    };
    let table_ = coupling_sweep(fam, &input, &lambdas, mode, options(cli, &doc)?)?;
    table(cli, &table_)
}

fn selftest(cli: &Cli) -> Outcome {
    let reports: Vec<CriterionReport> = acceptance::run_all(cli.opts.seed);
    for r in &reports {
        eprintln!("{}", r.line());
    }
    let passed = reports.iter().filter(|r| r.pass).count();
    eprintln!("{passed} of {} criteria passed", reports.len());
    let v = json!({ "passed": passed, "total": reports.len(), "criteria": to_value(&reports)? });
    if passed == reports.len() {
        Ok(Payload::Json(v))
    } else {
        Err(Failure::Rejected(v))
    }
}
