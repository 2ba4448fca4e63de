//! `lorentzcg`: classification, Clebsch-Gordan tables, verification and
//! tensor-operator reports for `Spin(3,1)` modules.
//!
//! JSON is the canonical output; `--csv` flattens each report into rows and
//! drops the nesting. Exit status: 0 success, 1 mathematical failure,
//! 2 usage error.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use lorentzcg::coupling::{decompose, CouplingProblem};
use lorentzcg::repr::{casimir_eigenvalues, classify};
use lorentzcg::tensorop::{
    intertwiner_residual, js_ansatz_residuals, js_commutators, js_normalisation_product, js_operators,
    js_reconstruct_residuals, projection_from_table, reduced_matrix_element, CheckLine, JsFactor,
};
use lorentzcg::verify::{self, Config, ACCEPTANCE, SUPPLEMENTARY};
use lorentzcg::{Error, FiniteLabel, Generator, HalfInt, IrrepLabel64};

const SCHEMA: u32 = 1;

#[derive(Parser)]
#[command(name = "lorentzcg", version, about = "Clebsch-Gordan decompositions and tensor operators for Spin(3,1) modules")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Seed for every random sample; printed in each report
    #[arg(long, global = true, default_value_t = verify::DEFAULT_SEED)]
    seed: u64,

    /// Replace the default tolerances
    #[arg(long, global = true, env = "LORENTZCG_TOL", value_parser = positive)]
    tolerance: Option<f64>,

    /// Worker threads (default: one per core)
    #[arg(long, global = true, env = "LORENTZCG_THREADS")]
    threads: Option<usize>,

    /// Write to this file instead of standard output
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    /// Emit JSON (the default)
    #[arg(long, global = true, conflicts_with = "csv")]
    json: bool,

    /// Emit CSV rows instead of JSON
    #[arg(long, global = true)]
    csv: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Classify V_{lambda,rho} and print its Casimir values
    Classify(LabelArgs),
    /// Clebsch-Gordan table of F^A_gamma (x) V_{lambda,rho} up to J_max
    Decompose {
        #[command(flatten)]
        coupling: CouplingArgs,
        /// Twice the largest total spin J
        #[arg(long = "jmax-x2")]
        jmax_x2: i32,
    },
    /// Run the verification battery
    Verify {
        /// Restrict to these groups (e.g. 1 4 s-composite)
        #[arg(long, num_args = 1..)]
        only: Vec<String>,
    },
    /// Jordan-Schwinger operators, reconstruction and commutator residuals
    Js {
        #[command(flatten)]
        label: LabelArgs,
        #[arg(long = "A", value_enum, allow_hyphen_values = true)]
        a: SignChoice,
        /// Twice the truncation spin
        #[arg(long = "jcut-x2")]
        jcut_x2: i32,
    },
    /// Wigner-Eckart projections: intertwiner residuals and reduced elements
    WeCheck {
        #[command(flatten)]
        coupling: CouplingArgs,
        /// Twice the truncation spin of the source module
        #[arg(long = "jcut-x2")]
        jcut_x2: i32,
        /// Only the pair with this doubled nu (default: all)
        #[arg(long = "nu-x2", allow_negative_numbers = true)]
        nu_x2: Option<i32>,
    },
}

#[derive(Args)]
struct LabelArgs {
    /// Twice lambda
    #[arg(long = "lambda-x2", allow_negative_numbers = true)]
    lambda_x2: i32,
    /// rho as RE,IM (or RE)
    #[arg(long, value_parser = complex, allow_hyphen_values = true)]
    rho: Complex64,
}

impl LabelArgs {
    fn label(&self) -> Result<IrrepLabel64, Error> {
        IrrepLabel64::new(HalfInt::from_twice(self.lambda_x2), self.rho)
    }
}

#[derive(Args)]
struct CouplingArgs {
    #[command(flatten)]
    label: LabelArgs,
    /// Twice gamma
    #[arg(long = "gamma-x2")]
    gamma_x2: i32,
    /// A = +1 or -1
    #[arg(long = "A", value_parser = sign, allow_hyphen_values = true)]
    a: i8,
}

impl CouplingArgs {
    fn problem(&self) -> Result<CouplingProblem<f64>, Error> {
        CouplingProblem::new(FiniteLabel::new(HalfInt::from_twice(self.gamma_x2), self.a)?, self.label.label()?)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SignChoice {
    #[value(name = "1", alias = "+1")]
    Plus,
    #[value(name = "-1")]
    Minus,
    Both,
}

impl SignChoice {
    fn signs(self) -> Vec<i8> {
        match self {
            SignChoice::Plus => vec![1],
            SignChoice::Minus => vec![-1],
            SignChoice::Both => vec![1, -1],
        }
    }
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
        _ => Err(format!("expected a positive number, got {s:?}")),
    }
}

fn sign(s: &str) -> Result<i8, String> {
    match s {
        "1" | "+1" => Ok(1),
        "-1" => Ok(-1),
        _ => Err(format!("expected +1 or -1, got {s:?}")),
    }
}

fn complex(s: &str) -> Result<Complex64, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |p: &str| p.parse::<f64>().map_err(|_| format!("cannot read {p:?} as a number"));
    let z = match parts.as_slice() {
        [re] => Complex64::new(num(re)?, 0.0),
        [re, im] => Complex64::new(num(re)?, num(im)?),
        _ => return Err(format!("expected RE,IM, got {s:?}")),
    };
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err("rho must be finite".into());
    }
    Ok(z)
}

fn cj(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

fn label_json(l: &IrrepLabel64) -> Value {
    json!({ "lambda_x2": l.lambda.twice(), "rho": cj(l.rho) })
}

/// A report: JSON body and CSV rows.
struct Output {
    json: Value,
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
    passed: bool,
}

enum Failure {
    Usage(String),
    Math(Error),
    Io(anyhow::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain(_) | Error::NonFinite | Error::Incompatible(_) => Failure::Usage(e.to_string()),
            other => Failure::Math(other),
        }
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Domain(_) => "Domain",
        Error::NonFinite => "NonFinite",
        Error::NotAnEigenvalue { .. } => "NotAnEigenvalue",
        Error::NoConvergence { .. } => "NoConvergence",
        Error::NotDecomposable { .. } => "NotDecomposable",
        Error::AbsentTarget { .. } => "AbsentTarget",
        Error::DegenerateNormalisation => "DegenerateNormalisation",
        Error::Consistency(_) => "Consistency",
        Error::InsufficientSample(_) => "InsufficientSample",
        Error::Incompatible(_) => "Incompatible",
        Error::Singular => "Singular",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            Cli::command().error(ErrorKind::ValueValidation, "--threads must be at least 1").exit();
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: thread pool already initialised: {e}");
        }
    }
    let result = match &cli.command {
        Command::Classify(args) => cmd_classify(&cli, args),
        Command::Decompose { coupling, jmax_x2 } => cmd_decompose(&cli, coupling, *jmax_x2),
        Command::Verify { only } => cmd_verify(&cli, only),
        Command::Js { label, a, jcut_x2 } => cmd_js(&cli, label, *a, *jcut_x2),
        Command::WeCheck { coupling, jcut_x2, nu_x2 } => cmd_we_check(&cli, coupling, *jcut_x2, *nu_x2),
    };
    match result.and_then(|out| write(&cli, &out).map(|_| out.passed)) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            let body = json!({ "schema": SCHEMA, "seed": cli.seed, "error": { "kind": "Usage", "message": msg } });
            let _ = write_text(&cli, &format!("{body}\n"));
            Cli::command().error(ErrorKind::ValueValidation, msg).exit()
        }
        Err(Failure::Math(e)) => {
            let body = json!({ "schema": SCHEMA, "seed": cli.seed, "error": { "kind": error_kind(&e), "message": e.to_string() } });
            let _ = write_text(&cli, &format!("{body}\n"));
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn write_text(cli: &Cli, text: &str) -> anyhow::Result<()> {
    match &cli.output {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

fn write(cli: &Cli, out: &Output) -> Result<(), Failure> {
    let text = if cli.csv {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Failure::Io(e.into());
        w.write_record(&out.header).map_err(io)?;
        for row in &out.rows {
            w.write_record(row).map_err(io)?;
        }
        String::from_utf8(w.into_inner().map_err(|e| Failure::Io(anyhow::anyhow!("{e}")))?).map_err(|e| Failure::Io(e.into()))?
    } else {
        let mut body = out.json.clone();
        if let Value::Object(map) = &mut body {
            map.insert("schema".into(), json!(SCHEMA));
            map.insert("seed".into(), json!(cli.seed));
        }
        format!("{}\n", serde_json::to_string_pretty(&body).map_err(|e| Failure::Io(e.into()))?)
    };
    write_text(cli, &text).map_err(Failure::Io)
}

fn require_margin(label: &IrrepLabel64, jcut_x2: i32) -> Result<HalfInt, Failure> {
    let cut = HalfInt::from_twice(jcut_x2);
    let need = label.lambda.abs() + HalfInt::from_int(2);
    if cut < need {
        return Err(Failure::Usage(format!("--jcut-x2 {jcut_x2} leaves no interior: need --jcut-x2 >= 2|lambda| + 4 = {}", need.twice())));
    }
    Ok(cut)
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

fn cmd_classify(_cli: &Cli, args: &LabelArgs) -> Result<Output, Failure> {
    let label = args.label()?;
    let class = classify(&label);
    let (c1, c2) = casimir_eigenvalues(&label);
    let json = json!({
        "label": label_json(&label),
        "classification": class,
        "unitary": class.is_unitary(),
        "finite_dimensional": label.is_finite_dimensional(),
        "casimirs": { "c1": cj(c1), "c2": cj(c2) },
    });
    let class_name = json["classification"]["class"].as_str().unwrap_or_default().to_string();
    let row = vec![label.lambda.twice().to_string(), num(label.rho.re), num(label.rho.im), class_name, class.is_unitary().to_string()];
    Ok(Output { json, header: vec!["lambda_x2", "rho_re", "rho_im", "class", "unitary"], rows: vec![row], passed: true })
}

fn cmd_decompose(_cli: &Cli, args: &CouplingArgs, jmax_x2: i32) -> Result<Output, Failure> {
    let problem = args.problem()?;
    let table = decompose(&problem, HalfInt::from_twice(jmax_x2))?;
    let mut rows = Vec::new();
    let blocks: Vec<Value> = table
        .blocks
        .iter()
        .map(|b| {
            let pairs: Vec<Value> = b
                .pairs
                .iter()
                .enumerate()
                .map(|(k, p)| {
                    let coeffs: Vec<[f64; 2]> = b.a.column(k).into_iter().map(cj).collect();
                    let inverse: Vec<[f64; 2]> = b.b.row(k).iter().copied().map(cj).collect();
                    for (i, &j) in b.omega.iter().enumerate() {
                        rows.push(vec![
                            b.j_total.twice().to_string(),
                            p.nu.twice().to_string(),
                            p.lambda.twice().to_string(),
                            num(p.p.re),
                            num(p.p.im),
                            j.twice().to_string(),
                            num(coeffs[i][0]),
                            num(coeffs[i][1]),
                            num(inverse[i][0]),
                            num(inverse[i][1]),
                        ]);
                    }
                    json!({
                        "nu_x2": p.nu.twice(),
                        "Lambda_x2": p.lambda.twice(),
                        "P": cj(p.p),
                        "coeffs": coeffs,
                        "inverse": inverse,
                        "residual": b.residuals[k],
                    })
                })
                .collect();
            json!({
                "J_x2": b.j_total.twice(),
                "omega_x2": b.omega.iter().map(|j| j.twice()).collect::<Vec<_>>(),
                "pairs": pairs,
            })
        })
        .collect();
    let json = json!({
        "problem": { "gamma_x2": args.gamma_x2, "A": args.a, "label": label_json(&problem.infinite) },
        "blocks": blocks,
    });
    let header = vec!["J_x2", "nu_x2", "Lambda_x2", "P_re", "P_im", "j_x2", "A_re", "A_im", "B_re", "B_im"];
    Ok(Output { json, header, rows, passed: true })
}

fn cmd_verify(cli: &Cli, only: &[String]) -> Result<Output, Failure> {
    let config = Config { seed: cli.seed, tolerance: cli.tolerance };
    let ids: Vec<&str> = if only.is_empty() {
        ACCEPTANCE.iter().chain(SUPPLEMENTARY.iter()).copied().collect()
    } else {
        only.iter().map(String::as_str).collect()
    };
    let report = verify::run(&ids, &config)?;
    let mut rows = Vec::new();
    for g in &report.groups {
        for c in &g.checks {
            rows.push(vec![
                g.id.clone(),
                c.name.clone(),
                if c.passed { "pass" } else { "fail" }.into(),
                num(c.residual),
                num(c.tolerance),
                c.anchor.clone(),
            ]);
        }
    }
    for g in &report.groups {
        eprintln!("{:>11} {} {}", g.id, if g.passed { "pass" } else { "FAIL" }, g.title);
    }
    let passed = report.passed;
    let json = serde_json::to_value(&report).map_err(|e| Failure::Io(e.into()))?;
    Ok(Output { json, header: vec!["group", "check", "status", "residual", "tolerance", "anchor"], rows, passed })
}

#[derive(Serialize)]
struct Intertwining {
    generator: String,
    lowering: f64,
    raising: f64,
}

fn worst(lines: &[CheckLine]) -> f64 {
    lines.iter().map(|c| c.residual).fold(0.0, f64::max)
}

fn cmd_js(cli: &Cli, args: &LabelArgs, choice: SignChoice, jcut_x2: i32) -> Result<Output, Failure> {
    let label = args.label()?;
    let cut = require_margin(&label, jcut_x2)?;
    let tol = cli.tolerance.unwrap_or(1e-10);
    let mut results = Vec::new();
    let mut rows = Vec::new();
    let mut passed = true;
    for a in choice.signs() {
        let ops = js_operators(&label, a, cut)?;
        let reconstruct = js_reconstruct_residuals(&label, a, cut)?;
        let ansatz = js_ansatz_residuals(&label, a, cut)?;
        let mut commutators = Vec::new();
        for b in [1i8, -1] {
            for mut line in js_commutators(&label, a, b, cut)? {
                line.name = format!("{} (B={b:+})", line.name);
                commutators.push(line);
            }
        }
        let intertwining = Generator::ALL
            .iter()
            .map(|&g| {
                Ok(Intertwining {
                    generator: g.name().into(),
                    lowering: intertwiner_residual(&ops.lowering, g)?,
                    raising: intertwiner_residual(&ops.raising, g)?,
                })
            })
            .collect::<Result<Vec<_>, Error>>()?;
        let (product, target) = js_normalisation_product(&label, a)?;
        let max_inter = intertwining.iter().map(|i| i.lowering.max(i.raising)).fold(0.0, f64::max);
        let ok = worst(&reconstruct) <= tol && worst(&ansatz) <= tol && worst(&commutators) <= tol && max_inter <= tol.max(1e-9);
        passed &= ok;
        let mut operators = serde_json::Map::new();
        for (name, op) in ops.all() {
            for (r, c, v) in op.entries() {
                let (t, s) = (op.rows().state(r), op.cols().state(c));
                rows.push(vec![
                    a.to_string(),
                    name.clone(),
                    t.j.twice().to_string(),
                    t.m.twice().to_string(),
                    s.j.twice().to_string(),
                    s.m.twice().to_string(),
                    num(v.re),
                    num(v.im),
                ]);
            }
            operators.insert(name, serde_json::to_value(op.to_json()).map_err(|e| Failure::Io(e.into()))?);
        }
        let lowered = JsFactor::new(a, false, 1).shifted(&label);
        let raised = JsFactor::new(a, true, 1).shifted(&label);
        results.push(json!({
            "A": a,
            "lowering_target": label_json(&lowered),
            "raising_target": label_json(&raised),
            "operators": operators,
            "reconstruct": reconstruct,
            "ansatz": ansatz,
            "commutators": commutators,
            "intertwiner": intertwining,
            "normalisation": { "t_shifted_times_t_tilde": cj(product), "lambda_plus_a_rho": cj(target) },
            "passed": ok,
        }));
    }
    let json = json!({
        "label": label_json(&label),
        "j_cut_x2": cut.twice(),
        "tolerance": tol,
        "passed": passed,
        "results": results,
    });
    let header = vec!["A", "operator", "row_j_x2", "row_m_x2", "col_j_x2", "col_m_x2", "re", "im"];
    Ok(Output { json, header, rows, passed })
}

fn cmd_we_check(cli: &Cli, args: &CouplingArgs, jcut_x2: i32, nu_x2: Option<i32>) -> Result<Output, Failure> {
    let problem = args.problem()?;
    let cut = require_margin(&problem.infinite, jcut_x2)?;
    let tol = cli.tolerance.unwrap_or(1e-9);
    let g = problem.gamma();
    let nus: Vec<HalfInt> = match nu_x2 {
        Some(t) => vec![HalfInt::from_twice(t)],
        None => lorentzcg::half::mrange(g)?,
    };
    let top = lorentzcg::half::jset_upto(problem.lambda(), g, cut + g)?
        .last()
        .copied()
        .ok_or_else(|| Failure::Usage("no admissible J below the truncation".into()))?;
    let table = decompose(&problem, top)?;
    let mut passed = true;
    let mut rows = Vec::new();
    let mut pairs = Vec::new();
    for nu in nus {
        let t = projection_from_table(&table, nu, cut)?;
        let mut residuals = serde_json::Map::new();
        let mut max_res = 0.0f64;
        for gen in Generator::ALL {
            let r = intertwiner_residual(&t, gen)?;
            max_res = max_res.max(r);
            residuals.insert(gen.name().into(), json!(r));
            rows.push(vec![nu.twice().to_string(), format!("intertwiner {}", gen.name()), num(r)]);
        }
        let red = reduced_matrix_element(&t, &table)?;
        let ok = max_res <= tol && (red.value - 1.0).norm() <= tol && red.scatter <= tol;
        passed &= ok;
        rows.push(vec![nu.twice().to_string(), "reduced_re".into(), num(red.value.re)]);
        rows.push(vec![nu.twice().to_string(), "reduced_im".into(), num(red.value.im)]);
        rows.push(vec![nu.twice().to_string(), "scatter".into(), num(red.scatter)]);
        pairs.push(json!({
            "nu_x2": nu.twice(),
            "target": label_json(&t.target.label),
            "selection_violations": t.selection_violations(),
            "intertwiner": residuals,
            "reduced": { "value": cj(red.value), "scatter": red.scatter, "samples": red.samples },
            "passed": ok,
        }));
    }
    let json = json!({
        "problem": { "gamma_x2": args.gamma_x2, "A": args.a, "label": label_json(&problem.infinite) },
        "j_cut_x2": cut.twice(),
        "tolerance": tol,
        "passed": passed,
        "pairs": pairs,
    });
    Ok(Output { json, header: vec!["nu_x2", "quantity", "value"], rows, passed })
}
