//! Command-line front end: evaluation, representation/consistency suites,
//! singularity queries and character tables, all with JSON output for
//! scripting and regression baselines.
//!
//! Exit codes: 0 success, 1 usage or evaluation error, 2 singular point,
//! 3 budget/depth exceeded.

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use mzeta::continuation::{eval_auto, mt_base_continuation, EvalConfig, EvalKind};
use mzeta::dirichlet::{characters_mod, CharacterTuple};
use mzeta::error::Error;
use mzeta::series::{
    ez_region_contains, zeta_av_direct, zeta_ez_direct, ArgVector, EvalResult, Shape,
};
use mzeta::singularity::Hyperplane;
use mzeta::Complex64;

mod suites;

#[derive(Parser)]
#[command(name = "mzeta", version, about = "Mordell-Tornheim multiple zeta/L-function evaluator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format (csv applies to suite output)
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// key=value config file; command-line flags win
    #[arg(long, global = true)]
    config: Option<String>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one of the series/functions at a complex argument vector
    Eval(EvalArgs),
    /// Run a consistency suite and report per-point deltas
    Check(CheckArgs),
    /// List the candidate singular hyperplanes of a shape
    Singularities(SingArgs),
    /// Print the canonical Dirichlet character table mod q
    Characters(CharArgs),
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum KindArg {
    Ez,
    Mt,
    Av,
    MtHat,
    LMtHat,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long, value_enum)]
    kind: KindArg,
    /// independent-slot count j of the shape (j, r)
    #[arg(long)]
    j: Option<usize>,
    #[arg(long)]
    r: usize,
    /// arguments as "re,im;re,im;..."
    #[arg(long)]
    s: String,
    /// characters as "q:i1,i2,..." (canonical indices)
    #[arg(long)]
    chars: Option<String>,
    /// recursion depth cap (default r+4)
    #[arg(long)]
    depth: Option<usize>,
    /// target truncation tolerance
    #[arg(long)]
    tol: Option<f64>,
    /// total term budget for direct summation
    #[arg(long)]
    work_cap: Option<u64>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum SuiteArg {
    Mb,
    Shift,
    Residue,
    Entire,
    Phi,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long, value_enum)]
    suite: SuiteArg,
    #[arg(long)]
    j: usize,
    #[arg(long)]
    r: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    n_points: usize,
    #[arg(long)]
    chars: Option<String>,
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum SingKind {
    Zeta,
    L,
}

#[derive(Args)]
struct SingArgs {
    #[arg(long, value_enum)]
    kind: SingKind,
    #[arg(long)]
    j: usize,
    #[arg(long)]
    r: usize,
    #[arg(long)]
    chars: Option<String>,
    #[arg(long, default_value_t = 3)]
    bound: i64,
}

#[derive(Args)]
struct CharArgs {
    #[arg(long)]
    q: usize,
}

fn main() {
    // worker count cap via MZETA_THREADS
    if let Ok(v) = std::env::var("MZETA_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
        }
    }
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // clap's own help/version output is a success, not a usage error
            use clap::error::ErrorKind::*;
            if matches!(e.kind(), DisplayHelp | DisplayVersion) {
                print!("{e}");
                std::process::exit(0);
            }
            eprintln!("{e}");
            std::process::exit(1);
        }
    };
    let code = run(cli);
    std::process::exit(code);
}

fn run(cli: Cli) -> i32 {
    let overrides = match cli.config.as_deref().map(read_config).transpose() {
        Ok(o) => o.unwrap_or_default(),
        Err(msg) => {
            eprintln!("config error: {msg}");
            return 1;
        }
    };
    match cli.command {
        Command::Eval(a) => cmd_eval(a, &overrides),
        Command::Check(a) => suites::cmd_check(
            a.suite.as_str(),
            a.j,
            a.r,
            a.seed,
            a.n_points,
            a.chars.as_deref(),
            a.tol,
            cli.format == Format::Csv,
            &overrides,
        ),
        Command::Singularities(a) => cmd_singularities(a),
        Command::Characters(a) => cmd_characters(a),
    }
}

impl SuiteArg {
    fn as_str(self) -> &'static str {
        match self {
            SuiteArg::Mb => "mb",
            SuiteArg::Shift => "shift",
            SuiteArg::Residue => "residue",
            SuiteArg::Entire => "entire",
            SuiteArg::Phi => "phi",
        }
    }
}

#[derive(Default)]
pub struct Overrides {
    pub tol: Option<f64>,
    pub depth: Option<usize>,
    pub shift_n: Option<usize>,
    pub epsilon: Option<f64>,
    pub quad_t: Option<f64>,
    pub quad_h: Option<f64>,
    pub m_cap: Option<usize>,
    pub budget: Option<u64>,
}

fn read_config(path: &str) -> Result<Overrides, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?;
    let mut o = Overrides::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected key=value", lineno + 1))?;
        let (key, value) = (key.trim(), value.trim());
        let bad = |e: std::num::ParseFloatError| format!("line {}: {e}", lineno + 1);
        let bad_i = |e: std::num::ParseIntError| format!("line {}: {e}", lineno + 1);
        match key {
            "tol" => o.tol = Some(value.parse().map_err(bad)?),
            "depth" => o.depth = Some(value.parse().map_err(bad_i)?),
            "shift-n" => o.shift_n = Some(value.parse().map_err(bad_i)?),
            "epsilon" => o.epsilon = Some(value.parse().map_err(bad)?),
            "quad-t" => o.quad_t = Some(value.parse().map_err(bad)?),
            "quad-h" => o.quad_h = Some(value.parse().map_err(bad)?),
            "m-cap" => o.m_cap = Some(value.parse().map_err(bad_i)?),
            "budget" => o.budget = Some(value.parse().map_err(bad_i)?),
            other => return Err(format!("line {}: unknown key '{other}'", lineno + 1)),
        }
    }
    Ok(o)
}

pub fn build_config(overrides: &Overrides, tol: Option<f64>, depth: Option<usize>, work_cap: Option<u64>) -> EvalConfig {
    let mut cfg = EvalConfig::default();
    if let Some(t) = overrides.tol {
        cfg.trunc.target_tol = t;
    }
    if let Some(d) = overrides.depth {
        cfg.cont.max_depth = d;
    }
    if let Some(n) = overrides.shift_n {
        cfg.cont.shift_n = n;
    }
    if let Some(e) = overrides.epsilon {
        cfg.cont.epsilon = e;
    }
    if let Some(t) = overrides.quad_t {
        cfg.cont.quad_t = t;
    }
    if let Some(h) = overrides.quad_h {
        cfg.cont.quad_h = h;
    }
    if let Some(m) = overrides.m_cap {
        cfg.trunc.per_index_cap = m;
    }
    if let Some(b) = overrides.budget {
        cfg.trunc.work_cap = b;
    }
    // flags win over the config file
    if let Some(t) = tol {
        cfg.trunc.target_tol = t;
    }
    if let Some(d) = depth {
        cfg.cont.max_depth = d;
    }
    if let Some(b) = work_cap {
        cfg.trunc.work_cap = b;
    }
    cfg
}

pub fn parse_arg_vector(s: &str) -> Result<Vec<Complex64>, String> {
    let mut out = Vec::new();
    for (i, part) in s.split(';').enumerate() {
        let part = part.trim();
        let (re, im) = part
            .split_once(',')
            .ok_or_else(|| format!("entry {}: expected re,im", i + 1))?;
        let re: f64 = re.trim().parse().map_err(|e| format!("entry {}: {e}", i + 1))?;
        let im: f64 = im.trim().parse().map_err(|e| format!("entry {}: {e}", i + 1))?;
        out.push(Complex64::new(re, im));
    }
    if out.is_empty() {
        return Err("empty argument vector".into());
    }
    Ok(out)
}

pub fn parse_chars(spec: &str, r: usize) -> Result<CharacterTuple, String> {
    let (q, idx) = spec
        .split_once(':')
        .ok_or_else(|| "expected q:i1,i2,...".to_string())?;
    let q: usize = q.trim().parse().map_err(|e| format!("modulus: {e}"))?;
    let table = characters_mod(q).map_err(|e| e.to_string())?;
    let mut chars = Vec::new();
    for part in idx.split(',') {
        let i: usize = part.trim().parse().map_err(|e| format!("index: {e}"))?;
        let chi = table
            .get(i)
            .ok_or_else(|| format!("character index {i} out of range (phi({q}) = {})", table.len()))?;
        chars.push(chi.clone());
    }
    if chars.len() != r {
        return Err(format!("need {r} characters, got {}", chars.len()));
    }
    CharacterTuple::new(chars).map_err(|e| e.to_string())
}

pub fn plane_json(p: &Hyperplane) -> Value {
    json!({
        "family": p.family,
        "subset": p.subset,
        "constant": p.constant,
        "params": p.params,
    })
}

fn result_json(res: &EvalResult) -> Value {
    json!({
        "value": [res.value.re, res.value.im],
        "err_est": res.err_est,
        "method": res.method.as_str(),
        "depth": res.depth,
        "warnings": res.warnings,
    })
}

pub fn error_report(e: &Error) -> (i32, Value) {
    match e {
        Error::SingularPoint { plane } => (
            2,
            json!({ "error": "singular-point", "hyperplane": plane_json(plane), "message": e.to_string() }),
        ),
        Error::BudgetExceeded { .. } => (3, json!({ "error": "budget-exceeded", "message": e.to_string() })),
        Error::DepthExceeded { .. } => (3, json!({ "error": "depth-exceeded", "message": e.to_string() })),
        Error::OutOfRegion { .. } => (1, json!({ "error": "out-of-region", "message": e.to_string() })),
        _ => (1, json!({ "error": "evaluation", "message": e.to_string() })),
    }
}

fn cmd_eval(a: EvalArgs, overrides: &Overrides) -> i32 {
    let entries = match parse_arg_vector(&a.s) {
        Ok(v) => v,
        Err(msg) => {
            eprintln!("bad --s: {msg}");
            return 1;
        }
    };
    let cfg = build_config(overrides, a.tol, a.depth, a.work_cap);
    let outcome = eval_dispatch(&a, entries, &cfg);
    match outcome {
        Ok(res) => {
            println!("{}", result_json(&res));
            0
        }
        Err(EvalFailure::Usage(msg)) => {
            eprintln!("{msg}");
            1
        }
        Err(EvalFailure::Math(e)) => {
            let (code, payload) = error_report(&e);
            println!("{payload}");
            code
        }
    }
}

enum EvalFailure {
    Usage(String),
    Math(Error),
}

impl From<Error> for EvalFailure {
    fn from(e: Error) -> Self {
        EvalFailure::Math(e)
    }
}

fn eval_dispatch(a: &EvalArgs, entries: Vec<Complex64>, cfg: &EvalConfig) -> Result<EvalResult, EvalFailure> {
    let need = |n: usize, what: &str| -> Result<(), EvalFailure> {
        if entries.len() != n {
            Err(EvalFailure::Usage(format!("{what} needs {n} arguments, got {}", entries.len())))
        } else {
            Ok(())
        }
    };
    match a.kind {
        KindArg::Ez => {
            need(a.r, "kind ez")?;
            if ez_region_contains(&entries, 0.05) {
                Ok(zeta_ez_direct(&entries, &cfg.trunc)?)
            } else {
                // continuation through the hat-class identity:
                // zeta_EZ,r(t_1..t_r) = hat(1,r)(t_1; 0, t_2..t_r)
                let shape = Shape::new(1, a.r).map_err(EvalFailure::Math)?;
                let mut mapped = vec![entries[0], Complex64::new(0.0, 0.0)];
                mapped.extend_from_slice(&entries[1..]);
                Ok(eval_auto(EvalKind::Zeta, shape, &ArgVector::new(mapped), None, cfg)?)
            }
        }
        KindArg::Mt => {
            need(a.r + 1, "kind mt")?;
            Ok(mt_base_continuation(a.r, &ArgVector::new(entries), cfg)?)
        }
        KindArg::Av => {
            need(a.r + 1, "kind av")?;
            Ok(zeta_av_direct(&entries, &cfg.trunc)?)
        }
        KindArg::MtHat => {
            let j = a.j.ok_or_else(|| EvalFailure::Usage("kind mt-hat needs --j".into()))?;
            need(a.r + 1, "kind mt-hat")?;
            let shape = Shape::new(j, a.r).map_err(EvalFailure::Math)?;
            Ok(eval_auto(EvalKind::Zeta, shape, &ArgVector::new(entries), None, cfg)?)
        }
        KindArg::LMtHat => {
            let j = a.j.ok_or_else(|| EvalFailure::Usage("kind l-mt-hat needs --j".into()))?;
            need(a.r + 1, "kind l-mt-hat")?;
            let spec = a
                .chars
                .as_deref()
                .ok_or_else(|| EvalFailure::Usage("kind l-mt-hat needs --chars".into()))?;
            let tuple = parse_chars(spec, a.r).map_err(EvalFailure::Usage)?;
            let shape = Shape::new(j, a.r).map_err(EvalFailure::Math)?;
            Ok(eval_auto(EvalKind::L, shape, &ArgVector::new(entries), Some(&tuple), cfg)?)
        }
    }
}

fn cmd_singularities(a: SingArgs) -> i32 {
    let shape = match Shape::new(a.j, a.r) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{e}");
            return 1;
        }
    };
    let planes = match a.kind {
        SingKind::Zeta => {
            if a.j == a.r {
                mzeta::singularity::hyperplanes_mt(a.r, a.bound)
            } else {
                mzeta::singularity::hyperplanes_zeta(shape, a.bound)
            }
        }
        SingKind::L => {
            let spec = match a.chars.as_deref() {
                Some(s) => s,
                None => {
                    eprintln!("--kind l needs --chars");
                    return 1;
                }
            };
            let tuple = match parse_chars(spec, a.r) {
                Ok(t) => t,
                Err(msg) => {
                    eprintln!("bad --chars: {msg}");
                    return 1;
                }
            };
            let pattern = mzeta::singularity::PrincipalPattern(tuple.principal_flags());
            mzeta::singularity::hyperplanes_l(shape, &pattern, a.bound)
        }
    };
    let list: Vec<Value> = planes.iter().map(plane_json).collect();
    println!("{}", json!({ "j": a.j, "r": a.r, "bound": a.bound, "hyperplanes": list }));
    0
}

fn cmd_characters(a: CharArgs) -> i32 {
    match characters_mod(a.q) {
        Ok(chars) => {
            let rows: Vec<Value> = chars
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    json!({
                        "index": i,
                        "principal": c.is_principal(),
                        "values": c.values().iter().map(|v| vec![v.re, v.im]).collect::<Vec<_>>(),
                    })
                })
                .collect();
            println!("{}", json!({ "q": a.q, "characters": rows }));
            0
        }
        Err(e) => {
            let (code, payload) = error_report(&e);
            println!("{payload}");
            code
        }
    }
}

