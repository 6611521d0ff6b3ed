//! Command-line front end. Every command prints a JSON run report on standard
//! output (or a short text rendering with `--human`).
//!
//! Exit codes: 0 success, 1 verification or rewrite failure, 2 usage or
//! input error.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::algebraicity::{family_stability, ma_bound, Verdict, DEFAULT_SUFFIX};
use crate::corpus::{self, FamilySpec};
use crate::rewrite::{
    estimate_rank1_config, exact_count_to_preferred, messy_reduce, negate_preferred, rank1_delta,
    strongly_minimal_base, to_p, verify_on_family, BaseCountRewriter, CountTarget, FailBase, Kernel, Rank1Base,
    RewriteError, RewriteResult, StronglyMinimalBase, StructureVerdict,
};
use crate::semantics::{equivalent_on, FiniteStructure};
use crate::syntax::{class_tags, classify, parse, print, CountMode, Formula, PreferredFormula, Signature, Var, VarTuple};

#[derive(Parser, Debug)]
#[command(name = "mutalg", version, about = "Mutual algebraicity checks and rewrites on finite structures")]
pub struct Cli {
    /// Print a short text rendering instead of JSON.
    #[arg(long, global = true)]
    pub human: bool,
    /// Reserved for randomized suites; currently unused.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Structures {
    /// Family of cutouts as kind:lo..hi or kind:n1,n2,...
    #[arg(long)]
    pub family: Option<String>,
    /// Constants for the family, as name=element,...
    #[arg(long)]
    pub constants: Option<String>,
    /// Structure files, in increasing size.
    #[arg(long = "structure")]
    pub structures: Vec<PathBuf>,
    /// Signature such as "E/2,U/1,@c0"; defaults to that of the structures.
    #[arg(long)]
    pub sig: Option<String>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Parse and pretty-print a formula.
    Parse {
        #[arg(long)]
        formula: String,
        #[command(flatten)]
        structures: Structures,
    },
    /// Classify a formula, optionally certifying it on the structures.
    Classify {
        #[arg(long)]
        formula: String,
        /// Tuple for on-the-fly certification (needs structures).
        #[arg(long)]
        vars: Option<String>,
        #[command(flatten)]
        structures: Structures,
    },
    /// Measure mutual-algebraicity bounds and family stability.
    CheckMa {
        #[arg(long)]
        formula: String,
        #[arg(long)]
        vars: String,
        #[arg(long, default_value_t = DEFAULT_SUFFIX)]
        suffix: usize,
        /// Fail unless every bound is at most this.
        #[arg(long)]
        n: Option<usize>,
        #[command(flatten)]
        structures: Structures,
    },
    /// Run a rewrite and verify it on every structure.
    Rewrite {
        construction: Construction,
        #[arg(long)]
        formula: String,
        /// Counted (or reduced) variables.
        #[arg(long)]
        count_vars: Option<String>,
        /// Order of the remaining free variables (last one is y*).
        #[arg(long)]
        vars: Option<String>,
        #[arg(long)]
        r: Option<usize>,
        /// Distinguished variable for messy and strongly-minimal.
        #[arg(long)]
        y: Option<String>,
        #[arg(long, value_enum, default_value_t = BaseChoice::StronglyMinimal)]
        base: BaseChoice,
        /// Override for the solution bound N.
        #[arg(long)]
        n: Option<usize>,
        /// Kernels in x and y, separated by ';'.
        #[arg(long)]
        kernels: Option<String>,
        #[arg(long, default_value_t = DEFAULT_SUFFIX)]
        suffix: usize,
        #[command(flatten)]
        structures: Structures,
    },
    /// Check two formulas for equivalence on every structure.
    Equiv {
        #[arg(long)]
        formula_a: String,
        #[arg(long)]
        formula_b: String,
        #[command(flatten)]
        structures: Structures,
    },
    /// Generate a family and write or print its structure files.
    Corpus {
        #[arg(long)]
        family: String,
        #[arg(long)]
        constants: Option<String>,
        /// Directory for the files; prints them in the report otherwise.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Construction {
    ExactCount,
    Negate,
    ToP,
    Messy,
    StronglyMinimal,
    Rank1,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum BaseChoice {
    StronglyMinimal,
    Rank1,
    Fail,
}

#[derive(Debug)]
enum Failure {
    Input(String),
    Rewrite(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Input(e.to_string())
    }
}

fn rewrite_failure(e: RewriteError) -> Failure {
    match e {
        RewriteError::Shape(_) | RewriteError::Syntax(_) | RewriteError::EmptyFamily => Failure::Input(e.to_string()),
        RewriteError::BaseFailed { reason, base } if reason.contains("not in the required shape") => {
            Failure::Input(format!("base rewriter {base}: {reason}"))
        }
        e => Failure::Rewrite(e.to_string()),
    }
}

#[derive(Serialize, Debug)]
pub struct RunReport {
    pub command: Vec<String>,
    pub inputs: Value,
    pub outputs: Value,
    pub verdicts: Vec<StructureVerdict>,
    pub ok: bool,
    pub error: Option<String>,
    pub elapsed_ms: u128,
}

struct Outcome {
    inputs: Value,
    outputs: Value,
    verdicts: Vec<StructureVerdict>,
    ok: bool,
}

fn parse_constants(text: &str) -> Result<Vec<(String, usize)>, Failure> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|item| {
            let (name, value) =
                item.split_once('=').ok_or_else(|| Failure::Input(format!("malformed constant {item:?}")))?;
            let value = value.trim().parse().map_err(|_| Failure::Input(format!("malformed constant {item:?}")))?;
            Ok((name.trim().trim_start_matches('@').to_string(), value))
        })
        .collect()
}

fn load_family(family: Option<&str>, constants: Option<&str>, files: &[PathBuf]) -> Result<Vec<FiniteStructure>, Failure> {
    let mut out = Vec::new();
    if let Some(text) = family {
        let mut spec = FamilySpec::parse(text)?;
        if let Some(c) = constants {
            spec.constants = parse_constants(c)?;
        }
        out.extend(corpus::generate(&spec)?);
    }
    for path in files {
        out.push(corpus::load(path)?);
    }
    Ok(out)
}

impl Structures {
    fn load(&self) -> Result<Vec<FiniteStructure>, Failure> {
        load_family(self.family.as_deref(), self.constants.as_deref(), &self.structures)
    }

    fn signature(&self, family: &[FiniteStructure]) -> Result<Signature, Failure> {
        match (&self.sig, family.first()) {
            (Some(s), _) => Ok(Signature::parse(s)?),
            (None, Some(m)) => Ok(m.signature()),
            (None, None) => Err(Failure::Input("need --sig, --family or --structure".into())),
        }
    }

    fn require(&self) -> Result<Vec<FiniteStructure>, Failure> {
        let family = self.load()?;
        if family.is_empty() {
            return Err(Failure::Input("need --family or --structure".into()));
        }
        Ok(family)
    }
}

fn tuple(text: &str) -> Result<VarTuple, Failure> {
    Ok(VarTuple::parse(text)?)
}

fn rewrite_json(r: &RewriteResult) -> Value {
    serde_json::to_value(r).expect("rewrite result serializes")
}

fn make_base(choice: BaseChoice, kernels: &[Kernel], suffix: usize) -> Result<Box<dyn BaseCountRewriter>, Failure> {
    Ok(match choice {
        BaseChoice::StronglyMinimal => Box::new(StronglyMinimalBase { suffix }),
        BaseChoice::Rank1 => {
            if kernels.is_empty() {
                return Err(Failure::Input("--base rank1 needs --kernels".into()));
            }
            Box::new(Rank1Base { kernels: kernels.to_vec(), suffix })
        }
        BaseChoice::Fail => Box::new(FailBase),
    })
}

fn parse_kernels(text: Option<&str>, sig: &Signature) -> Result<Vec<Kernel>, Failure> {
    text.unwrap_or("")
        .split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|k| Kernel::standard(parse(k.trim(), sig)?).map_err(rewrite_failure))
        .collect()
}

fn single_free(f: &Formula, given: Option<&str>) -> Result<Var, Failure> {
    if let Some(y) = given {
        return Ok(Var::from(y));
    }
    let free: Vec<Var> = f.free_vars().into_iter().collect();
    match free.as_slice() {
        [y] => Ok(y.clone()),
        _ => Err(Failure::Input(format!("cannot infer the distinguished variable of {}; use --y", print(f)))),
    }
}

fn run_command(command: &Command) -> Result<Outcome, Failure> {
    match command {
        Command::Parse { formula, structures } => {
            let family = structures.load()?;
            let f = parse(formula, &structures.signature(&family)?)?;
            Ok(Outcome {
                inputs: json!({ "formula": formula }),
                outputs: json!({
                    "formula": print(&f),
                    "free": f.free_vars(),
                    "quantifier_depth": f.quantifier_depth(),
                }),
                verdicts: Vec::new(),
                ok: true,
            })
        }
        Command::Classify { formula, vars, structures } => {
            let family = structures.load()?;
            let f = parse(formula, &structures.signature(&family)?)?;
            let cert = match (vars, family.last()) {
                (Some(v), Some(m)) => Some(ma_bound(m, &f, &tuple(v)?)?),
                (Some(_), None) => return Err(Failure::Input("--vars needs a structure to certify on".into())),
                _ => None,
            };
            Ok(Outcome {
                inputs: json!({ "formula": formula, "vars": vars }),
                outputs: json!({
                    "tag": classify(&f, cert.as_ref()),
                    "tags": class_tags(&f, cert.as_ref()),
                    "certificate": cert,
                }),
                verdicts: Vec::new(),
                ok: true,
            })
        }
        Command::CheckMa { formula, vars, suffix, n, structures } => {
            let family = structures.require()?;
            let f = parse(formula, &structures.signature(&family)?)?;
            let z = tuple(vars)?;
            let certificates = family.iter().map(|m| ma_bound(m, &f, &z)).collect::<Result<Vec<_>, _>>()?;
            let report = family_stability(&family, &f, &z, *suffix)?;
            let within = n.map_or(true, |n| certificates.iter().all(|c| c.within(n)));
            let ok = within && matches!(report.verdict, Verdict::Stable(_));
            Ok(Outcome {
                inputs: json!({ "formula": formula, "vars": vars, "suffix": suffix, "n": n }),
                outputs: json!({
                    "verdict": report.verdict.to_string(),
                    "stability": report,
                    "certificates": certificates,
                }),
                verdicts: Vec::new(),
                ok,
            })
        }
        Command::Rewrite {
            construction,
            formula,
            count_vars,
            vars,
            r,
            y,
            base,
            n,
            kernels,
            suffix,
            structures,
        } => {
            let family = structures.require()?;
            let sig = structures.signature(&family)?;
            let f = parse(formula, &sig)?;
            let kernels = parse_kernels(kernels.as_deref(), &sig)?;
            let base = make_base(*base, &kernels, *suffix)?;
            let need_r = || r.ok_or_else(|| Failure::Input("--r is required".into()));
            let need_x = || -> Result<VarTuple, Failure> {
                tuple(count_vars.as_deref().ok_or_else(|| Failure::Input("--count-vars is required".into()))?)
            };
            let rest_of = |x: &VarTuple| -> Result<VarTuple, Failure> {
                match vars {
                    Some(v) => tuple(v),
                    None => Ok(VarTuple::from(
                        f.free_vars().into_iter().filter(|v| !x.contains(v)).collect::<Vec<_>>(),
                    )),
                }
            };
            let (input, result) = match construction {
                Construction::ExactCount => {
                    let (x, r) = (need_x()?, need_r()?);
                    let ys = rest_of(&x)?;
                    let res = exact_count_to_preferred(&f, &x, &ys, r, base.as_ref(), *n, &family);
                    (Formula::count(CountMode::Exactly, r, x.into_vec(), f.clone()), res)
                }
                Construction::Negate => {
                    let theta = PreferredFormula::recognize(&f)
                        .ok_or_else(|| Failure::Input(format!("{} is not a preferred formula", print(&f))))?;
                    (Formula::not(f.clone()), negate_preferred(&theta, base.as_ref(), *n, &family))
                }
                Construction::ToP => (f.clone(), to_p(&f, base.as_ref(), &family)),
                Construction::Messy => {
                    let x = need_x()?;
                    let yv = match y {
                        Some(y) => Var::from(y.as_str()),
                        None => single_free(&Formula::exists(x.vars().to_vec(), f.clone()), None)?,
                    };
                    (Formula::exists(x.vars().to_vec(), f.clone()), messy_reduce(&f, &x, &yv, &family))
                }
                Construction::StronglyMinimal => {
                    let yv = single_free(&f, y.as_deref())?;
                    (f.clone(), strongly_minimal_base(&family, &f, &yv, *suffix))
                }
                Construction::Rank1 => {
                    let (z, r) = (need_x()?, need_r()?);
                    let a = single_free(&Formula::exists(z.vars().to_vec(), f.clone()), y.as_deref())?;
                    let target = CountTarget::new(f.clone(), z.clone(), a.clone()).map_err(rewrite_failure)?;
                    let res = estimate_rank1_config(&family, &kernels, &target, r, *suffix)
                        .and_then(|cfg| rank1_delta(&cfg, &target, r, &a));
                    (Formula::count(CountMode::AtMost, r, z.into_vec(), f.clone()), res)
                }
            };
            let result = result.map_err(rewrite_failure)?;
            let verdicts = verify_on_family(&input, &result.output, result.min_universe_size, &family)?;
            let ok = verdicts.iter().all(StructureVerdict::passed) && result.in_p;
            Ok(Outcome {
                inputs: json!({
                    "construction": format!("{construction:?}"),
                    "formula": print(&f),
                    "semantics": print(&input),
                    "base": base.name(),
                }),
                outputs: rewrite_json(&result),
                verdicts,
                ok,
            })
        }
        Command::Equiv { formula_a, formula_b, structures } => {
            let family = structures.require()?;
            let sig = structures.signature(&family)?;
            let (a, b) = (parse(formula_a, &sig)?, parse(formula_b, &sig)?);
            let mut verdicts = Vec::new();
            for m in &family {
                let result = equivalent_on(m, &a, &b)?;
                verdicts.push(StructureVerdict {
                    structure: m.name().to_string(),
                    universe: m.universe(),
                    result: Some(result),
                });
            }
            let ok = verdicts.iter().all(StructureVerdict::passed);
            Ok(Outcome {
                inputs: json!({ "formula_a": print(&a), "formula_b": print(&b) }),
                outputs: Value::Null,
                verdicts,
                ok,
            })
        }
        Command::Corpus { family, constants, out } => {
            let structures = load_family(Some(family), constants.as_deref(), &[])?;
            let mut files = Vec::new();
            for m in &structures {
                match out {
                    Some(dir) => {
                        std::fs::create_dir_all(dir)?;
                        let path = dir.join(format!("{}.json", m.name()));
                        corpus::store(&path, m)?;
                        files.push(json!({ "name": m.name(), "path": path }));
                    }
                    None => {
                        let body: Value = serde_json::from_str(&m.to_json())?;
                        files.push(json!({ "name": m.name(), "structure": body }));
                    }
                }
            }
            Ok(Outcome {
                inputs: json!({ "family": family, "constants": constants }),
                outputs: json!({ "structures": files }),
                verdicts: Vec::new(),
                ok: true,
            })
        }
    }
}

fn render_human(report: &RunReport) -> String {
    let mut s = format!("{}\n", if report.ok { "ok" } else { "FAILED" });
    if let Some(e) = &report.error {
        s.push_str(&format!("error: {e}\n"));
    }
    if let Some(out) = report.outputs.get("output").and_then(Value::as_str) {
        s.push_str(&format!("output: {out}\n"));
    }
    if let Some(tag) = report.outputs.get("tag").and_then(Value::as_str) {
        s.push_str(&format!("tag: {tag}\n"));
    }
    if let Some(v) = report.outputs.get("verdict").and_then(Value::as_str) {
        s.push_str(&format!("verdict: {v}\n"));
    }
    for v in &report.verdicts {
        let status = match &v.result {
            None => "skipped (below threshold)".to_string(),
            Some(r) => match r.witness() {
                None => "equivalent".to_string(),
                Some(w) => format!("differs at {w}"),
            },
        };
        s.push_str(&format!("{} (n={}): {status}\n", v.structure, v.universe));
    }
    s
}

/// Runs the command line `args` (including the program name), returning the
/// text to print and the exit code.
pub fn run(args: Vec<String>) -> (String, i32) {
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            return (e.render().to_string(), code);
        }
    };
    let start = Instant::now();
    let outcome = run_command(&cli.command);
    let elapsed_ms = start.elapsed().as_millis();
    let command = args.iter().skip(1).cloned().collect();
    let (report, code) = match outcome {
        Ok(o) => {
            let code = if o.ok { 0 } else { 1 };
            let report = RunReport {
                command,
                inputs: o.inputs,
                outputs: o.outputs,
                verdicts: o.verdicts,
                ok: o.ok,
                error: None,
                elapsed_ms,
            };
            (report, code)
        }
        Err(f) => {
            let (msg, code) = match f {
                Failure::Input(m) => (m, 2),
                Failure::Rewrite(m) => (m, 1),
            };
            let report = RunReport {
                command,
                inputs: Value::Null,
                outputs: Value::Null,
                verdicts: Vec::new(),
                ok: false,
                error: Some(msg),
                elapsed_ms,
            };
            (report, code)
        }
    };
    let text = if cli.human {
        render_human(&report)
    } else {
        let mut s = serde_json::to_string_pretty(&report).expect("report serializes");
        s.push('\n');
        s
    };
    (text, code)
}
