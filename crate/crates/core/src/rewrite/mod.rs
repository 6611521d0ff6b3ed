//! Executable rewrites into positive combinations of preferred formulas.
//!
//! Every construction measures the bounds it needs on a reference family of
//! cutouts and reports `min_universe_size`: structures at least that large
//! are ones on which the output is guaranteed equivalent to the input.

mod count;
mod minimal;
mod pipeline;
mod rank1;
mod witness;

use std::collections::BTreeSet;

use serde::Serialize;

pub use count::{exact_count_to_preferred, negate_preferred};
pub use minimal::{analyze_minimal, strongly_minimal_base, FailBase, MinimalAnalysis, StronglyMinimalBase};
pub use pipeline::to_p;
pub use rank1::{
    estimate_rank1_config, fr_membership_formula, fr_set, rank1_delta, CountTarget, Kernel, Rank1Base,
    Rank1Config,
};
pub use witness::{avoid_witnesses, messy_reduce, WitnessConstraint, Witnesses};

use crate::semantics::{equivalent_over, Compiled, Equivalence, EvalError, FiniteStructure, Tuples};
use crate::syntax::{class_tags, print, ClassTag, Formula, FreshNames, SyntaxError, Var};

#[derive(Debug, PartialEq, Eq, thiserror::Error)]
pub enum RewriteError {
    #[error("structure of size {universe} is too small: every candidate for position {position} is blocked")]
    StructureTooSmall { universe: usize, position: usize },
    #[error("constraint {0} has no witness variables and holds, so it cannot be avoided")]
    Unavoidable(String),
    #[error("input not in the required shape: {0}")]
    Shape(String),
    #[error("base rewriter {base} failed: {reason}")]
    BaseFailed { base: &'static str, reason: String },
    #[error("N = {given} is too small; the family needs at least {needed}")]
    BoundTooSmall { given: usize, needed: usize },
    #[error("no stabilization over the family: {0}")]
    Inconclusive(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("sentence {0} changes truth value across the family")]
    NotConstant(String),
    #[error("the family is empty")]
    EmptyFamily,
    #[error("construction too large: {0}")]
    TooLarge(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
}

fn serialize_formula<S: serde::Serializer>(f: &Formula, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&print(f))
}

/// Output of a rewrite with its class tag and provenance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RewriteResult {
    #[serde(serialize_with = "serialize_formula")]
    pub output: Formula,
    pub tag: ClassTag,
    /// Whether the output has the shape of a positive combination of
    /// preferred formulas.
    pub in_p: bool,
    pub min_universe_size: usize,
    /// (construction, formula text) pairs, innermost first.
    pub trace: Vec<(String, String)>,
}

impl RewriteResult {
    pub fn new(output: Formula, min_universe_size: usize, mut trace: Vec<(String, String)>, step: &str) -> Self {
        let output = crate::syntax::simplify(&output);
        let tags = class_tags(&output, None);
        trace.push((step.to_string(), print(&output)));
        RewriteResult {
            tag: crate::syntax::classify(&output, None),
            in_p: tags.contains(&ClassTag::PPositiveCombination),
            output,
            min_universe_size: min_universe_size.max(1),
            trace,
        }
    }
}

/// Rewrites counting formulas `E[=r] x . R(x, y)` in one free variable `y`
/// into positive combinations of preferred formulas.
pub trait BaseCountRewriter {
    fn name(&self) -> &'static str;

    /// `phi` has free variables among `{y}`.
    fn rewrite(&self, phi: &Formula, y: &Var, family: &[FiniteStructure]) -> Result<RewriteResult, RewriteError>;
}

/// Largest number of `x`-solutions of `f` over all values of its other free
/// variables, across the family.
pub(crate) fn max_count(family: &[FiniteStructure], f: &Formula, x: &[Var]) -> Result<usize, RewriteError> {
    let rest: Vec<Var> = f.free_vars().into_iter().filter(|v| !x.contains(v)).collect();
    let mut inputs = rest.clone();
    inputs.extend(x.iter().cloned());
    let mut best = 0;
    for m in family {
        let compiled = Compiled::new(m, f, &inputs)?;
        let mut ev = compiled.evaluator();
        let mut values = vec![0; inputs.len()];
        for outer in Tuples::new(m.universe(), rest.len()) {
            values[..rest.len()].copy_from_slice(&outer);
            let mut count = 0;
            for inner in Tuples::new(m.universe(), x.len()) {
                values[rest.len()..].copy_from_slice(&inner);
                if ev.eval(&values) {
                    count += 1;
                }
            }
            best = best.max(count);
        }
    }
    Ok(best)
}

/// Truth value of a sentence on every member of the family, if it is constant.
pub(crate) fn constant_truth(family: &[FiniteStructure], f: &Formula) -> Result<bool, RewriteError> {
    let mut seen = None;
    for m in family {
        let value = Compiled::new(m, f, &[])?.evaluator().eval(&[]);
        match seen {
            Some(v) if v != value => return Err(RewriteError::NotConstant(print(f))),
            _ => seen = Some(value),
        }
    }
    seen.ok_or(RewriteError::EmptyFamily)
}

const DNF_LIMIT: usize = 4096;

/// Puts a positive existential formula into the form of a disjunction of
/// existential blocks with quantifier-free bodies. Counting quantifiers of
/// the form `E[>=r]` are expanded first. Pulling a block out of a disjunct
/// would change the meaning on an empty universe only.
pub(crate) fn existential_dnf(f: &Formula, fresh: &mut FreshNames) -> Result<Formula, RewriteError> {
    let parts = dnf(f, fresh)?;
    Ok(Formula::or(parts.into_iter().map(|(vars, body)| Formula::exists(vars, Formula::and(body))).collect()))
}

type Disjunct = (Vec<Var>, Vec<Formula>);

fn dnf(f: &Formula, fresh: &mut FreshNames) -> Result<Vec<Disjunct>, RewriteError> {
    if f.is_quantifier_free() {
        return Ok(vec![(Vec::new(), vec![f.clone()])]);
    }
    match f {
        Formula::And(gs) => {
            let mut acc: Vec<Disjunct> = vec![(Vec::new(), Vec::new())];
            for g in gs {
                let parts = dnf(g, fresh)?;
                if acc.len() * parts.len() > DNF_LIMIT {
                    return Err(RewriteError::TooLarge(format!("more than {DNF_LIMIT} disjuncts")));
                }
                let mut next = Vec::with_capacity(acc.len() * parts.len());
                for (av, ab) in &acc {
                    for (pv, pb) in &parts {
                        let mut vars = av.clone();
                        vars.extend(pv.iter().cloned());
                        let mut conj = ab.clone();
                        conj.extend(pb.iter().cloned());
                        next.push((vars, conj));
                    }
                }
                acc = next;
            }
            Ok(acc)
        }
        Formula::Or(gs) => {
            let mut out = Vec::new();
            for g in gs {
                out.extend(dnf(g, fresh)?);
                if out.len() > DNF_LIMIT {
                    return Err(RewriteError::TooLarge(format!("more than {DNF_LIMIT} disjuncts")));
                }
            }
            Ok(out)
        }
        Formula::Exists(vs, g) => {
            let copies = fresh.fresh_copies(vs);
            let body = crate::syntax::rename_vars(g, vs, &copies);
            let mut parts = dnf(&body, fresh)?;
            for (vars, _) in &mut parts {
                let mut all = copies.clone();
                all.append(vars);
                *vars = all;
            }
            Ok(parts)
        }
        Formula::Count(crate::syntax::CountMode::AtLeast, ..) => {
            let expanded = crate::syntax::expand_counting(f);
            fresh.reserve_formula(&expanded);
            dnf(&expanded, fresh)
        }
        _ => Err(RewriteError::Shape(format!("{} is not positive existential", print(f)))),
    }
}

/// Verdict of one equivalence check within a family.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StructureVerdict {
    pub structure: String,
    pub universe: usize,
    /// `None` when the structure is below the faithfulness threshold.
    pub result: Option<Equivalence>,
}

impl StructureVerdict {
    pub fn passed(&self) -> bool {
        self.result.as_ref().map_or(true, Equivalence::is_equivalent)
    }
}

/// Checks `input` against `output` on every family member at or above
/// `min_universe_size`, over the union of their free variables.
pub fn verify_on_family(
    input: &Formula,
    output: &Formula,
    min_universe_size: usize,
    family: &[FiniteStructure],
) -> Result<Vec<StructureVerdict>, EvalError> {
    let vars: Vec<Var> = input.free_vars().union(&output.free_vars()).cloned().collect::<BTreeSet<_>>().into_iter().collect();
    family
        .iter()
        .map(|m| {
            let result = if m.universe() >= min_universe_size {
                Some(equivalent_over(m, input, output, &vars)?)
            } else {
                None
            };
            Ok(StructureVerdict { structure: m.name().to_string(), universe: m.universe(), result })
        })
        .collect()
}
