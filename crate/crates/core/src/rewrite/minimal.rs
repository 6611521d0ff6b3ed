use std::collections::BTreeSet;

use super::{BaseCountRewriter, RewriteError, RewriteResult};
use crate::algebraicity::DEFAULT_SUFFIX;
use crate::semantics::{solutions, Assignment, FiniteStructure};
use crate::syntax::{print, Formula, Term, Var, VarTuple};

/// How the solution sets of a one-variable formula behave along a family.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MinimalAnalysis {
    /// True when the complements, not the solution sets, stabilize.
    pub cofinite: bool,
    /// The stable set (solutions, or complement when cofinite).
    pub elements: BTreeSet<usize>,
    /// Terms naming `elements`, using constants where the family agrees.
    pub exceptional: Vec<Term>,
    /// Universe size of the first cutout of the stable run.
    pub from_size: usize,
}

/// Length of the longest run of equal sets at the end of `sets`.
fn stable_run(sets: &[BTreeSet<usize>]) -> usize {
    let last = match sets.last() {
        Some(s) => s,
        None => return 0,
    };
    sets.iter().rev().take_while(|s| *s == last).count()
}

/// Names `e` by a constant that denotes it on every structure of `run`, or by
/// its literal.
pub(crate) fn name_element(run: &[FiniteStructure], e: usize) -> Term {
    let first = &run[0];
    first
        .constants()
        .find(|(c, v)| *v == e && run.iter().all(|m| m.constant(c) == Some(e)))
        .map(|(c, _)| Term::Const(c.to_string()))
        .unwrap_or(Term::Elem(e))
}

pub fn analyze_minimal(
    family: &[FiniteStructure],
    phi: &Formula,
    y: &Var,
    suffix: usize,
) -> Result<MinimalAnalysis, RewriteError> {
    if family.is_empty() {
        return Err(RewriteError::EmptyFamily);
    }
    if let Some(v) = phi.free_vars().into_iter().find(|v| v != y) {
        return Err(RewriteError::Shape(format!("{} has free variable {v} besides {y}", print(phi))));
    }
    let ys = VarTuple::from(vec![y.clone()]);
    let mut sols = Vec::with_capacity(family.len());
    let mut comps = Vec::with_capacity(family.len());
    for m in family {
        let s: BTreeSet<usize> = solutions(m, phi, &ys, &Assignment::new())?.tuples().iter().map(|t| t[0]).collect();
        comps.push((0..m.universe()).filter(|e| !s.contains(e)).collect::<BTreeSet<usize>>());
        sols.push(s);
    }
    let (finite_run, cofinite_run) = (stable_run(&sols), stable_run(&comps));
    let need = suffix.max(1);
    let finite_ok = finite_run >= need;
    let cofinite_ok = cofinite_run >= need;
    let cofinite = match (finite_ok, cofinite_ok) {
        (false, false) => {
            return Err(RewriteError::Inconclusive(format!(
                "neither the solution sets of {} nor their complements agree on the last {need} cutouts",
                print(phi)
            )))
        }
        (true, false) => false,
        (false, true) => true,
        (true, true) => comps.last().unwrap().len() < sols.last().unwrap().len(),
    };
    let (run, elements) = if cofinite {
        (cofinite_run, comps.pop().unwrap())
    } else {
        (finite_run, sols.pop().unwrap())
    };
    let run_structs = &family[family.len() - run..];
    let exceptional = elements.iter().map(|&e| name_element(run_structs, e)).collect();
    Ok(MinimalAnalysis { cofinite, elements, exceptional, from_size: run_structs[0].universe() })
}

/// Rewrites a one-variable formula to `y = q1 | ... | y = qk` when its
/// solution sets stabilize to a finite set, or to the negation of such a
/// disjunction when the complements do.
pub fn strongly_minimal_base(
    family: &[FiniteStructure],
    phi: &Formula,
    y: &Var,
    suffix: usize,
) -> Result<RewriteResult, RewriteError> {
    let a = analyze_minimal(family, phi, y, suffix)?;
    let yt = Term::from(y);
    let disjunction = Formula::or(a.exceptional.iter().map(|t| Formula::eq(yt.clone(), t.clone())).collect());
    // the empty cases still mention y so the output keeps its free variable
    let output = match (a.cofinite, a.exceptional.is_empty()) {
        (false, true) => Formula::not(Formula::eq(yt.clone(), yt)),
        (true, true) => Formula::eq(yt.clone(), yt),
        (false, false) => disjunction,
        (true, false) => Formula::not(disjunction),
    };
    let step = if a.cofinite { "strongly-minimal:cofinite" } else { "strongly-minimal:finite" };
    Ok(RewriteResult::new(output, a.from_size, vec![("strongly-minimal:input".into(), print(phi))], step))
}

/// Base rewriter for strongly minimal families.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StronglyMinimalBase {
    pub suffix: usize,
}

impl Default for StronglyMinimalBase {
    fn default() -> Self {
        StronglyMinimalBase { suffix: DEFAULT_SUFFIX }
    }
}

impl BaseCountRewriter for StronglyMinimalBase {
    fn name(&self) -> &'static str {
        "strongly-minimal"
    }

    fn rewrite(&self, phi: &Formula, y: &Var, family: &[FiniteStructure]) -> Result<RewriteResult, RewriteError> {
        strongly_minimal_base(family, phi, y, self.suffix)
            .map_err(|e| RewriteError::BaseFailed { base: self.name(), reason: e.to_string() })
    }
}

/// Passes quantifier-free input through and declines everything else.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FailBase;

impl BaseCountRewriter for FailBase {
    fn name(&self) -> &'static str {
        "fail"
    }

    fn rewrite(&self, phi: &Formula, y: &Var, _family: &[FiniteStructure]) -> Result<RewriteResult, RewriteError> {
        if phi.is_quantifier_free() && phi.free_vars().iter().all(|v| v == y) {
            return Ok(RewriteResult::new(phi.clone(), 1, Vec::new(), "identity"));
        }
        Err(RewriteError::BaseFailed { base: self.name(), reason: format!("declined {}", print(phi)) })
    }
}
