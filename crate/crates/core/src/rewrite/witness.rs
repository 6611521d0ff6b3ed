use std::collections::BTreeSet;

use super::{max_count, RewriteError, RewriteResult};
use crate::semantics::{solutions, Assignment, FiniteStructure};
use crate::syntax::{print, Formula, Var, VarTuple};

/// A quantifier-free constraint `R(x_j, y, z_j)` to be falsified by choosing
/// values for `z_j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WitnessConstraint {
    pub formula: Formula,
    pub x: VarTuple,
    pub z: VarTuple,
}

/// Chosen values for the witness tuple together with the blocked sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witnesses {
    pub values: Vec<usize>,
    pub blocked: Vec<BTreeSet<usize>>,
}

/// Picks, for each witness position, the least element outside the set of
/// values that position takes in some solution of a constraint mentioning it.
/// `alpha` assigns the `x` variables and `y`.
pub fn avoid_witnesses(
    structure: &FiniteStructure,
    constraints: &[WitnessConstraint],
    alpha: &Assignment,
    z: &VarTuple,
) -> Result<Witnesses, RewriteError> {
    let n = structure.universe();
    let mut blocked = vec![BTreeSet::new(); z.len()];
    for c in constraints {
        if !c.formula.is_quantifier_free() {
            return Err(RewriteError::Shape(format!("{} is not quantifier-free", print(&c.formula))));
        }
        if let Some(v) = c.z.vars().iter().find(|v| !z.contains(v)) {
            return Err(RewriteError::Shape(format!("witness variable {v} is not in {z}")));
        }
        let sols = solutions(structure, &c.formula, &c.z, alpha)?;
        if c.z.is_empty() {
            if !sols.is_empty() {
                return Err(RewriteError::Unavoidable(print(&c.formula)));
            }
            continue;
        }
        for (pos, v) in c.z.vars().iter().enumerate() {
            let l = z.vars().iter().position(|w| w == v).expect("checked above");
            blocked[l].extend(sols.tuples().iter().map(|t| t[pos]));
        }
    }
    let mut values = Vec::with_capacity(z.len());
    for (position, b) in blocked.iter().enumerate() {
        let e = (0..n)
            .find(|e| !b.contains(e))
            .ok_or(RewriteError::StructureTooSmall { universe: n, position })?;
        values.push(e);
    }
    Ok(Witnesses { values, blocked })
}

struct Literal<'a> {
    formula: &'a Formula,
    x: Vec<Var>,
}

/// Reduces `E x . psi` for `psi` a conjunction of quantifier-free literals in
/// `x` and `y` to an existential over the variables of the positive literals.
///
/// The dropped negative literals can always be avoided once the universe is
/// larger than the number of values they can block; that count is measured
/// on `family`.
pub fn messy_reduce(
    psi: &Formula,
    x: &VarTuple,
    y: &Var,
    family: &[FiniteStructure],
) -> Result<RewriteResult, RewriteError> {
    if family.is_empty() {
        return Err(RewriteError::EmptyFamily);
    }
    if x.contains(y) {
        return Err(RewriteError::Shape(format!("{y} occurs in {x}")));
    }
    let mut positive: Vec<Literal> = Vec::new();
    let mut negative: Vec<Literal> = Vec::new();
    for c in psi.conjuncts() {
        let (inner, neg) = match c {
            Formula::Not(g) => (g.as_ref(), true),
            g => (g, false),
        };
        if !inner.is_quantifier_free() {
            return Err(RewriteError::Shape(format!("{} is not quantifier-free", print(inner))));
        }
        let free = inner.free_vars();
        if !free.contains(y) {
            return Err(RewriteError::Shape(format!("{y} does not occur in {}", print(inner))));
        }
        if let Some(v) = free.iter().find(|v| *v != y && !x.contains(v)) {
            return Err(RewriteError::Shape(format!("{v} is neither {y} nor in {x}")));
        }
        let lit = Literal { formula: inner, x: x.vars().iter().filter(|v| free.contains(*v)).cloned().collect() };
        if neg {
            negative.push(lit);
        } else {
            positive.push(lit);
        }
    }
    let used: BTreeSet<&Var> = positive.iter().flat_map(|l| l.x.iter()).collect();
    let kept_x: Vec<Var> = x.vars().iter().filter(|v| used.contains(v)).cloned().collect();
    let (kept, dropped): (Vec<&Literal>, Vec<&Literal>) =
        negative.iter().partition(|l| l.x.iter().all(|v| used.contains(v)));

    // values a dropped literal can block at each witness position
    let witness: Vec<&Var> = x.vars().iter().filter(|v| !used.contains(v)).collect();
    let mut per_position = vec![0usize; witness.len()];
    for l in &dropped {
        let zj: Vec<Var> = l.x.iter().filter(|v| !used.contains(v)).cloned().collect();
        let nj = max_count(family, l.formula, &zj)?;
        for (slot, w) in witness.iter().enumerate() {
            if zj.contains(w) {
                per_position[slot] += nj;
            }
        }
    }
    let min_universe_size = 1 + per_position.into_iter().max().unwrap_or(0);

    let mut body: Vec<Formula> = positive.iter().map(|l| l.formula.clone()).collect();
    body.extend(kept.iter().map(|l| Formula::not(l.formula.clone())));
    let output = match Formula::exists(kept_x, Formula::and(body)) {
        Formula::True => Formula::eq(y.clone(), y.clone()),
        f => f,
    };
    Ok(RewriteResult::new(output, min_universe_size, Vec::new(), "messy-reduce"))
}
