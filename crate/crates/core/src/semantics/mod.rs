//! Finite structures and brute-force evaluation.

mod eval;
mod structure;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

pub use eval::{Compiled, Evaluator};
pub use structure::{FiniteStructure, Relation, StructureError};

use crate::syntax::{Formula, Var, VarTuple};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("free variable {0} has no value")]
    UnboundVariable(Var),
    #[error("structure has no relation {0}")]
    UnknownRelation(String),
    #[error("structure has no constant @{0}")]
    UnknownConstant(String),
    #[error("relation {relation} has arity {expected} but is applied to {found} terms")]
    ArityMismatch { relation: String, expected: usize, found: usize },
    #[error("element #{0} is outside the universe")]
    ElementOutOfRange(usize),
    #[error("variable {0} is assigned twice")]
    DuplicateVariable(Var),
    #[error("free variables differ: {left:?} vs {right:?}")]
    FreeVariableMismatch { left: Vec<Var>, right: Vec<Var> },
}

/// Values for variables. Iteration order is the canonical (sorted) order.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct Assignment(BTreeMap<Var, usize>);

impl Assignment {
    pub fn new() -> Self {
        Assignment(BTreeMap::new())
    }

    pub fn with(mut self, var: impl Into<Var>, value: usize) -> Self {
        self.0.insert(var.into(), value);
        self
    }

    pub fn insert(&mut self, var: Var, value: usize) -> Option<usize> {
        self.0.insert(var, value)
    }

    pub fn get(&self, var: &Var) -> Option<usize> {
        self.0.get(var).copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, usize)> {
        self.0.iter().map(|(k, v)| (k, *v))
    }

    pub fn vars(&self) -> Vec<Var> {
        self.0.keys().cloned().collect()
    }

    pub fn zip(vars: &[Var], values: &[usize]) -> Self {
        Assignment(vars.iter().cloned().zip(values.iter().copied()).collect())
    }
}

impl FromIterator<(Var, usize)> for Assignment {
    fn from_iter<I: IntoIterator<Item = (Var, usize)>>(iter: I) -> Self {
        Assignment(iter.into_iter().collect())
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{k}:{v}")?;
        }
        write!(f, "}}")
    }
}

/// All tuples over `{0..n-1}` of length `k`, in lexicographic order.
pub struct Tuples {
    n: usize,
    current: Option<Vec<usize>>,
}

impl Tuples {
    pub fn new(n: usize, k: usize) -> Self {
        let current = if n == 0 && k > 0 { None } else { Some(vec![0; k]) };
        Tuples { n, current }
    }
}

impl Iterator for Tuples {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.take()?;
        let mut next = out.clone();
        let mut i = next.len();
        loop {
            if i == 0 {
                break;
            }
            i -= 1;
            next[i] += 1;
            if next[i] < self.n {
                self.current = Some(next);
                break;
            }
            next[i] = 0;
        }
        Some(out)
    }
}

/// The satisfying assignments to a tuple of variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolutionSet {
    vars: VarTuple,
    tuples: BTreeSet<Vec<usize>>,
}

impl SolutionSet {
    pub fn vars(&self) -> &VarTuple {
        &self.vars
    }

    pub fn tuples(&self) -> &BTreeSet<Vec<usize>> {
        &self.tuples
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn contains(&self, tuple: &[usize]) -> bool {
        self.tuples.contains(tuple)
    }

    pub fn assignments(&self) -> impl Iterator<Item = Assignment> + '_ {
        self.tuples.iter().map(|t| Assignment::zip(self.vars.vars(), t))
    }
}

fn check_values(structure: &FiniteStructure, alpha: &Assignment) -> Result<(), EvalError> {
    match alpha.iter().find(|(_, v)| *v >= structure.universe()) {
        Some((_, v)) => Err(EvalError::ElementOutOfRange(v)),
        None => Ok(()),
    }
}

pub fn evaluate(structure: &FiniteStructure, f: &Formula, alpha: &Assignment) -> Result<bool, EvalError> {
    check_values(structure, alpha)?;
    let vars = alpha.vars();
    let values: Vec<usize> = alpha.iter().map(|(_, v)| v).collect();
    let compiled = Compiled::new(structure, f, &vars)?;
    let mut ev = compiled.evaluator();
    Ok(ev.eval(&values))
}

fn enumerate<F>(
    structure: &FiniteStructure,
    f: &Formula,
    x: &VarTuple,
    alpha: &Assignment,
    mut visit: F,
) -> Result<(), EvalError>
where
    F: FnMut(&[usize]),
{
    check_values(structure, alpha)?;
    let outer: Vec<(Var, usize)> =
        alpha.iter().filter(|(v, _)| !x.contains(v)).map(|(v, e)| (v.clone(), e)).collect();
    let mut inputs: Vec<Var> = x.vars().to_vec();
    inputs.extend(outer.iter().map(|(v, _)| v.clone()));
    let compiled = Compiled::new(structure, f, &inputs)?;
    let mut ev = compiled.evaluator();
    let mut values: Vec<usize> = vec![0; x.len()];
    values.extend(outer.iter().map(|(_, e)| *e));
    for t in Tuples::new(structure.universe(), x.len()) {
        values[..t.len()].copy_from_slice(&t);
        if ev.eval(&values) {
            visit(&t);
        }
    }
    Ok(())
}

/// Exhaustively enumerates the values of `x` satisfying `f` under `alpha`.
/// Values that `alpha` gives to variables of `x` are ignored.
pub fn solutions(
    structure: &FiniteStructure,
    f: &Formula,
    x: &VarTuple,
    alpha: &Assignment,
) -> Result<SolutionSet, EvalError> {
    let mut tuples = BTreeSet::new();
    enumerate(structure, f, x, alpha, |t| {
        tuples.insert(t.to_vec());
    })?;
    Ok(SolutionSet { vars: x.clone(), tuples })
}

pub fn count_solutions(
    structure: &FiniteStructure,
    f: &Formula,
    x: &VarTuple,
    alpha: &Assignment,
) -> Result<usize, EvalError> {
    let mut count = 0;
    enumerate(structure, f, x, alpha, |_| count += 1)?;
    Ok(count)
}

/// Outcome of an exhaustive equivalence check on one structure.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Equivalence {
    Equivalent,
    Differs { witness: Assignment, left: bool, right: bool },
}

impl Equivalence {
    pub fn is_equivalent(&self) -> bool {
        matches!(self, Equivalence::Equivalent)
    }

    pub fn witness(&self) -> Option<&Assignment> {
        match self {
            Equivalence::Equivalent => None,
            Equivalence::Differs { witness, .. } => Some(witness),
        }
    }
}

/// Compares `f` and `g` on every assignment to their (common) free variables.
pub fn equivalent_on(structure: &FiniteStructure, f: &Formula, g: &Formula) -> Result<Equivalence, EvalError> {
    let (lf, lg) = (f.free_vars(), g.free_vars());
    if lf != lg {
        return Err(EvalError::FreeVariableMismatch {
            left: lf.into_iter().collect(),
            right: lg.into_iter().collect(),
        });
    }
    let vars: Vec<Var> = lf.into_iter().collect();
    equivalent_over(structure, f, g, &vars)
}

/// Compares `f` and `g` on every assignment to `vars`, which must cover the
/// free variables of both. The witness lists `vars` in sorted order.
pub fn equivalent_over(
    structure: &FiniteStructure,
    f: &Formula,
    g: &Formula,
    vars: &[Var],
) -> Result<Equivalence, EvalError> {
    let mut vars = vars.to_vec();
    vars.sort();
    vars.dedup();
    let cf = Compiled::new(structure, f, &vars)?;
    let cg = Compiled::new(structure, g, &vars)?;
    let (mut ef, mut eg) = (cf.evaluator(), cg.evaluator());
    for t in Tuples::new(structure.universe(), vars.len()) {
        let (a, b) = (ef.eval(&t), eg.eval(&t));
        if a != b {
            return Ok(Equivalence::Differs { witness: Assignment::zip(&vars, &t), left: a, right: b });
        }
    }
    Ok(Equivalence::Equivalent)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse, Signature};

    fn dcycle(n: usize) -> FiniteStructure {
        FiniteStructure::new(n).with_relation("E", 2, (0..n).map(|i| vec![i, (i + 1) % n])).unwrap()
    }

    fn ucycle(n: usize) -> FiniteStructure {
        let edges = (0..n).flat_map(|i| [vec![i, (i + 1) % n], vec![(i + 1) % n, i]]);
        FiniteStructure::new(n).with_relation("E", 2, edges).unwrap()
    }

    fn f(text: &str) -> Formula {
        parse(text, &Signature::parse("E/2").unwrap()).unwrap()
    }

    #[test]
    fn evaluate_examples() {
        let c4 = dcycle(4);
        assert!(evaluate(&c4, &f("E(x,y)"), &Assignment::new().with("x", 0).with("y", 1)).unwrap());
        assert!(evaluate(&c4, &f("E[=1] x . E(x,y)"), &Assignment::new().with("y", 2)).unwrap());
        assert!(evaluate(&c4, &Formula::True, &Assignment::new()).unwrap());
        assert!(matches!(
            evaluate(&c4, &f("E(x,y)"), &Assignment::new().with("x", 0)),
            Err(EvalError::UnboundVariable(_))
        ));
    }

    #[test]
    fn solution_examples() {
        let x = VarTuple::parse("x").unwrap();
        let s = solutions(&dcycle(4), &f("E(x,y)"), &x, &Assignment::new().with("y", 1)).unwrap();
        assert_eq!(s.tuples().iter().cloned().collect::<Vec<_>>(), vec![vec![0]]);
        let s = solutions(&ucycle(4), &f("E(x,y)"), &x, &Assignment::new().with("y", 0)).unwrap();
        assert_eq!(s.tuples().iter().cloned().collect::<Vec<_>>(), vec![vec![1], vec![3]]);
        assert!(solutions(&ucycle(4), &Formula::False, &x, &Assignment::new()).unwrap().is_empty());
        assert_eq!(count_solutions(&ucycle(4), &f("E(x,y)"), &x, &Assignment::new().with("y", 0)).unwrap(), 2);
        assert_eq!(count_solutions(&dcycle(4), &f("E(x,y)"), &x, &Assignment::new().with("y", 0)).unwrap(), 1);
    }

    #[test]
    fn equivalence_examples() {
        let c4 = dcycle(4);
        let e = equivalent_on(&c4, &f("E(x,y)"), &f("E(y,x)")).unwrap();
        assert_eq!(e.witness(), Some(&Assignment::new().with("x", 0).with("y", 1)));
        assert!(equivalent_on(&c4, &f("E(x,y)"), &f("E(x,y)")).unwrap().is_equivalent());
        assert!(matches!(
            equivalent_on(&c4, &f("E(x,y)"), &f("E(x,x)")),
            Err(EvalError::FreeVariableMismatch { .. })
        ));
    }

    #[test]
    fn tuples_enumeration() {
        assert_eq!(Tuples::new(2, 2).count(), 4);
        assert_eq!(Tuples::new(3, 0).collect::<Vec<_>>(), vec![Vec::<usize>::new()]);
        assert_eq!(Tuples::new(0, 1).count(), 0);
    }
}
