//! Mutual-algebraicity bounds on finite structures and families of cutouts.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::semantics::{Compiled, EvalError, FiniteStructure, Tuples};
use crate::syntax::{
    print, proper_partitions, rename_free, substitute, CountMode, Formula, SyntaxError, Term, Var,
    VarTuple,
};

#[derive(Debug, PartialEq, Eq, thiserror::Error)]
pub enum AlgebraicityError {
    #[error("free variable {0} is not in the tuple")]
    FreeNotCovered(Var),
    #[error("variable {0} is not in the tuple")]
    NotInTuple(Var),
    #[error("the family is empty")]
    EmptyFamily,
    #[error("{0} is not a permutation of the tuple")]
    NotPermutation(String),
    #[error("renaming would capture {0} under a quantifier")]
    Capture(Var),
    #[error("expected {expected} parameters, got {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("conjoined tuples have no variable in common")]
    NoOverlap,
    #[error("nothing to conjoin")]
    EmptyConjunction,
    #[error("the resulting tuple would be empty")]
    EmptyTuple,
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
}

/// Maximum number of x-solutions over all y-values for one proper partition.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionBound {
    pub x: Vec<Var>,
    pub y: Vec<Var>,
    pub max: usize,
}

/// Per-partition solution maxima of a formula on one structure.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaBoundCertificate {
    pub formula: String,
    pub structure: String,
    pub partitions: Vec<PartitionBound>,
    pub bound: usize,
    pub vacuous: bool,
}

impl MaBoundCertificate {
    /// Whether this certificate was issued for `f` (compared by printed text).
    pub fn certifies(&self, f: &Formula) -> bool {
        self.formula == print(f)
    }

    /// Whether the measured bound is within `n`.
    pub fn within(&self, n: usize) -> bool {
        self.bound <= n
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("certificate serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

fn check_cover(f: &Formula, z: &VarTuple) -> Result<(), AlgebraicityError> {
    match f.free_vars().into_iter().find(|v| !z.contains(v)) {
        Some(v) => Err(AlgebraicityError::FreeNotCovered(v)),
        None => Ok(()),
    }
}

/// All tuples over `z` satisfying `f` in `structure`.
fn satisfying(structure: &FiniteStructure, f: &Formula, z: &VarTuple) -> Result<Vec<Vec<usize>>, EvalError> {
    let compiled = Compiled::new(structure, f, z.vars())?;
    let mut ev = compiled.evaluator();
    Ok(Tuples::new(structure.universe(), z.len()).filter(|t| ev.eval(t)).collect())
}

pub fn ma_bound(
    structure: &FiniteStructure,
    f: &Formula,
    z: &VarTuple,
) -> Result<MaBoundCertificate, AlgebraicityError> {
    check_cover(f, z)?;
    let mut cert = MaBoundCertificate {
        formula: print(f),
        structure: structure.name().to_string(),
        partitions: Vec::new(),
        bound: 0,
        vacuous: z.len() <= 1,
    };
    if cert.vacuous {
        // still surfaces evaluation errors
        Compiled::new(structure, f, z.vars())?;
        return Ok(cert);
    }
    let rows = satisfying(structure, f, z)?;
    let index: HashMap<&Var, usize> = z.vars().iter().enumerate().map(|(i, v)| (v, i)).collect();
    for p in proper_partitions(z) {
        let ypos: Vec<usize> = p.y.vars().iter().map(|v| index[v]).collect();
        let mut counts: HashMap<Vec<usize>, usize> = HashMap::new();
        for row in &rows {
            let key: Vec<usize> = ypos.iter().map(|&i| row[i]).collect();
            *counts.entry(key).or_default() += 1;
        }
        let max = counts.values().copied().max().unwrap_or(0);
        cert.bound = cert.bound.max(max);
        cert.partitions.push(PartitionBound { x: p.x.into_vec(), y: p.y.into_vec(), max });
    }
    Ok(cert)
}

pub const DEFAULT_SUFFIX: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "bound", rename_all = "lowercase")]
pub enum Verdict {
    Stable(usize),
    Growing,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Stable(n) => write!(f, "stable({n})"),
            Verdict::Growing => write!(f, "growing"),
            Verdict::Inconclusive => write!(f, "inconclusive"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FamilyStabilityReport {
    pub bounds: Vec<(String, usize)>,
    pub vacuous: bool,
    pub suffix: usize,
    pub verdict: Verdict,
}

/// The stability rule on a bound sequence: stable when the last `suffix`
/// values agree, growing when they are non-decreasing and not all equal.
pub fn stability_verdict(bounds: &[usize], suffix: usize) -> Verdict {
    let suffix = suffix.max(1);
    if bounds.len() < suffix {
        return Verdict::Inconclusive;
    }
    let tail = &bounds[bounds.len() - suffix..];
    if tail.iter().all(|&b| b == tail[0]) {
        Verdict::Stable(tail[0])
    } else if tail.windows(2).all(|w| w[0] <= w[1]) {
        Verdict::Growing
    } else {
        Verdict::Inconclusive
    }
}

pub fn family_stability(
    family: &[FiniteStructure],
    f: &Formula,
    z: &VarTuple,
    suffix: usize,
) -> Result<FamilyStabilityReport, AlgebraicityError> {
    if family.is_empty() {
        return Err(AlgebraicityError::EmptyFamily);
    }
    let mut bounds = Vec::with_capacity(family.len());
    for m in family {
        let cert = ma_bound(m, f, z)?;
        bounds.push((m.name().to_string(), cert.bound));
    }
    let vacuous = z.len() <= 1;
    let values: Vec<usize> = bounds.iter().map(|(_, b)| *b).collect();
    let verdict = if vacuous { Verdict::Stable(0) } else { stability_verdict(&values, suffix) };
    Ok(FamilyStabilityReport { bounds, vacuous, suffix, verdict })
}

/// A closure constructor applied to a formula with its variable tuple.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ClosureOp {
    /// Rename the i-th tuple variable to the i-th listed variable.
    Permute(Vec<Var>),
    /// Existentially quantify the listed variables.
    Project(VarTuple),
    /// Replace variables by literals or constants.
    Specialize { vars: VarTuple, params: Vec<Term> },
    /// Conjoin with further formulas over overlapping tuples.
    Conjoin(Vec<(Formula, VarTuple)>),
    /// Count solutions in the listed variables.
    Count { r: usize, vars: VarTuple },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClosureResult {
    pub formula: Formula,
    pub vars: VarTuple,
    pub note: &'static str,
}

fn remove(z: &VarTuple, drop: &VarTuple) -> Result<VarTuple, AlgebraicityError> {
    if let Some(v) = drop.vars().iter().find(|v| !z.contains(v)) {
        return Err(AlgebraicityError::NotInTuple(v.clone()));
    }
    let rest: Vec<Var> = z.vars().iter().filter(|v| !drop.contains(v)).cloned().collect();
    if rest.is_empty() {
        return Err(AlgebraicityError::EmptyTuple);
    }
    Ok(VarTuple::from(rest))
}

const REMEASURE: &str = "bound not derived; re-measure with ma_bound";

pub fn closure_apply(f: &Formula, z: &VarTuple, op: &ClosureOp) -> Result<ClosureResult, AlgebraicityError> {
    check_cover(f, z)?;
    match op {
        ClosureOp::Permute(target) => {
            let a: BTreeSet<&Var> = z.vars().iter().collect();
            let b: BTreeSet<&Var> = target.iter().collect();
            if a != b || target.len() != z.len() {
                return Err(AlgebraicityError::NotPermutation(format!("{target:?}")));
            }
            let bound = f.bound_vars();
            if let Some(v) = target.iter().find(|v| bound.contains(*v)) {
                return Err(AlgebraicityError::Capture(v.clone()));
            }
            let map: BTreeMap<Var, Term> =
                z.vars().iter().cloned().zip(target.iter().map(|v| Term::Var(v.clone()))).collect();
            Ok(ClosureResult {
                formula: rename_free(f, &map),
                vars: VarTuple::from(target.clone()),
                note: "bound preserved exactly",
            })
        }
        ClosureOp::Project(ys) => {
            let rest = remove(z, ys)?;
            Ok(ClosureResult { formula: Formula::exists(ys.vars().to_vec(), f.clone()), vars: rest, note: REMEASURE })
        }
        ClosureOp::Specialize { vars, params } => {
            if vars.len() != params.len() {
                return Err(AlgebraicityError::LengthMismatch { expected: vars.len(), found: params.len() });
            }
            let rest = remove(z, vars)?;
            let sigma: BTreeMap<Var, Term> = vars.vars().iter().cloned().zip(params.iter().cloned()).collect();
            Ok(ClosureResult { formula: substitute(f, &sigma)?, vars: rest, note: REMEASURE })
        }
        ClosureOp::Conjoin(others) => {
            if others.is_empty() {
                return Err(AlgebraicityError::EmptyConjunction);
            }
            let mut common = z.range();
            let mut all: Vec<Var> = z.vars().to_vec();
            let mut parts = vec![f.clone()];
            for (g, w) in others {
                check_cover(g, w)?;
                common = common.intersection(&w.range()).cloned().collect();
                all.extend(w.vars().iter().filter(|v| !all.contains(v)).cloned().collect::<Vec<_>>());
                parts.push(g.clone());
            }
            if common.is_empty() {
                return Err(AlgebraicityError::NoOverlap);
            }
            Ok(ClosureResult { formula: Formula::and(parts), vars: VarTuple::from(all), note: REMEASURE })
        }
        ClosureOp::Count { r, vars } => {
            let rest = remove(z, vars)?;
            Ok(ClosureResult {
                formula: Formula::count(CountMode::AtLeast, *r, vars.vars().to_vec(), f.clone()),
                vars: rest,
                note: REMEASURE,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse, Signature};

    fn ucycle(n: usize) -> FiniteStructure {
        let edges = (0..n).flat_map(|i| [vec![i, (i + 1) % n], vec![(i + 1) % n, i]]);
        FiniteStructure::new(n).with_relation("E", 2, edges).unwrap()
    }

    fn f(text: &str) -> Formula {
        parse(text, &Signature::parse("E/2,S/2").unwrap()).unwrap()
    }

    fn t(text: &str) -> VarTuple {
        VarTuple::parse(text).unwrap()
    }

    #[test]
    fn cycle_bound_and_vacuous() {
        for n in 5..=10 {
            let cert = ma_bound(&ucycle(n), &f("E(x,y)"), &t("x y")).unwrap();
            assert_eq!(cert.bound, 2);
            assert_eq!(cert.partitions.len(), 2);
        }
        let cert = ma_bound(&ucycle(5), &f("E x . E(x,y)"), &t("y")).unwrap();
        assert!(cert.vacuous && cert.bound == 0);
        assert!(matches!(
            ma_bound(&ucycle(5), &f("E(x,y)"), &t("x")),
            Err(AlgebraicityError::FreeNotCovered(_))
        ));
    }

    #[test]
    fn certificate_keys() {
        let cert = ma_bound(&ucycle(5), &f("E(x,y)"), &t("x y")).unwrap();
        let v: serde_json::Value = serde_json::from_str(&cert.to_json()).unwrap();
        let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
        assert_eq!(keys, ["bound", "formula", "partitions", "structure", "vacuous"]);
        assert_eq!(MaBoundCertificate::from_json(&cert.to_json()).unwrap(), cert);
        assert!(cert.certifies(&f("E(x,y)")));
    }

    #[test]
    fn verdict_rule() {
        assert_eq!(stability_verdict(&[3, 2, 2, 2], 3), Verdict::Stable(2));
        assert_eq!(stability_verdict(&[2, 3, 4], 3), Verdict::Growing);
        assert_eq!(stability_verdict(&[2, 4, 3], 3), Verdict::Inconclusive);
        assert_eq!(stability_verdict(&[2, 2], 3), Verdict::Inconclusive);
    }

    #[test]
    fn closure_ops() {
        let z = t("x y");
        let p = closure_apply(&f("E(x,y)"), &z, &ClosureOp::Permute(vec!["y".into(), "x".into()])).unwrap();
        assert_eq!(p.formula, f("E(y,x)"));
        let c4 = ucycle(4);
        assert_eq!(
            ma_bound(&c4, &p.formula, &p.vars).unwrap().bound,
            ma_bound(&c4, &f("E(x,y)"), &z).unwrap().bound
        );
        let s = closure_apply(
            &f("E(x,y)"),
            &z,
            &ClosureOp::Specialize { vars: t("y"), params: vec![Term::Elem(0)] },
        )
        .unwrap();
        assert_eq!(s.formula, f("E(x,#0)"));
        assert!(ma_bound(&c4, &s.formula, &s.vars).unwrap().vacuous);
        let c = closure_apply(&f("E(x,y)"), &z, &ClosureOp::Count { r: 2, vars: t("x") }).unwrap();
        assert_eq!(c.vars, t("y"));
        assert!(matches!(
            closure_apply(&f("E(x,y)"), &z, &ClosureOp::Conjoin(vec![(f("S(u,w)"), t("u w"))])),
            Err(AlgebraicityError::NoOverlap)
        ));
        let j = closure_apply(&f("E(x,y)"), &z, &ClosureOp::Conjoin(vec![(f("S(y,w)"), t("y w"))])).unwrap();
        assert_eq!(j.vars, t("x y w"));
    }
}
