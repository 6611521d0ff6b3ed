use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::minimal::name_element;
use super::{existential_dnf, max_count, BaseCountRewriter, RewriteError, RewriteResult};
use crate::algebraicity::DEFAULT_SUFFIX;
use crate::semantics::{Compiled, FiniteStructure, Tuples};
use crate::syntax::{expand_counting, print, rename_free, CountMode, Formula, FreshNames, Term, Var, VarTuple};

/// A quantifier-free kernel `theta(x, y, z)` linking `x` to `y`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Kernel {
    pub formula: Formula,
    pub x: Var,
    pub y: Var,
    pub z: VarTuple,
}

impl Kernel {
    /// `z` is every other free variable, sorted.
    pub fn new(formula: Formula, x: Var, y: Var) -> Result<Self, RewriteError> {
        if !formula.is_quantifier_free() {
            return Err(RewriteError::InvalidConfig(format!("kernel {} is not quantifier-free", print(&formula))));
        }
        let free = formula.free_vars();
        if x == y || !free.contains(&x) || !free.contains(&y) {
            return Err(RewriteError::InvalidConfig(format!("kernel {} must mention {x} and {y}", print(&formula))));
        }
        let z = VarTuple::from(free.into_iter().filter(|v| *v != x && *v != y).collect::<Vec<_>>());
        Ok(Kernel { formula, x, y, z })
    }

    /// A kernel over the variables named `x` and `y`.
    pub fn standard(formula: Formula) -> Result<Self, RewriteError> {
        Kernel::new(formula, Var::from("x"), Var::from("y"))
    }

    /// The positions other than `x`: `y` followed by `z`.
    fn others(&self) -> Vec<Var> {
        let mut v = vec![self.y.clone()];
        v.extend(self.z.vars().iter().cloned());
        v
    }
}

/// A quantifier-free `R(z, a)` whose solutions in `z` are counted for each `a`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountTarget {
    pub formula: Formula,
    pub z: VarTuple,
    pub var: Var,
}

impl CountTarget {
    pub fn new(formula: Formula, z: VarTuple, var: Var) -> Result<Self, RewriteError> {
        if !formula.is_quantifier_free() {
            return Err(RewriteError::Shape(format!("{} is not quantifier-free", print(&formula))));
        }
        if z.contains(&var) {
            return Err(RewriteError::Shape(format!("{var} occurs in {z}")));
        }
        if let Some(v) = formula.free_vars().into_iter().find(|v| *v != var && !z.contains(v)) {
            return Err(RewriteError::Shape(format!("free variable {v} is neither {var} nor in {z}")));
        }
        Ok(CountTarget { formula, z, var })
    }

    /// `R(z', a)` with fresh `z'` and `a` renamed to `to`.
    fn instance(&self, to: &Var, fresh: &mut FreshNames) -> (Vec<Var>, Formula) {
        let zc = fresh.fresh_copies(self.z.vars());
        let mut map: BTreeMap<Var, Term> = self.z.vars().iter().cloned().zip(zc.iter().map(Term::from)).collect();
        map.insert(self.var.clone(), Term::from(to));
        (zc, rename_free(&self.formula, &map))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Rank1Config {
    #[serde(serialize_with = "kernel_texts")]
    pub kernels: Vec<Kernel>,
    /// Strict per-kernel bounds on solutions in `(y, z)` for fixed `x`.
    pub bounds: Vec<usize>,
    #[serde(serialize_with = "term_texts")]
    pub exceptional: Vec<Term>,
    pub witness_count: usize,
    pub min_universe_size: usize,
}

fn kernel_texts<S: serde::Serializer>(ks: &[Kernel], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(ks.iter().map(|k| print(&k.formula)))
}

fn term_texts<S: serde::Serializer>(ts: &[Term], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(ts.iter().map(Term::to_string))
}

impl Rank1Config {
    /// Largest admissible witness count: each kernel contributes at most
    /// `bound * (1 + lg z)` elements to the linked set.
    pub fn cap(&self) -> usize {
        self.kernels.iter().zip(&self.bounds).map(|(k, n)| n * (1 + k.z.len())).sum()
    }

    pub fn validate(&self) -> Result<(), RewriteError> {
        if self.kernels.len() != self.bounds.len() {
            return Err(RewriteError::InvalidConfig(format!(
                "{} kernels but {} bounds",
                self.kernels.len(),
                self.bounds.len()
            )));
        }
        if self.witness_count > self.cap() {
            return Err(RewriteError::InvalidConfig(format!(
                "witness count {} exceeds the cap {}",
                self.witness_count,
                self.cap()
            )));
        }
        if let Some(t) = self.exceptional.iter().find(|t| matches!(t, Term::Var(_))) {
            return Err(RewriteError::InvalidConfig(format!("exceptional element {t:?} is a variable")));
        }
        Ok(())
    }
}

fn membership(cfg: &Rank1Config, target: &CountTarget, r: usize, w: &Var, y: &Var, fresh: &mut FreshNames) -> Formula {
    if cfg.kernels.is_empty() {
        return Formula::False;
    }
    let mut linked = Vec::new();
    for k in &cfg.kernels {
        let others = k.others();
        for p in 0..others.len() {
            let rest: Vec<Var> = others.iter().enumerate().filter(|(i, _)| *i != p).map(|(_, v)| v.clone()).collect();
            let copies = fresh.fresh_copies(&rest);
            let mut map: BTreeMap<Var, Term> = rest.iter().cloned().zip(copies.iter().map(Term::from)).collect();
            map.insert(k.x.clone(), Term::from(y));
            map.insert(others[p].clone(), Term::from(w));
            linked.push(Formula::exists(copies, rename_free(&k.formula, &map)));
        }
    }
    let (zc, instance) = target.instance(w, fresh);
    Formula::and(vec![Formula::or(linked), Formula::count(CountMode::AtLeast, r + 1, zc, instance)])
}

fn reserve_all(cfg: &Rank1Config, target: &CountTarget, vars: &[&Var]) -> FreshNames {
    let mut fresh = FreshNames::avoiding(cfg.kernels.iter().map(|k| &k.formula).chain([&target.formula]));
    vars.iter().for_each(|v| fresh.reserve(v));
    fresh
}

/// The formula in `w` and `y` stating that `w` is linked to `y` by some
/// kernel and has more than `r` solutions of the target.
pub fn fr_membership_formula(cfg: &Rank1Config, target: &CountTarget, r: usize, w: &Var, y: &Var) -> Formula {
    let mut fresh = reserve_all(cfg, target, &[w, y]);
    membership(cfg, target, r, w, y, &mut fresh)
}

/// Direct computation of the linked heavy set of every element: entry `b`
/// holds the elements `c` occurring in a solution of some kernel at `x = b`
/// and having more than `r` target solutions.
pub fn fr_set(
    structure: &FiniteStructure,
    kernels: &[Kernel],
    target: &CountTarget,
    r: usize,
) -> Result<Vec<BTreeSet<usize>>, RewriteError> {
    let n = structure.universe();
    let mut inputs = vec![target.var.clone()];
    inputs.extend(target.z.vars().iter().cloned());
    let compiled = Compiled::new(structure, &target.formula, &inputs)?;
    let mut ev = compiled.evaluator();
    let heavy: Vec<bool> = (0..n)
        .map(|c| {
            let mut count = 0;
            for t in Tuples::new(n, target.z.len()) {
                let mut values = vec![c];
                values.extend(t);
                if ev.eval(&values) {
                    count += 1;
                }
            }
            count > r
        })
        .collect();
    let mut sets = vec![BTreeSet::new(); n];
    for k in kernels {
        let mut inputs = vec![k.x.clone()];
        inputs.extend(k.others());
        let compiled = Compiled::new(structure, &k.formula, &inputs)?;
        let mut ev = compiled.evaluator();
        for t in Tuples::new(n, inputs.len()) {
            if ev.eval(&t) {
                sets[t[0]].extend(t[1..].iter().copied().filter(|&c| heavy[c]));
            }
        }
    }
    Ok(sets)
}

/// Builds `delta(x)`: for some kernel there is a non-exceptional `y` linked
/// to `x` with `witness_count` distinct heavy elements linked to `y`, none
/// equal to `x`. The result is put in disjunctive existential form.
pub fn rank1_delta(cfg: &Rank1Config, target: &CountTarget, r: usize, x: &Var) -> Result<RewriteResult, RewriteError> {
    cfg.validate()?;
    let mut fresh = reserve_all(cfg, target, &[x]);
    let mut disjuncts = Vec::new();
    let mut trace = Vec::new();
    for k in &cfg.kernels {
        let yv = fresh.fresh(k.y.as_str());
        let zv = fresh.fresh_copies(k.z.vars());
        let mut map: BTreeMap<Var, Term> = k.z.vars().iter().cloned().zip(zv.iter().map(Term::from)).collect();
        map.insert(k.x.clone(), Term::from(x));
        map.insert(k.y.clone(), Term::from(&yv));
        let linked = rename_free(&k.formula, &map);
        let avoid = Formula::and(cfg.exceptional.iter().map(|q| Formula::neq(yv.clone(), q.clone())).collect());
        let ws: Vec<Var> = (0..cfg.witness_count).map(|_| fresh.fresh("w")).collect();
        let mut block = vec![Formula::pairwise_distinct(&ws.iter().map(|w| vec![Term::from(w)]).collect::<Vec<_>>())];
        for w in &ws {
            let m = membership(cfg, target, r, w, &yv, &mut fresh);
            if trace.is_empty() {
                trace.push(("membership".to_string(), print(&m)));
            }
            block.push(m);
        }
        block.extend(ws.iter().map(|w| Formula::neq(x.clone(), w.clone())));
        let body = Formula::and(vec![linked, avoid, Formula::exists(ws, Formula::and(block))]);
        let mut vars = vec![yv];
        vars.extend(zv);
        disjuncts.push(Formula::exists(vars, body));
    }
    let delta = Formula::or(disjuncts);
    trace.push(("delta".to_string(), print(&delta)));
    let output = existential_dnf(&delta, &mut fresh)?;
    Ok(RewriteResult::new(output, cfg.min_universe_size, trace, "rank1-delta"))
}

/// Chooses the witness count and exceptional set from the family: the
/// witness count is the largest linked-set size whose frequency grows along
/// the last `suffix` cutouts, and the exceptional set is the elements above
/// it, which must be the same on those cutouts.
pub fn estimate_rank1_config(
    family: &[FiniteStructure],
    kernels: &[Kernel],
    target: &CountTarget,
    r: usize,
    suffix: usize,
) -> Result<Rank1Config, RewriteError> {
    let need = suffix.max(2);
    if family.len() < need {
        return Err(RewriteError::Inconclusive(format!(
            "{} cutouts, but stabilization needs {need}",
            family.len()
        )));
    }
    let mut bounds = Vec::with_capacity(kernels.len());
    for k in kernels {
        bounds.push(max_count(family, &k.formula, &k.others())? + 1);
    }
    let mut sizes = Vec::with_capacity(family.len());
    for m in family {
        sizes.push(fr_set(m, kernels, target, r)?.into_iter().map(|s| s.len()).collect::<Vec<_>>());
    }
    let window = &sizes[sizes.len() - need..];
    let values: BTreeSet<usize> = window.iter().flatten().copied().collect();
    let frequency = |s: &Vec<usize>, v: usize| s.iter().filter(|&&x| x == v).count();
    let witness_count = values
        .into_iter()
        .filter(|&v| window.windows(2).all(|w| frequency(&w[0], v) < frequency(&w[1], v)))
        .max()
        .ok_or_else(|| RewriteError::Inconclusive("no linked-set size grows along the family".into()))?;
    let exceptional_of = |s: &Vec<usize>| -> BTreeSet<usize> {
        s.iter().enumerate().filter(|(_, &v)| v > witness_count).map(|(b, _)| b).collect()
    };
    let q = exceptional_of(sizes.last().unwrap());
    let run = sizes.iter().rev().take_while(|s| exceptional_of(s) == q).count();
    if run < need {
        return Err(RewriteError::Inconclusive("the exceptional set changes along the family".into()));
    }
    let run_structs = &family[family.len() - run..];
    let cfg = Rank1Config {
        kernels: kernels.to_vec(),
        bounds,
        exceptional: q.iter().map(|&e| name_element(run_structs, e)).collect(),
        witness_count,
        min_universe_size: run_structs[0].universe(),
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Base rewriter for rank-one families, built on supplied kernels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rank1Base {
    pub kernels: Vec<Kernel>,
    pub suffix: usize,
}

impl Rank1Base {
    pub fn new(kernels: Vec<Kernel>) -> Self {
        Rank1Base { kernels, suffix: DEFAULT_SUFFIX }
    }

    fn run(&self, phi: &Formula, y: &Var, family: &[FiniteStructure]) -> Result<RewriteResult, RewriteError> {
        if phi.is_quantifier_free() {
            return Ok(RewriteResult::new(phi.clone(), 1, Vec::new(), "identity"));
        }
        let (mode, m, zs, body) = match phi {
            Formula::Count(mode, m, zs, body) => (*mode, *m, zs, body.as_ref()),
            _ => return Err(RewriteError::Shape(format!("{} is not a counting formula", print(phi)))),
        };
        let target = CountTarget::new(body.clone(), VarTuple::new(zs.clone())?, y.clone())?;
        let at_least = expand_counting(&Formula::count(CountMode::AtLeast, m, zs.clone(), body.clone()));
        if mode == CountMode::AtLeast {
            return Ok(RewriteResult::new(at_least, 1, Vec::new(), "rank1:at-least"));
        }
        let cfg = estimate_rank1_config(family, &self.kernels, &target, m, self.suffix)?;
        let delta = rank1_delta(&cfg, &target, m, y)?;
        let output = match mode {
            CountMode::AtMost => delta.output,
            _ => Formula::and(vec![delta.output, at_least]),
        };
        Ok(RewriteResult::new(output, cfg.min_universe_size, delta.trace, "rank1"))
    }
}

impl BaseCountRewriter for Rank1Base {
    fn name(&self) -> &'static str {
        "rank1"
    }

    fn rewrite(&self, phi: &Formula, y: &Var, family: &[FiniteStructure]) -> Result<RewriteResult, RewriteError> {
        self.run(phi, y, family).map_err(|e| RewriteError::BaseFailed { base: self.name(), reason: e.to_string() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate, FamilyKind, FamilySpec};
    use crate::semantics::{equivalent_over, solutions, Assignment};
    use crate::syntax::{parse, Signature};

    fn f(text: &str) -> Formula {
        parse(text, &Signature::parse("U/1,B/2").unwrap()).unwrap()
    }

    fn matching_kernels() -> Vec<Kernel> {
        ["x = y", "B(x,y)", "B(y,x)"].iter().map(|t| Kernel::standard(f(t)).unwrap()).collect()
    }

    fn matching_target() -> CountTarget {
        CountTarget::new(f("B(z,x) | B(x,z)"), VarTuple::parse("z").unwrap(), Var::from("x")).unwrap()
    }

    #[test]
    fn membership_of_equality_kernel_is_empty() {
        let cfg = Rank1Config {
            kernels: vec![Kernel::standard(f("x = y")).unwrap()],
            bounds: vec![2],
            exceptional: vec![],
            witness_count: 0,
            min_universe_size: 1,
        };
        let target = CountTarget::new(f("z = y"), VarTuple::parse("z").unwrap(), Var::from("y")).unwrap();
        let (w, y) = (Var::from("w"), Var::from("y"));
        let m = fr_membership_formula(&cfg, &target, 1, &w, &y);
        let sets = generate(&FamilySpec::range(FamilyKind::PureSet, 3, 6)).unwrap();
        for s in &sets {
            assert!(equivalent_over(s, &m, &Formula::False, &[w.clone(), y.clone()]).unwrap().is_equivalent());
        }
        let empty = Rank1Config { kernels: vec![], bounds: vec![], ..cfg };
        assert_eq!(fr_membership_formula(&empty, &target, 1, &w, &y), Formula::False);
    }

    #[test]
    fn membership_matches_set_builder() {
        let family = generate(&FamilySpec::range(FamilyKind::PerfectMatching, 8, 12)).unwrap();
        let target = matching_target();
        for r in 0..2 {
            let cfg = estimate_rank1_config(&family, &matching_kernels(), &target, r, 3).unwrap();
            let (w, y) = (Var::from("w"), Var::from("y"));
            let m = fr_membership_formula(&cfg, &target, r, &w, &y);
            for s in &family {
                let sets = fr_set(s, &cfg.kernels, &target, r).unwrap();
                for (b, set) in sets.iter().enumerate() {
                    let sol = solutions(s, &m, &VarTuple::parse("w").unwrap(), &Assignment::new().with("y", b)).unwrap();
                    let got: BTreeSet<usize> = sol.tuples().iter().map(|t| t[0]).collect();
                    assert_eq!(&got, set);
                }
            }
        }
    }

    #[test]
    fn estimates_on_matching() {
        let family = generate(&FamilySpec::range(FamilyKind::PerfectMatching, 8, 16)).unwrap();
        let cfg0 = estimate_rank1_config(&family, &matching_kernels(), &matching_target(), 0, 3).unwrap();
        assert_eq!((cfg0.witness_count, cfg0.exceptional.len()), (2, 0));
        let cfg1 = estimate_rank1_config(&family, &matching_kernels(), &matching_target(), 1, 3).unwrap();
        assert_eq!((cfg1.witness_count, cfg1.exceptional.len()), (0, 0));
        assert!(cfg1.validate().is_ok());
        assert!(matches!(
            estimate_rank1_config(&family[..1], &matching_kernels(), &matching_target(), 0, 3),
            Err(RewriteError::Inconclusive(_))
        ));
    }

    #[test]
    fn empty_witness_block() {
        let cfg = Rank1Config {
            kernels: matching_kernels(),
            bounds: vec![2, 2, 2],
            exceptional: vec![],
            witness_count: 0,
            min_universe_size: 1,
        };
        let x = Var::from("x");
        let d = rank1_delta(&cfg, &matching_target(), 1, &x).unwrap();
        let expected = f("(E y_0 . x = y_0) | (E y_0 . B(x,y_0)) | (E y_0 . B(y_0,x))");
        for s in generate(&FamilySpec::range(FamilyKind::PerfectMatching, 4, 8)).unwrap() {
            assert!(equivalent_over(&s, &d.output, &expected, &[x.clone()]).unwrap().is_equivalent());
        }
        assert!(d.in_p);
        let too_many = Rank1Config { witness_count: 7, ..cfg };
        assert!(matches!(rank1_delta(&too_many, &matching_target(), 1, &x), Err(RewriteError::InvalidConfig(_))));
    }
}
