use std::collections::{BTreeMap, BTreeSet};

use super::ast::{CountMode, Formula, Term, Var, VarTuple};
use super::SyntaxError;

/// An ordered split `z = x ^ y` of a tuple into two nonempty disjoint parts.
#[derive(Clone, PartialEq, Eq, Debug, Hash, PartialOrd, Ord)]
pub struct ProperPartition {
    pub x: VarTuple,
    pub y: VarTuple,
}

/// All `2^n - 2` proper partitions of `z`, in the order of the bitmask that
/// selects the x-part. Each part keeps the relative order of `z`.
pub fn proper_partitions(z: &VarTuple) -> Vec<ProperPartition> {
    let n = z.len();
    if n < 2 {
        return Vec::new();
    }
    assert!(n < usize::BITS as usize, "tuple too long to partition");
    let full = (1usize << n) - 1;
    (1..full)
        .map(|mask| {
            let (mut xs, mut ys) = (Vec::new(), Vec::new());
            for (i, v) in z.vars().iter().enumerate() {
                if mask & (1 << i) != 0 {
                    xs.push(v.clone());
                } else {
                    ys.push(v.clone());
                }
            }
            ProperPartition { x: VarTuple::from(xs), y: VarTuple::from(ys) }
        })
        .collect()
}

/// Deterministic fresh-name source: `base_k` for the smallest unused `k`.
#[derive(Clone, Debug, Default)]
pub struct FreshNames {
    used: BTreeSet<String>,
}

impl FreshNames {
    pub fn new() -> Self {
        Self::default()
    }

    /// Starts with every variable of the given formulas marked as used.
    pub fn avoiding<'a>(formulas: impl IntoIterator<Item = &'a Formula>) -> Self {
        let mut names = Self::new();
        for f in formulas {
            names.reserve_formula(f);
        }
        names
    }

    pub fn reserve(&mut self, v: &Var) {
        self.used.insert(v.as_str().to_string());
    }

    pub fn reserve_formula(&mut self, f: &Formula) {
        for v in f.all_vars() {
            self.reserve(&v);
        }
    }

    pub fn fresh(&mut self, base: &str) -> Var {
        let stem = base.trim_end_matches(|c: char| c.is_ascii_digit() || c == '_');
        let stem = if stem.is_empty() { "v" } else { stem };
        let mut k = 0usize;
        loop {
            let name = format!("{stem}_{k}");
            if self.used.insert(name.clone()) {
                return Var::new(name);
            }
            k += 1;
        }
    }

    /// A fresh copy of every variable in `vars`.
    pub fn fresh_copies(&mut self, vars: &[Var]) -> Vec<Var> {
        vars.iter().map(|v| self.fresh(v.as_str())).collect()
    }
}

fn rename_term(t: &Term, map: &BTreeMap<Var, Term>, shadowed: &[Var]) -> Term {
    match t {
        Term::Var(v) if !shadowed.contains(v) => map.get(v).cloned().unwrap_or_else(|| t.clone()),
        _ => t.clone(),
    }
}

fn rename_inner(f: &Formula, map: &BTreeMap<Var, Term>, shadowed: &mut Vec<Var>) -> Formula {
    match f {
        Formula::True | Formula::False => f.clone(),
        Formula::Atom(r, args) => Formula::Atom(
            r.clone(),
            args.iter().map(|t| rename_term(t, map, shadowed)).collect(),
        ),
        Formula::Eq(a, b) => {
            Formula::Eq(rename_term(a, map, shadowed), rename_term(b, map, shadowed))
        }
        Formula::Not(g) => Formula::not(rename_inner(g, map, shadowed)),
        Formula::And(gs) => Formula::And(gs.iter().map(|g| rename_inner(g, map, shadowed)).collect()),
        Formula::Or(gs) => Formula::Or(gs.iter().map(|g| rename_inner(g, map, shadowed)).collect()),
        Formula::Implies(a, b) => {
            Formula::implies(rename_inner(a, map, shadowed), rename_inner(b, map, shadowed))
        }
        Formula::Iff(a, b) => {
            Formula::iff(rename_inner(a, map, shadowed), rename_inner(b, map, shadowed))
        }
        Formula::Exists(vs, g) | Formula::Forall(vs, g) | Formula::Count(_, _, vs, g) => {
            let depth = shadowed.len();
            shadowed.extend(vs.iter().cloned());
            let body = Box::new(rename_inner(g, map, shadowed));
            shadowed.truncate(depth);
            match f {
                Formula::Exists(..) => Formula::Exists(vs.clone(), body),
                Formula::Forall(..) => Formula::Forall(vs.clone(), body),
                Formula::Count(mode, r, ..) => Formula::Count(*mode, *r, vs.clone(), body),
                _ => unreachable!(),
            }
        }
    }
}

/// Replaces free occurrences of mapped variables, leaving bound occurrences
/// alone. Callers are responsible for capture; the rewrite constructions only
/// introduce fresh names.
pub fn rename_free(f: &Formula, map: &BTreeMap<Var, Term>) -> Formula {
    if map.is_empty() {
        return f.clone();
    }
    rename_inner(f, map, &mut Vec::new())
}

/// Simultaneous renaming of variables to variables.
pub fn rename_vars(f: &Formula, from: &[Var], to: &[Var]) -> Formula {
    debug_assert_eq!(from.len(), to.len());
    let map = from
        .iter()
        .cloned()
        .zip(to.iter().map(Term::from))
        .collect::<BTreeMap<_, _>>();
    rename_free(f, &map)
}

/// Specializes free variables to element literals or named constants.
///
/// Substituting a variable that is bound somewhere in `f`, or substituting a
/// variable term, is rejected.
pub fn substitute(f: &Formula, sigma: &BTreeMap<Var, Term>) -> Result<Formula, SyntaxError> {
    let bound = f.bound_vars();
    for (v, t) in sigma {
        if bound.contains(v) {
            return Err(SyntaxError::SubstituteBound(v.clone()));
        }
        if let Term::Var(w) = t {
            return Err(SyntaxError::NonGroundSubstitution(v.clone(), w.clone()));
        }
    }
    Ok(rename_free(f, sigma))
}

/// `E[>=r] xs . body` as plain first-order logic: `r` renamed copies of the
/// tuple, each satisfying the body, pairwise distinct.
fn at_least(r: usize, vars: &[Var], body: &Formula, fresh: &mut FreshNames) -> Formula {
    match r {
        0 => Formula::True,
        1 => Formula::exists(vars.to_vec(), body.clone()),
        _ => {
            let copies: Vec<Vec<Var>> = (0..r).map(|_| fresh.fresh_copies(vars)).collect();
            let mut parts: Vec<Formula> =
                copies.iter().map(|c| rename_vars(body, vars, c)).collect();
            let tuples: Vec<Vec<Term>> =
                copies.iter().map(|c| c.iter().map(Term::from).collect()).collect();
            for i in 0..r {
                for j in i + 1..r {
                    parts.push(Formula::tuple_neq(&tuples[i], &tuples[j]));
                }
            }
            Formula::exists(copies.concat(), Formula::and(parts))
        }
    }
}

fn expand_inner(f: &Formula, fresh: &mut FreshNames) -> Formula {
    match f {
        Formula::True | Formula::False | Formula::Atom(..) | Formula::Eq(..) => f.clone(),
        Formula::Not(g) => Formula::not(expand_inner(g, fresh)),
        Formula::And(gs) => Formula::And(gs.iter().map(|g| expand_inner(g, fresh)).collect()),
        Formula::Or(gs) => Formula::Or(gs.iter().map(|g| expand_inner(g, fresh)).collect()),
        Formula::Implies(a, b) => Formula::implies(expand_inner(a, fresh), expand_inner(b, fresh)),
        Formula::Iff(a, b) => Formula::iff(expand_inner(a, fresh), expand_inner(b, fresh)),
        Formula::Exists(vs, g) => Formula::Exists(vs.clone(), Box::new(expand_inner(g, fresh))),
        Formula::Forall(vs, g) => Formula::Forall(vs.clone(), Box::new(expand_inner(g, fresh))),
        Formula::Count(mode, r, vs, g) => {
            let body = expand_inner(g, fresh);
            match mode {
                CountMode::AtLeast => at_least(*r, vs, &body, fresh),
                CountMode::AtMost => Formula::not(at_least(r + 1, vs, &body, fresh)),
                CountMode::Exactly => Formula::And(vec![
                    at_least(*r, vs, &body, fresh),
                    Formula::not(at_least(r + 1, vs, &body, fresh)),
                ]),
            }
        }
    }
}

/// Replaces every counting quantifier by an equivalent formula that uses
/// only `E`, `A` and boolean connectives.
pub fn expand_counting(f: &Formula) -> Formula {
    let mut fresh = FreshNames::avoiding([f]);
    expand_inner(f, &mut fresh)
}

/// Folds `true`/`false`, removes double negations and flattens nested
/// conjunctions and disjunctions. The result is equivalent on every structure.
pub fn simplify(f: &Formula) -> Formula {
    match f {
        Formula::Not(g) => match simplify(g) {
            Formula::True => Formula::False,
            Formula::False => Formula::True,
            Formula::Not(h) => *h,
            h => Formula::not(h),
        },
        Formula::And(gs) | Formula::Or(gs) => {
            let conj = matches!(f, Formula::And(_));
            let (unit, zero) = if conj { (Formula::True, Formula::False) } else { (Formula::False, Formula::True) };
            let mut parts = Vec::with_capacity(gs.len());
            for g in gs {
                match simplify(g) {
                    h if h == unit => {}
                    h if h == zero => return zero,
                    Formula::And(hs) if conj => parts.extend(hs),
                    Formula::Or(hs) if !conj => parts.extend(hs),
                    h => parts.push(h),
                }
            }
            if conj {
                Formula::and(parts)
            } else {
                Formula::or(parts)
            }
        }
        Formula::Implies(a, b) => Formula::implies(simplify(a), simplify(b)),
        Formula::Iff(a, b) => Formula::iff(simplify(a), simplify(b)),
        Formula::Exists(vs, body) => match simplify(body) {
            Formula::False => Formula::False,
            b => Formula::exists(vs.clone(), b),
        },
        Formula::Forall(vs, body) => match simplify(body) {
            Formula::True => Formula::True,
            b => Formula::forall(vs.clone(), b),
        },
        Formula::Count(mode, r, vs, body) => Formula::count(*mode, *r, vs.clone(), simplify(body)),
        _ => f.clone(),
    }
}
