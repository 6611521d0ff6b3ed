//! Formula AST over a relational signature with equality, element literals,
//! named constants and counting quantifiers.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::SyntaxError;

/// A variable symbol.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(String);

impl Var {
    pub fn new(name: impl Into<String>) -> Self {
        Var(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl serde::Serialize for Var {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

impl<'de> serde::Deserialize<'de> for Var {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let name = String::deserialize(d)?;
        if is_variable_name(&name) {
            Ok(Var(name))
        } else {
            Err(serde::de::Error::custom(format!("{name:?} is not a valid variable name")))
        }
    }
}

impl From<&str> for Var {
    fn from(s: &str) -> Self {
        Var(s.to_string())
    }
}

impl From<String> for Var {
    fn from(s: String) -> Self {
        Var(s)
    }
}

/// Identifiers that cannot name variables.
pub const RESERVED: [&str; 4] = ["E", "A", "true", "false"];

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

pub(crate) fn is_variable_name(s: &str) -> bool {
    is_identifier(s) && !RESERVED.contains(&s)
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Term {
    Var(Var),
    /// Element literal `#k`.
    Elem(usize),
    /// Named constant `@c`.
    Const(String),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(Var::from(name))
    }

    pub fn as_var(&self) -> Option<&Var> {
        match self {
            Term::Var(v) => Some(v),
            _ => None,
        }
    }
}

impl From<Var> for Term {
    fn from(v: Var) -> Self {
        Term::Var(v)
    }
}

impl From<&Var> for Term {
    fn from(v: &Var) -> Self {
        Term::Var(v.clone())
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum CountMode {
    AtLeast,
    AtMost,
    Exactly,
}

impl CountMode {
    pub fn holds(self, count: usize, r: usize) -> bool {
        match self {
            CountMode::AtLeast => count >= r,
            CountMode::AtMost => count <= r,
            CountMode::Exactly => count == r,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CountMode::AtLeast => ">=",
            CountMode::AtMost => "<=",
            CountMode::Exactly => "=",
        }
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Formula {
    True,
    False,
    Atom(String, Vec<Term>),
    Eq(Term, Term),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    Exists(Vec<Var>, Box<Formula>),
    Forall(Vec<Var>, Box<Formula>),
    Count(CountMode, usize, Vec<Var>, Box<Formula>),
}

impl Formula {
    pub fn atom(rel: &str, args: Vec<Term>) -> Formula {
        Formula::Atom(rel.to_string(), args)
    }

    pub fn eq(a: impl Into<Term>, b: impl Into<Term>) -> Formula {
        Formula::Eq(a.into(), b.into())
    }

    pub fn neq(a: impl Into<Term>, b: impl Into<Term>) -> Formula {
        Formula::Not(Box::new(Formula::eq(a, b)))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    /// Conjunction; the empty conjunction is `True` and a singleton is its
    /// only member.
    pub fn and(mut parts: Vec<Formula>) -> Formula {
        match parts.len() {
            0 => Formula::True,
            1 => parts.pop().unwrap(),
            _ => Formula::And(parts),
        }
    }

    /// Disjunction; the empty disjunction is `False` and a singleton is its
    /// only member.
    pub fn or(mut parts: Vec<Formula>) -> Formula {
        match parts.len() {
            0 => Formula::False,
            1 => parts.pop().unwrap(),
            _ => Formula::Or(parts),
        }
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn iff(a: Formula, b: Formula) -> Formula {
        Formula::Iff(Box::new(a), Box::new(b))
    }

    /// Existential block; quantifying over no variables returns the body.
    pub fn exists(vars: Vec<Var>, body: Formula) -> Formula {
        if vars.is_empty() {
            body
        } else {
            Formula::Exists(vars, Box::new(body))
        }
    }

    pub fn forall(vars: Vec<Var>, body: Formula) -> Formula {
        if vars.is_empty() {
            body
        } else {
            Formula::Forall(vars, Box::new(body))
        }
    }

    /// Counting quantifier. Over the empty tuple there is exactly one
    /// candidate assignment, so the count is 1 or 0 and the quantifier is
    /// rewritten to a boolean combination of the body.
    pub fn count(mode: CountMode, r: usize, vars: Vec<Var>, body: Formula) -> Formula {
        if !vars.is_empty() {
            return Formula::Count(mode, r, vars, Box::new(body));
        }
        let holds_if_true = mode.holds(1, r);
        let holds_if_false = mode.holds(0, r);
        match (holds_if_true, holds_if_false) {
            (true, true) => Formula::True,
            (false, false) => Formula::False,
            (true, false) => body,
            (false, true) => Formula::not(body),
        }
    }

    /// Componentwise equality of two tuples of equal length.
    pub fn tuple_eq(a: &[Term], b: &[Term]) -> Formula {
        debug_assert_eq!(a.len(), b.len());
        Formula::and(
            a.iter()
                .zip(b)
                .map(|(s, t)| Formula::Eq(s.clone(), t.clone()))
                .collect(),
        )
    }

    /// Negated tuple equality: some component differs. Empty tuples are
    /// equal, so this is `False` on empty input.
    pub fn tuple_neq(a: &[Term], b: &[Term]) -> Formula {
        debug_assert_eq!(a.len(), b.len());
        Formula::or(
            a.iter()
                .zip(b)
                .map(|(s, t)| Formula::neq(s.clone(), t.clone()))
                .collect(),
        )
    }

    /// Pairwise distinctness of a list of tuples.
    pub fn pairwise_distinct(tuples: &[Vec<Term>]) -> Formula {
        let mut parts = Vec::new();
        for i in 0..tuples.len() {
            for j in i + 1..tuples.len() {
                parts.push(Formula::tuple_neq(&tuples[i], &tuples[j]));
            }
        }
        Formula::and(parts)
    }

    pub fn is_quantifier_free(&self) -> bool {
        match self {
            Formula::True | Formula::False | Formula::Atom(..) | Formula::Eq(..) => true,
            Formula::Not(f) => f.is_quantifier_free(),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().all(Formula::is_quantifier_free),
            Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.is_quantifier_free() && b.is_quantifier_free()
            }
            Formula::Exists(..) | Formula::Forall(..) | Formula::Count(..) => false,
        }
    }

    pub fn has_counting(&self) -> bool {
        match self {
            Formula::True | Formula::False | Formula::Atom(..) | Formula::Eq(..) => false,
            Formula::Not(f) | Formula::Exists(_, f) | Formula::Forall(_, f) => f.has_counting(),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().any(Formula::has_counting),
            Formula::Implies(a, b) | Formula::Iff(a, b) => a.has_counting() || b.has_counting(),
            Formula::Count(..) => true,
        }
    }

    /// Maximum nesting depth of quantifier blocks.
    pub fn quantifier_depth(&self) -> usize {
        match self {
            Formula::True | Formula::False | Formula::Atom(..) | Formula::Eq(..) => 0,
            Formula::Not(f) => f.quantifier_depth(),
            Formula::And(fs) | Formula::Or(fs) => {
                fs.iter().map(Formula::quantifier_depth).max().unwrap_or(0)
            }
            Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.quantifier_depth().max(b.quantifier_depth())
            }
            Formula::Exists(_, f) | Formula::Forall(_, f) | Formula::Count(_, _, _, f) => {
                1 + f.quantifier_depth()
            }
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<Var>, out: &mut BTreeSet<Var>) {
        let mut term = |t: &Term, bound: &Vec<Var>| {
            if let Term::Var(v) = t {
                if !bound.contains(v) {
                    out.insert(v.clone());
                }
            }
        };
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom(_, args) => args.iter().for_each(|t| term(t, bound)),
            Formula::Eq(a, b) => {
                term(a, bound);
                term(b, bound);
            }
            Formula::Not(f) => f.collect_free(bound, out),
            Formula::And(fs) | Formula::Or(fs) => {
                fs.iter().for_each(|f| f.collect_free(bound, out))
            }
            Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Formula::Exists(vs, f) | Formula::Forall(vs, f) | Formula::Count(_, _, vs, f) => {
                let depth = bound.len();
                bound.extend(vs.iter().cloned());
                f.collect_free(bound, out);
                bound.truncate(depth);
            }
        }
    }

    /// Every variable bound by some quantifier in the formula.
    pub fn bound_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| {
            if let Formula::Exists(vs, _) | Formula::Forall(vs, _) | Formula::Count(_, _, vs, _) =
                f
            {
                out.extend(vs.iter().cloned());
            }
        });
        out
    }

    /// Every variable symbol occurring anywhere, free or bound.
    pub fn all_vars(&self) -> BTreeSet<Var> {
        let mut out = self.bound_vars();
        self.visit(&mut |f| {
            let mut add = |t: &Term| {
                if let Term::Var(v) = t {
                    out.insert(v.clone());
                }
            };
            match f {
                Formula::Atom(_, args) => args.iter().for_each(&mut add),
                Formula::Eq(a, b) => {
                    add(a);
                    add(b);
                }
                _ => {}
            }
        });
        out
    }

    /// Pre-order traversal of all subformulas.
    pub fn visit(&self, f: &mut impl FnMut(&Formula)) {
        f(self);
        match self {
            Formula::True | Formula::False | Formula::Atom(..) | Formula::Eq(..) => {}
            Formula::Not(g) | Formula::Exists(_, g) | Formula::Forall(_, g) => g.visit(f),
            Formula::Count(_, _, _, g) => g.visit(f),
            Formula::And(gs) | Formula::Or(gs) => gs.iter().for_each(|g| g.visit(f)),
            Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.visit(f);
                b.visit(f);
            }
        }
    }

    /// Relation symbols used, with the number of arguments of each use.
    pub fn relations(&self) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        self.visit(&mut |f| {
            if let Formula::Atom(r, args) = f {
                out.insert(r.clone(), args.len());
            }
        });
        out
    }

    pub fn constants(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| {
            let mut add = |t: &Term| {
                if let Term::Const(c) = t {
                    out.insert(c.clone());
                }
            };
            match f {
                Formula::Atom(_, args) => args.iter().for_each(&mut add),
                Formula::Eq(a, b) => {
                    add(a);
                    add(b);
                }
                _ => {}
            }
        });
        out
    }

    /// Top-level conjuncts, flattening nested conjunctions.
    pub fn conjuncts(&self) -> Vec<&Formula> {
        let mut out = Vec::new();
        fn go<'a>(f: &'a Formula, out: &mut Vec<&'a Formula>) {
            match f {
                Formula::And(fs) => fs.iter().for_each(|g| go(g, out)),
                Formula::True => {}
                _ => out.push(f),
            }
        }
        go(self, &mut out);
        out
    }
}

/// An ordered, duplicate-free tuple of variables.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct VarTuple(Vec<Var>);

impl VarTuple {
    pub fn new(vars: Vec<Var>) -> Result<Self, SyntaxError> {
        let mut seen = BTreeSet::new();
        for v in &vars {
            if !seen.insert(v.clone()) {
                return Err(SyntaxError::DuplicateVariable(v.clone()));
            }
        }
        Ok(VarTuple(vars))
    }

    /// Parses a whitespace separated list such as `"x y z"`.
    pub fn parse(text: &str) -> Result<Self, SyntaxError> {
        let vars = text
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .map(|s| {
                if is_variable_name(s) {
                    Ok(Var::from(s))
                } else {
                    Err(SyntaxError::InvalidVariable(s.to_string()))
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        VarTuple::new(vars)
    }

    pub fn empty() -> Self {
        VarTuple(Vec::new())
    }

    pub fn vars(&self) -> &[Var] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn range(&self) -> BTreeSet<Var> {
        self.0.iter().cloned().collect()
    }

    pub fn contains(&self, v: &Var) -> bool {
        self.0.contains(v)
    }

    pub fn terms(&self) -> Vec<Term> {
        self.0.iter().map(Term::from).collect()
    }

    pub fn into_vec(self) -> Vec<Var> {
        self.0
    }
}

impl fmt::Display for VarTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.0.iter().map(Var::as_str).collect();
        write!(f, "({})", names.join(","))
    }
}

impl From<Vec<Var>> for VarTuple {
    /// Panics on duplicates; use [`VarTuple::new`] for untrusted input.
    fn from(vars: Vec<Var>) -> Self {
        VarTuple::new(vars).expect("duplicate variable in tuple")
    }
}

/// Relation symbols with arities plus constant names.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Signature {
    relations: BTreeMap<String, usize>,
    constants: BTreeSet<String>,
}

impl Signature {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_relation(mut self, name: &str, arity: usize) -> Result<Self, SyntaxError> {
        self.add_relation(name, arity)?;
        Ok(self)
    }

    pub fn with_constant(mut self, name: &str) -> Result<Self, SyntaxError> {
        self.add_constant(name)?;
        Ok(self)
    }

    pub fn add_relation(&mut self, name: &str, arity: usize) -> Result<(), SyntaxError> {
        if !is_identifier(name) {
            return Err(SyntaxError::InvalidSymbol(name.to_string()));
        }
        if arity == 0 {
            return Err(SyntaxError::ZeroArity(name.to_string()));
        }
        if self.relations.contains_key(name) || self.constants.contains(name) {
            return Err(SyntaxError::DuplicateSymbol(name.to_string()));
        }
        self.relations.insert(name.to_string(), arity);
        Ok(())
    }

    pub fn add_constant(&mut self, name: &str) -> Result<(), SyntaxError> {
        if !is_identifier(name) {
            return Err(SyntaxError::InvalidSymbol(name.to_string()));
        }
        if self.relations.contains_key(name) || self.constants.contains(name) {
            return Err(SyntaxError::DuplicateSymbol(name.to_string()));
        }
        self.constants.insert(name.to_string());
        Ok(())
    }

    pub fn arity(&self, relation: &str) -> Option<usize> {
        self.relations.get(relation).copied()
    }

    pub fn has_constant(&self, name: &str) -> bool {
        self.constants.contains(name)
    }

    pub fn relations(&self) -> impl Iterator<Item = (&str, usize)> {
        self.relations.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn constants(&self) -> impl Iterator<Item = &str> {
        self.constants.iter().map(String::as_str)
    }

    /// Parses `"E/2,U/1,@c0"`: relations as `NAME/ARITY`, constants as `@NAME`.
    pub fn parse(text: &str) -> Result<Self, SyntaxError> {
        let mut sig = Signature::new();
        for item in text
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
        {
            if let Some(name) = item.strip_prefix('@') {
                sig.add_constant(name)?;
            } else if let Some((name, arity)) = item.split_once('/') {
                let arity = arity
                    .parse()
                    .map_err(|_| SyntaxError::InvalidSymbol(item.to_string()))?;
                sig.add_relation(name, arity)?;
            } else {
                return Err(SyntaxError::InvalidSymbol(item.to_string()));
            }
        }
        Ok(sig)
    }

    /// Checks every atom and constant against this signature.
    pub fn check(&self, f: &Formula) -> Result<(), SyntaxError> {
        let mut err = None;
        f.visit(&mut |g| {
            if err.is_some() {
                return;
            }
            if let Formula::Atom(r, args) = g {
                match self.arity(r) {
                    None => err = Some(SyntaxError::UnknownRelation(r.clone())),
                    Some(a) if a != args.len() => {
                        err = Some(SyntaxError::ArityMismatch {
                            relation: r.clone(),
                            expected: a,
                            found: args.len(),
                        })
                    }
                    _ => {}
                }
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
        for c in f.constants() {
            if !self.has_constant(&c) {
                return Err(SyntaxError::UnknownConstant(c));
            }
        }
        Ok(())
    }
}
