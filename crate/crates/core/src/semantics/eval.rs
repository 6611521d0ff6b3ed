//! Compiled brute-force evaluation.
//!
//! A formula is compiled once per structure: variables become slots (every
//! binding occurrence gets its own slot, so shadowing disappears), constants
//! are resolved to elements, and each quantifier block gets a search plan.
//! The plan binds block variables one at a time and checks every conjunct of
//! the body as soon as its variables are bound, so conjunctive bodies prune
//! early. Results of quantifier blocks are memoized per assignment of their
//! free slots.

use std::collections::BTreeMap;

use super::structure::{FiniteStructure, Relation};
use super::EvalError;
use crate::syntax::{CountMode, Formula, Term, Var};

const MEMO_LIMIT: usize = 1 << 20;

#[derive(Clone, Copy, Debug)]
enum Arg {
    Slot(usize),
    Elem(usize),
}

#[derive(Clone, Copy, Debug)]
struct Lit {
    node: usize,
    want: bool,
}

#[derive(Clone, Copy, Debug)]
enum BlockKind {
    Exists,
    Forall,
    Count(CountMode, usize),
}

#[derive(Debug)]
struct Block {
    kind: BlockKind,
    order: Vec<usize>,
    pre: Vec<Lit>,
    checks: Vec<Vec<Lit>>,
}

#[derive(Debug)]
enum Kind<'m> {
    Const(bool),
    Atom(&'m Relation, Vec<Arg>),
    Eq(Arg, Arg),
    Not(usize),
    And(Vec<usize>),
    Or(Vec<usize>),
    Implies(usize, usize),
    Iff(usize, usize),
    Block(Block),
}

#[derive(Debug)]
struct Node<'m> {
    kind: Kind<'m>,
    free: Vec<usize>,
}

struct Compiler<'m> {
    structure: &'m FiniteStructure,
    nodes: Vec<Node<'m>>,
    slots: usize,
}

fn merge_free(parts: &[&[usize]]) -> Vec<usize> {
    let mut out: Vec<usize> = parts.iter().flat_map(|p| p.iter().copied()).collect();
    out.sort_unstable();
    out.dedup();
    out
}

impl<'m> Compiler<'m> {
    fn push(&mut self, kind: Kind<'m>, free: Vec<usize>) -> usize {
        self.nodes.push(Node { kind, free });
        self.nodes.len() - 1
    }

    fn arg(&self, t: &Term, scope: &BTreeMap<Var, usize>) -> Result<Arg, EvalError> {
        match t {
            Term::Var(v) => scope
                .get(v)
                .map(|&s| Arg::Slot(s))
                .ok_or_else(|| EvalError::UnboundVariable(v.clone())),
            Term::Elem(e) => {
                if *e < self.structure.universe() {
                    Ok(Arg::Elem(*e))
                } else {
                    Err(EvalError::ElementOutOfRange(*e))
                }
            }
            Term::Const(c) => self
                .structure
                .constant(c)
                .map(Arg::Elem)
                .ok_or_else(|| EvalError::UnknownConstant(c.clone())),
        }
    }

    fn free_of(&self, id: usize) -> &[usize] {
        &self.nodes[id].free
    }

    fn compile(&mut self, f: &Formula, scope: &mut BTreeMap<Var, usize>) -> Result<usize, EvalError> {
        let slot_of = |a: &Arg| match a {
            Arg::Slot(s) => Some(*s),
            Arg::Elem(_) => None,
        };
        Ok(match f {
            Formula::True => self.push(Kind::Const(true), vec![]),
            Formula::False => self.push(Kind::Const(false), vec![]),
            Formula::Atom(r, terms) => {
                let rel = self
                    .structure
                    .relation(r)
                    .ok_or_else(|| EvalError::UnknownRelation(r.clone()))?;
                if rel.arity() != terms.len() {
                    return Err(EvalError::ArityMismatch {
                        relation: r.clone(),
                        expected: rel.arity(),
                        found: terms.len(),
                    });
                }
                let args = terms.iter().map(|t| self.arg(t, scope)).collect::<Result<Vec<_>, _>>()?;
                let mut free: Vec<usize> = args.iter().filter_map(slot_of).collect();
                free.sort_unstable();
                free.dedup();
                self.push(Kind::Atom(rel, args), free)
            }
            Formula::Eq(a, b) => {
                let (a, b) = (self.arg(a, scope)?, self.arg(b, scope)?);
                let mut free: Vec<usize> = [a, b].iter().filter_map(slot_of).collect();
                free.sort_unstable();
                free.dedup();
                self.push(Kind::Eq(a, b), free)
            }
            Formula::Not(g) => {
                let c = self.compile(g, scope)?;
                let free = self.free_of(c).to_vec();
                self.push(Kind::Not(c), free)
            }
            Formula::And(gs) | Formula::Or(gs) => {
                let ids = gs.iter().map(|g| self.compile(g, scope)).collect::<Result<Vec<_>, _>>()?;
                let frees: Vec<&[usize]> = ids.iter().map(|&i| self.free_of(i)).collect();
                let free = merge_free(&frees);
                let kind = if matches!(f, Formula::And(_)) { Kind::And(ids) } else { Kind::Or(ids) };
                self.push(kind, free)
            }
            Formula::Implies(a, b) | Formula::Iff(a, b) => {
                let (a, b) = (self.compile(a, scope)?, self.compile(b, scope)?);
                let free = merge_free(&[self.free_of(a), self.free_of(b)]);
                let kind = if matches!(f, Formula::Implies(..)) { Kind::Implies(a, b) } else { Kind::Iff(a, b) };
                self.push(kind, free)
            }
            Formula::Exists(vs, g) | Formula::Forall(vs, g) | Formula::Count(_, _, vs, g) => {
                let kind = match f {
                    Formula::Exists(..) => BlockKind::Exists,
                    Formula::Forall(..) => BlockKind::Forall,
                    Formula::Count(mode, r, ..) => BlockKind::Count(*mode, *r),
                    _ => unreachable!(),
                };
                let slots: Vec<usize> = (0..vs.len()).map(|i| self.slots + i).collect();
                self.slots += vs.len();
                let saved: Vec<Option<usize>> =
                    vs.iter().zip(&slots).map(|(v, &s)| scope.insert(v.clone(), s)).collect();
                let body = self.compile(g, scope);
                for (v, old) in vs.iter().zip(saved) {
                    match old {
                        Some(s) => scope.insert(v.clone(), s),
                        None => scope.remove(v),
                    };
                }
                let body = body?;
                let free: Vec<usize> =
                    self.free_of(body).iter().copied().filter(|s| !slots.contains(s)).collect();
                let block = self.plan(kind, &slots, body);
                self.push(Kind::Block(block), free)
            }
        })
    }

    fn literals(&self, id: usize, want: bool, out: &mut Vec<Lit>) {
        match (&self.nodes[id].kind, want) {
            (Kind::And(cs), true) | (Kind::Or(cs), false) => {
                cs.iter().for_each(|&c| self.literals(c, want, out))
            }
            (Kind::Not(c), _) => self.literals(*c, !want, out),
            (Kind::Const(b), _) if *b == want => {}
            _ => out.push(Lit { node: id, want }),
        }
    }

    fn plan(&self, kind: BlockKind, slots: &[usize], body: usize) -> Block {
        let mut lits = Vec::new();
        // a universal block searches for a counterexample
        self.literals(body, !matches!(kind, BlockKind::Forall), &mut lits);
        let deps: Vec<Vec<usize>> = lits
            .iter()
            .map(|l| self.free_of(l.node).iter().copied().filter(|s| slots.contains(s)).collect())
            .collect();
        let mut scheduled = vec![false; lits.len()];
        let mut pre = Vec::new();
        for (i, d) in deps.iter().enumerate() {
            if d.is_empty() {
                pre.push(lits[i]);
                scheduled[i] = true;
            }
        }
        let mut bound: Vec<usize> = Vec::new();
        let mut order = Vec::new();
        let mut checks = Vec::new();
        while order.len() < slots.len() {
            let completes = |s: usize, bound: &[usize]| {
                (0..lits.len())
                    .filter(|&i| {
                        !scheduled[i] && deps[i].iter().all(|d| *d == s || bound.contains(d))
                    })
                    .count()
            };
            let next = slots
                .iter()
                .copied()
                .filter(|s| !bound.contains(s))
                .max_by_key(|&s| (completes(s, &bound), std::cmp::Reverse(s)))
                .expect("unbound slot remains");
            bound.push(next);
            order.push(next);
            let mut level = Vec::new();
            for i in 0..lits.len() {
                if !scheduled[i] && deps[i].iter().all(|d| bound.contains(d)) {
                    scheduled[i] = true;
                    level.push(lits[i]);
                }
            }
            checks.push(level);
        }
        Block { kind, order, pre, checks }
    }
}

/// A formula compiled against one structure, with a fixed tuple of input
/// variables that must cover its free variables.
#[derive(Debug)]
pub struct Compiled<'m> {
    n: usize,
    nodes: Vec<Node<'m>>,
    root: usize,
    slots: usize,
    inputs: Vec<Var>,
}

impl<'m> Compiled<'m> {
    pub fn new(structure: &'m FiniteStructure, f: &Formula, inputs: &[Var]) -> Result<Self, EvalError> {
        let mut scope = BTreeMap::new();
        for (i, v) in inputs.iter().enumerate() {
            if scope.insert(v.clone(), i).is_some() {
                return Err(EvalError::DuplicateVariable(v.clone()));
            }
        }
        let mut c = Compiler { structure, nodes: Vec::new(), slots: inputs.len() };
        let root = c.compile(f, &mut scope)?;
        Ok(Compiled { n: structure.universe(), nodes: c.nodes, root, slots: c.slots, inputs: inputs.to_vec() })
    }

    pub fn inputs(&self) -> &[Var] {
        &self.inputs
    }

    pub fn universe(&self) -> usize {
        self.n
    }

    pub fn evaluator(&self) -> Evaluator<'_, 'm> {
        Evaluator { prog: self, env: vec![0; self.slots], memo: (0..self.nodes.len()).map(|_| None).collect() }
    }
}

/// Evaluation state: slot values and the memo tables. Reuse one evaluator
/// across calls on the same compiled formula to keep the memo warm.
pub struct Evaluator<'p, 'm> {
    prog: &'p Compiled<'m>,
    env: Vec<usize>,
    memo: Vec<Option<Vec<u8>>>,
}

impl<'p, 'm> Evaluator<'p, 'm> {
    /// Evaluates with `values[i]` assigned to the i-th input variable.
    pub fn eval(&mut self, values: &[usize]) -> bool {
        assert_eq!(values.len(), self.prog.inputs.len(), "wrong number of input values");
        debug_assert!(values.iter().all(|&v| v < self.prog.n));
        self.env[..values.len()].copy_from_slice(values);
        self.node(self.prog.root)
    }

    #[inline]
    fn arg(&self, a: Arg) -> usize {
        match a {
            Arg::Slot(s) => self.env[s],
            Arg::Elem(e) => e,
        }
    }

    fn node(&mut self, id: usize) -> bool {
        let prog = self.prog;
        match &prog.nodes[id].kind {
            Kind::Const(b) => *b,
            Kind::Atom(rel, args) => {
                let mut buf = [0usize; 8];
                if args.len() <= buf.len() {
                    for (i, a) in args.iter().enumerate() {
                        buf[i] = self.arg(*a);
                    }
                    rel.contains(&buf[..args.len()])
                } else {
                    let t: Vec<usize> = args.iter().map(|a| self.arg(*a)).collect();
                    rel.contains(&t)
                }
            }
            Kind::Eq(a, b) => self.arg(*a) == self.arg(*b),
            Kind::Not(c) => !self.node(*c),
            Kind::And(cs) => cs.iter().all(|&c| self.node(c)),
            Kind::Or(cs) => cs.iter().any(|&c| self.node(c)),
            Kind::Implies(a, b) => !self.node(*a) || self.node(*b),
            Kind::Iff(a, b) => self.node(*a) == self.node(*b),
            Kind::Block(block) => self.block(id, block),
        }
    }

    fn memo_key(&self, id: usize) -> Option<usize> {
        let free = &self.prog.nodes[id].free;
        let n = self.prog.n;
        let cells = n.checked_pow(free.len() as u32).filter(|&c| c <= MEMO_LIMIT)?;
        let _ = cells;
        Some(free.iter().fold(0, |acc, &s| acc * n + self.env[s]))
    }

    fn block(&mut self, id: usize, block: &'p Block) -> bool {
        let key = self.memo_key(id);
        if let (Some(k), Some(table)) = (key, &self.memo[id]) {
            match table[k] {
                1 => return false,
                2 => return true,
                _ => {}
            }
        }
        let result = self.run_block(block);
        if let Some(k) = key {
            let n = self.prog.n;
            let width = self.prog.nodes[id].free.len() as u32;
            let table = self.memo[id].get_or_insert_with(|| vec![0; n.pow(width)]);
            table[k] = if result { 2 } else { 1 };
        }
        result
    }

    fn run_block(&mut self, block: &'p Block) -> bool {
        let (limit, finish): (usize, fn(usize, &BlockKind) -> bool) = match block.kind {
            BlockKind::Exists => (1, |c, _| c > 0),
            BlockKind::Forall => (1, |c, _| c == 0),
            BlockKind::Count(CountMode::AtLeast, 0) => return true,
            BlockKind::Count(CountMode::AtLeast, r) => (r, |c, k| match k {
                BlockKind::Count(m, r) => m.holds(c, *r),
                _ => unreachable!(),
            }),
            BlockKind::Count(_, r) => (r + 1, |c, k| match k {
                BlockKind::Count(m, r) => m.holds(c, *r),
                _ => unreachable!(),
            }),
        };
        let mut count = 0;
        if block.pre.iter().all(|l| self.node(l.node) == l.want) {
            self.search(block, 0, limit, &mut count);
        }
        finish(count, &block.kind)
    }

    fn search(&mut self, block: &'p Block, level: usize, limit: usize, count: &mut usize) {
        if level == block.order.len() {
            *count += 1;
            return;
        }
        let slot = block.order[level];
        for v in 0..self.prog.n {
            self.env[slot] = v;
            if block.checks[level].iter().all(|l| self.node(l.node) == l.want) {
                self.search(block, level + 1, limit, count);
                if *count >= limit {
                    return;
                }
            }
        }
    }
}
