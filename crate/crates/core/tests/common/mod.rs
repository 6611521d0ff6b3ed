//! Test-only oracles and generators. The evaluator here is a direct
//! recursive reading of the satisfaction relation, deliberately sharing no
//! code with the library's compiled evaluator.
#![allow(dead_code)]

use std::collections::BTreeMap;

use mutalg::corpus::{generate, FamilyKind, FamilySpec};
use mutalg::semantics::FiniteStructure;
use mutalg::syntax::{CountMode, Formula, Signature, Term, Var};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Proptest settings without the on-disk regression file.
pub fn cases(n: u32) -> proptest::test_runner::Config {
    proptest::test_runner::Config { cases: n, failure_persistence: None, ..Default::default() }
}

pub type Env = BTreeMap<Var, usize>;

fn term_value(m: &FiniteStructure, t: &Term, env: &Env) -> usize {
    match t {
        Term::Var(v) => *env.get(v).unwrap_or_else(|| panic!("unbound {v}")),
        Term::Elem(k) => *k,
        Term::Const(c) => m.constant(c).unwrap_or_else(|| panic!("unknown constant {c}")),
    }
}

/// Calls `f` with `env` extended by every assignment of `vars`.
fn for_each_extension(n: usize, vars: &[Var], env: &mut Env, f: &mut dyn FnMut(&mut Env) -> bool) -> bool {
    match vars.split_first() {
        None => f(env),
        Some((v, rest)) => {
            let saved = env.get(v).copied();
            let mut go_on = true;
            for e in 0..n {
                env.insert(v.clone(), e);
                if !for_each_extension(n, rest, env, f) {
                    go_on = false;
                    break;
                }
            }
            match saved {
                Some(s) => env.insert(v.clone(), s),
                None => env.remove(v),
            };
            go_on
        }
    }
}

pub fn naive_count(m: &FiniteStructure, vars: &[Var], body: &Formula, env: &Env) -> usize {
    let mut env = env.clone();
    let mut count = 0;
    for_each_extension(m.universe(), vars, &mut env, &mut |e| {
        if naive_eval(m, body, e) {
            count += 1;
        }
        true
    });
    count
}

pub fn naive_eval(m: &FiniteStructure, f: &Formula, env: &Env) -> bool {
    match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Atom(r, args) => {
            let tuple: Vec<usize> = args.iter().map(|t| term_value(m, t, env)).collect();
            m.relation(r).map_or(false, |rel| rel.contains(&tuple))
        }
        Formula::Eq(a, b) => term_value(m, a, env) == term_value(m, b, env),
        Formula::Not(g) => !naive_eval(m, g, env),
        Formula::And(gs) => gs.iter().all(|g| naive_eval(m, g, env)),
        Formula::Or(gs) => gs.iter().any(|g| naive_eval(m, g, env)),
        Formula::Implies(a, b) => !naive_eval(m, a, env) || naive_eval(m, b, env),
        Formula::Iff(a, b) => naive_eval(m, a, env) == naive_eval(m, b, env),
        Formula::Exists(vs, g) => {
            let mut env = env.clone();
            let mut found = false;
            for_each_extension(m.universe(), vs, &mut env, &mut |e| {
                found = naive_eval(m, g, e);
                !found
            });
            found
        }
        Formula::Forall(vs, g) => {
            let mut env = env.clone();
            let mut all = true;
            for_each_extension(m.universe(), vs, &mut env, &mut |e| {
                all = naive_eval(m, g, e);
                all
            });
            all
        }
        Formula::Count(mode, r, vs, g) => {
            let count = naive_count(m, vs, g, env);
            match mode {
                CountMode::AtLeast => count >= *r,
                CountMode::AtMost => count <= *r,
                CountMode::Exactly => count == *r,
            }
        }
    }
}

/// Every assignment of `vars` over a universe of size `n`.
pub fn assignments(n: usize, vars: &[Var]) -> Vec<Env> {
    let mut out = Vec::new();
    for_each_extension(n, vars, &mut Env::new(), &mut |e| {
        out.push(e.clone());
        true
    });
    out
}

pub fn naive_equivalent(m: &FiniteStructure, f: &Formula, g: &Formula) -> bool {
    let vars: Vec<Var> = f.free_vars().union(&g.free_vars()).cloned().collect();
    assignments(m.universe(), &vars).iter().all(|e| naive_eval(m, f, e) == naive_eval(m, g, e))
}

/// Maximum, over proper splits of `z` into `x` and `y` and over values of
/// `y`, of the number of `x` tuples satisfying `f`. Splits are enumerated as
/// bit masks; zero when `z` has fewer than two variables.
pub fn naive_ma_bound(m: &FiniteStructure, f: &Formula, z: &[Var]) -> usize {
    let k = z.len();
    if k < 2 {
        return 0;
    }
    let mut best = 0;
    for mask in 1..(1u32 << k) - 1 {
        let (xs, ys): (Vec<(usize, &Var)>, Vec<(usize, &Var)>) =
            z.iter().enumerate().partition(|(i, _)| mask & (1 << i) != 0);
        let xs: Vec<Var> = xs.into_iter().map(|(_, v)| v.clone()).collect();
        let ys: Vec<Var> = ys.into_iter().map(|(_, v)| v.clone()).collect();
        for env in assignments(m.universe(), &ys) {
            best = best.max(naive_count(m, &xs, f, &env));
        }
    }
    best
}

/// Applies the permutation `pi` of the universe to every relation and constant.
pub fn permute_structure(m: &FiniteStructure, pi: &[usize]) -> FiniteStructure {
    let mut out = FiniteStructure::new(m.universe()).named(m.name());
    for (name, rel) in m.relations() {
        let tuples: Vec<Vec<usize>> = rel.tuples().iter().map(|t| t.iter().map(|&e| pi[e]).collect()).collect();
        out = out.with_relation(name, rel.arity(), tuples).unwrap();
    }
    for (c, v) in m.constants() {
        out = out.with_constant(c, pi[v]).unwrap();
    }
    out
}

pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, density: f64) -> FiniteStructure {
    let mut edges = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if rng.gen_bool(density) {
                edges.push(vec![a, b]);
            }
        }
    }
    let colored: Vec<Vec<usize>> = (0..n).filter(|_| rng.gen_bool(0.5)).map(|a| vec![a]).collect();
    FiniteStructure::new(n)
        .named(format!("random-{n}"))
        .with_relation("E", 2, edges)
        .unwrap()
        .with_relation("U", 1, colored)
        .unwrap()
        .with_constant("c", 0)
        .unwrap()
}

pub fn family(kind: FamilyKind, lo: usize, hi: usize) -> Vec<FiniteStructure> {
    generate(&FamilySpec::range(kind, lo, hi)).unwrap()
}

pub fn cycles(lo: usize, hi: usize) -> Vec<FiniteStructure> {
    family(FamilyKind::UndirectedCycle, lo, hi)
}

pub fn graph_sig() -> Signature {
    Signature::parse("E/2,U/1,@c").unwrap()
}

/// Settings for [`FormulaGen`].
#[derive(Clone, Debug)]
pub struct GenConfig {
    /// Relation symbols with arities.
    pub relations: Vec<(String, usize)>,
    pub constants: Vec<String>,
    /// Element literals `#0..#k` may appear when nonzero.
    pub elements: usize,
    pub vars: Vec<Var>,
    pub max_quantifier_depth: usize,
    pub max_count: usize,
    /// Bound variables allowed along one path from the root.
    pub max_bound_along_path: usize,
    pub allow_counting: bool,
}

impl GenConfig {
    pub fn graph() -> Self {
        GenConfig {
            relations: vec![("E".into(), 2), ("U".into(), 1)],
            constants: vec!["c".into()],
            elements: 0,
            vars: ["x", "y", "z", "w"].iter().map(|v| Var::from(*v)).collect(),
            max_quantifier_depth: 3,
            max_count: 3,
            max_bound_along_path: 4,
            allow_counting: true,
        }
    }
}

/// Seeded random formulas.
pub struct FormulaGen {
    pub rng: ChaCha8Rng,
    pub cfg: GenConfig,
}

impl FormulaGen {
    pub fn new(seed: u64, cfg: GenConfig) -> Self {
        FormulaGen { rng: ChaCha8Rng::seed_from_u64(seed), cfg }
    }

    pub fn var(&mut self) -> Var {
        self.cfg.vars.choose(&mut self.rng).unwrap().clone()
    }

    pub fn term(&mut self) -> Term {
        let roll = self.rng.gen_range(0..10);
        if roll == 0 && !self.cfg.constants.is_empty() {
            Term::Const(self.cfg.constants.choose(&mut self.rng).unwrap().clone())
        } else if roll == 1 && self.cfg.elements > 0 {
            Term::Elem(self.rng.gen_range(0..self.cfg.elements))
        } else {
            Term::Var(self.var())
        }
    }

    pub fn literal(&mut self) -> Formula {
        let atom = if self.rng.gen_bool(0.3) || self.cfg.relations.is_empty() {
            Formula::Eq(self.term(), self.term())
        } else {
            let (r, k) = self.cfg.relations.choose(&mut self.rng).unwrap().clone();
            Formula::Atom(r, (0..k).map(|_| self.term()).collect())
        };
        if self.rng.gen_bool(0.3) {
            Formula::not(atom)
        } else {
            atom
        }
    }

    fn block(&mut self, room: usize) -> Vec<Var> {
        let size = if room >= 2 && self.rng.gen_bool(0.2) { 2 } else { 1 };
        let mut pool = self.cfg.vars.clone();
        pool.shuffle(&mut self.rng);
        pool.truncate(size);
        pool
    }

    pub fn formula(&mut self) -> Formula {
        let (d, b) = (self.cfg.max_quantifier_depth, self.cfg.max_bound_along_path);
        self.go(d, b, 4)
    }

    fn go(&mut self, qdepth: usize, room: usize, size: usize) -> Formula {
        let leaf = size == 0 || self.rng.gen_bool(0.25);
        if leaf {
            return match self.rng.gen_range(0..20) {
                0 => Formula::True,
                1 => Formula::False,
                _ => self.literal(),
            };
        }
        let quantify = qdepth > 0 && room > 0;
        let choice = self.rng.gen_range(0..if quantify { 9 } else { 5 });
        match choice {
            0 => Formula::not(self.go(qdepth, room, size - 1)),
            1 | 2 => {
                let k = self.rng.gen_range(2..=3);
                let parts = (0..k).map(|_| self.go(qdepth, room, size - 1)).collect();
                if choice == 1 {
                    Formula::And(parts)
                } else {
                    Formula::Or(parts)
                }
            }
            3 => Formula::implies(self.go(qdepth, room, size - 1), self.go(qdepth, room, size - 1)),
            4 => Formula::iff(self.go(qdepth, room, size - 1), self.go(qdepth, room, size - 1)),
            5 | 6 => {
                let vs = self.block(room);
                let body = self.go(qdepth - 1, room - vs.len(), size - 1);
                if choice == 5 {
                    Formula::Exists(vs, Box::new(body))
                } else {
                    Formula::Forall(vs, Box::new(body))
                }
            }
            _ => {
                let vs = self.block(if self.cfg.allow_counting { room } else { 0 });
                let body = self.go(qdepth - 1, room - vs.len(), size - 1);
                if !self.cfg.allow_counting {
                    return Formula::Exists(vs, Box::new(body));
                }
                let mode = *[CountMode::AtLeast, CountMode::AtMost, CountMode::Exactly].choose(&mut self.rng).unwrap();
                // large counts over pairs make the expansion quadratic in size
                let cap = if vs.len() > 1 { 1 } else { self.cfg.max_count };
                Formula::Count(mode, self.rng.gen_range(0..=cap), vs, Box::new(body))
            }
        }
    }

    /// A conjunction of `k` literals over the given variables.
    pub fn conjunction(&mut self, k: usize) -> Formula {
        Formula::and((0..k).map(|_| self.literal()).collect())
    }
}

fn v(name: &str) -> Var {
    Var::from(name)
}

fn edge(a: &Var, b: &Var, rng: &mut ChaCha8Rng) -> Formula {
    let (a, b) = if rng.gen_bool(0.5) { (a, b) } else { (b, a) };
    Formula::atom("E", vec![Term::from(a), Term::from(b)])
}

/// Constraints `R_j(x1, y, z_j)` for witness avoidance over `E`. Every
/// witness variable of a constraint is tied by an edge or an equality to `x1`,
/// `y` or an earlier witness, so each constraint has boundedly many
/// solutions in its witnesses.
pub fn witness_instance(rng: &mut ChaCha8Rng) -> (Vec<mutalg::rewrite::WitnessConstraint>, mutalg::syntax::VarTuple) {
    use mutalg::syntax::VarTuple;
    let all = [v("z1"), v("z2"), v("z3")];
    let zs = &all[..rng.gen_range(1..=3)];
    let anchors = [v("x1"), v("y")];
    let mut constraints = Vec::new();
    for _ in 0..rng.gen_range(1..=3) {
        let mut chosen: Vec<Var> = zs.iter().filter(|_| rng.gen_bool(0.5)).cloned().collect();
        if chosen.is_empty() {
            chosen.push(zs.choose(rng).unwrap().clone());
        }
        chosen.truncate(2);
        let mut linked: Vec<Var> = anchors.to_vec();
        let mut parts = Vec::new();
        for z in &chosen {
            let partner = linked.choose(rng).unwrap().clone();
            parts.push(if rng.gen_bool(0.2) { Formula::eq(z.clone(), partner) } else { edge(z, &partner, rng) });
            linked.push(z.clone());
        }
        match rng.gen_range(0..4) {
            0 => parts.push(Formula::not(Formula::eq(v("x1"), v("y")))),
            1 => parts.push(edge(&v("x1"), &v("y"), rng)),
            _ => {}
        }
        let formula = Formula::and(parts);
        let x = VarTuple::from(if formula.free_vars().contains(&v("x1")) { vec![v("x1")] } else { Vec::new() });
        constraints.push(mutalg::rewrite::WitnessConstraint { formula, x, z: VarTuple::from(chosen) });
    }
    (constraints, VarTuple::from(zs.to_vec()))
}

/// A conjunction of literals, each mentioning `y`, over `x1..x3`.
pub fn messy_instance(rng: &mut ChaCha8Rng) -> (Formula, mutalg::syntax::VarTuple, Var) {
    use mutalg::syntax::VarTuple;
    let xs = [v("x1"), v("x2"), v("x3")];
    let y = v("y");
    let k = rng.gen_range(1..=4);
    let mut literals = Vec::new();
    for _ in 0..k {
        let a = xs.choose(rng).unwrap().clone();
        let b = xs.iter().filter(|x| **x != a).collect::<Vec<_>>().choose(rng).copied().unwrap().clone();
        // compound literals only under negation, so conjunct splitting keeps them whole
        let negated = rng.gen_bool(0.5);
        let lit = match rng.gen_range(0..if negated { 5 } else { 3 }) {
            0 | 1 => edge(&a, &y, rng),
            2 => Formula::eq(a.clone(), y.clone()),
            3 => Formula::and(vec![edge(&a, &y, rng), edge(&a, &b, rng)]),
            _ => Formula::and(vec![edge(&a, &y, rng), edge(&b, &y, rng), Formula::not(Formula::eq(a.clone(), b.clone()))]),
        };
        literals.push(if negated { Formula::not(lit) } else { lit });
    }
    let psi = Formula::And(literals.clone());
    let psi = if literals.len() == 1 { literals.pop().unwrap() } else { psi };
    let used: Vec<Var> = xs.iter().filter(|x| psi.free_vars().contains(*x)).cloned().collect();
    (psi, VarTuple::from(used), y)
}

/// `E x (R(x, y) & S(x, y, z))` over `E`, with `R` a tree of edges reaching
/// every variable from `y`, and `S` an equality diagram.
pub fn preferred_instance(rng: &mut ChaCha8Rng, two_y: bool) -> Formula {
    // two x and two y variables make theta_m quantify over dozens of variables
    let xs: Vec<Var> = if two_y || rng.gen_bool(0.5) { vec![v("x1")] } else { vec![v("x1"), v("x2")] };
    let mut linked = vec![v("y")];
    let mut kernel = Vec::new();
    for x in &xs {
        let partner = linked.choose(rng).unwrap().clone();
        kernel.push(edge(x, &partner, rng));
        linked.push(x.clone());
    }
    if two_y {
        let partner = xs.choose(rng).unwrap().clone();
        kernel.push(edge(&v("y2"), &partner, rng));
    }
    let z = v("z");
    let x1 = xs[0].clone();
    let xl = xs.last().unwrap().clone();
    let diagram = match rng.gen_range(0..6) {
        0 => Formula::eq(x1, z),
        1 => Formula::not(Formula::eq(x1, z)),
        2 => Formula::eq(xl, z),
        3 => Formula::or(vec![Formula::eq(x1.clone(), z.clone()), Formula::eq(xl, v("y"))]),
        4 => Formula::and(vec![Formula::not(Formula::eq(x1, z.clone())), Formula::not(Formula::eq(v("y"), z))]),
        _ => Formula::not(Formula::eq(xl, z)),
    };
    kernel.push(diagram);
    Formula::exists(xs, Formula::and(kernel))
}

/// One-variable formulas in `y` over pure sets with constants `c0`, `c1`.
pub const MINIMAL_POOL: [&str; 30] = [
    "y = @c0",
    "y = @c0 | y = @c1",
    "!(y = @c0)",
    "!(y = @c0) & !(y = @c1)",
    "y = @c0 & y = @c1",
    "y = y",
    "!(y = y)",
    "E x . x = y",
    "E[=1] x . x = y",
    "E[=2] x . x = y",
    "E x . !(x = y) & !(x = @c0)",
    "A x . x = y",
    "A x . x = y | x = @c0",
    "E[>=2] x . !(x = y)",
    "E[<=1] x . x = y & !(x = @c1)",
    "E[=1] x . x = y | x = @c0",
    "E[=2] x . x = y | x = @c0",
    "y = #2",
    "y = #2 | y = @c1",
    "!(y = #3)",
    "E x . x = @c0 & x = y",
    "A x . !(x = @c0) | x = y",
    "E[>=3] x . !(x = y)",
    "E[=1] x . !(x = y) & !(x = @c0) & !(x = @c1)",
    "(y = @c0) <-> (y = @c1)",
    "y = @c0 -> y = @c1",
    "E x z . !(x = z) & !(x = y) & !(z = y)",
    "E[<=2] x . !(x = y)",
    "!(E x . x = y & x = @c1)",
    "E[=1] x . x = @c0 & !(x = y)",
];

/// Largest count of `f`-solutions in `xs` over every assignment of its other
/// free variables, across `family`.
pub fn naive_max_count(family: &[FiniteStructure], f: &Formula, xs: &[Var]) -> usize {
    let rest: Vec<Var> = f.free_vars().into_iter().filter(|w| !xs.contains(w)).collect();
    family
        .iter()
        .flat_map(|m| assignments(m.universe(), &rest).into_iter().map(move |env| naive_count(m, xs, f, &env)))
        .max()
        .unwrap_or(0)
}
