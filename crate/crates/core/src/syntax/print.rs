//! Pretty printer producing text that [`parse`](super::parse) reads back to
//! the same tree.
//!
//! Structural round-tripping holds for trees whose `And`/`Or` nodes have at
//! least two children; the printer renders the degenerate forms as `true`,
//! `false` or the lone child, which is what the smart constructors build.

use std::fmt::{self, Write};

use super::ast::{Formula, Term, Var};

const PREC_TOP: u8 = 0;
const PREC_IFF: u8 = 1;
const PREC_IMPLIES: u8 = 2;
const PREC_OR: u8 = 3;
const PREC_AND: u8 = 4;
const PREC_NOT: u8 = 5;
const PREC_ATOM: u8 = 6;

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => f.write_str(v.as_str()),
            Term::Elem(n) => write!(f, "#{n}"),
            Term::Const(c) => write!(f, "@{c}"),
        }
    }
}

fn prec(f: &Formula) -> u8 {
    match f {
        Formula::True | Formula::False | Formula::Atom(..) | Formula::Eq(..) => PREC_ATOM,
        Formula::Not(_) => PREC_NOT,
        Formula::And(fs) if fs.is_empty() => PREC_ATOM,
        Formula::Or(fs) if fs.is_empty() => PREC_ATOM,
        Formula::And(fs) | Formula::Or(fs) if fs.len() == 1 => prec(&fs[0]),
        Formula::And(_) => PREC_AND,
        Formula::Or(_) => PREC_OR,
        Formula::Implies(..) => PREC_IMPLIES,
        Formula::Iff(..) => PREC_IFF,
        // quantifier bodies extend right, so they are parenthesized anywhere
        // but the top of a body
        Formula::Exists(..) | Formula::Forall(..) | Formula::Count(..) => PREC_TOP,
    }
}

fn write_vars(out: &mut String, vars: &[Var]) {
    for v in vars {
        out.push(' ');
        out.push_str(v.as_str());
    }
}

fn write_child(out: &mut String, child: &Formula, parent: u8) {
    if prec(child) <= parent {
        out.push('(');
        write_formula(out, child);
        out.push(')');
    } else {
        write_formula(out, child);
    }
}

fn write_nary(out: &mut String, parts: &[Formula], op: &str, own: u8) {
    for (i, p) in parts.iter().enumerate() {
        if i > 0 {
            out.push_str(op);
        }
        write_child(out, p, own);
    }
}

fn write_formula(out: &mut String, f: &Formula) {
    match f {
        Formula::True => out.push_str("true"),
        Formula::False => out.push_str("false"),
        Formula::Atom(r, args) => {
            out.push_str(r);
            out.push('(');
            for (i, t) in args.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{t}");
            }
            out.push(')');
        }
        Formula::Eq(a, b) => {
            let _ = write!(out, "{a} = {b}");
        }
        Formula::Not(g) => {
            out.push('!');
            match **g {
                Formula::True | Formula::False | Formula::Atom(..) | Formula::Not(_) => {
                    write_formula(out, g)
                }
                _ => {
                    out.push('(');
                    write_formula(out, g);
                    out.push(')');
                }
            }
        }
        Formula::And(fs) if fs.is_empty() => out.push_str("true"),
        Formula::Or(fs) if fs.is_empty() => out.push_str("false"),
        Formula::And(fs) | Formula::Or(fs) if fs.len() == 1 => write_formula(out, &fs[0]),
        Formula::And(fs) => write_nary(out, fs, " & ", PREC_AND),
        Formula::Or(fs) => write_nary(out, fs, " | ", PREC_OR),
        Formula::Implies(a, b) => {
            write_child(out, a, PREC_IMPLIES);
            out.push_str(" -> ");
            write_child(out, b, PREC_IMPLIES);
        }
        Formula::Iff(a, b) => {
            write_child(out, a, PREC_IFF);
            out.push_str(" <-> ");
            write_child(out, b, PREC_IFF);
        }
        Formula::Exists(vs, g) => {
            out.push('E');
            write_vars(out, vs);
            out.push_str(" . ");
            write_formula(out, g);
        }
        Formula::Forall(vs, g) => {
            out.push('A');
            write_vars(out, vs);
            out.push_str(" . ");
            write_formula(out, g);
        }
        Formula::Count(mode, r, vs, g) => {
            let _ = write!(out, "E[{}{}]", mode.symbol(), r);
            write_vars(out, vs);
            out.push_str(" . ");
            write_formula(out, g);
        }
    }
}

/// Renders a formula in the concrete grammar.
pub fn print(f: &Formula) -> String {
    let mut out = String::new();
    write_formula(&mut out, f);
    out
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print(self))
    }
}
