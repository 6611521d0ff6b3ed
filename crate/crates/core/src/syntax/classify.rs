//! Syntactic recognition of quantifier-free, preferred and positive
//! combination shapes.
//!
//! Mutual algebraicity is semantic, so shape recognition never asserts it.
//! A certificate for the exact formula refines quantifier-free tags; it never
//! removes one.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::ast::{Formula, Term, Var, VarTuple};
use super::SyntaxError;
use crate::algebraicity::MaBoundCertificate;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub enum ClassTag {
    #[serde(rename = "QF")]
    Qf,
    #[serde(rename = "QF-MA-certified")]
    QfMaCertified,
    A,
    E,
    Preferred,
    #[serde(rename = "P-positive-combination")]
    PPositiveCombination,
    Other,
}

impl fmt::Display for ClassTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClassTag::Qf => "QF",
            ClassTag::QfMaCertified => "QF-MA-certified",
            ClassTag::A => "A",
            ClassTag::E => "E",
            ClassTag::Preferred => "Preferred",
            ClassTag::PPositiveCombination => "P-positive-combination",
            ClassTag::Other => "Other",
        })
    }
}

/// Boolean combination of equalities between variables.
pub fn is_partial_equality_diagram(f: &Formula) -> bool {
    match f {
        Formula::True | Formula::False => true,
        Formula::Eq(Term::Var(_), Term::Var(_)) => true,
        Formula::Eq(..) | Formula::Atom(..) => false,
        Formula::Not(g) => is_partial_equality_diagram(g),
        Formula::And(gs) | Formula::Or(gs) => gs.iter().all(is_partial_equality_diagram),
        Formula::Implies(a, b) | Formula::Iff(a, b) => {
            is_partial_equality_diagram(a) && is_partial_equality_diagram(b)
        }
        Formula::Exists(..) | Formula::Forall(..) | Formula::Count(..) => false,
    }
}

/// A formula restricted to boolean combinations of variable equalities.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PartialEqualityDiagram(Formula);

impl PartialEqualityDiagram {
    pub fn new(f: Formula) -> Result<Self, SyntaxError> {
        if is_partial_equality_diagram(&f) {
            Ok(PartialEqualityDiagram(f))
        } else {
            Err(SyntaxError::NotEqualityDiagram(f.to_string()))
        }
    }

    pub fn trivial() -> Self {
        PartialEqualityDiagram(Formula::True)
    }

    pub fn formula(&self) -> &Formula {
        &self.0
    }
}

/// `E xs . (R(xs, ys) & S(xs, ys, zs))` with `R` quantifier-free and `S` a
/// partial equality diagram.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PreferredFormula {
    x: VarTuple,
    y: VarTuple,
    z: VarTuple,
    kernel: Formula,
    diagram: PartialEqualityDiagram,
}

impl PreferredFormula {
    pub fn new(
        x: VarTuple,
        y: VarTuple,
        z: VarTuple,
        kernel: Formula,
        diagram: PartialEqualityDiagram,
    ) -> Result<Self, SyntaxError> {
        let (xr, yr, zr) = (x.range(), y.range(), z.range());
        if !xr.is_disjoint(&yr) || !xr.is_disjoint(&zr) || !yr.is_disjoint(&zr) {
            return Err(SyntaxError::NotPreferred("x, y and z must be disjoint".into()));
        }
        if y.is_empty() {
            return Err(SyntaxError::NotPreferred("y must be nonempty".into()));
        }
        if !kernel.is_quantifier_free() {
            return Err(SyntaxError::NotPreferred("kernel must be quantifier-free".into()));
        }
        let xy: BTreeSet<Var> = xr.union(&yr).cloned().collect();
        if !kernel.free_vars().is_subset(&xy) {
            return Err(SyntaxError::NotPreferred("kernel may only mention x and y".into()));
        }
        let all: BTreeSet<Var> = xy.union(&zr).cloned().collect();
        if !diagram.formula().free_vars().is_subset(&all) {
            return Err(SyntaxError::NotPreferred(
                "diagram may only mention x, y and z".into(),
            ));
        }
        Ok(PreferredFormula { x, y, z, kernel, diagram })
    }

    /// Recognizes the preferred shape: a (possibly empty) existential prefix
    /// over a quantifier-free body. Conjuncts that are equality diagrams form
    /// `S` and the rest form `R`; if that leaves `R` without free variables
    /// the whole body is taken as `R`.
    pub fn recognize(f: &Formula) -> Option<PreferredFormula> {
        let mut xs: Vec<Var> = Vec::new();
        let mut body = f;
        while let Formula::Exists(vs, g) = body {
            for v in vs {
                if xs.contains(v) {
                    return None;
                }
                xs.push(v.clone());
            }
            body = g;
        }
        if !body.is_quantifier_free() {
            return None;
        }
        let x = VarTuple::new(xs).ok()?;
        let xr = x.range();
        let conjuncts = body.conjuncts();
        let (mut r_parts, mut s_parts): (Vec<Formula>, Vec<Formula>) = (Vec::new(), Vec::new());
        for c in conjuncts {
            if is_partial_equality_diagram(c) {
                s_parts.push(c.clone());
            } else {
                r_parts.push(c.clone());
            }
        }
        let mut kernel = Formula::and(r_parts);
        let mut diagram = Formula::and(s_parts);
        let free_of = |k: &Formula| -> BTreeSet<Var> {
            k.free_vars().difference(&xr).cloned().collect()
        };
        if free_of(&kernel).is_empty() {
            kernel = body.clone();
            diagram = Formula::True;
        }
        let y: Vec<Var> = free_of(&kernel).into_iter().collect();
        if y.is_empty() {
            return None;
        }
        let yr: BTreeSet<Var> = y.iter().cloned().collect();
        let z: Vec<Var> = diagram
            .free_vars()
            .into_iter()
            .filter(|v| !xr.contains(v) && !yr.contains(v))
            .collect();
        PreferredFormula::new(
            x,
            VarTuple::new(y).ok()?,
            VarTuple::new(z).ok()?,
            kernel,
            PartialEqualityDiagram(diagram),
        )
        .ok()
    }

    pub fn x(&self) -> &VarTuple {
        &self.x
    }

    pub fn y(&self) -> &VarTuple {
        &self.y
    }

    pub fn z(&self) -> &VarTuple {
        &self.z
    }

    pub fn kernel(&self) -> &Formula {
        &self.kernel
    }

    pub fn diagram(&self) -> &PartialEqualityDiagram {
        &self.diagram
    }

    pub fn to_formula(&self) -> Formula {
        let body = match self.diagram.formula() {
            Formula::True => self.kernel.clone(),
            s => Formula::and(vec![self.kernel.clone(), s.clone()]),
        };
        Formula::exists(self.x.vars().to_vec(), body)
    }
}

fn is_positive_combination(f: &Formula) -> bool {
    match f {
        Formula::True | Formula::False => true,
        Formula::And(gs) | Formula::Or(gs) => {
            gs.iter().all(is_positive_combination) || PreferredFormula::recognize(f).is_some()
        }
        _ => PreferredFormula::recognize(f).is_some(),
    }
}

fn certifies(cert: Option<&MaBoundCertificate>, f: &Formula) -> bool {
    cert.is_some_and(|c| c.certifies(f))
}

/// Every tag whose shape `f` has.
pub fn class_tags(f: &Formula, cert: Option<&MaBoundCertificate>) -> BTreeSet<ClassTag> {
    let mut tags = BTreeSet::new();
    if f.is_quantifier_free() {
        tags.insert(ClassTag::Qf);
        let certified = certifies(cert, f);
        if certified {
            tags.insert(ClassTag::QfMaCertified);
        }
        if certified || f.free_vars().len() <= 1 {
            tags.insert(ClassTag::A);
        }
    }
    let mut body = f;
    while let Formula::Exists(_, g) = body {
        body = g;
    }
    if body.is_quantifier_free() {
        tags.insert(ClassTag::E);
    }
    if PreferredFormula::recognize(f).is_some() {
        tags.insert(ClassTag::Preferred);
    }
    if is_positive_combination(f) {
        tags.insert(ClassTag::PPositiveCombination);
    }
    if tags.is_empty() {
        tags.insert(ClassTag::Other);
    }
    tags
}

/// The most specific tag of `f`.
pub fn classify(f: &Formula, cert: Option<&MaBoundCertificate>) -> ClassTag {
    let tags = class_tags(f, cert);
    const ORDER: [ClassTag; 7] = [
        ClassTag::QfMaCertified,
        ClassTag::A,
        ClassTag::Qf,
        ClassTag::Preferred,
        ClassTag::E,
        ClassTag::PPositiveCombination,
        ClassTag::Other,
    ];
    ORDER.into_iter().find(|t| tags.contains(t)).unwrap_or(ClassTag::Other)
}
