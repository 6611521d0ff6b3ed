use super::{
    constant_truth, exact_count_to_preferred, messy_reduce, negate_preferred, BaseCountRewriter, RewriteError,
    RewriteResult,
};
use crate::semantics::FiniteStructure;
use crate::syntax::{
    class_tags, expand_counting, print, ClassTag, CountMode, Formula, PreferredFormula, Var, VarTuple,
};

struct Pipeline<'a> {
    base: &'a dyn BaseCountRewriter,
    family: &'a [FiniteStructure],
    min_size: usize,
    trace: Vec<(String, String)>,
}

impl Pipeline<'_> {
    fn absorb(&mut self, r: RewriteResult) -> Formula {
        self.min_size = self.min_size.max(r.min_universe_size);
        self.trace.extend(r.trace);
        r.output
    }

    fn go(&mut self, f: &Formula, positive: bool) -> Result<Formula, RewriteError> {
        if f.free_vars().is_empty() {
            let truth = constant_truth(self.family, f)? == positive;
            return Ok(if truth { Formula::True } else { Formula::False });
        }
        if f.is_quantifier_free() {
            return Ok(if positive { f.clone() } else { Formula::not(f.clone()) });
        }
        match f {
            Formula::Not(g) => self.go(g, !positive),
            Formula::And(gs) | Formula::Or(gs) => {
                let parts = gs.iter().map(|g| self.go(g, positive)).collect::<Result<Vec<_>, _>>()?;
                let conjunctive = matches!(f, Formula::And(_)) == positive;
                Ok(if conjunctive { Formula::and(parts) } else { Formula::or(parts) })
            }
            Formula::Implies(a, b) => {
                self.go(&Formula::Or(vec![Formula::Not(a.clone()), b.as_ref().clone()]), positive)
            }
            Formula::Iff(a, b) => {
                let (a, b) = (a.as_ref().clone(), b.as_ref().clone());
                let (na, nb) = (Formula::Not(Box::new(a.clone())), Formula::Not(Box::new(b.clone())));
                let expanded = if positive {
                    Formula::Or(vec![Formula::And(vec![a, b]), Formula::And(vec![na, nb])])
                } else {
                    Formula::Or(vec![Formula::And(vec![a, nb]), Formula::And(vec![na, b])])
                };
                self.go(&expanded, true)
            }
            Formula::Exists(vs, body) => {
                require_qf(body)?;
                let body = nnf(body, true);
                if positive {
                    self.positive_exists(vs, &body)
                } else {
                    self.negate(&Formula::exists(vs.clone(), body))
                }
            }
            Formula::Forall(vs, body) => {
                require_qf(body)?;
                let negated = nnf(body, false);
                if positive {
                    self.negate(&Formula::exists(vs.clone(), negated))
                } else {
                    self.positive_exists(vs, &negated)
                }
            }
            Formula::Count(mode, r, vs, body) => {
                require_qf(body)?;
                self.count(*mode, *r, vs, &nnf(body, true), positive)
            }
            _ => unreachable!("quantifier-free cases handled above"),
        }
    }

    fn positive_exists(&mut self, vs: &[Var], body: &Formula) -> Result<Formula, RewriteError> {
        let plain = Formula::exists(vs.to_vec(), body.clone());
        let free: Vec<Var> = body.free_vars().into_iter().filter(|v| !vs.contains(v)).collect();
        let has_negation = body.conjuncts().iter().any(|c| matches!(c, Formula::Not(_)));
        if free.len() == 1 && has_negation {
            if let Ok(x) = VarTuple::new(vs.to_vec()) {
                match messy_reduce(body, &x, &free[0], self.family) {
                    Ok(r) => return Ok(self.absorb(r)),
                    Err(RewriteError::Shape(_)) => {}
                    Err(e) => return Err(e),
                }
            }
        }
        Ok(plain)
    }

    fn negate(&mut self, f: &Formula) -> Result<Formula, RewriteError> {
        let theta = PreferredFormula::recognize(f)
            .ok_or_else(|| RewriteError::Shape(format!("{} is not a preferred formula", print(f))))?;
        let r = negate_preferred(&theta, self.base, None, self.family)?;
        Ok(self.absorb(r))
    }

    fn exact(&mut self, m: usize, vs: &[Var], body: &Formula) -> Result<Formula, RewriteError> {
        let x = VarTuple::new(vs.to_vec())?;
        let y = VarTuple::from(body.free_vars().into_iter().filter(|v| !vs.contains(v)).collect::<Vec<_>>());
        let r = exact_count_to_preferred(body, &x, &y, m, self.base, None, self.family)?;
        Ok(self.absorb(r))
    }

    fn at_least(&mut self, k: usize, vs: &[Var], body: &Formula) -> Formula {
        expand_counting(&Formula::count(CountMode::AtLeast, k, vs.to_vec(), body.clone()))
    }

    fn at_most(&mut self, k: usize, vs: &[Var], body: &Formula) -> Result<Formula, RewriteError> {
        let parts = (0..=k).map(|m| self.exact(m, vs, body)).collect::<Result<Vec<_>, _>>()?;
        Ok(Formula::or(parts))
    }

    fn count(
        &mut self,
        mode: CountMode,
        r: usize,
        vs: &[Var],
        body: &Formula,
        positive: bool,
    ) -> Result<Formula, RewriteError> {
        Ok(match (mode, positive) {
            (CountMode::AtLeast, true) => self.at_least(r, vs, body),
            (CountMode::AtLeast, false) if r == 0 => Formula::False,
            (CountMode::AtLeast, false) => self.at_most(r - 1, vs, body)?,
            (CountMode::AtMost, true) => self.at_most(r, vs, body)?,
            (CountMode::AtMost, false) => self.at_least(r + 1, vs, body),
            (CountMode::Exactly, true) => self.exact(r, vs, body)?,
            (CountMode::Exactly, false) => {
                let above = self.at_least(r + 1, vs, body);
                if r == 0 {
                    above
                } else {
                    Formula::or(vec![self.at_most(r - 1, vs, body)?, above])
                }
            }
        })
    }
}

/// Negation normal form of a quantifier-free formula, negated when
/// `positive` is false. Conjunctions are flattened so their literals can be
/// split into kernel and diagram.
fn nnf(f: &Formula, positive: bool) -> Formula {
    match f {
        Formula::True | Formula::False => {
            if (*f == Formula::True) == positive {
                Formula::True
            } else {
                Formula::False
            }
        }
        Formula::Atom(..) | Formula::Eq(..) => {
            if positive {
                f.clone()
            } else {
                Formula::not(f.clone())
            }
        }
        Formula::Not(g) => nnf(g, !positive),
        Formula::And(gs) | Formula::Or(gs) => {
            let parts = gs.iter().map(|g| nnf(g, positive)).collect();
            if matches!(f, Formula::And(_)) == positive {
                crate::syntax::simplify(&Formula::and(parts))
            } else {
                crate::syntax::simplify(&Formula::or(parts))
            }
        }
        Formula::Implies(a, b) => nnf(&Formula::Or(vec![Formula::not(a.as_ref().clone()), b.as_ref().clone()]), positive),
        Formula::Iff(a, b) => {
            let (a, b) = (a.as_ref().clone(), b.as_ref().clone());
            let both = Formula::And(vec![a.clone(), b.clone()]);
            let neither = Formula::And(vec![Formula::not(a), Formula::not(b)]);
            nnf(&Formula::Or(vec![both, neither]), positive)
        }
        Formula::Exists(..) | Formula::Forall(..) | Formula::Count(..) => {
            if positive {
                f.clone()
            } else {
                Formula::not(f.clone())
            }
        }
    }
}

fn require_qf(body: &Formula) -> Result<(), RewriteError> {
    if body.is_quantifier_free() {
        Ok(())
    } else {
        Err(RewriteError::Shape(format!("quantifier block over {} is nested", print(body))))
    }
}

/// Rewrites a boolean combination of existential, universal and counting
/// blocks with quantifier-free bodies into a positive combination of
/// preferred formulas. Negations are pushed to the blocks; negated blocks
/// go through `negate_preferred`, counting blocks through
/// `exact_count_to_preferred`, and positive blocks through `messy_reduce`
/// where it applies. Input that already has the target shape is returned
/// unchanged.
pub fn to_p(phi: &Formula, base: &dyn BaseCountRewriter, family: &[FiniteStructure]) -> Result<RewriteResult, RewriteError> {
    if family.is_empty() {
        return Err(RewriteError::EmptyFamily);
    }
    if class_tags(phi, None).contains(&ClassTag::PPositiveCombination) {
        return Ok(RewriteResult::new(phi.clone(), 1, Vec::new(), "to-P:unchanged"));
    }
    let mut p = Pipeline { base, family, min_size: 1, trace: Vec::new() };
    let output = p.go(phi, true)?;
    Ok(RewriteResult::new(output, p.min_size, p.trace, "to-P"))
}
