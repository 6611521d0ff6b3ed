use super::{max_count, BaseCountRewriter, RewriteError, RewriteResult};
use crate::semantics::FiniteStructure;
use crate::syntax::{print, rename_vars, CountMode, Formula, FreshNames, PreferredFormula, Term, Var, VarTuple};

const SUBSET_LIMIT: usize = 10_000;

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k.min(n - k)).fold(1usize, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// All `k`-element subsets of `0..n`, in lexicographic order.
fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

fn terms(vars: &[Var]) -> Vec<Term> {
    vars.iter().map(Term::from).collect()
}

fn check_bound(given: Option<usize>, needed: usize) -> Result<usize, RewriteError> {
    match given {
        Some(n) if n < needed => Err(RewriteError::BoundTooSmall { given: n, needed }),
        Some(n) => Ok(n),
        None => Ok(needed),
    }
}

/// Rewrites `E[=r] x . R(x, y)` using the base rewriter on the last variable
/// `y*` of `y`. For each possible number `m` of solutions of `R` in
/// `(x, y')`, `theta_m` states that there are `m` distinct solutions of which
/// exactly `r` agree with `y'` on the `y'` part.
///
/// `bound` must exceed the number of solutions on every cutout; by default
/// it is the measured maximum plus one.
pub fn exact_count_to_preferred(
    r_formula: &Formula,
    x: &VarTuple,
    y: &VarTuple,
    r: usize,
    base: &dyn BaseCountRewriter,
    bound: Option<usize>,
    family: &[FiniteStructure],
) -> Result<RewriteResult, RewriteError> {
    if family.is_empty() {
        return Err(RewriteError::EmptyFamily);
    }
    let (y_star, y_rest) = y.vars().split_last().ok_or_else(|| RewriteError::Shape("y is empty".into()))?;
    if let Some(v) = y.vars().iter().find(|v| x.contains(v)) {
        return Err(RewriteError::Shape(format!("{v} occurs in both tuples")));
    }
    if let Some(v) = r_formula.free_vars().into_iter().find(|v| !x.contains(v) && !y.contains(v)) {
        return Err(RewriteError::Shape(format!("free variable {v} is in neither tuple")));
    }
    let counted = Formula::count(CountMode::Exactly, r, x.vars().to_vec(), r_formula.clone());
    if y_rest.is_empty() {
        let inner = base.rewrite(&counted, y_star, family)?;
        let mut trace = inner.trace.clone();
        trace.push(("exact-count:input".into(), print(&counted)));
        return Ok(RewriteResult::new(inner.output, inner.min_universe_size, trace, "exact-count"));
    }

    let mut uv: Vec<Var> = x.vars().to_vec();
    uv.extend(y_rest.iter().cloned());
    let needed = max_count(family, r_formula, &uv)? + 1;
    let n = check_bound(bound, needed)?;
    if binomial(n.saturating_sub(1), r.min(n.saturating_sub(1))) > SUBSET_LIMIT {
        return Err(RewriteError::TooLarge(format!("subsets of size {r} among {n}")));
    }

    let mut fresh = FreshNames::avoiding([r_formula]);
    y.vars().iter().for_each(|v| fresh.reserve(v));
    let y_terms = terms(y_rest);
    let mut trace = Vec::new();
    let mut disjuncts = Vec::new();
    let mut min_size = 1;
    for m in 0..n {
        let copies: Vec<Vec<Var>> = (0..m).map(|_| fresh.fresh_copies(&uv)).collect();
        let split = x.len();
        let distinct = Formula::pairwise_distinct(&copies.iter().map(|c| terms(c)).collect::<Vec<_>>());
        let choices = subsets(m, r)
            .into_iter()
            .map(|q| {
                Formula::and(
                    (0..m)
                        .map(|i| {
                            let v = terms(&copies[i][split..]);
                            if q.contains(&i) {
                                Formula::tuple_eq(&v, &y_terms)
                            } else {
                                Formula::tuple_neq(&v, &y_terms)
                            }
                        })
                        .collect(),
                )
            })
            .collect();
        let s_m = Formula::and(vec![distinct, Formula::or(choices)]);
        let mut body: Vec<Formula> = copies.iter().map(|c| rename_vars(r_formula, &uv, c)).collect();
        body.push(s_m.clone());
        let theta_m = Formula::exists(copies.concat(), Formula::and(body));

        let w = fresh.fresh_copies(&uv);
        let count_m = Formula::count(CountMode::Exactly, m, w.clone(), rename_vars(r_formula, &uv, &w));
        let base_m = base.rewrite(&count_m, y_star, family)?;
        min_size = min_size.max(base_m.min_universe_size);
        trace.push((format!("S_{m}"), print(&s_m)));
        trace.push((format!("theta_{m}"), print(&theta_m)));
        trace.push((format!("base_{m}"), print(&base_m.output)));
        disjuncts.push(Formula::and(vec![base_m.output, theta_m]));
    }
    Ok(RewriteResult::new(Formula::or(disjuncts), min_size, trace, "exact-count"))
}

/// Rewrites the negation of a preferred formula `E x (R(x,y) & S(x,y,z))`:
/// for each possible number `m` of solutions of `R`, all `m` of them (taken
/// pairwise distinct) falsify `S`.
pub fn negate_preferred(
    theta: &PreferredFormula,
    base: &dyn BaseCountRewriter,
    bound: Option<usize>,
    family: &[FiniteStructure],
) -> Result<RewriteResult, RewriteError> {
    if family.is_empty() {
        return Err(RewriteError::EmptyFamily);
    }
    let (x, y) = (theta.x(), theta.y());
    let kernel = theta.kernel();
    let diagram = theta.diagram().formula();
    let needed = max_count(family, kernel, x.vars())? + 1;
    let n = check_bound(bound, needed)?;

    let mut fresh = FreshNames::avoiding([kernel, diagram]);
    y.vars().iter().chain(theta.z().vars()).for_each(|v| fresh.reserve(v));
    let mut trace = Vec::new();
    let mut disjuncts = Vec::new();
    let mut min_size = 1;
    for m in 0..n {
        let exact = exact_count_to_preferred(kernel, x, y, m, base, None, family)?;
        min_size = min_size.max(exact.min_universe_size);
        let copies: Vec<Vec<Var>> = (0..m).map(|_| fresh.fresh_copies(x.vars())).collect();
        let mut body: Vec<Formula> = copies.iter().map(|c| rename_vars(kernel, x.vars(), c)).collect();
        body.push(Formula::pairwise_distinct(&copies.iter().map(|c| terms(c)).collect::<Vec<_>>()));
        body.extend(copies.iter().map(|c| Formula::not(rename_vars(diagram, x.vars(), c))));
        let psi_m = Formula::exists(copies.concat(), Formula::and(body));
        trace.push((format!("exact_{m}"), print(&exact.output)));
        trace.push((format!("psi_{m}"), print(&psi_m)));
        disjuncts.push(Formula::and(vec![exact.output, psi_m]));
    }
    Ok(RewriteResult::new(Formula::or(disjuncts), min_size, trace, "negate-preferred"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subset_enumeration() {
        assert_eq!(subsets(3, 2), vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
        assert_eq!(subsets(2, 0), vec![Vec::<usize>::new()]);
        assert!(subsets(1, 2).is_empty());
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(2, 3), 0);
    }
}
