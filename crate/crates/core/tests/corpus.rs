mod common;

use std::collections::BTreeSet;

use mutalg::algebraicity::{family_stability, Verdict};
use mutalg::corpus::{generate, load, store, FamilyKind, FamilySpec};
use mutalg::semantics::FiniteStructure;
use mutalg::syntax::{parse, VarTuple};

fn tuples(m: &FiniteStructure, r: &str) -> BTreeSet<Vec<usize>> {
    m.relation(r).unwrap().tuples().clone()
}

fn set(items: &[[usize; 2]]) -> BTreeSet<Vec<usize>> {
    items.iter().map(|t| t.to_vec()).collect()
}

#[test]
fn generation_examples() {
    let c4 = generate(&FamilySpec::new(FamilyKind::UndirectedCycle, vec![4])).unwrap().remove(0);
    let e = tuples(&c4, "E");
    assert_eq!(e.len(), 8);
    assert!(e.iter().all(|t| e.contains(&vec![t[1], t[0]])));

    let chain = generate(&FamilySpec::new(FamilyKind::SuccessorChain, vec![3])).unwrap().remove(0);
    assert_eq!(tuples(&chain, "S"), set(&[[0, 1], [1, 2]]));

    let matching = generate(&FamilySpec::new(FamilyKind::PerfectMatching, vec![6])).unwrap().remove(0);
    let u: BTreeSet<Vec<usize>> = (0..3).map(|a| vec![a]).collect();
    assert_eq!(tuples(&matching, "U"), u);
    assert_eq!(tuples(&matching, "B"), set(&[[0, 3], [1, 4], [2, 5]]));

    let sets = generate(&FamilySpec::range(FamilyKind::PureSet, 3, 5).with_constant("c0", 0).with_constant("c1", 1)).unwrap();
    assert_eq!(sets.len(), 3);
    assert!(sets.iter().all(|m| m.relations().count() == 0 && m.constant("c1") == Some(1)));
}

#[test]
fn invalid_specs_are_rejected() {
    assert!(FamilySpec::parse("nonsense:3..5").is_err());
    assert!(generate(&FamilySpec::new(FamilyKind::UndirectedCycle, vec![5, 4])).is_err());
    assert!(generate(&FamilySpec::new(FamilyKind::PerfectMatching, vec![7])).is_err());
    assert!(generate(&FamilySpec::new(FamilyKind::PureSet, vec![2]).with_constant("c0", 2)).is_err());
    assert!(generate(&FamilySpec::new(FamilyKind::UndirectedCycle, vec![])).is_err());
}

#[test]
fn spec_parsing() {
    let spec = FamilySpec::parse("cycle:5..10").unwrap();
    assert_eq!(spec.kind, FamilyKind::UndirectedCycle);
    assert_eq!(spec.sizes, (5..=10).collect::<Vec<_>>());
    let spec = FamilySpec::parse("matching:8..12").unwrap();
    assert_eq!(spec.sizes, vec![8, 10, 12]);
    assert_eq!(FamilySpec::parse("chain:3,7").unwrap().sizes, vec![3, 7]);
}

fn all_corpus() -> Vec<FiniteStructure> {
    let specs = [
        FamilySpec::range(FamilyKind::DirectedCycle, 3, 10),
        FamilySpec::range(FamilyKind::UndirectedCycle, 3, 10),
        FamilySpec::range(FamilyKind::SuccessorChain, 1, 10),
        FamilySpec::range(FamilyKind::PureSet, 2, 10).with_constant("c0", 0).with_constant("c1", 1),
        FamilySpec::range(FamilyKind::PerfectMatching, 2, 16),
        FamilySpec::range(FamilyKind::CompleteBipartite, 2, 12),
    ];
    specs.iter().flat_map(|s| generate(s).unwrap()).collect()
}

#[test]
fn store_load_roundtrip_for_every_corpus_structure() {
    let dir = tempfile::tempdir().unwrap();
    for m in all_corpus() {
        let path = dir.path().join(format!("{}.json", m.name()));
        store(&path, &m).unwrap();
        let back = load(&path).unwrap();
        assert_eq!(back, m);
        // storing again gives the same bytes
        let again = dir.path().join("again.json");
        store(&again, &back).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&again).unwrap());
    }
}

#[test]
fn load_rejects_bad_files() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"universe": 3, "relations": {"E": {"arity": 2, "tuples": [[0, 3]]}}, "constants": {}}"#).unwrap();
    assert!(load(&bad).is_err());
    std::fs::write(&bad, r#"{"universe": 3, "relations": {}, "constants": {}, "comment": "x"}"#).unwrap();
    assert!(load(&bad).is_err());
    std::fs::write(&bad, "not json").unwrap();
    assert!(load(&bad).is_err());
    assert!(load(&dir.path().join("missing.json")).is_err());
}

#[test]
fn generation_is_deterministic() {
    let spec = FamilySpec::range(FamilyKind::PerfectMatching, 4, 10);
    let a: Vec<String> = generate(&spec).unwrap().iter().map(FiniteStructure::to_json).collect();
    let b: Vec<String> = generate(&spec).unwrap().iter().map(FiniteStructure::to_json).collect();
    assert_eq!(a, b);
}

#[test]
fn characteristic_relations_have_expected_verdicts() {
    let xy = VarTuple::parse("x y").unwrap();
    let cases = [
        (FamilySpec::range(FamilyKind::UndirectedCycle, 5, 10), "E(x,y)", Verdict::Stable(2)),
        (FamilySpec::range(FamilyKind::DirectedCycle, 5, 10), "E(x,y)", Verdict::Stable(1)),
        (FamilySpec::range(FamilyKind::SuccessorChain, 3, 10), "S(x,y)", Verdict::Stable(1)),
        (FamilySpec::range(FamilyKind::PerfectMatching, 8, 16), "B(x,y)", Verdict::Stable(1)),
        (FamilySpec::range(FamilyKind::CompleteBipartite, 4, 12), "E(x,y)", Verdict::Growing),
    ];
    for (spec, text, expected) in cases {
        let fam = generate(&spec).unwrap();
        let f = parse(text, &fam[0].signature()).unwrap();
        assert_eq!(family_stability(&fam, &f, &xy, 3).unwrap().verdict, expected, "{text} on {:?}", spec.kind);
    }
}
