//! Deterministic families of finite cutouts, plus structure file load/store.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::semantics::{FiniteStructure, StructureError};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("unknown family kind {0:?}")]
    UnknownKind(String),
    #[error("malformed family {0:?}; expected kind:lo..hi or kind:n1,n2,...")]
    Malformed(String),
    #[error("family has no sizes")]
    NoSizes,
    #[error("sizes must be strictly increasing")]
    NotIncreasing,
    #[error("{kind} needs universe size at least {min}, got {size}")]
    TooSmall { kind: FamilyKind, size: usize, min: usize },
    #[error("{kind} needs an even universe size, got {size}")]
    OddSize { kind: FamilyKind, size: usize },
    #[error("constant {name} = {value} must be below the smallest size {min}")]
    ConstantTooLarge { name: String, value: usize, min: usize },
    #[error(transparent)]
    Structure(#[from] StructureError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FamilyKind {
    DirectedCycle,
    UndirectedCycle,
    SuccessorChain,
    PureSet,
    PerfectMatching,
    CompleteBipartite,
}

impl FamilyKind {
    pub const ALL: [FamilyKind; 6] = [
        FamilyKind::DirectedCycle,
        FamilyKind::UndirectedCycle,
        FamilyKind::SuccessorChain,
        FamilyKind::PureSet,
        FamilyKind::PerfectMatching,
        FamilyKind::CompleteBipartite,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::DirectedCycle => "directed-cycle",
            FamilyKind::UndirectedCycle => "undirected-cycle",
            FamilyKind::SuccessorChain => "successor-chain",
            FamilyKind::PureSet => "pure-set",
            FamilyKind::PerfectMatching => "perfect-matching",
            FamilyKind::CompleteBipartite => "complete-bipartite",
        }
    }

    fn aliases(self) -> &'static [&'static str] {
        match self {
            FamilyKind::DirectedCycle => &["dcycle"],
            FamilyKind::UndirectedCycle => &["cycle", "ucycle"],
            FamilyKind::SuccessorChain => &["chain"],
            FamilyKind::PureSet => &["set", "pure-set-with-constants"],
            FamilyKind::PerfectMatching => &["matching", "perfect-matching-two-colors"],
            FamilyKind::CompleteBipartite => &["bipartite"],
        }
    }

    fn min_size(self) -> usize {
        match self {
            FamilyKind::DirectedCycle | FamilyKind::UndirectedCycle => 3,
            FamilyKind::PerfectMatching | FamilyKind::CompleteBipartite => 2,
            FamilyKind::SuccessorChain | FamilyKind::PureSet => 1,
        }
    }

    fn even_only(self) -> bool {
        matches!(self, FamilyKind::PerfectMatching | FamilyKind::CompleteBipartite)
    }
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FamilyKind {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, CorpusError> {
        FamilyKind::ALL
            .into_iter()
            .find(|k| k.name() == s || k.aliases().contains(&s))
            .ok_or_else(|| CorpusError::UnknownKind(s.to_string()))
    }
}

/// A family of cutouts: one structure per universe size.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FamilySpec {
    pub kind: FamilyKind,
    pub sizes: Vec<usize>,
    pub constants: Vec<(String, usize)>,
}

impl FamilySpec {
    pub fn new(kind: FamilyKind, sizes: Vec<usize>) -> Self {
        FamilySpec { kind, sizes, constants: Vec::new() }
    }

    /// Sizes `lo..=hi`; kinds that need even sizes keep only the even ones.
    pub fn range(kind: FamilyKind, lo: usize, hi: usize) -> Self {
        let sizes = (lo..=hi).filter(|n| !kind.even_only() || n % 2 == 0).collect();
        FamilySpec::new(kind, sizes)
    }

    pub fn with_constant(mut self, name: &str, value: usize) -> Self {
        self.constants.push((name.to_string(), value));
        self
    }

    /// Parses `kind:lo..hi` (inclusive) or `kind:n1,n2,...`.
    pub fn parse(text: &str) -> Result<Self, CorpusError> {
        let malformed = || CorpusError::Malformed(text.to_string());
        let (kind, sizes) = text.split_once(':').ok_or_else(malformed)?;
        let kind: FamilyKind = kind.trim().parse()?;
        let sizes = sizes.trim();
        if let Some((lo, hi)) = sizes.split_once("..") {
            let lo = lo.trim().parse().map_err(|_| malformed())?;
            let hi = hi.trim().trim_start_matches('=').parse().map_err(|_| malformed())?;
            Ok(FamilySpec::range(kind, lo, hi))
        } else {
            let sizes = sizes
                .split(',')
                .map(|s| s.trim().parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| malformed())?;
            Ok(FamilySpec::new(kind, sizes))
        }
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        let min = *self.sizes.first().ok_or(CorpusError::NoSizes)?;
        if self.sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CorpusError::NotIncreasing);
        }
        for &size in &self.sizes {
            if size < self.kind.min_size() {
                return Err(CorpusError::TooSmall { kind: self.kind, size, min: self.kind.min_size() });
            }
            if self.kind.even_only() && size % 2 == 1 {
                return Err(CorpusError::OddSize { kind: self.kind, size });
            }
        }
        if let Some((name, value)) = self.constants.iter().find(|(_, v)| *v >= min) {
            return Err(CorpusError::ConstantTooLarge { name: name.clone(), value: *value, min });
        }
        Ok(())
    }
}

fn build(kind: FamilyKind, n: usize) -> Result<FiniteStructure, StructureError> {
    let s = FiniteStructure::new(n).named(format!("{}-{n}", kind.name()));
    match kind {
        FamilyKind::DirectedCycle => s.with_relation("E", 2, (0..n).map(|i| vec![i, (i + 1) % n])),
        FamilyKind::UndirectedCycle => {
            s.with_relation("E", 2, (0..n).flat_map(|i| [vec![i, (i + 1) % n], vec![(i + 1) % n, i]]))
        }
        FamilyKind::SuccessorChain => s.with_relation("S", 2, (1..n).map(|i| vec![i - 1, i])),
        FamilyKind::PureSet => Ok(s),
        FamilyKind::PerfectMatching => {
            let h = n / 2;
            s.with_relation("U", 1, (0..h).map(|i| vec![i]))?.with_relation("B", 2, (0..h).map(|i| vec![i, h + i]))
        }
        FamilyKind::CompleteBipartite => {
            let h = n / 2;
            let edges = (0..h).flat_map(|a| (h..n).flat_map(move |b| [vec![a, b], vec![b, a]]));
            s.with_relation("E", 2, edges)
        }
    }
}

pub fn generate(spec: &FamilySpec) -> Result<Vec<FiniteStructure>, CorpusError> {
    spec.validate()?;
    spec.sizes
        .iter()
        .map(|&n| {
            let mut s = build(spec.kind, n)?;
            for (name, value) in &spec.constants {
                s = s.with_constant(name, *value)?;
            }
            Ok(s)
        })
        .collect()
}

/// Places the relations and constants of both structures on one universe.
pub fn overlay(a: &FiniteStructure, b: &FiniteStructure) -> Result<FiniteStructure, StructureError> {
    let n = a.universe().max(b.universe());
    let mut s = FiniteStructure::new(n).named(format!("{}+{}", a.name(), b.name()));
    for m in [a, b] {
        for (name, rel) in m.relations() {
            s = s.with_relation(name, rel.arity(), rel.tuples().iter().cloned())?;
        }
        for (name, value) in m.constants() {
            s = s.with_constant(name, value)?;
        }
    }
    Ok(s)
}

pub fn load(path: &Path) -> Result<FiniteStructure, StructureError> {
    let text = std::fs::read_to_string(path)?;
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Ok(FiniteStructure::from_json(&text)?.named(name))
}

pub fn store(path: &Path, structure: &FiniteStructure) -> Result<(), StructureError> {
    std::fs::write(path, structure.to_json())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let c = generate(&FamilySpec::new(FamilyKind::UndirectedCycle, vec![4])).unwrap();
        assert_eq!(c[0].relation("E").unwrap().len(), 8);
        let ch = generate(&FamilySpec::new(FamilyKind::SuccessorChain, vec![3])).unwrap();
        let s: Vec<_> = ch[0].relation("S").unwrap().tuples().iter().cloned().collect();
        assert_eq!(s, vec![vec![0, 1], vec![1, 2]]);
        let m = generate(&FamilySpec::new(FamilyKind::PerfectMatching, vec![6])).unwrap();
        let u: Vec<_> = m[0].relation("U").unwrap().tuples().iter().cloned().collect();
        assert_eq!(u, vec![vec![0], vec![1], vec![2]]);
        let b: Vec<_> = m[0].relation("B").unwrap().tuples().iter().cloned().collect();
        assert_eq!(b, vec![vec![0, 3], vec![1, 4], vec![2, 5]]);
    }

    #[test]
    fn spec_parsing_and_validation() {
        let f = FamilySpec::parse("cycle:5..10").unwrap();
        assert_eq!((f.kind, f.sizes.len()), (FamilyKind::UndirectedCycle, 6));
        assert_eq!(FamilySpec::parse("matching:8..16").unwrap().sizes, vec![8, 10, 12, 14, 16]);
        assert_eq!(FamilySpec::parse("chain:3,5").unwrap().sizes, vec![3, 5]);
        assert!(matches!(FamilySpec::parse("torus:3..4"), Err(CorpusError::UnknownKind(_))));
        assert!(matches!(FamilySpec::parse("cycle"), Err(CorpusError::Malformed(_))));
        assert!(matches!(
            generate(&FamilySpec::new(FamilyKind::PureSet, vec![4, 3])),
            Err(CorpusError::NotIncreasing)
        ));
        assert!(matches!(
            generate(&FamilySpec::new(FamilyKind::PureSet, vec![2, 3]).with_constant("c", 2)),
            Err(CorpusError::ConstantTooLarge { .. })
        ));
    }

    #[test]
    fn store_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("chain3.json");
        let s = generate(&FamilySpec::new(FamilyKind::SuccessorChain, vec![3])).unwrap().remove(0);
        store(&path, &s).unwrap();
        assert_eq!(load(&path).unwrap(), s);
        assert_eq!(std::fs::read_to_string(&path).unwrap(), load(&path).unwrap().to_json());
    }
}
