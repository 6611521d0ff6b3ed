use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::syntax::Signature;

#[derive(Debug, thiserror::Error)]
pub enum StructureError {
    #[error("relation {relation}: tuple {tuple:?} has an entry outside the universe of size {universe}")]
    TupleOutOfRange { relation: String, tuple: Vec<usize>, universe: usize },
    #[error("relation {relation}: tuple {tuple:?} does not have arity {arity}")]
    TupleArity { relation: String, tuple: Vec<usize>, arity: usize },
    #[error("relation {0} must have positive arity")]
    ZeroArity(String),
    #[error("constant {name} = {value} is outside the universe of size {universe}")]
    ConstantOutOfRange { name: String, value: usize, universe: usize },
    #[error("symbol {0} declared twice")]
    DuplicateSymbol(String),
    #[error("{0:?} is not a valid symbol name")]
    InvalidName(String),
    #[error("malformed structure file: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

const DENSE_LIMIT: usize = 1 << 22;

#[derive(Clone, Debug)]
pub struct Relation {
    arity: usize,
    tuples: BTreeSet<Vec<usize>>,
    dense: Option<Vec<bool>>,
    universe: usize,
}

impl Relation {
    fn new(arity: usize, tuples: BTreeSet<Vec<usize>>, universe: usize) -> Self {
        let cells = universe.checked_pow(arity as u32).filter(|&c| c <= DENSE_LIMIT);
        let dense = cells.map(|cells| {
            let mut table = vec![false; cells];
            for t in &tuples {
                table[dense_index(t, universe)] = true;
            }
            table
        });
        Relation { arity, tuples, dense, universe }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn tuples(&self) -> &BTreeSet<Vec<usize>> {
        &self.tuples
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    #[inline]
    pub fn contains(&self, tuple: &[usize]) -> bool {
        match &self.dense {
            Some(table) => table[dense_index(tuple, self.universe)],
            None => self.tuples.contains(tuple),
        }
    }
}

#[inline]
fn dense_index(tuple: &[usize], n: usize) -> usize {
    tuple.iter().fold(0, |acc, &e| acc * n + e)
}

impl PartialEq for Relation {
    fn eq(&self, other: &Self) -> bool {
        self.arity == other.arity && self.tuples == other.tuples
    }
}

impl Eq for Relation {}

/// A finite structure over the universe `{0, .., n-1}`.
///
/// The name is a label for reports and is not part of equality.
#[derive(Clone, Debug)]
pub struct FiniteStructure {
    name: String,
    universe: usize,
    relations: BTreeMap<String, Relation>,
    constants: BTreeMap<String, usize>,
}

impl PartialEq for FiniteStructure {
    fn eq(&self, other: &Self) -> bool {
        self.universe == other.universe
            && self.relations == other.relations
            && self.constants == other.constants
    }
}

impl Eq for FiniteStructure {}

impl fmt::Display for FiniteStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (n={})", self.name, self.universe)
    }
}

fn valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl FiniteStructure {
    pub fn new(universe: usize) -> Self {
        FiniteStructure {
            name: format!("structure-{universe}"),
            universe,
            relations: BTreeMap::new(),
            constants: BTreeMap::new(),
        }
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn with_relation<I>(mut self, name: &str, arity: usize, tuples: I) -> Result<Self, StructureError>
    where
        I: IntoIterator<Item = Vec<usize>>,
    {
        if !valid_name(name) {
            return Err(StructureError::InvalidName(name.to_string()));
        }
        if arity == 0 {
            return Err(StructureError::ZeroArity(name.to_string()));
        }
        if self.relations.contains_key(name) || self.constants.contains_key(name) {
            return Err(StructureError::DuplicateSymbol(name.to_string()));
        }
        let mut set = BTreeSet::new();
        for t in tuples {
            if t.len() != arity {
                return Err(StructureError::TupleArity { relation: name.to_string(), tuple: t, arity });
            }
            if t.iter().any(|&e| e >= self.universe) {
                return Err(StructureError::TupleOutOfRange {
                    relation: name.to_string(),
                    tuple: t,
                    universe: self.universe,
                });
            }
            set.insert(t);
        }
        let rel = Relation::new(arity, set, self.universe);
        self.relations.insert(name.to_string(), rel);
        Ok(self)
    }

    pub fn with_constant(mut self, name: &str, value: usize) -> Result<Self, StructureError> {
        if !valid_name(name) {
            return Err(StructureError::InvalidName(name.to_string()));
        }
        if self.relations.contains_key(name) || self.constants.contains_key(name) {
            return Err(StructureError::DuplicateSymbol(name.to_string()));
        }
        if value >= self.universe {
            return Err(StructureError::ConstantOutOfRange {
                name: name.to_string(),
                value,
                universe: self.universe,
            });
        }
        self.constants.insert(name.to_string(), value);
        Ok(self)
    }

    pub fn relation(&self, name: &str) -> Option<&Relation> {
        self.relations.get(name)
    }

    pub fn relations(&self) -> impl Iterator<Item = (&str, &Relation)> {
        self.relations.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn constant(&self, name: &str) -> Option<usize> {
        self.constants.get(name).copied()
    }

    pub fn constants(&self) -> impl Iterator<Item = (&str, usize)> {
        self.constants.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn signature(&self) -> Signature {
        let mut sig = Signature::new();
        for (name, rel) in &self.relations {
            sig.add_relation(name, rel.arity).expect("structure symbols are valid");
        }
        for name in self.constants.keys() {
            sig.add_constant(name).expect("structure symbols are valid");
        }
        sig
    }

    /// Serializes to the structure file format. Output is deterministic.
    pub fn to_json(&self) -> String {
        let file = StructureFile {
            universe: self.universe,
            relations: self
                .relations
                .iter()
                .map(|(k, r)| {
                    (k.clone(), RelationFile { arity: r.arity, tuples: r.tuples.iter().cloned().collect() })
                })
                .collect(),
            constants: self.constants.clone(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("structure serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, StructureError> {
        let file: StructureFile = serde_json::from_str(text)?;
        let mut s = FiniteStructure::new(file.universe);
        for (name, rel) in file.relations {
            s = s.with_relation(&name, rel.arity, rel.tuples)?;
        }
        for (name, value) in file.constants {
            s = s.with_constant(&name, value)?;
        }
        Ok(s)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StructureFile {
    universe: usize,
    relations: BTreeMap<String, RelationFile>,
    constants: BTreeMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RelationFile {
    arity: usize,
    tuples: Vec<Vec<usize>>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schema_violations() {
        assert!(matches!(
            FiniteStructure::new(3).with_relation("E", 2, vec![vec![0, 3]]),
            Err(StructureError::TupleOutOfRange { .. })
        ));
        assert!(matches!(
            FiniteStructure::new(3).with_relation("E", 2, vec![vec![0]]),
            Err(StructureError::TupleArity { .. })
        ));
        assert!(matches!(
            FiniteStructure::new(3).with_constant("c", 3),
            Err(StructureError::ConstantOutOfRange { .. })
        ));
        let dup = FiniteStructure::new(3)
            .with_relation("E", 2, vec![])
            .unwrap()
            .with_constant("E", 0);
        assert!(matches!(dup, Err(StructureError::DuplicateSymbol(_))));
    }

    #[test]
    fn file_rejects_unknown_keys() {
        let text = r#"{"universe": 2, "relations": {}, "constants": {}, "extra": 1}"#;
        assert!(matches!(FiniteStructure::from_json(text), Err(StructureError::Malformed(_))));
        let nested = r#"{"universe": 2, "relations": {"E": {"arity": 1, "tuples": [], "x": 0}}, "constants": {}}"#;
        assert!(FiniteStructure::from_json(nested).is_err());
        let out_of_range = r#"{"universe": 2, "relations": {"E": {"arity": 1, "tuples": [[2]]}}, "constants": {}}"#;
        assert!(matches!(
            FiniteStructure::from_json(out_of_range),
            Err(StructureError::TupleOutOfRange { .. })
        ));
    }

    #[test]
    fn membership_dense_and_sparse() {
        let s = FiniteStructure::new(40)
            .with_relation("R", 5, vec![vec![1, 2, 3, 4, 5]])
            .unwrap()
            .with_relation("E", 2, vec![vec![0, 1]])
            .unwrap();
        assert!(s.relation("R").unwrap().dense.is_none());
        assert!(s.relation("R").unwrap().contains(&[1, 2, 3, 4, 5]));
        assert!(!s.relation("R").unwrap().contains(&[1, 2, 3, 4, 6]));
        assert!(s.relation("E").unwrap().contains(&[0, 1]));
        assert!(!s.relation("E").unwrap().contains(&[1, 0]));
    }
}
