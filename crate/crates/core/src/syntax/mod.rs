//! Formula syntax: AST, grammar, printing and shape classification.

mod ast;
mod classify;
mod parse;
mod print;
mod transform;

pub use ast::{CountMode, Formula, Signature, Term, Var, VarTuple, RESERVED};
pub use classify::{
    class_tags, classify, is_partial_equality_diagram, ClassTag, PartialEqualityDiagram,
    PreferredFormula,
};
pub use parse::{parse, ParseError, ParseErrorKind};
pub use print::print;
pub use transform::{
    expand_counting, proper_partitions, rename_free, rename_vars, simplify, substitute, FreshNames,
    ProperPartition,
};


#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SyntaxError {
    #[error("variable {0} occurs twice in a tuple")]
    DuplicateVariable(Var),
    #[error("{0:?} is not a valid variable name")]
    InvalidVariable(String),
    #[error("{0:?} is not a valid symbol")]
    InvalidSymbol(String),
    #[error("relation {0} must have positive arity")]
    ZeroArity(String),
    #[error("symbol {0} declared twice")]
    DuplicateSymbol(String),
    #[error("unknown relation {0}")]
    UnknownRelation(String),
    #[error("unknown constant @{0}")]
    UnknownConstant(String),
    #[error("relation {relation} has arity {expected} but is applied to {found} terms")]
    ArityMismatch { relation: String, expected: usize, found: usize },
    #[error("cannot substitute for {0}: it is bound in the formula")]
    SubstituteBound(Var),
    #[error("cannot substitute variable {1} for {0}: only literals and constants")]
    NonGroundSubstitution(Var, Var),
    #[error("{0} is not a partial equality diagram")]
    NotEqualityDiagram(String),
    #[error("not a preferred formula: {0}")]
    NotPreferred(String),
}
