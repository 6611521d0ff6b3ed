//! Mutual algebraicity checking and rewriting of first-order formulas into
//! positive combinations of preferred formulas, verified by brute force on
//! finite structures.

pub mod algebraicity;
pub mod cli;
pub mod corpus;
pub mod rewrite;
pub mod semantics;
pub mod syntax;
