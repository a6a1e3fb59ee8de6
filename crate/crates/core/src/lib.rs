//! Fx: System F with call-by-name exceptions, union and corruption types.

pub mod corpus;
pub mod eval;
pub mod generate;
pub mod model;
pub mod parser;
pub mod subtyping;
pub mod syntax;
pub mod typing;
