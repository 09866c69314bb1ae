//! Caching of integer linear constraint solutions by logical implication.

pub mod canon;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod expr;
pub mod gen;
pub mod imply;
pub mod ltrie;
pub mod pipeline;
pub mod query;
pub mod reduce;
pub mod solve;

pub use error::{Error, Result};
