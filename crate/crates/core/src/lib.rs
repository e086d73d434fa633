//! Maximum relative entropy updating of a multinomial model from observed
//! counts and a linear moment constraint, processed simultaneously.

pub mod cli;
pub mod comparator;
pub mod error;
pub mod model;
pub mod normalization;
pub mod oracle;
pub mod root;
pub mod solver;

pub use error::{Error, Result};
