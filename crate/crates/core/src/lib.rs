//! Finite-scale machinery for the continuous reduction of `P3` into
//! `⋂_{p>a} ℓ^p ⊂ ℓ^q`.

pub mod construction;
pub mod error;
pub mod grid;
pub mod hierarchy;
pub mod reduction;
pub mod seqspace;
pub mod suite;
pub mod witness;

pub use error::{Error, Result};
