//! Stäckel systems attached to spectral curves, symbolic jets of their
//! solutions, and matching of prescribed jets by finite-gap solutions of
//! Benenti-Kruskal-Magri type equations.

pub mod algebra;
pub mod cli;
pub mod combinat;
pub mod error;
pub mod fixtures;
pub mod grading;
pub mod jet_match;
pub mod jets;
pub mod odesim;
pub mod reduction;
pub mod series;
pub mod stackel;
pub mod tape;

pub use error::{Error, Result};
