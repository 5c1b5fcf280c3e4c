//! Exact invariants of modules over the local rings of primitive multiple
//! curves, k[[x]][z]/(z^n), together with global descriptor calculators.

pub mod deform;
pub mod descriptors;
pub mod error;
pub mod field;
pub mod filtrations;
pub mod homology;
pub mod job;
pub mod lattice;
pub mod linalg;
pub mod module;
pub mod normal_forms;
pub mod ring;
pub mod sample;
pub mod series;

pub use error::{Error, Result};
pub use field::{Field, FieldSpec, Fp, Rationals};
