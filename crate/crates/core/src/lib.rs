//! Finite frames, complex algebras and prime filter extensions for four
//! intuitionistic modal logics, with an audit harness for frame-class
//! closure properties.

pub mod algebra;
pub mod bits;
pub mod duality;
pub mod error;
pub mod frame;
pub mod harness;
pub mod json;
pub mod lattice;
pub mod limits;
pub mod order;
pub mod syntax;

pub use error::{Error, Result};
pub use limits::Limits;
pub use order::{Poset, PosetMap};
pub use syntax::{AxiomPair, Formula, Kind, Modality};
