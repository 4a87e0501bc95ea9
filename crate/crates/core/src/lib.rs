//! Bounds on the structured singular value μ, with support for repeated
//! complex full-block uncertainty `I_v ⊗ Δ1`.
//!
//! * [`lower`]: power iterations returning a destabilizing perturbation.
//! * [`upper`]: D-scale bounds (Osborne, method of centers, GenOsborne).
//! * [`sweep`]: frequency responses and parallel sweeps over `ω`.
//! * [`io`] and [`cli`]: file formats and the `ssv` binary.

pub mod cli;
pub mod error;
pub mod io;
pub mod linalg;
pub mod lower;
pub mod structure;
pub mod sweep;
pub mod upper;

pub use error::{Result, SsvError};
pub use linalg::{CMatrix, CVector, ComplexMatrix};
pub use structure::{Block, BlockStructure, Perturbation, RepeatedShape};
