//! absorbtk-core: a finite-truncation laboratory for absorption of countably
//! generated operator modules, with derivations.
//!
//! The toolkit realises, at matrix truncation, the chain
//!
//! ```text
//! generators -> Gram operator G -> resolvent chain G_n -> isometry W
//!            -> regulariser K -> Grassmann connection -> symmetric lifts
//! ```
//!
//! together with the quantitative checks that survive discretisation:
//! telescoping identities, the 1/N isometry-defect law, derivative decay of
//! the chain, Leibniz/Hermitian residuals of the connection, and half-line
//! deficiency probes for the (non-)selfadjointness of lifted Dirac operators.

pub mod error;

pub mod matrix;

pub mod calculus;

pub mod block;

pub mod algebra;

pub mod presentation;

pub mod absorption;

pub mod connection;

pub mod lift;

pub mod halfline;

pub use error::{Error, Result};
pub use matrix::{C64, CMatrix};
