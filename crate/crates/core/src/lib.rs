//! Exact symbolic workbench for shifted-symplectic Darboux models.
//!
//! The crate implements, over exact rational (or Gaussian rational)
//! arithmetic: free graded-commutative algebras with Koszul signs, cdga
//! structure and morphisms, Kähler differentials with the de Rham
//! calculus, constructors and verifiers for Darboux-form symplectic data
//! and Lagrangian data over it, strict shifted Poisson and coisotropic
//! structures via polyvector fields and the Schouten bracket, pointwise
//! nondegeneracy by exact rank computation, and the normalization pass
//! that brings gauge-obfuscated Lagrangian data into Darboux form with a
//! homotopy certificate.

pub mod cdga;
pub mod darboux;
pub mod derham;
pub mod element;
pub mod error;
pub mod generate;
pub mod instance;
pub mod lagrangian;
pub mod linalg;
pub mod parse;
pub mod pointcheck;
pub mod poisson;
pub mod report;
pub mod scalar;
pub mod table;

pub use element::GradedElement;
pub use error::Error;
pub use scalar::{Field, Scalar};
pub use table::{GenId, GenSpec, Table};
