//! Standard and modified geometric quantization of natural mechanical systems
//! on Riemannian coordinate charts.
//!
//! The crate is layered bottom-up:
//!
//! - [`expr`]: symbolic scalar expressions and the randomized equivalence oracle;
//! - [`geometry`]: metric charts, Christoffel symbols, scalar curvature,
//!   divergence, half-form derivatives and the (Bochner) Laplacian;
//! - [`operator`]: order-≤2 differential operators with symbolic coefficients;
//! - [`quantization`]: observables affine in the momenta, their bracket, and
//!   quantum operators under the standard and modified schemes;
//! - [`verification`]: commutator, symmetry and curvature-shift checks;
//! - [`spectral`]: finite-difference discretization and dense eigenvalues;
//! - [`io`]: JSON manifests, reports and the command-line driver.

pub mod expr;
pub mod geometry;
pub mod operator;
pub mod quantization;
pub mod verification;
pub mod spectral;
pub mod io;
