//! Numerical toolkit for the anisotropic heat operator `H = E - d/dt` and
//! its adjoint `H* = E + d/dt`, with `E u = sum a_hk u_{x_h x_k}`.
//!
//! * [`kernel`]: the fundamental solution `G`, conormal kernels, caloric
//!   exponentials and the elliptic kernel `s(x, y)`.
//! * [`poly`]: exact caloric polynomials `v_alpha`, `w_alpha`.
//! * [`geometry`]: cylinders `Omega x (0, T)` and their boundary quadrature.
//! * [`potentials`]: single/double layer and cap potentials, jump probes and
//!   representation-formula checks.
//! * [`trefftz`]: least-squares fitting of Dirichlet data by caloric
//!   polynomials.

pub mod error;
pub mod fd;
pub mod geometry;
pub mod kernel;
pub mod operator;
pub mod poly;
pub mod potentials;
pub mod quadrature;
pub mod trefftz;

pub use error::{CalorixError, Result};
pub use geometry::{build_mesh, CrossSection, CylinderMesh, Location, MeshResolution, Region};
pub use kernel::Operator;
pub use operator::{CoefficientMatrix, FrequencyVector, SpaceTimePoint};
pub use poly::{CaloricBasis, CaloricPolynomial, MultiIndex, Parity, Polynomial};
pub use trefftz::{BoundaryData, CaloricApproximant, StudyReport};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
