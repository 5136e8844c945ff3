//! Tensor-product cubature of volume potentials of `-Laplace + lambda^2`
//! over boxes in `R^n`.
//!
//! The density is quasi-interpolated by Gaussian-Laguerre basis functions
//! on a uniform grid. Potentials of the basis functions reduce to a single
//! heat-time integral of a product of one-dimensional factors, which is
//! evaluated by a doubly-exponential trapezoidal rule. For separated
//! densities the cost is linear in the dimension.
//!
//! ```
//! use volpot::{BoxDomain, Cubature, ExtensionKind, Grid, LambdaSquared};
//! use volpot::{PolynomialOrder, Profile, QuadratureParams, test_density};
//!
//! let lambda2 = LambdaSquared::real(1.0).unwrap();
//! let density = test_density(Profile::CosSquared, lambda2, 3);
//! let cubature = Cubature::new(
//!     BoxDomain::cube(3, -1.0, 1.0).unwrap(),
//!     Grid::isotropic(3, 0.1, 4.0, 6.0).unwrap(),
//!     PolynomialOrder::new(3).unwrap(),
//!     lambda2,
//!     QuadratureParams::three_dimensional(),
//!     ExtensionKind::None,
//! )
//! .unwrap();
//! let value = cubature.evaluate(&density, &[3, 3, 0]).unwrap().total;
//! let exact = Profile::CosSquared.product(&[0.3, 0.3, 0.0]);
//! assert!((value.re - exact).abs() < 2e-4);
//! ```

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coeffquad;
pub mod cubature;
pub mod error;
mod exec;
pub mod extension;
pub mod oracle;
pub mod phi_kernel;
pub mod specfun;

pub use coeffquad::{LambdaSquared, NodeTable, QuadratureParams};
pub use cubature::{
    convergence_table, test_density, Assembly, BoxDomain, ConvergenceRow, Cubature,
    ExtensionKind, Grid, GridPartition, PotentialParts, SeparatedDensity, TableSetup,
};
pub use error::{Error, Result};
pub use exec::ExecutionMode;
pub use extension::HestenesScheme;
pub use oracle::Profile;
pub use phi_kernel::PhiKernel;
pub use specfun::PolynomialOrder;
