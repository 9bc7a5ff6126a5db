//! Weighted higher-order reduced Bergman kernels on planar circle domains.
//!
//! Three independent routes to the same numbers: closed forms on the disc,
//! Gram-matrix series over a truncated basis, and a constrained least-norm
//! solve. The experiment harness uses them to probe convergence under
//! domain exhaustion, localization near the boundary, and boundary
//! asymptotics.

pub mod basis;
pub mod error;
pub mod experiments;
pub mod extremal;
pub mod geometry;
pub mod kernel;
pub mod quadrature;
pub mod transform;
pub mod weight;

pub use error::{Error, Result};
pub use geometry::{BoundaryComponent, CircleDomain, CirclePoint, DefiningFunction, Disc, Lens};
pub use weight::Weight;
