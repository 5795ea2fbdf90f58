//! Numerical toolkit for spline projections on interval filtrations of
//! `[0, 1]`, positive dominating kernels and martingale square-function
//! inequalities for spline sequences.

pub mod banded;
pub mod bspline;
pub mod gseq;
pub mod intervals;
pub mod kernel;
pub mod martingale;
pub mod partition;
pub mod piecewise;
pub mod poly;
pub mod projection;
pub mod quadrature;
pub mod remez;

pub use bspline::{build_basis, gamma_k, refine_coeffs, BSplineBasis, BSplineError, Spline};
pub use gseq::{build_g, greedy_phi, verify_g, GError, GSequence, PhiInstance};
pub use intervals::IntervalUnion;
pub use kernel::{build_t, KernelError, KernelOperator};
pub use martingale::{AdaptedSequence, DeltaSequence, MartingaleError};
pub use partition::{Filtration, Partition, PartitionError};
pub use piecewise::{PiecewiseError, PiecewisePolynomial, Polynomial};
pub use projection::{ProjectionError, Projector};
