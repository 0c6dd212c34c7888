//! Explicit ReLU network synthesis for functions on convex polytopes.
//!
//! The pipeline smooths a target with a Jackson-type kernel, expands it in a
//! tensor Chebyshev series on each parallelepiped of a covering, realizes the
//! series with intra-linked ReLU gadgets that vanish exactly outside their
//! piece, and glues the pieces with fast-decreasing masks. A verification
//! harness measures every error bound, support claim and modulus estimate.
//!
//! Modules, bottom-up:
//! - [`kernel`]: the Jackson kernel and its checks.
//! - [`chebseries`]: coefficient tensors and Clenshaw evaluation.
//! - [`netir`]: the network representation, composition and serialization.
//! - [`gadgets`]: sawtooth, squaring, product, power and Chebyshev gadgets.
//! - [`geometry`]: parallelepipeds, polytopes, coverings and moduli.
//! - [`compiler`]: piece compilation and gluing.
//! - [`verify`]: sup errors, decay fits, support checks and bound tables.

pub mod chebseries;
pub mod compiler;
pub mod error;
pub mod functions;
pub mod gadgets;
pub mod geometry;
pub mod kernel;
pub mod netir;
pub mod sampling;
pub mod verify;

pub use chebseries::{ChebTensor, CoeffPath};
pub use compiler::{CompileParams, CompileReport, Path};
pub use error::{Error, Result};
pub use functions::{FunctionSpec, TargetFn};
pub use geometry::{Covering, Domain, Parallelepiped, Polytope};
pub use kernel::JacksonKernel;
pub use netir::{ReluNetwork, SizeReport};
