//! Spatial and tonal data optimisation for PDE-based sparse inpainting.
//!
//! The library reconstructs signals and images from a small set of stored
//! pixels by solving diffusion-type boundary value problems, and optimises
//! both *where* those pixels sit (spatial optimisation) and *which values*
//! are stored there (tonal optimisation).
//!
//! Modules:
//! * [`grid`] — image/mask containers, error metrics, Gaussian smoothing, file I/O
//! * [`operators`] — discrete Laplacian, biharmonic and edge-enhancing
//!   diffusion operators with Neumann boundary handling
//! * [`inpaint`] — linear and nonlinear inpainting solvers and echoes
//! * [`spatial1d`] — free-knot optimisation for strictly convex 1D functions
//! * [`spatial2d`] — dithering, probabilistic sparsification, nonlocal pixel exchange
//! * [`tonal2d`] — grey value optimisation (direct, line search, FED, EED)
//! * [`pipeline`] — experiment orchestration and reporting
//!
//! Reconstruction errors are always evaluated on the raw (unclamped) solver
//! output; clamping to [0, 255] happens only when writing images for viewing.

pub mod error;
pub mod grid;
pub mod inpaint;
pub mod io;
pub mod operators;
mod par;
pub mod pipeline;
pub mod quadrature;
pub mod rng;
pub mod spatial1d;
pub mod spatial2d;
pub mod synth;
pub mod tonal2d;

#[doc(hidden)]
pub mod parbench;

pub use error::Error;
pub use grid::{Image, Mask, Seed};
pub use operators::{EedParams, OperatorKind, SparseOperator};
