//! Continuous wavelet analysis on the position-scale half-space.
//!
//! The crate has six parts:
//!
//! - [`wavelets`]: Fourier-defined analyzing wavelets, admissibility
//!   integrals, reconstruction wavelets and vanishing-moment checks.
//! - [`geometry`]: the non-Euclidean metric and group structure of the
//!   half-space, neighborhood families, the well-separation calculus and
//!   influence regions.
//! - [`engine`]: FFT-based analysis/synthesis, half-space convolution with
//!   tabulated kernels, cross kernels and Töplitz restriction operators.
//! - [`signals`]: deterministic generators for cusp-type test functions and
//!   probes.
//! - [`microlocal`]: parabolic paths, decay-exponent estimation and the
//!   directional classification built on top of the geometry.
//! - [`elliptic`]: the spectral Poisson solver, the scale-transfer identity
//!   and the regularity-gain experiment on cusp domains.

pub mod elliptic;
pub mod engine;
pub mod error;
pub mod fitting;
pub mod geometry;
pub mod grid;
pub mod io;
pub mod microlocal;
pub mod signals;
pub mod spectral;
pub mod wavelets;

pub use engine::{EngineOptions, HalfSpaceField, KernelField};
pub use error::{CoreError, Result};
pub use fitting::{DecayFit, FitOptions};
pub use geometry::{HalfSpacePoint, ParabolicPath, RasterMask, RegionMask, SampleLattice};
pub use grid::{GridMeta, GridSignal, ScaleGrid};
pub use microlocal::{ClassReport, ClassifyOptions};
pub use signals::CuspDomain;
pub use wavelets::{AdmissibilityProfile, ScaleQuadrature, WaveletSpec};
