//! Numerical laboratory for the nodal sets of `u_t - Δu = w·∇u + vu` on the
//! flat torus with Gevrey-regular coefficients.
//!
//! The crate is organised bottom-up:
//!
//! * [`fourier`] truncated Fourier fields and the diagonal operators on them,
//! * [`gevrey`] synthesis and certification of coefficient fields,
//! * [`solver`] integrating-factor RK4 time stepping with diagnostics,
//! * [`nodal`] zero sets: 1D roots, 2D contour length, line probes, local `L²` ratios,
//! * [`certifier`] certified upper bounds on zero counts along segments,
//! * [`bounds`] closed-form bound evaluators and constant calibration,
//! * [`experiment`] sweeps, scaling fits and the verification suite.

// `!(x > 0.0)` is used on purpose: it rejects NaN along with the bad range.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod certifier;
pub mod error;
pub mod experiment;
pub mod fourier;
pub mod gevrey;
pub mod nodal;
pub mod solver;

pub use error::{Error, Result};
pub use fourier::{GridField, Mode, SpectralField};
