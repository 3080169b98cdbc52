//! Lyapunov functions and domain-of-attraction estimates for polynomial
//! discrete-time maps `x_{k+1} = f(x_k)` with an asymptotically stable
//! fixed point.
//!
//! The crate builds the function `V(x) = Σₖ ‖fᵏ(x)‖²`, which solves
//! `V(f(x)) − V(x) = −‖x‖²` with `V(0) = 0`, in two independent ways (orbit
//! sums with certified tails, and a truncated power series), classifies
//! points with a certified orbit oracle, and extracts sublevel-set estimates
//! of the basin.

pub mod cli;
pub mod error;
pub mod estimator;
pub mod examples;
pub mod io;
pub mod linalg;
pub mod lyapunov;
pub mod map;
pub mod poly;
pub mod spectral;
pub mod sum;
pub mod verify;

pub use error::{Error, Result};
pub use linalg::Matrix;
pub use lyapunov::{orbit_sum, series_eval, series_solve, LyapunovSeries, OrbitSumValue};
pub use map::{Orbit, OrbitConfig, PolyMap, Termination};
pub use poly::{HomogeneousSlice, Monomial, Poly};
pub use spectral::{assemble_spectral_info, SpectralConfig, SpectralInfo};
