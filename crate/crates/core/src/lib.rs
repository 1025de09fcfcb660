//! Constructive uniform approximation on all of ℝⁿ.
//!
//! One- and two-layer ridge networks with certified sup-norm error over the
//! whole noncompact domain, plus numerical checks of the structural results
//! behind them: rotational ridge integrals and their Riemann sums, tensor and
//! generator lifting, wedge-function compilation, ray-limit separation and the
//! vanishing identity for ridge sums.

pub mod activation;
pub mod certify;
pub mod chebyshev;
pub mod error;
pub mod lift;
pub mod network;
pub mod pwl;
pub mod quad;
pub mod radon;
pub mod ridge2d;
pub mod separation;
pub mod synth;
pub mod wedge;

pub use activation::{Activation, Asymptotics};
pub use certify::{SupNormCertificate, TailBound};
pub use error::{Error, Result};
pub use network::Network;
pub use pwl::PiecewiseLinear;
