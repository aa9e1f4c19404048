//! Pulsed spin-orbit coupling as a joint pointer measurement of σx and σy.
//!
//! A spin-1/2 particle in a Gaussian wavepacket is exposed for a time `T` to
//! a linear coupling `α(p_x σ_γ ± p_y σ_δ)`. Its position then records the
//! time averages of the two spin components. Three independent routes
//! compute the final state:
//!
//! * [`analytic`]: the Bessel-integral kernel and its ring approximations,
//! * [`checkerboard`]: the Lie-Trotter lattice walk over spin histories,
//! * [`oracle`]: exact per-mode evolution on a periodic grid, with or
//!   without the kinetic term.
//!
//! Internally lengths are measured in `R_so = αT` and times in `T`.

pub mod analytic;
pub mod checkerboard;
pub mod config;
pub mod error;
pub mod oracle;
pub mod specfun;
pub mod spin;
pub mod variant;

pub use analytic::{ExactRoute, PolarGrid, PropagatorMatrix, RadialKernel, RadialProfile, Route, SpinDirection, SpinField};
pub use checkerboard::{LatticeState, SpinPath, TimeAverageBin};
pub use config::{Mass, MeasurementConfig, Preset};
pub use error::{Error, Result};
pub use oracle::{ModePropagator, SpectralGrid, SpinorField};
pub use specfun::QuadratureSpec;
pub use spin::{Matrix2, Pauli, Spinor};
pub use variant::{AngleSubstitution, HamiltonianVariant};
