//! Shared fixtures for the criterion benches.

use spinmeter::{HamiltonianVariant, MeasurementConfig};

/// Dimensionless configuration at `r0/R_so = q`, kinetic term neglected.
pub fn fixture(q: f64) -> MeasurementConfig {
    MeasurementConfig::dimensionless(q, None, HamiltonianVariant::XxPlusYy).expect("valid fixture")
}
