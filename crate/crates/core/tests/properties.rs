//! Property-based invariants.

use std::f64::consts::PI;

use proptest::prelude::*;

use spinmeter::analytic::{ring_density, ring_spinor, PropagatorMatrix, RadialKernel};
use spinmeter::checkerboard::run_walk;
use spinmeter::oracle::mode_exponential;
use spinmeter::specfun::{bessel_j01, j0, j1};
use spinmeter::variant::wrap_angle;
use spinmeter::{AngleSubstitution, HamiltonianVariant, MeasurementConfig, Pauli, Spinor};

fn variant() -> impl Strategy<Value = HamiltonianVariant> {
    prop::sample::select(HamiltonianVariant::ALL.to_vec())
}

fn substitution() -> impl Strategy<Value = AngleSubstitution> {
    prop::sample::select(AngleSubstitution::CANDIDATES.to_vec())
}

fn same_angle(a: f64, b: f64) -> bool {
    let d = (a - b).rem_euclid(2.0 * PI);
    d < 1e-12 || 2.0 * PI - d < 1e-12
}

proptest! {
    #[test]
    fn wrap_angle_lands_in_range(t in -1e3f64..1e3) {
        let w = wrap_angle(t);
        prop_assert!((-PI..PI).contains(&w));
        prop_assert!(same_angle(w, t));
    }

    #[test]
    fn substitutions_invert(s in substitution(), t in -PI..PI) {
        prop_assert!(same_angle(s.invert(s.apply(t)), t));
    }

    #[test]
    fn bessel_bounds_and_derivative(z in 0.0f64..500.0) {
        let (a, b) = bessel_j01(z);
        prop_assert!(a.abs() <= 1.0 && b.abs() <= 0.582);
        // J0' = −J1
        let h = 1e-4;
        let d = (j0(z + h) - j0(z - h)) / (2.0 * h);
        prop_assert!((d + j1(z)).abs() < 1e-7);
    }

    #[test]
    fn bloch_states_are_normalized(polar in 0.0..PI, az in -PI..PI) {
        let s = Spinor::from_bloch(polar, az);
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-14);
        let [x, y, z] = s.bloch();
        prop_assert!(((x * x + y * y + z * z) - 1.0).abs() < 1e-13);
        prop_assert!((z - polar.cos()).abs() < 1e-13);
    }

    #[test]
    fn mode_propagators_are_unitary(v in variant(), kx in -500.0f64..500.0, ky in -500.0f64..500.0, lam in 0.0f64..1.0) {
        let c = MeasurementConfig::dimensionless(0.1, Some(lam), v).unwrap();
        prop_assert!(mode_exponential(kx, ky, &c).unitarity_defect() < 1e-13);
    }

    #[test]
    fn kernel_density_is_bounded(a in -3.0f64..3.0, b in -3.0f64..3.0, t in -PI..PI, polar in 0.0..PI, az in -PI..PI) {
        let eta = Spinor::from_bloch(polar, az);
        let p = PropagatorMatrix::from_radial(RadialKernel { u11: a, u12: b }, t);
        prop_assert_eq!(p.hermiticity_defect(), 0.0);
        let rho = p.apply(&eta).norm_sqr();
        prop_assert!(rho <= (a.abs() + b.abs()).powi(2) * (1.0 + 1e-12));
        prop_assert!(rho >= (a.abs() - b.abs()).powi(2) * (1.0 - 1e-12) - 1e-15);
    }

    #[test]
    fn ring_density_matches_ring_spinor(f in -2.0f64..2.0, t in -PI..PI, polar in 0.0..PI, az in -PI..PI) {
        let eta = Spinor::from_bloch(polar, az);
        let rho = ring_density(&eta, f, t);
        prop_assert!((ring_spinor(&eta, f, t).norm_sqr() - rho).abs() < 1e-12 * (1.0 + f * f));
        prop_assert!(rho >= 0.0 && rho <= 4.0 * f * f + 1e-15);
    }

    #[test]
    fn walks_conserve_norm_and_amplitude_sum(v in variant(), l in 1usize..48, polar in 0.0..PI, az in -PI..PI) {
        let eta = Spinor::from_bloch(polar, az);
        let c = MeasurementConfig::dimensionless(0.1, None, v).unwrap();
        let w = run_walk(&eta, l, &c).unwrap();
        prop_assert!((w.norm_sqr() - 1.0).abs() < 1e-13);
        prop_assert!((w.amplitude_sum() - eta).norm_sqr() < 1e-26);
        // ⟨σ⟩ summed over sites is not conserved, but its length is bounded by the norm
        let sx: f64 = w.sites().map(|(_, _, a)| a.expectation(Pauli::X)).sum();
        prop_assert!(sx.abs() <= 1.0 + 1e-12);
    }
}
