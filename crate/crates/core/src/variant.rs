//! The four linear spin-orbit couplings `α(p_x σ_γ ± p_y σ_δ)` and the angle
//! substitution that relates each of them to the isotropic `p·σ` coupling.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use crate::error::Error;
use crate::spin::{Matrix2, Pauli};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum HamiltonianVariant {
    /// `p_x σ_x + p_y σ_y` (texture a).
    #[default]
    XxPlusYy,
    /// `p_x σ_y + p_y σ_x` (texture b).
    XyPlusYx,
    /// `p_x σ_x - p_y σ_y` (texture c).
    XxMinusYy,
    /// `p_x σ_y - p_y σ_x` (texture d).
    XyMinusYx,
}

impl HamiltonianVariant {
    pub const ALL: [HamiltonianVariant; 4] = [
        HamiltonianVariant::XxPlusYy,
        HamiltonianVariant::XyPlusYx,
        HamiltonianVariant::XxMinusYy,
        HamiltonianVariant::XyMinusYx,
    ];

    /// The `(γ, δ, sign)` triple: the coupling is `p_x σ_γ + sign · p_y σ_δ`.
    pub fn coupling(self) -> (Pauli, Pauli, i8) {
        match self {
            HamiltonianVariant::XxPlusYy => (Pauli::X, Pauli::Y, 1),
            HamiltonianVariant::XyPlusYx => (Pauli::Y, Pauli::X, 1),
            HamiltonianVariant::XxMinusYy => (Pauli::X, Pauli::Y, -1),
            HamiltonianVariant::XyMinusYx => (Pauli::Y, Pauli::X, -1),
        }
    }

    /// Coefficients `(c_x, c_y)` of σx and σy in the coupling at momentum `(kx, ky)`.
    pub fn spin_vector(self, kx: f64, ky: f64) -> (f64, f64) {
        match self {
            HamiltonianVariant::XxPlusYy => (kx, ky),
            HamiltonianVariant::XyPlusYx => (ky, kx),
            HamiltonianVariant::XxMinusYy => (kx, -ky),
            HamiltonianVariant::XyMinusYx => (-ky, kx),
        }
    }

    /// Spin operators generating the x and y lattice shifts: `σ_γ` and `sign·σ_δ`.
    pub fn axis_operators(self) -> (Matrix2, Matrix2) {
        let (g, d, sign) = self.coupling();
        let y = d.matrix().scale(num_complex::Complex64::new(f64::from(sign), 0.0));
        (g.matrix(), y)
    }

    pub fn letter(self) -> char {
        match self {
            HamiltonianVariant::XxPlusYy => 'a',
            HamiltonianVariant::XyPlusYx => 'b',
            HamiltonianVariant::XxMinusYy => 'c',
            HamiltonianVariant::XyMinusYx => 'd',
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            HamiltonianVariant::XxPlusYy => "XX_plus_YY",
            HamiltonianVariant::XyPlusYx => "XY_plus_YX",
            HamiltonianVariant::XxMinusYy => "XX_minus_YY",
            HamiltonianVariant::XyMinusYx => "XY_minus_YX",
        }
    }

    fn index(self) -> usize {
        match self {
            HamiltonianVariant::XxPlusYy => 0,
            HamiltonianVariant::XyPlusYx => 1,
            HamiltonianVariant::XxMinusYy => 2,
            HamiltonianVariant::XyMinusYx => 3,
        }
    }
}

impl fmt::Display for HamiltonianVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for HamiltonianVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let v = match s.trim() {
            "a" | "XX_plus_YY" => HamiltonianVariant::XxPlusYy,
            "b" | "XY_plus_YX" => HamiltonianVariant::XyPlusYx,
            "c" | "XX_minus_YY" => HamiltonianVariant::XxMinusYy,
            "d" | "XY_minus_YX" => HamiltonianVariant::XyMinusYx,
            other => return Err(Error::Domain(format!("variant must be one of a, b, c, d (got {other:?})"))),
        };
        Ok(v)
    }
}

/// Replacement of the polar angle θ that maps the `p·σ` kernel onto another coupling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AngleSubstitution {
    /// θ
    Identity,
    /// −θ
    Negate,
    /// π/2 + θ
    QuarterPlus,
    /// π/2 − θ
    QuarterMinus,
}

impl AngleSubstitution {
    pub const CANDIDATES: [AngleSubstitution; 4] = [
        AngleSubstitution::Identity,
        AngleSubstitution::Negate,
        AngleSubstitution::QuarterPlus,
        AngleSubstitution::QuarterMinus,
    ];

    pub fn apply(self, theta: f64) -> f64 {
        let t = match self {
            AngleSubstitution::Identity => theta,
            AngleSubstitution::Negate => -theta,
            AngleSubstitution::QuarterPlus => FRAC_PI_2 + theta,
            AngleSubstitution::QuarterMinus => FRAC_PI_2 - theta,
        };
        wrap_angle(t)
    }

    pub fn invert(self, theta: f64) -> f64 {
        let t = match self {
            AngleSubstitution::QuarterPlus => theta - FRAC_PI_2,
            // the other three are involutions
            s => return s.apply(theta),
        };
        wrap_angle(t)
    }
}

/// Substitution table, indexed in `HamiltonianVariant::ALL` order. Fixed by
/// matching the spectral propagator's spin field on the ring for every
/// variant; `oracle::fix_variant_table` regenerates it.
pub const VARIANT_TABLE: [AngleSubstitution; 4] = [
    AngleSubstitution::Identity,
    AngleSubstitution::QuarterMinus,
    AngleSubstitution::Negate,
    AngleSubstitution::QuarterPlus,
];

pub fn substitution(variant: HamiltonianVariant) -> AngleSubstitution {
    VARIANT_TABLE[variant.index()]
}

/// Angle θ' such that the `variant` propagator at θ equals the `p·σ`
/// propagator at θ'. The result is wrapped into [−π, π).
pub fn variant_angle_map(theta: f64, variant: HamiltonianVariant) -> f64 {
    substitution(variant).apply(theta)
}

pub fn variant_angle_unmap(theta: f64, variant: HamiltonianVariant) -> f64 {
    substitution(variant).invert(theta)
}

/// Wraps into [−π, π).
pub fn wrap_angle(theta: f64) -> f64 {
    if (-PI..PI).contains(&theta) {
        return theta;
    }
    let t = (theta + PI).rem_euclid(2.0 * PI) - PI;
    if t >= PI {
        t - 2.0 * PI
    } else {
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn angle_close(a: f64, b: f64, tol: f64) -> bool {
        wrap_angle(a - b).abs() < tol
    }

    #[test]
    fn identity_variant_keeps_angle() {
        assert_eq!(variant_angle_map(0.3, HamiltonianVariant::XxPlusYy), 0.3);
    }

    #[test]
    fn map_then_unmap_is_identity() {
        for v in HamiltonianVariant::ALL {
            for i in 0..50 {
                let t = -PI + 2.0 * PI * f64::from(i) / 50.0;
                let back = variant_angle_unmap(variant_angle_map(t, v), v);
                assert!(angle_close(back, t, 1e-14), "{v} {t} {back}");
            }
        }
    }

    #[test]
    fn triples_are_distinct() {
        let mut seen = std::collections::HashSet::new();
        for v in HamiltonianVariant::ALL {
            assert!(seen.insert(v.coupling()));
            assert_eq!(v.letter().to_string().parse::<HamiltonianVariant>().unwrap(), v);
            assert_eq!(v.name().parse::<HamiltonianVariant>().unwrap(), v);
        }
        assert!("e".parse::<HamiltonianVariant>().is_err());
    }

    #[test]
    fn spin_vector_matches_coupling_triple() {
        let (kx, ky) = (0.7, -1.3);
        for v in HamiltonianVariant::ALL {
            let (g, d, s) = v.coupling();
            let mut c = [0.0; 2];
            let slot = |p: Pauli| if p == Pauli::X { 0 } else { 1 };
            c[slot(g)] += kx;
            c[slot(d)] += f64::from(s) * ky;
            assert_eq!(v.spin_vector(kx, ky), (c[0], c[1]));
        }
    }

    #[test]
    fn wrap_range() {
        for t in [-7.0, -PI, 0.0, PI, 3.5, 100.0] {
            let w = wrap_angle(t);
            assert!((-PI..PI).contains(&w), "{t} -> {w}");
            assert!(((w - t) / (2.0 * PI)).fract().abs() < 1e-12 || ((w - t) / (2.0 * PI)).fract().abs() > 1.0 - 1e-12);
        }
    }
}
