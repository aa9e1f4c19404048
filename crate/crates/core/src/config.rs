//! Measurement configuration, unit conventions and the named parameter presets.
//!
//! All quantities are in a unit system with ħ = 1. The numerical routes work in
//! dimensionless units where the maximal pointer shift `R_so = αT` and the
//! pulse duration are both 1; [`MeasurementConfig::to_dimensionless`] performs
//! the conversion, after which lengths are measured in units of `R_so` and the
//! kinetic term enters only through `T / (M R_so²)`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::variant::HamiltonianVariant;

/// ħ in erg·s.
pub const HBAR_CGS: f64 = 1.054_571_817e-27;

/// Particle mass. `Infinite` switches the kinetic term off exactly.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Mass {
    #[default]
    Infinite,
    Finite(f64),
}

impl Mass {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Mass::Infinite)
    }

    /// 1/M, zero for infinite mass.
    pub fn inverse(&self) -> f64 {
        match *self {
            Mass::Infinite => 0.0,
            Mass::Finite(m) => 1.0 / m,
        }
    }
}

impl fmt::Display for Mass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mass::Infinite => f.write_str("infinite"),
            Mass::Finite(m) => write!(f, "{m:e}"),
        }
    }
}

impl FromStr for Mass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("infinite") || s.eq_ignore_ascii_case("inf") {
            return Ok(Mass::Infinite);
        }
        let m: f64 = s.parse().map_err(|_| Error::domain(format!("mass must be a number or \"infinite\" (got {s:?})")))?;
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::domain(format!("mass must be positive and finite (got {m})")));
        }
        Ok(Mass::Finite(m))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementConfig {
    alpha: f64,
    duration: f64,
    r0: f64,
    mass: Mass,
    variant: HamiltonianVariant,
}

impl MeasurementConfig {
    pub fn new(alpha: f64, duration: f64, r0: f64, mass: Mass, variant: HamiltonianVariant) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::domain(format!("alpha must be finite and >= 0 (got {alpha})")));
        }
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(Error::domain(format!("pulse duration T must be finite and > 0 (got {duration})")));
        }
        if !(r0 > 0.0 && r0.is_finite()) {
            return Err(Error::domain(format!("Gaussian width r0 must be finite and > 0 (got {r0})")));
        }
        if let Mass::Finite(m) = mass {
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::domain(format!("mass must be positive and finite (got {m})")));
            }
        }
        Ok(MeasurementConfig { alpha, duration, r0, mass, variant })
    }

    /// Dimensionless configuration with `R_so = T = α = 1`.
    ///
    /// `kinetic` is `T/(M R_so²)`; `None` means infinite mass.
    pub fn dimensionless(r0_over_rso: f64, kinetic: Option<f64>, variant: HamiltonianVariant) -> Result<Self> {
        let mass = match kinetic {
            None => Mass::Infinite,
            Some(l) if l == 0.0 => Mass::Infinite,
            Some(l) if l > 0.0 && l.is_finite() => Mass::Finite(1.0 / l),
            Some(l) => return Err(Error::domain(format!("kinetic parameter must be >= 0 (got {l})"))),
        };
        MeasurementConfig::new(1.0, 1.0, r0_over_rso, mass, variant)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn mass(&self) -> Mass {
        self.mass
    }

    pub fn variant(&self) -> HamiltonianVariant {
        self.variant
    }

    /// The spin-orbit radius `R_so = α T`, the maximal pointer shift.
    pub fn rso(&self) -> f64 {
        self.alpha * self.duration
    }

    /// `r0 / R_so`; small values mean an accurate measurement.
    pub fn accuracy_ratio(&self) -> Option<f64> {
        (self.alpha > 0.0).then(|| self.r0 / self.rso())
    }

    pub fn with_variant(&self, variant: HamiltonianVariant) -> Self {
        MeasurementConfig { variant, ..*self }
    }

    pub fn with_mass(&self, mass: Mass) -> Self {
        MeasurementConfig { mass, ..*self }
    }

    /// `T / (M R_so²)`, zero for infinite mass.
    pub fn kinetic_parameter(&self) -> f64 {
        let r = self.rso();
        if r == 0.0 {
            return 0.0;
        }
        self.duration * self.mass.inverse() / (r * r)
    }

    /// Rescales lengths by `R_so` and times by `T`.
    pub fn to_dimensionless(&self) -> Result<Self> {
        let r = self.rso();
        if r == 0.0 {
            return Err(Error::domain("cannot scale by R_so = 0 (alpha = 0)"));
        }
        let kinetic = match self.mass {
            Mass::Infinite => None,
            Mass::Finite(_) => Some(self.kinetic_parameter()),
        };
        MeasurementConfig::dimensionless(self.r0 / r, kinetic, self.variant)
    }

    pub fn is_dimensionless(&self) -> bool {
        self.alpha == 1.0 && self.duration == 1.0
    }
}

/// The initial pointer amplitude `G(r) = √2/(√π r0) · exp(−r²/r0²)`.
pub fn gaussian_initial(r: f64, cfg: &MeasurementConfig) -> Result<f64> {
    gaussian_amplitude(r, cfg.r0())
}

pub fn gaussian_amplitude(r: f64, r0: f64) -> Result<f64> {
    if !(r0 > 0.0) {
        return Err(Error::domain(format!("Gaussian width must be > 0 (got {r0})")));
    }
    if !(r >= 0.0) {
        return Err(Error::domain(format!("radius must be >= 0 (got {r})")));
    }
    Ok(gaussian_amplitude_unchecked(r * r, r0))
}

#[inline]
pub(crate) fn gaussian_amplitude_unchecked(r_sq: f64, r0: f64) -> f64 {
    (2.0 / PI).sqrt() / r0 * (-r_sq / (r0 * r0)).exp()
}

/// `T / (r0² M)` in ħ = 1 units. Values well below one mean the kinetic
/// energy can be dropped during the pulse.
pub fn kinetic_neglect_ratio(cfg: &MeasurementConfig) -> f64 {
    cfg.duration() * cfg.mass().inverse() / (cfg.r0() * cfg.r0())
}

/// Named parameter sets quoted in CGS units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Preset {
    Semiconductor,
    /// Cold atoms; the pulse duration (seconds) is free within [1e-5, 1e-3].
    ColdAtom { duration: f64 },
}

/// CGS magnitudes of a preset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgsParameters {
    /// cm
    pub r0: f64,
    /// cm/s
    pub alpha: f64,
    /// g
    pub mass: f64,
    /// s
    pub duration: f64,
}

impl Preset {
    pub const COLD_ATOM_DURATION_RANGE: (f64, f64) = (1e-5, 1e-3);
    /// Default cold-atom pulse, giving r0/R_so = 0.02.
    pub const COLD_ATOM_DEFAULT_DURATION: f64 = 5e-4;

    pub fn cold_atom() -> Self {
        Preset::ColdAtom { duration: Self::COLD_ATOM_DEFAULT_DURATION }
    }

    pub fn cgs(&self) -> CgsParameters {
        match *self {
            Preset::Semiconductor => CgsParameters { r0: 1e-5, alpha: 1e6, mass: 1e-28, duration: 1e-11 },
            Preset::ColdAtom { duration } => CgsParameters { r0: 1e-4, alpha: 10.0, mass: 1e-22, duration },
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Semiconductor => "semiconductor",
            Preset::ColdAtom { .. } => "cold_atom",
        }
    }

    /// Configuration in ħ = 1 units: lengths in cm, times in s, and the mass
    /// expressed as `M/ħ` in s/cm².
    pub fn config(&self, variant: HamiltonianVariant) -> Result<MeasurementConfig> {
        if let Preset::ColdAtom { duration } = *self {
            let (lo, hi) = Self::COLD_ATOM_DURATION_RANGE;
            if !(lo..=hi).contains(&duration) {
                return Err(Error::domain(format!("cold_atom pulse duration must lie in [{lo:e}, {hi:e}] s (got {duration:e})")));
            }
        }
        let p = self.cgs();
        MeasurementConfig::new(p.alpha, p.duration, p.r0, Mass::Finite(p.mass / HBAR_CGS), variant)
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "semiconductor" => Ok(Preset::Semiconductor),
            "cold_atom" | "cold-atom" => Ok(Preset::cold_atom()),
            other => Err(Error::domain(format!("preset must be semiconductor or cold_atom (got {other:?})"))),
        }
    }
}
