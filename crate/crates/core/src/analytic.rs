//! Closed-form propagator of the kinetic-free problem.
//!
//! With the kinetic term dropped the evolution operator is diagonal in
//! momentum and its position-space kernel is
//!
//! ```text
//! U11 = U22 = A(r),   U12 = e^{-iθ'} B(r),   U21 = e^{iθ'} B(r)
//! A(r) = r0/√(2π) ∫ exp(-k²r0²/4) cos(R k) J0(k r) k dk
//! B(r) = r0/√(2π) ∫ exp(-k²r0²/4) sin(R k) J1(k r) k dk
//! ```
//!
//! where `R = αT` and θ' is the polar angle after the variant substitution.
//! For `r0 ≪ R` both radial functions collapse onto a single ring profile
//! `F(r)`, available here in an asymptotic form and a convolution form.

use std::f64::consts::{FRAC_PI_4, PI};

use num_complex::Complex64;

use crate::config::MeasurementConfig;
use crate::error::{Error, Result};
use crate::specfun::{bessel_j01, damped_integral_n, finite_integral_n, gauss_legendre, Endpoint, QuadratureSpec};
use crate::spin::{Matrix2, Pauli, Spinor};
use crate::variant::variant_angle_map;

/// Spin directions are not reported where the density falls below this
/// fraction of its peak.
pub const DIRECTION_FLOOR: f64 = 1e-12;

/// Above this `r0/R_so` the ring forms of F are outside their regime.
pub const ASYMPTOTIC_REGIME_LIMIT: f64 = 0.1;

/// Radial window, in units of `R_so`, searched for the spin-reversal dip.
pub const RESONANCE_WINDOW: (f64, f64) = (0.5, 1.4);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Route {
    /// Full Bessel-integral kernel.
    #[default]
    Exact,
    /// Ring form with the convolution profile F.
    Asymptotic,
}

impl std::str::FromStr for Route {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Route::Exact),
            "asymptotic" => Ok(Route::Asymptotic),
            _ => Err(Error::domain(format!("route must be exact or asymptotic (got {s:?})"))),
        }
    }
}

/// The two real radial functions `A = U11` and `B = |U12|` (signed).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RadialKernel {
    pub u11: f64,
    pub u12: f64,
}

fn check_radius(r: f64) -> Result<()> {
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::domain(format!("radius must be finite and >= 0 (got {r})")));
    }
    Ok(())
}

fn kernel_prefactor(r0: f64) -> f64 {
    r0 / (2.0 * PI).sqrt()
}

fn oscillation_scales(rso: f64, r: f64) -> Vec<f64> {
    [rso, r].iter().filter(|x| **x > 0.0).map(|x| 2.0 * PI / x).collect()
}

/// Both radial kernel functions from one quadrature pass.
pub fn radial_kernel(r: f64, cfg: &MeasurementConfig, spec: &QuadratureSpec) -> Result<RadialKernel> {
    check_radius(r)?;
    let (r0, rso) = (cfg.r0(), cfg.rso());
    let c = kernel_prefactor(r0);
    let integrand = |k: f64| {
        let (s, co) = (rso * k).sin_cos();
        let (j0, j1) = bessel_j01(k * r);
        let w = c * k * (-0.25 * k * k * r0 * r0).exp();
        [w * co * j0, w * s * j1]
    };
    let [a, b] = damped_integral_n(r0, &oscillation_scales(rso, r), Endpoint::Smooth, &integrand, spec)?;
    Ok(RadialKernel { u11: a.value, u12: b.value })
}

/// `U11(r) = U22(r)`.
pub fn u11_exact(r: f64, cfg: &MeasurementConfig, spec: &QuadratureSpec) -> Result<f64> {
    Ok(radial_kernel(r, cfg, spec)?.u11)
}

/// Real radial factor of `U12`, i.e. `U12 e^{iθ'}`.
pub fn u12_radial(r: f64, cfg: &MeasurementConfig, spec: &QuadratureSpec) -> Result<f64> {
    Ok(radial_kernel(r, cfg, spec)?.u12)
}

/// `U12(r, θ)` including the variant-mapped phase `e^{-iθ'}`.
pub fn u12_exact(r: f64, theta: f64, cfg: &MeasurementConfig, spec: &QuadratureSpec) -> Result<Complex64> {
    let b = u12_radial(r, cfg, spec)?;
    let t = variant_angle_map(theta, cfg.variant());
    Ok(Complex64::from_polar(1.0, -t) * b)
}

/// The 2×2 position-space kernel at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagatorMatrix {
    pub u11: Complex64,
    pub u12: Complex64,
    pub u21: Complex64,
    pub u22: Complex64,
}

impl PropagatorMatrix {
    /// Assembles the kernel from its radial parts; `mapped_theta` is the
    /// angle after the variant substitution.
    pub fn from_radial(k: RadialKernel, mapped_theta: f64) -> Self {
        let (s, c) = mapped_theta.sin_cos();
        let a = Complex64::new(k.u11, 0.0);
        PropagatorMatrix {
            u11: a,
            u12: Complex64::new(k.u12 * c, -k.u12 * s),
            u21: Complex64::new(k.u12 * c, k.u12 * s),
            u22: a,
        }
    }

    pub fn matrix(&self) -> Matrix2 {
        Matrix2::new([[self.u11, self.u12], [self.u21, self.u22]])
    }

    pub fn apply(&self, eta: &Spinor) -> Spinor {
        self.matrix().apply(eta)
    }

    /// Largest violation of `u11 = u22` real and `u12 = conj(u21)`.
    pub fn hermiticity_defect(&self) -> f64 {
        let d1 = (self.u11 - self.u22).norm().max(self.u11.im.abs()).max(self.u22.im.abs());
        d1.max((self.u12 - self.u21.conj()).norm())
    }
}

pub fn propagator(r: f64, theta: f64, cfg: &MeasurementConfig, spec: &QuadratureSpec) -> Result<PropagatorMatrix> {
    let k = radial_kernel(r, cfg, spec)?;
    Ok(PropagatorMatrix::from_radial(k, variant_angle_map(theta, cfg.variant())))
}

fn ring_checks(cfg: &MeasurementConfig) -> Result<()> {
    if cfg.rso() <= 0.0 {
        return Err(Error::domain("the ring profile needs R_so > 0"));
    }
    if let Some(q) = cfg.accuracy_ratio() {
        // once per process: ring profiles are evaluated point by point
        static WARNED: std::sync::Once = std::sync::Once::new();
        if q > ASYMPTOTIC_REGIME_LIMIT {
            WARNED.call_once(|| log::warn!("r0/R_so = {q} is outside the asymptotic regime (> {ASYMPTOTIC_REGIME_LIMIT})"));
        }
    }
    Ok(())
}

/// Ring profile from the large-argument Bessel asymptotes:
/// `F = r0/(2π√R) ∫ exp(-k²r0²/4) cos[(r-R)k - π/4] √k dk`.
pub fn f_asymptotic(r: f64, cfg: &MeasurementConfig, spec: &QuadratureSpec) -> Result<f64> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::domain(format!("radius must be finite and > 0 (got {r})")));
    }
    ring_checks(cfg)?;
    let (r0, rso) = (cfg.r0(), cfg.rso());
    let d = r - rso;
    let c = r0 / (2.0 * PI * rso.sqrt());
    let integrand = |k: f64| [c * k.sqrt() * (-0.25 * k * k * r0 * r0).exp() * (d * k - FRAC_PI_4).cos()];
    let scales = if d != 0.0 { vec![2.0 * PI / d.abs()] } else { Vec::new() };
    let [e] = damped_integral_n(r0, &scales, Endpoint::SqrtSingular, &integrand, spec)?;
    Ok(e.value)
}

/// Ring profile as a smoothed derivative of the `(R - r')^{-1/2}` shell:
///
/// `F = 2/(π R^{3/2} r0²) ∫_0^{√R} (R - u²)(r - R + u²) exp[-(r - R + u²)²/r0²] du`,
///
/// which is `-(1/(2πR^{3/2})) ∂_r ∫_0^R r' e^{-(r-r')²/r0²} (R-r')^{-1/2} dr'`
/// after `u = √(R - r')`.
pub fn f_convolution(r: f64, cfg: &MeasurementConfig, spec: &QuadratureSpec) -> Result<f64> {
    check_radius(r)?;
    ring_checks(cfg)?;
    let (r0, rso) = (cfg.r0(), cfg.rso());
    let c = 2.0 / (PI * rso.powf(1.5) * r0 * r0);
    let integrand = |u: f64| {
        let u2 = u * u;
        let s = r - rso + u2;
        [c * (rso - u2) * s * (-(s * s) / (r0 * r0)).exp()]
    };
    let panels = ((2.0 * rso / r0).ceil() as usize).max(4);
    let [e] = finite_integral_n(&integrand, 0.0, rso.sqrt(), panels, spec)?;
    Ok(e.value)
}

/// Final spinor `Ψ = U η` at `(r, θ)`.
pub fn evolve_spinor(
    eta: &Spinor,
    r: f64,
    theta: f64,
    cfg: &MeasurementConfig,
    route: Route,
    spec: &QuadratureSpec,
) -> Result<Spinor> {
    eta.validate_state()?;
    match route {
        Route::Exact => Ok(propagator(r, theta, cfg, spec)?.apply(eta)),
        Route::Asymptotic => {
            let f = f_convolution(r, cfg, spec)?;
            Ok(ring_spinor(eta, f, variant_angle_map(theta, cfg.variant())))
        }
    }
}

/// `F (η1 + e^{-iθ}η2, e^{iθ}η1 + η2)`.
pub fn ring_spinor(eta: &Spinor, f: f64, mapped_theta: f64) -> Spinor {
    let e = Complex64::from_polar(1.0, mapped_theta);
    Spinor::new((eta.up + e.conj() * eta.down) * f, (e * eta.up + eta.down) * f)
}

/// `2F²(1 + n·σ)` with `n = (cos θ', sin θ')` and `σ` the in-plane Bloch
/// vector of `eta`.
pub fn ring_density(eta: &Spinor, f: f64, mapped_theta: f64) -> f64 {
    let (s, c) = mapped_theta.sin_cos();
    let proj = c * eta.expectation(Pauli::X) + s * eta.expectation(Pauli::Y);
    2.0 * f * f * (1.0 + proj)
}

/// Density of the ring form, identical to `|Ψ|²` of the asymptotic route.
pub fn density(eta: &Spinor, r: f64, theta: f64, cfg: &MeasurementConfig, spec: &QuadratureSpec) -> Result<f64> {
    eta.validate_state()?;
    let f = f_convolution(r, cfg, spec)?;
    Ok(ring_density(eta, f, variant_angle_map(theta, cfg.variant())))
}

/// In-plane spin direction `(σ̄x, σ̄y)` of a final spinor, or `None` where
/// the spinor is too small to carry one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpinDirection {
    Defined { sx: f64, sy: f64 },
    Undefined,
}

impl SpinDirection {
    pub fn from_spinor(psi: &Spinor, peak_density: f64) -> Self {
        let rho = psi.norm_sqr();
        if !(rho >= DIRECTION_FLOOR * peak_density) || rho == 0.0 {
            return SpinDirection::Undefined;
        }
        SpinDirection::Defined { sx: psi.expectation(Pauli::X) / rho, sy: psi.expectation(Pauli::Y) / rho }
    }

    pub fn components(&self) -> Option<(f64, f64)> {
        match *self {
            SpinDirection::Defined { sx, sy } => Some((sx, sy)),
            SpinDirection::Undefined => None,
        }
    }

    /// Projection onto the radial unit vector at `theta`.
    pub fn radial_projection(&self, theta: f64) -> Option<f64> {
        let (s, c) = theta.sin_cos();
        self.components().map(|(x, y)| x * c + y * s)
    }
}

/// Largest density `A² + B² + 2|AB| |σ_xy|` over the angle at radius r.
fn angular_peak(k: RadialKernel, eta: &Spinor) -> f64 {
    let b = eta.bloch();
    let inplane = b[0].hypot(b[1]);
    k.u11 * k.u11 + k.u12 * k.u12 + 2.0 * (k.u11 * k.u12).abs() * inplane
}

/// Peak of the exact-route density, from a radial scan around the ring.
pub fn peak_density(eta: &Spinor, cfg: &MeasurementConfig, spec: &QuadratureSpec) -> Result<f64> {
    let (r0, rso) = (cfg.r0(), cfg.rso());
    let lo = (rso - 6.0 * r0).max(0.0);
    let hi = rso + 6.0 * r0;
    let n = 120;
    let mut peak: f64 = 0.0;
    for i in 0..=n {
        let r = lo + (hi - lo) * i as f64 / n as f64;
        peak = peak.max(angular_peak(radial_kernel(r, cfg, spec)?, eta));
    }
    Ok(peak)
}

/// Final spin direction from the exact route.
pub fn spin_direction(
    eta: &Spinor,
    r: f64,
    theta: f64,
    cfg: &MeasurementConfig,
    spec: &QuadratureSpec,
) -> Result<SpinDirection> {
    let psi = evolve_spinor(eta, r, theta, cfg, Route::Exact, spec)?;
    Ok(SpinDirection::from_spinor(&psi, peak_density(eta, cfg, spec)?))
}

/// Projection of the final spin on the radial direction along θ = 0. For
/// z-polarized states the result does not depend on the angle.
pub fn sigma_v_projection(eta: &Spinor, r: f64, cfg: &MeasurementConfig, spec: &QuadratureSpec) -> Result<Option<f64>> {
    Ok(spin_direction(eta, r, 0.0, cfg, spec)?.radial_projection(0.0))
}

/// Samples of a ring profile on a radial grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    radii: Vec<f64>,
    values: Vec<f64>,
}

impl RadialProfile {
    pub fn new(radii: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if radii.len() != values.len() {
            return Err(Error::domain("radii and values differ in length"));
        }
        if radii.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain("radii must be strictly increasing"));
        }
        Ok(RadialProfile { radii, values })
    }

    /// Evaluates `f` on every radius.
    pub fn sample(radii: Vec<f64>, f: impl Fn(f64) -> Result<f64>) -> Result<Self> {
        let values = radii.iter().map(|&r| f(r)).collect::<Result<Vec<_>>>()?;
        RadialProfile::new(radii, values)
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Cubic interpolation between samples; `None` outside the sampled range
    /// or with fewer than four samples.
    pub fn interpolate(&self, r: f64) -> Option<f64> {
        lagrange4(&self.radii, r).map(|(s, w)| (0..4).map(|j| w[j] * self.values[s + j]).sum())
    }

    /// Radii where the samples change sign, located by linear interpolation.
    pub fn zero_crossings(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for i in 1..self.radii.len() {
            let (v0, v1) = (self.values[i - 1], self.values[i]);
            if v0 == 0.0 && i > 1 {
                continue;
            }
            if v0 == 0.0 {
                out.push(self.radii[i - 1]);
            } else if v0 * v1 < 0.0 {
                let t = v0 / (v0 - v1);
                out.push(self.radii[i - 1] + t * (self.radii[i] - self.radii[i - 1]));
            }
        }
        out
    }

    pub fn argmax(&self) -> Option<(f64, f64)> {
        self.extreme(|a, b| a > b)
    }

    pub fn argmin(&self) -> Option<(f64, f64)> {
        self.extreme(|a, b| a < b)
    }

    fn extreme(&self, better: impl Fn(f64, f64) -> bool) -> Option<(f64, f64)> {
        let mut best: Option<(f64, f64)> = None;
        for (&r, &v) in self.radii.iter().zip(&self.values) {
            if best.map_or(true, |(_, b)| better(v, b)) {
                best = Some((r, v));
            }
        }
        best
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Restriction to `lo <= r <= hi`.
    pub fn window(&self, lo: f64, hi: f64) -> RadialProfile {
        let (radii, values) = self.radii.iter().zip(&self.values).filter(|(r, _)| **r >= lo && **r <= hi).map(|(r, v)| (*r, *v)).unzip();
        RadialProfile { radii, values }
    }

    /// `max |self - other|` over shared radii.
    pub fn max_abs_diff(&self, other: &RadialProfile) -> Result<f64> {
        if self.radii != other.radii {
            return Err(Error::domain("profiles are sampled on different radii"));
        }
        Ok(self.values.iter().zip(&other.values).fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }
}

/// First node and weights of the 4-point Lagrange stencil around `r`, or
/// `None` outside `[radii[0], radii[n-1]]`.
fn lagrange4(radii: &[f64], r: f64) -> Option<(usize, [f64; 4])> {
    let n = radii.len();
    if n < 4 || !(r >= radii[0]) || r > radii[n - 1] {
        return None;
    }
    let i = radii.partition_point(|&x| x <= r).clamp(1, n - 1) - 1;
    let s = i.saturating_sub(1).min(n - 4);
    let xs = &radii[s..s + 4];
    let mut w = [0.0; 4];
    for j in 0..4 {
        let mut l = 1.0;
        for m in 0..4 {
            if m != j {
                l *= (r - xs[m]) / (xs[j] - xs[m]);
            }
        }
        w[j] = l;
    }
    Some((s, w))
}

/// `n + 1` equally spaced radii on `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let n = n.max(1);
    (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
}

/// The exact-route kernel tabulated on a ring-adapted radial grid, with
/// cubic interpolation between nodes. Building it costs a few hundred
/// quadratures; every later evaluation is cheap.
#[derive(Debug, Clone)]
pub struct ExactRoute {
    cfg: MeasurementConfig,
    radii: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
}

/// Fine nodes per `r0` around the ring.
const TABLE_FINE_PER_R0: f64 = 20.0;
/// Half-width of the finely sampled band, in units of `r0`.
const TABLE_BAND: f64 = 12.0;

impl ExactRoute {
    pub fn new(cfg: &MeasurementConfig, spec: &QuadratureSpec) -> Result<Self> {
        spec.validate()?;
        let radii = Self::grid(cfg);
        let (a, b) = tabulate(&radii, cfg, spec)?;
        Ok(ExactRoute { cfg: *cfg, radii, a, b })
    }

    fn grid(cfg: &MeasurementConfig) -> Vec<f64> {
        let (r0, rso) = (cfg.r0(), cfg.rso());
        let fine = r0 / TABLE_FINE_PER_R0;
        let lo = (rso - TABLE_BAND * r0).max(0.0);
        let hi = rso + TABLE_BAND * r0;
        let mut radii = Vec::new();
        if lo > 0.0 {
            let coarse = (0.5 * r0).min(0.01 * rso);
            let n = (lo / coarse).ceil() as usize;
            radii.extend((0..n).map(|i| lo * i as f64 / n as f64));
        }
        let n = ((hi - lo) / fine).ceil() as usize;
        radii.extend((0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64));
        radii
    }

    pub fn config(&self) -> &MeasurementConfig {
        &self.cfg
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    /// Kernel values at the table nodes.
    pub fn node_values(&self) -> impl Iterator<Item = (f64, RadialKernel)> + '_ {
        (0..self.radii.len()).map(|i| (self.radii[i], RadialKernel { u11: self.a[i], u12: self.b[i] }))
    }

    pub fn outer_radius(&self) -> f64 {
        *self.radii.last().unwrap_or(&0.0)
    }

    /// Interpolated kernel; zero beyond the table, where the Gaussian tail
    /// has long since vanished.
    pub fn kernel(&self, r: f64) -> RadialKernel {
        match lagrange4(&self.radii, r) {
            Some((s, w)) => {
                let dot = |v: &[f64]| (0..4).map(|j| w[j] * v[s + j]).sum::<f64>();
                RadialKernel { u11: dot(&self.a), u12: dot(&self.b) }
            }
            None => RadialKernel::default(),
        }
    }

    pub fn propagator(&self, r: f64, theta: f64) -> PropagatorMatrix {
        PropagatorMatrix::from_radial(self.kernel(r), variant_angle_map(theta, self.cfg.variant()))
    }

    pub fn spinor(&self, eta: &Spinor, r: f64, theta: f64) -> Spinor {
        self.propagator(r, theta).apply(eta)
    }

    pub fn density(&self, eta: &Spinor, r: f64, theta: f64) -> f64 {
        self.spinor(eta, r, theta).norm_sqr()
    }

    pub fn density_xy(&self, eta: &Spinor, x: f64, y: f64) -> f64 {
        self.density(eta, x.hypot(y), y.atan2(x))
    }

    /// Largest density over the plane, from the nodes.
    pub fn peak_density(&self, eta: &Spinor) -> f64 {
        self.node_values().fold(0.0, |m, (_, k)| m.max(angular_peak(k, eta)))
    }

    pub fn direction(&self, eta: &Spinor, r: f64, theta: f64, peak: f64) -> SpinDirection {
        SpinDirection::from_spinor(&self.spinor(eta, r, theta), peak)
    }

    /// `2π ∫ w(r) (A² + B²) r dr`; the in-plane spin term integrates to
    /// zero over the angle for any radial weight.
    fn radial_moment(&self, lo: f64, weight: impl Fn(f64) -> f64) -> f64 {
        let (x, wq) = gauss_legendre();
        let mut total = 0.0;
        for seg in self.radii.windows(2) {
            let (a, b) = (seg[0].max(lo), seg[1]);
            if b <= a {
                continue;
            }
            let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
            let mut s = 0.0;
            for (xi, wi) in x.iter().zip(wq) {
                let r = m + h * xi;
                let k = self.kernel(r);
                s += wi * weight(r) * (k.u11 * k.u11 + k.u12 * k.u12) * r;
            }
            total += h * s;
        }
        2.0 * PI * total
    }

    pub fn total_probability(&self) -> f64 {
        self.radial_moment(0.0, |_| 1.0)
    }

    /// Probability found at radii above `r`.
    pub fn mass_beyond(&self, r: f64) -> f64 {
        self.radial_moment(r, |_| 1.0)
    }

    /// Density-weighted mean of `(r/R_so)²`, the sum
    /// `⟨σx⟩_T² + ⟨σy⟩_T²` of the pointer readout.
    pub fn mean_radius_sq(&self) -> f64 {
        let rso = self.cfg.rso();
        self.radial_moment(0.0, |r| (r / rso).powi(2)) / self.total_probability()
    }

    /// Radial spin projection along θ = 0.
    pub fn sigma_v(&self, eta: &Spinor, r: f64, peak: f64) -> Option<f64> {
        self.direction(eta, r, 0.0, peak).radial_projection(0.0)
    }

    /// Minimum of the radial spin projection of a z-polarized state over
    /// `window` (in units of `R_so`), refined with direct quadratures.
    pub fn sigma_v_dip(&self, window: (f64, f64), spec: &QuadratureSpec) -> Result<Option<ResonanceDip>> {
        let eta = Spinor::z_plus();
        let rso = self.cfg.rso();
        let peak = self.peak_density(&eta);
        let (lo, hi) = (window.0 * rso, window.1 * rso);
        let mut best: Option<(usize, f64)> = None;
        let nodes: Vec<usize> = (0..self.radii.len()).filter(|&i| self.radii[i] >= lo && self.radii[i] <= hi).collect();
        for &i in &nodes {
            if let Some(v) = self.sigma_v(&eta, self.radii[i], peak) {
                if best.map_or(true, |(_, b)| v < b) {
                    best = Some((i, v));
                }
            }
        }
        let Some((i, _)) = best else { return Ok(None) };
        let a = self.radii[i.saturating_sub(1)].max(lo);
        let b = self.radii[(i + 1).min(self.radii.len() - 1)].min(hi);
        let exact = |r: f64| -> Result<(f64, RadialKernel)> {
            let k = radial_kernel(r, &self.cfg, spec)?;
            let rho = k.u11 * k.u11 + k.u12 * k.u12;
            let v = if rho >= DIRECTION_FLOOR * peak && rho > 0.0 { 2.0 * k.u11 * k.u12 / rho } else { f64::INFINITY };
            Ok((v, k))
        };
        // σ_v = -1 exactly where A = -B; bracket that root when it exists
        let (ka, kb) = (radial_kernel(a, &self.cfg, spec)?, radial_kernel(b, &self.cfg, spec)?);
        let (sa, sb) = (ka.u11 + ka.u12, kb.u11 + kb.u12);
        let (r, (v, k)) = if sa * sb < 0.0 {
            let (mut lo_r, mut hi_r, mut s_lo) = (a, b, sa);
            for _ in 0..200 {
                let mid = 0.5 * (lo_r + hi_r);
                if mid <= lo_r || mid >= hi_r {
                    break;
                }
                let km = radial_kernel(mid, &self.cfg, spec)?;
                let sm = km.u11 + km.u12;
                if sm == 0.0 {
                    lo_r = mid;
                    hi_r = mid;
                    break;
                }
                if sm * s_lo < 0.0 {
                    hi_r = mid;
                } else {
                    lo_r = mid;
                    s_lo = sm;
                }
            }
            let r = 0.5 * (lo_r + hi_r);
            (r, exact(r)?)
        } else {
            golden_min(a, b, 60, exact)?
        };
        if !v.is_finite() {
            return Ok(None);
        }
        Ok(Some(ResonanceDip { radius: r, sigma_v: v, u11: k.u11, u12: k.u12 }))
    }
}

/// Location of the minimum of the radial spin projection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonanceDip {
    pub radius: f64,
    pub sigma_v: f64,
    pub u11: f64,
    pub u12: f64,
}

fn golden_min<T: Copy>(mut a: f64, mut b: f64, iters: usize, f: impl Fn(f64) -> Result<(f64, T)>) -> Result<(f64, (f64, T))> {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    for _ in 0..iters {
        if fc.0 < fd.0 {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc.0 < fd.0 { (c, fc) } else { (d, fd) })
}

/// A and B on many radii at once. All radii share one node set, sized for
/// the largest radius; a radius that fails the doubling check falls back
/// to its own adaptive quadrature.
fn tabulate(radii: &[f64], cfg: &MeasurementConfig, spec: &QuadratureSpec) -> Result<(Vec<f64>, Vec<f64>)> {
    let (r0, rso) = (cfg.r0(), cfg.rso());
    let r_max = radii.iter().copied().fold(0.0, f64::max);
    let scales = oscillation_scales(rso, r_max);
    let k_max = 2.0 / r0 * (1.0 / spec.truncation_eps()).ln().sqrt();
    let shortest = scales.iter().copied().fold(f64::INFINITY, f64::min);
    let h = (shortest / 8.0).min(k_max / 16.0);
    let panels = ((k_max / h).ceil() as usize).max(1);
    if 2 * panels > spec.max_panels {
        return Err(Error::Resource(format!("kernel table needs {} panels, above max_panels = {}", 2 * panels, spec.max_panels)));
    }
    let c = kernel_prefactor(r0);
    let nodes = |n: usize| {
        let (x, w) = gauss_legendre();
        let hp = k_max / n as f64;
        let mut out = Vec::with_capacity(n * x.len());
        for p in 0..n {
            let m = (p as f64 + 0.5) * hp;
            for (xi, wi) in x.iter().zip(w) {
                let k = m + 0.5 * hp * xi;
                let (s, co) = (rso * k).sin_cos();
                let g = 0.5 * hp * wi * c * k * (-0.25 * k * k * r0 * r0).exp();
                out.push((k, g * co, g * s));
            }
        }
        out
    };
    let coarse = nodes(panels);
    let fine = nodes(2 * panels);
    let sum = |set: &[(f64, f64, f64)], r: f64| {
        let (mut a, mut b) = (0.0, 0.0);
        for chunk in set.chunks(256) {
            let (mut ca, mut cb) = (0.0, 0.0);
            for &(k, wc, ws) in chunk {
                let (j0, j1) = bessel_j01(k * r);
                ca += wc * j0;
                cb += ws * j1;
            }
            a += ca;
            b += cb;
        }
        (a, b)
    };
    let accepts = |v: f64, e: f64| e <= spec.abs_tol.max(spec.rel_tol * v.abs());
    let mut a_out = Vec::with_capacity(radii.len());
    let mut b_out = Vec::with_capacity(radii.len());
    for &r in radii {
        check_radius(r)?;
        let (a1, b1) = sum(&coarse, r);
        let (a2, b2) = sum(&fine, r);
        if accepts(a2, (a2 - a1).abs()) && accepts(b2, (b2 - b1).abs()) {
            a_out.push(a2);
            b_out.push(b2);
        } else {
            let k = radial_kernel(r, cfg, spec)?;
            a_out.push(k.u11);
            b_out.push(k.u12);
        }
    }
    Ok((a_out, b_out))
}

/// Polar evaluation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarGrid {
    pub radii: Vec<f64>,
    pub angles: Vec<f64>,
}

impl PolarGrid {
    pub const DEFAULT_RADIAL: usize = 400;
    pub const DEFAULT_ANGULAR: usize = 256;
    pub const DEFAULT_EXTENT: f64 = 1.4;

    /// `n_r` radii over `[0, extent·R_so]` and `n_theta` angles over [−π, π).
    pub fn new(rso: f64, extent: f64, n_r: usize, n_theta: usize) -> Result<Self> {
        if n_r < 2 || n_theta < 1 || !(extent > 0.0) || !(rso > 0.0) {
            return Err(Error::domain("polar grid needs n_r >= 2, n_theta >= 1 and a positive extent"));
        }
        let radii = (0..n_r).map(|i| extent * rso * i as f64 / (n_r - 1) as f64).collect();
        let angles = (0..n_theta).map(|j| -PI + 2.0 * PI * j as f64 / n_theta as f64).collect();
        Ok(PolarGrid { radii, angles })
    }

    pub fn default_for(cfg: &MeasurementConfig) -> Result<Self> {
        PolarGrid::new(cfg.rso(), Self::DEFAULT_EXTENT, Self::DEFAULT_RADIAL, Self::DEFAULT_ANGULAR)
    }

    /// A single circle of radius `r`.
    pub fn ring(r: f64, n_theta: usize) -> Result<Self> {
        if n_theta < 1 || !(r >= 0.0) {
            return Err(Error::domain("ring needs n_theta >= 1 and r >= 0"));
        }
        let angles = (0..n_theta).map(|j| -PI + 2.0 * PI * j as f64 / n_theta as f64).collect();
        Ok(PolarGrid { radii: vec![r], angles })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub r: f64,
    pub theta: f64,
    pub density: f64,
    pub direction: SpinDirection,
}

/// Density and spin direction on a polar grid, radius-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinField {
    pub samples: Vec<FieldSample>,
    pub peak_density: f64,
}

impl SpinField {
    pub fn from_route(route: &ExactRoute, grid: &PolarGrid, eta: &Spinor) -> Self {
        let peak = route.peak_density(eta);
        let mut samples = Vec::with_capacity(grid.radii.len() * grid.angles.len());
        for &r in &grid.radii {
            for &theta in &grid.angles {
                let psi = route.spinor(eta, r, theta);
                samples.push(FieldSample { r, theta, density: psi.norm_sqr(), direction: SpinDirection::from_spinor(&psi, peak) });
            }
        }
        SpinField { samples, peak_density: peak }
    }
}

/// Spin texture of `variant` on `grid`.
pub fn texture(
    variant: crate::variant::HamiltonianVariant,
    grid: &PolarGrid,
    cfg: &MeasurementConfig,
    eta: &Spinor,
    spec: &QuadratureSpec,
) -> Result<SpinField> {
    eta.validate_state()?;
    let route = ExactRoute::new(&cfg.with_variant(variant), spec)?;
    Ok(SpinField::from_route(&route, grid, eta))
}
