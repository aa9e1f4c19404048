//! Momentum-space ground truth.
//!
//! The Hamiltonian commutes with momentum, so for a rectangular pulse every
//! plane wave evolves independently:
//!
//! ```text
//! U(k) = exp(-iT[α c(k)·σ + k²/2M]) = e^{-ik²T/2M} [cos(α|c|T) I - i sin(α|c|T) ĉ·σ]
//! ```
//!
//! with `c(k)` the variant's spin vector. [`propagate`] transforms `G η`,
//! multiplies mode by mode and transforms back. No time stepping is involved.
//!
//! Transform convention: forward `f̂(k) = Σ_j f(x_j) e^{-ik x_j}` without
//! scaling, inverse `f(x_j) = N⁻² Σ_k f̂(k) e^{ik x_j}`; wavenumbers are in
//! the usual FFT order `2π m/(n dx)` with `m = 0, 1, …, n/2-1, -n/2, …, -1`.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use crate::analytic::{ExactRoute, SpinDirection};
use crate::checkerboard::pairwise_sum;
use crate::config::{gaussian_amplitude_unchecked, Mass, MeasurementConfig};
use crate::error::{Error, Result};
use crate::spin::{Matrix2, Pauli, Spinor};
use crate::variant::{AngleSubstitution, HamiltonianVariant};

/// Default points per axis.
pub const DEFAULT_POINTS: usize = 1024;
/// Default box half-width beyond `R_so`, in units of `r0`.
pub const DEFAULT_MARGIN: f64 = 12.0;
/// Smallest accepted margin beyond `R_so`, in units of `r0`.
pub const MIN_MARGIN: f64 = 8.0;
/// Probability allowed within two cells of the box edge.
pub const WRAP_TOLERANCE: f64 = 1e-6;
/// Largest accepted spacing, in units of `r0`.
pub const MAX_SPACING: f64 = 0.25;
/// Largest direction error accepted when matching textures.
pub const TEXTURE_TOLERANCE: f64 = 1e-2;

/// Square periodic grid of `n × n` points, `x_j = (j - n/2) dx`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralGrid {
    n: usize,
    half_width: f64,
    wavenumbers: Vec<f64>,
}

impl SpectralGrid {
    pub fn new(n: usize, half_width: f64, cfg: &MeasurementConfig) -> Result<Self> {
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::domain(format!("grid size must be a power of two >= 4 (got {n})")));
        }
        let (r0, rso) = (cfg.r0(), cfg.rso());
        if !(half_width >= rso + MIN_MARGIN * r0) {
            return Err(Error::domain(format!(
                "box half-width {half_width} must be at least R_so + {MIN_MARGIN} r0 = {}",
                rso + MIN_MARGIN * r0
            )));
        }
        let dx = 2.0 * half_width / n as f64;
        if dx > MAX_SPACING * r0 * (1.0 + 1e-12) {
            return Err(Error::domain(format!("grid spacing {dx} exceeds r0/4 = {}; raise n", MAX_SPACING * r0)));
        }
        let dk = 2.0 * std::f64::consts::PI / (n as f64 * dx);
        let wavenumbers = (0..n).map(|m| if m < n / 2 { m as f64 } else { m as f64 - n as f64 } * dk).collect();
        Ok(SpectralGrid { n, half_width, wavenumbers })
    }

    /// `n` points (raised to the next power of two that resolves `r0/4`)
    /// over the half-width `R_so + 12 r0`.
    pub fn default_for(cfg: &MeasurementConfig) -> Result<Self> {
        let half = cfg.rso() + DEFAULT_MARGIN * cfg.r0();
        let mut n = DEFAULT_POINTS;
        while 2.0 * half / n as f64 > MAX_SPACING * cfg.r0() {
            n *= 2;
        }
        SpectralGrid::new(n, half, cfg)
    }

    /// Smallest power-of-two grid meeting the invariants over the default box.
    pub fn coarsest_for(cfg: &MeasurementConfig) -> Result<Self> {
        let half = cfg.rso() + DEFAULT_MARGIN * cfg.r0();
        let mut n = 4;
        while 2.0 * half / n as f64 > MAX_SPACING * cfg.r0() {
            n *= 2;
        }
        SpectralGrid::new(n, half, cfg)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.spacing() * self.spacing()
    }

    pub fn coordinate(&self, j: usize) -> f64 {
        (j as f64 - (self.n / 2) as f64) * self.spacing()
    }

    pub fn coordinates(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.coordinate(j)).collect()
    }

    /// Wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }
}

/// Evolution matrix of one plane wave.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModePropagator(pub Matrix2);

impl ModePropagator {
    /// Largest entry of `M†M - I`.
    pub fn unitarity_defect(&self) -> f64 {
        (self.0.adjoint() * self.0).max_abs_diff(&Matrix2::identity())
    }
}

/// Exact evolution matrix for the mode `(kx, ky)`; the kinetic phase is
/// included when `cfg` has a finite mass.
pub fn mode_exponential(kx: f64, ky: f64, cfg: &MeasurementConfig) -> ModePropagator {
    let (cx, cy) = cfg.variant().spin_vector(kx, ky);
    let c = cx.hypot(cy);
    let phase = cfg.alpha() * c * cfg.duration();
    let (s, co) = phase.sin_cos();
    let (nx, ny) = if c > 0.0 { (cx / c, cy / c) } else { (0.0, 0.0) };
    // cos I - i sin (nx σx + ny σy)
    let off_12 = Complex64::new(-s * ny, -s * nx);
    let off_21 = Complex64::new(s * ny, -s * nx);
    let diag = Complex64::new(co, 0.0);
    let mut m = Matrix2::new([[diag, off_12], [off_21, diag]]);
    if let Mass::Finite(mass) = cfg.mass() {
        let k2 = kx * kx + ky * ky;
        m = m.scale(Complex64::from_polar(1.0, -k2 * cfg.duration() / (2.0 * mass)));
    }
    ModePropagator(m)
}

/// Spinor samples on a spectral grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinorField {
    pub grid: SpectralGrid,
    /// Row-major over `(ix, iy)`.
    pub up: Vec<Complex64>,
    pub down: Vec<Complex64>,
}

impl SpinorField {
    pub fn spinor(&self, ix: usize, iy: usize) -> Spinor {
        let i = ix * self.grid.n + iy;
        Spinor::new(self.up[i], self.down[i])
    }

    pub fn density(&self) -> Vec<f64> {
        self.up.iter().zip(&self.down).map(|(a, b)| a.norm_sqr() + b.norm_sqr()).collect()
    }

    pub fn total_probability(&self) -> f64 {
        pairwise_sum(&self.density()) * self.grid.cell_area()
    }

    pub fn peak_density(&self) -> f64 {
        self.density().into_iter().fold(0.0, f64::max)
    }

    pub fn direction(&self, ix: usize, iy: usize, peak: f64) -> SpinDirection {
        SpinDirection::from_spinor(&self.spinor(ix, iy), peak)
    }

    /// Probability within `cells` cells of the box edge.
    pub fn edge_mass(&self, cells: usize) -> f64 {
        let n = self.grid.n;
        let rho = self.density();
        let mut edge = Vec::new();
        for ix in 0..n {
            for iy in 0..n {
                if ix < cells || iy < cells || ix >= n - cells || iy >= n - cells {
                    edge.push(rho[ix * n + iy]);
                }
            }
        }
        pairwise_sum(&edge) * self.grid.cell_area()
    }

    /// Expectation of `σ` at a point, unnormalized.
    pub fn spin_density(&self, ix: usize, iy: usize, p: Pauli) -> f64 {
        self.spinor(ix, iy).expectation(p)
    }
}

struct Fft2 {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    n: usize,
}

impl Fft2 {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 { fwd: planner.plan_fft_forward(n), inv: planner.plan_fft_inverse(n), n }
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        let f = if inverse { &self.inv } else { &self.fwd };
        f.process(data);
        transpose(data, self.n);
        f.process(data);
        transpose(data, self.n);
        if inverse {
            let s = 1.0 / (self.n * self.n) as f64;
            data.iter_mut().for_each(|v| *v *= s);
        }
    }
}

fn transpose(a: &mut [Complex64], n: usize) {
    const B: usize = 32;
    for bi in (0..n).step_by(B) {
        for bj in (bi..n).step_by(B) {
            for i in bi..(bi + B).min(n) {
                let start = if bi == bj { i + 1 } else { bj };
                for j in start..(bj + B).min(n) {
                    a.swap(i * n + j, j * n + i);
                }
            }
        }
    }
}

/// Evolves `G η` over the pulse. `include_kinetic = false` (or an infinite
/// mass) drops the `k²/2M` phase.
pub fn propagate(eta: &Spinor, cfg: &MeasurementConfig, grid: &SpectralGrid, include_kinetic: bool) -> Result<SpinorField> {
    eta.validate_state()?;
    let cfg = if include_kinetic { *cfg } else { cfg.with_mass(Mass::Infinite) };
    let n = grid.n;
    let xs = grid.coordinates();
    let r0 = cfg.r0();
    let mut up = vec![Complex64::new(0.0, 0.0); n * n];
    let mut down = up.clone();
    for (ix, &x) in xs.iter().enumerate() {
        for (iy, &y) in xs.iter().enumerate() {
            let g = gaussian_amplitude_unchecked(x * x + y * y, r0);
            up[ix * n + iy] = eta.up * g;
            down[ix * n + iy] = eta.down * g;
        }
    }
    let fft = Fft2::new(n);
    fft.transform(&mut up, false);
    fft.transform(&mut down, false);
    let k = grid.wavenumbers();
    for (ix, &kx) in k.iter().enumerate() {
        for (iy, &ky) in k.iter().enumerate() {
            let i = ix * n + iy;
            let out = mode_exponential(kx, ky, &cfg).0.apply(&Spinor::new(up[i], down[i]));
            up[i] = out.up;
            down[i] = out.down;
        }
    }
    fft.transform(&mut up, true);
    fft.transform(&mut down, true);
    let field = SpinorField { grid: grid.clone(), up, down };
    let edge = field.edge_mass(2);
    if edge > WRAP_TOLERANCE {
        return Err(Error::DomainSize(format!("probability {edge:e} within two cells of the box edge; enlarge the box")));
    }
    Ok(field)
}

/// Pointwise density discrepancy relative to the reference peak.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discrepancy {
    /// `max |ρ - ρ_ref| / max ρ_ref`.
    pub linf: f64,
    /// `‖ρ - ρ_ref‖₂ / ‖ρ_ref‖₂`.
    pub l2: f64,
    pub reference_peak: f64,
}

impl Discrepancy {
    pub fn between(values: &[f64], reference: &[f64]) -> Result<Self> {
        if values.len() != reference.len() || values.is_empty() {
            return Err(Error::domain("density samples differ in length or are empty"));
        }
        let peak = reference.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
        let diff: Vec<f64> = values.iter().zip(reference).map(|(a, b)| (a - b) * (a - b)).collect();
        let linf = values.iter().zip(reference).fold(0.0, |m: f64, (a, b)| m.max((a - b).abs()));
        let sq: Vec<f64> = reference.iter().map(|v| v * v).collect();
        Ok(Discrepancy { linf: linf / peak, l2: (pairwise_sum(&diff) / pairwise_sum(&sq)).sqrt(), reference_peak: peak })
    }
}

/// Exact-route density sampled on the grid points.
pub fn route_density_on_grid(route: &ExactRoute, eta: &Spinor, grid: &SpectralGrid) -> Vec<f64> {
    let xs = grid.coordinates();
    let mut out = Vec::with_capacity(xs.len() * xs.len());
    for &x in &xs {
        for &y in &xs {
            out.push(route.density_xy(eta, x, y));
        }
    }
    out
}

/// Oracle density against the tabulated exact route.
pub fn compare_with_route(field: &SpinorField, route: &ExactRoute, eta: &Spinor) -> Result<Discrepancy> {
    Discrepancy::between(&route_density_on_grid(route, eta, &field.grid), &field.density())
}

/// `L∞` of `ρ_kinetic − ρ_free` relative to the kinetic-free peak.
pub fn kinetic_deviation(eta: &Spinor, cfg: &MeasurementConfig, grid: &SpectralGrid) -> Result<f64> {
    let on = propagate(eta, cfg, grid, true)?;
    let off = propagate(eta, cfg, grid, false)?;
    Ok(Discrepancy::between(&on.density(), &off.density())?.linf)
}

/// Grid points within `r0/2` of the ring and above a thousandth of the peak.
fn ring_points(field: &SpinorField, cfg: &MeasurementConfig) -> Vec<(usize, usize)> {
    let n = field.grid.n;
    let xs = field.grid.coordinates();
    let rho = field.density();
    let peak = rho.iter().fold(0.0, |m: f64, v| m.max(*v));
    let mut pts = Vec::new();
    for ix in 0..n {
        for iy in 0..n {
            let r = xs[ix].hypot(xs[iy]);
            if (r - cfg.rso()).abs() <= 0.5 * cfg.r0() && rho[ix * n + iy] > 1e-3 * peak {
                pts.push((ix, iy));
            }
        }
    }
    pts
}

/// Largest direction error on the ring between the oracle field of `variant`
/// and the `p·σ` exact route evaluated at the substituted angle.
pub fn texture_mismatch(
    field: &SpinorField,
    base: &ExactRoute,
    eta: &Spinor,
    substitution: AngleSubstitution,
) -> Result<f64> {
    let cfg = base.config();
    let xs = field.grid.coordinates();
    let peak_o = field.peak_density();
    let peak_a = base.peak_density(eta);
    let mut worst: f64 = 0.0;
    let pts = ring_points(field, cfg);
    if pts.is_empty() {
        return Err(Error::Consistency("no grid points resolve the ring".into()));
    }
    for (ix, iy) in pts {
        let (x, y) = (xs[ix], xs[iy]);
        let theta = substitution.apply(y.atan2(x));
        let a = base.direction(eta, x.hypot(y), theta, peak_a).components();
        let o = field.direction(ix, iy, peak_o).components();
        match (a, o) {
            (Some((ax, ay)), Some((ox, oy))) => worst = worst.max((ax - ox).abs().max((ay - oy).abs())),
            _ => worst = f64::INFINITY,
        }
    }
    Ok(worst)
}

/// Finds, for every variant, the angle substitution whose `p·σ` texture
/// matches the oracle on the ring, for each configuration in `cfgs`.
///
/// Every configuration must select the same substitution per variant and
/// the match must be within [`TEXTURE_TOLERANCE`].
pub fn fix_variant_table(
    grid_for: impl Fn(&MeasurementConfig) -> Result<SpectralGrid>,
    cfgs: &[MeasurementConfig],
    spec: &crate::specfun::QuadratureSpec,
) -> Result<[AngleSubstitution; 4]> {
    if cfgs.is_empty() {
        return Err(Error::domain("need at least one configuration"));
    }
    let eta = Spinor::z_plus();
    let mut table: [Option<AngleSubstitution>; 4] = [None; 4];
    for cfg in cfgs {
        let base = ExactRoute::new(&cfg.with_variant(HamiltonianVariant::XxPlusYy), spec)?;
        let grid = grid_for(cfg)?;
        for (slot, v) in HamiltonianVariant::ALL.iter().enumerate() {
            let field = propagate(&eta, &cfg.with_variant(*v), &grid, false)?;
            let mut best: Option<(AngleSubstitution, f64)> = None;
            for cand in AngleSubstitution::CANDIDATES {
                let e = texture_mismatch(&field, &base, &eta, cand)?;
                log::debug!("variant {v} substitution {cand:?}: direction error {e:e}");
                if best.map_or(true, |(_, b)| e < b) {
                    best = Some((cand, e));
                }
            }
            let (cand, err) = best.expect("candidate list is non-empty");
            if err >= TEXTURE_TOLERANCE {
                return Err(Error::Consistency(format!("no substitution reproduces variant {v} (best error {err:e})")));
            }
            match table[slot] {
                Some(prev) if prev != cand => {
                    return Err(Error::Consistency(format!("variant {v} matched {prev:?} and {cand:?} on different configurations")));
                }
                _ => table[slot] = Some(cand),
            }
        }
    }
    Ok(table.map(|s| s.expect("every slot is filled")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn cfg(q: f64) -> MeasurementConfig {
        MeasurementConfig::dimensionless(q, None, HamiltonianVariant::XxPlusYy).unwrap()
    }

    #[test]
    fn identity_at_zero_mode() {
        for v in HamiltonianVariant::ALL {
            let m = mode_exponential(0.0, 0.0, &cfg(0.1).with_variant(v));
            assert!(m.0.max_abs_diff(&Matrix2::identity()) < 1e-15);
        }
    }

    #[test]
    fn half_period_is_minus_identity() {
        let m = mode_exponential(PI, 0.0, &cfg(0.1));
        assert!(m.0.max_abs_diff(&Matrix2::identity().scale(Complex64::new(-1.0, 0.0))) < 1e-15);
    }

    #[test]
    fn modes_are_unitary() {
        let c = MeasurementConfig::dimensionless(0.1, Some(0.3), HamiltonianVariant::XyMinusYx).unwrap();
        for i in 0..100 {
            let (kx, ky) = ((f64::from(i) * 0.731).sin() * 40.0, (f64::from(i) * 1.37).cos() * 40.0);
            assert!(mode_exponential(kx, ky, &c).unitarity_defect() < 1e-14);
        }
    }

    #[test]
    fn mode_matches_pauli_form() {
        let c = cfg(0.1);
        let (kx, ky): (f64, f64) = (0.8, -1.9);
        let k = kx.hypot(ky);
        let gen = Pauli::X.matrix().scale(Complex64::new(kx / k, 0.0)) + Pauli::Y.matrix().scale(Complex64::new(ky / k, 0.0));
        let expect = Matrix2::identity().scale(Complex64::new(k.cos(), 0.0)) - gen.scale(Complex64::new(0.0, k.sin()));
        assert!(mode_exponential(kx, ky, &c).0.max_abs_diff(&expect) < 1e-15);
    }

    #[test]
    fn grid_invariants() {
        let c = cfg(0.1);
        assert!(SpectralGrid::new(100, 2.2, &c).is_err());
        assert!(SpectralGrid::new(64, 2.2, &c).is_err());
        assert!(SpectralGrid::new(256, 1.5, &c).is_err());
        let g = SpectralGrid::default_for(&c).unwrap();
        assert_eq!(g.n(), DEFAULT_POINTS);
        assert!((g.n() as f64 * g.spacing() - 2.0 * g.half_width()).abs() < 1e-12);
        assert_eq!(g.coordinate(g.n() / 2), 0.0);
    }

    #[test]
    fn transpose_roundtrip() {
        let n = 70;
        let mut a: Vec<Complex64> = (0..n * n).map(|i| Complex64::new(i as f64, 0.0)).collect();
        transpose(&mut a, n);
        assert_eq!(a[3 * n + 5].re, (5 * n + 3) as f64);
        transpose(&mut a, n);
        assert!(a.iter().enumerate().all(|(i, v)| v.re == i as f64));
    }

    #[test]
    fn zero_coupling_is_identity() {
        let c = MeasurementConfig::new(0.0, 1.0, 0.1, Mass::Infinite, HamiltonianVariant::XxPlusYy).unwrap();
        let g = SpectralGrid::new(128, 1.6, &c).unwrap();
        let eta = Spinor::x_plus();
        let f = propagate(&eta, &c, &g, false).unwrap();
        let xs = g.coordinates();
        for ix in (0..128).step_by(7) {
            for iy in (0..128).step_by(5) {
                let gx = gaussian_amplitude_unchecked(xs[ix] * xs[ix] + xs[iy] * xs[iy], 0.1);
                let s = f.spinor(ix, iy);
                assert!((s.up - eta.up * gx).norm() < 1e-13 && (s.down - eta.down * gx).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn probability_conserved() {
        let c = MeasurementConfig::dimensionless(0.2, Some(0.004), HamiltonianVariant::XyPlusYx).unwrap();
        let g = SpectralGrid::coarsest_for(&c).unwrap();
        for kin in [false, true] {
            let f = propagate(&Spinor::y_plus(), &c, &g, kin).unwrap();
            assert!((f.total_probability() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn small_box_is_detected() {
        // a strong kinetic term spreads the packet past the box
        let c = MeasurementConfig::dimensionless(0.2, Some(2.0), HamiltonianVariant::XxPlusYy).unwrap();
        let g = SpectralGrid::coarsest_for(&c).unwrap();
        assert!(matches!(propagate(&Spinor::z_plus(), &c, &g, true), Err(Error::DomainSize(_))));
    }
}
