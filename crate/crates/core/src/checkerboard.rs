//! Lie-Trotter lattice walk.
//!
//! Each time step `ε = T/L` applies `exp(-αε ∂x σ_γ)` and then
//! `exp(-αε ∂y σ_δ')`. In the eigenbasis of the spin operator these are
//! plain shifts by one lattice unit `a = αε`, so every site spinor splits into
//! its two eigencomponents which hop left and right. After `L` steps the
//! amplitude at site `(jx, jy)` is the sum over all spin histories with
//! `Σ m_x = jx` and `Σ m_y = jy`, which fixes the time-averaged spin
//! components `jx/L` and `jy/L`.
//!
//! After `n` shifts along an axis only sites with `j ≡ n (mod 2)` and
//! `|j| ≤ n` can be occupied, so each axis is stored compactly as
//! `j = 2i - n` for `i = 0..=n`.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::config::MeasurementConfig;
use crate::error::{Error, Result};
use crate::spin::{Matrix2, Spinor};
use crate::variant::HamiltonianVariant;

/// Largest step count accepted by [`run_walk`].
pub const MAX_STEPS: usize = 4096;

/// Largest step count accepted by [`enumerate_paths`] (4^L histories).
pub const MAX_ENUMERATION_STEPS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// Spinor amplitudes on the occupied sublattice.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeState {
    steps: usize,
    spacing: f64,
    epsilon: f64,
    variant: HamiltonianVariant,
    /// Shifts applied so far along x and y.
    nx: usize,
    ny: usize,
    /// Row-major over `(ix, iy)`, `(nx + 1) × (ny + 1)`.
    amps: Vec<Spinor>,
    projectors: [[Matrix2; 2]; 2],
}

impl LatticeState {
    /// Point source `eta` at the origin for an `L`-step walk.
    pub fn point_source(eta: &Spinor, steps: usize, cfg: &MeasurementConfig) -> Result<Self> {
        if steps < 1 {
            return Err(Error::domain("walk needs at least one step"));
        }
        if steps > MAX_STEPS {
            return Err(Error::Resource(format!("walk length {steps} above the guard {MAX_STEPS}")));
        }
        if !eta.is_finite() {
            return Err(Error::domain("initial spinor has non-finite components"));
        }
        let (sx, sy) = cfg.variant().axis_operators();
        let projectors = [[Matrix2::projector(&sx, 1), Matrix2::projector(&sx, -1)], [Matrix2::projector(&sy, 1), Matrix2::projector(&sy, -1)]];
        Ok(LatticeState {
            steps,
            spacing: cfg.rso() / steps as f64,
            epsilon: cfg.duration() / steps as f64,
            variant: cfg.variant(),
            nx: 0,
            ny: 0,
            amps: vec![*eta],
            projectors,
        })
    }

    /// Planned number of full steps `L`.
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Full steps applied so far.
    pub fn steps_taken(&self) -> usize {
        self.ny
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn variant(&self) -> HamiltonianVariant {
        self.variant
    }

    pub fn shifts(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    /// Applies one axis factor `Σ_m P_m shift(m)`.
    pub fn substep(&mut self, axis: Axis) {
        let (nx, ny) = (self.nx + 1, self.ny + 1);
        match axis {
            Axis::X => {
                let [pp, pm] = self.projectors[0];
                let mut out = vec![Spinor::zero(); (nx + 1) * ny];
                for ix in 0..nx {
                    for iy in 0..ny {
                        let v = self.amps[ix * ny + iy];
                        let p = pp.apply(&v);
                        let m = pm.apply(&v);
                        let hi = &mut out[(ix + 1) * ny + iy];
                        *hi = *hi + p;
                        let lo = &mut out[ix * ny + iy];
                        *lo = *lo + m;
                    }
                }
                self.amps = out;
                self.nx += 1;
            }
            Axis::Y => {
                let [pp, pm] = self.projectors[1];
                let mut out = vec![Spinor::zero(); nx * (ny + 1)];
                for ix in 0..nx {
                    let (src, dst) = (ix * ny, ix * (ny + 1));
                    for iy in 0..ny {
                        let v = self.amps[src + iy];
                        let hi = &mut out[dst + iy + 1];
                        *hi = *hi + pp.apply(&v);
                        let lo = &mut out[dst + iy];
                        *lo = *lo + pm.apply(&v);
                    }
                }
                self.amps = out;
                self.ny += 1;
            }
        }
    }

    /// One full Trotter step, x factor first.
    pub fn trotter_step(&mut self) {
        self.substep(Axis::X);
        self.substep(Axis::Y);
    }

    fn site(&self, ix: usize, iy: usize) -> (i64, i64) {
        (2 * ix as i64 - self.nx as i64, 2 * iy as i64 - self.ny as i64)
    }

    /// Occupied-sublattice sites `(jx, jy, amplitude)`, x-major.
    pub fn sites(&self) -> impl Iterator<Item = (i64, i64, Spinor)> + '_ {
        let ny = self.ny + 1;
        self.amps.iter().enumerate().map(move |(n, a)| {
            let (jx, jy) = self.site(n / ny, n % ny);
            (jx, jy, *a)
        })
    }

    /// Amplitude at a site; zero off the sublattice.
    pub fn amplitude(&self, jx: i64, jy: i64) -> Spinor {
        let idx = |j: i64, n: usize| {
            let t = j + n as i64;
            (t >= 0 && t % 2 == 0 && t / 2 <= n as i64).then_some((t / 2) as usize)
        };
        match (idx(jx, self.nx), idx(jy, self.ny)) {
            (Some(ix), Some(iy)) => self.amps[ix * (self.ny + 1) + iy],
            _ => Spinor::zero(),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        pairwise_sum(&self.amps.iter().map(Spinor::norm_sqr).collect::<Vec<_>>())
    }

    pub fn amplitude_sum(&self) -> Spinor {
        let up: Vec<Complex64> = self.amps.iter().map(|a| a.up).collect();
        let down: Vec<Complex64> = self.amps.iter().map(|a| a.down).collect();
        Spinor::new(pairwise_sum(&up), pairwise_sum(&down))
    }

    /// Checks parity and support of every nonzero site.
    pub fn check_structure(&self) -> Result<()> {
        for (jx, jy, a) in self.sites() {
            if a.norm_sqr() == 0.0 {
                continue;
            }
            let ok = (jx - self.nx as i64) % 2 == 0 && (jy - self.ny as i64) % 2 == 0 && jx.unsigned_abs() as usize <= self.nx && jy.unsigned_abs() as usize <= self.ny;
            if !ok {
                return Err(Error::Consistency(format!("site ({jx}, {jy}) occupied after ({}, {}) shifts", self.nx, self.ny)));
            }
        }
        Ok(())
    }

    /// Pointer amplitude `Σ_j G(x - x_j) a_j` on the grid `xs × ys`
    /// (row-major over x), with the Gaussian of width `r0`.
    pub fn convolve(&self, r0: f64, xs: &[f64], ys: &[f64]) -> Result<Vec<Spinor>> {
        if !(r0 > 0.0) {
            return Err(Error::domain(format!("Gaussian width must be > 0 (got {r0})")));
        }
        let (nx, ny) = (self.nx + 1, self.ny + 1);
        let g = |u: f64| (2.0 / std::f64::consts::PI).powf(0.25) / r0.sqrt() * (-(u * u) / (r0 * r0)).exp();
        let cut = 9.0 * r0;
        let site_x: Vec<f64> = (0..nx).map(|i| self.site(i, 0).0 as f64 * self.spacing).collect();
        let site_y: Vec<f64> = (0..ny).map(|i| self.site(0, i).1 as f64 * self.spacing).collect();
        // contract over the y sites first
        let mut partial = vec![Spinor::zero(); nx * ys.len()];
        for (k, &y) in ys.iter().enumerate() {
            let w: Vec<(usize, f64)> = site_y.iter().enumerate().filter(|(_, sy)| (y - **sy).abs() < cut).map(|(i, sy)| (i, g(y - sy))).collect();
            for ix in 0..nx {
                let row = &self.amps[ix * ny..(ix + 1) * ny];
                let mut acc = Spinor::zero();
                for &(iy, wy) in &w {
                    acc = acc + row[iy].scale(wy);
                }
                partial[ix * ys.len() + k] = acc;
            }
        }
        let mut out = vec![Spinor::zero(); xs.len() * ys.len()];
        for (i, &x) in xs.iter().enumerate() {
            let w: Vec<(usize, f64)> = site_x.iter().enumerate().filter(|(_, sx)| (x - **sx).abs() < cut).map(|(j, sx)| (j, g(x - sx))).collect();
            for k in 0..ys.len() {
                let mut acc = Spinor::zero();
                for &(ix, wx) in &w {
                    acc = acc + partial[ix * ys.len() + k].scale(wx);
                }
                out[i * ys.len() + k] = acc;
            }
        }
        Ok(out)
    }

    /// `|Σ_j G(x - x_j) a_j|²` on the grid `xs × ys`.
    pub fn convolved_density(&self, r0: f64, xs: &[f64], ys: &[f64]) -> Result<Vec<f64>> {
        Ok(self.convolve(r0, xs, ys)?.iter().map(Spinor::norm_sqr).collect())
    }
}

/// `L` Trotter steps from a point source at the origin.
pub fn run_walk(eta: &Spinor, steps: usize, cfg: &MeasurementConfig) -> Result<LatticeState> {
    let mut s = LatticeState::point_source(eta, steps, cfg)?;
    for _ in 0..steps {
        s.trotter_step();
    }
    Ok(s)
}

/// One spin history: the eigenvalue picked at each x and y factor, and the
/// spinor it leaves behind.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinPath {
    pub m_x: Vec<i8>,
    pub m_y: Vec<i8>,
    pub amplitude: Spinor,
}

impl SpinPath {
    pub fn displacement(&self) -> (i64, i64) {
        (self.m_x.iter().map(|&m| i64::from(m)).sum(), self.m_y.iter().map(|&m| i64::from(m)).sum())
    }

    /// `(⟨σx⟩_T, ⟨σy⟩_T)` along this history.
    pub fn time_averages(&self) -> (f64, f64) {
        let l = self.m_x.len() as f64;
        let (dx, dy) = self.displacement();
        (dx as f64 / l, dy as f64 / l)
    }
}

/// All `4^L` spin histories of an `L`-step walk.
pub fn enumerate_paths(eta: &Spinor, steps: usize, variant: HamiltonianVariant) -> Result<Vec<SpinPath>> {
    if steps < 1 {
        return Err(Error::domain("path enumeration needs at least one step"));
    }
    if steps > MAX_ENUMERATION_STEPS {
        return Err(Error::Resource(format!("4^{steps} paths exceed the enumeration limit L <= {MAX_ENUMERATION_STEPS}")));
    }
    let (sx, sy) = variant.axis_operators();
    let proj = |s: &Matrix2, m: i8| Matrix2::projector(s, m);
    let mut paths = vec![SpinPath { m_x: Vec::with_capacity(steps), m_y: Vec::with_capacity(steps), amplitude: *eta }];
    for _ in 0..steps {
        let mut next = Vec::with_capacity(paths.len() * 4);
        for p in &paths {
            for mx in [1i8, -1] {
                let after_x = proj(&sx, mx).apply(&p.amplitude);
                for my in [1i8, -1] {
                    let mut q = p.clone();
                    q.m_x.push(mx);
                    q.m_y.push(my);
                    q.amplitude = proj(&sy, my).apply(&after_x);
                    next.push(q);
                }
            }
        }
        paths = next;
    }
    Ok(paths)
}

/// Sums path amplitudes by final displacement.
pub fn group_paths(paths: &[SpinPath]) -> BTreeMap<(i64, i64), Spinor> {
    let mut out: BTreeMap<(i64, i64), Spinor> = BTreeMap::new();
    for p in paths {
        let e = out.entry(p.displacement()).or_insert_with(Spinor::zero);
        *e = *e + p.amplitude;
    }
    out
}

/// Probability of one pair of time-averaged spin components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeAverageBin {
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub probability: f64,
}

/// Point-source distribution of `(jx/L, jy/L)`, x-major; sites with zero
/// probability are kept so that the output shape depends on L only.
pub fn time_average_distribution(state: &LatticeState) -> Vec<TimeAverageBin> {
    let l = state.steps_taken().max(1) as f64;
    state.sites().map(|(jx, jy, a)| TimeAverageBin { sigma_x: jx as f64 / l, sigma_y: jy as f64 / l, probability: a.norm_sqr() }).collect()
}

/// Smoothed distribution: the Gaussian-convolved pointer density on the
/// grid `xs × ys`, with positions read as `(x, y)/R_so`. Cells carry the
/// probability `ρ dx dy` for uniform grids.
pub fn smoothed_time_average_distribution(state: &LatticeState, cfg: &MeasurementConfig, xs: &[f64], ys: &[f64]) -> Result<Vec<TimeAverageBin>> {
    let rho = state.convolved_density(cfg.r0(), xs, ys)?;
    let cell = cell_size(xs) * cell_size(ys);
    let rso = cfg.rso();
    let mut out = Vec::with_capacity(rho.len());
    for (i, &x) in xs.iter().enumerate() {
        for (k, &y) in ys.iter().enumerate() {
            out.push(TimeAverageBin { sigma_x: x / rso, sigma_y: y / rso, probability: rho[i * ys.len() + k] * cell });
        }
    }
    Ok(out)
}

fn cell_size(v: &[f64]) -> f64 {
    if v.len() < 2 {
        1.0
    } else {
        (v[v.len() - 1] - v[0]) / (v.len() - 1) as f64
    }
}

/// Probability-weighted mean of `⟨σx⟩_T² + ⟨σy⟩_T²`.
pub fn mean_radius_sq(bins: &[TimeAverageBin]) -> f64 {
    let w: Vec<f64> = bins.iter().map(|b| b.probability).collect();
    let m: Vec<f64> = bins.iter().map(|b| b.probability * (b.sigma_x * b.sigma_x + b.sigma_y * b.sigma_y)).collect();
    pairwise_sum(&m) / pairwise_sum(&w)
}

pub(crate) fn pairwise_sum<T>(v: &[T]) -> T
where
    T: Copy + Default + std::ops::Add<Output = T>,
{
    if v.len() <= 32 {
        return v.iter().fold(T::default(), |a, b| a + *b);
    }
    let (l, r) = v.split_at(v.len() / 2);
    pairwise_sum(l) + pairwise_sum(r)
}
