//! Two-component spinors and the 2×2 complex algebra they live in.

use std::f64::consts::FRAC_1_SQRT_2;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Tolerance on the squared norm of a spinor used as an initial state.
pub const STATE_NORM_TOL: f64 = 1e-12;

/// Spin-1/2 amplitude pair, components along and against the z axis.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Spinor {
    pub up: Complex64,
    pub down: Complex64,
}

impl Spinor {
    pub const fn new(up: Complex64, down: Complex64) -> Self {
        Spinor { up, down }
    }

    pub const fn zero() -> Self {
        Spinor { up: ZERO, down: ZERO }
    }

    pub fn z_plus() -> Self {
        Spinor::new(ONE, ZERO)
    }

    pub fn z_minus() -> Self {
        Spinor::new(ZERO, ONE)
    }

    /// Spin along +x, (1, 1)/√2.
    pub fn x_plus() -> Self {
        Spinor::new(Complex64::new(FRAC_1_SQRT_2, 0.0), Complex64::new(FRAC_1_SQRT_2, 0.0))
    }

    /// Spin along +y, (1, i)/√2.
    pub fn y_plus() -> Self {
        Spinor::new(Complex64::new(FRAC_1_SQRT_2, 0.0), Complex64::new(0.0, FRAC_1_SQRT_2))
    }

    /// Spin state pointing along the direction with polar angle `polar` and
    /// azimuth `azimuth` on the Bloch sphere.
    pub fn from_bloch(polar: f64, azimuth: f64) -> Self {
        let (s, c) = (0.5 * polar).sin_cos();
        Spinor::new(Complex64::new(c, 0.0), Complex64::from_polar(s, azimuth))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.up.norm_sqr() + self.down.norm_sqr()
    }

    pub fn is_finite(&self) -> bool {
        self.up.re.is_finite() && self.up.im.is_finite() && self.down.re.is_finite() && self.down.im.is_finite()
    }

    /// Checks the invariants of an initial state: finite and unit norm.
    pub fn validate_state(&self) -> Result<()> {
        if !self.is_finite() {
            return Err(Error::domain("spinor has non-finite components"));
        }
        let n = self.norm_sqr();
        if (n - 1.0).abs() > STATE_NORM_TOL {
            return Err(Error::domain(format!("initial spinor must be normalized, |eta|^2 = {n}")));
        }
        Ok(())
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sqr().sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::domain("cannot normalize a zero or non-finite spinor"));
        }
        Ok(self.scale(1.0 / n))
    }

    pub fn scale(&self, s: f64) -> Self {
        Spinor::new(self.up * s, self.down * s)
    }

    pub fn scale_c(&self, s: Complex64) -> Self {
        Spinor::new(self.up * s, self.down * s)
    }

    /// ⟨a|b⟩.
    pub fn inner(&self, other: &Spinor) -> Complex64 {
        self.up.conj() * other.up + self.down.conj() * other.down
    }

    /// Unnormalized expectation ⟨ψ|σ|ψ⟩.
    pub fn expectation(&self, p: Pauli) -> f64 {
        let c = self.up.conj() * self.down;
        match p {
            Pauli::X => 2.0 * c.re,
            Pauli::Y => 2.0 * c.im,
            Pauli::Z => self.up.norm_sqr() - self.down.norm_sqr(),
        }
    }

    /// Bloch vector (⟨σx⟩, ⟨σy⟩, ⟨σz⟩), unnormalized.
    pub fn bloch(&self) -> [f64; 3] {
        [self.expectation(Pauli::X), self.expectation(Pauli::Y), self.expectation(Pauli::Z)]
    }
}

impl Add for Spinor {
    type Output = Spinor;
    fn add(self, o: Spinor) -> Spinor {
        Spinor::new(self.up + o.up, self.down + o.down)
    }
}

impl Sub for Spinor {
    type Output = Spinor;
    fn sub(self, o: Spinor) -> Spinor {
        Spinor::new(self.up - o.up, self.down - o.down)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn matrix(self) -> Matrix2 {
        match self {
            Pauli::X => Matrix2::new([[ZERO, ONE], [ONE, ZERO]]),
            Pauli::Y => Matrix2::new([[ZERO, -I], [I, ZERO]]),
            Pauli::Z => Matrix2::new([[ONE, ZERO], [ZERO, -ONE]]),
        }
    }
}

/// Dense 2×2 complex matrix, row major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Matrix2 {
    pub m: [[Complex64; 2]; 2],
}

impl Matrix2 {
    pub const fn new(m: [[Complex64; 2]; 2]) -> Self {
        Matrix2 { m }
    }

    pub fn identity() -> Self {
        Matrix2::new([[ONE, ZERO], [ZERO, ONE]])
    }

    pub fn zero() -> Self {
        Matrix2::new([[ZERO; 2]; 2])
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let m = self.m;
        Matrix2::new([[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]])
    }

    pub fn adjoint(&self) -> Self {
        let m = self.m;
        Matrix2::new([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }

    pub fn trace(&self) -> Complex64 {
        self.m[0][0] + self.m[1][1]
    }

    pub fn apply(&self, v: &Spinor) -> Spinor {
        let m = &self.m;
        Spinor::new(m[0][0] * v.up + m[0][1] * v.down, m[1][0] * v.up + m[1][1] * v.down)
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Matrix2) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                d = d.max((self.m[i][j] - other.m[i][j]).norm());
            }
        }
        d
    }

    /// Projector (I + m·σ)/2 onto the eigenvalue `m` (±1) of `sigma`.
    pub fn projector(sigma: &Matrix2, m: i8) -> Matrix2 {
        (Matrix2::identity() + sigma.scale(Complex64::new(f64::from(m), 0.0))).scale(Complex64::new(0.5, 0.0))
    }
}

impl Add for Matrix2 {
    type Output = Matrix2;
    fn add(self, o: Matrix2) -> Matrix2 {
        let mut r = self;
        for i in 0..2 {
            for j in 0..2 {
                r.m[i][j] += o.m[i][j];
            }
        }
        r
    }
}

impl Sub for Matrix2 {
    type Output = Matrix2;
    fn sub(self, o: Matrix2) -> Matrix2 {
        let mut r = self;
        for i in 0..2 {
            for j in 0..2 {
                r.m[i][j] -= o.m[i][j];
            }
        }
        r
    }
}

impl Mul for Matrix2 {
    type Output = Matrix2;
    fn mul(self, o: Matrix2) -> Matrix2 {
        let (a, b) = (&self.m, &o.m);
        let mut r = Matrix2::zero();
        for i in 0..2 {
            for j in 0..2 {
                r.m[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        r
    }
}
