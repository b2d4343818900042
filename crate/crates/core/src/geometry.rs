//! Unit-sphere primitives: vectors, the sign value-function, seeded sphere
//! sampling and spherical-cap solid angles.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::GeometryError;

/// Tolerance on `|v|² - 1` for anything stored as a [`UnitVector3`].
pub const UNIT_NORM_TOLERANCE: f64 = 1e-12;

/// Inputs whose norm is this close to one are renormalized instead of rejected.
pub const RENORMALIZE_TOLERANCE: f64 = 1e-9;

/// A plain Cartesian 3-vector. Used for Bloch vectors, which may lie inside the ball.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vector3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vector3 {
    pub const ZERO: Vector3 = Vector3::new(0.0, 0.0, 0.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(&self, other: &Vector3) -> f64 {
        dot(self, other)
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn scale(&self, k: f64) -> Vector3 {
        Vector3::new(self.x * k, self.y * k, self.z * k)
    }
}

impl Add for Vector3 {
    type Output = Vector3;

    fn add(self, rhs: Vector3) -> Vector3 {
        Vector3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Neg for Vector3 {
    type Output = Vector3;

    fn neg(self) -> Vector3 {
        Vector3::new(-self.x, -self.y, -self.z)
    }
}

impl fmt::Display for Vector3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

/// Euclidean inner product.
#[inline]
pub fn dot(u: &Vector3, v: &Vector3) -> f64 {
    u.x * v.x + u.y * v.y + u.z * v.z
}

/// A point on the unit 2-sphere.
///
/// Hidden variables, measurement directions and (through [`Vector3`]) Bloch
/// vectors all live here. The norm is within [`UNIT_NORM_TOLERANCE`] of one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitVector3(Vector3);

impl UnitVector3 {
    pub const X: UnitVector3 = UnitVector3(Vector3::new(1.0, 0.0, 0.0));
    pub const Y: UnitVector3 = UnitVector3(Vector3::new(0.0, 1.0, 0.0));
    pub const Z: UnitVector3 = UnitVector3(Vector3::new(0.0, 0.0, 1.0));

    /// Builds a unit vector from components that are already (nearly) unit length.
    ///
    /// Components within [`RENORMALIZE_TOLERANCE`] of unit norm are normalized;
    /// anything further away is rejected.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self, GeometryError> {
        let v = Vector3::new(x, y, z);
        if !v.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        let norm = v.norm();
        if (norm - 1.0).abs() > RENORMALIZE_TOLERANCE {
            return Err(GeometryError::NotUnitNorm { norm });
        }
        Ok(Self(v.scale(1.0 / norm)))
    }

    /// Normalizes an arbitrary nonzero direction.
    pub fn from_direction(v: Vector3) -> Result<Self, GeometryError> {
        if !v.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        let norm = v.norm();
        if norm == 0.0 {
            return Err(GeometryError::ZeroVector);
        }
        Ok(Self(v.scale(1.0 / norm)))
    }

    /// Direction with polar angle `theta` from +z and azimuth `phi` (radians).
    pub fn from_spherical(theta: f64, phi: f64) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Self(Vector3::new(st * cp, st * sp, ct))
    }

    /// Direction in the xz-plane at angle `theta` (radians) from +z towards +x.
    pub fn planar(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self(Vector3::new(s, 0.0, c))
    }

    pub fn as_vector(&self) -> &Vector3 {
        &self.0
    }

    pub fn x(&self) -> f64 {
        self.0.x
    }

    pub fn y(&self) -> f64 {
        self.0.y
    }

    pub fn z(&self) -> f64 {
        self.0.z
    }

    #[inline]
    pub fn dot(&self, other: &UnitVector3) -> f64 {
        dot(&self.0, &other.0)
    }

    /// Angle to `other` in `[0, π]`.
    pub fn angle_to(&self, other: &UnitVector3) -> f64 {
        self.dot(other).clamp(-1.0, 1.0).acos()
    }
}

impl Neg for UnitVector3 {
    type Output = UnitVector3;

    fn neg(self) -> UnitVector3 {
        UnitVector3(-self.0)
    }
}

impl From<UnitVector3> for Vector3 {
    fn from(u: UnitVector3) -> Vector3 {
        u.0
    }
}

/// A measurement outcome, `+1` or `-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> i32 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.value())
    }

    pub fn is_plus(self) -> bool {
        self == Sign::Plus
    }
}

impl Mul for Sign {
    type Output = Sign;

    #[inline]
    fn mul(self, rhs: Sign) -> Sign {
        if self == rhs {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

impl Neg for Sign {
    type Output = Sign;

    fn neg(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+1",
            Sign::Minus => "-1",
        })
    }
}

/// The sign value-function. Exact zeros map to `+1`.
///
/// # Panics
///
/// Panics on NaN or infinite input.
#[inline]
pub fn sgn(t: f64) -> Sign {
    assert!(t.is_finite(), "sgn of non-finite value {t}");
    if t < 0.0 {
        Sign::Minus
    } else {
        Sign::Plus
    }
}

/// A seeded, counter-based random stream.
///
/// Every `(master_seed, stream_index)` pair names one ChaCha8 stream, so the
/// sequence is identical on every platform and distinct indices never overlap.
#[derive(Debug, Clone)]
pub struct SeededRng {
    master_seed: u64,
    stream_index: u64,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(master_seed);
        inner.set_stream(stream_index);
        Self {
            master_seed,
            stream_index,
            inner,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_index(&self) -> u64 {
        self.stream_index
    }

    /// Uniform draw from `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.inner.try_fill_bytes(dest)
    }
}

/// Uniform draw from the unit sphere (Archimedes: z is uniform on `[-1, 1]`).
#[inline]
pub fn sample_unit_vector(rng: &mut SeededRng) -> UnitVector3 {
    let z = 2.0 * rng.uniform() - 1.0;
    let phi = 2.0 * PI * rng.uniform();
    let r = (1.0 - z * z).max(0.0).sqrt();
    let (s, c) = phi.sin_cos();
    UnitVector3(Vector3::new(r * c, r * s, z))
}

fn check_cap_threshold(c: f64) -> Result<(), GeometryError> {
    if !(-1.0..=1.0).contains(&c) {
        return Err(GeometryError::CapThresholdOutOfRange(c));
    }
    Ok(())
}

/// Solid angle of the cap `{λ : u·λ > c}` for any fixed unit `u`: `2π(1 − c)`.
pub fn cap_solid_angle_above(c: f64) -> Result<f64, GeometryError> {
    check_cap_threshold(c)?;
    Ok(2.0 * PI * (1.0 - c))
}

/// Solid angle of the complement `{λ : u·λ < c}`: `2π(1 + c)`.
pub fn cap_solid_angle_below(c: f64) -> Result<f64, GeometryError> {
    check_cap_threshold(c)?;
    Ok(2.0 * PI * (1.0 + c))
}
