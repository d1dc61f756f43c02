use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// A real 2-vector holding the in-phase and quadrature parts of one complex return.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub re: f64,
    pub im: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { re: 0.0, im: 0.0 };

    #[inline]
    pub const fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    /// Unit vector at angle `theta` (radians).
    #[inline]
    pub fn from_angle(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self { re: c, im: s }
    }

    #[inline]
    pub fn dot(self, other: Vec2) -> f64 {
        self.re.mul_add(other.re, self.im * other.im)
    }

    /// z-component of the planar cross product, `self × other`.
    #[inline]
    pub fn cross(self, other: Vec2) -> f64 {
        self.re.mul_add(other.im, -(self.im * other.re))
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.re.hypot(self.im)
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    #[inline]
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.re + o.re, self.im + o.im)
    }
}

impl AddAssign for Vec2 {
    #[inline]
    fn add_assign(&mut self, o: Vec2) {
        self.re += o.re;
        self.im += o.im;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    #[inline]
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.re - o.re, self.im - o.im)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    #[inline]
    fn neg(self) -> Vec2 {
        Vec2::new(-self.re, -self.im)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    #[inline]
    fn mul(self, v: Vec2) -> Vec2 {
        Vec2::new(self * v.re, self * v.im)
    }
}

impl From<[f64; 2]> for Vec2 {
    fn from(a: [f64; 2]) -> Self {
        Vec2::new(a[0], a[1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_identity() {
        // (z × m)² = ‖m‖² − (zᵀm)² for unit z
        let z = Vec2::from_angle(0.3);
        let m = Vec2::new(2.0, -1.5);
        let lhs = z.cross(m).powi(2);
        let rhs = m.norm_sq() - z.dot(m).powi(2);
        assert!((lhs - rhs).abs() < 1e-14);
    }
}
