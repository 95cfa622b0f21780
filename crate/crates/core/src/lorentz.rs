//! Minkowski 3-space with signature (+, +, -).
//!
//! Points, tangent vectors, curve samples and normals all share [`LVec3`].

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LVec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CausalClass {
    Spacelike,
    Null,
    Timelike,
}

impl fmt::Display for CausalClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CausalClass::Spacelike => "spacelike",
            CausalClass::Null => "null",
            CausalClass::Timelike => "timelike",
        };
        f.write_str(s)
    }
}

impl LVec3 {
    pub const ZERO: LVec3 = LVec3 {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, other: LVec3) -> f64 {
        minkowski_dot(self, other)
    }

    pub fn cross(self, other: LVec3) -> LVec3 {
        lorentz_cross(self, other)
    }

    /// Lorentzian squared length `<v, v>`.
    pub fn norm_sq(self) -> f64 {
        minkowski_dot(self, self)
    }

    /// Euclidean length, used for "is this vector zero" style tests.
    pub fn euclidean_norm(self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn max_abs(self) -> f64 {
        self.x.abs().max(self.y.abs()).max(self.z.abs())
    }

    pub fn as_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    /// Rotation about the vertical axis, oriented so that a radial surface
    /// `(f cos u, -f sin u, h)` satisfies `rotate_z(psi(u), t) = psi(u + t)`.
    pub fn rotate_z(self, theta: f64) -> LVec3 {
        let (s, c) = theta.sin_cos();
        LVec3::new(self.x * c + self.y * s, -self.x * s + self.y * c, self.z)
    }
}

impl Add for LVec3 {
    type Output = LVec3;
    fn add(self, o: LVec3) -> LVec3 {
        LVec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for LVec3 {
    fn add_assign(&mut self, o: LVec3) {
        self.x += o.x;
        self.y += o.y;
        self.z += o.z;
    }
}

impl Sub for LVec3 {
    type Output = LVec3;
    fn sub(self, o: LVec3) -> LVec3 {
        LVec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for LVec3 {
    type Output = LVec3;
    fn neg(self) -> LVec3 {
        LVec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for LVec3 {
    type Output = LVec3;
    fn mul(self, s: f64) -> LVec3 {
        LVec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Mul<LVec3> for f64 {
    type Output = LVec3;
    fn mul(self, v: LVec3) -> LVec3 {
        v * self
    }
}

impl Div<f64> for LVec3 {
    type Output = LVec3;
    fn div(self, s: f64) -> LVec3 {
        LVec3::new(self.x / s, self.y / s, self.z / s)
    }
}

/// `a.x b.x + a.y b.y - a.z b.z`.
pub fn minkowski_dot(a: LVec3, b: LVec3) -> f64 {
    a.x * b.x + a.y * b.y - a.z * b.z
}

/// Determinant of the 3x3 matrix with rows `a`, `b`, `c`.
pub fn det3(a: LVec3, b: LVec3, c: LVec3) -> f64 {
    a.x * (b.y * c.z - b.z * c.y) - a.y * (b.x * c.z - b.z * c.x) + a.z * (b.x * c.y - b.y * c.x)
}

/// The vector `w` with `<w, c> = -det(a, b, c)` for every `c`.
///
/// This is the Euclidean cross product with the horizontal components
/// negated; `e1 x e2 = e3`.
pub fn lorentz_cross(a: LVec3, b: LVec3) -> LVec3 {
    LVec3::new(
        -(a.y * b.z - a.z * b.y),
        -(a.z * b.x - a.x * b.z),
        a.x * b.y - a.y * b.x,
    )
}

/// Stereographic projection of the upper hyperboloid onto the unit disk,
/// `(x - i y) / (1 + z)`.
pub fn stereographic(g: LVec3) -> Result<Complex64> {
    let denom = 1.0 + g.z;
    if denom <= 0.0 || !denom.is_finite() {
        return Err(Error::Domain(format!(
            "stereographic projection needs 1 + z > 0, got z = {}",
            g.z
        )));
    }
    Ok(Complex64::new(g.x, -g.y) / denom)
}

pub fn classify(v: LVec3, tol: f64) -> CausalClass {
    let q = v.norm_sq();
    if q.abs() <= tol {
        CausalClass::Null
    } else if q > 0.0 {
        CausalClass::Spacelike
    } else {
        CausalClass::Timelike
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const E1: LVec3 = LVec3::new(1.0, 0.0, 0.0);
    const E2: LVec3 = LVec3::new(0.0, 1.0, 0.0);
    const E3: LVec3 = LVec3::new(0.0, 0.0, 1.0);

    #[test]
    fn dot_examples() {
        assert_eq!(minkowski_dot(E3, E3), -1.0);
        assert_eq!(minkowski_dot(E1, E3), 0.0);
        let v = LVec3::new(3.0, 4.0, 5.0);
        assert_eq!(minkowski_dot(v, v), 0.0);
    }

    #[test]
    fn cross_of_axes() {
        // Solving <w, c> = -det(e1, e2, c) for c = e1, e2, e3 gives
        // w.x = 0, w.y = 0, -w.z = -1.
        assert_eq!(lorentz_cross(E1, E2), LVec3::new(0.0, 0.0, 1.0));
        assert_eq!(lorentz_cross(E2, E1), LVec3::new(0.0, 0.0, -1.0));
    }

    #[test]
    fn stereographic_examples() {
        assert_eq!(stereographic(E3).unwrap(), Complex64::new(0.0, 0.0));
        let r2 = 2f64.sqrt();
        let g = stereographic(LVec3::new(1.0, 0.0, r2)).unwrap();
        assert!((g - Complex64::new(r2 - 1.0, 0.0)).norm() < 1e-15);
        let g = stereographic(LVec3::new(0.0, -1.0, r2)).unwrap();
        assert!((g - Complex64::new(0.0, r2 - 1.0)).norm() < 1e-15);
    }

    #[test]
    fn stereographic_rejects_lower_sheet() {
        assert!(matches!(
            stereographic(LVec3::new(0.0, 0.0, -1.0)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify(E1, 1e-12), CausalClass::Spacelike);
        assert_eq!(
            classify(LVec3::new(1.0, 0.0, 1.0), 1e-12),
            CausalClass::Null
        );
        assert_eq!(classify(E3, 1e-12), CausalClass::Timelike);
    }

    #[test]
    fn rotation_matches_phase_shift() {
        let (f, h, u, t): (f64, f64, f64, f64) = (0.3, -0.2, 0.7, 1.1);
        let p = LVec3::new(u.cos() * f, -u.sin() * f, h);
        let q = LVec3::new((u + t).cos() * f, -(u + t).sin() * f, h);
        assert!((p.rotate_z(t) - q).max_abs() < 1e-15);
    }

    /// det(a, b, c) evaluated by cofactor expansion along the last row,
    /// independent of `det3`'s first-row expansion.
    fn det_last_row(a: LVec3, b: LVec3, c: LVec3) -> f64 {
        c.x * (a.y * b.z - a.z * b.y) - c.y * (a.x * b.z - a.z * b.x)
            + c.z * (a.x * b.y - a.y * b.x)
    }

    fn unit_vec() -> impl Strategy<Value = LVec3> {
        (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0).prop_map(|(x, y, z)| LVec3::new(x, y, z))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn cross_matches_negative_determinant(a in unit_vec(), b in unit_vec(), c in unit_vec()) {
            let w = lorentz_cross(a, b);
            prop_assert!((minkowski_dot(w, c) + det_last_row(a, b, c)).abs() <= 1e-12);
        }

        #[test]
        fn cross_is_orthogonal(a in unit_vec(), b in unit_vec()) {
            let w = lorentz_cross(a, b);
            prop_assert!(minkowski_dot(w, a).abs() <= 1e-12);
            prop_assert!(minkowski_dot(w, b).abs() <= 1e-12);
        }

        #[test]
        fn dot_is_symmetric_bilinear(a in unit_vec(), b in unit_vec(), c in unit_vec(), s in -2.0f64..2.0) {
            prop_assert!((minkowski_dot(a, b) - minkowski_dot(b, a)).abs() <= 1e-15);
            let lhs = minkowski_dot(a * s + b, c);
            let rhs = s * minkowski_dot(a, c) + minkowski_dot(b, c);
            prop_assert!((lhs - rhs).abs() <= 1e-14);
        }

        #[test]
        fn stereographic_lands_in_disk(x in -5.0f64..5.0, y in -5.0f64..5.0) {
            let g = LVec3::new(x, y, (1.0 + x * x + y * y).sqrt());
            prop_assert!(stereographic(g).unwrap().norm() < 1.0);
        }
    }
}
