//! Angle arithmetic on the flat torus.
//!
//! Angles are stored canonically in `[0, 2*pi)`; optimization and
//! integration work in the universal cover (plain reals) and only
//! canonicalize at output.

use std::f64::consts::{PI, TAU};

/// Canonical representative of an angle in `[0, 2*pi)`.
pub fn canonical(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    // rem_euclid can return TAU for tiny negative inputs.
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Signed minimal difference `b - a` on the circle, in `(-pi, pi]`.
pub fn signed_delta(a: f64, b: f64) -> f64 {
    let d = canonical(b - a);
    if d > PI {
        d - TAU
    } else {
        d
    }
}

/// Geodesic (wraparound) distance between two angles.
pub fn circle_dist(a: f64, b: f64) -> f64 {
    signed_delta(a, b).abs()
}

/// Flat geodesic distance on `T^n`: per-coordinate wraparound, then
/// the Euclidean norm.
pub fn torus_dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = circle_dist(x, y);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Representative of angle `target` in the cover nearest to `near`.
pub fn lift_near(target: f64, near: f64) -> f64 {
    near + signed_delta(near, target)
}

/// Four angles parametrizing the two balancing heads,
/// `(alpha1, gamma1, alpha2, gamma2)`, stored canonically.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AngleState {
    pub alpha1: f64,
    pub gamma1: f64,
    pub alpha2: f64,
    pub gamma2: f64,
}

impl AngleState {
    pub fn new(alpha1: f64, gamma1: f64, alpha2: f64, gamma2: f64) -> Self {
        Self {
            alpha1: canonical(alpha1),
            gamma1: canonical(gamma1),
            alpha2: canonical(alpha2),
            gamma2: canonical(gamma2),
        }
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.alpha1, self.gamma1, self.alpha2, self.gamma2]
    }

    /// Angles of head `i` (1 or 2) as `(alpha, gamma)`.
    pub fn head(self, index: u8) -> [f64; 2] {
        match index {
            1 => [self.alpha1, self.gamma1],
            2 => [self.alpha2, self.gamma2],
            _ => panic!("head index must be 1 or 2"),
        }
    }

    pub fn dist(self, other: Self) -> f64 {
        torus_dist(&self.to_array(), &other.to_array())
    }
}
