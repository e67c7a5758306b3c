//! Uniform view of the inf-shifted potential on `T^n`.
//!
//! The open-loop solver, the ODE integrators and the stabilization
//! analysis all consume the same interface: potential value, gradient,
//! and geodesic distance to the argmin set. Per-head problems live on
//! `T^2`; the joint problem on `T^4` is the direct sum of the two heads.

use crate::rotor::{HeadProblem, RotorConfig};
use crate::steady::{steady_argmin, HeadZeroSet};
use crate::torus::AngleState;

/// Inf-shifted potential `Q_hat = Q - inf Q` on the `n`-torus together
/// with its argmin set. Inputs may live anywhere in the universal cover.
pub trait TorusPotential: Sync {
    fn dim(&self) -> usize;

    /// `Q_hat(x) >= 0`, zero exactly on the argmin set.
    fn value_hat(&self, x: &[f64]) -> f64;

    /// Gradient of `Q_hat` (equals the gradient of `Q`).
    fn grad(&self, x: &[f64], out: &mut [f64]);

    /// Hessian of `Q_hat`, written row-major into `out` (`n * n`).
    fn hess(&self, x: &[f64], out: &mut [f64]);

    /// Geodesic distance to the argmin set.
    fn dist_to_zero(&self, x: &[f64]) -> f64;

    /// A nearest argmin point, canonical coordinates.
    fn nearest_zero(&self, x: &[f64]) -> Vec<f64>;
}

/// One balancing head on `T^2`, coordinates `(alpha, gamma)`.
pub struct HeadPotential {
    pub head: HeadProblem,
    pub zeros: HeadZeroSet,
}

impl HeadPotential {
    pub fn new(head: HeadProblem) -> Self {
        let opt = steady_argmin(head.c);
        Self {
            zeros: HeadZeroSet::of(&opt),
            head,
        }
    }

    pub fn from_config(cfg: &RotorConfig, index: u8) -> crate::error::Result<Self> {
        Ok(Self::new(cfg.head(index)?))
    }
}

impl TorusPotential for HeadPotential {
    fn dim(&self) -> usize {
        2
    }

    fn value_hat(&self, x: &[f64]) -> f64 {
        // Clamp tiny negative round-off: g - g_inf >= 0 analytically.
        self.head.potential_hat(x[0], x[1]).max(0.0)
    }

    fn grad(&self, x: &[f64], out: &mut [f64]) {
        let g = self.head.potential_grad(x[0], x[1]);
        out[0] = g[0];
        out[1] = g[1];
    }

    fn hess(&self, x: &[f64], out: &mut [f64]) {
        let h = self.head.potential_hessian(x[0], x[1]);
        out[0] = h[0][0];
        out[1] = h[0][1];
        out[2] = h[1][0];
        out[3] = h[1][1];
    }

    fn dist_to_zero(&self, x: &[f64]) -> f64 {
        self.zeros.dist(x[0], x[1])
    }

    fn nearest_zero(&self, x: &[f64]) -> Vec<f64> {
        self.zeros.nearest(x[0], x[1]).to_vec()
    }
}

/// Both heads jointly on `T^4`, coordinates
/// `(alpha1, gamma1, alpha2, gamma2)`. The potential and the argmin set
/// split across heads, so distances add in quadrature.
pub struct JointPotential {
    pub head1: HeadPotential,
    pub head2: HeadPotential,
}

impl JointPotential {
    pub fn from_config(cfg: &RotorConfig) -> crate::error::Result<Self> {
        Ok(Self {
            head1: HeadPotential::from_config(cfg, 1)?,
            head2: HeadPotential::from_config(cfg, 2)?,
        })
    }

    pub fn value_hat_state(&self, s: &AngleState) -> f64 {
        self.value_hat(&s.to_array())
    }
}

impl TorusPotential for JointPotential {
    fn dim(&self) -> usize {
        4
    }

    fn value_hat(&self, x: &[f64]) -> f64 {
        self.head1.value_hat(&x[0..2]) + self.head2.value_hat(&x[2..4])
    }

    fn grad(&self, x: &[f64], out: &mut [f64]) {
        let (a, b) = out.split_at_mut(2);
        self.head1.grad(&x[0..2], a);
        self.head2.grad(&x[2..4], b);
    }

    fn hess(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        let h1 = self.head1.head.potential_hessian(x[0], x[1]);
        let h2 = self.head2.head.potential_hessian(x[2], x[3]);
        for i in 0..2 {
            for j in 0..2 {
                out[i * 4 + j] = h1[i][j];
                out[(i + 2) * 4 + (j + 2)] = h2[i][j];
            }
        }
    }

    fn dist_to_zero(&self, x: &[f64]) -> f64 {
        let d1 = self.head1.dist_to_zero(&x[0..2]);
        let d2 = self.head2.dist_to_zero(&x[2..4]);
        (d1 * d1 + d2 * d2).sqrt()
    }

    fn nearest_zero(&self, x: &[f64]) -> Vec<f64> {
        let mut z = self.head1.nearest_zero(&x[0..2]);
        z.extend(self.head2.nearest_zero(&x[2..4]));
        z
    }
}

/// A balanced head (`c = 0`) reduced to the gap angle alone: `alpha` is
/// conserved by the dynamics, leaving the pendulum potential
/// `Q_hat(gamma) = (beta/2) cos^2(gamma)` on `T^1` with argmin circles
/// collapsing to the two points `pi/2`, `3*pi/2`.
pub struct PendulumPotential {
    pub beta: f64,
}

impl TorusPotential for PendulumPotential {
    fn dim(&self) -> usize {
        1
    }

    fn value_hat(&self, x: &[f64]) -> f64 {
        let c = x[0].cos();
        0.5 * self.beta * c * c
    }

    fn grad(&self, x: &[f64], out: &mut [f64]) {
        out[0] = -0.5 * self.beta * (2.0 * x[0]).sin();
    }

    fn hess(&self, x: &[f64], out: &mut [f64]) {
        out[0] = -self.beta * (2.0 * x[0]).cos();
    }

    fn dist_to_zero(&self, x: &[f64]) -> f64 {
        use std::f64::consts::{FRAC_PI_2, PI};
        let d1 = crate::torus::circle_dist(x[0], FRAC_PI_2);
        let d2 = crate::torus::circle_dist(x[0], 1.5 * PI);
        d1.min(d2)
    }

    fn nearest_zero(&self, x: &[f64]) -> Vec<f64> {
        use std::f64::consts::{FRAC_PI_2, PI};
        let d1 = crate::torus::circle_dist(x[0], FRAC_PI_2);
        let d2 = crate::torus::circle_dist(x[0], 1.5 * PI);
        vec![if d1 <= d2 { FRAC_PI_2 } else { 1.5 * PI }]
    }
}

/// Central finite-difference gradient, used as a test oracle.
pub fn fd_grad<P: TorusPotential + ?Sized>(p: &P, x: &[f64], h: f64) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        xp[i] = x[i] + h;
        let up = p.value_hat(&xp);
        xp[i] = x[i] - h;
        let um = p.value_hat(&xp);
        xp[i] = x[i];
        out[i] = (up - um) / (2.0 * h);
    }
    out
}
