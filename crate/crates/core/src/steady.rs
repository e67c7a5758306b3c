//! Closed-form solution of the steady balancing problem.
//!
//! For each head the residual `g(alpha, gamma; c)` is minimized in
//! closed form: `alpha_bar = arg(c)`, `gamma_bar = arccos(min(1, |c|))`,
//! with minimum value `max(0, |c| - 1)^2`. When `c = 0` every `alpha`
//! with `gamma = pi/2` is optimal (the two masses cancel each other),
//! so the optimum degenerates to a circle.

use crate::error::Result;
use crate::rotor::{HeadProblem, RotorConfig};
use crate::torus::{canonical, circle_dist};
use serde::Serialize;
use std::f64::consts::{FRAC_PI_2, PI, TAU};

/// Minimizer of the per-head residual in canonical coordinates
/// `0 <= alpha_bar < 2*pi`, `0 <= gamma_bar <= pi/2`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SteadyOptimum {
    pub alpha_bar: f64,
    pub gamma_bar: f64,
    /// `inf g = max(0, |c| - 1)^2` in nondimensional units.
    pub residual: f64,
    /// Set when `c = 0`: a continuum of minimizers exists and
    /// `alpha_bar = 0` is only a convention.
    pub degenerate: bool,
}

pub fn steady_argmin(c: [f64; 2]) -> SteadyOptimum {
    let norm = (c[0] * c[0] + c[1] * c[1]).sqrt();
    if norm == 0.0 {
        return SteadyOptimum {
            alpha_bar: 0.0,
            gamma_bar: FRAC_PI_2,
            residual: 0.0,
            degenerate: true,
        };
    }
    let excess = (norm - 1.0).max(0.0);
    SteadyOptimum {
        alpha_bar: canonical(c[1].atan2(c[0])),
        gamma_bar: norm.min(1.0).acos(),
        residual: excess * excess,
        degenerate: false,
    }
}

/// The full zero/argmin set of one head's inf-shifted potential on `T^2`.
///
/// Downstream distance computations need the whole set, not the canonical
/// representative: for `0 < |c| < 1` the four points
/// `(a, +-g)` and `(a + pi, pi +- g)` all realize the minimum
/// (`cos` is even in `gamma` and `g` depends on `(cos g cos a, cos g sin a)`
/// only); for `|c| >= 1` the pair `(a, 0)`, `(a + pi, pi)`; for `c = 0`
/// the circles `gamma in {pi/2, 3*pi/2}`.
#[derive(Debug, Clone, Serialize)]
pub enum HeadZeroSet {
    Points(Vec<[f64; 2]>),
    /// `gamma in {pi/2, 3*pi/2}`, any `alpha`.
    Circles,
}

impl HeadZeroSet {
    pub fn of(opt: &SteadyOptimum) -> Self {
        if opt.degenerate {
            return HeadZeroSet::Circles;
        }
        let (a, g) = (opt.alpha_bar, opt.gamma_bar);
        if g == 0.0 {
            HeadZeroSet::Points(vec![[a, 0.0], [canonical(a + PI), PI]])
        } else {
            HeadZeroSet::Points(vec![
                [a, g],
                [a, canonical(-g)],
                [canonical(a + PI), canonical(PI + g)],
                [canonical(a + PI), canonical(PI - g)],
            ])
        }
    }

    /// Geodesic distance from `(alpha, gamma)` to the set.
    pub fn dist(&self, alpha: f64, gamma: f64) -> f64 {
        match self {
            HeadZeroSet::Points(pts) => pts
                .iter()
                .map(|p| {
                    let da = circle_dist(alpha, p[0]);
                    let dg = circle_dist(gamma, p[1]);
                    (da * da + dg * dg).sqrt()
                })
                .fold(f64::INFINITY, f64::min),
            HeadZeroSet::Circles => {
                circle_dist(gamma, FRAC_PI_2).min(circle_dist(gamma, canonical(1.5 * PI)))
            }
        }
    }

    /// Nearest point of the set to `(alpha, gamma)`.
    pub fn nearest(&self, alpha: f64, gamma: f64) -> [f64; 2] {
        match self {
            HeadZeroSet::Points(pts) => {
                let mut best = pts[0];
                let mut best_d = f64::INFINITY;
                for p in pts {
                    let da = circle_dist(alpha, p[0]);
                    let dg = circle_dist(gamma, p[1]);
                    let d = da * da + dg * dg;
                    if d < best_d {
                        best_d = d;
                        best = *p;
                    }
                }
                best
            }
            HeadZeroSet::Circles => {
                let g = if circle_dist(gamma, FRAC_PI_2) <= circle_dist(gamma, canonical(1.5 * PI))
                {
                    FRAC_PI_2
                } else {
                    canonical(1.5 * PI)
                };
                [canonical(alpha), g]
            }
        }
    }
}

/// Cartesian positions of the four balancing masses, head 1 in plane
/// `z = -a`, head 2 in plane `z = b`.
#[derive(Debug, Clone, Serialize)]
pub struct MassPositions {
    pub head1: [[f64; 3]; 2],
    pub head2: [[f64; 3]; 2],
}

/// Solve the steady problem for both heads and place the masses.
pub fn steady_state(cfg: &RotorConfig) -> Result<(SteadyOptimum, SteadyOptimum, MassPositions)> {
    let h1 = cfg.head(1)?;
    let h2 = cfg.head(2)?;
    let o1 = steady_argmin(h1.c);
    let o2 = steady_argmin(h2.c);
    let positions = MassPositions {
        head1: mass_pair(cfg.r1, -cfg.a, o1.alpha_bar, o1.gamma_bar),
        head2: mass_pair(cfg.r2, cfg.b, o2.alpha_bar, o2.gamma_bar),
    };
    Ok((o1, o2, positions))
}

fn mass_pair(r: f64, z: f64, alpha: f64, gamma: f64) -> [[f64; 3]; 2] {
    let p = |phi: f64| [r * phi.cos(), r * phi.sin(), z];
    [p(alpha - gamma), p(alpha + gamma)]
}

/// Full compensation is possible in head `i` iff
/// `m_i * r_i >= |F_i| / (2 * omega^2)`, i.e. `|c_i| <= 1`.
pub fn can_fully_balance(cfg: &RotorConfig) -> Result<(bool, bool, bool)> {
    let b1 = cfg.head(1)?.c_norm() <= 1.0;
    let b2 = cfg.head(2)?.c_norm() <= 1.0;
    Ok((b1, b2, b1 && b2))
}

/// Strict version of the balanceability threshold, `|c_i| < 1` for both
/// heads. Gates the exponential-decay certificate: under it the Hessian
/// at the optimum is positive definite.
pub fn exp_threshold(cfg: &RotorConfig) -> Result<bool> {
    Ok(cfg.head(1)?.c_norm() < 1.0 && cfg.head(2)?.c_norm() < 1.0)
}

/// Brute-force grid minimizer of `g`, used as a test oracle.
pub fn grid_argmin(h: &HeadProblem, n: usize) -> ([f64; 2], f64) {
    let mut best = [0.0, 0.0];
    let mut best_v = f64::INFINITY;
    for i in 0..n {
        let alpha = TAU * i as f64 / n as f64;
        for j in 0..n {
            let gamma = TAU * j as f64 / n as f64;
            let v = h.g(alpha, gamma);
            if v < best_v {
                best_v = v;
                best = [alpha, gamma];
            }
        }
    }
    (best, best_v)
}
