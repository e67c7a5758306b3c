//! Physical model of the imbalanced rotor and its balancing heads.
//!
//! Two heads of paired masses rotate with the rotor in planes `z = -a`
//! and `z = b`. The imbalance load `(F, N)` is decomposed into plane
//! forces `F_1`, `F_2`; each head compensates its plane force with the
//! centrifugal force of its mass pair. The residual imbalance is
//! measured by `G = |B_1 + F_1|^2 + |B_2 + F_2|^2`, which splits per
//! head and reduces, after nondimensionalization by `2*m_i*r_i*omega^2`,
//! to the potential `Q_i(alpha, gamma)` driving everything downstream.

use crate::error::{Error, Result};
use crate::torus::AngleState;
use serde::{Deserialize, Serialize};

/// Physical parameters of the rotor and balancing device.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RotorConfig {
    /// Mass of each balancing mass in plane 1 (kg).
    pub m1: f64,
    /// Mass of each balancing mass in plane 2 (kg).
    pub m2: f64,
    /// Radius of the mass circle in plane 1 (m).
    pub r1: f64,
    /// Radius of the mass circle in plane 2 (m).
    pub r2: f64,
    /// Distance of plane 1 from the origin along -z (m).
    pub a: f64,
    /// Distance of plane 2 from the origin along +z (m).
    pub b: f64,
    /// Angular velocity of the rotor (rad/s).
    pub omega: f64,
    /// Imbalance force at the origin, (F_x, F_y); the z-component vanishes.
    pub force: [f64; 2],
    /// Imbalance moment about the origin, (N_x, N_y); the z-component vanishes.
    pub moment: [f64; 2],
    /// Weight of the imbalance term in the cost functional.
    pub beta: f64,
}

impl RotorConfig {
    pub fn validate(&self) -> Result<()> {
        let positive: [(&'static str, f64); 6] = [
            ("m1", self.m1),
            ("m2", self.m2),
            ("r1", self.r1),
            ("r2", self.r2),
            ("omega", self.omega),
            ("beta", self.beta),
        ];
        for (field, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter {
                    field,
                    reason: format!("must be strictly positive and finite, got {v}"),
                });
            }
        }
        for (field, v) in [("a", self.a), ("b", self.b)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter {
                    field,
                    reason: format!("must be nonnegative and finite, got {v}"),
                });
            }
        }
        if !(self.a + self.b > 0.0) {
            return Err(Error::DegenerateGeometry(self.a + self.b));
        }
        for (field, v) in [
            ("force", self.force[0]),
            ("force", self.force[1]),
            ("moment", self.moment[0]),
            ("moment", self.moment[1]),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter {
                    field,
                    reason: "components must be finite".into(),
                });
            }
        }
        Ok(())
    }

    pub fn head(&self, index: u8) -> Result<HeadProblem> {
        head_problem(self, index)
    }
}

/// Equivalent loads of the imbalance in the two balancing planes.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PlaneForces {
    pub f1: [f64; 2],
    pub f2: [f64; 2],
}

/// Decompose the imbalance `(F, N)` into a force `F_1` at `P_1 = (0,0,-a)`
/// and a force `F_2` at `P_2 = (0,0,b)` that are statically equivalent:
/// `F_1 + F_2 = F` and the moments about the origin reproduce `N`.
pub fn decompose_imbalance(cfg: &RotorConfig) -> Result<PlaneForces> {
    let (a, b) = (cfg.a, cfg.b);
    let s = a + b;
    if !(s > 0.0) {
        return Err(Error::DegenerateGeometry(s));
    }
    let [fx, fy] = cfg.force;
    let [nx, ny] = cfg.moment;
    Ok(PlaneForces {
        f1: [(b * fx - ny) / s, (b * fy + nx) / s],
        f2: [(a * fx + ny) / s, (a * fy - nx) / s],
    })
}

/// Centrifugal force of one head: two masses `m` at radius `r` and angles
/// `alpha +- gamma`, rotating at `omega`.
pub fn balancing_force(m: f64, r: f64, omega: f64, alpha: f64, gamma: f64) -> [f64; 2] {
    let mag = 2.0 * m * r * omega * omega * gamma.cos();
    [mag * alpha.cos(), mag * alpha.sin()]
}

/// The imbalance indicator `G` and its per-head parts `(G1, G2)`,
/// in physical units (N^2).
pub fn imbalance_indicator(cfg: &RotorConfig, s: &AngleState) -> Result<(f64, f64, f64)> {
    let pf = decompose_imbalance(cfg)?;
    let g1 = head_residual_sq(cfg.m1, cfg.r1, cfg.omega, pf.f1, s.alpha1, s.gamma1);
    let g2 = head_residual_sq(cfg.m2, cfg.r2, cfg.omega, pf.f2, s.alpha2, s.gamma2);
    Ok((g1 + g2, g1, g2))
}

fn head_residual_sq(m: f64, r: f64, omega: f64, f: [f64; 2], alpha: f64, gamma: f64) -> f64 {
    let b = balancing_force(m, r, omega, alpha, gamma);
    let rx = b[0] + f[0];
    let ry = b[1] + f[1];
    rx * rx + ry * ry
}

/// The reduced per-head problem: minimize
/// `g(alpha, gamma) = (cos(gamma)cos(alpha) - c1)^2 + (cos(gamma)sin(alpha) - c2)^2`
/// with `c = -F_i / (2 m_i r_i omega^2)`, so zeros of `g` coincide with
/// zeros of the head imbalance `G_i = scale^2 * g`.
#[derive(Debug, Clone, Serialize)]
pub struct HeadProblem {
    pub index: u8,
    /// Nondimensional target vector.
    pub c: [f64; 2],
    /// `2 * m_i * r_i * omega^2` (N).
    pub scale: f64,
    pub beta: f64,
}

/// Build the reduced problem for head `index` (1 or 2).
pub fn head_problem(cfg: &RotorConfig, index: u8) -> Result<HeadProblem> {
    cfg.validate()?;
    let pf = decompose_imbalance(cfg)?;
    let (m, r, f) = match index {
        1 => (cfg.m1, cfg.r1, pf.f1),
        2 => (cfg.m2, cfg.r2, pf.f2),
        _ => {
            return Err(Error::InvalidParameter {
                field: "index",
                reason: format!("head index must be 1 or 2, got {index}"),
            })
        }
    };
    let scale = 2.0 * m * r * omega_sq(cfg);
    Ok(HeadProblem {
        index,
        c: [-f[0] / scale, -f[1] / scale],
        scale,
        beta: cfg.beta,
    })
}

fn omega_sq(cfg: &RotorConfig) -> f64 {
    cfg.omega * cfg.omega
}

impl HeadProblem {
    pub fn c_norm(&self) -> f64 {
        (self.c[0] * self.c[0] + self.c[1] * self.c[1]).sqrt()
    }

    /// Raw nondimensional residual `g(alpha, gamma)`.
    pub fn g(&self, alpha: f64, gamma: f64) -> f64 {
        let cg = gamma.cos();
        let dx = cg * alpha.cos() - self.c[0];
        let dy = cg * alpha.sin() - self.c[1];
        dx * dx + dy * dy
    }

    /// `inf g = max(0, |c| - 1)^2`.
    pub fn g_inf(&self) -> f64 {
        let e = (self.c_norm() - 1.0).max(0.0);
        e * e
    }

    /// Potential `Q(alpha, gamma) = (beta/2) * g(alpha, gamma)`.
    pub fn potential(&self, alpha: f64, gamma: f64) -> f64 {
        0.5 * self.beta * self.g(alpha, gamma)
    }

    /// Inf-shifted potential `Q - inf Q`, the running cost actually minimized.
    pub fn potential_hat(&self, alpha: f64, gamma: f64) -> f64 {
        0.5 * self.beta * (self.g(alpha, gamma) - self.g_inf())
    }

    /// Analytic gradient of `Q` (and of `Q - inf Q`).
    pub fn potential_grad(&self, alpha: f64, gamma: f64) -> [f64; 2] {
        let (sa, ca) = alpha.sin_cos();
        let (sg, cg) = gamma.sin_cos();
        let [c1, c2] = self.c;
        [
            self.beta * cg * (c1 * sa - c2 * ca),
            self.beta * sg * (c1 * ca + c2 * sa - cg),
        ]
    }

    /// Analytic Hessian of `Q`, row-major `[[q_aa, q_ag], [q_ag, q_gg]]`.
    pub fn potential_hessian(&self, alpha: f64, gamma: f64) -> [[f64; 2]; 2] {
        let (sa, ca) = alpha.sin_cos();
        let (sg, cg) = gamma.sin_cos();
        let [c1, c2] = self.c;
        let q_aa = self.beta * cg * (c1 * ca + c2 * sa);
        let q_gg = self.beta * (cg * (c1 * ca + c2 * sa - cg) + sg * sg);
        let q_ag = self.beta * sg * (-c1 * sa + c2 * ca);
        [[q_aa, q_ag], [q_ag, q_gg]]
    }

    /// Head imbalance `G_i` in physical units at `(alpha, gamma)`.
    pub fn physical_g(&self, alpha: f64, gamma: f64) -> f64 {
        self.scale * self.scale * self.g(alpha, gamma)
    }
}
