//! Direct transcription of the infinite-horizon problem.
//!
//! The functional `J = int ( ||Phi'||^2/2 + Q_hat(Phi) ) dt` is truncated
//! to a finite horizon chosen from the stabilization bound, discretized
//! on a uniform time grid with the controls eliminated through the state
//! equation `(Phi_k - Phi_{k-1})/dt = psi_{k-1}`, and minimized over the
//! interior and terminal states in the universal cover.

use crate::analysis::DecayCertificate;
use crate::error::{Error, Result};
use crate::optim::{
    minimize, LbfgsOptions, LbfgsResult, Objective, StridedTridiagonalPrecond, Tridiagonal,
};
use crate::potential::{JointPotential, TorusPotential};
use crate::rotor::RotorConfig;
use crate::torus::{lift_near, AngleState};
use serde::Serialize;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Horizon {
    /// Final time T.
    pub t_final: f64,
    /// Number of time nodes, >= 2.
    pub nt: usize,
    /// dt = T / (nt - 1).
    pub dt: f64,
}

impl Horizon {
    pub fn new(t_final: f64, nt: usize) -> Result<Self> {
        if !(t_final > 0.0) || nt < 2 {
            return Err(Error::NonPositiveStep(t_final));
        }
        Ok(Self {
            t_final,
            nt,
            dt: t_final / (nt - 1) as f64,
        })
    }

    /// Smallest uniform grid with `dt <= dt_max`.
    pub fn with_dt_max(t_final: f64, dt_max: f64) -> Result<Self> {
        if !(dt_max > 0.0) {
            return Err(Error::NonPositiveStep(dt_max));
        }
        let nt = ((t_final / dt_max).ceil() as usize + 1).max(2);
        Self::new(t_final, nt)
    }
}

/// Horizon-selection policy around the theoretical bound.
#[derive(Debug, Clone, Serialize)]
pub struct HorizonRule {
    /// Floor applied when the bound degenerates to zero.
    pub t_min: f64,
    /// Practical override: the theoretical bound is very loose.
    pub t_cap: Option<f64>,
    pub dt_max: f64,
    /// Relative margin above the strict bound.
    pub margin: f64,
}

impl Default for HorizonRule {
    fn default() -> Self {
        Self {
            t_min: 1.0,
            t_cap: None,
            dt_max: 0.01,
            margin: 0.05,
        }
    }
}

/// Horizon guaranteeing `dist(Phi(T), Z) <= eps` per the decay bound
/// `T > sigma2 * dist0 / eps^(N * Ntilde)`. Returns the horizon and
/// whether the practical cap was applied.
pub fn select_horizon(
    cert: &DecayCertificate,
    dist0: f64,
    eps: f64,
    rule: &HorizonRule,
) -> Result<(Horizon, bool)> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter {
            field: "eps",
            reason: format!("must be positive, got {eps}"),
        });
    }
    let bound = cert.sigma2 * dist0 / eps.powf((cert.nloj * cert.ntilde) as f64);
    if !bound.is_finite() {
        return Err(Error::NonFiniteHorizon);
    }
    let mut t = (bound * (1.0 + rule.margin)).max(rule.t_min);
    let mut capped = false;
    if let Some(cap) = rule.t_cap {
        if t > cap {
            t = cap;
            capped = true;
        }
    }
    Ok((Horizon::with_dt_max(t, rule.dt_max)?, capped))
}

/// Discretized functional over the free nodes `Phi_1 .. Phi_{Nt-1}`.
/// The velocity term sums `k = 0 .. Nt-2` and the potential term
/// `k = 0 .. Nt-1`; that is the only reading consistent with the
/// discrete state equation.
pub struct TranscriptionObjective<'a> {
    pub potential: &'a dyn TorusPotential,
    pub phi0: Vec<f64>,
    pub horizon: Horizon,
}

impl TranscriptionObjective<'_> {
    fn dim(&self) -> usize {
        self.potential.dim()
    }

    /// Value and gradient with `x` holding the free nodes flattened
    /// row-major, `x[(k-1)*dim .. k*dim] = Phi_k`.
    pub fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let n = self.dim();
        let dt = self.horizon.dt;
        let nt = self.horizon.nt;
        debug_assert_eq!(x.len(), (nt - 1) * n);
        let node = |k: usize| -> &[f64] {
            if k == 0 {
                &self.phi0
            } else {
                &x[(k - 1) * n..k * n]
            }
        };

        let mut value = dt * self.potential.value_hat(&self.phi0);
        let mut gq = vec![0.0; n];
        for k in 1..nt {
            let xk = node(k);
            let xp = node(k - 1);
            let mut vel2 = 0.0;
            for i in 0..n {
                let d = xk[i] - xp[i];
                vel2 += d * d;
            }
            value += 0.5 * vel2 / dt + dt * self.potential.value_hat(xk);
        }

        for k in 1..nt {
            let xk = node(k);
            self.potential.grad(xk, &mut gq);
            let g = &mut grad[(k - 1) * n..k * n];
            for i in 0..n {
                g[i] = dt * gq[i];
            }
        }
        // Velocity-term gradient: tridiagonal stencil, free terminal node.
        for k in 1..nt {
            let g_off = (k - 1) * n;
            for i in 0..n {
                let xi = x[g_off + i];
                let prev = node(k - 1)[i];
                let mut acc = (xi - prev) / dt;
                if k + 1 < nt {
                    let next = x[k * n + i];
                    acc -= (next - xi) / dt;
                }
                grad[g_off + i] += acc;
            }
        }
        value
    }
}

impl Objective for TranscriptionObjective<'_> {
    fn eval(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        self.value_grad(x, grad)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveOptions {
    pub grad_tol: f64,
    pub max_iters: usize,
    /// Newton-polish the stationarity system after the quasi-Newton
    /// phase; drives the gradient to near machine precision.
    pub polish: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            grad_tol: 1e-8,
            max_iters: 20000,
            polish: true,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    /// Value of the discretized functional at the solution.
    pub objective: f64,
    pub iterations: usize,
    pub grad_norm: f64,
    /// Max interior norm of the discrete Euler-Lagrange residual.
    pub el_residual: f64,
    /// Norm of the last control, the discrete transversality check.
    pub terminal_speed: f64,
    pub converged: bool,
}

/// Solution path in the universal cover, any state dimension.
#[derive(Debug, Clone, Serialize)]
pub struct SolvePath {
    pub horizon: Horizon,
    pub dim: usize,
    /// `nt` nodes, cover coordinates.
    pub cover: Vec<Vec<f64>>,
    /// `nt - 1` controls, `psi_k = (Phi_{k+1} - Phi_k)/dt`.
    pub controls: Vec<Vec<f64>>,
}

impl SolvePath {
    /// Centered energy `E_k = ||v_k||^2/2 - Q_hat(Phi_k)` with the
    /// second-order velocity `v_k = (psi_{k-1} + psi_k)/2` at interior
    /// nodes; one-sided at the ends.
    pub fn energy(&self, potential: &dyn TorusPotential) -> Vec<f64> {
        let nt = self.horizon.nt;
        (0..nt)
            .map(|k| {
                let v2: f64 = (0..self.dim)
                    .map(|i| {
                        let v = if k == 0 {
                            self.controls[0][i]
                        } else if k == nt - 1 {
                            self.controls[nt - 2][i]
                        } else {
                            0.5 * (self.controls[k - 1][i] + self.controls[k][i])
                        };
                        v * v
                    })
                    .sum();
                0.5 * v2 - potential.value_hat(&self.cover[k])
            })
            .collect()
    }

    /// Max interior norm of `(Phi_{k+1} - 2 Phi_k + Phi_{k-1})/dt^2
    /// - grad Q_hat(Phi_k)`.
    pub fn el_residual(&self, potential: &dyn TorusPotential) -> f64 {
        let dt2 = self.horizon.dt * self.horizon.dt;
        let mut g = vec![0.0; self.dim];
        let mut worst = 0.0f64;
        for k in 1..self.horizon.nt - 1 {
            potential.grad(&self.cover[k], &mut g);
            let mut r2 = 0.0;
            for i in 0..self.dim {
                let r = (self.cover[k + 1][i] - 2.0 * self.cover[k][i] + self.cover[k - 1][i])
                    / dt2
                    - g[i];
                r2 += r * r;
            }
            worst = worst.max(r2.sqrt());
        }
        worst
    }
}

/// Straight-line initializer from `phi0` to the lifted nearest argmin.
fn line_init(potential: &dyn TorusPotential, phi0: &[f64], nt: usize) -> Vec<f64> {
    let n = potential.dim();
    let z = potential.nearest_zero(phi0);
    let target: Vec<f64> = (0..n).map(|i| lift_near(z[i], phi0[i])).collect();
    let mut x = vec![0.0; (nt - 1) * n];
    for k in 1..nt {
        let s = k as f64 / (nt - 1) as f64;
        for i in 0..n {
            x[(k - 1) * n + i] = phi0[i] + s * (target[i] - phi0[i]);
        }
    }
    x
}

fn build_precond(potential: &dyn TorusPotential, horizon: &Horizon) -> StridedTridiagonalPrecond {
    let free = horizon.nt - 1;
    let dt = horizon.dt;
    // Second-difference operator over the free nodes plus a potential
    // curvature floor; the last diagonal entry is 1/dt (free end).
    let c0 = 1.0;
    let mut diag = vec![2.0 / dt + dt * c0; free];
    diag[free - 1] = 1.0 / dt + dt * c0;
    let off = vec![-1.0 / dt; free.saturating_sub(1)];
    StridedTridiagonalPrecond {
        tri: Tridiagonal { diag, off },
        dims: potential.dim(),
    }
}

/// Dense `n x n` solve by Gaussian elimination with partial pivoting;
/// `rhs` holds `m` right-hand sides column-major and is overwritten.
fn dense_solve(a: &mut [f64], n: usize, rhs: &mut [f64], m: usize) {
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if a[r * n + col].abs() > a[piv * n + col].abs() {
                piv = r;
            }
        }
        if piv != col {
            for j in 0..n {
                a.swap(col * n + j, piv * n + j);
            }
            for j in 0..m {
                rhs.swap(j * n + col, j * n + piv);
            }
        }
        let p = a[col * n + col];
        for r in col + 1..n {
            let f = a[r * n + col] / p;
            if f == 0.0 {
                continue;
            }
            for j in col..n {
                a[r * n + j] -= f * a[col * n + j];
            }
            for j in 0..m {
                rhs[j * n + r] -= f * rhs[j * n + col];
            }
        }
    }
    for j in 0..m {
        for r in (0..n).rev() {
            let mut v = rhs[j * n + r];
            for k in r + 1..n {
                v -= a[r * n + k] * rhs[j * n + k];
            }
            rhs[j * n + r] = v / a[r * n + r];
        }
    }
}

/// One Newton step on `grad K_d = 0`. The Jacobian is block tridiagonal
/// with diagonal blocks `(2/dt) I + dt H(Phi_j)` (terminal `(1/dt) I +
/// dt H`) and scalar off-diagonal blocks `-(1/dt) I`; solved by block
/// Thomas elimination.
fn newton_step(
    potential: &dyn TorusPotential,
    obj: &TranscriptionObjective,
    x: &mut [f64],
    g: &[f64],
) {
    let n = potential.dim();
    let nt = obj.horizon.nt;
    let dt = obj.horizon.dt;
    let free = nt - 1;
    let c = -1.0 / dt;

    // Forward elimination: store the inverse of each pivot block.
    let mut inv = vec![0.0; free * n * n];
    let mut rhs = vec![0.0; free * n];
    let mut h = vec![0.0; n * n];
    let mut block = vec![0.0; n * n];
    for j in 0..free {
        potential.hess(&x[j * n..(j + 1) * n], &mut h);
        let diag = if j + 1 < free { 2.0 / dt } else { 1.0 / dt };
        for r in 0..n {
            for cidx in 0..n {
                block[r * n + cidx] = dt * h[r * n + cidx];
            }
            block[r * n + r] += diag;
        }
        let mut b = rhs[j * n..(j + 1) * n].to_vec();
        for i in 0..n {
            b[i] = g[j * n + i];
        }
        if j > 0 {
            let prev_inv = &inv[(j - 1) * n * n..j * n * n];
            // block -= c^2 * inv_prev; b -= c * inv_prev * rhs_prev.
            for r in 0..n {
                for cidx in 0..n {
                    block[r * n + cidx] -= c * c * prev_inv[r * n + cidx];
                }
            }
            for r in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += prev_inv[r * n + k] * rhs[(j - 1) * n + k];
                }
                b[r] -= c * acc;
            }
        }
        // Invert the pivot block.
        let mut eye = vec![0.0; n * n];
        for i in 0..n {
            eye[i * n + i] = 1.0;
        }
        dense_solve(&mut block, n, &mut eye, n);
        // dense_solve wrote columns of the inverse column-major into eye.
        let dst = &mut inv[j * n * n..(j + 1) * n * n];
        for col in 0..n {
            for row in 0..n {
                dst[row * n + col] = eye[col * n + row];
            }
        }
        rhs[j * n..(j + 1) * n].copy_from_slice(&b);
    }

    // Back substitution: delta_last = inv * rhs; delta_j = inv_j *
    // (rhs_j - c * delta_{j+1}); then x -= delta.
    let mut delta = vec![0.0; free * n];
    for j in (0..free).rev() {
        let inv_j = &inv[j * n * n..(j + 1) * n * n];
        let mut b = rhs[j * n..(j + 1) * n].to_vec();
        if j + 1 < free {
            for i in 0..n {
                b[i] -= c * delta[(j + 1) * n + i];
            }
        }
        for r in 0..n {
            let mut acc = 0.0;
            for k in 0..n {
                acc += inv_j[r * n + k] * b[k];
            }
            delta[j * n + r] = acc;
        }
    }
    for i in 0..free * n {
        x[i] -= delta[i];
    }
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
}

/// Minimize the discretized functional for any torus potential.
pub fn solve_path(
    potential: &dyn TorusPotential,
    phi0: &[f64],
    horizon: Horizon,
    opts: &SolveOptions,
) -> (SolvePath, SolveReport) {
    let n = potential.dim();
    let obj = TranscriptionObjective {
        potential,
        phi0: phi0.to_vec(),
        horizon,
    };
    let x0 = line_init(potential, phi0, horizon.nt);
    let precond = build_precond(potential, &horizon);
    let lopts = LbfgsOptions {
        grad_tol: opts.grad_tol,
        max_iters: opts.max_iters,
        ..LbfgsOptions::default()
    };
    let LbfgsResult {
        mut x,
        mut value,
        mut grad_norm,
        iterations,
        mut converged,
    } = minimize(&obj, &x0, &precond, &lopts);

    if opts.polish {
        let mut g = vec![0.0; x.len()];
        obj.value_grad(&x, &mut g);
        let mut gnorm = sup_norm(&g);
        for _ in 0..40 {
            if gnorm <= 1e-13 {
                break;
            }
            let mut x_try = x.clone();
            newton_step(potential, &obj, &mut x_try, &g);
            let mut g_try = vec![0.0; x.len()];
            let v_try = obj.value_grad(&x_try, &mut g_try);
            let gnorm_try = sup_norm(&g_try);
            if !gnorm_try.is_finite() || gnorm_try >= gnorm {
                break;
            }
            x = x_try;
            g = g_try;
            gnorm = gnorm_try;
            value = v_try;
        }
        grad_norm = gnorm;
        converged = converged || grad_norm <= opts.grad_tol;
    }

    let mut cover = Vec::with_capacity(horizon.nt);
    cover.push(phi0.to_vec());
    for k in 1..horizon.nt {
        cover.push(x[(k - 1) * n..k * n].to_vec());
    }
    let controls: Vec<Vec<f64>> = (0..horizon.nt - 1)
        .map(|k| {
            (0..n)
                .map(|i| (cover[k + 1][i] - cover[k][i]) / horizon.dt)
                .collect()
        })
        .collect();
    let path = SolvePath {
        horizon,
        dim: n,
        cover,
        controls,
    };
    let el_residual = path.el_residual(potential);
    let terminal_speed = path.controls[horizon.nt - 2]
        .iter()
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt();
    let report = SolveReport {
        objective: value,
        iterations,
        grad_norm,
        el_residual,
        terminal_speed,
        converged,
    };
    (path, report)
}

/// Open-loop optimum of the joint 4-angle problem with per-node
/// diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub horizon: Horizon,
    pub states: Vec<AngleState>,
    /// Cover coordinates backing `states`.
    pub cover: Vec<Vec<f64>>,
    pub controls: Vec<Vec<f64>>,
    /// Physical imbalance indicator per node.
    pub g: Vec<f64>,
    /// Discrete energy per node (nondimensional).
    pub energy: Vec<f64>,
    /// Geodesic distance to the steady set per node.
    pub dist: Vec<f64>,
}

impl Trajectory {
    pub fn from_path(cfg: &RotorConfig, path: SolvePath) -> Result<Self> {
        let joint = JointPotential::from_config(cfg)?;
        let states: Vec<AngleState> = path
            .cover
            .iter()
            .map(|x| AngleState::new(x[0], x[1], x[2], x[3]))
            .collect();
        let g = path
            .cover
            .iter()
            .map(|x| {
                joint.head1.head.physical_g(x[0], x[1]) + joint.head2.head.physical_g(x[2], x[3])
            })
            .collect();
        let energy = path.energy(&joint);
        let dist = path.cover.iter().map(|x| joint.dist_to_zero(x)).collect();
        Ok(Self {
            horizon: path.horizon,
            states,
            cover: path.cover,
            controls: path.controls,
            g,
            energy,
            dist,
        })
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.horizon.nt).map(move |k| k as f64 * self.horizon.dt)
    }
}

pub fn solve_open_loop(
    cfg: &RotorConfig,
    phi0: AngleState,
    horizon: Horizon,
    opts: &SolveOptions,
) -> Result<(Trajectory, SolveReport)> {
    let joint = JointPotential::from_config(cfg)?;
    let (path, report) = solve_path(&joint, &phi0.to_array(), horizon, opts);
    Ok((Trajectory::from_path(cfg, path)?, report))
}
