//! Euler-Lagrange and Pontryagin dynamics.
//!
//! Optimal arcs satisfy `Phi'' = grad Q_hat(Phi)` with conserved energy
//! `E = ||Phi'||^2 / 2 - Q_hat(Phi)`, identically zero along
//! infinite-horizon optima. The equivalent first-order Pontryagin system
//! is `Phi' = -q`, `-q' = grad Q_hat(Phi)`. For a balanced head
//! (`c = 0`) the gap angle obeys the pendulum-like equation
//! `gamma'' = -(beta/2) sin(2 gamma)` whose separatrix (the energy-zero
//! level) carries the optimal arcs.

use crate::error::{Error, Result};
use crate::potential::{HeadPotential, TorusPotential};
use crate::transcription::SolvePath;
use serde::Serialize;

/// Second-order state in the universal cover.
#[derive(Debug, Clone, Serialize)]
pub struct ELState {
    pub phi: Vec<f64>,
    pub phidot: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ELSample {
    pub t: f64,
    pub phi: Vec<f64>,
    pub phidot: Vec<f64>,
    pub energy: f64,
}

/// Adjoint form of the same arc; along optima `q = -Phi'`.
#[derive(Debug, Clone, Serialize)]
pub struct PontryaginState {
    pub phi: Vec<f64>,
    pub q: Vec<f64>,
}

pub fn energy(potential: &dyn TorusPotential, phi: &[f64], phidot: &[f64]) -> f64 {
    0.5 * phidot.iter().map(|v| v * v).sum::<f64>() - potential.value_hat(phi)
}

/// Classical fourth-order integration of `Phi'' = grad Q_hat(Phi)`.
/// Samples every step, energy attached.
pub fn integrate_el(
    potential: &dyn TorusPotential,
    init: &ELState,
    t_end: f64,
    dt: f64,
) -> Result<Vec<ELSample>> {
    if !(dt > 0.0) {
        return Err(Error::NonPositiveStep(dt));
    }
    if !(t_end > 0.0) {
        return Err(Error::NonPositiveStep(t_end));
    }
    let n = potential.dim();
    let steps = (t_end / dt).round() as usize;
    let mut phi = init.phi.clone();
    let mut v = init.phidot.clone();
    let mut out = Vec::with_capacity(steps + 1);
    out.push(ELSample {
        t: 0.0,
        phi: phi.clone(),
        phidot: v.clone(),
        energy: energy(potential, &phi, &v),
    });

    // Nystrom fourth-order scheme; the force is velocity independent,
    // so the two middle stages coincide.
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut xt = vec![0.0; n];
    for s in 1..=steps {
        potential.grad(&phi, &mut k1);
        for i in 0..n {
            xt[i] = phi[i] + 0.5 * dt * v[i] + 0.125 * dt * dt * k1[i];
        }
        potential.grad(&xt, &mut k2);
        for i in 0..n {
            xt[i] = phi[i] + dt * v[i] + 0.5 * dt * dt * k2[i];
        }
        potential.grad(&xt, &mut k4);
        for i in 0..n {
            phi[i] += dt * v[i] + dt * dt / 6.0 * (k1[i] + 2.0 * k2[i]);
            v[i] += dt / 6.0 * (k1[i] + 4.0 * k2[i] + k4[i]);
        }
        out.push(ELSample {
            t: s as f64 * dt,
            phi: phi.clone(),
            phidot: v.clone(),
            energy: energy(potential, &phi, &v),
        });
    }
    Ok(out)
}

/// Adjoint reconstruction `q_k = -psi_k` along a transcription path.
pub fn pontryagin_path(path: &SolvePath) -> Vec<PontryaginState> {
    path.controls
        .iter()
        .enumerate()
        .map(|(k, psi)| PontryaginState {
            phi: path.cover[k].clone(),
            q: psi.iter().map(|v| -v).collect(),
        })
        .collect()
}

/// Per-node norms of `(q_k - q_{k-1})/dt + grad Q_hat(Phi_k)` over the
/// interior nodes; identical arithmetic to the discrete Euler-Lagrange
/// residual up to a sign.
pub fn pontryagin_residual(potential: &dyn TorusPotential, path: &SolvePath) -> Vec<f64> {
    let dt = path.horizon.dt;
    let n = path.dim;
    let mut g = vec![0.0; n];
    (1..path.horizon.nt - 1)
        .map(|k| {
            potential.grad(&path.cover[k], &mut g);
            let mut r2 = 0.0;
            for i in 0..n {
                let dq = (-path.controls[k][i] + path.controls[k - 1][i]) / dt;
                let r = dq + g[i];
                r2 += r * r;
            }
            r2.sqrt()
        })
        .collect()
}

/// One grid sample of the pendulum-case phase space.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PhaseSample {
    pub gamma: f64,
    pub gamma_dot: f64,
    /// `gamma'' = -(beta/2) sin(2 gamma)`.
    pub gamma_ddot: f64,
    /// `e = gamma_dot^2 / 2 - (beta/2) cos^2(gamma)`.
    pub e: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PhasePortrait {
    pub samples: Vec<PhaseSample>,
    /// The separatrix is the level set `e = 0`.
    pub separatrix_energy: f64,
}

/// Samples the `(gamma, gamma_dot)` phase plane of a balanced head.
/// Rejects heads with `c != 0`.
pub fn phase_portrait(
    head: &HeadPotential,
    n_gamma: usize,
    n_dot: usize,
    dot_max: f64,
) -> Result<PhasePortrait> {
    let cn = head.head.c_norm();
    if cn != 0.0 {
        return Err(Error::NotPendulum(cn));
    }
    let beta = head.head.beta;
    let mut samples = Vec::with_capacity(n_gamma * n_dot);
    for i in 0..n_gamma {
        let gamma = std::f64::consts::TAU * i as f64 / n_gamma as f64;
        for j in 0..n_dot {
            let gd = -dot_max + 2.0 * dot_max * j as f64 / (n_dot - 1) as f64;
            samples.push(PhaseSample {
                gamma,
                gamma_dot: gd,
                gamma_ddot: -(beta / 2.0) * (2.0 * gamma).sin(),
                e: 0.5 * gd * gd - (beta / 2.0) * gamma.cos().powi(2),
            });
        }
    }
    Ok(PhasePortrait {
        samples,
        separatrix_energy: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::JointPotential;
    use crate::rotor::{HeadProblem, RotorConfig};
    use crate::transcription::{solve_path, Horizon, SolveOptions};
    use rand::{Rng, SeedableRng};
    use std::f64::consts::{FRAC_PI_2, PI, TAU};

    fn demo_cfg() -> RotorConfig {
        RotorConfig {
            m1: 1.0,
            m2: 1.0,
            r1: 1.0,
            r2: 1.0,
            a: 1.0,
            b: 1.0,
            omega: 1.0,
            force: [2.2, 0.0],
            moment: [0.0, 0.2],
            beta: 1.0,
        }
    }

    fn pendulum_head(beta: f64) -> HeadPotential {
        HeadPotential::new(HeadProblem {
            index: 1,
            c: [0.0, 0.0],
            scale: 1.0,
            beta,
        })
    }

    #[test]
    fn equilibrium_stays_put() {
        let cfg = demo_cfg();
        let joint = JointPotential::from_config(&cfg).unwrap();
        let z = joint.nearest_zero(&[2.6, 0.6, 2.5, 1.5]);
        let init = ELState {
            phi: z.clone(),
            phidot: vec![0.0; 4],
        };
        let path = integrate_el(&joint, &init, 10.0, 1e-3).unwrap();
        let last = path.last().unwrap();
        for i in 0..4 {
            assert!((last.phi[i] - z[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn energy_values() {
        let cfg = demo_cfg();
        let joint = JointPotential::from_config(&cfg).unwrap();
        let z = joint.nearest_zero(&[2.6, 0.6, 2.5, 1.5]);
        assert!(energy(&joint, &z, &[0.0; 4]).abs() < 1e-20);
        assert!((energy(&joint, &z, &[1.0, 0.0, 0.0, 0.0]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn energy_drift_small() {
        let cfg = demo_cfg();
        let joint = JointPotential::from_config(&cfg).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let init = ELState {
                phi: (0..4).map(|_| rng.gen_range(0.0..TAU)).collect(),
                phidot: (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            };
            let path = integrate_el(&joint, &init, 50.0, 1e-3).unwrap();
            let e0 = path[0].energy;
            let drift = path
                .iter()
                .map(|s| (s.energy - e0).abs())
                .fold(0.0f64, f64::max);
            assert!(drift <= 1e-8 * (1.0 + e0.abs()), "drift {drift:e}");
        }
    }

    #[test]
    fn pendulum_small_oscillation_period() {
        // gamma'' = -(beta/2) sin(2 gamma): center at gamma = 0 with
        // linearized period 2 pi / sqrt(beta).
        for beta in [1.0, 2.5] {
            let pot = pendulum_head(beta);
            let init = ELState {
                phi: vec![0.3, 1e-3],
                phidot: vec![0.0, 0.0],
            };
            let dt = 1e-4;
            let path = integrate_el(&pot, &init, 30.0, dt).unwrap();
            // Period from successive positive-going zero crossings of gamma.
            let mut crossings = Vec::new();
            for w in path.windows(2) {
                if w[0].phi[1] < 0.0 && w[1].phi[1] >= 0.0 {
                    // Linear interpolation of the crossing time.
                    let f = -w[0].phi[1] / (w[1].phi[1] - w[0].phi[1]);
                    crossings.push(w[0].t + f * dt);
                }
                // Alpha stays constant in the pendulum case.
                assert!((w[1].phi[0] - 0.3).abs() < 1e-10);
            }
            assert!(crossings.len() >= 3);
            let period = (crossings.last().unwrap() - crossings[0]) / (crossings.len() - 1) as f64;
            let want = TAU / beta.sqrt();
            assert!(
                (period - want).abs() / want < 0.01,
                "period {period} vs {want}"
            );
        }
    }

    #[test]
    fn pontryagin_residual_matches_el() {
        let cfg = demo_cfg();
        let joint = JointPotential::from_config(&cfg).unwrap();
        let horizon = Horizon::new(6.0, 301).unwrap();
        let (path, report) = solve_path(
            &joint,
            &[2.6, 0.6, 2.5, 1.5],
            horizon,
            &SolveOptions::default(),
        );
        let res = pontryagin_residual(&joint, &path);
        let max_res = res.iter().cloned().fold(0.0f64, f64::max);
        assert!((max_res - report.el_residual).abs() < 1e-12);
        assert!(max_res <= 1e-5);
        let adj = pontryagin_path(&path);
        assert_eq!(adj.len(), horizon.nt - 1);
        for (k, st) in adj.iter().enumerate() {
            for i in 0..4 {
                assert_eq!(st.q[i], -path.controls[k][i]);
            }
        }
    }

    #[test]
    fn perturbed_node_lights_up_locally() {
        let cfg = demo_cfg();
        let joint = JointPotential::from_config(&cfg).unwrap();
        let horizon = Horizon::new(4.0, 201).unwrap();
        let (mut path, _) = solve_path(
            &joint,
            &[2.6, 0.6, 2.5, 1.5],
            horizon,
            &SolveOptions::default(),
        );
        let mid = 100;
        path.cover[mid][1] += 0.1;
        for k in 0..horizon.nt - 1 {
            for i in 0..4 {
                path.controls[k][i] = (path.cover[k + 1][i] - path.cover[k][i]) / horizon.dt;
            }
        }
        let res = pontryagin_residual(&joint, &path);
        // res[k] covers node k+1; the perturbed node towers over the
        // residual three nodes away.
        assert!(res[mid - 1] > 10.0 * res[mid - 4]);
        assert!(res[mid - 1] > 10.0 * res[mid + 2]);
    }

    #[test]
    fn phase_portrait_structure() {
        let pot = pendulum_head(1.0);
        let pp = phase_portrait(&pot, 32, 17, 2.0).unwrap();
        assert_eq!(pp.separatrix_energy, 0.0);
        // Saddle point (pi/2, 0) sits on the separatrix level.
        let near = pp
            .samples
            .iter()
            .min_by(|a, b| {
                let da = (a.gamma - FRAC_PI_2).abs() + a.gamma_dot.abs();
                let db = (b.gamma - FRAC_PI_2).abs() + b.gamma_dot.abs();
                da.partial_cmp(&db).unwrap()
            })
            .unwrap();
        assert!(near.e.abs() < 0.05);
        // Bottom of the well: e = -beta/2 at (0, 0).
        let bottom = pp
            .samples
            .iter()
            .find(|s| s.gamma == 0.0 && s.gamma_dot == 0.0)
            .unwrap();
        assert!((bottom.e + 0.5).abs() < 1e-15);
        assert!(phase_portrait(&pendulum_head(1.0), 4, 3, 1.0).is_ok());
        let off = HeadPotential::new(HeadProblem {
            index: 1,
            c: [0.1, 0.0],
            scale: 1.0,
            beta: 1.0,
        });
        assert!(matches!(
            phase_portrait(&off, 4, 3, 1.0),
            Err(Error::NotPendulum(_))
        ));
    }

    #[test]
    fn separatrix_energy_separates_motions() {
        // Below e = 0: libration (gamma bounded); above: rotation.
        let pot = pendulum_head(1.0);
        let below = ELState {
            phi: vec![0.0, 0.0],
            phidot: vec![0.0, 0.9], // e = 0.405 - 0.5 < 0
        };
        let path = integrate_el(&pot, &below, 60.0, 1e-3).unwrap();
        let max_g = path.iter().map(|s| s.phi[1].abs()).fold(0.0f64, f64::max);
        assert!(max_g < FRAC_PI_2);
        let above = ELState {
            phi: vec![0.0, 0.0],
            phidot: vec![0.0, 1.1], // e > 0
        };
        let path = integrate_el(&pot, &above, 60.0, 1e-3).unwrap();
        assert!(path.last().unwrap().phi[1] > TAU);
    }

    #[test]
    fn on_separatrix_no_overshoot() {
        // Start exactly on e = 0 moving up: approach the saddle at pi/2
        // monotonically, never beyond. The horizon stays short enough
        // that round-off in e (~1e-16, which tips the orbit into an
        // exponentially long libration) has not yet pulled gamma back.
        let pot = pendulum_head(1.0);
        let g0 = 0.4f64;
        let gd0 = (g0.cos().powi(2)).sqrt(); // e = 0
        let init = ELState {
            phi: vec![1.0, g0],
            phidot: vec![0.0, gd0],
        };
        let path = integrate_el(&pot, &init, 15.0, 1e-3).unwrap();
        let last_g = path.last().unwrap().phi[1];
        assert!((last_g - FRAC_PI_2).abs() < 1e-4);
        for s in &path {
            assert!(s.phi[1] <= FRAC_PI_2 + 1e-9);
        }
        let _ = PI;
    }
}
