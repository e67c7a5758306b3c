//! Randomized invariants of the model layer: static equivalence of the
//! plane decomposition, the split and sign conventions tying the
//! physical imbalance to the reduced potentials, analytic derivatives
//! against finite differences, and dominance of the closed-form steady
//! optimum over brute force.

use proptest::prelude::*;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spinbal_core::dynamics::{energy, integrate_el, ELState};
use spinbal_core::potential::{fd_grad, JointPotential, TorusPotential};
use spinbal_core::rotor::{decompose_imbalance, imbalance_indicator, RotorConfig};
use spinbal_core::steady::{can_fully_balance, grid_argmin, steady_argmin, steady_state};
use spinbal_core::torus::AngleState;
use spinbal_core::HeadProblem;
use std::f64::consts::{FRAC_PI_2, TAU};

fn cfg_from(a: f64, b: f64, force: [f64; 2], moment: [f64; 2]) -> RotorConfig {
    RotorConfig {
        m1: 1.0,
        m2: 1.3,
        r1: 0.8,
        r2: 1.0,
        a,
        b,
        omega: 1.0,
        force,
        moment,
        beta: 1.0,
    }
}

proptest! {
    // Plane decomposition is statically equivalent to the original load:
    // forces sum to F, moments about the origin reproduce N.
    #[test]
    fn static_equivalence(
        a in 0.01f64..5.0,
        b in 0.01f64..5.0,
        fx in -10.0f64..10.0,
        fy in -10.0f64..10.0,
        nx in -10.0f64..10.0,
        ny in -10.0f64..10.0,
    ) {
        let cfg = cfg_from(a, b, [fx, fy], [nx, ny]);
        let pf = decompose_imbalance(&cfg).unwrap();
        let scale = 1.0f64
            .max(fx.abs())
            .max(fy.abs())
            .max(nx.abs())
            .max(ny.abs());
        prop_assert!((pf.f1[0] + pf.f2[0] - fx).abs() <= 1e-12 * scale);
        prop_assert!((pf.f1[1] + pf.f2[1] - fy).abs() <= 1e-12 * scale);
        // Moment of F1 at (0,0,-a) plus moment of F2 at (0,0,b).
        prop_assert!((a * pf.f1[1] - b * pf.f2[1] - nx).abs() <= 1e-11 * scale);
        prop_assert!((-a * pf.f1[0] + b * pf.f2[0] - ny).abs() <= 1e-11 * scale);
    }

    // G >= 0, splits exactly per head, and after nondimensionalization
    // matches the joint potential used downstream.
    #[test]
    fn indicator_nonnegative_and_splits(
        fx in -6.0f64..6.0,
        fy in -6.0f64..6.0,
        nx in -3.0f64..3.0,
        ny in -3.0f64..3.0,
        a1 in 0.0f64..TAU,
        g1 in 0.0f64..TAU,
        a2 in 0.0f64..TAU,
        g2 in 0.0f64..TAU,
    ) {
        let cfg = cfg_from(1.0, 1.2, [fx, fy], [nx, ny]);
        let s = AngleState::new(a1, g1, a2, g2);
        let (g, p1, p2) = imbalance_indicator(&cfg, &s).unwrap();
        prop_assert!(p1 >= 0.0 && p2 >= 0.0);
        prop_assert!(g == p1 + p2, "split must be exact");
        // beta/2 * (G1/scale1^2 + G2/scale2^2 - inf) = Q_hat1 + Q_hat2.
        let h1 = cfg.head(1).unwrap();
        let h2 = cfg.head(2).unwrap();
        let joint = JointPotential::from_config(&cfg).unwrap();
        let lhs = 0.5 * cfg.beta
            * (p1 / (h1.scale * h1.scale) + p2 / (h2.scale * h2.scale)
                - h1.g_inf()
                - h2.g_inf());
        let rhs = joint.value_hat(&s.to_array());
        prop_assert!((lhs - rhs).abs() <= 1e-10, "lhs {lhs} rhs {rhs}");
    }

    // Analytic gradient and Hessian against central differences. Each
    // case checks 4 points; the suite is configured for >= 1000 total.
    #[test]
    fn derivatives_match_finite_differences(
        c1 in -2.0f64..2.0,
        c2 in -2.0f64..2.0,
        pts in proptest::collection::vec((0.0f64..TAU, 0.0f64..TAU), 4),
    ) {
        let h = HeadProblem { index: 1, c: [c1, c2], scale: 1.0, beta: 1.0 };
        let step = 1e-5;
        for (alpha, gamma) in pts {
            let g = h.potential_grad(alpha, gamma);
            let fd = [
                (h.potential(alpha + step, gamma) - h.potential(alpha - step, gamma))
                    / (2.0 * step),
                (h.potential(alpha, gamma + step) - h.potential(alpha, gamma - step))
                    / (2.0 * step),
            ];
            let norm = (g[0] * g[0] + g[1] * g[1]).sqrt().max(1.0);
            prop_assert!((g[0] - fd[0]).abs() <= 1e-6 * norm);
            prop_assert!((g[1] - fd[1]).abs() <= 1e-6 * norm);

            let hess = h.potential_hessian(alpha, gamma);
            let fd_aa = (h.potential(alpha + step, gamma) - 2.0 * h.potential(alpha, gamma)
                + h.potential(alpha - step, gamma))
                / (step * step);
            let fd_gg = (h.potential(alpha, gamma + step) - 2.0 * h.potential(alpha, gamma)
                + h.potential(alpha, gamma - step))
                / (step * step);
            let fd_ag = (h.potential(alpha + step, gamma + step)
                - h.potential(alpha + step, gamma - step)
                - h.potential(alpha - step, gamma + step)
                + h.potential(alpha - step, gamma - step))
                / (4.0 * step * step);
            prop_assert!((hess[0][0] - fd_aa).abs() <= 1e-4);
            prop_assert!((hess[1][1] - fd_gg).abs() <= 1e-4);
            prop_assert!((hess[0][1] - fd_ag).abs() <= 1e-4);
            prop_assert!(hess[0][1] == hess[1][0]);
        }
    }

    // 2 pi periodicity in both angles.
    #[test]
    fn potential_periodicity(
        c1 in -2.0f64..2.0,
        c2 in -2.0f64..2.0,
        alpha in 0.0f64..TAU,
        gamma in 0.0f64..TAU,
    ) {
        let h = HeadProblem { index: 1, c: [c1, c2], scale: 1.0, beta: 1.0 };
        let v = h.potential(alpha, gamma);
        prop_assert!((h.potential(alpha + TAU, gamma) - v).abs() <= 1e-12);
        prop_assert!((h.potential(alpha - TAU, gamma) - v).abs() <= 1e-12);
        prop_assert!((h.potential(alpha, gamma + TAU) - v).abs() <= 1e-12);
        prop_assert!((h.potential(alpha, gamma - TAU) - v).abs() <= 1e-12);
    }

    // Closed-form residual at the steady optimum: inf g = max(0, |c|-1)^2,
    // realized by evaluating g there.
    #[test]
    fn steady_residual_formula(c1 in -3.0f64..3.0, c2 in -3.0f64..3.0) {
        let opt = steady_argmin([c1, c2]);
        prop_assert!(opt.gamma_bar >= 0.0 && opt.gamma_bar <= FRAC_PI_2 + 1e-15);
        let h = HeadProblem { index: 1, c: [c1, c2], scale: 1.0, beta: 1.0 };
        let attained = h.g(opt.alpha_bar, opt.gamma_bar);
        let norm = (c1 * c1 + c2 * c2).sqrt();
        let formula = (norm - 1.0).max(0.0).powi(2);
        prop_assert!((opt.residual - formula).abs() <= 1e-12);
        prop_assert!((attained - formula).abs() <= 1e-12);
    }

    // Full balance is possible exactly when both closed-form residuals
    // vanish.
    #[test]
    fn balance_iff_zero_total_residual(
        fx in -8.0f64..8.0,
        fy in -8.0f64..8.0,
        nx in -4.0f64..4.0,
        ny in -4.0f64..4.0,
    ) {
        let cfg = cfg_from(1.0, 1.5, [fx, fy], [nx, ny]);
        let (_, _, both) = can_fully_balance(&cfg).unwrap();
        let (o1, o2, _) = steady_state(&cfg).unwrap();
        prop_assert_eq!(both, o1.residual + o2.residual == 0.0);
    }
}

// Brute-force dominance: the closed-form optimum beats every node of a
// dense grid, for 1000 random targets with |c| up to 3.
#[test]
fn steady_beats_dense_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..1000 {
        let norm = rng.gen_range(0.0..3.0);
        let phase = rng.gen_range(0.0..TAU);
        let c = [norm * phase.cos(), norm * phase.sin()];
        let h = HeadProblem { index: 1, c, scale: 1.0, beta: 1.0 };
        let opt = steady_argmin(c);
        let attained = h.g(opt.alpha_bar, opt.gamma_bar);
        let (_, grid_best) = grid_argmin(&h, 400);
        assert!(
            attained <= grid_best + 1e-9,
            "c = {c:?}: closed form {attained} vs grid {grid_best}"
        );
    }
}

// The second-order dynamics conserve E = |v|^2/2 - Q_hat to round-off
// over long horizons, for random joint states.
#[test]
fn energy_invariance_random_initial_conditions() {
    let cfg = cfg_from(1.0, 1.0, [2.2, 0.0], [0.0, 0.2]);
    let joint = JointPotential::from_config(&cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let phi: Vec<f64> = (0..4).map(|_| rng.gen_range(0.0..TAU)).collect();
        let phidot: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let e0 = energy(&joint, &phi, &phidot);
        let path = integrate_el(&joint, &ELState { phi, phidot }, 50.0, 2e-3).unwrap();
        let drift = path
            .iter()
            .map(|s| (s.energy - e0).abs())
            .fold(0.0f64, f64::max);
        worst = worst.max(drift / e0.abs().max(1.0));
    }
    assert!(worst <= 1e-8, "relative energy drift {worst:e}");
}

// Sanity of the finite-difference helper itself against a hand gradient.
#[test]
fn fd_helper_consistent() {
    let cfg = cfg_from(1.0, 1.0, [2.2, 0.0], [0.0, 0.2]);
    let joint = JointPotential::from_config(&cfg).unwrap();
    let x = [2.6, 0.6, 2.5, 1.5];
    let mut g = [0.0; 4];
    joint.grad(&x, &mut g);
    let fd = fd_grad(&joint, &x, 1e-6);
    for i in 0..4 {
        assert!((g[i] - fd[i]).abs() <= 1e-8, "component {i}");
    }
}
