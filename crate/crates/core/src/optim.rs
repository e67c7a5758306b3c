//! Limited-memory quasi-Newton descent with backtracking line search.
//!
//! Self-contained unconstrained minimizer used by the open-loop solver.
//! Supports a fixed symmetric positive-definite preconditioner as the
//! initial inverse-Hessian model; the transcription problem supplies a
//! tridiagonal one (per angle dimension) that tames the `O(Nt^2)`
//! conditioning of the second-difference operator.

/// Smooth objective with analytic gradient.
pub trait Objective {
    /// Writes the gradient into `grad` and returns the value.
    fn eval(&self, x: &[f64], grad: &mut [f64]) -> f64;
}

/// Application of a fixed SPD approximation of the inverse Hessian.
pub trait Preconditioner {
    fn apply(&self, r: &[f64], out: &mut [f64]);
}

pub struct IdentityPrecond;

impl Preconditioner for IdentityPrecond {
    fn apply(&self, r: &[f64], out: &mut [f64]) {
        out.copy_from_slice(r);
    }
}

/// Symmetric tridiagonal system solved by the Thomas algorithm.
/// `diag` has length `n`, `off` length `n - 1`.
#[derive(Clone)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl Tridiagonal {
    /// Solves `M x = b` in place over a strided slice of `x`/`b` so one
    /// factorization serves several interleaved dimensions.
    pub fn solve_strided(&self, b: &[f64], out: &mut [f64], offset: usize, stride: usize) {
        let n = self.diag.len();
        debug_assert!(offset + (n - 1) * stride < b.len());
        let mut cp = vec![0.0; n];
        let mut dp = vec![0.0; n];
        cp[0] = self.off.first().copied().unwrap_or(0.0) / self.diag[0];
        dp[0] = b[offset] / self.diag[0];
        for i in 1..n {
            let m = self.diag[i] - self.off[i - 1] * cp[i - 1];
            if i < n - 1 {
                cp[i] = self.off[i] / m;
            }
            dp[i] = (b[offset + i * stride] - self.off[i - 1] * dp[i - 1]) / m;
        }
        out[offset + (n - 1) * stride] = dp[n - 1];
        for i in (0..n - 1).rev() {
            out[offset + i * stride] = dp[i] - cp[i] * out[offset + (i + 1) * stride];
        }
    }
}

/// One tridiagonal factor applied independently to each of `dims`
/// interleaved coordinate sequences.
pub struct StridedTridiagonalPrecond {
    pub tri: Tridiagonal,
    pub dims: usize,
}

impl Preconditioner for StridedTridiagonalPrecond {
    fn apply(&self, r: &[f64], out: &mut [f64]) {
        for d in 0..self.dims {
            self.tri.solve_strided(r, out, d, self.dims);
        }
    }
}

#[derive(Debug, Clone)]
pub struct LbfgsOptions {
    pub memory: usize,
    /// Convergence test: sup-norm of the gradient.
    pub grad_tol: f64,
    pub max_iters: usize,
    /// Armijo sufficient-decrease parameter.
    pub c1: f64,
    pub backtrack: f64,
    pub max_backtracks: usize,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self {
            memory: 10,
            grad_tol: 1e-8,
            max_iters: 5000,
            c1: 1e-4,
            backtrack: 0.5,
            max_backtracks: 60,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LbfgsResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sup_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
}

/// Minimizes `f` starting from `x0`. The objective value never increases
/// across accepted iterations (Armijo backtracking).
pub fn minimize<F: Objective, P: Preconditioner>(
    f: &F,
    x0: &[f64],
    precond: &P,
    opts: &LbfgsOptions,
) -> LbfgsResult {
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut g = vec![0.0; n];
    let mut fx = f.eval(&x, &mut g);

    let m = opts.memory.max(1);
    let mut s_hist: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut y_hist: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut rho: Vec<f64> = Vec::with_capacity(m);

    let mut dir = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    let mut iterations = 0;

    for it in 0..opts.max_iters {
        iterations = it;
        let gnorm = sup_norm(&g);
        if gnorm <= opts.grad_tol {
            return LbfgsResult {
                x,
                value: fx,
                grad_norm: gnorm,
                iterations: it,
                converged: true,
            };
        }

        // Two-loop recursion with the fixed preconditioner in the middle.
        let k = s_hist.len();
        let mut q = g.clone();
        let mut alpha = vec![0.0; k];
        for i in (0..k).rev() {
            alpha[i] = rho[i] * dot(&s_hist[i], &q);
            for (qj, yj) in q.iter_mut().zip(&y_hist[i]) {
                *qj -= alpha[i] * yj;
            }
        }
        precond.apply(&q, &mut dir);
        if k > 0 {
            // Scale the model by the latest curvature pair.
            let y_last = &y_hist[k - 1];
            precond.apply(y_last, &mut scratch);
            let denom = dot(y_last, &scratch);
            if denom > 0.0 {
                let gamma = dot(&s_hist[k - 1], y_last) / denom;
                for d in dir.iter_mut() {
                    *d *= gamma;
                }
            }
        }
        for i in 0..k {
            let beta = rho[i] * dot(&y_hist[i], &dir);
            for (dj, sj) in dir.iter_mut().zip(&s_hist[i]) {
                *dj += (alpha[i] - beta) * sj;
            }
        }
        for d in dir.iter_mut() {
            *d = -*d;
        }

        let mut slope = dot(&g, &dir);
        if !slope.is_finite() || slope >= 0.0 {
            // Model breakdown: fall back to preconditioned steepest descent.
            precond.apply(&g, &mut dir);
            for d in dir.iter_mut() {
                *d = -*d;
            }
            s_hist.clear();
            y_hist.clear();
            rho.clear();
            slope = dot(&g, &dir);
        }

        // Armijo backtracking.
        let mut t = 1.0;
        let mut x_new = vec![0.0; n];
        let mut g_new = vec![0.0; n];
        let mut accepted = false;
        let mut f_new = fx;
        for _ in 0..opts.max_backtracks {
            for i in 0..n {
                x_new[i] = x[i] + t * dir[i];
            }
            f_new = f.eval(&x_new, &mut g_new);
            if f_new.is_finite() && f_new <= fx + opts.c1 * t * slope {
                accepted = true;
                break;
            }
            t *= opts.backtrack;
        }
        if !accepted {
            // Line search exhausted: gradient is as converged as the
            // floating point allows at this scale.
            return LbfgsResult {
                x,
                value: fx,
                grad_norm: gnorm,
                iterations: it,
                converged: gnorm <= opts.grad_tol,
            };
        }

        let mut s = vec![0.0; n];
        let mut y = vec![0.0; n];
        for i in 0..n {
            s[i] = x_new[i] - x[i];
            y[i] = g_new[i] - g[i];
        }
        let sy = dot(&s, &y);
        if sy > 1e-14 * dot(&y, &y).max(1e-300) {
            if s_hist.len() == m {
                s_hist.remove(0);
                y_hist.remove(0);
                rho.remove(0);
            }
            rho.push(1.0 / sy);
            s_hist.push(s);
            y_hist.push(y);
        }
        x = x_new;
        g = g_new;
        fx = f_new;
    }

    let gnorm = sup_norm(&g);
    LbfgsResult {
        x,
        value: fx,
        grad_norm: gnorm,
        iterations: iterations + 1,
        converged: gnorm <= opts.grad_tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Quadratic {
        scale: Vec<f64>,
    }

    impl Objective for Quadratic {
        fn eval(&self, x: &[f64], grad: &mut [f64]) -> f64 {
            let mut v = 0.0;
            for i in 0..x.len() {
                v += 0.5 * self.scale[i] * x[i] * x[i];
                grad[i] = self.scale[i] * x[i];
            }
            v
        }
    }

    struct Rosenbrock;

    impl Objective for Rosenbrock {
        fn eval(&self, x: &[f64], grad: &mut [f64]) -> f64 {
            let (a, b) = (x[0], x[1]);
            grad[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
            grad[1] = 200.0 * (b - a * a);
            (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
        }
    }

    #[test]
    fn quadratic_converges() {
        let f = Quadratic {
            scale: vec![1.0, 10.0, 100.0],
        };
        let r = minimize(
            &f,
            &[1.0, 1.0, 1.0],
            &IdentityPrecond,
            &LbfgsOptions::default(),
        );
        assert!(r.converged);
        assert!(r.x.iter().all(|v| v.abs() < 1e-7));
    }

    #[test]
    fn rosenbrock_converges() {
        let r = minimize(
            &Rosenbrock,
            &[-1.2, 1.0],
            &IdentityPrecond,
            &LbfgsOptions::default(),
        );
        assert!(r.converged, "grad_norm {}", r.grad_norm);
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn thomas_solver_matches_dense() {
        // M = tridiag(-1, [2,2,2,1], -1), solve against a known product.
        let tri = Tridiagonal {
            diag: vec![2.0, 2.0, 2.0, 1.0],
            off: vec![-1.0, -1.0, -1.0],
        };
        let x_true = [1.0, -2.0, 3.0, 0.5];
        let mut b = [0.0; 4];
        b[0] = 2.0 * x_true[0] - x_true[1];
        b[1] = -x_true[0] + 2.0 * x_true[1] - x_true[2];
        b[2] = -x_true[1] + 2.0 * x_true[2] - x_true[3];
        b[3] = -x_true[2] + 1.0 * x_true[3];
        let mut out = [0.0; 4];
        tri.solve_strided(&b, &mut out, 0, 1);
        for i in 0..4 {
            assert!((out[i] - x_true[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn strided_precond_is_per_dimension() {
        let tri = Tridiagonal {
            diag: vec![2.0, 2.0],
            off: vec![0.0],
        };
        let p = StridedTridiagonalPrecond { tri, dims: 2 };
        let r = [4.0, 8.0, 2.0, 6.0];
        let mut out = [0.0; 4];
        p.apply(&r, &mut out);
        assert_eq!(out, [2.0, 4.0, 1.0, 3.0]);
    }

    #[test]
    fn preconditioned_quadratic_fast() {
        // Strongly anisotropic diagonal quadratic with the exact inverse
        // as preconditioner: converges in a handful of iterations.
        let n = 64;
        let scale: Vec<f64> = (0..n).map(|i| 1.0 + i as f64 * 100.0).collect();
        let f = Quadratic {
            scale: scale.clone(),
        };
        let tri = Tridiagonal {
            diag: scale,
            off: vec![0.0; n - 1],
        };
        let p = StridedTridiagonalPrecond { tri, dims: 1 };
        let r = minimize(&f, &vec![1.0; n], &p, &LbfgsOptions::default());
        assert!(r.converged);
        assert!(r.iterations <= 5, "iterations {}", r.iterations);
    }
}
