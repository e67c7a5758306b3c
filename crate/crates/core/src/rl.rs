//! Value-iteration feedback law on the torus.
//!
//! The value function of the infinite-horizon problem is approximated on
//! a uniform torus grid by the semi-Lagrangian recursion
//! `V_{i+1}(theta) = min_u { delta (||u||^2/2 + Q_hat) + V_i(theta + delta u) }`
//! over a finite lattice of constant-velocity moves, starting from the
//! upper-bound guess `V_0 = dist^2/2 + (L/2) dist`. The feedback law is
//! `Phi' = -grad V` and the converged table satisfies the
//! Hamilton-Jacobi identity `||grad V||^2 = 2 Q_hat` up to grid error.

use crate::analysis::DecayCertificate;
use crate::error::{Error, Result};
use crate::potential::TorusPotential;
use rayon::prelude::*;
use serde::Serialize;
use std::io::{Read, Write};
use std::f64::consts::TAU;

/// Sampled value function on a uniform torus grid, row-major storage,
/// multilinear wraparound interpolation.
#[derive(Debug, Clone, Serialize)]
pub struct ValueTable {
    pub dims: Vec<usize>,
    pub values: Vec<f64>,
    /// DPP step the table was swept with.
    pub delta: f64,
    pub iteration: u64,
}

impl ValueTable {
    pub fn zeros(dims: Vec<usize>) -> Self {
        let len = dims.iter().product();
        Self {
            dims,
            values: vec![0.0; len],
            delta: 0.0,
            iteration: 0,
        }
    }

    pub fn spacing(&self, d: usize) -> f64 {
        TAU / self.dims[d] as f64
    }

    pub fn max_spacing(&self) -> f64 {
        (0..self.dims.len())
            .map(|d| self.spacing(d))
            .fold(0.0, f64::max)
    }

    /// Flat index of node `idx`.
    pub fn offset(&self, idx: &[usize]) -> usize {
        let mut off = 0;
        for (d, &i) in idx.iter().enumerate() {
            off = off * self.dims[d] + i;
        }
        off
    }

    /// Node coordinates (angles) of flat offset `off`.
    pub fn node_coords(&self, mut off: usize) -> Vec<f64> {
        let nd = self.dims.len();
        let mut idx = vec![0usize; nd];
        for d in (0..nd).rev() {
            idx[d] = off % self.dims[d];
            off /= self.dims[d];
        }
        (0..nd).map(|d| idx[d] as f64 * self.spacing(d)).collect()
    }

    /// Multilinear interpolation with per-dimension wraparound.
    pub fn interp(&self, x: &[f64]) -> f64 {
        let nd = self.dims.len();
        debug_assert_eq!(x.len(), nd);
        let mut base = [0usize; 8];
        let mut frac = [0.0f64; 8];
        for d in 0..nd {
            let s = self.spacing(d);
            let pos = (x[d] / s).rem_euclid(self.dims[d] as f64);
            let i = pos.floor() as usize % self.dims[d];
            base[d] = i;
            frac[d] = pos - pos.floor();
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << nd) {
            let mut w = 1.0;
            let mut off = 0;
            for d in 0..nd {
                let up = (corner >> d) & 1 == 1;
                w *= if up { frac[d] } else { 1.0 - frac[d] };
                let i = if up {
                    (base[d] + 1) % self.dims[d]
                } else {
                    base[d]
                };
                off = off * self.dims[d] + i;
            }
            acc += w * self.values[off];
        }
        acc
    }

    /// Gradient of the interpolant by central differences with step
    /// `h` per dimension.
    pub fn grad_interp(&self, x: &[f64], h: f64) -> Vec<f64> {
        let mut xp = x.to_vec();
        (0..x.len())
            .map(|d| {
                xp[d] = x[d] + h;
                let up = self.interp(&xp);
                xp[d] = x[d] - h;
                let dn = self.interp(&xp);
                xp[d] = x[d];
                (up - dn) / (2.0 * h)
            })
            .collect()
    }

    /// Flat little-endian binary layout: node-count, dims, delta,
    /// iteration, then the row-major payload.
    pub fn save<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(&(self.dims.len() as u64).to_le_bytes())?;
        for &d in &self.dims {
            w.write_all(&(d as u64).to_le_bytes())?;
        }
        w.write_all(&self.delta.to_le_bytes())?;
        w.write_all(&self.iteration.to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn load<R: Read>(r: &mut R) -> Result<Self> {
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let nd = u64::from_le_bytes(b8) as usize;
        if nd == 0 || nd > 8 {
            return Err(Error::TableFormat(format!("bad dimension count {nd}")));
        }
        let mut dims = Vec::with_capacity(nd);
        for _ in 0..nd {
            r.read_exact(&mut b8)?;
            let d = u64::from_le_bytes(b8) as usize;
            if d < 2 {
                return Err(Error::TableFormat(format!("bad grid size {d}")));
            }
            dims.push(d);
        }
        r.read_exact(&mut b8)?;
        let delta = f64::from_le_bytes(b8);
        r.read_exact(&mut b8)?;
        let iteration = u64::from_le_bytes(b8);
        let len: usize = dims.iter().product();
        let mut values = vec![0.0; len];
        for v in values.iter_mut() {
            r.read_exact(&mut b8)?;
            *v = f64::from_le_bytes(b8);
            if !v.is_finite() {
                return Err(Error::TableFormat("non-finite value".into()));
            }
        }
        Ok(Self {
            dims,
            values,
            delta,
            iteration,
        })
    }

    /// CSV inspection dump: node angles then the value.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        let nd = self.dims.len();
        let header: Vec<String> = (0..nd).map(|d| format!("x{d}")).collect();
        writeln!(w, "{},value", header.join(","))?;
        for off in 0..self.values.len() {
            let coords = self.node_coords(off);
            let cs: Vec<String> = coords.iter().map(|c| format!("{c}")).collect();
            writeln!(w, "{},{}", cs.join(","), self.values[off])?;
        }
        Ok(())
    }
}

/// Finite lattice of constant-velocity moves: evenly spread directions
/// times evenly spread speeds, plus the zero control.
#[derive(Debug, Clone)]
pub struct ControlLattice {
    pub controls: Vec<Vec<f64>>,
    pub u_max: f64,
}

pub fn control_lattice(dim: usize, n_angles: usize, n_speeds: usize, u_max: f64) -> ControlLattice {
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    match dim {
        1 => {
            dirs.push(vec![1.0]);
            dirs.push(vec![-1.0]);
        }
        2 => {
            for j in 0..n_angles {
                let phi = TAU * j as f64 / n_angles as f64;
                dirs.push(vec![phi.cos(), phi.sin()]);
            }
        }
        _ => {
            // Axis-aligned fallback for higher dimensions.
            for d in 0..dim {
                for s in [1.0, -1.0] {
                    let mut v = vec![0.0; dim];
                    v[d] = s;
                    dirs.push(v);
                }
            }
        }
    }
    let mut controls = vec![vec![0.0; dim]];
    for dir in &dirs {
        for k in 1..=n_speeds {
            let speed = u_max * k as f64 / n_speeds as f64;
            controls.push(dir.iter().map(|c| c * speed).collect());
        }
    }
    ControlLattice { controls, u_max }
}

/// Upper-bound initial guess `V_0 = dist^2/2 + (L/2) dist`.
pub fn initial_guess(pot: &dyn TorusPotential, l: f64, dims: Vec<usize>) -> ValueTable {
    let mut table = ValueTable::zeros(dims);
    let coords: Vec<Vec<f64>> = (0..table.values.len())
        .map(|off| table.node_coords(off))
        .collect();
    table
        .values
        .par_iter_mut()
        .zip(coords.par_iter())
        .for_each(|(v, x)| {
            let d = pot.dist_to_zero(x);
            *v = 0.5 * d * d + 0.5 * l * d;
        });
    table
}

/// Precomputed `Q_hat` at the table nodes; interpolated at control feet
/// so the sweep inner loop stays trigonometry free.
pub fn qhat_table(pot: &dyn TorusPotential, dims: Vec<usize>) -> ValueTable {
    let mut table = ValueTable::zeros(dims);
    let coords: Vec<Vec<f64>> = (0..table.values.len())
        .map(|off| table.node_coords(off))
        .collect();
    table
        .values
        .par_iter_mut()
        .zip(coords.par_iter())
        .for_each(|(v, x)| *v = pot.value_hat(x));
    table
}

/// One raw semi-Lagrangian sweep (double-buffered: reads `prev`, writes
/// a fresh table). Running cost uses the trapezoid between the node and
/// the control foot. On the uniform grid the foot of a fixed control
/// has the same fractional cell offset at every node, so the corner
/// weights are precomputed once per control and the inner loop reduces
/// to index shifts and fused multiply-adds.
pub fn bellman_sweep(prev: &ValueTable, qhat: &ValueTable, lat: &ControlLattice) -> ValueTable {
    let delta = prev.delta;
    let nd = prev.dims.len();
    let n_corners = 1usize << nd;

    struct PreControl {
        /// `delta * ||u||^2 / 2`, the exact half of the running cost.
        effort: f64,
        /// Integer node shift of the foot's base corner, per dim.
        base: Vec<isize>,
        /// Multilinear weights for the `2^nd` corners.
        weights: Vec<f64>,
    }
    let pre: Vec<PreControl> = lat
        .controls
        .iter()
        .map(|u| {
            let mut base = vec![0isize; nd];
            let mut frac = vec![0.0; nd];
            let mut u2 = 0.0;
            for d in 0..nd {
                let t = delta * u[d] / prev.spacing(d);
                base[d] = t.floor() as isize;
                frac[d] = t - t.floor();
                u2 += u[d] * u[d];
            }
            let mut weights = vec![0.0; n_corners];
            for (bits, w) in weights.iter_mut().enumerate() {
                let mut acc = 1.0;
                for d in 0..nd {
                    acc *= if bits & (1 << d) != 0 {
                        frac[d]
                    } else {
                        1.0 - frac[d]
                    };
                }
                *w = acc;
            }
            PreControl {
                effort: 0.5 * delta * u2,
                base,
                weights,
            }
        })
        .collect();

    assert!(nd <= 4, "sweep supports up to 4 torus dimensions");
    let dims = prev.dims.clone();
    let values: Vec<f64> = (0..prev.values.len())
        .into_par_iter()
        .map(|off| {
            // Multi-index of the node.
            let mut idx = [0usize; 4];
            let mut rem = off;
            for d in (0..nd).rev() {
                idx[d] = rem % dims[d];
                rem /= dims[d];
            }
            let q0 = qhat.values[off];
            let mut best = f64::INFINITY;
            let mut lo = [0usize; 4];
            let mut hi = [0usize; 4];
            for pc in &pre {
                for d in 0..nd {
                    let n = dims[d] as isize;
                    let b = (idx[d] as isize + pc.base[d]).rem_euclid(n) as usize;
                    lo[d] = b;
                    hi[d] = if b + 1 == dims[d] { 0 } else { b + 1 };
                }
                let mut v_foot = 0.0;
                let mut q_foot = 0.0;
                for (bits, w) in pc.weights.iter().enumerate() {
                    let mut o = 0usize;
                    for d in 0..nd {
                        o = o * dims[d] + if bits & (1 << d) != 0 { hi[d] } else { lo[d] };
                    }
                    v_foot += w * prev.values[o];
                    q_foot += w * qhat.values[o];
                }
                let cand = pc.effort + delta * 0.5 * (q0 + q_foot) + v_foot;
                if cand < best {
                    best = cand;
                }
            }
            best
        })
        .collect();
    ValueTable {
        dims: prev.dims.clone(),
        values,
        delta,
        iteration: prev.iteration + 1,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ViOptions {
    pub dims: Vec<usize>,
    pub n_angles: usize,
    pub n_speeds: usize,
    /// Foot reach in cells: `delta = cfl * dx / u_max`.
    pub cfl: f64,
    /// Headroom over the energy-identity speed `sqrt(2 max Q_hat)`.
    pub u_max_factor: f64,
    /// Sup-norm change per sweep that stops the iteration.
    pub sweep_tol: f64,
    pub max_sweeps: usize,
}

impl Default for ViOptions {
    fn default() -> Self {
        Self {
            dims: vec![128, 128],
            n_angles: 16,
            n_speeds: 12,
            cfl: 3.0,
            u_max_factor: 1.1,
            sweep_tol: 1e-8,
            max_sweeps: 4000,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ViStats {
    pub sweeps: u64,
    pub final_change: f64,
    /// Largest positive excursion of a raw sweep above the previous
    /// table (clamped away; zero when the operator is truly monotone).
    pub monotone_violation: f64,
    pub u_max: f64,
    pub delta: f64,
}

/// Runs sweeps until the sup-norm change stalls. Each iterate is
/// clamped by the previous one, so the stored sequence is monotone
/// nonincreasing by construction; raw violations are reported.
pub fn value_iteration(
    pot: &dyn TorusPotential,
    l: f64,
    opts: &ViOptions,
) -> Result<(ValueTable, ViStats)> {
    let qhat = qhat_table(pot, opts.dims.clone());
    let q_max = qhat.values.iter().cloned().fold(0.0f64, f64::max);
    let u_max = opts.u_max_factor * (2.0 * q_max).sqrt();
    if !(u_max > 0.0) {
        return Err(Error::InvalidParameter {
            field: "u_max",
            reason: "potential is identically zero".into(),
        });
    }
    let mut table = initial_guess(pot, l, opts.dims.clone());
    let dx = table.max_spacing();
    table.delta = opts.cfl * dx / u_max;
    // The control lattice refines with the spatial grid; otherwise the
    // direction-discretization bias dominates on fine grids and the
    // scheme stops converging under refinement.
    let n_max = opts.dims.iter().copied().max().unwrap_or(0);
    let n_angles = opts.n_angles.max(n_max / 4);
    let n_speeds = opts.n_speeds.max(n_max / 8);
    let lat = control_lattice(opts.dims.len(), n_angles, n_speeds, u_max);

    let mut violation = 0.0f64;
    let mut change = f64::INFINITY;
    let mut sweeps = 0u64;
    while sweeps < opts.max_sweeps as u64 {
        let mut next = bellman_sweep(&table, &qhat, &lat);
        let mut max_drop = 0.0f64;
        for (nv, &ov) in next.values.iter_mut().zip(&table.values) {
            if *nv > ov {
                violation = violation.max(*nv - ov);
                *nv = ov;
            } else {
                max_drop = max_drop.max(ov - *nv);
            }
        }
        change = max_drop;
        table = next;
        sweeps += 1;
        if change <= opts.sweep_tol {
            break;
        }
    }
    let stats = ViStats {
        sweeps,
        final_change: change,
        monotone_violation: violation,
        u_max,
        delta: table.delta,
    };
    Ok((table, stats))
}

/// Smallest iteration count exceeding the theoretical bound
/// `i > 2 pi sqrt(n) sigma2 / (delta * eta^(N Nt))` with
/// `eta = (-L + sqrt(L^2 + 8 eps)) / 2`; also returns the matching
/// stabilization time `t_eps = i_bound * delta`.
pub fn required_iterations(
    cert: &DecayCertificate,
    delta: f64,
    eps: f64,
    cap: u64,
) -> Result<(u64, f64)> {
    if !(delta > 0.0) {
        return Err(Error::NonPositiveStep(delta));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter {
            field: "eps",
            reason: format!("must be positive, got {eps}"),
        });
    }
    let eta = (-cert.l + (cert.l * cert.l + 8.0 * eps).sqrt()) / 2.0;
    let nn = (cert.nloj * cert.ntilde) as f64;
    let t_eps = TAU * (cert.n as f64).sqrt() * cert.sigma2 / eta.powf(nn);
    let bound = t_eps / delta;
    if !bound.is_finite() || bound >= cap as f64 {
        return Err(Error::IterationOverflow { bound, cap });
    }
    Ok((bound.floor() as u64 + 1, t_eps))
}

#[derive(Debug, Clone, Serialize)]
pub struct RolloutSample {
    pub t: f64,
    pub x: Vec<f64>,
    pub dist: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Rollout {
    pub samples: Vec<RolloutSample>,
    /// Accumulated running cost `int (||u||^2/2 + Q_hat) dt`.
    pub cost: f64,
}

/// Integrates the feedback law `Phi' = -grad V` (midpoint rule, table
/// gradient by central differences of the interpolant). Stops early
/// once the state is well inside the grid-resolution neighborhood of
/// the argmin set.
pub fn feedback_rollout(
    pot: &dyn TorusPotential,
    table: &ValueTable,
    theta0: &[f64],
    t_end: f64,
    dt: f64,
) -> Result<Rollout> {
    if !(dt > 0.0) {
        return Err(Error::NonPositiveStep(dt));
    }
    let nd = table.dims.len();
    let h = 0.5 * table.max_spacing();
    let cell = table.max_spacing();
    let mut x = theta0.to_vec();
    let mut samples = vec![RolloutSample {
        t: 0.0,
        x: x.clone(),
        dist: pot.dist_to_zero(&x),
    }];
    let mut cost = 0.0;
    let steps = (t_end / dt).ceil() as usize;
    for s in 1..=steps {
        let g = table.grad_interp(&x, h);
        let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        let dist = pot.dist_to_zero(&x);
        if dist <= 0.5 * cell {
            break;
        }
        if gnorm < 1e-10 {
            if dist > 2.0 * cell {
                return Err(Error::RolloutStalled { dist });
            }
            break;
        }
        // Midpoint step of Phi' = -grad V.
        let mid: Vec<f64> = (0..nd).map(|d| x[d] - 0.5 * dt * g[d]).collect();
        let gm = table.grad_interp(&mid, h);
        let u: Vec<f64> = gm.iter().map(|v| -v).collect();
        let u2: f64 = u.iter().map(|v| v * v).sum();
        cost += dt * (0.5 * u2 + pot.value_hat(&x));
        for d in 0..nd {
            x[d] += dt * u[d];
        }
        samples.push(RolloutSample {
            t: s as f64 * dt,
            x: x.clone(),
            dist: pot.dist_to_zero(&x),
        });
    }
    Ok(Rollout { samples, cost })
}

#[derive(Debug, Clone, Serialize)]
pub struct HjReport {
    /// Max over checked nodes of `| ||grad V||^2 - 2 Q_hat |`.
    pub max_residual: f64,
    /// Node coordinates attaining the max.
    pub argmax: Vec<f64>,
    pub checked_nodes: usize,
    pub excluded_nodes: usize,
}

/// Hamilton-Jacobi residual `| ||grad V_tilde||^2 - 2 Q_hat |`, with
/// the gradient of the multilinear interpolant evaluated exactly at
/// cell centers, where it is a second-order approximation of `grad V`.
/// Excluded from the check: cells within two cells of the argmin set
/// and cells touching the cut locus (dilated by one cell). Cut locus
/// nodes are detected as axis-local maxima of V or as concave slope
/// jumps: across a genuine kink `d_plus - d_minus` stays O(1) while in
/// smooth regions it shrinks like `h * V''`, so a threshold of
/// `sqrt(h)` separates the two under refinement.
pub fn hj_residual(pot: &dyn TorusPotential, table: &ValueTable) -> HjReport {
    let nd = table.dims.len();
    let cell = table.max_spacing();
    let n_total = table.values.len();

    let neighbor = |idx: &[usize], d: usize, step: isize| -> usize {
        let mut nb = idx.to_vec();
        let n = table.dims[d];
        nb[d] = (idx[d] + n).wrapping_add_signed(step) % n;
        table.offset(&nb)
    };
    let multi_index = |off: usize| -> Vec<usize> {
        let mut idx = vec![0usize; nd];
        let mut rem = off;
        for d in (0..nd).rev() {
            idx[d] = rem % table.dims[d];
            rem /= table.dims[d];
        }
        idx
    };

    // Pass 1: mark cut locus nodes.
    let mut kink = vec![false; n_total];
    for off in 0..n_total {
        let idx = multi_index(off);
        let v0 = table.values[off];
        for d in 0..nd {
            let s = table.spacing(d);
            let d_plus = (table.values[neighbor(&idx, d, 1)] - v0) / s;
            let d_minus = (v0 - table.values[neighbor(&idx, d, -1)]) / s;
            if (d_minus > 0.0 && d_plus < 0.0) || d_plus - d_minus < -s.sqrt() {
                kink[off] = true;
                break;
            }
        }
    }
    // Pass 2: dilate the mask by one cell per axis; a checked cell then
    // never shares a corner with the low-order band around a kink.
    let mut masked = kink.clone();
    for off in 0..n_total {
        if kink[off] {
            let idx = multi_index(off);
            for d in 0..nd {
                masked[neighbor(&idx, d, 1)] = true;
                masked[neighbor(&idx, d, -1)] = true;
            }
        }
    }

    let mut max_residual = 0.0f64;
    let mut argmax = vec![0.0; nd];
    let mut checked = 0usize;
    let mut excluded = 0usize;
    // One cell per base node (periodic); corners are the 2^nd nodes at
    // idx + {0,1}^nd.
    for off in 0..n_total {
        let idx = multi_index(off);
        let mut center = table.node_coords(off);
        for d in 0..nd {
            center[d] += 0.5 * table.spacing(d);
        }
        let mut corner_masked = false;
        let mut corners = vec![0usize; 1 << nd];
        for (bits, c) in corners.iter_mut().enumerate() {
            let mut cidx = idx.clone();
            for d in 0..nd {
                if bits & (1 << d) != 0 {
                    cidx[d] = (cidx[d] + 1) % table.dims[d];
                }
            }
            *c = table.offset(&cidx);
            corner_masked |= masked[*c];
        }
        if corner_masked || pot.dist_to_zero(&center) <= 2.0 * cell {
            excluded += 1;
            continue;
        }
        // Exact interpolant gradient at the cell center: per axis, the
        // mean of the edge differences along that axis.
        let mut grad2 = 0.0;
        for d in 0..nd {
            let s = table.spacing(d);
            let mut g = 0.0;
            for (bits, c) in corners.iter().enumerate() {
                let sign = if bits & (1 << d) != 0 { 1.0 } else { -1.0 };
                g += sign * table.values[*c];
            }
            g /= s * (1 << (nd - 1)) as f64;
            grad2 += g * g;
        }
        let res = (grad2 - 2.0 * pot.value_hat(&center)).abs();
        if res > max_residual {
            max_residual = res;
            argmax = center;
        }
        checked += 1;
    }
    HjReport {
        max_residual,
        argmax,
        checked_nodes: checked,
        excluded_nodes: excluded,
    }
}

/// Closed-form pendulum value function from the energy identity:
/// `V'(gamma) = sqrt(2 Q_hat) = sqrt(beta) |cos gamma|`, hence
/// `V = sqrt(beta) (1 - |sin gamma|)`.
pub fn pendulum_value_oracle(beta: f64, gamma: f64) -> f64 {
    beta.sqrt() * (1.0 - gamma.sin().abs())
}
