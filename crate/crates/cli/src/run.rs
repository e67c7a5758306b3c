//! Subcommand orchestration. Every stage appends PASS/FAIL verdicts to
//! the summary; `all` chains the stages and shares the expensive
//! intermediates (joint solve, certificate, value tables).

use crate::artifacts::{self, FORMAT_VERSION};
use crate::config::RunConfig;
use anyhow::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use spinbal_core::analysis::loja_min_slack;
use spinbal_core::torus::torus_dist;
use spinbal_core::transcription::solve_path;
use spinbal_core::{
    build_certificate, build_head_certificate, can_fully_balance, check_decay_bounds,
    exp_threshold, feedback_rollout, hj_residual, imbalance_indicator, integrate_el,
    lambda_conjugacy_residual, pontryagin_residual, required_iterations, select_horizon,
    solve_open_loop, steady_state, value_iteration, AngleState, DecayCertificate, DecayMargins,
    ELState, HeadPotential, HjReport, Horizon, HorizonRule, JointPotential, RateReport, Rollout,
    SolveOptions, SolvePath, SolveReport, SteadyOptimum, TorusPotential, Trajectory, ValueTable,
    ViOptions, ViStats,
};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Steady,
    Solve,
    Simulate,
    Analyze,
    ValueIter,
    Rollout,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Serialize)]
struct SteadySection {
    head1: SteadyOptimum,
    head2: SteadyOptimum,
    total_residual: f64,
    can_fully_balance: [bool; 3],
    exp_threshold: bool,
    /// Physical G evaluated at the returned steady angles.
    g_at_optimum: f64,
}

#[derive(Serialize)]
struct SolveSection {
    horizon: Horizon,
    horizon_capped: bool,
    report: SolveReport,
    max_abs_energy: f64,
    rate: RateReport,
}

#[derive(Serialize)]
struct SimulateSection {
    /// Max torus distance between the transcription path and the
    /// shooting integration over the first half horizon.
    shooting_gap: f64,
    energy_drift: f64,
    /// Max |Pontryagin residual - EL residual| agreement gap.
    pontryagin_gap: f64,
}

#[derive(Serialize)]
struct AnalyzeSection {
    certificate: DecayCertificate,
    /// Offset-grid validation slacks for the per-head inequalities.
    offset_slack: [f64; 2],
    margins: DecayMargins,
    conjugacy_max_residual: f64,
    rate: RateReport,
    required_iterations: Option<u64>,
    stabilization_time: Option<f64>,
}

#[derive(Serialize)]
struct ViHeadSection {
    stats: ViStats,
    hj: HjReport,
    value_at_z_max: f64,
    probe_count: usize,
    /// Max of |V_table - V_direct| - max(0.05 V_direct, 0.02) over
    /// probes; nonpositive means every probe is within tolerance.
    probe_excess: f64,
}

#[derive(Serialize)]
struct RolloutHeadSection {
    steps: usize,
    cost: f64,
    end_dist: f64,
    cell: f64,
    open_loop_objective: f64,
}

#[derive(Serialize)]
struct Summary<'a> {
    format_version: u32,
    command: &'a str,
    seed: u64,
    config: &'a RunConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    steady: Option<SteadySection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    solve: Option<SolveSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    simulate: Option<SimulateSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    analyze: Option<AnalyzeSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    value_iter: Option<[ViHeadSection; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rollout: Option<[RolloutHeadSection; 2]>,
    verdicts: &'a [Verdict],
    pass: bool,
}

pub struct Pipeline {
    cfg: RunConfig,
    format: Format,
    verdicts: Vec<Verdict>,
    steady: Option<SteadySection>,
    solve: Option<SolveSection>,
    simulate: Option<SimulateSection>,
    analyze: Option<AnalyzeSection>,
    value_iter: Option<[ViHeadSection; 2]>,
    rollout: Option<[RolloutHeadSection; 2]>,
    // Shared intermediates.
    certificate: Option<DecayCertificate>,
    trajectory: Option<(Trajectory, SolveReport, bool)>,
    tables: Option<[(ValueTable, ViStats); 2]>,
}

impl Pipeline {
    pub fn new(cfg: RunConfig, format: Format) -> Self {
        Self {
            cfg,
            format,
            verdicts: Vec::new(),
            steady: None,
            solve: None,
            simulate: None,
            analyze: None,
            value_iter: None,
            rollout: None,
            certificate: None,
            trajectory: None,
            tables: None,
        }
    }

    fn check(&mut self, name: &str, pass: bool, detail: String) {
        println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        self.verdicts.push(Verdict {
            name: name.to_string(),
            pass,
            detail,
        });
    }

    fn out_path(&self, name: &str) -> PathBuf {
        self.cfg.out_dir.join(name)
    }

    fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            grad_tol: self.cfg.solver.tol,
            max_iters: self.cfg.solver.max_iters,
            polish: true,
        }
    }

    fn horizon_rule(&self) -> HorizonRule {
        HorizonRule {
            t_min: self.cfg.solver.t_min,
            t_cap: Some(self.cfg.solver.t_cap),
            dt_max: self.cfg.solver.dt_max,
            margin: 0.05,
        }
    }

    fn certificate(&mut self) -> Result<&DecayCertificate> {
        if self.certificate.is_none() {
            self.certificate = Some(build_certificate(&self.cfg.rotor, self.cfg.analysis.grid)?);
        }
        Ok(self.certificate.as_ref().unwrap())
    }

    fn trajectory(&mut self) -> Result<&(Trajectory, SolveReport, bool)> {
        if self.trajectory.is_none() {
            let joint = JointPotential::from_config(&self.cfg.rotor)?;
            let dist0 = joint.dist_to_zero(&self.cfg.phi0);
            let eps = self.cfg.solver.eps;
            let rule = self.horizon_rule();
            let cert = self.certificate()?;
            let (horizon, capped) = select_horizon(cert, dist0, eps, &rule)?;
            let phi0 = AngleState::from_array(self.cfg.phi0);
            let opts = self.solve_options();
            let (traj, report) = solve_open_loop(&self.cfg.rotor, phi0, horizon, &opts)?;
            self.trajectory = Some((traj, report, capped));
        }
        Ok(self.trajectory.as_ref().unwrap())
    }

    fn tables(&mut self) -> Result<&[(ValueTable, ViStats); 2]> {
        if self.tables.is_none() {
            let mut out = Vec::new();
            for index in [1u8, 2] {
                let pot = HeadPotential::from_config(&self.cfg.rotor, index)?;
                let head_cert = build_head_certificate(&pot, self.cfg.analysis.grid)?;
                let opts = ViOptions {
                    dims: self.cfg.rl.dims.to_vec(),
                    n_angles: self.cfg.rl.n_angles,
                    n_speeds: self.cfg.rl.n_speeds,
                    cfl: self.cfg.rl.cfl,
                    sweep_tol: self.cfg.rl.sweep_tol,
                    max_sweeps: self.cfg.rl.max_sweeps,
                    ..ViOptions::default()
                };
                out.push(value_iteration(&pot, head_cert.l, &opts)?);
            }
            let [a, b]: [(ValueTable, ViStats); 2] = out.try_into().unwrap();
            self.tables = Some([a, b]);
        }
        Ok(self.tables.as_ref().unwrap())
    }

    pub fn run_steady(&mut self) -> Result<()> {
        let cfg = &self.cfg.rotor;
        let (h1, h2, _positions) = steady_state(cfg)?;
        let balance = can_fully_balance(cfg)?;
        let threshold = exp_threshold(cfg)?;
        let state = AngleState::new(h1.alpha_bar, h1.gamma_bar, h2.alpha_bar, h2.gamma_bar);
        let (g, _, _) = imbalance_indicator(cfg, &state)?;
        let total = h1.residual + h2.residual;
        self.check(
            "steady.balanced_iff_zero_residual",
            balance.2 == (total == 0.0),
            format!("can_fully_balance={} total_residual={total:e}", balance.2),
        );
        // At the optimum the physical G equals the residual in physical
        // units; with zero residual it must vanish to round-off.
        let pass = if total == 0.0 { g < 1e-20 } else { g.is_finite() };
        self.check("steady.g_at_optimum", pass, format!("G={g:e}"));
        self.steady = Some(SteadySection {
            head1: h1,
            head2: h2,
            total_residual: total,
            can_fully_balance: [balance.0, balance.1, balance.2],
            exp_threshold: threshold,
            g_at_optimum: g,
        });
        Ok(())
    }

    pub fn run_solve(&mut self) -> Result<()> {
        let fit_window = (
            self.cfg.analysis.fit_window[0],
            self.cfg.analysis.fit_window[1],
        );
        let tol = self.cfg.solver.tol;
        let (traj, report, capped) = {
            let t = self.trajectory()?;
            (t.0.clone(), t.1.clone(), t.2)
        };
        let rate = spinbal_core::fit_rate(&self.cfg.rotor, &traj, fit_window)?;
        let max_e = traj.energy[1..traj.horizon.nt - 1]
            .iter()
            .fold(0.0f64, |m, e| m.max(e.abs()));

        self.check(
            "solve.converged",
            report.converged && report.grad_norm <= tol,
            format!(
                "grad_norm={:e} after {} iterations",
                report.grad_norm, report.iterations
            ),
        );
        self.check(
            "solve.el_residual",
            report.el_residual <= 1e-5,
            format!("max interior residual {:e}", report.el_residual),
        );
        self.check(
            "solve.terminal_speed",
            report.terminal_speed <= 1e-3,
            format!("|psi_end|={:e}", report.terminal_speed),
        );
        self.check(
            "solve.energy",
            max_e <= 1e-3,
            format!("max interior |E|={max_e:e}"),
        );
        self.check(
            "solve.rate_fit",
            rate.r2 >= 0.99,
            format!("r2={:.6} over t in [{:.2},{:.2}]", rate.r2, rate.window[0], rate.window[1]),
        );
        self.check(
            "solve.rate_value",
            rate.mu_fit >= 0.5 * rate.mu_pred && rate.mu_fit <= 2.0 * rate.mu_pred,
            format!("mu_fit={:.4} mu_pred={:.4}", rate.mu_fit, rate.mu_pred),
        );

        match self.format {
            Format::Csv => {
                artifacts::write_trajectory_csv(&self.out_path("trajectory.csv"), &traj)?
            }
            Format::Json => artifacts::write_json(&self.out_path("trajectory.json"), &traj)?,
        }
        self.solve = Some(SolveSection {
            horizon: traj.horizon,
            horizon_capped: capped,
            report,
            max_abs_energy: max_e,
            rate,
        });
        Ok(())
    }

    /// Shooting cross-check: integrate the Euler-Lagrange system from
    /// the transcription's initial state and velocity and compare paths
    /// over the first half horizon.
    pub fn run_simulate(&mut self) -> Result<()> {
        let joint = JointPotential::from_config(&self.cfg.rotor)?;
        let (traj, _, _) = {
            let t = self.trajectory()?;
            (t.0.clone(), (), ())
        };
        let dt = traj.horizon.dt;
        let mut g0 = vec![0.0; 4];
        joint.grad(&traj.cover[0], &mut g0);
        // psi_0 approximates the half-node velocity; shift back to t=0.
        let v0: Vec<f64> = (0..4)
            .map(|i| traj.controls[0][i] - 0.5 * dt * g0[i])
            .collect();
        let init = ELState {
            phi: traj.cover[0].clone(),
            phidot: v0,
        };
        // The optimum rides the stable manifold of a saddle, so forward
        // shooting amplifies the O(dt^2) discretization error like
        // e^(mu t); keep the comparison window short enough for the
        // amplified error to stay well under the tolerance.
        let t_half = (0.5 * traj.horizon.t_final).min(6.0);
        let path = integrate_el(&joint, &init, t_half, dt)?;
        let mut gap = 0.0f64;
        for (k, s) in path.iter().enumerate() {
            gap = gap.max(torus_dist(&s.phi, &traj.cover[k]));
        }
        let drift = path
            .iter()
            .fold(0.0f64, |m, s| m.max((s.energy - path[0].energy).abs()));

        let solve_path_view = SolvePath {
            horizon: traj.horizon,
            dim: 4,
            cover: traj.cover.clone(),
            controls: traj.controls.clone(),
        };
        let pr = pontryagin_residual(&joint, &solve_path_view);
        let el = solve_path_view.el_residual(&joint);
        let pr_max = pr.iter().fold(0.0f64, |m, &r| m.max(r));
        let pont_gap = (pr_max - el).abs();

        self.check(
            "simulate.shooting_gap",
            gap <= 1e-2,
            format!("max torus gap {gap:e} over t in [0,{t_half}]"),
        );
        self.check(
            "simulate.energy_drift",
            drift <= 1e-6,
            format!("max |E - E0| = {drift:e}"),
        );
        self.check(
            "simulate.pontryagin_equals_el",
            pont_gap <= 1e-12,
            format!("|max pontryagin residual - el residual| = {pont_gap:e}"),
        );

        let rows: Vec<Vec<f64>> = path
            .iter()
            .map(|s| {
                let mut row = vec![s.t];
                row.extend(s.phi.iter().map(|&a| spinbal_core::torus::canonical(a)));
                row.extend(&s.phidot);
                row.push(s.energy);
                row
            })
            .collect();
        artifacts::write_table_csv(
            &self.out_path("el_path.csv"),
            "t,alpha1,gamma1,alpha2,gamma2,psi1,psi2,psi3,psi4,E",
            &rows,
        )?;
        self.simulate = Some(SimulateSection {
            shooting_gap: gap,
            energy_drift: drift,
            pontryagin_gap: pont_gap,
        });
        Ok(())
    }

    pub fn run_analyze(&mut self) -> Result<()> {
        let grid = self.cfg.analysis.grid;
        let fit_window = (
            self.cfg.analysis.fit_window[0],
            self.cfg.analysis.fit_window[1],
        );
        let cert = self.certificate()?.clone();

        // Offset-grid validation of the per-head growth inequalities.
        let mut offset_slack = [0.0f64; 2];
        for (i, index) in [1u8, 2].iter().enumerate() {
            let pot = HeadPotential::from_config(&self.cfg.rotor, *index)?;
            let head_cert = build_head_certificate(&pot, grid)?;
            offset_slack[i] = loja_min_slack(&pot, head_cert.d, head_cert.nloj, grid, 0.5);
        }
        self.check(
            "analyze.lojasiewicz_offset_grid",
            offset_slack.iter().all(|&s| s >= 0.0),
            format!("min slacks {:e}, {:e}", offset_slack[0], offset_slack[1]),
        );

        let (traj, _, _) = {
            let t = self.trajectory()?;
            (t.0.clone(), (), ())
        };
        let margins = check_decay_bounds(&cert, &traj);
        self.check(
            "analyze.decay_bounds",
            margins.eq1_min_slack >= 0.0
                && margins.eq2_min_slack >= 0.0
                && margins.saturation_slack >= 0.0,
            format!(
                "slacks eq1={:.4} eq2={:.4} saturation={:.4}",
                margins.eq1_min_slack, margins.eq2_min_slack, margins.saturation_slack
            ),
        );

        let rate = spinbal_core::fit_rate(&self.cfg.rotor, &traj, fit_window)?;

        // Conjugacy of the first-order optimality system around random
        // positive-definite curvatures.
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed ^ 0xc0ffee);
        let mut conj_max = 0.0f64;
        for _ in 0..100 {
            let l11: f64 = rng.gen_range(0.2..2.0);
            let l21: f64 = rng.gen_range(-1.0..1.0);
            let l22: f64 = rng.gen_range(0.2..2.0);
            let h = [
                [l11 * l11 + 0.01, l11 * l21],
                [l11 * l21, l21 * l21 + l22 * l22 + 0.01],
            ];
            conj_max = conj_max.max(lambda_conjugacy_residual(h));
        }
        self.check(
            "analyze.lambda_conjugacy",
            conj_max <= 1e-10,
            format!("max residual {conj_max:e} over 100 draws"),
        );

        // The certified sweep count for the value iteration; the bound
        // is astronomically loose for nondegenerate problems, so a cap
        // overflow is reported rather than failed.
        let delta = {
            let dx = std::f64::consts::TAU / self.cfg.rl.dims[0] as f64;
            self.cfg.rl.cfl * dx
        };
        let (iters, t_eps) = match required_iterations(&cert, delta, self.cfg.solver.eps, u64::MAX)
        {
            Ok((i, t)) => (Some(i), Some(t)),
            Err(_) => (None, None),
        };

        self.analyze = Some(AnalyzeSection {
            certificate: cert,
            offset_slack,
            margins,
            conjugacy_max_residual: conj_max,
            rate,
            required_iterations: iters,
            stabilization_time: t_eps,
        });
        Ok(())
    }

    pub fn run_value_iter(&mut self) -> Result<()> {
        let probes = self.cfg.rl.probes;
        let seed = self.cfg.seed;
        // Probe oracles tolerate a coarser time step: the O(dt^2)
        // transcription error stays far below the probe tolerance and
        // the solves are the dominant cost of this stage.
        let rule = HorizonRule {
            dt_max: 3.0 * self.cfg.solver.dt_max,
            ..self.horizon_rule()
        };
        let eps = self.cfg.solver.eps;
        let opts = self.solve_options();
        self.tables()?;
        let mut sections = Vec::new();
        for (i, index) in [1u8, 2].iter().enumerate() {
            let pot = HeadPotential::from_config(&self.cfg.rotor, *index)?;
            let (table, stats) = {
                let t = &self.tables.as_ref().unwrap()[i];
                (t.0.clone(), t.1.clone())
            };
            let hj = hj_residual(&pot, &table);
            let cell = table.max_spacing();

            // Converged value on the steady set stays within the
            // interpolation bound.
            let mut at_z = 0.0f64;
            for off in 0..table.values.len() {
                let x = table.node_coords(off);
                if pot.dist_to_zero(&x) < 1e-12 {
                    at_z = at_z.max(table.values[off]);
                }
            }
            let z_bound = 0.5 * cell * cell + cell;

            // Probe the table against per-head transcription optima.
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(*index as u64));
            let head_cert = build_head_certificate(&pot, self.cfg.analysis.grid)?;
            let mut excess = f64::NEG_INFINITY;
            for _ in 0..probes {
                let x = [
                    rng.gen_range(0.0..std::f64::consts::TAU),
                    rng.gen_range(0.0..std::f64::consts::TAU),
                ];
                let dist0 = pot.dist_to_zero(&x);
                let (horizon, _) = select_horizon(&head_cert, dist0.max(1e-3), eps, &rule)?;
                let (_, report) = solve_path(&pot, &x, horizon, &opts);
                let v_direct = report.objective;
                let v_table = table.interp(&x);
                let tol = (0.05 * v_direct).max(0.02);
                excess = excess.max((v_table - v_direct).abs() - tol);
            }

            self.check(
                &format!("value_iter.head{index}.monotone"),
                stats.final_change <= self.cfg.rl.sweep_tol,
                format!(
                    "{} sweeps, final change {:e}, raw overshoot {:e} (clamped)",
                    stats.sweeps, stats.final_change, stats.monotone_violation
                ),
            );
            self.check(
                &format!("value_iter.head{index}.zero_on_steady_set"),
                at_z <= z_bound,
                format!("max value at Z {at_z:e} bound {z_bound:e}"),
            );
            self.check(
                &format!("value_iter.head{index}.probes"),
                excess <= 0.0,
                format!("{probes} probes, worst excess {excess:e}"),
            );

            let stem = format!("value_head{index}");
            artifacts::write_value_table(&self.out_path(&format!("{stem}.bin")), &table)?;
            match self.format {
                Format::Csv => artifacts::write_value_table_csv(
                    &self.out_path(&format!("{stem}.csv")),
                    &table,
                )?,
                Format::Json => {
                    artifacts::write_json(&self.out_path(&format!("{stem}.json")), &table)?
                }
            }
            sections.push(ViHeadSection {
                stats,
                hj,
                value_at_z_max: at_z,
                probe_count: probes,
                probe_excess: excess,
            });
        }
        let [a, b]: [ViHeadSection; 2] = sections.try_into().ok().unwrap();
        self.value_iter = Some([a, b]);
        Ok(())
    }

    pub fn run_rollout(&mut self) -> Result<()> {
        let rule = self.horizon_rule();
        let eps = self.cfg.solver.eps;
        let opts = self.solve_options();
        let grid = self.cfg.analysis.grid;
        self.tables()?;
        let mut sections = Vec::new();
        for (i, index) in [1u8, 2].iter().enumerate() {
            let pot = HeadPotential::from_config(&self.cfg.rotor, *index)?;
            let table = self.tables.as_ref().unwrap()[i].0.clone();
            let cell = table.max_spacing();
            let theta0 = [self.cfg.phi0[2 * i], self.cfg.phi0[2 * i + 1]];

            let head_cert = build_head_certificate(&pot, grid)?;
            let dist0 = pot.dist_to_zero(&theta0);
            let (horizon, _) = select_horizon(&head_cert, dist0.max(1e-3), eps, &rule)?;
            let (_, open_loop) = solve_path(&pot, &theta0, horizon, &opts);

            let roll: Rollout =
                feedback_rollout(&pot, &table, &theta0, horizon.t_final, 0.5 * cell)?;
            let end = roll.samples.last().unwrap();

            self.check(
                &format!("rollout.head{index}.endpoint"),
                end.dist <= 2.0 * cell,
                format!("terminal dist {:e} (2 cells = {:e})", end.dist, 2.0 * cell),
            );
            self.check(
                &format!("rollout.head{index}.cost"),
                roll.cost <= 1.1 * open_loop.objective,
                format!(
                    "closed loop {:.6} vs open loop {:.6}",
                    roll.cost, open_loop.objective
                ),
            );

            let rows: Vec<Vec<f64>> = roll
                .samples
                .iter()
                .map(|s| {
                    vec![
                        s.t,
                        spinbal_core::torus::canonical(s.x[0]),
                        spinbal_core::torus::canonical(s.x[1]),
                        s.dist,
                    ]
                })
                .collect();
            artifacts::write_table_csv(
                &self.out_path(&format!("rollout_head{index}.csv")),
                "t,alpha,gamma,dist",
                &rows,
            )?;
            sections.push(RolloutHeadSection {
                steps: roll.samples.len(),
                cost: roll.cost,
                end_dist: end.dist,
                cell,
                open_loop_objective: open_loop.objective,
            });
        }
        let [a, b]: [RolloutHeadSection; 2] = sections.try_into().ok().unwrap();
        self.rollout = Some([a, b]);
        Ok(())
    }

    /// Runs the requested stage(s), writes the summary, and returns
    /// whether every verdict passed.
    pub fn execute(&mut self, cmd: Subcommand, command_name: &str) -> Result<bool> {
        std::fs::create_dir_all(&self.cfg.out_dir)?;
        artifacts::write_json(&self.out_path("config_echo.json"), &self.cfg)?;
        match cmd {
            Subcommand::Steady => self.run_steady()?,
            Subcommand::Solve => self.run_solve()?,
            Subcommand::Simulate => self.run_simulate()?,
            Subcommand::Analyze => self.run_analyze()?,
            Subcommand::ValueIter => self.run_value_iter()?,
            Subcommand::Rollout => self.run_rollout()?,
            Subcommand::All => {
                self.run_steady()?;
                self.run_solve()?;
                self.run_simulate()?;
                self.run_analyze()?;
                self.run_value_iter()?;
                self.run_rollout()?;
            }
        }
        let pass = self.verdicts.iter().all(|v| v.pass);
        let steady = self.steady.take();
        let solve = self.solve.take();
        let simulate = self.simulate.take();
        let analyze = self.analyze.take();
        let value_iter = self.value_iter.take();
        let rollout = self.rollout.take();
        let summary = Summary {
            format_version: FORMAT_VERSION,
            command: command_name,
            seed: self.cfg.seed,
            config: &self.cfg,
            steady,
            solve,
            simulate,
            analyze,
            value_iter,
            rollout,
            verdicts: &self.verdicts,
            pass,
        };
        artifacts::write_json(&Path::new(&self.cfg.out_dir).join("summary.json"), &summary)?;
        Ok(pass)
    }
}
