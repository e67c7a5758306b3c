//! Run configuration: strict-schema JSON with defaults for everything
//! but the rotor and the initial angles.

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use spinbal_core::RotorConfig;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub dt_max: f64,
    pub tol: f64,
    pub max_iters: usize,
    /// Practical horizon cap; the certified bound is very loose.
    pub t_cap: f64,
    pub t_min: f64,
    /// Target terminal distance to the steady set.
    pub eps: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            dt_max: 0.01,
            tol: 1e-8,
            max_iters: 20_000,
            t_cap: 30.0,
            t_min: 1.0,
            eps: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    /// Torus grid nodes per dimension for constant estimation.
    pub grid: usize,
    /// Tail fit window as fractions of the horizon.
    pub fit_window: [f64; 2],
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self {
            grid: 256,
            fit_window: [
                spinbal_core::DEFAULT_FIT_WINDOW.0,
                spinbal_core::DEFAULT_FIT_WINDOW.1,
            ],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RlSection {
    /// Per-head table resolution.
    pub dims: [usize; 2],
    pub n_angles: usize,
    pub n_speeds: usize,
    pub cfl: f64,
    pub sweep_tol: f64,
    pub max_sweeps: usize,
    /// Probe count for the table-vs-transcription comparison.
    pub probes: usize,
}

impl Default for RlSection {
    fn default() -> Self {
        let d = spinbal_core::ViOptions::default();
        // A larger DPP step (cfl 6) with a fine control lattice keeps
        // the semi-Lagrangian bias at 128^2 under the probe tolerance;
        // the interpolation error term scales like dx^2/delta.
        Self {
            dims: [128, 128],
            n_angles: 48,
            n_speeds: 24,
            cfl: 6.0,
            sweep_tol: d.sweep_tol,
            max_sweeps: d.max_sweeps,
            probes: 50,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub rotor: RotorConfig,
    /// Initial angles (alpha1, gamma1, alpha2, gamma2), radians.
    pub phi0: [f64; 4],
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
    #[serde(default)]
    pub rl: RlSection,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

impl RunConfig {
    /// The scenario all documented examples use: unit rotor, both heads
    /// strictly under the full-balance threshold.
    pub fn demo() -> Self {
        Self {
            rotor: RotorConfig {
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
            },
            phi0: [2.6, 0.6, 2.5, 1.5],
            solver: SolverSection::default(),
            analysis: AnalysisSection::default(),
            rl: RlSection::default(),
            seed: 0,
            out_dir: default_out_dir(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.rotor.validate()?;
        for (field, v) in [
            ("solver.dt_max", self.solver.dt_max),
            ("solver.tol", self.solver.tol),
            ("solver.t_cap", self.solver.t_cap),
            ("solver.t_min", self.solver.t_min),
            ("solver.eps", self.solver.eps),
            ("rl.cfl", self.rl.cfl),
            ("rl.sweep_tol", self.rl.sweep_tol),
        ] {
            if !(v > 0.0) {
                bail!("field {field} must be positive, got {v}");
            }
        }
        if self.analysis.grid < 16 {
            bail!("field analysis.grid must be at least 16");
        }
        if !(0.0 <= self.analysis.fit_window[0]
            && self.analysis.fit_window[0] < self.analysis.fit_window[1]
            && self.analysis.fit_window[1] <= 1.0)
        {
            bail!("field analysis.fit_window must satisfy 0 <= lo < hi <= 1");
        }
        if self.rl.dims.iter().any(|&d| d < 8) {
            bail!("field rl.dims entries must be at least 8");
        }
        if self.rl.n_angles < 4 || self.rl.n_speeds < 1 {
            bail!("field rl.n_angles/n_speeds too small for a usable control lattice");
        }
        if !self.phi0.iter().all(|v| v.is_finite()) {
            bail!("field phi0 must be finite");
        }
        Ok(())
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let cfg: RunConfig = serde_json::from_str(&text)
        .with_context(|| format!("parsing config {}", path.display()))?;
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let text = r#"{
            "rotor": {"m1":1.0,"m2":1.0,"r1":1.0,"r2":1.0,"a":1.0,"b":1.0,
                      "omega":1.0,"force":[2.2,0.0],"moment":[0.0,0.2],"beta":1.0},
            "phi0": [2.6, 0.6, 2.5, 1.5]
        }"#;
        let cfg: RunConfig = serde_json::from_str(text).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.rl.dims, [128, 128]);
        assert_eq!(cfg.solver.dt_max, 0.01);
        assert_eq!(cfg.out_dir, PathBuf::from("out"));
    }

    #[test]
    fn negative_mass_names_field() {
        let mut cfg = RunConfig::demo();
        cfg.rotor.m1 = -1.0;
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("m1"), "{err}");
    }

    #[test]
    fn unknown_key_rejected_by_name() {
        let text = r#"{
            "rotor": {"m1":1.0,"m2":1.0,"r1":1.0,"r2":1.0,"a":1.0,"b":1.0,
                      "omega":1.0,"force":[2.2,0.0],"moment":[0.0,0.2],"beta":1.0},
            "phi0": [2.6, 0.6, 2.5, 1.5],
            "omega_rpm": 3000
        }"#;
        let err = serde_json::from_str::<RunConfig>(text).unwrap_err().to_string();
        assert!(err.contains("omega_rpm"), "{err}");
    }
}
