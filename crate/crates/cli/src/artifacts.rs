//! Artifact writers. Every file carries a format-version marker; CSV
//! artifacts start with a `# format_version` comment line, JSON ones
//! carry a `format_version` field.

use anyhow::{Context, Result};
use serde::Serialize;
use spinbal_core::Trajectory;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

pub const FORMAT_VERSION: u32 = 1;

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    );
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    Ok(())
}

/// The trajectory table: one row per time node, controls repeated on
/// the final node.
pub fn write_trajectory_csv(path: &Path, traj: &Trajectory) -> Result<()> {
    let mut w = BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    );
    writeln!(w, "# format_version {FORMAT_VERSION}")?;
    writeln!(
        w,
        "t,alpha1,gamma1,alpha2,gamma2,psi1,psi2,psi3,psi4,G,E,dist"
    )?;
    let nt = traj.horizon.nt;
    for (k, t) in traj.times().enumerate() {
        let s = &traj.states[k];
        let psi = &traj.controls[k.min(nt - 2)];
        writeln!(
            w,
            "{t},{},{},{},{},{},{},{},{},{},{},{}",
            s.alpha1,
            s.gamma1,
            s.alpha2,
            s.gamma2,
            psi[0],
            psi[1],
            psi[2],
            psi[3],
            traj.g[k],
            traj.energy[k],
            traj.dist[k]
        )?;
    }
    Ok(())
}

/// Generic small table with a caller-provided header.
pub fn write_table_csv(path: &Path, header: &str, rows: &[Vec<f64>]) -> Result<()> {
    let mut w = BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    );
    writeln!(w, "# format_version {FORMAT_VERSION}")?;
    writeln!(w, "{header}")?;
    for row in rows {
        let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn write_value_table(path: &Path, table: &spinbal_core::ValueTable) -> Result<()> {
    let mut w = BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    );
    table.save(&mut w)?;
    Ok(())
}

pub fn write_value_table_csv(path: &Path, table: &spinbal_core::ValueTable) -> Result<()> {
    let mut w = BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    );
    writeln!(w, "# format_version {FORMAT_VERSION}")?;
    table.write_csv(&mut w)?;
    Ok(())
}
