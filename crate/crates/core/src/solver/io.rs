//! Snapshot and history files.
//!
//! A snapshot is a raw little-endian `f64` array (`<name>.bin`, row-major,
//! `x₁` fastest) next to a JSON sidecar (`<name>.json`) with the grid and time.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::Trajectory;
use crate::error::{Error, Result};
use crate::spectral::{Field, Grid};

/// Sidecar contents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub dim: usize,
    pub n: usize,
    pub period_scale: f64,
    pub t: f64,
    pub config_hash: String,
}

fn sidecar_path(bin: &Path) -> PathBuf {
    bin.with_extension("json")
}

/// Write `field` to `path` (extension forced to `.bin`) plus its sidecar.
pub fn write_snapshot(field: &Field, t: f64, config_hash: &str, path: &Path) -> Result<PathBuf> {
    let bin = path.with_extension("bin");
    if let Some(dir) = bin.parent() {
        fs::create_dir_all(dir)?;
    }
    let bytes: Vec<u8> = field
        .values()
        .iter()
        .flat_map(|v| v.to_le_bytes())
        .collect();
    fs::write(&bin, bytes)?;
    let g = field.grid();
    let meta = SnapshotMeta {
        dim: g.dim(),
        n: g.n(),
        period_scale: g.period_scale(),
        t,
        config_hash: config_hash.to_string(),
    };
    let json = serde_json::to_string_pretty(&meta).map_err(|e| Error::Parse {
        context: "snapshot sidecar".into(),
        message: e.to_string(),
    })?;
    fs::write(sidecar_path(&bin), json + "\n")?;
    Ok(bin)
}

/// Read a snapshot written by [`write_snapshot`].
pub fn read_snapshot(path: &Path) -> Result<(Field, SnapshotMeta)> {
    let bin = path.with_extension("bin");
    let side = sidecar_path(&bin);
    let text = fs::read_to_string(&side)?;
    let meta: SnapshotMeta = serde_json::from_str(&text).map_err(|e| Error::Parse {
        context: side.display().to_string(),
        message: e.to_string(),
    })?;
    let grid = Grid::new(meta.dim, meta.n, meta.period_scale)?;
    let bytes = fs::read(&bin)?;
    if bytes.len() != 8 * grid.len() {
        return Err(Error::LatticeMismatch(format!(
            "{} holds {} bytes, sidecar implies {}",
            bin.display(),
            bytes.len(),
            8 * grid.len()
        )));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    Ok((Field::new(grid, values)?, meta))
}

/// Per-block history: one row per `(t, j)`.
pub fn block_history_csv(traj: &Trajectory) -> String {
    let mut out = String::from("t,j,block_sup");
    for p in &traj.lp_orders {
        let _ = write!(out, ",block_l{}", order_label(*p));
    }
    out.push_str(",config_hash\n");
    for (i, &t) in traj.times.iter().enumerate() {
        for (b, sup) in traj.block_sup[i].iter().enumerate() {
            let _ = write!(out, "{t:.12e},{},{sup:.12e}", b as i32 - 1);
            for o in 0..traj.lp_orders.len() {
                let _ = write!(out, ",{:.12e}", traj.block_lp[o][i][b]);
            }
            let _ = writeln!(out, ",{}", traj.config_hash);
        }
    }
    out
}

/// Scalar history: `t, sup, mean, L^p...`.
pub fn scalar_history_csv(traj: &Trajectory) -> String {
    let mut out = String::from("t,sup_norm,mean");
    for p in &traj.lp_orders {
        let _ = write!(out, ",l{}_norm", order_label(*p));
    }
    out.push_str(",config_hash\n");
    for (i, &t) in traj.times.iter().enumerate() {
        let _ = write!(
            out,
            "{t:.12e},{:.12e},{:.12e}",
            traj.sup_norms[i], traj.means[i]
        );
        for o in 0..traj.lp_orders.len() {
            let _ = write!(out, ",{:.12e}", traj.lp_norms[o][i]);
        }
        let _ = writeln!(out, ",{}", traj.config_hash);
    }
    out
}

fn order_label(p: f64) -> String {
    if p.is_infinite() {
        "inf".into()
    } else if p.fract() == 0.0 {
        format!("{}", p as i64)
    } else {
        format!("{p}")
    }
}

/// Write every snapshot and both histories; returns the written paths.
pub fn write_trajectory(traj: &Trajectory, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for (i, s) in traj.snapshots.iter().enumerate() {
        let bin = write_snapshot(
            &s.field,
            s.t,
            &traj.config_hash,
            &dir.join(format!("snapshot_{i:03}")),
        )?;
        written.push(sidecar_path(&bin));
        written.push(bin);
    }
    let blocks = dir.join("block_history.csv");
    fs::write(&blocks, block_history_csv(traj))?;
    written.push(blocks);
    let scalars = dir.join("scalar_history.csv");
    fs::write(&scalars, scalar_history_csv(traj))?;
    written.push(scalars);
    Ok(written)
}
