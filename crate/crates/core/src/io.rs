//! Trajectory dumps.
//!
//! One file per snapshot plus `index.txt`. The binary layout is little-endian:
//! `nx: u64, nt: u64, n: u64, t: f64`, then `theta[nv]`, `phi[nv]`,
//! `u[2 nv]` as `f64`. The text layout has the same header on the first line
//! (`nx nt n t`) followed by one value per line in the same order.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::stepper::{Snapshot, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DumpFormat {
    Binary,
    Text,
}

/// Header and fields read back from one snapshot file.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotRecord {
    pub nx: usize,
    pub nt: usize,
    pub n: usize,
    pub t: f64,
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    pub u: Vec<f64>,
}

fn snapshot_name(n: usize, format: DumpFormat) -> String {
    match format {
        DumpFormat::Binary => format!("snap_{n:06}.bin"),
        DumpFormat::Text => format!("snap_{n:06}.txt"),
    }
}

/// Writes every snapshot of `traj` into `dir` and returns the index path.
pub fn write_trajectory(traj: &Trajectory, dir: &Path, format: DumpFormat) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let index_path = dir.join("index.txt");
    let mut index = BufWriter::new(File::create(&index_path)?);
    writeln!(index, "# nx nt format")?;
    writeln!(
        index,
        "{} {} {}",
        traj.nx(),
        traj.nt,
        match format {
            DumpFormat::Binary => "f64le",
            DumpFormat::Text => "text",
        }
    )?;
    writeln!(index, "# n t file")?;
    for s in &traj.snapshots {
        let name = snapshot_name(s.n, format);
        write_snapshot(&dir.join(&name), traj.nx(), traj.nt, s, format)?;
        writeln!(index, "{} {:.17e} {}", s.n, s.t, name)?;
    }
    index.flush()?;
    Ok(index_path)
}

pub fn write_snapshot(path: &Path, nx: usize, nt: usize, s: &Snapshot, format: DumpFormat) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    match format {
        DumpFormat::Binary => {
            for v in [nx as u64, nt as u64, s.n as u64] {
                w.write_all(&v.to_le_bytes())?;
            }
            w.write_all(&s.t.to_le_bytes())?;
            for v in s.theta.iter().chain(&s.phi).chain(&s.u) {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        DumpFormat::Text => {
            writeln!(w, "{} {} {} {:.17e}", nx, nt, s.n, s.t)?;
            for v in s.theta.iter().chain(&s.phi).chain(&s.u) {
                writeln!(w, "{v:.17e}")?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn vertex_count(nx: usize) -> usize {
    (nx + 1) * (nx + 1) + nx * nx
}

fn split_fields(nx: usize, values: Vec<f64>) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let nv = vertex_count(nx);
    if values.len() != 4 * nv {
        return Err(Error::InvalidArgument(format!(
            "snapshot holds {} values, expected {}",
            values.len(),
            4 * nv
        )));
    }
    let mut values = values;
    let u = values.split_off(2 * nv);
    let phi = values.split_off(nv);
    Ok((values, phi, u))
}

pub fn read_snapshot(path: &Path) -> Result<SnapshotRecord> {
    let is_text = path.extension().is_some_and(|e| e == "txt");
    if is_text {
        let reader = BufReader::new(File::open(path)?);
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidArgument("empty snapshot".into()))??;
        let parts: Vec<&str> = header.split_whitespace().collect();
        let bad = || Error::InvalidArgument(format!("malformed snapshot header '{header}'"));
        if parts.len() != 4 {
            return Err(bad());
        }
        let nx: usize = parts[0].parse().map_err(|_| bad())?;
        let nt: usize = parts[1].parse().map_err(|_| bad())?;
        let n: usize = parts[2].parse().map_err(|_| bad())?;
        let t: f64 = parts[3].parse().map_err(|_| bad())?;
        let mut values = Vec::new();
        for line in lines {
            let line = line?;
            values.push(
                line.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidArgument(format!("bad value '{line}'")))?,
            );
        }
        let (theta, phi, u) = split_fields(nx, values)?;
        Ok(SnapshotRecord {
            nx,
            nt,
            n,
            t,
            theta,
            phi,
            u,
        })
    } else {
        let mut bytes = Vec::new();
        File::open(path)?.read_to_end(&mut bytes)?;
        if bytes.len() < 32 || bytes.len() % 8 != 0 {
            return Err(Error::InvalidArgument("truncated binary snapshot".into()));
        }
        let word = |i: usize| -> [u8; 8] { bytes[8 * i..8 * i + 8].try_into().unwrap() };
        let nx = u64::from_le_bytes(word(0)) as usize;
        let nt = u64::from_le_bytes(word(1)) as usize;
        let n = u64::from_le_bytes(word(2)) as usize;
        let t = f64::from_le_bytes(word(3));
        let values = (4..bytes.len() / 8).map(|i| f64::from_le_bytes(word(i))).collect();
        let (theta, phi, u) = split_fields(nx, values)?;
        Ok(SnapshotRecord {
            nx,
            nt,
            n,
            t,
            theta,
            phi,
            u,
        })
    }
}
