//! Record files: JSON metadata, one raw little-endian `f64` matrix per field
//! (row = frame, column = cell), optional CSV, and a PGM heatmap of `u`.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{PdeError, SimConfig, SolverStats, SpaceTimeRecord, State};

pub const SCHEMA_VERSION: u32 = 1;
const FIELDS: [&str; 3] = ["u", "w", "z"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordMeta {
    pub schema_version: u32,
    pub config: SimConfig,
    pub solver_stats: SolverStats,
    pub times: Vec<f64>,
    pub n_cells: usize,
    pub n_frames: usize,
    /// Field name to matrix file name, relative to the metadata file.
    pub files: Vec<(String, String)>,
}

fn field(s: &State, k: usize) -> &[f64] {
    match k {
        0 => &s.u,
        1 => &s.w,
        _ => &s.z,
    }
}

/// Writes `<stem>.json` and `<stem>.<field>.f64` into `dir`.
pub fn save_record(record: &SpaceTimeRecord, dir: &Path, stem: &str) -> Result<(), PdeError> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    for (k, name) in FIELDS.iter().enumerate() {
        let file = format!("{stem}.{name}.f64");
        let mut out = BufWriter::new(fs::File::create(dir.join(&file))?);
        for f in &record.frames {
            for v in field(f, k) {
                out.write_all(&v.to_le_bytes())?;
            }
        }
        out.flush()?;
        files.push((name.to_string(), file));
    }
    let meta = RecordMeta {
        schema_version: SCHEMA_VERSION,
        config: record.config.clone(),
        solver_stats: record.solver_stats,
        times: record.times.clone(),
        n_cells: record.config.grid.n,
        n_frames: record.frames.len(),
        files,
    };
    fs::write(dir.join(format!("{stem}.json")), serde_json::to_string_pretty(&meta)?)?;
    Ok(())
}

pub fn load_record(dir: &Path, stem: &str) -> Result<SpaceTimeRecord, PdeError> {
    let meta: RecordMeta = serde_json::from_str(&fs::read_to_string(dir.join(format!("{stem}.json")))?)?;
    let (nf, nc) = (meta.n_frames, meta.n_cells);
    let mut frames = vec![State { u: Vec::new(), w: Vec::new(), z: Vec::new() }; nf];
    for (name, file) in &meta.files {
        let bytes = fs::read(dir.join(file))?;
        if bytes.len() != nf * nc * 8 {
            return Err(PdeError::Io(io::Error::new(io::ErrorKind::InvalidData, format!("{file}: wrong size"))));
        }
        let values: Vec<f64> = bytes.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())).collect();
        for (f, row) in frames.iter_mut().zip(values.chunks_exact(nc)) {
            match name.as_str() {
                "u" => f.u = row.to_vec(),
                "w" => f.w = row.to_vec(),
                _ => f.z = row.to_vec(),
            }
        }
    }
    Ok(SpaceTimeRecord { times: meta.times, frames, config: meta.config, solver_stats: meta.solver_stats })
}

/// One row per frame and cell: `t,x,u,w,z`.
pub fn write_record_csv(record: &SpaceTimeRecord, out: impl Write) -> io::Result<()> {
    let mut out = BufWriter::new(out);
    writeln!(out, "t,x,u,w,z")?;
    let g = record.grid();
    for (t, f) in record.times.iter().zip(&record.frames) {
        for i in 0..g.n {
            writeln!(out, "{t:.16e},{:.16e},{:.16e},{:.16e},{:.16e}", g.x(i), f.u[i], f.w[i], f.z[i])?;
        }
    }
    out.flush()
}

/// Binary PGM (P5) of `u`: one row per frame, one column per cell, grey
/// levels linear between the recorded minimum and maximum.
pub fn write_pgm(record: &SpaceTimeRecord, out: impl Write) -> io::Result<()> {
    let mut out = BufWriter::new(out);
    let n = record.grid().n;
    let (lo, hi) = record
        .frames
        .iter()
        .flat_map(|f| f.u.iter())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let span = hi - lo;
    write!(out, "P5\n{} {}\n255\n", n, record.frames.len())?;
    for f in &record.frames {
        let row: Vec<u8> = f
            .u
            .iter()
            .map(|&v| if span > 0.0 { (255.0 * (v - lo) / span).round() as u8 } else { 0 })
            .collect();
        out.write_all(&row)?;
    }
    out.flush()
}
