//! Singular orbits as ordered slow arcs and fast jumps, with continuity
//! checks and CSV/JSON export.

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::fronts::Direction;
use crate::unfolding::{eval_gwcusp, UnfoldingParams};

pub const ENDPOINT_TOL: f64 = 1e-6;
pub const MANIFOLD_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentKind {
    SlowArc,
    FastJump,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub kind: SegmentKind,
    pub branch: String,
    /// `(u, v_u, w, v_w, z, v_z)`; coordinates a flow does not use are zero.
    pub samples: Vec<[f64; 6]>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpEvent {
    pub direction: Direction,
    pub w: f64,
    pub z: f64,
    pub base_u: f64,
    pub land_u: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularOrbit {
    pub segments: Vec<Segment>,
    pub spike_count: usize,
    pub closed: bool,
    pub symmetric: bool,
    pub c_star: Option<f64>,
    pub z_star: Option<f64>,
    pub jumps: Vec<JumpEvent>,
    pub diagnostics: BTreeMap<String, f64>,
}

/// Worst-case continuity and manifold residuals of an orbit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitCheck {
    pub max_endpoint_gap: f64,
    pub max_manifold_residual: f64,
}

impl OrbitCheck {
    pub fn ok(&self) -> bool {
        self.max_endpoint_gap <= ENDPOINT_TOL && self.max_manifold_residual <= MANIFOLD_TOL
    }
}

impl SingularOrbit {
    pub fn first(&self) -> Option<[f64; 6]> {
        self.segments.first().and_then(|s| s.samples.first().copied())
    }

    pub fn last(&self) -> Option<[f64; 6]> {
        self.segments.last().and_then(|s| s.samples.last().copied())
    }

    pub fn check(&self, p: &UnfoldingParams) -> OrbitCheck {
        let mut gap = 0.0f64;
        for pair in self.segments.windows(2) {
            let (a, b) = (pair[0].samples.last(), pair[1].samples.first());
            if let (Some(a), Some(b)) = (a, b) {
                for k in 0..6 {
                    gap = gap.max((a[k] - b[k]).abs());
                }
            }
        }
        let mut res = 0.0f64;
        for seg in self.segments.iter().filter(|s| s.kind == SegmentKind::SlowArc) {
            for s in &seg.samples {
                let q = UnfoldingParams { lambda: p.lambda + s[2], ..p.with_z(s[4]) };
                let scale = 1.0 + s[0].abs().powi(3);
                res = res.max(eval_gwcusp(s[0], &q).abs() / scale);
            }
        }
        OrbitCheck { max_endpoint_gap: gap, max_manifold_residual: res }
    }

    /// One row per sample: `segment_index,kind,u,v_u,w,v_w,z,v_z`.
    pub fn write_csv(&self, mut out: impl Write) -> io::Result<()> {
        writeln!(out, "segment_index,kind,u,v_u,w,v_w,z,v_z")?;
        for (i, seg) in self.segments.iter().enumerate() {
            let kind = match seg.kind {
                SegmentKind::SlowArc => "slow_arc",
                SegmentKind::FastJump => "fast_jump",
            };
            for s in &seg.samples {
                write!(out, "{i},{kind}")?;
                for v in s {
                    write!(out, ",{v:.16e}")?;
                }
                writeln!(out)?;
            }
        }
        Ok(())
    }

    /// Sidecar with everything except the samples.
    pub fn sidecar(&self) -> serde_json::Value {
        serde_json::json!({
            "spike_count": self.spike_count,
            "closed": self.closed,
            "symmetric": self.symmetric,
            "c_star": self.c_star,
            "z_star": self.z_star,
            "segments": self.segments.len(),
            "jumps": self.jumps,
            "diagnostics": self.diagnostics,
        })
    }

    /// Writes `<stem>.csv` and `<stem>.json` into `dir`.
    pub fn save(&self, dir: &Path, stem: &str) -> io::Result<()> {
        let csv = std::fs::File::create(dir.join(format!("{stem}.csv")))?;
        self.write_csv(io::BufWriter::new(csv))?;
        let json = serde_json::to_string_pretty(&self.sidecar()).map_err(io::Error::other)?;
        std::fs::write(dir.join(format!("{stem}.json")), json)
    }
}
