//! Slow flows constrained to a branch of the critical manifold. The state is
//! always `(w, v_w, z, v_z)`; first-order flows leave the velocities at zero.

use serde::{Deserialize, Serialize};

use super::SkeletonError;
use crate::numerics::{Dopri, Event, OdeOptions, Outcome};
use crate::unfolding::{fixed_points, slice_pq, solve_cubic, UnfoldingParams};

/// Distance in `u` from a branch point to the fold at which it terminates.
pub const FOLD_PROXIMITY: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Lower,
    Upper,
    /// `w = u` with `u` the lowest root of the homogeneous rest equation.
    QuasiSteady,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum FlowKind {
    /// `w' = (u − w)/c`.
    Traveling { c: f64 },
    /// `w' = v_w`, `v_w' = w − u`.
    Standing,
    /// `w' = (u − w)/c`, `z' = ε(u − z)/c`.
    Traveling3 { c: f64, eps: f64 },
    /// `z' = v_z`, `v_z' = z − u − z̄` on the quasi-steady branch.
    StandingA { z_bar: f64 },
    /// `w' = v_w`, `v_w' = w − u`, `z' = δ v_z`, `v_z' = δ(z − u − z̄)`.
    StandingB { delta: f64, z_bar: f64 },
}

/// `u` on the named branch of the slice at `(w, z)`.
pub fn branch_u(p: &UnfoldingParams, branch: Branch, w: f64, z: f64) -> Result<f64, SkeletonError> {
    if branch == Branch::QuasiSteady {
        let fp = fixed_points(p, z);
        return Ok(fp.u_rest());
    }
    let s = solve_cubic(w, z, p);
    let (pp, _) = slice_pq(p, w, z);
    let knee = if pp > 0.0 { (pp / 3.0).sqrt() } else { 0.0 };
    let u = match (branch, s.three()) {
        (Branch::Lower, Some((lo, _, _))) => lo,
        (Branch::Upper, Some((_, _, hi))) => hi,
        _ => {
            let r = if branch == Branch::Lower { s.roots[0] } else { *s.roots.last().unwrap() };
            let on_branch = pp <= 0.0
                || match branch {
                    Branch::Lower => r < -knee,
                    _ => r > knee,
                };
            if !on_branch {
                return Err(SkeletonError::FoldCollision { w, z });
            }
            r
        }
    };
    if pp > 0.0 {
        let fold_u = if branch == Branch::Lower { -knee } else { knee };
        if (u - fold_u).abs() < FOLD_PROXIMITY {
            return Err(SkeletonError::FoldCollision { w, z });
        }
    }
    Ok(u)
}

fn rhs(p: &UnfoldingParams, kind: FlowKind, branch: Branch, y: &[f64; 4]) -> Result<[f64; 4], SkeletonError> {
    let [w, vw, z, vz] = *y;
    let u = branch_u(p, branch, w, z)?;
    Ok(match kind {
        FlowKind::Traveling { c } => [(u - w) / c, 0.0, 0.0, 0.0],
        FlowKind::Standing => [vw, w - u, 0.0, 0.0],
        FlowKind::Traveling3 { c, eps } => [(u - w) / c, 0.0, eps * (u - z) / c, 0.0],
        FlowKind::StandingA { z_bar } => [0.0, 0.0, vz, z - u - z_bar],
        FlowKind::StandingB { delta, z_bar } => [vw, w - u, delta * vz, delta * (z - u - z_bar)],
    })
}

/// Sampled slow arc. Samples are `(u, v_u, w, v_w, z, v_z)`.
#[derive(Clone, Debug)]
pub struct SlowArc {
    pub samples: Vec<[f64; 6]>,
    pub end: [f64; 4],
    pub t_end: f64,
    /// Index of the stop event that fired, `None` if `t_max` was reached.
    pub stop: Option<usize>,
}

pub fn sample(p: &UnfoldingParams, branch: Branch, y: &[f64; 4]) -> Result<[f64; 6], SkeletonError> {
    let [w, vw, z, vz] = *y;
    let u = branch_u(p, branch, w, z)?;
    let w = if branch == Branch::QuasiSteady { u } else { w };
    Ok([u, 0.0, w, vw, z, vz])
}

/// Integrate a reduced flow on `branch` from `start` until one of `stops`
/// fires or `t_max` is reached.
pub fn reduced_flow(
    p: &UnfoldingParams,
    kind: FlowKind,
    branch: Branch,
    start: [f64; 4],
    t_max: f64,
    stops: &[Event<'_, 4>],
) -> Result<SlowArc, SkeletonError> {
    branch_u(p, branch, start[0], start[2])?;
    let opts = OdeOptions { rtol: 1e-11, atol: 1e-13, h0: 1e-4, h_min: 1e-13, ..OdeOptions::default() };
    let mut ode = Dopri::new(|_t, y: &[f64; 4]| rhs(p, kind, branch, y), opts);
    let mut samples = Vec::new();
    let mut bad = None;
    let out = ode.integrate(0.0, start, t_max, stops, |_t, y| match sample(p, branch, y) {
        Ok(s) => samples.push(s),
        Err(e) => bad = Some(e),
    });
    if let Some(e) = bad {
        return Err(e);
    }
    let out = match out {
        Ok(o) => o,
        Err(crate::numerics::OdeError::Rhs(e)) => return Err(e),
        Err(e) => return Err(SkeletonError::Integration(e.to_string())),
    };
    let (t_end, end, stop) = match out {
        Outcome::Event { index, t, y } => (t, y, Some(index)),
        Outcome::Reached { t, y } => (t, y, None),
    };
    // The located event state replaces the last accepted step.
    let last = sample(p, branch, &end)?;
    if samples.last() != Some(&last) {
        samples.push(last);
    }
    Ok(SlowArc { samples, end, t_end, stop })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> UnfoldingParams {
        UnfoldingParams::new(1.0 / 3.0 - 0.02, -2.0 / 27.0 + 0.47, 1.0 / 3.0, 0.0)
    }

    #[test]
    fn traveling_upper_branch_moves_right() {
        let p = p();
        let z = -0.473;
        let w0 = -0.47;
        let arc = reduced_flow(&p, FlowKind::Traveling { c: 0.36 }, Branch::Upper, [w0, 0.0, z, 0.0], 0.1, &[]).unwrap();
        assert!(arc.samples.windows(2).all(|s| s[1][2] > s[0][2]));
        for s in &arc.samples {
            let q = p.with_z(s[4]);
            let g = crate::unfolding::eval_gwcusp(s[0], &UnfoldingParams { lambda: q.lambda + s[2], ..q });
            assert!(g.abs() <= 1e-8);
        }
        // Left alone, the arc runs into the right fold of the upper branch.
        let long = reduced_flow(&p, FlowKind::Traveling { c: 0.36 }, Branch::Upper, [w0, 0.0, z, 0.0], 5.0, &[]);
        assert!(matches!(long, Err(SkeletonError::FoldCollision { .. })));
    }

    #[test]
    fn standing_from_rest_accelerates_right() {
        // Medium parameters with a single rest state on the lower branch.
        let p = UnfoldingParams::new(0.55, -0.02, 1.0 / 3.0, 0.0);
        let w_rest = fixed_points(&p, 0.0).u_rest();
        let y = [w_rest + 1e-3, 0.0, 0.0, 0.0];
        let d = rhs(&p, FlowKind::Standing, Branch::Lower, &y).unwrap();
        assert!(d[1] > 0.0);
    }

    #[test]
    fn upper_branch_ends_at_fold() {
        let p = UnfoldingParams::new(0.5, -0.02, 1.0 / 3.0, 0.0);
        assert!(branch_u(&p, Branch::Upper, 2.0, 0.0).is_err());
        assert!(branch_u(&p, Branch::Lower, 2.0, 0.0).is_ok());
    }
}
