//! Singular homoclinic orbit of the traveling burst: an up-jump from rest,
//! then alternating slow arcs and jumps on the right lobe while `z` drifts
//! upward, until the up-jump loci merge and the lower branch carries the
//! orbit back to rest.

use std::collections::BTreeMap;

use super::fronts::{delta_alpha_star, down_jump_level, find_cstar, front_profile, up_jump_level, Direction};
use super::lemmas::medium_params;
use super::orbit::{JumpEvent, Segment, SegmentKind, SingularOrbit};
use super::reduced::{branch_u, reduced_flow, Branch, FlowKind};
use super::SkeletonError;
use crate::numerics::Event;
use crate::unfolding::UnfoldingParams;

pub const GRAZING_TOL: f64 = 1e-6;
const PROFILE_SAMPLES: usize = 64;
const MAX_JUMPS: usize = 20_000;

fn jump_segment(base: f64, land: f64, w: f64, z: f64) -> Segment {
    let samples = front_profile(base, land, PROFILE_SAMPLES)
        .into_iter()
        .map(|(u, v)| [u, v, w, 0.0, z, 0.0])
        .collect();
    Segment { kind: SegmentKind::FastJump, branch: String::new(), samples }
}

fn arc_segment(branch: &str, samples: Vec<[f64; 6]>) -> Segment {
    Segment { kind: SegmentKind::SlowArc, branch: branch.into(), samples }
}

/// Build the traveling burst skeleton for the full-system parameters `p`
/// (`γ = 0`) and ultra-slow ratio `eps_us_tilde`.
pub fn build_traveling_burst_skeleton(p: &UnfoldingParams, eps_us_tilde: f64) -> Result<SingularOrbit, SkeletonError> {
    if p.gamma != 0.0 {
        return Err(SkeletonError::Precondition("the jump loci are closed-form only for gamma = 0".into()));
    }
    if !(eps_us_tilde > 0.0) {
        return Err(SkeletonError::Precondition("eps_us_tilde must be positive".into()));
    }
    let (medium, u_rest) = medium_params(p);
    let c = find_cstar(&medium)?;
    if !(c > 0.0) {
        return Err(SkeletonError::Precondition(format!("c* = {c} is not positive")));
    }
    let z_star = delta_alpha_star(p, u_rest);
    let k_up = up_jump_level(p, u_rest);
    let k_down = down_jump_level(p, u_rest);
    let (lambda, alpha) = (p.lambda, p.alpha);
    let level = move |y: &[f64; 4]| (lambda + y[0]).powi(2) + alpha + y[2];
    let ur = u_rest;
    let near_rest = move |_t: f64, y: &[f64; 4]| (y[0] - ur).abs().max((y[2] - ur).abs()) - 1e-2 * GRAZING_TOL;
    let flow = FlowKind::Traveling3 { c, eps: eps_us_tilde };
    let t_max = 1e3 * c / eps_us_tilde.min(1.0);

    let mut segments = Vec::new();
    let mut jumps = Vec::new();
    let mut spikes = 0usize;
    let mut state = [u_rest, 0.0, u_rest, 0.0];
    let mut returned = false;

    let up = |state: &[f64; 4], segments: &mut Vec<Segment>, jumps: &mut Vec<JumpEvent>| {
        let (w, z) = (state[0], state[2]);
        let base = branch_u(p, Branch::Lower, w, z)?;
        let land = branch_u(p, Branch::Upper, w, z)?;
        segments.push(jump_segment(base, land, w, z));
        jumps.push(JumpEvent { direction: Direction::Up, w, z, base_u: base, land_u: land });
        Ok::<_, SkeletonError>(())
    };

    up(&state, &mut segments, &mut jumps)?;
    spikes += 1;
    loop {
        if jumps.len() > MAX_JUMPS {
            return Err(SkeletonError::Integration("jump budget exhausted".into()));
        }
        let stops = [Event::new(1, move |_t, y: &[f64; 4]| level(y) - k_down)];
        let arc = reduced_flow(p, flow, Branch::Upper, state, t_max, &stops)?;
        if arc.stop.is_none() {
            return Err(SkeletonError::Integration("upper arc never reached the down-jump locus".into()));
        }
        segments.push(arc_segment("up", arc.samples));
        state = arc.end;
        let (w, z) = (state[0], state[2]);
        let base = branch_u(p, Branch::Upper, w, z)?;
        let land = branch_u(p, Branch::Lower, w, z)?;
        segments.push(jump_segment(base, land, w, z));
        jumps.push(JumpEvent { direction: Direction::Down, w, z, base_u: base, land_u: land });

        let stops = [
            Event::new(-1, move |_t, y: &[f64; 4]| level(y) - k_up),
            Event::new(-1, move |_t, y: &[f64; 4]| y[0] + lambda),
            Event::new(-1, near_rest),
        ];
        let arc = reduced_flow(p, flow, Branch::Lower, state, t_max, &stops)?;
        state = arc.end;
        match arc.stop {
            Some(0) => {
                segments.push(arc_segment("down+", arc.samples));
                up(&state, &mut segments, &mut jumps)?;
                spikes += 1;
            }
            Some(2) => {
                segments.push(arc_segment("down+", arc.samples));
                returned = true;
                break;
            }
            Some(_) => {
                let gap = (state[2] - z_star).abs();
                if gap < GRAZING_TOL {
                    return Err(SkeletonError::NonGenericGrazing { gap });
                }
                segments.push(arc_segment("down", arc.samples));
                break;
            }
            None => return Err(SkeletonError::Integration("lower arc stalled".into())),
        }
    }

    // Relaxation to rest with jumps suppressed.
    let axis_z = if returned { f64::NAN } else { state[2] };
    let mut crossings = 0usize;
    if !returned {
        let stops = [Event::new(-1, near_rest)];
        let arc = reduced_flow(p, flow, Branch::Lower, state, 100.0 * t_max, &stops)?;
        if arc.stop.is_none() {
            return Err(SkeletonError::Integration("relaxation did not reach rest".into()));
        }
        for s in arc.samples.windows(2) {
            let a = (lambda + s[0][2]).powi(2) + alpha + s[0][4] - k_up;
            let b = (lambda + s[1][2]).powi(2) + alpha + s[1][4] - k_up;
            if (a > 0.0) != (b > 0.0) {
                crossings += 1;
            }
        }
        segments.push(arc_segment("down", arc.samples));
    }

    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("u_rest".into(), u_rest);
    diagnostics.insert("eps_us_tilde".into(), eps_us_tilde);
    diagnostics.insert("relaxation_locus_crossings".into(), crossings as f64);
    if axis_z.is_finite() {
        diagnostics.insert("axis_crossing_z".into(), axis_z);
    }
    Ok(SingularOrbit {
        segments,
        spike_count: spikes,
        closed: true,
        symmetric: false,
        c_star: Some(c),
        z_star: Some(z_star),
        jumps,
        diagnostics,
    })
}
