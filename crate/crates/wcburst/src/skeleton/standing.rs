//! Singular homoclinic orbit of the standing burst, built as a symmetric
//! half orbit and its reflection.
//!
//! The half orbit leaves rest along the quasi-steady branch `w = u` under the
//! `(z, v_z)` saddle flow, peels off at `z_hom` along the unstable direction
//! of the `w` equation, then oscillates between the lower and upper branches
//! with jumps on the equal-area loci while `(z, v_z)` drifts. It ends at a
//! turning point of `w` where `v_z` vanishes too; `z_hom` is found by
//! shooting on that condition.

use std::collections::BTreeMap;

use super::fronts::{front_profile, Direction};
use super::orbit::{JumpEvent, Segment, SegmentKind, SingularOrbit};
use super::reduced::{branch_u, reduced_flow, sample, Branch, FlowKind};
use super::SkeletonError;
use crate::numerics::{bisect, simpson, Event};
use crate::unfolding::{fixed_points, homogeneous_roots, slice_pq, UnfoldingParams};

const GRID: usize = 48;
const MAX_TURNS: usize = 400;
const T_MAX: f64 = 2e4;
const PEEL: f64 = 1e-8;
const PROFILE_SAMPLES: usize = 64;
/// Residual of `v_z` accepted at the symmetric turning point.
pub const SYMMETRY_TOL: f64 = 1e-9;

/// Equal-area loci `w_h1 < w_h2` at `z` (where the slice cubic is odd about
/// its middle root).
fn loci(p: &UnfoldingParams, z: f64) -> Option<(f64, f64)> {
    let a = p.alpha + z;
    (a < 0.0).then(|| {
        let r = (-a).sqrt();
        (-p.lambda - r, -p.lambda + r)
    })
}

/// `u` on the quasi-steady branch (lowest homogeneous root at frozen `z`).
fn u_qs(p: &UnfoldingParams, z: f64) -> f64 {
    fixed_points(p, z).u_rest()
}

fn du_down_dw(p: &UnfoldingParams, u: f64, w: f64, z: f64) -> f64 {
    let (pp, _) = slice_pq(p, w, z);
    let l = p.lambda + w;
    let g_l = -2.0 * l + p.gamma * u;
    let g_u = -3.0 * u * u + pp;
    -g_l / g_u
}

struct Setup<'a> {
    p: &'a UnfoldingParams,
    delta: f64,
    z_bar: f64,
    z_rest: f64,
    z_hi: f64,
}

impl Setup<'_> {
    /// `v_z` on the unstable manifold of rest along the quasi-steady arc.
    fn v_z(&self, z: f64) -> Result<f64, SkeletonError> {
        let e = simpson(|s| Ok::<_, SkeletonError>(s - u_qs(self.p, s) - self.z_bar), self.z_rest, z, 1e-13)?;
        if e < 0.0 {
            return Err(SkeletonError::RadicandNegative { z });
        }
        Ok((2.0 * e).sqrt())
    }

    /// Upper end of the `z_hom` window: the loci exist and the quasi-steady
    /// point lies left of the first locus.
    fn window_top(p: &UnfoldingParams, z_rest: f64) -> f64 {
        let inside = |z: f64| loci(p, z).is_some_and(|(h1, _)| u_qs(p, z) < h1);
        let mut hi = -p.alpha;
        if inside(hi - 1e-12) {
            return hi - 1e-12;
        }
        let mut lo = z_rest;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if inside(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }
}

#[derive(Clone, Copy)]
struct Turn {
    v_z: f64,
    segments: usize,
    jumps: usize,
    spikes: usize,
}

#[derive(Default)]
struct Run {
    turns: Vec<Turn>,
    segments: Vec<Segment>,
    jumps: Vec<JumpEvent>,
    spikes: usize,
    failure: Option<SkeletonError>,
}

fn jump_segment(y: &[f64; 4], base: f64, land: f64) -> Segment {
    let samples = front_profile(base, land, PROFILE_SAMPLES)
        .into_iter()
        .map(|(u, v)| [u, v, y[0], y[1], y[2], y[3]])
        .collect();
    Segment { kind: SegmentKind::FastJump, branch: String::new(), samples }
}

/// Oscillatory part from the peel-off point at `z_hom`, stopping after
/// `stop_turns` turning points (or the first failure).
fn oscillate(s: &Setup, z_hom: f64, stop_turns: usize, record: bool) -> Run {
    oscillate_until(s, z_hom, stop_turns, record, false)
}

/// As [`oscillate`]; with `past_zero` the run also stops once `v_z` has been
/// negative at two consecutive turning points.
fn oscillate_until(s: &Setup, z_hom: f64, stop_turns: usize, record: bool, past_zero: bool) -> Run {
    let mut run = Run::default();
    let p = s.p;
    let kind = FlowKind::StandingB { delta: s.delta, z_bar: s.z_bar };
    let start = (|| {
        let w = u_qs(p, z_hom);
        let mu = (1.0 - du_down_dw(p, w, w, z_hom)).sqrt();
        Ok::<_, SkeletonError>([w + PEEL, mu * PEEL, z_hom, s.v_z(z_hom)?])
    })();
    let mut y = match start {
        Ok(y) => y,
        Err(e) => {
            run.failure = Some(e);
            return run;
        }
    };
    let mut branch = Branch::Lower;
    let mut disabled: Option<usize> = None;
    let mut t_used = 0.0;
    let locus = move |k: usize, y: &[f64; 4]| {
        let r = (-(p.alpha + y[2])).max(0.0).sqrt();
        if k == 0 {
            y[0] + p.lambda + r
        } else {
            y[0] + p.lambda - r
        }
    };
    while run.turns.len() < stop_turns {
        let all: [(usize, Event<'_, 4>); 7] = [
            (0, Event::new(1, move |_t, y: &[f64; 4]| locus(0, y))),
            (1, Event::new(-1, move |_t, y: &[f64; 4]| locus(0, y))),
            (2, Event::new(1, move |_t, y: &[f64; 4]| locus(1, y))),
            (3, Event::new(-1, move |_t, y: &[f64; 4]| locus(1, y))),
            (4, Event::new(1, |_t, y: &[f64; 4]| y[1])),
            (5, Event::new(-1, |_t, y: &[f64; 4]| y[1])),
            (6, Event::new(1, move |_t, y: &[f64; 4]| p.alpha + y[2])),
        ];
        let (ids, events): (Vec<usize>, Vec<Event<'_, 4>>) =
            all.into_iter().filter(|(i, _)| Some(*i) != disabled).unzip();
        let arc = match reduced_flow(p, kind, branch, y, T_MAX - t_used, &events) {
            Ok(a) => a,
            Err(e) => {
                run.failure = Some(e);
                return run;
            }
        };
        t_used += arc.t_end;
        y = arc.end;
        if record {
            let name = if branch == Branch::Lower { "down" } else { "up" };
            run.segments.push(Segment { kind: SegmentKind::SlowArc, branch: name.into(), samples: arc.samples });
        }
        let Some(fired) = arc.stop.map(|i| ids[i]) else {
            run.failure = Some(SkeletonError::Integration("time budget exhausted".into()));
            return run;
        };
        disabled = Some(fired);
        let jump = match (fired, branch) {
            (0 | 2, Branch::Lower) => Some(Direction::Up),
            (1 | 3, Branch::Upper) => Some(Direction::Down),
            (6, _) => {
                run.failure = Some(SkeletonError::NoSymmetricCrossing);
                return run;
            }
            _ => None,
        };
        if fired == 4 || fired == 5 {
            run.turns.push(Turn { v_z: y[3], segments: run.segments.len(), jumps: run.jumps.len(), spikes: run.spikes });
            let n = run.turns.len();
            if past_zero && n > 1 && run.turns[n - 1].v_z < 0.0 && run.turns[n - 2].v_z < 0.0 {
                return run;
            }
            continue;
        }
        if let Some(dir) = jump {
            let (from, to) = match dir {
                Direction::Up => (Branch::Lower, Branch::Upper),
                Direction::Down => (Branch::Upper, Branch::Lower),
            };
            let (base, land) = match (branch_u(p, from, y[0], y[2]), branch_u(p, to, y[0], y[2])) {
                (Ok(b), Ok(l)) => (b, l),
                (Err(e), _) | (_, Err(e)) => {
                    run.failure = Some(e);
                    return run;
                }
            };
            if record {
                run.segments.push(jump_segment(&y, base, land));
            }
            run.jumps.push(JumpEvent { direction: dir, w: y[0], z: y[2], base_u: base, land_u: land });
            if dir == Direction::Up {
                run.spikes += 1;
            }
            branch = to;
        }
    }
    run
}

/// `v_z` at the `k`-th turning point for peel-off level `z_hom`.
fn psi(s: &Setup, z_hom: f64, k: usize) -> Option<f64> {
    let run = oscillate(s, z_hom, k + 1, false);
    run.turns.get(k).map(|t| t.v_z)
}

/// Roots `(z_hom, k)` of the symmetric-crossing condition over the window.
fn shooting_roots(s: &Setup) -> Vec<(f64, usize)> {
    let zs: Vec<f64> = (1..GRID).map(|i| s.z_rest + (s.z_hi - s.z_rest) * i as f64 / GRID as f64).collect();
    let profiles: Vec<Vec<f64>> = zs
        .iter()
        .map(|&z| {
            let run = oscillate_until(s, z, MAX_TURNS, false, true);
            run.turns.iter().map(|t| t.v_z).collect()
        })
        .collect();
    let mut roots = Vec::new();
    for i in 0..zs.len() - 1 {
        let (a, b) = (&profiles[i], &profiles[i + 1]);
        for k in 0..a.len().min(b.len()) {
            if (a[k] > 0.0) == (b[k] > 0.0) {
                continue;
            }
            let f = |z: f64| psi(s, z, k).unwrap_or(f64::NAN);
            let z = bisect(|z| f(z), zs[i], zs[i + 1]);
            let v = f(z);
            if v.abs() <= SYMMETRY_TOL {
                roots.push((z, k));
            }
        }
    }
    roots
}

/// Build the standing burst skeleton for full-system parameters `p`, ratio
/// `delta_ul_tilde` and offset `z_bar`.
pub fn build_standing_burst_skeleton(
    p: &UnfoldingParams,
    delta_ul_tilde: f64,
    z_bar: f64,
) -> Result<SingularOrbit, SkeletonError> {
    if !(delta_ul_tilde > 0.0) {
        return Err(SkeletonError::Precondition("delta_ul_tilde must be positive".into()));
    }
    let u_rest = homogeneous_roots(p, z_bar).values[0];
    let z_rest = u_rest + z_bar;
    let z_hi = Setup::window_top(p, z_rest);
    if !(z_hi > z_rest) {
        return Err(SkeletonError::NoSymmetricCrossing);
    }
    let setup = Setup { p, delta: delta_ul_tilde, z_bar, z_rest, z_hi };
    let roots = shooting_roots(&setup);
    let &(z_hom, k) = roots
        .iter()
        .max_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
        .ok_or(SkeletonError::NoSymmetricCrossing)?;

    // Quasi-steady arc from rest to the peel-off level.
    let fu = {
        let l = p.lambda + u_rest;
        -3.0 * u_rest * u_rest - 2.0 * l + p.beta + p.gamma * (p.lambda + 2.0 * u_rest)
    };
    let mu_z = (1.0 - 1.0 / fu).sqrt();
    let eta = 1e-7;
    let start = [u_rest, 0.0, z_rest + eta, mu_z * eta];
    let stops = [Event::new(1, move |_t, y: &[f64; 4]| y[2] - z_hom)];
    let arc = reduced_flow(p, FlowKind::StandingA { z_bar }, Branch::QuasiSteady, start, T_MAX, &stops)?;
    if arc.stop.is_none() {
        return Err(SkeletonError::Integration("quasi-steady arc never reached z_hom".into()));
    }
    let mut qs = vec![sample(p, Branch::QuasiSteady, &[u_rest, 0.0, z_rest, 0.0])?];
    qs.extend(arc.samples);
    let qs_vz_end = arc.end[3];

    let run = oscillate(&setup, z_hom, k + 1, true);
    if let Some(e) = run.failure {
        return Err(e);
    }
    let turn = run.turns[k];
    let mut half = vec![Segment { kind: SegmentKind::SlowArc, branch: "quasi_steady".into(), samples: qs }];
    half.extend(run.segments.into_iter().take(turn.segments));
    let jumps: Vec<JumpEvent> = run.jumps.into_iter().take(turn.jumps).collect();

    let mut segments = half.clone();
    for seg in half.iter().rev() {
        let samples = seg
            .samples
            .iter()
            .rev()
            .map(|s| [s[0], -s[1], s[2], -s[3], s[4], -s[5]])
            .collect();
        segments.push(Segment { kind: seg.kind, branch: seg.branch.clone(), samples });
    }

    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("u_rest".into(), u_rest);
    diagnostics.insert("z_rest".into(), z_rest);
    diagnostics.insert("z_hom".into(), z_hom);
    diagnostics.insert("z_window_top".into(), z_hi);
    diagnostics.insert("turning_point_index".into(), k as f64);
    diagnostics.insert("symmetric_v_z".into(), turn.v_z);
    diagnostics.insert("shooting_roots".into(), roots.len() as f64);
    diagnostics.insert("quasi_steady_v_z_seam".into(), (qs_vz_end - setup.v_z(z_hom)?).abs());
    diagnostics.insert("delta_ul_tilde".into(), delta_ul_tilde);
    diagnostics.insert("z_bar".into(), z_bar);
    Ok(SingularOrbit {
        segments,
        spike_count: turn.spikes,
        closed: true,
        symmetric: true,
        c_star: None,
        z_star: None,
        jumps,
        diagnostics,
    })
}

/// Reflection of an orbit: reversed order with velocities negated.
pub fn reflect(orbit: &SingularOrbit) -> Vec<[f64; 6]> {
    orbit
        .segments
        .iter()
        .rev()
        .flat_map(|seg| seg.samples.iter().rev())
        .map(|s| [s[0], -s[1], s[2], -s[3], s[4], -s[5]])
        .collect()
}
