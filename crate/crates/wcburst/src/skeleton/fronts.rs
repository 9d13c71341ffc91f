//! Fine-scale fronts of the layer problem `u'' = c u' − g(u)` at frozen
//! `(w, z)`: equal-area standing fronts, traveling speeds and the closed-form
//! jump loci of the traveling burst.

use serde::{Deserialize, Serialize};

use super::SkeletonError;
use crate::numerics::{bisect, simpson, Dopri, Event, OdeOptions, Outcome};
use crate::unfolding::{classify_diagram, fixed_points, slice_pq, solve_cubic, UnfoldingParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Up,
    Down,
}

/// `∫ g du` between the outer roots of the slice, or `None` if not bistable.
pub fn well_area(p: &UnfoldingParams, w: f64, z: f64) -> Option<f64> {
    let (lo, _, hi) = solve_cubic(w, z, p).three()?;
    let (pp, q) = slice_pq(p, w, z);
    let g = |u: f64| Ok::<_, ()>(-u * u * u + pp * u - q);
    simpson(g, lo, hi, 1e-14).ok()
}

/// Intervals of `w` on which the slice has three roots.
pub fn bistable_intervals(p: &UnfoldingParams, z: f64) -> Result<Vec<(f64, f64)>, SkeletonError> {
    let d = classify_diagram(p, z, None)?;
    let f = &d.fold_w_values;
    let mut out = Vec::new();
    for pair in f.windows(2) {
        let mid = 0.5 * (pair[0] + pair[1]);
        if solve_cubic(mid, z, p).three().is_some() {
            out.push((pair[0], pair[1]));
        }
    }
    Ok(out)
}

/// The two `w` values where the up and down standing fronts exist
/// (equal-area condition), found by quadrature and bisection.
pub fn standing_front_w(p: &UnfoldingParams, z: f64) -> Result<(f64, f64), SkeletonError> {
    let intervals = bistable_intervals(p, z)?;
    if intervals.is_empty() {
        return Err(SkeletonError::NoBistableRange { z });
    }
    let mut zeros: Vec<f64> = Vec::new();
    for (a, b) in intervals {
        let margin = 1e-9 * (b - a);
        let (a, b) = (a + margin, b - margin);
        let n = 64;
        let ws: Vec<f64> = (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect();
        let area = |w: f64| well_area(p, w, z).unwrap_or(f64::NAN);
        let vals: Vec<f64> = ws.iter().map(|&w| area(w)).collect();
        // Split at the extrema of the area so every zero is bracketed, even
        // two zeros inside one grid cell or a tangential one.
        let mut knots = vec![a];
        for i in 1..n {
            let (l, m, r) = (vals[i - 1], vals[i], vals[i + 1]);
            if (m <= l && m <= r) || (m >= l && m >= r) {
                let sign = if m <= l { 1.0 } else { -1.0 };
                let w = golden_min(|w| sign * area(w), ws[i - 1], ws[i + 1]);
                if area(w).abs() <= 1e-12 {
                    zeros.push(w);
                }
                knots.push(w);
            }
        }
        knots.push(b);
        knots.sort_by(|x, y| x.partial_cmp(y).unwrap());
        for pair in knots.windows(2) {
            let (v0, v1) = (area(pair[0]), area(pair[1]));
            if v0.is_finite() && v1.is_finite() && v0 != 0.0 && v1 != 0.0 && (v0 > 0.0) != (v1 > 0.0) {
                zeros.push(bisect(area, pair[0], pair[1]));
            }
        }
    }
    if zeros.is_empty() {
        return Err(SkeletonError::NoEqualArea { z });
    }
    zeros.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok((zeros[0], *zeros.last().unwrap()))
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-15 * (1.0 + a.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Speed of the cubic front from `lo` to `hi` (up) or back (down), for
/// `g = −(u − lo)(u − mid)(u − hi)`.
pub fn closed_form_speed(lo: f64, mid: f64, hi: f64, dir: Direction) -> f64 {
    let c = (lo + hi - 2.0 * mid) / std::f64::consts::SQRT_2;
    match dir {
        Direction::Up => c,
        Direction::Down => -c,
    }
}

/// Speed of a front computed by the affine map to the normalized cubic and by
/// shooting; both values are kept for reporting.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontSpeed {
    pub closed_form: f64,
    pub shooting: f64,
}

pub fn traveling_front_speed(
    p: &UnfoldingParams,
    z: f64,
    w: f64,
    dir: Direction,
) -> Result<FrontSpeed, SkeletonError> {
    let (lo, mid, hi) = solve_cubic(w, z, p).three().ok_or(SkeletonError::NotBistable { w, z })?;
    // Affine map u = lo + C s sends the roots to {0, a, 1}.
    let span = hi - lo;
    let a = (mid - lo) / span;
    let normalized = span * (1.0 - 2.0 * a) / std::f64::consts::SQRT_2;
    let closed_form = match dir {
        Direction::Up => normalized,
        Direction::Down => -normalized,
    };
    let shooting = shoot_speed(p, z, w, dir)?;
    Ok(FrontSpeed { closed_form, shooting })
}

enum Shot {
    Overshoot,
    Undershoot,
    Undecided,
}

/// Bisection on `c ∈ [−10, 10]` using the overshoot/undershoot of the
/// unstable manifold of the base saddle.
pub fn shoot_speed(p: &UnfoldingParams, z: f64, w: f64, dir: Direction) -> Result<f64, SkeletonError> {
    let (lo, _, hi) = solve_cubic(w, z, p).three().ok_or(SkeletonError::NotBistable { w, z })?;
    let (pp, q) = slice_pq(p, w, z);
    let g = move |u: f64| -u * u * u + pp * u - q;
    let (base, land, sign) = match dir {
        Direction::Up => (lo, hi, 1.0),
        Direction::Down => (hi, lo, -1.0),
    };
    let dg = -3.0 * base * base + pp;
    let shot = |c: f64| -> Result<Shot, SkeletonError> {
        let mu = 0.5 * (c + (c * c - 4.0 * dg).sqrt());
        let eta = 1e-9 * (hi - lo);
        let y0 = [base + sign * eta, sign * eta * mu];
        let opts = OdeOptions { rtol: 1e-10, atol: 1e-13, h0: 1e-2, ..OdeOptions::default() };
        let mut ode = Dopri::new(move |_t, y: &[f64; 2]| Ok::<_, ()>([y[1], c * y[1] - g(y[0])]), opts);
        let events = [
            Event::new(0, move |_t, y: &[f64; 2]| sign * (y[0] - land)),
            Event::new(0, move |_t, y: &[f64; 2]| sign * y[1]),
            Event::new(0, |_t, y: &[f64; 2]| 50.0 - y[0].abs().max(y[1].abs())),
        ];
        match ode.integrate(0.0, y0, 100.0 + 60.0 / mu, &events, |_, _| {}) {
            Ok(Outcome::Event { index: 0, .. }) => Ok(Shot::Overshoot),
            Ok(Outcome::Event { index: 1, .. }) => Ok(Shot::Undershoot),
            Ok(Outcome::Event { .. }) => Err(SkeletonError::ShootingDiverged { c }),
            // Stalling near the landing saddle means c is at the root to
            // working precision; stalling anywhere else (overdamped decay
            // onto the middle root) is an undershoot.
            Ok(Outcome::Reached { y, .. }) if (y[0] - land).abs() < 1e-3 * (hi - lo) => Ok(Shot::Undecided),
            Ok(Outcome::Reached { .. }) => Ok(Shot::Undershoot),
            Err(e) => Err(SkeletonError::Integration(format!("{e:?}"))),
        }
    };
    let (mut c_lo, mut c_hi) = (-10.0f64, 10.0f64);
    for _ in 0..80 {
        let c = 0.5 * (c_lo + c_hi);
        if c_hi - c_lo <= 1e-13 {
            break;
        }
        match shot(c)? {
            Shot::Overshoot => c_hi = c,
            Shot::Undershoot => c_lo = c,
            Shot::Undecided => return Ok(c),
        }
    }
    Ok(0.5 * (c_lo + c_hi))
}

/// Sampled heteroclinic `(u, v_u)` between two outer roots of a slice whose
/// middle root makes the profile exact: `u' = ∓(u − lo)(u − hi)/√2`.
pub fn front_profile(base: f64, land: f64, n: usize) -> Vec<(f64, f64)> {
    let span = land - base;
    let k = span.abs() / std::f64::consts::SQRT_2;
    // Stretch so that the sampled tails come within 1e-8 of both saddles.
    let s_max = (1e8f64).ln() / k;
    let mut out = Vec::with_capacity(n + 2);
    out.push((base, 0.0));
    for i in 0..n {
        let s = -s_max + 2.0 * s_max * i as f64 / (n - 1) as f64;
        let e = 1.0 / (1.0 + (-k * s).exp());
        let u = base + span * e;
        let v = span * k * e * (1.0 - e);
        out.push((u, v));
    }
    out.push((land, 0.0));
    out
}

/// Wave speed at which the up-jump from the rest state of the medium system
/// exists.
pub fn find_cstar(p: &UnfoldingParams) -> Result<f64, SkeletonError> {
    let u_rest = fixed_points(p, 0.0).u_rest();
    let s = traveling_front_speed(p, 0.0, u_rest, Direction::Up)?;
    if (s.closed_form - s.shooting).abs() > 1e-6 {
        return Err(SkeletonError::Integration(format!(
            "shooting {} disagrees with closed form {}",
            s.shooting, s.closed_form
        )));
    }
    Ok(s.closed_form)
}

/// `w`-coordinates of the four fast jumps of the traveling burst at `z`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpCurves {
    pub w_up_minus: f64,
    pub w_down_minus: f64,
    pub w_up_plus: f64,
    pub w_down_plus: f64,
}

/// Level of `(λ+w)² + α + z` at which the up-jump from `u_rest` exists.
pub fn up_jump_level(p: &UnfoldingParams, u_rest: f64) -> f64 {
    -u_rest * u_rest * u_rest + p.beta * u_rest
}

/// Level of `(λ+w)² + α + z` at which the mirrored down-jump exists.
pub fn down_jump_level(p: &UnfoldingParams, u_rest: f64) -> f64 {
    u_rest * u_rest * u_rest - p.beta * u_rest
}

pub fn jump_curves(p: &UnfoldingParams, u_rest: f64, z: f64) -> Result<JumpCurves, SkeletonError> {
    let at = p.alpha + z;
    let up = up_jump_level(p, u_rest) - at;
    let down = down_jump_level(p, u_rest) - at;
    if up < 0.0 || down < 0.0 {
        return Err(SkeletonError::RadicandNegative { z });
    }
    let (su, sd) = (up.sqrt(), down.sqrt());
    Ok(JumpCurves {
        w_up_minus: -su - p.lambda,
        w_down_minus: -sd - p.lambda,
        w_up_plus: su - p.lambda,
        w_down_plus: sd - p.lambda,
    })
}

/// Offset of `z` at which the two up-jump loci merge on `w = −λ`.
pub fn delta_alpha_star(p: &UnfoldingParams, u_rest: f64) -> f64 {
    up_jump_level(p, u_rest) - p.alpha
}
