//! Computable conditions behind the pulse and burst constructions: rest-state
//! inequalities and gap ordering for the traveling case, the two integral
//! signs for the standing case, and the drift margin of the traveling burst.

use serde::{Deserialize, Serialize};

use super::fronts::{find_cstar, jump_curves, standing_front_w};
use super::SkeletonError;
use crate::numerics::simpson;
use crate::unfolding::{
    classify_diagram, fixed_points, hausdorff_gaps, homogeneous_roots, slice_pq, solve_cubic, DiagramKind, FoldPair,
    UnfoldingParams,
};

/// Rest state of the full system and the medium parameters obtained by
/// freezing `z` there (`α̃ = α + u_rest`).
pub fn medium_params(p: &UnfoldingParams) -> (UnfoldingParams, f64) {
    let u_rest = homogeneous_roots(p, 0.0).values[0];
    (p.with_z(u_rest), u_rest)
}

/// Conditions for the medium-scale traveling front and wave train.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TravelingConditions {
    pub diagram: DiagramKind,
    pub fixed_point_count: usize,
    pub u_rest: f64,
    pub rest_inequalities: [bool; 3],
    pub l1: f64,
    pub l2: f64,
    pub a: f64,
    /// `L2 < L1` and `0 < a < 1/2` at `w = u_rest`.
    pub gap_inequality: bool,
    pub c_star: f64,
    pub pass: bool,
}

/// Evaluate the traveling-front conditions on medium parameters `p`.
pub fn traveling_conditions(p: &UnfoldingParams) -> Result<TravelingConditions, SkeletonError> {
    let diagram = classify_diagram(p, 0.0, None)?.class_id;
    let fp = fixed_points(p, 0.0);
    let u_rest = fp.u_rest();
    let (l1, l2, a) = hausdorff_gaps(p, u_rest)?;
    let gap_inequality = l2 < l1 && a > 0.0 && a < 0.5;
    let c_star = find_cstar(p)?;
    let pass = diagram == DiagramKind::MirroredHysteresis && fp.roots.len() == 3 && fp.flags_hold() && gap_inequality;
    Ok(TravelingConditions {
        diagram,
        fixed_point_count: fp.roots.len(),
        u_rest,
        rest_inequalities: fp.rest_inequalities,
        l1,
        l2,
        a,
        gap_inequality,
        c_star,
        pass,
    })
}

/// Integral signs for the standing pulse and pattern at frozen `z`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StandingIntegrals {
    pub z: f64,
    pub diagram: DiagramKind,
    pub unique_fixed_point: bool,
    pub rest_left_of_axis: bool,
    pub w_rest: f64,
    pub w_h1: f64,
    pub w_h2: f64,
    pub w_fold: f64,
    /// Must be positive.
    pub ineq_a: f64,
    /// Must be negative.
    pub ineq_b: f64,
    pub pass: bool,
}

/// Evaluate both integral inequalities at offset `z` (so `α̃ = α + z`).
pub fn standing_integrals(p: &UnfoldingParams, z: f64) -> Result<StandingIntegrals, SkeletonError> {
    let d = classify_diagram(p, z, None)?;
    let fp = fixed_points(p, z);
    let w_rest = fp.u_rest();
    let (w_h1, w_h2) = standing_front_w(p, z)?;
    let w_fold = d
        .fold_w_values
        .iter()
        .zip(&d.fold_pairs)
        .find(|(&w, &pair)| w > w_h2 && pair == FoldPair::Upper)
        .map(|(&w, _)| w)
        .ok_or(SkeletonError::BranchGap { w: w_h2 })?;
    let low = |s: f64| outer_root(p, s, z, false).map(|u| u - s);
    let high = |s: f64| outer_root(p, s, z, true).map(|u| u - s);
    let down = simpson(low, w_rest, w_h1, 1e-10)?;
    let to_fold = simpson(high, w_h1, w_fold, 1e-10)?;
    let to_h2 = simpson(high, w_h1, w_h2, 1e-10)?;
    let ineq_a = down + to_fold;
    let ineq_b = down + to_h2;
    let unique_fixed_point = fp.roots.len() == 1;
    let rest_left_of_axis = w_rest < -p.lambda;
    Ok(StandingIntegrals {
        z,
        diagram: d.class_id,
        unique_fixed_point,
        rest_left_of_axis,
        w_rest,
        w_h1,
        w_h2,
        w_fold,
        ineq_a,
        ineq_b,
        pass: ineq_a > 0.0 && ineq_b < 0.0,
    })
}

/// Lowest or highest root of the slice, provided it lies on the lower or
/// upper branch (a lone root may belong to either).
fn outer_root(p: &UnfoldingParams, w: f64, z: f64, upper: bool) -> Result<f64, SkeletonError> {
    let s = solve_cubic(w, z, p);
    let r = if upper { *s.roots.last().unwrap() } else { s.roots[0] };
    if s.roots.len() > 1 {
        return Ok(r);
    }
    let (pp, _) = slice_pq(p, w, z);
    let knee = if pp > 0.0 { (pp / 3.0).sqrt() } else { 0.0 };
    let ok = pp <= 0.0 || if upper { r >= knee } else { r <= -knee };
    if ok {
        Ok(r)
    } else {
        Err(SkeletonError::BranchGap { w })
    }
}

/// Drift margin of the traveling burst at ultra-slow level `z`: on each side
/// of `w = −λ`, `∫ (u_low − z) + (u_high − z) dw` between the up- and
/// down-jump loci. Returns the smaller of the two sides.
pub fn burst_drift_margin(p: &UnfoldingParams, u_rest: f64, z: f64) -> Result<f64, SkeletonError> {
    let j = jump_curves(p, u_rest, z)?;
    let integrand = |w: f64| {
        let s = solve_cubic(w, z, p);
        match s.three() {
            Some((lo, _, hi)) => Ok(lo + hi - 2.0 * z),
            None => Err(SkeletonError::BranchGap { w }),
        }
    };
    let plus = simpson(integrand, j.w_up_plus, j.w_down_plus, 1e-10)?;
    let minus = simpson(integrand, j.w_down_minus, j.w_up_minus, 1e-10)?;
    Ok(plus.min(minus))
}
