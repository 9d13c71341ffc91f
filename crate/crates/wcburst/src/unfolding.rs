//! Winged-cusp and hysteresis unfoldings, critical-manifold slices and the
//! organizing singularities of the homogeneous rest equation.

use std::fmt;

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cubic::{cubic_roots, depressed_roots, RealRoots};
use crate::numerics::bisect;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UnfoldingError {
    #[error("pitchfork Newton iteration did not converge at beta = {beta}")]
    NoConvergence { beta: f64 },
    #[error("beta must be positive, got {0}")]
    DomainError(f64),
    #[error("fold near w = {w} is a higher-order contact")]
    UnresolvedFold { w: f64 },
    #[error("slice at w = {w} has {found} distinct roots, need 3")]
    WrongRootCount { w: f64, found: usize },
}

/// Unfolding coordinates of `g_wcusp(u, λ, α, β, γ) = −u³ − λ² − α + βu + γuλ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnfoldingParams {
    pub lambda: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl UnfoldingParams {
    pub fn new(lambda: f64, alpha: f64, beta: f64, gamma: f64) -> Self {
        Self { lambda, alpha, beta, gamma }
    }

    /// Parameters seen by the medium scale when the ultraslow variable sits at `z`.
    pub fn with_z(&self, z: f64) -> Self {
        Self { alpha: self.alpha + z, ..*self }
    }

    pub fn is_finite(&self) -> bool {
        self.lambda.is_finite() && self.alpha.is_finite() && self.beta.is_finite() && self.gamma.is_finite()
    }
}

pub fn eval_gwcusp(u: f64, p: &UnfoldingParams) -> f64 {
    -u * u * u - p.lambda * p.lambda - p.alpha + p.beta * u + p.gamma * u * p.lambda
}

pub fn eval_ghy(u: f64, lambda: f64, beta: f64) -> f64 {
    -u * u * u + lambda + beta * u
}

/// Homogeneous rest function: `g_wcusp` restricted to the nullcline `w = u`.
pub fn eval_f(u: f64, p: &UnfoldingParams) -> f64 {
    let l = p.lambda + u;
    -u * u * u - l * l + p.beta * u + p.gamma * l * u - p.alpha
}

/// Partial derivatives `(F_u, F_uu, F_λ)`.
fn f_partials(u: f64, p: &UnfoldingParams) -> (f64, f64, f64) {
    let l = p.lambda + u;
    let fu = -3.0 * u * u - 2.0 * l + p.beta + p.gamma * (p.lambda + 2.0 * u);
    let fuu = -6.0 * u - 2.0 + 2.0 * p.gamma;
    let fl = -2.0 * l + p.gamma * u;
    (fu, fuu, fl)
}

/// Coefficients `(P, Q)` of the slice `g_wcusp(u, λ+w, α+z, β, γ) = −u³ + P u − Q`.
pub fn slice_pq(p: &UnfoldingParams, w: f64, z: f64) -> (f64, f64) {
    let l = p.lambda + w;
    (p.beta + p.gamma * l, l * l + p.alpha + z)
}

/// Branch names along a critical-manifold slice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BranchLabel {
    #[serde(rename = "down-")]
    DownMinus,
    #[serde(rename = "mid-")]
    MidMinus,
    #[serde(rename = "up")]
    Up,
    #[serde(rename = "mid+")]
    MidPlus,
    #[serde(rename = "down+")]
    DownPlus,
    #[serde(rename = "down")]
    Down,
    #[serde(rename = "mid")]
    Mid,
}

impl fmt::Display for BranchLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BranchLabel::DownMinus => "down-",
            BranchLabel::MidMinus => "mid-",
            BranchLabel::Up => "up",
            BranchLabel::MidPlus => "mid+",
            BranchLabel::DownPlus => "down+",
            BranchLabel::Down => "down",
            BranchLabel::Mid => "mid",
        };
        f.write_str(s)
    }
}

/// Real roots in `u` of the critical manifold at fixed `(w, z)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalSlice {
    pub w: f64,
    pub z: f64,
    pub roots: Vec<f64>,
    pub multiplicity: Vec<u8>,
    pub branch_labels: Vec<BranchLabel>,
}

impl CriticalSlice {
    /// True when a double or triple root is present.
    pub fn at_fold(&self) -> bool {
        self.multiplicity.iter().any(|&m| m > 1)
    }

    /// The three simple roots `(low, mid, high)`, if the slice is bistable.
    pub fn three(&self) -> Option<(f64, f64, f64)> {
        if self.roots.len() == 3 && !self.at_fold() {
            Some((self.roots[0], self.roots[1], self.roots[2]))
        } else {
            None
        }
    }
}

/// All real roots of the slice, labeled down/mid/up without diagram context.
pub fn solve_cubic(w: f64, z: f64, p: &UnfoldingParams) -> CriticalSlice {
    let (pp, q) = slice_pq(p, w, z);
    let RealRoots { values, multiplicity } = depressed_roots(-pp, q);
    let branch_labels = default_labels(&values, &multiplicity);
    CriticalSlice { w, z, roots: values, multiplicity, branch_labels }
}

fn default_labels(roots: &[f64], mult: &[u8]) -> Vec<BranchLabel> {
    use BranchLabel::*;
    match roots.len() {
        3 => vec![Down, Mid, Up],
        2 => vec![Down, Up],
        1 if mult[0] == 3 => vec![Mid],
        // The depressed cubic has its inflection at u = 0.
        1 => vec![if roots[0] < 0.0 { Down } else { Up }],
        _ => vec![],
    }
}

/// Which pair of roots coalesces at a fold.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FoldPair {
    Upper,
    Lower,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiagramKind {
    MirroredHysteresis,
    Class3,
    TranscriticalDegenerate,
    Other,
}

impl fmt::Display for DiagramKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// Persistent bifurcation diagram of the critical manifold in `w` at fixed `z`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagramClass {
    pub class_id: DiagramKind,
    pub fold_w_values: Vec<f64>,
    pub fold_count: usize,
    pub fold_pairs: Vec<FoldPair>,
}

impl DiagramClass {
    /// Branch labels for a slice consistent with this diagram's fold intervals.
    pub fn label(&self, slice: &CriticalSlice) -> Vec<BranchLabel> {
        use BranchLabel::*;
        let f = &self.fold_w_values;
        match (self.class_id, slice.roots.len()) {
            (DiagramKind::MirroredHysteresis, 3) => {
                if slice.w < 0.5 * (f[1] + f[2]) {
                    vec![DownMinus, MidMinus, Up]
                } else {
                    vec![DownPlus, MidPlus, Up]
                }
            }
            (DiagramKind::MirroredHysteresis, 1) => {
                if slice.w < f[0] {
                    vec![DownMinus]
                } else if slice.w > f[3] {
                    vec![DownPlus]
                } else {
                    vec![Up]
                }
            }
            (DiagramKind::Class3, 1) => vec![Down],
            _ => default_labels(&slice.roots, &slice.multiplicity),
        }
    }
}

/// Discriminant `4P³ − 27Q²` of the slice as a quartic in `L = λ + w`, with
/// its first two derivatives.
struct Discriminant {
    beta: f64,
    gamma: f64,
    a: f64,
}

impl Discriminant {
    fn value(&self, l: f64) -> f64 {
        let p = self.beta + self.gamma * l;
        let q = l * l + self.a;
        4.0 * p * p * p - 27.0 * q * q
    }

    fn scale(&self, l: f64) -> f64 {
        let p = self.beta + self.gamma * l;
        let q = l * l + self.a;
        4.0 * p.abs().powi(3) + 27.0 * q * q
    }

    fn second(&self, l: f64) -> f64 {
        let p = self.beta + self.gamma * l;
        24.0 * self.gamma * self.gamma * p - 108.0 * (3.0 * l * l + self.a)
    }

    /// Critical points: roots of the cubic derivative.
    fn critical_points(&self) -> Vec<f64> {
        let (b, g, a) = (self.beta, self.gamma, self.a);
        let r = cubic_roots(
            -108.0,
            12.0 * g * g * g,
            2.0 * (12.0 * b * g * g - 54.0 * a),
            12.0 * b * b * g,
        );
        r.values
    }
}

/// Classify the critical manifold's diagram in `w` at fixed `z`.
///
/// Folds are the real zeros of the discriminant quartic; its critical points
/// split the line into monotone pieces, so every fold is bracketed exactly.
pub fn classify_diagram(
    p: &UnfoldingParams,
    z: f64,
    w_range: Option<(f64, f64)>,
) -> Result<DiagramClass, UnfoldingError> {
    let disc = Discriminant { beta: p.beta, gamma: p.gamma, a: p.alpha + z };
    let crit = disc.critical_points();
    let span = 10.0 * (1.0 + p.beta.abs() + p.gamma.abs() + (p.alpha + z).abs()).powi(2);

    let mut folds_l = Vec::new();
    let mut degenerate = false;
    for &c in &crit {
        if disc.value(c).abs() <= 1e-12 * (1.0 + disc.scale(c)) {
            if disc.second(c).abs() <= 1e-9 * (1.0 + disc.scale(c)) {
                return Err(UnfoldingError::UnresolvedFold { w: c - p.lambda });
            }
            degenerate = true;
            folds_l.push(c);
        }
    }
    let mut knots = vec![-span];
    knots.extend(crit.iter().copied());
    knots.push(span);
    for pair in knots.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        let (flo, fhi) = (disc.value(lo), disc.value(hi));
        if flo != 0.0 && fhi != 0.0 && (flo > 0.0) != (fhi > 0.0) {
            let l = bisect(|l| disc.value(l), lo, hi);
            if !folds_l.iter().any(|&f: &f64| (f - l).abs() < 1e-9) {
                folds_l.push(l);
            }
        }
    }
    folds_l.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut fold_w_values = Vec::new();
    let mut fold_pairs = Vec::new();
    for &l in &folds_l {
        let w = l - p.lambda;
        if let Some((lo, hi)) = w_range {
            if w < lo || w > hi {
                continue;
            }
        }
        let pp = p.beta + p.gamma * l;
        let q = l * l + p.alpha + z;
        let double = 1.5 * q / pp;
        let simple = -3.0 * q / pp;
        fold_w_values.push(w);
        fold_pairs.push(if double > simple { FoldPair::Upper } else { FoldPair::Lower });
    }

    use FoldPair::*;
    let class_id = if degenerate {
        DiagramKind::TranscriticalDegenerate
    } else if fold_pairs == [Upper, Lower, Lower, Upper] {
        DiagramKind::MirroredHysteresis
    } else if fold_pairs == [Upper, Upper] {
        DiagramKind::Class3
    } else {
        DiagramKind::Other
    };
    Ok(DiagramClass { class_id, fold_count: fold_w_values.len(), fold_w_values, fold_pairs })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixedPointRole {
    Rest,
    Middle,
    Right,
}

/// Roots of the homogeneous rest equation plus the rest-state inequalities
/// that make the up- and down-jump loci well ordered.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPointSet {
    pub roots: Vec<f64>,
    pub multiplicity: Vec<u8>,
    pub roles: Vec<FixedPointRole>,
    /// `u³ − βu − α > −u³ + βu − α`, `−u³ + βu − α > 0`, `u³ − (β+1)u + α > 0`
    /// at the lowest root.
    pub rest_inequalities: [bool; 3],
}

impl FixedPointSet {
    pub fn u_rest(&self) -> f64 {
        self.roots[0]
    }

    pub fn flags_hold(&self) -> bool {
        self.rest_inequalities.iter().all(|&b| b)
    }
}

/// Roots of `F(u, λ, α + z_offset, β, γ) = 0`.
pub fn fixed_points(p: &UnfoldingParams, z_offset: f64) -> FixedPointSet {
    let a = p.alpha + z_offset;
    let r = cubic_roots(
        -1.0,
        p.gamma - 1.0,
        p.beta - 2.0 * p.lambda + p.gamma * p.lambda,
        -(p.lambda * p.lambda + a),
    );
    let roles = match r.len() {
        3 => vec![FixedPointRole::Rest, FixedPointRole::Middle, FixedPointRole::Right],
        2 => vec![FixedPointRole::Rest, FixedPointRole::Right],
        _ => vec![FixedPointRole::Rest],
    };
    let u = r.values[0];
    let b = p.beta;
    let lower = u * u * u - b * u - a;
    let upper = -u * u * u + b * u - a;
    let rest_inequalities = [lower > upper, upper > 0.0, u * u * u - (b + 1.0) * u + a > 0.0];
    FixedPointSet { roots: r.values, multiplicity: r.multiplicity, roles, rest_inequalities }
}

/// Homogeneous equilibria of the full three-variable system (`w = z = u`):
/// roots of `F(u, λ, α + u, β, γ) = 0`.
pub fn homogeneous_roots(p: &UnfoldingParams, z_bar: f64) -> RealRoots {
    cubic_roots(
        -1.0,
        p.gamma - 1.0,
        p.beta - 2.0 * p.lambda + p.gamma * p.lambda - 1.0,
        -(p.lambda * p.lambda + p.alpha + z_bar),
    )
}

/// Distances between the slice roots at `w`: `(L1, L2, a)` with
/// `L2 = mid − down`, `L1 = up − mid` and `a = L2 / (up − down)`.
pub fn hausdorff_gaps(p: &UnfoldingParams, w: f64) -> Result<(f64, f64, f64), UnfoldingError> {
    let s = solve_cubic(w, 0.0, p);
    let (lo, mid, hi) = s
        .three()
        .ok_or(UnfoldingError::WrongRootCount { w, found: s.roots.len() })?;
    Ok((hi - mid, mid - lo, (mid - lo) / (hi - lo)))
}

/// `α̃` of the transcritical point of the critical manifold at `λ̃ = 0`.
pub fn find_transcritical(beta: f64) -> Result<f64, UnfoldingError> {
    if beta <= 0.0 || !beta.is_finite() {
        return Err(UnfoldingError::DomainError(beta));
    }
    Ok(-2.0 * (beta / 3.0).powf(1.5))
}

/// Pitchfork of the homogeneous rest equation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pitchfork {
    pub lambda: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub u: f64,
}

impl Pitchfork {
    pub fn params(&self, beta: f64) -> UnfoldingParams {
        UnfoldingParams::new(self.lambda, self.alpha, beta, self.gamma)
    }
}

fn pitchfork_residual(x: &Vector4<f64>, beta: f64) -> Vector4<f64> {
    let p = UnfoldingParams::new(x[1], x[2], beta, x[3]);
    let (fu, fuu, fl) = f_partials(x[0], &p);
    Vector4::new(eval_f(x[0], &p), fu, fuu, fl)
}

fn pitchfork_jacobian(x: &Vector4<f64>, beta: f64) -> Matrix4<f64> {
    let (u, lam, g) = (x[0], x[1], x[3]);
    let p = UnfoldingParams::new(lam, x[2], beta, g);
    let (fu, fuu, fl) = f_partials(u, &p);
    // Rows: F, F_u, F_uu, F_λ. Columns: u, λ, α, γ.
    Matrix4::new(
        fu, fl, -1.0, (lam + u) * u, //
        fuu, -2.0 + g, 0.0, lam + 2.0 * u, //
        -6.0, 0.0, 0.0, 2.0, //
        -2.0 + g, -2.0, 0.0, u,
    )
}

fn newton_pitchfork(mut x: Vector4<f64>, beta: f64) -> Option<Vector4<f64>> {
    for _ in 0..100 {
        let r = pitchfork_residual(&x, beta);
        let norm = r.amax();
        if norm <= 1e-13 {
            return Some(x);
        }
        let step = pitchfork_jacobian(&x, beta).lu().solve(&r)?;
        let mut t = 1.0;
        loop {
            let trial = x - step * t;
            if pitchfork_residual(&trial, beta).amax() < norm || t < 1e-6 {
                x = trial;
                break;
            }
            t *= 0.5;
        }
    }
    (pitchfork_residual(&x, beta).amax() <= 1e-11).then_some(x)
}

/// Solve `F = F_u = F_uu = F_λ = 0` for `(u, λ, α, γ)` by Newton continuation
/// in `β` from the exact solution at `β = 1/3`.
pub fn find_pitchfork(beta: f64) -> Result<Pitchfork, UnfoldingError> {
    if !beta.is_finite() {
        return Err(UnfoldingError::NoConvergence { beta });
    }
    let b0 = 1.0 / 3.0;
    let mut x = Vector4::new(-1.0 / 3.0, 1.0 / 3.0, -2.0 / 27.0, 0.0);
    let steps = ((beta - b0).abs() / 0.01).ceil().max(1.0) as usize;
    for k in 1..=steps {
        let b = b0 + (beta - b0) * k as f64 / steps as f64;
        x = newton_pitchfork(x, b).ok_or(UnfoldingError::NoConvergence { beta })?;
    }
    Ok(Pitchfork { u: x[0], lambda: x[1], alpha: x[2], gamma: x[3] })
}

/// Largest absolute residual of the four pitchfork conditions.
pub fn pitchfork_residual_norm(pf: &Pitchfork, beta: f64) -> f64 {
    pitchfork_residual(&Vector4::new(pf.u, pf.lambda, pf.alpha, pf.gamma), beta).amax()
}
