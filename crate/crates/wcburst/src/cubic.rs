//! Real roots of cubic polynomials with multiplicity detection.

use std::f64::consts::PI;

/// Relative discriminant size below which two roots are reported as one.
const MERGE_TOL: f64 = 1e-13;

/// Sorted real roots with their multiplicities.
#[derive(Clone, Debug, PartialEq)]
pub struct RealRoots {
    pub values: Vec<f64>,
    pub multiplicity: Vec<u8>,
}

impl RealRoots {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// True when every root is simple.
    pub fn all_simple(&self) -> bool {
        self.multiplicity.iter().all(|&m| m == 1)
    }
}

/// Roots of `t^3 + p t + q = 0`.
pub fn depressed_roots(p: f64, q: f64) -> RealRoots {
    depressed_roots_floored(p, q, 0.0, 0.0)
}

/// As [`depressed_roots`], treating `|p| <= p_floor` and `|q| <= q_floor` as
/// cancellation noise, i.e. exact zeros.
pub fn depressed_roots_floored(p: f64, q: f64, p_floor: f64, q_floor: f64) -> RealRoots {
    let p = if p.abs() <= p_floor { 0.0 } else { p };
    let q = if q.abs() <= q_floor { 0.0 } else { q };
    let scale = 4.0 * p.abs().powi(3) + 27.0 * q * q;
    let disc = -(4.0 * p * p * p + 27.0 * q * q);
    if scale == 0.0 {
        return RealRoots { values: vec![0.0], multiplicity: vec![3] };
    }
    if disc.abs() <= MERGE_TOL * scale {
        if p.abs() <= 1e-12 * (1.0 + q.abs().cbrt()) {
            return RealRoots { values: vec![(-q).cbrt()], multiplicity: vec![3] };
        }
        let double = -1.5 * q / p;
        let simple = 3.0 * q / p;
        return if double < simple {
            RealRoots { values: vec![double, simple], multiplicity: vec![2, 1] }
        } else {
            RealRoots { values: vec![simple, double], multiplicity: vec![1, 2] }
        };
    }
    let mut values = if disc > 0.0 {
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        vec![
            m * theta.cos(),
            m * (theta - 2.0 * PI / 3.0).cos(),
            m * (theta - 4.0 * PI / 3.0).cos(),
        ]
    } else {
        let s = (q * q / 4.0 + p * p * p / 27.0).sqrt();
        // Pick the cancellation-free branch, recover the other from the product.
        let a = (-q / 2.0 - q.signum() * s).cbrt();
        let b = if a == 0.0 { 0.0 } else { -p / (3.0 * a) };
        vec![a + b]
    };
    for v in values.iter_mut() {
        *v = polish(|t| t * t * t + p * t + q, |t| 3.0 * t * t + p, *v);
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let multiplicity = vec![1; values.len()];
    RealRoots { values, multiplicity }
}

/// Roots of `a u^3 + b u^2 + c u + d = 0`; degree drops are handled.
pub fn cubic_roots(a: f64, b: f64, c: f64, d: f64) -> RealRoots {
    let lead = a.abs().max(b.abs()).max(c.abs()).max(d.abs());
    if lead == 0.0 {
        return RealRoots { values: vec![], multiplicity: vec![] };
    }
    if a.abs() <= 1e-15 * lead {
        return quadratic_roots(b, c, d);
    }
    let (b, c, d) = (b / a, c / a, d / a);
    let shift = b / 3.0;
    let p = c - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    let p_floor = 1e-12 * (c.abs() + b * b / 3.0);
    let q_floor = 1e-12 * (2.0 * (b * b * b).abs() / 27.0 + (b * c).abs() / 3.0 + d.abs());
    let mut roots = depressed_roots_floored(p, q, p_floor, q_floor);
    for (v, &m) in roots.values.iter_mut().zip(&roots.multiplicity) {
        *v -= shift;
        if m == 1 {
            *v = polish(
                |u| ((u + b) * u + c) * u + d,
                |u| (3.0 * u + 2.0 * b) * u + c,
                *v,
            );
        }
    }
    roots
}

fn quadratic_roots(a: f64, b: f64, c: f64) -> RealRoots {
    if a == 0.0 {
        return if b == 0.0 {
            RealRoots { values: vec![], multiplicity: vec![] }
        } else {
            RealRoots { values: vec![-c / b], multiplicity: vec![1] }
        };
    }
    let disc = b * b - 4.0 * a * c;
    if disc.abs() <= MERGE_TOL * (b * b + (4.0 * a * c).abs()) {
        return RealRoots { values: vec![-b / (2.0 * a)], multiplicity: vec![2] };
    }
    if disc < 0.0 {
        return RealRoots { values: vec![], multiplicity: vec![] };
    }
    let qq = -0.5 * (b + b.signum() * disc.sqrt());
    let mut values = vec![qq / a, c / qq];
    values.sort_by(|x, y| x.partial_cmp(y).unwrap());
    RealRoots { values, multiplicity: vec![1, 1] }
}

/// Newton refinement that only accepts steps reducing the residual.
fn polish(f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64, mut x: f64) -> f64 {
    let mut fx = f(x);
    for _ in 0..4 {
        let d = df(x);
        if d == 0.0 || fx == 0.0 {
            break;
        }
        let nx = x - fx / d;
        let nf = f(nx);
        if nf.abs() < fx.abs() {
            x = nx;
            fx = nf;
        } else {
            break;
        }
    }
    x
}
