//! Independent oracles for the unfolding geometry.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wcburst::unfolding::*;

/// Closed-form pitchfork: the four conditions reduce to `9u³ + u + 2β = 0`,
/// then `γ = 3u + 1`, `λ = −u + γu/2` and `α` from `F = 0`.
fn pitchfork_oracle(beta: f64) -> (f64, f64, f64, f64) {
    let mut lo = -10.0;
    let mut hi = 10.0;
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if 9.0 * mid * mid * mid + mid + 2.0 * beta > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let u = 0.5 * (lo + hi);
    let gamma = 3.0 * u + 1.0;
    let lambda = -u + 0.5 * gamma * u;
    let l = lambda + u;
    let alpha = -u * u * u - l * l + beta * u + gamma * l * u;
    (lambda, alpha, gamma, u)
}

#[test]
fn pitchfork_matches_closed_form() {
    for k in 0..=20 {
        let beta = 0.25 + 0.01 * k as f64;
        let pf = find_pitchfork(beta).unwrap();
        let (l, a, g, u) = pitchfork_oracle(beta);
        assert!((pf.lambda - l).abs() < 1e-10, "beta {beta}");
        assert!((pf.alpha - a).abs() < 1e-10, "beta {beta}");
        assert!((pf.gamma - g).abs() < 1e-10, "beta {beta}");
        assert!((pf.u - u).abs() < 1e-10, "beta {beta}");
        assert!(pitchfork_residual_norm(&pf, beta) <= 1e-11);
        assert!(eval_f(pf.u, &pf.params(beta)).abs() <= 1e-11);
    }
}

#[test]
fn pitchfork_golden_at_shifted_beta() {
    // Frozen from the closed-form oracle.
    let pf = find_pitchfork(1.0 / 3.0 + 0.1).unwrap();
    assert!((pf.u - -0.3785295400037846).abs() < 1e-12);
    assert!((pf.lambda - 0.4041916889851074).abs() < 1e-12);
    assert!((pf.alpha - -0.10913346292653564).abs() < 1e-12);
    assert!((pf.gamma - -0.13558862001135363).abs() < 1e-12);
}

#[test]
fn pitchfork_root_is_triple() {
    let beta = 1.0 / 3.0 + 0.1;
    let pf = find_pitchfork(beta).unwrap();
    let fp = fixed_points(&pf.params(beta), 0.0);
    assert_eq!(fp.roots.len(), 1);
    assert_eq!(fp.multiplicity, vec![3]);
}

/// Roots by sign changes of `g` on a uniform grid, refined by bisection.
fn grid_oracle(p: &UnfoldingParams, w: f64, z: f64, n: usize) -> Vec<f64> {
    let q = p.with_z(z);
    let g = |u: f64| eval_gwcusp(u, &UnfoldingParams { lambda: q.lambda + w, ..q });
    let h = 20.0 / n as f64;
    let mut out = Vec::new();
    let mut u0 = -10.0;
    let mut g0 = g(u0);
    for i in 1..=n {
        let u1 = -10.0 + h * i as f64;
        let g1 = g(u1);
        if (g0 > 0.0) != (g1 > 0.0) {
            out.push(wcburst::numerics::bisect(g, u0, u1));
        }
        u0 = u1;
        g0 = g1;
    }
    out
}

#[test]
fn solve_cubic_agrees_with_dense_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut checked = 0;
    while checked < 1000 {
        let p = UnfoldingParams::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..2.0),
            rng.gen_range(-1.0..1.0),
        );
        let w = rng.gen_range(-1.0..1.0);
        let z = rng.gen_range(-1.0..1.0);
        let s = solve_cubic(w, z, &p);
        // Near-tangent roots are invisible to a sign-change grid.
        if s.at_fold() || s.roots.windows(2).any(|r| r[1] - r[0] < 1e-3) {
            continue;
        }
        let oracle = grid_oracle(&p, w, z, 1_000_000);
        assert_eq!(oracle.len(), s.roots.len(), "{p:?} w={w} z={z}");
        for (a, b) in oracle.iter().zip(&s.roots) {
            assert!((a - b).abs() <= 1e-6);
        }
        checked += 1;
    }
}

#[test]
fn classify_reports_fold_pattern() {
    let p = UnfoldingParams::new(1.0 / 3.0, -2.0 / 27.0 - 0.01, 1.0 / 3.0, 0.0);
    let d = classify_diagram(&p, 0.0, None).unwrap();
    assert_eq!(d.class_id, DiagramKind::MirroredHysteresis);
    assert_eq!(d.fold_count, 4);
    // Root counts between folds: 1-3-1-3-1.
    let f = &d.fold_w_values;
    let probes = [f[0] - 0.1, 0.5 * (f[0] + f[1]), 0.5 * (f[1] + f[2]), 0.5 * (f[2] + f[3]), f[3] + 0.1];
    let counts: Vec<usize> = probes.iter().map(|&w| solve_cubic(w, 0.0, &p).roots.len()).collect();
    assert_eq!(counts, vec![1, 3, 1, 3, 1]);
    for &w in f {
        assert!(solve_cubic(w, 0.0, &p).at_fold());
    }
    let labels: Vec<String> = probes
        .iter()
        .flat_map(|&w| d.label(&solve_cubic(w, 0.0, &p)))
        .map(|l| l.to_string())
        .collect();
    assert_eq!(labels, ["down-", "down-", "mid-", "up", "up", "down+", "mid+", "up", "down+"]);
}

#[test]
fn class3_has_isola() {
    let p = UnfoldingParams::new(0.5, -0.02, 1.0 / 3.0, 0.0);
    let d = classify_diagram(&p, 0.0, None).unwrap();
    assert_eq!(d.class_id, DiagramKind::Class3);
    let f = &d.fold_w_values;
    assert_eq!(solve_cubic(0.5 * (f[0] + f[1]), 0.0, &p).roots.len(), 3);
    assert_eq!(solve_cubic(f[1] + 0.1, 0.0, &p).roots.len(), 1);
}

#[test]
fn symmetric_gaps_from_depressed_cubic() {
    // At λ + w = 0 the slice is −u³ + βu − α̃ with explicit trigonometric roots.
    let (beta, at) = (1.0 / 3.0, -0.05);
    let p = UnfoldingParams::new(0.2, at, beta, 0.0);
    let m = 2.0 * (beta / 3.0f64).sqrt();
    let theta = (3.0 * at / (-beta * m)).acos() / 3.0;
    let mut r: Vec<f64> = (0..3)
        .map(|k| m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos())
        .collect();
    r.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let (l1, l2, a) = hausdorff_gaps(&p, -0.2).unwrap();
    assert!((l1 - (r[2] - r[1])).abs() < 1e-13);
    assert!((l2 - (r[1] - r[0])).abs() < 1e-13);
    assert!((a - (r[1] - r[0]) / (r[2] - r[0])).abs() < 1e-13);
}

fn params() -> impl Strategy<Value = UnfoldingParams> {
    (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64)
        .prop_map(|(l, a, b, g)| UnfoldingParams::new(l, a, b, g))
}

proptest! {
    #[test]
    fn root_residuals_are_small(p in params(), w in -2.0..2.0f64, z in -2.0..2.0f64) {
        let s = solve_cubic(w, z, &p);
        prop_assert!(!s.roots.is_empty());
        prop_assert!(s.roots.windows(2).all(|r| r[0] < r[1]));
        let q = UnfoldingParams { lambda: p.lambda + w, ..p.with_z(z) };
        for &r in &s.roots {
            prop_assert!(eval_gwcusp(r, &q).abs() <= 1e-10 * (1.0 + r.abs().powi(3)));
        }
    }

    #[test]
    fn rest_function_is_nullcline_restriction(p in params(), u in -2.0..2.0f64) {
        let lhs = eval_f(u, &p);
        let rhs = eval_gwcusp(u, &UnfoldingParams { lambda: p.lambda + u, ..p });
        let scale = 1.0 + u.abs().powi(3) + (p.lambda + u).powi(2) + (p.beta * u).abs()
            + (p.gamma * u * (p.lambda + u)).abs() + p.alpha.abs();
        prop_assert!((lhs - rhs).abs() <= 1e-14 * scale);
    }

    #[test]
    fn even_in_lambda_when_gamma_vanishes(l in -2.0..2.0f64, a in -1.0..1.0f64, b in -1.0..2.0f64, w in -1.0..1.0f64) {
        let p = UnfoldingParams::new(l, a, b, 0.0);
        let mirror = -2.0 * l - w;
        let s1 = solve_cubic(w, 0.0, &p);
        let s2 = solve_cubic(mirror, 0.0, &p);
        prop_assert_eq!(s1.roots.len(), s2.roots.len());
        for (x, y) in s1.roots.iter().zip(&s2.roots) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn fold_crossings_change_count_by_two(p in params(), z in -1.0..1.0f64) {
        if let Ok(d) = classify_diagram(&p, z, None) {
            if d.class_id != DiagramKind::TranscriticalDegenerate {
                for &w in &d.fold_w_values {
                    let left = solve_cubic(w - 1e-5, z, &p).roots.len() as i64;
                    let right = solve_cubic(w + 1e-5, z, &p).roots.len() as i64;
                    prop_assert_eq!((left - right).abs(), 2);
                }
            }
        }
    }

    #[test]
    fn fixed_point_residuals(p in params(), z in -1.0..1.0f64) {
        let fp = fixed_points(&p, z);
        for &r in &fp.roots {
            prop_assert!(eval_f(r, &p.with_z(z)).abs() <= 1e-10 * (1.0 + r.abs().powi(3)));
        }
    }
}
