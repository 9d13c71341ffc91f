//! Solver hygiene, equilibria and record I/O on small grids.

use proptest::prelude::*;
use wcburst::numerics::{Dopri, OdeOptions};
use wcburst::pde::*;
use wcburst::scales::ScaleParams;
use wcburst::unfolding::{eval_gwcusp, UnfoldingParams};

fn fig8(n: usize, t_end: f64) -> SimConfig {
    let spec = figure_spec(FigureId::Fig8).unwrap();
    let mut c = spec.panels[0].at_resolution(n);
    c.t_end = t_end;
    c.perturbation.t_hi = c.perturbation.t_hi.min(t_end);
    c
}

fn bits(r: &SpaceTimeRecord) -> Vec<u64> {
    r.frames.iter().flat_map(|f| f.u.iter().chain(&f.w).chain(&f.z)).map(|v| v.to_bits()).collect()
}

fn wavy(n: usize, phase: f64) -> Vec<f64> {
    (0..n).map(|i| 0.4 * (0.37 * i as f64 + phase).sin() - 0.2).collect()
}

#[test]
fn fig8_rest_is_frozen() {
    let c = fig8(100, 1.0);
    let u = homogeneous_rest(&c.params, &c.scales).unwrap();
    assert_eq!(u, -0.47325742466334025);
    let q = UnfoldingParams { lambda: c.params.lambda + u, alpha: c.params.alpha + u, ..c.params };
    assert!(eval_gwcusp(u, &q).abs() < 1e-14);
}

#[test]
fn rest_state_step_is_identity() {
    let c = fig8(64, 1.0);
    let r = homogeneous_rest(&c.params, &c.scales).unwrap();
    let y = State::constant(64, r);
    let mut st = Stepper::new(&c);
    // Outside the forcing window.
    let out = st.step(&y, 0.5, 1e-4).unwrap().state;
    for v in out.u.iter().chain(&out.w).chain(&out.z) {
        assert!((v - r).abs() <= 1e-13, "{v} vs {r}");
    }
}

#[test]
fn zero_amplitude_stays_at_rest() {
    let mut c = fig8(100, 1.0);
    c.perturbation.amplitude = 0.0;
    let rec = simulate(&c).unwrap();
    let r = homogeneous_rest(&c.params, &c.scales).unwrap();
    for f in &rec.frames {
        for v in f.u.iter().chain(&f.w).chain(&f.z) {
            assert!((v - r).abs() < 1e-8);
        }
    }
    let rep = classify_pattern(&rec);
    assert_eq!(rep.kind, PatternKind::Rest);
    assert!(rep.stationarity < 1e-10, "{}", rep.stationarity);
    assert!(rep.wave_speed.is_none());
    assert!(matches!(measure_wave_speed(&rec), Err(PdeError::NoFront)));
}

fn diffusion_only(n: usize, d: [f64; 3]) -> SimConfig {
    let mut c = fig8(n, 1.0);
    c.reaction = false;
    c.perturbation.amplitude = 0.0;
    c.scales.d_u = d[0];
    c.scales.d_w = d[1];
    c.scales.d_z = d[2];
    c
}

fn masses(s: &State, dx: f64) -> [f64; 3] {
    [s.u.iter().sum::<f64>() * dx, s.w.iter().sum::<f64>() * dx, s.z.iter().sum::<f64>() * dx]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn neumann_diffusion_conserves_mass(
        phase in 0.0..6.0f64,
        du in 1e-6..1e-2f64,
        dw in 0.0..1.0f64,
        dz in 0.0..10.0f64,
        dt in 1e-5..1e-2f64,
    ) {
        let n = 80;
        let c = diffusion_only(n, [du, dw, dz]);
        let dx = c.grid.dx();
        let mut y = State { u: wavy(n, phase), w: wavy(n, phase + 1.0), z: wavy(n, phase + 2.0) };
        let mut st = Stepper::new(&c);
        for k in 0..10 {
            let m0 = masses(&y, dx);
            y = st.step(&y, k as f64 * dt, dt).unwrap().state;
            let m1 = masses(&y, dx);
            for (a, b) in m0.iter().zip(&m1) {
                prop_assert!((a - b).abs() <= 1e-12, "{a} -> {b}");
            }
        }
    }

    #[test]
    fn homogeneous_states_stay_homogeneous(v in -1.5..1.5f64) {
        let c = fig8(32, 1.0);
        let y = State::constant(32, v);
        let out = Stepper::new(&c).step(&y, 0.5, 1e-5).map(|s| s.state);
        if let Ok(out) = out {
            for f in [&out.u, &out.w, &out.z] {
                prop_assert!(f.iter().all(|x| (x - f[0]).abs() <= 1e-14));
            }
        }
    }
}

#[test]
fn thread_count_does_not_change_the_record() {
    let c = fig8(3000, 0.3);
    let a = simulate_with_threads(&c, 1).unwrap();
    let b = simulate_with_threads(&c, 4).unwrap();
    assert_eq!(a.times, b.times);
    assert_eq!(a.solver_stats, b.solver_stats);
    assert!(bits(&a) == bits(&b));
}

/// Without spatial coupling every cell is the three-ODE reaction system.
#[test]
fn uncoupled_cells_follow_the_reaction_odes() {
    let n = 16;
    let mut c = fig8(n, 2.0);
    c.scales = ScaleParams { tau_u: 0.01, tau_w: 0.1, tau_z: 1.0, d_u: 1e-300, d_w: 0.0, d_z: 0.0 };
    c.perturbation.amplitude = 0.0;
    c.tol = 1e-8;
    c.dt_max = 1e-4;
    c.dt_out = 0.1;
    let y0 = State { u: wavy(n, 0.0), w: wavy(n, 1.0), z: wavy(n, 2.0) };
    c.initial_state = InitialState::Custom { u: y0.u.clone(), w: y0.w.clone(), z: y0.z.clone() };
    let rec = simulate(&c).unwrap();
    let (p, s) = (c.params, c.scales);
    let rhs = |_: f64, y: &[f64; 3]| {
        let q = UnfoldingParams { lambda: p.lambda + y[1], alpha: p.alpha + y[2], ..p };
        Ok::<_, ()>([eval_gwcusp(y[0], &q) / s.tau_u, (y[0] - y[1]) / s.tau_w, (y[0] - y[2]) / s.tau_z])
    };
    let mut worst = 0.0f64;
    for i in [0, 5, 11] {
        let mut y = [y0.u[i], y0.w[i], y0.z[i]];
        let mut t = 0.0;
        for (k, &tk) in rec.times.iter().enumerate().skip(1) {
            let mut ode = Dopri::new(rhs, OdeOptions { rtol: 1e-12, atol: 1e-13, ..Default::default() });
            y = ode.integrate(t, y, tk, &[], |_, _| {}).unwrap().state().1;
            t = tk;
            let f = &rec.frames[k];
            for (a, b) in y.iter().zip([f.u[i], f.w[i], f.z[i]]) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    assert!(worst < 1e-5, "max deviation {worst:e}");
}

#[test]
fn mirrored_forcing_mirrors_the_speed() {
    let c = fig8(500, 1.5);
    let mut m = c.clone();
    m.perturbation.x_lo = c.grid.x1 - c.perturbation.x_hi;
    m.perturbation.x_hi = c.grid.x1 - c.perturbation.x_lo;
    let (a, _) = measure_wave_speed(&simulate(&c).unwrap()).unwrap();
    let (b, _) = measure_wave_speed(&simulate(&m).unwrap()).unwrap();
    assert!(a < 0.0, "rightward front has c < 0, got {a}");
    assert!((a + b).abs() <= 1e-6 * a.abs(), "{a} vs {b}");
}

#[test]
fn identity_override_repeats_the_run() {
    let c = fig8(200, 0.5);
    let (a, b) = modulation_run(&c, &Overrides::default()).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn invalid_configs_are_rejected() {
    let c = fig8(100, 1.0);
    let mut small = c.clone();
    small.grid.n = 8;
    let mut late = c.clone();
    late.perturbation.t_hi = 2.0;
    let mut outside = c.clone();
    outside.perturbation.x_lo = -1.0;
    let mut neg = c.clone();
    neg.t_end = 0.0;
    for bad in [small, late, outside, neg] {
        assert!(matches!(simulate(&bad), Err(PdeError::InvalidConfig(_))));
    }
}

#[test]
fn record_files_round_trip() {
    let c = fig8(64, 0.05);
    let rec = simulate(&c).unwrap();
    let dir = tempfile::tempdir().unwrap();
    save_record(&rec, dir.path(), "run").unwrap();
    let back = load_record(dir.path(), "run").unwrap();
    assert_eq!(back.times, rec.times);
    assert_eq!(back.config, rec.config);
    assert!(bits(&back) == bits(&rec));
    let raw = std::fs::read(dir.path().join("run.u.f64")).unwrap();
    assert_eq!(raw.len(), rec.frames.len() * 64 * 8);
    assert_eq!(f64::from_le_bytes(raw[..8].try_into().unwrap()), rec.frames[0].u[0]);

    let mut csv = Vec::new();
    write_record_csv(&rec, &mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert_eq!(text.lines().count(), 1 + rec.frames.len() * 64);
    let last = text.lines().last().unwrap();
    let u: f64 = last.split(',').nth(2).unwrap().parse().unwrap();
    assert_eq!(u, rec.frames.last().unwrap().u[63]);

    let mut pgm = Vec::new();
    write_pgm(&rec, &mut pgm).unwrap();
    let header = format!("P5\n64 {}\n255\n", rec.frames.len());
    assert!(pgm.starts_with(header.as_bytes()));
    assert_eq!(pgm.len(), header.len() + 64 * rec.frames.len());
    assert!(pgm[header.len()..].contains(&255));
}

#[test]
fn output_times_follow_the_cadence() {
    let rec = simulate(&fig8(64, 0.1)).unwrap();
    assert_eq!(rec.times.len(), 21);
    assert!(rec.times.windows(2).all(|w| w[1] > w[0]));
    assert!((rec.times[20] - 0.1).abs() < 1e-15);
    assert!(rec.frames.iter().all(|f| f.u.len() == 64));
}

#[test]
fn shipped_figure_configs_match_the_pitchfork_solver() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for id in FigureId::ALL {
        let text = std::fs::read_to_string(dir.join(format!("{}.json", id.name()))).unwrap();
        let shipped: FigureSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(shipped, figure_spec(id).unwrap(), "{}", id.name());
        for p in &shipped.panels {
            let (params, pf) = p.recipe.params().unwrap();
            assert_eq!(params, p.config.params);
            assert_eq!(pf, p.pitchfork);
        }
    }
}
