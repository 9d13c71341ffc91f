//! Method-of-lines simulator for the three-component model on an interval
//! with no-flux boundaries, plus pattern measurement on its output.

mod io;
mod pattern;
mod figures;

pub use figures::*;
pub use io::*;
pub use pattern::*;

use nalgebra::Matrix3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scales::ScaleParams;
use crate::unfolding::{eval_gwcusp, homogeneous_roots, UnfoldingError, UnfoldingParams};

/// Blow-up detection box for every field.
pub const BOUNDING_BOX: f64 = 100.0;
const CHUNK: usize = 1024;

#[derive(Debug, Error)]
pub enum PdeError {
    #[error("no homogeneous rest state is stable")]
    NoStableRest,
    #[error("step rejected: {0}")]
    StepRejected(Rejection),
    #[error("solution left the bounding box at t = {t}")]
    BlowUp { t: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("no front to track")]
    NoFront,
    #[error(transparent)]
    Unfolding(#[from] UnfoldingError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Rejection {
    /// Predictor and corrector differ by more than the tolerance.
    Error(f64),
    OutOfBox,
}

impl std::fmt::Display for Rejection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Rejection::Error(e) => write!(f, "local error {e:e}"),
            Rejection::OutOfBox => write!(f, "state outside |·| <= {BOUNDING_BOX}"),
        }
    }
}

/// Cell-centred uniform grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub x0: f64,
    pub x1: f64,
    pub n: usize,
}

impl Grid1D {
    pub fn new(x0: f64, x1: f64, n: usize) -> Result<Self, PdeError> {
        let g = Self { x0, x1, n };
        g.validate()?;
        Ok(g)
    }

    fn validate(&self) -> Result<(), PdeError> {
        if self.n < 16 || !(self.x1 > self.x0) {
            return Err(PdeError::InvalidConfig(format!("grid needs n >= 16 and x1 > x0, got {self:?}")));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        (self.x1 - self.x0) / self.n as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + (i as f64 + 0.5) * self.dx()
    }

    /// Nearest cell to `x`, clamped to the grid.
    pub fn cell(&self, x: f64) -> usize {
        (((x - self.x0) / self.dx()).floor().max(0.0) as usize).min(self.n - 1)
    }
}

/// Source `amplitude · I{x_lo < x < x_hi} · I{t_lo < t < t_hi}` added to the
/// `u` equation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub x_lo: f64,
    pub x_hi: f64,
    pub t_lo: f64,
    pub t_hi: f64,
    #[serde(default = "unit")]
    pub amplitude: f64,
}

fn unit() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

fn default_tol() -> f64 {
    1e-3
}

impl Perturbation {
    fn active(&self, t: f64) -> bool {
        self.amplitude != 0.0 && t > self.t_lo && t < self.t_hi
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum InitialState {
    #[default]
    HomogeneousRest,
    Custom { u: Vec<f64>, w: Vec<f64>, z: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub grid: Grid1D,
    pub scales: ScaleParams,
    pub params: UnfoldingParams,
    pub t_end: f64,
    pub dt_out: f64,
    pub dt_max: f64,
    pub perturbation: Perturbation,
    #[serde(default)]
    pub initial_state: InitialState,
    /// Bound on the predictor–corrector difference per step.
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Off leaves pure diffusion, for conservation checks.
    #[serde(default = "yes")]
    pub reaction: bool,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), PdeError> {
        self.grid.validate()?;
        let bad = |m: &str| Err(PdeError::InvalidConfig(m.into()));
        let s = &self.scales;
        if !(s.tau_u > 0.0 && s.tau_w > 0.0 && s.tau_z > 0.0 && s.d_u > 0.0 && s.d_w >= 0.0 && s.d_z >= 0.0) {
            return bad("time constants and D_u must be positive, D_w and D_z non-negative");
        }
        if !(self.t_end > 0.0 && self.dt_out > 0.0 && self.dt_max > 0.0 && self.tol > 0.0) {
            return bad("t_end, dt_out, dt_max and tol must be positive");
        }
        let p = &self.perturbation;
        let inside = p.x_lo >= self.grid.x0 && p.x_hi <= self.grid.x1 && p.x_lo <= p.x_hi;
        if !inside || p.t_lo < 0.0 || p.t_hi > self.t_end || p.t_lo > p.t_hi {
            return bad("perturbation window must lie inside the domain and [0, t_end]");
        }
        if let InitialState::Custom { u, w, z } = &self.initial_state {
            if u.len() != self.grid.n || w.len() != self.grid.n || z.len() != self.grid.n {
                return bad("custom initial fields must match the grid size");
            }
        }
        Ok(())
    }
}

/// Fields on the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub u: Vec<f64>,
    pub w: Vec<f64>,
    pub z: Vec<f64>,
}

impl State {
    pub fn constant(n: usize, v: f64) -> Self {
        Self { u: vec![v; n], w: vec![v; n], z: vec![v; n] }
    }

    fn fields(&self) -> [&Vec<f64>; 3] {
        [&self.u, &self.w, &self.z]
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverStats {
    pub steps: u64,
    pub rejected: u64,
    pub linear_solves: u64,
}

/// Jacobian of the space-independent reaction system at a homogeneous state.
fn reaction_jacobian(p: &UnfoldingParams, s: &ScaleParams, u: f64) -> Matrix3<f64> {
    let l = p.lambda + u;
    Matrix3::new(
        (-3.0 * u * u + p.beta + p.gamma * l) / s.tau_u,
        (-2.0 * l + p.gamma * u) / s.tau_u,
        -1.0 / s.tau_u,
        1.0 / s.tau_w,
        -1.0 / s.tau_w,
        0.0,
        1.0 / s.tau_z,
        0.0,
        -1.0 / s.tau_z,
    )
}

/// Lowest linearly stable homogeneous equilibrium `u* = w* = z*`.
pub fn homogeneous_rest(p: &UnfoldingParams, s: &ScaleParams) -> Result<f64, PdeError> {
    let roots = homogeneous_roots(p, 0.0);
    for (&u, &m) in roots.values.iter().zip(&roots.multiplicity) {
        if m > 1 {
            continue;
        }
        let leading = reaction_jacobian(p, s, u)
            .complex_eigenvalues()
            .iter()
            .map(|e| e.re)
            .fold(f64::NEG_INFINITY, f64::max);
        if leading < 0.0 {
            return Ok(u);
        }
    }
    Err(PdeError::NoStableRest)
}

/// Solves `(I − k Δ_N) x = b` in place, `Δ_N` the Neumann Laplacian with
/// ghost-cell reflection. Columns of the matrix sum to one, so `Σx = Σb`.
fn solve_neumann(k: f64, b: &mut [f64], c: &mut [f64]) {
    let n = b.len();
    let diag = |i: usize| if i == 0 || i == n - 1 { 1.0 + k } else { 1.0 + 2.0 * k };
    let mut m = diag(0);
    c[0] = -k / m;
    b[0] /= m;
    for i in 1..n {
        m = diag(i) + k * c[i - 1];
        c[i] = -k / m;
        b[i] = (b[i] + k * b[i - 1]) / m;
    }
    for i in (0..n - 1).rev() {
        b[i] -= c[i] * b[i + 1];
    }
}

/// One IMEX Heun step: explicit reaction with a corrector pass, implicit
/// diffusion, plus the predictor–corrector difference.
pub struct Stepper<'a> {
    cfg: &'a SimConfig,
    source: Vec<f64>,
    r0: State,
    r1: State,
    scratch: Vec<f64>,
}

pub struct Stepped {
    pub state: State,
    pub error: f64,
    pub solves: u64,
}

impl<'a> Stepper<'a> {
    pub fn new(cfg: &'a SimConfig) -> Self {
        let g = cfg.grid;
        let p = cfg.perturbation;
        let source = (0..g.n)
            .map(|i| {
                let x = g.x(i);
                if x > p.x_lo && x < p.x_hi {
                    p.amplitude
                } else {
                    0.0
                }
            })
            .collect();
        Self { cfg, source, r0: State::constant(g.n, 0.0), r1: State::constant(g.n, 0.0), scratch: vec![0.0; g.n] }
    }

    fn reaction(cfg: &SimConfig, source: &[f64], forced: bool, y: &State, out: &mut State) {
        let (p, s) = (&cfg.params, &cfg.scales);
        let on = cfg.reaction;
        out.u
            .par_chunks_mut(CHUNK)
            .zip(out.w.par_chunks_mut(CHUNK))
            .zip(out.z.par_chunks_mut(CHUNK))
            .enumerate()
            .for_each(|(c, ((ru, rw), rz))| {
                let off = c * CHUNK;
                for j in 0..ru.len() {
                    let i = off + j;
                    let (u, w, z) = (y.u[i], y.w[i], y.z[i]);
                    let mut f = if on {
                        let q = UnfoldingParams { lambda: p.lambda + w, alpha: p.alpha + z, ..*p };
                        eval_gwcusp(u, &q)
                    } else {
                        0.0
                    };
                    if forced {
                        f += source[i];
                    }
                    ru[j] = f / s.tau_u;
                    rw[j] = if on { (u - w) / s.tau_w } else { 0.0 };
                    rz[j] = if on { (u - z) / s.tau_z } else { 0.0 };
                }
            });
    }

    fn diffuse(&mut self, dt: f64, x: &mut State) -> u64 {
        let s = &self.cfg.scales;
        let dx2 = self.cfg.grid.dx().powi(2);
        let ks = [dt * s.d_u / (s.tau_u * dx2), dt * s.d_w / (s.tau_w * dx2), dt * s.d_z / (s.tau_z * dx2)];
        let mut solves = 0;
        for (f, k) in [&mut x.u, &mut x.w, &mut x.z].into_iter().zip(ks) {
            if k > 0.0 {
                solve_neumann(k, f, &mut self.scratch);
                solves += 1;
            }
        }
        solves
    }

    /// Advance `y` from `t` by `dt`. The source is frozen at the step
    /// midpoint; the caller aligns steps with the forcing window edges.
    pub fn step(&mut self, y: &State, t: f64, dt: f64) -> Result<Stepped, PdeError> {
        let forced = self.cfg.perturbation.active(t + 0.5 * dt);
        let n = y.u.len();
        Self::reaction(self.cfg, &self.source, forced, y, &mut self.r0);
        let mut pred = State::constant(n, 0.0);
        for (out, (a, r)) in [&mut pred.u, &mut pred.w, &mut pred.z].into_iter().zip(y.fields().into_iter().zip(self.r0.fields())) {
            out.par_iter_mut().zip(a.par_iter().zip(r.par_iter())).for_each(|(o, (a, r))| *o = a + dt * r);
        }
        let mut solves = self.diffuse(dt, &mut pred);
        Self::reaction(self.cfg, &self.source, forced, &pred, &mut self.r1);
        let mut next = State::constant(n, 0.0);
        let (r0, r1) = (&self.r0, &self.r1);
        for (out, (a, (r, s))) in
            [&mut next.u, &mut next.w, &mut next.z].into_iter().zip(y.fields().into_iter().zip(r0.fields().into_iter().zip(r1.fields())))
        {
            out.par_iter_mut()
                .zip(a.par_iter().zip(r.par_iter().zip(s.par_iter())))
                .for_each(|(o, (a, (r, s)))| *o = a + 0.5 * dt * (r + s));
        }
        solves += self.diffuse(dt, &mut next);
        let mut error = 0.0f64;
        let mut finite = true;
        for (a, b) in next.fields().into_iter().zip(pred.fields()) {
            let (e, ok) = a
                .par_iter()
                .zip(b.par_iter())
                .map(|(a, b)| ((a - b).abs(), a.is_finite() && a.abs() <= BOUNDING_BOX))
                .reduce(|| (0.0, true), |x, y| (x.0.max(y.0), x.1 && y.1));
            error = error.max(e);
            finite &= ok;
        }
        if !finite {
            return Err(PdeError::StepRejected(Rejection::OutOfBox));
        }
        if error > self.cfg.tol {
            return Err(PdeError::StepRejected(Rejection::Error(error)));
        }
        Ok(Stepped { state: next, error, solves })
    }
}

/// Gridded history of all three fields.
#[derive(Clone, Debug, PartialEq)]
pub struct SpaceTimeRecord {
    pub times: Vec<f64>,
    pub frames: Vec<State>,
    pub config: SimConfig,
    pub solver_stats: SolverStats,
}

impl SpaceTimeRecord {
    pub fn grid(&self) -> Grid1D {
        self.config.grid
    }
}

pub fn initial_state(cfg: &SimConfig) -> Result<State, PdeError> {
    Ok(match &cfg.initial_state {
        InitialState::HomogeneousRest => State::constant(cfg.grid.n, homogeneous_rest(&cfg.params, &cfg.scales)?),
        InitialState::Custom { u, w, z } => State { u: u.clone(), w: w.clone(), z: z.clone() },
    })
}

/// Run `cfg` on the global rayon pool.
pub fn simulate(cfg: &SimConfig) -> Result<SpaceTimeRecord, PdeError> {
    cfg.validate()?;
    let mut y = initial_state(cfg)?;
    let mut stepper = Stepper::new(cfg);
    let mut stats = SolverStats::default();
    let n_out = (cfg.t_end / cfg.dt_out + 1e-9).floor() as usize;
    let mut out_times: Vec<f64> = (0..=n_out).map(|k| k as f64 * cfg.dt_out).collect();
    if cfg.t_end - out_times[n_out] > 1e-12 * cfg.t_end {
        out_times.push(cfg.t_end);
    }
    let mut stops: Vec<f64> = out_times[1..].to_vec();
    let pert = cfg.perturbation;
    for edge in [pert.t_lo, pert.t_hi] {
        if edge > 0.0 && edge < cfg.t_end {
            stops.push(edge);
        }
    }
    stops.sort_by(f64::total_cmp);
    stops.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * cfg.t_end);

    let dt_min = 1e-9 * cfg.scales.tau_u;
    let mut dt = (cfg.scales.tau_u / 10.0).min(cfg.dt_max);
    let mut t = 0.0;
    let mut times = vec![0.0];
    let mut frames = vec![y.clone()];
    let mut next_out = 1;
    for &stop in &stops {
        while t < stop {
            let h = dt.min(stop - t);
            let landing = h == stop - t;
            match stepper.step(&y, t, h) {
                Ok(s) => {
                    stats.steps += 1;
                    stats.linear_solves += s.solves;
                    y = s.state;
                    t = if landing { stop } else { t + h };
                    if h == dt {
                        let grow = if s.error > 0.0 { 0.9 * (cfg.tol / s.error).sqrt() } else { 2.0 };
                        dt = (dt * grow.clamp(0.2, 2.0)).min(cfg.dt_max);
                    }
                }
                Err(PdeError::StepRejected(_)) => {
                    stats.rejected += 1;
                    dt = 0.5 * h;
                    if dt < dt_min {
                        return Err(PdeError::BlowUp { t });
                    }
                }
                Err(e) => return Err(e),
            }
        }
        if next_out < out_times.len() && (out_times[next_out] - stop).abs() <= 1e-12 * cfg.t_end {
            times.push(out_times[next_out]);
            frames.push(y.clone());
            next_out += 1;
        }
    }
    Ok(SpaceTimeRecord { times, frames, config: cfg.clone(), solver_stats: stats })
}

/// Run `cfg` on a dedicated pool with `threads` workers. Results do not
/// depend on `threads`.
pub fn simulate_with_threads(cfg: &SimConfig, threads: usize) -> Result<SpaceTimeRecord, PdeError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| PdeError::InvalidConfig(e.to_string()))?;
    pool.install(|| simulate(cfg))
}
