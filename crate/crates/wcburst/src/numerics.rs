//! Small numerical kernels: an embedded Runge–Kutta 5(4) integrator with
//! event location, adaptive Simpson quadrature and bracketed root finding.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError<E> {
    #[error("right-hand side failed: {0}")]
    Rhs(E),
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("step budget exhausted at t = {t}")]
    MaxSteps { t: f64 },
}

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h0: f64,
    pub h_max: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12, h0: 1e-3, h_max: f64::INFINITY, h_min: 1e-14, max_steps: 2_000_000 }
    }
}

/// Sign-change detector evaluated on accepted steps.
pub struct Event<'a, const N: usize> {
    pub g: Box<dyn Fn(f64, &[f64; N]) -> f64 + 'a>,
    /// +1 for rising crossings only, −1 for falling only, 0 for both.
    pub direction: i8,
}

impl<'a, const N: usize> Event<'a, N> {
    pub fn new(direction: i8, g: impl Fn(f64, &[f64; N]) -> f64 + 'a) -> Self {
        Self { g: Box::new(g), direction }
    }

    fn crossed(&self, g0: f64, g1: f64) -> bool {
        let rising = g0 < 0.0 && g1 >= 0.0;
        let falling = g0 > 0.0 && g1 <= 0.0;
        match self.direction {
            1 => rising,
            -1 => falling,
            _ => rising || falling,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Outcome<const N: usize> {
    Event { index: usize, t: f64, y: [f64; N] },
    Reached { t: f64, y: [f64; N] },
}

impl<const N: usize> Outcome<N> {
    pub fn state(&self) -> (f64, [f64; N]) {
        match *self {
            Outcome::Event { t, y, .. } | Outcome::Reached { t, y } => (t, y),
        }
    }
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Adaptive Dormand–Prince integrator over a fixed-size state.
pub struct Dopri<F, const N: usize> {
    f: F,
    pub opts: OdeOptions,
}

impl<F, Er, const N: usize> Dopri<F, N>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N], Er>,
{
    pub fn new(f: F, opts: OdeOptions) -> Self {
        Self { f, opts }
    }

    /// One step of size `h`; returns the fifth-order state and the scaled error.
    fn attempt(&mut self, t: f64, y: &[f64; N], h: f64) -> Result<([f64; N], f64), Er> {
        let mut k = [[0.0; N]; 7];
        k[0] = (self.f)(t, y)?;
        let mut y5 = *y;
        for s in 1..7 {
            let mut ys = *y;
            for (i, v) in ys.iter_mut().enumerate() {
                let mut acc = 0.0;
                for j in 0..s {
                    acc += A[s][j] * k[j][i];
                }
                *v += h * acc;
            }
            k[s] = (self.f)(t + C[s] * h, &ys)?;
            if s == 6 {
                y5 = ys;
            }
        }
        let mut err: f64 = 0.0;
        for i in 0..N {
            let mut e = 0.0;
            for s in 0..7 {
                e += E[s] * k[s][i];
            }
            let sc = self.opts.atol + self.opts.rtol * y[i].abs().max(y5[i].abs());
            err = err.max((h * e).abs() / sc);
        }
        Ok((y5, err))
    }

    /// State at `t_target` inside an accepted step, by a single fresh step.
    fn exact_at(&mut self, t0: f64, y0: &[f64; N], t_target: f64) -> Result<[f64; N], Er> {
        if t_target == t0 {
            return Ok(*y0);
        }
        Ok(self.attempt(t0, y0, t_target - t0)?.0)
    }

    /// Integrate from `t0` until `t_end` or the first event crossing.
    /// `observe` sees every accepted state, including the final one.
    pub fn integrate(
        &mut self,
        t0: f64,
        y0: [f64; N],
        t_end: f64,
        events: &[Event<'_, N>],
        mut observe: impl FnMut(f64, &[f64; N]),
    ) -> Result<Outcome<N>, OdeError<Er>> {
        let mut t = t0;
        let mut y = y0;
        let mut h = self.opts.h0.min(self.opts.h_max).min(t_end - t0);
        let mut gs: Vec<f64> = events.iter().map(|e| (e.g)(t, &y)).collect();
        observe(t, &y);
        let mut steps = 0usize;
        while t < t_end {
            steps += 1;
            if steps > self.opts.max_steps {
                return Err(OdeError::MaxSteps { t });
            }
            h = h.min(t_end - t);
            let (y1, err) = match self.attempt(t, &y, h) {
                Ok(v) => v,
                Err(e) => {
                    h *= 0.25;
                    if h < self.opts.h_min {
                        return Err(OdeError::Rhs(e));
                    }
                    continue;
                }
            };
            if !(err <= 1.0) {
                let fac = if err.is_finite() { (0.9 * err.powf(-0.2)).max(0.1) } else { 0.1 };
                h *= fac;
                if h < self.opts.h_min {
                    return Err(OdeError::StepUnderflow { t });
                }
                continue;
            }
            let t1 = if t_end - (t + h) <= 1e-15 * t_end.abs().max(1.0) { t_end } else { t + h };
            let g1: Vec<f64> = events.iter().map(|e| (e.g)(t1, &y1)).collect();
            let mut first: Option<(usize, f64, [f64; N])> = None;
            for (i, ev) in events.iter().enumerate() {
                if ev.crossed(gs[i], g1[i]) {
                    let (te, ye) = self.locate(t, &y, t1, ev, gs[i], g1[i]).map_err(OdeError::Rhs)?;
                    if first.map_or(true, |(_, tf, _)| te < tf) {
                        first = Some((i, te, ye));
                    }
                }
            }
            if let Some((index, te, ye)) = first {
                observe(te, &ye);
                return Ok(Outcome::Event { index, t: te, y: ye });
            }
            t = t1;
            y = y1;
            gs = g1;
            observe(t, &y);
            let fac = if err > 0.0 { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) } else { 5.0 };
            h = (h * fac).min(self.opts.h_max);
        }
        Ok(Outcome::Reached { t, y })
    }

    /// Illinois false position on freshly integrated states.
    fn locate(
        &mut self,
        t0: f64,
        y0: &[f64; N],
        t1: f64,
        ev: &Event<'_, N>,
        g0: f64,
        g1: f64,
    ) -> Result<(f64, [f64; N]), Er> {
        let (mut a, mut ga, mut b, mut gb) = (t0, g0, t1, g1);
        let mut yb = self.exact_at(t0, y0, t1)?;
        let mut side = 0i8;
        for _ in 0..100 {
            if gb == 0.0 || (b - a).abs() <= 4.0 * f64::EPSILON * b.abs().max(1.0) {
                break;
            }
            let mut tm = b - gb * (b - a) / (gb - ga);
            if !(tm > a.min(b) && tm < a.max(b)) {
                tm = 0.5 * (a + b);
            }
            let ym = self.exact_at(t0, y0, tm)?;
            let gm = (ev.g)(tm, &ym);
            if (gm > 0.0) == (gb > 0.0) && gm != 0.0 {
                b = tm;
                gb = gm;
                yb = ym;
                if side == 1 {
                    ga *= 0.5;
                }
                side = 1;
            } else {
                a = b;
                ga = gb;
                b = tm;
                gb = gm;
                yb = ym;
                if side == -1 {
                    ga *= 0.5;
                }
                side = -1;
            }
        }
        Ok((b, yb))
    }
}

/// Adaptive Simpson quadrature with absolute tolerance `tol`.
pub fn simpson<Er>(mut f: impl FnMut(f64) -> Result<f64, Er>, a: f64, b: f64, tol: f64) -> Result<f64, Er> {
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a)?;
    let fb = f(b)?;
    let m = 0.5 * (a + b);
    let fm = f(m)?;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(&mut f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<Er>(
    f: &mut impl FnMut(f64) -> Result<f64, Er>,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64, Er> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm)?;
    let frm = f(rm)?;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    Ok(simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
}

/// Bisection on a sign change of `f` over `[lo, hi]`, to machine resolution.
pub fn bisect(mut f: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo.min(hi) || mid >= lo.max(hi) {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
