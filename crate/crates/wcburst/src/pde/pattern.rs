//! Pattern measurement on simulation records: front tracking on the
//! mid-level set, spike counting, stationarity and the kind decision.

use serde::{Deserialize, Serialize};

use super::{homogeneous_rest, simulate, PdeError, SimConfig, SpaceTimeRecord, State};
use crate::unfolding::find_pitchfork;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternKind {
    Rest,
    TravelingPulse,
    TravelingBurst,
    StandingPulse,
    StandingBurst,
    Breathing,
    Other,
}

impl PatternKind {
    pub fn is_traveling(self) -> bool {
        matches!(self, Self::TravelingPulse | Self::TravelingBurst)
    }

    pub fn is_standing(self) -> bool {
        matches!(self, Self::StandingPulse | Self::StandingBurst)
    }
}

impl std::fmt::Display for PatternKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = serde_json::to_value(self).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        f.write_str(&s)
    }
}

/// Fixed classifier constants, copied into every report.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Minimum travel, in cells, for a traveling pattern.
    pub travel_cells: f64,
    /// Maximum robust spread of front slopes relative to the speed.
    pub speed_spread: f64,
    /// Spike prominence as a fraction of `u_max − u_rest`.
    pub prominence: f64,
    pub stationarity: f64,
    /// Maximum front drift, in cells, for a standing pattern.
    pub standing_drift_cells: f64,
    /// Minimum front oscillation amplitude, in cells, for breathing.
    pub breathing_cells: f64,
    /// Trailing fraction of the run used for stationarity and drift.
    pub final_fraction: f64,
    /// Fronts closer than this fraction of the domain to a wall are not tracked.
    pub wall_margin: f64,
    /// Inter-spike gaps longer than this multiple of the median split bursts.
    pub burst_gap: f64,
    /// Half-width, in medium length units `√D_w`, excluded around the active core
    /// when measuring the quasi-steady gap.
    pub core_margin: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            travel_cells: 10.0,
            speed_spread: 0.1,
            prominence: 0.1,
            stationarity: 1e-3,
            standing_drift_cells: 5.0,
            breathing_cells: 5.0,
            final_fraction: 0.2,
            wall_margin: 0.05,
            burst_gap: 3.0,
            core_margin: 4.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternReport {
    pub kind: PatternKind,
    /// Front velocity in `x` per unit `t`.
    pub wave_speed: Option<f64>,
    pub speed_stddev: Option<f64>,
    pub spikes_per_burst: Option<usize>,
    /// Largest relative L² change of `(u, w, z)` per unit time between
    /// consecutive frames in the trailing window.
    pub stationarity: f64,
    pub u_rest: f64,
    /// Median peak over clearly excited frames.
    pub u_max: f64,
    pub level: f64,
    /// Largest net displacement of either edge of the active region over the
    /// trailing window.
    pub front_drift: Option<f64>,
    /// Largest half-range of either edge over the trailing window.
    pub front_amplitude: Option<f64>,
    /// Extent of the active region in the final frame.
    pub core: Option<(f64, f64)>,
    /// `max |w − u|` in the final frame outside the padded core.
    pub outer_w_u_gap: Option<f64>,
    pub thresholds: Thresholds,
}

/// Edge positions of the set `{u > level}` by linear interpolation.
fn edges(x: &dyn Fn(usize) -> f64, u: &[f64], level: f64) -> Option<(f64, f64)> {
    let first = u.iter().position(|&v| v > level)?;
    let last = u.iter().rposition(|&v| v > level)?;
    let cross = |i: usize, j: usize| {
        let s = (level - u[i]) / (u[j] - u[i]);
        x(i) + s * (x(j) - x(i))
    };
    let left = if first == 0 { x(0) } else { cross(first - 1, first) };
    let right = if last + 1 == u.len() { x(last) } else { cross(last, last + 1) };
    Some((left, right))
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Median slope and scaled median absolute deviation of the slopes.
fn robust_slope(samples: &[(usize, f64, f64)]) -> Option<(f64, f64, f64)> {
    let slopes: Vec<f64> = samples
        .windows(2)
        .filter(|p| p[1].0 == p[0].0 + 1)
        .map(|p| (p[1].2 - p[0].2) / (p[1].1 - p[0].1))
        .collect();
    if slopes.len() < 3 {
        return None;
    }
    let m = median(&mut slopes.clone());
    let mut dev: Vec<f64> = slopes.iter().map(|s| (s - m).abs()).collect();
    let spread = 1.4826 * median(&mut dev);
    let span = samples.last().unwrap().1 - samples[0].1;
    Some((m, spread, span))
}

/// Indices of local maxima above `floor` whose prominence reaches `prom`.
pub fn prominent_peaks(y: &[f64], floor: f64, prom: f64) -> Vec<usize> {
    let n = y.len();
    let mut peaks = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if y[i] > y[i - 1] && y[i] > floor {
            // Walk across a flat top.
            let mut j = i;
            while j + 1 < n && y[j + 1] == y[i] {
                j += 1;
            }
            if j + 1 < n && y[j + 1] < y[i] {
                let h = y[i];
                let mut lmin = h;
                let mut k = i;
                // Ties go to the leftmost of equal peaks.
                while k > 0 && y[k - 1] < h {
                    k -= 1;
                    lmin = lmin.min(y[k]);
                }
                let mut rmin = h;
                let mut k = j;
                while k + 1 < n && y[k + 1] <= h {
                    k += 1;
                    rmin = rmin.min(y[k]);
                }
                if h - lmin.max(rmin) >= prom {
                    peaks.push(i);
                }
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    peaks
}

struct Tracks {
    left: Vec<(usize, f64, f64)>,
    right: Vec<(usize, f64, f64)>,
}

fn track(record: &SpaceTimeRecord, level: f64, frames: std::ops::Range<usize>, margin: f64) -> Tracks {
    let g = record.grid();
    let x = move |i: usize| g.x(i);
    let mut t = Tracks { left: Vec::new(), right: Vec::new() };
    for (k, f) in record.frames.iter().enumerate().take(frames.end).skip(frames.start) {
        if let Some((l, r)) = edges(&x, &f.u, level) {
            let time = record.times[k];
            if l > g.x0 + margin {
                t.left.push((k, time, l));
            }
            if r < g.x1 - margin {
                t.right.push((k, time, r));
            }
        }
    }
    t
}

fn relative_drift(a: &State, b: &State, dt: f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in [(&a.u, &b.u), (&a.w, &b.w), (&a.z, &b.z)] {
        for (p, q) in x.iter().zip(y) {
            num += (q - p).powi(2);
            den += p * p;
        }
    }
    (num / den.max(f64::MIN_POSITIVE)).sqrt() / dt
}

struct Measures {
    u_rest: f64,
    u_max: f64,
    level: f64,
    first: usize,
    tracks: Tracks,
    th: Thresholds,
}

fn measure(record: &SpaceTimeRecord) -> Measures {
    let cfg = &record.config;
    let th = Thresholds::default();
    let first = record.times.iter().position(|&t| t >= cfg.perturbation.t_hi).unwrap_or(record.times.len());
    let u_rest = homogeneous_rest(&cfg.params, &cfg.scales)
        .unwrap_or_else(|_| record.frames[0].u.iter().copied().fold(f64::INFINITY, f64::min));
    // Typical excited level: the median of per-frame maxima over clearly
    // excited frames, so that overshoot while forcing does not set the scale.
    let peaks: Vec<f64> = record.frames[first.min(record.frames.len() - 1)..]
        .iter()
        .map(|f| f.u.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let top = peaks.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut excited: Vec<f64> = peaks.into_iter().filter(|&p| p > 0.5 * (u_rest + top)).collect();
    let u_max = if excited.is_empty() { top } else { median(&mut excited) };
    let level = 0.5 * (u_rest + u_max);
    let margin = th.wall_margin * (cfg.grid.x1 - cfg.grid.x0);
    let tracks = track(record, level, first..record.frames.len(), margin);
    Measures { u_rest, u_max, level, first, tracks, th }
}

/// Edge that moved farthest: `(velocity, spread, span, right edge?)`.
fn fastest(tr: &Tracks, traveling_only: Option<(&Thresholds, f64)>) -> Option<(f64, f64, f64, bool)> {
    let cands = [robust_slope(&tr.left).map(|s| (s.0, s.1, s.2, false)), robust_slope(&tr.right).map(|s| (s.0, s.1, s.2, true))];
    cands
        .into_iter()
        .flatten()
        .filter(|&(v, spread, span, _)| match traveling_only {
            Some((th, dx)) => v.abs() * span > th.travel_cells * dx && spread < th.speed_spread * v.abs(),
            None => true,
        })
        .max_by(|a, b| (a.0.abs() * a.2).total_cmp(&(b.0.abs() * b.2)))
}

/// All interpolated crossings of `level` between neighbouring cells.
fn crossings(record: &SpaceTimeRecord, u: &[f64], level: f64) -> Vec<f64> {
    let g = record.grid();
    u.windows(2)
        .enumerate()
        .filter(|(_, p)| (p[0] > level) != (p[1] > level))
        .map(|(i, p)| g.x(i) + (level - p[0]) / (p[1] - p[0]) * g.dx())
        .collect()
}

/// Speed in the traveling-wave units `x/√D_u`, `t/τ_u`, with the sign of the
/// ansatz `(x/√D_u + c t/τ_u)`: fronts moving right have `c < 0`.
pub fn measure_wave_speed(record: &SpaceTimeRecord) -> Result<(f64, f64), PdeError> {
    let m = measure(record);
    if m.u_max - m.u_rest < 1e-6 {
        return Err(PdeError::NoFront);
    }
    let dx = record.grid().dx();
    let (v, spread, _, _) = fastest(&m.tracks, Some((&m.th, dx)))
        .or_else(|| fastest(&m.tracks, None))
        .ok_or(PdeError::NoFront)?;
    let s = &record.config.scales;
    let k = s.tau_u / s.d_u.sqrt();
    Ok((-v * k, spread * k))
}

fn probe_spikes(record: &SpaceTimeRecord, m: &Measures, probe: usize) -> usize {
    let series: Vec<f64> = record.frames[m.first..].iter().map(|f| f.u[probe]).collect();
    let peaks = prominent_peaks(&series, m.level, m.th.prominence * (m.u_max - m.u_rest));
    if peaks.len() < 2 {
        return peaks.len();
    }
    let times: Vec<f64> = peaks.iter().map(|&k| record.times[m.first + k]).collect();
    let gaps: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
    let typical = median(&mut gaps.clone());
    gaps.iter().position(|&g| g > m.th.burst_gap * typical).map_or(peaks.len(), |i| i + 1)
}

pub fn classify_pattern(record: &SpaceTimeRecord) -> PatternReport {
    let m = measure(record);
    let g = record.grid();
    let dx = g.dx();
    let th = m.th;
    let nf = record.frames.len();
    let tail = ((nf as f64 * (1.0 - th.final_fraction)).floor() as usize).max(m.first).min(nf.saturating_sub(2));
    let stationarity = (tail..nf - 1)
        .map(|k| relative_drift(&record.frames[k], &record.frames[k + 1], record.times[k + 1] - record.times[k]))
        .fold(0.0, f64::max);

    let x = |i: usize| g.x(i);
    let last = &record.frames[nf - 1];
    let core = edges(&x, &last.u, m.level);
    let pad = th.core_margin * record.config.scales.d_w.sqrt();
    let outer_w_u_gap = core.map(|(l, r)| {
        (0..g.n)
            .filter(|&i| g.x(i) < l - pad || g.x(i) > r + pad)
            .map(|i| (last.w[i] - last.u[i]).abs())
            .fold(0.0, f64::max)
    });

    let mut report = PatternReport {
        kind: PatternKind::Other,
        wave_speed: None,
        speed_stddev: None,
        spikes_per_burst: None,
        stationarity,
        u_rest: m.u_rest,
        u_max: m.u_max,
        level: m.level,
        front_drift: None,
        front_amplitude: None,
        core,
        outer_w_u_gap,
        thresholds: th,
    };
    if !(m.u_max - m.u_rest > 1e-6) {
        report.kind = PatternKind::Rest;
        return report;
    }

    let traveling = |tracks: &Tracks, report: &mut PatternReport| {
        let Some((v, spread, _, right)) = fastest(tracks, Some((&th, dx))) else {
            return false;
        };
        // Probe where the tracked front is half-way through its run.
        let side = if right { &tracks.right } else { &tracks.left };
        let mid = side[side.len() / 2].2;
        let spikes = probe_spikes(record, &m, g.cell(mid)).max(1);
        report.kind = if spikes >= 2 { PatternKind::TravelingBurst } else { PatternKind::TravelingPulse };
        report.wave_speed = Some(v);
        report.speed_stddev = Some(spread);
        report.spikes_per_burst = Some(spikes);
        true
    };

    // A pattern that died out is judged on its whole history, one that
    // persists on its trailing window only.
    if edges(&x, &last.u, m.level).is_none() {
        if !traveling(&m.tracks, &mut report) {
            report.kind = PatternKind::Rest;
        }
        return report;
    }
    let margin = th.wall_margin * (g.x1 - g.x0);
    if traveling(&track(record, m.level, tail..nf, margin), &mut report) {
        return report;
    }

    // Interfaces in the trailing window, matched by order when their number
    // is constant, otherwise only the outermost pair.
    let sets: Vec<Vec<f64>> = record.frames[tail..].iter().map(|f| crossings(record, &f.u, m.level)).collect();
    let count = sets[0].len();
    let paths: Vec<Vec<f64>> = if count > 0 && sets.iter().all(|s| s.len() == count) {
        (0..count).map(|j| sets.iter().map(|s| s[j]).collect()).collect()
    } else {
        let outer: Vec<(f64, f64)> = record.frames[tail..].iter().filter_map(|f| edges(&x, &f.u, m.level)).collect();
        vec![outer.iter().map(|e| e.0).collect(), outer.iter().map(|e| e.1).collect()]
    };
    let stats = |p: &[f64]| {
        let lo = p.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let h = p.len() / 2;
        let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len().max(1) as f64;
        let shift = if h > 0 { (mean(&p[h..]) - mean(&p[..h])).abs() } else { 0.0 };
        ((p[p.len() - 1] - p[0]).abs(), 0.5 * (hi - lo), shift)
    };
    let (mut drift, mut amp, mut shift) = (0.0f64, 0.0f64, 0.0f64);
    for p in paths.iter().filter(|p| !p.is_empty()) {
        let (d, a, s) = stats(p);
        drift = drift.max(d);
        amp = amp.max(a);
        shift = shift.max(s);
    }
    report.front_drift = Some(drift);
    report.front_amplitude = Some(amp);
    if drift < th.standing_drift_cells * dx && stationarity < th.stationarity {
        let peaks = prominent_peaks(&last.u, m.level, th.prominence * (m.u_max - m.u_rest));
        let spikes = peaks.len().max(1);
        report.kind = if spikes >= 2 { PatternKind::StandingBurst } else { PatternKind::StandingPulse };
        report.spikes_per_burst = Some(spikes);
    } else if amp > th.breathing_cells * dx && shift < amp {
        report.kind = PatternKind::Breathing;
    }
    report
}

/// Parameter changes applied by a modulation experiment.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Overrides {
    pub lambda: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
}

impl Overrides {
    /// The modulated config. A new `β` moves `γ` to the pitchfork value at
    /// that `β`, the convention every figure recipe uses.
    pub fn apply(&self, cfg: &SimConfig) -> Result<SimConfig, PdeError> {
        let mut c = cfg.clone();
        c.params.lambda = self.lambda.unwrap_or(c.params.lambda);
        c.params.alpha = self.alpha.unwrap_or(c.params.alpha);
        if let Some(beta) = self.beta.filter(|&b| b != cfg.params.beta) {
            c.params.beta = beta;
            c.params.gamma = find_pitchfork(beta)?.gamma;
        }
        Ok(c)
    }
}

/// Classify `base` and its modulated copy.
pub fn modulation_run(base: &SimConfig, overrides: &Overrides) -> Result<(PatternReport, PatternReport), PdeError> {
    let modulated = overrides.apply(base)?;
    let a = simulate(base)?;
    let b = simulate(&modulated)?;
    Ok((classify_pattern(&a), classify_pattern(&b)))
}
