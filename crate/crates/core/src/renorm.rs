//! Renormalization of a Heaviside-started run at integer front crossings.
//!
//! With `t_n` the time at which the front reaches `x = n`, the shifted fields
//! `v_n(x, t) = v(x + n, t + t_n)` are sampled on a fixed wave-frame lattice
//! for `t ∈ [0, τ]`. The driver lands steps exactly on every crossing and on
//! every sample time `t_n + k·h`, so frames are compared node by node without
//! interpolating a moving front in time.

use crate::model::Environment;
use crate::solver::{
    front_speed, init_heaviside, Field, FrontTrajectory, LeftBoundary, RunStats, Snapshot, Solver,
    SolverConfig, SolverError, TrajectoryBuilder,
};
use crate::stationary::{
    find_max_steady, find_min_steady, PeriodicSteadyState, SteadyConfig, SteadyError,
};
use serde::{Deserialize, Serialize};
use std::ops::Range;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RenormError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Steady(#[from] SteadyError),
    #[error("front stalled before x = {station}: b = {b:.4} at t = {t:.3}")]
    Stalled { station: f64, b: f64, t: f64 },
    #[error("trajectory never reaches x = {0}")]
    StationNotReached(f64),
    #[error("no convergence after {frames} crossings (last window gap {last:.3e})")]
    NotConverged {
        frames: usize,
        last: f64,
        history: Vec<f64>,
    },
    #[error("invalid renormalization setup: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenormConfig {
    /// Largest crossing index recorded.
    pub n_max: usize,
    /// Crossings recorded before convergence may end the run.
    pub n_min: usize,
    /// Wave-frame window for convergence and the wave checks.
    pub window: (f64, f64),
    /// Part of the line matched against periodic steady states.
    pub tail: (f64, f64),
    /// Sup-norm tolerance between consecutive frames.
    pub tol: f64,
    pub confirmations: usize,
    /// Spacing `h` of the relative sample times.
    pub sample_dt: f64,
    /// Frame `n` covers `[0, τ]` with `τ = tau_factor · s_{n−1}`.
    pub tau_factor: f64,
    /// Every `line_stride`-th sample also keeps the whole field.
    pub line_stride: usize,
    /// Abort when no crossing happens for this long.
    pub stall_time: f64,
    pub tail_tol: f64,
    pub vt_tol: f64,
    pub darcy_tol: f64,
    /// Periodicity defect bound, relative to `max V`.
    pub periodicity_tol: f64,
    /// Crossing index by which the whole-line gap must be small.
    pub linfty_n: usize,
    /// Whole-line gap bound, relative to `max V`.
    pub linfty_tol: f64,
}

impl Default for RenormConfig {
    fn default() -> Self {
        Self {
            n_max: 24,
            n_min: 14,
            window: (-6.0, 2.0),
            tail: (-28.0, -24.0),
            tol: 1e-3,
            confirmations: 3,
            sample_dt: 1.0 / 32.0,
            tau_factor: 1.25,
            line_stride: 4,
            stall_time: 50.0,
            tail_tol: 1e-3,
            vt_tol: 1e-4,
            darcy_tol: 0.05,
            periodicity_tol: 1e-2,
            linfty_n: 12,
            linfty_tol: 1e-2,
        }
    }
}

impl RenormConfig {
    pub fn validate(&self) -> Result<(), RenormError> {
        let bad = |msg: &str| Err(RenormError::Config(msg.into()));
        if self.window.0 >= 0.0 || self.window.1 <= 1.0 {
            return bad("window must contain [0, 1]");
        }
        if self.tail.0 >= self.tail.1 {
            return bad("empty tail region");
        }
        if !(self.tol > 0.0 && self.sample_dt > 0.0 && self.tau_factor >= 1.0) {
            return bad("tol and sample_dt must be positive and tau_factor at least 1");
        }
        if self.n_min > self.n_max || self.n_min <= self.linfty_n || self.confirmations == 0 {
            return bad("need linfty_n < n_min <= n_max and at least one confirmation");
        }
        if self.line_stride == 0 {
            return bad("line_stride must be positive");
        }
        Ok(())
    }

    /// Heaviside start window: the tail region stays covered in every frame.
    pub fn start_window(&self) -> (f64, f64) {
        (self.tail.0.min(self.window.0 - 1.0) - 4.0, 3.0)
    }
}

/// First time `b(t)` reaches each station, by linear interpolation of the
/// recorded trajectory.
pub fn crossing_times(traj: &FrontTrajectory, stations: &[f64]) -> Result<Vec<f64>, RenormError> {
    let mut out = Vec::with_capacity(stations.len());
    for &s in stations {
        let k = traj
            .b
            .iter()
            .position(|&b| b >= s)
            .ok_or(RenormError::StationNotReached(s))?;
        let t = if k == 0 {
            traj.t[0]
        } else {
            let (b0, b1) = (traj.b[k - 1], traj.b[k]);
            let w = (s - b0) / (b1 - b0);
            traj.t[k - 1] + w * (traj.t[k] - traj.t[k - 1])
        };
        if let Some(&prev) = out.last() {
            if t <= prev {
                return Err(RenormError::Config(format!(
                    "crossing times not increasing at station {s}"
                )));
            }
        }
        out.push(t);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameSample {
    /// Time relative to the crossing.
    pub t: f64,
    /// Front in the wave frame, `b(t_n + t) − n`.
    pub b: f64,
    /// Darcy slope `−v_x(b−0)`.
    pub slope: f64,
    /// Values on the stored window lattice.
    pub window: Vec<f64>,
    /// Whole field in wave-frame coordinates.
    pub line: Option<Snapshot>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub n: i64,
    pub t_n: f64,
    pub planned: usize,
    pub samples: Vec<FrameSample>,
}

impl Frame {
    fn complete(&self) -> bool {
        self.samples.len() == self.planned
    }
}

/// `t_n`, `s_n` and the frames `v_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenormSequence {
    pub cells_per_unit: usize,
    pub sample_dt: f64,
    /// Lattice index of the first stored window node; the store reaches one
    /// period left of the configured window so shifted comparisons stay inside.
    pub window_start: i64,
    pub window_len: usize,
    pub frames: Vec<Frame>,
    pub t_n: Vec<f64>,
    pub s_n: Vec<f64>,
    /// Pressure of the left state per lattice slot, used beyond a field's
    /// left end.
    pub left_q: Vec<f64>,
    pub trajectory: FrontTrajectory,
    pub stats: RunStats,
}

impl RenormSequence {
    fn period_nodes(&self) -> usize {
        self.cells_per_unit
    }

    /// Stored indices covering the configured window.
    fn window_range(&self) -> Range<usize> {
        self.period_nodes()..self.window_len
    }

    /// Stored indices covering the window shifted one period left.
    fn shifted_range(&self) -> Range<usize> {
        0..self.window_len - self.period_nodes()
    }

    pub fn window_x(&self, idx: usize) -> f64 {
        (self.window_start + idx as i64) as f64 / self.cells_per_unit as f64
    }

    fn gap(&self, a: usize, b: usize, range: Range<usize>) -> f64 {
        let (fa, fb) = (&self.frames[a], &self.frames[b]);
        let mut worst = 0.0f64;
        for (sa, sb) in fa.samples.iter().zip(&fb.samples) {
            for j in range.clone() {
                worst = worst.max((sa.window[j] - sb.window[j]).abs());
            }
        }
        worst
    }

    /// `‖v_{n+1} − v_n‖_∞` over the window and the common sample times.
    pub fn history(&self) -> Vec<f64> {
        (1..self.frames.len())
            .map(|i| self.gap(i - 1, i, self.window_range()))
            .collect()
    }

    /// Largest `(v_{n+1} − v_n)_+` per consecutive pair; the sequence started
    /// from an upper Heaviside state is expected to decrease in `n`.
    pub fn monotonicity_excess(&self) -> Vec<f64> {
        (1..self.frames.len())
            .map(|i| {
                let (fa, fb) = (&self.frames[i - 1], &self.frames[i]);
                let mut worst = 0.0f64;
                for (sa, sb) in fa.samples.iter().zip(&fb.samples) {
                    for j in self.window_range() {
                        worst = worst.max(sb.window[j] - sa.window[j]);
                    }
                }
                worst
            })
            .collect()
    }

    /// `max_n |v_n(0, 0)|`.
    pub fn front_origin_error(&self) -> f64 {
        let j = (-self.window_start) as usize;
        self.frames
            .iter()
            .map(|f| f.samples[0].window[j].abs())
            .fold(0.0, f64::max)
    }

    fn line_value(&self, s: &Snapshot, j: i64) -> f64 {
        s.value_at_index(j)
            .unwrap_or_else(|| self.left_q[j.rem_euclid(self.left_q.len() as i64) as usize])
    }

    /// Sup-norm difference of two whole-field samples over the union of
    /// their extents.
    fn line_gap(&self, a: &Snapshot, b: &Snapshot) -> f64 {
        let lo = a.i0.min(b.i0);
        let hi = (a.i0 + a.v.len() as i64).max(b.i0 + b.v.len() as i64);
        (lo..hi)
            .map(|j| (self.line_value(a, j) - self.line_value(b, j)).abs())
            .fold(0.0, f64::max)
    }
}

fn value_at_global(field: &Field, i: i64, left_q: &[f64]) -> f64 {
    let k = i - field.i0;
    if k < 0 {
        left_q[i.rem_euclid(left_q.len() as i64) as usize]
    } else {
        field.v.get(k as usize).copied().unwrap_or(0.0)
    }
}

/// Runs from `field` and records frames at every integer crossing until the
/// window converges (after `n_min` crossings) or `n_max` is reached.
pub fn record_sequence(
    env: &Environment,
    mut field: Field,
    cfg: SolverConfig,
    left_state: &PeriodicSteadyState,
    rcfg: &RenormConfig,
) -> Result<RenormSequence, RenormError> {
    rcfg.validate()?;
    if cfg.left != LeftBoundary::Dirichlet {
        return Err(RenormError::Config(
            "renormalization needs the Dirichlet left state".into(),
        ));
    }
    let n = cfg.cells_per_unit;
    let nf = n as f64;
    let h = rcfg.sample_dt;
    let left_q: Vec<f64> = (0..n)
        .map(|i| left_state.pressure_at(i as f64 / nf))
        .collect();
    let window_start = ((rcfg.window.0 - 1.0) * nf).round() as i64;
    let window_len = ((rcfg.window.1 * nf).round() as i64 - window_start + 1) as usize;

    let mut solver = Solver::new(env, cfg, Some(left_state))?;
    let mut traj = TrajectoryBuilder::new(1e-3);
    let mut frames: Vec<Frame> = Vec::new();
    let mut pending: Vec<(f64, usize)> = Vec::new();
    let mut station = field.b.ceil();
    let mut last_cross = field.t;
    let mut complete = 0usize;
    let mut history: Vec<f64> = Vec::new();
    let window_gap = |a: &Frame, b: &Frame| {
        let mut worst = 0.0f64;
        for (sa, sb) in a.samples.iter().zip(&b.samples) {
            for j in n..window_len {
                worst = worst.max((sa.window[j] - sb.window[j]).abs());
            }
        }
        worst
    };

    loop {
        let slope = front_speed(&field, &cfg)?;
        traj.push(field.t, field.b, slope, false);

        if field.b >= station - 1e-10 {
            let t_n = field.t;
            let tau = match frames.last() {
                Some(prev) => rcfg.tau_factor * (t_n - prev.t_n),
                None => rcfg.tau_factor,
            };
            let planned = (tau / h).ceil().max(4.0) as usize + 1;
            let idx = frames.len();
            frames.push(Frame {
                n: station as i64,
                t_n,
                planned,
                samples: Vec::with_capacity(planned),
            });
            pending.extend((0..planned).map(|k| (t_n + k as f64 * h, idx)));
            station += 1.0;
            last_cross = t_n;
        }

        let mut k = 0;
        while k < pending.len() {
            let (at, idx) = pending[k];
            if at <= field.t + 1e-9 {
                pending.swap_remove(k);
                let frame = &mut frames[idx];
                let kk = frame.samples.len();
                let base = frame.n * n as i64 + window_start;
                let window = (0..window_len as i64)
                    .map(|j| value_at_global(&field, base + j, &left_q))
                    .collect();
                let line = kk.is_multiple_of(rcfg.line_stride).then(|| {
                    let mut s = Snapshot::of(&field);
                    s.t = kk as f64 * h;
                    s.b -= frame.n as f64;
                    s.i0 -= frame.n * n as i64;
                    s
                });
                frame.samples.push(FrameSample {
                    t: kk as f64 * h,
                    b: field.b - frame.n as f64,
                    slope,
                    window,
                    line,
                });
            } else {
                k += 1;
            }
        }

        let now_complete = frames.iter().take_while(|f| f.complete()).count();
        if now_complete > complete {
            for i in complete.max(1)..now_complete {
                history.push(window_gap(&frames[i - 1], &frames[i]));
            }
            complete = now_complete;
            let last_n = frames[complete - 1].n;
            let settled = history.len() >= rcfg.confirmations
                && history[history.len() - rcfg.confirmations..]
                    .iter()
                    .all(|&g| g <= rcfg.tol);
            if last_n >= rcfg.n_max as i64 || (last_n >= rcfg.n_min as i64 && settled) {
                break;
            }
        }

        if field.t - last_cross > rcfg.stall_time {
            return Err(RenormError::Stalled {
                station,
                b: field.b,
                t: field.t,
            });
        }

        let mut cap = pending
            .iter()
            .map(|&(at, _)| at - field.t)
            .fold(f64::INFINITY, f64::min);
        if slope > 0.0 {
            cap = cap.min((station - field.b) / slope);
        }
        solver.step(&mut field, cap)?;
        if let Some(at) = pending
            .iter()
            .map(|&(at, _)| at)
            .min_by(|a, b| a.total_cmp(b))
        {
            if (field.t - at).abs() < 1e-11 {
                field.t = at;
            }
        }
    }

    frames.truncate(complete);
    if frames.len() < 3 {
        return Err(RenormError::Config(
            "fewer than three complete frames were recorded".into(),
        ));
    }
    let t_n: Vec<f64> = frames.iter().map(|f| f.t_n).collect();
    let s_n = t_n.windows(2).map(|w| w[1] - w[0]).collect();
    traj.push(field.t, field.b, front_speed(&field, &cfg)?, true);
    Ok(RenormSequence {
        cells_per_unit: n,
        sample_dt: h,
        window_start,
        window_len,
        frames,
        t_n,
        s_n,
        left_q,
        trajectory: traj.finish(),
        stats: solver.stats(),
    })
}

/// Fritsch–Carlson derivative estimates for monotone cubic interpolation.
pub fn pchip_slopes(t: &[f64], y: &[f64]) -> Vec<f64> {
    let n = t.len();
    if n < 2 {
        return vec![0.0; n];
    }
    let h: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
    let d: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    let mut m = vec![0.0; n];
    if n == 2 {
        return vec![d[0]; 2];
    }
    for i in 1..n - 1 {
        if d[i - 1] * d[i] > 0.0 {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            m[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
        }
    }
    let end = |h0: f64, h1: f64, d0: f64, d1: f64| {
        let s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if s * d0 <= 0.0 {
            0.0
        } else if d0 * d1 <= 0.0 && s.abs() > 3.0 * d0.abs() {
            3.0 * d0
        } else {
            s
        }
    };
    m[0] = end(h[0], h[1], d[0], d[1]);
    m[n - 1] = end(h[n - 2], h[n - 3], d[n - 2], d[n - 3]);
    m
}

/// Extracted periodic wave: `V` on the window over one period, `B`, `T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveResult {
    /// Time period `T`.
    pub period: f64,
    /// Crossing index of the frame taken as `V`.
    pub n: i64,
    pub cells_per_unit: usize,
    pub x: Vec<f64>,
    pub t: Vec<f64>,
    /// `V[k][j]` at `(x[j], t[k])`.
    pub v: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    /// Darcy slope `−V_x(B−0)`.
    pub b_prime: Vec<f64>,
    /// Derivative of the monotone cubic through the `B` samples.
    pub b_prime_interp: Vec<f64>,
    pub delta_star: f64,
    /// Smallest `C1` with `V ≤ C1 (B − x)` on `[B − 1, B]`.
    pub c1: f64,
    /// `(s, min_t V(B(t) − s, t))`.
    pub delta0: Vec<(f64, f64)>,
    pub max_v: f64,
    pub periodicity_defect: f64,
    pub convergence_history: Vec<f64>,
    pub crossings: Vec<i64>,
    pub t_n: Vec<f64>,
    pub s_n: Vec<f64>,
    pub converged: bool,
    pub s_settled: bool,
    /// Whole-field samples of `V` in the wave frame.
    pub line: Vec<Snapshot>,
}

/// Builds `V` from the last frame whose successor crossing is recorded, so
/// that `V(x, t + T) = v_{n+1}(x − 1, t)` holds sample by sample.
pub fn wave_from_sequence(seq: &RenormSequence, rcfg: &RenormConfig) -> WaveResult {
    let m = seq.frames.len();
    let vi = m - 2;
    let frame = &seq.frames[vi];
    let period = seq.s_n[vi];
    let history = seq.history();
    let k_last = rcfg.confirmations.min(history.len());
    let converged = history[history.len() - k_last..]
        .iter()
        .all(|&g| g <= rcfg.tol);
    let s_settled = seq.s_n.len() > rcfg.confirmations
        && seq.s_n[seq.s_n.len() - 1 - rcfg.confirmations..]
            .windows(2)
            .all(|w| (w[1] - w[0]).abs() <= rcfg.tol * period);

    let range = seq.window_range();
    let x: Vec<f64> = range.clone().map(|j| seq.window_x(j)).collect();
    let all_t: Vec<f64> = frame.samples.iter().map(|s| s.t).collect();
    let all_b: Vec<f64> = frame.samples.iter().map(|s| s.b).collect();
    let interp_slopes = pchip_slopes(&all_t, &all_b);
    let keep = frame
        .samples
        .iter()
        .take_while(|s| s.t <= period + 1e-12)
        .count()
        .max(2);
    let samples = &frame.samples[..keep];
    let v: Vec<Vec<f64>> = samples
        .iter()
        .map(|s| s.window[range.clone()].to_vec())
        .collect();
    let max_v = v.iter().flatten().copied().fold(0.0, f64::max);
    let delta_star = samples
        .iter()
        .map(|s| s.slope)
        .fold(f64::INFINITY, f64::min);

    let mut c1 = 0.0f64;
    for (s, row) in samples.iter().zip(&v) {
        for (&xj, &vj) in x.iter().zip(row) {
            let gap = s.b - xj;
            if gap > 0.0 && gap <= 1.0 {
                c1 = c1.max(vj / gap);
            }
        }
    }
    let dx = 1.0 / seq.cells_per_unit as f64;
    let value = |row: &[f64], xq: f64| {
        let s = (xq - x[0]) / dx;
        let j = (s.floor().max(0.0) as usize).min(row.len() - 2);
        let w = s - j as f64;
        row[j] * (1.0 - w) + row[j + 1] * w
    };
    let delta0 = (1..=20)
        .map(|i| {
            let s = 0.05 * i as f64;
            let lo = samples
                .iter()
                .zip(&v)
                .map(|(smp, row)| value(row, smp.b - s))
                .fold(f64::INFINITY, f64::min);
            (s, lo)
        })
        .collect();

    WaveResult {
        period,
        n: frame.n,
        cells_per_unit: seq.cells_per_unit,
        x,
        t: samples.iter().map(|s| s.t).collect(),
        v,
        b: samples.iter().map(|s| s.b).collect(),
        b_prime: samples.iter().map(|s| s.slope).collect(),
        b_prime_interp: interp_slopes[..keep].to_vec(),
        delta_star,
        c1,
        delta0,
        max_v,
        periodicity_defect: seq.gap(vi, vi + 1, seq.shifted_range()),
        convergence_history: history,
        crossings: seq.frames.iter().map(|f| f.n).collect(),
        t_n: seq.t_n.clone(),
        s_n: seq.s_n.clone(),
        converged,
        s_settled,
        line: samples.iter().filter_map(|s| s.line.clone()).collect(),
    }
}

/// [`wave_from_sequence`], failing unless the window gaps have settled.
pub fn extract_wave(seq: &RenormSequence, rcfg: &RenormConfig) -> Result<WaveResult, RenormError> {
    let wave = wave_from_sequence(seq, rcfg);
    if wave.converged {
        Ok(wave)
    } else {
        Err(RenormError::NotConverged {
            frames: seq.frames.len(),
            last: wave.convergence_history.last().copied().unwrap_or(f64::NAN),
            history: wave.convergence_history,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailMatch {
    pub label: String,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveReport {
    /// Nodes violating `V > 0` left of `B` or `V = 0` right of it.
    pub positivity_violations: usize,
    pub tail_covered: bool,
    pub tail: Vec<TailMatch>,
    /// Label of the best-matching steady state.
    pub tail_best: Option<String>,
    pub tail_residual: f64,
    pub darcy_residual: f64,
    pub min_vt: f64,
    pub periodicity_defect: f64,
    pub delta_star: f64,
    pub positivity_ok: bool,
    pub tail_ok: bool,
    pub darcy_ok: bool,
    pub vt_ok: bool,
    pub periodicity_ok: bool,
    pub delta_star_ok: bool,
    pub passed: bool,
}

/// Checks positivity, the left tail against `candidates`, Darcy's law,
/// monotonicity in time and the periodicity defect.
pub fn verify_wave(
    wave: &WaveResult,
    candidates: &[(&str, &PeriodicSteadyState)],
    rcfg: &RenormConfig,
) -> WaveReport {
    let mut violations = 0;
    for (row, &b) in wave.v.iter().zip(&wave.b) {
        for (&x, &v) in wave.x.iter().zip(row) {
            let bad = if x < b - 1e-9 {
                v <= 0.0
            } else {
                x >= b && v != 0.0
            };
            violations += usize::from(bad);
        }
    }

    let n = wave.cells_per_unit as i64;
    let (j_lo, j_hi) = (
        (rcfg.tail.0 * n as f64).round() as i64,
        (rcfg.tail.1 * n as f64).round() as i64,
    );
    let tail_covered = !wave.line.is_empty() && wave.line.iter().all(|s| s.i0 <= j_lo);
    let tail: Vec<TailMatch> = candidates
        .iter()
        .map(|(label, q)| {
            let mut worst = 0.0f64;
            for s in &wave.line {
                for j in j_lo.max(s.i0)..=j_hi {
                    let v = s.value_at_index(j).unwrap_or(0.0);
                    worst = worst.max((v - q.pressure_at(j as f64 / n as f64)).abs());
                }
            }
            TailMatch {
                label: (*label).to_string(),
                residual: worst,
            }
        })
        .collect();
    let best = tail.iter().min_by(|a, b| a.residual.total_cmp(&b.residual));
    let tail_residual = best.map_or(f64::INFINITY, |b| b.residual);

    let k = wave.t.len();
    let darcy_residual = (1..k.saturating_sub(1))
        .map(|i| (wave.b_prime_interp[i] - wave.b_prime[i]).abs() / wave.b_prime[i].abs())
        .fold(0.0, f64::max);

    let h = rcfg.sample_dt;
    let mut min_vt = f64::INFINITY;
    for i in 1..k {
        let b = wave.b[i - 1].min(wave.b[i]);
        for (j, &x) in wave.x.iter().enumerate() {
            if x < b {
                min_vt = min_vt.min((wave.v[i][j] - wave.v[i - 1][j]) / h);
            }
        }
    }

    let positivity_ok = violations == 0;
    let tail_ok = tail_covered && tail_residual <= rcfg.tail_tol;
    let darcy_ok = darcy_residual <= rcfg.darcy_tol;
    let vt_ok = min_vt >= -rcfg.vt_tol;
    let periodicity_ok = wave.periodicity_defect <= rcfg.periodicity_tol * wave.max_v;
    let delta_star_ok = wave.delta_star > 0.0;
    WaveReport {
        positivity_violations: violations,
        tail_covered,
        tail_best: best.map(|b| b.label.clone()),
        tail,
        tail_residual,
        darcy_residual,
        min_vt,
        periodicity_defect: wave.periodicity_defect,
        delta_star: wave.delta_star,
        positivity_ok,
        tail_ok,
        darcy_ok,
        vt_ok,
        periodicity_ok,
        delta_star_ok,
        passed: positivity_ok && tail_ok && darcy_ok && vt_ok && periodicity_ok && delta_star_ok,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinftyReport {
    pub crossings: Vec<i64>,
    /// `sup_t ‖v_n(·, t) − V(·, t)‖_∞` over the whole recorded line.
    pub gaps: Vec<f64>,
    pub threshold: f64,
    pub gap_at_target: Option<f64>,
    pub decreasing: bool,
    pub passed: bool,
}

/// Whole-line sup-norm distance of every earlier frame to `V`, at the
/// sample times where both keep the whole field.
pub fn check_linfty(seq: &RenormSequence, wave: &WaveResult, rcfg: &RenormConfig) -> LinftyReport {
    let threshold = rcfg.linfty_tol * wave.max_v;
    let mut crossings = Vec::new();
    let mut gaps = Vec::new();
    for frame in seq.frames.iter().take_while(|f| f.n < wave.n) {
        let gap = frame
            .samples
            .iter()
            .filter_map(|s| s.line.as_ref())
            .zip(&wave.line)
            .map(|(a, b)| seq.line_gap(a, b))
            .fold(0.0, f64::max);
        crossings.push(frame.n);
        gaps.push(gap);
    }
    // differences below the convergence tolerance are treated as noise
    let slack = rcfg.tol * wave.max_v;
    let decreasing = gaps.windows(2).all(|w| w[1] <= w[0] + slack);
    let gap_at_target = crossings
        .iter()
        .position(|&n| n == rcfg.linfty_n as i64)
        .map(|i| gaps[i]);
    LinftyReport {
        passed: decreasing && gap_at_target.is_some_and(|g| g <= threshold),
        crossings,
        gaps,
        threshold,
        gap_at_target,
        decreasing,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WaveStatus {
    Converged,
    TerraceSuspected,
    NotConverged,
}

/// A settled `s_n` with a left tail that matches no periodic steady state
/// points at a stacked front: only the lowest one has been resolved.
pub fn classify(wave: &WaveResult, report: &WaveReport, linfty: &LinftyReport) -> WaveStatus {
    if wave.converged && report.tail_ok {
        WaveStatus::Converged
    } else if wave.s_settled && (!report.tail_ok || !linfty.passed) {
        WaveStatus::TerraceSuspected
    } else {
        WaveStatus::NotConverged
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveOutcome {
    pub p1: PeriodicSteadyState,
    pub p2: PeriodicSteadyState,
    pub sequence: RenormSequence,
    pub wave: WaveResult,
    pub report: WaveReport,
    pub linfty: LinftyReport,
    pub status: WaveStatus,
}

impl WaveOutcome {
    /// Converged and every check passed.
    pub fn passed(&self) -> bool {
        self.status == WaveStatus::Converged && self.report.passed && self.linfty.passed
    }
}

/// Steady states, a Heaviside start from `q1`, renormalization, extraction
/// and verification.
pub fn wave_pipeline(
    env: &Environment,
    cfg: SolverConfig,
    rcfg: &RenormConfig,
    steady: &SteadyConfig,
) -> Result<WaveOutcome, RenormError> {
    let steady = SteadyConfig {
        cells_per_unit: cfg.cells_per_unit,
        ..*steady
    };
    let p1 = find_min_steady(env, &steady)?;
    let p2 = find_max_steady(env, &steady)?;
    let field = init_heaviside(&p1, 0.0, rcfg.start_window(), cfg.cells_per_unit)?;
    let cfg = SolverConfig {
        left: LeftBoundary::Dirichlet,
        left_margin: None,
        ..cfg
    };
    let sequence = record_sequence(env, field, cfg, &p1, rcfg)?;
    let wave = wave_from_sequence(&sequence, rcfg);
    let report = verify_wave(&wave, &[("p1", &p1), ("p2", &p2)], rcfg);
    let linfty = check_linfty(&sequence, &wave, rcfg);
    let status = classify(&wave, &report, &linfty);
    Ok(WaveOutcome {
        p1,
        p2,
        sequence,
        wave,
        report,
        linfty,
        status,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pchip_is_exact_on_lines() {
        let t: Vec<f64> = (0..6).map(|i| i as f64 * 0.5).collect();
        let y: Vec<f64> = t.iter().map(|&t| 3.0 * t - 1.0).collect();
        for s in pchip_slopes(&t, &y) {
            assert!((s - 3.0).abs() < 1e-14);
        }
    }

    #[test]
    fn pchip_flat_at_extrema() {
        let t = [0.0, 1.0, 2.0, 3.0];
        let y = [0.0, 1.0, 0.5, 2.0];
        let m = pchip_slopes(&t, &y);
        assert_eq!(m[1], 0.0);
        assert_eq!(m[2], 0.0);
    }
}
