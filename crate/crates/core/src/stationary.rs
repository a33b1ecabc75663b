//! Minimal and maximal 1-periodic stationary solutions by monotone time
//! marching of the periodic problem.
//!
//! The marched iterates stay above `(κ0 + θ)/2 > 0`, so the equation is
//! uniformly parabolic and is integrated in density form: backward Euler in
//! time, centered `(u^m)_xx` with periodic wrap, Newton on each step.

use crate::linalg;
use crate::model::{pressure_from_density_unchecked, Environment, GridReaction};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SteadyConfig {
    pub cells_per_unit: usize,
    pub tol: f64,
    /// Marching horizon before giving up.
    pub max_time: f64,
}

impl Default for SteadyConfig {
    fn default() -> Self {
        Self {
            cells_per_unit: 256,
            tol: 1e-6,
            max_time: 5000.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SteadyKind {
    Minimal,
    Maximal,
    Other,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SteadyError {
    #[error("hypothesis failed: {0}")]
    Hypothesis(String),
    #[error("no stationary state after marching to t = {time}: last change {change:.3e}")]
    NotConverged { time: f64, change: f64 },
    #[error("Newton failed to converge at t = {time}")]
    Newton { time: f64 },
}

/// A periodic profile sampled at `x_j = j/N`, `j = 0..N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicSteadyState {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub residual: f64,
    pub kind: SteadyKind,
    /// Largest step-to-step move against the expected direction of marching.
    pub monotonicity_violation: f64,
    /// Marching time until stationarity was declared.
    pub march_time: f64,
}

impl PeriodicSteadyState {
    pub fn from_density(env: &Environment, p: Vec<f64>, kind: SteadyKind) -> Self {
        let n = p.len();
        let x = (0..n).map(|j| j as f64 / n as f64).collect();
        let q = p
            .iter()
            .map(|&u| pressure_from_density_unchecked(u, env.m()))
            .collect();
        let residual = residual_of_density(env, &p);
        Self {
            x,
            p,
            q,
            residual,
            kind,
            monotonicity_violation: 0.0,
            march_time: 0.0,
        }
    }

    pub fn constant(env: &Environment, value: f64, n: usize, kind: SteadyKind) -> Self {
        Self::from_density(env, vec![value; n], kind)
    }

    pub fn cells_per_unit(&self) -> usize {
        self.p.len()
    }

    /// Pressure at the grid node with global index `i` (grid `x_i = i/N`).
    #[inline]
    pub fn pressure_at_index(&self, i: i64) -> f64 {
        self.q[i.rem_euclid(self.q.len() as i64) as usize]
    }

    /// Periodic linear interpolation of the pressure.
    pub fn pressure_at(&self, x: f64) -> f64 {
        periodic_lerp(&self.q, x)
    }

    pub fn density_at(&self, x: f64) -> f64 {
        periodic_lerp(&self.p, x)
    }

    pub fn min_density(&self) -> f64 {
        self.p.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_density(&self) -> f64 {
        self.p.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

fn periodic_lerp(values: &[f64], x: f64) -> f64 {
    let n = values.len();
    let s = x.rem_euclid(1.0) * n as f64;
    let j = (s.floor() as usize).min(n - 1);
    let w = s - j as f64;
    values[j] * (1.0 - w) + values[(j + 1) % n] * w
}

/// `sup_j |(p^m)''_j + f(x_j,p_j)(κ(x_j) − p_j)|` with periodic wrap.
pub fn steady_residual(env: &Environment, state: &PeriodicSteadyState) -> f64 {
    residual_of_density(env, &state.p)
}

pub fn residual_of_density(env: &Environment, p: &[f64]) -> f64 {
    let n = p.len();
    let h2 = 1.0 / (n * n) as f64;
    let m = env.m();
    let pm: Vec<f64> = p.iter().map(|u| u.powf(m)).collect();
    (0..n)
        .map(|j| {
            let lap = (pm[(j + n - 1) % n] - 2.0 * pm[j] + pm[(j + 1) % n]) / h2;
            let x = j as f64 / n as f64;
            (lap + env.reaction_density(x, p[j])).abs()
        })
        .fold(0.0, f64::max)
}

/// Sup-norm gap `max(p2 − p1)` between two states on the same grid.
pub fn steady_gap(lower: &PeriodicSteadyState, upper: &PeriodicSteadyState) -> f64 {
    lower
        .p
        .iter()
        .zip(&upper.p)
        .map(|(a, b)| b - a)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Marches from `(κ0 + θ)/2`; iterates increase to the minimal state p1.
pub fn find_min_steady(
    env: &Environment,
    cfg: &SteadyConfig,
) -> Result<PeriodicSteadyState, SteadyError> {
    check_hypothesis(env)?;
    let start = 0.5 * (env.kappa_min() + env.theta());
    march(env, cfg, start, SteadyKind::Minimal)
}

/// Marches from `κ^0 + 1`; iterates decrease to the maximal state p2.
pub fn find_max_steady(
    env: &Environment,
    cfg: &SteadyConfig,
) -> Result<PeriodicSteadyState, SteadyError> {
    check_hypothesis(env)?;
    march(env, cfg, env.kappa_max() + 1.0, SteadyKind::Maximal)
}

fn check_hypothesis(env: &Environment) -> Result<(), SteadyError> {
    let report = env.validate_f1(Default::default());
    let failed = report.failures().next().map(|f| f.clause.clone());
    match failed {
        None => Ok(()),
        Some(clause) => Err(SteadyError::Hypothesis(clause)),
    }
}

struct Marcher {
    grid: GridReaction,
    m: f64,
    n: usize,
    inv_h2: f64,
    a: Vec<f64>,
    d: Vec<f64>,
    c: Vec<f64>,
    r: Vec<f64>,
}

impl Marcher {
    fn new(env: &Environment, n: usize) -> Self {
        Self {
            grid: env.grid_reaction(n),
            m: env.m(),
            n,
            inv_h2: (n * n) as f64,
            a: vec![0.0; n],
            d: vec![0.0; n],
            c: vec![0.0; n],
            r: vec![0.0; n],
        }
    }

    /// Newton for `(u − old)·inv_dt = (u^m)_xx + F(x,u)`; `inv_dt = 0` gives
    /// the stationary equation. Returns false on failure.
    fn newton(&mut self, u: &mut [f64], old: &[f64], inv_dt: f64) -> bool {
        let n = self.n;
        let m = self.m;
        let scale = 1.0 + u.iter().copied().fold(0.0, f64::max);
        for _ in 0..40 {
            let pm: Vec<f64> = u.iter().map(|v| v.powf(m)).collect();
            let dpm: Vec<f64> = u.iter().map(|v| m * v.powf(m - 1.0)).collect();
            for j in 0..n {
                let jm = (j + n - 1) % n;
                let jp = (j + 1) % n;
                let lap = (pm[jm] - 2.0 * pm[j] + pm[jp]) * self.inv_h2;
                let reaction = self.grid.density(j, u[j]);
                self.r[j] = -((u[j] - old[j]) * inv_dt - lap - reaction);
                self.a[j] = -dpm[jm] * self.inv_h2;
                self.c[j] = -dpm[jp] * self.inv_h2;
                self.d[j] = inv_dt + 2.0 * dpm[j] * self.inv_h2 - self.grid.density_du(j, u[j]);
            }
            linalg::cyclic(&self.a, &self.d, &self.c, &mut self.r);
            let mut step = 0.0f64;
            for (uj, dj) in u.iter_mut().zip(&self.r) {
                *uj += dj;
                step = step.max(dj.abs());
            }
            if !step.is_finite() || u.iter().any(|&v| v <= 0.0) {
                return false;
            }
            if step <= 1e-14 * scale {
                return true;
            }
        }
        false
    }
}

fn march(
    env: &Environment,
    cfg: &SteadyConfig,
    start: f64,
    kind: SteadyKind,
) -> Result<PeriodicSteadyState, SteadyError> {
    let n = cfg.cells_per_unit;
    let k = env.lipschitz_bound(Default::default()).unwrap_or(1.0);
    let mut dt = (0.5 / k).min(0.25);
    let mut marcher = Marcher::new(env, n);
    let mut u = vec![start; n];
    let mut unit_start = u.clone();
    let mut t = 0.0;
    let mut next_unit = 1.0;
    let mut violation = 0.0f64;
    let sign = if kind == SteadyKind::Maximal {
        -1.0
    } else {
        1.0
    };

    loop {
        if t >= cfg.max_time {
            let change = sup_diff(&u, &unit_start);
            return Err(SteadyError::NotConverged { time: t, change });
        }
        let h = dt.min(next_unit - t);
        let old = u.clone();
        if !marcher.newton(&mut u, &old, 1.0 / h) {
            u = old;
            dt *= 0.5;
            if dt < 1e-8 {
                return Err(SteadyError::Newton { time: t });
            }
            continue;
        }
        for (new, prev) in u.iter().zip(&old) {
            violation = violation.max(-sign * (new - prev));
        }
        t += h;
        if t >= next_unit - 1e-12 {
            t = next_unit;
            next_unit += 1.0;
            let change = sup_diff(&u, &unit_start);
            if change <= cfg.tol {
                break;
            }
            unit_start.clone_from(&u);
        }
    }

    let marched = u.clone();
    let zeros = u.clone();
    if !marcher.newton(&mut u, &zeros, 0.0) || sup_diff(&u, &marched) > 10.0 * cfg.tol {
        u = marched;
    }
    let mut state = PeriodicSteadyState::from_density(env, u, kind);
    state.monotonicity_violation = violation;
    state.march_time = t;
    Ok(state)
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
