//! Pressure-variable solver with a tracked sharp front.
//!
//! On the positivity set `x < b(t)` the pressure obeys
//! `v_t = (m−1) v v_xx + v_x² + g(x,v)` and the front moves by Darcy's law
//! `b' = −v_x(b−0, t)`. Nodes live on a fixed global lattice `x_i = i/N`, so
//! periodic coefficients are sampled identically in every period and a shift
//! by `k` periods is exact.
//!
//! The node nearest the front but left of it is solved with a nonuniform
//! stencil against the zero at `b`. When that node falls within half a cell of
//! `b` it is slaved to the quadratic through its two left neighbours and the
//! zero at `b`, so the effective right spacing stays in `[dx/2, 3dx/2)`.

pub mod exact;

use crate::linalg;
use crate::model::{density_from_pressure_unchecked, Environment, GridReaction, SamplingGrid};
use crate::stationary::PeriodicSteadyState;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolverError {
    #[error("non-finite value at x = {x}, t = {t}")]
    NonFinite { x: f64, t: f64 },
    #[error("negative undershoot {value:.3e} at x = {x}, t = {t}")]
    Undershoot { x: f64, t: f64, value: f64 },
    #[error("step limit {0} reached")]
    MaxSteps(usize),
    #[error("time step collapsed to {dt:.3e} at t = {t}")]
    StepCollapse { dt: f64, t: f64 },
    #[error("window too small: {0}")]
    Window(String),
    #[error("too few active nodes behind the front at b = {b}")]
    TooFewActive { b: f64 },
    #[error("invalid solver configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimeScheme {
    /// Diffusion `(m−1) v^n v_xx^{n+1}` implicit, `v_x²` and `g` explicit.
    SemiImplicit,
    /// Fully explicit with `dt = σ dx² / max(2(m−1) max v, ε)`.
    Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SlopeOrder {
    First,
    Second,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LeftBoundary {
    /// Clamp to the left steady state `q2` at `x_left`.
    Dirichlet,
    /// Mirror symmetry about `x_left` (for solutions even about the origin).
    Symmetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Nodes per unit length; `dx = 1 / cells_per_unit`.
    pub cells_per_unit: usize,
    pub sigma: f64,
    pub scheme: TimeScheme,
    pub slope_order: SlopeOrder,
    pub left: LeftBoundary,
    /// Zero nodes kept beyond the front.
    pub right_padding: usize,
    /// Whole periods are dropped on the left once `b − x_left` exceeds this.
    pub left_margin: Option<f64>,
    pub dt_max: f64,
    /// Caps `dt` at this multiple of `dx`, keeping the front error first order.
    pub dt_per_dx: f64,
    /// Steps run at `σ/4` after the start.
    pub startup_steps: usize,
    pub max_steps: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            cells_per_unit: 256,
            sigma: 0.8,
            scheme: TimeScheme::SemiImplicit,
            slope_order: SlopeOrder::Second,
            left: LeftBoundary::Dirichlet,
            right_padding: 32,
            left_margin: Some(24.0),
            dt_max: 0.02,
            dt_per_dx: 0.5,
            startup_steps: 100,
            max_steps: 50_000_000,
        }
    }
}

impl SolverConfig {
    pub fn dx(&self) -> f64 {
        1.0 / self.cells_per_unit as f64
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        if self.cells_per_unit < 4 {
            return Err(SolverError::Config(
                "cells_per_unit must be at least 4".into(),
            ));
        }
        if !(self.sigma > 0.0 && self.sigma <= 0.9) {
            return Err(SolverError::Config(format!(
                "sigma = {} outside (0, 0.9]",
                self.sigma
            )));
        }
        if self.right_padding < 10 {
            return Err(SolverError::Config(
                "right padding must be at least 10 nodes".into(),
            ));
        }
        if !(self.dt_max > 0.0) {
            return Err(SolverError::Config("dt_max must be positive".into()));
        }
        if !(self.dt_per_dx > 0.0) {
            return Err(SolverError::Config("dt_per_dx must be positive".into()));
        }
        Ok(())
    }
}

/// Pressure samples on `x_i = (i0 + i)/N` with a sub-grid front `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field {
    pub cells_per_unit: usize,
    pub i0: i64,
    pub v: Vec<f64>,
    pub b: f64,
    pub t: f64,
}

impl Field {
    pub fn dx(&self) -> f64 {
        1.0 / self.cells_per_unit as f64
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        (self.i0 + i as i64) as f64 / self.cells_per_unit as f64
    }

    pub fn x_left(&self) -> f64 {
        self.x(0)
    }

    pub fn x_right(&self) -> f64 {
        self.x(self.v.len() - 1)
    }

    /// Index of the last node strictly left of `b`.
    pub fn last_active(&self) -> Option<usize> {
        let s = self.b * self.cells_per_unit as f64 - self.i0 as f64;
        let mut j = s.ceil() as i64 - 1;
        // guard against rounding in the ceil
        while j >= 0 && self.x(j as usize) >= self.b {
            j -= 1;
        }
        while ((j + 1) as usize) < self.v.len() && self.x((j + 1) as usize) < self.b {
            j += 1;
        }
        (j >= 0).then_some(j as usize)
    }

    /// Linear interpolation of `v`, zero at and beyond `b`; `None` left of the
    /// window.
    pub fn value_at(&self, x: f64) -> Option<f64> {
        sample_profile(self.cells_per_unit, self.i0, &self.v, self.b, x)
    }

    /// Density profile `u_i`.
    pub fn density(&self, m: f64) -> Vec<f64> {
        self.v
            .iter()
            .map(|&v| density_from_pressure_unchecked(v, m))
            .collect()
    }

    /// `Σ u_i dx`.
    pub fn mass(&self, m: f64) -> f64 {
        self.density(m).iter().sum::<f64>() * self.dx()
    }

    /// Field from a pressure profile function sampled on `[x_left, x_right]`
    /// with front `b`. Nodes at or beyond `b` are zero.
    pub fn from_fn(
        cells_per_unit: usize,
        x_left: f64,
        x_right: f64,
        b: f64,
        t: f64,
        profile: impl Fn(f64) -> f64,
    ) -> Self {
        let n = cells_per_unit as f64;
        let i0 = (x_left * n).round() as i64;
        let i1 = (x_right * n).round() as i64;
        let v = (i0..=i1)
            .map(|i| {
                let x = i as f64 / n;
                if x < b {
                    profile(x).max(0.0)
                } else {
                    0.0
                }
            })
            .collect();
        Self {
            cells_per_unit,
            i0,
            v,
            b,
            t,
        }
    }
}

pub(crate) fn sample_profile(n: usize, i0: i64, v: &[f64], b: f64, x: f64) -> Option<f64> {
    let s = x * n as f64 - i0 as f64;
    if s < -1e-9 {
        return None;
    }
    if x >= b {
        return Some(0.0);
    }
    let j = (s.floor().max(0.0)) as usize;
    if j + 1 >= v.len() {
        return Some(0.0);
    }
    let w = (s - j as f64).clamp(0.0, 1.0);
    let xr = (i0 + j as i64 + 1) as f64 / n as f64;
    let right = if xr >= b { 0.0 } else { v[j + 1] };
    if xr > b {
        // interpolate between node j and the zero at b
        let xl = (i0 + j as i64) as f64 / n as f64;
        let w = ((x - xl) / (b - xl)).clamp(0.0, 1.0);
        return Some(v[j] * (1.0 - w));
    }
    Some(v[j] * (1.0 - w) + right * w)
}

/// Heaviside initial pressure `q2(x)` for `x < k`, zero beyond; `b = k`.
pub fn init_heaviside(
    q2: &PeriodicSteadyState,
    k: f64,
    window: (f64, f64),
    cells_per_unit: usize,
) -> Result<Field, SolverError> {
    let (x_left, x_right) = window;
    let dx = 1.0 / cells_per_unit as f64;
    if !(x_left + 2.0 * dx < k && k + 10.0 * dx <= x_right) {
        return Err(SolverError::Window(format!(
            "[{x_left}, {x_right}] does not contain k = {k} with padding"
        )));
    }
    let n = cells_per_unit as f64;
    Ok(Field::from_fn(
        cells_per_unit,
        x_left,
        x_right,
        k,
        0.0,
        |x| {
            let i = (x * n).round() as i64;
            if q2.cells_per_unit() == cells_per_unit {
                q2.pressure_at_index(i)
            } else {
                q2.pressure_at(x)
            }
        },
    ))
}

/// Quadratic through `(x0,y0), (x1,y1), (x2,y2)` evaluated at `x`.
#[inline]
fn quadratic(x0: f64, y0: f64, x1: f64, y1: f64, x2: f64, y2: f64, x: f64) -> f64 {
    let l0 = (x - x1) * (x - x2) / ((x0 - x1) * (x0 - x2));
    let l1 = (x - x0) * (x - x2) / ((x1 - x0) * (x1 - x2));
    let l2 = (x - x0) * (x - x1) / ((x2 - x0) * (x2 - x1));
    y0 * l0 + y1 * l1 + y2 * l2
}

/// Front geometry: last active node `j`, last computed node `e` and the
/// distance `h = b − x_e`.
#[derive(Debug, Clone, Copy)]
struct Geometry {
    j: usize,
    e: usize,
    h: f64,
}

fn geometry(field: &Field) -> Result<Geometry, SolverError> {
    let dx = field.dx();
    let j = field
        .last_active()
        .ok_or(SolverError::TooFewActive { b: field.b })?;
    let gap = field.b - field.x(j);
    if gap < 0.5 * dx && j >= 1 {
        Ok(Geometry {
            j,
            e: j - 1,
            h: field.b - field.x(j - 1),
        })
    } else {
        Ok(Geometry { j, e: j, h: gap })
    }
}

/// `−v_x(b−0)` from the computed nodes and the zero at `b`.
fn edge_slope(field: &Field, g: &Geometry, order: SlopeOrder) -> f64 {
    let ve = field.v[g.e];
    if order == SlopeOrder::First || g.e == 0 {
        return ve / g.h;
    }
    let dx = field.dx();
    let vm = field.v[g.e - 1];
    // derivative at b of the quadratic through (−dx−h, vm), (−h, ve), (0, 0)
    let h = g.h;
    let d = vm * h / (dx * (dx + h)) - ve * (dx + h) / (dx * h);
    -d
}

/// Darcy speed `−v_x(b−0)` as used by the front update.
pub fn front_speed(field: &Field, cfg: &SolverConfig) -> Result<f64, SolverError> {
    let g = geometry(field)?;
    Ok(edge_slope(field, &g, cfg.slope_order))
}

/// Godunov flux for `v_t = v_x²`.
#[inline]
fn hamiltonian(pm: f64, pp: f64) -> f64 {
    if pm <= pp {
        (pm * pm).max(pp * pp)
    } else if pp <= 0.0 && 0.0 <= pm {
        0.0
    } else {
        (pm * pm).min(pp * pp)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    pub dt: f64,
    pub slope: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub steps: usize,
    /// `Σ |clipped v| dx` over the run.
    pub clipped_mass: f64,
    /// Number of steps where a negative front slope was clamped to 0.
    pub slope_clamps: usize,
    pub min_dt: f64,
    pub max_dt: f64,
}

/// Stepper bound to one environment and configuration.
pub struct Solver {
    cfg: SolverConfig,
    grid: GridReaction,
    m: f64,
    lipschitz: f64,
    clamp: Option<Vec<f64>>,
    stats: RunStats,
    a: Vec<f64>,
    d: Vec<f64>,
    c: Vec<f64>,
    r: Vec<f64>,
    scratch: Vec<f64>,
}

impl Solver {
    /// `left_state` supplies the Dirichlet clamp `q2`; required for
    /// [`LeftBoundary::Dirichlet`].
    pub fn new(
        env: &Environment,
        cfg: SolverConfig,
        left_state: Option<&PeriodicSteadyState>,
    ) -> Result<Self, SolverError> {
        cfg.validate()?;
        let n = cfg.cells_per_unit;
        let clamp = match (cfg.left, left_state) {
            (LeftBoundary::Dirichlet, None) => {
                return Err(SolverError::Config(
                    "Dirichlet left boundary needs a steady state".into(),
                ))
            }
            (_, Some(q)) => Some(
                (0..n)
                    .map(|i| {
                        if q.cells_per_unit() == n {
                            q.q[i]
                        } else {
                            q.pressure_at(i as f64 / n as f64)
                        }
                    })
                    .collect(),
            ),
            (_, None) => None,
        };
        let lipschitz = env
            .lipschitz_bound(SamplingGrid::default())
            .map_err(|e| SolverError::Config(e.to_string()))?;
        Ok(Self {
            cfg,
            grid: env.grid_reaction(n),
            m: env.m(),
            lipschitz,
            clamp,
            stats: RunStats {
                min_dt: f64::INFINITY,
                ..RunStats::default()
            },
            a: Vec::new(),
            d: Vec::new(),
            c: Vec::new(),
            r: Vec::new(),
            scratch: Vec::new(),
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn stats(&self) -> RunStats {
        self.stats
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn check_field(&self, field: &Field) -> Result<(), SolverError> {
        if field.cells_per_unit != self.cfg.cells_per_unit {
            return Err(SolverError::Config(format!(
                "field has {} cells per unit, solver {}",
                field.cells_per_unit, self.cfg.cells_per_unit
            )));
        }
        if !(field.x_left() < field.b && field.b < field.x_right()) {
            return Err(SolverError::Window(format!(
                "front {} outside [{}, {}]",
                field.b,
                field.x_left(),
                field.x_right()
            )));
        }
        Ok(())
    }

    /// Admissible step for the current field (before any external cap).
    fn admissible_dt(&self, field: &Field, g: &Geometry, slope: f64) -> f64 {
        let dx = field.dx();
        let inv_dx = field.cells_per_unit as f64;
        let mut max_p = slope.abs();
        let mut max_v = 0.0f64;
        for i in 1..=g.e {
            max_p = max_p.max(((field.v[i] - field.v[i - 1]) * inv_dx).abs());
            max_v = max_v.max(field.v[i]);
        }
        let sigma = if self.stats.steps < self.cfg.startup_steps {
            0.25 * self.cfg.sigma
        } else {
            self.cfg.sigma
        };
        let mut dt = self
            .cfg
            .dt_max
            .min(self.cfg.dt_per_dx * dx)
            .min(1.0 / self.lipschitz);
        if max_p > 0.0 {
            dt = dt.min(dx / (2.0 * max_p));
        }
        if self.cfg.scheme == TimeScheme::Explicit {
            let diff = (2.0 * (self.m - 1.0) * max_v).max(1e-12);
            dt = dt.min(dx * dx / diff);
        }
        sigma * dt
    }

    fn left_value(&self, field: &Field) -> Option<f64> {
        match self.cfg.left {
            LeftBoundary::Dirichlet => self.clamp.as_ref().map(|c| c[self.grid.slot(field.i0)]),
            LeftBoundary::Symmetric => None,
        }
    }

    /// Advances `field` by one step of length at most `dt_cap`.
    pub fn step(&mut self, field: &mut Field, dt_cap: f64) -> Result<StepInfo, SolverError> {
        self.check_field(field)?;
        let g = geometry(field)?;
        if g.e == 0 {
            return Err(SolverError::TooFewActive { b: field.b });
        }
        let raw_slope = edge_slope(field, &g, self.cfg.slope_order);
        let slope = if raw_slope < 0.0 {
            self.stats.slope_clamps += 1;
            0.0
        } else {
            raw_slope
        };
        let dt = self.admissible_dt(field, &g, slope).min(dt_cap);
        if !(dt > 1e-14) {
            return Err(SolverError::StepCollapse { dt, t: field.t });
        }

        let e = g.e;
        let dx = field.dx();
        let inv_dx = field.cells_per_unit as f64;
        let inv_dx2 = inv_dx * inv_dx;
        let h = g.h;
        let mm1 = self.m - 1.0;
        let left = self.left_value(field);
        let v = &field.v;

        let size = e + 1;
        self.a.resize(size, 0.0);
        self.d.resize(size, 0.0);
        self.c.resize(size, 0.0);
        self.r.resize(size, 0.0);
        self.scratch.resize(size, 0.0);

        for i in 0..size {
            let vi = v[i];
            let slot = self.grid.slot(field.i0 + i as i64);
            let react = self.grid.pressure(slot, vi);
            let diff = mm1 * vi;
            if i == 0 {
                if let Some(q) = left {
                    self.a[0] = 0.0;
                    self.c[0] = 0.0;
                    self.d[0] = 1.0;
                    self.r[0] = q;
                    continue;
                }
                // mirror ghost v_{−1} = v_1: v_x² vanishes, v_xx = 2(v_1 − v_0)/dx²
                let lap = 2.0 * (v[1] - vi) * inv_dx2;
                match self.cfg.scheme {
                    TimeScheme::SemiImplicit => {
                        self.a[0] = 0.0;
                        self.d[0] = 1.0 + 2.0 * dt * diff * inv_dx2;
                        self.c[0] = -2.0 * dt * diff * inv_dx2;
                        self.r[0] = vi + dt * react;
                    }
                    TimeScheme::Explicit => {
                        self.r[0] = vi + dt * (diff * lap + react);
                    }
                }
                continue;
            }
            let pm = (vi - v[i - 1]) * inv_dx;
            let (pp, right_val, right_gap) = if i == e {
                (-vi / h, 0.0, h)
            } else {
                ((v[i + 1] - vi) * inv_dx, v[i + 1], dx)
            };
            let ham = hamiltonian(pm, pp);
            // nonuniform second difference with spacings dx (left), right_gap
            let wl = 2.0 / (dx * (dx + right_gap));
            let wr = 2.0 / (right_gap * (dx + right_gap));
            match self.cfg.scheme {
                TimeScheme::SemiImplicit => {
                    // the implicit zero sits at the advanced front
                    let (wl, wr) = if i == e {
                        let gap = h + dt * slope;
                        (2.0 / (dx * (dx + gap)), 2.0 / (gap * (dx + gap)))
                    } else {
                        (wl, wr)
                    };
                    self.a[i] = -dt * diff * wl;
                    self.c[i] = if i == e { 0.0 } else { -dt * diff * wr };
                    self.d[i] = 1.0 + dt * diff * (wl + wr);
                    self.r[i] = vi + dt * (ham + react);
                }
                TimeScheme::Explicit => {
                    let lap = wl * v[i - 1] - (wl + wr) * vi + wr * right_val;
                    self.r[i] = vi + dt * (diff * lap + ham + react);
                }
            }
        }
        if self.cfg.scheme == TimeScheme::SemiImplicit {
            linalg::thomas(&self.a, &self.d, &self.c, &mut self.r, &mut self.scratch);
        }

        let scale = self
            .r
            .iter()
            .fold(0.0f64, |acc, &x| acc.max(x.abs()))
            .max(1.0);
        for i in 0..size {
            let value = self.r[i];
            if !value.is_finite() {
                return Err(SolverError::NonFinite {
                    x: field.x(i),
                    t: field.t,
                });
            }
            if value < 0.0 {
                if value > -1e-12 * scale {
                    self.stats.clipped_mass += -value * dx;
                    self.r[i] = 0.0;
                } else {
                    return Err(SolverError::Undershoot {
                        x: field.x(i),
                        t: field.t,
                        value,
                    });
                }
            }
        }
        field.v[..size].copy_from_slice(&self.r[..size]);
        for value in &mut field.v[size..=g.j] {
            *value = 0.0;
        }

        field.b += dt * slope;
        field.t += dt;
        self.ensure_padding(field);
        self.rebuild_front(field, e);
        self.truncate_left(field);

        self.stats.steps += 1;
        self.stats.min_dt = self.stats.min_dt.min(dt);
        self.stats.max_dt = self.stats.max_dt.max(dt);
        Ok(StepInfo { dt, slope })
    }

    fn ensure_padding(&self, field: &mut Field) {
        let n = field.cells_per_unit as f64;
        let needed = (field.b * n).ceil() as i64 - field.i0 + self.cfg.right_padding as i64;
        if needed >= field.v.len() as i64 {
            let chunk = self.cfg.right_padding.max(field.cells_per_unit / 4);
            let new_len = needed as usize + chunk;
            field.v.resize(new_len, 0.0);
        }
    }

    /// Fills nodes in `(e, j_new]` from the quadratic through the last two
    /// computed nodes and the zero at the new front, then slaves the node
    /// closest to the front if it is within half a cell.
    fn rebuild_front(&self, field: &mut Field, e: usize) {
        let Some(j) = field.last_active() else {
            return;
        };
        let xb = field.b;
        if j > e && e >= 1 {
            let (x0, x1) = (field.x(e - 1), field.x(e));
            let (y0, y1) = (field.v[e - 1], field.v[e]);
            for i in e + 1..=j {
                let x = field.x(i);
                let q = quadratic(x0, y0, x1, y1, xb, 0.0, x);
                let lin = y1 * (xb - x) / (xb - x1);
                field.v[i] = if q.is_finite() && q >= 0.0 { q } else { lin };
            }
        }
        let dx = field.dx();
        if xb - field.x(j) < 0.5 * dx && j >= 2 {
            let (x0, x1, x) = (field.x(j - 2), field.x(j - 1), field.x(j));
            let (y0, y1) = (field.v[j - 2], field.v[j - 1]);
            let q = quadratic(x0, y0, x1, y1, xb, 0.0, x);
            let lin = y1 * (xb - x) / (xb - x1);
            field.v[j] = if q.is_finite() && q >= 0.0 { q } else { lin };
        }
    }

    fn truncate_left(&self, field: &mut Field) {
        let Some(margin) = self.cfg.left_margin else {
            return;
        };
        if self.cfg.left != LeftBoundary::Dirichlet {
            return;
        }
        let n = field.cells_per_unit;
        let behind = field.b - field.x_left();
        if behind > margin + 1.0 {
            let periods = (behind - margin).floor() as usize;
            let drop = periods * n;
            if drop > 0 && drop + 4 < field.v.len() {
                field.v.drain(..drop);
                field.i0 += drop as i64;
                if let Some(q) = self.left_value(field) {
                    field.v[0] = q;
                }
            }
        }
    }

    /// Runs until `stop` fires, recording the front at every step (thinned
    /// to `rec.trajectory_spacing`) and snapshots every `rec.snapshot_every`.
    pub fn run(
        &mut self,
        mut field: Field,
        stop: Stop,
        rec: &Recorder,
    ) -> Result<RunOutput, SolverError> {
        self.check_field(&field)?;
        let mut traj = TrajectoryBuilder::new(rec.trajectory_spacing);
        let mut snapshots = Vec::new();
        let slope = front_speed(&field, &self.cfg)?;
        traj.push(field.t, field.b, slope, true);
        let mut next_snap = rec.snapshot_every.map(|_| field.t);
        let mut record_snapshot = |field: &Field, next: &mut Option<f64>| {
            if let (Some(at), Some(every)) = (*next, rec.snapshot_every) {
                if field.t >= at - 1e-12 {
                    snapshots.push(Snapshot::of(field));
                    *next = Some(at + every);
                }
            }
        };
        record_snapshot(&field, &mut next_snap);
        let start_steps = self.stats.steps;
        while !stop.reached(&field) {
            if self.stats.steps - start_steps >= self.cfg.max_steps {
                return Err(SolverError::MaxSteps(self.cfg.max_steps));
            }
            let mut cap = stop.until_time - field.t;
            if let Some(at) = next_snap {
                cap = cap.min(at - field.t);
            }
            if cap <= 1e-13 {
                // land exactly on the requested instant
                field.t = field
                    .t
                    .max(stop.until_time.min(next_snap.unwrap_or(f64::INFINITY)));
            } else {
                self.step(&mut field, cap)?;
                if (field.t - stop.until_time).abs() < 1e-12 {
                    field.t = stop.until_time;
                }
                if let Some(at) = next_snap {
                    if (field.t - at).abs() < 1e-12 {
                        field.t = at;
                    }
                }
            }
            let slope = front_speed(&field, &self.cfg).unwrap_or(f64::NAN);
            traj.push(field.t, field.b, slope, stop.reached(&field));
            record_snapshot(&field, &mut next_snap);
        }
        Ok(RunOutput {
            field,
            trajectory: traj.finish(),
            snapshots,
            stats: self.stats,
        })
    }
}

/// Stop when either the time or the front target is reached.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stop {
    pub until_time: f64,
    pub until_front: Option<f64>,
}

impl Stop {
    pub fn at_time(t: f64) -> Self {
        Self {
            until_time: t,
            until_front: None,
        }
    }

    pub fn at_front(b: f64, t_max: f64) -> Self {
        Self {
            until_time: t_max,
            until_front: Some(b),
        }
    }

    fn reached(&self, field: &Field) -> bool {
        field.t >= self.until_time || self.until_front.is_some_and(|b| field.b >= b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Recorder {
    pub snapshot_every: Option<f64>,
    /// Minimum time between stored trajectory samples.
    pub trajectory_spacing: f64,
}

impl Default for Recorder {
    fn default() -> Self {
        Self {
            snapshot_every: Some(1.0 / 32.0),
            trajectory_spacing: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub b: f64,
    pub i0: i64,
    pub cells_per_unit: usize,
    pub v: Vec<f64>,
}

impl Snapshot {
    pub fn of(field: &Field) -> Self {
        // trailing zeros beyond the front are dropped
        let keep = field
            .last_active()
            .map_or(1, |j| (j + 2).min(field.v.len()));
        Self {
            t: field.t,
            b: field.b,
            i0: field.i0,
            cells_per_unit: field.cells_per_unit,
            v: field.v[..keep].to_vec(),
        }
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        (self.i0 + i as i64) as f64 / self.cells_per_unit as f64
    }

    pub fn x_left(&self) -> f64 {
        self.x(0)
    }

    pub fn value_at(&self, x: f64) -> Option<f64> {
        sample_profile(self.cells_per_unit, self.i0, &self.v, self.b, x)
    }

    /// Value at global node index `i`; zero right of the stored range.
    pub fn value_at_index(&self, i: i64) -> Option<f64> {
        let k = i - self.i0;
        if k < 0 {
            None
        } else {
            Some(self.v.get(k as usize).copied().unwrap_or(0.0))
        }
    }
}

/// Sampled `(t, b, −v_x(b−0), b')` along a run. `speed` is the centered
/// difference of the recorded `b`; `slope` is the Darcy slope.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FrontTrajectory {
    pub t: Vec<f64>,
    pub b: Vec<f64>,
    pub slope: Vec<f64>,
    pub speed: Vec<f64>,
}

impl FrontTrajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Linear interpolation of `b` at time `t` (clamped to the range).
    pub fn b_at(&self, t: f64) -> f64 {
        interp(&self.t, &self.b, t)
    }

    pub fn slope_at(&self, t: f64) -> f64 {
        interp(&self.t, &self.slope, t)
    }

    /// Largest decrease of `b` between consecutive samples.
    pub fn max_retreat(&self) -> f64 {
        self.b.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max)
    }
}

pub(crate) fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    if x <= xs[0] {
        return ys[0];
    }
    let n = xs.len();
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let j = xs.partition_point(|&s| s <= x).clamp(1, n - 1);
    let w = (x - xs[j - 1]) / (xs[j] - xs[j - 1]);
    ys[j - 1] * (1.0 - w) + ys[j] * w
}

pub(crate) struct TrajectoryBuilder {
    spacing: f64,
    t: Vec<f64>,
    b: Vec<f64>,
    slope: Vec<f64>,
}

impl TrajectoryBuilder {
    pub(crate) fn new(spacing: f64) -> Self {
        Self {
            spacing,
            t: Vec::new(),
            b: Vec::new(),
            slope: Vec::new(),
        }
    }

    pub(crate) fn push(&mut self, t: f64, b: f64, slope: f64, force: bool) {
        if let Some(&last) = self.t.last() {
            if t <= last || (!force && t - last < self.spacing) {
                return;
            }
        }
        self.t.push(t);
        self.b.push(b);
        self.slope.push(slope);
    }

    pub(crate) fn finish(self) -> FrontTrajectory {
        let n = self.t.len();
        let speed = (0..n)
            .map(|i| {
                let (lo, hi) = (i.saturating_sub(1), (i + 1).min(n - 1));
                if hi > lo {
                    (self.b[hi] - self.b[lo]) / (self.t[hi] - self.t[lo])
                } else {
                    0.0
                }
            })
            .collect();
        FrontTrajectory {
            t: self.t,
            b: self.b,
            slope: self.slope,
            speed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    pub field: Field,
    pub trajectory: FrontTrajectory,
    pub snapshots: Vec<Snapshot>,
    pub stats: RunStats,
}

/// One-shot convenience around [`Solver::run`].
pub fn solve(
    env: &Environment,
    field: Field,
    stop: Stop,
    cfg: SolverConfig,
    rec: &Recorder,
    left_state: Option<&PeriodicSteadyState>,
) -> Result<RunOutput, SolverError> {
    Solver::new(env, cfg, left_state)?.run(field, stop, rec)
}
