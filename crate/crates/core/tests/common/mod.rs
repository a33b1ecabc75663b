#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sharpwave::model::{
    density_from_pressure, Environment, HarmonicSeries, PiecewisePoly, SamplingGrid,
};
use sharpwave::solver::exact::{reaction_free, SupersolutionParams, Zkb};
use sharpwave::solver::{
    solve, Field, LeftBoundary, Recorder, Snapshot, SolverConfig, SolverError, Stop,
};
use std::f64::consts::PI;

pub fn periodic_monostable(m: f64) -> Environment {
    Environment::monostable(
        m,
        HarmonicSeries::cosine(1.0, 0.2),
        PiecewisePoly::single(vec![0.0, 1.0]),
    )
    .unwrap()
}

pub fn combustion03() -> Environment {
    Environment::combustion(
        2.0,
        HarmonicSeries::constant(1.0),
        0.3,
        HarmonicSeries::cosine(1.0, 0.3),
    )
    .unwrap()
}

pub fn bistable025() -> Environment {
    Environment::bistable(2.0, HarmonicSeries::constant(1.0), 0.25).unwrap()
}

/// Even bump `h (1 − (x/w)²)_+` on the half line.
#[derive(Debug, Clone, Copy)]
pub struct Bump {
    pub height: f64,
    pub width: f64,
}

impl Bump {
    pub fn field(&self, n: usize) -> Field {
        let Bump { height, width } = *self;
        Field::from_fn(n, 0.0, width + 1.0, width, 0.0, move |x| {
            (height * (1.0 - (x / width).powi(2))).max(0.0)
        })
    }
}

/// Pairs that are either ordered or cross exactly once (taller and
/// narrower against lower and wider).
pub fn random_pairs(seed: u64, count: usize) -> Vec<(Bump, Bump, bool)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let h: [f64; 2] = [rng.random_range(0.2..1.5), rng.random_range(0.2..1.5)];
            let w: [f64; 2] = [rng.random_range(0.3..1.5), rng.random_range(0.3..1.5)];
            let (h_hi, h_lo) = (h[0].max(h[1]), h[0].min(h[1]) * 0.9);
            let (w_hi, w_lo) = (w[0].max(w[1]), w[0].min(w[1]) * 0.9);
            let crossing = i % 2 == 1;
            let a = Bump {
                height: h_hi,
                width: if crossing { w_lo } else { w_hi },
            };
            let b = Bump {
                height: h_lo,
                width: if crossing { w_hi } else { w_lo },
            };
            (a, b, crossing)
        })
        .collect()
}

pub fn half_line_run(
    env: &Environment,
    bump: Bump,
    n: usize,
    t_end: f64,
) -> Result<Vec<Snapshot>, SolverError> {
    let rec = Recorder {
        snapshot_every: Some(1.0 / 32.0),
        trajectory_spacing: 1e-2,
    };
    Ok(solve(
        env,
        bump.field(n),
        Stop::at_time(t_end),
        half_line(n),
        &rec,
        None,
    )?
    .snapshots)
}

/// Fourier collocation on `x_j = j/M` for `(p^m)'' + p(κ − p) = 0` with
/// `κ = 1 + amp·cos(2πx)`, solved by Newton from `p = κ`.
pub fn collocation_oracle(m: f64, amp: f64, points: usize) -> Vec<f64> {
    assert!(points.is_multiple_of(2));
    let h = 2.0 * PI / points as f64;
    let scale = (2.0 * PI) * (2.0 * PI);
    let d2 = DMatrix::from_fn(points, points, |j, k| {
        let v = if j == k {
            -PI * PI / (3.0 * h * h) - 1.0 / 6.0
        } else {
            let d = j as f64 - k as f64;
            let sign = if (j + k) % 2 == 0 { 1.0 } else { -1.0 };
            -sign / (2.0 * (0.5 * d * h).sin().powi(2))
        };
        v * scale
    });
    let kappa: Vec<f64> = (0..points)
        .map(|j| 1.0 + amp * (2.0 * PI * j as f64 / points as f64).cos())
        .collect();
    let mut p = DVector::from_vec(kappa.clone());
    for _ in 0..50 {
        let pm = p.map(|u| u.powf(m));
        let react = DVector::from_fn(points, |j, _| p[j] * (kappa[j] - p[j]));
        let f = &d2 * pm + react;
        if f.amax() < 1e-12 {
            break;
        }
        let mut jac = d2.clone();
        for k in 0..points {
            let dpm = m * p[k].powf(m - 1.0);
            for j in 0..points {
                jac[(j, k)] *= dpm;
            }
            jac[(k, k)] += kappa[k] - 2.0 * p[k];
        }
        let step = jac.lu().solve(&f).expect("collocation Jacobian is regular");
        p -= step;
    }
    p.iter().copied().collect()
}

pub fn half_line(n: usize) -> SolverConfig {
    SolverConfig {
        cells_per_unit: n,
        left: LeftBoundary::Symmetric,
        left_margin: None,
        ..Default::default()
    }
}

pub fn quiet() -> Recorder {
    Recorder {
        snapshot_every: None,
        trajectory_spacing: 1e-3,
    }
}

/// Largest relative front error against the source solution on `t ∈ [1, 2]`.
pub fn zkb_error(m: f64, n: usize) -> f64 {
    let z = Zkb::unit_front(m);
    let field = Field::from_fn(n, 0.0, 3.0, 1.0, 1.0, |x| z.pressure(x, 1.0));
    let out = solve(
        &reaction_free(m),
        field,
        Stop::at_time(2.0),
        half_line(n),
        &quiet(),
        None,
    )
    .unwrap();
    let tr = out.trajectory;
    assert_eq!(*tr.t.last().unwrap(), 2.0);
    tr.t.iter()
        .zip(&tr.b)
        .map(|(&t, &b)| ((b - z.front(t)) / z.front(t)).abs())
        .fold(0.0, f64::max)
}

/// `(K0, 0.01)` and `(2·K0, 0.004)` with `K0` the Lipschitz bound of the
/// periodic monostable environment.
pub fn supersolution_cases(m: f64) -> Vec<SupersolutionParams> {
    let k0 = periodic_monostable(m)
        .lipschitz_bound(SamplingGrid::default())
        .unwrap();
    [(k0, 0.01), (2.0 * k0, 0.004)]
        .into_iter()
        .map(|(lipschitz, delta_star)| SupersolutionParams {
            delta_star,
            lipschitz,
            x0: 0.0,
            m,
        })
        .collect()
}

/// Largest `u − ū` over a run started from the supersolution, sampled every
/// 1/32 up to t = 3.
pub fn supersolution_excess(p: &SupersolutionParams, n: usize) -> f64 {
    let env = periodic_monostable(p.m);
    let field = Field::from_fn(n, 0.0, p.rho(0.0) + 1.0, p.rho(0.0), 0.0, |x| {
        p.pressure(x, 0.0)
    });
    let rec = Recorder {
        snapshot_every: Some(1.0 / 32.0),
        trajectory_spacing: 1e-3,
    };
    let out = solve(&env, field, Stop::at_time(3.0), half_line(n), &rec, None).unwrap();
    assert_eq!(out.snapshots.len(), 97);
    let mut worst = f64::NEG_INFINITY;
    for s in &out.snapshots {
        for (i, &v) in s.v.iter().enumerate() {
            let u = density_from_pressure(v, p.m).unwrap();
            worst = worst.max(u - p.density(s.x(i), s.t));
        }
    }
    worst
}
