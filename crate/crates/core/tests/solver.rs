mod common;

use common::{
    half_line, periodic_monostable, quiet, supersolution_cases, supersolution_excess, zkb_error,
};
use sharpwave::model::Environment;
use sharpwave::solver::exact::{
    barenblatt_supersolution, fisher_wave_density, fisher_wave_pressure, reaction_free, Zkb,
};
use sharpwave::solver::{
    front_speed, solve, Field, Recorder, RunOutput, SolverConfig, Stop, TimeScheme,
};
use sharpwave::stationary::{find_min_steady, PeriodicSteadyState, SteadyConfig, SteadyKind};

#[test]
fn fisher_profile_solves_the_traveling_wave_equation() {
    // (u²)'' + u' + u(1 − u) = 0 for z < 0, checked with centered differences
    let h = 1e-4;
    let u = fisher_wave_density;
    let mut z = -20.0;
    while z < -h * 2.0 {
        let w = |s: f64| u(s) * u(s);
        let d2 = (w(z + h) - 2.0 * w(z) + w(z - h)) / (h * h);
        let d1 = (u(z + h) - u(z - h)) / (2.0 * h);
        let r = d2 + d1 + u(z) * (1.0 - u(z));
        assert!(r.abs() < 1e-6, "residual {r} at z = {z}");
        z += 0.037;
    }
    // Darcy at the edge: −(2u)'(0−) = 1
    let slope = (fisher_wave_pressure(-h) - fisher_wave_pressure(0.0)) / h;
    assert!((slope - 1.0).abs() < 1e-3);
}

fn fisher_run(n: usize, scheme: TimeScheme, t_end: f64) -> RunOutput {
    let env = Environment::fisher();
    let cfg = SolverConfig {
        cells_per_unit: n,
        scheme,
        ..Default::default()
    };
    let steady = PeriodicSteadyState::constant(&env, 1.0, 64, SteadyKind::Maximal);
    let field = Field::from_fn(n, -30.0, 2.0, 0.0, 0.0, fisher_wave_pressure);
    solve(
        &env,
        field,
        Stop::at_time(t_end),
        cfg,
        &quiet(),
        Some(&steady),
    )
    .unwrap()
}

#[test]
fn exact_fisher_wave_travels_at_unit_speed() {
    let out = fisher_run(256, TimeScheme::SemiImplicit, 20.0);
    let tr = &out.trajectory;
    let speed = (tr.b_at(20.0) - tr.b_at(10.0)) / 10.0;
    assert!((speed - 1.0).abs() < 0.02, "speed {speed}");
    // profile stays on the exact wave
    for (i, &v) in out.field.v.iter().enumerate() {
        let z = out.field.x(i) - out.field.b;
        assert!((v - fisher_wave_pressure(z)).abs() < 0.02);
    }
    // Darcy consistency between the recorded position and slope
    for k in 1..tr.t.len() - 1 {
        if tr.t[k] > 1.0 {
            assert!((tr.speed[k] - tr.slope[k]).abs() <= 0.05 * tr.slope[k]);
        }
    }
}

#[test]
fn explicit_and_semi_implicit_agree() {
    let a = fisher_run(64, TimeScheme::SemiImplicit, 2.0);
    let b = fisher_run(64, TimeScheme::Explicit, 2.0);
    assert!((a.field.b - b.field.b).abs() < 2.0 / 64.0);
    for i in 0..a.field.v.len().min(b.field.v.len()) {
        assert!((a.field.v[i] - b.field.v[i]).abs() < 0.03);
    }
}

#[test]
fn source_solution_front_converges_at_first_order() {
    for m in [2.0, 3.0] {
        let errs: Vec<f64> = [64, 128, 256].iter().map(|&n| zkb_error(m, n)).collect();
        assert!(errs.iter().all(|&e| e < 0.01), "m = {m}: {errs:?}");
        for w in errs.windows(2) {
            assert!(w[0] / w[1] >= 1.7, "m = {m}: {errs:?}");
        }
    }
}

#[test]
fn reaction_free_mass_is_conserved() {
    for m in [2.0, 3.0] {
        let n = 256;
        let z = Zkb::unit_front(m);
        // trapezoid weights on the half line; the mirror node counts half
        let mass = |f: &Field| {
            let u = f.density(m);
            (u.iter().sum::<f64>() - 0.5 * u[0]) / n as f64
        };
        let field = Field::from_fn(n, 0.0, 3.0, 1.0, 1.0, |x| z.pressure(x, 1.0));
        let m0 = mass(&field);
        let out = solve(
            &reaction_free(m),
            field,
            Stop::at_time(2.0),
            half_line(n),
            &quiet(),
            None,
        )
        .unwrap();
        let drift = (mass(&out.field) - m0).abs() / m0;
        assert!(drift <= 1e-3, "m = {m}: drift {drift}");
        assert_eq!(out.stats.clipped_mass, 0.0);
    }
}

#[test]
fn barenblatt_profile_is_a_supersolution() {
    // ū_t − (ū^m)_xx − f(x,ū)(κ − ū) ≥ 0 inside the support
    for m in [1.5, 2.0, 3.0] {
        let env = periodic_monostable(m);
        for p in supersolution_cases(m) {
            let u = |x: f64, t: f64| barenblatt_supersolution(&p, x, t);
            let (h, k) = (1e-5, 1e-6);
            for t in [0.0, 0.7, 1.9, 3.0] {
                let rho = p.rho(t);
                for j in 1..40 {
                    let x = rho * (j as f64 / 40.0) * 0.95;
                    let ut = (u(x, t + k) - u(x, t)) / k;
                    let w = |s: f64| u(s, t).powf(m);
                    let lap = (w(x + h) - 2.0 * w(x) + w(x - h)) / (h * h);
                    let ux = u(x, t);
                    let r = ut - lap - env.reaction_density(x, ux);
                    assert!(r >= -1e-5 * (1.0 + ut.abs()), "m={m} t={t} x={x} r={r}");
                }
            }
        }
    }
}

#[test]
fn run_from_supersolution_stays_below_it() {
    for m in [1.5, 2.0, 3.0] {
        for p in supersolution_cases(m) {
            let excess = supersolution_excess(&p, 256);
            assert!(excess <= 1e-6, "m = {m}: {p:?} exceeded by {excess}");
        }
    }
}

fn bump(center: f64, height: f64, width: f64) -> impl Fn(f64) -> f64 {
    move |x| (height * (1.0 - ((x - center) / width).powi(2))).max(0.0)
}

#[test]
fn shift_by_one_period_is_exact() {
    let env = periodic_monostable(2.0);
    let n = 64;
    let steady = find_min_steady(
        &env,
        &SteadyConfig {
            cells_per_unit: n,
            ..Default::default()
        },
    )
    .unwrap();
    let cfg = SolverConfig {
        cells_per_unit: n,
        ..Default::default()
    };
    let run = |shift: f64| {
        let field = Field::from_fn(n, -4.0 + shift, 4.0 + shift, 1.0 + shift, 0.0, |x| {
            steady.pressure_at(x) * (0.5 * (1.0 + shift - x)).min(1.0)
        });
        solve(
            &env,
            field,
            Stop::at_time(1.0),
            cfg,
            &quiet(),
            Some(&steady),
        )
        .unwrap()
    };
    let a = run(0.0);
    let b = run(1.0);
    assert!((b.field.b - a.field.b - 1.0).abs() < 1e-9);
    assert_eq!(a.field.i0 + n as i64, b.field.i0);
    assert_eq!(a.field.v.len(), b.field.v.len());
    for (va, vb) in a.field.v.iter().zip(&b.field.v) {
        assert!((va - vb).abs() < 1e-9);
    }
}

#[test]
fn positivity_set_persists_and_front_advances() {
    let env = periodic_monostable(2.0);
    let n = 128;
    let field = Field::from_fn(n, 0.0, 2.0, 0.5, 0.0, bump(0.0, 0.3, 0.5));
    let rec = Recorder::default();
    let out = solve(&env, field, Stop::at_time(2.0), half_line(n), &rec, None).unwrap();
    assert!(out.trajectory.max_retreat() < 1e-12);
    for s in &out.snapshots {
        for (i, &v) in s.v.iter().enumerate() {
            if s.x(i) < s.b - 1e-12 {
                assert!(v > 0.0, "t = {} x = {}", s.t, s.x(i));
            } else {
                assert_eq!(v, 0.0);
            }
        }
    }
}

#[test]
fn ordered_data_stay_ordered() {
    let env = periodic_monostable(2.0);
    let n = 128;
    let rec = Recorder::default();
    let run = |h: f64, w: f64| {
        let field = Field::from_fn(n, 0.0, 2.0, w, 0.0, bump(0.0, h, w));
        solve(&env, field, Stop::at_time(1.5), half_line(n), &rec, None).unwrap()
    };
    let lo = run(0.3, 0.4);
    let hi = run(0.5, 0.6);
    assert_eq!(lo.snapshots.len(), hi.snapshots.len());
    for (a, b) in lo.snapshots.iter().zip(&hi.snapshots) {
        assert_eq!(a.t, b.t);
        assert!(a.b <= b.b);
        for (i, &v) in a.v.iter().enumerate() {
            let upper = b.value_at_index(a.i0 + i as i64).unwrap();
            assert!(v <= upper + 1e-9, "t = {} x = {}", a.t, a.x(i));
        }
    }
}

#[test]
fn zero_duration_run_returns_input() {
    let env = Environment::fisher();
    let field = Field::from_fn(64, 0.0, 2.0, 0.5, 3.0, bump(0.0, 0.3, 0.5));
    let out = solve(
        &env,
        field.clone(),
        Stop::at_time(3.0),
        half_line(64),
        &quiet(),
        None,
    )
    .unwrap();
    assert_eq!(out.field, field);
    assert_eq!(out.stats.steps, 0);
    assert_eq!(out.trajectory.t, vec![3.0]);
}

#[test]
fn front_speed_of_linear_profiles() {
    let cfg = half_line(64);
    for (slope, b) in [(2.0, 0.75), (0.5, 1.0 + 1.0 / 128.0), (3.0, 1.3)] {
        let field = Field::from_fn(64, 0.0, 3.0, b, 0.0, |x| slope * (b - x));
        let s = front_speed(&field, &cfg).unwrap();
        assert!((s - slope).abs() < 1e-12, "{s} vs {slope}");
    }
}
