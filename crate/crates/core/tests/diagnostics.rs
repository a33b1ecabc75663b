mod common;

use common::{half_line_run, periodic_monostable, random_pairs, Bump};
use sharpwave::diagnostics::{
    check_monotone_intersections, classify_relation, sign_changes, ProfilePair, Relation,
};
use sharpwave::model::Environment;
use sharpwave::solver::exact::fisher_wave_pressure;
use sharpwave::solver::{init_heaviside, solve, Recorder, SolverConfig, Stop};
use sharpwave::stationary::{PeriodicSteadyState, SteadyKind};
use std::f64::consts::PI;

const N: usize = 64;

fn sampled(f: impl Fn(f64) -> f64, lo: i64, hi: i64) -> Vec<f64> {
    (lo..=hi).map(|j| f(j as f64 / N as f64)).collect()
}

fn pair(f1: impl Fn(f64) -> f64, f2: impl Fn(f64) -> f64, lo: i64, hi: i64) -> ProfilePair {
    ProfilePair::new(N, lo, sampled(f1, lo, hi), sampled(f2, lo, hi)).unwrap()
}

fn cap(h: f64, w: f64) -> impl Fn(f64) -> f64 {
    move |x| (h * (1.0 - (x / w).powi(2))).max(0.0)
}

#[test]
fn identical_profiles() {
    let p = pair(cap(1.0, 0.5), cap(1.0, 0.5), -(N as i64), N as i64);
    assert_eq!(sign_changes(&p, 1e-9), 0);
    assert_eq!(classify_relation(&p, 1e-9), Relation::Other);
}

#[test]
fn sine_difference_changes_sign_once() {
    // interior nodes of (0, 1) only
    let p = pair(|x| 1.0 + (2.0 * PI * x).sin(), |_| 1.0, 1, N as i64 - 1);
    assert_eq!(sign_changes(&p, 1e-6), 1);
    assert_eq!(sign_changes(&p.swapped(), 1e-6), 1);
}

#[test]
fn shifted_sharp_waves_are_ordered() {
    let p = pair(
        |x| fisher_wave_pressure(x - 0.3),
        fisher_wave_pressure,
        -10 * N as i64,
        2 * N as i64,
    );
    assert_eq!(sign_changes(&p, 1e-9), 0);
    assert_eq!(sign_changes(&p.swapped(), 1e-9), 0);
    assert_eq!(classify_relation(&p, 1e-9), Relation::StrictOrder);
}

#[test]
fn constructed_relations() {
    let (lo, hi) = (-2 * N as i64, 2 * N as i64);
    let raised = pair(
        |x| cap(1.0, 1.0)(x) + 0.1 * f64::from(x.abs() < 1.2),
        cap(1.0, 1.0),
        lo,
        hi,
    );
    assert_eq!(classify_relation(&raised, 1e-6), Relation::StrictOrder);
    let touching = pair(
        |x| cap(1.0, 1.0)(x).max(cap(0.5, 1.5)(x)),
        cap(1.0, 1.0),
        lo,
        hi,
    );
    assert_eq!(classify_relation(&touching, 1e-6), Relation::TouchOrder);
    // taller and narrower on the right half line: one crossing
    let steep = pair(cap(1.0, 0.5), cap(0.4, 1.0), 0, hi);
    assert_eq!(sign_changes(&steep, 1e-6), 1);
    assert_eq!(classify_relation(&steep, 1e-6), Relation::Steeper);
    assert_eq!(classify_relation(&steep.swapped(), 1e-6), Relation::Other);
    for p in [&raised, &touching, &steep] {
        assert_eq!(sign_changes(p, 1e-6), sign_changes(&p.swapped(), 1e-6));
        assert_eq!(classify_relation(p, 1e-6), classify_relation(p, 5e-7));
    }
}

#[test]
fn ordered_runs_stay_uncrossed() {
    let env = periodic_monostable(2.0);
    let a = half_line_run(
        &env,
        Bump {
            height: 0.8,
            width: 0.9,
        },
        N,
        2.0,
    )
    .unwrap();
    let b = half_line_run(
        &env,
        Bump {
            height: 0.5,
            width: 0.6,
        },
        N,
        2.0,
    )
    .unwrap();
    let rep = check_monotone_intersections(&a, &b, 1e-9).unwrap();
    assert!(rep.counts.iter().all(|&c| c == 0));
    assert!(rep.relations.iter().all(|&r| r == Relation::StrictOrder));
}

#[test]
fn shifted_heaviside_data_separate() {
    let env = Environment::fisher();
    let q = PeriodicSteadyState::constant(&env, 1.0, N, SteadyKind::Maximal);
    let cfg = SolverConfig {
        cells_per_unit: N,
        left_margin: None,
        ..Default::default()
    };
    let rec = Recorder {
        snapshot_every: Some(1.0 / 16.0),
        trajectory_spacing: 1e-2,
    };
    let run = |k: f64| {
        let field = init_heaviside(&q, k, (-10.0, 3.0), N).unwrap();
        solve(&env, field, Stop::at_time(2.0), cfg, &rec, Some(&q))
            .unwrap()
            .snapshots
    };
    let (ahead, behind) = (run(0.5), run(0.0));
    let rep = check_monotone_intersections(&ahead, &behind, 1e-9).unwrap();
    assert!(rep.counts.iter().all(|&c| c == 0));
    assert_eq!(rep.relations[0], Relation::TouchOrder);
    // both are pinned to q at the left end, so contact there never lifts
    assert!(rep.relations.iter().all(|&r| r == Relation::TouchOrder));
    for (a, b) in ahead.iter().zip(&behind).skip(1) {
        assert!(a.b > b.b + 1.0 / N as f64);
    }
}

#[test]
fn intersection_number_never_grows() {
    // the slowest single-crossing pair in this batch clears near t = 7.8
    let env = periodic_monostable(2.0);
    for (i, (a, b, crossing)) in random_pairs(0x5eed, 20).into_iter().enumerate() {
        let ra = half_line_run(&env, a, N, 10.0).unwrap();
        let rb = half_line_run(&env, b, N, 10.0).unwrap();
        let rep = check_monotone_intersections(&ra, &rb, 1e-6).unwrap();
        assert!(rep.nonincreasing, "pair {i}: {:?}", rep.counts);
        assert_eq!(rep.counts[0], usize::from(crossing), "pair {i}");
        assert_eq!(*rep.counts.last().unwrap(), 0, "pair {i}");
        if crossing {
            assert_eq!(rep.first_seen[0].0, Relation::Steeper);
        }
    }
}
