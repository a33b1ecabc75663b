mod common;

use common::{combustion03, periodic_monostable};
use sharpwave::model::Environment;
use sharpwave::renorm::{
    crossing_times, extract_wave, record_sequence, wave_pipeline, RenormConfig, RenormError,
    WaveOutcome, WaveStatus,
};
use sharpwave::solver::exact::{fisher_wave_pressure, reaction_free};
use sharpwave::solver::{init_heaviside, FrontTrajectory, SolverConfig};
use sharpwave::stationary::{PeriodicSteadyState, SteadyConfig, SteadyKind};

fn pipeline(env: &Environment, n: usize) -> WaveOutcome {
    let cfg = SolverConfig {
        cells_per_unit: n,
        ..Default::default()
    };
    wave_pipeline(env, cfg, &RenormConfig::default(), &SteadyConfig::default()).unwrap()
}

fn assert_gaps_nondecreasing(s_n: &[f64]) {
    for w in s_n.windows(2) {
        assert!(w[1] >= w[0] - 1e-3, "{s_n:?}");
    }
    let k = s_n.len();
    assert!((s_n[k - 1] - s_n[k - 2]).abs() <= 1e-3);
}

fn synthetic(speed: f64) -> FrontTrajectory {
    let t: Vec<f64> = (0..=400).map(|i| i as f64 * 0.025).collect();
    let b: Vec<f64> = t.iter().map(|&t| speed * t).collect();
    FrontTrajectory {
        slope: vec![speed; t.len()],
        speed: vec![speed; t.len()],
        t,
        b,
    }
}

#[test]
fn crossing_times_of_linear_fronts() {
    let stations: Vec<f64> = (1..=5).map(f64::from).collect();
    let unit = crossing_times(&synthetic(1.0), &stations).unwrap();
    let fast = crossing_times(&synthetic(2.0), &stations).unwrap();
    for (i, s) in stations.iter().enumerate() {
        assert!((unit[i] - s).abs() < 1e-12);
        assert!((fast[i] - s / 2.0).abs() < 1e-12);
    }
    assert_eq!(
        crossing_times(&synthetic(1.0), &[11.0]),
        Err(RenormError::StationNotReached(11.0))
    );
}

#[test]
fn fisher_wave_is_recovered() {
    let out = pipeline(&Environment::fisher(), 256);
    let (w, r, seq) = (&out.wave, &out.report, &out.sequence);
    assert_eq!(out.status, WaveStatus::Converged);
    assert!(out.passed());
    assert!((w.period - 1.0).abs() <= 0.02, "T = {}", w.period);
    assert!((w.delta_star - 1.0).abs() <= 0.05);
    assert!(r.darcy_residual <= 0.05);
    assert!(r.min_vt >= -1e-4);
    // q0 ≡ 2 is the pressure of p0 ≡ 1
    assert!(r.tail_residual <= 1e-3);
    assert!(out.p1.q.iter().all(|&q| (q - 2.0).abs() < 1e-5));
    assert_gaps_nondecreasing(&w.s_n);
    for (n, s) in w.crossings.iter().zip(&w.s_n) {
        if *n >= 5 {
            assert!((s - 1.0).abs() <= 0.02);
        }
    }
    assert_eq!(seq.front_origin_error(), 0.0);
    assert!(seq.monotonicity_excess().iter().all(|&e| e <= 1e-6));
    // the extracted profile sits on the exact wave in the front frame
    for (row, &b) in w.v.iter().zip(&w.b) {
        for (&x, &v) in w.x.iter().zip(row) {
            assert!((v - fisher_wave_pressure(x - b)).abs() < 0.02);
        }
    }
    // crossings read back from the decimated trajectory
    let stations: Vec<f64> = w.crossings[1..].iter().map(|&n| n as f64).collect();
    let t = crossing_times(&seq.trajectory, &stations).unwrap();
    for (a, b) in t.iter().zip(&w.t_n[1..]) {
        assert!((a - b).abs() < 2e-3);
    }
    assert!(out.linfty.passed);
}

#[test]
fn periodic_monostable_wave_is_self_consistent() {
    let fine = pipeline(&periodic_monostable(2.0), 256);
    let coarse = pipeline(&periodic_monostable(2.0), 128);
    for out in [&fine, &coarse] {
        assert_eq!(out.status, WaveStatus::Converged);
        assert!(out.passed(), "{:?}", out.report);
        assert!(out.wave.periodicity_defect <= 1e-2 * out.wave.max_v);
        assert!(out.wave.delta_star > 0.0);
        assert!(out.report.min_vt >= -1e-4);
        assert!(out.report.tail_residual <= 1e-3);
        assert_gaps_nondecreasing(&out.wave.s_n);
        assert!(out.wave.delta0.iter().all(|&(_, lo)| lo > 0.0));
    }
    let (a, b) = (&coarse.wave, &fine.wave);
    assert!((a.period - b.period).abs() <= 0.01 * b.period);
    assert!((a.c1 - b.c1).abs() <= 0.1 * b.c1);
    // fine nodes at even indices coincide with the coarse lattice
    for (k, row) in a.v.iter().enumerate().take(b.v.len()) {
        for (j, &v) in row.iter().enumerate() {
            assert!((v - b.v[k][2 * j]).abs() <= 3e-3, "x = {}", a.x[j]);
        }
    }
}

#[test]
fn combustion_sequence_converges_on_the_whole_line() {
    let out = pipeline(&combustion03(), 256);
    assert_eq!(out.status, WaveStatus::Converged);
    assert!(out.passed());
    assert_gaps_nondecreasing(&out.wave.s_n);
    let l = &out.linfty;
    assert!(l.decreasing);
    assert!(l.gap_at_target.unwrap() <= 1e-2 * out.wave.max_v);
}

#[test]
fn stacked_fronts_are_flagged() {
    let env = Environment::multistable_terrace(6.0, 0.7).unwrap();
    let out = pipeline(&env, 128);
    assert_eq!(out.status, WaveStatus::TerraceSuspected);
    assert!(!out.passed());
    assert!(!out.linfty.passed);
    assert!(!out.report.tail_ok);
    // the resolved front is the lower one, running into the 0.4 plateau
    assert!(out.wave.max_v < 0.9);
}

#[test]
fn no_wave_without_reaction() {
    let env = reaction_free(2.0);
    let n = 64;
    let q = PeriodicSteadyState::constant(&env, 1.0, n, SteadyKind::Other);
    let rcfg = RenormConfig {
        stall_time: 20.0,
        ..Default::default()
    };
    let field = init_heaviside(&q, 0.0, rcfg.start_window(), n).unwrap();
    let cfg = SolverConfig {
        cells_per_unit: n,
        left_margin: None,
        ..Default::default()
    };
    match record_sequence(&env, field, cfg, &q, &rcfg) {
        Err(RenormError::Stalled { .. }) => {}
        Ok(seq) => assert!(matches!(
            extract_wave(&seq, &rcfg),
            Err(RenormError::NotConverged { .. })
        )),
        Err(e) => panic!("unexpected error {e}"),
    }
}
