//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

mod common;

use common::{
    bistable025, collocation_oracle, combustion03, half_line_run, periodic_monostable,
    random_pairs, supersolution_cases, supersolution_excess, zkb_error,
};
use sharpwave::diagnostics::{check_monotone_intersections, Relation};
use sharpwave::model::{Environment, PiecewisePoly};
use sharpwave::phaseplane::{
    check_integral_condition, construct_subsolution, verify_f2, F0Case, ShootingConfig,
};
use sharpwave::renorm::{wave_pipeline, RenormConfig, WaveOutcome, WaveStatus};
use sharpwave::solver::exact::{fisher_wave_density, fisher_wave_pressure};
use sharpwave::solver::SolverConfig;
use sharpwave::stationary::{find_max_steady, find_min_steady, SteadyConfig};
use std::process::ExitCode;
use std::time::Instant;

const N: usize = 256;

struct Check {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: String) -> Check {
    Check { pass, detail }
}

fn pipeline(env: &Environment, n: usize) -> Result<WaveOutcome, String> {
    let cfg = SolverConfig {
        cells_per_unit: n,
        ..Default::default()
    };
    wave_pipeline(env, cfg, &RenormConfig::default(), &SteadyConfig::default())
        .map_err(|e| e.to_string())
}

/// Gaps may dip by at most 1e-3 between crossings and the last increment
/// must be below 1e-3.
fn gaps_settle(s_n: &[f64]) -> (bool, f64) {
    let dip = s_n
        .windows(2)
        .map(|w| w[0] - w[1])
        .fold(f64::NEG_INFINITY, f64::max);
    let k = s_n.len();
    let last = if k >= 2 {
        (s_n[k - 1] - s_n[k - 2]).abs()
    } else {
        f64::INFINITY
    };
    (dip <= 1e-3 && last <= 1e-3, last)
}

fn fisher_wave() -> Result<Check, String> {
    // substitution: (u²)'' + u' + u(1 − u) = 0 behind the edge
    let h = 1e-4;
    let u = fisher_wave_density;
    let mut residual: f64 = 0.0;
    let mut z = -20.0;
    while z < -2.0 * h {
        let w = |s: f64| u(s) * u(s);
        let d2 = (w(z + h) - 2.0 * w(z) + w(z - h)) / (h * h);
        let d1 = (u(z + h) - u(z - h)) / (2.0 * h);
        residual = residual.max((d2 + d1 + u(z) * (1.0 - u(z))).abs());
        z += 0.037;
    }
    let edge = (fisher_wave_pressure(-h) - fisher_wave_pressure(0.0)) / h;
    let oracle_ok = residual < 1e-6 && (edge - 1.0).abs() < 1e-3;

    let out = pipeline(&Environment::fisher(), N)?;
    let tr = &out.sequence.trajectory;
    let t1 = *tr.t.last().unwrap();
    let speed = (tr.b_at(t1) - tr.b_at(t1 - 5.0)) / 5.0;
    let inv_t = 1.0 / out.wave.period;
    let darcy = out.report.darcy_residual;
    let pass =
        oracle_ok && (speed - 1.0).abs() <= 0.02 && (inv_t - 1.0).abs() <= 0.02 && darcy <= 0.05;
    Ok(check(
        pass,
        format!(
            "speed {speed:.4}, 1/T {inv_t:.4}, Darcy {darcy:.2e}, oracle residual {residual:.1e}"
        ),
    ))
}

fn source_solution() -> Result<Check, String> {
    let mut pass = true;
    let mut parts = Vec::new();
    for m in [2.0, 3.0] {
        let errs: Vec<f64> = [64, 128, 256].iter().map(|&n| zkb_error(m, n)).collect();
        let ratios: Vec<f64> = errs.windows(2).map(|w| w[0] / w[1]).collect();
        pass &= errs.iter().all(|&e| e <= 0.01) && ratios.iter().all(|&r| r >= 1.7);
        parts.push(format!(
            "m={m}: err@256 {:.2e}, ratios {:.2}/{:.2}",
            errs[2], ratios[0], ratios[1]
        ));
    }
    Ok(check(pass, parts.join("; ")))
}

fn supersolution() -> Result<Check, String> {
    let mut worst = f64::NEG_INFINITY;
    for m in [1.5, 2.0, 3.0] {
        for p in supersolution_cases(m) {
            worst = worst.max(supersolution_excess(&p, N));
        }
    }
    Ok(check(
        worst <= 1e-6,
        format!("max(u − ū) = {worst:.2e} over 6 runs"),
    ))
}

fn periodic_wave(fine: &WaveOutcome, finer: &WaveOutcome) -> Check {
    let (w, r) = (&fine.wave, &fine.report);
    let drift = (finer.wave.period - w.period).abs() / w.period;
    let pass = fine.status == WaveStatus::Converged
        && fine.passed()
        && w.periodicity_defect <= 1e-2 * w.max_v
        && w.delta_star > 0.0
        && r.min_vt >= -1e-4
        && r.tail_residual <= 1e-3
        && drift <= 0.01;
    check(
        pass,
        format!(
            "T {:.5} (dx/2: {:.5}), defect {:.1e}, δ* {:.3}, min V_t {:.1e}, tail {:.1e}",
            w.period,
            finer.wave.period,
            w.periodicity_defect,
            w.delta_star,
            r.min_vt,
            r.tail_residual
        ),
    )
}

fn monotone_gaps(mono: &WaveOutcome, comb: &WaveOutcome) -> Check {
    let (a, la) = gaps_settle(&mono.wave.s_n);
    let (b, lb) = gaps_settle(&comb.wave.s_n);
    check(
        a && b,
        format!("last increment {la:.1e} (monostable), {lb:.1e} (combustion)"),
    )
}

fn intersections() -> Result<Check, String> {
    let env = periodic_monostable(2.0);
    let mut bad = Vec::new();
    let mut latest: f64 = 0.0;
    for (i, (a, b, crossing)) in random_pairs(0x5eed, 20).into_iter().enumerate() {
        let ra = half_line_run(&env, a, 64, 10.0).map_err(|e| e.to_string())?;
        let rb = half_line_run(&env, b, 64, 10.0).map_err(|e| e.to_string())?;
        let rep = check_monotone_intersections(&ra, &rb, 1e-6).map_err(|e| e.to_string())?;
        let cleared = rep
            .counts
            .iter()
            .position(|&c| c == 0)
            .map(|k| rep.times[k]);
        latest = latest.max(cleared.unwrap_or(f64::INFINITY));
        let ok = rep.nonincreasing
            && rep.counts[0] == usize::from(crossing)
            && *rep.counts.last().unwrap() == 0
            && (!crossing || rep.first_seen[0].0 == Relation::Steeper);
        if !ok {
            bad.push(i);
        }
    }
    Ok(check(
        bad.is_empty(),
        format!("20 pairs, failures {bad:?}, last crossing cleared at t = {latest:.2}"),
    ))
}

fn linfty(mono: &WaveOutcome, comb: &WaveOutcome, terrace: &WaveOutcome) -> Check {
    let describe = |o: &WaveOutcome| {
        o.linfty
            .gap_at_target
            .map_or("n/a".to_string(), |g| format!("{:.1e}", g / o.wave.max_v))
    };
    let pass =
        mono.linfty.passed && comb.linfty.passed && terrace.status == WaveStatus::TerraceSuspected;
    check(
        pass,
        format!(
            "gap/maxV at n=12: {} (monostable), {} (combustion); stacked fronts: {}",
            describe(mono),
            describe(comb),
            serde_json::to_string(&terrace.status).unwrap_or_default()
        ),
    )
}

fn conditions() -> Result<Check, String> {
    let cases = [
        ("monostable", periodic_monostable(2.0), F0Case::Monostable),
        ("combustion", combustion03(), F0Case::Combustion),
        ("bistable", bistable025(), F0Case::Bistable),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, env, case) in &cases {
        match construct_subsolution(env, *case, &ShootingConfig::default()) {
            Ok((f0, sub)) => {
                let f2 = verify_f2(env, &sub, 256, 256);
                pass &= f0.integral.passed && f2.passed && sub.edge_slope > sub.c;
                parts.push(format!("{name} c={} slope {:.3}", sub.c, sub.edge_slope));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("{name}: {e}"));
            }
        }
    }
    let at_zero =
        check_integral_condition(&PiecewisePoly::single(vec![0.0, 1.0, -1.0]), 2.0, 1.0).at_zero;
    pass &= (at_zero - 1.0 / 12.0).abs() <= 1e-6;
    parts.push(format!("Fisher F(0) = {at_zero:.8}"));
    Ok(check(pass, parts.join("; ")))
}

fn stationary() -> Result<Check, String> {
    let cfg = |n| SteadyConfig {
        cells_per_unit: n,
        ..Default::default()
    };
    let mut pass = true;
    let mut const_err: f64 = 0.0;
    for env in [Environment::fisher(), combustion03(), bistable025()] {
        for s in [
            find_min_steady(&env, &cfg(64)),
            find_max_steady(&env, &cfg(64)),
        ] {
            let s = s.map_err(|e| e.to_string())?;
            const_err = const_err.max(s.p.iter().map(|u| (u - 1.0).abs()).fold(0.0, f64::max));
        }
    }
    pass &= const_err <= 1e-6;
    let env = periodic_monostable(2.0);
    let oracle = collocation_oracle(2.0, 0.2, 4 * N);
    let p1 = find_min_steady(&env, &cfg(N)).map_err(|e| e.to_string())?;
    let p2 = find_max_steady(&env, &cfg(N)).map_err(|e| e.to_string())?;
    let mut oracle_err: f64 = 0.0;
    for s in [&p1, &p2] {
        for (j, u) in s.p.iter().enumerate() {
            oracle_err = oracle_err.max((u - oracle[4 * j]).abs());
        }
    }
    let ordered = p1.p.iter().zip(&p2.p).all(|(a, b)| *a <= b + 1e-9);
    pass &= oracle_err <= 1e-4 && ordered;
    Ok(check(
        pass,
        format!("constants off by {const_err:.1e}, collocation gap {oracle_err:.1e}, p1 ≤ p2: {ordered}"),
    ))
}

fn report(name: &str, started: Instant, result: Result<Check, String>) -> bool {
    let secs = started.elapsed().as_secs_f64();
    match result {
        Ok(c) => {
            println!(
                "{} {name}: {} [{secs:.1}s]",
                if c.pass { "PASS" } else { "FAIL" },
                c.detail
            );
            c.pass
        }
        Err(e) => {
            println!("FAIL {name}: aborted: {e} [{secs:.1}s]");
            false
        }
    }
}

fn main() -> ExitCode {
    let mut all = true;

    let t = Instant::now();
    all &= report("exact Fisher wave", t, fisher_wave());
    let t = Instant::now();
    all &= report("source-solution front", t, source_solution());
    let t = Instant::now();
    all &= report("supersolution dominance", t, supersolution());

    let t = Instant::now();
    let runs = (|| -> Result<_, String> {
        Ok((
            pipeline(&periodic_monostable(2.0), N)?,
            pipeline(&periodic_monostable(2.0), 2 * N)?,
            pipeline(&combustion03(), N)?,
            pipeline(
                &Environment::multistable_terrace(6.0, 0.7).map_err(|e| e.to_string())?,
                N,
            )?,
        ))
    })();
    match runs {
        Ok((mono, mono_fine, comb, terrace)) => {
            all &= report("periodic wave", t, Ok(periodic_wave(&mono, &mono_fine)));
            all &= report("monotone crossing gaps", t, Ok(monotone_gaps(&mono, &comb)));
            let t = Instant::now();
            all &= report("intersection number", t, intersections());
            all &= report(
                "whole-line convergence",
                t,
                Ok(linfty(&mono, &comb, &terrace)),
            );
        }
        Err(e) => {
            for name in [
                "periodic wave",
                "monotone crossing gaps",
                "whole-line convergence",
            ] {
                all &= report(name, t, Err(e.clone()));
            }
            let t = Instant::now();
            all &= report("intersection number", t, intersections());
        }
    }

    let t = Instant::now();
    all &= report("subsolution conditions", t, conditions());
    let t = Instant::now();
    all &= report("stationary states", t, stationary());

    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
