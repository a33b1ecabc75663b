//! Subcommands. Each returns an [`Outcome`]: exit code, human-readable
//! lines, a JSON summary and the CSV tables it produced.

use crate::artifacts::Artifacts;
use crate::config::{Initial, RunConfig};
use serde::Serialize;
use serde_json::{json, Value};
use sharpwave::diagnostics::{check_monotone_intersections, default_tolerance, DiagnosticsError};
use sharpwave::model::{density_from_pressure, Environment, F1Report};
use sharpwave::phaseplane::{construct_subsolution, verify_f2, F0Case, PhaseError};
use sharpwave::renorm::{wave_pipeline, RenormError, WaveOutcome, WaveStatus};
use sharpwave::solver::{
    init_heaviside, solve, Field, LeftBoundary, Recorder, RunOutput, SolverConfig, SolverError,
    Stop,
};
use sharpwave::stationary::{
    find_max_steady, find_min_steady, steady_gap, PeriodicSteadyState, SteadyConfig, SteadyError,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Exit {
    Ok = 0,
    /// A hypothesis or verification failed.
    Domain = 1,
    Config = 2,
    /// Terrace suspected, stalled front or no convergence.
    NotConverged = 3,
    /// The solver aborted.
    Numerical = 4,
}

impl Exit {
    pub fn code(self) -> u8 {
        self as u8
    }
}

pub struct Outcome {
    pub exit: Exit,
    pub lines: Vec<String>,
    pub summary: Value,
    pub artifacts: Artifacts,
}

impl Outcome {
    fn failed(exit: Exit, error: impl std::fmt::Display, extra: Value) -> Self {
        let msg = error.to_string();
        let mut summary = json!({ "error": msg });
        if let (Value::Object(s), Value::Object(e)) = (&mut summary, extra) {
            s.extend(e);
        }
        Outcome {
            exit,
            lines: vec![format!("error: {msg}")],
            summary,
            artifacts: Artifacts::default(),
        }
    }
}

fn solver_exit(e: &SolverError) -> Exit {
    match e {
        SolverError::Config(_) | SolverError::Window(_) => Exit::Config,
        _ => Exit::Numerical,
    }
}

fn steady_exit(e: &SteadyError) -> Exit {
    match e {
        SteadyError::Hypothesis(_) => Exit::Domain,
        SteadyError::NotConverged { .. } => Exit::NotConverged,
        SteadyError::Newton { .. } => Exit::Numerical,
    }
}

fn renorm_exit(e: &RenormError) -> Exit {
    match e {
        RenormError::Solver(e) => solver_exit(e),
        RenormError::Steady(e) => steady_exit(e),
        RenormError::Stalled { .. }
        | RenormError::StationNotReached(_)
        | RenormError::NotConverged { .. } => Exit::NotConverged,
        RenormError::Config(_) => Exit::Config,
    }
}

fn f1_lines(report: &F1Report) -> Vec<String> {
    report
        .clauses
        .iter()
        .map(|c| {
            let mut line = format!("{} {}", if c.passed { "ok  " } else { "FAIL" }, c.clause);
            if let Some(w) = &c.witness {
                line += &format!(" (witness x = {}", w.x);
                if let Some(u) = w.u {
                    line += &format!(", u = {u}");
                }
                line += &format!(", value = {})", w.value);
            }
            line
        })
        .collect()
}

/// Runs the standing-hypothesis check; `Some` when it fails.
fn f1_gate(cfg: &RunConfig) -> Option<Outcome> {
    let report = cfg.environment.validate_f1(cfg.validate.grid);
    if report.passed() {
        return None;
    }
    Some(Outcome {
        exit: Exit::Domain,
        lines: f1_lines(&report),
        summary: json!({ "error": "environment fails the standing hypothesis", "f1": report }),
        artifacts: Artifacts::default(),
    })
}

fn case_for(env: &Environment, explicit: Option<F0Case>) -> Result<F0Case, PhaseError> {
    explicit
        .or_else(|| F0Case::for_family(env.family()))
        .ok_or(PhaseError::UnsupportedFamily(env.family()))
}

pub fn validate(cfg: &RunConfig) -> Outcome {
    let env = &cfg.environment;
    let f1 = env.validate_f1(cfg.validate.grid);
    let mut lines = f1_lines(&f1);
    let mut passed = f1.passed();
    let mut f2 = Value::Null;
    if passed && cfg.validate.f2 {
        let attempt = case_for(env, cfg.validate.case).and_then(|case| {
            construct_subsolution(env, case, &cfg.subsolution.shooting)
                .map(|(f0, sub)| (case, f0, sub))
        });
        match attempt {
            Ok((case, f0, sub)) => {
                let report = verify_f2(
                    env,
                    &sub,
                    cfg.subsolution.check_nx,
                    cfg.subsolution.check_nz,
                );
                let ok = report.passed && f0.integral.passed;
                lines.push(format!(
                    "{} F2 ({case:?}, c = {}, min margin {:.3e})",
                    if ok { "ok  " } else { "FAIL" },
                    sub.c,
                    report.min_margin
                ));
                if !report.passed {
                    lines.push(format!(
                        "     witness x = {}, z = {}",
                        report.witness_x, report.witness_z
                    ));
                }
                passed &= ok;
                f2 = json!({
                    "case": case,
                    "c": sub.c,
                    "q0": sub.q0,
                    "l0": sub.l0,
                    "integral": f0.integral,
                    "report": report,
                });
            }
            Err(e) => {
                lines.push(format!("FAIL F2: {e}"));
                passed = false;
                f2 = json!({ "error": e.to_string() });
            }
        }
    }
    Outcome {
        exit: if passed { Exit::Ok } else { Exit::Domain },
        lines,
        summary: json!({ "passed": passed, "f1": f1, "f2": f2 }),
        artifacts: Artifacts::default(),
    }
}

fn steady_sidecar(s: &PeriodicSteadyState) -> Value {
    json!({
        "kind": s.kind,
        "residual": s.residual,
        "cells_per_unit": s.x.len(),
        "march_time": s.march_time,
        "monotonicity_violation": s.monotonicity_violation,
    })
}

fn steady_table(a: &mut Artifacts, name: &str, s: &PeriodicSteadyState) {
    let rows =
        s.x.iter()
            .zip(&s.p)
            .zip(&s.q)
            .map(|((&x, &p), &q)| (x, p, q));
    a.csv(&format!("{name}.csv"), &["x", "p", "q"], rows);
    a.json(&format!("{name}.json"), &steady_sidecar(s));
}

pub fn steady(cfg: &RunConfig) -> Outcome {
    if let Some(out) = f1_gate(cfg) {
        return out;
    }
    let env = &cfg.environment;
    let pair = find_min_steady(env, &cfg.steady)
        .and_then(|p1| Ok((p1, find_max_steady(env, &cfg.steady)?)));
    let (p1, p2) = match pair {
        Ok(p) => p,
        Err(e) => return Outcome::failed(steady_exit(&e), e, Value::Null),
    };
    let gap = steady_gap(&p1, &p2);
    let mut artifacts = Artifacts::default();
    steady_table(&mut artifacts, "p1", &p1);
    steady_table(&mut artifacts, "p2", &p2);
    let range = |s: &PeriodicSteadyState| {
        let lo = s.p.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = s.p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    };
    Outcome {
        exit: Exit::Ok,
        lines: vec![
            format!(
                "p1 in [{:.6}, {:.6}], residual {:.2e}",
                range(&p1).0,
                range(&p1).1,
                p1.residual
            ),
            format!(
                "p2 in [{:.6}, {:.6}], residual {:.2e}",
                range(&p2).0,
                range(&p2).1,
                p2.residual
            ),
            format!("sup |p2 − p1| = {gap:.3e}"),
        ],
        summary: json!({ "p1": steady_sidecar(&p1), "p2": steady_sidecar(&p2), "gap": gap }),
        artifacts,
    }
}

pub fn subsolution(cfg: &RunConfig) -> Outcome {
    if let Some(out) = f1_gate(cfg) {
        return out;
    }
    let env = &cfg.environment;
    let opts = &cfg.subsolution;
    let built = case_for(env, opts.case).and_then(|case| {
        construct_subsolution(env, case, &opts.shooting).map(|(f0, sub)| (case, f0, sub))
    });
    let (case, f0, sub) = match built {
        Ok(b) => b,
        Err(e) => return Outcome::failed(Exit::Domain, e, Value::Null),
    };
    let f2 = verify_f2(env, &sub, opts.check_nx, opts.check_nz);
    let passed = f2.passed && f0.integral.passed && sub.subsolution_ok;
    let sidecar = json!({
        "c": sub.c,
        "q0": sub.q0,
        "l0": sub.l0,
        "l_plus": sub.l_plus,
        "l_minus": sub.l_minus,
        // infinite slopes are written as null
        "edge_slope": sub.edge_slope,
        "edge_flux": sub.edge_flux,
        "subsolution_ok": sub.subsolution_ok,
        "f2_passed": f2.passed,
        "integral_passed": f0.integral.passed,
    });
    let mut artifacts = Artifacts::default();
    let psi = sub.psi();
    let rows = sub
        .z
        .iter()
        .zip(&sub.phi)
        .zip(&psi)
        .map(|((&z, &phi), &psi)| (z, phi, psi));
    artifacts.csv("profile.csv", &["z", "phi", "psi"], rows);
    artifacts.json("subsolution.json", &sidecar);
    Outcome {
        exit: if passed { Exit::Ok } else { Exit::Domain },
        lines: vec![
            format!(
                "{case:?} f0, c = {}, q0 = {:.6}, l0 = {:.6}",
                sub.c, sub.q0, sub.l0
            ),
            format!("edge slope {} > c: {}", sub.edge_slope, sub.subsolution_ok),
            format!(
                "F2 {} (min margin {:.3e})",
                if f2.passed { "holds" } else { "FAILS" },
                f2.min_margin
            ),
        ],
        summary: json!({
            "passed": passed,
            "case": case,
            "subsolution": sidecar,
            "f0": { "threshold": f0.threshold, "amplitude": f0.amplitude, "kappa0": f0.kappa0, "integral": f0.integral },
            "f2": f2,
        }),
        artifacts,
    }
}

/// Left state for Heaviside data, computed at most once per command.
fn left_state(
    cfg: &RunConfig,
    inits: &[Initial],
) -> Result<Option<PeriodicSteadyState>, SteadyError> {
    if !inits.iter().any(|i| matches!(i, Initial::Heaviside { .. })) {
        return Ok(None);
    }
    let steady = SteadyConfig {
        cells_per_unit: cfg.solver.cells_per_unit,
        ..cfg.steady
    };
    find_max_steady(&cfg.environment, &steady).map(Some)
}

fn run_initial(
    cfg: &RunConfig,
    init: Initial,
    q2: Option<&PeriodicSteadyState>,
    t_end: f64,
    recorder: &Recorder,
) -> Result<RunOutput, SolverError> {
    let n = cfg.solver.cells_per_unit;
    match init {
        Initial::Heaviside { k, window } => {
            let q2 = q2.expect("left state computed for heaviside data");
            let field = init_heaviside(q2, k, window, n)?;
            let scfg = SolverConfig {
                left: LeftBoundary::Dirichlet,
                ..cfg.solver
            };
            solve(
                &cfg.environment,
                field,
                Stop::at_time(t_end),
                scfg,
                recorder,
                Some(q2),
            )
        }
        Initial::Bump { height, width } => {
            let field = Field::from_fn(n, 0.0, width + 1.0, width, 0.0, move |x| {
                (height * (1.0 - (x / width).powi(2))).max(0.0)
            });
            let scfg = SolverConfig {
                left: LeftBoundary::Symmetric,
                left_margin: None,
                ..cfg.solver
            };
            solve(
                &cfg.environment,
                field,
                Stop::at_time(t_end),
                scfg,
                recorder,
                None,
            )
        }
    }
}

fn trajectory_table(a: &mut Artifacts, out: &sharpwave::solver::FrontTrajectory) {
    let rows = (0..out.t.len()).map(|k| (out.t[k], out.b[k], out.slope[k], out.speed[k]));
    a.csv("trajectory.csv", &["t", "b", "slope", "speed"], rows);
}

fn snapshot_table<'a>(
    a: &mut Artifacts,
    m: f64,
    snaps: impl IntoIterator<Item = &'a sharpwave::solver::Snapshot>,
) {
    let mut rows = Vec::new();
    for s in snaps {
        for (i, &v) in s.v.iter().enumerate() {
            let u = density_from_pressure(v, m).unwrap_or(f64::NAN);
            rows.push((s.t, s.x(i), v, u));
        }
    }
    a.csv("snapshots.csv", &["t", "x", "v", "u"], rows);
}

pub fn simulate(cfg: &RunConfig) -> Outcome {
    if let Some(out) = f1_gate(cfg) {
        return out;
    }
    let opts = &cfg.simulate;
    let q2 = match left_state(cfg, &[opts.initial]) {
        Ok(q) => q,
        Err(e) => return Outcome::failed(steady_exit(&e), e, Value::Null),
    };
    let recorder = Recorder {
        snapshot_every: Some(opts.snapshot_every),
        trajectory_spacing: opts.trajectory_spacing,
    };
    let out = match run_initial(cfg, opts.initial, q2.as_ref(), opts.t_end, &recorder) {
        Ok(o) => o,
        Err(e) => return Outcome::failed(solver_exit(&e), e, Value::Null),
    };
    let tr = &out.trajectory;
    let half = 0.5 * opts.t_end;
    let mean_speed = (out.field.b - tr.b_at(half)) / (opts.t_end - half);
    let mut artifacts = Artifacts::default();
    trajectory_table(&mut artifacts, tr);
    snapshot_table(&mut artifacts, cfg.environment.m(), &out.snapshots);
    Outcome {
        exit: Exit::Ok,
        lines: vec![
            format!("t = {}, front b = {:.6}", out.field.t, out.field.b),
            format!("mean front speed over the second half: {mean_speed:.6}"),
            format!(
                "{} steps, dt in [{:.3e}, {:.3e}]",
                out.stats.steps, out.stats.min_dt, out.stats.max_dt
            ),
        ],
        summary: json!({
            "t": out.field.t,
            "b": out.field.b,
            "mean_speed_second_half": mean_speed,
            "snapshots": out.snapshots.len(),
            "stats": out.stats,
        }),
        artifacts,
    }
}

struct PairResult {
    summary: Value,
    artifacts: Artifacts,
    nonincreasing: bool,
}

fn diagnose_pair(
    cfg: &RunConfig,
    pair: [Initial; 2],
    q2: Option<&PeriodicSteadyState>,
) -> Result<PairResult, Outcome> {
    let opts = &cfg.diagnose;
    let recorder = Recorder {
        snapshot_every: Some(opts.snapshot_every),
        trajectory_spacing: 1e-2,
    };
    let mut runs = Vec::with_capacity(2);
    for init in pair {
        let out = run_initial(cfg, init, q2, opts.t_end, &recorder)
            .map_err(|e| Outcome::failed(solver_exit(&e), e, Value::Null))?;
        runs.push(out);
    }
    // front slope at the end of the runs; the start of a Heaviside run has
    // an unbounded slope and says nothing about C1
    let c1 = runs
        .iter()
        .filter_map(|r| r.trajectory.slope.last().copied())
        .fold(0.0, f64::max);
    let tol = opts
        .tol
        .unwrap_or_else(|| default_tolerance(cfg.solver.cells_per_unit, c1));
    let report = check_monotone_intersections(&runs[0].snapshots, &runs[1].snapshots, tol)
        .map_err(|e: DiagnosticsError| Outcome::failed(Exit::Numerical, e, Value::Null))?;
    let mut artifacts = Artifacts::default();
    let rows = (0..report.times.len()).map(|k| {
        (
            report.times[k],
            report.counts[k],
            report.relations[k].to_string(),
        )
    });
    artifacts.csv("report.csv", &["t", "count", "class"], rows);
    let first_seen: Vec<Value> = report
        .first_seen
        .iter()
        .map(|(r, t)| json!({ "class": r, "t": t }))
        .collect();
    let summary = json!({
        "initial": pair,
        "tol": tol,
        "nonincreasing": report.nonincreasing,
        "initial_count": report.counts.first(),
        "final_count": report.counts.last(),
        "first_seen": first_seen,
    });
    artifacts.json("summary.json", &summary);
    Ok(PairResult {
        summary,
        artifacts,
        nonincreasing: report.nonincreasing,
    })
}

pub fn diagnose(cfg: &RunConfig, jobs: usize) -> Outcome {
    if let Some(out) = f1_gate(cfg) {
        return out;
    }
    let pairs = &cfg.diagnose.pairs;
    if pairs.is_empty() {
        return Outcome::failed(
            Exit::Config,
            "diagnose needs at least one pair",
            Value::Null,
        );
    }
    let inits: Vec<Initial> = pairs.iter().flatten().copied().collect();
    let q2 = match left_state(cfg, &inits) {
        Ok(q) => q,
        Err(e) => return Outcome::failed(steady_exit(&e), e, Value::Null),
    };
    let jobs = jobs.clamp(1, pairs.len());
    let mut results: Vec<Option<Result<PairResult, Outcome>>> =
        (0..pairs.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        for (w, slots) in results.chunks_mut(pairs.len().div_ceil(jobs)).enumerate() {
            let q2 = q2.as_ref();
            let base = w * pairs.len().div_ceil(jobs);
            scope.spawn(move || {
                for (k, slot) in slots.iter_mut().enumerate() {
                    *slot = Some(diagnose_pair(cfg, pairs[base + k], q2));
                }
            });
        }
    });
    let mut artifacts = Artifacts::default();
    let mut lines = Vec::new();
    let mut summaries = Vec::new();
    let mut all = true;
    for (k, r) in results.into_iter().enumerate() {
        match r.expect("every slot is filled") {
            Ok(p) => {
                lines.push(format!(
                    "pair {k}: counts {} -> {}, nonincreasing: {}",
                    p.summary["initial_count"], p.summary["final_count"], p.nonincreasing
                ));
                all &= p.nonincreasing;
                summaries.push(p.summary);
                artifacts.nest(&format!("pair-{k:02}"), p.artifacts);
            }
            Err(out) => {
                let mut out = out;
                out.lines.insert(0, format!("pair {k} aborted"));
                return out;
            }
        }
    }
    Outcome {
        exit: if all { Exit::Ok } else { Exit::Domain },
        lines,
        summary: json!({ "passed": all, "pairs": summaries }),
        artifacts,
    }
}

fn wave_tables(a: &mut Artifacts, m: f64, out: &WaveOutcome) {
    let w = &out.wave;
    let mut rows = Vec::with_capacity(w.x.len() * w.t.len());
    for (k, &t) in w.t.iter().enumerate() {
        for (j, &x) in w.x.iter().enumerate() {
            rows.push((x, t, w.v[k][j]));
        }
    }
    a.csv("profile.csv", &["x", "t", "V"], rows);
    let rows = (0..w.t.len()).map(|k| (w.t[k], w.b[k], w.b_prime[k]));
    a.csv("boundary.csv", &["t", "B", "Bprime"], rows);
    let history = out.sequence.history();
    let rows = (0..w.crossings.len()).map(|i| {
        (
            w.crossings[i],
            w.t_n[i],
            w.s_n.get(i).copied(),
            i.checked_sub(1).map(|h| history[h]),
        )
    });
    a.csv("convergence.csv", &["n", "t_n", "s_n", "gap"], rows);
    trajectory_table(a, &out.sequence.trajectory);
    snapshot_table(a, m, &w.line);
}

pub fn wave(cfg: &RunConfig) -> Outcome {
    if let Some(out) = f1_gate(cfg) {
        return out;
    }
    let out = match wave_pipeline(&cfg.environment, cfg.solver, &cfg.renorm, &cfg.steady) {
        Ok(o) => o,
        Err(e) => {
            let history = match &e {
                RenormError::NotConverged { history, .. } => {
                    json!({ "convergence_history": history })
                }
                _ => Value::Null,
            };
            return Outcome::failed(renorm_exit(&e), e, history);
        }
    };
    let (w, r) = (&out.wave, &out.report);
    let exit = match out.status {
        WaveStatus::Converged if out.passed() => Exit::Ok,
        WaveStatus::Converged => Exit::Domain,
        WaveStatus::TerraceSuspected | WaveStatus::NotConverged => Exit::NotConverged,
    };
    let mut artifacts = Artifacts::default();
    wave_tables(&mut artifacts, cfg.environment.m(), &out);
    let mut lines = vec![
        format!(
            "status: {}",
            serde_json::to_value(out.status)
                .unwrap_or_default()
                .as_str()
                .unwrap_or("")
        ),
        format!("T = {:.6} from crossing n = {}", w.period, w.n),
        format!(
            "delta* = {:.6}, C1 = {:.4}, max V = {:.6}",
            w.delta_star, w.c1, w.max_v
        ),
        format!(
            "tail residual {:.3e} ({}), Darcy residual {:.3e}, min V_t {:.3e}",
            r.tail_residual,
            r.tail_best.as_deref().unwrap_or("none"),
            r.darcy_residual,
            r.min_vt
        ),
        format!(
            "periodicity defect {:.3e}, whole-line gap at n = {}: {}",
            w.periodicity_defect,
            cfg.renorm.linfty_n,
            out.linfty
                .gap_at_target
                .map_or("n/a".to_string(), |g| format!("{g:.3e}"))
        ),
    ];
    let failed: Vec<&str> = [
        ("positivity", r.positivity_ok),
        ("tail", r.tail_ok),
        ("darcy", r.darcy_ok),
        ("monotone-in-time", r.vt_ok),
        ("periodicity", r.periodicity_ok),
        ("delta*", r.delta_star_ok),
        ("whole-line", out.linfty.passed),
    ]
    .into_iter()
    .filter(|(_, ok)| !ok)
    .map(|(name, _)| name)
    .collect();
    if !failed.is_empty() {
        lines.push(format!("failed checks: {}", failed.join(", ")));
    }
    Outcome {
        exit,
        lines,
        summary: json!({
            "status": out.status,
            "passed": out.passed(),
            "T": w.period,
            "n": w.n,
            "delta_star": w.delta_star,
            "c1": w.c1,
            "max_v": w.max_v,
            "q0_residual": r.tail_residual,
            "q0_match": r.tail_best,
            "periodicity_defect": w.periodicity_defect,
            "darcy_residual": r.darcy_residual,
            "min_vt": r.min_vt,
            "converged": w.converged,
            "s_settled": w.s_settled,
            "convergence_history": w.convergence_history,
            "crossings": w.crossings,
            "t_n": w.t_n,
            "s_n": w.s_n,
            "delta0": w.delta0,
            "report": r,
            "linfty": out.linfty,
            "steady": { "p1": steady_sidecar(&out.p1), "p2": steady_sidecar(&out.p2) },
            "stats": out.sequence.stats,
        }),
        artifacts,
    }
}
