//! Adaptive Dormand–Prince 5(4) for small fixed-size systems.

#[derive(Debug, Clone, Copy)]
pub(crate) struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
}

pub(crate) enum Control {
    Continue,
    Stop,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum OdeFailure {
    StepUnderflow { t: f64 },
    NonFinite { t: f64 },
    MaxSteps,
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// error weights: 5th-order minus embedded 4th-order
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates `y' = f(t, y)` from `t0` toward `t_end` (either direction),
/// calling `observe` after every accepted step. Returns the last state.
pub(crate) fn integrate<const N: usize>(
    mut f: impl FnMut(f64, &[f64; N]) -> [f64; N],
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    tol: Tolerances,
    mut observe: impl FnMut(f64, &[f64; N]) -> Control,
) -> Result<(f64, [f64; N]), OdeFailure> {
    let dir = if t_end >= t0 { 1.0 } else { -1.0 };
    let span = (t_end - t0).abs();
    let mut t = t0;
    let mut y = y0;
    let mut h = (1e-3 * span).min(tol.h_max).max(1e-12);
    let mut k = [[0.0; N]; 7];
    k[0] = f(t, &y);
    for _ in 0..2_000_000 {
        if (t_end - t) * dir <= 0.0 {
            return Ok((t, y));
        }
        let last = h >= (t_end - t).abs();
        if last {
            h = (t_end - t).abs();
        }
        let hs = h * dir;
        for s in 1..7 {
            let mut ys = y;
            for (i, yi) in ys.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += A[s][j] * kj[i];
                }
                *yi += hs * acc;
            }
            k[s] = f(t + C[s] * hs, &ys);
        }
        let mut y_new = y;
        let mut err = 0.0f64;
        for i in 0..N {
            let mut acc = 0.0;
            let mut e = 0.0;
            for s in 0..6 {
                acc += A[6][s] * k[s][i];
            }
            for s in 0..7 {
                e += E[s] * k[s][i];
            }
            y_new[i] = y[i] + hs * acc;
            let sc = tol.atol + tol.rtol * y[i].abs().max(y_new[i].abs());
            err = err.max((hs * e / sc).abs());
        }
        if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
            h *= 0.25;
            if h < 1e-14 * (1.0 + t.abs()) {
                return Err(OdeFailure::NonFinite { t });
            }
            continue;
        }
        if err <= 1.0 {
            t = if last { t_end } else { t + hs };
            y = y_new;
            // FSAL: stage 7 is f at the new point
            k[0] = k[6];
            if let Control::Stop = observe(t, &y) {
                return Ok((t, y));
            }
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h = (h * factor).min(tol.h_max);
        if h < 1e-14 * (1.0 + t.abs()) {
            return Err(OdeFailure::StepUnderflow { t });
        }
    }
    Err(OdeFailure::MaxSteps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_both_directions() {
        let tol = Tolerances {
            rtol: 1e-11,
            atol: 1e-13,
            h_max: 0.1,
        };
        let rhs = |_t: f64, y: &[f64; 2]| [y[1], -y[0]];
        let (_, y) = integrate(rhs, 0.0, [0.0, 1.0], 3.0, tol, |_, _| Control::Continue).unwrap();
        assert!((y[0] - 3f64.sin()).abs() < 1e-9);
        let (_, y) = integrate(rhs, 0.0, [0.0, 1.0], -2.0, tol, |_, _| Control::Continue).unwrap();
        assert!((y[0] + 2f64.sin()).abs() < 1e-9);
    }
}
