//! Tridiagonal solvers.

/// Solves `a_i x_{i−1} + d_i x_i + c_i x_{i+1} = r_i` in place (`r` becomes
/// `x`). `a[0]` and `c[n−1]` are ignored. `scratch` must have length `n`.
pub(crate) fn thomas(a: &[f64], d: &[f64], c: &[f64], r: &mut [f64], scratch: &mut [f64]) {
    let n = r.len();
    if n == 0 {
        return;
    }
    let mut beta = d[0];
    r[0] /= beta;
    for i in 1..n {
        scratch[i] = c[i - 1] / beta;
        beta = d[i] - a[i] * scratch[i];
        r[i] = (r[i] - a[i] * r[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        r[i] -= scratch[i + 1] * r[i + 1];
    }
}

/// Periodic variant: row 0 couples to `x_{n−1}` through `a[0]` and row `n−1`
/// to `x_0` through `c[n−1]`. Sherman–Morrison on top of [`thomas`].
pub(crate) fn cyclic(a: &[f64], d: &[f64], c: &[f64], r: &mut [f64]) {
    let n = r.len();
    assert!(n >= 3, "cyclic system needs at least 3 unknowns");
    let gamma = -d[0];
    let alpha = c[n - 1];
    let beta = a[0];
    let mut dd = d.to_vec();
    dd[0] -= gamma;
    dd[n - 1] -= alpha * beta / gamma;
    let mut scratch = vec![0.0; n];
    thomas(a, &dd, c, r, &mut scratch);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = alpha;
    thomas(a, &dd, c, &mut u, &mut scratch);
    let fact = (r[0] + beta * r[n - 1] / gamma) / (1.0 + u[0] + beta * u[n - 1] / gamma);
    for (ri, ui) in r.iter_mut().zip(&u) {
        *ri -= fact * ui;
    }
}
