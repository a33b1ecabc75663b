//! Compactly supported traveling-wave subsolutions of the homogeneous
//! problem `(q^m)'' + c q' + f0(q) = 0` by shooting from the peak.
//!
//! The ODE is integrated for `(q, w)` with `w = (q^m)'`. Near touchdown the
//! `z`-parametrization degenerates (`q' → −∞` whenever the flux `w` stays
//! nonzero), so below `0.05·q0` the independent variable switches to `q`:
//!
//! ```text
//! dz/dq = m q^(m−1) / w,     dw/dq = −c − m q^(m−1) f0(q) / w
//! ```
//!
//! which stays regular down to `q = 0`.

use crate::model::{
    poly_mul, pressure_from_density_unchecked, Environment, Family, Piece, PiecewisePoly,
    PolyError, SamplingGrid,
};
use crate::ode::{self, Control, OdeFailure, Tolerances};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PhaseError {
    #[error("no touchdown: {0}")]
    NoTouchdown(String),
    #[error("subsolution condition violated: edge slope {edge_slope} ≤ c = {c}")]
    SubsolutionViolated { edge_slope: f64, c: f64 },
    #[error("peak q0 = {q0} must lie in (0, κ0 = {kappa0})")]
    InvalidPeak { q0: f64, kappa0: f64 },
    #[error("F3 not verifiable: integral condition fails at u = {witness} (margin {margin:.3e})")]
    F3NotVerifiable { witness: f64, margin: f64 },
    #[error("no admissible f0 found: domination fails at x = {x}, u = {u}")]
    Domination { x: f64, u: f64 },
    #[error("unsupported reaction family {0} for f0 construction")]
    UnsupportedFamily(Family),
    #[error("ODE integration failed: {0:?}")]
    Integration(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

impl From<OdeFailure> for PhaseError {
    fn from(e: OdeFailure) -> Self {
        PhaseError::Integration(format!("{e:?}"))
    }
}

/// Which explicit f0 shape to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum F0Case {
    Monostable,
    Combustion,
    Bistable,
}

impl F0Case {
    pub fn for_family(family: Family) -> Option<Self> {
        match family {
            Family::Monostable => Some(F0Case::Monostable),
            Family::Combustion => Some(F0Case::Combustion),
            Family::Bistable => Some(F0Case::Bistable),
            _ => None,
        }
    }
}

/// Result of the integral condition `F(u) = ∫_u^{κ0} r^(m−1) f0(r) dr > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralCheck {
    pub passed: bool,
    /// `min F` over the sampled `u ∈ [0, κ0)`.
    pub margin: f64,
    /// Where the minimum is attained.
    pub argmin: f64,
    /// `F(0)`.
    pub at_zero: f64,
}

const GL_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GL_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189,
    0.478_628_670_499_366,
    0.568_888_888_888_889,
    0.478_628_670_499_366,
    0.236_926_885_056_189,
];

/// 5-point Gauss–Legendre on `[a, b]`.
fn gauss(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    GL_NODES
        .iter()
        .zip(GL_WEIGHTS)
        .map(|(&s, w)| w * f(mid + half * s))
        .sum::<f64>()
        * half
}

/// Cumulative `∫_{u_j}^{top} r^(m−1) f0(r) dr` on `u_j = top·j/n`, with cell
/// edges also placed at the breakpoints of `f0` so each cell is smooth.
fn tail_integrals(f0: &PiecewisePoly, m: f64, top: f64, n: usize) -> Vec<(f64, f64)> {
    let mut edges: Vec<f64> = (0..=n).map(|j| top * j as f64 / n as f64).collect();
    edges.extend(f0.breakpoints().into_iter().filter(|&b| b > 0.0 && b < top));
    edges.sort_by(f64::total_cmp);
    edges.dedup();
    let integrand = |r: f64| r.powf(m - 1.0) * f0.eval(r);
    let mut out = vec![(top, 0.0)];
    let mut acc = 0.0;
    for w in edges.windows(2).rev() {
        acc += gauss(w[0], w[1], integrand);
        out.push((w[0], acc));
    }
    out.reverse();
    out
}

/// Checks `F(u) > 0` on `[0, κ0)`.
pub fn check_integral_condition(f0: &PiecewisePoly, m: f64, kappa0: f64) -> IntegralCheck {
    let table = tail_integrals(f0, m, kappa0, 4096);
    let scale = table.iter().map(|(_, v)| v.abs()).fold(0.0, f64::max);
    let (argmin, margin) =
        table[..table.len() - 1]
            .iter()
            .copied()
            .fold((0.0, f64::INFINITY), |best, cur| {
                if cur.1 < best.1 {
                    cur
                } else {
                    best
                }
            });
    IntegralCheck {
        passed: margin > 1e-10 * scale && margin > 0.0,
        margin,
        argmin,
        at_zero: table[0].1,
    }
}

/// Explicit lower reaction profile f0 with `f(x,u)(κ(x) − u) ≥ f0(u)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct F0Profile {
    pub case: F0Case,
    pub profile: PiecewisePoly,
    /// Threshold below which f0 vanishes (θ1 or θ2); `None` for bistable.
    pub threshold: Option<f64>,
    /// Amplitude δ of the shaped profile; `None` for bistable.
    pub amplitude: Option<f64>,
    pub kappa0: f64,
    pub integral: IntegralCheck,
}

impl F0Profile {
    pub fn eval(&self, u: f64) -> f64 {
        self.profile.eval(u)
    }
}

/// `δ (u − θ*)(κ0 − u)` on `[θ*, ∞)`, zero below.
fn shaped_profile(threshold: f64, kappa0: f64, delta: f64) -> Result<PiecewisePoly, PolyError> {
    let hump = poly_mul(&[-threshold, 1.0], &[kappa0, -1.0]);
    PiecewisePoly::new(vec![
        Piece::new(0.0, Some(threshold), vec![0.0]),
        Piece::new(threshold, None, hump.iter().map(|c| c * delta).collect()),
    ])
}

/// First `(x, u)` on the sample grid where `f(x,u)(κ(x)−u) < f0(u)`.
fn domination_witness(
    env: &Environment,
    f0: &PiecewisePoly,
    top: f64,
    grid: SamplingGrid,
) -> Option<(f64, f64)> {
    for i in 0..grid.nx {
        let x = i as f64 / grid.nx as f64;
        for j in 0..=grid.nu {
            let u = top * j as f64 / grid.nu as f64;
            let lhs = env.reaction_density(x, u);
            let rhs = f0.eval(u);
            if lhs < rhs - 1e-13 * (1.0 + rhs.abs()) {
                return Some((x, u));
            }
        }
    }
    None
}

/// Restriction of `f_base` to `[0, cut]` times `left`, and to `[cut, ∞)`
/// times `right`.
fn split_product(
    base: &PiecewisePoly,
    cut: f64,
    left: &[f64],
    right: &[f64],
) -> Result<PiecewisePoly, PolyError> {
    let mut pieces = Vec::new();
    for piece in base.pieces() {
        let hi = piece.to.unwrap_or(f64::INFINITY);
        if piece.from < cut {
            let to = hi.min(cut);
            pieces.push(Piece::new(
                piece.from,
                Some(to),
                poly_mul(&piece.coeffs, left),
            ));
        }
        if hi > cut {
            let from = piece.from.max(cut);
            pieces.push(Piece::new(from, piece.to, poly_mul(&piece.coeffs, right)));
        }
    }
    PiecewisePoly::new(pieces)
}

/// Builds the explicit f0 for `case`: a `δ(u − θ*)(κ0 − u)` hump for the
/// monostable (θ* = κ0/2) and combustion (θ* = (θ+κ0)/2) cases with δ halved
/// from 0.5 until domination holds; for bistable the sharp envelope
/// `a_max f_base(u)(κ^0 − u)` on `[0,θ]`, `a_min f_base(u)(κ0 − u)` above,
/// gated by the integral condition.
pub fn build_f0(env: &Environment, case: F0Case) -> Result<F0Profile, PhaseError> {
    let kappa0 = env.kappa_min();
    let m = env.m();
    let grid = SamplingGrid::default();
    match case {
        F0Case::Monostable | F0Case::Combustion => {
            let threshold = if case == F0Case::Monostable {
                kappa0 / 2.0
            } else {
                (env.theta() + kappa0) / 2.0
            };
            let mut delta = 0.5;
            let mut witness = (0.0, 0.0);
            for _ in 0..=20 {
                let profile = shaped_profile(threshold, kappa0, delta)?;
                match domination_witness(env, &profile, kappa0, grid) {
                    None => {
                        let integral = check_integral_condition(&profile, m, kappa0);
                        return Ok(F0Profile {
                            case,
                            profile,
                            threshold: Some(threshold),
                            amplitude: Some(delta),
                            kappa0,
                            integral,
                        });
                    }
                    Some(w) => witness = w,
                }
                delta *= 0.5;
            }
            Err(PhaseError::Domination {
                x: witness.0,
                u: witness.1,
            })
        }
        F0Case::Bistable => {
            let (a_min, a_max) = env.modulation_range();
            let theta = env.theta();
            let profile = split_product(
                &env.reaction().base_pieces,
                theta,
                &[a_max * env.kappa_max(), -a_max],
                &[a_min * kappa0, -a_min],
            )?;
            let integral = check_integral_condition(&profile, m, kappa0);
            if !integral.passed {
                return Err(PhaseError::F3NotVerifiable {
                    witness: integral.argmin,
                    margin: integral.margin,
                });
            }
            if let Some((x, u)) = domination_witness(env, &profile, kappa0, grid) {
                return Err(PhaseError::Domination { x, u });
            }
            Ok(F0Profile {
                case,
                profile,
                threshold: None,
                amplitude: None,
                kappa0,
                integral,
            })
        }
    }
}

/// Compact traveling-wave subsolution `φ0` on `[−l0, l0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompactSubsolution {
    pub c: f64,
    pub q0: f64,
    pub m: f64,
    pub z: Vec<f64>,
    pub phi: Vec<f64>,
    pub l0: f64,
    pub l_plus: f64,
    pub l_minus: f64,
    /// `−ψ'(l0 − 0)`. Infinite whenever the edge flux is nonzero; serialized
    /// as `null` in JSON.
    pub edge_slope: f64,
    /// `−(φ0^m)'(l0 − 0)`, the finite density flux at the right edge.
    pub edge_flux: f64,
    /// `(φ0^m)'(−l0 + 0)` at the left edge.
    pub edge_flux_left: f64,
    /// `∫ m q^(m−1) q'² dz` from the peak to the right edge.
    pub dissipation: f64,
    pub subsolution_ok: bool,
    pub f0: PiecewisePoly,
}

impl CompactSubsolution {
    /// Pressure profile `ψ = m/(m−1) φ0^(m−1)`.
    pub fn psi(&self) -> Vec<f64> {
        self.phi
            .iter()
            .map(|&u| pressure_from_density_unchecked(u, self.m))
            .collect()
    }

    /// Linear interpolation of `φ0`, zero outside the support.
    pub fn eval(&self, z: f64) -> f64 {
        if z <= -self.l0 || z >= self.l0 {
            return 0.0;
        }
        let j = self
            .z
            .partition_point(|&s| s <= z)
            .clamp(1, self.z.len() - 1);
        let (z0, z1) = (self.z[j - 1], self.z[j]);
        let w = if z1 > z0 { (z - z0) / (z1 - z0) } else { 0.0 };
        self.phi[j - 1] * (1.0 - w) + self.phi[j] * w
    }
}

struct HalfOrbit {
    /// (distance from the peak, q), increasing distance.
    samples: Vec<(f64, f64)>,
    length: f64,
    flux: f64,
    dissipation: f64,
}

const Z_BUDGET: f64 = 1e4;

fn tolerances() -> Tolerances {
    Tolerances {
        rtol: 1e-11,
        atol: 1e-14,
        h_max: 0.05,
    }
}

/// One side of the orbit: rightward for `c`, leftward is the same problem
/// with `c ↦ −c`.
fn half_orbit(f0: &PiecewisePoly, m: f64, c: f64, q0: f64) -> Result<HalfOrbit, PhaseError> {
    let switch = 0.05 * q0;
    let mut samples = vec![(0.0, q0)];
    let mut turned = false;
    // state (q, w, D) in z
    let rhs_z = |_z: f64, y: &[f64; 3]| {
        let q = y[0].max(0.0);
        let dq = y[1] / (m * q.powf(m - 1.0));
        [dq, -c * dq - f0.eval(q), y[1] * dq]
    };
    let (z_s, y_s) = ode::integrate(
        rhs_z,
        0.0,
        [q0, 0.0, 0.0],
        Z_BUDGET,
        tolerances(),
        |z, y| {
            samples.push((z, y[0]));
            if y[1] >= 0.0 && z > 0.0 {
                turned = true;
                return Control::Stop;
            }
            if y[0] < switch {
                Control::Stop
            } else {
                Control::Continue
            }
        },
    )?;
    if turned {
        return Err(PhaseError::NoTouchdown(format!(
            "orbit turns back at q = {:.4} before reaching 0",
            y_s[0]
        )));
    }
    if y_s[0] >= switch {
        return Err(PhaseError::NoTouchdown(format!(
            "q stays above {switch:.3e} over z ≤ {Z_BUDGET}"
        )));
    }

    // state (z, w, D) in q, integrated from q_s down to 0
    let mut collapsed = false;
    let rhs_q = |q: f64, y: &[f64; 3]| {
        let qp = q.max(0.0);
        let mq = m * qp.powf(m - 1.0);
        [mq / y[1], -c - mq * f0.eval(qp) / y[1], y[1]]
    };
    let w_scale = y_s[1].abs();
    let (_, y_end) = ode::integrate(
        rhs_q,
        y_s[0],
        [z_s, y_s[1], y_s[2]],
        0.0,
        tolerances(),
        |q, y| {
            if y[1] >= -1e-9 * w_scale {
                collapsed = true;
                return Control::Stop;
            }
            samples.push((y[0], q));
            Control::Continue
        },
    )
    .map_err(|e| PhaseError::NoTouchdown(format!("flux collapses near the edge ({e:?})")))?;
    if collapsed {
        return Err(PhaseError::NoTouchdown(
            "flux w reaches 0 while q > 0".to_string(),
        ));
    }
    // dD/dq = w, and ∫_{q_s}^0 w dq = ∫_{z_s}^l w q' dz
    let dissipation = y_end[2];
    if let Some(last) = samples.last_mut() {
        last.1 = 0.0;
    }
    Ok(HalfOrbit {
        samples,
        length: y_end[0],
        flux: y_end[1],
        dissipation,
    })
}

/// Shoots `(q^m)'' + c q' + f0(q) = 0` from the peak `(q0, 0)` in both
/// directions to touchdown and recenters the support to `[−l0, l0]`.
pub fn shoot_compact_wave(
    f0: &PiecewisePoly,
    m: f64,
    c: f64,
    q0: f64,
    kappa0: f64,
) -> Result<CompactSubsolution, PhaseError> {
    if !(q0 > 0.0 && q0 < kappa0) {
        return Err(PhaseError::InvalidPeak { q0, kappa0 });
    }
    if f0.eval(q0) <= 0.0 {
        return Err(PhaseError::NoTouchdown(format!(
            "f0(q0) = {} ≤ 0, the peak is not a maximum",
            f0.eval(q0)
        )));
    }
    let right = half_orbit(f0, m, c, q0)?;
    let left = half_orbit(f0, m, -c, q0)?;
    let l0 = 0.5 * (right.length + left.length);
    let shift = 0.5 * (right.length - left.length);

    let mut z = Vec::with_capacity(left.samples.len() + right.samples.len());
    let mut phi = Vec::with_capacity(z.capacity());
    for &(s, q) in left.samples.iter().rev() {
        z.push(-s - shift);
        phi.push(q);
    }
    for &(s, q) in right.samples.iter().skip(1) {
        z.push(s - shift);
        phi.push(q);
    }
    // pin the ends exactly to ±l0
    if let Some(first) = z.first_mut() {
        *first = -l0;
    }
    if let Some(last) = z.last_mut() {
        *last = l0;
    }

    let edge_flux = -right.flux;
    let edge_slope = if edge_flux > 0.0 { f64::INFINITY } else { 0.0 };
    let sub = CompactSubsolution {
        c,
        q0,
        m,
        z,
        phi,
        l0,
        l_plus: right.length,
        l_minus: left.length,
        edge_slope,
        edge_flux,
        edge_flux_left: -left.flux,
        dissipation: right.dissipation,
        subsolution_ok: edge_slope > c,
        f0: f0.clone(),
    };
    if !sub.subsolution_ok {
        return Err(PhaseError::SubsolutionViolated { edge_slope, c });
    }
    Ok(sub)
}

/// Settings for [`construct_subsolution`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShootingConfig {
    /// Initial speed; halved on failure.
    pub c: f64,
    /// Peak as a fraction of κ0.
    pub q0_frac: f64,
    pub max_halvings: usize,
}

impl Default for ShootingConfig {
    fn default() -> Self {
        Self {
            c: 0.05,
            q0_frac: 0.95,
            max_halvings: 10,
        }
    }
}

/// `build_f0` followed by shooting; the speed is halved until an orbit with
/// touchdown on both sides is found.
pub fn construct_subsolution(
    env: &Environment,
    case: F0Case,
    cfg: &ShootingConfig,
) -> Result<(F0Profile, CompactSubsolution), PhaseError> {
    let f0 = build_f0(env, case)?;
    let q0 = cfg.q0_frac * f0.kappa0;
    let mut c = cfg.c;
    let mut last_err = None;
    for _ in 0..=cfg.max_halvings {
        match shoot_compact_wave(&f0.profile, env.m(), c, q0, f0.kappa0) {
            Ok(sub) => return Ok((f0, sub)),
            Err(e) => last_err = Some(e),
        }
        c *= 0.5;
    }
    Err(last_err.expect("at least one attempt"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct F2Report {
    pub passed: bool,
    /// `min f(x,φ0)(κ(x) − φ0) − f0(φ0)` over the sampled grid.
    pub min_margin: f64,
    pub witness_x: f64,
    pub witness_z: f64,
    pub edge_slope_ok: bool,
}

/// Checks the subsolution inequality through the ODE identity:
/// `(φ0^m)'' + cφ0' + f(x,φ0)(κ − φ0) = f(x,φ0)(κ − φ0) − f0(φ0)`.
pub fn verify_f2(env: &Environment, sub: &CompactSubsolution, nx: usize, nz: usize) -> F2Report {
    let mut min_margin = f64::INFINITY;
    let mut witness = (0.0, 0.0);
    for i in 0..nx {
        let x = i as f64 / nx as f64;
        for j in 0..nz {
            let z = -sub.l0 + 2.0 * sub.l0 * (j as f64 + 0.5) / nz as f64;
            let phi = sub.eval(z);
            let margin = env.reaction_density(x, phi) - sub.f0.eval(phi);
            if margin < min_margin {
                min_margin = margin;
                witness = (x, z);
            }
        }
    }
    let edge_slope_ok = sub.edge_slope > sub.c;
    F2Report {
        passed: min_margin >= -1e-12 && edge_slope_ok,
        min_margin,
        witness_x: witness.0,
        witness_z: witness.1,
        edge_slope_ok,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::HarmonicSeries;

    #[test]
    fn fisher_integral_margin() {
        let f0 = PiecewisePoly::single(vec![0.0, 1.0, -1.0]);
        let check = check_integral_condition(&f0, 2.0, 1.0);
        assert!(check.passed);
        assert!((check.at_zero - 1.0 / 12.0).abs() < 1e-12);
        let neg = PiecewisePoly::single(vec![0.0, -1.0, 1.0]);
        assert!(!check_integral_condition(&neg, 2.0, 1.0).passed);
    }

    #[test]
    fn symmetric_orbit_without_drift() {
        let f0 = PiecewisePoly::single(vec![0.0, 1.0, -1.0]);
        let sub = shoot_compact_wave(&f0, 2.0, 0.0, 0.95, 1.0).unwrap();
        assert!((sub.l_plus - sub.l_minus).abs() < 1e-8);
        assert!(sub.edge_flux > 0.0);
    }

    #[test]
    fn thresholds_of_built_profiles() {
        let fisher = build_f0(&Environment::fisher(), F0Case::Monostable).unwrap();
        assert_eq!(fisher.threshold, Some(0.5));
        let comb = Environment::combustion(
            2.0,
            HarmonicSeries::constant(1.0),
            0.3,
            HarmonicSeries::constant(1.0),
        )
        .unwrap();
        let f0 = build_f0(&comb, F0Case::Combustion).unwrap();
        assert!((f0.threshold.unwrap() - 0.65).abs() < 1e-15);
    }
}
