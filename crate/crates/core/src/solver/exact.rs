//! Closed-form solutions used to validate the solver.

use crate::model::{Environment, Family, HarmonicSeries, PiecewisePoly, ReactionSpec};
use serde::{Deserialize, Serialize};

/// `u_t = (u^m)_xx` with `κ ≡ 1` and no reaction.
pub fn reaction_free(m: f64) -> Environment {
    Environment::new(
        m,
        HarmonicSeries::constant(1.0),
        ReactionSpec::new(Family::Custom, Some(0.0), PiecewisePoly::single(vec![0.0])),
    )
    .expect("reaction-free environment is valid")
}

/// Zel'dovich–Kompaneets–Barenblatt source solution
/// `u = t^(−k) (C − k(m−1) x² / (2m t^(2k)))_+^(1/(m−1))`, `k = 1/(m+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Zkb {
    pub m: f64,
    pub c: f64,
}

impl Zkb {
    /// Normalized so that the front sits at `x = 1` when `t = 1`.
    pub fn unit_front(m: f64) -> Self {
        let k = 1.0 / (m + 1.0);
        Self {
            m,
            c: k * (m - 1.0) / (2.0 * m),
        }
    }

    pub fn k(&self) -> f64 {
        1.0 / (self.m + 1.0)
    }

    fn bracket(&self, x: f64, t: f64) -> f64 {
        let k = self.k();
        (self.c - k * (self.m - 1.0) * x * x / (2.0 * self.m * t.powf(2.0 * k))).max(0.0)
    }

    pub fn density(&self, x: f64, t: f64) -> f64 {
        t.powf(-self.k()) * self.bracket(x, t).powf(1.0 / (self.m - 1.0))
    }

    pub fn pressure(&self, x: f64, t: f64) -> f64 {
        let m = self.m;
        m / (m - 1.0) * t.powf(-self.k() * (m - 1.0)) * self.bracket(x, t)
    }

    pub fn front(&self, t: f64) -> f64 {
        let k = self.k();
        (2.0 * self.m * self.c / (k * (self.m - 1.0))).sqrt() * t.powf(k)
    }
}

/// Parameters of the Barenblatt-type supersolution
/// `ū = A e^(Kτ) (δ* − (x−x0)² / (τ e^((m−1)Kτ)))_+^(1/(m−1))`, `τ = t + 1`,
/// of `u_t = (u^m)_xx + K u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupersolutionParams {
    pub delta_star: f64,
    pub lipschitz: f64,
    pub x0: f64,
    pub m: f64,
}

impl SupersolutionParams {
    /// `A = ((m−1)/(4m))^(1/(m−1))`.
    pub fn amplitude(&self) -> f64 {
        ((self.m - 1.0) / (4.0 * self.m)).powf(1.0 / (self.m - 1.0))
    }

    fn growth(&self, t: f64) -> f64 {
        (self.m - 1.0) * self.lipschitz * (t + 1.0)
    }

    /// Support half-width `ρ(t) = δ*^(1/2) (t+1)^(1/2) e^((m−1)K(t+1)/2)`.
    pub fn rho(&self, t: f64) -> f64 {
        (self.delta_star * (t + 1.0)).sqrt() * (0.5 * self.growth(t)).exp()
    }

    /// Left side of the inequality that keeps `2ρ` below 1 over `[0, 3T]`.
    pub fn separation(&self, period: f64) -> f64 {
        2.0 * self.rho(3.0 * period)
    }

    pub fn density(&self, x: f64, t: f64) -> f64 {
        let tau = t + 1.0;
        let d = x - self.x0;
        let bracket = self.delta_star - d * d / (tau * self.growth(t).exp());
        if bracket <= 0.0 {
            return 0.0;
        }
        self.amplitude() * (self.lipschitz * tau).exp() * bracket.powf(1.0 / (self.m - 1.0))
    }

    pub fn pressure(&self, x: f64, t: f64) -> f64 {
        let u = self.density(x, t);
        self.m / (self.m - 1.0) * u.powf(self.m - 1.0)
    }
}

/// `ū(x,t)` in density variables.
pub fn barenblatt_supersolution(params: &SupersolutionParams, x: f64, t: f64) -> f64 {
    params.density(x, t)
}

/// Sharp traveling wave of `u_t = (u²)_xx + u(1−u)`:
/// `u = (1 − e^{z/2})_+`, `z = x − t`, speed 1.
pub fn fisher_wave_density(z: f64) -> f64 {
    if z >= 0.0 {
        0.0
    } else {
        1.0 - (0.5 * z).exp()
    }
}

pub fn fisher_wave_pressure(z: f64) -> f64 {
    2.0 * fisher_wave_density(z)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn supersolution_center_value() {
        let p = SupersolutionParams {
            delta_star: 0.01,
            lipschitz: 1.0,
            x0: 0.0,
            m: 2.0,
        };
        assert!((p.amplitude() - 0.125).abs() < 1e-15);
        let expected = 0.01 * std::f64::consts::E / 8.0;
        assert!((barenblatt_supersolution(&p, 0.0, 0.0) - expected).abs() < 1e-15);
        for t in [0.0, 1.0, 2.5] {
            assert_eq!(p.density(p.rho(t) * (1.0 + 1e-12), t), 0.0);
            assert!(p.density(p.rho(t) * (1.0 - 1e-6), t) > 0.0);
        }
    }

    #[test]
    fn zkb_front_normalization() {
        for m in [2.0, 3.0] {
            let z = Zkb::unit_front(m);
            assert!((z.front(1.0) - 1.0).abs() < 1e-14);
            assert_eq!(z.density(1.0 + 1e-12, 1.0), 0.0);
            assert!(z.density(0.999, 1.0) > 0.0);
        }
    }
}
