use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// `amp · cos(2π·freq·x + phase)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Harmonic {
    pub amp: f64,
    pub freq: u32,
    #[serde(default)]
    pub phase: f64,
}

/// A 1-periodic function given as a finite cosine series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicSeries {
    pub mean: f64,
    #[serde(default)]
    pub harmonics: Vec<Harmonic>,
}

impl HarmonicSeries {
    pub fn constant(mean: f64) -> Self {
        Self {
            mean,
            harmonics: Vec::new(),
        }
    }

    pub fn cosine(mean: f64, amp: f64) -> Self {
        Self {
            mean,
            harmonics: vec![Harmonic {
                amp,
                freq: 1,
                phase: 0.0,
            }],
        }
    }

    /// Same function translated by `shift`: `x ↦ f(x − shift)`.
    pub fn shifted(&self, shift: f64) -> Self {
        Self {
            mean: self.mean,
            harmonics: self
                .harmonics
                .iter()
                .map(|h| Harmonic {
                    phase: h.phase - TAU * h.freq as f64 * shift,
                    ..*h
                })
                .collect(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            mean: self.mean * factor,
            harmonics: self
                .harmonics
                .iter()
                .map(|h| Harmonic {
                    amp: h.amp * factor,
                    ..*h
                })
                .collect(),
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let y = x.rem_euclid(1.0);
        self.harmonics.iter().fold(self.mean, |acc, h| {
            acc + h.amp * (TAU * h.freq as f64 * y + h.phase).cos()
        })
    }

    pub fn is_constant(&self) -> bool {
        self.harmonics.iter().all(|h| h.amp == 0.0 || h.freq == 0)
    }

    /// (min, max) over `n` equispaced samples of one period.
    pub fn sampled_range(&self, n: usize) -> (f64, f64) {
        (0..n)
            .map(|i| self.eval(i as f64 / n as f64))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            })
    }

    /// Guaranteed bounds `mean ∓ Σ|amp|`.
    pub fn envelope(&self) -> (f64, f64) {
        let spread: f64 = self.harmonics.iter().map(|h| h.amp.abs()).sum();
        (self.mean - spread, self.mean + spread)
    }

    pub fn is_finite(&self) -> bool {
        self.mean.is_finite()
            && self
                .harmonics
                .iter()
                .all(|h| h.amp.is_finite() && h.phase.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodic_and_shifted() {
        let k = HarmonicSeries::cosine(1.0, 0.2);
        assert!((k.eval(0.0) - 1.2).abs() < 1e-15);
        assert!((k.eval(0.5) - 0.8).abs() < 1e-15);
        for &x in &[-3.3, 0.1, 0.77, 5.5] {
            assert!((k.eval(x) - k.eval(x + 1.0)).abs() < 1e-12);
        }
        let s = k.shifted(0.5);
        assert!((s.eval(0.5) - k.eval(0.0)).abs() < 1e-12);
        let (lo, hi) = k.sampled_range(512);
        assert!((lo - 0.8).abs() < 1e-12 && (hi - 1.2).abs() < 1e-12);
    }
}
