//! Piecewise polynomials in the density variable `u`.

use serde::{Deserialize, Serialize};

/// One polynomial piece on `[from, to)`; `to = None` extends to +∞.
/// Coefficients are in ascending powers of `u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub from: f64,
    pub to: Option<f64>,
    pub coeffs: Vec<f64>,
}

impl Piece {
    pub fn new(from: f64, to: Option<f64>, coeffs: Vec<f64>) -> Self {
        Self { from, to, coeffs }
    }

    fn upper(&self) -> f64 {
        self.to.unwrap_or(f64::INFINITY)
    }
}

/// A continuous-or-not piecewise polynomial covering `[0, ∞)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PiecewisePoly {
    pieces: Vec<Piece>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PolyError {
    #[error("piecewise polynomial has no pieces")]
    Empty,
    #[error("first piece must start at u = 0, found {0}")]
    BadStart(f64),
    #[error("pieces are not contiguous at piece {index}")]
    Gap { index: usize },
    #[error("last piece must extend to infinity")]
    Bounded,
    #[error("piece {index} has an empty interval")]
    EmptyInterval { index: usize },
    #[error("piece {index} has non-finite coefficients")]
    NonFinite { index: usize },
}

pub(crate) fn horner(coeffs: &[f64], u: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * u + c)
}

fn poly_derivative(coeffs: &[f64]) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| c * k as f64)
        .collect()
}

/// Product of two coefficient vectors.
pub fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

impl PiecewisePoly {
    pub fn new(pieces: Vec<Piece>) -> Result<Self, PolyError> {
        let poly = Self { pieces };
        poly.check()?;
        Ok(poly)
    }

    /// Single polynomial on all of `[0, ∞)`.
    pub fn single(coeffs: Vec<f64>) -> Self {
        Self {
            pieces: vec![Piece::new(0.0, None, coeffs)],
        }
    }

    pub fn check(&self) -> Result<(), PolyError> {
        let first = self.pieces.first().ok_or(PolyError::Empty)?;
        if first.from != 0.0 {
            return Err(PolyError::BadStart(first.from));
        }
        for (index, piece) in self.pieces.iter().enumerate() {
            if piece.coeffs.iter().any(|c| !c.is_finite()) {
                return Err(PolyError::NonFinite { index });
            }
            if piece.upper() <= piece.from {
                return Err(PolyError::EmptyInterval { index });
            }
            if let Some(next) = self.pieces.get(index + 1) {
                match piece.to {
                    Some(to) if to == next.from => {}
                    _ => return Err(PolyError::Gap { index }),
                }
            } else if piece.to.is_some() {
                return Err(PolyError::Bounded);
            }
        }
        Ok(())
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    /// Interior breakpoints, ascending.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.pieces.iter().skip(1).map(|p| p.from).collect()
    }

    #[inline]
    fn piece_for(&self, u: f64) -> &Piece {
        // few pieces; a linear scan beats a binary search here
        for piece in &self.pieces {
            if u < piece.upper() {
                return piece;
            }
        }
        self.pieces.last().expect("checked non-empty")
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        horner(&self.piece_for(u).coeffs, u)
    }

    pub fn derivative(&self) -> Self {
        Self {
            pieces: self
                .pieces
                .iter()
                .map(|p| Piece::new(p.from, p.to, poly_derivative(&p.coeffs)))
                .collect(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            pieces: self
                .pieces
                .iter()
                .map(|p| Piece::new(p.from, p.to, p.coeffs.iter().map(|c| c * factor).collect()))
                .collect(),
        }
    }

    /// Multiply every piece by the same polynomial.
    pub fn times_poly(&self, other: &[f64]) -> Self {
        Self {
            pieces: self
                .pieces
                .iter()
                .map(|p| Piece::new(p.from, p.to, poly_mul(&p.coeffs, other)))
                .collect(),
        }
    }

    /// Lowest power with a nonzero coefficient in the piece containing
    /// `u = 0+`; `None` when that piece is identically zero.
    pub fn leading_power_at_zero(&self) -> Option<(usize, f64)> {
        self.pieces[0]
            .coeffs
            .iter()
            .enumerate()
            .find(|(_, c)| **c != 0.0)
            .map(|(k, &c)| (k, c))
    }
}
