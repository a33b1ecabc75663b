//! Intersection counts between two pressure profiles and the ordering
//! relations they pass through as time goes on.

use crate::solver::Snapshot;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DiagnosticsError {
    #[error("profiles live on different lattices ({0} vs {1} nodes per unit)")]
    Lattice(usize, usize),
    #[error("recording times differ: {0} vs {1}")]
    Times(f64, f64),
    #[error("runs recorded {0} and {1} snapshots")]
    Count(usize, usize),
    #[error("non-finite profile value at node {0}")]
    NonFinite(i64),
}

/// Two profiles on the lattice `x_j = (i0 + j)/N`, zero beyond their ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfilePair {
    pub cells_per_unit: usize,
    pub i0: i64,
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
    /// Sharp fronts, when known.
    pub r1: Option<f64>,
    pub r2: Option<f64>,
}

impl ProfilePair {
    pub fn new(
        cells_per_unit: usize,
        i0: i64,
        w1: Vec<f64>,
        w2: Vec<f64>,
    ) -> Result<Self, DiagnosticsError> {
        let len = w1.len().max(w2.len());
        let pad = |mut w: Vec<f64>| {
            w.resize(len, 0.0);
            w
        };
        let pair = Self {
            cells_per_unit,
            i0,
            w1: pad(w1),
            w2: pad(w2),
            r1: None,
            r2: None,
        };
        if let Some(j) = pair
            .w1
            .iter()
            .zip(&pair.w2)
            .position(|(a, b)| !a.is_finite() || !b.is_finite())
        {
            return Err(DiagnosticsError::NonFinite(i0 + j as i64));
        }
        Ok(pair)
    }

    /// Aligns two snapshots over the overlap of their left ends and the
    /// union of their right ends.
    pub fn from_snapshots(a: &Snapshot, b: &Snapshot) -> Result<Self, DiagnosticsError> {
        if a.cells_per_unit != b.cells_per_unit {
            return Err(DiagnosticsError::Lattice(
                a.cells_per_unit,
                b.cells_per_unit,
            ));
        }
        let lo = a.i0.max(b.i0);
        let hi = (a.i0 + a.v.len() as i64).max(b.i0 + b.v.len() as i64);
        let take = |s: &Snapshot| -> Vec<f64> {
            (lo..hi)
                .map(|j| s.value_at_index(j).unwrap_or(0.0))
                .collect()
        };
        let mut pair = Self::new(a.cells_per_unit, lo, take(a), take(b))?;
        pair.r1 = Some(a.b);
        pair.r2 = Some(b.b);
        Ok(pair)
    }

    pub fn x(&self, j: usize) -> f64 {
        (self.i0 + j as i64) as f64 / self.cells_per_unit as f64
    }

    pub fn swapped(&self) -> Self {
        Self {
            cells_per_unit: self.cells_per_unit,
            i0: self.i0,
            w1: self.w2.clone(),
            w2: self.w1.clone(),
            r1: self.r2,
            r2: self.r1,
        }
    }

    /// Signs of `w1 − w2` beyond `tol`, on nodes where either profile is
    /// positive.
    fn signs(&self, tol: f64) -> impl Iterator<Item = i8> + '_ {
        self.w1.iter().zip(&self.w2).filter_map(move |(&a, &b)| {
            let d = a - b;
            if (a > 0.0 || b > 0.0) && d.abs() > tol {
                Some(if d > 0.0 { 1 } else { -1 })
            } else {
                None
            }
        })
    }
}

/// Sign changes of `w1 − w2` over the positivity set of either profile,
/// ignoring excursions within `tol` so grazing contacts are not counted.
pub fn sign_changes(pair: &ProfilePair, tol: f64) -> usize {
    let mut count = 0;
    let mut last = 0i8;
    for s in pair.signs(tol) {
        if last != 0 && s != last {
            count += 1;
        }
        last = s;
    }
    count
}

/// Ordering relation of `w1` relative to `w2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    /// One crossing: above on the left, below on the right.
    Steeper,
    /// `w1 ≥ w2` with contact somewhere.
    TouchOrder,
    /// `w1 > w2` on the closure of the support of `w2`, with fronts nested.
    StrictOrder,
    Other,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Steeper => "steeper",
            Relation::TouchOrder => "touch-order",
            Relation::StrictOrder => "strict-order",
            Relation::Other => "other",
        })
    }
}

pub fn classify_relation(pair: &ProfilePair, tol: f64) -> Relation {
    let signs: Vec<i8> = pair.signs(tol).collect();
    if signs.is_empty() {
        return Relation::Other;
    }
    let changes = signs.windows(2).filter(|w| w[0] != w[1]).count();
    if changes == 1 && signs[0] > 0 {
        return Relation::Steeper;
    }
    if changes > 0 || signs[0] < 0 {
        return Relation::Other;
    }
    // w1 ≥ w2 up to tol; strict if it clears w2 by tol on the closure of
    // the positivity set of w2 and the fronts are strictly nested
    let w2 = &pair.w2;
    let in_closure = |j: usize| {
        w2[j] > 0.0 || (j > 0 && w2[j - 1] > 0.0) || w2.get(j + 1).is_some_and(|&v| v > 0.0)
    };
    let clears = (0..w2.len())
        .filter(|&j| in_closure(j))
        .all(|j| pair.w1[j] - w2[j] > tol);
    let dx = 1.0 / pair.cells_per_unit as f64;
    let nested = match (pair.r1, pair.r2) {
        (Some(r1), Some(r2)) => r1 > r2 + dx,
        _ => {
            let end = |w: &[f64]| w.iter().rposition(|&v| v > 0.0);
            match (end(&pair.w1), end(&pair.w2)) {
                (Some(e1), Some(e2)) => e1 > e2,
                (Some(_), None) => true,
                _ => false,
            }
        }
    };
    if clears && nested {
        Relation::StrictOrder
    } else {
        Relation::TouchOrder
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntersectionReport {
    pub times: Vec<f64>,
    pub counts: Vec<usize>,
    pub relations: Vec<Relation>,
    /// First recorded time each relation appears, in order of appearance.
    pub first_seen: Vec<(Relation, f64)>,
    pub nonincreasing: bool,
}

/// Sign-change counts and relations at every common recording time.
pub fn check_monotone_intersections(
    run1: &[Snapshot],
    run2: &[Snapshot],
    tol: f64,
) -> Result<IntersectionReport, DiagnosticsError> {
    if run1.len() != run2.len() {
        return Err(DiagnosticsError::Count(run1.len(), run2.len()));
    }
    let mut times = Vec::with_capacity(run1.len());
    let mut counts = Vec::with_capacity(run1.len());
    let mut relations = Vec::with_capacity(run1.len());
    let mut first_seen: Vec<(Relation, f64)> = Vec::new();
    for (a, b) in run1.iter().zip(run2) {
        if (a.t - b.t).abs() > 1e-9 {
            return Err(DiagnosticsError::Times(a.t, b.t));
        }
        let pair = ProfilePair::from_snapshots(a, b)?;
        let rel = classify_relation(&pair, tol);
        if !first_seen.iter().any(|(r, _)| *r == rel) {
            first_seen.push((rel, a.t));
        }
        times.push(a.t);
        counts.push(sign_changes(&pair, tol));
        relations.push(rel);
    }
    let nonincreasing = counts.windows(2).all(|w| w[1] <= w[0]);
    Ok(IntersectionReport {
        times,
        counts,
        relations,
        first_seen,
        nonincreasing,
    })
}

/// Grazing-contact threshold `10·dx·C1` on the front-slope scale.
pub fn default_tolerance(cells_per_unit: usize, c1: f64) -> f64 {
    10.0 * c1 / cells_per_unit as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_ignore_small_excursions() {
        let w1 = vec![1.0, 1.0, 1.0, 1.0, 1.0];
        let w2 = vec![0.5, 1.0 + 1e-9, 0.5, 1.5, 1.0];
        let p = ProfilePair::new(4, 0, w1, w2).unwrap();
        assert_eq!(sign_changes(&p, 1e-6), 1);
        assert_eq!(sign_changes(&p, 0.6), 0);
    }

    #[test]
    fn shorter_profiles_are_zero_padded() {
        let p = ProfilePair::new(4, 0, vec![1.0, 1.0, 1.0], vec![2.0]).unwrap();
        assert_eq!(p.w2, vec![2.0, 0.0, 0.0]);
        assert_eq!(sign_changes(&p, 1e-9), 1);
        assert!(ProfilePair::new(4, 0, vec![f64::NAN], vec![]).is_err());
    }
}
