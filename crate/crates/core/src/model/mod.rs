//! Problem data for `u_t = (u^m)_xx + f(x,u)[κ(x) − u]` on a 1-periodic
//! medium, together with the density/pressure change of variables
//!
//! ```text
//! v = m/(m−1) · u^(m−1),        u = ((m−1) v / m)^(1/(m−1))
//! v_t = (m−1) v v_xx + v_x² + g(x, v),   g = m u^(m−2) f(x,u)[κ(x) − u]
//! ```
//!
//! The reaction is factored as `f(x,u) = a(x) · f_base(u)` with `a` a positive
//! harmonic series and `f_base` piecewise polynomial.

mod harmonic;
mod poly;

pub use harmonic::{Harmonic, HarmonicSeries};
pub use poly::{poly_mul, Piece, PiecewisePoly, PolyError};

use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("exponent m must satisfy m > 1, got {0}")]
    InvalidExponent(f64),
    #[error("{what} must be non-negative and finite, got {value}")]
    Domain { what: &'static str, value: f64 },
    #[error("invalid reaction profile: {0}")]
    Poly(#[from] PolyError),
    #[error("coefficient {0} is not finite")]
    NonFinite(&'static str),
    #[error("modulation a(x) must be positive, min sample is {0}")]
    NonPositiveModulation(f64),
    #[error("reaction sign pattern does not match {family}: f_base({u}) = {value}")]
    SignPattern { family: Family, u: f64, value: f64 },
    #[error("bad sign-change list for multistable reaction: {0}")]
    SignChanges(String),
    #[error("g(x,v) is unbounded as v → 0: f_base ~ u^{power} but m = {m} needs power ≥ {needed}")]
    Singular { m: f64, power: usize, needed: f64 },
    #[error("f(x,u)(κ−u)/u is unbounded near u = 0 (f_base(0) = {0} ≠ 0)")]
    UnboundedRatio(f64),
    #[error("non-finite pressure reaction at x = {x}, v = {v}")]
    NonFiniteReaction { x: f64, v: f64 },
}

/// Sign pattern of `f_base`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Monostable,
    Bistable,
    Combustion,
    Multistable,
    Custom,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Family::Monostable => "monostable",
            Family::Bistable => "bistable",
            Family::Combustion => "combustion",
            Family::Multistable => "multistable",
            Family::Custom => "custom",
        };
        f.write_str(name)
    }
}

/// Reaction `f(x,u) = a(x)·f_base(u)` with its family tag and threshold θ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReactionSpec {
    pub family: Family,
    /// θ; for the monostable family it defaults to κ0/2 when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    /// Sign-change points of `f_base` inside `(0, θ]` (multistable only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sign_changes: Vec<f64>,
    pub base_pieces: PiecewisePoly,
    #[serde(default = "unit_modulation")]
    pub modulation: HarmonicSeries,
}

fn unit_modulation() -> HarmonicSeries {
    HarmonicSeries::constant(1.0)
}

impl ReactionSpec {
    pub fn new(family: Family, theta: Option<f64>, base: PiecewisePoly) -> Self {
        Self {
            family,
            theta,
            sign_changes: Vec::new(),
            base_pieces: base,
            modulation: unit_modulation(),
        }
    }

    pub fn with_modulation(mut self, modulation: HarmonicSeries) -> Self {
        self.modulation = modulation;
        self
    }

    pub fn with_sign_changes(mut self, points: Vec<f64>) -> Self {
        self.sign_changes = points;
        self
    }
}

/// Wire form of [`Environment`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentConfig {
    pub m: f64,
    pub kappa: HarmonicSeries,
    pub reaction: ReactionSpec,
}

/// Validated PDE data. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EnvironmentConfig", into = "EnvironmentConfig")]
pub struct Environment {
    m: f64,
    kappa: HarmonicSeries,
    reaction: ReactionSpec,
    theta: f64,
    kappa_min: f64,
    kappa_max: f64,
    modulation_min: f64,
    modulation_max: f64,
}

impl From<Environment> for EnvironmentConfig {
    fn from(env: Environment) -> Self {
        EnvironmentConfig {
            m: env.m,
            kappa: env.kappa,
            reaction: env.reaction,
        }
    }
}

impl TryFrom<EnvironmentConfig> for Environment {
    type Error = ModelError;

    fn try_from(cfg: EnvironmentConfig) -> Result<Self, ModelError> {
        Environment::new(cfg.m, cfg.kappa, cfg.reaction)
    }
}

const RANGE_SAMPLES: usize = 4096;

impl Environment {
    pub fn new(m: f64, kappa: HarmonicSeries, reaction: ReactionSpec) -> Result<Self, ModelError> {
        if !(m.is_finite() && m > 1.0) {
            return Err(ModelError::InvalidExponent(m));
        }
        if !kappa.is_finite() {
            return Err(ModelError::NonFinite("kappa"));
        }
        if !reaction.modulation.is_finite() {
            return Err(ModelError::NonFinite("modulation"));
        }
        reaction.base_pieces.check()?;
        let (kappa_min, kappa_max) = kappa.sampled_range(RANGE_SAMPLES);
        let (modulation_min, modulation_max) = reaction.modulation.sampled_range(RANGE_SAMPLES);
        if modulation_min <= 0.0 {
            return Err(ModelError::NonPositiveModulation(modulation_min));
        }
        let theta = match (reaction.theta, reaction.family) {
            (Some(t), _) => t,
            (None, Family::Monostable) => kappa_min / 2.0,
            (None, Family::Multistable) => reaction.sign_changes.last().copied().unwrap_or(0.0),
            (None, _) => 0.0,
        };
        if !(theta.is_finite() && theta >= 0.0) {
            return Err(ModelError::Domain {
                what: "theta",
                value: theta,
            });
        }
        let env = Self {
            m,
            kappa,
            reaction,
            theta,
            kappa_min,
            kappa_max,
            modulation_min,
            modulation_max,
        };
        env.check_sign_pattern()?;
        env.check_pressure_singularity()?;
        Ok(env)
    }

    /// `u_t = (u²)_xx + u(1 − u)`.
    pub fn fisher() -> Self {
        Self::monostable(
            2.0,
            HarmonicSeries::constant(1.0),
            PiecewisePoly::single(vec![0.0, 1.0]),
        )
        .expect("fisher preset is valid")
    }

    pub fn monostable(
        m: f64,
        kappa: HarmonicSeries,
        base: PiecewisePoly,
    ) -> Result<Self, ModelError> {
        Self::new(m, kappa, ReactionSpec::new(Family::Monostable, None, base))
    }

    /// `f_base(u) = u(u − θ)`.
    pub fn bistable(m: f64, kappa: HarmonicSeries, theta: f64) -> Result<Self, ModelError> {
        let base = PiecewisePoly::single(vec![0.0, -theta, 1.0]);
        Self::new(
            m,
            kappa,
            ReactionSpec::new(Family::Bistable, Some(theta), base),
        )
    }

    /// `f_base(u) = (u − θ)_+`.
    pub fn combustion(
        m: f64,
        kappa: HarmonicSeries,
        theta: f64,
        modulation: HarmonicSeries,
    ) -> Result<Self, ModelError> {
        let base = PiecewisePoly::new(vec![
            Piece::new(0.0, Some(theta), vec![0.0]),
            Piece::new(theta, None, vec![-theta, 1.0]),
        ])?;
        Self::new(
            m,
            kappa,
            ReactionSpec::new(Family::Combustion, Some(theta), base).with_modulation(modulation),
        )
    }

    /// Multistable reaction with a stable intermediate zero at 0.4 and an
    /// unstable one at `upper`: `f_base = s(u)·u(0.4 − u)(upper − u)` with
    /// `s = boost` on `[0, 0.4]` and `1` above. With a strong lower branch the
    /// invasion of 0 by the 0.4 state outruns the 0.4 → 1 transition.
    pub fn multistable_terrace(boost: f64, upper: f64) -> Result<Self, ModelError> {
        let low = 0.4;
        let cubic = poly_mul(&poly_mul(&[0.0, 1.0], &[low, -1.0]), &[upper, -1.0]);
        let base = PiecewisePoly::new(vec![
            Piece::new(0.0, Some(low), cubic.iter().map(|c| c * boost).collect()),
            Piece::new(low, None, cubic),
        ])?;
        Self::new(
            2.0,
            HarmonicSeries::constant(1.0),
            ReactionSpec::new(Family::Multistable, Some(upper), base)
                .with_sign_changes(vec![low, upper]),
        )
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn family(&self) -> Family {
        self.reaction.family
    }

    pub fn kappa(&self) -> &HarmonicSeries {
        &self.kappa
    }

    pub fn reaction(&self) -> &ReactionSpec {
        &self.reaction
    }

    /// κ0 = min κ.
    pub fn kappa_min(&self) -> f64 {
        self.kappa_min
    }

    /// κ^0 = max κ.
    pub fn kappa_max(&self) -> f64 {
        self.kappa_max
    }

    pub fn modulation_range(&self) -> (f64, f64) {
        (self.modulation_min, self.modulation_max)
    }

    pub fn is_homogeneous(&self) -> bool {
        self.kappa.is_constant() && self.reaction.modulation.is_constant()
    }

    pub fn with_m(&self, m: f64) -> Result<Self, ModelError> {
        Self::new(m, self.kappa.clone(), self.reaction.clone())
    }

    pub fn with_kappa(&self, kappa: HarmonicSeries) -> Result<Self, ModelError> {
        Self::new(self.m, kappa, self.reaction.clone())
    }

    /// Environment translated by `shift` in x.
    pub fn shifted(&self, shift: f64) -> Result<Self, ModelError> {
        let reaction = self
            .reaction
            .clone()
            .with_modulation(self.reaction.modulation.shifted(shift));
        Self::new(self.m, self.kappa.shifted(shift), reaction)
    }

    /// Reaction multiplied by `factor` (modulation rescaled).
    pub fn scaled_reaction(&self, factor: f64) -> Result<Self, ModelError> {
        let reaction = self
            .reaction
            .clone()
            .with_modulation(self.reaction.modulation.scaled(factor));
        Self::new(self.m, self.kappa.clone(), reaction)
    }

    #[inline]
    pub fn kappa_at(&self, x: f64) -> f64 {
        self.kappa.eval(x)
    }

    #[inline]
    pub fn modulation_at(&self, x: f64) -> f64 {
        self.reaction.modulation.eval(x)
    }

    #[inline]
    pub fn f_base(&self, u: f64) -> f64 {
        self.reaction.base_pieces.eval(u)
    }

    /// `f(x, u)`.
    #[inline]
    pub fn f(&self, x: f64, u: f64) -> f64 {
        self.modulation_at(x) * self.f_base(u)
    }

    /// `f(x,u)·(κ(x) − u)`.
    #[inline]
    pub fn reaction_density(&self, x: f64, u: f64) -> f64 {
        self.f(x, u) * (self.kappa_at(x) - u)
    }

    /// `g(x, v)` of the pressure equation.
    pub fn reaction_pressure(&self, x: f64, v: f64) -> Result<f64, ModelError> {
        if !(v.is_finite() && v >= 0.0) {
            return Err(ModelError::Domain {
                what: "pressure",
                value: v,
            });
        }
        let u = density_from_pressure_unchecked(v, self.m);
        let g = if u == 0.0 {
            self.pressure_reaction_at_zero(x)
        } else {
            self.m * u.powf(self.m - 2.0) * self.reaction_density(x, u)
        };
        if g.is_finite() {
            Ok(g)
        } else {
            Err(ModelError::NonFiniteReaction { x, v })
        }
    }

    /// lim_{v→0} g(x, v); finite by construction.
    fn pressure_reaction_at_zero(&self, x: f64) -> f64 {
        match self.reaction.base_pieces.leading_power_at_zero() {
            Some((power, coeff)) if (power as f64 + self.m - 2.0).abs() < 1e-12 => {
                self.m * self.modulation_at(x) * coeff * self.kappa_at(x)
            }
            _ => 0.0,
        }
    }

    fn check_pressure_singularity(&self) -> Result<(), ModelError> {
        if self.m >= 2.0 {
            return Ok(());
        }
        let needed = 2.0 - self.m;
        match self.reaction.base_pieces.leading_power_at_zero() {
            Some((power, _)) if (power as f64) + 1e-12 < needed => Err(ModelError::Singular {
                m: self.m,
                power,
                needed,
            }),
            _ => Ok(()),
        }
    }

    fn sign_pattern_error(&self, u: f64, value: f64) -> ModelError {
        ModelError::SignPattern {
            family: self.reaction.family,
            u,
            value,
        }
    }

    fn check_sign_pattern(&self) -> Result<(), ModelError> {
        let n = 1024;
        let top = self.kappa_max + 1.0;
        let theta = self.theta;
        let near = |u: f64, p: f64| (u - p).abs() < 1e-9;
        let samples = (1..=n).map(|i| top * i as f64 / n as f64);
        match self.reaction.family {
            Family::Custom => Ok(()),
            Family::Monostable => {
                for u in samples {
                    let fu = self.f_base(u);
                    if fu <= 0.0 {
                        return Err(self.sign_pattern_error(u, fu));
                    }
                }
                Ok(())
            }
            Family::Bistable => {
                for u in samples.chain([theta / 2.0]) {
                    if near(u, theta) {
                        continue;
                    }
                    let fu = self.f_base(u);
                    let ok = if u < theta { fu < 0.0 } else { fu > 0.0 };
                    if !ok {
                        return Err(self.sign_pattern_error(u, fu));
                    }
                }
                Ok(())
            }
            Family::Combustion => {
                for u in samples.chain([0.0, theta / 2.0, theta]) {
                    let fu = self.f_base(u);
                    let ok = if u <= theta {
                        fu.abs() <= 1e-14
                    } else {
                        near(u, theta) || fu > 0.0
                    };
                    if !ok {
                        return Err(self.sign_pattern_error(u, fu));
                    }
                }
                Ok(())
            }
            Family::Multistable => self.check_multistable(top, n),
        }
    }

    fn check_multistable(&self, top: f64, n: usize) -> Result<(), ModelError> {
        let changes = &self.reaction.sign_changes;
        if changes.is_empty() {
            return Err(ModelError::SignChanges("list is empty".into()));
        }
        if changes.windows(2).any(|w| w[0] >= w[1]) || changes[0] <= 0.0 {
            return Err(ModelError::SignChanges(
                "points must be positive and strictly increasing".into(),
            ));
        }
        if *changes.last().unwrap() > self.theta + 1e-12 {
            return Err(ModelError::SignChanges(format!(
                "last change point exceeds theta = {}",
                self.theta
            )));
        }
        // intervals (0,c1), (c1,c2), …, (ck,∞) alternate in sign and end positive
        let count = changes.len();
        for i in 1..=n {
            let u = top * i as f64 / n as f64;
            if changes.iter().any(|c| (u - c).abs() < 1e-9) {
                continue;
            }
            let interval = changes.iter().filter(|&&c| c < u).count();
            let positive = (count - interval).is_multiple_of(2);
            let fu = self.f_base(u);
            let ok = if positive { fu > 0.0 } else { fu < 0.0 };
            if !ok {
                return Err(self.sign_pattern_error(u, fu));
            }
        }
        Ok(())
    }

    /// Sampling grid on one period of x and on `[0, κ^0 + 1]` in u.
    fn sample_grid(&self, grid: SamplingGrid) -> (Vec<f64>, Vec<f64>) {
        let xs = (0..grid.nx).map(|i| i as f64 / grid.nx as f64).collect();
        let top = self.kappa_max + 1.0;
        let us = (0..=grid.nu)
            .map(|j| top * j as f64 / grid.nu as f64)
            .collect();
        (xs, us)
    }

    /// Clause-by-clause check of the standing hypothesis (F1).
    pub fn validate_f1(&self, grid: SamplingGrid) -> F1Report {
        let (xs, us) = self.sample_grid(grid);
        let mut clauses = Vec::new();

        clauses.push(ClauseResult::check("theta>=0", self.theta >= 0.0, None));

        let kappa_witness = xs.iter().copied().find(|&x| self.kappa_at(x) <= self.theta);
        clauses.push(ClauseResult::check(
            "kappa>theta",
            kappa_witness.is_none(),
            kappa_witness.map(|x| Witness {
                x,
                u: None,
                value: self.kappa_at(x),
            }),
        ));

        let zero_witness = xs.iter().copied().find(|&x| self.f(x, 0.0) != 0.0);
        clauses.push(ClauseResult::check(
            "f(x,0)=0",
            zero_witness.is_none(),
            zero_witness.map(|x| Witness {
                x,
                u: Some(0.0),
                value: self.f(x, 0.0),
            }),
        ));

        let mut positive_witness = None;
        'outer: for &x in &xs {
            for &u in us.iter().filter(|&&u| u > self.theta) {
                let fu = self.f(x, u);
                if fu <= 0.0 {
                    positive_witness = Some(Witness {
                        x,
                        u: Some(u),
                        value: fu,
                    });
                    break 'outer;
                }
            }
        }
        clauses.push(ClauseResult::check(
            "f>0 for u>theta",
            positive_witness.is_none(),
            positive_witness,
        ));

        F1Report { clauses }
    }

    /// `K` with `f(x,u)(κ(x) − u) ≤ K u` on the sample grid, padded by 10%.
    pub fn lipschitz_bound(&self, grid: SamplingGrid) -> Result<f64, ModelError> {
        if let Some((0, c)) = self.reaction.base_pieces.leading_power_at_zero() {
            return Err(ModelError::UnboundedRatio(c));
        }
        let (xs, us) = self.sample_grid(grid);
        let mut ratio_max = f64::NEG_INFINITY;
        for &x in &xs {
            for &u in us.iter().skip(1) {
                let r = self.reaction_density(x, u) / u;
                if !r.is_finite() {
                    return Err(ModelError::UnboundedRatio(r));
                }
                ratio_max = ratio_max.max(r);
            }
        }
        Ok((1.1 * ratio_max).max(1e-12))
    }

    /// Pre-sampled evaluator on a grid with `cells_per_unit` nodes per period.
    pub fn grid_reaction(&self, cells_per_unit: usize) -> GridReaction {
        GridReaction::new(self, cells_per_unit)
    }
}

/// Sampling density for advisory checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplingGrid {
    pub nx: usize,
    pub nu: usize,
}

impl Default for SamplingGrid {
    fn default() -> Self {
        Self { nx: 512, nu: 1024 }
    }
}

impl SamplingGrid {
    pub fn refined(self, factor: usize) -> Self {
        Self {
            nx: self.nx * factor,
            nu: self.nu * factor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub x: f64,
    pub u: Option<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClauseResult {
    pub clause: String,
    pub passed: bool,
    pub witness: Option<Witness>,
}

impl ClauseResult {
    fn check(clause: &str, passed: bool, witness: Option<Witness>) -> Self {
        Self {
            clause: clause.to_string(),
            passed,
            witness,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct F1Report {
    pub clauses: Vec<ClauseResult>,
}

impl F1Report {
    pub fn passed(&self) -> bool {
        self.clauses.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ClauseResult> {
        self.clauses.iter().filter(|c| !c.passed)
    }
}

/// `v = m/(m−1)·u^(m−1)`.
pub fn pressure_from_density(u: f64, m: f64) -> Result<f64, ModelError> {
    if !(m.is_finite() && m > 1.0) {
        return Err(ModelError::InvalidExponent(m));
    }
    if !(u.is_finite() && u >= 0.0) {
        return Err(ModelError::Domain {
            what: "density",
            value: u,
        });
    }
    Ok(pressure_from_density_unchecked(u, m))
}

/// `u = ((m−1)v/m)^(1/(m−1))`.
pub fn density_from_pressure(v: f64, m: f64) -> Result<f64, ModelError> {
    if !(m.is_finite() && m > 1.0) {
        return Err(ModelError::InvalidExponent(m));
    }
    if !(v.is_finite() && v >= 0.0) {
        return Err(ModelError::Domain {
            what: "pressure",
            value: v,
        });
    }
    Ok(density_from_pressure_unchecked(v, m))
}

#[inline]
pub(crate) fn pressure_from_density_unchecked(u: f64, m: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else {
        m / (m - 1.0) * u.powf(m - 1.0)
    }
}

#[inline]
pub(crate) fn density_from_pressure_unchecked(v: f64, m: f64) -> f64 {
    if v <= 0.0 {
        0.0
    } else {
        ((m - 1.0) * v / m).powf(1.0 / (m - 1.0))
    }
}

/// `w ↦ w^(1/(m−1))` with fast paths for common exponents.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Root {
    Identity,
    Sqrt,
    Square,
    Pow(f64),
}

impl Root {
    fn for_exponent(m: f64) -> Self {
        if m == 2.0 {
            Root::Identity
        } else if m == 3.0 {
            Root::Sqrt
        } else if m == 1.5 {
            Root::Square
        } else {
            Root::Pow(1.0 / (m - 1.0))
        }
    }

    #[inline]
    fn apply(self, w: f64) -> f64 {
        match self {
            Root::Identity => w,
            Root::Sqrt => w.sqrt(),
            Root::Square => w * w,
            Root::Pow(p) => w.powf(p),
        }
    }
}

/// Reaction terms pre-sampled at the nodes `x_j = j / N` of one period.
#[derive(Debug, Clone)]
pub struct GridReaction {
    m: f64,
    cells: usize,
    kappa: Vec<f64>,
    modulation: Vec<f64>,
    at_zero: Vec<f64>,
    base: PiecewisePoly,
    base_prime: PiecewisePoly,
    root: Root,
}

impl GridReaction {
    fn new(env: &Environment, cells: usize) -> Self {
        assert!(cells > 0, "grid needs at least one node per period");
        let xs: Vec<f64> = (0..cells).map(|j| j as f64 / cells as f64).collect();
        Self {
            m: env.m,
            cells,
            kappa: xs.iter().map(|&x| env.kappa_at(x)).collect(),
            modulation: xs.iter().map(|&x| env.modulation_at(x)).collect(),
            at_zero: xs
                .iter()
                .map(|&x| env.pressure_reaction_at_zero(x))
                .collect(),
            base: env.reaction.base_pieces.clone(),
            base_prime: env.reaction.base_pieces.derivative(),
            root: Root::for_exponent(env.m),
        }
    }

    pub fn cells_per_unit(&self) -> usize {
        self.cells
    }

    #[inline]
    pub fn slot(&self, global_index: i64) -> usize {
        global_index.rem_euclid(self.cells as i64) as usize
    }

    #[inline]
    pub fn kappa(&self, slot: usize) -> f64 {
        self.kappa[slot]
    }

    /// `F(x_j, u) = a_j f_base(u)(κ_j − u)`.
    #[inline]
    pub fn density(&self, slot: usize, u: f64) -> f64 {
        self.modulation[slot] * self.base.eval(u) * (self.kappa[slot] - u)
    }

    /// ∂F/∂u at `(x_j, u)`.
    #[inline]
    pub fn density_du(&self, slot: usize, u: f64) -> f64 {
        let k = self.kappa[slot];
        self.modulation[slot] * (self.base_prime.eval(u) * (k - u) - self.base.eval(u))
    }

    /// `g(x_j, v)`.
    #[inline]
    pub fn pressure(&self, slot: usize, v: f64) -> f64 {
        if v <= 0.0 {
            return self.at_zero[slot];
        }
        let w = (self.m - 1.0) * v / self.m;
        let u = self.root.apply(w);
        if u <= 0.0 {
            return self.at_zero[slot];
        }
        // u^(m−2) = u^(m−1)/u = w/u
        self.m * (w / u) * self.density(slot, u)
    }
}
