//! Acceptance sets: monotone membership predicates over payoffs, tagged with
//! the structural flags the measures dispatch on.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Result, RiskError};
use crate::monetary::{expected_shortfall_unchecked, validate_level, validate_tail_level};
use crate::numeric::{bisect_switch, compensated_sum};
use crate::scenario::{Payoff, ScenarioSpace, PROB_TOL};

/// Slack granted to linear generator constraints, relative to the payoff's
/// sup-norm (floored at one).
pub const MEMBERSHIP_TOL: f64 = 1e-12;

/// Magnitude of the constants used to probe non-triviality.
pub const NONTRIVIALITY_PROBE: f64 = 1e9;

/// Smallest interior certificate tried, relative to the payoff's magnitude.
pub const INTERIOR_FLOOR: f64 = 1e-10;

/// A probability vector on the scenarios, used as a linear test functional.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualMeasure {
    weights: Vec<f64>,
}

impl DualMeasure {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(RiskError::Invalid("a measure needs at least one weight".into()));
        }
        if let Some((i, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !w.is_finite() || **w < 0.0)
        {
            return Err(RiskError::Invalid(format!(
                "measure weight {w} in scenario {i} must be finite and nonnegative"
            )));
        }
        let total = compensated_sum(weights.iter().copied());
        if (total - 1.0).abs() > PROB_TOL {
            return Err(RiskError::Invalid(format!(
                "measure weights sum to {total:.17}, not 1"
            )));
        }
        Ok(Self {
            weights: weights.into_iter().map(|w| w / total).collect(),
        })
    }

    /// Builds a measure and checks it is absolutely continuous w.r.t. `space`.
    pub fn on_space(space: &ScenarioSpace, weights: Vec<f64>) -> Result<Self> {
        let q = Self::new(weights)?;
        q.check_absolutely_continuous(space)?;
        Ok(q)
    }

    pub fn point_mass(n: usize, scenario: usize) -> Result<Self> {
        if scenario >= n {
            return Err(RiskError::Invalid(format!(
                "scenario {scenario} out of range for {n} scenarios"
            )));
        }
        let mut w = vec![0.0; n];
        w[scenario] = 1.0;
        Ok(Self { weights: w })
    }

    pub(crate) fn from_normalized(weights: Vec<f64>) -> Self {
        Self { weights }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn check_absolutely_continuous(&self, space: &ScenarioSpace) -> Result<()> {
        RiskError::check_len(space.len(), self.len())?;
        match self
            .weights
            .iter()
            .zip(space.probabilities())
            .position(|(q, p)| *q > 0.0 && *p == 0.0)
        {
            Some(i) => Err(RiskError::Invalid(format!(
                "measure charges scenario {i}, which has zero base probability"
            ))),
            None => Ok(()),
        }
    }

    /// `E_Q[values]` without dimension checks.
    pub(crate) fn dot(&self, values: &[f64]) -> f64 {
        compensated_sum(self.weights.iter().zip(values).map(|(q, v)| q * v))
    }
}

/// A traditional risk functional `ρ: payoffs → ℝ ∪ {±∞}` that can generate an
/// acceptance set `{ρ ≤ 0}`.
pub trait RiskFunctional: fmt::Debug + Send + Sync {
    fn name(&self) -> String;

    /// Evaluates `ρ(payoff)`. Callers guarantee matching dimensions.
    fn evaluate(&self, space: &ScenarioSpace, payoff: &Payoff) -> f64;

    fn is_positively_homogeneous(&self) -> bool {
        false
    }

    fn is_convex(&self) -> bool {
        false
    }

    /// Whether `{ρ ≤ 0}` is closed.
    fn is_lower_semicontinuous(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StructureFlags {
    pub is_monotone: bool,
    pub is_conic: bool,
    pub is_convex: bool,
    pub is_closed: bool,
    pub contains_zero: bool,
}

#[derive(Debug, Clone)]
pub enum AcceptanceKind {
    /// `{P[Y < 0] ≤ α}`.
    ValueAtRisk { alpha: f64 },
    /// `{ES_α(Y) ≤ 0}` with the discrete tail average.
    ExpectedShortfall { alpha: f64 },
    /// `{E_{Q_j}[Y] ≥ c_j for all j}`.
    Generator {
        generators: Vec<DualMeasure>,
        bounds: Vec<f64>,
    },
    FromRisk(Arc<dyn RiskFunctional>),
}

/// Result of an interiority test: `epsilon` is a certificate with
/// `payoff - ε·1` acceptable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interiority {
    pub interior: bool,
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct AcceptanceSet {
    space: ScenarioSpace,
    kind: AcceptanceKind,
    flags: StructureFlags,
}

impl AcceptanceSet {
    pub fn value_at_risk(space: &ScenarioSpace, alpha: f64) -> Result<Self> {
        validate_level(alpha)?;
        Self::build(
            space,
            AcceptanceKind::ValueAtRisk { alpha },
            StructureFlags {
                is_monotone: true,
                is_conic: true,
                is_convex: false,
                is_closed: true,
                contains_zero: true,
            },
        )
    }

    pub fn expected_shortfall(space: &ScenarioSpace, alpha: f64) -> Result<Self> {
        validate_tail_level(alpha)?;
        Self::build(
            space,
            AcceptanceKind::ExpectedShortfall { alpha },
            StructureFlags {
                is_monotone: true,
                is_conic: true,
                is_convex: true,
                is_closed: true,
                contains_zero: true,
            },
        )
    }

    /// Polyhedral set cut out by `E_{Q_j}[Y] ≥ c_j`.
    pub fn generator(
        space: &ScenarioSpace,
        generators: Vec<DualMeasure>,
        bounds: Vec<f64>,
    ) -> Result<Self> {
        if generators.is_empty() {
            return Err(RiskError::Invalid("generator set needs at least one measure".into()));
        }
        if generators.len() != bounds.len() {
            return Err(RiskError::Invalid(format!(
                "{} generators but {} bounds",
                generators.len(),
                bounds.len()
            )));
        }
        if let Some(c) = bounds.iter().find(|c| !c.is_finite()) {
            return Err(RiskError::Invalid(format!("bound {c} is not finite")));
        }
        for (j, q) in generators.iter().enumerate() {
            q.check_absolutely_continuous(space).map_err(|e| {
                RiskError::Invalid(format!("generator {j}: {e}"))
            })?;
        }
        let conic = bounds.iter().all(|c| *c == 0.0);
        let contains_zero = bounds.iter().all(|c| *c <= 0.0);
        Self::build(
            space,
            AcceptanceKind::Generator { generators, bounds },
            StructureFlags {
                is_monotone: true,
                is_conic: conic,
                is_convex: true,
                is_closed: true,
                contains_zero,
            },
        )
    }

    fn build(space: &ScenarioSpace, kind: AcceptanceKind, flags: StructureFlags) -> Result<Self> {
        let set = Self {
            space: space.clone(),
            kind,
            flags,
        };
        set.check_nontrivial()?;
        Ok(set)
    }

    fn check_nontrivial(&self) -> Result<()> {
        let probe = match &self.kind {
            AcceptanceKind::Generator { bounds, .. } => {
                NONTRIVIALITY_PROBE * bounds.iter().fold(1.0_f64, |m, c| m.max(c.abs()))
            }
            _ => NONTRIVIALITY_PROBE,
        };
        let n = self.space.len();
        if !self.accepts(&Payoff::constant(n, probe)?) {
            return Err(RiskError::Invalid(format!(
                "{} rejects the constant {probe:e}; the set is empty",
                self.label()
            )));
        }
        if self.accepts(&Payoff::constant(n, -probe)?) {
            return Err(RiskError::Invalid(format!(
                "{} accepts the constant {:e}; the set is everything",
                self.label(),
                -probe
            )));
        }
        Ok(())
    }

    pub fn space(&self) -> &ScenarioSpace {
        &self.space
    }

    pub fn kind(&self) -> &AcceptanceKind {
        &self.kind
    }

    pub fn flags(&self) -> StructureFlags {
        self.flags
    }

    /// Probability level of VaR and ES sets.
    pub fn alpha(&self) -> Option<f64> {
        match self.kind {
            AcceptanceKind::ValueAtRisk { alpha } | AcceptanceKind::ExpectedShortfall { alpha } => {
                Some(alpha)
            }
            _ => None,
        }
    }

    pub fn label(&self) -> String {
        match &self.kind {
            AcceptanceKind::ValueAtRisk { alpha } => format!("VaR({alpha})"),
            AcceptanceKind::ExpectedShortfall { alpha } => format!("ES({alpha})"),
            AcceptanceKind::Generator { generators, .. } => {
                format!("Generator({} measures)", generators.len())
            }
            AcceptanceKind::FromRisk(rho) => format!("FromRisk({})", rho.name()),
        }
    }

    pub fn is_acceptable(&self, payoff: &Payoff) -> Result<bool> {
        self.space.check(payoff)?;
        Ok(self.accepts(payoff))
    }

    /// Membership without the dimension check; callers have validated lengths.
    pub(crate) fn accepts(&self, payoff: &Payoff) -> bool {
        let probs = self.space.probabilities();
        match &self.kind {
            AcceptanceKind::ValueAtRisk { alpha } => {
                let below = compensated_sum(
                    probs
                        .iter()
                        .zip(payoff.values())
                        .filter(|(_, v)| **v < 0.0)
                        .map(|(p, _)| *p),
                );
                below <= alpha + PROB_TOL
            }
            AcceptanceKind::ExpectedShortfall { alpha } => {
                expected_shortfall_unchecked(probs, payoff.values(), *alpha) <= 0.0
            }
            AcceptanceKind::Generator { generators, bounds } => {
                let slack = MEMBERSHIP_TOL * payoff.sup_norm().max(1.0);
                generators
                    .iter()
                    .zip(bounds)
                    .all(|(q, c)| q.dot(payoff.values()) >= c - slack)
            }
            AcceptanceKind::FromRisk(rho) => rho.evaluate(&self.space, payoff) <= 0.0,
        }
    }

    /// Decides whether `payoff - ε·1` is acceptable for some `ε > 0`, and
    /// reports the largest such `ε` found up to the payoff's magnitude.
    pub fn is_interior(&self, payoff: &Payoff) -> Result<Interiority> {
        self.space.check(payoff)?;
        debug_assert!(self.flags.is_closed, "interior test on a non-closed set");
        let scale = payoff.sup_norm().max(1.0);
        let floor = INTERIOR_FLOOR * scale;
        let acceptable_at = |eps: f64| self.accepts(&payoff.shifted(-eps));
        if !acceptable_at(floor) {
            return Ok(Interiority {
                interior: false,
                epsilon: None,
            });
        }
        if acceptable_at(scale) {
            return Ok(Interiority {
                interior: true,
                epsilon: Some(scale),
            });
        }
        let (eps, _) = bisect_switch(floor, scale, floor, |eps| !acceptable_at(eps));
        Ok(Interiority {
            interior: true,
            epsilon: Some(eps),
        })
    }

    /// Two acceptable payoffs whose midpoint is unacceptable, for VaR sets on
    /// spaces that admit them: `-1_A` and `-1_B` with `A`, `B` disjoint,
    /// each of mass at most `α` and jointly above `α`.
    pub fn convexity_counterexample(&self) -> Option<(Payoff, Payoff)> {
        let AcceptanceKind::ValueAtRisk { alpha } = self.kind else {
            return None;
        };
        let probs = self.space.probabilities();
        let mut order: Vec<usize> = (0..probs.len()).filter(|&i| probs[i] > 0.0).collect();
        order.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]));
        let mut taken = vec![false; probs.len()];
        let fill = |taken: &mut Vec<bool>| {
            let mut mass = 0.0;
            let mut members = Vec::new();
            for &i in &order {
                if !taken[i] && mass + probs[i] <= alpha + PROB_TOL {
                    mass += probs[i];
                    taken[i] = true;
                    members.push(i);
                }
            }
            (members, mass)
        };
        let (a, mass_a) = fill(&mut taken);
        let (b, mass_b) = fill(&mut taken);
        if a.is_empty() || b.is_empty() || mass_a + mass_b <= alpha + PROB_TOL {
            return None;
        }
        let n = probs.len();
        Some((
            Payoff::indicator(n, &a, -1.0).ok()?,
            Payoff::indicator(n, &b, -1.0).ok()?,
        ))
    }
}

pub fn is_acceptable(set: &AcceptanceSet, payoff: &Payoff) -> Result<bool> {
    set.is_acceptable(payoff)
}

pub fn is_interior(set: &AcceptanceSet, payoff: &Payoff) -> Result<Interiority> {
    set.is_interior(payoff)
}

/// The acceptance set `{ρ ≤ 0}` of a risk functional. Flags follow the
/// functional's declared homogeneity and convexity.
pub fn acceptance_from_risk(
    space: &ScenarioSpace,
    rho: Arc<dyn RiskFunctional>,
) -> Result<AcceptanceSet> {
    let zero = Payoff::constant(space.len(), 0.0)?;
    let contains_zero = rho.evaluate(space, &zero) <= 0.0;
    let flags = StructureFlags {
        is_monotone: true,
        is_conic: rho.is_positively_homogeneous(),
        is_convex: rho.is_convex(),
        is_closed: rho.is_lower_semicontinuous(),
        contains_zero,
    };
    AcceptanceSet::build(space, AcceptanceKind::FromRisk(rho), flags)
}
