//! Traditional (monetary) risk measures: the smallest amount invested in an
//! eligible asset that makes a payoff acceptable.
//!
//! The general measure is computed by geometric bracketing followed by
//! bisection on the amount `m`. Membership of `X_T + (m/S_0)·S_T` is monotone
//! in `m` because the asset payoff is nonnegative and acceptance sets are
//! monotone, so bisection converges to the infimum. Discrete VaR and ES have
//! exact sort-and-accumulate forms.

use serde::{Deserialize, Serialize};

use crate::acceptance::{AcceptanceSet, RiskFunctional};
use crate::error::{Result, RiskError};
use crate::numeric::{bisect_switch, compensated_sum};
use crate::scenario::{expectation, EligibleAsset, Payoff, Position, ScenarioSpace, PROB_TOL};

/// Accuracy guaranteed for the bisected amount, relative to the instance scale.
/// Bisection actually runs to floating-point resolution.
pub const MONETARY_TOL: f64 = 1e-10;

/// Number of doublings tried when looking for a bracket.
pub const MAX_DOUBLINGS: u32 = 60;

pub(crate) fn validate_level(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 0.0 && alpha < 0.5 {
        Ok(())
    } else {
        Err(RiskError::Domain {
            name: "alpha",
            value: alpha,
            domain: "(0, 1/2)",
        })
    }
}

/// Expected shortfall stays coherent for every tail mass in `(0, 1)`.
pub(crate) fn validate_tail_level(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(RiskError::Domain {
            name: "alpha",
            value: alpha,
            domain: "(0, 1)",
        })
    }
}

fn ascending(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    idx
}

pub(crate) fn value_at_risk_unchecked(probs: &[f64], values: &[f64], alpha: f64) -> f64 {
    let mut mass = 0.0;
    let mut carry = 0.0;
    for i in ascending(values) {
        // compensated running mass
        let y = probs[i] - carry;
        let t = mass + y;
        carry = (t - mass) - y;
        mass = t;
        if mass > alpha + PROB_TOL {
            return -values[i];
        }
    }
    // unreachable for alpha < 1/2 since total mass is one
    -values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

pub(crate) fn expected_shortfall_unchecked(probs: &[f64], values: &[f64], alpha: f64) -> f64 {
    let mut remaining = alpha;
    let mut terms = Vec::with_capacity(values.len());
    for i in ascending(values) {
        if remaining <= 0.0 {
            break;
        }
        let w = probs[i].min(remaining);
        terms.push(w * values[i]);
        remaining -= w;
    }
    -compensated_sum(terms) / alpha
}

/// `VaR_α(X) = inf{m : P[X + m < 0] ≤ α}`, the negative upper `α`-quantile.
///
/// Scenarios are sorted ascending and mass is accumulated until it exceeds
/// `α`; the value reached there is the upper quantile. Ties at the quantile
/// therefore resolve toward the larger value.
pub fn value_at_risk(space: &ScenarioSpace, x: &Payoff, alpha: f64) -> Result<f64> {
    validate_level(alpha)?;
    space.check(x)?;
    Ok(value_at_risk_unchecked(space.probabilities(), x.values(), alpha))
}

/// Discrete expected shortfall: `-(1/α)` times the probability-weighted sum
/// over the lower tail of mass exactly `α`, splitting the boundary atom.
pub fn expected_shortfall(space: &ScenarioSpace, x: &Payoff, alpha: f64) -> Result<f64> {
    validate_tail_level(alpha)?;
    space.check(x)?;
    Ok(expected_shortfall_unchecked(space.probabilities(), x.values(), alpha))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueAtRiskRisk {
    alpha: f64,
}

impl ValueAtRiskRisk {
    pub fn new(alpha: f64) -> Result<Self> {
        validate_level(alpha)?;
        Ok(Self { alpha })
    }
}

impl RiskFunctional for ValueAtRiskRisk {
    fn name(&self) -> String {
        format!("VaR_{}", self.alpha)
    }

    fn evaluate(&self, space: &ScenarioSpace, payoff: &Payoff) -> f64 {
        value_at_risk_unchecked(space.probabilities(), payoff.values(), self.alpha)
    }

    fn is_positively_homogeneous(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectedShortfallRisk {
    alpha: f64,
}

impl ExpectedShortfallRisk {
    pub fn new(alpha: f64) -> Result<Self> {
        validate_tail_level(alpha)?;
        Ok(Self { alpha })
    }
}

impl RiskFunctional for ExpectedShortfallRisk {
    fn name(&self) -> String {
        format!("ES_{}", self.alpha)
    }

    fn evaluate(&self, space: &ScenarioSpace, payoff: &Payoff) -> f64 {
        expected_shortfall_unchecked(space.probabilities(), payoff.values(), self.alpha)
    }

    fn is_positively_homogeneous(&self) -> bool {
        true
    }

    fn is_convex(&self) -> bool {
        true
    }
}

/// `ρ(X) = -E[X]`; its acceptance set is the half-space `E[X] ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NegativeExpectation;

impl RiskFunctional for NegativeExpectation {
    fn name(&self) -> String {
        "-E".into()
    }

    fn evaluate(&self, space: &ScenarioSpace, payoff: &Payoff) -> f64 {
        -expectation(space, payoff, None).unwrap_or(f64::NAN)
    }

    fn is_positively_homogeneous(&self) -> bool {
        true
    }

    fn is_convex(&self) -> bool {
        true
    }
}

/// `ρ ≡ c`. Only useful as a degenerate input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantRisk(pub f64);

impl RiskFunctional for ConstantRisk {
    fn name(&self) -> String {
        format!("const({})", self.0)
    }

    fn evaluate(&self, _space: &ScenarioSpace, _payoff: &Payoff) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MonetaryCertificate {
    /// `lo` is unacceptable, `hi` acceptable; the value is `hi`.
    Bracket { lo: f64, hi: f64 },
    /// No acceptable amount up to `largest_probe`, and the eligible payoff is
    /// not interior to the set.
    NoAcceptableAmount { largest_probe: f64 },
    /// Every amount down to `smallest_probe` is acceptable.
    AcceptableEverywhere { smallest_probe: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonetaryRisk {
    #[serde(with = "crate::numeric::extended_real")]
    pub value: f64,
    pub finite: bool,
    pub certificate: MonetaryCertificate,
}

impl MonetaryRisk {
    /// `max(ρ, 0)`, possibly `+∞`.
    pub fn positive_part(&self) -> f64 {
        self.value.max(0.0)
    }

    pub fn is_plus_infinity(&self) -> bool {
        self.value == f64::INFINITY
    }
}

/// Checks that `s` is a valid eligible asset for `set`.
pub(crate) fn check_eligible(set: &AcceptanceSet, s: &EligibleAsset) -> Result<()> {
    set.space().check(s.payoff())?;
    if !s.payoff().is_nonnegative() {
        return Err(RiskError::Precondition(
            "eligible asset payoff must be nonnegative".into(),
        ));
    }
    if !set.is_acceptable(s.payoff())? {
        return Err(RiskError::Precondition(format!(
            "eligible asset payoff is not acceptable under {}",
            set.label()
        )));
    }
    Ok(())
}

/// `ρ_{A,S}(X_T) = inf{m : X_T + (m/S_0)·S_T ∈ A}`.
pub fn monetary_risk(set: &AcceptanceSet, s: &EligibleAsset, x_t: &Payoff) -> Result<MonetaryRisk> {
    check_eligible(set, s)?;
    set.space().check(x_t)?;
    let s0 = s.initial_price();
    let s_max = s.payoff().max();
    let acceptable_at = |m: f64| {
        x_t.plus_scaled(m / s0, s.payoff())
            .map(|y| set.accepts(&y))
            .unwrap_or(false)
    };

    let step = if s_max > 0.0 {
        (x_t.sup_norm() * s0 / s_max).max(1.0)
    } else {
        1.0
    };

    let (lo, hi) = if acceptable_at(0.0) {
        let mut probe = -step;
        let mut found = None;
        for _ in 0..=MAX_DOUBLINGS {
            if !acceptable_at(probe) {
                found = Some(probe);
                break;
            }
            probe *= 2.0;
        }
        match found {
            Some(lo) => (lo, if lo == -step { 0.0 } else { lo / 2.0 }),
            None => {
                return Ok(MonetaryRisk {
                    value: f64::NEG_INFINITY,
                    finite: false,
                    certificate: MonetaryCertificate::AcceptableEverywhere {
                        smallest_probe: probe / 2.0,
                    },
                })
            }
        }
    } else {
        let mut probe = step;
        let mut found = None;
        for _ in 0..=MAX_DOUBLINGS {
            if acceptable_at(probe) {
                found = Some(probe);
                break;
            }
            probe *= 2.0;
        }
        match found {
            Some(hi) => (if hi == step { 0.0 } else { hi / 2.0 }, hi),
            None => {
                let largest_probe = probe / 2.0;
                if set.is_interior(s.payoff())?.interior {
                    return Err(RiskError::Numerical(format!(
                        "no acceptable amount up to {largest_probe:e} although the eligible payoff is interior"
                    )));
                }
                return Ok(MonetaryRisk {
                    value: f64::INFINITY,
                    finite: false,
                    certificate: MonetaryCertificate::NoAcceptableAmount { largest_probe },
                });
            }
        }
    };

    debug_assert!(!acceptable_at(lo) && acceptable_at(hi));
    let (lo, hi) = bisect_switch(lo, hi, 0.0, acceptable_at);
    Ok(MonetaryRisk {
        value: hi,
        finite: true,
        certificate: MonetaryCertificate::Bracket { lo, hi },
    })
}

/// `ρ = X_0·R / (1 - R)` on an unacceptable position; `R = 1` maps to `+∞`.
pub fn monetary_from_intrinsic(x: &Position, r: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&r) {
        return Err(RiskError::Domain {
            name: "intrinsic risk",
            value: r,
            domain: "[0, 1]",
        });
    }
    if r == 1.0 {
        return Ok(f64::INFINITY);
    }
    Ok(x.initial_value() * r / (1.0 - r))
}

/// The traditionally altered payoff `X_T + (m/S_0)·S_T`.
pub fn shifted_by_asset(s: &EligibleAsset, x_t: &Payoff, amount: f64) -> Result<Payoff> {
    x_t.plus_scaled(amount / s.initial_price(), s.payoff())
}
