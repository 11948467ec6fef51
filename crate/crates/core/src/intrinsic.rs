//! The intrinsic risk measure: the smallest fraction of a position to sell at
//! inception and reinvest in the eligible asset so that the resulting payoff
//! is acceptable.
//!
//! On closed sets that are conic, or convex and contain zero, the acceptable
//! fractions form an up-interval `[R, 1]`, so bisection on `λ` finds `R`.

use serde::{Deserialize, Serialize};

use crate::acceptance::AcceptanceSet;
use crate::error::{Result, RiskError};
use crate::monetary::{check_eligible, MonetaryRisk};
use crate::numeric::bisect_switch;
use crate::scenario::{mix, EligibleAsset, Position};

/// Accuracy guaranteed for the bisected fraction. Bisection actually runs to
/// floating-point resolution in `λ`.
pub const INTRINSIC_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntrinsicMethod {
    Bisection,
    ConicClosedForm,
    Dual,
}

/// `lower` is an unacceptable fraction and `upper` an acceptable one, except
/// when both equal the value (acceptable position or closed-form result).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaBracket {
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntrinsicRisk {
    pub value: f64,
    pub method: IntrinsicMethod,
    pub certificate: LambdaBracket,
}

impl IntrinsicRisk {
    fn exact(value: f64, method: IntrinsicMethod) -> Self {
        Self {
            value,
            method,
            certificate: LambdaBracket {
                lower: value,
                upper: value,
            },
        }
    }

    /// The monetary reading `X_0·R`: the amount moved into the asset.
    pub fn capital(&self, x: &Position) -> f64 {
        x.initial_value() * self.value
    }
}

/// Fails unless the set is closed and either conic or convex with zero.
pub(crate) fn check_well_defined(set: &AcceptanceSet) -> Result<()> {
    let f = set.flags();
    if !f.is_closed {
        return Err(RiskError::Precondition(format!(
            "{} is not closed (is_closed = false)",
            set.label()
        )));
    }
    if f.is_conic {
        return Ok(());
    }
    if !f.is_convex {
        return Err(RiskError::Precondition(format!(
            "{} is neither conic nor convex (is_conic = false, is_convex = false)",
            set.label()
        )));
    }
    if !f.contains_zero {
        return Err(RiskError::Precondition(format!(
            "{} is convex but does not contain zero (contains_zero = false)",
            set.label()
        )));
    }
    Ok(())
}

/// `R_{A,S}(X) = inf{λ ∈ [0,1] : (1-λ)·X_T + λ·(X_0/S_0)·S_T ∈ A}`.
///
/// Returns exactly 1 when no fraction below one is acceptable.
pub fn intrinsic_risk(set: &AcceptanceSet, s: &EligibleAsset, x: &Position) -> Result<IntrinsicRisk> {
    check_well_defined(set)?;
    check_eligible(set, s)?;
    set.space().check(x.payoff())?;

    if set.accepts(x.payoff()) {
        return Ok(IntrinsicRisk::exact(0.0, IntrinsicMethod::Bisection));
    }
    let acceptable_at = |lambda: f64| {
        mix(x, s, lambda)
            .map(|p| set.accepts(p.payoff()))
            .unwrap_or(false)
    };
    if !acceptable_at(1.0) {
        return Err(RiskError::Numerical(
            "the fully reinvested position is not acceptable".into(),
        ));
    }
    let (lower, upper) = bisect_switch(0.0, 1.0, 0.0, acceptable_at);

    #[cfg(debug_assertions)]
    for k in 1..=8 {
        let lambda = upper + (1.0 - upper) * f64::from(k) / 8.0;
        if lambda - upper > 1e-9 {
            debug_assert!(
                acceptable_at(lambda),
                "acceptable fractions are not an up-interval at {lambda}"
            );
        }
    }

    Ok(IntrinsicRisk {
        value: upper,
        method: IntrinsicMethod::Bisection,
        certificate: LambdaBracket { lower, upper },
    })
}

fn ratio_form(x: &Position, rho: &MonetaryRisk) -> f64 {
    if rho.value == f64::INFINITY {
        return 1.0;
    }
    let plus = rho.positive_part();
    if plus == 0.0 {
        return 0.0;
    }
    plus / (x.initial_value() + plus)
}

/// `R = ρ⁺ / (X_0 + ρ⁺)` on closed cones, with `ρ = +∞` mapped to 1.
pub fn intrinsic_conic_closed_form(
    set: &AcceptanceSet,
    x: &Position,
    rho: &MonetaryRisk,
) -> Result<IntrinsicRisk> {
    let f = set.flags();
    if !f.is_conic {
        return Err(RiskError::Precondition(format!(
            "closed form needs a conic set; {} has is_conic = false",
            set.label()
        )));
    }
    if !f.is_closed {
        return Err(RiskError::Precondition(format!(
            "closed form needs a closed set; {} has is_closed = false",
            set.label()
        )));
    }
    Ok(IntrinsicRisk::exact(
        ratio_form(x, rho),
        IntrinsicMethod::ConicClosedForm,
    ))
}

/// Intrinsic risk of the intermediate position after selling a fraction
/// `alpha ≤ r_x`: `(r_x - α)/(1 - α)`.
pub fn intrinsic_of_intermediate(r_x: f64, alpha: f64) -> Result<f64> {
    if !(r_x > 0.0 && r_x <= 1.0) {
        return Err(RiskError::Domain {
            name: "r_x",
            value: r_x,
            domain: "(0, 1]",
        });
    }
    if !(alpha >= 0.0 && alpha <= r_x) {
        return Err(RiskError::Domain {
            name: "alpha",
            value: alpha,
            domain: "[0, r_x]",
        });
    }
    if alpha == r_x {
        return Ok(0.0);
    }
    Ok((r_x - alpha) / (1.0 - alpha))
}

/// Upper bound `ρ⁺ / (X_0 + ρ⁺)` on the intrinsic risk for closed convex sets
/// containing zero; exact on cones.
pub fn convex_upper_bound(set: &AcceptanceSet, x: &Position, rho: &MonetaryRisk) -> Result<f64> {
    let f = set.flags();
    if !(f.is_convex && f.is_closed && f.contains_zero) {
        return Err(RiskError::Precondition(format!(
            "upper bound needs a closed convex set containing zero; {} has is_convex = {}, is_closed = {}, contains_zero = {}",
            set.label(),
            f.is_convex,
            f.is_closed,
            f.contains_zero
        )));
    }
    Ok(ratio_form(x, rho))
}

/// The intrinsically altered position `mix(x, s, R)`.
pub fn altered_position(x: &Position, s: &EligibleAsset, r: &IntrinsicRisk) -> Result<Position> {
    mix(x, s, r.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acceptance::{DualMeasure, MEMBERSHIP_TOL};
    use crate::monetary::monetary_risk;
    use crate::scenario::{Payoff, ScenarioSpace};

    /// Exact VaR intrinsic risk from the sign-change points of the affine
    /// scenario paths `λ ↦ (1-λ)x_i + λ·u·s_i`.
    fn var_breakpoint_oracle(probs: &[f64], x: &[f64], u_s: &[f64], alpha: f64) -> f64 {
        // scenario i is negative for λ < t_i
        let t: Vec<f64> = x
            .iter()
            .zip(u_s)
            .map(|(&xi, &si)| if xi < 0.0 { xi / (xi - si) } else { 0.0 })
            .collect();
        let mass_below = |lambda: f64| -> f64 {
            probs
                .iter()
                .zip(&t)
                .filter(|(_, &ti)| lambda < ti)
                .map(|(p, _)| p)
                .sum()
        };
        let mut candidates: Vec<f64> = t.iter().copied().chain([0.0, 1.0]).collect();
        candidates.sort_by(f64::total_cmp);
        candidates
            .into_iter()
            .find(|&l| mass_below(l) <= alpha + 1e-12)
            .unwrap()
    }

    fn demo() -> (ScenarioSpace, EligibleAsset, Position) {
        let space = ScenarioSpace::uniform(4).unwrap();
        let s = EligibleAsset::risk_free(4, 1.0, 1.0).unwrap();
        let x = Position::new(10.0, Payoff::new(vec![-10.0, -2.0, 1.0, 5.0]).unwrap()).unwrap();
        (space, s, x)
    }

    #[test]
    fn var_demo_is_one_sixth() {
        let (space, s, x) = demo();
        let set = AcceptanceSet::value_at_risk(&space, 0.25).unwrap();
        let r = intrinsic_risk(&set, &s, &x).unwrap();
        let oracle = var_breakpoint_oracle(space.probabilities(), x.payoff().values(), &[10.0; 4], 0.25);
        assert!((oracle - 1.0 / 6.0).abs() < 1e-15);
        assert!((r.value - oracle).abs() < 1e-12, "{}", r.value);
        assert!(r.certificate.lower < r.value);
        assert!(r.certificate.upper - r.certificate.lower < 1e-12);

        let rho = monetary_risk(&set, &s, x.payoff()).unwrap();
        let closed = intrinsic_conic_closed_form(&set, &x, &rho).unwrap();
        assert!((closed.value - 2.0 / 12.0).abs() < 1e-12);
        assert_eq!(closed.method, IntrinsicMethod::ConicClosedForm);

        let altered = altered_position(&x, &s, &r).unwrap();
        let expected = [-40.0 / 6.0, 0.0, 15.0 / 6.0, 35.0 / 6.0];
        for (a, e) in altered.payoff().values().iter().zip(expected) {
            assert!((a - e).abs() < 1e-9);
        }
        assert!(set.is_acceptable(altered.payoff()).unwrap());
        let negatives = altered.payoff().values().iter().filter(|v| **v < 0.0).count();
        assert_eq!(negatives, 1);
    }

    #[test]
    fn acceptable_position_needs_nothing() {
        let (space, s, _) = demo();
        let set = AcceptanceSet::value_at_risk(&space, 0.25).unwrap();
        let x = Position::new(3.0, Payoff::new(vec![-1.0, 2.0, 3.0, 4.0]).unwrap()).unwrap();
        let r = intrinsic_risk(&set, &s, &x).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(altered_position(&x, &s, &r).unwrap(), x);
        let rho = monetary_risk(&set, &s, x.payoff()).unwrap();
        assert_eq!(intrinsic_conic_closed_form(&set, &x, &rho).unwrap().value, 0.0);
    }

    #[test]
    fn disjoint_indicators_average() {
        let space = ScenarioSpace::uniform(8).unwrap();
        let set = AcceptanceSet::value_at_risk(&space, 0.25).unwrap();
        let s = EligibleAsset::risk_free(8, 2.0, 1.0).unwrap();
        for (x0, y0) in [(1.0, 1.0), (2.0, 5.0), (0.5, 3.0)] {
            let x = Position::new(x0, Payoff::indicator(8, &[0, 1], -1.0).unwrap()).unwrap();
            let y = Position::new(y0, Payoff::indicator(8, &[2, 3], -1.0).unwrap()).unwrap();
            assert_eq!(intrinsic_risk(&set, &s, &x).unwrap().value, 0.0);
            assert_eq!(intrinsic_risk(&set, &s, &y).unwrap().value, 0.0);
            let mid = x.convex_combination(0.5, &y).unwrap();
            let r = intrinsic_risk(&set, &s, &mid).unwrap().value;
            assert!((r - 1.0 / (x0 + y0 + 1.0)).abs() < 1e-12, "{r}");
        }
    }

    #[test]
    fn intermediate_examples() {
        assert_eq!(intrinsic_of_intermediate(0.75, 0.5).unwrap(), 0.5);
        assert!((intrinsic_of_intermediate(0.75, 0.25).unwrap() - 2.0 / 3.0).abs() < 1e-16);
        assert_eq!(intrinsic_of_intermediate(0.4, 0.0).unwrap(), 0.4);
        assert_eq!(intrinsic_of_intermediate(0.4, 0.4).unwrap(), 0.0);
        assert!(intrinsic_of_intermediate(0.4, 0.5).is_err());
        assert!(intrinsic_of_intermediate(0.0, 0.0).is_err());
    }

    #[test]
    fn boundary_asset_gives_one() {
        let space = ScenarioSpace::uniform(4).unwrap();
        let set = AcceptanceSet::expected_shortfall(&space, 0.5).unwrap();
        let s = EligibleAsset::new(1.0, Payoff::new(vec![0.0, 0.0, 1.0, 1.0]).unwrap()).unwrap();
        let c = Position::new(3.0, Payoff::constant(4, -3.0).unwrap()).unwrap();
        let r = intrinsic_risk(&set, &s, &c).unwrap();
        assert_eq!(r.value, 1.0);
        let rho = monetary_risk(&set, &s, c.payoff()).unwrap();
        assert!(!rho.finite);
        assert_eq!(intrinsic_conic_closed_form(&set, &c, &rho).unwrap().value, 1.0);
    }

    #[test]
    fn closed_form_rejects_non_conic_sets() {
        let space = ScenarioSpace::uniform(3).unwrap();
        let q = DualMeasure::new(vec![1.0 / 3.0; 3]).unwrap();
        let set = AcceptanceSet::generator(&space, vec![q], vec![-1.0]).unwrap();
        let s = EligibleAsset::risk_free(3, 1.0, 1.0).unwrap();
        let x = Position::new(1.0, Payoff::new(vec![-6.0, 0.0, 0.0]).unwrap()).unwrap();
        let rho = monetary_risk(&set, &s, x.payoff()).unwrap();
        let err = intrinsic_conic_closed_form(&set, &x, &rho).unwrap_err();
        assert!(err.is_precondition());

        // E[X] = -2 and c = -1, so ρ = 1 and the bound is 1/2; the segment
        // reaches E = -1 at λ = 1/3.
        let bound = convex_upper_bound(&set, &x, &rho).unwrap();
        assert!((bound - 0.5).abs() < 1e-9);
        let r = intrinsic_risk(&set, &s, &x).unwrap().value;
        assert!((r - 1.0 / 3.0).abs() < 1e-9 + MEMBERSHIP_TOL * 10.0, "{r}");
        assert!(r < bound);
    }

    #[test]
    fn rejects_convex_sets_without_zero() {
        let space = ScenarioSpace::uniform(3).unwrap();
        let q = DualMeasure::new(vec![1.0 / 3.0; 3]).unwrap();
        let set = AcceptanceSet::generator(&space, vec![q], vec![0.5]).unwrap();
        let s = EligibleAsset::risk_free(3, 1.0, 1.0).unwrap();
        let x = Position::new(1.0, Payoff::constant(3, -1.0).unwrap()).unwrap();
        let err = intrinsic_risk(&set, &s, &x).unwrap_err();
        assert!(err.to_string().contains("contains_zero"), "{err}");
    }

    #[test]
    fn matches_breakpoint_oracle_on_random_var_instances() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..300 {
            let n = rng.random_range(4..=10);
            let space = ScenarioSpace::uniform(n).unwrap();
            let alpha = [0.1, 0.2, 0.3, 0.45][rng.random_range(0..4)];
            let set = AcceptanceSet::value_at_risk(&space, alpha).unwrap();
            let x_t: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
            let s_t: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
            let x0 = rng.random_range(0.5..5.0);
            let s0 = rng.random_range(0.5..2.0);
            let s = EligibleAsset::new(s0, Payoff::new(s_t.clone()).unwrap()).unwrap();
            let x = Position::new(x0, Payoff::new(x_t.clone()).unwrap()).unwrap();
            let u_s: Vec<f64> = s_t.iter().map(|v| x0 / s0 * v).collect();
            let oracle = var_breakpoint_oracle(space.probabilities(), &x_t, &u_s, alpha);
            let r = intrinsic_risk(&set, &s, &x).unwrap().value;
            assert!((r - oracle).abs() < 1e-10, "{r} vs {oracle}");
        }
    }
}
