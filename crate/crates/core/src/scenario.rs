//! Finite probability spaces and the payoff arithmetic the measures consume.
//!
//! Every random variable is a vector of terminal values indexed by scenario.
//! Probabilities are validated once, renormalised, and never touched again, so
//! all functionals below are exact up to floating-point rounding.

use serde::{Deserialize, Serialize};

use crate::acceptance::DualMeasure;
use crate::error::{Result, RiskError};
use crate::numeric::compensated_sum;

/// Tolerance on the total mass of a probability vector, and on probability
/// comparisons against a level such as `alpha`.
pub const PROB_TOL: f64 = 1e-12;

/// Largest space for which [`ScenarioSpace::is_grid_aligned`] enumerates events.
pub const GRID_ENUMERATION_MAX: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioSpace {
    probabilities: Vec<f64>,
}

impl ScenarioSpace {
    pub fn new(probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.is_empty() {
            return Err(RiskError::Invalid(
                "a scenario space needs at least one scenario".into(),
            ));
        }
        if let Some((i, p)) = probabilities
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < 0.0)
        {
            return Err(RiskError::Invalid(format!(
                "probability of scenario {i} is {p}; weights must be finite and nonnegative"
            )));
        }
        let total = compensated_sum(probabilities.iter().copied());
        if (total - 1.0).abs() > PROB_TOL {
            return Err(RiskError::Invalid(format!(
                "probabilities sum to {total:.17}, not 1 within {PROB_TOL:e}"
            )));
        }
        let probabilities = probabilities.into_iter().map(|p| p / total).collect();
        Ok(Self { probabilities })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(RiskError::Invalid(
                "a scenario space needs at least one scenario".into(),
            ));
        }
        Ok(Self {
            probabilities: vec![1.0 / n as f64; n],
        })
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// Scenarios carrying zero probability. They are kept so payoff vectors
    /// stay aligned with input files, but no functional ever sees them.
    pub fn zero_weight_scenarios(&self) -> Vec<usize> {
        self.probabilities
            .iter()
            .enumerate()
            .filter(|(_, p)| **p == 0.0)
            .map(|(i, _)| i)
            .collect()
    }

    /// Whether some event of this space has probability exactly `alpha`
    /// (within [`PROB_TOL`]). Returns `None` when the space is too large to
    /// enumerate its events.
    ///
    /// On finite spaces a quantile level that is not grid-aligned cannot be hit
    /// exactly by any loss event, so level-`alpha` constructions such as two
    /// disjoint events of mass `alpha` only exist for grid-aligned levels.
    pub fn is_grid_aligned(&self, alpha: f64) -> Option<bool> {
        let n = self.len();
        if n > GRID_ENUMERATION_MAX {
            return None;
        }
        let aligned = (0u32..(1u32 << n)).any(|mask| {
            let mass = compensated_sum(
                (0..n)
                    .filter(|i| mask & (1 << i) != 0)
                    .map(|i| self.probabilities[i]),
            );
            (mass - alpha).abs() <= PROB_TOL
        });
        Some(aligned)
    }

    pub(crate) fn check(&self, payoff: &Payoff) -> Result<()> {
        RiskError::check_len(self.len(), payoff.len())
    }
}

/// A random variable on a [`ScenarioSpace`]: one terminal value per scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Payoff(Vec<f64>);

impl TryFrom<Vec<f64>> for Payoff {
    type Error = RiskError;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Payoff::new(values)
    }
}

impl From<Payoff> for Vec<f64> {
    fn from(p: Payoff) -> Self {
        p.0
    }
}

impl Payoff {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(RiskError::Invalid("a payoff needs at least one value".into()));
        }
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(RiskError::Invalid(format!(
                "payoff value in scenario {i} is {v}; values must be finite"
            )));
        }
        Ok(Self(values))
    }

    pub fn constant(n: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; n])
    }

    /// Indicator of the given scenarios, scaled by `value`.
    pub fn indicator(n: usize, scenarios: &[usize], value: f64) -> Result<Self> {
        let mut v = vec![0.0; n];
        for &i in scenarios {
            if i >= n {
                return Err(RiskError::Invalid(format!(
                    "scenario index {i} out of range for {n} scenarios"
                )));
            }
            v[i] = value;
        }
        Self::new(v)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sup_norm(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.0.iter().all(|v| *v >= 0.0)
    }

    /// Entrywise `self >= other`.
    pub fn dominates(&self, other: &Payoff) -> bool {
        self.len() == other.len() && self.0.iter().zip(&other.0).all(|(a, b)| a >= b)
    }

    pub fn scaled(&self, factor: f64) -> Payoff {
        Payoff(self.0.iter().map(|v| v * factor).collect())
    }

    /// `self + c·1`.
    pub fn shifted(&self, c: f64) -> Payoff {
        Payoff(self.0.iter().map(|v| v + c).collect())
    }

    /// `self + factor·other`.
    pub fn plus_scaled(&self, factor: f64, other: &Payoff) -> Result<Payoff> {
        RiskError::check_len(self.len(), other.len())?;
        Ok(Payoff(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + factor * b)
                .collect(),
        ))
    }

    /// `w·self + (1 - w)·other`.
    pub fn convex_combination(&self, w: f64, other: &Payoff) -> Result<Payoff> {
        RiskError::check_len(self.len(), other.len())?;
        Ok(Payoff(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| w * a + (1.0 - w) * b)
                .collect(),
        ))
    }
}

/// A financial position: price at inception and payoff at maturity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Position {
    initial_value: f64,
    payoff: Payoff,
}

impl Position {
    pub fn new(initial_value: f64, payoff: Payoff) -> Result<Self> {
        if !(initial_value.is_finite() && initial_value > 0.0) {
            return Err(RiskError::Domain {
                name: "initial_value",
                value: initial_value,
                domain: "(0, inf)",
            });
        }
        Ok(Self {
            initial_value,
            payoff,
        })
    }

    pub fn initial_value(&self) -> f64 {
        self.initial_value
    }

    pub fn payoff(&self) -> &Payoff {
        &self.payoff
    }

    /// `(factor·X_0, factor·X_T)` for `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Position> {
        Position::new(self.initial_value * factor, self.payoff.scaled(factor))
    }

    /// Element-wise convex combination `w·X + (1 - w)·Y` of initial values and payoffs.
    pub fn convex_combination(&self, w: f64, other: &Position) -> Result<Position> {
        if !(0.0..=1.0).contains(&w) {
            return Err(RiskError::Domain {
                name: "weight",
                value: w,
                domain: "[0, 1]",
            });
        }
        Position::new(
            w * self.initial_value + (1.0 - w) * other.initial_value,
            self.payoff.convex_combination(w, &other.payoff)?,
        )
    }

    /// Per-unit return `X_T / X_0`.
    pub fn returns(&self) -> Payoff {
        self.payoff.scaled(1.0 / self.initial_value)
    }
}

/// A traded reinvestment vehicle with positive price and nonnegative payoff.
///
/// Acceptability of the payoff depends on the acceptance set and is checked
/// when the asset is paired with one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EligibleAsset {
    initial_price: f64,
    payoff: Payoff,
}

impl EligibleAsset {
    pub fn new(initial_price: f64, payoff: Payoff) -> Result<Self> {
        if !(initial_price.is_finite() && initial_price > 0.0) {
            return Err(RiskError::Domain {
                name: "initial_price",
                value: initial_price,
                domain: "(0, inf)",
            });
        }
        if let Some((i, v)) = payoff
            .values()
            .iter()
            .enumerate()
            .find(|(_, v)| **v < 0.0)
        {
            return Err(RiskError::Invalid(format!(
                "eligible asset payoff is {v} in scenario {i}; it must be nonnegative"
            )));
        }
        Ok(Self {
            initial_price,
            payoff,
        })
    }

    /// Constant payoff `r·S_0` in every scenario.
    pub fn risk_free(n: usize, initial_price: f64, gross_return: f64) -> Result<Self> {
        Self::new(initial_price, Payoff::constant(n, gross_return * initial_price)?)
    }

    pub fn initial_price(&self) -> f64 {
        self.initial_price
    }

    pub fn payoff(&self) -> &Payoff {
        &self.payoff
    }

    /// `w·S¹ + (1 - w)·S²` for two assets with the same initial price.
    pub fn mixture(&self, w: f64, other: &EligibleAsset) -> Result<EligibleAsset> {
        if self.initial_price != other.initial_price {
            return Err(RiskError::Precondition(format!(
                "asset mixtures need equal prices, got {} and {}",
                self.initial_price, other.initial_price
            )));
        }
        if !(0.0..=1.0).contains(&w) {
            return Err(RiskError::Domain {
                name: "weight",
                value: w,
                domain: "[0, 1]",
            });
        }
        EligibleAsset::new(
            self.initial_price,
            self.payoff.convex_combination(w, &other.payoff)?,
        )
    }
}

/// `E_Q[payoff]`, with `Q` the space's own measure when `measure` is `None`.
pub fn expectation(
    space: &ScenarioSpace,
    payoff: &Payoff,
    measure: Option<&DualMeasure>,
) -> Result<f64> {
    space.check(payoff)?;
    let weights = match measure {
        Some(q) => {
            RiskError::check_len(space.len(), q.len())?;
            q.weights()
        }
        None => space.probabilities(),
    };
    Ok(compensated_sum(
        weights
            .iter()
            .zip(payoff.values())
            .map(|(w, v)| w * v),
    ))
}

/// The intermediate position `(X_0, (1-λ)·X_T + λ·(X_0/S_0)·S_T)`: a fraction
/// `lambda` of `x` sold at inception and reinvested in `s`.
pub fn mix(x: &Position, s: &EligibleAsset, lambda: f64) -> Result<Position> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(RiskError::Domain {
            name: "lambda",
            value: lambda,
            domain: "[0, 1]",
        });
    }
    RiskError::check_len(x.payoff.len(), s.payoff.len())?;
    let units = x.initial_value / s.initial_price;
    let keep = 1.0 - lambda;
    let values = x
        .payoff
        .values()
        .iter()
        .zip(s.payoff.values())
        .map(|(xv, sv)| keep * xv + lambda * (units * sv))
        .collect();
    Ok(Position {
        initial_value: x.initial_value,
        payoff: Payoff(values),
    })
}

/// `P[payoff < threshold]`, strict inequality.
pub fn probability_below(space: &ScenarioSpace, payoff: &Payoff, threshold: f64) -> Result<f64> {
    space.check(payoff)?;
    Ok(compensated_sum(
        space
            .probabilities()
            .iter()
            .zip(payoff.values())
            .filter(|(_, v)| **v < threshold)
            .map(|(p, _)| *p),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn demo() -> (ScenarioSpace, Payoff) {
        (
            ScenarioSpace::uniform(4).unwrap(),
            Payoff::new(vec![-10.0, -2.0, 1.0, 5.0]).unwrap(),
        )
    }

    #[test]
    fn rejects_bad_probabilities() {
        assert!(ScenarioSpace::new(vec![]).is_err());
        assert!(ScenarioSpace::new(vec![0.5, 0.6]).is_err());
        assert!(ScenarioSpace::new(vec![1.5, -0.5]).is_err());
        assert!(ScenarioSpace::new(vec![f64::NAN, 1.0]).is_err());
        let s = ScenarioSpace::new(vec![0.5, 0.5 - 1e-13]).unwrap();
        assert!((s.probabilities().iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_weight_scenarios_are_flagged() {
        let s = ScenarioSpace::new(vec![0.5, 0.0, 0.5]).unwrap();
        assert_eq!(s.zero_weight_scenarios(), vec![1]);
    }

    #[test]
    fn expectation_examples() {
        let (space, x) = demo();
        let zero = Payoff::constant(4, 0.0).unwrap();
        assert_eq!(expectation(&space, &zero, None).unwrap(), 0.0);
        // direct weighted sum: (-10 - 2 + 1 + 5) / 4
        let oracle: f64 = x.values().iter().map(|v| v * 0.25).sum();
        assert_eq!(oracle, -1.5);
        assert_eq!(expectation(&space, &x, None).unwrap(), -1.5);

        let point = ScenarioSpace::new(vec![1.0, 0.0]).unwrap();
        let y = Payoff::new(vec![7.0, 999.0]).unwrap();
        assert_eq!(expectation(&point, &y, None).unwrap(), 7.0);
    }

    #[test]
    fn expectation_dimension_mismatch() {
        let (space, _) = demo();
        let short = Payoff::new(vec![1.0, 2.0]).unwrap();
        assert_eq!(
            expectation(&space, &short, None),
            Err(RiskError::DimensionMismatch {
                expected: 4,
                found: 2
            })
        );
    }

    #[test]
    fn mix_examples() {
        let (_, xt) = demo();
        let x = Position::new(10.0, xt.clone()).unwrap();
        let s = EligibleAsset::risk_free(4, 1.0, 1.0).unwrap();
        assert_eq!(mix(&x, &s, 0.0).unwrap().payoff(), &xt);
        assert_eq!(
            mix(&x, &s, 1.0).unwrap().payoff().values(),
            &[10.0, 10.0, 10.0, 10.0]
        );
        let m = mix(&x, &s, 1.0 / 6.0).unwrap();
        let expected = [-40.0 / 6.0, 0.0, 15.0 / 6.0, 35.0 / 6.0];
        for (a, b) in m.payoff().values().iter().zip(expected) {
            assert!((a - b).abs() < 1e-14, "{a} vs {b}");
        }
        assert_eq!(m.initial_value(), 10.0);
        assert!(matches!(
            mix(&x, &s, 1.5),
            Err(RiskError::Domain { name: "lambda", .. })
        ));
        assert!(mix(&x, &s, -0.1).is_err());
    }

    #[test]
    fn probability_below_examples() {
        let (space, x) = demo();
        assert_eq!(probability_below(&space, &x, 0.0).unwrap(), 0.5);
        assert_eq!(probability_below(&space, &x, -11.0).unwrap(), 0.0);
        let c = Payoff::constant(4, 3.0).unwrap();
        assert_eq!(probability_below(&space, &c, 3.0).unwrap(), 0.0);
    }

    #[test]
    fn probability_below_is_a_right_continuous_step_function() {
        let space = ScenarioSpace::new(vec![0.1, 0.2, 0.3, 0.15, 0.25]).unwrap();
        let x = Payoff::new(vec![3.0, -1.0, 3.0, 0.5, -4.0]).unwrap();
        let mut breaks: Vec<f64> = x.values().to_vec();
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let mut prev = 0.0;
        for b in breaks {
            let left = probability_below(&space, &x, b - 1e-9).unwrap();
            let at = probability_below(&space, &x, b).unwrap();
            let right = probability_below(&space, &x, b + 1e-9).unwrap();
            assert!(prev <= left + 1e-15);
            // strict inequality: the atom at b only counts above b
            assert_eq!(left, at);
            assert!(right > at);
            prev = right;
        }
    }

    #[test]
    fn eligible_asset_must_be_nonnegative() {
        let bad = Payoff::new(vec![1.0, -0.1]).unwrap();
        assert!(EligibleAsset::new(1.0, bad).is_err());
        let ok = Payoff::new(vec![1.0, 0.0]).unwrap();
        assert!(EligibleAsset::new(0.0, ok.clone()).is_err());
        assert!(EligibleAsset::new(2.0, ok).is_ok());
    }

    #[test]
    fn position_rejects_nonpositive_initial_value() {
        let p = Payoff::constant(2, 1.0).unwrap();
        assert!(Position::new(0.0, p.clone()).is_err());
        assert!(Position::new(-1.0, p.clone()).is_err());
        assert!(Position::new(f64::INFINITY, p).is_err());
    }

    #[test]
    fn grid_alignment() {
        let s = ScenarioSpace::uniform(4).unwrap();
        assert_eq!(s.is_grid_aligned(0.25), Some(true));
        assert_eq!(s.is_grid_aligned(0.1), Some(false));
        let big = ScenarioSpace::uniform(30).unwrap();
        assert_eq!(big.is_grid_aligned(0.1), None);
    }

    fn space_and_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
        (1usize..12).prop_flat_map(|n| {
            (
                prop::collection::vec(0.0f64..1.0, n),
                prop::collection::vec(-100.0f64..100.0, n),
                prop::collection::vec(-100.0f64..100.0, n),
            )
        })
    }

    proptest! {
        #[test]
        fn mix_is_affine_in_lambda(
            (_, xv, sv) in space_and_pair(),
            x0 in 0.1f64..50.0,
            s0 in 0.1f64..50.0,
            l1 in 0.0f64..=1.0,
            l2 in 0.0f64..=1.0,
        ) {
            let x = Position::new(x0, Payoff::new(xv).unwrap()).unwrap();
            let sp: Vec<f64> = sv.iter().map(|v| v.abs()).collect();
            let s = EligibleAsset::new(s0, Payoff::new(sp).unwrap()).unwrap();
            let m1 = mix(&x, &s, l1).unwrap();
            let m2 = mix(&x, &s, l2).unwrap();
            let mid = mix(&x, &s, 0.5 * (l1 + l2)).unwrap();
            for ((a, b), c) in m1.payoff().values().iter()
                .zip(m2.payoff().values())
                .zip(mid.payoff().values())
            {
                let scale = 1.0f64.max(a.abs()).max(b.abs());
                prop_assert!((0.5 * (a + b) - c).abs() <= 1e-15 * 8.0 * scale);
            }
        }

        #[test]
        fn expectation_is_linear(
            (w, xv, yv) in space_and_pair(),
            a in -10.0f64..10.0,
            b in -10.0f64..10.0,
        ) {
            let total: f64 = w.iter().sum();
            prop_assume!(total > 1e-3);
            let probs: Vec<f64> = w.iter().map(|v| v / total).collect();
            let space = ScenarioSpace::new(probs).unwrap();
            let x = Payoff::new(xv).unwrap();
            let y = Payoff::new(yv).unwrap();
            let combo = x.scaled(a).plus_scaled(b, &y).unwrap();
            let lhs = expectation(&space, &combo, None).unwrap();
            let rhs = a * expectation(&space, &x, None).unwrap()
                + b * expectation(&space, &y, None).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * 1e3f64.max(lhs.abs()));
        }
    }
}
