//! Side-by-side comparison of the intrinsic and the traditional de-risking
//! actions: capital moved, altered positions, returns and Sharpe ratios.

use serde::{Deserialize, Serialize};

use crate::acceptance::AcceptanceSet;
use crate::error::{Result, RiskError};
use crate::intrinsic::{altered_position, intrinsic_risk, IntrinsicRisk};
use crate::monetary::{monetary_risk, shifted_by_asset, MonetaryCertificate, MonetaryRisk};
use crate::numeric::compensated_sum;
use crate::scenario::{EligibleAsset, Payoff, Position, ScenarioSpace};

/// Excess-return standard deviations at or below this (relative to the mean
/// excess, floored at one) are treated as zero.
pub const DEGENERATE_STD: f64 = 1e-14;

/// `E[X_T/X_0 - B_T/B_0] / sqrt(V[X_T/X_0 - B_T/B_0])`. `value` is `None`
/// with `degenerate` set when the excess return is constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sharpe {
    pub value: Option<f64>,
    pub mean_excess: f64,
    pub std_excess: f64,
    pub degenerate: bool,
}

pub fn sharpe_ratio(space: &ScenarioSpace, returns: &Payoff, benchmark: &EligibleAsset) -> Result<Sharpe> {
    space.check(returns)?;
    space.check(benchmark.payoff())?;
    let b0 = benchmark.initial_price();
    let excess: Vec<f64> = returns
        .values()
        .iter()
        .zip(benchmark.payoff().values())
        .map(|(r, b)| r - b / b0)
        .collect();
    let probs = space.probabilities();
    let mean = compensated_sum(probs.iter().zip(&excess).map(|(p, e)| p * e));
    let var = compensated_sum(probs.iter().zip(&excess).map(|(p, e)| p * (e - mean).powi(2)));
    let std = var.max(0.0).sqrt();
    let degenerate = std <= DEGENERATE_STD * mean.abs().max(1.0);
    Ok(Sharpe {
        value: (!degenerate).then(|| mean / std),
        mean_excess: mean,
        std_excess: std,
        degenerate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Capital {
    /// `X_0·R`: value sold and reinvested.
    pub intrinsic: f64,
    /// `ρ⁺`: capital raised and invested; `"inf"` when no amount suffices.
    #[serde(with = "crate::numeric::extended_real")]
    pub traditional: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Altered {
    pub intrinsic: Position,
    /// `(X_0 + ρ⁺, X_T + (ρ⁺/S_0)·S_T)`; absent when `ρ = +∞`.
    pub traditional: Option<Position>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Returns {
    pub intrinsic: Payoff,
    pub traditional: Option<Payoff>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SharpeComparison {
    pub intrinsic: Sharpe,
    pub traditional: Option<Sharpe>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certificates {
    pub intrinsic: IntrinsicRisk,
    pub monetary: MonetaryCertificate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub set: String,
    /// Fraction of the position sold, in `[0, 1]`.
    pub intrinsic: f64,
    #[serde(with = "crate::numeric::extended_real")]
    pub monetary: f64,
    pub capital: Capital,
    pub altered: Altered,
    pub returns: Returns,
    pub sharpe: SharpeComparison,
    pub certificates: Certificates,
}

impl RiskReport {
    pub fn intrinsic_risk(&self) -> IntrinsicRisk {
        self.certificates.intrinsic
    }

    pub fn monetary_risk(&self) -> MonetaryRisk {
        MonetaryRisk {
            value: self.monetary,
            finite: self.monetary.is_finite(),
            certificate: self.certificates.monetary,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| RiskError::Input {
            source_name: "report".into(),
            message: format!("line {}, column {}: {e}", e.line(), e.column()),
        })
    }
}

/// Computes both de-risking actions for `x` and compares them against `benchmark`.
pub fn build_report(
    set: &AcceptanceSet,
    s: &EligibleAsset,
    x: &Position,
    benchmark: &EligibleAsset,
) -> Result<RiskReport> {
    let space = set.space();
    let r = intrinsic_risk(set, s, x)?;
    let rho = monetary_risk(set, s, x.payoff())?;
    let altered_intrinsic = altered_position(x, s, &r)?;
    let return_intrinsic = altered_intrinsic.returns();

    let traditional = if rho.is_plus_infinity() {
        None
    } else {
        let amount = rho.positive_part();
        Some(Position::new(
            x.initial_value() + amount,
            shifted_by_asset(s, x.payoff(), amount)?,
        )?)
    };
    let return_traditional = traditional.as_ref().map(Position::returns);
    let sharpe_traditional = return_traditional
        .as_ref()
        .map(|ret| sharpe_ratio(space, ret, benchmark))
        .transpose()?;

    Ok(RiskReport {
        set: set.label(),
        intrinsic: r.value,
        monetary: rho.value,
        capital: Capital {
            intrinsic: r.capital(x),
            traditional: rho.positive_part(),
        },
        sharpe: SharpeComparison {
            intrinsic: sharpe_ratio(space, &return_intrinsic, benchmark)?,
            traditional: sharpe_traditional,
        },
        altered: Altered {
            intrinsic: altered_intrinsic,
            traditional,
        },
        returns: Returns {
            intrinsic: return_intrinsic,
            traditional: return_traditional,
        },
        certificates: Certificates {
            intrinsic: r,
            monetary: rho.certificate,
        },
    })
}
