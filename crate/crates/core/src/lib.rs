//! Intrinsic and monetary risk measures on finite scenario spaces.
//!
//! A position is an initial value and a payoff vector over scenarios. Given an
//! acceptance set and an eligible asset, the crate computes the traditional
//! risk (capital to add) and the intrinsic risk (fraction of the position to
//! swap into the asset), their dual representations, and a report comparing
//! the two de-risking actions.

pub mod acceptance;
pub mod duality;
pub mod error;
pub mod input;
pub mod instances;
pub mod intrinsic;
pub mod monetary;
pub mod numeric;
pub mod props;
pub mod report;
pub mod scenario;

pub use acceptance::{
    acceptance_from_risk, is_acceptable, is_interior, AcceptanceKind, AcceptanceSet, DualMeasure,
    Interiority, RiskFunctional, StructureFlags,
};
pub use duality::{
    coherent_dual_set, default_dual_sample, intrinsic_dual, membership_via_separation, penalty,
    sample_dual_measures, DualIntrinsic, PenaltyValue,
};
pub use error::{Result, RiskError};
pub use input::{load_scenarios, ScenarioFile, SetConfig};
pub use intrinsic::{
    altered_position, convex_upper_bound, intrinsic_conic_closed_form, intrinsic_of_intermediate,
    intrinsic_risk, IntrinsicMethod, IntrinsicRisk, LambdaBracket,
};
pub use monetary::{
    expected_shortfall, monetary_from_intrinsic, monetary_risk, value_at_risk, MonetaryCertificate,
    MonetaryRisk,
};
pub use report::{build_report, sharpe_ratio, RiskReport, Sharpe};
pub use scenario::{
    expectation, mix, probability_below, EligibleAsset, Payoff, Position, ScenarioSpace,
};
