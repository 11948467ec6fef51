//! Structural properties of intrinsic and monetary risk checked on seeded
//! random instances.
//!
//! Every property runs on its own family of independent random streams, so
//! results do not depend on thread scheduling.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::acceptance::AcceptanceKind;
use crate::duality::{default_dual_sample, membership_via_separation, penalty, sample_dual_measures};
use crate::error::Result;
use crate::instances::{
    instance_rng, random_asset_with_price, random_es_boundary_asset, random_instance, random_level,
    random_position, random_space, random_unacceptable_instance, Family, Instance,
};
use crate::intrinsic::{
    altered_position, intrinsic_conic_closed_form, intrinsic_of_intermediate, intrinsic_risk,
};
use crate::monetary::{monetary_risk, shifted_by_asset};
use crate::report::build_report;
use crate::scenario::{mix, Payoff, Position};
use crate::acceptance::AcceptanceSet;

/// Offset used to probe either side of the intrinsic value.
pub const BOUNDARY_DELTA: f64 = 1e-8;

/// Tolerance for identities between independently computed risk values.
pub const IDENTITY_TOL: f64 = 1e-8;

/// Slack for order relations between two bisected values. Generator sets
/// accept with a relative slack of 1e-12, which can shift each value by a
/// comparable amount.
pub const ORDER_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyOutcome {
    pub name: &'static str,
    pub checked: usize,
    /// Instances where the property's hypothesis did not apply.
    pub skipped: usize,
    pub violations: usize,
    pub first_violation: Option<String>,
}

impl PropertyOutcome {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

enum Check {
    Pass,
    Skip,
    Fail(String),
}

fn fail_if(bad: bool, msg: impl FnOnce() -> String) -> Check {
    if bad {
        Check::Fail(msg())
    } else {
        Check::Pass
    }
}

type Checker = fn(&mut ChaCha8Rng, Family) -> Result<Check>;

struct Property {
    name: &'static str,
    families: &'static [Family],
    check: Checker,
}

fn run(prop: &Property, seed: u64, tag: u64, count: usize) -> PropertyOutcome {
    let results: Vec<Check> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = instance_rng(seed ^ (tag << 48), i as u64);
            let family = prop.families[i % prop.families.len()];
            match (prop.check)(&mut rng, family) {
                Ok(c) => c,
                Err(e) => Check::Fail(format!("{family:?}: {e}")),
            }
        })
        .collect();
    let mut out = PropertyOutcome {
        name: prop.name,
        checked: 0,
        skipped: 0,
        violations: 0,
        first_violation: None,
    };
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Check::Pass => out.checked += 1,
            Check::Skip => out.skipped += 1,
            Check::Fail(msg) => {
                out.checked += 1;
                out.violations += 1;
                if out.first_violation.is_none() {
                    out.first_violation = Some(format!("instance {i}: {msg}"));
                }
            }
        }
    }
    out
}

fn scale_of(x: &Position) -> f64 {
    x.payoff().sup_norm().max(x.initial_value()).max(1.0)
}

fn relevance(rng: &mut ChaCha8Rng, family: Family) -> Result<Check> {
    let Instance { set, asset, position } = random_instance(rng, family)?;
    let r = intrinsic_risk(&set, &asset, &position)?.value;
    let acceptable = set.is_acceptable(position.payoff())?;
    Ok(fail_if((r > 0.0) == acceptable || !(0.0..=1.0).contains(&r), || {
        format!("R = {r}, acceptable = {acceptable}")
    }))
}

fn boundary(rng: &mut ChaCha8Rng, family: Family) -> Result<Check> {
    let Instance { set, asset, position } = random_unacceptable_instance(rng, family)?;
    let r = intrinsic_risk(&set, &asset, &position)?.value;
    if !(r > BOUNDARY_DELTA && r < 1.0 - BOUNDARY_DELTA) {
        return Ok(Check::Skip);
    }
    let above = set.is_acceptable(mix(&position, &asset, r + BOUNDARY_DELTA)?.payoff())?;
    let below = set.is_acceptable(mix(&position, &asset, r - BOUNDARY_DELTA)?.payoff())?;
    Ok(fail_if(!above || below, || {
        format!("R = {r}: acceptable above = {above}, below = {below}")
    }))
}

fn up_set(rng: &mut ChaCha8Rng, family: Family) -> Result<Check> {
    let Instance { set, asset, position } = random_instance(rng, family)?;
    let r = intrinsic_risk(&set, &asset, &position)?.value;
    for _ in 0..20 {
        let lambda = if r < 1.0 { rng.random_range(r..=1.0) } else { 1.0 };
        if !set.is_acceptable(mix(&position, &asset, lambda)?.payoff())? {
            return Ok(Check::Fail(format!("R = {r}, unacceptable at {lambda}")));
        }
    }
    Ok(Check::Pass)
}

/// On cones, `R < 1` for unacceptable positions exactly when the asset is
/// interior; boundary assets give `R = 1` for constant losses.
fn below_one_iff_interior(rng: &mut ChaCha8Rng, family: Family) -> Result<Check> {
    let boundary_case = family == Family::ExpectedShortfall && rng.random_bool(0.5);
    if !boundary_case {
        let Instance { set, asset, position } = random_unacceptable_instance(rng, family)?;
        let interior = set.is_interior(asset.payoff())?.interior;
        let r = intrinsic_risk(&set, &asset, &position)?.value;
        return Ok(fail_if(interior != (r < 1.0), || {
            format!("interior = {interior}, R = {r}")
        }));
    }
    let n = rng.random_range(4..=12);
    let space = random_space(rng, n);
    let alpha = random_level(rng);
    let set = AcceptanceSet::expected_shortfall(&space, alpha)?;
    let asset = random_es_boundary_asset(rng, &space, alpha);
    let c = rng.random_range(0.5..20.0);
    let loss = Position::new(c, Payoff::constant(n, -c)?)?;
    let interior = set.is_interior(asset.payoff())?.interior;
    let r = intrinsic_risk(&set, &asset, &loss)?.value;
    Ok(fail_if(interior || r != 1.0, || {
        format!("boundary asset: interior = {interior}, R = {r}")
    }))
}

fn monotone_elementwise(rng: &mut ChaCha8Rng, family: Family) -> Result<Check> {
    let Instance { set, asset, position: x } = random_instance(rng, family)?;
    let n = x.payoff().len();
    let y0 = x.initial_value() * rng.random_range(0.2..=1.0);
    let y_t = Payoff::new(
        x.payoff()
            .values()
            .iter()
            .map(|v| v - rng.random_range(0.0..5.0))
            .collect(),
    )?;
    debug_assert_eq!(y_t.len(), n);
    let y = Position::new(y0, y_t)?;
    let rx = intrinsic_risk(&set, &asset, &x)?.value;
    let ry = intrinsic_risk(&set, &asset, &y)?.value;
    Ok(fail_if(rx > ry + ORDER_TOL, || format!("R(X) = {rx} > R(Y) = {ry}")))
}

fn monotone_returnwise(rng: &mut ChaCha8Rng, family: Family) -> Result<Check> {
    let Instance { set, asset, position: x } = random_instance(rng, family)?;
    let y0 = rng.random_range(0.5..20.0);
    let y_t = Payoff::new(
        x.returns()
            .values()
            .iter()
            .map(|ret| y0 * (ret - rng.random_range(0.0..0.5)))
            .collect(),
    )?;
    let y = Position::new(y0, y_t)?;
    let rx = intrinsic_risk(&set, &asset, &x)?.value;
    let ry = intrinsic_risk(&set, &asset, &y)?.value;
    Ok(fail_if(rx > ry + ORDER_TOL, || format!("R(X) = {rx} > R(Y) = {ry}")))
}

fn quasi_convex_positions(rng: &mut ChaCha8Rng, family: Family) -> Result<Check> {
    let Instance { set, asset, position: x } = random_instance(rng, family)?;
    let y = random_position(rng, x.payoff().len());
    let w = rng.random_range(0.0..=1.0);
    let rx = intrinsic_risk(&set, &asset, &x)?.value;
    let ry = intrinsic_risk(&set, &asset, &y)?.value;
    let rm = intrinsic_risk(&set, &asset, &x.convex_combination(w, &y)?)?.value;
    Ok(fail_if(rm > rx.max(ry) + IDENTITY_TOL, || {
        format!("R(mix) = {rm} > max({rx}, {ry})")
    }))
}

fn quasi_convex_assets(rng: &mut ChaCha8Rng, family: Family) -> Result<Check> {
    let Instance { set, asset: s1, position: x } = random_instance(rng, family)?;
    let s2 = random_asset_with_price(rng, x.payoff().len(), s1.initial_price());
    let w = rng.random_range(0.0..=1.0);
    let r1 = intrinsic_risk(&set, &s1, &x)?.value;
    let r2 = intrinsic_risk(&set, &s2, &x)?.value;
    let rm = intrinsic_risk(&set, &s1.mixture(w, &s2)?, &x)?.value;
    Ok(fail_if(rm > r1.max(r2) + IDENTITY_TOL, || {
        format!("R(mixed asset) = {rm} > max({r1}, {r2})")
    }))
}

fn scale_invariance(rng: &mut ChaCha8Rng, family: Family) -> Result<Check> {
    let Instance { set, asset, position: x } = random_instance(rng, family)?;
    let r = intrinsic_risk(&set, &asset, &x)?.value;
    for factor in [0.1, 3.0, 100.0] {
        let rs = intrinsic_risk(&set, &asset, &x.scaled(factor)?)?.value;
        if (rs - r).abs() > IDENTITY_TOL {
            return Ok(Check::Fail(format!("R = {r}, R(scaled by {factor}) = {rs}")));
        }
    }
    Ok(Check::Pass)
}

fn s_additivity(rng: &mut ChaCha8Rng, family: Family) -> Result<Check> {
    let Instance { set, asset, position: x } = random_instance(rng, family)?;
    let rho = monetary_risk(&set, &asset, x.payoff())?;
    if !rho.finite {
        return Ok(Check::Skip);
    }
    let k = rng.random_range(-10.0..10.0);
    let shifted = shifted_by_asset(&asset, x.payoff(), k)?;
    let rho_k = monetary_risk(&set, &asset, &shifted)?.value;
    let tol = IDENTITY_TOL * scale_of(&x).max(k.abs());
    Ok(fail_if((rho_k - (rho.value - k)).abs() > tol, || {
        format!("rho = {}, k = {k}, rho(shifted) = {rho_k}", rho.value)
    }))
}

fn positive_homogeneity(rng: &mut ChaCha8Rng, family: Family) -> Result<Check> {
    let Instance { set, asset, position: x } = random_instance(rng, family)?;
    let rho = monetary_risk(&set, &asset, x.payoff())?;
    if !rho.finite {
        return Ok(Check::Skip);
    }
    for factor in [0.5, 2.0, 10.0] {
        let scaled = monetary_risk(&set, &asset, &x.payoff().scaled(factor))?.value;
        let tol = IDENTITY_TOL * factor * scale_of(&x);
        if (scaled - factor * rho.value).abs() > tol {
            return Ok(Check::Fail(format!(
                "rho = {}, rho(x{factor}) = {scaled}",
                rho.value
            )));
        }
    }
    Ok(Check::Pass)
}

fn translation_chain(rng: &mut ChaCha8Rng, family: Family) -> Result<Check> {
    let Instance { set, asset, position: x } = random_unacceptable_instance(rng, family)?;
    let r = intrinsic_risk(&set, &asset, &x)?.value;
    for frac in [0.1, 0.5, 0.9] {
        let a = frac * r;
        let ra = intrinsic_risk(&set, &asset, &mix(&x, &asset, a)?)?.value;
        let expected = intrinsic_of_intermediate(r, a)?;
        if (ra - expected).abs() > IDENTITY_TOL {
            return Ok(Check::Fail(format!("R = {r}, alpha = {a}: {ra} vs {expected}")));
        }
    }
    Ok(Check::Pass)
}

fn conic_closed_form(rng: &mut ChaCha8Rng, family: Family) -> Result<Check> {
    let Instance { set, asset, position: x } = random_instance(rng, family)?;
    let r = intrinsic_risk(&set, &asset, &x)?.value;
    let rho = monetary_risk(&set, &asset, x.payoff())?;
    let closed = intrinsic_conic_closed_form(&set, &x, &rho)?.value;
    Ok(fail_if((r - closed).abs() > IDENTITY_TOL, || {
        format!("bisection {r} vs closed form {closed}")
    }))
}

fn scaled_altered_position(rng: &mut ChaCha8Rng, family: Family) -> Result<Check> {
    let Instance { set, asset, position: x } = random_unacceptable_instance(rng, family)?;
    let r = intrinsic_risk(&set, &asset, &x)?;
    let rho = monetary_risk(&set, &asset, x.payoff())?;
    let intrinsic = altered_position(&x, &asset, &r)?;
    let traditional = shifted_by_asset(&asset, x.payoff(), rho.value)?;
    let tol = IDENTITY_TOL * scale_of(&x).max(rho.value.abs());
    for (a, t) in intrinsic.payoff().values().iter().zip(traditional.values()) {
        let expected = (1.0 - r.value) * t;
        if (a - expected).abs() > tol {
            return Ok(Check::Fail(format!("{a} vs (1 - R)·{t} = {expected}")));
        }
    }
    Ok(Check::Pass)
}

fn efficiency(rng: &mut ChaCha8Rng, family: Family) -> Result<Check> {
    let Instance { set, asset, position: x } = random_unacceptable_instance(rng, family)?;
    let bench = random_asset_with_price(rng, x.payoff().len(), 1.0);
    let rep = build_report(&set, &asset, &x, &bench)?;
    if rep.capital.intrinsic > rep.monetary + 1e-9 {
        return Ok(Check::Fail(format!(
            "X_0·R = {} > rho = {}",
            rep.capital.intrinsic, rep.monetary
        )));
    }
    if !set.flags().is_conic {
        return Ok(Check::Pass);
    }
    let Some(trad) = &rep.returns.traditional else {
        return Ok(Check::Skip);
    };
    for (a, b) in rep.returns.intrinsic.values().iter().zip(trad.values()) {
        if (a - b).abs() > 1e-10 {
            return Ok(Check::Fail(format!("returns differ: {a} vs {b}")));
        }
    }
    let si = rep.sharpe.intrinsic.value;
    let st = rep.sharpe.traditional.and_then(|s| s.value);
    Ok(match (si, st) {
        (Some(a), Some(b)) => fail_if((a - b).abs() > 1e-8, || format!("Sharpe {a} vs {b}")),
        (None, None) => Check::Pass,
        _ => Check::Fail(format!("Sharpe degeneracy differs: {si:?} vs {st:?}")),
    })
}

fn separation_soundness(rng: &mut ChaCha8Rng, family: Family) -> Result<Check> {
    let Instance { set, asset, position: x } = random_instance(rng, family)?;
    let r = intrinsic_risk(&set, &asset, &x)?;
    let sample = match set.kind() {
        AcceptanceKind::Generator { .. } => sample_dual_measures(&set, 500, rng.random())?,
        _ => default_dual_sample(&set, rng.random())?,
    };
    let edge = altered_position(&x, &asset, &r)?;
    for payoff in [x.payoff(), edge.payoff()] {
        if set.is_acceptable(payoff)? && !membership_via_separation(&set, payoff, &sample)? {
            return Ok(Check::Fail("acceptable payoff separated".into()));
        }
    }
    if set.flags().is_conic {
        for q in sample.iter().take(50) {
            let a = penalty(&set, q)?.value;
            if !(a == 0.0 || a == f64::NEG_INFINITY) {
                return Ok(Check::Fail(format!("conic penalty {a}")));
            }
        }
    }
    Ok(Check::Pass)
}

const PROPERTIES: &[Property] = &[
    Property { name: "relevance", families: &Family::ALL, check: relevance },
    Property { name: "boundary", families: &Family::ALL, check: boundary },
    Property { name: "up-set", families: &Family::ALL, check: up_set },
    Property {
        name: "R<1 iff interior",
        families: &[Family::ValueAtRisk, Family::ExpectedShortfall],
        check: below_one_iff_interior,
    },
    Property { name: "monotonicity (element-wise)", families: &Family::ALL, check: monotone_elementwise },
    Property { name: "monotonicity (return-wise)", families: &Family::CONIC, check: monotone_returnwise },
    Property { name: "quasi-convexity (positions)", families: &Family::CONVEX, check: quasi_convex_positions },
    Property { name: "quasi-convexity (assets)", families: &Family::CONVEX, check: quasi_convex_assets },
    Property { name: "scale invariance", families: &Family::CONIC, check: scale_invariance },
    Property { name: "S-additivity", families: &Family::ALL, check: s_additivity },
    Property { name: "positive homogeneity", families: &Family::CONIC, check: positive_homogeneity },
    Property { name: "translation chain", families: &Family::ALL, check: translation_chain },
    Property { name: "conic closed form", families: &Family::CONIC, check: conic_closed_form },
    Property { name: "scaled altered position", families: &Family::CONIC, check: scaled_altered_position },
    Property { name: "efficiency and returns", families: &Family::ALL, check: efficiency },
    Property { name: "separation soundness", families: &Family::CONVEX, check: separation_soundness },
];

/// Names of all properties, in suite order.
pub fn property_names() -> Vec<&'static str> {
    PROPERTIES.iter().map(|p| p.name).collect()
}

/// Runs one property by name on `count` instances.
pub fn run_property(name: &str, seed: u64, count: usize) -> Option<PropertyOutcome> {
    PROPERTIES
        .iter()
        .enumerate()
        .find(|(_, p)| p.name == name)
        .map(|(tag, p)| run(p, seed, tag as u64, count))
}

/// Runs every property on `count` instances each.
pub fn run_property_suite(seed: u64, count: usize) -> Vec<PropertyOutcome> {
    PROPERTIES
        .iter()
        .enumerate()
        .map(|(tag, p)| run(p, seed, tag as u64, count))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_is_deterministic_and_clean() {
        let a = run_property_suite(7, 40);
        let b = run_property_suite(7, 40);
        assert_eq!(a, b);
        for o in &a {
            assert!(o.passed(), "{}: {:?}", o.name, o.first_violation);
        }
    }

    #[test]
    fn unknown_property() {
        assert!(run_property("nope", 1, 1).is_none());
        assert_eq!(run_property("relevance", 1, 8).unwrap().checked, 8);
    }
}
