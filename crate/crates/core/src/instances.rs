//! Seeded random instances for property checks and benchmarks.

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::Serialize;

use crate::acceptance::{AcceptanceSet, DualMeasure};
use crate::error::Result;
use crate::scenario::{EligibleAsset, Payoff, Position, ScenarioSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    ValueAtRisk,
    ExpectedShortfall,
    /// Generator set with all bounds zero.
    ConicGenerator,
    /// Generator set with negative bounds: convex, contains zero, not conic.
    Generator,
}

impl Family {
    pub const ALL: [Family; 4] = [
        Family::ValueAtRisk,
        Family::ExpectedShortfall,
        Family::ConicGenerator,
        Family::Generator,
    ];
    pub const CONIC: [Family; 3] = [
        Family::ValueAtRisk,
        Family::ExpectedShortfall,
        Family::ConicGenerator,
    ];
    pub const CONVEX: [Family; 3] = [
        Family::ExpectedShortfall,
        Family::ConicGenerator,
        Family::Generator,
    ];
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub set: AcceptanceSet,
    pub asset: EligibleAsset,
    pub position: Position,
}

/// Dimension range of generated spaces.
pub const MIN_SCENARIOS: usize = 4;
pub const MAX_SCENARIOS: usize = 12;

/// Payoff entries are drawn from `[-PAYOFF_RANGE, PAYOFF_RANGE]` before shifting.
pub const PAYOFF_RANGE: f64 = 20.0;

fn simplex_point(rng: &mut ChaCha8Rng, n: usize, floor: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..n)
        .map(|_| rng.sample::<f64, _>(Exp1) + floor)
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

/// Uniform or random strictly positive probabilities.
pub fn random_space(rng: &mut ChaCha8Rng, n: usize) -> ScenarioSpace {
    if rng.random_bool(0.5) {
        ScenarioSpace::uniform(n).expect("n > 0")
    } else {
        ScenarioSpace::new(simplex_point(rng, n, 0.05)).expect("normalized weights")
    }
}

/// Random payoff in `[-20, 20]^n`, shifted up by 15 with probability 0.3 so
/// that acceptable payoffs occur.
pub fn random_payoff(rng: &mut ChaCha8Rng, n: usize) -> Payoff {
    let shift = if rng.random_bool(0.3) { 15.0 } else { 0.0 };
    Payoff::new(
        (0..n)
            .map(|_| rng.random_range(-PAYOFF_RANGE..PAYOFF_RANGE) + shift)
            .collect(),
    )
    .expect("finite payoff")
}

pub fn random_position(rng: &mut ChaCha8Rng, n: usize) -> Position {
    let x0 = rng.random_range(0.5..20.0);
    Position::new(x0, random_payoff(rng, n)).expect("positive initial value")
}

/// Asset with price in `[0.5, 2]` and gross returns in `[0.5, 2]`; strictly
/// positive payoffs are interior to every generated set.
pub fn random_interior_asset(rng: &mut ChaCha8Rng, n: usize) -> EligibleAsset {
    let s0 = rng.random_range(0.5..2.0);
    random_asset_with_price(rng, n, s0)
}

pub fn random_asset_with_price(rng: &mut ChaCha8Rng, n: usize, s0: f64) -> EligibleAsset {
    let payoff = Payoff::new((0..n).map(|_| s0 * rng.random_range(0.5..2.0)).collect())
        .expect("finite payoff");
    EligibleAsset::new(s0, payoff).expect("positive asset")
}

/// Nonnegative asset vanishing on scenarios of total mass above `alpha`, so
/// it lies on the boundary of the ES set at level `alpha`.
pub fn random_es_boundary_asset(rng: &mut ChaCha8Rng, space: &ScenarioSpace, alpha: f64) -> EligibleAsset {
    let n = space.len();
    let probs = space.probabilities();
    let order = sample(rng, n, n);
    let mut zero = vec![false; n];
    let mut mass = 0.0;
    for i in order.iter() {
        if mass > alpha + 0.01 {
            break;
        }
        zero[i] = true;
        mass += probs[i];
    }
    let s0 = rng.random_range(0.5..2.0);
    let payoff = Payoff::new(
        zero.iter()
            .map(|&z| if z { 0.0 } else { s0 * rng.random_range(0.5..2.0) })
            .collect(),
    )
    .expect("finite payoff");
    EligibleAsset::new(s0, payoff).expect("nonnegative asset")
}

pub fn random_level(rng: &mut ChaCha8Rng) -> f64 {
    rng.random_range(0.05..0.45)
}

pub fn random_set(rng: &mut ChaCha8Rng, family: Family, space: &ScenarioSpace) -> Result<AcceptanceSet> {
    let n = space.len();
    match family {
        Family::ValueAtRisk => AcceptanceSet::value_at_risk(space, random_level(rng)),
        Family::ExpectedShortfall => AcceptanceSet::expected_shortfall(space, random_level(rng)),
        Family::ConicGenerator | Family::Generator => {
            let m = rng.random_range(1..=4);
            let generators = (0..m)
                .map(|_| DualMeasure::new(simplex_point(rng, n, 0.0)))
                .collect::<Result<Vec<_>>>()?;
            let bounds = (0..m)
                .map(|_| {
                    if family == Family::Generator {
                        -rng.random_range(0.1..5.0)
                    } else {
                        0.0
                    }
                })
                .collect();
            AcceptanceSet::generator(space, generators, bounds)
        }
    }
}

/// A random instance of `family` on `n` scenarios with an interior asset.
pub fn random_instance_of_size(rng: &mut ChaCha8Rng, family: Family, n: usize) -> Result<Instance> {
    let space = random_space(rng, n);
    let set = random_set(rng, family, &space)?;
    Ok(Instance {
        asset: random_interior_asset(rng, n),
        position: random_position(rng, n),
        set,
    })
}

/// A random instance with `MIN_SCENARIOS..=MAX_SCENARIOS` scenarios.
pub fn random_instance(rng: &mut ChaCha8Rng, family: Family) -> Result<Instance> {
    let n = rng.random_range(MIN_SCENARIOS..=MAX_SCENARIOS);
    random_instance_of_size(rng, family, n)
}

/// Random instance whose position is unacceptable, retrying with fresh draws.
pub fn random_unacceptable_instance(rng: &mut ChaCha8Rng, family: Family) -> Result<Instance> {
    loop {
        let inst = random_instance(rng, family)?;
        if !inst.set.is_acceptable(inst.position.payoff())? {
            return Ok(inst);
        }
    }
}

/// Per-instance generator: independent streams of one seed.
pub fn instance_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
