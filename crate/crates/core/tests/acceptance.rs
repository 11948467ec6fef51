//! Acceptance criteria for the risk engine. Runs as a plain binary and prints
//! one PASS/FAIL line per criterion; exits nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use intrisk_core::instances::{
    instance_rng, random_instance_of_size, random_unacceptable_instance, Family,
};
use intrisk_core::props::run_property;
use intrisk_core::{
    coherent_dual_set, intrinsic_conic_closed_form, intrinsic_dual, intrinsic_of_intermediate,
    intrinsic_risk, mix, monetary_risk, sample_dual_measures, AcceptanceSet, EligibleAsset,
    Payoff, Position, ScenarioSpace,
};

const SEED: u64 = 20_240_601;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn translation_chain() -> Outcome {
    let half = intrinsic_of_intermediate(0.75, 0.5).map_err(|e| e.to_string())?;
    let quarter = intrinsic_of_intermediate(0.75, 0.25).map_err(|e| e.to_string())?;
    ensure(half == 0.5, || format!("(3/4, 1/2) gave {half}"))?;
    ensure(quarter == 2.0 / 3.0, || format!("(3/4, 1/4) gave {quarter}"))?;

    // VaR(1/4) needs 3 units of cash, so R = 3/(1+3) with X_0 = 1.
    let space = ScenarioSpace::uniform(4).unwrap();
    let set = AcceptanceSet::value_at_risk(&space, 0.25).unwrap();
    let s = EligibleAsset::risk_free(4, 1.0, 1.0).unwrap();
    let x = Position::new(1.0, Payoff::new(vec![-3.0, -3.0, 5.0, 5.0]).unwrap()).unwrap();
    let r = intrinsic_risk(&set, &s, &x).unwrap().value;
    ensure((r - 0.75).abs() <= 1e-8, || format!("R(X) = {r}"))?;
    let r_half = intrinsic_risk(&set, &s, &mix(&x, &s, 0.5).unwrap()).unwrap().value;
    let r_quarter = intrinsic_risk(&set, &s, &mix(&x, &s, 0.25).unwrap()).unwrap().value;
    ensure((r_half - 0.5).abs() <= 1e-8, || format!("R(X^1/2) = {r_half}"))?;
    ensure((r_quarter - 2.0 / 3.0).abs() <= 1e-8, || format!("R(X^1/4) = {r_quarter}"))?;
    let chord = 0.5 * r + 0.5 * r_half;
    ensure(r_quarter > chord, || format!("no convexity violation: {r_quarter} <= {chord}"))?;
    Ok(format!("R = {r}, R(X^1/2) = {r_half}, R(X^1/4) = {r_quarter} > {chord}"))
}

fn var_counterexample() -> Outcome {
    let space = ScenarioSpace::uniform(8).unwrap();
    let set = AcceptanceSet::value_at_risk(&space, 0.25).unwrap();
    let s = EligibleAsset::risk_free(8, 2.0, 1.0).unwrap();
    let x = Position::new(1.0, Payoff::indicator(8, &[0, 1], -1.0).unwrap()).unwrap();
    let y = Position::new(1.0, Payoff::indicator(8, &[2, 3], -1.0).unwrap()).unwrap();
    let rx = intrinsic_risk(&set, &s, &x).unwrap().value;
    let ry = intrinsic_risk(&set, &s, &y).unwrap().value;
    let rm = intrinsic_risk(&set, &s, &x.convex_combination(0.5, &y).unwrap())
        .unwrap()
        .value;
    ensure(rx == 0.0 && ry == 0.0, || format!("R(X) = {rx}, R(Y) = {ry}"))?;
    ensure((rm - 1.0 / 3.0).abs() <= 1e-8, || format!("R(mid) = {rm}"))?;
    Ok(format!("R(X) = R(Y) = 0, R((X+Y)/2) = {rm}"))
}

fn conic_representation() -> Outcome {
    let mut worst = 0.0_f64;
    for family in [Family::ValueAtRisk, Family::ExpectedShortfall] {
        for i in 0..1000u64 {
            let mut rng = instance_rng(SEED + 3, i + 1000 * family as u64);
            let n = 4 + (i % 9) as usize;
            let inst = random_instance_of_size(&mut rng, family, n).map_err(|e| e.to_string())?;
            let r = intrinsic_risk(&inst.set, &inst.asset, &inst.position)
                .map_err(|e| e.to_string())?
                .value;
            let rho = monetary_risk(&inst.set, &inst.asset, inst.position.payoff())
                .map_err(|e| e.to_string())?;
            let closed = intrinsic_conic_closed_form(&inst.set, &inst.position, &rho)
                .map_err(|e| e.to_string())?
                .value;
            let gap = (r - closed).abs();
            worst = worst.max(gap);
            ensure(gap <= 1e-8, || format!("{family:?} instance {i}: {r} vs {closed}"))?;
        }
    }
    Ok(format!("2000 instances, max gap {worst:.2e}"))
}

fn dual_primal() -> Outcome {
    let mut worst_es = 0.0_f64;
    for i in 0..200u64 {
        let mut rng = instance_rng(SEED + 4, i);
        let inst = random_unacceptable_instance(&mut rng, Family::ExpectedShortfall)
            .map_err(|e| e.to_string())?;
        let vertices = coherent_dual_set(&inst.set).map_err(|e| e.to_string())?;
        let dual = intrinsic_dual(&inst.set, &inst.asset, &inst.position, &vertices)
            .map_err(|e| e.to_string())?
            .value;
        let primal = intrinsic_risk(&inst.set, &inst.asset, &inst.position)
            .map_err(|e| e.to_string())?
            .value;
        let gap = (dual - primal).abs();
        worst_es = worst_es.max(gap);
        ensure(gap <= 1e-6, || format!("ES instance {i}: dual {dual}, primal {primal}"))?;
    }
    let mut worst_gen = 0.0_f64;
    for i in 0..100u64 {
        let mut rng = instance_rng(SEED + 5, i);
        let inst = random_unacceptable_instance(&mut rng, Family::Generator)
            .map_err(|e| e.to_string())?;
        let sample = sample_dual_measures(&inst.set, 10_000, SEED + i).map_err(|e| e.to_string())?;
        let dual = intrinsic_dual(&inst.set, &inst.asset, &inst.position, &sample)
            .map_err(|e| e.to_string())?
            .value;
        let primal = intrinsic_risk(&inst.set, &inst.asset, &inst.position)
            .map_err(|e| e.to_string())?
            .value;
        ensure(dual <= primal + 1e-9, || {
            format!("generator instance {i}: dual {dual} above primal {primal}")
        })?;
        let gap = primal - dual;
        worst_gen = worst_gen.max(gap);
        ensure(gap <= 5e-3, || format!("generator instance {i}: gap {gap}"))?;
    }
    Ok(format!(
        "ES max gap {worst_es:.2e} (vertex enumeration), generator max gap {worst_gen:.2e} (10000 draws)"
    ))
}

fn efficiency() -> Outcome {
    let o = run_property("efficiency and returns", SEED + 6, 1000).expect("registered property");
    ensure(o.passed(), || format!("{:?}", o.first_violation))?;
    Ok(format!("{} instances checked, 0 violations", o.checked))
}

const SUITE: [&str; 11] = [
    "relevance",
    "boundary",
    "up-set",
    "R<1 iff interior",
    "monotonicity (element-wise)",
    "monotonicity (return-wise)",
    "quasi-convexity (positions)",
    "quasi-convexity (assets)",
    "scale invariance",
    "S-additivity",
    "positive homogeneity",
];

fn property_suites() -> Outcome {
    let mut failures = Vec::new();
    let mut lines = Vec::new();
    for name in SUITE {
        let o = run_property(name, SEED + 7, 1000).expect("registered property");
        lines.push(format!("{name}: {}/{} checked", o.checked, o.checked + o.skipped));
        if !o.passed() {
            failures.push(format!("{name}: {} violations, first {:?}", o.violations, o.first_violation));
        }
    }
    ensure(failures.is_empty(), || failures.join("; "))?;
    Ok(lines.join(", "))
}

fn infinity_linkage() -> Outcome {
    let space = ScenarioSpace::uniform(4).unwrap();
    let set = AcceptanceSet::expected_shortfall(&space, 0.5).unwrap();
    let s = EligibleAsset::new(1.0, Payoff::new(vec![0.0, 0.0, 1.0, 1.0]).unwrap()).unwrap();
    ensure(!set.is_interior(s.payoff()).unwrap().interior, || "asset is interior".into())?;
    let c = 5.0;
    let loss = Position::new(c, Payoff::constant(4, -c).unwrap()).unwrap();
    let rho = monetary_risk(&set, &s, loss.payoff()).unwrap();
    let r = intrinsic_risk(&set, &s, &loss).unwrap().value;
    ensure(!rho.finite && rho.is_plus_infinity(), || format!("rho = {}", rho.value))?;
    ensure(r == 1.0, || format!("R = {r}"))?;
    Ok("rho = +inf, R = 1".into())
}

type Criterion = (&'static str, fn() -> Outcome, Duration);

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("1 translation chain", translation_chain, Duration::from_secs(1)),
        ("2 VaR counterexample", var_counterexample, Duration::from_secs(1)),
        ("3 conic representation", conic_representation, Duration::from_secs(30)),
        ("4 dual-primal agreement", dual_primal, Duration::from_secs(60)),
        ("5 efficiency inequality", efficiency, Duration::from_secs(60)),
        ("6 property suites", property_suites, Duration::from_secs(120)),
        ("7 infinity linkage", infinity_linkage, Duration::from_secs(1)),
    ];
    let mut failed = 0;
    for (name, run, budget) in criteria {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let outcome = outcome.and_then(|msg| {
            if elapsed <= budget {
                Ok(msg)
            } else {
                Err(format!("{msg}; took {elapsed:.2?}, budget {budget:?}"))
            }
        });
        match outcome {
            Ok(msg) => println!("PASS criterion {name} ({elapsed:.2?}): {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {name} ({elapsed:.2?}): {msg}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
