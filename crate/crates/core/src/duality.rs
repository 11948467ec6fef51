//! Penalty functions and the dual representation of intrinsic risk on closed
//! convex acceptance sets.
//!
//! The penalty is `α(Q, A) = inf_{Y ∈ A} E_Q[Y]`; the minimal penalty of the
//! classical dual representation is its negative. For ES sets the penalty is
//! `0` on the dual polytope `{q_i ≤ p_i/α}` and `-∞` elsewhere. For generator
//! sets it is the linear program `inf{q·y : E_{Q_j}[y] ≥ c_j}`, solved through
//! its dual `max{c·μ : μ ≥ 0, Σ μ_j Q_j = q}`.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::Serialize;

use crate::acceptance::{AcceptanceKind, AcceptanceSet, DualMeasure};
use crate::error::{Result, RiskError};
use crate::intrinsic::check_well_defined;
use crate::monetary::check_eligible;
use crate::scenario::{EligibleAsset, Payoff, Position, PROB_TOL};

/// Vertex enumeration of the ES dual polytope is exact up to this many scenarios.
pub const VERTEX_ENUMERATION_MAX: usize = 12;

/// Generator sets whose measures are linearly dependent are solved by
/// enumerating supports; this caps the number of generators.
pub const GENERATOR_SUBSET_MAX: usize = 16;

/// Number of random measures in the default sample.
pub const DEFAULT_DRAWS: usize = 10_000;

/// A measure separates a payoff when its penalty exceeds `E_Q[payoff]` by more than this.
pub const SEPARATION_MARGIN: f64 = 1e-9;

/// Dual terms with a smaller denominator are skipped.
pub const DENOMINATOR_FLOOR: f64 = 1e-12;

const RESIDUAL_TOL: f64 = 1e-9;
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PenaltyValue {
    /// `α(Q, A)`; `-∞` when `E_Q` is unbounded below on the set.
    #[serde(with = "crate::numeric::extended_real")]
    pub value: f64,
    /// An acceptable payoff attaining the infimum, when one is known.
    pub minimizer: Option<Payoff>,
}

impl PenaltyValue {
    /// `α_min(Q, A) = -α(Q, A)`.
    pub fn alpha_min(&self) -> f64 {
        -self.value
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }
}

fn check_convex_closed(set: &AcceptanceSet) -> Result<()> {
    let f = set.flags();
    if !f.is_convex {
        return Err(RiskError::Precondition(format!(
            "dual methods need a convex set; {} has is_convex = false",
            set.label()
        )));
    }
    if !f.is_closed {
        return Err(RiskError::Precondition(format!(
            "dual methods need a closed set; {} has is_closed = false",
            set.label()
        )));
    }
    Ok(())
}

/// Penalty evaluator with per-set precomputation.
enum PenaltyOracle<'a> {
    Shortfall {
        caps: Vec<f64>,
    },
    Generator {
        bounds: &'a [f64],
        columns: DMatrix<f64>,
        /// Pseudo-inverse of the generator matrix when it has full column rank.
        pinv: Option<DMatrix<f64>>,
    },
}

impl<'a> PenaltyOracle<'a> {
    fn new(set: &'a AcceptanceSet) -> Result<Self> {
        check_convex_closed(set)?;
        match set.kind() {
            AcceptanceKind::ExpectedShortfall { alpha } => Ok(Self::Shortfall {
                caps: set
                    .space()
                    .probabilities()
                    .iter()
                    .map(|p| p / alpha)
                    .collect(),
            }),
            AcceptanceKind::Generator { generators, bounds } => {
                let n = set.space().len();
                let m = generators.len();
                let columns = DMatrix::from_fn(n, m, |i, j| generators[j].weights()[i]);
                let svd = columns.clone().svd(true, true);
                let pinv = if svd.rank(RANK_TOL) == m {
                    Some(
                        svd.pseudo_inverse(RANK_TOL)
                            .map_err(|e| RiskError::Numerical(e.to_string()))?,
                    )
                } else if m > GENERATOR_SUBSET_MAX {
                    return Err(RiskError::Size {
                        what: "penalty of linearly dependent generators",
                        n: m,
                        max: GENERATOR_SUBSET_MAX,
                    });
                } else {
                    None
                };
                Ok(Self::Generator {
                    bounds,
                    columns,
                    pinv,
                })
            }
            AcceptanceKind::ValueAtRisk { .. } => unreachable!("VaR sets are not convex"),
            AcceptanceKind::FromRisk(_) => Err(RiskError::Precondition(format!(
                "no penalty evaluator for {}",
                set.label()
            ))),
        }
    }

    fn evaluate(&self, q: &[f64]) -> f64 {
        match self {
            Self::Shortfall { caps } => {
                let feasible = q.iter().zip(caps).all(|(qi, cap)| *qi <= cap + PROB_TOL);
                if feasible {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
            Self::Generator {
                bounds,
                columns,
                pinv,
            } => {
                let target = nalgebra::DVector::from_column_slice(q);
                match pinv {
                    Some(pinv) => {
                        let mu = pinv * &target;
                        feasible_value(columns, &target, mu.as_slice(), bounds)
                            .unwrap_or(f64::NEG_INFINITY)
                    }
                    None => best_support(columns, &target, bounds),
                }
            }
        }
    }
}

/// `c·μ` if `μ ≥ 0` solves `Gμ = q` within tolerance.
fn feasible_value(
    columns: &DMatrix<f64>,
    target: &nalgebra::DVector<f64>,
    mu: &[f64],
    bounds: &[f64],
) -> Option<f64> {
    if mu.iter().any(|w| *w < -RESIDUAL_TOL) {
        return None;
    }
    let mu_vec = nalgebra::DVector::from_iterator(mu.len(), mu.iter().map(|w| w.max(0.0)));
    let residual = columns * &mu_vec - target;
    if residual.amax() > RESIDUAL_TOL {
        return None;
    }
    Some(mu_vec.iter().zip(bounds).map(|(w, c)| w * c).sum())
}

/// Maximizes `c·μ` over the feasible set by trying every linearly independent
/// support; the optimum of a linear program is attained at such a vertex.
fn best_support(columns: &DMatrix<f64>, target: &nalgebra::DVector<f64>, bounds: &[f64]) -> f64 {
    let m = columns.ncols();
    let mut best = f64::NEG_INFINITY;
    for mask in 1u32..(1u32 << m) {
        let support: Vec<usize> = (0..m).filter(|j| mask & (1 << j) != 0).collect();
        if support.len() > columns.nrows() {
            continue;
        }
        let sub = columns.select_columns(&support);
        let svd = sub.svd(true, true);
        if svd.rank(RANK_TOL) < support.len() {
            continue;
        }
        let Ok(sub_mu) = svd.solve(target, RANK_TOL) else {
            continue;
        };
        let mut mu = vec![0.0; m];
        for (k, &j) in support.iter().enumerate() {
            mu[j] = sub_mu[k];
        }
        if let Some(v) = feasible_value(columns, target, &mu, bounds) {
            best = best.max(v);
        }
    }
    best
}

/// `α(Q, A) = inf_{Y ∈ A} E_Q[Y]`.
pub fn penalty(set: &AcceptanceSet, q: &DualMeasure) -> Result<PenaltyValue> {
    RiskError::check_len(set.space().len(), q.len())?;
    let oracle = PenaltyOracle::new(set)?;
    let value = oracle.evaluate(q.weights());
    let minimizer = if value == 0.0 && set.flags().contains_zero {
        Some(Payoff::constant(set.space().len(), 0.0)?)
    } else {
        None
    };
    Ok(PenaltyValue { value, minimizer })
}

/// Index of a sampled measure whose penalty exceeds `E_Q[payoff]` by more
/// than the separation margin, if any.
pub fn separating_measure(
    set: &AcceptanceSet,
    payoff: &Payoff,
    measures: &[DualMeasure],
) -> Result<Option<usize>> {
    set.space().check(payoff)?;
    let oracle = PenaltyOracle::new(set)?;
    for q in measures {
        RiskError::check_len(set.space().len(), q.len())?;
    }
    let scale = payoff.sup_norm().max(1.0);
    Ok(measures.iter().position(|q| {
        let a = oracle.evaluate(q.weights());
        a.is_finite() && a > q.dot(payoff.values()) + SEPARATION_MARGIN * scale
    }))
}

/// Membership decided by separation: `false` iff some sampled measure separates.
pub fn membership_via_separation(
    set: &AcceptanceSet,
    payoff: &Payoff,
    measures: &[DualMeasure],
) -> Result<bool> {
    Ok(separating_measure(set, payoff, measures)?.is_none())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualIntrinsic {
    pub value: f64,
    /// Sample index of the measure attaining the supremum.
    pub maximizer: Option<usize>,
    pub evaluated: usize,
    /// Measures skipped because their penalty is `-∞`.
    pub skipped_infinite: usize,
    /// Measures skipped because the denominator is below the floor.
    pub skipped_degenerate: usize,
}

enum Term {
    Value(f64),
    Infinite,
    Degenerate,
}

/// `sup_Q (α(Q,A) - E_Q[X_T])⁺ / ((X_0/S_0)·E_Q[S_T] - E_Q[X_T])` over the sample.
pub fn intrinsic_dual(
    set: &AcceptanceSet,
    s: &EligibleAsset,
    x: &Position,
    measures: &[DualMeasure],
) -> Result<DualIntrinsic> {
    check_convex_closed(set)?;
    check_well_defined(set)?;
    if !set.flags().contains_zero {
        return Err(RiskError::Precondition(format!(
            "dual representation needs zero in the set; {} has contains_zero = false",
            set.label()
        )));
    }
    check_eligible(set, s)?;
    set.space().check(x.payoff())?;
    for q in measures {
        RiskError::check_len(set.space().len(), q.len())?;
    }
    let oracle = PenaltyOracle::new(set)?;
    let units = x.initial_value() / s.initial_price();

    let terms: Vec<Term> = measures
        .par_iter()
        .map(|q| {
            let a = oracle.evaluate(q.weights());
            if a == f64::NEG_INFINITY {
                return Term::Infinite;
            }
            let ex = q.dot(x.payoff().values());
            let es = q.dot(s.payoff().values());
            let denom = units * es - ex;
            if denom <= DENOMINATOR_FLOOR {
                return Term::Degenerate;
            }
            Term::Value((a - ex).max(0.0) / denom)
        })
        .collect();

    let mut out = DualIntrinsic {
        value: 0.0,
        maximizer: None,
        evaluated: 0,
        skipped_infinite: 0,
        skipped_degenerate: 0,
    };
    for (i, t) in terms.into_iter().enumerate() {
        match t {
            Term::Value(v) => {
                out.evaluated += 1;
                if out.maximizer.is_none() || v > out.value {
                    out.value = v;
                    out.maximizer = Some(i);
                }
            }
            Term::Infinite => out.skipped_infinite += 1,
            Term::Degenerate => out.skipped_degenerate += 1,
        }
    }
    Ok(out)
}

/// All vertices of the ES dual polytope `{0 ≤ q_i ≤ p_i/α, Σ q_i = 1}`.
///
/// A vertex has at most one coordinate strictly between its bounds, so each
/// is obtained from a set of coordinates at their caps plus one free index.
pub fn coherent_dual_set(set: &AcceptanceSet) -> Result<Vec<DualMeasure>> {
    let f = set.flags();
    if !(f.is_conic && f.is_convex) {
        return Err(RiskError::Precondition(format!(
            "coherent dual set needs a conic convex set; {} has is_conic = {}, is_convex = {}",
            set.label(),
            f.is_conic,
            f.is_convex
        )));
    }
    let alpha = match set.kind() {
        AcceptanceKind::ExpectedShortfall { alpha } => *alpha,
        AcceptanceKind::Generator { generators, .. } => return Ok(generators.clone()),
        _ => {
            return Err(RiskError::Precondition(format!(
                "no vertex description for {}",
                set.label()
            )))
        }
    };
    let n = set.space().len();
    if n > VERTEX_ENUMERATION_MAX {
        return Err(RiskError::Size {
            what: "dual vertex enumeration",
            n,
            max: VERTEX_ENUMERATION_MAX,
        });
    }
    let caps: Vec<f64> = set
        .space()
        .probabilities()
        .iter()
        .map(|p| (p / alpha).min(1.0))
        .collect();
    let mut vertices: Vec<Vec<f64>> = Vec::new();
    for mask in 0u32..(1u32 << n) {
        let capped = |i: usize| mask & (1 << i) != 0;
        let filled: f64 = (0..n).filter(|&i| capped(i)).map(|i| caps[i]).sum();
        if filled > 1.0 + PROB_TOL {
            continue;
        }
        for free in (0..n).filter(|&i| !capped(i)) {
            let rest = (1.0 - filled).max(0.0);
            if rest > caps[free] + PROB_TOL {
                continue;
            }
            let mut q: Vec<f64> = (0..n).map(|i| if capped(i) { caps[i] } else { 0.0 }).collect();
            q[free] = rest.min(caps[free]);
            let total: f64 = q.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                continue;
            }
            let q: Vec<f64> = q.iter().map(|v| v / total).collect();
            if !vertices
                .iter()
                .any(|v| v.iter().zip(&q).all(|(a, b)| (a - b).abs() <= 1e-12))
            {
                vertices.push(q);
            }
        }
    }
    Ok(vertices.into_iter().map(DualMeasure::from_normalized).collect())
}

fn random_simplex_point(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let draws: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = draws.iter().sum();
    draws.into_iter().map(|d| d / total).collect()
}

/// Seeded random measures with finite penalty.
///
/// ES: random vertices of the dual polytope, from random fill orders.
/// Generator: the generators themselves, then uniform mixtures of them.
pub fn sample_dual_measures(set: &AcceptanceSet, draws: usize, seed: u64) -> Result<Vec<DualMeasure>> {
    check_convex_closed(set)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match set.kind() {
        AcceptanceKind::ExpectedShortfall { alpha } => {
            let probs = set.space().probabilities();
            let n = probs.len();
            let mut order: Vec<usize> = (0..n).filter(|&i| probs[i] > 0.0).collect();
            Ok((0..draws)
                .map(|_| {
                    order.shuffle(&mut rng);
                    let mut q = vec![0.0; n];
                    let mut rest = 1.0_f64;
                    for &i in &order {
                        let w = (probs[i] / alpha).min(rest);
                        q[i] = w;
                        rest -= w;
                        if rest <= 0.0 {
                            break;
                        }
                    }
                    let total: f64 = q.iter().sum();
                    DualMeasure::from_normalized(q.into_iter().map(|v| v / total).collect())
                })
                .collect())
        }
        AcceptanceKind::Generator { generators, .. } => {
            let n = set.space().len();
            let mut out = generators.clone();
            for _ in 0..draws {
                let mu = random_simplex_point(&mut rng, generators.len());
                let mut q = vec![0.0; n];
                for (w, g) in mu.iter().zip(generators) {
                    for (qi, gi) in q.iter_mut().zip(g.weights()) {
                        *qi += w * gi;
                    }
                }
                let total: f64 = q.iter().sum();
                out.push(DualMeasure::from_normalized(
                    q.into_iter().map(|v| v / total).collect(),
                ));
            }
            Ok(out)
        }
        _ => Err(RiskError::Precondition(format!(
            "no dual sampler for {}",
            set.label()
        ))),
    }
}

/// Exact vertices for small ES sets, otherwise `DEFAULT_DRAWS` random measures.
pub fn default_dual_sample(set: &AcceptanceSet, seed: u64) -> Result<Vec<DualMeasure>> {
    match set.kind() {
        AcceptanceKind::ExpectedShortfall { .. } if set.space().len() <= VERTEX_ENUMERATION_MAX => {
            coherent_dual_set(set)
        }
        _ => sample_dual_measures(set, DEFAULT_DRAWS, seed),
    }
}
