//! Finite-n exponent experiments, computed exactly over type classes.

use std::thread;

use serde::Serialize;

use crate::decision::{bayes_test, calibrate_on, mp_test_log2, type1_on, type2_on, ErrorPair};
use crate::dist::{HypothesisPair, Prior, TypeSpace};
use crate::error::{Error, Result};
use crate::exponents::{chernoff_information, d_b_nu, kl_divergence, skewed_bhattacharyya, NuValue, CHERNOFF_TOL};
use crate::loss::NuParam;
use crate::LogBase;

/// Which type II error a Neyman–Pearson trace reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TypeIIReading {
    /// `β̄_ν`, the ν-type II error of the ν-MP test.
    #[default]
    Nu,
    /// `E_1[δ(X^n, 0)]`, the ordinary miss probability of the same test.
    Classical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum TraceConstraint {
    Size { epsilon: f64 },
    Prior { pi0: f64, pi1: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub n: u32,
    pub error: f64,
    /// `-(1/n) log(error)`.
    pub exponent_estimate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reference {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentTrace {
    pub nu: NuParam,
    pub constraint: TraceConstraint,
    pub reading: TypeIIReading,
    pub base: LogBase,
    /// Sorted by `n`.
    pub rows: Vec<TraceRow>,
    /// Limits the estimates are compared against; the first one is primary.
    pub references: Vec<Reference>,
}

impl ExponentTrace {
    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    pub fn primary_reference(&self) -> Option<f64> {
        self.references.first().map(|r| r.value)
    }

    /// Same trace with exponents and references expressed in `base`.
    pub fn in_base(&self, base: LogBase) -> ExponentTrace {
        let to = |v: f64| base.from_bits(v) / self.base.from_bits(1.0);
        ExponentTrace {
            rows: self
                .rows
                .iter()
                .map(|r| TraceRow { exponent_estimate: to(r.exponent_estimate), ..*r })
                .collect(),
            references: self
                .references
                .iter()
                .map(|r| Reference { name: r.name.clone(), value: to(r.value) })
                .collect(),
            base,
            ..self.clone()
        }
    }
}

fn exponent_estimate(n: u32, error: f64) -> f64 {
    -error.log2() / f64::from(n)
}

fn sorted_lengths(n_list: &[u32]) -> Result<Vec<u32>> {
    if n_list.is_empty() {
        return Err(Error::validation("empty list of sequence lengths"));
    }
    if n_list.contains(&0) {
        return Err(Error::validation("sequence lengths must be at least 1"));
    }
    let mut ns = n_list.to_vec();
    ns.sort_unstable();
    ns.dedup();
    Ok(ns)
}

/// Evaluate `row` for every length on scoped worker threads, keeping order.
fn rows_parallel(ns: &[u32], row: impl Fn(u32) -> Result<TraceRow> + Sync) -> Result<Vec<TraceRow>> {
    let workers = thread::available_parallelism().map_or(1, |n| n.get()).min(ns.len());
    if workers <= 1 {
        return ns.iter().map(|&n| row(n)).collect();
    }
    let chunk = ns.len().div_ceil(workers);
    thread::scope(|s| {
        let handles: Vec<_> = ns
            .chunks(chunk)
            .map(|part| s.spawn(|| part.iter().map(|&n| row(n)).collect::<Result<Vec<_>>>()))
            .collect();
        let mut rows = Vec::with_capacity(ns.len());
        for h in handles {
            rows.extend(h.join().expect("trace worker panicked")?);
        }
        Ok(rows)
    })
}

/// `-(1/n) log2 β̄` of the size-ε ν-MP test for each `n`, with `D(p0 || p1)`
/// as reference.
pub fn np_exponent_trace(
    nu: NuParam,
    epsilon: f64,
    pair: &HypothesisPair,
    n_list: &[u32],
    reading: TypeIIReading,
) -> Result<ExponentTrace> {
    let ns = sorted_lengths(n_list)?;
    let rows = rows_parallel(&ns, |n| {
        let space = TypeSpace::new(pair, n)?;
        let cal = calibrate_on(&space, pair, nu, epsilon)?;
        let d = mp_test_log2(nu, cal.log2_lambda, pair, n)?.decisions_on(&space);
        let error = match reading {
            TypeIIReading::Nu => type2_on(&space, &d, nu),
            TypeIIReading::Classical => type2_on(&space, &d, NuParam::Infinite),
        };
        debug_assert!(type1_on(&space, &d, nu) <= epsilon + 1e-6);
        Ok(TraceRow { n, error, exponent_estimate: exponent_estimate(n, error) })
    })?;
    Ok(ExponentTrace {
        nu,
        constraint: TraceConstraint::Size { epsilon },
        reading,
        base: LogBase::Bits,
        rows,
        references: vec![Reference { name: "kl".into(), value: kl_divergence(&pair.p0, &pair.p1)? }],
    })
}

/// `-(1/n) log2 r` of the ν-Bayes test for each `n`. References are `D_{B,ν}`
/// for finite ν and the Chernoff information for ν = ∞.
pub fn bayes_exponent_trace(nu: NuParam, pair: &HypothesisPair, n_list: &[u32]) -> Result<ExponentTrace> {
    let prior = pair.require_prior()?;
    let ns = sorted_lengths(n_list)?;
    let rows = rows_parallel(&ns, |n| {
        let space = TypeSpace::new(pair, n)?;
        let errors = ErrorPair::on(&space, &bayes_test(nu, pair, n)?, nu);
        let error = crate::decision::BayesRiskReport::from_errors(errors, prior).risk;
        Ok(TraceRow { n, error, exponent_estimate: exponent_estimate(n, error) })
    })?;
    let references = match nu {
        NuParam::Finite(v) => vec![Reference {
            name: format!("d_b_nu({v})"),
            value: d_b_nu(nu, &pair.p0, &pair.p1)?,
        }],
        NuParam::Infinite => vec![
            Reference {
                name: "chernoff".into(),
                value: chernoff_information(&pair.p0, &pair.p1, CHERNOFF_TOL)?.value,
            },
            Reference {
                name: "d_b_nu(1)".into(),
                value: d_b_nu(NuParam::Finite(1.0), &pair.p0, &pair.p1)?,
            },
        ],
    };
    Ok(ExponentTrace {
        nu,
        constraint: TraceConstraint::Prior { pi0: prior.pi0, pi1: prior.pi1 },
        reading: TypeIIReading::Nu,
        base: LogBase::Bits,
        rows,
        references,
    })
}

/// Exact ν-Bayes risk against `(ν/(ν-1)) · max{BC_{ν/2}, BC_{1-ν/2}}^n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundCheck {
    pub nu: f64,
    pub n: u32,
    pub prior: Prior,
    pub risk: f64,
    /// May underflow to 0 for long sequences; `log2_bound` stays exact.
    pub bound: f64,
    pub log2_bound: f64,
    pub holds: bool,
}

/// Compare the exact ν-Bayes risk with the affinity bound for ν in (1, ∞).
pub fn risk_bound_check(nu: NuParam, pair: &HypothesisPair, n: u32) -> Result<BoundCheck> {
    let v = match nu {
        NuParam::Finite(v) if v > 1.0 => v,
        _ => {
            return Err(Error::validation(format!(
                "the affinity bound needs ν in (1, ∞), got {nu}"
            )))
        }
    };
    let prior = pair.require_prior()?;
    let space = TypeSpace::new(pair, n)?;
    let errors = ErrorPair::on(&space, &bayes_test(nu, pair, n)?, nu);
    let risk = crate::decision::BayesRiskReport::from_errors(errors, prior).risk;
    let bc = skewed_bhattacharyya(nu, &pair.p0, &pair.p1)?
        .max(skewed_bhattacharyya(nu, &pair.p1, &pair.p0)?);
    let log2_bound = (v / (v - 1.0)).log2() + f64::from(n) * bc.log2();
    let holds = risk == 0.0 || risk.log2() <= log2_bound + 1e-12;
    Ok(BoundCheck { nu: v, n, prior, risk, bound: log2_bound.exp2(), log2_bound, holds })
}

/// `steps` evenly spaced values from `min` to `max` inclusive.
pub fn nu_grid(min: f64, max: f64, steps: usize) -> Result<Vec<f64>> {
    if !(min.is_finite() && max.is_finite() && min >= 1.0 && max >= min) {
        return Err(Error::validation(format!("invalid ν range [{min}, {max}]")));
    }
    match steps {
        0 => Err(Error::validation("a ν grid needs at least one step")),
        1 => Ok(vec![min]),
        _ => Ok((0..steps)
            .map(|i| {
                if i == steps - 1 {
                    max
                } else {
                    min + (max - min) * i as f64 / (steps - 1) as f64
                }
            })
            .collect()),
    }
}

/// `(ν, D_{B,ν})` along `grid`, in bits.
pub fn sweep_d_b_nu(pair: &HypothesisPair, grid: &[f64]) -> Result<Vec<NuValue>> {
    grid.iter()
        .map(|&v| {
            let value = d_b_nu(NuParam::finite(v)?, &pair.p0, &pair.p1)?;
            Ok(NuValue { nu: v, value })
        })
        .collect()
}
