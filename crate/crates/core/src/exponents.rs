//! Single-letter exponent quantities and relative typical sets.
//!
//! All information quantities are in bits.

use serde::Serialize;

use crate::decision::{type1_on, RandomizedTest};
use crate::dist::{Distribution, Hypothesis, HypothesisPair, TypeClass, TypeSpace};
use crate::error::{Error, Result};
use crate::loss::NuParam;
use crate::numeric::{golden_section_min, log2_sum_exp2};
use crate::LogBase;

/// Default bracket tolerance for the Chernoff λ search.
pub const CHERNOFF_TOL: f64 = 1e-10;

fn same_alphabet(p0: &Distribution, p1: &Distribution) -> Result<()> {
    if p0.alphabet_size() != p1.alphabet_size() {
        return Err(Error::validation(format!(
            "alphabet mismatch: {} vs {}",
            p0.alphabet_size(),
            p1.alphabet_size()
        )));
    }
    Ok(())
}

/// `D(p0 || p1)` in bits; `+inf` when `p0` has mass where `p1` has none.
pub fn kl_divergence(p0: &Distribution, p1: &Distribution) -> Result<f64> {
    same_alphabet(p0, p1)?;
    let mut total = 0.0;
    for (a, b) in p0.log_probs().iter().zip(p1.log_probs()) {
        if *a == f64::NEG_INFINITY {
            continue;
        }
        if *b == f64::NEG_INFINITY {
            return Ok(f64::INFINITY);
        }
        total += a.exp2() * (a - b);
    }
    // Rounding can leave -1e-17 for identical inputs.
    Ok(total.max(0.0))
}

/// `log2 Σ p0^s p1^(1-s)` over the common support, continuous on `[0, 1]`.
fn chernoff_objective(p0: &Distribution, p1: &Distribution, s: f64) -> f64 {
    let terms: Vec<f64> = p0
        .log_probs()
        .iter()
        .zip(p1.log_probs())
        .filter(|(a, b)| a.is_finite() && b.is_finite())
        .map(|(a, b)| s * a + (1.0 - s) * b)
        .collect();
    log2_sum_exp2(&terms)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Chernoff {
    pub value: f64,
    pub lambda_star: f64,
}

/// Chernoff information `C = -min_{0<=λ<=1} log2 Σ p0^λ p1^(1-λ)`.
///
/// The objective is a log-sum-exp of affine functions of λ and therefore
/// convex, so golden-section search finds its minimum. With differing supports
/// the sum over the common support is used on the closed interval, i.e. the
/// endpoint values are the one-sided limits.
pub fn chernoff_information(p0: &Distribution, p1: &Distribution, tol: f64) -> Result<Chernoff> {
    same_alphabet(p0, p1)?;
    if !(tol > 0.0) {
        return Err(Error::validation("tolerance must be positive"));
    }
    let f = |s: f64| chernoff_objective(p0, p1, s);
    let (mut s, mut fs) = golden_section_min(f, 0.0, 1.0, tol);
    for end in [0.0, 1.0] {
        let fe = f(end);
        if fe < fs {
            s = end;
            fs = fe;
        }
    }
    if fs == f64::NEG_INFINITY {
        return Ok(Chernoff { value: f64::INFINITY, lambda_star: 0.5 });
    }
    Ok(Chernoff { value: (-fs).max(0.0), lambda_star: s })
}

/// `Σ a^s b^(1-s)` with `0^0 = 1` and `0^negative = +inf`.
fn affinity(a: &Distribution, b: &Distribution, s: f64) -> f64 {
    let mut logs = Vec::with_capacity(a.alphabet_size());
    for (la, lb) in a.log_probs().iter().zip(b.log_probs()) {
        let (za, zb) = (*la == f64::NEG_INFINITY, *lb == f64::NEG_INFINITY);
        let t = 1.0 - s;
        let term = match (za, zb) {
            (true, _) if s > 0.0 => f64::NEG_INFINITY,
            (true, _) => *lb,
            (false, true) if t > 0.0 => f64::NEG_INFINITY,
            (false, true) if t == 0.0 => *la,
            (false, true) => f64::INFINITY,
            (false, false) => s * la + t * lb,
        };
        logs.push(term);
    }
    log2_sum_exp2(&logs).exp2()
}

fn finite_nu(nu: NuParam) -> Result<f64> {
    match nu {
        NuParam::Finite(v) => Ok(v),
        NuParam::Infinite => Err(Error::validation("this quantity needs a finite ν")),
    }
}

/// Skewed Bhattacharyya affinity `BC_{ν/2} = Σ p0^(ν/2) p1^(1-ν/2)`.
///
/// For ν > 2 a symbol with `p0 > 0 = p1` makes this `+inf`. At ν = 2 the
/// value is the total mass of `p0`, returned as exactly 1.
pub fn skewed_bhattacharyya(nu: NuParam, p0: &Distribution, p1: &Distribution) -> Result<f64> {
    same_alphabet(p0, p1)?;
    let v = finite_nu(nu)?;
    if v == 2.0 {
        return Ok(1.0);
    }
    Ok(affinity(p0, p1, v / 2.0))
}

/// `D_{B,ν} = -log2 max{BC_{ν/2}, BC_{1-ν/2}}`, where `BC_{1-ν/2}` puts the
/// exponent ν/2 on `p1` instead (`Σ p1^(ν/2) p0^(1-ν/2)`).
pub fn d_b_nu(nu: NuParam, p0: &Distribution, p1: &Distribution) -> Result<f64> {
    let forward = skewed_bhattacharyya(nu, p0, p1)?;
    let swapped = skewed_bhattacharyya(nu, p1, p0)?;
    if nu == NuParam::Finite(2.0) {
        return Ok(0.0);
    }
    let max = forward.max(swapped);
    if max == f64::INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(-max.log2())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NuValue {
    pub nu: f64,
    pub value: f64,
}

/// Single-letter summary of a hypothesis pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentReport {
    pub kl: f64,
    pub kl_reverse: f64,
    pub chernoff: f64,
    pub chernoff_lambda_star: f64,
    /// `BC_{ν/2}` per ν (unitless).
    pub bc: Vec<NuValue>,
    pub d_b: Vec<NuValue>,
    pub base: LogBase,
}

impl ExponentReport {
    pub fn compute(pair: &HypothesisPair, nus: &[f64], base: LogBase) -> Result<Self> {
        let (p0, p1) = (&pair.p0, &pair.p1);
        let chernoff = chernoff_information(p0, p1, CHERNOFF_TOL)?;
        let mut bc = Vec::new();
        let mut d_b = Vec::new();
        for &v in nus {
            let nu = NuParam::finite(v)?;
            bc.push(NuValue { nu: v, value: skewed_bhattacharyya(nu, p0, p1)? });
            d_b.push(NuValue { nu: v, value: base.from_bits(d_b_nu(nu, p0, p1)?) });
        }
        Ok(ExponentReport {
            kl: base.from_bits(kl_divergence(p0, p1)?),
            kl_reverse: base.from_bits(kl_divergence(p1, p0)?),
            chernoff: base.from_bits(chernoff.value),
            chernoff_lambda_star: chernoff.lambda_star,
            bc,
            d_b,
            base,
        })
    }
}

/// Relative typical set `{x^n : |(1/n) log2(p0/p1) - center| <= epsilon_prime}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TypicalSetSpec {
    pub epsilon_prime: f64,
    pub n: u32,
    pub center: f64,
}

impl TypicalSetSpec {
    /// Centered at `D(p0 || p1)`.
    pub fn new(epsilon_prime: f64, n: u32, pair: &HypothesisPair) -> Result<Self> {
        if !(epsilon_prime > 0.0) {
            return Err(Error::validation(format!("ε′ must be positive, got {epsilon_prime}")));
        }
        if n < 1 {
            return Err(Error::validation("sequence length must be at least 1"));
        }
        let center = kl_divergence(&pair.p0, &pair.p1)?;
        if !center.is_finite() {
            return Err(Error::validation(
                "relative typical sets need a finite divergence D(p0 || p1)",
            ));
        }
        Ok(TypicalSetSpec { epsilon_prime, n, center })
    }

    /// Slack `ε′(ν-1)/ν`, the width used when the test must have ν-size `ε′`.
    pub fn for_nu(epsilon_prime: f64, nu: NuParam, n: u32, pair: &HypothesisPair) -> Result<Self> {
        let slack = match nu {
            NuParam::Infinite => epsilon_prime,
            NuParam::Finite(v) => epsilon_prime * (v - 1.0) / v,
        };
        Self::new(slack, n, pair)
    }

    pub fn contains_llr(&self, llr: f64) -> bool {
        llr.is_finite() && (llr / f64::from(self.n) - self.center).abs() <= self.epsilon_prime
    }
}

/// Member type classes of the relative typical set.
pub fn typical_set(spec: &TypicalSetSpec, pair: &HypothesisPair) -> Result<Vec<TypeClass>> {
    let space = TypeSpace::new(pair, spec.n)?;
    Ok((0..space.len())
        .filter(|&j| spec.contains_llr(space.llr(j)))
        .map(|j| space.classes()[j].clone())
        .collect())
}

/// Probability of the relative typical set under `h`.
pub fn typical_probability(spec: &TypicalSetSpec, pair: &HypothesisPair, h: Hypothesis) -> Result<f64> {
    let space = TypeSpace::new(pair, spec.n)?;
    Ok(space.probability(h, |j| spec.contains_llr(space.llr(j))))
}

/// Deterministic test that accepts `H0` exactly on the relative typical set
/// of slack `epsilon_prime`.
pub fn aep_test(epsilon_prime: f64, n: u32, pair: &HypothesisPair) -> Result<RandomizedTest> {
    let spec = TypicalSetSpec::new(epsilon_prime, n, pair)?;
    Ok(RandomizedTest::aep(spec.epsilon_prime, spec.center, pair.alphabet_size(), n))
}

/// `Σ_{x^n ∈ A} p0(x^n) δ(x^n, 0)`: the `H0`-mass the test accepts inside the
/// relative typical set `A` of slack `epsilon_prime`.
pub fn typical_accept_mass(test: &RandomizedTest, pair: &HypothesisPair, epsilon_prime: f64) -> Result<f64> {
    let spec = TypicalSetSpec::new(epsilon_prime, test.n(), pair)?;
    let space = TypeSpace::new(pair, test.n())?;
    let d = test.decisions_on(&space);
    Ok(space.expect(Hypothesis::Null, |j| {
        if spec.contains_llr(space.llr(j)) {
            d[j].accept.exp()
        } else {
            0.0
        }
    }))
}

/// Outcome of checking the converse-part typical-set bound for one test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TypicalMassCheck {
    pub alpha: f64,
    /// `P0(complement of A)`; the bound presumes this is at most `ε′`.
    pub atypical_mass: f64,
    pub accept_mass: f64,
    pub bound: f64,
    /// Both premises hold (`α_ν <= ε′` and `P0(A^c) <= ε′`).
    pub applicable: bool,
    pub holds: bool,
}

/// If `α_ν(test) <= ε′` and the typical set carries `H0`-mass at least
/// `1 - ε′`, the accepted typical `H0`-mass is at least `1 - 2ε′`.
pub fn typical_mass_bound(
    test: &RandomizedTest,
    pair: &HypothesisPair,
    nu: NuParam,
    epsilon_prime: f64,
) -> Result<TypicalMassCheck> {
    let spec = TypicalSetSpec::new(epsilon_prime, test.n(), pair)?;
    let space = TypeSpace::new(pair, test.n())?;
    let d = test.decisions_on(&space);
    let alpha = type1_on(&space, &d, nu);
    let atypical_mass = space.probability(Hypothesis::Null, |j| !spec.contains_llr(space.llr(j)));
    let accept_mass = typical_accept_mass(test, pair, epsilon_prime)?;
    let bound = 1.0 - 2.0 * epsilon_prime;
    let applicable = alpha <= epsilon_prime && atypical_mass <= epsilon_prime;
    Ok(TypicalMassCheck {
        alpha,
        atypical_mass,
        accept_mass,
        bound,
        applicable,
        holds: !applicable || accept_mass >= bound - 1e-12,
    })
}

/// `(1 - γx)^(1/γ) - (1 - x)`, non-negative for `γ ∈ (0, 1]`, `x ∈ [0, 1]`.
pub fn power_mean_gap(gamma: f64, x: f64) -> f64 {
    (1.0 - gamma * x).powf(1.0 / gamma) - (1.0 - x)
}

/// `(1 - γx) - (1 - x)^γ`, non-negative for `γ ∈ (0, 1]`, `x ∈ [0, 1]`.
pub fn concave_power_gap(gamma: f64, x: f64) -> f64 {
    (1.0 - gamma * x) - (1.0 - x).powf(gamma)
}
