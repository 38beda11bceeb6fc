//! Finite distributions, hypothesis pairs and exact sums over `X^n`.
//!
//! Every test in this crate depends on a sequence only through its type
//! (symbol-count vector), so expectations over `X^n` are computed as sums over
//! type classes weighted by their exact multinomial multiplicities. A full
//! sequence enumeration is kept as an independent cross-check for small `n`.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use rand::distributions::{Distribution as _, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{log2_sum_exp2, pairwise_sum};

/// Default cap on the number of type classes (or sequences) enumerated.
pub const DEFAULT_ENUMERATION_CAP: u128 = 10_000_000;

/// A probability vector over a finite alphabet, stored as base-2 log-probabilities.
///
/// Zero probabilities are stored as `-inf`; sums follow `0 · log 0 = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    log_probs: Vec<f64>,
}

impl Distribution {
    /// Normalise non-negative weights into a distribution.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if weights.len() < 2 {
            return Err(Error::validation("a distribution needs at least 2 symbols"));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::validation(format!(
                "weights must be finite and non-negative, got {w}"
            )));
        }
        let total = pairwise_sum(weights);
        if total <= 0.0 {
            return Err(Error::validation("weights sum to zero"));
        }
        Self::from_log2_probs(weights.iter().map(|w| w.log2()).collect())
    }

    /// Build from (possibly unnormalised) base-2 log-weights.
    ///
    /// Normalisation happens in log-space, so masses far below the smallest
    /// positive `f64` survive, e.g. a symbol with log-probability `-2000`.
    pub fn from_log2_probs(log_weights: Vec<f64>) -> Result<Self> {
        if log_weights.len() < 2 {
            return Err(Error::validation("a distribution needs at least 2 symbols"));
        }
        if log_weights.iter().any(|l| l.is_nan() || *l == f64::INFINITY) {
            return Err(Error::validation("log-weights must be finite or -inf"));
        }
        let norm = log2_sum_exp2(&log_weights);
        if norm == f64::NEG_INFINITY {
            return Err(Error::validation("weights sum to zero"));
        }
        let log_probs = log_weights.into_iter().map(|l| l - norm).collect();
        Ok(Distribution { log_probs })
    }

    pub fn alphabet_size(&self) -> usize {
        self.log_probs.len()
    }

    /// Base-2 log-probabilities.
    pub fn log_probs(&self) -> &[f64] {
        &self.log_probs
    }

    pub fn prob(&self, symbol: usize) -> f64 {
        self.log_probs[symbol].exp2()
    }

    pub fn probs(&self) -> Vec<f64> {
        self.log_probs.iter().map(|l| l.exp2()).collect()
    }

    /// Base-2 log-probability of one sequence with the given symbol counts.
    pub fn log2_prob_of_counts(&self, counts: &[u32]) -> f64 {
        counts
            .iter()
            .zip(&self.log_probs)
            .filter(|(c, _)| **c > 0)
            .map(|(c, lp)| f64::from(*c) * lp)
            .sum()
    }
}

#[derive(Serialize, Deserialize)]
struct DistributionRepr {
    probs: Vec<f64>,
}

impl Serialize for Distribution {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DistributionRepr { probs: self.probs() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Distribution {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = DistributionRepr::deserialize(d)?;
        Distribution::from_weights(&repr.probs).map_err(serde::de::Error::custom)
    }
}

/// Prior probabilities `(π0, π1)` on the two hypotheses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prior {
    pub pi0: f64,
    pub pi1: f64,
}

impl Prior {
    pub fn new(pi0: f64, pi1: f64) -> Result<Self> {
        let ok = |p: f64| (0.0..=1.0).contains(&p);
        if !ok(pi0) || !ok(pi1) || (pi0 + pi1 - 1.0).abs() > 1e-12 {
            return Err(Error::validation(format!(
                "prior must be two probabilities summing to 1, got ({pi0}, {pi1})"
            )));
        }
        Ok(Prior { pi0, pi1 })
    }

    pub fn uniform() -> Self {
        Prior { pi0: 0.5, pi1: 0.5 }
    }

    /// `log2(π0 / π1)`.
    pub fn log2_odds(&self) -> f64 {
        self.pi0.log2() - self.pi1.log2()
    }
}

/// The two hypotheses `H0: p0` and `H1: p1`, optionally with a prior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisPair {
    pub p0: Distribution,
    pub p1: Distribution,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<Prior>,
}

impl HypothesisPair {
    pub fn new(p0: Distribution, p1: Distribution) -> Result<Self> {
        if p0.alphabet_size() != p1.alphabet_size() {
            return Err(Error::validation(format!(
                "alphabet mismatch: {} vs {}",
                p0.alphabet_size(),
                p1.alphabet_size()
            )));
        }
        Ok(HypothesisPair { p0, p1, prior: None })
    }

    pub fn with_prior(mut self, prior: Prior) -> Self {
        self.prior = Some(prior);
        self
    }

    pub fn alphabet_size(&self) -> usize {
        self.p0.alphabet_size()
    }

    pub fn require_prior(&self) -> Result<Prior> {
        self.prior
            .ok_or_else(|| Error::validation("this operation needs a prior (π0, π1)"))
    }

    pub fn dist(&self, h: Hypothesis) -> &Distribution {
        match h {
            Hypothesis::Null => &self.p0,
            Hypothesis::Alternative => &self.p1,
        }
    }

    /// Per-symbol `log2(p0(x) / p1(x))`; NaN when both are zero.
    pub fn symbol_llr(&self, symbol: usize) -> f64 {
        let (a, b) = (self.p0.log_probs[symbol], self.p1.log_probs[symbol]);
        match (a == f64::NEG_INFINITY, b == f64::NEG_INFINITY) {
            (true, true) => f64::NAN,
            (true, false) => f64::NEG_INFINITY,
            (false, true) => f64::INFINITY,
            (false, false) => a - b,
        }
    }

    /// Sequence log-likelihood ratio for a count vector, NaN when the
    /// sequence is impossible under both hypotheses.
    pub(crate) fn counts_llr(&self, counts: &[u32]) -> f64 {
        let mut total = 0.0;
        for (x, &c) in counts.iter().enumerate() {
            if c > 0 {
                total += f64::from(c) * self.symbol_llr(x);
            }
        }
        total
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hypothesis {
    Null,
    Alternative,
}

/// `log2(p0(x^n) / p1(x^n))` for any sequence with the given symbol counts.
pub fn seq_log_likelihood_ratio(pair: &HypothesisPair, counts: &[u32]) -> Result<f64> {
    if counts.len() != pair.alphabet_size() {
        return Err(Error::validation(format!(
            "counts have length {}, alphabet has {} symbols",
            counts.len(),
            pair.alphabet_size()
        )));
    }
    let llr = pair.counts_llr(counts);
    if llr.is_nan() {
        return Err(Error::validation(
            "sequence has zero probability under both hypotheses",
        ));
    }
    Ok(llr)
}

/// A set of sequences sharing one symbol-count vector.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeClass {
    pub counts: Vec<u32>,
    /// Number of sequences in the class (multinomial coefficient).
    pub multiplicity: BigUint,
    pub log2_multiplicity: f64,
}

impl TypeClass {
    pub fn n(&self) -> u32 {
        self.counts.iter().sum()
    }

    /// Base-2 log-probability of one representative sequence under `dist`.
    pub fn log_prob_under(&self, dist: &Distribution) -> f64 {
        dist.log2_prob_of_counts(&self.counts)
    }
}

/// `log2` of an arbitrarily large integer.
pub fn log2_biguint(v: &BigUint) -> f64 {
    let bits = v.bits();
    if bits <= 1000 {
        return v.to_f64().map_or(f64::NAN, f64::log2);
    }
    let shift = bits - 64;
    let top = (v >> shift).to_f64().unwrap_or(f64::NAN);
    top.log2() + shift as f64
}

fn binomial_big(n: u64, k: u64) -> BigUint {
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// Number of compositions of `n` into `alphabet_size` non-negative parts.
pub fn composition_count(alphabet_size: usize, n: u32) -> BigUint {
    binomial_big(u64::from(n) + alphabet_size as u64 - 1, alphabet_size as u64 - 1)
}

fn check_cap(what: &str, count: &BigUint, cap: u128) -> Result<()> {
    match count.to_u128() {
        Some(c) if c <= cap => Ok(()),
        Some(c) => Err(Error::Resource { what: what.into(), count: c, cap }),
        None => Err(Error::Resource { what: what.into(), count: u128::MAX, cap }),
    }
}

/// All type classes of length-`n` sequences over `alphabet_size` symbols, with the default cap.
pub fn enumerate_type_classes(alphabet_size: usize, n: u32) -> Result<Vec<TypeClass>> {
    enumerate_type_classes_capped(alphabet_size, n, DEFAULT_ENUMERATION_CAP)
}

/// All type classes, ordered with the count of symbol 0 descending
/// (for binary alphabets, index `k` has `k` copies of symbol 1).
pub fn enumerate_type_classes_capped(
    alphabet_size: usize,
    n: u32,
    cap: u128,
) -> Result<Vec<TypeClass>> {
    if alphabet_size < 2 {
        return Err(Error::validation("alphabet size must be at least 2"));
    }
    if n < 1 {
        return Err(Error::validation("sequence length must be at least 1"));
    }
    check_cap("type classes", &composition_count(alphabet_size, n), cap)?;

    let mut factorials = Vec::with_capacity(n as usize + 1);
    factorials.push(BigUint::one());
    for i in 1..=n {
        let next = &factorials[i as usize - 1] * BigUint::from(i);
        factorials.push(next);
    }

    let mut out = Vec::new();
    let mut counts = vec![0u32; alphabet_size];
    fill_compositions(&mut counts, 0, n, &mut |c| {
        let denom = c
            .iter()
            .fold(BigUint::one(), |acc, &k| acc * &factorials[k as usize]);
        let multiplicity = &factorials[n as usize] / denom;
        let log2_multiplicity = log2_biguint(&multiplicity);
        out.push(TypeClass { counts: c.to_vec(), multiplicity, log2_multiplicity });
    });
    Ok(out)
}

fn fill_compositions(counts: &mut [u32], pos: usize, remaining: u32, f: &mut impl FnMut(&[u32])) {
    if pos == counts.len() - 1 {
        counts[pos] = remaining;
        f(counts);
        return;
    }
    for c in (0..=remaining).rev() {
        counts[pos] = c;
        fill_compositions(counts, pos + 1, remaining - c, f);
    }
}

/// Exact per-type masses of a hypothesis pair at length `n`.
///
/// `mass(h, j)` is the total probability of type class `j` under `h`
/// (multiplicity times the representative's probability).
#[derive(Debug, Clone)]
pub struct TypeSpace {
    n: u32,
    classes: Vec<TypeClass>,
    log2_mass: [Vec<f64>; 2],
    mass: [Vec<f64>; 2],
    llr: Vec<f64>,
}

impl TypeSpace {
    pub fn new(pair: &HypothesisPair, n: u32) -> Result<Self> {
        Self::with_cap(pair, n, DEFAULT_ENUMERATION_CAP)
    }

    pub fn with_cap(pair: &HypothesisPair, n: u32, cap: u128) -> Result<Self> {
        let classes = enumerate_type_classes_capped(pair.alphabet_size(), n, cap)?;
        let log2_mass: [Vec<f64>; 2] = [&pair.p0, &pair.p1].map(|d| {
            classes
                .iter()
                .map(|c| c.log2_multiplicity + c.log_prob_under(d))
                .collect()
        });
        let mass = [0, 1].map(|i| log2_mass[i].iter().map(|l| l.exp2()).collect());
        let llr = classes.iter().map(|c| pair.counts_llr(&c.counts)).collect();
        Ok(TypeSpace { n, classes, log2_mass, mass, llr })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn classes(&self) -> &[TypeClass] {
        &self.classes
    }

    pub fn counts(&self, j: usize) -> &[u32] {
        &self.classes[j].counts
    }

    /// Sequence log-likelihood ratio of type `j` (bits); NaN if impossible under both.
    pub fn llr(&self, j: usize) -> f64 {
        self.llr[j]
    }

    pub fn mass(&self, h: Hypothesis, j: usize) -> f64 {
        self.mass[h as usize][j]
    }

    pub fn log2_mass(&self, h: Hypothesis, j: usize) -> f64 {
        self.log2_mass[h as usize][j]
    }

    /// `E_h[f]` where `f` is evaluated per type index. Zero-mass types are
    /// skipped, so `0 · ∞` contributes nothing.
    pub fn expect(&self, h: Hypothesis, f: impl Fn(usize) -> f64) -> f64 {
        let m = &self.mass[h as usize];
        let terms: Vec<f64> = (0..self.len())
            .filter(|&j| m[j] > 0.0)
            .map(|j| m[j] * f(j))
            .collect();
        pairwise_sum(&terms)
    }

    /// Total `h`-probability of the types selected by `keep`.
    pub fn probability(&self, h: Hypothesis, keep: impl Fn(usize) -> bool) -> f64 {
        self.expect(h, |j| if keep(j) { 1.0 } else { 0.0 })
    }
}

/// Visit every sequence in `alphabet^n` as a symbol slice. Independent of the
/// type-class path; intended for cross-checks at small `n`.
pub fn for_each_sequence(
    alphabet_size: usize,
    n: u32,
    cap: u128,
    mut f: impl FnMut(&[usize]),
) -> Result<()> {
    let total = BigUint::from(alphabet_size).pow(n);
    check_cap("sequences", &total, cap)?;
    let mut seq = vec![0usize; n as usize];
    loop {
        f(&seq);
        let mut i = 0;
        loop {
            if i == seq.len() {
                return Ok(());
            }
            seq[i] += 1;
            if seq[i] < alphabet_size {
                break;
            }
            seq[i] = 0;
            i += 1;
        }
    }
}

/// Symbol counts of a sequence.
pub fn counts_of(alphabet_size: usize, seq: &[usize]) -> Vec<u32> {
    let mut counts = vec![0u32; alphabet_size];
    for &s in seq {
        counts[s] += 1;
    }
    counts
}

/// Draw `n` i.i.d. symbols from `dist`, deterministically from `seed`.
pub fn sample_iid(dist: &Distribution, n: usize, seed: u64) -> Result<Vec<usize>> {
    if n < 1 {
        return Err(Error::validation("sample length must be at least 1"));
    }
    let weights = dist.probs();
    let sampler = WeightedIndex::new(&weights)
        .map_err(|e| Error::validation(format!("cannot sample: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n).map(|_| sampler.sample(&mut rng)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bern(theta: f64) -> Distribution {
        Distribution::from_weights(&[1.0 - theta, theta]).unwrap()
    }

    #[test]
    fn uniform_from_equal_weights() {
        let d = Distribution::from_weights(&[1.0, 1.0]).unwrap();
        assert_eq!(d.probs(), vec![0.5, 0.5]);
    }

    #[test]
    fn bernoulli_weights_are_kept() {
        let d = Distribution::from_weights(&[0.7, 0.3]).unwrap();
        assert!((d.prob(0) - 0.7).abs() < 1e-15);
        assert!((d.prob(1) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn invalid_weights_rejected() {
        assert!(Distribution::from_weights(&[-0.1, 1.1]).is_err());
        assert!(Distribution::from_weights(&[1.0]).is_err());
        assert!(Distribution::from_weights(&[0.0, 0.0]).is_err());
        assert!(Distribution::from_weights(&[f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn tiny_mass_survives_log_space() {
        let d = Distribution::from_log2_probs(vec![0.0, -2000.0]).unwrap();
        assert_eq!(d.log_probs()[1], -2000.0);
        assert_eq!(d.log_probs()[0], 0.0);
        assert_eq!(d.log2_prob_of_counts(&[3, 2]), -4000.0);
    }

    #[test]
    fn prior_validation() {
        assert!(Prior::new(0.3, 0.7).is_ok());
        assert!(Prior::new(0.3, 0.6).is_err());
        assert!(Prior::new(-0.1, 1.1).is_err());
    }

    #[test]
    fn llr_of_identical_distributions_is_zero() {
        let pair = HypothesisPair::new(bern(0.5), bern(0.5)).unwrap();
        assert_eq!(seq_log_likelihood_ratio(&pair, &[3, 7]).unwrap(), 0.0);
    }

    #[test]
    fn llr_two_symbol_example() {
        let pair = HypothesisPair::new(bern(0.5), bern(0.7)).unwrap();
        // log2(0.5/0.3) + log2(0.5/0.7), evaluated independently.
        let expected = (0.5f64 / 0.3).log2() + (0.5f64 / 0.7).log2();
        let got = seq_log_likelihood_ratio(&pair, &[1, 1]).unwrap();
        assert!((got - expected).abs() < 1e-14);
        assert!((got - 0.251_538_766_995_9).abs() < 1e-9);
    }

    #[test]
    fn llr_is_linear_in_n_for_constant_sequences() {
        let pair = HypothesisPair::new(bern(0.5), bern(0.7)).unwrap();
        let per = (0.5f64 / 0.7).log2();
        for n in [1u32, 5, 40] {
            let got = seq_log_likelihood_ratio(&pair, &[0, n]).unwrap();
            assert!((got - f64::from(n) * per).abs() < 1e-12);
            assert!(got < 0.0);
        }
    }

    #[test]
    fn llr_errors_and_infinities() {
        let p0 = Distribution::from_weights(&[1.0, 0.0, 1.0]).unwrap();
        let p1 = Distribution::from_weights(&[1.0, 0.0, 0.0]).unwrap();
        let pair = HypothesisPair::new(p0, p1).unwrap();
        assert!(seq_log_likelihood_ratio(&pair, &[1, 1]).is_err());
        assert!(seq_log_likelihood_ratio(&pair, &[1, 1, 0]).is_err());
        assert_eq!(seq_log_likelihood_ratio(&pair, &[1, 0, 1]).unwrap(), f64::INFINITY);
    }

    #[test]
    fn binomial_rows() {
        let mults = |k, n| -> Vec<u64> {
            enumerate_type_classes(k, n)
                .unwrap()
                .iter()
                .map(|c| c.multiplicity.to_u64().unwrap())
                .collect()
        };
        assert_eq!(mults(2, 2), vec![1, 2, 1]);
        assert_eq!(mults(2, 3), vec![1, 3, 3, 1]);
        let ternary = mults(3, 2);
        assert_eq!(ternary.len(), 6);
        assert_eq!(ternary.iter().sum::<u64>(), 9);
    }

    #[test]
    fn multiplicities_match_direct_enumeration() {
        for k in 2..=3usize {
            for n in 1..=8u32 {
                let mut tally = std::collections::BTreeMap::<Vec<u32>, u64>::new();
                for_each_sequence(k, n, u128::MAX, |s| *tally.entry(counts_of(k, s)).or_default() += 1)
                    .unwrap();
                let classes = enumerate_type_classes(k, n).unwrap();
                assert_eq!(classes.len(), tally.len());
                for c in classes {
                    assert_eq!(c.multiplicity.to_u64().unwrap(), tally[&c.counts]);
                }
            }
        }
    }

    #[test]
    fn cap_is_enforced() {
        let err = enumerate_type_classes_capped(3, 100, 1000).unwrap_err();
        match err {
            Error::Resource { count, cap, .. } => {
                assert_eq!(count, 5151);
                assert_eq!(cap, 1000);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(enumerate_type_classes(2, 0).is_err());
        assert!(enumerate_type_classes(1, 3).is_err());
    }

    #[test]
    fn large_multiplicities_stay_finite_in_log_space() {
        let classes = enumerate_type_classes(3, 1000).unwrap();
        assert!(classes.iter().all(|c| c.log2_multiplicity.is_finite()));
        let max = classes.iter().map(|c| c.log2_multiplicity).fold(0.0, f64::max);
        // log2 of the central trinomial coefficient is a bit below 1000·log2(3).
        assert!(max > 1500.0 && max < 1000.0 * 3f64.log2());
    }

    #[test]
    fn type_space_masses_sum_to_one() {
        let pair = HypothesisPair::new(bern(0.5), bern(0.7)).unwrap();
        let space = TypeSpace::new(&pair, 800).unwrap();
        for h in [Hypothesis::Null, Hypothesis::Alternative] {
            assert!((space.expect(h, |_| 1.0) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn point_mass_sampling() {
        let d = Distribution::from_weights(&[1.0, 0.0]).unwrap();
        assert!(sample_iid(&d, 50, 3).unwrap().iter().all(|&s| s == 0));
        assert!(sample_iid(&d, 0, 3).is_err());
    }

    #[test]
    fn sampling_is_deterministic_and_concentrates() {
        let d = bern(0.7);
        assert_eq!(sample_iid(&d, 100, 42).unwrap(), sample_iid(&d, 100, 42).unwrap());
        let s = sample_iid(&d, 100_000, 11).unwrap();
        let freq = s.iter().filter(|&&x| x == 1).count() as f64 / s.len() as f64;
        // sd of the frequency is ~0.0014, so 0.01 is a 7-sigma band.
        assert!((freq - 0.7).abs() < 0.01, "freq = {freq}");
    }

    #[test]
    fn distribution_json_round_trip() {
        let d = Distribution::from_weights(&[0.2, 0.3, 0.5]).unwrap();
        let json = serde_json::to_string(&d).unwrap();
        assert!(json.starts_with("{\"probs\":["));
        let back: Distribution = serde_json::from_str(&json).unwrap();
        for (a, b) in back.probs().iter().zip(d.probs()) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(serde_json::from_str::<Distribution>("{\"probs\":[-1,2]}").is_err());
    }
}
