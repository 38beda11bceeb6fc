//! Randomized tests and their exact ν-errors.
//!
//! A randomized test assigns each length-`n` sequence a probability of
//! rejecting `H0`. All tests here depend on the sequence only through its type,
//! and the closed-form ones only through the log-likelihood ratio
//! `t = log2(p0(x^n) / p1(x^n))`:
//!
//! - ν-MP (finite ν): reject with probability `1 / (1 + 2^(ν·(log2 λ + t)))`.
//! - ∞-MP: reject iff `t <= log2 λ`.
//! - ν-Bayes (finite ν): accept with probability `1 / (1 + 2^(-ν·s))`, where
//!   `s = log2(π0/π1) + t` is the posterior log-odds of `H0`.
//! - ∞-Bayes: accept iff `s >= 0`.
//!
//! Accept/reject probabilities are carried as natural logs so that decisions
//! within rounding of 0 or 1 keep their relative precision in the error sums.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dist::{composition_count, enumerate_type_classes, Hypothesis, HypothesisPair, Prior, TypeSpace};
use crate::error::{Error, Result};
use crate::loss::NuParam;
use crate::numeric::{bisect_decreasing, ln_logistic2};

#[derive(Debug, Clone, PartialEq)]
pub enum TestKind {
    NuMp { nu: f64, log2_lambda: f64 },
    InftyMp { log2_lambda: f64 },
    NuBayes { nu: f64, prior: Prior },
    InftyBayes { prior: Prior },
    /// Accept exactly on the relative typical set `|t/n - center| <= epsilon_prime`.
    Aep { epsilon_prime: f64, center: f64 },
    /// Arbitrary per-type rejection probabilities.
    Table { reject: BTreeMap<Vec<u32>, f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomizedTest {
    kind: TestKind,
    n: u32,
    alphabet_size: usize,
}

/// Natural logs of the accept and reject probabilities `(ln δ(·,0), ln δ(·,1))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LnDecision {
    pub accept: f64,
    pub reject: f64,
}

impl LnDecision {
    const ACCEPT: LnDecision = LnDecision { accept: 0.0, reject: f64::NEG_INFINITY };
    const REJECT: LnDecision = LnDecision { accept: f64::NEG_INFINITY, reject: 0.0 };

    fn from_reject_prob(r: f64) -> Self {
        LnDecision { accept: (-r).ln_1p(), reject: r.ln() }
    }

    pub fn reject_prob(&self) -> f64 {
        self.reject.exp()
    }
}

fn finite_nu(nu: NuParam, what: &str) -> Result<f64> {
    match nu {
        NuParam::Finite(v) => Ok(v),
        NuParam::Infinite => Err(Error::validation(format!(
            "{what} takes a finite ν; use the ∞ variant instead"
        ))),
    }
}

fn check_lambda(lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) || lambda.is_nan() {
        return Err(Error::validation(format!("λ must be positive, got {lambda}")));
    }
    Ok(lambda.log2())
}

fn check_n(n: u32) -> Result<()> {
    if n < 1 {
        return Err(Error::validation("sequence length must be at least 1"));
    }
    Ok(())
}

/// ν-MP test for finite ν with threshold `lambda`.
pub fn nu_mp_test(nu: NuParam, lambda: f64, pair: &HypothesisPair, n: u32) -> Result<RandomizedTest> {
    finite_nu(nu, "nu_mp_test")?;
    let log2_lambda = check_lambda(lambda)?;
    mp_test_log2(nu, log2_lambda, pair, n)
}

/// ∞-MP (likelihood-ratio) test: reject iff `p0/p1 <= lambda`.
pub fn infty_mp_test(lambda: f64, pair: &HypothesisPair, n: u32) -> Result<RandomizedTest> {
    let log2_lambda = check_lambda(lambda)?;
    mp_test_log2(NuParam::Infinite, log2_lambda, pair, n)
}

/// ν-MP test for any ν, with the threshold given as `log2 λ` (λ itself can
/// leave the `f64` range for long sequences).
pub fn mp_test_log2(nu: NuParam, log2_lambda: f64, pair: &HypothesisPair, n: u32) -> Result<RandomizedTest> {
    check_n(n)?;
    if log2_lambda.is_nan() {
        return Err(Error::validation("log2 λ is NaN"));
    }
    let kind = match nu {
        NuParam::Finite(nu) => TestKind::NuMp { nu, log2_lambda },
        NuParam::Infinite => TestKind::InftyMp { log2_lambda },
    };
    Ok(RandomizedTest { kind, n, alphabet_size: pair.alphabet_size() })
}

/// ν-Bayes test for the pair's prior.
pub fn bayes_test(nu: NuParam, pair: &HypothesisPair, n: u32) -> Result<RandomizedTest> {
    check_n(n)?;
    let prior = pair.require_prior()?;
    if !(prior.pi0 > 0.0 && prior.pi1 > 0.0) {
        return Err(Error::validation("the ν-Bayes test needs π0 > 0 and π1 > 0"));
    }
    let kind = match nu {
        NuParam::Finite(nu) => TestKind::NuBayes { nu, prior },
        NuParam::Infinite => TestKind::InftyBayes { prior },
    };
    Ok(RandomizedTest { kind, n, alphabet_size: pair.alphabet_size() })
}

fn counts_key(counts: &[u32]) -> String {
    counts.iter().map(u32::to_string).collect::<Vec<_>>().join(",")
}

impl RandomizedTest {
    pub fn kind(&self) -> &TestKind {
        &self.kind
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub(crate) fn aep(epsilon_prime: f64, center: f64, alphabet_size: usize, n: u32) -> Self {
        RandomizedTest { kind: TestKind::Aep { epsilon_prime, center }, n, alphabet_size }
    }

    /// A test given by explicit per-type rejection probabilities. Every type
    /// of length `n` must be present.
    pub fn table(alphabet_size: usize, n: u32, reject: BTreeMap<Vec<u32>, f64>) -> Result<Self> {
        check_n(n)?;
        if alphabet_size < 2 {
            return Err(Error::validation("alphabet size must be at least 2"));
        }
        for (counts, r) in &reject {
            if counts.len() != alphabet_size || counts.iter().sum::<u32>() != n {
                return Err(Error::validation(format!(
                    "type [{}] is not a length-{n} type over {alphabet_size} symbols",
                    counts_key(counts)
                )));
            }
            if !(0.0..=1.0).contains(r) {
                return Err(Error::validation(format!(
                    "rejection probability {r} for type [{}] is outside [0, 1]",
                    counts_key(counts)
                )));
            }
        }
        if num_bigint::BigUint::from(reject.len()) != composition_count(alphabet_size, n) {
            return Err(Error::validation("table does not cover every type class"));
        }
        Ok(RandomizedTest { kind: TestKind::Table { reject }, n, alphabet_size })
    }

    /// Tabulate an arbitrary per-type rejection rule.
    pub fn from_fn(alphabet_size: usize, n: u32, f: impl Fn(&[u32]) -> f64) -> Result<Self> {
        let reject = enumerate_type_classes(alphabet_size, n)?
            .into_iter()
            .map(|c| {
                let r = f(&c.counts);
                (c.counts, r)
            })
            .collect();
        Self::table(alphabet_size, n, reject)
    }

    /// A test that ignores the data and rejects with probability `reject`.
    pub fn constant(alphabet_size: usize, n: u32, reject: f64) -> Result<Self> {
        Self::from_fn(alphabet_size, n, |_| reject)
    }

    /// Whether the test's output is always 0 or 1.
    pub fn is_deterministic(&self) -> bool {
        match &self.kind {
            TestKind::InftyMp { .. } | TestKind::InftyBayes { .. } | TestKind::Aep { .. } => true,
            TestKind::Table { reject } => reject.values().all(|&r| r == 0.0 || r == 1.0),
            TestKind::NuMp { .. } | TestKind::NuBayes { .. } => false,
        }
    }

    /// Decision for a type given its counts and log-likelihood ratio (bits).
    pub fn ln_decision(&self, llr: f64, counts: &[u32]) -> LnDecision {
        match &self.kind {
            TestKind::NuMp { nu, log2_lambda } => {
                let y = nu * (log2_lambda + llr);
                LnDecision { accept: ln_logistic2(-y), reject: ln_logistic2(y) }
            }
            TestKind::InftyMp { log2_lambda } => {
                if llr <= *log2_lambda {
                    LnDecision::REJECT
                } else {
                    LnDecision::ACCEPT
                }
            }
            TestKind::NuBayes { nu, prior } => {
                let s = nu * (prior.log2_odds() + llr);
                LnDecision { accept: ln_logistic2(-s), reject: ln_logistic2(s) }
            }
            TestKind::InftyBayes { prior } => {
                if prior.log2_odds() + llr >= 0.0 {
                    LnDecision::ACCEPT
                } else {
                    LnDecision::REJECT
                }
            }
            TestKind::Aep { epsilon_prime, center } => {
                let per_symbol = llr / f64::from(self.n);
                if (per_symbol - center).abs() <= *epsilon_prime {
                    LnDecision::ACCEPT
                } else {
                    LnDecision::REJECT
                }
            }
            TestKind::Table { reject } => {
                let r = reject.get(counts).copied().unwrap_or(f64::NAN);
                LnDecision::from_reject_prob(r)
            }
        }
    }

    /// `δ(x^n, 1)` for any sequence with the given counts.
    pub fn reject_prob(&self, pair: &HypothesisPair, counts: &[u32]) -> Result<f64> {
        if counts.iter().sum::<u32>() != self.n {
            return Err(Error::validation(format!(
                "counts describe a sequence of length {}, test has n = {}",
                counts.iter().sum::<u32>(),
                self.n
            )));
        }
        let llr = match &self.kind {
            TestKind::Table { .. } => {
                if counts.len() != self.alphabet_size {
                    return Err(Error::validation("counts length does not match the alphabet"));
                }
                0.0
            }
            _ => crate::dist::seq_log_likelihood_ratio(pair, counts)?,
        };
        Ok(self.ln_decision(llr, counts).reject_prob())
    }

    /// Decisions for every type of `space`, in type order.
    pub fn decisions_on(&self, space: &TypeSpace) -> Vec<LnDecision> {
        (0..space.len())
            .map(|j| {
                let llr = space.llr(j);
                if llr.is_nan() {
                    // Impossible under both hypotheses; carries no mass.
                    LnDecision::ACCEPT
                } else {
                    self.ln_decision(llr, space.counts(j))
                }
            })
            .collect()
    }

    /// Per-type rejection probabilities on `space`.
    pub fn reject_probs_on(&self, space: &TypeSpace) -> Vec<f64> {
        self.decisions_on(space).iter().map(LnDecision::reject_prob).collect()
    }

    fn check_against(&self, pair: &HypothesisPair) -> Result<()> {
        if pair.alphabet_size() != self.alphabet_size {
            return Err(Error::validation(format!(
                "test is defined over {} symbols, pair over {}",
                self.alphabet_size,
                pair.alphabet_size()
            )));
        }
        Ok(())
    }
}

/// ν-type I error `E_0[L_ν(δ(X^n, 0))]` on precomputed decisions.
pub fn type1_on(space: &TypeSpace, decisions: &[LnDecision], nu: NuParam) -> f64 {
    space.expect(Hypothesis::Null, |j| nu.loss_from_ln(decisions[j].accept))
}

/// ν-type II error `E_1[L_ν(δ(X^n, 1))]` on precomputed decisions.
pub fn type2_on(space: &TypeSpace, decisions: &[LnDecision], nu: NuParam) -> f64 {
    space.expect(Hypothesis::Alternative, |j| nu.loss_from_ln(decisions[j].reject))
}

/// Exact ν-type I error of `test` under `H0`.
pub fn nu_type1_error(test: &RandomizedTest, pair: &HypothesisPair, nu: NuParam) -> Result<f64> {
    test.check_against(pair)?;
    let space = TypeSpace::new(pair, test.n)?;
    Ok(type1_on(&space, &test.decisions_on(&space), nu))
}

/// Exact ν-type II error of `test` under `H1`.
pub fn nu_type2_error(test: &RandomizedTest, pair: &HypothesisPair, nu: NuParam) -> Result<f64> {
    test.check_against(pair)?;
    let space = TypeSpace::new(pair, test.n)?;
    Ok(type2_on(&space, &test.decisions_on(&space), nu))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorPair {
    pub alpha: f64,
    pub beta_bar: f64,
    pub nu: NuParam,
    pub n: u32,
}

impl ErrorPair {
    pub fn on(space: &TypeSpace, test: &RandomizedTest, nu: NuParam) -> Self {
        let d = test.decisions_on(space);
        ErrorPair {
            alpha: type1_on(space, &d, nu),
            beta_bar: type2_on(space, &d, nu),
            nu,
            n: space.n(),
        }
    }

    pub fn of(test: &RandomizedTest, pair: &HypothesisPair, nu: NuParam) -> Result<Self> {
        test.check_against(pair)?;
        Ok(Self::on(&TypeSpace::new(pair, test.n)?, test, nu))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BayesRiskReport {
    pub risk: f64,
    pub alpha: f64,
    pub beta_bar: f64,
    pub prior: Prior,
}

fn weighted(w: f64, v: f64) -> f64 {
    if w == 0.0 {
        0.0
    } else {
        w * v
    }
}

impl BayesRiskReport {
    pub fn from_errors(errors: ErrorPair, prior: Prior) -> Self {
        BayesRiskReport {
            risk: weighted(prior.pi0, errors.alpha) + weighted(prior.pi1, errors.beta_bar),
            alpha: errors.alpha,
            beta_bar: errors.beta_bar,
            prior,
        }
    }
}

/// ν-Bayesian error `π0·α_ν + π1·β̄_ν` of `test`.
pub fn bayes_risk(nu: NuParam, test: &RandomizedTest, pair: &HypothesisPair) -> Result<BayesRiskReport> {
    let prior = pair.require_prior()?;
    Ok(BayesRiskReport::from_errors(ErrorPair::of(test, pair, nu)?, prior))
}

/// Result of threshold calibration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Calibration {
    pub log2_lambda: f64,
    /// `2^log2_lambda`; may under- or overflow for long sequences.
    pub lambda: f64,
    pub achieved_alpha: f64,
}

/// Iteration cap for λ bisection.
pub const CALIBRATION_MAX_ITER: usize = 200;
/// Required agreement between the achieved ν-type I error and ε (finite ν).
pub const CALIBRATION_TOL: f64 = 1e-9;

/// Find λ so that the ν-MP test has size ε.
///
/// Finite ν: `α_ν` is strictly decreasing in λ, so `log2 λ` is bisected until
/// `|α_ν - ε| <= 1e-9`. ν = ∞: `α` is a step function of λ; the result is the
/// largest rejection region with `α <= ε`, and λ is placed in the middle (in
/// log scale) of the plateau that produces it, away from any likelihood-ratio
/// level. `achieved_alpha` may then be strictly below ε.
pub fn calibrate_lambda(nu: NuParam, epsilon: f64, pair: &HypothesisPair, n: u32) -> Result<Calibration> {
    check_n(n)?;
    let space = TypeSpace::new(pair, n)?;
    calibrate_on(&space, pair, nu, epsilon)
}

pub fn calibrate_on(space: &TypeSpace, pair: &HypothesisPair, nu: NuParam, epsilon: f64) -> Result<Calibration> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::validation(format!("ε must lie in (0, 1), got {epsilon}")));
    }
    let alpha_at = |log2_lambda: f64| {
        let test = RandomizedTest {
            kind: match nu {
                NuParam::Finite(nu) => TestKind::NuMp { nu, log2_lambda },
                NuParam::Infinite => TestKind::InftyMp { log2_lambda },
            },
            n: space.n(),
            alphabet_size: pair.alphabet_size(),
        };
        type1_on(space, &test.decisions_on(space), nu)
    };

    let log2_lambda = match nu {
        NuParam::Finite(_) => {
            let (lo_llr, hi_llr) = (0..space.len())
                .map(|j| space.llr(j))
                .filter(|l| l.is_finite())
                .fold((0.0f64, 0.0f64), |(lo, hi), l| (lo.min(l), hi.max(l)));
            // At these ends every finite-ratio type sits at least 64 bits deep
            // in the logistic tail.
            let lo = -hi_llr - 64.0;
            let hi = -lo_llr + 64.0;
            bisect_decreasing(alpha_at, lo, hi, epsilon, 1e-13, CALIBRATION_TOL, CALIBRATION_MAX_ITER)?.0
        }
        NuParam::Infinite => infinite_nu_threshold(space, epsilon),
    };
    Ok(Calibration {
        log2_lambda,
        lambda: log2_lambda.exp2(),
        achieved_alpha: alpha_at(log2_lambda),
    })
}

fn infinite_nu_threshold(space: &TypeSpace, epsilon: f64) -> f64 {
    let mut levels: Vec<(f64, f64)> = (0..space.len())
        .filter(|&j| space.llr(j).is_finite())
        .map(|j| (space.llr(j), space.mass(Hypothesis::Null, j)))
        .collect();
    if levels.is_empty() {
        return 0.0;
    }
    levels.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Group numerically equal ratios so a plateau boundary never splits a level.
    let same = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0);
    let mut groups: Vec<(f64, f64, f64)> = Vec::new(); // (min, max, mass)
    for (l, m) in levels {
        match groups.last_mut() {
            Some(g) if same(g.1, l) => {
                g.1 = l;
                g.2 += m;
            }
            _ => groups.push((l, l, m)),
        }
    }
    let mut cumulative = 0.0;
    let mut last_ok: Option<usize> = None;
    for (i, g) in groups.iter().enumerate() {
        cumulative += g.2;
        if cumulative <= epsilon * (1.0 + 1e-12) {
            last_ok = Some(i);
        } else {
            break;
        }
    }
    match last_ok {
        None => groups[0].0 - 1.0,
        Some(i) if i + 1 < groups.len() => 0.5 * (groups[i].1 + groups[i + 1].0),
        Some(i) => groups[i].1 + 1.0,
    }
}

/// Calibrate and build the ν-MP test of size ε in one step.
pub fn calibrated_mp_test(
    nu: NuParam,
    epsilon: f64,
    pair: &HypothesisPair,
    n: u32,
) -> Result<(RandomizedTest, Calibration)> {
    let cal = calibrate_lambda(nu, epsilon, pair, n)?;
    Ok((mp_test_log2(nu, cal.log2_lambda, pair, n)?, cal))
}

/// Wire form of a test: `{"kind": ..., "nu": ..., "lambda": ..., "n": ...}`.
/// Tables list their rejection probabilities keyed by comma-joined count vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestDescription {
    pub kind: String,
    pub n: u32,
    pub alphabet_size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<NuParam>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log2_lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<Prior>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon_prime: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reject_probs: Option<BTreeMap<String, f64>>,
}

impl From<&RandomizedTest> for TestDescription {
    fn from(t: &RandomizedTest) -> Self {
        let mut d = TestDescription {
            kind: String::new(),
            n: t.n,
            alphabet_size: t.alphabet_size,
            nu: None,
            lambda: None,
            log2_lambda: None,
            prior: None,
            epsilon_prime: None,
            center: None,
            reject_probs: None,
        };
        match &t.kind {
            TestKind::NuMp { nu, log2_lambda } => {
                d.kind = "nu_mp".into();
                d.nu = Some(NuParam::Finite(*nu));
                d.lambda = Some(log2_lambda.exp2());
                d.log2_lambda = Some(*log2_lambda);
            }
            TestKind::InftyMp { log2_lambda } => {
                d.kind = "infty_mp".into();
                d.nu = Some(NuParam::Infinite);
                d.lambda = Some(log2_lambda.exp2());
                d.log2_lambda = Some(*log2_lambda);
            }
            TestKind::NuBayes { nu, prior } => {
                d.kind = "nu_bayes".into();
                d.nu = Some(NuParam::Finite(*nu));
                d.prior = Some(*prior);
            }
            TestKind::InftyBayes { prior } => {
                d.kind = "infty_bayes".into();
                d.nu = Some(NuParam::Infinite);
                d.prior = Some(*prior);
            }
            TestKind::Aep { epsilon_prime, center } => {
                d.kind = "aep".into();
                d.epsilon_prime = Some(*epsilon_prime);
                d.center = Some(*center);
            }
            TestKind::Table { reject } => {
                d.kind = "table".into();
                d.reject_probs = Some(reject.iter().map(|(k, v)| (counts_key(k), *v)).collect());
            }
        }
        d
    }
}

fn missing(field: &str, kind: &str) -> Error {
    Error::validation(format!("test kind '{kind}' needs field '{field}'"))
}

impl TryFrom<TestDescription> for RandomizedTest {
    type Error = Error;

    fn try_from(d: TestDescription) -> Result<Self> {
        check_n(d.n)?;
        let log2_lambda = || -> Result<f64> {
            match (d.log2_lambda, d.lambda) {
                (Some(l), _) => Ok(l),
                (None, Some(l)) => check_lambda(l),
                (None, None) => Err(missing("lambda", &d.kind)),
            }
        };
        let nu = || d.nu.ok_or_else(|| missing("nu", &d.kind));
        let prior = || d.prior.ok_or_else(|| missing("prior", &d.kind));
        let kind = match d.kind.as_str() {
            "nu_mp" => TestKind::NuMp { nu: finite_nu(nu()?, "nu_mp")?, log2_lambda: log2_lambda()? },
            "infty_mp" => TestKind::InftyMp { log2_lambda: log2_lambda()? },
            "nu_bayes" => TestKind::NuBayes { nu: finite_nu(nu()?, "nu_bayes")?, prior: prior()? },
            "infty_bayes" => TestKind::InftyBayes { prior: prior()? },
            "aep" => TestKind::Aep {
                epsilon_prime: d.epsilon_prime.ok_or_else(|| missing("epsilon_prime", "aep"))?,
                center: d.center.ok_or_else(|| missing("center", "aep"))?,
            },
            "table" => {
                let probs = d.reject_probs.clone().ok_or_else(|| missing("reject_probs", "table"))?;
                let mut reject = BTreeMap::new();
                for (key, v) in probs {
                    let counts = key
                        .split(',')
                        .map(|s| s.trim().parse::<u32>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|_| Error::validation(format!("bad count vector key '{key}'")))?;
                    reject.insert(counts, v);
                }
                return RandomizedTest::table(d.alphabet_size, d.n, reject);
            }
            other => return Err(Error::validation(format!("unknown test kind '{other}'"))),
        };
        Ok(RandomizedTest { kind, n: d.n, alphabet_size: d.alphabet_size })
    }
}

impl Serialize for RandomizedTest {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TestDescription::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for RandomizedTest {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        RandomizedTest::try_from(TestDescription::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}
