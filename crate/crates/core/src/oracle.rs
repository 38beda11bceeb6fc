//! Brute-force checks of the closed-form tests.
//!
//! Both the Neyman–Pearson Lagrangian `β̄_ν + μ·α_ν` and the Bayes risk
//! `π0·α_ν + π1·β̄_ν` are sums over sequences of a scalar function of the
//! accept probability `δ0`:
//!
//! ```text
//!   w_accept · L_ν(δ0) + w_reject · L_ν(1 - δ0)
//! ```
//!
//! with `w_accept = μ·p0(x^n)`, `w_reject = p1(x^n)` (Neyman–Pearson) or
//! `w_accept = π0·p0(x^n)`, `w_reject = π1·p1(x^n)` (Bayes). Each type is
//! minimised independently by a dense grid scan with zoomed refinement,
//! without using any closed form.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::decision::{
    bayes_test, calibrate_on, mp_test_log2, type1_on, type2_on, LnDecision, RandomizedTest,
};
use crate::dist::{Hypothesis, HypothesisPair, TypeSpace};
use crate::error::{Error, Result};
use crate::loss::NuParam;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleConfig {
    /// Points on the initial grid `{0, 1/(G-1), ..., 1}`.
    pub grid_points: usize,
    /// Each round rescans `[x* - h, x* + h]` with step `h / 100`.
    pub refinement_rounds: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { grid_points: 2001, refinement_rounds: 2 }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_points < 11 {
            return Err(Error::validation(format!(
                "oracle grid needs at least 11 points, got {}",
                self.grid_points
            )));
        }
        Ok(())
    }

    /// Spacing of the initial grid, `1/(G-1)`.
    pub fn step(&self) -> f64 {
        1.0 / (self.grid_points - 1) as f64
    }
}

const ZOOM: usize = 100;

fn objective(nu: NuParam, w_accept: f64, w_reject: f64, accept: f64) -> f64 {
    let term = |w: f64, ln_p: f64| if w == 0.0 { 0.0 } else { w * nu.loss_from_ln(ln_p) };
    term(w_accept, accept.ln()) + term(w_reject, (-accept).ln_1p())
}

/// Grid-minimise the per-type objective over the accept probability.
pub fn minimize_accept(nu: NuParam, w_accept: f64, w_reject: f64, cfg: &OracleConfig) -> f64 {
    let f = |x: f64| objective(nu, w_accept, w_reject, x);
    let g = cfg.grid_points;
    let mut best_x = 0.0;
    let mut best_f = f(0.0);
    for j in 1..g {
        let x = j as f64 / (g - 1) as f64;
        let fx = f(x);
        if fx < best_f {
            best_x = x;
            best_f = fx;
        }
    }
    let mut h = cfg.step();
    for _ in 0..cfg.refinement_rounds {
        let step = h / ZOOM as f64;
        let lo = best_x - h;
        for i in 0..=2 * ZOOM {
            let x = lo + i as f64 * step;
            if !(0.0..=1.0).contains(&x) || i == ZOOM {
                continue;
            }
            let fx = f(x);
            if fx < best_f {
                best_x = x;
                best_f = fx;
            }
        }
        h = step;
    }
    best_x
}

/// Normalised weights from base-2 log-weights; both zero if both are `-inf`.
fn weights(log2_a: f64, log2_b: f64) -> (f64, f64) {
    let m = log2_a.max(log2_b);
    if m == f64::NEG_INFINITY || m.is_nan() {
        return (0.0, 0.0);
    }
    ((log2_a - m).exp2(), (log2_b - m).exp2())
}

/// Per-type oracle rejection probabilities.
fn oracle_rejects(
    space: &TypeSpace,
    nu: NuParam,
    log2_accept_scale: f64,
    log2_reject_scale: f64,
    cfg: &OracleConfig,
) -> Vec<f64> {
    (0..space.len())
        .map(|j| {
            let la = log2_accept_scale + space.log2_mass(Hypothesis::Null, j);
            let lr = log2_reject_scale + space.log2_mass(Hypothesis::Alternative, j);
            let (wa, wr) = weights(la, lr);
            1.0 - minimize_accept(nu, wa, wr, cfg)
        })
        .collect()
}

fn to_table(space: &TypeSpace, rejects: &[f64], alphabet_size: usize) -> Result<RandomizedTest> {
    let reject = (0..space.len())
        .map(|j| (space.counts(j).to_vec(), rejects[j].clamp(0.0, 1.0)))
        .collect();
    RandomizedTest::table(alphabet_size, space.n(), reject)
}

/// Grid minimiser of `β̄_ν + μ·α_ν`, type by type.
pub fn lagrangian_mp_oracle(
    nu: NuParam,
    mu: f64,
    pair: &HypothesisPair,
    n: u32,
    cfg: &OracleConfig,
) -> Result<RandomizedTest> {
    cfg.validate()?;
    if !(mu >= 0.0) {
        return Err(Error::validation(format!("μ must be non-negative, got {mu}")));
    }
    let space = TypeSpace::new(pair, n)?;
    let rejects = oracle_rejects(&space, nu, mu.log2(), 0.0, cfg);
    to_table(&space, &rejects, pair.alphabet_size())
}

/// Grid minimiser of the ν-Bayesian error, type by type.
pub fn bayes_oracle(nu: NuParam, pair: &HypothesisPair, n: u32, cfg: &OracleConfig) -> Result<RandomizedTest> {
    cfg.validate()?;
    let prior = pair.require_prior()?;
    let space = TypeSpace::new(pair, n)?;
    let rejects = oracle_rejects(&space, nu, prior.pi0.log2(), prior.pi1.log2(), cfg);
    to_table(&space, &rejects, pair.alphabet_size())
}

/// Multiplier that makes the ν-MP test with threshold λ a stationary point of
/// the Lagrangian: μ = λ for finite ν, μ = 1/λ for ν = ∞ (the ∞-MP threshold
/// is stated on `p0/p1` rather than on the weighted ratio).
pub fn multiplier_for(nu: NuParam, log2_lambda: f64) -> f64 {
    match nu {
        NuParam::Finite(_) => log2_lambda,
        NuParam::Infinite => -log2_lambda,
    }
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn errors_of(space: &TypeSpace, rejects: &[f64], nu: NuParam) -> (f64, f64) {
    let d: Vec<LnDecision> = rejects
        .iter()
        .map(|&r| LnDecision { accept: (-r).ln_1p(), reject: r.ln() })
        .collect();
    (type1_on(space, &d, nu), type2_on(space, &d, nu))
}

fn perturb(base: &[f64], rng: &mut ChaCha8Rng, step: f64) -> Vec<f64> {
    let scale = [step, 10.0 * step, 0.1][rng.gen_range(0..3)];
    base.iter()
        .map(|&r| (r + rng.gen_range(-scale..=scale)).clamp(0.0, 1.0))
        .collect()
}

/// Perturbed tables tried around the oracle and the closed form.
pub const PERTURBATIONS: usize = 64;
/// Slack on optimality comparisons.
pub const OPTIMALITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MpVerification {
    pub nu: NuParam,
    pub epsilon: f64,
    pub n: u32,
    pub log2_lambda: f64,
    pub alpha: f64,
    pub beta_bar: f64,
    /// Largest per-type gap between oracle and closed-form rejection probabilities.
    pub max_gap: f64,
    pub gap_tolerance: f64,
    /// Smallest `β̄_ν(T) - β̄_ν(ν-MP)` over tried tests with `α_ν(T) <= α_ν(ν-MP)`.
    pub worst_feasible_margin: f64,
    /// Smallest Lagrangian excess over the closed form, relative to its scale.
    pub worst_lagrangian_margin: f64,
    pub feasible_tried: usize,
    pub passed: bool,
}

/// Check the ν-MP test of size ε against the Lagrangian oracle and against
/// random perturbations.
pub fn verify_mp_instance(
    nu: NuParam,
    epsilon: f64,
    pair: &HypothesisPair,
    n: u32,
    cfg: &OracleConfig,
    seed: u64,
) -> Result<MpVerification> {
    cfg.validate()?;
    let space = TypeSpace::new(pair, n)?;
    let cal = calibrate_on(&space, pair, nu, epsilon)?;
    let closed = mp_test_log2(nu, cal.log2_lambda, pair, n)?.reject_probs_on(&space);
    let log2_mu = multiplier_for(nu, cal.log2_lambda);
    let oracle = oracle_rejects(&space, nu, log2_mu, 0.0, cfg);
    let gap = max_gap(&closed, &oracle);
    let gap_tolerance = 2.0 * cfg.step();

    let (alpha, beta) = errors_of(&space, &closed, nu);
    let mu = log2_mu.exp2();
    let lagrangian = |a: f64, b: f64| b + if mu == 0.0 { 0.0 } else { mu * a };
    let reference = lagrangian(alpha, beta);
    let scale = reference.abs().max(1.0);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut candidates = vec![oracle.clone()];
    for i in 0..PERTURBATIONS {
        let base = if i % 2 == 0 { &oracle } else { &closed };
        candidates.push(perturb(base, &mut rng, cfg.step()));
    }
    let mut worst_feasible = f64::INFINITY;
    let mut worst_lagrangian = f64::INFINITY;
    let mut feasible_tried = 0;
    for c in &candidates {
        let (a, b) = errors_of(&space, c, nu);
        if a <= alpha {
            feasible_tried += 1;
            worst_feasible = worst_feasible.min(b - beta);
        }
        let l = lagrangian(a, b);
        if l.is_finite() {
            worst_lagrangian = worst_lagrangian.min((l - reference) / scale);
        }
    }
    let gap_ok = gap <= gap_tolerance;
    let passed = gap_ok
        && worst_feasible >= -OPTIMALITY_TOL
        && worst_lagrangian >= -OPTIMALITY_TOL;
    Ok(MpVerification {
        nu,
        epsilon,
        n,
        log2_lambda: cal.log2_lambda,
        alpha,
        beta_bar: beta,
        max_gap: gap,
        gap_tolerance,
        worst_feasible_margin: worst_feasible,
        worst_lagrangian_margin: worst_lagrangian,
        feasible_tried,
        passed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BayesVerification {
    pub nu: NuParam,
    pub n: u32,
    pub pi0: f64,
    pub risk: f64,
    pub oracle_risk: f64,
    /// Per-type gap; only asserted for finite ν, where the optimum is unique.
    pub max_gap: f64,
    pub gap_tolerance: f64,
    pub pointwise_checked: bool,
    /// Smallest `risk(T) - risk(ν-Bayes)` over the oracle and its perturbations.
    pub worst_margin: f64,
    pub passed: bool,
}

/// Check the ν-Bayes test against the Bayes oracle and random perturbations.
pub fn verify_bayes_instance(
    nu: NuParam,
    pair: &HypothesisPair,
    n: u32,
    cfg: &OracleConfig,
    seed: u64,
) -> Result<BayesVerification> {
    cfg.validate()?;
    let prior = pair.require_prior()?;
    let space = TypeSpace::new(pair, n)?;
    let closed = bayes_test(nu, pair, n)?.reject_probs_on(&space);
    let oracle = oracle_rejects(&space, nu, prior.pi0.log2(), prior.pi1.log2(), cfg);
    let risk_of = |r: &[f64]| {
        let (a, b) = errors_of(&space, r, nu);
        let w = |p: f64, v: f64| if p == 0.0 { 0.0 } else { p * v };
        w(prior.pi0, a) + w(prior.pi1, b)
    };
    let risk = risk_of(&closed);
    let oracle_risk = risk_of(&oracle);
    let gap = max_gap(&closed, &oracle);
    let gap_tolerance = 2.0 * cfg.step();
    let pointwise_checked = !nu.is_infinite();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = oracle_risk - risk;
    for i in 0..PERTURBATIONS {
        let base = if i % 2 == 0 { &oracle } else { &closed };
        let c = perturb(base, &mut rng, cfg.step());
        worst = worst.min(risk_of(&c) - risk);
    }
    let passed = (!pointwise_checked || gap <= gap_tolerance) && worst >= -OPTIMALITY_TOL;
    Ok(BayesVerification {
        nu,
        n,
        pi0: prior.pi0,
        risk,
        oracle_risk,
        max_gap: gap,
        gap_tolerance,
        pointwise_checked,
        worst_margin: worst,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{Distribution, Prior};

    fn bern(theta: f64) -> Distribution {
        Distribution::from_weights(&[1.0 - theta, theta]).unwrap()
    }

    fn pair() -> HypothesisPair {
        HypothesisPair::new(bern(0.5), bern(0.7)).unwrap()
    }

    fn nu(v: f64) -> NuParam {
        NuParam::new(v).unwrap()
    }

    fn rejects(t: &RandomizedTest, p: &HypothesisPair) -> Vec<f64> {
        t.reject_probs_on(&TypeSpace::new(p, t.n()).unwrap())
    }

    #[test]
    fn config_validation() {
        assert!(OracleConfig { grid_points: 10, refinement_rounds: 0 }.validate().is_err());
        assert!(OracleConfig::default().validate().is_ok());
    }

    #[test]
    fn zero_multiplier_rejects_everything() {
        let t = lagrangian_mp_oracle(nu(2.0), 0.0, &pair(), 4, &OracleConfig::default()).unwrap();
        assert!(rejects(&t, &pair()).iter().all(|&r| r == 1.0));
    }

    #[test]
    fn huge_multiplier_accepts_everything() {
        let t = lagrangian_mp_oracle(nu(2.0), 1e30, &pair(), 4, &OracleConfig::default()).unwrap();
        assert!(rejects(&t, &pair()).iter().all(|&r| r < 1e-9));
    }

    #[test]
    fn mp_oracle_matches_closed_form_at_calibrated_lambda() {
        let p = pair();
        let cfg = OracleConfig::default();
        let (closed, cal) = crate::decision::calibrated_mp_test(nu(2.0), 0.2, &p, 4).unwrap();
        let oracle = lagrangian_mp_oracle(nu(2.0), cal.lambda, &p, 4, &cfg).unwrap();
        let gap = max_gap(&rejects(&closed, &p), &rejects(&oracle, &p));
        assert!(gap <= 2.0 * cfg.step(), "gap {gap}");
    }

    #[test]
    fn degenerate_prior_accepts_everything() {
        let p = pair().with_prior(Prior::new(1.0, 0.0).unwrap());
        let t = bayes_oracle(nu(2.0), &p, 3, &OracleConfig::default()).unwrap();
        assert!(rejects(&t, &p).iter().all(|&r| r == 0.0));
    }

    #[test]
    fn bayes_oracle_matches_closed_form() {
        let p = pair().with_prior(Prior::uniform());
        let cfg = OracleConfig::default();
        let oracle = bayes_oracle(nu(2.0), &p, 3, &cfg).unwrap();
        let closed = bayes_test(nu(2.0), &p, 3).unwrap();
        let gap = max_gap(&rejects(&closed, &p), &rejects(&oracle, &p));
        assert!(gap <= 2.0 * cfg.step(), "gap {gap}");
    }

    #[test]
    fn infinite_nu_oracle_sits_on_endpoints() {
        let p = pair().with_prior(Prior::new(0.4, 0.6).unwrap());
        let t = bayes_oracle(NuParam::Infinite, &p, 5, &OracleConfig::default()).unwrap();
        assert!(rejects(&t, &p).iter().all(|&r| r == 0.0 || r == 1.0));
        let v = verify_bayes_instance(NuParam::Infinite, &p, 5, &OracleConfig::default(), 1).unwrap();
        assert!(v.passed, "{v:?}");
    }

    #[test]
    fn refinement_tightens_the_minimiser() {
        // Closed-form minimiser of w·L_2(x) + (1-w)·L_2(1-x) is w²/(w² + (1-w)²).
        let w = 0.37;
        let exact = w * w / (w * w + (1.0 - w) * (1.0 - w));
        let coarse = OracleConfig { grid_points: 101, refinement_rounds: 0 };
        let fine = OracleConfig { grid_points: 101, refinement_rounds: 2 };
        let a = (minimize_accept(nu(2.0), w, 1.0 - w, &coarse) - exact).abs();
        let b = (minimize_accept(nu(2.0), w, 1.0 - w, &fine) - exact).abs();
        assert!(a <= coarse.step());
        assert!(b <= coarse.step() / 1e4 + 1e-12, "{b}");
    }

    #[test]
    fn verification_passes_on_the_bernoulli_example() {
        let p = pair();
        for v in [nu(1.0), nu(2.0), NuParam::Infinite] {
            let r = verify_mp_instance(v, 0.2, &p, 5, &OracleConfig::default(), 3).unwrap();
            assert!(r.passed, "{r:?}");
        }
    }
}
