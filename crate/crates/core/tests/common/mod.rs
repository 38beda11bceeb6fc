//! Independent reference computations for the integration tests. Nothing here
//! calls into the library's enumeration or exponent code.

#![allow(dead_code)]

use tunable_ht::{Distribution, HypothesisPair, NuParam, Prior};

pub fn bern(theta: f64) -> Distribution {
    Distribution::from_weights(&[1.0 - theta, theta]).unwrap()
}

pub fn bern_pair(t0: f64, t1: f64) -> HypothesisPair {
    HypothesisPair::new(bern(t0), bern(t1)).unwrap()
}

pub fn paper_pair() -> HypothesisPair {
    bern_pair(0.5, 0.7).with_prior(Prior::uniform())
}

pub fn nu(v: f64) -> NuParam {
    NuParam::new(v).unwrap()
}

/// Every sequence of length `n` over `0..alphabet`, in lexicographic order.
pub fn all_sequences(alphabet: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|s| {
                (0..alphabet).map(move |a| {
                    let mut t = s.clone();
                    t.push(a);
                    t
                })
            })
            .collect();
    }
    out
}

pub fn counts(alphabet: usize, seq: &[usize]) -> Vec<u32> {
    let mut c = vec![0u32; alphabet];
    for &s in seq {
        c[s] += 1;
    }
    c
}

pub fn seq_prob(p: &[f64], seq: &[usize]) -> f64 {
    seq.iter().map(|&s| p[s]).product()
}

/// Direct ν-loss with plain powers and logs (log-loss in nats).
pub fn loss(nu: f64, p: f64) -> f64 {
    if nu == 1.0 {
        -p.ln()
    } else if nu.is_infinite() {
        1.0 - p
    } else {
        nu / (nu - 1.0) * (1.0 - p.powf((nu - 1.0) / nu))
    }
}

/// `log2 C(n, k)` by summing logarithms.
pub fn log2_binomial(n: u32, k: u32) -> f64 {
    let k = k.min(n - k);
    (0..k).map(|i| f64::from(n - i).log2() - f64::from(i + 1).log2()).sum()
}

/// Binomial pmf of `k` successes, computed in log space.
pub fn binomial_pmf(n: u32, k: u32, theta: f64) -> f64 {
    let lp = log2_binomial(n, k)
        + if k == 0 { 0.0 } else { f64::from(k) * theta.log2() }
        + if k == n { 0.0 } else { f64::from(n - k) * (1.0 - theta).log2() };
    lp.exp2()
}

pub fn kl_bits(p0: &[f64], p1: &[f64]) -> f64 {
    p0.iter()
        .zip(p1)
        .filter(|(a, _)| **a > 0.0)
        .map(|(a, b)| a * (a / b).log2())
        .sum()
}

/// `-min_λ log2 Σ p0^λ p1^(1-λ)` over `points` evenly spaced λ in `[0, 1]`.
pub fn chernoff_grid(p0: &[f64], p1: &[f64], points: usize) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..points {
        let l = i as f64 / (points - 1) as f64;
        let s: f64 = p0
            .iter()
            .zip(p1)
            .map(|(a, b)| {
                let x = if l == 0.0 { if *a > 0.0 { 1.0 } else { 0.0 } } else { a.powf(l) };
                let y = if l == 1.0 { if *b > 0.0 { 1.0 } else { 0.0 } } else { b.powf(1.0 - l) };
                x * y
            })
            .sum();
        best = best.min(s.log2());
    }
    -best
}

/// `Σ p0^s p1^(1-s)` with plain powers (all entries positive).
pub fn affinity(p0: &[f64], p1: &[f64], s: f64) -> f64 {
    p0.iter().zip(p1).map(|(a, b)| a.powf(s) * b.powf(1.0 - s)).sum()
}
