//! The tunable ν-loss.
//!
//! For a randomized decision that puts probability `p` on the correct action:
//!
//! | ν          | loss                                |
//! |------------|-------------------------------------|
//! | 1          | `-ln p` (log-loss)                  |
//! | (1, ∞)     | `ν/(ν-1) · (1 - p^((ν-1)/ν))`        |
//! | ∞          | `1 - p` (soft 0-1 loss)             |
//!
//! The log-loss is in nats, which is the ν → 1 limit of the middle row, so
//! the family is continuous in ν. Error exponents are still reported in bits;
//! rescaling a loss by a constant does not change any exponent.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Finite values in `(1, 1 + NEAR_ONE_GAP)` are rejected: `ν/(ν-1)` cancels
/// catastrophically there. Use ν = 1 exactly instead.
pub const NEAR_ONE_GAP: f64 = 1e-9;

/// The tunable parameter ν ∈ [1, ∞].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NuParam {
    Finite(f64),
    Infinite,
}

impl NuParam {
    pub fn finite(nu: f64) -> Result<Self> {
        if !nu.is_finite() || nu < 1.0 {
            return Err(Error::validation(format!("ν must be a real ≥ 1, got {nu}")));
        }
        if nu > 1.0 && nu < 1.0 + NEAR_ONE_GAP {
            return Err(Error::validation(format!(
                "ν = {nu} is within {NEAR_ONE_GAP} of 1; use ν = 1 exactly"
            )));
        }
        Ok(NuParam::Finite(nu))
    }

    /// Accepts `f64::INFINITY` as the infinite variant.
    pub fn new(nu: f64) -> Result<Self> {
        if nu == f64::INFINITY {
            Ok(NuParam::Infinite)
        } else {
            Self::finite(nu)
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, NuParam::Infinite)
    }

    pub fn is_log_loss(&self) -> bool {
        matches!(self, NuParam::Finite(v) if *v == 1.0)
    }

    pub fn value(&self) -> f64 {
        match self {
            NuParam::Finite(v) => *v,
            NuParam::Infinite => f64::INFINITY,
        }
    }

    /// `ν/(ν-1)`: the supremum of the loss. Infinite for ν = 1, 1 for ν = ∞.
    pub fn loss_ceiling(&self) -> f64 {
        match self {
            NuParam::Finite(v) if *v == 1.0 => f64::INFINITY,
            NuParam::Finite(v) => v / (v - 1.0),
            NuParam::Infinite => 1.0,
        }
    }

    /// ν-loss as a function of `ln p`. This is the form used by every error
    /// computation in the crate: it stays accurate when `p` is within
    /// rounding of 1, and it never forms `p` explicitly when `p` underflows.
    pub fn loss_from_ln(&self, ln_p: f64) -> f64 {
        // `+ 0.0` turns the `-0.0` produced at p = 1 into `0.0`.
        0.0 + match self {
            NuParam::Finite(v) if *v == 1.0 => -ln_p,
            NuParam::Finite(v) => -(v / (v - 1.0)) * ((v - 1.0) / v * ln_p).exp_m1(),
            NuParam::Infinite => -ln_p.exp_m1(),
        }
    }
}

impl fmt::Display for NuParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NuParam::Finite(v) => write!(f, "{v}"),
            NuParam::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for NuParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "∞" => Ok(NuParam::Infinite),
            other => other
                .parse::<f64>()
                .map_err(|_| Error::validation(format!("cannot parse ν from '{other}'")))
                .and_then(NuParam::new),
        }
    }
}

impl Serialize for NuParam {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            NuParam::Finite(v) => s.serialize_f64(*v),
            NuParam::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for NuParam {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => NuParam::new(v),
            Repr::Text(t) => t.parse(),
        }
        .map_err(serde::de::Error::custom)
    }
}

/// ν-loss of a decision that puts probability `p` on the correct action.
pub fn nu_loss(nu: NuParam, p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::validation(format!("p must lie in [0, 1], got {p}")));
    }
    Ok(nu.loss_from_ln(p.ln()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossPoint {
    pub nu: NuParam,
    pub p: f64,
    pub loss: f64,
}

/// Tabulate the ν-loss on `points` evenly spaced values of `p` in `(0, 1]`
/// (`p = k / points` for `k = 1..=points`), for every ν in `nus`.
pub fn loss_curve(nus: &[NuParam], points: usize) -> Result<Vec<LossPoint>> {
    if points < 2 {
        return Err(Error::validation("loss curve needs at least 2 grid points"));
    }
    let mut out = Vec::with_capacity(nus.len() * points);
    for &nu in nus {
        for k in 1..=points {
            let p = k as f64 / points as f64;
            out.push(LossPoint { nu, p, loss: nu_loss(nu, p)? });
        }
    }
    Ok(out)
}
