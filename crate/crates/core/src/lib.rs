//! Simple (binary) hypothesis testing with randomized tests scored by the
//! tunable ν-loss.
//!
//! The crate covers the whole pipeline for a pair of finite distributions:
//!
//! - [`dist`]: finite distributions in log-space, i.i.d. products and exact
//!   sums over sequences organised by type class.
//! - [`loss`]: the ν-loss family, from log-loss (ν = 1) to the soft 0-1 loss
//!   (ν = ∞).
//! - [`decision`]: randomized tests, exact ν-type I/II and ν-Bayesian errors,
//!   the closed-form ν-most-powerful and ν-Bayes tests, threshold calibration.
//! - [`exponents`]: KL divergence, Chernoff information, skewed Bhattacharyya
//!   affinities, relative typical sets and the typical-set test.
//! - [`oracle`]: brute-force per-type grid minimisation that independently
//!   checks the closed-form tests.
//! - [`explab`]: finite-n exponent traces and bound checks.
//! - [`report`]: CSV renderings shared by the CLI and the web demo.
//!
//! All logarithms are base 2 unless a [`LogBase`] says otherwise.

pub mod decision;
pub mod dist;
pub mod error;
pub mod explab;
pub mod exponents;
pub mod loss;
pub mod numeric;
pub mod oracle;
pub mod report;

pub use decision::{
    bayes_risk, bayes_test, calibrate_lambda, infty_mp_test, nu_mp_test, nu_type1_error,
    nu_type2_error, BayesRiskReport, Calibration, ErrorPair, RandomizedTest, TestKind,
};
pub use dist::{
    enumerate_type_classes, sample_iid, seq_log_likelihood_ratio, Distribution, HypothesisPair,
    Prior, TypeClass, TypeSpace,
};
pub use error::{Error, Result};
pub use explab::{
    risk_bound_check, bayes_exponent_trace, np_exponent_trace, sweep_d_b_nu, BoundCheck,
    ExponentTrace, TraceConstraint, TraceRow, TypeIIReading,
};
pub use exponents::{
    aep_test, chernoff_information, d_b_nu, kl_divergence, skewed_bhattacharyya, typical_set,
    ExponentReport, TypicalSetSpec,
};
pub use loss::{loss_curve, nu_loss, LossPoint, NuParam};
pub use oracle::{bayes_oracle, lagrangian_mp_oracle, OracleConfig};

use serde::{Deserialize, Serialize};

/// Logarithm base used when reporting information quantities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogBase {
    #[default]
    Bits,
    Nats,
}

impl LogBase {
    /// Convert a value expressed in bits to this base.
    pub fn from_bits(self, bits: f64) -> f64 {
        match self {
            LogBase::Bits => bits,
            LogBase::Nats => bits * std::f64::consts::LN_2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LogBase::Bits => "bits",
            LogBase::Nats => "nats",
        }
    }
}

impl std::str::FromStr for LogBase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bits" | "2" => Ok(LogBase::Bits),
            "nats" | "e" => Ok(LogBase::Nats),
            other => Err(Error::validation(format!("unknown log base '{other}'"))),
        }
    }
}
