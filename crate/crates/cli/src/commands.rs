use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tunable_ht::decision::{calibrated_mp_test, TestDescription};
use tunable_ht::explab::nu_grid;
use tunable_ht::exponents::NuValue;
use tunable_ht::oracle::{verify_bayes_instance, verify_mp_instance, BayesVerification, MpVerification};
use tunable_ht::{
    bayes_exponent_trace, bayes_risk, bayes_test, loss_curve, np_exponent_trace, report,
    sweep_d_b_nu, Distribution, Error, ErrorPair, ExponentReport, ExponentTrace, HypothesisPair,
    NuParam, OracleConfig, Prior, TypeIIReading,
};

use crate::args::{Cli, Command, Format, OutputArgs, PairArgs, Reading};
use crate::output::{emit, json_bytes};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Library(Error),
    Io(String),
    OracleMismatch { failed: usize, total: usize },
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Library(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 1,
            CliError::Library(Error::Resource { .. }) => 2,
            CliError::Library(_) => 1,
            CliError::OracleMismatch { .. } => 3,
        }
    }

    pub fn to_json(&self) -> String {
        let v = match self {
            CliError::Usage(m) => json!({ "error": "validation", "message": m.trim() }),
            CliError::Io(m) => json!({ "error": "io", "message": m }),
            CliError::Library(e) => json!({ "error": e.kind(), "message": e.to_string() }),
            CliError::OracleMismatch { failed, total } => json!({
                "error": "oracle_mismatch",
                "message": format!("{failed} of {total} instances failed"),
            }),
        };
        v.to_string()
    }
}

type CliResult<T = ()> = Result<T, CliError>;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    p0: Option<Vec<f64>>,
    p1: Option<Vec<f64>>,
    prior: Option<Vec<f64>>,
}

fn distribution(name: &str, weights: &[f64]) -> CliResult<Distribution> {
    let sum: f64 = weights.iter().sum();
    if sum.is_finite() && (sum - 1.0).abs() > 1e-9 && weights.iter().all(|w| *w >= 0.0) {
        eprintln!(
            "{}",
            json!({ "warning": format!("{name} sums to {sum}; normalized") })
        );
    }
    Ok(Distribution::from_weights(weights)?)
}

fn load_pair(args: &PairArgs, need_prior: bool) -> CliResult<HypothesisPair> {
    let file = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::validation(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str::<ConfigFile>(&text)
                .map_err(|e| Error::validation(format!("bad config {}: {e}", path.display())))?
        }
        None => ConfigFile::default(),
    };
    let pick = |flag: &Option<Vec<f64>>, file: Option<Vec<f64>>, name: &str| {
        flag.clone()
            .or(file)
            .ok_or_else(|| Error::validation(format!("missing --{name}")))
    };
    let p0 = distribution("p0", &pick(&args.p0, file.p0, "p0")?)?;
    let p1 = distribution("p1", &pick(&args.p1, file.p1, "p1")?)?;
    let mut pair = HypothesisPair::new(p0, p1)?;
    let prior = args.prior.clone().or(file.prior);
    match prior {
        Some(v) if v.len() == 2 => pair = pair.with_prior(Prior::new(v[0], v[1])?),
        Some(v) => {
            return Err(Error::validation(format!("prior needs two entries, got {}", v.len())).into())
        }
        None if need_prior => pair = pair.with_prior(Prior::uniform()),
        None => {}
    }
    Ok(pair)
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn emit_trace(trace: &ExponentTrace, out: &OutputArgs) -> CliResult {
    let bytes = csv_bytes(|b| report::trace_csv(trace, b))?;
    emit(out.out.as_deref(), &bytes)?;
    if let Some(path) = &out.out {
        let mut meta = path.clone().into_os_string();
        meta.push(".meta.json");
        emit(Some(Path::new(&meta)), &json_bytes(&report::trace_metadata(trace)))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct VerifyInstance {
    index: usize,
    theta0: f64,
    theta1: f64,
    nu: NuParam,
    n: u32,
    epsilon: f64,
    pi0: f64,
    mp: MpVerification,
    bayes: BayesVerification,
    passed: bool,
}

fn verify(seed: u64, instances: usize, cfg: OracleConfig) -> CliResult<(Vec<u8>, usize)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nus = [NuParam::Finite(1.0), NuParam::Finite(1.5), NuParam::Finite(2.0), NuParam::Finite(4.0), NuParam::Infinite];
    let mut rows = Vec::with_capacity(instances);
    for index in 0..instances {
        let (theta0, theta1) = loop {
            let (a, b): (f64, f64) = (rng.gen_range(0.05..0.95), rng.gen_range(0.05..0.95));
            if (a - b).abs() > 0.05 {
                break (a, b);
            }
        };
        let nu = nus[rng.gen_range(0..nus.len())];
        let n = rng.gen_range(2..=6);
        let epsilon = rng.gen_range(0.05..0.5);
        let pi0 = rng.gen_range(0.05..0.95);
        let pair = HypothesisPair::new(
            Distribution::from_weights(&[1.0 - theta0, theta0])?,
            Distribution::from_weights(&[1.0 - theta1, theta1])?,
        )?
        .with_prior(Prior::new(pi0, 1.0 - pi0)?);
        let mp = verify_mp_instance(nu, epsilon, &pair, n, &cfg, rng.gen())?;
        let bayes = verify_bayes_instance(nu, &pair, n, &cfg, rng.gen())?;
        let passed = mp.passed && bayes.passed;
        rows.push(VerifyInstance { index, theta0, theta1, nu, n, epsilon, pi0, mp, bayes, passed });
    }
    let failed = rows.iter().filter(|r| !r.passed).count();
    let doc = json!({
        "seed": seed,
        "config": cfg,
        "passed": instances - failed,
        "failed": failed,
        "instances": rows,
    });
    Ok((json_bytes(&doc), failed))
}

pub fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Exponents { pair, nu, base, out, format } => {
            let pair = load_pair(&pair, false)?;
            let rep = ExponentReport::compute(&pair, &nu, base.base)?;
            let bytes = match format {
                Format::Json => json_bytes(&rep),
                Format::Csv => csv_bytes(|b| report::exponents_csv(&rep, b))?,
            };
            emit(out.out.as_deref(), &bytes)?;
        }
        Command::MpTest { pair, nu, epsilon, n, out } => {
            let pair = load_pair(&pair, false)?;
            let (test, calibration) = calibrated_mp_test(nu, epsilon, &pair, n)?;
            let errors = ErrorPair::of(&test, &pair, nu)?;
            let doc = json!({
                "test": TestDescription::from(&test),
                "calibration": calibration,
                "errors": errors,
            });
            emit(out.out.as_deref(), &json_bytes(&doc))?;
        }
        Command::Bayes { pair, nu, n, out } => {
            let pair = load_pair(&pair, true)?;
            let test = bayes_test(nu, &pair, n)?;
            let risk = bayes_risk(nu, &test, &pair)?;
            let doc = json!({ "test": TestDescription::from(&test), "risk": risk });
            emit(out.out.as_deref(), &json_bytes(&doc))?;
        }
        Command::TraceNp { pair, nu, epsilon, n_list, reading, base, out } => {
            let pair = load_pair(&pair, false)?;
            let reading = match reading {
                Reading::Nu => TypeIIReading::Nu,
                Reading::Classical => TypeIIReading::Classical,
            };
            let trace = np_exponent_trace(nu, epsilon, &pair, &n_list, reading)?.in_base(base.base);
            emit_trace(&trace, &out)?;
        }
        Command::TraceBayes { pair, nu, n_list, base, out } => {
            let pair = load_pair(&pair, true)?;
            let trace = bayes_exponent_trace(nu, &pair, &n_list)?.in_base(base.base);
            emit_trace(&trace, &out)?;
        }
        Command::SweepNu { pair, nu_min, nu_max, steps, base, out } => {
            let pair = load_pair(&pair, false)?;
            let points: Vec<NuValue> = sweep_d_b_nu(&pair, &nu_grid(nu_min, nu_max, steps)?)?
                .into_iter()
                .map(|p| NuValue { nu: p.nu, value: base.base.from_bits(p.value) })
                .collect();
            let bytes = csv_bytes(|b| report::sweep_csv(&points, b))?;
            emit(out.out.as_deref(), &bytes)?;
        }
        Command::LossCurve { nu, steps, out } => {
            let points = loss_curve(&nu, steps)?;
            let bytes = csv_bytes(|b| report::loss_curve_csv(&points, b))?;
            emit(out.out.as_deref(), &bytes)?;
        }
        Command::Verify { seed, instances, grid_points, refinement_rounds, out } => {
            let cfg = OracleConfig { grid_points, refinement_rounds };
            let (bytes, failed) = verify(seed, instances, cfg)?;
            emit(out.out.as_deref(), &bytes)?;
            if failed > 0 {
                return Err(CliError::OracleMismatch { failed, total: instances });
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Usage("x".into()).exit_code(), 1);
        assert_eq!(CliError::Library(Error::validation("x")).exit_code(), 1);
        let cap = Error::Resource { what: "type classes".into(), count: 10, cap: 1 };
        assert_eq!(CliError::Library(cap).exit_code(), 2);
        let mismatch = CliError::OracleMismatch { failed: 1, total: 4 };
        assert_eq!(mismatch.exit_code(), 3);
        let v: serde_json::Value = serde_json::from_str(&mismatch.to_json()).unwrap();
        assert_eq!(v["error"], "oracle_mismatch");
    }
}
