//! CSV and JSON renderings of library results.

use std::io::{self, Write};

use serde_json::json;

use crate::explab::{ExponentTrace, TraceConstraint};
use crate::exponents::{ExponentReport, NuValue};
use crate::loss::LossPoint;

/// Shortest round-trip form, in scientific notation for very small or large
/// magnitudes.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e16).contains(&a) {
        format!("{v:e}")
    } else {
        v.to_string()
    }
}

pub fn loss_curve_csv<W: Write>(points: &[LossPoint], out: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["nu", "p", "loss"])?;
    for pt in points {
        w.write_record([pt.nu.to_string(), num(pt.p), num(pt.loss)])?;
    }
    w.flush()
}

/// Columns `quantity, nu, value, base`; `nu` is empty for ν-free quantities and
/// `base` is empty for unitless ones.
pub fn exponents_csv<W: Write>(report: &ExponentReport, out: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let base = report.base.as_str();
    w.write_record(["quantity", "nu", "value", "base"])?;
    for (q, v, unit) in [
        ("kl", report.kl, base),
        ("kl_reverse", report.kl_reverse, base),
        ("chernoff", report.chernoff, base),
        ("chernoff_lambda_star", report.chernoff_lambda_star, ""),
    ] {
        w.write_record([q, "", &num(v), unit])?;
    }
    // Affinities are unitless.
    for (q, rows, unit) in [("bc", &report.bc, ""), ("d_b_nu", &report.d_b, base)] {
        for r in rows {
            w.write_record([q, &num(r.nu), &num(r.value), unit])?;
        }
    }
    w.flush()
}

pub fn sweep_csv<W: Write>(points: &[NuValue], out: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["nu", "d_b_nu"])?;
    for p in points {
        w.write_record([num(p.nu), num(p.value)])?;
    }
    w.flush()
}

/// Columns `n, error, exponent_estimate, reference`, where `reference` is the
/// primary limit of the trace.
pub fn trace_csv<W: Write>(trace: &ExponentTrace, out: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let reference = trace.primary_reference().map(num).unwrap_or_default();
    w.write_record(["n", "error", "exponent_estimate", "reference"])?;
    for r in &trace.rows {
        w.write_record([
            r.n.to_string(),
            num(r.error),
            num(r.exponent_estimate),
            reference.clone(),
        ])?;
    }
    w.flush()
}

/// Sidecar describing how a trace was produced.
pub fn trace_metadata(trace: &ExponentTrace) -> serde_json::Value {
    let mut meta = json!({
        "nu": trace.nu,
        "base": trace.base,
        "reading": trace.reading,
        "references": trace.references,
    });
    match trace.constraint {
        TraceConstraint::Size { epsilon } => meta["epsilon"] = json!(epsilon),
        TraceConstraint::Prior { pi0, pi1 } => meta["prior"] = json!([pi0, pi1]),
    }
    meta
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss::{loss_curve, NuParam};

    #[test]
    fn loss_csv_has_header_and_rows() {
        let pts = loss_curve(&[NuParam::Finite(1.0), NuParam::Infinite], 4).unwrap();
        let mut buf = Vec::new();
        loss_curve_csv(&pts, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "nu,p,loss");
        assert_eq!(lines.len(), 9);
        assert_eq!(lines[4], "1,1,0");
        assert_eq!(lines[5], "inf,0.25,0.75");
    }

    #[test]
    fn sweep_csv_rows() {
        let mut buf = Vec::new();
        sweep_csv(&[NuValue { nu: 2.0, value: 0.0 }], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "nu,d_b_nu\n2,0\n");
    }

    #[test]
    fn numbers_round_trip() {
        for v in [0.0, 1.0, 0.125, 2.75e-6, 1e-300, 3e20, -4.5e-9, f64::INFINITY] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(num(2.75e-6), "2.75e-6");
    }
}
