//! Small numerical kernels: stable log-space helpers, deterministic
//! summation, golden-section search and monotone bisection.

use crate::error::{Error, Result};

/// `ln(1 + e^x)` without overflow for large `x` or loss of precision for very negative `x`.
pub fn softplus(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x == f64::INFINITY {
        return f64::INFINITY;
    }
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Natural log of `1 / (1 + 2^y)`.
///
/// This is the workhorse for every logistic-shaped decision rule in the crate,
/// which are all of the form `1 / (1 + 2^(ν·t))` for some log2-odds `t`.
pub fn ln_logistic2(y: f64) -> f64 {
    -softplus(y * std::f64::consts::LN_2)
}

/// `log2(Σ 2^x_i)` with the usual max-shift. Empty input or all `-inf` gives `-inf`.
pub fn log2_sum_exp2(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let s: f64 = pairwise_sum(&xs.iter().map(|x| (x - max).exp2()).collect::<Vec<_>>());
    max + s.log2()
}

/// Pairwise (tree) summation. The reduction order depends only on the length,
/// so results are bit-stable for a fixed input order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 16;
    if xs.len() <= LEAF {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Golden-section search for the minimum of a unimodal function on `[a, b]`.
///
/// Returns `(x_min, f(x_min))`. Stops when the bracket is narrower than `tol`.
pub fn golden_section_min<F>(f: F, a: f64, b: f64, tol: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    // 200 iterations shrink any bracket far below f64 resolution.
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Solve `f(x) = target` for a strictly decreasing `f` on the bracket `[lo, hi]`.
///
/// Requires `f(lo) >= target >= f(hi)`. Iterates until `|f(x) - target| <= ftol`
/// or the bracket collapses to adjacent floats; the latter is reported as an
/// error if the residual is still above `accept_tol`.
pub fn bisect_decreasing<F>(
    f: F,
    mut lo: f64,
    mut hi: f64,
    target: f64,
    ftol: f64,
    accept_tol: f64,
    max_iter: usize,
) -> Result<(f64, f64)>
where
    F: Fn(f64) -> f64,
{
    let mut f_lo = f(lo);
    let mut f_hi = f(hi);
    if !(f_lo >= target && f_hi <= target) {
        return Err(Error::Numeric {
            message: format!("target {target} is not bracketed"),
            lo,
            hi,
            f_lo,
            f_hi,
        });
    }
    let mut best = if (f_lo - target).abs() < (f_hi - target).abs() {
        (lo, f_lo)
    } else {
        (hi, f_hi)
    };
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if (f_mid - target).abs() < (best.1 - target).abs() {
            best = (mid, f_mid);
        }
        if (f_mid - target).abs() <= ftol {
            return Ok((mid, f_mid));
        }
        if f_mid > target {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
    }
    if (best.1 - target).abs() <= accept_tol {
        Ok(best)
    } else {
        Err(Error::Numeric {
            message: format!("bisection did not reach target {target} within {max_iter} iterations"),
            lo,
            hi,
            f_lo,
            f_hi,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softplus_extremes() {
        assert_eq!(softplus(f64::NEG_INFINITY), 0.0);
        assert_eq!(softplus(f64::INFINITY), f64::INFINITY);
        assert!((softplus(1000.0) - 1000.0).abs() < 1e-12);
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
        assert!((softplus(-40.0) - (-40f64).exp()).abs() < 1e-30);
    }

    #[test]
    fn logistic_half_at_zero() {
        assert!((ln_logistic2(0.0).exp() - 0.5).abs() < 1e-15);
        assert!((ln_logistic2(1.0).exp() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn log2_sum_exp2_handles_tiny_values() {
        let v = log2_sum_exp2(&[-2000.0, -2000.0]);
        assert!((v + 1999.0).abs() < 1e-12);
        assert_eq!(log2_sum_exp2(&[]), f64::NEG_INFINITY);
    }

    #[test]
    fn golden_section_finds_parabola_minimum() {
        let (x, fx) = golden_section_min(|x| (x - 0.3) * (x - 0.3) + 1.0, 0.0, 1.0, 1e-10);
        // The parabola is flat to f64 resolution within ~1e-8 of its vertex.
        assert!((x - 0.3).abs() < 1e-7);
        assert!((fx - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bisection_inverts_decreasing_map() {
        let (x, fx) = bisect_decreasing(|x| -x * x * x, -2.0, 3.0, -1.0, 1e-14, 1e-9, 200).unwrap();
        assert!((x - 1.0).abs() < 1e-9);
        assert!((fx + 1.0).abs() < 1e-12);
    }

    #[test]
    fn bisection_reports_missing_bracket() {
        let err = bisect_decreasing(|x| -x, 0.0, 1.0, 5.0, 1e-12, 1e-9, 50).unwrap_err();
        assert_eq!(err.kind(), "numeric");
    }
}
