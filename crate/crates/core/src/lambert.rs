//! Principal branch of the Lambert W function.

use std::f64::consts::E;

use crate::error::{OcsError, Result};

/// Branch point `-1/e`.
pub const BRANCH_POINT: f64 = -1.0 / E;

const MAX_ITER: usize = 100;
const STEP_TOL: f64 = 1e-14;

/// Solves `w * exp(w) = x` for `w >= -1`.
///
/// Arguments down to `-1/e - 1e-12` are accepted; anything at or below the
/// branch point returns `-1`.
pub fn lambert_w0(x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(OcsError::Domain("lambert_w0 of NaN".into()));
    }
    if x < BRANCH_POINT - 1e-12 {
        return Err(OcsError::Domain(format!(
            "lambert_w0 undefined for x = {x} < -1/e"
        )));
    }
    if x <= BRANCH_POINT {
        return Ok(-1.0);
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == f64::INFINITY {
        return Ok(f64::INFINITY);
    }

    let mut w = initial_guess(x);
    for _ in 0..MAX_ITER {
        let ew = w.exp();
        let f = w * ew - x;
        if f == 0.0 {
            break;
        }
        let wp1 = w + 1.0;
        if wp1 == 0.0 {
            break;
        }
        let step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
        let next = (w - step).max(-1.0);
        let done = (next - w).abs() <= STEP_TOL * (1.0 + next.abs());
        w = next;
        if done {
            break;
        }
    }
    Ok(w)
}

fn initial_guess(x: f64) -> f64 {
    if x < -0.25 {
        // Series about the branch point in p = sqrt(2(ex + 1)).
        let p = (2.0 * (E * x + 1.0)).max(0.0).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    } else if x < 3.0 {
        let l = x.ln_1p();
        l * (1.0 - (1.0 + l).ln() / (2.0 + l))
    } else {
        let l1 = x.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent root bracketing on `w e^w = x` over `[-1, max(1, ln x + 1)]`.
    fn bisect(x: f64) -> f64 {
        let (mut lo, mut hi) = (-1.0f64, 1.0f64.max(x.max(1.0).ln() + 1.0));
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid * mid.exp() < x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn fixed_points() {
        assert_eq!(lambert_w0(0.0).unwrap(), 0.0);
        assert!((lambert_w0(E).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(lambert_w0(BRANCH_POINT).unwrap(), -1.0);
        assert_eq!(lambert_w0(BRANCH_POINT - 5e-13).unwrap(), -1.0);
    }

    #[test]
    fn negative_argument_matches_bisection() {
        let w = lambert_w0(-0.18394).unwrap();
        assert!((w - (-0.2319614117669676)).abs() < 1e-12);
        assert!((w - bisect(-0.18394)).abs() < 1e-12);
    }

    #[test]
    fn rejects_below_branch_point() {
        assert!(matches!(lambert_w0(-0.5), Err(OcsError::Domain(_))));
        assert!(lambert_w0(f64::NAN).is_err());
    }

    #[test]
    fn agrees_with_bisection_across_scales() {
        for &x in &[-0.3678, -0.3, -0.1, 1e-8, 0.5, 2.0, 10.0, 1e3, 1e6] {
            let w = lambert_w0(x).unwrap();
            let oracle = bisect(x);
            assert!(
                (w - oracle).abs() <= 1e-12 * (1.0 + oracle.abs()),
                "x = {x}"
            );
        }
    }
}
