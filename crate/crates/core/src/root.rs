//! Safeguarded Newton iteration for increasing scalar functions.
//!
//! Used for both Lagrange multipliers in the crate: the moment multiplier of
//! the entropic update and the tilt of the empirical distribution. In both
//! cases the function is smooth and strictly increasing, with a cheap
//! analytic derivative.

use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 500;
const POLISH_STEPS: usize = 3;

/// Outcome of a root solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootReport {
    pub root: f64,
    /// `g(root)`, signed.
    pub residual: f64,
    /// Function evaluations, bracketing included.
    pub iterations: usize,
    /// Final bracket `(lo, hi)` with `g(lo) <= 0 <= g(hi)`.
    pub bracket: (f64, f64),
}

/// Find `x` with `|g(x)| <= tol` for an increasing `g`.
///
/// `eval` returns `(g(x), g'(x))`. A bracket is grown geometrically from
/// `guess` (step 1, doubling) until `g` changes sign; if that requires
/// `|x| > cap` the solve fails with [`Error::Diverged`]. Newton steps that
/// leave the bracket, or come from a non-positive slope, are replaced by
/// bisection.
pub fn solve_increasing<F>(mut eval: F, guess: f64, tol: f64, cap: f64) -> Result<RootReport>
where
    F: FnMut(f64) -> Result<(f64, f64)>,
{
    if !(tol > 0.0 && cap > 0.0 && guess.is_finite() && guess.abs() <= cap) {
        return Err(Error::InvalidArgument(format!(
            "need tol > 0, cap > 0 and |guess| <= cap (tol={tol}, cap={cap}, guess={guess})"
        )));
    }
    let mut evals = 0;
    let mut call = |x: f64, evals: &mut usize| {
        *evals += 1;
        eval(x)
    };

    let (mut x, (mut r, mut s)) = (guess, call(guess, &mut evals)?);
    let (mut lo, mut hi) = (x, x);
    let converged = 'solve: {
        if r.abs() <= tol {
            break 'solve true;
        }

        // Grow a bracket.
        let dir = if r < 0.0 { 1.0 } else { -1.0 };
        let mut step = 1.0;
        let (mut near, mut near_r, mut near_s) = (x, r, s);
        let (far, far_r, far_s) = loop {
            let mut next = near + dir * step;
            let at_cap = next.abs() >= cap;
            if at_cap {
                next = dir * cap;
            }
            let (rn, sn) = call(next, &mut evals)?;
            if rn.abs() <= tol {
                (x, r, s) = (next, rn, sn);
                (lo, hi) = (near.min(next), near.max(next));
                break 'solve true;
            }
            if rn.signum() != near_r.signum() {
                break (next, rn, sn);
            }
            if at_cap {
                return Err(Error::Diverged { cap, last: next });
            }
            near = next;
            near_r = rn;
            near_s = sn;
            step *= 2.0;
        };
        (lo, hi) = if near < far { (near, far) } else { (far, near) };

        // Newton from the end with the smaller residual.
        if far_r.abs() < near_r.abs() {
            (x, r, s) = (far, far_r, far_s);
        } else {
            (x, r, s) = (near, near_r, near_s);
        }
        for _ in 0..MAX_ITERATIONS {
            let newton = x - r / s;
            let next = if s > 0.0 && newton.is_finite() && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if next <= lo || next >= hi {
                return Err(Error::Stalled { x, residual: r });
            }
            x = next;
            (r, s) = call(x, &mut evals)?;
            if r.abs() <= tol {
                break 'solve true;
            }
            if r < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
        }
        false
    };
    if !converged {
        return Err(Error::Stalled { x, residual: r });
    }

    // A few more Newton steps bring the root itself to working precision;
    // each is kept only if it lowers the residual.
    for _ in 0..POLISH_STEPS {
        if r == 0.0 || s.is_nan() || s <= 0.0 {
            break;
        }
        let next = x - r / s;
        if !next.is_finite() || next == x {
            break;
        }
        let (rn, sn) = call(next, &mut evals)?;
        if rn.abs() >= r.abs() {
            break;
        }
        (x, r, s) = (next, rn, sn);
    }
    Ok(RootReport {
        root: x,
        residual: r,
        iterations: evals,
        bracket: (lo.min(x), hi.max(x)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_root() {
        let rep =
            solve_increasing(|x| Ok((x * x * x - 2.0, 3.0 * x * x)), 0.0, 1e-14, 100.0).unwrap();
        assert!((rep.root - 2f64.cbrt()).abs() < 1e-14);
        assert!(rep.bracket.0 <= rep.root && rep.root <= rep.bracket.1);
    }

    #[test]
    fn bad_slope_falls_back_to_bisection() {
        // Lying derivative: always zero.
        let rep = solve_increasing(|x| Ok((x.tanh() - 0.5, 0.0)), 3.0, 1e-12, 100.0).unwrap();
        assert!((rep.root - 0.5f64.atanh()).abs() < 1e-11);
    }

    #[test]
    fn guess_is_root() {
        let rep = solve_increasing(|x| Ok((x, 1.0)), 0.0, 1e-12, 10.0).unwrap();
        assert_eq!(rep.root, 0.0);
    }

    #[test]
    fn diverges_past_cap() {
        // atan never reaches 2.
        let err = solve_increasing(
            |x| Ok((x.atan() - 2.0, 1.0 / (1.0 + x * x))),
            0.0,
            1e-10,
            1e4,
        )
        .unwrap_err();
        assert_eq!(err.code(), "Diverged");
        let err = solve_increasing(
            |x| Ok((x.atan() + 2.0, 1.0 / (1.0 + x * x))),
            0.0,
            1e-10,
            1e4,
        )
        .unwrap_err();
        assert_eq!(err.code(), "Diverged");
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(solve_increasing(|x| Ok((x, 1.0)), 0.0, 0.0, 1.0).is_err());
        assert!(solve_increasing(|x| Ok((x, 1.0)), 5.0, 1e-3, 1.0).is_err());
    }
}
