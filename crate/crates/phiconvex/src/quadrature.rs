//! Oriented adaptive numerical integration of a 1-D real function.
//!
//! Adaptive Simpson with the classical |S_fine − S_coarse|/15 error
//! estimate. Bounds may come in either order; reversing them negates the
//! value, so averages divided by a signed width are orientation-free.

use serde::Serialize;
use thiserror::Error;

use crate::exprlang::EvalError;

/// Default integration tolerance, one order below the inequality-verdict
/// tolerance so quadrature error cannot flip verdicts.
pub const DEFAULT_QUAD_TOL: f64 = 1e-10;

/// Maximum number of interval splits for one integration.
pub const SUBDIVISION_BUDGET: usize = 1_000_000;

// Beyond this depth interval midpoints stop being representable at desk
// scale, so further splitting cannot make progress.
const MAX_DEPTH: u32 = 60;

/// The outcome of one integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadResult {
    pub value: f64,
    /// Sum of accepted per-leaf error estimates; at most the requested
    /// tolerance on success.
    pub error_estimate: f64,
    /// Number of interval splits performed.
    pub subdivisions: usize,
}

/// Why an integration failed.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("integration bounds must be finite, got [{lo}, {hi}]")]
    BadBounds { lo: f64, hi: f64 },
    #[error("integration tolerance must be a positive real, got {0}")]
    BadTolerance(f64),
    #[error(
        "subdivision budget exhausted: best estimate {} with error estimate {}",
        best.value,
        best.error_estimate
    )]
    BudgetExhausted { best: QuadResult },
}

struct Scan<'a, F> {
    f: &'a mut F,
    splits_left: usize,
    splits_used: usize,
    // Set when the budget or the depth cap stopped refinement before the
    // local tolerance was met.
    starved: bool,
}

impl<'a, F> Scan<'a, F>
where
    F: FnMut(f64) -> Result<f64, EvalError>,
{
    fn eval(&mut self, x: f64) -> Result<f64, EvalError> {
        (self.f)(x)
    }

    // Returns (integral, accumulated error estimate) over [a, b], where
    // `whole` is the Simpson estimate already computed from fa, fm, fb.
    #[allow(clippy::too_many_arguments)]
    fn refine(
        &mut self,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Result<(f64, f64), EvalError> {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        if self.splits_left == 0 || depth >= MAX_DEPTH || lm <= a || rm >= b {
            self.starved = true;
            return Ok((whole, tol));
        }
        self.splits_left -= 1;
        self.splits_used += 1;

        let flm = self.eval(lm)?;
        let frm = self.eval(rm)?;
        let left = simpson(a, m, fa, flm, fm);
        let right = simpson(m, b, fm, frm, fb);
        let delta = left + right - whole;
        if delta.abs() <= 15.0 * tol {
            // Accept with Richardson correction; the estimate has one more
            // order than either Simpson rule alone.
            return Ok((left + right + delta / 15.0, delta.abs() / 15.0));
        }
        let (lv, le) = self.refine(a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)?;
        let (rv, re) = self.refine(m, b, fm, frm, fb, right, 0.5 * tol, depth + 1)?;
        Ok((lv + rv, le + re))
    }
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

/// Oriented integral of `f` from `lo` to `hi` with the default budget.
pub fn integrate<F>(f: F, lo: f64, hi: f64, tol: f64) -> Result<QuadResult, QuadError>
where
    F: FnMut(f64) -> Result<f64, EvalError>,
{
    integrate_with_budget(f, lo, hi, tol, SUBDIVISION_BUDGET)
}

/// Oriented integral with an explicit subdivision budget.
pub fn integrate_with_budget<F>(
    mut f: F,
    lo: f64,
    hi: f64,
    tol: f64,
    budget: usize,
) -> Result<QuadResult, QuadError>
where
    F: FnMut(f64) -> Result<f64, EvalError>,
{
    if !lo.is_finite() || !hi.is_finite() {
        return Err(QuadError::BadBounds { lo, hi });
    }
    if !tol.is_finite() || tol <= 0.0 {
        return Err(QuadError::BadTolerance(tol));
    }
    if lo == hi {
        return Ok(QuadResult { value: 0.0, error_estimate: 0.0, subdivisions: 0 });
    }
    let (a, b, sign) = if lo < hi { (lo, hi, 1.0) } else { (hi, lo, -1.0) };

    let mut scan = Scan { f: &mut f, splits_left: budget, splits_used: 0, starved: false };
    let fa = scan.eval(a)?;
    let m = 0.5 * (a + b);
    let fm = scan.eval(m)?;
    let fb = scan.eval(b)?;
    let whole = simpson(a, b, fa, fm, fb);
    let (value, error_estimate) = scan.refine(a, b, fa, fm, fb, whole, tol, 0)?;

    let result = QuadResult {
        value: sign * value,
        error_estimate,
        subdivisions: scan.splits_used,
    };
    if scan.starved {
        return Err(QuadError::BudgetExhausted { best: result });
    }
    Ok(result)
}
