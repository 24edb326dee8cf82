//! Hermite–Hadamard-type bounds for functions that are strongly convex
//! along a map: the midpoint/mean/trapezoid bracket with its c-dependent
//! correction terms, and the two product-of-endpoint-values upper bounds.
//!
//! All three computations work on the 1-D segment between the images
//! φ(a), φ(b) and divide by φ(b) − φ(a), so the segment must be
//! non-degenerate. Integrals are oriented, which makes every report
//! invariant under swapping a and b.

use serde::Serialize;
use thiserror::Error;

use crate::domain::{DomainError, PhiMap, RealFunction};
use crate::exprlang::EvalError;
use crate::quadrature::{integrate, QuadError};

/// Hard-error threshold on |φ(a) − φ(b)|: below this the divisions by
/// φ(b) − φ(a) are meaningless.
pub const DEGENERATE_SEGMENT_TOL: f64 = 1e-8;

/// Points of the deterministic sign pre-check used by the product bounds.
const NEGATIVITY_CHECK_POINTS: usize = 257;

/// Errors raised by the bound computations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum HadamardError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error("bounds require one-dimensional functions and maps, got dimension {0}")]
    NotOneDimensional(usize),
    #[error(
        "degenerate segment: |phi(a) - phi(b)| = {gap:e} is at most {threshold:e}, \
         so the mean over the image segment is undefined"
    )]
    DegenerateSegment { gap: f64, threshold: f64 },
    #[error(
        "{label} is negative at x = {point} (value {value}); the product bound's \
         derivation multiplies inequalities and needs nonnegative values"
    )]
    NegativeValue { label: String, point: f64, value: f64 },
}

/// Midpoint/mean/trapezoid bracket with strong-convexity corrections.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HHReport {
    pub lower: f64,
    pub mean: f64,
    pub upper: f64,
    /// Error estimate of `mean` inherited from quadrature.
    pub quad_error: f64,
    pub lower_holds: bool,
    pub upper_holds: bool,
    pub tol: f64,
}

/// Product-bound comparison. The endpoint aggregates satisfy
/// M = f(φa)·g(φa) + f(φb)·g(φb), N = f(φa)·g(φb) + f(φb)·g(φa),
/// S = f(φa) + f(φb) + g(φa) + g(φb).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HHPairReport {
    pub lhs: f64,
    pub rhs: f64,
    pub m: f64,
    pub n: f64,
    pub s: f64,
    pub holds: bool,
    pub tol: f64,
}

struct Segment {
    pa: f64,
    pb: f64,
}

impl Segment {
    fn diff_sq(&self) -> f64 {
        (self.pa - self.pb) * (self.pa - self.pb)
    }
}

fn image_segment(f: &RealFunction, phi: &PhiMap, a: f64, b: f64) -> Result<Segment, HadamardError> {
    if f.arity() != 1 {
        return Err(HadamardError::NotOneDimensional(f.arity()));
    }
    if phi.dim() != 1 {
        return Err(HadamardError::NotOneDimensional(phi.dim()));
    }
    let pa = phi.apply(&[a])?[0];
    let pb = phi.apply(&[b])?[0];
    let gap = (pa - pb).abs();
    if gap <= DEGENERATE_SEGMENT_TOL {
        return Err(HadamardError::DegenerateSegment { gap, threshold: DEGENERATE_SEGMENT_TOL });
    }
    Ok(Segment { pa, pb })
}

fn ensure_nonnegative(f: &RealFunction, seg: &Segment) -> Result<(), HadamardError> {
    let lo = seg.pa.min(seg.pb);
    let hi = seg.pa.max(seg.pb);
    for i in 0..NEGATIVITY_CHECK_POINTS {
        let s = i as f64 / (NEGATIVITY_CHECK_POINTS - 1) as f64;
        let x = lo * (1.0 - s) + hi * s;
        let v = f.eval(&[x])?;
        if v < 0.0 {
            return Err(HadamardError::NegativeValue {
                label: f.label().to_string(),
                point: x,
                value: v,
            });
        }
    }
    Ok(())
}

/// The three Hermite–Hadamard quantities for f strongly convex with modulus
/// `c` along `phi`:
///
/// - lower = f((φa+φb)/2) + (c/12)(φa−φb)²
/// - mean  = oriented ∫ from φa to φb of f, divided by φb − φa
/// - upper = (f(φa)+f(φb))/2 − (c/6)(φa−φb)²
///
/// The flags compare the chain with `tol`. The bracket is a theorem only
/// when f really has modulus `c`; callers wanting a guarantee should verify
/// that first (the CLI chains a modulus estimate).
pub fn hh_bounds(
    f: &RealFunction,
    phi: &PhiMap,
    c: f64,
    a: f64,
    b: f64,
    quad_tol: f64,
    tol: f64,
) -> Result<HHReport, HadamardError> {
    let seg = image_segment(f, phi, a, b)?;
    let diff_sq = seg.diff_sq();
    let lower = f.eval(&[(seg.pa + seg.pb) / 2.0])? + c / 12.0 * diff_sq;
    let upper = (f.eval(&[seg.pa])? + f.eval(&[seg.pb])?) / 2.0 - c / 6.0 * diff_sq;
    let quad = integrate(|x| f.eval(&[x]), seg.pa, seg.pb, quad_tol)?;
    let width = seg.pb - seg.pa;
    let mean = quad.value / width;
    let quad_error = quad.error_estimate / width.abs();
    Ok(HHReport {
        lower,
        mean,
        upper,
        quad_error,
        lower_holds: lower <= mean + tol,
        upper_holds: mean <= upper + tol,
        tol,
    })
}

#[allow(clippy::too_many_arguments)]
fn pair_report(
    mean_of_product: f64,
    fa: f64,
    fb: f64,
    ga: f64,
    gb: f64,
    c: f64,
    diff_sq: f64,
    tol: f64,
) -> HHPairReport {
    let m = fa * ga + fb * gb;
    let n = fa * gb + fb * ga;
    let s = fa + fb + ga + gb;
    // The final term enters with a plus sign: it comes from squaring
    // c·t(1−t)·Δ² inside the product of the two endpoint inequalities and
    // integrating t²(1−t)² over [0,1], which yields +(c²/30)Δ⁴.
    let rhs = m / 3.0 + n / 6.0 - c / 12.0 * diff_sq * s + c * c / 30.0 * diff_sq * diff_sq;
    HHPairReport { lhs: mean_of_product, rhs, m, n, s, holds: mean_of_product <= rhs + tol, tol }
}

/// Upper bound on the mean of f(x)·f(φa+φb−x) over the image segment, for
/// f nonnegative and strongly convex with modulus `c` along `phi`.
///
/// Equivalent to [`product_pair_bound`] with g the reflection of f through
/// the segment midpoint, so M = 2·f(φa)·f(φb), N = f(φa)² + f(φb)², and
/// S = 2(f(φa)+f(φb)).
pub fn product_self_bound(
    f: &RealFunction,
    phi: &PhiMap,
    c: f64,
    a: f64,
    b: f64,
    quad_tol: f64,
    tol: f64,
) -> Result<HHPairReport, HadamardError> {
    let seg = image_segment(f, phi, a, b)?;
    ensure_nonnegative(f, &seg)?;
    let fa = f.eval(&[seg.pa])?;
    let fb = f.eval(&[seg.pb])?;
    let sum = seg.pa + seg.pb;
    let quad = integrate(
        |x| Ok(f.eval(&[x])? * f.eval(&[sum - x])?),
        seg.pa,
        seg.pb,
        quad_tol,
    )?;
    let mean = quad.value / (seg.pb - seg.pa);
    // Reflection: g(φa) = f(φb), g(φb) = f(φa).
    Ok(pair_report(mean, fa, fb, fb, fa, c, seg.diff_sq(), tol))
}

/// Upper bound on the mean of f·g over the image segment, for f, g
/// nonnegative and both strongly convex with modulus `c` along `phi`.
#[allow(clippy::too_many_arguments)]
pub fn product_pair_bound(
    f: &RealFunction,
    g: &RealFunction,
    phi: &PhiMap,
    c: f64,
    a: f64,
    b: f64,
    quad_tol: f64,
    tol: f64,
) -> Result<HHPairReport, HadamardError> {
    if g.arity() != 1 {
        return Err(HadamardError::NotOneDimensional(g.arity()));
    }
    let seg = image_segment(f, phi, a, b)?;
    ensure_nonnegative(f, &seg)?;
    ensure_nonnegative(g, &seg)?;
    let fa = f.eval(&[seg.pa])?;
    let fb = f.eval(&[seg.pb])?;
    let ga = g.eval(&[seg.pa])?;
    let gb = g.eval(&[seg.pb])?;
    let quad = integrate(
        |x| Ok(f.eval(&[x])? * g.eval(&[x])?),
        seg.pa,
        seg.pb,
        quad_tol,
    )?;
    let mean = quad.value / (seg.pb - seg.pa);
    Ok(pair_report(mean, fa, fb, ga, gb, c, seg.diff_sq(), tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Interval, Region};
    use crate::quadrature::DEFAULT_QUAD_TOL;

    const TOL: f64 = 1e-9;

    fn identity_on(lo: f64, hi: f64) -> PhiMap {
        PhiMap::identity(Region::from_interval(Interval::new(lo, hi).unwrap()))
    }

    #[test]
    fn square_function_makes_the_bracket_collapse() {
        let f = RealFunction::parse("x^2", 1).unwrap();
        let phi = identity_on(0.0, 1.0);
        let r = hh_bounds(&f, &phi, 1.0, 0.0, 1.0, DEFAULT_QUAD_TOL, TOL).unwrap();
        let third = 1.0 / 3.0;
        assert!((r.lower - third).abs() <= 1e-9);
        assert!((r.mean - third).abs() <= 1e-9);
        assert!((r.upper - third).abs() <= 1e-9);
        assert!(r.lower_holds && r.upper_holds);
    }

    #[test]
    fn exponential_gives_a_strict_bracket() {
        let f = RealFunction::parse("exp(x)", 1).unwrap();
        let phi = identity_on(0.0, 1.0);
        let r = hh_bounds(&f, &phi, 0.0, 0.0, 1.0, DEFAULT_QUAD_TOL, TOL).unwrap();
        assert!((r.lower - 0.5_f64.exp()).abs() <= 1e-8);
        assert!((r.mean - (std::f64::consts::E - 1.0)).abs() <= 1e-8);
        assert!((r.upper - (1.0 + std::f64::consts::E) / 2.0).abs() <= 1e-8);
        assert!(r.lower < r.mean && r.mean < r.upper);
        assert!(r.lower_holds && r.upper_holds);
    }

    #[test]
    fn affine_function_through_a_square_map() {
        let f = RealFunction::parse("x", 1).unwrap();
        let phi = PhiMap::parse(
            &["x1^2"],
            Region::from_interval(Interval::new(0.0, 1.0).unwrap()),
        )
        .unwrap();
        let r = hh_bounds(&f, &phi, 0.0, 0.0, 1.0, DEFAULT_QUAD_TOL, TOL).unwrap();
        assert!((r.lower - 0.5).abs() <= 1e-10);
        assert!((r.mean - 0.5).abs() <= 1e-10);
        assert!((r.upper - 0.5).abs() <= 1e-10);
    }

    #[test]
    fn swapping_endpoints_changes_nothing() {
        let f = RealFunction::parse("exp(x) + x^2", 1).unwrap();
        let phi = identity_on(-1.0, 1.0);
        let fwd = hh_bounds(&f, &phi, 0.5, -1.0, 1.0, DEFAULT_QUAD_TOL, TOL).unwrap();
        let rev = hh_bounds(&f, &phi, 0.5, 1.0, -1.0, DEFAULT_QUAD_TOL, TOL).unwrap();
        assert_eq!(fwd.lower, rev.lower);
        assert_eq!(fwd.mean, rev.mean);
        assert_eq!(fwd.upper, rev.upper);
    }

    #[test]
    fn widening_the_modulus_narrows_the_bracket() {
        let f = RealFunction::parse("x^2", 1).unwrap();
        let phi = identity_on(0.0, 1.0);
        let loose = hh_bounds(&f, &phi, 0.0, 0.0, 1.0, DEFAULT_QUAD_TOL, TOL).unwrap();
        let tight = hh_bounds(&f, &phi, 1.0, 0.0, 1.0, DEFAULT_QUAD_TOL, TOL).unwrap();
        assert!(loose.lower <= tight.lower);
        assert!(loose.upper >= tight.upper);
        assert_eq!(loose.mean, tight.mean);
    }

    #[test]
    fn self_product_of_square_function_is_tight() {
        let f = RealFunction::parse("x^2", 1).unwrap();
        let phi = identity_on(0.0, 1.0);
        let r = product_self_bound(&f, &phi, 1.0, 0.0, 1.0, DEFAULT_QUAD_TOL, TOL).unwrap();
        let thirtieth = 1.0 / 30.0;
        assert!((r.lhs - thirtieth).abs() <= 1e-9);
        assert!((r.rhs - thirtieth).abs() <= 1e-9);
        assert!(r.holds);
        // With the last term flipped to a minus, the bound would sit at
        // −1/30, strictly below the verified left side.
        let printed_variant = r.rhs - 2.0 / 30.0;
        assert!(printed_variant < r.lhs - 1e-3);
    }

    #[test]
    fn self_product_of_identity_function() {
        let f = RealFunction::parse("x", 1).unwrap();
        let phi = identity_on(0.0, 1.0);
        let r = product_self_bound(&f, &phi, 0.0, 0.0, 1.0, DEFAULT_QUAD_TOL, TOL).unwrap();
        assert!((r.lhs - 1.0 / 6.0).abs() <= 1e-10);
        assert!((r.rhs - 1.0 / 6.0).abs() <= 1e-10);
        assert!(r.holds);
    }

    #[test]
    fn self_product_of_a_constant() {
        let f = RealFunction::parse("3", 1).unwrap();
        let phi = identity_on(0.0, 2.0);
        let r = product_self_bound(&f, &phi, 0.0, 0.0, 2.0, DEFAULT_QUAD_TOL, TOL).unwrap();
        assert!((r.lhs - 9.0).abs() <= 1e-9);
        assert!((r.rhs - 9.0).abs() <= 1e-9);
        assert_eq!(r.m, 18.0);
        assert_eq!(r.n, 18.0);
        assert_eq!(r.s, 12.0);
    }

    #[test]
    fn pair_product_of_identity_functions() {
        let f = RealFunction::parse("x", 1).unwrap();
        let g = RealFunction::parse("x", 1).unwrap();
        let phi = identity_on(0.0, 1.0);
        let r = product_pair_bound(&f, &g, &phi, 0.0, 0.0, 1.0, DEFAULT_QUAD_TOL, TOL).unwrap();
        assert!((r.lhs - 1.0 / 3.0).abs() <= 1e-10);
        assert!((r.rhs - 1.0 / 3.0).abs() <= 1e-10);
        assert_eq!(r.m, 1.0);
        assert_eq!(r.n, 0.0);
        assert_eq!(r.s, 2.0);
    }

    #[test]
    fn pair_product_of_square_functions_is_tight() {
        let f = RealFunction::parse("x^2", 1).unwrap();
        let g = RealFunction::parse("x^2", 1).unwrap();
        let phi = identity_on(0.0, 1.0);
        let r = product_pair_bound(&f, &g, &phi, 1.0, 0.0, 1.0, DEFAULT_QUAD_TOL, TOL).unwrap();
        assert!((r.lhs - 0.2).abs() <= 1e-9);
        assert!((r.rhs - 0.2).abs() <= 1e-9);
        assert!(r.holds);
    }

    #[test]
    fn quadratics_are_tight_on_any_interval() {
        // The one-parameter family κ·x² with modulus κ collapses all three
        // bounds on every interval; closed forms confirm equality.
        let phi_bounds = [(-1.0, 2.0), (1.0, 2.0), (-3.0, -0.5)];
        for (lo, hi) in phi_bounds {
            for kappa in [0.5, 1.0, 2.0] {
                let f = RealFunction::parse(&format!("{kappa}*x^2"), 1).unwrap();
                let phi = identity_on(lo, hi);
                let r = hh_bounds(&f, &phi, kappa, lo, hi, DEFAULT_QUAD_TOL, TOL).unwrap();
                assert!((r.lower - r.mean).abs() <= 1e-9, "lower {lo},{hi},{kappa}");
                assert!((r.upper - r.mean).abs() <= 1e-9, "upper {lo},{hi},{kappa}");
                if lo >= 0.0 {
                    let rp =
                        product_self_bound(&f, &phi, kappa, lo, hi, DEFAULT_QUAD_TOL, TOL)
                            .unwrap();
                    assert!((rp.lhs - rp.rhs).abs() <= 1e-9, "self {lo},{hi},{kappa}");
                    let rq = product_pair_bound(
                        &f, &f, &phi, kappa, lo, hi, DEFAULT_QUAD_TOL, TOL,
                    )
                    .unwrap();
                    assert!((rq.lhs - rq.rhs).abs() <= 1e-9, "pair {lo},{hi},{kappa}");
                }
            }
        }
    }

    #[test]
    fn a_collapsed_image_segment_is_rejected() {
        let f = RealFunction::parse("x^2", 1).unwrap();
        let phi = PhiMap::parse(
            &["0.5"],
            Region::from_interval(Interval::new(0.0, 1.0).unwrap()),
        )
        .unwrap();
        assert!(matches!(
            hh_bounds(&f, &phi, 0.0, 0.0, 1.0, DEFAULT_QUAD_TOL, TOL),
            Err(HadamardError::DegenerateSegment { .. })
        ));
    }

    #[test]
    fn negative_values_refuse_the_product_bounds() {
        let f = RealFunction::parse("x - 1", 1).unwrap();
        let phi = identity_on(0.0, 1.0);
        let err =
            product_self_bound(&f, &phi, 0.0, 0.0, 1.0, DEFAULT_QUAD_TOL, TOL).unwrap_err();
        assert!(matches!(err, HadamardError::NegativeValue { .. }));

        let g = RealFunction::parse("x", 1).unwrap();
        let err =
            product_pair_bound(&g, &f, &phi, 0.0, 0.0, 1.0, DEFAULT_QUAD_TOL, TOL).unwrap_err();
        assert!(matches!(err, HadamardError::NegativeValue { .. }));
    }
}
