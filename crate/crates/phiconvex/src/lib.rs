//! Numerical toolkit for strong convexity along a map ("strong
//! φ-convexity"): f(tφ(x) + (1−t)φ(y)) ≤ t·f(φ(x)) + (1−t)·f(φ(y))
//! − c·t(1−t)·‖φ(x) − φ(y)‖² for all x, y in the domain and t in [0, 1].
//!
//! The crate provides:
//!
//! - [`exprlang`]: a small expression language for defining the functions
//!   and maps under test,
//! - [`domain`]: intervals, boxes, maps, norms, deterministic grids, and
//!   the violation-witness machinery shared by every scan,
//! - [`quadrature`]: adaptive Simpson integration with strict budgets,
//! - [`convexity`]: defect evaluation, strong convexity and midconvexity
//!   checks, modulus estimation, segment restrictions, and the shift
//!   identity linking φ-convexity of f to f − c‖·‖²,
//! - [`hadamard`]: Hermite–Hadamard-type midpoint/mean/trapezoid brackets
//!   and the product upper bounds,
//! - [`normgeom`]: the parallelogram law, Jordan–von Neumann
//!   classification, and counterexample searches in non-inner-product
//!   norms.
//!
//! Every scan is deterministic: grids are fixed functions of their
//! parameters, randomness is seeded, parallel scans absorb per-chunk
//! results in scan order, and witness ties within 1e-12 keep the earliest
//! candidate. Running twice with the same inputs gives the same bytes.

pub mod convexity;
pub mod domain;
pub mod exprlang;
pub mod hadamard;
pub mod normgeom;
pub mod quadrature;

pub use convexity::{
    check_strong_phi_convex, check_strong_phi_midconvex, defect, estimate_modulus,
    segment_restriction_convex, shift_identity_residual, shifted_function, ConvexityError,
    ModulusEstimate, SegmentReport, Verdict, DEFAULT_CHECK_TOL,
};
pub use domain::{
    DomainError, GridSpec, Interval, NormKind, NormedSpace, PhiMap, RealFunction, Region,
    ViolationWitness,
};
pub use exprlang::{EvalError, Expression, ParseError};
pub use hadamard::{
    hh_bounds, product_pair_bound, product_self_bound, HHPairReport, HHReport, HadamardError,
};
pub use normgeom::{
    counterexample_search, counterexample_search_in, jn_test, parallelogram_defect,
    sqnorm_strong_convexity_check, Classification, NormGeomError, PairSampler, SearchReport,
    SpaceVerdict,
};
pub use quadrature::{integrate, integrate_with_budget, QuadError, QuadResult};

use thiserror::Error;

/// Any error the library can produce, for callers that funnel all
/// operations through one result type.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Convexity(#[from] ConvexityError),
    #[error(transparent)]
    Hadamard(#[from] HadamardError),
    #[error(transparent)]
    NormGeom(#[from] NormGeomError),
    #[error(transparent)]
    Quad(#[from] QuadError),
}
