//! Norm geometry: the parallelogram defect, the Jordan–von Neumann test
//! that classifies a norm as inner-product-like or not, and the link back
//! to convexity via the squared norm.
//!
//! The squared norm is strongly convex with modulus 1 exactly when the
//! parallelogram identity holds, so these tests and the midconvexity
//! counterexample search are two views of the same geometric fact.

use serde::Serialize;
use thiserror::Error;

use crate::convexity::{
    check_strong_phi_convex, midconvex_scan_budgeted, ConvexityError, Verdict, DEFAULT_CHECK_TOL,
};
use crate::domain::{
    cartesian, linspace, point_add, point_sub, sample_points, DomainError, GridSpec,
    NormedSpace, PhiMap, Region, ViolationWitness, WitnessAccumulator, WITNESS_TIE_TOL,
};

/// Default per-axis endpoints of the search box used when none is given.
pub const DEFAULT_BOX_LO: f64 = -2.0;
pub const DEFAULT_BOX_HI: f64 = 2.0;

/// Errors raised by the norm-geometry operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum NormGeomError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Convexity(#[from] ConvexityError),
    #[error("grid sampler needs at least 2 points per axis, got {0}")]
    BadGridSampler(usize),
    #[error("sample budget must be positive")]
    ZeroSamples,
}

/// Outcome of the Jordan–von Neumann classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    InnerProductLike,
    NotInnerProduct,
}

/// Report of a parallelogram-defect scan. `classification` is
/// `InnerProductLike` iff `max_abs_defect <= tol`, and `worst_pair` is the
/// first pair (in scan order) attaining the maximum absolute defect.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpaceVerdict {
    pub classification: Classification,
    pub max_abs_defect: f64,
    pub worst_pair: (Vec<f64>, Vec<f64>),
    pub samples: u64,
    pub tol: f64,
}

/// How `jn_test` draws its (u, v) pairs from the search box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PairSampler {
    /// All ordered pairs of the uniform grid with this per-axis resolution,
    /// in lexicographic scan order, truncated at the sample budget.
    Grid { points_per_axis: usize },
    /// Seeded uniform pairs; each sample consumes two consecutive draws
    /// from one ChaCha8 stream, so results are reproducible by seed.
    Seeded { seed: u64 },
}

/// P(u, v) = ‖u+v‖² + ‖u−v‖² − 2‖u‖² − 2‖v‖². Zero for every u, v exactly
/// when the norm comes from an inner product.
pub fn parallelogram_defect(
    space: &NormedSpace,
    u: &[f64],
    v: &[f64],
) -> Result<f64, NormGeomError> {
    if u.len() != v.len() {
        return Err(DomainError::DimensionMismatch { expected: u.len(), got: v.len() }.into());
    }
    let sum = space.norm(&point_add(u, v))?;
    let diff = space.norm(&point_sub(u, v))?;
    let nu = space.norm(u)?;
    let nv = space.norm(v)?;
    Ok(sum * sum + diff * diff - 2.0 * nu * nu - 2.0 * nv * nv)
}

/// Scans pairs from `region` and classifies the norm by the largest
/// absolute parallelogram defect seen: at most `tol` means the norm is
/// indistinguishable from an inner-product norm on this sample.
///
/// `n_samples` caps the number of pairs examined in both sampler modes.
pub fn jn_test(
    space: &NormedSpace,
    region: &Region,
    sampler: PairSampler,
    n_samples: u64,
    tol: f64,
) -> Result<SpaceVerdict, NormGeomError> {
    if region.dim() != space.dim() {
        return Err(
            DomainError::DimensionMismatch { expected: space.dim(), got: region.dim() }.into()
        );
    }
    if n_samples == 0 {
        return Err(NormGeomError::ZeroSamples);
    }

    // Score is −|P| so the accumulator's minimum tracks the largest defect
    // and keeps the first pair attaining it.
    let mut acc: WitnessAccumulator<(Vec<f64>, Vec<f64>)> =
        WitnessAccumulator::new(WITNESS_TIE_TOL);
    let mut samples = 0u64;

    match sampler {
        PairSampler::Grid { points_per_axis } => {
            if points_per_axis < 2 {
                return Err(NormGeomError::BadGridSampler(points_per_axis));
            }
            let per_axis: Vec<Vec<f64>> =
                region.axes().iter().map(|a| linspace(a, points_per_axis)).collect();
            let points = cartesian(&per_axis);
            'outer: for u in &points {
                for v in &points {
                    if samples == n_samples {
                        break 'outer;
                    }
                    let p = parallelogram_defect(space, u, v)?;
                    samples += 1;
                    acc.observe_with(-p.abs(), || (u.clone(), v.clone()));
                }
            }
        }
        PairSampler::Seeded { seed } => {
            let draws = sample_points(region, 2 * n_samples as usize, seed);
            for pair in draws.chunks_exact(2) {
                let p = parallelogram_defect(space, &pair[0], &pair[1])?;
                samples += 1;
                acc.observe_with(-p.abs(), || (pair[0].clone(), pair[1].clone()));
            }
        }
    }

    let (neg_max, worst) = acc.worst().expect("at least one pair was examined");
    let max_abs_defect = -neg_max;
    let classification = if max_abs_defect <= tol {
        Classification::InnerProductLike
    } else {
        Classification::NotInnerProduct
    };
    Ok(SpaceVerdict {
        classification,
        max_abs_defect,
        worst_pair: worst.clone(),
        samples,
        tol,
    })
}

/// Runs the full strong-convexity check on ‖·‖² over `region` with the
/// identity map. With `c = 1` this is another face of the Jordan–von
/// Neumann test: the verdict is Holds exactly for inner-product-like norms.
pub fn sqnorm_strong_convexity_check(
    space: &NormedSpace,
    region: &Region,
    c: f64,
    grid: &GridSpec,
    tol_abs: f64,
    workers: usize,
) -> Result<Verdict, NormGeomError> {
    let f = space.sqnorm_function();
    let phi = PhiMap::identity(region.clone());
    Ok(check_strong_phi_convex(&f, &phi, space, c, grid, tol_abs, workers)?)
}

/// Result of a budgeted counterexample search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchReport {
    /// Most negative-slack violation found, none if the budget ran out
    /// without seeing one.
    pub witness: Option<ViolationWitness>,
    pub pairs_examined: u64,
}

/// Searches for a midpoint violation of strong convexity of ‖·‖² with
/// modulus `c`, examining at most `budget` pairs over `region` with `grid`.
/// The scan order is deterministic, so a given budget always examines the
/// same triples.
pub fn counterexample_search_in(
    space: &NormedSpace,
    region: &Region,
    grid: &GridSpec,
    c: f64,
    tol_abs: f64,
    budget: u64,
) -> Result<SearchReport, NormGeomError> {
    let f = space.sqnorm_function();
    let phi = PhiMap::identity(region.clone());
    let (verdict, pairs_examined) =
        midconvex_scan_budgeted(&f, &phi, space, c, grid, tol_abs, budget)?;
    let witness = match verdict {
        Verdict::Holds => None,
        Verdict::Violated(w) => Some(w),
    };
    Ok(SearchReport { witness, pairs_examined })
}

/// [`counterexample_search_in`] over the default box [−2, 2]^dim with the
/// default grid.
pub fn counterexample_search(
    space: &NormedSpace,
    c: f64,
    budget: u64,
) -> Result<SearchReport, NormGeomError> {
    let region = Region::cube(DEFAULT_BOX_LO, DEFAULT_BOX_HI, space.dim())?;
    counterexample_search_in(space, &region, &GridSpec::default(), c, DEFAULT_CHECK_TOL, budget)
}
