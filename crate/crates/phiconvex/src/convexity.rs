//! Defect computation, strong convexity checking along a composed map,
//! modulus estimation, segment restriction tests, and the shift-identity
//! residual.
//!
//! All checkers share one deterministic scanning engine: a lexicographic
//! pass over ordered grid pairs and t values, followed by rounds of local
//! refinement around the worst triple seen so far, with radii halving each
//! round. The engine is the single place where the inequality arithmetic
//! happens ([`inequality_sides`], [`effective_tolerance`]), so independent
//! oracles can reproduce its scores bit for bit.

use serde::Serialize;
use thiserror::Error;

use crate::domain::{
    convex_mix, make_grid, point_sub, t_grid, DomainError, GridSpec, NormedSpace, PhiMap,
    RealFunction, Region, ViolationWitness, WitnessAccumulator, WITNESS_TIE_TOL,
};
use crate::exprlang::{EvalError, Expression, Node};

/// Default absolute verdict tolerance; the effective tolerance adds the same
/// amount relative to the larger inequality side.
pub const DEFAULT_CHECK_TOL: f64 = 1e-9;

/// Errors raised by the convexity checkers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConvexityError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("function arity {arity} does not match the map dimension {dim}")]
    ArityMismatch { arity: usize, dim: usize },
    #[error("space dimension {space} does not match the map dimension {dim}")]
    SpaceMismatch { space: usize, dim: usize },
    #[error("t = {0} lies outside [0, 1]")]
    BadT(f64),
    #[error("modulus must be a finite real, got {0}")]
    BadModulus(f64),
    #[error("point {point:?} lies outside the map domain")]
    OutsideDomain { point: Vec<f64> },
    #[error("every grid pair has image separation below {delta}; modulus ratio undefined")]
    AllPairsExcluded { delta: f64 },
    #[error("segment restriction check needs at least 3 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("worker count must be at least 1")]
    ZeroWorkers,
}

/// Outcome of a convexity check on a grid.
#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Holds,
    Violated(ViolationWitness),
}

impl Verdict {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds)
    }

    pub fn witness(&self) -> Option<&ViolationWitness> {
        match self {
            Verdict::Holds => None,
            Verdict::Violated(w) => Some(w),
        }
    }
}

/// Estimated best modulus on a grid: the minimum defect ratio.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModulusEstimate {
    /// Minimum observed ratio; negative means not even convex along the map
    /// on the scanned grid.
    pub c_star: f64,
    pub minimizing_x: Vec<f64>,
    pub minimizing_y: Vec<f64>,
    pub minimizing_t: f64,
    /// Pairs that passed the separation filter, refinement rounds included.
    pub pairs_examined: u64,
    pub delta_used: f64,
}

/// Result of a segment restriction convexity test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentReport {
    pub holds: bool,
    pub min_second_difference: f64,
    /// Interior node where the minimum second difference occurred.
    pub argmin_t: f64,
}

/// Both sides of the strong convexity inequality at one triple, from the
/// cached values f(φx), f(φy), f(mix) and the image distance d.
///
/// lhs = f(mix); rhs = t·f(φx) + (1−t)·f(φy) − c·t·(1−t)·d². The check
/// passes at the triple when lhs ≤ rhs. This is the only definition of the
/// two sides in the crate; keep oracles pointed here.
pub fn inequality_sides(fx: f64, fy: f64, fmix: f64, d: f64, c: f64, t: f64) -> (f64, f64) {
    (fmix, t * fx + (1.0 - t) * fy - c * t * (1.0 - t) * d * d)
}

/// Violation threshold: `tol_abs` absolute plus `tol_abs` relative to the
/// larger side, so verdicts survive rounding noise at any scale.
pub fn effective_tolerance(tol_abs: f64, lhs: f64, rhs: f64) -> f64 {
    tol_abs * (1.0 + lhs.abs().max(rhs.abs()))
}

fn ensure_compatible(
    f: &RealFunction,
    phi: &PhiMap,
    space: &NormedSpace,
) -> Result<(), ConvexityError> {
    if f.arity() != phi.dim() {
        return Err(ConvexityError::ArityMismatch { arity: f.arity(), dim: phi.dim() });
    }
    if space.dim() != phi.dim() {
        return Err(ConvexityError::SpaceMismatch { space: space.dim(), dim: phi.dim() });
    }
    Ok(())
}

fn ensure_t(t: f64) -> Result<(), ConvexityError> {
    if !(0.0..=1.0).contains(&t) {
        return Err(ConvexityError::BadT(t));
    }
    Ok(())
}

fn ensure_inside(region: &Region, p: &[f64]) -> Result<(), ConvexityError> {
    if !region.contains(p, crate::domain::BOUNDARY_OVERSHOOT_TOL) {
        return Err(ConvexityError::OutsideDomain { point: p.to_vec() });
    }
    Ok(())
}

/// The defect D(x, y, t) = t·f(φx) + (1−t)·f(φy) − f(t·φx + (1−t)·φy).
///
/// f is strongly convex along φ with modulus c on a grid iff the defect
/// dominates c·t·(1−t)·‖φx − φy‖² at every grid triple.
pub fn defect(
    f: &RealFunction,
    phi: &PhiMap,
    space: &NormedSpace,
    x: &[f64],
    y: &[f64],
    t: f64,
) -> Result<f64, ConvexityError> {
    ensure_compatible(f, phi, space)?;
    ensure_t(t)?;
    ensure_inside(phi.domain(), x)?;
    ensure_inside(phi.domain(), y)?;
    let phix = phi.apply(x)?;
    let phiy = phi.apply(y)?;
    let fx = f.eval(&phix)?;
    let fy = f.eval(&phiy)?;
    let fmix = f.eval(&convex_mix(t, &phix, &phiy))?;
    Ok(t * fx + (1.0 - t) * fy - fmix)
}

#[derive(Clone, Copy)]
enum ScanMode {
    Slack { c: f64, tol_abs: f64 },
    Ratio { delta: f64 },
}

#[derive(Debug, Clone)]
struct Cand {
    x: Vec<f64>,
    y: Vec<f64>,
    t: f64,
    lhs: f64,
    rhs: f64,
}

impl Cand {
    fn witness(&self) -> ViolationWitness {
        ViolationWitness::new(self.x.clone(), self.y.clone(), self.t, self.lhs, self.rhs)
    }
}

struct ScanOutcome {
    all: WitnessAccumulator<Cand>,
    violations: WitnessAccumulator<Cand>,
    pairs_examined: u64,
}

fn eval_cache(
    f: &RealFunction,
    phi: &PhiMap,
    points: &[Vec<f64>],
) -> Result<(Vec<Vec<f64>>, Vec<f64>), ConvexityError> {
    let mut images = Vec::with_capacity(points.len());
    let mut values = Vec::with_capacity(points.len());
    for p in points {
        let image = phi.apply(p)?;
        values.push(f.eval(&image)?);
        images.push(image);
    }
    Ok((images, values))
}

fn local_linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if hi <= lo {
        return vec![lo];
    }
    (0..n)
        .map(|i| {
            let s = i as f64 / (n - 1) as f64;
            lo * (1.0 - s) + hi * s
        })
        .collect()
}

const REFINE_POINTS: usize = 5;

fn local_grid(region: &Region, center: &[f64], base_cells: &[f64], scale: f64) -> Vec<Vec<f64>> {
    let per_axis: Vec<Vec<f64>> = region
        .axes()
        .iter()
        .zip(center.iter().zip(base_cells))
        .map(|(axis, (c, cell))| {
            let r = cell * scale;
            local_linspace(axis.clamp(c - r), axis.clamp(c + r), REFINE_POINTS)
        })
        .collect();
    crate::domain::cartesian(&per_axis)
}

fn local_t_values(center: f64, radius: f64) -> Vec<f64> {
    local_linspace((center - radius).max(0.0), (center + radius).min(1.0), REFINE_POINTS)
}

#[allow(clippy::too_many_arguments)]
fn scan_row(
    f: &RealFunction,
    space: &NormedSpace,
    mode: ScanMode,
    xs: &[Vec<f64>],
    ximg: &[Vec<f64>],
    xfv: &[f64],
    ys: &[Vec<f64>],
    yimg: &[Vec<f64>],
    yfv: &[f64],
    t_values: &[f64],
    i: usize,
    budget: &mut Option<u64>,
    all: &mut WitnessAccumulator<Cand>,
    violations: &mut WitnessAccumulator<Cand>,
    pairs: &mut u64,
) -> Result<(), ConvexityError> {
    for j in 0..ys.len() {
        if matches!(budget, Some(0)) {
            return Ok(());
        }
        let d = space.norm(&point_sub(&ximg[i], &yimg[j]))?;
        match mode {
            ScanMode::Ratio { delta } => {
                if d < delta {
                    continue;
                }
                *pairs += 1;
                for &t in t_values {
                    // Both endpoints make the ratio a removable 0/0 form.
                    if t <= 0.0 || t >= 1.0 {
                        continue;
                    }
                    if let Some(b) = budget {
                        if *b == 0 {
                            return Ok(());
                        }
                        *b -= 1;
                    }
                    let fmix = f.eval(&convex_mix(t, &ximg[i], &yimg[j]))?;
                    let numer = t * xfv[i] + (1.0 - t) * yfv[j] - fmix;
                    let ratio = numer / (t * (1.0 - t) * d * d);
                    all.observe_with(ratio, || Cand {
                        x: xs[i].clone(),
                        y: ys[j].clone(),
                        t,
                        lhs: fmix,
                        rhs: numer,
                    });
                }
            }
            ScanMode::Slack { c, tol_abs } => {
                *pairs += 1;
                for &t in t_values {
                    if let Some(b) = budget {
                        if *b == 0 {
                            return Ok(());
                        }
                        *b -= 1;
                    }
                    let fmix = f.eval(&convex_mix(t, &ximg[i], &yimg[j]))?;
                    let (lhs, rhs) = inequality_sides(xfv[i], yfv[j], fmix, d, c, t);
                    let slack = rhs - lhs;
                    let make = || Cand { x: xs[i].clone(), y: ys[j].clone(), t, lhs, rhs };
                    all.observe_with(slack, make);
                    if slack < -effective_tolerance(tol_abs, lhs, rhs) {
                        let make = || Cand { x: xs[i].clone(), y: ys[j].clone(), t, lhs, rhs };
                        violations.observe_with(slack, make);
                    }
                }
            }
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn scan_block(
    f: &RealFunction,
    space: &NormedSpace,
    mode: ScanMode,
    xs: &[Vec<f64>],
    ximg: &[Vec<f64>],
    xfv: &[f64],
    ys: &[Vec<f64>],
    yimg: &[Vec<f64>],
    yfv: &[f64],
    t_values: &[f64],
    workers: usize,
    budget: &mut Option<u64>,
    out: &mut ScanOutcome,
) -> Result<(), ConvexityError> {
    // Budgeted scans stay serial so the cut-off point is well defined.
    if workers <= 1 || budget.is_some() || xs.len() < 2 * workers {
        for i in 0..xs.len() {
            if matches!(budget, Some(0)) {
                break;
            }
            scan_row(
                f, space, mode, xs, ximg, xfv, ys, yimg, yfv, t_values, i, budget,
                &mut out.all, &mut out.violations, &mut out.pairs_examined,
            )?;
        }
        return Ok(());
    }

    type ChunkResult = Result<(WitnessAccumulator<Cand>, WitnessAccumulator<Cand>, u64), ConvexityError>;
    let chunk = xs.len().div_ceil(workers);
    let mut results: Vec<ChunkResult> = Vec::new();
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for w in 0..workers {
            let start = w * chunk;
            if start >= xs.len() {
                break;
            }
            let end = (start + chunk).min(xs.len());
            handles.push(scope.spawn(move || -> ChunkResult {
                let mut all = WitnessAccumulator::new(WITNESS_TIE_TOL);
                let mut violations = WitnessAccumulator::new(WITNESS_TIE_TOL);
                let mut pairs = 0u64;
                let mut unlimited = None;
                for i in start..end {
                    scan_row(
                        f, space, mode, xs, ximg, xfv, ys, yimg, yfv, t_values, i,
                        &mut unlimited, &mut all, &mut violations, &mut pairs,
                    )?;
                }
                Ok((all, violations, pairs))
            }));
        }
        for handle in handles {
            results.push(handle.join().expect("scan worker panicked"));
        }
    });
    // Absorb in chunk order: accumulator merging is scan-order sensitive.
    for result in results {
        let (all, violations, pairs) = result?;
        out.all.absorb(all);
        out.violations.absorb(violations);
        out.pairs_examined += pairs;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn scan(
    f: &RealFunction,
    phi: &PhiMap,
    space: &NormedSpace,
    mode: ScanMode,
    grid: &GridSpec,
    t_values: &[f64],
    refine_t: bool,
    workers: usize,
    mut budget: Option<u64>,
) -> Result<ScanOutcome, ConvexityError> {
    ensure_compatible(f, phi, space)?;
    if workers == 0 {
        return Err(ConvexityError::ZeroWorkers);
    }
    let region = phi.domain();
    let points = make_grid(region, grid);
    let mut out = ScanOutcome {
        all: WitnessAccumulator::new(WITNESS_TIE_TOL),
        violations: WitnessAccumulator::new(WITNESS_TIE_TOL),
        pairs_examined: 0,
    };

    let (images, values) = eval_cache(f, phi, &points)?;
    scan_block(
        f, space, mode, &points, &images, &values, &points, &images, &values, t_values,
        workers, &mut budget, &mut out,
    )?;

    let base_cells: Vec<f64> = region
        .axes()
        .iter()
        .map(|a| a.width() / (grid.points_per_axis() - 1) as f64)
        .collect();
    let t_cell = 1.0 / grid.t_steps() as f64;

    for round in 1..=grid.refinement_rounds() {
        if matches!(budget, Some(0)) {
            break;
        }
        let Some((_, cand)) = out.all.worst() else {
            break;
        };
        let (cx, cy, ct) = (cand.x.clone(), cand.y.clone(), cand.t);
        let scale = 0.5_f64.powi(round as i32 - 1);
        let local_x = local_grid(region, &cx, &base_cells, scale);
        let local_y = local_grid(region, &cy, &base_cells, scale);
        let local_t =
            if refine_t { local_t_values(ct, t_cell * scale) } else { t_values.to_vec() };
        let (lx_img, lx_val) = eval_cache(f, phi, &local_x)?;
        let (ly_img, ly_val) = eval_cache(f, phi, &local_y)?;
        scan_block(
            f, space, mode, &local_x, &lx_img, &lx_val, &local_y, &ly_img, &ly_val,
            &local_t, workers, &mut budget, &mut out,
        )?;
    }
    Ok(out)
}

fn slack_verdict(out: &ScanOutcome) -> Verdict {
    match out.violations.worst() {
        None => Verdict::Holds,
        Some((_, cand)) => Verdict::Violated(cand.witness()),
    }
}

fn ensure_modulus(c: f64) -> Result<(), ConvexityError> {
    if !c.is_finite() {
        return Err(ConvexityError::BadModulus(c));
    }
    Ok(())
}

/// Checks strong convexity with modulus `c` along `phi` over the full grid
/// of (x, y, t) triples, then `refinement_rounds` of local refinement around
/// the worst triple. `c = 0` tests plain convexity along the map; negative
/// `c` tests the correspondingly weaker lower bound.
pub fn check_strong_phi_convex(
    f: &RealFunction,
    phi: &PhiMap,
    space: &NormedSpace,
    c: f64,
    grid: &GridSpec,
    tol_abs: f64,
    workers: usize,
) -> Result<Verdict, ConvexityError> {
    ensure_modulus(c)?;
    let t_values = t_grid(grid.t_steps());
    let out = scan(
        f, phi, space, ScanMode::Slack { c, tol_abs }, grid, &t_values, true, workers, None,
    )?;
    Ok(slack_verdict(&out))
}

/// The same check restricted to t = 1/2.
pub fn check_strong_phi_midconvex(
    f: &RealFunction,
    phi: &PhiMap,
    space: &NormedSpace,
    c: f64,
    grid: &GridSpec,
    tol_abs: f64,
    workers: usize,
) -> Result<Verdict, ConvexityError> {
    ensure_modulus(c)?;
    let out = scan(
        f, phi, space, ScanMode::Slack { c, tol_abs }, grid, &[0.5], false, workers, None,
    )?;
    Ok(slack_verdict(&out))
}

/// Budget-capped variant of the midconvexity check: at most `budget`
/// (x, y) pairs are examined, in deterministic scan order, and the scan is
/// kept serial so the cut-off point is well defined. Returns the verdict
/// together with the number of pairs actually examined.
pub(crate) fn midconvex_scan_budgeted(
    f: &RealFunction,
    phi: &PhiMap,
    space: &NormedSpace,
    c: f64,
    grid: &GridSpec,
    tol_abs: f64,
    budget: u64,
) -> Result<(Verdict, u64), ConvexityError> {
    ensure_modulus(c)?;
    let out = scan(
        f, phi, space, ScanMode::Slack { c, tol_abs }, grid, &[0.5], false, 1, Some(budget),
    )?;
    Ok((slack_verdict(&out), out.pairs_examined))
}

/// Estimates the best modulus as the minimum of
/// defect(x,y,t) / (t·(1−t)·‖φx−φy‖²) over the scanned grid, excluding
/// t ∈ {0, 1} and pairs with image separation below the grid's
/// min_separation. By construction the strong convexity check passes on the
/// same triples for any modulus strictly below the estimate.
pub fn estimate_modulus(
    f: &RealFunction,
    phi: &PhiMap,
    space: &NormedSpace,
    grid: &GridSpec,
    workers: usize,
) -> Result<ModulusEstimate, ConvexityError> {
    let delta = grid.min_separation();
    let t_values = t_grid(grid.t_steps());
    let out = scan(
        f, phi, space, ScanMode::Ratio { delta }, grid, &t_values, true, workers, None,
    )?;
    let Some(c_star) = out.all.min_score() else {
        return Err(ConvexityError::AllPairsExcluded { delta });
    };
    let (_, cand) = out.all.worst().expect("nonempty accumulator has a worst entry");
    Ok(ModulusEstimate {
        c_star,
        minimizing_x: cand.x.clone(),
        minimizing_y: cand.y.clone(),
        minimizing_t: cand.t,
        pairs_examined: out.pairs_examined,
        delta_used: delta,
    })
}

/// Tests classical convexity of g(t) = f(t·φx + (1−t)·φy) on [0, 1] via
/// second differences at `t_steps` uniform nodes (at least 3).
pub fn segment_restriction_convex(
    f: &RealFunction,
    phi: &PhiMap,
    x: &[f64],
    y: &[f64],
    t_steps: usize,
    tol: f64,
) -> Result<SegmentReport, ConvexityError> {
    if f.arity() != phi.dim() {
        return Err(ConvexityError::ArityMismatch { arity: f.arity(), dim: phi.dim() });
    }
    if t_steps < 3 {
        return Err(ConvexityError::TooFewNodes(t_steps));
    }
    ensure_inside(phi.domain(), x)?;
    ensure_inside(phi.domain(), y)?;
    let phix = phi.apply(x)?;
    let phiy = phi.apply(y)?;
    let nodes: Vec<f64> = (0..t_steps)
        .map(|i| i as f64 / (t_steps - 1) as f64)
        .collect();
    let mut g = Vec::with_capacity(t_steps);
    for &t in &nodes {
        g.push(f.eval(&convex_mix(t, &phix, &phiy))?);
    }
    let mut min_second_difference = f64::INFINITY;
    let mut argmin_t = nodes[1];
    for i in 1..t_steps - 1 {
        let second = g[i - 1] - 2.0 * g[i] + g[i + 1];
        if second < min_second_difference {
            min_second_difference = second;
            argmin_t = nodes[i];
        }
    }
    Ok(SegmentReport { holds: min_second_difference >= -tol, min_second_difference, argmin_t })
}

/// Residual of the shift identity at one triple:
/// R = defect_g − [defect_f − c·t·(1−t)·‖φx−φy‖²] with g = f − c·‖·‖².
///
/// R vanishes identically when the norm comes from an inner product, which
/// is exactly what licenses trading "strongly convex with modulus c" for
/// "g convex"; other norms generally leave a nonzero residual.
pub fn shift_identity_residual(
    f: &RealFunction,
    phi: &PhiMap,
    space: &NormedSpace,
    c: f64,
    x: &[f64],
    y: &[f64],
    t: f64,
) -> Result<f64, ConvexityError> {
    ensure_compatible(f, phi, space)?;
    ensure_modulus(c)?;
    ensure_t(t)?;
    ensure_inside(phi.domain(), x)?;
    ensure_inside(phi.domain(), y)?;
    let phix = phi.apply(x)?;
    let phiy = phi.apply(y)?;
    let mix = convex_mix(t, &phix, &phiy);
    let fx = f.eval(&phix)?;
    let fy = f.eval(&phiy)?;
    let fmix = f.eval(&mix)?;
    let d = space.norm(&point_sub(&phix, &phiy))?;
    let defect_f = t * fx + (1.0 - t) * fy - fmix;

    let gx = fx - c * space.norm(&phix)?.powi(2);
    let gy = fy - c * space.norm(&phiy)?.powi(2);
    let gmix = fmix - c * space.norm(&mix)?.powi(2);
    let defect_g = t * gx + (1.0 - t) * gy - gmix;

    Ok(defect_g - (defect_f - c * t * (1.0 - t) * d * d))
}

/// Builds g = f − c·‖·‖² as a concrete function, for running the plain
/// convexity check on the shifted function.
pub fn shifted_function(
    f: &RealFunction,
    space: &NormedSpace,
    c: f64,
) -> Result<RealFunction, ConvexityError> {
    ensure_modulus(c)?;
    if f.arity() != space.dim() {
        return Err(ConvexityError::ArityMismatch { arity: f.arity(), dim: space.dim() });
    }
    let sqnorm = space.sqnorm_function();
    let root = Node::sub(
        f.expression().root().clone(),
        Node::mul(Node::number(c), sqnorm.expression().root().clone()),
    );
    let expr = Expression::from_parts(root, crate::domain::canonical_variables(f.arity()))
        .map_err(DomainError::from)?;
    let label = format!("{} - {}*norm_sq", f.label(), c);
    Ok(RealFunction::from_expression(expr, label))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Interval;

    fn interval_map(lo: f64, hi: f64) -> PhiMap {
        PhiMap::identity(Region::from_interval(Interval::new(lo, hi).unwrap()))
    }

    fn line() -> NormedSpace {
        NormedSpace::euclidean(1)
    }

    #[test]
    fn defect_of_square_function() {
        let f = RealFunction::parse("x^2", 1).unwrap();
        let phi = interval_map(0.0, 1.0);
        let d = defect(&f, &phi, &line(), &[0.0], &[1.0], 0.5).unwrap();
        assert!((d - 0.25).abs() <= 1e-15);
    }

    #[test]
    fn affine_functions_have_zero_defect() {
        let f = RealFunction::parse("3*x + 1", 1).unwrap();
        let phi = interval_map(0.0, 1.0);
        for (x, y, t) in [(0.0, 1.0, 0.5), (0.25, 0.75, 0.125), (1.0, 0.5, 0.9)] {
            let d = defect(&f, &phi, &line(), &[x], &[y], t).unwrap();
            assert!(d.abs() <= 1e-12, "defect {d} at ({x},{y},{t})");
        }
    }

    #[test]
    fn defect_of_cube_at_the_documented_triple() {
        let f = RealFunction::parse("x^3", 1).unwrap();
        let phi = interval_map(-1.0, 1.0);
        let d = defect(&f, &phi, &line(), &[-1.0], &[0.0], 0.5).unwrap();
        assert!((d + 0.375).abs() <= 1e-15);
    }

    #[test]
    fn defect_validates_inputs() {
        let f = RealFunction::parse("x^2", 1).unwrap();
        let phi = interval_map(0.0, 1.0);
        assert!(matches!(
            defect(&f, &phi, &line(), &[0.0], &[1.0], 1.5),
            Err(ConvexityError::BadT(_))
        ));
        assert!(matches!(
            defect(&f, &phi, &line(), &[0.0], &[2.0], 0.5),
            Err(ConvexityError::OutsideDomain { .. })
        ));
        let f2 = RealFunction::parse("x1 + x2", 2).unwrap();
        assert!(matches!(
            defect(&f2, &phi, &line(), &[0.0], &[1.0], 0.5),
            Err(ConvexityError::ArityMismatch { .. })
        ));
    }

    #[test]
    fn square_function_is_strongly_convex_with_modulus_one() {
        let f = RealFunction::parse("x^2", 1).unwrap();
        let phi = interval_map(0.0, 1.0);
        let grid = GridSpec::new(9, 8, 2, 1e-6).unwrap();
        let v = check_strong_phi_convex(&f, &phi, &line(), 1.0, &grid, DEFAULT_CHECK_TOL, 1)
            .unwrap();
        assert!(v.holds());
    }

    #[test]
    fn cube_is_not_convex_on_negatives() {
        let f = RealFunction::parse("x^3", 1).unwrap();
        let phi = interval_map(-1.0, 1.0);
        let grid = GridSpec::new(9, 8, 3, 1e-6).unwrap();
        let v = check_strong_phi_convex(&f, &phi, &line(), 0.0, &grid, DEFAULT_CHECK_TOL, 1)
            .unwrap();
        let w = v.witness().expect("cube must be violated");
        assert!(w.slack <= -0.375, "slack {}", w.slack);
        assert_eq!(w.slack, w.rhs - w.lhs);
    }

    #[test]
    fn square_function_fails_an_excessive_modulus() {
        let f = RealFunction::parse("x^2", 1).unwrap();
        let phi = interval_map(0.0, 1.0);
        let grid = GridSpec::new(9, 8, 2, 1e-6).unwrap();
        let v = check_strong_phi_convex(&f, &phi, &line(), 1.5, &grid, DEFAULT_CHECK_TOL, 1)
            .unwrap();
        let w = v.witness().expect("ratio is 1 < 1.5");
        // Worst slack −0.5·t(1−t)(x−y)² is attained first at x=0, y=1, t=1/2.
        assert_eq!(w.x, vec![0.0]);
        assert_eq!(w.y, vec![1.0]);
        assert_eq!(w.t, 0.5);
        assert!((w.slack + 0.125).abs() <= 1e-12);
    }

    #[test]
    fn max_norm_square_fails_midconvexity_with_modulus_one() {
        let space = NormedSpace::maximum(2);
        let f = space.sqnorm_function();
        let phi = PhiMap::identity(Region::cube(-1.0, 1.0, 2).unwrap());
        let grid = GridSpec::new(3, 2, 2, 1e-6).unwrap();
        let v = check_strong_phi_midconvex(&f, &phi, &space, 1.0, &grid, DEFAULT_CHECK_TOL, 1)
            .unwrap();
        let w = v.witness().expect("max norm square is not midconvex with c=1");
        assert_eq!(w.x, vec![-1.0, -1.0]);
        assert_eq!(w.y, vec![-1.0, 1.0]);
        assert_eq!(w.t, 0.5);
        assert_eq!(w.lhs, 1.0);
        assert_eq!(w.rhs, 0.0);
        assert_eq!(w.slack, -1.0);
    }

    #[test]
    fn euclidean_square_norm_is_midconvex_with_modulus_one() {
        let space = NormedSpace::euclidean(2);
        let f = space.sqnorm_function();
        let phi = PhiMap::identity(Region::cube(-1.0, 1.0, 2).unwrap());
        let grid = GridSpec::new(5, 2, 2, 1e-6).unwrap();
        let v = check_strong_phi_midconvex(&f, &phi, &space, 1.0, &grid, DEFAULT_CHECK_TOL, 1)
            .unwrap();
        assert!(v.holds());
    }

    #[test]
    fn modulus_of_square_function_is_one() {
        let f = RealFunction::parse("x^2", 1).unwrap();
        let phi = interval_map(0.0, 1.0);
        let grid = GridSpec::new(9, 8, 3, 1e-6).unwrap();
        let est = estimate_modulus(&f, &phi, &line(), &grid, 1).unwrap();
        assert!((est.c_star - 1.0).abs() <= 1e-6, "c* = {}", est.c_star);
        assert!(est.pairs_examined > 0);
        assert_eq!(est.delta_used, 1e-6);
    }

    #[test]
    fn modulus_of_quartic_approaches_half_its_second_derivative_minimum() {
        let f = RealFunction::parse("x^4", 1).unwrap();
        let phi = interval_map(1.0, 2.0);
        let grid = GridSpec::new(17, 16, 12, 1e-6).unwrap();
        let est = estimate_modulus(&f, &phi, &line(), &grid, 1).unwrap();
        assert!((est.c_star - 6.0).abs() <= 1e-2, "c* = {}", est.c_star);
    }

    #[test]
    fn modulus_of_cube_is_negative() {
        let f = RealFunction::parse("x^3", 1).unwrap();
        let phi = interval_map(-1.0, 1.0);
        let grid = GridSpec::new(9, 8, 3, 1e-6).unwrap();
        let est = estimate_modulus(&f, &phi, &line(), &grid, 1).unwrap();
        assert!(est.c_star < 0.0, "c* = {}", est.c_star);
    }

    #[test]
    fn check_holds_just_below_the_estimated_modulus() {
        let grid = GridSpec::new(9, 8, 0, 1e-6).unwrap();
        for (source, lo, hi) in [("x^2", 0.0, 1.0), ("x^4", 1.0, 2.0), ("x^3", -1.0, 1.0)] {
            let f = RealFunction::parse(source, 1).unwrap();
            let phi = interval_map(lo, hi);
            let est = estimate_modulus(&f, &phi, &line(), &grid, 1).unwrap();
            let v = check_strong_phi_convex(
                &f, &phi, &line(), est.c_star - 1e-6, &grid, DEFAULT_CHECK_TOL, 1,
            )
            .unwrap();
            assert!(v.holds(), "{source}: c* = {}", est.c_star);
        }
    }

    #[test]
    fn degenerate_map_leaves_no_ratio_pairs() {
        // Constant map: every image coincides, so all pairs are excluded.
        let region = Region::from_interval(Interval::new(0.0, 1.0).unwrap());
        let phi = PhiMap::parse(&["0.5"], region).unwrap();
        let f = RealFunction::parse("x^2", 1).unwrap();
        let grid = GridSpec::new(5, 4, 1, 1e-6).unwrap();
        assert!(matches!(
            estimate_modulus(&f, &phi, &line(), &grid, 1),
            Err(ConvexityError::AllPairsExcluded { .. })
        ));
    }

    #[test]
    fn worker_counts_do_not_change_results() {
        let f = RealFunction::parse("x^3", 1).unwrap();
        let phi = interval_map(-1.0, 1.0);
        let grid = GridSpec::new(9, 8, 2, 1e-6).unwrap();
        let serial =
            check_strong_phi_convex(&f, &phi, &line(), 0.0, &grid, DEFAULT_CHECK_TOL, 1).unwrap();
        let parallel =
            check_strong_phi_convex(&f, &phi, &line(), 0.0, &grid, DEFAULT_CHECK_TOL, 4).unwrap();
        assert_eq!(serial, parallel);

        let m1 = estimate_modulus(&f, &phi, &line(), &grid, 1).unwrap();
        let m4 = estimate_modulus(&f, &phi, &line(), &grid, 4).unwrap();
        assert_eq!(m1, m4);
    }

    #[test]
    fn segment_restriction_of_square_holds() {
        let f = RealFunction::parse("x^2", 1).unwrap();
        let phi = interval_map(0.0, 1.0);
        let r = segment_restriction_convex(&f, &phi, &[0.0], &[1.0], 33, 1e-10).unwrap();
        assert!(r.holds);
        // g(t) = (1−t)² has constant second difference 2h².
        let h = 1.0 / 32.0;
        assert!((r.min_second_difference - 2.0 * h * h).abs() <= 1e-12);
    }

    #[test]
    fn segment_restriction_of_sine_fails_on_a_concave_stretch() {
        let f = RealFunction::parse("sin(x)", 1).unwrap();
        let phi = interval_map(0.0, 3.0);
        let r = segment_restriction_convex(&f, &phi, &[0.0], &[3.0], 33, 1e-10).unwrap();
        assert!(!r.holds);
        assert!(r.min_second_difference < 0.0);
    }

    #[test]
    fn segment_restriction_of_affine_is_flat() {
        let f = RealFunction::parse("2*x - 5", 1).unwrap();
        let phi = interval_map(0.0, 1.0);
        let r = segment_restriction_convex(&f, &phi, &[0.25], &[0.75], 17, 1e-10).unwrap();
        assert!(r.holds);
        assert!(r.min_second_difference.abs() <= 1e-12);
    }

    #[test]
    fn segment_restriction_needs_three_nodes() {
        let f = RealFunction::parse("x^2", 1).unwrap();
        let phi = interval_map(0.0, 1.0);
        assert!(matches!(
            segment_restriction_convex(&f, &phi, &[0.0], &[1.0], 2, 1e-10),
            Err(ConvexityError::TooFewNodes(2))
        ));
    }

    #[test]
    fn shift_residual_vanishes_in_euclidean_space() {
        let space = NormedSpace::euclidean(2);
        let f = RealFunction::parse("exp(x1) + x2^2", 2).unwrap();
        let phi = PhiMap::identity(Region::cube(-2.0, 2.0, 2).unwrap());
        for (x, y, t, c) in [
            ([0.1, -1.0], [1.5, 0.5], 0.3, 2.0),
            ([-2.0, 2.0], [2.0, -2.0], 0.5, 0.7),
            ([0.0, 0.0], [1.0, 1.0], 0.875, 5.0),
        ] {
            let r = shift_identity_residual(&f, &phi, &space, c, &x, &y, t).unwrap();
            assert!(r.abs() <= 1e-10, "residual {r} at {x:?},{y:?},{t},{c}");
        }
    }

    #[test]
    fn shift_residual_of_max_norm_square_at_the_documented_triple() {
        let space = NormedSpace::maximum(2);
        let f = space.sqnorm_function();
        let phi = PhiMap::identity(Region::cube(-2.0, 2.0, 2).unwrap());
        let r =
            shift_identity_residual(&f, &phi, &space, 1.0, &[1.0, 1.0], &[1.0, -1.0], 0.5)
                .unwrap();
        // Norms 1, 1, 2, 1 give defect_g = 0 and defect_f − c/4·‖(0,2)‖² = −1.
        assert!((r - 1.0).abs() <= 1e-12, "residual {r}");
    }

    #[test]
    fn shift_residual_is_exactly_zero_without_a_shift() {
        let space = NormedSpace::maximum(2);
        let f = RealFunction::parse("x1^2 - x2", 2).unwrap();
        let phi = PhiMap::identity(Region::cube(-2.0, 2.0, 2).unwrap());
        let r =
            shift_identity_residual(&f, &phi, &space, 0.0, &[1.0, 1.0], &[1.0, -1.0], 0.5)
                .unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn shifted_function_evaluates_as_f_minus_c_norm_squared() {
        let space = NormedSpace::euclidean(1);
        let f = RealFunction::parse("exp(x)", 1).unwrap();
        let g = shifted_function(&f, &space, 2.0).unwrap();
        let x = 0.5_f64;
        let expect = x.exp() - 2.0 * x * x;
        assert!((g.eval(&[x]).unwrap() - expect).abs() <= 1e-12);
    }

    #[test]
    fn shift_agreement_between_strong_and_shifted_checks() {
        let space = NormedSpace::euclidean(1);
        let phi = interval_map(1.0, 2.0);
        let grid = GridSpec::new(9, 8, 1, 1e-6).unwrap();
        let f = RealFunction::parse("x^4", 1).unwrap();
        for c in [3.0, 7.0] {
            let direct =
                check_strong_phi_convex(&f, &phi, &space, c, &grid, DEFAULT_CHECK_TOL, 1)
                    .unwrap();
            let g = shifted_function(&f, &space, c).unwrap();
            let shifted =
                check_strong_phi_convex(&g, &phi, &space, 0.0, &grid, DEFAULT_CHECK_TOL, 1)
                    .unwrap();
            assert_eq!(direct.holds(), shifted.holds(), "c = {c}");
        }
    }
}
