//! Core semantic types shared by every analysis: intervals and boxes,
//! function and map wrappers, normed spaces, grids, violation witnesses,
//! and the deterministic worst-witness accumulator.
//!
//! Everything here is immutable after construction and safe to share across
//! threads. Scan determinism rests on two conventions fixed in this module:
//! grids are ordered lexicographically (first axis slowest), and worst-case
//! ties are broken in favour of the candidate encountered first in scan
//! order, within [`WITNESS_TIE_TOL`] of the minimum.

use std::collections::VecDeque;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::exprlang::{self, EvalError, Expression, ParseError};

/// Slack window within which the earliest-scanned candidate wins.
pub const WITNESS_TIE_TOL: f64 = 1e-12;

/// Absolute overshoot allowed when checking that a map image stays inside
/// its declared domain.
pub const BOUNDARY_OVERSHOOT_TOL: f64 = 1e-12;

/// Errors raised by the construction or use of the core types.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("invalid interval [{lo}, {hi}]: bounds must be finite with lo < hi")]
    BadInterval { lo: f64, hi: f64 },
    #[error("a region needs at least one axis")]
    EmptyRegion,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("arity must be at least 1")]
    ZeroArity,
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("map image coordinate {value} escapes domain axis {axis} = [{lo}, {hi}]")]
    ImageEscapesDomain { axis: usize, value: f64, lo: f64, hi: f64 },
    #[error("p-norm exponent must be a finite real with p >= 1, got {p}")]
    BadNormExponent { p: f64 },
    #[error("invalid grid spec: {reason}")]
    BadGridSpec { reason: &'static str },
}

/// A closed bounded interval [lo, hi] with lo < hi.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Interval, DomainError> {
        if !lo.is_finite() || !hi.is_finite() || lo >= hi {
            return Err(DomainError::BadInterval { lo, hi });
        }
        Ok(Interval { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, v: f64, pad: f64) -> bool {
        v >= self.lo - pad && v <= self.hi + pad
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.lo, self.hi)
    }
}

/// An axis-aligned box: one interval per axis. Dimension 1 is an interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Region {
    axes: Vec<Interval>,
}

impl Region {
    pub fn new(axes: Vec<Interval>) -> Result<Region, DomainError> {
        if axes.is_empty() {
            return Err(DomainError::EmptyRegion);
        }
        Ok(Region { axes })
    }

    pub fn from_interval(interval: Interval) -> Region {
        Region { axes: vec![interval] }
    }

    /// A cube [lo, hi]^dim.
    pub fn cube(lo: f64, hi: f64, dim: usize) -> Result<Region, DomainError> {
        if dim == 0 {
            return Err(DomainError::EmptyRegion);
        }
        let axis = Interval::new(lo, hi)?;
        Ok(Region { axes: vec![axis; dim] })
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Interval] {
        &self.axes
    }

    pub fn contains(&self, p: &[f64], pad: f64) -> bool {
        p.len() == self.axes.len()
            && p.iter().zip(&self.axes).all(|(v, axis)| axis.contains(*v, pad))
    }
}

/// Canonical variable names x1..xn used by every parsed function and map.
pub fn canonical_variables(arity: usize) -> Vec<String> {
    (1..=arity).map(|i| format!("x{i}")).collect()
}

fn parse_canonical(source: &str, arity: usize) -> Result<Expression, DomainError> {
    let names = canonical_variables(arity);
    let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    Ok(exprlang::parse(source, &refs)?)
}

/// A scalar function of n real variables, wrapped with its arity and a
/// display label. Declared variables are exactly x1..xn; the expression may
/// use any subset of them.
#[derive(Debug, Clone)]
pub struct RealFunction {
    expr: Expression,
    arity: usize,
    label: String,
}

impl RealFunction {
    pub fn parse(source: &str, arity: usize) -> Result<RealFunction, DomainError> {
        if arity == 0 {
            return Err(DomainError::ZeroArity);
        }
        let expr = parse_canonical(source, arity)?;
        Ok(RealFunction { expr, arity, label: source.trim().to_string() })
    }

    /// Wraps an already-built expression; its declared variable count fixes
    /// the arity.
    pub fn from_expression(expr: Expression, label: impl Into<String>) -> RealFunction {
        let arity = expr.variables().len();
        RealFunction { expr, arity, label: label.into() }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn expression(&self) -> &Expression {
        &self.expr
    }

    pub fn eval(&self, point: &[f64]) -> Result<f64, EvalError> {
        self.expr.eval_values(point)
    }
}

/// A self-map of a region, one coordinate expression per axis.
///
/// The self-map property is enforced where it matters: every [`PhiMap::apply`]
/// checks that the image stays inside the domain, allowing
/// [`BOUNDARY_OVERSHOOT_TOL`] of rounding overshoot per axis.
#[derive(Debug, Clone)]
pub struct PhiMap {
    components: Vec<Expression>,
    domain: Region,
    label: String,
}

impl PhiMap {
    pub fn parse(sources: &[&str], domain: Region) -> Result<PhiMap, DomainError> {
        if sources.len() != domain.dim() {
            return Err(DomainError::DimensionMismatch {
                expected: domain.dim(),
                got: sources.len(),
            });
        }
        let mut components = Vec::with_capacity(sources.len());
        for source in sources {
            components.push(parse_canonical(source, domain.dim())?);
        }
        let label = sources.join(", ");
        Ok(PhiMap { components, domain, label })
    }

    /// The identity map of a region.
    pub fn identity(domain: Region) -> PhiMap {
        let names = canonical_variables(domain.dim());
        let components = names
            .iter()
            .map(|name| {
                let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
                exprlang::parse(name, &refs).expect("canonical variable parses")
            })
            .collect();
        PhiMap { components, domain, label: "identity".to_string() }
    }

    pub fn domain(&self) -> &Region {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Evaluates the map at `p` and verifies the image stays in the domain.
    pub fn apply(&self, p: &[f64]) -> Result<Vec<f64>, DomainError> {
        if p.len() != self.dim() {
            return Err(DomainError::DimensionMismatch { expected: self.dim(), got: p.len() });
        }
        let mut image = Vec::with_capacity(self.components.len());
        for expr in &self.components {
            image.push(expr.eval_values(p)?);
        }
        for (axis, (v, interval)) in image.iter().zip(self.domain.axes()).enumerate() {
            if !interval.contains(*v, BOUNDARY_OVERSHOOT_TOL) {
                return Err(DomainError::ImageEscapesDomain {
                    axis,
                    value: *v,
                    lo: interval.lo(),
                    hi: interval.hi(),
                });
            }
        }
        Ok(image)
    }
}

/// Which norm a [`NormedSpace`] carries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormKind {
    Euclidean,
    Maximum,
    P(f64),
}

/// R^dim equipped with one of the built-in norms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormedSpace {
    dim: usize,
    kind: NormKind,
}

impl NormedSpace {
    pub fn new(dim: usize, kind: NormKind) -> Result<NormedSpace, DomainError> {
        if dim == 0 {
            return Err(DomainError::ZeroArity);
        }
        if let NormKind::P(p) = kind {
            if !p.is_finite() || p < 1.0 {
                return Err(DomainError::BadNormExponent { p });
            }
        }
        Ok(NormedSpace { dim, kind })
    }

    pub fn euclidean(dim: usize) -> NormedSpace {
        NormedSpace::new(dim, NormKind::Euclidean).expect("positive dimension")
    }

    pub fn maximum(dim: usize) -> NormedSpace {
        NormedSpace::new(dim, NormKind::Maximum).expect("positive dimension")
    }

    pub fn p_norm(dim: usize, p: f64) -> Result<NormedSpace, DomainError> {
        NormedSpace::new(dim, NormKind::P(p))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> NormKind {
        self.kind
    }

    pub fn norm(&self, u: &[f64]) -> Result<f64, DomainError> {
        if u.len() != self.dim {
            return Err(DomainError::DimensionMismatch { expected: self.dim, got: u.len() });
        }
        Ok(match self.kind {
            NormKind::Euclidean => u.iter().map(|v| v * v).sum::<f64>().sqrt(),
            NormKind::Maximum => u.iter().fold(0.0_f64, |acc, v| acc.max(v.abs())),
            NormKind::P(p) => {
                if p == 1.0 {
                    u.iter().map(|v| v.abs()).sum()
                } else {
                    u.iter().map(|v| v.abs().powf(p)).sum::<f64>().powf(1.0 / p)
                }
            }
        })
    }

    /// The squared norm as an expression in x1..xdim, for feeding the square
    /// of this space's norm through the function-based checkers.
    pub fn sqnorm_function(&self) -> RealFunction {
        let n = self.dim;
        let source = if n == 1 {
            // Every built-in norm restricts to |x| in one dimension.
            "x1^2".to_string()
        } else {
            match self.kind {
                NormKind::Euclidean => canonical_variables(n)
                    .iter()
                    .map(|v| format!("{v}^2"))
                    .collect::<Vec<_>>()
                    .join(" + "),
                NormKind::Maximum => {
                    let mut body = format!("abs(x{n})");
                    for i in (1..n).rev() {
                        body = format!("max(abs(x{i}), {body})");
                    }
                    format!("({body})^2")
                }
                NormKind::P(p) => {
                    let sum = canonical_variables(n)
                        .iter()
                        .map(|v| format!("abs({v})^{p}"))
                        .collect::<Vec<_>>()
                        .join(" + ");
                    format!("({sum})^{}", 2.0 / p)
                }
            }
        };
        let expr = parse_canonical(&source, n).expect("generated squared-norm source parses");
        RealFunction { expr, arity: n, label: "norm_sq".to_string() }
    }
}

/// Grid resolution and refinement parameters for the scanning checkers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    points_per_axis: usize,
    t_steps: usize,
    refinement_rounds: usize,
    min_separation: f64,
}

impl GridSpec {
    /// `t_steps` must be even so the t grid {i/t_steps} contains exactly
    /// 0, 1/2 and 1; `points_per_axis` must cover both interval endpoints.
    pub fn new(
        points_per_axis: usize,
        t_steps: usize,
        refinement_rounds: usize,
        min_separation: f64,
    ) -> Result<GridSpec, DomainError> {
        if points_per_axis < 2 {
            return Err(DomainError::BadGridSpec {
                reason: "points_per_axis must be at least 2 to include both endpoints",
            });
        }
        if t_steps < 2 || !t_steps.is_multiple_of(2) {
            return Err(DomainError::BadGridSpec {
                reason: "t_steps must be even and at least 2 so the t grid hits 0, 1/2, 1",
            });
        }
        if !min_separation.is_finite() || min_separation <= 0.0 {
            return Err(DomainError::BadGridSpec {
                reason: "min_separation must be a positive real",
            });
        }
        Ok(GridSpec { points_per_axis, t_steps, refinement_rounds, min_separation })
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn t_steps(&self) -> usize {
        self.t_steps
    }

    pub fn refinement_rounds(&self) -> usize {
        self.refinement_rounds
    }

    pub fn min_separation(&self) -> f64 {
        self.min_separation
    }

    pub fn with_refinement_rounds(mut self, rounds: usize) -> GridSpec {
        self.refinement_rounds = rounds;
        self
    }
}

impl Default for GridSpec {
    fn default() -> GridSpec {
        GridSpec::new(17, 16, 3, 1e-6).expect("default grid spec is valid")
    }
}

/// Uniform samples of an interval, hitting both endpoints exactly.
///
/// Computed as lo·(1−s) + hi·s so the ends come out bit-exact and common
/// fractions of small integer ranges are not contaminated by width rounding.
pub fn linspace(interval: &Interval, n: usize) -> Vec<f64> {
    debug_assert!(n >= 2);
    let (lo, hi) = (interval.lo(), interval.hi());
    (0..n)
        .map(|i| {
            let s = i as f64 / (n - 1) as f64;
            lo * (1.0 - s) + hi * s
        })
        .collect()
}

/// The uniform t grid {i/t_steps : 0 ≤ i ≤ t_steps}.
pub fn t_grid(t_steps: usize) -> Vec<f64> {
    (0..=t_steps).map(|i| i as f64 / t_steps as f64).collect()
}

/// Full cartesian grid over a region, ordered lexicographically with the
/// first axis slowest. Deterministic: equal inputs give identical sequences.
pub fn make_grid(region: &Region, spec: &GridSpec) -> Vec<Vec<f64>> {
    let per_axis: Vec<Vec<f64>> =
        region.axes().iter().map(|axis| linspace(axis, spec.points_per_axis())).collect();
    cartesian(&per_axis)
}

/// Lexicographic cartesian product of per-axis coordinate lists.
pub fn cartesian(per_axis: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let total: usize = per_axis.iter().map(|a| a.len()).product();
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; per_axis.len()];
    for _ in 0..total {
        out.push(idx.iter().zip(per_axis).map(|(i, axis)| axis[*i]).collect());
        for axis in (0..per_axis.len()).rev() {
            idx[axis] += 1;
            if idx[axis] < per_axis[axis].len() {
                break;
            }
            idx[axis] = 0;
        }
    }
    out
}

/// Deterministic uniform samples of a region from a seeded generator.
pub fn sample_points(region: &Region, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            region
                .axes()
                .iter()
                .map(|axis| {
                    let u: f64 = rng.random();
                    axis.lo() + u * axis.width()
                })
                .collect()
        })
        .collect()
}

/// The convex combination t·a + (1−t)·b, computed with one fixed formula so
/// independent scanners agree bit-for-bit.
pub fn convex_mix(t: f64, a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(ai, bi)| t * ai + (1.0 - t) * bi).collect()
}

pub fn point_add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(ai, bi)| ai + bi).collect()
}

pub fn point_sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(ai, bi)| ai - bi).collect()
}

/// A concrete triple at which a checked inequality fails, with the measured
/// sides. Slack is rhs − lhs; a violation has slack below −tol.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViolationWitness {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

impl ViolationWitness {
    pub fn new(x: Vec<f64>, y: Vec<f64>, t: f64, lhs: f64, rhs: f64) -> ViolationWitness {
        ViolationWitness { x, y, t, lhs, rhs, slack: rhs - lhs }
    }
}

/// Streaming minimum tracker with the deterministic tie-break: the winner is
/// the candidate observed earliest among those within `tie_tol` of the final
/// minimum score.
///
/// Internally keeps a buffer of candidates in observation order with
/// strictly decreasing scores. A new candidate is dominated (dropped) when
/// an earlier buffered one scores no higher; buffered candidates are evicted
/// from the front once the running minimum proves them outside the tie
/// window. The front entry is therefore always the current answer, and
/// [`WitnessAccumulator::absorb`] makes chunked parallel scans reproduce the
/// serial result exactly, provided chunks are absorbed in scan order.
#[derive(Debug, Clone)]
pub struct WitnessAccumulator<T> {
    tie_tol: f64,
    entries: VecDeque<(f64, T)>,
    observed: u64,
}

impl<T> WitnessAccumulator<T> {
    pub fn new(tie_tol: f64) -> WitnessAccumulator<T> {
        WitnessAccumulator { tie_tol, entries: VecDeque::new(), observed: 0 }
    }

    /// Observes one candidate; the payload is only built if it might win.
    pub fn observe_with<F: FnOnce() -> T>(&mut self, score: f64, make: F) {
        debug_assert!(!score.is_nan());
        self.observed += 1;
        self.push(score, make);
    }

    fn push<F: FnOnce() -> T>(&mut self, score: f64, make: F) {
        let dominated = matches!(self.entries.back(), Some((s, _)) if *s <= score);
        if dominated {
            return;
        }
        self.entries.push_back((score, make()));
        let min = score;
        while let Some((front, _)) = self.entries.front() {
            if *front > min + self.tie_tol {
                self.entries.pop_front();
            } else {
                break;
            }
        }
    }

    /// Number of candidates observed, merges included.
    pub fn observed(&self) -> u64 {
        self.observed
    }

    /// The minimum score so far.
    pub fn min_score(&self) -> Option<f64> {
        self.entries.back().map(|(s, _)| *s)
    }

    /// The winning candidate: earliest observed within the tie window.
    pub fn worst(&self) -> Option<(f64, &T)> {
        self.entries.front().map(|(s, p)| (*s, p))
    }

    pub fn into_worst(mut self) -> Option<(f64, T)> {
        self.entries.pop_front()
    }

    /// Merges a later chunk's accumulator into this one. All of `other`'s
    /// observations must come after this accumulator's in scan order.
    pub fn absorb(&mut self, other: WitnessAccumulator<T>) {
        self.observed += other.observed;
        for (score, payload) in other.entries {
            self.push(score, move || payload);
        }
    }
}
