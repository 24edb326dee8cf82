//! Resolves merged arguments into concrete jobs and runs them. Every
//! default lives here, applied after flags and config have had their say.

use phiconvex::convexity::{
    check_strong_phi_convex, check_strong_phi_midconvex, estimate_modulus, shift_identity_residual,
    shifted_function, Verdict,
};
use phiconvex::domain::{
    sample_points, GridSpec, Interval, NormedSpace, PhiMap, RealFunction, Region,
};
use phiconvex::hadamard::{hh_bounds, product_pair_bound, product_self_bound};
use phiconvex::normgeom::{
    counterexample_search_in, jn_test, Classification, PairSampler,
};

use crate::args::{CommandArgs, ProblemArgs, SpaceArgs};
use crate::error::CliError;
use crate::report::{Inputs, Results, WitnessJson};

pub const DEFAULT_GRID_POINTS: usize = 17;
pub const DEFAULT_T_STEPS: usize = 16;
pub const DEFAULT_REFINE: usize = 3;
pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_QUAD_TOL: f64 = 1e-10;
pub const DEFAULT_MIN_SEPARATION: f64 = 1e-6;
pub const DEFAULT_JN_SAMPLES: u64 = 10_000;
pub const DEFAULT_LEMMA2_SAMPLES: u64 = 1_000;
pub const DEFAULT_SEARCH_BUDGET: u64 = 100_000;

/// Knobs shared by every command, already defaulted.
#[derive(Debug, Clone)]
pub struct Knobs {
    pub grid: GridSpec,
    pub tol: f64,
    pub quad_tol: f64,
    pub seed: u64,
    pub workers: usize,
}

impl Knobs {
    pub fn resolve(
        grid: Option<usize>,
        t_steps: Option<usize>,
        refine: Option<usize>,
        tol: Option<f64>,
        quad_tol: Option<f64>,
        seed: Option<u64>,
        workers: Option<usize>,
    ) -> Result<Knobs, CliError> {
        let tol = tol.unwrap_or(DEFAULT_TOL);
        let quad_tol = quad_tol.unwrap_or(DEFAULT_QUAD_TOL);
        if !tol.is_finite() || tol <= 0.0 || !quad_tol.is_finite() || quad_tol <= 0.0 {
            return Err(CliError::Usage("tolerances must be positive reals".into()));
        }
        let grid = GridSpec::new(
            grid.unwrap_or(DEFAULT_GRID_POINTS),
            t_steps.unwrap_or(DEFAULT_T_STEPS),
            refine.unwrap_or(DEFAULT_REFINE),
            DEFAULT_MIN_SEPARATION,
        )?;
        Ok(Knobs {
            grid,
            tol,
            quad_tol,
            seed: seed.unwrap_or(0),
            workers: workers.unwrap_or(1),
        })
    }

    fn base_inputs(&self) -> Inputs {
        Inputs {
            seed: self.seed,
            tol: self.tol,
            quad_tol: self.quad_tol,
            workers: self.workers,
            ..Inputs::default()
        }
    }
}

/// Everything a report needs besides the knobs and the wall time.
pub struct Outcome {
    pub inputs: Inputs,
    pub results: Results,
    pub verdict: String,
    pub witness: Option<WitnessJson>,
}

fn verdict_name(holds: bool) -> String {
    if holds { "holds".to_string() } else { "violated".to_string() }
}

enum NormChoice {
    Euclid,
    Max,
    P(f64),
}

fn parse_norm(spec: Option<&str>) -> Result<(NormChoice, String), CliError> {
    let raw = spec.unwrap_or("euclid");
    match raw {
        "euclid" | "euclidean" => Ok((NormChoice::Euclid, "euclidean".to_string())),
        "max" | "maximum" => Ok((NormChoice::Max, "maximum".to_string())),
        other => {
            if let Some(p_text) = other.strip_prefix("p:") {
                let p: f64 = p_text.parse().map_err(|_| {
                    CliError::Usage(format!("cannot parse p-norm exponent `{p_text}`"))
                })?;
                Ok((NormChoice::P(p), format!("p:{p}")))
            } else {
                Err(CliError::Usage(format!(
                    "unknown norm `{other}`: expected euclid | max | p:REAL"
                )))
            }
        }
    }
}

fn make_space(choice: &NormChoice, dim: usize) -> Result<NormedSpace, CliError> {
    Ok(match choice {
        NormChoice::Euclid => NormedSpace::euclidean(dim),
        NormChoice::Max => NormedSpace::maximum(dim),
        NormChoice::P(p) => NormedSpace::p_norm(dim, *p)?,
    })
}

fn parse_box(raw: &str) -> Result<(f64, f64), CliError> {
    let parts: Vec<&str> = raw.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(CliError::Usage(format!("--box expects `lo,hi`, got `{raw}`")));
    }
    let lo: f64 = parts[0]
        .parse()
        .map_err(|_| CliError::Usage(format!("cannot parse box bound `{}`", parts[0])))?;
    let hi: f64 = parts[1]
        .parse()
        .map_err(|_| CliError::Usage(format!("cannot parse box bound `{}`", parts[1])))?;
    Ok((lo, hi))
}

/// A fully resolved function-analysis job.
struct Problem {
    f: RealFunction,
    g: Option<RealFunction>,
    phi: PhiMap,
    space: NormedSpace,
    interval: Option<(f64, f64)>,
    inputs: Inputs,
}

fn resolve_problem(p: &ProblemArgs, knobs: &Knobs) -> Result<Problem, CliError> {
    let mut inputs = knobs.base_inputs();

    let (region, interval) = match (p.a, p.b, &p.box_bounds) {
        (Some(a), Some(b), None) => {
            let region = Region::from_interval(Interval::new(a, b)?);
            inputs.a = Some(a);
            inputs.b = Some(b);
            (region, Some((a, b)))
        }
        (None, None, Some(raw)) => {
            let (lo, hi) = parse_box(raw)?;
            let dim = match (p.dim, p.phi.len()) {
                (Some(d), _) => d,
                (None, n) if n > 0 => n,
                _ => {
                    return Err(CliError::Usage(
                        "--box needs --dim (or --phi components) to fix the dimension".into(),
                    ))
                }
            };
            inputs.box_bounds = Some([lo, hi]);
            inputs.dim = Some(dim);
            (Region::cube(lo, hi, dim)?, None)
        }
        (None, None, None) => {
            return Err(CliError::Usage(
                "no domain: give --a and --b, or --box with --dim".into(),
            ))
        }
        _ => {
            return Err(CliError::Usage(
                "give either --a and --b (interval) or --box (cube), not a mixture".into(),
            ))
        }
    };
    let dim = region.dim();

    let f_src = p
        .f
        .as_deref()
        .ok_or_else(|| CliError::Usage("missing --f".into()))?;
    let f = RealFunction::parse(f_src, dim)?;
    inputs.f = Some(f_src.to_string());

    let g = match p.g.as_deref() {
        Some(src) => {
            inputs.g = Some(src.to_string());
            Some(RealFunction::parse(src, dim)?)
        }
        None => None,
    };

    let phi = if p.phi.is_empty() {
        PhiMap::identity(region)
    } else {
        let refs: Vec<&str> = p.phi.iter().map(String::as_str).collect();
        inputs.phi = Some(p.phi.clone());
        PhiMap::parse(&refs, region)?
    };

    let (choice, norm_name) = parse_norm(p.norm.as_deref())?;
    inputs.norm = Some(norm_name);
    let space = make_space(&choice, dim)?;

    Ok(Problem { f, g, phi, space, interval, inputs })
}

/// Resolves the modulus text: a number passes through, "estimate" chains a
/// modulus estimate on the same grid and returns c* as the effective value.
fn resolve_c(
    requested: Option<&str>,
    default_: &str,
    problem: &Problem,
    knobs: &Knobs,
    inputs: &mut Inputs,
    results: &mut Results,
) -> Result<f64, CliError> {
    let raw = requested.unwrap_or(default_);
    inputs.c = Some(raw.to_string());
    let c = if raw == "estimate" {
        let est = estimate_modulus(&problem.f, &problem.phi, &problem.space, &knobs.grid, knobs.workers)?;
        results.c_star = Some(est.c_star);
        est.c_star
    } else {
        raw.parse::<f64>().map_err(|_| {
            CliError::Usage(format!("cannot parse --c `{raw}`: expected a number or `estimate`"))
        })?
    };
    inputs.c_effective = Some(c);
    Ok(c)
}

fn verdict_outcome(v: Verdict, inputs: Inputs, results: Results) -> Outcome {
    match v {
        Verdict::Holds => Outcome {
            inputs,
            results,
            verdict: "holds".to_string(),
            witness: None,
        },
        Verdict::Violated(w) => Outcome {
            inputs,
            results,
            verdict: "violated".to_string(),
            witness: Some(WitnessJson::from(&w)),
        },
    }
}

fn run_check(p: &ProblemArgs, knobs: &Knobs, midpoint_only: bool) -> Result<Outcome, CliError> {
    let problem = resolve_problem(p, knobs)?;
    let mut inputs = problem.inputs.clone();
    let mut results = Results::default();
    let c = resolve_c(p.c.as_deref(), "estimate", &problem, knobs, &mut inputs, &mut results)?;
    let v = if midpoint_only {
        check_strong_phi_midconvex(
            &problem.f, &problem.phi, &problem.space, c, &knobs.grid, knobs.tol, knobs.workers,
        )?
    } else {
        check_strong_phi_convex(
            &problem.f, &problem.phi, &problem.space, c, &knobs.grid, knobs.tol, knobs.workers,
        )?
    };
    Ok(verdict_outcome(v, inputs, results))
}

fn run_modulus(p: &ProblemArgs, knobs: &Knobs) -> Result<Outcome, CliError> {
    let problem = resolve_problem(p, knobs)?;
    let est = estimate_modulus(&problem.f, &problem.phi, &problem.space, &knobs.grid, knobs.workers)?;
    Ok(Outcome {
        inputs: problem.inputs,
        results: Results { c_star: Some(est.c_star), ..Results::default() },
        verdict: "holds".to_string(),
        witness: None,
    })
}

fn require_interval(problem: &Problem) -> Result<(f64, f64), CliError> {
    problem.interval.ok_or_else(|| {
        CliError::Usage("this command is one-dimensional: give --a and --b".into())
    })
}

fn run_hh(p: &ProblemArgs, knobs: &Knobs) -> Result<Outcome, CliError> {
    let problem = resolve_problem(p, knobs)?;
    let (a, b) = require_interval(&problem)?;
    let mut inputs = problem.inputs.clone();
    let mut results = Results::default();
    let c = resolve_c(p.c.as_deref(), "estimate", &problem, knobs, &mut inputs, &mut results)?;
    let r = hh_bounds(&problem.f, &problem.phi, c, a, b, knobs.quad_tol, knobs.tol)?;
    results.lower = Some(r.lower);
    results.mean = Some(r.mean);
    results.upper = Some(r.upper);
    Ok(Outcome {
        inputs,
        results,
        verdict: verdict_name(r.lower_holds && r.upper_holds),
        witness: None,
    })
}

fn run_product(p: &ProblemArgs, knobs: &Knobs, pair: bool) -> Result<Outcome, CliError> {
    let problem = resolve_problem(p, knobs)?;
    let (a, b) = require_interval(&problem)?;
    let mut inputs = problem.inputs.clone();
    let mut results = Results::default();
    let c = resolve_c(p.c.as_deref(), "estimate", &problem, knobs, &mut inputs, &mut results)?;
    let r = if pair {
        let g = problem
            .g
            .as_ref()
            .ok_or_else(|| CliError::Usage("pair-product needs --g".into()))?;
        product_pair_bound(&problem.f, g, &problem.phi, c, a, b, knobs.quad_tol, knobs.tol)?
    } else {
        product_self_bound(&problem.f, &problem.phi, c, a, b, knobs.quad_tol, knobs.tol)?
    };
    results.lhs = Some(r.lhs);
    results.rhs = Some(r.rhs);
    Ok(Outcome { inputs, results, verdict: verdict_name(r.holds), witness: None })
}

fn run_lemma2(p: &ProblemArgs, knobs: &Knobs) -> Result<Outcome, CliError> {
    let problem = resolve_problem(p, knobs)?;
    let mut inputs = problem.inputs.clone();
    let mut results = Results::default();
    let c = resolve_c(p.c.as_deref(), "estimate", &problem, knobs, &mut inputs, &mut results)?;
    let samples = p.samples.unwrap_or(DEFAULT_LEMMA2_SAMPLES);
    if samples == 0 {
        return Err(CliError::Usage("--samples must be positive".into()));
    }
    inputs.samples = Some(samples);

    // Residuals of the shift identity over seeded triples.
    let region = problem.phi.domain().clone();
    let points = sample_points(&region, 2 * samples as usize, knobs.seed);
    let t_region = Region::from_interval(Interval::new(0.0, 1.0).expect("unit interval"));
    let ts = sample_points(&t_region, samples as usize, knobs.seed.wrapping_add(1));
    let mut max_residual = 0.0f64;
    let mut worst: Option<(Vec<f64>, Vec<f64>, f64)> = None;
    for (pair, t) in points.chunks_exact(2).zip(&ts) {
        let r = shift_identity_residual(
            &problem.f, &problem.phi, &problem.space, c, &pair[0], &pair[1], t[0],
        )?;
        if r.abs() > max_residual {
            max_residual = r.abs();
            worst = Some((pair[0].clone(), pair[1].clone(), t[0]));
        }
    }
    results.max_defect = Some(max_residual);

    // Verdict agreement between f at modulus c and f − c·norm² at modulus 0.
    let shifted = shifted_function(&problem.f, &problem.space, c)?;
    let direct = check_strong_phi_convex(
        &problem.f, &problem.phi, &problem.space, c, &knobs.grid, knobs.tol, knobs.workers,
    )?;
    let via_shift = check_strong_phi_convex(
        &shifted, &problem.phi, &problem.space, 0.0, &knobs.grid, knobs.tol, knobs.workers,
    )?;
    let agree = direct.holds() == via_shift.holds();

    let identity_holds = agree && max_residual <= knobs.tol;
    let witness = if identity_holds {
        None
    } else {
        worst.map(|(x, y, t)| WitnessJson { x, y, t, slack: -max_residual })
    };
    Ok(Outcome { inputs, results, verdict: verdict_name(identity_holds), witness })
}

/// A fully resolved norm-geometry job.
struct SpaceJob {
    space: NormedSpace,
    region: Region,
    inputs: Inputs,
}

fn resolve_space(
    s: &SpaceArgs,
    knobs: &Knobs,
    default_box: (f64, f64),
) -> Result<SpaceJob, CliError> {
    let mut inputs = knobs.base_inputs();
    let dim = s.dim.unwrap_or(2);
    let (choice, norm_name) = parse_norm(s.norm.as_deref())?;
    let space = make_space(&choice, dim)?;
    let (lo, hi) = match &s.box_bounds {
        Some(raw) => parse_box(raw)?,
        None => default_box,
    };
    let region = Region::cube(lo, hi, dim)?;
    inputs.norm = Some(norm_name);
    inputs.dim = Some(dim);
    inputs.box_bounds = Some([lo, hi]);
    Ok(SpaceJob { space, region, inputs })
}

fn parse_space_c(s: &SpaceArgs, inputs: &mut Inputs) -> Result<f64, CliError> {
    let raw = s.c.as_deref().unwrap_or("1");
    inputs.c = Some(raw.to_string());
    let c = raw.parse::<f64>().map_err(|_| {
        CliError::Usage(format!("cannot parse --c `{raw}`: expected a number"))
    })?;
    inputs.c_effective = Some(c);
    Ok(c)
}

fn run_norm_test(s: &SpaceArgs, knobs: &Knobs) -> Result<Outcome, CliError> {
    let mut job = resolve_space(s, knobs, (-1.0, 1.0))?;
    let sampler_name = s.sampler.as_deref().unwrap_or("grid");
    let sampler = match sampler_name {
        "grid" => PairSampler::Grid { points_per_axis: knobs.grid.points_per_axis() },
        "seeded" => PairSampler::Seeded { seed: knobs.seed },
        other => {
            return Err(CliError::Usage(format!(
                "unknown sampler `{other}`: expected grid | seeded"
            )))
        }
    };
    let samples = s.samples.unwrap_or(DEFAULT_JN_SAMPLES);
    job.inputs.sampler = Some(sampler_name.to_string());
    job.inputs.samples = Some(samples);

    let v = jn_test(&job.space, &job.region, sampler, samples, knobs.tol)?;
    let holds = v.classification == Classification::InnerProductLike;
    let witness = if holds {
        None
    } else {
        Some(WitnessJson {
            x: v.worst_pair.0.clone(),
            y: v.worst_pair.1.clone(),
            t: 0.5,
            slack: -v.max_abs_defect,
        })
    };
    Ok(Outcome {
        inputs: job.inputs,
        results: Results { max_defect: Some(v.max_abs_defect), ..Results::default() },
        verdict: verdict_name(holds),
        witness,
    })
}

fn run_sqnorm_check(s: &SpaceArgs, knobs: &Knobs) -> Result<Outcome, CliError> {
    let mut job = resolve_space(s, knobs, (-2.0, 2.0))?;
    let c = parse_space_c(s, &mut job.inputs)?;
    let v = phiconvex::normgeom::sqnorm_strong_convexity_check(
        &job.space, &job.region, c, &knobs.grid, knobs.tol, knobs.workers,
    )?;
    Ok(verdict_outcome(v, job.inputs, Results::default()))
}

fn run_counterexample(s: &SpaceArgs, knobs: &Knobs) -> Result<Outcome, CliError> {
    let mut job = resolve_space(s, knobs, (-2.0, 2.0))?;
    let c = parse_space_c(s, &mut job.inputs)?;
    let budget = s.budget.unwrap_or(DEFAULT_SEARCH_BUDGET);
    job.inputs.budget = Some(budget);
    let r = counterexample_search_in(&job.space, &job.region, &knobs.grid, c, knobs.tol, budget)?;
    let mut results = Results::default();
    let (verdict, witness) = match r.witness {
        None => ("holds".to_string(), None),
        Some(w) => {
            results.max_defect = Some(w.slack.abs());
            ("violated".to_string(), Some(WitnessJson::from(&w)))
        }
    };
    Ok(Outcome { inputs: job.inputs, results, verdict, witness })
}

pub fn execute(cmd: &CommandArgs, knobs: &Knobs) -> Result<Outcome, CliError> {
    match cmd {
        CommandArgs::Check(p) => run_check(p, knobs, false),
        CommandArgs::Midcheck(p) => run_check(p, knobs, true),
        CommandArgs::Modulus(p) => run_modulus(p, knobs),
        CommandArgs::Hh(p) => run_hh(p, knobs),
        CommandArgs::Product(p) => run_product(p, knobs, false),
        CommandArgs::PairProduct(p) => run_product(p, knobs, true),
        CommandArgs::NormTest(s) => run_norm_test(s, knobs),
        CommandArgs::SqnormCheck(s) => run_sqnorm_check(s, knobs),
        CommandArgs::Counterexample(s) => run_counterexample(s, knobs),
        CommandArgs::Lemma2(p) => run_lemma2(p, knobs),
    }
}
