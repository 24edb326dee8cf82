//! The JSON report. Field names and their order are stable: a report
//! re-read from disk reproduces every numeric field bit-identically, and
//! two runs of the same job differ at most in `wall_ms`.

use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub version: String,
    pub command: String,
    pub inputs: Inputs,
    pub results: Results,
    pub verdict: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<WitnessJson>,
    pub grid: GridEcho,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Inputs {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(rename = "box", skip_serializing_if = "Option::is_none")]
    pub box_bounds: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_effective: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub norm: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sampler: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<u64>,
    pub seed: u64,
    pub tol: f64,
    pub quad_tol: f64,
    pub workers: usize,
}

/// Numeric results; commands fill the fields they produce.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Results {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lower: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lhs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rhs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_star: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_defect: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct WitnessJson {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub t: f64,
    pub slack: f64,
}

impl From<&phiconvex::ViolationWitness> for WitnessJson {
    fn from(w: &phiconvex::ViolationWitness) -> WitnessJson {
        WitnessJson { x: w.x.clone(), y: w.y.clone(), t: w.t, slack: w.slack }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GridEcho {
    pub points_per_axis: usize,
    pub t_steps: usize,
    pub refinement_rounds: usize,
    pub min_separation: f64,
}

impl From<&phiconvex::GridSpec> for GridEcho {
    fn from(g: &phiconvex::GridSpec) -> GridEcho {
        GridEcho {
            points_per_axis: g.points_per_axis(),
            t_steps: g.t_steps(),
            refinement_rounds: g.refinement_rounds(),
            min_separation: g.min_separation(),
        }
    }
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    /// Human-readable rendering of the same fields, without the wall time.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let mut line = |s: String| {
            out.push_str(&s);
            out.push('\n');
        };
        line(format!("command: {}", self.command));
        if let Some(f) = &self.inputs.f {
            line(format!("f: {f}"));
        }
        if let Some(g) = &self.inputs.g {
            line(format!("g: {g}"));
        }
        if let Some(phi) = &self.inputs.phi {
            line(format!("phi: {}", phi.join("; ")));
        }
        if let (Some(a), Some(b)) = (self.inputs.a, self.inputs.b) {
            line(format!("interval: [{a}, {b}]"));
        }
        if let Some([lo, hi]) = self.inputs.box_bounds {
            let dim = self.inputs.dim.unwrap_or(1);
            line(format!("box: [{lo}, {hi}]^{dim}"));
        }
        if let Some(norm) = &self.inputs.norm {
            line(format!("norm: {norm}"));
        }
        if let Some(c) = &self.inputs.c {
            match self.inputs.c_effective {
                Some(ce) if c == "estimate" => line(format!("c: estimate -> {ce}")),
                _ => line(format!("c: {c}")),
            }
        }
        let r = &self.results;
        if let (Some(lower), Some(mean), Some(upper)) = (r.lower, r.mean, r.upper) {
            line(format!("lower = {lower}"));
            line(format!("mean  = {mean}"));
            line(format!("upper = {upper}"));
        }
        if let (Some(lhs), Some(rhs)) = (r.lhs, r.rhs) {
            line(format!("lhs = {lhs}"));
            line(format!("rhs = {rhs}"));
        }
        if let Some(c_star) = r.c_star {
            line(format!("c_star = {c_star}"));
        }
        if let Some(max_defect) = r.max_defect {
            line(format!("max_defect = {max_defect}"));
        }
        if let Some(w) = &self.witness {
            line(format!(
                "witness: x = {:?}, y = {:?}, t = {}, slack = {}",
                w.x, w.y, w.t, w.slack
            ));
        }
        line(format!("verdict: {}", self.verdict));
        out
    }
}
