//! Config-driven runs behind the command line tool: `verify`, `iterate`,
//! `classify` and `ac`. Each run produces its output files in memory;
//! [`write_outputs`] puts them on disk next to a manifest.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::classify::{classify, ClassificationReport, Verdicts};
use crate::config::{Expectation, ExperimentConfig, Method, Property};
use crate::diagnostics::{
    asymptotic_center, default_window, default_windows, delta_limit_estimate, demiclosedness_probe,
    double_sequence_residual, AsymptoticCenterEstimate, DeltaLimitEstimate, DemiclosednessReport, DoubleSequenceReport,
};
use crate::error::{Error, Result};
use crate::geometry::{cauchy_schwarz_slack, convexity_slacks, quasi_identity_residuals, Pair, Point};
use crate::mappings::known_fixed_point;
use crate::solvers::{cyclic_picard, mann, picard, IterationTrace, ScheduleMetadata, StepSchedule, Termination};
use crate::spaces::Space;

pub const CAUCHY_SCHWARZ_TOL: f64 = -1e-9;
pub const QUASI_IDENTITY_TOL: f64 = 1e-9;
pub const CONVEXITY_TOL: f64 = -1e-9;

const CS_STREAM: u64 = 1;
const QUASI_STREAM: u64 = 2;
const CONVEXITY_STREAM: u64 = 3;
const ALPHA_STREAM: u64 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Verify,
    Iterate,
    Classify,
    Ac,
}

/// Exit-code contract of the command line tool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    PropertyFailure,
    ConfigError,
    Divergence,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::PropertyFailure => 1,
            Status::ConfigError => 2,
            Status::Divergence => 3,
        }
    }

    /// Status for a run that failed with `err` before producing a report.
    pub fn for_error(err: &Error) -> Self {
        match err {
            Error::Numeric { .. } => Status::PropertyFailure,
            Error::Domain(_) | Error::Config(_) | Error::Io(_) => Status::ConfigError,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub status: Status,
    /// `(file name, contents)` in the order they should be written.
    pub files: Vec<(String, String)>,
    pub summary: String,
    pub seed: Option<u64>,
}

pub fn run(command: Command, cfg: &ExperimentConfig, seed: Option<u64>) -> Result<RunOutput> {
    match command {
        Command::Verify => run_verify(cfg, seed),
        Command::Iterate => run_iterate(cfg),
        Command::Classify => run_classify(cfg, seed),
        Command::Ac => run_ac(cfg),
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteResult {
    pub samples: usize,
    /// Worst slack (or largest residual for the identity suite).
    pub worst: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub witness: Vec<Point>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassificationSuite {
    pub required: Vec<Property>,
    pub pass: bool,
    pub report: ClassificationReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub name: Option<String>,
    pub seed: u64,
    pub cauchy_schwarz: SuiteResult,
    pub quasi_identities: SuiteResult,
    pub convexity: SuiteResult,
    pub classification: Option<ClassificationSuite>,
    pub pass: bool,
}

/// Index of the smallest value; ties keep the first.
fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

pub fn cauchy_schwarz_suite(space: &Space, tuples: &[Vec<Point>]) -> Result<SuiteResult> {
    let slacks = tuples
        .par_iter()
        .map(|t| cauchy_schwarz_slack(space, Pair::new(&t[0], &t[1]), Pair::new(&t[2], &t[3])))
        .collect::<Result<Vec<_>>>()?;
    let i = argmin(&slacks);
    Ok(SuiteResult {
        samples: tuples.len(),
        worst: slacks[i],
        tolerance: CAUCHY_SCHWARZ_TOL,
        pass: slacks[i] >= CAUCHY_SCHWARZ_TOL,
        witness: tuples[i].clone(),
    })
}

pub fn quasi_identity_suite(space: &Space, tuples: &[Vec<Point>]) -> Result<SuiteResult> {
    let residuals = tuples
        .par_iter()
        .map(|t| quasi_identity_residuals(space, &t[0], &t[1], &t[2], &t[3], &t[4]).map(|r| -r.max_abs()))
        .collect::<Result<Vec<_>>>()?;
    let i = argmin(&residuals);
    let worst = -residuals[i];
    Ok(SuiteResult {
        samples: tuples.len(),
        worst,
        tolerance: QUASI_IDENTITY_TOL,
        pass: worst < QUASI_IDENTITY_TOL,
        witness: tuples[i].clone(),
    })
}

pub fn convexity_suite(space: &Space, tuples: &[Vec<Point>], alphas: &[f64]) -> Result<SuiteResult> {
    let slacks = tuples
        .par_iter()
        .zip(alphas)
        .map(|(t, a)| convexity_slacks(space, &t[0], &t[1], &t[2], *a).map(|(l, q)| l.min(q)))
        .collect::<Result<Vec<_>>>()?;
    let i = argmin(&slacks);
    Ok(SuiteResult {
        samples: tuples.len(),
        worst: slacks[i],
        tolerance: CONVEXITY_TOL,
        pass: slacks[i] >= CONVEXITY_TOL,
        witness: tuples[i].clone(),
    })
}

fn property_holds(v: &Verdicts, p: Property) -> bool {
    match p {
        Property::Mns => v.mns,
        Property::Fmns => v.fmns,
        Property::Nonexpansive => v.nonexpansive,
        Property::Quasi => v.quasi.unwrap_or(false),
    }
}

fn reference_point(cfg: &ExperimentConfig, space: &Space, mapping: &crate::mappings::MappingSpec) -> Result<Option<Point>> {
    match cfg.fixed_point(space)? {
        Some(u) => Ok(Some(u)),
        None => known_fixed_point(space, mapping),
    }
}

pub fn run_verify(cfg: &ExperimentConfig, seed: Option<u64>) -> Result<RunOutput> {
    let space = cfg.space()?;
    let (sampler, count) = cfg.sampler(&space, seed)?;
    let v = &cfg.verify;

    let cs = sampler.tuples(&space, v.cauchy_schwarz.unwrap_or(count), 4, CS_STREAM)?;
    let cauchy_schwarz = cauchy_schwarz_suite(&space, &cs)?;
    let quint = sampler.tuples(&space, v.quasi_identities, 5, QUASI_STREAM)?;
    let quasi_identities = quasi_identity_suite(&space, &quint)?;
    let triples = sampler.tuples(&space, v.convexity, 3, CONVEXITY_STREAM)?;
    let mut rng = sampler.rng(ALPHA_STREAM);
    let alphas: Vec<f64> = (0..triples.len()).map(|_| rng.random::<f64>()).collect();
    let convexity = convexity_suite(&space, &triples, &alphas)?;

    let classification = match &cfg.mapping {
        Some(_) => {
            let mapping = cfg.mapping(&space)?;
            let u = reference_point(cfg, &space, &mapping)?;
            let report = classify(&space, &mapping, &sampler, count, u.as_ref())?;
            let verdicts = report.verdicts();
            let pass = v.properties.iter().all(|p| property_holds(&verdicts, *p));
            Some(ClassificationSuite { required: v.properties.clone(), pass, report })
        }
        None => None,
    };

    let pass = cauchy_schwarz.pass
        && quasi_identities.pass
        && convexity.pass
        && classification.as_ref().is_none_or(|c| c.pass);
    let report = VerifyReport {
        name: cfg.name.clone(),
        seed: sampler.seed,
        cauchy_schwarz,
        quasi_identities,
        convexity,
        classification,
        pass,
    };
    let mut summary = format!(
        "cauchy-schwarz worst slack {:.3e}, quasi identities worst residual {:.3e}, convexity worst slack {:.3e}",
        report.cauchy_schwarz.worst, report.quasi_identities.worst, report.convexity.worst
    );
    if let Some(c) = &report.classification {
        let _ = write!(
            summary,
            "\nclassification: mns {:.3e}, fmns {:.3e}, nonexpansive {:.3e}",
            c.report.mns.worst_slack, c.report.fmns.worst_slack, c.report.nonexpansive.worst_slack
        );
    }
    let _ = write!(summary, "\n{}", if pass { "PASS" } else { "FAIL" });
    Ok(RunOutput {
        status: if pass { Status::Pass } else { Status::PropertyFailure },
        files: vec![(cfg.outputs.report.clone(), to_json(&report)?)],
        summary,
        seed: Some(sampler.seed),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassifyOutput {
    pub name: Option<String>,
    pub seed: u64,
    pub expected: Expectation,
    pub verdicts: Verdicts,
    pub mismatches: Vec<Property>,
    pub pass: bool,
    pub report: ClassificationReport,
}

pub fn expectation_mismatches(expected: &Expectation, v: &Verdicts) -> Vec<Property> {
    let checks = [
        (Property::Mns, expected.mns, Some(v.mns)),
        (Property::Fmns, expected.fmns, Some(v.fmns)),
        (Property::Nonexpansive, expected.nonexpansive, Some(v.nonexpansive)),
        (Property::Quasi, expected.quasi, v.quasi),
    ];
    checks
        .into_iter()
        .filter(|(_, want, got)| want.is_some() && want != got)
        .map(|(p, _, _)| p)
        .collect()
}

pub fn run_classify(cfg: &ExperimentConfig, seed: Option<u64>) -> Result<RunOutput> {
    let space = cfg.space()?;
    let mapping = cfg.mapping(&space)?;
    let (sampler, count) = cfg.sampler(&space, seed)?;
    let Some(expected) = cfg.expect.clone() else {
        return Err(Error::Config("classify needs an expect section".into()));
    };
    let u = reference_point(cfg, &space, &mapping)?;
    let report = classify(&space, &mapping, &sampler, count, u.as_ref())?;
    let verdicts = report.verdicts();
    let mismatches = expectation_mismatches(&expected, &verdicts);
    let pass = mismatches.is_empty();
    let summary = format!(
        "mns {} ({:.3e}), fmns {} ({:.3e}), nonexpansive {} ({:.3e}); expectation {}",
        verdict_word(verdicts.mns),
        report.mns.worst_slack,
        verdict_word(verdicts.fmns),
        report.fmns.worst_slack,
        verdict_word(verdicts.nonexpansive),
        report.nonexpansive.worst_slack,
        if pass { "met" } else { "NOT met" }
    );
    let out = ClassifyOutput { name: cfg.name.clone(), seed: sampler.seed, expected, verdicts, mismatches, pass, report };
    Ok(RunOutput {
        status: if pass { Status::Pass } else { Status::PropertyFailure },
        files: vec![(cfg.outputs.report.clone(), to_json(&out)?)],
        summary,
        seed: Some(sampler.seed),
    })
}

fn verdict_word(b: bool) -> &'static str {
    if b {
        "pass"
    } else {
        "fail"
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FejerCheck {
    /// Largest `d(u, x_{n+1}) − d(u, x_n)`; should not exceed `1e-9`.
    pub worst_increase: f64,
    /// `max_n d(x_1, x_n)` against the bound `2·d(u, x_1)`.
    pub max_excursion: f64,
    pub excursion_bound: f64,
    /// Picard: `Σ step²`; Mann with constant α: `α(1−α)·Σ residual²`.
    pub energy: Option<f64>,
    /// `d(u, x_1)²`
    pub energy_bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct IterateDiagnostics {
    pub name: Option<String>,
    pub method: Method,
    pub termination: Termination,
    pub iterations: usize,
    pub final_iterate: Point,
    pub final_residual: Option<f64>,
    pub final_step: Option<f64>,
    pub schedule: Option<ScheduleMetadata>,
    pub component_residuals: Option<Vec<f64>>,
    pub fejer: Option<FejerCheck>,
    pub delta_limit: Option<DeltaLimitEstimate>,
    pub double_sequence: Option<DoubleSequenceReport>,
    pub demiclosedness: Option<DemiclosednessReport>,
}

pub fn fejer_check(space: &Space, trace: &IterationTrace, u: &Point) -> Result<FejerCheck> {
    let x1 = &trace.iterates[0];
    let r = space.dist(u, x1)?;
    let mut worst_increase = f64::NEG_INFINITY;
    let mut max_excursion = 0.0_f64;
    let mut prev = r;
    for x in &trace.iterates[1..] {
        let d = space.dist(u, x)?;
        worst_increase = worst_increase.max(d - prev);
        prev = d;
        max_excursion = max_excursion.max(space.dist(x1, x)?);
    }
    let energy = match &trace.schedule {
        None => Some(trace.steps.iter().map(|s| s * s).sum()),
        Some(StepSchedule::Constant(a)) => Some(a * (1.0 - a) * trace.residuals.iter().map(|s| s * s).sum::<f64>()),
        Some(_) => None,
    };
    Ok(FejerCheck { worst_increase, max_excursion, excursion_bound: 2.0 * r, energy, energy_bound: r * r })
}

/// CSV with one row per step: `n, residual, step, ref_dist` and the
/// coordinates of `x_n`, all in `{:.16e}` format.
pub fn trace_csv(space: &Space, trace: &IterationTrace) -> String {
    let mut out = String::from("n,residual,step,ref_dist");
    match space {
        Space::Euclidean { dim } => (0..*dim).for_each(|k| {
            let _ = write!(out, ",x{k}");
        }),
        Space::Hyperbolic { dim } => (0..=*dim).for_each(|k| {
            let _ = write!(out, ",h{k}");
        }),
        Space::Tree(_) => out.push_str(",edge,offset"),
    }
    out.push('\n');
    for n in 0..trace.len() {
        let _ = write!(out, "{},{:.16e},{:.16e},", n + 1, trace.residuals[n], trace.steps[n]);
        if let Some(r) = &trace.ref_dists {
            let _ = write!(out, "{:.16e}", r[n]);
        }
        match &trace.iterates[n] {
            Point::Euclidean(c) | Point::Hyperbolic(c) => {
                for v in c {
                    let _ = write!(out, ",{v:.16e}");
                }
            }
            Point::Tree(l) => {
                let _ = write!(out, ",{},{:.16e}", l.edge, l.offset);
            }
        }
        out.push('\n');
    }
    out
}

pub fn run_iterate(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let space = cfg.space()?;
    let Some(solver) = &cfg.solver else {
        return Err(Error::Config("iterate needs a solver section".into()));
    };
    let opts = solver.options()?;
    let x1 = solver.start.build(&space)?;

    let (trace, mapping, u) = match solver.method {
        Method::Cyclic => {
            let Some(family) = &cfg.family else {
                return Err(Error::Config("cyclic iteration needs a family section".into()));
            };
            let family = family.iter().map(|m| m.build(&space)).collect::<Result<Vec<_>>>()?;
            let u = cfg.fixed_point(&space)?;
            (cyclic_picard(&space, &family, &x1, u.as_ref(), &opts)?, None, u)
        }
        Method::Picard | Method::Mann => {
            let mapping = cfg.mapping(&space)?;
            let u = reference_point(cfg, &space, &mapping)?;
            let trace = if solver.method == Method::Picard {
                if solver.schedule.is_some() {
                    return Err(Error::Config("picard takes no schedule".into()));
                }
                picard(&space, &mapping, &x1, u.as_ref(), &opts)?
            } else {
                let Some(schedule) = &solver.schedule else {
                    return Err(Error::Config("mann needs a schedule".into()));
                };
                mann(&space, &mapping, &x1, schedule, u.as_ref(), &opts)?
            };
            (trace, Some(mapping), u)
        }
    };

    let d = &cfg.diagnostics;
    let n_iter = trace.iterates.len();
    let delta_limit =
        if d.delta_limit { Some(delta_limit_estimate(&space, &trace, &default_windows(n_iter))?) } else { None };
    let double_sequence =
        if d.double_sequence && n_iter >= 3 { Some(double_sequence_residual(&space, &trace.iterates)?) } else { None };
    let demiclosedness = match (&mapping, d.demiclosedness) {
        (Some(m), true) => Some(demiclosedness_probe(&space, m, &trace, default_window(n_iter))?),
        _ => None,
    };
    let fejer = u.as_ref().map(|u| fejer_check(&space, &trace, u)).transpose()?;

    let diag = IterateDiagnostics {
        name: cfg.name.clone(),
        method: solver.method,
        termination: trace.termination,
        iterations: trace.len(),
        final_iterate: trace.last().clone(),
        final_residual: trace.residuals.last().copied(),
        final_step: trace.steps.last().copied(),
        schedule: trace.schedule.as_ref().map(|s| s.metadata()),
        component_residuals: trace.component_residuals.clone(),
        fejer,
        delta_limit,
        double_sequence,
        demiclosedness,
    };
    let status = if trace.termination == Termination::Unbounded { Status::Divergence } else { Status::Pass };
    let summary = format!(
        "{:?} after {} iterations, final step {:.3e}{}",
        trace.termination,
        trace.len(),
        diag.final_step.unwrap_or(0.0),
        if status == Status::Divergence { " (unbounded)" } else { "" }
    );
    Ok(RunOutput {
        status,
        files: vec![
            (cfg.outputs.trace.clone(), trace_csv(&space, &trace)),
            (cfg.outputs.diagnostics.clone(), to_json(&diag)?),
        ],
        summary,
        seed: None,
    })
}

pub fn run_ac(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let space = cfg.space()?;
    let points = cfg.points(&space)?;
    let window = match cfg.window {
        Some((a, b)) => a..b,
        None => 0..points.len(),
    };
    let est: AsymptoticCenterEstimate = asymptotic_center(&space, &points, window)?;
    let summary = format!("center radius {:.6e}, refinement residual {:.3e}", est.radius, est.refinement_residual);
    Ok(RunOutput {
        status: Status::Pass,
        files: vec![(cfg.outputs.report.clone(), to_json(&est)?)],
        summary,
        seed: None,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub command: Command,
    pub config_sha256: String,
    pub version: String,
    pub seed: Option<u64>,
    pub wall_time_seconds: f64,
    pub exit_code: i32,
    pub outputs: Vec<String>,
}

pub fn manifest(command: Command, config_bytes: &[u8], out: &RunOutput, wall_time_seconds: f64) -> Manifest {
    Manifest {
        command,
        config_sha256: hex::encode(Sha256::digest(config_bytes)),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: out.seed,
        wall_time_seconds,
        exit_code: out.status.code(),
        outputs: out.files.iter().map(|(n, _)| n.clone()).collect(),
    }
}

/// Writes every output file and `manifest.json` into `dir`.
pub fn write_outputs(dir: &Path, out: &RunOutput, manifest: &Manifest) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, contents) in &out.files {
        std::fs::write(dir.join(name), contents)?;
    }
    std::fs::write(dir.join("manifest.json"), to_json(manifest)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> ExperimentConfig {
        ExperimentConfig::from_json(text).unwrap()
    }

    #[test]
    fn halving_trace_csv() {
        let c = cfg(r#"{"space": {"kind": "euclidean", "dim": 2},
            "mapping": {"prox": {"half_sq_dist_to": {"anchor": [0, 0], "weight": 1}}},
            "solver": {"method": "picard", "start": [8, 0], "max_iter": 4, "tol": 1e-12}}"#);
        let out = run_iterate(&c).unwrap();
        assert_eq!(out.status, Status::Pass);
        let csv = &out.files[0].1;
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("n,residual,step,ref_dist,x0,x1"));
        let xs: Vec<f64> = lines.map(|l| l.split(',').nth(4).unwrap().parse().unwrap()).collect();
        assert_eq!(xs, vec![8.0, 4.0, 2.0, 1.0]);
    }

    #[test]
    fn identity_gives_one_row() {
        let c = cfg(r#"{"space": {"kind": "hyperbolic", "dim": 2}, "mapping": "identity",
            "solver": {"method": "picard", "start": {"poincare": [0.1, 0.2]}}}"#);
        let out = run_iterate(&c).unwrap();
        assert_eq!(out.files[0].1.lines().count(), 2);
    }

    #[test]
    fn affine_mann_diverges() {
        let c = cfg(r#"{"space": {"kind": "euclidean", "dim": 2},
            "mapping": {"prox": {"affine": {"gradient": [1, 0]}}},
            "solver": {"method": "mann", "start": [0, 0], "schedule": {"kind": "constant", "value": 0.5}}}"#);
        assert_eq!(run_iterate(&c).unwrap().status, Status::Divergence);
    }

    #[test]
    fn classify_expectations() {
        let base = r#"{"space": {"kind": "euclidean", "dim": 2},
            "mapping": {"projection": {"ball": {"center": [0, 0], "radius": 1}}},
            "sampler": {"radius": 3, "count": 500, "seed": 1}, "expect": EXPECT}"#;
        let ok = cfg(&base.replace("EXPECT", r#"{"fmns": true}"#));
        assert_eq!(run_classify(&ok, None).unwrap().status, Status::Pass);
        let wrong = cfg(&base.replace("EXPECT", r#"{"fmns": false}"#));
        assert_eq!(run_classify(&wrong, None).unwrap().status, Status::PropertyFailure);
    }

    #[test]
    fn verify_is_deterministic() {
        let c = cfg(r#"{"space": {"kind": "tree", "vertices": 3, "edges": [[0, 1, 1.0], [1, 2, 2.0]]},
            "mapping": {"projection": {"subtree": {"vertices": [1, 2]}}},
            "sampler": {"radius": 3, "count": 300, "seed": 9}}"#);
        let a = run_verify(&c, None).unwrap();
        let b = run_verify(&c, None).unwrap();
        assert_eq!(a.status, Status::Pass);
        assert_eq!(a.files, b.files);
        let other = run_verify(&c, Some(10)).unwrap();
        assert_ne!(a.files, other.files);
    }

    #[test]
    fn manifest_hashes_config() {
        let out = RunOutput { status: Status::Pass, files: vec![], summary: String::new(), seed: Some(3) };
        let m = manifest(Command::Verify, b"abc", &out, 0.5);
        assert_eq!(m.config_sha256, "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
        assert_eq!(m.exit_code, 0);
    }
}
