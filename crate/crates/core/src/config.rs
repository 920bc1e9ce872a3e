//! Experiment configuration documents and their conversion into spaces,
//! points and mappings.
//!
//! Points are written in space-native form:
//!
//! * Euclidean: a coordinate array `[x0, x1, …]`
//! * hyperbolic: `{"poincare": [...]}` or `{"hyperboloid": [...]}`
//! * tree: `{"vertex": v}` or `{"edge": e, "offset": t}`

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::convex::{ConvexFunction, ConvexSet};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::mappings::{Glued, MappingSpec, GLUED_RATIO};
use crate::sampling::Sampler;
use crate::solvers::{SolverOptions, StepSchedule};
use crate::spaces::{Space, TreeDocument};

fn config_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum SpaceConfig {
    Euclidean { dim: usize },
    Hyperbolic { dim: usize },
    Tree { vertices: usize, edges: Vec<(usize, usize, f64)> },
}

impl SpaceConfig {
    pub fn build(&self) -> Result<Space> {
        match self {
            SpaceConfig::Euclidean { dim } => Space::euclidean(*dim),
            SpaceConfig::Hyperbolic { dim } => Space::hyperbolic(*dim),
            SpaceConfig::Tree { vertices, edges } => Ok(Space::tree(crate::spaces::MetricTree::from_document(
                &TreeDocument { vertices: *vertices, edges: edges.clone() },
            )?)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointConfig {
    Coords(Vec<f64>),
    // listed before `Poincare` so reports, which carry both, read back
    Hyperboloid {
        hyperboloid: Vec<f64>,
        #[serde(default, skip_serializing)]
        poincare: Option<Vec<f64>>,
    },
    Poincare { poincare: Vec<f64> },
    Vertex { vertex: usize },
    Locus { edge: usize, offset: f64 },
}

impl PointConfig {
    pub fn build(&self, space: &Space) -> Result<Point> {
        match self {
            PointConfig::Coords(c) => space.point(c.clone()),
            PointConfig::Hyperboloid { hyperboloid, .. } => space.hyperboloid(hyperboloid.clone()),
            PointConfig::Poincare { poincare } => space.poincare(poincare),
            PointConfig::Vertex { vertex } => space.vertex(*vertex),
            PointConfig::Locus { edge, offset } => space.locus(*edge, *offset),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SetConfig {
    Ball { center: PointConfig, radius: f64 },
    Segment { a: PointConfig, b: PointConfig },
    Point(PointConfig),
    Subtree { vertices: Vec<usize> },
    Halfspace { normal: Vec<f64>, offset: f64 },
}

impl SetConfig {
    pub fn build(&self, space: &Space) -> Result<ConvexSet> {
        let set = match self {
            SetConfig::Ball { center, radius } => ConvexSet::Ball { center: center.build(space)?, radius: *radius },
            SetConfig::Segment { a, b } => ConvexSet::Segment { a: a.build(space)?, b: b.build(space)? },
            SetConfig::Point(p) => {
                let p = p.build(space)?;
                ConvexSet::Segment { a: p.clone(), b: p }
            }
            SetConfig::Subtree { vertices } => {
                ConvexSet::Subtree { vertices: vertices.iter().copied().collect::<BTreeSet<_>>() }
            }
            SetConfig::Halfspace { normal, offset } => ConvexSet::Halfspace { normal: normal.clone(), offset: *offset },
        };
        set.validate(space)?;
        Ok(set)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightedPoint {
    pub point: PointConfig,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionConfig {
    /// `(λ/2)·d(y, a)²`
    HalfSqDistTo { anchor: PointConfig, weight: f64 },
    /// `Σ wᵢ·d(y, aᵢ)²`
    WeightedFrechet { anchors: Vec<WeightedPoint> },
    Indicator(SetConfig),
    DistTo { anchor: PointConfig, weight: f64 },
    Affine { gradient: Vec<f64>, #[serde(default)] constant: f64 },
}

impl FunctionConfig {
    pub fn build(&self, space: &Space) -> Result<ConvexFunction> {
        let f = match self {
            FunctionConfig::HalfSqDistTo { anchor, weight } => {
                ConvexFunction::HalfSqDistTo { anchor: anchor.build(space)?, weight: *weight }
            }
            FunctionConfig::WeightedFrechet { anchors } => ConvexFunction::WeightedFrechet {
                anchors: anchors.iter().map(|a| Ok((a.point.build(space)?, a.weight))).collect::<Result<_>>()?,
            },
            FunctionConfig::Indicator(set) => ConvexFunction::IndicatorOf(set.build(space)?),
            FunctionConfig::DistTo { anchor, weight } => {
                ConvexFunction::DistTo { anchor: anchor.build(space)?, weight: *weight }
            }
            FunctionConfig::Affine { gradient, constant } => {
                ConvexFunction::AffineEuclidean { gradient: gradient.clone(), constant: *constant }
            }
        };
        f.validate(space)?;
        Ok(f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GluedConfig {
    pub inner: Box<MappingConfig>,
    pub outer: Box<MappingConfig>,
    pub center: PointConfig,
    pub r: f64,
    /// Defaults to `(1 + 2√2)·r`.
    #[serde(default)]
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MappingConfig {
    Identity,
    Projection(SetConfig),
    Prox(FunctionConfig),
    Glued(GluedConfig),
    /// The counterexample: projection onto `{center}` inside the δ-ball,
    /// onto `B̄_r(center)` outside.
    GluedCounterexample { center: PointConfig, r: f64 },
    Composition(Vec<MappingConfig>),
}

impl MappingConfig {
    pub fn build(&self, space: &Space) -> Result<MappingSpec> {
        let m = match self {
            MappingConfig::Identity => MappingSpec::Identity,
            MappingConfig::Projection(set) => MappingSpec::Projection(set.build(space)?),
            MappingConfig::Prox(f) => MappingSpec::Prox(f.build(space)?),
            MappingConfig::Glued(g) => MappingSpec::Glued(Box::new(Glued::new(
                g.inner.build(space)?,
                g.outer.build(space)?,
                g.center.build(space)?,
                g.r,
                g.delta.unwrap_or(GLUED_RATIO * g.r),
            )?)),
            MappingConfig::GluedCounterexample { center, r } => {
                MappingSpec::Glued(Box::new(Glued::counterexample(center.build(space)?, *r)?))
            }
            MappingConfig::Composition(list) => {
                MappingSpec::Composition(list.iter().map(|m| m.build(space)).collect::<Result<_>>()?)
            }
        };
        m.validate(space)?;
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerConfig {
    /// Defaults to the space's origin.
    #[serde(default)]
    pub center: Option<PointConfig>,
    pub radius: f64,
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_count() -> usize {
    10_000
}

impl SamplerConfig {
    pub fn build(&self, space: &Space, seed_override: Option<u64>) -> Result<Sampler> {
        let center = match &self.center {
            Some(c) => c.build(space)?,
            None => space.origin(),
        };
        Sampler::new(space, center, self.radius, seed_override.unwrap_or(self.seed))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Picard,
    Mann,
    Cyclic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub method: Method,
    pub start: PointConfig,
    /// Mann only.
    #[serde(default)]
    pub schedule: Option<StepSchedule>,
    #[serde(default)]
    pub max_iter: Option<usize>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub divergence_factor: Option<f64>,
}

impl SolverConfig {
    pub fn options(&self) -> Result<SolverOptions> {
        let d = SolverOptions::default();
        let o = SolverOptions {
            max_iter: self.max_iter.unwrap_or(d.max_iter),
            tol: self.tol.unwrap_or(d.tol),
            divergence_factor: self.divergence_factor.unwrap_or(d.divergence_factor),
        };
        o.validate()?;
        Ok(o)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    #[serde(default = "yes")]
    pub delta_limit: bool,
    #[serde(default = "yes")]
    pub double_sequence: bool,
    #[serde(default = "yes")]
    pub demiclosedness: bool,
}

fn yes() -> bool {
    true
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self { delta_limit: true, double_sequence: true, demiclosedness: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    Mns,
    Fmns,
    Nonexpansive,
    Quasi,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectation {
    #[serde(default)]
    pub mns: Option<bool>,
    #[serde(default)]
    pub fmns: Option<bool>,
    #[serde(default)]
    pub nonexpansive: Option<bool>,
    #[serde(default)]
    pub quasi: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    /// Quadruples for the Cauchy–Schwarz suite; defaults to the sampler count.
    #[serde(default)]
    pub cauchy_schwarz: Option<usize>,
    #[serde(default = "default_small")]
    pub quasi_identities: usize,
    #[serde(default = "default_small")]
    pub convexity: usize,
    /// Properties the mapping must satisfy; defaults to `["fmns"]`.
    #[serde(default = "default_properties")]
    pub properties: Vec<Property>,
}

fn default_small() -> usize {
    1000
}

fn default_properties() -> Vec<Property> {
    vec![Property::Fmns]
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { cauchy_schwarz: None, quasi_identities: 1000, convexity: 1000, properties: default_properties() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputNames {
    #[serde(default = "report_name")]
    pub report: String,
    #[serde(default = "trace_name")]
    pub trace: String,
    #[serde(default = "diagnostics_name")]
    pub diagnostics: String,
}

fn report_name() -> String {
    "report.json".into()
}
fn trace_name() -> String {
    "trace.csv".into()
}
fn diagnostics_name() -> String {
    "diagnostics.json".into()
}

impl Default for OutputNames {
    fn default() -> Self {
        Self { report: report_name(), trace: trace_name(), diagnostics: diagnostics_name() }
    }
}

/// One experiment. Sections not needed by a subcommand are ignored by it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub space: SpaceConfig,
    #[serde(default)]
    pub mapping: Option<MappingConfig>,
    /// Family for cyclic iteration.
    #[serde(default)]
    pub family: Option<Vec<MappingConfig>>,
    #[serde(default)]
    pub fixed_point: Option<PointConfig>,
    #[serde(default)]
    pub solver: Option<SolverConfig>,
    #[serde(default)]
    pub sampler: Option<SamplerConfig>,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub expect: Option<Expectation>,
    /// Inline points for the asymptotic-center command.
    #[serde(default)]
    pub points: Option<Vec<PointConfig>>,
    /// JSON array of points, relative to the config file.
    #[serde(default)]
    pub points_file: Option<PathBuf>,
    #[serde(default)]
    pub window: Option<(usize, usize)>,
    #[serde(default)]
    pub outputs: OutputNames,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a config; `points_file` is resolved against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        if let (Some(p), Some(dir)) = (cfg.points_file.as_mut(), path.parent()) {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn space(&self) -> Result<Space> {
        self.space.build()
    }

    pub fn mapping(&self, space: &Space) -> Result<MappingSpec> {
        match &self.mapping {
            Some(m) => m.build(space),
            None => config_err("config has no mapping section"),
        }
    }

    pub fn sampler(&self, space: &Space, seed_override: Option<u64>) -> Result<(Sampler, usize)> {
        match &self.sampler {
            Some(s) => {
                if s.count == 0 {
                    return config_err("sampler count must be at least 1");
                }
                Ok((s.build(space, seed_override)?, s.count))
            }
            None => config_err("config has no sampler section"),
        }
    }

    pub fn fixed_point(&self, space: &Space) -> Result<Option<Point>> {
        self.fixed_point.as_ref().map(|p| p.build(space)).transpose()
    }

    pub fn points(&self, space: &Space) -> Result<Vec<Point>> {
        let configs: Vec<PointConfig> = match (&self.points, &self.points_file) {
            (Some(p), None) => p.clone(),
            (None, Some(path)) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
            }
            (Some(_), Some(_)) => return config_err("give either points or points_file, not both"),
            (None, None) => return config_err("config has neither points nor points_file"),
        };
        configs.iter().map(|p| p.build(space)).collect()
    }
}

/// JSON Schema for [`ExperimentConfig`], shipped next to the example configs.
pub const SCHEMA: &str = include_str!("../schema/experiment.schema.json");

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_full_config() {
        let text = r#"{
            "name": "demo",
            "space": {"kind": "hyperbolic", "dim": 2},
            "mapping": {"glued": {"inner": {"projection": {"point": {"poincare": [0.1, 0.0]}}},
                                  "outer": {"projection": {"ball": {"center": {"poincare": [0.1, 0.0]}, "radius": 0.5}}},
                                  "center": {"poincare": [0.1, 0.0]}, "r": 0.5}},
            "sampler": {"radius": 3.0, "count": 10, "seed": 42},
            "solver": {"method": "mann", "start": {"poincare": [0.5, 0.5]},
                       "schedule": {"kind": "constant", "value": 0.5}, "max_iter": 20},
            "expect": {"mns": true, "fmns": false}
        }"#;
        let cfg = ExperimentConfig::from_json(text).unwrap();
        let s = cfg.space().unwrap();
        assert!(matches!(cfg.mapping(&s).unwrap(), MappingSpec::Glued(_)));
        let (sm, n) = cfg.sampler(&s, Some(7)).unwrap();
        assert_eq!((sm.seed, n), (7, 10));
        let solver = cfg.solver.unwrap();
        assert_eq!(solver.options().unwrap().max_iter, 20);
        assert_eq!(solver.schedule, Some(StepSchedule::Constant(0.5)));
    }

    #[test]
    fn rejects_unknown_fields_and_bad_geometry() {
        assert!(matches!(
            ExperimentConfig::from_json(r#"{"space": {"kind": "euclidean", "dim": 2}, "bogus": 1}"#),
            Err(Error::Config(_))
        ));
        assert!(ExperimentConfig::from_json("{not json").is_err());
        let cfg = ExperimentConfig::from_json(
            r#"{"space": {"kind": "euclidean", "dim": 2},
                "mapping": {"glued": {"inner": "identity", "outer": "identity", "center": [0, 0], "r": 1, "delta": 2}}}"#,
        )
        .unwrap();
        assert!(cfg.mapping(&cfg.space().unwrap()).is_err());
    }

    #[test]
    fn point_forms() {
        let t = crate::instances::star_tree();
        let v: PointConfig = serde_json::from_str(r#"{"vertex": 2}"#).unwrap();
        assert_eq!(v.build(&t).unwrap(), t.vertex(2).unwrap());
        let l: PointConfig = serde_json::from_str(r#"{"edge": 1, "offset": 0.25}"#).unwrap();
        assert_eq!(l.build(&t).unwrap(), t.locus(1, 0.25).unwrap());

        let h = Space::hyperbolic(2).unwrap();
        let p = h.poincare(&[0.3, -0.4]).unwrap();
        // the serialized form carries both coordinate systems and reads back
        let text = serde_json::to_string(&p).unwrap();
        let back: PointConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back.build(&h).unwrap(), p);
    }

    #[test]
    fn schema_is_json() {
        let v: serde_json::Value = serde_json::from_str(SCHEMA).unwrap();
        assert_eq!(v["title"], "ExperimentConfig");
    }
}
