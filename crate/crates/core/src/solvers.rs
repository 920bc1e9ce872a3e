//! Picard, Mann and cyclic fixed-point iterations with full traces.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::geometry::Point;
use crate::mappings::{apply, MappingSpec};
use crate::spaces::Space;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum StepSchedule {
    Constant(f64),
    /// `αₙ = 1/(n+1)`, `n ≥ 1`.
    Harmonic,
    /// Held at its last entry beyond the list.
    Custom(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScheduleMetadata {
    pub sum_diverges: bool,
    pub inf_alpha_one_minus_alpha: f64,
    pub caveat: Option<String>,
}

impl StepSchedule {
    pub fn validate(&self) -> Result<()> {
        let ok = |a: f64| a > 0.0 && a <= 1.0;
        match self {
            StepSchedule::Constant(a) if !ok(*a) => domain(format!("constant step {a} outside (0, 1]")),
            StepSchedule::Custom(list) if list.is_empty() => domain("custom schedule is empty"),
            StepSchedule::Custom(list) => match list.iter().find(|a| !ok(**a)) {
                Some(a) => domain(format!("custom step {a} outside (0, 1]")),
                None => Ok(()),
            },
            _ => Ok(()),
        }
    }

    /// Step used to produce `x_{n+1}`; `n` counts from 1.
    pub fn alpha(&self, n: usize) -> f64 {
        match self {
            StepSchedule::Constant(a) => *a,
            StepSchedule::Harmonic => 1.0 / (n as f64 + 1.0),
            StepSchedule::Custom(list) => list[(n.max(1) - 1).min(list.len() - 1)],
        }
    }

    pub fn metadata(&self) -> ScheduleMetadata {
        match self {
            StepSchedule::Constant(a) => {
                ScheduleMetadata { sum_diverges: true, inf_alpha_one_minus_alpha: a * (1.0 - a), caveat: None }
            }
            StepSchedule::Harmonic => {
                ScheduleMetadata { sum_diverges: true, inf_alpha_one_minus_alpha: 0.0, caveat: None }
            }
            StepSchedule::Custom(list) => {
                // the tail repeats the last entry, so the sum diverges
                let inf = list.iter().map(|a| a * (1.0 - a)).fold(f64::INFINITY, f64::min);
                ScheduleMetadata {
                    sum_diverges: true,
                    inf_alpha_one_minus_alpha: inf,
                    caveat: Some(format!(
                        "computed from the {} listed steps; later steps repeat the last one",
                        list.len()
                    )),
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIter,
    Unbounded,
}

/// `iterates` holds `x_1 … x_{N+1}`; row `n` of the other vectors describes
/// the step from `x_n` (`residuals[n] = d(x_n, T x_n)`,
/// `steps[n] = d(x_n, x_{n+1})`). `ref_dists` is aligned with `iterates`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationTrace {
    pub iterates: Vec<Point>,
    pub residuals: Vec<f64>,
    pub steps: Vec<f64>,
    pub ref_dists: Option<Vec<f64>>,
    pub schedule: Option<StepSchedule>,
    pub termination: Termination,
    /// Cyclic runs: `d(x, T_k x)` at the final iterate for each mapping.
    pub component_residuals: Option<Vec<f64>>,
}

impl IterationTrace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn last(&self) -> &Point {
        self.iterates.last().expect("a trace holds its starting point")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    pub max_iter: usize,
    pub tol: f64,
    /// Unbounded once `d(x_1, x_n) > factor · (1 + d(x_1, T x_1))`.
    pub divergence_factor: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { max_iter: 1000, tol: 1e-9, divergence_factor: 100.0 }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return domain("max_iter must be at least 1");
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return domain(format!("tol must be positive, got {}", self.tol));
        }
        if !(self.divergence_factor > 0.0) {
            return domain("divergence_factor must be positive");
        }
        Ok(())
    }
}

struct Recorder<'a> {
    space: &'a Space,
    trace: IterationTrace,
    reference: Option<&'a Point>,
    start: Point,
    escape: f64,
}

impl<'a> Recorder<'a> {
    fn new(space: &'a Space, x1: &Point, reference: Option<&'a Point>, schedule: Option<StepSchedule>) -> Result<Self> {
        space.check(x1)?;
        let ref_dists = match reference {
            Some(u) => Some(vec![space.dist(u, x1)?]),
            None => None,
        };
        Ok(Self {
            space,
            trace: IterationTrace {
                iterates: vec![x1.clone()],
                residuals: Vec::new(),
                steps: Vec::new(),
                ref_dists,
                schedule,
                termination: Termination::MaxIter,
                component_residuals: None,
            },
            reference,
            start: x1.clone(),
            escape: f64::INFINITY,
        })
    }

    fn set_escape(&mut self, first_residual: f64, opts: &SolverOptions) {
        self.escape = opts.divergence_factor * (1.0 + first_residual);
    }

    /// Records one step; returns the termination reason if the run stops.
    fn push(&mut self, residual: f64, next: Point, opts: &SolverOptions) -> Result<Option<Termination>> {
        let step = self.space.dist(self.trace.last(), &next)?;
        let escaped = self.space.dist(&self.start, &next)?;
        if let (Some(u), Some(r)) = (self.reference, self.trace.ref_dists.as_mut()) {
            r.push(self.space.dist(u, &next)?);
        }
        self.trace.residuals.push(residual);
        self.trace.steps.push(step);
        self.trace.iterates.push(next);
        if step < opts.tol {
            return Ok(Some(Termination::Converged));
        }
        if escaped > self.escape {
            return Ok(Some(Termination::Unbounded));
        }
        Ok(None)
    }

    fn finish(mut self, how: Termination) -> IterationTrace {
        self.trace.termination = how;
        self.trace
    }
}

/// `x_{n+1} = T x_n`; stops on a step below `tol`, divergence or `max_iter`.
pub fn picard(
    space: &Space,
    mapping: &MappingSpec,
    x1: &Point,
    reference: Option<&Point>,
    opts: &SolverOptions,
) -> Result<IterationTrace> {
    mann_like(space, mapping, x1, None, reference, opts)
}

/// `x_{n+1} = (1 − αₙ) x_n ⊕ αₙ T x_n`.
pub fn mann(
    space: &Space,
    mapping: &MappingSpec,
    x1: &Point,
    schedule: &StepSchedule,
    reference: Option<&Point>,
    opts: &SolverOptions,
) -> Result<IterationTrace> {
    schedule.validate()?;
    mann_like(space, mapping, x1, Some(schedule), reference, opts)
}

fn mann_like(
    space: &Space,
    mapping: &MappingSpec,
    x1: &Point,
    schedule: Option<&StepSchedule>,
    reference: Option<&Point>,
    opts: &SolverOptions,
) -> Result<IterationTrace> {
    opts.validate()?;
    mapping.validate(space)?;
    let mut rec = Recorder::new(space, x1, reference, schedule.cloned())?;
    for n in 1..=opts.max_iter {
        let x = rec.trace.last().clone();
        let tx = apply(space, mapping, &x)?;
        let residual = space.dist(&x, &tx)?;
        if n == 1 {
            rec.set_escape(residual, opts);
        }
        let next = match schedule {
            Some(s) => space.combine(&x, &tx, s.alpha(n))?,
            None => tx,
        };
        if let Some(how) = rec.push(residual, next, opts)? {
            return Ok(rec.finish(how));
        }
    }
    Ok(rec.finish(Termination::MaxIter))
}

/// Applies the family in order once per row. The row residual is the
/// largest `d(x_n, T_k x_n)`.
pub fn cyclic_picard(
    space: &Space,
    family: &[MappingSpec],
    x1: &Point,
    reference: Option<&Point>,
    opts: &SolverOptions,
) -> Result<IterationTrace> {
    if family.is_empty() {
        return domain("cyclic iteration needs at least one mapping");
    }
    opts.validate()?;
    for m in family {
        m.validate(space)?;
    }
    let componentwise = |x: &Point| -> Result<Vec<f64>> {
        family.iter().map(|m| space.dist(x, &apply(space, m, x)?)).collect()
    };
    let mut rec = Recorder::new(space, x1, reference, None)?;
    let mut how = Termination::MaxIter;
    for n in 1..=opts.max_iter {
        let x = rec.trace.last().clone();
        let residual = componentwise(&x)?.into_iter().fold(0.0, f64::max);
        let mut z = x;
        for m in family {
            z = apply(space, m, &z)?;
        }
        if n == 1 {
            let sweep = space.dist(rec.trace.last(), &z)?;
            rec.set_escape(residual.max(sweep), opts);
        }
        if let Some(stop) = rec.push(residual, z, opts)? {
            how = stop;
            break;
        }
    }
    let last = rec.trace.last().clone();
    rec.trace.component_residuals = Some(componentwise(&last)?);
    Ok(rec.finish(how))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex::{ConvexFunction, ConvexSet};

    fn e2(a: f64, b: f64) -> Point {
        Point::Euclidean(vec![a, b])
    }

    fn halving() -> MappingSpec {
        MappingSpec::Prox(ConvexFunction::HalfSqDistTo { anchor: e2(0.0, 0.0), weight: 1.0 })
    }

    fn opts(max_iter: usize) -> SolverOptions {
        SolverOptions { max_iter, tol: 1e-12, ..Default::default() }
    }

    #[test]
    fn picard_halves() {
        let s = Space::euclidean(2).unwrap();
        let t = picard(&s, &halving(), &e2(8.0, 0.0), None, &opts(4)).unwrap();
        let xs: Vec<f64> = t.iterates.iter().map(|p| p.coords().unwrap()[0]).collect();
        assert_eq!(xs, vec![8.0, 4.0, 2.0, 1.0, 0.5]);
        assert_eq!(t.termination, Termination::MaxIter);
        assert_eq!(t.residuals, vec![4.0, 2.0, 1.0, 0.5]);
    }

    #[test]
    fn identity_stops_at_once() {
        let s = Space::euclidean(2).unwrap();
        let t = picard(&s, &MappingSpec::Identity, &e2(1.0, 2.0), None, &opts(10)).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.residuals, vec![0.0]);
        assert_eq!(t.termination, Termination::Converged);
    }

    #[test]
    fn projection_is_idempotent() {
        let s = Space::euclidean(2).unwrap();
        let m = MappingSpec::Projection(ConvexSet::Ball { center: e2(0.0, 0.0), radius: 1.0 });
        let t = picard(&s, &m, &e2(3.0, 4.0), None, &opts(10)).unwrap();
        assert!(s.dist(&t.iterates[1], &e2(0.6, 0.8)).unwrap() < 1e-15);
        assert_eq!(t.len(), 2);
        assert!(t.steps[1] < 1e-15);
        assert_eq!(t.termination, Termination::Converged);
    }

    #[test]
    fn mann_with_unit_step_is_picard() {
        let s = Space::hyperbolic(2).unwrap();
        let m = MappingSpec::Prox(ConvexFunction::HalfSqDistTo { anchor: s.poincare(&[0.1, 0.2]).unwrap(), weight: 0.7 });
        let x1 = s.poincare(&[-0.5, 0.3]).unwrap();
        let a = picard(&s, &m, &x1, None, &opts(30)).unwrap();
        let b = mann(&s, &m, &x1, &StepSchedule::Constant(1.0), None, &opts(30)).unwrap();
        assert_eq!(a.iterates, b.iterates);
        assert_eq!(a.steps, b.steps);
    }

    #[test]
    fn mann_half_step_contracts_by_three_quarters() {
        let s = Space::euclidean(2).unwrap();
        let t = mann(&s, &halving(), &e2(8.0, 0.0), &StepSchedule::Constant(0.5), Some(&e2(0.0, 0.0)), &opts(3))
            .unwrap();
        assert_eq!(t.iterates[3], e2(3.375, 0.0));
        assert_eq!(t.ref_dists.as_ref().unwrap().len(), t.iterates.len());
    }

    #[test]
    fn affine_prox_is_unbounded() {
        let s = Space::euclidean(2).unwrap();
        let m = MappingSpec::Prox(ConvexFunction::AffineEuclidean { gradient: vec![1.0, 0.0], constant: 0.0 });
        let t = mann(&s, &m, &e2(0.0, 0.0), &StepSchedule::Constant(0.5), None, &opts(1000)).unwrap();
        assert_eq!(t.termination, Termination::Unbounded);
        assert!(t.len() < 1000);
    }

    #[test]
    fn schedules() {
        assert_eq!(StepSchedule::Constant(0.25).metadata().inf_alpha_one_minus_alpha, 0.25 * 0.75);
        let h = StepSchedule::Harmonic.metadata();
        assert!(h.sum_diverges && h.inf_alpha_one_minus_alpha == 0.0);
        assert_eq!(StepSchedule::Harmonic.alpha(1), 0.5);
        let c = StepSchedule::Custom(vec![0.5, 0.25]);
        assert_eq!((c.alpha(1), c.alpha(2), c.alpha(9)), (0.5, 0.25, 0.25));
        assert!(c.metadata().caveat.is_some());
        assert!(StepSchedule::Constant(0.0).validate().is_err());
        assert!(StepSchedule::Custom(vec![0.5, 1.5]).validate().is_err());
    }

    #[test]
    fn cyclic_projections() {
        let s = Space::euclidean(2).unwrap();
        let ball = |c: f64| MappingSpec::Projection(ConvexSet::Ball { center: e2(c, 0.0), radius: 1.0 });
        let t = cyclic_picard(&s, &[ball(0.0), ball(1.5)], &e2(0.7, 5.0), None, &opts(10_000)).unwrap();
        assert_eq!(t.termination, Termination::Converged);
        let x = t.last().coords().unwrap().to_vec();
        assert!((x[0] * x[0] + x[1] * x[1]).sqrt() <= 1.0 + 1e-6);
        assert!(((x[0] - 1.5).powi(2) + x[1] * x[1]).sqrt() <= 1.0 + 1e-6);
        assert!(t.component_residuals.unwrap().iter().all(|r| *r < 1e-6));

        let disjoint = cyclic_picard(&s, &[ball(0.0), ball(5.0)], &e2(0.0, 3.0), None, &opts(1000)).unwrap();
        let gaps = disjoint.component_residuals.unwrap();
        assert!((gaps[0] - 3.0).abs() < 1e-9 && gaps[1] < 1e-12);

        let id = cyclic_picard(&s, &[MappingSpec::Identity], &e2(1.0, 1.0), None, &opts(10)).unwrap();
        assert_eq!(id.len(), 1);
    }
}
