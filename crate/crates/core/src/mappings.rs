//! Self-mappings of a model space: metric projections, proximity mappings
//! (resolvents of subdifferentials), the glued two-branch mapping and
//! compositions.

use crate::convex::{self, ConvexFunction, ConvexSet};
use crate::error::{domain, Result};
use crate::geometry::{quasi_inner, Pair, Point};
use crate::search;
use crate::spaces::Space;

/// Declarative description of a mapping `T : X → X`.
#[derive(Debug, Clone, PartialEq)]
pub enum MappingSpec {
    Projection(ConvexSet),
    Prox(ConvexFunction),
    Glued(Box<Glued>),
    /// Applied left to right: `[A, B]` maps `x` to `B(A(x))`.
    Composition(Vec<MappingSpec>),
    Identity,
}

/// `U x = S x` on the closed ball `B̄_δ(a)`, `T x` outside it.
///
/// `U` is metrically nonspreading whenever `S`, `T` are and both map into
/// `B̄_r(a)` with `δ ≥ (1 + 2√2) r`.
#[derive(Debug, Clone, PartialEq)]
pub struct Glued {
    inner: MappingSpec,
    outer: MappingSpec,
    center: Point,
    r: f64,
    delta: f64,
}

/// `1 + 2√2`
pub const GLUED_RATIO: f64 = 1.0 + 2.0 * std::f64::consts::SQRT_2;

impl Glued {
    pub fn new(inner: MappingSpec, outer: MappingSpec, center: Point, r: f64, delta: f64) -> Result<Self> {
        if !(r.is_finite() && r > 0.0) {
            return domain(format!("glued mapping radius must be positive, got {r}"));
        }
        if !(delta.is_finite() && delta >= GLUED_RATIO * r) {
            return domain(format!("glued mapping needs delta >= (1+2√2)·r = {}, got {delta}", GLUED_RATIO * r));
        }
        Ok(Self { inner, outer, center, r, delta })
    }

    /// The remark's instance: `S = P_{{a}}`, `T = P_{B̄_r(a)}`, `δ = (1+2√2) r`.
    pub fn counterexample(center: Point, r: f64) -> Result<Self> {
        let inner = MappingSpec::Projection(ConvexSet::Segment { a: center.clone(), b: center.clone() });
        let outer = MappingSpec::Projection(ConvexSet::Ball { center: center.clone(), radius: r });
        Self::new(inner, outer, center, r, GLUED_RATIO * r)
    }

    pub fn inner(&self) -> &MappingSpec {
        &self.inner
    }

    pub fn outer(&self) -> &MappingSpec {
        &self.outer
    }

    pub fn center(&self) -> &Point {
        &self.center
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Largest `d(Sx, a) − r` and `d(Tx, a) − r` over the samples; both
    /// must be `≤ 0` (up to rounding) for the construction's hypothesis.
    pub fn range_excess(&self, space: &Space, samples: &[Point]) -> Result<f64> {
        let mut worst = f64::NEG_INFINITY;
        for x in samples {
            for m in [&self.inner, &self.outer] {
                let image = apply(space, m, x)?;
                worst = worst.max(space.dist(&image, &self.center)? - self.r);
            }
        }
        Ok(worst)
    }
}

impl MappingSpec {
    pub fn glued(inner: MappingSpec, outer: MappingSpec, center: Point, r: f64, delta: f64) -> Result<Self> {
        Ok(MappingSpec::Glued(Box::new(Glued::new(inner, outer, center, r, delta)?)))
    }

    pub fn validate(&self, space: &Space) -> Result<()> {
        match self {
            MappingSpec::Projection(set) => set.validate(space),
            MappingSpec::Prox(f) => f.validate(space),
            MappingSpec::Glued(g) => {
                space.check(&g.center)?;
                g.inner.validate(space)?;
                g.outer.validate(space)
            }
            MappingSpec::Composition(list) => list.iter().try_for_each(|m| m.validate(space)),
            MappingSpec::Identity => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            MappingSpec::Projection(_) => "projection",
            MappingSpec::Prox(_) => "prox",
            MappingSpec::Glued(_) => "glued",
            MappingSpec::Composition(_) => "composition",
            MappingSpec::Identity => "identity",
        }
    }
}

pub fn apply(space: &Space, mapping: &MappingSpec, x: &Point) -> Result<Point> {
    match mapping {
        MappingSpec::Projection(set) => project(space, set, x),
        MappingSpec::Prox(f) => prox(space, f, x),
        MappingSpec::Glued(g) => glued_apply(space, g, x),
        MappingSpec::Composition(list) => {
            let mut y = x.clone();
            for m in list {
                y = apply(space, m, &y)?;
            }
            Ok(y)
        }
        MappingSpec::Identity => {
            space.check(x)?;
            Ok(x.clone())
        }
    }
}

pub fn project(space: &Space, set: &ConvexSet, x: &Point) -> Result<Point> {
    convex::project(space, set, x)
}

/// Proximity mapping `argmin_y f(y) + ½ d(y, x)²`.
pub fn prox(space: &Space, f: &ConvexFunction, x: &Point) -> Result<Point> {
    match f {
        // the minimizer lies on [x, a]; along it the objective is a 1-D quadratic
        ConvexFunction::HalfSqDistTo { anchor, weight } => space.combine(x, anchor, weight / (1.0 + weight)),
        // move towards a by min(w, d(x, a))
        ConvexFunction::DistTo { anchor, weight } => space.toward(x, anchor, *weight),
        ConvexFunction::IndicatorOf(set) => project(space, set, x),
        ConvexFunction::AffineEuclidean { gradient, .. } => match x {
            Point::Euclidean(v) => Ok(Point::Euclidean(v.iter().zip(gradient).map(|(a, g)| a - g).collect())),
            _ => domain("affine prox needs a Euclidean point"),
        },
        ConvexFunction::WeightedFrechet { anchors } => {
            // Σ wᵢ d(y,aᵢ)² + ½ d(y,x)² is a weighted mean-square objective
            let mut points: Vec<Point> = anchors.iter().map(|(a, _)| a.clone()).collect();
            let mut weights: Vec<f64> = anchors.iter().map(|(_, w)| *w).collect();
            points.push(x.clone());
            weights.push(0.5);
            Ok(search::weighted_mean(space, &points, &weights)?.point)
        }
    }
}

pub fn glued_apply(space: &Space, glued: &Glued, x: &Point) -> Result<Point> {
    if space.dist(x, &glued.center)? <= glued.delta {
        apply(space, &glued.inner, x)
    } else {
        apply(space, &glued.outer, x)
    }
}

/// `min_y [f(y) − f(z) − ⟨→zx, →zy⟩]` over the samples. Nonnegative values
/// certify `[→zx] ∈ ∂f(z)`, i.e. that `z` is the resolvent of `∂f` at `x`.
pub fn resolvent_inclusion_slack(
    space: &Space,
    f: &ConvexFunction,
    x: &Point,
    z: &Point,
    samples: &[Point],
) -> Result<f64> {
    let fz = f.eval(space, z)?;
    if !fz.is_finite() {
        return domain("candidate resolvent lies outside the domain of f");
    }
    let mut worst = f64::INFINITY;
    for y in samples {
        let fy = f.eval(space, y)?;
        if !fy.is_finite() {
            continue;
        }
        let slack = fy - fz - quasi_inner(space, Pair::new(z, x), Pair::new(z, y))?;
        worst = worst.min(slack);
    }
    Ok(worst)
}

/// A fixed point of the mapping when one is known in closed form (or via
/// the mean solver for Fréchet objectives).
pub fn known_fixed_point(space: &Space, mapping: &MappingSpec) -> Result<Option<Point>> {
    let candidate = match mapping {
        MappingSpec::Identity => Some(space.origin()),
        MappingSpec::Projection(set) => Some(set.witness(space)?),
        MappingSpec::Prox(f) => match f {
            ConvexFunction::HalfSqDistTo { anchor, .. } | ConvexFunction::DistTo { anchor, .. } => {
                Some(anchor.clone())
            }
            ConvexFunction::WeightedFrechet { anchors } => {
                let pts: Vec<Point> = anchors.iter().map(|(a, _)| a.clone()).collect();
                let ws: Vec<f64> = anchors.iter().map(|(_, w)| *w).collect();
                Some(search::weighted_mean(space, &pts, &ws)?.point)
            }
            ConvexFunction::IndicatorOf(set) => Some(set.witness(space)?),
            ConvexFunction::AffineEuclidean { gradient, .. } => {
                if gradient.iter().all(|g| *g == 0.0) {
                    Some(space.origin())
                } else {
                    None
                }
            }
        },
        MappingSpec::Glued(g) => known_fixed_point(space, &g.inner)?,
        MappingSpec::Composition(list) => match list.first() {
            Some(first) => known_fixed_point(space, first)?,
            None => Some(space.origin()),
        },
    };
    let Some(u) = candidate else { return Ok(None) };
    let image = apply(space, mapping, &u)?;
    if space.dist(&image, &u)? <= 1e-10 {
        Ok(Some(u))
    } else {
        Ok(None)
    }
}
