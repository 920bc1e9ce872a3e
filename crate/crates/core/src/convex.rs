//! Closed convex sets and convex functions on the model spaces, together with
//! exact metric projections onto the sets.

use std::collections::BTreeSet;

use crate::error::{domain, Result};
use crate::geometry::Point;
use crate::spaces::{euclidean, hyperbolic, Space};

#[derive(Debug, Clone, PartialEq)]
pub enum ConvexSet {
    /// Closed geodesic ball.
    Ball { center: Point, radius: f64 },
    /// Geodesic segment `[a, b]`; `a == b` gives the singleton `{a}`.
    Segment { a: Point, b: Point },
    /// Tree only: the subtree spanned by a connected vertex set.
    Subtree { vertices: BTreeSet<usize> },
    /// Euclidean only: `{x : ⟨normal, x⟩ ≤ offset}`.
    Halfspace { normal: Vec<f64>, offset: f64 },
}

impl ConvexSet {
    pub fn validate(&self, space: &Space) -> Result<()> {
        match self {
            ConvexSet::Ball { center, radius } => {
                space.check(center)?;
                if !(radius.is_finite() && *radius > 0.0) {
                    return domain(format!("ball radius must be positive, got {radius}"));
                }
            }
            ConvexSet::Segment { a, b } => {
                space.check(a)?;
                space.check(b)?;
            }
            ConvexSet::Subtree { vertices } => {
                let Some(tree) = space.as_tree() else {
                    return domain("subtrees exist only in tree spaces");
                };
                let Some(&first) = vertices.iter().next() else {
                    return domain("empty subtree");
                };
                if let Some(&bad) = vertices.iter().find(|&&v| v >= tree.n_vertices()) {
                    return domain(format!("subtree vertex {bad} out of range"));
                }
                let mut reached = BTreeSet::from([first]);
                let mut stack = vec![first];
                while let Some(p) = stack.pop() {
                    for &e in tree.incident(p) {
                        let edge = tree.edges()[e];
                        let q = if edge.u == p { edge.v } else { edge.u };
                        if vertices.contains(&q) && reached.insert(q) {
                            stack.push(q);
                        }
                    }
                }
                if reached.len() != vertices.len() {
                    return domain("subtree vertex set does not induce a connected subgraph");
                }
            }
            ConvexSet::Halfspace { normal, offset } => {
                let Space::Euclidean { dim } = space else {
                    return domain("halfspaces are only supported in Euclidean space");
                };
                if normal.len() != *dim {
                    return domain("halfspace normal has the wrong dimension");
                }
                if !(euclidean::norm(normal) > 0.0) || !offset.is_finite() {
                    return domain("halfspace normal must be nonzero and finite");
                }
            }
        }
        Ok(())
    }

    /// Some point of the set (used as a known fixed point of the projection).
    pub fn witness(&self, space: &Space) -> Result<Point> {
        Ok(match self {
            ConvexSet::Ball { center, .. } => center.clone(),
            ConvexSet::Segment { a, .. } => a.clone(),
            ConvexSet::Subtree { vertices } => {
                let v = *vertices.iter().next().ok_or_else(|| crate::Error::Domain("empty subtree".into()))?;
                space.vertex(v)?
            }
            ConvexSet::Halfspace { normal, offset } => {
                let nn = euclidean::dot(normal, normal);
                Point::Euclidean(normal.iter().map(|c| c * offset / nn).collect())
            }
        })
    }
}

/// `≤ 0` exactly on the set; positive values are the distance to the set
/// (signed distance for halfspaces and balls).
pub fn membership_slack(space: &Space, set: &ConvexSet, x: &Point) -> Result<f64> {
    match set {
        ConvexSet::Ball { center, radius } => Ok(space.dist(center, x)? - radius),
        ConvexSet::Halfspace { normal, offset } => match x {
            Point::Euclidean(v) => Ok((euclidean::dot(normal, v) - offset) / euclidean::norm(normal)),
            _ => domain("halfspace evaluated off Euclidean space"),
        },
        ConvexSet::Segment { .. } | ConvexSet::Subtree { .. } => {
            let p = project(space, set, x)?;
            space.dist(&p, x)
        }
    }
}

/// Metric projection `P_C(x) = argmin_{y ∈ C} d(y, x)`.
pub fn project(space: &Space, set: &ConvexSet, x: &Point) -> Result<Point> {
    match set {
        ConvexSet::Ball { center, radius } => {
            let d = space.dist(center, x)?;
            if d <= *radius {
                Ok(x.clone())
            } else {
                space.combine(center, x, radius / d)
            }
        }
        ConvexSet::Halfspace { normal, offset } => {
            let Point::Euclidean(v) = x else {
                return domain("halfspace projection off Euclidean space");
            };
            let excess = euclidean::dot(normal, v) - offset;
            if excess <= 0.0 {
                return Ok(x.clone());
            }
            let nn = euclidean::dot(normal, normal);
            Ok(Point::Euclidean(v.iter().zip(normal).map(|(vi, ni)| vi - excess / nn * ni).collect()))
        }
        ConvexSet::Segment { a, b } => project_segment(space, a, b, x),
        ConvexSet::Subtree { vertices } => {
            let (Space::Tree(tree), Point::Tree(l)) = (space, x) else {
                return domain("subtree projection needs a tree point");
            };
            let inside = match tree.at_vertex(l) {
                Some(v) => vertices.contains(&v),
                None => {
                    let e = tree.edges()[l.edge];
                    vertices.contains(&e.u) && vertices.contains(&e.v)
                }
            };
            if inside {
                return Ok(x.clone());
            }
            let mut best = (f64::INFINITY, usize::MAX);
            for &v in vertices {
                let d = tree.dist_vertex(v, l);
                if d < best.0 {
                    best = (d, v);
                }
            }
            space.vertex(best.1)
        }
    }
}

fn project_segment(space: &Space, a: &Point, b: &Point, x: &Point) -> Result<Point> {
    let len = space.dist(a, b)?;
    if len == 0.0 {
        return Ok(a.clone());
    }
    // arc-length parameter of the foot point, measured from a
    let s = match (a, b, x) {
        (Point::Euclidean(a), Point::Euclidean(b), Point::Euclidean(x)) => {
            let ab: Vec<f64> = b.iter().zip(a).map(|(p, q)| p - q).collect();
            let ax: Vec<f64> = x.iter().zip(a).map(|(p, q)| p - q).collect();
            euclidean::dot(&ab, &ax) / len
        }
        (Point::Hyperbolic(a), Point::Hyperbolic(b), Point::Hyperbolic(x)) => {
            // γ(s) = cosh(s)a + sinh(s)u; cosh d(γ(s), x) = A cosh s + B sinh s
            let u: Vec<f64> = hyperbolic::log(a, b).into_iter().map(|c| c / len).collect();
            let big_a = -hyperbolic::minkowski(a, x);
            let big_b = -hyperbolic::minkowski(&u, x);
            let ratio = (-big_b / big_a).clamp(-1.0 + 1e-16, 1.0 - 1e-16);
            ratio.atanh()
        }
        (Point::Tree(_), Point::Tree(_), Point::Tree(_)) => {
            // Gromov product: where the path to x leaves [a, b]
            let dax = space.dist(a, x)?;
            let dbx = space.dist(b, x)?;
            0.5 * (dax + len - dbx)
        }
        _ => return domain("segment endpoints and point must share a space"),
    };
    space.combine(a, b, (s / len).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConvexFunction {
    /// `(λ/2)·d(y, a)²`
    HalfSqDistTo { anchor: Point, weight: f64 },
    /// `Σ wᵢ·d(y, aᵢ)²` (no factor ½).
    WeightedFrechet { anchors: Vec<(Point, f64)> },
    /// `0` on the set, `+∞` off it.
    IndicatorOf(ConvexSet),
    /// `w·d(y, a)`
    DistTo { anchor: Point, weight: f64 },
    /// Euclidean only: `⟨g, y⟩ + c`.
    AffineEuclidean { gradient: Vec<f64>, constant: f64 },
}

/// Membership tolerance used by indicator functions.
pub const INDICATOR_TOL: f64 = 1e-9;

fn positive(w: f64, what: &str) -> Result<()> {
    if w.is_finite() && w > 0.0 {
        Ok(())
    } else {
        domain(format!("{what} must be positive, got {w}"))
    }
}

impl ConvexFunction {
    pub fn validate(&self, space: &Space) -> Result<()> {
        match self {
            ConvexFunction::HalfSqDistTo { anchor, weight } | ConvexFunction::DistTo { anchor, weight } => {
                space.check(anchor)?;
                positive(*weight, "weight")
            }
            ConvexFunction::WeightedFrechet { anchors } => {
                if anchors.is_empty() {
                    return domain("Fréchet objective needs at least one anchor");
                }
                for (a, w) in anchors {
                    space.check(a)?;
                    positive(*w, "Fréchet weight")?;
                }
                Ok(())
            }
            ConvexFunction::IndicatorOf(set) => set.validate(space),
            ConvexFunction::AffineEuclidean { gradient, constant } => {
                let Space::Euclidean { dim } = space else {
                    return domain("affine functions are only supported in Euclidean space");
                };
                if gradient.len() != *dim || gradient.iter().any(|g| !g.is_finite()) || !constant.is_finite() {
                    return domain("affine gradient has the wrong dimension or is not finite");
                }
                Ok(())
            }
        }
    }

    pub fn eval(&self, space: &Space, y: &Point) -> Result<f64> {
        match self {
            ConvexFunction::HalfSqDistTo { anchor, weight } => {
                let d = space.dist(y, anchor)?;
                Ok(0.5 * weight * d * d)
            }
            ConvexFunction::WeightedFrechet { anchors } => {
                let mut total = 0.0;
                for (a, w) in anchors {
                    let d = space.dist(y, a)?;
                    total += w * d * d;
                }
                Ok(total)
            }
            ConvexFunction::IndicatorOf(set) => {
                if membership_slack(space, set, y)? <= INDICATOR_TOL {
                    Ok(0.0)
                } else {
                    Ok(f64::INFINITY)
                }
            }
            ConvexFunction::DistTo { anchor, weight } => Ok(weight * space.dist(y, anchor)?),
            ConvexFunction::AffineEuclidean { gradient, constant } => match y {
                Point::Euclidean(v) => Ok(euclidean::dot(gradient, v) + constant),
                _ => domain("affine function evaluated off Euclidean space"),
            },
        }
    }
}
