//! The three Hadamard model spaces: flat ℝⁿ, hyperbolic ℍⁿ and metric trees.

pub mod euclidean;
pub mod hyperbolic;
pub mod tree;

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{domain, Result};
use crate::geometry::{Point, SpaceTag};
pub use tree::{MetricTree, TreeDocument, TreeLocus};

/// A geodesic space handle. Cloning is cheap (trees are shared).
#[derive(Debug, Clone)]
pub enum Space {
    Euclidean { dim: usize },
    Hyperbolic { dim: usize },
    Tree(Arc<MetricTree>),
}

impl Space {
    pub fn euclidean(dim: usize) -> Result<Self> {
        if dim == 0 {
            return domain("Euclidean dimension must be positive");
        }
        Ok(Space::Euclidean { dim })
    }

    pub fn hyperbolic(dim: usize) -> Result<Self> {
        if dim == 0 {
            return domain("hyperbolic dimension must be positive");
        }
        Ok(Space::Hyperbolic { dim })
    }

    pub fn tree(tree: MetricTree) -> Self {
        Space::Tree(Arc::new(tree))
    }

    pub fn tree_from_json(text: &str) -> Result<Self> {
        Ok(Self::tree(MetricTree::from_json(text)?))
    }

    pub fn tag(&self) -> SpaceTag {
        match self {
            Space::Euclidean { .. } => SpaceTag::Euclidean,
            Space::Hyperbolic { .. } => SpaceTag::Hyperbolic,
            Space::Tree(_) => SpaceTag::Tree,
        }
    }

    pub fn as_tree(&self) -> Option<&MetricTree> {
        match self {
            Space::Tree(t) => Some(t),
            _ => None,
        }
    }

    /// Euclidean vector point.
    pub fn point(&self, coords: Vec<f64>) -> Result<Point> {
        let p = Point::Euclidean(coords);
        self.check(&p)?;
        Ok(p)
    }

    /// Hyperbolic point from Poincaré-ball coordinates.
    pub fn poincare(&self, coords: &[f64]) -> Result<Point> {
        match self {
            Space::Hyperbolic { dim } if coords.len() == *dim => {
                Ok(Point::Hyperbolic(hyperbolic::from_poincare(coords)?))
            }
            _ => domain("Poincaré coordinates need a hyperbolic space of matching dimension"),
        }
    }

    /// Hyperbolic point from hyperboloid coordinates (validated, then the
    /// time coordinate is recomputed).
    pub fn hyperboloid(&self, coords: Vec<f64>) -> Result<Point> {
        let mut p = Point::Hyperbolic(coords);
        self.check(&p)?;
        if let Point::Hyperbolic(v) = &mut p {
            hyperbolic::renormalize(v);
        }
        Ok(p)
    }

    pub fn vertex(&self, v: usize) -> Result<Point> {
        match self {
            Space::Tree(t) => Ok(Point::Tree(t.vertex(v)?)),
            _ => domain("vertices exist only in tree spaces"),
        }
    }

    pub fn locus(&self, edge: usize, offset: f64) -> Result<Point> {
        match self {
            Space::Tree(t) => Ok(Point::Tree(t.locus(edge, offset)?)),
            _ => domain("edge loci exist only in tree spaces"),
        }
    }

    /// Base point: the origin of ℝⁿ or ℍⁿ, vertex 0 of a tree.
    pub fn origin(&self) -> Point {
        match self {
            Space::Euclidean { dim } => Point::Euclidean(vec![0.0; *dim]),
            Space::Hyperbolic { dim } => Point::Hyperbolic(hyperbolic::lift(&vec![0.0; *dim])),
            Space::Tree(t) => Point::Tree(t.vertex(0).expect("trees have vertex 0")),
        }
    }

    /// Validates that `p` is a well-formed point of this space.
    pub fn check(&self, p: &Point) -> Result<()> {
        match (self, p) {
            (Space::Euclidean { dim }, Point::Euclidean(x)) => {
                if x.len() != *dim {
                    return domain(format!("expected {dim} coordinates, got {}", x.len()));
                }
                if x.iter().any(|c| !c.is_finite()) {
                    return domain("non-finite coordinate");
                }
                Ok(())
            }
            (Space::Hyperbolic { dim }, Point::Hyperbolic(x)) => {
                if x.len() != dim + 1 {
                    return domain(format!("expected {} hyperboloid coordinates, got {}", dim + 1, x.len()));
                }
                if x.iter().any(|c| !c.is_finite()) {
                    return domain("non-finite coordinate");
                }
                let scale = x[*dim] * x[*dim];
                if x[*dim] <= 0.0 || hyperbolic::constraint_defect(x) > 1e-10 * scale.max(1.0) {
                    return domain("point is not on the upper hyperboloid sheet");
                }
                Ok(())
            }
            (Space::Tree(t), Point::Tree(l)) => {
                if !t.is_canonical(l) {
                    return domain(format!("tree locus {l:?} is not canonical for this tree"));
                }
                Ok(())
            }
            _ => domain(format!("point tagged {:?} used in a {:?} space", p.tag(), self.tag())),
        }
    }

    fn same(&self, x: &Point, y: &Point) -> Result<()> {
        let ok = matches!(
            (self, x, y),
            (Space::Euclidean { .. }, Point::Euclidean(_), Point::Euclidean(_))
                | (Space::Hyperbolic { .. }, Point::Hyperbolic(_), Point::Hyperbolic(_))
                | (Space::Tree(_), Point::Tree(_), Point::Tree(_))
        );
        if !ok {
            return domain(format!(
                "mismatched space tags: {:?} and {:?} in a {:?} space",
                x.tag(),
                y.tag(),
                self.tag()
            ));
        }
        if x.dim() != y.dim() {
            return domain("points have different dimensions");
        }
        Ok(())
    }

    /// Geodesic distance.
    pub fn dist(&self, x: &Point, y: &Point) -> Result<f64> {
        self.same(x, y)?;
        Ok(match (self, x, y) {
            (Space::Euclidean { .. }, Point::Euclidean(a), Point::Euclidean(b)) => euclidean::dist(a, b),
            (Space::Hyperbolic { .. }, Point::Hyperbolic(a), Point::Hyperbolic(b)) => hyperbolic::dist(a, b),
            (Space::Tree(t), Point::Tree(a), Point::Tree(b)) => t.dist(a, b),
            _ => unreachable!(),
        })
    }

    /// The geodesic convex combination `(1−α)x ⊕ αy`.
    pub fn combine(&self, x: &Point, y: &Point, alpha: f64) -> Result<Point> {
        self.same(x, y)?;
        if !(0.0..=1.0).contains(&alpha) {
            return domain(format!("alpha = {alpha} outside [0, 1]"));
        }
        if alpha == 0.0 {
            return Ok(x.clone());
        }
        if alpha == 1.0 {
            return Ok(y.clone());
        }
        Ok(match (self, x, y) {
            (Space::Euclidean { .. }, Point::Euclidean(a), Point::Euclidean(b)) => {
                Point::Euclidean(euclidean::combine(a, b, alpha))
            }
            (Space::Hyperbolic { .. }, Point::Hyperbolic(a), Point::Hyperbolic(b)) => {
                Point::Hyperbolic(hyperbolic::combine(a, b, alpha))
            }
            (Space::Tree(t), Point::Tree(a), Point::Tree(b)) => Point::Tree(t.combine(a, b, alpha)),
            _ => unreachable!(),
        })
    }

    /// Point at distance `min(s, d(x,y))` from `x` towards `y`.
    pub fn toward(&self, x: &Point, y: &Point, s: f64) -> Result<Point> {
        let d = self.dist(x, y)?;
        if d == 0.0 || s <= 0.0 {
            return Ok(x.clone());
        }
        self.combine(x, y, (s / d).min(1.0))
    }

    /// Samples a point of the closed geodesic ball `B̄_radius(center)`. Trees
    /// are bounded; points outside the ball are rejected and redrawn.
    pub fn sample_ball<R: Rng + ?Sized>(&self, rng: &mut R, center: &Point, radius: f64) -> Result<Point> {
        match (self, center) {
            (Space::Euclidean { dim }, Point::Euclidean(c)) => {
                let dir = unit_direction(rng, *dim);
                let r = radius * rng.random::<f64>().powf(1.0 / *dim as f64);
                Ok(Point::Euclidean(c.iter().zip(&dir).map(|(ci, di)| ci + r * di).collect()))
            }
            (Space::Hyperbolic { dim }, Point::Hyperbolic(c)) => {
                let dir = unit_direction(rng, *dim);
                let r = radius * rng.random::<f64>().powf(1.0 / *dim as f64);
                let basis = hyperbolic::tangent_basis(c);
                let mut v = vec![0.0; dim + 1];
                for (k, b) in basis.iter().enumerate() {
                    for (vi, bi) in v.iter_mut().zip(b) {
                        *vi += r * dir[k] * bi;
                    }
                }
                Ok(Point::Hyperbolic(hyperbolic::exp(c, &v)))
            }
            (Space::Tree(t), Point::Tree(c)) => {
                for _ in 0..10_000 {
                    let p = t.sample(rng);
                    if t.dist(c, &p) <= radius {
                        return Ok(Point::Tree(p));
                    }
                }
                domain("sampling ball too small relative to the tree")
            }
            _ => domain("sampling center does not belong to the space"),
        }
    }

    /// Riemannian logarithm (flat and hyperbolic spaces only).
    pub fn log(&self, y: &Point, a: &Point) -> Result<Vec<f64>> {
        self.same(y, a)?;
        match (y, a) {
            (Point::Euclidean(y), Point::Euclidean(a)) => Ok(a.iter().zip(y).map(|(ai, yi)| ai - yi).collect()),
            (Point::Hyperbolic(y), Point::Hyperbolic(a)) => Ok(hyperbolic::log(y, a)),
            _ => domain("trees have no tangent spaces"),
        }
    }

    pub fn exp(&self, y: &Point, v: &[f64]) -> Result<Point> {
        match y {
            Point::Euclidean(y) => Ok(Point::Euclidean(y.iter().zip(v).map(|(a, b)| a + b).collect())),
            Point::Hyperbolic(y) => Ok(Point::Hyperbolic(hyperbolic::exp(y, v))),
            Point::Tree(_) => domain("trees have no tangent spaces"),
        }
    }
}

fn unit_direction<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let n = euclidean::norm(&v);
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}
