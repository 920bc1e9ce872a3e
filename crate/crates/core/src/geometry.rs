//! Points, ordered point pairs, the quasilinearization bracket and the
//! CAT(0) inequality checkers shared by the rest of the crate.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::spaces::{Space, TreeLocus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceTag {
    Euclidean,
    Hyperbolic,
    Tree,
}

/// A point of one of the model spaces.
///
/// Hyperbolic points are hyperboloid vectors `(s_1, …, s_n, t)`; tree points
/// are canonical edge loci. Equality is exact coordinate equality, which is
/// meaningful because every constructor canonicalizes.
#[derive(Debug, Clone, PartialEq)]
pub enum Point {
    Euclidean(Vec<f64>),
    Hyperbolic(Vec<f64>),
    Tree(TreeLocus),
}

impl Point {
    pub fn tag(&self) -> SpaceTag {
        match self {
            Point::Euclidean(_) => SpaceTag::Euclidean,
            Point::Hyperbolic(_) => SpaceTag::Hyperbolic,
            Point::Tree(_) => SpaceTag::Tree,
        }
    }

    pub(crate) fn dim(&self) -> usize {
        match self {
            Point::Euclidean(x) => x.len(),
            Point::Hyperbolic(x) => x.len() - 1,
            Point::Tree(_) => 1,
        }
    }

    pub fn coords(&self) -> Option<&[f64]> {
        match self {
            Point::Euclidean(x) | Point::Hyperbolic(x) => Some(x),
            Point::Tree(_) => None,
        }
    }
}

// Euclidean points serialize as plain arrays, hyperbolic points carry both
// hyperboloid and Poincaré coordinates, tree points their edge locus.
impl Serialize for Point {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        match self {
            Point::Euclidean(x) => x.serialize(s),
            Point::Hyperbolic(x) => {
                let mut m = s.serialize_map(Some(2))?;
                m.serialize_entry("hyperboloid", x)?;
                m.serialize_entry("poincare", &crate::spaces::hyperbolic::to_poincare(x))?;
                m.end()
            }
            Point::Tree(l) => l.serialize(s),
        }
    }
}

/// The ordered pair `→xy` (tail `x`, head `y`).
#[derive(Debug, Clone, Copy)]
pub struct Pair<'a> {
    pub tail: &'a Point,
    pub head: &'a Point,
}

impl<'a> Pair<'a> {
    pub fn new(tail: &'a Point, head: &'a Point) -> Self {
        Self { tail, head }
    }

    pub fn reversed(self) -> Self {
        Self { tail: self.head, head: self.tail }
    }
}

fn sq(space: &Space, a: &Point, b: &Point) -> Result<f64> {
    let d = space.dist(a, b)?;
    Ok(d * d)
}

/// Quasilinearization `⟨→xy, →zw⟩ = ½(d(x,w)² + d(y,z)² − d(x,z)² − d(y,w)²)`.
///
/// In a Hilbert space this is the inner product `⟨x − y, z − w⟩`.
pub fn quasi_inner(space: &Space, xy: Pair<'_>, zw: Pair<'_>) -> Result<f64> {
    let (x, y, z, w) = (xy.tail, xy.head, zw.tail, zw.head);
    Ok(0.5 * (sq(space, x, w)? + sq(space, y, z)? - sq(space, x, z)? - sq(space, y, w)?))
}

/// Residuals of the four algebraic identities of the bracket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuasiIdentityResiduals {
    /// `⟨→xy,→xy⟩ − d(x,y)²`
    pub self_product: f64,
    /// worst of `⟨→xy,→zw⟩ − ⟨→zw,→xy⟩` and `⟨→xy,→zw⟩ + ⟨→yx,→zw⟩`
    pub symmetry: f64,
    /// `⟨→xp,→zw⟩ + ⟨→py,→zw⟩ − ⟨→xy,→zw⟩`
    pub splitting: f64,
    /// `d(x,z)² + d(z,y)² + 2⟨→xz,→zy⟩ − d(x,y)²`
    pub cosine_law: f64,
}

impl QuasiIdentityResiduals {
    pub fn max_abs(&self) -> f64 {
        self.self_product
            .abs()
            .max(self.symmetry.abs())
            .max(self.splitting.abs())
            .max(self.cosine_law.abs())
    }
}

pub fn quasi_identity_residuals(
    space: &Space,
    x: &Point,
    y: &Point,
    z: &Point,
    w: &Point,
    p: &Point,
) -> Result<QuasiIdentityResiduals> {
    let xy = Pair::new(x, y);
    let zw = Pair::new(z, w);
    let self_product = quasi_inner(space, xy, xy)? - sq(space, x, y)?;

    let base = quasi_inner(space, xy, zw)?;
    let swapped = quasi_inner(space, zw, xy)?;
    let flipped = quasi_inner(space, xy.reversed(), zw)?;
    let sym = base - swapped;
    let anti = base + flipped;
    let symmetry = if sym.abs() >= anti.abs() { sym } else { anti };

    let splitting =
        quasi_inner(space, Pair::new(x, p), zw)? + quasi_inner(space, Pair::new(p, y), zw)? - base;

    let cosine_law = sq(space, x, z)? + sq(space, z, y)?
        + 2.0 * quasi_inner(space, Pair::new(x, z), Pair::new(z, y))?
        - sq(space, x, y)?;

    Ok(QuasiIdentityResiduals { self_product, symmetry, splitting, cosine_law })
}

/// `d(x,y)·d(z,w) − |⟨→xy,→zw⟩|`; nonnegative in every CAT(0) space.
pub fn cauchy_schwarz_slack(space: &Space, xy: Pair<'_>, zw: Pair<'_>) -> Result<f64> {
    let lhs = space.dist(xy.tail, xy.head)? * space.dist(zw.tail, zw.head)?;
    Ok(lhs - quasi_inner(space, xy, zw)?.abs())
}

/// Slacks of the two CAT(0) convexity inequalities at `m = (1−α)x ⊕ αy`:
///
/// * `(1−α)d(z,x) + αd(z,y) − d(z,m)`
/// * `(1−α)d(z,x)² + αd(z,y)² − α(1−α)d(x,y)² − d(z,m)²`
pub fn convexity_slacks(space: &Space, x: &Point, y: &Point, z: &Point, alpha: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&alpha) {
        return domain(format!("alpha = {alpha} outside [0, 1]"));
    }
    let m = space.combine(x, y, alpha)?;
    let dzx = space.dist(z, x)?;
    let dzy = space.dist(z, y)?;
    let dxy = space.dist(x, y)?;
    let dzm = space.dist(z, &m)?;
    let linear = (1.0 - alpha) * dzx + alpha * dzy - dzm;
    let quadratic = (1.0 - alpha) * dzx * dzx + alpha * dzy * dzy - alpha * (1.0 - alpha) * dxy * dxy - dzm * dzm;
    Ok((linear, quadratic))
}
