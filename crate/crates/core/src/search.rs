//! Minimization engines shared by the proximity mappings and the
//! diagnostics: weighted mean-square (Fréchet) minimization and minimax
//! (circumcenter) minimization.
//!
//! Both start from candidates seeded at the input points (and, for minimax,
//! their pairwise midpoints), then refine per space:
//!
//! * ℝⁿ: closed form for the mean, ellipsoid refinement for the minimax.
//! * ℍⁿ: damped Riemannian Newton for the mean; ellipsoid refinement in the
//!   spatial chart `s ↦ (s, √(1+|s|²))`, where `cosh d(·, x) − 1` is convex.
//! * trees: exact minimization, edge by edge (objectives are piecewise
//!   quadratic along an edge; the minimax center is the diameter midpoint).

use nalgebra::{DMatrix, DVector};

use crate::error::{domain, Error, Result};
use crate::geometry::Point;
use crate::spaces::{hyperbolic, MetricTree, Space, TreeLocus};

/// Result of a mean-square minimization.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanEstimate {
    pub point: Point,
    /// Norm of the (normalized) gradient at the returned point; 0 for
    /// closed-form and exact solvers.
    pub residual: f64,
}

/// Result of a minimax minimization.
#[derive(Debug, Clone, PartialEq)]
pub struct MinimaxEstimate {
    pub center: Point,
    pub radius: f64,
    /// Certified gap between `radius` and a lower bound on the optimum.
    pub residual: f64,
}

/// Gradient tolerance for the hyperbolic Newton solver.
const NEWTON_TOL: f64 = 1e-13;

fn check_weights(points: &[Point], weights: &[f64]) -> Result<()> {
    if points.is_empty() {
        return domain("empty point set");
    }
    if points.len() != weights.len() {
        return domain("points and weights differ in length");
    }
    if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
        return domain("weights must be positive");
    }
    Ok(())
}

/// Minimizes `y ↦ Σ wᵢ d(y, pᵢ)²`.
pub fn weighted_mean(space: &Space, points: &[Point], weights: &[f64]) -> Result<MeanEstimate> {
    check_weights(points, weights)?;
    for p in points {
        space.check(p)?;
    }
    if points.len() == 1 || points.iter().all(|p| *p == points[0]) {
        return Ok(MeanEstimate { point: points[0].clone(), residual: 0.0 });
    }
    match space {
        Space::Euclidean { dim } => {
            let total: f64 = weights.iter().sum();
            let mut acc = vec![0.0; *dim];
            for (p, w) in points.iter().zip(weights) {
                for (a, c) in acc.iter_mut().zip(p.coords().unwrap()) {
                    *a += w * c;
                }
            }
            Ok(MeanEstimate { point: Point::Euclidean(acc.into_iter().map(|a| a / total).collect()), residual: 0.0 })
        }
        Space::Hyperbolic { .. } => hyperbolic_mean(space, points, weights),
        Space::Tree(tree) => {
            let terms: Vec<Term> = points
                .iter()
                .zip(weights)
                .map(|(p, w)| match p {
                    Point::Tree(l) => Term { anchor: *l, weight: *w, kind: TermKind::Squared },
                    _ => unreachable!(),
                })
                .collect();
            let (locus, _) = tree_argmin(tree, &terms, |_| true)?;
            Ok(MeanEstimate { point: Point::Tree(locus), residual: 0.0 })
        }
    }
}

fn mean_square(space: &Space, y: &Point, points: &[Point], weights: &[f64]) -> Result<f64> {
    let mut f = 0.0;
    for (p, w) in points.iter().zip(weights) {
        let d = space.dist(y, p)?;
        f += w * d * d;
    }
    Ok(f)
}

/// `d·coth d`, the tangential curvature factor of `½d²` in ℍⁿ.
fn d_coth_d(d: f64) -> f64 {
    if d < 1e-4 {
        1.0 + d * d / 3.0
    } else {
        d / d.tanh()
    }
}

fn hyperbolic_mean(space: &Space, points: &[Point], weights: &[f64]) -> Result<MeanEstimate> {
    let total: f64 = weights.iter().sum();
    let mut y = points[0].clone();
    let mut fy = mean_square(space, &y, points, weights)?;
    for p in &points[1..] {
        let fp = mean_square(space, p, points, weights)?;
        if fp < fy {
            y = p.clone();
            fy = fp;
        }
    }
    let mut residual = f64::INFINITY;
    for _ in 0..200 {
        let Point::Hyperbolic(yc) = &y else { unreachable!() };
        let n = yc.len() - 1;
        let basis = hyperbolic::tangent_basis(yc);
        let mut rhs = DVector::<f64>::zeros(n);
        let mut hess = DMatrix::<f64>::zeros(n, n);
        for (p, w) in points.iter().zip(weights) {
            let Point::Hyperbolic(pc) = p else { unreachable!() };
            let v = hyperbolic::log(yc, pc);
            let d = hyperbolic::tangent_norm(&v);
            let w = w / total;
            let coords = DVector::from_iterator(n, basis.iter().map(|e| hyperbolic::minkowski(e, &v)));
            rhs += &coords * w;
            let c = d_coth_d(d);
            for j in 0..n {
                hess[(j, j)] += w * c;
            }
            if d > 0.0 {
                let u = &coords / d;
                hess += (&u * u.transpose()) * (w * (1.0 - c));
            }
        }
        residual = rhs.norm();
        if residual <= NEWTON_TOL {
            break;
        }
        let delta = match hess.clone().cholesky() {
            Some(ch) => ch.solve(&rhs),
            None => rhs.clone(),
        };
        let mut step = vec![0.0; n + 1];
        for (k, e) in basis.iter().enumerate() {
            for (s, ei) in step.iter_mut().zip(e) {
                *s += delta[k] * ei;
            }
        }
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let scaled: Vec<f64> = step.iter().map(|s| s * scale).collect();
            let candidate = Point::Hyperbolic(hyperbolic::exp(yc, &scaled));
            let fc = mean_square(space, &candidate, points, weights)?;
            if fc <= fy * (1.0 + 1e-15) {
                y = candidate;
                fy = fc;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if residual > 1e-8 {
        return Err(Error::Numeric { message: "hyperbolic mean did not converge".into(), residual });
    }
    Ok(MeanEstimate { point: y, residual })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum TermKind {
    /// `w·d²`
    Squared,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Term {
    pub anchor: TreeLocus,
    pub weight: f64,
    pub kind: TermKind,
}

/// Distance from a point at offset `t` on `edge` to an anchor, written as
/// `sign·t + shift` on the piece of the edge containing `probe`.
fn affine_distance(tree: &MetricTree, edge: usize, anchor: &TreeLocus, probe: f64) -> (f64, f64, Option<f64>) {
    let e = tree.edges()[edge];
    if anchor.edge == edge {
        let ta = anchor.offset;
        return if probe < ta { (-1.0, ta, Some(ta)) } else { (1.0, -ta, Some(ta)) };
    }
    let du = tree.dist_vertex(e.u, anchor);
    let dv = tree.dist_vertex(e.v, anchor);
    if du <= dv {
        (1.0, du, None)
    } else {
        (-1.0, e.length + dv, None)
    }
}

fn tree_objective(tree: &MetricTree, terms: &[Term], y: &TreeLocus) -> f64 {
    terms
        .iter()
        .map(|t| {
            let d = tree.dist(y, &t.anchor);
            match t.kind {
                TermKind::Squared => t.weight * d * d,
            }
        })
        .sum()
}

/// Exact minimizer of `Σ` terms over the edges accepted by `allowed`.
///
/// Along an edge every anchor distance is affine between consecutive
/// anchor offsets, so the objective is a convex quadratic on each piece.
pub(crate) fn tree_argmin(
    tree: &MetricTree,
    terms: &[Term],
    allowed: impl Fn(usize) -> bool,
) -> Result<(TreeLocus, f64)> {
    let mut best: Option<(TreeLocus, f64)> = None;
    for (id, e) in tree.edges().iter().enumerate() {
        if !allowed(id) {
            continue;
        }
        let mut cuts = vec![0.0, e.length];
        for t in terms {
            if t.anchor.edge == id {
                cuts.push(t.anchor.offset);
            }
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        for w in cuts.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            if hi <= lo {
                continue;
            }
            let mid = 0.5 * (lo + hi);
            let (mut quad, mut lin) = (0.0, 0.0);
            for t in terms {
                let (sign, shift, _) = affine_distance(tree, id, &t.anchor, mid);
                match t.kind {
                    TermKind::Squared => {
                        quad += t.weight;
                        lin += 2.0 * t.weight * sign * shift;
                    }
                }
            }
            let t_star = if quad > 0.0 {
                (-lin / (2.0 * quad)).clamp(lo, hi)
            } else if lin > 0.0 {
                lo
            } else {
                hi
            };
            let locus = tree.canonical(id, t_star);
            let value = tree_objective(tree, terms, &locus);
            if best.map_or(true, |(_, v)| value < v) {
                best = Some((locus, value));
            }
        }
    }
    best.ok_or_else(|| Error::Domain("no admissible edge for tree minimization".into()))
}

fn max_dist(space: &Space, y: &Point, points: &[Point]) -> Result<f64> {
    let mut r: f64 = 0.0;
    for p in points {
        r = r.max(space.dist(y, p)?);
    }
    Ok(r)
}

/// Minimizes `y ↦ max_k d(y, p_k)`.
pub fn minimax(space: &Space, points: &[Point]) -> Result<MinimaxEstimate> {
    if points.is_empty() {
        return domain("empty point set");
    }
    for p in points {
        space.check(p)?;
    }
    if points.iter().all(|p| *p == points[0]) {
        return Ok(MinimaxEstimate { center: points[0].clone(), radius: 0.0, residual: 0.0 });
    }
    if let Space::Tree(_) = space {
        // in an ℝ-tree the circumcenter is the midpoint of a diametral pair
        let mut best = (0usize, 0usize, -1.0);
        for i in 0..points.len() {
            for j in (i + 1)..points.len() {
                let d = space.dist(&points[i], &points[j])?;
                if d > best.2 {
                    best = (i, j, d);
                }
            }
        }
        let center = space.combine(&points[best.0], &points[best.1], 0.5)?;
        let radius = max_dist(space, &center, points)?;
        return Ok(MinimaxEstimate { center, radius, residual: (radius - 0.5 * best.2).max(0.0) });
    }

    // seed: best input point or pairwise midpoint (subsampled for long inputs)
    let stride = points.len().div_ceil(32);
    let sub: Vec<&Point> = points.iter().step_by(stride).collect();
    let mut seed = points[0].clone();
    let mut seed_r = max_dist(space, &seed, points)?;
    let mut consider = |c: Point| -> Result<()> {
        let r = max_dist(space, &c, points)?;
        if r < seed_r {
            seed = c;
            seed_r = r;
        }
        Ok(())
    };
    for p in points.iter().step_by(stride) {
        consider(p.clone())?;
    }
    for i in 0..sub.len() {
        for j in (i + 1)..sub.len() {
            consider(space.combine(sub[i], sub[j], 0.5)?)?;
        }
    }

    let chart = Chart::new(space, points)?;
    let start = chart.encode(&seed);
    let radius0 = chart.enclosing_radius(&seed, seed_r);
    let (best, gap) = ellipsoid_minimize(&chart, start, radius0);
    let center = chart.decode(&best);
    let radius = max_dist(space, &center, points)?;
    let residual = chart.radius_gap(radius, gap);
    Ok(MinimaxEstimate { center, radius, residual })
}

/// Coordinates in which the minimax objective is convex.
enum Chart {
    /// `max_k |y − x_k|²`
    Flat(Vec<Vec<f64>>),
    /// `max_k (cosh d(lift(s), x_k) − 1)`
    Hyperboloid(Vec<Vec<f64>>),
}

impl Chart {
    fn new(space: &Space, points: &[Point]) -> Result<Self> {
        let coords: Vec<Vec<f64>> = points.iter().map(|p| p.coords().unwrap().to_vec()).collect();
        match space {
            Space::Euclidean { .. } => Ok(Chart::Flat(coords)),
            Space::Hyperbolic { .. } => Ok(Chart::Hyperboloid(coords)),
            Space::Tree(_) => domain("trees have no coordinate chart"),
        }
    }

    fn encode(&self, p: &Point) -> DVector<f64> {
        let c = p.coords().unwrap();
        match self {
            Chart::Flat(_) => DVector::from_column_slice(c),
            Chart::Hyperboloid(_) => DVector::from_column_slice(&c[..c.len() - 1]),
        }
    }

    fn decode(&self, s: &DVector<f64>) -> Point {
        match self {
            Chart::Flat(_) => Point::Euclidean(s.iter().copied().collect()),
            Chart::Hyperboloid(_) => Point::Hyperbolic(hyperbolic::lift(s.as_slice())),
        }
    }

    /// Radius of a chart ball around `seed` containing the geodesic ball
    /// `B̄(seed, r)`, hence the convex hull of the points.
    fn enclosing_radius(&self, seed: &Point, r: f64) -> f64 {
        match self {
            Chart::Flat(_) => r * (1.0 + 1e-9) + f64::MIN_POSITIVE,
            Chart::Hyperboloid(_) => {
                let c = seed.coords().unwrap();
                let n = c.len() - 1;
                let s_norm = c[..n].iter().map(|v| v * v).sum::<f64>().sqrt();
                let d0 = s_norm.asinh();
                s_norm + (d0 + r).sinh() * (1.0 + 1e-9)
            }
        }
    }

    /// Objective value and a subgradient.
    fn eval(&self, s: &DVector<f64>) -> (f64, DVector<f64>) {
        let n = s.len();
        let mut best = (f64::NEG_INFINITY, DVector::zeros(n));
        match self {
            Chart::Flat(pts) => {
                for x in pts {
                    let diff = DVector::from_iterator(n, s.iter().zip(x).map(|(a, b)| a - b));
                    let v = diff.norm_squared();
                    if v > best.0 {
                        best = (v, diff * 2.0);
                    }
                }
            }
            Chart::Hyperboloid(pts) => {
                let t = (1.0 + s.norm_squared()).sqrt();
                for x in pts {
                    let tx = x[n];
                    let spatial: f64 = s.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
                    let dt = t - tx;
                    let v = 0.5 * (spatial - dt * dt);
                    if v > best.0 {
                        let g = DVector::from_iterator(n, s.iter().zip(x).map(|(si, xi)| tx * si / t - xi));
                        best = (v, g);
                    }
                }
            }
        }
        best
    }

    fn radius_gap(&self, radius: f64, gap: f64) -> f64 {
        match self {
            Chart::Flat(_) => {
                let lower = (radius * radius - gap).max(0.0).sqrt();
                radius - lower
            }
            Chart::Hyperboloid(_) => {
                // cosh r − 1 = 2 sinh²(r/2)
                let value = 2.0 * (radius / 2.0).sinh().powi(2);
                let lower = 2.0 * ((value - gap).max(0.0) / 2.0).sqrt().asinh();
                radius - lower
            }
        }
    }
}

/// Central-cut ellipsoid method started from the ball `B(start, radius)`.
/// Returns the best point found and a certified optimality gap.
fn ellipsoid_minimize(chart: &Chart, start: DVector<f64>, radius: f64) -> (DVector<f64>, f64) {
    const REL_TOL: f64 = 1e-15;
    let n = start.len();
    let mut c = start;
    let (f0, _) = chart.eval(&c);
    let mut best = (f0, c.clone());
    let mut lower = f64::NEG_INFINITY;

    if n == 1 {
        let (mut lo, mut hi) = (c[0] - radius, c[0] + radius);
        for _ in 0..200 {
            let (f, g) = chart.eval(&c);
            if f < best.0 {
                best = (f, c.clone());
            }
            lower = lower.max(f - g[0].abs() * (hi - lo) / 2.0);
            if g[0] == 0.0 || best.0 - lower <= REL_TOL * best.0 {
                break;
            }
            if g[0] > 0.0 {
                hi = c[0];
            } else {
                lo = c[0];
            }
            c[0] = 0.5 * (lo + hi);
        }
        return (best.1, (best.0 - lower).max(0.0));
    }

    let nf = n as f64;
    let mut p = DMatrix::<f64>::identity(n, n) * (radius * radius);
    let max_iter = 600 * n * n + 2000;
    for _ in 0..max_iter {
        let (f, g) = chart.eval(&c);
        if f < best.0 {
            best = (f, c.clone());
        }
        let pg = &p * &g;
        let gpg = g.dot(&pg);
        if !(gpg > 0.0) {
            lower = lower.max(f);
            break;
        }
        let width = gpg.sqrt();
        lower = lower.max(f - width);
        if best.0 - lower <= REL_TOL * best.0 {
            break;
        }
        let b = pg / width;
        c -= &b / (nf + 1.0);
        p = (p - (&b * b.transpose()) * (2.0 / (nf + 1.0))) * (nf * nf / (nf * nf - 1.0));
        // keep P symmetric against rounding drift
        p = (&p + p.transpose()) * 0.5;
    }
    (best.1, (best.0 - lower).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn star() -> Space {
        Space::tree_from_json(r#"{"vertices": 4, "edges": [[0,1,1.0],[0,2,1.0],[0,3,1.0]]}"#).unwrap()
    }

    fn e2(a: f64, b: f64) -> Point {
        Point::Euclidean(vec![a, b])
    }

    #[test]
    fn minimax_of_two_points_is_the_midpoint() {
        let s = Space::euclidean(2).unwrap();
        let est = minimax(&s, &[e2(0.0, 0.0), e2(2.0, 0.0), e2(0.0, 0.0)]).unwrap();
        assert!(s.dist(&est.center, &e2(1.0, 0.0)).unwrap() < 1e-6);
        assert!((est.radius - 1.0).abs() < 1e-9);
    }

    #[test]
    fn minimax_of_a_right_triangle() {
        // circumcenter of a right triangle is the hypotenuse midpoint
        let s = Space::euclidean(2).unwrap();
        let est = minimax(&s, &[e2(0.0, 0.0), e2(4.0, 0.0), e2(0.0, 2.0)]).unwrap();
        assert!(s.dist(&est.center, &e2(2.0, 1.0)).unwrap() < 1e-6);
        assert!(est.residual < 1e-6);
    }

    #[test]
    fn minimax_in_one_dimension() {
        let s = Space::euclidean(1).unwrap();
        let pts: Vec<Point> = [3.0, -1.0, 0.5].iter().map(|v| Point::Euclidean(vec![*v])).collect();
        let est = minimax(&s, &pts).unwrap();
        assert!((est.center.coords().unwrap()[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn minimax_on_the_star() {
        let t = star();
        let pts = [t.vertex(1).unwrap(), t.vertex(2).unwrap(), t.vertex(1).unwrap()];
        let est = minimax(&t, &pts).unwrap();
        assert_eq!(est.center, t.vertex(0).unwrap());
        assert_eq!(est.radius, 1.0);
    }

    #[test]
    fn hyperbolic_minimax_is_symmetric() {
        let h = Space::hyperbolic(2).unwrap();
        let a = h.poincare(&[0.5, 0.0]).unwrap();
        let b = h.poincare(&[-0.5, 0.0]).unwrap();
        let est = minimax(&h, &[a.clone(), b.clone()]).unwrap();
        assert!(h.dist(&est.center, &h.origin()).unwrap() < 1e-6);
        assert!((est.radius - h.dist(&a, &h.origin()).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn tree_mean_of_three_leaves_is_the_hub() {
        let t = star();
        let pts = [t.vertex(1).unwrap(), t.vertex(2).unwrap(), t.vertex(3).unwrap()];
        let est = weighted_mean(&t, &pts, &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(est.point, t.vertex(0).unwrap());
    }

    #[test]
    fn tree_mean_of_two_leaves_with_unequal_weights() {
        // minimize 3 s² + (2 − s)² along leaf1 → leaf2: s = 0.5
        let t = star();
        let pts = [t.vertex(1).unwrap(), t.vertex(2).unwrap()];
        let est = weighted_mean(&t, &pts, &[3.0, 1.0]).unwrap();
        assert_eq!(est.point, t.locus(0, 0.5).unwrap());
    }

    #[test]
    fn hyperbolic_mean_has_zero_gradient() {
        let h = Space::hyperbolic(2).unwrap();
        let pts = [
            h.poincare(&[0.7, 0.1]).unwrap(),
            h.poincare(&[-0.3, 0.6]).unwrap(),
            h.poincare(&[0.0, -0.8]).unwrap(),
        ];
        let w = [1.0, 2.0, 0.5];
        let est = weighted_mean(&h, &pts, &w).unwrap();
        assert!(est.residual < 1e-12);
        // perturbations only increase the objective
        let f0 = mean_square(&h, &est.point, &pts, &w).unwrap();
        for p in &pts {
            let q = h.combine(&est.point, p, 1e-3).unwrap();
            assert!(mean_square(&h, &q, &pts, &w).unwrap() >= f0);
        }
    }

    #[test]
    fn empty_inputs_are_rejected() {
        let s = Space::euclidean(2).unwrap();
        assert!(minimax(&s, &[]).is_err());
        assert!(weighted_mean(&s, &[], &[]).is_err());
        assert!(weighted_mean(&s, &[e2(0.0, 0.0)], &[0.0]).is_err());
    }
}
