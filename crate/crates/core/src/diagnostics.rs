//! Finite-window surrogates for asymptotic centers, Δ-limits and the
//! mean-square minimizer, plus the double-sequence check on orbits.
//!
//! Every quantity here is an estimate over a declared window of a finite
//! trace; none of them is a limit.

use std::ops::Range;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Result};
use crate::geometry::Point;
use crate::mappings::{apply, MappingSpec};
use crate::search;
use crate::solvers::IterationTrace;
use crate::spaces::Space;

/// Slack allowed in the double-sequence hypothesis check.
pub const DOUBLE_SEQUENCE_TOL: f64 = -1e-7;
/// Largest orbit prefix used for the all-pairs hypothesis check.
const DOUBLE_SEQUENCE_MAX: usize = 400;
pub const DEMICLOSED_PRECONDITION: f64 = 1e-4;
pub const DEMICLOSED_PASS: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticCenterEstimate {
    pub center: Point,
    pub radius: f64,
    pub window: (usize, usize),
    pub refinement_residual: f64,
}

/// Minimax center of `points[window]`.
pub fn asymptotic_center(space: &Space, points: &[Point], window: Range<usize>) -> Result<AsymptoticCenterEstimate> {
    if window.is_empty() {
        return domain("empty window");
    }
    if window.end > points.len() {
        return domain(format!("window {window:?} exceeds {} points", points.len()));
    }
    let est = search::minimax(space, &points[window.clone()])?;
    Ok(AsymptoticCenterEstimate {
        center: est.center,
        radius: est.radius,
        window: (window.start, window.end),
        refinement_residual: est.residual,
    })
}

/// The last quarter of `len` items.
pub fn default_window(len: usize) -> Range<usize> {
    let q = (len / 4).max(1).min(len);
    len - q..len
}

/// The second-to-last quarter followed by the last quarter.
pub fn default_windows(len: usize) -> Vec<Range<usize>> {
    let q = (len / 4).max(1);
    let last = len.saturating_sub(q)..len;
    let prev = len.saturating_sub(2 * q)..len.saturating_sub(q);
    if prev.is_empty() {
        vec![last.clone(), last]
    } else {
        vec![prev, last]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaLimitEstimate {
    /// Center of the last window.
    pub estimate: Point,
    /// Largest distance between two window centers.
    pub stability: f64,
    pub centers: Vec<AsymptoticCenterEstimate>,
}

pub fn delta_limit_estimate(space: &Space, trace: &IterationTrace, windows: &[Range<usize>]) -> Result<DeltaLimitEstimate> {
    if windows.len() < 2 {
        return domain("Δ-limit estimation needs at least two windows");
    }
    let centers = windows
        .par_iter()
        .map(|w| asymptotic_center(space, &trace.iterates, w.clone()))
        .collect::<Result<Vec<_>>>()?;
    let mut stability = 0.0_f64;
    for i in 0..centers.len() {
        for j in (i + 1)..centers.len() {
            stability = stability.max(space.dist(&centers[i].center, &centers[j].center)?);
        }
    }
    let estimate = centers.last().expect("two windows").center.clone();
    Ok(DeltaLimitEstimate { estimate, stability, centers })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DoubleSequenceReport {
    /// `A(n, n+1) = d(xₙ, xₙ₊₁)²`.
    pub consecutive: Vec<f64>,
    /// Smallest `A(n+1,m) + A(n,m+1) − 2A(n+1,m+1)` over the checked pairs.
    pub worst_hypothesis_slack: f64,
    pub hypothesis_ok: bool,
    /// Last consecutive value below the first, or below `1e-6`.
    pub trend_ok: bool,
    pub pairs_checked: usize,
}

/// Checks the double-sequence hypothesis on `A(n,m) = d(xₙ, xₘ)²` and
/// reports the consecutive values, which that hypothesis drives to 0.
pub fn double_sequence_residual(space: &Space, orbit: &[Point]) -> Result<DoubleSequenceReport> {
    if orbit.len() < 3 {
        return domain("orbit needs at least 3 points");
    }
    let consecutive = orbit
        .windows(2)
        .map(|w| space.dist(&w[0], &w[1]).map(|d| d * d))
        .collect::<Result<Vec<_>>>()?;

    let prefix = &orbit[..orbit.len().min(DOUBLE_SEQUENCE_MAX)];
    let m = prefix.len();
    let rows = (0..m)
        .into_par_iter()
        .map(|i| {
            prefix[i..]
                .iter()
                .map(|q| space.dist(&prefix[i], q).map(|d| d * d))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let a = |i: usize, j: usize| if i <= j { rows[i][j - i] } else { rows[j][i - j] };
    let mut worst = f64::INFINITY;
    let mut pairs_checked = 0;
    for n in 0..m - 1 {
        for k in 0..m - 1 {
            worst = worst.min(a(n + 1, k) + a(n, k + 1) - 2.0 * a(n + 1, k + 1));
            pairs_checked += 1;
        }
    }
    let first = consecutive[0];
    let last = *consecutive.last().expect("nonempty");
    Ok(DoubleSequenceReport {
        worst_hypothesis_slack: worst,
        hypothesis_ok: worst >= DOUBLE_SEQUENCE_TOL,
        trend_ok: last < first || last < 1e-6,
        consecutive,
        pairs_checked,
    })
}

/// Minimizer of `y ↦ (1/Σαₖ) Σ αₖ d(y, zₖ)²`.
pub fn g_minimizer(space: &Space, images: &[Point], weights: &[f64]) -> Result<Point> {
    Ok(search::weighted_mean(space, images, weights)?.point)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DemiclosednessReport {
    pub window: (usize, usize),
    pub max_window_residual: f64,
    pub precondition_met: bool,
    pub center: Option<Point>,
    /// `d(p, Tp)` at the window's asymptotic center.
    pub defect: Option<f64>,
    pub pass: bool,
    pub diagnostic: Option<String>,
}

/// If `d(x, Tx)` is small across the window, its asymptotic center should
/// be (nearly) fixed.
pub fn demiclosedness_probe(
    space: &Space,
    mapping: &MappingSpec,
    trace: &IterationTrace,
    window: Range<usize>,
) -> Result<DemiclosednessReport> {
    if window.is_empty() || window.end > trace.iterates.len() {
        return domain(format!("window {window:?} invalid for {} iterates", trace.iterates.len()));
    }
    let residuals = trace.iterates[window.clone()]
        .par_iter()
        .map(|x| space.dist(x, &apply(space, mapping, x)?))
        .collect::<Result<Vec<_>>>()?;
    let max_window_residual = residuals.into_iter().fold(0.0, f64::max);
    let span = (window.start, window.end);
    if !(max_window_residual < DEMICLOSED_PRECONDITION) {
        return Ok(DemiclosednessReport {
            window: span,
            max_window_residual,
            precondition_met: false,
            center: None,
            defect: None,
            pass: false,
            diagnostic: Some("window residuals too large".into()),
        });
    }
    let center = asymptotic_center(space, &trace.iterates, window)?.center;
    let defect = space.dist(&center, &apply(space, mapping, &center)?)?;
    Ok(DemiclosednessReport {
        window: span,
        max_window_residual,
        precondition_met: true,
        pass: defect < DEMICLOSED_PASS,
        center: Some(center),
        defect: Some(defect),
        diagnostic: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex::{ConvexFunction, ConvexSet};
    use crate::mappings::Glued;
    use crate::solvers::{mann, picard, SolverOptions, StepSchedule};

    fn e2(a: f64, b: f64) -> Point {
        Point::Euclidean(vec![a, b])
    }

    fn star() -> Space {
        Space::tree_from_json(r#"{"vertices": 4, "edges": [[0,1,1.0],[0,2,1.0],[0,3,1.0]]}"#).unwrap()
    }

    fn halving() -> MappingSpec {
        MappingSpec::Prox(ConvexFunction::HalfSqDistTo { anchor: e2(0.0, 0.0), weight: 1.0 })
    }

    #[test]
    fn constant_tail_center() {
        let s = Space::hyperbolic(2).unwrap();
        let p = s.poincare(&[0.3, -0.2]).unwrap();
        let pts = vec![s.origin(), p.clone(), p.clone(), p.clone()];
        let c = asymptotic_center(&s, &pts, 1..4).unwrap();
        assert_eq!(c.center, p);
        assert_eq!(c.radius, 0.0);
        assert!(asymptotic_center(&s, &pts, 2..2).is_err());
    }

    #[test]
    fn alternating_centers() {
        let s = Space::euclidean(2).unwrap();
        let pts: Vec<Point> = (0..10).map(|k| if k % 2 == 0 { e2(0.0, 0.0) } else { e2(2.0, 0.0) }).collect();
        let c = asymptotic_center(&s, &pts, 0..10).unwrap();
        assert!(s.dist(&c.center, &e2(1.0, 0.0)).unwrap() < 1e-9);
        assert!((c.radius - 1.0).abs() < 1e-9);

        let t = star();
        let leaves: Vec<Point> = (0..6).map(|k| t.vertex(1 + k % 2).unwrap()).collect();
        let c = asymptotic_center(&t, &leaves, 0..6).unwrap();
        assert_eq!(c.center, t.vertex(0).unwrap());
        assert_eq!(c.radius, 1.0);
    }

    #[test]
    fn delta_limit_of_halving_orbit() {
        let s = Space::euclidean(2).unwrap();
        let opts = SolverOptions { max_iter: 200, tol: 1e-300, ..Default::default() };
        let tr = picard(&s, &halving(), &e2(8.0, 0.0), None, &opts).unwrap();
        let d = delta_limit_estimate(&s, &tr, &default_windows(tr.iterates.len())).unwrap();
        assert!(d.stability < 1e-6);
        assert!(s.dist(&d.estimate, &e2(0.0, 0.0)).unwrap() < 1e-6);
        assert!(delta_limit_estimate(&s, &tr, &[0..3]).is_err());
    }

    #[test]
    fn delta_limit_of_identity_is_start() {
        let s = Space::euclidean(2).unwrap();
        let tr = picard(&s, &MappingSpec::Identity, &e2(1.0, 1.0), None, &SolverOptions::default()).unwrap();
        let d = delta_limit_estimate(&s, &tr, &default_windows(tr.iterates.len())).unwrap();
        assert_eq!(d.estimate, e2(1.0, 1.0));
        assert_eq!(d.stability, 0.0);
    }

    #[test]
    fn mann_projection_limit() {
        let s = Space::euclidean(2).unwrap();
        let ball = ConvexSet::Ball { center: e2(0.0, 0.0), radius: 1.0 };
        let m = MappingSpec::Projection(ball.clone());
        let x1 = e2(3.0, 4.0);
        let opts = SolverOptions { max_iter: 1000, tol: 1e-14, ..Default::default() };
        let tr = mann(&s, &m, &x1, &StepSchedule::Constant(0.5), None, &opts).unwrap();
        let d = delta_limit_estimate(&s, &tr, &default_windows(tr.iterates.len())).unwrap();
        let p = crate::convex::project(&s, &ball, &x1).unwrap();
        assert!(s.dist(&d.estimate, &p).unwrap() < 1e-4);
    }

    #[test]
    fn double_sequence_examples() {
        let s = Space::euclidean(2).unwrap();
        let constant = vec![e2(1.0, 1.0); 5];
        let r = double_sequence_residual(&s, &constant).unwrap();
        assert!(r.consecutive.iter().all(|a| *a == 0.0));
        assert!(r.hypothesis_ok && r.trend_ok);

        let opts = SolverOptions { max_iter: 20, tol: 1e-300, ..Default::default() };
        let tr = picard(&s, &halving(), &e2(8.0, 0.0), None, &opts).unwrap();
        let r = double_sequence_residual(&s, &tr.iterates).unwrap();
        for (n, a) in r.consecutive.iter().enumerate() {
            // d(xₙ, xₙ₊₁) = 4·2^{−n} counting from n = 0
            let expect = (4.0 * 0.5f64.powi(n as i32)).powi(2);
            assert!((a - expect).abs() <= 1e-12 * expect);
        }
        assert!(r.hypothesis_ok && r.trend_ok);
        assert!(double_sequence_residual(&s, &constant[..2]).is_err());
    }

    #[test]
    fn glued_orbit_trend() {
        let s = Space::euclidean(2).unwrap();
        let g = MappingSpec::Glued(Box::new(Glued::counterexample(e2(0.0, 0.0), 1.0).unwrap()));
        let opts = SolverOptions { max_iter: 10, tol: 1e-300, ..Default::default() };
        let tr = picard(&s, &g, &e2(10.0, 0.0), None, &opts).unwrap();
        let r = double_sequence_residual(&s, &tr.iterates).unwrap();
        assert_eq!(&r.consecutive[..3], &[81.0, 1.0, 0.0]);
        assert!(r.hypothesis_ok && r.trend_ok);
    }

    #[test]
    fn g_minimizer_examples() {
        let s = Space::euclidean(2).unwrap();
        let m = g_minimizer(&s, &[e2(0.0, 0.0), e2(2.0, 0.0)], &[1.0, 1.0]).unwrap();
        assert!(s.dist(&m, &e2(1.0, 0.0)).unwrap() < 1e-12);
        assert_eq!(g_minimizer(&s, &[e2(3.0, 1.0)], &[0.2]).unwrap(), e2(3.0, 1.0));
        assert!(g_minimizer(&s, &[], &[]).is_err());
        let t = star();
        let leaves: Vec<Point> = (1..4).map(|v| t.vertex(v).unwrap()).collect();
        assert_eq!(g_minimizer(&t, &leaves, &[1.0; 3]).unwrap(), t.vertex(0).unwrap());
    }

    #[test]
    fn demiclosedness_examples() {
        let s = Space::euclidean(2).unwrap();
        let opts = SolverOptions { max_iter: 1000, tol: 1e-14, ..Default::default() };
        let tr = mann(&s, &halving(), &e2(8.0, 0.0), &StepSchedule::Constant(0.5), None, &opts).unwrap();
        let r = demiclosedness_probe(&s, &halving(), &tr, default_window(tr.iterates.len())).unwrap();
        assert!(r.precondition_met && r.pass);

        let aff = MappingSpec::Prox(ConvexFunction::AffineEuclidean { gradient: vec![1.0, 0.0], constant: 0.0 });
        let tr = mann(&s, &aff, &e2(0.0, 0.0), &StepSchedule::Constant(0.5), None, &opts).unwrap();
        let r = demiclosedness_probe(&s, &aff, &tr, default_window(tr.iterates.len())).unwrap();
        assert!(!r.precondition_met && !r.pass);
        assert_eq!(r.diagnostic.as_deref(), Some("window residuals too large"));
    }
}
