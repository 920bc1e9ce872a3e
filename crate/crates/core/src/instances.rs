//! The shipped catalog of test instances: firmly metrically nonspreading
//! projections and proximity mappings in every model space, the glued
//! counterexample, and the fixed-point-free affine prox.

use std::collections::BTreeSet;

use crate::convex::{ConvexFunction, ConvexSet};
use crate::error::Result;
use crate::geometry::Point;
use crate::mappings::{known_fixed_point, Glued, MappingSpec};
use crate::spaces::Space;

#[derive(Debug, Clone)]
pub struct Instance {
    pub name: &'static str,
    pub space: Space,
    pub mapping: MappingSpec,
    pub fixed_point: Option<Point>,
    /// Samples and starting points are drawn from this ball around the origin.
    pub radius: f64,
}

/// Four-vertex star: hub 0, unit edges to leaves 1, 2, 3.
pub fn star_tree() -> Space {
    Space::tree_from_json(r#"{"vertices": 4, "edges": [[0, 1, 1.0], [0, 2, 1.0], [0, 3, 1.0]]}"#)
        .expect("valid star")
}

/// Seven vertices with mixed edge lengths and two branch points.
pub fn branching_tree() -> Space {
    Space::tree_from_json(
        r#"{"vertices": 7, "edges": [[0, 1, 1.5], [1, 2, 0.7], [1, 3, 2.0], [0, 4, 0.4], [4, 5, 1.1], [4, 6, 2.5]]}"#,
    )
    .expect("valid tree")
}

fn build(name: &'static str, space: Space, mapping: MappingSpec, radius: f64) -> Result<Instance> {
    mapping.validate(&space)?;
    let fixed_point = known_fixed_point(&space, &mapping)?;
    Ok(Instance { name, space, mapping, fixed_point, radius })
}

/// Projections and proximity mappings, each with a known fixed point.
pub fn fmns_catalog() -> Result<Vec<Instance>> {
    let e2 = Space::euclidean(2)?;
    let e5 = Space::euclidean(5)?;
    let h2 = Space::hyperbolic(2)?;
    let h3 = Space::hyperbolic(3)?;
    let star = star_tree();
    let branching = branching_tree();

    let out = vec![
        build(
            "euclidean2-ball-projection",
            e2.clone(),
            MappingSpec::Projection(ConvexSet::Ball { center: e2.point(vec![1.0, 0.5])?, radius: 1.0 }),
            4.0,
        )?,
        build(
            "euclidean2-quadratic-prox",
            e2.clone(),
            MappingSpec::Prox(ConvexFunction::HalfSqDistTo { anchor: e2.point(vec![1.0, -1.0])?, weight: 2.0 }),
            4.0,
        )?,
        build(
            "euclidean5-frechet-prox",
            e5.clone(),
            MappingSpec::Prox(ConvexFunction::WeightedFrechet {
                anchors: vec![
                    (e5.point(vec![1.0, 0.0, 0.0, 0.0, 0.0])?, 1.0),
                    (e5.point(vec![0.0, 1.0, 0.0, -1.0, 0.0])?, 0.5),
                    (e5.point(vec![0.0, 0.0, 2.0, 0.0, 1.0])?, 0.25),
                ],
            }),
            3.0,
        )?,
        build(
            "euclidean5-halfspace-projection",
            e5.clone(),
            MappingSpec::Projection(ConvexSet::Halfspace { normal: vec![1.0, -2.0, 0.5, 0.0, 1.0], offset: 0.3 }),
            3.0,
        )?,
        build(
            "hyperbolic2-segment-projection",
            h2.clone(),
            MappingSpec::Projection(ConvexSet::Segment { a: h2.poincare(&[-0.5, 0.1])?, b: h2.poincare(&[0.4, 0.3])? }),
            2.5,
        )?,
        build(
            "hyperbolic2-quadratic-prox",
            h2.clone(),
            MappingSpec::Prox(ConvexFunction::HalfSqDistTo { anchor: h2.poincare(&[0.3, -0.2])?, weight: 1.0 }),
            2.5,
        )?,
        build(
            "hyperbolic2-distance-prox",
            h2.clone(),
            MappingSpec::Prox(ConvexFunction::DistTo { anchor: h2.poincare(&[-0.1, 0.2])?, weight: 0.3 }),
            2.5,
        )?,
        build(
            "hyperbolic3-frechet-prox",
            h3.clone(),
            MappingSpec::Prox(ConvexFunction::WeightedFrechet {
                anchors: vec![
                    (h3.poincare(&[0.5, 0.0, 0.0])?, 1.0),
                    (h3.poincare(&[0.0, -0.4, 0.2])?, 2.0),
                    (h3.poincare(&[-0.3, 0.3, 0.6])?, 0.5),
                ],
            }),
            2.0,
        )?,
        build(
            "hyperbolic2-ball-projection",
            h2.clone(),
            MappingSpec::Projection(ConvexSet::Ball { center: h2.poincare(&[0.2, 0.2])?, radius: 0.8 }),
            2.5,
        )?,
        build(
            "star-subtree-projection",
            star.clone(),
            MappingSpec::Projection(ConvexSet::Subtree { vertices: BTreeSet::from([0, 1]) }),
            2.0,
        )?,
        build(
            "star-frechet-prox",
            star.clone(),
            MappingSpec::Prox(ConvexFunction::WeightedFrechet {
                anchors: vec![(star.vertex(1)?, 1.0), (star.locus(1, 0.5)?, 2.0), (star.vertex(3)?, 0.5)],
            }),
            2.0,
        )?,
        build(
            "branching-frechet-prox",
            branching.clone(),
            MappingSpec::Prox(ConvexFunction::WeightedFrechet {
                anchors: vec![(branching.vertex(2)?, 1.0), (branching.vertex(6)?, 1.0), (branching.locus(2, 1.2)?, 3.0)],
            }),
            10.0,
        )?,
        build(
            "branching-ball-projection",
            branching.clone(),
            MappingSpec::Projection(ConvexSet::Ball { center: branching.vertex(4)?, radius: 1.3 }),
            10.0,
        )?,
        build(
            "branching-distance-prox",
            branching.clone(),
            MappingSpec::Prox(ConvexFunction::DistTo { anchor: branching.locus(5, 1.0)?, weight: 0.75 }),
            10.0,
        )?,
    ];
    Ok(out)
}

/// `U = P_{{a}}` inside `B̄_δ(a)`, `P_{B̄_r(a)}` outside, `δ = (1 + 2√2) r`.
pub fn glued_instance(space: Space, center: Point, r: f64) -> Result<Instance> {
    let g = Glued::counterexample(center.clone(), r)?;
    let radius = 2.0 * g.delta() + space.dist(&space.origin(), &center)?;
    let mapping = MappingSpec::Glued(Box::new(g));
    Ok(Instance { name: "glued", space, mapping, fixed_point: Some(center), radius })
}

/// Prox of `y ↦ ⟨g, y⟩`: translation by `−g`, no fixed point.
pub fn affine_instance() -> Result<Instance> {
    let space = Space::euclidean(2)?;
    let mapping = MappingSpec::Prox(ConvexFunction::AffineEuclidean { gradient: vec![0.6, -0.8], constant: 0.0 });
    Ok(Instance { name: "affine-prox", space, mapping, fixed_point: None, radius: 2.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mappings::apply;

    #[test]
    fn catalog_covers_every_space_with_fixed_points() {
        let cat = fmns_catalog().unwrap();
        assert_eq!(cat.len(), 14);
        for tag in [crate::SpaceTag::Euclidean, crate::SpaceTag::Hyperbolic, crate::SpaceTag::Tree] {
            assert!(cat.iter().filter(|i| i.space.tag() == tag).count() >= 4);
        }
        for inst in &cat {
            let u = inst.fixed_point.as_ref().unwrap();
            let tu = apply(&inst.space, &inst.mapping, u).unwrap();
            assert!(inst.space.dist(u, &tu).unwrap() <= 1e-10, "{}", inst.name);
        }
    }

    #[test]
    fn special_instances() {
        let s = Space::hyperbolic(2).unwrap();
        let g = glued_instance(s.clone(), s.poincare(&[0.1, 0.0]).unwrap(), 0.5).unwrap();
        assert!(matches!(g.mapping, MappingSpec::Glued(_)));
        assert!(affine_instance().unwrap().fixed_point.is_none());
    }
}
