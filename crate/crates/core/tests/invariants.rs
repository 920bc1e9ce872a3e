use nonspread::classify::classify_pairs;
use nonspread::convex::{membership_slack, ConvexFunction, ConvexSet};
use nonspread::diagnostics::{double_sequence_residual, g_minimizer};
use nonspread::geometry::{cauchy_schwarz_slack, convexity_slacks, quasi_identity_residuals, Pair};
use nonspread::harness::fejer_check;
use nonspread::instances::{branching_tree, fmns_catalog, glued_instance, star_tree};
use nonspread::mappings::{apply, prox, MappingSpec};
use nonspread::sampling::Sampler;
use nonspread::solvers::{mann, picard, SolverOptions, StepSchedule};
use nonspread::{Point, Space};
use proptest::prelude::*;

fn space(i: usize) -> (Space, f64) {
    match i {
        0 => (Space::euclidean(2).unwrap(), 5.0),
        1 => (Space::euclidean(4).unwrap(), 5.0),
        2 => (Space::hyperbolic(2).unwrap(), 3.0),
        3 => (Space::hyperbolic(3).unwrap(), 2.5),
        4 => (star_tree(), 2.0),
        _ => (branching_tree(), 8.0),
    }
}

fn draw(i: usize, seed: u64, k: usize) -> (Space, Vec<Point>) {
    let (s, r) = space(i);
    let pts = Sampler::around_origin(&s, r, seed).unwrap().points(&s, k, 0).unwrap();
    (s, pts)
}

fn poincare_coords(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-0.6f64..0.6, dim)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn metric_axioms(i in 0usize..6, seed in any::<u64>()) {
        let (s, p) = draw(i, seed, 3);
        let (dxy, dyx) = (s.dist(&p[0], &p[1]).unwrap(), s.dist(&p[1], &p[0]).unwrap());
        prop_assert!((dxy - dyx).abs() <= 1e-12 * (1.0 + dxy));
        prop_assert!(s.dist(&p[0], &p[0]).unwrap() <= 1e-7);
        let dxz = s.dist(&p[0], &p[2]).unwrap();
        let dzy = s.dist(&p[2], &p[1]).unwrap();
        prop_assert!(dxy <= dxz + dzy + 1e-9);
    }

    #[test]
    fn geodesics_are_isometric(i in 0usize..6, seed in any::<u64>(), a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let (s, p) = draw(i, seed, 2);
        let d = s.dist(&p[0], &p[1]).unwrap();
        let ma = s.combine(&p[0], &p[1], a).unwrap();
        let mb = s.combine(&p[0], &p[1], b).unwrap();
        prop_assert!((s.dist(&p[0], &ma).unwrap() - a * d).abs() <= 1e-7);
        prop_assert!((s.dist(&ma, &mb).unwrap() - (a - b).abs() * d).abs() <= 1e-7);
    }

    #[test]
    fn cauchy_schwarz_and_convexity(i in 0usize..6, seed in any::<u64>(), alpha in 0.0f64..=1.0) {
        let (s, p) = draw(i, seed, 4);
        prop_assert!(cauchy_schwarz_slack(&s, Pair::new(&p[0], &p[1]), Pair::new(&p[2], &p[3])).unwrap() >= -1e-9);
        let (lin, quad) = convexity_slacks(&s, &p[0], &p[1], &p[2], alpha).unwrap();
        prop_assert!(lin >= -1e-9 && quad >= -1e-9, "{lin} {quad}");
    }

    #[test]
    fn quasilinearization_identities(i in 0usize..6, seed in any::<u64>()) {
        let (s, p) = draw(i, seed, 5);
        let r = quasi_identity_residuals(&s, &p[0], &p[1], &p[2], &p[3], &p[4]).unwrap();
        prop_assert!(r.max_abs() < 1e-9, "{r:?}");
    }

    #[test]
    fn hyperbolic_poincare_round_trip(c in poincare_coords(3)) {
        let s = Space::hyperbolic(3).unwrap();
        let p = s.poincare(&c).unwrap();
        let back = nonspread::spaces::hyperbolic::to_poincare(match &p { Point::Hyperbolic(h) => h, _ => unreachable!() });
        for (u, v) in c.iter().zip(&back) {
            prop_assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn convex_sets_contain_their_geodesics(k in 0usize..14, seed in any::<u64>(), t in 0.0f64..=1.0) {
        let inst = &fmns_catalog().unwrap()[k];
        let MappingSpec::Projection(set) = &inst.mapping else { return Ok(()) };
        let pts = Sampler::around_origin(&inst.space, inst.radius, seed).unwrap().points(&inst.space, 2, 0).unwrap();
        let a = nonspread::convex::project(&inst.space, set, &pts[0]).unwrap();
        let b = nonspread::convex::project(&inst.space, set, &pts[1]).unwrap();
        let m = inst.space.combine(&a, &b, t).unwrap();
        prop_assert!(membership_slack(&inst.space, set, &m).unwrap() <= 1e-9);
    }

    #[test]
    fn convex_functions_along_geodesics(k in 0usize..14, seed in any::<u64>(), t in 0.0f64..=1.0) {
        let inst = &fmns_catalog().unwrap()[k];
        let MappingSpec::Prox(f) = &inst.mapping else { return Ok(()) };
        let pts = Sampler::around_origin(&inst.space, inst.radius, seed).unwrap().points(&inst.space, 2, 0).unwrap();
        let m = inst.space.combine(&pts[0], &pts[1], t).unwrap();
        let (fa, fb, fm) = (f.eval(&inst.space, &pts[0]).unwrap(), f.eval(&inst.space, &pts[1]).unwrap(), f.eval(&inst.space, &m).unwrap());
        prop_assert!(fm <= (1.0 - t) * fa + t * fb + 1e-8 * (1.0 + fa.abs() + fb.abs()));
    }

    #[test]
    fn projections_and_proxes_are_firm(k in 0usize..14, seed in any::<u64>()) {
        let inst = &fmns_catalog().unwrap()[k];
        let sampler = Sampler::around_origin(&inst.space, inst.radius, seed).unwrap();
        let pairs = sampler.pairs(&inst.space, 16, 0).unwrap();
        let r = classify_pairs(&inst.space, &inst.mapping, &pairs, 16, &sampler, None).unwrap();
        prop_assert!(r.fmns.worst_slack >= -1e-7, "{}: {}", inst.name, r.fmns.worst_slack);
        prop_assert!(r.mns.worst_slack >= -1e-7);
        prop_assert!(r.nonexpansive.worst_slack >= -1e-7);
    }

    #[test]
    fn glued_map_is_nonspreading(seed in any::<u64>(), r in 0.1f64..2.0) {
        let s = Space::euclidean(2).unwrap();
        let inst = glued_instance(s.clone(), s.point(vec![0.3, -0.2]).unwrap(), r).unwrap();
        let sampler = Sampler::around_origin(&s, inst.radius, seed).unwrap();
        let pairs = sampler.pairs(&s, 32, 0).unwrap();
        let rep = classify_pairs(&s, &inst.mapping, &pairs, 32, &sampler, None).unwrap();
        prop_assert!(rep.mns.worst_slack >= -1e-9);
    }

    #[test]
    fn picard_is_fejer_monotone(k in 0usize..14, seed in any::<u64>()) {
        let inst = &fmns_catalog().unwrap()[k];
        let u = inst.fixed_point.as_ref().unwrap();
        let x1 = Sampler::around_origin(&inst.space, inst.radius, seed).unwrap().points(&inst.space, 1, 0).unwrap().remove(0);
        let opts = SolverOptions { max_iter: 200, tol: 1e-10, ..Default::default() };
        let t = picard(&inst.space, &inst.mapping, &x1, Some(u), &opts).unwrap();
        let f = fejer_check(&inst.space, &t, u).unwrap();
        prop_assert!(f.worst_increase <= 1e-9);
        prop_assert!(f.max_excursion <= f.excursion_bound + 1e-9);
        prop_assert!(f.energy.unwrap() <= f.energy_bound + 1e-6);
    }

    #[test]
    fn mann_residuals_decay(k in 0usize..14, seed in any::<u64>(), alpha in 0.1f64..0.9) {
        let inst = &fmns_catalog().unwrap()[k];
        let u = inst.fixed_point.as_ref().unwrap();
        let x1 = Sampler::around_origin(&inst.space, inst.radius, seed).unwrap().points(&inst.space, 1, 0).unwrap().remove(0);
        let opts = SolverOptions { max_iter: 200, tol: 1e-12, ..Default::default() };
        let t = mann(&inst.space, &inst.mapping, &x1, &StepSchedule::Constant(alpha), Some(u), &opts).unwrap();
        for w in t.residuals.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9, "{} -> {}", w[0], w[1]);
        }
        let d0 = inst.space.dist(u, &x1).unwrap();
        let energy: f64 = t.residuals.iter().map(|r| alpha * (1.0 - alpha) * r * r).sum();
        prop_assert!(energy <= d0 * d0 + 1e-6);
    }

    #[test]
    fn nonspreading_orbits_satisfy_the_double_sequence_hypothesis(k in 0usize..14, seed in any::<u64>()) {
        let inst = &fmns_catalog().unwrap()[k];
        let x1 = Sampler::around_origin(&inst.space, inst.radius, seed).unwrap().points(&inst.space, 1, 0).unwrap().remove(0);
        let mut orbit = vec![x1];
        for _ in 0..30 {
            let next = apply(&inst.space, &inst.mapping, orbit.last().unwrap()).unwrap();
            orbit.push(next);
        }
        let r = double_sequence_residual(&inst.space, &orbit).unwrap();
        prop_assert!(r.hypothesis_ok, "{}", r.worst_hypothesis_slack);
        prop_assert!(r.trend_ok);
    }

    #[test]
    fn g_minimizer_is_the_euclidean_weighted_mean(
        pts in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 3), 1..6),
        ws in prop::collection::vec(0.05f64..3.0, 6),
    ) {
        let s = Space::euclidean(3).unwrap();
        let w = &ws[..pts.len()];
        let images: Vec<Point> = pts.iter().map(|p| Point::Euclidean(p.clone())).collect();
        let got = g_minimizer(&s, &images, w).unwrap();
        let total: f64 = w.iter().sum();
        let mean: Vec<f64> = (0..3).map(|j| pts.iter().zip(w).map(|(p, wi)| wi * p[j]).sum::<f64>() / total).collect();
        prop_assert!(s.dist(&got, &Point::Euclidean(mean)).unwrap() < 1e-9);
    }

    #[test]
    fn indicator_prox_is_projection(c in poincare_coords(2), x in poincare_coords(2), radius in 0.1f64..1.5) {
        let s = Space::hyperbolic(2).unwrap();
        let set = ConvexSet::Ball { center: s.poincare(&c).unwrap(), radius };
        let x = s.poincare(&x).unwrap();
        let a = prox(&s, &ConvexFunction::IndicatorOf(set.clone()), &x).unwrap();
        let b = nonspread::convex::project(&s, &set, &x).unwrap();
        prop_assert!(s.dist(&a, &b).unwrap() < 1e-12);
    }
}
