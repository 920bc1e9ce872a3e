//! Seeded point and pair sources over a closed geodesic ball.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{domain, Result};
use crate::geometry::Point;
use crate::spaces::Space;

/// Uniform-in-radius samples from `B̄_radius(center)`, fully determined by
/// `seed` and the stream index passed to each draw.
#[derive(Debug, Clone, PartialEq)]
pub struct Sampler {
    pub center: Point,
    pub radius: f64,
    pub seed: u64,
}

impl Sampler {
    pub fn new(space: &Space, center: Point, radius: f64, seed: u64) -> Result<Self> {
        space.check(&center)?;
        if !(radius.is_finite() && radius > 0.0) {
            return domain(format!("sampling radius must be positive and finite, got {radius}"));
        }
        Ok(Self { center, radius, seed })
    }

    /// Ball around the space's origin.
    pub fn around_origin(space: &Space, radius: f64, seed: u64) -> Result<Self> {
        Self::new(space, space.origin(), radius, seed)
    }

    /// Independent generator for one consumer; distinct streams never overlap.
    pub fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }

    pub fn points(&self, space: &Space, n: usize, stream: u64) -> Result<Vec<Point>> {
        let mut rng = self.rng(stream);
        (0..n).map(|_| space.sample_ball(&mut rng, &self.center, self.radius)).collect()
    }

    pub fn pairs(&self, space: &Space, n: usize, stream: u64) -> Result<Vec<(Point, Point)>> {
        let mut rng = self.rng(stream);
        (0..n)
            .map(|_| {
                let x = space.sample_ball(&mut rng, &self.center, self.radius)?;
                let y = space.sample_ball(&mut rng, &self.center, self.radius)?;
                Ok((x, y))
            })
            .collect()
    }

    /// Groups of `k` points, drawn in sequence.
    pub fn tuples(&self, space: &Space, n: usize, k: usize, stream: u64) -> Result<Vec<Vec<Point>>> {
        let mut rng = self.rng(stream);
        (0..n)
            .map(|_| (0..k).map(|_| space.sample_ball(&mut rng, &self.center, self.radius)).collect())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_points() {
        let s = Space::hyperbolic(2).unwrap();
        let a = Sampler::around_origin(&s, 2.0, 7).unwrap();
        assert_eq!(a.points(&s, 50, 1).unwrap(), a.points(&s, 50, 1).unwrap());
        assert_ne!(a.points(&s, 5, 1).unwrap(), a.points(&s, 5, 2).unwrap());
    }

    #[test]
    fn samples_stay_in_the_ball() {
        for s in [
            Space::euclidean(3).unwrap(),
            Space::hyperbolic(3).unwrap(),
            Space::tree_from_json(r#"{"vertices": 3, "edges": [[0,1,2.0],[1,2,0.5]]}"#).unwrap(),
        ] {
            let sm = Sampler::around_origin(&s, 1.5, 3).unwrap();
            for p in sm.points(&s, 500, 0).unwrap() {
                s.check(&p).unwrap();
                assert!(s.dist(&sm.center, &p).unwrap() <= 1.5 + 1e-12);
            }
        }
    }

    #[test]
    fn rejects_bad_radius() {
        let s = Space::euclidean(2).unwrap();
        assert!(Sampler::around_origin(&s, 0.0, 1).is_err());
        assert!(Sampler::around_origin(&s, f64::NAN, 1).is_err());
    }
}
