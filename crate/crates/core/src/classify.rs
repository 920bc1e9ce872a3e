//! Monte-Carlo classification of a mapping against the metrically
//! nonspreading, firmly metrically nonspreading, nonexpansive and
//! quasinonexpansive inequalities.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::geometry::{quasi_inner, Pair, Point};
use crate::mappings::{apply, Glued, MappingSpec};
use crate::sampling::Sampler;
use crate::spaces::Space;

/// A property passes iff its worst slack is at least this.
pub const CLASSIFY_TOLERANCE: f64 = -1e-7;

const PAIR_STREAM: u64 = 0x636c_6173;
const ADVERSARIAL_STREAM: u64 = 0x6164_7673;
const ADVERSARIAL_DIRECTIONS: usize = 32;

#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    /// Position in the evaluated sample list (random pairs first).
    pub index: usize,
    pub adversarial: bool,
    pub x: Point,
    pub y: Point,
    pub tx: Point,
    pub ty: Point,
    pub slack: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PropertyResult {
    pub worst_slack: f64,
    pub pass: bool,
    pub witness: Option<Witness>,
}

/// Pointwise check of `d(Tx, Tc) ≤ e + √(2e² + d(Tc, x)²)`, `e = d(c, Tc)`,
/// which every metrically nonspreading map satisfies around a reference `c`.
#[derive(Debug, Clone, Serialize)]
pub struct ImageBound {
    pub reference_displacement: f64,
    pub sample_radius: f64,
    /// `e + √(2e² + (e + R)²)`: valid for every `x` in the sampled ball.
    pub bound: f64,
    pub max_image_distance: f64,
    pub worst_pointwise_slack: f64,
    pub image_spread: f64,
    pub within_bound: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassificationReport {
    pub mapping: String,
    pub n_samples: usize,
    pub n_adversarial: usize,
    pub tolerance: f64,
    pub mns: PropertyResult,
    pub fmns: PropertyResult,
    pub nonexpansive: PropertyResult,
    /// Needs a known fixed point.
    pub quasi: Option<PropertyResult>,
    /// `d(u,x)² − d(u,Tx)² − d(Tx,x)²`, needs a known fixed point.
    pub fmns_quasi: Option<PropertyResult>,
    /// Largest `|(⟨→(Tx)(Ty), →xy⟩ − d(Tx,Ty)²) − ½·fmns slack|`.
    pub bracket_residual: f64,
    /// Samples where the bracket form and the definition disagree on the verdict.
    pub bracket_disagreements: usize,
    /// Largest residual of the expansion
    /// `d(Tx,y)² + d(Ty,x)² − 2d(Tx,Ty)² = d(Ty,y)² + 2⟨→(Tx)(Ty),→(Ty)y⟩ + d(Ty,x)² − d(Tx,Ty)²`.
    pub expansion_residual: f64,
    pub image: ImageBound,
}

impl ClassificationReport {
    pub fn verdicts(&self) -> Verdicts {
        Verdicts {
            mns: self.mns.pass,
            fmns: self.fmns.pass,
            nonexpansive: self.nonexpansive.pass,
            quasi: self.quasi.as_ref().map(|q| q.pass),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Verdicts {
    pub mns: bool,
    pub fmns: bool,
    pub nonexpansive: bool,
    pub quasi: Option<bool>,
}

struct Eval {
    tx: Point,
    ty: Point,
    mns: f64,
    fmns: f64,
    nonexp: f64,
    bracket: f64,
    expansion: f64,
    quasi: Option<f64>,
    fmns_quasi: Option<f64>,
    image_tx: f64,
    image_slack: f64,
    spread: f64,
}

fn evaluate(
    space: &Space,
    mapping: &MappingSpec,
    x: &Point,
    y: &Point,
    u: Option<&Point>,
    reference: (&Point, f64),
) -> Result<Eval> {
    let tx = apply(space, mapping, x)?;
    let ty = apply(space, mapping, y)?;
    let d = |a: &Point, b: &Point| space.dist(a, b);
    let dtt = d(&tx, &ty)?;
    let dtx_y = d(&tx, y)?;
    let dty_x = d(&ty, x)?;
    let dtx_x = d(&tx, x)?;
    let dty_y = d(&ty, y)?;

    let mns = dtx_y * dtx_y + dty_x * dty_x - 2.0 * dtt * dtt;
    let fmns = mns - dtx_x * dtx_x - dty_y * dty_y;
    let nonexp = d(x, y)? - dtt;
    let bracket = quasi_inner(space, Pair::new(&tx, &ty), Pair::new(x, y))? - dtt * dtt;
    let expanded = dty_y * dty_y + 2.0 * quasi_inner(space, Pair::new(&tx, &ty), Pair::new(&ty, y))?
        + dty_x * dty_x
        - dtt * dtt;
    let expansion = mns - expanded;

    let (quasi, fmns_quasi) = match u {
        Some(u) => {
            let (ux, uy, utx, uty) = (d(u, x)?, d(u, y)?, d(u, &tx)?, d(u, &ty)?);
            let q = (ux - utx).min(uy - uty);
            let fq = (ux * ux - utx * utx - dtx_x * dtx_x).min(uy * uy - uty * uty - dty_y * dty_y);
            (Some(q), Some(fq))
        }
        None => (None, None),
    };

    let (tc, e) = reference;
    let mut image_tx = 0.0_f64;
    let mut image_slack = f64::INFINITY;
    for (p, tp) in [(x, &tx), (y, &ty)] {
        let big_d = d(tp, tc)?;
        let g = d(tc, p)?;
        image_tx = image_tx.max(big_d);
        image_slack = image_slack.min(e + (2.0 * e * e + g * g).sqrt() - big_d);
    }

    Ok(Eval { tx, ty, mns, fmns, nonexp, bracket, expansion, quasi, fmns_quasi, image_tx, image_slack, spread: dtt })
}

/// Pairs `(x, y)` on a common ray from `a` with `d(a,x) ≤ δ < d(a,y)`, the
/// loci where the glued mapping switches branch.
pub fn straddling_pairs(space: &Space, glued: &Glued, sampler: &Sampler) -> Result<Vec<(Point, Point)>> {
    let a = glued.center();
    let delta = glued.delta();
    let mut directions = sampler.points(space, ADVERSARIAL_DIRECTIONS, ADVERSARIAL_STREAM)?;
    if let Space::Tree(t) = space {
        directions.extend((0..t.n_vertices()).filter_map(|v| space.vertex(v).ok()));
    }
    let mut out = Vec::new();
    for z in &directions {
        let dz = space.dist(a, z)?;
        if dz < 1e-9 {
            continue;
        }
        for eps in [1e-3, 1e-6, 1e-9] {
            let step = eps * delta;
            let (Some(x), Some(y)) = (along_ray(space, a, z, dz, delta - step)?, along_ray(space, a, z, dz, delta + step)?)
            else {
                continue;
            };
            out.push((x, y));
            if let Some(edge) = along_ray(space, a, z, dz, delta)? {
                if let Some(y) = along_ray(space, a, z, dz, delta + step)? {
                    out.push((edge, y));
                }
            }
        }
    }
    Ok(out)
}

/// The point at distance `t` from `a` on the geodesic ray through `z`
/// (`dz = d(a, z)`); in a tree only points on `[a, z]` are available.
fn along_ray(space: &Space, a: &Point, z: &Point, dz: f64, t: f64) -> Result<Option<Point>> {
    match space {
        Space::Tree(_) => {
            if t <= dz {
                Ok(Some(space.combine(a, z, t / dz)?))
            } else {
                Ok(None)
            }
        }
        _ => {
            let v = space.log(a, z)?;
            let n = match a {
                Point::Hyperbolic(_) => crate::spaces::hyperbolic::tangent_norm(&v),
                _ => crate::spaces::euclidean::norm(&v),
            };
            let scaled: Vec<f64> = v.iter().map(|c| c * t / n).collect();
            let mut p = space.exp(a, &scaled)?;
            if let Point::Hyperbolic(h) = &mut p {
                crate::spaces::hyperbolic::renormalize(h);
            }
            Ok(Some(p))
        }
    }
}

fn worst<'a>(
    evals: &'a [Eval],
    pairs: &'a [(Point, Point)],
    n_random: usize,
    slack: impl Fn(&Eval) -> Option<f64>,
) -> Option<PropertyResult> {
    let mut best: Option<(usize, f64)> = None;
    for (i, e) in evals.iter().enumerate() {
        let s = slack(e)?;
        // strict comparison: ties keep the earliest sample
        if best.is_none_or(|(_, b)| s < b) {
            best = Some((i, s));
        }
    }
    let (i, s) = best?;
    Some(PropertyResult {
        worst_slack: s,
        pass: s >= CLASSIFY_TOLERANCE,
        witness: Some(Witness {
            index: i,
            adversarial: i >= n_random,
            x: pairs[i].0.clone(),
            y: pairs[i].1.clone(),
            tx: evals[i].tx.clone(),
            ty: evals[i].ty.clone(),
            slack: s,
        }),
    })
}

/// Classifies `mapping` on `n` random pairs drawn from `sampler`, plus
/// branch-straddling pairs for glued mappings.
pub fn classify(
    space: &Space,
    mapping: &MappingSpec,
    sampler: &Sampler,
    n: usize,
    fixed_point: Option<&Point>,
) -> Result<ClassificationReport> {
    if n == 0 {
        return crate::error::domain("classification needs at least one sample pair");
    }
    mapping.validate(space)?;
    if let Some(u) = fixed_point {
        space.check(u)?;
    }
    let mut pairs = sampler.pairs(space, n, PAIR_STREAM)?;
    if let MappingSpec::Glued(g) = mapping {
        pairs.extend(straddling_pairs(space, g, sampler)?);
    }
    classify_pairs(space, mapping, &pairs, n, sampler, fixed_point)
}

/// Classification over explicit pairs; the first `n_random` are counted as
/// random samples and the rest as adversarial.
pub fn classify_pairs(
    space: &Space,
    mapping: &MappingSpec,
    pairs: &[(Point, Point)],
    n_random: usize,
    sampler: &Sampler,
    fixed_point: Option<&Point>,
) -> Result<ClassificationReport> {
    let c = &sampler.center;
    let tc = apply(space, mapping, c)?;
    let e = space.dist(c, &tc)?;
    let evals: Vec<Eval> = pairs
        .par_iter()
        .map(|(x, y)| evaluate(space, mapping, x, y, fixed_point, (&tc, e)))
        .collect::<Result<Vec<_>>>()?;

    let mns = worst(&evals, pairs, n_random, |e| Some(e.mns)).expect("nonempty");
    let fmns = worst(&evals, pairs, n_random, |e| Some(e.fmns)).expect("nonempty");
    let nonexpansive = worst(&evals, pairs, n_random, |e| Some(e.nonexp)).expect("nonempty");
    let quasi = worst(&evals, pairs, n_random, |e| e.quasi);
    let fmns_quasi = worst(&evals, pairs, n_random, |e| e.fmns_quasi);

    let mut bracket_residual = 0.0_f64;
    let mut bracket_disagreements = 0;
    let mut expansion_residual = 0.0_f64;
    let mut max_image_distance = 0.0_f64;
    let mut worst_pointwise_slack = f64::INFINITY;
    let mut image_spread = 0.0_f64;
    for ev in &evals {
        bracket_residual = bracket_residual.max((ev.bracket - 0.5 * ev.fmns).abs());
        if (ev.fmns >= CLASSIFY_TOLERANCE) != (ev.bracket >= 0.5 * CLASSIFY_TOLERANCE) {
            bracket_disagreements += 1;
        }
        expansion_residual = expansion_residual.max(ev.expansion.abs());
        max_image_distance = max_image_distance.max(ev.image_tx);
        worst_pointwise_slack = worst_pointwise_slack.min(ev.image_slack);
        image_spread = image_spread.max(ev.spread);
    }
    let radius = sampler.radius;
    let bound = e + (2.0 * e * e + (e + radius) * (e + radius)).sqrt();
    let image = ImageBound {
        reference_displacement: e,
        sample_radius: radius,
        bound,
        max_image_distance,
        worst_pointwise_slack,
        image_spread,
        within_bound: max_image_distance <= bound * (1.0 + 1e-12) && worst_pointwise_slack >= -1e-9,
    };

    Ok(ClassificationReport {
        mapping: mapping.name().to_string(),
        n_samples: n_random,
        n_adversarial: pairs.len() - n_random,
        tolerance: CLASSIFY_TOLERANCE,
        mns,
        fmns,
        nonexpansive,
        quasi,
        fmns_quasi,
        bracket_residual,
        bracket_disagreements,
        expansion_residual,
        image,
    })
}
