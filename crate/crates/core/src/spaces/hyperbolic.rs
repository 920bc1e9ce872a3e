//! Hyperbolic space ℍⁿ of curvature −1 in the hyperboloid model.
//!
//! A point is stored as `(s_1, …, s_n, t)` with `⟨x,x⟩ = |s|² − t² = −1` and
//! `t > 0`. The time-like coordinate is always recomputed from the spatial
//! part, so the constraint holds up to a few ulps after every operation.
//! Poincaré-ball coordinates are only used at the I/O boundary.

use crate::error::{domain, Result};

/// Lorentzian bilinear form `Σ sᵢ s'ᵢ − t t'`.
pub fn minkowski(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() - 1;
    let spatial: f64 = x[..n].iter().zip(&y[..n]).map(|(a, b)| a * b).sum();
    spatial - x[n] * y[n]
}

/// Lifts a spatial vector onto the upper sheet.
pub fn lift(spatial: &[f64]) -> Vec<f64> {
    let mut v = spatial.to_vec();
    let sq: f64 = spatial.iter().map(|s| s * s).sum();
    v.push((1.0 + sq).sqrt());
    v
}

pub fn renormalize(v: &mut [f64]) {
    let n = v.len() - 1;
    let sq: f64 = v[..n].iter().map(|s| s * s).sum();
    v[n] = (1.0 + sq).sqrt();
}

/// Hyperboloid constraint defect `|⟨x,x⟩ + 1|`.
pub fn constraint_defect(x: &[f64]) -> f64 {
    (minkowski(x, x) + 1.0).abs()
}

pub fn from_poincare(p: &[f64]) -> Result<Vec<f64>> {
    let sq: f64 = p.iter().map(|c| c * c).sum();
    if !(sq < 1.0) || p.iter().any(|c| !c.is_finite()) {
        return domain(format!("Poincaré coordinates must lie in the open unit ball (|p|² = {sq})"));
    }
    let scale = 2.0 / (1.0 - sq);
    let spatial: Vec<f64> = p.iter().map(|c| c * scale).collect();
    Ok(lift(&spatial))
}

pub fn to_poincare(x: &[f64]) -> Vec<f64> {
    let n = x.len() - 1;
    x[..n].iter().map(|s| s / (1.0 + x[n])).collect()
}

/// Squared Minkowski norm of `x − y`, which equals `4 sinh²(d/2)`.
fn chord_sq(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() - 1;
    let spatial: f64 = x[..n].iter().zip(&y[..n]).map(|(a, b)| (a - b) * (a - b)).sum();
    let dt = x[n] - y[n];
    (spatial - dt * dt).max(0.0)
}

pub fn dist(x: &[f64], y: &[f64]) -> f64 {
    let cosh_d = -minkowski(x, y);
    if cosh_d > 2.0 {
        cosh_d.acosh()
    } else {
        2.0 * (chord_sq(x, y).sqrt() / 2.0).asinh()
    }
}

/// Point at parameter `alpha` on the geodesic from `x` to `y`.
pub fn combine(x: &[f64], y: &[f64], alpha: f64) -> Vec<f64> {
    let d = dist(x, y);
    let mut m: Vec<f64> = if d < 1e-12 {
        x.iter().zip(y).map(|(a, b)| a + alpha * (b - a)).collect()
    } else {
        let s = d.sinh();
        let wx = ((1.0 - alpha) * d).sinh() / s;
        let wy = (alpha * d).sinh() / s;
        x.iter().zip(y).map(|(a, b)| wx * a + wy * b).collect()
    };
    renormalize(&mut m);
    m
}

/// Riemannian logarithm: the tangent vector at `y` pointing to `a` with
/// length `d(y, a)`, in ambient coordinates.
pub fn log(y: &[f64], a: &[f64]) -> Vec<f64> {
    let d = dist(y, a);
    if d == 0.0 {
        return vec![0.0; y.len()];
    }
    // a + ⟨y,a⟩y written as (a − y) − ½|a − y|²_M y to avoid cancellation.
    let half_q = 0.5 * chord_sq(y, a);
    let scale = if d < 1e-8 { 1.0 } else { d / d.sinh() };
    y.iter()
        .zip(a)
        .map(|(yi, ai)| scale * ((ai - yi) - half_q * yi))
        .collect()
}

/// Riemannian exponential at `y` of a tangent vector `v`.
pub fn exp(y: &[f64], v: &[f64]) -> Vec<f64> {
    let nv = minkowski(v, v).max(0.0).sqrt();
    if nv == 0.0 {
        return y.to_vec();
    }
    let c = nv.cosh();
    let s = nv.sinh() / nv;
    let mut p: Vec<f64> = y.iter().zip(v).map(|(yi, vi)| c * yi + s * vi).collect();
    renormalize(&mut p);
    p
}

/// Orthogonal projection of an ambient vector onto the tangent space at `y`.
pub fn project_tangent(y: &[f64], w: &[f64]) -> Vec<f64> {
    let c = minkowski(w, y);
    w.iter().zip(y).map(|(wi, yi)| wi + c * yi).collect()
}

/// Norm of a tangent vector.
pub fn tangent_norm(v: &[f64]) -> f64 {
    minkowski(v, v).max(0.0).sqrt()
}

/// Orthonormal basis of the tangent space at `y` (Gram–Schmidt in the
/// Lorentzian form, which is positive definite there).
pub fn tangent_basis(y: &[f64]) -> Vec<Vec<f64>> {
    let n = y.len() - 1;
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n);
    for k in 0..n {
        let mut e = vec![0.0; n + 1];
        e[k] = 1.0;
        let mut v = project_tangent(y, &e);
        for b in &basis {
            let c = minkowski(&v, b);
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= c * bi;
            }
        }
        let nv = tangent_norm(&v);
        for vi in v.iter_mut() {
            *vi /= nv;
        }
        basis.push(v);
    }
    basis
}
