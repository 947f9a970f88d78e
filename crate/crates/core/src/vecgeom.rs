//! Geometry in `R^d`: signed distances, projections onto hyperplanes, the
//! rotation frame used by the learner, and rotation inside a 2-plane.
//!
//! Vectors are plain `f64` slices. Hyperplanes are `{x : w·x = θ}` with a unit
//! normal `w`.

use crate::error::{check_dim, Error, Result};

/// Absolute tolerance used when checking that a frame is orthonormal.
pub const ORTHONORMAL_TOL: f64 = 1e-6;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `a + s·b`
pub fn axpy(a: &[f64], s: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

/// Normalizes `a` in place. Returns the previous norm.
pub fn normalize(a: &mut [f64]) -> f64 {
    let n = norm(a);
    if n > 0.0 {
        a.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// Degeneracy threshold: `1e-9 · max(1, largest input norm)`.
fn delta_min(inputs: &[&[f64]]) -> f64 {
    let scale = inputs.iter().map(|v| norm(v)).fold(1.0_f64, f64::max);
    1e-9 * scale
}

/// `w·x − θ`, positive on the side `w` points to.
pub fn signed_distance(x: &[f64], w: &[f64], theta: f64) -> Result<f64> {
    check_dim(w.len(), x.len())?;
    Ok(dot(w, x) - theta)
}

/// Orthogonal projection `E = x + (θ − w·x)·w` of `x` onto the hyperplane.
pub fn project_onto_plane(x: &[f64], w: &[f64], theta: f64) -> Result<Vec<f64>> {
    check_dim(w.len(), x.len())?;
    Ok(axpy(x, theta - dot(w, x), w))
}

/// Unit vector from `x` toward its projection `e`, i.e. `(E − x)/‖E − x‖`.
///
/// This equals `−sign(w·x − θ)·w`.
pub fn toward_plane_unit(x: &[f64], e: &[f64]) -> Result<Vec<f64>> {
    check_dim(x.len(), e.len())?;
    unit_difference(e, x, "sample lies on the hyperplane")
}

/// Point where the segment through the two side means crosses the hyperplane.
pub fn intersection_point(mu1: &[f64], mu2: &[f64], w: &[f64], theta: f64) -> Result<Vec<f64>> {
    check_dim(w.len(), mu1.len())?;
    check_dim(w.len(), mu2.len())?;
    let span = sub(mu2, mu1);
    let denom = dot(w, &span);
    if denom.abs() <= delta_min(&[mu1, mu2, w]) {
        return Err(Error::DegenerateFrame("mean segment is parallel to the hyperplane"));
    }
    let t = (theta - dot(w, mu1)) / denom;
    Ok(axpy(mu1, t, &span))
}

/// Unit vector `(E − C)/‖E − C‖`. Both points lie on the hyperplane, so the
/// result lies in it too.
pub fn in_plane_unit(e: &[f64], c: &[f64]) -> Result<Vec<f64>> {
    check_dim(e.len(), c.len())?;
    unit_difference(e, c, "projection coincides with the rotation point")
}

fn unit_difference(to: &[f64], from: &[f64], what: &'static str) -> Result<Vec<f64>> {
    let mut d = sub(to, from);
    let len = norm(&d);
    if len <= delta_min(&[to, from]) {
        return Err(Error::DegenerateFrame(what));
    }
    d.iter_mut().for_each(|x| *x /= len);
    Ok(d)
}

/// Rotates `p` by angle `alpha` inside the 2-plane spanned by the orthonormal
/// pair `(u, v)`, with positive angles turning `u` toward `v`:
///
/// `p + [u v]·((cos α − 1, −sin α), (sin α, cos α − 1))·(p·u, p·v)ᵀ`
///
/// Components of `p` orthogonal to `span{u, v}` are left untouched.
pub fn rotate_in_plane(p: &[f64], u: &[f64], v: &[f64], alpha: f64) -> Result<Vec<f64>> {
    check_dim(p.len(), u.len())?;
    check_dim(p.len(), v.len())?;
    let (u_norm, v_norm, uv) = (norm(u), norm(v), dot(u, v));
    if (u_norm - 1.0).abs() > ORTHONORMAL_TOL
        || (v_norm - 1.0).abs() > ORTHONORMAL_TOL
        || uv.abs() > ORTHONORMAL_TOL
    {
        return Err(Error::FrameNotOrthonormal {
            u_norm,
            v_norm,
            dot: uv,
        });
    }
    let a = dot(p, u);
    let b = dot(p, v);
    let (sin, cos) = alpha.sin_cos();
    let cu = a * (cos - 1.0) - b * sin;
    let cv = a * sin + b * (cos - 1.0);
    Ok(p
        .iter()
        .zip(u.iter().zip(v))
        .map(|(pi, (ui, vi))| pi + cu * ui + cv * vi)
        .collect())
}

/// The rotation frame for one sample: the unit normal toward the plane `u`,
/// the in-plane direction `v`, and the rotation point `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationFrame {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub c: Vec<f64>,
}

impl RotationFrame {
    /// Builds the frame for sample `x` against plane `(w, θ)` using the two
    /// side means. Fails with [`Error::DegenerateFrame`] whenever one of the
    /// constructing differences vanishes.
    pub fn build(x: &[f64], w: &[f64], theta: f64, mu1: &[f64], mu2: &[f64]) -> Result<Self> {
        let c = intersection_point(mu1, mu2, w, theta)?;
        let e = project_onto_plane(x, w, theta)?;
        let u = toward_plane_unit(x, &e)?;
        let v = in_plane_unit(&e, &c)?;
        Ok(Self { u, v, c })
    }
}
