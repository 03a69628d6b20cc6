//! Wolfe's minimum-norm-point algorithm over a polytope known only through a
//! linear minimization oracle.
//!
//! The iterate is always the affine minimizer of a "corral" of oracle points
//! with positive coefficients. The loop stops once the oracle gap certifies
//! the distance to within the requested accuracy: for the shifted iterate `x`
//! and oracle answer `q`, every point `p` of the set satisfies
//! `‖p‖ ≥ ⟨x, q⟩ / ‖x‖`, so `‖x‖ − dist ≤ ⟨x, x − q⟩ / ‖x‖`.

use crate::error::{Error, Result};
use crate::linalg::{raw_dot, Vector};
use crate::polyhedra::{minimize_linear, HalfSpace, Projection, VPolytope};

const MAX_MAJOR: usize = 10_000;
const COEFF_EPS: f64 = 1e-15;

pub(crate) trait LinearOracle {
    /// A point of the set minimizing `⟨direction, ·⟩`.
    fn argmin(&self, direction: &[f64]) -> Result<Vector>;
}

/// Oracle over the convex hull of explicit points.
pub(crate) struct PointOracle<'a> {
    points: &'a [Vector],
}

impl<'a> PointOracle<'a> {
    pub fn new(points: &'a [Vector]) -> Self {
        PointOracle { points }
    }
}

impl LinearOracle for PointOracle<'_> {
    fn argmin(&self, direction: &[f64]) -> Result<Vector> {
        self.points
            .iter()
            .min_by(|a, b| raw_dot(direction, a).total_cmp(&raw_dot(direction, b)))
            .cloned()
            .ok_or(Error::EmptyTarget)
    }
}

/// Oracle over `hull ∩ cons`, answered by LP.
pub(crate) struct LpOracle<'a> {
    hull: &'a VPolytope,
    cons: &'a [HalfSpace],
}

impl<'a> LpOracle<'a> {
    pub fn new(hull: &'a VPolytope, cons: &'a [HalfSpace]) -> Self {
        LpOracle { hull, cons }
    }
}

impl LinearOracle for LpOracle<'_> {
    fn argmin(&self, direction: &[f64]) -> Result<Vector> {
        minimize_linear(self.hull, self.cons, direction)
    }
}

/// Projection of `anchor` onto the set behind `oracle`, with the returned
/// distance within `accuracy` of the true one.
pub(crate) fn min_norm_point(
    oracle: &dyn LinearOracle,
    anchor: &Vector,
    accuracy: f64,
) -> Result<Projection> {
    // work with the translated set P − anchor
    let shifted = |d: &[f64]| -> Result<Vector> { Ok(oracle.argmin(d)?.sub(anchor)) };

    let first = shifted(&anchor.scale(-1.0))?;
    let mut corral = vec![first.clone()];
    let mut coeffs = vec![1.0];
    let mut x = first;

    let mut converged = false;
    for _ in 0..MAX_MAJOR {
        let norm = x.norm();
        if norm <= 0.5 * accuracy {
            converged = true;
            break;
        }
        let q = shifted(&x)?;
        let gap = raw_dot(&x, &x.sub(&q));
        if gap <= 0.5 * accuracy * norm {
            converged = true;
            break;
        }
        let scale = 1.0 + q.max_abs();
        if corral.iter().any(|s| s.dist_inf(&q) <= 1e-14 * scale) {
            // no new direction available: x is optimal up to round-off
            converged = true;
            break;
        }
        corral.push(q);
        coeffs.push(0.0);

        loop {
            let Some(alpha) = affine_minimizer(&corral) else {
                // the new point is (numerically) in the affine hull of the corral
                corral.pop();
                coeffs.pop();
                converged = true;
                break;
            };
            if alpha.iter().all(|a| *a > COEFF_EPS) {
                coeffs = alpha;
                x = combine(&corral, &coeffs);
                break;
            }
            // step from the current coefficients towards alpha until one hits zero
            let theta = coeffs
                .iter()
                .zip(&alpha)
                .filter(|(_, a)| **a <= COEFF_EPS)
                .map(|(c, a)| if *c - *a > 0.0 { c / (c - a) } else { 0.0 })
                .fold(1.0f64, f64::min);
            let mut next: Vec<f64> = coeffs
                .iter()
                .zip(&alpha)
                .map(|(c, a)| theta * a + (1.0 - theta) * c)
                .collect();
            let drop = next
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .map(|(i, _)| i)
                .expect("corral is non-empty");
            next[drop] = 0.0;
            let keep: Vec<bool> = next.iter().map(|c| *c > COEFF_EPS).collect();
            let mut idx = 0;
            corral.retain(|_| {
                idx += 1;
                keep[idx - 1]
            });
            next.retain(|c| *c > COEFF_EPS);
            let total: f64 = next.iter().sum();
            next.iter_mut().for_each(|c| *c /= total);
            coeffs = next;
            x = combine(&corral, &coeffs);
        }
        if converged {
            break;
        }
    }
    if !converged {
        return Err(Error::ProjectionStalled {
            iterations: MAX_MAJOR,
        });
    }
    Ok(Projection {
        distance: x.norm(),
        nearest: x.add(anchor),
    })
}

fn combine(points: &[Vector], coeffs: &[f64]) -> Vector {
    let mut out = vec![0.0; points[0].dim()];
    for (p, c) in points.iter().zip(coeffs) {
        for (o, v) in out.iter_mut().zip(p.iter()) {
            *o += c * v;
        }
    }
    Vector::new(out).expect("finite combination")
}

/// Coefficients `α` with `Σα = 1` minimizing `‖Σ α_i s_i‖`, or `None` when
/// the points are affinely dependent.
fn affine_minimizer(points: &[Vector]) -> Option<Vec<f64>> {
    let k = points.len() - 1;
    if k == 0 {
        return Some(vec![1.0]);
    }
    let base = &points[0];
    let scale = points.iter().map(|p| p.max_abs()).fold(1.0, f64::max);
    // modified Gram-Schmidt on the difference vectors
    let mut q: Vec<Vector> = points[1..].iter().map(|p| p.sub(base)).collect();
    let mut r = vec![vec![0.0; k]; k];
    for j in 0..k {
        for i in 0..j {
            let rij = raw_dot(&q[i], &q[j]);
            r[i][j] = rij;
            q[j] = q[j].axpy(-rij, &q[i]);
        }
        let norm = q[j].norm();
        if norm <= 1e-12 * scale {
            return None;
        }
        r[j][j] = norm;
        q[j] = q[j].scale(1.0 / norm);
    }
    // least squares B β = −base, i.e. R β = −Qᵀ base
    let rhs: Vec<f64> = q.iter().map(|qi| -raw_dot(qi, base)).collect();
    let mut beta = vec![0.0; k];
    for i in (0..k).rev() {
        let mut acc = rhs[i];
        for j in i + 1..k {
            acc -= r[i][j] * beta[j];
        }
        beta[i] = acc / r[i][i];
    }
    let mut alpha = Vec::with_capacity(k + 1);
    alpha.push(1.0 - beta.iter().sum::<f64>());
    alpha.extend(beta);
    Some(alpha)
}
