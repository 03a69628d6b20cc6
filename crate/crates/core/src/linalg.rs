//! Dense vectors in Rⁿ and convex-combination utilities.
//!
//! Points of the primal space and dual covectors share the same [`Vector`]
//! type: the pairing between them is the standard inner product [`dot`].

use std::ops::{Deref, Index};

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `|Σλ − 1|` accepted by [`Weights::new`].
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// A finite vector of `f64` coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("vector"));
        }
        Ok(Vector(coords))
    }

    pub fn zeros(dim: usize) -> Self {
        Vector(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn sub(&self, other: &Vector) -> Vector {
        debug_assert_eq!(self.dim(), other.dim());
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn add(&self, other: &Vector) -> Vector {
        debug_assert_eq!(self.dim(), other.dim());
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn scale(&self, factor: f64) -> Vector {
        Vector(self.0.iter().map(|a| a * factor).collect())
    }

    /// `self + factor * other`
    pub fn axpy(&self, factor: f64, other: &Vector) -> Vector {
        debug_assert_eq!(self.dim(), other.dim());
        Vector(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + factor * b)
                .collect(),
        )
    }

    pub fn norm_sq(&self) -> f64 {
        raw_dot(&self.0, &self.0)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Largest coordinate-wise difference.
    pub fn dist_inf(&self, other: &Vector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn dist(&self, other: &Vector) -> f64 {
        self.sub(other).norm()
    }
}

impl TryFrom<Vec<f64>> for Vector {
    type Error = Error;

    fn try_from(coords: Vec<f64>) -> Result<Self> {
        Vector::new(coords)
    }
}

impl From<Vector> for Vec<f64> {
    fn from(v: Vector) -> Self {
        v.0
    }
}

impl Deref for Vector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl Index<usize> for Vector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Builds a vector from a literal slice. Panics on non-finite input, so it
/// is meant for constants and tests.
pub fn vector(coords: &[f64]) -> Vector {
    Vector::new(coords.to_vec()).expect("finite coordinates")
}

pub(crate) fn raw_dot(u: &[f64], v: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (a, b) in u.iter().zip(v) {
        acc += a * b;
    }
    acc
}

/// Inner product, summed in index order.
pub fn dot(u: &Vector, v: &Vector) -> Result<f64> {
    check_dim(u.dim(), v.dim())?;
    Ok(raw_dot(u, v))
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Convex coefficients: non-negative and summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Weights(Vec<f64>);

impl Weights {
    pub fn new(lambda: Vec<f64>) -> Result<Self> {
        if lambda.is_empty() {
            return Err(Error::InvalidWeights("no coefficients".into()));
        }
        if let Some(bad) = lambda.iter().find(|l| !l.is_finite() || **l < 0.0) {
            return Err(Error::InvalidWeights(format!(
                "coefficient {bad} is negative"
            )));
        }
        let sum: f64 = lambda.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidWeights(format!("coefficients sum to {sum}")));
        }
        Ok(Weights(lambda))
    }

    /// Clamps negative round-off to zero and rescales onto the simplex.
    pub fn normalized(mut lambda: Vec<f64>) -> Result<Self> {
        for l in lambda.iter_mut() {
            if !l.is_finite() {
                return Err(Error::InvalidWeights("non-finite coefficient".into()));
            }
            if *l < 0.0 {
                *l = 0.0;
            }
        }
        let sum: f64 = lambda.iter().sum();
        if sum <= 0.0 {
            return Err(Error::InvalidWeights("coefficients sum to zero".into()));
        }
        lambda.iter_mut().for_each(|l| *l /= sum);
        Weights::new(lambda)
    }

    /// The vertex `e_index` of the standard simplex with `len` corners.
    pub fn vertex(len: usize, index: usize) -> Self {
        let mut lambda = vec![0.0; len];
        lambda[index] = 1.0;
        Weights(lambda)
    }

    pub fn uniform(len: usize) -> Self {
        Weights(vec![1.0 / len as f64; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for Weights {
    type Error = Error;

    fn try_from(lambda: Vec<f64>) -> Result<Self> {
        Weights::new(lambda)
    }
}

impl From<Weights> for Vec<f64> {
    fn from(w: Weights) -> Self {
        w.0
    }
}

/// `Σ λ_i p_i`.
pub fn convex_combination(points: &[Vector], w: &Weights) -> Result<Vector> {
    if points.is_empty() {
        return Err(Error::Empty("convex combination of no points"));
    }
    if points.len() != w.len() {
        return Err(Error::InvalidWeights(format!(
            "{} weights for {} points",
            w.len(),
            points.len()
        )));
    }
    let dim = points[0].dim();
    for p in points {
        check_dim(dim, p.dim())?;
    }
    let mut out = vec![0.0; dim];
    for (p, &l) in points.iter().zip(w.as_slice()) {
        for (o, c) in out.iter_mut().zip(p.iter()) {
            *o += l * c;
        }
    }
    // identical points must map back to themselves bit-for-bit
    if points.iter().all(|p| p == &points[0]) {
        return Ok(points[0].clone());
    }
    Ok(Vector(out))
}

/// Uniform sample from the standard simplex with `k` corners
/// (Dirichlet(1, …, 1) via normalized exponential variates).
pub fn sample_simplex_weights<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Result<Weights> {
    if k == 0 {
        return Err(Error::InvalidWeights("k must be at least 1".into()));
    }
    if k == 1 {
        return Ok(Weights(vec![1.0]));
    }
    loop {
        let draws: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(Exp1)).collect();
        let sum: f64 = draws.iter().sum();
        if sum > 0.0 {
            return Weights::normalized(draws);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dot_examples() {
        assert_eq!(dot(&vector(&[1., 0.]), &vector(&[0., 1.])).unwrap(), 0.0);
        assert_eq!(dot(&vector(&[2., 3.]), &vector(&[2., 3.])).unwrap(), 13.0);
        assert_eq!(
            dot(&vector(&[1., 2., 3.]), &vector(&[4., 5., 6.])).unwrap(),
            32.0
        );
        assert_eq!(
            dot(&vector(&[1.]), &vector(&[1., 2.])),
            Err(Error::DimensionMismatch {
                expected: 1,
                found: 2
            })
        );
    }

    #[test]
    fn convex_combination_examples() {
        let mid = convex_combination(
            &[vector(&[0.]), vector(&[1.])],
            &Weights::new(vec![0.5, 0.5]).unwrap(),
        )
        .unwrap();
        assert_eq!(mid, vector(&[0.5]));

        let single = convex_combination(&[vector(&[1., 1.])], &Weights::new(vec![1.]).unwrap());
        assert_eq!(single.unwrap(), vector(&[1., 1.]));

        let third = 1.0 / 3.0;
        let centroid = convex_combination(
            &[vector(&[0., 0.]), vector(&[3., 0.]), vector(&[0., 3.])],
            &Weights::normalized(vec![third; 3]).unwrap(),
        )
        .unwrap();
        assert!(centroid.dist_inf(&vector(&[1., 1.])) < 1e-15);
    }

    #[test]
    fn convex_combination_errors() {
        let w = Weights::uniform(2);
        assert!(convex_combination(&[vector(&[0.])], &w).is_err());
        assert!(convex_combination(&[], &w).is_err());
        assert!(convex_combination(&[vector(&[0.]), vector(&[0., 1.])], &w).is_err());
        assert!(Weights::new(vec![0.5, 0.6]).is_err());
        assert!(Weights::new(vec![1.5, -0.5]).is_err());
        assert!(Vector::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn simplex_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        assert_eq!(
            sample_simplex_weights(1, &mut rng).unwrap().as_slice(),
            &[1.0]
        );
        assert!(sample_simplex_weights(0, &mut rng).is_err());
        for _ in 0..100 {
            let w = sample_simplex_weights(2, &mut rng).unwrap();
            let t = w.as_slice()[0];
            assert!((0.0..=1.0).contains(&t));
            assert!((w.as_slice()[1] - (1.0 - t)).abs() < 1e-12);
        }
        let draws = 10_000;
        let mut mean = [0.0; 3];
        for _ in 0..draws {
            let w = sample_simplex_weights(3, &mut rng).unwrap();
            for (m, l) in mean.iter_mut().zip(w.as_slice()) {
                *m += l / draws as f64;
            }
        }
        for m in mean {
            assert!((m - 1.0 / 3.0).abs() < 0.02, "mean {m}");
        }
    }
}
