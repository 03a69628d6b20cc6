//! Seeded generators of finite operator graphs.
//!
//! All randomness comes from ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with
//! `seed_from_u64`, so a [`GenSpec`] reproduces the same graph bit for bit on
//! every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{raw_dot, Vector};
use crate::operator::{is_monotone, is_quasimonotone, OperatorGraph};
use crate::polyhedra::Tolerance;

/// The generator PRNG.
pub type GenRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> GenRng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `x ↦ Mx + c` with `M + Mᵀ ⪰ 0`.
    PsdLinear,
    /// Gradients of `‖x‖⁴ + ½xᵀPx + qᵀx`, `P ⪰ 0`.
    ConvexGradient,
    /// `t ↦ 3t²` along a random line: quasimonotone, not monotone.
    CubicLike,
    /// A psd-linear graph with uniform noise on the duals.
    Perturbed,
}

impl Family {
    pub const ALL: [Family; 4] = [
        Family::PsdLinear,
        Family::ConvexGradient,
        Family::CubicLike,
        Family::Perturbed,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Family::PsdLinear => "psd_linear",
            Family::ConvexGradient => "convex_gradient",
            Family::CubicLike => "cubic_like",
            Family::Perturbed => "perturbed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub dim: usize,
    pub num_points: usize,
    pub family: Family,
    #[serde(default)]
    pub magnitude: f64,
    pub seed: u64,
}

impl GenSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidSpec("dim must be at least 1".into()));
        }
        if self.num_points == 0 {
            return Err(Error::InvalidSpec("num_points must be at least 1".into()));
        }
        if !(self.magnitude.is_finite() && self.magnitude >= 0.0) {
            return Err(Error::InvalidSpec(format!(
                "magnitude must be finite and non-negative, got {}",
                self.magnitude
            )));
        }
        Ok(())
    }

    fn expect_family(&self, family: Family) -> Result<()> {
        self.validate()?;
        if self.family != family {
            return Err(Error::InvalidSpec(format!(
                "expected family {}, got {}",
                family.name(),
                self.family.name()
            )));
        }
        Ok(())
    }
}

/// Square matrix stored by rows.
pub type Matrix = Vec<Vec<f64>>;

fn mat_vec(m: &Matrix, x: &[f64]) -> Vec<f64> {
    m.iter().map(|row| raw_dot(row, x)).collect()
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Random orthogonal matrix: Gram-Schmidt QR of a Gaussian matrix, which
/// leaves `R` with a positive diagonal.
pub fn random_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Matrix {
    loop {
        let mut cols: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| gaussian(rng)).collect())
            .collect();
        let mut ok = true;
        for j in 0..n {
            for i in 0..j {
                let r = raw_dot(&cols[i], &cols[j]);
                let qi = cols[i].clone();
                cols[j].iter_mut().zip(&qi).for_each(|(c, q)| *c -= r * q);
            }
            let norm = raw_dot(&cols[j], &cols[j]).sqrt();
            if norm < 1e-8 {
                ok = false;
                break;
            }
            cols[j].iter_mut().for_each(|c| *c /= norm);
        }
        if ok {
            // rows of the result are the orthonormal columns
            return (0..n)
                .map(|i| (0..n).map(|j| cols[j][i]).collect())
                .collect();
        }
    }
}

/// `QᵀDQ` for diagonal `d`.
pub fn congruence(q: &Matrix, d: &[f64]) -> Matrix {
    let n = d.len();
    let mut out = vec![vec![0.0; n]; n];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = (0..n).map(|k| q[k][i] * d[k] * q[k][j]).sum();
        }
    }
    out
}

/// Random skew-symmetric matrix with standard normal upper triangle.
#[allow(clippy::needless_range_loop)]
pub fn random_skew<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Matrix {
    let mut s = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = gaussian(rng);
            s[i][j] = v;
            s[j][i] = -v;
        }
    }
    s
}

/// Samples of the affine map `x ↦ Mx + c`.
pub fn sample_affine(m: &Matrix, c: &[f64], points: &[Vector]) -> Result<OperatorGraph> {
    let n = c.len();
    let samples = points
        .iter()
        .map(|p| {
            let mut y = mat_vec(m, p);
            y.iter_mut().zip(c).for_each(|(a, b)| *a += b);
            Ok((p.clone(), Vector::new(y)?))
        })
        .collect::<Result<Vec<_>>>()?;
    OperatorGraph::from_samples(n, samples)
}

/// Samples of `∇f` for `f(x) = w‖x‖⁴ + ½xᵀPx + qᵀx`, i.e.
/// `4w‖x‖²x + Px + q`.
pub fn sample_convex_gradient(
    quartic: f64,
    p: &Matrix,
    q: &[f64],
    points: &[Vector],
) -> Result<OperatorGraph> {
    let n = q.len();
    let samples = points
        .iter()
        .map(|x| {
            let r2 = x.norm_sq();
            let px = mat_vec(p, x);
            let g: Vec<f64> = (0..n)
                .map(|i| 4.0 * quartic * r2 * x[i] + px[i] + q[i])
                .collect();
            Ok((x.clone(), Vector::new(g)?))
        })
        .collect::<Result<Vec<_>>>()?;
    OperatorGraph::from_samples(n, samples)
}

/// Samples of `t ↦ 3t²·u` at the points `t·u`.
pub fn sample_cubic(direction: &Vector, params: &[f64]) -> Result<OperatorGraph> {
    let samples = params
        .iter()
        .map(|&t| (direction.scale(t), direction.scale(3.0 * t * t)))
        .collect();
    OperatorGraph::from_samples(direction.dim(), samples)
}

fn box_points<R: Rng + ?Sized>(rng: &mut R, n: usize, count: usize) -> Result<Vec<Vector>> {
    (0..count)
        .map(|_| Vector::new((0..n).map(|_| rng.random_range(-1.0..=1.0)).collect()))
        .collect()
}

fn assert_monotone(t: OperatorGraph, what: &str) -> Result<OperatorGraph> {
    let v = is_monotone(&t, &Tolerance::default());
    match v.violation {
        None => Ok(t),
        Some(violation) => Err(Error::Internal(format!(
            "{what} generator produced a non-monotone graph (pairing {:e})",
            violation.value
        ))),
    }
}

fn psd_linear_graph(spec: &GenSpec) -> Result<OperatorGraph> {
    let n = spec.dim;
    let mut rng = rng_from_seed(spec.seed);
    let q = random_orthogonal(n, &mut rng);
    let d: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..2.0)).collect();
    let mut m = congruence(&q, &d);
    let s = random_skew(n, &mut rng);
    for i in 0..n {
        for j in 0..n {
            m[i][j] += s[i][j];
        }
    }
    let c: Vec<f64> = (0..n).map(|_| gaussian(&mut rng)).collect();
    let points = box_points(&mut rng, n, spec.num_points)?;
    assert_monotone(sample_affine(&m, &c, &points)?, "psd_linear")
}

/// Samples of `x ↦ Mx + c` with `M = QᵀDQ + S`, `D ≥ 0`, `S` skew.
pub fn gen_psd_linear(spec: &GenSpec) -> Result<OperatorGraph> {
    spec.expect_family(Family::PsdLinear)?;
    psd_linear_graph(spec)
}

/// Samples of the gradient of `‖x‖⁴` plus a random convex quadratic.
pub fn gen_convex_gradient(spec: &GenSpec) -> Result<OperatorGraph> {
    spec.expect_family(Family::ConvexGradient)?;
    let n = spec.dim;
    let mut rng = rng_from_seed(spec.seed);
    let q = random_orthogonal(n, &mut rng);
    let d: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..2.0)).collect();
    let p = congruence(&q, &d);
    let lin: Vec<f64> = (0..n).map(|_| gaussian(&mut rng)).collect();
    let points = box_points(&mut rng, n, spec.num_points)?;
    assert_monotone(
        sample_convex_gradient(1.0, &p, &lin, &points)?,
        "convex_gradient",
    )
}

/// Samples of `3t²` along a random line; regenerates until the sample is
/// quasimonotone with a monotonicity violation beyond `eq_tol`.
pub fn gen_cubic_like(spec: &GenSpec) -> Result<OperatorGraph> {
    spec.expect_family(Family::CubicLike)?;
    if spec.num_points < 3 {
        return Err(Error::InvalidSpec(
            "cubic_like needs at least 3 points".into(),
        ));
    }
    let n = spec.dim;
    let tol = Tolerance::default();
    let mut rng = rng_from_seed(spec.seed);
    let direction = loop {
        let u = Vector::new((0..n).map(|_| gaussian(&mut rng)).collect())?;
        let norm = u.norm();
        if norm > 1e-6 {
            break u.scale(1.0 / norm);
        }
    };
    for _ in 0..1000 {
        let params: Vec<f64> = (0..spec.num_points)
            .map(|_| rng.random_range(-1.0..=1.0))
            .collect();
        if !params.iter().any(|t| *t < 0.0) || !params.iter().any(|t| *t >= 0.0) {
            continue;
        }
        let t = sample_cubic(&direction, &params)?;
        if t.len() == spec.num_points
            && !is_monotone(&t, &tol).holds
            && is_quasimonotone(&t, &tol).holds
        {
            return Ok(t);
        }
    }
    Err(Error::Internal(
        "cubic_like generator failed to find a non-degenerate sample".into(),
    ))
}

/// Adds independent uniform noise in `[−magnitude, magnitude]` to every
/// dual coordinate.
pub fn gen_perturbed(base: &OperatorGraph, magnitude: f64, seed: u64) -> Result<OperatorGraph> {
    if !(magnitude.is_finite() && magnitude >= 0.0) {
        return Err(Error::InvalidSpec(format!(
            "magnitude must be finite and non-negative, got {magnitude}"
        )));
    }
    if magnitude == 0.0 {
        return Ok(base.clone());
    }
    let mut rng = rng_from_seed(seed);
    let entries = base
        .entries()
        .iter()
        .map(|e| {
            let duals = e
                .duals
                .iter()
                .map(|d| {
                    Vector::new(
                        d.iter()
                            .map(|c| c + rng.random_range(-magnitude..=magnitude))
                            .collect(),
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(crate::operator::Entry {
                point: e.point.clone(),
                duals,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    OperatorGraph::new(base.dim(), entries)
}

/// Stream separating the perturbation noise from the base graph draws.
const PERTURB_STREAM: u64 = 0x9E37_79B9_7F4A_7C15;

/// Dispatches on `spec.family`. The perturbed family perturbs the
/// psd-linear graph of the same seed.
pub fn generate(spec: &GenSpec) -> Result<OperatorGraph> {
    spec.validate()?;
    match spec.family {
        Family::PsdLinear => gen_psd_linear(spec),
        Family::ConvexGradient => gen_convex_gradient(spec),
        Family::CubicLike => gen_cubic_like(spec),
        Family::Perturbed => {
            let base = psd_linear_graph(spec)?;
            gen_perturbed(&base, spec.magnitude, spec.seed ^ PERTURB_STREAM)
        }
    }
}

/// Gaussian shift with per-coordinate standard deviation `scale`.
pub fn random_shift<R: Rng + ?Sized>(rng: &mut R, dim: usize, scale: f64) -> Vector {
    Vector::new((0..dim).map(|_| scale * gaussian(rng)).collect()).expect("finite draws")
}

/// Random non-empty subset of `pool` with at most `max_size` elements, in
/// pool order.
pub fn random_subset<R: Rng + ?Sized>(rng: &mut R, pool: &[usize], max_size: usize) -> Vec<usize> {
    let cap = max_size.min(pool.len()).max(1);
    let size = rng.random_range(1..=cap);
    let mut chosen = rand::seq::index::sample(rng, pool.len(), size).into_vec();
    chosen.sort_unstable();
    chosen.into_iter().map(|i| pool[i]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::vector;

    fn spec(family: Family, dim: usize, seed: u64) -> GenSpec {
        GenSpec {
            dim,
            num_points: 8,
            family,
            magnitude: 0.5,
            seed,
        }
    }

    #[test]
    fn identity_and_rotation_maps() {
        let tol = Tolerance::default();
        let pts = vec![
            vector(&[0.3, -0.2]),
            vector(&[-0.7, 0.9]),
            vector(&[1., 1.]),
        ];
        let id = vec![vec![1., 0.], vec![0., 1.]];
        let t = sample_affine(&id, &[0., 0.], &pts).unwrap();
        for e in t.entries() {
            assert_eq!(e.duals[0], e.point);
        }
        assert!(is_monotone(&t, &tol).holds);

        let rot = vec![vec![0., 1.], vec![-1., 0.]];
        let t = sample_affine(&rot, &[0., 0.], &pts).unwrap();
        let v = is_monotone(&t, &tol);
        assert!(v.holds);
        // the skew form vanishes on every pair
        for i in 0..3 {
            for j in 0..3 {
                let e = t.entries();
                let val = raw_dot(
                    &e[j].duals[0].sub(&e[i].duals[0]),
                    &e[j].point.sub(&e[i].point),
                );
                assert!(val.abs() < 1e-15);
            }
        }
    }

    #[test]
    fn convex_gradient_examples() {
        let zero = vec![vec![0.0]];
        let pts = vec![vector(&[-1.]), vector(&[0.]), vector(&[1.])];
        let t = sample_convex_gradient(1.0, &zero, &[0.0], &pts).unwrap();
        let duals: Vec<f64> = t.entries().iter().map(|e| e.duals[0][0]).collect();
        assert_eq!(duals, vec![-4.0, 0.0, 4.0]);

        let t = sample_convex_gradient(0.0, &vec![vec![1.0]], &[0.0], &pts).unwrap();
        for e in t.entries() {
            assert_eq!(e.duals[0], e.point);
        }
    }

    #[test]
    fn cubic_examples() {
        let tol = Tolerance::default();
        let t = sample_cubic(&vector(&[1.]), &[-1., 0., 1.]).unwrap();
        let duals: Vec<f64> = t.entries().iter().map(|e| e.duals[0][0]).collect();
        assert_eq!(duals, vec![3., 0., 3.]);
        assert!(is_quasimonotone(&t, &tol).holds && !is_monotone(&t, &tol).holds);

        let t = sample_cubic(&vector(&[1., 0.]), &[-1., 0., 1.]).unwrap();
        assert_eq!(t.entries()[0].point, vector(&[-1., 0.]));
        assert_eq!(t.entries()[2].duals[0], vector(&[3., 0.]));
        assert!(is_quasimonotone(&t, &tol).holds);
        assert_eq!(is_monotone(&t, &tol).violation.unwrap().value, -3.0);
    }

    #[test]
    fn generated_families_have_their_verdicts() {
        let tol = Tolerance::default();
        for dim in 1..=4 {
            for seed in 0..10 {
                let t = generate(&spec(Family::PsdLinear, dim, seed)).unwrap();
                assert_eq!(t.len(), 8);
                assert!(is_monotone(&t, &tol).holds);
                let t = generate(&spec(Family::ConvexGradient, dim, seed)).unwrap();
                assert!(is_monotone(&t, &tol).holds);
                let t = generate(&spec(Family::CubicLike, dim, seed)).unwrap();
                assert!(is_quasimonotone(&t, &tol).holds);
                assert!(!is_monotone(&t, &tol).holds);
            }
        }
    }

    #[test]
    fn determinism() {
        for family in Family::ALL {
            let s = spec(family, 3, 42);
            assert_eq!(generate(&s).unwrap(), generate(&s).unwrap());
        }
        let a = generate(&spec(Family::PsdLinear, 3, 1)).unwrap();
        let b = generate(&spec(Family::PsdLinear, 3, 2)).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn perturbation() {
        let base =
            sample_affine(&vec![vec![1.0]], &[0.0], &[vector(&[0.]), vector(&[1.])]).unwrap();
        assert_eq!(gen_perturbed(&base, 0.0, 5).unwrap(), base);
        let p = gen_perturbed(&base, 0.1, 5).unwrap();
        assert_eq!(p, gen_perturbed(&base, 0.1, 5).unwrap());
        for (a, b) in p.entries().iter().zip(base.entries()) {
            assert_eq!(a.point, b.point);
            assert!(a.duals[0].dist_inf(&b.duals[0]) <= 0.1);
        }
        // the dual at 1 pushed down to −1 breaks monotonicity by exactly 1
        let bent =
            sample_affine(&vec![vec![-1.0]], &[0.0], &[vector(&[0.]), vector(&[1.])]).unwrap();
        let v = is_monotone(&bent, &Tolerance::default());
        assert_eq!(v.violation.unwrap().value, -1.0);
    }

    #[test]
    fn spec_validation() {
        let mut s = spec(Family::PsdLinear, 0, 1);
        assert!(generate(&s).is_err());
        s.dim = 2;
        s.num_points = 0;
        assert!(generate(&s).is_err());
        s.num_points = 2;
        s.magnitude = -1.0;
        assert!(generate(&s).is_err());
        s.magnitude = 0.0;
        assert!(gen_convex_gradient(&s).is_err());
        let s = GenSpec {
            num_points: 2,
            ..spec(Family::CubicLike, 2, 1)
        };
        assert!(gen_cubic_like(&s).is_err());
    }

    #[test]
    fn orthogonal_matrices() {
        let mut rng = rng_from_seed(9);
        let q = random_orthogonal(4, &mut rng);
        for i in 0..4 {
            for j in 0..4 {
                let d = raw_dot(&q[i], &q[j]);
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((d - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn subsets_and_shifts() {
        let mut rng = rng_from_seed(11);
        let pool = [2, 4, 6, 8, 10];
        for _ in 0..100 {
            let s = random_subset(&mut rng, &pool, 3);
            assert!(!s.is_empty() && s.len() <= 3);
            assert!(s.windows(2).all(|w| w[0] < w[1]));
            assert!(s.iter().all(|i| pool.contains(i)));
        }
        assert_eq!(random_shift(&mut rng, 3, 1.0).dim(), 3);
    }
}
