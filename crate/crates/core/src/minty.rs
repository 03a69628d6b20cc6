//! Minty variational inequalities on polytopes and the witness that turns a
//! monotonicity violation into an unsolvable two-point inequality.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gamma::gamma_half_space;
use crate::linalg::{check_dim, raw_dot, Vector};
use crate::operator::{is_monotone, restrict_indices, OperatorGraph, PairVerdict, Violation};
use crate::polyhedra::{feasible_in_hull, FeasibilityResult, HalfSpace, Tolerance, VPolytope};
use crate::randgen::{random_shift, random_subset};

/// Find `x̄ ∈ K` with `⟨y* − x*, y − x̄⟩ ≥ 0` for every `(y, y*)` of the graph
/// with `y ∈ K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MviProblem {
    pub graph: OperatorGraph,
    pub xstar: Vector,
    pub k: VPolytope,
}

impl MviProblem {
    pub fn new(graph: OperatorGraph, xstar: Vector, k: VPolytope) -> Result<Self> {
        check_dim(graph.dim(), xstar.dim())?;
        check_dim(graph.dim(), k.dim())?;
        Ok(MviProblem { graph, xstar, k })
    }

    /// The inequalities of the problem, tagged with their `(entry, dual)`
    /// origin. Certificate indices of [`solve_mvi`] point into this list.
    pub fn constraints(&self, tol: &Tolerance) -> Result<Vec<((usize, usize), HalfSpace)>> {
        let mut out = Vec::new();
        for i in restrict_indices(&self.graph, &self.k, tol)? {
            let e = &self.graph.entries()[i];
            for (d, dual) in e.duals.iter().enumerate() {
                out.push(((i, d), gamma_half_space(&e.point, dual, &self.xstar)?));
            }
        }
        Ok(out)
    }
}

/// Solves the Minty inequality over the restricted graph. When nothing of the
/// graph lies in `K` the problem is vacuous and the first vertex of `K` is
/// returned.
pub fn solve_mvi(p: &MviProblem, tol: &Tolerance) -> Result<FeasibilityResult> {
    let cons: Vec<HalfSpace> = p.constraints(tol)?.into_iter().map(|(_, h)| h).collect();
    feasible_in_hull(&p.k, &cons, tol)
}

/// The subsystem over the entries `subset`, with `K = [x_i : i ∈ subset]` and
/// every dual of each selected entry.
pub fn solve_finite_mvi(
    t: &OperatorGraph,
    subset: &[usize],
    xstar: &Vector,
    tol: &Tolerance,
) -> Result<FeasibilityResult> {
    finite_problem(t, subset, xstar).and_then(|p| solve_mvi(&p, tol))
}

pub fn finite_problem(t: &OperatorGraph, subset: &[usize], xstar: &Vector) -> Result<MviProblem> {
    if subset.is_empty() {
        return Err(Error::Empty("MVI subset"));
    }
    let sub = t.subgraph(subset)?;
    let k = VPolytope::new(sub.entries().iter().map(|e| e.point.clone()).collect())?;
    MviProblem::new(sub, xstar.clone(), k)
}

/// Two-point version: solvability of the subsystem on `{i, j}`.
pub fn two_point_check(
    t: &OperatorGraph,
    i: usize,
    j: usize,
    xstar: &Vector,
    tol: &Tolerance,
) -> Result<bool> {
    Ok(solve_finite_mvi(t, &[i, j], xstar, tol)?.is_feasible())
}

/// Two graph elements `(x, x*)` and `(y, y*)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualPair {
    pub x: Vector,
    pub x_dual: Vector,
    pub y: Vector,
    pub y_dual: Vector,
}

impl DualPair {
    pub fn new(x: Vector, x_dual: Vector, y: Vector, y_dual: Vector) -> Result<Self> {
        let n = x.dim();
        for v in [&x_dual, &y, &y_dual] {
            check_dim(n, v.dim())?;
        }
        Ok(DualPair {
            x,
            x_dual,
            y,
            y_dual,
        })
    }

    /// `⟨y* − x*, y − x⟩`
    pub fn pairing(&self) -> f64 {
        raw_dot(&self.y_dual.sub(&self.x_dual), &self.y.sub(&self.x))
    }

    pub fn as_graph(&self) -> Result<OperatorGraph> {
        OperatorGraph::from_samples(
            self.x.dim(),
            vec![
                (self.x.clone(), self.x_dual.clone()),
                (self.y.clone(), self.y_dual.clone()),
            ],
        )
    }
}

impl From<&Violation> for DualPair {
    fn from(v: &Violation) -> Self {
        DualPair {
            x: v.first.point.clone(),
            x_dual: v.first.dual.clone(),
            y: v.second.point.clone(),
            y_dual: v.second.dual.clone(),
        }
    }
}

/// A shift `z*` making the two-point Minty inequality on `[x, y]`
/// unsolvable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityWitness {
    pub zstar: Vector,
    pub pair: DualPair,
    /// `−⟨y* − x*, y − x⟩ > 0`
    pub delta: f64,
}

impl MonotonicityWitness {
    /// `⟨x* − z*, y − x⟩`, equal to `δ/2` by construction.
    pub fn a(&self) -> f64 {
        let d = self.pair.y.sub(&self.pair.x);
        raw_dot(&self.pair.x_dual.sub(&self.zstar), &d)
    }

    /// `⟨y* − z*, y − x⟩ = a − δ`, equal to `−δ/2` by construction.
    pub fn b(&self) -> f64 {
        let d = self.pair.y.sub(&self.pair.x);
        raw_dot(&self.pair.y_dual.sub(&self.zstar), &d)
    }

    /// The two-point problem `MVI({(x, x*), (y, y*)}, z*, [x, y])`.
    pub fn problem(&self) -> Result<MviProblem> {
        let k = VPolytope::new(vec![self.pair.x.clone(), self.pair.y.clone()])?;
        MviProblem::new(self.pair.as_graph()?, self.zstar.clone(), k)
    }

    /// Solves [`Self::problem`]; infeasible for every genuine witness.
    pub fn confirm(&self, tol: &Tolerance) -> Result<FeasibilityResult> {
        solve_mvi(&self.problem()?, tol)
    }
}

/// `z* = x* − (δ / 2‖y − x‖²)(y − x)` for a pair with
/// `⟨y* − x*, y − x⟩ = −δ < −eq_tol`.
///
/// Along `x̄ = x + t(y − x)` the first inequality reads `t·a ≤ 0` and the
/// second `(1 − t)·b ≥ 0`; with `a = δ/2 > 0 > b = −δ/2` they force `t = 0`
/// and `t = 1` at once.
pub fn construct_witness(pair: &DualPair, tol: &Tolerance) -> Result<MonotonicityWitness> {
    let d = pair.y.sub(&pair.x);
    let len_sq = d.norm_sq();
    if len_sq == 0.0 || d.max_abs() <= tol.eq_tol {
        return Err(Error::CoincidentPoints);
    }
    let delta = -pair.pairing();
    if delta <= tol.eq_tol {
        return Err(Error::NotAViolation { delta });
    }
    let zstar = pair.x_dual.axpy(-delta / (2.0 * len_sq), &d);
    Ok(MonotonicityWitness {
        zstar,
        pair: pair.clone(),
        delta,
    })
}

/// Monotonicity decided by the pairwise check and cross-examined through
/// Minty inequalities.
///
/// A monotone graph must give solvable subsystems for `trials` random shifts
/// and subsets. A violating pair must give a witness whose two-point problem
/// is unsolvable. Any disagreement is a solver fault and is returned as
/// [`Error::InconsistentClassification`].
pub fn classify_via_mvi<R: Rng + ?Sized>(
    t: &OperatorGraph,
    trials: usize,
    rng: &mut R,
    tol: &Tolerance,
) -> Result<PairVerdict> {
    if trials == 0 {
        return Err(Error::InvalidSpec("trials must be at least 1".into()));
    }
    let verdict = is_monotone(t, tol);
    match &verdict.violation {
        None => {
            let domain = t.domain();
            if domain.is_empty() {
                return Ok(verdict);
            }
            let scale = t.magnitude().max(1.0);
            for trial in 0..trials {
                let xstar = random_shift(rng, t.dim(), scale);
                let subset = random_subset(rng, &domain, 6);
                if !solve_finite_mvi(t, &subset, &xstar, tol)?.is_feasible() {
                    return Err(Error::InconsistentClassification(format!(
                        "monotone graph, trial {trial}: subset {subset:?} at x* = {:?} is unsolvable",
                        xstar.as_slice()
                    )));
                }
            }
        }
        Some(violation) => {
            let witness = construct_witness(&DualPair::from(violation), tol)?;
            if witness.confirm(tol)?.is_feasible() {
                return Err(Error::InconsistentClassification(format!(
                    "violating pair with delta {:e} but the witness problem is solvable",
                    witness.delta
                )));
            }
        }
    }
    Ok(verdict)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::vector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn graph_1d(samples: &[(f64, f64)]) -> OperatorGraph {
        OperatorGraph::from_samples(
            1,
            samples
                .iter()
                .map(|&(x, d)| (vector(&[x]), vector(&[d])))
                .collect(),
        )
        .unwrap()
    }

    fn pair_1d(x: f64, xd: f64, y: f64, yd: f64) -> DualPair {
        DualPair::new(vector(&[x]), vector(&[xd]), vector(&[y]), vector(&[yd])).unwrap()
    }

    #[test]
    fn solve_mvi_examples() {
        let tol = Tolerance::default();
        let unit = VPolytope::new(vec![vector(&[0.]), vector(&[1.])]).unwrap();
        let p =
            MviProblem::new(graph_1d(&[(0., 0.), (1., 1.)]), vector(&[0.]), unit.clone()).unwrap();
        let w = solve_mvi(&p, &tol).unwrap();
        let x = w.witness().unwrap()[0];
        assert!((-1e-9..=1.0 + 1e-9).contains(&x));

        let p = MviProblem::new(
            graph_1d(&[(0., 0.), (1., -1.)]),
            vector(&[-0.5]),
            unit.clone(),
        )
        .unwrap();
        let r = solve_mvi(&p, &tol).unwrap();
        let cert = r.certificate().unwrap();
        let origins: Vec<_> = p
            .constraints(&tol)
            .unwrap()
            .into_iter()
            .map(|c| c.0)
            .collect();
        assert_eq!(origins, vec![(0, 0), (1, 0)]);
        assert_eq!(cert.active, vec![0, 1]);

        let far = VPolytope::new(vec![vector(&[5.]), vector(&[6.])]).unwrap();
        let p = MviProblem::new(graph_1d(&[(0., 0.), (1., -1.)]), vector(&[-0.5]), far).unwrap();
        assert_eq!(solve_mvi(&p, &tol).unwrap().witness(), Some(&vector(&[5.])));
    }

    #[test]
    fn finite_mvi_examples() {
        let tol = Tolerance::default();
        let t = graph_1d(&[(0., 0.), (1., -1.)]);
        assert!(!solve_finite_mvi(&t, &[0, 1], &vector(&[-0.5]), &tol)
            .unwrap()
            .is_feasible());
        let single = solve_finite_mvi(&t, &[1], &vector(&[3.]), &tol).unwrap();
        assert_eq!(single.witness(), Some(&vector(&[1.])));
        assert!(solve_finite_mvi(&t, &[], &vector(&[0.]), &tol).is_err());
        assert!(solve_finite_mvi(&t, &[2], &vector(&[0.]), &tol).is_err());
        assert!(!two_point_check(&t, 0, 1, &vector(&[-0.5]), &tol).unwrap());
        assert!(two_point_check(&t, 0, 1, &vector(&[3.]), &tol).unwrap());
    }

    #[test]
    fn witness_examples() {
        let tol = Tolerance::default();
        let w = construct_witness(&pair_1d(0., 0., 1., -1.), &tol).unwrap();
        assert_eq!(w.delta, 1.0);
        assert_eq!(w.zstar, vector(&[-0.5]));
        assert!(!w.confirm(&tol).unwrap().is_feasible());

        let w = construct_witness(&pair_1d(-1., 3., 0., 0.), &tol).unwrap();
        assert_eq!(w.delta, 3.0);
        assert_eq!(w.zstar, vector(&[1.5]));
        assert_eq!((w.a(), w.b()), (1.5, -1.5));
        assert!(!w.confirm(&tol).unwrap().is_feasible());

        let w = construct_witness(&pair_1d(0., 0., 2., -2.), &tol).unwrap();
        assert_eq!(w.delta, 4.0);
        assert_eq!(w.zstar, vector(&[-1.]));
        assert_eq!((w.a(), w.b()), (2.0, -2.0));
    }

    #[test]
    fn witness_errors() {
        let tol = Tolerance::default();
        assert!(matches!(
            construct_witness(&pair_1d(0., 0., 1., 1.), &tol),
            Err(Error::NotAViolation { .. })
        ));
        assert_eq!(
            construct_witness(&pair_1d(1., 0., 1., -1.), &tol).unwrap_err(),
            Error::CoincidentPoints
        );
    }

    #[test]
    fn classify_examples() {
        let tol = Tolerance::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let v = classify_via_mvi(
            &graph_1d(&[(-1., 3.), (0., 0.), (1., 3.)]),
            5,
            &mut rng,
            &tol,
        )
        .unwrap();
        assert!(!v.holds);
        assert_eq!(v.violation.unwrap().value, -3.0);
        assert!(
            classify_via_mvi(&graph_1d(&[(0., 0.), (1., 1.)]), 20, &mut rng, &tol)
                .unwrap()
                .holds
        );
        assert!(
            classify_via_mvi(&OperatorGraph::empty(2), 3, &mut rng, &tol)
                .unwrap()
                .holds
        );
        assert!(
            classify_via_mvi(&graph_1d(&[(2., 1.)]), 3, &mut rng, &tol)
                .unwrap()
                .holds
        );
        assert!(classify_via_mvi(&graph_1d(&[(2., 1.)]), 0, &mut rng, &tol).is_err());
    }
}
