//! The convex-valued map `Γ_{T−x*}(y) = {x : ⟨y* − x*, y − x⟩ ≥ 0 ∀ y* ∈ T(y)}`
//! over a finite base set, with the covering (KKM) and intersection (FIP)
//! predicates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{check_dim, raw_dot, Vector};
use crate::operator::OperatorGraph;
use crate::polyhedra::{
    feasible_in_hull, strictly_feasible_in_hull, Certificate, FeasibilityResult, HPolyhedron,
    HalfSpace, Tolerance, VPolytope,
};

/// Default bound on the number of dual selections `check_kkm` enumerates.
pub const DEFAULT_SELECTION_CAP: u64 = 100_000;

/// `{x : ⟨−a, x⟩ ≥ −⟨a, y⟩}` with `a = y* − x*`, i.e. `⟨a, y − x⟩ ≥ 0`.
pub(crate) fn gamma_half_space(y: &Vector, dual: &Vector, xstar: &Vector) -> Result<HalfSpace> {
    let a = dual.sub(xstar);
    let offset = -raw_dot(&a, y);
    // a = 0 gives the all-space constraint 0 ≥ 0; keep the offset a clean zero
    let offset = if offset == 0.0 { 0.0 } else { offset };
    HalfSpace::non_strict(a.scale(-1.0), offset)
}

/// `Γ_{T−x*}(y)`: one half-space per dual of `y`, or all of Rⁿ when `y` is
/// not a point of `D(T)`. `y` is matched against the graph points within the
/// default `eq_tol`.
pub fn gamma_polyhedron(t: &OperatorGraph, y: &Vector, xstar: &Vector) -> Result<HPolyhedron> {
    check_dim(t.dim(), y.dim())?;
    check_dim(t.dim(), xstar.dim())?;
    let eq_tol = Tolerance::default().eq_tol;
    let Some(entry) = t.entries().iter().find(|e| e.point.dist_inf(y) <= eq_tol) else {
        return Ok(HPolyhedron::whole_space(t.dim()));
    };
    let constraints = entry
        .duals
        .iter()
        .map(|d| gamma_half_space(&entry.point, d, xstar))
        .collect::<Result<Vec<_>>>()?;
    HPolyhedron::new(t.dim(), constraints)
}

/// The values of `Γ_{T−x*}` at a finite base set `A ⊂ D(T)`, with `[A]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaSystem {
    /// Entry indices of the base points in the source graph.
    pub base_indices: Vec<usize>,
    pub base_points: Vec<Vector>,
    /// Shifted duals `x_i* − x*` per base point.
    pub shifted_duals: Vec<Vec<Vector>>,
    pub polyhedra: Vec<HPolyhedron>,
    pub hull: VPolytope,
    pub shift_used: Vector,
}

impl GammaSystem {
    pub fn len(&self) -> usize {
        self.base_points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base_points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.hull.dim()
    }

    /// All Γ constraints, base point by base point.
    pub fn all_constraints(&self) -> Vec<HalfSpace> {
        self.polyhedra
            .iter()
            .flat_map(|p| p.constraints().iter().cloned())
            .collect()
    }

    /// Number of dual selections `Π |T(x_i)|`, saturating.
    pub fn selection_count(&self) -> u64 {
        self.shifted_duals
            .iter()
            .fold(1u64, |acc, d| acc.saturating_mul(d.len() as u64))
    }

    /// Largest violation of `Γ(x_i)` at `x`, i.e. `max(0, −min slack)`.
    pub fn violation(&self, i: usize, x: &[f64]) -> f64 {
        self.polyhedra[i]
            .min_slack(x)
            .map_or(0.0, |s| (-s).max(0.0))
    }

    /// The system restricted to the base points flagged in `keep`, with the
    /// hull left unchanged.
    pub fn sub_system(&self, keep: &[usize]) -> GammaSystem {
        GammaSystem {
            base_indices: keep.iter().map(|&i| self.base_indices[i]).collect(),
            base_points: keep.iter().map(|&i| self.base_points[i].clone()).collect(),
            shifted_duals: keep
                .iter()
                .map(|&i| self.shifted_duals[i].clone())
                .collect(),
            polyhedra: keep.iter().map(|&i| self.polyhedra[i].clone()).collect(),
            hull: self.hull.clone(),
            shift_used: self.shift_used.clone(),
        }
    }

    /// The system over the base points at positions `keep`, with hull
    /// `[x_i : i ∈ keep]`.
    pub fn subsystem(&self, keep: &[usize]) -> Result<GammaSystem> {
        if keep.is_empty() {
            return Err(Error::Empty("base set"));
        }
        for &i in keep {
            if i >= self.len() {
                return Err(Error::IndexOutOfRange {
                    index: i,
                    len: self.len(),
                });
            }
        }
        let mut sub = self.sub_system(keep);
        sub.hull = VPolytope::new(sub.base_points.clone())?;
        Ok(sub)
    }
}

/// Positions of the bits of `mask`.
fn mask_members(mask: u32, len: usize) -> Vec<usize> {
    (0..len).filter(|i| mask & (1 << i) != 0).collect()
}

fn check_subset_count(sys: &GammaSystem) -> Result<()> {
    if sys.len() > 20 {
        return Err(Error::InvalidSpec(format!(
            "subset enumeration supports at most 20 base points, got {}",
            sys.len()
        )));
    }
    Ok(())
}

/// Builds `Γ_{T−x*}` over the entries `a` (repeated indices are ignored).
pub fn build_gamma_system(t: &OperatorGraph, a: &[usize], xstar: &Vector) -> Result<GammaSystem> {
    check_dim(t.dim(), xstar.dim())?;
    if a.is_empty() {
        return Err(Error::Empty("base set"));
    }
    let mut base_indices: Vec<usize> = Vec::with_capacity(a.len());
    for &i in a {
        let entry = t.entry(i)?;
        if entry.duals.is_empty() {
            return Err(Error::NotInDomain { index: i });
        }
        if !base_indices.contains(&i) {
            base_indices.push(i);
        }
    }
    let mut base_points = Vec::with_capacity(base_indices.len());
    let mut shifted_duals = Vec::with_capacity(base_indices.len());
    let mut polyhedra = Vec::with_capacity(base_indices.len());
    for &i in &base_indices {
        let entry = &t.entries()[i];
        let constraints = entry
            .duals
            .iter()
            .map(|d| gamma_half_space(&entry.point, d, xstar))
            .collect::<Result<Vec<_>>>()?;
        polyhedra.push(HPolyhedron::new(t.dim(), constraints)?);
        shifted_duals.push(entry.duals.iter().map(|d| d.sub(xstar)).collect());
        base_points.push(entry.point.clone());
    }
    let hull = VPolytope::new(base_points.clone())?;
    Ok(GammaSystem {
        base_indices,
        base_points,
        shifted_duals,
        polyhedra,
        hull,
        shift_used: xstar.clone(),
    })
}

/// A point of `[A]` outside every `Γ(x_i)`, with the dual of each base point
/// it violates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KkmCounterexample {
    pub point: Vector,
    pub selection: Vec<usize>,
    /// Smallest strict violation `−⟨x_{σ(i)}* − x*, x_i − point⟩` over `i`.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KkmVerdict {
    pub holds: bool,
    pub counterexample: Option<KkmCounterexample>,
}

/// Decides `[A] ⊂ ⋃ Γ(x_i)` with the default selection cap.
pub fn check_kkm(sys: &GammaSystem, tol: &Tolerance) -> Result<KkmVerdict> {
    check_kkm_capped(sys, tol, DEFAULT_SELECTION_CAP)
}

/// Decides `[A] ⊂ ⋃ Γ(x_i)`.
///
/// The uncovered part of the hull is `⋃_σ ⋂_i {x : ⟨x_{σ(i)}* − x*, x_i − x⟩ < 0}`
/// over dual selections `σ`, so each selection is one strict feasibility
/// problem. Selections are visited in lexicographic order and the first
/// feasible one yields the counterexample.
pub fn check_kkm_capped(sys: &GammaSystem, tol: &Tolerance, cap: u64) -> Result<KkmVerdict> {
    let size = sys.selection_count();
    if size > cap {
        return Err(Error::SelectionCapExceeded { cap, size });
    }
    let m = sys.len();
    let mut selection = vec![0usize; m];
    loop {
        if let Some(cx) = uncovered_for_selection(sys, &selection, tol)? {
            return Ok(KkmVerdict {
                holds: false,
                counterexample: Some(cx),
            });
        }
        // odometer, last position fastest
        let mut pos = m;
        loop {
            if pos == 0 {
                return Ok(KkmVerdict {
                    holds: true,
                    counterexample: None,
                });
            }
            pos -= 1;
            selection[pos] += 1;
            if selection[pos] < sys.shifted_duals[pos].len() {
                break;
            }
            selection[pos] = 0;
        }
    }
}

fn uncovered_for_selection(
    sys: &GammaSystem,
    selection: &[usize],
    tol: &Tolerance,
) -> Result<Option<KkmCounterexample>> {
    let mut cons = Vec::with_capacity(selection.len());
    for (i, &s) in selection.iter().enumerate() {
        let a = &sys.shifted_duals[i][s];
        if a.iter().all(|c| *c == 0.0) {
            // Γ(x_i) is everything along this dual: nothing escapes it
            return Ok(None);
        }
        // ⟨a, x_i − x⟩ < 0  ⇔  ⟨a, x⟩ > ⟨a, x_i⟩
        cons.push(HalfSpace::strict(
            a.clone(),
            raw_dot(a, &sys.base_points[i]),
        )?);
    }
    match strictly_feasible_in_hull(&sys.hull, &cons, tol)? {
        FeasibilityResult::Feasible { witness, slack, .. } => Ok(Some(KkmCounterexample {
            point: witness,
            selection: selection.to_vec(),
            margin: slack.unwrap_or(f64::INFINITY),
        })),
        FeasibilityResult::Infeasible(_) => Ok(None),
    }
}

/// Decides `[A] ∩ ⋂ Γ(x_i) ≠ ∅`.
pub fn check_fip(sys: &GammaSystem, tol: &Tolerance) -> Result<FeasibilityResult> {
    feasible_in_hull(&sys.hull, &sys.all_constraints(), tol)
}

/// A subset of the base set (positions into the system) where a predicate
/// fails, with the failing verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetFailure<C> {
    pub subset: Vec<usize>,
    pub certificate: C,
}

/// The KKM condition in full: `[B] ⊂ ⋃_{i∈B} Γ(x_i)` for every non-empty
/// `B ⊂ A`. Subsets are visited in increasing bitmask order and the first
/// failure is returned.
///
/// [`check_kkm`] tests `B = A` only, which on its own is neither necessary nor
/// sufficient for the intersection property of `A`.
pub fn kkm_failure_in_subsets(
    sys: &GammaSystem,
    tol: &Tolerance,
) -> Result<Option<SubsetFailure<KkmCounterexample>>> {
    check_subset_count(sys)?;
    for mask in 1u32..(1u32 << sys.len()) {
        let subset = mask_members(mask, sys.len());
        let verdict = check_kkm(&sys.subsystem(&subset)?, tol)?;
        if let Some(cx) = verdict.counterexample {
            return Ok(Some(SubsetFailure {
                subset,
                certificate: cx,
            }));
        }
    }
    Ok(None)
}

/// The intersection property in full: `[B] ∩ ⋂_{i∈B} Γ(x_i) ≠ ∅` for every
/// non-empty `B ⊂ A`. By the KKM theorem for convex values this holds
/// exactly when [`kkm_failure_in_subsets`] finds nothing.
pub fn fip_failure_in_subsets(
    sys: &GammaSystem,
    tol: &Tolerance,
) -> Result<Option<SubsetFailure<Certificate>>> {
    check_subset_count(sys)?;
    for mask in 1u32..(1u32 << sys.len()) {
        let subset = mask_members(mask, sys.len());
        if let FeasibilityResult::Infeasible(cert) = check_fip(&sys.subsystem(&subset)?, tol)? {
            return Ok(Some(SubsetFailure {
                subset,
                certificate: cert,
            }));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::vector;

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

    fn identity() -> OperatorGraph {
        graph_1d(&[(0., 0.), (1., 1.)])
    }

    fn witness_instance() -> OperatorGraph {
        graph_1d(&[(0., 0.), (1., -1.)])
    }

    #[test]
    fn gamma_polyhedron_examples() {
        let zero = vector(&[0.]);
        let g = gamma_polyhedron(&identity(), &vector(&[1.]), &zero).unwrap();
        assert_eq!(g.constraints().len(), 1);
        // x ≤ 1
        assert_eq!(g.constraints()[0].normal(), &vector(&[-1.]));
        assert_eq!(g.constraints()[0].offset(), -1.0);

        let g = gamma_polyhedron(&identity(), &vector(&[7.]), &zero).unwrap();
        assert!(g.constraints().is_empty());

        let t = graph_1d(&[(0., 0.5), (1., -0.5)]);
        let g = gamma_polyhedron(&t, &vector(&[0.]), &zero).unwrap();
        // x ≤ 0
        assert_eq!(g.constraints()[0].normal(), &vector(&[-0.5]));
        assert_eq!(g.constraints()[0].offset(), 0.0);
    }

    #[test]
    fn build_examples() {
        let sys = build_gamma_system(&identity(), &[0, 1], &vector(&[0.])).unwrap();
        assert!(sys.polyhedra[0].constraints()[0].is_all_space());
        assert_eq!(sys.hull.vertices(), &[vector(&[0.]), vector(&[1.])]);

        let single = build_gamma_system(&identity(), &[1], &vector(&[0.])).unwrap();
        assert_eq!(single.hull.vertices(), &[vector(&[1.])]);
        assert_eq!(single.polyhedra[0].min_slack(&[1.0]), Some(0.0));

        let sys = build_gamma_system(&witness_instance(), &[0, 1], &vector(&[-0.5])).unwrap();
        // x ≤ 0 and x ≥ 1
        assert_eq!(sys.polyhedra[0].constraints()[0].normal(), &vector(&[-0.5]));
        assert_eq!(sys.polyhedra[1].constraints()[0].normal(), &vector(&[0.5]));
        assert_eq!(sys.polyhedra[1].constraints()[0].offset(), 0.5);
    }

    #[test]
    fn build_errors() {
        let mut entries = identity().entries().to_vec();
        entries[1].duals.clear();
        let t = OperatorGraph::new(1, entries).unwrap();
        let zero = vector(&[0.]);
        assert_eq!(
            build_gamma_system(&t, &[0, 1], &zero).unwrap_err(),
            Error::NotInDomain { index: 1 }
        );
        assert!(matches!(
            build_gamma_system(&t, &[5], &zero),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(build_gamma_system(&t, &[], &zero).is_err());
    }

    #[test]
    fn kkm_and_fip_examples() {
        let tol = Tolerance::default();
        let sys = build_gamma_system(&identity(), &[0, 1], &vector(&[0.])).unwrap();
        assert!(check_kkm(&sys, &tol).unwrap().holds);
        assert!(check_fip(&sys, &tol).unwrap().is_feasible());

        let sys = build_gamma_system(&witness_instance(), &[0, 1], &vector(&[-0.5])).unwrap();
        let v = check_kkm(&sys, &tol).unwrap();
        assert!(!v.holds);
        let cx = v.counterexample.unwrap();
        assert!((cx.point[0] - 0.5).abs() < 1e-9);
        assert!((cx.margin - 0.25).abs() < 1e-12);
        assert!(!check_fip(&sys, &tol).unwrap().is_feasible());

        let single = build_gamma_system(&witness_instance(), &[1], &vector(&[-0.5])).unwrap();
        assert!(check_kkm(&single, &tol).unwrap().holds);
        let fip = check_fip(&single, &tol).unwrap();
        assert_eq!(fip.witness(), Some(&vector(&[1.])));
    }

    #[test]
    fn selection_cap() {
        let duals: Vec<Vector> = (0..10).map(|k| vector(&[k as f64])).collect();
        let entries = (0..6)
            .map(|i| crate::operator::Entry {
                point: vector(&[i as f64]),
                duals: duals.clone(),
            })
            .collect();
        let t = OperatorGraph::new(1, entries).unwrap();
        let sys = build_gamma_system(&t, &[0, 1, 2, 3, 4, 5], &vector(&[0.])).unwrap();
        assert_eq!(sys.selection_count(), 1_000_000);
        assert_eq!(
            check_kkm(&sys, &Tolerance::default()).unwrap_err(),
            Error::SelectionCapExceeded {
                cap: DEFAULT_SELECTION_CAP,
                size: 1_000_000
            }
        );
    }

    #[test]
    fn multivalued_uncovered_point() {
        // T(0) = {1, −1}, T(2) = {−1}: Γ(0) = {0}, Γ(2) = [2, ∞); (0, 2) is uncovered
        let t = OperatorGraph::new(
            1,
            vec![
                crate::operator::Entry {
                    point: vector(&[0.]),
                    duals: vec![vector(&[1.]), vector(&[-1.])],
                },
                crate::operator::Entry {
                    point: vector(&[2.]),
                    duals: vec![vector(&[-1.])],
                },
            ],
        )
        .unwrap();
        let tol = Tolerance::default();
        let sys = build_gamma_system(&t, &[0, 1], &vector(&[0.])).unwrap();
        let v = check_kkm(&sys, &tol).unwrap();
        let cx = v.counterexample.unwrap();
        // first selection (dual 1 at 0) is already uncovered on (0, 2)
        assert_eq!(cx.selection, vec![0, 0]);
        assert!(sys.violation(0, &cx.point) > 0.0 && sys.violation(1, &cx.point) > 0.0);
        assert!(!check_fip(&sys, &tol).unwrap().is_feasible());
    }

    fn triangle(duals: [[f64; 2]; 3]) -> GammaSystem {
        let pts = [[0., 0.], [1., 0.], [0.5, 1.]];
        let samples = pts
            .iter()
            .zip(duals.iter())
            .map(|(p, d)| (vector(p), vector(d)))
            .collect();
        let t = OperatorGraph::from_samples(2, samples).unwrap();
        build_gamma_system(&t, &[0, 1, 2], &vector(&[0., 0.])).unwrap()
    }

    #[test]
    fn top_level_cover_without_intersection() {
        let tol = Tolerance::default();
        // Γ(x₁) = {x ≤ 0}, Γ(x₂) = {x ≥ 1}, Γ(x₃) = {y ≤ 1} ⊃ [A]
        let sys = triangle([[1., 0.], [-1., 0.], [0., 1.]]);
        assert!(check_kkm(&sys, &tol).unwrap().holds);
        assert!(!check_fip(&sys, &tol).unwrap().is_feasible());
        let kkm = kkm_failure_in_subsets(&sys, &tol).unwrap().unwrap();
        assert_eq!(kkm.subset, vec![0, 1]);
        let fip = fip_failure_in_subsets(&sys, &tol).unwrap().unwrap();
        assert_eq!(fip.subset, vec![0, 1]);
    }

    #[test]
    fn intersection_without_top_level_cover() {
        let tol = Tolerance::default();
        // Γ(x₁) = {y ≥ 2x}, Γ(x₂) = {y ≥ 2 − 2x}, Γ(x₃) = {y ≥ 1}: they meet
        // only at x₃ and leave (0.5, 0.1) uncovered
        let sys = triangle([[2., -1.], [-2., -1.], [0., -1.]]);
        assert!(!check_kkm(&sys, &tol).unwrap().holds);
        let fip = check_fip(&sys, &tol).unwrap();
        assert!(fip.witness().unwrap().dist(&vector(&[0.5, 1.])) < 1e-9);
        assert!(kkm_failure_in_subsets(&sys, &tol).unwrap().is_some());
        assert!(fip_failure_in_subsets(&sys, &tol).unwrap().is_some());
    }

    #[test]
    fn subsystems_use_their_own_hull() {
        let sys = triangle([[1., 0.], [-1., 0.], [0., 1.]]);
        let sub = sys.subsystem(&[2, 0]).unwrap();
        assert_eq!(sub.base_indices, vec![2, 0]);
        assert_eq!(sub.hull.vertices().len(), 2);
        assert!(sys.subsystem(&[3]).is_err());
        assert!(sys.subsystem(&[]).is_err());

        let tol = Tolerance::default();
        let mono = build_gamma_system(
            &OperatorGraph::from_samples(
                1,
                vec![
                    (vector(&[0.]), vector(&[0.])),
                    (vector(&[1.]), vector(&[1.])),
                ],
            )
            .unwrap(),
            &[0, 1],
            &vector(&[0.3]),
        )
        .unwrap();
        assert!(kkm_failure_in_subsets(&mono, &tol).unwrap().is_none());
        assert!(fip_failure_in_subsets(&mono, &tol).unwrap().is_none());
    }
}
