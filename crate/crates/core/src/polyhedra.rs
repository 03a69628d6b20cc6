//! Half-spaces, V-polytopes and the feasibility questions asked of them.
//!
//! Every question is posed in barycentric coordinates over the generators
//! of a [`VPolytope`] (`λ ≥ 0`, `Σλ = 1`), so lower-dimensional hulls and
//! repeated or affinely dependent generators need no special handling.
//! Feasibility is decided by a max-slack LP: the returned slack is the best
//! achievable `min_j ⟨a_j, x⟩ − b_j` over the hull, which is what both the
//! non-strict and the strict predicates threshold.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{check_dim, convex_combination, raw_dot, Vector, Weights};
use crate::lp::{LinearProgram, LpOutcome, Relation};
use crate::projection::{min_norm_point, LpOracle, PointOracle};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    NonStrict,
    Strict,
}

/// `{x : ⟨a, x⟩ ≥ b}` or `{x : ⟨a, x⟩ > b}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfSpace {
    normal: Vector,
    offset: f64,
    sense: Sense,
}

impl HalfSpace {
    /// A zero normal is only accepted for the non-strict, `b ≤ 0` case,
    /// which denotes all of Rⁿ.
    pub fn new(normal: Vector, offset: f64, sense: Sense) -> Result<Self> {
        if !offset.is_finite() {
            return Err(Error::NonFinite("half-space offset"));
        }
        if normal.iter().all(|c| *c == 0.0) && (sense == Sense::Strict || offset > 0.0) {
            return Err(Error::Empty(
                "half-space with zero normal denotes the empty set",
            ));
        }
        Ok(HalfSpace {
            normal,
            offset,
            sense,
        })
    }

    pub fn non_strict(normal: Vector, offset: f64) -> Result<Self> {
        HalfSpace::new(normal, offset, Sense::NonStrict)
    }

    pub fn strict(normal: Vector, offset: f64) -> Result<Self> {
        HalfSpace::new(normal, offset, Sense::Strict)
    }

    pub fn normal(&self) -> &Vector {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn dim(&self) -> usize {
        self.normal.dim()
    }

    pub fn is_all_space(&self) -> bool {
        self.normal.iter().all(|c| *c == 0.0)
    }

    /// `⟨a, x⟩ − b`
    pub fn slack(&self, x: &[f64]) -> f64 {
        raw_dot(&self.normal, x) - self.offset
    }

    pub fn with_sense(&self, sense: Sense) -> Result<Self> {
        HalfSpace::new(self.normal.clone(), self.offset, sense)
    }
}

/// Intersection of non-strict half-spaces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HPolyhedron {
    dim: usize,
    constraints: Vec<HalfSpace>,
}

impl HPolyhedron {
    pub fn new(dim: usize, constraints: Vec<HalfSpace>) -> Result<Self> {
        for c in &constraints {
            check_dim(dim, c.dim())?;
            if c.sense == Sense::Strict {
                return Err(Error::InvalidSpec(
                    "polyhedron constraints must be non-strict".into(),
                ));
            }
        }
        Ok(HPolyhedron { dim, constraints })
    }

    /// All of Rⁿ.
    pub fn whole_space(dim: usize) -> Self {
        HPolyhedron {
            dim,
            constraints: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn constraints(&self) -> &[HalfSpace] {
        &self.constraints
    }

    pub fn min_slack(&self, x: &[f64]) -> Option<f64> {
        min_slack(&self.constraints, x)
    }
}

/// Convex hull of a non-empty list of generators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VPolytope {
    dim: usize,
    vertices: Vec<Vector>,
}

impl VPolytope {
    pub fn new(vertices: Vec<Vector>) -> Result<Self> {
        let first = vertices
            .first()
            .ok_or(Error::Empty("polytope generators"))?;
        let dim = first.dim();
        for v in &vertices {
            check_dim(dim, v.dim())?;
        }
        Ok(VPolytope { dim, vertices })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Vector] {
        &self.vertices
    }

    pub fn point(&self, w: &Weights) -> Result<Vector> {
        convex_combination(&self.vertices, w)
    }
}

/// Comparison tolerances shared by every decision procedure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    /// Slack accepted on non-strict comparisons.
    pub eq_tol: f64,
    /// Minimum slack certifying a strict inequality.
    pub strict_margin: f64,
    /// Accuracy of projected distances.
    pub qp_tol: f64,
    /// Target of the constructive intersection search.
    pub fip_tol: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            eq_tol: 1e-9,
            strict_margin: 1e-7,
            qp_tol: 1e-8,
            fip_tol: 1e-6,
        }
    }
}

impl Tolerance {
    pub fn validate(&self) -> Result<()> {
        let ok = self.eq_tol > 0.0
            && self.eq_tol < self.strict_margin
            && self.qp_tol > 0.0
            && self.fip_tol > 0.0
            && [self.eq_tol, self.strict_margin, self.qp_tol, self.fip_tol]
                .iter()
                .all(|t| t.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidSpec(format!(
                "tolerances must satisfy 0 < eq_tol < strict_margin, qp_tol > 0, fip_tol > 0: {self:?}"
            )))
        }
    }
}

/// Partial tolerance settings, as given on a command line or in a config.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eq_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strict_margin: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qp_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fip_tol: Option<f64>,
}

impl ToleranceOverrides {
    pub fn apply(&self, base: Tolerance) -> Result<Tolerance> {
        let tol = Tolerance {
            eq_tol: self.eq_tol.unwrap_or(base.eq_tol),
            strict_margin: self.strict_margin.unwrap_or(base.strict_margin),
            qp_tol: self.qp_tol.unwrap_or(base.qp_tol),
            fip_tol: self.fip_tol.unwrap_or(base.fip_tol),
        };
        tol.validate()?;
        Ok(tol)
    }
}

/// Constraints involved in an infeasibility, with the best slack reached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    /// Indices of the constraints tight at the max-slack optimum.
    pub active: Vec<usize>,
    /// `max_x min_j ⟨a_j, x⟩ − b_j` over the hull.
    pub max_slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum FeasibilityResult {
    Feasible {
        witness: Vector,
        weights: Weights,
        /// Smallest constraint slack at the witness; absent when there are
        /// no constraints.
        slack: Option<f64>,
    },
    Infeasible(Certificate),
}

impl FeasibilityResult {
    pub fn is_feasible(&self) -> bool {
        matches!(self, FeasibilityResult::Feasible { .. })
    }

    pub fn witness(&self) -> Option<&Vector> {
        match self {
            FeasibilityResult::Feasible { witness, .. } => Some(witness),
            FeasibilityResult::Infeasible(_) => None,
        }
    }

    pub fn certificate(&self) -> Option<&Certificate> {
        match self {
            FeasibilityResult::Feasible { .. } => None,
            FeasibilityResult::Infeasible(c) => Some(c),
        }
    }

    fn unconstrained(hull: &VPolytope) -> Self {
        FeasibilityResult::Feasible {
            witness: hull.vertices[0].clone(),
            weights: Weights::vertex(hull.vertices.len(), 0),
            slack: None,
        }
    }
}

fn min_slack(cons: &[HalfSpace], x: &[f64]) -> Option<f64> {
    cons.iter().map(|c| c.slack(x)).min_by(f64::total_cmp)
}

fn check_constraint_dims(hull: &VPolytope, cons: &[HalfSpace]) -> Result<()> {
    cons.iter().try_for_each(|c| check_dim(hull.dim, c.dim()))
}

struct MaxSlack {
    weights: Weights,
    point: Vector,
    slack: f64,
    active: Vec<usize>,
}

/// maximize s subject to `⟨a_j, Σλ_i v_i⟩ − b_j ≥ s` over the simplex in λ.
fn max_slack(hull: &VPolytope, cons: &[HalfSpace], active_tol: f64) -> Result<MaxSlack> {
    debug_assert!(!cons.is_empty());
    let m = hull.vertices.len();
    // pairing of every constraint normal with every generator
    let pairing: Vec<Vec<f64>> = cons
        .iter()
        .map(|c| {
            hull.vertices
                .iter()
                .map(|v| raw_dot(&c.normal, v))
                .collect()
        })
        .collect();
    // s = s' − shift with s' ≥ 0; shift exceeds any achievable violation
    let shift = cons
        .iter()
        .zip(&pairing)
        .map(|(c, row)| c.offset.abs() + row.iter().fold(0.0f64, |a, p| a.max(p.abs())))
        .fold(0.0f64, f64::max)
        + 1.0;

    let mut lp = LinearProgram::new(m + 1);
    lp.objective[m] = 1.0;
    let mut simplex_row = vec![1.0; m + 1];
    simplex_row[m] = 0.0;
    lp.add_row(simplex_row, Relation::Eq, 1.0);
    for (c, row) in cons.iter().zip(&pairing) {
        let mut coeffs = row.clone();
        coeffs.push(-1.0);
        lp.add_row(coeffs, Relation::Ge, c.offset - shift);
    }
    let lambda = match lp.solve()? {
        LpOutcome::Optimal { mut x, .. } => {
            x.truncate(m);
            x
        }
        other => {
            return Err(Error::Internal(format!(
                "max-slack program is always feasible and bounded, got {other:?}"
            )))
        }
    };
    let weights = Weights::normalized(lambda)?;
    let point = hull.point(&weights)?;
    let slacks: Vec<f64> = cons.iter().map(|c| c.slack(&point)).collect();
    let slack = slacks.iter().copied().fold(f64::INFINITY, f64::min);
    let active = slacks
        .iter()
        .enumerate()
        .filter(|(_, s)| **s <= slack + active_tol)
        .map(|(j, _)| j)
        .collect();
    Ok(MaxSlack {
        weights,
        point,
        slack,
        active,
    })
}

/// Is there a point of `hull` satisfying every constraint within `eq_tol`?
///
/// Constraint senses are ignored: the closure of each half-space is used.
pub fn feasible_in_hull(
    hull: &VPolytope,
    cons: &[HalfSpace],
    tol: &Tolerance,
) -> Result<FeasibilityResult> {
    check_constraint_dims(hull, cons)?;
    if cons.is_empty() {
        return Ok(FeasibilityResult::unconstrained(hull));
    }
    let best = max_slack(hull, cons, tol.eq_tol)?;
    if best.slack >= -tol.eq_tol {
        Ok(FeasibilityResult::Feasible {
            witness: best.point,
            weights: best.weights,
            slack: Some(best.slack),
        })
    } else {
        Ok(FeasibilityResult::Infeasible(Certificate {
            active: best.active,
            max_slack: best.slack,
        }))
    }
}

/// Is there a point of `hull` satisfying every constraint strictly, with
/// slack at least `strict_margin`?
///
/// Slacks between `eq_tol` and `strict_margin` are reported as infeasible and
/// logged as near-degenerate.
pub fn strictly_feasible_in_hull(
    hull: &VPolytope,
    cons: &[HalfSpace],
    tol: &Tolerance,
) -> Result<FeasibilityResult> {
    check_constraint_dims(hull, cons)?;
    if cons.is_empty() {
        return Ok(FeasibilityResult::unconstrained(hull));
    }
    let best = max_slack(hull, cons, tol.eq_tol)?;
    if best.slack >= tol.strict_margin {
        return Ok(FeasibilityResult::Feasible {
            witness: best.point,
            weights: best.weights,
            slack: Some(best.slack),
        });
    }
    if best.slack > tol.eq_tol {
        warn!(
            "near-degenerate strict feasibility: max slack {:e} lies in ({:e}, {:e})",
            best.slack, tol.eq_tol, tol.strict_margin
        );
    }
    Ok(FeasibilityResult::Infeasible(Certificate {
        active: best.active,
        max_slack: best.slack,
    }))
}

/// Membership of `p` in `hull ∩ cons`, both within `eq_tol`.
pub fn contains(hull: &VPolytope, cons: &[HalfSpace], p: &Vector, tol: &Tolerance) -> Result<bool> {
    check_constraint_dims(hull, cons)?;
    check_dim(hull.dim, p.dim())?;
    if min_slack(cons, p).is_some_and(|s| s < -tol.eq_tol) {
        return Ok(false);
    }
    Ok(hull_residual(hull, p)? <= tol.eq_tol)
}

/// `min over λ in the simplex of ‖Σλ_i v_i − p‖_∞`.
pub(crate) fn hull_residual(hull: &VPolytope, p: &Vector) -> Result<f64> {
    let m = hull.vertices.len();
    if m == 1 {
        return Ok(hull.vertices[0].dist_inf(p));
    }
    let mut lp = LinearProgram::new(m + 1);
    lp.objective[m] = -1.0;
    let mut simplex_row = vec![1.0; m + 1];
    simplex_row[m] = 0.0;
    lp.add_row(simplex_row, Relation::Eq, 1.0);
    for k in 0..hull.dim {
        let mut coords: Vec<f64> = hull.vertices.iter().map(|v| v[k]).collect();
        coords.push(-1.0);
        lp.add_row(coords.clone(), Relation::Le, p[k]);
        coords[m] = 1.0;
        lp.add_row(coords, Relation::Ge, p[k]);
    }
    match lp.solve()? {
        LpOutcome::Optimal { x, .. } => {
            let w = Weights::normalized(x[..m].to_vec())?;
            Ok(hull.point(&w)?.dist_inf(p))
        }
        other => Err(Error::Internal(format!(
            "hull residual program is always feasible and bounded, got {other:?}"
        ))),
    }
}

/// Nearest point of a polytope and its Euclidean distance.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub distance: f64,
    pub nearest: Vector,
}

/// Euclidean projection of `y` onto `hull ∩ cons`.
///
/// The distance is accurate to `qp_tol`. Fails with [`Error::EmptyTarget`]
/// when the set is empty.
pub fn project_onto(
    y: &Vector,
    hull: &VPolytope,
    cons: &[HalfSpace],
    tol: &Tolerance,
) -> Result<Projection> {
    check_constraint_dims(hull, cons)?;
    check_dim(hull.dim, y.dim())?;
    if cons.is_empty() {
        min_norm_point(&PointOracle::new(&hull.vertices), y, tol.qp_tol)
    } else {
        min_norm_point(&LpOracle::new(hull, cons), y, tol.qp_tol)
    }
}

/// Minimizes `⟨direction, x⟩` over `hull ∩ cons`.
pub(crate) fn minimize_linear(
    hull: &VPolytope,
    cons: &[HalfSpace],
    direction: &[f64],
) -> Result<Vector> {
    let m = hull.vertices.len();
    let mut lp = LinearProgram::new(m);
    lp.objective = hull
        .vertices
        .iter()
        .map(|v| -raw_dot(direction, v))
        .collect();
    lp.add_row(vec![1.0; m], Relation::Eq, 1.0);
    for c in cons {
        let coeffs = hull
            .vertices
            .iter()
            .map(|v| raw_dot(&c.normal, v))
            .collect();
        lp.add_row(coeffs, Relation::Ge, c.offset);
    }
    match lp.solve()? {
        LpOutcome::Optimal { x, .. } => hull.point(&Weights::normalized(x)?),
        LpOutcome::Infeasible { .. } => Err(Error::EmptyTarget),
        LpOutcome::Unbounded => Err(Error::Internal(
            "linear minimization over a polytope is bounded".into(),
        )),
    }
}
