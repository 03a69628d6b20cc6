//! Constructive intersection point for a KKM system of convex sets.
//!
//! With `G_i = Γ(x_i) ∩ [A]`, the point is built by induction on the base
//! set: every leave-one-out subsystem supplies a point `y_j ∈ ⋂_{i≠j} G_i`,
//! and `f(y) = max_i d(y, G_i)` is then minimized over `conv{y_j}`, where
//! the KKM property forces the minimum to be zero.
//!
//! The minimax step is a Polyak subgradient method. Since the optimal value
//! is known to be zero and each distance has a unit-norm subgradient, a step
//! from `y` along the farthest set's subgradient with length `f(y)` lands
//! exactly on that set's projection; the iterate is then projected back onto
//! `conv{y_j}`.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::gamma::GammaSystem;
use crate::linalg::Vector;
use crate::polyhedra::{project_onto, Tolerance, VPolytope};

pub const DEFAULT_MAX_ITERS: usize = 20_000;

/// Outcome of [`constructive_fip_report`].
#[derive(Debug, Clone, PartialEq)]
pub struct FipPoint {
    pub point: Vector,
    /// `max_i d(point, G_i)`
    pub f: f64,
    /// Minimax iterations summed over all subsystems.
    pub iterations: usize,
}

/// A point of `[A] ∩ ⋂ Γ(x_i)`; see [`constructive_fip_report`].
pub fn constructive_fip(sys: &GammaSystem, tol: &Tolerance, max_iters: usize) -> Result<Vector> {
    constructive_fip_report(sys, tol, max_iters).map(|r| r.point)
}

/// Runs the inductive construction. Only meaningful when the system is KKM.
///
/// Each minimax stage stops once `f ≤ fip_tol` and the iterate satisfies every
/// Γ constraint of the stage within `eq_tol`; `max_iters` bounds every stage.
pub fn constructive_fip_report(
    sys: &GammaSystem,
    tol: &Tolerance,
    max_iters: usize,
) -> Result<FipPoint> {
    if sys.is_empty() {
        return Err(Error::Empty("base set"));
    }
    if sys.len() > 20 {
        return Err(Error::InvalidSpec(format!(
            "constructive search supports at most 20 base points, got {}",
            sys.len()
        )));
    }
    let mut search = Search {
        sys,
        tol,
        max_iters,
        memo: HashMap::new(),
        iterations: 0,
    };
    let full = (1u32 << sys.len()) - 1;
    let point = search.solve(full)?;
    let f = search.objective(full, &point)?.0;
    Ok(FipPoint {
        point,
        f,
        iterations: search.iterations,
    })
}

struct Search<'a> {
    sys: &'a GammaSystem,
    tol: &'a Tolerance,
    max_iters: usize,
    /// leave-one-out results keyed by base-point bitmask
    memo: HashMap<u32, Vector>,
    iterations: usize,
}

impl Search<'_> {
    fn members(&self, mask: u32) -> Vec<usize> {
        (0..self.sys.len())
            .filter(|i| mask & (1 << i) != 0)
            .collect()
    }

    /// `d(y, G_i)` for every member and the nearest points.
    fn objective(&self, mask: u32, y: &Vector) -> Result<(f64, usize, Vector)> {
        let mut worst = (f64::NEG_INFINITY, usize::MAX, y.clone());
        for i in self.members(mask) {
            let p = project_onto(
                y,
                &self.sys.hull,
                self.sys.polyhedra[i].constraints(),
                self.tol,
            )?;
            if p.distance > worst.0 {
                worst = (p.distance, i, p.nearest);
            }
        }
        Ok(worst)
    }

    fn satisfies_constraints(&self, mask: u32, y: &Vector) -> bool {
        self.members(mask)
            .into_iter()
            .all(|i| self.sys.violation(i, y) <= self.tol.eq_tol)
    }

    fn solve(&mut self, mask: u32) -> Result<Vector> {
        if let Some(y) = self.memo.get(&mask) {
            return Ok(y.clone());
        }
        let members = self.members(mask);
        let y = if members.len() == 1 {
            let i = members[0];
            project_onto(
                &self.sys.base_points[i],
                &self.sys.hull,
                self.sys.polyhedra[i].constraints(),
                self.tol,
            )?
            .nearest
        } else {
            let mut corners = Vec::with_capacity(members.len());
            for &j in &members {
                corners.push(self.solve(mask & !(1 << j))?);
            }
            self.minimax(mask, corners)?
        };
        self.memo.insert(mask, y.clone());
        Ok(y)
    }

    fn minimax(&mut self, mask: u32, corners: Vec<Vector>) -> Result<Vector> {
        let k = VPolytope::new(corners)?;
        // start from the best corner
        let mut y = k.vertices()[0].clone();
        let mut best_f = f64::INFINITY;
        for c in k.vertices() {
            let f = self.objective(mask, c)?.0;
            if f < best_f {
                best_f = f;
                y = c.clone();
            }
        }
        let mut best = y.clone();
        for _ in 0..self.max_iters {
            let (f, _, nearest) = self.objective(mask, &y)?;
            if f < best_f || (f == best_f && self.satisfies_constraints(mask, &y)) {
                best_f = f;
                best = y.clone();
            }
            if f <= self.tol.fip_tol && self.satisfies_constraints(mask, &y) {
                return Ok(y);
            }
            self.iterations += 1;
            // Polyak step with known optimum 0 reaches the farthest set's
            // projection; then return to conv{y_j}
            let next = project_onto(&nearest, &k, &[], self.tol)?.nearest;
            if next.dist_inf(&y) == 0.0 {
                break;
            }
            y = next;
        }
        if best_f <= self.tol.fip_tol && self.satisfies_constraints(mask, &best) {
            return Ok(best);
        }
        if mask.count_ones() as usize == self.sys.len() {
            Err(Error::FipNotConverged {
                f: best_f,
                iterations: self.iterations,
            })
        } else {
            Err(Error::FipInvariantBreach {
                subset: self.members(mask),
                f: best_f,
            })
        }
    }
}
