//! Dense two-phase tableau simplex for the small linear programs behind every
//! feasibility decision.
//!
//! Variables are non-negative. Rows are scaled to unit max-norm before
//! solving, and pivoting follows Bland's rule, so degenerate problems (which
//! are the norm for hull-membership questions) cannot cycle.

use crate::error::{Error, Result};

const PIVOT_EPS: f64 = 1e-11;
const COST_EPS: f64 = 1e-12;
const FEAS_TOL: f64 = 1e-9;
const MAX_PIVOTS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub(crate) struct Row {
    pub coeffs: Vec<f64>,
    pub rel: Relation,
    pub rhs: f64,
}

/// maximize `objective · x` subject to `rows`, `x ≥ 0`.
#[derive(Debug, Clone)]
pub(crate) struct LinearProgram {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible { residual: f64 },
    Unbounded,
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        LinearProgram {
            num_vars,
            objective: vec![0.0; num_vars],
            rows: Vec::new(),
        }
    }

    pub fn add_row(&mut self, coeffs: Vec<f64>, rel: Relation, rhs: f64) {
        debug_assert_eq!(coeffs.len(), self.num_vars);
        self.rows.push(Row { coeffs, rel, rhs });
    }

    pub fn solve(&self) -> Result<LpOutcome> {
        Tableau::build(self)?.run(&self.objective)
    }
}

struct Tableau {
    /// m rows of `width + 1` entries, the last being the right-hand side.
    cells: Vec<Vec<f64>>,
    basis: Vec<usize>,
    num_vars: usize,
    width: usize,
    first_artificial: usize,
    infeasible_row: Option<f64>,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Result<Tableau> {
        let mut rows: Vec<(Vec<f64>, Relation, f64)> = Vec::with_capacity(lp.rows.len());
        let mut infeasible_row = None;
        for row in &lp.rows {
            if row.coeffs.iter().chain([&row.rhs]).any(|c| !c.is_finite()) {
                return Err(Error::NonFinite("linear program row"));
            }
            let scale = row.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
            if scale == 0.0 {
                // 0 (rel) rhs: either vacuous or a contradiction
                let violated = match row.rel {
                    Relation::Le => row.rhs < -FEAS_TOL,
                    Relation::Ge => row.rhs > FEAS_TOL,
                    Relation::Eq => row.rhs.abs() > FEAS_TOL,
                };
                if violated {
                    let r: f64 = infeasible_row.unwrap_or(0.0);
                    infeasible_row = Some(r.max(row.rhs.abs()));
                }
                continue;
            }
            let mut coeffs: Vec<f64> = row.coeffs.iter().map(|c| c / scale).collect();
            let mut rhs = row.rhs / scale;
            let mut rel = row.rel;
            if rhs < 0.0 {
                coeffs.iter_mut().for_each(|c| *c = -*c);
                rhs = -rhs;
                rel = match rel {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
            }
            rows.push((coeffs, rel, rhs));
        }

        let n = lp.num_vars;
        let num_slack = rows.iter().filter(|r| r.1 != Relation::Eq).count();
        let num_art = rows.iter().filter(|r| r.1 != Relation::Le).count();
        let first_artificial = n + num_slack;
        let width = first_artificial + num_art;

        let mut cells = Vec::with_capacity(rows.len());
        let mut basis = Vec::with_capacity(rows.len());
        let mut slack_col = n;
        let mut art_col = first_artificial;
        for (coeffs, rel, rhs) in rows {
            let mut cell = vec![0.0; width + 1];
            cell[..n].copy_from_slice(&coeffs);
            cell[width] = rhs;
            match rel {
                Relation::Le => {
                    cell[slack_col] = 1.0;
                    basis.push(slack_col);
                    slack_col += 1;
                }
                Relation::Ge => {
                    cell[slack_col] = -1.0;
                    slack_col += 1;
                    cell[art_col] = 1.0;
                    basis.push(art_col);
                    art_col += 1;
                }
                Relation::Eq => {
                    cell[art_col] = 1.0;
                    basis.push(art_col);
                    art_col += 1;
                }
            }
            cells.push(cell);
        }
        Ok(Tableau {
            cells,
            basis,
            num_vars: n,
            width,
            first_artificial,
            infeasible_row,
        })
    }

    fn run(mut self, objective: &[f64]) -> Result<LpOutcome> {
        if let Some(residual) = self.infeasible_row {
            return Ok(LpOutcome::Infeasible { residual });
        }

        if self.first_artificial < self.width {
            let mut phase_one = vec![0.0; self.width];
            phase_one[self.first_artificial..]
                .iter_mut()
                .for_each(|c| *c = -1.0);
            let bounded = self.optimize(&phase_one, self.width)?;
            debug_assert!(bounded, "phase one is bounded below by zero");
            let residual: f64 = self
                .basis
                .iter()
                .zip(&self.cells)
                .filter(|(b, _)| **b >= self.first_artificial)
                .map(|(_, row)| row[self.width])
                .sum();
            if residual > FEAS_TOL {
                return Ok(LpOutcome::Infeasible { residual });
            }
            self.evict_artificials();
        }

        let mut cost = vec![0.0; self.width];
        cost[..self.num_vars].copy_from_slice(objective);
        if !self.optimize(&cost, self.first_artificial)? {
            return Ok(LpOutcome::Unbounded);
        }
        let mut x = vec![0.0; self.num_vars];
        for (row, &b) in self.cells.iter().zip(&self.basis) {
            if b < self.num_vars {
                x[b] = row[self.width].max(0.0);
            }
        }
        let value = x.iter().zip(objective).map(|(a, c)| a * c).sum();
        Ok(LpOutcome::Optimal { x, value })
    }

    /// Maximizes `cost · x` over columns `< active`. Returns false when
    /// unbounded.
    fn optimize(&mut self, cost: &[f64], active: usize) -> Result<bool> {
        for _ in 0..MAX_PIVOTS {
            let Some(col) = self.entering(cost, active) else {
                return Ok(true);
            };
            let Some(row) = self.leaving(col) else {
                return Ok(false);
            };
            self.pivot(row, col);
        }
        Err(Error::Internal("simplex pivot limit reached".into()))
    }

    fn entering(&self, cost: &[f64], active: usize) -> Option<usize> {
        (0..active).find(|&j| {
            if self.basis.contains(&j) {
                return false;
            }
            let mut reduced = cost[j];
            for (row, &b) in self.cells.iter().zip(&self.basis) {
                reduced -= cost[b] * row[j];
            }
            reduced > COST_EPS
        })
    }

    fn leaving(&self, col: usize) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, row) in self.cells.iter().enumerate() {
            let a = row[col];
            if a <= PIVOT_EPS {
                continue;
            }
            let ratio = row[self.width].max(0.0) / a;
            best = match best {
                None => Some((i, ratio)),
                Some((bi, br)) => {
                    if ratio < br - 1e-14 || (ratio <= br + 1e-14 && self.basis[i] < self.basis[bi])
                    {
                        Some((i, ratio))
                    } else {
                        Some((bi, br))
                    }
                }
            };
        }
        best.map(|(i, _)| i)
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let inv = 1.0 / self.cells[r][c];
        for v in self.cells[r].iter_mut() {
            *v *= inv;
        }
        self.cells[r][c] = 1.0;
        let pivot_row = self.cells[r].clone();
        for (i, row) in self.cells.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f == 0.0 {
                continue;
            }
            for (v, p) in row.iter_mut().zip(&pivot_row) {
                *v -= f * p;
            }
            row[c] = 0.0;
        }
        self.basis[r] = c;
    }

    /// Pivots zero-valued artificials out of the basis; rows where that is
    /// impossible are linearly redundant and are dropped.
    fn evict_artificials(&mut self) {
        let mut i = 0;
        while i < self.cells.len() {
            if self.basis[i] < self.first_artificial {
                i += 1;
                continue;
            }
            let col = (0..self.first_artificial)
                .filter(|j| !self.basis.contains(j))
                .max_by(|&a, &b| {
                    self.cells[i][a]
                        .abs()
                        .total_cmp(&self.cells[i][b].abs())
                        .then(b.cmp(&a))
                })
                .filter(|&j| self.cells[i][j].abs() > PIVOT_EPS);
            match col {
                Some(j) => {
                    // the artificial sits at (near) zero; pin it so the pivot
                    // cannot push other right-hand sides negative
                    let w = self.width;
                    self.cells[i][w] = 0.0;
                    self.pivot(i, j);
                    i += 1;
                }
                None => {
                    self.cells.remove(i);
                    self.basis.remove(i);
                }
            }
        }
    }
}
