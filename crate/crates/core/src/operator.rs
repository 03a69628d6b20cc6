//! Finite multi-valued operators `T ⊂ Rⁿ × Rⁿ` and their monotonicity
//! classifications.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{check_dim, raw_dot, Vector};
use crate::polyhedra::{contains, Tolerance, VPolytope};

/// A point together with the duals attached to it. An empty dual list
/// places the point outside the domain `D(T)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub point: Vector,
    pub duals: Vec<Vector>,
}

/// The graph of a set-valued operator, with pairwise distinct points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorGraph {
    dim: usize,
    entries: Vec<Entry>,
}

impl OperatorGraph {
    /// Builds a graph, merging entries whose points agree within the default
    /// `eq_tol`.
    pub fn new(dim: usize, entries: Vec<Entry>) -> Result<Self> {
        Self::with_tolerance(dim, entries, &Tolerance::default())
    }

    /// Builds a graph, merging entries whose points agree within `tol.eq_tol`
    /// (max-norm). Merged dual lists are concatenated and deduplicated under
    /// the same tolerance. The first occurrence fixes the entry position.
    pub fn with_tolerance(dim: usize, raw: Vec<Entry>, tol: &Tolerance) -> Result<Self> {
        let mut entries: Vec<Entry> = Vec::with_capacity(raw.len());
        for entry in raw {
            check_dim(dim, entry.point.dim())?;
            for d in &entry.duals {
                check_dim(dim, d.dim())?;
            }
            let slot = entries
                .iter()
                .position(|e| e.point.dist_inf(&entry.point) <= tol.eq_tol);
            let target = match slot {
                Some(i) => &mut entries[i],
                None => {
                    entries.push(Entry {
                        point: entry.point,
                        duals: Vec::new(),
                    });
                    entries.last_mut().expect("just pushed")
                }
            };
            for d in entry.duals {
                if !target.duals.iter().any(|e| e.dist_inf(&d) <= tol.eq_tol) {
                    target.duals.push(d);
                }
            }
        }
        Ok(OperatorGraph { dim, entries })
    }

    /// Single-valued samples `x_i ↦ f(x_i)`.
    pub fn from_samples(dim: usize, samples: Vec<(Vector, Vector)>) -> Result<Self> {
        let entries = samples
            .into_iter()
            .map(|(point, dual)| Entry {
                point,
                duals: vec![dual],
            })
            .collect();
        OperatorGraph::new(dim, entries)
    }

    pub fn empty(dim: usize) -> Self {
        OperatorGraph {
            dim,
            entries: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn entry(&self, index: usize) -> Result<&Entry> {
        self.entries.get(index).ok_or(Error::IndexOutOfRange {
            index,
            len: self.entries.len(),
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Indices of entries with at least one dual.
    pub fn domain(&self) -> Vec<usize> {
        (0..self.entries.len())
            .filter(|&i| !self.entries[i].duals.is_empty())
            .collect()
    }

    /// Number of `(point, dual)` pairs in the graph.
    pub fn num_pairs(&self) -> usize {
        self.entries.iter().map(|e| e.duals.len()).sum()
    }

    /// Keeps only the given entries, in the given order.
    pub fn subgraph(&self, indices: &[usize]) -> Result<OperatorGraph> {
        let entries = indices
            .iter()
            .map(|&i| self.entry(i).cloned())
            .collect::<Result<Vec<_>>>()?;
        Ok(OperatorGraph {
            dim: self.dim,
            entries,
        })
    }

    /// Scale of the data: largest coordinate among points and duals.
    pub fn magnitude(&self) -> f64 {
        self.entries
            .iter()
            .flat_map(|e| std::iter::once(&e.point).chain(&e.duals))
            .fold(0.0, |m, v| m.max(v.max_abs()))
    }
}

/// One element `(x, x*)` of the graph, located by entry and dual index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphElement {
    pub entry: usize,
    pub dual_index: usize,
    pub point: Vector,
    pub dual: Vector,
}

impl GraphElement {
    pub fn of(t: &OperatorGraph, entry: usize, dual_index: usize) -> Result<Self> {
        let e = t.entry(entry)?;
        let dual = e
            .duals
            .get(dual_index)
            .ok_or(Error::IndexOutOfRange {
                index: dual_index,
                len: e.duals.len(),
            })?
            .clone();
        Ok(GraphElement {
            entry,
            dual_index,
            point: e.point.clone(),
            dual,
        })
    }
}

/// `⟨y* − x*, y − x⟩`
pub fn monotonicity_pairing(x: &GraphElement, y: &GraphElement) -> f64 {
    let dd = y.dual.sub(&x.dual);
    let dp = y.point.sub(&x.point);
    raw_dot(&dd, &dp)
}

/// `max{⟨x*, x − y⟩, ⟨y*, y − x⟩}`
pub fn quasimonotonicity_value(x: &GraphElement, y: &GraphElement) -> f64 {
    let xy = x.point.sub(&y.point);
    let yx = y.point.sub(&x.point);
    raw_dot(&x.dual, &xy).max(raw_dot(&y.dual, &yx))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub first: GraphElement,
    pub second: GraphElement,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairVerdict {
    pub holds: bool,
    pub violation: Option<Violation>,
}

impl PairVerdict {
    pub fn holding() -> Self {
        PairVerdict {
            holds: true,
            violation: None,
        }
    }
}

/// Minimum of `value` over unordered entry pairs and all dual selections.
/// Ties keep the lexicographically first `(i, di, j, dj)`.
fn worst_pair(
    t: &OperatorGraph,
    tol: &Tolerance,
    value: impl Fn(&GraphElement, &GraphElement) -> f64,
) -> PairVerdict {
    let mut worst: Option<(f64, (usize, usize, usize, usize))> = None;
    let n = t.entries.len();
    for i in 0..n {
        for j in i + 1..n {
            for di in 0..t.entries[i].duals.len() {
                for dj in 0..t.entries[j].duals.len() {
                    let x = GraphElement::of(t, i, di).expect("valid indices");
                    let y = GraphElement::of(t, j, dj).expect("valid indices");
                    let v = value(&x, &y);
                    if worst.is_none_or(|(w, _)| v < w) {
                        worst = Some((v, (i, di, j, dj)));
                    }
                }
            }
        }
    }
    match worst {
        Some((v, (i, di, j, dj))) if v < -tol.eq_tol => PairVerdict {
            holds: false,
            violation: Some(Violation {
                first: GraphElement::of(t, i, di).expect("valid indices"),
                second: GraphElement::of(t, j, dj).expect("valid indices"),
                value: v,
            }),
        },
        _ => PairVerdict::holding(),
    }
}

/// `⟨y* − x*, y − x⟩ ≥ −eq_tol` for every pair of graph elements. A failing
/// verdict carries the most violating pair.
pub fn is_monotone(t: &OperatorGraph, tol: &Tolerance) -> PairVerdict {
    worst_pair(t, tol, monotonicity_pairing)
}

/// `max{⟨x*, x − y⟩, ⟨y*, y − x⟩} ≥ −eq_tol` for every pair of graph
/// elements.
pub fn is_quasimonotone(t: &OperatorGraph, tol: &Tolerance) -> PairVerdict {
    worst_pair(t, tol, quasimonotonicity_value)
}

/// The operator `x ↦ T(x) − x*`.
pub fn shift(t: &OperatorGraph, xstar: &Vector) -> Result<OperatorGraph> {
    check_dim(t.dim, xstar.dim())?;
    let entries = t
        .entries
        .iter()
        .map(|e| Entry {
            point: e.point.clone(),
            duals: e.duals.iter().map(|d| d.sub(xstar)).collect(),
        })
        .collect();
    Ok(OperatorGraph {
        dim: t.dim,
        entries,
    })
}

/// `T ∩ (K × Rⁿ)`: the entries whose point lies in `k`.
pub fn restrict(t: &OperatorGraph, k: &VPolytope, tol: &Tolerance) -> Result<OperatorGraph> {
    check_dim(t.dim, k.dim())?;
    let mut entries = Vec::new();
    for e in &t.entries {
        if contains(k, &[], &e.point, tol)? {
            entries.push(e.clone());
        }
    }
    Ok(OperatorGraph {
        dim: t.dim,
        entries,
    })
}

/// Indices of the entries of `t` whose point lies in `k`.
pub fn restrict_indices(t: &OperatorGraph, k: &VPolytope, tol: &Tolerance) -> Result<Vec<usize>> {
    check_dim(t.dim, k.dim())?;
    let mut kept = Vec::new();
    for (i, e) in t.entries.iter().enumerate() {
        if contains(k, &[], &e.point, tol)? {
            kept.push(i);
        }
    }
    Ok(kept)
}
