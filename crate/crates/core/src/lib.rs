//! Finite monotone and quasimonotone operators, their KKM maps, and finite
//! Minty variational inequalities, with decision procedures that return
//! checkable witnesses.

pub mod cli;
pub mod error;
pub mod fip;
pub mod gamma;
pub mod linalg;
mod lp;
pub mod minty;
pub mod operator;
pub mod polyhedra;
mod projection;
pub mod randgen;
pub mod render;
pub mod suite;

pub use error::{Error, Result};
pub use fip::{constructive_fip, constructive_fip_report, FipPoint};
pub use gamma::{
    build_gamma_system, check_fip, check_kkm, check_kkm_capped, fip_failure_in_subsets,
    gamma_polyhedron, kkm_failure_in_subsets, GammaSystem, KkmCounterexample, KkmVerdict,
    SubsetFailure, DEFAULT_SELECTION_CAP,
};
pub use linalg::{convex_combination, dot, Vector, Weights};
pub use minty::{
    classify_via_mvi, construct_witness, solve_finite_mvi, solve_mvi, DualPair,
    MonotonicityWitness, MviProblem,
};
pub use operator::{
    is_monotone, is_quasimonotone, restrict, shift, GraphElement, OperatorGraph, PairVerdict,
    Violation,
};
pub use polyhedra::{
    contains, feasible_in_hull, project_onto, strictly_feasible_in_hull, Certificate,
    FeasibilityResult, HPolyhedron, HalfSpace, Projection, Sense, Tolerance, ToleranceOverrides,
    VPolytope,
};
pub use randgen::{generate, Family, GenSpec};
