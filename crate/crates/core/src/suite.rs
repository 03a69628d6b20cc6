//! The equivalence battery: every generated instance is pushed through each
//! characterization of monotonicity and the verdicts are cross-checked.
//!
//! Instance `k` of a suite uses generator seed `seed + k`; each property draws
//! from its own ChaCha8 stream of that seed, so results do not depend on which
//! properties run or in which order. Instances run on worker threads and are
//! aggregated in seed order.

use std::sync::atomic::{AtomicUsize, Ordering};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fip::{constructive_fip_report, DEFAULT_MAX_ITERS};
use crate::gamma::{
    build_gamma_system, check_fip, check_kkm, fip_failure_in_subsets, kkm_failure_in_subsets,
};
use crate::linalg::{convex_combination, sample_simplex_weights, Vector};
use crate::minty::{classify_via_mvi, construct_witness, solve_finite_mvi, DualPair};
use crate::operator::{is_monotone, is_quasimonotone, shift, OperatorGraph};
use crate::polyhedra::{contains, Tolerance, ToleranceOverrides};
use crate::randgen::{generate, random_shift, random_subset, rng_from_seed, Family, GenSpec};

/// One line of a suite config: `trials` instances of a generator family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteSpec {
    pub family: Family,
    pub dim: usize,
    pub num_points: usize,
    #[serde(default)]
    pub magnitude: f64,
    pub seed: u64,
    pub trials: usize,
}

impl SuiteSpec {
    pub fn instance(&self, k: usize) -> GenSpec {
        GenSpec {
            dim: self.dim,
            num_points: self.num_points,
            family: self.family,
            magnitude: self.magnitude,
            seed: self.seed.wrapping_add(k as u64),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    pub suites: Vec<SuiteSpec>,
    #[serde(default)]
    pub tolerance: ToleranceOverrides,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    /// The instance could be generated.
    Generation,
    /// KKM over every subset of `A` ⇔ intersection over every subset of `A`.
    KkmFip,
    /// Monotone: every finite Minty subsystem is solvable.
    MintyForward,
    /// Not monotone: the explicit witness shift gives an unsolvable two-point
    /// subsystem.
    ConverseWitness,
    /// Finite Minty subsystem solvable ⇔ `[A] ∩ ⋂ Γ ≠ ∅`.
    MviFipBridge,
    /// Monotone ⇒ KKM at `x* = 0`; not quasimonotone ⇒ some pair is not KKM.
    KkmChain,
    /// Monotone ⇔ every shift is quasimonotone.
    ShiftCharacterization,
    /// Monotone ⇔ every two-point subsystem is solvable.
    PairwiseCorollary,
    /// The constructive intersection point agrees with the LP.
    ConstructiveFip,
    /// `classify_via_mvi` runs without an internal inconsistency.
    ClassifyViaMvi,
}

impl Property {
    pub const ALL: [Property; 10] = [
        Property::Generation,
        Property::KkmFip,
        Property::MintyForward,
        Property::ConverseWitness,
        Property::MviFipBridge,
        Property::KkmChain,
        Property::ShiftCharacterization,
        Property::PairwiseCorollary,
        Property::ConstructiveFip,
        Property::ClassifyViaMvi,
    ];

    fn stream(self) -> u64 {
        self as u64 + 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Fail { detail: String },
    Skip,
}

impl Outcome {
    fn check(ok: bool, detail: impl FnOnce() -> String) -> Outcome {
        if ok {
            Outcome::Pass
        } else {
            Outcome::Fail { detail: detail() }
        }
    }
}

impl From<Result<Outcome>> for Outcome {
    fn from(r: Result<Outcome>) -> Self {
        r.unwrap_or_else(|e| Outcome::Fail {
            detail: format!("error: {e}"),
        })
    }
}

/// Everything learned from one generated instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceOutcome {
    pub seed: u64,
    pub monotone: bool,
    pub quasimonotone: bool,
    /// Whether the sampled KKM system holds over all its subsets.
    pub kkm_holds: Option<bool>,
    /// Top-level `check_kkm` and `check_fip` disagree on the sampled system.
    pub top_level_mismatch: bool,
    pub outcomes: Vec<(Property, Outcome)>,
}

fn stream_rng(seed: u64, property: Property) -> ChaCha8Rng {
    let mut rng = rng_from_seed(seed);
    rng.set_stream(property.stream());
    rng
}

fn fmt_vec(v: &Vector) -> String {
    format!("{:?}", v.as_slice())
}

/// A shift drawn near the duals of `subset`: a random convex combination of
/// one dual per point plus Gaussian noise at a tenth of the graph's scale.
/// Pure Gaussian shifts almost never land where the KKM verdict flips.
pub fn sample_xstar<R: Rng + ?Sized>(t: &OperatorGraph, subset: &[usize], rng: &mut R) -> Vector {
    let duals: Vec<Vector> = subset
        .iter()
        .map(|&i| {
            let d = &t.entries()[i].duals;
            d[rng.random_range(0..d.len())].clone()
        })
        .collect();
    let w = sample_simplex_weights(duals.len(), rng).expect("non-empty subset");
    let centre = convex_combination(&duals, &w).expect("consistent dims");
    let noise = random_shift(rng, t.dim(), 0.1 * t.magnitude().max(1e-3));
    centre.add(&noise)
}

struct Instance<'a> {
    seed: u64,
    t: &'a OperatorGraph,
    tol: &'a Tolerance,
    monotone: bool,
    quasimonotone: bool,
}

impl Instance<'_> {
    fn rng(&self, p: Property) -> ChaCha8Rng {
        stream_rng(self.seed, p)
    }

    /// Returns the outcome plus (subset-wide KKM verdict, top-level mismatch)
    /// and the system for the constructive check.
    fn kkm_fip(&self) -> Result<(Outcome, bool, bool, crate::gamma::GammaSystem)> {
        let mut rng = self.rng(Property::KkmFip);
        let subset = random_subset(&mut rng, &self.t.domain(), 5);
        let xstar = sample_xstar(self.t, &subset, &mut rng);
        let sys = build_gamma_system(self.t, &subset, &xstar)?;
        let kkm = kkm_failure_in_subsets(&sys, self.tol)?;
        let fip = fip_failure_in_subsets(&sys, self.tol)?;
        let outcome = Outcome::check(kkm.is_none() == fip.is_none(), || {
            format!(
                "subset {subset:?}, x* = {}: KKM failure {:?}, intersection failure {:?}",
                fmt_vec(&xstar),
                kkm.as_ref().map(|f| &f.subset),
                fip.as_ref().map(|f| &f.subset)
            )
        });
        let top = check_kkm(&sys, self.tol)?.holds != check_fip(&sys, self.tol)?.is_feasible();
        Ok((outcome, kkm.is_none(), top, sys))
    }

    fn minty_forward(&self) -> Result<Outcome> {
        if !self.monotone {
            return Ok(Outcome::Skip);
        }
        let mut rng = self.rng(Property::MintyForward);
        let domain = self.t.domain();
        let scale = self.t.magnitude().max(1.0);
        for _ in 0..5 {
            let xstar = random_shift(&mut rng, self.t.dim(), scale);
            for _ in 0..5 {
                let subset = random_subset(&mut rng, &domain, 6);
                if !solve_finite_mvi(self.t, &subset, &xstar, self.tol)?.is_feasible() {
                    return Ok(Outcome::Fail {
                        detail: format!("subset {subset:?} unsolvable at x* = {}", fmt_vec(&xstar)),
                    });
                }
            }
        }
        Ok(Outcome::Pass)
    }

    fn converse_witness(&self) -> Result<Outcome> {
        let verdict = is_monotone(self.t, self.tol);
        let Some(v) = verdict.violation else {
            return Ok(Outcome::Skip);
        };
        let w = construct_witness(&DualPair::from(&v), self.tol)?;
        let (a, b) = (w.a(), w.b());
        if (a - w.delta / 2.0).abs() > 1e-9 || (b + w.delta / 2.0).abs() > 1e-9 {
            return Ok(Outcome::Fail {
                detail: format!(
                    "identities off: a = {a:e}, b = {b:e}, delta = {:e}",
                    w.delta
                ),
            });
        }
        let r = w.confirm(self.tol)?;
        Ok(Outcome::check(!r.is_feasible(), || {
            format!(
                "witness z* = {} (delta {:e}) leaves the two-point problem solvable",
                fmt_vec(&w.zstar),
                w.delta
            )
        }))
    }

    fn mvi_fip_bridge(&self) -> Result<Outcome> {
        let mut rng = self.rng(Property::MviFipBridge);
        let subset = random_subset(&mut rng, &self.t.domain(), 6);
        let xstar = sample_xstar(self.t, &subset, &mut rng);
        let mvi = solve_finite_mvi(self.t, &subset, &xstar, self.tol)?.is_feasible();
        let fip = check_fip(&build_gamma_system(self.t, &subset, &xstar)?, self.tol)?.is_feasible();
        Ok(Outcome::check(mvi == fip, || {
            format!(
                "subset {subset:?}, x* = {}: MVI {mvi}, intersection {fip}",
                fmt_vec(&xstar)
            )
        }))
    }

    fn kkm_chain(&self) -> Result<Outcome> {
        let zero = Vector::zeros(self.t.dim());
        let mut tested = false;
        if self.monotone {
            tested = true;
            let mut rng = self.rng(Property::KkmChain);
            let domain = self.t.domain();
            let mut subsets = vec![domain.clone()];
            subsets.extend((0..3).map(|_| random_subset(&mut rng, &domain, 5)));
            for a in subsets {
                let sys = build_gamma_system(self.t, &a, &zero)?;
                if !check_kkm(&sys, self.tol)?.holds {
                    return Ok(Outcome::Fail {
                        detail: format!("monotone but not KKM at x* = 0 on {a:?}"),
                    });
                }
            }
        }
        if let Some(v) = is_quasimonotone(self.t, self.tol).violation {
            tested = true;
            let pair = [v.first.entry, v.second.entry];
            let sys = build_gamma_system(self.t, &pair, &zero)?;
            if check_kkm(&sys, self.tol)?.holds {
                return Ok(Outcome::Fail {
                    detail: format!(
                        "quasimonotonicity fails on {pair:?} (value {:e}) but the pair is KKM",
                        v.value
                    ),
                });
            }
        }
        Ok(if tested { Outcome::Pass } else { Outcome::Skip })
    }

    fn shift_characterization(&self) -> Result<Outcome> {
        if self.monotone {
            let mut rng = self.rng(Property::ShiftCharacterization);
            let scale = self.t.magnitude().max(1.0);
            for _ in 0..10 {
                let z = random_shift(&mut rng, self.t.dim(), scale);
                if !is_quasimonotone(&shift(self.t, &z)?, self.tol).holds {
                    return Ok(Outcome::Fail {
                        detail: format!("shift by {} is not quasimonotone", fmt_vec(&z)),
                    });
                }
            }
            return Ok(Outcome::Pass);
        }
        let v = is_monotone(self.t, self.tol)
            .violation
            .ok_or_else(|| Error::Internal("non-monotone verdict without a pair".into()))?;
        let w = construct_witness(&DualPair::from(&v), self.tol)?;
        let shifted = shift(self.t, &w.zstar)?;
        Ok(Outcome::check(
            !is_quasimonotone(&shifted, self.tol).holds,
            || format!("shift by witness {} stays quasimonotone", fmt_vec(&w.zstar)),
        ))
    }

    fn pairwise_corollary(&self) -> Result<Outcome> {
        let mut rng = self.rng(Property::PairwiseCorollary);
        let n = self.t.len();
        let mut unsolvable = None;
        for i in 0..n {
            for j in i + 1..n {
                let (ei, ej) = (&self.t.entries()[i], &self.t.entries()[j]);
                if ei.duals.is_empty() || ej.duals.is_empty() {
                    continue;
                }
                for _ in 0..10 {
                    let di = &ei.duals[rng.random_range(0..ei.duals.len())];
                    let dj = &ej.duals[rng.random_range(0..ej.duals.len())];
                    let s = rng.random_range(-0.25..1.25);
                    let xstar = di.axpy(s, &dj.sub(di));
                    if unsolvable.is_none()
                        && !solve_finite_mvi(self.t, &[i, j], &xstar, self.tol)?.is_feasible()
                    {
                        unsolvable = Some((i, j, xstar));
                    }
                }
            }
        }
        let all_solvable = unsolvable.is_none();
        Ok(Outcome::check(
            all_solvable == self.monotone,
            || match unsolvable {
                Some((i, j, x)) => format!(
                    "monotone, yet pair ({i}, {j}) is unsolvable at x* = {}",
                    fmt_vec(&x)
                ),
                None => "not monotone, yet every sampled pair problem is solvable".into(),
            },
        ))
    }

    fn constructive(&self, sys: &crate::gamma::GammaSystem, kkm_holds: bool) -> Result<Outcome> {
        if !kkm_holds {
            return Ok(Outcome::Skip);
        }
        let r = constructive_fip_report(sys, self.tol, DEFAULT_MAX_ITERS)?;
        let inside = contains(&sys.hull, &sys.all_constraints(), &r.point, self.tol)?;
        let lp = check_fip(sys, self.tol)?.is_feasible();
        Ok(Outcome::check(
            r.f <= self.tol.fip_tol && inside && lp,
            || {
                format!(
                    "constructive point {} with f = {:e}, inside {inside}, LP feasible {lp}",
                    fmt_vec(&r.point),
                    r.f
                )
            },
        ))
    }

    fn classify(&self) -> Result<Outcome> {
        let mut rng = self.rng(Property::ClassifyViaMvi);
        let v = classify_via_mvi(self.t, 3, &mut rng, self.tol)?;
        Ok(Outcome::check(v.holds == self.monotone, || {
            "verdict differs from the pairwise check".into()
        }))
    }
}

/// Generates one instance and runs the whole battery on it.
pub fn run_instance(spec: &GenSpec, tol: &Tolerance) -> InstanceOutcome {
    let t = match generate(spec) {
        Ok(t) => t,
        Err(e) => {
            return InstanceOutcome {
                seed: spec.seed,
                monotone: false,
                quasimonotone: false,
                kkm_holds: None,
                top_level_mismatch: false,
                outcomes: vec![(
                    Property::Generation,
                    Outcome::Fail {
                        detail: format!("error: {e}"),
                    },
                )],
            }
        }
    };
    let inst = Instance {
        seed: spec.seed,
        t: &t,
        tol,
        monotone: is_monotone(&t, tol).holds,
        quasimonotone: is_quasimonotone(&t, tol).holds,
    };
    let mut outcomes = vec![(Property::Generation, Outcome::Pass)];
    let (mut kkm_holds, mut top_level_mismatch) = (None, false);
    match inst.kkm_fip() {
        Ok((outcome, holds, top, sys)) => {
            kkm_holds = Some(holds);
            top_level_mismatch = top;
            outcomes.push((Property::KkmFip, outcome));
            outcomes.push((
                Property::ConstructiveFip,
                inst.constructive(&sys, holds).into(),
            ));
        }
        Err(e) => {
            let fail = Outcome::Fail {
                detail: format!("error: {e}"),
            };
            outcomes.push((Property::KkmFip, fail));
            outcomes.push((Property::ConstructiveFip, Outcome::Skip));
        }
    }
    outcomes.push((Property::MintyForward, inst.minty_forward().into()));
    outcomes.push((Property::ConverseWitness, inst.converse_witness().into()));
    outcomes.push((Property::MviFipBridge, inst.mvi_fip_bridge().into()));
    outcomes.push((Property::KkmChain, inst.kkm_chain().into()));
    outcomes.push((
        Property::ShiftCharacterization,
        inst.shift_characterization().into(),
    ));
    outcomes.push((
        Property::PairwiseCorollary,
        inst.pairwise_corollary().into(),
    ));
    outcomes.push((Property::ClassifyViaMvi, inst.classify().into()));
    outcomes.sort_by_key(|(p, _)| *p);
    InstanceOutcome {
        seed: spec.seed,
        monotone: inst.monotone,
        quasimonotone: inst.quasimonotone,
        kkm_holds,
        top_level_mismatch,
        outcomes,
    }
}

/// Runs `specs` on up to `threads` workers; results are in input order.
pub fn run_instances(specs: &[GenSpec], tol: &Tolerance, threads: usize) -> Vec<InstanceOutcome> {
    let threads = threads.clamp(1, specs.len().max(1));
    let next = AtomicUsize::new(0);
    let mut slots: Vec<Option<InstanceOutcome>> = vec![None; specs.len()];
    std::thread::scope(|scope| {
        let workers: Vec<_> = (0..threads)
            .map(|_| {
                scope.spawn(|| {
                    let mut done = Vec::new();
                    loop {
                        let k = next.fetch_add(1, Ordering::Relaxed);
                        if k >= specs.len() {
                            break done;
                        }
                        done.push((k, run_instance(&specs[k], tol)));
                    }
                })
            })
            .collect();
        for w in workers {
            for (k, r) in w.join().expect("suite worker panicked") {
                slots[k] = Some(r);
            }
        }
    });
    slots
        .into_iter()
        .map(|s| s.expect("every instance ran"))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyTally {
    pub property: Property,
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
    pub failing_seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub seed: u64,
    pub property: Property,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub spec: SuiteSpec,
    pub instances: usize,
    pub monotone: usize,
    pub quasimonotone: usize,
    pub kkm_holding: usize,
    /// Sampled systems where the top-level cover and intersection verdicts
    /// differ. Informational: only the subset-wide verdicts must agree.
    pub top_level_mismatches: usize,
    pub properties: Vec<PropertyTally>,
    pub failures: Vec<FailureRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub tolerance: Tolerance,
    pub suites: Vec<SuiteResult>,
    pub total_failures: usize,
    /// Every seed with at least one failing property, sorted.
    pub failing_seeds: Vec<u64>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.total_failures == 0
    }
}

/// Folds per-instance outcomes into a suite result.
pub fn summarize(spec: &SuiteSpec, outcomes: &[InstanceOutcome]) -> SuiteResult {
    let mut properties: Vec<PropertyTally> = Property::ALL
        .iter()
        .map(|&property| PropertyTally {
            property,
            passed: 0,
            failed: 0,
            skipped: 0,
            failing_seeds: Vec::new(),
        })
        .collect();
    let mut failures = Vec::new();
    for inst in outcomes {
        for (p, o) in &inst.outcomes {
            let tally = &mut properties[*p as usize];
            match o {
                Outcome::Pass => tally.passed += 1,
                Outcome::Skip => tally.skipped += 1,
                Outcome::Fail { detail } => {
                    tally.failed += 1;
                    tally.failing_seeds.push(inst.seed);
                    failures.push(FailureRecord {
                        seed: inst.seed,
                        property: *p,
                        detail: detail.clone(),
                    });
                }
            }
        }
    }
    SuiteResult {
        spec: spec.clone(),
        instances: outcomes.len(),
        monotone: outcomes.iter().filter(|o| o.monotone).count(),
        quasimonotone: outcomes.iter().filter(|o| o.quasimonotone).count(),
        kkm_holding: outcomes
            .iter()
            .filter(|o| o.kkm_holds == Some(true))
            .count(),
        top_level_mismatches: outcomes.iter().filter(|o| o.top_level_mismatch).count(),
        properties,
        failures,
    }
}

fn default_threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Runs every suite of `config`. `base` supplies tolerances the config does
/// not override.
pub fn run_suites(config: &SuiteConfig, base: Tolerance) -> Result<SuiteReport> {
    run_suites_with_threads(config, base, default_threads())
}

pub fn run_suites_with_threads(
    config: &SuiteConfig,
    base: Tolerance,
    threads: usize,
) -> Result<SuiteReport> {
    let tol = config.tolerance.apply(base)?;
    let mut suites = Vec::with_capacity(config.suites.len());
    for spec in &config.suites {
        spec.instance(0).validate()?;
        let specs: Vec<GenSpec> = (0..spec.trials).map(|k| spec.instance(k)).collect();
        let outcomes = run_instances(&specs, &tol, threads);
        suites.push(summarize(spec, &outcomes));
    }
    let total_failures = suites.iter().map(|s| s.failures.len()).sum();
    let mut failing_seeds: Vec<u64> = suites
        .iter()
        .flat_map(|s| s.failures.iter().map(|f| f.seed))
        .collect();
    failing_seeds.sort_unstable();
    failing_seeds.dedup();
    Ok(SuiteReport {
        tolerance: tol,
        suites,
        total_failures,
        failing_seeds,
    })
}

/// Reads a suite config from JSON text.
pub fn parse_config(text: &str) -> Result<SuiteConfig> {
    serde_json::from_str(text).map_err(|e| Error::InvalidSpec(format!("suite config: {e}")))
}
