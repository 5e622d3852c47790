//! Cross-checks the closed-form probabilities against the state simulator
//! on randomized instances.
//!
//! Each check has a role name describing what it compares:
//!
//! | role | compared quantity |
//! |---|---|
//! | `ppc_first_step` | single-attempt probability of the photon in slot 1 |
//! | `ppc_middle_step` | single-attempt probability of slots `3..N-1` |
//! | `ppc_last_step` | single-attempt probability of slot `N` |
//! | `ppc_total` | closed-form product over all photons |
//! | `pair_total` | two-photon total against `2 a1 a2` |
//! | `cpc_first_attempt` | attempt `m = 1` under CPC |
//! | `cpc_retry_slot1` | attempts `m >= 2` for slot 1 |
//! | `cpc_retry_later` | attempts `m >= 2` for slots `3..N` |
//! | `cpc_total` | truncated total after `max_m` attempts |
//! | `post_step_moduli` | coefficient moduli after each successful step |
//!
//! The shifted-pivot normalization is never a pass/fail check. Instances
//! where it departs from the simulator are counted and reported.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{
    p_step_cpc, p_step_ppc, p_total_cpc, p_total_ppc, post_step_moduli, NormalizationForm,
};
use crate::error::Result;
use crate::montecarlo::trial_rng;
use crate::optics::{ParityOutcome, PmOutcome};
use crate::protocol::{photon_modes, run, step_order, ConcentrationReport, GateKind};
use crate::qstate::{w_ket, PureState, WCoefficients};

/// A per-step probability formula under test.
pub trait StepFormula: Sync {
    /// Probability that photon `k` passes at exactly attempt `m` given that
    /// every earlier photon passed. PPC is only ever asked for `m = 1`.
    fn p_step(
        &self,
        gate: GateKind,
        alphas2: &[f64],
        k: usize,
        m: usize,
        pivot: usize,
    ) -> Result<f64>;
}

/// The formulas of [`crate::analytic`].
#[derive(Debug, Clone, Copy, Default)]
pub struct ClosedForm;

impl StepFormula for ClosedForm {
    fn p_step(
        &self,
        gate: GateKind,
        alphas2: &[f64],
        k: usize,
        m: usize,
        pivot: usize,
    ) -> Result<f64> {
        match gate {
            GateKind::Ppc => p_step_ppc(alphas2, k, pivot),
            GateKind::Cpc => p_step_cpc(alphas2, k, m, pivot),
        }
    }
}

pub const ROLES: [&str; 10] = [
    "ppc_first_step",
    "ppc_middle_step",
    "ppc_last_step",
    "ppc_total",
    "pair_total",
    "cpc_first_attempt",
    "cpc_retry_slot1",
    "cpc_retry_later",
    "cpc_total",
    "post_step_moduli",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub n_min: usize,
    pub n_max: usize,
    /// Instances per photon number, drawn once with real and once with
    /// complex coefficients.
    pub instances: usize,
    pub max_m: usize,
    pub seed: u64,
    pub tol: f64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            n_min: 2,
            n_max: 6,
            instances: 100,
            max_m: 4,
            seed: 2024,
            tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Tally {
    pub passed: usize,
    pub failed: usize,
    pub max_err: f64,
}

/// One instance of the suite, serialized on failure so it can be replayed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub coeffs: WCoefficients,
    pub pivot: usize,
    pub max_m: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mismatch {
    pub role: String,
    pub instance: Instance,
    pub k: Option<usize>,
    pub m: Option<usize>,
    pub simulator: f64,
    pub formula: f64,
}

/// A headline probability computed both ways.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Endpoint {
    pub label: String,
    pub formula: f64,
    pub simulator: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub config: SuiteConfig,
    pub instances: usize,
    pub matrix: BTreeMap<String, Tally>,
    /// Instances where the shifted-pivot normalization disagrees with the
    /// simulator state.
    pub shifted_form_discrepancies: usize,
    pub endpoints: Vec<Endpoint>,
    /// First mismatch in instance order, if any.
    pub first_mismatch: Option<Mismatch>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.matrix.values().all(|t| t.failed == 0)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{} instances, n = {}..={}, m = 1..={}, tol = {:e}",
            self.instances,
            self.config.n_min,
            self.config.n_max,
            self.config.max_m,
            self.config.tol
        )?;
        writeln!(
            f,
            "{:<20} {:>8} {:>8} {:>12}  status",
            "check", "passed", "failed", "max_err"
        )?;
        for role in ROLES {
            let t = self.matrix.get(role).copied().unwrap_or_default();
            let status = match (t.passed + t.failed, t.failed) {
                (0, _) => "n/a",
                (_, 0) => "PASS",
                _ => "FAIL",
            };
            writeln!(
                f,
                "{:<20} {:>8} {:>8} {:>12.3e}  {}",
                role, t.passed, t.failed, t.max_err, status
            )?;
        }
        writeln!(
            f,
            "shifted-pivot normalization departs from the simulator on {} of {} instances",
            self.shifted_form_discrepancies, self.instances
        )?;
        for e in &self.endpoints {
            writeln!(
                f,
                "{}: formula {:.5} ({}), simulator {:.5} ({}), |diff| {:.3e}",
                e.label,
                e.formula,
                e.formula,
                e.simulator,
                e.simulator,
                (e.formula - e.simulator).abs()
            )?;
        }
        if let Some(m) = &self.first_mismatch {
            writeln!(
                f,
                "first mismatch: {} k={:?} m={:?} simulator={} formula={}",
                m.role, m.k, m.m, m.simulator, m.formula
            )?;
        }
        write!(
            f,
            "{}",
            if self.passed() {
                "all checks pass"
            } else {
                "MISMATCH"
            }
        )
    }
}

/// Random instance with moduli bounded away from zero and a random pivot.
pub fn random_instance(n: usize, complex: bool, max_m: usize, rng: &mut impl Rng) -> Instance {
    let alphas = (0..n)
        .map(|_| {
            let r: f64 = rng.gen_range(0.1..1.0);
            if complex {
                Complex64::from_polar(r, rng.gen_range(0.0..std::f64::consts::TAU))
            } else if rng.gen_bool(0.5) {
                Complex64::new(r, 0.0)
            } else {
                Complex64::new(-r, 0.0)
            }
        })
        .collect();
    Instance {
        coeffs: WCoefficients::normalized(alphas).expect("moduli are bounded away from zero"),
        pivot: rng.gen_range(1..=n),
        max_m,
    }
}

/// The instances of a suite, in a fixed order.
pub fn suite_instances(config: &SuiteConfig) -> Vec<Instance> {
    let mut rng = trial_rng(config.seed, u64::MAX);
    let mut out = Vec::new();
    for n in config.n_min.max(2)..=config.n_max {
        for complex in [false, true] {
            for _ in 0..config.instances {
                out.push(random_instance(n, complex, config.max_m, &mut rng));
            }
        }
    }
    out
}

/// Squared moduli of the W-term amplitudes of a normalized state.
fn state_moduli(state: &PureState, n: usize) -> Vec<f64> {
    let modes = photon_modes(n);
    let norm = state.norm_sqr();
    (0..n)
        .map(|j| state.amplitude(&w_ket(&modes, j)).norm_sqr() / norm)
        .collect()
}

/// Concentrated state after each photon, following the Plus branch.
fn concentrated_states(report: &ConcentrationReport) -> Vec<(usize, &PureState)> {
    report
        .trace
        .iter()
        .filter(|r| r.parity == ParityOutcome::Even && r.pm == Some(PmOutcome::Plus))
        .map(|r| (r.step_k, &r.post_state))
        .collect()
}

struct InstanceOutcome {
    results: Vec<(&'static str, f64, Mismatch)>,
    shifted_discrepant: bool,
}

fn check_instance(inst: &Instance, formula: &dyn StepFormula, tol: f64) -> Result<InstanceOutcome> {
    let n = inst.coeffs.n();
    let pivot = inst.pivot;
    let a2 = inst.coeffs.moduli_sqr();
    let order = step_order(n, pivot)?;
    let mut results = Vec::new();
    let mut push = |role: &'static str, k: Option<usize>, m: Option<usize>, sim: f64, f: f64| {
        let err = (sim - f).abs();
        let err = if err.is_nan() { f64::INFINITY } else { err };
        results.push((
            role,
            err,
            Mismatch {
                role: role.to_string(),
                instance: inst.clone(),
                k,
                m,
                simulator: sim,
                formula: f,
            },
        ));
    };

    let ppc = run(&inst.coeffs, GateKind::Ppc, 1, pivot)?;
    for (i, &k) in order.iter().enumerate() {
        let role = if i == 0 {
            "ppc_first_step"
        } else if i + 1 == order.len() {
            "ppc_last_step"
        } else {
            "ppc_middle_step"
        };
        let sim = ppc.table.get(k, 1).unwrap_or(0.0);
        push(
            role,
            Some(k),
            Some(1),
            sim,
            formula.p_step(GateKind::Ppc, &a2, k, 1, pivot)?,
        );
    }
    push(
        "ppc_total",
        None,
        None,
        ppc.total_p,
        p_total_ppc(&a2, pivot)?,
    );
    if n == 2 {
        push("pair_total", None, None, ppc.total_p, 2.0 * a2[0] * a2[1]);
    }

    let mut shifted_discrepant = false;
    for (k, state) in concentrated_states(&ppc) {
        let sim = state_moduli(state, n);
        let consistent = post_step_moduli(&a2, k, pivot, NormalizationForm::Consistent)?;
        let shifted = post_step_moduli(&a2, k, pivot, NormalizationForm::ShiftedPivotTerm)?;
        for j in 0..n {
            push(
                "post_step_moduli",
                Some(k),
                None,
                sim[j],
                consistent[j] * consistent[j],
            );
            if (sim[j] - shifted[j] * shifted[j]).abs() > tol {
                shifted_discrepant = true;
            }
        }
    }

    let cpc = run(&inst.coeffs, GateKind::Cpc, inst.max_m, pivot)?;
    for (i, &k) in order.iter().enumerate() {
        for m in 1..=inst.max_m {
            let role = match (m, i) {
                (1, _) => "cpc_first_attempt",
                (_, 0) => "cpc_retry_slot1",
                _ => "cpc_retry_later",
            };
            let sim = cpc.table.get(k, m).unwrap_or(0.0);
            push(
                role,
                Some(k),
                Some(m),
                sim,
                formula.p_step(GateKind::Cpc, &a2, k, m, pivot)?,
            );
        }
    }
    push(
        "cpc_total",
        None,
        Some(inst.max_m),
        cpc.total_p,
        p_total_cpc(&a2, inst.max_m, pivot)?.total(),
    );

    Ok(InstanceOutcome {
        results,
        shifted_discrepant,
    })
}

/// Totals for the five-photon instance `(0.5, 0.5, 0.5, 0.3, 0.4)`: single
/// attempt and eight attempts.
pub fn headline_endpoints() -> Result<Vec<Endpoint>> {
    let coeffs = WCoefficients::from_reals(&[0.5, 0.5, 0.5, 0.3, 0.4])?;
    let a2 = coeffs.moduli_sqr();
    Ok(vec![
        Endpoint {
            label: "five-photon instance, PPC".into(),
            formula: p_total_ppc(&a2, 2)?,
            simulator: run(&coeffs, GateKind::Ppc, 1, 2)?.total_p,
        },
        Endpoint {
            label: "five-photon instance, CPC max_m=8".into(),
            formula: p_total_cpc(&a2, 8, 2)?.total(),
            simulator: run(&coeffs, GateKind::Cpc, 8, 2)?.total_p,
        },
    ])
}

/// Runs the randomized suite against `formula`.
pub fn run_suite(config: &SuiteConfig, formula: &dyn StepFormula) -> Result<VerifyReport> {
    let instances = suite_instances(config);
    let outcomes = instances
        .par_iter()
        .map(|inst| check_instance(inst, formula, config.tol))
        .collect::<Result<Vec<_>>>()?;

    let mut matrix: BTreeMap<String, Tally> = BTreeMap::new();
    let mut first_mismatch = None;
    let mut shifted_form_discrepancies = 0;
    for outcome in outcomes {
        shifted_form_discrepancies += usize::from(outcome.shifted_discrepant);
        for (role, err, mismatch) in outcome.results {
            let t = matrix.entry(role.to_string()).or_default();
            t.max_err = t.max_err.max(err);
            if err <= config.tol {
                t.passed += 1;
            } else {
                t.failed += 1;
                first_mismatch.get_or_insert(mismatch);
            }
        }
    }
    Ok(VerifyReport {
        config: *config,
        instances: instances.len(),
        matrix,
        shifted_form_discrepancies,
        endpoints: headline_endpoints()?,
        first_mismatch,
    })
}
