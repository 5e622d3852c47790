//! Born-rule sampling of whole protocol runs.
//!
//! Every trial gets its own ChaCha8 stream: the key comes from the seed and
//! the stream id is the trial index, so trial `i` draws the same numbers no
//! matter which thread runs it or in what order.
//!
//! Within a trial the draws are consumed in a fixed order. Each parity check
//! takes one draw (`u < p_even` selects Even), followed by one `|±>` draw
//! (`v < p_plus` selects Plus) whenever the photons survived the check.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optics::{ParityOutcome, PmOutcome};
use crate::protocol::{
    photon_modes, run, run_step, step_order, AncillaSpec, GateKind, PathEvent, StepOutcome,
    StepRecord,
};
use crate::qstate::{max_w_fidelity, w_state, WCoefficients};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub success: bool,
    /// Attempt on which each photon passed, for the photons that did.
    pub iterations_used: BTreeMap<usize, usize>,
    /// Fidelity of the final state with the maximally entangled W state;
    /// `None` for a failed trial.
    pub fidelity: Option<f64>,
    /// Every parity check performed, in order.
    pub trace: Vec<PathEvent>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub p_hat: f64,
    pub stderr: f64,
    pub trials: u64,
    pub seed: u64,
    pub successes: u64,
}

impl Estimate {
    fn from_counts(successes: u64, trials: u64, seed: u64) -> Self {
        let p_hat = successes as f64 / trials as f64;
        Estimate {
            p_hat,
            stderr: (p_hat * (1.0 - p_hat) / trials as f64).sqrt(),
            trials,
            seed,
            successes,
        }
    }
}

/// Random stream of trial `index`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn parity_draw(rng: &mut ChaCha8Rng, p_even: f64) -> ParityOutcome {
    if rng.gen::<f64>() < p_even {
        ParityOutcome::Even
    } else {
        ParityOutcome::Odd
    }
}

fn pm_draw(rng: &mut ChaCha8Rng, p_plus: f64) -> PmOutcome {
    if rng.gen::<f64>() < p_plus {
        PmOutcome::Plus
    } else {
        PmOutcome::Minus
    }
}

/// Probability of Even and, per parity, the conditional probability of
/// Plus (`None` when the photons do not survive).
#[derive(Debug, Clone, Copy)]
struct CheckProbs {
    p_even: f64,
    p_plus: [Option<f64>; 2],
}

fn parity_slot(parity: ParityOutcome) -> usize {
    match parity {
        ParityOutcome::Even => 0,
        ParityOutcome::Odd => 1,
    }
}

fn check_probs(records: &[&StepRecord]) -> CheckProbs {
    let p_even = records
        .iter()
        .find(|r| r.parity == ParityOutcome::Even)
        .map_or(0.0, |r| r.p_parity);
    let mut p_plus = [None; 2];
    for parity in [ParityOutcome::Even, ParityOutcome::Odd] {
        let group: Vec<_> = records
            .iter()
            .filter(|r| r.parity == parity && r.pm.is_some())
            .collect();
        if !group.is_empty() {
            let plus = group
                .iter()
                .find(|r| r.pm == Some(PmOutcome::Plus))
                .and_then(|r| r.p_pm)
                .unwrap_or(0.0);
            p_plus[parity_slot(parity)] = Some(plus);
        }
    }
    CheckProbs { p_even, p_plus }
}

/// Draws the outcome of one check. Returns the parity and, if drawn, the
/// sign.
fn draw_check(rng: &mut ChaCha8Rng, probs: &CheckProbs) -> (ParityOutcome, Option<PmOutcome>) {
    let parity = parity_draw(rng, probs.p_even);
    let pm = probs.p_plus[parity_slot(parity)].map(|p| pm_draw(rng, p));
    (parity, pm)
}

fn effective_max_m(gate: GateKind, max_m: usize) -> Result<usize> {
    if max_m == 0 {
        return Err(Error::ZeroIteration);
    }
    Ok(if gate == GateKind::Ppc { 1 } else { max_m })
}

/// One trajectory simulated on the full state: every check runs
/// [`run_step`] on the current state and follows the drawn branch.
pub fn sample_run(
    coeffs: &WCoefficients,
    gate: GateKind,
    max_m: usize,
    pivot: usize,
    seed: u64,
) -> Result<TrialResult> {
    sample_full(coeffs, gate, max_m, pivot, &mut trial_rng(seed, 0))
}

fn sample_full(
    coeffs: &WCoefficients,
    gate: GateKind,
    max_m: usize,
    pivot: usize,
    rng: &mut ChaCha8Rng,
) -> Result<TrialResult> {
    let max_m = effective_max_m(gate, max_m)?;
    let n = coeffs.n();
    let modes = photon_modes(n);
    let mut state = w_state(coeffs, &modes)?;
    let mut result = TrialResult {
        success: false,
        iterations_used: BTreeMap::new(),
        fidelity: None,
        trace: Vec::new(),
    };

    for k in step_order(n, pivot)? {
        let mut m = 1;
        loop {
            let spec = AncillaSpec::new(n, k, m, pivot)?;
            let records = run_step(&state, &spec, gate, 1.0)?;
            let refs: Vec<_> = records.iter().collect();
            let (parity, pm) = draw_check(rng, &check_probs(&refs));
            result.trace.push(PathEvent {
                step_k: k,
                iteration_m: m,
                parity,
                pm,
            });
            let taken = records
                .iter()
                .find(|r| r.parity == parity && r.pm == pm)
                .ok_or_else(|| Error::MalformedState("drew a branch of probability zero".into()))?;
            match parity {
                ParityOutcome::Even => {
                    state = taken.post_state.clone();
                    result.iterations_used.insert(k, m);
                    break;
                }
                ParityOutcome::Odd if taken.outcome == StepOutcome::Retry && m < max_m => {
                    state = taken.post_state.clone();
                    m += 1;
                }
                ParityOutcome::Odd => return Ok(result),
            }
        }
    }
    result.success = true;
    result.fidelity = Some(max_w_fidelity(&state, &modes)?);
    Ok(result)
}

/// Branch probabilities of every check on the canonical path, taken from
/// an exhaustive run. Trajectories that took a Minus branch differ from the
/// canonical one only by a global phase, so the same table serves them.
struct BranchTable {
    /// `(k, per-attempt probabilities)` in execution order.
    steps: Vec<(usize, Vec<CheckProbs>)>,
    max_m: usize,
    fidelity: f64,
}

impl BranchTable {
    fn build(coeffs: &WCoefficients, gate: GateKind, max_m: usize, pivot: usize) -> Result<Self> {
        let report = run(coeffs, gate, max_m, pivot)?;
        let mut steps = Vec::new();
        for k in step_order(coeffs.n(), pivot)? {
            let mut attempts = Vec::new();
            for m in 1..=report.max_m {
                let records: Vec<_> = report
                    .trace
                    .iter()
                    .filter(|r| r.step_k == k && r.iteration_m == m)
                    .collect();
                if records.is_empty() {
                    break;
                }
                attempts.push(check_probs(&records));
            }
            steps.push((k, attempts));
        }
        Ok(BranchTable {
            steps,
            max_m: report.max_m,
            fidelity: report.final_fidelity,
        })
    }

    /// Draws one trajectory, reporting every check to `on_check`. Returns
    /// whether every photon passed.
    fn walk(&self, rng: &mut ChaCha8Rng, mut on_check: impl FnMut(PathEvent)) -> bool {
        for (k, attempts) in &self.steps {
            let mut passed = false;
            for (i, probs) in attempts.iter().enumerate() {
                let m = i + 1;
                let (parity, pm) = draw_check(rng, probs);
                on_check(PathEvent {
                    step_k: *k,
                    iteration_m: m,
                    parity,
                    pm,
                });
                if parity == ParityOutcome::Even {
                    passed = true;
                    break;
                }
                if pm.is_none() || m == self.max_m {
                    break;
                }
            }
            if !passed {
                return false;
            }
        }
        true
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> TrialResult {
        let mut trace = Vec::new();
        let success = self.walk(rng, |e| trace.push(e));
        let iterations_used = trace
            .iter()
            .filter(|e| e.parity == ParityOutcome::Even)
            .map(|e| (e.step_k, e.iteration_m))
            .collect();
        TrialResult {
            success,
            iterations_used,
            fidelity: success.then_some(self.fidelity),
            trace,
        }
    }

    fn succeeds(&self, rng: &mut ChaCha8Rng) -> bool {
        self.walk(rng, |_| {})
    }
}

/// Fraction of successful trajectories over `trials` independent runs.
/// Trials run in parallel; the result depends only on the arguments.
pub fn estimate(
    coeffs: &WCoefficients,
    gate: GateKind,
    max_m: usize,
    pivot: usize,
    trials: u64,
    seed: u64,
) -> Result<Estimate> {
    if trials == 0 {
        return Err(Error::ZeroTrials);
    }
    let table = BranchTable::build(coeffs, gate, max_m, pivot)?;
    let successes = (0..trials)
        .into_par_iter()
        .filter(|&i| table.succeeds(&mut trial_rng(seed, i)))
        .count() as u64;
    Ok(Estimate::from_counts(successes, trials, seed))
}

/// Per-trial results for trials `0..trials`, drawn from the same streams as
/// [`estimate`] so the success flags agree with it trial for trial.
pub fn sample_trials(
    coeffs: &WCoefficients,
    gate: GateKind,
    max_m: usize,
    pivot: usize,
    trials: u64,
    seed: u64,
) -> Result<Vec<TrialResult>> {
    if trials == 0 {
        return Err(Error::ZeroTrials);
    }
    let table = BranchTable::build(coeffs, gate, max_m, pivot)?;
    Ok((0..trials)
        .into_par_iter()
        .map(|i| table.sample(&mut trial_rng(seed, i)))
        .collect())
}
