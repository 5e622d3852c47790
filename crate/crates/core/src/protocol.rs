//! The concentration protocol, driven step by step on the simulated state.
//!
//! Photon `j` of the W state lives in mode `a{j}`. At step `k` the party
//! holding photon `k` prepares an ancilla in mode `b{k}`, runs a parity check
//! between `a{k}` and `b{k}`, measures the ancilla-side photon in the `|±>`
//! basis and, on a minus outcome, flips the sign of V in `a{k}`. On the even
//! outcome photon `k`'s coefficient becomes equal to the pivot's. Under the
//! complete parity check an odd outcome leaves a new, less entangled W state
//! that the same party can concentrate again with a fresh ancilla.
//!
//! Photon indices are 1-based throughout, matching the usual labelling of
//! the parties.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analytic::ProbabilityTable;
use crate::error::{Error, Result};
use crate::optics::{
    cpc_measure, measure_pm, pbs, phase_flip_v, ppc_postselect, single_photon, CpcModel,
    ParityOutcome, PmOutcome,
};
use crate::qstate::{
    check_photon, max_w_fidelity, numbered_modes, tensor, w_ket, w_state, ModeId, PureState,
    WCoefficients, DEFAULT_TOL,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateKind {
    /// Partial parity check: PBS plus coincidence post-selection.
    Ppc,
    /// Complete parity check: cross-Kerr QND measurement.
    Cpc,
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GateKind::Ppc => f.write_str("ppc"),
            GateKind::Cpc => f.write_str("cpc"),
        }
    }
}

impl FromStr for GateKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ppc" => Ok(GateKind::Ppc),
            "cpc" => Ok(GateKind::Cpc),
            other => Err(format!("unknown gate `{other}`, expected ppc or cpc")),
        }
    }
}

/// Modes `a1..aN` holding the W-state photons.
pub fn photon_modes(n: usize) -> Vec<ModeId> {
    numbered_modes("a", n)
}

fn mode(prefix: &str, k: usize) -> ModeId {
    ModeId::new(format!("{prefix}{k}")).expect("generated mode names are nonempty")
}

/// Which ancilla to prepare: photon `step_k`, attempt `iteration_m`,
/// equalizing against photon `pivot`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AncillaSpec {
    pub step_k: usize,
    pub iteration_m: usize,
    pub pivot: usize,
}

impl AncillaSpec {
    pub fn new(n: usize, step_k: usize, iteration_m: usize, pivot: usize) -> Result<Self> {
        check_photon(step_k, n)?;
        check_photon(pivot, n)?;
        if step_k == pivot {
            return Err(Error::StepIsPivot(step_k));
        }
        if iteration_m == 0 {
            return Err(Error::ZeroIteration);
        }
        Ok(Self {
            step_k,
            iteration_m,
            pivot,
        })
    }
}

/// Ancilla amplitudes `(c_h, c_v)` from the original coefficients.
///
/// `c_h ∝ α_k^(2^(m-1))` and `c_v ∝ α_pivot^(2^(m-1))`: every odd outcome
/// squares the two relevant coefficients of the residual state. The powers
/// are taken by repeated squaring with renormalization, so large `m` does not
/// underflow.
pub fn ancilla_coeffs(
    coeffs: &WCoefficients,
    step_k: usize,
    iteration_m: usize,
    pivot: usize,
) -> Result<(Complex64, Complex64)> {
    AncillaSpec::new(coeffs.n(), step_k, iteration_m, pivot)?;
    let mut h = coeffs.alpha(step_k)?;
    let mut v = coeffs.alpha(pivot)?;
    let rescale = |h: Complex64, v: Complex64| {
        let n = (h.norm_sqr() + v.norm_sqr()).sqrt();
        (h / n, v / n)
    };
    (h, v) = rescale(h, v);
    for _ in 1..iteration_m {
        (h, v) = rescale(h * h, v * v);
    }
    Ok((h, v))
}

/// Photons processed in order, given the pivot.
///
/// With pivot 2 this is `1, 3, 4, .., N`. Any other pivot swaps roles with
/// photon 2, so the order is that of [`apply_pivot`]'s relabelled vector.
pub fn step_order(n: usize, pivot: usize) -> Result<Vec<usize>> {
    check_photon(pivot, n)?;
    if n < 2 {
        return Err(Error::TooFewPhotons(n));
    }
    let relabel = |p: usize| {
        if p == 2 {
            pivot
        } else if p == pivot {
            2
        } else {
            p
        }
    };
    Ok(std::iter::once(1).chain(3..=n).map(relabel).collect())
}

/// Index of the smallest `|α_i|`, lowest index on ties.
pub fn select_pivot(coeffs: &WCoefficients) -> usize {
    let mut best = 0;
    let moduli = coeffs.moduli_sqr();
    for (i, m) in moduli.iter().enumerate() {
        if *m < moduli[best] {
            best = i;
        }
    }
    best + 1
}

/// Swaps the pivot coefficient into position 2.
pub fn apply_pivot(coeffs: &WCoefficients, pivot: usize) -> Result<WCoefficients> {
    check_photon(pivot, coeffs.n())?;
    let mut alphas = coeffs.alphas().to_vec();
    alphas.swap(1, pivot - 1);
    WCoefficients::new(alphas)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepOutcome {
    /// Even parity: photon `k` is concentrated.
    Success,
    /// Odd parity under CPC: the residual state can be concentrated again.
    Retry,
    /// Odd parity under PPC, or on the last allowed CPC attempt.
    Failure,
}

/// One branch of one parity-check round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step_k: usize,
    pub iteration_m: usize,
    pub parity: ParityOutcome,
    pub p_parity: f64,
    /// `None` when the photons were destroyed by post-selection.
    pub pm: Option<PmOutcome>,
    pub p_pm: Option<f64>,
    pub corrected: bool,
    pub outcome: StepOutcome,
    pub post_state: PureState,
    /// Probability of arriving at this branch: the incoming probability
    /// times `p_parity`. The ± outcome does not enter because both signs
    /// are recoverable.
    pub cumulative_p: f64,
}

impl StepRecord {
    /// Probability of this exact branch given the incoming state.
    pub fn branch_p(&self) -> f64 {
        self.p_parity * self.p_pm.unwrap_or(1.0)
    }
}

fn check_protocol_state(state: &PureState) -> Result<(usize, Vec<ModeId>)> {
    let n = state
        .photon_count()
        .ok_or_else(|| Error::MalformedState("empty state".into()))?;
    let modes = photon_modes(n);
    if state.modes().len() != n || !modes.iter().all(|m| state.has_mode(m)) {
        return Err(Error::MalformedState(format!(
            "expected registry a1..a{n}, found {:?}",
            state.modes().iter().map(ModeId::as_str).collect::<Vec<_>>()
        )));
    }
    for (occ, _) in state.terms() {
        if modes.iter().any(|m| occ.count(m) != 1) {
            return Err(Error::MalformedState(
                "every photon mode must hold exactly one photon".into(),
            ));
        }
    }
    Ok((n, modes))
}

/// Ancilla amplitudes read from the state being concentrated: `c_h` follows
/// the coefficient of photon `k`, `c_v` the pivot's.
pub fn ancilla_from_state(state: &PureState, spec: &AncillaSpec) -> Result<(Complex64, Complex64)> {
    let (n, modes) = check_protocol_state(state)?;
    AncillaSpec::new(n, spec.step_k, spec.iteration_m, spec.pivot)?;
    let beta_k = state.amplitude(&w_ket(&modes, spec.step_k - 1));
    let beta_p = state.amplitude(&w_ket(&modes, spec.pivot - 1));
    let norm = (beta_k.norm_sqr() + beta_p.norm_sqr()).sqrt();
    if beta_k.norm_sqr() == 0.0 || beta_p.norm_sqr() == 0.0 || !norm.is_finite() {
        return Err(Error::MalformedState(format!(
            "photon {} or pivot {} has no amplitude",
            spec.step_k, spec.pivot
        )));
    }
    Ok((beta_k / norm, beta_p / norm))
}

/// Runs one parity-check round and returns every branch.
///
/// Under CPC the result holds up to four records (even/odd × ±); under PPC
/// the two even records plus one terminal failure record. Branches of
/// probability zero are omitted. Minus outcomes are corrected by a V-phase
/// flip on photon `k`'s mode.
pub fn run_step(
    state: &PureState,
    spec: &AncillaSpec,
    gate: GateKind,
    cumulative_in: f64,
) -> Result<Vec<StepRecord>> {
    let (c_h, c_v) = ancilla_from_state(state, spec)?;
    let k = spec.step_k;
    let photon = mode("a", k);
    let ancilla = mode("b", k);
    let joint = tensor(state, &single_photon(c_h, c_v, &ancilla)?)?;

    let mut records = Vec::with_capacity(4);
    let mut emit = |parity: ParityOutcome,
                    p_parity: f64,
                    branch_state: &PureState,
                    measured: &ModeId,
                    survivor: Option<(&ModeId, &ModeId)>|
     -> Result<()> {
        let pm = measure_pm(branch_state, measured)?;
        for outcome in PmOutcome::ALL {
            let b = pm.get(outcome);
            if b.probability == 0.0 {
                continue;
            }
            let mut post = b.state.clone();
            if let Some((from, to)) = survivor {
                post = post.rename_mode(from, to)?;
            }
            let corrected = outcome == PmOutcome::Minus;
            if corrected {
                post = phase_flip_v(&post, &photon)?;
            }
            records.push(StepRecord {
                step_k: k,
                iteration_m: spec.iteration_m,
                parity,
                p_parity,
                pm: Some(outcome),
                p_pm: Some(b.probability),
                corrected,
                outcome: match parity {
                    ParityOutcome::Even => StepOutcome::Success,
                    ParityOutcome::Odd => StepOutcome::Retry,
                },
                post_state: post,
                cumulative_p: cumulative_in * p_parity,
            });
        }
        Ok(())
    };

    match gate {
        GateKind::Cpc => {
            let branches = cpc_measure(&joint, &ancilla, &photon, &CpcModel::default())?;
            for parity in [ParityOutcome::Even, ParityOutcome::Odd] {
                let b = branches.get(parity);
                if b.probability > 0.0 {
                    emit(parity, b.probability, &b.state, &ancilla, None)?;
                }
            }
        }
        GateKind::Ppc => {
            let out1 = mode("c", k);
            let out2 = mode("d", k);
            let routed = pbs(&joint, &photon, &ancilla, &out1, &out2)?;
            let (even, p_even) = ppc_postselect(&routed, &out1, &out2)?;
            if p_even > 0.0 {
                emit(
                    ParityOutcome::Even,
                    p_even,
                    &even,
                    &out2,
                    Some((&out1, &photon)),
                )?;
            }
            let p_fail = 1.0 - p_even;
            if p_fail > 0.0 {
                records.push(StepRecord {
                    step_k: k,
                    iteration_m: spec.iteration_m,
                    parity: ParityOutcome::Odd,
                    p_parity: p_fail,
                    pm: None,
                    p_pm: None,
                    corrected: false,
                    outcome: StepOutcome::Failure,
                    post_state: PureState::empty(state.modes().to_vec()),
                    cumulative_p: cumulative_in * p_fail,
                });
            }
        }
    }
    Ok(records)
}

/// Exhaustive result of one protocol run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub coeffs: WCoefficients,
    pub gate: GateKind,
    pub pivot: usize,
    pub max_m: usize,
    /// Probability of photon `k` succeeding at exactly attempt `m`, given
    /// that all earlier photons succeeded.
    pub table: ProbabilityTable,
    pub per_step_p: BTreeMap<usize, f64>,
    pub total_p: f64,
    pub final_fidelity: f64,
    pub final_state: PureState,
    /// Every branch of every round along the canonical path (the plus
    /// branch feeds the next round).
    pub trace: Vec<StepRecord>,
}

impl ConcentrationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

fn pick(records: &[StepRecord], parity: ParityOutcome) -> Option<&StepRecord> {
    records
        .iter()
        .filter(|r| r.parity == parity)
        .min_by_key(|r| r.pm != Some(PmOutcome::Plus))
}

/// Runs the protocol exhaustively with at most `max_m` attempts per photon.
/// PPC always uses a single attempt.
pub fn run(
    coeffs: &WCoefficients,
    gate: GateKind,
    max_m: usize,
    pivot: usize,
) -> Result<ConcentrationReport> {
    if max_m == 0 {
        return Err(Error::ZeroIteration);
    }
    let max_m = if gate == GateKind::Ppc { 1 } else { max_m };
    let n = coeffs.n();
    let order = step_order(n, pivot)?;
    let modes = photon_modes(n);
    let mut state = w_state(coeffs, &modes)?;
    let mut rows = Vec::with_capacity(order.len());
    let mut trace = Vec::new();
    let mut reach = 1.0;

    for &k in &order {
        let mut current = state.clone();
        let mut odd_acc = 1.0;
        let mut per_m = Vec::with_capacity(max_m);
        let mut concentrated: Option<PureState> = None;
        for m in 1..=max_m {
            let spec = AncillaSpec::new(n, k, m, pivot)?;
            let mut records = run_step(&current, &spec, gate, reach * odd_acc)?;
            let even = pick(&records, ParityOutcome::Even);
            per_m.push(odd_acc * even.map_or(0.0, |r| r.p_parity));
            if concentrated.is_none() {
                concentrated = even.map(|r| r.post_state.clone());
            }
            let odd = pick(&records, ParityOutcome::Odd).cloned();
            if m == max_m {
                for r in records
                    .iter_mut()
                    .filter(|r| r.outcome == StepOutcome::Retry)
                {
                    r.outcome = StepOutcome::Failure;
                }
            }
            trace.extend(records);
            match odd {
                Some(r) if r.outcome == StepOutcome::Retry && m < max_m => {
                    odd_acc *= r.p_parity;
                    current = r.post_state;
                }
                _ => break,
            }
        }
        let step_sum: f64 = per_m.iter().sum();
        reach *= step_sum;
        rows.push((k, per_m));
        state = concentrated.ok_or_else(|| {
            Error::MalformedState(format!("photon {k} can never pass the parity check"))
        })?;
    }

    let table = ProbabilityTable::from_rows(rows);
    let per_step_p = table.rows().iter().map(|r| (r.k, r.sum)).collect();
    let final_fidelity = max_w_fidelity(&state, &modes)?;
    Ok(ConcentrationReport {
        coeffs: coeffs.clone(),
        gate,
        pivot,
        max_m,
        total_p: table.total(),
        table,
        per_step_p,
        final_fidelity,
        final_state: state,
        trace,
    })
}

pub fn ppc_run(coeffs: &WCoefficients, pivot: usize) -> Result<ConcentrationReport> {
    run(coeffs, GateKind::Ppc, 1, pivot)
}

pub fn cpc_run(coeffs: &WCoefficients, max_m: usize, pivot: usize) -> Result<ConcentrationReport> {
    run(coeffs, GateKind::Cpc, max_m, pivot)
}

/// One measurement event on a success path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathEvent {
    pub step_k: usize,
    pub iteration_m: usize,
    pub parity: ParityOutcome,
    /// `None` when both signs were merged.
    pub pm: Option<PmOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessPath {
    pub events: Vec<PathEvent>,
    pub probability: f64,
    pub fidelity: f64,
}

/// How [`enumerate_success_paths`] treats the two `|±>` outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathMerge {
    /// Follow every branch separately.
    None,
    /// Merge sibling branches whose corrected states agree up to a global
    /// phase. Siblings that disagree are still followed separately.
    GlobalPhase,
}

/// Walks the full branch tree and returns every path that ends with all
/// photons concentrated, with the fidelity of its final state.
pub fn enumerate_success_paths(
    coeffs: &WCoefficients,
    gate: GateKind,
    max_m: usize,
    pivot: usize,
    merge: PathMerge,
) -> Result<Vec<SuccessPath>> {
    if max_m == 0 {
        return Err(Error::ZeroIteration);
    }
    let walker = Walker {
        n: coeffs.n(),
        order: step_order(coeffs.n(), pivot)?,
        modes: photon_modes(coeffs.n()),
        gate,
        max_m: if gate == GateKind::Ppc { 1 } else { max_m },
        pivot,
        merge,
    };
    let mut out = Vec::new();
    let start = w_state(coeffs, &walker.modes)?;
    walker.visit(&start, 0, 1, 1.0, &mut Vec::new(), &mut out)?;
    Ok(out)
}

struct Walker {
    n: usize,
    order: Vec<usize>,
    modes: Vec<ModeId>,
    gate: GateKind,
    max_m: usize,
    pivot: usize,
    merge: PathMerge,
}

impl Walker {
    fn visit(
        &self,
        state: &PureState,
        step: usize,
        m: usize,
        prob: f64,
        events: &mut Vec<PathEvent>,
        out: &mut Vec<SuccessPath>,
    ) -> Result<()> {
        let k = self.order[step];
        let spec = AncillaSpec::new(self.n, k, m, self.pivot)?;
        let records = run_step(state, &spec, self.gate, prob)?;
        for parity in [ParityOutcome::Even, ParityOutcome::Odd] {
            let group: Vec<&StepRecord> = records
                .iter()
                .filter(|r| r.parity == parity && r.outcome != StepOutcome::Failure)
                .collect();
            if group.is_empty() || (parity == ParityOutcome::Odd && m == self.max_m) {
                continue;
            }
            for (child, p, pm) in self.children(&group) {
                events.push(PathEvent {
                    step_k: k,
                    iteration_m: m,
                    parity,
                    pm,
                });
                let p = prob * p;
                match parity {
                    ParityOutcome::Even if step + 1 == self.order.len() => {
                        out.push(SuccessPath {
                            events: events.clone(),
                            probability: p,
                            fidelity: max_w_fidelity(child, &self.modes)?,
                        });
                    }
                    ParityOutcome::Even => self.visit(child, step + 1, 1, p, events, out)?,
                    ParityOutcome::Odd => self.visit(child, step, m + 1, p, events, out)?,
                }
                events.pop();
            }
        }
        Ok(())
    }

    fn children<'a>(
        &self,
        group: &[&'a StepRecord],
    ) -> Vec<(&'a PureState, f64, Option<PmOutcome>)> {
        let first = &group[0].post_state;
        let mergeable = self.merge == PathMerge::GlobalPhase
            && group
                .iter()
                .all(|r| r.post_state.equal_up_to_phase(first, DEFAULT_TOL));
        if mergeable {
            let p: f64 = group.iter().map(|r| r.branch_p()).sum();
            vec![(first, p, None)]
        } else {
            group
                .iter()
                .map(|r| (&r.post_state, r.branch_p(), r.pm))
                .collect()
        }
    }
}
