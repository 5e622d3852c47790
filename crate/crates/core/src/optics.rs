//! Optical gates and measurements acting on [`PureState`]s.
//!
//! Two parity checks are provided. The partial parity check is a polarizing
//! beam splitter followed by coincidence post-selection; it only ever
//! reports the even outcome and the photons are consumed. The complete
//! parity check is a cross-Kerr QND measurement: both outcomes are reported
//! and the photons survive.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::{normalize, project, ModeId, Occupancy, Polarization, PureState, DEFAULT_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParityOutcome {
    /// HH or VV: the probe picks up no phase.
    Even,
    /// HV or VH: the probe picks up a phase of +2θ or −2θ, and the sign is
    /// not resolved by the homodyne measurement.
    Odd,
}

/// Nominal probe phase tag attached to a parity outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeShift {
    Zero,
    PlusMinusTwoTheta,
}

impl ParityOutcome {
    pub fn probe_shift(self) -> ProbeShift {
        match self {
            ParityOutcome::Even => ProbeShift::Zero,
            ParityOutcome::Odd => ProbeShift::PlusMinusTwoTheta,
        }
    }
}

/// Outcome of a measurement in the diagonal basis `|±> = (|H> ± |V>)/√2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PmOutcome {
    Plus,
    Minus,
}

impl PmOutcome {
    pub const ALL: [PmOutcome; 2] = [PmOutcome::Plus, PmOutcome::Minus];
}

/// Cross-Kerr parity gate parameters.
///
/// `theta` only labels the probe phase. Branch amplitudes and probabilities
/// do not depend on it: the gate acts as an ideal parity projector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CpcModel {
    theta: f64,
}

impl CpcModel {
    pub fn new(theta: f64) -> Result<Self> {
        if theta.is_nan() || theta <= 0.0 || !theta.is_finite() {
            return Err(Error::NonPositiveTheta(theta));
        }
        Ok(Self { theta })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
}

impl Default for CpcModel {
    fn default() -> Self {
        Self { theta: 0.1 }
    }
}

/// A renormalized measurement branch and its Born probability.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub state: PureState,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParityBranches {
    pub even: Branch,
    pub odd: Branch,
}

impl ParityBranches {
    pub fn get(&self, outcome: ParityOutcome) -> &Branch {
        match outcome {
            ParityOutcome::Even => &self.even,
            ParityOutcome::Odd => &self.odd,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PmBranches {
    pub plus: Branch,
    pub minus: Branch,
}

impl PmBranches {
    pub fn get(&self, outcome: PmOutcome) -> &Branch {
        match outcome {
            PmOutcome::Plus => &self.plus,
            PmOutcome::Minus => &self.minus,
        }
    }
}

/// `c_h|H> + c_v|V>` in `mode`.
pub fn single_photon(c_h: Complex64, c_v: Complex64, mode: &ModeId) -> Result<PureState> {
    let norm = c_h.norm_sqr() + c_v.norm_sqr();
    if (norm - 1.0).abs() > DEFAULT_TOL {
        return Err(Error::PhotonNotNormalized(norm));
    }
    let h = Occupancy::new().with(mode, Polarization::H)?;
    let v = Occupancy::new().with(mode, Polarization::V)?;
    Ok(PureState::assemble(
        vec![mode.clone()],
        [(h, c_h), (v, c_v)],
    ))
}

fn require_mode(s: &PureState, mode: &ModeId) -> Result<()> {
    if s.has_mode(mode) {
        Ok(())
    } else {
        Err(Error::MissingMode(mode.to_string()))
    }
}

/// Polarizing beam splitter: transmits H, reflects V.
///
/// H from `in1` and V from `in2` leave through `out1`; V from `in1` and H
/// from `in2` leave through `out2`. Output modes may reuse the input names.
/// The routing is its own inverse.
pub fn pbs(
    s: &PureState,
    in1: &ModeId,
    in2: &ModeId,
    out1: &ModeId,
    out2: &ModeId,
) -> Result<PureState> {
    require_mode(s, in1)?;
    require_mode(s, in2)?;
    if in1 == in2 {
        return Err(Error::DuplicateMode(in1.to_string()));
    }
    if out1 == out2 {
        return Err(Error::DuplicateMode(out1.to_string()));
    }
    for out in [out1, out2] {
        if out != in1 && out != in2 && s.has_mode(out) {
            return Err(Error::ModeCollision(out.to_string()));
        }
    }

    let modes = s
        .modes()
        .iter()
        .map(|m| {
            if m == in1 {
                out1.clone()
            } else if m == in2 {
                out2.clone()
            } else {
                m.clone()
            }
        })
        .collect();

    let mut terms = Vec::with_capacity(s.len());
    for (occ, amp) in s.terms() {
        let mut routed = occ.clone();
        let from1 = routed.take(in1);
        let from2 = routed.take(in2);
        for p in from1 {
            let dest = if p == Polarization::H { out1 } else { out2 };
            routed.add(dest, p)?;
        }
        for p in from2 {
            let dest = if p == Polarization::H { out2 } else { out1 };
            routed.add(dest, p)?;
        }
        terms.push((routed, amp));
    }
    Ok(PureState::assemble(modes, terms))
}

/// Coincidence post-selection after a PBS: keeps kets with exactly one
/// photon in each output. The rest is lost with the detected photons, so
/// no odd branch is returned.
pub fn ppc_postselect(s: &PureState, out1: &ModeId, out2: &ModeId) -> Result<(PureState, f64)> {
    require_mode(s, out1)?;
    require_mode(s, out2)?;
    Ok(project(s, |occ| {
        occ.count(out1) == 1 && occ.count(out2) == 1
    }))
}

fn single_photon_in(s: &PureState, mode: &ModeId) -> Result<()> {
    require_mode(s, mode)?;
    for (occ, _) in s.terms() {
        let count = occ.count(mode);
        if count != 1 {
            return Err(Error::NotSinglePhoton {
                mode: mode.to_string(),
                count,
            });
        }
    }
    Ok(())
}

/// Ideal QND parity measurement of the photons in `m1` and `m2`.
pub fn cpc_measure(
    s: &PureState,
    m1: &ModeId,
    m2: &ModeId,
    _model: &CpcModel,
) -> Result<ParityBranches> {
    single_photon_in(s, m1)?;
    single_photon_in(s, m2)?;
    let even = |occ: &Occupancy| occ.photons(m1) == occ.photons(m2);
    let (even_state, p_even) = project(s, even);
    let (odd_state, p_odd) = project(s, |occ| !even(occ));
    Ok(ParityBranches {
        even: Branch {
            state: even_state,
            probability: p_even,
        },
        odd: Branch {
            state: odd_state,
            probability: p_odd,
        },
    })
}

/// Measures the photon in `mode` in the `|±>` basis and removes the mode.
pub fn measure_pm(s: &PureState, mode: &ModeId) -> Result<PmBranches> {
    single_photon_in(s, mode)?;
    let modes: Vec<ModeId> = s.modes().iter().filter(|m| *m != mode).cloned().collect();

    let branch = |sign: f64| {
        let terms = s.terms().map(|(occ, amp)| {
            let mut rest = occ.clone();
            let pol = rest.take(mode)[0];
            let overlap = match pol {
                Polarization::H => FRAC_1_SQRT_2,
                Polarization::V => sign * FRAC_1_SQRT_2,
            };
            (rest, amp * overlap)
        });
        let raw = PureState::assemble(modes.clone(), terms);
        let probability = raw.norm_sqr();
        let state = match normalize(&raw) {
            Ok((state, _)) => state,
            Err(_) => PureState::empty(modes.clone()),
        };
        Branch { state, probability }
    };

    Ok(PmBranches {
        plus: branch(1.0),
        minus: branch(-1.0),
    })
}

/// Applies a π phase to every V photon in `mode`.
pub fn phase_flip_v(s: &PureState, mode: &ModeId) -> Result<PureState> {
    require_mode(s, mode)?;
    let terms = s.terms().map(|(occ, amp)| {
        let vs = occ
            .photons(mode)
            .iter()
            .filter(|p| **p == Polarization::V)
            .count();
        let amp = if vs % 2 == 1 { -amp } else { amp };
        (occ.clone(), amp)
    });
    Ok(PureState::assemble(s.modes().to_vec(), terms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{numbered_modes, tensor, w_ket, w_state, WCoefficients};
    use approx::assert_abs_diff_eq;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn m(name: &str) -> ModeId {
        ModeId::new(name).unwrap()
    }

    fn ket(pairs: &[(&str, Polarization)]) -> Occupancy {
        let mut occ = Occupancy::new();
        for (mode, p) in pairs {
            occ.add(&m(mode), *p).unwrap();
        }
        occ
    }

    fn photon(h: f64, v: f64, mode: &str) -> PureState {
        single_photon(c(h), c(v), &m(mode)).unwrap()
    }

    use Polarization::{H, V};

    #[test]
    fn single_photon_examples() {
        let s = photon(1.0, 0.0, "a");
        assert_eq!(s.len(), 1);
        assert_eq!(s.amplitude(&ket(&[("a", H)])), c(1.0));

        let (a1, a2) = (0.5f64, 0.3f64);
        let n = (a1 * a1 + a2 * a2).sqrt();
        let anc = photon(a1 / n, a2 / n, "b1");
        assert_abs_diff_eq!(anc.norm(), 1.0, epsilon = 1e-15);

        assert!(matches!(
            single_photon(c(0.6), c(0.9), &m("a")),
            Err(Error::PhotonNotNormalized(_))
        ));
    }

    #[test]
    fn pbs_transmits_h_from_first_input() {
        let s = tensor(&photon(1.0, 0.0, "in1"), &photon(1.0, 0.0, "x")).unwrap();
        let out = pbs(&s, &m("in1"), &m("x"), &m("o1"), &m("o2")).unwrap();
        assert_eq!(out.amplitude(&ket(&[("o1", H), ("o2", H)])), c(1.0));
    }

    #[test]
    fn pbs_bunches_odd_inputs() {
        let s = tensor(&photon(1.0, 0.0, "in1"), &photon(0.0, 1.0, "in2")).unwrap();
        let out = pbs(&s, &m("in1"), &m("in2"), &m("o1"), &m("o2")).unwrap();
        assert_eq!(out.amplitude(&ket(&[("o1", H), ("o1", V)])), c(1.0));

        let s = tensor(&photon(0.0, 1.0, "in1"), &photon(1.0, 0.0, "in2")).unwrap();
        let out = pbs(&s, &m("in1"), &m("in2"), &m("o1"), &m("o2")).unwrap();
        assert_eq!(out.amplitude(&ket(&[("o2", H), ("o2", V)])), c(1.0));
    }

    #[test]
    fn pbs_separates_even_inputs() {
        for p in [H, V] {
            let (h, v) = if p == H { (1.0, 0.0) } else { (0.0, 1.0) };
            let s = tensor(&photon(h, v, "in1"), &photon(h, v, "in2")).unwrap();
            let out = pbs(&s, &m("in1"), &m("in2"), &m("o1"), &m("o2")).unwrap();
            assert_eq!(out.amplitude(&ket(&[("o1", p), ("o2", p)])), c(1.0));
        }
    }

    #[test]
    fn pbs_is_self_inverse_and_unitary() {
        let s = tensor(&photon(0.6, 0.8, "a"), &photon(0.8, -0.6, "b")).unwrap();
        let out = pbs(&s, &m("a"), &m("b"), &m("c"), &m("d")).unwrap();
        assert_abs_diff_eq!(out.norm(), s.norm(), epsilon = 1e-15);
        let back = pbs(&out, &m("c"), &m("d"), &m("a"), &m("b")).unwrap();
        assert!(back.approx_eq(&s, 1e-15));
    }

    #[test]
    fn pbs_errors() {
        let s = tensor(&photon(1.0, 0.0, "a"), &photon(1.0, 0.0, "b")).unwrap();
        assert!(matches!(
            pbs(&s, &m("a"), &m("zz"), &m("c"), &m("d")),
            Err(Error::MissingMode(_))
        ));
        let s3 = tensor(&s, &photon(1.0, 0.0, "e")).unwrap();
        assert!(matches!(
            pbs(&s3, &m("a"), &m("b"), &m("e"), &m("d")),
            Err(Error::ModeCollision(_))
        ));
    }

    #[test]
    fn ppc_success_probability_for_product_input() {
        let (a, b, g, d) = (0.6, 0.8, 0.28, 0.96);
        let s = tensor(&photon(a, b, "a1"), &photon(g, d, "a2")).unwrap();
        let out = pbs(&s, &m("a1"), &m("a2"), &m("b1"), &m("b2")).unwrap();
        let (even, p) = ppc_postselect(&out, &m("b1"), &m("b2")).unwrap();
        assert_abs_diff_eq!(p, (a * g) * (a * g) + (b * d) * (b * d), epsilon = 1e-15);
        assert_eq!(even.len(), 2);
    }

    #[test]
    fn ppc_trivial_cases() {
        let hh = tensor(&photon(1.0, 0.0, "a1"), &photon(1.0, 0.0, "a2")).unwrap();
        let out = pbs(&hh, &m("a1"), &m("a2"), &m("b1"), &m("b2")).unwrap();
        assert_eq!(ppc_postselect(&out, &m("b1"), &m("b2")).unwrap().1, 1.0);

        let hv = tensor(&photon(1.0, 0.0, "a1"), &photon(0.0, 1.0, "a2")).unwrap();
        let out = pbs(&hv, &m("a1"), &m("a2"), &m("b1"), &m("b2")).unwrap();
        let (state, p) = ppc_postselect(&out, &m("b1"), &m("b2")).unwrap();
        assert_eq!(p, 0.0);
        assert!(state.is_empty());
    }

    #[test]
    fn cpc_examples() {
        let model = CpcModel::default();
        let hh = tensor(&photon(1.0, 0.0, "a1"), &photon(1.0, 0.0, "a2")).unwrap();
        let br = cpc_measure(&hh, &m("a1"), &m("a2"), &model).unwrap();
        assert_eq!(br.even.probability, 1.0);
        assert_eq!(br.odd.probability, 0.0);

        let (a, b, g, d) = (0.6, 0.8, 0.28, 0.96);
        let s = tensor(&photon(a, b, "a1"), &photon(g, d, "a2")).unwrap();
        let br = cpc_measure(&s, &m("a1"), &m("a2"), &model).unwrap();
        assert_abs_diff_eq!(
            br.even.probability,
            (a * g).powi(2) + (b * d).powi(2),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            br.odd.probability,
            (a * d).powi(2) + (b * g).powi(2),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            br.even.probability + br.odd.probability,
            1.0,
            epsilon = 1e-15
        );
        // QND: both photons survive.
        assert_eq!(br.odd.state.photon_count(), Some(2));
    }

    #[test]
    fn ppc_even_probability_matches_cpc_even() {
        let s = tensor(&photon(0.6, 0.8, "a1"), &photon(0.28, 0.96, "a2")).unwrap();
        let br = cpc_measure(&s, &m("a1"), &m("a2"), &CpcModel::default()).unwrap();
        let out = pbs(&s, &m("a1"), &m("a2"), &m("a1"), &m("a2")).unwrap();
        let (_, p) = ppc_postselect(&out, &m("a1"), &m("a2")).unwrap();
        assert_abs_diff_eq!(p, br.even.probability, epsilon = 1e-15);
    }

    #[test]
    fn cpc_rejects_bunched_modes() {
        let s = tensor(&photon(1.0, 0.0, "a1"), &photon(0.0, 1.0, "a2")).unwrap();
        let bunched = pbs(&s, &m("a1"), &m("a2"), &m("b1"), &m("b2")).unwrap();
        assert!(matches!(
            cpc_measure(&bunched, &m("b1"), &m("b2"), &CpcModel::default()),
            Err(Error::NotSinglePhoton { .. })
        ));
    }

    #[test]
    fn theta_must_be_positive() {
        assert!(CpcModel::new(0.0).is_err());
        assert!(CpcModel::new(-1.0).is_err());
        assert_eq!(CpcModel::new(0.3).unwrap().theta(), 0.3);
    }

    #[test]
    fn measure_pm_examples() {
        let br = measure_pm(&photon(1.0, 0.0, "d"), &m("d")).unwrap();
        assert_abs_diff_eq!(br.plus.probability, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(br.minus.probability, 0.5, epsilon = 1e-15);
        assert!(br.plus.state.modes().is_empty());

        let plus = photon(FRAC_1_SQRT_2, FRAC_1_SQRT_2, "d");
        let br = measure_pm(&plus, &m("d")).unwrap();
        assert_abs_diff_eq!(br.plus.probability, 1.0, epsilon = 1e-15);
        assert_eq!(br.minus.probability, 0.0);
        assert!(br.minus.state.is_empty());
    }

    #[test]
    fn measure_pm_marks_v_terms_with_sign() {
        // (|H>_d |V>_a + |V>_d |H>_a)/√2: minus branch carries a relative sign.
        let d = m("d");
        let a = m("a");
        let s = PureState::assemble(
            vec![d.clone(), a.clone()],
            [
                (ket(&[("d", H), ("a", V)]), c(FRAC_1_SQRT_2)),
                (ket(&[("d", V), ("a", H)]), c(FRAC_1_SQRT_2)),
            ],
        );
        let br = measure_pm(&s, &d).unwrap();
        assert_abs_diff_eq!(br.minus.probability, 0.5, epsilon = 1e-15);
        let minus = &br.minus.state;
        assert_eq!(minus.modes(), std::slice::from_ref(&a));
        assert_abs_diff_eq!(
            minus.amplitude(&ket(&[("a", V)])).re,
            FRAC_1_SQRT_2,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            minus.amplitude(&ket(&[("a", H)])).re,
            -FRAC_1_SQRT_2,
            epsilon = 1e-15
        );
        assert!(measure_pm(&s, &m("zz")).is_err());
    }

    #[test]
    fn phase_flip_is_an_involution() {
        let modes = numbered_modes("a", 3);
        let coeffs = WCoefficients::from_reals(&[0.6, 0.48, 0.64]).unwrap();
        let s = w_state(&coeffs, &modes).unwrap();
        let once = phase_flip_v(&s, &modes[0]).unwrap();
        assert_eq!(once.amplitude(&w_ket(&modes, 0)), c(-0.6));
        assert_eq!(once.amplitude(&w_ket(&modes, 1)), c(0.48));
        assert_abs_diff_eq!(once.norm(), s.norm(), epsilon = 1e-15);
        let twice = phase_flip_v(&once, &modes[0]).unwrap();
        assert_eq!(twice, s);

        let h = photon(1.0, 0.0, "x");
        assert_eq!(phase_flip_v(&h, &m("x")).unwrap(), h);
        assert!(phase_flip_v(&h, &m("y")).is_err());
    }

    #[test]
    fn probe_shift_tags() {
        assert_eq!(ParityOutcome::Even.probe_shift(), ProbeShift::Zero);
        assert_eq!(
            ParityOutcome::Odd.probe_shift(),
            ProbeShift::PlusMinusTwoTheta
        );
    }
}
