//! Sparse pure states of polarization-encoded photons in named spatial modes.
//!
//! A [`PureState`] is a superposition of basis kets. Each ket records, per
//! spatial mode, the multiset of photon polarizations it holds (at most two
//! photons share a mode, which only happens after a beam splitter bunches
//! them). Terms are stored keyed by occupancy, so equal kets are always
//! merged and the term order is the lexicographic order of occupancies.
//!
//! States are values: every operation returns a new state.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance used for normalization checks and state comparisons.
pub const DEFAULT_TOL: f64 = 1e-12;

/// Maximum number of photons a single mode may hold.
pub const MAX_PHOTONS_PER_MODE: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Polarization {
    H,
    V,
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Polarization::H => f.write_str("H"),
            Polarization::V => f.write_str("V"),
        }
    }
}

/// Name of a spatial mode, e.g. `a1` or `b3`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ModeId(String);

impl ModeId {
    pub fn new(name: impl Into<String>) -> Result<Self> {
        let name = name.into();
        if name.is_empty() {
            return Err(Error::EmptyModeName);
        }
        Ok(ModeId(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for ModeId {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        ModeId::new(value)
    }
}

impl TryFrom<&str> for ModeId {
    type Error = Error;

    fn try_from(value: &str) -> Result<Self> {
        ModeId::new(value)
    }
}

impl From<ModeId> for String {
    fn from(value: ModeId) -> Self {
        value.0
    }
}

impl fmt::Display for ModeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Photon content of one basis ket: mode -> sorted polarization multiset.
///
/// Only occupied modes are stored.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Occupancy(BTreeMap<ModeId, Vec<Polarization>>);

impl Occupancy {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builder form of [`Occupancy::add`].
    pub fn with(mut self, mode: &ModeId, pol: Polarization) -> Result<Self> {
        self.add(mode, pol)?;
        Ok(self)
    }

    pub fn add(&mut self, mode: &ModeId, pol: Polarization) -> Result<()> {
        let slot = self.0.entry(mode.clone()).or_default();
        if slot.len() >= MAX_PHOTONS_PER_MODE {
            return Err(Error::Overfilled(mode.to_string()));
        }
        slot.push(pol);
        slot.sort_unstable();
        Ok(())
    }

    pub fn photons(&self, mode: &ModeId) -> &[Polarization] {
        self.0.get(mode).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn count(&self, mode: &ModeId) -> usize {
        self.photons(mode).len()
    }

    pub fn total_photons(&self) -> usize {
        self.0.values().map(Vec::len).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ModeId, &[Polarization])> {
        self.0.iter().map(|(m, p)| (m, p.as_slice()))
    }

    /// Removes a mode and returns its photons.
    pub fn take(&mut self, mode: &ModeId) -> Vec<Polarization> {
        self.0.remove(mode).unwrap_or_default()
    }

    pub(crate) fn as_map(&self) -> &BTreeMap<ModeId, Vec<Polarization>> {
        &self.0
    }
}

/// One amplitude-weighted ket.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisTerm {
    pub amplitude: Complex64,
    pub occupancy: Occupancy,
}

impl BasisTerm {
    pub fn new(amplitude: Complex64, occupancy: Occupancy) -> Self {
        Self {
            amplitude,
            occupancy,
        }
    }
}

/// Sparse superposition over a registry of modes.
///
/// A state with no terms is the empty-projection marker returned when a
/// measurement branch has probability zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StateRepr", into = "StateRepr")]
pub struct PureState {
    modes: Vec<ModeId>,
    terms: BTreeMap<Occupancy, Complex64>,
}

impl PureState {
    /// Builds a state, merging kets with equal occupancy.
    ///
    /// Every occupied mode must be registered and every term must carry the
    /// same total photon number.
    pub fn from_terms(
        modes: Vec<ModeId>,
        terms: impl IntoIterator<Item = BasisTerm>,
    ) -> Result<Self> {
        check_registry(&modes)?;
        let terms: Vec<BasisTerm> = terms.into_iter().collect();
        let mut photon_count = None;
        for term in &terms {
            for (mode, _) in term.occupancy.iter() {
                if !modes.contains(mode) {
                    return Err(Error::MissingMode(mode.to_string()));
                }
            }
            let total = term.occupancy.total_photons();
            match photon_count {
                None => photon_count = Some(total),
                Some(expected) if expected != total => {
                    return Err(Error::PhotonCountMismatch {
                        expected,
                        got: total,
                    })
                }
                _ => {}
            }
        }
        Ok(Self::assemble(
            modes,
            terms.into_iter().map(|t| (t.occupancy, t.amplitude)),
        ))
    }

    /// A state with the given registry and no terms.
    pub fn empty(modes: Vec<ModeId>) -> Self {
        Self {
            modes,
            terms: BTreeMap::new(),
        }
    }

    /// Merges terms without validation. Callers guarantee the invariants.
    pub(crate) fn assemble(
        modes: Vec<ModeId>,
        terms: impl IntoIterator<Item = (Occupancy, Complex64)>,
    ) -> Self {
        let mut map: BTreeMap<Occupancy, Complex64> = BTreeMap::new();
        for (occ, amp) in terms {
            *map.entry(occ).or_insert(Complex64::new(0.0, 0.0)) += amp;
        }
        map.retain(|_, amp| amp.norm_sqr() != 0.0);
        Self { modes, terms: map }
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn modes(&self) -> &[ModeId] {
        &self.modes
    }

    pub fn has_mode(&self, mode: &ModeId) -> bool {
        self.modes.contains(mode)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Occupancy, Complex64)> {
        self.terms.iter().map(|(o, a)| (o, *a))
    }

    pub fn amplitude(&self, occupancy: &Occupancy) -> Complex64 {
        self.terms
            .get(occupancy)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Total photon number shared by every term, `None` for the empty state.
    pub fn photon_count(&self) -> Option<usize> {
        self.terms.keys().next().map(Occupancy::total_photons)
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self::assemble(
            self.modes.clone(),
            self.terms.iter().map(|(o, a)| (o.clone(), a * factor)),
        )
    }

    pub fn rename_mode(&self, from: &ModeId, to: &ModeId) -> Result<Self> {
        if !self.has_mode(from) {
            return Err(Error::MissingMode(from.to_string()));
        }
        if from == to {
            return Ok(self.clone());
        }
        if self.has_mode(to) {
            return Err(Error::ModeCollision(to.to_string()));
        }
        let modes = self
            .modes
            .iter()
            .map(|m| if m == from { to.clone() } else { m.clone() })
            .collect();
        let terms = self.terms.iter().map(|(occ, amp)| {
            let mut occ = occ.clone();
            let photons = occ.take(from);
            if !photons.is_empty() {
                occ.0.insert(to.clone(), photons);
            }
            (occ, *amp)
        });
        Ok(Self::assemble(modes, terms))
    }

    /// Term-wise comparison of amplitudes within `tol`.
    pub fn approx_eq(&self, other: &PureState, tol: f64) -> bool {
        if !same_registry(&self.modes, &other.modes) {
            return false;
        }
        let keys = self.terms.keys().chain(other.terms.keys());
        keys.into_iter()
            .all(|occ| (self.amplitude(occ) - other.amplitude(occ)).norm() <= tol)
    }

    /// True when the states coincide up to a global phase, i.e.
    /// `|<a|b>| = |a| |b|` within `tol`.
    pub fn equal_up_to_phase(&self, other: &PureState, tol: f64) -> bool {
        let Ok(overlap) = inner_product(self, other) else {
            return false;
        };
        (overlap.norm() - self.norm() * other.norm()).abs() <= tol
            && (self.norm() - other.norm()).abs() <= tol
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("state serialization cannot fail")
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

impl fmt::Display for PureState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (occ, amp)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "({:.6}{:+.6}i)", amp.re, amp.im)?;
            for (mode, photons) in occ.iter() {
                for p in photons {
                    write!(f, "|{p}>_{mode}")?;
                }
            }
        }
        Ok(())
    }
}

fn check_registry(modes: &[ModeId]) -> Result<()> {
    for (i, m) in modes.iter().enumerate() {
        if modes[..i].contains(m) {
            return Err(Error::DuplicateMode(m.to_string()));
        }
    }
    Ok(())
}

fn same_registry(a: &[ModeId], b: &[ModeId]) -> bool {
    a.len() == b.len() && a.iter().all(|m| b.contains(m))
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    amp: [f64; 2],
    occ: BTreeMap<ModeId, Vec<Polarization>>,
}

#[derive(Serialize, Deserialize)]
struct StateRepr {
    modes: Vec<ModeId>,
    terms: Vec<TermRepr>,
}

impl From<PureState> for StateRepr {
    fn from(state: PureState) -> Self {
        let terms = state
            .terms
            .iter()
            .map(|(occ, amp)| TermRepr {
                amp: [amp.re, amp.im],
                occ: occ.as_map().clone(),
            })
            .collect();
        StateRepr {
            modes: state.modes,
            terms,
        }
    }
}

impl TryFrom<StateRepr> for PureState {
    type Error = Error;

    fn try_from(repr: StateRepr) -> Result<Self> {
        let mut terms = Vec::with_capacity(repr.terms.len());
        for t in repr.terms {
            let mut occ = Occupancy::new();
            for (mode, photons) in &t.occ {
                for p in photons {
                    occ.add(mode, *p)?;
                }
            }
            terms.push(BasisTerm::new(Complex64::new(t.amp[0], t.amp[1]), occ));
        }
        PureState::from_terms(repr.modes, terms)
    }
}

/// Coefficients of a less-entangled W state, indexed from photon 1.
///
/// Every coefficient is nonzero and the squared moduli sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Complex64>", into = "Vec<Complex64>")]
pub struct WCoefficients {
    alphas: Vec<Complex64>,
}

impl WCoefficients {
    pub fn new(alphas: Vec<Complex64>) -> Result<Self> {
        Self::with_tolerance(alphas, DEFAULT_TOL)
    }

    pub fn with_tolerance(alphas: Vec<Complex64>, tol: f64) -> Result<Self> {
        Self::check_entries(&alphas)?;
        let sum: f64 = alphas.iter().map(|a| a.norm_sqr()).sum();
        if (sum - 1.0).abs() > tol {
            return Err(Error::NotNormalized(sum));
        }
        Ok(Self { alphas })
    }

    pub fn from_reals(alphas: &[f64]) -> Result<Self> {
        Self::new(alphas.iter().map(|&a| Complex64::new(a, 0.0)).collect())
    }

    /// Rescales arbitrary nonzero coefficients to unit norm.
    pub fn normalized(alphas: Vec<Complex64>) -> Result<Self> {
        Self::check_entries(&alphas)?;
        let norm = alphas.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        Self::new(alphas.into_iter().map(|a| a / norm).collect())
    }

    /// The maximally entangled W state, all coefficients `1/sqrt(n)`.
    pub fn uniform(n: usize) -> Result<Self> {
        let a = 1.0 / (n as f64).sqrt();
        Self::from_reals(&vec![a; n])
    }

    fn check_entries(alphas: &[Complex64]) -> Result<()> {
        if alphas.len() < 2 {
            return Err(Error::TooFewPhotons(alphas.len()));
        }
        for (i, a) in alphas.iter().enumerate() {
            if !a.re.is_finite() || !a.im.is_finite() {
                return Err(Error::NonFiniteCoefficient(i + 1));
            }
            if a.norm_sqr() == 0.0 {
                return Err(Error::ZeroCoefficient(i + 1));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.alphas.len()
    }

    pub fn alphas(&self) -> &[Complex64] {
        &self.alphas
    }

    /// Coefficient of photon `photon` (1-based).
    pub fn alpha(&self, photon: usize) -> Result<Complex64> {
        check_photon(photon, self.n())?;
        Ok(self.alphas[photon - 1])
    }

    /// Squared moduli `|alpha_i|^2`, the only inputs the closed forms need.
    pub fn moduli_sqr(&self) -> Vec<f64> {
        self.alphas.iter().map(|a| a.norm_sqr()).collect()
    }
}

impl TryFrom<Vec<Complex64>> for WCoefficients {
    type Error = Error;

    fn try_from(value: Vec<Complex64>) -> Result<Self> {
        WCoefficients::new(value)
    }
}

impl From<WCoefficients> for Vec<Complex64> {
    fn from(value: WCoefficients) -> Self {
        value.alphas
    }
}

pub(crate) fn check_photon(photon: usize, n: usize) -> Result<()> {
    if photon == 0 || photon > n {
        return Err(Error::PhotonIndex { index: photon, n });
    }
    Ok(())
}

/// The ket with a V photon in `modes[excited]` and H photons elsewhere.
pub fn w_ket(modes: &[ModeId], excited: usize) -> Occupancy {
    let mut occ = Occupancy::new();
    for (i, mode) in modes.iter().enumerate() {
        let pol = if i == excited {
            Polarization::V
        } else {
            Polarization::H
        };
        occ.0.insert(mode.clone(), vec![pol]);
    }
    occ
}

/// `sum_i alpha_i |H..V_i..H>` over the given modes.
pub fn w_state(coeffs: &WCoefficients, modes: &[ModeId]) -> Result<PureState> {
    if modes.len() != coeffs.n() {
        return Err(Error::ModeCountMismatch {
            expected: coeffs.n(),
            got: modes.len(),
        });
    }
    check_registry(modes)?;
    let terms = coeffs
        .alphas()
        .iter()
        .enumerate()
        .map(|(i, &a)| (w_ket(modes, i), a));
    Ok(PureState::assemble(modes.to_vec(), terms))
}

pub fn tensor(a: &PureState, b: &PureState) -> Result<PureState> {
    if let Some(m) = a.modes.iter().find(|m| b.modes.contains(m)) {
        return Err(Error::OverlappingMode(m.to_string()));
    }
    let modes = a.modes.iter().chain(&b.modes).cloned().collect();
    let terms = a.terms.iter().flat_map(|(oa, xa)| {
        b.terms.iter().map(move |(ob, xb)| {
            let mut occ = oa.clone();
            occ.0
                .extend(ob.0.iter().map(|(m, p)| (m.clone(), p.clone())));
            (occ, xa * xb)
        })
    });
    Ok(PureState::assemble(modes, terms))
}

/// Returns the unit-norm state and the original norm.
pub fn normalize(s: &PureState) -> Result<(PureState, f64)> {
    let norm = s.norm();
    if norm == 0.0 {
        return Err(Error::ZeroState);
    }
    Ok((s.scaled(Complex64::new(1.0 / norm, 0.0)), norm))
}

/// Keeps the terms accepted by `keep`.
///
/// Returns the renormalized kept component and its squared norm. A
/// projection that keeps nothing yields the empty state and probability 0.
pub fn project<F>(s: &PureState, keep: F) -> (PureState, f64)
where
    F: Fn(&Occupancy) -> bool,
{
    let kept = PureState::assemble(
        s.modes.clone(),
        s.terms
            .iter()
            .filter(|(occ, _)| keep(occ))
            .map(|(o, a)| (o.clone(), *a)),
    );
    let probability = kept.norm_sqr();
    match normalize(&kept) {
        Ok((state, _)) => (state, probability),
        Err(_) => (PureState::empty(s.modes.clone()), 0.0),
    }
}

/// `<a|b>`, conjugate-linear in `a`.
pub fn inner_product(a: &PureState, b: &PureState) -> Result<Complex64> {
    if !same_registry(&a.modes, &b.modes) {
        return Err(Error::RegistryMismatch);
    }
    if let (Some(na), Some(nb)) = (a.photon_count(), b.photon_count()) {
        if na != nb {
            return Err(Error::PhotonCountMismatch {
                expected: na,
                got: nb,
            });
        }
    }
    // Iterate over the smaller map.
    let (small, large, flip) = if a.len() <= b.len() {
        (a, b, false)
    } else {
        (b, a, true)
    };
    let mut acc = Complex64::new(0.0, 0.0);
    for (occ, x) in &small.terms {
        if let Some(y) = large.terms.get(occ) {
            acc += if flip { y.conj() * x } else { x.conj() * y };
        }
    }
    Ok(acc)
}

/// The maximally entangled W state over `modes`.
pub fn max_w_state(modes: &[ModeId]) -> Result<PureState> {
    let coeffs = WCoefficients::uniform(modes.len())?;
    w_state(&coeffs, modes)
}

/// `|<W_max|s>|^2` where `W_max` has every coefficient `1/sqrt(N)`.
pub fn max_w_fidelity(s: &PureState, w_modes: &[ModeId]) -> Result<f64> {
    if let Some(count) = s.photon_count() {
        if count != w_modes.len() {
            return Err(Error::PhotonCountMismatch {
                expected: w_modes.len(),
                got: count,
            });
        }
    }
    let target = max_w_state(w_modes)?;
    let overlap = inner_product(&target, s)?;
    Ok(overlap.norm_sqr().clamp(0.0, 1.0))
}

/// Mode names `prefix1 .. prefixN`.
pub fn numbered_modes(prefix: &str, n: usize) -> Vec<ModeId> {
    (1..=n).map(|i| ModeId(format!("{prefix}{i}"))).collect()
}
