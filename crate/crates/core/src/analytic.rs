//! Closed-form success probabilities.
//!
//! Everything here takes squared moduli `|α_i|^2` and never touches a state
//! vector, so it can be checked against the simulator in [`crate::protocol`].
//!
//! Notation used below, for the step that concentrates photon `k` with
//! pivot `p` (after relabelling so that the pivot sits in slot 2):
//!
//! * `a = |α_k|^2`, `b = |α_p|^2`;
//! * `c`: number of slots already carrying the pivot value, pivot
//!   included (1 for the first step, `K-1` for slot `K >= 3`);
//! * `R`: sum of `|α_j|^2` over the slots still to be processed;
//! * `D = c b + a + R`: squared norm of the incoming state in these units.
//!
//! The probability that photon `k` succeeds at exactly attempt `m` is
//!
//! ```text
//!            a^(2^(m-1)) b^(2^(m-1)) ((c+1) + R/b)
//! P_m = ---------------------------------------------------
//!        D * prod_{j=1..m} (a^(2^(j-1)) + b^(2^(j-1)))
//! ```
//!
//! which for `m = 1` reduces to `((c+1) a b + a R) / (D (a + b))`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::{check_photon, DEFAULT_TOL};

/// One photon's row: probability of success at each attempt and their sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRow {
    pub k: usize,
    pub per_m: Vec<f64>,
    pub sum: f64,
}

/// Per-photon, per-attempt success probabilities and their product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityTable {
    rows: Vec<StepRow>,
    total: f64,
}

impl ProbabilityTable {
    /// Rows in execution order; sums and total are derived.
    pub fn from_rows(rows: Vec<(usize, Vec<f64>)>) -> Self {
        let rows: Vec<StepRow> = rows
            .into_iter()
            .map(|(k, per_m)| StepRow {
                k,
                sum: per_m.iter().sum(),
                per_m,
            })
            .collect();
        let total = rows.iter().map(|r| r.sum).product();
        Self { rows, total }
    }

    pub fn rows(&self) -> &[StepRow] {
        &self.rows
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    fn row(&self, k: usize) -> Option<&StepRow> {
        self.rows.iter().find(|r| r.k == k)
    }

    pub fn get(&self, k: usize, m: usize) -> Option<f64> {
        self.row(k)?.per_m.get(m.checked_sub(1)?).copied()
    }

    pub fn per_step_sum(&self, k: usize) -> Option<f64> {
        self.row(k).map(|r| r.sum)
    }

    /// Success probability of photon `k` within the first `m` attempts.
    pub fn cumulative(&self, k: usize, m: usize) -> Option<f64> {
        let row = self.row(k)?;
        Some(row.per_m.iter().take(m).sum())
    }

    /// Total success probability when every party allows `m` attempts.
    pub fn total_at(&self, m: usize) -> f64 {
        self.rows
            .iter()
            .map(|r| r.per_m.iter().take(m).sum::<f64>())
            .product()
    }

    pub fn max_m(&self) -> usize {
        self.rows.iter().map(|r| r.per_m.len()).max().unwrap_or(0)
    }
}

/// Checks squared moduli: at least two, all positive and finite, unit sum.
pub fn check_moduli(alphas2: &[f64]) -> Result<()> {
    if alphas2.len() < 2 {
        return Err(Error::TooFewPhotons(alphas2.len()));
    }
    for (i, a) in alphas2.iter().enumerate() {
        if !a.is_finite() {
            return Err(Error::NonFiniteCoefficient(i + 1));
        }
        if *a <= 0.0 {
            return Err(Error::ZeroCoefficient(i + 1));
        }
    }
    let sum: f64 = alphas2.iter().sum();
    if (sum - 1.0).abs() > DEFAULT_TOL {
        return Err(Error::NotNormalized(sum));
    }
    Ok(())
}

/// The slot photon `photon` occupies once the pivot is swapped into slot 2.
fn slot_of(photon: usize, pivot: usize) -> usize {
    if photon == pivot {
        2
    } else if photon == 2 {
        pivot
    } else {
        photon
    }
}

#[derive(Debug, Clone, Copy)]
struct StepParams {
    a: f64,
    b: f64,
    c: f64,
    rest: f64,
    norm: f64,
}

fn step_params(alphas2: &[f64], k: usize, pivot: usize) -> Result<StepParams> {
    check_moduli(alphas2)?;
    let n = alphas2.len();
    check_photon(k, n)?;
    check_photon(pivot, n)?;
    if k == pivot {
        return Err(Error::StepIsPivot(k));
    }
    let mut slots = alphas2.to_vec();
    slots.swap(1, pivot - 1);
    let pos = slot_of(k, pivot);
    let a = slots[pos - 1];
    let b = slots[1];
    let c = if pos == 1 { 1.0 } else { (pos - 1) as f64 };
    let rest: f64 = ((pos + 1)..=n)
        .filter(|&j| j != 2)
        .map(|j| slots[j - 1])
        .sum();
    Ok(StepParams {
        a,
        b,
        c,
        rest,
        norm: c * b + a + rest,
    })
}

/// Success probability of photon `k` on a single attempt, given that all
/// earlier photons succeeded.
pub fn p_step_ppc(alphas2: &[f64], k: usize, pivot: usize) -> Result<f64> {
    let StepParams {
        a,
        b,
        c,
        rest,
        norm,
    } = step_params(alphas2, k, pivot)?;
    Ok(((c + 1.0) * a * b + a * rest) / (norm * (a + b)))
}

/// Total single-attempt success probability, `N prod_i a_i / prod_{k != p} (a_p + a_k)`.
pub fn p_total_ppc(alphas2: &[f64], pivot: usize) -> Result<f64> {
    check_moduli(alphas2)?;
    check_photon(pivot, alphas2.len())?;
    let b = alphas2[pivot - 1];
    let n = alphas2.len() as f64;
    let mut total = n;
    for (i, a) in alphas2.iter().enumerate() {
        total *= a;
        if i + 1 != pivot {
            total /= b + a;
        }
    }
    Ok(total)
}

/// Probability that photon `k` succeeds at exactly attempt `m`, given that
/// all earlier photons succeeded.
///
/// With `h = max(a, b)` and `r = min(a, b) / h` the ratio of powers becomes
/// `h r^(2^(m-1)) / prod_j (1 + r^(2^(j-1)))`, which only ever raises a
/// number `<= 1` to a power. For large `m` it underflows to `0.0`.
pub fn p_step_cpc(alphas2: &[f64], k: usize, m: usize, pivot: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::ZeroIteration);
    }
    let StepParams {
        a,
        b,
        c,
        rest,
        norm,
    } = step_params(alphas2, k, pivot)?;
    let hi = a.max(b);
    let r = a.min(b) / hi;
    let mut power = r; // r^(2^(j-1))
    let mut denom = 1.0;
    for j in 1..=m {
        denom *= 1.0 + power;
        if j < m {
            power *= power;
        }
    }
    Ok(((c + 1.0) + rest / b) / norm * hi * power / denom)
}

/// Table of [`p_step_cpc`] for every photon and `m = 1..=max_m`.
pub fn p_total_cpc(alphas2: &[f64], max_m: usize, pivot: usize) -> Result<ProbabilityTable> {
    if max_m == 0 {
        return Err(Error::ZeroIteration);
    }
    check_moduli(alphas2)?;
    let order = crate::protocol::step_order(alphas2.len(), pivot)?;
    let rows = order
        .into_iter()
        .map(|k| {
            let per_m = (1..=max_m)
                .map(|m| p_step_cpc(alphas2, k, m, pivot))
                .collect::<Result<Vec<_>>>()?;
            Ok((k, per_m))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ProbabilityTable::from_rows(rows))
}

/// How to normalize the coefficients after a successful step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationForm {
    /// Every term shares `sqrt(K b + sum_{j>K} a_j)`.
    Consistent,
    /// The pivot's term uses `sqrt(K b + sum_{j>=4} a_j)` regardless of `K`.
    /// This is a known misprint of the post-step state; it coincides with
    /// the consistent form only for slot 3.
    ShiftedPivotTerm,
}

/// Moduli of the state's coefficients after photon `k` succeeds, indexed by
/// original photon (`result[j-1]` belongs to photon `j`).
pub fn post_step_moduli(
    alphas2: &[f64],
    k: usize,
    pivot: usize,
    form: NormalizationForm,
) -> Result<Vec<f64>> {
    let StepParams { b, c, rest, .. } = step_params(alphas2, k, pivot)?;
    let n = alphas2.len();
    let pos = slot_of(k, pivot);
    let norm = ((c + 1.0) * b + rest).sqrt();
    let mut out = vec![0.0; n];
    for photon in 1..=n {
        let slot = slot_of(photon, pivot);
        let done = slot <= pos || slot == 2;
        let value = if done {
            b.sqrt()
        } else {
            alphas2[photon - 1].sqrt()
        };
        let denom = match form {
            NormalizationForm::ShiftedPivotTerm if slot == 2 && pos >= 3 => {
                let mut slots = alphas2.to_vec();
                slots.swap(1, pivot - 1);
                let tail: f64 = slots.iter().skip(3).sum();
                ((c + 1.0) * b + tail).sqrt()
            }
            _ => norm,
        };
        out[photon - 1] = value / denom;
    }
    Ok(out)
}
