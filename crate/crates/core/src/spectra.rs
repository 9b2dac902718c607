//! Parametric eigenvalue sequences of unbounded positive operators and
//! infinite-rank diagonal states, with partition sums, energy moments and the
//! increase/decrease coefficients that govern their convergence.
//!
//! Every sequence is indexed from `k = 1` and, apart from explicit finite
//! lists, is evaluated through the continuous variable `u = ln(k + 1)`, so the
//! same closed form serves both the partial sums and the tail integral.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{self, Term};

/// Model for a positive sequence `q_n -> 0`, `n >= 2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum QModel {
    /// `q_n = 1 / ln(n ln^3(2n + 1))`.
    LogLog3,
    /// `q_n = n^-exponent`.
    Power { exponent: f64 },
    /// `q_n = 1 / (1 + ln(1 + ln n))`; `sum exp(-lambda/q_n)` diverges for all lambda.
    IteratedLog,
}

impl QModel {
    /// `1 / q_n` as a function of `ln n` (n need not be an integer).
    pub fn inv_q_from_log(&self, ln_n: f64) -> f64 {
        match *self {
            QModel::LogLog3 => {
                let ln_2n1 = ln_n + (2.0 + (-ln_n).exp()).ln();
                ln_n + 3.0 * ln_2n1.ln()
            }
            QModel::Power { exponent } => (exponent * ln_n).exp(),
            QModel::IteratedLog => 1.0 + ln_n.ln_1p(),
        }
    }

    pub fn q(&self, n: usize) -> f64 {
        1.0 / self.inv_q_from_log((n as f64).ln())
    }

    /// `inf { lambda : sum_n exp(-lambda / q_n) < inf }`.
    pub fn threshold(&self) -> f64 {
        match self {
            QModel::LogLog3 => 1.0,
            QModel::Power { .. } => 0.0,
            QModel::IteratedLog => f64::INFINITY,
        }
    }

    /// Whether `sum_n q_n^-extra exp(-threshold / q_n)` converges, i.e. the
    /// power of `1/q_n` the series tolerates exactly at the threshold.
    pub(crate) fn converges_at_threshold(&self, extra: f64) -> bool {
        match self {
            // exp(-1/q_n) = 1/(n ln^3(2n+1)) and 1/q_n ~ ln n
            QModel::LogLog3 => 3.0 - extra > 1.0,
            QModel::Power { .. } | QModel::IteratedLog => false,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            QModel::Power { exponent } if !(exponent > 0.0 && exponent.is_finite()) => Err(
                Error::ValidationFailed(format!("q-model exponent must be positive, got {exponent}")),
            ),
            _ => Ok(()),
        }
    }
}

fn one() -> f64 {
    1.0
}

fn is_one(x: &f64) -> bool {
    *x == 1.0
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

/// The parametric families of nondecreasing eigenvalue sequences `h_k`, `k >= 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum Family {
    /// Finite sorted list of levels.
    Explicit { values: Vec<f64> },
    /// `h_k = a k + b`.
    Affine { a: f64, b: f64 },
    /// `h_k = scale * ln((k + 1) ln^p(k + 1)) + shift`.
    PowerLog {
        p: f64,
        #[serde(default = "one", skip_serializing_if = "is_one")]
        scale: f64,
        #[serde(default, skip_serializing_if = "is_zero")]
        shift: f64,
    },
    /// `h_k = scale / q_{k+1} + shift`.
    Reciprocal {
        q_model: QModel,
        #[serde(default = "one", skip_serializing_if = "is_one")]
        scale: f64,
        #[serde(default, skip_serializing_if = "is_zero")]
        shift: f64,
    },
}

impl Family {
    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::ValidationFailed(msg));
        match self {
            Family::Explicit { values } => {
                if values.is_empty() {
                    return bad("explicit sequence is empty".into());
                }
                if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return bad("explicit levels must be finite and nonnegative".into());
                }
                if values.windows(2).any(|w| w[1] < w[0]) {
                    return bad("explicit levels must be sorted nondecreasing".into());
                }
                Ok(())
            }
            Family::Affine { a, b } => {
                if !(*a > 0.0 && a.is_finite() && b.is_finite()) {
                    return bad(format!("affine family needs a > 0, got a = {a}, b = {b}"));
                }
                Ok(())
            }
            Family::PowerLog { p, scale, shift } => {
                if !(*p >= 0.0 && *scale > 0.0 && p.is_finite() && scale.is_finite() && shift.is_finite()) {
                    return bad(format!("power-log family needs p >= 0 and scale > 0, got p = {p}, scale = {scale}"));
                }
                Ok(())
            }
            Family::Reciprocal { q_model, scale, shift } => {
                q_model.validate()?;
                if !(*scale > 0.0 && scale.is_finite() && shift.is_finite()) {
                    return bad(format!("reciprocal family needs scale > 0, got {scale}"));
                }
                Ok(())
            }
        }
    }

    /// Level `h_k` with `u = ln(k + 1)`. Not meaningful for explicit lists.
    fn level_at(&self, u: f64) -> f64 {
        match *self {
            Family::Explicit { ref values } => {
                let k = (u.exp() - 1.0).round() as usize;
                values[k.clamp(1, values.len()) - 1]
            }
            Family::Affine { a, b } => a * u.exp_m1() + b,
            Family::PowerLog { p, scale, shift } => {
                let lp = if p == 0.0 { 0.0 } else { p * u.ln() };
                scale * (u + lp) + shift
            }
            Family::Reciprocal { q_model, scale, shift } => scale * q_model.inv_q_from_log(u) + shift,
        }
    }

    fn ic(&self) -> f64 {
        match *self {
            Family::Explicit { .. } | Family::Affine { .. } => 0.0,
            Family::PowerLog { scale, .. } => 1.0 / scale,
            Family::Reciprocal { q_model, scale, .. } => q_model.threshold() / scale,
        }
    }

    /// Whether `sum_k h_k^m exp(-lam h_k)` converges.
    fn converges(&self, lam: f64, m: u32) -> bool {
        if let Family::Explicit { .. } = self {
            return lam.is_finite();
        }
        let ic = self.ic();
        if !ic.is_finite() || lam < ic {
            return false;
        }
        if lam > ic {
            return true;
        }
        match *self {
            Family::Explicit { .. } => true,
            Family::Affine { .. } => false,
            // terms ~ u^(m - p) / (k + 1)
            Family::PowerLog { p, .. } => p - m as f64 > 1.0,
            Family::Reciprocal { q_model, .. } => q_model.converges_at_threshold(m as f64),
        }
    }

    fn affine_map(&self, alpha: f64, c: f64) -> Family {
        match self.clone() {
            Family::Explicit { values } => Family::Explicit {
                values: values.iter().map(|v| alpha * v + c).collect(),
            },
            Family::Affine { a, b } => Family::Affine { a: alpha * a, b: alpha * b + c },
            Family::PowerLog { p, scale, shift } => Family::PowerLog {
                p,
                scale: alpha * scale,
                shift: alpha * shift + c,
            },
            Family::Reciprocal { q_model, scale, shift } => Family::Reciprocal {
                q_model,
                scale: alpha * scale,
                shift: alpha * shift + c,
            },
        }
    }
}

#[derive(Serialize, Deserialize)]
struct SpectralRecord {
    #[serde(flatten)]
    family: Family,
    #[serde(default)]
    analytic_ic: Option<f64>,
}

/// Nondecreasing, unbounded eigenvalue sequence of a positive operator with
/// discrete spectrum (or a finite list of levels).
///
/// Serialized as `{"kind": ..., "params": {...}, "analytic_ic": number|null}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpectralRecord", into = "SpectralRecord")]
pub struct SpectralSequence {
    family: Family,
    analytic_ic: Option<f64>,
    d_min: usize,
}

impl TryFrom<SpectralRecord> for SpectralSequence {
    type Error = Error;

    fn try_from(rec: SpectralRecord) -> Result<Self> {
        let mut seq = SpectralSequence::new(rec.family)?;
        match rec.analytic_ic {
            None => seq.analytic_ic = None,
            Some(v) if (v - seq.family.ic()).abs() <= 1e-12 * v.abs().max(1.0) => {}
            Some(v) => {
                return Err(Error::ValidationFailed(format!(
                    "analytic_ic {v} disagrees with the family value {}",
                    seq.family.ic()
                )))
            }
        }
        Ok(seq)
    }
}

impl From<SpectralSequence> for SpectralRecord {
    fn from(seq: SpectralSequence) -> Self {
        SpectralRecord { family: seq.family, analytic_ic: seq.analytic_ic }
    }
}

impl SpectralSequence {
    pub fn new(family: Family) -> Result<Self> {
        family.validate()?;
        let d_min = match &family {
            Family::Explicit { values } => values.iter().filter(|v| **v == values[0]).count(),
            _ => 1,
        };
        let analytic_ic = Some(family.ic());
        Ok(SpectralSequence { family, analytic_ic, d_min })
    }

    pub fn explicit(values: Vec<f64>) -> Result<Self> {
        Self::new(Family::Explicit { values })
    }

    /// `h_k = a k + b`.
    pub fn affine(a: f64, b: f64) -> Result<Self> {
        Self::new(Family::Affine { a, b })
    }

    /// `h_k = ln((k + 1) ln^p(k + 1))`; `p = 3` gives an operator with
    /// `ic = 1` and finite `h_*`.
    pub fn power_log(p: f64) -> Result<Self> {
        Self::new(Family::PowerLog { p, scale: 1.0, shift: 0.0 })
    }

    /// `h_k = 1 / q_{k+1}`.
    pub fn reciprocal(q_model: QModel) -> Result<Self> {
        Self::new(Family::Reciprocal { q_model, scale: 1.0, shift: 0.0 })
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn analytic_ic(&self) -> Option<f64> {
        self.analytic_ic
    }

    /// Exact increase coefficient of the family. Solvers use this value.
    pub fn ic(&self) -> f64 {
        self.family.ic()
    }

    pub fn d_min(&self) -> usize {
        self.d_min
    }

    pub fn is_finite(&self) -> bool {
        matches!(self.family, Family::Explicit { .. })
    }

    /// Number of levels of a finite sequence.
    pub fn len(&self) -> Option<usize> {
        match &self.family {
            Family::Explicit { values } => Some(values.len()),
            _ => None,
        }
    }

    /// `h_k`, `k >= 1`.
    pub fn level(&self, k: usize) -> f64 {
        assert!(k >= 1, "levels are indexed from 1");
        match &self.family {
            Family::Explicit { values } => values[k - 1],
            Family::Affine { a, b } => a * k as f64 + b,
            f => f.level_at(((k + 1) as f64).ln()),
        }
    }

    /// Minimal eigenvalue `h_m`.
    pub fn h_min(&self) -> f64 {
        self.level(1)
    }

    /// `alpha * h_k + c`.
    pub fn affine_map(&self, alpha: f64, c: f64) -> Result<Self> {
        Self::new(self.family.affine_map(alpha, c))
    }

    pub fn converges(&self, lam: f64, moment: u32) -> bool {
        self.family.converges(lam, moment)
    }
}

/// Partition sum and first two energy moments at inverse temperature `lam`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PartitionReport {
    /// `sum exp(-lam h_k)`
    pub z: f64,
    /// `sum h_k exp(-lam h_k)`
    pub e: f64,
    /// `sum h_k^2 exp(-lam h_k)`; `+inf` when only this moment diverges.
    pub v: f64,
    /// `ln z`, accurate even when `z` itself over- or underflows.
    pub log_z: f64,
    pub n_used: usize,
    /// Bound on the error of the tail correction for `z`.
    pub tail_bound: f64,
}

impl PartitionReport {
    /// Mean energy `e / z` of the Gibbs distribution.
    pub fn mean(&self) -> f64 {
        self.e / self.z
    }
}

/// Moments scaled by `exp(lam * shift)`, `shift = h_1`, for numerical range.
#[derive(Clone, Copy, Debug)]
pub(crate) struct ScaledMoments {
    pub shift: f64,
    pub lam: f64,
    pub z: f64,
    pub e: f64,
    pub v: f64,
    pub n_used: usize,
    pub tail_bound: f64,
}

impl ScaledMoments {
    pub fn mean(&self) -> f64 {
        self.e / self.z
    }

    pub fn log_z(&self) -> f64 {
        -self.lam * self.shift + self.z.ln()
    }

    /// Variance of the level under the Gibbs distribution.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        (self.v / self.z - m * m).max(0.0)
    }
}

fn check_tol(rel_tol: f64) -> Result<()> {
    if rel_tol > 0.0 && rel_tol <= 1e-2 {
        Ok(())
    } else {
        Err(Error::InvalidTolerance(rel_tol))
    }
}

/// Computes `z` and `e`, and `v` when `with_variance` is set.
pub(crate) fn scaled_moments(
    seq: &SpectralSequence,
    lam: f64,
    rel_tol: f64,
    with_variance: bool,
) -> Result<ScaledMoments> {
    check_tol(rel_tol)?;
    if !lam.is_finite() {
        return Err(Error::Divergent(format!("inverse temperature {lam} is not finite")));
    }
    let shift = seq.h_min();
    if let Family::Explicit { values } = &seq.family {
        let (mut z, mut e, mut v) = (0.0, 0.0, 0.0);
        for &h in values {
            let w = (-lam * (h - shift)).exp();
            z += w;
            e += h * w;
            v += h * h * w;
        }
        return Ok(ScaledMoments { shift, lam, z, e, v, n_used: values.len(), tail_bound: 0.0 });
    }

    if !seq.converges(lam, 0) || !seq.converges(lam, 1) {
        return Err(Error::Divergent(format!(
            "partition sum diverges at lambda = {lam} (ic = {})",
            seq.ic()
        )));
    }
    let want_v = with_variance && seq.converges(lam, 2);
    let family = &seq.family;
    let term = |u: f64| {
        let h = family.level_at(u);
        let base = -lam * (h - shift);
        let lh = h.abs().ln();
        let s = h.signum();
        [
            Term::positive(base),
            Term { log_mag: base + lh, sign: s },
            Term::positive(base + 2.0 * lh),
        ]
    };
    let [z, e, v] = series::sum_series(term, [true, true, want_v], rel_tol)?;
    Ok(ScaledMoments {
        shift,
        lam,
        z: z.value,
        e: e.value,
        v: if want_v { v.value } else { f64::INFINITY },
        n_used: z.n_used,
        tail_bound: z.tail_bound,
    })
}

/// Partition sum `z = sum exp(-lam h_k)` with energy moments `e` and `v`,
/// truncated adaptively so that the tail estimate is below `rel_tol` of each
/// partial sum.
pub fn partition_moments(seq: &SpectralSequence, lam: f64, rel_tol: f64) -> Result<PartitionReport> {
    let m = scaled_moments(seq, lam, rel_tol, true)?;
    let scale = (-lam * m.shift).exp();
    Ok(PartitionReport {
        z: m.z * scale,
        e: m.e * scale,
        v: m.v * scale,
        log_z: m.log_z(),
        n_used: m.n_used,
        tail_bound: m.tail_bound * scale,
    })
}

/// Increase or decrease coefficient, with a flag telling whether it is exact.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CoefficientEstimate {
    pub value: f64,
    /// `false` when the value comes from the finite-range limsup estimator.
    pub exact: bool,
}

/// `ic(H) = inf { lam > 0 : sum exp(-lam h_k) < inf }`.
///
/// Returns the analytic coefficient when the sequence carries one; otherwise
/// `max (ln k) / h_k` over `k in [k_max/2, k_max]`, flagged as an estimate.
pub fn increase_coefficient(seq: &SpectralSequence, k_max: usize) -> CoefficientEstimate {
    if let Some(v) = seq.analytic_ic() {
        return CoefficientEstimate { value: v, exact: true };
    }
    if let Some(n) = seq.len() {
        let _ = n;
        return CoefficientEstimate { value: 0.0, exact: true };
    }
    CoefficientEstimate { value: limsup_estimate(seq, k_max.max(1000)), exact: false }
}

fn limsup_estimate(seq: &SpectralSequence, k_max: usize) -> f64 {
    let lo = k_max / 2;
    let step = ((k_max - lo) / 4096).max(1);
    (lo..=k_max)
        .step_by(step)
        .map(|k| {
            let h = seq.level(k);
            if h > 0.0 {
                (k as f64).ln() / h
            } else {
                f64::INFINITY
            }
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum SpectrumModel {
    /// Finite nonincreasing list of positive probabilities.
    Finite { entries: Vec<f64> },
    /// `lambda_k = exp(-beta h_k) / Z(beta)`.
    Gibbs { sequence: SpectralSequence, beta: f64 },
}

#[derive(Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
enum SpectrumRecord {
    Finite { entries: Vec<f64> },
    Gibbs { sequence: SpectralSequence, beta: f64 },
    Geometric { ratio: f64 },
    PowerLog { exponent: f64, power: f64 },
}

/// Nonincreasing eigenvalue sequence of a diagonal state.
///
/// Zero eigenvalues of finite spectra are dropped; the count is kept in
/// `dropped_zeros`. Infinite-rank spectra are Gibbs distributions of a
/// [`SpectralSequence`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpectrumRecord")]
pub struct ProbabilitySpectrum {
    #[serde(flatten)]
    model: SpectrumModel,
    #[serde(skip)]
    log_norm: f64,
    #[serde(skip)]
    dropped_zeros: usize,
}

impl TryFrom<SpectrumRecord> for ProbabilitySpectrum {
    type Error = Error;

    fn try_from(rec: SpectrumRecord) -> Result<Self> {
        match rec {
            SpectrumRecord::Finite { entries } => Self::finite(entries),
            SpectrumRecord::Gibbs { sequence, beta } => Self::gibbs(sequence, beta),
            SpectrumRecord::Geometric { ratio } => Self::geometric(ratio),
            SpectrumRecord::PowerLog { exponent, power } => Self::power_log(exponent, power),
        }
    }
}

const NORM_TOL: f64 = 1e-14;

impl ProbabilitySpectrum {
    pub fn finite(mut entries: Vec<f64>) -> Result<Self> {
        if entries.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::ValidationFailed("probabilities must be finite and nonnegative".into()));
        }
        let total: f64 = entries.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::ValidationFailed(format!("probabilities sum to {total}, not 1")));
        }
        let before = entries.len();
        entries.retain(|p| *p > 0.0);
        entries.sort_by(|a, b| b.total_cmp(a));
        Ok(ProbabilitySpectrum {
            dropped_zeros: before - entries.len(),
            model: SpectrumModel::Finite { entries },
            log_norm: 0.0,
        })
    }

    /// `lambda_k = exp(-beta h_k) / sum_j exp(-beta h_j)`.
    pub fn gibbs(sequence: SpectralSequence, beta: f64) -> Result<Self> {
        if let Some(n) = sequence.len() {
            let m = scaled_moments(&sequence, beta, NORM_TOL, false)?;
            let log_z = m.log_z();
            let entries = (1..=n).map(|k| (-beta * sequence.level(k) - log_z).exp()).collect();
            return Self::finite_unchecked(entries);
        }
        let m = scaled_moments(&sequence, beta, NORM_TOL, false)?;
        Ok(ProbabilitySpectrum {
            log_norm: m.log_z(),
            model: SpectrumModel::Gibbs { sequence, beta },
            dropped_zeros: 0,
        })
    }

    fn finite_unchecked(entries: Vec<f64>) -> Result<Self> {
        let total: f64 = entries.iter().sum();
        Self::finite(entries.into_iter().map(|p| p / total).collect())
    }

    /// `lambda_k = (1 - r) r^(k-1)`; `r = 1/2` gives `2^-k`.
    pub fn geometric(ratio: f64) -> Result<Self> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::ValidationFailed(format!("geometric ratio must lie in (0, 1), got {ratio}")));
        }
        Self::gibbs(SpectralSequence::affine(-ratio.ln(), 0.0)?, 1.0)
    }

    /// `lambda_k ∝ ((k + 1) ln^power(k + 1))^-exponent`, with decrease
    /// coefficient `1 / exponent`.
    pub fn power_log(exponent: f64, power: f64) -> Result<Self> {
        Self::gibbs(SpectralSequence::power_log(power)?, exponent)
    }

    pub fn model(&self) -> &SpectrumModel {
        &self.model
    }

    pub fn dropped_zeros(&self) -> usize {
        self.dropped_zeros
    }

    /// Rank of a finite spectrum; `None` for infinite rank.
    pub fn len(&self) -> Option<usize> {
        match &self.model {
            SpectrumModel::Finite { entries } => Some(entries.len()),
            SpectrumModel::Gibbs { .. } => None,
        }
    }

    /// `lambda_k`, `k >= 1`; zero beyond the rank.
    pub fn prob(&self, k: usize) -> f64 {
        match &self.model {
            SpectrumModel::Finite { entries } => entries.get(k - 1).copied().unwrap_or(0.0),
            SpectrumModel::Gibbs { sequence, beta } => (-beta * sequence.level(k) - self.log_norm).exp(),
        }
    }

    /// The first `n` eigenvalues (fewer for a finite spectrum of lower rank).
    pub fn leading(&self, n: usize) -> Vec<f64> {
        let n = self.len().map_or(n, |r| r.min(n));
        (1..=n).map(|k| self.prob(k)).collect()
    }

    /// The sequence `-ln lambda_k`, i.e. the spectrum of `-log sigma`.
    pub fn neg_log(&self) -> SpectralSequence {
        match &self.model {
            SpectrumModel::Finite { entries } => {
                SpectralSequence::explicit(entries.iter().map(|p| -p.ln()).collect())
                    .expect("validated probabilities give sorted nonnegative levels")
            }
            SpectrumModel::Gibbs { sequence, beta } => sequence
                .affine_map(*beta, self.log_norm)
                .expect("positive beta preserves validity"),
        }
    }

    /// Exact decrease coefficient `dc = inf { lam : Tr sigma^lam < inf }`.
    pub fn dc(&self) -> f64 {
        self.neg_log().ic().clamp(0.0, 1.0)
    }

    /// von Neumann entropy `-sum lambda_k ln lambda_k` (may be `+inf`).
    pub fn entropy(&self, rel_tol: f64) -> Result<f64> {
        let seq = self.neg_log();
        if !seq.converges(1.0, 1) {
            return Ok(f64::INFINITY);
        }
        let m = scaled_moments(&seq, 1.0, rel_tol, false)?;
        Ok(m.mean())
    }
}

/// `dc(sigma)`: exact when the spectrum carries an analytic coefficient,
/// otherwise `limsup (ln k) / (-ln lambda_k)` clipped to `[0, 1]`.
pub fn decrease_coefficient(spec: &ProbabilitySpectrum, k_max: usize) -> CoefficientEstimate {
    let est = increase_coefficient(&spec.neg_log(), k_max);
    CoefficientEstimate { value: est.value.clamp(0.0, 1.0), exact: est.exact }
}

/// `h_*(H) = Tr H e^{-ic H} / Tr e^{-ic H}`, or `+inf` when the partition sum
/// diverges at `ic(H)`. Finite sequences report `+inf`: their entropy is
/// capped at `ln d` and a Gibbs state exists for every constraint.
pub fn h_star(seq: &SpectralSequence, rel_tol: f64) -> Result<f64> {
    check_tol(rel_tol)?;
    let ic = seq.ic();
    if seq.is_finite() || !ic.is_finite() || !seq.converges(ic, 0) || !seq.converges(ic, 1) {
        return Ok(f64::INFINITY);
    }
    match scaled_moments(seq, ic, rel_tol, false) {
        Ok(m) => Ok(m.mean()),
        Err(Error::Divergent(_)) => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}

/// Relative-entropy thresholds of a state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Thresholds {
    /// `c_*(sigma) = H(sigma^dc / Tr sigma^dc || sigma)`
    pub c_star: f64,
    /// `c^*(sigma) = Tr sigma^dc (-ln sigma) / Tr sigma^dc`
    pub c_upper: f64,
    pub dc: f64,
    /// `ln Tr sigma^dc`
    pub log_trace: f64,
}

/// Computes `c_*(sigma)` and `c^*(sigma)` from the moments of `-ln sigma` at
/// `lam = dc(sigma)`; both are `+inf` when `Tr sigma^dc` diverges.
pub fn c_thresholds(spec: &ProbabilitySpectrum, rel_tol: f64) -> Result<Thresholds> {
    check_tol(rel_tol)?;
    let seq = spec.neg_log();
    let dc = spec.dc();
    if !seq.converges(dc, 0) {
        return Ok(Thresholds { c_star: f64::INFINITY, c_upper: f64::INFINITY, dc, log_trace: f64::INFINITY });
    }
    if !seq.converges(dc, 1) {
        let c_star = if dc >= 1.0 { 0.0 } else { f64::INFINITY };
        let log_trace = scaled_log_z(&seq, dc, rel_tol)?;
        return Ok(Thresholds { c_star, c_upper: f64::INFINITY, dc, log_trace });
    }
    let m = scaled_moments(&seq, dc, rel_tol, false)?;
    let mean = m.mean();
    let log_z = m.log_z();
    Ok(Thresholds { c_star: (1.0 - dc) * mean - log_z, c_upper: mean, dc, log_trace: log_z })
}

fn scaled_log_z(seq: &SpectralSequence, lam: f64, rel_tol: f64) -> Result<f64> {
    let shift = seq.h_min();
    let family = &seq.family;
    let [z] = series::sum_series(
        |u| [Term::positive(-lam * (family.level_at(u) - shift))],
        [true],
        rel_tol,
    )?;
    Ok(-lam * shift + z.value.ln())
}

#[cfg(test)]
mod tests {
    use super::*;

    const LN2: f64 = std::f64::consts::LN_2;

    #[test]
    fn geometric_partition_sum() {
        let seq = SpectralSequence::affine(1.0, -1.0).unwrap();
        let r = partition_moments(&seq, LN2, 1e-13).unwrap();
        assert!((r.z - 2.0).abs() < 1e-12);
        assert!((r.e - 2.0).abs() < 1e-12);
        // sum (k-1)^2 2^-(k-1) = 6
        assert!((r.v - 6.0).abs() < 1e-11);
        assert!(r.tail_bound <= 1e-13 * r.z);
    }

    #[test]
    fn p_series_half_diverges() {
        let seq = SpectralSequence::power_log(0.0).unwrap();
        assert!(matches!(partition_moments(&seq, 0.5, 1e-10), Err(Error::Divergent(_))));
    }

    #[test]
    fn tolerance_range_is_checked() {
        let seq = SpectralSequence::affine(1.0, 0.0).unwrap();
        assert!(matches!(partition_moments(&seq, 1.0, 0.0), Err(Error::InvalidTolerance(_))));
        assert!(matches!(partition_moments(&seq, 1.0, 0.5), Err(Error::InvalidTolerance(_))));
    }

    #[test]
    fn power_log_at_threshold_has_divergent_second_moment() {
        let seq = SpectralSequence::power_log(3.0).unwrap();
        let r = partition_moments(&seq, 1.0, 1e-12).unwrap();
        assert!(r.z.is_finite() && r.e.is_finite());
        assert!(r.v.is_infinite());
    }

    #[test]
    fn coefficients_of_known_families() {
        let ic = |s: SpectralSequence| increase_coefficient(&s, 10_000).value;
        assert_eq!(ic(SpectralSequence::affine(1.0, 0.0).unwrap()), 0.0);
        assert_eq!(ic(SpectralSequence::power_log(0.0).unwrap()), 1.0);
        assert_eq!(ic(SpectralSequence::reciprocal(QModel::LogLog3).unwrap()), 1.0);
        let dc = |s: ProbabilitySpectrum| decrease_coefficient(&s, 10_000).value;
        assert_eq!(dc(ProbabilitySpectrum::geometric(0.5).unwrap()), 0.0);
        assert_eq!(dc(ProbabilitySpectrum::power_log(1.0, 3.0).unwrap()), 1.0);
        assert_eq!(dc(ProbabilitySpectrum::finite(vec![0.5, 0.5]).unwrap()), 0.0);
    }

    #[test]
    fn numeric_estimator_when_no_analytic_value() {
        let mut seq = SpectralSequence::affine(1.0, 0.0).unwrap();
        seq.analytic_ic = None;
        let est = increase_coefficient(&seq, 100_000);
        assert!(!est.exact);
        assert!(est.value < 1e-3);

        let mut seq = SpectralSequence::power_log(0.0).unwrap();
        seq.analytic_ic = None;
        let est = increase_coefficient(&seq, 100_000);
        assert!((est.value - 1.0).abs() < 1e-4, "{}", est.value);

        let mut seq = SpectralSequence::reciprocal(QModel::LogLog3).unwrap();
        seq.analytic_ic = None;
        let est = increase_coefficient(&seq, 1_000_000);
        // slowly approaches 1 from below: ln n / (ln n + 3 ln ln(2n+1))
        assert!(est.value > 0.6 && est.value < 1.0, "{}", est.value);
    }

    #[test]
    fn h_star_branches() {
        assert!(h_star(&SpectralSequence::affine(1.0, -1.0).unwrap(), 1e-10).unwrap().is_infinite());
        assert!(h_star(&SpectralSequence::explicit(vec![1.0, 2.0]).unwrap(), 1e-10).unwrap().is_infinite());
        let hs = h_star(&SpectralSequence::power_log(3.0).unwrap(), 1e-12).unwrap();
        // frozen from a 30-digit summation with integral tail
        assert!((hs - 0.591_964_352_647_728).abs() < 1e-11, "{hs}");
    }

    #[test]
    fn finite_thresholds_match_direct_formula() {
        let spec = ProbabilitySpectrum::finite(vec![0.7, 0.3]).unwrap();
        let t = c_thresholds(&spec, 1e-12).unwrap();
        let direct = 0.5 * (0.5f64 / 0.7).ln() + 0.5 * (0.5f64 / 0.3).ln();
        assert!((t.c_star - direct).abs() < 1e-14);
        let lhs = t.c_upper;
        let rhs = (t.c_star + t.log_trace) / (1.0 - t.dc);
        assert!((lhs - rhs).abs() < 1e-14);
    }

    #[test]
    fn geometric_thresholds_are_infinite() {
        let t = c_thresholds(&ProbabilitySpectrum::geometric(0.5).unwrap(), 1e-12).unwrap();
        assert!(t.c_star.is_infinite() && t.c_upper.is_infinite());
    }

    #[test]
    fn boundary_state_thresholds() {
        let spec = ProbabilitySpectrum::power_log(1.0, 3.0).unwrap();
        let t = c_thresholds(&spec, 1e-12).unwrap();
        assert_eq!(t.dc, 1.0);
        assert!(t.c_star.abs() < 1e-12);
        let h = spec.entropy(1e-12).unwrap();
        assert!((t.c_upper - h).abs() < 1e-10);
    }

    #[test]
    fn intermediate_dc_identity() {
        // dc = 1/2, Tr sigma^dc finite
        let spec = ProbabilitySpectrum::power_log(2.0, 3.0).unwrap();
        let t = c_thresholds(&spec, 1e-12).unwrap();
        assert_eq!(t.dc, 0.5);
        let rhs = (t.c_star + t.log_trace) / (1.0 - t.dc);
        assert!((t.c_upper - rhs).abs() < 1e-10);
        assert!(t.c_upper >= t.c_star);
    }

    #[test]
    fn zero_entries_are_dropped() {
        let s = ProbabilitySpectrum::finite(vec![0.25, 0.0, 0.75]).unwrap();
        assert_eq!(s.leading(5), vec![0.75, 0.25]);
        assert_eq!(s.dropped_zeros(), 1);
        assert!(ProbabilitySpectrum::finite(vec![0.5, 0.4]).is_err());
    }

    #[test]
    fn json_record_shape() {
        let seq = SpectralSequence::affine(1.0, -1.0).unwrap();
        let v = serde_json::to_value(&seq).unwrap();
        assert_eq!(v["kind"], "affine");
        assert_eq!(v["params"]["a"], 1.0);
        assert_eq!(v["analytic_ic"], 0.0);
        let back: SpectralSequence = serde_json::from_value(v).unwrap();
        assert_eq!(back, seq);

        let text = r#"{"kind": "power_log", "params": {"p": 3}, "analytic_ic": null}"#;
        let seq: SpectralSequence = serde_json::from_str(text).unwrap();
        assert_eq!(seq.analytic_ic(), None);
        assert_eq!(seq.ic(), 1.0);

        let wrong = r#"{"kind": "power_log", "params": {"p": 3}, "analytic_ic": 0.5}"#;
        assert!(serde_json::from_str::<SpectralSequence>(wrong).is_err());

        let spec: ProbabilitySpectrum = serde_json::from_str(r#"{"model": "geometric", "ratio": 0.5}"#).unwrap();
        assert!((spec.prob(1) - 0.5).abs() < 1e-15);
    }
}
