//! Maximal entropy on the energy-constrained sets `K_{H,h} = {rho : Tr rho H <= h}`
//! and on the relative-entropy balls `V_{sigma,c} = {rho : H(rho || sigma) <= c}`.
//!
//! Both reduce to one-dimensional problems in an inverse temperature `lam`
//! over the Gibbs family `exp(-lam h_k) / z(lam)`, where `h_k` is the spectrum
//! of `H` or of `-ln sigma`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectra::{self, ProbabilitySpectrum, ScaledMoments, SpectralSequence};

/// Relative tolerance of every series evaluation in this module.
pub const SERIES_TOL: f64 = 1e-13;
/// Absolute bisection tolerance in `lam`.
pub const LAMBDA_TOL: f64 = 1e-12;
const HI_CAP: f64 = 1e7;

fn moments(seq: &SpectralSequence, lam: f64) -> Result<ScaledMoments> {
    spectra::scaled_moments(seq, lam, SERIES_TOL, false)
}

fn moments_v(seq: &SpectralSequence, lam: f64) -> Result<ScaledMoments> {
    spectra::scaled_moments(seq, lam, SERIES_TOL, true)
}

/// `lam h + ln z(lam)`.
fn free_entropy(seq: &SpectralSequence, lam: f64, h: f64) -> Result<f64> {
    Ok(lam * h + moments(seq, lam)?.log_z())
}

fn is_min_level(seq: &SpectralSequence, h: f64) -> bool {
    let hm = seq.h_min();
    h <= hm + 1e-14 * hm.abs().max(1.0)
}

/// Mean level at `lam = 0` for a finite list; beyond it the constraint is inactive.
fn finite_mean(seq: &SpectralSequence) -> Option<f64> {
    let n = seq.len()?;
    Some((1..=n).map(|k| seq.level(k)).sum::<f64>() / n as f64)
}

/// Bisection for a decreasing function on `(lo, hi)`: returns the point where
/// it crosses `target`. `lo` may be a boundary where `f` is not defined; it is
/// never evaluated.
pub(crate) fn bisect_decreasing<F>(mut lo: f64, mut hi: f64, target: f64, abs_res: f64, f: F) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        let v = f(mid)?;
        if (v - target).abs() <= abs_res {
            return Ok(mid);
        }
        if v > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= LAMBDA_TOL.min(1e-15 * hi.abs().max(1.0)).max(f64::EPSILON * hi.abs()) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Solves `Tr H e^{-lam H} = h Tr e^{-lam H}` for `h_m < h <= h_*(H)`.
///
/// For a finite list whose mean does not exceed `h` the constraint is
/// inactive and `0` is returned.
pub fn lambda_star_k(seq: &SpectralSequence, h: f64, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidTolerance(tol));
    }
    if !h.is_finite() || is_min_level(seq, h) {
        return Err(Error::OutOfBranch(format!(
            "h = {h} must exceed the minimal level {}",
            seq.h_min()
        )));
    }
    let mean = |lam: f64| moments(seq, lam).map(|m| m.mean());
    let res = tol * h.abs().max(f64::MIN_POSITIVE);

    let ic = seq.ic();
    let lo = if let Some(m0) = finite_mean(seq) {
        if h >= m0 {
            return Ok(0.0);
        }
        0.0
    } else {
        if !ic.is_finite() {
            return Err(Error::UnboundedEntropy);
        }
        let hs = spectra::h_star(seq, SERIES_TOL)?;
        if h > hs {
            return Err(Error::OutOfBranch(format!("h = {h} exceeds h_* = {hs}; no Gibbs state")));
        }
        if h == hs {
            return Ok(ic);
        }
        ic
    };

    let mut hi = (2.0 * lo).max(lo + 1.0);
    while mean(hi)? >= h {
        hi *= 2.0;
        if hi > HI_CAP {
            return Err(Error::Unsolvable(format!(
                "bracket for lambda* grew past {HI_CAP:e}; h = {h} is too close to the minimal level"
            )));
        }
    }
    bisect_decreasing(lo, hi, h, res, mean)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KBranch {
    /// `h = h_m`: uniform state on the minimal eigenspace.
    MinimalLevel,
    /// `h_m < h <= h_*`: Gibbs state with `lam* >= ic`.
    Gibbs,
    /// `h > h_*`: entropy `ic h + ln z(ic)`, no Gibbs state.
    Linear,
    /// Finite list with `h` at or above its mean level: entropy `ln d`.
    FiniteCap,
}

impl KBranch {
    pub fn as_str(self) -> &'static str {
        match self {
            KBranch::MinimalLevel => "minimal_level",
            KBranch::Gibbs => "gibbs",
            KBranch::Linear => "linear",
            KBranch::FiniteCap => "finite_cap",
        }
    }
}

/// Entropy profile of `K_{H,h}`.
#[derive(Clone, Debug, Serialize)]
pub struct KSetProfile {
    pub h: f64,
    /// `lam*(H,h)` on the Gibbs branch, `ic(H)` on the linear branch.
    pub lam_star: Option<f64>,
    pub sup_entropy: f64,
    pub gibbs_exists: bool,
    #[serde(skip)]
    pub gibbs_spectrum: Option<ProbabilitySpectrum>,
    pub branch: KBranch,
}

fn uniform(n: usize) -> ProbabilitySpectrum {
    ProbabilitySpectrum::finite(vec![1.0 / n as f64; n]).expect("uniform distribution")
}

/// `F_H(h) = sup { H(rho) : Tr rho H <= h }` with the branch that attains it.
pub fn sup_entropy_k(seq: &SpectralSequence, h: f64) -> Result<KSetProfile> {
    if h < seq.h_min() && !is_min_level(seq, h) {
        return Err(Error::OutOfBranch(format!("h = {h} is below the minimal level {}", seq.h_min())));
    }
    let ic = seq.ic();
    if !ic.is_finite() {
        return Err(Error::UnboundedEntropy);
    }
    if is_min_level(seq, h) {
        let d = seq.d_min();
        return Ok(KSetProfile {
            h,
            lam_star: None,
            sup_entropy: (d as f64).ln(),
            gibbs_exists: true,
            gibbs_spectrum: Some(uniform(d)),
            branch: KBranch::MinimalLevel,
        });
    }
    if let (Some(m0), Some(n)) = (finite_mean(seq), seq.len()) {
        if h >= m0 {
            return Ok(KSetProfile {
                h,
                lam_star: Some(0.0),
                sup_entropy: (n as f64).ln(),
                gibbs_exists: true,
                gibbs_spectrum: Some(uniform(n)),
                branch: KBranch::FiniteCap,
            });
        }
    }
    let hs = spectra::h_star(seq, SERIES_TOL)?;
    if h > hs {
        return Ok(KSetProfile {
            h,
            lam_star: Some(ic),
            sup_entropy: free_entropy(seq, ic, h)?,
            gibbs_exists: false,
            gibbs_spectrum: None,
            branch: KBranch::Linear,
        });
    }
    let lam = lambda_star_k(seq, h, 1e-14)?;
    Ok(KSetProfile {
        h,
        lam_star: Some(lam),
        sup_entropy: free_entropy(seq, lam, h)?,
        gibbs_exists: true,
        gibbs_spectrum: Some(ProbabilitySpectrum::gibbs(seq.clone(), lam)?),
        branch: KBranch::Gibbs,
    })
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section minimum of a unimodal function on `[a, b]`.
fn golden_min<F: Fn(f64) -> Result<f64>>(mut a: f64, mut b: f64, f: F) -> Result<(f64, f64)> {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while (b - a).abs() > 1e-11 * (a.abs() + b.abs()).max(1.0) {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc <= fd { (c, fc) } else { (d, fd) })
}

/// Left end of the search interval for an infimum over `(bound, ..)`. When
/// the objective blows up at `bound`, walks toward it while the objective
/// keeps decreasing.
fn left_endpoint<F: Fn(f64) -> Result<f64>>(bound: f64, convergent: bool, width: f64, f: &F) -> f64 {
    if convergent {
        return bound;
    }
    let mut d = 0.25 * width;
    loop {
        if d < 1e-9 * width {
            return bound + d;
        }
        match (f(bound + 0.5 * d), f(bound + d)) {
            (Ok(a), Ok(b)) if a < b => d *= 0.5,
            (Ok(_), Ok(_)) => return bound + 0.5 * d,
            _ => return bound + d,
        }
    }
}

/// Lowest-value grid point, then golden-section refinement around it.
fn scan_then_golden<F: Fn(f64) -> Result<f64>>(a: f64, b: f64, f: F) -> Result<f64> {
    const N: usize = 64;
    let xs: Vec<f64> = (0..=N).map(|i| a + (b - a) * i as f64 / N as f64).collect();
    let mut best = (0, f64::INFINITY);
    for (i, x) in xs.iter().enumerate() {
        let v = f(*x)?;
        if v < best.1 {
            best = (i, v);
        }
    }
    let lo = xs[best.0.saturating_sub(1)];
    let hi = xs[(best.0 + 1).min(N)];
    let (_, v) = golden_min(lo, hi, &f)?;
    Ok(v.min(best.1))
}

/// `inf_{lam > ic} (lam h + ln z(lam))`, computed by direct minimization.
pub fn variational_sup_entropy_k(seq: &SpectralSequence, h: f64) -> Result<f64> {
    let ic = seq.ic();
    if !ic.is_finite() {
        return Err(Error::UnboundedEntropy);
    }
    let phi = |lam: f64| free_entropy(seq, lam, h);
    let lo = left_endpoint(ic, seq.converges(ic, 0), ic.max(1.0), &phi);
    let mut hi = lo + 1.0;
    while phi(2.0 * hi)? < phi(hi)? {
        hi *= 2.0;
        if hi > HI_CAP {
            break;
        }
    }
    scan_then_golden(lo, 2.0 * hi, phi)
}

/// Gibbs state `exp(-lam* H) / Tr exp(-lam* H)` of `K_{H,h}`; the uniform state
/// on the minimal eigenspace at `h = h_m`.
pub fn gibbs_state_k(seq: &SpectralSequence, h: f64) -> Result<ProbabilitySpectrum> {
    let prof = sup_entropy_k(seq, h)?;
    prof.gibbs_spectrum.ok_or_else(|| {
        Error::OutOfBranch(format!("h = {h} exceeds h_*; the entropy supremum is not attained"))
    })
}

/// The `n`-level approximant `rho_n ∝ exp(-lam_n h_k)`, `k <= n`, with mean level `h`.
#[derive(Clone, Debug, Serialize)]
pub struct FiniteLevelState {
    pub lam: f64,
    pub spectrum: Vec<f64>,
    pub entropy: f64,
}

pub fn finite_level_state(seq: &SpectralSequence, h: f64, n: usize) -> Result<FiniteLevelState> {
    if n == 0 || seq.len().is_some_and(|len| n > len) {
        return Err(Error::Unsolvable(format!("level count {n} is out of range")));
    }
    let levels: Vec<f64> = (1..=n).map(|k| seq.level(k)).collect();
    let truncated = SpectralSequence::explicit(levels.clone())
        .or_else(|_| {
            // levels below zero are shifted for the explicit-list check
            let m = levels[0];
            SpectralSequence::explicit(levels.iter().map(|x| x - m).collect())
        })?;
    let offset = levels[0] - truncated.h_min();
    let mean0 = levels.iter().sum::<f64>() / n as f64;
    if h > mean0 || is_min_level(seq, h) || n == 1 {
        return Err(Error::Unsolvable(format!(
            "no {n}-level state has mean level {h}: the mean of the first {n} levels is {mean0}"
        )));
    }
    let lam = lambda_star_k(&truncated, h - offset, 1e-14)?;
    let m = spectra::scaled_moments(&truncated, lam, SERIES_TOL, false)?;
    let log_z = m.log_z();
    let spectrum: Vec<f64> = levels.iter().map(|x| (-lam * (x - offset) - log_z).exp()).collect();
    let entropy = crate::qcore::shannon(&spectrum);
    Ok(FiniteLevelState { lam, spectrum, entropy })
}

/// `f(lam) = H(sigma_lam || sigma)` with `sigma_lam = sigma^lam / Tr sigma^lam`.
fn v_distance(seq: &SpectralSequence, lam: f64) -> Result<f64> {
    let m = moments(seq, lam)?;
    Ok((1.0 - lam) * m.mean() - m.log_z())
}

fn check_c(c: f64) -> Result<()> {
    if c >= 0.0 && c.is_finite() {
        Ok(())
    } else {
        Err(Error::ValidationFailed(format!("c must be a finite nonnegative number, got {c}")))
    }
}

/// Solves `H(sigma_lam || sigma) = c` on `[dc(sigma), 1]` for `0 <= c <= c_*(sigma)`.
pub fn lambda_star_v(spec: &ProbabilitySpectrum, c: f64, tol: f64) -> Result<f64> {
    check_c(c)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidTolerance(tol));
    }
    let dc = spec.dc();
    if dc >= 1.0 {
        return Err(Error::DegenerateState(dc));
    }
    if c == 0.0 {
        return Ok(1.0);
    }
    let t = spectra::c_thresholds(spec, SERIES_TOL)?;
    let edge = 1e-12 * t.c_star.abs().max(1.0);
    if c > t.c_star + edge {
        return Err(Error::OutOfBranch(format!("c = {c} exceeds c_* = {}; no Gibbs state", t.c_star)));
    }
    if c >= t.c_star - edge {
        return Ok(dc);
    }
    let seq = spec.neg_log();
    bisect_decreasing(dc, 1.0, c, tol, |lam| v_distance(&seq, lam))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VEntropyBranch {
    /// `c <= c_*`: Gibbs state `sigma^lam* / Tr sigma^lam*`.
    Gibbs,
    /// `c > c_*`: value `(dc c + ln Tr sigma^dc) / (1 - dc)`, not attained.
    Linear,
}

impl VEntropyBranch {
    pub fn as_str(self) -> &'static str {
        match self {
            VEntropyBranch::Gibbs => "gibbs",
            VEntropyBranch::Linear => "linear",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VCapacityBranch {
    /// `c <= H(sigma)`: capacity `c`, optimal average state `sigma`.
    Layer,
    /// `H(sigma) < c <= c^*`: capacity `lam* c + ln Tr sigma^lam*`.
    Gibbs,
    /// `c >= c^*`: capacity `dc c + ln Tr sigma^dc`.
    Linear,
}

impl VCapacityBranch {
    pub fn as_str(self) -> &'static str {
        match self {
            VCapacityBranch::Layer => "layer",
            VCapacityBranch::Gibbs => "gibbs",
            VCapacityBranch::Linear => "linear",
        }
    }
}

/// Entropy and capacity profile of `V_{sigma,c}`.
#[derive(Clone, Debug, Serialize)]
pub struct VSetProfile {
    pub c: f64,
    pub dc: f64,
    /// Multiplier of the branch that was evaluated last.
    pub lam_star: Option<f64>,
    pub sup_entropy: Option<f64>,
    pub entropy_branch: Option<VEntropyBranch>,
    pub chi_capacity: Option<f64>,
    pub capacity_branch: Option<VCapacityBranch>,
    #[serde(skip)]
    pub omega_spectrum: Option<ProbabilitySpectrum>,
}

impl VSetProfile {
    fn empty(c: f64, dc: f64) -> Self {
        VSetProfile {
            c,
            dc,
            lam_star: None,
            sup_entropy: None,
            entropy_branch: None,
            chi_capacity: None,
            capacity_branch: None,
            omega_spectrum: None,
        }
    }
}

/// `sup { H(rho) : H(rho || sigma) <= c }`, finite iff `dc(sigma) < 1`.
pub fn sup_entropy_v(spec: &ProbabilitySpectrum, c: f64) -> Result<VSetProfile> {
    check_c(c)?;
    let dc = spec.dc();
    if dc >= 1.0 {
        return Err(Error::UnboundedEntropy);
    }
    let mut prof = VSetProfile::empty(c, dc);
    if c == 0.0 {
        prof.lam_star = Some(1.0);
        prof.sup_entropy = Some(spec.entropy(SERIES_TOL)?);
        prof.entropy_branch = Some(VEntropyBranch::Gibbs);
        return Ok(prof);
    }
    let seq = spec.neg_log();
    let t = spectra::c_thresholds(spec, SERIES_TOL)?;
    let (lam, branch) = if c <= t.c_star {
        (lambda_star_v(spec, c, 1e-14)?, VEntropyBranch::Gibbs)
    } else {
        (dc, VEntropyBranch::Linear)
    };
    let log_z = moments(&seq, lam)?.log_z();
    prof.lam_star = Some(lam);
    prof.sup_entropy = Some((lam * c + log_z) / (1.0 - lam));
    prof.entropy_branch = Some(branch);
    Ok(prof)
}

/// `inf_{lam in (dc, 1)} (lam c + ln Tr sigma^lam) / (1 - lam)` by direct minimization.
pub fn variational_sup_entropy_v(spec: &ProbabilitySpectrum, c: f64) -> Result<f64> {
    check_c(c)?;
    let dc = spec.dc();
    if dc >= 1.0 {
        return Err(Error::UnboundedEntropy);
    }
    let seq = spec.neg_log();
    let g = |lam: f64| Ok((lam * c + moments(&seq, lam)?.log_z()) / (1.0 - lam));
    let lo = left_endpoint(dc, seq.converges(dc, 0), 1.0 - dc, &g);
    scan_then_golden(lo, 1.0 - 1e-9, g)
}

/// χ-capacity of `V_{sigma,c}` and its optimal average state.
pub fn chi_capacity_v(spec: &ProbabilitySpectrum, c: f64, rel_tol: f64) -> Result<VSetProfile> {
    check_c(c)?;
    let dc = spec.dc();
    let mut prof = VSetProfile::empty(c, dc);
    let h = spec.entropy(rel_tol.max(SERIES_TOL))?;
    if c <= h {
        prof.lam_star = Some(1.0);
        prof.chi_capacity = Some(c);
        prof.capacity_branch = Some(VCapacityBranch::Layer);
        prof.omega_spectrum = Some(spec.clone());
        return Ok(prof);
    }
    let seq = spec.neg_log();
    let t = spectra::c_thresholds(spec, rel_tol.max(SERIES_TOL))?;
    let (lam, branch) = if c <= t.c_upper {
        (lambda_star_k(&seq, c, 1e-14)?, VCapacityBranch::Gibbs)
    } else {
        (dc, VCapacityBranch::Linear)
    };
    let log_z = moments(&seq, lam)?.log_z();
    prof.lam_star = Some(lam);
    prof.chi_capacity = Some(lam * c + log_z);
    prof.capacity_branch = Some(branch);
    prof.omega_spectrum = Some(ProbabilitySpectrum::gibbs(seq, lam)?);
    Ok(prof)
}

/// `inf_{lam in (dc, 1]} (lam c + ln Tr sigma^lam)` by direct minimization.
pub fn variational_capacity_v(spec: &ProbabilitySpectrum, c: f64) -> Result<f64> {
    check_c(c)?;
    let dc = spec.dc();
    let seq = spec.neg_log();
    let g = |lam: f64| Ok(lam * c + moments(&seq, lam)?.log_z());
    let lo = left_endpoint(dc, seq.converges(dc, 0), 1.0 - dc, &g);
    scan_then_golden(lo, 1.0, g)
}

/// Energy variance at `lam`, the negative inverse of `dlam*/dh`.
pub fn gibbs_variance(seq: &SpectralSequence, lam: f64) -> Result<f64> {
    Ok(moments_v(seq, lam)?.variance())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::shannon;
    use proptest::prelude::*;

    const LN2: f64 = std::f64::consts::LN_2;

    fn shifted_geometric() -> SpectralSequence {
        SpectralSequence::affine(1.0, -1.0).unwrap()
    }

    fn log_cubed() -> SpectralSequence {
        SpectralSequence::power_log(3.0).unwrap()
    }

    #[test]
    fn geometric_k_set() {
        let seq = shifted_geometric();
        let lam = lambda_star_k(&seq, 1.0, 1e-14).unwrap();
        assert!((lam - LN2).abs() < 1e-12);
        let prof = sup_entropy_k(&seq, 1.0).unwrap();
        assert_eq!(prof.branch, KBranch::Gibbs);
        assert!((prof.sup_entropy - 2.0 * LN2).abs() < 1e-12);
        let g = gibbs_state_k(&seq, 1.0).unwrap();
        for k in 1..20 {
            assert!((g.prob(k) - 0.5f64.powi(k as i32)).abs() < 1e-14);
        }
        assert!((variational_sup_entropy_k(&seq, 1.0).unwrap() - 2.0 * LN2).abs() < 1e-9);
    }

    #[test]
    fn near_minimal_level_needs_large_multiplier() {
        let seq = shifted_geometric();
        let lam = lambda_star_k(&seq, 1e-6, 1e-10).unwrap();
        assert!(lam > 13.0);
        assert!(matches!(lambda_star_k(&seq, 0.0, 1e-10), Err(Error::OutOfBranch(_))));
    }

    #[test]
    fn minimal_level_entropy_is_log_multiplicity() {
        let seq = SpectralSequence::explicit(vec![1.0, 1.0, 1.0, 2.0, 5.0]).unwrap();
        let prof = sup_entropy_k(&seq, 1.0).unwrap();
        assert_eq!(prof.branch, KBranch::MinimalLevel);
        assert!((prof.sup_entropy - 3f64.ln()).abs() < 1e-15);
        let cap = sup_entropy_k(&seq, 4.0).unwrap();
        assert_eq!(cap.branch, KBranch::FiniteCap);
        assert!((cap.sup_entropy - 5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn log_cubed_sequence_branches() {
        let seq = log_cubed();
        let hs = spectra::h_star(&seq, SERIES_TOL).unwrap();
        let lam = lambda_star_k(&seq, hs - 1e-3, 1e-12).unwrap();
        assert!(lam > 1.0 && lam < 1.1, "{lam}");
        let lin = sup_entropy_k(&seq, hs + 1.0).unwrap();
        assert_eq!(lin.branch, KBranch::Linear);
        let z1 = spectra::partition_moments(&seq, 1.0, 1e-13).unwrap();
        assert!((lin.sup_entropy - (hs + 1.0 + z1.z.ln())).abs() < 1e-10);
        assert!(matches!(gibbs_state_k(&seq, hs + 1.0), Err(Error::OutOfBranch(_))));
        let v = variational_sup_entropy_k(&seq, hs + 1.0).unwrap();
        assert!((v - lin.sup_entropy).abs() < 1e-6);
    }

    #[test]
    fn gibbs_state_reproduces_entropy_and_mean() {
        let seq = log_cubed();
        let h = 0.2;
        let prof = sup_entropy_k(&seq, h).unwrap();
        let g = prof.gibbs_spectrum.unwrap();
        let gs = g.neg_log();
        let m = spectra::partition_moments(&gs, 1.0, 1e-13).unwrap();
        assert!((m.e / m.z - prof.sup_entropy).abs() < 1e-8);
        let lam = prof.lam_star.unwrap();
        let mm = spectra::partition_moments(&seq, lam, 1e-13).unwrap();
        assert!((mm.mean() - h).abs() < 1e-8);
    }

    #[test]
    fn finite_level_states() {
        let seq = shifted_geometric();
        assert!(matches!(finite_level_state(&seq, 1.0, 2), Err(Error::Unsolvable(_))));
        let three = finite_level_state(&seq, 1.0, 3).unwrap();
        assert!(three.lam.abs() < 1e-12);
        assert!((three.spectrum[0] - 1.0 / 3.0).abs() < 1e-12);
        let mut prev = three.lam;
        for n in [5, 10, 20, 40] {
            let s = finite_level_state(&seq, 1.0, n).unwrap();
            assert!(s.lam > prev);
            prev = s.lam;
            let z: f64 = (0..n).map(|k| (-s.lam * k as f64).exp()).sum();
            assert!((s.entropy - (s.lam + z.ln())).abs() < 1e-12);
        }
        let big = finite_level_state(&seq, 1.0, 60).unwrap();
        assert!((big.entropy - 2.0 * LN2).abs() < 1e-12);
        assert!((big.spectrum[2] - 0.125).abs() < 1e-12);
    }

    #[test]
    fn v_set_multiplier() {
        let geo = ProbabilitySpectrum::geometric(0.5).unwrap();
        assert_eq!(lambda_star_v(&geo, 0.0, 1e-12).unwrap(), 1.0);
        let lam = lambda_star_v(&geo, 0.1, 1e-12).unwrap();
        assert!(lam > 0.0 && lam < 1.0);
        assert!((v_distance(&geo.neg_log(), lam).unwrap() - 0.1).abs() < 1e-10);

        let two = ProbabilitySpectrum::finite(vec![0.7, 0.3]).unwrap();
        let cs = 0.5 * (0.5f64 / 0.7).ln() + 0.5 * (0.5f64 / 0.3).ln();
        assert!(lambda_star_v(&two, cs, 1e-12).unwrap().abs() < 1e-12);
        assert!(matches!(lambda_star_v(&two, cs + 0.1, 1e-12), Err(Error::OutOfBranch(_))));
        let boundary = ProbabilitySpectrum::power_log(1.0, 3.0).unwrap();
        assert!(matches!(lambda_star_v(&boundary, 0.1, 1e-12), Err(Error::DegenerateState(_))));
    }

    #[test]
    fn v_set_entropy() {
        let geo = ProbabilitySpectrum::geometric(0.5).unwrap();
        let h = geo.entropy(1e-13).unwrap();
        assert!((sup_entropy_v(&geo, 0.0).unwrap().sup_entropy.unwrap() - h).abs() < 1e-12);
        let s = sup_entropy_v(&geo, 0.05).unwrap().sup_entropy.unwrap();
        assert!(s > h && s < h + 0.05 * 100.0);
        assert!((variational_sup_entropy_v(&geo, 0.05).unwrap() - s).abs() < 1e-6);

        let two = ProbabilitySpectrum::finite(vec![0.7, 0.3]).unwrap();
        let p = sup_entropy_v(&two, 5.0).unwrap();
        assert_eq!(p.entropy_branch, Some(VEntropyBranch::Linear));
        assert!((p.sup_entropy.unwrap() - LN2).abs() < 1e-14);
        // grid search over the two-point simplex
        let best = (0..=10_000)
            .map(|i| i as f64 / 10_000.0)
            .map(|q| shannon(&[q, 1.0 - q]))
            .fold(0.0, f64::max);
        assert!((best - LN2).abs() < 1e-9);

        let boundary = ProbabilitySpectrum::power_log(1.0, 3.0).unwrap();
        assert!(matches!(sup_entropy_v(&boundary, 0.1), Err(Error::UnboundedEntropy)));
    }

    #[test]
    fn v_set_capacity_branches() {
        let geo = ProbabilitySpectrum::geometric(0.5).unwrap();
        let zero = chi_capacity_v(&geo, 0.0, 1e-12).unwrap();
        assert_eq!(zero.chi_capacity, Some(0.0));
        let one = chi_capacity_v(&geo, 1.0, 1e-12).unwrap();
        assert_eq!(one.chi_capacity, Some(1.0));
        assert_eq!(one.capacity_branch, Some(VCapacityBranch::Layer));
        let two = chi_capacity_v(&geo, 2.0, 1e-12).unwrap();
        assert_eq!(two.capacity_branch, Some(VCapacityBranch::Gibbs));
        let inf = variational_capacity_v(&geo, 2.0).unwrap();
        assert!((two.chi_capacity.unwrap() - inf).abs() < 1e-8);

        let finite = ProbabilitySpectrum::finite(vec![0.5, 0.3, 0.2]).unwrap();
        let lin = chi_capacity_v(&finite, 10.0, 1e-12).unwrap();
        assert_eq!(lin.capacity_branch, Some(VCapacityBranch::Linear));
        assert!((lin.chi_capacity.unwrap() - 3f64.ln()).abs() < 1e-14);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn power_state_identity(
            raw in proptest::collection::vec(0.05f64..1.0, 3),
            rho_raw in proptest::collection::vec(0.0f64..1.0, 3),
            lam in 0.05f64..0.95,
        ) {
            let s: f64 = raw.iter().sum();
            let sigma: Vec<f64> = raw.iter().map(|x| x / s).collect();
            let r: f64 = rho_raw.iter().sum::<f64>() + 1e-9;
            let rho: Vec<f64> = rho_raw.iter().map(|x| (x + 1e-9 / 3.0) / r).collect();
            let kl = |p: &[f64], q: &[f64]| p.iter().zip(q).filter(|(a, _)| **a > 0.0).map(|(a, b)| a * (a / b).ln()).sum::<f64>();
            let z: f64 = sigma.iter().map(|x| x.powf(lam)).sum();
            let sig_lam: Vec<f64> = sigma.iter().map(|x| x.powf(lam) / z).collect();
            let lhs = kl(&rho, &sig_lam);
            let rhs = lam * kl(&rho, &sigma) + z.ln() - (1.0 - lam) * shannon(&rho);
            prop_assert!((lhs - rhs).abs() < 1e-9);
        }

        #[test]
        fn partition_sum_monotone(l1 in 1.05f64..3.0, dl in 0.01f64..1.0) {
            let pos = SpectralSequence::new(crate::spectra::Family::PowerLog { p: 3.0, scale: 1.0, shift: 1.0 }).unwrap();
            let a = spectra::partition_moments(&pos, l1, 1e-12).unwrap();
            let b = spectra::partition_moments(&pos, l1 + dl, 1e-12).unwrap();
            prop_assert!(b.z < a.z);
            // the mean level decreases even when some levels are negative
            let seq = log_cubed();
            let a = spectra::partition_moments(&seq, l1, 1e-12).unwrap();
            let b = spectra::partition_moments(&seq, l1 + dl, 1e-12).unwrap();
            prop_assert!(b.mean() < a.mean());
            prop_assert!(a.e >= seq.h_min() * a.z);
        }
    }
}
