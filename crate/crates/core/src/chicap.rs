//! The χ-capacity of finite sets of states and its optimal average state.
//!
//! [`solve_capacity`] runs the multiplicative update
//! `pi_i <- pi_i exp(H(rho_i || rho_bar)) / Z`, whose fixed points are the
//! probability vectors with `H(rho_i || rho_bar) = C` on the support and
//! `<= C` off it. Every iterate brackets the capacity:
//! `chi(pi) <= C <= max_i H(rho_i || rho_bar)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::qcore::{self, check_dim, CMatrix, DensityMatrix, RelEntropyTarget};
use crate::spectra::ProbabilitySpectrum;
use crate::maxent::{self, VSetProfile};

const WEIGHT_SUM_TOL: f64 = 1e-12;
const FREEZE: f64 = 1e-15;
const READMIT: f64 = 1e-8;
const SUPPORT_EIG: f64 = 1e-12;

/// Finite ensemble `{pi_i, rho_i}`.
#[derive(Clone, Debug)]
pub struct Ensemble {
    weights: Vec<f64>,
    states: Vec<DensityMatrix>,
}

impl Ensemble {
    pub fn new(weights: Vec<f64>, states: Vec<DensityMatrix>) -> Result<Self> {
        let first = states.first().ok_or(Error::EmptySet)?;
        check_dim(states.len(), weights.len())?;
        for s in &states {
            check_dim(first.dim(), s.dim())?;
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::ValidationFailed("ensemble weights must be nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::ValidationFailed(format!("ensemble weights sum to {total}, not 1")));
        }
        Ok(Ensemble { weights, states })
    }

    pub fn uniform(states: Vec<DensityMatrix>) -> Result<Self> {
        let n = states.len();
        Self::new(vec![1.0 / n.max(1) as f64; n], states)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn states(&self) -> &[DensityMatrix] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Average state `rho_bar = sum pi_i rho_i`.
    pub fn average(&self) -> DensityMatrix {
        DensityMatrix::mixture(&self.weights, &self.states).expect("validated ensemble")
    }
}

/// Holevo quantity `chi = sum pi_i H(rho_i || rho_bar)`.
pub fn chi_of_ensemble(mu: &Ensemble) -> f64 {
    let target = RelEntropyTarget::new(&mu.average());
    mu.weights
        .iter()
        .zip(&mu.states)
        .filter(|(w, _)| **w > 0.0)
        .map(|(w, s)| w * target.divergence(s).expect("validated dimensions"))
        .sum()
}

/// `chi = H(rho_bar) - sum pi_i H(rho_i)`, the form valid when all entropies are finite.
pub fn chi_entropy_form(mu: &Ensemble) -> f64 {
    let avg = qcore::entropy(&mu.average());
    let mean: f64 = mu.weights.iter().zip(&mu.states).map(|(w, s)| w * qcore::entropy(s)).sum();
    avg - mean
}

/// Solver outcome.
#[derive(Clone, Debug, Serialize)]
pub struct CapacityResult {
    /// `chi + gap/2`, accurate to `± gap/2`.
    pub capacity: f64,
    pub gap: f64,
    /// Optimal weights, in input order.
    pub weights: Vec<f64>,
    /// Optimal average state.
    pub omega: DensityMatrix,
    pub iters: usize,
    /// States whose relative entropy to an iterate's average was infinite.
    pub support_violations: usize,
    /// Lower bound `chi` at the returned weights.
    pub chi: f64,
    /// `chi` after each iteration when history recording is enabled.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub chi_history: Vec<f64>,
}

impl CapacityResult {
    /// Upper end of the certified interval.
    pub fn upper(&self) -> f64 {
        self.chi + self.gap
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub record_history: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-10, max_iter: 200_000, record_history: false }
    }
}

/// χ-capacity of a finite set of states with its optimal average state.
pub fn solve_capacity(states: &[DensityMatrix], tol: f64, max_iter: usize) -> Result<CapacityResult> {
    solve_capacity_with(states, SolverOptions { tol, max_iter, record_history: false })
}

pub fn solve_capacity_with(states: &[DensityMatrix], opts: SolverOptions) -> Result<CapacityResult> {
    let first = states.first().ok_or(Error::EmptySet)?;
    let d = first.dim();
    for s in states {
        check_dim(d, s.dim())?;
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidTolerance(opts.tol));
    }
    let n = states.len();

    // Restrict to the joint support so that the average has full rank.
    let uniform = DensityMatrix::mixture(&vec![1.0 / n as f64; n], states)?;
    let (vals, vecs) = uniform.eigen();
    let keep: Vec<usize> = (0..d).filter(|&j| vals[j] > SUPPORT_EIG).collect();
    let v = vecs.select_columns(&keep);
    let projected: Vec<DensityMatrix> = states
        .iter()
        .map(|s| DensityMatrix::from_computed(v.adjoint() * s.matrix() * &v))
        .collect();
    let lift = |omega: &DensityMatrix| DensityMatrix::from_computed(&v * omega.matrix() * v.adjoint());

    if let Some(res) = orthogonal_fast_path(&projected) {
        return Ok(CapacityResult { omega: lift(&res.omega), ..res });
    }

    let entropies: Vec<f64> = projected.iter().map(qcore::entropy).collect();
    let mut w = vec![1.0 / n as f64; n];
    let mut best: Option<CapacityResult> = None;
    let mut history = Vec::new();
    let mut violations = vec![false; n];
    let mut dist = vec![0.0; n];

    for iter in 1..=opts.max_iter {
        let avg = DensityMatrix::mixture(&w, &projected)?;
        let target = RelEntropyTarget::new(&avg);
        for i in 0..n {
            dist[i] = target.divergence_with_entropy(&projected[i], entropies[i])?;
            if dist[i].is_infinite() {
                violations[i] = true;
            }
        }
        let chi: f64 = (0..n).filter(|&i| w[i] > 0.0).map(|i| w[i] * dist[i]).sum();
        let dmax = dist.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let gap = (dmax - chi).max(0.0);
        if opts.record_history {
            history.push(chi);
        }
        if best.as_ref().is_none_or(|b| gap < b.gap) {
            best = Some(CapacityResult {
                capacity: chi + 0.5 * gap,
                gap,
                weights: w.clone(),
                omega: avg,
                iters: iter,
                support_violations: 0,
                chi,
                chi_history: Vec::new(),
            });
        }
        if gap <= opts.tol {
            break;
        }

        // Multiplicative step, with frozen weights readmitted when they violate optimality.
        let finite_max = dist.iter().copied().filter(|x| x.is_finite()).fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for i in 0..n {
            if w[i] == 0.0 {
                if dist[i] > chi + opts.tol {
                    w[i] = READMIT;
                }
            } else if dist[i].is_infinite() {
                w[i] = w[i].max(READMIT);
            } else {
                w[i] *= (dist[i] - finite_max).exp();
            }
            total += w[i];
        }
        for wi in w.iter_mut() {
            *wi /= total;
            if *wi < FREEZE {
                *wi = 0.0;
            }
        }
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|wi| *wi /= total);
    }

    let mut res = best.expect("at least one iteration");
    res.omega = lift(&res.omega);
    res.support_violations = violations.iter().filter(|v| **v).count();
    res.chi_history = history;
    if res.gap > opts.tol {
        res.iters = opts.max_iter;
        return Err(Error::MaxIterExceeded(Box::new(res)));
    }
    Ok(res)
}

fn orthogonal_fast_path(states: &[DensityMatrix]) -> Option<CapacityResult> {
    let n = states.len();
    if n < 2 {
        let omega = states[0].clone();
        return Some(CapacityResult {
            capacity: 0.0,
            gap: 0.0,
            weights: vec![1.0],
            omega,
            iters: 0,
            support_violations: 0,
            chi: 0.0,
            chi_history: Vec::new(),
        });
    }
    for i in 0..n {
        for j in i + 1..n {
            let overlap = (states[i].matrix() * states[j].matrix()).trace().re;
            if overlap > 1e-14 {
                return None;
            }
        }
    }
    let w = vec![1.0 / n as f64; n];
    let omega = DensityMatrix::mixture(&w, states).ok()?;
    let c = (n as f64).ln();
    Some(CapacityResult {
        capacity: c,
        gap: 0.0,
        weights: w,
        omega,
        iters: 0,
        support_violations: 0,
        chi: c,
        chi_history: Vec::new(),
    })
}

/// `sup_i H(rho_i || sigma)`, an upper bound on the capacity for every `sigma`.
pub fn capacity_certificate(states: &[DensityMatrix], sigma: &DensityMatrix) -> Result<f64> {
    if states.is_empty() {
        return Err(Error::EmptySet);
    }
    let target = RelEntropyTarget::new(sigma);
    states
        .iter()
        .map(|s| target.divergence(s))
        .try_fold(0.0f64, |acc, d| d.map(|d| acc.max(d)))
}

const UNION_GRID: usize = 20;

/// Bounds on the capacity of a union of sets from the capacities and optimal
/// average states of the parts.
///
/// `lower = max_lambda sum lambda_k C_k + chi({lambda_k, Omega_k})`, maximized
/// over a simplex grid and refined by a multiplicative ascent;
/// `upper = max_k C_k + ln n`.
pub fn union_bounds(parts: &[CapacityResult]) -> Result<(f64, f64)> {
    let first = parts.first().ok_or(Error::EmptySet)?;
    for p in parts {
        check_dim(first.omega.dim(), p.omega.dim())?;
    }
    let n = parts.len();
    let caps: Vec<f64> = parts.iter().map(|p| p.capacity).collect();
    let omegas: Vec<DensityMatrix> = parts.iter().map(|p| p.omega.clone()).collect();
    let objective = |lam: &[f64]| -> f64 {
        let mu = Ensemble { weights: lam.to_vec(), states: omegas.clone() };
        lam.iter().zip(&caps).map(|(l, c)| l * c).sum::<f64>() + chi_of_ensemble(&mu)
    };

    let mut lower = caps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if n <= 5 {
        for_each_grid_point(n, UNION_GRID, &mut |lam| lower = lower.max(objective(lam)));
    }

    // Ascent on the concave objective: lambda_k ∝ lambda_k exp(C_k + H(Omega_k || avg)).
    let entropies: Vec<f64> = omegas.iter().map(qcore::entropy).collect();
    let mut lam = vec![1.0 / n as f64; n];
    for _ in 0..20_000 {
        let avg = DensityMatrix::mixture(&lam, &omegas)?;
        let target = RelEntropyTarget::new(&avg);
        let mut score = vec![0.0; n];
        for k in 0..n {
            score[k] = caps[k] + target.divergence_with_entropy(&omegas[k], entropies[k])?;
        }
        let value: f64 = (0..n).map(|k| lam[k] * score[k]).sum();
        lower = lower.max(value);
        let top = score.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if top - value < 1e-12 || !top.is_finite() {
            break;
        }
        let mut total = 0.0;
        for k in 0..n {
            lam[k] *= (score[k] - top).exp();
            total += lam[k];
        }
        lam.iter_mut().for_each(|l| *l /= total);
    }
    let upper = caps.iter().copied().fold(f64::NEG_INFINITY, f64::max) + (n as f64).ln();
    Ok((lower.min(upper), upper))
}

fn for_each_grid_point(n: usize, res: usize, f: &mut dyn FnMut(&[f64])) {
    fn rec(prefix: &mut Vec<usize>, left: usize, n: usize, res: usize, f: &mut dyn FnMut(&[f64])) {
        if prefix.len() + 1 == n {
            prefix.push(left);
            let lam: Vec<f64> = prefix.iter().map(|k| *k as f64 / res as f64).collect();
            f(&lam);
            prefix.pop();
            return;
        }
        for k in 0..=left {
            prefix.push(k);
            rec(prefix, left - k, n, res, f);
            prefix.pop();
        }
    }
    rec(&mut Vec::with_capacity(n), res, n, res, f);
}

fn same_up_to_phase(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
    let d = a.nrows() as f64;
    let overlap = (a.adjoint() * b).trace();
    let phase = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { return false };
    (a.scale(1.0) * phase - b).iter().all(|z| z.norm() <= tol * d.max(1.0))
}

fn check_group(unitaries: &[CMatrix], d: usize) -> Result<()> {
    const TOL: f64 = 1e-10;
    if unitaries.is_empty() {
        return Err(Error::NotAGroup("no group elements".into()));
    }
    for u in unitaries {
        check_dim(d, u.nrows())?;
        if !qcore::is_unitary(u, TOL) {
            return Err(Error::NotAGroup("element is not unitary".into()));
        }
    }
    let id = CMatrix::identity(d, d);
    if !unitaries.iter().any(|u| same_up_to_phase(u, &id, TOL)) {
        return Err(Error::NotAGroup("identity is missing".into()));
    }
    for a in unitaries {
        for b in unitaries {
            let ab = a * b;
            if !unitaries.iter().any(|u| same_up_to_phase(u, &ab, TOL)) {
                return Err(Error::NotAGroup("set is not closed under multiplication".into()));
            }
        }
    }
    Ok(())
}

/// Capacity of the orbit `{U_g sigma U_g*}` of a finite group: the optimal
/// average state is the group average `omega` and the capacity is `H(sigma || omega)`.
pub fn orbit_capacity(sigma: &DensityMatrix, unitaries: &[CMatrix]) -> Result<CapacityResult> {
    let d = sigma.dim();
    check_group(unitaries, d)?;
    let orbit: Vec<DensityMatrix> = unitaries.iter().map(|u| sigma.conjugate(u)).collect::<Result<_>>()?;
    let n = orbit.len();
    let weights = vec![1.0 / n as f64; n];
    let omega = DensityMatrix::mixture(&weights, &orbit)?;
    let target = RelEntropyTarget::new(&omega);
    let h = qcore::entropy(sigma);
    let dists: Vec<f64> = orbit.iter().map(|s| target.divergence_with_entropy(s, h)).collect::<Result<_>>()?;
    let c = dists[0];
    let spread = dists.iter().map(|x| (x - c).abs()).fold(0.0, f64::max);
    Ok(CapacityResult {
        capacity: c,
        gap: spread,
        weights,
        omega,
        iters: 0,
        support_violations: 0,
        chi: c,
        chi_history: Vec::new(),
    })
}

/// χ-capacity of the relative-entropy ball `{rho : H(rho || sigma) <= c}`
/// with `sigma` diagonal, and its optimal average state.
pub fn chi_capacity_v(spec: &ProbabilitySpectrum, c: f64, rel_tol: f64) -> Result<VSetProfile> {
    maxent::chi_capacity_v(spec, c, rel_tol)
}
