//! Capacities of state sets compressed onto growing subspaces.
//!
//! A projector `P` maps a state with `Tr P rho > 0` to `Theta_P(rho) = P rho P / Tr P rho`.
//! For a set `A` with `eta(A, P) = min_rho Tr P rho`, the compressed set obeys
//! `eta C(Theta_P(A)) <= C(A)`, and the compressed capacities converge to
//! `C(A)` along any sequence of projectors increasing to the identity.

use serde::Serialize;

use crate::chicap::{self, CapacityResult};
use crate::error::{Error, Result};
use crate::qcore::{self, CMatrix, CVector, Complex64, DensityMatrix};

/// States with `Tr P rho` at or below this lie outside the domain of `Theta_P`.
pub const DOMAIN_THRESHOLD: f64 = 1e-12;
const PROJECTOR_TOL: f64 = 1e-10;

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Orthogonal projector given as an explicit matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Projector {
    mat: CMatrix,
    rank: usize,
}

impl Projector {
    /// Accepts a matrix that is Hermitian and idempotent within `1e-10`.
    pub fn new(mat: CMatrix) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::ValidationFailed("projector must be square".into()));
        }
        let herm = max_abs(&(&mat - mat.adjoint()));
        let idem = max_abs(&(&mat * &mat - &mat));
        if herm > PROJECTOR_TOL || idem > PROJECTOR_TOL {
            return Err(Error::ValidationFailed(format!(
                "not an orthogonal projector (Hermitian defect {herm:e}, idempotency defect {idem:e})"
            )));
        }
        let rank = mat.trace().re.round() as usize;
        Ok(Projector { mat, rank })
    }

    /// Projector onto the span of the given vectors.
    pub fn span(d: usize, vectors: &[CVector]) -> Result<Self> {
        let mut basis: Vec<CVector> = Vec::new();
        for v in vectors {
            qcore::check_dim(d, v.len())?;
            let mut w = v.clone();
            for _ in 0..2 {
                for b in &basis {
                    w -= b * b.dotc(&w);
                }
            }
            let n = w.norm();
            if n > 1e-10 * v.norm().max(1.0) {
                basis.push(w.unscale(n));
            }
        }
        let mut mat = CMatrix::zeros(d, d);
        for b in &basis {
            mat += b * b.adjoint();
        }
        Ok(Projector { mat, rank: basis.len() })
    }

    /// Projector onto the coordinate vectors `|i>`, `i` in `indices`.
    pub fn coordinate(d: usize, indices: &[usize]) -> Result<Self> {
        let vectors = indices
            .iter()
            .map(|&i| {
                if i >= d {
                    return Err(Error::ValidationFailed(format!("index {i} outside dimension {d}")));
                }
                let mut v = CVector::zeros(d);
                v[i] = Complex64::new(1.0, 0.0);
                Ok(v)
            })
            .collect::<Result<Vec<_>>>()?;
        Projector::span(d, &vectors)
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    /// `range(other) ⊆ range(self)`, i.e. `P_self P_other = P_other`.
    pub fn contains(&self, other: &Projector) -> bool {
        self.dim() == other.dim() && max_abs(&(&self.mat * &other.mat - &other.mat)) <= PROJECTOR_TOL
    }

    /// `Tr P rho`.
    pub fn weight(&self, rho: &DensityMatrix) -> Result<f64> {
        qcore::check_dim(self.dim(), rho.dim())?;
        Ok(rho.expectation(&self.mat))
    }
}

/// `Theta_P(rho) = P rho P / Tr P rho`.
pub fn project_state(rho: &DensityMatrix, p: &Projector) -> Result<DensityMatrix> {
    let w = p.weight(rho)?;
    if w <= DOMAIN_THRESHOLD {
        return Err(Error::OutOfDomain(w));
    }
    Ok(DensityMatrix::from_computed(p.matrix() * rho.matrix() * p.matrix()))
}

/// Weights `lambda_i ∝ pi_i / Tr P sigma_i` for which
/// `Theta_P(sum lambda_i sigma_i) = sum pi_i Theta_P(sigma_i)`.
pub fn lift_weights(pi: &[f64], traces: &[f64]) -> Result<Vec<f64>> {
    qcore::check_dim(pi.len(), traces.len())?;
    if traces.iter().any(|&t| t <= DOMAIN_THRESHOLD) {
        return Err(Error::OutOfDomain(traces.iter().copied().fold(f64::INFINITY, f64::min)));
    }
    let raw: Vec<f64> = pi.iter().zip(traces).map(|(p, t)| p / t).collect();
    let s: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|x| x / s).collect())
}

/// One level of a truncation sweep.
#[derive(Clone, Debug, Serialize)]
pub struct ProjectionReport {
    pub projector_rank: usize,
    /// `min_i Tr P rho_i`
    pub eta: f64,
    /// Capacity of the compressed states that lie in the domain of `Theta_P`.
    pub projected_capacity: CapacityResult,
    /// Every state lies in the domain of `Theta_P`.
    pub in_domain: bool,
    /// Indices of states outside the domain, left out of the solve.
    pub dropped: Vec<usize>,
    /// `C(A) - eta C(Theta_P(A))`, nonnegative up to solver tolerance.
    pub bound_slack: f64,
}

/// Full-space capacity and one report per projector of a nested sequence.
#[derive(Clone, Debug, Serialize)]
pub struct Sweep {
    pub full_capacity: CapacityResult,
    pub reports: Vec<ProjectionReport>,
}

const SWEEP_MAX_ITER: usize = 200_000;

pub fn truncated_capacity_sweep(states: &[DensityMatrix], projectors: &[Projector], tol: f64) -> Result<Sweep> {
    if states.is_empty() {
        return Err(Error::EmptySet);
    }
    for pair in projectors.windows(2) {
        if !pair[1].contains(&pair[0]) {
            return Err(Error::ValidationFailed(format!(
                "projectors are not nested (rank {} then rank {})",
                pair[0].rank(),
                pair[1].rank()
            )));
        }
    }
    let full = chicap::solve_capacity(states, tol, SWEEP_MAX_ITER)?;
    let mut reports = Vec::with_capacity(projectors.len());
    for p in projectors {
        let mut kept = Vec::with_capacity(states.len());
        let mut dropped = Vec::new();
        let mut eta = f64::INFINITY;
        for (i, s) in states.iter().enumerate() {
            let w = p.weight(s)?;
            eta = eta.min(w);
            match project_state(s, p) {
                Ok(t) => kept.push(t),
                Err(Error::OutOfDomain(_)) => dropped.push(i),
                Err(e) => return Err(e),
            }
        }
        if kept.is_empty() {
            return Err(Error::OutOfDomain(eta));
        }
        let eta = eta.clamp(0.0, 1.0);
        let projected = chicap::solve_capacity(&kept, tol, SWEEP_MAX_ITER)?;
        let slack = full.capacity - eta * projected.capacity;
        if slack < -2.0 * tol {
            return Err(Error::ValidationFailed(format!(
                "compressed capacity {} at eta {eta} exceeds the full capacity {}",
                projected.capacity, full.capacity
            )));
        }
        reports.push(ProjectionReport {
            projector_rank: p.rank(),
            eta,
            projected_capacity: projected,
            in_domain: dropped.is_empty(),
            dropped,
            bound_slack: slack,
        });
    }
    Ok(Sweep { full_capacity: full, reports })
}

/// The pair `A_i = rho/2 + |f_i><f_i|/2` with `rho ⊥ f_1, f_2`, and nested
/// coordinate projectors `P_n ⊇ {f_1, f_2}` with `Tr P_n rho = etas[n]`, so
/// that `eta(A, P_n) = (1 + etas[n]) / 2` and the inequality above is tight.
///
/// The compressed capacities are `ln 2 / (1 + eta_n)`, decreasing to
/// `C(A) = ln 2 / 2`.
pub fn decreasing_convergence_family(etas: &[f64]) -> Result<(Vec<DensityMatrix>, Vec<Projector>)> {
    let mut prev = 0.0;
    for &e in etas {
        if !(e > prev && e <= 1.0) {
            return Err(Error::ValidationFailed(format!("etas must increase strictly within (0, 1], got {etas:?}")));
        }
        prev = e;
    }
    let mut rho_eigs: Vec<f64> = Vec::new();
    let mut last = 0.0;
    for &e in etas {
        rho_eigs.push(e - last);
        last = e;
    }
    if last < 1.0 {
        rho_eigs.push(1.0 - last);
    }
    let d = 2 + rho_eigs.len();
    let states = (0..2)
        .map(|i| {
            let mut diag = vec![0.0; d];
            diag[i] = 0.5;
            for (k, v) in rho_eigs.iter().enumerate() {
                diag[2 + k] = 0.5 * v;
            }
            DensityMatrix::from_diagonal(&diag)
        })
        .collect::<Result<Vec<_>>>()?;
    let projectors = (1..=etas.len())
        .map(|n| Projector::coordinate(d, &(0..2 + n).collect::<Vec<_>>()))
        .collect::<Result<Vec<_>>>()?;
    Ok((states, projectors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand::rngs::StdRng;

    const LN2: f64 = std::f64::consts::LN_2;

    #[test]
    fn projector_validation() {
        assert!(Projector::new(CMatrix::identity(3, 3) * Complex64::new(0.5, 0.0)).is_err());
        let p = Projector::coordinate(4, &[0, 2]).unwrap();
        assert_eq!(p.rank(), 2);
        assert!(Projector::new(p.matrix().clone()).is_ok());
        let q = Projector::coordinate(4, &[0, 1, 2]).unwrap();
        assert!(q.contains(&p) && !p.contains(&q));
    }

    #[test]
    fn compression() {
        let mut rng = StdRng::seed_from_u64(5);
        let rho = random::density_matrix(&mut rng, 3, 2);
        let full = Projector::coordinate(3, &[0, 1, 2]).unwrap();
        assert!((project_state(&rho, &full).unwrap().matrix() - rho.matrix()).norm() < 1e-12);
        let v = CVector::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0), Complex64::new(0.0, 0.0)]);
        let line = Projector::span(3, std::slice::from_ref(&v)).unwrap();
        let t = project_state(&rho, &line).unwrap();
        assert!(qcore::entropy(&t) < 1e-10);
        let target = DensityMatrix::pure(&v).unwrap();
        assert!((t.matrix() - target.matrix()).norm() < 1e-10);
        let e0 = DensityMatrix::basis_state(3, 0);
        let off = Projector::coordinate(3, &[1, 2]).unwrap();
        assert!(matches!(project_state(&e0, &off), Err(Error::OutOfDomain(_))));
    }

    #[test]
    fn orthogonal_pair_at_every_level() {
        let states = vec![DensityMatrix::basis_state(4, 0), DensityMatrix::basis_state(4, 1)];
        let ps: Vec<Projector> = (2..=4).map(|n| Projector::coordinate(4, &(0..n).collect::<Vec<_>>()).unwrap()).collect();
        let sweep = truncated_capacity_sweep(&states, &ps, 1e-10).unwrap();
        for r in &sweep.reports {
            assert!((r.projected_capacity.capacity - LN2).abs() < 1e-9);
            assert!(r.in_domain && r.eta == 1.0);
        }
    }

    #[test]
    fn closed_form_family() {
        let (states, ps) = decreasing_convergence_family(&[0.5, 0.8, 0.95]).unwrap();
        let sweep = truncated_capacity_sweep(&states, &ps, 1e-12).unwrap();
        assert!((sweep.full_capacity.capacity - 0.5 * LN2).abs() < 1e-9);
        let frozen = [0.462_098_120_373_297, 0.385_081_766_977_747, 0.355_460_092_594_844];
        for (r, (eta, c)) in sweep.reports.iter().zip([0.5, 0.8, 0.95].iter().zip(frozen)) {
            assert!((r.eta - 0.5 * (1.0 + eta)).abs() < 1e-12);
            assert!((r.projected_capacity.capacity - c).abs() < 1e-8, "{}", r.projected_capacity.capacity);
            assert!(r.bound_slack > -1e-10);
        }
    }

    #[test]
    fn partial_domain_is_reported() {
        let states = vec![DensityMatrix::basis_state(3, 0), DensityMatrix::basis_state(3, 1), DensityMatrix::basis_state(3, 2)];
        let ps = vec![Projector::coordinate(3, &[0, 1]).unwrap(), Projector::coordinate(3, &[0, 1, 2]).unwrap()];
        let sweep = truncated_capacity_sweep(&states, &ps, 1e-10).unwrap();
        assert_eq!(sweep.reports[0].dropped, vec![2]);
        assert!(!sweep.reports[0].in_domain && sweep.reports[0].eta == 0.0);
        assert!((sweep.reports[1].projected_capacity.capacity - 3f64.ln()).abs() < 1e-9);
        let bad = vec![ps[1].clone(), ps[0].clone()];
        assert!(truncated_capacity_sweep(&states, &bad, 1e-10).is_err());
    }

    #[test]
    fn generic_qutrit_pair_converges() {
        let mut rng = StdRng::seed_from_u64(21);
        let states = vec![random::density_matrix(&mut rng, 3, 3), random::density_matrix(&mut rng, 3, 3)];
        let ps: Vec<Projector> = (1..=3).map(|n| Projector::coordinate(3, &(0..n).collect::<Vec<_>>()).unwrap()).collect();
        let sweep = truncated_capacity_sweep(&states, &ps, 1e-10).unwrap();
        assert!(sweep.reports[0].projected_capacity.capacity.abs() < 1e-10);
        let last = sweep.reports.last().unwrap();
        assert!((last.projected_capacity.capacity - sweep.full_capacity.capacity).abs() < 2e-10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn reweighting_commutes_with_compression(seed in any::<u64>(), p0 in 0.05f64..0.95) {
            let mut rng = StdRng::seed_from_u64(seed);
            let s = [random::density_matrix(&mut rng, 3, 3), random::density_matrix(&mut rng, 3, 3)];
            let u = random::unitary(&mut rng, 3);
            let v: Vec<CVector> = (0..2).map(|j| u.column(j).into()).collect();
            let p = Projector::span(3, &v).unwrap();
            let pi = [p0, 1.0 - p0];
            let traces = [p.weight(&s[0]).unwrap(), p.weight(&s[1]).unwrap()];
            let lam = lift_weights(&pi, &traces).unwrap();
            let lhs = project_state(&DensityMatrix::mixture(&lam, &s).unwrap(), &p).unwrap();
            let rhs = DensityMatrix::mixture(&pi, &[project_state(&s[0], &p).unwrap(), project_state(&s[1], &p).unwrap()]).unwrap();
            prop_assert!((lhs.matrix() - rhs.matrix()).norm() < 1e-10);
        }
    }
}
