//! State families whose χ-capacity is known in closed form or reduces to a
//! scalar equation: sequences of two-level states converging to a pure state,
//! layers of a diagonal state, coupling sets with maximally mixed marginals,
//! and orbits of the rotation group on the circle.

use std::f64::consts::PI;

use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::chicap::{self, Ensemble};
use crate::error::{Error, Result};
use crate::maxent::bisect_decreasing;
use crate::qcore::{CMatrix, CVector, Complex64, DensityMatrix};
use crate::series::{self, Term};
use crate::spectra::{ProbabilitySpectrum, QModel};

fn binary_entropy(p: f64) -> f64 {
    crate::qcore::shannon(&[p, 1.0 - p])
}

/// Smaller eigenvalue of the two-level block of `rho_n^±`.
fn small_eigenvalue(q: f64, eta: f64) -> f64 {
    let s = ((1.0 - 2.0 * q).powi(2) + 4.0 * eta * eta * q * (1.0 - q)).sqrt();
    2.0 * q * (1.0 - q) * (1.0 - eta * eta) / (1.0 + s)
}

/// Off-diagonal strength `eta in [0, 1]` for which the two-level state with
/// diagonal `(1 - q, q)` and coherence `eta sqrt(q(1 - q))` has entropy
/// `(1 - eps) h2(q)`.
pub fn eta_solver(q: f64, eps: f64, tol: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::ValidationFailed(format!("q must lie in (0, 1), got {q}")));
    }
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::ValidationFailed(format!("eps must lie in [0, 1], got {eps}")));
    }
    if eps == 0.0 {
        return Ok(0.0);
    }
    if eps == 1.0 {
        return Ok(1.0);
    }
    let target = (1.0 - eps) * binary_entropy(q);
    bisect_decreasing(0.0, 1.0, target, tol, |eta| Ok(binary_entropy(small_eigenvalue(q, eta))))
}

/// The family `S^eps = {rho_n^±}` for `q_n` from a model and `n` in a window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeqExampleModel {
    pub q_model: QModel,
    pub eps: f64,
    /// Inclusive window `(n_lo, n_hi)`, `n_lo >= 2`, for explicit states and
    /// reported spectra.
    pub n_range: (usize, usize),
}

impl SeqExampleModel {
    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.eps) {
            return Err(Error::ValidationFailed(format!("eps must lie in [0, 1], got {}", self.eps)));
        }
        let (lo, hi) = self.n_range;
        if lo < 2 || hi < lo {
            return Err(Error::ValidationFailed(format!("index window {lo}..={hi} must satisfy 2 <= lo <= hi")));
        }
        Ok(())
    }
}

/// `rho_n^± = (1 - q_n)|1><1| + q_n|n><n| ± eta_n sqrt((1 - q_n) q_n)(|1><n| + |n><1|)`
/// in dimension `n_hi`, ordered `rho_lo^+, rho_lo^-, rho_{lo+1}^+, ...`.
pub fn seq_example_states(model: &SeqExampleModel) -> Result<Vec<DensityMatrix>> {
    model.validate()?;
    let (lo, hi) = model.n_range;
    let mut out = Vec::with_capacity(2 * (hi - lo + 1));
    for n in lo..=hi {
        let q = model.q_model.q(n);
        let eta = eta_solver(q, model.eps, 1e-15)?;
        let off = eta * ((1.0 - q) * q).sqrt();
        for sign in [1.0, -1.0] {
            let mut m = CMatrix::zeros(hi, hi);
            m[(0, 0)] = Complex64::new(1.0 - q, 0.0);
            m[(n - 1, n - 1)] = Complex64::new(q, 0.0);
            m[(0, n - 1)] = Complex64::new(sign * off, 0.0);
            m[(n - 1, 0)] = Complex64::new(sign * off, 0.0);
            out.push(DensityMatrix::new(m)?);
        }
    }
    Ok(out)
}

/// Capacity data of `S^eps`.
#[derive(Clone, Debug, Serialize)]
pub struct SeqExampleResult {
    pub eps: f64,
    /// `inf { lam : sum exp(-lam/q_n) < inf }`
    pub lam_star_seq: f64,
    /// Root of `F(x) = 1`.
    pub lam_eps: Option<f64>,
    /// `1 / G(lam_eps)`
    pub pi_eps: Option<f64>,
    /// `lam_eps - ln pi_eps`
    pub capacity: Option<f64>,
    /// `sum exp(-lam/q_n)` is finite for some `lam`; a returned result always has it.
    pub cond45: bool,
    /// `lim_{x -> lam*+} F(x)`, `+inf` when the series diverges at `lam*`.
    pub cond46_lhs: f64,
    pub has_optimal_ensemble: bool,
    /// Diagonal of the optimal average state on levels `1..=n_hi`.
    pub omega_spectrum: Vec<f64>,
    /// `pi_n^+ = pi_n^-` for `n = 2..=n_hi`.
    pub weights: Vec<f64>,
    /// `|F(lam_eps) - 1|`
    pub residual: Option<f64>,
}

/// `ln` of the `n`-th summands of `F` and `G` at `x`, with `u = ln n`.
fn fg_log_terms(model: &QModel, eps: f64, x: f64, u: f64) -> (f64, f64) {
    let r = model.inv_q_from_log(u);
    let q = 1.0 / r;
    let l1q = (-q).ln_1p();
    let g = eps * r.ln() + (1.0 - q) * (1.0 - eps) * r * l1q - x * r;
    (g + l1q, g)
}

fn f_and_g(model: &QModel, eps: f64, x: f64, tol: f64) -> Result<(f64, f64)> {
    let [f, g] = series::sum_series(
        |u| {
            let (lf, lg) = fg_log_terms(model, eps, x, u);
            [Term::positive(lf), Term::positive(lg)]
        },
        [true, true],
        tol,
    )?;
    Ok((f.value, g.value))
}

const SEQ_SERIES_TOL: f64 = 1e-13;

/// Solves the optimality system of `S^eps` through `F(x) = 1`, `pi = 1/G(x)`,
/// `C = x + ln G(x)`, where
/// `G(x) = sum_{n>=2} q^-eps (1-q)^((1-q)(1-eps)/q) exp(-x/q)` and `F` carries
/// one more factor `1 - q` in each term.
pub fn seq_example_capacity(model: &SeqExampleModel, tol: f64) -> Result<SeqExampleResult> {
    model.validate()?;
    if !(tol > 0.0) {
        return Err(Error::InvalidTolerance(tol));
    }
    let lam_star = model.q_model.threshold();
    if !lam_star.is_finite() {
        return Err(Error::Condition45Fails);
    }
    let eps = model.eps;
    let qm = model.q_model;
    let cond46_lhs = if qm.converges_at_threshold(eps) {
        f_and_g(&qm, eps, lam_star, SEQ_SERIES_TOL)?.0
    } else {
        f64::INFINITY
    };
    let mut res = SeqExampleResult {
        eps,
        lam_star_seq: lam_star,
        lam_eps: None,
        pi_eps: None,
        capacity: None,
        cond45: true,
        cond46_lhs,
        has_optimal_ensemble: cond46_lhs >= 1.0,
        omega_spectrum: Vec::new(),
        weights: Vec::new(),
        residual: None,
    };
    if !res.has_optimal_ensemble {
        return Ok(res);
    }

    let f = |x: f64| f_and_g(&qm, eps, x, SEQ_SERIES_TOL).map(|v| v.0);
    let mut hi = lam_star + 1.0;
    while f(hi)? > 1.0 {
        hi = lam_star + 2.0 * (hi - lam_star);
    }
    let lam = if cond46_lhs == 1.0 { lam_star } else { bisect_decreasing(lam_star, hi, 1.0, tol, f)? };
    let (fv, gv) = f_and_g(&qm, eps, lam, SEQ_SERIES_TOL)?;
    let pi = 1.0 / gv;
    res.lam_eps = Some(lam);
    res.pi_eps = Some(pi);
    res.capacity = Some(lam - pi.ln());
    res.residual = Some((fv - 1.0).abs());

    let hi_n = model.n_range.1;
    res.omega_spectrum.push(pi);
    for n in 2..=hi_n {
        let u = (n as f64).ln();
        let (_, lg) = fg_log_terms(&qm, eps, lam, u);
        let q = qm.q(n);
        res.omega_spectrum.push(pi * (lg + q.ln()).exp());
        res.weights.push(0.5 * pi * lg.exp());
    }
    Ok(res)
}

/// Equal-weight ensemble of the pure states `U_j |psi>`, `|psi> = sum sqrt(lambda_k)|k>`,
/// `U_j = diag(w^{jk})`, `w = exp(2 pi i / d)`, whose average is `sigma`.
pub fn layer_optimal_ensemble(spec: &ProbabilitySpectrum) -> Result<Ensemble> {
    let d = spec
        .len()
        .ok_or_else(|| Error::ValidationFailed("layer ensembles need a finite spectrum".into()))?;
    let amps: Vec<f64> = spec.leading(d).iter().map(|p| p.sqrt()).collect();
    let states = (0..d)
        .map(|j| {
            let psi = CVector::from_iterator(
                d,
                amps.iter().enumerate().map(|(k, a)| Complex64::from_polar(*a, 2.0 * PI * (j * k) as f64 / d as f64)),
            );
            DensityMatrix::pure(&psi)
        })
        .collect::<Result<Vec<_>>>()?;
    Ensemble::uniform(states)
}

/// Generalized Bell basis `|phi_ab> = d^{-1/2} sum_k w^{ak} |k>|k+b>` and the
/// `d` classical couplings `d^{-1} sum_k |k><k| ⊗ |k+j><k+j|` of two maximally
/// mixed marginals.
pub fn coupling_ensembles(d: usize) -> Result<(Ensemble, Ensemble)> {
    if d == 0 {
        return Err(Error::ValidationFailed("dimension must be positive".into()));
    }
    let mut bell = Vec::with_capacity(d * d);
    for a in 0..d {
        for b in 0..d {
            let mut v = CVector::zeros(d * d);
            for k in 0..d {
                v[k * d + (k + b) % d] = Complex64::from_polar(1.0, 2.0 * PI * (a * k) as f64 / d as f64);
            }
            bell.push(DensityMatrix::pure(&v)?);
        }
    }
    let classical = (0..d)
        .map(|j| {
            let mut diag = vec![0.0; d * d];
            for k in 0..d {
                diag[k * d + (k + j) % d] = 1.0 / d as f64;
            }
            DensityMatrix::from_diagonal(&diag)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((Ensemble::uniform(bell)?, Ensemble::uniform(classical)?))
}

/// Capacities of the coupling sets with maximally mixed marginals.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CouplingCapacity {
    pub d: usize,
    /// `chi` of the Bell-basis ensemble, `2 ln d`.
    pub quantum: f64,
    /// `chi` of the cyclic classical couplings, `ln d`.
    pub classical: f64,
    /// Capacities returned by the general solver on the same ensembles.
    pub quantum_solved: f64,
    pub classical_solved: f64,
}

pub fn coupling_set_capacity(d: usize) -> Result<CouplingCapacity> {
    let (bell, classical) = coupling_ensembles(d)?;
    let solve = |e: &Ensemble| chicap::solve_capacity(e.states(), 1e-12, 100_000).map(|r| r.capacity);
    Ok(CouplingCapacity {
        d,
        quantum: chicap::chi_of_ensemble(&bell),
        classical: chicap::chi_of_ensemble(&classical),
        quantum_solved: solve(&bell)?,
        classical_solved: solve(&classical)?,
    })
}

/// Number of quadrature nodes on the circle.
pub const FOURIER_POINTS: usize = 1 << 16;

/// Fourier data of a rotation orbit `{phi(x - t)}` on `L^2([-pi, pi))`.
#[derive(Clone, Debug, Serialize)]
pub struct FourierOrbit {
    /// `-sum_{|n| <= N} |c_n|^2 ln |c_n|^2`
    pub capacity: f64,
    /// `1 - sum_{|n| <= N} |c_n|^2`
    pub truncated_mass: f64,
    /// `|c_n|^2` for `n = -N..=N`.
    pub powers: Vec<f64>,
}

impl FourierOrbit {
    /// `|c_n|^2`.
    pub fn power(&self, n: i64) -> f64 {
        let big_n = (self.powers.len() / 2) as i64;
        self.powers[(n + big_n) as usize]
    }
}

/// χ-capacity of the orbit of `|phi>` under the rotations of the circle,
/// from the Fourier powers of `phi` computed by the midpoint rule on
/// [`FOURIER_POINTS`] cells (discontinuities at `-pi` and `0` fall on cell edges).
pub fn rotation_orbit_capacity(phi: &dyn Fn(f64) -> Complex64, n_harmonics: usize) -> Result<FourierOrbit> {
    let m = FOURIER_POINTS;
    if n_harmonics >= m / 2 {
        return Err(Error::ValidationFailed(format!("at most {} harmonics are resolved", m / 2 - 1)));
    }
    let h = 2.0 * PI / m as f64;
    let mut buf: Vec<Complex64> = (0..m).map(|j| phi(-PI + (j as f64 + 0.5) * h)).collect();
    let norm = buf.iter().map(|z| z.norm_sqr()).sum::<f64>() / m as f64;
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::NotNormalized(norm));
    }
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    let scale = 1.0 / (m as f64 * m as f64);
    let nh = n_harmonics as i64;
    let powers: Vec<f64> = (-nh..=nh)
        .map(|n| buf[n.rem_euclid(m as i64) as usize].norm_sqr() * scale)
        .collect();
    let capacity = crate::qcore::shannon(&powers);
    let truncated_mass = 1.0 - powers.iter().sum::<f64>();
    Ok(FourierOrbit { capacity, truncated_mass, powers })
}

/// `0` on `[-pi, 0)`, `sqrt(2)` on `[0, pi)`.
pub fn step_profile(x: f64) -> Complex64 {
    Complex64::new(if x < 0.0 { 0.0 } else { std::f64::consts::SQRT_2 }, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore;

    #[test]
    fn eta_endpoints_and_residual() {
        assert_eq!(eta_solver(0.2, 0.0, 1e-14).unwrap(), 0.0);
        assert_eq!(eta_solver(0.2, 1.0, 1e-14).unwrap(), 1.0);
        let eta = eta_solver(0.2, 0.5, 1e-14).unwrap();
        // independent check: eigenvalues of the explicit 2x2 matrix
        let off = eta * (0.2f64 * 0.8).sqrt();
        let m = DensityMatrix::from_computed(CMatrix::from_row_slice(
            2,
            2,
            &[Complex64::new(0.8, 0.0), Complex64::new(off, 0.0), Complex64::new(off, 0.0), Complex64::new(0.2, 0.0)],
        ));
        assert!((qcore::entropy(&m) - 0.5 * binary_entropy(0.2)).abs() < 1e-12);
    }

    #[test]
    fn states_of_the_family() {
        let base = SeqExampleModel { q_model: QModel::Power { exponent: 1.0 }, eps: 1.0, n_range: (2, 6) };
        for s in seq_example_states(&base).unwrap() {
            assert!(qcore::entropy(&s) < 1e-10);
        }
        let diag = SeqExampleModel { eps: 0.0, ..base };
        for (i, s) in seq_example_states(&diag).unwrap().iter().enumerate() {
            let n = 2 + i / 2;
            assert!(s.matrix()[(0, n - 1)].norm() == 0.0);
            assert!((s.diagonal()[n - 1] - 1.0 / n as f64).abs() < 1e-15);
        }
        let mid = SeqExampleModel { eps: 0.3, ..base };
        for (i, s) in seq_example_states(&mid).unwrap().iter().enumerate() {
            let q = 1.0 / (2 + i / 2) as f64;
            assert!((qcore::entropy(s) - 0.7 * binary_entropy(q)).abs() < 1e-10);
        }
    }

    #[test]
    fn geometric_q_model_capacity() {
        for eps in [0.0, 0.5, 1.0] {
            let model = SeqExampleModel { q_model: QModel::Power { exponent: 1.0 }, eps, n_range: (2, 200) };
            let r = seq_example_capacity(&model, 1e-13).unwrap();
            assert_eq!(r.lam_star_seq, 0.0);
            assert!(r.cond46_lhs.is_infinite() && r.has_optimal_ensemble);
            assert!(r.residual.unwrap() < 1e-9);
            let pi = r.pi_eps.unwrap();
            let total: f64 = r.weights.iter().map(|w| 2.0 * w).sum();
            assert!((total - 1.0).abs() < 1e-8, "{total}");
            let mass: f64 = r.weights.iter().enumerate().map(|(i, w)| (1.0 - 1.0 / (i + 2) as f64) * 2.0 * w).sum();
            assert!((mass - pi).abs() < 1e-8);
            // maximal distance property on sampled levels
            let c = r.capacity.unwrap();
            if eps == 1.0 {
                // sum (n - 1) 2^-n = 1 and sum n 2^-n over n >= 2 is 3/2
                assert!((r.lam_eps.unwrap() - 2f64.ln()).abs() < 1e-12);
                assert!((pi - 2.0 / 3.0).abs() < 1e-12 && (c - 3f64.ln()).abs() < 1e-12);
            }
            for n in [2usize, 3, 7, 20] {
                let q = 1.0 / n as f64;
                let d = -(1.0 - eps) * binary_entropy(q)
                    - (1.0 - q) * r.omega_spectrum[0].ln()
                    - q * r.omega_spectrum[n - 1].ln();
                assert!((d - c).abs() < 1e-6, "{d} vs {c}");
            }
        }
    }

    #[test]
    fn boundary_sequence_condition() {
        let model = SeqExampleModel { q_model: QModel::LogLog3, eps: 1.0, n_range: (2, 10) };
        let r = seq_example_capacity(&model, 1e-12).unwrap();
        assert_eq!(r.lam_star_seq, 1.0);
        // frozen from a 30-digit evaluation with the tail as an integral in ln n
        assert!((r.cond46_lhs - 0.958_445_637_3).abs() < 1e-8, "{}", r.cond46_lhs);
        assert!(!r.has_optimal_ensemble && r.capacity.is_none());
        let bad = SeqExampleModel { q_model: QModel::IteratedLog, ..model };
        assert!(matches!(seq_example_capacity(&bad, 1e-12), Err(Error::Condition45Fails)));
    }

    #[test]
    fn dyadic_layer() {
        let spec = ProbabilitySpectrum::finite(vec![0.5, 0.25, 0.25]).unwrap();
        let ens = layer_optimal_ensemble(&spec).unwrap();
        let avg = ens.average();
        assert!((avg.matrix() - DensityMatrix::from_diagonal(&[0.5, 0.25, 0.25]).unwrap().matrix()).norm() < 1e-12);
        for s in ens.states() {
            assert!((s.diagonal()[0] - 0.5).abs() < 1e-12);
        }
        assert!((chicap::chi_of_ensemble(&ens) - 1.5 * 2f64.ln()).abs() < 1e-9);
        let pure = layer_optimal_ensemble(&ProbabilitySpectrum::finite(vec![1.0]).unwrap()).unwrap();
        assert_eq!(pure.len(), 1);
        assert_eq!(chicap::chi_of_ensemble(&pure), 0.0);
    }

    #[test]
    fn couplings() {
        let one = coupling_set_capacity(1).unwrap();
        assert!(one.quantum.abs() < 1e-15 && one.classical.abs() < 1e-15);
        let two = coupling_set_capacity(2).unwrap();
        assert!((two.quantum - 4f64.ln()).abs() < 1e-9);
        assert!((two.classical - 2f64.ln()).abs() < 1e-9);
        let (bell, _) = coupling_ensembles(3).unwrap();
        for s in bell.states() {
            for side in [qcore::Side::Left, qcore::Side::Right] {
                let r = qcore::partial_trace(s, (3, 3), side).unwrap();
                assert!((r.matrix() - DensityMatrix::maximally_mixed(3).matrix()).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn rotation_orbits() {
        let flat = rotation_orbit_capacity(&|_| Complex64::new(1.0, 0.0), 16).unwrap();
        assert!(flat.capacity.abs() < 1e-12);
        let wave = rotation_orbit_capacity(&|x| Complex64::from_polar(1.0, 3.0 * x), 16).unwrap();
        assert!(wave.capacity.abs() < 1e-10 && (wave.power(3) - 1.0).abs() < 1e-12);
        let step = rotation_orbit_capacity(&step_profile, 1000).unwrap();
        assert!((step.power(0) - 0.5).abs() < 1e-12);
        for n in [1i64, 3, 5, 101] {
            let exact = 2.0 / (PI * PI * (n * n) as f64);
            assert!((step.power(n) - exact).abs() < 1e-5 * exact);
            assert!((step.power(-n) - exact).abs() < 1e-5 * exact);
            assert!(step.power(n + 1) < 1e-20);
        }
        assert!(step.truncated_mass > 0.0 && step.truncated_mass < 1e-3);
        assert!(matches!(
            rotation_orbit_capacity(&|_| Complex64::new(2.0, 0.0), 4),
            Err(Error::NotNormalized(_))
        ));
    }
}
