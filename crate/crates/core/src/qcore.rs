//! Finite-dimensional density matrices and their entropic functionals.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Complex64 = nalgebra::Complex<f64>;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;
const NEG_EIG_TOL: f64 = 1e-10;
/// Eigenvalues of the second argument at or below this value span its kernel.
pub const KERNEL_EIG: f64 = 1e-12;
/// Weight of the first argument on that kernel above which `H(rho||sigma) = +inf`.
pub const KERNEL_MASS: f64 = 1e-10;

/// Hermitian, positive semidefinite, unit-trace complex matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixRecord", into = "MatrixRecord")]
pub struct DensityMatrix {
    mat: CMatrix,
}

/// JSON form of a square complex matrix: row-major `[re, im]` pairs.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixRecord {
    pub dim: usize,
    pub entries: Vec<[f64; 2]>,
}

impl MatrixRecord {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let d = m.nrows();
        let mut entries = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                entries.push([m[(i, j)].re, m[(i, j)].im]);
            }
        }
        MatrixRecord { dim: d, entries }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        if self.entries.len() != self.dim * self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim * self.dim, found: self.entries.len() });
        }
        Ok(CMatrix::from_row_iterator(
            self.dim,
            self.dim,
            self.entries.iter().map(|[re, im]| Complex64::new(*re, *im)),
        ))
    }
}

impl TryFrom<MatrixRecord> for DensityMatrix {
    type Error = Error;

    fn try_from(rec: MatrixRecord) -> Result<Self> {
        DensityMatrix::new(rec.to_matrix()?)
    }
}

impl From<DensityMatrix> for MatrixRecord {
    fn from(rho: DensityMatrix) -> Self {
        MatrixRecord::from_matrix(&rho.mat)
    }
}

/// Eigenvalues (ascending order not guaranteed) and eigenvectors as columns.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(m.clone());
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

impl DensityMatrix {
    /// Validates a matrix as a density matrix: Hermitian to `1e-12`
    /// elementwise, unit trace to `1e-12`, eigenvalues `>= -1e-10`.
    /// Slightly negative eigenvalues are clipped to zero.
    pub fn new(mat: CMatrix) -> Result<Self> {
        if mat.nrows() != mat.ncols() || mat.nrows() == 0 {
            return Err(Error::ValidationFailed(format!(
                "density matrix must be square and nonempty, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        if mat.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::ValidationFailed("matrix has non-finite entries".into()));
        }
        let asym = (&mat - mat.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if asym > HERMITIAN_TOL {
            return Err(Error::ValidationFailed(format!("matrix is not Hermitian (deviation {asym:e})")));
        }
        let tr = mat.trace().re;
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::ValidationFailed(format!("trace is {tr}, not 1")));
        }
        let h = hermitian_part(&mat);
        let (vals, vecs) = hermitian_eigen(&h);
        let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
        if min < -NEG_EIG_TOL {
            return Err(Error::ValidationFailed(format!("matrix has negative eigenvalue {min:e}")));
        }
        if min < 0.0 {
            let clipped: Vec<f64> = vals.iter().map(|v| v.max(0.0)).collect();
            return Ok(DensityMatrix { mat: reassemble(&clipped, &vecs) });
        }
        Ok(DensityMatrix { mat: h })
    }

    /// Builds a state from a matrix known to be positive up to rounding, such
    /// as a convex combination or a conjugation of valid states. The result is
    /// symmetrized and renormalized.
    pub(crate) fn from_computed(mat: CMatrix) -> Self {
        let h = hermitian_part(&mat);
        let tr = h.trace().re;
        DensityMatrix { mat: h.unscale(tr) }
    }

    pub fn from_diagonal(probs: &[f64]) -> Result<Self> {
        let v = DVector::from_iterator(probs.len(), probs.iter().map(|p| Complex64::new(*p, 0.0)));
        Self::new(CMatrix::from_diagonal(&v))
    }

    /// `|psi><psi| / <psi|psi>`.
    pub fn pure(psi: &CVector) -> Result<Self> {
        let norm = psi.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::ValidationFailed("state vector has zero or non-finite norm".into()));
        }
        let v = psi.unscale(norm);
        Ok(DensityMatrix { mat: &v * v.adjoint() })
    }

    /// Basis projector `|k><k|` in dimension `d`.
    pub fn basis_state(d: usize, k: usize) -> Self {
        let mut m = CMatrix::zeros(d, d);
        m[(k, k)] = Complex64::new(1.0, 0.0);
        DensityMatrix { mat: m }
    }

    pub fn maximally_mixed(d: usize) -> Self {
        DensityMatrix { mat: CMatrix::identity(d, d).unscale(d as f64) }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    /// Eigenvalues clipped at zero, with eigenvectors as columns.
    pub fn eigen(&self) -> (Vec<f64>, CMatrix) {
        let (vals, vecs) = hermitian_eigen(&self.mat);
        (vals.into_iter().map(|v| v.max(0.0)).collect(), vecs)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.eigen().0
    }

    /// Diagonal entries (real parts).
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.mat[(i, i)].re).collect()
    }

    /// `U rho U*`.
    pub fn conjugate(&self, u: &CMatrix) -> Result<Self> {
        check_dim(self.dim(), u.nrows())?;
        Ok(Self::from_computed(u * &self.mat * u.adjoint()))
    }

    /// `rho ⊗ sigma`.
    pub fn kron(&self, other: &DensityMatrix) -> Self {
        DensityMatrix { mat: self.mat.kronecker(&other.mat) }
    }

    /// `sum_i w_i rho_i`; weights are not required to be normalized.
    pub fn mixture(weights: &[f64], states: &[DensityMatrix]) -> Result<Self> {
        let first = states.first().ok_or(Error::EmptySet)?;
        if weights.len() != states.len() {
            return Err(Error::DimensionMismatch { expected: states.len(), found: weights.len() });
        }
        let d = first.dim();
        let mut acc = CMatrix::zeros(d, d);
        for (w, s) in weights.iter().zip(states) {
            check_dim(d, s.dim())?;
            if *w != 0.0 {
                acc += s.mat.scale(*w);
            }
        }
        Ok(Self::from_computed(acc))
    }

    /// `Tr P rho` for a Hermitian `P`.
    pub fn expectation(&self, p: &CMatrix) -> f64 {
        (p * &self.mat).trace().re
    }
}

fn reassemble(vals: &[f64], vecs: &CMatrix) -> CMatrix {
    let d = DVector::from_iterator(vals.len(), vals.iter().map(|v| Complex64::new(*v, 0.0)));
    vecs * CMatrix::from_diagonal(&d) * vecs.adjoint()
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// `-sum p ln p` with `0 ln 0 = 0`.
pub fn shannon(probs: &[f64]) -> f64 {
    probs.iter().filter(|p| **p > 0.0).map(|p| -p * p.ln()).sum()
}

/// Orthonormal basis given by the columns of a unitary matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Basis {
    vectors: CMatrix,
}

impl Basis {
    pub fn standard(d: usize) -> Self {
        Basis { vectors: CMatrix::identity(d, d) }
    }

    /// Checks that the Gram matrix is the identity within `1e-10`.
    pub fn new(vectors: CMatrix) -> Result<Self> {
        let d = vectors.nrows();
        check_dim(d, vectors.ncols())?;
        let gram = vectors.adjoint() * &vectors;
        let dev = (gram - CMatrix::identity(d, d)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if dev > 1e-10 {
            return Err(Error::ValidationFailed(format!("basis is not orthonormal (deviation {dev:e})")));
        }
        Ok(Basis { vectors })
    }

    pub fn dim(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn vectors(&self) -> &CMatrix {
        &self.vectors
    }
}

/// von Neumann entropy in nats.
pub fn entropy(rho: &DensityMatrix) -> f64 {
    shannon(&rho.eigenvalues())
}

/// Spectral data of the second argument of `H(rho || sigma)`, reusable
/// across many first arguments.
#[derive(Clone, Debug)]
pub struct RelEntropyTarget {
    vecs: CMatrix,
    log_vals: Vec<f64>,
    kernel: Vec<bool>,
}

impl RelEntropyTarget {
    pub fn new(sigma: &DensityMatrix) -> Self {
        let (vals, vecs) = sigma.eigen();
        let kernel: Vec<bool> = vals.iter().map(|v| *v <= KERNEL_EIG).collect();
        let log_vals = vals.iter().zip(&kernel).map(|(v, k)| if *k { 0.0 } else { v.ln() }).collect();
        RelEntropyTarget { vecs, log_vals, kernel }
    }

    pub fn dim(&self) -> usize {
        self.vecs.nrows()
    }

    /// `H(rho || sigma)` given `H(rho)`.
    pub fn divergence_with_entropy(&self, rho: &DensityMatrix, rho_entropy: f64) -> Result<f64> {
        check_dim(self.dim(), rho.dim())?;
        let rotated = self.vecs.adjoint() * rho.matrix() * &self.vecs;
        let mut kernel_mass = 0.0;
        let mut cross = 0.0;
        for j in 0..self.dim() {
            let w = rotated[(j, j)].re;
            if self.kernel[j] {
                kernel_mass += w;
            } else {
                cross += w * self.log_vals[j];
            }
        }
        if kernel_mass > KERNEL_MASS {
            return Ok(f64::INFINITY);
        }
        Ok((-rho_entropy - cross).max(0.0))
    }

    pub fn divergence(&self, rho: &DensityMatrix) -> Result<f64> {
        self.divergence_with_entropy(rho, entropy(rho))
    }
}

/// Quantum relative entropy `H(rho || sigma) = Tr rho (ln rho - ln sigma)`,
/// `+inf` unless the support of `rho` lies in the support of `sigma`.
pub fn relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_dim(rho.dim(), sigma.dim())?;
    RelEntropyTarget::new(sigma).divergence(rho)
}

/// Classical projection `rho -> sum_k <k|rho|k> |k><k|`.
pub fn dephase(rho: &DensityMatrix, basis: &Basis) -> Result<DensityMatrix> {
    check_dim(rho.dim(), basis.dim())?;
    let b = basis.vectors();
    let rotated = b.adjoint() * rho.matrix() * b;
    let diag: Vec<f64> = (0..rho.dim()).map(|k| rotated[(k, k)].re.max(0.0)).collect();
    Ok(DensityMatrix::from_computed(reassemble(&diag, b)))
}

/// Trace norm `||rho - sigma||_1`.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_dim(rho.dim(), sigma.dim())?;
    let diff = hermitian_part(&(rho.matrix() - sigma.matrix()));
    let (vals, _) = hermitian_eigen(&diff);
    Ok(vals.iter().map(|v| v.abs()).sum())
}

/// Which tensor factor of `H_A ⊗ H_B` is traced out.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

/// Reduced state: `Side::Right` traces out `B` and returns the state on `A`.
pub fn partial_trace(omega: &DensityMatrix, dims: (usize, usize), side: Side) -> Result<DensityMatrix> {
    let (da, db) = dims;
    check_dim(da * db, omega.dim())?;
    let m = omega.matrix();
    let out = match side {
        Side::Right => CMatrix::from_fn(da, da, |i, j| (0..db).map(|b| m[(i * db + b, j * db + b)]).sum()),
        Side::Left => CMatrix::from_fn(db, db, |i, j| (0..da).map(|a| m[(a * db + i, a * db + j)]).sum()),
    };
    Ok(DensityMatrix::from_computed(out))
}

/// Checks `U U* = I` within `tol`.
pub fn is_unitary(u: &CMatrix, tol: f64) -> bool {
    if u.nrows() != u.ncols() {
        return false;
    }
    let d = u.nrows();
    (u * u.adjoint() - CMatrix::identity(d, d)).iter().all(|z| z.norm() <= tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;
    use proptest::prelude::*;
    use rand::{rngs::StdRng, SeedableRng};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn plus() -> DensityMatrix {
        DensityMatrix::pure(&CVector::from_vec(vec![c(1.0), c(1.0)])).unwrap()
    }

    #[test]
    fn entropy_examples() {
        assert!((entropy(&DensityMatrix::maximally_mixed(4)) - 4f64.ln()).abs() < 1e-12);
        assert!(entropy(&plus()).abs() < 1e-12);
        let rho = DensityMatrix::from_diagonal(&[0.7, 0.2, 0.1]).unwrap();
        assert!((entropy(&rho) - 0.801_818_552_543_337).abs() < 1e-12);
    }

    #[test]
    fn relative_entropy_examples() {
        let a = DensityMatrix::from_diagonal(&[0.7, 0.3]).unwrap();
        let b = DensityMatrix::maximally_mixed(2);
        assert!(relative_entropy(&a, &a).unwrap().abs() < 1e-12);
        let kl = 0.7 * 1.4f64.ln() + 0.3 * 0.6f64.ln();
        assert!((relative_entropy(&a, &b).unwrap() - kl).abs() < 1e-12);
        let e0 = DensityMatrix::basis_state(2, 0);
        let e1 = DensityMatrix::basis_state(2, 1);
        assert!(relative_entropy(&e0, &e1).unwrap().is_infinite());
        assert!(matches!(
            relative_entropy(&e0, &DensityMatrix::maximally_mixed(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn validation_rejects_bad_matrices() {
        let mut m = CMatrix::identity(2, 2).scale(0.5);
        m[(0, 1)] = Complex64::new(0.1, 0.0);
        assert!(DensityMatrix::new(m).is_err());
        assert!(DensityMatrix::from_diagonal(&[0.6, 0.6]).is_err());
        assert!(DensityMatrix::from_diagonal(&[1.5, -0.5]).is_err());
        assert!(DensityMatrix::from_diagonal(&[1.0 + 1e-11, -1e-11]).is_ok());
    }

    #[test]
    fn dephasing_and_trace_distance() {
        let d = dephase(&plus(), &Basis::standard(2)).unwrap();
        assert!((d.matrix() - DensityMatrix::maximally_mixed(2).matrix()).norm() < 1e-14);
        let a = DensityMatrix::from_diagonal(&[0.7, 0.3]).unwrap();
        assert!((trace_distance(&a, &DensityMatrix::maximally_mixed(2)).unwrap() - 0.4).abs() < 1e-14);
        let e0 = DensityMatrix::basis_state(2, 0);
        let e1 = DensityMatrix::basis_state(2, 1);
        assert!((trace_distance(&e0, &e1).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn partial_traces() {
        let a = DensityMatrix::from_diagonal(&[0.7, 0.3]).unwrap();
        let b = plus();
        let ab = a.kron(&b);
        assert!((partial_trace(&ab, (2, 2), Side::Right).unwrap().matrix() - a.matrix()).norm() < 1e-14);
        assert!((partial_trace(&ab, (2, 2), Side::Left).unwrap().matrix() - b.matrix()).norm() < 1e-14);
        let bell = DensityMatrix::pure(&CVector::from_vec(vec![c(1.0), c(0.0), c(0.0), c(1.0)])).unwrap();
        for side in [Side::Left, Side::Right] {
            let r = partial_trace(&bell, (2, 2), side).unwrap();
            assert!((r.matrix() - DensityMatrix::maximally_mixed(2).matrix()).norm() < 1e-14);
        }
    }

    #[test]
    fn json_round_trip() {
        let rho = plus();
        let text = serde_json::to_string(&rho).unwrap();
        assert!(text.contains("\"dim\":2"));
        let back: DensityMatrix = serde_json::from_str(&text).unwrap();
        assert!((back.matrix() - rho.matrix()).norm() < 1e-15);
        assert!(serde_json::from_str::<DensityMatrix>(r#"{"dim":2,"entries":[[1,0]]}"#).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn dephasing_identity(seed in any::<u64>(), d in 2usize..5) {
            let mut rng = StdRng::seed_from_u64(seed);
            let rho = random::density_matrix(&mut rng, d, d);
            let basis = Basis::new(random::unitary(&mut rng, d)).unwrap();
            let pi = dephase(&rho, &basis).unwrap();
            let lhs = relative_entropy(&rho, &pi).unwrap();
            let rhs = entropy(&pi) - entropy(&rho);
            prop_assert!((lhs - rhs).abs() < 1e-10);
            prop_assert!(rhs >= -1e-12);
            let twice = dephase(&pi, &basis).unwrap();
            prop_assert!((twice.matrix() - pi.matrix()).norm() < 1e-12);
        }

        #[test]
        fn subadditivity(seed in any::<u64>()) {
            let mut rng = StdRng::seed_from_u64(seed);
            let w = random::density_matrix(&mut rng, 6, 6);
            let a = partial_trace(&w, (2, 3), Side::Right).unwrap();
            let b = partial_trace(&w, (2, 3), Side::Left).unwrap();
            prop_assert!(entropy(&w) <= entropy(&a) + entropy(&b) + 1e-12);
            prop_assert!((a.matrix().trace().re - 1.0).abs() < 1e-12);
        }
    }
}
