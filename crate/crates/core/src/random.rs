//! Random states and unitaries for property checks and demos.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::qcore::{CMatrix, CVector, Complex64, DensityMatrix};

fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    })
}

/// Induced-measure random state `G G* / Tr G G*` with `G` a `d x rank`
/// Ginibre matrix; `rank = d` gives full rank almost surely.
pub fn density_matrix<R: Rng + ?Sized>(rng: &mut R, d: usize, rank: usize) -> DensityMatrix {
    let g = ginibre(rng, d, rank.max(1));
    DensityMatrix::from_computed(&g * g.adjoint())
}

/// Haar-random pure state.
pub fn pure_state<R: Rng + ?Sized>(rng: &mut R, d: usize) -> DensityMatrix {
    let v: CVector = ginibre(rng, d, 1).column(0).into();
    DensityMatrix::pure(&v).expect("Gaussian vector is nonzero")
}

/// Haar-random unitary from the QR decomposition of a Ginibre matrix.
pub fn unitary<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMatrix {
    let qr = ginibre(rng, d, d).qr();
    let (q, r) = (qr.q(), qr.r());
    let phases = CMatrix::from_fn(d, d, |i, j| {
        if i == j {
            let z = r[(i, i)];
            if z.norm() > 0.0 {
                z / z.norm()
            } else {
                Complex64::new(1.0, 0.0)
            }
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    q * phases
}

/// Uniform point on the probability simplex.
pub fn simplex<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| -rng.random::<f64>().max(f64::MIN_POSITIVE).ln()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}
