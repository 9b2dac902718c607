//! The chi-capacity of a finite set with its optimal average state, checked
//! against the certificate sup_i H(rho_i||Omega).
use qentcap::chicap::{self, SolverOptions};
use qentcap::qcore::{self, CVector, Complex64, DensityMatrix};
use qentcap::random;
use rand::SeedableRng;
use rand::rngs::StdRng;

fn main() -> qentcap::Result<()> {
    let ket0 = CVector::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
    let plus = CVector::from_vec(vec![Complex64::new(0.5f64.sqrt(), 0.0), Complex64::new(0.5f64.sqrt(), 0.0)]);
    let pair = [DensityMatrix::pure(&ket0)?, DensityMatrix::pure(&plus)?];
    let r = chicap::solve_capacity(&pair, 1e-12, 100_000)?;
    println!("|0>, |+>: capacity {:.12}, weights {:?}", r.capacity, r.weights);

    let mut rng = StdRng::seed_from_u64(3);
    let states: Vec<DensityMatrix> = (0..6).map(|_| random::density_matrix(&mut rng, 3, 2)).collect();
    let opts = SolverOptions { tol: 1e-11, record_history: true, ..Default::default() };
    let r = chicap::solve_capacity_with(&states, opts)?;
    println!("six random qutrits: capacity {:.10} after {} iterations, gap {:.1e}", r.capacity, r.iters, r.gap);
    for (w, s) in r.weights.iter().zip(&states) {
        println!("  weight {w:.6}  H(rho||Omega) = {:.10}", qcore::relative_entropy(s, &r.omega)?);
    }
    println!("certificate: {:.10}", chicap::capacity_certificate(&states, &r.omega)?);
    Ok(())
}
