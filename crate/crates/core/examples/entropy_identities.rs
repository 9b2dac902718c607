//! Entropy, relative entropy and the dephasing identity on random qutrits.
use qentcap::chicap::{self, Ensemble};
use qentcap::qcore::{self, Basis};
use qentcap::random;
use rand::SeedableRng;
use rand::rngs::StdRng;

fn main() -> qentcap::Result<()> {
    let mut rng = StdRng::seed_from_u64(1);
    let rho = random::density_matrix(&mut rng, 3, 3);
    let sigma = random::density_matrix(&mut rng, 3, 3);

    let d = qcore::relative_entropy(&rho, &sigma)?;
    let t = qcore::trace_distance(&rho, &sigma)?;
    println!("H(rho) = {:.6}, H(rho||sigma) = {d:.6} >= ||rho - sigma||^2 / 2 = {:.6}", qcore::entropy(&rho), 0.5 * t * t);

    let basis = Basis::new(random::unitary(&mut rng, 3))?;
    let pi = qcore::dephase(&rho, &basis)?;
    println!(
        "dephasing: H(rho||Pi(rho)) = {:.12}, H(Pi(rho)) - H(rho) = {:.12}",
        qcore::relative_entropy(&rho, &pi)?,
        qcore::entropy(&pi) - qcore::entropy(&rho)
    );

    let mu = Ensemble::new(vec![0.2, 0.5, 0.3], (0..3).map(|_| random::density_matrix(&mut rng, 3, 2)).collect())?;
    let avg = mu.average();
    let lhs: f64 = mu.weights().iter().zip(mu.states()).map(|(w, s)| w * qcore::relative_entropy(s, &sigma).unwrap()).sum();
    let rhs = chicap::chi_of_ensemble(&mu) + qcore::relative_entropy(&avg, &sigma)?;
    println!("Donald: {lhs:.12} = {rhs:.12}");
    Ok(())
}
