//! Layers of a diagonal state and coupling sets with maximally mixed marginals.
use qentcap::chicap;
use qentcap::constructions;
use qentcap::spectra::ProbabilitySpectrum;

fn main() -> qentcap::Result<()> {
    let sigma = ProbabilitySpectrum::finite(vec![0.5, 0.25, 0.125, 0.125])?;
    let ens = constructions::layer_optimal_ensemble(&sigma)?;
    println!(
        "layer of diag(1/2, 1/4, 1/8, 1/8): chi = {:.12}, H(sigma) = {:.12}",
        chicap::chi_of_ensemble(&ens),
        sigma.entropy(1e-14)?
    );
    for d in 1..=4 {
        let c = constructions::coupling_set_capacity(d)?;
        println!(
            "d = {d}: quantum couplings {:.10} (solver {:.10}), classical {:.10} (solver {:.10})",
            c.quantum, c.quantum_solved, c.classical, c.classical_solved
        );
    }
    Ok(())
}
