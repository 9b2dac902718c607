//! Entropy supremum and chi-capacity of the set {rho : H(rho||sigma) <= c}.
use qentcap::maxent;
use qentcap::spectra::ProbabilitySpectrum;

fn main() -> qentcap::Result<()> {
    let sigma = ProbabilitySpectrum::geometric(0.5)?;
    println!("sigma = 2^-k, H(sigma) = {:.10}", sigma.entropy(1e-13)?);
    for c in [0.1, 0.5, 1.0, 1.5, 2.0, 3.0, 5.0] {
        let e = maxent::sup_entropy_v(&sigma, c)?;
        let k = maxent::chi_capacity_v(&sigma, c, 1e-13)?;
        println!(
            "c = {c:>4}: sup H = {:.10} ({}), capacity = {:.10} ({}), inf form {:.10}",
            e.sup_entropy.unwrap(),
            e.entropy_branch.unwrap().as_str(),
            k.chi_capacity.unwrap(),
            k.capacity_branch.unwrap().as_str(),
            maxent::variational_capacity_v(&sigma, c)?
        );
    }
    Ok(())
}
