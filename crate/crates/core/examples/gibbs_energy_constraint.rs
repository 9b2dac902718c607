//! Maximal entropy under a mean energy constraint: Gibbs branch below the
//! critical energy, linear branch above it.
use qentcap::maxent;
use qentcap::spectra::{self, SpectralSequence};

fn main() -> qentcap::Result<()> {
    let seq = SpectralSequence::power_log(3.0)?;
    let h_star = spectra::h_star(&seq, 1e-13)?;
    println!("h_m = {:.6}, h_* = {h_star:.12}", seq.h_min());
    println!("{:>8} {:>12} {:>14} {:>8}", "h", "lam*", "sup H", "branch");
    for i in 0..12 {
        let h = seq.h_min() + 0.05 + 0.25 * i as f64;
        let p = maxent::sup_entropy_k(&seq, h)?;
        let lam = p.lam_star.map_or("-".to_string(), |l| format!("{l:.8}"));
        println!("{h:>8.3} {lam:>12} {:>14.10} {:>8}", p.sup_entropy, p.branch.as_str());
    }

    let oscillator = SpectralSequence::affine(1.0, -1.0)?;
    let g = maxent::gibbs_state_k(&oscillator, 1.0)?;
    println!("k - 1 at h = 1: Gibbs spectrum {:?}", g.leading(5));
    Ok(())
}
