//! Partition sums, increase coefficients and the critical energy of a few
//! eigenvalue sequences.
use qentcap::spectra::{self, ProbabilitySpectrum, QModel, SpectralSequence};

fn main() -> qentcap::Result<()> {
    let sequences = [
        ("k - 1", SpectralSequence::affine(1.0, -1.0)?),
        ("ln((k+1) ln^3(k+1))", SpectralSequence::power_log(3.0)?),
        ("1/q_(k+1), q_n = 1/ln(n ln^3(2n+1))", SpectralSequence::reciprocal(QModel::LogLog3)?),
    ];
    for (name, seq) in &sequences {
        let ic = spectra::increase_coefficient(seq, 1_000_000);
        let z = spectra::partition_moments(seq, ic.value.max(0.0) + 0.5, 1e-12)?;
        print!("{name}: ic = {} (exact: {}), Z(ic + 1/2) = {:.8}", ic.value, ic.exact, z.z);
        match spectra::h_star(seq, 1e-12) {
            Ok(h) => println!(", h_* = {h:.12}"),
            Err(e) => println!(", h_* unavailable ({e})"),
        }
    }

    let sigma = ProbabilitySpectrum::power_log(2.0, 3.0)?;
    let t = spectra::c_thresholds(&sigma, 1e-12)?;
    println!(
        "sigma ~ ((k+1) ln^3(k+1))^-2: dc = {}, H = {:.8}, c_* = {:.8}, c^* = {:.8}",
        t.dc,
        sigma.entropy(1e-12)?,
        t.c_star,
        t.c_upper
    );
    Ok(())
}
