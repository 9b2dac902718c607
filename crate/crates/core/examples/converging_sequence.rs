//! Capacity of the family {rho_n^±} of two-level states tending to a pure
//! state, as a function of the coherence parameter eps.
use qentcap::constructions::{self, SeqExampleModel};
use qentcap::spectra::QModel;

fn main() -> qentcap::Result<()> {
    let power = QModel::Power { exponent: 1.0 };
    println!("q_n = 1/n");
    for i in 0..=10 {
        let eps = i as f64 / 10.0;
        let m = SeqExampleModel { q_model: power, eps, n_range: (2, 8) };
        let r = constructions::seq_example_capacity(&m, 1e-13)?;
        println!(
            "  eps = {eps:.1}: lam = {:.10}, pi = {:.10}, capacity = {:.10}",
            r.lam_eps.unwrap(),
            r.pi_eps.unwrap(),
            r.capacity.unwrap()
        );
    }

    let m = SeqExampleModel { q_model: QModel::LogLog3, eps: 1.0, n_range: (2, 8) };
    let r = constructions::seq_example_capacity(&m, 1e-12)?;
    println!(
        "q_n = 1/ln(n ln^3(2n+1)), eps = 1: lam* = {}, F(lam*) = {:.10}, optimal ensemble: {}",
        r.lam_star_seq, r.cond46_lhs, r.has_optimal_ensemble
    );

    let m = SeqExampleModel { q_model: QModel::IteratedLog, eps: 0.5, n_range: (2, 8) };
    match constructions::seq_example_capacity(&m, 1e-12) {
        Err(e) => println!("q_n = 1/(1 + ln(1 + ln n)): {e}"),
        Ok(r) => println!("unexpected: {:?}", r.capacity),
    }
    Ok(())
}
