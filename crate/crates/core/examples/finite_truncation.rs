//! Capacities of a state set compressed onto nested subspaces.
use qentcap::approx;
use qentcap::random;
use qentcap::approx::Projector;
use rand::SeedableRng;
use rand::rngs::StdRng;

fn main() -> qentcap::Result<()> {
    let etas = [0.5, 0.8, 0.95, 0.99];
    let (states, projectors) = approx::decreasing_convergence_family(&etas)?;
    let sweep = approx::truncated_capacity_sweep(&states, &projectors, 1e-12)?;
    println!("full capacity {:.10}", sweep.full_capacity.capacity);
    for (r, eta) in sweep.reports.iter().zip(etas) {
        println!(
            "  rank {}: capacity {:.10} (ln 2/(1 + {eta}) = {:.10}), eta(A, P) = {:.3}",
            r.projector_rank,
            r.projected_capacity.capacity,
            std::f64::consts::LN_2 / (1.0 + eta),
            r.eta
        );
    }

    let mut rng = StdRng::seed_from_u64(11);
    let states: Vec<_> = (0..3).map(|_| random::density_matrix(&mut rng, 4, 2)).collect();
    let ps: Vec<Projector> = (1..=4).map(|n| Projector::coordinate(4, &(0..n).collect::<Vec<_>>())).collect::<qentcap::Result<_>>()?;
    let sweep = approx::truncated_capacity_sweep(&states, &ps, 1e-10)?;
    println!("three random rank-2 states in dimension 4, full capacity {:.10}", sweep.full_capacity.capacity);
    for r in &sweep.reports {
        println!("  rank {}: capacity {:.10}, eta {:.4}, slack {:.3e}", r.projector_rank, r.projected_capacity.capacity, r.eta, r.bound_slack);
    }
    Ok(())
}
