//! Orbits of finite groups and of the rotation group of the circle.
use std::f64::consts::PI;

use qentcap::chicap;
use qentcap::constructions;
use qentcap::qcore::{self, CMatrix, Complex64};
use qentcap::random;
use rand::SeedableRng;
use rand::rngs::StdRng;

fn main() -> qentcap::Result<()> {
    let d = 3;
    let shift = CMatrix::from_fn(d, d, |i, j| Complex64::new(if i == (j + 1) % d { 1.0 } else { 0.0 }, 0.0));
    let clock = CMatrix::from_fn(d, d, |i, j| if i == j { Complex64::from_polar(1.0, 2.0 * PI * i as f64 / d as f64) } else { Complex64::new(0.0, 0.0) });
    let mut group = Vec::new();
    for a in 0..d {
        for b in 0..d {
            group.push(clock.pow(a as u32) * shift.pow(b as u32));
        }
    }
    let mut rng = StdRng::seed_from_u64(7);
    let sigma = random::density_matrix(&mut rng, d, d);
    let r = chicap::orbit_capacity(&sigma, &group)?;
    println!(
        "Weyl orbit of a random qutrit: capacity {:.10} = ln 3 - H(sigma) = {:.10}",
        r.capacity,
        3f64.ln() - qcore::entropy(&sigma)
    );

    for n in [10, 100, 1000, 10000] {
        let o = constructions::rotation_orbit_capacity(&constructions::step_profile, n)?;
        println!("step profile, {n:>5} harmonics: capacity {:.8}, mass beyond {:.2e}", o.capacity, o.truncated_mass);
    }
    Ok(())
}
