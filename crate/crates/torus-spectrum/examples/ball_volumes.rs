//! Unit ℓ_p-ball volumes and the derived oscillation-bound weights and
//! block sizes, printed for a few exponents.
//!
//! Run with: `cargo run --example ball_volumes`

use torus_spectrum::constants::{block_size, lp_ball_volume, morrey_weight};
use torus_spectrum::geometry::DualExponent;

fn main() -> torus_spectrum::Result<()> {
    for p in [1.5, 2.0, 4.0, f64::INFINITY] {
        let d = DualExponent::new(p)?;
        println!("p = {p}, dual exponent q = {}", d.q());
        for n in 0..=6 {
            let v = lp_ball_volume(n, &d);
            println!("  volume of the {n}-dimensional unit ball: {:.12}", v.value());
        }
    }

    // the weights grow super-exponentially; log-space keeps them exact
    let d = DualExponent::new(2.0)?;
    let eps = 0.25;
    println!("\nweights and block sizes at eps = {eps}, p = 2:");
    for i in 1..=6 {
        let w = morrey_weight(i, eps, &d)?;
        let b = block_size(i, eps, &d)?;
        println!(
            "  index {i}: weight ~ 10^{:.2}, block size {}",
            w.log10_abs(),
            serde_json::to_string(&b).unwrap()
        );
    }
    Ok(())
}
