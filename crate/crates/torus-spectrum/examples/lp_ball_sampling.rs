//! Uniform sampling from ℓ_p balls via the generalized-Gamma direction
//! method, sanity-checked against two exact facts: every sample lands in
//! the ball, and the ball of half the radius carries (1/2)^dim of the mass.
//!
//! Run with: `cargo run --release --example lp_ball_sampling`

use torus_spectrum::geometry::DualExponent;
use torus_spectrum::rng::RandomStream;
use torus_spectrum::sampling::sample_lp_ball;

fn main() -> torus_spectrum::Result<()> {
    let samples = 200_000;
    for p in [1.5, 2.0, 4.0, f64::INFINITY] {
        let d = DualExponent::new(p)?;
        for dim in [2u32, 3, 5] {
            let mut rng = RandomStream::new(17, dim as u64);
            let mut inner = 0u64;
            for _ in 0..samples {
                let x = sample_lp_ball(dim, 1.0, &d, &mut rng);
                let norm = if p.is_infinite() {
                    x.iter().fold(0.0f64, |m, v| m.max(v.abs()))
                } else {
                    x.iter().map(|v| v.abs().powf(p)).sum::<f64>().powf(1.0 / p)
                };
                assert!(norm <= 1.0 + 1e-12);
                if norm <= 0.5 {
                    inner += 1;
                }
            }
            let frac = inner as f64 / samples as f64;
            let expect = 0.5f64.powi(dim as i32);
            println!(
                "p = {p}, dim = {dim}: half-radius mass {frac:.5} \
                 (exact {expect:.5})"
            );
        }
    }
    Ok(())
}
