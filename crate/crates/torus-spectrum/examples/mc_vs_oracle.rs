//! Cross-check the Monte Carlo integrator against the cosine family's
//! closed-form oracles: derivative q-norms, subtorus means, and the grid
//! bracket of the oscillation.
//!
//! Run with: `cargo run --release --example mc_vs_oracle`

use torus_spectrum::function::{CosineSeries, TorusFunction};
use torus_spectrum::geometry::{DualExponent, SubtorusSpec};
use torus_spectrum::rng::RandomStream;
use torus_spectrum::sampling::{grid_oracle_osc, mc_integral, McOptions};

fn main() -> torus_spectrum::Result<()> {
    let d = DualExponent::new(2.0)?;
    let q = d.q();
    let f = CosineSeries::new(vec![0.1, 0.05]);
    let full = SubtorusSpec::full_torus(2);
    let opts = McOptions {
        samples: 200_000,
        ..Default::default()
    };
    let rng = RandomStream::new(5, 0);

    for i in 1..=2 {
        let exact = f.exact_partial_qnorm(i, &d).expect("cosine oracle");
        let est = mc_integral(
            |x| f.partial(i, x).abs().powf(q),
            &full,
            2,
            &opts,
            &rng.substream(i as u64),
        )?;
        println!(
            "∫|∂f/∂x_{i}|^q: exact {exact:.8}, MC {:.8} ± {:.8} ({:.2}σ off)",
            est.mean,
            est.stderr,
            est.sigmas_from(exact)
        );
    }

    let exact_osc = f.exact_osc_on(&full).expect("cosine oracle");
    let (lower, upper) = grid_oracle_osc(&f, &[512, 512], &d)?;
    println!("oscillation: exact {exact_osc:.8}, grid bracket [{lower:.8}, {upper:.8}]");
    assert!(lower <= exact_osc && exact_osc <= upper);
    Ok(())
}
