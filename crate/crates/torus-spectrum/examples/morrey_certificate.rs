//! Certify that a small-amplitude cosine function oscillates less than
//! 8ε on a finite torus, then show the refusal path: a function whose
//! weighted derivative integral exceeds the threshold is reported
//! "hypothesis failed", never treated as a counterexample.
//!
//! Run with: `cargo run --example morrey_certificate`

use torus_spectrum::function::CosineSeries;
use torus_spectrum::geometry::DualExponent;
use torus_spectrum::morrey::{check_morrey, CheckOptions, MorreyMode};
use torus_spectrum::rng::RandomStream;

fn main() -> torus_spectrum::Result<()> {
    let d = DualExponent::new(2.0)?;
    let rng = RandomStream::new(7, 0);
    let opts = CheckOptions::default();

    // amplitudes shrink fast enough to beat the rapidly growing weights,
    // so the weighted integral stays below 1
    let gentle = CosineSeries::new(vec![0.01, 0.002, 0.0003]);
    let cert = check_morrey(&gentle, 3, 0.25, &d, MorreyMode::FiniteTorus, &opts, &rng)?;
    println!(
        "gentle function: hypothesis value {:.6}, verdict {:?}",
        cert.hypothesis_value.value(),
        cert.verdict
    );
    println!(
        "  measured oscillation in [{:.6}, {:.6}], bound {}",
        cert.measured_osc.0, cert.measured_osc.1, cert.osc_bound
    );

    // still 1-Lipschitz, but at this small eps the weights overwhelm it
    let loud = CosineSeries::new(vec![0.15]);
    let cert = check_morrey(&loud, 1, 0.1, &d, MorreyMode::FiniteTorus, &opts, &rng)?;
    println!(
        "loud function: hypothesis value {:.3}, verdict {:?} (no oscillation claim)",
        cert.hypothesis_value.value(),
        cert.verdict
    );
    Ok(())
}
