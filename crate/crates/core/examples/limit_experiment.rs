//! The limit experiment: OU paths, the invariant log-likelihood ratio, its
//! martingale property and the known-`c` power envelope.

use rankpred::limit::{log_lr, power_envelope_known_c, simulate_many, LimitCov, LimitSimulator};
use rankpred::numeric::mean;
use rankpred::reference::{pseudo_info, ReferenceScore};
use rankpred::rng::SeedStream;

fn main() -> rankpred::Result<()> {
    let rho = -0.5;
    let cov = LimitCov::gaussian(rho)?;
    let j = pseudo_info(&ReferenceScore::gaussian(rho)?);
    let sim = LimitSimulator::new(cov, 500)?;

    let null = simulate_many(&sim, 0.0, 0.0, 20_000, SeedStream::new(1));
    for (b, c) in [(1.0, 0.0), (0.0, -5.0), (2.0, -10.0)] {
        let m = mean(&null.iter().map(|s| log_lr(b, c, s, &j).exp()).collect::<Vec<_>>());
        println!("E[exp L({b}, {c})] under the null = {m:.3}");
    }

    for c in [-1.0, -20.0, -200.0] {
        let d = simulate_many(&sim, 0.0, c, 5_000, SeedStream::new(2));
        let m = mean(&d.iter().map(|s| -2.0 * c * s.s4).collect::<Vec<_>>());
        println!("c = {c}: mean of -2c ∫W² = {m:.3}");
    }

    let bs = [0.0, 2.0, 4.0, 8.0, 12.0, 16.0];
    let env = power_envelope_known_c(&bs, -10.0, &cov, 0.05, 10_000, 500, 3)?;
    println!("known-c envelope at c = -10:");
    for (b, p) in bs.iter().zip(env) {
        println!("  b = {b:>4}: {p:.3}");
    }
    Ok(())
}
