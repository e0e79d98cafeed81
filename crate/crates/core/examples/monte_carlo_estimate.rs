//! Monte Carlo estimate with a Wilson interval, checked against the exact value.

use majsim::exact::exact_consensus_probability;
use majsim::montecarlo::{estimate, ExperimentConfig, GraphSpec};
use majsim::Family;

fn main() -> majsim::Result<()> {
    let spec = GraphSpec::family(Family::Cycle, 10);
    let cfg = ExperimentConfig::new(spec.clone(), 0.4, 20_000, 1);
    let est = estimate(&cfg)?;
    let exact = exact_consensus_probability(&spec.build()?, 0.4)?.p_consensus;

    println!(
        "{}: {:.4} in [{:.4}, {:.4}] over {} trials",
        spec.id(),
        est.consensus_frequency,
        est.wilson_low,
        est.wilson_high,
        est.trials
    );
    println!("exact {exact:.4}, mean steps {:.1}, mean flips {:.2}", est.mean_absorption_steps, est.mean_flips);
    Ok(())
}
