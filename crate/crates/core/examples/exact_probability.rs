//! Exact consensus probability for small graphs by solving the full chain.

use majsim::exact::{exact_consensus_probability, exact_consensus_probability_with, Solver};
use majsim::theory::consensus_bound;
use majsim::Family;

fn main() -> majsim::Result<()> {
    for (family, n) in [(Family::Cycle, 4), (Family::Path, 6), (Family::Star, 8), (Family::Cycle, 12)] {
        let g = family.build(n, 0, 0)?;
        let a = exact_consensus_probability(&g, 0.5)?;
        println!(
            "{family}-{n}: P(consensus) = {:.6}  bound = {:.3}  absorbing = {} ({} frozen)",
            a.p_consensus,
            consensus_bound(0.5, g.edge_count()),
            a.n_absorbing(),
            a.n_frozen_nonconsensus(),
        );
    }

    let g = Family::Path.build(8, 0, 0)?;
    for solver in [Solver::ValueIteration, Solver::Ordered, Solver::Dense] {
        let a = exact_consensus_probability_with(&g, 0.3, solver)?;
        println!("path-8 p=0.3 {solver:?}: {:.15}", a.p_consensus);
    }
    Ok(())
}
