//! Runs one trajectory and prints the potential after every step.

use majsim::dynamics::{consensus_floor, run_to_absorption, RunOptions};
use majsim::stream::trial_rng;
use majsim::{Graph, OpinionState};

fn main() -> majsim::Result<()> {
    let g = Graph::star(7)?;
    let x: OpinionState = "+-----+".parse()?;
    let mut rng = trial_rng(7, 0);
    let rec = run_to_absorption(&g, &x, &mut rng, RunOptions::for_graph(&g).traced())?;

    println!("{} -> {} after {} steps, {} flips", rec.initial, rec.final_state, rec.steps_to_absorption, rec.flips);
    println!("consensus floor {}", consensus_floor(&g));
    let trace = rec.z_trace.unwrap_or_default();
    let mut last = None;
    for (t, z) in trace.iter().enumerate() {
        if last != Some(*z) {
            println!("step {t:>4}  Z = {z}");
            last = Some(*z);
        }
    }
    Ok(())
}
