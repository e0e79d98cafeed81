//! Finds blocked paths, confirms they never move, and lists frozen states
//! that have none.

use majsim::exact::{can_reach_consensus, consensus_reachable, StateIndex};
use majsim::stream::trial_rng;
use majsim::theory::{find_blocked_path, verify_frozen};
use majsim::{Family, OpinionState};

fn main() -> majsim::Result<()> {
    let g = Family::Cycle.build(9, 0, 0)?;
    let x: OpinionState = "++--+-+-+".parse()?;
    if let Some(bp) = find_blocked_path(&g, &x) {
        let frozen = verify_frozen(&g, &x, &bp, &mut trial_rng(5, 0), 100_000);
        println!("{x}: blocked at {:?}, frozen = {frozen}", bp.vertices);
        println!("consensus reachable: {}", can_reach_consensus(&g, StateIndex::from_state(&x))?);
    }

    let g = Family::Path.build(7, 0, 0)?;
    let reach = consensus_reachable(&g)?;
    for (code, &r) in reach.iter().enumerate() {
        let x = StateIndex(code as u32).to_state(g.n());
        if !r && find_blocked_path(&g, &x).is_none() {
            println!("path-7 {x}: no blocked path, consensus unreachable");
        }
    }
    Ok(())
}
