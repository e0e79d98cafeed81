//! Runs every verification suite with small parameters and prints summaries.

use majsim::verify::{run_suite, summarize, NRange, Suite, VerifyParams};

fn main() -> majsim::Result<()> {
    for suite in [Suite::Potential, Suite::Absorption, Suite::Blocked, Suite::Bound, Suite::Reachability] {
        let mut params = VerifyParams::defaults(suite);
        params.n = NRange::new(4, 8);
        params.trials = 50;
        params.min_total_steps = 0;
        let reports = run_suite(suite, &params, 8)?;
        let summary = summarize(suite, &reports);
        println!(
            "{:<13} instances={:<3} checked={:<8} violations={}",
            suite.name(),
            summary.instances,
            summary.checked,
            summary.violations
        );
        for r in reports.iter().filter(|r| !r.passed()) {
            for v in r.violations.iter().take(3) {
                println!("  {} {}: {}", r.graph_id, v.state, v.detail);
            }
        }
    }
    Ok(())
}
