//! Sweeps p for a random graph and writes the bound comparison as CSV.

use majsim::montecarlo::{default_threads, sweep, write_sweep_csv, GraphSpec};

fn main() -> majsim::Result<()> {
    let spec = GraphSpec::random(12, 4, 3);
    let grid: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
    let points = sweep(&spec, &grid, 2_000, 11, default_threads())?;
    write_sweep_csv(std::io::stdout().lock(), &points).map_err(|e| majsim::Error::Config(e.to_string()))?;
    let unsatisfied = points.iter().filter(|pt| !pt.report.satisfied).count();
    eprintln!("{unsatisfied} grid points below the bound");
    Ok(())
}
