#![allow(dead_code)]

use majsim::montecarlo::GraphSpec;
use majsim::{Family, Graph};

/// `(n, extra_edges, seed)` of the ten random battery graphs.
pub const RANDOM_BATTERY: [(usize, usize, u64); 10] = [
    (5, 0, 1),
    (5, 2, 2),
    (6, 1, 3),
    (6, 4, 4),
    (7, 0, 5),
    (7, 3, 6),
    (8, 1, 7),
    (8, 5, 8),
    (8, 8, 9),
    (6, 6, 10),
];

pub fn named_battery() -> Vec<GraphSpec> {
    vec![
        GraphSpec::family(Family::Path, 4),
        GraphSpec::family(Family::Path, 6),
        GraphSpec::family(Family::Cycle, 4),
        GraphSpec::family(Family::Cycle, 5),
        GraphSpec::family(Family::Cycle, 6),
        GraphSpec::family(Family::Star, 6),
    ]
}

pub fn random_battery() -> Vec<GraphSpec> {
    RANDOM_BATTERY
        .iter()
        .map(|&(n, extra, seed)| GraphSpec::random(n, extra, seed))
        .collect()
}

/// Named graphs followed by the random ones.
pub fn battery() -> Vec<(GraphSpec, Graph)> {
    named_battery()
        .into_iter()
        .chain(random_battery())
        .map(|spec| {
            let g = spec.build().unwrap();
            (spec, g)
        })
        .collect()
}

/// Prints one line per acceptance criterion.
/// Writes to the raw stderr handle so the line survives test output capture.
pub fn report(id: u32, title: &str, passed: bool, detail: &str) {
    use std::io::Write;
    let tag = if passed { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr().lock(), "[{tag}] criterion {id:>2}: {title} -- {detail}");
}
