//! Builds one graph of each family and prints its edge list.

use majsim::{Family, Graph};

fn main() -> majsim::Result<()> {
    for family in Family::ALL {
        let g = family.build(6, 3, 42)?;
        println!("# {family} n={} m={}", g.n(), g.edge_count());
        print!("{}", g.to_edge_list());
    }

    let custom = Graph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (0, 2)])?;
    println!("# custom tree={} max_degree={}", custom.is_tree(), custom.max_degree());
    Ok(())
}
