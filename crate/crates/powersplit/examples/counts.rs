//! Size of the search problem: candidate clutch locations, candidate modes,
//! device configurations and the design stream, for one to three planetary
//! sets.
//!
//! ```bash
//! cargo run --example counts
//! ```

use powersplit::combi::binomial;
use powersplit::modes::{build_clutch_catalog, count_mode_candidates};
use powersplit::planetary::Node;

fn main() {
    for n_pg in 1..=3 {
        let output = Node(3 * n_pg - 2);
        let catalog = build_clutch_catalog(n_pg, output);
        println!("--- {n_pg} planetary set(s) ---");
        println!("candidate clutch locations: {}", catalog.len());
        println!(
            "candidate modes (3-5 connections): {}",
            count_mode_candidates(&catalog, 3..=5)
        );
        if n_pg == 3 {
            let n_conf = powersplit::designs::configuration_count();
            println!("device configurations (4 of 9 nodes, ordered): {n_conf}");
            println!(
                "unrestricted designs (configurations x 3 permanent x 3 clutches): {}",
                powersplit::designs::count_design_space(n_conf as u64, catalog.len() as u64)
            );
            let restricted = 81u128 * 36 * binomial(35, 3);
            println!("restricted stream (fixed placement, chained permanents): {restricted}");
        }
        println!();
    }
}
