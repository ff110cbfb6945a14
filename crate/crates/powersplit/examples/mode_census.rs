//! Enumerates candidate modes of the shipped placement, dedups matrices
//! exactly, and tallies the fourteen classes: raw derivations, distinct
//! dynamics, and forward-capable distinct dynamics.
//!
//! The full 584,193-subset census takes a few minutes; pass a connection
//! budget to restrict it (`-- 3` enumerates only 3-connection subsets).
//!
//! ```bash
//! cargo run --release --example mode_census            # sizes 3..=5
//! cargo run --release --example mode_census -- 3       # size 3 only
//! ```

use powersplit::combi::Combinations;
use powersplit::designs::DesignSpace;
use powersplit::modes::{
    build_clutch_catalog, DerivedDynamics, DynamicsCache, ModeClassCounts, ModeType,
};
use powersplit::pipeline::RunContext;
use rayon::prelude::*;
use std::collections::HashSet;
use std::sync::Arc;

fn main() {
    let only: Option<usize> = std::env::args().nth(1).and_then(|s| s.parse().ok());
    let sizes: Vec<usize> = match only {
        Some(k) => vec![k],
        None => vec![3, 4, 5],
    };
    let ctx = RunContext::default_context();
    let space = DesignSpace::new(ctx.base.clone(), ctx.inertias.clone()).unwrap();
    let model = Arc::new(space.system_model());
    let catalog = build_clutch_catalog(3, ctx.base.placement.output);
    let cache = DynamicsCache::new();

    let mut counts = ModeClassCounts::default();
    let mut seen: Vec<HashSet<u128>> = vec![HashSet::new(); 14];
    let mut seen_forward: Vec<HashSet<u128>> = vec![HashSet::new(); 14];
    let mut infeasible = 0u64;
    for &k in &sizes {
        let subsets: Vec<Vec<usize>> = Combinations::new(catalog.len(), k).collect();
        let outcomes: Vec<Arc<DerivedDynamics>> = subsets
            .par_iter()
            .map(|subset| {
                let connections: Vec<_> = subset.iter().map(|&i| catalog.locations[i]).collect();
                cache.derive(&model, &connections)
            })
            .collect();
        for outcome in outcomes {
            match &*outcome {
                DerivedDynamics::Feasible {
                    mode_type,
                    forward,
                    id,
                    ..
                } => {
                    let slot = (mode_type.code() - 1) as usize;
                    counts.original[slot] += 1;
                    if seen[slot].insert(*id) {
                        counts.unique[slot] += 1;
                    }
                    if *forward && seen_forward[slot].insert(*id) {
                        counts.forward[slot] += 1;
                    }
                }
                DerivedDynamics::Rejected(_) => infeasible += 1,
            }
        }
    }

    println!(
        "{:<42} {:>10} {:>8} {:>8}",
        "class", "derived", "unique", "forward"
    );
    for t in ModeType::ALL {
        let i = (t.code() - 1) as usize;
        println!(
            "{:<42} {:>10} {:>8} {:>8}",
            t.to_string(),
            counts.original[i],
            counts.unique[i],
            counts.forward[i]
        );
    }
    println!(
        "{:<42} {:>10} {:>8} {:>8}",
        "total",
        counts.total_original(),
        counts.total_unique(),
        counts.total_forward()
    );
    println!("infeasible / degenerate subsets: {infeasible}");
    assert!(counts.check_invariants());
}
