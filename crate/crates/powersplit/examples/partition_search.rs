//! A slice of the staged design sweep: enumerate + screen a stream
//! partition with checkpointing, dedup by exact signature, launch-screen
//! the survivors and rank the fastest few by composite fuel economy.
//!
//! The full 19,085,220-design stream takes a few minutes for the first two
//! stages; this example runs a 200,000-design partition in seconds.
//!
//! ```bash
//! cargo run --release --example partition_search
//! ```

use powersplit::launch::LaunchClass;
use powersplit::pipeline::{search, RunContext};

fn main() {
    let mut ctx = RunContext::default_context();
    let dir = std::env::temp_dir().join("powersplit-partition-demo");
    let _ = std::fs::remove_dir_all(&dir);
    ctx.cache_dir = dir.clone();

    let range = 3_000_000u128..3_200_000;
    println!(
        "enumerating {}..{} into {}",
        range.start,
        range.end,
        dir.display()
    );
    let manifest = search::run_enumeration(&ctx, range, 50_000, &dir).unwrap();
    println!("{} checkpointed chunks", manifest.chunks.len());

    let (unique, mut counts) = search::run_dedup(&dir).unwrap();
    let records = search::run_launch_screen(&ctx, &unique).unwrap();
    let acceptable: Vec<_> = records
        .iter()
        .filter(|r| r.class != LaunchClass::Rejected)
        .cloned()
        .collect();
    counts.launch_acceptable = acceptable.len() as u64;
    counts.launch_better = records
        .iter()
        .filter(|r| r.class == LaunchClass::Better)
        .count() as u64;

    let (ranked, quarantined) = search::run_economy(&ctx, &acceptable, Some(3)).unwrap();
    counts.economy_better = ranked.len() as u64;
    println!("{}", search::funnel_summary(&counts, &ctx.reference));
    for (i, r) in ranked.iter().enumerate() {
        println!(
            "#{} index {}: weighted {:.2} mpg (city {:.2} / highway {:.2}), 0-100 {:.2} s",
            i + 1,
            r.survivor.index,
            r.weighted_mpg,
            r.city_mpg,
            r.highway_mpg,
            r.accel_s
        );
        println!(
            "    permanent: {}",
            r.survivor
                .permanent
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        );
        println!(
            "    clutches:  {}",
            r.survivor
                .clutches
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        );
    }
    if !quarantined.is_empty() {
        println!("{} designs quarantined", quarantined.len());
    }
}
