//! The staged design sweep: partitioned enumeration and inferior screening
//! with per-range checkpoint files, exact dedup by mode-set signature,
//! launch screening with memoized envelopes, and fuel-economy ranking.
//!
//! Every result file is written deterministically (sorted records, fixed
//! formatting), so reruns and different worker counts are byte-identical.

use super::config::RunContext;
use crate::designs::{Design, DesignOutcome, DesignSpace, Signature};
use crate::dp::{self};
use crate::launch::{self, EnvelopeCache, LaunchClass};
use crate::modes::{DerivedDynamics, DynamicsCache};
use crate::pears::ModeKinematics;
use crate::planetary::Connection;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(
        "manifest drift: cache {found:#034x} vs config {expected:#034x}; use a fresh cache dir"
    )]
    ManifestDrift { found: u128, expected: u128 },
    #[error("bad range {0}..{1}")]
    BadRange(u128, u128),
    #[error(transparent)]
    Design(#[from] crate::designs::DesignError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> SearchError + '_ {
    move |source| SearchError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Checkpoint manifest: completed ranges and their file digests.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_digest: String,
    pub chunks: BTreeMap<String, ChunkRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChunkRecord {
    pub start: u128,
    pub end: u128,
    pub file: String,
    pub digest: String,
    pub enumerated: u64,
    pub screened_in: u64,
}

impl RunManifest {
    pub fn path(cache_dir: &Path) -> PathBuf {
        cache_dir.join("manifest.json")
    }

    pub fn load_or_new(cache_dir: &Path, config_digest: u128) -> Result<Self, SearchError> {
        let path = Self::path(cache_dir);
        if path.is_file() {
            let text = std::fs::read_to_string(&path).map_err(io_err(&path))?;
            let manifest: RunManifest =
                serde_json::from_str(&text).map_err(|e| SearchError::Io {
                    path: path.display().to_string(),
                    source: std::io::Error::new(std::io::ErrorKind::InvalidData, e),
                })?;
            let found = u128::from_str_radix(manifest.config_digest.trim_start_matches("0x"), 16)
                .unwrap_or(0);
            if found != config_digest {
                return Err(SearchError::ManifestDrift {
                    found,
                    expected: config_digest,
                });
            }
            Ok(manifest)
        } else {
            Ok(Self {
                config_digest: format!("{config_digest:#034x}"),
                chunks: BTreeMap::new(),
            })
        }
    }

    pub fn save(&self, cache_dir: &Path) -> Result<(), SearchError> {
        let path = Self::path(cache_dir);
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(&path, text).map_err(io_err(&path))
    }
}

/// One screened-in design, as recorded in chunk files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SurvivorRecord {
    pub index: u128,
    pub signature: Signature,
    pub permanent: [Connection; 3],
    pub clutches: [Connection; 3],
    pub mode_types: Vec<u8>,
}

impl SurvivorRecord {
    fn to_line(&self) -> String {
        let perms: Vec<String> = self.permanent.iter().map(|c| c.to_string()).collect();
        let clutches: Vec<String> = self.clutches.iter().map(|c| c.to_string()).collect();
        let types: Vec<String> = self.mode_types.iter().map(|t| t.to_string()).collect();
        format!(
            "{}\t{}\t{}\t{}\t{}",
            self.index,
            self.signature.to_hex(),
            perms.join(","),
            clutches.join(","),
            types.join(",")
        )
    }

    fn from_line(line: &str) -> Option<Self> {
        let mut f = line.split('\t');
        let index: u128 = f.next()?.parse().ok()?;
        let signature = parse_signature(f.next()?)?;
        let perms: Vec<Connection> = f
            .next()?
            .split(',')
            .map(Connection::parse)
            .collect::<Result<_, _>>()
            .ok()?;
        let clutches: Vec<Connection> = f
            .next()?
            .split(',')
            .map(Connection::parse)
            .collect::<Result<_, _>>()
            .ok()?;
        let mode_types: Vec<u8> = f
            .next()?
            .split(',')
            .map(|t| t.parse())
            .collect::<Result<_, _>>()
            .ok()?;
        Some(Self {
            index,
            signature,
            permanent: [perms[0], perms[1], perms[2]],
            clutches: [clutches[0], clutches[1], clutches[2]],
            mode_types,
        })
    }
}

fn parse_signature(hex: &str) -> Option<Signature> {
    let ids: Vec<u128> = hex
        .split('+')
        .map(|h| u128::from_str_radix(h, 16))
        .collect::<Result<_, _>>()
        .ok()?;
    Some(Signature::from_ids(ids))
}

/// Funnel tallies accumulated across stages.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct FunnelCounts {
    pub enumerated: u64,
    pub screened_in: u64,
    pub unique: u64,
    pub launch_acceptable: u64,
    pub launch_better: u64,
    pub economy_better: u64,
    pub better_both: u64,
}

/// Runs the enumerate + inferior-screen stage over `range`, split into
/// `chunk` sized pieces processed in parallel. Completed chunks found in
/// the manifest are skipped, making reruns no-ops.
pub fn run_enumeration(
    ctx: &RunContext,
    range: std::ops::Range<u128>,
    chunk: u128,
    cache_dir: &Path,
) -> Result<RunManifest, SearchError> {
    let space = DesignSpace::new(ctx.base.clone(), ctx.inertias.clone())?;
    if range.start > range.end || range.end > space.total_designs() || chunk == 0 {
        return Err(SearchError::BadRange(range.start, range.end));
    }
    // An empty range is a no-op: nothing enumerated, manifest untouched.
    if range.start == range.end {
        return RunManifest::load_or_new(cache_dir, ctx.digest);
    }
    std::fs::create_dir_all(cache_dir).map_err(io_err(cache_dir))?;
    let mut manifest = RunManifest::load_or_new(cache_dir, ctx.digest)?;
    let mut pending: Vec<(u128, u128)> = Vec::new();
    let mut at = range.start;
    while at < range.end {
        let end = (at + chunk).min(range.end);
        let key = chunk_key(at, end);
        if !manifest.chunks.contains_key(&key) {
            pending.push((at, end));
        }
        at = end;
    }
    let cache = DynamicsCache::new();
    let results: Vec<Result<ChunkRecord, SearchError>> = {
        use rayon::prelude::*;
        pending
            .par_iter()
            .map(|&(start, end)| run_chunk(&space, &cache, start, end, cache_dir))
            .collect()
    };
    for result in results {
        let record = result?;
        manifest
            .chunks
            .insert(chunk_key(record.start, record.end), record);
    }
    manifest.save(cache_dir)?;
    Ok(manifest)
}

fn chunk_key(start: u128, end: u128) -> String {
    format!("{start:012}-{end:012}")
}

fn run_chunk(
    space: &DesignSpace,
    cache: &DynamicsCache,
    start: u128,
    end: u128,
    cache_dir: &Path,
) -> Result<ChunkRecord, SearchError> {
    let mut lines: Vec<String> = Vec::new();
    let mut enumerated = 0u64;
    let mut screened_in = 0u64;
    let per = space.triples_per_skeleton();
    crate::designs::evaluate_stream_range(space, cache, start..end, |idx, outcome| {
        enumerated += 1;
        if outcome.keeps() {
            screened_in += 1;
            let spec = spec_of(space, idx, per, outcome);
            lines.push(spec.to_line());
        }
    });
    let file = format!("chunk-{}.tsv", chunk_key(start, end));
    let path = cache_dir.join(&file);
    let mut text = String::with_capacity(lines.len() * 80);
    for line in &lines {
        text.push_str(line);
        text.push('\n');
    }
    let mut out = std::fs::File::create(&path).map_err(io_err(&path))?;
    out.write_all(text.as_bytes()).map_err(io_err(&path))?;
    Ok(ChunkRecord {
        start,
        end,
        file,
        digest: format!("{:#034x}", crate::combi::fnv128(text.as_bytes())),
        enumerated,
        screened_in,
    })
}

fn spec_of(space: &DesignSpace, idx: u128, per: u128, outcome: &DesignOutcome) -> SurvivorRecord {
    let skeleton = space.skeleton((idx / per) as usize);
    let triple = crate::combi::unrank_combination(skeleton.remaining.len() as u64, 3, idx % per);
    let mode_types = outcome
        .modes
        .iter()
        .filter_map(|(_, d)| match &**d {
            DerivedDynamics::Feasible { mode_type, .. } => Some(mode_type.code()),
            DerivedDynamics::Rejected(_) => None,
        })
        .collect();
    SurvivorRecord {
        index: idx,
        signature: outcome.signature,
        permanent: skeleton.permanent,
        clutches: [
            skeleton.remaining[triple[0]],
            skeleton.remaining[triple[1]],
            skeleton.remaining[triple[2]],
        ],
        mode_types,
    }
}

/// Reduces all completed chunks to the unique-design file: one line per
/// distinct signature, keeping the lexicographically smallest clutch set
/// (ties: smallest permanent set, then stream index).
pub fn run_dedup(cache_dir: &Path) -> Result<(Vec<SurvivorRecord>, FunnelCounts), SearchError> {
    let manifest_path = RunManifest::path(cache_dir);
    let text = std::fs::read_to_string(&manifest_path).map_err(io_err(&manifest_path))?;
    let manifest: RunManifest = serde_json::from_str(&text).map_err(|e| SearchError::Io {
        path: manifest_path.display().to_string(),
        source: std::io::Error::new(std::io::ErrorKind::InvalidData, e),
    })?;
    let mut counts = FunnelCounts::default();
    let mut best: BTreeMap<Signature, SurvivorRecord> = BTreeMap::new();
    for record in manifest.chunks.values() {
        counts.enumerated += record.enumerated;
        counts.screened_in += record.screened_in;
        let path = cache_dir.join(&record.file);
        let text = std::fs::read_to_string(&path).map_err(io_err(&path))?;
        for line in text.lines() {
            let Some(survivor) = SurvivorRecord::from_line(line) else {
                continue;
            };
            match best.get_mut(&survivor.signature) {
                None => {
                    best.insert(survivor.signature, survivor);
                }
                Some(kept) => {
                    let newer = (survivor.clutches, survivor.permanent, survivor.index);
                    let old = (kept.clutches, kept.permanent, kept.index);
                    if newer < old {
                        *kept = survivor;
                    }
                }
            }
        }
    }
    let unique: Vec<SurvivorRecord> = best.into_values().collect();
    counts.unique = unique.len() as u64;
    let path = cache_dir.join("unique.tsv");
    let mut text = String::new();
    for record in &unique {
        text.push_str(&record.to_line());
        text.push('\n');
    }
    std::fs::write(&path, text).map_err(io_err(&path))?;
    Ok((unique, counts))
}

/// Launch-screen results for one surviving design.
#[derive(Debug, Clone)]
pub struct LaunchRecord {
    pub survivor: SurvivorRecord,
    pub accel_s: f64,
    pub class: LaunchClass,
}

/// Evaluates 0-100 km/h for every unique design, memoizing per-mode
/// envelopes across designs.
pub fn run_launch_screen(
    ctx: &RunContext,
    unique: &[SurvivorRecord],
) -> Result<Vec<LaunchRecord>, SearchError> {
    let space = DesignSpace::new(ctx.base.clone(), ctx.inertias.clone())?;
    let cache = EnvelopeCache::new();
    use rayon::prelude::*;
    let mut out: Vec<LaunchRecord> = unique
        .par_iter()
        .map(|record| {
            let accel_s = match hydrate(&space, record) {
                Ok(design) => match ModeKinematics::from_design(&design) {
                    Ok(kins) => {
                        let env = launch::design_envelope(
                            &design,
                            &kins,
                            &ctx.plant,
                            &ctx.launch,
                            &cache,
                        );
                        launch::accel_time(&env, &ctx.plant, &ctx.launch)
                    }
                    Err(_) => f64::INFINITY,
                },
                Err(_) => f64::INFINITY,
            };
            LaunchRecord {
                survivor: record.clone(),
                accel_s,
                class: launch::classify_launch(accel_s, &ctx.launch),
            }
        })
        .collect();
    out.sort_by(|a, b| {
        a.accel_s
            .partial_cmp(&b.accel_s)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.survivor.index.cmp(&b.survivor.index))
    });
    Ok(out)
}

fn hydrate(space: &DesignSpace, record: &SurvivorRecord) -> Result<Design, SearchError> {
    let mut config = space.base.clone();
    config.permanent = record.permanent.to_vec();
    Ok(Design::from_parts(
        config,
        record.clutches.to_vec(),
        &space.inertias,
    )?)
}

/// Writes the accel-time histogram (bin edges + counts).
pub fn write_accel_histogram(
    records: &[LaunchRecord],
    lo_s: f64,
    hi_s: f64,
    bin_s: f64,
    path: &Path,
) -> Result<(), SearchError> {
    let nbins = ((hi_s - lo_s) / bin_s).round() as usize;
    let mut counts = vec![0u64; nbins];
    for r in records {
        if r.accel_s.is_finite() && r.accel_s >= lo_s && r.accel_s < hi_s {
            counts[((r.accel_s - lo_s) / bin_s) as usize] += 1;
        }
    }
    let mut text = String::from("bin_lo_s\tbin_hi_s\tcount\n");
    for (i, count) in counts.iter().enumerate() {
        let _ = writeln!(
            text,
            "{:.2}\t{:.2}\t{}",
            lo_s + i as f64 * bin_s,
            lo_s + (i + 1) as f64 * bin_s,
            count
        );
    }
    std::fs::write(path, text).map_err(io_err(path))
}

/// Economy evaluation of one launch-acceptable design.
#[derive(Debug, Clone)]
pub struct EconomyRecord {
    pub survivor: SurvivorRecord,
    pub accel_s: f64,
    pub city_mpg: f64,
    pub highway_mpg: f64,
    pub weighted_mpg: f64,
}

/// Runs city+highway scheduling for the launch-acceptable designs and ranks
/// by composite fuel economy (ties: accel time, then stream index). Designs
/// whose schedule fails are quarantined with a diagnostic, never fatal.
pub fn run_economy(
    ctx: &RunContext,
    acceptable: &[LaunchRecord],
    top: Option<usize>,
) -> Result<(Vec<EconomyRecord>, Vec<(u128, String)>), SearchError> {
    let space = DesignSpace::new(ctx.base.clone(), ctx.inertias.clone())?;
    let city = ctx.cycle("fuds").map_err(|e| SearchError::Io {
        path: "fuds".into(),
        source: std::io::Error::new(std::io::ErrorKind::InvalidData, e),
    })?;
    let highway = ctx.cycle("hwfet").map_err(|e| SearchError::Io {
        path: "hwfet".into(),
        source: std::io::Error::new(std::io::ErrorKind::InvalidData, e),
    })?;
    let todo = match top {
        Some(n) => &acceptable[..acceptable.len().min(n)],
        None => acceptable,
    };
    use rayon::prelude::*;
    let evaluated: Vec<Result<EconomyRecord, (u128, String)>> = todo
        .par_iter()
        .map(|record| {
            let evaluate = || -> Result<EconomyRecord, String> {
                let design = hydrate(&space, &record.survivor).map_err(|e| e.to_string())?;
                let kins = ModeKinematics::from_design(&design).map_err(|e| e.to_string())?;
                let mut mpg = [0.0; 2];
                for (slot, cycle) in [&city, &highway].iter().enumerate() {
                    let table = super::analyze::table_for_cached(ctx, &design, &kins, cycle);
                    let sol = dp::solve(&table, cycle, &ctx.dp, None)
                        .map_err(|e| format!("{}: {e}", cycle.name))?;
                    mpg[slot] = dp::fuel_economy_mpg(sol.total_fuel_g, cycle.distance_m());
                }
                Ok(EconomyRecord {
                    survivor: record.survivor.clone(),
                    accel_s: record.accel_s,
                    city_mpg: mpg[0],
                    highway_mpg: mpg[1],
                    weighted_mpg: dp::weighted_fuel_economy(mpg[0], mpg[1]),
                })
            };
            evaluate().map_err(|msg| (record.survivor.index, msg))
        })
        .collect();
    let mut ranked = Vec::new();
    let mut quarantined = Vec::new();
    for item in evaluated {
        match item {
            Ok(r) => ranked.push(r),
            Err(q) => quarantined.push(q),
        }
    }
    ranked.sort_by(|a, b| {
        b.weighted_mpg
            .partial_cmp(&a.weighted_mpg)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(
                a.accel_s
                    .partial_cmp(&b.accel_s)
                    .unwrap_or(std::cmp::Ordering::Equal),
            )
            .then(a.survivor.index.cmp(&b.survivor.index))
    });
    quarantined.sort_by_key(|(idx, _)| *idx);
    Ok((ranked, quarantined))
}

/// Writes the ranked economy table.
pub fn write_ranked(records: &[EconomyRecord], path: &Path) -> Result<(), SearchError> {
    let mut text = String::from(
        "rank\tindex\tweighted_mpg\tcity_mpg\thighway_mpg\taccel_s\tpermanent\tclutches\n",
    );
    for (rank, r) in records.iter().enumerate() {
        let perms: Vec<String> = r.survivor.permanent.iter().map(|c| c.to_string()).collect();
        let clutches: Vec<String> = r.survivor.clutches.iter().map(|c| c.to_string()).collect();
        let _ = writeln!(
            text,
            "{}\t{}\t{:.3}\t{:.3}\t{:.3}\t{:.3}\t{}\t{}",
            rank + 1,
            r.survivor.index,
            r.weighted_mpg,
            r.city_mpg,
            r.highway_mpg,
            r.accel_s,
            perms.join(","),
            clutches.join(",")
        );
    }
    std::fs::write(path, text).map_err(io_err(path))
}

/// Formats the funnel summary with the published reference counts
/// alongside.
pub fn funnel_summary(counts: &FunnelCounts, reference: &super::config::ReferenceCounts) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "stage                    this run      reference");
    let _ = writeln!(
        s,
        "enumerated           {:>12}              -",
        counts.enumerated
    );
    let _ = writeln!(
        s,
        "screened in          {:>12}              -",
        counts.screened_in
    );
    let _ = writeln!(
        s,
        "unique designs       {:>12}   {:>12}",
        counts.unique, reference.unique_designs
    );
    let _ = writeln!(
        s,
        "launch acceptable    {:>12}   {:>12}",
        counts.launch_acceptable, reference.launch_acceptable
    );
    let _ = writeln!(
        s,
        "  of which better    {:>12}              -",
        counts.launch_better
    );
    let _ = writeln!(
        s,
        "better economy       {:>12}   {:>12}",
        counts.economy_better, reference.better_economy
    );
    let _ = writeln!(
        s,
        "better on both       {:>12}   {:>12}",
        counts.better_both, reference.better_both
    );
    s
}
