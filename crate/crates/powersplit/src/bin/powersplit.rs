//! Thin command-line front end over the library: sizing counts, design
//! analysis, the staged search, scheduler calibration and report export.
//!
//! Exit codes: 0 success, 2 configuration error, 3 stage failure.

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};
use powersplit::launch::LaunchClass;
use powersplit::pipeline::{self, analyze, search, RunContext};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "powersplit",
    version,
    about = "Power-split hybrid design search"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration file (TOML). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Cache/checkpoint directory (overrides the config file).
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Print the clutch/mode/configuration/design space sizes.
    Counts {
        #[command(flatten)]
        common: Common,
        /// Number of planetary sets.
        #[arg(long, default_value_t = 3)]
        n_pg: usize,
    },
    /// Analyze one design (or compare two) over drive cycles.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Design file(s); with two, the first is compared against the
        /// second.
        #[arg(long, required = true, num_args = 1..=2)]
        design: Vec<PathBuf>,
        /// Cycle names (built-in: fuds, hwfet, us06) or files in cycle_dir.
        #[arg(long, default_values_t = ["fuds".to_string(), "hwfet".to_string(), "us06".to_string()])]
        cycle: Vec<String>,
        /// Export trace/usage/mode tables into this directory.
        #[arg(long)]
        export: Option<PathBuf>,
    },
    /// Run the staged design sweep over a stream partition.
    Search {
        #[command(flatten)]
        common: Common,
        /// Stream range `start..end` (default: the whole stream).
        #[arg(long)]
        range: Option<String>,
        /// Designs per checkpoint chunk.
        #[arg(long, default_value_t = 100_000)]
        chunk: u128,
        /// Stop after this stage: enumerate, dedupe, launch or economy.
        #[arg(long, default_value = "economy")]
        stage: String,
        /// Evaluate fuel economy only for the fastest N acceptable designs.
        #[arg(long)]
        top: Option<usize>,
    },
    /// Tune the scheduler weights on one design and cycle.
    Calibrate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        design: PathBuf,
        #[arg(long, default_value = "hwfet")]
        cycle: String,
        /// Terminal SOC tolerance.
        #[arg(long, default_value_t = 0.01)]
        soc_tol: f64,
        /// Minimum average seconds between mode shifts.
        #[arg(long, default_value_t = 30.0)]
        shift_interval: f64,
    },
    /// Export the report bundle for a design: mode table, gear ratios,
    /// traces and usage statistics per cycle.
    ExportReport {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        design: PathBuf,
        #[arg(long, default_values_t = ["fuds".to_string(), "hwfet".to_string()])]
        cycle: Vec<String>,
        /// Output directory.
        #[arg(long, default_value = "report")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let config_error = e
                .chain()
                .any(|cause| cause.downcast_ref::<pipeline::ConfigError>().is_some());
            if config_error {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}

fn context(common: &Common) -> Result<RunContext> {
    let mut ctx = match &common.config {
        Some(path) => RunContext::load(path)?,
        None => RunContext::default_context(),
    };
    if let Some(dir) = &common.cache_dir {
        ctx.cache_dir = dir.clone();
    }
    if let Some(n) = common.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .ok();
    }
    Ok(ctx)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Counts { common, n_pg } => {
            let _ = context(&common)?;
            print!("{}", pipeline::counts_report(n_pg));
            Ok(())
        }
        Command::Analyze {
            common,
            design,
            cycle,
            export,
        } => {
            let ctx = context(&common)?;
            let cycles: Vec<_> = cycle
                .iter()
                .map(|name| ctx.cycle(name))
                .collect::<Result<_, _>>()?;
            let mut reports = Vec::new();
            for path in &design {
                let (name, d) = ctx.design(path)?;
                let report = analyze::analyze_design(&ctx, &name, &d, &cycles)
                    .map_err(|e| anyhow!("analysis of {name} failed: {e}"))?;
                print!("{}", analyze::render_report(&report));
                println!();
                if let Some(dir) = &export {
                    std::fs::create_dir_all(dir)
                        .with_context(|| format!("creating {}", dir.display()))?;
                    std::fs::write(
                        dir.join(format!("{name}-modes.tsv")),
                        analyze::mode_report(&d),
                    )?;
                    for (c, r) in cycles.iter().zip(&report.cycles) {
                        std::fs::write(
                            dir.join(format!("{name}-{}-trace.tsv", r.cycle)),
                            analyze::solution_trace(c, r),
                        )?;
                        std::fs::write(
                            dir.join(format!("{name}-{}-usage.tsv", r.cycle)),
                            analyze::usage_table(r),
                        )?;
                    }
                }
                reports.push(report);
            }
            if reports.len() == 2 {
                print!("{}", analyze::render_comparison(&reports[0], &reports[1]));
            }
            Ok(())
        }
        Command::Search {
            common,
            range,
            chunk,
            stage,
            top,
        } => {
            let ctx = context(&common)?;
            let space =
                powersplit::designs::DesignSpace::new(ctx.base.clone(), ctx.inertias.clone())?;
            let full = 0..space.total_designs();
            let range = match range {
                None => full,
                Some(text) => {
                    let (a, b) = text
                        .split_once("..")
                        .ok_or_else(|| anyhow!("range must be start..end"))?;
                    a.trim().parse()?..b.trim().parse()?
                }
            };
            let cache_dir = ctx.cache_dir.clone();
            search::run_enumeration(&ctx, range, chunk, &cache_dir)?;
            if stage == "enumerate" {
                return Ok(());
            }
            let (unique, mut counts) = search::run_dedup(&cache_dir)?;
            if stage == "dedupe" {
                println!("{}", search::funnel_summary(&counts, &ctx.reference));
                return Ok(());
            }
            let launch_records = search::run_launch_screen(&ctx, &unique)?;
            let acceptable: Vec<_> = launch_records
                .iter()
                .filter(|r| r.class != LaunchClass::Rejected)
                .cloned()
                .collect();
            counts.launch_acceptable = acceptable.len() as u64;
            counts.launch_better = launch_records
                .iter()
                .filter(|r| r.class == LaunchClass::Better)
                .count() as u64;
            search::write_accel_histogram(
                &launch_records,
                5.0,
                10.0,
                0.1,
                &cache_dir.join("accel-histogram.tsv"),
            )?;
            if stage == "launch" {
                println!("{}", search::funnel_summary(&counts, &ctx.reference));
                return Ok(());
            }
            let (ranked, quarantined) = search::run_economy(&ctx, &acceptable, top)?;
            for (idx, message) in &quarantined {
                eprintln!("design {idx} quarantined: {message}");
            }
            search::write_ranked(&ranked, &cache_dir.join("ranked.tsv"))?;
            // Funnel bar: the benchmark's own economy and launch numbers.
            let (bench_name, bench) = ctx.benchmark_design()?;
            let bench_cycles = [ctx.cycle("fuds")?, ctx.cycle("hwfet")?];
            let bench_report = analyze::analyze_design(&ctx, &bench_name, &bench, &bench_cycles)
                .map_err(|e| anyhow!("benchmark analysis failed: {e}"))?;
            let bench_city = bench_report.cycles[0].mpg;
            let bench_highway = bench_report.cycles[1].mpg;
            counts.economy_better = ranked
                .iter()
                .filter(|r| r.city_mpg > bench_city && r.highway_mpg > bench_highway)
                .count() as u64;
            counts.better_both = ranked
                .iter()
                .filter(|r| {
                    r.city_mpg > bench_city
                        && r.highway_mpg > bench_highway
                        && r.accel_s < bench_report.accel_s
                })
                .count() as u64;
            println!(
                "benchmark {bench_name}: city {bench_city:.2} mpg, highway {bench_highway:.2} mpg, 0-100 {:.2} s",
                bench_report.accel_s
            );
            println!("{}", search::funnel_summary(&counts, &ctx.reference));
            if let Some(first) = ranked.first() {
                println!(
                    "best: index {} weighted {:.2} mpg (city {:.2}, highway {:.2}), 0-100 {:.2} s",
                    first.survivor.index,
                    first.weighted_mpg,
                    first.city_mpg,
                    first.highway_mpg,
                    first.accel_s
                );
            }
            Ok(())
        }
        Command::Calibrate {
            common,
            design,
            cycle,
            soc_tol,
            shift_interval,
        } => {
            let ctx = context(&common)?;
            let (name, d) = ctx.design(&design)?;
            let c = ctx.cycle(&cycle)?;
            let cal = analyze::calibrate_weights(&ctx, &d, &c, soc_tol, shift_interval)
                .map_err(|e| anyhow!("calibration of {name} failed: {e}"))?;
            println!("alpha = {:e}", cal.alpha);
            println!("beta = {:e}", cal.beta);
            println!(
                "achieved: {} shifts ({:.1} s apart), |soc error| = {:.4}",
                cal.shift_count, cal.shift_interval_s, cal.soc_error
            );
            Ok(())
        }
        Command::ExportReport {
            common,
            design,
            cycle,
            out,
        } => {
            let ctx = context(&common)?;
            let (name, d) = ctx.design(&design)?;
            std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            std::fs::write(
                out.join(format!("{name}-modes.tsv")),
                analyze::mode_report(&d),
            )?;
            let ratios = analyze::gear_ratios(&d);
            let mut gears = String::from("mode\tengine_output_ratio\n");
            for (i, r) in &ratios {
                gears.push_str(&format!("{i}\t{r}\n"));
            }
            std::fs::write(out.join(format!("{name}-gears.tsv")), gears)?;
            let cycles: Vec<_> = cycle
                .iter()
                .map(|c| ctx.cycle(c))
                .collect::<Result<_, _>>()?;
            let report = analyze::analyze_design(&ctx, &name, &d, &cycles)
                .map_err(|e| anyhow!("analysis of {name} failed: {e}"))?;
            std::fs::write(
                out.join(format!("{name}-summary.txt")),
                analyze::render_report(&report),
            )?;
            for (c, r) in cycles.iter().zip(&report.cycles) {
                std::fs::write(
                    out.join(format!("{name}-{}-trace.tsv", r.cycle)),
                    analyze::solution_trace(c, r),
                )?;
                std::fs::write(
                    out.join(format!("{name}-{}-usage.tsv", r.cycle)),
                    analyze::usage_table(r),
                )?;
            }
            println!("report written to {}", out.display());
            Ok(())
        }
    }
}
