//! The `regscan` command-line front end.
//!
//! Subcommands: `scan`, `mc-test`, `simulate`, `reproduce-sec4` and
//! `zones`. Every result document embeds the resolved configuration
//! (seed and library version included) and ends with a `metrics` object;
//! repeated runs with the same configuration and seed are byte-identical
//! apart from the wall-clock entry in `metrics`. Errors print a single
//! JSON line on stderr and exit nonzero: 1 for usage problems, 2 for
//! data problems, 3 for numeric degeneracies. `REGSCAN_THREADS` pins the
//! worker pool size; output is identical for any thread count.

mod output;
mod repro;

pub use repro::{
    reproduce, reproduce_with, write_tidy_csvs, ClusterSummary, InterceptSummary, MethodReport,
    ReproReport, ReproRun,
};

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::data::{
    load_regions, load_space_time, save_regions, simulate_scenario, synthetic_geometry, CsvSchema,
    RegionTable, ScenarioSpec, SpaceTimeTable,
};
use crate::error::{Error, Result};
use crate::inference::mc_test;
use crate::scan::{
    scan, space_time_scan, Direction, ScanOptions, SpaceTimeOptions, SpaceTimeScan,
};
use crate::stats::{Approach, ModelSpec};
use crate::zones::{
    circular_zones, load_zones, save_zones, singleton_zones, CircularConfig, Cylinder, Metric,
    ZoneSet,
};
use output::{clusters_csv, clusters_geojson, to_json, write_text, Doc, Metrics, ScanPayload};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(
    name = "regscan",
    version,
    about = "Regression-based spatial scan statistics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Scan a region table for the most likely cluster.
    Scan(ScanArgs),
    /// Monte Carlo p-value for the most likely cluster.
    #[command(name = "mc-test")]
    McTest(McArgs),
    /// Draw a synthetic dataset from a planted hot/cold scenario.
    Simulate(SimulateArgs),
    /// Run the bundled planted-cluster benchmark end to end.
    #[command(name = "reproduce-sec4")]
    ReproduceSec4(ReproArgs),
    /// Build a candidate zone family and write it to CSV.
    Zones(ZonesArgs),
}

#[derive(Debug, Args)]
struct ScanArgs {
    /// Region table CSV (columns id,x,y,outcome with optional
    /// baseline,var,cov_*; a t column switches to space-time).
    #[arg(long)]
    input: PathBuf,
    /// Statistic, e.g. poisson-pop, gauss-unknown-exp, glm-poisson-pop.
    #[arg(long)]
    model: String,
    #[command(flatten)]
    zones: ZoneArgs,
    /// Clusters kept in the ranked lists.
    #[arg(long, default_value_t = 3)]
    top: usize,
    /// Effect direction to report: both, high or low.
    #[arg(long, default_value = "both")]
    direction: String,
    /// Longest cylinder duration for space-time input.
    #[arg(long)]
    max_duration: Option<usize>,
    /// Include the full per-zone ratio table in the output.
    #[arg(long)]
    all_zones: bool,
    /// Recorded in the output for provenance.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct ZoneArgs {
    /// Zone family: circular, singleton or file.
    #[arg(long = "zones", default_value = "circular")]
    family: String,
    /// Zone membership CSV (with --zones file).
    #[arg(long)]
    zones_file: Option<PathBuf>,
    /// Largest share of total baseline a circular zone may cover.
    #[arg(long, default_value_t = 0.5)]
    max_frac: f64,
    /// Cap on the number of regions per circular zone.
    #[arg(long)]
    max_size: Option<usize>,
    /// Distance between centroids: euclidean or haversine.
    #[arg(long, default_value = "euclidean")]
    metric: String,
}

#[derive(Debug, Args)]
struct OutArgs {
    /// Output file; - writes to standard output.
    #[arg(long, default_value = "-")]
    output: PathBuf,
    /// Output format: json, csv or geojson.
    #[arg(long, default_value = "json")]
    format: String,
}

#[derive(Debug, Args)]
struct McArgs {
    #[command(flatten)]
    scan: ScanArgs,
    /// Number of Monte Carlo replicates.
    #[arg(long, default_value_t = 999)]
    replicates: usize,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Data generation mode: population or expectation. Required unless
    /// the scenario file provides one.
    #[arg(long)]
    mode: Option<String>,
    /// Scenario TOML; defaults to the bundled hot/cold scenario.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Geometry CSV; defaults to the bundled 281-region map. A custom
    /// geometry needs --scenario to name its planted zones.
    #[arg(long)]
    geometry: Option<PathBuf>,
    /// Overrides the scenario seed (bundled default 281).
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV for the simulated region table.
    #[arg(long)]
    output: PathBuf,
    /// Also write the planted zone membership to this CSV.
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReproArgs {
    /// Data generation mode: population or expectation.
    #[arg(long)]
    mode: String,
    /// Geometry CSV replacing the bundled map; requires --scenario for
    /// the planted zone membership.
    #[arg(long)]
    geometry: Option<PathBuf>,
    /// Scenario TOML naming the planted zones of a custom geometry.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long, default_value_t = 281)]
    seed: u64,
    /// Largest share of total baseline a circular zone may cover.
    #[arg(long, default_value_t = 0.5)]
    max_frac: f64,
    /// Directory for tidy CSVs (cluster maps, intercept estimates).
    #[arg(long)]
    csv_dir: Option<PathBuf>,
    /// Output file for the JSON report; - writes to standard output.
    #[arg(long, default_value = "-")]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct ZonesArgs {
    /// Region table CSV providing ids and coordinates.
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    zones: ZoneArgs,
    /// Recorded in the output for provenance.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV for the zone membership table.
    #[arg(long)]
    output: PathBuf,
}

/// Run the CLI against the process arguments and return the exit code.
pub fn run() -> i32 {
    run_from(std::env::args_os())
}

/// Entry point shared by `main` and tests: parses `args`, dispatches,
/// and returns the exit code instead of exiting.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    init_threads();
    let started = Instant::now();
    let outcome = match cli.command {
        Command::Scan(args) => cmd_scan(&args, started),
        Command::McTest(args) => cmd_mc(&args, started),
        Command::Simulate(args) => cmd_simulate(&args, started),
        Command::ReproduceSec4(args) => cmd_repro(&args, started),
        Command::Zones(args) => cmd_zones(&args, started),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            let line = serde_json::json!({ "error": e.to_string(), "exit_code": e.exit_code() });
            eprintln!("{line}");
            e.exit_code()
        }
    }
}

fn init_threads() {
    if let Ok(raw) = std::env::var("REGSCAN_THREADS") {
        if let Ok(threads) = raw.trim().parse::<usize>() {
            if threads >= 1 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global();
            }
        }
    }
}

fn parse_approach(name: &str) -> Result<Approach> {
    match name {
        "population" => Ok(Approach::Population),
        "expectation" => Ok(Approach::Expectation),
        other => Err(Error::InvalidConfig(format!(
            "unknown mode `{other}` (expected population or expectation)"
        ))),
    }
}

fn parse_direction(name: &str) -> Result<Direction> {
    match name {
        "both" => Ok(Direction::Both),
        "high" => Ok(Direction::High),
        "low" => Ok(Direction::Low),
        other => Err(Error::InvalidConfig(format!(
            "unknown direction `{other}` (expected both, high or low)"
        ))),
    }
}

fn parse_metric(name: &str) -> Result<Metric> {
    match name {
        "euclidean" => Ok(Metric::Euclidean),
        "haversine" => Ok(Metric::Haversine),
        other => Err(Error::InvalidConfig(format!(
            "unknown metric `{other}` (expected euclidean or haversine)"
        ))),
    }
}

fn display(path: &Path) -> String {
    path.display().to_string()
}

/// Configuration echo of the zone family construction.
#[derive(Debug, Serialize)]
struct ZonesEcho {
    family: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    zones_file: Option<String>,
    max_frac: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_size: Option<usize>,
    metric: String,
}

fn build_zones(table: &RegionTable, args: &ZoneArgs) -> Result<(ZoneSet, ZonesEcho)> {
    let zones = match args.family.as_str() {
        "circular" => circular_zones(
            table,
            &CircularConfig {
                max_size: args.max_size,
                max_fraction: Some(args.max_frac),
                metric: parse_metric(&args.metric)?,
            },
        )?,
        "singleton" => singleton_zones(table)?,
        "file" => {
            let path = args.zones_file.as_ref().ok_or_else(|| {
                Error::InvalidConfig("--zones file needs --zones-file".into())
            })?;
            load_zones(path, table)?
        }
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown zone family `{other}` (expected circular, singleton or file)"
            )))
        }
    };
    let echo = ZonesEcho {
        family: args.family.clone(),
        zones_file: args.zones_file.as_deref().map(display),
        max_frac: args.max_frac,
        max_size: args.max_size,
        metric: args.metric.clone(),
    };
    Ok((zones, echo))
}

enum Input {
    Spatial(RegionTable),
    SpaceTime(SpaceTimeTable),
}

/// Load `path` as spatial or space-time data depending on its `t`
/// column. Single-period space-time files count as spatial.
fn load_input(path: &Path) -> Result<Input> {
    let schema = CsvSchema::default();
    match load_space_time(path, &schema) {
        Ok(st) if st.periods() > 1 => Ok(Input::SpaceTime(st)),
        Ok(st) => Ok(Input::Spatial(st.slice(0).clone())),
        Err(Error::MissingColumn { column }) if column == schema.time => {
            Ok(Input::Spatial(load_regions(path, &schema)?))
        }
        Err(e) => Err(e),
    }
}

#[derive(Debug, Serialize)]
struct ScanConfig {
    command: &'static str,
    version: &'static str,
    input: String,
    model: String,
    zones: ZonesEcho,
    top: usize,
    direction: Direction,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_duration: Option<usize>,
    all_zones: bool,
    seed: u64,
    format: String,
}

/// Cylinder shapes of the reported space-time clusters.
#[derive(Debug, Serialize)]
struct CylinderOut {
    zone_id: usize,
    cylinder: Cylinder,
}

#[derive(Debug, Serialize)]
struct SpaceTimeResult {
    scan: ScanPayload,
    cylinders: Vec<CylinderOut>,
}

fn reported_cylinders(sts: &SpaceTimeScan, payload: &ScanPayload) -> Vec<CylinderOut> {
    let mut ids: Vec<usize> = payload
        .top
        .iter()
        .chain(payload.top_nonoverlap.iter())
        .map(|c| c.zone_id)
        .chain(payload.mlc.iter().map(|c| c.zone_id))
        .collect();
    ids.sort_unstable();
    ids.dedup();
    ids.into_iter()
        .filter_map(|zone_id| {
            sts.cylinder(zone_id)
                .map(|cylinder| CylinderOut { zone_id, cylinder })
        })
        .collect()
}

/// Render a scan-shaped payload in the requested format.
fn emit_clusters<C: Serialize, R: Serialize>(
    out: &OutArgs,
    config: &C,
    result: R,
    payload: &ScanPayload,
    table: &RegionTable,
    extra_csv: Option<(&str, String)>,
    zones: usize,
    started: Instant,
) -> Result<()> {
    let text = match out.format.as_str() {
        "json" => to_json(&Doc {
            config,
            result,
            metrics: metrics(started, Some(zones)),
        })?,
        "csv" => prefix_provenance(config, clusters_csv(payload, extra_csv)?)?,
        "geojson" => clusters_geojson(payload, table, config)?,
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown format `{other}` (expected json, csv or geojson)"
            )))
        }
    };
    write_text(&out.output, &text)
}

fn metrics(started: Instant, zones: Option<usize>) -> Metrics {
    Metrics {
        wall_ms: started.elapsed().as_millis(),
        zones,
    }
}

/// Provenance comment line for CSV exports that are not re-ingested.
fn prefix_provenance<C: Serialize>(config: &C, body: String) -> Result<String> {
    let line = serde_json::to_string(config)
        .map_err(|e| Error::Internal(format!("serialize: {e}")))?;
    Ok(format!("# config: {line}\n{body}"))
}

fn cmd_scan(args: &ScanArgs, started: Instant) -> Result<()> {
    let spec = ModelSpec::parse(&args.model)?;
    let options = ScanOptions {
        top_m: args.top,
        direction: parse_direction(&args.direction)?,
    };
    let config = |zones: ZonesEcho, max_duration: Option<usize>| ScanConfig {
        command: "scan",
        version: VERSION,
        input: display(&args.input),
        model: spec.name(),
        zones,
        top: args.top,
        direction: options.direction,
        max_duration,
        all_zones: args.all_zones,
        seed: args.seed,
        format: args.out.format.clone(),
    };
    match load_input(&args.input)? {
        Input::Spatial(table) => {
            let (zones, echo) = build_zones(&table, &args.zones)?;
            let result = scan(&table, &zones, spec, &options)?;
            let payload = ScanPayload::new(&result, &zones, &table, args.all_zones);
            let config = config(echo, None);
            emit_clusters(
                &args.out,
                &config,
                &payload,
                &payload,
                &table,
                None,
                zones.len(),
                started,
            )
        }
        Input::SpaceTime(st) => {
            let base_table = st.slice(0).clone();
            let (base, echo) = build_zones(&base_table, &args.zones)?;
            let st_options = SpaceTimeOptions {
                max_duration: args.max_duration.unwrap_or(usize::MAX),
                scan: options.clone(),
            };
            let sts = space_time_scan(&st, &base, spec, &st_options)?;
            let payload = ScanPayload::new(&sts.result, &sts.zones, &sts.table, args.all_zones);
            let cylinders = reported_cylinders(&sts, &payload);
            let config = config(echo, Some(st_options.max_duration.min(st.periods())));
            let zone_count = sts.zones.len();
            let result = SpaceTimeResult {
                scan: ScanPayload::new(&sts.result, &sts.zones, &sts.table, args.all_zones),
                cylinders,
            };
            emit_clusters(
                &args.out,
                &config,
                result,
                &payload,
                &sts.table,
                None,
                zone_count,
                started,
            )
        }
    }
}

#[derive(Debug, Serialize)]
struct McConfig {
    command: &'static str,
    version: &'static str,
    input: String,
    model: String,
    zones: ZonesEcho,
    top: usize,
    direction: Direction,
    all_zones: bool,
    replicates: usize,
    seed: u64,
    format: String,
}

#[derive(Debug, Serialize)]
struct McPayload {
    scan: ScanPayload,
    p_value: f64,
    replicates: usize,
    observed_max_llr: f64,
    replicate_max_llr: Vec<f64>,
}

fn cmd_mc(args: &McArgs, started: Instant) -> Result<()> {
    let sa = &args.scan;
    let spec = ModelSpec::parse(&sa.model)?;
    let options = ScanOptions {
        top_m: sa.top,
        direction: parse_direction(&sa.direction)?,
    };
    let table = match load_input(&sa.input)? {
        Input::Spatial(table) => table,
        Input::SpaceTime(_) => {
            return Err(Error::InvalidConfig(
                "mc-test expects spatial data; scan handles space-time input".into(),
            ))
        }
    };
    let (zones, echo) = build_zones(&table, &sa.zones)?;
    let mc = mc_test(&table, &zones, spec, &options, args.replicates, sa.seed)?;
    let observed = scan(&table, &zones, spec, &options)?;
    let payload = ScanPayload::new(&observed, &zones, &table, sa.all_zones);
    let config = McConfig {
        command: "mc-test",
        version: VERSION,
        input: display(&sa.input),
        model: spec.name(),
        zones: echo,
        top: sa.top,
        direction: options.direction,
        all_zones: sa.all_zones,
        replicates: args.replicates,
        seed: sa.seed,
        format: sa.out.format.clone(),
    };
    let p_value = mc.p_value;
    let result = McPayload {
        scan: ScanPayload::new(&observed, &zones, &table, sa.all_zones),
        p_value: mc.p_value,
        replicates: mc.replicates,
        observed_max_llr: mc.observed_max_llr,
        replicate_max_llr: mc.replicate_max_llr,
    };
    emit_clusters(
        &sa.out,
        &config,
        result,
        &payload,
        &table,
        Some(("p_value", format!("{p_value}"))),
        zones.len(),
        started,
    )
}

#[derive(Debug, Serialize)]
struct SimulateConfig {
    command: &'static str,
    version: &'static str,
    geometry: String,
    scenario_file: Option<String>,
    scenario: ScenarioSpec,
    output: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    truth: Option<String>,
}

#[derive(Debug, Serialize)]
struct SimulateReport {
    regions: usize,
    hot_size: usize,
    cold_size: usize,
    outcome_mean: f64,
}

fn cmd_simulate(args: &SimulateArgs, started: Instant) -> Result<()> {
    let bundled = synthetic_geometry();
    let geometry = match &args.geometry {
        Some(path) => load_regions(path, &CsvSchema::default())?,
        None => bundled.table.clone(),
    };
    let mut spec = match &args.scenario {
        Some(path) => ScenarioSpec::from_toml(&std::fs::read_to_string(path)?)?,
        None => {
            if args.geometry.is_some() {
                return Err(Error::InvalidConfig(
                    "a custom geometry needs --scenario to name its planted zones".into(),
                ));
            }
            ScenarioSpec {
                mode: Approach::Population,
                hot_zone: bundled.hot_ids.clone(),
                cold_zone: bundled.cold_ids.clone(),
                alpha_pop: 5.0,
                theta_hot: 5.0,
                theta_cold: -5.0,
                sigma: 0.5,
                seed: 281,
            }
        }
    };
    match (&args.mode, args.scenario.is_some()) {
        (Some(mode), _) => spec.mode = parse_approach(mode)?,
        (None, true) => {}
        (None, false) => {
            return Err(Error::InvalidConfig(
                "--mode is required without --scenario".into(),
            ))
        }
    }
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let table = simulate_scenario(&geometry, &spec)?;
    save_regions(&args.output, &table, &CsvSchema::default())?;
    if let Some(path) = &args.truth {
        write_truth(path, &spec)?;
    }
    let report = SimulateReport {
        regions: table.len(),
        hot_size: spec.hot_zone.len(),
        cold_size: spec.cold_zone.len(),
        outcome_mean: table.outcome().iter().sum::<f64>() / table.len() as f64,
    };
    let config = SimulateConfig {
        command: "simulate",
        version: VERSION,
        geometry: args.geometry.as_deref().map_or_else(|| "bundled".into(), display),
        scenario_file: args.scenario.as_deref().map(display),
        scenario: spec,
        output: display(&args.output),
        truth: args.truth.as_deref().map(display),
    };
    let text = to_json(&Doc {
        config,
        result: report,
        metrics: metrics(started, None),
    })?;
    write_text(Path::new("-"), &text)
}

fn write_truth(path: &Path, spec: &ScenarioSpec) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["zone", "region_id"])?;
    for id in &spec.hot_zone {
        w.write_record(["hot", id])?;
    }
    for id in &spec.cold_zone {
        w.write_record(["cold", id])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct ReproConfig {
    command: &'static str,
    version: &'static str,
    mode: Approach,
    geometry: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    scenario: Option<String>,
    seed: u64,
    max_frac: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    csv_dir: Option<String>,
}

fn cmd_repro(args: &ReproArgs, started: Instant) -> Result<()> {
    let mode = parse_approach(&args.mode)?;
    let run = match (&args.geometry, &args.scenario) {
        (None, None) => reproduce(mode, args.seed, args.max_frac)?,
        (Some(geometry), Some(scenario)) => {
            let table = load_regions(geometry, &CsvSchema::default())?;
            let spec = ScenarioSpec::from_toml(&std::fs::read_to_string(scenario)?)?;
            reproduce_with(
                &table,
                &spec.hot_zone,
                &spec.cold_zone,
                mode,
                args.seed,
                args.max_frac,
            )?
        }
        _ => {
            return Err(Error::InvalidConfig(
                "--geometry and --scenario must be given together".into(),
            ))
        }
    };
    if let Some(dir) = &args.csv_dir {
        write_tidy_csvs(&run, dir)?;
    }
    let config = ReproConfig {
        command: "reproduce-sec4",
        version: VERSION,
        mode,
        geometry: args.geometry.as_deref().map_or_else(|| "bundled".into(), display),
        scenario: args.scenario.as_deref().map(display),
        seed: args.seed,
        max_frac: args.max_frac,
        csv_dir: args.csv_dir.as_deref().map(display),
    };
    let zone_count = run.report.zone_count;
    let text = to_json(&Doc {
        config,
        result: run.report,
        metrics: metrics(started, Some(zone_count)),
    })?;
    write_text(&args.output, &text)
}

#[derive(Debug, Serialize)]
struct ZonesConfig {
    command: &'static str,
    version: &'static str,
    input: String,
    zones: ZonesEcho,
    seed: u64,
    output: String,
}

#[derive(Debug, Serialize)]
struct ZonesReport {
    zone_count: usize,
    universe: usize,
    largest_zone: usize,
}

fn cmd_zones(args: &ZonesArgs, started: Instant) -> Result<()> {
    let table = load_regions(&args.input, &CsvSchema::default())?;
    let (zones, echo) = build_zones(&table, &args.zones)?;
    save_zones(&args.output, &zones, &table)?;
    let report = ZonesReport {
        zone_count: zones.len(),
        universe: zones.universe(),
        largest_zone: zones.iter().map(|(_, z)| z.len()).max().unwrap_or(0),
    };
    let config = ZonesConfig {
        command: "zones",
        version: VERSION,
        input: display(&args.input),
        zones: echo,
        seed: args.seed,
        output: display(&args.output),
    };
    let zone_count = report.zone_count;
    let text = to_json(&Doc {
        config,
        result: report,
        metrics: metrics(started, Some(zone_count)),
    })?;
    write_text(Path::new("-"), &text)
}
