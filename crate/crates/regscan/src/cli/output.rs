//! Output documents for the command-line front end.
//!
//! Every document carries the resolved configuration (seed and library
//! version included) next to the result. Wall-clock timing lives in a
//! separate trailing `metrics` object, so two runs with the same
//! configuration and seed produce byte-identical output apart from that
//! one field.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::data::RegionTable;
use crate::error::Result;
use crate::scan::{ScanResult, ZoneRecord};
use crate::zones::ZoneSet;

/// Full output document: configuration echo, result, then runtime
/// metrics last. Field order is fixed by this struct.
#[derive(Debug, Serialize)]
pub struct Doc<C: Serialize, R: Serialize> {
    pub config: C,
    pub result: R,
    pub metrics: Metrics,
}

#[derive(Debug, Serialize)]
pub struct Metrics {
    /// Wall-clock duration in milliseconds; the only field expected to
    /// differ between identical runs.
    pub wall_ms: u128,
    /// Candidate zones involved, when the command has any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zones: Option<usize>,
}

pub fn to_json<S: Serialize>(doc: &S) -> Result<String> {
    let mut text = serde_json::to_string_pretty(doc)
        .map_err(|e| crate::error::Error::Internal(format!("serialize: {e}")))?;
    text.push('\n');
    Ok(text)
}

/// Write `text` to `path`, with `-` meaning standard output.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if path.as_os_str() == "-" {
        let mut out = std::io::stdout().lock();
        out.write_all(text.as_bytes())?;
        out.flush()?;
    } else {
        std::fs::write(path, text)?;
    }
    Ok(())
}

/// A reported cluster with its members resolved back to region ids.
#[derive(Debug, Clone, Serialize)]
pub struct ClusterOut {
    pub rank: usize,
    pub zone_id: usize,
    pub size: usize,
    pub llr: f64,
    pub theta: f64,
    pub alpha: Option<f64>,
    /// Residual variance collapsed for this zone; `llr` is infinite.
    pub degenerate: bool,
    pub members: Vec<String>,
}

impl ClusterOut {
    fn new(rank: usize, record: &ZoneRecord, zones: &ZoneSet, table: &RegionTable) -> Self {
        let members = zones
            .zone(record.zone_id)
            .map(|z| {
                z.members()
                    .iter()
                    .map(|&i| table.ids()[i].clone())
                    .collect()
            })
            .unwrap_or_default();
        Self {
            rank,
            zone_id: record.zone_id,
            size: record.size,
            llr: record.llr,
            theta: record.theta,
            alpha: record.alpha,
            degenerate: record.degenerate,
            members,
        }
    }
}

fn resolve(list: &[ZoneRecord], zones: &ZoneSet, table: &RegionTable) -> Vec<ClusterOut> {
    list.iter()
        .enumerate()
        .map(|(i, r)| ClusterOut::new(i + 1, r, zones, table))
        .collect()
}

/// Scan portion of the result payload, shared by `scan` and `mc-test`.
#[derive(Debug, Serialize)]
pub struct ScanPayload {
    pub mlc_id: usize,
    pub mlc: Option<ClusterOut>,
    pub top: Vec<ClusterOut>,
    pub top_nonoverlap: Vec<ClusterOut>,
    pub evaluated: usize,
    pub skipped: usize,
    pub filtered: usize,
    /// Per-zone ratio table, present with `--all-zones`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub all_zones: Option<Vec<ZoneRecord>>,
}

impl ScanPayload {
    pub fn new(result: &ScanResult, zones: &ZoneSet, table: &RegionTable, all: bool) -> Self {
        Self {
            mlc_id: result.mlc_id,
            mlc: result
                .mlc
                .as_ref()
                .map(|r| ClusterOut::new(1, r, zones, table)),
            top: resolve(&result.top, zones, table),
            top_nonoverlap: resolve(&result.top_nonoverlap, zones, table),
            evaluated: result.evaluated,
            skipped: result.skipped,
            filtered: result.filtered,
            all_zones: all.then(|| result.records.clone()),
        }
    }
}

fn push_cluster(record: &mut Vec<String>, list: &str, c: &ClusterOut) {
    record.clear();
    record.push(list.to_string());
    record.push(c.rank.to_string());
    record.push(c.zone_id.to_string());
    record.push(c.size.to_string());
    record.push(format!("{}", c.llr));
    record.push(format!("{}", c.theta));
    record.push(c.alpha.map(|a| format!("{a}")).unwrap_or_default());
    record.push(c.members.join(" "));
}

/// One row per reported cluster, both ranked lists, with an optional
/// trailing column (used by `mc-test` for the p-value).
pub fn clusters_csv(payload: &ScanPayload, extra: Option<(&str, String)>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec![
        "list", "rank", "zone_id", "size", "llr", "theta", "alpha", "members",
    ];
    if let Some((name, _)) = &extra {
        header.push(name);
    }
    w.write_record(&header)?;
    let mut record = Vec::new();
    for (list, clusters) in [("top", &payload.top), ("nonoverlap", &payload.top_nonoverlap)] {
        for c in clusters {
            push_cluster(&mut record, list, c);
            if let Some((_, value)) = &extra {
                record.push(value.clone());
            }
            w.write_record(&record)?;
        }
    }
    let bytes = w
        .into_inner()
        .map_err(|e| crate::error::Error::Internal(format!("csv: {e}")))?;
    Ok(String::from_utf8_lossy(&bytes).into_owned())
}

/// GeoJSON FeatureCollection: one MultiPoint feature per non-overlapping
/// cluster, built from region centroids.
pub fn clusters_geojson<C: Serialize>(
    payload: &ScanPayload,
    table: &RegionTable,
    config: &C,
) -> Result<String> {
    let features: Vec<serde_json::Value> = payload
        .top_nonoverlap
        .iter()
        .map(|c| {
            let coordinates: Vec<[f64; 2]> = c
                .members
                .iter()
                .filter_map(|id| table.index_of(id))
                .map(|i| table.coords()[i])
                .collect();
            serde_json::json!({
                "type": "Feature",
                "geometry": { "type": "MultiPoint", "coordinates": coordinates },
                "properties": {
                    "rank": c.rank,
                    "zone_id": c.zone_id,
                    "size": c.size,
                    "llr": if c.llr.is_finite() { Some(c.llr) } else { None },
                    "theta": if c.theta.is_finite() { Some(c.theta) } else { None },
                },
            })
        })
        .collect();
    let doc = serde_json::json!({
        "type": "FeatureCollection",
        "features": features,
        "config": serde_json::to_value(config)
            .map_err(|e| crate::error::Error::Internal(format!("serialize: {e}")))?,
    });
    let mut text = serde_json::to_string_pretty(&doc)
        .map_err(|e| crate::error::Error::Internal(format!("serialize: {e}")))?;
    text.push('\n');
    Ok(text)
}
