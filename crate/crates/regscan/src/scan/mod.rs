//! Most-likely-cluster search over a candidate zone family.
//!
//! The scan evaluates the zone statistic for every candidate, ranks
//! zones by the ratio, and reports the most likely cluster along with
//! ranked and non-overlapping cluster lists. The empty "no cluster"
//! alternative, zone id 0, always competes: when no zone improves on the
//! null, the reported cluster id is 0.
//!
//! Evaluation is parallel; results are collected in zone order and all
//! ranking is sequential, so output is identical for any thread count.

mod l0;
mod robust;
mod spacetime;

pub use l0::{solve_l0_multi, solve_l0_single, L0Config, L0Selection, Overlap};
pub use robust::{robust_mean_shift, shift_support, RobustConfig, RobustFit};
pub use spacetime::{space_time_scan, SpaceTimeOptions, SpaceTimeScan};

use rayon::prelude::*;
use serde::Serialize;

use crate::data::RegionTable;
use crate::error::{Error, Result};
use crate::stats::{Evaluator, FitReport, ModelSpec};
use crate::zones::{Zone, ZoneSet};

/// One-sided scans keep only zones whose estimated effect has the
/// requested sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    #[default]
    Both,
    /// Elevated zones only (positive effect).
    High,
    /// Depressed zones only (negative effect).
    Low,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanOptions {
    /// Number of clusters reported in the ranked lists.
    pub top_m: usize,
    pub direction: Direction,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            top_m: 3,
            direction: Direction::Both,
        }
    }
}

impl ScanOptions {
    fn validate(&self) -> Result<()> {
        if self.top_m == 0 {
            return Err(Error::InvalidConfig("top_m must be positive".into()));
        }
        Ok(())
    }
}

/// Outcome of evaluating one candidate zone.
#[derive(Debug, Clone, Serialize)]
pub struct ZoneRecord {
    pub zone_id: usize,
    pub size: usize,
    /// Non-negative; infinite (serialized as null) for degenerate zones.
    pub llr: f64,
    /// Zone effect estimate; NaN when the fit was degenerate.
    pub theta: f64,
    pub alpha: Option<f64>,
    /// True when the residual variance collapsed for this zone. The
    /// ratio is then reported as infinite and the zone still competes
    /// for most likely cluster, flagged rather than dropped.
    pub degenerate: bool,
}

/// Scan output. Zone ids refer to the zone family the scan was given.
#[derive(Debug, Clone, Serialize)]
pub struct ScanResult {
    /// Most likely cluster, 0 when no zone beats the null.
    pub mlc_id: usize,
    pub mlc: Option<ZoneRecord>,
    /// Best zones in rank order (ratio descending, ties to smaller
    /// zones, then smaller ids). Only zones with a positive ratio.
    pub top: Vec<ZoneRecord>,
    /// Like `top`, but greedily skipping zones that share regions with a
    /// better cluster already listed.
    pub top_nonoverlap: Vec<ZoneRecord>,
    /// Zones evaluated successfully, including degenerate-flagged ones.
    pub evaluated: usize,
    /// Zones that could not carry the statistic and were skipped.
    pub skipped: usize,
    /// Zones removed by the direction filter.
    pub filtered: usize,
    /// All surviving zone records in zone-id order.
    #[serde(skip)]
    pub records: Vec<ZoneRecord>,
}

impl ScanResult {
    /// The maximized ratio: 0 when no cluster was found.
    pub fn mlc_llr(&self) -> f64 {
        self.mlc.as_ref().map_or(0.0, |r| r.llr)
    }
}

fn rank_order(a: &ZoneRecord, b: &ZoneRecord) -> std::cmp::Ordering {
    b.llr
        .total_cmp(&a.llr)
        .then(a.size.cmp(&b.size))
        .then(a.zone_id.cmp(&b.zone_id))
}

/// Evaluate every candidate zone and report the most likely cluster.
///
/// Zones that cannot carry the statistic (for instance the all-regions
/// zone under a population-based model) are skipped; zones with a
/// collapsed residual variance are kept with an infinite ratio and
/// flagged. The scan fails with [`Error::EmptyResult`] only if no zone
/// at all could be evaluated.
pub fn scan(
    table: &RegionTable,
    zones: &ZoneSet,
    spec: ModelSpec,
    options: &ScanOptions,
) -> Result<ScanResult> {
    options.validate()?;
    if zones.universe() != table.len() {
        return Err(Error::InvalidData(format!(
            "zone family is over {} regions but the table has {}",
            zones.universe(),
            table.len()
        )));
    }
    let evaluator = Evaluator::new(table, spec)?;
    let items: Vec<(usize, &Zone)> = zones.iter().collect();
    let raw: Vec<(usize, usize, Result<FitReport>)> = items
        .par_iter()
        .map(|(id, z)| (*id, z.len(), evaluator.evaluate(z)))
        .collect();

    let mut records = Vec::with_capacity(raw.len());
    let mut evaluated = 0usize;
    let mut skipped = 0usize;
    let mut filtered = 0usize;
    for (zone_id, size, outcome) in raw {
        let record = match outcome {
            Ok(fit) => {
                evaluated += 1;
                ZoneRecord {
                    zone_id,
                    size,
                    llr: fit.llr,
                    theta: fit.theta,
                    alpha: fit.alpha,
                    degenerate: false,
                }
            }
            Err(Error::DegenerateVariance) => {
                evaluated += 1;
                ZoneRecord {
                    zone_id,
                    size,
                    llr: f64::INFINITY,
                    theta: f64::NAN,
                    alpha: None,
                    degenerate: true,
                }
            }
            Err(Error::DegenerateZone(_))
            | Err(Error::RankDeficient)
            | Err(Error::NonConvergence(_)) => {
                skipped += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let keep = match options.direction {
            Direction::Both => true,
            Direction::High => record.theta > 0.0,
            Direction::Low => record.theta < 0.0,
        };
        if keep {
            records.push(record);
        } else {
            filtered += 1;
        }
    }
    if evaluated == 0 {
        return Err(Error::EmptyResult);
    }

    let mut ranked: Vec<&ZoneRecord> = records.iter().collect();
    ranked.sort_by(|a, b| rank_order(a, b));

    let top: Vec<ZoneRecord> = ranked
        .iter()
        .filter(|r| r.llr > 0.0)
        .take(options.top_m)
        .map(|r| (*r).clone())
        .collect();

    let mut top_nonoverlap: Vec<ZoneRecord> = Vec::new();
    let mut taken: Vec<&Zone> = Vec::new();
    for r in ranked.iter().filter(|r| r.llr > 0.0) {
        if top_nonoverlap.len() >= options.top_m {
            break;
        }
        let zone = zones.zone(r.zone_id).expect("record ids come from the family");
        if taken.iter().any(|t| t.intersects(zone)) {
            continue;
        }
        taken.push(zone);
        top_nonoverlap.push((*r).clone());
    }

    let mlc = top.first().cloned();
    Ok(ScanResult {
        mlc_id: mlc.as_ref().map_or(0, |r| r.zone_id),
        mlc,
        top,
        top_nonoverlap,
        evaluated,
        skipped,
        filtered,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{Approach, Family};
    use crate::zones::{circular_zones, singleton_zones, CircularConfig, Metric};

    fn line_table(y: Vec<f64>) -> RegionTable {
        let n = y.len();
        let ids = (0..n).map(|i| format!("r{i}")).collect();
        let coords = (0..n).map(|i| [i as f64, 0.0]).collect();
        RegionTable::new(ids, coords, y).unwrap()
    }

    fn no_caps() -> CircularConfig {
        CircularConfig {
            max_size: None,
            max_fraction: None,
            metric: Metric::Euclidean,
        }
    }

    #[test]
    fn planted_cluster_recovered() {
        let table = line_table(vec![9.0, 8.0, 1.0, 1.0, 1.0, 1.0]);
        let zones = circular_zones(&table, &no_caps()).unwrap();
        let spec = ModelSpec::closed(Family::Poisson, Approach::Expectation);
        let result = scan(&table, &zones, spec, &ScanOptions::default()).unwrap();
        let mlc_zone = zones.zone(result.mlc_id).unwrap();
        assert_eq!(mlc_zone.members(), &[0, 1]);
        assert!(result.mlc_llr() > 5.0);
        assert_eq!(result.skipped, 0);
    }

    #[test]
    fn proportional_outcomes_find_nothing() {
        // Outcomes exactly double the baselines: every ratio is exactly
        // zero and the empty alternative wins.
        let table = line_table(vec![2.0, 4.0, 6.0, 2.0, 4.0])
            .with_baseline(vec![1.0, 2.0, 3.0, 1.0, 2.0])
            .unwrap();
        let zones = circular_zones(&table, &no_caps()).unwrap();
        let spec = ModelSpec::closed(Family::Poisson, Approach::Population);
        let result = scan(&table, &zones, spec, &ScanOptions::default()).unwrap();
        assert_eq!(result.mlc_id, 0);
        assert!(result.mlc.is_none());
        assert_eq!(result.mlc_llr(), 0.0);
        assert!(result.top.is_empty());
    }

    #[test]
    fn direction_filter_and_tie_break() {
        // Under the expectation-based Bernoulli model every singleton has
        // ratio ln 2, with the effect sign given by the outcome. Ties
        // resolve to the smallest zone id within each direction.
        let table = line_table(vec![1.0, 1.0, 0.0]);
        let zones = singleton_zones(&table).unwrap();
        let spec = ModelSpec::closed(Family::Bernoulli, Approach::Expectation);
        let both = scan(&table, &zones, spec, &ScanOptions::default()).unwrap();
        assert_eq!(both.mlc_id, 1);
        let high = scan(
            &table,
            &zones,
            spec,
            &ScanOptions {
                direction: Direction::High,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(high.mlc_id, 1);
        assert_eq!(high.filtered, 1);
        let low = scan(
            &table,
            &zones,
            spec,
            &ScanOptions {
                direction: Direction::Low,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(low.mlc_id, 3);
        assert_eq!(low.filtered, 2);
    }

    #[test]
    fn degenerate_zone_flagged_not_dropped() {
        // Regions 0-1 are constant 5, the rest constant 1: the zone {0,1}
        // fits perfectly, collapsing the residual variance.
        let table = line_table(vec![5.0, 5.0, 1.0, 1.0, 1.0]);
        let zones = circular_zones(&table, &no_caps()).unwrap();
        let spec = ModelSpec::closed(Family::GaussUnknown, Approach::Population);
        let result = scan(&table, &zones, spec, &ScanOptions::default()).unwrap();
        let mlc = result.mlc.as_ref().unwrap();
        assert!(mlc.degenerate);
        assert_eq!(mlc.llr, f64::INFINITY);
        assert_eq!(zones.zone(result.mlc_id).unwrap().members(), &[0, 1]);
    }

    #[test]
    fn all_zones_skipped_is_an_error() {
        let table = line_table(vec![1.0, 2.0]);
        let full = ZoneSet::from_zones(2, vec![Zone::new(vec![0, 1]).unwrap()]).unwrap();
        let spec = ModelSpec::closed(Family::Poisson, Approach::Population);
        let err = scan(&table, &full, spec, &ScanOptions::default()).unwrap_err();
        assert!(matches!(err, Error::EmptyResult));
    }

    #[test]
    fn nonoverlap_list_is_disjoint() {
        let table = line_table(vec![9.0, 8.0, 1.0, 1.0, 7.0, 9.0]);
        let zones = circular_zones(&table, &no_caps()).unwrap();
        let spec = ModelSpec::closed(Family::Poisson, Approach::Expectation);
        let result = scan(&table, &zones, spec, &ScanOptions::default()).unwrap();
        for i in 0..result.top_nonoverlap.len() {
            for j in i + 1..result.top_nonoverlap.len() {
                let a = zones.zone(result.top_nonoverlap[i].zone_id).unwrap();
                let b = zones.zone(result.top_nonoverlap[j].zone_id).unwrap();
                assert!(!a.intersects(b));
            }
        }
        // The plain ranked list stacks overlapping variants of the best
        // cluster, so the two lists differ beyond the first entry.
        assert_eq!(result.top[0].zone_id, result.top_nonoverlap[0].zone_id);
    }

    #[test]
    fn scan_is_reproducible() {
        let table = line_table(vec![3.0, 0.0, 2.0, 5.0, 1.0, 0.0, 4.0]);
        let zones = circular_zones(&table, &no_caps()).unwrap();
        let spec = ModelSpec::closed(Family::Poisson, Approach::Population);
        let a = scan(&table, &zones, spec, &ScanOptions::default()).unwrap();
        let b = scan(&table, &zones, spec, &ScanOptions::default()).unwrap();
        assert_eq!(a.mlc_id, b.mlc_id);
        assert_eq!(a.records.len(), b.records.len());
        for (x, y) in a.records.iter().zip(&b.records) {
            assert_eq!(x.llr.to_bits(), y.llr.to_bits());
        }
    }
}
