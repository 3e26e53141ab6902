//! Space-time scanning over cylinder zones.
//!
//! A space-time dataset is flattened to one cell per region and period,
//! and the spatial machinery runs unchanged over cylinder zones (a base
//! zone held across consecutive periods). Expectation-based statistics
//! need nothing else: the per-cell baselines already say what each cell
//! should look like. Population-based statistics fit a free background
//! level, and purely temporal structure (a trend, a seasonal slice)
//! would otherwise masquerade as a cluster, so the flattening first
//! calibrates each slice against its own data:
//!
//! * Poisson: cell baselines are scaled so every slice's expected total
//!   equals its observed total (indirect standardization over time).
//! * Known-variance Gaussian: cell baselines are scaled by the slice's
//!   weighted least-squares level, so the background mean is calibrated
//!   per period.
//! * Unknown-variance Gaussian: outcomes are de-meaned per slice, which
//!   the shift-invariant statistic absorbs exactly.
//! * Bernoulli has no free per-period scale to calibrate; the
//!   population-based form is not offered for space-time data, while the
//!   expectation-based form works as-is.
//!
//! With a single period every calibration is a no-op up to the
//! statistic's own invariances, so the space-time scan reduces to the
//! spatial scan.

use serde::Serialize;

use crate::data::{RegionTable, SpaceTimeTable};
use crate::error::{Error, Result};
use crate::scan::{scan, ScanOptions, ScanResult};
use crate::stats::{Approach, Family, ModelSpec};
use crate::zones::{cylinder_zones_with_info, Cylinder, ZoneSet};

#[derive(Debug, Clone)]
pub struct SpaceTimeOptions {
    /// Longest cylinder considered, clamped to the number of periods.
    pub max_duration: usize,
    pub scan: ScanOptions,
}

impl Default for SpaceTimeOptions {
    fn default() -> Self {
        Self {
            max_duration: usize::MAX,
            scan: ScanOptions::default(),
        }
    }
}

/// A spatial scan result over cylinder zones, with the shape of each
/// cylinder and the calibrated flat table the scan actually saw.
#[derive(Debug, Clone, Serialize)]
pub struct SpaceTimeScan {
    pub result: ScanResult,
    /// Cylinder shapes; entry `k` describes zone id `k + 1`.
    pub cylinders: Vec<Cylinder>,
    #[serde(skip)]
    pub zones: ZoneSet,
    #[serde(skip)]
    pub table: RegionTable,
}

impl SpaceTimeScan {
    pub fn cylinder(&self, zone_id: usize) -> Option<Cylinder> {
        zone_id
            .checked_sub(1)
            .and_then(|k| self.cylinders.get(k))
            .copied()
    }

    pub fn mlc_cylinder(&self) -> Option<Cylinder> {
        self.cylinder(self.result.mlc_id)
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Flatten with the per-slice calibration the statistic requires.
fn calibrated_flat(st: &SpaceTimeTable, spec: ModelSpec) -> Result<RegionTable> {
    if spec.approach == Approach::Expectation {
        return Ok(st.flatten());
    }
    match spec.family {
        Family::Poisson => {
            for s in st.slices() {
                if s.outcome().iter().sum::<f64>() <= 0.0 {
                    return Err(Error::DegenerateOutcome(
                        "a time slice has no events to calibrate against",
                    ));
                }
            }
            Ok(st.flatten_with(
                |s| s.outcome().to_vec(),
                |s| {
                    let rate =
                        s.outcome().iter().sum::<f64>() / s.baseline().iter().sum::<f64>();
                    s.baseline().iter().map(|g| g * rate).collect()
                },
            ))
        }
        Family::GaussFixed => {
            let level = |s: &RegionTable| -> f64 {
                let n = s.len();
                let v: Vec<f64> = s
                    .variance()
                    .map(<[f64]>::to_vec)
                    .unwrap_or_else(|| vec![1.0; n]);
                let a: f64 = (0..n).map(|i| s.outcome()[i] * s.baseline()[i] / v[i]).sum();
                let b: f64 = (0..n).map(|i| s.baseline()[i].powi(2) / v[i]).sum();
                a / b
            };
            for s in st.slices() {
                if !(level(s) > 0.0) {
                    return Err(Error::DegenerateOutcome(
                        "slice calibration gives a non-positive baseline level",
                    ));
                }
            }
            Ok(st.flatten_with(
                |s| s.outcome().to_vec(),
                |s| {
                    let l = level(s);
                    s.baseline().iter().map(|g| g * l).collect()
                },
            ))
        }
        Family::GaussUnknown => Ok(st.flatten_with(
            |s| {
                let m = mean(s.outcome());
                s.outcome().iter().map(|y| y - m).collect()
            },
            |s| s.baseline().to_vec(),
        )),
        Family::Bernoulli => Err(Error::InvalidConfig(
            "population-based Bernoulli has no per-period calibration; \
             use bernoulli-exp for space-time scans"
                .into(),
        )),
    }
}

/// Scan a space-time dataset over cylinders built from a spatial base
/// family.
pub fn space_time_scan(
    st: &SpaceTimeTable,
    base: &ZoneSet,
    spec: ModelSpec,
    opts: &SpaceTimeOptions,
) -> Result<SpaceTimeScan> {
    if base.universe() != st.regions() {
        return Err(Error::InvalidData(format!(
            "base zone family is over {} regions but the data has {}",
            base.universe(),
            st.regions()
        )));
    }
    let table = calibrated_flat(st, spec)?;
    let (zones, cylinders) = cylinder_zones_with_info(base, st.periods(), opts.max_duration)?;
    let result = scan(&table, &zones, spec, &opts.scan)?;
    Ok(SpaceTimeScan {
        result,
        cylinders,
        zones,
        table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zones::circular_zones;
    use crate::zones::CircularConfig;
    use crate::zones::Metric;

    fn slice(y: Vec<f64>, baseline: Option<Vec<f64>>) -> RegionTable {
        let n = y.len();
        let ids = (0..n).map(|i| format!("r{i}")).collect();
        let coords = (0..n).map(|i| [i as f64, 0.0]).collect();
        let mut t = RegionTable::new(ids, coords, y).unwrap();
        if let Some(b) = baseline {
            t = t.with_baseline(b).unwrap();
        }
        t
    }

    fn no_caps() -> CircularConfig {
        CircularConfig {
            max_size: None,
            max_fraction: None,
            metric: Metric::Euclidean,
        }
    }

    #[test]
    fn single_period_reduces_to_spatial() {
        let y = vec![9.0, 7.0, 1.0, 2.0, 1.0, 1.0];
        let s = slice(y, Some(vec![2.0, 2.0, 1.0, 1.5, 1.0, 1.0]));
        let base = circular_zones(&s, &no_caps()).unwrap();
        let st = SpaceTimeTable::new(vec![s.clone()]).unwrap();
        // Expectation approach: flattening one period copies the table
        // verbatim, so the winner matches the spatial scan exactly.
        let spec = ModelSpec::parse("poisson-exp").unwrap();
        let spatial = scan(&s, &base, spec, &ScanOptions::default()).unwrap();
        let spacetime = space_time_scan(&st, &base, spec, &SpaceTimeOptions::default()).unwrap();
        let cyl = spacetime.mlc_cylinder().unwrap();
        assert_eq!(cyl.base_id, spatial.mlc_id);
        assert_eq!((cyl.start, cyl.duration), (0, 1));
        assert_eq!(spacetime.result.mlc_llr(), spatial.mlc_llr());
        // Population approach: calibration rescales the baselines, which
        // the ratio is invariant to (up to rounding; the tied complement
        // zone may swap in, so only the ratio is compared).
        let spec = ModelSpec::parse("poisson-pop").unwrap();
        let spatial = scan(&s, &base, spec, &ScanOptions::default()).unwrap();
        let spacetime = space_time_scan(&st, &base, spec, &SpaceTimeOptions::default()).unwrap();
        assert_eq!(spacetime.mlc_cylinder().unwrap().duration, 1);
        assert!((spacetime.result.mlc_llr() - spatial.mlc_llr()).abs() < 1e-12);
    }

    #[test]
    fn planted_cylinder_is_found() {
        // Regions 0-1 elevated during periods 2 and 3 only.
        let quiet = || slice(vec![1.0, 1.0, 1.0, 1.0, 1.0], None);
        let loud = || slice(vec![8.0, 9.0, 1.0, 1.0, 1.0], None);
        let st = SpaceTimeTable::new(vec![quiet(), loud(), loud(), quiet()]).unwrap();
        let base = circular_zones(st.slice(0), &no_caps()).unwrap();
        let out = space_time_scan(
            &st,
            &base,
            ModelSpec::parse("poisson-exp").unwrap(),
            &SpaceTimeOptions::default(),
        )
        .unwrap();
        let cyl = out.mlc_cylinder().unwrap();
        assert_eq!((cyl.start, cyl.duration), (1, 2));
        assert_eq!(base.zone(cyl.base_id).unwrap().members(), &[0, 1]);
        // The flat members match the cylinder shape.
        let mlc = out.result.mlc.as_ref().unwrap();
        let zone = out.zones.zone(mlc.zone_id).unwrap();
        assert_eq!(zone.members(), &[5, 6, 10, 11]);
    }

    #[test]
    fn proportional_slices_carry_no_signal() {
        // Each slice is exactly proportional to the baselines, at
        // different per-period rates: after calibration nothing remains.
        let b = vec![1.0, 2.0, 3.0];
        let s1 = slice(vec![2.0, 4.0, 6.0], Some(b.clone()));
        let s2 = slice(vec![3.0, 6.0, 9.0], Some(b.clone()));
        let st = SpaceTimeTable::new(vec![s1, s2]).unwrap();
        let base = circular_zones(st.slice(0), &no_caps()).unwrap();
        let out = space_time_scan(
            &st,
            &base,
            ModelSpec::parse("poisson-pop").unwrap(),
            &SpaceTimeOptions::default(),
        )
        .unwrap();
        assert_eq!(out.result.mlc_id, 0);
        assert!(out.mlc_cylinder().is_none());
    }

    #[test]
    fn per_slice_shift_is_absorbed() {
        // A constant added to one whole period must not change the
        // unknown-variance statistic. Dyadic values and a power-of-two
        // region count keep the per-slice de-meaning exact, so the two
        // scans agree bitwise.
        let y1 = vec![3.0, 1.5, 0.5, 0.25];
        let y2 = vec![2.5, 1.0, 0.75, 0.5];
        let shifted: Vec<f64> = y2.iter().map(|v| v + 100.0).collect();
        let base = circular_zones(&slice(y1.clone(), None), &no_caps()).unwrap();
        let plain = SpaceTimeTable::new(vec![slice(y1.clone(), None), slice(y2, None)]).unwrap();
        let moved = SpaceTimeTable::new(vec![slice(y1, None), slice(shifted, None)]).unwrap();
        let spec = ModelSpec::parse("gauss-unknown-pop").unwrap();
        let a = space_time_scan(&plain, &base, spec, &SpaceTimeOptions::default()).unwrap();
        let b = space_time_scan(&moved, &base, spec, &SpaceTimeOptions::default()).unwrap();
        assert_eq!(a.result.mlc_id, b.result.mlc_id);
        assert_eq!(a.result.mlc_llr(), b.result.mlc_llr());
    }

    #[test]
    fn bernoulli_population_is_rejected() {
        let s = slice(vec![1.0, 0.0, 1.0], None);
        let st = SpaceTimeTable::new(vec![s.clone(), s.clone()]).unwrap();
        let base = circular_zones(&s, &no_caps()).unwrap();
        let err = space_time_scan(
            &st,
            &base,
            ModelSpec::parse("bernoulli-pop").unwrap(),
            &SpaceTimeOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidConfig(_)));
        assert!(space_time_scan(
            &st,
            &base,
            ModelSpec::parse("bernoulli-exp").unwrap(),
            &SpaceTimeOptions::default(),
        )
        .is_ok());
    }

    #[test]
    fn max_duration_limits_cylinders() {
        let quiet = || slice(vec![1.0, 1.0, 1.0], None);
        let st = SpaceTimeTable::new(vec![quiet(), quiet(), quiet()]).unwrap();
        let base = circular_zones(st.slice(0), &no_caps()).unwrap();
        let out = space_time_scan(
            &st,
            &base,
            ModelSpec::parse("poisson-exp").unwrap(),
            &SpaceTimeOptions {
                max_duration: 1,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(out.cylinders.iter().all(|c| c.duration == 1));
        assert_eq!(out.cylinders.len(), base.len() * 3);
    }
}
