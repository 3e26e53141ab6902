//! Candidate zone families.
//!
//! A zone is a set of region indices. The scan maximizes over a finite
//! family of candidate zones; this module builds the standard circular
//! family (nearest-neighbor prefixes around every region), singleton
//! zones, and space-time cylinders, and reads and writes zone membership
//! files.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::Serialize;

use crate::data::RegionTable;
use crate::error::{Error, Result};

/// A candidate zone: a sorted, duplicate-free set of region indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Zone {
    members: Vec<usize>,
}

impl Zone {
    pub fn new(mut members: Vec<usize>) -> Result<Self> {
        members.sort_unstable();
        members.dedup();
        if members.is_empty() {
            return Err(Error::InvalidData("zone must be non-empty".into()));
        }
        Ok(Self { members })
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, region: usize) -> bool {
        self.members.binary_search(&region).is_ok()
    }

    /// Dense 0/1 indicator over a universe of `n` regions.
    pub fn indicator(&self, n: usize) -> Vec<bool> {
        let mut z = vec![false; n];
        for &i in &self.members {
            z[i] = true;
        }
        z
    }

    pub fn intersects(&self, other: &Zone) -> bool {
        let (a, b) = if self.len() <= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        a.members.iter().any(|&i| b.contains(i))
    }
}

/// Jaccard similarity |A∩B| / |A∪B| between two index sets.
pub fn jaccard(a: &[usize], b: &[usize]) -> f64 {
    let sa: HashSet<usize> = a.iter().copied().collect();
    let sb: HashSet<usize> = b.iter().copied().collect();
    let inter = sa.intersection(&sb).count();
    let union = sa.len() + sb.len() - inter;
    if union == 0 {
        return 0.0;
    }
    inter as f64 / union as f64
}

/// Fraction of `target` covered by `found`: |A∩B| / |A|.
pub fn recall(target: &[usize], found: &[usize]) -> f64 {
    if target.is_empty() {
        return 0.0;
    }
    let sf: HashSet<usize> = found.iter().copied().collect();
    let inter = target.iter().filter(|i| sf.contains(i)).count();
    inter as f64 / target.len() as f64
}

/// An ordered family of distinct candidate zones over a fixed universe of
/// regions. Zones carry ids `1..=K`; id 0 is reserved for the empty
/// "no cluster" alternative and never appears in the family itself.
#[derive(Debug, Clone)]
pub struct ZoneSet {
    universe: usize,
    zones: Vec<Zone>,
}

impl ZoneSet {
    pub fn from_zones(universe: usize, zones: Vec<Zone>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(zones.len());
        for z in &zones {
            if z.members().last().is_some_and(|&m| m >= universe) {
                return Err(Error::InvalidData(format!(
                    "zone member out of range (universe {universe})"
                )));
            }
            if !seen.insert(z.members().to_vec()) {
                return Err(Error::InvalidData("duplicate zone in family".into()));
            }
        }
        if zones.is_empty() {
            return Err(Error::InvalidData("zone family must be non-empty".into()));
        }
        Ok(Self { universe, zones })
    }

    pub fn len(&self) -> usize {
        self.zones.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zones.is_empty()
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    /// Zone by 1-based id.
    pub fn zone(&self, id: usize) -> Option<&Zone> {
        (1..=self.zones.len())
            .contains(&id)
            .then(|| &self.zones[id - 1])
    }

    /// Iterate `(id, zone)` pairs in id order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, &Zone)> {
        self.zones.iter().enumerate().map(|(i, z)| (i + 1, z))
    }

    /// 1-based id of the first zone equal to `members`, if present.
    pub fn find(&self, members: &[usize]) -> Option<usize> {
        let probe = Zone::new(members.to_vec()).ok()?;
        self.zones.iter().position(|z| *z == probe).map(|i| i + 1)
    }
}

/// Distance metric for growing circular zones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Metric {
    /// Planar Euclidean distance on raw coordinates.
    #[default]
    Euclidean,
    /// Great-circle distance in kilometers; coordinates are interpreted
    /// as (longitude, latitude) in degrees.
    Haversine,
}

fn distance(metric: Metric, a: [f64; 2], b: [f64; 2]) -> f64 {
    match metric {
        Metric::Euclidean => ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt(),
        Metric::Haversine => haversine_km(a, b),
    }
}

/// Great-circle distance between (lon, lat) points in degrees, in km.
pub fn haversine_km(a: [f64; 2], b: [f64; 2]) -> f64 {
    const R: f64 = 6371.0088;
    let (lon1, lat1) = (a[0].to_radians(), a[1].to_radians());
    let (lon2, lat2) = (b[0].to_radians(), b[1].to_radians());
    let dlat = lat2 - lat1;
    let dlon = lon2 - lon1;
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * R * h.sqrt().asin()
}

/// Controls for the circular zone family.
#[derive(Debug, Clone)]
pub struct CircularConfig {
    /// Cap on the number of regions per zone.
    pub max_size: Option<usize>,
    /// Cap on the fraction of total baseline a zone may cover.
    pub max_fraction: Option<f64>,
    pub metric: Metric,
}

impl Default for CircularConfig {
    fn default() -> Self {
        Self {
            max_size: None,
            max_fraction: Some(0.5),
            metric: Metric::Euclidean,
        }
    }
}

/// Circular candidate zones: for every region c, the prefixes of the
/// nearest-neighbor ordering around c (distance ties broken by ascending
/// region index), up to the configured caps, with duplicate member sets
/// removed. Enumeration order is centers by ascending index, then prefix
/// size ascending, keeping the first occurrence of each distinct zone;
/// the family is therefore deterministic, and invariant as a set of sets
/// under relabeling of regions.
pub fn circular_zones(table: &RegionTable, config: &CircularConfig) -> Result<ZoneSet> {
    if let Some(f) = config.max_fraction {
        if !(0.0 < f && f <= 1.0) {
            return Err(Error::InvalidConfig(
                "max_fraction must be in (0, 1]".into(),
            ));
        }
    }
    if config.max_size == Some(0) {
        return Err(Error::InvalidConfig("max_size must be positive".into()));
    }
    let n = table.len();
    let coords = table.coords();
    let total_baseline: f64 = table.baseline().iter().sum();
    let budget = config.max_fraction.map(|f| f * total_baseline);
    let size_cap = config.max_size.unwrap_or(n).min(n);

    let mut zones = Vec::new();
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut order: Vec<usize> = Vec::with_capacity(n);
    for center in 0..n {
        order.clear();
        order.extend(0..n);
        order.sort_by(|&a, &b| {
            distance(config.metric, coords[a], coords[center])
                .total_cmp(&distance(config.metric, coords[b], coords[center]))
                .then(a.cmp(&b))
        });
        let mut members: Vec<usize> = Vec::with_capacity(size_cap);
        let mut baseline_sum = 0.0;
        for &next in order.iter().take(size_cap) {
            baseline_sum += table.baseline()[next];
            // The singleton around each center is always admitted, even if
            // it alone exceeds the baseline budget, so every region belongs
            // to at least one candidate zone.
            if !members.is_empty() && budget.is_some_and(|cap| baseline_sum > cap) {
                break;
            }
            members.push(next);
            let mut key = members.clone();
            key.sort_unstable();
            if seen.insert(key.clone()) {
                zones.push(Zone { members: key });
            }
        }
    }
    ZoneSet::from_zones(n, zones)
}

/// One zone per region.
pub fn singleton_zones(table: &RegionTable) -> Result<ZoneSet> {
    let zones = (0..table.len()).map(|i| Zone { members: vec![i] }).collect();
    ZoneSet::from_zones(table.len(), zones)
}

/// Shape of one space-time cylinder: a base zone held over a run of
/// consecutive periods. `start` is zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Cylinder {
    pub base_id: usize,
    pub start: usize,
    pub duration: usize,
}

/// Space-time cylinders over a purely spatial base family.
///
/// Cells of the flattened space-time table are indexed `t*N + i` for
/// zero-based period `t` and region `i`. For every base zone, every
/// duration `d = 1..=max_duration` and every start period, the cylinder
/// is the base zone replicated across `d` consecutive periods. The
/// family size is `K_base * sum_d (T - d + 1)`.
pub fn cylinder_zones(base: &ZoneSet, periods: usize, max_duration: usize) -> Result<ZoneSet> {
    cylinder_zones_with_info(base, periods, max_duration).map(|(zones, _)| zones)
}

/// [`cylinder_zones`] plus the shape of each cylinder; entry `k`
/// describes zone id `k + 1`.
pub fn cylinder_zones_with_info(
    base: &ZoneSet,
    periods: usize,
    max_duration: usize,
) -> Result<(ZoneSet, Vec<Cylinder>)> {
    if periods == 0 {
        return Err(Error::InvalidConfig("periods must be positive".into()));
    }
    let max_d = max_duration.min(periods);
    if max_d == 0 {
        return Err(Error::InvalidConfig("max_duration must be positive".into()));
    }
    let n = base.universe();
    let mut zones = Vec::new();
    let mut info = Vec::new();
    for (base_id, z) in base.iter() {
        for d in 1..=max_d {
            for start in 0..=(periods - d) {
                let members: Vec<usize> = (start..start + d)
                    .flat_map(|t| z.members().iter().map(move |&i| t * n + i))
                    .collect();
                zones.push(Zone::new(members)?);
                info.push(Cylinder {
                    base_id,
                    start,
                    duration: d,
                });
            }
        }
    }
    let set = ZoneSet::from_zones(n * periods, zones)?;
    Ok((set, info))
}

/// Read a zone membership file: CSV with columns `zone_id,region_id`.
/// Zones are ordered by first appearance of their `zone_id`; region ids
/// are resolved against `table`.
pub fn load_zones(path: impl AsRef<Path>, table: &RegionTable) -> Result<ZoneSet> {
    let mut reader = csv::Reader::from_path(path.as_ref())?;
    let headers = reader.headers()?.clone();
    let zid = headers
        .iter()
        .position(|h| h == "zone_id")
        .ok_or_else(|| Error::MissingColumn {
            column: "zone_id".into(),
        })?;
    let rid = headers
        .iter()
        .position(|h| h == "region_id")
        .ok_or_else(|| Error::MissingColumn {
            column: "region_id".into(),
        })?;
    let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    let mut first_seen: Vec<String> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let key = record.get(zid).unwrap_or("").trim().to_string();
        let region = record.get(rid).unwrap_or("").trim().to_string();
        let idx = table
            .index_of(&region)
            .ok_or(Error::UnknownRegion(region))?;
        if !groups.contains_key(&key) {
            first_seen.push(key.clone());
        }
        groups.entry(key).or_default().push(idx);
    }
    let zones: Result<Vec<Zone>> = first_seen
        .iter()
        .map(|k| Zone::new(groups[k].clone()))
        .collect();
    ZoneSet::from_zones(table.len(), zones?)
}

/// Write a zone family as `zone_id,region_id` rows, one row per member.
pub fn save_zones(path: impl AsRef<Path>, zones: &ZoneSet, table: &RegionTable) -> Result<()> {
    let mut writer = csv::Writer::from_path(path.as_ref())?;
    writer.write_record(["zone_id", "region_id"])?;
    for (id, z) in zones.iter() {
        for &m in z.members() {
            writer.write_record([id.to_string().as_str(), table.ids()[m].as_str()])?;
        }
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(coords: Vec<[f64; 2]>) -> RegionTable {
        let n = coords.len();
        let ids = (0..n).map(|i| format!("r{i}")).collect();
        RegionTable::new(ids, coords, vec![0.0; n]).unwrap()
    }

    fn no_caps() -> CircularConfig {
        CircularConfig {
            max_size: None,
            max_fraction: None,
            metric: Metric::Euclidean,
        }
    }

    #[test]
    fn three_collinear_points() {
        let t = table(vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]);
        let zs = circular_zones(&t, &no_caps()).unwrap();
        let got: HashSet<Vec<usize>> = zs.iter().map(|(_, z)| z.members().to_vec()).collect();
        let want: HashSet<Vec<usize>> = [
            vec![0],
            vec![1],
            vec![2],
            vec![0, 1],
            vec![1, 2],
            vec![0, 1, 2],
        ]
        .into_iter()
        .collect();
        // The middle point's distance tie (regions 0 and 2) resolves to
        // the lower index, so {1,2} only arises from center 2 and {0,2}
        // never appears.
        assert_eq!(got, want);
    }

    #[test]
    fn relabeling_invariance() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let coords: Vec<[f64; 2]> = (0..12)
            .map(|_| [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)])
            .collect();
        // A fixed permutation of the region order.
        let perm: Vec<usize> = vec![4, 0, 7, 11, 2, 9, 1, 5, 10, 3, 8, 6];
        let permuted: Vec<[f64; 2]> = perm.iter().map(|&i| coords[i]).collect();
        let a = circular_zones(&table(coords), &no_caps()).unwrap();
        let b = circular_zones(&table(permuted), &no_caps()).unwrap();
        // Map the permuted family back to original labels and compare as
        // sets of sets.
        let back: HashSet<Vec<usize>> = b
            .iter()
            .map(|(_, z)| {
                let mut m: Vec<usize> = z.members().iter().map(|&i| perm[i]).collect();
                m.sort_unstable();
                m
            })
            .collect();
        let orig: HashSet<Vec<usize>> = a.iter().map(|(_, z)| z.members().to_vec()).collect();
        assert_eq!(orig, back);
    }

    #[test]
    fn baseline_fraction_cap() {
        let t = table(vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0]]);
        let zs = circular_zones(
            &t,
            &CircularConfig {
                max_fraction: Some(0.5),
                ..no_caps()
            },
        )
        .unwrap();
        // Total baseline 4, budget 2: no zone may have more than 2 members.
        assert!(zs.iter().all(|(_, z)| z.len() <= 2));
        assert!(zs.iter().any(|(_, z)| z.len() == 2));
    }

    #[test]
    fn size_cap() {
        let t = table(vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0]]);
        let zs = circular_zones(
            &t,
            &CircularConfig {
                max_size: Some(1),
                ..no_caps()
            },
        )
        .unwrap();
        assert_eq!(zs.len(), 4);
        assert!(zs.iter().all(|(_, z)| z.len() == 1));
    }

    #[test]
    fn full_zone_present_without_caps() {
        let t = table(vec![[0.0, 0.0], [1.0, 0.0], [5.0, 0.0]]);
        let zs = circular_zones(&t, &no_caps()).unwrap();
        assert!(zs.find(&[0, 1, 2]).is_some());
    }

    #[test]
    fn cylinder_count_and_indexing() {
        let t = table(vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]);
        let base = singleton_zones(&t).unwrap();
        let cyl = cylinder_zones(&base, 4, 2).unwrap();
        // K_base=3, T=4, durations 1 and 2: 3 * (4 + 3) = 21.
        assert_eq!(cyl.len(), 21);
        // First base zone {0}: duration 1 starts t=0..3, then duration 2.
        assert_eq!(cyl.zone(1).unwrap().members(), &[0]);
        assert_eq!(cyl.zone(2).unwrap().members(), &[3]);
        assert_eq!(cyl.zone(5).unwrap().members(), &[0, 3]);
        assert_eq!(cyl.zone(6).unwrap().members(), &[3, 6]);
    }

    #[test]
    fn zone_csv_round_trip() {
        let t = table(vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]);
        let zs = circular_zones(&t, &no_caps()).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        save_zones(f.path(), &zs, &t).unwrap();
        let back = load_zones(f.path(), &t).unwrap();
        assert_eq!(back.len(), zs.len());
        for (id, z) in zs.iter() {
            assert_eq!(back.zone(id).unwrap(), z);
        }
    }

    #[test]
    fn jaccard_and_recall() {
        assert_eq!(jaccard(&[0, 1, 2], &[0, 1, 2]), 1.0);
        assert_eq!(jaccard(&[0, 1], &[2, 3]), 0.0);
        assert!((jaccard(&[0, 1, 2], &[1, 2, 3]) - 0.5).abs() < 1e-15);
        assert!((recall(&[0, 1, 2, 3], &[1, 3, 9]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn haversine_known_distance() {
        // One degree of latitude is about 111.2 km.
        let d = haversine_km([0.0, 0.0], [0.0, 1.0]);
        assert!((d - 111.19).abs() < 0.1);
    }

    #[test]
    fn zone_set_rejects_out_of_range() {
        let z = Zone::new(vec![5]).unwrap();
        assert!(ZoneSet::from_zones(3, vec![z]).is_err());
    }
}
