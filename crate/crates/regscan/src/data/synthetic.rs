//! Bundled synthetic study geometry.
//!
//! 281 region centroids drawn uniformly on the [0,100] x [0,100] square
//! from a fixed ChaCha8 seed, with two planted zones: a 40-region "hot"
//! zone around the point (25,25) and a 61-region "cold" zone around
//! (75,75). Each zone is the set of m nearest regions to its anchor
//! region, so both are by construction members of the circular candidate
//! zone family over the same geometry.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::RegionTable;

const N_REGIONS: usize = 281;
const HOT_SIZE: usize = 40;
const COLD_SIZE: usize = 61;
const SEED: u64 = 281;

/// The bundled geometry plus the membership of the two planted zones.
#[derive(Debug, Clone)]
pub struct SyntheticGeometry {
    pub table: RegionTable,
    pub hot_ids: Vec<String>,
    pub cold_ids: Vec<String>,
}

/// Generate the bundled 281-region geometry. Deterministic; the planted
/// hot and cold zones are disjoint.
pub fn synthetic_geometry() -> SyntheticGeometry {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let coords: Vec<[f64; 2]> = (0..N_REGIONS)
        .map(|_| [rng.random_range(0.0..100.0), rng.random_range(0.0..100.0)])
        .collect();
    let ids: Vec<String> = (1..=N_REGIONS).map(|i| format!("r{i:03}")).collect();
    let hot = nearest_set(&coords, [25.0, 25.0], HOT_SIZE);
    let cold = nearest_set(&coords, [75.0, 75.0], COLD_SIZE);
    let table = RegionTable::new(ids.clone(), coords, vec![0.0; N_REGIONS])
        .expect("bundled geometry is valid");
    SyntheticGeometry {
        table,
        hot_ids: hot.iter().map(|&i| ids[i].clone()).collect(),
        cold_ids: cold.iter().map(|&i| ids[i].clone()).collect(),
    }
}

/// Indices of the `m` regions nearest to the region closest to `anchor`,
/// ordered by distance to that region with ties broken by index. This
/// mirrors how circular candidate zones are grown from a center region.
fn nearest_set(coords: &[[f64; 2]], anchor: [f64; 2], m: usize) -> Vec<usize> {
    let d2 = |a: [f64; 2], b: [f64; 2]| (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2);
    let center = (0..coords.len())
        .min_by(|&a, &b| d2(coords[a], anchor).total_cmp(&d2(coords[b], anchor)))
        .expect("non-empty geometry");
    let mut order: Vec<usize> = (0..coords.len()).collect();
    order.sort_by(|&a, &b| {
        d2(coords[a], coords[center])
            .total_cmp(&d2(coords[b], coords[center]))
            .then(a.cmp(&b))
    });
    order.truncate(m);
    order
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometry_is_deterministic() {
        let a = synthetic_geometry();
        let b = synthetic_geometry();
        assert_eq!(a.table, b.table);
        assert_eq!(a.hot_ids, b.hot_ids);
        assert_eq!(a.cold_ids, b.cold_ids);
    }

    #[test]
    fn planted_zones_disjoint_and_sized() {
        let g = synthetic_geometry();
        assert_eq!(g.table.len(), 281);
        assert_eq!(g.hot_ids.len(), 40);
        assert_eq!(g.cold_ids.len(), 61);
        let hot: std::collections::HashSet<_> = g.hot_ids.iter().collect();
        assert!(g.cold_ids.iter().all(|id| !hot.contains(id)));
    }

    #[test]
    fn zones_sit_near_their_anchors() {
        let g = synthetic_geometry();
        let mean = |ids: &[String]| {
            let idx = g.table.resolve_ids(ids).unwrap();
            let (sx, sy) = idx.iter().fold((0.0, 0.0), |(sx, sy), &i| {
                (sx + g.table.coords()[i][0], sy + g.table.coords()[i][1])
            });
            [sx / idx.len() as f64, sy / idx.len() as f64]
        };
        let hm = mean(&g.hot_ids);
        let cm = mean(&g.cold_ids);
        assert!((hm[0] - 25.0).abs() < 10.0 && (hm[1] - 25.0).abs() < 10.0);
        assert!((cm[0] - 75.0).abs() < 10.0 && (cm[1] - 75.0).abs() < 10.0);
    }
}
