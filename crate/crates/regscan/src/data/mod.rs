//! Domain data model, file ingestion, and the synthetic scenario generator.
//!
//! All types are immutable after construction and safe to share across
//! concurrent readers. Randomness everywhere in this crate comes from the
//! ChaCha8 stream cipher (`rand_chacha::ChaCha8Rng`), a named counter-based
//! generator: streams are reproducible across platforms and thread counts,
//! and independent substreams derive from `(seed, stream index)`.

mod io;
mod synthetic;

pub use io::{load_regions, load_space_time, save_regions, CsvSchema};
pub use synthetic::{synthetic_geometry, SyntheticGeometry};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::Approach;

/// Per-region observations: identifier, planar or lon/lat coordinates,
/// outcome, baseline (offset / expected count), optional fixed variance,
/// and optional covariates.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionTable {
    ids: Vec<String>,
    coords: Vec<[f64; 2]>,
    outcome: Vec<f64>,
    baseline: Vec<f64>,
    variance: Option<Vec<f64>>,
    /// Column-major: `covariates[j][i]` is covariate j for region i.
    covariates: Vec<Vec<f64>>,
    cov_names: Vec<String>,
}

impl RegionTable {
    /// Build a table with baseline 1.0, no variance column and no
    /// covariates. Requires at least two regions and distinct ids.
    pub fn new(ids: Vec<String>, coords: Vec<[f64; 2]>, outcome: Vec<f64>) -> Result<Self> {
        let n = ids.len();
        if n < 2 {
            return Err(Error::InvalidData(format!(
                "need at least 2 regions, got {n}"
            )));
        }
        if coords.len() != n || outcome.len() != n {
            return Err(Error::InvalidData(
                "ids, coords and outcome must have equal length".into(),
            ));
        }
        let mut seen = std::collections::HashSet::with_capacity(n);
        for (row, id) in ids.iter().enumerate() {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateId {
                    row: row + 1,
                    id: id.clone(),
                });
            }
        }
        for (row, v) in outcome.iter().chain(coords.iter().flatten()).enumerate() {
            if !v.is_finite() {
                return Err(Error::InvalidData(format!("non-finite value near row {row}")));
            }
        }
        Ok(Self {
            ids,
            coords,
            outcome,
            baseline: vec![1.0; n],
            variance: None,
            covariates: Vec::new(),
            cov_names: Vec::new(),
        })
    }

    pub fn with_baseline(mut self, baseline: Vec<f64>) -> Result<Self> {
        if baseline.len() != self.len() {
            return Err(Error::InvalidData("baseline length mismatch".into()));
        }
        for (row, &b) in baseline.iter().enumerate() {
            if !(b > 0.0) || !b.is_finite() {
                return Err(Error::NonPositiveBaseline { row: row + 1 });
            }
        }
        self.baseline = baseline;
        Ok(self)
    }

    pub fn with_variance(mut self, variance: Vec<f64>) -> Result<Self> {
        if variance.len() != self.len() {
            return Err(Error::InvalidData("variance length mismatch".into()));
        }
        for (row, &v) in variance.iter().enumerate() {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::NonPositiveVariance { row: row + 1 });
            }
        }
        self.variance = Some(variance);
        Ok(self)
    }

    /// Attach covariate columns (column-major), keeping their names for
    /// reporting and round-trip serialization.
    pub fn with_covariates(mut self, names: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::InvalidData("covariate names/columns mismatch".into()));
        }
        for col in &columns {
            if col.len() != self.len() {
                return Err(Error::InvalidData("covariate column length mismatch".into()));
            }
            if col.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidData("non-finite covariate".into()));
            }
        }
        self.cov_names = names;
        self.covariates = columns;
        Ok(self)
    }

    /// Same geometry and baselines with a replacement outcome vector.
    /// Used by the simulator and by Monte Carlo replication.
    pub fn with_outcome(&self, outcome: Vec<f64>) -> Result<Self> {
        if outcome.len() != self.len() {
            return Err(Error::InvalidData("outcome length mismatch".into()));
        }
        let mut t = self.clone();
        t.outcome = outcome;
        Ok(t)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    pub fn outcome(&self) -> &[f64] {
        &self.outcome
    }

    pub fn baseline(&self) -> &[f64] {
        &self.baseline
    }

    pub fn variance(&self) -> Option<&[f64]> {
        self.variance.as_deref()
    }

    pub fn covariate_count(&self) -> usize {
        self.covariates.len()
    }

    pub fn covariates(&self) -> &[Vec<f64>] {
        &self.covariates
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.cov_names
    }

    /// Row index of a region id.
    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }

    /// Resolve a list of region ids to row indices, erroring on unknown ids.
    pub fn resolve_ids(&self, ids: &[String]) -> Result<Vec<usize>> {
        let lookup: std::collections::HashMap<&str, usize> = self
            .ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i))
            .collect();
        ids.iter()
            .map(|id| {
                lookup
                    .get(id.as_str())
                    .copied()
                    .ok_or_else(|| Error::UnknownRegion(id.clone()))
            })
            .collect()
    }
}

/// One [`RegionTable`] per time index `t = 1..=T` over a constant region
/// set, with identical region ordering at every `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeTable {
    slices: Vec<RegionTable>,
}

impl SpaceTimeTable {
    pub fn new(slices: Vec<RegionTable>) -> Result<Self> {
        if slices.is_empty() {
            return Err(Error::InvalidData("need at least one time slice".into()));
        }
        let first = slices[0].ids();
        for (t, s) in slices.iter().enumerate().skip(1) {
            if s.ids() != first {
                return Err(Error::InvalidData(format!(
                    "region ids at time {} differ from time 1",
                    t + 1
                )));
            }
        }
        Ok(Self { slices })
    }

    pub fn periods(&self) -> usize {
        self.slices.len()
    }

    pub fn regions(&self) -> usize {
        self.slices[0].len()
    }

    pub fn slice(&self, t: usize) -> &RegionTable {
        &self.slices[t]
    }

    pub fn slices(&self) -> &[RegionTable] {
        &self.slices
    }

    /// Flatten to a single table of `N*T` cells in slice-major order
    /// (all regions of t=1 first). Cell ids are `"<region>@<t>"` with t
    /// counted from 1; cell index = `t0 * N + i` for zero-based `t0`.
    pub fn flatten(&self) -> RegionTable {
        self.flatten_with(|s| s.outcome().to_vec(), |s| s.baseline().to_vec())
    }

    /// Flatten with per-slice outcome/baseline transforms. Used by the
    /// space-time scan to fold per-time null intercepts into the cells.
    pub(crate) fn flatten_with(
        &self,
        outcome_of: impl Fn(&RegionTable) -> Vec<f64>,
        baseline_of: impl Fn(&RegionTable) -> Vec<f64>,
    ) -> RegionTable {
        let n = self.regions();
        let t = self.periods();
        let mut ids = Vec::with_capacity(n * t);
        let mut coords = Vec::with_capacity(n * t);
        let mut outcome = Vec::with_capacity(n * t);
        let mut baseline = Vec::with_capacity(n * t);
        let mut variance = self.slices[0].variance().map(|_| Vec::with_capacity(n * t));
        for (t0, s) in self.slices.iter().enumerate() {
            for (i, id) in s.ids().iter().enumerate() {
                ids.push(format!("{}@{}", id, t0 + 1));
                coords.push(s.coords()[i]);
            }
            outcome.extend_from_slice(&outcome_of(s));
            baseline.extend_from_slice(&baseline_of(s));
            if let (Some(acc), Some(v)) = (variance.as_mut(), s.variance()) {
                acc.extend_from_slice(v);
            }
        }
        let mut flat = RegionTable::new(ids, coords, outcome)
            .and_then(|x| x.with_baseline(baseline))
            .expect("flattening preserves table invariants");
        if let Some(v) = variance {
            flat = flat.with_variance(v).expect("variance already validated");
        }
        flat
    }
}

/// Parameters of the planted hot/cold simulation scheme.
///
/// Outcomes are drawn from a normal distribution with mean
/// `alpha_pop + theta * Z` in population mode and `theta * Z` in
/// expectation mode, where `theta` is `theta_hot` inside the hot zone,
/// `theta_cold` inside the cold zone and 0 elsewhere. Draws are
/// untruncated reals: a cold spot with a negative mean produces negative
/// outcomes rather than being clipped at zero.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub mode: Approach,
    pub hot_zone: Vec<String>,
    pub cold_zone: Vec<String>,
    pub alpha_pop: f64,
    pub theta_hot: f64,
    pub theta_cold: f64,
    pub sigma: f64,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) {
            return Err(Error::InvalidConfig("sigma must be positive".into()));
        }
        let hot: std::collections::HashSet<_> = self.hot_zone.iter().collect();
        if self.cold_zone.iter().any(|id| hot.contains(id)) {
            return Err(Error::InvalidConfig(
                "hot_zone and cold_zone must be disjoint".into(),
            ));
        }
        Ok(())
    }

    /// Parse from the key-value scenario file (TOML with exactly the
    /// field names of this struct).
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: ScenarioSpec =
            toml::from_str(text).map_err(|e| Error::InvalidConfig(format!("scenario: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }
}

/// Draw a simulated outcome vector over `geometry` per `spec`.
///
/// Deterministic given `spec.seed`: two calls produce bitwise-identical
/// outcome vectors. Region order follows the geometry table.
pub fn simulate_scenario(geometry: &RegionTable, spec: &ScenarioSpec) -> Result<RegionTable> {
    spec.validate()?;
    let hot = geometry.resolve_ids(&spec.hot_zone)?;
    let cold = geometry.resolve_ids(&spec.cold_zone)?;
    let n = geometry.len();
    let mut mean = vec![0.0; n];
    if spec.mode == Approach::Population {
        mean.iter_mut().for_each(|m| *m = spec.alpha_pop);
    }
    for &i in &hot {
        mean[i] += spec.theta_hot;
    }
    for &i in &cold {
        mean[i] += spec.theta_cold;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.sigma)
        .map_err(|e| Error::InvalidConfig(format!("normal: {e}")))?;
    let outcome: Vec<f64> = mean.iter().map(|m| m + noise.sample(&mut rng)).collect();
    geometry.with_outcome(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geometry(n: usize) -> RegionTable {
        let ids = (0..n).map(|i| format!("r{i}")).collect();
        let coords = (0..n).map(|i| [i as f64, 0.0]).collect();
        RegionTable::new(ids, coords, vec![0.0; n]).unwrap()
    }

    fn spec() -> ScenarioSpec {
        ScenarioSpec {
            mode: Approach::Population,
            hot_zone: vec!["r0".into(), "r1".into()],
            cold_zone: vec!["r2".into()],
            alpha_pop: 5.0,
            theta_hot: 5.0,
            theta_cold: -5.0,
            sigma: 0.5,
            seed: 7,
        }
    }

    #[test]
    fn duplicate_ids_rejected() {
        let err = RegionTable::new(
            vec!["a".into(), "a".into()],
            vec![[0.0, 0.0], [1.0, 0.0]],
            vec![1.0, 2.0],
        )
        .unwrap_err();
        assert!(matches!(err, Error::DuplicateId { row: 2, .. }));
    }

    #[test]
    fn simulate_is_deterministic() {
        let g = geometry(6);
        let a = simulate_scenario(&g, &spec()).unwrap();
        let b = simulate_scenario(&g, &spec()).unwrap();
        assert_eq!(a.outcome(), b.outcome());
    }

    #[test]
    fn simulate_population_means() {
        let g = geometry(6);
        let s = spec();
        let y = simulate_scenario(&g, &s).unwrap();
        // alpha + theta_hot = 10 inside hot, alpha + theta_cold = 0 in cold.
        assert!((y.outcome()[0] - 10.0).abs() < 3.0);
        assert!((y.outcome()[2] - 0.0).abs() < 3.0);
        assert!((y.outcome()[4] - 5.0).abs() < 3.0);
    }

    #[test]
    fn simulate_degenerate_noise_expectation() {
        let g = geometry(5);
        let mut s = spec();
        s.mode = Approach::Expectation;
        s.sigma = 1e-9;
        let y = simulate_scenario(&g, &s).unwrap();
        assert!((y.outcome()[0] - 5.0).abs() < 1e-6);
        assert!((y.outcome()[2] + 5.0).abs() < 1e-6);
        assert!(y.outcome()[4].abs() < 1e-6);
    }

    #[test]
    fn simulate_hot_zone_sample_mean() {
        // Sample mean inside the hot zone converges to alpha + theta_hot;
        // checked at 4*sigma/sqrt(n).
        let n = 400;
        let g = geometry(n);
        let mut s = spec();
        s.hot_zone = (0..200).map(|i| format!("r{i}")).collect();
        s.cold_zone = vec![];
        let y = simulate_scenario(&g, &s).unwrap();
        let m: f64 = y.outcome()[..200].iter().sum::<f64>() / 200.0;
        assert!((m - 10.0).abs() < 4.0 * s.sigma / (200f64).sqrt());
    }

    #[test]
    fn simulate_unknown_zone_id() {
        let g = geometry(4);
        let mut s = spec();
        s.hot_zone = vec!["nope".into()];
        assert!(matches!(
            simulate_scenario(&g, &s),
            Err(Error::UnknownRegion(_))
        ));
    }

    #[test]
    fn scenario_toml_round_trip() {
        let text = r#"
mode = "expectation"
hot_zone = ["a", "b"]
cold_zone = ["c"]
alpha_pop = 5.0
theta_hot = 5.0
theta_cold = -5.0
sigma = 0.5
seed = 42
"#;
        let s = ScenarioSpec::from_toml(text).unwrap();
        assert_eq!(s.mode, Approach::Expectation);
        assert_eq!(s.hot_zone.len(), 2);
        assert_eq!(s.seed, 42);
    }

    #[test]
    fn scenario_overlapping_zones_rejected() {
        let mut s = spec();
        s.cold_zone = vec!["r0".into()];
        assert!(s.validate().is_err());
    }

    #[test]
    fn space_time_requires_matching_ids() {
        let a = geometry(3);
        let b = {
            let ids = vec!["x".into(), "y".into(), "z".into()];
            let coords = vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]];
            RegionTable::new(ids, coords, vec![0.0; 3]).unwrap()
        };
        assert!(SpaceTimeTable::new(vec![a.clone(), b]).is_err());
        let st = SpaceTimeTable::new(vec![a.clone(), a]).unwrap();
        assert_eq!(st.periods(), 2);
        let flat = st.flatten();
        assert_eq!(flat.len(), 6);
        assert_eq!(flat.ids()[0], "r0@1");
        assert_eq!(flat.ids()[3], "r0@2");
    }
}
