//! CSV ingestion and export for region tables.
//!
//! The default column layout is `id,x,y,outcome` with optional `baseline`,
//! `var` and any number of `cov_*` columns; a `t` column switches the file
//! to space-time layout. Header names are remappable through [`CsvSchema`].

use std::collections::BTreeMap;
use std::path::Path;

use crate::data::{RegionTable, SpaceTimeTable};
use crate::error::{Error, Result};

/// Header-name mapping for region CSV files.
#[derive(Debug, Clone)]
pub struct CsvSchema {
    pub id: String,
    pub x: String,
    pub y: String,
    pub outcome: String,
    pub baseline: String,
    pub variance: String,
    pub time: String,
    /// Columns whose name starts with this prefix are read as covariates,
    /// in header order.
    pub covariate_prefix: String,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            id: "id".into(),
            x: "x".into(),
            y: "y".into(),
            outcome: "outcome".into(),
            baseline: "baseline".into(),
            variance: "var".into(),
            time: "t".into(),
            covariate_prefix: "cov_".into(),
        }
    }
}

struct ColumnMap {
    id: usize,
    x: usize,
    y: usize,
    outcome: usize,
    baseline: Option<usize>,
    variance: Option<usize>,
    time: Option<usize>,
    covariates: Vec<(String, usize)>,
}

impl ColumnMap {
    fn from_headers(headers: &csv::StringRecord, schema: &CsvSchema) -> Result<Self> {
        let find = |name: &str| headers.iter().position(|h| h == name);
        let require = |name: &str| {
            find(name).ok_or_else(|| Error::MissingColumn {
                column: name.to_string(),
            })
        };
        let covariates = headers
            .iter()
            .enumerate()
            .filter(|(_, h)| h.starts_with(schema.covariate_prefix.as_str()))
            .map(|(i, h)| (h.to_string(), i))
            .collect();
        Ok(Self {
            id: require(&schema.id)?,
            x: require(&schema.x)?,
            y: require(&schema.y)?,
            outcome: require(&schema.outcome)?,
            baseline: find(&schema.baseline),
            variance: find(&schema.variance),
            time: find(&schema.time),
            covariates,
        })
    }
}

fn parse_field(record: &csv::StringRecord, idx: usize, row: usize, column: &str) -> Result<f64> {
    let raw = record.get(idx).unwrap_or("");
    raw.trim().parse::<f64>().map_err(|_| Error::NonNumeric {
        row,
        column: column.to_string(),
    })
}

struct RawRows {
    ids: Vec<String>,
    coords: Vec<[f64; 2]>,
    outcome: Vec<f64>,
    baseline: Option<Vec<f64>>,
    variance: Option<Vec<f64>>,
    covariates: Vec<(String, Vec<f64>)>,
    time: Option<Vec<i64>>,
}

fn read_rows(path: &Path, schema: &CsvSchema) -> Result<RawRows> {
    let mut reader = csv::Reader::from_path(path)?;
    let cols = ColumnMap::from_headers(reader.headers()?, schema)?;
    let mut out = RawRows {
        ids: Vec::new(),
        coords: Vec::new(),
        outcome: Vec::new(),
        baseline: cols.baseline.map(|_| Vec::new()),
        variance: cols.variance.map(|_| Vec::new()),
        covariates: cols
            .covariates
            .iter()
            .map(|(n, _)| (n.clone(), Vec::new()))
            .collect(),
        time: cols.time.map(|_| Vec::new()),
    };
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = i + 1; // 1-based data row, header not counted
        out.ids
            .push(record.get(cols.id).unwrap_or("").trim().to_string());
        let x = parse_field(&record, cols.x, row, &schema.x)?;
        let y = parse_field(&record, cols.y, row, &schema.y)?;
        out.coords.push([x, y]);
        out.outcome
            .push(parse_field(&record, cols.outcome, row, &schema.outcome)?);
        if let (Some(acc), Some(idx)) = (out.baseline.as_mut(), cols.baseline) {
            acc.push(parse_field(&record, idx, row, &schema.baseline)?);
        }
        if let (Some(acc), Some(idx)) = (out.variance.as_mut(), cols.variance) {
            acc.push(parse_field(&record, idx, row, &schema.variance)?);
        }
        for ((name, acc), (_, idx)) in out.covariates.iter_mut().zip(&cols.covariates) {
            acc.push(parse_field(&record, *idx, row, name)?);
        }
        if let (Some(acc), Some(idx)) = (out.time.as_mut(), cols.time) {
            let v = parse_field(&record, idx, row, &schema.time)?;
            if v.fract() != 0.0 || v < 1.0 {
                return Err(Error::NonNumeric {
                    row,
                    column: schema.time.clone(),
                });
            }
            acc.push(v as i64);
        }
    }
    Ok(out)
}

fn assemble(rows: RawRows) -> Result<RegionTable> {
    let mut table = RegionTable::new(rows.ids, rows.coords, rows.outcome)?;
    if let Some(b) = rows.baseline {
        table = table.with_baseline(b)?;
    }
    if let Some(v) = rows.variance {
        table = table.with_variance(v)?;
    }
    if !rows.covariates.is_empty() {
        let (names, cols) = rows.covariates.into_iter().unzip();
        table = table.with_covariates(names, cols)?;
    }
    Ok(table)
}

/// Load a purely spatial region table. A `t` column, if present, must be
/// constant (single-slice data); use [`load_space_time`] otherwise.
pub fn load_regions(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<RegionTable> {
    let rows = read_rows(path.as_ref(), schema)?;
    if let Some(t) = &rows.time {
        if t.iter().any(|&v| v != t[0]) {
            return Err(Error::InvalidData(
                "file has multiple time periods; load it as space-time data".into(),
            ));
        }
    }
    assemble(rows)
}

/// Load space-time data: rows carry a `t` column with values `1..=T`, and
/// every period must list the same region ids.
pub fn load_space_time(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<SpaceTimeTable> {
    let rows = read_rows(path.as_ref(), schema)?;
    let time = rows.time.clone().ok_or_else(|| Error::MissingColumn {
        column: schema.time.clone(),
    })?;
    let mut by_period: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (i, &t) in time.iter().enumerate() {
        by_period.entry(t).or_default().push(i);
    }
    let expected: Vec<i64> = (1..=by_period.len() as i64).collect();
    let found: Vec<i64> = by_period.keys().copied().collect();
    if found != expected {
        return Err(Error::InvalidData(format!(
            "time periods must be 1..=T, found {found:?}"
        )));
    }
    let mut slices = Vec::with_capacity(by_period.len());
    for idx in by_period.values() {
        let take = |src: &[f64]| idx.iter().map(|&i| src[i]).collect::<Vec<f64>>();
        let mut slice = RegionTable::new(
            idx.iter().map(|&i| rows.ids[i].clone()).collect(),
            idx.iter().map(|&i| rows.coords[i]).collect(),
            take(&rows.outcome),
        )?;
        if let Some(b) = &rows.baseline {
            slice = slice.with_baseline(take(b))?;
        }
        if let Some(v) = &rows.variance {
            slice = slice.with_variance(take(v))?;
        }
        if !rows.covariates.is_empty() {
            let names = rows.covariates.iter().map(|(n, _)| n.clone()).collect();
            let cols = rows.covariates.iter().map(|(_, c)| take(c)).collect();
            slice = slice.with_covariates(names, cols)?;
        }
        slices.push(slice);
    }
    SpaceTimeTable::new(slices)
}

/// Write a region table using the schema's header names. Loading the
/// result with the same schema reproduces the table exactly (floats are
/// printed with round-trip precision).
pub fn save_regions(
    path: impl AsRef<Path>,
    table: &RegionTable,
    schema: &CsvSchema,
) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    let mut header = vec![
        schema.id.clone(),
        schema.x.clone(),
        schema.y.clone(),
        schema.outcome.clone(),
        schema.baseline.clone(),
    ];
    if table.variance().is_some() {
        header.push(schema.variance.clone());
    }
    header.extend(table.covariate_names().iter().cloned());
    writer.write_record(&header)?;
    let fmt = |v: f64| {
        let mut buf = ryu_format(v);
        if buf.ends_with(".0") {
            buf.truncate(buf.len() - 2);
        }
        buf
    };
    for i in 0..table.len() {
        let mut record = vec![
            table.ids()[i].clone(),
            fmt(table.coords()[i][0]),
            fmt(table.coords()[i][1]),
            fmt(table.outcome()[i]),
            fmt(table.baseline()[i]),
        ];
        if let Some(v) = table.variance() {
            record.push(fmt(v[i]));
        }
        for col in table.covariates() {
            record.push(fmt(col[i]));
        }
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

/// Shortest decimal representation that parses back to the same f64.
fn ryu_format(v: f64) -> String {
    let mut s = format!("{v}");
    if s.parse::<f64>() != Ok(v) {
        s = format!("{v:?}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        use std::io::Write;
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn load_minimal() {
        let f = write_temp("id,x,y,outcome\na,0,0,1.5\nb,1,0,2.5\n");
        let t = load_regions(f.path(), &CsvSchema::default()).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.outcome(), &[1.5, 2.5]);
        assert_eq!(t.baseline(), &[1.0, 1.0]);
        assert!(t.variance().is_none());
    }

    #[test]
    fn load_with_optional_columns() {
        let f = write_temp(
            "id,x,y,outcome,baseline,var,cov_age,cov_income\n\
             a,0,0,3,2,1,30,55.5\n\
             b,1,0,1,1,2,40,42\n",
        );
        let t = load_regions(f.path(), &CsvSchema::default()).unwrap();
        assert_eq!(t.baseline(), &[2.0, 1.0]);
        assert_eq!(t.variance().unwrap(), &[1.0, 2.0]);
        assert_eq!(t.covariate_names(), &["cov_age", "cov_income"]);
        assert_eq!(t.covariates()[1], &[55.5, 42.0]);
    }

    #[test]
    fn missing_column_named() {
        let f = write_temp("id,x,y\na,0,0\n");
        match load_regions(f.path(), &CsvSchema::default()) {
            Err(Error::MissingColumn { column }) => assert_eq!(column, "outcome"),
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn non_numeric_reports_row_and_column() {
        let f = write_temp("id,x,y,outcome\na,0,0,1\nb,1,oops,2\n");
        match load_regions(f.path(), &CsvSchema::default()) {
            Err(Error::NonNumeric { row, column }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "y");
            }
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn non_positive_baseline_rejected() {
        let f = write_temp("id,x,y,outcome,baseline\na,0,0,1,1\nb,1,0,2,0\n");
        let err = load_regions(f.path(), &CsvSchema::default()).unwrap_err();
        assert_eq!(err.to_string(), "non-positive baseline, row 2");
    }

    #[test]
    fn round_trip_identity() {
        let table = RegionTable::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![[0.25, 0.5], [1.0 / 3.0, 2.0], [5.0, 6.0]],
            vec![0.1 + 0.2, -3.5, 0.0],
        )
        .unwrap()
        .with_baseline(vec![1.5, 2.0, 0.75])
        .unwrap()
        .with_variance(vec![1.0, 0.5, 2.0])
        .unwrap()
        .with_covariates(vec!["cov_a".into()], vec![vec![1.0, -2.0, 1e-17]])
        .unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        save_regions(f.path(), &table, &CsvSchema::default()).unwrap();
        let back = load_regions(f.path(), &CsvSchema::default()).unwrap();
        assert_eq!(table, back);
    }

    #[test]
    fn space_time_layout() {
        let f = write_temp(
            "id,x,y,outcome,t\n\
             a,0,0,1,1\nb,1,0,2,1\n\
             a,0,0,3,2\nb,1,0,4,2\n",
        );
        let st = load_space_time(f.path(), &CsvSchema::default()).unwrap();
        assert_eq!(st.periods(), 2);
        assert_eq!(st.slice(0).outcome(), &[1.0, 2.0]);
        assert_eq!(st.slice(1).outcome(), &[3.0, 4.0]);
        // The same file is rejected by the spatial loader.
        assert!(load_regions(f.path(), &CsvSchema::default()).is_err());
    }

    #[test]
    fn space_time_gap_in_periods() {
        let f = write_temp("id,x,y,outcome,t\na,0,0,1,1\nb,1,0,2,1\na,0,0,3,3\nb,1,0,4,3\n");
        assert!(load_space_time(f.path(), &CsvSchema::default()).is_err());
    }

    #[test]
    fn custom_schema_names() {
        let f = write_temp("fips,lon,lat,rate\nX,0,0,1\nY,1,1,2\n");
        let schema = CsvSchema {
            id: "fips".into(),
            x: "lon".into(),
            y: "lat".into(),
            outcome: "rate".into(),
            ..CsvSchema::default()
        };
        let t = load_regions(f.path(), &schema).unwrap();
        assert_eq!(t.ids(), &["X", "Y"]);
    }
}
