use std::collections::{BTreeMap, HashSet};
use std::io::Read;
use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{expect_header, open, reader};
use crate::error::{Error, Result, RowFault};

/// One sensor reading.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawRecord {
    pub timestamp: DateTime<Utc>,
    pub site: String,
    pub turbidity: f64,
}

/// Parses RFC 3339 (any offset, converted to UTC) or a naive
/// `YYYY-MM-DD[T ]HH:MM[:SS]` taken as UTC.
fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.with_timezone(&Utc));
    }
    ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"]
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
        .map(|t| t.and_utc())
}

/// Reads `timestamp,site,turbidity_ntu` records sorted by site, then time.
/// Row numbers in errors count the header as row 1.
pub fn read_raw<R: Read>(input: R) -> Result<Vec<RawRecord>> {
    let mut r = reader(input);
    expect_header(&mut r, &["timestamp", "site", "turbidity_ntu"])?;
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, rec) in r.records().enumerate() {
        let row = i + 2;
        let rec = rec?;
        let bad = |reason| Error::ParseError { row, reason };
        if rec.len() < 3 || rec.iter().take(3).any(str::is_empty) {
            return Err(bad(RowFault::MissingField));
        }
        let timestamp = parse_timestamp(&rec[0]).ok_or(bad(RowFault::BadTimestamp))?;
        let turbidity: f64 = rec[2].parse().map_err(|_| bad(RowFault::NonNumeric))?;
        if !turbidity.is_finite() {
            return Err(bad(RowFault::NonNumeric));
        }
        if turbidity < 0.0 {
            return Err(bad(RowFault::NegativeValue));
        }
        let site = rec[1].to_string();
        if !seen.insert((site.clone(), timestamp)) {
            return Err(bad(RowFault::Duplicate));
        }
        out.push(RawRecord { timestamp, site, turbidity });
    }
    if out.is_empty() {
        return Err(Error::EmptyFile);
    }
    out.sort_by(|a, b| a.site.cmp(&b.site).then(a.timestamp.cmp(&b.timestamp)));
    Ok(out)
}

pub fn load_raw(path: &Path) -> Result<Vec<RawRecord>> {
    read_raw(open(path)?)
}

/// Daily means on the full date grid, `values[t][s]` (`None` when a site has
/// fewer than the minimum number of readings that day).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DailySeries {
    pub dates: Vec<NaiveDate>,
    pub sites: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
    pub counts: Vec<Vec<usize>>,
}

/// Arithmetic mean of each UTC calendar day's readings per site. Sites are
/// sorted by name; the grid spans the earliest to the latest date of any site.
/// `min_readings` of 0 is treated as 1.
pub fn aggregate_daily(records: &[RawRecord], min_readings: usize) -> DailySeries {
    let min_readings = min_readings.max(1);
    let mut acc: BTreeMap<(String, NaiveDate), (f64, usize)> = BTreeMap::new();
    for r in records {
        let e = acc.entry((r.site.clone(), r.timestamp.date_naive())).or_insert((0.0, 0));
        e.0 += r.turbidity;
        e.1 += 1;
    }
    let mut sites: Vec<String> = acc.keys().map(|(s, _)| s.clone()).collect();
    sites.dedup();
    let (Some(first), Some(last)) = (acc.keys().map(|k| k.1).min(), acc.keys().map(|k| k.1).max()) else {
        return DailySeries { dates: vec![], sites, values: vec![], counts: vec![] };
    };
    let dates: Vec<NaiveDate> = first.iter_days().take_while(|d| *d <= last).collect();
    let mut values = vec![vec![None; sites.len()]; dates.len()];
    let mut counts = vec![vec![0; sites.len()]; dates.len()];
    for ((site, date), (sum, n)) in acc {
        let s = sites.binary_search(&site).expect("site collected above");
        let t = (date - first).num_days() as usize;
        counts[t][s] = n;
        if n >= min_readings {
            values[t][s] = Some(sum / n as f64);
        }
    }
    DailySeries { dates, sites, values, counts }
}
