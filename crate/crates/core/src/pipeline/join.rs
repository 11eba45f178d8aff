use std::collections::BTreeMap;
use std::io::Read;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::raw::DailySeries;
use super::{expect_header, group_of, reader};
use crate::error::{Error, Result, RowFault};
use crate::model::{Dataset, SiteGroup};
use crate::simulate::covariates_from_schedule;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Operation {
    Dredging,
    Dumping,
}

pub(crate) fn parse_date(s: &str, row: usize) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|_| Error::ParseError { row, reason: RowFault::BadDate })
}

/// `date,wind_knots`, one row per day.
pub fn read_wind<R: Read>(input: R) -> Result<BTreeMap<NaiveDate, f64>> {
    let mut r = reader(input);
    expect_header(&mut r, &["date", "wind_knots"])?;
    let mut out = BTreeMap::new();
    for (i, rec) in r.records().enumerate() {
        let row = i + 2;
        let rec = rec?;
        let bad = |reason| Error::ParseError { row, reason };
        if rec.len() < 2 || rec[0].is_empty() || rec[1].is_empty() {
            return Err(bad(RowFault::MissingField));
        }
        let date = parse_date(&rec[0], row)?;
        let v: f64 = rec[1].parse().map_err(|_| bad(RowFault::NonNumeric))?;
        if !v.is_finite() {
            return Err(bad(RowFault::NonNumeric));
        }
        if v < 0.0 {
            return Err(bad(RowFault::NegativeValue));
        }
        if out.insert(date, v).is_some() {
            return Err(bad(RowFault::Duplicate));
        }
    }
    Ok(out)
}

/// `date,operation` with operation `dredging` or `dumping` (case-insensitive).
pub fn read_operations<R: Read>(input: R) -> Result<Vec<(NaiveDate, Operation)>> {
    let mut r = reader(input);
    expect_header(&mut r, &["date", "operation"])?;
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let row = i + 2;
        let rec = rec?;
        if rec.len() < 2 || rec[0].is_empty() || rec[1].is_empty() {
            return Err(Error::ParseError { row, reason: RowFault::MissingField });
        }
        let date = parse_date(&rec[0], row)?;
        let op = match rec[1].to_ascii_lowercase().as_str() {
            "dredging" => Operation::Dredging,
            "dumping" => Operation::Dumping,
            _ => return Err(Error::ParseError { row, reason: RowFault::UnknownOperation }),
        };
        out.push((date, op));
    }
    Ok(out)
}

/// Joins daily turbidity with wind and the operations log on their common
/// date range. Sites follow the order of `sites`; metadata for sites without
/// readings is ignored.
///
/// Dumping indicators are 1 at dump sites on logged dumping days, dredging
/// indicators 1 at dredging sites on logged dredging days; wind is shared by
/// all sites. A day inside the range without wind is an error.
pub fn build_dataset(
    daily: &DailySeries,
    wind: &BTreeMap<NaiveDate, f64>,
    operations: &[(NaiveDate, Operation)],
    sites: &[(String, SiteGroup)],
) -> Result<Dataset> {
    for s in &daily.sites {
        group_of(sites, s)?;
    }
    let order: Vec<usize> = sites.iter().filter_map(|(id, _)| daily.sites.iter().position(|s| s == id)).collect();
    let groups: Vec<SiteGroup> = order.iter().map(|&k| group_of(sites, &daily.sites[k])).collect::<Result<_>>()?;
    let (Some(d0), Some(d1)) = (daily.dates.first(), daily.dates.last()) else {
        return Err(Error::NoDateOverlap);
    };
    let (Some((w0, _)), Some((w1, _))) = (wind.first_key_value(), wind.last_key_value()) else {
        return Err(Error::NoDateOverlap);
    };
    let start = (*d0).max(*w0);
    let end = (*d1).min(*w1);
    if start > end {
        return Err(Error::NoDateOverlap);
    }
    let offset = (start - *d0).num_days() as usize;
    let n = (end - start).num_days() as usize + 1;
    let dates = &daily.dates[offset..offset + n];
    let wind_t = dates
        .iter()
        .map(|d| wind.get(d).copied().ok_or_else(|| Error::MissingCovariate(format!("wind on {d}"))))
        .collect::<Result<Vec<_>>>()?;
    let ops: Vec<(bool, bool)> = dates
        .iter()
        .map(|d| {
            let on = |op| operations.iter().any(|&(od, o)| od == *d && o == op);
            (on(Operation::Dredging), on(Operation::Dumping))
        })
        .collect();
    let values = daily.values[offset..offset + n].iter().map(|row| order.iter().map(|&k| row[k]).collect()).collect();
    Dataset::new(
        values,
        covariates_from_schedule(&ops, &wind_t, &groups),
        order.iter().map(|&k| daily.sites[k].clone()).collect(),
        groups,
        dates.to_vec(),
    )
}
