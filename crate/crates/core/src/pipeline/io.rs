use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;

use super::join::parse_date;
use super::{expect_header, group_of, open, reader};
use crate::error::{Error, Result, RowFault};
use crate::model::{Covariate, Dataset, SiteGroup};
use crate::stats::Mat;

const COLUMNS: [&str; 6] = ["date", "site", "turbidity_ntu", "dumping", "dredging", "wind_knots"];
const COVARIATES: [&str; 3] = ["dumping", "dredging", "wind"];

/// Long-format CSV, one row per (date, site) in dataset order; missing
/// turbidity is an empty field. Needs the dumping, dredging and wind covariates.
pub fn write_dataset<W: Write>(data: &Dataset, out: W) -> Result<()> {
    let cov: Vec<&Covariate<f64>> = COVARIATES
        .iter()
        .map(|name| {
            data.covariates()
                .iter()
                .find(|c| c.name == *name)
                .ok_or_else(|| Error::InvalidDataset(format!("dataset file needs a {name} covariate")))
        })
        .collect::<Result<_>>()?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COLUMNS)?;
    for t in 0..data.n_time() {
        for s in 0..data.n_sites() {
            let y = data.value(t, s).map_or_else(String::new, |v| v.to_string());
            w.write_record([
                data.dates()[t].to_string(),
                data.site_ids()[s].clone(),
                y,
                cov[0].values[(t, s)].to_string(),
                cov[1].values[(t, s)].to_string(),
                cov[2].values[(t, s)].to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `site,group` metadata for [`write_dataset`] output.
pub fn write_sites<W: Write>(data: &Dataset, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["site", "group"])?;
    for (id, g) in data.site_ids().iter().zip(data.site_groups()) {
        w.write_record([id.as_str(), g.as_str()])?;
    }
    w.flush()?;
    Ok(())
}

/// Site metadata in file order; that order is the dataset's site order.
pub fn read_sites<R: Read>(input: R) -> Result<Vec<(String, SiteGroup)>> {
    let mut r = reader(input);
    expect_header(&mut r, &["site", "group"])?;
    let mut out: Vec<(String, SiteGroup)> = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let row = i + 2;
        let rec = rec?;
        if rec.len() < 2 || rec[0].is_empty() {
            return Err(Error::ParseError { row, reason: RowFault::MissingField });
        }
        let g = SiteGroup::parse(&rec[1]).ok_or(Error::ParseError { row, reason: RowFault::UnknownGroup })?;
        if out.iter().any(|(id, _)| id == &rec[0]) {
            return Err(Error::ParseError { row, reason: RowFault::Duplicate });
        }
        out.push((rec[0].to_string(), g));
    }
    Ok(out)
}

/// Reads [`write_dataset`] output. Sites keep their order of first
/// appearance; every (date, site) pair must be present exactly once.
pub fn read_dataset<R: Read>(input: R, sites: &[(String, SiteGroup)]) -> Result<Dataset> {
    let mut r = reader(input);
    expect_header(&mut r, &COLUMNS)?;
    let mut site_ids: Vec<String> = Vec::new();
    let mut dates: Vec<NaiveDate> = Vec::new();
    let mut rows: HashMap<(NaiveDate, usize), (Option<f64>, [f64; 3])> = HashMap::new();
    for (i, rec) in r.records().enumerate() {
        let row = i + 2;
        let rec = rec?;
        let bad = |reason| Error::ParseError { row, reason };
        if rec.len() < 6 || rec[0].is_empty() || rec[1].is_empty() {
            return Err(bad(RowFault::MissingField));
        }
        let date = parse_date(&rec[0], row)?;
        let num = |k: usize| -> Result<f64> {
            let v: f64 = rec[k].parse().map_err(|_| bad(RowFault::NonNumeric))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(bad(RowFault::NonNumeric))
            }
        };
        // Model-ready values: simulated series may dip below zero.
        let y = if rec[2].is_empty() { None } else { Some(num(2)?) };
        let x = [num(3)?, num(4)?, num(5)?];
        let s = match site_ids.iter().position(|id| id == &rec[1]) {
            Some(s) => s,
            None => {
                site_ids.push(rec[1].to_string());
                site_ids.len() - 1
            }
        };
        if dates.last().is_none_or(|d| *d != date) && !dates.contains(&date) {
            dates.push(date);
        }
        if rows.insert((date, s), (y, x)).is_some() {
            return Err(bad(RowFault::Duplicate));
        }
    }
    if rows.is_empty() {
        return Err(Error::EmptyFile);
    }
    dates.sort();
    let (n_t, n_s) = (dates.len(), site_ids.len());
    if rows.len() != n_t * n_s {
        return Err(Error::InvalidDataset(format!("{} rows for {n_t} dates x {n_s} sites", rows.len())));
    }
    let groups = site_ids.iter().map(|s| group_of(sites, s)).collect::<Result<Vec<_>>>()?;
    let mut y = vec![vec![None; n_s]; n_t];
    let mut x = [Mat::zeros(n_t, n_s), Mat::zeros(n_t, n_s), Mat::zeros(n_t, n_s)];
    for (t, d) in dates.iter().enumerate() {
        for s in 0..n_s {
            let (v, cov) = rows[&(*d, s)];
            y[t][s] = v;
            for j in 0..3 {
                x[j][(t, s)] = cov[j];
            }
        }
    }
    let covariates = x.into_iter().zip(COVARIATES).map(|(values, name)| Covariate { name: name.into(), values }).collect();
    Dataset::new(y, covariates, site_ids, groups, dates)
}

/// Sidecar path for site groups: `data.csv` → `data.sites.csv`.
pub fn sites_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.sites.csv"))
}

/// Writes the dataset and its site sidecar.
pub fn save_dataset(data: &Dataset, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_dataset(data, &mut buf)?;
    std::fs::write(path, buf)?;
    let mut buf = Vec::new();
    write_sites(data, &mut buf)?;
    std::fs::write(sites_path(path), buf)?;
    Ok(())
}

/// Loads a dataset; site groups come from `sites` or the sidecar file.
pub fn load_dataset(path: &Path, sites: Option<&[(String, SiteGroup)]>) -> Result<Dataset> {
    let owned;
    let sites = match sites {
        Some(s) => s,
        None => {
            owned = read_sites(open(&sites_path(path))?)?;
            &owned[..]
        }
    };
    read_dataset(open(path)?, sites)
}
