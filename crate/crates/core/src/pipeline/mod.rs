//! Raw sensor ingestion, daily aggregation, covariate alignment and the
//! dataset file format.

mod io;
mod join;
mod raw;

pub use io::{load_dataset, read_dataset, read_sites, save_dataset, sites_path, write_dataset, write_sites};
pub use join::{build_dataset, read_operations, read_wind, Operation};
pub use raw::{aggregate_daily, load_raw, read_raw, DailySeries, RawRecord};

use std::fs::File;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::SiteGroup;

fn group_of(sites: &[(String, SiteGroup)], id: &str) -> Result<SiteGroup> {
    sites.iter().find(|(s, _)| s == id).map(|(_, g)| *g).ok_or_else(|| Error::UnclassifiedSite(id.to_string()))
}

fn open(path: &Path) -> Result<File> {
    Ok(File::open(path)?)
}

fn reader<R: std::io::Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(input)
}

/// Checks the header against `expected` (row 1).
fn expect_header<R: std::io::Read>(r: &mut csv::Reader<R>, expected: &[&str]) -> Result<()> {
    let h = r.headers()?;
    if h.len() != expected.len() || h.iter().zip(expected).any(|(a, b)| a != *b) {
        return Err(Error::ParseError { row: 1, reason: crate::error::RowFault::MissingField });
    }
    Ok(())
}
