use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::stats::Mat;

/// Operational role of a site.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SiteGroup {
    DredgingSite,
    DumpSite,
}

impl SiteGroup {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dredgingsite" | "dredging" | "dredge" => Some(SiteGroup::DredgingSite),
            "dumpsite" | "dumping" | "dump" => Some(SiteGroup::DumpSite),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            SiteGroup::DredgingSite => "DredgingSite",
            SiteGroup::DumpSite => "DumpSite",
        }
    }
}

/// A `T × S` covariate matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Covariate<F> {
    pub name: String,
    pub values: Mat<F>,
}

/// Multi-site daily series with a missing mask, covariates and site metadata.
///
/// Entries of `y` under the mask hold `NaN` and are never read.
#[derive(Clone, Debug)]
pub struct Dataset<F = f64> {
    y: Mat<F>,
    missing: Vec<bool>,
    covariates: Vec<Covariate<F>>,
    site_ids: Vec<String>,
    site_groups: Vec<SiteGroup>,
    dates: Vec<NaiveDate>,
}

/// Equal when masks, observed values, covariates and metadata agree; the
/// placeholders under the mask are ignored.
impl<F: Real> PartialEq for Dataset<F> {
    fn eq(&self, other: &Self) -> bool {
        self.missing == other.missing
            && self.y.rows() == other.y.rows()
            && self.y.cols() == other.y.cols()
            && self.y.as_slice().iter().zip(other.y.as_slice()).zip(&self.missing).all(|((a, b), &m)| m || a == b)
            && self.covariates == other.covariates
            && self.site_ids == other.site_ids
            && self.site_groups == other.site_groups
            && self.dates == other.dates
    }
}

impl<F: Real> Dataset<F> {
    /// Builds a dataset; `None` entries of `y` are missing.
    pub fn new(
        y: Vec<Vec<Option<F>>>,
        covariates: Vec<Covariate<F>>,
        site_ids: Vec<String>,
        site_groups: Vec<SiteGroup>,
        dates: Vec<NaiveDate>,
    ) -> Result<Self> {
        let n_time = y.len();
        let n_sites = site_ids.len();
        if n_time < 3 {
            return Err(Error::InvalidDataset(format!("need at least 3 time points, got {n_time}")));
        }
        if n_sites == 0 {
            return Err(Error::InvalidDataset("no sites".into()));
        }
        if site_groups.len() != n_sites {
            return Err(Error::LengthMismatch { expected: n_sites, actual: site_groups.len() });
        }
        if dates.len() != n_time {
            return Err(Error::LengthMismatch { expected: n_time, actual: dates.len() });
        }
        for w in dates.windows(2) {
            if w[1] != w[0] + chrono::Days::new(1) {
                return Err(Error::InvalidDataset(format!("dates not consecutive days at {}", w[1])));
            }
        }
        let mut data = Vec::with_capacity(n_time * n_sites);
        let mut missing = Vec::with_capacity(n_time * n_sites);
        for (t, row) in y.iter().enumerate() {
            if row.len() != n_sites {
                return Err(Error::InvalidDataset(format!("row {t} has {} sites, expected {n_sites}", row.len())));
            }
            for v in row {
                match v {
                    Some(x) if x.is_finite() => {
                        data.push(*x);
                        missing.push(false);
                    }
                    Some(x) => return Err(Error::InvalidDataset(format!("non-finite observation {x} at row {t}"))),
                    None => {
                        data.push(F::nan());
                        missing.push(true);
                    }
                }
            }
        }
        for c in &covariates {
            if c.values.rows() != n_time || c.values.cols() != n_sites {
                return Err(Error::InvalidDataset(format!(
                    "covariate {} is {}x{}, expected {n_time}x{n_sites}",
                    c.name,
                    c.values.rows(),
                    c.values.cols()
                )));
            }
            if !c.values.is_finite() {
                return Err(Error::MissingCovariate(c.name.clone()));
            }
        }
        Ok(Dataset { y: Mat::from_vec(n_time, n_sites, data)?, missing, covariates, site_ids, site_groups, dates })
    }

    pub fn n_time(&self) -> usize {
        self.y.rows()
    }

    pub fn n_sites(&self) -> usize {
        self.y.cols()
    }

    pub fn n_covariates(&self) -> usize {
        self.covariates.len()
    }

    /// Raw responses; masked entries are `NaN`.
    pub fn y(&self) -> &Mat<F> {
        &self.y
    }

    pub fn value(&self, t: usize, s: usize) -> Option<F> {
        if self.is_missing(t, s) {
            None
        } else {
            Some(self.y[(t, s)])
        }
    }

    pub fn is_missing(&self, t: usize, s: usize) -> bool {
        self.missing[t * self.n_sites() + s]
    }

    /// Masked cells in row-major order.
    pub fn missing_cells(&self) -> Vec<(usize, usize)> {
        let s = self.n_sites();
        self.missing.iter().enumerate().filter(|(_, &m)| m).map(|(k, _)| (k / s, k % s)).collect()
    }

    pub fn n_missing(&self) -> usize {
        self.missing.iter().filter(|&&m| m).count()
    }

    pub fn covariates(&self) -> &[Covariate<F>] {
        &self.covariates
    }

    pub fn site_ids(&self) -> &[String] {
        &self.site_ids
    }

    pub fn site_groups(&self) -> &[SiteGroup] {
        &self.site_groups
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    /// Returns a copy with the given cells masked. Covariates are untouched.
    pub fn with_missing(&self, cells: &[(usize, usize)]) -> Self {
        let mut out = self.clone();
        let s = self.n_sites();
        for &(t, site) in cells {
            out.missing[t * s + site] = true;
            out.y[(t, site)] = F::nan();
        }
        out
    }

    /// Replaces every response with `values` and clears the mask.
    pub fn with_values(&self, values: Mat<F>) -> Result<Self> {
        if values.rows() != self.n_time() || values.cols() != self.n_sites() {
            return Err(Error::DimensionMismatch("replacement values have wrong shape".into()));
        }
        let mut out = self.clone();
        out.y = values;
        out.missing.iter_mut().for_each(|m| *m = false);
        Ok(out)
    }

    /// Reorders sites; `order[k]` is the original index of the new site `k`.
    pub fn permute_sites(&self, order: &[usize]) -> Self {
        let (n_t, n_s) = (self.n_time(), self.n_sites());
        let mut y = Mat::zeros(n_t, n_s);
        let mut missing = vec![false; n_t * n_s];
        for t in 0..n_t {
            for (k, &o) in order.iter().enumerate() {
                y[(t, k)] = self.y[(t, o)];
                missing[t * n_s + k] = self.missing[t * n_s + o];
            }
        }
        let covariates = self
            .covariates
            .iter()
            .map(|c| Covariate { name: c.name.clone(), values: Mat::from_fn(n_t, n_s, |t, k| c.values[(t, order[k])]) })
            .collect();
        Dataset {
            y,
            missing,
            covariates,
            site_ids: order.iter().map(|&o| self.site_ids[o].clone()).collect(),
            site_groups: order.iter().map(|&o| self.site_groups[o]).collect(),
            dates: self.dates.clone(),
        }
    }

    pub fn cast<G: Real>(&self) -> Dataset<G> {
        Dataset {
            y: self.y.cast(),
            missing: self.missing.clone(),
            covariates: self.covariates.iter().map(|c| Covariate { name: c.name.clone(), values: c.values.cast() }).collect(),
            site_ids: self.site_ids.clone(),
            site_groups: self.site_groups.clone(),
            dates: self.dates.clone(),
        }
    }
}

/// Consecutive daily dates starting at `start`.
pub fn daily_dates(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    (0..n as u64).map(|k| start + chrono::Days::new(k)).collect()
}
