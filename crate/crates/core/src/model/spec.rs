use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "ARCH")]
    Arch,
    #[serde(rename = "VAR_IW")]
    VarIw,
    #[serde(rename = "VARCH")]
    Varch,
    #[serde(rename = "VARICH")]
    Varich,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Arch, Variant::VarIw, Variant::Varch, Variant::Varich];

    /// First 0-based time index that contributes a likelihood term.
    pub fn first_time(&self) -> usize {
        match self {
            Variant::Varich => 2,
            _ => 1,
        }
    }

    pub fn has_diag_phi(&self) -> bool {
        matches!(self, Variant::Arch)
    }

    /// True for the variants with the lagged-square variance recursion.
    pub fn has_arch_variance(&self) -> bool {
        !matches!(self, Variant::VarIw)
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Arch => "ARCH",
            Variant::VarIw => "VAR_IW",
            Variant::Varch => "VARCH",
            Variant::Varich => "VARICH",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "ARCH" => Ok(Variant::Arch),
            "VAR_IW" | "VAR" | "VARIW" => Ok(Variant::VarIw),
            "VARCH" => Ok(Variant::Varch),
            "VARICH" => Ok(Variant::Varich),
            other => Err(Error::InvalidConfig(format!("unknown variant {other}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CovariateRole {
    Dumping,
    Dredging,
    Wind,
}

impl CovariateRole {
    pub fn as_str(&self) -> &'static str {
        match self {
            CovariateRole::Dumping => "dumping",
            CovariateRole::Dredging => "dredging",
            CovariateRole::Wind => "wind",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncNormalPrior {
    pub mu: f64,
    pub sd: f64,
    pub lo: f64,
    /// `null` in JSON means `+∞`.
    #[serde(with = "infinite_as_null")]
    pub hi: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaPrior {
    pub a: f64,
    pub b: f64,
}

mod infinite_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// Prior hyperparameters. Every field has a default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorConfig {
    pub sd_a: f64,
    pub sd_beta_wind: f64,
    /// Dumping effect at dump sites and dredging effect at dredging sites.
    pub sd_effect_active: f64,
    /// Dumping effect at dredging sites and dredging effect at dump sites.
    pub sd_effect_inactive: f64,
    pub sd_phi_diag: f64,
    pub sd_phi_offdiag: f64,
    pub theta1_prior: TruncNormalPrior,
    pub theta2_prior: BetaPrior,
    pub nu: f64,
    /// Scale matrix of the inverse-Wishart prior; identity when absent.
    pub psi: Option<Vec<Vec<f64>>>,
    pub missing_prior: TruncNormalPrior,
}

impl Default for PriorConfig {
    fn default() -> Self {
        PriorConfig {
            sd_a: 100.0,
            sd_beta_wind: 1.0,
            sd_effect_active: 25.0,
            sd_effect_inactive: 0.3,
            sd_phi_diag: 0.5,
            sd_phi_offdiag: 0.1,
            theta1_prior: TruncNormalPrior { mu: 0.0, sd: 1.0, lo: 0.0, hi: f64::INFINITY },
            theta2_prior: BetaPrior { a: 1.0, b: 5.0 },
            nu: 14.0,
            psi: None,
            missing_prior: TruncNormalPrior { mu: 0.0, sd: 50.0, lo: 0.0, hi: 100.0 },
        }
    }
}

impl PriorConfig {
    pub fn validate(&self, n_sites: usize) -> Result<()> {
        let sds = [
            ("sd_a", self.sd_a),
            ("sd_beta_wind", self.sd_beta_wind),
            ("sd_effect_active", self.sd_effect_active),
            ("sd_effect_inactive", self.sd_effect_inactive),
            ("sd_phi_diag", self.sd_phi_diag),
            ("sd_phi_offdiag", self.sd_phi_offdiag),
            ("theta1_prior.sd", self.theta1_prior.sd),
            ("missing_prior.sd", self.missing_prior.sd),
        ];
        for (name, v) in sds {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if self.theta1_prior.lo != 0.0 || self.theta1_prior.hi != f64::INFINITY {
            return Err(Error::InvalidConfig("theta1_prior must be truncated to [0, inf)".into()));
        }
        if !(self.theta2_prior.a > 0.0 && self.theta2_prior.b > 0.0) {
            return Err(Error::InvalidConfig("theta2_prior shapes must be positive".into()));
        }
        let mp = &self.missing_prior;
        if !(mp.lo.is_finite() && mp.hi.is_finite() && mp.lo < mp.hi) {
            return Err(Error::InvalidConfig("missing_prior needs finite bounds lo < hi".into()));
        }
        if !(self.nu > n_sites as f64 - 1.0) {
            return Err(Error::InvalidDegreesOfFreedom { nu: self.nu, min: n_sites as f64 - 1.0 });
        }
        if let Some(psi) = &self.psi {
            if psi.len() != n_sites || psi.iter().any(|r| r.len() != n_sites) {
                return Err(Error::InvalidConfig(format!("psi must be {n_sites}x{n_sites}")));
            }
        }
        Ok(())
    }
}

/// Variant plus priors plus the role of each covariate column.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub variant: Variant,
    #[serde(default)]
    pub priors: PriorConfig,
    #[serde(default = "default_roles")]
    pub covariate_roles: Vec<CovariateRole>,
}

pub fn default_roles() -> Vec<CovariateRole> {
    vec![CovariateRole::Dumping, CovariateRole::Dredging, CovariateRole::Wind]
}

impl ModelSpec {
    pub fn new(variant: Variant) -> Self {
        ModelSpec { variant, priors: PriorConfig::default(), covariate_roles: default_roles() }
    }

    pub fn with_roles(variant: Variant, roles: Vec<CovariateRole>) -> Self {
        ModelSpec { variant, priors: PriorConfig::default(), covariate_roles: roles }
    }
}
