//! Post-processing and pre-processing methods for statistical parity.

mod fwl;
mod relabel;
mod sdb;

pub use fwl::{train_fwl_adaboost, train_fwl_with, DEFAULT_BIAS_WEIGHT};
pub use relabel::{apply_rr, fit_rr, rm_massage, RandomizedRelabeler};
pub use sdb::{apply_sdb, fit_sdb, fit_sdb_closest, sdb_candidates, shifted_predictions, SdbFit, ShiftedClassifier};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which group receives the shifted boundary.
///
/// Normally the protected group; when the protected group is the advantaged
/// one on the fitting data the roles are swapped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShiftGroup {
    #[default]
    Protected,
    Complement,
}

impl ShiftGroup {
    #[inline]
    pub fn contains(self, protected: bool) -> bool {
        match self {
            ShiftGroup::Protected => protected,
            ShiftGroup::Complement => !protected,
        }
    }

    pub fn swapped(self) -> bool {
        self == ShiftGroup::Complement
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FairnessMethod {
    None,
    Sdb,
    Rr,
    Rm,
    Fwl,
}

impl FairnessMethod {
    pub const ALL: [FairnessMethod; 5] = [
        FairnessMethod::None,
        FairnessMethod::Rr,
        FairnessMethod::Sdb,
        FairnessMethod::Rm,
        FairnessMethod::Fwl,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FairnessMethod::None => "none",
            FairnessMethod::Sdb => "sdb",
            FairnessMethod::Rr => "rr",
            FairnessMethod::Rm => "rm",
            FairnessMethod::Fwl => "fwl",
        }
    }
}

impl fmt::Display for FairnessMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FairnessMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" | "raw" => Ok(FairnessMethod::None),
            "sdb" => Ok(FairnessMethod::Sdb),
            "rr" => Ok(FairnessMethod::Rr),
            "rm" => Ok(FairnessMethod::Rm),
            "fwl" => Ok(FairnessMethod::Fwl),
            other => Err(Error::InvalidArgument(format!("unknown fairness method '{other}'"))),
        }
    }
}
