//! The exact mixed-integer planning model: construction, LP emission,
//! solution import and an independent constraint-by-constraint verifier.

mod model;
mod oracle;
mod solution;
mod verify;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

pub use model::{build_model, emit_lp, ConstraintModel, Row, Sense, MAX_MODEL_SIZE};
pub use oracle::{check_exclusion_linearization, check_sir_linearization, SmallInstance};
pub use solution::Solution;
pub use verify::{verify_solution, Counterexample, FamilyReport, VerificationReport, VERIFY_TOLERANCE};

/// A decision variable of the model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    /// gNB of `band` installed at `site`.
    Y {
        site: usize,
        band: usize,
    },
    /// `pixel` served by the gNB of `band` at `site`.
    X {
        pixel: usize,
        site: usize,
        band: usize,
    },
    /// `pixel` lies in an exclusion zone of some installed gNB.
    W {
        pixel: usize,
    },
    /// Product of `X{pixel, site, band}` and `Y{other, band}`.
    V {
        site: usize,
        pixel: usize,
        other: usize,
        band: usize,
    },
    /// Product of `1 - W{pixel}` and `Y{site, band}`.
    Z {
        pixel: usize,
        site: usize,
        band: usize,
    },
    CTot,
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Var::Y { site, band } => write!(f, "y_l{site}_f{band}"),
            Var::X { pixel, site, band } => write!(f, "x_p{pixel}_l{site}_f{band}"),
            Var::W { pixel } => write!(f, "w_p{pixel}"),
            Var::V { site, pixel, other, band } => write!(f, "v_l{site}_p{pixel}_l{other}_f{band}"),
            Var::Z { pixel, site, band } => write!(f, "z_p{pixel}_l{site}_f{band}"),
            Var::CTot => f.write_str("C_TOT"),
        }
    }
}

impl FromStr for Var {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let unknown = || Error::UnknownVariable(s.to_string());
        if s == "C_TOT" {
            return Ok(Var::CTot);
        }
        let mut parts = s.split('_');
        let kind = parts.next().ok_or_else(unknown)?;
        let fields: Vec<(char, usize)> = parts
            .map(|part| {
                let mut chars = part.chars();
                let tag = chars.next().ok_or_else(unknown)?;
                let digits = chars.as_str();
                // reject signs and leading zeros so names stay bijective
                if digits.is_empty()
                    || !digits.bytes().all(|b| b.is_ascii_digit())
                    || (digits.len() > 1 && digits.starts_with('0'))
                {
                    return Err(unknown());
                }
                Ok((tag, digits.parse().map_err(|_| unknown())?))
            })
            .collect::<Result<_, Error>>()?;
        let tags: String = fields.iter().map(|(t, _)| *t).collect();
        let v: Vec<usize> = fields.iter().map(|(_, v)| *v).collect();
        match (kind, tags.as_str()) {
            ("y", "lf") => Ok(Var::Y { site: v[0], band: v[1] }),
            ("x", "plf") => Ok(Var::X { pixel: v[0], site: v[1], band: v[2] }),
            ("w", "p") => Ok(Var::W { pixel: v[0] }),
            ("v", "lplf") => Ok(Var::V { site: v[0], pixel: v[1], other: v[2], band: v[3] }),
            ("z", "plf") => Ok(Var::Z { pixel: v[0], site: v[1], band: v[2] }),
            _ => Err(unknown()),
        }
    }
}

/// Constraint families of the model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Coverage,
    MaxServing,
    SirAux,
    SirLinear,
    ExclLower,
    ExclUpper,
    ExclLin,
    PdScaled,
    PdUnscaled,
    LimitResidential,
    LimitGeneral,
    MinDistance,
    SiteMax,
    SiteAllowed,
    Cost,
}

impl Family {
    pub const ALL: [Family; 15] = [
        Family::Coverage,
        Family::MaxServing,
        Family::SirAux,
        Family::SirLinear,
        Family::ExclLower,
        Family::ExclUpper,
        Family::ExclLin,
        Family::PdScaled,
        Family::PdUnscaled,
        Family::LimitResidential,
        Family::LimitGeneral,
        Family::MinDistance,
        Family::SiteMax,
        Family::SiteAllowed,
        Family::Cost,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Coverage => "coverage",
            Family::MaxServing => "max-serving",
            Family::SirAux => "sir-aux",
            Family::SirLinear => "sir-linear",
            Family::ExclLower => "excl-lower",
            Family::ExclUpper => "excl-upper",
            Family::ExclLin => "excl-lin",
            Family::PdScaled => "pd-ts",
            Family::PdUnscaled => "pd-nots",
            Family::LimitResidential => "limit-res",
            Family::LimitGeneral => "limit-gen",
            Family::MinDistance => "min-dist",
            Family::SiteMax => "site-max",
            Family::SiteAllowed => "site-allowed",
            Family::Cost => "cost",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
