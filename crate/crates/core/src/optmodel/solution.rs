use std::collections::BTreeSet;
use std::fmt::Write as _;

use super::Var;
use crate::error::{Error, Result};
use crate::exposure::exclusion_flags;
use crate::scenario::{Deployment, Scenario};

const BINARY_TOLERANCE: f64 = 1e-6;

/// A model assignment. Binaries are stored sparsely as the set of indices
/// set to one; everything absent is zero.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Solution {
    /// `(site, band)`
    pub y: BTreeSet<(usize, usize)>,
    /// `(pixel, site, band)`
    pub x: BTreeSet<(usize, usize, usize)>,
    pub w: BTreeSet<usize>,
    /// `(site, pixel, other, band)`
    pub v: BTreeSet<(usize, usize, usize, usize)>,
    /// `(pixel, site, band)`
    pub z: BTreeSet<(usize, usize, usize)>,
    pub c_tot: f64,
}

impl Solution {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn value(&self, var: Var) -> f64 {
        let one = |b: bool| if b { 1.0 } else { 0.0 };
        match var {
            Var::Y { site, band } => one(self.y.contains(&(site, band))),
            Var::X { pixel, site, band } => one(self.x.contains(&(pixel, site, band))),
            Var::W { pixel } => one(self.w.contains(&pixel)),
            Var::V { site, pixel, other, band } => one(self.v.contains(&(site, pixel, other, band))),
            Var::Z { pixel, site, band } => one(self.z.contains(&(pixel, site, band))),
            Var::CTot => self.c_tot,
        }
    }

    /// Assigns `var`; binaries must be within 1e-6 of 0 or 1.
    pub fn set(&mut self, var: Var, value: f64) -> Result<()> {
        if var == Var::CTot {
            self.c_tot = value;
            return Ok(());
        }
        let on = if (value - 1.0).abs() <= BINARY_TOLERANCE {
            true
        } else if value.abs() <= BINARY_TOLERANCE {
            false
        } else {
            return Err(Error::Validation(format!("{var} = {value} is not binary")));
        };
        fn put<T: Ord>(set: &mut BTreeSet<T>, key: T, on: bool) {
            if on {
                set.insert(key);
            } else {
                set.remove(&key);
            }
        }
        match var {
            Var::Y { site, band } => put(&mut self.y, (site, band), on),
            Var::X { pixel, site, band } => put(&mut self.x, (pixel, site, band), on),
            Var::W { pixel } => put(&mut self.w, pixel, on),
            Var::V { site, pixel, other, band } => put(&mut self.v, (site, pixel, other, band), on),
            Var::Z { pixel, site, band } => put(&mut self.z, (pixel, site, band), on),
            Var::CTot => unreachable!(),
        }
        Ok(())
    }

    /// Completes a deployment and its pixel links into a full assignment,
    /// deriving the exclusion flags and both product variables.
    pub fn from_plan(
        scenario: &Scenario,
        deployment: &Deployment,
        links: impl IntoIterator<Item = (usize, usize, usize)>,
        c_tot: f64,
    ) -> Self {
        let mut s = Solution { c_tot, ..Default::default() };
        s.y = deployment.iter().map(|slot| (slot.site, slot.band)).collect();
        s.x = links.into_iter().collect();
        let flags = exclusion_flags(scenario, deployment);
        s.w = flags.iter().enumerate().filter(|(_, &f)| f).map(|(p, _)| p).collect();
        for &(p, l, f) in &s.x {
            for l2 in deployment.sites_on(f) {
                s.v.insert((l, p, l2, f));
            }
        }
        for slot in deployment.iter() {
            for (p, _) in flags.iter().enumerate().filter(|(_, &f)| !f) {
                s.z.insert((p, slot.site, slot.band));
            }
        }
        s
    }

    /// Reads `name value` (or `name = value`) lines. Blank lines and lines
    /// starting with `#` or `\` are skipped; missing variables are zero.
    pub fn parse(text: &str) -> Result<Self> {
        let mut s = Solution::zero();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with('\\') {
                continue;
            }
            let parse_err = |msg: String| Error::Parse { line: i + 1, msg };
            let tokens: Vec<&str> =
                line.split(|c: char| c.is_whitespace() || c == '=').filter(|t| !t.is_empty()).collect();
            let [name, value] = tokens[..] else {
                return Err(parse_err(format!("expected `name value`, got `{line}`")));
            };
            let var: Var = name.parse()?;
            let value: f64 = value.parse().map_err(|_| parse_err(format!("bad number `{value}`")))?;
            s.set(var, value).map_err(|e| parse_err(e.to_string()))?;
        }
        Ok(s)
    }

    /// Nonzero variables as `name value` lines, `C_TOT` first.
    pub fn to_text(&self) -> String {
        let mut out = format!("C_TOT {}\n", self.c_tot);
        let ones = self
            .y
            .iter()
            .map(|&(site, band)| Var::Y { site, band })
            .chain(self.x.iter().map(|&(pixel, site, band)| Var::X { pixel, site, band }))
            .chain(self.w.iter().map(|&pixel| Var::W { pixel }))
            .chain(self.v.iter().map(|&(site, pixel, other, band)| Var::V { site, pixel, other, band }))
            .chain(self.z.iter().map(|&(pixel, site, band)| Var::Z { pixel, site, band }));
        for v in ones {
            let _ = writeln!(out, "{v} 1");
        }
        out
    }
}
