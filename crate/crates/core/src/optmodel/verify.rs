use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;

use super::{Family, Solution};
use crate::error::{Error, Result};
use crate::exposure::{eirp, power_density, scaling};
use crate::radio::{band_min_sir, BetaTable};
use crate::scenario::{AreaClass, Scenario};

/// Relative feasibility tolerance.
pub const VERIFY_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Counterexample {
    pub row: String,
    pub lhs: f64,
    pub rhs: f64,
    /// Negative when violated.
    pub slack: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FamilyReport {
    pub family: Family,
    /// Rows of the family covered by the check.
    pub rows: usize,
    pub violations: usize,
    pub first: Option<Counterexample>,
}

impl FamilyReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub families: Vec<FamilyReport>,
    pub c_tot: f64,
    pub c_tot_recomputed: f64,
    pub objective: f64,
}

impl VerificationReport {
    pub fn feasible(&self) -> bool {
        self.families.iter().all(FamilyReport::passed)
    }

    pub fn family(&self, family: Family) -> &FamilyReport {
        self.families.iter().find(|r| r.family == family).expect("every family is reported")
    }

    pub fn failed(&self) -> impl Iterator<Item = &FamilyReport> {
        self.families.iter().filter(|r| !r.passed())
    }
}

#[derive(Clone, Copy)]
enum Cmp {
    Le,
    Ge,
    Eq,
}

struct Tally {
    family: Family,
    rows: usize,
    violations: usize,
    first: Option<Counterexample>,
}

impl Tally {
    fn new(family: Family, rows: usize) -> Self {
        Tally { family, rows, violations: 0, first: None }
    }

    fn check(&mut self, lhs: f64, cmp: Cmp, rhs: f64, row: impl FnOnce() -> String) {
        let slack = match cmp {
            Cmp::Le => rhs - lhs,
            Cmp::Ge => lhs - rhs,
            Cmp::Eq => -(lhs - rhs).abs(),
        };
        let tol = VERIFY_TOLERANCE * 1f64.max(lhs.abs()).max(rhs.abs());
        if slack < -tol || slack.is_nan() {
            self.violations += 1;
            if self.first.is_none() {
                self.first = Some(Counterexample { row: row(), lhs, rhs, slack });
            }
        }
    }

    fn done(self) -> FamilyReport {
        FamilyReport { family: self.family, rows: self.rows, violations: self.violations, first: self.first }
    }
}

fn check_dimensions(s: &Scenario, sol: &Solution) -> Result<()> {
    let (np, nl, nf) = (s.n_pixels(), s.n_sites(), s.n_bands());
    let bad = |what: String| Err(Error::Dimension(what));
    if let Some(&(l, f)) = sol.y.iter().find(|&&(l, f)| l >= nl || f >= nf) {
        return bad(format!("y_l{l}_f{f} outside {nl} sites x {nf} bands"));
    }
    for (name, set) in [("x", &sol.x), ("z", &sol.z)] {
        if let Some(&(p, l, f)) = set.iter().find(|&&(p, l, f)| p >= np || l >= nl || f >= nf) {
            return bad(format!("{name}_p{p}_l{l}_f{f} outside {np} pixels x {nl} sites x {nf} bands"));
        }
    }
    if let Some(&p) = sol.w.iter().find(|&&p| p >= np) {
        return bad(format!("w_p{p} outside {np} pixels"));
    }
    if let Some(&(l, p, l2, f)) = sol.v.iter().find(|&&(l, p, l2, f)| l >= nl || p >= np || l2 >= nl || f >= nf) {
        return bad(format!("v_l{l}_p{p}_l{l2}_f{f} out of range"));
    }
    Ok(())
}

/// Checks every constraint family of the model directly against scenario
/// data, without building the model.
pub fn verify_solution(scenario: &Scenario, beta: &BetaTable, solution: &Solution) -> Result<VerificationReport> {
    check_dimensions(scenario, solution)?;
    if beta.n_pixels() != scenario.n_pixels() {
        return Err(Error::Dimension(format!(
            "beta table has {} pixels, scenario {}",
            beta.n_pixels(),
            scenario.n_pixels()
        )));
    }
    let s_min = scenario.bands.iter().map(band_min_sir).collect::<Result<Vec<_>>>()?;
    let ctx = Ctx { s: scenario, beta, sol: solution, s_min };
    let families: Vec<FamilyReport> = Family::ALL.par_iter().map(|&f| ctx.family(f)).collect();
    let c_tot_recomputed: f64 = solution.y.iter().map(|&(l, f)| scenario.install_cost(l, f)).sum();
    let revenue: f64 = solution.x.iter().map(|&(_, l, f)| scenario.alpha(l, f)).sum();
    Ok(VerificationReport { families, c_tot: solution.c_tot, c_tot_recomputed, objective: solution.c_tot - revenue })
}

struct Ctx<'a> {
    s: &'a Scenario,
    beta: &'a BetaTable,
    sol: &'a Solution,
    s_min: Vec<f64>,
}

impl Ctx<'_> {
    fn y(&self, l: usize, f: usize) -> f64 {
        if self.sol.y.contains(&(l, f)) {
            1.0
        } else {
            0.0
        }
    }

    fn x(&self, p: usize, l: usize, f: usize) -> f64 {
        if self.sol.x.contains(&(p, l, f)) {
            1.0
        } else {
            0.0
        }
    }

    fn w(&self, p: usize) -> f64 {
        if self.sol.w.contains(&p) {
            1.0
        } else {
            0.0
        }
    }

    fn family(&self, family: Family) -> FamilyReport {
        let s = self.s;
        let sol = self.sol;
        let (np, nl, nf) = (s.n_pixels(), s.n_sites(), s.n_bands());
        let plf = np * nl * nf;
        match family {
            Family::Coverage => {
                let mut t = Tally::new(family, plf);
                for &(p, l, f) in &sol.x {
                    let lhs = s.distance(p, l);
                    let rhs = s.bands[f].max_coverage_distance_m * self.y(l, f);
                    t.check(lhs, Cmp::Le, rhs, || format!("cov_p{p}_l{l}_f{f}"));
                }
                t.done()
            }
            Family::MaxServing => {
                let mut t = Tally::new(family, np);
                let mut count = BTreeMap::<usize, usize>::new();
                for &(p, _, _) in &sol.x {
                    *count.entry(p).or_default() += 1;
                }
                for (p, c) in count {
                    t.check(c as f64, Cmp::Le, s.options.n_ser as f64, || format!("nser_p{p}"));
                }
                t.done()
            }
            Family::SirAux => {
                let mut t = Tally::new(family, 3 * nl * plf);
                for &(l, p, l2, f) in &sol.v {
                    let tag = format!("l{l}_p{p}_l{l2}_f{f}");
                    t.check(1.0, Cmp::Le, self.x(p, l, f), || format!("va_{tag}"));
                    t.check(1.0, Cmp::Le, self.y(l2, f), || format!("vb_{tag}"));
                }
                for &(p, l, f) in &sol.x {
                    for &(l2, f2) in sol.y.iter().filter(|&&(_, f2)| f2 == f) {
                        let v = if sol.v.contains(&(l, p, l2, f2)) { 1.0 } else { 0.0 };
                        t.check(v, Cmp::Ge, 1.0 + self.y(l2, f) - 1.0, || format!("vc_l{l}_p{p}_l{l2}_f{f}"));
                    }
                }
                t.done()
            }
            Family::SirLinear => {
                let mut t = Tally::new(family, plf);
                let mut keys: BTreeSet<(usize, usize, usize)> = sol.x.clone();
                keys.extend(sol.v.iter().map(|&(l, p, _, f)| (p, l, f)));
                for (p, l, f) in keys {
                    let own = self.beta.get(p, l, f);
                    let sum: f64 = sol
                        .v
                        .range((l, p, 0, 0)..(l, p + 1, 0, 0))
                        .filter(|&&(_, _, _, f2)| f2 == f)
                        .map(|&(_, _, l2, _)| (self.beta.get(p, l2, f) / own).powi(2))
                        .sum();
                    let lhs = self.s_min[f] * (sum - self.x(p, l, f));
                    t.check(lhs, Cmp::Le, 1.0, || format!("sir_p{p}_l{l}_f{f}"));
                }
                t.done()
            }
            Family::ExclLower => {
                let mut t = Tally::new(family, plf);
                for &(l, f) in &sol.y {
                    for p in (0..np).filter(|&p| s.in_exclusion_zone(p, l, f)) {
                        t.check(self.w(p), Cmp::Ge, 1.0, || format!("exlo_p{p}_l{l}_f{f}"));
                    }
                }
                t.done()
            }
            Family::ExclUpper => {
                let mut t = Tally::new(family, np);
                for &p in &sol.w {
                    let covered = sol.y.iter().filter(|&&(l, f)| s.in_exclusion_zone(p, l, f)).count();
                    t.check(1.0, Cmp::Le, covered as f64, || format!("exup_p{p}"));
                }
                t.done()
            }
            Family::ExclLin => {
                let mut t = Tally::new(family, 3 * plf);
                for &(p, l, f) in &sol.z {
                    let tag = format!("p{p}_l{l}_f{f}");
                    t.check(1.0 + self.w(p), Cmp::Le, 1.0, || format!("za_{tag}"));
                    t.check(1.0, Cmp::Le, self.y(l, f), || format!("zb_{tag}"));
                }
                for &(l, f) in &sol.y {
                    for p in (0..np).filter(|p| !sol.w.contains(p)) {
                        let z = if sol.z.contains(&(p, l, f)) { 1.0 } else { 0.0 };
                        t.check(z, Cmp::Ge, 1.0, || format!("zc_p{p}_l{l}_f{f}"));
                    }
                }
                t.done()
            }
            Family::PdScaled | Family::PdUnscaled => Tally::new(family, 0).done(),
            Family::LimitResidential | Family::LimitGeneral => {
                let class =
                    if family == Family::LimitResidential { AreaClass::Residential } else { AreaClass::GeneralPublic };
                let scaled = s.regulation.scaled(class);
                let pixels: Vec<usize> = (0..np).filter(|&p| s.pixels[p].area_class == class).collect();
                let mut added = vec![0.0; np * nf];
                for &(p, l, f) in &sol.z {
                    let band = &s.bands[f];
                    // an unreachable density is reported by the row check below
                    let mut d = power_density(eirp(band), s.distance(p, l)).unwrap_or(f64::INFINITY);
                    if scaled {
                        d *= scaling(band);
                    }
                    added[p * nf + f] += d;
                }
                let mut t = Tally::new(family, pixels.len());
                let prefix = if class == AreaClass::Residential { "limres" } else { "limgen" };
                for p in pixels {
                    let keep = 1.0 - self.w(p);
                    let lhs: f64 = (0..nf)
                        .map(|f| (s.baseline_at(p, f) * keep + added[p * nf + f]) / s.regulation.limit(class, f))
                        .sum();
                    t.check(lhs, Cmp::Le, 1.0, || format!("{prefix}_p{p}"));
                }
                t.done()
            }
            Family::MinDistance => {
                let mut t = Tally::new(family, s.grid.sensitive.len() * nl * nf);
                let d_min = s.regulation.min_sensitive_distance_m;
                for &(l, f) in &sol.y {
                    for &p in &s.grid.sensitive {
                        t.check(s.distance(p, l) - d_min, Cmp::Ge, 0.0, || format!("dmin_p{p}_l{l}_f{f}"));
                    }
                }
                t.done()
            }
            Family::SiteMax => {
                let mut t = Tally::new(family, nl);
                for l in 0..nl {
                    let n = (0..nf).filter(|&f| sol.y.contains(&(l, f))).count();
                    t.check(n as f64, Cmp::Le, s.options.n_max as f64, || format!("nmax_l{l}"));
                }
                t.done()
            }
            Family::SiteAllowed => {
                let mut t = Tally::new(family, nl * nf);
                for &(l, f) in &sol.y {
                    let allowed = if s.sites[l].allows(f) { 1.0 } else { 0.0 };
                    t.check(1.0, Cmp::Le, allowed, || format!("freq_l{l}_f{f}"));
                }
                t.done()
            }
            Family::Cost => {
                let mut t = Tally::new(family, 1);
                let cost: f64 = sol.y.iter().map(|&(l, f)| s.install_cost(l, f)).sum();
                t.check(sol.c_tot, Cmp::Eq, cost, || "ctot".to_string());
                t.done()
            }
        }
    }
}
