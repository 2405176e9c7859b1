use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{Family, Var};
use crate::error::{Error, Result};
use crate::exposure::{eirp, power_density, scaling};
use crate::radio::{band_min_sir, BetaTable};
use crate::scenario::{AreaClass, Scenario};

/// Largest number of variables plus rows `build_model` will materialise.
pub const MAX_MODEL_SIZE: usize = 5_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub family: Family,
    pub name: String,
    pub terms: Vec<(Var, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Clone, Debug)]
pub struct ConstraintModel {
    pub n_pixels: usize,
    pub n_sites: usize,
    pub n_bands: usize,
    /// Minimised.
    pub objective: Vec<(Var, f64)>,
    pub rows: Vec<Row>,
    /// Installation variables pinned to zero (disallowed or too close to a
    /// sensitive place).
    pub fixed_zero: Vec<Var>,
}

impl ConstraintModel {
    /// Every variable, binaries first in `y, x, w, v, z` order, then `C_TOT`.
    pub fn variables(&self) -> Vec<Var> {
        let (np, nl, nf) = (self.n_pixels, self.n_sites, self.n_bands);
        let mut out = Vec::with_capacity(self.n_variables());
        for site in 0..nl {
            for band in 0..nf {
                out.push(Var::Y { site, band });
            }
        }
        for pixel in 0..np {
            for site in 0..nl {
                for band in 0..nf {
                    out.push(Var::X { pixel, site, band });
                }
            }
        }
        out.extend((0..np).map(|pixel| Var::W { pixel }));
        for site in 0..nl {
            for pixel in 0..np {
                for other in 0..nl {
                    for band in 0..nf {
                        out.push(Var::V { site, pixel, other, band });
                    }
                }
            }
        }
        for pixel in 0..np {
            for site in 0..nl {
                for band in 0..nf {
                    out.push(Var::Z { pixel, site, band });
                }
            }
        }
        out.push(Var::CTot);
        out
    }

    pub fn n_variables(&self) -> usize {
        variable_count(self.n_pixels, self.n_sites, self.n_bands)
    }

    /// Row count per family; families without rows map to zero.
    pub fn census(&self) -> BTreeMap<Family, usize> {
        let mut out: BTreeMap<Family, usize> = Family::ALL.iter().map(|&f| (f, 0)).collect();
        for r in &self.rows {
            *out.entry(r.family).or_default() += 1;
        }
        out
    }
}

fn variable_count(np: usize, nl: usize, nf: usize) -> usize {
    nl * nf + 2 * np * nl * nf + np + nl * nl * np * nf + 1
}

fn row_estimate(s: &Scenario) -> usize {
    let (np, nl, nf) = (s.n_pixels(), s.n_sites(), s.n_bands());
    let plf = np * nl * nf;
    plf * 6 + 3 * np * nl * nl * nf + 3 * np + s.grid.sensitive.len() * nl * nf + nl + nl * nf + 1
}

fn row(family: Family, name: String, terms: Vec<(Var, f64)>, sense: Sense, rhs: f64) -> Row {
    Row { family, name, terms, sense, rhs }
}

/// Builds the full model for `scenario` with the given β table.
pub fn build_model(scenario: &Scenario, beta: &BetaTable) -> Result<ConstraintModel> {
    scenario.validate()?;
    let (np, nl, nf) = (scenario.n_pixels(), scenario.n_sites(), scenario.n_bands());
    if beta.n_pixels() != np {
        return Err(Error::Dimension(format!("beta table has {} pixels, scenario {np}", beta.n_pixels())));
    }
    let size = variable_count(np, nl, nf).saturating_add(row_estimate(scenario));
    if size > MAX_MODEL_SIZE {
        return Err(Error::TooLarge(format!(
            "model would have about {size} variables and rows (limit {MAX_MODEL_SIZE})"
        )));
    }
    let s_min = scenario.bands.iter().map(band_min_sir).collect::<Result<Vec<_>>>()?;
    let eirps: Vec<f64> = scenario.bands.iter().map(eirp).collect();
    let y = |site, band| Var::Y { site, band };
    let x = |pixel, site, band| Var::X { pixel, site, band };
    let w = |pixel| Var::W { pixel };
    let z = |pixel, site, band| Var::Z { pixel, site, band };
    let mut rows = Vec::new();

    for p in 0..np {
        for l in 0..nl {
            for f in 0..nf {
                let d = scenario.distance(p, l);
                let d_max = scenario.bands[f].max_coverage_distance_m;
                rows.push(row(
                    Family::Coverage,
                    format!("cov_p{p}_l{l}_f{f}"),
                    vec![(x(p, l, f), d), (y(l, f), -d_max)],
                    Sense::Le,
                    0.0,
                ));
            }
        }
    }

    for p in 0..np {
        let terms = (0..nl).flat_map(|l| (0..nf).map(move |f| (x(p, l, f), 1.0))).collect();
        rows.push(row(Family::MaxServing, format!("nser_p{p}"), terms, Sense::Le, scenario.options.n_ser as f64));
    }

    for l in 0..nl {
        for p in 0..np {
            for l2 in 0..nl {
                for f in 0..nf {
                    let v = Var::V { site: l, pixel: p, other: l2, band: f };
                    let tag = format!("l{l}_p{p}_l{l2}_f{f}");
                    rows.push(row(
                        Family::SirAux,
                        format!("va_{tag}"),
                        vec![(v, 1.0), (x(p, l, f), -1.0)],
                        Sense::Le,
                        0.0,
                    ));
                    rows.push(row(
                        Family::SirAux,
                        format!("vb_{tag}"),
                        vec![(v, 1.0), (y(l2, f), -1.0)],
                        Sense::Le,
                        0.0,
                    ));
                    rows.push(row(
                        Family::SirAux,
                        format!("vc_{tag}"),
                        vec![(v, 1.0), (x(p, l, f), -1.0), (y(l2, f), -1.0)],
                        Sense::Ge,
                        -1.0,
                    ));
                }
            }
        }
    }

    for p in 0..np {
        for l in 0..nl {
            for f in 0..nf {
                let own = beta.get(p, l, f);
                let mut terms = Vec::with_capacity(nl + 1);
                for l2 in 0..nl {
                    let ratio = (beta.get(p, l2, f) / own).powi(2);
                    if !ratio.is_finite() {
                        return Err(Error::Model(format!("beta ratio not finite at (p={p}, l={l}, l2={l2}, f={f})")));
                    }
                    terms.push((Var::V { site: l, pixel: p, other: l2, band: f }, s_min[f] * ratio));
                }
                terms.push((x(p, l, f), -s_min[f]));
                rows.push(row(Family::SirLinear, format!("sir_p{p}_l{l}_f{f}"), terms, Sense::Le, 1.0));
            }
        }
    }

    let in_zone = |p: usize, l: usize, f: usize| if scenario.in_exclusion_zone(p, l, f) { 1.0 } else { 0.0 };
    for p in 0..np {
        for l in 0..nl {
            for f in 0..nf {
                rows.push(row(
                    Family::ExclLower,
                    format!("exlo_p{p}_l{l}_f{f}"),
                    vec![(w(p), 1.0), (y(l, f), -in_zone(p, l, f))],
                    Sense::Ge,
                    0.0,
                ));
            }
        }
    }
    for p in 0..np {
        let mut terms = vec![(w(p), 1.0)];
        for l in 0..nl {
            for f in 0..nf {
                terms.push((y(l, f), -in_zone(p, l, f)));
            }
        }
        rows.push(row(Family::ExclUpper, format!("exup_p{p}"), terms, Sense::Le, 0.0));
    }
    for p in 0..np {
        for l in 0..nl {
            for f in 0..nf {
                let tag = format!("p{p}_l{l}_f{f}");
                rows.push(row(
                    Family::ExclLin,
                    format!("za_{tag}"),
                    vec![(z(p, l, f), 1.0), (w(p), 1.0)],
                    Sense::Le,
                    1.0,
                ));
                rows.push(row(
                    Family::ExclLin,
                    format!("zb_{tag}"),
                    vec![(z(p, l, f), 1.0), (y(l, f), -1.0)],
                    Sense::Le,
                    0.0,
                ));
                rows.push(row(
                    Family::ExclLin,
                    format!("zc_{tag}"),
                    vec![(z(p, l, f), 1.0), (y(l, f), -1.0), (w(p), 1.0)],
                    Sense::Ge,
                    0.0,
                ));
            }
        }
    }

    // The added-density definitions are substituted into the limit rows.
    for p in 0..np {
        let class = scenario.pixels[p].area_class;
        let scaled = scenario.regulation.scaled(class);
        let mut terms = Vec::new();
        let mut rhs = 1.0;
        let mut w_coef = 0.0;
        for f in 0..nf {
            let limit = scenario.regulation.limit(class, f);
            let base = scenario.baseline_at(p, f) / limit;
            w_coef -= base;
            rhs -= base;
        }
        terms.push((w(p), w_coef));
        for l in 0..nl {
            for f in 0..nf {
                let band = &scenario.bands[f];
                let mut add = power_density(eirps[f], scenario.distance(p, l))?;
                if scaled {
                    add *= scaling(band);
                }
                terms.push((z(p, l, f), add / scenario.regulation.limit(class, f)));
            }
        }
        let (family, name) = match class {
            AreaClass::Residential => (Family::LimitResidential, format!("limres_p{p}")),
            AreaClass::GeneralPublic => (Family::LimitGeneral, format!("limgen_p{p}")),
        };
        rows.push(row(family, name, terms, Sense::Le, rhs));
    }

    let d_min = scenario.regulation.min_sensitive_distance_m;
    for &p in &scenario.grid.sensitive {
        for l in 0..nl {
            for f in 0..nf {
                rows.push(row(
                    Family::MinDistance,
                    format!("dmin_p{p}_l{l}_f{f}"),
                    vec![(y(l, f), scenario.distance(p, l) - d_min)],
                    Sense::Ge,
                    0.0,
                ));
            }
        }
    }

    for l in 0..nl {
        let terms = (0..nf).map(|f| (y(l, f), 1.0)).collect();
        rows.push(row(Family::SiteMax, format!("nmax_l{l}"), terms, Sense::Le, scenario.options.n_max as f64));
    }
    for l in 0..nl {
        for f in 0..nf {
            let allowed = if scenario.sites[l].allows(f) { 1.0 } else { 0.0 };
            rows.push(row(Family::SiteAllowed, format!("freq_l{l}_f{f}"), vec![(y(l, f), 1.0)], Sense::Le, allowed));
        }
    }

    let mut cost = vec![(Var::CTot, 1.0)];
    let mut fixed_zero = Vec::new();
    for l in 0..nl {
        for f in 0..nf {
            cost.push((y(l, f), -scenario.install_cost(l, f)));
            if !scenario.sites[l].allows(f) || !scenario.sensitive_feasible(l) {
                fixed_zero.push(y(l, f));
            }
        }
    }
    rows.push(row(Family::Cost, "ctot".to_string(), cost, Sense::Eq, 0.0));

    let mut objective = vec![(Var::CTot, 1.0)];
    for p in 0..np {
        for l in 0..nl {
            for f in 0..nf {
                objective.push((x(p, l, f), -scenario.alpha(l, f)));
            }
        }
    }

    Ok(ConstraintModel { n_pixels: np, n_sites: nl, n_bands: nf, objective, rows, fixed_zero })
}

fn number(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-4..1e15).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

const TERMS_PER_LINE: usize = 8;

fn write_expr(out: &mut String, terms: &[(Var, f64)]) {
    let mut written = 0;
    for &(var, c) in terms {
        if c == 0.0 {
            continue;
        }
        if written > 0 && written % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let sign = if c < 0.0 { "-" } else { "+" };
        if written == 0 && c > 0.0 {
            let _ = write!(out, " {} {var}", number(c));
        } else {
            let _ = write!(out, " {sign} {} {var}", number(c.abs()));
        }
        written += 1;
    }
    if written == 0 {
        out.push_str(" 0 C_TOT");
    }
}

/// Renders the model in CPLEX LP format.
pub fn emit_lp(model: &ConstraintModel) -> String {
    let mut out = String::new();
    out.push_str("\\ planning model\nMinimize\n obj:");
    write_expr(&mut out, &model.objective);
    out.push_str("\nSubject To\n");
    for r in &model.rows {
        let _ = write!(out, " {}:", r.name);
        write_expr(&mut out, &r.terms);
        let _ = writeln!(out, " {} {}", r.sense.symbol(), number(r.rhs));
    }
    out.push_str("Bounds\n C_TOT >= 0\n");
    for v in &model.fixed_zero {
        let _ = writeln!(out, " {v} = 0");
    }
    out.push_str("Binary\n");
    let vars = model.variables();
    for chunk in vars.iter().filter(|v| **v != Var::CTot).collect::<Vec<_>>().chunks(TERMS_PER_LINE) {
        out.push(' ');
        out.push_str(&chunk.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "));
        out.push('\n');
    }
    out.push_str("End\n");
    out
}
