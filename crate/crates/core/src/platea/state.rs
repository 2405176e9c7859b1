use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exposure::{compliance_ratio, scaling, ExposureField};
use crate::instance::Instance;
use crate::scenario::{AreaClass, Deployment, Slot};

/// A deployment together with its exposure accumulators.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanState {
    pub deployment: Deployment,
    pub exposure: ExposureField,
}

impl PlanState {
    pub fn empty(inst: &Instance) -> Self {
        PlanState { deployment: Deployment::new(), exposure: ExposureField::empty(inst.n_pixels(), inst.n_bands()) }
    }

    /// Builds the state of `deployment` from nothing.
    pub fn from_deployment(inst: &Instance, deployment: &Deployment) -> std::result::Result<Self, InstallFailure> {
        let slots: Vec<Slot> = deployment.iter().collect();
        install_slots(inst, &PlanState::empty(inst), &slots)
    }
}

/// Why a tentative installation was rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "family")]
pub enum InstallFailure {
    SiteAllowed { site: usize, band: usize },
    AlreadyInstalled { site: usize, band: usize },
    MinDistance { site: usize },
    SiteMax { site: usize },
    LimitResidential { pixel: usize, ratio: f64 },
    LimitGeneral { pixel: usize, ratio: f64 },
}

impl InstallFailure {
    pub fn family(&self) -> &'static str {
        match self {
            InstallFailure::SiteAllowed { .. } => "site-allowed",
            InstallFailure::AlreadyInstalled { .. } => "already-installed",
            InstallFailure::MinDistance { .. } => "min-dist",
            InstallFailure::SiteMax { .. } => "site-max",
            InstallFailure::LimitResidential { .. } => "limit-res",
            InstallFailure::LimitGeneral { .. } => "limit-gen",
        }
    }
}

impl std::fmt::Display for InstallFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InstallFailure::SiteAllowed { site, band } => {
                write!(f, "site-allowed: band {band} not allowed at site {site}")
            }
            InstallFailure::AlreadyInstalled { site, band } => {
                write!(f, "band {band} already installed at site {site}")
            }
            InstallFailure::MinDistance { site } => write!(f, "min-dist: site {site} too close to a sensitive place"),
            InstallFailure::SiteMax { site } => write!(f, "site-max: too many gNBs at site {site}"),
            InstallFailure::LimitResidential { pixel, ratio } => {
                write!(f, "limit-res: pixel {pixel} at ratio {ratio:.4}")
            }
            InstallFailure::LimitGeneral { pixel, ratio } => write!(f, "limit-gen: pixel {pixel} at ratio {ratio:.4}"),
        }
    }
}

/// Tentatively installs `sites` on `band`. The input state is left untouched,
/// so discarding the result is the uninstall.
pub fn install_check(
    inst: &Instance,
    state: &PlanState,
    sites: &[usize],
    band: usize,
) -> std::result::Result<PlanState, InstallFailure> {
    let slots: Vec<Slot> = sites.iter().map(|&site| Slot::new(site, band)).collect();
    install_slots(inst, state, &slots)
}

/// Installs arbitrary slots on top of `state`. The result is identical, bit
/// for bit, to accumulating the whole deployment from scratch.
pub fn install_slots(
    inst: &Instance,
    state: &PlanState,
    slots: &[Slot],
) -> std::result::Result<PlanState, InstallFailure> {
    let s = &inst.scenario;
    let mut deployment = state.deployment.clone();
    for &slot in slots {
        if slot.site >= s.n_sites() || slot.band >= s.n_bands() || !inst.allowed(slot.site, slot.band) {
            return Err(InstallFailure::SiteAllowed { site: slot.site, band: slot.band });
        }
        if !inst.sensitive_feasible(slot.site) {
            return Err(InstallFailure::MinDistance { site: slot.site });
        }
        if !deployment.insert(slot) {
            return Err(InstallFailure::AlreadyInstalled { site: slot.site, band: slot.band });
        }
    }
    for &slot in slots {
        if deployment.bands_at(slot.site) > s.options.n_max {
            return Err(InstallFailure::SiteMax { site: slot.site });
        }
    }
    let exposure = extend_exposure(inst, &state.exposure, &deployment, slots);
    if let Some(failure) = first_violation(inst, &exposure) {
        return Err(failure);
    }
    Ok(PlanState { deployment, exposure })
}

/// Uninstalls `slots`, rebuilding exposure from the remaining deployment.
pub fn uninstall(inst: &Instance, state: &PlanState, slots: &[Slot]) -> PlanState {
    let mut deployment = state.deployment.clone();
    for &slot in slots {
        deployment.remove(slot);
    }
    let all: Vec<Slot> = deployment.iter().collect();
    let exposure = extend_exposure(inst, &ExposureField::empty(inst.n_pixels(), inst.n_bands()), &deployment, &all);
    PlanState { deployment, exposure }
}

/// Exposure of `deployment`, reusing `base` for bands no new slot touches.
/// Bands that gain a gNB are re-summed in deployment order.
fn extend_exposure(inst: &Instance, base: &ExposureField, deployment: &Deployment, new: &[Slot]) -> ExposureField {
    let np = inst.n_pixels();
    let nf = inst.n_bands();
    let mut excluded = base.excluded.clone();
    for slot in new {
        for &p in inst.zones.zone(slot.site, slot.band) {
            excluded[p as usize] = true;
        }
    }
    let mut field = base.clone();
    let mut touched = vec![false; nf];
    for slot in new {
        touched[slot.band] = true;
    }
    for p in 0..np {
        for f in 0..nf {
            if touched[f] || excluded[p] {
                field.add_unscaled[p * nf + f] = 0.0;
                field.add_scaled[p * nf + f] = 0.0;
            }
        }
    }
    for slot in deployment.iter().filter(|s| touched[s.band]) {
        let k = scaling(&inst.scenario.bands[slot.band]);
        for (p, &d) in inst.density.slot(slot.site, slot.band).iter().enumerate() {
            if !excluded[p] {
                let i = p * nf + slot.band;
                field.add_unscaled[i] += d;
                field.add_scaled[i] += d * k;
            }
        }
    }
    field.excluded = excluded;
    field
}

fn first_violation(inst: &Instance, exposure: &ExposureField) -> Option<InstallFailure> {
    let s = &inst.scenario;
    (0..s.n_pixels()).find_map(|p| {
        let ratio = compliance_ratio(s, exposure, p);
        (ratio > 1.0).then(|| match s.pixels[p].area_class {
            AreaClass::Residential => InstallFailure::LimitResidential { pixel: p, ratio },
            AreaClass::GeneralPublic => InstallFailure::LimitGeneral { pixel: p, ratio },
        })
    })
}

/// Serving gNB per pixel and band.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Association {
    n_bands: usize,
    server: Vec<Option<u32>>,
}

impl Association {
    pub fn empty(n_pixels: usize, n_bands: usize) -> Self {
        Association { n_bands, server: vec![None; n_pixels * n_bands] }
    }

    /// Rebuilds from `(pixel, site, band)` links; at most one per pixel and band.
    pub fn from_links(
        n_pixels: usize,
        n_bands: usize,
        links: impl IntoIterator<Item = (usize, usize, usize)>,
    ) -> Result<Self> {
        let mut a = Association::empty(n_pixels, n_bands);
        for (p, l, f) in links {
            if p >= n_pixels || f >= n_bands {
                return Err(Error::Dimension(format!("link ({p}, {l}, {f}) out of range")));
            }
            let slot = &mut a.server[p * n_bands + f];
            if slot.is_some() {
                return Err(Error::Contract(format!("pixel {p} has two servers on band {f}")));
            }
            *slot = Some(l as u32);
        }
        Ok(a)
    }

    pub fn n_pixels(&self) -> usize {
        self.server.len() / self.n_bands.max(1)
    }

    pub fn server(&self, pixel: usize, band: usize) -> Option<usize> {
        self.server[pixel * self.n_bands + band].map(|l| l as usize)
    }

    /// Links as `(pixel, site, band)`, ordered by pixel, then site, then band.
    pub fn links(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for p in 0..self.n_pixels() {
            let start = out.len();
            for f in 0..self.n_bands {
                if let Some(l) = self.server(p, f) {
                    out.push((p, l, f));
                }
            }
            out[start..].sort_unstable();
        }
        out
    }

    pub fn n_links(&self) -> usize {
        self.server.iter().filter(|s| s.is_some()).count()
    }

    pub fn served(&self, pixel: usize) -> bool {
        (0..self.n_bands).any(|f| self.server(pixel, f).is_some())
    }

    pub fn served_on(&self, band: usize) -> usize {
        (0..self.n_pixels()).filter(|&p| self.server(p, band).is_some()).count()
    }

    pub fn served_pixels(&self) -> usize {
        (0..self.n_pixels()).filter(|&p| self.served(p)).count()
    }

    pub fn all_served(&self) -> bool {
        (0..self.n_pixels()).all(|p| self.served(p))
    }
}

/// Associates every pixel on every band, bands in index order.
pub fn associate_pixels(inst: &Instance, state: &PlanState) -> Association {
    associate_from(inst, &state.deployment, &Association::empty(inst.n_pixels(), inst.n_bands()), 0)
}

/// Keeps the links of `base` on bands below `first_band` and associates the rest.
pub(crate) fn associate_from(
    inst: &Instance,
    deployment: &Deployment,
    base: &Association,
    first_band: usize,
) -> Association {
    let np = inst.n_pixels();
    let nf = inst.n_bands();
    let mut out = base.clone();
    let mut count = vec![0usize; np];
    for p in 0..np {
        for f in 0..nf {
            if f >= first_band {
                out.server[p * nf + f] = None;
            } else if out.server[p * nf + f].is_some() {
                count[p] += 1;
            }
        }
    }
    let n_ser = inst.scenario.options.n_ser;
    let cap = inst.scenario.options.sir_cap;
    for f in first_band..nf {
        let sites = deployment.sites_on(f);
        if sites.is_empty() {
            continue;
        }
        let beta = |p: usize, l: usize| inst.beta.get(p, l, f);
        let mut best: Vec<Option<usize>> = vec![None; np];
        for &l in &sites {
            for &p in inst.cover(l, f) {
                let p = p as usize;
                // strict comparison keeps the lowest site on ties
                if best[p].is_none_or(|b| beta(p, l) > beta(p, b)) {
                    best[p] = Some(l);
                }
            }
        }
        for p in 0..np {
            let Some(serving) = best[p] else { continue };
            if count[p] >= n_ser {
                continue;
            }
            let signal = beta(p, serving).powi(2);
            let interference: f64 = sites.iter().filter(|&&j| j != serving).map(|&j| beta(p, j).powi(2)).sum();
            let sir = crate::radio::sir_from_parts(signal, interference, cap);
            if sir >= inst.min_sir[f] {
                out.server[p * nf + f] = Some(serving as u32);
                count[p] += 1;
            }
        }
    }
    out
}

/// Installation cost and objective (cost minus pixel revenue).
pub fn compute_obj(inst: &Instance, deployment: &Deployment, association: &Association) -> (f64, f64) {
    let s = &inst.scenario;
    let c_tot: f64 = deployment.iter().map(|slot| s.install_cost(slot.site, slot.band)).sum();
    let revenue: f64 = association.links().into_iter().map(|(_, l, f)| s.alpha(l, f)).sum();
    (c_tot, c_tot - revenue)
}
