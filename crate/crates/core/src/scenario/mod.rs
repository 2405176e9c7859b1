//! World model: pixel grid, candidate sites, frequency bands and regulation.

mod generate;
mod io;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use generate::{compliance_distance, generate_synthetic, ExclusionRule, SyntheticConfig};
pub use io::{load_scenario, read_baseline_csv, save_scenario, write_baseline_csv, ScenarioFile};

/// Free-space impedance used by the field/density conversions.
pub const DEFAULT_IMPEDANCE_OHM: f64 = 377.0;
/// SIR assigned to a gNB that has no co-channel interferer.
pub const DEFAULT_SIR_CAP: f64 = 1e6;
pub const DEFAULT_EVALUATION_HEIGHT_M: f64 = 1.5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }
}

/// Axis-aligned rectangle in metres.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub width: f64,
    pub height: f64,
}

impl Rect {
    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x0 && p.x <= self.x0 + self.width && p.y >= self.y0 && p.y <= self.y0 + self.height
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }
}

/// Minimum service level a band must guarantee to an associated pixel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum ServiceRequirement {
    Unconstrained,
    MinSir(f64),
    /// Minimum downlink throughput in bit/s; the SIR threshold follows from
    /// the band's bandwidth, shaping factor and reuse factor.
    MinThroughput(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyBand {
    pub id: String,
    pub center_frequency_hz: f64,
    pub bandwidth_hz: f64,
    pub reuse_factor: f64,
    pub path_loss_exponent: f64,
    pub shadow_sigma_db: f64,
    pub max_output_power_w: f64,
    pub tx_gain_db: f64,
    pub tx_loss_db: f64,
    pub max_coverage_distance_m: f64,
    pub service: ServiceRequirement,
    pub ofdm_symbols: u32,
    pub pilot_symbols: u32,
    pub coherence_time_s: f64,
    pub cyclic_prefix_s: f64,
    pub subcarrier_spacing_hz: f64,
    pub time_scaling: f64,
    pub stat_scaling: f64,
    pub exclusion_distance_m: f64,
    pub equipment_cost_eur: f64,
    pub site_cost_eur: f64,
    pub alpha_eur: f64,
}

impl FrequencyBand {
    /// Mid-band micro cell (3.7 GHz, pole mounted).
    pub fn micro() -> Self {
        FrequencyBand {
            id: "f1".into(),
            center_frequency_hz: 3.7e9,
            bandwidth_hz: 80e6,
            reuse_factor: 1.0,
            path_loss_exponent: 3.19,
            shadow_sigma_db: 8.2,
            max_output_power_w: 200.0,
            tx_gain_db: 15.0,
            tx_loss_db: 2.32,
            max_coverage_distance_m: 200.0,
            service: ServiceRequirement::MinThroughput(30e6),
            ofdm_symbols: 14,
            pilot_symbols: 3,
            coherence_time_s: 500e-6,
            cyclic_prefix_s: 2.3e-6,
            subcarrier_spacing_hz: 30e3,
            time_scaling: 0.3,
            stat_scaling: 0.25,
            exclusion_distance_m: 11.0,
            equipment_cost_eur: 2791.0,
            site_cost_eur: 14852.0,
            alpha_eur: 50.0,
        }
    }

    /// Sub-GHz macro cell (700 MHz, roof-top mounted).
    pub fn macro_cell() -> Self {
        FrequencyBand {
            id: "f2".into(),
            center_frequency_hz: 700e6,
            bandwidth_hz: 20e6,
            reuse_factor: 1.0,
            path_loss_exponent: 3.0,
            shadow_sigma_db: 6.8,
            max_output_power_w: 65.0,
            tx_gain_db: 15.0,
            tx_loss_db: 2.32,
            max_coverage_distance_m: 900.0,
            service: ServiceRequirement::Unconstrained,
            ofdm_symbols: 14,
            pilot_symbols: 3,
            coherence_time_s: 500e-6,
            cyclic_prefix_s: 4.7e-6,
            subcarrier_spacing_hz: 15e3,
            time_scaling: 0.3,
            stat_scaling: 1.0,
            exclusion_distance_m: 5.0,
            equipment_cost_eur: 45673.0,
            site_cost_eur: 20101.0,
            alpha_eur: 500.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Validation(format!("band {}: {msg}", self.id)));
        if !(self.reuse_factor >= 1.0) {
            return bad("reuse factor must be >= 1");
        }
        if !(self.time_scaling > 0.0 && self.time_scaling <= 1.0) {
            return bad("time scaling must lie in (0, 1]");
        }
        if !(self.stat_scaling > 0.0 && self.stat_scaling <= 1.0) {
            return bad("statistical scaling must lie in (0, 1]");
        }
        if !(self.bandwidth_hz > 0.0) {
            return bad("bandwidth must be positive");
        }
        if self.pilot_symbols >= self.ofdm_symbols {
            return bad("pilot symbols must be fewer than OFDM symbols");
        }
        if !(self.max_coverage_distance_m > self.exclusion_distance_m) {
            return bad("coverage distance must exceed the exclusion distance");
        }
        if !(self.exclusion_distance_m >= 0.0) {
            return bad("exclusion distance must be non-negative");
        }
        if !(self.path_loss_exponent > 0.0) || !(self.shadow_sigma_db >= 0.0) {
            return bad("propagation parameters out of range");
        }
        if !(self.max_output_power_w >= 0.0) {
            return bad("output power must be non-negative");
        }
        if !(self.subcarrier_spacing_hz > 0.0 && self.coherence_time_s > 0.0 && self.cyclic_prefix_s >= 0.0) {
            return bad("OFDM timing parameters out of range");
        }
        if self.equipment_cost_eur < 0.0 || self.site_cost_eur < 0.0 {
            return bad("costs must be non-negative");
        }
        match self.service {
            ServiceRequirement::MinSir(s) if !(s >= 0.0) => bad("minimum SIR must be non-negative"),
            ServiceRequirement::MinThroughput(t) if !(t >= 0.0) => bad("minimum throughput must be non-negative"),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateSite {
    pub id: usize,
    pub position: Point,
    pub antenna_height_m: f64,
    pub allowed_bands: BTreeSet<usize>,
    /// Site cost per band index, replacing the band default.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub site_cost_overrides: BTreeMap<usize, f64>,
    /// Revenue per served pixel per band index, replacing the band default.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub alpha_overrides: BTreeMap<usize, f64>,
}

impl CandidateSite {
    pub fn new(id: usize, position: Point, antenna_height_m: f64, bands: impl IntoIterator<Item = usize>) -> Self {
        CandidateSite {
            id,
            position,
            antenna_height_m,
            allowed_bands: bands.into_iter().collect(),
            site_cost_overrides: BTreeMap::new(),
            alpha_overrides: BTreeMap::new(),
        }
    }

    pub fn allows(&self, band: usize) -> bool {
        self.allowed_bands.contains(&band)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AreaClass {
    Residential,
    GeneralPublic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Pixel {
    pub id: usize,
    pub center: Point,
    pub evaluation_height_m: f64,
    pub area_class: AreaClass,
    pub sensitive: bool,
}

/// Rectangular tessellation; pixel ids run row-major from the lower-left corner.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PixelGrid {
    pub pixel_size_m: f64,
    pub nx: usize,
    pub ny: usize,
    #[serde(default = "default_eval_height")]
    pub evaluation_height_m: f64,
    /// Pixels classified as general-public areas; all others are residential.
    #[serde(default)]
    pub general_public: BTreeSet<usize>,
    #[serde(default)]
    pub sensitive: BTreeSet<usize>,
}

fn default_eval_height() -> f64 {
    DEFAULT_EVALUATION_HEIGHT_M
}

impl PixelGrid {
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn pixels(&self, bounds: &Rect) -> Vec<Pixel> {
        let s = self.pixel_size_m;
        (0..self.len())
            .map(|id| {
                let (ix, iy) = (id % self.nx, id / self.nx);
                Pixel {
                    id,
                    center: Point::new(bounds.x0 + (ix as f64 + 0.5) * s, bounds.y0 + (iy as f64 + 0.5) * s),
                    evaluation_height_m: self.evaluation_height_m,
                    area_class: if self.general_public.contains(&id) {
                        AreaClass::GeneralPublic
                    } else {
                        AreaClass::Residential
                    },
                    sensitive: self.sensitive.contains(&id),
                }
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegulationProfile {
    pub name: String,
    /// Power-density limit per band index for residential pixels (W/m²).
    pub residential_limit_w_m2: Vec<f64>,
    /// Power-density limit per band index for general-public pixels (W/m²).
    pub general_limit_w_m2: Vec<f64>,
    pub min_sensitive_distance_m: f64,
    pub apply_scaling_in_residential: bool,
    pub apply_scaling_in_general: bool,
}

impl RegulationProfile {
    /// Rome rules: 6 V/m in residential areas, 20/40 V/m (below/above 3 GHz)
    /// in general-public areas, 100 m from sensitive places.
    pub fn rome(bands: &[FrequencyBand], impedance_ohm: f64) -> Self {
        let res = 6.0f64.powi(2) / impedance_ohm;
        RegulationProfile {
            name: "R6".into(),
            residential_limit_w_m2: vec![res; bands.len()],
            general_limit_w_m2: bands
                .iter()
                .map(|b| {
                    let e: f64 = if b.center_frequency_hz < 3e9 { 20.0 } else { 40.0 };
                    e * e / impedance_ohm
                })
                .collect(),
            min_sensitive_distance_m: 100.0,
            apply_scaling_in_residential: true,
            apply_scaling_in_general: false,
        }
    }

    /// National rules: same limits as Rome without the sensitive-place distance.
    pub fn italy(bands: &[FrequencyBand], impedance_ohm: f64) -> Self {
        RegulationProfile { name: "R4".into(), min_sensitive_distance_m: 0.0, ..Self::rome(bands, impedance_ohm) }
    }

    /// Replaces every residential limit with the rounded nominal 0.1 W/m².
    pub fn with_nominal_residential_limit(mut self) -> Self {
        self.residential_limit_w_m2.iter_mut().for_each(|l| *l = 0.1);
        self
    }

    pub fn limit(&self, class: AreaClass, band: usize) -> f64 {
        match class {
            AreaClass::Residential => self.residential_limit_w_m2[band],
            AreaClass::GeneralPublic => self.general_limit_w_m2[band],
        }
    }

    pub fn scaled(&self, class: AreaClass) -> bool {
        match class {
            AreaClass::Residential => self.apply_scaling_in_residential,
            AreaClass::GeneralPublic => self.apply_scaling_in_general,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioOptions {
    pub n_ser: usize,
    pub n_max: usize,
    #[serde(default = "default_impedance")]
    pub impedance_ohm: f64,
    pub master_seed: u64,
    #[serde(default = "default_sir_cap")]
    pub sir_cap: f64,
    #[serde(default = "default_true")]
    pub fading_enabled: bool,
}

fn default_impedance() -> f64 {
    DEFAULT_IMPEDANCE_OHM
}

fn default_sir_cap() -> f64 {
    DEFAULT_SIR_CAP
}

fn default_true() -> bool {
    true
}

impl Default for ScenarioOptions {
    fn default() -> Self {
        ScenarioOptions {
            n_ser: 2,
            n_max: 1,
            impedance_ohm: DEFAULT_IMPEDANCE_OHM,
            master_seed: 0,
            sir_cap: DEFAULT_SIR_CAP,
            fading_enabled: true,
        }
    }
}

/// Immutable description of a planning instance.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub bounds: Rect,
    pub grid: PixelGrid,
    pub pixels: Vec<Pixel>,
    pub sites: Vec<CandidateSite>,
    pub bands: Vec<FrequencyBand>,
    pub regulation: RegulationProfile,
    /// Pre-existing exposure, indexed `pixel * bands + band` (W/m²).
    pub baseline: Vec<f64>,
    pub options: ScenarioOptions,
}

impl Scenario {
    pub fn new(
        bounds: Rect,
        grid: PixelGrid,
        sites: Vec<CandidateSite>,
        bands: Vec<FrequencyBand>,
        regulation: RegulationProfile,
        baseline: Option<Vec<f64>>,
        options: ScenarioOptions,
    ) -> Result<Self> {
        let pixels = grid.pixels(&bounds);
        let baseline = baseline.unwrap_or_else(|| vec![0.0; pixels.len() * bands.len()]);
        let s = Scenario { bounds, grid, pixels, sites, bands, regulation, baseline, options };
        s.validate()?;
        Ok(s)
    }

    pub fn n_pixels(&self) -> usize {
        self.pixels.len()
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn n_bands(&self) -> usize {
        self.bands.len()
    }

    pub fn band_index(&self, id: &str) -> Option<usize> {
        self.bands.iter().position(|b| b.id == id)
    }

    pub fn baseline_at(&self, pixel: usize, band: usize) -> f64 {
        self.baseline[pixel * self.bands.len() + band]
    }

    /// Sets a uniform pre-existing density on every pixel and band.
    pub fn set_uniform_baseline(&mut self, per_band_w_m2: f64) {
        self.baseline.iter_mut().for_each(|b| *b = per_band_w_m2);
    }

    /// Site plus equipment cost of a gNB on `band` at `site`.
    pub fn install_cost(&self, site: usize, band: usize) -> f64 {
        let b = &self.bands[band];
        let site_cost = self.sites[site].site_cost_overrides.get(&band).copied().unwrap_or(b.site_cost_eur);
        b.equipment_cost_eur + site_cost
    }

    pub fn alpha(&self, site: usize, band: usize) -> f64 {
        self.sites[site].alpha_overrides.get(&band).copied().unwrap_or(self.bands[band].alpha_eur)
    }

    /// Sets a uniform per-pixel revenue on `band`, dropping per-site overrides.
    pub fn set_alpha(&mut self, band: usize, alpha: f64) {
        self.bands[band].alpha_eur = alpha;
        for s in &mut self.sites {
            s.alpha_overrides.remove(&band);
        }
    }

    pub fn distance(&self, pixel: usize, site: usize) -> f64 {
        distance(&self.pixels[pixel], &self.sites[site])
    }

    pub fn sensitive_feasible(&self, site: usize) -> bool {
        sensitive_feasible(&self.sites[site], self)
    }

    pub fn in_exclusion_zone(&self, pixel: usize, site: usize, band: usize) -> bool {
        in_exclusion_zone(&self.pixels[pixel], &self.sites[site], &self.bands[band])
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Validation(m));
        let g = &self.grid;
        if !(g.pixel_size_m > 0.0) || g.nx == 0 || g.ny == 0 {
            return bad("pixel grid must have positive size and dimensions".into());
        }
        let tol = 1e-6 * g.pixel_size_m;
        if (g.nx as f64 * g.pixel_size_m - self.bounds.width).abs() > tol
            || (g.ny as f64 * g.pixel_size_m - self.bounds.height).abs() > tol
        {
            return bad(format!(
                "pixel grid {}x{} of {} m does not tile bounds {} x {} m",
                g.nx, g.ny, g.pixel_size_m, self.bounds.width, self.bounds.height
            ));
        }
        if let Some(&p) = g.general_public.iter().chain(g.sensitive.iter()).find(|&&p| p >= g.len()) {
            return bad(format!("pixel id {p} outside the grid"));
        }
        if self.bands.is_empty() {
            return bad("at least one frequency band is required".into());
        }
        for b in &self.bands {
            b.validate()?;
        }
        let mut ids = BTreeSet::new();
        for b in &self.bands {
            if !ids.insert(b.id.as_str()) {
                return bad(format!("duplicate band id {}", b.id));
            }
        }
        for (i, s) in self.sites.iter().enumerate() {
            if s.id != i {
                return bad(format!("site at position {i} has id {}; ids must be 0..n in order", s.id));
            }
            if s.allowed_bands.is_empty() {
                return bad(format!("site {i} allows no band"));
            }
            if let Some(b) = s.allowed_bands.iter().find(|&&b| b >= self.bands.len()) {
                return bad(format!("site {i} references unknown band index {b}"));
            }
            if !self.bounds.contains(s.position) {
                return bad(format!("site {i} lies outside the scenario bounds"));
            }
            if !(s.antenna_height_m >= 0.0) {
                return bad(format!("site {i} has a negative antenna height"));
            }
        }
        let r = &self.regulation;
        if r.residential_limit_w_m2.len() != self.bands.len() || r.general_limit_w_m2.len() != self.bands.len() {
            return bad("regulation must give one limit per band".into());
        }
        if r.residential_limit_w_m2.iter().chain(&r.general_limit_w_m2).any(|&l| !(l > 0.0)) {
            return bad("all power-density limits must be positive".into());
        }
        if !(r.min_sensitive_distance_m >= 0.0) {
            return bad("minimum sensitive distance must be non-negative".into());
        }
        if self.baseline.len() != self.pixels.len() * self.bands.len() {
            return bad(format!(
                "baseline has {} entries, expected {}",
                self.baseline.len(),
                self.pixels.len() * self.bands.len()
            ));
        }
        if self.baseline.iter().any(|&b| !(b >= 0.0)) {
            return bad("baseline densities must be non-negative".into());
        }
        let o = &self.options;
        if o.n_ser < 1 || o.n_max < 1 {
            return bad("N_SER and N_MAX must be at least 1".into());
        }
        if !(o.impedance_ohm > 0.0) || !(o.sir_cap > 0.0) {
            return bad("impedance and SIR cap must be positive".into());
        }
        Ok(())
    }
}

/// 3D distance between the pixel centre at evaluation height and the antenna.
pub fn distance(pixel: &Pixel, site: &CandidateSite) -> f64 {
    let dx = pixel.center.x - site.position.x;
    let dy = pixel.center.y - site.position.y;
    let dz = site.antenna_height_m - pixel.evaluation_height_m;
    (dx * dx + dy * dy + dz * dz).sqrt()
}

pub fn sensitive_feasible(site: &CandidateSite, scenario: &Scenario) -> bool {
    let d_min = scenario.regulation.min_sensitive_distance_m;
    d_min <= 0.0 || scenario.grid.sensitive.iter().all(|&p| distance(&scenario.pixels[p], site) >= d_min)
}

pub fn in_exclusion_zone(pixel: &Pixel, site: &CandidateSite, band: &FrequencyBand) -> bool {
    distance(pixel, site) < band.exclusion_distance_m
}

/// A single gNB: `band` installed at `site`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Slot {
    pub site: usize,
    pub band: usize,
}

impl Slot {
    pub fn new(site: usize, band: usize) -> Self {
        Slot { site, band }
    }
}

/// Set of installed gNBs, kept in (site, band) order.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Deployment {
    slots: BTreeSet<Slot>,
}

impl Deployment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, slot: Slot) -> bool {
        self.slots.insert(slot)
    }

    pub fn remove(&mut self, slot: Slot) -> bool {
        self.slots.remove(&slot)
    }

    pub fn contains(&self, site: usize, band: usize) -> bool {
        self.slots.contains(&Slot::new(site, band))
    }

    pub fn iter(&self) -> impl Iterator<Item = Slot> + '_ {
        self.slots.iter().copied()
    }

    /// Sites hosting a gNB on `band`, ascending.
    pub fn sites_on(&self, band: usize) -> Vec<usize> {
        self.slots.iter().filter(|s| s.band == band).map(|s| s.site).collect()
    }

    pub fn count_on(&self, band: usize) -> usize {
        self.slots.iter().filter(|s| s.band == band).count()
    }

    pub fn bands_at(&self, site: usize) -> usize {
        self.slots.range(Slot::new(site, 0)..Slot::new(site + 1, 0)).count()
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }
}

impl FromIterator<Slot> for Deployment {
    fn from_iter<T: IntoIterator<Item = Slot>>(iter: T) -> Self {
        Deployment { slots: iter.into_iter().collect() }
    }
}
