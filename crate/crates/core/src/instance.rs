//! A scenario with every table the planners need, built once and shared.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exposure::{DensityTable, ZoneIndex};
use crate::radio::{band_min_sir, beta_from_fading, build_fading_and_beta, shaping_factor, BetaTable, FadingTable};
use crate::scenario::Scenario;

#[derive(Clone, Debug)]
pub struct Instance {
    pub scenario: Scenario,
    pub fading: FadingTable,
    pub beta: BetaTable,
    pub density: DensityTable,
    pub zones: ZoneIndex,
    /// Pixels within coverage distance of each `(site, band)`.
    cover: Vec<Vec<u32>>,
    pub shaping: Vec<f64>,
    pub min_sir: Vec<f64>,
    sensitive_ok: Vec<bool>,
}

impl Instance {
    pub fn new(scenario: Scenario) -> Result<Self> {
        let (fading, _) = build_fading_and_beta(&scenario);
        Self::with_fading(scenario, fading)
    }

    /// Builds the instance around an externally supplied fading table.
    pub fn with_fading(scenario: Scenario, fading: FadingTable) -> Result<Self> {
        scenario.validate()?;
        let z = &fading.z;
        if z.n_pixels() != scenario.n_pixels()
            || z.len() != scenario.n_pixels() * scenario.n_sites() * scenario.n_bands()
        {
            return Err(Error::Dimension("fading table does not match the scenario".into()));
        }
        let shaping = scenario.bands.iter().map(shaping_factor).collect::<Result<Vec<_>>>()?;
        for (band, g) in scenario.bands.iter().zip(&shaping) {
            if *g > 1.0 {
                log::warn!("band {}: shaping factor {g:.4} exceeds 1", band.id);
            }
        }
        let min_sir = scenario.bands.iter().map(band_min_sir).collect::<Result<Vec<_>>>()?;
        let beta = beta_from_fading(&scenario, &fading);
        let density = DensityTable::build(&scenario);
        let zones = ZoneIndex::build(&scenario);
        let nf = scenario.n_bands();
        let cover = (0..scenario.n_sites() * nf)
            .into_par_iter()
            .map(|k| {
                let (site, band) = (k / nf, k % nf);
                let d_max = scenario.bands[band].max_coverage_distance_m;
                (0..scenario.n_pixels()).filter(|&p| scenario.distance(p, site) <= d_max).map(|p| p as u32).collect()
            })
            .collect();
        let sensitive_ok = (0..scenario.n_sites()).map(|l| scenario.sensitive_feasible(l)).collect();
        Ok(Instance { scenario, fading, beta, density, zones, cover, shaping, min_sir, sensitive_ok })
    }

    pub fn n_pixels(&self) -> usize {
        self.scenario.n_pixels()
    }

    pub fn n_bands(&self) -> usize {
        self.scenario.n_bands()
    }

    pub fn cover(&self, site: usize, band: usize) -> &[u32] {
        &self.cover[site * self.n_bands() + band]
    }

    pub fn allowed(&self, site: usize, band: usize) -> bool {
        self.scenario.sites[site].allows(band)
    }

    pub fn sensitive_feasible(&self, site: usize) -> bool {
        self.sensitive_ok[site]
    }

    /// Number of sites allowed on `band`.
    pub fn allowed_count(&self, band: usize) -> usize {
        self.scenario.sites.iter().filter(|s| s.allows(band)).count()
    }

    /// Sites allowed on `band` and clear of every sensitive place, ascending.
    pub fn pool(&self, band: usize) -> Vec<usize> {
        (0..self.scenario.n_sites()).filter(|&l| self.allowed(l, band) && self.sensitive_ok[l]).collect()
    }
}
