//! Synthetic neighbourhood generator calibrated on the reference district.

use std::collections::BTreeSet;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{
    AreaClass, CandidateSite, FrequencyBand, PixelGrid, Point, Rect, RegulationProfile, Scenario, ScenarioOptions,
    DEFAULT_EVALUATION_HEIGHT_M, DEFAULT_IMPEDANCE_OHM,
};
use crate::error::{Error, Result};
use crate::exposure::eirp;
use crate::rng::{substream, tag};

const MICRO_HEIGHT_M: f64 = 10.0;
const MACRO_HEIGHT_M: f64 = 25.0;

/// How band exclusion distances are set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionRule {
    /// Keep the band preset values (11 m micro, 5 m macro).
    Preset,
    /// Widen each zone to the distance at which one gNB alone meets the
    /// strictest applicable limit under the point-source model.
    SingleGnbCompliance,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub area_km2: f64,
    pub pixel_size_m: f64,
    pub n_sites_f1: usize,
    pub n_sites_f2: usize,
    /// Roof-top sites allowed on both bands.
    #[serde(default)]
    pub n_sites_dual: usize,
    pub sensitive_fraction: f64,
    pub min_sensitive_distance_m: f64,
    pub exclusion: ExclusionRule,
    pub n_ser: usize,
    pub n_max: usize,
    pub seed: u64,
}

impl SyntheticConfig {
    /// Reference district scale: 2.47 km², 10 m pixels, 69 candidate sites.
    pub fn tmc(seed: u64) -> Self {
        SyntheticConfig {
            area_km2: 2.47,
            pixel_size_m: 10.0,
            n_sites_f1: 54,
            n_sites_f2: 15,
            n_sites_dual: 0,
            sensitive_fraction: 0.02,
            min_sensitive_distance_m: 100.0,
            exclusion: ExclusionRule::SingleGnbCompliance,
            n_ser: 2,
            n_max: 1,
            seed,
        }
    }

    /// Desk-scale instance: 280 m square of 20 m pixels, eight candidate gNBs.
    pub fn small(seed: u64) -> Self {
        SyntheticConfig {
            area_km2: 0.0784,
            pixel_size_m: 20.0,
            n_sites_f1: 4,
            n_sites_f2: 2,
            n_sites_dual: 1,
            sensitive_fraction: 0.0,
            min_sensitive_distance_m: 0.0,
            exclusion: ExclusionRule::SingleGnbCompliance,
            n_ser: 2,
            n_max: 1,
            seed,
        }
    }
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self::tmc(0)
    }
}

fn grid_dims(area_m2: f64, pixel: f64) -> (usize, usize) {
    let nx = (area_m2.sqrt() / pixel).ceil().max(1.0) as usize;
    let ny = (area_m2 / (nx as f64 * pixel) / pixel).ceil().max(1.0) as usize;
    (nx, ny)
}

pub fn generate_synthetic(cfg: &SyntheticConfig) -> Result<Scenario> {
    if !(cfg.area_km2 > 0.0) || !(cfg.pixel_size_m > 0.0) {
        return Err(Error::Config("area and pixel size must be positive".into()));
    }
    if cfg.n_sites_f1 + cfg.n_sites_f2 + cfg.n_sites_dual == 0 {
        return Err(Error::Config("at least one candidate site is required".into()));
    }
    if !(0.0..1.0).contains(&cfg.sensitive_fraction) {
        return Err(Error::Config("sensitive fraction must lie in [0, 1)".into()));
    }
    let mut rng = substream(cfg.seed, &[tag::GENERATOR]);
    let ps = cfg.pixel_size_m;
    let (nx, ny) = grid_dims(cfg.area_km2 * 1e6, ps);
    let bounds = Rect { x0: 0.0, y0: 0.0, width: nx as f64 * ps, height: ny as f64 * ps };

    // sensitive places as rectangular patches
    let n_pixels = nx * ny;
    let target = (cfg.sensitive_fraction * n_pixels as f64).round() as usize;
    let mut sensitive = BTreeSet::new();
    let max_side = ((80.0 / ps).round() as usize).clamp(1, nx.min(ny));
    let min_side = ((30.0 / ps).round() as usize).clamp(1, max_side);
    while sensitive.len() < target {
        let w = rng.random_range(min_side..=max_side);
        let h = rng.random_range(min_side..=max_side);
        let ix = rng.random_range(0..=nx - w);
        let iy = rng.random_range(0..=ny - h);
        for y in iy..iy + h {
            for x in ix..ix + w {
                sensitive.insert(y * nx + x);
            }
        }
    }

    let mut sites = Vec::new();
    let clamp = |p: Point| Point::new(p.x.clamp(0.0, bounds.width), p.y.clamp(0.0, bounds.height));

    // micro sites on a jittered interior lattice
    if cfg.n_sites_f1 > 0 {
        let n = cfg.n_sites_f1;
        let inset = 0.05;
        let (iw, ih) = (bounds.width * (1.0 - 2.0 * inset), bounds.height * (1.0 - 2.0 * inset));
        let cols = ((n as f64 * iw / ih).sqrt().ceil() as usize).max(1);
        let rows = n.div_ceil(cols);
        let (cw, ch) = (iw / cols as f64, ih / rows as f64);
        let mut cells: Vec<usize> = index::sample(&mut rng, rows * cols, n).into_vec();
        cells.sort_unstable();
        for c in cells {
            let (col, row) = (c % cols, c / cols);
            let jx = rng.random_range(-0.3..0.3) * cw;
            let jy = rng.random_range(-0.3..0.3) * ch;
            let p = Point::new(
                bounds.width * inset + (col as f64 + 0.5) * cw + jx,
                bounds.height * inset + (row as f64 + 0.5) * ch + jy,
            );
            sites.push(CandidateSite::new(sites.len(), clamp(p), MICRO_HEIGHT_M, [0]));
        }
    }

    // macro sites spread along a ring towards the borders
    if cfg.n_sites_f2 > 0 {
        let n = cfg.n_sites_f2;
        let inset = 0.2;
        let (x0, y0) = (bounds.width * inset, bounds.height * inset);
        let (w, h) = (bounds.width * (1.0 - 2.0 * inset), bounds.height * (1.0 - 2.0 * inset));
        let perimeter = 2.0 * (w + h);
        let phase: f64 = rng.random();
        for i in 0..n {
            let t = ((i as f64 + phase + rng.random_range(-0.2..0.2)) / n as f64).rem_euclid(1.0) * perimeter;
            let p = if t < w {
                Point::new(x0 + t, y0)
            } else if t < w + h {
                Point::new(x0 + w, y0 + (t - w))
            } else if t < 2.0 * w + h {
                Point::new(x0 + w - (t - w - h), y0 + h)
            } else {
                Point::new(x0, y0 + h - (t - 2.0 * w - h))
            };
            sites.push(CandidateSite::new(sites.len(), clamp(p), MACRO_HEIGHT_M, [1]));
        }
    }

    for _ in 0..cfg.n_sites_dual {
        let p = Point::new(rng.random_range(0.0..bounds.width), rng.random_range(0.0..bounds.height));
        sites.push(CandidateSite::new(sites.len(), p, MACRO_HEIGHT_M, [0, 1]));
    }

    let mut bands = vec![FrequencyBand::micro(), FrequencyBand::macro_cell()];
    let mut regulation = RegulationProfile::rome(&bands, DEFAULT_IMPEDANCE_OHM);
    regulation.min_sensitive_distance_m = cfg.min_sensitive_distance_m;
    let grid = PixelGrid {
        pixel_size_m: ps,
        nx,
        ny,
        evaluation_height_m: DEFAULT_EVALUATION_HEIGHT_M,
        general_public: BTreeSet::new(),
        sensitive,
    };
    if cfg.exclusion == ExclusionRule::SingleGnbCompliance {
        let classes = [AreaClass::Residential];
        for (f, band) in bands.iter_mut().enumerate() {
            let safe = compliance_distance(band, &regulation, f, &classes);
            band.exclusion_distance_m = band.exclusion_distance_m.max((safe * 10.0).ceil() / 10.0);
        }
    }
    let options =
        ScenarioOptions { n_ser: cfg.n_ser, n_max: cfg.n_max, master_seed: cfg.seed, ..ScenarioOptions::default() };
    Scenario::new(bounds, grid, sites, bands, regulation, None, options)
}

/// Distance beyond which a lone gNB on `band` stays within the limits of every
/// listed area class.
pub fn compliance_distance(
    band: &FrequencyBand,
    regulation: &RegulationProfile,
    band_index: usize,
    classes: &[AreaClass],
) -> f64 {
    let e = eirp(band);
    classes
        .iter()
        .map(|&c| {
            let scale = if regulation.scaled(c) { band.time_scaling * band.stat_scaling } else { 1.0 };
            (e * scale / (4.0 * std::f64::consts::PI * regulation.limit(c, band_index))).sqrt()
        })
        .fold(0.0, f64::max)
}
