#![allow(dead_code)]

use std::collections::BTreeSet;

use emfplan::scenario::{
    generate_synthetic, CandidateSite, FrequencyBand, PixelGrid, Point, Rect, RegulationProfile, Scenario,
    ScenarioOptions, SyntheticConfig,
};

/// Grid of `nx` by `ny` pixels of `size` metres anchored at the origin.
pub fn grid(nx: usize, ny: usize, size: f64) -> (Rect, PixelGrid) {
    let bounds = Rect { x0: 0.0, y0: 0.0, width: nx as f64 * size, height: ny as f64 * size };
    let grid = PixelGrid {
        pixel_size_m: size,
        nx,
        ny,
        evaluation_height_m: 1.5,
        general_public: BTreeSet::new(),
        sensitive: BTreeSet::new(),
    };
    (bounds, grid)
}

pub fn micro_site(id: usize, x: f64, y: f64) -> CandidateSite {
    CandidateSite::new(id, Point::new(x, y), 10.0, [0])
}

pub fn macro_site(id: usize, x: f64, y: f64) -> CandidateSite {
    CandidateSite::new(id, Point::new(x, y), 25.0, [1])
}

pub fn two_bands() -> Vec<FrequencyBand> {
    vec![FrequencyBand::micro(), FrequencyBand::macro_cell()]
}

/// Toy scenario under the Rome profile with default options.
pub fn toy(nx: usize, ny: usize, size: f64, sites: Vec<CandidateSite>, bands: Vec<FrequencyBand>) -> Scenario {
    toy_with(nx, ny, size, sites, bands, |_, _| {}, ScenarioOptions::default())
}

pub fn toy_with(
    nx: usize,
    ny: usize,
    size: f64,
    sites: Vec<CandidateSite>,
    bands: Vec<FrequencyBand>,
    tweak: impl FnOnce(&mut PixelGrid, &mut RegulationProfile),
    options: ScenarioOptions,
) -> Scenario {
    let (bounds, mut grid) = grid(nx, ny, size);
    let mut reg = RegulationProfile::rome(&bands, options.impedance_ohm);
    tweak(&mut grid, &mut reg);
    Scenario::new(bounds, grid, sites, bands, reg, None, options).expect("valid toy scenario")
}

pub fn small(seed: u64) -> Scenario {
    generate_synthetic(&SyntheticConfig::small(seed)).expect("small preset")
}

pub fn tmc(seed: u64) -> Scenario {
    generate_synthetic(&SyntheticConfig::tmc(seed)).expect("tmc preset")
}
