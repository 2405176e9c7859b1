//! Point-source exposure model and regulation compliance.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::radio::SlotTable;
use crate::scenario::{AreaClass, Deployment, FrequencyBand, Scenario};

/// Equivalent isotropically radiated power in W.
pub fn eirp(band: &FrequencyBand) -> f64 {
    band.max_output_power_w * 10f64.powf(band.tx_gain_db / 10.0) / 10f64.powf(band.tx_loss_db / 10.0)
}

/// Far-field density at `distance_m` from an isotropic source of `eirp_w`.
pub fn power_density(eirp_w: f64, distance_m: f64) -> Result<f64> {
    if !(distance_m > 0.0) {
        return Err(Error::Contract(format!("power density at distance {distance_m} m")));
    }
    Ok(eirp_w / (4.0 * PI * distance_m * distance_m))
}

/// Combined time and statistical EIRP reduction of a band.
pub fn scaling(band: &FrequencyBand) -> f64 {
    band.time_scaling * band.stat_scaling
}

pub fn scaled_power_density(density: f64, band: &FrequencyBand) -> f64 {
    density * scaling(band)
}

pub fn field_from_density(density_w_m2: f64, impedance_ohm: f64) -> Result<f64> {
    if !(density_w_m2 >= 0.0) {
        return Err(Error::Contract(format!("negative power density {density_w_m2}")));
    }
    Ok((density_w_m2 * impedance_ohm).sqrt())
}

pub fn density_from_field(field_v_m: f64, impedance_ohm: f64) -> Result<f64> {
    if !(field_v_m >= 0.0) {
        return Err(Error::Contract(format!("negative field strength {field_v_m}")));
    }
    Ok(field_v_m * field_v_m / impedance_ohm)
}

/// Unscaled density each candidate gNB would add to each pixel.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityTable {
    pub density: SlotTable,
}

impl DensityTable {
    pub fn build(scenario: &Scenario) -> Self {
        let density =
            SlotTable::filled(scenario.n_pixels(), scenario.n_sites(), scenario.n_bands(), |site, band, out| {
                let e = eirp(&scenario.bands[band]);
                for (p, v) in out.iter_mut().enumerate() {
                    // heights differ by construction, so the distance is positive
                    *v = power_density(e, scenario.distance(p, site)).unwrap_or(f64::INFINITY);
                }
            });
        DensityTable { density }
    }

    pub fn get(&self, pixel: usize, site: usize, band: usize) -> f64 {
        self.density.get(pixel, site, band)
    }

    pub fn slot(&self, site: usize, band: usize) -> &[f64] {
        self.density.slot(site, band)
    }
}

/// Pixels inside each candidate gNB's exclusion zone.
#[derive(Clone, Debug, PartialEq)]
pub struct ZoneIndex {
    n_bands: usize,
    zones: Vec<Vec<u32>>,
}

impl ZoneIndex {
    pub fn build(scenario: &Scenario) -> Self {
        let nf = scenario.n_bands();
        let zones = (0..scenario.n_sites() * nf)
            .map(|k| {
                let (site, band) = (k / nf, k % nf);
                (0..scenario.n_pixels())
                    .filter(|&p| scenario.in_exclusion_zone(p, site, band))
                    .map(|p| p as u32)
                    .collect()
            })
            .collect();
        ZoneIndex { n_bands: nf, zones }
    }

    pub fn zone(&self, site: usize, band: usize) -> &[u32] {
        &self.zones[site * self.n_bands + band]
    }

    pub fn flags(&self, n_pixels: usize, deployment: &Deployment) -> Vec<bool> {
        let mut w = vec![false; n_pixels];
        for s in deployment.iter() {
            for &p in self.zone(s.site, s.band) {
                w[p as usize] = true;
            }
        }
        w
    }
}

/// Exclusion flag per pixel: inside the zone of at least one installed gNB.
pub fn exclusion_flags(scenario: &Scenario, deployment: &Deployment) -> Vec<bool> {
    (0..scenario.n_pixels()).map(|p| deployment.iter().any(|s| scenario.in_exclusion_zone(p, s.site, s.band))).collect()
}

/// Per-deployment exposure accumulators, indexed `pixel * bands + band`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExposureField {
    pub n_bands: usize,
    pub excluded: Vec<bool>,
    pub add_scaled: Vec<f64>,
    pub add_unscaled: Vec<f64>,
}

impl ExposureField {
    pub fn empty(n_pixels: usize, n_bands: usize) -> Self {
        ExposureField {
            n_bands,
            excluded: vec![false; n_pixels],
            add_scaled: vec![0.0; n_pixels * n_bands],
            add_unscaled: vec![0.0; n_pixels * n_bands],
        }
    }

    pub fn scaled(&self, pixel: usize, band: usize) -> f64 {
        self.add_scaled[pixel * self.n_bands + band]
    }

    pub fn unscaled(&self, pixel: usize, band: usize) -> f64 {
        self.add_unscaled[pixel * self.n_bands + band]
    }

    /// Density counted against the limit of `class` on `band`.
    pub fn added(&self, pixel: usize, band: usize, scaled: bool) -> f64 {
        if scaled {
            self.scaled(pixel, band)
        } else {
            self.unscaled(pixel, band)
        }
    }
}

/// Sums contributions of installed gNBs on non-excluded pixels, in
/// deployment order.
pub fn accumulate_exposure(scenario: &Scenario, table: &DensityTable, deployment: &Deployment) -> ExposureField {
    let excluded = exclusion_flags(scenario, deployment);
    accumulate_with_flags(scenario, table, deployment, excluded)
}

pub fn accumulate_with_flags(
    scenario: &Scenario,
    table: &DensityTable,
    deployment: &Deployment,
    excluded: Vec<bool>,
) -> ExposureField {
    let nf = scenario.n_bands();
    let mut field = ExposureField::empty(scenario.n_pixels(), nf);
    for s in deployment.iter() {
        let k = scaling(&scenario.bands[s.band]);
        let column = table.slot(s.site, s.band);
        for (p, &d) in column.iter().enumerate() {
            if !excluded[p] {
                let i = p * nf + s.band;
                field.add_unscaled[i] += d;
                field.add_scaled[i] += d * k;
            }
        }
    }
    field.excluded = excluded;
    field
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplianceViolation {
    pub pixel: usize,
    pub class: AreaClass,
    pub ratio: f64,
}

/// Sum over bands of (baseline + added density) / limit for one pixel.
pub fn compliance_ratio(scenario: &Scenario, exposure: &ExposureField, pixel: usize) -> f64 {
    if exposure.excluded[pixel] {
        return 0.0;
    }
    let class = scenario.pixels[pixel].area_class;
    let scaled = scenario.regulation.scaled(class);
    (0..scenario.n_bands())
        .map(|f| {
            (scenario.baseline_at(pixel, f) + exposure.added(pixel, f, scaled)) / scenario.regulation.limit(class, f)
        })
        .sum()
}

/// Every pixel whose compliance ratio exceeds one, in id order.
pub fn compliance_check(scenario: &Scenario, exposure: &ExposureField) -> Vec<ComplianceViolation> {
    (0..scenario.n_pixels())
        .filter_map(|p| {
            let ratio = compliance_ratio(scenario, exposure, p);
            (ratio > 1.0).then(|| ComplianceViolation { pixel: p, class: scenario.pixels[p].area_class, ratio })
        })
        .collect()
}
