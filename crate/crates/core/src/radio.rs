//! Massive-MIMO downlink model: shadow fading, large-scale gains, SIR and
//! throughput.

use std::f64::consts::LN_2;

use rand_distr::{Distribution, LogNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{substream, tag};
use crate::scenario::{Deployment, FrequencyBand, Scenario, ServiceRequirement};

/// Per-(pixel, site, band) table stored slot-major: all pixels of
/// `(site, band)` are contiguous.
#[derive(Clone, Debug, PartialEq)]
pub struct SlotTable {
    n_pixels: usize,
    n_bands: usize,
    values: Vec<f64>,
}

impl SlotTable {
    pub(crate) fn filled(
        n_pixels: usize,
        n_sites: usize,
        n_bands: usize,
        f: impl Fn(usize, usize, &mut [f64]) + Sync,
    ) -> Self {
        let mut values = vec![0.0; n_pixels * n_sites * n_bands];
        if n_pixels > 0 {
            values.par_chunks_mut(n_pixels).enumerate().for_each(|(k, chunk)| f(k / n_bands, k % n_bands, chunk));
        }
        SlotTable { n_pixels, n_bands, values }
    }

    pub fn get(&self, pixel: usize, site: usize, band: usize) -> f64 {
        self.values[(site * self.n_bands + band) * self.n_pixels + pixel]
    }

    /// All pixel values of one `(site, band)` pair.
    pub fn slot(&self, site: usize, band: usize) -> &[f64] {
        let start = (site * self.n_bands + band) * self.n_pixels;
        &self.values[start..start + self.n_pixels]
    }

    pub fn n_pixels(&self) -> usize {
        self.n_pixels
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl FadingTable {
    /// Explicit samples given as `z(pixel, site, band)`.
    pub fn from_fn(
        n_pixels: usize,
        n_sites: usize,
        n_bands: usize,
        z: impl Fn(usize, usize, usize) -> f64 + Sync,
    ) -> Result<Self> {
        let table = SlotTable::filled(n_pixels, n_sites, n_bands, |site, band, out| {
            for (p, v) in out.iter_mut().enumerate() {
                *v = z(p, site, band);
            }
        });
        if let Some(bad) = table.values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::Validation(format!("fading sample {bad} is not positive")));
        }
        Ok(FadingTable { seed: 0, z: table })
    }
}

/// Log-normal shadowing samples.
#[derive(Clone, Debug, PartialEq)]
pub struct FadingTable {
    pub seed: u64,
    pub z: SlotTable,
}

/// Large-scale gains `z / D^gamma`.
#[derive(Clone, Debug, PartialEq)]
pub struct BetaTable {
    pub beta: SlotTable,
}

impl BetaTable {
    pub fn get(&self, pixel: usize, site: usize, band: usize) -> f64 {
        self.beta.get(pixel, site, band)
    }

    pub fn slot(&self, site: usize, band: usize) -> &[f64] {
        self.beta.slot(site, band)
    }

    pub fn n_pixels(&self) -> usize {
        self.beta.n_pixels()
    }
}

/// Draws the fading table from the scenario seed and derives the gains.
///
/// Each `(site, band)` pair owns its own stream and pixels consume it in id
/// order, so the tables do not depend on scheduling.
pub fn build_fading_and_beta(scenario: &Scenario) -> (FadingTable, BetaTable) {
    let (np, nl, nf) = (scenario.n_pixels(), scenario.n_sites(), scenario.n_bands());
    let seed = scenario.options.master_seed;
    let z = SlotTable::filled(np, nl, nf, |site, band, out| {
        let sigma_db = scenario.bands[band].shadow_sigma_db;
        if !scenario.options.fading_enabled || sigma_db == 0.0 {
            out.iter_mut().for_each(|v| *v = 1.0);
            return;
        }
        let dist = LogNormal::new(0.0, sigma_db * std::f64::consts::LN_10 / 10.0).expect("sigma validated");
        let mut rng = substream(seed, &[tag::FADING, site as u64, band as u64]);
        out.iter_mut().for_each(|v| *v = dist.sample(&mut rng));
    });
    let fading = FadingTable { seed, z };
    let beta = beta_from_fading(scenario, &fading);
    (fading, beta)
}

/// Gains for a given fading table.
pub fn beta_from_fading(scenario: &Scenario, fading: &FadingTable) -> BetaTable {
    let (np, nl, nf) = (scenario.n_pixels(), scenario.n_sites(), scenario.n_bands());
    let beta = SlotTable::filled(np, nl, nf, |site, band, out| {
        let gamma = scenario.bands[band].path_loss_exponent;
        let zs = fading.z.slot(site, band);
        for (p, v) in out.iter_mut().enumerate() {
            *v = beta_coefficient(zs[p], scenario.distance(p, site), gamma);
        }
    });
    BetaTable { beta }
}

pub fn beta_coefficient(z: f64, distance_m: f64, path_loss_exponent: f64) -> f64 {
    z / distance_m.powf(path_loss_exponent)
}

/// SIR of `pixel` served by `serving` on `band` given every installed
/// co-channel gNB as an interferer.
pub fn sir(
    scenario: &Scenario,
    beta: &BetaTable,
    deployment: &Deployment,
    pixel: usize,
    serving: usize,
    band: usize,
) -> Result<f64> {
    if !deployment.contains(serving, band) {
        return Err(Error::Contract(format!("site {serving} has no gNB on band {band}")));
    }
    let signal = beta.get(pixel, serving, band).powi(2);
    let interference: f64 =
        deployment.sites_on(band).into_iter().filter(|&j| j != serving).map(|j| beta.get(pixel, j, band).powi(2)).sum();
    Ok(sir_from_parts(signal, interference, scenario.options.sir_cap))
}

pub fn sir_from_parts(signal: f64, interference: f64, cap: f64) -> f64 {
    if interference > 0.0 {
        signal / interference
    } else {
        cap
    }
}

/// Ratio of payload resources to total time-frequency resources.
pub fn shaping_factor(band: &FrequencyBand) -> Result<f64> {
    let n = band.ofdm_symbols as f64;
    let slot = n / band.subcarrier_spacing_hz + band.cyclic_prefix_s;
    let symbol = band.coherence_time_s / n;
    let pilot = band.pilot_symbols as f64 * symbol;
    let useful = 1.0 / band.subcarrier_spacing_hz;
    if pilot >= slot {
        return Err(Error::Config(format!("band {}: pilot time {pilot:e} s does not fit in slot {slot:e} s", band.id)));
    }
    Ok((slot - pilot) * useful / (slot * symbol))
}

/// Downlink rate in bit/s for a given SIR.
pub fn shannon_throughput(band: &FrequencyBand, shaping: f64, sir: f64) -> f64 {
    band.bandwidth_hz * shaping * (sir.ln_1p() / LN_2) / band.reuse_factor
}

pub fn throughput(
    scenario: &Scenario,
    beta: &BetaTable,
    deployment: &Deployment,
    pixel: usize,
    serving: usize,
    band: usize,
) -> Result<f64> {
    let s = sir(scenario, beta, deployment, pixel, serving, band)?;
    let b = &scenario.bands[band];
    Ok(shannon_throughput(b, shaping_factor(b)?, s))
}

/// Smallest SIR giving at least `t_min` bit/s.
pub fn min_sir_for_throughput(band: &FrequencyBand, shaping: f64, t_min: f64) -> f64 {
    (t_min * band.reuse_factor / (band.bandwidth_hz * shaping) * LN_2).exp_m1()
}

/// SIR threshold implied by the band's service requirement.
pub fn band_min_sir(band: &FrequencyBand) -> Result<f64> {
    Ok(match band.service {
        ServiceRequirement::Unconstrained => 0.0,
        ServiceRequirement::MinSir(s) => s,
        ServiceRequirement::MinThroughput(t) => min_sir_for_throughput(band, shaping_factor(band)?, t),
    })
}
