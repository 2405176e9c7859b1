//! JSON scenario documents with a companion baseline CSV.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{CandidateSite, FrequencyBand, PixelGrid, Rect, RegulationProfile, Scenario, ScenarioOptions};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub bounds: Rect,
    pub pixel_grid: PixelGrid,
    pub sites: Vec<CandidateSite>,
    pub bands: Vec<FrequencyBand>,
    pub regulation: RegulationProfile,
    pub options: FileOptions,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileOptions {
    #[serde(flatten)]
    pub scenario: ScenarioOptions,
    /// Baseline CSV path, relative to the JSON document.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline_csv: Option<String>,
}

impl ScenarioFile {
    pub fn from_scenario(s: &Scenario, baseline_csv: Option<String>) -> Self {
        ScenarioFile {
            bounds: s.bounds,
            pixel_grid: s.grid.clone(),
            sites: s.sites.clone(),
            bands: s.bands.clone(),
            regulation: s.regulation.clone(),
            options: FileOptions { scenario: s.options.clone(), baseline_csv },
        }
    }

    pub fn into_scenario(self, baseline: Option<Vec<f64>>) -> Result<Scenario> {
        Scenario::new(
            self.bounds,
            self.pixel_grid,
            self.sites,
            self.bands,
            self.regulation,
            baseline,
            self.options.scenario,
        )
    }
}

fn baseline_path_for(json: &Path) -> PathBuf {
    let stem = json.file_stem().and_then(|s| s.to_str()).unwrap_or("scenario");
    json.with_file_name(format!("{stem}.baseline.csv"))
}

/// Writes `path` and `<stem>.baseline.csv` next to it.
pub fn save_scenario(path: &Path, scenario: &Scenario) -> Result<()> {
    let csv_path = baseline_path_for(path);
    let csv_name = csv_path.file_name().and_then(|s| s.to_str()).map(str::to_owned);
    let doc = ScenarioFile::from_scenario(scenario, csv_name);
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))?;
    let f = fs::File::create(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
    write_baseline_csv(f, scenario)
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let doc: ScenarioFile = serde_json::from_str(&text)?;
    let baseline = match &doc.options.baseline_csv {
        Some(name) => {
            let csv_path = path.parent().unwrap_or(Path::new(".")).join(name);
            let f = fs::File::open(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
            Some(read_baseline_csv(f, &doc.bands, doc.pixel_grid.len())?)
        }
        None => None,
    };
    doc.into_scenario(baseline)
}

#[derive(Serialize, Deserialize)]
struct BaselineRow {
    pixel_id: usize,
    band_id: String,
    power_density_w_m2: f64,
}

pub fn write_baseline_csv<W: Write>(w: W, scenario: &Scenario) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for p in 0..scenario.n_pixels() {
        for (f, band) in scenario.bands.iter().enumerate() {
            out.serialize(BaselineRow {
                pixel_id: p,
                band_id: band.id.clone(),
                power_density_w_m2: scenario.baseline_at(p, f),
            })?;
        }
    }
    out.flush().map_err(|e| Error::io("baseline csv", e))?;
    Ok(())
}

/// Reads baseline rows; pixels or bands without a row default to zero.
pub fn read_baseline_csv<R: Read>(r: R, bands: &[FrequencyBand], n_pixels: usize) -> Result<Vec<f64>> {
    let mut base = vec![0.0; n_pixels * bands.len()];
    let mut rdr = csv::Reader::from_reader(r);
    for (i, row) in rdr.deserialize::<BaselineRow>().enumerate() {
        let row = row?;
        let line = i + 2;
        let f = bands
            .iter()
            .position(|b| b.id == row.band_id)
            .ok_or_else(|| Error::Parse { line, msg: format!("unknown band id {}", row.band_id) })?;
        if row.pixel_id >= n_pixels {
            return Err(Error::Parse { line, msg: format!("pixel id {} outside the grid", row.pixel_id) });
        }
        base[row.pixel_id * bands.len() + f] = row.power_density_w_m2;
    }
    Ok(base)
}
