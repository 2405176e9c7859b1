//! Plan metrics, heatmaps and parameter sweeps.

mod sweep;

use std::io::Write;

use serde::Serialize;

use crate::error::Result;
use crate::platea::PlanResult;
use crate::radio::{shannon_throughput, shaping_factor, sir, BetaTable};
use crate::scenario::{AreaClass, Scenario};

pub use sweep::{alpha_grid, sweep, SummaryRow, SweepAxis, SweepRow, SweepSpec, SweepTable};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Metrics {
    pub c_tot: f64,
    pub objective: f64,
    pub feasible: bool,
    /// Installed gNBs per band.
    pub installed: Vec<usize>,
    /// Pixel associations per band.
    pub served: Vec<usize>,
    /// Percentage of pixels with no association.
    pub not_served_pct: f64,
    /// Mean total throughput over served pixels, bit/s.
    pub t_avg: f64,
    /// Mean throughput per band over the pixels served on that band, bit/s.
    pub t_avg_band: Vec<f64>,
    /// Set when no pixel is served and `t_avg` is a placeholder zero.
    pub t_avg_undefined: bool,
    /// Aggregate field over residential pixels, V/m.
    pub e_avg: f64,
    #[serde(skip)]
    pub band_ids: Vec<String>,
    /// `T_p`, bit/s.
    #[serde(skip)]
    pub throughput: Vec<f64>,
    /// `T_(p,f)` indexed `pixel * bands + band`, bit/s.
    #[serde(skip)]
    pub throughput_band: Vec<f64>,
    /// `E_p`, V/m.
    #[serde(skip)]
    pub field: Vec<f64>,
}

impl Metrics {
    /// Scalar metrics as `(name, value)` in a fixed order.
    pub fn named(&self) -> Vec<(String, f64)> {
        let mut out = vec![
            ("C_TOT".to_string(), self.c_tot),
            ("objective".to_string(), self.objective),
            ("feasible".to_string(), if self.feasible { 1.0 } else { 0.0 }),
        ];
        for (id, n) in self.band_ids.iter().zip(&self.installed) {
            out.push((format!("N_{id}"), *n as f64));
        }
        for (id, n) in self.band_ids.iter().zip(&self.served) {
            out.push((format!("X_SERVED_{id}"), *n as f64));
        }
        out.push(("X_NOT_SERVED".to_string(), self.not_served_pct));
        out.push(("T_AVG".to_string(), self.t_avg));
        for (id, t) in self.band_ids.iter().zip(&self.t_avg_band) {
            out.push((format!("T_AVG_{id}"), *t));
        }
        out.push(("E_AVG".to_string(), self.e_avg));
        out
    }
}

/// Evaluates the plan metrics with the band parameters of `scenario`.
pub fn compute_metrics(scenario: &Scenario, beta: &BetaTable, plan: &PlanResult) -> Result<Metrics> {
    let np = scenario.n_pixels();
    let nf = scenario.n_bands();
    let dep = plan.deployment();
    let shaping = scenario.bands.iter().map(shaping_factor).collect::<Result<Vec<_>>>()?;

    let mut throughput_band = vec![0.0; np * nf];
    let mut served = vec![0usize; nf];
    for (p, l, f) in plan.association.links() {
        let s = sir(scenario, beta, dep, p, l, f)?;
        throughput_band[p * nf + f] += shannon_throughput(&scenario.bands[f], shaping[f], s);
        served[f] += 1;
    }
    let throughput: Vec<f64> = (0..np).map(|p| throughput_band[p * nf..(p + 1) * nf].iter().sum()).collect();
    let served_pixels = plan.association.served_pixels();
    let not_served = np - served_pixels;
    let t_avg_undefined = served_pixels == 0;
    let t_avg = if t_avg_undefined { 0.0 } else { throughput.iter().sum::<f64>() / served_pixels as f64 };
    let t_avg_band = (0..nf)
        .map(|f| {
            if served[f] == 0 {
                0.0
            } else {
                (0..np).map(|p| throughput_band[p * nf + f]).sum::<f64>() / served[f] as f64
            }
        })
        .collect();

    let z0 = scenario.options.impedance_ohm;
    let exposure = &plan.state.exposure;
    let density = |p: usize| -> f64 {
        let keep = if exposure.excluded[p] { 0.0 } else { 1.0 };
        (0..nf).map(|f| scenario.baseline_at(p, f) * keep + exposure.scaled(p, f)).sum()
    };
    let field: Vec<f64> = (0..np).map(|p| (density(p) * z0).sqrt()).collect();
    let residential: Vec<usize> =
        (0..np).filter(|&p| scenario.pixels[p].area_class == AreaClass::Residential).collect();
    let e_avg = if residential.is_empty() {
        0.0
    } else {
        (residential.iter().map(|&p| density(p)).sum::<f64>() / residential.len() as f64 * z0).sqrt()
    };

    Ok(Metrics {
        c_tot: plan.c_tot,
        objective: plan.objective,
        feasible: plan.feasible,
        installed: (0..nf).map(|f| dep.count_on(f)).collect(),
        served,
        not_served_pct: 100.0 * not_served as f64 / np as f64,
        t_avg,
        t_avg_band,
        t_avg_undefined,
        e_avg,
        band_ids: scenario.bands.iter().map(|b| b.id.clone()).collect(),
        throughput,
        throughput_band,
        field,
    })
}

/// Empirical CDF of `T_p` over served pixels: `(value, fraction <= value)`
/// at each distinct value.
pub fn throughput_cdf(metrics: &Metrics, plan: &PlanResult) -> Vec<(f64, f64)> {
    let mut t: Vec<f64> =
        (0..metrics.throughput.len()).filter(|&p| plan.association.served(p)).map(|p| metrics.throughput[p]).collect();
    t.sort_by(f64::total_cmp);
    let n = t.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, &v) in t.iter().enumerate() {
        let frac = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == v => last.1 = frac,
            _ => out.push((v, frac)),
        }
    }
    out
}

/// Value at cumulative fraction `q` (smallest value whose fraction reaches `q`).
pub fn cdf_quantile(cdf: &[(f64, f64)], q: f64) -> Option<f64> {
    cdf.iter().find(|(_, frac)| *frac >= q).map(|(v, _)| *v)
}

fn write_heatmap<W: Write>(w: W, scenario: &Scenario, header: &str, values: &[f64]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["pixel_x", "pixel_y", header])?;
    for (px, v) in scenario.pixels.iter().zip(values) {
        out.write_record([px.center.x.to_string(), px.center.y.to_string(), v.to_string()])?;
    }
    out.flush().map_err(|e| crate::error::Error::io("<heatmap>", e))?;
    Ok(())
}

/// Per-pixel field strength at pixel centres.
pub fn write_field_heatmap<W: Write>(w: W, scenario: &Scenario, metrics: &Metrics) -> Result<()> {
    write_heatmap(w, scenario, "E_p_V_per_m", &metrics.field)
}

/// Per-pixel total throughput at pixel centres.
pub fn write_throughput_heatmap<W: Write>(w: W, scenario: &Scenario, metrics: &Metrics) -> Result<()> {
    write_heatmap(w, scenario, "throughput_bps", &metrics.throughput)
}
