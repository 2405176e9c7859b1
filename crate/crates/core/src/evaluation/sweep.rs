use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::compute_metrics;
use crate::error::{Error, Result};
use crate::exposure::density_from_field;
use crate::instance::Instance;
use crate::platea::{run_platea, PlanConfig};
use crate::scenario::Scenario;

/// `n` values spaced logarithmically from `lo` to `hi` inclusive.
pub fn alpha_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.log10(), hi.log10());
            (0..n).map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64)).collect()
        }
    }
}

/// A one- or two-dimensional parameter grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "axis", rename_all = "snake_case")]
pub enum SweepAxis {
    /// Per-pixel revenue on the first and second band (cartesian product).
    Alpha { f1: Vec<f64>, f2: Vec<f64> },
    /// Time scaling on every band × statistical scaling on the first band.
    Scaling { time: Vec<f64>, stat: Vec<f64> },
    /// Minimum distance from sensitive places, m.
    DMin { values: Vec<f64> },
    /// Uniform pre-existing field, V/m, split evenly across bands.
    Pre5g { field_v_m: Vec<f64> },
    /// Frequency reuse factor on every band.
    Reuse { factors: Vec<f64> },
}

impl SweepAxis {
    pub fn names(&self) -> (&'static str, &'static str) {
        match self {
            SweepAxis::Alpha { .. } => ("alpha_f1", "alpha_f2"),
            SweepAxis::Scaling { .. } => ("r_time", "r_stat"),
            SweepAxis::DMin { .. } => ("d_min", ""),
            SweepAxis::Pre5g { .. } => ("pre5g_v_m", ""),
            SweepAxis::Reuse { .. } => ("reuse", ""),
        }
    }

    /// Grid points in row-major order.
    pub fn points(&self) -> Vec<(f64, Option<f64>)> {
        let product = |a: &[f64], b: &[f64]| a.iter().flat_map(|&x| b.iter().map(move |&y| (x, Some(y)))).collect();
        match self {
            SweepAxis::Alpha { f1, f2 } => product(f1, f2),
            SweepAxis::Scaling { time, stat } => product(time, stat),
            SweepAxis::DMin { values: v } | SweepAxis::Pre5g { field_v_m: v } | SweepAxis::Reuse { factors: v } => {
                v.iter().map(|&x| (x, None)).collect()
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let all = |v: &[f64], ok: fn(f64) -> bool| v.iter().all(|&x| x.is_finite() && ok(x));
        if self.points().is_empty() {
            return bad("empty sweep grid".into());
        }
        match self {
            SweepAxis::Alpha { f1, f2 } if !all(f1, |x| x >= 0.0) || !all(f2, |x| x >= 0.0) => {
                bad("alpha values must be finite and non-negative".into())
            }
            SweepAxis::Scaling { time, stat }
                if !all(time, |x| x > 0.0 && x <= 1.0) || !all(stat, |x| x > 0.0 && x <= 1.0) =>
            {
                bad("scaling factors must lie in (0, 1]".into())
            }
            SweepAxis::DMin { values } if !all(values, |x| x >= 0.0) => bad("d_min values must be non-negative".into()),
            SweepAxis::Pre5g { field_v_m } if !all(field_v_m, |x| x >= 0.0) => {
                bad("pre-5G fields must be non-negative".into())
            }
            SweepAxis::Reuse { factors } if !all(factors, |x| x >= 1.0) => {
                bad("reuse factors must be at least 1".into())
            }
            _ => Ok(()),
        }
    }

    fn apply(&self, s: &mut Scenario, cfg: &mut PlanConfig, (a, b): (f64, Option<f64>)) -> Result<()> {
        match self {
            SweepAxis::Alpha { .. } => {
                cfg.alpha.insert(cfg.f1_band, a);
                cfg.alpha.insert(cfg.f2_band, b.unwrap_or(a));
            }
            SweepAxis::Scaling { .. } => {
                for band in &mut s.bands {
                    band.time_scaling = a;
                }
                s.bands[cfg.f1_band].stat_scaling = b.unwrap_or(1.0);
            }
            SweepAxis::DMin { .. } => s.regulation.min_sensitive_distance_m = a,
            SweepAxis::Pre5g { .. } => {
                let per_band = density_from_field(a, s.options.impedance_ohm)? / s.n_bands() as f64;
                s.set_uniform_baseline(per_band);
            }
            SweepAxis::Reuse { .. } => {
                for band in &mut s.bands {
                    band.reuse_factor = a;
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub seeds: Vec<u64>,
    /// Base planner settings; the seed and any swept revenue are overridden.
    #[serde(default)]
    pub plan: PlanConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis1: f64,
    pub axis2: Option<f64>,
    pub seed: u64,
    pub metric: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    pub axis1: f64,
    pub axis2: Option<f64>,
    pub metric: String,
    pub mean: f64,
    pub runs: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepTable {
    pub axis_names: (String, String),
    pub rows: Vec<SweepRow>,
}

fn key(x: f64) -> u64 {
    x.to_bits()
}

impl SweepTable {
    /// Mean of every metric per grid point, in first-appearance order.
    pub fn summary(&self) -> Vec<SummaryRow> {
        let mut order: Vec<(u64, Option<u64>, String)> = Vec::new();
        let mut acc: BTreeMap<(u64, Option<u64>, String), (f64, Option<f64>, f64, usize)> = BTreeMap::new();
        for r in &self.rows {
            let k = (key(r.axis1), r.axis2.map(key), r.metric.clone());
            let e = acc.entry(k.clone()).or_insert_with(|| {
                order.push(k);
                (r.axis1, r.axis2, 0.0, 0)
            });
            e.2 += r.value;
            e.3 += 1;
        }
        order
            .into_iter()
            .map(|k| {
                let (axis1, axis2, sum, runs) = acc[&k];
                SummaryRow { axis1, axis2, metric: k.2, mean: sum / runs as f64, runs }
            })
            .collect()
    }

    pub fn write_long_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["axis1", "axis2", "seed", "metric", "value"])?;
        for r in &self.rows {
            out.write_record([
                r.axis1.to_string(),
                r.axis2.map(|v| v.to_string()).unwrap_or_default(),
                r.seed.to_string(),
                r.metric.clone(),
                r.value.to_string(),
            ])?;
        }
        out.flush().map_err(|e| Error::io("<sweep csv>", e))?;
        Ok(())
    }

    pub fn write_summary_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["axis1", "axis2", "metric", "mean", "runs"])?;
        for r in self.summary() {
            out.write_record([
                r.axis1.to_string(),
                r.axis2.map(|v| v.to_string()).unwrap_or_default(),
                r.metric,
                r.mean.to_string(),
                r.runs.to_string(),
            ])?;
        }
        out.flush().map_err(|e| Error::io("<summary csv>", e))?;
        Ok(())
    }
}

/// Runs PLATEA at every grid point for every seed. The seed drives both the
/// planner and the scenario's fading draw.
pub fn sweep(template: &Scenario, spec: &SweepSpec) -> Result<SweepTable> {
    spec.axis.validate()?;
    spec.plan.validate(template.n_bands())?;
    if spec.seeds.is_empty() {
        return Err(Error::Config("sweep needs at least one seed".into()));
    }
    let tasks: Vec<((f64, Option<f64>), u64)> =
        spec.axis.points().into_iter().flat_map(|pt| spec.seeds.iter().map(move |&s| (pt, s))).collect();
    let per_task: Vec<Vec<SweepRow>> = tasks
        .par_iter()
        .map(|&(pt, seed)| -> Result<Vec<SweepRow>> {
            let mut s = template.clone();
            let mut cfg = spec.plan.clone();
            cfg.rng_seed = seed;
            s.options.master_seed = seed;
            spec.axis.apply(&mut s, &mut cfg, pt)?;
            cfg.apply_alpha(&mut s);
            let inst = Instance::new(s)?;
            let plan = run_platea(&inst, &cfg)?;
            let m = compute_metrics(&inst.scenario, &inst.beta, &plan)?;
            Ok(m.named()
                .into_iter()
                .map(|(metric, value)| SweepRow { axis1: pt.0, axis2: pt.1, seed, metric, value })
                .collect())
        })
        .collect::<Result<_>>()?;
    let (a, b) = spec.axis.names();
    Ok(SweepTable { axis_names: (a.to_string(), b.to_string()), rows: per_task.into_iter().flatten().collect() })
}
