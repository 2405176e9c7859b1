//! The PLATEA heuristic: grow the first-band layer one size at a time, pick
//! the best sampled layout of that size, then fill in second-band gNBs on top.

mod extract;
mod state;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::optmodel::Solution;
use crate::rng::{substream, tag};
use crate::scenario::{Deployment, Scenario, Slot};

pub use extract::{binomial, extract_sites, CombBudget};
pub(crate) use state::associate_from;
pub use state::{
    associate_pixels, compute_obj, install_check, install_slots, uninstall, Association, InstallFailure, PlanState,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlanConfig {
    pub comb_budget: CombBudget,
    pub rng_seed: u64,
    pub f1_band: usize,
    pub f2_band: usize,
    /// Per-pixel revenue per band index, replacing the scenario's values.
    pub alpha: BTreeMap<usize, f64>,
    pub stop_on_full_coverage: bool,
}

impl Default for PlanConfig {
    fn default() -> Self {
        PlanConfig {
            comb_budget: CombBudget::Linear,
            rng_seed: 0,
            f1_band: 0,
            f2_band: 1,
            alpha: BTreeMap::new(),
            stop_on_full_coverage: true,
        }
    }
}

impl PlanConfig {
    pub fn new(rng_seed: u64) -> Self {
        PlanConfig { rng_seed, ..Default::default() }
    }

    pub fn validate(&self, n_bands: usize) -> Result<()> {
        if self.f1_band >= n_bands || self.f2_band >= n_bands || self.f1_band == self.f2_band {
            return Err(Error::Config(format!(
                "bands f1={} f2={} must be distinct indices below {n_bands}",
                self.f1_band, self.f2_band
            )));
        }
        for (&band, &a) in &self.alpha {
            if band >= n_bands || !a.is_finite() {
                return Err(Error::Config(format!("bad alpha override {a} for band {band}")));
            }
        }
        Ok(())
    }

    pub fn apply_alpha(&self, scenario: &mut Scenario) {
        for (&band, &a) in &self.alpha {
            scenario.set_alpha(band, a);
        }
    }

    fn alpha_applied(&self, scenario: &Scenario) -> bool {
        self.alpha.iter().all(|(&band, &a)| {
            scenario.bands[band].alpha_eur == a && scenario.sites.iter().all(|s| !s.alpha_overrides.contains_key(&band))
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Platea,
    Ea,
    Mcma,
    Exhaustive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    /// First-band selection.
    F1,
    /// First-band layout plus second-band candidates.
    Full,
}

/// One evaluated candidate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub phase: Phase,
    pub num_f1: usize,
    pub num_f2: usize,
    pub index: usize,
    pub objective: Option<f64>,
    pub failure: Option<String>,
    pub all_served: bool,
    /// Best overall objective after this entry.
    pub best: Option<f64>,
}

/// A feasible deployment with its association and objective.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub state: PlanState,
    pub association: Association,
    pub c_tot: f64,
    pub objective: f64,
}

impl Evaluation {
    pub fn empty(inst: &Instance) -> Self {
        Evaluation {
            state: PlanState::empty(inst),
            association: Association::empty(inst.n_pixels(), inst.n_bands()),
            c_tot: 0.0,
            objective: 0.0,
        }
    }

    pub fn all_served(&self) -> bool {
        self.association.all_served()
    }
}

/// Checks and scores `deployment` from scratch.
pub fn evaluate(inst: &Instance, deployment: &Deployment) -> std::result::Result<Evaluation, InstallFailure> {
    let slots: Vec<Slot> = deployment.iter().collect();
    let state = install_slots(inst, &PlanState::empty(inst), &slots)?;
    let association = associate_pixels(inst, &state);
    let (c_tot, objective) = compute_obj(inst, &state.deployment, &association);
    Ok(Evaluation { state, association, c_tot, objective })
}

/// Adds `sites` on `band` to a scored base. Same result as [`evaluate`] on
/// the union.
pub fn evaluate_on(
    inst: &Instance,
    base: &Evaluation,
    sites: &[usize],
    band: usize,
) -> std::result::Result<Evaluation, InstallFailure> {
    let state = install_check(inst, &base.state, sites, band)?;
    let association = associate_from(inst, &state.deployment, &base.association, band);
    let (c_tot, objective) = compute_obj(inst, &state.deployment, &association);
    Ok(Evaluation { state, association, c_tot, objective })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlanResult {
    pub algorithm: Algorithm,
    /// False when no feasible deployment was found.
    pub feasible: bool,
    pub diagnostic: Option<String>,
    pub state: PlanState,
    pub association: Association,
    pub c_tot: f64,
    pub objective: f64,
    /// Candidates evaluated.
    pub evaluated: usize,
    pub trace: Vec<TraceEntry>,
}

/// Serialisable form of a [`PlanResult`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanRecord {
    pub algorithm: Algorithm,
    pub feasible: bool,
    pub diagnostic: Option<String>,
    pub deployment: Deployment,
    /// `[pixel, site, band]`
    pub links: Vec<[usize; 3]>,
    pub c_tot: f64,
    pub objective: f64,
    pub all_served: bool,
    pub evaluated: usize,
    #[serde(default)]
    pub trace: Vec<TraceEntry>,
}

impl PlanResult {
    pub fn from_evaluation(algorithm: Algorithm, e: Evaluation, evaluated: usize, trace: Vec<TraceEntry>) -> Self {
        PlanResult {
            algorithm,
            feasible: true,
            diagnostic: None,
            state: e.state,
            association: e.association,
            c_tot: e.c_tot,
            objective: e.objective,
            evaluated,
            trace,
        }
    }

    /// Empty deployment with zero objective.
    pub fn infeasible(
        inst: &Instance,
        algorithm: Algorithm,
        diagnostic: String,
        evaluated: usize,
        trace: Vec<TraceEntry>,
    ) -> Self {
        let e = Evaluation::empty(inst);
        PlanResult {
            feasible: false,
            diagnostic: Some(diagnostic),
            ..PlanResult::from_evaluation(algorithm, e, evaluated, trace)
        }
    }

    pub fn deployment(&self) -> &Deployment {
        &self.state.deployment
    }

    pub fn all_served(&self) -> bool {
        self.association.all_served()
    }

    pub fn to_solution(&self, scenario: &Scenario) -> Solution {
        Solution::from_plan(scenario, self.deployment(), self.association.links(), self.c_tot)
    }

    pub fn record(&self) -> PlanRecord {
        PlanRecord {
            algorithm: self.algorithm,
            feasible: self.feasible,
            diagnostic: self.diagnostic.clone(),
            deployment: self.deployment().clone(),
            links: self.association.links().into_iter().map(|(p, l, f)| [p, l, f]).collect(),
            c_tot: self.c_tot,
            objective: self.objective,
            all_served: self.all_served(),
            evaluated: self.evaluated,
            trace: self.trace.clone(),
        }
    }

    /// Rebuilds a result from its record, recomputing exposure.
    pub fn from_record(inst: &Instance, rec: &PlanRecord) -> Result<Self> {
        let state = PlanState::from_deployment(inst, &rec.deployment)
            .map_err(|f| Error::Contract(format!("recorded deployment is not installable: {f}")))?;
        let association =
            Association::from_links(inst.n_pixels(), inst.n_bands(), rec.links.iter().map(|&[p, l, f]| (p, l, f)))?;
        Ok(PlanResult {
            algorithm: rec.algorithm,
            feasible: rec.feasible,
            diagnostic: rec.diagnostic.clone(),
            state,
            association,
            c_tot: rec.c_tot,
            objective: rec.objective,
            evaluated: rec.evaluated,
            trace: rec.trace.clone(),
        })
    }
}

/// Applies the configured revenues to a copy of `scenario` and runs PLATEA.
pub fn platea(scenario: &Scenario, config: &PlanConfig) -> Result<PlanResult> {
    let mut s = scenario.clone();
    config.validate(s.n_bands())?;
    config.apply_alpha(&mut s);
    run_platea(&Instance::new(s)?, config)
}

type Outcome = std::result::Result<Evaluation, InstallFailure>;

fn entry(phase: Phase, num_f1: usize, num_f2: usize, index: usize, o: &Outcome) -> TraceEntry {
    TraceEntry {
        phase,
        num_f1,
        num_f2,
        index,
        objective: o.as_ref().ok().map(|e| e.objective),
        failure: o.as_ref().err().map(|f| f.family().to_string()),
        all_served: o.as_ref().is_ok_and(Evaluation::all_served),
        best: None,
    }
}

/// Runs PLATEA on a prepared instance. Revenue overrides in `config` must
/// already be applied to the instance's scenario.
pub fn run_platea(inst: &Instance, config: &PlanConfig) -> Result<PlanResult> {
    config.validate(inst.n_bands())?;
    if !config.alpha_applied(&inst.scenario) {
        return Err(Error::Config("alpha overrides are not applied to the instance".into()));
    }
    let (f1, f2) = (config.f1_band, config.f2_band);
    let seed = config.rng_seed;
    let pool1 = inst.pool(f1);
    let pool2 = inst.pool(f2);
    let max1 = inst.allowed_count(f1);
    let max2 = inst.allowed_count(f2);
    let empty = Evaluation::empty(inst);
    let mut best: Option<Evaluation> = None;
    let mut trace = Vec::new();

    for n1 in 1..=max1 {
        let mut rng = substream(seed, &[tag::EXTRACT_F1, n1 as u64]);
        let combos = extract_sites(&pool1, n1, config.comb_budget.budget(n1), &mut rng);
        if combos.is_empty() {
            break;
        }
        let outcomes: Vec<Outcome> = combos.par_iter().map(|c| evaluate_on(inst, &empty, c, f1)).collect();
        let mut base: Option<Evaluation> = None;
        for (i, o) in outcomes.into_iter().enumerate() {
            let mut t = entry(Phase::F1, n1, 0, i, &o);
            t.best = best.as_ref().map(|b| b.objective);
            trace.push(t);
            if let Ok(e) = o {
                if base.as_ref().is_none_or(|b| e.objective < b.objective) {
                    base = Some(e);
                }
            }
        }
        let Some(base) = base else {
            log::debug!("num_f1={n1}: no feasible first-band layout");
            continue;
        };
        if pool2.is_empty() {
            // nothing can go on the second band: the first-band layout is the candidate
            if best.as_ref().is_none_or(|b| base.objective < b.objective) {
                best = Some(base);
            }
            continue;
        }
        let mut flag_end = false;
        for n2 in 1..=max2 {
            if flag_end {
                break;
            }
            let mut rng = substream(seed, &[tag::EXTRACT_F2, n1 as u64, n2 as u64]);
            let combos = extract_sites(&pool2, n2, config.comb_budget.budget(n2), &mut rng);
            if combos.is_empty() {
                break;
            }
            let outcomes: Vec<Outcome> = combos.par_iter().map(|c| evaluate_on(inst, &base, c, f2)).collect();
            for (i, o) in outcomes.into_iter().enumerate() {
                let mut t = entry(Phase::Full, n1, n2, i, &o);
                if let Ok(e) = o {
                    if e.all_served() && config.stop_on_full_coverage {
                        flag_end = true;
                    }
                    if best.as_ref().is_none_or(|b| e.objective < b.objective) {
                        best = Some(e);
                    }
                }
                t.best = best.as_ref().map(|b| b.objective);
                trace.push(t);
            }
        }
    }

    let evaluated = trace.len();
    Ok(match best {
        Some(e) => PlanResult::from_evaluation(Algorithm::Platea, e, evaluated, trace),
        None => PlanResult::infeasible(
            inst,
            Algorithm::Platea,
            "no feasible deployment at any size".into(),
            evaluated,
            trace,
        ),
    })
}
