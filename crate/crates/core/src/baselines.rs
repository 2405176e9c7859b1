//! Reference planners: a single random draw (EA), a random draw with a
//! growing second-band layer (MCMA), and exhaustive enumeration for tiny
//! instances.

use std::time::{Duration, Instant};

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::platea::{evaluate, Algorithm, PlanConfig, PlanResult};
use crate::rng::{substream, tag};
use crate::scenario::{Deployment, Slot};

/// Exhaustive search refuses more (site, band) pairs than this without a
/// time budget.
pub const EXHAUSTIVE_PAIR_LIMIT: usize = 16;

/// Uniform draw of `num_f1` first-band and `num_f2` second-band sites, each
/// without replacement from the band's sensitive-feasible allowed sites.
pub fn generate_sites<R: Rng>(
    inst: &Instance,
    config: &PlanConfig,
    num_f1: usize,
    num_f2: usize,
    rng: &mut R,
) -> Result<Deployment> {
    let mut dep = Deployment::new();
    for (band, n) in [(config.f1_band, num_f1), (config.f2_band, num_f2)] {
        let pool = inst.pool(band);
        if n > pool.len() {
            return Err(Error::Config(format!(
                "{n} gNBs requested on band {band} but only {} sites are available",
                pool.len()
            )));
        }
        for i in index::sample(rng, pool.len(), n) {
            dep.insert(Slot::new(pool[i], band));
        }
    }
    Ok(dep)
}

fn checked(inst: &Instance, config: &PlanConfig) -> Result<()> {
    config.validate(inst.n_bands())
}

/// One random deployment with the requested counts, checked once.
pub fn ea(inst: &Instance, config: &PlanConfig, num_f1: usize, num_f2: usize) -> Result<PlanResult> {
    checked(inst, config)?;
    let mut rng = substream(config.rng_seed, &[tag::EA]);
    let dep = generate_sites(inst, config, num_f1, num_f2, &mut rng)?;
    Ok(match evaluate(inst, &dep) {
        Ok(e) => PlanResult::from_evaluation(Algorithm::Ea, e, 1, Vec::new()),
        Err(f) => PlanResult::infeasible(inst, Algorithm::Ea, f.to_string(), 1, Vec::new()),
    })
}

/// Draws a fresh deployment with `num_f1` first-band gNBs and a growing
/// number of second-band gNBs until a feasible draw serves every pixel or the
/// second band is exhausted. Returns the last feasible draw; an incomplete
/// coverage is reported in the diagnostic.
pub fn mcma(inst: &Instance, config: &PlanConfig, num_f1: usize) -> Result<PlanResult> {
    checked(inst, config)?;
    if num_f1 > inst.pool(config.f1_band).len() {
        return Err(Error::Config(format!("{num_f1} first-band gNBs exceed the available sites")));
    }
    let max2 = inst.allowed_count(config.f2_band).min(inst.pool(config.f2_band).len());
    let mut last_feasible = None;
    let mut last_failure = None;
    let mut evaluated = 0;
    for num_f2 in 1..=max2 {
        let mut rng = substream(config.rng_seed, &[tag::MCMA, num_f2 as u64]);
        let dep = generate_sites(inst, config, num_f1, num_f2, &mut rng)?;
        evaluated += 1;
        match evaluate(inst, &dep) {
            Ok(e) => {
                let done = e.all_served();
                last_feasible = Some(e);
                if done {
                    break;
                }
            }
            Err(f) => last_failure = Some(f),
        }
    }
    Ok(match (last_feasible, last_failure) {
        (Some(e), _) => {
            let complete = e.all_served();
            let mut r = PlanResult::from_evaluation(Algorithm::Mcma, e, evaluated, Vec::new());
            if !complete {
                r.diagnostic = Some("second band exhausted before every pixel was served".into());
            }
            r
        }
        (None, Some(f)) => PlanResult::infeasible(
            inst,
            Algorithm::Mcma,
            format!("no feasible draw; last failure: {f}"),
            evaluated,
            Vec::new(),
        ),
        (None, None) => {
            PlanResult::infeasible(inst, Algorithm::Mcma, "no second-band site available".into(), 0, Vec::new())
        }
    })
}

enum Visit {
    Skipped,
    TimedOut,
    Infeasible,
    Feasible(f64, Deployment),
}

#[derive(Default)]
struct Tally {
    visited: u64,
    timed_out: bool,
    best: Option<(f64, Deployment)>,
}

impl Tally {
    fn keep_better(best: Option<(f64, Deployment)>, other: Option<(f64, Deployment)>) -> Option<(f64, Deployment)> {
        match (best, other) {
            (Some(a), Some(b)) => Some(if b.0.total_cmp(&a.0).then_with(|| b.1.cmp(&a.1)).is_lt() { b } else { a }),
            (a, b) => a.or(b),
        }
    }

    fn push(mut self, v: Visit) -> Self {
        match v {
            Visit::Skipped => {}
            Visit::TimedOut => self.timed_out = true,
            Visit::Infeasible => self.visited += 1,
            Visit::Feasible(obj, dep) => {
                self.visited += 1;
                self.best = Self::keep_better(self.best, Some((obj, dep)));
            }
        }
        self
    }

    fn merge(self, other: Self) -> Self {
        Tally {
            visited: self.visited + other.visited,
            timed_out: self.timed_out || other.timed_out,
            best: Self::keep_better(self.best, other.best),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExhaustiveResult {
    pub plan: PlanResult,
    /// Subsets evaluated.
    pub visited: u64,
    /// False if the time budget ran out before every subset was seen.
    pub complete: bool,
}

/// Evaluates every subset of allowed (site, band) pairs that respects the
/// per-site gNB cap and returns the lowest objective, ties broken by the
/// lexicographically smallest deployment.
pub fn exhaustive(inst: &Instance, time_budget: Option<Duration>) -> Result<ExhaustiveResult> {
    let s = &inst.scenario;
    let pairs: Vec<Slot> = (0..s.n_sites())
        .flat_map(|l| (0..s.n_bands()).map(move |f| Slot::new(l, f)))
        .filter(|slot| inst.allowed(slot.site, slot.band))
        .collect();
    if pairs.len() > 63 || (time_budget.is_none() && pairs.len() > EXHAUSTIVE_PAIR_LIMIT) {
        return Err(Error::TooLarge(format!(
            "{} (site, band) pairs exceed the exhaustive limit of {EXHAUSTIVE_PAIR_LIMIT}",
            pairs.len()
        )));
    }
    let start = Instant::now();
    let out_of_time = || time_budget.is_some_and(|b| start.elapsed() > b);
    let n_max = s.options.n_max;
    let decode = |mask: u64| -> Deployment {
        pairs.iter().enumerate().filter(|(i, _)| (mask >> i) & 1 == 1).map(|(_, &p)| p).collect()
    };
    let acc = (0..1u64 << pairs.len())
        .into_par_iter()
        .map(|mask| {
            if out_of_time() {
                return Visit::TimedOut;
            }
            let dep = decode(mask);
            if (0..s.n_sites()).any(|l| dep.bands_at(l) > n_max) {
                return Visit::Skipped;
            }
            match evaluate(inst, &dep) {
                Ok(e) => Visit::Feasible(e.objective, dep),
                Err(_) => Visit::Infeasible,
            }
        })
        .fold(Tally::default, Tally::push)
        .reduce(Tally::default, Tally::merge);
    let (visited, complete, best) = (acc.visited, !acc.timed_out, acc.best);
    let plan = match best {
        Some((_, dep)) => {
            let e = evaluate(inst, &dep).map_err(|f| Error::Contract(format!("optimum no longer feasible: {f}")))?;
            PlanResult::from_evaluation(Algorithm::Exhaustive, e, visited as usize, Vec::new())
        }
        None => PlanResult::infeasible(
            inst,
            Algorithm::Exhaustive,
            "no feasible subset".into(),
            visited as usize,
            Vec::new(),
        ),
    };
    Ok(ExhaustiveResult { plan, visited, complete })
}
