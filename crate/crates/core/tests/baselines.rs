mod common;

use common::*;
use emfplan::baselines::{ea, exhaustive, generate_sites, mcma};
use emfplan::optmodel::verify_solution;
use emfplan::platea::{run_platea, PlanConfig, PlanResult};
use emfplan::scenario::{FrequencyBand, Scenario, ScenarioOptions};
use emfplan::Instance;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn no_fading() -> ScenarioOptions {
    ScenarioOptions { fading_enabled: false, ..ScenarioOptions::default() }
}

fn assert_verified(inst: &Instance, r: &PlanResult) {
    let s = &inst.scenario;
    let report = verify_solution(s, &inst.beta, &r.to_solution(s)).unwrap();
    assert!(report.feasible(), "{:?}", report.failed().collect::<Vec<_>>());
}

#[test]
fn ea_with_no_gnbs_is_empty_and_feasible() {
    let inst = Instance::new(small(1)).unwrap();
    let r = ea(&inst, &PlanConfig::new(1), 0, 0).unwrap();
    assert!(r.feasible);
    assert!(r.deployment().is_empty());
    assert_eq!((r.c_tot, r.objective), (0.0, 0.0));
    assert_eq!(r.evaluated, 1);
}

#[test]
fn ea_reports_saturated_pixel() {
    // pixel 3 already sits at the residential limit; any added field breaks it
    let s = toy_with(6, 1, 20.0, vec![micro_site(0, 10.0, 10.0)], two_bands(), |_, _| {}, no_fading());
    let mut baseline = vec![0.0; 12];
    baseline[3 * 2] = s.regulation.residential_limit_w_m2[0];
    let s = Scenario::new(s.bounds, s.grid, s.sites, s.bands, s.regulation, Some(baseline), s.options).unwrap();
    let inst = Instance::new(s).unwrap();
    let r = ea(&inst, &PlanConfig::new(0), 1, 0).unwrap();
    assert!(!r.feasible);
    assert!(r.deployment().is_empty());
    assert!(r.diagnostic.as_deref().unwrap().starts_with("limit-res: pixel 3"), "{:?}", r.diagnostic);
}

#[test]
fn ea_rejects_counts_beyond_capacity() {
    let inst = Instance::new(small(1)).unwrap();
    assert!(matches!(ea(&inst, &PlanConfig::new(1), 40, 0), Err(emfplan::Error::Config(_))));
}

#[test]
fn ea_full_scale_cost() {
    let mut feasible = 0;
    for seed in 0..6 {
        let inst = Instance::new(tmc(seed)).unwrap();
        let r = ea(&inst, &PlanConfig::new(seed), 11, 3).unwrap();
        if r.feasible {
            feasible += 1;
            assert_eq!(r.c_tot, 391_395.0);
            assert_eq!(r.deployment().count_on(0), 11);
            assert_eq!(r.deployment().count_on(1), 3);
        }
    }
    assert!(feasible > 0, "no feasible draw to check the cost on");
}

#[test]
fn mcma_stops_once_one_macro_covers_everything() {
    let sites = vec![micro_site(0, 25.0, 25.0), macro_site(1, 75.0, 75.0), macro_site(2, 125.0, 125.0)];
    let s = toy_with(3, 3, 50.0, sites, two_bands(), |_, _| {}, no_fading());
    let inst = Instance::new(s).unwrap();
    let r = mcma(&inst, &PlanConfig::new(3), 0).unwrap();
    assert!(r.feasible && r.all_served());
    assert_eq!(r.evaluated, 1);
    assert_eq!(r.deployment().count_on(1), 1);
    assert!(r.diagnostic.is_none());
    assert_verified(&inst, &r);
}

#[test]
fn mcma_grows_until_two_macros_cover_the_strip() {
    // 2 km strip: each macro reaches 900 m, so both are needed
    let sites = vec![macro_site(0, 150.0, 50.0), macro_site(1, 1850.0, 50.0)];
    let s = toy_with(20, 1, 100.0, sites, two_bands(), |_, _| {}, no_fading());
    let inst = Instance::new(s).unwrap();
    for seed in 0..4 {
        let r = mcma(&inst, &PlanConfig::new(seed), 0).unwrap();
        assert_eq!(r.deployment().count_on(1), 2);
        assert!(r.all_served());
        assert_eq!(r.evaluated, 2);
        assert_verified(&inst, &r);
    }
}

#[test]
fn mcma_flags_incomplete_coverage() {
    // one macro, strip longer than its reach
    let s = toy_with(20, 1, 100.0, vec![macro_site(0, 50.0, 50.0)], two_bands(), |_, _| {}, no_fading());
    let inst = Instance::new(s).unwrap();
    let r = mcma(&inst, &PlanConfig::new(0), 0).unwrap();
    assert!(r.feasible && !r.all_served());
    assert!(r.diagnostic.as_deref().unwrap().contains("exhausted"));
}

#[test]
fn exhaustive_single_pair() {
    let s = toy(3, 3, 20.0, vec![micro_site(0, 30.0, 30.0)], vec![FrequencyBand::micro()]);
    let ex = exhaustive(&Instance::new(s).unwrap(), None).unwrap();
    assert_eq!(ex.visited, 2);
    assert!(ex.complete);
}

#[test]
fn exhaustive_without_revenue_installs_nothing() {
    let mut bands = vec![FrequencyBand::micro()];
    bands[0].alpha_eur = 0.0;
    let sites = vec![micro_site(0, 10.0, 10.0), micro_site(1, 110.0, 10.0), micro_site(2, 210.0, 10.0)];
    let s = toy(12, 1, 20.0, sites, bands);
    let ex = exhaustive(&Instance::new(s).unwrap(), None).unwrap();
    assert_eq!(ex.visited, 8);
    assert!(ex.plan.feasible);
    assert!(ex.plan.deployment().is_empty());
    assert_eq!(ex.plan.objective, 0.0);
}

#[test]
fn exhaustive_refuses_large_instances() {
    let inst = Instance::new(tmc(0)).unwrap();
    assert!(matches!(exhaustive(&inst, None), Err(emfplan::Error::TooLarge(_))));
}

#[test]
fn oracle_dominates_every_heuristic() {
    for seed in 0..5 {
        let inst = Instance::new(small(seed)).unwrap();
        let cfg = PlanConfig::new(seed);
        let ex = exhaustive(&inst, None).unwrap();
        assert_verified(&inst, &ex.plan);
        let p = run_platea(&inst, &cfg).unwrap();
        let e = ea(&inst, &cfg, p.deployment().count_on(0), p.deployment().count_on(1)).unwrap();
        let m = mcma(&inst, &cfg, p.deployment().count_on(0)).unwrap();
        for r in [&p, &e, &m] {
            if r.feasible {
                assert_verified(&inst, r);
                assert!(ex.plan.objective <= r.objective + 1e-9);
            }
        }
    }
}

#[test]
fn ea_on_platea_deployment_scores_the_same() {
    let inst = Instance::new(small(2)).unwrap();
    let p = run_platea(&inst, &PlanConfig::new(2)).unwrap();
    let (n1, n2) = (p.deployment().count_on(0), p.deployment().count_on(1));
    let seed = (0..5000u64)
        .find(|&seed| {
            let mut rng = emfplan::rng::substream(seed, &[emfplan::rng::tag::EA]);
            generate_sites(&inst, &PlanConfig::new(seed), n1, n2, &mut rng).ok().as_ref() == Some(p.deployment())
        })
        .expect("some seed draws the planned deployment");
    let e = ea(&inst, &PlanConfig::new(seed), n1, n2).unwrap();
    assert_eq!(e.deployment(), p.deployment());
    assert_eq!(e.objective, p.objective);
    assert_eq!(e.association, p.association);
}

#[test]
fn generate_sites_draws_from_the_pool() {
    let inst = Instance::new(small(4)).unwrap();
    let cfg = PlanConfig::new(0);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let d = generate_sites(&inst, &cfg, 3, 2, &mut rng).unwrap();
    assert_eq!(d.count_on(0), 3);
    assert_eq!(d.count_on(1), 2);
    for slot in d.iter() {
        assert!(inst.pool(slot.band).contains(&slot.site));
    }
}
