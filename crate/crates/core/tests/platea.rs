mod common;

use common::*;
use emfplan::baselines::exhaustive;
use emfplan::exposure::{eirp, scaling};
use emfplan::optmodel::verify_solution;
use emfplan::platea::{
    associate_pixels, compute_obj, evaluate, evaluate_on, extract_sites, install_check, platea, run_platea, uninstall,
    CombBudget, Evaluation, InstallFailure, Phase, PlanConfig, PlanState,
};
use emfplan::radio::{sir, FadingTable};
use emfplan::scenario::{CandidateSite, Deployment, FrequencyBand, Point, Scenario, ScenarioOptions, Slot};
use emfplan::Instance;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn no_fading() -> ScenarioOptions {
    ScenarioOptions { fading_enabled: false, ..ScenarioOptions::default() }
}

fn dep(slots: &[(usize, usize)]) -> Deployment {
    slots.iter().map(|&(l, f)| Slot::new(l, f)).collect()
}

#[test]
fn extract_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let one = extract_sites(&[0, 1, 2, 3, 4], 1, 1, &mut rng);
    assert_eq!(one.len(), 1);
    assert_eq!(one[0].len(), 1);
    assert_eq!(extract_sites(&[2, 5, 9], 3, 50, &mut rng), vec![vec![2, 5, 9]]);
    assert!(extract_sites(&[2, 5, 9], 4, 1, &mut rng).is_empty());
    let a = extract_sites(&(0..20).collect::<Vec<_>>(), 4, 7, &mut ChaCha8Rng::seed_from_u64(3));
    let b = extract_sites(&(0..20).collect::<Vec<_>>(), 4, 7, &mut ChaCha8Rng::seed_from_u64(3));
    assert_eq!(a, b);
    assert_eq!(a.len(), 7);
}

#[test]
fn gnb_clear_outside_its_own_zone_is_accepted() {
    // the only pixel above the limit is the one under the mast, 8.5 m away
    let s = toy_with(3, 3, 20.0, vec![micro_site(0, 30.0, 30.0)], vec![FrequencyBand::micro()], |_, _| {}, no_fading());
    let inst = Instance::new(s).unwrap();
    let limit = inst.scenario.regulation.residential_limit_w_m2[0];
    let under = inst.density.get(4, 0, 0) * scaling(&inst.scenario.bands[0]);
    assert!(under > limit);
    for p in (0..9).filter(|&p| p != 4) {
        assert!(inst.density.get(p, 0, 0) * scaling(&inst.scenario.bands[0]) < limit);
    }
    let state = install_check(&inst, &PlanState::empty(&inst), &[0], 0).unwrap();
    assert!(state.exposure.excluded[4]);
    assert_eq!(state.exposure.excluded.iter().filter(|&&w| w).count(), 1);
}

#[test]
fn second_band_at_same_site_breaks_site_max() {
    let dual = CandidateSite::new(0, Point::new(50.0, 50.0), 25.0, [0, 1]);
    let s = toy_with(4, 4, 25.0, vec![dual], two_bands(), |_, _| {}, no_fading());
    let inst = Instance::new(s).unwrap();
    let one = install_check(&inst, &PlanState::empty(&inst), &[0], 1).unwrap();
    assert_eq!(install_check(&inst, &one, &[0], 0), Err(InstallFailure::SiteMax { site: 0 }));
}

#[test]
fn residential_pixel_pushed_past_limit() {
    // 20 m strip; pixel 3 (x = 70) gets 0.09 W/m² of old exposure and a gNB
    // placed so the pixel ends at 1.05 times the 6 V/m limit
    let limit = 36.0 / emfplan::scenario::DEFAULT_IMPEDANCE_OHM;
    let increment = 1.05 * limit - 0.09;
    let band = FrequencyBand::micro();
    let raw = increment / (band.time_scaling * band.stat_scaling);
    let d2 = eirp(&band) / (4.0 * std::f64::consts::PI * raw);
    let horizontal = (d2 - 8.5f64.powi(2)).sqrt();
    let site_x = 70.0 - horizontal;
    let s = toy_with(6, 1, 20.0, vec![micro_site(0, site_x, 10.0)], vec![band], |_, _| {}, no_fading());
    let mut baseline = vec![0.0; 6];
    baseline[3] = 0.09;
    let s = Scenario::new(s.bounds, s.grid, s.sites, s.bands, s.regulation, Some(baseline), s.options).unwrap();
    let inst = Instance::new(s).unwrap();
    match install_check(&inst, &PlanState::empty(&inst), &[0], 0) {
        Err(InstallFailure::LimitResidential { pixel, ratio }) => {
            assert_eq!(pixel, 3);
            assert!((ratio - 1.05).abs() < 1e-9, "{ratio}");
        }
        other => panic!("expected limit-res, got {other:?}"),
    }
}

#[test]
fn reversion_restores_state_exactly() {
    let s = small(9);
    let inst = Instance::new(s).unwrap();
    let pool = inst.pool(0);
    let base = install_check(&inst, &PlanState::empty(&inst), &pool[..1], 0).unwrap();
    let grown = install_check(&inst, &base, &inst.pool(1)[..1], 1).unwrap();
    let back = uninstall(&inst, &grown, &[Slot::new(inst.pool(1)[0], 1)]);
    assert_eq!(back, base);
    assert_eq!(uninstall(&inst, &base, &[Slot::new(pool[0], 0)]), PlanState::empty(&inst));
}

#[test]
fn no_first_band_service_beyond_coverage() {
    let s =
        toy_with(11, 1, 25.0, vec![micro_site(0, 12.5, 12.5)], vec![FrequencyBand::micro()], |_, _| {}, no_fading());
    let inst = Instance::new(s).unwrap();
    let state = install_check(&inst, &PlanState::empty(&inst), &[0], 0).unwrap();
    let a = associate_pixels(&inst, &state);
    assert!((inst.scenario.distance(10, 0) - 250.0).abs() < 0.2);
    assert_eq!(a.server(10, 0), None);
    assert_eq!(a.server(7, 0), Some(0));
}

#[test]
fn second_band_pixel_served_by_only_macro() {
    let s = toy_with(3, 3, 50.0, vec![macro_site(0, 25.0, 25.0)], two_bands(), |_, _| {}, no_fading());
    let inst = Instance::new(s).unwrap();
    let state = install_check(&inst, &PlanState::empty(&inst), &[0], 1).unwrap();
    let a = associate_pixels(&inst, &state);
    assert!((0..9).all(|p| a.server(p, 1) == Some(0) && a.server(p, 0).is_none()));
}

/// Strip of 25 m pixels. Sites A and B serve pixel 0; C sits 300 m away
/// and only interferes. Fading is chosen so the squared gains at pixel 0 are
/// `gains`.
fn three_site_strip(gains: [f64; 3]) -> Instance {
    let sites = vec![micro_site(0, 62.5, 12.5), micro_site(1, 137.5, 12.5), micro_site(2, 312.5, 12.5)];
    let s = toy_with(15, 1, 25.0, sites, vec![FrequencyBand::micro()], |_, _| {}, no_fading());
    let gamma = s.bands[0].path_loss_exponent;
    let dist: Vec<f64> = (0..3).map(|l| s.distance(0, l)).collect();
    let fading =
        FadingTable::from_fn(
            s.n_pixels(),
            3,
            1,
            |p, l, _| {
                if p == 0 {
                    gains[l].sqrt() * dist[l].powf(gamma)
                } else {
                    1.0
                }
            },
        )
        .unwrap();
    Instance::with_fading(s, fading).unwrap()
}

#[test]
fn stronger_server_accepted_weaker_rejected() {
    // A: a / (b + c) = 0.6, B: b / (a + c) = 0.3 with c = 1
    let b = 0.48 / 0.82;
    let a = 0.6 * (b + 1.0);
    let inst = three_site_strip([a, b, 1.0]);
    assert!(inst.cover(0, 0).contains(&0) && inst.cover(1, 0).contains(&0));
    assert!(!inst.cover(2, 0).contains(&0));
    let all = dep(&[(0, 0), (1, 0), (2, 0)]);
    assert!((sir(&inst.scenario, &inst.beta, &all, 0, 0, 0).unwrap() - 0.6).abs() < 1e-9);
    assert!((sir(&inst.scenario, &inst.beta, &all, 0, 1, 0).unwrap() - 0.3).abs() < 1e-9);
    assert!((inst.min_sir[0] - 0.4347).abs() < 1e-4);
    let e = evaluate(&inst, &all).unwrap();
    assert_eq!(e.association.server(0, 0), Some(0));
}

#[test]
fn best_server_below_threshold_leaves_pixel_unserved() {
    // best in-range SIR 0.3 / 1.1 < 0.4347
    let inst = three_site_strip([0.3, 0.1, 1.0]);
    let e = evaluate(&inst, &dep(&[(0, 0), (1, 0), (2, 0)])).unwrap();
    assert_eq!(e.association.server(0, 0), None);
}

#[test]
fn objective_examples() {
    let s = small(0);
    let inst = Instance::new(s).unwrap();
    let empty = Evaluation::empty(&inst);
    assert_eq!(compute_obj(&inst, &Deployment::new(), &empty.association), (0.0, 0.0));

    // 10 x 10 pixels of 20 m, one micro gNB at the centre corner point
    let s =
        toy_with(10, 10, 20.0, vec![micro_site(0, 100.0, 100.0)], vec![FrequencyBand::micro()], |_, _| {}, no_fading());
    let inst = Instance::new(s).unwrap();
    let e = evaluate(&inst, &dep(&[(0, 0)])).unwrap();
    assert_eq!(e.association.n_links(), 100);
    assert_eq!((e.c_tot, e.objective), (17_643.0, 12_643.0));

    let s = tmc(0);
    let inst = Instance::new(s).unwrap();
    let mut d = Deployment::new();
    (0..11).for_each(|l| {
        d.insert(Slot::new(l, 0));
    });
    (54..57).for_each(|l| {
        d.insert(Slot::new(l, 1));
    });
    let none = emfplan::platea::Association::empty(inst.n_pixels(), 2);
    assert_eq!(compute_obj(&inst, &d, &none), (391_395.0, 391_395.0));
}

#[test]
fn every_site_too_close_to_sensitive_place() {
    let s = toy_with(
        4,
        4,
        25.0,
        vec![micro_site(0, 37.5, 37.5), macro_site(1, 62.5, 62.5)],
        two_bands(),
        |g, _| g.sensitive = [5].into_iter().collect(),
        no_fading(),
    );
    let r = platea(&s, &PlanConfig::new(1)).unwrap();
    assert!(!r.feasible);
    assert!(r.deployment().is_empty());
    assert_eq!(r.objective, 0.0);
    assert!(r.diagnostic.is_some());
}

#[test]
fn two_site_instance_installs_both() {
    let s = toy_with(
        5,
        5,
        25.0,
        vec![micro_site(0, 62.5, 62.5), macro_site(1, 12.5, 112.5)],
        two_bands(),
        |_, _| {},
        no_fading(),
    );
    let mut cfg = PlanConfig::new(2);
    cfg.alpha.insert(0, 1e6);
    cfg.alpha.insert(1, 1e6);
    let r = platea(&s, &cfg).unwrap();
    assert!(r.feasible);
    assert_eq!(r.deployment(), &dep(&[(0, 0), (1, 1)]));
    assert_eq!(r.association.n_links(), 50);
    assert_eq!(r.objective, 17_643.0 + 65_774.0 - 50.0 * 1e6);

    let mut tuned = s.clone();
    cfg.apply_alpha(&mut tuned);
    let ex = exhaustive(&Instance::new(tuned).unwrap(), None).unwrap();
    assert_eq!(ex.visited, 4);
    assert_eq!(ex.plan.deployment(), r.deployment());
    assert_eq!(ex.plan.objective, r.objective);
}

#[test]
fn second_band_pool_blocked_falls_back_to_first_band() {
    let s = toy_with(
        8,
        1,
        25.0,
        vec![micro_site(0, 12.5, 12.5), macro_site(1, 187.5, 12.5)],
        two_bands(),
        |g, _| g.sensitive = [7].into_iter().collect(),
        no_fading(),
    );
    let r = platea(&s, &PlanConfig::new(0)).unwrap();
    assert!(r.feasible);
    assert_eq!(r.deployment(), &dep(&[(0, 0)]));
}

fn check_plan_invariants(s: &Scenario, seed: u64) {
    let cfg = PlanConfig::new(seed);
    let inst = Instance::new(s.clone()).unwrap();
    let r = run_platea(&inst, &cfg).unwrap();
    assert!(r.feasible);

    let report = verify_solution(s, &inst.beta, &r.to_solution(s)).unwrap();
    assert!(report.feasible(), "{:?}", report.failed().collect::<Vec<_>>());
    assert!((report.objective - r.objective).abs() < 1e-6);

    // returned objective is the best second-phase candidate
    let full: Vec<f64> = r.trace.iter().filter(|t| t.phase == Phase::Full).filter_map(|t| t.objective).collect();
    let min = full.iter().copied().fold(f64::INFINITY, f64::min);
    assert_eq!(r.objective, min);

    let bests: Vec<f64> = r.trace.iter().filter_map(|t| t.best).collect();
    assert!(bests.windows(2).all(|w| w[1] <= w[0]));
    assert_eq!(r.evaluated, r.trace.len());

    // determinism, including the serialized form
    let again = run_platea(&inst, &cfg).unwrap();
    assert_eq!(again, r);
    assert_eq!(serde_json::to_string(&again.record()).unwrap(), serde_json::to_string(&r.record()).unwrap());

    // the winner scores the same from scratch
    let fresh = evaluate(&inst, r.deployment()).unwrap();
    assert_eq!(fresh.objective, r.objective);
    assert_eq!(fresh.association, r.association);
}

#[test]
fn plan_invariants_on_small_scenarios() {
    for seed in 0..6 {
        check_plan_invariants(&small(seed), seed);
    }
}

#[test]
fn exhaustive_never_worse_than_platea() {
    for seed in 0..4 {
        let s = small(seed);
        let inst = Instance::new(s.clone()).unwrap();
        let r = run_platea(&inst, &PlanConfig::new(seed)).unwrap();
        let ex = exhaustive(&inst, None).unwrap();
        assert!(ex.complete);
        assert!(ex.plan.objective <= r.objective + 1e-9);
    }
}

#[test]
fn record_round_trip() {
    let s = small(7);
    let inst = Instance::new(s).unwrap();
    let r = run_platea(&inst, &PlanConfig::new(7)).unwrap();
    let json = serde_json::to_string(&r.record()).unwrap();
    let back: emfplan::platea::PlanRecord = serde_json::from_str(&json).unwrap();
    let rebuilt = emfplan::platea::PlanResult::from_record(&inst, &back).unwrap();
    assert_eq!(rebuilt, r);
}

#[test]
fn combination_budget_rules() {
    assert_eq!(CombBudget::Linear.budget(5), 5);
    assert_eq!(CombBudget::Fixed(3).budget(9), 3);
    assert_eq!(CombBudget::Multiple(2).budget(4), 8);
    assert!((1..50).all(|n| CombBudget::Fixed(0).budget(n) >= 1));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn incremental_matches_from_scratch(seed in 0u64..1000, pick in proptest::collection::vec(any::<bool>(), 8), extra in 0usize..3) {
        let s = small(seed);
        let inst = Instance::new(s).unwrap();
        let pool0 = inst.pool(0);
        let chosen: Vec<usize> = pool0.iter().zip(&pick).filter(|(_, &b)| b).map(|(&l, _)| l).collect();
        let Ok(base) = evaluate(&inst, &chosen.iter().map(|&l| Slot::new(l, 0)).collect()) else { return Ok(()); };
        let add: Vec<usize> = inst.pool(1).into_iter().filter(|l| !chosen.contains(l)).take(extra + 1).collect();
        let inc = evaluate_on(&inst, &base, &add, 1);
        let mut union = base.state.deployment.clone();
        add.iter().for_each(|&l| { union.insert(Slot::new(l, 1)); });
        let scratch = evaluate(&inst, &union);
        prop_assert_eq!(inc, scratch);
    }
}
