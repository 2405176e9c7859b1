mod common;

use std::collections::BTreeSet;

use common::*;
use emfplan::optmodel::{
    build_model, check_exclusion_linearization, check_sir_linearization, emit_lp, verify_solution, Family,
    SmallInstance, Solution, Var,
};
use emfplan::radio::build_fading_and_beta;
use emfplan::scenario::{CandidateSite, FrequencyBand, Point, ScenarioOptions};
use emfplan::Instance;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn single() -> emfplan::scenario::Scenario {
    toy(1, 1, 100.0, vec![micro_site(0, 5.0, 5.0)], vec![FrequencyBand::micro()])
}

#[test]
fn one_pixel_one_site_one_band_has_six_variables() {
    let s = single();
    let (_, beta) = build_fading_and_beta(&s);
    let m = build_model(&s, &beta).unwrap();
    assert_eq!(m.n_variables(), 6);
    let vars = m.variables();
    assert_eq!(vars.len(), 6);
    assert_eq!(vars.iter().collect::<BTreeSet<_>>().len(), 6);
}

fn expected_census(s: &emfplan::scenario::Scenario) -> Vec<(Family, usize)> {
    let (p, l, f) = (s.n_pixels(), s.n_sites(), s.n_bands());
    let res = s.pixels.iter().filter(|px| px.area_class == emfplan::scenario::AreaClass::Residential).count();
    vec![
        (Family::Coverage, p * l * f),
        (Family::MaxServing, p),
        (Family::SirAux, 3 * p * l * l * f),
        (Family::SirLinear, p * l * f),
        (Family::ExclLower, p * l * f),
        (Family::ExclUpper, p),
        (Family::ExclLin, 3 * p * l * f),
        (Family::PdScaled, 0),
        (Family::PdUnscaled, 0),
        (Family::LimitResidential, res),
        (Family::LimitGeneral, p - res),
        (Family::MinDistance, s.grid.sensitive.len() * l * f),
        (Family::SiteMax, l),
        (Family::SiteAllowed, l * f),
        (Family::Cost, 1),
    ]
}

#[test]
fn census_matches_quantifiers() {
    let mut s = small(3);
    s.grid.general_public = (0..20).collect();
    s.grid.sensitive = [100, 101].into_iter().collect();
    let s = emfplan::scenario::Scenario::new(
        s.bounds,
        s.grid.clone(),
        s.sites.clone(),
        s.bands.clone(),
        s.regulation.clone(),
        None,
        s.options.clone(),
    )
    .unwrap();
    let (_, beta) = build_fading_and_beta(&s);
    let m = build_model(&s, &beta).unwrap();
    let census = m.census();
    for (family, n) in expected_census(&s) {
        assert_eq!(census[&family], n, "{family:?}");
    }
    let mut used = BTreeSet::new();
    for r in &m.rows {
        used.extend(r.terms.iter().map(|t| t.0));
    }
    for v in m.variables() {
        assert!(used.contains(&v), "{v} appears in no row");
    }
}

#[test]
fn site_max_row_for_dual_band_site() {
    let dual = CandidateSite::new(0, Point::new(20.0, 20.0), 25.0, [0, 1]);
    let s = toy(2, 2, 10.0, vec![dual], two_bands());
    let (_, beta) = build_fading_and_beta(&s);
    let m = build_model(&s, &beta).unwrap();
    let rows: Vec<_> = m.rows.iter().filter(|r| r.family == Family::SiteMax).collect();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].terms, vec![(Var::Y { site: 0, band: 0 }, 1.0), (Var::Y { site: 0, band: 1 }, 1.0)]);
    assert_eq!(rows[0].rhs, 1.0);
    assert!(emit_lp(&m).contains(" nmax_l0: 1 y_l0_f0 + 1 y_l0_f1 <= 1\n"));
}

#[test]
fn sites_too_close_to_sensitive_places_are_pinned() {
    let s = toy_with(
        3,
        3,
        10.0,
        vec![micro_site(0, 15.0, 15.0), macro_site(1, 5.0, 25.0)],
        two_bands(),
        |g, _| g.sensitive = [4].into_iter().collect(),
        ScenarioOptions::default(),
    );
    let (_, beta) = build_fading_and_beta(&s);
    let m = build_model(&s, &beta).unwrap();
    let fixed: BTreeSet<Var> = m.fixed_zero.iter().copied().collect();
    for l in 0..2 {
        for f in 0..2 {
            assert!(fixed.contains(&Var::Y { site: l, band: f }));
        }
    }
    let lp = emit_lp(&m);
    assert!(lp.contains(" y_l0_f0 = 0\n"));
    // only the empty deployment survives, and it scores zero
    let zero = verify_solution(&s, &beta, &Solution::zero()).unwrap();
    assert!(zero.feasible());
    assert_eq!(zero.objective, 0.0);
}

#[test]
fn lp_text_is_well_formed() {
    let s = small(1);
    let (_, beta) = build_fading_and_beta(&s);
    let m = build_model(&s, &beta).unwrap();
    let lp = emit_lp(&m);
    let heads: Vec<&str> = lp.lines().filter(|l| !l.starts_with(' ')).collect();
    assert_eq!(heads, ["\\ planning model", "Minimize", "Subject To", "Bounds", "Binary", "End"]);
    assert!(lp.lines().all(|l| l.len() < 510), "line too long for LP readers");
    // every binary is declared once and parses back to its index tuple
    let start = lp.find("Binary\n").unwrap() + 7;
    let end = lp.find("End\n").unwrap();
    let declared: Vec<Var> = lp[start..end].split_whitespace().map(|n| n.parse().unwrap()).collect();
    let expected: Vec<Var> = m.variables().into_iter().filter(|v| *v != Var::CTot).collect();
    assert_eq!(declared, expected);
    let subject = &lp[lp.find("Subject To\n").unwrap()..lp.find("Bounds\n").unwrap()];
    let row_names = subject.lines().filter(|l| l.starts_with(' ') && l.contains(':')).count();
    assert_eq!(row_names, m.rows.len());
}

#[test]
fn lp_golden_for_six_variable_model() {
    let s = single();
    let (_, beta) = build_fading_and_beta(&s);
    let lp = emit_lp(&build_model(&s, &beta).unwrap());
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/six_variable.lp");
    if std::env::var_os("EMFPLAN_BLESS").is_some() {
        std::fs::write(&path, &lp).unwrap();
    }
    assert_eq!(lp, std::fs::read_to_string(&path).unwrap());
}

#[test]
fn lp_degenerate_model_is_valid() {
    // one site, pinned out by a sensitive pixel underneath: nothing can be installed
    let mut bands = vec![FrequencyBand::micro()];
    bands[0].alpha_eur = 0.0;
    let s = toy_with(
        1,
        1,
        10.0,
        vec![micro_site(0, 5.0, 5.0)],
        bands,
        |g, _| g.sensitive = [0].into_iter().collect(),
        ScenarioOptions::default(),
    );
    let (_, beta) = build_fading_and_beta(&s);
    let m = build_model(&s, &beta).unwrap();
    let lp = emit_lp(&m);
    assert!(lp.contains(" obj: 1 C_TOT\n"));
    assert!(lp.contains(" y_l0_f0 = 0\n"));
    assert!(lp.ends_with("End\n"));
}

#[test]
fn model_refuses_full_scale() {
    let s = tmc(0);
    let (_, beta) = build_fading_and_beta(&s);
    assert!(matches!(build_model(&s, &beta), Err(emfplan::Error::TooLarge(_))));
}

#[test]
fn verify_all_zero_is_feasible() {
    let s = small(2);
    let (_, beta) = build_fading_and_beta(&s);
    let r = verify_solution(&s, &beta, &Solution::zero()).unwrap();
    assert!(r.feasible());
    assert_eq!(r.objective, 0.0);
    assert_eq!(r.c_tot_recomputed, 0.0);
    assert_eq!(r.families.len(), Family::ALL.len());
}

#[test]
fn verify_flags_service_beyond_coverage_distance() {
    // 30 pixels of 10 m; the site sits at the left edge so the right end is beyond 200 m
    let s = toy(30, 1, 10.0, vec![micro_site(0, 0.0, 5.0)], vec![FrequencyBand::micro()]);
    let (_, beta) = build_fading_and_beta(&s);
    let far = 25;
    assert!(s.distance(far, 0) > 200.0);
    let mut sol = Solution::zero();
    sol.set(Var::Y { site: 0, band: 0 }, 1.0).unwrap();
    sol.set(Var::X { pixel: far, site: 0, band: 0 }, 1.0).unwrap();
    sol.set(Var::CTot, s.install_cost(0, 0)).unwrap();
    let r = verify_solution(&s, &beta, &sol).unwrap();
    let cov = r.family(Family::Coverage);
    assert_eq!(cov.violations, 1);
    assert_eq!(cov.first.as_ref().unwrap().row, "cov_p25_l0_f0");
    assert!(cov.first.as_ref().unwrap().slack < 0.0);
    assert!(!r.feasible());
}

#[test]
fn verify_rejects_out_of_range_indices() {
    let s = single();
    let (_, beta) = build_fading_and_beta(&s);
    let mut sol = Solution::zero();
    sol.set(Var::W { pixel: 7 }, 1.0).unwrap();
    assert!(matches!(verify_solution(&s, &beta, &sol), Err(emfplan::Error::Dimension(_))));
}

#[test]
fn eleven_micro_three_macro_cost() {
    let s = tmc(0);
    let (_, beta) = build_fading_and_beta(&s);
    let mut sol = Solution::zero();
    for l in 0..11 {
        sol.y.insert((l, 0));
    }
    for l in 54..57 {
        sol.y.insert((l, 1));
    }
    sol.c_tot = 391_395.0;
    let r = verify_solution(&s, &beta, &sol).unwrap();
    assert_eq!(r.c_tot_recomputed, 391_395.0);
    assert!(r.family(Family::Cost).passed());
    assert_eq!(r.objective, 391_395.0);
}

#[test]
fn broken_products_are_caught() {
    let s = small(4);
    let inst = Instance::new(s.clone()).unwrap();
    let plan = emfplan::platea::platea(&s, &emfplan::platea::PlanConfig::new(4)).unwrap();
    assert!(plan.feasible);
    let good = plan.to_solution(&s);
    assert!(verify_solution(&s, &inst.beta, &good).unwrap().feasible());

    let mut bad = good.clone();
    let first = *bad.v.iter().next().unwrap();
    bad.v.remove(&first);
    assert!(!verify_solution(&s, &inst.beta, &bad).unwrap().family(Family::SirAux).passed());

    let mut bad = good.clone();
    let (p, l, f) = *bad.z.iter().next().unwrap();
    bad.z.remove(&(p, l, f));
    assert!(!verify_solution(&s, &inst.beta, &bad).unwrap().family(Family::ExclLin).passed());

    let mut bad = good.clone();
    bad.c_tot += 1.0;
    assert!(!verify_solution(&s, &inst.beta, &bad).unwrap().family(Family::Cost).passed());
}

#[test]
fn imported_solution_round_trips_through_text() {
    let s = small(5);
    let inst = Instance::new(s.clone()).unwrap();
    let plan = emfplan::platea::platea(&s, &emfplan::platea::PlanConfig::new(5)).unwrap();
    let sol = plan.to_solution(&s);
    let back = Solution::parse(&sol.to_text()).unwrap();
    assert_eq!(back, sol);
    let r = verify_solution(&s, &inst.beta, &back).unwrap();
    assert!(r.feasible(), "{:?}", r.failed().collect::<Vec<_>>());
    assert!((r.objective - plan.objective).abs() <= 1e-6);
}

#[test]
fn exclusion_linearization_is_exact() {
    assert!(check_exclusion_linearization());
}

/// Independent enumeration over full `(y, x, v)` vectors for two sites, one
/// pixel and one band.
fn naive_two_site_equivalence(beta: [f64; 2], s_min: f64, in_range: [bool; 2]) -> bool {
    for y in 0..4u32 {
        let yv = [y & 1, (y >> 1) & 1];
        for x in 0..4u32 {
            let xv = [x & 1, (x >> 1) & 1];
            if (0..2).any(|l| xv[l] == 1 && (yv[l] == 0 || !in_range[l])) || xv[0] + xv[1] > 1 {
                continue;
            }
            let nonlinear = (0..2).all(|l| {
                let o = 1 - l;
                let num = beta[l] * beta[l] * yv[l] as f64;
                let den = beta[o] * beta[o] * yv[o] as f64;
                let rhs = s_min * xv[l] as f64;
                if den == 0.0 {
                    num > 0.0 || rhs <= 0.0
                } else {
                    num / den >= rhs
                }
            });
            let mut linear = false;
            for v in 0..16u32 {
                // v[l][l2] bit at 2*l + l2
                let vb = |l: usize, l2: usize| ((v >> (2 * l + l2)) & 1) as f64;
                let ok = (0..2).all(|l| {
                    (0..2).all(|l2| {
                        let (xx, yy, vv) = (xv[l] as f64, yv[l2] as f64, vb(l, l2));
                        vv <= xx && vv <= yy && vv >= xx + yy - 1.0
                    }) && s_min
                        * ((0..2).map(|l2| (beta[l2] / beta[l]).powi(2) * vb(l, l2)).sum::<f64>() - xv[l] as f64)
                        <= 1.0
                });
                if ok {
                    linear = true;
                    break;
                }
            }
            if nonlinear != linear {
                return false;
            }
        }
    }
    true
}

fn two_site(beta: [f64; 2], s_min: f64) -> SmallInstance {
    SmallInstance {
        n_pixels: 1,
        n_sites: 2,
        n_bands: 1,
        beta: beta.to_vec(),
        in_range: vec![true, true],
        s_min: vec![s_min],
        n_ser: 2,
    }
}

#[test]
fn sir_linearization_two_sites_random_beta() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let inst = SmallInstance::random(&mut rng, 1, 2, 1);
        assert!(check_sir_linearization(&inst).unwrap());
        let b = [inst.beta[0], inst.beta[1]];
        assert!(naive_two_site_equivalence(b, inst.s_min[0], [inst.in_range[0], inst.in_range[1]]));
    }
}

#[test]
fn sir_linearization_zero_threshold() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut inst = SmallInstance::random(&mut rng, 3, 3, 1);
    inst.s_min = vec![0.0];
    assert!(check_sir_linearization(&inst).unwrap());
}

#[test]
fn sir_linearization_adversarial_beta() {
    // the serving gain is ten times weaker than the interferer: SIR = 0.01 < 0.4347
    let inst = two_site([0.1, 1.0], 0.4347);
    assert!(!inst.sir_row_holds(&[true, true], 0, 0, 0, true));
    assert!(!inst.linear_rows_satisfiable(&[true, true], 0, 0, 0, true));
    assert!(check_sir_linearization(&inst).unwrap());
    assert!(naive_two_site_equivalence([0.1, 1.0], 0.4347, [true, true]));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn sir_linearization_holds_on_random_instances(seed: u64, np in 1usize..=3, nl in 1usize..=3, nf in 1usize..=2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = SmallInstance::random(&mut rng, np, nl, nf);
        prop_assert!(check_sir_linearization(&inst).unwrap());
    }

    #[test]
    fn naive_oracle_agrees(b0 in 1e-3f64..1.0, b1 in 1e-3f64..1.0, s_min in 0.0f64..5.0, r0: bool, r1: bool) {
        let inst = SmallInstance {
            in_range: vec![r0, r1],
            ..two_site([b0, b1], s_min)
        };
        prop_assert_eq!(check_sir_linearization(&inst).unwrap(), naive_two_site_equivalence([b0, b1], s_min, [r0, r1]));
    }
}

#[test]
fn sir_linearization_at_size_limit() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let inst = SmallInstance::random(&mut rng, 6, 4, 1);
    assert!(check_sir_linearization(&inst).unwrap());
}
