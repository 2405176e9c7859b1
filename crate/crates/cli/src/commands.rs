use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{anyhow, Context};
use emfplan::baselines::{ea, exhaustive, mcma};
use emfplan::evaluation::{
    compute_metrics, sweep, throughput_cdf, write_field_heatmap, write_throughput_heatmap, Metrics, SweepAxis,
    SweepSpec,
};
use emfplan::exposure::density_from_field;
use emfplan::optmodel::{build_model, emit_lp, verify_solution, Solution, VerificationReport};
use emfplan::platea::{run_platea, PlanConfig, PlanRecord, PlanResult};
use emfplan::radio::build_fading_and_beta;
use emfplan::scenario::{generate_synthetic, load_scenario, save_scenario, Scenario, SyntheticConfig};
use emfplan::Instance;
use serde::{Deserialize, Serialize};

use crate::manifest::{sidecar, MANIFEST_NAME};
use crate::options::{
    Algo, Axis, Command, ExportLpArgs, GenArgs, PlanArgs, PlannerArgs, Preset, Regulation, SweepArgs, VerifyArgs,
};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Run(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Run(e)
    }
}

impl From<emfplan::Error> for CliError {
    fn from(e: emfplan::Error) -> Self {
        match e {
            emfplan::Error::Config(m) => CliError::Usage(m),
            other => CliError::Run(other.into()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Done,
    VerificationFailed,
    Infeasible,
}

/// Files a command read and wrote, and where its manifest belongs.
#[derive(Debug)]
pub struct Run {
    pub outcome: Outcome,
    pub seeds: Vec<u64>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub manifest: Option<PathBuf>,
}

/// Makes input paths absolute so a manifest replays from any directory.
pub fn resolve_inputs(cmd: &mut Command) -> CliResult<()> {
    let abs = |p: &mut PathBuf| -> CliResult<()> {
        *p = fs::canonicalize(&*p).with_context(|| format!("input {}", p.display()))?;
        Ok(())
    };
    match cmd {
        Command::Plan(a) => abs(&mut a.scenario),
        Command::Sweep(a) => abs(&mut a.scenario),
        Command::ExportLp(a) => abs(&mut a.scenario),
        Command::Verify(a) => {
            abs(&mut a.scenario)?;
            if let Some(p) = &mut a.solution {
                abs(p)?;
            }
            if let Some(p) = &mut a.result {
                abs(p)?;
            }
            Ok(())
        }
        Command::Gen(_) | Command::Replay(_) => Ok(()),
    }
}

pub fn execute(cmd: &Command) -> CliResult<Run> {
    match cmd {
        Command::Gen(a) => gen(a),
        Command::Plan(a) => plan(a),
        Command::Verify(a) => verify(a),
        Command::ExportLp(a) => export_lp(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Replay(_) => Err(CliError::Usage("a manifest cannot record a replay".into())),
    }
}

fn create(path: &Path) -> CliResult<BufWriter<fs::File>> {
    let f = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn load(path: &Path) -> CliResult<Scenario> {
    load_scenario(path).with_context(|| format!("loading scenario {}", path.display())).map_err(CliError::Run)
}

fn gen(a: &GenArgs) -> CliResult<Run> {
    let mut cfg = match a.preset {
        Preset::Tmc => SyntheticConfig::tmc(a.seed),
        Preset::Small => SyntheticConfig::small(a.seed),
    };
    if let Some(v) = a.pixel_size {
        cfg.pixel_size_m = v;
    }
    if let Some(v) = a.area_km2 {
        cfg.area_km2 = v;
    }
    if let Some(v) = a.n_f1 {
        cfg.n_sites_f1 = v;
    }
    if let Some(v) = a.n_f2 {
        cfg.n_sites_f2 = v;
    }
    if let Some(v) = a.n_dual {
        cfg.n_sites_dual = v;
    }
    if let Some(v) = a.sensitive_fraction {
        cfg.sensitive_fraction = v;
    }
    match a.regulation {
        Some(Regulation::Rome) => cfg.min_sensitive_distance_m = 100.0,
        Some(Regulation::Italy) => cfg.min_sensitive_distance_m = 0.0,
        None => {}
    }
    if !(cfg.pixel_size_m > 0.0) || !(cfg.area_km2 > 0.0) {
        return Err(CliError::Usage("pixel size and area must be positive".into()));
    }
    let mut s = generate_synthetic(&cfg)?;
    if a.no_fading {
        s.options.fading_enabled = false;
    }
    if let Some(e) = a.pre5g {
        let per_band = density_from_field(e, s.options.impedance_ohm)? / s.n_bands() as f64;
        s.set_uniform_baseline(per_band);
    }
    if let Some(dir) = a.output.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    save_scenario(&a.output, &s)?;
    let stem = a.output.file_stem().and_then(|s| s.to_str()).unwrap_or("scenario");
    println!("scenario: {} pixels, {} candidate sites, {} bands", s.n_pixels(), s.n_sites(), s.n_bands());
    Ok(Run {
        outcome: Outcome::Done,
        seeds: vec![a.seed],
        inputs: Vec::new(),
        outputs: vec![a.output.clone(), a.output.with_file_name(format!("{stem}.baseline.csv"))],
        manifest: Some(sidecar(&a.output)),
    })
}

fn plan_config(p: &PlannerArgs) -> PlanConfig {
    let mut cfg = PlanConfig::new(p.seed);
    cfg.f1_band = p.f1_band;
    cfg.f2_band = p.f2_band;
    if let Some(b) = p.comb_budget {
        cfg.comb_budget = b;
    }
    cfg.stop_on_full_coverage = !p.no_early_stop;
    if let Some(a) = p.alpha_f1 {
        cfg.alpha.insert(p.f1_band, a);
    }
    if let Some(a) = p.alpha_f2 {
        cfg.alpha.insert(p.f2_band, a);
    }
    cfg
}

/// Exhaustive-search bookkeeping in a plan result.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SearchSummary {
    pub visited: u64,
    pub complete: bool,
}

#[derive(Serialize)]
struct PlanOutput<'a> {
    result: PlanRecord,
    metrics: &'a Metrics,
    #[serde(skip_serializing_if = "Option::is_none")]
    search: Option<SearchSummary>,
}

#[derive(Deserialize)]
struct PlanInput {
    result: PlanRecord,
}

fn need(v: Option<usize>, flag: &str, algo: &str) -> CliResult<usize> {
    v.ok_or_else(|| CliError::Usage(format!("--{flag} is required for {algo}")))
}

fn plan(a: &PlanArgs) -> CliResult<Run> {
    let mut scenario = load(&a.scenario)?;
    let cfg = plan_config(&a.planner);
    cfg.validate(scenario.n_bands())?;
    cfg.apply_alpha(&mut scenario);
    let inst = Instance::new(scenario)?;
    let mut search = None;
    let result = match a.algo {
        Algo::Platea => run_platea(&inst, &cfg)?,
        Algo::Ea => ea(&inst, &cfg, need(a.num_f1, "num-f1", "ea")?, need(a.num_f2, "num-f2", "ea")?)?,
        Algo::Mcma => mcma(&inst, &cfg, need(a.num_f1, "num-f1", "mcma")?)?,
        Algo::Exhaustive => {
            let budget = a.time_budget_s.map(Duration::from_secs_f64);
            let ex = exhaustive(&inst, budget)?;
            search = Some(SearchSummary { visited: ex.visited, complete: ex.complete });
            ex.plan
        }
    };
    let s = &inst.scenario;
    let metrics = compute_metrics(s, &inst.beta, &result)?;

    let dir = &a.output;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut outputs = Vec::new();
    let mut out = |name: &str| {
        let p = dir.join(name);
        outputs.push(p.clone());
        p
    };

    let doc = PlanOutput { result: result.record(), metrics: &metrics, search };
    let mut json = serde_json::to_string_pretty(&doc).map_err(anyhow::Error::from)?;
    json.push('\n');
    write_text(&out("result.json"), &json)?;

    let mut w = csv::Writer::from_writer(create(&out("metrics.csv"))?);
    w.write_record(["metric", "value"]).map_err(anyhow::Error::from)?;
    for (name, value) in metrics.named() {
        w.write_record([name, value.to_string()]).map_err(anyhow::Error::from)?;
    }
    w.flush().map_err(anyhow::Error::from)?;

    write_text(&out("solution.txt"), &result.to_solution(s).to_text())?;
    write_field_heatmap(create(&out("field_heatmap.csv"))?, s, &metrics)?;
    write_throughput_heatmap(create(&out("throughput_heatmap.csv"))?, s, &metrics)?;
    let mut w = csv::Writer::from_writer(create(&out("throughput_cdf.csv"))?);
    w.write_record(["throughput_bps", "fraction"]).map_err(anyhow::Error::from)?;
    for (t, frac) in throughput_cdf(&metrics, &result) {
        w.write_record([t.to_string(), frac.to_string()]).map_err(anyhow::Error::from)?;
    }
    w.flush().map_err(anyhow::Error::from)?;

    let dep = result.deployment();
    println!(
        "{:?}: {} C_TOT={} objective={} installed={:?} served={:?} not_served={:.2}%",
        a.algo,
        if result.feasible { "feasible" } else { "infeasible" },
        result.c_tot,
        result.objective,
        (0..s.n_bands()).map(|f| dep.count_on(f)).collect::<Vec<_>>(),
        metrics.served,
        metrics.not_served_pct,
    );
    if let Some(d) = &result.diagnostic {
        println!("note: {d}");
    }
    Ok(Run {
        outcome: if result.feasible { Outcome::Done } else { Outcome::Infeasible },
        seeds: vec![a.planner.seed],
        inputs: vec![a.scenario.clone()],
        outputs,
        manifest: Some(dir.join(MANIFEST_NAME)),
    })
}

fn print_report(r: &VerificationReport) {
    println!("{:<14} {:>9} {:>10}  status", "family", "rows", "violations");
    for f in &r.families {
        println!(
            "{:<14} {:>9} {:>10}  {}",
            f.family.name(),
            f.rows,
            f.violations,
            if f.passed() { "ok" } else { "FAIL" }
        );
        if let Some(c) = &f.first {
            println!("  first: {} lhs={} rhs={} slack={}", c.row, c.lhs, c.rhs, c.slack);
        }
    }
    println!("C_TOT={} recomputed={}", r.c_tot, r.c_tot_recomputed);
    println!("objective={}", r.objective);
}

fn verify(a: &VerifyArgs) -> CliResult<Run> {
    let mut scenario = load(&a.scenario)?;
    if let Some(v) = a.alpha_f1 {
        scenario.set_alpha(0, v);
    }
    if let Some(v) = a.alpha_f2 {
        scenario.set_alpha(1, v);
    }
    let inst = Instance::new(scenario)?;
    let (solution, input) = match (&a.solution, &a.result) {
        (Some(p), _) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            (Solution::parse(&text)?, p.clone())
        }
        (None, Some(p)) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            let doc: PlanInput = serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?;
            (PlanResult::from_record(&inst, &doc.result)?.to_solution(&inst.scenario), p.clone())
        }
        (None, None) => return Err(CliError::Usage("give --solution or --result".into())),
    };
    let report = verify_solution(&inst.scenario, &inst.beta, &solution)?;
    print_report(&report);
    let mut outputs = Vec::new();
    if let Some(path) = &a.report {
        let mut json = serde_json::to_string_pretty(&report).map_err(anyhow::Error::from)?;
        json.push('\n');
        write_text(path, &json)?;
        outputs.push(path.clone());
    }
    let failed: Vec<&str> = report.failed().map(|f| f.family.name()).collect();
    if !failed.is_empty() {
        println!("violated: {}", failed.join(", "));
    }
    Ok(Run {
        outcome: if report.feasible() { Outcome::Done } else { Outcome::VerificationFailed },
        seeds: Vec::new(),
        inputs: vec![a.scenario.clone(), input],
        manifest: a.report.as_deref().map(sidecar),
        outputs,
    })
}

fn export_lp(a: &ExportLpArgs) -> CliResult<Run> {
    let mut scenario = load(&a.scenario)?;
    if let Some(v) = a.alpha_f1 {
        scenario.set_alpha(0, v);
    }
    if let Some(v) = a.alpha_f2 {
        scenario.set_alpha(1, v);
    }
    let (_, beta) = build_fading_and_beta(&scenario);
    let model = build_model(&scenario, &beta)?;
    write_text(&a.output, &emit_lp(&model))?;
    println!("{} variables, {} rows", model.n_variables(), model.rows.len());
    Ok(Run {
        outcome: Outcome::Done,
        seeds: Vec::new(),
        inputs: vec![a.scenario.clone()],
        outputs: vec![a.output.clone()],
        manifest: Some(sidecar(&a.output)),
    })
}

fn sweep_axis(a: &SweepArgs) -> CliResult<SweepAxis> {
    let two_d = matches!(a.axis, Axis::Alpha | Axis::Scaling);
    if two_d && a.values2.is_empty() {
        return Err(CliError::Usage(format!("--values2 is required for the {:?} axis", a.axis)));
    }
    if !two_d && !a.values2.is_empty() {
        return Err(CliError::Usage(format!("the {:?} axis takes only --values", a.axis)));
    }
    let v = a.values.clone();
    Ok(match a.axis {
        Axis::Alpha => SweepAxis::Alpha { f1: v, f2: a.values2.clone() },
        Axis::Scaling => SweepAxis::Scaling { time: v, stat: a.values2.clone() },
        Axis::DMin => SweepAxis::DMin { values: v },
        Axis::Pre5g => SweepAxis::Pre5g { field_v_m: v },
        Axis::Reuse => SweepAxis::Reuse { factors: v },
    })
}

fn run_sweep(a: &SweepArgs) -> CliResult<Run> {
    let template = load(&a.scenario)?;
    let spec = SweepSpec { axis: sweep_axis(a)?, seeds: a.seeds.clone(), plan: plan_config(&a.planner) };
    let table = sweep(&template, &spec)?;
    let dir = &a.output;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let long = dir.join("sweep_long.csv");
    let summary = dir.join("sweep_summary.csv");
    table.write_long_csv(create(&long)?)?;
    table.write_summary_csv(create(&summary)?)?;

    let (n1, n2) = &table.axis_names;
    let mut stdout = std::io::stdout().lock();
    for r in table.summary().iter().filter(|r| r.metric == "T_AVG" || r.metric == "C_TOT") {
        let point = match r.axis2 {
            Some(b) => format!("{n1}={} {n2}={b}", r.axis1),
            None => format!("{n1}={}", r.axis1),
        };
        writeln!(stdout, "{point} mean {}={} over {} runs", r.metric, r.mean, r.runs).map_err(|e| anyhow!(e))?;
    }
    Ok(Run {
        outcome: Outcome::Done,
        seeds: a.seeds.clone(),
        inputs: vec![a.scenario.clone()],
        outputs: vec![long, summary],
        manifest: Some(dir.join(MANIFEST_NAME)),
    })
}
