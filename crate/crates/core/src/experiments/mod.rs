//! Experiment harness: seeded multi-worker trials, aggregate statistics and
//! verdicts against declared tolerances.
//!
//! Trial `i` (or Monte Carlo chunk `i`) always draws from the stream derived
//! from `(seed, i)` and results are merged by index, so per-trial records do
//! not depend on the worker count.

pub mod config;
pub mod report;

use std::collections::HashMap;
use std::time::Instant;

use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{ExperimentConfig, ExperimentKind, Tolerances};
pub use report::{ExperimentReport, Verdict, VERSION};

use crate::clusters::classify;
use crate::combinatorics::{trial_rng, trial_seed, Combinations, Params};
use crate::error::{Error, Result};
use crate::exact::{
    count_systems_budgeted, enumerate_systems, exact_containment_prob, exact_deg_zero_prob,
    sample_uniform_hypergraph, UniformSystemSampler,
};
use crate::formulas::{
    log_acceptance_asymptotic, log_containment_asymptotic, log_deg_zero_asymptotic, quadratic_term,
    ThresholdParams,
};
use crate::hypergraph::{AddOutcome, GeneralGraph, Hypergraph, PartialSystem, RSet};
use crate::process::{run_process, StopRule};
use crate::stats::{chi_square_uniformity, factorial_moment_with_se, poisson_tv_distance, SampleSummary};
use crate::switching::{count_forward_switchings, count_reverse_switchings, double_counting_sums};

/// Monte Carlo samples per chunk; each chunk owns one rng stream.
pub const CHUNK: u64 = 10_000;
/// Node limit for exact-oracle cross-checks inside experiments.
pub const ORACLE_NODE_LIMIT: u64 = 50_000_000;
/// Uniform `H_r(n,m)` draws allowed per switching-census instance.
pub const INSTANCE_ATTEMPTS: u64 = 100_000;

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let start = Instant::now();
    let mut report = match cfg.kind {
        ExperimentKind::Simulate => run_simulation(cfg),
        ExperimentKind::HittingTimes => run_hitting_time_experiment(cfg),
        ExperimentKind::IsolatedDist => run_isolated_distribution_experiment(cfg),
        ExperimentKind::ValidateCount => run_formula_validation(cfg),
        ExperimentKind::ValidateContainment => run_containment_validation(cfg),
        ExperimentKind::UniformityProbe => run_uniformity_probe(cfg),
        ExperimentKind::SwitchingCensus => run_switching_census(cfg),
        ExperimentKind::Enumerate => run_enumeration(cfg),
    }?;
    report.wall_clock_secs = start.elapsed().as_secs_f64();
    Ok(report)
}

fn par_indexed<T, F>(threads: usize, count: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Usage(format!("cannot build worker pool: {e}")))?;
    Ok(pool.install(|| (0..count).into_par_iter().map(&f).collect()))
}

/// `(index, size)` of each chunk covering `samples`.
fn chunks(samples: u64) -> Vec<(u64, u64)> {
    (0..samples.div_ceil(CHUNK))
        .map(|i| (i, CHUNK.min(samples - i * CHUNK)))
        .collect()
}

/// Allowed deviation: `se_multiplier * se` plus the prediction's relative
/// uncertainty `exp(dropped_multiplier * dropped) - 1`.
pub fn mc_tolerance(tol: &Tolerances, se: f64, predicted: f64, dropped: f64) -> f64 {
    tol.se_multiplier * se + predicted.abs() * (tol.dropped_multiplier * dropped).exp_m1()
}

fn proportion_se(p: f64, count: u64) -> f64 {
    if count == 0 {
        f64::NAN
    } else {
        (p * (1.0 - p) / count as f64).sqrt()
    }
}

fn ratio_f64(q: &num_rational::BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

fn median(sorted: &[f64]) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        k if k % 2 == 1 => sorted[k / 2],
        k => 0.5 * (sorted[k / 2 - 1] + sorted[k / 2]),
    }
}

/// The first `k` edges of the lexicographically greedy partial system.
pub fn greedy_system(params: &Params, k: u64) -> Result<Vec<RSet>> {
    let mut sys = PartialSystem::new(*params);
    let mut out = Vec::new();
    let mut combos = Combinations::new(params.n() as usize, params.r() as usize);
    while (out.len() as u64) < k {
        let Some(c) = combos.next_ref() else {
            return Err(Error::Domain(format!("no partial system with {k} edges found greedily")));
        };
        let e = RSet::new(c.iter().map(|&i| i as u32 + 1))?;
        if let AddOutcome::Added(_) = sys.try_add(e.clone())? {
            out.push(e);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct SimRecord {
    trial: u64,
    seed: u64,
    tau_o: Option<u64>,
    tau_c: Option<u64>,
    accepted: u64,
    draws_total: u64,
    rejections: u64,
    saturated: bool,
    error: Option<String>,
}

/// Runs the process per trial until connectivity, or until `m` edges when
/// `m` is set. Reports hitting times without verdicts.
pub fn run_simulation(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let stop = cfg.m.map_or(StopRule::AtConnectivity, StopRule::AtEdgeCount);
    let records = par_indexed(cfg.threads, cfg.trials, |i| {
        let seed = trial_seed(cfg.seed, i);
        match run_process(cfg.params, seed, stop) {
            Ok(t) => SimRecord {
                trial: i,
                seed,
                tau_o: t.tau_o,
                tau_c: t.tau_c,
                accepted: t.accepted.len() as u64,
                draws_total: t.draws_total,
                rejections: t.rejections,
                saturated: t.saturated,
                error: None,
            },
            Err(e) => SimRecord {
                trial: i,
                seed,
                tau_o: None,
                tau_c: None,
                accepted: 0,
                draws_total: 0,
                rejections: 0,
                saturated: false,
                error: Some(e.to_string()),
            },
        }
    })?;
    if let Some(e) = records.iter().map(|r| r.error.clone()).collect::<Option<Vec<_>>>() {
        return Err(Error::Domain(e[0].clone()));
    }
    let mut rep = ExperimentReport::new(cfg);
    rep.set("trials", cfg.trials as f64);
    let accepted: Vec<u64> = records.iter().map(|r| r.accepted).collect();
    rep.set("mean_accepted", SampleSummary::from_samples(&accepted).mean);
    let tau_c: Vec<u64> = records.iter().filter_map(|r| r.tau_c).collect();
    rep.set("connected_trials", tau_c.len() as f64);
    if !tau_c.is_empty() {
        rep.set("mean_tau_c", SampleSummary::from_samples(&tau_c).mean);
    }
    rep.set("errors", records.iter().filter(|r| r.error.is_some()).count() as f64);
    rep.push_records(&records)?;
    Ok(rep)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct HittingRecord {
    trial: u64,
    seed: u64,
    tau_o: Option<u64>,
    tau_c: Option<u64>,
    equal: Option<bool>,
    /// `r tau_c / n - ln n`.
    scaled: Option<f64>,
    in_window: Option<bool>,
    draws_total: u64,
    rejections: u64,
    error: Option<String>,
}

pub fn run_hitting_time_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let (n, r) = (cfg.params.n(), cfg.params.r());
    let mut tp = ThresholdParams::new(n, r).with_c(cfg.c);
    if let Some(w) = cfg.omega {
        tp = tp.with_omega(w);
    }
    let (m_l, m_r) = (tp.m_l(), tp.m_r());
    let ln_n = (n as f64).ln();
    let records = par_indexed(cfg.threads, cfg.trials, |i| {
        let seed = trial_seed(cfg.seed, i);
        match run_process(cfg.params, seed, StopRule::AtConnectivity) {
            Ok(t) => {
                let error = t.tau_c.is_none().then(|| "process saturated before connectivity".to_string());
                HittingRecord {
                    trial: i,
                    seed,
                    tau_o: t.tau_o,
                    tau_c: t.tau_c,
                    equal: t.tau_c.map(|c| t.tau_o == Some(c)),
                    scaled: t.tau_c.map(|c| r as f64 * c as f64 / n as f64 - ln_n),
                    in_window: t.tau_c.map(|c| (m_l..=m_r).contains(&c)),
                    draws_total: t.draws_total,
                    rejections: t.rejections,
                    error,
                }
            }
            Err(e) => HittingRecord {
                trial: i,
                seed,
                tau_o: None,
                tau_c: None,
                equal: None,
                scaled: None,
                in_window: None,
                draws_total: 0,
                rejections: 0,
                error: Some(e.to_string()),
            },
        }
    })?;
    let trials = cfg.trials as f64;
    let equal = records.iter().filter(|r| r.equal == Some(true)).count() as f64 / trials;
    let window = records.iter().filter(|r| r.in_window == Some(true)).count() as f64 / trials;
    let mut scaled: Vec<f64> = records.iter().filter_map(|r| r.scaled).collect();
    scaled.sort_by(f64::total_cmp);

    let mut rep = ExperimentReport::new(cfg);
    rep.set("trials", trials);
    rep.set("reached", scaled.len() as f64);
    rep.set("fraction_equal", equal);
    rep.set("fraction_in_window", window);
    rep.set("omega", tp.omega);
    rep.set("m_l", m_l as f64);
    rep.set("m_r", m_r as f64);
    rep.set("median_scaled", median(&scaled));
    if !scaled.is_empty() {
        rep.set("mean_scaled", scaled.iter().sum::<f64>() / scaled.len() as f64);
        rep.set("min_scaled", scaled[0]);
        rep.set("max_scaled", scaled[scaled.len() - 1]);
    }
    let t = &cfg.tolerances;
    rep.verdicts.push(Verdict::at_least("fraction_equal", equal, t.fraction_equal_min));
    rep.verdicts.push(Verdict::at_least("fraction_in_window", window, t.window_fraction_min));
    let failed = records.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        rep.notes.push(format!("{failed} trials did not reach connectivity"));
    }
    rep.table_columns = ["scaled_tau_c".into(), "empirical_cdf".into()];
    let k = scaled.len() as f64;
    rep.table = scaled.iter().enumerate().map(|(i, &x)| [x, (i + 1) as f64 / k]).collect();
    rep.push_records(&records)?;
    Ok(rep)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct IsolatedRecord {
    trial: u64,
    seed: u64,
    m: u64,
    isolated: u64,
    saturated: bool,
}

pub fn run_isolated_distribution_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let (n, r) = (cfg.params.n(), cfg.params.r());
    let (m, lambda) = match cfg.m {
        Some(m) => (m, n as f64 * (-(r as f64) * m as f64 / n as f64).exp()),
        None => (ThresholdParams::new(n, r).with_c(cfg.c).m_c(), (-cfg.c).exp()),
    };
    let results = par_indexed(cfg.threads, cfg.trials, |i| {
        let seed = trial_seed(cfg.seed, i);
        run_process(cfg.params, seed, StopRule::AtEdgeCount(m)).map(|t| {
            let mut deg = vec![false; n as usize + 1];
            for e in &t.accepted {
                for &v in e.vertices() {
                    deg[v as usize] = true;
                }
            }
            IsolatedRecord {
                trial: i,
                seed,
                m,
                isolated: deg[1..].iter().filter(|&&d| !d).count() as u64,
                saturated: (t.accepted.len() as u64) < m,
            }
        })
    })?;
    let records = results.into_iter().collect::<Result<Vec<_>>>()?;
    let samples: Vec<u64> = records.iter().map(|r| r.isolated).collect();
    let summary = SampleSummary::from_samples(&samples);
    let tv = poisson_tv_distance(&summary, lambda)?;

    let mut rep = ExperimentReport::new(cfg);
    rep.set("m", m as f64);
    rep.set("lambda", lambda);
    rep.set("mean", summary.mean);
    rep.set("variance", summary.variance);
    rep.set("tv_distance", tv);
    rep.set("saturated_trials", records.iter().filter(|r| r.saturated).count() as f64);
    let t = &cfg.tolerances;
    rep.verdicts.push(Verdict::at_most("tv_distance", tv, t.tv_max));
    for k in 1..=3u32 {
        let (fm, se) = factorial_moment_with_se(&samples, k)?;
        let target = lambda.powi(k as i32);
        rep.set(format!("factorial_moment_{k}"), fm);
        rep.set(format!("factorial_moment_{k}_se"), se);
        if k <= 2 {
            rep.verdicts
                .push(Verdict::within(format!("factorial_moment_{k}"), fm, target, t.se_multiplier * se));
        }
    }
    if cfg.m.is_some() {
        rep.notes.push("lambda = n exp(-r m / n) for the explicit m".into());
    }
    rep.table_columns = ["isolated".into(), "frequency".into()];
    rep.table = summary.histogram.keys().map(|&k| [k as f64, summary.frequency(k)]).collect();
    rep.push_records(&records)?;
    Ok(rep)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct CountRecord {
    m: u64,
    chunk: u64,
    attempts: u64,
    accepted: u64,
}

/// Monte Carlo estimate of `|S(n,r,ell;m)| / C(N,m)` on each grid point.
pub fn run_formula_validation(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let params = cfg.params;
    let t = &cfg.tolerances;
    let mut rep = ExperimentReport::new(cfg);
    rep.table_columns = ["m".into(), "empirical_acceptance".into()];
    for m in cfg.grid() {
        let predicted = match log_acceptance_asymptotic(&params, m) {
            Ok(p) => p,
            Err(e) => {
                rep.notes.push(format!("m={m}: skipped ({e})"));
                continue;
            }
        };
        let p_full = predicted.to_f64();
        if p_full < 1e-4 {
            rep.notes
                .push(format!("m={m}: skipped, predicted acceptance {p_full:.3e} is below 1e-4"));
            continue;
        }
        if let Err(e) = UniformSystemSampler::with_floor(params, m, 1e-4) {
            rep.notes.push(format!("m={m}: skipped ({e})"));
            continue;
        }
        let records = par_indexed(cfg.threads, cfg.samples.div_ceil(CHUNK), |i| {
            let (_, size) = chunks(cfg.samples)[i as usize];
            let mut sampler = UniformSystemSampler::with_floor(params, m, 1e-4).expect("checked above");
            let mut rng = trial_rng(cfg.seed, i);
            let accepted = (0..size).filter(|_| sampler.attempt(&mut rng).is_some()).count() as u64;
            CountRecord {
                m,
                chunk: i,
                attempts: size,
                accepted,
            }
        })?;
        let hits: u64 = records.iter().map(|r| r.accepted).sum();
        let p = hits as f64 / cfg.samples as f64;
        let se = proportion_se(p, cfg.samples);
        let p_quad = (-quadratic_term(&params, m)).exp();
        rep.set(format!("m{m}_empirical"), p);
        rep.set(format!("m{m}_se"), se);
        rep.set(format!("m{m}_predicted"), p_full);
        rep.set(format!("m{m}_dropped"), predicted.dropped);
        rep.set(format!("m{m}_leading"), p_quad);
        let rel = (p - p_quad).abs() / p_quad;
        rep.verdicts
            .push(Verdict::at_most(format!("m{m}_relative_error_leading"), rel, t.relative_tolerance));
        rep.verdicts.push(Verdict::within(
            format!("m{m}_predicted"),
            p,
            p_full,
            mc_tolerance(t, se, p_full, predicted.dropped),
        ));
        if params.total_rsets_u64().is_some_and(|n| n <= crate::exact::MAX_RSETS) {
            match count_systems_budgeted(&params, m, ORACLE_NODE_LIMIT) {
                Ok(count) => {
                    let total = params.total_rsets_u64().unwrap_or(0);
                    let exact = num_rational::BigRational::new(count.into(), crate::combinatorics::binomial(total, m).into());
                    let exact = ratio_f64(&exact);
                    rep.set(format!("m{m}_exact"), exact);
                    rep.verdicts
                        .push(Verdict::within(format!("m{m}_exact"), p, exact, t.se_multiplier * se + 1e-12));
                }
                Err(e) => rep.notes.push(format!("m={m}: exact oracle skipped ({e})")),
            }
        }
        rep.table.push([m as f64, p]);
        rep.push_records(&records)?;
    }
    Ok(rep)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct ContainmentRecord {
    chunk: u64,
    samples: u64,
    attempts: u64,
    contained: u64,
    deg_zero: u64,
}

/// Containment frequency of the greedy `k`-edge system `K` and the
/// degree-zero frequency of vertex 1 over uniform samples from `S(n,r,ell;m)`.
pub fn run_containment_validation(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let params = cfg.params;
    let m = cfg.m.unwrap_or(0);
    let k_edges = greedy_system(&params, cfg.k)?;
    UniformSystemSampler::new(params, m)?;
    let records = par_indexed(cfg.threads, cfg.samples.div_ceil(CHUNK), |i| {
        let (_, size) = chunks(cfg.samples)[i as usize];
        let mut sampler = UniformSystemSampler::new(params, m).expect("checked above");
        let mut rng = trial_rng(cfg.seed, i);
        let (mut contained, mut deg_zero) = (0, 0);
        for _ in 0..size {
            let edges = sampler.sample_edges(&mut rng);
            if k_edges.iter().all(|e| edges.contains(e)) {
                contained += 1;
            }
            if edges.iter().all(|e| !e.contains(1)) {
                deg_zero += 1;
            }
        }
        ContainmentRecord {
            chunk: i,
            samples: size,
            attempts: sampler.attempts(),
            contained,
            deg_zero,
        }
    })?;
    let s = cfg.samples;
    let contained = records.iter().map(|r| r.contained).sum::<u64>() as f64 / s as f64;
    let deg_zero = records.iter().map(|r| r.deg_zero).sum::<u64>() as f64 / s as f64;
    let (se_c, se_d) = (proportion_se(contained, s), proportion_se(deg_zero, s));
    let pred_c = log_containment_asymptotic(&params, m, cfg.k);
    let pred_d = log_deg_zero_asymptotic(&params, m, 1);
    let t = &cfg.tolerances;

    let mut rep = ExperimentReport::new(cfg);
    rep.set("m", m as f64);
    rep.set("k", cfg.k as f64);
    rep.set("containment_empirical", contained);
    rep.set("containment_se", se_c);
    rep.set("containment_predicted", pred_c.to_f64());
    rep.set("containment_dropped", pred_c.dropped);
    rep.set("deg_zero_empirical", deg_zero);
    rep.set("deg_zero_se", se_d);
    rep.set("deg_zero_predicted", pred_d.to_f64());
    rep.set("deg_zero_dropped", pred_d.dropped);
    let attempts: u64 = records.iter().map(|r| r.attempts).sum();
    rep.set("sampler_acceptance", s as f64 / attempts as f64);
    rep.verdicts.push(Verdict::within(
        "containment_predicted",
        contained,
        pred_c.to_f64(),
        mc_tolerance(t, se_c, pred_c.to_f64(), pred_c.dropped),
    ));
    rep.verdicts.push(Verdict::within(
        "deg_zero_predicted",
        deg_zero,
        pred_d.to_f64(),
        mc_tolerance(t, se_d, pred_d.to_f64(), pred_d.dropped),
    ));
    if params.total_rsets_u64().is_some_and(|n| n <= crate::exact::MAX_RSETS)
        && count_systems_budgeted(&params, m, ORACLE_NODE_LIMIT).is_ok()
    {
        let exact_c = ratio_f64(&exact_containment_prob(&params, m, &k_edges)?);
        let exact_d = ratio_f64(&exact_deg_zero_prob(&params, m, 1)?);
        rep.set("containment_exact", exact_c);
        rep.set("deg_zero_exact", exact_d);
        rep.verdicts.push(Verdict::within(
            "containment_exact",
            contained,
            exact_c,
            t.se_multiplier * se_c + 1e-12,
        ));
        rep.verdicts
            .push(Verdict::within("deg_zero_exact", deg_zero, exact_d, t.se_multiplier * se_d + 1e-12));
    } else {
        rep.notes.push("exact oracle skipped: instance too large".into());
    }
    rep.push_records(&records)?;
    Ok(rep)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct ProbeRecord {
    trial: u64,
    seed: u64,
    /// Index into the lexicographic list of systems; `None` when the process
    /// saturated below `m` edges.
    category: Option<u64>,
}

/// Distribution of the process stage at `m` over `S(n,r,ell;m)`. Reports a
/// chi-square statistic against the uniform law without a verdict.
pub fn run_uniformity_probe(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let params = cfg.params;
    let m = cfg.m.unwrap_or(0);
    count_systems_budgeted(&params, m, ORACLE_NODE_LIMIT)?;
    let systems = enumerate_systems(&params, m)?;
    let index: HashMap<Vec<RSet>, u64> = systems.into_iter().zip(0u64..).collect();
    let records = par_indexed(cfg.threads, cfg.trials, |i| {
        let seed = trial_seed(cfg.seed, i);
        let category = run_process(params, seed, StopRule::AtEdgeCount(m)).ok().and_then(|t| {
            let mut edges = t.accepted;
            edges.sort();
            index.get(&edges).copied()
        });
        ProbeRecord {
            trial: i,
            seed,
            category,
        }
    })?;
    let mut counts = vec![0u64; index.len()];
    for r in &records {
        if let Some(c) = r.category {
            counts[c as usize] += 1;
        }
    }
    let chi = chi_square_uniformity(&counts, index.len())?;
    let mut rep = ExperimentReport::new(cfg);
    rep.set("categories", index.len() as f64);
    rep.set("unreached", records.iter().filter(|r| r.category.is_none()).count() as f64);
    rep.set("chi_square", chi.statistic);
    rep.set("dof", chi.dof as f64);
    rep.set("p_value", chi.p_value);
    rep.set("groups", chi.groups as f64);
    rep.notes.push("uniformity of the process stage is an open question; no verdict".into());
    rep.table_columns = ["category".into(), "count".into()];
    rep.table = counts.iter().enumerate().map(|(i, &c)| [i as f64, c as f64]).collect();
    rep.push_records(&records)?;
    Ok(rep)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct CensusRecord {
    kind: String,
    index: u64,
    samples: Option<u64>,
    in_class: Option<u64>,
    t: Option<u64>,
    forward_exact: Option<String>,
    forward_predicted: Option<f64>,
    forward_ratio: Option<f64>,
    reverse_exact: Option<String>,
    reverse_predicted: Option<f64>,
    error: Option<String>,
}

impl CensusRecord {
    fn blank(kind: &str, index: u64) -> Self {
        CensusRecord {
            kind: kind.into(),
            index,
            samples: None,
            in_class: None,
            t: None,
            forward_exact: None,
            forward_predicted: None,
            forward_ratio: None,
            reverse_exact: None,
            reverse_predicted: None,
            error: None,
        }
    }
}

fn census_instance(params: Params, m: u64, seed: u64, index: u64) -> Result<(GeneralGraph, u64)> {
    let mut rng = trial_rng(trial_seed(seed, u64::MAX), index);
    for _ in 0..INSTANCE_ATTEMPTS {
        let g = sample_uniform_hypergraph(params, m, &mut rng)?;
        if let Some(t) = classify(&g).class().filter(|&t| t >= 1) {
            return Ok((g, t as u64));
        }
    }
    Err(Error::Infeasible(format!(
        "no instance with a cluster in {INSTANCE_ATTEMPTS} draws"
    )))
}

/// Class coverage of uniform `H_r(n,m)` over `samples` draws, plus exact
/// switching counts on `trials` random instances with at least one cluster.
pub fn run_switching_census(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let params = cfg.params;
    let m = cfg.m.unwrap_or(0);
    let (n, ell) = (params.n() as f64, params.ell() as i32);
    let t = &cfg.tolerances;
    let coverage_records = par_indexed(cfg.threads, cfg.samples.div_ceil(CHUNK), |i| {
        let (_, size) = chunks(cfg.samples)[i as usize];
        let mut rng = trial_rng(cfg.seed, i);
        let mut rec = CensusRecord::blank("coverage", i);
        let mut hits = 0;
        for _ in 0..size {
            match sample_uniform_hypergraph(params, m, &mut rng) {
                Ok(g) => hits += classify(&g).class().is_some() as u64,
                Err(e) => {
                    rec.error = Some(e.to_string());
                    break;
                }
            }
        }
        rec.samples = Some(size);
        rec.in_class = Some(hits);
        rec
    })?;
    if let Some(e) = coverage_records.iter().find_map(|r| r.error.clone()) {
        return Err(Error::Domain(e));
    }
    let instance_records = par_indexed(cfg.threads, cfg.trials, |i| {
        let mut rec = CensusRecord::blank("instance", i);
        let outcome = census_instance(params, m, cfg.seed, i).and_then(|(g, class)| {
            rec.t = Some(class);
            let fwd = count_forward_switchings(&g)?;
            rec.forward_exact = Some(fwd.exact.to_string());
            rec.forward_predicted = Some(fwd.predicted);
            rec.forward_ratio = Some(fwd.ratio());
            let rev = count_reverse_switchings(&g)?;
            rec.reverse_exact = Some(rev.exact.to_string());
            rec.reverse_predicted = Some(rev.predicted);
            Ok(())
        });
        if let Err(e) = outcome {
            rec.error = Some(e.to_string());
        }
        rec
    })?;

    let mut rep = ExperimentReport::new(cfg);
    if cfg.samples > 0 {
        let hits: u64 = coverage_records.iter().filter_map(|r| r.in_class).sum();
        let coverage = hits as f64 / cfg.samples as f64;
        let bound = 1.0 - t.dropped_multiplier * (m as f64).powi(2) / n.powi(ell + 1);
        rep.set("coverage", coverage);
        rep.set("coverage_se", proportion_se(coverage, cfg.samples));
        rep.verdicts.push(Verdict::at_least("coverage", coverage, bound));
    }
    let ratios: Vec<f64> = instance_records.iter().filter_map(|r| r.forward_ratio).collect();
    let errors = instance_records.iter().filter(|r| r.error.is_some()).count();
    rep.set("instances", ratios.len() as f64);
    rep.set("instance_errors", errors as f64);
    if !ratios.is_empty() {
        let worst = ratios.iter().map(|x| (x - 1.0).abs()).fold(0.0, f64::max);
        rep.set("forward_ratio_min", ratios.iter().copied().fold(f64::INFINITY, f64::min));
        rep.set("forward_ratio_max", ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        rep.verdicts.push(Verdict::at_most(
            "forward_ratio_deviation",
            worst,
            t.dropped_multiplier * m as f64 / n.powi(ell),
        ));
    }
    if errors > 0 {
        rep.notes.push(format!("{errors} instances failed; see records"));
    }
    if params.n() <= 8 && params.total_rsets_u64().is_some_and(|x| x <= 64) && m <= 3 {
        for s in 1..=(m / 2) as usize {
            let (fwd, rev) = double_counting_sums(&params, m, s)?;
            rep.set(format!("sum_forward_t{s}"), fwd as f64);
            rep.set(format!("sum_reverse_t{s}"), rev as f64);
            let diff = fwd.abs_diff(rev);
            rep.verdicts.push(Verdict::at_most(format!("double_counting_t{s}"), diff as f64, 0.0));
        }
    }
    rep.push_records(&coverage_records)?;
    rep.push_records(&instance_records)?;
    Ok(rep)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct GraphRecord {
    edges: u64,
    partial_steiner: bool,
    class: Option<u64>,
    label: String,
    link_pairs: u64,
    forward_exact: Option<String>,
    forward_predicted: Option<f64>,
    reverse_exact: Option<String>,
    reverse_predicted: Option<f64>,
    error: Option<String>,
}

/// Class label, cluster census and exact switching counts of a single graph.
pub fn run_graph_census(cfg: &ExperimentConfig, g: &GeneralGraph) -> Result<ExperimentReport> {
    if *g.params() != cfg.params {
        return Err(Error::Usage(format!(
            "graph parameters {} differ from the configuration {}",
            g.params(),
            cfg.params
        )));
    }
    let start = Instant::now();
    let label = classify(g);
    let mut rec = GraphRecord {
        edges: g.edges().len() as u64,
        partial_steiner: g.is_partial_steiner(),
        class: label.class().map(|t| t as u64),
        label: format!("{label:?}"),
        link_pairs: crate::clusters::cluster_census(g).link_pairs.len() as u64,
        forward_exact: None,
        forward_predicted: None,
        reverse_exact: None,
        reverse_predicted: None,
        error: None,
    };
    if rec.class.is_some() {
        let counts = count_forward_switchings(g).and_then(|f| Ok((f, count_reverse_switchings(g)?)));
        match counts {
            Ok((f, r)) => {
                rec.forward_exact = Some(f.exact.to_string());
                rec.forward_predicted = Some(f.predicted);
                rec.reverse_exact = Some(r.exact.to_string());
                rec.reverse_predicted = Some(r.predicted);
            }
            Err(e) => rec.error = Some(e.to_string()),
        }
    }
    let mut rep = ExperimentReport::new(cfg);
    rep.set("edges", rec.edges as f64);
    rep.set("link_pairs", rec.link_pairs as f64);
    if let Some(t) = rec.class {
        rep.set("class", t as f64);
    }
    rep.notes.push(format!("classification: {}", rec.label));
    rep.push_records(&[rec])?;
    rep.wall_clock_secs = start.elapsed().as_secs_f64();
    Ok(rep)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct SystemRecord {
    index: u64,
    edges: Vec<Vec<u32>>,
}

/// Exact `|S(n,r,ell;m)|`; lists the systems when there are at most `samples`.
pub fn run_enumeration(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let params = cfg.params;
    let m = cfg.m.unwrap_or(0);
    let count = count_systems_budgeted(&params, m, crate::exact::NODE_BUDGET)?;
    let mut rep = ExperimentReport::new(cfg);
    rep.set("count", count.to_f64().unwrap_or(f64::INFINITY));
    rep.notes.push(format!("|S| = {count}"));
    if count <= cfg.samples.into() {
        let systems = enumerate_systems(&params, m)?;
        let records: Vec<SystemRecord> = systems
            .iter()
            .zip(0u64..)
            .map(|(s, index)| SystemRecord {
                index,
                edges: s.iter().map(|e| e.vertices().to_vec()).collect(),
            })
            .collect();
        rep.push_records(&records)?;
    } else {
        rep.notes.push(format!("listing suppressed: more than {} systems", cfg.samples));
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(kind: ExperimentKind, n: u32, r: u32, ell: u32) -> ExperimentConfig {
        ExperimentConfig::new(kind, Params::new(n, r, ell).unwrap())
    }

    #[test]
    fn trivial_hitting_time() {
        let mut c = cfg(ExperimentKind::HittingTimes, 3, 3, 2);
        c.trials = 20;
        let rep = run_experiment(&c).unwrap();
        assert_eq!(rep.aggregate("fraction_equal"), Some(1.0));
        for r in &rep.records {
            assert_eq!(r["tau_o"], 1);
            assert_eq!(r["tau_c"], 1);
        }
    }

    #[test]
    fn hitting_records_are_ordered() {
        let mut c = cfg(ExperimentKind::HittingTimes, 60, 3, 2);
        c.trials = 30;
        let rep = run_experiment(&c).unwrap();
        for r in &rep.records {
            if let (Some(o), Some(cc)) = (r["tau_o"].as_u64(), r["tau_c"].as_u64()) {
                assert!(o <= cc);
            }
        }
    }

    #[test]
    fn large_c_gives_no_isolated_vertices() {
        let mut c = cfg(ExperimentKind::IsolatedDist, 300, 3, 2);
        c.c = 10.0;
        c.trials = 50;
        let rep = run_experiment(&c).unwrap();
        assert!(rep.aggregate("mean").unwrap() <= 0.02);
    }

    #[test]
    fn count_at_m1_is_certain() {
        let mut c = cfg(ExperimentKind::ValidateCount, 9, 3, 2);
        c.m_grid = vec![1];
        c.samples = 1000;
        let rep = run_experiment(&c).unwrap();
        assert_eq!(rep.aggregate("m1_empirical"), Some(1.0));
        assert_eq!(rep.aggregate("m1_exact"), Some(1.0));
        assert!(rep.all_passed());
    }

    #[test]
    fn count_below_floor_is_skipped() {
        let mut c = cfg(ExperimentKind::ValidateCount, 20, 3, 2);
        c.m_grid = vec![30];
        c.samples = 100;
        let rep = run_experiment(&c).unwrap();
        assert!(rep.aggregates.is_empty());
        assert!(rep.notes[0].contains("skipped"));
    }

    #[test]
    fn empty_k_is_always_contained() {
        let mut c = cfg(ExperimentKind::ValidateContainment, 7, 3, 2);
        c.m = Some(3);
        c.k = 0;
        c.samples = 2000;
        let rep = run_experiment(&c).unwrap();
        assert_eq!(rep.aggregate("containment_empirical"), Some(1.0));
        assert_eq!(rep.aggregate("containment_exact"), Some(1.0));
    }

    #[test]
    fn probe_reports_without_verdict() {
        let mut c = cfg(ExperimentKind::UniformityProbe, 5, 3, 2);
        c.m = Some(2);
        c.trials = 3000;
        let rep = run_experiment(&c).unwrap();
        assert_eq!(rep.aggregate("categories"), Some(15.0));
        assert!(rep.verdicts.is_empty());
        assert!(rep.aggregate("p_value").unwrap() > 1e-4);
    }

    #[test]
    fn census_double_counting() {
        let mut c = cfg(ExperimentKind::SwitchingCensus, 7, 3, 2);
        c.m = Some(3);
        c.trials = 5;
        c.samples = 1000;
        let rep = run_experiment(&c).unwrap();
        assert!(rep.verdict("double_counting_t1").unwrap().passed);
        assert_eq!(rep.aggregate("instances"), Some(5.0));
    }

    #[test]
    fn enumerate_fano_size() {
        let mut c = cfg(ExperimentKind::Enumerate, 5, 3, 2);
        c.m = Some(2);
        let rep = run_experiment(&c).unwrap();
        assert_eq!(rep.aggregate("count"), Some(15.0));
        assert_eq!(rep.records.len(), 15);
    }

    #[test]
    fn records_independent_of_threads() {
        let mut c = cfg(ExperimentKind::ValidateContainment, 9, 3, 2);
        c.m = Some(3);
        c.samples = 25_000;
        let base = run_experiment(&c).unwrap().records_jsonl();
        for threads in [2, 5] {
            c.threads = threads;
            assert_eq!(run_experiment(&c).unwrap().records_jsonl(), base);
        }
    }

    #[test]
    fn graph_census_of_one_cluster() {
        let params = Params::new(9, 3, 2).unwrap();
        let rs = |v: &[u32]| RSet::new(v.iter().copied()).unwrap();
        let g = GeneralGraph::new(params, vec![rs(&[1, 2, 3]), rs(&[1, 2, 4]), rs(&[5, 6, 7])]).unwrap();
        let c = cfg(ExperimentKind::SwitchingCensus, 9, 3, 2);
        let rep = run_graph_census(&c, &g).unwrap();
        assert_eq!(rep.aggregate("class"), Some(1.0));
        assert_eq!(rep.records[0]["partial_steiner"], false);
        assert!(rep.records[0]["forward_exact"].is_string());
        let other = cfg(ExperimentKind::SwitchingCensus, 10, 3, 2);
        assert!(run_graph_census(&other, &g).is_err());
    }

    #[test]
    fn greedy_k_is_partial() {
        let k = greedy_system(&Params::new(9, 3, 2).unwrap(), 4).unwrap();
        assert_eq!(k[0].vertices(), &[1, 2, 3]);
        assert_eq!(k[1].vertices(), &[1, 4, 5]);
        assert!(GeneralGraph::new(Params::new(9, 3, 2).unwrap(), k).unwrap().is_partial_steiner());
    }
}
