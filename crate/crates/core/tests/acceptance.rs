//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_rational::BigRational;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::Rng;

use steiner_core::combinatorics::{all_rsets, binomial, trial_rng};
use steiner_core::exact::{count_systems, exact_containment_prob, exact_deg_zero_prob, UniformSystemSampler};
use steiner_core::experiments::{mc_tolerance, run_experiment, ExperimentConfig, ExperimentKind, ExperimentReport, Tolerances};
use steiner_core::formulas::{
    pr_predicted, quadratic_term_general_exact, quadratic_term_linear_exact, summation_bounds, SummationInput,
};
use steiner_core::switching::{count_pr, double_counting_sums, exhaustive_class_counts};
use steiner_core::{GeneralGraph, Params, RSet};

const SEED: u64 = 1;

struct Outcome {
    passed: bool,
    detail: String,
}

fn p(n: u32, r: u32, ell: u32) -> Params {
    Params::new(n, r, ell).unwrap()
}

fn rs(v: &[u32]) -> RSet {
    RSet::new(v.iter().copied()).unwrap()
}

fn threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn experiment(kind: ExperimentKind, params: Params, edit: impl FnOnce(&mut ExperimentConfig)) -> ExperimentReport {
    let mut cfg = ExperimentConfig::new(kind, params);
    cfg.seed = SEED;
    cfg.threads = threads();
    edit(&mut cfg);
    run_experiment(&cfg).unwrap()
}

fn agg(rep: &ExperimentReport, key: &str) -> f64 {
    rep.aggregate(key).unwrap_or_else(|| panic!("missing aggregate {key}"))
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut out = f();
    let spent = start.elapsed();
    out.detail.push_str(&format!("; {:.1}s", spent.as_secs_f64()));
    if let Some(limit) = limit {
        if spent > limit {
            out.passed = false;
            out.detail.push_str(&format!(" exceeds {}s", limit.as_secs()));
        }
    }
    out
}

/// Ordered sequences of distinct pairwise-compatible r-sets.
fn ordered_count(params: Params, m: usize, current: &mut Vec<RSet>, pool: &[RSet]) -> u64 {
    if current.len() == m {
        return 1;
    }
    let ell = params.ell() as usize;
    let mut total = 0;
    for e in pool {
        if current.iter().any(|f| f == e || f.intersection_size(e) >= ell) {
            continue;
        }
        current.push(e.clone());
        total += ordered_count(params, m, current, pool);
        current.pop();
    }
    total
}

fn exact_oracle_fidelity() -> Outcome {
    let mut bad = Vec::new();
    if count_systems(&p(5, 3, 2), 2).unwrap() != BigUint::from(15u32) {
        bad.push("|S(5,3,2;2)| != 15".to_string());
    }
    for r in 3..=5u32 {
        for ell in 2..r {
            for n in r..=12 {
                let params = p(n, r, ell);
                if count_systems(&params, 1).unwrap() != binomial(n as u64, r as u64) {
                    bad.push(format!("|S({n},{r},{ell};1)| != C(n,r)"));
                }
            }
        }
    }
    for (n, r, ell) in [(4, 3, 2), (5, 3, 2), (6, 3, 2), (6, 4, 2), (6, 4, 3), (6, 5, 3)] {
        let params = p(n, r, ell);
        let pool = all_rsets(n, r);
        for m in 0..=3usize {
            let ordered = ordered_count(params, m, &mut Vec::new(), &pool);
            let fact: u64 = (1..=m as u64).product();
            if count_systems(&params, m as u64).unwrap() * BigUint::from(fact) != BigUint::from(ordered) {
                bad.push(format!("ordered count mismatch at ({n},{r},{ell}), m={m}"));
            }
        }
    }
    Outcome {
        passed: bad.is_empty(),
        detail: if bad.is_empty() {
            "all counts agree".into()
        } else {
            bad.join(", ")
        },
    }
}

fn count_formula_desk_scale() -> Outcome {
    let rep = experiment(ExperimentKind::ValidateCount, p(40, 3, 2), |c| {
        c.m_grid = vec![13];
        c.samples = 100_000;
    });
    let emp = agg(&rep, "m13_empirical");
    let target = (-36.0 * 156.0 / 6400.0f64).exp();
    let rel = (emp - target).abs() / target;
    Outcome {
        passed: rel <= 0.05,
        detail: format!("empirical {emp:.5} vs {target:.5}, relative error {rel:.4} (<= 0.05)"),
    }
}

fn branch_identity() -> Outcome {
    let mut checked = 0;
    let mut bad = Vec::new();
    for n in [5u64, 9, 40, 1000, 123_457] {
        for r in 3u64..=8 {
            for m in [0u64, 1, 2, 13, 500, 99_999] {
                checked += 1;
                if quadratic_term_general_exact(n, r, 2, m) != quadratic_term_linear_exact(n, r, m) {
                    bad.push(format!("(n={n}, r={r}, m={m})"));
                }
            }
        }
    }
    Outcome {
        passed: bad.is_empty(),
        detail: format!("{checked} exact comparisons, {} mismatches {}", bad.len(), bad.join(" ")),
    }
}

fn containment() -> Outcome {
    let small = experiment(ExperimentKind::ValidateContainment, p(5, 3, 2), |c| {
        c.m = Some(2);
        c.k = 1;
        c.samples = 100_000;
    });
    let emp_small = agg(&small, "containment_empirical");
    let exact = exact_containment_prob(&p(5, 3, 2), 2, &[rs(&[1, 2, 3])]).unwrap();
    let exact_ok = exact == BigRational::new(1.into(), 5.into());
    let small_ok = (emp_small - 0.2).abs() <= 0.004;

    let big = experiment(ExperimentKind::ValidateContainment, p(30, 3, 2), |c| {
        c.m = Some(20);
        c.k = 1;
        c.samples = 1_000_000;
    });
    let emp = agg(&big, "containment_empirical");
    let se = agg(&big, "containment_se");
    let pred = agg(&big, "containment_predicted");
    let big_ok = (emp - pred).abs() <= 3.0 * se;
    Outcome {
        passed: exact_ok && small_ok && big_ok,
        detail: format!(
            "(5,3,2) empirical {emp_small:.5} (0.2 +- 0.004), exact {exact}; (30,3,2) empirical {emp:.6} vs {pred:.6}, |diff| {:.2e} <= 3se {:.2e}",
            (emp - pred).abs(),
            3.0 * se
        ),
    }
}

fn degree_zero() -> Outcome {
    let exact = exact_deg_zero_prob(&p(5, 3, 2), 1, 1).unwrap();
    let exact_ok = exact == BigRational::new(2.into(), 5.into());
    let rep = experiment(ExperimentKind::ValidateContainment, p(60, 3, 2), |c| {
        c.m = Some(20);
        c.k = 1;
        c.samples = 100_000;
    });
    let emp = agg(&rep, "deg_zero_empirical");
    let se = agg(&rep, "deg_zero_se");
    let pred = (-1.0f64).exp();
    let tol = mc_tolerance(&Tolerances::default(), se, pred, agg(&rep, "deg_zero_dropped"));
    let mc_ok = (emp - pred).abs() <= tol;
    Outcome {
        passed: exact_ok && mc_ok,
        detail: format!(
            "exact {exact} (2/5); empirical {emp:.5} vs exp(-1) = {pred:.5}, |diff| {:.4} <= {tol:.4}",
            (emp - pred).abs()
        ),
    }
}

fn hitting_times() -> Outcome {
    let rep = experiment(ExperimentKind::HittingTimes, p(2000, 3, 2), |c| c.trials = 100);
    let eq = agg(&rep, "fraction_equal");
    let win = agg(&rep, "fraction_in_window");
    Outcome {
        passed: eq >= 0.95 && win >= 0.95,
        detail: format!(
            "fraction tau_o = tau_c {eq:.2} (>= 0.95); fraction tau_c in [{}, {}] {win:.2} (>= 0.95)",
            agg(&rep, "m_l"),
            agg(&rep, "m_r")
        ),
    }
}

fn threshold_trend() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for n in [500u32, 1000, 2000, 4000] {
        let rep = experiment(ExperimentKind::HittingTimes, p(n, 3, 2), |c| c.trials = 50);
        let med = agg(&rep, "median_scaled");
        let bound = 2.0 * (n as f64).ln().ln();
        ok &= med.abs() <= bound;
        parts.push(format!("n={n}: median {med:.3} in +-{bound:.3}"));
    }
    Outcome {
        passed: ok,
        detail: parts.join(", "),
    }
}

fn poisson_limit() -> Outcome {
    let rep = experiment(ExperimentKind::IsolatedDist, p(5000, 3, 2), |c| {
        c.trials = 1000;
        c.c = 0.0;
    });
    let tv = agg(&rep, "tv_distance");
    let mut ok = tv <= 0.05;
    let mut detail = format!("m = {}, TV {tv:.4} (<= 0.05)", agg(&rep, "m"));
    for t in 1..=2 {
        let fm = agg(&rep, &format!("factorial_moment_{t}"));
        let se = agg(&rep, &format!("factorial_moment_{t}_se"));
        ok &= (fm - 1.0).abs() <= 3.0 * se;
        detail.push_str(&format!(", E[X]_{t} = {fm:.3} (1 +- {:.3})", 3.0 * se));
    }
    Outcome { passed: ok, detail }
}

fn replacement_sets() -> Outcome {
    let params = p(6, 3, 2);
    let g = GeneralGraph::new(params, vec![rs(&[1, 2, 3])]).unwrap();
    let example = count_pr(&g, &rs(&[4, 5, 6])).unwrap().exact;
    let params = p(30, 3, 2);
    let (n, m) = (30f64, 15u64);
    let bound = 10.0 * (m * m) as f64 / n.powi(3);
    let big_n = params.total_rsets_f64();
    let pred = pr_predicted(&params, m);
    let mut sampler = UniformSystemSampler::new(params, m).unwrap();
    let mut rng = trial_rng(SEED, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let h = sampler.sample(&mut rng).to_general_graph();
        let e_i = loop {
            let mut v: Vec<u32> = rand::seq::index::sample(&mut rng, 30, 3).into_iter().map(|x| x as u32 + 1).collect();
            v.sort_unstable();
            let e = RSet::new(v).unwrap();
            if !h.contains_edge(&e) {
                break e;
            }
        };
        let exact = count_pr(&h, &e_i).unwrap().exact as f64;
        worst = worst.max((exact - pred).abs() / big_n);
    }
    Outcome {
        passed: example == 9 && worst <= bound,
        detail: format!("example count {example} (9); worst relative deviation {worst:.5} <= {bound:.5}"),
    }
}

fn switching_identity() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for n in 6..=8u32 {
        let params = p(n, 3, 2);
        for m in 2..=3u64 {
            for t in 1..=(m / 2) as usize {
                let (fwd, rev) = double_counting_sums(&params, m, t).unwrap();
                ok &= fwd == rev;
                if fwd != rev {
                    parts.push(format!("sums differ at n={n}, m={m}, t={t}"));
                }
            }
            let classes = exhaustive_class_counts(&params, m).unwrap();
            let s0 = *classes.get(&0).unwrap_or(&0) as f64;
            let s1 = *classes.get(&1).unwrap_or(&0) as f64;
            let pred = (m * (m - 1) / 2) as f64 * 36.0 / (2.0 * (n * n) as f64);
            let ratio = s1 / s0;
            let within = (ratio / pred - 1.0).abs() <= 10.0 / n as f64;
            ok &= within;
            parts.push(format!("n={n} m={m}: {ratio:.4}/{pred:.4}"));
        }
    }
    Outcome {
        passed: ok,
        detail: format!("double counting exact; class ratios {}", parts.join(", ")),
    }
}

fn summation_sandwich() -> Outcome {
    let strategy = (2usize..60, 0.001f64..(1.0 / 3.0), any::<u64>()).prop_map(|(big_n, c_hat, seed)| {
        let mut rng = trial_rng(seed, 0);
        let mut a = Vec::with_capacity(big_n);
        let mut b = Vec::with_capacity(big_n);
        for i in 1..=big_n {
            let ai: f64 = rng.random_range(0.0..=c_hat * big_n as f64);
            let lim = if ai > 0.0 { c_hat / ai } else { 1.0 };
            let hi = if i > 1 { lim.min(1.0 / (i - 1) as f64) } else { lim };
            a.push(ai);
            b.push(rng.random_range(-lim..=hi));
        }
        SummationInput { a, b, c_hat }
    });
    let mut runner = TestRunner::new(Config {
        cases: 10_000,
        failure_persistence: None,
        ..Config::default()
    });
    let result = runner.run(&strategy, |inp| {
        let s = summation_bounds(&inp).unwrap();
        prop_assert!(s.sigma1 <= s.exact_sum * (1.0 + 1e-12));
        prop_assert!(s.exact_sum <= s.sigma2 * (1.0 + 1e-12));
        Ok(())
    });
    Outcome {
        passed: result.is_ok(),
        detail: match result {
            Ok(()) => "10000 random inputs satisfy the sandwich".into(),
            Err(e) => format!("counterexample: {e}"),
        },
    }
}

fn class_coverage() -> Outcome {
    let rep = experiment(ExperimentKind::SwitchingCensus, p(40, 3, 2), |c| {
        c.m = Some(13);
        c.trials = 0;
        c.samples = 100_000;
    });
    let cov = agg(&rep, "coverage");
    let bound = 1.0 - 10.0 * 169.0 / 64_000.0;
    Outcome {
        passed: cov >= bound,
        detail: format!("coverage {cov:.4} (>= {bound:.4}), se {:.4}", agg(&rep, "coverage_se")),
    }
}

fn determinism() -> Outcome {
    let runs: Vec<(ExperimentKind, Params, fn(&mut ExperimentConfig))> = vec![
        (ExperimentKind::Simulate, p(80, 4, 2), |c| c.trials = 40),
        (ExperimentKind::HittingTimes, p(300, 3, 2), |c| c.trials = 40),
        (ExperimentKind::IsolatedDist, p(400, 3, 2), |c| c.trials = 60),
        (ExperimentKind::ValidateCount, p(12, 3, 2), |c| {
            c.m_grid = vec![2, 4];
            c.samples = 35_000;
        }),
        (ExperimentKind::ValidateContainment, p(10, 3, 2), |c| {
            c.m = Some(3);
            c.samples = 35_000;
        }),
        (ExperimentKind::UniformityProbe, p(5, 3, 2), |c| {
            c.m = Some(2);
            c.trials = 2_000;
        }),
        (ExperimentKind::SwitchingCensus, p(12, 3, 2), |c| {
            c.m = Some(4);
            c.trials = 6;
            c.samples = 25_000;
        }),
    ];
    let mut bad = Vec::new();
    for (kind, params, edit) in runs {
        let mut cfg = ExperimentConfig::new(kind, params);
        cfg.seed = SEED;
        edit(&mut cfg);
        let outputs: Vec<String> = [1usize, 4, 8, 1]
            .into_iter()
            .map(|w| {
                cfg.threads = w;
                run_experiment(&cfg).unwrap().records_jsonl()
            })
            .collect();
        if outputs.iter().any(|o| o != &outputs[0]) || outputs[0].is_empty() {
            bad.push(kind.name());
        }
    }
    Outcome {
        passed: bad.is_empty(),
        detail: if bad.is_empty() {
            "7 experiment kinds byte-identical at 1, 4, 8 workers and on re-run".into()
        } else {
            format!("records differ for {}", bad.join(", "))
        },
    }
}

fn main() {
    let criteria: Vec<(&str, Option<u64>, fn() -> Outcome)> = vec![
        ("1 exact oracle fidelity", Some(10), exact_oracle_fidelity),
        ("2 count asymptotics at (40,3,2), m=13", Some(120), count_formula_desk_scale),
        ("3 ell=2 branch identity", None, branch_identity),
        ("4 containment probabilities", Some(300), containment),
        ("5 degree-zero probabilities", None, degree_zero),
        ("6 hitting times at n=2000", Some(600), hitting_times),
        ("7 threshold trend over n", None, threshold_trend),
        ("8 Poisson limit of isolated vertices", Some(900), poisson_limit),
        ("9 replacement-set counts", None, replacement_sets),
        ("10 switching double counting and class ratio", None, switching_identity),
        ("11 summation sandwich", Some(10), summation_sandwich),
        ("12 class coverage at (40,3,2), m=13", None, class_coverage),
        ("13 determinism across workers", None, determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (name, limit, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|p| name.starts_with(&format!("{p} "))) {
            continue;
        }
        ran += 1;
        let out = timed(limit.map(Duration::from_secs), f);
        println!("{} criterion {name}: {}", if out.passed { "PASS" } else { "FAIL" }, out.detail);
        failed += !out.passed as usize;
    }
    println!("acceptance: {} of {ran} criteria passed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
