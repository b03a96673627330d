//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::fs;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{brute_force_max, ks_distance, random_small_sample};
use lcmix::em::run_em;
use lcmix::io::EmExport;
use lcmix::logconcave::fit_weighted_logconcave;
use lcmix::simulation::{model_catalog, run_scenario, ScenarioSpec};
use lcmix::{
    check_identifiability, EmConfig, FitOptions, KnownComponentSpec, LogConcaveFit, MixtureModelSpec, RngSeed,
    Verdict, WeightedSample,
};
use clap::Parser;
use lcmix_cli::{run, Cli};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use tempfile::TempDir;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome { pass, detail: detail.into() }
    }
}

fn fit(x: &[f64], w: &[f64]) -> LogConcaveFit {
    fit_weighted_logconcave(&WeightedSample::new(x, w).unwrap(), &FitOptions::default()).unwrap()
}

fn lcmix(args: &[&str]) -> Result<(), String> {
    let cli = Cli::try_parse_from(std::iter::once("lcmix").chain(args.iter().copied())).map_err(|e| e.to_string())?;
    run(cli).map_err(|e| e.to_string())
}

fn within(elapsed: Duration, limit_secs: u64) -> bool {
    elapsed <= Duration::from_secs(limit_secs)
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut worst_obj: f64 = 0.0;
    let mut worst_two: f64 = 0.0;
    for r in 0..50u64 {
        let m = 2 + (r % 3) as usize;
        let (x, w) = random_small_sample(RngSeed(2024).child(r), m);
        let f = fit(&x, &w);
        let (best, _) = brute_force_max(&x, &w);
        worst_obj = worst_obj.max((f.objective - best).abs());
        if m == 2 {
            let target = -(x[1] - x[0]).ln();
            for &k in &x {
                worst_two = worst_two.max((f.log_density(k) - target).abs());
            }
        }
    }
    let elapsed = start.elapsed();
    Outcome::new(
        worst_obj <= 1e-3 && worst_two <= 1e-8 && within(elapsed, 60),
        format!(
            "max |objective - oracle| = {worst_obj:.2e}, max two-point |phi + ln(x2 - x1)| = {worst_two:.2e}, {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn random_fit_input(rng: &mut impl Rng) -> (Vec<f64>, Vec<f64>) {
    let m = rng.random_range(2..=200);
    let scale: f64 = rng.random_range(0.1..10.0);
    let x: Vec<f64> = (0..m).map(|_| {
        let z: f64 = StandardNormal.sample(rng);
        scale * z
    }).collect();
    let w: Vec<f64> = (0..m).map(|_| rng.random_range(0.01..1.0)).collect();
    (x, w)
}

fn normalization_and_concavity() -> Outcome {
    let start = Instant::now();
    let mut rng = RngSeed(7).rng();
    let mut worst_int: f64 = 0.0;
    let mut worst_slope: f64 = 0.0;
    for _ in 0..200 {
        let (x, w) = random_fit_input(&mut rng);
        let f = fit(&x, &w);
        worst_int = worst_int.max((f.integral() - 1.0).abs());
        for s in f.slopes().windows(2) {
            worst_slope = worst_slope.max(s[1] - s[0]);
        }
    }
    let elapsed = start.elapsed();
    Outcome::new(
        worst_int <= 1e-6 && worst_slope <= 1e-9 && within(elapsed, 60),
        format!(
            "max |integral - 1| = {worst_int:.2e}, max slope increase = {worst_slope:.2e}, {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn affine_equivariance() -> Outcome {
    let mut rng = RngSeed(11).rng();
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let (x, w) = random_fit_input(&mut rng);
        let f = fit(&x, &w);
        for _ in 0..10 {
            let a: f64 = rng.random_range(0.01..100.0);
            let b: f64 = rng.random_range(-50.0..50.0);
            let y: Vec<f64> = x.iter().map(|v| a * v + b).collect();
            let g = fit(&y, &w);
            for &k in &f.knots {
                worst = worst.max((g.log_density(a * k + b) - (f.log_density(k) - a.ln())).abs());
            }
        }
    }
    Outcome::new(worst <= 1e-6, format!("max knot discrepancy = {worst:.2e}"))
}

fn em_monotonicity() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let ps = [0.2, 0.35, 0.5, 0.65, 0.8];
    for run in 0..100u64 {
        let model = 1 + (run % 6) as u8;
        let p = ps[(run / 6) as usize % ps.len()];
        let m = model_catalog(model).unwrap();
        let spec = MixtureModelSpec::new(p, m.f0.clone(), m.f).unwrap();
        let data = spec.sample(300, RngSeed(500).child(run));
        let res = run_em(&data.values, &m.f0, &EmConfig::default()).unwrap();
        for s in res.loglik_trace.windows(2) {
            worst = worst.max(s[0] - s[1]);
        }
    }
    let elapsed = start.elapsed();
    Outcome::new(
        worst <= 1e-8 && within(elapsed, 300),
        format!("largest decrease = {worst:.2e}, {:.1}s", elapsed.as_secs_f64()),
    )
}

fn model_one_table() -> Outcome {
    let start = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for (p, cla) in [(0.2, 0.0960), (0.5, 0.1094), (0.8, 0.0645)] {
        let s = run_scenario(&ScenarioSpec::new(1, p, 1000, 50, RngSeed(1))).unwrap();
        let ok = s.bias_p.abs() <= 0.03 && s.mse_p <= 0.002 && (s.mean_cla_error - cla).abs() <= 0.02;
        pass &= ok;
        parts.push(format!(
            "p={p}: bias {:.4} mse {:.4} cla {:.4} failed reps {}",
            s.bias_p, s.mse_p, s.mean_cla_error, s.failures
        ));
    }
    let elapsed = start.elapsed();
    parts.push(format!("{:.1}s", elapsed.as_secs_f64()));
    Outcome::new(pass && within(elapsed, 900), parts.join("; "))
}

fn model_three_table() -> Outcome {
    let s = run_scenario(&ScenarioSpec::new(3, 0.2, 1000, 50, RngSeed(1))).unwrap();
    Outcome::new(
        s.bias_p.abs() <= 0.03 && (0.05..=0.09).contains(&s.mean_cla_error),
        format!("bias {:.4}, cla {:.4}, failed reps {}", s.bias_p, s.mean_cla_error, s.failures),
    )
}

fn mu_recovery() -> Outcome {
    let s = run_scenario(&ScenarioSpec::new(4, 0.5, 1000, 50, RngSeed(1))).unwrap();
    Outcome::new(
        s.bias_mu.abs() <= 0.1,
        format!("mean mu_hat - 5 = {:.4}, failed reps {}", s.bias_mu, s.failures),
    )
}

fn identifiability_reports() -> Outcome {
    let t = check_identifiability(&KnownComponentSpec::StudentT { nu: 5.0 }, None).verdict;

    let exp_data = KnownComponentSpec::Exponential { lambda: 3.0 }.sample(500, RngSeed(3));
    let exp_fit = fit(&exp_data, &vec![1.0; exp_data.len()]);
    let last_slope = *exp_fit.slopes().last().unwrap();
    let e = check_identifiability(&KnownComponentSpec::Exponential { lambda: 1.0 }, Some(&exp_fit)).verdict;

    let inner: Vec<f64> = (0..100).map(|i| 0.2 + 0.4 * i as f64 / 99.0).collect();
    let u_fit = fit(&inner, &vec![1.0; inner.len()]);
    let u = check_identifiability(&KnownComponentSpec::Uniform { a: 0.0, b: 1.0 }, Some(&u_fit)).verdict;

    Outcome::new(
        t == Verdict::Identifiable
            && last_slope < -1.0
            && e == Verdict::ConditionHolds
            && u == Verdict::ConditionHolds,
        format!("t(5): {t}; exponential(1), last slope {last_slope:.3}: {e}; uniform(0,1) on [0.2,0.6]: {u}"),
    )
}

fn tstats_pipeline() -> Outcome {
    let dir = TempDir::new().unwrap();
    let matrix = dir.path().join("matrix.csv");
    let stats = dir.path().join("tstats.csv");
    let export = dir.path().join("fit.json");
    let mut rng = RngSeed(9).rng();
    let mut text = String::from("gene");
    for j in 0..20 {
        text.push_str(&format!(",s{j}"));
    }
    text.push('\n');
    for g in 0..200 {
        text.push_str(&format!("g{g}"));
        for _ in 0..20 {
            let v: f64 = StandardNormal.sample(&mut rng);
            text.push_str(&format!(",{v}"));
        }
        text.push('\n');
    }
    fs::write(&matrix, text).unwrap();

    let out = lcmix(&[
        "tstats",
        "-i",
        matrix.to_str().unwrap(),
        "--group1-cols",
        "10",
        "-o",
        stats.to_str().unwrap(),
    ]);
    if let Err(e) = out {
        return Outcome::new(false, format!("tstats failed: {e}"));
    }
    let mut rdr = csv::Reader::from_path(&stats).unwrap();
    let pvals: Vec<f64> = rdr.records().map(|r| r.unwrap()[2].parse().unwrap()).collect();
    let n = pvals.len() as f64;
    let d = ks_distance(&pvals, |x| x.clamp(0.0, 1.0));
    let critical = 1.628 / (n.sqrt() + 0.12 + 0.11 / n.sqrt());

    let out = lcmix(&[
        "fit",
        "-i",
        stats.to_str().unwrap(),
        "--column",
        "p_value",
        "--f0",
        "uniform:0,1",
        "-o",
        export.to_str().unwrap(),
    ]);
    if let Err(e) = out {
        return Outcome::new(false, format!("fit failed: {e}"));
    }
    let res: EmExport = serde_json::from_str(&fs::read_to_string(&export).unwrap()).unwrap();
    Outcome::new(
        d < critical && res.p_hat <= 0.1,
        format!("KS D = {d:.4} (critical {critical:.4}), p_hat = {:.4}", res.p_hat),
    )
}

fn determinism() -> Outcome {
    let dir = TempDir::new().unwrap();
    let run = |threads: &str, name: &str| {
        let path = dir.path().join(name);
        lcmix(&[
            "simulate", "--model", "2", "--p", "0.5", "--n", "200", "--reps", "12", "--seed", "42", "--threads",
            threads, "-o", path.to_str().unwrap(),
        ])
        .unwrap();
        fs::read(path).unwrap()
    };
    let a = run("4", "a.csv");
    let b = run("4", "b.csv");
    let c = run("1", "c.csv");
    Outcome::new(
        !a.is_empty() && a == b && a == c,
        format!("repeat run identical: {}, 1 vs 4 threads identical: {}", a == b, a == c),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("log-concave oracle equivalence", oracle_equivalence),
        ("normalization and concavity", normalization_and_concavity),
        ("affine equivariance", affine_equivariance),
        ("EM monotonicity", em_monotonicity),
        ("model 1 simulation, n=1000", model_one_table),
        ("model 3 simulation, p=0.2, n=1000", model_three_table),
        ("mu recovery, model 4", mu_recovery),
        ("identifiability reports", identifiability_reports),
        ("tstats pipeline", tstats_pipeline),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!("{} {:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
