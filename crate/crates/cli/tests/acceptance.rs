//! Acceptance criteria 1-7. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tdm_cli::{load_config, run, Mode, Overrides};
use tdm_core::detection::term_rates;
use tdm_core::roc::{ks_distance, roc_from_inputs};
use tdm_core::scheduler::{quadratic_value, scenario_quadratic_form};
use tdm_core::synth::{desk_scenario, full_scale_scenario, random_psd, random_scenario};
use tdm_core::*;

/// Hungarian vs enumeration, absolute.
const ASSIGNMENT_TOL: f64 = 1e-12;
/// Relative slack on objective traces.
const TRACE_SLACK: f64 = 1e-9;
/// Relative tolerance for "equals the exhaustive optimum".
const OPTIMUM_TOL: f64 = 1e-9;
const QAP_MIN_HITS: usize = 90;
const KS_MAX: f64 = 0.01;
const MEAN_REL_TOL: f64 = 0.02;
const FULL_SCALE_BUDGET_S: f64 = 300.0;
const IMAG_RATIO_MAX: f64 = 1e-10;
const UNIT_MODULUS_TOL: f64 = 1e-12;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    let mut invalid = 0;
    for l in 2..=6 {
        let perms = permutations(l);
        for _ in 0..1000 {
            let cost = CostMatrix::from_fn(l, |_, _| rng.random_range(-10.0..10.0)).unwrap();
            let a = hungarian_min(&cost).unwrap();
            let brute = perms.iter().map(|p| cost.evaluate(p)).fold(f64::INFINITY, f64::min);
            worst = worst.max((a.objective_value - brute).abs());
            if validate_selection(&assignment_to_matrix(&a, l).unwrap()).is_err() {
                invalid += 1;
            }
        }
    }
    outcome(
        worst <= ASSIGNMENT_TOL && invalid == 0,
        format!("5000 matrices, L = 2..6, max |hungarian - brute force| = {worst:e}, invalid = {invalid}"),
    )
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut monotone = 0;
    let mut converged = 0;
    let mut max_iter_seen = 0;
    for _ in 0..100 {
        let sc = random_scenario(&mut rng, 3, 2, 2, true);
        let form = diagonal_load(&scenario_quadratic_form(&sc, &sc.detection_weights()).unwrap()).unwrap();
        let r = power_iterations(&form, &SelectionMatrix::identity(6), 1e-6, 100).unwrap();
        if r.objective_trace.windows(2).all(|w| w[1] >= w[0] - TRACE_SLACK * w[0].abs()) {
            monotone += 1;
        }
        if r.converged && r.iterations <= 100 {
            converged += 1;
        }
        max_iter_seen = max_iter_seen.max(r.iterations);
    }
    outcome(
        monotone == 100 && converged == 100,
        format!("monotone {monotone}/100, converged {converged}/100, max iterations {max_iter_seen}"),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let dims = Dims::new(2, 2, 4, 1);
    let perms = permutations(4);
    let mut hits = 0;
    let mut exceeded = 0;
    for i in 0..100u64 {
        let form = QuadraticForm::from_matrix(random_psd(&mut rng, 16), dims).unwrap();
        let best = perms
            .iter()
            .map(|p| objective(&form, &SelectionMatrix::from_permutation(p).unwrap()).unwrap())
            .fold(f64::MIN, f64::max);
        let r = optimize_schedule(&form, &ScheduleOptions { restarts: 5, seed: i, ..Default::default() }).unwrap();
        let f = r.final_objective();
        if f > best + OPTIMUM_TOL * best.abs() {
            exceeded += 1;
        }
        if (best - f).abs() <= OPTIMUM_TOL * best.abs() {
            hits += 1;
        }
    }
    outcome(
        hits >= QAP_MIN_HITS && exceeded == 0,
        format!("random Hermitian-PSD S (16x16), 5 restarts: optimum hit {hits}/100 (need >= {QAP_MIN_HITS}), exceeded {exceeded}"),
    )
}

fn criterion_4() -> Outcome {
    let mut details = Vec::new();
    let mut pass = true;
    let mut colored = desk_scenario();
    colored.covariance = tdm_core::covariance::interference_covariance(
        &colored,
        1.0,
        &[tdm_core::covariance::InterferenceSource { position: [-20.0, 60.0], velocity: [5.0, -30.0], inr: 100.0 }],
    )
    .unwrap();
    for (name, sc) in [("desk", desk_scenario()), ("desk+interference", colored)] {
        let j = SelectionMatrix::identity(sc.dims().l);
        let inputs = DetectorInputs::from_scenario(&sc, &j).unwrap();
        let run = roc_from_inputs(&inputs, 100_000, 4, AlphaModel::Fluctuating, 512).unwrap();
        let (rates, _) = term_rates(&inputs, false).unwrap();
        let ks = ks_distance(&run.h0, |t| hypoexp_cdf(&rates, t).unwrap());
        let mean = run.h1.iter().sum::<f64>() / run.h1.len() as f64;
        let exact = mean_h1(&inputs, MeanMode::Exact).unwrap().value;
        let rel = (mean - exact).abs() / exact;
        pass &= ks < KS_MAX && rel < MEAN_REL_TOL;
        details.push(format!("{name}: KS = {ks:.5}, H1 mean rel. error = {rel:.4}"));
    }
    outcome(pass, format!("1e5 trials; {}", details.join("; ")))
}

fn compare_gaps(config: &str, trials: usize) -> (bool, String) {
    let dir = tempfile::tempdir().unwrap();
    let (mut c, base) = load_config(&configs().join(config)).unwrap();
    Overrides {
        mode: Some(Mode::Compare),
        trials: Some(trials),
        out: Some(dir.path().to_path_buf()),
        ..Default::default()
    }
    .apply(&mut c);
    c.subsets = None;
    let r = run(&c, &base).unwrap();
    let ok = r.comparison.iter().all(|p| p.gap > -p.standard_error);
    let gaps: Vec<String> = r
        .comparison
        .iter()
        .map(|p| format!("Pfa {}: {:+.4} (SE {:.4})", p.pfa, p.gap, p.standard_error))
        .collect();
    (ok, gaps.join(", "))
}

fn criterion_5() -> Outcome {
    let (ok, white) = compare_gaps("desk.json", 10_000);
    let (_, colored) = compare_gaps("desk_interference.json", 10_000);
    outcome(ok, format!("white desk, 1e4 paired trials: {white} [colored reference: {colored}]"))
}

fn criterion_6() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let (mut c, base) = load_config(&configs().join("full.json")).unwrap();
    Overrides {
        mode: Some(Mode::Compare),
        trials: Some(1000),
        out: Some(dir.path().to_path_buf()),
        ..Default::default()
    }
    .apply(&mut c);
    c.subsets = None;
    let r = run(&c, &base).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let opt = r.optimization.unwrap();
    let dim = r.dims.k * r.dims.n * r.dims.l;
    let ok = dim == 576 && elapsed < FULL_SCALE_BUDGET_S && opt.optimized_objective >= opt.baseline_objective;
    outcome(
        ok,
        format!(
            "S is {dim}x{dim}, {:.1} s end to end, objective {} (J_opt) vs {} (identity)",
            elapsed, opt.optimized_objective, opt.baseline_objective
        ),
    )
}

fn criterion_7() -> Outcome {
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(7);

    // Unit modulus and TDM nonzero count.
    for sc in [full_scale_scenario(), desk_scenario(), random_scenario(&mut rng, 3, 3, 2, true)] {
        let s = stacked_steering(&sc).unwrap();
        if s.values.iter().any(|z| (z.norm() - 1.0).abs() > UNIT_MODULUS_TOL) {
            failures.push("unit modulus");
        }
        let d = sc.dims();
        let mut p: Vec<usize> = (0..d.l).collect();
        p.shuffle(&mut rng);
        let masked = apply_tdm(&SelectionMatrix::from_permutation(&p).unwrap(), &s).unwrap();
        if masked.values.iter().filter(|z| z.norm() > 0.0).count() != d.l * d.m {
            failures.push("TDM nonzero count");
        }
    }

    // Emitted schedules are permutations; Hermitian forms give real values.
    let mut worst_ratio = 0.0f64;
    for i in 0..30u64 {
        let sc = random_scenario(&mut rng, 3, 2, 2, true);
        let form = diagonal_load(&scenario_quadratic_form(&sc, &sc.detection_weights()).unwrap()).unwrap();
        let r = optimize_schedule(&form, &ScheduleOptions { restarts: 3, seed: i, ..Default::default() }).unwrap();
        if validate_selection(&r.j_opt).is_err() || r.j_opt.to_permutation().is_none() {
            failures.push("schedule validity");
        }
        for _ in 0..10 {
            let mut p: Vec<usize> = (0..6).collect();
            p.shuffle(&mut rng);
            let z = quadratic_value(&form, &SelectionMatrix::from_permutation(&p).unwrap()).unwrap();
            worst_ratio = worst_ratio.max(z.im.abs() / z.re.abs());
        }
    }
    if worst_ratio >= IMAG_RATIO_MAX {
        failures.push("Hermitian realness");
    }

    // CDF monotonicity, with and without repeated rates.
    for _ in 0..50 {
        let k = rng.random_range(1..7);
        let mut rates: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..5.0)).collect();
        if rng.random_bool(0.5) {
            rates.push(rates[0]);
        }
        let horizon: f64 = rates.iter().map(|r| 10.0 / r).sum();
        let mut prev = 0.0;
        for i in 0..=500 {
            let f = hypoexp_cdf(&rates, horizon * i as f64 / 500.0).unwrap();
            if !(0.0..=1.0).contains(&f) || f < prev - 1e-12 {
                failures.push("CDF monotonicity");
                break;
            }
            prev = f;
        }
    }

    // Same config and seed give byte-identical CSVs.
    let dir = tempfile::tempdir().unwrap();
    let mut csvs = Vec::new();
    for run_dir in ["a", "b"] {
        let (mut c, base) = load_config(&configs().join("desk_interference.json")).unwrap();
        Overrides {
            trials: Some(2000),
            out: Some(dir.path().join(run_dir)),
            ..Default::default()
        }
        .apply(&mut c);
        run(&c, &base).unwrap();
        csvs.push(
            ["roc_baseline.csv", "roc_optimized.csv"]
                .map(|f| fs::read(dir.path().join(run_dir).join(f)).unwrap()),
        );
    }
    if csvs[0] != csvs[1] {
        failures.push("CSV reproducibility");
    }

    failures.dedup();
    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            format!("all invariants hold (max Im/Re = {worst_ratio:e})")
        } else {
            format!("violated: {}", failures.join(", "))
        },
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("Hungarian optimality", criterion_1),
        ("QAP monotonicity and convergence", criterion_2),
        ("QAP quality at exhaustive scale", criterion_3),
        ("statistics cross-validation", criterion_4),
        ("directional reproduction at desk scale", criterion_5),
        ("full-scale feasibility", criterion_6),
        ("invariant suite", criterion_7),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {} ({name}): {} [{:.1} s] {}",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64(),
            o.detail
        );
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
