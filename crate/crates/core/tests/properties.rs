use std::f64::consts::PI;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tdm_core::covariance::{interference_covariance, InterferenceSource};
use tdm_core::scheduler::scenario_quadratic_form;
use tdm_core::synth::{desk_scenario, random_scenario};
use tdm_core::*;

fn random_permutation(rng: &mut ChaCha8Rng, size: usize) -> SelectionMatrix {
    let mut p: Vec<usize> = (0..size).collect();
    p.shuffle(rng);
    SelectionMatrix::from_permutation(&p).unwrap()
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

fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Entry (k, n, l, m) of the stacked steering vector written out as one phase.
fn entry_oracle(sc: &Scenario, k: usize, n: usize, l: usize, m: usize) -> Complex64 {
    let d = sc.dims();
    let beta = 2.0 * PI * sc.radar.carrier_frequency_hz / sc.radar.speed_of_light_m_s;
    let t = &sc.target;
    let look = |v: &Vehicle| {
        let p = v.rx_positions[0];
        let r = [t.position[0] - p[0], t.position[1] - p[1]];
        let norm = r[0].hypot(r[1]);
        let u = [r[0] / norm, r[1] / norm];
        let rel = match sc.doppler_mode {
            DopplerMode::Literal => t.velocity,
            DopplerMode::Relative => [t.velocity[0] - v.velocity[0], t.velocity[1] - v.velocity[1]],
        };
        (u, dot(rel, u))
    };
    let (u_k, nu_k) = look(&sc.vehicles[k]);
    let (u_1, nu_1) = look(&sc.vehicles[0]);
    let geometry = dot(sc.vehicles[k].tx_positions[n], u_k) + dot(sc.vehicles[0].rx_positions[m], u_1);
    let tc = sc.radar.chirp_time_s;
    let t_k = (n + l * d.n) as f64 * tc;
    let t_1 = (m + l * d.m) as f64 * tc;
    Complex64::from_polar(1.0, beta * (geometry - nu_k * t_k - nu_1 * t_1))
}

fn scenario_strategy() -> impl Strategy<Value = (Scenario, u64)> {
    (1usize..=3, 1usize..=3, 1usize..=3, any::<u64>(), any::<bool>()).prop_map(|(k, n, m, seed, colored)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (random_scenario(&mut rng, k, n, m, colored), seed)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn steering_entries_match_closed_form((sc, _) in scenario_strategy()) {
        let s = stacked_steering(&sc).unwrap();
        let d = sc.dims();
        prop_assert_eq!(s.len(), d.k * d.n * d.l * d.m);
        for k in 0..d.k {
            for n in 0..d.n {
                for l in 0..d.l {
                    for m in 0..d.m {
                        let z = s.values[d.index(k, n, l, m)];
                        prop_assert!((z.norm() - 1.0).abs() < 1e-12);
                        let want = entry_oracle(&sc, k, n, l, m);
                        prop_assert!((z - want).norm() < 1e-8, "({},{},{},{}): {} vs {}", k, n, l, m, z, want);
                    }
                }
            }
        }
    }

    #[test]
    fn masking_is_idempotent_and_keeps_lm_entries((sc, seed) in scenario_strategy()) {
        let d = sc.dims();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let j = random_permutation(&mut rng, d.l);
        let s = stacked_steering(&sc).unwrap();
        let once = apply_tdm(&j, &s).unwrap();
        let twice = apply_tdm(&j, &once).unwrap();
        prop_assert_eq!(&once, &twice);
        let nonzero = once.values.iter().filter(|z| z.norm() > 0.0).count();
        prop_assert_eq!(nonzero, d.l * d.m);
        // Surviving entries are untouched.
        for (a, b) in once.values.iter().zip(&s.values) {
            prop_assert!(a.norm() == 0.0 || a == b);
        }
    }

    #[test]
    fn objective_is_the_simplified_detection_mean((sc, seed) in scenario_strategy()) {
        let d = sc.dims();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xface);
        let j = random_permutation(&mut rng, d.l);
        let form = scenario_quadratic_form(&sc, &sc.detection_weights()).unwrap();
        let f = objective(&form, &j).unwrap();
        let inputs = DetectorInputs::from_scenario(&sc, &j).unwrap();
        let mean = mean_h1(&inputs, MeanMode::Simplified).unwrap().value;
        prop_assert!((f + d.k as f64 - mean).abs() <= 1e-9 * mean.abs());
    }

    #[test]
    fn optimizer_never_loses_to_its_start((sc, seed) in scenario_strategy()) {
        let form = diagonal_load(&scenario_quadratic_form(&sc, &sc.detection_weights()).unwrap()).unwrap();
        let r = optimize_schedule(&form, &ScheduleOptions { restarts: 2, seed, ..Default::default() }).unwrap();
        let base = objective(&form, &SelectionMatrix::identity(sc.dims().l)).unwrap();
        prop_assert!(r.final_objective() >= base - 1e-9 * base.abs());
        for w in r.objective_trace.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-9 * w[0].abs());
        }
        prop_assert!(validate_selection(&r.j_opt).is_ok());
    }
}

#[test]
fn static_platoon_has_no_slow_time_phase() {
    let mut sc = desk_scenario();
    for v in &mut sc.vehicles {
        v.velocity = [0.0, 0.0];
    }
    sc.target.velocity = [0.0, 0.0];
    let s = stacked_steering(&sc).unwrap();
    let d = sc.dims();
    for k in 0..d.k {
        for n in 0..d.n {
            for m in 0..d.m {
                let first = s.values[d.index(k, n, 0, m)];
                for l in 1..d.l {
                    assert!((s.values[d.index(k, n, l, m)] - first).norm() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn loading_shifts_every_schedule_equally() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    for _ in 0..20 {
        let sc = random_scenario(&mut rng, 2, 2, 2, true);
        let raw = scenario_quadratic_form(&sc, &sc.detection_weights()).unwrap();
        let loaded = diagonal_load(&raw).unwrap();
        let lambda = loaded.lambda_m;
        assert!(lambda >= 0.0);
        assert!(loaded.eigenvalues().unwrap()[0] >= -1e-9 * lambda.max(1.0));
        let mut best_raw = (f64::MIN, 0);
        let mut best_loaded = (f64::MIN, 0);
        for (i, p) in permutations(4).iter().enumerate() {
            let j = SelectionMatrix::from_permutation(p).unwrap();
            let a = objective(&raw, &j).unwrap();
            let b = objective(&loaded, &j).unwrap();
            assert!((b - a - 4.0 * lambda).abs() <= 1e-9 * b.abs().max(1.0));
            if a > best_raw.0 + 1e-12 {
                best_raw = (a, i);
            }
            if b > best_loaded.0 + 1e-12 {
                best_loaded = (b, i);
            }
        }
        assert_eq!(best_raw.1, best_loaded.1);
    }
}

#[test]
fn white_noise_makes_every_schedule_equal() {
    let sc = desk_scenario();
    let form = scenario_quadratic_form(&sc, &sc.detection_weights()).unwrap();
    let base = objective(&form, &SelectionMatrix::identity(6)).unwrap();
    for p in permutations(6) {
        let f = objective(&form, &SelectionMatrix::from_permutation(&p).unwrap()).unwrap();
        assert!((f - base).abs() <= 1e-12 * base);
    }
}

#[test]
fn interference_makes_the_schedule_matter() {
    let mut sc = desk_scenario();
    let sources = [
        InterferenceSource { position: [-20.0, 60.0], velocity: [5.0, -30.0], inr: 100.0 },
        InterferenceSource { position: [25.0, 110.0], velocity: [-15.0, 0.0], inr: 30.0 },
    ];
    sc.covariance = interference_covariance(&sc, 1.0, &sources).unwrap();
    let form = diagonal_load(&scenario_quadratic_form(&sc, &sc.detection_weights()).unwrap()).unwrap();
    let values: Vec<f64> = permutations(6)
        .iter()
        .map(|p| objective(&form, &SelectionMatrix::from_permutation(p).unwrap()).unwrap())
        .collect();
    let spread = values.iter().copied().fold(f64::MIN, f64::max) - values.iter().copied().fold(f64::MAX, f64::min);
    assert!(spread > 1e-6);
    let r = optimize_schedule(&form, &ScheduleOptions { restarts: 8, seed: 3, ..Default::default() }).unwrap();
    let base = objective(&form, &SelectionMatrix::identity(6)).unwrap();
    assert!(r.final_objective() >= base);
}

#[test]
fn simulated_means_match_the_analytic_ones() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let sc = random_scenario(&mut rng, 3, 2, 2, true);
    let j = random_permutation(&mut rng, 6);
    let inputs = DetectorInputs::from_scenario(&sc, &j).unwrap();
    let run = tdm_core::roc::roc_from_inputs(&inputs, 40_000, 9, AlphaModel::Fluctuating, 256).unwrap();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let energies = inputs.energies().unwrap();
    let h0: f64 = energies
        .iter()
        .zip(&inputs.alpha)
        .map(|(c, a)| c / (a.norm_sqr() / 2.0 + c))
        .sum();
    assert!((mean(&run.h0) - h0).abs() < 0.02 * h0);
    let h1 = mean_h1(&inputs, MeanMode::Exact).unwrap().value;
    assert!((mean(&run.h1) - h1).abs() < 0.02 * h1);
}
