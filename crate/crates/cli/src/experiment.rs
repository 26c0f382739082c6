//! Mode dispatch, result files and the JSON report.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use tdm_core::roc::{roc_from_inputs, MonteCarloRun};
use tdm_core::scheduler::scenario_quadratic_form;
use tdm_core::{
    analytic_pd, analytic_pfa, diagonal_load, mean_h1, objective, optimize_schedule, validate_selection,
    DetectorInputs, MeanMode, QuadraticForm, Scenario, ScheduleOptions, ScheduleResult, SelectionMatrix,
};

use crate::config::{
    build_scenario, pulses_of, schedule_from_pulses, sequential_schedule, AlphaChoice, ConfigError, ExperimentConfig,
    Mode,
};
use crate::error::CliError;

/// Relative slack allowed when re-checking that an objective trace never
/// decreases.
pub const TRACE_SLACK: f64 = 1e-9;

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub mode: Option<Mode>,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub out: Option<PathBuf>,
    pub restarts: Option<usize>,
    pub epsilon: Option<f64>,
}

impl Overrides {
    /// `seed` applies to both the optimizer restarts and the Monte Carlo.
    pub fn apply(&self, config: &mut ExperimentConfig) {
        if let Some(m) = self.mode {
            config.mode = m;
        }
        if let Some(s) = self.seed {
            config.optimizer.seed = s;
            config.monte_carlo.seed = s;
        }
        if let Some(t) = self.trials {
            config.monte_carlo.trials = t;
        }
        if let Some(o) = &self.out {
            config.output_dir = o.clone();
        }
        if let Some(r) = self.restarts {
            config.optimizer.restarts = r;
        }
        if let Some(e) = self.epsilon {
            config.optimizer.epsilon = e;
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DimsReport {
    pub k: usize,
    pub n: usize,
    pub l: usize,
    pub m: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizationReport {
    /// Transmitter column (0-based) fired on each pulse.
    pub j_opt: Vec<usize>,
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub restart: usize,
    pub lambda_m: f64,
    pub baseline_objective: f64,
    pub optimized_objective: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalyticPoint {
    pub pfa: f64,
    pub threshold: f64,
    pub pd: f64,
}

/// Closed-form detector figures for one schedule.
#[derive(Debug, Clone, Serialize)]
pub struct DetectionReport {
    pub label: String,
    pub schedule: Vec<Option<usize>>,
    /// C_k = s̄_kᴴR_k⁻¹s̄_k per vehicle.
    pub energies: Vec<f64>,
    /// Σ_k 2|α_k|²C_k, the unloaded scheduling objective.
    pub detection_objective: f64,
    pub mean_h1_exact: f64,
    pub mean_h1_simplified: f64,
    pub weak_vehicles: Vec<usize>,
    pub dropped_vehicles: Vec<usize>,
    pub analytic: Vec<AnalyticPoint>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OperatingPoint {
    pub pfa: f64,
    pub threshold: f64,
    pub pd: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RocReport {
    pub label: String,
    pub csv: PathBuf,
    pub sidecar: PathBuf,
    pub trials: usize,
    pub seed: u64,
    pub empirical: Vec<OperatingPoint>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonPoint {
    pub pfa: f64,
    pub baseline_pd: f64,
    pub optimized_pd: f64,
    pub gap: f64,
    /// √(p(1−p)/T) at the baseline P_D.
    pub standard_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SubsetReport {
    /// Cooperating vehicles, 1-based.
    pub vehicles: Vec<usize>,
    pub optimization: OptimizationReport,
    pub roc: Vec<RocReport>,
    pub comparison: Vec<ComparisonPoint>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Timings {
    pub setup_s: f64,
    pub optimize_s: f64,
    pub monte_carlo_s: f64,
    pub total_s: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub tool_version: String,
    pub mode: Mode,
    pub scenario_hash: String,
    pub dims: DimsReport,
    pub baseline_schedule: Vec<Option<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimization: Option<OptimizationReport>,
    pub detection: Vec<DetectionReport>,
    pub roc: Vec<RocReport>,
    pub comparison: Vec<ComparisonPoint>,
    pub subsets: Vec<SubsetReport>,
    pub report_path: PathBuf,
    pub timings: Timings,
    pub config: ExperimentConfig,
}

#[derive(Serialize)]
struct RocSidecar<'a> {
    label: &'a str,
    seed: u64,
    trials: usize,
    thresholds: usize,
    scenario_hash: &'a str,
    alpha_model: AlphaChoice,
    schedule: Vec<Option<usize>>,
    columns: [&'static str; 3],
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let f = fs::File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(f);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e.into(),
    })?;
    writeln!(w).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

/// Fails if the trace ever drops by more than [`TRACE_SLACK`] relative.
pub fn check_trace(trace: &[f64]) -> Result<(), CliError> {
    for (s, w) in trace.windows(2).enumerate() {
        if w[1] < w[0] - TRACE_SLACK * w[0].abs() {
            return Err(CliError::Numerical(format!(
                "objective decreased at iteration {}: {} -> {}",
                s + 1,
                w[0],
                w[1]
            )));
        }
    }
    Ok(())
}

fn optimization_report(form: &QuadraticForm, r: &ScheduleResult) -> Result<OptimizationReport, CliError> {
    check_trace(&r.objective_trace)?;
    validate_selection(&r.j_opt).map_err(|v| CliError::Numerical(format!("optimizer emitted an invalid schedule: {v}")))?;
    let j_opt = r
        .j_opt
        .to_permutation()
        .ok_or_else(|| CliError::Numerical("optimizer emitted a non-permutation schedule".into()))?;
    Ok(OptimizationReport {
        j_opt,
        objective_trace: r.objective_trace.clone(),
        iterations: r.iterations,
        converged: r.converged,
        restart: r.restart,
        lambda_m: form.lambda_m,
        baseline_objective: objective(form, &SelectionMatrix::identity(form.dims.l))?,
        optimized_objective: r.final_objective(),
    })
}

/// Smallest threshold whose analytic P_FA does not exceed `pfa`.
pub fn analytic_threshold(inputs: &DetectorInputs, pfa: f64) -> Result<f64, CliError> {
    let mut hi = 1.0;
    while analytic_pfa(inputs, hi)?.value > pfa {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(CliError::Numerical("could not bracket the analytic threshold".into()));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if analytic_pfa(inputs, mid)?.value > pfa {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    Ok(hi)
}

fn detection_report(
    label: &str,
    inputs: &DetectorInputs,
    j: &SelectionMatrix,
    pfa_points: &[f64],
) -> Result<DetectionReport, CliError> {
    let energies = inputs.energies()?;
    let detection_objective = energies
        .iter()
        .zip(&inputs.alpha)
        .map(|(c, a)| 2.0 * a.norm_sqr() * c)
        .sum();
    let exact = mean_h1(inputs, MeanMode::Exact)?;
    let simplified = mean_h1(inputs, MeanMode::Simplified)?;
    let mut analytic = Vec::new();
    let mut dropped = Vec::new();
    if energies.iter().any(|&c| c > 0.0) {
        for &pfa in pfa_points {
            let threshold = analytic_threshold(inputs, pfa)?;
            let pd = analytic_pd(inputs, threshold)?;
            dropped = pd.dropped.clone();
            analytic.push(AnalyticPoint {
                pfa,
                threshold,
                pd: pd.value,
            });
        }
    }
    Ok(DetectionReport {
        label: label.to_string(),
        schedule: pulses_of(j),
        energies,
        detection_objective,
        mean_h1_exact: exact.value,
        mean_h1_simplified: simplified.value,
        weak_vehicles: simplified.weak_vehicles,
        dropped_vehicles: dropped,
        analytic,
    })
}

struct Context<'a> {
    config: &'a ExperimentConfig,
    scenario: Scenario,
    out: PathBuf,
    timings: Timings,
}

impl Context<'_> {
    fn simulate(
        &mut self,
        label: &str,
        inputs: &DetectorInputs,
        j: &SelectionMatrix,
    ) -> Result<(RocReport, MonteCarloRun), CliError> {
        let mc = &self.config.monte_carlo;
        let t = Instant::now();
        let run = roc_from_inputs(inputs, mc.trials, mc.seed, mc.alpha_model.into(), mc.thresholds)?;
        self.timings.monte_carlo_s += t.elapsed().as_secs_f64();

        let csv = self.out.join(format!("roc_{label}.csv"));
        let sidecar = self.out.join(format!("roc_{label}.json"));
        let f = fs::File::create(&csv).map_err(io_err(&csv))?;
        let mut w = BufWriter::new(f);
        run.curve.write_csv(&mut w).map_err(io_err(&csv))?;
        w.flush().map_err(io_err(&csv))?;
        write_json(
            &sidecar,
            &RocSidecar {
                label,
                seed: mc.seed,
                trials: mc.trials,
                thresholds: mc.thresholds,
                scenario_hash: &self.scenario.fingerprint(),
                alpha_model: mc.alpha_model,
                schedule: pulses_of(j),
                columns: ["threshold", "pfa", "pd"],
            },
        )?;
        let empirical = mc
            .pfa_points
            .iter()
            .map(|&pfa| {
                let (threshold, pd) = run.detection_at_false_alarm(pfa);
                OperatingPoint { pfa, threshold, pd }
            })
            .collect();
        Ok((
            RocReport {
                label: label.to_string(),
                csv,
                sidecar,
                trials: mc.trials,
                seed: mc.seed,
                empirical,
            },
            run,
        ))
    }

    fn optimize(&mut self, weights: &[f64]) -> Result<(QuadraticForm, ScheduleResult), CliError> {
        let t = Instant::now();
        let form = diagonal_load(&scenario_quadratic_form(&self.scenario, weights)?)?;
        let o = &self.config.optimizer;
        let result = optimize_schedule(
            &form,
            &ScheduleOptions {
                epsilon: o.epsilon,
                max_iter: o.max_iter,
                restarts: o.restarts,
                seed: o.seed,
            },
        )?;
        self.timings.optimize_s += t.elapsed().as_secs_f64();
        Ok((form, result))
    }

    /// Paired-seed Monte Carlo of the identity baseline and `j_opt`.
    fn compare(
        &mut self,
        prefix: &str,
        j_base: &SelectionMatrix,
        j_opt: &SelectionMatrix,
    ) -> Result<(Vec<RocReport>, Vec<ComparisonPoint>), CliError> {
        let base_inputs = DetectorInputs::from_scenario(&self.scenario, j_base)?;
        let opt_inputs = DetectorInputs::from_scenario(&self.scenario, j_opt)?;
        let (base_roc, base_run) = self.simulate(&format!("{prefix}baseline"), &base_inputs, j_base)?;
        let (opt_roc, opt_run) = self.simulate(&format!("{prefix}optimized"), &opt_inputs, j_opt)?;
        let trials = self.config.monte_carlo.trials as f64;
        let comparison = self
            .config
            .monte_carlo
            .pfa_points
            .iter()
            .map(|&pfa| {
                let (_, pb) = base_run.detection_at_false_alarm(pfa);
                let (_, po) = opt_run.detection_at_false_alarm(pfa);
                ComparisonPoint {
                    pfa,
                    baseline_pd: pb,
                    optimized_pd: po,
                    gap: po - pb,
                    standard_error: (pb * (1.0 - pb) / trials).sqrt(),
                }
            })
            .collect();
        Ok((vec![base_roc, opt_roc], comparison))
    }
}

fn requested_schedule(config: &ExperimentConfig, scenario: &Scenario) -> Result<SelectionMatrix, CliError> {
    let d = scenario.dims();
    let j = match &config.schedule {
        Some(pulses) => {
            if pulses.len() != d.l {
                return Err(ConfigError {
                    path: "schedule".into(),
                    line: None,
                    column: None,
                    message: format!("needs one entry per pulse ({}), got {}", d.l, pulses.len()),
                }
                .into());
            }
            schedule_from_pulses(pulses, d.transmitters())?
        }
        None => sequential_schedule(d.l, d.transmitters()),
    };
    validate_selection(&j).map_err(|v| CliError::Infeasible(format!("schedule: {v}")))?;
    Ok(j)
}

/// Runs the configured experiment and writes every result file, including
/// `report.json`, into the output directory.
pub fn run(config: &ExperimentConfig, base_dir: &Path) -> Result<ExperimentReport, CliError> {
    let start = Instant::now();
    let scenario = build_scenario(config, base_dir)?;
    let d = scenario.dims();
    if config.mode.needs_permutation() && d.l != d.transmitters() {
        return Err(CliError::Infeasible(format!(
            "mode {:?} requires L = K*N (permutation schedules), got L = {} and K*N = {}",
            config.mode,
            d.l,
            d.transmitters()
        )));
    }
    if d.l < d.transmitters() {
        return Err(CliError::Infeasible(format!(
            "every transmitter must fire once: L = {} pulses < K*N = {} transmitters",
            d.l,
            d.transmitters()
        )));
    }
    // Factor once up front so covariance problems surface before any work.
    scenario.covariance.factor(&d)?;
    let out = config.output_dir.clone();
    fs::create_dir_all(&out).map_err(io_err(&out))?;

    let mut ctx = Context {
        config,
        scenario,
        out,
        timings: Timings::default(),
    };
    ctx.timings.setup_s = start.elapsed().as_secs_f64();

    let identity = SelectionMatrix::identity(d.l);
    let mut optimization = None;
    let mut detection = Vec::new();
    let mut roc = Vec::new();
    let mut comparison = Vec::new();
    let mut subsets = Vec::new();
    let weights = ctx.scenario.detection_weights();
    let pfa_points = config.monte_carlo.pfa_points.clone();

    let baseline = match config.mode {
        Mode::Optimize | Mode::Compare => identity.clone(),
        Mode::Evaluate | Mode::Roc => requested_schedule(config, &ctx.scenario)?,
    };

    match config.mode {
        Mode::Optimize | Mode::Compare => {
            let (form, result) = ctx.optimize(&weights)?;
            let rep = optimization_report(&form, &result)?;
            let base_inputs = DetectorInputs::from_scenario(&ctx.scenario, &identity)?;
            let opt_inputs = DetectorInputs::from_scenario(&ctx.scenario, &result.j_opt)?;
            detection.push(detection_report("baseline", &base_inputs, &identity, &pfa_points)?);
            detection.push(detection_report("optimized", &opt_inputs, &result.j_opt, &pfa_points)?);
            optimization = Some(rep);
            if config.mode == Mode::Compare {
                let (r, c) = ctx.compare("", &identity, &result.j_opt)?;
                roc = r;
                comparison = c;
                for vehicles in config.subsets.iter().flatten() {
                    let active: Vec<usize> = vehicles.iter().map(|v| v - 1).collect();
                    let sub_weights: Vec<f64> = weights
                        .iter()
                        .enumerate()
                        .map(|(k, w)| if active.contains(&k) { *w } else { 0.0 })
                        .collect();
                    let (form, result) = ctx.optimize(&sub_weights)?;
                    let rep = optimization_report(&form, &result)?;
                    let j_base = identity.silence_vehicles(d.n, &active);
                    let j_opt = result.j_opt.silence_vehicles(d.n, &active);
                    let tag: Vec<String> = vehicles.iter().map(|v| v.to_string()).collect();
                    let (r, c) = ctx.compare(&format!("subset_{}_", tag.join("-")), &j_base, &j_opt)?;
                    subsets.push(SubsetReport {
                        vehicles: vehicles.clone(),
                        optimization: rep,
                        roc: r,
                        comparison: c,
                    });
                }
            }
        }
        Mode::Evaluate => {
            let inputs = DetectorInputs::from_scenario(&ctx.scenario, &baseline)?;
            detection.push(detection_report("schedule", &inputs, &baseline, &pfa_points)?);
        }
        Mode::Roc => {
            let inputs = DetectorInputs::from_scenario(&ctx.scenario, &baseline)?;
            detection.push(detection_report("schedule", &inputs, &baseline, &pfa_points)?);
            let (r, _) = ctx.simulate("schedule", &inputs, &baseline)?;
            roc.push(r);
        }
    }

    ctx.timings.total_s = start.elapsed().as_secs_f64();
    let report_path = ctx.out.join("report.json");
    let report = ExperimentReport {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        mode: config.mode,
        scenario_hash: ctx.scenario.fingerprint(),
        dims: DimsReport {
            k: d.k,
            n: d.n,
            l: d.l,
            m: d.m,
        },
        baseline_schedule: pulses_of(&baseline),
        optimization,
        detection,
        roc,
        comparison,
        subsets,
        report_path: report_path.clone(),
        timings: ctx.timings,
        config: config.clone(),
    };
    write_json(&report_path, &report)?;
    Ok(report)
}
