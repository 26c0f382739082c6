//! Monte Carlo ROC estimation.
//!
//! Trial `i` draws all of its randomness from a ChaCha stream keyed by
//! (seed, i), so results do not depend on how trials are spread across
//! threads, and two schedules simulated with the same seed see the same
//! noise realizations.

use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::detection::{AlphaModel, DetectorInputs};
use crate::error::{Result, TdmError};
use crate::linalg::dot_h;
use crate::scenario::Scenario;
use crate::selection::{validate_selection, SelectionMatrix};

pub const DEFAULT_THRESHOLDS: usize = 512;

/// Empirical (P_FA, P_D) pairs at ascending thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub thresholds: Vec<f64>,
    pub pfa: Vec<f64>,
    pub pd: Vec<f64>,
    pub trials: usize,
    pub rng_seed: u64,
}

fn exceed_fraction(sorted: &[f64], gamma: f64) -> f64 {
    let above = sorted.len() - sorted.partition_point(|&x| x <= gamma);
    above as f64 / sorted.len() as f64
}

impl RocCurve {
    /// Sweeps `count` thresholds placed at evenly spaced quantiles of the
    /// pooled H0/H1 statistics.
    pub fn from_statistics(h0: &[f64], h1: &[f64], count: usize, seed: u64) -> Result<Self> {
        if h0.is_empty() || h0.len() != h1.len() {
            return Err(TdmError::InvalidArgument(
                "need equally many nonempty H0 and H1 statistics".into(),
            ));
        }
        if count < 2 {
            return Err(TdmError::InvalidArgument("need at least two thresholds".into()));
        }
        let mut s0 = h0.to_vec();
        let mut s1 = h1.to_vec();
        s0.sort_by(f64::total_cmp);
        s1.sort_by(f64::total_cmp);
        let mut pooled: Vec<f64> = s0.iter().chain(&s1).copied().collect();
        pooled.sort_by(f64::total_cmp);
        let last = pooled.len() - 1;
        let thresholds: Vec<f64> = (0..count)
            .map(|i| pooled[(i as f64 / (count - 1) as f64 * last as f64).round() as usize])
            .collect();
        let pfa = thresholds.iter().map(|&g| exceed_fraction(&s0, g)).collect();
        let pd = thresholds.iter().map(|&g| exceed_fraction(&s1, g)).collect();
        Ok(RocCurve {
            thresholds,
            pfa,
            pd,
            trials: h0.len(),
            rng_seed: seed,
        })
    }

    /// P_D at the first threshold whose P_FA does not exceed `target`.
    pub fn pd_at_pfa(&self, target: f64) -> f64 {
        self.pfa
            .iter()
            .position(|&p| p <= target)
            .map_or(0.0, |i| self.pd[i])
    }

    /// CSV with header `threshold,pfa,pd`, one row per threshold, values in
    /// shortest round-trip decimal form.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "threshold,pfa,pd")?;
        for ((t, f), d) in self.thresholds.iter().zip(&self.pfa).zip(&self.pd) {
            writeln!(w, "{t},{f},{d}")?;
        }
        Ok(())
    }
}

/// Raw statistics of a Monte Carlo run and the ROC swept from them.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloRun {
    pub curve: RocCurve,
    pub h0: Vec<f64>,
    pub h1: Vec<f64>,
}

impl MonteCarloRun {
    /// Threshold set so that at most ⌊pfa·T⌋ H0 statistics exceed it, and
    /// the fraction of H1 statistics above it.
    pub fn detection_at_false_alarm(&self, pfa: f64) -> (f64, f64) {
        let mut s0 = self.h0.clone();
        s0.sort_by(|a, b| b.total_cmp(a));
        let k = ((pfa.clamp(0.0, 1.0) * s0.len() as f64).floor() as usize).min(s0.len() - 1);
        let gamma = s0[k];
        let mut s1 = self.h1.clone();
        s1.sort_by(f64::total_cmp);
        (gamma, exceed_fraction(&s1, gamma))
    }
}

fn complex_normal<R: Rng>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * s, im * s)
}

/// Draws `trials` statistics under each hypothesis.
pub fn simulate_statistics(
    inputs: &DetectorInputs,
    trials: usize,
    seed: u64,
    alpha_model: AlphaModel,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if trials == 0 {
        return Err(TdmError::InvalidArgument("trials must be at least 1".into()));
    }
    let filters: Vec<Vec<Complex64>> = inputs
        .masked
        .iter()
        .zip(&inputs.noise)
        .map(|(s, r)| r.solve(s))
        .collect();
    let norms = inputs.normalizers()?;

    let trial = |t: usize| -> (f64, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(t as u64);
        let draw_noise = |k: usize, rng: &mut ChaCha8Rng| {
            let dim = inputs.noise[k].dim();
            let w: Vec<Complex64> = (0..dim).map(|_| complex_normal(rng, 1.0)).collect();
            inputs.noise[k].colour(&w)
        };
        let mut h0 = 0.0;
        for k in 0..inputs.vehicles() {
            let y = draw_noise(k, &mut rng);
            if norms[k] > 0.0 {
                h0 += dot_h(&filters[k], &y).norm_sqr() / norms[k];
            }
        }
        let mut h1 = 0.0;
        for k in 0..inputs.vehicles() {
            let alpha = match alpha_model {
                AlphaModel::Fixed => inputs.alpha[k],
                AlphaModel::Fluctuating => complex_normal(&mut rng, 2.0 * inputs.alpha[k].norm_sqr()),
            };
            let mut y = draw_noise(k, &mut rng);
            for (yi, si) in y.iter_mut().zip(&inputs.masked[k]) {
                *yi += alpha * si;
            }
            if norms[k] > 0.0 {
                h1 += dot_h(&filters[k], &y).norm_sqr() / norms[k];
            }
        }
        (h0, h1)
    };

    let pairs: Vec<(f64, f64)> = (0..trials).into_par_iter().map(trial).collect();
    Ok(pairs.into_iter().unzip())
}

/// Monte Carlo ROC of the detector using schedule `j` on `scenario`.
pub fn roc_monte_carlo(
    scenario: &Scenario,
    j: &SelectionMatrix,
    trials: usize,
    seed: u64,
    alpha_model: AlphaModel,
) -> Result<MonteCarloRun> {
    validate_selection(j).map_err(TdmError::InvalidSelection)?;
    let inputs = DetectorInputs::from_scenario(scenario, j)?;
    roc_from_inputs(&inputs, trials, seed, alpha_model, DEFAULT_THRESHOLDS)
}

pub fn roc_from_inputs(
    inputs: &DetectorInputs,
    trials: usize,
    seed: u64,
    alpha_model: AlphaModel,
    thresholds: usize,
) -> Result<MonteCarloRun> {
    let (h0, h1) = simulate_statistics(inputs, trials, seed, alpha_model)?;
    let curve = RocCurve::from_statistics(&h0, &h1, thresholds, seed)?;
    Ok(MonteCarloRun { curve, h0, h1 })
}

/// Kolmogorov-Smirnov distance between the empirical CDF of `samples` and
/// `cdf`.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}
