//! Multistatic detector: the weighted matched-filter statistic, its mean
//! under H1, and analytic P_FA / P_D through the hypo-exponential CDF.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::covariance::NoiseBlock;
use crate::error::{Result, TdmError};
use crate::linalg::dot_h;
use crate::scenario::Scenario;
use crate::selection::SelectionMatrix;
use crate::steering::{apply_tdm, stacked_steering};

/// Rates closer than this (relative) are treated as coincident.
pub const RATE_MERGE_TOL: f64 = 1e-6;

/// Imaginary residue tolerated on sᴴR⁻¹s before it is discarded.
const ENERGY_IMAG_TOL: f64 = 1e-10;

/// How the complex reflectivity α_k is drawn in simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AlphaModel {
    /// α_k is the scenario's nominal value on every trial.
    Fixed,
    /// α_k ~ CN(0, 2|α̂_k|²) per trial, which makes the simulated mean of the
    /// statistic equal to the exact H1 mean.
    #[default]
    Fluctuating,
}

/// Per-vehicle masked steering vectors, factored covariances and nominal
/// reflectivities.
#[derive(Debug, Clone)]
pub struct DetectorInputs {
    pub masked: Vec<Vec<Complex64>>,
    pub noise: Vec<NoiseBlock>,
    pub alpha: Vec<Complex64>,
}

impl DetectorInputs {
    pub fn new(masked: Vec<Vec<Complex64>>, noise: Vec<NoiseBlock>, alpha: Vec<Complex64>) -> Result<Self> {
        if masked.len() != noise.len() || masked.len() != alpha.len() {
            return Err(TdmError::DimensionMismatch {
                expected: masked.len(),
                actual: noise.len().min(alpha.len()),
                context: "vehicles in detector inputs",
            });
        }
        for (s, r) in masked.iter().zip(&noise) {
            if s.len() != r.dim() {
                return Err(TdmError::DimensionMismatch {
                    expected: r.dim(),
                    actual: s.len(),
                    context: "masked steering vs covariance block",
                });
            }
        }
        Ok(DetectorInputs { masked, noise, alpha })
    }

    /// Masks the scenario's stacked steering vector with `j` and factors the
    /// covariance.
    pub fn from_scenario(scenario: &Scenario, j: &SelectionMatrix) -> Result<Self> {
        let s = stacked_steering(scenario)?;
        let masked = apply_tdm(j, &s)?;
        let noise = scenario.covariance.factor(&s.dims)?;
        let per = (0..s.dims.k).map(|k| masked.vehicle(k).to_vec()).collect();
        Self::new(per, noise, scenario.reflectivity.clone())
    }

    pub fn vehicles(&self) -> usize {
        self.masked.len()
    }

    /// C_k for every vehicle.
    pub fn energies(&self) -> Result<Vec<f64>> {
        self.masked
            .iter()
            .zip(&self.noise)
            .map(|(s, r)| whitened_energy(s, r))
            .collect()
    }

    /// |α_k|²/2 + C_k, the per-vehicle statistic normalizer.
    pub fn normalizers(&self) -> Result<Vec<f64>> {
        Ok(self
            .energies()?
            .iter()
            .zip(&self.alpha)
            .map(|(c, a)| a.norm_sqr() / 2.0 + c)
            .collect())
    }
}

/// C_k = s̄_kᴴ R_k⁻¹ s̄_k.
pub fn whitened_energy(s: &[Complex64], r: &NoiseBlock) -> Result<f64> {
    if s.len() != r.dim() {
        return Err(TdmError::DimensionMismatch {
            expected: r.dim(),
            actual: s.len(),
            context: "steering vs covariance",
        });
    }
    let z = dot_h(s, &r.solve(s));
    if z.im.abs() > ENERGY_IMAG_TOL * z.re.abs().max(f64::MIN_POSITIVE) && z.im.abs() > 1e-300 {
        return Err(TdmError::Factorization(format!(
            "whitened energy has imaginary residue {:e}",
            z.im
        )));
    }
    Ok(z.re.max(0.0))
}

/// ζ = Σ_k |s̄_kᴴ R_k⁻¹ y_k|² / (|α_k|²/2 + C_k). Vehicles whose normalizer
/// is zero (silent and target-free) contribute nothing.
pub fn test_statistic(ys: &[Vec<Complex64>], inputs: &DetectorInputs) -> Result<f64> {
    if ys.len() != inputs.vehicles() {
        return Err(TdmError::DimensionMismatch {
            expected: inputs.vehicles(),
            actual: ys.len(),
            context: "measurement vehicles",
        });
    }
    let norms = inputs.normalizers()?;
    let mut zeta = 0.0;
    for (k, y) in ys.iter().enumerate() {
        if y.len() != inputs.masked[k].len() {
            return Err(TdmError::DimensionMismatch {
                expected: inputs.masked[k].len(),
                actual: y.len(),
                context: "measurement length",
            });
        }
        if norms[k] > 0.0 {
            let filtered = inputs.noise[k].solve(&inputs.masked[k]);
            zeta += dot_h(&filtered, y).norm_sqr() / norms[k];
        }
    }
    Ok(zeta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeanMode {
    /// Σ_k (C_k + 2|α_k|²C_k²) / (|α_k|²/2 + C_k).
    Exact,
    /// Σ_k (1 + 2|α_k|²C_k), valid when C_k ≫ |α_k|²/2.
    Simplified,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanH1 {
    pub value: f64,
    /// Vehicles (0-based) with C_k < 10·|α_k|²/2, where the simplified form
    /// is unreliable. Only populated in simplified mode.
    pub weak_vehicles: Vec<usize>,
}

/// E[ζ | H1].
pub fn mean_h1(inputs: &DetectorInputs, mode: MeanMode) -> Result<MeanH1> {
    let energies = inputs.energies()?;
    let mut value = 0.0;
    let mut weak_vehicles = Vec::new();
    for (k, (&c, a)) in energies.iter().zip(&inputs.alpha).enumerate() {
        let a2 = a.norm_sqr();
        match mode {
            MeanMode::Exact => {
                let den = a2 / 2.0 + c;
                if den > 0.0 {
                    value += (c + 2.0 * a2 * c * c) / den;
                }
            }
            MeanMode::Simplified => {
                if c < 10.0 * a2 / 2.0 {
                    weak_vehicles.push(k);
                }
                value += 1.0 + 2.0 * a2 * c;
            }
        }
    }
    Ok(MeanH1 { value, weak_vehicles })
}

fn check_rates(rates: &[f64]) -> Result<()> {
    if rates.is_empty() {
        return Err(TdmError::InvalidArgument("at least one rate is required".into()));
    }
    if let Some(r) = rates.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
        return Err(TdmError::InvalidArgument(format!("rates must be positive and finite, got {r}")));
    }
    Ok(())
}

fn has_near_equal_rates(rates: &[f64]) -> bool {
    rates.iter().enumerate().any(|(i, a)| {
        rates[i + 1..]
            .iter()
            .any(|b| (a - b).abs() < RATE_MERGE_TOL * a.max(*b))
    })
}

/// CDF of a sum of independent exponentials with the given rates.
///
/// Distinct rates use the partial-fraction closed form. If any two rates
/// are within [`RATE_MERGE_TOL`] of each other the closed form cancels
/// catastrophically, so the CDF is read off the matrix exponential of the
/// bidiagonal phase-type generator instead: F(t) = 1 − e₁ᵀ exp(T t) 1.
pub fn hypoexp_cdf(rates: &[f64], t: f64) -> Result<f64> {
    check_rates(rates)?;
    if t.is_nan() {
        return Err(TdmError::InvalidArgument("t is NaN".into()));
    }
    if t <= 0.0 {
        return Ok(0.0);
    }
    if t.is_infinite() {
        return Ok(1.0);
    }
    let f = if has_near_equal_rates(rates) {
        phase_type_cdf(rates, t)
    } else {
        let tail: f64 = rates
            .iter()
            .enumerate()
            .map(|(k, &lk)| {
                let coeff: f64 = rates
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != k)
                    .map(|(_, &lj)| lj / (lj - lk))
                    .product();
                coeff * (-lk * t).exp()
            })
            .sum();
        1.0 - tail
    };
    Ok(f.clamp(0.0, 1.0))
}

fn phase_type_cdf(rates: &[f64], t: f64) -> f64 {
    let n = rates.len();
    let mut gen = DMatrix::<f64>::zeros(n, n);
    for (i, &r) in rates.iter().enumerate() {
        gen[(i, i)] = -r * t;
        if i + 1 < n {
            gen[(i, i + 1)] = r * t;
        }
    }
    let e = gen.exp();
    1.0 - e.row(0).sum()
}

/// A probability together with the vehicles (0-based) left out of it
/// because their whitened energy is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Probability {
    pub value: f64,
    pub dropped: Vec<usize>,
}

/// Per-vehicle exponential rates of the statistic terms. Under H0 term k
/// has mean C_k/(|α_k|²/2 + C_k); under H1 with a fluctuating target its
/// mean is (C_k + 2|α_k|²C_k²)/(|α_k|²/2 + C_k).
pub fn term_rates(inputs: &DetectorInputs, h1: bool) -> Result<(Vec<f64>, Vec<usize>)> {
    let energies = inputs.energies()?;
    let mut rates = Vec::new();
    let mut dropped = Vec::new();
    for (k, (&c, a)) in energies.iter().zip(&inputs.alpha).enumerate() {
        if c <= 0.0 {
            dropped.push(k);
            continue;
        }
        let a2 = a.norm_sqr();
        let den = a2 / 2.0 + c;
        let mean = if h1 { (c + 2.0 * a2 * c * c) / den } else { c / den };
        rates.push(1.0 / mean);
    }
    Ok((rates, dropped))
}

fn exceedance(inputs: &DetectorInputs, gamma: f64, h1: bool) -> Result<Probability> {
    if !(gamma >= 0.0) {
        return Err(TdmError::InvalidArgument(format!("threshold must be nonnegative, got {gamma}")));
    }
    let (rates, dropped) = term_rates(inputs, h1)?;
    let value = if rates.is_empty() {
        0.0
    } else {
        1.0 - hypoexp_cdf(&rates, gamma)?
    };
    Ok(Probability { value, dropped })
}

/// P_FA = 1 − F_{ζ|H0}(γ).
pub fn analytic_pfa(inputs: &DetectorInputs, gamma: f64) -> Result<Probability> {
    exceedance(inputs, gamma, false)
}

/// P_D = 1 − F_{ζ|H1}(γ) for the fluctuating-target model.
pub fn analytic_pd(inputs: &DetectorInputs, gamma: f64) -> Result<Probability> {
    exceedance(inputs, gamma, true)
}
