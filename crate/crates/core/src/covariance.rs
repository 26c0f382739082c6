//! Noise-plus-interference covariance, R = Blkdiag(R_1, …, R_K).

use nalgebra::{Cholesky, DVector};
use num_complex::Complex64;

use crate::error::{Result, TdmError};
use crate::linalg::{ensure_hermitian, CMatrix};
use crate::scenario::{Dims, Scenario, Target, Vec2};
use crate::steering::vehicle_steering;

/// Relative tolerance on R_k − R_kᴴ.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Smallest accepted (min L_ii / max L_ii)² of the Cholesky factor.
const MIN_CONDITION_RATIO: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq)]
pub enum CovarianceModel {
    /// R_k = σ² I for every vehicle.
    White { noise_power: f64 },
    /// One Hermitian positive-definite (N·L·M)² block per vehicle.
    BlockDiagonal { blocks: Vec<CMatrix> },
}

impl Default for CovarianceModel {
    fn default() -> Self {
        CovarianceModel::White { noise_power: 1.0 }
    }
}

impl CovarianceModel {
    pub fn white(noise_power: f64) -> Self {
        CovarianceModel::White { noise_power }
    }

    /// Structural checks: block count and size, finiteness, Hermitian symmetry.
    /// Positive definiteness is established by [`CovarianceModel::factor`].
    pub fn validate(&self, dims: &Dims) -> Result<()> {
        match self {
            CovarianceModel::White { noise_power } => {
                if !(noise_power.is_finite() && *noise_power > 0.0) {
                    return Err(TdmError::InvalidScenario(format!(
                        "noise power must be positive and finite, got {noise_power}"
                    )));
                }
            }
            CovarianceModel::BlockDiagonal { blocks } => {
                if blocks.len() != dims.k {
                    return Err(TdmError::DimensionMismatch {
                        expected: dims.k,
                        actual: blocks.len(),
                        context: "number of covariance blocks",
                    });
                }
                for (k, b) in blocks.iter().enumerate() {
                    if b.nrows() != dims.per_vehicle() || b.ncols() != dims.per_vehicle() {
                        return Err(TdmError::DimensionMismatch {
                            expected: dims.per_vehicle(),
                            actual: b.nrows(),
                            context: "covariance block dimension",
                        });
                    }
                    ensure_hermitian(b, HERMITIAN_TOL, &format!("covariance block {}", k + 1))?;
                }
            }
        }
        Ok(())
    }

    /// Factors every vehicle block.
    pub fn factor(&self, dims: &Dims) -> Result<Vec<NoiseBlock>> {
        self.validate(dims)?;
        match self {
            CovarianceModel::White { noise_power } => Ok(vec![
                NoiseBlock::White {
                    dim: dims.per_vehicle(),
                    noise_power: *noise_power,
                };
                dims.k
            ]),
            CovarianceModel::BlockDiagonal { blocks } => {
                blocks.iter().map(NoiseBlock::from_matrix).collect()
            }
        }
    }

    pub(crate) fn feed_fingerprint(&self, put: &mut impl FnMut(f64)) {
        match self {
            CovarianceModel::White { noise_power } => {
                put(0.0);
                put(*noise_power);
            }
            CovarianceModel::BlockDiagonal { blocks } => {
                put(1.0);
                for b in blocks {
                    put(b.nrows() as f64);
                    for z in b.iter() {
                        put(z.re);
                        put(z.im);
                    }
                }
            }
        }
    }
}

/// A factored per-vehicle covariance block.
#[derive(Debug, Clone)]
pub enum NoiseBlock {
    White { dim: usize, noise_power: f64 },
    Dense { lower: CMatrix, inverse: CMatrix },
}

impl NoiseBlock {
    /// Cholesky-factors a Hermitian positive-definite matrix.
    pub fn from_matrix(m: &CMatrix) -> Result<Self> {
        ensure_hermitian(m, HERMITIAN_TOL, "covariance block")?;
        let chol = Cholesky::new(m.clone())
            .ok_or_else(|| TdmError::Factorization("covariance block is not positive definite".into()))?;
        let lower = chol.l();
        let diag: Vec<f64> = lower.diagonal().iter().map(|z| z.re).collect();
        let max = diag.iter().copied().fold(0.0, f64::max);
        let min = diag.iter().copied().fold(f64::INFINITY, f64::min);
        if !(min > 0.0) || (min / max).powi(2) < MIN_CONDITION_RATIO {
            return Err(TdmError::Factorization(format!(
                "covariance block is ill-conditioned (pivot ratio {:e})",
                (min / max).powi(2)
            )));
        }
        let inverse = chol.inverse();
        Ok(NoiseBlock::Dense { lower, inverse })
    }

    pub fn dim(&self) -> usize {
        match self {
            NoiseBlock::White { dim, .. } => *dim,
            NoiseBlock::Dense { lower, .. } => lower.nrows(),
        }
    }

    /// R⁻¹ v.
    pub fn solve(&self, v: &[Complex64]) -> Vec<Complex64> {
        match self {
            NoiseBlock::White { noise_power, .. } => v.iter().map(|z| z / noise_power).collect(),
            NoiseBlock::Dense { inverse, .. } => {
                let x = inverse * DVector::from_column_slice(v);
                x.as_slice().to_vec()
            }
        }
    }

    /// Dense R⁻¹.
    pub fn inverse(&self) -> CMatrix {
        match self {
            NoiseBlock::White { dim, noise_power } => {
                CMatrix::identity(*dim, *dim) * Complex64::new(1.0 / noise_power, 0.0)
            }
            NoiseBlock::Dense { inverse, .. } => inverse.clone(),
        }
    }

    /// Maps a white CN(0, I) draw to CN(0, R): returns L w with R = L Lᴴ.
    pub fn colour(&self, w: &[Complex64]) -> Vec<Complex64> {
        match self {
            NoiseBlock::White { noise_power, .. } => {
                let s = noise_power.sqrt();
                w.iter().map(|z| z * s).collect()
            }
            NoiseBlock::Dense { lower, .. } => {
                let n = lower.nrows();
                let mut out = vec![Complex64::new(0.0, 0.0); n];
                for (i, o) in out.iter_mut().enumerate() {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (j, wj) in w.iter().enumerate().take(i + 1) {
                        acc += lower[(i, j)] * wj;
                    }
                    *o = acc;
                }
                out
            }
        }
    }
}

/// A point source of interference observed through the platoon's arrays.
#[derive(Debug, Clone, PartialEq)]
pub struct InterferenceSource {
    pub position: Vec2,
    pub velocity: Vec2,
    /// Interference-to-noise ratio per element, linear.
    pub inr: f64,
}

/// R_k = σ² (I + Σ_i INR_i · v_ik v_ikᴴ), where v_ik is the space-time
/// signature the source would leave on vehicle k's unmasked steering vector.
pub fn interference_covariance(
    scenario: &Scenario,
    noise_power: f64,
    sources: &[InterferenceSource],
) -> Result<CovarianceModel> {
    if !(noise_power.is_finite() && noise_power > 0.0) {
        return Err(TdmError::InvalidArgument(format!(
            "noise power must be positive, got {noise_power}"
        )));
    }
    let dims = scenario.dims();
    let dim = dims.per_vehicle();
    let mut blocks = vec![CMatrix::identity(dim, dim); dims.k];
    for src in sources {
        if !(src.inr.is_finite() && src.inr >= 0.0) {
            return Err(TdmError::InvalidArgument(format!(
                "interference-to-noise ratio must be nonnegative, got {}",
                src.inr
            )));
        }
        let mut phantom = scenario.clone();
        phantom.covariance = CovarianceModel::white(noise_power);
        phantom.target = Target {
            position: src.position,
            velocity: src.velocity,
        };
        for (k, block) in blocks.iter_mut().enumerate() {
            let v = vehicle_steering(&phantom, k + 1)?;
            let v = DVector::from_column_slice(&v.values);
            *block += (&v * v.adjoint()) * Complex64::new(src.inr, 0.0);
        }
    }
    for b in &mut blocks {
        // Symmetrize exactly so the Hermitian check sees zero defect.
        let sym = (b.clone() + b.adjoint()) * Complex64::new(0.5 * noise_power, 0.0);
        *b = sym;
    }
    Ok(CovarianceModel::BlockDiagonal { blocks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dot_h;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn dense_block_solves_and_colours() {
        let mut m = CMatrix::identity(2, 2) * c(2.0, 0.0);
        m[(0, 1)] = c(0.5, 0.5);
        m[(1, 0)] = c(0.5, -0.5);
        let blk = NoiseBlock::from_matrix(&m).unwrap();
        let v = [c(1.0, 0.0), c(0.0, 1.0)];
        let x = blk.solve(&v);
        let back = &m * DVector::from_column_slice(&x);
        for i in 0..2 {
            assert!((back[i] - v[i]).norm() < 1e-12);
        }
        // L Lᴴ reproduces R.
        if let NoiseBlock::Dense { lower, .. } = &blk {
            let r = lower * lower.adjoint();
            assert!((r - m).iter().all(|z| z.norm() < 1e-12));
        }
    }

    #[test]
    fn indefinite_block_is_a_factorization_error() {
        let mut m = CMatrix::identity(2, 2);
        m[(1, 1)] = c(-1.0, 0.0);
        let err = NoiseBlock::from_matrix(&m).unwrap_err();
        assert!(err.is_numerical());
    }

    #[test]
    fn non_hermitian_block_rejected() {
        let mut m = CMatrix::identity(2, 2);
        m[(0, 1)] = c(0.1, 0.0);
        assert!(matches!(
            NoiseBlock::from_matrix(&m),
            Err(TdmError::InvalidArgument(_))
        ));
    }

    #[test]
    fn interference_inflates_energy_along_source() {
        let sc = crate::synth::desk_scenario();
        let src = InterferenceSource {
            position: [-20.0, 80.0],
            velocity: [0.0, -15.0],
            inr: 10.0,
        };
        let model = interference_covariance(&sc, 1.0, std::slice::from_ref(&src)).unwrap();
        let dims = sc.dims();
        let blocks = model.factor(&dims).unwrap();
        let mut phantom = sc.clone();
        phantom.target = Target { position: src.position, velocity: src.velocity };
        let v = vehicle_steering(&phantom, 1).unwrap().values;
        // vᴴ R⁻¹ v = d / (1 + INR·d) for a rank-one update with ‖v‖² = d.
        let d = dims.per_vehicle() as f64;
        let got = dot_h(&v, &blocks[0].solve(&v)).re;
        assert!((got - d / (1.0 + 10.0 * d)).abs() < 1e-9, "{got}");
    }
}
