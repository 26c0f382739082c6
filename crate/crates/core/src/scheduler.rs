//! TDM schedule design as a quadratic assignment problem.
//!
//! The detection mean is the quadratic form vec(J)ᴴ S vec(J) with
//! S = Gᴴ Q G, Q = Diag(s)ᴴ R⁻¹ Diag(s) and G = I ⊗ 1_M (the M-fold
//! repetition of each schedule slot). After diagonal loading makes S
//! positive semidefinite, each iteration projects S̄·vec(J) back onto the
//! permutation matrices with one Hungarian solve, which never decreases the
//! objective.

use std::io::Write;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::assignment::{assignment_to_matrix, hungarian_min, CostMatrix};
use crate::covariance::NoiseBlock;
use crate::error::{Result, TdmError};
use crate::linalg::{ensure_hermitian, hermitian_eigenvalues, CMatrix};
use crate::matfile;
use crate::scenario::{Dims, Scenario};
use crate::selection::{validate_selection, SelectionMatrix};
use crate::steering::{stacked_steering, SteeringVector};

/// Relative Hermitian tolerance for S.
pub const S_HERMITIAN_TOL: f64 = 1e-10;
/// ε_load = LOAD_FACTOR · ‖S‖₂.
pub const LOAD_FACTOR: f64 = 1e-9;

/// One vehicle block of Q, (N·L·M)².
#[derive(Debug, Clone, PartialEq)]
pub enum QBlock {
    /// Diagonal blocks arise from white noise: Q_k = Diag(|s_k|²)/σ².
    Diagonal(Vec<f64>),
    Dense(CMatrix),
}

impl QBlock {
    pub fn dim(&self) -> usize {
        match self {
            QBlock::Diagonal(d) => d.len(),
            QBlock::Dense(m) => m.nrows(),
        }
    }

    pub fn to_dense(&self) -> CMatrix {
        match self {
            QBlock::Diagonal(d) => CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                d.len(),
                d.iter().map(|&x| Complex64::new(x, 0.0)),
            )),
            QBlock::Dense(m) => m.clone(),
        }
    }
}

/// Q in block-diagonal form; the full K·N·L·M square is never materialized.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockQ {
    pub blocks: Vec<QBlock>,
}

impl BlockQ {
    pub fn dim(&self) -> usize {
        self.blocks.iter().map(QBlock::dim).sum()
    }

    /// Dense Q. Only meant for small problems and tests.
    pub fn to_dense(&self) -> CMatrix {
        let n = self.dim();
        let mut out = CMatrix::zeros(n, n);
        let mut off = 0;
        for b in &self.blocks {
            let d = b.dim();
            out.view_mut((off, off), (d, d)).copy_from(&b.to_dense());
            off += d;
        }
        out
    }
}

/// Q = Diag(s)ᴴ R⁻¹ Diag(s), one block per vehicle.
pub fn build_q(s: &SteeringVector, noise: &[NoiseBlock]) -> Result<BlockQ> {
    let dims = s.dims;
    if noise.len() != dims.k {
        return Err(TdmError::DimensionMismatch {
            expected: dims.k,
            actual: noise.len(),
            context: "covariance blocks",
        });
    }
    if s.len() != dims.stacked() {
        return Err(TdmError::DimensionMismatch {
            expected: dims.stacked(),
            actual: s.len(),
            context: "steering vector length",
        });
    }
    let mut blocks = Vec::with_capacity(dims.k);
    for (k, r) in noise.iter().enumerate() {
        if r.dim() != dims.per_vehicle() {
            return Err(TdmError::DimensionMismatch {
                expected: dims.per_vehicle(),
                actual: r.dim(),
                context: "covariance block dimension",
            });
        }
        let sk = s.vehicle(k);
        let block = match r {
            NoiseBlock::White { noise_power, .. } => {
                QBlock::Diagonal(sk.iter().map(|z| z.norm_sqr() / noise_power).collect())
            }
            NoiseBlock::Dense { inverse, .. } => {
                let n = sk.len();
                QBlock::Dense(CMatrix::from_fn(n, n, |i, j| {
                    sk[i].conj() * inverse[(i, j)] * sk[j]
                }))
            }
        };
        blocks.push(block);
    }
    Ok(BlockQ { blocks })
}

/// A Hermitian (K·N·L)² objective matrix, possibly diagonally loaded.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    pub matrix: CMatrix,
    /// Total loading added to the unloaded S.
    pub lambda_m: f64,
    pub dims: Dims,
    /// True when S = Blkdiag(S_1, …, S_K) with (N·L)² blocks.
    block_diagonal: bool,
}

impl QuadraticForm {
    /// Wraps an arbitrary Hermitian matrix of size (K·N·L)².
    pub fn from_matrix(matrix: CMatrix, dims: Dims) -> Result<Self> {
        if matrix.nrows() != dims.schedule_len() {
            return Err(TdmError::DimensionMismatch {
                expected: dims.schedule_len(),
                actual: matrix.nrows(),
                context: "quadratic form dimension",
            });
        }
        ensure_hermitian(&matrix, S_HERMITIAN_TOL, "S")?;
        let b = dims.n * dims.l;
        let block_diagonal = (0..matrix.nrows())
            .all(|i| (0..matrix.ncols()).all(|j| i / b == j / b || matrix[(i, j)] == Complex64::new(0.0, 0.0)));
        Ok(QuadraticForm {
            matrix,
            lambda_m: 0.0,
            dims,
            block_diagonal,
        })
    }

    /// Eigenvalues of the form, ascending. Block-diagonal forms are
    /// decomposed block by block.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        if !self.block_diagonal || self.dims.k == 1 {
            return hermitian_eigenvalues(&self.matrix);
        }
        let b = self.dims.n * self.dims.l;
        let mut all = Vec::with_capacity(self.matrix.nrows());
        for k in 0..self.dims.k {
            let blk = self.matrix.view((k * b, k * b), (b, b)).into_owned();
            all.extend(hermitian_eigenvalues(&blk)?);
        }
        all.sort_by(f64::total_cmp);
        Ok(all)
    }

    /// Writes S̄ in the sidecar matrix format.
    pub fn dump<W: Write>(&self, writer: W) -> Result<()> {
        matfile::write_blocks(writer, std::slice::from_ref(&self.matrix))
    }
}

/// S = Gᴴ Q G with per-vehicle weights: block k is
/// S_k[a][b] = w_k · Σ_{m,m'} Q_k[a·M + m][b·M + m'].
///
/// An empty `weights` slice means unit weights. With w_k = 2|α_k|² the form
/// equals Σ_k 2|α_k|²·C_k, the target-dependent part of the detection mean.
pub fn build_s_matrix(q: &BlockQ, dims: Dims, weights: &[f64]) -> Result<QuadraticForm> {
    if q.blocks.len() != dims.k || q.blocks.iter().any(|b| b.dim() != dims.per_vehicle()) {
        return Err(TdmError::DimensionMismatch {
            expected: dims.stacked(),
            actual: q.dim(),
            context: "Q dimension",
        });
    }
    if !weights.is_empty() && weights.len() != dims.k {
        return Err(TdmError::DimensionMismatch {
            expected: dims.k,
            actual: weights.len(),
            context: "vehicle weights",
        });
    }
    let nl = dims.n * dims.l;
    let m = dims.m;
    let mut s = CMatrix::zeros(dims.schedule_len(), dims.schedule_len());
    for (k, block) in q.blocks.iter().enumerate() {
        let w = weights.get(k).copied().unwrap_or(1.0);
        let off = k * nl;
        match block {
            QBlock::Diagonal(d) => {
                for a in 0..nl {
                    let sum: f64 = d[a * m..(a + 1) * m].iter().sum();
                    s[(off + a, off + a)] = Complex64::new(w * sum, 0.0);
                }
            }
            QBlock::Dense(qk) => {
                for a in 0..nl {
                    for b in 0..nl {
                        let mut acc = Complex64::new(0.0, 0.0);
                        for i in 0..m {
                            for j in 0..m {
                                acc += qk[(a * m + i, b * m + j)];
                            }
                        }
                        s[(off + a, off + b)] = acc * w;
                    }
                }
            }
        }
    }
    // Remove rounding asymmetry so S is exactly Hermitian.
    let s = (&s + s.adjoint()) * Complex64::new(0.5, 0.0);
    QuadraticForm::from_matrix(s, dims)
}

/// Unloaded S for a scenario: stacked steering, factored covariance, Q, S.
pub fn scenario_quadratic_form(scenario: &Scenario, weights: &[f64]) -> Result<QuadraticForm> {
    let s = stacked_steering(scenario)?;
    let noise = scenario.covariance.factor(&s.dims)?;
    let q = build_q(&s, &noise)?;
    build_s_matrix(&q, s.dims, weights)
}

/// S̄ = λ_m I + S with λ_m = max(0, −λ_min(S)) + ε_load.
///
/// Over permutation matrices vec(J)ᴴvec(J) = L, so loading shifts every
/// objective by λ_m·L and leaves the maximizers unchanged.
pub fn diagonal_load(s: &QuadraticForm) -> Result<QuadraticForm> {
    let eig = s.eigenvalues()?;
    let lambda_min = eig.first().copied().unwrap_or(0.0);
    let spectral = eig.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let lambda = (-lambda_min).max(0.0) + LOAD_FACTOR * spectral;
    let mut out = s.clone();
    for i in 0..out.matrix.nrows() {
        out.matrix[(i, i)] += Complex64::new(lambda, 0.0);
    }
    out.lambda_m += lambda;
    Ok(out)
}

fn check_schedule_dims(form: &QuadraticForm, j: &SelectionMatrix) -> Result<()> {
    let d = form.dims;
    if j.rows() != d.l || j.cols() != d.transmitters() {
        return Err(TdmError::DimensionMismatch {
            expected: d.l * d.transmitters(),
            actual: j.rows() * j.cols(),
            context: "selection matrix must be L x (K*N)",
        });
    }
    Ok(())
}

/// vec(J)ᴴ S vec(J) as a complex number; the imaginary part is rounding.
pub fn quadratic_value(form: &QuadraticForm, j: &SelectionMatrix) -> Result<Complex64> {
    check_schedule_dims(form, j)?;
    let support = j.support();
    let mut acc = Complex64::new(0.0, 0.0);
    for &a in &support {
        for &b in &support {
            acc += form.matrix[(a, b)];
        }
    }
    Ok(acc)
}

/// f(J) = vec(J)ᴴ S vec(J).
pub fn objective(form: &QuadraticForm, j: &SelectionMatrix) -> Result<f64> {
    quadratic_value(form, j).map(|z| z.re)
}

/// Outcome of one or more power-method-like runs.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleResult {
    pub j_opt: SelectionMatrix,
    /// f(J⁽⁰⁾), f(J⁽¹⁾), … for the reported run.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Index of the restart that produced `j_opt` (0 = identity start).
    pub restart: usize,
}

impl ScheduleResult {
    pub fn final_objective(&self) -> f64 {
        *self.objective_trace.last().expect("trace holds the initial value")
    }

    /// Writes the objective trace, one value per line.
    pub fn dump_trace<W: Write>(&self, mut writer: W) -> Result<()> {
        for f in &self.objective_trace {
            writeln!(writer, "{f:e}")?;
        }
        Ok(())
    }
}

/// One projection step: the permutation maximizing Re vec(J')ᴴ S̄ vec(J).
pub fn project_step(form: &QuadraticForm, j: &SelectionMatrix) -> Result<SelectionMatrix> {
    let size = form.dims.l;
    let support = j.support();
    // C = −unvec_{L,L}(S̄ vec(J)); only its real part reaches the real vec(J').
    let cost = CostMatrix::from_fn(size, |p, c| {
        let row = c * size + p;
        -support.iter().map(|&b| form.matrix[(row, b)].re).sum::<f64>()
    })?;
    let a = hungarian_min(&cost)?;
    assignment_to_matrix(&a, size)
}

/// Power-method-like iterations from `j0` until the relative objective
/// change drops below `epsilon` or `max_iter` projections have run.
pub fn power_iterations(
    form: &QuadraticForm,
    j0: &SelectionMatrix,
    epsilon: f64,
    max_iter: usize,
) -> Result<ScheduleResult> {
    let d = form.dims;
    if d.l != d.transmitters() {
        return Err(TdmError::InvalidArgument(format!(
            "permutation scheduling needs L = K*N, got L = {} and K*N = {}",
            d.l,
            d.transmitters()
        )));
    }
    if !(epsilon > 0.0) {
        return Err(TdmError::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    if max_iter == 0 {
        return Err(TdmError::InvalidArgument("max_iter must be at least 1".into()));
    }
    check_schedule_dims(form, j0)?;
    validate_selection(j0).map_err(TdmError::InvalidSelection)?;

    let mut current = j0.clone();
    let mut trace = vec![objective(form, &current)?];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        let next = project_step(form, &current)?;
        let f_prev = *trace.last().unwrap();
        let f_next = objective(form, &next)?;
        trace.push(f_next);
        iterations += 1;
        current = next;
        if f_prev == 0.0 || ((f_next - f_prev) / f_prev).abs() < epsilon {
            converged = true;
            break;
        }
    }
    Ok(ScheduleResult {
        j_opt: current,
        objective_trace: trace,
        iterations,
        converged,
        restart: 0,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleOptions {
    pub epsilon: f64,
    pub max_iter: usize,
    /// Number of starts; the first is always the identity schedule.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for ScheduleOptions {
    fn default() -> Self {
        ScheduleOptions {
            epsilon: 1e-6,
            max_iter: 100,
            restarts: 1,
            seed: 0,
        }
    }
}

/// Starting permutations: identity first, then seeded random permutations,
/// avoiding repeats while distinct ones remain.
pub fn initial_schedules(size: usize, restarts: usize, seed: u64) -> Vec<SelectionMatrix> {
    let mut starts = vec![SelectionMatrix::identity(size)];
    let mut perm: Vec<usize> = (0..size).collect();
    for r in 1..restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(r as u64);
        let mut candidate = SelectionMatrix::identity(size);
        for _ in 0..64 {
            perm.shuffle(&mut rng);
            candidate = SelectionMatrix::from_permutation(&perm).expect("shuffle keeps a permutation");
            if !starts.contains(&candidate) {
                break;
            }
        }
        starts.push(candidate);
    }
    starts
}

/// Runs [`power_iterations`] from every start (in parallel) and keeps the
/// best final objective, lowest restart index on ties.
pub fn optimize_schedule(form: &QuadraticForm, options: &ScheduleOptions) -> Result<ScheduleResult> {
    let starts = initial_schedules(form.dims.l, options.restarts.max(1), options.seed);
    let runs: Vec<ScheduleResult> = starts
        .par_iter()
        .enumerate()
        .map(|(r, j0)| {
            power_iterations(form, j0, options.epsilon, options.max_iter).map(|mut res| {
                res.restart = r;
                res
            })
        })
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (r, run) in runs.iter().enumerate().skip(1) {
        if run.final_objective() > runs[best].final_objective() {
            best = r;
        }
    }
    Ok(runs.into_iter().nth(best).unwrap())
}
