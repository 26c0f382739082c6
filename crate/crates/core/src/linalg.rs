//! Small dense helpers: Kronecker/Hadamard products of vectors and Hermitian
//! checks on complex matrices.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Result, TdmError};

pub type CMatrix = DMatrix<Complex64>;

/// a ⊗ b for column vectors: entry i·len(b) + j is a[i]·b[j].
pub fn kron(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        out.extend(b.iter().map(|y| x * y));
    }
    out
}

/// a ⊙ b.
pub fn hadamard(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    assert_eq!(a.len(), b.len(), "hadamard of unequal lengths");
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

/// aᴴ b.
pub fn dot_h(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Largest entry magnitude.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// max |A − Aᴴ|.
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Fails unless `m` is square and Hermitian to `rel_tol`·max|m|.
pub fn ensure_hermitian(m: &CMatrix, rel_tol: f64, what: &str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(TdmError::InvalidArgument(format!(
            "{what} is {}x{}, expected square",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(TdmError::InvalidArgument(format!("{what} has non-finite entries")));
    }
    let defect = hermitian_defect(m);
    if defect > rel_tol * max_abs(m) {
        return Err(TdmError::InvalidArgument(format!(
            "{what} is not Hermitian (max |A - A^H| = {defect:e})"
        )));
    }
    Ok(())
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Result<Vec<f64>> {
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let eig = nalgebra::linalg::SymmetricEigen::try_new(m.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| TdmError::Eigensolver(format!("no convergence on {}x{} matrix", m.nrows(), m.ncols())))?;
    let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(TdmError::Eigensolver("non-finite eigenvalue".into()));
    }
    values.sort_by(f64::total_cmp);
    Ok(values)
}
