//! Linear assignment by the Hungarian (Munkres) method with row/column
//! potentials, O(L³).

use crate::error::{Result, TdmError};
use crate::selection::SelectionMatrix;

/// Square matrix of finite real costs, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    size: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: &[Vec<f64>]) -> Result<Self> {
        let size = rows.len();
        let mut data = Vec::with_capacity(size * size);
        for row in rows {
            if row.len() != size {
                return Err(TdmError::InvalidArgument(format!(
                    "cost matrix must be square: {} rows but a row of length {}",
                    size,
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Self::from_row_major(size, data)
    }

    pub fn from_row_major(size: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != size * size {
            return Err(TdmError::DimensionMismatch {
                expected: size * size,
                actual: data.len(),
                context: "cost matrix entries",
            });
        }
        if let Some(i) = data.iter().position(|c| !c.is_finite()) {
            return Err(TdmError::InvalidArgument(format!(
                "cost ({}, {}) is not finite",
                i / size.max(1) + 1,
                i % size.max(1) + 1
            )));
        }
        Ok(CostMatrix { size, data })
    }

    pub fn from_fn(size: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let data = (0..size * size).map(|i| f(i / size, i % size)).collect();
        Self::from_row_major(size, data)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.size + col]
    }

    /// Σ_p cost[p][perm[p]].
    pub fn evaluate(&self, perm: &[usize]) -> f64 {
        perm.iter().enumerate().map(|(p, &c)| self.get(p, c)).sum()
    }
}

/// `permutation[p] = c` assigns row p to column c (0-based).
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub permutation: Vec<usize>,
    pub objective_value: f64,
}

/// Minimum-cost perfect matching of rows to columns.
///
/// Each row is first shifted by its minimum so the reduced costs start
/// nonnegative; the returned objective is evaluated on the original costs.
/// Ties resolve to the lowest column index, so results are reproducible.
pub fn hungarian_min(cost: &CostMatrix) -> Result<Assignment> {
    let n = cost.size;
    if n == 0 {
        return Err(TdmError::InvalidArgument("cost matrix is empty".into()));
    }

    let mut a = cost.data.clone();
    for row in a.chunks_mut(n) {
        let min = row.iter().copied().fold(f64::INFINITY, f64::min);
        row.iter_mut().for_each(|c| *c -= min);
    }
    let at = |i: usize, j: usize| a[(i - 1) * n + (j - 1)];

    // 1-based potentials; column 0 is the virtual root of each search tree.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of_col = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut min_slack = vec![0.0; n + 1];
    let mut used = vec![false; n + 1];

    for i in 1..=n {
        row_of_col[0] = i;
        let mut j0 = 0usize;
        min_slack.iter_mut().for_each(|m| *m = f64::INFINITY);
        used.iter_mut().for_each(|x| *x = false);
        loop {
            used[j0] = true;
            let i0 = row_of_col[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = at(i0, j) - u[i0] - v[j];
                if cur < min_slack[j] {
                    min_slack[j] = cur;
                    way[j] = j0;
                }
                if min_slack[j] < delta {
                    delta = min_slack[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_slack[j] -= delta;
                }
            }
            j0 = j1;
            if row_of_col[j0] == 0 {
                break;
            }
        }
        // Flip the augmenting path back to the root.
        loop {
            let j1 = way[j0];
            row_of_col[j0] = row_of_col[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut permutation = vec![0usize; n];
    for j in 1..=n {
        permutation[row_of_col[j] - 1] = j - 1;
    }
    let objective_value = cost.evaluate(&permutation);
    Ok(Assignment {
        permutation,
        objective_value,
    })
}

/// Permutation matrix with ones at (p, σ(p)).
pub fn assignment_to_matrix(a: &Assignment, size: usize) -> Result<SelectionMatrix> {
    if a.permutation.len() != size {
        return Err(TdmError::DimensionMismatch {
            expected: size,
            actual: a.permutation.len(),
            context: "assignment length",
        });
    }
    SelectionMatrix::from_permutation(&a.permutation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::selection::validate_selection;
    use proptest::prelude::*;

    /// Exhaustive minimum over all permutations (Heap's algorithm).
    fn brute_force_min(cost: &CostMatrix) -> f64 {
        let n = cost.size();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut best = cost.evaluate(&perm);
        let mut c = vec![0usize; n];
        let mut i = 0;
        while i < n {
            if c[i] < i {
                if i % 2 == 0 {
                    perm.swap(0, i);
                } else {
                    perm.swap(c[i], i);
                }
                best = best.min(cost.evaluate(&perm));
                c[i] += 1;
                i = 0;
            } else {
                c[i] = 0;
                i += 1;
            }
        }
        best
    }

    #[test]
    fn negative_identity() {
        let cost = CostMatrix::from_fn(3, |i, j| if i == j { -1.0 } else { 0.0 }).unwrap();
        let a = hungarian_min(&cost).unwrap();
        assert_eq!(a.permutation, vec![0, 1, 2]);
        assert_eq!(a.objective_value, -3.0);
    }

    #[test]
    fn textbook_three_by_three() {
        let cost = CostMatrix::new(&[vec![4.0, 1.0, 3.0], vec![2.0, 0.0, 5.0], vec![3.0, 2.0, 2.0]]).unwrap();
        assert_eq!(brute_force_min(&cost), 5.0);
        let a = hungarian_min(&cost).unwrap();
        assert_eq!(a.objective_value, 5.0);
        assert_eq!(a.permutation, vec![1, 0, 2]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(CostMatrix::new(&[vec![1.0, 2.0]]).is_err());
        assert!(CostMatrix::new(&[vec![f64::NAN]]).is_err());
        assert!(hungarian_min(&CostMatrix::new(&[]).unwrap()).is_err());
    }

    #[test]
    fn ties_are_deterministic() {
        let cost = CostMatrix::from_fn(4, |_, _| 1.0).unwrap();
        let a = hungarian_min(&cost).unwrap();
        assert_eq!(a, hungarian_min(&cost).unwrap());
        assert_eq!(a.objective_value, 4.0);
    }

    #[test]
    fn matrix_conversion() {
        let id = Assignment { permutation: vec![0, 1, 2], objective_value: 0.0 };
        assert_eq!(assignment_to_matrix(&id, 3).unwrap(), SelectionMatrix::identity(3));
        let swap = Assignment { permutation: vec![1, 0], objective_value: 0.0 };
        let m = assignment_to_matrix(&swap, 2).unwrap();
        assert!(m.get(0, 1) && m.get(1, 0) && !m.get(0, 0));
        let bad = Assignment { permutation: vec![0, 0], objective_value: 0.0 };
        assert!(assignment_to_matrix(&bad, 2).is_err());
        assert!(assignment_to_matrix(&id, 4).is_err());
    }

    #[test]
    fn large_instance_is_fast() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let cost = CostMatrix::from_fn(200, |_, _| rng.random_range(-1.0..1.0)).unwrap();
        let t = std::time::Instant::now();
        let a = hungarian_min(&cost).unwrap();
        assert!(t.elapsed().as_secs_f64() < 1.0);
        assert!(validate_selection(&assignment_to_matrix(&a, 200).unwrap()).is_ok());
    }

    fn cost_strategy() -> impl Strategy<Value = CostMatrix> {
        (1usize..=6).prop_flat_map(|n| {
            prop::collection::vec(-1.0f64..1.0, n * n)
                .prop_map(move |d| CostMatrix::from_row_major(n, d).unwrap())
        })
    }

    proptest! {
        #[test]
        fn matches_brute_force(cost in cost_strategy()) {
            let a = hungarian_min(&cost).unwrap();
            prop_assert!((a.objective_value - brute_force_min(&cost)).abs() <= 1e-12);
            prop_assert!(validate_selection(&assignment_to_matrix(&a, cost.size()).unwrap()).is_ok());
        }

        #[test]
        fn row_and_column_shifts_keep_optimality(
            cost in cost_strategy(), shift in -5.0f64..5.0, pick in 0usize..6, by_col in any::<bool>()
        ) {
            let n = cost.size();
            let t = pick % n;
            let shifted = CostMatrix::from_fn(n, |i, j| {
                cost.get(i, j) + if (by_col && j == t) || (!by_col && i == t) { shift } else { 0.0 }
            }).unwrap();
            let a = hungarian_min(&cost).unwrap();
            let b = hungarian_min(&shifted).unwrap();
            prop_assert!((b.objective_value - (a.objective_value + shift)).abs() <= 1e-12);
            // The original argmin stays optimal for the shifted matrix.
            prop_assert!((shifted.evaluate(&a.permutation) - b.objective_value).abs() <= 1e-12);
        }
    }
}
