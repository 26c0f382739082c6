//! The waveform selection matrix J: rows are pulses, columns are the K·N
//! platoon transmitters grouped by vehicle.

use std::fmt;

use crate::error::{Result, TdmError};

/// Binary L×(K·N) matrix; a one at (p, c) fires transmitter c on pulse p.
///
/// Entries are stored row-major. The type only guarantees a binary matrix;
/// [`validate_selection`] checks the schedule constraints.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SelectionMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<u8>,
}

impl SelectionMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        SelectionMatrix {
            rows,
            cols,
            entries: vec![0; rows * cols],
        }
    }

    pub fn ones(rows: usize, cols: usize) -> Self {
        SelectionMatrix {
            rows,
            cols,
            entries: vec![1; rows * cols],
        }
    }

    /// Sequential transmission: transmitter c fires on pulse c.
    pub fn identity(size: usize) -> Self {
        let mut j = Self::zeros(size, size);
        for i in 0..size {
            j.set(i, i, true);
        }
        j
    }

    /// Builds a matrix from row-major 0/1 values.
    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut entries = Vec::with_capacity(rows.len() * cols);
        for (p, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(TdmError::DimensionMismatch {
                    expected: cols,
                    actual: row.len(),
                    context: "selection matrix row length",
                });
            }
            for (c, &v) in row.iter().enumerate() {
                if v > 1 {
                    return Err(TdmError::InvalidSelection(SelectionViolation::NonBinary {
                        row: p,
                        col: c,
                    }));
                }
                entries.push(v);
            }
        }
        Ok(SelectionMatrix {
            rows: rows.len(),
            cols,
            entries,
        })
    }

    /// Square matrix with ones at (p, perm[p]).
    pub fn from_permutation(perm: &[usize]) -> Result<Self> {
        let size = perm.len();
        let mut seen = vec![false; size];
        for &c in perm {
            if c >= size || seen[c] {
                return Err(TdmError::InvalidArgument(format!(
                    "{perm:?} is not a permutation of 0..{size}"
                )));
            }
            seen[c] = true;
        }
        let mut j = Self::zeros(size, size);
        for (p, &c) in perm.iter().enumerate() {
            j.set(p, c, true);
        }
        Ok(j)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.entries[row * self.cols + col] != 0
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, on: bool) {
        self.entries[row * self.cols + col] = on as u8;
    }

    /// vec(J): columns stacked, so entry (p, c) lands at c·L + p.
    pub fn vectorize(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.rows * self.cols];
        for p in 0..self.rows {
            for c in 0..self.cols {
                if self.get(p, c) {
                    v[c * self.rows + p] = 1.0;
                }
            }
        }
        v
    }

    /// Positions of the ones in vec(J), ascending.
    pub fn support(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.rows)
            .flat_map(|p| (0..self.cols).filter(move |&c| self.get(p, c)).map(move |c| c * self.rows + p))
            .collect();
        idx.sort_unstable();
        idx
    }

    pub fn count_ones(&self) -> usize {
        self.entries.iter().map(|&e| e as usize).sum()
    }

    /// For a permutation matrix, `perm[p]` is the column selected in row p.
    pub fn to_permutation(&self) -> Option<Vec<usize>> {
        if self.rows != self.cols || validate_selection(self).is_err() {
            return None;
        }
        Some(
            (0..self.rows)
                .map(|p| (0..self.cols).find(|&c| self.get(p, c)).unwrap())
                .collect(),
        )
    }

    /// Zeroes every column belonging to a vehicle not in `active`
    /// (0-based vehicle indices, `n` transmitters per vehicle).
    pub fn silence_vehicles(&self, n: usize, active: &[usize]) -> Self {
        let mut out = self.clone();
        for c in 0..self.cols {
            if !active.contains(&(c / n)) {
                for p in 0..self.rows {
                    out.set(p, c, false);
                }
            }
        }
        out
    }
}

impl fmt::Display for SelectionMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in 0..self.rows {
            let row: Vec<&str> = (0..self.cols)
                .map(|c| if self.get(p, c) { "1" } else { "0" })
                .collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

/// First violated schedule constraint. Indices are 0-based; `Display`
/// reports them 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SelectionViolation {
    NonBinary { row: usize, col: usize },
    ColumnSum { col: usize, sum: usize },
    RowSum { row: usize, sum: usize },
}

impl fmt::Display for SelectionViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SelectionViolation::NonBinary { row, col } => {
                write!(f, "entry ({}, {}) is not 0 or 1", row + 1, col + 1)
            }
            SelectionViolation::ColumnSum { col, sum } => {
                write!(f, "column {} sums to {sum}, expected 1", col + 1)
            }
            SelectionViolation::RowSum { row, sum } => {
                write!(f, "row {} sums to {sum}, expected at most one active transmitter", row + 1)
            }
        }
    }
}

/// Checks that every transmitter fires exactly once (unit column sums) and
/// that no pulse carries more than one transmitter. When L = K·N every row
/// must carry exactly one, i.e. J is a permutation matrix.
pub fn validate_selection(j: &SelectionMatrix) -> std::result::Result<(), SelectionViolation> {
    for c in 0..j.cols {
        let sum = (0..j.rows).filter(|&p| j.get(p, c)).count();
        if sum != 1 {
            return Err(SelectionViolation::ColumnSum { col: c, sum });
        }
    }
    let square = j.rows == j.cols;
    for p in 0..j.rows {
        let sum = (0..j.cols).filter(|&c| j.get(p, c)).count();
        if sum > 1 || (square && sum != 1) {
            return Err(SelectionViolation::RowSum { row: p, sum });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_is_valid() {
        assert_eq!(validate_selection(&SelectionMatrix::identity(4)), Ok(()));
    }

    #[test]
    fn zeros_fail_on_first_column() {
        assert_eq!(
            validate_selection(&SelectionMatrix::zeros(3, 3)),
            Err(SelectionViolation::ColumnSum { col: 0, sum: 0 })
        );
        let msg = validate_selection(&SelectionMatrix::zeros(3, 3)).unwrap_err().to_string();
        assert!(msg.contains("column 1"), "{msg}");
    }

    #[test]
    fn duplicate_one_in_row_is_a_row_violation() {
        // Columns are fine (each has one 1), but row 0 fires two transmitters.
        let j = SelectionMatrix::from_rows(&[vec![1, 1, 0], vec![0, 0, 1], vec![0, 0, 0]]).unwrap();
        assert_eq!(
            validate_selection(&j),
            Err(SelectionViolation::RowSum { row: 0, sum: 2 })
        );
    }

    #[test]
    fn tall_schedule_allows_idle_pulses() {
        let j = SelectionMatrix::from_rows(&[vec![1, 0], vec![0, 0], vec![0, 1]]).unwrap();
        assert_eq!(validate_selection(&j), Ok(()));
    }

    #[test]
    fn non_binary_input_rejected() {
        assert!(SelectionMatrix::from_rows(&[vec![2]]).is_err());
    }

    /// Exhaustive: among all binary L×L matrices, exactly L! are accepted and
    /// each accepted one is a permutation.
    #[test]
    fn accepts_exactly_the_permutations() {
        for size in 1..=4usize {
            let cells = size * size;
            let mut accepted = 0usize;
            for bits in 0u32..(1 << cells) {
                let mut j = SelectionMatrix::zeros(size, size);
                for b in 0..cells {
                    j.set(b / size, b % size, bits >> b & 1 == 1);
                }
                if validate_selection(&j).is_ok() {
                    accepted += 1;
                    let perm = j.to_permutation().unwrap();
                    assert_eq!(SelectionMatrix::from_permutation(&perm).unwrap(), j);
                }
            }
            let factorial: usize = (1..=size).product();
            assert_eq!(accepted, factorial, "size {size}");
        }
    }

    #[test]
    fn vectorize_is_column_major() {
        let j = SelectionMatrix::from_permutation(&[1, 0]).unwrap();
        // J = [[0,1],[1,0]] -> vec = [0,1,1,0]
        assert_eq!(j.vectorize(), vec![0.0, 1.0, 1.0, 0.0]);
        assert_eq!(j.support(), vec![1, 2]);
    }

    #[test]
    fn silencing_zeroes_whole_vehicle_blocks() {
        let j = SelectionMatrix::identity(6);
        let s = j.silence_vehicles(2, &[0, 2]);
        assert_eq!(s.count_ones(), 4);
        assert!(!s.get(2, 2) && !s.get(3, 3));
        assert!(s.get(4, 4));
    }
}
