//! Independent brute-force reference: enumerates every monomer-dimer tiling
//! of a small rectangle by recursive cell-by-cell fill.
//!
//! This module deliberately shares no code or conventions with the transfer
//! engine: it scans cells row-major over an explicit occupancy grid, while
//! the engine sweeps columns over boundary bitmasks. Agreement between the
//! two is the central cross-check of the crate.

use num_bigint::BigUint;
use thiserror::Error;

/// Hard cap on the board size; this is a test oracle, not a solver.
pub const MAX_CELLS: usize = 30;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("board {rows}x{cols} exceeds the {MAX_CELLS}-cell enumeration cap")]
    TooLarge { rows: usize, cols: usize },
    #[error("board dimensions must be positive")]
    EmptyBoard,
}

/// Tiling counts of an `rows x cols` rectangle, indexed by dimer count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TilingCensus {
    pub rows: usize,
    pub cols: usize,
    /// `counts[s]` = number of tilings using exactly `s` dimers,
    /// `s = 0 ..= floor(rows*cols/2)`.
    pub counts: Vec<BigUint>,
}

impl TilingCensus {
    /// Total number of tilings (all dimer counts).
    pub fn total(&self) -> BigUint {
        self.counts.iter().sum()
    }
}

/// Counts monomer-dimer tilings of the rectangle by dimer count.
///
/// The first uncovered cell (row-major order) is covered in all possible
/// ways: by a monomer, by a dimer extending right, or by a dimer extending
/// down; recursion does the rest.
pub fn enumerate(rows: usize, cols: usize) -> Result<TilingCensus, OracleError> {
    if rows == 0 || cols == 0 {
        return Err(OracleError::EmptyBoard);
    }
    let cells = rows * cols;
    if cells > MAX_CELLS {
        return Err(OracleError::TooLarge { rows, cols });
    }
    let mut counts = vec![0u64; cells / 2 + 1];
    let mut occupied = vec![false; cells];
    fill(rows, cols, 0, 0, &mut occupied, &mut counts);
    Ok(TilingCensus {
        rows,
        cols,
        counts: counts.into_iter().map(BigUint::from).collect(),
    })
}

fn fill(
    rows: usize,
    cols: usize,
    from: usize,
    dimers: usize,
    occupied: &mut [bool],
    counts: &mut [u64],
) {
    let mut pos = from;
    while pos < rows * cols && occupied[pos] {
        pos += 1;
    }
    if pos == rows * cols {
        counts[dimers] += 1;
        return;
    }
    let (r, c) = (pos / cols, pos % cols);
    occupied[pos] = true;
    // Monomer.
    fill(rows, cols, pos + 1, dimers, occupied, counts);
    // Dimer extending right.
    if c + 1 < cols && !occupied[pos + 1] {
        occupied[pos + 1] = true;
        fill(rows, cols, pos + 1, dimers + 1, occupied, counts);
        occupied[pos + 1] = false;
    }
    // Dimer extending down.
    if r + 1 < rows {
        occupied[pos + cols] = true;
        fill(rows, cols, pos + 1, dimers + 1, occupied, counts);
        occupied[pos + cols] = false;
    }
    occupied[pos] = false;
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(rows: usize, cols: usize) -> Vec<u64> {
        enumerate(rows, cols)
            .unwrap()
            .counts
            .iter()
            .map(|c| u64::try_from(c).unwrap())
            .collect()
    }

    #[test]
    fn tiny_boards() {
        assert_eq!(counts(1, 1), vec![1]);
        assert_eq!(counts(1, 2), vec![1, 1]);
        assert_eq!(counts(2, 2), vec![1, 4, 2]);
        assert_eq!(counts(2, 3), vec![1, 7, 11, 3]);
    }

    #[test]
    fn single_dimer_count_is_edge_count() {
        for rows in 1..=5 {
            for cols in 1..=5 {
                if rows * cols > MAX_CELLS || rows * cols < 2 {
                    continue;
                }
                let census = enumerate(rows, cols).unwrap();
                let edges = 2 * rows * cols - rows - cols;
                assert_eq!(census.counts[1], BigUint::from(edges));
                assert_eq!(census.counts[0], BigUint::from(1u32));
            }
        }
    }

    #[test]
    fn transpose_symmetry() {
        for (rows, cols) in [(2, 3), (3, 4), (2, 5), (1, 6)] {
            let a = enumerate(rows, cols).unwrap();
            let b = enumerate(cols, rows).unwrap();
            assert_eq!(a.counts, b.counts);
        }
    }

    #[test]
    fn rejects_large_and_empty_boards() {
        assert!(matches!(
            enumerate(6, 6),
            Err(OracleError::TooLarge { .. })
        ));
        assert_eq!(enumerate(0, 3), Err(OracleError::EmptyBoard));
    }
}
