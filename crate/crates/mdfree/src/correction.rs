//! C-finite recurrence guessing over the residual sequences and application
//! of the predicted corrections to a combination result.
//!
//! A guessed recurrence is fitted by an exact linear solve on a window of
//! the data (trying orders from 1 upward) and is accepted only if it
//! reproduces every remaining term, of which at least `verify_count` must
//! be available beyond the fitting window.

use num_traits::Zero;
use thiserror::Error;

use crate::coeff::{CoeffError, CoeffField, Rat};
use crate::limit::ComboResult;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CorrectionError {
    #[error("no linear recurrence of order <= {max_order} fits the data")]
    NoRecurrenceFound { max_order: usize },
    #[error("guessing order {max_order} with {verify_count} checks needs {needed} terms, got {got}")]
    InsufficientData {
        max_order: usize,
        verify_count: usize,
        needed: usize,
        got: usize,
    },
    #[error("correction level {requested} requested but only {available} available")]
    LevelUnavailable { requested: usize, available: usize },
    #[error("invalid recurrence: {0}")]
    BadRecurrence(String),
    #[error(transparent)]
    Coeff(#[from] CoeffError),
}

/// A linear recurrence with constant coefficients together with the initial
/// segment of the sequence it generates:
/// `u[n+r] = c[1] u[n+r-1] + ... + c[r] u[n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Recurrence {
    coeffs: Vec<Rat>,
    initial: Vec<Rat>,
}

impl Recurrence {
    pub fn new(coeffs: Vec<Rat>, initial: Vec<Rat>) -> Result<Self, CorrectionError> {
        if coeffs.is_empty() {
            return Err(CorrectionError::BadRecurrence("order zero".into()));
        }
        if coeffs.len() != initial.len() {
            return Err(CorrectionError::BadRecurrence(format!(
                "{} coefficients but {} initial terms",
                coeffs.len(),
                initial.len()
            )));
        }
        Ok(Self { coeffs, initial })
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[Rat] {
        &self.coeffs
    }

    pub fn initial(&self) -> &[Rat] {
        &self.initial
    }

    /// The first `count` terms of the generated sequence.
    pub fn sequence(&self, count: usize) -> Vec<Rat> {
        let mut out: Vec<Rat> = self.initial.iter().take(count).cloned().collect();
        while out.len() < count {
            let n = out.len();
            let mut next = Rat::zero();
            for (i, c) in self.coeffs.iter().enumerate() {
                next += c * &out[n - 1 - i];
            }
            out.push(next);
        }
        out
    }

    /// The `count` terms immediately after the stored initial segment.
    pub fn extend(&self, count: usize) -> Vec<Rat> {
        self.sequence(self.order() + count)
            .split_off(self.order())
    }

    /// Term at a given 0-based index of the generated sequence.
    pub fn term(&self, index: usize) -> Rat {
        self.sequence(index + 1).pop().expect("nonempty")
    }

    /// Whether every term of `data` beyond the first `order` obeys the
    /// relation (the prefix is taken as given).
    pub fn satisfied_by(&self, data: &[Rat]) -> bool {
        let r = self.order();
        if data.len() < r {
            return false;
        }
        for n in r..data.len() {
            let mut acc = Rat::zero();
            for (i, c) in self.coeffs.iter().enumerate() {
                acc += c * &data[n - 1 - i];
            }
            if acc != data[n] {
                return false;
            }
        }
        true
    }
}

/// Finds the minimal-order recurrence fitting `data`, trying orders from 1
/// to `max_order`. The candidate is fitted on the first `2r` terms and must
/// reproduce every later term; `data` must hold at least `verify_count`
/// terms beyond the largest fitting window.
pub fn guess(
    data: &[Rat],
    max_order: usize,
    verify_count: usize,
) -> Result<Recurrence, CorrectionError> {
    let needed = 2 * max_order + verify_count;
    if data.len() < needed {
        return Err(CorrectionError::InsufficientData {
            max_order,
            verify_count,
            needed,
            got: data.len(),
        });
    }
    for order in 1..=max_order {
        // Rows t = 0..order: sum_i c_i u[t+order-i] = u[t+order].
        let matrix: Vec<Vec<Rat>> = (0..order)
            .map(|t| (0..order).map(|i| data[t + order - 1 - i].clone()).collect())
            .collect();
        let rhs: Vec<Rat> = (0..order).map(|t| data[t + order].clone()).collect();
        let Some(coeffs) = solve_exact(matrix, rhs) else {
            continue;
        };
        let candidate = Recurrence::new(coeffs, data[..order].to_vec())?;
        if candidate.satisfied_by(data) {
            return Ok(candidate);
        }
    }
    Err(CorrectionError::NoRecurrenceFound { max_order })
}

/// Exact Gaussian elimination. Returns a particular solution, or `None`
/// when the system is inconsistent.
fn solve_exact(mut a: Vec<Vec<Rat>>, mut b: Vec<Rat>) -> Option<Vec<Rat>> {
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    let mut pivot_of_col: Vec<Option<usize>> = vec![None; cols];
    let mut rank = 0;
    for col in 0..cols {
        let Some(pivot) = (rank..rows).find(|&r| !a[r][col].is_zero()) else {
            continue;
        };
        a.swap(rank, pivot);
        b.swap(rank, pivot);
        let inv = a[rank][col].recip();
        for x in a[rank].iter_mut() {
            *x *= &inv;
        }
        b[rank] *= &inv;
        for r in 0..rows {
            if r == rank || a[r][col].is_zero() {
                continue;
            }
            let factor = a[r][col].clone();
            for c in 0..cols {
                let t = &factor * &a[rank][c];
                a[r][c] -= t;
            }
            let t = &factor * &b[rank];
            b[r] -= t;
        }
        pivot_of_col[col] = Some(rank);
        rank += 1;
        if rank == rows {
            break;
        }
    }
    // Inconsistent if a zeroed row has nonzero right-hand side.
    for r in rank..rows {
        if !b[r].is_zero() {
            return None;
        }
    }
    let mut solution = vec![Rat::zero(); cols];
    for (col, pivot) in pivot_of_col.iter().enumerate() {
        if let Some(r) = pivot {
            solution[col] = b[*r].clone();
        }
    }
    Some(solution)
}

/// Replaces the first `levels` coefficients beyond the combination's valid
/// order with the recurrence-predicted values: the coefficient of
/// `z^(N-2+level)` gains the residual the level-`level` sequence predicts
/// at combination index `N`. Recurrence `level` generates residuals for
/// indices `N = 4, 5, ...` starting at sequence position 0.
pub fn apply_corrections<F: CoeffField>(
    base: &ComboResult<F>,
    recurrences: &[Recurrence],
    levels: usize,
) -> Result<ComboResult<F>, CorrectionError> {
    if levels > recurrences.len() {
        return Err(CorrectionError::LevelUnavailable {
            requested: levels,
            available: recurrences.len(),
        });
    }
    let mut series = base.series.clone();
    let field = series.field().clone();
    let position = base.combo_index - 4;
    for level in 1..=levels {
        let degree = base.combo_index - 2 + level;
        if degree >= series.cutoff() {
            // The correction targets a degree beyond the stored range.
            continue;
        }
        let residual = recurrences[level - 1].term(position);
        let shift = field.from_rat(&residual)?;
        let corrected = field.add(series.coeff(degree), &shift);
        series.set_coeff(degree, corrected);
    }
    Ok(ComboResult {
        combo_index: base.combo_index,
        series,
        valid_order: base.valid_order + levels,
    })
}
