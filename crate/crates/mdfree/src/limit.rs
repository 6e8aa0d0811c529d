//! Thermodynamic-limit extraction: diagonal sums of log partition
//! functions, their third-difference combination (exact through degree
//! `N-2`), and the residual sequences that drive the correction terms.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::coeff::{CoeffField, Rat, Rationals};
use crate::series::{log_unit, Series, SeriesError};
use crate::transfer::{compute_theta, StepOptions, ThetaTable, TransferError};

#[derive(Debug, Error)]
pub enum LimitError {
    #[error("combination index {0} must be at least 4")]
    ComboIndexTooSmall(usize),
    #[error("diagonal sum index {0} must be at least 2")]
    SumIndexTooSmall(usize),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error(transparent)]
    Transfer(#[from] TransferError),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// Supplies truncated partition functions for requested board shapes.
pub trait ThetaSource<F: CoeffField> {
    fn field(&self) -> F;
    fn cutoff(&self) -> usize;
    /// Partition function of the `rows x cols` board modulo `z^cutoff`.
    fn theta(&mut self, rows: u32, cols: u32) -> Result<Series<F>, LimitError>;
}

/// A [`ThetaSource`] that runs the transfer engine once per row count and
/// memoizes the resulting table, serving the transposed shape from the same
/// entry.
pub struct CachedThetaSource<F: CoeffField> {
    field: F,
    cutoff: usize,
    /// Largest supported `rows + cols`.
    max_sum: u32,
    opts: StepOptions,
    tables: BTreeMap<u32, ThetaTable<F>>,
}

impl<F: CoeffField> CachedThetaSource<F> {
    pub fn new(field: F, cutoff: usize, max_sum: u32, opts: StepOptions) -> Self {
        Self {
            field,
            cutoff,
            max_sum,
            opts,
            tables: BTreeMap::new(),
        }
    }

    pub fn max_sum(&self) -> u32 {
        self.max_sum
    }
}

impl<F: CoeffField> ThetaSource<F> for CachedThetaSource<F> {
    fn field(&self) -> F {
        self.field.clone()
    }

    fn cutoff(&self) -> usize {
        self.cutoff
    }

    fn theta(&mut self, rows: u32, cols: u32) -> Result<Series<F>, LimitError> {
        let (r, c) = (rows.min(cols), rows.max(cols));
        if r == 0 {
            return Err(LimitError::InsufficientData(
                "board dimensions must be positive".into(),
            ));
        }
        if r + c > self.max_sum {
            return Err(LimitError::InsufficientData(format!(
                "{rows}x{cols} exceeds the configured size budget (max sum {})",
                self.max_sum
            )));
        }
        if !self.tables.contains_key(&r) {
            let table = compute_theta(&self.field, r, self.max_sum - r, self.cutoff, &self.opts)?;
            self.tables.insert(r, table);
        }
        let table = &self.tables[&r];
        Ok(table
            .get(c)
            .expect("table sized to max_sum covers the request")
            .clone())
    }
}

/// `S_M`: the sum of `log theta` over all boards with `rows + cols = M`.
pub fn s_sum<F: CoeffField>(
    sum_index: usize,
    source: &mut dyn ThetaSource<F>,
) -> Result<Series<F>, LimitError> {
    if sum_index < 2 {
        return Err(LimitError::SumIndexTooSmall(sum_index));
    }
    s_sum_or_empty(sum_index, source)
}

/// As [`s_sum`], but indices below 2 denote empty sums and yield zero.
fn s_sum_or_empty<F: CoeffField>(
    sum_index: usize,
    source: &mut dyn ThetaSource<F>,
) -> Result<Series<F>, LimitError> {
    // Empty sum for indices below 2: no board has rows + cols < 2.
    let mut acc = Series::zero(source.field(), source.cutoff());
    for rows in 1..sum_index {
        let cols = sum_index - rows;
        let theta = source.theta(rows as u32, cols as u32)?;
        let log = log_unit(&theta)?;
        acc.add_assign(&log).expect("equal cutoffs by construction");
    }
    Ok(acc)
}

/// The third-difference approximation of the limiting log partition
/// function, exact through degree `combo_index - 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComboResult<F: CoeffField> {
    pub combo_index: usize,
    pub series: Series<F>,
    /// Highest exactly-correct degree.
    pub valid_order: usize,
}

/// `S_N - 3 S_(N-1) + 3 S_(N-2) - S_(N-3)` for `N = combo_index >= 4`.
pub fn combo<F: CoeffField>(
    combo_index: usize,
    source: &mut dyn ThetaSource<F>,
) -> Result<ComboResult<F>, LimitError> {
    if combo_index < 4 {
        return Err(LimitError::ComboIndexTooSmall(combo_index));
    }
    let mut sums = Vec::with_capacity(4);
    for k in 0..4 {
        sums.push(s_sum_or_empty(combo_index - k, source)?);
    }
    let series = third_difference(&sums[0], &sums[1], &sums[2], &sums[3]);
    Ok(ComboResult {
        combo_index,
        series,
        valid_order: combo_index - 2,
    })
}

fn third_difference<F: CoeffField>(
    s0: &Series<F>,
    s1: &Series<F>,
    s2: &Series<F>,
    s3: &Series<F>,
) -> Series<F> {
    let field = s0.field().clone();
    let three = field.from_int(3);
    s0.sub(&s1.scale(&three))
        .and_then(|a| a.add(&s2.scale(&three)))
        .and_then(|a| a.sub(s3))
        .expect("equal cutoffs by construction")
}

/// The level-`level` residual sequence over the rationals: for each
/// combination index `N = 4..=max_index`, the coefficient of
/// `z^(N-2+level)` in `combo(N+level) - combo(N)`. Level 1 is the first
/// coefficient the combination gets wrong, level 2 the second, and so on.
pub fn residual_sequence(
    level: usize,
    max_index: usize,
    source: &mut dyn ThetaSource<Rationals>,
) -> Result<Vec<Rat>, LimitError> {
    assert!(level >= 1, "level is 1-based");
    if max_index < 4 {
        return Err(LimitError::ComboIndexTooSmall(max_index));
    }
    let top_degree = max_index - 2 + level;
    if top_degree >= source.cutoff() {
        return Err(LimitError::InsufficientData(format!(
            "cutoff {} cannot expose degree {top_degree}",
            source.cutoff()
        )));
    }
    // Build each diagonal sum once; the combinations are linear in them.
    let top_sum = max_index + level;
    let mut sums: Vec<Series<Rationals>> = Vec::with_capacity(top_sum + 1);
    for m in 0..=top_sum {
        sums.push(s_sum_or_empty(m, source)?);
    }
    let combo_of = |n: usize| third_difference(&sums[n], &sums[n - 1], &sums[n - 2], &sums[n - 3]);
    let mut out = Vec::with_capacity(max_index - 3);
    for n in 4..=max_index {
        let degree = n - 2 + level;
        let wide = combo_of(n + level);
        let narrow = combo_of(n);
        out.push(wide.coeff(degree) - narrow.coeff(degree));
    }
    Ok(out)
}

/// Checks the closed form for a diagonal sum of clipped products:
/// `sum_(m+n=N, m,n>=1) (m-h+1)+ * (n-w+1)+ = C((N-h-w+3)+, 3)`,
/// evaluating both sides independently.
pub fn lemma_identity_check(n_sum: u64, height: u64, width: u64) -> bool {
    assert!(n_sum >= 1 && height >= 1 && width >= 1);
    let clip = |x: i128| if x > 0 { x } else { 0 };
    let mut lhs: i128 = 0;
    for m in 1..n_sum {
        let n = n_sum - m;
        lhs += clip(m as i128 - height as i128 + 1) * clip(n as i128 - width as i128 + 1);
    }
    let x = clip(n_sum as i128 - height as i128 - width as i128 + 3);
    let rhs = x * (x - 1) * (x - 2) / 6;
    lhs == rhs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::Rationals;
    use num_bigint::BigInt;
    use num_traits::Zero;

    fn source(cutoff: usize, max_sum: u32) -> CachedThetaSource<Rationals> {
        CachedThetaSource::new(Rationals, cutoff, max_sum, StepOptions::default())
    }

    fn rat(n: i64, d: i64) -> Rat {
        Rat::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn diagonal_sum_examples() {
        let mut src = source(3, 8);
        // S_2 = log theta(1,1) = log 1 = 0.
        assert!(s_sum(2, &mut src).unwrap().is_zero());
        // S_3 = 2 log(1+z) = 2z - z^2 mod z^3.
        let s3 = s_sum(3, &mut src).unwrap();
        assert_eq!(s3.coeff(1), &rat(2, 1));
        assert_eq!(s3.coeff(2), &rat(-1, 1));
        // S_4 = 8z - 10z^2 mod z^3.
        let s4 = s_sum(4, &mut src).unwrap();
        assert_eq!(s4.coeff(1), &rat(8, 1));
        assert_eq!(s4.coeff(2), &rat(-10, 1));
        assert!(matches!(s_sum(1, &mut src), Err(LimitError::SumIndexTooSmall(1))));
    }

    #[test]
    fn combo_four_matches_hand_computation() {
        let mut src = source(3, 8);
        let c = combo(4, &mut src).unwrap();
        assert_eq!(c.valid_order, 2);
        assert!(c.series.coeff(0).is_zero());
        assert_eq!(c.series.coeff(1), &rat(2, 1));
        assert_eq!(c.series.coeff(2), &rat(-7, 1));
        assert!(matches!(
            combo(3, &mut src),
            Err(LimitError::ComboIndexTooSmall(3))
        ));
    }

    #[test]
    fn combo_linear_coefficient_is_two() {
        let mut src = source(3, 8);
        for n in 4..=8 {
            let c = combo(n, &mut src).unwrap();
            assert_eq!(c.series.coeff(1), &rat(2, 1), "combo({n})");
        }
    }

    #[test]
    fn neighbouring_combos_agree_to_their_valid_order() {
        let mut src = source(6, 8);
        let c6 = combo(6, &mut src).unwrap();
        let c7 = combo(7, &mut src).unwrap();
        for degree in 0..=c6.valid_order.min(c6.series.cutoff() - 1) {
            assert_eq!(c6.series.coeff(degree), c7.series.coeff(degree));
        }
    }

    #[test]
    fn first_residual_is_eleven() {
        let mut src = source(4, 9);
        let c4 = combo(4, &mut src).unwrap();
        let c5 = combo(5, &mut src).unwrap();
        let diff = c5.series.coeff(3) - c4.series.coeff(3);
        assert_eq!(diff, rat(11, 1));
    }

    #[test]
    fn residual_sequence_starts_with_published_values() {
        let mut src = source(6, 8);
        let res = residual_sequence(1, 6, &mut src).unwrap();
        assert_eq!(res, vec![rat(11, 1), rat(-38, 1), rat(115, 1)]);
    }

    #[test]
    fn residual_sequence_guards_cutoff() {
        let mut src = source(3, 12);
        assert!(matches!(
            residual_sequence(1, 8, &mut src),
            Err(LimitError::InsufficientData(_))
        ));
    }

    #[test]
    fn lemma_identity_examples() {
        // N=4, h=w=1: 1*3 + 2*2 + 3*1 = 10 = C(5,3).
        assert!(lemma_identity_check(4, 1, 1));
        // Below h+w both sides are empty/zero.
        assert!(lemma_identity_check(3, 2, 2));
        for n in 1..=12 {
            for h in 1..=4 {
                for w in 1..=4 {
                    assert!(lemma_identity_check(n, h, w), "N={n} h={h} w={w}");
                }
            }
        }
    }

    #[test]
    fn cached_source_is_symmetric_and_bounded() {
        let mut src = source(4, 7);
        let a = src.theta(2, 3).unwrap();
        let b = src.theta(3, 2).unwrap();
        assert_eq!(a, b);
        assert!(src.theta(4, 4).is_err());
    }
}
