//! End-to-end orchestration: per-field series pipeline from partition
//! functions to expansion coefficients, multi-prime coordination, and
//! rigorous bound evaluation.
//!
//! The free energy is integrated in split form: with `z(p)` the
//! compositional inverse of `p(z) = 2z (ln theta)'`, the derivative of the
//! free energy is `-(ln p - 2 ln 2 + u(p))/2` where `u(p) = ln(4 z(p)/p)`
//! is an ordinary power series. Only `u` is handled as a series; the
//! `p ln p` part stays symbolic and reappears in the closed bound formulas.

use std::time::Instant;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::coeff::{rat_string, CoeffError, CoeffField, PrimeField, Rat, Rationals};
use crate::correction::{apply_corrections, guess, CorrectionError, Recurrence};
use crate::limit::{combo, residual_sequence, CachedThetaSource, LimitError};
use crate::numeval::{ceil_decimal, floor_decimal, ln2_interval, ln_interval, scaled_interval};
use crate::reconstruct::{
    descending_primes, stabilized_lift, PrimeBatch, ReconstructError, ResidueVector,
};
use crate::series::{
    antiderivative, derivative, invert_composition, log_unit, shift_down, shift_up, SeriesError,
};
use crate::transfer::{StepOptions, TransferError, DEFAULT_MEMORY_BUDGET};

/// Coefficients of the two residual recurrences shipped as defaults.
const LEVEL1_COEFFS: [i64; 5] = [-6, -14, -16, -9, -2];
const LEVEL1_INITIAL: [i64; 5] = [11, -38, 115, -309, 759];
const LEVEL2_COEFFS: [i64; 7] = [-9, -34, -70, -85, -61, -24, -4];

const AUTO_INITIAL_PRIMES: usize = 4;
const AUTO_MAX_PRIMES: usize = 32;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("expansion order {0} must be at least 2")]
    OrderTooSmall(usize),
    #[error("modulus {modulus} too small for order {order}")]
    ModulusTooSmall { modulus: u64, order: usize },
    #[error("memory budget {budget} bytes cannot hold the required state ({required} bytes)")]
    OrderInfeasible { required: u64, budget: u64 },
    #[error("bad domain: {0}")]
    BadDomain(String),
    #[error("sign pattern violated at k = {k}: expected a_k > 0 and b_k < 0")]
    SignViolation { k: usize },
    #[error("coefficient count {got} does not match order {order}")]
    LengthMismatch { order: usize, got: usize },
    #[error(transparent)]
    Limit(LimitError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Correction(#[from] CorrectionError),
    #[error(transparent)]
    Reconstruct(#[from] ReconstructError),
    #[error(transparent)]
    Coeff(#[from] CoeffError),
    #[error(transparent)]
    Transfer(TransferError),
}

impl From<LimitError> for PipelineError {
    fn from(e: LimitError) -> Self {
        match e {
            LimitError::Transfer(TransferError::MemoryBudget { required, budget }) => {
                PipelineError::OrderInfeasible { required, budget }
            }
            other => PipelineError::Limit(other),
        }
    }
}

impl From<TransferError> for PipelineError {
    fn from(e: TransferError) -> Self {
        match e {
            TransferError::MemoryBudget { required, budget } => {
                PipelineError::OrderInfeasible { required, budget }
            }
            other => PipelineError::Transfer(other),
        }
    }
}

/// Execution knobs shared by every run.
#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub threads: usize,
    pub memory_budget: u64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            threads: 1,
            memory_budget: DEFAULT_MEMORY_BUDGET,
        }
    }
}

impl RunOptions {
    fn step_options(&self) -> StepOptions {
        StepOptions {
            memory_budget: self.memory_budget,
            slice_log2: self.threads.max(1).ilog2(),
        }
    }

    fn sequential_steps(&self) -> StepOptions {
        StepOptions {
            memory_budget: self.memory_budget,
            slice_log2: 0,
        }
    }
}

/// How coefficients are computed: one exact rational run, or per-prime
/// modular runs recombined by lifting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrimePolicy {
    Exact,
    /// Grow the prime set until the lift stabilizes.
    Auto,
    /// Use exactly this many primes.
    Count(usize),
}

/// The residual recurrences available for corrections, level 1 upward.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionPlan {
    recurrences: Vec<Recurrence>,
}

impl CorrectionPlan {
    pub fn empty() -> Self {
        Self { recurrences: Vec::new() }
    }

    pub fn recurrences(&self) -> &[Recurrence] {
        &self.recurrences
    }

    pub fn level_count(&self) -> usize {
        self.recurrences.len()
    }

    /// The default plan: the two known residual recurrences. The level-1
    /// initial segment is fixed data; the level-2 recurrence has known
    /// coefficients, so its initial terms are computed once over the
    /// rationals and checked against the relation on surplus terms.
    pub fn published(levels: usize, opts: &RunOptions) -> Result<Self, PipelineError> {
        if levels > 2 {
            return Err(CorrectionError::LevelUnavailable {
                requested: levels,
                available: 2,
            }
            .into());
        }
        let mut recurrences = Vec::new();
        if levels >= 1 {
            recurrences.push(Recurrence::new(int_rats(&LEVEL1_COEFFS), int_rats(&LEVEL1_INITIAL))?);
        }
        if levels >= 2 {
            let order = LEVEL2_COEFFS.len();
            let max_index = 4 + order + 1; // two surplus terms for the check
            let mut source = CachedThetaSource::new(
                Rationals,
                max_index + 1,
                (max_index + 2) as u32,
                opts.sequential_steps(),
            );
            let data = residual_sequence(2, max_index, &mut source)?;
            let rec = Recurrence::new(int_rats(&LEVEL2_COEFFS), data[..order].to_vec())?;
            if !rec.satisfied_by(&data) {
                return Err(CorrectionError::BadRecurrence(
                    "level-2 recurrence does not reproduce the computed residuals".into(),
                )
                .into());
            }
            recurrences.push(rec);
        }
        Ok(Self { recurrences })
    }

    /// Rediscovers the recurrences from computed residual data instead of
    /// trusting the shipped ones; supports levels beyond 2.
    pub fn reguessed(
        levels: usize,
        max_order: usize,
        verify_count: usize,
        opts: &RunOptions,
    ) -> Result<Self, PipelineError> {
        let mut recurrences = Vec::with_capacity(levels);
        for level in 1..=levels {
            let (rec, _) = guessed_recurrence(level, max_order, verify_count, opts)?;
            recurrences.push(rec);
        }
        Ok(Self { recurrences })
    }
}

fn int_rats(v: &[i64]) -> Vec<Rat> {
    v.iter().map(|&n| Rat::from_integer(BigInt::from(n))).collect()
}

/// Guesses the recurrence for one residual level from freshly computed
/// data; returns it with the number of held-out terms it was checked on.
pub fn guessed_recurrence(
    level: usize,
    max_order: usize,
    verify_count: usize,
    opts: &RunOptions,
) -> Result<(Recurrence, usize), PipelineError> {
    let terms = 2 * max_order + verify_count;
    let max_index = 3 + terms;
    let mut source = CachedThetaSource::new(
        Rationals,
        max_index - 1 + level,
        (max_index + level) as u32,
        opts.step_options(),
    );
    let data = residual_sequence(level, max_index, &mut source)?;
    let rec = guess(&data, max_order, verify_count)?;
    let margin = data.len() - 2 * rec.order();
    Ok((rec, margin))
}

/// Runs the whole series pipeline over one coefficient field and returns
/// the expansion coefficients `a_2 ..= a_order` as field elements.
pub fn run_field_pipeline<F: CoeffField>(
    field: &F,
    order: usize,
    levels: usize,
    plan: &CorrectionPlan,
    opts: &RunOptions,
) -> Result<Vec<F::Elem>, PipelineError> {
    if order < 2 {
        return Err(PipelineError::OrderTooSmall(order));
    }
    if let Some(p) = field.characteristic() {
        if p <= order as u64 + 2 {
            return Err(PipelineError::ModulusTooSmall { modulus: p, order });
        }
    }
    if levels > plan.level_count() {
        return Err(CorrectionError::LevelUnavailable {
            requested: levels,
            available: plan.level_count(),
        }
        .into());
    }
    let cutoff = order + 1;
    // The log of the limit must be exact through degree `order`; the
    // combination is exact through `combo_index - 2` and each correction
    // level adds one degree.
    let combo_index = (order + 2).saturating_sub(levels).max(4);
    let mut source = CachedThetaSource::new(
        field.clone(),
        cutoff,
        combo_index as u32,
        opts.step_options(),
    );
    let base = combo(combo_index, &mut source)?;
    let ln_theta = apply_corrections(&base, plan.recurrences(), levels)?.series;

    // p(z) = 2 z (ln theta)'.
    let two = field.from_int(2);
    let p_series = shift_up(&derivative(&ln_theta), 1).scale(&two);
    let z_series = invert_composition(&p_series)?;
    // u(p) = ln(4 z(p) / p); z(p) = p/4 + ... makes this a unit log.
    let four = field.from_int(4);
    let ratio = shift_down(&z_series, 1)?.scale(&four);
    let u = log_unit(&ratio)?;
    // The series part of the free energy: g(p) = -1/2 * integral of u.
    let minus_half = field.from_rat(&Rat::new(BigInt::from(-1), BigInt::from(2)))?;
    let g = antiderivative(&u)?.scale(&minus_half);

    let mut out = Vec::with_capacity(order - 1);
    for k in 2..=order {
        // a_k = g_k + 1/(k(k-1)).
        let fix = field.from_rat(&Rat::new(BigInt::one(), BigInt::from((k * (k - 1)) as u64)))?;
        out.push(field.add(g.coeff(k), &fix));
    }
    Ok(out)
}

/// Per-prime residue vectors for the given primes, computed concurrently
/// (at most `opts.threads` runs in flight; each run is single-threaded).
pub fn residue_vectors(
    order: usize,
    levels: usize,
    plan: &CorrectionPlan,
    primes: &[u64],
    opts: &RunOptions,
) -> Result<Vec<ResidueVector>, PipelineError> {
    let per_run = RunOptions {
        threads: 1,
        memory_budget: opts.memory_budget,
    };
    let mut out = Vec::with_capacity(primes.len());
    for group in primes.chunks(opts.threads.max(1)) {
        let results: Vec<Result<ResidueVector, PipelineError>> = std::thread::scope(|scope| {
            let handles: Vec<_> = group
                .iter()
                .map(|&p| {
                    scope.spawn(move || -> Result<ResidueVector, PipelineError> {
                        let field = PrimeField::new(p as u32)?;
                        let coeffs = run_field_pipeline(&field, order, levels, plan, &per_run)?;
                        Ok(ResidueVector {
                            modulus: p as u32,
                            order,
                            coeffs,
                        })
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("pipeline worker panicked"))
                .collect()
        });
        for r in results {
            out.push(r?);
        }
    }
    Ok(out)
}

fn lift_with_primes(
    order: usize,
    levels: usize,
    plan: &CorrectionPlan,
    opts: &RunOptions,
    fixed_count: Option<usize>,
) -> Result<(Vec<Rat>, Vec<u64>), PipelineError> {
    let mut count = fixed_count.unwrap_or(AUTO_INITIAL_PRIMES).max(2);
    loop {
        let primes = descending_primes(count);
        let vectors = residue_vectors(order, levels, plan, &primes, opts)?;
        let batch = PrimeBatch::new(vectors)?;
        match stabilized_lift(&batch) {
            Ok(outcome) => {
                let used = primes[..outcome.primes_used].to_vec();
                return Ok((outcome.values, used));
            }
            Err(ReconstructError::Unstable { .. })
                if fixed_count.is_none() && count < AUTO_MAX_PRIMES =>
            {
                count = (count + 2).min(AUTO_MAX_PRIMES);
            }
            Err(e) => return Err(e.into()),
        }
    }
}

/// Provenance of an [`Expansion`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpansionMeta {
    /// Primes consumed by the lift; empty for exact runs.
    pub primes: Vec<u64>,
    pub levels: usize,
    pub combo_index: usize,
    pub wall_ms: u64,
}

/// The final artifact: expansion coefficients of the free energy in both
/// normal forms, `k = 2 ..= order`.
#[derive(Debug, Clone, PartialEq)]
pub struct Expansion {
    pub order: usize,
    pub a: Vec<Rat>,
    pub b: Vec<Rat>,
    pub meta: ExpansionMeta,
}

impl Expansion {
    /// Builds the expansion from the `a` coefficients, deriving
    /// `b_k = a_k - 1/(k(k-1))` and enforcing the sign pattern
    /// `a_k > 0 > b_k` that makes the truncations usable as bounds.
    pub fn from_coeffs(
        order: usize,
        a: Vec<Rat>,
        meta: ExpansionMeta,
    ) -> Result<Self, PipelineError> {
        if a.len() != order.saturating_sub(1) {
            return Err(PipelineError::LengthMismatch { order, got: a.len() });
        }
        let mut b = Vec::with_capacity(a.len());
        for (i, ak) in a.iter().enumerate() {
            let k = i + 2;
            let bk = ak - Rat::new(BigInt::one(), BigInt::from((k * (k - 1)) as u64));
            if !ak.is_positive() || !bk.is_negative() {
                return Err(PipelineError::SignViolation { k });
            }
            b.push(bk);
        }
        Ok(Self { order, a, b, meta })
    }

    /// `a_k`, `k` counted from 2.
    pub fn a_coeff(&self, k: usize) -> &Rat {
        &self.a[k - 2]
    }

    pub fn b_coeff(&self, k: usize) -> &Rat {
        &self.b[k - 2]
    }

    pub fn to_json(&self, include_meta: bool) -> serde_json::Value {
        let a: Vec<String> = self.a.iter().map(rat_string).collect();
        let b: Vec<String> = self.b.iter().map(rat_string).collect();
        let mut value = serde_json::json!({
            "order": self.order,
            "a": a,
            "b": b,
        });
        if include_meta {
            value["meta"] = serde_json::json!({
                "primes": self.meta.primes,
                "levels": self.meta.levels,
                "combo_index": self.meta.combo_index,
                "wall_ms": self.meta.wall_ms,
            });
        }
        value
    }
}

/// Computes the expansion with the default (published) correction plan.
pub fn compute_expansion(
    order: usize,
    levels: usize,
    policy: PrimePolicy,
    opts: &RunOptions,
) -> Result<Expansion, PipelineError> {
    let plan = CorrectionPlan::published(levels, opts)?;
    compute_expansion_with_plan(order, levels, &plan, policy, opts)
}

pub fn compute_expansion_with_plan(
    order: usize,
    levels: usize,
    plan: &CorrectionPlan,
    policy: PrimePolicy,
    opts: &RunOptions,
) -> Result<Expansion, PipelineError> {
    let start = Instant::now();
    let (a, primes) = match policy {
        PrimePolicy::Exact => (
            run_field_pipeline(&Rationals, order, levels, plan, opts)?,
            Vec::new(),
        ),
        PrimePolicy::Auto => lift_with_primes(order, levels, plan, opts, None)?,
        PrimePolicy::Count(k) => lift_with_primes(order, levels, plan, opts, Some(k))?,
    };
    let meta = ExpansionMeta {
        primes,
        levels,
        combo_index: (order + 2).saturating_sub(levels).max(4),
        wall_ms: start.elapsed().as_millis() as u64,
    };
    Expansion::from_coeffs(order, a, meta)
}

/// A rigorously rounded evaluation of the two bounds at one density.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundValue {
    pub p: Rat,
    pub order: usize,
    /// Decimal string below the true lower bound.
    pub lower: String,
    /// Decimal string above the true upper bound.
    pub upper: String,
    pub guaranteed_digits: usize,
}

/// Evaluates the truncated lower and upper bounds at `p`, rounding the
/// printed interval outward so it contains the true values:
///
/// ```text
/// lower(p) = ((2 ln 2 - 1) p - p ln p)/2 - (1-p) ln(1-p) + sum a_j p^j
/// upper(p) = ((2 ln 2 + 1) p - p ln p)/2 + sum b_j p^j
/// ```
pub fn eval_bounds(
    expansion: &Expansion,
    p: &Rat,
    digits: usize,
) -> Result<BoundValue, PipelineError> {
    if !(p.is_positive() && *p < Rat::one()) {
        return Err(PipelineError::BadDomain(format!(
            "density {} outside (0, 1)",
            rat_string(p)
        )));
    }
    if digits == 0 {
        return Err(PipelineError::BadDomain("digits must be at least 1".into()));
    }
    // Ten guard digits between the enclosure tolerance and the rounding.
    let eps = Rat::new(BigInt::one(), BigInt::from(10u32).pow(digits as u32 + 10));
    let half = Rat::new(BigInt::one(), BigInt::from(2));

    // Exact polynomial parts.
    let mut poly_lower = -&half * p;
    let mut poly_upper = half.clone() * p;
    let mut power = p * p;
    for (i, (a, b)) in expansion.a.iter().zip(&expansion.b).enumerate() {
        poly_lower += a * &power;
        poly_upper += b * &power;
        if i + 2 < expansion.order {
            power *= p;
        }
    }

    // Transcendental parts as enclosures.
    let ln2 = ln2_interval(&eps);
    let ln_p = ln_interval(p, &eps);
    let one_minus_p = Rat::one() - p;
    let ln_q = ln_interval(&one_minus_p, &eps);

    let coeff_ln2 = p.clone(); // (2 ln 2) p / 2
    let coeff_ln_p = -(&half * p);
    let coeff_ln_q = -one_minus_p;

    let (l2_lo, l2_hi) = scaled_interval(&coeff_ln2, &ln2.0, &ln2.1);
    let (lp_lo, lp_hi) = scaled_interval(&coeff_ln_p, &ln_p.0, &ln_p.1);
    let (lq_lo, lq_hi) = scaled_interval(&coeff_ln_q, &ln_q.0, &ln_q.1);

    let lower_lo = &poly_lower + &l2_lo + &lp_lo + lq_lo;
    let upper_hi = &poly_upper + &l2_hi + &lp_hi;

    Ok(BoundValue {
        p: p.clone(),
        order: expansion.order,
        lower: floor_decimal(&lower_lo, digits),
        upper: ceil_decimal(&upper_hi, digits),
        guaranteed_digits: digits,
    })
}

/// One CSV row of the bound curve.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CurvePoint {
    pub p: String,
    pub lower: String,
    pub upper: String,
}

/// Evaluates the bounds on a grid of densities.
pub fn emit_curve(
    expansion: &Expansion,
    grid: &[Rat],
    digits: usize,
) -> Result<Vec<CurvePoint>, PipelineError> {
    grid.iter()
        .map(|p| {
            let bounds = eval_bounds(expansion, p, digits)?;
            Ok(CurvePoint {
                p: floor_decimal(p, digits),
                lower: bounds.lower,
                upper: bounds.upper,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::parse_rat;
    use crate::poly::reduce_poly;
    use crate::series::Series;

    fn opts() -> RunOptions {
        RunOptions::default()
    }

    fn rat(s: &str) -> Rat {
        parse_rat(s).unwrap()
    }

    #[test]
    fn lowest_order_coefficient() {
        let plan = CorrectionPlan::empty();
        let a = run_field_pipeline(&Rationals, 2, 0, &plan, &opts()).unwrap();
        assert_eq!(a, vec![rat("1/16")]);
    }

    #[test]
    fn first_three_coefficients() {
        let plan = CorrectionPlan::empty();
        let a = run_field_pipeline(&Rationals, 4, 0, &plan, &opts()).unwrap();
        assert_eq!(a, vec![rat("1/16"), rat("1/192"), rat("7/1536")]);
    }

    #[test]
    fn modular_run_matches_reduction_of_exact() {
        let plan = CorrectionPlan::empty();
        let field = PrimeField::new(2147483647).unwrap();
        let modular = run_field_pipeline(&field, 4, 0, &plan, &opts()).unwrap();
        let exact = run_field_pipeline(&Rationals, 4, 0, &plan, &opts()).unwrap();
        let poly = Series::from_coeffs(Rationals, exact);
        let reduced = reduce_poly(&poly, field).unwrap();
        assert_eq!(&modular[..], reduced.coeffs());
    }

    #[test]
    fn intermediate_series_anchors() {
        // ln theta = 2z - 7z^2 + O(z^3) gives p(z) = 4z + O(z^2) and
        // z(p) = p/4 + O(p^2).
        let mut source = CachedThetaSource::new(Rationals, 3, 4, StepOptions::default());
        let base = combo(4, &mut source).unwrap();
        let two = Rationals.from_int(2);
        let p_series = shift_up(&derivative(&base.series), 1).scale(&two);
        assert_eq!(p_series.coeff(1), &rat("4"));
        let z_series = invert_composition(&p_series).unwrap();
        assert_eq!(z_series.coeff(1), &rat("1/4"));
    }

    #[test]
    fn correction_levels_do_not_change_small_orders() {
        let reference = compute_expansion(6, 0, PrimePolicy::Exact, &opts()).unwrap();
        for levels in 1..=2 {
            let corrected = compute_expansion(6, levels, PrimePolicy::Exact, &opts()).unwrap();
            assert_eq!(corrected.a, reference.a, "levels = {levels}");
        }
    }

    #[test]
    fn auto_policy_matches_exact() {
        let exact = compute_expansion(8, 0, PrimePolicy::Exact, &opts()).unwrap();
        let lifted = compute_expansion(8, 0, PrimePolicy::Auto, &opts()).unwrap();
        assert_eq!(exact.a, lifted.a);
        assert_eq!(exact.b, lifted.b);
        assert!(!lifted.meta.primes.is_empty());
        assert_eq!(lifted.meta.primes[0], 2147483647);
    }

    #[test]
    fn published_plan_is_consistent() {
        let plan = CorrectionPlan::published(2, &opts()).unwrap();
        assert_eq!(plan.level_count(), 2);
        assert_eq!(plan.recurrences()[0].order(), 5);
        assert_eq!(plan.recurrences()[1].order(), 7);
        // Corrections over a prime field equal the reduced rational ones:
        // residuals are integers, so the embeddings match exactly.
        let field = PrimeField::new(2147483647).unwrap();
        let exact = run_field_pipeline(&Rationals, 6, 2, &plan, &opts()).unwrap();
        let modular = run_field_pipeline(&field, 6, 2, &plan, &opts()).unwrap();
        let reduced = reduce_poly(&Series::from_coeffs(Rationals, exact), field).unwrap();
        assert_eq!(&modular[..], reduced.coeffs());
    }

    #[test]
    fn json_shape() {
        let exp = compute_expansion(4, 0, PrimePolicy::Exact, &opts()).unwrap();
        let json = exp.to_json(true);
        assert_eq!(json["order"], 4);
        assert_eq!(json["a"][0], "1/16");
        assert_eq!(json["a"][2], "7/1536");
        assert!(json["meta"]["combo_index"].is_number());
        let bare = exp.to_json(false);
        assert!(bare.get("meta").is_none());
    }

    #[test]
    fn bounds_domain_checks() {
        let exp = compute_expansion(4, 0, PrimePolicy::Exact, &opts()).unwrap();
        assert!(matches!(
            eval_bounds(&exp, &rat("1"), 10),
            Err(PipelineError::BadDomain(_))
        ));
        assert!(matches!(
            eval_bounds(&exp, &rat("-1/2"), 10),
            Err(PipelineError::BadDomain(_))
        ));
        assert!(matches!(
            eval_bounds(&exp, &rat("1/2"), 0),
            Err(PipelineError::BadDomain(_))
        ));
    }

    #[test]
    fn bounds_vanish_towards_zero_density() {
        let exp = compute_expansion(6, 0, PrimePolicy::Exact, &opts()).unwrap();
        let bounds = eval_bounds(&exp, &rat("1/1000000"), 12).unwrap();
        let lo = rat(&bounds.lower);
        let hi = rat(&bounds.upper);
        let tol = rat("1/100000");
        assert!(lo.abs() < tol && hi.abs() < tol, "[{lo}, {hi}]");
        assert!(lo <= hi);
    }

    #[test]
    fn curve_rows_are_consistent_with_eval_bounds() {
        let exp = compute_expansion(6, 0, PrimePolicy::Exact, &opts()).unwrap();
        let grid = [rat("1/4"), rat("1/2"), rat("3/4")];
        let rows = emit_curve(&exp, &grid, 12).unwrap();
        assert_eq!(rows.len(), 3);
        for row in &rows {
            assert!(rat(&row.lower) <= rat(&row.upper));
        }
        let direct = eval_bounds(&exp, &rat("1/2"), 12).unwrap();
        assert_eq!(rows[1].lower, direct.lower);
        assert_eq!(rows[1].upper, direct.upper);
    }

    #[test]
    fn gap_grows_with_density() {
        // Regression: the bound gap is nondecreasing on [1/2, 19/20].
        let exp = compute_expansion(10, 0, PrimePolicy::Exact, &opts()).unwrap();
        let mut previous: Option<Rat> = None;
        for i in 0..=9 {
            let p = rat("1/2") + Rat::new(BigInt::from(9 * i), BigInt::from(200));
            let bounds = eval_bounds(&exp, &p, 20).unwrap();
            let gap = rat(&bounds.upper) - rat(&bounds.lower);
            if let Some(prev) = previous {
                assert!(gap >= prev, "gap shrank at p = {p}");
            }
            previous = Some(gap);
        }
    }

    #[test]
    fn sign_violation_is_detected() {
        let meta = ExpansionMeta {
            primes: vec![],
            levels: 0,
            combo_index: 4,
            wall_ms: 0,
        };
        let err = Expansion::from_coeffs(2, vec![rat("-1/16")], meta).unwrap_err();
        assert!(matches!(err, PipelineError::SignViolation { k: 2 }));
    }
}
