//! Formal power-series calculus over any coefficient field: product,
//! reciprocal, logarithm, derivative, antiderivative, and compositional
//! inversion.
//!
//! Cutoff bookkeeping is explicit: the derivative returns cutoff `T-1`, the
//! antiderivative `T+1`, monomial shifts grow or shrink the cutoff by the
//! shift amount. Nothing coerces cutoffs silently; binary operations demand
//! equal cutoffs.

use thiserror::Error;

use crate::coeff::CoeffField;
use crate::poly::{PolyError, TruncPoly};

/// A truncated power series; same representation as [`TruncPoly`], read as
/// an element of `F[[z]] / z^cutoff`.
pub type Series<F> = TruncPoly<F>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SeriesError {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("constant term must be an invertible unit")]
    NonUnitConstant,
    #[error("characteristic {modulus} does not allow division by 1..={needed}")]
    BadModulus { modulus: u64, needed: usize },
    #[error("linear coefficient must be invertible for compositional inversion")]
    ZeroLinearTerm,
    #[error("constant term must vanish")]
    NonzeroConstant,
    #[error("coefficients below degree {0} must vanish for this shift")]
    LowOrderNotZero(usize),
}

/// Fails when the field cannot divide by every integer in `1..=needed`.
fn ensure_divisors<F: CoeffField>(field: &F, needed: usize) -> Result<(), SeriesError> {
    if let Some(p) = field.characteristic() {
        if p <= needed as u64 {
            return Err(SeriesError::BadModulus { modulus: p, needed });
        }
    }
    Ok(())
}

/// Cauchy product modulo `z^cutoff`; cutoffs must agree.
pub fn mul<F: CoeffField>(a: &Series<F>, b: &Series<F>) -> Result<Series<F>, SeriesError> {
    if a.cutoff() != b.cutoff() {
        return Err(PolyError::CutoffMismatch(a.cutoff(), b.cutoff()).into());
    }
    let field = a.field().clone();
    let cutoff = a.cutoff();
    let mut out = Series::zero(field.clone(), cutoff);
    for i in 0..cutoff {
        let ai = a.coeff(i);
        if field.is_zero(ai) {
            continue;
        }
        for j in 0..cutoff - i {
            let term = field.mul(ai, b.coeff(j));
            field.add_assign(out.coeffs_at(i + j), &term);
        }
    }
    Ok(out)
}

/// Multiplicative inverse of a series with invertible constant term.
pub fn reciprocal<F: CoeffField>(a: &Series<F>) -> Result<Series<F>, SeriesError> {
    let field = a.field().clone();
    let c0 = field.inv(a.coeff(0)).map_err(|_| SeriesError::NonUnitConstant)?;
    let cutoff = a.cutoff();
    let mut out = Series::zero(field.clone(), cutoff);
    out.set_coeff(0, c0.clone());
    for n in 1..cutoff {
        // c[n] = -1/a0 * sum_{k=1..=n} a[k] c[n-k]
        let mut acc = field.zero();
        for k in 1..=n {
            let term = field.mul(a.coeff(k), out.coeff(n - k));
            field.add_assign(&mut acc, &term);
        }
        out.set_coeff(n, field.neg(&field.mul(&c0, &acc)));
    }
    Ok(out)
}

/// Termwise derivative; shrinks the cutoff by one.
pub fn derivative<F: CoeffField>(a: &Series<F>) -> Series<F> {
    assert!(a.cutoff() >= 2, "derivative needs cutoff >= 2");
    let field = a.field().clone();
    let coeffs = (1..a.cutoff())
        .map(|k| field.mul(a.coeff(k), &field.from_int(k as i64)))
        .collect();
    Series::from_coeffs(field, coeffs)
}

/// Termwise antiderivative with zero constant; grows the cutoff by one.
pub fn antiderivative<F: CoeffField>(a: &Series<F>) -> Result<Series<F>, SeriesError> {
    let field = a.field().clone();
    ensure_divisors(&field, a.cutoff())?;
    let mut coeffs = Vec::with_capacity(a.cutoff() + 1);
    coeffs.push(field.zero());
    for k in 0..a.cutoff() {
        let inv = field
            .inv(&field.from_int(k as i64 + 1))
            .expect("divisor below characteristic");
        coeffs.push(field.mul(a.coeff(k), &inv));
    }
    Ok(Series::from_coeffs(field, coeffs))
}

/// Logarithm of a series with constant term exactly one: the antiderivative
/// of `a'/a`, cutoff preserved.
pub fn log_unit<F: CoeffField>(a: &Series<F>) -> Result<Series<F>, SeriesError> {
    let field = a.field().clone();
    if !field.is_one(a.coeff(0)) {
        return Err(SeriesError::NonUnitConstant);
    }
    let cutoff = a.cutoff();
    if cutoff == 1 {
        return Ok(Series::zero(field, 1));
    }
    ensure_divisors(&field, cutoff - 1)?;
    let num = derivative(a);
    let den = reciprocal(&a.truncated(cutoff - 1))?;
    antiderivative(&mul(&num, &den)?)
}

/// Multiplication by `z^d`, keeping all information: cutoff grows by `d`.
pub fn shift_up<F: CoeffField>(a: &Series<F>, d: usize) -> Series<F> {
    let field = a.field().clone();
    let mut coeffs = vec![field.zero(); d];
    coeffs.extend(a.coeffs().iter().cloned());
    Series::from_coeffs(field, coeffs)
}

/// Division by `z^d`; the low `d` coefficients must vanish. Cutoff shrinks
/// by `d`.
pub fn shift_down<F: CoeffField>(a: &Series<F>, d: usize) -> Result<Series<F>, SeriesError> {
    let field = a.field().clone();
    assert!(d < a.cutoff(), "shift would empty the series");
    if a.coeffs()[..d].iter().any(|c| !field.is_zero(c)) {
        return Err(SeriesError::LowOrderNotZero(d));
    }
    Ok(Series::from_coeffs(field, a.coeffs()[d..].to_vec()))
}

/// Compositional inverse: given `p` with `p(0) = 0` and invertible linear
/// coefficient, returns the series `q` with `p(q(w)) = w` modulo `w^cutoff`.
///
/// Coefficient-by-coefficient Lagrange inversion: the degree-`k` coefficient
/// of `q` is `[z^(k-1)] (z/p(z))^k / k`, with the powers of `z/p` built
/// incrementally (O(T^3) field operations overall).
pub fn invert_composition<F: CoeffField>(p: &Series<F>) -> Result<Series<F>, SeriesError> {
    let field = p.field().clone();
    if !field.is_zero(p.coeff(0)) {
        return Err(SeriesError::NonzeroConstant);
    }
    let cutoff = p.cutoff();
    if cutoff == 1 {
        return Ok(Series::zero(field, 1));
    }
    if field.is_zero(p.coeff(1)) {
        return Err(SeriesError::ZeroLinearTerm);
    }
    ensure_divisors(&field, cutoff - 1)?;
    let u = reciprocal(&shift_down(p, 1)?)?; // z/p(z), a unit series
    let mut out = Series::zero(field.clone(), cutoff);
    let mut power = Series::constant(field.clone(), field.one(), cutoff - 1);
    for k in 1..cutoff {
        power = mul(&power, &u)?;
        let coeff = field
            .div(power.coeff(k - 1), &field.from_int(k as i64))
            .expect("divisor below characteristic");
        out.set_coeff(k, coeff);
    }
    Ok(out)
}

/// Composition `outer(inner)` by Horner's rule; `inner(0)` must vanish.
/// Internal helper: the pipeline itself only needs inversion and logarithm.
#[allow(dead_code)]
pub(crate) fn compose<F: CoeffField>(
    outer: &Series<F>,
    inner: &Series<F>,
) -> Result<Series<F>, SeriesError> {
    if outer.cutoff() != inner.cutoff() {
        return Err(PolyError::CutoffMismatch(outer.cutoff(), inner.cutoff()).into());
    }
    let field = outer.field().clone();
    if !field.is_zero(inner.coeff(0)) {
        return Err(SeriesError::NonzeroConstant);
    }
    let cutoff = outer.cutoff();
    let mut acc = Series::constant(field.clone(), outer.coeff(cutoff - 1).clone(), cutoff);
    for k in (0..cutoff - 1).rev() {
        acc = mul(&acc, inner)?;
        let updated = field.add(acc.coeff(0), outer.coeff(k));
        acc.set_coeff(0, updated);
    }
    Ok(acc)
}

impl<F: CoeffField> TruncPoly<F> {
    /// Mutable access used by the series product accumulator.
    fn coeffs_at(&mut self, k: usize) -> &mut F::Elem {
        &mut self.coeffs_mut()[k]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::{PrimeField, Rat, Rationals};
    use crate::poly::reduce_poly;
    use num_bigint::BigInt;
    use proptest::prelude::*;

    fn q() -> Rationals {
        Rationals
    }

    fn rat(n: i64, d: i64) -> Rat {
        Rat::new(BigInt::from(n), BigInt::from(d))
    }

    fn rats(field: Rationals, pairs: &[(i64, i64)]) -> Series<Rationals> {
        let coeffs = pairs.iter().map(|&(n, d)| rat(n, d)).collect();
        Series::from_coeffs(field, coeffs)
    }

    #[test]
    fn mul_examples() {
        let a = Series::from_ints(q(), &[1, 1], 3);
        let b = Series::from_ints(q(), &[1, -1], 3);
        assert_eq!(mul(&a, &b).unwrap(), Series::from_ints(q(), &[1, 0, -1], 3));

        let a = Series::from_ints(q(), &[1, 1], 2);
        assert_eq!(mul(&a, &a).unwrap(), Series::from_ints(q(), &[1, 2], 2));

        let f7 = PrimeField::new(7).unwrap();
        let a = Series::from_ints(f7, &[3, 1], 3);
        let b = Series::from_ints(f7, &[5, 1], 3);
        assert_eq!(mul(&a, &b).unwrap(), Series::from_ints(f7, &[1, 1, 1], 3));

        let short = Series::from_ints(q(), &[1], 2);
        let long = Series::from_ints(q(), &[1], 3);
        assert!(matches!(
            mul(&short, &long),
            Err(SeriesError::Poly(PolyError::CutoffMismatch(2, 3)))
        ));
    }

    #[test]
    fn log_examples() {
        // log(1+z) = z - z^2/2 + z^3/3 mod z^4.
        let a = Series::from_ints(q(), &[1, 1], 4);
        let expect = rats(q(), &[(0, 1), (1, 1), (-1, 2), (1, 3)]);
        assert_eq!(log_unit(&a).unwrap(), expect);

        let one = Series::from_ints(q(), &[1], 4);
        assert!(log_unit(&one).unwrap().is_zero());

        // log(1 + 4z + 2z^2) = 4z - 6z^2 mod z^3.
        let theta22 = Series::from_ints(q(), &[1, 4, 2], 3);
        assert_eq!(
            log_unit(&theta22).unwrap(),
            Series::from_ints(q(), &[0, 4, -6], 3)
        );

        let not_unit = Series::from_ints(q(), &[2, 1], 3);
        assert_eq!(log_unit(&not_unit), Err(SeriesError::NonUnitConstant));
    }

    #[test]
    fn small_modulus_is_rejected() {
        let f7 = PrimeField::new(7).unwrap();
        let a = Series::from_ints(f7, &[1, 1, 0, 0, 0, 0, 0, 0, 0, 0], 10);
        assert!(matches!(
            log_unit(&a),
            Err(SeriesError::BadModulus { modulus: 7, .. })
        ));
    }

    #[test]
    fn derivative_and_antiderivative() {
        let z2 = Series::from_ints(q(), &[0, 0, 1], 3);
        assert_eq!(derivative(&z2), Series::from_ints(q(), &[0, 2], 2));
        let two_z = Series::from_ints(q(), &[0, 2], 2);
        assert_eq!(
            antiderivative(&two_z).unwrap(),
            Series::from_ints(q(), &[0, 0, 1], 3)
        );
    }

    #[test]
    fn inversion_examples() {
        // invert(4z) = w/4.
        let p = Series::from_ints(q(), &[0, 4], 3);
        let inv = invert_composition(&p).unwrap();
        assert_eq!(inv, rats(q(), &[(0, 1), (1, 4), (0, 1)]));

        // invert(4z - 28z^2) = w/4 + (7/16) w^2 mod w^3.
        let p = Series::from_ints(q(), &[0, 4, -28], 3);
        let inv = invert_composition(&p).unwrap();
        assert_eq!(inv, rats(q(), &[(0, 1), (1, 4), (7, 16)]));

        let stuck = Series::from_ints(q(), &[0, 0, 1], 3);
        assert_eq!(invert_composition(&stuck), Err(SeriesError::ZeroLinearTerm));
        let off = Series::from_ints(q(), &[1, 1], 3);
        assert_eq!(invert_composition(&off), Err(SeriesError::NonzeroConstant));
    }

    #[test]
    fn shift_up_down_roundtrip() {
        let a = Series::from_ints(q(), &[1, 2, 3], 3);
        let up = shift_up(&a, 2);
        assert_eq!(up.cutoff(), 5);
        assert_eq!(shift_down(&up, 2).unwrap(), a);
        let bad = Series::from_ints(q(), &[1, 2], 2);
        assert_eq!(shift_down(&bad, 1), Err(SeriesError::LowOrderNotZero(1)));
    }

    fn unit_series(cutoff: usize) -> impl Strategy<Value = Series<Rationals>> {
        proptest::collection::vec(-9i64..9, cutoff - 1).prop_map(move |tail| {
            let mut v = vec![1i64];
            v.extend(tail);
            Series::from_ints(Rationals, &v, cutoff)
        })
    }

    fn invertible_series(cutoff: usize) -> impl Strategy<Value = Series<Rationals>> {
        (
            prop_oneof![1i64..6, -6i64..-1],
            proptest::collection::vec(-9i64..9, cutoff - 2),
        )
            .prop_map(move |(lin, tail)| {
                let mut v = vec![0i64, lin];
                v.extend(tail);
                Series::from_ints(Rationals, &v, cutoff)
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn log_of_product_is_sum_of_logs(a in unit_series(8), b in unit_series(8)) {
            let prod = mul(&a, &b).unwrap();
            let lhs = log_unit(&prod).unwrap();
            let rhs = log_unit(&a).unwrap().add(&log_unit(&b).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn log_identity_survives_reduction(a in unit_series(6), b in unit_series(6)) {
            let f = PrimeField::new(2147483647).unwrap();
            let prod = mul(&a, &b).unwrap();
            let rational = log_unit(&prod).unwrap();
            let modular = log_unit(&mul(
                &reduce_poly(&a, f).unwrap(),
                &reduce_poly(&b, f).unwrap(),
            ).unwrap()).unwrap();
            prop_assert_eq!(reduce_poly(&rational, f).unwrap(), modular);
        }

        #[test]
        fn inverse_composes_to_identity(p in invertible_series(8)) {
            let inv = invert_composition(&p).unwrap();
            let comp = compose(&p, &inv).unwrap();
            let mut identity = Series::zero(Rationals, 8);
            identity.set_coeff(1, Rat::from_integer(BigInt::from(1)));
            prop_assert_eq!(comp, identity);
        }

        #[test]
        fn inversion_is_an_involution(p in invertible_series(8)) {
            let twice = invert_composition(&invert_composition(&p).unwrap()).unwrap();
            prop_assert_eq!(twice, p);
        }

        #[test]
        fn derivative_undoes_antiderivative(a in unit_series(7)) {
            prop_assert_eq!(derivative(&antiderivative(&a).unwrap()), a);
        }
    }
}
