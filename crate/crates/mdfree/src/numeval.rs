//! Rigorous rational enclosures of natural logarithms, and outward decimal
//! rounding for printing guaranteed bounds.
//!
//! Logarithms are evaluated exactly over the rationals: the argument is
//! scaled by powers of two into [2/3, 4/3], the remainder is summed as an
//! atanh series whose truncation error is bounded by a geometric tail, and
//! every intermediate stays an exact fraction. The returned interval
//! contains the true value and its width never exceeds the requested
//! tolerance.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::coeff::Rat;

fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

fn rat_frac(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// Enclosure of `atanh(t) = t + t^3/3 + t^5/5 + ...` for `|t| < 1/2`.
fn atanh_enclosure(t: &Rat, eps: &Rat) -> (Rat, Rat) {
    if t.is_negative() {
        let (lo, hi) = atanh_enclosure(&-t, eps);
        return (-hi, -lo);
    }
    if t.is_zero() {
        return (Rat::zero(), Rat::zero());
    }
    assert!(*t < rat_frac(1, 2), "argument reduction failed");
    let t2 = t * t;
    let geometric = Rat::one() / (Rat::one() - &t2);
    let mut sum = t.clone();
    let mut power = t.clone(); // t^(2k+1)
    let mut k: i64 = 0;
    loop {
        // Tail after the term with exponent 2k+1 is below
        // t^(2k+3) / ((2k+3) (1 - t^2)).
        let tail = &power * &t2 / rat_int(2 * k + 3) * &geometric;
        if tail <= *eps {
            return (sum.clone(), sum + tail);
        }
        power *= &t2;
        k += 1;
        sum += &power / rat_int(2 * k + 1);
    }
}

/// Enclosure of `ln 2 = 2 atanh(1/3)` with width at most `eps`.
pub fn ln2_interval(eps: &Rat) -> (Rat, Rat) {
    let (lo, hi) = atanh_enclosure(&rat_frac(1, 3), &(eps / rat_int(2)));
    (lo * rat_int(2), hi * rat_int(2))
}

/// Enclosure of `ln x` for rational `x > 0` with width at most `eps`.
pub fn ln_interval(x: &Rat, eps: &Rat) -> (Rat, Rat) {
    assert!(x.is_positive(), "logarithm domain is x > 0");
    // Scale into [2/3, 4/3]: ln x = halvings * ln 2 + ln y.
    let upper = rat_frac(4, 3);
    let lower = rat_frac(2, 3);
    let mut y = x.clone();
    let mut halvings: i64 = 0;
    while y > upper {
        y /= rat_int(2);
        halvings += 1;
    }
    while y < lower {
        y *= rat_int(2);
        halvings -= 1;
    }
    // y in [2/3, 4/3] puts t = (y-1)/(y+1) in [-1/5, 1/7].
    let t = (&y - Rat::one()) / (&y + Rat::one());
    let (alo, ahi) = atanh_enclosure(&t, &(eps / rat_int(4)));
    let (mut lo, mut hi) = (alo * rat_int(2), ahi * rat_int(2));
    if halvings != 0 {
        let (l2lo, l2hi) = ln2_interval(&(eps / rat_int(2 * halvings.abs())));
        let e = rat_int(halvings);
        if halvings > 0 {
            lo += &e * l2lo;
            hi += &e * l2hi;
        } else {
            lo += &e * l2hi;
            hi += &e * l2lo;
        }
    }
    (lo, hi)
}

/// `min` and `max` of `c * v` over `v` in `[lo, hi]`.
pub fn scaled_interval(c: &Rat, lo: &Rat, hi: &Rat) -> (Rat, Rat) {
    if c.is_negative() {
        (c * hi, c * lo)
    } else {
        (c * lo, c * hi)
    }
}

/// Decimal string of the largest multiple of 10^-digits at or below `x`.
pub fn floor_decimal(x: &Rat, digits: usize) -> String {
    let scale = BigInt::from(10u32).pow(digits as u32);
    let scaled = (x * Rat::from_integer(scale)).floor().to_integer();
    format_scaled(&scaled, digits)
}

/// Decimal string of the smallest multiple of 10^-digits at or above `x`.
pub fn ceil_decimal(x: &Rat, digits: usize) -> String {
    let scale = BigInt::from(10u32).pow(digits as u32);
    let scaled = (x * Rat::from_integer(scale)).ceil().to_integer();
    format_scaled(&scaled, digits)
}

fn format_scaled(scaled: &BigInt, digits: usize) -> String {
    let negative = scaled.is_negative();
    let mut body = scaled.abs().to_string();
    if digits == 0 {
        return format!("{}{}", if negative { "-" } else { "" }, body);
    }
    if body.len() <= digits {
        body = format!("{}{}", "0".repeat(digits - body.len() + 1), body);
    }
    let split = body.len() - digits;
    format!(
        "{}{}.{}",
        if negative { "-" } else { "" },
        &body[..split],
        &body[split..]
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::parse_rat;

    fn eps(digits: usize) -> Rat {
        rat_frac(1, 10i64.pow(digits as u32))
    }

    fn brackets(lo: &Rat, hi: &Rat, reference: &str) {
        let r = parse_rat(reference).unwrap();
        assert!(lo <= &r && &r <= hi, "[{lo}, {hi}] should contain {reference}");
    }

    #[test]
    fn ln2_matches_reference_digits() {
        let (lo, hi) = ln2_interval(&eps(15));
        brackets(&lo, &hi, "0.693147180559945");
        assert!(&hi - &lo <= eps(15));
    }

    #[test]
    fn ln_interval_examples() {
        let (lo, hi) = ln_interval(&rat_int(2), &eps(12));
        brackets(&lo, &hi, "0.693147180559945");

        let (lo, hi) = ln_interval(&rat_frac(1, 2), &eps(12));
        brackets(&lo, &hi, "-0.693147180559945");

        // ln 10 = 2.302585092994046...
        let (lo, hi) = ln_interval(&rat_int(10), &eps(12));
        brackets(&lo, &hi, "2.302585092994046");

        // ln(13/20) = -0.4307829160924542...
        let (lo, hi) = ln_interval(&rat_frac(13, 20), &eps(14));
        brackets(&lo, &hi, "-0.43078291609245425");
        assert!(&hi - &lo <= eps(14));

        // A tiny argument exercises many halvings.
        let (lo, hi) = ln_interval(&rat_frac(1, 1_000_000), &eps(10));
        brackets(&lo, &hi, "-13.815510557964274");
        assert!(&hi - &lo <= eps(10));
    }

    #[test]
    fn ln_one_is_zero() {
        let (lo, hi) = ln_interval(&rat_int(1), &eps(12));
        assert!(lo <= Rat::zero() && Rat::zero() <= hi);
        assert!(&hi - &lo <= eps(12));
    }

    #[test]
    fn outward_rounding() {
        let x = rat_frac(1, 3);
        assert_eq!(floor_decimal(&x, 4), "0.3333");
        assert_eq!(ceil_decimal(&x, 4), "0.3334");
        let neg = rat_frac(-1, 3);
        assert_eq!(floor_decimal(&neg, 4), "-0.3334");
        assert_eq!(ceil_decimal(&neg, 4), "-0.3333");
        let exact = rat_frac(5, 4);
        assert_eq!(floor_decimal(&exact, 2), "1.25");
        assert_eq!(ceil_decimal(&exact, 2), "1.25");
        assert_eq!(floor_decimal(&rat_int(7), 0), "7");
        assert_eq!(floor_decimal(&rat_frac(1, 100000), 3), "0.000");
    }
}
