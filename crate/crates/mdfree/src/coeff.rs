//! Coefficient fields for the exact series arithmetic: word-sized prime
//! residues for the modular pipeline and arbitrary-precision rationals for
//! reference runs.
//!
//! Both instantiations share one interface so that the series machinery and
//! the pipeline run unchanged over either field.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Exact rational number (reduced, positive denominator).
pub type Rat = num_rational::BigRational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CoeffError {
    #[error("cannot invert zero")]
    ZeroInverse,
    #[error("denominator {0} is not a unit modulo {1}")]
    NonInvertible(String, u32),
    #[error("{0} is not an odd prime in [3, 2^31)")]
    BadModulus(u64),
}

/// A coefficient field. The context object carries whatever data the
/// arithmetic needs (the modulus for residues, nothing for rationals);
/// elements themselves are plain values.
pub trait CoeffField: Clone + PartialEq + fmt::Debug + Send + Sync + 'static {
    type Elem: Clone + PartialEq + fmt::Debug + Send + Sync + 'static;

    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn from_int(&self, n: i64) -> Self::Elem;
    /// Embeds a rational; fails when the denominator is not a unit.
    fn from_rat(&self, r: &Rat) -> Result<Self::Elem, CoeffError>;
    fn is_zero(&self, a: &Self::Elem) -> bool;
    fn is_one(&self, a: &Self::Elem) -> bool;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn add_assign(&self, a: &mut Self::Elem, b: &Self::Elem);
    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn neg(&self, a: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn inv(&self, a: &Self::Elem) -> Result<Self::Elem, CoeffError>;
    fn div(&self, a: &Self::Elem, b: &Self::Elem) -> Result<Self::Elem, CoeffError> {
        Ok(self.mul(a, &self.inv(b)?))
    }
    /// `None` for characteristic zero.
    fn characteristic(&self) -> Option<u64>;
    fn format_elem(&self, a: &Self::Elem) -> String;
}

/// Residue arithmetic modulo a fixed odd prime below 2^31.
///
/// The bound keeps every product of two canonical representatives inside
/// 64 bits, so multiplication needs no wide intermediates beyond `u64`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrimeField {
    modulus: u32,
}

impl PrimeField {
    /// Creates the field, rejecting moduli that are even, out of range, or
    /// composite (deterministic Miller-Rabin).
    pub fn new(modulus: u32) -> Result<Self, CoeffError> {
        if modulus < 3 || modulus % 2 == 0 || u64::from(modulus) >= (1 << 31) {
            return Err(CoeffError::BadModulus(u64::from(modulus)));
        }
        if !is_prime(u64::from(modulus)) {
            return Err(CoeffError::BadModulus(u64::from(modulus)));
        }
        Ok(Self { modulus })
    }

    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    /// Canonical representative of an arbitrary signed integer.
    pub fn reduce_int(&self, n: i64) -> u32 {
        n.rem_euclid(i64::from(self.modulus)) as u32
    }

    /// Canonical representative of a big integer.
    pub fn reduce_bigint(&self, n: &BigInt) -> u32 {
        let m = BigInt::from(self.modulus);
        let r = ((n % &m) + &m) % &m;
        r.to_u32().expect("residue fits in u32")
    }
}

impl CoeffField for PrimeField {
    type Elem = u32;

    fn zero(&self) -> u32 {
        0
    }

    fn one(&self) -> u32 {
        1
    }

    fn from_int(&self, n: i64) -> u32 {
        self.reduce_int(n)
    }

    fn from_rat(&self, r: &Rat) -> Result<u32, CoeffError> {
        let num = self.reduce_bigint(r.numer());
        let den = self.reduce_bigint(r.denom());
        if den == 0 {
            return Err(CoeffError::NonInvertible(
                r.denom().to_string(),
                self.modulus,
            ));
        }
        Ok(self.mul(&num, &self.inv(&den)?))
    }

    fn is_zero(&self, a: &u32) -> bool {
        *a == 0
    }

    fn is_one(&self, a: &u32) -> bool {
        *a == 1
    }

    fn add(&self, a: &u32, b: &u32) -> u32 {
        let s = a + b; // both < 2^31, no overflow
        if s >= self.modulus {
            s - self.modulus
        } else {
            s
        }
    }

    fn add_assign(&self, a: &mut u32, b: &u32) {
        *a = self.add(a, b);
    }

    fn sub(&self, a: &u32, b: &u32) -> u32 {
        if a >= b {
            a - b
        } else {
            self.modulus - (b - a)
        }
    }

    fn neg(&self, a: &u32) -> u32 {
        if *a == 0 {
            0
        } else {
            self.modulus - a
        }
    }

    fn mul(&self, a: &u32, b: &u32) -> u32 {
        ((u64::from(*a) * u64::from(*b)) % u64::from(self.modulus)) as u32
    }

    fn inv(&self, a: &u32) -> Result<u32, CoeffError> {
        if *a == 0 {
            return Err(CoeffError::ZeroInverse);
        }
        // Fermat: a^(p-2) mod p.
        Ok(pow_mod(
            u64::from(*a),
            u64::from(self.modulus) - 2,
            u64::from(self.modulus),
        ) as u32)
    }

    fn characteristic(&self) -> Option<u64> {
        Some(u64::from(self.modulus))
    }

    fn format_elem(&self, a: &u32) -> String {
        a.to_string()
    }
}

/// The rational field; a stateless context over `Rat`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Rationals;

impl CoeffField for Rationals {
    type Elem = Rat;

    fn zero(&self) -> Rat {
        Rat::zero()
    }

    fn one(&self) -> Rat {
        Rat::one()
    }

    fn from_int(&self, n: i64) -> Rat {
        Rat::from_integer(BigInt::from(n))
    }

    fn from_rat(&self, r: &Rat) -> Result<Rat, CoeffError> {
        Ok(r.clone())
    }

    fn is_zero(&self, a: &Rat) -> bool {
        a.is_zero()
    }

    fn is_one(&self, a: &Rat) -> bool {
        a.is_one()
    }

    fn add(&self, a: &Rat, b: &Rat) -> Rat {
        a + b
    }

    fn add_assign(&self, a: &mut Rat, b: &Rat) {
        *a += b;
    }

    fn sub(&self, a: &Rat, b: &Rat) -> Rat {
        a - b
    }

    fn neg(&self, a: &Rat) -> Rat {
        -a
    }

    fn mul(&self, a: &Rat, b: &Rat) -> Rat {
        a * b
    }

    fn inv(&self, a: &Rat) -> Result<Rat, CoeffError> {
        if a.is_zero() {
            return Err(CoeffError::ZeroInverse);
        }
        Ok(a.recip())
    }

    fn characteristic(&self) -> Option<u64> {
        None
    }

    fn format_elem(&self, a: &Rat) -> String {
        rat_string(a)
    }
}

/// Renders a rational as `numerator/denominator`, omitting the denominator
/// when it is one.
pub fn rat_string(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses `"n"`, `"n/d"`, or a plain decimal such as `"0.65"` into an exact
/// rational.
pub fn parse_rat(s: &str) -> Option<Rat> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num.trim().parse().ok()?;
        let d: BigInt = den.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(Rat::new(n, d));
    }
    if let Some((int_part, frac_part)) = s.split_once('.') {
        if frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let negative = int_part.trim_start().starts_with('-');
        let int: BigInt = if int_part.is_empty() || int_part == "-" {
            BigInt::zero()
        } else {
            int_part.parse().ok()?
        };
        let frac: BigInt = frac_part.parse().ok()?;
        let scale = BigInt::from(10u32).pow(frac_part.len() as u32);
        let numer = int.abs() * &scale + frac;
        let numer = if negative { -numer } else { numer };
        return Some(Rat::new(numer, scale));
    }
    let n: BigInt = s.parse().ok()?;
    Some(Rat::from_integer(n))
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin primality test, valid for every `u64`.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0u32;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    // This witness set is known to be exhaustive below 3.3 * 10^24.
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 0..s - 1 {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}
