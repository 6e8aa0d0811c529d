//! Multi-prime lifting: Chinese remaindering across per-prime pipeline
//! outputs, rational reconstruction of each coefficient, and stabilization
//! detection with a mandatory verification prime.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coeff::{is_prime, CoeffField, PrimeField, Rat};

/// The prime every descending batch starts from.
pub const FIRST_PRIME: u64 = 2147483647; // 2^31 - 1

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReconstructError {
    #[error("moduli are not pairwise coprime (gcd {0})")]
    NotCoprime(String),
    #[error("empty residue list")]
    EmptyInput,
    #[error("invalid batch: {0}")]
    InvalidBatch(String),
    #[error("reconstruction did not stabilize within {primes} primes")]
    Unstable { primes: usize },
}

/// Largest prime strictly below `x`.
pub fn next_prime_below(x: u64) -> u64 {
    assert!(x > 3, "no odd prime below {x}");
    let mut candidate = if x % 2 == 0 { x - 1 } else { x - 2 };
    while !is_prime(candidate) {
        candidate -= 2;
    }
    candidate
}

/// The first `count` primes descending from 2^31.
pub fn descending_primes(count: usize) -> Vec<u64> {
    let mut primes = Vec::with_capacity(count);
    let mut bound = 1u64 << 31;
    for _ in 0..count {
        let p = next_prime_below(bound);
        primes.push(p);
        bound = p;
    }
    primes
}

/// Combines residues into the unique value modulo the product of the
/// moduli. Moduli must be pairwise coprime.
pub fn crt(residues: &[(BigUint, BigUint)]) -> Result<(BigUint, BigUint), ReconstructError> {
    let mut iter = residues.iter();
    let (first_v, first_m) = iter.next().ok_or(ReconstructError::EmptyInput)?;
    let mut value = BigInt::from(first_v.clone());
    let mut modulus = BigInt::from(first_m.clone());
    for (r, p) in iter {
        let r = BigInt::from(r.clone());
        let p = BigInt::from(p.clone());
        let ext = modulus.extended_gcd(&p);
        if !ext.gcd.is_one() {
            return Err(ReconstructError::NotCoprime(ext.gcd.to_string()));
        }
        // value + modulus * ((r - value) / modulus mod p)
        let inv = ext.x.mod_floor(&p);
        let delta = ((&r - &value) * inv).mod_floor(&p);
        value += &modulus * delta;
        modulus *= &p;
        value = value.mod_floor(&modulus);
    }
    Ok((
        value.to_biguint().expect("canonical residue is nonnegative"),
        modulus.to_biguint().expect("modulus is positive"),
    ))
}

/// Recovers the unique fraction `n/d` with `|n|, d <= floor(sqrt(m/2))`,
/// `gcd(d, m) = 1`, and `d * value = n (mod m)`, if one exists, by the
/// half-extended Euclidean algorithm.
pub fn rational_reconstruct(value: &BigUint, modulus: &BigUint) -> Option<Rat> {
    let m = BigInt::from(modulus.clone());
    let v = BigInt::from(value.clone()).mod_floor(&m);
    let bound = BigInt::from((modulus / 2u32).sqrt());
    let (mut r0, mut r1) = (m.clone(), v);
    let (mut t0, mut t1) = (BigInt::zero(), BigInt::one());
    while r1 > bound {
        let q = &r0 / &r1;
        let r = &r0 - &q * &r1;
        r0 = std::mem::replace(&mut r1, r);
        let t = &t0 - &q * &t1;
        t0 = std::mem::replace(&mut t1, t);
    }
    let (mut numer, mut denom) = (r1, t1);
    if denom.is_negative() {
        numer = -numer;
        denom = -denom;
    }
    if denom.is_zero() || denom > bound || !denom.gcd(&m).is_one() {
        return None;
    }
    // The congruence survives division by the common factor.
    let g = numer.gcd(&denom);
    Some(Rat::new(numer / &g, denom / g))
}

/// One per-prime pipeline output: the residues of the coefficient vector.
/// This is the JSON unit of exchange between per-prime runs and the lifter.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResidueVector {
    pub modulus: u32,
    pub order: usize,
    pub coeffs: Vec<u32>,
}

/// A set of per-prime residue vectors, primes strictly decreasing from
/// 2^31 - 1, all describing the same coefficient list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimeBatch {
    vectors: Vec<ResidueVector>,
}

impl PrimeBatch {
    pub fn new(vectors: Vec<ResidueVector>) -> Result<Self, ReconstructError> {
        if vectors.len() < 2 {
            return Err(ReconstructError::InvalidBatch(
                "need at least two primes".into(),
            ));
        }
        if u64::from(vectors[0].modulus) != FIRST_PRIME {
            return Err(ReconstructError::InvalidBatch(format!(
                "batch must start at {FIRST_PRIME}, got {}",
                vectors[0].modulus
            )));
        }
        let order = vectors[0].order;
        let len = vectors[0].coeffs.len();
        let mut previous = u64::MAX;
        for v in &vectors {
            if v.order != order || v.coeffs.len() != len {
                return Err(ReconstructError::InvalidBatch(
                    "residue vectors describe different coefficient lists".into(),
                ));
            }
            let p = u64::from(v.modulus);
            if !is_prime(p) {
                return Err(ReconstructError::InvalidBatch(format!("{p} is not prime")));
            }
            if p >= previous {
                return Err(ReconstructError::InvalidBatch(
                    "primes must be strictly decreasing".into(),
                ));
            }
            if p <= (order as u64) + 1 {
                return Err(ReconstructError::InvalidBatch(format!(
                    "prime {p} does not exceed the series cutoff"
                )));
            }
            if v.coeffs.iter().any(|&c| u64::from(c) >= p) {
                return Err(ReconstructError::InvalidBatch(format!(
                    "residues not reduced modulo {p}"
                )));
            }
            previous = p;
        }
        Ok(Self { vectors })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[ResidueVector] {
        &self.vectors
    }

    fn coeff_count(&self) -> usize {
        self.vectors[0].coeffs.len()
    }

    /// CRT + rational reconstruction of every coefficient over the first
    /// `k` primes; `None` when any coefficient fails to reconstruct.
    fn lift_prefix(&self, k: usize) -> Option<Vec<Rat>> {
        let mut out = Vec::with_capacity(self.coeff_count());
        for i in 0..self.coeff_count() {
            let residues: Vec<(BigUint, BigUint)> = self.vectors[..k]
                .iter()
                .map(|v| (BigUint::from(v.coeffs[i]), BigUint::from(v.modulus)))
                .collect();
            let (value, modulus) = crt(&residues).expect("batch primes are distinct");
            out.push(rational_reconstruct(&value, &modulus)?);
        }
        Some(out)
    }
}

/// A stabilized lift: the recovered coefficients and how many primes were
/// consumed (stabilization evidence plus the verification prime).
#[derive(Debug, Clone, PartialEq)]
pub struct LiftOutcome {
    pub values: Vec<Rat>,
    pub primes_used: usize,
}

/// Lifts the batch by increasing the prime count until the reconstructed
/// vector (a) succeeds for every coefficient and (b) is identical for `k`
/// and `k+1` primes; the next prime is then consumed as a verification
/// prime and every lifted value is checked against its residue.
pub fn stabilized_lift(batch: &PrimeBatch) -> Result<LiftOutcome, ReconstructError> {
    let total = batch.len();
    let mut narrow = batch.lift_prefix(1);
    for k in 1..total {
        let wide = batch.lift_prefix(k + 1);
        if let (Some(a), Some(b)) = (&narrow, &wide) {
            if a == b && k + 2 <= total {
                let verifier = &batch.vectors()[k + 1];
                let field = PrimeField::new(verifier.modulus)
                    .expect("batch moduli are validated primes");
                let verified = a.iter().zip(&verifier.coeffs).all(|(value, &residue)| {
                    field.from_rat(value).is_ok_and(|r| r == residue)
                });
                if verified {
                    return Ok(LiftOutcome {
                        values: a.clone(),
                        primes_used: k + 2,
                    });
                }
            }
        }
        narrow = wide;
    }
    Err(ReconstructError::Unstable { primes: total })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use proptest::prelude::*;

    fn embed(r: &Rat, p: u64) -> u32 {
        let field = PrimeField::new(p as u32).unwrap();
        field.from_rat(r).unwrap()
    }

    fn rat(n: i64, d: i64) -> Rat {
        Rat::new(BigInt::from(n), BigInt::from(d))
    }

    fn batch_for(values: &[Rat], count: usize) -> PrimeBatch {
        let vectors = descending_primes(count)
            .into_iter()
            .map(|p| ResidueVector {
                modulus: p as u32,
                order: values.len() + 1,
                coeffs: values.iter().map(|v| embed(v, p)).collect(),
            })
            .collect();
        PrimeBatch::new(vectors).unwrap()
    }

    #[test]
    fn next_prime_examples() {
        assert_eq!(next_prime_below(1 << 31), 2147483647);
        assert_eq!(next_prime_below(10), 7);
        let primes = descending_primes(15);
        assert_eq!(primes[0], 2147483647);
        assert_eq!(primes[14], 2147483269);
        assert!(primes.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn crt_examples() {
        let (v, m) = crt(&[
            (BigUint::from(3u32), BigUint::from(5u32)),
            (BigUint::from(4u32), BigUint::from(7u32)),
        ])
        .unwrap();
        assert_eq!(v, BigUint::from(18u32));
        assert_eq!(m, BigUint::from(35u32));

        let single = crt(&[(BigUint::from(3u32), BigUint::from(5u32))]).unwrap();
        assert_eq!(single, (BigUint::from(3u32), BigUint::from(5u32)));

        let zeros = crt(&[
            (BigUint::from(0u32), BigUint::from(5u32)),
            (BigUint::from(0u32), BigUint::from(7u32)),
        ])
        .unwrap();
        assert_eq!(zeros.0, BigUint::from(0u32));

        assert!(matches!(
            crt(&[
                (BigUint::from(1u32), BigUint::from(6u32)),
                (BigUint::from(2u32), BigUint::from(4u32)),
            ]),
            Err(ReconstructError::NotCoprime(_))
        ));
        assert_eq!(crt(&[]), Err(ReconstructError::EmptyInput));
    }

    #[test]
    fn rational_reconstruct_examples() {
        // 2 * 18 = 36 = 1 mod 35, so 18 encodes 1/2.
        let got = rational_reconstruct(&BigUint::from(18u32), &BigUint::from(35u32)).unwrap();
        assert_eq!(got, rat(1, 2));

        let zero = rational_reconstruct(&BigUint::from(0u32), &BigUint::from(101u32)).unwrap();
        assert_eq!(zero, rat(0, 1));

        // Round trip of -7/16 through the largest batch prime.
        let p = BigUint::from(2147483647u64);
        let v = BigUint::from(embed(&rat(-7, 16), 2147483647));
        assert_eq!(rational_reconstruct(&v, &p).unwrap(), rat(-7, 16));
    }

    #[test]
    fn lift_recovers_small_table_values() {
        let values = [rat(1, 16), rat(1, 192), rat(7, 1536)];
        let batch = batch_for(&values, 4);
        let outcome = stabilized_lift(&batch).unwrap();
        assert_eq!(outcome.values, values);
        // Stabilizes on the first pair of primes, then verifies on one more.
        assert_eq!(outcome.primes_used, 3);
    }

    #[test]
    fn lift_of_zero_vector() {
        let values = [rat(0, 1), rat(0, 1)];
        let batch = batch_for(&values, 3);
        let outcome = stabilized_lift(&batch).unwrap();
        assert!(outcome.values.iter().all(|v| v.is_zero()));
        assert_eq!(outcome.primes_used, 3);
    }

    #[test]
    fn adversarial_denominators_need_more_primes() {
        // Denominator above sqrt(p/2): not reconstructible from one prime,
        // fine from two.
        let values = [rat(1, 1000003)];
        let batch = batch_for(&values, 4);
        assert!(batch.lift_prefix(1).is_none());
        assert_eq!(batch.lift_prefix(2).unwrap(), values);
        let outcome = stabilized_lift(&batch).unwrap();
        assert_eq!(outcome.values, values);
        assert_eq!(outcome.primes_used, 4);

        // Denominator above sqrt(p1*p2/2) as well: the symmetric bound
        // rejects it at two primes and admits it at three.
        let values = [rat(1, 2147483659)];
        let batch = batch_for(&values, 5);
        assert!(batch.lift_prefix(1).is_none());
        assert!(batch.lift_prefix(2).is_none());
        assert_eq!(batch.lift_prefix(3).unwrap(), values);
        let outcome = stabilized_lift(&batch).unwrap();
        assert_eq!(outcome.values, values);
        assert_eq!(outcome.primes_used, 5);
    }

    #[test]
    fn unstable_when_primes_run_out() {
        let values = [rat(1, 2147483659)];
        let batch = batch_for(&values, 2);
        assert!(matches!(
            stabilized_lift(&batch),
            Err(ReconstructError::Unstable { primes: 2 })
        ));
    }

    #[test]
    fn batch_validation() {
        let good = ResidueVector {
            modulus: 2147483647,
            order: 4,
            coeffs: vec![1, 2, 3],
        };
        let next = ResidueVector {
            modulus: 2147483629,
            order: 4,
            coeffs: vec![1, 2, 3],
        };
        assert!(PrimeBatch::new(vec![good.clone(), next.clone()]).is_ok());
        assert!(PrimeBatch::new(vec![good.clone()]).is_err());
        assert!(PrimeBatch::new(vec![next.clone(), good.clone()]).is_err());
        let mut wrong_len = next.clone();
        wrong_len.coeffs.push(0);
        assert!(PrimeBatch::new(vec![good.clone(), wrong_len]).is_err());
        let mut unreduced = next;
        unreduced.coeffs[0] = u32::MAX;
        assert!(PrimeBatch::new(vec![good, unreduced]).is_err());
    }

    #[test]
    fn residue_vector_json_schema() {
        let v = ResidueVector {
            modulus: 2147483647,
            order: 4,
            coeffs: vec![7, 11],
        };
        let json = serde_json::to_string(&v).unwrap();
        assert_eq!(json, r#"{"modulus":2147483647,"order":4,"coeffs":[7,11]}"#);
        let back: ResidueVector = serde_json::from_str(&json).unwrap();
        assert_eq!(back, v);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn lift_roundtrip(n in -1_000_000_000i64..1_000_000_000, d in 1i64..1_000_000_000) {
            let value = rat(n, d);
            let batch = batch_for(std::slice::from_ref(&value), 6);
            let outcome = stabilized_lift(&batch).unwrap();
            prop_assert_eq!(&outcome.values[..], &[value]);
        }

        #[test]
        fn crt_reduces_back(a in 0u64..5, b in 0u64..7, c in 0u64..11) {
            let residues = [
                (BigUint::from(a), BigUint::from(5u32)),
                (BigUint::from(b), BigUint::from(7u32)),
                (BigUint::from(c), BigUint::from(11u32)),
            ];
            let (v, m) = crt(&residues).unwrap();
            prop_assert_eq!(m, BigUint::from(385u32));
            prop_assert_eq!(&v % 5u32, BigUint::from(a));
            prop_assert_eq!(&v % 7u32, BigUint::from(b));
            prop_assert_eq!(&v % 11u32, BigUint::from(c));
        }

        #[test]
        fn reconstruct_inverts_embedding(n in -30000i64..30000, d in 1i64..30000) {
            // 2 * max(|n|, d)^2 < p guarantees recovery from one prime.
            let value = rat(n, d);
            let p = BigUint::from(2147483647u64);
            let residue = BigUint::from(embed(&value, 2147483647));
            prop_assert_eq!(rational_reconstruct(&residue, &p).unwrap(), value);
        }
    }
}
