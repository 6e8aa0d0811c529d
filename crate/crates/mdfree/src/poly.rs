//! Truncated dense polynomials: a fixed-length coefficient vector where
//! every operation silently drops degrees at or above the cutoff.
//!
//! The slice-level kernels at the bottom are shared with the transfer
//! engine, whose state vector stores many polynomials in one contiguous
//! buffer.

use std::fmt;

use thiserror::Error;

use crate::coeff::{CoeffError, CoeffField, PrimeField, Rationals};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolyError {
    #[error("cutoff mismatch: {0} vs {1}")]
    CutoffMismatch(usize, usize),
    #[error("operands belong to different fields")]
    FieldMismatch,
}

/// A polynomial modulo `z^cutoff`, stored densely with exactly `cutoff`
/// coefficients (degrees `0..cutoff`).
#[derive(Debug, Clone, PartialEq)]
pub struct TruncPoly<F: CoeffField> {
    field: F,
    coeffs: Vec<F::Elem>,
}

impl<F: CoeffField> TruncPoly<F> {
    pub fn zero(field: F, cutoff: usize) -> Self {
        assert!(cutoff >= 1, "cutoff must be at least 1");
        let coeffs = vec![field.zero(); cutoff];
        Self { field, coeffs }
    }

    pub fn constant(field: F, value: F::Elem, cutoff: usize) -> Self {
        let mut p = Self::zero(field, cutoff);
        p.coeffs[0] = value;
        p
    }

    pub fn from_coeffs(field: F, coeffs: Vec<F::Elem>) -> Self {
        assert!(!coeffs.is_empty(), "cutoff must be at least 1");
        Self { field, coeffs }
    }

    /// Convenience constructor from small integers, zero-padded to `cutoff`.
    pub fn from_ints(field: F, ints: &[i64], cutoff: usize) -> Self {
        assert!(ints.len() <= cutoff);
        let mut p = Self::zero(field.clone(), cutoff);
        for (k, n) in ints.iter().enumerate() {
            p.coeffs[k] = field.from_int(*n);
        }
        p
    }

    pub fn field(&self) -> &F {
        &self.field
    }

    pub fn cutoff(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeff(&self, k: usize) -> &F::Elem {
        &self.coeffs[k]
    }

    pub fn coeffs(&self) -> &[F::Elem] {
        &self.coeffs
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut [F::Elem] {
        &mut self.coeffs
    }

    pub fn set_coeff(&mut self, k: usize, value: F::Elem) {
        self.coeffs[k] = value;
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| self.field.is_zero(c))
    }

    fn check_compatible(&self, other: &Self) -> Result<(), PolyError> {
        if self.field != other.field {
            return Err(PolyError::FieldMismatch);
        }
        if self.cutoff() != other.cutoff() {
            return Err(PolyError::CutoffMismatch(self.cutoff(), other.cutoff()));
        }
        Ok(())
    }

    /// Coefficientwise sum, in place.
    pub fn add_assign(&mut self, other: &Self) -> Result<(), PolyError> {
        self.check_compatible(other)?;
        add_assign_slices(&self.field, &mut self.coeffs, &other.coeffs);
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self, PolyError> {
        let mut out = self.clone();
        out.add_assign(other)?;
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, PolyError> {
        self.check_compatible(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| self.field.sub(a, b))
            .collect();
        Ok(Self { field: self.field.clone(), coeffs })
    }

    /// Multiplication by `z^d` within the fixed cutoff: coefficients move up
    /// by `d` positions and the top `d` are dropped. Returns all-zero when
    /// `d >= cutoff`.
    pub fn shift_mul(&self, d: usize) -> Self {
        let mut out = self.clone();
        shift_mul_in_place(&self.field, &mut out.coeffs, d);
        out
    }

    pub fn scale(&self, c: &F::Elem) -> Self {
        let coeffs = self.coeffs.iter().map(|a| self.field.mul(a, c)).collect();
        Self { field: self.field.clone(), coeffs }
    }

    /// View of the low-order part, `new_cutoff <= cutoff`.
    pub fn truncated(&self, new_cutoff: usize) -> Self {
        assert!(new_cutoff >= 1 && new_cutoff <= self.cutoff());
        Self {
            field: self.field.clone(),
            coeffs: self.coeffs[..new_cutoff].to_vec(),
        }
    }
}

/// Reduces a rational polynomial coefficientwise into a prime field.
/// Fails when some denominator is divisible by the modulus.
pub fn reduce_poly(
    p: &TruncPoly<Rationals>,
    field: PrimeField,
) -> Result<TruncPoly<PrimeField>, CoeffError> {
    let coeffs = p
        .coeffs()
        .iter()
        .map(|c| field.from_rat(c))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(TruncPoly::from_coeffs(field, coeffs))
}

impl<F: CoeffField> fmt::Display for TruncPoly<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate() {
            if self.field.is_zero(c) {
                continue;
            }
            let cs = self.field.format_elem(c);
            let (sign, mag) = match cs.strip_prefix('-') {
                Some(rest) => ("-", rest.to_string()),
                None => ("+", cs),
            };
            if first {
                if sign == "-" {
                    write!(f, "-")?;
                }
                first = false;
            } else if sign == "-" {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let unit_coeff = mag == "1" && k > 0;
            if !unit_coeff {
                write!(f, "{}", mag)?;
            }
            match k {
                0 => {}
                1 => write!(f, "z")?,
                _ => write!(f, "z^{}", k)?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Slice kernels. These are the inner loops of the transfer column step and
// operate on raw coefficient slices of equal length.
// ---------------------------------------------------------------------------

/// `dst[k] += src[k]`.
pub fn add_assign_slices<F: CoeffField>(field: &F, dst: &mut [F::Elem], src: &[F::Elem]) {
    debug_assert_eq!(dst.len(), src.len());
    for (d, s) in dst.iter_mut().zip(src) {
        field.add_assign(d, s);
    }
}

/// `dst += z * src`, i.e. `dst[k] += src[k-1]` for `k >= 1`.
pub fn add_shifted_slices<F: CoeffField>(field: &F, dst: &mut [F::Elem], src: &[F::Elem]) {
    debug_assert_eq!(dst.len(), src.len());
    for (d, s) in dst.iter_mut().skip(1).zip(src) {
        field.add_assign(d, s);
    }
}

/// `buf = z^d * buf` within the fixed length: moves coefficients up by `d`
/// and zeroes the vacated low positions.
pub fn shift_mul_in_place<F: CoeffField>(field: &F, buf: &mut [F::Elem], d: usize) {
    if d == 0 {
        return;
    }
    let len = buf.len();
    if d >= len {
        for c in buf.iter_mut() {
            *c = field.zero();
        }
        return;
    }
    for k in (d..len).rev() {
        buf[k] = std::mem::replace(&mut buf[k - d], field.zero());
    }
}
