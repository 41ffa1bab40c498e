//! Deterministic fixed-point encoding of bids, norms, and payments.
//!
//! Every actor encodes reals as `floor(x * 2^e)` for a shared exponent `e`,
//! so norm and payment computations are bit-identical across actors. All
//! rounding is truncation toward zero; that matches the floor in the encoding
//! and keeps the order of encoded values consistent with the order of the
//! reals they encode.

use crate::arith;
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FixedPointError {
    #[error("cannot encode a negative value")]
    NegativeInput,
    #[error("exponent mismatch: {0} vs {1}")]
    ExponentMismatch(u32, u32),
    #[error("division by zero")]
    DivisionByZero,
}

/// An integer `raw = floor(x * 2^exponent)` standing for the real `x`.
/// Values are combinable only when their exponents match.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FixedPointValue {
    raw: BigUint,
    exponent: u32,
}

impl FixedPointValue {
    pub fn from_raw(raw: BigUint, exponent: u32) -> Self {
        Self { raw, exponent }
    }

    pub fn zero(exponent: u32) -> Self {
        Self {
            raw: BigUint::zero(),
            exponent,
        }
    }

    pub fn raw(&self) -> &BigUint {
        &self.raw
    }

    pub fn raw_u64(&self) -> Option<u64> {
        let digits = self.raw.to_u64_digits();
        match digits.len() {
            0 => Some(0),
            1 => Some(digits[0]),
            _ => None,
        }
    }

    pub fn exponent(&self) -> u32 {
        self.exponent
    }

    pub fn is_zero(&self) -> bool {
        self.raw.is_zero()
    }

    /// `floor(x * 2^e)` for a non-negative exact rational x.
    pub fn encode(x: &BigRational, exponent: u32) -> Result<Self, FixedPointError> {
        if x.is_negative() {
            return Err(FixedPointError::NegativeInput);
        }
        let scale = BigRational::from_integer(BigInt::from(BigUint::from(1u32) << exponent));
        let raw = (x * scale).floor().to_integer();
        Ok(Self {
            raw: raw.to_biguint().expect("non-negative by construction"),
            exponent,
        })
    }

    /// Exact rational represented by this encoding: raw / 2^e.
    pub fn decode(&self) -> BigRational {
        BigRational::new(
            BigInt::from(self.raw.clone()),
            BigInt::from(BigUint::from(1u32) << self.exponent),
        )
    }

    fn check_exponent(&self, other: &Self) -> Result<(), FixedPointError> {
        if self.exponent != other.exponent {
            return Err(FixedPointError::ExponentMismatch(
                self.exponent,
                other.exponent,
            ));
        }
        Ok(())
    }

    /// Exact integer addition of the raw encodings.
    pub fn add(&self, other: &Self) -> Result<Self, FixedPointError> {
        self.check_exponent(other)?;
        Ok(Self {
            raw: &self.raw + &other.raw,
            exponent: self.exponent,
        })
    }

    /// `floor(a_raw * b_raw / 2^e)`.
    pub fn mul(&self, other: &Self) -> Result<Self, FixedPointError> {
        self.check_exponent(other)?;
        Ok(Self {
            raw: (&self.raw * &other.raw) >> self.exponent,
            exponent: self.exponent,
        })
    }

    /// `floor(a_raw * 2^e / b_raw)`.
    pub fn div(&self, other: &Self) -> Result<Self, FixedPointError> {
        self.check_exponent(other)?;
        if other.raw.is_zero() {
            return Err(FixedPointError::DivisionByZero);
        }
        Ok(Self {
            raw: (&self.raw << self.exponent) / &other.raw,
            exponent: self.exponent,
        })
    }

    /// Canonical encoding of sqrt(k) for a positive integer k:
    /// `raw = isqrt(k * 2^(2e))`, which equals `floor(sqrt(k) * 2^e)` exactly.
    pub fn sqrt_of_int(k: u64, exponent: u32) -> Self {
        assert!(k >= 1, "sqrt_of_int requires k >= 1");
        let scaled = BigUint::from(k) << (2 * exponent);
        Self {
            raw: arith::isqrt(&scaled),
            exponent,
        }
    }
}
