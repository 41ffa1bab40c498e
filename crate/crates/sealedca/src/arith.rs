//! Arbitrary-precision modular arithmetic shared by the cryptographic
//! modules, plus the seeded random source every randomized operation in the
//! crate draws from.

use num_bigint::{BigInt, BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::One;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

/// Miller-Rabin rounds used for all prime generation (error <= 2^-80).
pub const MILLER_RABIN_ROUNDS: u32 = 40;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ArithError {
    #[error("{0} is not invertible modulo {1}")]
    NotInvertible(BigUint, BigUint),
}

/// Deterministic random stream. Protocol actors each own one, forked from a
/// master seed, so complete runs replay exactly.
#[derive(Debug, Clone)]
pub struct RandomSource {
    rng: ChaCha20Rng,
}

impl RandomSource {
    pub fn from_seed(seed: u64) -> Self {
        Self {
            rng: ChaCha20Rng::seed_from_u64(seed),
        }
    }

    /// Derive an independent child stream. Children drawn in a fixed order
    /// from the same parent are themselves deterministic.
    pub fn fork(&mut self) -> Self {
        Self {
            rng: ChaCha20Rng::seed_from_u64(self.rng.next_u64()),
        }
    }
}

impl RngCore for RandomSource {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.rng.try_fill_bytes(dest)
    }
}

/// base^exp mod modulus. Total for modulus >= 2.
pub fn mod_pow(base: &BigUint, exp: &BigUint, modulus: &BigUint) -> BigUint {
    assert!(
        *modulus >= BigUint::from(2u32),
        "mod_pow requires modulus >= 2"
    );
    base.modpow(exp, modulus)
}

/// Multiplicative inverse of `a` modulo `modulus` via the extended Euclidean
/// algorithm. Fails when gcd(a, modulus) != 1.
pub fn mod_inv(a: &BigUint, modulus: &BigUint) -> Result<BigUint, ArithError> {
    let a_int = BigInt::from(a.clone());
    let m_int = BigInt::from(modulus.clone());
    let ext = a_int.extended_gcd(&m_int);
    if !ext.gcd.is_one() {
        return Err(ArithError::NotInvertible(a.clone(), modulus.clone()));
    }
    let mut x = ext.x % &m_int;
    if x.sign() == num_bigint::Sign::Minus {
        x += &m_int;
    }
    Ok(x.to_biguint().expect("reduced residue is non-negative"))
}

/// Largest r with r*r <= a.
pub fn isqrt(a: &BigUint) -> BigUint {
    a.sqrt()
}

/// Uniform draw from [1, bound-1]. Never returns zero; bound must be >= 2.
pub fn rand_below(bound: &BigUint, rng: &mut RandomSource) -> BigUint {
    assert!(
        *bound >= BigUint::from(2u32),
        "rand_below requires bound >= 2"
    );
    let upper = bound - BigUint::one();
    rng.gen_biguint_below(&upper) + BigUint::one()
}

/// Miller-Rabin probabilistic primality test with random bases.
pub fn is_probable_prime(n: &BigUint, rounds: u32, rng: &mut RandomSource) -> bool {
    let two = BigUint::from(2u32);
    let three = BigUint::from(3u32);
    if *n < two {
        return false;
    }
    if *n == two || *n == three {
        return true;
    }
    if n.is_even() {
        return false;
    }

    // n - 1 = d * 2^s with d odd
    let n_minus_one = n - BigUint::one();
    let mut d = n_minus_one.clone();
    let mut s = 0u64;
    while d.is_even() {
        d >>= 1;
        s += 1;
    }

    'witness: for _ in 0..rounds {
        // base uniform in [2, n-2]
        let base = rng.gen_biguint_below(&(n - &three)) + &two;
        let mut x = base.modpow(&d, n);
        if x.is_one() || x == n_minus_one {
            continue;
        }
        for _ in 0..s - 1 {
            x = (&x * &x) % n;
            if x == n_minus_one {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Probable prime of exactly `bits` bits (top bit set), Miller-Rabin error
/// <= 2^-80. Deterministic for a fixed seed.
pub fn gen_prime(bits: u64, rng: &mut RandomSource) -> BigUint {
    assert!(bits >= 8, "gen_prime requires bits >= 8");
    loop {
        let mut candidate = rng.gen_biguint(bits);
        candidate.set_bit(bits - 1, true);
        candidate.set_bit(0, true);
        if is_probable_prime(&candidate, MILLER_RABIN_ROUNDS, rng) {
            return candidate;
        }
    }
}

/// Two distinct probable primes of the same bit length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimePair {
    pub p: BigUint,
    pub q: BigUint,
    pub bit_length: u64,
}

impl PrimePair {
    pub fn generate(bit_length: u64, rng: &mut RandomSource) -> Self {
        let p = gen_prime(bit_length, rng);
        let q = loop {
            let q = gen_prime(bit_length, rng);
            if q != p {
                break q;
            }
        };
        Self { p, q, bit_length }
    }

    /// Wrap externally chosen primes (toy parameters in tests).
    pub fn from_parts(p: BigUint, q: BigUint) -> Self {
        assert_ne!(p, q, "prime pair requires p != q");
        let bit_length = p.bits().max(q.bits());
        Self { p, q, bit_length }
    }
}
