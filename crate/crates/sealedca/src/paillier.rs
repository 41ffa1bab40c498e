//! The Paillier cryptosystem in the `c = g^(m + n*r) mod n^2` form, with
//! additive homomorphism, plaintext-scalar multiplication, and self-blinding.
//!
//! `g` is sampled at random from Z*_{n^2} and re-sampled until the
//! decryptability condition gcd(L(g^lambda mod n^2), n) = 1 holds. The
//! `NPlusOne` generator mode picks g = n + 1 instead, which always satisfies
//! the condition and makes encryption a single multiplication. In this
//! exponent-randomized scheme g = n + 1 collapses the randomizer
//! (g^(n*r) = 1), so ciphertexts become deterministic: use it only for
//! benchmarks and tests that do not rely on ciphertext freshness.

use crate::arith::{self, PrimePair, RandomSource};
use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PaillierError {
    #[error("plaintext out of range (must be < n)")]
    PlaintextOutOfRange,
    #[error("malformed ciphertext")]
    MalformedCiphertext,
    #[error("prime pair unusable for a Paillier modulus")]
    BadPrimes,
}

/// Generator selection at key generation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorMode {
    /// Random g in Z*_{n^2}, validated against the decryptability condition.
    #[default]
    Random,
    /// g = n + 1. Fast but derandomizes encryption in this scheme.
    NPlusOne,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PaillierPublicKey {
    pub n: BigUint,
    pub g: BigUint,
    pub n_squared: BigUint,
    /// Cached g^n mod n^2; encryption is g^m * (g^n)^r.
    g_to_n: BigUint,
}

#[derive(Debug, Clone)]
pub struct PaillierPrivateKey {
    pub lambda: BigUint,
    pub primes: PrimePair,
    /// Precomputed L(g^lambda mod n^2)^-1 mod n.
    mu: BigUint,
    n: BigUint,
    n_squared: BigUint,
}

/// A value in Z*_{n^2}.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Ciphertext {
    value: BigUint,
}

impl Ciphertext {
    pub fn value(&self) -> &BigUint {
        &self.value
    }

    /// Big-endian byte string, as embedded (length-prefixed) in protocol
    /// messages.
    pub fn to_bytes_be(&self) -> Vec<u8> {
        self.value.to_bytes_be()
    }

    pub fn from_bytes_be(bytes: &[u8]) -> Self {
        Self {
            value: BigUint::from_bytes_be(bytes),
        }
    }
}

fn l_function(x: &BigUint, n: &BigUint) -> BigUint {
    // L(x) = (x - 1) / n; callers guarantee x = 1 (mod n).
    (x - BigUint::one()) / n
}

/// Generate a key pair with primes of `bits / 2` bits each.
pub fn keygen(
    bits: u64,
    mode: GeneratorMode,
    rng: &mut RandomSource,
) -> (PaillierPublicKey, PaillierPrivateKey) {
    assert!(bits >= 16, "keygen requires bits >= 16");
    loop {
        let primes = PrimePair::generate(bits / 2, rng);
        if let Ok(pair) = from_primes(primes, mode, rng) {
            return pair;
        }
    }
}

/// Build a key pair from externally chosen primes (toy parameters in tests).
pub fn from_primes(
    primes: PrimePair,
    mode: GeneratorMode,
    rng: &mut RandomSource,
) -> Result<(PaillierPublicKey, PaillierPrivateKey), PaillierError> {
    let n = &primes.p * &primes.q;
    let n_squared = &n * &n;
    let lambda = (&primes.p - BigUint::one()).lcm(&(&primes.q - BigUint::one()));

    let pick = |rng: &mut RandomSource| -> BigUint {
        match mode {
            GeneratorMode::NPlusOne => &n + BigUint::one(),
            GeneratorMode::Random => loop {
                let g = arith::rand_below(&n_squared, rng);
                if g.gcd(&n_squared).is_one() {
                    break g;
                }
            },
        }
    };

    let mut attempts = 0;
    let (g, mu) = loop {
        let g = pick(rng);
        let denom = l_function(&g.modpow(&lambda, &n_squared), &n) % &n;
        if let Ok(mu) = arith::mod_inv(&denom, &n) {
            break (g, mu);
        }
        attempts += 1;
        if mode == GeneratorMode::NPlusOne || attempts > 64 {
            // With g = n + 1 the condition reduces to gcd(lambda, n) = 1,
            // which fails only for lopsided prime pairs.
            return Err(PaillierError::BadPrimes);
        }
    };

    let g_to_n = g.modpow(&n, &n_squared);
    let pk = PaillierPublicKey {
        n: n.clone(),
        g,
        n_squared: n_squared.clone(),
        g_to_n,
    };
    let sk = PaillierPrivateKey {
        lambda,
        primes,
        mu,
        n,
        n_squared,
    };
    Ok((pk, sk))
}

impl PaillierPublicKey {
    /// c = g^(m + n*r) mod n^2 with r uniform in Z*_n.
    pub fn encrypt(&self, m: &BigUint, rng: &mut RandomSource) -> Result<Ciphertext, PaillierError> {
        let r = self.sample_randomizer(rng);
        self.encrypt_with_randomness(m, &r)
    }

    /// Deterministic encryption with caller-chosen randomness.
    pub fn encrypt_with_randomness(
        &self,
        m: &BigUint,
        r: &BigUint,
    ) -> Result<Ciphertext, PaillierError> {
        if *m >= self.n {
            return Err(PaillierError::PlaintextOutOfRange);
        }
        // g^(m + n*r) = g^m * (g^n)^r
        let value = self.g.modpow(m, &self.n_squared) * self.g_to_n.modpow(r, &self.n_squared)
            % &self.n_squared;
        Ok(Ciphertext { value })
    }

    fn sample_randomizer(&self, rng: &mut RandomSource) -> BigUint {
        loop {
            let r = arith::rand_below(&self.n, rng);
            if r.gcd(&self.n).is_one() {
                break r;
            }
        }
    }

    /// Homomorphic addition: decrypts to m1 + m2 mod n.
    pub fn add_ct(&self, c1: &Ciphertext, c2: &Ciphertext) -> Ciphertext {
        Ciphertext {
            value: &c1.value * &c2.value % &self.n_squared,
        }
    }

    /// Plaintext addition: c * g^m2 decrypts to m + m2 mod n.
    pub fn add_plain(&self, c: &Ciphertext, m2: &BigUint) -> Result<Ciphertext, PaillierError> {
        if *m2 >= self.n {
            return Err(PaillierError::PlaintextOutOfRange);
        }
        Ok(Ciphertext {
            value: &c.value * self.g.modpow(m2, &self.n_squared) % &self.n_squared,
        })
    }

    /// Plaintext-scalar multiplication: c^k decrypts to k * m mod n.
    pub fn mul_plain(&self, c: &Ciphertext, k: &BigUint) -> Ciphertext {
        Ciphertext {
            value: c.value.modpow(k, &self.n_squared),
        }
    }

    /// Re-randomize: c * g^(n*r') keeps the plaintext.
    pub fn self_blind(&self, c: &Ciphertext, rng: &mut RandomSource) -> Ciphertext {
        let r = self.sample_randomizer(rng);
        Ciphertext {
            value: &c.value * self.g_to_n.modpow(&r, &self.n_squared) % &self.n_squared,
        }
    }
}

impl PaillierPrivateKey {
    pub fn n(&self) -> &BigUint {
        &self.n
    }

    pub fn decrypt(&self, c: &Ciphertext) -> Result<BigUint, PaillierError> {
        if c.value.is_zero() || c.value >= self.n_squared || !c.value.gcd(&self.n_squared).is_one()
        {
            return Err(PaillierError::MalformedCiphertext);
        }
        let u = c.value.modpow(&self.lambda, &self.n_squared);
        if (&u % &self.n) != BigUint::one() {
            return Err(PaillierError::MalformedCiphertext);
        }
        Ok(l_function(&u, &self.n) * &self.mu % &self.n)
    }
}
