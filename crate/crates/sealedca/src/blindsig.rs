//! Blinded Nyberg-Rueppel message-recovering signatures.
//!
//! The signer publishes y = g^x over a prime-order-q subgroup of Z_p*. A
//! four-step exchange lets a signee obtain the signature pair (r, s) on a
//! message the signer never sees; anyone can later recover the message as
//! g^(-s) * y^r * r mod p and check it against a claimed value.
//!
//! Two blinding variants are provided. `MixNonce` folds the signer's nonce
//! commitment into the blinded point (r = m * g^alpha * commitment^beta) and
//! yields signatures that satisfy the verification identity. `UnmixedNonce`
//! computes r = m * g^alpha, leaving the round-1 commitment unused on the
//! signee side; signatures produced that way fail the verification identity
//! whenever nonce * beta != 0 mod q, so unblinding reports
//! `VerificationFailedAtCreation`. It stays selectable to document that
//! behaviour; `MixNonce` is the default everywhere.

use crate::arith::{self, RandomSource};
use num_bigint::{BigUint, RandBigInt};
use num_traits::{One, Zero};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BlindSigError {
    #[error("message must lie in [1, p)")]
    InvalidMessage,
    #[error("blinded message must lie in [1, q)")]
    InvalidBlindedMessage,
    #[error("unblinded signature failed the verification identity")]
    VerificationFailedAtCreation,
    #[error("value does not fit the message domain (need v < p - 1)")]
    MessageDomainTooSmall,
    #[error("invalid group parameters: {0}")]
    InvalidGroup(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlindingVariant {
    /// r = m * g^alpha * commitment^beta; the working scheme.
    #[default]
    MixNonce,
    /// r = m * g^alpha with the commitment unused; never verifies.
    UnmixedNonce,
}

/// A multiplicative group of prime order q inside Z_p*, with generator g.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NRGroupParams {
    pub p: BigUint,
    pub q: BigUint,
    pub g: BigUint,
}

impl NRGroupParams {
    /// p = 23, q = 11, g = 2. Small enough for exhaustive oracles.
    pub fn toy_23() -> Self {
        Self {
            p: BigUint::from(23u32),
            q: BigUint::from(11u32),
            g: BigUint::from(2u32),
        }
    }

    /// p = 2039, q = 1019, g = 4. Message domain [0, 2037), wide enough for
    /// desk-scale norms and bundle encodings with up to 10 goods.
    pub fn toy_2039() -> Self {
        Self {
            p: BigUint::from(2039u32),
            q: BigUint::from(1019u32),
            g: BigUint::from(4u32),
        }
    }

    /// Generate fresh parameters: a q_bits-bit prime q, a p_bits-bit prime
    /// p = q*c + 1, and g = h^((p-1)/q) of order q.
    pub fn generate(p_bits: u64, q_bits: u64, rng: &mut RandomSource) -> Self {
        assert!(p_bits > q_bits + 1, "p must be wider than q");
        let q = arith::gen_prime(q_bits, rng);
        let (p, cofactor) = loop {
            let mut c = rng.gen_biguint(p_bits - q_bits);
            c.set_bit(p_bits - q_bits - 1, true);
            c.set_bit(0, false);
            let p = &q * &c + BigUint::one();
            if p.bits() == p_bits && arith::is_probable_prime(&p, arith::MILLER_RABIN_ROUNDS, rng)
            {
                break (p, c);
            }
        };
        let g = loop {
            let h = arith::rand_below(&p, rng);
            let g = h.modpow(&cofactor, &p);
            if !g.is_one() {
                break g;
            }
        };
        Self { p, q, g }
    }

    /// Sanity-check the group structure (used when loading configs).
    pub fn validate(&self, rng: &mut RandomSource) -> Result<(), BlindSigError> {
        if !arith::is_probable_prime(&self.p, arith::MILLER_RABIN_ROUNDS, rng) {
            return Err(BlindSigError::InvalidGroup("p is not prime".into()));
        }
        if !arith::is_probable_prime(&self.q, arith::MILLER_RABIN_ROUNDS, rng) {
            return Err(BlindSigError::InvalidGroup("q is not prime".into()));
        }
        if !((&self.p - BigUint::one()) % &self.q).is_zero() {
            return Err(BlindSigError::InvalidGroup("q does not divide p - 1".into()));
        }
        if self.g.is_one() || !self.g.modpow(&self.q, &self.p).is_one() {
            return Err(BlindSigError::InvalidGroup(
                "g does not generate an order-q subgroup".into(),
            ));
        }
        Ok(())
    }

    /// Map a non-negative integer into the message domain: m = v + 1.
    /// Order-preserving and injective for v < p - 1, so recovery returns the
    /// usable value directly instead of requiring a preimage lookup.
    pub fn embed_value(&self, v: &BigUint) -> Result<BigUint, BlindSigError> {
        if *v >= &self.p - BigUint::one() {
            return Err(BlindSigError::MessageDomainTooSmall);
        }
        Ok(v + BigUint::one())
    }

    pub fn extract_value(&self, m: &BigUint) -> BigUint {
        if m.is_zero() {
            BigUint::zero()
        } else {
            m - BigUint::one()
        }
    }
}

#[derive(Debug, Clone)]
pub struct NRKeyPair {
    secret: BigUint,
    public: BigUint,
}

impl NRKeyPair {
    pub fn generate(params: &NRGroupParams, rng: &mut RandomSource) -> Self {
        let secret = arith::rand_below(&params.q, rng);
        let public = params.g.modpow(&secret, &params.p);
        Self { secret, public }
    }

    pub fn public(&self) -> &BigUint {
        &self.public
    }
}

/// The pair (r, s): r in Z_p, s in Z_q.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NRSignature {
    pub r: BigUint,
    pub s: BigUint,
}

/// Signer-side state for one blind-signing session.
#[derive(Debug, Clone)]
pub struct SignerSession {
    nonce: BigUint,
    pub commitment: BigUint,
}

/// Signee-side state for one blind-signing session.
#[derive(Debug, Clone)]
pub struct SigneeSession {
    message: BigUint,
    msg_blinder: BigUint,
    sig_blinder: BigUint,
    point: BigUint,
}

/// Step 1: the signer draws a nonce and commits to it.
pub fn signer_round1(params: &NRGroupParams, rng: &mut RandomSource) -> (SignerSession, BigUint) {
    let nonce = arith::rand_below(&params.q, rng);
    signer_round1_with(params, nonce)
}

pub fn signer_round1_with(params: &NRGroupParams, nonce: BigUint) -> (SignerSession, BigUint) {
    let commitment = params.g.modpow(&nonce, &params.p);
    (
        SignerSession {
            nonce,
            commitment: commitment.clone(),
        },
        commitment,
    )
}

/// Step 2: the signee blinds its message, resampling until the blinded
/// message is a unit mod q.
pub fn signee_blind(
    params: &NRGroupParams,
    variant: BlindingVariant,
    message: &BigUint,
    commitment: &BigUint,
    rng: &mut RandomSource,
) -> Result<(SigneeSession, BigUint), BlindSigError> {
    loop {
        let msg_blinder = rng.gen_biguint_below(&params.q);
        let sig_blinder = arith::rand_below(&params.q, rng);
        match blind_with(params, variant, message, commitment, msg_blinder, sig_blinder) {
            Ok(done) => return Ok(done),
            Err(BlindSigError::InvalidBlindedMessage) => continue,
            Err(e) => return Err(e),
        }
    }
}

/// Deterministic core of step 2 with caller-chosen blinders.
pub fn blind_with(
    params: &NRGroupParams,
    variant: BlindingVariant,
    message: &BigUint,
    commitment: &BigUint,
    msg_blinder: BigUint,
    sig_blinder: BigUint,
) -> Result<(SigneeSession, BigUint), BlindSigError> {
    if message.is_zero() || *message >= params.p {
        return Err(BlindSigError::InvalidMessage);
    }
    let mut point = message * params.g.modpow(&msg_blinder, &params.p) % &params.p;
    if variant == BlindingVariant::MixNonce {
        point = point * commitment.modpow(&sig_blinder, &params.p) % &params.p;
    }
    let blinded = &point % &params.q * arith::mod_inv(&sig_blinder, &params.q).expect("unit mod q")
        % &params.q;
    if blinded.is_zero() {
        return Err(BlindSigError::InvalidBlindedMessage);
    }
    Ok((
        SigneeSession {
            message: message.clone(),
            msg_blinder,
            sig_blinder,
            point,
        },
        blinded,
    ))
}

/// Step 3: the signer responds with blinded * x + nonce mod q.
pub fn signer_round2(
    params: &NRGroupParams,
    keypair: &NRKeyPair,
    session: &SignerSession,
    blinded: &BigUint,
) -> Result<BigUint, BlindSigError> {
    if blinded.is_zero() || *blinded >= params.q {
        return Err(BlindSigError::InvalidBlindedMessage);
    }
    Ok((blinded * &keypair.secret + &session.nonce) % &params.q)
}

/// Step 4: the signee unblinds. The verification identity is asserted here;
/// a failure signals a corrupted session (or the unmixed variant).
pub fn signee_unblind(
    params: &NRGroupParams,
    signer_public: &BigUint,
    session: &SigneeSession,
    response: &BigUint,
) -> Result<NRSignature, BlindSigError> {
    let s = (response * &session.sig_blinder + &session.msg_blinder) % &params.q;
    let sig = NRSignature {
        r: session.point.clone(),
        s,
    };
    if !verify(params, signer_public, &session.message, &sig) {
        return Err(BlindSigError::VerificationFailedAtCreation);
    }
    Ok(sig)
}

/// Recompute the recoverable message g^(-s) * y^r * r mod p.
pub fn recover(params: &NRGroupParams, signer_public: &BigUint, sig: &NRSignature) -> BigUint {
    let s_mod = &sig.s % &params.q;
    let neg_s = if s_mod.is_zero() {
        BigUint::zero()
    } else {
        &params.q - &s_mod
    };
    // g and y both have order q, so exponents reduce mod q.
    let g_term = params.g.modpow(&neg_s, &params.p);
    let y_term = signer_public.modpow(&(&sig.r % &params.q), &params.p);
    g_term * y_term % &params.p * &sig.r % &params.p
}

/// True iff m = g^(-s) * y^r * r mod p.
pub fn verify(
    params: &NRGroupParams,
    signer_public: &BigUint,
    message: &BigUint,
    sig: &NRSignature,
) -> bool {
    if sig.r.is_zero() || sig.r >= params.p || sig.s >= params.q {
        return false;
    }
    recover(params, signer_public, sig) == *message
}

/// Run all four steps in-process (the harness drives the steps over its
/// network instead).
pub fn blind_sign(
    params: &NRGroupParams,
    variant: BlindingVariant,
    keypair: &NRKeyPair,
    message: &BigUint,
    signer_rng: &mut RandomSource,
    signee_rng: &mut RandomSource,
) -> Result<NRSignature, BlindSigError> {
    let (signer_session, commitment) = signer_round1(params, signer_rng);
    let (signee_session, blinded) = signee_blind(params, variant, message, &commitment, signee_rng)?;
    let response = signer_round2(params, keypair, &signer_session, &blinded)?;
    signee_unblind(params, keypair.public(), &signee_session, &response)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(v: u64) -> BigUint {
        BigUint::from(v)
    }

    fn toy_keypair() -> (NRGroupParams, NRKeyPair) {
        let params = NRGroupParams::toy_23();
        // x = 3, y = 2^3 mod 23 = 8.
        let keypair = NRKeyPair {
            secret: big(3),
            public: big(8),
        };
        (params, keypair)
    }

    #[test]
    fn toy_groups_are_well_formed() {
        let mut rng = RandomSource::from_seed(0);
        NRGroupParams::toy_23().validate(&mut rng).unwrap();
        NRGroupParams::toy_2039().validate(&mut rng).unwrap();
    }

    #[test]
    fn round1_known_values() {
        let (params, _) = toy_keypair();
        let (session, commitment) = signer_round1_with(&params, big(4));
        assert_eq!(commitment, big(16)); // 2^4 mod 23
        assert_eq!(session.commitment, big(16));
        // Subgroup closure.
        assert_eq!(commitment.modpow(&big(11), &big(23)), big(1));
    }

    #[test]
    fn round1_nonces_differ_across_sessions() {
        let params = NRGroupParams::toy_2039();
        let mut rng = RandomSource::from_seed(31);
        let (a, _) = signer_round1(&params, &mut rng);
        let (b, _) = signer_round1(&params, &mut rng);
        assert_ne!(a.nonce, b.nonce);
    }

    #[test]
    fn unmixed_blinding_matches_hand_trace() {
        // m = 9, alpha = 3, beta = 5 with the printed step 2:
        // r = 9 * 2^3 mod 23 = 3, blinded = 3 * 5^-1 mod 11 = 3 * 9 mod 11 = 5.
        let (params, keypair) = toy_keypair();
        let (_, commitment) = signer_round1_with(&params, big(4));
        let (session, blinded) = blind_with(
            &params,
            BlindingVariant::UnmixedNonce,
            &big(9),
            &commitment,
            big(3),
            big(5),
        )
        .unwrap();
        assert_eq!(session.point, big(3));
        assert_eq!(blinded, big(5));

        // Step 3: (5 * 3 + 4) mod 11 = 8.
        let (signer_session, _) = signer_round1_with(&params, big(4));
        let response = signer_round2(&params, &keypair, &signer_session, &blinded).unwrap();
        assert_eq!(response, big(8));
    }

    #[test]
    fn unmixed_variant_fails_verification_at_creation() {
        // With r = m * g^alpha the identity picks up a stray commitment^beta
        // factor, so the printed scheme cannot produce verifying signatures.
        let (params, keypair) = toy_keypair();
        let mut signer_rng = RandomSource::from_seed(1);
        let mut signee_rng = RandomSource::from_seed(2);
        for m in 1..23u64 {
            let got = blind_sign(
                &params,
                BlindingVariant::UnmixedNonce,
                &keypair,
                &big(m),
                &mut signer_rng,
                &mut signee_rng,
            );
            assert_eq!(got, Err(BlindSigError::VerificationFailedAtCreation));
        }
    }

    #[test]
    fn mix_nonce_completeness_exhaustive_toy() {
        let (params, keypair) = toy_keypair();
        let mut signer_rng = RandomSource::from_seed(3);
        let mut signee_rng = RandomSource::from_seed(4);
        for m in 1..23u64 {
            let sig = blind_sign(
                &params,
                BlindingVariant::MixNonce,
                &keypair,
                &big(m),
                &mut signer_rng,
                &mut signee_rng,
            )
            .unwrap();
            assert!(verify(&params, keypair.public(), &big(m), &sig));
            assert_eq!(recover(&params, keypair.public(), &sig), big(m));
            // Perturbations break the identity.
            assert!(!verify(&params, keypair.public(), &big(m + 23), &sig));
            let bumped = NRSignature {
                r: sig.r.clone(),
                s: (&sig.s + 1u32) % &params.q,
            };
            assert!(!verify(&params, keypair.public(), &big(m), &bumped));
        }
    }

    #[test]
    fn tampered_response_detected_at_unblinding() {
        let (params, keypair) = toy_keypair();
        let mut rng = RandomSource::from_seed(5);
        let (signer_session, commitment) = signer_round1(&params, &mut rng);
        let (signee_session, blinded) = signee_blind(
            &params,
            BlindingVariant::MixNonce,
            &big(9),
            &commitment,
            &mut rng,
        )
        .unwrap();
        let response = signer_round2(&params, &keypair, &signer_session, &blinded).unwrap();
        let tampered = (&response + 1u32) % &params.q;
        assert_eq!(
            signee_unblind(&params, keypair.public(), &signee_session, &tampered),
            Err(BlindSigError::VerificationFailedAtCreation)
        );
        // The untampered response still unblinds fine.
        signee_unblind(&params, keypair.public(), &signee_session, &response).unwrap();
    }

    #[test]
    fn invalid_inputs_rejected() {
        let (params, keypair) = toy_keypair();
        let (_, commitment) = signer_round1_with(&params, big(4));
        assert_eq!(
            blind_with(
                &params,
                BlindingVariant::MixNonce,
                &big(0),
                &commitment,
                big(1),
                big(1)
            )
            .unwrap_err(),
            BlindSigError::InvalidMessage
        );
        assert_eq!(
            blind_with(
                &params,
                BlindingVariant::MixNonce,
                &big(23),
                &commitment,
                big(1),
                big(1)
            )
            .unwrap_err(),
            BlindSigError::InvalidMessage
        );
        let (signer_session, _) = signer_round1_with(&params, big(4));
        assert_eq!(
            signer_round2(&params, &keypair, &signer_session, &big(0)).unwrap_err(),
            BlindSigError::InvalidBlindedMessage
        );
        assert_eq!(
            signer_round2(&params, &keypair, &signer_session, &big(11)).unwrap_err(),
            BlindSigError::InvalidBlindedMessage
        );
    }

    #[test]
    fn blinded_message_distribution_is_exactly_uniform() {
        // Enumerate every (msg_blinder, sig_blinder) pair on the toy group:
        // each unit residue appears the same number of times, for subgroup
        // and non-subgroup messages alike.
        let (params, _) = toy_keypair();
        let (_, commitment) = signer_round1_with(&params, big(4));
        for m in [2u64, 9, 5, 7] {
            let mut counts = std::collections::BTreeMap::new();
            let mut total = 0u64;
            for alpha in 0..11u64 {
                for beta in 1..11u64 {
                    match blind_with(
                        &params,
                        BlindingVariant::MixNonce,
                        &big(m),
                        &commitment,
                        big(alpha),
                        big(beta),
                    ) {
                        Ok((_, blinded)) => {
                            *counts.entry(blinded).or_insert(0u64) += 1;
                            total += 1;
                        }
                        Err(BlindSigError::InvalidBlindedMessage) => {}
                        Err(e) => panic!("unexpected error {e:?}"),
                    }
                }
            }
            let per_value = total / counts.len() as u64;
            for (value, count) in &counts {
                assert_eq!(*count, per_value, "m={m} blinded={value}");
            }
        }
    }

    #[test]
    fn blindness_each_message_admits_exactly_one_blinder_pair() {
        // Fix one signer view (commitment, blinded, response). For every
        // subgroup message with an independently produced valid signature
        // there must be exactly one (msg_blinder, sig_blinder) pair relating
        // the two, so the view is unlinkable.
        let (params, keypair) = toy_keypair();
        let mut rng = RandomSource::from_seed(10);

        let (signer_session, commitment) = signer_round1(&params, &mut rng);
        let (fixed_signee, fixed_blinded) = signee_blind(
            &params,
            BlindingVariant::MixNonce,
            &big(9),
            &commitment,
            &mut rng,
        )
        .unwrap();
        let fixed_response =
            signer_round2(&params, &keypair, &signer_session, &fixed_blinded).unwrap();
        let _ = signee_unblind(&params, keypair.public(), &fixed_signee, &fixed_response).unwrap();

        // Subgroup = powers of 2 mod 23.
        let mut subgroup = vec![];
        let mut v = big(1);
        for _ in 0..11 {
            subgroup.push(v.clone());
            v = v * big(2) % &params.p;
        }

        for m in subgroup {
            let mut signee_rng = rng.fork();
            let sig = blind_sign(
                &params,
                BlindingVariant::MixNonce,
                &keypair,
                &m,
                &mut rng,
                &mut signee_rng,
            )
            .unwrap();
            let mut consistent = 0;
            for alpha in 0..11u64 {
                for beta in 1..11u64 {
                    let point_ok = sig.r
                        == &m * params.g.modpow(&big(alpha), &params.p) % &params.p
                            * commitment.modpow(&big(beta), &params.p)
                            % &params.p;
                    let blinded_ok =
                        fixed_blinded == &sig.r % &params.q * arith::mod_inv(&big(beta), &params.q).unwrap() % &params.q;
                    let sig_ok = sig.s == (&fixed_response * big(beta) + big(alpha)) % &params.q;
                    if point_ok && blinded_ok && sig_ok {
                        consistent += 1;
                    }
                }
            }
            assert_eq!(consistent, 1, "message {m}");
        }
    }

    #[test]
    fn homomorphic_forgery_identity_does_not_transfer() {
        // Sig(v1)^(v2) is not Sig(v1 * v2) for these signatures: raising the
        // components of a valid pair fails verification against the product.
        // The 2039 group keeps coincidental recoveries (1 in p) out of the
        // picture.
        let params = NRGroupParams::toy_2039();
        let mut rng = RandomSource::from_seed(11);
        let keypair = NRKeyPair::generate(&params, &mut rng);
        let v1 = big(3);
        let v2 = big(5);
        let product = &v1 * &v2 % &params.p;
        let mut signee_rng = rng.fork();
        let sig = blind_sign(
            &params,
            BlindingVariant::MixNonce,
            &keypair,
            &v1,
            &mut rng,
            &mut signee_rng,
        )
        .unwrap();

        let powered = NRSignature {
            r: sig.r.modpow(&v2, &params.p),
            s: sig.s.modpow(&v2, &params.q),
        };
        assert!(!verify(&params, keypair.public(), &product, &powered));

        let scaled = NRSignature {
            r: sig.r.modpow(&v2, &params.p),
            s: &sig.s * &v2 % &params.q,
        };
        assert!(!verify(&params, keypair.public(), &product, &scaled));

        // DSA-style (k*s, r/k) mutations: none of them verifies as a
        // signature on k * v1, and none recovers the original message.
        for k in 2u64..=10 {
            let k = big(k);
            let mutated = NRSignature {
                r: &sig.r * arith::mod_inv(&k, &params.p).unwrap() % &params.p,
                s: &sig.s * &k % &params.q,
            };
            let target = &v1 * &k % &params.p;
            assert!(!verify(&params, keypair.public(), &target, &mutated));
            assert_ne!(recover(&params, keypair.public(), &mutated), v1);
        }
    }

    #[test]
    fn value_embedding_is_injective_and_bounded() {
        let params = NRGroupParams::toy_2039();
        let mut seen = std::collections::BTreeSet::new();
        for v in 0..2037u64 {
            assert!(seen.insert(params.embed_value(&big(v)).unwrap()));
        }
        assert_eq!(
            params.embed_value(&big(2038)).unwrap_err(),
            BlindSigError::MessageDomainTooSmall
        );
        assert_eq!(params.extract_value(&params.embed_value(&big(77)).unwrap()), big(77));
    }

    #[test]
    fn completeness_randomized_large_group() {
        let mut rng = RandomSource::from_seed(12);
        let params = NRGroupParams::generate(192, 64, &mut rng);
        params.validate(&mut rng).unwrap();
        let keypair = NRKeyPair::generate(&params, &mut rng);
        for _ in 0..32 {
            let m = arith::rand_below(&params.p, &mut rng);
            let mut signer_rng = rng.fork();
            let sig = blind_sign(
                &params,
                BlindingVariant::MixNonce,
                &keypair,
                &m,
                &mut signer_rng,
                &mut rng,
            )
            .unwrap();
            assert!(verify(&params, keypair.public(), &m, &sig));
            assert_eq!(recover(&params, keypair.public(), &sig), m);
        }
    }
}
