//! Bidder-side state machine: blind-signing of the norm and bundle
//! encodings before the auction, masked probe responses during winner
//! determination, reveals on declaration, and payment verification.

use crate::arith::{self, RandomSource};
use crate::blindsig::{self, BlindingVariant, NRGroupParams, NRSignature, SigneeSession};
use crate::fixedpoint::FixedPointValue;
use crate::mechanism::{self, Bundle};
use crate::paillier::{Ciphertext, PaillierPublicKey};
use crate::protocol::{ProtocolError, SessionId};
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::Zero;

/// Honest behaviour or one of the adversarial test doubles the fault drills
/// swap in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BidderBehavior {
    #[default]
    Honest,
    /// Reveal a norm different from the declared guess.
    FakeReveal,
    /// Reveal the true norm with a homomorphic-style mutation of the
    /// signature in place of the real one.
    ForgeSignature,
    /// Replace every probe response with the plaintext norm bytes.
    LeakPlaintext,
}

/// Payload of a winner's confirmation reveal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WinnerRevealData {
    pub norm_raw: u64,
    pub bundle: Bundle,
    pub sig_norm: NRSignature,
    pub sig_bundle: NRSignature,
}

/// Payload of a candidate's reveal during payment determination: the norm
/// and its signature, never the bundle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateRevealData {
    pub norm_raw: u64,
    pub sig_norm: NRSignature,
}

/// Which of the bidder's two pre-signed values a blind session covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BlindTarget {
    Norm,
    Bundle,
}

#[derive(Debug, Clone)]
pub struct PaymentNoticeData {
    pub payment_raw: BigUint,
    pub sig_norm: Option<NRSignature>,
    pub reserve: bool,
}

pub struct BidderActor {
    pub sid: SessionId,
    bundle: Bundle,
    norm_raw: u64,
    exponent: u32,
    norm_domain_max: u64,
    reserve_price: FixedPointValue,
    nr_params: NRGroupParams,
    blinding: BlindingVariant,
    nr_public: Option<BigUint>,
    paillier: Option<PaillierPublicKey>,
    sig_norm: Option<NRSignature>,
    sig_bundle: Option<NRSignature>,
    open_blind: Option<(BlindTarget, SigneeSession)>,
    rng: RandomSource,
    pub behavior: BidderBehavior,
    /// (feasibility mask, norm mask) drawn per probe; logged out of band so
    /// audits can check freshness. Never part of the transcript.
    pub mask_log: Vec<(BigUint, BigUint)>,
}

impl BidderActor {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        sid: SessionId,
        bundle: Bundle,
        bid: &BigRational,
        exponent: u32,
        norm_domain_max: u64,
        reserve_price: FixedPointValue,
        nr_params: NRGroupParams,
        blinding: BlindingVariant,
        rng: RandomSource,
    ) -> Self {
        let norm = mechanism::norm(bid, bundle.size(), exponent);
        let norm_raw = norm.raw_u64().expect("validated against the norm domain");
        Self {
            sid,
            bundle,
            norm_raw,
            exponent,
            norm_domain_max,
            reserve_price,
            nr_params,
            blinding,
            nr_public: None,
            paillier: None,
            sig_norm: None,
            sig_bundle: None,
            open_blind: None,
            rng,
            behavior: BidderBehavior::Honest,
            mask_log: Vec::new(),
        }
    }

    pub fn norm_raw(&self) -> u64 {
        self.norm_raw
    }

    pub fn bundle(&self) -> &Bundle {
        &self.bundle
    }

    pub fn install_keys(&mut self, paillier: PaillierPublicKey, nr_public: BigUint) {
        self.paillier = Some(paillier);
        self.nr_public = Some(nr_public);
    }

    /// Install pre-produced signatures directly (tests that skip the
    /// message-level signing rounds).
    pub fn install_signatures(&mut self, sig_norm: NRSignature, sig_bundle: NRSignature) {
        self.sig_norm = Some(sig_norm);
        self.sig_bundle = Some(sig_bundle);
    }

    fn paillier(&self) -> &PaillierPublicKey {
        self.paillier.as_ref().expect("keys not published yet")
    }

    /// The value the signer blindly signs for `target`.
    fn signed_message(&self, target: BlindTarget) -> Result<BigUint, ProtocolError> {
        let value = match target {
            BlindTarget::Norm => BigUint::from(self.norm_raw),
            BlindTarget::Bundle => self.bundle.as_integer(),
        };
        Ok(self.nr_params.embed_value(&value)?)
    }

    /// Step 2 of the blind-signing exchange for one of the two values.
    pub fn begin_blind(
        &mut self,
        target: BlindTarget,
        commitment: &BigUint,
    ) -> Result<BigUint, ProtocolError> {
        let message = self.signed_message(target)?;
        let (session, blinded) = blindsig::signee_blind(
            &self.nr_params,
            self.blinding,
            &message,
            commitment,
            &mut self.rng,
        )?;
        self.open_blind = Some((target, session));
        Ok(blinded)
    }

    /// Step 4: unblind and store the signature.
    pub fn finish_blind(&mut self, target: BlindTarget, response: &BigUint) -> Result<(), ProtocolError> {
        let (open_target, session) = self.open_blind.take().expect("no open blind session");
        assert_eq!(open_target, target, "blind sessions must not interleave");
        let public = self.nr_public.as_ref().expect("keys not published yet");
        let sig = blindsig::signee_unblind(&self.nr_params, public, &session, response)?;
        match target {
            BlindTarget::Norm => self.sig_norm = Some(sig),
            BlindTarget::Bundle => self.sig_bundle = Some(sig),
        }
        Ok(())
    }

    /// Respond to one probe: E(masked norm difference + masked scalar
    /// product), a single ciphertext under the auctioneer's key.
    pub fn respond_probe(
        &mut self,
        guess_ct: &Ciphertext,
        alloc_cts: &[Ciphertext],
    ) -> Result<Ciphertext, ProtocolError> {
        let pk = self.paillier().clone();
        let feasibility_mask = arith::rand_below(&pk.n, &mut self.rng);
        let norm_mask = arith::rand_below(&pk.n, &mut self.rng);
        self.mask_log
            .push((feasibility_mask.clone(), norm_mask.clone()));

        if self.behavior == BidderBehavior::LeakPlaintext {
            // Adversarial double: ships the plaintext norm bytes where a
            // ciphertext belongs.
            return Ok(Ciphertext::from_bytes_be(
                &BigUint::from(self.norm_raw).to_bytes_be(),
            ));
        }

        // E(guess - own norm), formed homomorphically so the bidder never
        // encrypts under its own key: E(guess) * g^(n - norm).
        let negated_norm = (&pk.n - BigUint::from(self.norm_raw) % &pk.n) % &pk.n;
        let diff = pk.add_plain(guess_ct, &negated_norm)?;
        let masked_diff = pk.mul_plain(&diff, &norm_mask);

        let scalar = self.scalar_product_response(&pk, alloc_cts, &feasibility_mask)?;
        Ok(pk.add_ct(&masked_diff, &scalar))
    }

    /// Draw a fresh multiplicative mask from [1, n - 1].
    pub fn draw_mask(&mut self) -> BigUint {
        let n = self.paillier().n.clone();
        arith::rand_below(&n, &mut self.rng)
    }

    /// The privacy-preserving scalar product response:
    /// E(mask * sum_k a_k * s_k) for this bidder's bundle bits s_k.
    pub fn scalar_product_response(
        &self,
        pk: &PaillierPublicKey,
        alloc_cts: &[Ciphertext],
        mask: &BigUint,
    ) -> Result<Ciphertext, ProtocolError> {
        assert_eq!(alloc_cts.len(), self.bundle.num_goods());
        // prod_{k in bundle} E(a_k)^mask = (prod E(a_k))^mask.
        let mut product: Option<Ciphertext> = None;
        for (ct, &bit) in alloc_cts.iter().zip(self.bundle.bits()) {
            if bit {
                product = Some(match product {
                    Some(acc) => pk.add_ct(&acc, ct),
                    None => ct.clone(),
                });
            }
        }
        let product = product.expect("bundles are non-empty");
        Ok(pk.mul_plain(&product, mask))
    }

    /// Confirmation payload after being declared winner at `declared`.
    pub fn reveal_winner(&self, declared: u64) -> WinnerRevealData {
        let sig_norm = self.sig_norm.clone().expect("norm was pre-signed");
        let sig_bundle = self.sig_bundle.clone().expect("bundle was pre-signed");
        match self.behavior {
            BidderBehavior::FakeReveal => WinnerRevealData {
                norm_raw: declared + 1,
                bundle: self.bundle.clone(),
                sig_norm,
                sig_bundle,
            },
            BidderBehavior::ForgeSignature => WinnerRevealData {
                norm_raw: self.norm_raw,
                bundle: self.bundle.clone(),
                sig_norm: forge_by_exponentiation(&self.nr_params, &sig_norm),
                sig_bundle,
            },
            _ => WinnerRevealData {
                norm_raw: self.norm_raw,
                bundle: self.bundle.clone(),
                sig_norm,
                sig_bundle,
            },
        }
    }

    /// Reveal during payment determination: only the norm and its signature.
    pub fn reveal_candidate(&self, _declared: u64) -> CandidateRevealData {
        let sig_norm = self.sig_norm.clone().expect("norm was pre-signed");
        match self.behavior {
            BidderBehavior::ForgeSignature => CandidateRevealData {
                norm_raw: self.norm_raw,
                sig_norm: forge_by_exponentiation(&self.nr_params, &sig_norm),
            },
            _ => CandidateRevealData {
                norm_raw: self.norm_raw,
                sig_norm,
            },
        }
    }

    /// Winner-side payment check. Reserve notices must quote the published
    /// reserve price; priced notices must carry a signature that recovers a
    /// norm whose canonical payment equals the quoted amount exactly.
    pub fn verify_payment(&self, notice: &PaymentNoticeData) -> bool {
        if notice.reserve {
            return notice.sig_norm.is_none()
                && &notice.payment_raw == self.reserve_price.raw();
        }
        let Some(sig) = &notice.sig_norm else {
            return false;
        };
        let Some(public) = &self.nr_public else {
            return false;
        };
        let message = blindsig::recover(&self.nr_params, public, sig);
        if !blindsig::verify(&self.nr_params, public, &message, sig) {
            return false;
        }
        if message.is_zero() {
            return false;
        }
        let value = self.nr_params.extract_value(&message);
        let digits = value.to_u64_digits();
        let candidate_norm_raw = match digits.len() {
            0 => 0u64,
            1 => digits[0],
            _ => return false,
        };
        if candidate_norm_raw > self.norm_domain_max {
            return false;
        }
        let recomputed = mechanism::payment_from_norm(
            &FixedPointValue::from_raw(BigUint::from(candidate_norm_raw), self.exponent),
            self.bundle.size(),
            self.exponent,
        );
        recomputed.raw() == &notice.payment_raw
    }
}

/// The homomorphic forgery attempt: raise both signature components to a
/// power. Never verifies for these signatures; used by the ForgeSignature
/// drill.
fn forge_by_exponentiation(params: &NRGroupParams, sig: &NRSignature) -> NRSignature {
    let two = BigUint::from(2u32);
    NRSignature {
        r: sig.r.modpow(&two, &params.p),
        s: sig.s.modpow(&two, &params.q),
    }
}
