//! The encrypted multi-actor protocol.
//!
//! Winner determination never shows the auctioneer a loser's norm, bid, or
//! bundle: the auctioneer publishes Paillier keys, guesses a maximum norm,
//! and each probe returns one ciphertext combining a masked norm difference
//! with a masked allocation/bundle scalar product. The probe decrypts to
//! zero exactly when the guess matches the bidder's norm and the bundle is
//! still feasible. Payments reuse the same machinery against the residual
//! allocation, and a blind signature on the candidate's norm lets the winner
//! verify the charged amount bit for bit.

pub mod auctioneer;
pub mod bidder;
pub mod signer;
pub mod wire;

pub use auctioneer::{Auctioneer, PaymentData, ProbeStats, ProbeTransport, WinnerRecord};
pub use bidder::{
    BidderActor, BidderBehavior, BlindTarget, CandidateRevealData, PaymentNoticeData,
    WinnerRevealData,
};
pub use signer::SignerActor;

use crate::blindsig::{BlindSigError, BlindingVariant, NRGroupParams};
use crate::fixedpoint::FixedPointValue;
use crate::mechanism::{self, AuctionInstance, CandidateMode, MechanismConfig, TieBreak};
use crate::paillier::{GeneratorMode, PaillierError};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use wire::WireError;

/// Opaque per-auction bidder identity. The harness hands them out; the
/// auctioneer never sees anything else about a bidder until a reveal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SessionId(pub u32);

impl std::fmt::Display for SessionId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "B{}", self.0)
    }
}

/// How the auctioneer walks the norm domain when looking for the next
/// winner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GuessStrategy {
    /// Probe every value from the current upper bound downward. Always
    /// correct; cost linear in the domain size.
    #[default]
    DescendingScan,
    /// Bisect on the zero/non-zero probe outcome. The probe is an equality
    /// test, not a comparison, so bisection is correct only when every value
    /// below the current maximum feasible norm is itself some remaining
    /// feasible bidder's norm ("dense norms"); on sparse instances it can
    /// miss winners. Kept for the logarithmic-growth benchmark.
    BinarySearchEquality,
}

/// Which bidders are probed during a winner's payment determination.
/// The two readings coincide: a different winner's bundle always overlaps
/// the residual allocation, so including winners only adds probes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CandidatePool {
    #[default]
    AllExceptWinner,
    LosersOnly,
}

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("session {0}: revealed signature invalid")]
    SignatureInvalid(SessionId),
    #[error("session {session}: revealed norm {revealed} does not match declared {declared}")]
    NormMismatch {
        session: SessionId,
        declared: u64,
        revealed: u64,
    },
    #[error("session {0}: revealed bundle conflicts with the current allocation")]
    BundleConflict(SessionId),
    #[error("norm {norm} exceeds the configured domain maximum {max}")]
    NormDomainExceeded { norm: u64, max: u64 },
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Paillier(#[from] PaillierError),
    #[error(transparent)]
    BlindSig(#[from] BlindSigError),
    #[error(transparent)]
    Wire(#[from] WireError),
}

#[derive(Debug, Clone)]
pub struct ProtocolConfig {
    pub paillier_bits: u64,
    pub paillier_g: GeneratorMode,
    pub nr_params: NRGroupParams,
    pub blinding: BlindingVariant,
    pub exponent: u32,
    pub guess_strategy: GuessStrategy,
    /// Upper bound of the norm guess domain, in raw fixed-point units.
    pub norm_domain_max: u64,
    pub candidate_mode: CandidateMode,
    pub candidate_pool: CandidatePool,
    pub reserve_price: FixedPointValue,
}

impl ProtocolConfig {
    /// Desk-scale defaults around a given signer group.
    pub fn desk(nr_params: NRGroupParams, exponent: u32, norm_domain_max: u64) -> Self {
        Self {
            paillier_bits: 512,
            paillier_g: GeneratorMode::Random,
            nr_params,
            blinding: BlindingVariant::MixNonce,
            exponent,
            guess_strategy: GuessStrategy::DescendingScan,
            norm_domain_max,
            candidate_mode: CandidateMode::ResidualAllocation,
            candidate_pool: CandidatePool::AllExceptWinner,
            reserve_price: FixedPointValue::zero(exponent),
        }
    }

    /// The plaintext-oracle configuration that mirrors this protocol
    /// configuration (shared tie rule, candidate mode, exponent, reserve).
    pub fn mechanism_config(&self) -> MechanismConfig {
        MechanismConfig {
            exponent: self.exponent,
            reserve_price: self.reserve_price.clone(),
            candidate_mode: self.candidate_mode,
            tie_break: TieBreak::SessionIdAscending,
        }
    }

    /// Check the instance against the configured domains: every achievable
    /// norm must fit below `norm_domain_max`, every signed value must fit
    /// the signer group's message domain, and the number of goods must stay
    /// below both Paillier primes so a non-zero scalar product can never
    /// vanish mod n.
    pub fn validate_instance(&self, instance: &AuctionInstance) -> Result<(), ProtocolError> {
        use num_traits::One;
        if self.reserve_price.exponent() != self.exponent {
            return Err(ProtocolError::Config(
                "reserve price exponent differs from the shared exponent".into(),
            ));
        }
        if self.paillier_bits < 16 {
            return Err(ProtocolError::Config("paillier_bits must be >= 16".into()));
        }
        // Each prime has paillier_bits / 2 bits, so min(p, q) > 2^(bits/2 - 1).
        let goods_limit = 1u128 << (self.paillier_bits / 2 - 1).min(127);
        if instance.num_goods as u128 >= goods_limit {
            return Err(ProtocolError::Config(format!(
                "{} goods would allow scalar products to vanish mod n",
                instance.num_goods
            )));
        }
        let nr_domain = &self.nr_params.p - num_bigint::BigUint::one();
        if num_bigint::BigUint::from(self.norm_domain_max) >= nr_domain {
            return Err(ProtocolError::Config(
                "norm domain does not fit the signer group's message domain".into(),
            ));
        }
        for (i, bidder) in instance.bidders.iter().enumerate() {
            let norm = mechanism::norm(&bidder.bid, bidder.bundle.size(), self.exponent);
            let raw = norm.raw_u64().ok_or_else(|| ProtocolError::Config(format!(
                "bidder {i}: norm does not fit in 64 bits"
            )))?;
            if raw > self.norm_domain_max {
                return Err(ProtocolError::NormDomainExceeded {
                    norm: raw,
                    max: self.norm_domain_max,
                });
            }
            if bidder.bundle.as_integer() >= nr_domain {
                return Err(ProtocolError::Config(format!(
                    "bidder {i}: bundle encoding exceeds the signer group's message domain"
                )));
            }
        }
        Ok(())
    }
}
