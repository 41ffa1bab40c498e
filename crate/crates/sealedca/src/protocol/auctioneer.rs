//! Auctioneer-side state machine: Paillier key ownership, the norm-guess
//! scan, winner confirmation, and verifiable payment determination.
//!
//! The auctioneer only ever sees probe responses (single ciphertexts that
//! decrypt to zero exactly on a hit), declared winners' reveals, and
//! candidates' norm reveals. Message transport is abstracted behind
//! [`ProbeTransport`] so the same logic runs under the recording harness and
//! in direct unit tests.

use crate::arith::RandomSource;
use crate::blindsig::{self, NRGroupParams};
use crate::fixedpoint::FixedPointValue;
use crate::mechanism::{Allocation, Bundle, CandidateMode};
use crate::paillier::{self, Ciphertext, PaillierError, PaillierPublicKey, PaillierPrivateKey};
use crate::protocol::bidder::{BidderActor, CandidateRevealData, PaymentNoticeData, WinnerRevealData};
use crate::protocol::{CandidatePool, GuessStrategy, ProtocolConfig, ProtocolError, SessionId};
use num_bigint::BigUint;
use num_traits::Zero;
use std::collections::BTreeSet;

/// Message plumbing between the auctioneer and one bidder. The harness
/// implementation records every message in the transcript.
pub trait ProbeTransport {
    fn probe(
        &mut self,
        sid: SessionId,
        guess_ct: Ciphertext,
        alloc_cts: Vec<Ciphertext>,
    ) -> Result<Ciphertext, ProtocolError>;

    fn declare_winner(
        &mut self,
        sid: SessionId,
        norm_guess: u64,
    ) -> Result<WinnerRevealData, ProtocolError>;

    fn declare_candidate(
        &mut self,
        sid: SessionId,
        norm_guess: u64,
    ) -> Result<CandidateRevealData, ProtocolError>;
}

#[derive(Debug, Clone)]
pub struct WinnerRecord {
    pub sid: SessionId,
    pub norm_raw: u64,
    pub bundle: Bundle,
}

/// Outcome of one winner's payment determination.
#[derive(Debug, Clone)]
pub struct PaymentData {
    pub winner: SessionId,
    /// The revealed candidate, or None for the reserve-price fallback.
    pub candidate: Option<SessionId>,
    pub candidate_norm_raw: Option<u64>,
    pub notice: PaymentNoticeData,
}

/// Counters for the benchmark report.
#[derive(Debug, Clone, Copy, Default)]
pub struct ProbeStats {
    pub probes: u64,
    pub guesses: u64,
}

pub struct Auctioneer {
    pk: PaillierPublicKey,
    sk: PaillierPrivateKey,
    nr_params: NRGroupParams,
    signer_public: BigUint,
    exponent: u32,
    norm_domain_max: u64,
    strategy: GuessStrategy,
    candidate_mode: CandidateMode,
    candidate_pool: CandidatePool,
    reserve_price: FixedPointValue,
    num_goods: usize,
    allocation: Allocation,
    winners: Vec<WinnerRecord>,
    remaining: BTreeSet<SessionId>,
    flagged: Vec<(SessionId, String)>,
    rng: RandomSource,
    pub stats: ProbeStats,
}

impl Auctioneer {
    pub fn new(
        config: &ProtocolConfig,
        num_goods: usize,
        sids: impl IntoIterator<Item = SessionId>,
        signer_public: BigUint,
        mut rng: RandomSource,
    ) -> Self {
        let (pk, sk) = paillier::keygen(config.paillier_bits, config.paillier_g, &mut rng);
        Self {
            pk,
            sk,
            nr_params: config.nr_params.clone(),
            signer_public,
            exponent: config.exponent,
            norm_domain_max: config.norm_domain_max,
            strategy: config.guess_strategy,
            candidate_mode: config.candidate_mode,
            candidate_pool: config.candidate_pool,
            reserve_price: config.reserve_price.clone(),
            num_goods,
            allocation: Allocation::empty(num_goods),
            winners: Vec::new(),
            remaining: sids.into_iter().collect(),
            flagged: Vec::new(),
            rng,
            stats: ProbeStats::default(),
        }
    }

    pub fn public_key(&self) -> &PaillierPublicKey {
        &self.pk
    }

    pub fn allocation(&self) -> &Allocation {
        &self.allocation
    }

    pub fn winners(&self) -> &[WinnerRecord] {
        &self.winners
    }

    pub fn flagged(&self) -> &[(SessionId, String)] {
        &self.flagged
    }

    fn encrypt_guess(&mut self, guess: u64) -> Result<Ciphertext, ProtocolError> {
        Ok(self.pk.encrypt(&BigUint::from(guess), &mut self.rng)?)
    }

    /// Fresh encryptions of the allocation bits, re-encrypted every round.
    fn encrypt_allocation(&mut self, alloc: &Allocation) -> Result<Vec<Ciphertext>, ProtocolError> {
        alloc
            .bits()
            .iter()
            .map(|&bit| {
                Ok(self
                    .pk
                    .encrypt(&BigUint::from(bit as u32), &mut self.rng)?)
            })
            .collect()
    }

    /// One full probe against one bidder: send E(guess) and the encrypted
    /// allocation, decrypt the combined response, report whether it is zero
    /// (`Some(true)` exactly when the guess matches the bidder's norm and
    /// the bundle is feasible, up to the 2/n accidental-cancellation
    /// probability). `None` means the response did not decrypt.
    pub fn probe(
        &mut self,
        transport: &mut dyn ProbeTransport,
        sid: SessionId,
        guess: u64,
        alloc: &Allocation,
    ) -> Result<Option<bool>, ProtocolError> {
        let guess_ct = self.encrypt_guess(guess)?;
        let alloc_cts = self.encrypt_allocation(alloc)?;
        let response = transport.probe(sid, guess_ct, alloc_cts)?;
        self.stats.probes += 1;
        match self.sk.decrypt(&response) {
            Ok(value) => Ok(Some(value.is_zero())),
            Err(PaillierError::MalformedCiphertext) => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    /// Probe every pooled bidder at one guess, ascending session id,
    /// stopping at the first zero.
    fn probe_round(
        &mut self,
        transport: &mut dyn ProbeTransport,
        guess: u64,
        pool: &mut Vec<SessionId>,
        alloc: &Allocation,
    ) -> Result<Option<SessionId>, ProtocolError> {
        self.stats.guesses += 1;
        let candidates = pool.clone();
        for sid in candidates {
            match self.probe(transport, sid, guess, alloc)? {
                Some(true) => return Ok(Some(sid)),
                Some(false) => {}
                None => {
                    self.flag(sid, "undecryptable probe response");
                    pool.retain(|s| *s != sid);
                }
            }
        }
        Ok(None)
    }

    fn flag(&mut self, sid: SessionId, reason: &str) {
        self.flagged.push((sid, reason.to_string()));
        self.remaining.remove(&sid);
    }

    /// Find the highest guess in [0, upper] at which some pooled bidder
    /// probes zero, using the configured strategy.
    fn find_next(
        &mut self,
        transport: &mut dyn ProbeTransport,
        upper: u64,
        pool: &mut Vec<SessionId>,
        alloc: &Allocation,
    ) -> Result<Option<(SessionId, u64)>, ProtocolError> {
        if pool.is_empty() {
            return Ok(None);
        }
        match self.strategy {
            GuessStrategy::DescendingScan => {
                for guess in (0..=upper).rev() {
                    if let Some(sid) = self.probe_round(transport, guess, pool, alloc)? {
                        return Ok(Some((sid, guess)));
                    }
                    if pool.is_empty() {
                        return Ok(None);
                    }
                }
                Ok(None)
            }
            GuessStrategy::BinarySearchEquality => {
                // Bisection over the zero/non-zero outcome. Correct only on
                // the dense-norm precondition; see GuessStrategy.
                let mut lo = 0u64;
                let mut hi = upper;
                while lo < hi {
                    let mid = lo + (hi - lo + 1) / 2;
                    if self
                        .probe_round(transport, mid, pool, alloc)?
                        .is_some()
                    {
                        lo = mid;
                    } else {
                        hi = mid - 1;
                    }
                }
                Ok(self
                    .probe_round(transport, lo, pool, alloc)?
                    .map(|sid| (sid, lo)))
            }
        }
    }

    /// Validate a declared winner's reveal and, on success, allocate its
    /// goods. Each failure flags the bidder and the scan resumes.
    fn confirm_winner(
        &mut self,
        sid: SessionId,
        guess: u64,
        reveal: &WinnerRevealData,
    ) -> Result<(), ProtocolError> {
        if reveal.norm_raw != guess {
            return Err(ProtocolError::NormMismatch {
                session: sid,
                declared: guess,
                revealed: reveal.norm_raw,
            });
        }
        let norm_msg = self.nr_params.embed_value(&BigUint::from(reveal.norm_raw))?;
        if !blindsig::verify(&self.nr_params, &self.signer_public, &norm_msg, &reveal.sig_norm) {
            return Err(ProtocolError::SignatureInvalid(sid));
        }
        if reveal.bundle.num_goods() != self.num_goods {
            return Err(ProtocolError::BundleConflict(sid));
        }
        let bundle_msg = self.nr_params.embed_value(&reveal.bundle.as_integer())?;
        if !blindsig::verify(
            &self.nr_params,
            &self.signer_public,
            &bundle_msg,
            &reveal.sig_bundle,
        ) {
            return Err(ProtocolError::SignatureInvalid(sid));
        }
        if self.allocation.intersects(&reveal.bundle) {
            return Err(ProtocolError::BundleConflict(sid));
        }
        self.allocation.mark(&reveal.bundle);
        self.winners.push(WinnerRecord {
            sid,
            norm_raw: reveal.norm_raw,
            bundle: reveal.bundle.clone(),
        });
        self.remaining.remove(&sid);
        Ok(())
    }

    /// The full winner-determination phase: scan downward from the domain
    /// maximum, confirming (or flagging) each declared bidder, until no
    /// probe in the remaining pool hits.
    pub fn run_winner_determination(
        &mut self,
        transport: &mut dyn ProbeTransport,
    ) -> Result<(), ProtocolError> {
        let mut upper = self.norm_domain_max;
        loop {
            let mut pool: Vec<SessionId> = self.remaining.iter().copied().collect();
            let alloc = self.allocation.clone();
            match self.find_next(transport, upper, &mut pool, &alloc)? {
                None => break,
                Some((sid, guess)) => {
                    let reveal = transport.declare_winner(sid, guess)?;
                    if let Err(e) = self.confirm_winner(sid, guess, &reveal) {
                        self.flag(sid, &e.to_string());
                    }
                    // Ties are possible, so the scan resumes at the same
                    // guess either way.
                    upper = guess;
                }
            }
        }
        Ok(())
    }

    fn candidate_pool_for(&self, winner: SessionId) -> Vec<SessionId> {
        let flagged: BTreeSet<SessionId> = self.flagged.iter().map(|(s, _)| *s).collect();
        let winners: BTreeSet<SessionId> = self.winners.iter().map(|w| w.sid).collect();
        let mut pool: Vec<SessionId> = self
            .remaining
            .iter()
            .copied()
            .chain(winners.iter().copied())
            .filter(|s| *s != winner && !flagged.contains(s))
            .collect();
        if self.candidate_pool == CandidatePool::LosersOnly {
            pool.retain(|s| !winners.contains(s));
        }
        pool.sort();
        pool.dedup();
        pool
    }

    fn validate_candidate(
        &self,
        sid: SessionId,
        guess: u64,
        reveal: &CandidateRevealData,
    ) -> Result<(), ProtocolError> {
        if reveal.norm_raw != guess {
            return Err(ProtocolError::NormMismatch {
                session: sid,
                declared: guess,
                revealed: reveal.norm_raw,
            });
        }
        let norm_msg = self.nr_params.embed_value(&BigUint::from(reveal.norm_raw))?;
        if !blindsig::verify(&self.nr_params, &self.signer_public, &norm_msg, &reveal.sig_norm) {
            return Err(ProtocolError::SignatureInvalid(sid));
        }
        Ok(())
    }

    fn priced_notice(&self, winner_bundle_size: u64, reveal: &CandidateRevealData) -> PaymentNoticeData {
        let payment = crate::mechanism::payment_from_norm(
            &FixedPointValue::from_raw(BigUint::from(reveal.norm_raw), self.exponent),
            winner_bundle_size,
            self.exponent,
        );
        PaymentNoticeData {
            payment_raw: payment.raw().clone(),
            sig_norm: Some(reveal.sig_norm.clone()),
            reserve: false,
        }
    }

    fn reserve_notice(&self) -> PaymentNoticeData {
        PaymentNoticeData {
            payment_raw: self.reserve_price.raw().clone(),
            sig_norm: None,
            reserve: true,
        }
    }

    /// Determine one confirmed winner's payment. Residual mode re-runs the
    /// probe scan against the final allocation minus the winner's goods;
    /// rerun mode replays the whole winner determination without the winner,
    /// reusing already-revealed bundles for other confirmed winners, until
    /// the first newly allocatable bidder appears.
    pub fn determine_payment(
        &mut self,
        transport: &mut dyn ProbeTransport,
        winner_index: usize,
    ) -> Result<PaymentData, ProtocolError> {
        let winner = self.winners[winner_index].clone();
        match self.candidate_mode {
            CandidateMode::ResidualAllocation => {
                let residual = self.allocation.minus(&winner.bundle);
                let mut pool = self.candidate_pool_for(winner.sid);
                // Any feasible candidate ranks at or below the winner, so
                // the scan starts at the winner's revealed norm.
                let mut upper = winner.norm_raw;
                loop {
                    match self.find_next(transport, upper, &mut pool, &residual)? {
                        None => {
                            return Ok(PaymentData {
                                winner: winner.sid,
                                candidate: None,
                                candidate_norm_raw: None,
                                notice: self.reserve_notice(),
                            })
                        }
                        Some((sid, guess)) => {
                            let reveal = transport.declare_candidate(sid, guess)?;
                            match self.validate_candidate(sid, guess, &reveal) {
                                Ok(()) => {
                                    return Ok(PaymentData {
                                        winner: winner.sid,
                                        candidate: Some(sid),
                                        candidate_norm_raw: Some(reveal.norm_raw),
                                        notice: self.priced_notice(winner.bundle.size(), &reveal),
                                    })
                                }
                                Err(e) => {
                                    self.flagged.push((sid, e.to_string()));
                                    pool.retain(|s| *s != sid);
                                    upper = guess;
                                }
                            }
                        }
                    }
                }
            }
            CandidateMode::LehmannRerun => {
                let flagged: BTreeSet<SessionId> = self.flagged.iter().map(|(s, _)| *s).collect();
                let mut pool: Vec<SessionId> = self
                    .remaining
                    .iter()
                    .copied()
                    .chain(self.winners.iter().map(|w| w.sid))
                    .filter(|s| *s != winner.sid && !flagged.contains(s))
                    .collect();
                pool.sort();
                pool.dedup();
                let mut rerun_alloc = Allocation::empty(self.num_goods);
                let mut upper = self.norm_domain_max;
                loop {
                    match self.find_next(transport, upper, &mut pool, &rerun_alloc.clone())? {
                        None => {
                            return Ok(PaymentData {
                                winner: winner.sid,
                                candidate: None,
                                candidate_norm_raw: None,
                                notice: self.reserve_notice(),
                            })
                        }
                        Some((sid, guess)) => {
                            if let Some(record) =
                                self.winners.iter().find(|w| w.sid == sid).cloned()
                            {
                                // A confirmed winner re-wins the rerun; its
                                // bundle is already known, no reveal needed.
                                rerun_alloc.mark(&record.bundle);
                                pool.retain(|s| *s != sid);
                                upper = guess;
                            } else {
                                let reveal = transport.declare_candidate(sid, guess)?;
                                match self.validate_candidate(sid, guess, &reveal) {
                                    Ok(()) => {
                                        return Ok(PaymentData {
                                            winner: winner.sid,
                                            candidate: Some(sid),
                                            candidate_norm_raw: Some(reveal.norm_raw),
                                            notice: self
                                                .priced_notice(winner.bundle.size(), &reveal),
                                        })
                                    }
                                    Err(e) => {
                                        self.flagged.push((sid, e.to_string()));
                                        pool.retain(|s| *s != sid);
                                        upper = guess;
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    /// Standalone privacy-preserving scalar product round against the
    /// current allocation: returns the decrypted masked overlap count,
    /// which is zero exactly when the bidder's bundle is feasible.
    pub fn scalar_product_round(
        &mut self,
        bidder: &mut BidderActor,
    ) -> Result<BigUint, ProtocolError> {
        let alloc = self.allocation.clone();
        let cts = self.encrypt_allocation(&alloc)?;
        let mask = bidder.draw_mask();
        let response = bidder.scalar_product_response(&self.pk, &cts, &mask)?;
        Ok(self.sk.decrypt(&response)?)
    }

    /// Test hook: mark goods allocated without running the protocol.
    pub fn force_allocate(&mut self, bundle: &Bundle) {
        self.allocation.mark(bundle);
    }
}
