//! Plaintext auction semantics: greedy winner determination on the norm
//! bid / sqrt(bundle size), the candidate-based payment rule in both
//! published variants, a brute-force optimal allocator, and utility /
//! truthfulness evaluation. This module is the ground-truth oracle the
//! encrypted protocol is compared against.

use crate::fixedpoint::FixedPointValue;
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MechanismError {
    #[error("instance too large for exhaustive search (n = {0}, limit 20)")]
    InstanceTooLarge(usize),
    #[error("bundle index {index} out of range for {num_goods} goods")]
    BadGoodIndex { index: usize, num_goods: usize },
    #[error("bundle must be non-empty")]
    EmptyBundle,
}

/// A bidder's desired subset of the goods, as a binary vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Bundle {
    bits: Vec<bool>,
}

impl Bundle {
    pub fn from_bits(bits: Vec<bool>) -> Result<Self, MechanismError> {
        if !bits.iter().any(|&b| b) {
            return Err(MechanismError::EmptyBundle);
        }
        Ok(Self { bits })
    }

    pub fn from_indices(num_goods: usize, indices: &[usize]) -> Result<Self, MechanismError> {
        let mut bits = vec![false; num_goods];
        for &index in indices {
            if index >= num_goods {
                return Err(MechanismError::BadGoodIndex { index, num_goods });
            }
            bits[index] = true;
        }
        Self::from_bits(bits)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn num_goods(&self) -> usize {
        self.bits.len()
    }

    pub fn size(&self) -> u64 {
        self.bits.iter().filter(|&&b| b).count() as u64
    }

    pub fn indices(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }

    pub fn intersects(&self, other: &Bundle) -> bool {
        self.bits
            .iter()
            .zip(&other.bits)
            .any(|(&a, &b)| a && b)
    }

    /// Canonical injective integer encoding: sum of bit_k * 2^k.
    pub fn as_integer(&self) -> BigUint {
        let mut v = BigUint::zero();
        for (k, &bit) in self.bits.iter().enumerate() {
            if bit {
                v.set_bit(k as u64, true);
            }
        }
        v
    }

    pub fn from_integer(num_goods: usize, v: &BigUint) -> Result<Self, MechanismError> {
        let mut bits = vec![false; num_goods];
        for (k, bit) in bits.iter_mut().enumerate() {
            *bit = v.bit(k as u64);
        }
        if v.bits() > num_goods as u64 {
            return Err(MechanismError::BadGoodIndex {
                index: v.bits() as usize - 1,
                num_goods,
            });
        }
        Self::from_bits(bits)
    }
}

/// Which goods are already allocated, as a binary vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Allocation {
    bits: Vec<bool>,
}

impl Allocation {
    pub fn empty(num_goods: usize) -> Self {
        Self {
            bits: vec![false; num_goods],
        }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn intersects(&self, bundle: &Bundle) -> bool {
        self.bits
            .iter()
            .zip(bundle.bits())
            .any(|(&a, &b)| a && b)
    }

    pub fn mark(&mut self, bundle: &Bundle) {
        for (slot, &bit) in self.bits.iter_mut().zip(bundle.bits()) {
            *slot |= bit;
        }
    }

    /// The allocation with one winner's goods removed.
    pub fn minus(&self, bundle: &Bundle) -> Allocation {
        Allocation {
            bits: self
                .bits
                .iter()
                .zip(bundle.bits())
                .map(|(&a, &b)| a && !b)
                .collect(),
        }
    }
}

/// One bidder's private input. The valuation is consulted only by the
/// truthfulness harness; the mechanism itself sees bids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BidderInput {
    pub bundle: Bundle,
    pub bid: BigRational,
    pub valuation: Option<BigRational>,
}

impl BidderInput {
    pub fn valuation_or_bid(&self) -> &BigRational {
        self.valuation.as_ref().unwrap_or(&self.bid)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuctionInstance {
    pub num_goods: usize,
    pub bidders: Vec<BidderInput>,
}

impl AuctionInstance {
    pub fn validate(&self) -> Result<(), MechanismError> {
        assert!(self.num_goods >= 1, "instance needs at least one good");
        for bidder in &self.bidders {
            if bidder.bundle.num_goods() != self.num_goods || bidder.bundle.size() == 0 {
                return Err(MechanismError::EmptyBundle);
            }
        }
        Ok(())
    }
}

/// How a winner's payment-determining candidate is resolved. The two
/// published descriptions provably diverge on some instances, so both are
/// implemented and the mode is part of the shared configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CandidateMode {
    /// Highest-norm other bidder whose bundle avoids the residual
    /// allocation (final allocation minus the winner's goods).
    #[default]
    ResidualAllocation,
    /// First bidder that would be newly allocated if the greedy run were
    /// repeated without the winner.
    LehmannRerun,
}

/// Tie rule applied at exactly equal fixed-point norms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieBreak {
    #[default]
    SessionIdAscending,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MechanismConfig {
    pub exponent: u32,
    pub reserve_price: FixedPointValue,
    pub candidate_mode: CandidateMode,
    pub tie_break: TieBreak,
}

impl MechanismConfig {
    pub fn new(exponent: u32, candidate_mode: CandidateMode) -> Self {
        Self {
            exponent,
            reserve_price: FixedPointValue::zero(exponent),
            candidate_mode,
            tie_break: TieBreak::SessionIdAscending,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CandidateResolution {
    Candidate(usize),
    Reserve,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuctionOutcome {
    /// Winning bidder indices in the order the greedy pass confirmed them.
    pub winners: Vec<usize>,
    pub allocation: Allocation,
    pub payments: BTreeMap<usize, FixedPointValue>,
    pub candidates: BTreeMap<usize, CandidateResolution>,
}

/// The ranking key: the canonical fixed-point encoding of
/// bid / sqrt(bundle_size). All actors use this exact integer formula so
/// their norms agree bit for bit.
pub fn norm(bid: &BigRational, bundle_size: u64, exponent: u32) -> FixedPointValue {
    assert!(bundle_size >= 1, "norm requires a non-empty bundle");
    let encoded = FixedPointValue::encode(bid, exponent).expect("bids are non-negative");
    encoded
        .div(&FixedPointValue::sqrt_of_int(bundle_size, exponent))
        .expect("sqrt of a positive integer is non-zero")
}

/// The canonical payment integer: candidate norm times sqrt of the winner's
/// bundle size. Payment verification recomputes this exact value and
/// compares bit for bit.
pub fn payment_from_norm(
    candidate_norm: &FixedPointValue,
    winner_bundle_size: u64,
    exponent: u32,
) -> FixedPointValue {
    candidate_norm
        .mul(&FixedPointValue::sqrt_of_int(winner_bundle_size, exponent))
        .expect("exponents match by construction")
}

fn norms_of(instance: &AuctionInstance, exponent: u32) -> Vec<FixedPointValue> {
    instance
        .bidders
        .iter()
        .map(|b| norm(&b.bid, b.bundle.size(), exponent))
        .collect()
}

/// Bidder indices sorted by norm descending, session id ascending on ties.
fn greedy_order(norms: &[FixedPointValue], skip: Option<usize>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..norms.len()).filter(|&i| Some(i) != skip).collect();
    order.sort_by(|&a, &b| norms[b].raw().cmp(norms[a].raw()).then(a.cmp(&b)));
    order
}

/// Greedy winner determination: walk bidders in norm order and allocate
/// every bundle disjoint from the goods allocated so far.
pub fn greedy_winners(instance: &AuctionInstance, config: &MechanismConfig) -> AuctionOutcome {
    let norms = norms_of(instance, config.exponent);
    greedy_winners_from_norms(instance, &norms, None)
}

fn greedy_winners_from_norms(
    instance: &AuctionInstance,
    norms: &[FixedPointValue],
    skip: Option<usize>,
) -> AuctionOutcome {
    let mut allocation = Allocation::empty(instance.num_goods);
    let mut winners = Vec::new();
    for i in greedy_order(norms, skip) {
        if !allocation.intersects(&instance.bidders[i].bundle) {
            allocation.mark(&instance.bidders[i].bundle);
            winners.push(i);
        }
    }
    AuctionOutcome {
        winners,
        allocation,
        payments: BTreeMap::new(),
        candidates: BTreeMap::new(),
    }
}

/// Exhaustive search over conflict-free bidder subsets maximizing the sum of
/// bids. Guarded to n <= 20 bidders.
pub fn optimal_winners(
    instance: &AuctionInstance,
) -> Result<(BigRational, Vec<usize>), MechanismError> {
    let n = instance.bidders.len();
    if n > 20 {
        return Err(MechanismError::InstanceTooLarge(n));
    }
    assert!(
        instance.num_goods <= 128,
        "optimal search uses 128-bit good masks"
    );
    let masks: Vec<u128> = instance
        .bidders
        .iter()
        .map(|b| {
            b.bundle
                .bits()
                .iter()
                .enumerate()
                .fold(0u128, |m, (k, &bit)| if bit { m | (1 << k) } else { m })
        })
        .collect();

    let mut best = (BigRational::zero(), Vec::new());
    let mut chosen = Vec::new();
    fn go(
        i: usize,
        used: u128,
        welfare: BigRational,
        masks: &[u128],
        bids: &[BigRational],
        chosen: &mut Vec<usize>,
        best: &mut (BigRational, Vec<usize>),
    ) {
        if i == masks.len() {
            if welfare > best.0 {
                *best = (welfare, chosen.clone());
            }
            return;
        }
        if used & masks[i] == 0 {
            chosen.push(i);
            go(
                i + 1,
                used | masks[i],
                &welfare + &bids[i],
                masks,
                bids,
                chosen,
                best,
            );
            chosen.pop();
        }
        go(i + 1, used, welfare, masks, bids, chosen, best);
    }
    let bids: Vec<BigRational> = instance.bidders.iter().map(|b| b.bid.clone()).collect();
    go(
        0,
        0,
        BigRational::zero(),
        &masks,
        &bids,
        &mut chosen,
        &mut best,
    );
    Ok(best)
}

/// Sum of winners' bids.
pub fn welfare(instance: &AuctionInstance, winners: &[usize]) -> BigRational {
    winners
        .iter()
        .map(|&i| instance.bidders[i].bid.clone())
        .sum()
}

/// Resolve winner `winner_index`'s payment-determining candidate under the
/// configured mode.
pub fn candidate_of(
    instance: &AuctionInstance,
    outcome: &AuctionOutcome,
    winner_index: usize,
    config: &MechanismConfig,
) -> CandidateResolution {
    let norms = norms_of(instance, config.exponent);
    match config.candidate_mode {
        CandidateMode::ResidualAllocation => {
            let residual = outcome
                .allocation
                .minus(&instance.bidders[winner_index].bundle);
            greedy_order(&norms, Some(winner_index))
                .into_iter()
                .find(|&j| !residual.intersects(&instance.bidders[j].bundle))
                .map_or(CandidateResolution::Reserve, CandidateResolution::Candidate)
        }
        CandidateMode::LehmannRerun => {
            let rerun = greedy_winners_from_norms(instance, &norms, Some(winner_index));
            rerun
                .winners
                .iter()
                .copied()
                .find(|j| !outcome.winners.contains(j))
                .map_or(CandidateResolution::Reserve, CandidateResolution::Candidate)
        }
    }
}

/// The winner's payment: the canonical formula when a candidate exists, the
/// reserve price otherwise.
pub fn payment(
    instance: &AuctionInstance,
    winner_index: usize,
    candidate: CandidateResolution,
    config: &MechanismConfig,
) -> FixedPointValue {
    match candidate {
        CandidateResolution::Candidate(j) => {
            let candidate_norm = norm(
                &instance.bidders[j].bid,
                instance.bidders[j].bundle.size(),
                config.exponent,
            );
            payment_from_norm(
                &candidate_norm,
                instance.bidders[winner_index].bundle.size(),
                config.exponent,
            )
        }
        CandidateResolution::Reserve => config.reserve_price.clone(),
    }
}

/// Quasilinear utility: valuation minus payment for winners, zero otherwise.
pub fn utility(valuation: &BigRational, won: bool, paid: &FixedPointValue) -> BigRational {
    if won {
        valuation - paid.decode()
    } else {
        BigRational::zero()
    }
}

/// Full plaintext run: winners, allocation, and per-winner candidates and
/// payments.
pub fn run_mechanism(instance: &AuctionInstance, config: &MechanismConfig) -> AuctionOutcome {
    let mut outcome = greedy_winners(instance, config);
    for &w in outcome.winners.clone().iter() {
        let candidate = candidate_of(instance, &outcome, w, config);
        let pay = payment(instance, w, candidate, config);
        outcome.candidates.insert(w, candidate);
        outcome.payments.insert(w, pay);
    }
    outcome
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeviationReport {
    pub bidder: usize,
    pub honest_utility: BigRational,
    /// (deviating bid, resulting utility) for every grid point.
    pub sweep: Vec<(BigRational, BigRational)>,
    /// Grid bids that strictly beat honest bidding.
    pub profitable_deviations: Vec<BigRational>,
    pub negative_honest_utility: bool,
}

/// The default deviation grid: integer bids 0..=2v plus the valuation
/// shifted by one fixed-point ulp in each direction.
pub fn default_bid_grid(valuation: &BigRational, exponent: u32) -> Vec<BigRational> {
    let mut grid = Vec::new();
    let two_v = valuation * BigRational::from_integer(2.into());
    let mut b = BigRational::zero();
    while b <= two_v {
        grid.push(b.clone());
        b += BigRational::from_integer(1.into());
    }
    let ulp = BigRational::new(1.into(), num_bigint::BigInt::from(1u64 << exponent));
    let minus = valuation - &ulp;
    if !minus.is_negative() {
        grid.push(minus);
    }
    grid.push(valuation + &ulp);
    if !grid.contains(valuation) {
        grid.push(valuation.clone());
    }
    grid.sort();
    grid.dedup();
    grid
}

/// Rerun the full mechanism for every grid bid of one bidder and record the
/// utility each deviation earns. Flags any bid that strictly improves on
/// honest bidding.
pub fn deviation_sweep(
    instance: &AuctionInstance,
    bidder_index: usize,
    bid_grid: &[BigRational],
    config: &MechanismConfig,
) -> DeviationReport {
    let valuation = instance.bidders[bidder_index].valuation_or_bid().clone();
    assert!(
        bid_grid.contains(&valuation),
        "bid grid must include the true valuation"
    );

    let utility_at = |bid: &BigRational| -> BigRational {
        let mut deviated = instance.clone();
        deviated.bidders[bidder_index].bid = bid.clone();
        let outcome = run_mechanism(&deviated, config);
        let won = outcome.winners.contains(&bidder_index);
        let paid = outcome
            .payments
            .get(&bidder_index)
            .cloned()
            .unwrap_or_else(|| FixedPointValue::zero(config.exponent));
        utility(&valuation, won, &paid)
    };

    let honest_utility = utility_at(&valuation);
    let mut sweep = Vec::with_capacity(bid_grid.len());
    let mut profitable = Vec::new();
    for bid in bid_grid {
        let u = utility_at(bid);
        if u > honest_utility {
            profitable.push(bid.clone());
        }
        sweep.push((bid.clone(), u));
    }
    DeviationReport {
        bidder: bidder_index,
        honest_utility: honest_utility.clone(),
        sweep,
        profitable_deviations: profitable,
        negative_honest_utility: honest_utility.is_negative(),
    }
}
