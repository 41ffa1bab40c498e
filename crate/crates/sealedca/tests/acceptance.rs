//! Acceptance suite: one test per acceptance criterion, each printing a
//! single PASS/FAIL line. Run with `cargo test --test acceptance --
//! --nocapture` to see the lines for passing criteria too.
//!
//! The tests serialize on a global lock so the scaling measurements in
//! criterion 7 are not disturbed by concurrent work.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::RngCore;
use rayon::prelude::*;
use sealedca::arith::{self, PrimePair, RandomSource};
use sealedca::blindsig::{self, BlindingVariant, NRGroupParams, NRKeyPair};
use sealedca::fixedpoint::FixedPointValue;
use sealedca::harness::{self, bench, FaultKind};
use sealedca::instance::InstanceFile;
use sealedca::mechanism::{
    self, AuctionInstance, BidderInput, Bundle, CandidateMode, MechanismConfig,
};
use sealedca::paillier::{self, GeneratorMode};
use sealedca::protocol::{
    BidderActor, GuessStrategy, PaymentNoticeData, ProtocolConfig, SessionId,
};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

static SERIAL: Mutex<()> = Mutex::new(());

fn criterion(number: u32, name: &str, body: impl FnOnce() -> String + std::panic::UnwindSafe) {
    let guard = SERIAL.lock().unwrap_or_else(|poisoned| poisoned.into_inner());
    let start = Instant::now();
    let result = std::panic::catch_unwind(body);
    let elapsed = start.elapsed().as_secs_f64();
    match result {
        Ok(detail) => {
            println!("ACCEPTANCE {number} ({name}): PASS [{elapsed:.1}s] {detail}");
        }
        Err(panic) => {
            println!("ACCEPTANCE {number} ({name}): FAIL [{elapsed:.1}s]");
            drop(guard);
            std::panic::resume_unwind(panic);
        }
    }
    drop(guard);
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(n.into())
}

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../instances")
}

/// The shared configuration for the equivalence runs: 512-bit Paillier,
/// the small signer group, descending scan, residual candidates. Bids stay
/// below 9, so at e = 2 the norm domain tops out at 8 * 4 = 32 raw.
fn acceptance_config() -> ProtocolConfig {
    ProtocolConfig::desk(NRGroupParams::toy_2039(), 2, 32)
}

/// Random equivalence-family instance: up to 20 bidders, up to 10 goods,
/// integer bids 0..=8 (zero bids included).
fn random_instance(seed: u64) -> AuctionInstance {
    let mut rng = RandomSource::from_seed(seed);
    let n = 1 + (rng.next_u64() % 20) as usize;
    let m = 1 + (rng.next_u64() % 10) as usize;
    let bidders = (0..n)
        .map(|_| {
            let mut indices: Vec<usize> = Vec::new();
            while indices.is_empty() {
                indices = (0..m).filter(|_| rng.next_u64() % 2 == 0).collect();
            }
            BidderInput {
                bundle: Bundle::from_indices(m, &indices).unwrap(),
                bid: rat((rng.next_u64() % 9) as i64),
                valuation: None,
            }
        })
        .collect();
    AuctionInstance {
        num_goods: m,
        bidders,
    }
}

#[test]
fn criterion_1_oracle_equivalence() {
    criterion(1, "oracle equivalence", || {
        let config = acceptance_config();

        // 200 seeded random instances, compared in parallel; every run is
        // audited (criterion 6's positive half).
        let failures: Vec<String> = (0..200u64)
            .into_par_iter()
            .filter_map(|seed| {
                let instance = random_instance(10_000 + seed);
                let comparison = harness::compare_with_oracle(&instance, &config, seed);
                if !comparison.equivalent {
                    return Some(format!("seed {seed}: {:?}", comparison.diffs));
                }
                let audit = comparison.protocol.audit(&instance);
                if !audit.passed() {
                    return Some(format!("seed {seed}: audit {:?}", audit.violations));
                }
                None
            })
            .collect();
        assert!(failures.is_empty(), "mismatches: {failures:?}");

        // Ten hand-authored corner instances, bit-identical as well.
        let mut fixtures: Vec<PathBuf> = std::fs::read_dir(fixture_dir())
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.extension().is_some_and(|x| x == "toml"))
            .collect();
        fixtures.sort();
        assert_eq!(fixtures.len(), 10);
        for path in &fixtures {
            let file = InstanceFile::load(path).unwrap();
            let seed = file.config.seed;
            let (instance, config) = file.resolve().unwrap();
            let comparison = harness::compare_with_oracle(&instance, &config, seed);
            assert!(
                comparison.equivalent,
                "{}: {:?}",
                path.display(),
                comparison.diffs
            );
            let audit = comparison.protocol.audit(&instance);
            assert!(audit.passed(), "{}: {:?}", path.display(), audit.violations);
        }
        "200 random + 10 corner instances bit-identical to the oracle, all transcripts audited".into()
    });
}

#[test]
fn criterion_2_approximation_bound() {
    criterion(2, "sqrt(m) approximation bound", || {
        let config = MechanismConfig::new(16, CandidateMode::ResidualAllocation);
        let mut checked = 0u64;
        let mut tight: Option<BigRational> = None;

        let mut check = |instance: &AuctionInstance| {
            let outcome = mechanism::greedy_winners(instance, &config);
            let greedy = mechanism::welfare(instance, &outcome.winners);
            let (optimal, _) = mechanism::optimal_winners(instance).unwrap();
            // greedy * sqrt(m) >= optimal, compared exactly as
            // greedy^2 * m >= optimal^2 (both sides non-negative).
            let m = BigRational::from_integer((instance.num_goods as i64).into());
            assert!(
                &greedy * &greedy * &m >= &optimal * &optimal,
                "bound violated: greedy {greedy}, optimal {optimal}, m {}",
                instance.num_goods
            );
            if !optimal.is_zero() {
                let ratio_sq = &optimal * &optimal / (&greedy * &greedy * &m);
                if tight.as_ref().is_none_or(|t| ratio_sq > *t) {
                    tight = Some(ratio_sq);
                }
            }
            checked += 1;
        };

        // 10^3 random exhaustively solvable instances.
        let mut rng = RandomSource::from_seed(20_000);
        for _ in 0..1000 {
            let m = 1 + (rng.next_u64() % 8) as usize;
            let n = 1 + (rng.next_u64() % 12) as usize;
            let bidders = (0..n)
                .map(|_| {
                    let mut indices: Vec<usize> = Vec::new();
                    while indices.is_empty() {
                        indices = (0..m).filter(|_| rng.next_u64() % 2 == 0).collect();
                    }
                    BidderInput {
                        bundle: Bundle::from_indices(m, &indices).unwrap(),
                        bid: rat((rng.next_u64() % 16) as i64),
                        valuation: None,
                    }
                })
                .collect();
            check(&AuctionInstance {
                num_goods: m,
                bidders,
            });
        }

        // Adversarial corner family: m unit singletons against one
        // full-bundle bidder priced just above / just below sqrt(m).
        for m in 2..=8usize {
            for bump in [-1i64, 1] {
                let root = FixedPointValue::sqrt_of_int(m as u64, 16);
                let boundary =
                    root.decode() + rat(bump) * BigRational::new(1.into(), (1i64 << 16).into());
                if boundary.is_negative() {
                    continue;
                }
                let mut bidders: Vec<BidderInput> = (0..m)
                    .map(|g| BidderInput {
                        bundle: Bundle::from_indices(m, &[g]).unwrap(),
                        bid: rat(1),
                        valuation: None,
                    })
                    .collect();
                bidders.push(BidderInput {
                    bundle: Bundle::from_indices(m, &(0..m).collect::<Vec<_>>()).unwrap(),
                    bid: boundary,
                    valuation: None,
                });
                check(&AuctionInstance {
                    num_goods: m,
                    bidders,
                });
            }
        }

        format!(
            "{checked} instances, all satisfy greedy^2*m >= optimal^2 (tightest optimal^2/(greedy^2*m) = {:.4})",
            tight.map(|t| t.numer().to_string().parse::<f64>().unwrap()
                / t.denom().to_string().parse::<f64>().unwrap())
                .unwrap_or(0.0)
        )
    });
}

#[test]
fn criterion_3_truthfulness() {
    criterion(3, "truthfulness", || {
        let rerun = MechanismConfig::new(16, CandidateMode::LehmannRerun);
        let residual = MechanismConfig::new(16, CandidateMode::ResidualAllocation);

        let mut instances: Vec<AuctionInstance> = Vec::new();

        // Exhaustive family: three bidders, three goods, every combination
        // of non-empty bundles and valuations from {1, 2, 3}.
        let bundles: Vec<Bundle> = (1u32..8)
            .map(|mask| {
                let indices: Vec<usize> = (0..3).filter(|k| mask >> k & 1 == 1).collect();
                Bundle::from_indices(3, &indices).unwrap()
            })
            .collect();
        for b0 in &bundles {
            for b1 in &bundles {
                for b2 in &bundles {
                    for v in 0..27u32 {
                        let vals = [v % 3 + 1, v / 3 % 3 + 1, v / 9 + 1];
                        let bidders = [b0, b1, b2]
                            .iter()
                            .zip(vals)
                            .map(|(b, val)| BidderInput {
                                bundle: (*b).clone(),
                                bid: rat(val as i64),
                                valuation: Some(rat(val as i64)),
                            })
                            .collect();
                        instances.push(AuctionInstance {
                            num_goods: 3,
                            bidders,
                        });
                    }
                }
            }
        }

        // Random wider family up to the criterion's bounds.
        let mut rng = RandomSource::from_seed(30_000);
        for _ in 0..300 {
            let m = 1 + (rng.next_u64() % 4) as usize;
            let n = 1 + (rng.next_u64() % 5) as usize;
            let bidders = (0..n)
                .map(|_| {
                    let mut indices: Vec<usize> = Vec::new();
                    while indices.is_empty() {
                        indices = (0..m).filter(|_| rng.next_u64() % 2 == 0).collect();
                    }
                    let v = rat((rng.next_u64() % 5) as i64);
                    BidderInput {
                        bundle: Bundle::from_indices(m, &indices).unwrap(),
                        bid: v.clone(),
                        valuation: Some(v),
                    }
                })
                .collect();
            instances.push(AuctionInstance {
                num_goods: m,
                bidders,
            });
        }

        // (count, rerun violations, untied or >2ulp rerun violations,
        //  exact-arithmetic rerun violations, residual violations)
        let stats: Vec<(u64, u64, u64, u64, u64)> = instances
            .par_iter()
            .map(|instance| {
                let mut sweeps = 0u64;
                let mut rerun_violations = 0u64;
                let mut uncharacterized = 0u64;
                let mut exact_violations = 0u64;
                let mut residual_violations = 0u64;
                let norms: Vec<u64> = instance
                    .bidders
                    .iter()
                    .map(|b| {
                        mechanism::norm(&b.bid, b.bundle.size(), 16)
                            .raw_u64()
                            .unwrap()
                    })
                    .collect();
                for i in 0..instance.bidders.len() {
                    let valuation = instance.bidders[i].valuation_or_bid().clone();
                    let grid = mechanism::default_bid_grid(&valuation, 16);

                    let report = mechanism::deviation_sweep(instance, i, &grid, &rerun);
                    assert!(
                        !report.negative_honest_utility,
                        "rerun mode: negative honest utility for bidder {i}"
                    );
                    rerun_violations += report.profitable_deviations.len() as u64;
                    // Characterize every violation: it must involve an exact
                    // fixed-point norm tie and pay off at most 2 ulp.
                    let tied = norms.iter().enumerate().any(|(j, &nj)| j != i && nj == norms[i]);
                    let two_ulp = BigRational::new(1.into(), (1i64 << 15).into());
                    for dev in &report.profitable_deviations {
                        let gain = report
                            .sweep
                            .iter()
                            .find(|(b, _)| b == dev)
                            .map(|(_, u)| u - &report.honest_utility)
                            .unwrap();
                        if !tied || gain > two_ulp {
                            uncharacterized += 1;
                        }
                    }

                    exact_violations += exact_sweep_violations(instance, i, &grid);

                    let report = mechanism::deviation_sweep(instance, i, &grid, &residual);
                    assert!(
                        !report.negative_honest_utility,
                        "residual mode: negative honest utility for bidder {i}"
                    );
                    residual_violations += report.profitable_deviations.len() as u64;
                    sweeps += 1;
                }
                (sweeps, rerun_violations, uncharacterized, exact_violations, residual_violations)
            })
            .collect();

        let sweeps: u64 = stats.iter().map(|s| s.0).sum();
        let rerun_violations: u64 = stats.iter().map(|s| s.1).sum();
        let uncharacterized: u64 = stats.iter().map(|s| s.2).sum();
        let exact_violations: u64 = stats.iter().map(|s| s.3).sum();
        let residual_violations: u64 = stats.iter().map(|s| s.4).sum();

        // The mechanism itself is truthful: the same sweep evaluated in
        // exact arithmetic finds nothing.
        assert_eq!(
            exact_violations, 0,
            "exact-arithmetic sweep found a profitable deviation: the greedy/candidate logic is wrong"
        );
        // And every fixed-point violation is the known rounding artifact.
        assert_eq!(
            uncharacterized, 0,
            "a fixed-point violation fell outside the tie/<=2ulp characterization"
        );

        // The criterion as stated: zero profitable deviations under the
        // rerun rule, in fixed point. This fails: the floor-rounded
        // canonical norm/payment formulas admit <= 2 ulp profits exactly at
        // fixed-point norm ties, where exact arithmetic prices the boundary
        // at utility zero. The exact-arithmetic sweep above passing with
        // zero shows the gap comes from the rounding, not the mechanism
        // logic.
        assert_eq!(
            rerun_violations, 0,
            "rerun-mode fixed-point sweep found {rerun_violations} profitable deviations \
             (exact-arithmetic sweep of the same family found {exact_violations}; every \
             violation sits at an exact norm tie with gain <= 2 ulp)"
        );
        format!(
            "{} instances / {sweeps} sweeps: rerun-mode profitable deviations = 0, \
             honest utility >= 0 in both modes; residual-mode profitable deviations = {residual_violations} (reported, not asserted)",
            instances.len()
        )
    });
}

/// Exact-arithmetic deviation sweep, independent of the fixed-point path:
/// norms compared as bid^2 / |S| rationals (session id on ties), the rerun
/// candidate computed under that order, profitability decided by comparing
/// valuation^2 * |S_j| against candidate_bid^2 * |S_i| exactly. Returns the
/// number of strictly profitable grid deviations.
fn exact_sweep_violations(instance: &AuctionInstance, i: usize, grid: &[BigRational]) -> u64 {
    let norm_key = |b: &BidderInput| -> BigRational {
        // bid^2 / |S|, an exact stand-in for (bid / sqrt(|S|))^2.
        &b.bid * &b.bid / BigRational::from_integer((b.bundle.size() as i64).into())
    };
    let greedy_exact = |bidders: &[(usize, BidderInput)]| -> Vec<usize> {
        let mut order: Vec<usize> = (0..bidders.len()).collect();
        order.sort_by(|&a, &b| {
            norm_key(&bidders[b].1)
                .cmp(&norm_key(&bidders[a].1))
                .then(bidders[a].0.cmp(&bidders[b].0))
        });
        let mut allocation = mechanism::Allocation::empty(instance.num_goods);
        let mut winners = Vec::new();
        for idx in order {
            if !allocation.intersects(&bidders[idx].1.bundle) {
                allocation.mark(&bidders[idx].1.bundle);
                winners.push(bidders[idx].0);
            }
        }
        winners
    };

    let valuation = instance.bidders[i].valuation_or_bid().clone();

    // The candidate is the first rerun winner whose bundle intersects the
    // deviator's; it does not depend on the deviator's own bid.
    let without_i: Vec<(usize, BidderInput)> = instance
        .bidders
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != i)
        .map(|(j, b)| (j, b.clone()))
        .collect();
    let candidate = greedy_exact(&without_i)
        .into_iter()
        .find(|&j| instance.bidders[j].bundle.intersects(&instance.bidders[i].bundle));

    let won_with_bid = |bid: &BigRational| -> bool {
        let all: Vec<(usize, BidderInput)> = instance
            .bidders
            .iter()
            .enumerate()
            .map(|(j, b)| {
                let mut b = b.clone();
                if j == i {
                    b.bid = bid.clone();
                }
                (j, b)
            })
            .collect();
        greedy_exact(&all).contains(&i)
    };

    // A winner's utility is v - b_j * sqrt(|S_i| / |S_j|) (or v against the
    // zero reserve); its sign reduces to comparing v^2 * |S_j| with
    // b_j^2 * |S_i| exactly. The candidate (and so the payment) is fixed,
    // so a deviation can only profit by flipping the win/lose outcome.
    let winner_utility_sign = {
        match candidate {
            None => valuation.cmp(&BigRational::zero()),
            Some(j) => {
                let b_j = &instance.bidders[j].bid;
                let lhs = &valuation
                    * &valuation
                    * BigRational::from_integer((instance.bidders[j].bundle.size() as i64).into());
                let rhs = b_j
                    * b_j
                    * BigRational::from_integer((instance.bidders[i].bundle.size() as i64).into());
                lhs.cmp(&rhs)
            }
        }
    };

    let honest_won = won_with_bid(&valuation);
    let mut violations = 0u64;
    for bid in grid {
        let dev_won = won_with_bid(bid);
        let profitable = match (honest_won, dev_won) {
            // Losing honestly but winning by deviation profits only with a
            // strictly positive winner utility.
            (false, true) => winner_utility_sign == std::cmp::Ordering::Greater,
            // Winning honestly but losing by deviation profits only if the
            // honest utility was strictly negative, which the payment rule
            // never allows.
            (true, false) => winner_utility_sign == std::cmp::Ordering::Less,
            _ => false,
        };
        if profitable {
            violations += 1;
        }
    }
    violations
}

#[test]
fn criterion_4_cryptographic_correctness() {
    criterion(4, "cryptographic correctness", || {
        // Paillier, exhaustive over the toy plaintext space.
        let mut rng = RandomSource::from_seed(40_000);
        let (pk, sk) = paillier::from_primes(
            PrimePair::from_parts(BigUint::from(5u32), BigUint::from(7u32)),
            GeneratorMode::Random,
            &mut rng,
        )
        .unwrap();
        for m1 in 0..35u64 {
            let c1 = pk.encrypt(&BigUint::from(m1), &mut rng).unwrap();
            assert_eq!(sk.decrypt(&c1).unwrap(), BigUint::from(m1));
            for m2 in 0..35u64 {
                let c2 = pk.encrypt(&BigUint::from(m2), &mut rng).unwrap();
                assert_eq!(
                    sk.decrypt(&pk.add_ct(&c1, &c2)).unwrap(),
                    BigUint::from((m1 + m2) % 35)
                );
                assert_eq!(
                    sk.decrypt(&pk.mul_plain(&c1, &BigUint::from(m2))).unwrap(),
                    BigUint::from(m1 * m2 % 35)
                );
            }
        }

        // Paillier, 10^3 randomized trials at 512 bits.
        let (pk, sk) = paillier::keygen(512, GeneratorMode::Random, &mut rng);
        for _ in 0..1000 {
            let m1 = arith::rand_below(&pk.n, &mut rng);
            let m2 = arith::rand_below(&pk.n, &mut rng);
            let k = arith::rand_below(&pk.n, &mut rng);
            let c1 = pk.encrypt(&m1, &mut rng).unwrap();
            let c2 = pk.encrypt(&m2, &mut rng).unwrap();
            assert_eq!(sk.decrypt(&c1).unwrap(), m1);
            assert_eq!(
                sk.decrypt(&pk.add_ct(&c1, &c2)).unwrap(),
                (&m1 + &m2) % &pk.n
            );
            assert_eq!(
                sk.decrypt(&pk.mul_plain(&c1, &k)).unwrap(),
                &m1 * &k % &pk.n
            );
        }

        // Blind NR, exhaustive over the toy group's message space.
        let params = NRGroupParams::toy_23();
        let keypair = NRKeyPair::generate(&params, &mut rng);
        for m in 1..23u64 {
            let m = BigUint::from(m);
            let mut signee = rng.fork();
            let sig = blindsig::blind_sign(
                &params,
                BlindingVariant::MixNonce,
                &keypair,
                &m,
                &mut rng,
                &mut signee,
            )
            .unwrap();
            assert!(blindsig::verify(&params, keypair.public(), &m, &sig));
            assert_eq!(blindsig::recover(&params, keypair.public(), &sig), m);
        }

        // Blind NR, 10^3 randomized trials over a 1024-bit group.
        let params = NRGroupParams::generate(1024, 160, &mut rng);
        params.validate(&mut rng).unwrap();
        let keypair = NRKeyPair::generate(&params, &mut rng);
        for _ in 0..1000 {
            let m = arith::rand_below(&params.p, &mut rng);
            let mut signee = rng.fork();
            let sig = blindsig::blind_sign(
                &params,
                BlindingVariant::MixNonce,
                &keypair,
                &m,
                &mut rng,
                &mut signee,
            )
            .unwrap();
            assert!(blindsig::verify(&params, keypair.public(), &m, &sig));
            assert_eq!(blindsig::recover(&params, keypair.public(), &sig), m);
        }

        "Paillier identities exhaustive over Z_35 and 10^3 trials at 512 bits; \
         blind NR sign/verify/recover exhaustive over the toy group and 10^3 trials at 1024 bits"
            .into()
    });
}

#[test]
fn criterion_5_tamper_detection() {
    criterion(5, "tamper detection", || {
        // 10^3 randomized value tamperings against the payment check: any
        // reported amount different from the canonical one, with the honest
        // signature attached, must be rejected.
        let params = NRGroupParams::toy_2039();
        let mut rng = RandomSource::from_seed(50_000);
        let keypair = NRKeyPair::generate(&params, &mut rng);
        let exponent = 2u32;
        let norm_domain_max = 256u64;
        let mut rejected = 0u64;
        for trial in 0..1000u64 {
            let candidate_norm = rng.next_u64() % (norm_domain_max + 1);
            let winner_bundle_size = 1 + (rng.next_u64() % 6);
            let winner_bundle =
                Bundle::from_indices(6, &(0..winner_bundle_size as usize).collect::<Vec<_>>())
                    .unwrap();
            let bidder = {
                let mut actor = BidderActor::new(
                    SessionId(0),
                    winner_bundle,
                    &rat(1),
                    exponent,
                    norm_domain_max,
                    FixedPointValue::zero(exponent),
                    params.clone(),
                    BlindingVariant::MixNonce,
                    rng.fork(),
                );
                actor.install_keys(
                    paillier::keygen(64, GeneratorMode::NPlusOne, &mut rng.fork()).0,
                    keypair.public().clone(),
                );
                actor
            };
            let message = params.embed_value(&BigUint::from(candidate_norm)).unwrap();
            let mut signee = rng.fork();
            let sig = blindsig::blind_sign(
                &params,
                BlindingVariant::MixNonce,
                &keypair,
                &message,
                &mut rng,
                &mut signee,
            )
            .unwrap();
            let honest = mechanism::payment_from_norm(
                &FixedPointValue::from_raw(BigUint::from(candidate_norm), exponent),
                winner_bundle_size,
                exponent,
            );

            // The honest notice is accepted.
            let notice = PaymentNoticeData {
                payment_raw: honest.raw().clone(),
                sig_norm: Some(sig.clone()),
                reserve: false,
            };
            assert!(bidder.verify_payment(&notice), "trial {trial}: honest rejected");

            // Any distinct amount is rejected.
            let delta = 1 + rng.next_u64() % 1000;
            let tampered_raw = if trial % 2 == 0 {
                honest.raw().clone() + BigUint::from(delta)
            } else {
                let d = BigUint::from(delta);
                if *honest.raw() > d {
                    honest.raw().clone() - d
                } else {
                    honest.raw().clone() + BigUint::from(delta)
                }
            };
            let tampered = PaymentNoticeData {
                payment_raw: tampered_raw,
                sig_norm: Some(sig),
                reserve: false,
            };
            assert!(
                !bidder.verify_payment(&tampered),
                "trial {trial}: tampered accepted"
            );
            rejected += 1;
        }

        // End-to-end drills at 512 bits.
        let config = acceptance_config();
        for (seed, instance) in [
            (1u64, random_instance(61_001)),
            (2, random_instance(61_002)),
        ] {
            for kind in [
                FaultKind::InflatePayment,
                FaultKind::ForgeSignature,
                FaultKind::FakeReveal,
            ] {
                // Skip drills that need a winner with a priced notice when
                // the random instance has none.
                let oracle = mechanism::run_mechanism(&instance, &config.mechanism_config());
                if oracle.winners.is_empty() {
                    continue;
                }
                if kind == FaultKind::InflatePayment && oracle.payments.is_empty() {
                    continue;
                }
                let drill = harness::inject_fault(kind, &instance, &config, seed);
                assert!(drill.detected, "{kind:?} undetected on seed {seed}");
            }
        }

        // The documented pass-through: substituted signature with a
        // consistent amount is accepted.
        let file = InstanceFile::load(&fixture_dir().join("substitution-scenario.toml")).unwrap();
        let (instance, config) = file.resolve().unwrap();
        let drill = harness::inject_fault(FaultKind::SubstituteSignature, &instance, &config, 3);
        assert!(drill.expected_pass_through && !drill.detected);

        format!(
            "{rejected}/1000 tampered notices rejected; end-to-end forge/fake/inflate drills detected; \
             signature substitution reported EXPECTED-PASS-THROUGH"
        )
    });
}

#[test]
fn criterion_6_privacy_audit() {
    criterion(6, "privacy audit", || {
        // The positive half (every equivalence run audited) is bundled into
        // criterion 1. Here: an honest 512-bit run passes and the leaky
        // double fails with a pinpointed sequence number.
        let config = acceptance_config();
        let instance = random_instance(66_000);
        let honest = harness::run_auction(&instance, &config, 9);
        assert!(honest.completed());
        let audit = honest.audit(&instance);
        assert!(audit.passed(), "{:?}", audit.violations);

        let drill = harness::inject_fault(FaultKind::LeakPlaintext, &instance, &config, 9);
        assert!(!drill.audit.passed(), "leak not caught");
        assert!(drill.detected);
        format!(
            "honest transcript clean ({} messages); LeakPlaintext run flagged at seq {}",
            audit.messages_checked,
            drill.audit.violations[0].seq
        )
    });
}

#[test]
fn criterion_7_scaling_trends() {
    criterion(7, "scaling trends", || {
        let reps = 5;
        let bits = 512;

        let sweep = |variable, points: Vec<u64>, strategy| {
            bench::run_sweep(&bench::SweepSpec {
                variable,
                points,
                reps,
                seed: 70_000,
                guess_strategy: strategy,
                paillier_bits: bits,
            })
        };

        // Exponents are asserted on the winner-determination phase, which
        // isolates the probe-scan mechanics. Payment-phase cost at desk
        // scale is dominated by whether candidates exist at all (a reserve
        // fallback scans the domain to zero), so those fits are reported
        // but not banded.
        let goods = sweep(
            bench::SweepVariable::Goods,
            vec![4, 8, 14, 20],
            GuessStrategy::DescendingScan,
        );
        assert!(
            (0.75..=1.25).contains(&goods.fit_auctioneer_wd),
            "goods exponent {:.3} outside 1.0 +- 0.25",
            goods.fit_auctioneer_wd
        );

        let bidders = sweep(
            bench::SweepVariable::Bidders,
            vec![5, 15, 30, 50],
            GuessStrategy::DescendingScan,
        );
        assert!(
            (0.75..=1.25).contains(&bidders.fit_auctioneer_wd),
            "bidders exponent {:.3} outside 1.0 +- 0.25",
            bidders.fit_auctioneer_wd
        );

        let scan = sweep(
            bench::SweepVariable::MaxNorm,
            vec![8, 16, 32, 64],
            GuessStrategy::DescendingScan,
        );
        assert!(
            (0.75..=1.25).contains(&scan.fit_mean_bidder_wd),
            "max-norm scan exponent {:.3} not ~linear",
            scan.fit_mean_bidder_wd
        );

        // Binary search on its dense-norm precondition family: per-bidder
        // cost grows sublinearly in the domain (the guess count is
        // logarithmic; the deterministic guess-count fits must separate
        // the two strategies as well).
        let bse = sweep(
            bench::SweepVariable::MaxNorm,
            vec![8, 16, 32, 64],
            GuessStrategy::BinarySearchEquality,
        );
        assert!(
            bse.fit_mean_bidder_wd < 0.75,
            "binary search per-bidder exponent {:.3} not measurably sublinear",
            bse.fit_mean_bidder_wd
        );
        assert!(
            bse.fit_guesses < scan.fit_guesses && bse.fit_guesses < 0.75,
            "guess-count fits did not separate: scan {:.3} vs binary search {:.3}",
            scan.fit_guesses,
            bse.fit_guesses
        );

        format!(
            "winner-determination exponents: goods {:.2}, bidders {:.2}, max-norm scan {:.2} \
             (guesses {:.2}); binary-search dense family {:.2} (guesses {:.2}); \
             payment-phase fits (reported): goods {:.2}, bidders {:.2}",
            goods.fit_auctioneer_wd,
            bidders.fit_auctioneer_wd,
            scan.fit_mean_bidder_wd,
            scan.fit_guesses,
            bse.fit_mean_bidder_wd,
            bse.fit_guesses,
            goods.fit_auctioneer_pd,
            bidders.fit_auctioneer_pd,
        )
    });
}
