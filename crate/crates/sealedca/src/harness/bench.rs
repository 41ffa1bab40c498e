//! Benchmark harness for the scaling sweeps: timed local runs with
//! per-actor, per-phase wall clocks, deterministic instance families per
//! swept variable, and log-log growth-exponent fits.
//!
//! Communication is excluded from the measurement: probes run through a
//! direct in-memory transport (no transcript recording), and the blind
//! signing phase is set up outside the timed sections.

use crate::arith::RandomSource;
use crate::blindsig::{self, NRKeyPair};
use crate::mechanism::{AuctionInstance, Bundle};
use crate::paillier::Ciphertext;
use crate::protocol::{
    Auctioneer, BidderActor, CandidateRevealData, GuessStrategy, ProbeTransport, ProtocolConfig,
    ProtocolError, SessionId, WinnerRevealData,
};
use num_bigint::BigUint;
use serde::Serialize;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

/// Wall time split by actor for one protocol phase.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct ActorTimings {
    pub auctioneer_ms: f64,
    pub mean_bidder_ms: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PhaseTimings {
    pub winner_determination: ActorTimings,
    pub payment_determination: ActorTimings,
    pub signing_ms: f64,
    pub probes: u64,
    pub guesses: u64,
    pub winners: usize,
}

struct TimedTransport<'a> {
    bidders: &'a mut [BidderActor],
    bidder_time: Duration,
}

impl TimedTransport<'_> {
    fn timed<T>(&mut self, sid: SessionId, f: impl FnOnce(&mut BidderActor) -> T) -> T {
        let start = Instant::now();
        let out = f(&mut self.bidders[sid.0 as usize]);
        self.bidder_time += start.elapsed();
        out
    }
}

impl ProbeTransport for TimedTransport<'_> {
    fn probe(
        &mut self,
        sid: SessionId,
        guess_ct: Ciphertext,
        alloc_cts: Vec<Ciphertext>,
    ) -> Result<Ciphertext, ProtocolError> {
        self.timed(sid, |b| b.respond_probe(&guess_ct, &alloc_cts))
    }

    fn declare_winner(
        &mut self,
        sid: SessionId,
        norm_guess: u64,
    ) -> Result<WinnerRevealData, ProtocolError> {
        Ok(self.timed(sid, |b| b.reveal_winner(norm_guess)))
    }

    fn declare_candidate(
        &mut self,
        sid: SessionId,
        norm_guess: u64,
    ) -> Result<CandidateRevealData, ProtocolError> {
        Ok(self.timed(sid, |b| b.reveal_candidate(norm_guess)))
    }
}

/// One full protocol run without the recording network, timed per phase and
/// per actor.
pub fn timed_local_run(
    instance: &AuctionInstance,
    config: &ProtocolConfig,
    seed: u64,
) -> Result<PhaseTimings, String> {
    config
        .validate_instance(instance)
        .map_err(|e| e.to_string())?;
    let n = instance.bidders.len().max(1) as f64;

    let mut master = RandomSource::from_seed(seed);
    let auctioneer_rng = master.fork();
    let mut signer_rng = master.fork();
    let signer_key = NRKeyPair::generate(&config.nr_params, &mut signer_rng);

    let sids: Vec<SessionId> = (0..instance.bidders.len() as u32).map(SessionId).collect();
    let mut auctioneer = Auctioneer::new(
        config,
        instance.num_goods,
        sids.iter().copied(),
        signer_key.public().clone(),
        auctioneer_rng,
    );

    let signing_start = Instant::now();
    let mut bidders: Vec<BidderActor> = Vec::with_capacity(instance.bidders.len());
    for (i, input) in instance.bidders.iter().enumerate() {
        let mut actor = BidderActor::new(
            SessionId(i as u32),
            input.bundle.clone(),
            &input.bid,
            config.exponent,
            config.norm_domain_max,
            config.reserve_price.clone(),
            config.nr_params.clone(),
            config.blinding,
            master.fork(),
        );
        actor.install_keys(auctioneer.public_key().clone(), signer_key.public().clone());
        let norm_msg = config
            .nr_params
            .embed_value(&BigUint::from(actor.norm_raw()))
            .map_err(|e| e.to_string())?;
        let bundle_msg = config
            .nr_params
            .embed_value(&input.bundle.as_integer())
            .map_err(|e| e.to_string())?;
        let mut signee_rng = master.fork();
        let sig_norm = blindsig::blind_sign(
            &config.nr_params,
            config.blinding,
            &signer_key,
            &norm_msg,
            &mut signer_rng,
            &mut signee_rng,
        )
        .map_err(|e| e.to_string())?;
        let sig_bundle = blindsig::blind_sign(
            &config.nr_params,
            config.blinding,
            &signer_key,
            &bundle_msg,
            &mut signer_rng,
            &mut signee_rng,
        )
        .map_err(|e| e.to_string())?;
        actor.install_signatures(sig_norm, sig_bundle);
        bidders.push(actor);
    }
    let signing_ms = signing_start.elapsed().as_secs_f64() * 1e3;

    // Winner determination.
    let wd_start = Instant::now();
    let wd_bidder_time;
    {
        let mut transport = TimedTransport {
            bidders: &mut bidders,
            bidder_time: Duration::ZERO,
        };
        auctioneer
            .run_winner_determination(&mut transport)
            .map_err(|e| e.to_string())?;
        wd_bidder_time = transport.bidder_time;
    }
    let wd_total = wd_start.elapsed();

    // Payment determination for every winner.
    let pd_start = Instant::now();
    let pd_bidder_time;
    {
        let mut transport = TimedTransport {
            bidders: &mut bidders,
            bidder_time: Duration::ZERO,
        };
        for index in 0..auctioneer.winners().len() {
            auctioneer
                .determine_payment(&mut transport, index)
                .map_err(|e| e.to_string())?;
        }
        pd_bidder_time = transport.bidder_time;
    }
    let pd_total = pd_start.elapsed();

    let to_ms = |d: Duration| d.as_secs_f64() * 1e3;
    Ok(PhaseTimings {
        winner_determination: ActorTimings {
            auctioneer_ms: to_ms(wd_total.saturating_sub(wd_bidder_time)),
            mean_bidder_ms: to_ms(wd_bidder_time) / n,
        },
        payment_determination: ActorTimings {
            auctioneer_ms: to_ms(pd_total.saturating_sub(pd_bidder_time)),
            mean_bidder_ms: to_ms(pd_bidder_time) / n,
        },
        signing_ms,
        probes: auctioneer.stats.probes,
        guesses: auctioneer.stats.guesses,
        winners: auctioneer.winners().len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepVariable {
    Goods,
    Bidders,
    MaxNorm,
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub points: Vec<u64>,
    pub reps: usize,
    pub seed: u64,
    pub guess_strategy: GuessStrategy,
    pub paillier_bits: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub x: u64,
    pub winner_det: ActorTimings,
    pub payment_det: ActorTimings,
    pub total_auctioneer_ms: f64,
    pub total_mean_bidder_ms: f64,
    pub probes: u64,
    pub guesses: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub variable: SweepVariable,
    pub strategy: GuessStrategy,
    pub points: Vec<SweepPoint>,
    /// Log-log slopes fitted over the sweep points, per phase. Winner
    /// determination isolates the probe-scan mechanics; the payment phase
    /// additionally depends on whether candidates exist at all (reserve
    /// scans run the domain down to zero), which desk-scale instances flip
    /// between freely.
    pub fit_auctioneer_wd: f64,
    pub fit_mean_bidder_wd: f64,
    pub fit_auctioneer_pd: f64,
    pub fit_mean_bidder_pd: f64,
    pub fit_probes: f64,
    pub fit_guesses: f64,
}

/// Least-squares slope of ln(y) against ln(x).
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let n = logs.len() as f64;
    let mean_x = logs.iter().map(|(x, _)| x).sum::<f64>() / n;
    let mean_y = logs.iter().map(|(_, y)| y).sum::<f64>() / n;
    let cov: f64 = logs.iter().map(|(x, y)| (x - mean_x) * (y - mean_y)).sum();
    let var: f64 = logs.iter().map(|(x, _)| (x - mean_x) * (x - mean_x)).sum();
    cov / var
}

/// Signer group shared by every sweep point: wide enough for 20-good
/// bundle encodings, generated once from a fixed seed.
fn sweep_nr_group() -> &'static crate::blindsig::NRGroupParams {
    static GROUP: OnceLock<crate::blindsig::NRGroupParams> = OnceLock::new();
    GROUP.get_or_init(|| {
        crate::blindsig::NRGroupParams::generate(64, 32, &mut RandomSource::from_seed(0x5eed))
    })
}

/// The deterministic instance family for one sweep point.
///
/// Goods and bidder sweeps use random bundles (density 1/2) with integer
/// bids; the max-norm sweep at e = 0 maps bids directly onto the norm
/// domain. Under `BinarySearchEquality` the max-norm family switches to the
/// strategy's dense-norm precondition: one bidder per norm value 0..=max,
/// all demanding the same good, so every value below the running maximum is
/// a live feasible norm.
pub fn family_instance(
    variable: SweepVariable,
    x: u64,
    strategy: GuessStrategy,
    paillier_bits: u64,
    seed: u64,
) -> (AuctionInstance, ProtocolConfig) {
    let dense = variable == SweepVariable::MaxNorm && strategy == GuessStrategy::BinarySearchEquality;
    if dense {
        let num_goods = 4;
        let bidders = (0..=x)
            .map(|b| crate::mechanism::BidderInput {
                bundle: Bundle::from_indices(num_goods, &[0]).unwrap(),
                bid: num_rational::BigRational::from_integer((b as i64).into()),
                valuation: None,
            })
            .collect();
        let instance = AuctionInstance {
            num_goods,
            bidders,
        };
        let mut config = ProtocolConfig::desk(sweep_nr_group().clone(), 0, x);
        config.paillier_bits = paillier_bits;
        config.guess_strategy = strategy;
        (instance, config)
    } else {
        let (bidders, goods, max_norm) = match variable {
            SweepVariable::Goods => (10, x as usize, 16),
            SweepVariable::Bidders => (x as usize, 8, 16),
            SweepVariable::MaxNorm => (10, 8, x),
        };
        // Norm-targeted bids: the swept variable must not shift the norm
        // distribution (the reference experiments hold the max norm fixed
        // while sweeping goods or bidders). At e = 0 a bid of
        // t * isqrt(|S|) yields the norm t exactly, so norms stay uniform
        // on [1, max_norm] whatever the bundle sizes do.
        use rand::RngCore;
        let mut rng = RandomSource::from_seed(seed.wrapping_mul(0x9e37_79b9).wrapping_add(x));
        let inputs = (0..bidders)
            .map(|_| {
                let mut indices: Vec<usize> = Vec::new();
                while indices.is_empty() {
                    indices = (0..goods).filter(|_| rng.next_u64() % 2 == 0).collect();
                }
                let bundle = Bundle::from_indices(goods, &indices).unwrap();
                let target = 1 + rng.next_u64() % max_norm;
                let bid = target * crate::arith::isqrt(&BigUint::from(bundle.size()))
                    .to_u64_digits()
                    .first()
                    .copied()
                    .unwrap_or(1);
                crate::mechanism::BidderInput {
                    bundle,
                    bid: num_rational::BigRational::from_integer((bid as i64).into()),
                    valuation: None,
                }
            })
            .collect();
        let instance = AuctionInstance {
            num_goods: goods,
            bidders: inputs,
        };
        let mut config = ProtocolConfig::desk(sweep_nr_group().clone(), 0, max_norm);
        config.paillier_bits = paillier_bits;
        config.guess_strategy = strategy;
        (instance, config)
    }
}

fn median(mut values: Vec<f64>) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    values[values.len() / 2]
}

/// Run a full sweep: `reps` timed runs per point, medians reported,
/// log-log exponents fitted on the medians.
pub fn run_sweep(spec: &SweepSpec) -> SweepReport {
    assert!(spec.points.len() >= 4, "sweeps need at least 4 points");
    assert!(spec.reps >= 1);
    let mut points = Vec::with_capacity(spec.points.len());
    for &x in &spec.points {
        let mut wd_auc = Vec::new();
        let mut wd_bid = Vec::new();
        let mut pd_auc = Vec::new();
        let mut pd_bid = Vec::new();
        let mut probes = Vec::new();
        let mut guesses = Vec::new();
        for rep in 0..spec.reps {
            // Fresh instance per repetition so medians smooth out
            // instance-level variation, not just timer noise.
            let (instance, config) = family_instance(
                spec.variable,
                x,
                spec.guess_strategy,
                spec.paillier_bits,
                spec.seed + rep as u64,
            );
            let timings = timed_local_run(&instance, &config, spec.seed + rep as u64)
                .expect("sweep instances validate");
            wd_auc.push(timings.winner_determination.auctioneer_ms);
            wd_bid.push(timings.winner_determination.mean_bidder_ms);
            pd_auc.push(timings.payment_determination.auctioneer_ms);
            pd_bid.push(timings.payment_determination.mean_bidder_ms);
            probes.push(timings.probes as f64);
            guesses.push(timings.guesses as f64);
        }
        points.push(SweepPoint {
            x,
            winner_det: ActorTimings {
                auctioneer_ms: median(wd_auc.clone()),
                mean_bidder_ms: median(wd_bid.clone()),
            },
            payment_det: ActorTimings {
                auctioneer_ms: median(pd_auc.clone()),
                mean_bidder_ms: median(pd_bid.clone()),
            },
            total_auctioneer_ms: median(
                wd_auc.iter().zip(&pd_auc).map(|(a, b)| a + b).collect(),
            ),
            total_mean_bidder_ms: median(
                wd_bid.iter().zip(&pd_bid).map(|(a, b)| a + b).collect(),
            ),
            probes: median(probes.clone()) as u64,
            guesses: median(guesses.clone()) as u64,
        });
    }

    let xs: Vec<f64> = points.iter().map(|p| p.x as f64).collect();
    let fit = |ys: Vec<f64>| log_log_slope(&xs.iter().copied().zip(ys).collect::<Vec<_>>());
    SweepReport {
        variable: spec.variable,
        strategy: spec.guess_strategy,
        fit_auctioneer_wd: fit(points.iter().map(|p| p.winner_det.auctioneer_ms).collect()),
        fit_mean_bidder_wd: fit(points.iter().map(|p| p.winner_det.mean_bidder_ms).collect()),
        fit_auctioneer_pd: fit(points.iter().map(|p| p.payment_det.auctioneer_ms).collect()),
        fit_mean_bidder_pd: fit(points.iter().map(|p| p.payment_det.mean_bidder_ms).collect()),
        fit_probes: fit(points.iter().map(|p| p.probes as f64).collect()),
        fit_guesses: fit(points.iter().map(|p| p.guesses as f64).collect()),
        points,
    }
}
