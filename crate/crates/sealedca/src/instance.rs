//! The auction instance file: a human-editable TOML document holding the
//! goods count, every bidder's bundle/bid/valuation, and the shared
//! protocol configuration. Hand-authored counterexample instances are
//! first-class test fixtures, so the format round-trips byte-identically.

use crate::arith::RandomSource;
use crate::blindsig::{BlindingVariant, NRGroupParams};
use crate::fixedpoint::FixedPointValue;
use crate::mechanism::{AuctionInstance, BidderInput, Bundle, CandidateMode};
use crate::paillier::GeneratorMode;
use crate::protocol::{CandidatePool, GuessStrategy, ProtocolConfig};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::RngCore;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("bidder {bidder}: {problem}")]
    BadBidder { bidder: usize, problem: String },
    #[error("config: {0}")]
    BadConfig(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BidderEntry {
    /// Good indices in [0, goods).
    pub bundle: Vec<usize>,
    /// Exact rational: "3", "7/2", or "3.5".
    pub bid: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub valuation: Option<String>,
}

/// Signer-group selection: a named toy preset or generated parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NrGroupSpec {
    Preset(String),
    Generate { p_bits: u64, q_bits: u64 },
}

impl Default for NrGroupSpec {
    fn default() -> Self {
        NrGroupSpec::Preset("toy-2039".to_string())
    }
}

fn default_paillier_bits() -> u64 {
    512
}

fn default_reserve() -> String {
    "0".to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigBlock {
    pub exponent: u32,
    #[serde(default = "default_reserve")]
    pub reserve_price: String,
    #[serde(default)]
    pub candidate_mode: CandidateMode,
    #[serde(default)]
    pub guess_strategy: GuessStrategy,
    #[serde(default = "default_paillier_bits")]
    pub paillier_bits: u64,
    #[serde(default)]
    pub paillier_g: GeneratorMode,
    #[serde(default)]
    pub nr_group: NrGroupSpec,
    pub norm_domain_max: u64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub goods: usize,
    #[serde(default)]
    pub bidders: Vec<BidderEntry>,
    pub config: ConfigBlock,
}

/// Parse "a", "a/b", or a decimal like "3.25" into an exact rational.
pub fn parse_rational(text: &str) -> Result<BigRational, InstanceError> {
    let bad = |t: &str| InstanceError::Parse(format!("not a rational number: {t:?}"));
    let text = text.trim();
    if let Some((num, den)) = text.split_once('/') {
        let n: BigInt = num.trim().parse().map_err(|_| bad(text))?;
        let d: BigInt = den.trim().parse().map_err(|_| bad(text))?;
        if d.is_zero() {
            return Err(bad(text));
        }
        return Ok(BigRational::new(n, d));
    }
    if let Some((int_part, frac_part)) = text.split_once('.') {
        if frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad(text));
        }
        let negative = int_part.trim_start().starts_with('-');
        let int: BigInt = if int_part.is_empty() || int_part == "-" {
            BigInt::zero()
        } else {
            int_part.parse().map_err(|_| bad(text))?
        };
        let frac: BigInt = frac_part.parse().map_err(|_| bad(text))?;
        let scale = BigInt::from(10u32).pow(frac_part.len() as u32);
        let magnitude = int.abs() * &scale + frac;
        let signed = if negative { -magnitude } else { magnitude };
        return Ok(BigRational::new(signed, scale));
    }
    let n: BigInt = text.parse().map_err(|_| bad(text))?;
    Ok(BigRational::from_integer(n))
}

/// Canonical text form: reduced "p" or "p/q".
pub fn format_rational(value: &BigRational) -> String {
    if value.denom().is_one() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

impl InstanceFile {
    pub fn parse(text: &str) -> Result<Self, InstanceError> {
        toml::from_str(text).map_err(|e| InstanceError::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("instance files serialize")
    }

    pub fn load(path: &Path) -> Result<Self, InstanceError> {
        let text = std::fs::read_to_string(path).map_err(|source| InstanceError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn save(&self, path: &Path) -> Result<(), InstanceError> {
        std::fs::write(path, self.to_toml()).map_err(|source| InstanceError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    /// Resolve into the runnable pieces: the auction instance and the full
    /// protocol configuration (generating signer-group parameters when the
    /// config asks for them).
    pub fn resolve(&self) -> Result<(AuctionInstance, ProtocolConfig), InstanceError> {
        if self.goods < 1 {
            return Err(InstanceError::BadConfig("goods must be >= 1".into()));
        }
        let mut bidders = Vec::with_capacity(self.bidders.len());
        for (i, entry) in self.bidders.iter().enumerate() {
            let bundle = Bundle::from_indices(self.goods, &entry.bundle).map_err(|e| {
                InstanceError::BadBidder {
                    bidder: i,
                    problem: e.to_string(),
                }
            })?;
            let bid = parse_rational(&entry.bid).map_err(|e| InstanceError::BadBidder {
                bidder: i,
                problem: e.to_string(),
            })?;
            if bid.is_negative() {
                return Err(InstanceError::BadBidder {
                    bidder: i,
                    problem: "bids must be non-negative".into(),
                });
            }
            let valuation = entry
                .valuation
                .as_ref()
                .map(|v| parse_rational(v))
                .transpose()
                .map_err(|e| InstanceError::BadBidder {
                    bidder: i,
                    problem: e.to_string(),
                })?;
            bidders.push(BidderInput {
                bundle,
                bid,
                valuation,
            });
        }
        let instance = AuctionInstance {
            num_goods: self.goods,
            bidders,
        };

        let reserve = parse_rational(&self.config.reserve_price)?;
        let reserve_price = FixedPointValue::encode(&reserve, self.config.exponent)
            .map_err(|e| InstanceError::BadConfig(e.to_string()))?;
        let nr_params = match &self.config.nr_group {
            NrGroupSpec::Preset(name) => match name.as_str() {
                "toy-23" => NRGroupParams::toy_23(),
                "toy-2039" => NRGroupParams::toy_2039(),
                other => {
                    return Err(InstanceError::BadConfig(format!(
                        "unknown signer group preset {other:?} (expected toy-23 or toy-2039)"
                    )))
                }
            },
            NrGroupSpec::Generate { p_bits, q_bits } => {
                // Deterministic per-file group generation.
                let mut rng = RandomSource::from_seed(self.config.seed ^ 0x6e72_6772_6f75_70);
                NRGroupParams::generate(*p_bits, *q_bits, &mut rng)
            }
        };
        let config = ProtocolConfig {
            paillier_bits: self.config.paillier_bits,
            paillier_g: self.config.paillier_g,
            nr_params,
            blinding: BlindingVariant::MixNonce,
            exponent: self.config.exponent,
            guess_strategy: self.config.guess_strategy,
            norm_domain_max: self.config.norm_domain_max,
            candidate_mode: self.config.candidate_mode,
            candidate_pool: CandidatePool::AllExceptWinner,
            reserve_price,
        };
        Ok((instance, config))
    }
}

/// Deterministically generate a random instance file: every good joins a
/// bundle with probability `density` (bundles are resampled until
/// non-empty) and bids are uniform integers in [bid_min, bid_max].
pub fn generate(
    bidders: usize,
    goods: usize,
    bid_min: u64,
    bid_max: u64,
    density: f64,
    seed: u64,
    config: ConfigBlock,
) -> InstanceFile {
    assert!(bidders >= 1 && goods >= 1, "need at least one bidder and good");
    assert!(
        density > 0.0 && density <= 1.0,
        "density must be in (0, 1]"
    );
    assert!(bid_min <= bid_max);
    let mut rng = RandomSource::from_seed(seed);
    let threshold = (density * (u64::MAX as f64)) as u64;
    let entries = (0..bidders)
        .map(|_| {
            let mut bundle: Vec<usize> = Vec::new();
            while bundle.is_empty() {
                bundle = (0..goods)
                    .filter(|_| rng.next_u64() <= threshold)
                    .collect();
            }
            let bid = bid_min + rng.next_u64() % (bid_max - bid_min + 1);
            BidderEntry {
                bundle,
                bid: bid.to_string(),
                valuation: None,
            }
        })
        .collect();
    InstanceFile {
        goods,
        bidders: entries,
        config,
    }
}

/// A config block sized for desk-scale experiments.
pub fn desk_config(exponent: u32, norm_domain_max: u64, seed: u64) -> ConfigBlock {
    ConfigBlock {
        exponent,
        reserve_price: "0".to_string(),
        candidate_mode: CandidateMode::default(),
        guess_strategy: GuessStrategy::default(),
        paillier_bits: 512,
        paillier_g: GeneratorMode::default(),
        nr_group: NrGroupSpec::default(),
        norm_domain_max,
        seed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_parsing() {
        assert_eq!(parse_rational("10").unwrap(), BigRational::from_integer(10.into()));
        assert_eq!(
            parse_rational("7/2").unwrap(),
            BigRational::new(7.into(), 2.into())
        );
        assert_eq!(
            parse_rational("3.25").unwrap(),
            BigRational::new(13.into(), 4.into())
        );
        assert_eq!(
            parse_rational("-1.5").unwrap(),
            BigRational::new((-3).into(), 2.into())
        );
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert_eq!(format_rational(&parse_rational("3.5").unwrap()), "7/2");
    }

    #[test]
    fn generate_round_trips_byte_identically() {
        let file = generate(3, 3, 1, 10, 0.5, 42, desk_config(3, 64, 42));
        let text = file.to_toml();
        let parsed = InstanceFile::parse(&text).unwrap();
        assert_eq!(parsed, file);
        assert_eq!(parsed.to_toml(), text);

        // Same seed, same bytes.
        let again = generate(3, 3, 1, 10, 0.5, 42, desk_config(3, 64, 42));
        assert_eq!(again.to_toml(), text);
    }

    #[test]
    fn density_one_fills_every_bundle() {
        let file = generate(4, 5, 1, 3, 1.0, 7, desk_config(3, 64, 7));
        for entry in &file.bidders {
            assert_eq!(entry.bundle, vec![0, 1, 2, 3, 4]);
        }
    }

    #[test]
    fn bad_bundle_index_names_the_bidder() {
        let text = r#"
goods = 2

[[bidders]]
bundle = [0, 5]
bid = "3"

[config]
exponent = 3
norm_domain_max = 64
"#;
        let file = InstanceFile::parse(text).unwrap();
        let err = file.resolve().unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("bidder 0"), "{msg}");
        assert!(msg.contains("out of range"), "{msg}");
    }

    #[test]
    fn resolve_produces_matching_instance() {
        let file = generate(5, 4, 0, 8, 0.6, 11, desk_config(2, 40, 11));
        let (instance, config) = file.resolve().unwrap();
        assert_eq!(instance.num_goods, 4);
        assert_eq!(instance.bidders.len(), 5);
        assert_eq!(config.exponent, 2);
        config.validate_instance(&instance).unwrap();
    }
}
