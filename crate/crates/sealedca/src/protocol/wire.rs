//! Typed protocol messages and their byte-level wire form.
//!
//! Every message serializes as a one-byte type tag followed by its fields.
//! Integers are big-endian byte strings with a u32 big-endian length prefix;
//! bit vectors are a length prefix followed by one byte per bit. The same
//! encoding is reused by the transcript audit as the canonical byte form of
//! secret values.

use crate::blindsig::NRSignature;
use crate::paillier::Ciphertext;
use crate::protocol::SessionId;
use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WireError {
    #[error("message truncated")]
    Truncated,
    #[error("unknown message tag {0}")]
    UnknownTag(u8),
    #[error("trailing bytes after message body")]
    TrailingBytes,
    #[error("invalid field value")]
    InvalidField,
}

/// Endpoint address inside the simulated network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ActorId {
    Auctioneer,
    Signer,
    Bidder(u32),
    /// Key publication goes to everyone.
    Broadcast,
}

impl std::fmt::Display for ActorId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ActorId::Auctioneer => write!(f, "Auc"),
            ActorId::Signer => write!(f, "T"),
            ActorId::Bidder(sid) => write!(f, "B{sid}"),
            ActorId::Broadcast => write!(f, "*"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MessageTag {
    PublishKeys,
    BlindRound1,
    BlindRound2,
    BlindRound3,
    EncAlloc,
    ProbeGuess,
    ProbeResponse,
    DeclareWinner,
    WinnerReveal,
    DeclareCandidate,
    CandidateReveal,
    PaymentNotice,
    VerifyVerdict,
}

impl MessageTag {
    pub fn name(&self) -> &'static str {
        match self {
            MessageTag::PublishKeys => "PublishKeys",
            MessageTag::BlindRound1 => "BlindRound1",
            MessageTag::BlindRound2 => "BlindRound2",
            MessageTag::BlindRound3 => "BlindRound3",
            MessageTag::EncAlloc => "EncAlloc",
            MessageTag::ProbeGuess => "ProbeGuess",
            MessageTag::ProbeResponse => "ProbeResponse",
            MessageTag::DeclareWinner => "DeclareWinner",
            MessageTag::WinnerReveal => "WinnerReveal",
            MessageTag::DeclareCandidate => "DeclareCandidate",
            MessageTag::CandidateReveal => "CandidateReveal",
            MessageTag::PaymentNotice => "PaymentNotice",
            MessageTag::VerifyVerdict => "VerifyVerdict",
        }
    }

    fn byte(&self) -> u8 {
        *self as u8 + 1
    }

    fn from_byte(b: u8) -> Result<Self, WireError> {
        use MessageTag::*;
        Ok(match b {
            1 => PublishKeys,
            2 => BlindRound1,
            3 => BlindRound2,
            4 => BlindRound3,
            5 => EncAlloc,
            6 => ProbeGuess,
            7 => ProbeResponse,
            8 => DeclareWinner,
            9 => WinnerReveal,
            10 => DeclareCandidate,
            11 => CandidateReveal,
            12 => PaymentNotice,
            13 => VerifyVerdict,
            other => return Err(WireError::UnknownTag(other)),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Message {
    PublishKeys {
        paillier_n: BigUint,
        paillier_g: BigUint,
        nr_p: BigUint,
        nr_q: BigUint,
        nr_g: BigUint,
        nr_public: BigUint,
    },
    BlindRound1 {
        commitment: BigUint,
    },
    BlindRound2 {
        blinded: BigUint,
    },
    BlindRound3 {
        response: BigUint,
    },
    EncAlloc {
        cts: Vec<Ciphertext>,
    },
    ProbeGuess {
        ct: Ciphertext,
    },
    ProbeResponse {
        ct: Ciphertext,
    },
    DeclareWinner {
        session: SessionId,
        norm_guess: u64,
    },
    WinnerReveal {
        norm_raw: u64,
        bundle_bits: Vec<bool>,
        sig_norm: NRSignature,
        sig_bundle: NRSignature,
    },
    DeclareCandidate {
        session: SessionId,
        norm_guess: u64,
    },
    CandidateReveal {
        norm_raw: u64,
        sig_norm: NRSignature,
    },
    PaymentNotice {
        payment_raw: BigUint,
        sig_norm: Option<NRSignature>,
        reserve: bool,
    },
    VerifyVerdict {
        accept: bool,
    },
}

/// Canonical wire form of an integer: u32 big-endian length, then
/// big-endian magnitude bytes.
pub fn encode_uint(v: &BigUint) -> Vec<u8> {
    let bytes = v.to_bytes_be();
    let mut out = Vec::with_capacity(4 + bytes.len());
    out.extend_from_slice(&(bytes.len() as u32).to_be_bytes());
    out.extend_from_slice(&bytes);
    out
}

/// Canonical wire form of a bit vector: u32 big-endian count, then one byte
/// per bit.
pub fn encode_bits(bits: &[bool]) -> Vec<u8> {
    let mut out = Vec::with_capacity(4 + bits.len());
    out.extend_from_slice(&(bits.len() as u32).to_be_bytes());
    out.extend(bits.iter().map(|&b| b as u8));
    out
}

fn put_uint(buf: &mut Vec<u8>, v: &BigUint) {
    buf.extend_from_slice(&encode_uint(v));
}

fn put_u64(buf: &mut Vec<u8>, v: u64) {
    put_uint(buf, &BigUint::from(v));
}

fn put_ct(buf: &mut Vec<u8>, ct: &Ciphertext) {
    put_uint(buf, ct.value());
}

fn put_sig(buf: &mut Vec<u8>, sig: &NRSignature) {
    put_uint(buf, &sig.r);
    put_uint(buf, &sig.s);
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], WireError> {
        if self.pos + n > self.bytes.len() {
            return Err(WireError::Truncated);
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u8(&mut self) -> Result<u8, WireError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, WireError> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn uint(&mut self) -> Result<BigUint, WireError> {
        let len = self.u32()? as usize;
        Ok(BigUint::from_bytes_be(self.take(len)?))
    }

    fn u64(&mut self) -> Result<u64, WireError> {
        let v = self.uint()?;
        let digits = v.to_u64_digits();
        match digits.len() {
            0 => Ok(0),
            1 => Ok(digits[0]),
            _ => Err(WireError::InvalidField),
        }
    }

    fn bits(&mut self) -> Result<Vec<bool>, WireError> {
        let len = self.u32()? as usize;
        self.take(len)?
            .iter()
            .map(|&b| match b {
                0 => Ok(false),
                1 => Ok(true),
                _ => Err(WireError::InvalidField),
            })
            .collect()
    }

    fn ct(&mut self) -> Result<Ciphertext, WireError> {
        let len = self.u32()? as usize;
        Ok(Ciphertext::from_bytes_be(self.take(len)?))
    }

    fn sig(&mut self) -> Result<NRSignature, WireError> {
        Ok(NRSignature {
            r: self.uint()?,
            s: self.uint()?,
        })
    }

    fn bool(&mut self) -> Result<bool, WireError> {
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            _ => Err(WireError::InvalidField),
        }
    }

    fn done(&self) -> Result<(), WireError> {
        if self.pos != self.bytes.len() {
            return Err(WireError::TrailingBytes);
        }
        Ok(())
    }
}

impl Message {
    pub fn tag(&self) -> MessageTag {
        match self {
            Message::PublishKeys { .. } => MessageTag::PublishKeys,
            Message::BlindRound1 { .. } => MessageTag::BlindRound1,
            Message::BlindRound2 { .. } => MessageTag::BlindRound2,
            Message::BlindRound3 { .. } => MessageTag::BlindRound3,
            Message::EncAlloc { .. } => MessageTag::EncAlloc,
            Message::ProbeGuess { .. } => MessageTag::ProbeGuess,
            Message::ProbeResponse { .. } => MessageTag::ProbeResponse,
            Message::DeclareWinner { .. } => MessageTag::DeclareWinner,
            Message::WinnerReveal { .. } => MessageTag::WinnerReveal,
            Message::DeclareCandidate { .. } => MessageTag::DeclareCandidate,
            Message::CandidateReveal { .. } => MessageTag::CandidateReveal,
            Message::PaymentNotice { .. } => MessageTag::PaymentNotice,
            Message::VerifyVerdict { .. } => MessageTag::VerifyVerdict,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = vec![self.tag().byte()];
        match self {
            Message::PublishKeys {
                paillier_n,
                paillier_g,
                nr_p,
                nr_q,
                nr_g,
                nr_public,
            } => {
                put_uint(&mut buf, paillier_n);
                put_uint(&mut buf, paillier_g);
                put_uint(&mut buf, nr_p);
                put_uint(&mut buf, nr_q);
                put_uint(&mut buf, nr_g);
                put_uint(&mut buf, nr_public);
            }
            Message::BlindRound1 { commitment } => put_uint(&mut buf, commitment),
            Message::BlindRound2 { blinded } => put_uint(&mut buf, blinded),
            Message::BlindRound3 { response } => put_uint(&mut buf, response),
            Message::EncAlloc { cts } => {
                buf.extend_from_slice(&(cts.len() as u32).to_be_bytes());
                for ct in cts {
                    put_ct(&mut buf, ct);
                }
            }
            Message::ProbeGuess { ct } => put_ct(&mut buf, ct),
            Message::ProbeResponse { ct } => put_ct(&mut buf, ct),
            Message::DeclareWinner {
                session,
                norm_guess,
            } => {
                put_u64(&mut buf, session.0 as u64);
                put_u64(&mut buf, *norm_guess);
            }
            Message::WinnerReveal {
                norm_raw,
                bundle_bits,
                sig_norm,
                sig_bundle,
            } => {
                put_u64(&mut buf, *norm_raw);
                buf.extend_from_slice(&encode_bits(bundle_bits));
                put_sig(&mut buf, sig_norm);
                put_sig(&mut buf, sig_bundle);
            }
            Message::DeclareCandidate {
                session,
                norm_guess,
            } => {
                put_u64(&mut buf, session.0 as u64);
                put_u64(&mut buf, *norm_guess);
            }
            Message::CandidateReveal { norm_raw, sig_norm } => {
                put_u64(&mut buf, *norm_raw);
                put_sig(&mut buf, sig_norm);
            }
            Message::PaymentNotice {
                payment_raw,
                sig_norm,
                reserve,
            } => {
                put_uint(&mut buf, payment_raw);
                match sig_norm {
                    Some(sig) => {
                        buf.push(1);
                        put_sig(&mut buf, sig);
                    }
                    None => buf.push(0),
                }
                buf.push(*reserve as u8);
            }
            Message::VerifyVerdict { accept } => buf.push(*accept as u8),
        }
        buf
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, WireError> {
        let mut r = Reader { bytes, pos: 0 };
        let tag = MessageTag::from_byte(r.u8()?)?;
        let msg = match tag {
            MessageTag::PublishKeys => Message::PublishKeys {
                paillier_n: r.uint()?,
                paillier_g: r.uint()?,
                nr_p: r.uint()?,
                nr_q: r.uint()?,
                nr_g: r.uint()?,
                nr_public: r.uint()?,
            },
            MessageTag::BlindRound1 => Message::BlindRound1 {
                commitment: r.uint()?,
            },
            MessageTag::BlindRound2 => Message::BlindRound2 { blinded: r.uint()? },
            MessageTag::BlindRound3 => Message::BlindRound3 { response: r.uint()? },
            MessageTag::EncAlloc => {
                let count = r.u32()? as usize;
                let mut cts = Vec::with_capacity(count);
                for _ in 0..count {
                    cts.push(r.ct()?);
                }
                Message::EncAlloc { cts }
            }
            MessageTag::ProbeGuess => Message::ProbeGuess { ct: r.ct()? },
            MessageTag::ProbeResponse => Message::ProbeResponse { ct: r.ct()? },
            MessageTag::DeclareWinner => Message::DeclareWinner {
                session: SessionId(r.u64()? as u32),
                norm_guess: r.u64()?,
            },
            MessageTag::WinnerReveal => Message::WinnerReveal {
                norm_raw: r.u64()?,
                bundle_bits: r.bits()?,
                sig_norm: r.sig()?,
                sig_bundle: r.sig()?,
            },
            MessageTag::DeclareCandidate => Message::DeclareCandidate {
                session: SessionId(r.u64()? as u32),
                norm_guess: r.u64()?,
            },
            MessageTag::CandidateReveal => Message::CandidateReveal {
                norm_raw: r.u64()?,
                sig_norm: r.sig()?,
            },
            MessageTag::PaymentNotice => {
                let payment_raw = r.uint()?;
                let sig_norm = if r.bool()? { Some(r.sig()?) } else { None };
                Message::PaymentNotice {
                    payment_raw,
                    sig_norm,
                    reserve: r.bool()?,
                }
            }
            MessageTag::VerifyVerdict => Message::VerifyVerdict { accept: r.bool()? },
        };
        r.done()?;
        Ok(msg)
    }
}
