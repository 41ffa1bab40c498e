//! Privacy-preserving sealed-bid combinatorial auction.
//!
//! The crate is organized around two parallel implementations of the same
//! auction semantics:
//!
//! * [`mechanism`] — the plaintext greedy winner determination and
//!   candidate-based payment rule, used as the ground-truth oracle.
//! * [`protocol`] — the encrypted protocol: the auctioneer learns winners and
//!   payments through Paillier-encrypted norm probes, and winners verify
//!   their payments against blind signatures issued by a trusted signer.
//!
//! [`harness`] wires actors together over an in-process simulated network,
//! records full transcripts, audits them for structural privacy leaks, and
//! compares protocol output against the oracle bit for bit.

pub mod arith;
pub mod blindsig;
pub mod fixedpoint;
pub mod harness;
pub mod instance;
pub mod mechanism;
pub mod paillier;
pub mod protocol;

pub use arith::RandomSource;
pub use fixedpoint::FixedPointValue;
