//! The trusted signer: blindly signs each bidder's norm and bundle encoding
//! before the auction starts, then plays no further part.

use crate::arith::RandomSource;
use crate::blindsig::{self, NRGroupParams, NRKeyPair, SignerSession};
use crate::protocol::bidder::BlindTarget;
use crate::protocol::{ProtocolError, SessionId};
use num_bigint::BigUint;
use std::collections::BTreeMap;

pub struct SignerActor {
    params: NRGroupParams,
    keypair: NRKeyPair,
    rng: RandomSource,
    open: BTreeMap<(SessionId, BlindTarget), SignerSession>,
}

impl SignerActor {
    pub fn new(params: NRGroupParams, rng: RandomSource) -> Self {
        let mut rng = rng;
        let keypair = NRKeyPair::generate(&params, &mut rng);
        Self {
            params,
            keypair,
            rng,
            open: BTreeMap::new(),
        }
    }

    pub fn public(&self) -> &BigUint {
        self.keypair.public()
    }

    pub fn params(&self) -> &NRGroupParams {
        &self.params
    }

    /// Round 1: open a session for one bidder/value pair and return the
    /// nonce commitment. Sessions for distinct pairs may stay open
    /// concurrently.
    pub fn round1(&mut self, key: (SessionId, BlindTarget)) -> BigUint {
        let (session, commitment) = blindsig::signer_round1(&self.params, &mut self.rng);
        self.open.insert(key, session);
        commitment
    }

    /// Round 3: consume the session and answer the blinded message.
    pub fn round2(
        &mut self,
        key: (SessionId, BlindTarget),
        blinded: &BigUint,
    ) -> Result<BigUint, ProtocolError> {
        let session = self
            .open
            .remove(&key)
            .expect("no open signing session for this bidder/value");
        Ok(blindsig::signer_round2(
            &self.params,
            &self.keypair,
            &session,
            blinded,
        )?)
    }
}
