//! Transcript records: an ordered, replayable log of one trade.

use serde::{Deserialize, Serialize};

use crate::actors::{BuyerPolicy, ObservationOutcome, SellerAction};
use crate::contract::{ContractPhase, Resolution};
use crate::crypto::Digest;
use crate::game::{GameParams, PayoffPair};
use crate::ledger::{LedgerWorld, Money};

pub const TOOL_NAME: &str = "escrow";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Endow {
        ledger: LedgerWorld,
    },
    /// A foreign valid envelope the buyer holds from an earlier contract.
    Provision {
        nonce: u64,
        #[serde(with = "crate::hexser")]
        envelope: Vec<u8>,
    },
    Deploy {
        contract: String,
        nonce: u64,
        price: Money,
        product_hash: Digest,
        seller_deposit: Money,
        buyer_deposit: Money,
        gas_fee: Money,
        phase: ContractPhase,
        ledger: LedgerWorld,
    },
    Cancel {
        phase: ContractPhase,
        refunded: Money,
        ledger: LedgerWorld,
    },
    Fund {
        phase: ContractPhase,
        amount: Money,
        ledger: LedgerWorld,
    },
    /// Off-chain; the contract never sees this message.
    Deliver {
        action: SellerAction,
        #[serde(with = "crate::hexser")]
        message: Vec<u8>,
    },
    Observe {
        outcome: ObservationOutcome,
    },
    Accept {
        policy: BuyerPolicy,
    },
    Complaint {
        policy: BuyerPolicy,
        #[serde(with = "crate::hexser")]
        evidence: Vec<u8>,
    },
    Silence {
        policy: BuyerPolicy,
    },
    Resolution {
        resolution: Resolution,
        ledger: LedgerWorld,
    },
}

impl Event {
    pub fn ledger(&self) -> Option<&LedgerWorld> {
        match self {
            Event::Endow { ledger }
            | Event::Deploy { ledger, .. }
            | Event::Cancel { ledger, .. }
            | Event::Fund { ledger, .. }
            | Event::Resolution { ledger, .. } => Some(ledger),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptHeader {
    pub tool: String,
    pub version: String,
    pub hash_algorithm: String,
    pub signature_scheme: String,
    pub seal_scheme: String,
    pub seed: u64,
    pub params: GameParams,
    pub gas: Money,
    pub seller_action: SellerAction,
    pub buyer_policy: BuyerPolicy,
    pub allow_value_le_price: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub header: TranscriptHeader,
    pub events: Vec<Event>,
    pub payoffs: PayoffPair,
}

impl Transcript {
    /// Canonical encoding. Byte-identical for identical runs.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("transcript is always serializable");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }
}
