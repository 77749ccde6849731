//! Dual-deposit escrow trade protocol.
//!
//! A seller escrows a deposit, a buyer escrows the price plus its own
//! deposit, the product travels off-chain under two envelopes, and the
//! contract settles any complaint on its own using the seller's public key,
//! the contract nonce and the known product hash.
//!
//! Modules, bottom up:
//!
//! - [`crypto`]: hash, signed envelope, sealed envelope, binding codec
//! - [`ledger`]: exact-integer balances with burn and gas sinks
//! - [`contract`]: the escrow state machine and reconciliation rules
//! - [`actors`]: seller moves, buyer policies, end-to-end trades
//! - [`game`]: the extensive-form game and its equilibria
//! - [`harness`]: run / matrix / analyze / sweep commands behind the CLI

pub mod actors;
pub mod contract;
pub mod crypto;
pub mod game;
pub mod harness;
mod hexser;
mod wide;
pub mod ledger;
pub mod transcript;

pub use actors::{run_trade, BuyerPolicy, SellerAction, TradeConfig, TradeOutcome};
pub use contract::{ContractPhase, EscrowContract, Resolution, TradeTerms};
pub use game::{backward_induction, build_tree, enumerate_spne, GameParams, PayoffPair, SpneResult, TieBreak};
pub use ledger::{AccountId, LedgerWorld, Money};
