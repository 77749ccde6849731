//! The escrow contract state machine.
//!
//! ```text
//! Created ──cancel──▶ Cancelled
//!    │
//!   fund
//!    ▼
//! Funded ──accept────────▶ Accepted
//!    ├────reconcile──────▶ ResolvedGarbage | ResolvedBuyerCheat | ResolvedSellerCheat
//!    └────finalize_locked▶ Locked
//! ```
//!
//! Every transition that moves money runs against a scratch copy of the
//! ledger and commits only on success, so a failed call leaves both the
//! world and the contract untouched.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crypto::{decode_binding, CryptoProvider, Digest};
use crate::ledger::{AccountId, LedgerError, LedgerWorld, Money};

/// Immutable parameters fixed at deployment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TradeTerms {
    pub price: Money,
    pub product_hash: Digest,
    pub nonce: u64,
    pub seller_deposit: Money,
    pub buyer_deposit: Money,
    #[serde(with = "crate::hexser")]
    pub seller_pubkey: Vec<u8>,
    #[serde(with = "crate::hexser")]
    pub buyer_pubkey: Vec<u8>,
}

impl TradeTerms {
    /// `E_S + E_B + P_d`, the amount held once funded.
    pub fn funded_total(&self) -> Option<Money> {
        self.seller_deposit
            .checked_add(self.buyer_deposit)?
            .checked_add(self.price)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ContractPhase {
    Created,
    Cancelled,
    Funded,
    Accepted,
    ResolvedSellerCheat,
    ResolvedBuyerCheat,
    ResolvedGarbage,
    Locked,
}

impl ContractPhase {
    pub const ALL: [ContractPhase; 8] = [
        ContractPhase::Created,
        ContractPhase::Cancelled,
        ContractPhase::Funded,
        ContractPhase::Accepted,
        ContractPhase::ResolvedSellerCheat,
        ContractPhase::ResolvedBuyerCheat,
        ContractPhase::ResolvedGarbage,
        ContractPhase::Locked,
    ];

    pub fn successors(self) -> &'static [ContractPhase] {
        use ContractPhase::*;
        match self {
            Created => &[Cancelled, Funded],
            Funded => &[Accepted, ResolvedSellerCheat, ResolvedBuyerCheat, ResolvedGarbage, Locked],
            Cancelled | Accepted | ResolvedSellerCheat | ResolvedBuyerCheat | ResolvedGarbage | Locked => &[],
        }
    }

    pub fn is_terminal(self) -> bool {
        self.successors().is_empty()
    }

    pub fn can_transition_to(self, next: ContractPhase) -> bool {
        self.successors().contains(&next)
    }
}

/// Buyer-submitted evidence. Any bytes are accepted here; validity is
/// decided by [`classify_evidence`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Complaint {
    #[serde(with = "crate::hexser")]
    pub evidence: Vec<u8>,
}

/// Which reconciliation rule fired for a complaint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ReconcileBranch {
    /// Evidence did not open under the seller key or did not decode.
    Garbage,
    /// Authentic evidence from a different contract (replay).
    NonceMismatch,
    /// Authentic evidence for this contract whose product hash is wrong.
    HashMismatch,
    /// Authentic evidence proving a correct delivery.
    Frivolous,
}

impl ReconcileBranch {
    pub fn phase(self) -> ContractPhase {
        match self {
            ReconcileBranch::Garbage => ContractPhase::ResolvedGarbage,
            ReconcileBranch::NonceMismatch | ReconcileBranch::Frivolous => ContractPhase::ResolvedBuyerCheat,
            ReconcileBranch::HashMismatch => ContractPhase::ResolvedSellerCheat,
        }
    }
}

/// Where the funds held by a contract ended up.
///
/// `seller_payout + buyer_payout + burned + gas_charged + locked` always
/// equals what the contract held when it reached its last live phase.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolution {
    pub phase: ContractPhase,
    pub branch: Option<ReconcileBranch>,
    pub seller_payout: Money,
    pub buyer_payout: Money,
    /// Payout minus what the seller paid in.
    #[serde(with = "crate::wide")]
    pub seller_delta: i128,
    /// Payout minus what the buyer paid in.
    #[serde(with = "crate::wide")]
    pub buyer_delta: i128,
    pub burned: Money,
    pub gas_charged: Money,
    pub locked: Money,
}

impl Resolution {
    pub fn accounted_total(&self) -> u128 {
        [self.seller_payout, self.buyer_payout, self.burned, self.gas_charged, self.locked]
            .iter()
            .map(|m| m.0 as u128)
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ContractError {
    #[error("{op} not allowed in phase {phase:?}")]
    WrongPhase { op: &'static str, phase: ContractPhase },
    #[error("{caller} is not authorized to {op}")]
    Unauthorized { op: &'static str, caller: AccountId },
    #[error("{0} deposit must be positive")]
    ZeroDeposit(&'static str),
    #[error("price must be positive")]
    ZeroPrice,
    #[error("gas fee {gas} exceeds the {party} deposit {deposit}")]
    GasExceedsDeposit {
        party: &'static str,
        gas: Money,
        deposit: Money,
    },
    #[error("contract account {0} already exists")]
    AccountTaken(AccountId),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EscrowContract {
    id: AccountId,
    seller: AccountId,
    buyer: Option<AccountId>,
    terms: TradeTerms,
    phase: ContractPhase,
    gas_fee: Money,
    resolution: Option<Resolution>,
}

fn signed(m: Money) -> i128 {
    m.0 as i128
}

/// Decide which reconciliation rule applies to `evidence`. Total: every
/// byte string maps to exactly one branch.
pub fn classify_evidence(provider: &dyn CryptoProvider, terms: &TradeTerms, evidence: &[u8]) -> ReconcileBranch {
    let Ok(opened) = provider.open_signed(&terms.seller_pubkey, evidence) else {
        return ReconcileBranch::Garbage;
    };
    let Ok(binding) = decode_binding(&opened) else {
        return ReconcileBranch::Garbage;
    };
    if binding.contract_nonce != terms.nonce {
        return ReconcileBranch::NonceMismatch;
    }
    if provider.hash(&binding.product_bytes) != terms.product_hash {
        ReconcileBranch::HashMismatch
    } else {
        ReconcileBranch::Frivolous
    }
}

impl EscrowContract {
    /// Publish a contract and escrow the seller deposit `E_S`.
    ///
    /// `gas_fee` is charged once per reconciliation and must fit in each
    /// deposit it may be taken from.
    pub fn deploy(
        world: &mut LedgerWorld,
        seller: &AccountId,
        contract_id: AccountId,
        terms: TradeTerms,
        gas_fee: Money,
    ) -> Result<Self, ContractError> {
        if terms.price.is_zero() {
            return Err(ContractError::ZeroPrice);
        }
        if terms.seller_deposit.is_zero() {
            return Err(ContractError::ZeroDeposit("seller"));
        }
        if gas_fee > terms.seller_deposit {
            return Err(ContractError::GasExceedsDeposit {
                party: "seller",
                gas: gas_fee,
                deposit: terms.seller_deposit,
            });
        }
        if terms.funded_total().is_none() {
            return Err(LedgerError::Overflow.into());
        }
        if world.has_account(&contract_id) {
            return Err(ContractError::AccountTaken(contract_id));
        }
        let mut next = world.clone();
        next.open_account(contract_id.clone())?;
        next.transfer(seller, &contract_id, terms.seller_deposit)?;
        *world = next;
        Ok(EscrowContract {
            id: contract_id,
            seller: seller.clone(),
            buyer: None,
            terms,
            phase: ContractPhase::Created,
            gas_fee,
            resolution: None,
        })
    }

    pub fn id(&self) -> &AccountId {
        &self.id
    }

    pub fn seller(&self) -> &AccountId {
        &self.seller
    }

    pub fn buyer(&self) -> Option<&AccountId> {
        self.buyer.as_ref()
    }

    pub fn terms(&self) -> &TradeTerms {
        &self.terms
    }

    pub fn phase(&self) -> ContractPhase {
        self.phase
    }

    pub fn gas_fee(&self) -> Money {
        self.gas_fee
    }

    pub fn resolution(&self) -> Option<&Resolution> {
        self.resolution.as_ref()
    }

    fn require_phase(&self, op: &'static str, phase: ContractPhase) -> Result<(), ContractError> {
        if self.phase != phase {
            return Err(ContractError::WrongPhase { op, phase: self.phase });
        }
        Ok(())
    }

    fn require_buyer(&self, op: &'static str, caller: &AccountId) -> Result<&AccountId, ContractError> {
        match &self.buyer {
            Some(b) if b == caller => Ok(b),
            _ => Err(ContractError::Unauthorized { op, caller: caller.clone() }),
        }
    }

    fn settle(&mut self, resolution: Resolution) -> Resolution {
        debug_assert!(self.phase.can_transition_to(resolution.phase));
        self.phase = resolution.phase;
        self.resolution = Some(resolution.clone());
        resolution
    }

    /// Seller withdraws before any buyer has funded; `E_S` is refunded.
    pub fn cancel(&mut self, world: &mut LedgerWorld, caller: &AccountId) -> Result<Resolution, ContractError> {
        self.require_phase("cancel", ContractPhase::Created)?;
        if caller != &self.seller {
            return Err(ContractError::Unauthorized { op: "cancel", caller: caller.clone() });
        }
        world.transfer(&self.id, &self.seller, self.terms.seller_deposit)?;
        Ok(self.settle(Resolution {
            phase: ContractPhase::Cancelled,
            branch: None,
            seller_payout: self.terms.seller_deposit,
            buyer_payout: Money::ZERO,
            seller_delta: 0,
            buyer_delta: 0,
            burned: Money::ZERO,
            gas_charged: Money::ZERO,
            locked: Money::ZERO,
        }))
    }

    /// Buyer pays `P_d + E_B` into the contract.
    pub fn fund(&mut self, world: &mut LedgerWorld, buyer: &AccountId) -> Result<(), ContractError> {
        self.require_phase("fund", ContractPhase::Created)?;
        if self.terms.buyer_deposit.is_zero() {
            return Err(ContractError::ZeroDeposit("buyer"));
        }
        if self.gas_fee > self.terms.buyer_deposit {
            return Err(ContractError::GasExceedsDeposit {
                party: "buyer",
                gas: self.gas_fee,
                deposit: self.terms.buyer_deposit,
            });
        }
        if buyer == &self.seller {
            return Err(ContractError::Unauthorized { op: "fund", caller: buyer.clone() });
        }
        let amount = self
            .terms
            .price
            .checked_add(self.terms.buyer_deposit)
            .ok_or(LedgerError::Overflow)?;
        world.transfer(buyer, &self.id, amount)?;
        self.buyer = Some(buyer.clone());
        self.phase = ContractPhase::Funded;
        Ok(())
    }

    /// Buyer accepts delivery: seller receives `P_d + E_S`, buyer `E_B`.
    pub fn accept(&mut self, world: &mut LedgerWorld, caller: &AccountId) -> Result<Resolution, ContractError> {
        self.require_phase("accept", ContractPhase::Funded)?;
        let buyer = self.require_buyer("accept", caller)?.clone();
        let t = &self.terms;
        let seller_payout = t.price.checked_add(t.seller_deposit).ok_or(LedgerError::Overflow)?;
        let mut next = world.clone();
        next.transfer(&self.id, &self.seller, seller_payout)?;
        next.transfer(&self.id, &buyer, t.buyer_deposit)?;
        *world = next;
        let resolution = self.outcome(ContractPhase::Accepted, None, seller_payout, t.buyer_deposit, Money::ZERO, Money::ZERO, Money::ZERO);
        Ok(self.settle(resolution))
    }

    /// Adjudicate a complaint using only the seller key, nonce and product hash.
    pub fn reconcile(
        &mut self,
        world: &mut LedgerWorld,
        caller: &AccountId,
        complaint: &Complaint,
        provider: &dyn CryptoProvider,
    ) -> Result<Resolution, ContractError> {
        self.require_phase("reconcile", ContractPhase::Funded)?;
        let buyer = self.require_buyer("reconcile", caller)?.clone();
        let branch = classify_evidence(provider, &self.terms, &complaint.evidence);
        let t = self.terms.clone();
        let gas = self.gas_fee;
        let mut next = world.clone();
        let resolution = match branch {
            ReconcileBranch::Garbage => {
                // gas comes out of the complainant's deposit, everything else burns
                let burned = t.funded_total().ok_or(LedgerError::Overflow)?.checked_sub(gas).ok_or(LedgerError::Overflow)?;
                next.charge_gas(&self.id, gas)?;
                next.burn(&self.id, burned)?;
                self.outcome(ContractPhase::ResolvedGarbage, Some(branch), Money::ZERO, Money::ZERO, burned, gas, Money::ZERO)
            }
            ReconcileBranch::NonceMismatch | ReconcileBranch::Frivolous => {
                let burned = t.buyer_deposit.checked_sub(gas).ok_or(LedgerError::Overflow)?;
                let seller_payout = t.price.checked_add(t.seller_deposit).ok_or(LedgerError::Overflow)?;
                next.charge_gas(&self.id, gas)?;
                next.burn(&self.id, burned)?;
                next.transfer(&self.id, &self.seller, seller_payout)?;
                self.outcome(ContractPhase::ResolvedBuyerCheat, Some(branch), seller_payout, Money::ZERO, burned, gas, Money::ZERO)
            }
            ReconcileBranch::HashMismatch => {
                let burned = t.seller_deposit.checked_sub(gas).ok_or(LedgerError::Overflow)?;
                let buyer_payout = t.price.checked_add(t.buyer_deposit).ok_or(LedgerError::Overflow)?;
                next.charge_gas(&self.id, gas)?;
                next.burn(&self.id, burned)?;
                next.transfer(&self.id, &buyer, buyer_payout)?;
                self.outcome(ContractPhase::ResolvedSellerCheat, Some(branch), Money::ZERO, buyer_payout, burned, gas, Money::ZERO)
            }
        };
        *world = next;
        Ok(self.settle(resolution))
    }

    /// Close a funded contract at the simulation horizon with no buyer
    /// response. Funds stay on the contract account forever.
    pub fn finalize_locked(&mut self, world: &LedgerWorld) -> Result<Resolution, ContractError> {
        self.require_phase("finalize_locked", ContractPhase::Funded)?;
        let locked = world.balance(&self.id)?;
        let resolution = self.outcome(ContractPhase::Locked, None, Money::ZERO, Money::ZERO, Money::ZERO, Money::ZERO, locked);
        Ok(self.settle(resolution))
    }

    #[allow(clippy::too_many_arguments)]
    fn outcome(
        &self,
        phase: ContractPhase,
        branch: Option<ReconcileBranch>,
        seller_payout: Money,
        buyer_payout: Money,
        burned: Money,
        gas_charged: Money,
        locked: Money,
    ) -> Resolution {
        let t = &self.terms;
        Resolution {
            phase,
            branch,
            seller_payout,
            buyer_payout,
            seller_delta: signed(seller_payout) - signed(t.seller_deposit),
            buyer_delta: signed(buyer_payout) - signed(t.price) - signed(t.buyer_deposit),
            burned,
            gas_charged,
            locked,
        }
    }
}
