//! Simulated value system: party balances, contract-held funds, a burn sink
//! and a gas sink. Money is an exact unsigned integer and every operation is
//! checked and atomic.
//!
//! Conservation holds after every successful operation:
//! `minted = Σ balances + burned + gas`. Funds locked on a contract account
//! are part of `Σ balances`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Minor currency units.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Money(pub u64);

impl Money {
    pub const ZERO: Money = Money(0);

    pub fn checked_add(self, rhs: Money) -> Option<Money> {
        self.0.checked_add(rhs.0).map(Money)
    }

    pub fn checked_sub(self, rhs: Money) -> Option<Money> {
        self.0.checked_sub(rhs.0).map(Money)
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl From<u64> for Money {
    fn from(v: u64) -> Self {
        Money(v)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AccountId(pub String);

impl AccountId {
    pub fn new(tag: impl Into<String>) -> Self {
        AccountId(tag.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for AccountId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for AccountId {
    fn from(s: &str) -> Self {
        AccountId(s.to_owned())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LedgerError {
    #[error("unknown account {0}")]
    UnknownAccount(AccountId),
    #[error("account {0} already exists")]
    DuplicateAccount(AccountId),
    #[error("account {account} holds {available}, needs {requested}")]
    InsufficientFunds {
        account: AccountId,
        available: Money,
        requested: Money,
    },
    #[error("arithmetic overflow")]
    Overflow,
}

/// All balances plus the two sinks. Serializes to
/// `{"balances": {...}, "burned": n, "gas": n, "minted": n}`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerWorld {
    balances: BTreeMap<AccountId, Money>,
    #[serde(rename = "burned")]
    burned_total: Money,
    #[serde(rename = "gas")]
    gas_total: Money,
    #[serde(rename = "minted")]
    minted_total: Money,
}

impl LedgerWorld {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn open_account(&mut self, id: impl Into<AccountId>) -> Result<(), LedgerError> {
        let id = id.into();
        if self.balances.contains_key(&id) {
            return Err(LedgerError::DuplicateAccount(id));
        }
        self.balances.insert(id, Money::ZERO);
        Ok(())
    }

    pub fn has_account(&self, id: &AccountId) -> bool {
        self.balances.contains_key(id)
    }

    pub fn balance(&self, id: &AccountId) -> Result<Money, LedgerError> {
        self.balances
            .get(id)
            .copied()
            .ok_or_else(|| LedgerError::UnknownAccount(id.clone()))
    }

    pub fn balances(&self) -> &BTreeMap<AccountId, Money> {
        &self.balances
    }

    pub fn burned_total(&self) -> Money {
        self.burned_total
    }

    pub fn gas_total(&self) -> Money {
        self.gas_total
    }

    pub fn minted_total(&self) -> Money {
        self.minted_total
    }

    /// Exact check of `minted = Σ balances + burned + gas`.
    pub fn is_conserved(&self) -> bool {
        let held: u128 = self.balances.values().map(|m| m.0 as u128).sum();
        let total = held + self.burned_total.0 as u128 + self.gas_total.0 as u128;
        total == self.minted_total.0 as u128
    }

    pub fn mint(&mut self, account: &AccountId, amount: Money) -> Result<(), LedgerError> {
        let current = self.balance(account)?;
        let balance = current.checked_add(amount).ok_or(LedgerError::Overflow)?;
        let minted = self.minted_total.checked_add(amount).ok_or(LedgerError::Overflow)?;
        self.balances.insert(account.clone(), balance);
        self.minted_total = minted;
        Ok(())
    }

    pub fn transfer(&mut self, from: &AccountId, to: &AccountId, amount: Money) -> Result<(), LedgerError> {
        let from_balance = self.debitable(from, amount)?;
        let to_balance = self.balance(to)?;
        if from == to {
            return Ok(());
        }
        let credited = to_balance.checked_add(amount).ok_or(LedgerError::Overflow)?;
        self.balances.insert(from.clone(), Money(from_balance.0 - amount.0));
        self.balances.insert(to.clone(), credited);
        Ok(())
    }

    pub fn burn(&mut self, from: &AccountId, amount: Money) -> Result<(), LedgerError> {
        let from_balance = self.debitable(from, amount)?;
        let burned = self.burned_total.checked_add(amount).ok_or(LedgerError::Overflow)?;
        self.balances.insert(from.clone(), Money(from_balance.0 - amount.0));
        self.burned_total = burned;
        Ok(())
    }

    pub fn charge_gas(&mut self, from: &AccountId, amount: Money) -> Result<(), LedgerError> {
        let from_balance = self.debitable(from, amount)?;
        let gas = self.gas_total.checked_add(amount).ok_or(LedgerError::Overflow)?;
        self.balances.insert(from.clone(), Money(from_balance.0 - amount.0));
        self.gas_total = gas;
        Ok(())
    }

    fn debitable(&self, from: &AccountId, amount: Money) -> Result<Money, LedgerError> {
        let available = self.balance(from)?;
        if available < amount {
            return Err(LedgerError::InsufficientFunds {
                account: from.clone(),
                available,
                requested: amount,
            });
        }
        Ok(available)
    }
}
