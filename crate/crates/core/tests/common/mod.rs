//! Test-only oracles, written from the contract rules rather than the game module.

#![allow(dead_code)]

use escrow_core::actors::{BuyerPolicy, SellerAction};
use escrow_core::contract::{ContractPhase, EscrowContract, TradeTerms};
use escrow_core::crypto::{self, KeyPair};
use escrow_core::ledger::{AccountId, LedgerWorld, Money};
use escrow_core::GameParams;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// What the contract ends in for a given pair of behaviours.
pub fn oracle_phase(seller: SellerAction, buyer: BuyerPolicy) -> ContractPhase {
    use BuyerPolicy as B;
    use ContractPhase as C;
    use SellerAction as S;
    match (seller, buyer) {
        (_, B::Silent) => C::Locked,
        (_, B::Garbage) => C::ResolvedGarbage,
        (_, B::Replay) => C::ResolvedBuyerCheat,
        (S::Honest, B::Honest) => C::Accepted,
        (S::Honest, B::Frivolous) => C::ResolvedBuyerCheat,
        (S::Falsified, B::Honest | B::Frivolous) => C::ResolvedSellerCheat,
        (S::Garbage, B::Honest | B::Frivolous) => C::ResolvedGarbage,
    }
}

/// Net (seller, buyer) utility with zero gas, built from who ends up holding
/// which funds, plus the buyer's value for the real product.
pub fn oracle_payoff(p: &GameParams, seller: SellerAction, buyer: BuyerPolicy) -> (i128, i128) {
    let (price, value, es, eb) = (p.price as i128, p.value as i128, p.seller_deposit as i128, p.buyer_deposit as i128);
    let (s, b) = match oracle_phase(seller, buyer) {
        ContractPhase::Accepted => (price, -price),
        ContractPhase::ResolvedSellerCheat => (-es, 0),
        ContractPhase::ResolvedBuyerCheat => (price, -price - eb),
        ContractPhase::ResolvedGarbage | ContractPhase::Locked => (-es, -price - eb),
        other => unreachable!("{other:?} is not a trade end state"),
    };
    let bonus = if seller == SellerAction::Honest { value } else { 0 };
    (s, b + bonus)
}

/// Random params with every deposit and margin at least 1.
pub fn random_params(rng: &mut impl Rng, max: u64) -> GameParams {
    let price = rng.random_range(1..=max);
    GameParams::new(
        price,
        price + rng.random_range(1..=max),
        rng.random_range(1..=max),
        rng.random_range(1..=max),
    )
}

pub struct Funded {
    pub world: LedgerWorld,
    pub contract: EscrowContract,
    pub seller: AccountId,
    pub buyer: AccountId,
    pub seller_keys: KeyPair,
    pub buyer_keys: KeyPair,
    pub product: Vec<u8>,
}

/// A contract with nonce `nonce`, funded at (10, 15, 5, 5).
pub fn funded_contract(seed: u64, nonce: u64, gas: u64) -> Funded {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut key_seed = [0u8; 32];
    rng.fill_bytes(&mut key_seed);
    let seller_keys = crypto::keygen(&key_seed, "seller");
    rng.fill_bytes(&mut key_seed);
    let buyer_keys = crypto::keygen(&key_seed, "buyer");
    let mut product = vec![0u8; 48];
    rng.fill_bytes(&mut product);

    let seller = AccountId::new("seller");
    let buyer = AccountId::new("buyer");
    let mut world = LedgerWorld::new();
    world.open_account(seller.clone()).unwrap();
    world.open_account(buyer.clone()).unwrap();
    world.mint(&seller, Money(5)).unwrap();
    world.mint(&buyer, Money(15)).unwrap();
    let terms = TradeTerms {
        price: Money(10),
        product_hash: crypto::hash(&product),
        nonce,
        seller_deposit: Money(5),
        buyer_deposit: Money(5),
        seller_pubkey: seller_keys.public_key.clone(),
        buyer_pubkey: buyer_keys.public_key.clone(),
    };
    let mut contract =
        EscrowContract::deploy(&mut world, &seller, AccountId::new(format!("contract-{nonce}")), terms, Money(gas)).unwrap();
    contract.fund(&mut world, &buyer).unwrap();
    Funded { world, contract, seller, buyer, seller_keys, buyer_keys, product }
}

/// A seller-signed envelope binding `product` to `nonce`.
pub fn signed_binding(keys: &KeyPair, product: &[u8], nonce: u64) -> Vec<u8> {
    let encoded = crypto::encode_binding(&crypto::ProductBinding { product_bytes: product.to_vec(), contract_nonce: nonce })
        .unwrap();
    crypto::sign_seal(&keys.private_key, &encoded).unwrap().to_bytes()
}
