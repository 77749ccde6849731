//! Seller and buyer behaviour, the off-chain delivery channel, and the
//! end-to-end trade driver.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::contract::{Complaint, ContractError, EscrowContract, Resolution, TradeTerms};
use crate::crypto::{
    decode_binding, encode_binding, CryptoError, CryptoProvider, KeyPair, ProductBinding, StandardSuite,
    SEAL_SCHEME, SIGNATURE_SCHEME,
};
use crate::game::{GameParams, ParamError, PayoffPair};
use crate::ledger::{AccountId, LedgerError, LedgerWorld, Money};
use crate::transcript::{Event, Transcript, TranscriptHeader, TOOL_NAME, TOOL_VERSION};

const PRODUCT_LEN: usize = 32;
const GARBAGE_COMPLAINT_LEN: usize = 64;

/// What the seller delivers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SellerAction {
    /// N: the correct product, signed and sealed.
    #[serde(rename = "N")]
    Honest,
    /// F: a wrong product, correctly signed and sealed.
    #[serde(rename = "F")]
    Falsified,
    /// G: bytes the buyer cannot open.
    #[serde(rename = "G")]
    Garbage,
}

impl SellerAction {
    pub const ALL: [SellerAction; 3] = [SellerAction::Honest, SellerAction::Falsified, SellerAction::Garbage];

    pub fn label(self) -> &'static str {
        match self {
            SellerAction::Honest => "N",
            SellerAction::Falsified => "F",
            SellerAction::Garbage => "G",
        }
    }
}

impl fmt::Display for SellerAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for SellerAction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "N" => Ok(SellerAction::Honest),
            "F" => Ok(SellerAction::Falsified),
            "G" => Ok(SellerAction::Garbage),
            other => Err(format!("unknown seller action {other:?} (expected N, F or G)")),
        }
    }
}

/// How the buyer responds to a delivery.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BuyerPolicy {
    /// N': accept good deliveries, complain with the evidence otherwise.
    #[serde(rename = "N'")]
    Honest,
    /// F': complain with a valid envelope from another contract.
    #[serde(rename = "F'")]
    Replay,
    /// G': complain with random bytes.
    #[serde(rename = "G'")]
    Garbage,
    /// S: complain with the received envelope even when it is correct.
    #[serde(rename = "S")]
    Frivolous,
    /// R: never respond.
    #[serde(rename = "R")]
    Silent,
}

impl BuyerPolicy {
    pub const ALL: [BuyerPolicy; 5] = [
        BuyerPolicy::Honest,
        BuyerPolicy::Replay,
        BuyerPolicy::Garbage,
        BuyerPolicy::Frivolous,
        BuyerPolicy::Silent,
    ];

    pub fn label(self) -> &'static str {
        match self {
            BuyerPolicy::Honest => "N'",
            BuyerPolicy::Replay => "F'",
            BuyerPolicy::Garbage => "G'",
            BuyerPolicy::Frivolous => "S",
            BuyerPolicy::Silent => "R",
        }
    }

    /// Spelling used on the command line.
    pub fn cli_name(self) -> &'static str {
        match self {
            BuyerPolicy::Honest => "Nprime",
            BuyerPolicy::Replay => "Fprime",
            BuyerPolicy::Garbage => "Gprime",
            BuyerPolicy::Frivolous => "S",
            BuyerPolicy::Silent => "R",
        }
    }
}

impl fmt::Display for BuyerPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for BuyerPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BuyerPolicy::ALL
            .into_iter()
            .find(|p| p.cli_name() == s || p.label() == s)
            .ok_or_else(|| format!("unknown buyer policy {s:?} (expected Nprime, Fprime, Gprime, S or R)"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeliveryMessage {
    #[serde(with = "crate::hexser")]
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ObservationOutcome {
    GoodValid,
    /// Authentic seller envelope, but wrong product hash or wrong nonce.
    GoodInvalidSigned,
    Undecryptable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuyerObservation {
    pub outcome: ObservationOutcome,
    /// The inner signed envelope, present whenever the outer layer opened.
    pub extracted_inner: Option<Vec<u8>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ContractResponse {
    Accept,
    Complaint(Complaint),
    Silence,
}

#[derive(Debug, Error)]
pub enum TradeError {
    #[error("invalid parameters: {0}")]
    Params(#[from] ParamError),
    #[error("replay policy needs a foreign envelope but the replay pool is empty")]
    EmptyReplayPool,
    #[error(transparent)]
    Contract(#[from] ContractError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error("ledger conservation violated after {0}")]
    ConservationViolated(&'static str),
}

/// Build what the seller sends over the off-chain channel.
///
/// `rng` supplies the falsified product and garbage bytes.
pub fn seller_deliver(
    provider: &dyn CryptoProvider,
    action: SellerAction,
    product: &[u8],
    terms: &TradeTerms,
    seller_keys: &KeyPair,
    rng: &mut impl RngCore,
) -> Result<DeliveryMessage, CryptoError> {
    let sealed_for = |payload: &[u8]| -> Result<Vec<u8>, CryptoError> {
        let encoded = encode_binding(&ProductBinding {
            product_bytes: payload.to_vec(),
            contract_nonce: terms.nonce,
        })?;
        let inner = provider.sign_seal(&seller_keys.private_key, &encoded)?;
        Ok(provider.conf_seal(&terms.buyer_pubkey, &inner.to_bytes())?.ciphertext)
    };
    let bytes = match action {
        SellerAction::Honest => sealed_for(product)?,
        SellerAction::Falsified => sealed_for(&falsified_product(product, rng))?,
        SellerAction::Garbage => {
            let len = sealed_for(product)?.len();
            let mut junk = vec![0u8; len];
            rng.fill_bytes(&mut junk);
            junk
        }
    };
    Ok(DeliveryMessage { bytes })
}

/// Random bytes of the same length as `product`, never equal to it.
fn falsified_product(product: &[u8], rng: &mut impl RngCore) -> Vec<u8> {
    let mut fake = vec![0u8; product.len()];
    loop {
        rng.fill_bytes(&mut fake);
        if fake != product {
            return fake;
        }
        if product.is_empty() {
            return vec![0];
        }
    }
}

/// Open, authenticate, decode and hash-check.
pub fn buyer_observe(
    provider: &dyn CryptoProvider,
    msg: &DeliveryMessage,
    terms: &TradeTerms,
    buyer_private: &[u8],
) -> BuyerObservation {
    let Ok(inner) = provider.conf_open(buyer_private, &msg.bytes) else {
        return BuyerObservation { outcome: ObservationOutcome::Undecryptable, extracted_inner: None };
    };
    let outcome = match provider
        .open_signed(&terms.seller_pubkey, &inner)
        .ok()
        .and_then(|opened| decode_binding(&opened).ok())
    {
        None => ObservationOutcome::Undecryptable,
        Some(b) if b.contract_nonce == terms.nonce && provider.hash(&b.product_bytes) == terms.product_hash => {
            ObservationOutcome::GoodValid
        }
        Some(_) => ObservationOutcome::GoodInvalidSigned,
    };
    BuyerObservation { outcome, extracted_inner: Some(inner) }
}

/// What the buyer tells the contract.
pub fn buyer_respond(
    policy: BuyerPolicy,
    obs: &BuyerObservation,
    replay_pool: &[Vec<u8>],
    rng: &mut impl RngCore,
) -> Result<ContractResponse, TradeError> {
    let garbage = |rng: &mut dyn RngCore| {
        let mut junk = vec![0u8; GARBAGE_COMPLAINT_LEN];
        rng.fill_bytes(&mut junk);
        ContractResponse::Complaint(Complaint { evidence: junk })
    };
    let complain = |evidence: Vec<u8>| ContractResponse::Complaint(Complaint { evidence });
    Ok(match policy {
        BuyerPolicy::Honest => match obs.outcome {
            ObservationOutcome::GoodValid => ContractResponse::Accept,
            ObservationOutcome::GoodInvalidSigned => {
                complain(obs.extracted_inner.clone().expect("signed observation carries its envelope"))
            }
            ObservationOutcome::Undecryptable => garbage(rng),
        },
        BuyerPolicy::Replay => complain(replay_pool.last().cloned().ok_or(TradeError::EmptyReplayPool)?),
        BuyerPolicy::Garbage => garbage(rng),
        // with nothing extracted there is nothing to show but an empty string
        BuyerPolicy::Frivolous => complain(obs.extracted_inner.clone().unwrap_or_default()),
        BuyerPolicy::Silent => ContractResponse::Silence,
    })
}

/// Everything needed to run one trade.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TradeConfig {
    pub params: GameParams,
    pub seller_action: SellerAction,
    pub buyer_policy: BuyerPolicy,
    pub gas: Money,
    pub allow_value_le_price: bool,
}

impl TradeConfig {
    pub fn new(params: GameParams, seller_action: SellerAction, buyer_policy: BuyerPolicy) -> Self {
        TradeConfig { params, seller_action, buyer_policy, gas: Money::ZERO, allow_value_le_price: false }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TradeOutcome {
    pub resolution: Resolution,
    pub transcript: Transcript,
    pub payoffs: PayoffPair,
    pub final_world: LedgerWorld,
}

/// Hands out per-contract nonces; never repeats within a run.
#[derive(Debug, Clone, Default)]
pub struct NonceCounter(u64);

impl NonceCounter {
    pub fn next_nonce(&mut self) -> u64 {
        self.0 += 1;
        self.0
    }
}

fn seed_bytes(rng: &mut ChaCha8Rng) -> [u8; 32] {
    let mut s = [0u8; 32];
    rng.fill_bytes(&mut s);
    s
}

pub fn run_trade(config: &TradeConfig, seed: u64) -> Result<TradeOutcome, TradeError> {
    run_trade_with(&StandardSuite, config, seed)
}

/// Deploy, fund, deliver, respond and settle in a fresh world. Payoffs are balance deltas, plus
/// `V_d` for the buyer whenever the seller delivered the real product.
pub fn run_trade_with(
    provider: &dyn CryptoProvider,
    config: &TradeConfig,
    seed: u64,
) -> Result<TradeOutcome, TradeError> {
    let params = config.params;
    params.validate_for_trade(config.allow_value_le_price)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let seller_keys = provider.keygen(&seed_bytes(&mut rng), "seller");
    let buyer_keys = provider.keygen(&seed_bytes(&mut rng), "buyer");
    let mut product = vec![0u8; PRODUCT_LEN];
    rng.fill_bytes(&mut product);

    let seller = AccountId::new("seller");
    let buyer = AccountId::new("buyer");
    let mut world = LedgerWorld::new();
    world.open_account(seller.clone())?;
    world.open_account(buyer.clone())?;
    world.mint(&seller, Money(params.seller_deposit))?;
    let buyer_outlay = params.price.checked_add(params.buyer_deposit).ok_or(LedgerError::Overflow)?;
    world.mint(&buyer, Money(buyer_outlay))?;
    let seller_start = world.balance(&seller)?;
    let buyer_start = world.balance(&buyer)?;

    let mut events = Vec::new();
    let mut log = |event: Event, what: &'static str| -> Result<(), TradeError> {
        if event.ledger().is_some_and(|l| !l.is_conserved()) {
            return Err(TradeError::ConservationViolated(what));
        }
        events.push(event);
        Ok(())
    };
    log(Event::Endow { ledger: world.clone() }, "endow")?;

    let mut nonces = NonceCounter::default();
    let mut terms = TradeTerms {
        price: Money(params.price),
        product_hash: provider.hash(&product),
        nonce: 0,
        seller_deposit: Money(params.seller_deposit),
        buyer_deposit: Money(params.buyer_deposit),
        seller_pubkey: seller_keys.public_key.clone(),
        buyer_pubkey: buyer_keys.public_key.clone(),
    };

    // An earlier sale of the same product stocks the replay pool.
    let mut replay_pool = Vec::new();
    if config.buyer_policy == BuyerPolicy::Replay {
        let earlier = TradeTerms { nonce: nonces.next_nonce(), ..terms.clone() };
        let msg = seller_deliver(provider, SellerAction::Honest, &product, &earlier, &seller_keys, &mut rng)?;
        let obs = buyer_observe(provider, &msg, &earlier, &buyer_keys.private_key);
        let envelope = obs.extracted_inner.expect("honest delivery opens");
        log(Event::Provision { nonce: earlier.nonce, envelope: envelope.clone() }, "provision")?;
        replay_pool.push(envelope);
    }

    terms.nonce = nonces.next_nonce();
    let contract_id = AccountId::new(format!("contract-{}", terms.nonce));
    let mut contract = EscrowContract::deploy(&mut world, &seller, contract_id.clone(), terms.clone(), config.gas)?;
    log(
        Event::Deploy {
            contract: contract_id.to_string(),
            nonce: terms.nonce,
            price: terms.price,
            product_hash: terms.product_hash,
            seller_deposit: terms.seller_deposit,
            buyer_deposit: terms.buyer_deposit,
            gas_fee: config.gas,
            phase: contract.phase(),
            ledger: world.clone(),
        },
        "deploy",
    )?;

    contract.fund(&mut world, &buyer)?;
    log(Event::Fund { phase: contract.phase(), amount: Money(buyer_outlay), ledger: world.clone() }, "fund")?;

    let msg = seller_deliver(provider, config.seller_action, &product, &terms, &seller_keys, &mut rng)?;
    log(Event::Deliver { action: config.seller_action, message: msg.bytes.clone() }, "deliver")?;

    let obs = buyer_observe(provider, &msg, &terms, &buyer_keys.private_key);
    log(Event::Observe { outcome: obs.outcome }, "observe")?;

    let policy = config.buyer_policy;
    let resolution = match buyer_respond(policy, &obs, &replay_pool, &mut rng)? {
        ContractResponse::Accept => {
            log(Event::Accept { policy }, "accept")?;
            contract.accept(&mut world, &buyer)?
        }
        ContractResponse::Complaint(complaint) => {
            log(Event::Complaint { policy, evidence: complaint.evidence.clone() }, "complaint")?;
            contract.reconcile(&mut world, &buyer, &complaint, provider)?
        }
        ContractResponse::Silence => {
            log(Event::Silence { policy }, "silence")?;
            contract.finalize_locked(&world)?
        }
    };
    log(Event::Resolution { resolution: resolution.clone(), ledger: world.clone() }, "resolution")?;

    let seller_gain = world.balance(&seller)?.0 as i128 - seller_start.0 as i128;
    let mut buyer_gain = world.balance(&buyer)?.0 as i128 - buyer_start.0 as i128;
    if config.seller_action == SellerAction::Honest {
        buyer_gain += params.value as i128;
    }
    let payoffs = PayoffPair { seller: seller_gain, buyer: buyer_gain };

    let transcript = Transcript {
        header: TranscriptHeader {
            tool: TOOL_NAME.to_owned(),
            version: TOOL_VERSION.to_owned(),
            hash_algorithm: provider.hash_algorithm().to_owned(),
            signature_scheme: SIGNATURE_SCHEME.to_owned(),
            seal_scheme: SEAL_SCHEME.to_owned(),
            seed,
            params,
            gas: config.gas,
            seller_action: config.seller_action,
            buyer_policy: config.buyer_policy,
            allow_value_le_price: config.allow_value_le_price,
        },
        events,
        payoffs,
    };
    Ok(TradeOutcome { resolution, transcript, payoffs, final_world: world })
}

/// Random seed material for callers that need reproducible sub-streams.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng.random()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contract::ContractPhase;
    use crate::crypto::{self, keygen};

    fn setup() -> (TradeTerms, KeyPair, KeyPair, Vec<u8>) {
        let seller = keygen(&[7; 32], "seller");
        let buyer = keygen(&[8; 32], "buyer");
        let product = b"digital good".to_vec();
        let terms = TradeTerms {
            price: Money(10),
            product_hash: crypto::hash(&product),
            nonce: 5,
            seller_deposit: Money(5),
            buyer_deposit: Money(5),
            seller_pubkey: seller.public_key.clone(),
            buyer_pubkey: buyer.public_key.clone(),
        };
        (terms, seller, buyer, product)
    }

    fn observe(action: SellerAction) -> BuyerObservation {
        let (terms, seller, buyer, product) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let msg = seller_deliver(&StandardSuite, action, &product, &terms, &seller, &mut rng).unwrap();
        buyer_observe(&StandardSuite, &msg, &terms, &buyer.private_key)
    }

    #[test]
    fn honest_delivery_is_good_valid() {
        let obs = observe(SellerAction::Honest);
        assert_eq!(obs.outcome, ObservationOutcome::GoodValid);
        assert!(obs.extracted_inner.is_some());
    }

    #[test]
    fn falsified_delivery_is_signed_but_invalid() {
        let obs = observe(SellerAction::Falsified);
        assert_eq!(obs.outcome, ObservationOutcome::GoodInvalidSigned);
        assert!(obs.extracted_inner.is_some());
    }

    #[test]
    fn garbage_delivery_is_undecryptable() {
        let obs = observe(SellerAction::Garbage);
        assert_eq!(obs.outcome, ObservationOutcome::Undecryptable);
        assert_eq!(obs.extracted_inner, None);
    }

    #[test]
    fn wrong_nonce_delivery_is_signed_but_invalid() {
        let (terms, seller, buyer, product) = setup();
        let other = TradeTerms { nonce: 99, ..terms.clone() };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let msg = seller_deliver(&StandardSuite, SellerAction::Honest, &product, &other, &seller, &mut rng).unwrap();
        let obs = buyer_observe(&StandardSuite, &msg, &terms, &buyer.private_key);
        assert_eq!(obs.outcome, ObservationOutcome::GoodInvalidSigned);
    }

    #[test]
    fn honest_buyer_responses() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let good = observe(SellerAction::Honest);
        assert_eq!(buyer_respond(BuyerPolicy::Honest, &good, &[], &mut rng).unwrap(), ContractResponse::Accept);

        let bad = observe(SellerAction::Falsified);
        assert_eq!(
            buyer_respond(BuyerPolicy::Honest, &bad, &[], &mut rng).unwrap(),
            ContractResponse::Complaint(Complaint { evidence: bad.extracted_inner.clone().unwrap() })
        );

        let junk = observe(SellerAction::Garbage);
        assert!(matches!(
            buyer_respond(BuyerPolicy::Honest, &junk, &[], &mut rng).unwrap(),
            ContractResponse::Complaint(c) if c.evidence.len() == GARBAGE_COMPLAINT_LEN
        ));
    }

    #[test]
    fn frivolous_buyer_submits_the_valid_envelope() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let good = observe(SellerAction::Honest);
        let resp = buyer_respond(BuyerPolicy::Frivolous, &good, &[], &mut rng).unwrap();
        let (terms, ..) = setup();
        let ContractResponse::Complaint(c) = resp else { panic!("expected complaint") };
        assert_eq!(
            crate::contract::classify_evidence(&StandardSuite, &terms, &c.evidence),
            crate::contract::ReconcileBranch::Frivolous
        );
    }

    #[test]
    fn replay_without_pool_is_a_configuration_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let good = observe(SellerAction::Honest);
        assert!(matches!(
            buyer_respond(BuyerPolicy::Replay, &good, &[], &mut rng),
            Err(TradeError::EmptyReplayPool)
        ));
    }

    #[test]
    fn silent_buyer_says_nothing() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let good = observe(SellerAction::Honest);
        assert_eq!(buyer_respond(BuyerPolicy::Silent, &good, &[], &mut rng).unwrap(), ContractResponse::Silence);
    }

    fn params() -> GameParams {
        GameParams { price: 10, value: 15, seller_deposit: 5, buyer_deposit: 5 }
    }

    #[test]
    fn run_trade_leaf_examples() {
        let cases = [
            (SellerAction::Honest, BuyerPolicy::Honest, (10, 5), ContractPhase::Accepted),
            (SellerAction::Falsified, BuyerPolicy::Honest, (-5, 0), ContractPhase::ResolvedSellerCheat),
            (SellerAction::Garbage, BuyerPolicy::Garbage, (-5, -15), ContractPhase::ResolvedGarbage),
            (SellerAction::Garbage, BuyerPolicy::Honest, (-5, -15), ContractPhase::ResolvedGarbage),
        ];
        for (s, b, (ps, pb), phase) in cases {
            let out = run_trade(&TradeConfig::new(params(), s, b), 3).unwrap();
            assert_eq!(out.payoffs, PayoffPair { seller: ps, buyer: pb }, "{s}/{b}");
            assert_eq!(out.resolution.phase, phase);
        }
    }

    #[test]
    fn run_trade_rejects_bad_params() {
        let mut p = params();
        p.value = 8;
        let cfg = TradeConfig::new(p, SellerAction::Honest, BuyerPolicy::Honest);
        assert!(matches!(run_trade(&cfg, 0), Err(TradeError::Params(ParamError::ValueNotAbovePrice { .. }))));
        let cfg = TradeConfig { allow_value_le_price: true, ..cfg };
        assert_eq!(run_trade(&cfg, 0).unwrap().payoffs, PayoffPair { seller: 10, buyer: -2 });

        let mut p = params();
        p.seller_deposit = 0;
        let cfg = TradeConfig::new(p, SellerAction::Honest, BuyerPolicy::Honest);
        assert!(matches!(run_trade(&cfg, 0), Err(TradeError::Params(ParamError::ZeroSellerDeposit))));
    }

    #[test]
    fn replay_trade_logs_provisioning() {
        let out = run_trade(&TradeConfig::new(params(), SellerAction::Honest, BuyerPolicy::Replay), 9).unwrap();
        assert!(matches!(out.transcript.events[1], Event::Provision { nonce: 1, .. }));
        assert_eq!(out.resolution.branch, Some(crate::contract::ReconcileBranch::NonceMismatch));
    }

    #[test]
    fn parse_labels() {
        assert_eq!("Nprime".parse::<BuyerPolicy>().unwrap(), BuyerPolicy::Honest);
        assert_eq!("F'".parse::<BuyerPolicy>().unwrap(), BuyerPolicy::Replay);
        assert_eq!("G".parse::<SellerAction>().unwrap(), SellerAction::Garbage);
        assert!("X".parse::<SellerAction>().is_err());
        assert!("Q".parse::<BuyerPolicy>().is_err());
    }
}
