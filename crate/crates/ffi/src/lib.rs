//! C ABI over `escrow-core`.
//!
//! Every function returns an [`EscrowStatus`]. On failure a human-readable
//! message is available from [`escrow_last_error`] on the same thread.
//! Handles are opaque and must be released with their `_free` function.
//! Strings returned through out-parameters are owned by the caller and must
//! be released with [`escrow_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, UnwindSafe};
use std::ptr;

use escrow_core::game::{analytic_payoff, BuyerEdge};
use escrow_core::{
    backward_induction, build_tree, run_trade, BuyerPolicy, ContractPhase, GameParams, Money, SellerAction,
    SpneResult, TieBreak, TradeConfig, TradeOutcome,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EscrowStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidParams = 3,
    TradeFailed = 4,
    Overflow = 5,
    Panic = 6,
}

/// `P_d`, `V_d`, `E_S`, `E_B`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EscrowParams {
    pub price: u64,
    pub value: u64,
    pub seller_deposit: u64,
    pub buyer_deposit: u64,
}

impl From<EscrowParams> for GameParams {
    fn from(p: EscrowParams) -> Self {
        GameParams::new(p.price, p.value, p.seller_deposit, p.buyer_deposit)
    }
}

/// Seller action codes.
#[repr(C)]
pub enum EscrowSeller {
    Honest = 0,
    Falsified = 1,
    Garbage = 2,
}

/// Buyer policy codes.
#[repr(C)]
pub enum EscrowBuyer {
    Honest = 0,
    Replay = 1,
    Garbage = 2,
    Frivolous = 3,
    Silent = 4,
}

/// Tie-break codes for [`escrow_analysis_new`].
#[repr(C)]
pub enum EscrowTieBreak {
    HonestFirst = 0,
    ReportAll = 1,
}

/// Contract phase codes reported by [`escrow_trade_phase`].
#[repr(C)]
pub enum EscrowPhase {
    Created = 0,
    Cancelled = 1,
    Funded = 2,
    Accepted = 3,
    ResolvedSellerCheat = 4,
    ResolvedBuyerCheat = 5,
    ResolvedGarbage = 6,
    Locked = 7,
}

/// Opaque result of one simulated trade.
pub struct EscrowTrade {
    outcome: TradeOutcome,
}

/// Opaque equilibrium analysis of one parameter set.
pub struct EscrowAnalysis {
    result: SpneResult,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Fail(EscrowStatus, String);

impl Fail {
    fn new(status: EscrowStatus, msg: impl Into<String>) -> Self {
        Fail(status, msg.into())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail> + UnwindSafe) -> EscrowStatus {
    match catch_unwind(f) {
        Ok(Ok(())) => {
            set_error("");
            EscrowStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            EscrowStatus::Panic
        }
    }
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), Fail> {
    if p.is_null() {
        Err(Fail::new(EscrowStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

fn seller_from(code: u32) -> Result<SellerAction, Fail> {
    SellerAction::ALL
        .get(code as usize)
        .copied()
        .ok_or_else(|| Fail::new(EscrowStatus::InvalidArgument, format!("unknown seller code {code}")))
}

fn buyer_from(code: u32) -> Result<BuyerPolicy, Fail> {
    BuyerPolicy::ALL
        .get(code as usize)
        .copied()
        .ok_or_else(|| Fail::new(EscrowStatus::InvalidArgument, format!("unknown buyer code {code}")))
}

fn to_i64(v: i128) -> Result<i64, Fail> {
    i64::try_from(v).map_err(|_| Fail::new(EscrowStatus::Overflow, format!("{v} does not fit in int64_t")))
}

fn phase_code(p: ContractPhase) -> EscrowPhase {
    match p {
        ContractPhase::Created => EscrowPhase::Created,
        ContractPhase::Cancelled => EscrowPhase::Cancelled,
        ContractPhase::Funded => EscrowPhase::Funded,
        ContractPhase::Accepted => EscrowPhase::Accepted,
        ContractPhase::ResolvedSellerCheat => EscrowPhase::ResolvedSellerCheat,
        ContractPhase::ResolvedBuyerCheat => EscrowPhase::ResolvedBuyerCheat,
        ContractPhase::ResolvedGarbage => EscrowPhase::ResolvedGarbage,
        ContractPhase::Locked => EscrowPhase::Locked,
    }
}

unsafe fn give_string(out: *mut *mut c_char, s: String) -> Result<(), Fail> {
    let c = CString::new(s).map_err(|_| Fail::new(EscrowStatus::Panic, "string contains NUL"))?;
    *out = c.into_raw();
    Ok(())
}

/// Message for the most recent failure on this thread, or an empty string.
/// The pointer stays valid until the next `escrow_*` call on this thread.
#[no_mangle]
pub extern "C" fn escrow_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Release a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn escrow_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// SHA-256 of `len` bytes at `data` into the 32 bytes at `out`.
///
/// # Safety
/// `data` must be readable for `len` bytes (or null with `len == 0`);
/// `out` must be writable for 32 bytes.
#[no_mangle]
pub unsafe extern "C" fn escrow_hash(data: *const u8, len: usize, out: *mut u8) -> EscrowStatus {
    guard(|| {
        non_null(out, "out")?;
        let input: &[u8] = if len == 0 {
            &[]
        } else {
            non_null(data, "data")?;
            std::slice::from_raw_parts(data, len)
        };
        let digest = escrow_core::crypto::hash(input);
        ptr::copy_nonoverlapping(digest.as_bytes().as_ptr(), out, 32);
        Ok(())
    })
}

/// Closed-form payoff of the leaf reached by `seller` then `buyer`.
///
/// # Safety
/// `params`, `out_seller` and `out_buyer` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn escrow_analytic_payoff(
    params: *const EscrowParams,
    seller: u32,
    buyer: u32,
    out_seller: *mut i64,
    out_buyer: *mut i64,
) -> EscrowStatus {
    guard(|| {
        non_null(params, "params")?;
        non_null(out_seller, "out_seller")?;
        non_null(out_buyer, "out_buyer")?;
        let p: GameParams = (*params).into();
        let s = seller_from(seller)?;
        let pay = analytic_payoff(&p, s, BuyerEdge::for_policy(s, buyer_from(buyer)?));
        let (a, b) = (to_i64(pay.seller)?, to_i64(pay.buyer)?);
        *out_seller = a;
        *out_buyer = b;
        Ok(())
    })
}

/// Run one trade end to end and return it through `out`.
///
/// # Safety
/// `params` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn escrow_trade_run(
    params: *const EscrowParams,
    seller: u32,
    buyer: u32,
    gas: u64,
    seed: u64,
    allow_value_le_price: bool,
    out: *mut *mut EscrowTrade,
) -> EscrowStatus {
    guard(|| {
        non_null(params, "params")?;
        non_null(out, "out")?;
        let p: GameParams = (*params).into();
        p.validate_for_trade(allow_value_le_price)
            .map_err(|e| Fail::new(EscrowStatus::InvalidParams, e.to_string()))?;
        let config = TradeConfig {
            params: p,
            seller_action: seller_from(seller)?,
            buyer_policy: buyer_from(buyer)?,
            gas: Money(gas),
            allow_value_le_price,
        };
        let outcome = run_trade(&config, seed).map_err(|e| Fail::new(EscrowStatus::TradeFailed, e.to_string()))?;
        *out = Box::into_raw(Box::new(EscrowTrade { outcome }));
        Ok(())
    })
}

/// # Safety
/// `trade`, `out_seller` and `out_buyer` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn escrow_trade_payoffs(
    trade: *const EscrowTrade,
    out_seller: *mut i64,
    out_buyer: *mut i64,
) -> EscrowStatus {
    guard(|| {
        non_null(trade, "trade")?;
        non_null(out_seller, "out_seller")?;
        non_null(out_buyer, "out_buyer")?;
        let p = (*trade).outcome.payoffs;
        let (a, b) = (to_i64(p.seller)?, to_i64(p.buyer)?);
        *out_seller = a;
        *out_buyer = b;
        Ok(())
    })
}

/// Final contract phase as an [`EscrowPhase`] code.
///
/// # Safety
/// `trade` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn escrow_trade_phase(trade: *const EscrowTrade, out: *mut u32) -> EscrowStatus {
    guard(|| {
        non_null(trade, "trade")?;
        non_null(out, "out")?;
        *out = phase_code((*trade).outcome.resolution.phase) as u32;
        Ok(())
    })
}

/// The trade transcript as JSON. Free with [`escrow_string_free`].
///
/// # Safety
/// `trade` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn escrow_trade_transcript_json(trade: *const EscrowTrade, out: *mut *mut c_char) -> EscrowStatus {
    guard(|| {
        non_null(trade, "trade")?;
        non_null(out, "out")?;
        give_string(out, (*trade).outcome.transcript.to_json())
    })
}

/// # Safety
/// `trade` must come from [`escrow_trade_run`] and not have been freed. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn escrow_trade_free(trade: *mut EscrowTrade) {
    if !trade.is_null() {
        drop(Box::from_raw(trade));
    }
}

/// Solve the game for `params` with the given [`EscrowTieBreak`] code.
///
/// # Safety
/// `params` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn escrow_analysis_new(
    params: *const EscrowParams,
    tie_break: u32,
    out: *mut *mut EscrowAnalysis,
) -> EscrowStatus {
    guard(|| {
        non_null(params, "params")?;
        non_null(out, "out")?;
        let mode = match tie_break {
            0 => TieBreak::HonestFirst,
            1 => TieBreak::ReportAll,
            other => return Err(Fail::new(EscrowStatus::InvalidArgument, format!("unknown tie-break code {other}"))),
        };
        let result = backward_induction(&build_tree(&(*params).into()), mode);
        *out = Box::into_raw(Box::new(EscrowAnalysis { result }));
        Ok(())
    })
}

/// Number of equilibria found.
///
/// # Safety
/// `analysis` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn escrow_analysis_count(analysis: *const EscrowAnalysis, out: *mut usize) -> EscrowStatus {
    guard(|| {
        non_null(analysis, "analysis")?;
        non_null(out, "out")?;
        *out = (*analysis).result.equilibria.len();
        Ok(())
    })
}

/// True only when exactly one equilibrium exists and no mover is indifferent.
///
/// # Safety
/// `analysis` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn escrow_analysis_unique(analysis: *const EscrowAnalysis, out: *mut bool) -> EscrowStatus {
    guard(|| {
        non_null(analysis, "analysis")?;
        non_null(out, "out")?;
        *out = (*analysis).result.unique;
        Ok(())
    })
}

/// The full result as JSON. Free with [`escrow_string_free`].
///
/// # Safety
/// `analysis` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn escrow_analysis_json(analysis: *const EscrowAnalysis, out: *mut *mut c_char) -> EscrowStatus {
    guard(|| {
        non_null(analysis, "analysis")?;
        non_null(out, "out")?;
        give_string(out, (*analysis).result.to_json())
    })
}

/// # Safety
/// `analysis` must come from [`escrow_analysis_new`] and not have been freed. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn escrow_analysis_free(analysis: *mut EscrowAnalysis) {
    if !analysis.is_null() {
        drop(Box::from_raw(analysis));
    }
}
