use std::ffi::CStr;
use std::ptr;

use escrow_ffi::*;

const BASE: EscrowParams = EscrowParams { price: 10, value: 15, seller_deposit: 5, buyer_deposit: 5 };

fn last_error() -> String {
    unsafe { CStr::from_ptr(escrow_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn hash_matches_known_vector() {
    let mut out = [0u8; 32];
    let st = unsafe { escrow_hash(b"abc".as_ptr(), 3, out.as_mut_ptr()) };
    assert_eq!(st, EscrowStatus::Ok);
    assert_eq!(out[..4], [0xba, 0x78, 0x16, 0xbf]);
    let st = unsafe { escrow_hash(ptr::null(), 0, out.as_mut_ptr()) };
    assert_eq!(st, EscrowStatus::Ok);
    assert_eq!(out[..4], [0xe3, 0xb0, 0xc4, 0x42]);
}

#[test]
fn analytic_payoffs_cover_the_grid() {
    let want = [
        [(10, 5), (10, 0), (-5, 0), (10, 0), (-5, 0)],
        [(-5, 0), (10, -15), (-5, -15), (-5, 0), (-5, -15)],
        [(-5, -15), (10, -15), (-5, -15), (-5, -15), (-5, -15)],
    ];
    for (s, row) in want.iter().enumerate() {
        for (b, &cell) in row.iter().enumerate() {
            let (mut x, mut y) = (0i64, 0i64);
            let st = unsafe { escrow_analytic_payoff(&BASE, s as u32, b as u32, &mut x, &mut y) };
            assert_eq!(st, EscrowStatus::Ok);
            assert_eq!((x, y), cell);
        }
    }
}

#[test]
fn payoff_overflow_is_reported() {
    let big = EscrowParams { price: u64::MAX, value: u64::MAX, seller_deposit: u64::MAX, buyer_deposit: u64::MAX };
    let (mut x, mut y) = (0i64, 0i64);
    let st = unsafe { escrow_analytic_payoff(&big, 1, 1, &mut x, &mut y) };
    assert_eq!(st, EscrowStatus::Overflow);
    assert!(last_error().contains("int64_t"));
}

#[test]
fn bad_codes_and_nulls() {
    let (mut x, mut y) = (0i64, 0i64);
    assert_eq!(unsafe { escrow_analytic_payoff(&BASE, 3, 0, &mut x, &mut y) }, EscrowStatus::InvalidArgument);
    assert_eq!(unsafe { escrow_analytic_payoff(&BASE, 0, 5, &mut x, &mut y) }, EscrowStatus::InvalidArgument);
    assert_eq!(unsafe { escrow_analytic_payoff(ptr::null(), 0, 0, &mut x, &mut y) }, EscrowStatus::NullPointer);
    assert_eq!(last_error(), "params is null");
    assert_eq!(unsafe { escrow_trade_run(&BASE, 0, 0, 0, 1, false, ptr::null_mut()) }, EscrowStatus::NullPointer);
    assert_eq!(unsafe { escrow_analysis_new(&BASE, 9, ptr::null_mut()) }, EscrowStatus::NullPointer);
    let mut a = ptr::null_mut();
    assert_eq!(unsafe { escrow_analysis_new(&BASE, 9, &mut a) }, EscrowStatus::InvalidArgument);
    assert!(a.is_null());
    unsafe {
        escrow_trade_free(ptr::null_mut());
        escrow_analysis_free(a);
        escrow_string_free(ptr::null_mut());
    }
}

#[test]
fn trade_handle_lifecycle() {
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { escrow_trade_run(&BASE, 1, 0, 0, 7, false, &mut t) }, EscrowStatus::Ok);
    let (mut s, mut b, mut phase) = (0i64, 0i64, 99u32);
    unsafe {
        assert_eq!(escrow_trade_payoffs(t, &mut s, &mut b), EscrowStatus::Ok);
        assert_eq!(escrow_trade_phase(t, &mut phase), EscrowStatus::Ok);
    }
    assert_eq!((s, b), (-5, 0));
    assert_eq!(phase, EscrowPhase::ResolvedSellerCheat as u32);

    let mut json = ptr::null_mut();
    assert_eq!(unsafe { escrow_trade_transcript_json(t, &mut json) }, EscrowStatus::Ok);
    let text = unsafe { CStr::from_ptr(json) }.to_str().unwrap().to_owned();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["payoffs"]["seller"], -5);
    unsafe {
        escrow_string_free(json);
        escrow_trade_free(t);
    }
}

#[test]
fn trades_are_deterministic_across_handles() {
    let run = || {
        let mut t = ptr::null_mut();
        let mut json = ptr::null_mut();
        unsafe {
            assert_eq!(escrow_trade_run(&BASE, 2, 1, 1, 3, false, &mut t), EscrowStatus::Ok);
            assert_eq!(escrow_trade_transcript_json(t, &mut json), EscrowStatus::Ok);
            let s = CStr::from_ptr(json).to_bytes().to_vec();
            escrow_string_free(json);
            escrow_trade_free(t);
            s
        }
    };
    assert_eq!(run(), run());
}

#[test]
fn invalid_trade_params() {
    let mut t = ptr::null_mut();
    let zero = EscrowParams { seller_deposit: 0, ..BASE };
    assert_eq!(unsafe { escrow_trade_run(&zero, 0, 0, 0, 1, false, &mut t) }, EscrowStatus::InvalidParams);
    assert!(t.is_null());
    assert!(!last_error().is_empty());
    let flat = EscrowParams { value: 10, ..BASE };
    assert_eq!(unsafe { escrow_trade_run(&flat, 0, 0, 0, 1, false, &mut t) }, EscrowStatus::InvalidParams);
    assert_eq!(unsafe { escrow_trade_run(&flat, 0, 0, 0, 1, true, &mut t) }, EscrowStatus::Ok);
    unsafe { escrow_trade_free(t) };
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { escrow_trade_run(&BASE, 0, 0, 6, 1, false, &mut t) }, EscrowStatus::TradeFailed);
}

#[test]
fn analysis_handle_reports_ties() {
    for (mode, count) in [(EscrowTieBreak::HonestFirst as u32, 1usize), (EscrowTieBreak::ReportAll as u32, 4)] {
        let mut a = ptr::null_mut();
        let (mut n, mut unique) = (0usize, true);
        let mut json = ptr::null_mut();
        unsafe {
            assert_eq!(escrow_analysis_new(&BASE, mode, &mut a), EscrowStatus::Ok);
            assert_eq!(escrow_analysis_count(a, &mut n), EscrowStatus::Ok);
            assert_eq!(escrow_analysis_unique(a, &mut unique), EscrowStatus::Ok);
            assert_eq!(escrow_analysis_json(a, &mut json), EscrowStatus::Ok);
            let v: serde_json::Value = serde_json::from_slice(CStr::from_ptr(json).to_bytes()).unwrap();
            assert!(v["tie_nodes"].as_array().unwrap().iter().any(|n| n == "buyer@G"));
            escrow_string_free(json);
            escrow_analysis_free(a);
        }
        assert_eq!(n, count);
        assert!(!unique);
    }
}
