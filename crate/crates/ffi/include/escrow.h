#ifndef ESCROW_H
#define ESCROW_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum EscrowStatus {
  ESCROW_STATUS_OK = 0,
  ESCROW_STATUS_NULL_POINTER = 1,
  ESCROW_STATUS_INVALID_ARGUMENT = 2,
  ESCROW_STATUS_INVALID_PARAMS = 3,
  ESCROW_STATUS_TRADE_FAILED = 4,
  ESCROW_STATUS_OVERFLOW = 5,
  ESCROW_STATUS_PANIC = 6,
} EscrowStatus;

/**
 * Seller action codes.
 */
typedef enum EscrowSeller {
  ESCROW_SELLER_HONEST = 0,
  ESCROW_SELLER_FALSIFIED = 1,
  ESCROW_SELLER_GARBAGE = 2,
} EscrowSeller;

/**
 * Buyer policy codes.
 */
typedef enum EscrowBuyer {
  ESCROW_BUYER_HONEST = 0,
  ESCROW_BUYER_REPLAY = 1,
  ESCROW_BUYER_GARBAGE = 2,
  ESCROW_BUYER_FRIVOLOUS = 3,
  ESCROW_BUYER_SILENT = 4,
} EscrowBuyer;

/**
 * Tie-break codes for [`escrow_analysis_new`].
 */
typedef enum EscrowTieBreak {
  ESCROW_TIE_BREAK_HONEST_FIRST = 0,
  ESCROW_TIE_BREAK_REPORT_ALL = 1,
} EscrowTieBreak;

/**
 * Contract phase codes reported by [`escrow_trade_phase`].
 */
typedef enum EscrowPhase {
  ESCROW_PHASE_CREATED = 0,
  ESCROW_PHASE_CANCELLED = 1,
  ESCROW_PHASE_FUNDED = 2,
  ESCROW_PHASE_ACCEPTED = 3,
  ESCROW_PHASE_RESOLVED_SELLER_CHEAT = 4,
  ESCROW_PHASE_RESOLVED_BUYER_CHEAT = 5,
  ESCROW_PHASE_RESOLVED_GARBAGE = 6,
  ESCROW_PHASE_LOCKED = 7,
} EscrowPhase;

/**
 * Opaque equilibrium analysis of one parameter set.
 */
typedef struct EscrowAnalysis EscrowAnalysis;

/**
 * Opaque result of one simulated trade.
 */
typedef struct EscrowTrade EscrowTrade;

/**
 * `P_d`, `V_d`, `E_S`, `E_B`.
 */
typedef struct EscrowParams {
  uint64_t price;
  uint64_t value;
  uint64_t seller_deposit;
  uint64_t buyer_deposit;
} EscrowParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or an empty string.
 * The pointer stays valid until the next `escrow_*` call on this thread.
 */
const char *escrow_last_error(void);

/**
 * Release a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void escrow_string_free(char *s);

/**
 * SHA-256 of `len` bytes at `data` into the 32 bytes at `out`.
 *
 * # Safety
 * `data` must be readable for `len` bytes (or null with `len == 0`);
 * `out` must be writable for 32 bytes.
 */
enum EscrowStatus escrow_hash(const uint8_t *data, size_t len, uint8_t *out);

/**
 * Closed-form payoff of the leaf reached by `seller` then `buyer`.
 *
 * # Safety
 * `params`, `out_seller` and `out_buyer` must be valid pointers.
 */
enum EscrowStatus escrow_analytic_payoff(const struct EscrowParams *params,
                                         uint32_t seller,
                                         uint32_t buyer,
                                         int64_t *out_seller,
                                         int64_t *out_buyer);

/**
 * Run one trade end to end and return it through `out`.
 *
 * # Safety
 * `params` and `out` must be valid pointers.
 */
enum EscrowStatus escrow_trade_run(const struct EscrowParams *params,
                                   uint32_t seller,
                                   uint32_t buyer,
                                   uint64_t gas,
                                   uint64_t seed,
                                   bool allow_value_le_price,
                                   struct EscrowTrade **out);

/**
 * # Safety
 * `trade`, `out_seller` and `out_buyer` must be valid pointers.
 */
enum EscrowStatus escrow_trade_payoffs(const struct EscrowTrade *trade,
                                       int64_t *out_seller,
                                       int64_t *out_buyer);

/**
 * Final contract phase as an [`EscrowPhase`] code.
 *
 * # Safety
 * `trade` and `out` must be valid pointers.
 */
enum EscrowStatus escrow_trade_phase(const struct EscrowTrade *trade, uint32_t *out);

/**
 * The trade transcript as JSON. Free with [`escrow_string_free`].
 *
 * # Safety
 * `trade` and `out` must be valid pointers.
 */
enum EscrowStatus escrow_trade_transcript_json(const struct EscrowTrade *trade, char **out);

/**
 * # Safety
 * `trade` must come from [`escrow_trade_run`] and not have been freed. Null is ignored.
 */
void escrow_trade_free(struct EscrowTrade *trade);

/**
 * Solve the game for `params` with the given [`EscrowTieBreak`] code.
 *
 * # Safety
 * `params` and `out` must be valid pointers.
 */
enum EscrowStatus escrow_analysis_new(const struct EscrowParams *params,
                                      uint32_t tie_break,
                                      struct EscrowAnalysis **out);

/**
 * Number of equilibria found.
 *
 * # Safety
 * `analysis` and `out` must be valid pointers.
 */
enum EscrowStatus escrow_analysis_count(const struct EscrowAnalysis *analysis, size_t *out);

/**
 * True only when exactly one equilibrium exists and no mover is indifferent.
 *
 * # Safety
 * `analysis` and `out` must be valid pointers.
 */
enum EscrowStatus escrow_analysis_unique(const struct EscrowAnalysis *analysis, bool *out);

/**
 * The full result as JSON. Free with [`escrow_string_free`].
 *
 * # Safety
 * `analysis` and `out` must be valid pointers.
 */
enum EscrowStatus escrow_analysis_json(const struct EscrowAnalysis *analysis, char **out);

/**
 * # Safety
 * `analysis` must come from [`escrow_analysis_new`] and not have been freed. Null is ignored.
 */
void escrow_analysis_free(struct EscrowAnalysis *analysis);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ESCROW_H */
