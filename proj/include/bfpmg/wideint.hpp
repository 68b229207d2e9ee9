#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <gmpxx.h>

namespace bfpmg {

/// Two's complement integer of explicit bit-width w, with value restricted to
/// T_w = [-2^(w-1), 2^(w-1)-1]. Arithmetic never overflows: result widths
/// grow so that any result of the given input widths is representable.
/// Values are immutable after construction.
class WideInt {
 public:
  WideInt() : width_(1) {}
  WideInt(mpz_class value, std::int64_t width);
  WideInt(long value, std::int64_t width) : WideInt(mpz_class(value), width) {}

  const mpz_class& value() const { return v_; }
  std::int64_t width() const { return width_; }

  bool operator==(const WideInt& o) const {
    return width_ == o.width_ && v_ == o.v_;
  }

 private:
  mpz_class v_;
  std::int64_t width_;
};

/// True iff v lies in T_w.
bool fits_width(const mpz_class& v, std::int64_t w);

/// Minimal w >= 1 with v in T_w (so msb(0) = msb(-1) = 1, msb(23) = 6).
std::int64_t msb(const mpz_class& v);
inline std::int64_t msb(const WideInt& v) { return msb(v.value()); }

WideInt add(const WideInt& a, const WideInt& b);
WideInt sub(const WideInt& a, const WideInt& b);
WideInt mul(const WideInt& a, const WideInt& b);

/// floor(v / 2^s); width unchanged.
WideInt ashr(const WideInt& v, std::int64_t s);

/// v * 2^s at unchanged width; throws std::overflow_error if the exact value
/// leaves T_width (callers widen with incr first).
WideInt shl(const WideInt& v, std::int64_t s);

/// Sign-extend by b bits: same value at width + b.
WideInt incr(std::int64_t b, const WideInt& v);

/// Drop the b leftmost bits and reinterpret the remaining width-b bits as
/// two's complement. Throws std::invalid_argument if b >= width.
WideInt decr(std::int64_t b, const WideInt& v);

/// min(max(v, lo), hi); width unchanged. Requires lo <= hi.
WideInt clamp(const WideInt& v, const mpz_class& lo, const mpz_class& hi);

/// Debug dump: decimal value, width, and the two's complement bit pattern in
/// hex (most significant digits first), e.g. "-3 w=3 0x5".
std::string dump(const WideInt& v);

namespace detail {

/// x <- floor(x / 2^s). Negative s shifts left (exact).
void shift_floor(mpz_class& x, std::int64_t s);

/// Reinterpret the low w bits of x as a two's complement value of width w.
void truncate_to_width(mpz_class& x, std::int64_t w);

}  // namespace detail

}  // namespace bfpmg
