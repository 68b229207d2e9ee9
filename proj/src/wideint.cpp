#include "bfpmg/wideint.hpp"

#include <algorithm>
#include <sstream>

namespace bfpmg {

bool fits_width(const mpz_class& v, std::int64_t w) {
  if (w < 1) return false;
  // T_w = [-2^(w-1), 2^(w-1)-1]
  mpz_class hi = mpz_class(1) << static_cast<unsigned long>(w - 1);
  return v >= -hi && v < hi;
}

std::int64_t msb(const mpz_class& v) {
  int sign = mpz_sgn(v.get_mpz_t());
  if (sign == 0) return 1;
  if (sign > 0) {
    return static_cast<std::int64_t>(mpz_sizeinbase(v.get_mpz_t(), 2)) + 1;
  }
  // v < 0: minimal w with v >= -2^(w-1), i.e. bits(|v| - 1) + 1.
  mpz_class t = -v - 1;
  if (t == 0) return 1;
  return static_cast<std::int64_t>(mpz_sizeinbase(t.get_mpz_t(), 2)) + 1;
}

WideInt::WideInt(mpz_class value, std::int64_t width) : v_(std::move(value)), width_(width) {
  if (width_ < 1) throw std::invalid_argument("WideInt: width must be >= 1");
  if (!fits_width(v_, width_))
    throw std::domain_error("WideInt: value does not fit T_" + std::to_string(width_));
}

WideInt add(const WideInt& a, const WideInt& b) {
  return WideInt(a.value() + b.value(), std::max(a.width(), b.width()) + 1);
}

WideInt sub(const WideInt& a, const WideInt& b) {
  return WideInt(a.value() - b.value(), std::max(a.width(), b.width()) + 1);
}

WideInt mul(const WideInt& a, const WideInt& b) {
  return WideInt(a.value() * b.value(), a.width() + b.width());
}

WideInt ashr(const WideInt& v, std::int64_t s) {
  if (s < 0) throw std::invalid_argument("ashr: negative shift");
  mpz_class r;
  mpz_fdiv_q_2exp(r.get_mpz_t(), v.value().get_mpz_t(), static_cast<mp_bitcnt_t>(s));
  return WideInt(std::move(r), v.width());
}

WideInt shl(const WideInt& v, std::int64_t s) {
  if (s < 0) throw std::invalid_argument("shl: negative shift");
  mpz_class r;
  mpz_mul_2exp(r.get_mpz_t(), v.value().get_mpz_t(), static_cast<mp_bitcnt_t>(s));
  if (!fits_width(r, v.width()))
    throw std::overflow_error("shl: result leaves T_" + std::to_string(v.width()));
  return WideInt(std::move(r), v.width());
}

WideInt incr(std::int64_t b, const WideInt& v) {
  if (b < 0) throw std::invalid_argument("incr: negative bit count");
  return WideInt(v.value(), v.width() + b);
}

WideInt decr(std::int64_t b, const WideInt& v) {
  if (b < 0) throw std::invalid_argument("decr: negative bit count");
  if (b >= v.width()) throw std::invalid_argument("decr: bit count >= width");
  mpz_class r = v.value();
  detail::truncate_to_width(r, v.width() - b);
  return WideInt(std::move(r), v.width() - b);
}

WideInt clamp(const WideInt& v, const mpz_class& lo, const mpz_class& hi) {
  if (lo > hi) throw std::invalid_argument("clamp: lo > hi");
  if (v.value() < lo) return WideInt(lo, v.width());
  if (v.value() > hi) return WideInt(hi, v.width());
  return v;
}

std::string dump(const WideInt& v) {
  mpz_class bits = v.value();
  if (bits < 0) bits += mpz_class(1) << static_cast<unsigned long>(v.width());
  std::string hex = bits.get_str(16);
  std::size_t digits = static_cast<std::size_t>((v.width() + 3) / 4);
  if (hex.size() < digits) hex.insert(0, digits - hex.size(), '0');
  std::ostringstream os;
  os << v.value() << " w=" << v.width() << " 0x" << hex;
  return os.str();
}

namespace detail {

void shift_floor(mpz_class& x, std::int64_t s) {
  if (s > 0) {
    mpz_fdiv_q_2exp(x.get_mpz_t(), x.get_mpz_t(), static_cast<mp_bitcnt_t>(s));
  } else if (s < 0) {
    mpz_mul_2exp(x.get_mpz_t(), x.get_mpz_t(), static_cast<mp_bitcnt_t>(-s));
  }
}

void truncate_to_width(mpz_class& x, std::int64_t w) {
  mpz_fdiv_r_2exp(x.get_mpz_t(), x.get_mpz_t(), static_cast<mp_bitcnt_t>(w));
  // mpz_fdiv_r_2exp yields the nonnegative residue; fold the sign bit back in.
  if (mpz_tstbit(x.get_mpz_t(), static_cast<mp_bitcnt_t>(w - 1)))
    x -= mpz_class(1) << static_cast<unsigned long>(w);
}

}  // namespace detail

}  // namespace bfpmg
