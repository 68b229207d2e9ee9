#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include <gmpxx.h>
#include <mpfr.h>

namespace bfpmg {

/// Binary floating point value with a configurable mantissa width (default
/// 400 bits), correctly rounded at that width. Thin RAII wrapper over MPFR.
/// Binary operations round to the wider of the two operand precisions.
class ExtFloat {
 public:
  static constexpr mpfr_prec_t kDefaultPrec = 400;

  explicit ExtFloat(mpfr_prec_t prec = kDefaultPrec) {
    mpfr_init2(v_, prec);
    mpfr_set_zero(v_, 1);
  }
  ExtFloat(double value, mpfr_prec_t prec) {
    mpfr_init2(v_, prec);
    mpfr_set_d(v_, value, MPFR_RNDN);
  }
  ExtFloat(long value, mpfr_prec_t prec) {
    mpfr_init2(v_, prec);
    mpfr_set_si(v_, value, MPFR_RNDN);
  }
  ExtFloat(int value, mpfr_prec_t prec) : ExtFloat(static_cast<long>(value), prec) {}
  ExtFloat(const ExtFloat& o) {
    mpfr_init2(v_, mpfr_get_prec(o.v_));
    mpfr_set(v_, o.v_, MPFR_RNDN);
  }
  ExtFloat(ExtFloat&& o) noexcept {
    mpfr_init2(v_, mpfr_get_prec(o.v_));
    mpfr_swap(v_, o.v_);
  }
  ExtFloat& operator=(const ExtFloat& o) {
    if (this != &o) {
      mpfr_set_prec(v_, mpfr_get_prec(o.v_));
      mpfr_set(v_, o.v_, MPFR_RNDN);
    }
    return *this;
  }
  ExtFloat& operator=(ExtFloat&& o) noexcept {
    if (this != &o) mpfr_swap(v_, o.v_);
    return *this;
  }
  ~ExtFloat() { mpfr_clear(v_); }

  static ExtFloat from_mpz_2exp(const mpz_class& z, std::int64_t e, mpfr_prec_t prec);
  static ExtFloat from_mpq(const mpq_class& q, mpfr_prec_t prec);

  mpfr_srcptr get() const { return v_; }
  mpfr_ptr get() { return v_; }
  mpfr_prec_t prec() const { return mpfr_get_prec(v_); }

  double to_double() const { return mpfr_get_d(v_, MPFR_RNDN); }
  mpq_class to_mpq() const;  // exact
  /// Exact decomposition v = z * 2^e for v != 0; z = 0, e = 0 for v == 0.
  void to_mpz_2exp(mpz_class& z, std::int64_t& e) const;

  bool is_zero() const { return mpfr_zero_p(v_) != 0; }
  int sign() const { return mpfr_sgn(v_); }

  ExtFloat& operator+=(const ExtFloat& o);
  ExtFloat& operator-=(const ExtFloat& o);
  ExtFloat& operator*=(const ExtFloat& o);
  ExtFloat& operator/=(const ExtFloat& o);
  ExtFloat operator-() const;

  std::string str(int digits = 25) const;

 private:
  mpfr_t v_;
};

ExtFloat operator+(const ExtFloat& a, const ExtFloat& b);
ExtFloat operator-(const ExtFloat& a, const ExtFloat& b);
ExtFloat operator*(const ExtFloat& a, const ExtFloat& b);
ExtFloat operator/(const ExtFloat& a, const ExtFloat& b);

inline bool operator<(const ExtFloat& a, const ExtFloat& b) { return mpfr_less_p(a.get(), b.get()); }
inline bool operator>(const ExtFloat& a, const ExtFloat& b) { return mpfr_greater_p(a.get(), b.get()); }
inline bool operator<=(const ExtFloat& a, const ExtFloat& b) { return mpfr_lessequal_p(a.get(), b.get()); }
inline bool operator>=(const ExtFloat& a, const ExtFloat& b) { return mpfr_greaterequal_p(a.get(), b.get()); }
inline bool operator==(const ExtFloat& a, const ExtFloat& b) { return mpfr_equal_p(a.get(), b.get()); }
inline bool operator!=(const ExtFloat& a, const ExtFloat& b) { return !mpfr_equal_p(a.get(), b.get()); }

ExtFloat ext_abs(const ExtFloat& a);
ExtFloat ext_sqrt(const ExtFloat& a);
ExtFloat ext_sin(const ExtFloat& a);
ExtFloat ext_cos(const ExtFloat& a);
ExtFloat ext_min(const ExtFloat& a, const ExtFloat& b);
ExtFloat ext_max(const ExtFloat& a, const ExtFloat& b);
ExtFloat ext_pi(mpfr_prec_t prec);
/// a * 2^k, exact.
ExtFloat ext_scale2(const ExtFloat& a, std::int64_t k);

/// Directed-rounding helpers for upper-bound (gamma) chains.
ExtFloat add_up(const ExtFloat& a, const ExtFloat& b);
ExtFloat mul_up(const ExtFloat& a, const ExtFloat& b);

}  // namespace bfpmg
