#include "bfpmg/extfloat.hpp"

#include <algorithm>
#include <cstdio>
#include <vector>

namespace bfpmg {

namespace {
mpfr_prec_t join_prec(const ExtFloat& a, const ExtFloat& b) {
  return std::max(a.prec(), b.prec());
}
}  // namespace

ExtFloat ExtFloat::from_mpz_2exp(const mpz_class& z, std::int64_t e, mpfr_prec_t prec) {
  ExtFloat r(prec);
  mpfr_set_z_2exp(r.v_, z.get_mpz_t(), static_cast<mpfr_exp_t>(e), MPFR_RNDN);
  return r;
}

ExtFloat ExtFloat::from_mpq(const mpq_class& q, mpfr_prec_t prec) {
  ExtFloat r(prec);
  mpfr_set_q(r.v_, q.get_mpq_t(), MPFR_RNDN);
  return r;
}

mpq_class ExtFloat::to_mpq() const {
  mpq_class q;
  mpfr_get_q(q.get_mpq_t(), v_);
  return q;
}

void ExtFloat::to_mpz_2exp(mpz_class& z, std::int64_t& e) const {
  if (is_zero()) {
    z = 0;
    e = 0;
    return;
  }
  e = static_cast<std::int64_t>(mpfr_get_z_2exp(z.get_mpz_t(), v_));
}

ExtFloat& ExtFloat::operator+=(const ExtFloat& o) {
  mpfr_add(v_, v_, o.v_, MPFR_RNDN);
  return *this;
}
ExtFloat& ExtFloat::operator-=(const ExtFloat& o) {
  mpfr_sub(v_, v_, o.v_, MPFR_RNDN);
  return *this;
}
ExtFloat& ExtFloat::operator*=(const ExtFloat& o) {
  mpfr_mul(v_, v_, o.v_, MPFR_RNDN);
  return *this;
}
ExtFloat& ExtFloat::operator/=(const ExtFloat& o) {
  mpfr_div(v_, v_, o.v_, MPFR_RNDN);
  return *this;
}

ExtFloat ExtFloat::operator-() const {
  ExtFloat r(prec());
  mpfr_neg(r.v_, v_, MPFR_RNDN);
  return r;
}

std::string ExtFloat::str(int digits) const {
  char fmt[32];
  std::snprintf(fmt, sizeof fmt, "%%.%dRg", digits);
  char* out = nullptr;
  mpfr_asprintf(&out, fmt, v_);
  std::string s(out);
  mpfr_free_str(out);
  return s;
}

ExtFloat operator+(const ExtFloat& a, const ExtFloat& b) {
  ExtFloat r(join_prec(a, b));
  mpfr_add(r.get(), a.get(), b.get(), MPFR_RNDN);
  return r;
}
ExtFloat operator-(const ExtFloat& a, const ExtFloat& b) {
  ExtFloat r(join_prec(a, b));
  mpfr_sub(r.get(), a.get(), b.get(), MPFR_RNDN);
  return r;
}
ExtFloat operator*(const ExtFloat& a, const ExtFloat& b) {
  ExtFloat r(join_prec(a, b));
  mpfr_mul(r.get(), a.get(), b.get(), MPFR_RNDN);
  return r;
}
ExtFloat operator/(const ExtFloat& a, const ExtFloat& b) {
  ExtFloat r(join_prec(a, b));
  mpfr_div(r.get(), a.get(), b.get(), MPFR_RNDN);
  return r;
}

ExtFloat ext_abs(const ExtFloat& a) {
  ExtFloat r(a.prec());
  mpfr_abs(r.get(), a.get(), MPFR_RNDN);
  return r;
}
ExtFloat ext_sqrt(const ExtFloat& a) {
  ExtFloat r(a.prec());
  mpfr_sqrt(r.get(), a.get(), MPFR_RNDN);
  return r;
}
ExtFloat ext_sin(const ExtFloat& a) {
  ExtFloat r(a.prec());
  mpfr_sin(r.get(), a.get(), MPFR_RNDN);
  return r;
}
ExtFloat ext_cos(const ExtFloat& a) {
  ExtFloat r(a.prec());
  mpfr_cos(r.get(), a.get(), MPFR_RNDN);
  return r;
}
ExtFloat ext_min(const ExtFloat& a, const ExtFloat& b) { return a < b ? a : b; }
ExtFloat ext_max(const ExtFloat& a, const ExtFloat& b) { return a > b ? a : b; }

ExtFloat ext_pi(mpfr_prec_t prec) {
  ExtFloat r(prec);
  mpfr_const_pi(r.get(), MPFR_RNDN);
  return r;
}

ExtFloat ext_scale2(const ExtFloat& a, std::int64_t k) {
  ExtFloat r(a.prec());
  mpfr_mul_2si(r.get(), a.get(), static_cast<long>(k), MPFR_RNDN);
  return r;
}

ExtFloat add_up(const ExtFloat& a, const ExtFloat& b) {
  ExtFloat r(join_prec(a, b));
  mpfr_add(r.get(), a.get(), b.get(), MPFR_RNDU);
  return r;
}
ExtFloat mul_up(const ExtFloat& a, const ExtFloat& b) {
  ExtFloat r(join_prec(a, b));
  mpfr_mul(r.get(), a.get(), b.get(), MPFR_RNDU);
  return r;
}

}  // namespace bfpmg
