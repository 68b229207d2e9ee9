#pragma once

// Rational reference computations for checking the integer kernels. These
// work on exact mpq/mpz values and deliberately avoid the BFP kernel code
// paths: values are reconstructed from raw mantissas and exponents, results
// are computed in unbounded rational arithmetic, and expected outputs are
// derived by floor division at the window granularity.

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include <gmpxx.h>

#include "bfpmg/bfp.hpp"

namespace oracle {

inline mpq_class pow2q(std::int64_t e) {
  if (e >= 0) return mpq_class(mpz_class(1) << static_cast<unsigned long>(e));
  mpq_class r(1, mpz_class(1) << static_cast<unsigned long>(-e));
  r.canonicalize();
  return r;
}

inline mpq_class value_of(const bfpmg::BfpBlock& b, std::size_t i) {
  return mpq_class(b.mant(i)) * pow2q(b.e());
}

inline std::vector<mpq_class> values_of(const bfpmg::BfpBlock& b) {
  std::vector<mpq_class> r;
  for (std::size_t i = 0; i < b.size(); ++i) r.push_back(value_of(b, i));
  return r;
}

// Minimal two's complement width of an integer (msb(0) = 1).
inline std::int64_t int_msb(const mpz_class& v) {
  if (v == 0) return 1;
  if (v > 0) return static_cast<std::int64_t>(mpz_sizeinbase(v.get_mpz_t(), 2)) + 1;
  mpz_class t = -v - 1;
  if (t == 0) return 1;
  return static_cast<std::int64_t>(mpz_sizeinbase(t.get_mpz_t(), 2)) + 1;
}

// Binade index of a nonzero dyadic rational: int_msb(m) + e for any exact
// representation v = m * 2^e.
inline std::int64_t binade(const mpq_class& v) {
  mpz_class den = v.get_den();
  std::int64_t k = static_cast<std::int64_t>(mpz_sizeinbase(den.get_mpz_t(), 2)) - 1;
  return int_msb(v.get_num()) - k;
}

// floor(v / 2^e) for a dyadic rational v.
inline mpz_class floor_div_pow2(const mpq_class& v, std::int64_t e) {
  mpz_class num = v.get_num();
  mpz_class den = v.get_den();
  if (e >= 0)
    den <<= static_cast<unsigned long>(e);
  else
    num <<= static_cast<unsigned long>(-e);
  mpz_class q;
  mpz_fdiv_q(q.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
  return q;
}

struct WindowExpect {
  std::vector<mpz_class> m;
  std::int64_t e_out;
};

// Expected normalized windowed result: exact rows truncated toward -inf to
// w_out bits anchored at the max binade (zero vectors anchor at e_zstar + 1).
inline WindowExpect window_truncate(const std::vector<mpq_class>& rows, std::int64_t e_zstar,
                                    std::int64_t w_out) {
  std::int64_t top = INT64_MIN;
  for (const auto& v : rows)
    if (v != 0) top = std::max(top, binade(v));
  if (top == INT64_MIN) top = e_zstar + 1;
  WindowExpect r;
  r.e_out = top - w_out;
  r.m.reserve(rows.size());
  for (const auto& v : rows) r.m.push_back(floor_div_pow2(v, r.e_out));
  return r;
}

inline std::vector<mpq_class> axpby(const mpq_class& alpha, const std::vector<mpq_class>& x,
                                    const mpq_class& beta, const std::vector<mpq_class>& y) {
  std::vector<mpq_class> r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) r[i] = alpha * x[i] + beta * y[i];
  return r;
}

inline std::vector<mpq_class> spmv(const bfpmg::BfpCsr& a, const std::vector<mpq_class>& x) {
  std::vector<mpq_class> r(static_cast<std::size_t>(a.rows()), mpq_class(0));
  mpq_class ea = pow2q(a.e());
  for (std::int64_t i = 0; i < a.rows(); ++i) {
    for (std::int64_t k = a.rowptr()[static_cast<std::size_t>(i)];
         k < a.rowptr()[static_cast<std::size_t>(i) + 1]; ++k) {
      r[static_cast<std::size_t>(i)] +=
          mpq_class(a.mantissas()[static_cast<std::size_t>(k)]) * ea *
          x[static_cast<std::size_t>(a.colidx()[static_cast<std::size_t>(k)])];
    }
  }
  return r;
}

// Deterministic random generators shared by the property tests.
struct Rng {
  std::mt19937_64 g;
  explicit Rng(std::uint64_t seed) : g(seed) {}

  std::int64_t uniform(std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(g);
  }

  // Uniform element of T_w.
  mpz_class in_width(std::int64_t w) {
    mpz_class hi = (mpz_class(1) << static_cast<unsigned long>(w - 1));
    mpz_class span = 2 * hi;  // |T_w|
    mpz_class r = 0;
    std::int64_t bits = w;
    while (bits > 0) {
      r = (r << 32) + mpz_class(static_cast<unsigned long>(g() & 0xffffffffull));
      bits -= 32;
    }
    mpz_class m;
    mpz_fdiv_r(m.get_mpz_t(), r.get_mpz_t(), span.get_mpz_t());
    return m - hi;
  }

  bfpmg::BfpBlock random_vec(std::int64_t n, std::int64_t q, std::int64_t e_lo = -8,
                             std::int64_t e_hi = 8, bool normalized = true) {
    std::vector<mpz_class> m(static_cast<std::size_t>(n));
    for (auto& v : m) v = in_width(q);
    auto b = bfpmg::BfpBlock::vec(std::move(m), q, uniform(e_lo, e_hi));
    return normalized ? bfpmg::normalize(b) : b;
  }

  // Random sparse CSR block with <= max_nnz nonzero slots per row.
  bfpmg::BfpCsr random_csr(std::int64_t rows, std::int64_t cols, std::int64_t max_nnz,
                           std::int64_t q, std::int64_t e_lo = -8, std::int64_t e_hi = 8) {
    std::vector<std::int64_t> rowptr{0}, col;
    std::vector<mpz_class> m;
    for (std::int64_t i = 0; i < rows; ++i) {
      std::int64_t nnz = uniform(0, std::min(max_nnz, cols));
      std::vector<std::int64_t> picks;
      while (static_cast<std::int64_t>(picks.size()) < nnz) {
        std::int64_t c = uniform(0, cols - 1);
        bool dup = false;
        for (auto p : picks) dup |= (p == c);
        if (!dup) picks.push_back(c);
      }
      std::sort(picks.begin(), picks.end());
      for (auto c : picks) {
        col.push_back(c);
        m.push_back(in_width(q));
      }
      rowptr.push_back(static_cast<std::int64_t>(col.size()));
    }
    return bfpmg::BfpCsr(rows, cols, std::move(rowptr), std::move(col), std::move(m), q,
                         uniform(e_lo, e_hi));
  }

  // Normalized positive scalar whose value-space msb window is `window`
  // binades above 2^0, i.e. binade(value) = window.
  bfpmg::BfpScalar gamma_with_binade(std::int64_t window, std::int64_t q = 16) {
    // m in [2^{q-2}, 2^{q-1}-1] keeps the scalar normalized at width q.
    mpz_class lo = mpz_class(1) << static_cast<unsigned long>(q - 2);
    mpz_class m = lo + mpz_class(static_cast<unsigned long>(g() % lo.get_ui()));
    return bfpmg::BfpBlock::scalar_raw(m, q, window - q);
  }
};

}  // namespace oracle
