#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bfpmg/extfloat.hpp"
#include "bfpmg/wideint.hpp"

namespace bfpmg {

enum class Layout { scalar, vector, matrix };

/// Block floating point tensor: a block of two's complement mantissas of
/// uniform width q sharing one exponent e. The represented values are exactly
/// 2^e * m_i. A scalar is a block with a single entry.
class BfpBlock {
 public:
  BfpBlock() : q_(1), e_(0), layout_(Layout::scalar), rows_(1), cols_(1), m_(1) {}

  static BfpBlock scalar(const WideInt& m, std::int64_t e);
  static BfpBlock scalar_raw(mpz_class m, std::int64_t q, std::int64_t e);
  static BfpBlock vec(std::vector<mpz_class> m, std::int64_t q, std::int64_t e);
  static BfpBlock zero_vec(std::int64_t n, std::int64_t q);
  static BfpBlock dense(std::vector<mpz_class> m, std::int64_t rows, std::int64_t cols,
                        std::int64_t q, std::int64_t e);

  std::int64_t q() const { return q_; }
  std::int64_t e() const { return e_; }
  Layout layout() const { return layout_; }
  std::int64_t rows() const { return rows_; }
  std::int64_t cols() const { return cols_; }
  std::size_t size() const { return m_.size(); }

  const mpz_class& mant(std::size_t i) const { return m_[i]; }
  const std::vector<mpz_class>& mantissas() const { return m_; }
  WideInt get(std::size_t i) const { return WideInt(m_[i], q_); }
  /// Exact value 2^e * m_i.
  mpq_class rational(std::size_t i) const;

  bool is_zero() const;
  bool is_normalized() const;

  /// Same mantissas at a new width; values must fit T_w.
  BfpBlock with_width(std::int64_t w) const;

  friend BfpBlock normalize(const BfpBlock& x);
  friend BfpBlock quantize(const BfpBlock& x, std::int64_t w);

 private:
  std::int64_t q_, e_;
  Layout layout_;
  std::int64_t rows_, cols_;
  std::vector<mpz_class> m_;
};

using BfpScalar = BfpBlock;

/// Sparse matrix block (CSR over the nonzero structure); all stored mantissas
/// share the exponent and width like any other block.
class BfpCsr {
 public:
  BfpCsr() : q_(1), e_(0), rows_(0), cols_(0), max_row_nnz_(0) {}
  BfpCsr(std::int64_t rows, std::int64_t cols, std::vector<std::int64_t> rowptr,
         std::vector<std::int64_t> col, std::vector<mpz_class> m, std::int64_t q,
         std::int64_t e);

  std::int64_t q() const { return q_; }
  std::int64_t e() const { return e_; }
  std::int64_t rows() const { return rows_; }
  std::int64_t cols() const { return cols_; }
  std::int64_t max_row_nnz() const { return max_row_nnz_; }
  const std::vector<std::int64_t>& rowptr() const { return rowptr_; }
  const std::vector<std::int64_t>& colidx() const { return col_; }
  const std::vector<mpz_class>& mantissas() const { return m_; }

 private:
  std::int64_t q_, e_;
  std::int64_t rows_, cols_;
  std::vector<std::int64_t> rowptr_, col_;
  std::vector<mpz_class> m_;
  std::int64_t max_row_nnz_;
};

/// Value-preserving representation with minimal exponent for the block's
/// width. A zero block gets the canonical exponent 0.
BfpBlock normalize(const BfpBlock& x);

/// Exact entries truncated toward -inf at the coarsest granularity that makes
/// the result normalized at width w: |x_i - quantize(x,w)_i| < 2^{e_out}.
BfpBlock quantize(const BfpBlock& x, std::int64_t w);

/// Normalized positive scalar >= max_i |x_i|, rounded up to q_gamma mantissa
/// bits (exact whenever the max fits). A zero block yields the block's
/// quantum 2^{e_x} so the result stays strictly positive.
BfpScalar inf_norm_upper(const BfpBlock& x, std::int64_t q_gamma = 16);

/// epsilon = 2^{-(q-1)}.
mpq_class epsilon_of(std::int64_t q);

std::vector<mpq_class> to_rational(const BfpBlock& x);

/// Quantize exact scaled-integer values v_i = z_i * 2^{k_i} into a normalized
/// block of width w (floor rounding). The shared building block behind
/// from_extfloat and the matrix quantizers.
BfpBlock quantize_exact(std::span<const mpz_class> z, std::span<const std::int64_t> k,
                        std::int64_t w, Layout layout, std::int64_t rows, std::int64_t cols);

BfpBlock from_extfloat(std::span<const ExtFloat> v, std::int64_t w);
BfpBlock from_rationals(std::span<const mpq_class> v, std::int64_t w);

ExtFloat to_extfloat(const BfpBlock& x, std::size_t i, mpfr_prec_t prec);
std::vector<ExtFloat> to_extfloat_vec(const BfpBlock& x, mpfr_prec_t prec);

/// Block dump format used by test fixtures: header "q e d" (d one of
/// "scalar", "<n>", "<n>x<m>") followed by one decimal mantissa per line.
std::string dump_block(const BfpBlock& x);
BfpBlock parse_block(const std::string& text);

/// Exact infinity norm of the represented values as a rational.
mpq_class inf_norm_exact(const BfpBlock& x);

}  // namespace bfpmg
