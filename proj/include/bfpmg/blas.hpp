#pragma once

#include <cstdint>

#include "bfpmg/bfp.hpp"

namespace bfpmg {

/// Mantissa width and block exponent of the exact result of a kernel, fixed
/// by its setup so that every row result is exactly representable.
struct ExactTemplate {
  std::int64_t q;
  std::int64_t e;
};

/// Scratch storage threaded through row evaluations so that inner loops do
/// not allocate.
struct KernelWorkspace {
  mpz_class t;
};

/// An exact element kernel: setup fixes the result template, row(i) produces
/// the exact integer mantissa of element i at the template exponent. Rows are
/// independent and side-effect free, so any evaluation order is valid.
class ExactKernel {
 public:
  virtual ~ExactKernel() = default;
  virtual ExactTemplate tmpl() const = 0;
  virtual std::int64_t size() const = 0;
  virtual void row(std::int64_t i, mpz_class& out, KernelWorkspace& ws) const = 0;
};

/// z_i = alpha * x_i + beta * y_i, exactly.
class EaxpbyKernel final : public ExactKernel {
 public:
  EaxpbyKernel(const BfpBlock& x, const BfpBlock& y, const BfpScalar& alpha,
               const BfpScalar& beta);

  ExactTemplate tmpl() const override { return tmpl_; }
  std::int64_t size() const override { return n_; }
  void row(std::int64_t i, mpz_class& out, KernelWorkspace& ws) const override;

  // Setup state (exposed for tests): widths/exponents of the two products and
  // the exponent alignment d = e_a - e_b.
  std::int64_t qa() const { return qa_; }
  std::int64_t qb() const { return qb_; }
  std::int64_t d() const { return d_; }

 private:
  const BfpBlock& x_;
  const BfpBlock& y_;
  BfpScalar alpha_;  // scalars are tiny; held by value to avoid lifetime traps
  BfpScalar beta_;
  std::int64_t n_;
  std::int64_t qa_, qb_, d_;
  ExactTemplate tmpl_;
};

/// z = A x, exactly, accumulating over the nonzeros of each row.
class EspmvKernel final : public ExactKernel {
 public:
  /// m_a must bound the nonzeros per row of A (defaults to the exact count).
  EspmvKernel(const BfpCsr& a, const BfpBlock& x, std::int64_t m_a = 0);

  ExactTemplate tmpl() const override { return tmpl_; }
  std::int64_t size() const override { return a_.rows(); }
  void row(std::int64_t i, mpz_class& out, KernelWorkspace& ws) const override;

 private:
  const BfpCsr& a_;
  const BfpBlock& x_;
  ExactTemplate tmpl_;
};

/// z = alpha * A x + beta * y, composed from the spmv and axpby kernels.
class EgemvKernel final : public ExactKernel {
 public:
  EgemvKernel(const BfpCsr& a, const BfpBlock& x, const BfpBlock& y, const BfpScalar& alpha,
              const BfpScalar& beta, std::int64_t m_a = 0);

  ExactTemplate tmpl() const override { return tmpl_; }
  std::int64_t size() const override { return a_.rows(); }
  void row(std::int64_t i, mpz_class& out, KernelWorkspace& ws) const override;

  const ExactTemplate& spmv_tmpl() const { return g_; }

 private:
  const BfpCsr& a_;
  const BfpBlock& x_;
  const BfpBlock& y_;
  BfpScalar alpha_;
  BfpScalar beta_;
  ExactTemplate g_;      // template of the exact A x
  std::int64_t qa_, qb_, d_;
  ExactTemplate tmpl_;
};

struct QcompFlags {
  bool overflow = false;
  bool underflow = false;
  bool recomputed = false;  // the recompute pass actually ran
};

struct QcompResult {
  BfpBlock z;
  QcompFlags flags;
};

struct QcompOptions {
  bool force_recompute = false;  // test hook: take the recompute path unconditionally
};

/// Alg.-style windowed computation: the result is normalized at width w_out
/// and every entry equals the exact value truncated toward -inf at
/// granularity 2^{e_out}, whether or not the recompute pass triggered.
QcompResult qcomp(const ExactKernel& k, std::int64_t w_out, std::int64_t w_tmp,
                  const BfpScalar& gamma, const QcompOptions& opt = {});

/// Single-pass variant: the window is fixed from gamma, entries are shifted,
/// saturated to T_{w_out}, and stored; the output may be unnormalized.
QcompResult nnqcomp(const ExactKernel& k, std::int64_t w_out, const BfpScalar& gamma);

QcompResult qaxpby(const BfpBlock& x, const BfpBlock& y, const BfpScalar& alpha,
                   const BfpScalar& beta, std::int64_t w_out, std::int64_t w_tmp,
                   const BfpScalar& gamma);
QcompResult qsub(const BfpBlock& x, const BfpBlock& y, std::int64_t w_out, std::int64_t w_tmp,
                 const BfpScalar& gamma);
QcompResult qspmv(const BfpCsr& a, const BfpBlock& x, std::int64_t w_out, std::int64_t w_tmp,
                  const BfpScalar& gamma);
QcompResult qgemv(const BfpCsr& a, const BfpBlock& x, const BfpBlock& y, const BfpScalar& alpha,
                  const BfpScalar& beta, std::int64_t w_out, std::int64_t w_tmp,
                  const BfpScalar& gamma);

QcompResult nnqaxpby(const BfpBlock& x, const BfpBlock& y, const BfpScalar& alpha,
                     const BfpScalar& beta, std::int64_t w_out, const BfpScalar& gamma);
QcompResult nnqsub(const BfpBlock& x, const BfpBlock& y, std::int64_t w_out,
                   const BfpScalar& gamma);
QcompResult nnqspmv(const BfpCsr& a, const BfpBlock& x, std::int64_t w_out,
                    const BfpScalar& gamma);
QcompResult nnqgemv(const BfpCsr& a, const BfpBlock& x, const BfpBlock& y,
                    const BfpScalar& alpha, const BfpScalar& beta, std::int64_t w_out,
                    const BfpScalar& gamma);

/// BFP scalars for the fixed coefficients 1 and -1 (q=2 resp. q=1, e=0).
BfpScalar bfp_one();
BfpScalar bfp_minus_one();

}  // namespace bfpmg
