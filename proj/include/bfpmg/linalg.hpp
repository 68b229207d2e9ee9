#pragma once

#include <cstdint>
#include <vector>

#include "bfpmg/extfloat.hpp"

namespace bfpmg {

using VecX = std::vector<ExtFloat>;

VecX vecx(std::int64_t n, mpfr_prec_t prec);

/// Sparse matrix with ExtFloat entries (CSR).
struct CsrExt {
  std::int64_t rows = 0, cols = 0;
  std::vector<std::int64_t> rowptr{0};
  std::vector<std::int64_t> col;
  VecX val;

  std::int64_t max_row_nnz() const;
  ExtFloat at(std::int64_t i, std::int64_t j, mpfr_prec_t prec) const;
};

/// acc += a * b, in place, correctly rounded once.
void fma_acc(ExtFloat& acc, const ExtFloat& a, const ExtFloat& b);

void spmv(const CsrExt& a, const VecX& x, VecX& y);
VecX spmv(const CsrExt& a, const VecX& x, mpfr_prec_t prec);
ExtFloat dot(const VecX& a, const VecX& b);
ExtFloat inf_norm(const VecX& a);
ExtFloat two_norm(const VecX& a);
void axpy(VecX& y, const ExtFloat& alpha, const VecX& x);  // y += alpha x
void scale(VecX& y, const ExtFloat& alpha);
/// x^T A x.
ExtFloat quad_form(const CsrExt& a, const VecX& x);
/// sqrt(d^T A d) with d = x - y.
ExtFloat a_norm_diff(const CsrExt& a, const VecX& x, const VecX& y);

CsrExt csr_transpose(const CsrExt& a);
VecX csr_diag(const CsrExt& a, mpfr_prec_t prec);
/// max_i sum_j |a_ij| (rounded up).
ExtFloat csr_inf_norm_up(const CsrExt& a);
CsrExt csr_abs(const CsrExt& a);

/// Banded Cholesky factorization of an SPD matrix given as CSR. Bandwidth is
/// taken from the sparsity pattern.
class BandedCholesky {
 public:
  BandedCholesky(const CsrExt& a, mpfr_prec_t prec);

  std::int64_t n() const { return n_; }
  std::int64_t bw() const { return bw_; }

  void solve(VecX& b) const;    // b <- A^{-1} b
  void forward(VecX& b) const;  // b <- L^{-1} b
  /// (A^{-1})_{ii} = ||L^{-1} e_i||^2, exploiting that the forward solve of
  /// e_i only touches indices >= i.
  ExtFloat inv_diag_entry(std::int64_t i) const;

 private:
  ExtFloat& l(std::int64_t i, std::int64_t j) { return a_[static_cast<std::size_t>(i * (bw_ + 1) + (j - i + bw_))]; }
  const ExtFloat& l(std::int64_t i, std::int64_t j) const { return a_[static_cast<std::size_t>(i * (bw_ + 1) + (j - i + bw_))]; }

  std::int64_t n_, bw_;
  mpfr_prec_t prec_;
  VecX a_;  // packed lower band, row-major: entry (i, j) at i*(bw+1) + j-i+bw
};

/// Conjugate gradients to ||b - A x||_inf <= tol_abs; the true residual is
/// recomputed periodically so the stopping test never trusts the recurrence.
VecX cg_solve(const CsrExt& a, const VecX& b, const ExtFloat& tol_abs, std::int64_t max_iter,
              mpfr_prec_t prec);

/// Largest eigenvalue estimate of the pencil A x = lambda D x (A SPD, D
/// positive diagonal) by power iteration on D^{-1} A, Rayleigh quotients in
/// the D inner product.
ExtFloat power_max_gen(const CsrExt& a, const VecX& d, mpfr_prec_t prec,
                       std::int64_t max_iter = 400, double rel_tol = 1e-12);

/// Largest eigenvalue estimate of a symmetric A by power iteration.
ExtFloat power_max(const CsrExt& a, mpfr_prec_t prec, std::int64_t max_iter = 400,
                   double rel_tol = 1e-12);

/// Largest eigenvalue estimate of A^{-1} via the prefactored Cholesky.
ExtFloat power_max_inv(const BandedCholesky& chol, mpfr_prec_t prec,
                       std::int64_t max_iter = 400, double rel_tol = 1e-12);

}  // namespace bfpmg
