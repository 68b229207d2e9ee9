#include "bfpmg/blas.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bfpmg {

namespace {

std::int64_t ceil_log2(std::int64_t m) {
  std::int64_t r = 0;
  std::int64_t v = 1;
  while (v < m) {
    v <<= 1;
    ++r;
  }
  return r;
}

void require_vector_pair(const BfpBlock& x, const BfpBlock& y) {
  if (x.layout() == Layout::matrix || y.layout() == Layout::matrix || x.size() != y.size())
    throw std::invalid_argument("axpby: layout mismatch");
}

void require_scalar(const BfpScalar& s) {
  if (s.layout() != Layout::scalar) throw std::invalid_argument("expected scalar block");
}

// Binade index of gamma in value space relative to exponent e_ref. Invariant
// under renormalization of gamma since msb(m) + e is value-determined.
std::int64_t gamma_window_msb(const BfpScalar& gamma, std::int64_t e_ref) {
  require_scalar(gamma);
  if (mpz_sgn(gamma.mant(0).get_mpz_t()) <= 0)
    throw std::invalid_argument("gamma must be > 0");
  return msb(gamma.mant(0)) + gamma.e() - e_ref;
}

}  // namespace

EaxpbyKernel::EaxpbyKernel(const BfpBlock& x, const BfpBlock& y, const BfpScalar& alpha,
                           const BfpScalar& beta)
    : x_(x), y_(y), alpha_(alpha), beta_(beta) {
  require_vector_pair(x, y);
  require_scalar(alpha);
  require_scalar(beta);
  n_ = static_cast<std::int64_t>(x.size());
  qa_ = alpha.q() + x.q();
  qb_ = beta.q() + y.q();
  std::int64_t ea = alpha.e() + x.e();
  std::int64_t eb = beta.e() + y.e();
  d_ = ea - eb;
  if (d_ < 0)
    tmpl_.q = std::max(qa_, qb_ - d_) + 1;
  else
    tmpl_.q = std::max(qb_, qa_ + d_) + 1;
  tmpl_.e = std::min(ea, eb);
}

void EaxpbyKernel::row(std::int64_t i, mpz_class& out, KernelWorkspace&) const {
  auto idx = static_cast<std::size_t>(i);
  if (d_ < 0) {
    // e_a < e_b: align beta*y down to e_a.
    mpz_mul(out.get_mpz_t(), beta_.mant(0).get_mpz_t(), y_.mant(idx).get_mpz_t());
    mpz_mul_2exp(out.get_mpz_t(), out.get_mpz_t(), static_cast<mp_bitcnt_t>(-d_));
    mpz_addmul(out.get_mpz_t(), alpha_.mant(0).get_mpz_t(), x_.mant(idx).get_mpz_t());
  } else {
    mpz_mul(out.get_mpz_t(), alpha_.mant(0).get_mpz_t(), x_.mant(idx).get_mpz_t());
    mpz_mul_2exp(out.get_mpz_t(), out.get_mpz_t(), static_cast<mp_bitcnt_t>(d_));
    mpz_addmul(out.get_mpz_t(), beta_.mant(0).get_mpz_t(), y_.mant(idx).get_mpz_t());
  }
}

EspmvKernel::EspmvKernel(const BfpCsr& a, const BfpBlock& x, std::int64_t m_a) : a_(a), x_(x) {
  if (a.cols() != static_cast<std::int64_t>(x.size()))
    throw std::invalid_argument("spmv: dimension mismatch");
  if (m_a == 0) m_a = a.max_row_nnz();
  if (m_a < a.max_row_nnz())
    throw std::invalid_argument("spmv: m_a below actual row nonzero count");
  tmpl_.q = a.q() + x.q() + ceil_log2(std::max<std::int64_t>(m_a, 1));
  tmpl_.e = a.e() + x.e();
}

void EspmvKernel::row(std::int64_t i, mpz_class& out, KernelWorkspace&) const {
  out = 0;
  const auto& rp = a_.rowptr();
  const auto& ci = a_.colidx();
  const auto& am = a_.mantissas();
  for (std::int64_t k = rp[static_cast<std::size_t>(i)]; k < rp[static_cast<std::size_t>(i) + 1];
       ++k) {
    mpz_addmul(out.get_mpz_t(), am[static_cast<std::size_t>(k)].get_mpz_t(),
               x_.mant(static_cast<std::size_t>(ci[static_cast<std::size_t>(k)])).get_mpz_t());
  }
}

EgemvKernel::EgemvKernel(const BfpCsr& a, const BfpBlock& x, const BfpBlock& y,
                         const BfpScalar& alpha, const BfpScalar& beta, std::int64_t m_a)
    : a_(a), x_(x), y_(y), alpha_(alpha), beta_(beta) {
  if (a.cols() != static_cast<std::int64_t>(x.size()) ||
      a.rows() != static_cast<std::int64_t>(y.size()))
    throw std::invalid_argument("gemv: dimension mismatch");
  require_scalar(alpha);
  require_scalar(beta);
  if (m_a == 0) m_a = a.max_row_nnz();
  if (m_a < a.max_row_nnz())
    throw std::invalid_argument("gemv: m_a below actual row nonzero count");
  g_.q = a.q() + x.q() + ceil_log2(std::max<std::int64_t>(m_a, 1));
  g_.e = a.e() + x.e();
  // eaxpby setup on (g, y).
  qa_ = alpha.q() + g_.q;
  qb_ = beta.q() + y.q();
  std::int64_t ea = alpha.e() + g_.e;
  std::int64_t eb = beta.e() + y.e();
  d_ = ea - eb;
  if (d_ < 0)
    tmpl_.q = std::max(qa_, qb_ - d_) + 1;
  else
    tmpl_.q = std::max(qb_, qa_ + d_) + 1;
  tmpl_.e = std::min(ea, eb);
}

void EgemvKernel::row(std::int64_t i, mpz_class& out, KernelWorkspace& ws) const {
  auto idx = static_cast<std::size_t>(i);
  mpz_class& g = ws.t;
  g = 0;
  const auto& rp = a_.rowptr();
  const auto& ci = a_.colidx();
  const auto& am = a_.mantissas();
  for (std::int64_t k = rp[idx]; k < rp[idx + 1]; ++k) {
    mpz_addmul(g.get_mpz_t(), am[static_cast<std::size_t>(k)].get_mpz_t(),
               x_.mant(static_cast<std::size_t>(ci[static_cast<std::size_t>(k)])).get_mpz_t());
  }
  if (d_ < 0) {
    mpz_mul(out.get_mpz_t(), beta_.mant(0).get_mpz_t(), y_.mant(idx).get_mpz_t());
    mpz_mul_2exp(out.get_mpz_t(), out.get_mpz_t(), static_cast<mp_bitcnt_t>(-d_));
    mpz_addmul(out.get_mpz_t(), alpha_.mant(0).get_mpz_t(), g.get_mpz_t());
  } else {
    mpz_mul(out.get_mpz_t(), alpha_.mant(0).get_mpz_t(), g.get_mpz_t());
    mpz_mul_2exp(out.get_mpz_t(), out.get_mpz_t(), static_cast<mp_bitcnt_t>(d_));
    mpz_addmul(out.get_mpz_t(), beta_.mant(0).get_mpz_t(), y_.mant(idx).get_mpz_t());
  }
}

QcompResult qcomp(const ExactKernel& k, std::int64_t w_out, std::int64_t w_tmp,
                  const BfpScalar& gamma, const QcompOptions& opt) {
  if (w_out < 1 || w_out > w_tmp) throw std::invalid_argument("qcomp: need 0 < w_out <= w_tmp");
  const ExactTemplate t = k.tmpl();
  const std::int64_t n = k.size();
  const std::int64_t mu_tmp = gamma_window_msb(gamma, t.e);
  const std::int64_t lam_tmp = mu_tmp - w_tmp;

  std::vector<mpz_class> tmp(static_cast<std::size_t>(n));
  std::int64_t mu_star = 1;
  KernelWorkspace ws;
  mpz_class z;
  for (std::int64_t i = 0; i < n; ++i) {
    k.row(i, z, ws);
    if (mpz_sgn(z.get_mpz_t()) != 0) mu_star = std::max(mu_star, msb(z));
    detail::shift_floor(z, lam_tmp);
    detail::truncate_to_width(z, w_tmp);
    tmp[static_cast<std::size_t>(i)] = z;
  }

  const std::int64_t lam_out = mu_star - w_out;
  const std::int64_t e_out = t.e + lam_out;
  QcompFlags flags;
  flags.overflow = mu_tmp < mu_star;
  flags.underflow = lam_out < lam_tmp;

  std::vector<mpz_class> out(static_cast<std::size_t>(n));
  if (flags.overflow || flags.underflow || opt.force_recompute) {
    flags.recomputed = true;
    for (std::int64_t i = 0; i < n; ++i) {
      k.row(i, z, ws);
      detail::shift_floor(z, lam_out);
      out[static_cast<std::size_t>(i)] = z;
    }
  } else {
    const std::int64_t s = lam_out - lam_tmp;  // >= 0 here
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = tmp[i];
      detail::shift_floor(out[i], s);
      detail::truncate_to_width(out[i], w_out);
    }
  }
  return {BfpBlock::vec(std::move(out), w_out, e_out), flags};
}

QcompResult nnqcomp(const ExactKernel& k, std::int64_t w_out, const BfpScalar& gamma) {
  if (w_out < 1) throw std::invalid_argument("nnqcomp: need 0 < w_out");
  const ExactTemplate t = k.tmpl();
  const std::int64_t n = k.size();
  const std::int64_t mu_out = gamma_window_msb(gamma, t.e);
  const std::int64_t lam_out = mu_out - w_out;

  const mpz_class hi = (mpz_class(1) << static_cast<unsigned long>(w_out - 1)) - 1;
  const mpz_class lo = -(mpz_class(1) << static_cast<unsigned long>(w_out - 1));

  std::vector<mpz_class> out(static_cast<std::size_t>(n));
  KernelWorkspace ws;
  mpz_class z;
  for (std::int64_t i = 0; i < n; ++i) {
    k.row(i, z, ws);
    detail::shift_floor(z, lam_out);
    if (z > hi)
      z = hi;
    else if (z < lo)
      z = lo;
    out[static_cast<std::size_t>(i)] = z;
  }
  return {BfpBlock::vec(std::move(out), w_out, t.e + lam_out), {}};
}

QcompResult qaxpby(const BfpBlock& x, const BfpBlock& y, const BfpScalar& alpha,
                   const BfpScalar& beta, std::int64_t w_out, std::int64_t w_tmp,
                   const BfpScalar& gamma) {
  return qcomp(EaxpbyKernel(x, y, alpha, beta), w_out, w_tmp, gamma);
}

QcompResult qsub(const BfpBlock& x, const BfpBlock& y, std::int64_t w_out, std::int64_t w_tmp,
                 const BfpScalar& gamma) {
  return qcomp(EaxpbyKernel(x, y, bfp_one(), bfp_minus_one()), w_out, w_tmp, gamma);
}

QcompResult qspmv(const BfpCsr& a, const BfpBlock& x, std::int64_t w_out, std::int64_t w_tmp,
                  const BfpScalar& gamma) {
  return qcomp(EspmvKernel(a, x), w_out, w_tmp, gamma);
}

QcompResult qgemv(const BfpCsr& a, const BfpBlock& x, const BfpBlock& y, const BfpScalar& alpha,
                  const BfpScalar& beta, std::int64_t w_out, std::int64_t w_tmp,
                  const BfpScalar& gamma) {
  return qcomp(EgemvKernel(a, x, y, alpha, beta), w_out, w_tmp, gamma);
}

QcompResult nnqaxpby(const BfpBlock& x, const BfpBlock& y, const BfpScalar& alpha,
                     const BfpScalar& beta, std::int64_t w_out, const BfpScalar& gamma) {
  return nnqcomp(EaxpbyKernel(x, y, alpha, beta), w_out, gamma);
}

QcompResult nnqsub(const BfpBlock& x, const BfpBlock& y, std::int64_t w_out,
                   const BfpScalar& gamma) {
  return nnqcomp(EaxpbyKernel(x, y, bfp_one(), bfp_minus_one()), w_out, gamma);
}

QcompResult nnqspmv(const BfpCsr& a, const BfpBlock& x, std::int64_t w_out,
                    const BfpScalar& gamma) {
  return nnqcomp(EspmvKernel(a, x), w_out, gamma);
}

QcompResult nnqgemv(const BfpCsr& a, const BfpBlock& x, const BfpBlock& y,
                    const BfpScalar& alpha, const BfpScalar& beta, std::int64_t w_out,
                    const BfpScalar& gamma) {
  return nnqcomp(EgemvKernel(a, x, y, alpha, beta), w_out, gamma);
}

BfpScalar bfp_one() { return BfpBlock::scalar_raw(mpz_class(1), 2, 0); }
BfpScalar bfp_minus_one() { return BfpBlock::scalar_raw(mpz_class(-1), 1, 0); }

}  // namespace bfpmg
