#include "bfpmg/linalg.hpp"

#include <algorithm>
#include <stdexcept>

namespace bfpmg {

VecX vecx(std::int64_t n, mpfr_prec_t prec) {
  return VecX(static_cast<std::size_t>(n), ExtFloat(prec));
}

std::int64_t CsrExt::max_row_nnz() const {
  std::int64_t m = 0;
  for (std::int64_t i = 0; i < rows; ++i)
    m = std::max(m, rowptr[static_cast<std::size_t>(i) + 1] - rowptr[static_cast<std::size_t>(i)]);
  return m;
}

ExtFloat CsrExt::at(std::int64_t i, std::int64_t j, mpfr_prec_t prec) const {
  for (std::int64_t k = rowptr[static_cast<std::size_t>(i)];
       k < rowptr[static_cast<std::size_t>(i) + 1]; ++k)
    if (col[static_cast<std::size_t>(k)] == j) return val[static_cast<std::size_t>(k)];
  return ExtFloat(prec);
}

void fma_acc(ExtFloat& acc, const ExtFloat& a, const ExtFloat& b) {
  mpfr_fma(acc.get(), a.get(), b.get(), acc.get(), MPFR_RNDN);
}

void spmv(const CsrExt& a, const VecX& x, VecX& y) {
  for (std::int64_t i = 0; i < a.rows; ++i) {
    auto& yi = y[static_cast<std::size_t>(i)];
    mpfr_set_zero(yi.get(), 1);
    for (std::int64_t k = a.rowptr[static_cast<std::size_t>(i)];
         k < a.rowptr[static_cast<std::size_t>(i) + 1]; ++k)
      fma_acc(yi, a.val[static_cast<std::size_t>(k)],
              x[static_cast<std::size_t>(a.col[static_cast<std::size_t>(k)])]);
  }
}

VecX spmv(const CsrExt& a, const VecX& x, mpfr_prec_t prec) {
  VecX y = vecx(a.rows, prec);
  spmv(a, x, y);
  return y;
}

ExtFloat dot(const VecX& a, const VecX& b) {
  ExtFloat s(a.empty() ? ExtFloat::kDefaultPrec : a[0].prec());
  for (std::size_t i = 0; i < a.size(); ++i) fma_acc(s, a[i], b[i]);
  return s;
}

ExtFloat inf_norm(const VecX& a) {
  ExtFloat m(a.empty() ? ExtFloat::kDefaultPrec : a[0].prec());
  for (const auto& v : a) {
    ExtFloat av = ext_abs(v);
    if (av > m) m = av;
  }
  return m;
}

ExtFloat two_norm(const VecX& a) { return ext_sqrt(dot(a, a)); }

void axpy(VecX& y, const ExtFloat& alpha, const VecX& x) {
  for (std::size_t i = 0; i < y.size(); ++i) fma_acc(y[i], alpha, x[i]);
}

void scale(VecX& y, const ExtFloat& alpha) {
  for (auto& v : y) v *= alpha;
}

ExtFloat quad_form(const CsrExt& a, const VecX& x) {
  VecX ax = spmv(a, x, x.empty() ? ExtFloat::kDefaultPrec : x[0].prec());
  return dot(x, ax);
}

ExtFloat a_norm_diff(const CsrExt& a, const VecX& x, const VecX& y) {
  VecX d = x;
  for (std::size_t i = 0; i < d.size(); ++i) d[i] -= y[i];
  return ext_sqrt(quad_form(a, d));
}

CsrExt csr_transpose(const CsrExt& a) {
  CsrExt t;
  t.rows = a.cols;
  t.cols = a.rows;
  std::vector<std::int64_t> cnt(static_cast<std::size_t>(a.cols), 0);
  for (auto c : a.col) ++cnt[static_cast<std::size_t>(c)];
  t.rowptr.assign(static_cast<std::size_t>(a.cols) + 1, 0);
  for (std::int64_t i = 0; i < a.cols; ++i)
    t.rowptr[static_cast<std::size_t>(i) + 1] =
        t.rowptr[static_cast<std::size_t>(i)] + cnt[static_cast<std::size_t>(i)];
  t.col.resize(a.col.size());
  t.val.assign(a.val.size(), ExtFloat(a.val.empty() ? ExtFloat::kDefaultPrec : a.val[0].prec()));
  std::vector<std::int64_t> next(t.rowptr.begin(), t.rowptr.end() - 1);
  for (std::int64_t i = 0; i < a.rows; ++i) {
    for (std::int64_t k = a.rowptr[static_cast<std::size_t>(i)];
         k < a.rowptr[static_cast<std::size_t>(i) + 1]; ++k) {
      std::int64_t j = a.col[static_cast<std::size_t>(k)];
      std::int64_t pos = next[static_cast<std::size_t>(j)]++;
      t.col[static_cast<std::size_t>(pos)] = i;
      t.val[static_cast<std::size_t>(pos)] = a.val[static_cast<std::size_t>(k)];
    }
  }
  return t;
}

VecX csr_diag(const CsrExt& a, mpfr_prec_t prec) {
  VecX d = vecx(a.rows, prec);
  for (std::int64_t i = 0; i < a.rows; ++i) d[static_cast<std::size_t>(i)] = a.at(i, i, prec);
  return d;
}

ExtFloat csr_inf_norm_up(const CsrExt& a) {
  mpfr_prec_t prec = a.val.empty() ? ExtFloat::kDefaultPrec : a.val[0].prec();
  ExtFloat m(prec);
  for (std::int64_t i = 0; i < a.rows; ++i) {
    ExtFloat s(prec);
    for (std::int64_t k = a.rowptr[static_cast<std::size_t>(i)];
         k < a.rowptr[static_cast<std::size_t>(i) + 1]; ++k)
      s = add_up(s, ext_abs(a.val[static_cast<std::size_t>(k)]));
    if (s > m) m = s;
  }
  return m;
}

CsrExt csr_abs(const CsrExt& a) {
  CsrExt b = a;
  for (auto& v : b.val) v = ext_abs(v);
  return b;
}

BandedCholesky::BandedCholesky(const CsrExt& a, mpfr_prec_t prec) : n_(a.rows), prec_(prec) {
  if (a.rows != a.cols) throw std::invalid_argument("BandedCholesky: square matrix required");
  bw_ = 0;
  for (std::int64_t i = 0; i < a.rows; ++i)
    for (std::int64_t k = a.rowptr[static_cast<std::size_t>(i)];
         k < a.rowptr[static_cast<std::size_t>(i) + 1]; ++k)
      bw_ = std::max(bw_, i - a.col[static_cast<std::size_t>(k)]);
  a_ = vecx(n_ * (bw_ + 1), prec);
  for (std::int64_t i = 0; i < a.rows; ++i)
    for (std::int64_t k = a.rowptr[static_cast<std::size_t>(i)];
         k < a.rowptr[static_cast<std::size_t>(i) + 1]; ++k) {
      std::int64_t j = a.col[static_cast<std::size_t>(k)];
      if (j <= i) l(i, j) = a.val[static_cast<std::size_t>(k)];
    }
  ExtFloat s(prec), t(prec);
  const ExtFloat zero(prec);
  for (std::int64_t j = 0; j < n_; ++j) {
    s = l(j, j);
    for (std::int64_t k = std::max<std::int64_t>(0, j - bw_); k < j; ++k) {
      t = l(j, k);
      t *= l(j, k);
      s -= t;
    }
    if (!(s > zero)) throw std::domain_error("BandedCholesky: matrix not SPD");
    ExtFloat ljj = ext_sqrt(s);
    l(j, j) = ljj;
    for (std::int64_t i = j + 1; i <= std::min(n_ - 1, j + bw_); ++i) {
      s = l(i, j);
      for (std::int64_t k = std::max<std::int64_t>(i - bw_, std::max<std::int64_t>(0, j - bw_));
           k < j; ++k) {
        t = l(i, k);
        t *= l(j, k);
        s -= t;
      }
      s /= ljj;
      l(i, j) = s;
    }
  }
}

void BandedCholesky::forward(VecX& b) const {
  ExtFloat t(prec_);
  for (std::int64_t i = 0; i < n_; ++i) {
    auto& bi = b[static_cast<std::size_t>(i)];
    for (std::int64_t k = std::max<std::int64_t>(0, i - bw_); k < i; ++k) {
      t = l(i, k);
      t *= b[static_cast<std::size_t>(k)];
      bi -= t;
    }
    bi /= l(i, i);
  }
}

void BandedCholesky::solve(VecX& b) const {
  forward(b);
  ExtFloat t(prec_);
  for (std::int64_t i = n_ - 1; i >= 0; --i) {
    auto& bi = b[static_cast<std::size_t>(i)];
    for (std::int64_t k = i + 1; k <= std::min(n_ - 1, i + bw_); ++k) {
      t = l(k, i);
      t *= b[static_cast<std::size_t>(k)];
      bi -= t;
    }
    bi /= l(i, i);
  }
}

ExtFloat BandedCholesky::inv_diag_entry(std::int64_t i) const {
  // (A^{-1})_{ii} = ||L^{-1} e_i||^2; the forward solve of e_i only touches
  // indices >= i.
  VecX y = vecx(n_ - i, prec_);
  y[0] = ExtFloat(1.0, prec_);
  y[0] /= l(i, i);
  ExtFloat t(prec_), sum(prec_);
  fma_acc(sum, y[0], y[0]);
  for (std::int64_t r = i + 1; r < n_; ++r) {
    auto& yr = y[static_cast<std::size_t>(r - i)];
    for (std::int64_t k = std::max(i, r - bw_); k < r; ++k) {
      t = l(r, k);
      t *= y[static_cast<std::size_t>(k - i)];
      yr -= t;
    }
    yr /= l(r, r);
    fma_acc(sum, yr, yr);
  }
  return sum;
}

VecX cg_solve(const CsrExt& a, const VecX& b, const ExtFloat& tol_abs, std::int64_t max_iter,
              mpfr_prec_t prec) {
  const std::int64_t n = a.rows;
  VecX x = vecx(n, prec);
  VecX r = b;
  VecX p = r;
  VecX ap = vecx(n, prec);
  ExtFloat rr = dot(r, r);
  const ExtFloat minus_one(-1.0, prec);
  for (std::int64_t it = 0; it < max_iter; ++it) {
    if (it % 50 == 0) {
      spmv(a, x, ap);
      VecX tr = b;
      axpy(tr, minus_one, ap);
      if (inf_norm(tr) <= tol_abs) return x;
      r = tr;
      rr = dot(r, r);
      p = r;
    }
    spmv(a, p, ap);
    ExtFloat alpha = rr / dot(p, ap);
    axpy(x, alpha, p);
    axpy(r, -alpha, ap);
    ExtFloat rr_new = dot(r, r);
    ExtFloat beta = rr_new / rr;
    rr = rr_new;
    for (std::size_t i = 0; i < p.size(); ++i) {
      p[i] *= beta;
      p[i] += r[i];
    }
  }
  // Final true-residual check before giving up.
  spmv(a, x, ap);
  VecX tr = b;
  axpy(tr, minus_one, ap);
  if (inf_norm(tr) <= tol_abs) return x;
  throw std::runtime_error("cg_solve: no convergence within iteration limit");
}

namespace {

VecX power_start(std::int64_t n, mpfr_prec_t prec) {
  // Deterministic start, not aligned with structured grid modes.
  VecX x = vecx(n, prec);
  for (std::int64_t i = 0; i < n; ++i)
    x[static_cast<std::size_t>(i)] = ExtFloat(1.0 + static_cast<double>(i % 7) / 8.0, prec);
  return x;
}

}  // namespace

ExtFloat power_max_gen(const CsrExt& a, const VecX& d, mpfr_prec_t prec, std::int64_t max_iter,
                       double rel_tol) {
  VecX x = power_start(a.rows, prec);
  VecX ax = vecx(a.rows, prec);
  ExtFloat lam(prec), lam_prev(prec);
  const ExtFloat tol(rel_tol, prec);
  for (std::int64_t it = 0; it < max_iter; ++it) {
    spmv(a, x, ax);
    ExtFloat num = dot(x, ax);
    ExtFloat den(prec);
    for (std::size_t i = 0; i < x.size(); ++i) {
      ExtFloat t = d[i];
      t *= x[i];
      fma_acc(den, t, x[i]);
    }
    lam = num / den;
    if (it > 2 && ext_abs(lam - lam_prev) <= tol * ext_abs(lam)) break;
    lam_prev = lam;
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = ax[i] / d[i];
    ExtFloat nrm = inf_norm(x);
    for (auto& v : x) v /= nrm;
  }
  return lam;
}

ExtFloat power_max(const CsrExt& a, mpfr_prec_t prec, std::int64_t max_iter, double rel_tol) {
  VecX x = power_start(a.rows, prec);
  VecX ax = vecx(a.rows, prec);
  ExtFloat lam(prec), lam_prev(prec);
  const ExtFloat tol(rel_tol, prec);
  for (std::int64_t it = 0; it < max_iter; ++it) {
    spmv(a, x, ax);
    lam = dot(x, ax) / dot(x, x);
    if (it > 2 && ext_abs(lam - lam_prev) <= tol * ext_abs(lam)) break;
    lam_prev = lam;
    std::swap(x, ax);
    ExtFloat nrm = inf_norm(x);
    for (auto& v : x) v /= nrm;
  }
  return lam;
}

ExtFloat power_max_inv(const BandedCholesky& chol, mpfr_prec_t prec, std::int64_t max_iter,
                       double rel_tol) {
  VecX x = power_start(chol.n(), prec);
  ExtFloat lam(prec), lam_prev(prec);
  const ExtFloat tol(rel_tol, prec);
  for (std::int64_t it = 0; it < max_iter; ++it) {
    VecX y = x;
    chol.solve(y);
    lam = dot(x, y) / dot(x, x);
    if (it > 2 && ext_abs(lam - lam_prev) <= tol * ext_abs(lam)) break;
    lam_prev = lam;
    x = std::move(y);
    ExtFloat nrm = inf_norm(x);
    for (auto& v : x) v /= nrm;
  }
  return lam;
}

}  // namespace bfpmg
