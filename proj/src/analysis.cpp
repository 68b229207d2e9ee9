#include "bfpmg/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bfpmg {

namespace {

// Remove the components along previously found eigenvectors (Euclidean
// orthogonality suffices for a symmetric operator).
void deflate(VecX& x, const std::vector<VecX>& basis) {
  for (const auto& v : basis) {
    ExtFloat c = dot(x, v) / dot(v, v);
    axpy(x, -c, v);
  }
}

}  // namespace

SpectralReport smallest_eigpairs(const CsrExt& a, int count, mpfr_prec_t prec) {
  SpectralReport rep;
  const std::int64_t n = a.rows;
  if (count > n) throw std::invalid_argument("smallest_eigpairs: count exceeds dimension");
  BandedCholesky chol(a, prec);
  const ExtFloat cert = ext_scale2(ExtFloat(1, prec), -100);
  for (int e = 0; e < count; ++e) {
    VecX x = vecx(n, prec);
    // Deterministic start varying with the eigenpair index.
    for (std::int64_t i = 0; i < n; ++i)
      x[static_cast<std::size_t>(i)] =
          ExtFloat(std::sin(0.7 * static_cast<double>(i + 1) * (e + 1) + 0.1 * (e + 1)), prec);
    deflate(x, rep.eigenvectors);
    ExtFloat lam(prec);
    for (int it = 0; it < 4000; ++it) {
      VecX y = x;
      chol.solve(y);
      deflate(y, rep.eigenvectors);
      ExtFloat nrm = two_norm(y);
      for (auto& v : y) v /= nrm;
      x = std::move(y);
      // Rayleigh quotient and residual certificate.
      VecX ax = spmv(a, x, prec);
      lam = dot(x, ax);
      VecX res = ax;
      axpy(res, -lam, x);
      if (two_norm(res) <= cert * two_norm(x)) break;
      if (it == 3999)
        throw std::runtime_error("smallest_eigpairs: inverse iteration did not certify");
    }
    rep.eigenvalues.push_back(lam);
    rep.eigenvectors.push_back(x);
  }
  // Sort ascending (deflation order can scramble near-degenerate pairs).
  for (std::size_t i = 1; i < rep.eigenvalues.size(); ++i)
    for (std::size_t j = i; j > 0 && rep.eigenvalues[j] < rep.eigenvalues[j - 1]; --j) {
      std::swap(rep.eigenvalues[j], rep.eigenvalues[j - 1]);
      std::swap(rep.eigenvectors[j], rep.eigenvectors[j - 1]);
    }
  ExtFloat lam_max = power_max(a, prec);
  ExtFloat lam_min_inv = power_max_inv(BandedCholesky(a, prec), prec);
  rep.kappa = lam_max * lam_min_inv;
  rep.kappa_under = power_max(csr_abs(a), prec) * lam_min_inv;
  return rep;
}

ExtFloat quant_error(const VecX& v, std::int64_t w, const CsrExt& a, mpfr_prec_t prec) {
  ExtFloat nrm = inf_norm(v);
  if (nrm.is_zero()) throw std::invalid_argument("quant_error: zero vector");
  VecX scaled = v;
  for (auto& t : scaled) t /= nrm;
  BfpBlock q = from_extfloat(scaled, w);
  VecX qv = to_extfloat_vec(q, prec);
  VecX diff = scaled;
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] -= qv[i];
  ExtFloat err_a = ext_sqrt(quad_form(a, diff));
  ExtFloat den = ext_sqrt(quad_form(a, qv));
  return err_a / den;
}

DiscreteHarmonic discrete_harmonic_min(const CsrExt& a, mpfr_prec_t prec) {
  BandedCholesky chol(a, prec);
  const std::int64_t n = a.rows;
  DiscreteHarmonic out;
  ExtFloat best(prec);
  for (std::int64_t i = 0; i < n; ++i) {
    ExtFloat d = chol.inv_diag_entry(i);
    if (i == 0 || d > best) {
      best = d;
      out.index = i;
    }
  }
  out.min_energy = ExtFloat(1, prec) / ext_sqrt(best);
  VecX c = vecx(n, prec);
  c[static_cast<std::size_t>(out.index)] = ExtFloat(1, prec);
  chol.solve(c);
  ExtFloat cp = c[static_cast<std::size_t>(out.index)];
  for (auto& t : c) t /= cp;
  out.minimizer = std::move(c);
  return out;
}

ConditionNumbers condition_numbers(const CsrExt& a, int m, mpfr_prec_t prec) {
  ConditionNumbers out;
  ExtFloat lam_max = power_max(a, prec);
  ExtFloat lam_min_inv = power_max_inv(BandedCholesky(a, prec), prec);
  out.kappa = lam_max * lam_min_inv;
  out.kappa_under = power_max(csr_abs(a), prec) * lam_min_inv;
  // h = kappa_under^{-1/(2m)}
  ExtFloat exponent = ExtFloat(-1, prec) / ExtFloat(2 * m, prec);
  ExtFloat h(prec);
  mpfr_pow(h.get(), out.kappa_under.get(), exponent.get(), MPFR_RNDN);
  out.pseudo_h = h;
  return out;
}

}  // namespace bfpmg
