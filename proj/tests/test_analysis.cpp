#include "bfpmg/analysis.hpp"

#include <cmath>
#include <random>

#include "doctest.h"
#include "bfpmg/fem.hpp"

using namespace bfpmg;

namespace {
constexpr mpfr_prec_t kPrec = 256;

double slope_fit(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  auto n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}
}  // namespace

TEST_CASE("smallest eigenpairs match the closed form of the p=1 stencil") {
  // Unscaled 1D stencil (1/h)[-1, 2, -1]: lambda_i = (4/h) sin^2(i pi h / 2).
  ProblemSpec spec{Pde::poisson, 1, 1, 6};
  auto d = assemble(spec, kPrec);
  auto rep = smallest_eigpairs(d.a, 8, kPrec);
  double h = 1.0 / 64.0;
  for (int i = 1; i <= 8; ++i) {
    double want = 4.0 / h * std::pow(std::sin(i * M_PI * h / 2.0), 2);
    CHECK(rep.eigenvalues[static_cast<std::size_t>(i - 1)].to_double() ==
          doctest::Approx(want).epsilon(1e-12));
  }
  CHECK(rep.eigenvalues[0].to_double() > 0.0);
  // Orthogonality of the certified eigenvectors.
  for (int i = 0; i < 8; ++i)
    for (int j = i + 1; j < 8; ++j) {
      ExtFloat ip = dot(rep.eigenvectors[static_cast<std::size_t>(i)],
                        rep.eigenvectors[static_cast<std::size_t>(j)]);
      CHECK(ext_abs(ip) < ext_scale2(ExtFloat(1, kPrec), -90));
    }
  // Residual certificates.
  for (int i = 0; i < 8; ++i) {
    const auto& v = rep.eigenvectors[static_cast<std::size_t>(i)];
    VecX r = spmv(d.a, v, kPrec);
    axpy(r, -rep.eigenvalues[static_cast<std::size_t>(i)], v);
    CHECK(two_norm(r) <= ext_scale2(two_norm(v), -100));
  }
}

TEST_CASE("quant_error vanishes for representable vectors and shrinks with width") {
  ProblemSpec spec{Pde::poisson, 1, 1, 5};
  auto d = assemble(spec, kPrec);
  // Exactly representable at width 6: dyadic values with small mantissas.
  VecX v = vecx(d.a.rows, kPrec);
  for (std::int64_t i = 0; i < d.a.rows; ++i)
    v[static_cast<std::size_t>(i)] =
        ExtFloat(static_cast<double>((i % 31) - 15) / 16.0, kPrec);
  CHECK(quant_error(v, 6, d.a, kPrec).is_zero());

  auto rep = smallest_eigpairs(d.a, 1, kPrec);
  double prev = 1e300;
  for (int w = 4; w <= 24; w += 2) {
    double e = quant_error(rep.eigenvectors[0], w, d.a, kPrec).to_double();
    CHECK(e <= 2.000001 * prev);  // non-increasing up to factor-2 jitter
    prev = e;
  }
}

TEST_CASE("quantization error stays under the kappa bound for eigenvectors") {
  for (int j = 4; j <= 7; ++j) {
    ProblemSpec spec{Pde::poisson, 1, 1, j};
    auto d = assemble(spec, kPrec);
    auto rep = smallest_eigpairs(d.a, 8, kPrec);
    double sqrt_kappa = std::sqrt(rep.kappa.to_double());
    for (int w : {5, 10, 15}) {
      double eps = std::ldexp(1.0, 1 - w);
      for (int i = 0; i < 8; ++i) {
        double e =
            quant_error(rep.eigenvectors[static_cast<std::size_t>(i)], w, d.a, kPrec).to_double();
        CHECK(e <= 4.0 * sqrt_kappa * eps);
      }
    }
  }
}

TEST_CASE("checkerboard error vector has the oscillatory growth factors") {
  // z alternating on the 2D p=1 grid: ||z||_A = O(kappa^{1/2}) ||z||, ||z|| = O(n).
  for (std::int64_t n : {15, 31}) {
    CsrExt a = poisson2d_p1_grid(n, kPrec);
    VecX z = vecx(n * n, kPrec);
    for (std::int64_t ix = 0; ix < n; ++ix)
      for (std::int64_t iy = 0; iy < n; ++iy)
        z[static_cast<std::size_t>(ix * n + iy)] = ExtFloat((ix + iy) % 2 == 0 ? 1 : 0, kPrec);
    double z2 = two_norm(z).to_double();
    CHECK(z2 >= 0.5 * static_cast<double>(n));  // ||z|| = O(n)
    double za = ext_sqrt(quad_form(a, z)).to_double();
    auto cn = condition_numbers(a, 1, kPrec);
    double bound = std::sqrt(cn.kappa.to_double() * power_max(csr_abs(a), kPrec).to_double() /
                             power_max(a, kPrec).to_double());
    // ||z||_A <= sqrt(lambda_max) ||z||, and the checkerboard saturates the
    // order: check both directions loosely.
    double lam_max = power_max(a, kPrec).to_double();
    CHECK(za <= std::sqrt(lam_max) * z2 * 1.000001);
    CHECK(za >= 0.25 * std::sqrt(lam_max) * z2);
    (void)bound;
  }
}

TEST_CASE("discrete harmonic minimizer properties") {
  ProblemSpec spec{Pde::poisson, 2, 1, 4};
  auto d = assemble(spec, kPrec);
  auto dh = discrete_harmonic_min(d.a, kPrec);
  ExtFloat tol = ext_scale2(ExtFloat(1, kPrec), -100);
  // v_p = 1 and (Av)_q = 0 away from p.
  CHECK(ext_abs(dh.minimizer[static_cast<std::size_t>(dh.index)] - ExtFloat(1, kPrec)) < tol);
  VecX av = spmv(d.a, dh.minimizer, kPrec);
  for (std::int64_t q = 0; q < d.a.rows; ++q)
    if (q != dh.index) CHECK(ext_abs(av[static_cast<std::size_t>(q)]) < tol);
  // ||v||_A equals the reported bound.
  ExtFloat va = ext_sqrt(quad_form(d.a, dh.minimizer));
  CHECK(ext_abs(va - dh.min_energy) < tol);
  // Minimality spot check over random unit-infinity-norm vectors.
  std::mt19937_64 g(23);
  for (int t = 0; t < 1000; ++t) {
    VecX x = vecx(d.a.rows, 64);
    for (auto& v : x) v = ExtFloat(static_cast<double>(g() % 4097) / 2048.0 - 1.0, 64);
    ExtFloat nrm = inf_norm(x);
    if (nrm.is_zero()) continue;
    for (auto& v : x) v /= nrm;
    CHECK(ext_sqrt(quad_form(d.a, x)).to_double() >= dh.min_energy.to_double() * 0.999999);
  }
}

TEST_CASE("discrete harmonic bound grows almost linearly with n in 2D") {
  std::vector<double> xs, ys;
  for (std::int64_t n : {8, 11, 16, 23, 32}) {
    CsrExt a = poisson2d_p1_grid(n, 160);
    auto dh = discrete_harmonic_min(a, 160);
    xs.push_back(std::log2(static_cast<double>(n)));
    ys.push_back(std::log2(dh.min_energy.to_double()));
  }
  double slope = slope_fit(xs, ys);
  CHECK(slope == doctest::Approx(0.99).epsilon(0.06));
}

TEST_CASE("condition numbers of a diagonal matrix and the p=1 stencil") {
  CsrExt a;
  a.rows = a.cols = 4;
  a.rowptr = {0, 1, 2, 3, 4};
  a.col = {0, 1, 2, 3};
  for (int i = 0; i < 4; ++i) a.val.push_back(ExtFloat((i + 1) * 2, kPrec));
  auto cn = condition_numbers(a, 1, kPrec);
  CHECK(cn.kappa.to_double() == doctest::Approx(4.0).epsilon(1e-9));
  CHECK(cn.kappa_under.to_double() == doctest::Approx(4.0).epsilon(1e-9));

  std::vector<double> xs, ys;
  std::vector<double> hs;
  for (int j = 4; j <= 9; ++j) {
    ProblemSpec spec{Pde::poisson, 1, 1, j};
    auto d = assemble(spec, kPrec);
    auto c = condition_numbers(d.a, 1, kPrec);
    xs.push_back(j);
    ys.push_back(std::log2(c.kappa.to_double()));
    hs.push_back(c.pseudo_h.to_double());
  }
  CHECK(slope_fit(xs, ys) == doctest::Approx(2.0).epsilon(0.05));
  for (std::size_t i = 1; i < hs.size(); ++i)
    CHECK(hs[i] / hs[i - 1] == doctest::Approx(0.5).epsilon(0.1));
}
