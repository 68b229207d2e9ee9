#include "bfpmg/fem.hpp"

#include <cmath>

#include "doctest.h"

using namespace bfpmg;

namespace {
constexpr mpfr_prec_t kPrec = 400;

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

bool close2(const ExtFloat& a, double b, double tol) { return std::abs(a.to_double() - b) <= tol; }
}  // namespace

TEST_CASE("gauss-legendre classical values") {
  auto [n1, w1] = gauss_legendre(1, kPrec);
  CHECK(n1[0].is_zero());
  CHECK(w1[0].to_double() == doctest::Approx(2.0).epsilon(1e-15));

  auto [n2, w2] = gauss_legendre(2, kPrec);
  ExtFloat inv_sqrt3 = ExtFloat(1, kPrec) / ext_sqrt(ExtFloat(3, kPrec));
  ExtFloat tol390 = ext_scale2(ExtFloat(1, kPrec), -390);
  CHECK(ext_abs(n2[0] + inv_sqrt3) < tol390);
  CHECK(ext_abs(n2[1] - inv_sqrt3) < tol390);
  CHECK(ext_abs(w2[0] - ExtFloat(1, kPrec)) < tol390);
  CHECK(ext_abs(w2[1] - ExtFloat(1, kPrec)) < tol390);

  for (int nq = 1; nq <= 9; ++nq) {
    auto [nn, ww] = gauss_legendre(nq, kPrec);
    ExtFloat s(kPrec);
    for (auto& w : ww) s += w;
    CHECK(ext_abs(s - ExtFloat(2, kPrec)) < ext_scale2(ExtFloat(1, kPrec), -380));
    for (std::size_t i = 1; i < nn.size(); ++i) CHECK(nn[i - 1] < nn[i]);
  }
}

TEST_CASE("linear elements reproduce the classical stencil") {
  ProblemSpec spec{Pde::poisson, 1, 1, 4};
  auto d = assemble(spec, kPrec);
  double h = 1.0 / 16.0;
  std::int64_t n = unknown_count(spec);
  REQUIRE(n == 15);
  ExtFloat tol = ext_scale2(ExtFloat(1, kPrec), -380);
  for (std::int64_t i = 0; i < n; ++i) {
    CHECK(ext_abs(d.a.at(i, i, kPrec) - ExtFloat(2.0 / h, kPrec)) < tol);
    if (i > 0) CHECK(ext_abs(d.a.at(i, i - 1, kPrec) + ExtFloat(1.0 / h, kPrec)) < tol);
  }
}

TEST_CASE("stiffness is symmetric bit-exactly and SPD") {
  for (auto spec : {ProblemSpec{Pde::poisson, 1, 3, 4}, ProblemSpec{Pde::biharmonic, 1, 3, 4},
                    ProblemSpec{Pde::poisson, 2, 1, 3}, ProblemSpec{Pde::poisson, 1, 2, 5}}) {
    auto d = assemble(spec, kPrec);
    for (std::int64_t i = 0; i < d.a.rows; ++i)
      for (std::int64_t k = d.a.rowptr[static_cast<std::size_t>(i)];
           k < d.a.rowptr[static_cast<std::size_t>(i) + 1]; ++k) {
        std::int64_t j = d.a.col[static_cast<std::size_t>(k)];
        CHECK(mpfr_equal_p(d.a.val[static_cast<std::size_t>(k)].get(),
                           d.a.at(j, i, kPrec).get()));
      }
    CHECK_NOTHROW(BandedCholesky(d.a, kPrec));
  }
}

TEST_CASE("reference solve meets its residual contract") {
  ProblemSpec spec{Pde::poisson, 1, 2, 6};
  auto d = assemble(spec, kPrec);
  auto u = reference_solve(d, kPrec);
  VecX r = spmv(d.a, u, kPrec);
  axpy(r, ExtFloat(-1, kPrec), d.b);
  CHECK(inf_norm(r) < ext_scale2(inf_norm(d.b), -200));
}

TEST_CASE("galerkin orthogonality of the reference solution") {
  ProblemSpec spec{Pde::poisson, 1, 1, 5};
  auto d = assemble(spec, kPrec);
  auto u = reference_solve(d, kPrec);
  // a(u - u_h, phi_i) = b_i - (A u_h)_i = residual; must vanish to solver
  // accuracy, which is far below the 2^-180 gate.
  VecX au = spmv(d.a, u, kPrec);
  ExtFloat worst(kPrec);
  for (std::size_t i = 0; i < au.size(); ++i) worst = ext_max(worst, ext_abs(au[i] - d.b[i]));
  ExtFloat gate = ext_scale2(energy_norm_of_u(spec, kPrec), -180);
  CHECK(worst < gate);
}

TEST_CASE("energy error convergence slopes match k - m") {
  struct Case {
    Pde pde;
    int dim, p, j_lo, j_hi;
  };
  for (auto c : {Case{Pde::poisson, 1, 1, 3, 8}, Case{Pde::poisson, 1, 2, 3, 8},
                 Case{Pde::biharmonic, 1, 3, 3, 8}, Case{Pde::poisson, 2, 1, 2, 5}}) {
    std::vector<double> xs, ys;
    for (int j = c.j_lo; j <= c.j_hi; ++j) {
      ProblemSpec spec{c.pde, c.dim, c.p, j};
      auto d = assemble(spec, kPrec);
      auto u = reference_solve(d, kPrec);
      double err = energy_error(u, spec, kPrec).to_double();
      xs.push_back(static_cast<double>(j));
      ys.push_back(std::log2(err));
    }
    double slope = -slope_fit(xs, ys);
    int expect = c.p + 1 - (c.pde == Pde::poisson ? 1 : 2);
    CHECK(slope == doctest::Approx(static_cast<double>(expect)).epsilon(0.1));
  }
}

TEST_CASE("energy error of zero coefficients is the norm of u") {
  ProblemSpec spec{Pde::poisson, 1, 1, 4};
  // ||u||_L for u = sin(3 pi x): integral of (3 pi cos(3 pi x))^2 = 9 pi^2 / 2.
  double want = std::sqrt(9.0 * M_PI * M_PI / 2.0);
  CHECK(energy_norm_of_u(spec, kPrec).to_double() == doctest::Approx(want).epsilon(1e-10));
}

TEST_CASE("energy error responds continuously to a coefficient perturbation") {
  ProblemSpec spec{Pde::poisson, 1, 1, 4};
  auto d = assemble(spec, kPrec);
  auto u = reference_solve(d, kPrec);
  ExtFloat base = energy_error(u, spec, kPrec);
  ExtFloat delta(1e-6, kPrec);
  VecX up = u;
  up[3] += delta;
  ExtFloat perturbed = energy_error(up, spec, kPrec);
  // |e(up) - e(u)| <= delta * ||phi_3||_A by the triangle inequality.
  ExtFloat phi_norm = ext_sqrt(d.a.at(3, 3, kPrec));
  CHECK(ext_abs(perturbed - base) <= delta * phi_norm * ExtFloat(1.0000001, kPrec));
}

TEST_CASE("prolongation: linear interpolation stencil for p = 1") {
  ProblemSpec spec{Pde::poisson, 1, 1, 4};
  auto p = prolongation(spec, 4, kPrec);
  // Columns carry the [1/2, 1, 1/2] subdivision mask.
  CHECK(p.rows == 15);
  CHECK(p.cols == 7);
  for (std::int64_t jc = 0; jc < p.cols; ++jc) {
    std::int64_t center = 2 * jc + 1;
    CHECK(p.at(center, jc, kPrec).to_double() == doctest::Approx(1.0));
    CHECK(p.at(center - 1, jc, kPrec).to_double() == doctest::Approx(0.5));
    CHECK(p.at(center + 1, jc, kPrec).to_double() == doctest::Approx(0.5));
  }
}

TEST_CASE("prolongation reproduces coarse splines exactly (nestedness)") {
  for (auto pdeg : {1, 2, 3, 4}) {
    ProblemSpec spec{Pde::poisson, 1, pdeg, 4};
    ProblemSpec coarse = spec;
    coarse.level = 3;
    auto p = prolongation(spec, 4, kPrec);
    std::int64_t nc = unknown_count(coarse);
    // Deterministic coarse coefficients.
    VecX cc = vecx(nc, kPrec);
    for (std::int64_t i = 0; i < nc; ++i)
      cc[static_cast<std::size_t>(i)] = ExtFloat(std::sin(1.7 * double(i) + 0.3), kPrec);
    VecX cf = spmv(p, cc, kPrec);
    // Compare spline values at off-grid points.
    auto knots_c = bspline_knots(pdeg, 3, kPrec);
    auto knots_f = bspline_knots(pdeg, 4, kPrec);
    ExtFloat tol = ext_scale2(ExtFloat(1, kPrec), -350);
    for (int t = 1; t < 40; ++t) {
      ExtFloat x(t / 41.0, kPrec);
      auto eval = [&](const VecX& knots, const VecX& coef, int lvl) {
        std::int64_t span = bspline_find_span(knots, pdeg, x);
        auto ders = bspline_ders(knots, pdeg, span, x, 0);
        ExtFloat s(kPrec);
        for (int a = 0; a <= pdeg; ++a) {
          std::int64_t g = span - pdeg + a - 1;  // interior offset 1
          if (g < 0 || g >= (std::int64_t(1) << lvl) + pdeg - 2) continue;
          fma_acc(s, coef[static_cast<std::size_t>(g)], ders[0][static_cast<std::size_t>(a)]);
        }
        return s;
      };
      CHECK(ext_abs(eval(knots_c, cc, 3) - eval(knots_f, cf, 4)) < tol);
    }
  }
}

TEST_CASE("prolongation preserves partition of unity away from the boundary") {
  for (auto pdeg : {1, 2, 3}) {
    ProblemSpec spec{Pde::poisson, 1, pdeg, 4};
    auto p = prolongation(spec, 4, kPrec);
    // Row sums of the full (unrestricted) operator are 1; interior rows far
    // from the boundary see all their coarse neighbors, so their sums stay 1.
    for (std::int64_t i = 2 * pdeg + 2; i < p.rows - 2 * pdeg - 2; ++i) {
      ExtFloat s(kPrec);
      for (std::int64_t k = p.rowptr[static_cast<std::size_t>(i)];
           k < p.rowptr[static_cast<std::size_t>(i) + 1]; ++k)
        s += p.val[static_cast<std::size_t>(k)];
      CHECK(ext_abs(s - ExtFloat(1, kPrec)) < ext_scale2(ExtFloat(1, kPrec), -380));
    }
  }
}

TEST_CASE("manufactured solutions satisfy the boundary conditions") {
  ExtFloat zero_tol = ext_scale2(ExtFloat(1, kPrec), -390);
  for (auto pde : {Pde::poisson, Pde::biharmonic}) {
    ProblemSpec spec{pde, 1, 3, 3};
    auto mf = manufactured(spec, kPrec);
    CHECK(ext_abs(mf.u(ExtFloat(0, kPrec))) < zero_tol);
    CHECK(ext_abs(mf.u(ExtFloat(1, kPrec))) < zero_tol);
  }
  // Biharmonic also clamps the derivative: u'(x) = pi sin(2 pi x).
  ProblemSpec bi{Pde::biharmonic, 1, 3, 3};
  auto mf = manufactured(bi, kPrec);
  ExtFloat eps(1e-30, kPrec);
  ExtFloat du0 = (mf.u(eps) - mf.u(ExtFloat(0, kPrec))) / eps;
  CHECK(ext_abs(du0) < ExtFloat(1e-25, kPrec));
}

TEST_CASE("coo fixture writer emits one triplet per entry") {
  ProblemSpec spec{Pde::poisson, 1, 1, 2};
  auto d = assemble(spec, kPrec);
  auto text = write_coo(d.a, 20);
  std::size_t lines = std::count(text.begin(), text.end(), '\n');
  CHECK(lines == static_cast<std::size_t>(d.a.col.size()) + 1);
}
