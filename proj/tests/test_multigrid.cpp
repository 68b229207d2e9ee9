#include "bfpmg/multigrid.hpp"

#include <cmath>
#include <random>

#include "doctest.h"

using namespace bfpmg;

namespace {
constexpr mpfr_prec_t kPrec = 400;

Hierarchy make_hierarchy(Pde pde, int p, int levels, double eta = 0.5) {
  ProblemSpec spec{pde, 1, p, levels};
  Hierarchy h(spec, kPrec);
  h.setup_scaling(5);
  h.set_eta(eta);
  return h;
}
}  // namespace

TEST_CASE("chebyshev closed form is exact in rational arithmetic") {
  auto c = chebyshev_coeffs_q(mpq_class(2), mpq_class(1, 2));
  CHECK(c.alpha == mpq_class(3, 2));
  CHECK(c.c == mpq_class(1, 2));
  CHECK(c.beta == mpq_class(17, 12));
  CHECK(c.c1 == mpq_class(24, 17));
  CHECK(c.c2 == mpq_class(-8, 17));

  // eta -> 1 limit: c = 0, beta = alpha, c1 = 2/alpha, c2 = -1/alpha^2.
  auto l = chebyshev_coeffs_q(mpq_class(3), mpq_class(1));
  CHECK(l.c == 0);
  CHECK(l.beta == l.alpha);
  CHECK(l.c1 == 2 / l.alpha);
  CHECK(l.c2 == mpq_class(-1) / (l.alpha * l.alpha));

  std::mt19937_64 g(17);
  for (int it = 0; it < 100; ++it) {
    mpq_class rho(1 + static_cast<long>(g() % 1000), 1 + static_cast<long>(g() % 97));
    mpq_class eta(static_cast<long>(g() % 100), 100);
    rho.canonicalize();
    eta.canonicalize();
    auto r = chebyshev_coeffs_q(rho, eta);
    CHECK(r.c1 > 0);
    CHECK(r.c2 < 0);
  }

  auto e = chebyshev_coeffs(ExtFloat(2, kPrec), ExtFloat(0.5, kPrec));
  CHECK(ext_abs(e.c1 - ExtFloat::from_mpq(mpq_class(24, 17), kPrec)) <
        ext_scale2(ExtFloat(1, kPrec), -390));
}

TEST_CASE("generalized eigenvalue upper bound") {
  // Diagonal A = D: all generalized eigenvalues are 1.
  CsrExt a;
  a.rows = a.cols = 5;
  a.rowptr = {0, 1, 2, 3, 4, 5};
  a.col = {0, 1, 2, 3, 4};
  for (int i = 0; i < 5; ++i) a.val.push_back(ExtFloat(i + 1, kPrec));
  VecX d = a.val;
  ExtFloat rho = max_gen_eig_upper(a, d, kPrec);
  CHECK(rho.to_double() >= 1.0);
  CHECK(rho.to_double() <= 1.0101);

  // 1D poisson p=1: Gershgorin gives lambda_max < 2 for (A, diag A).
  ProblemSpec spec{Pde::poisson, 1, 1, 5};
  auto dis = assemble(spec, kPrec);
  VecX diag = csr_diag(dis.a, kPrec);
  ExtFloat rho2 = max_gen_eig_upper(dis.a, diag, kPrec);
  CHECK(rho2.to_double() < 2.0 * 1.01);
  // Upper-bound property against Rayleigh quotients of random vectors.
  std::mt19937_64 g(3);
  for (int t = 0; t < 20; ++t) {
    VecX x = vecx(dis.a.rows, kPrec);
    for (auto& v : x) v = ExtFloat(static_cast<double>(g() % 1000) / 500.0 - 1.0, kPrec);
    ExtFloat num = quad_form(dis.a, x);
    ExtFloat den(kPrec);
    for (std::size_t i = 0; i < x.size(); ++i) {
      ExtFloat t2 = diag[i] * x[i];
      fma_acc(den, t2, x[i]);
    }
    CHECK(num / den <= rho2);
  }
}

TEST_CASE("solver setup scales the diagonal to one and preserves solutions") {
  auto h = make_hierarchy(Pde::poisson, 2, 5);
  ExtFloat tol = ext_scale2(ExtFloat(1, kPrec), -380);
  for (int j = 1; j <= 5; ++j) {
    const auto& L = h.level(j);
    for (std::int64_t i = 0; i < L.a.rows; ++i)
      CHECK(ext_abs(L.a.at(i, i, kPrec) - ExtFloat(1, kPrec)) < tol);
  }
  // x solving the original system solves the scaled one.
  const VecX& u = h.reference(5);
  const auto& L = h.level(5);
  VecX r = spmv(L.a, u, kPrec);
  axpy(r, ExtFloat(-1, kPrec), L.b);
  CHECK(inf_norm(r) < ext_scale2(inf_norm(L.b), -300));

  // R x = D_c^{-1} P^T D_f x for random x.
  std::mt19937_64 g(5);
  VecX x = vecx(L.p.rows, kPrec);
  for (auto& v : x) v = ExtFloat(static_cast<double>(g() % 2048) / 1024.0 - 1.0, kPrec);
  VecX rx = spmv(L.r, x, kPrec);
  VecX dfx = x;
  for (std::size_t i = 0; i < dfx.size(); ++i) dfx[i] *= h.level(5).diag[i];
  VecX ptx = spmv(csr_transpose(L.p), dfx, kPrec);
  for (std::size_t i = 0; i < ptx.size(); ++i) ptx[i] /= h.level(4).diag[i];
  for (std::size_t i = 0; i < ptx.size(); ++i) CHECK(ext_abs(ptx[i] - rx[i]) < tol);
}

TEST_CASE("gamma policy implements the per-step table") {
  GammaPolicy pol;
  CHECK(GammaPolicy::default_w_add(StepKind::ir_residual, 1) == 5);
  CHECK(GammaPolicy::default_w_add(StepKind::ir_residual, 3) == 4);
  CHECK(GammaPolicy::default_w_add(StepKind::ir_correction, 1) == 0);
  CHECK(GammaPolicy::default_w_add(StepKind::v_relax, 1) == 2);
  CHECK(GammaPolicy::default_w_add(StepKind::v_residual, 1) == 4);
  CHECK(GammaPolicy::default_w_add(StepKind::v_restrict, 1) == 6);
  CHECK(GammaPolicy::default_w_add(StepKind::v_correct, 1) == 1);
  CHECK(GammaPolicy::default_w_add(StepKind::fmg_prolong, 1) == 0);

  GammaContext ctx;
  ctx.c1 = ExtFloat::from_mpq(mpq_class(24, 17), 64);
  ctx.r_norm = ExtFloat(1, 64);
  auto [gamma, w_tmp] = gamma_policy_eval(pol, StepKind::v_relax, ctx, 10);
  CHECK(w_tmp == 12);
  // gamma rounds 24/17 upward at 16 bits.
  double g = to_extfloat(gamma, 0, 64).to_double();
  CHECK(g >= 24.0 / 17.0);
  CHECK(g <= 24.0 / 17.0 + 1e-3);

  ctx.x_norm = ExtFloat(0.75, 64);
  auto [gp, wt] = gamma_policy_eval(pol, StepKind::fmg_prolong, ctx, 10);
  CHECK(wt == 10);
  CHECK(to_extfloat(gp, 0, 64).to_double() == doctest::Approx(0.75));

  GammaPolicy capped;
  capped.w_add_cap = 2;
  CHECK(capped.w_tmp_for(StepKind::v_restrict, 1, 10) == 12);
  CHECK(capped.w_tmp_for(StepKind::fmg_prolong, 1, 10) == 10);
}

TEST_CASE("ir returns immediately once the residual beats the tolerance") {
  auto h = make_hierarchy(Pde::poisson, 1, 4);
  h.apply_schedule(PrecisionSchedule::flat(4, 64, 64, 64));
  SolverContext ctx;
  ctx.reset(4);
  SolverTrace trace;
  ctx.trace = &trace;
  BfpBlock x0 = BfpBlock::zero_vec(h.level(4).a.rows, 64);
  auto out = ir(h, 4, x0, 50, 1e300, ctx);
  CHECK(out.hit_tol);
  CHECK(out.iters == 1);
  CHECK(trace.records.size() == 1);
  CHECK(trace.records[0].step == StepKind::ir_residual);
}

TEST_CASE("vcycle base level is relaxation only and zero maps to zero") {
  auto h = make_hierarchy(Pde::poisson, 1, 3);
  h.apply_schedule(PrecisionSchedule::flat(3, 32, 32, 32));
  SolverContext ctx;
  ctx.reset(3);
  SolverTrace trace;
  ctx.trace = &trace;
  BfpBlock r1 = BfpBlock::zero_vec(h.level(1).a.rows, 32);
  (void)vcycle(h, 1, r1, ctx);
  CHECK(trace.records.size() == 1);
  CHECK(trace.records[0].step == StepKind::v_relax);

  trace.clear();
  BfpBlock r3 = BfpBlock::zero_vec(h.level(3).a.rows, 32);
  auto y = vcycle(h, 3, r3, ctx);
  CHECK(y.is_zero());
}

TEST_CASE("exact-mode V-cycle contracts on 1D poisson") {
  auto h = make_hierarchy(Pde::poisson, 1, 5);
  double rate =
      conv_rate_vcycle(h, PrecisionSchedule::flat(5, 400, 400, 400), 5, 192).to_double();
  CHECK(rate > 0.0);
  CHECK(rate < 1.0);
}

TEST_CASE("rho_v of the zero operator is zero") {
  ProblemSpec spec{Pde::poisson, 1, 1, 3};
  auto d = assemble(spec, kPrec);
  std::vector<VecX> cols(static_cast<std::size_t>(d.a.rows), vecx(d.a.rows, 128));
  CHECK(rho_v_of_columns(cols, d.a, 128).is_zero());
}

TEST_CASE("fmg iteration count defaults follow the reference study") {
  CHECK(default_fmg_iters(Pde::poisson, 1) == 2);
  CHECK(default_fmg_iters(Pde::poisson, 2) == 1);
  CHECK(default_fmg_iters(Pde::poisson, 3) == 1);
  CHECK(default_fmg_iters(Pde::poisson, 4) == 3);
  CHECK(default_fmg_iters(Pde::poisson, 5) == 7);
  CHECK(default_fmg_iters(Pde::poisson, 6) == 15);
  CHECK(default_fmg_iters(Pde::biharmonic, 3) == 2);
  CHECK(default_fmg_iters(Pde::biharmonic, 4) == 1);
  CHECK(default_fmg_iters(Pde::biharmonic, 5) == 2);
  CHECK(default_fmg_iters(Pde::biharmonic, 6) == 4);
  CHECK(default_fmg_iters(Pde::biharmonic, 1) == 0);
}

TEST_CASE("full-width IR-V reaches discretization accuracy on poisson p=1") {
  auto h = make_hierarchy(Pde::poisson, 1, 6);
  h.apply_schedule(PrecisionSchedule::flat(6, 200, 200, 200));
  SolverContext ctx;
  ctx.reset(6);
  BfpBlock x0 = BfpBlock::zero_vec(h.level(6).a.rows, 200);
  bool ok = false;
  auto out = ir(h, 6, x0, 50, -1.0, ctx, [&](int, const BfpBlock& x) {
    ok = h.error_ratio(6, x).to_double() <= 1.5;
    return ok;
  });
  CHECK(ok);
  CHECK(out.iters <= 50);
}

TEST_CASE("bfp-fmg at full width matches an extended-precision twin") {
  auto h = make_hierarchy(Pde::poisson, 1, 5);
  h.apply_schedule(PrecisionSchedule::flat(5, 400, 400, 400));
  SolverContext ctx;
  ctx.reset(5);
  BfpBlock x_bfp = fmg(h, 5, 2, ctx);

  // ExtFloat twin of IR-V-FMG on the scaled masters.
  const ExtFloat c1 = h.cheby().c1, c2 = h.cheby().c2;
  std::function<VecX(int, const VecX&)> vtwin = [&](int lev, const VecX& r) {
    const auto& L = h.level(lev);
    VecX y = spmv(L.a, r, kPrec);
    for (std::size_t i = 0; i < y.size(); ++i) {
      y[i] *= c2;
      fma_acc(y[i], c1, r[i]);
    }
    if (lev > 1) {
      VecX rv = spmv(L.a, y, kPrec);
      axpy(rv, ExtFloat(-1, kPrec), r);
      VecX rc = spmv(L.r, rv, kPrec);
      VecX d = vtwin(lev - 1, rc);
      VecX pd = spmv(L.p, d, kPrec);
      axpy(y, ExtFloat(-1, kPrec), pd);
    }
    return y;
  };
  std::function<VecX(int)> fmgtwin = [&](int lev) {
    const auto& L = h.level(lev);
    VecX x = vecx(L.a.rows, kPrec);
    if (lev > 1) x = spmv(L.p, fmgtwin(lev - 1), kPrec);
    for (int i = 0; i < 2; ++i) {
      VecX r = spmv(L.a, x, kPrec);
      axpy(r, ExtFloat(-1, kPrec), L.b);
      VecX y = vtwin(lev, r);
      axpy(x, ExtFloat(-1, kPrec), y);
    }
    return x;
  };
  VecX x_ext = fmgtwin(5);
  VecX x_b = to_extfloat_vec(x_bfp, kPrec);
  ExtFloat diff(kPrec), nrm = inf_norm(x_ext);
  for (std::size_t i = 0; i < x_ext.size(); ++i)
    diff = ext_max(diff, ext_abs(x_ext[i] - x_b[i]));
  CHECK(diff / nrm < ext_scale2(ExtFloat(1, kPrec), -150));
}

TEST_CASE("estimate_eta returns a locally optimal grid point") {
  auto h = make_hierarchy(Pde::poisson, 1, 4);
  std::vector<double> rates;
  double eta = estimate_eta(h, 100, 128, &rates);
  REQUIRE(rates.size() == 101);
  int idx = static_cast<int>(std::lround(eta * 100.0));
  CHECK(idx >= 0);
  CHECK(idx <= 100);
  if (idx > 0) CHECK(rates[static_cast<std::size_t>(idx)] <= rates[static_cast<std::size_t>(idx - 1)]);
  if (idx < 100) CHECK(rates[static_cast<std::size_t>(idx)] <= rates[static_cast<std::size_t>(idx + 1)]);
  for (std::size_t i = 0; i < rates.size(); ++i)
    CHECK(rates[static_cast<std::size_t>(idx)] <= rates[i]);
}

TEST_CASE("binary-search contracts of the precision estimators") {
  auto h = make_hierarchy(Pde::poisson, 1, 4);
  estimate_eta(h, 100, 128);
  const int q_max = 16, j_c = 4;

  WEstResult we = estimate_w(h, j_c, q_max, default_fmg_iters(Pde::poisson, 1));
  auto ratio_of = [&](int q) {
    PrecisionSchedule s;
    s.wcheck.assign(5, 200);
    s.wdot.assign(5, 200);
    s.w.assign(5, 0);
    for (int j = 1; j <= 4; ++j) s.w[static_cast<std::size_t>(j)] = 2 * j + q;
    h.apply_schedule(s);
    SolverContext c2;
    c2.reset(4);
    BfpBlock x = fmg(h, j_c, 2, c2);
    return h.error_ratio(j_c, x).to_double();
  };
  CHECK(!we.saturated);
  CHECK(ratio_of(we.q_w) <= 1.5);
  if (we.q_w > 1) CHECK(ratio_of(we.q_w - 1) > 1.5);

  std::vector<int> wsched(5, 0);
  for (int j = 1; j <= 4; ++j) wsched[static_cast<std::size_t>(j)] = 2 * j + we.q_w;
  PrecEstResult pe = bfp_prec_est(h, wsched, j_c, q_max, 1.05, 128);
  CHECK(!pe.q_check_saturated);
  CHECK(!pe.q_dot_saturated);
  auto sched_of = [&](int qc, int qd) {
    PrecisionSchedule s;
    s.wcheck.assign(5, 0);
    s.wdot.assign(5, 0);
    s.w = wsched;
    for (int j = 1; j <= 4; ++j) {
      s.wcheck[static_cast<std::size_t>(j)] = 3 * j + qc;
      s.wdot[static_cast<std::size_t>(j)] = j + qd;
    }
    return s;
  };
  double ref = pe.rho_ref.to_double();
  auto ok = [&](int qc, int qd) {
    return conv_rate_vcycle(h, sched_of(qc, qd), j_c, 128).to_double() / ref < 1.05;
  };
  CHECK(ok(pe.q_check, q_max));
  if (pe.q_check > 1) CHECK(!ok(pe.q_check - 1, q_max));
  CHECK(ok(pe.q_check, pe.q_dot));
  if (pe.q_dot > 1) CHECK(!ok(pe.q_check, pe.q_dot - 1));
}

TEST_CASE("estimated schedules keep the width ordering at every level") {
  auto h = make_hierarchy(Pde::poisson, 1, 5);
  SchedulePlan plan = estimate_schedules(h, 4, 16, 1.05, 2, 100, 128);
  plan.schedule.validate();
  for (int j = 1; j <= 5; ++j) {
    auto ju = static_cast<std::size_t>(j);
    CHECK(plan.schedule.wcheck[ju] >= plan.schedule.w[ju]);
    CHECK(plan.schedule.w[ju] >= plan.schedule.wdot[ju]);
  }
}

TEST_CASE("hybrid mode converges for standalone IR-V from a zero guess") {
  auto h = make_hierarchy(Pde::poisson, 1, 6);
  SchedulePlan plan = estimate_schedules(h, 5, 32, 1.05, 2, 100, 128);
  h.apply_schedule(plan.schedule);
  SolverContext ctx;
  ctx.policy.mode = NormMode::hybrid;
  ctx.reset(6);
  BfpBlock x0 = BfpBlock::zero_vec(h.level(6).a.rows, h.level(6).w);
  bool ok = false;
  ir(h, 6, x0, 50, -1.0, ctx, [&](int, const BfpBlock& x) {
    ok = h.error_ratio(6, x).to_double() <= 1.5;
    return ok;
  });
  CHECK(ok);
}
