#include "bfpmg/multigrid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace bfpmg {

// ---------------------------------------------------------------------------
// Schedules

PrecisionSchedule PrecisionSchedule::flat(int levels, int wc, int ww, int wd) {
  PrecisionSchedule s;
  s.wcheck.assign(static_cast<std::size_t>(levels) + 1, wc);
  s.w.assign(static_cast<std::size_t>(levels) + 1, ww);
  s.wdot.assign(static_cast<std::size_t>(levels) + 1, wd);
  s.wcheck[0] = s.w[0] = s.wdot[0] = 0;
  return s;
}

PrecisionSchedule PrecisionSchedule::affine(int levels, int m, int k, int q_check, int q_w,
                                            int q_dot) {
  PrecisionSchedule s;
  s.wcheck.assign(static_cast<std::size_t>(levels) + 1, 0);
  s.w.assign(static_cast<std::size_t>(levels) + 1, 0);
  s.wdot.assign(static_cast<std::size_t>(levels) + 1, 0);
  for (int j = 1; j <= levels; ++j) {
    int wj = k * j + q_w;
    s.w[static_cast<std::size_t>(j)] = wj;
    s.wcheck[static_cast<std::size_t>(j)] = std::max((m + k) * j + q_check, wj);
    s.wdot[static_cast<std::size_t>(j)] = std::min(m * j + q_dot, wj);
  }
  return s;
}

void PrecisionSchedule::validate() const {
  for (int j = 1; j <= levels(); ++j) {
    auto ju = static_cast<std::size_t>(j);
    if (!(wcheck[ju] >= w[ju] && w[ju] >= wdot[ju] && wdot[ju] >= 1))
      throw std::invalid_argument("PrecisionSchedule: width ordering violated at level " +
                                  std::to_string(j));
  }
}

// ---------------------------------------------------------------------------
// Gamma policy

const char* step_name(StepKind s) {
  switch (s) {
    case StepKind::ir_residual: return "ir-residual";
    case StepKind::ir_correction: return "ir-correction";
    case StepKind::v_relax: return "v-relax";
    case StepKind::v_residual: return "v-residual";
    case StepKind::v_restrict: return "v-restrict";
    case StepKind::v_correct: return "v-correct";
    case StepKind::fmg_prolong: return "fmg-prolong";
  }
  return "?";
}

int GammaPolicy::default_w_add(StepKind s, int ir_iter) {
  switch (s) {
    case StepKind::ir_residual: return ir_iter == 1 ? 5 : 4;
    case StepKind::ir_correction: return 0;
    case StepKind::v_relax: return 2;
    case StepKind::v_residual: return 4;
    case StepKind::v_restrict: return 6;
    case StepKind::v_correct: return 1;
    case StepKind::fmg_prolong: return 0;
  }
  return 0;
}

int GammaPolicy::w_tmp_for(StepKind s, int ir_iter, int w_out) const {
  int add = default_w_add(s, ir_iter);
  if (w_add_cap >= 0) add = std::min(add, w_add_cap);
  return w_out + add;
}

namespace {

// Round a positive value upward into a normalized q_gamma-bit scalar.
BfpScalar scalar_up(const ExtFloat& v, std::int64_t q_gamma) {
  if (!(v.sign() > 0)) {
    // Degenerate gamma (zero norms); keep it positive and harmless.
    return BfpBlock::scalar_raw(mpz_class(1) << static_cast<unsigned long>(q_gamma - 2), q_gamma,
                                -400 - (q_gamma - 2));
  }
  mpz_class z;
  std::int64_t k;
  v.to_mpz_2exp(z, k);
  std::int64_t s = msb(z) - q_gamma;
  mpz_class m;
  if (s <= 0) {
    m = z << static_cast<unsigned long>(-s);
  } else {
    mpz_cdiv_q_2exp(m.get_mpz_t(), z.get_mpz_t(), static_cast<mp_bitcnt_t>(s));
    if (msb(m) > q_gamma) {
      m >>= 1;
      ++s;
    }
  }
  return BfpBlock::scalar_raw(std::move(m), q_gamma, k + s);
}

// Exact infinity norm of a block as an ExtFloat (mantissas are narrow enough
// to represent exactly).
ExtFloat exact_norm_ext(const BfpBlock& x) {
  mpz_class mx = 0;
  for (const auto& v : x.mantissas()) {
    mpz_class a = abs(v);
    if (a > mx) mx = a;
  }
  mpfr_prec_t prec = std::max<mpfr_prec_t>(64, msb(mx) + 8);
  return ExtFloat::from_mpz_2exp(mx, x.e(), prec);
}

}  // namespace

std::pair<BfpScalar, int> gamma_policy_eval(const GammaPolicy& policy, StepKind step,
                                            const GammaContext& ctx, int w_out) {
  ExtFloat g(64);
  switch (step) {
    case StepKind::ir_residual:
      if (ctx.ir_iter > 1)
        g = ctx.r_norm;
      else if (ctx.has_coarse_residual)
        g = ctx.coarse_r_norm;
      else
        g = add_up(mul_up(ctx.norm_a_up, ctx.x_norm), ctx.b_norm);
      break;
    case StepKind::ir_correction:
      g = add_up(ctx.x_norm, ctx.y_norm);
      break;
    case StepKind::v_relax:
      g = mul_up(ctx.c1, ctx.r_norm);
      break;
    case StepKind::v_residual:
      // (1/4) (2 c1 + 1) ||r||
      g = ext_scale2(
          mul_up(add_up(ext_scale2(ctx.c1, 1), ExtFloat(1, ctx.c1.prec())), ctx.r_norm), -2);
      break;
    case StepKind::v_restrict:
      g = mul_up(ctx.norm_r_up, ctx.rv_norm);
      break;
    case StepKind::v_correct:
      g = add_up(ctx.y_norm, ctx.d_norm);
      break;
    case StepKind::fmg_prolong:
      g = ctx.x_norm;
      break;
  }
  return {scalar_up(g, policy.q_gamma), policy.w_tmp_for(step, ctx.ir_iter, w_out)};
}

std::string TraceRecord::to_line() const {
  std::ostringstream os;
  os << step_name(step) << " level=" << level << " w_out=" << w_out << " w_tmp=" << w_tmp
     << " gamma=" << gamma << " overflow=" << overflow << " underflow=" << underflow
     << " recompute=" << recomputed << " normalized=" << normalized_path;
  return os.str();
}

std::int64_t SolverTrace::recomputes_at_level(int level) const {
  std::int64_t n = 0;
  for (const auto& r : records)
    if (r.level == level && (r.overflow || r.underflow)) ++n;
  return n;
}

std::int64_t SolverTrace::calls_at_level(int level) const {
  std::int64_t n = 0;
  for (const auto& r : records)
    if (r.level == level) ++n;
  return n;
}

// ---------------------------------------------------------------------------
// Chebyshev coefficients

ChebCoeffsQ chebyshev_coeffs_q(const mpq_class& rho, const mpq_class& eta) {
  if (rho <= 0) throw std::domain_error("chebyshev: rho must be > 0");
  if (eta < 0 || eta > 1) throw std::domain_error("chebyshev: eta must lie in [0, 1]");
  ChebCoeffsQ r;
  r.alpha = (1 + eta) * rho / 2;
  r.c = (1 - eta) * rho / 2;
  r.beta = r.alpha - r.c * r.c / (2 * r.alpha);
  r.c1 = 2 / r.beta;
  r.c2 = mpq_class(-1) / (r.alpha * r.beta);
  return r;
}

ChebCoeffs chebyshev_coeffs(const ExtFloat& rho, const ExtFloat& eta) {
  ChebCoeffsQ q = chebyshev_coeffs_q(rho.to_mpq(), eta.to_mpq());
  mpfr_prec_t prec = std::max(rho.prec(), eta.prec());
  return ChebCoeffs{rho,
                    eta,
                    ExtFloat::from_mpq(q.alpha, prec),
                    ExtFloat::from_mpq(q.c, prec),
                    ExtFloat::from_mpq(q.beta, prec),
                    ExtFloat::from_mpq(q.c1, prec),
                    ExtFloat::from_mpq(q.c2, prec)};
}

ExtFloat max_gen_eig_upper(const CsrExt& a, const VecX& d, mpfr_prec_t prec) {
  ExtFloat lam = power_max_gen(a, d, prec);
  return mul_up(lam, ExtFloat::from_mpq(mpq_class(101, 100), prec));
}

// ---------------------------------------------------------------------------
// Quantization of ExtFloat operators

namespace {

BfpCsr quantize_csr(const CsrExt& a, int w) {
  std::vector<mpz_class> z(a.val.size());
  std::vector<std::int64_t> k(a.val.size());
  for (std::size_t i = 0; i < a.val.size(); ++i) a.val[i].to_mpz_2exp(z[i], k[i]);
  std::int64_t top = INT64_MIN;
  for (std::size_t i = 0; i < z.size(); ++i)
    if (mpz_sgn(z[i].get_mpz_t()) != 0) top = std::max(top, msb(z[i]) + k[i]);
  std::int64_t e_out = 0;
  if (top != INT64_MIN) {
    e_out = top - w;
    for (std::size_t i = 0; i < z.size(); ++i) detail::shift_floor(z[i], e_out - k[i]);
  }
  return BfpCsr(a.rows, a.cols, a.rowptr, a.col, std::move(z), w, e_out);
}

BfpBlock quantize_vec(const VecX& v, int w) { return from_extfloat(v, w); }

BfpScalar quantize_scalar_floor(const ExtFloat& v, int w) {
  mpz_class z;
  std::int64_t k;
  v.to_mpz_2exp(z, k);
  std::vector<mpz_class> zz;
  zz.push_back(std::move(z));
  std::vector<std::int64_t> kk{k};
  return quantize_exact(zz, kk, w, Layout::scalar, 1, 1);
}

CsrExt scale_rows_inv(const CsrExt& a, const VecX& d) {
  CsrExt r = a;
  for (std::int64_t i = 0; i < a.rows; ++i)
    for (std::int64_t kk = a.rowptr[static_cast<std::size_t>(i)];
         kk < a.rowptr[static_cast<std::size_t>(i) + 1]; ++kk)
      r.val[static_cast<std::size_t>(kk)] =
          a.val[static_cast<std::size_t>(kk)] / d[static_cast<std::size_t>(i)];
  return r;
}

}  // namespace

// ---------------------------------------------------------------------------
// Hierarchy

Hierarchy::Hierarchy(const ProblemSpec& finest, mpfr_prec_t prec) : prec_(prec) {
  finest.validate();
  lv_.resize(static_cast<std::size_t>(finest.level) + 1);
  for (int j = 1; j <= finest.level; ++j) {
    LevelData& L = lv_[static_cast<std::size_t>(j)];
    L.spec = finest;
    L.spec.level = j;
    auto d = assemble(L.spec, prec);
    L.a_sym = std::move(d.a);
    L.b_orig = std::move(d.b);
    L.diag = csr_diag(L.a_sym, prec);
    L.m_a = L.a_sym.max_row_nnz();
    if (j >= 2) {
      L.p = prolongation(L.spec, j, prec);
      L.m_p = L.p.max_row_nnz();
    }
  }
}

void Hierarchy::setup_scaling(int l_est) {
  l_est_ = std::min(l_est, levels());
  const LevelData& E = lv_[static_cast<std::size_t>(l_est_)];
  rho_ = max_gen_eig_upper(E.a_sym, E.diag, prec_);
  // Fine-to-coarse scaling so that diag(A) = I, building the
  // solution-preserving restrictions along the way.
  VecX d_f = lv_[static_cast<std::size_t>(levels())].diag;
  for (int i = levels(); i >= 1; --i) {
    LevelData& L = lv_[static_cast<std::size_t>(i)];
    L.a = scale_rows_inv(L.a_sym, d_f);
    L.b = L.b_orig;
    for (std::size_t t = 0; t < L.b.size(); ++t) L.b[t] /= d_f[t];
    if (i > 1) {
      const VecX& d_c = lv_[static_cast<std::size_t>(i - 1)].diag;
      CsrExt pt = csr_transpose(L.p);
      // R = D_c^{-1} P^T D_f
      for (std::int64_t row = 0; row < pt.rows; ++row)
        for (std::int64_t kk = pt.rowptr[static_cast<std::size_t>(row)];
             kk < pt.rowptr[static_cast<std::size_t>(row) + 1]; ++kk) {
          auto& v = pt.val[static_cast<std::size_t>(kk)];
          v *= d_f[static_cast<std::size_t>(pt.col[static_cast<std::size_t>(kk)])];
          v /= d_c[static_cast<std::size_t>(row)];
        }
      L.r = std::move(pt);
      L.m_r = L.r.max_row_nnz();
      d_f = d_c;
    }
    L.norm_a_up = csr_inf_norm_up(L.a);
    if (i > 1) L.norm_r_up = csr_inf_norm_up(L.r);
  }
  scaled_ = true;
}

void Hierarchy::set_eta(double eta) {
  if (!scaled_) throw std::logic_error("set_eta: setup_scaling has not run");
  eta_ = eta;
  long num = std::lround(eta * 100.0);
  mpq_class eta_q;
  if (std::abs(eta - static_cast<double>(num) / 100.0) < 1e-12)
    eta_q = mpq_class(num, 100);
  else
    eta_q = mpq_class(eta);
  eta_q.canonicalize();
  ChebCoeffsQ q = chebyshev_coeffs_q(rho_.to_mpq(), eta_q);
  cheby_ = ChebCoeffs{rho_,
                      ExtFloat::from_mpq(eta_q, prec_),
                      ExtFloat::from_mpq(q.alpha, prec_),
                      ExtFloat::from_mpq(q.c, prec_),
                      ExtFloat::from_mpq(q.beta, prec_),
                      ExtFloat::from_mpq(q.c1, prec_),
                      ExtFloat::from_mpq(q.c2, prec_)};
  for (int j = 1; j <= levels(); ++j)
    if (lv_[static_cast<std::size_t>(j)].wdot > 0) {
      LevelData& L = lv_[static_cast<std::size_t>(j)];
      L.c1_dot = quantize_scalar_floor(cheby_.c1, L.wdot);
      L.c2_dot = quantize_scalar_floor(cheby_.c2, L.wdot);
    }
}

void Hierarchy::apply_schedule(const PrecisionSchedule& s) {
  if (!scaled_) throw std::logic_error("apply_schedule: setup_scaling has not run");
  if (s.levels() < levels())
    throw std::invalid_argument("apply_schedule: schedule shorter than hierarchy");
  for (int j = 1; j <= levels(); ++j) {
    LevelData& L = lv_[static_cast<std::size_t>(j)];
    auto ju = static_cast<std::size_t>(j);
    bool same = L.wcheck == s.wcheck[ju] && L.w == s.w[ju] && L.wdot == s.wdot[ju];
    if (!same) {
      L.wcheck = s.wcheck[ju];
      L.w = s.w[ju];
      L.wdot = s.wdot[ju];
      L.a_check = quantize_csr(L.a, L.wcheck);
      L.a_dot = quantize_csr(L.a, L.wdot);
      L.b_check = quantize_vec(L.b, L.wcheck);
      if (j >= 2) {
        L.p_w = quantize_csr(L.p, L.w);
        L.p_dot = quantize_csr(L.p, L.wdot);
        L.r_dot = quantize_csr(L.r, L.wdot);
      }
    }
    L.c1_dot = quantize_scalar_floor(cheby_.c1, L.wdot);
    L.c2_dot = quantize_scalar_floor(cheby_.c2, L.wdot);
  }
  sched_ = s;
}

const VecX& Hierarchy::reference(int j) {
  LevelData& L = lv_[static_cast<std::size_t>(j)];
  if (!L.u_ref) {
    Discretization d{L.a_sym, L.b_orig};
    L.u_ref = reference_solve(d, prec_);
  }
  return *L.u_ref;
}

const ExtFloat& Hierarchy::discretization_error(int j) {
  LevelData& L = lv_[static_cast<std::size_t>(j)];
  if (!L.disc_err) {
    reference(j);
    L.disc_err = energy_error(*L.u_ref, L.spec, prec_);
  }
  return *L.disc_err;
}

ExtFloat Hierarchy::algebraic_err(int j, const BfpBlock& x) {
  LevelData& L = lv_[static_cast<std::size_t>(j)];
  VecX xe = to_extfloat_vec(x, prec_);
  return a_norm_diff(L.a_sym, reference(j), xe);
}

ExtFloat Hierarchy::error_ratio(int j, const BfpBlock& x) {
  // ||u - x||_L^2 = ||u - u_h||_L^2 + ||u_h - x||_A^2 (Galerkin orthogonality)
  ExtFloat alg = algebraic_err(j, x);
  ExtFloat rel = alg / discretization_error(j);
  return ext_sqrt(ExtFloat(1, prec_) + rel * rel);
}

// ---------------------------------------------------------------------------
// Solver steps

namespace {

BfpBlock run_step(SolverContext& ctx, StepKind step, int level, const GammaContext& g,
                  const ExactKernel& k, int w_out) {
  auto [gamma, w_tmp] = gamma_policy_eval(ctx.policy, step, g, w_out);
  bool normalized_path = true;
  switch (ctx.policy.mode) {
    case NormMode::normalized: normalized_path = true; break;
    case NormMode::nonnormalized: normalized_path = false; break;
    case NormMode::hybrid:
      normalized_path =
          step == StepKind::ir_residual && g.ir_iter <= ctx.policy.hybrid_qcomp_iters;
      break;
  }
  QcompResult res = normalized_path ? qcomp(k, w_out, w_tmp, gamma) : nnqcomp(k, w_out, gamma);
  if (ctx.trace) {
    TraceRecord tr;
    tr.step = step;
    tr.level = level;
    tr.w_out = w_out;
    tr.w_tmp = normalized_path ? w_tmp : w_out;
    tr.gamma = to_extfloat(gamma, 0, 64).str(6);
    tr.overflow = res.flags.overflow;
    tr.underflow = res.flags.underflow;
    tr.recomputed = res.flags.recomputed;
    tr.normalized_path = normalized_path;
    ctx.trace->records.push_back(std::move(tr));
  }
  return std::move(res.z);
}

}  // namespace

BfpBlock vcycle(Hierarchy& h, int lev, const BfpBlock& r, SolverContext& ctx) {
  LevelData& L = h.level(lev);
  const int wd = L.wdot;
  GammaContext g;
  g.c1 = h.cheby().c1;
  g.r_norm = exact_norm_ext(r);
  g.norm_r_up = L.norm_r_up;

  EgemvKernel relax(L.a_dot, r, r, L.c2_dot, L.c1_dot, L.m_a);
  BfpBlock y = run_step(ctx, StepKind::v_relax, lev, g, relax, wd);
  if (lev > 1) {
    EgemvKernel resid(L.a_dot, y, r, bfp_one(), bfp_minus_one(), L.m_a);
    BfpBlock rv = run_step(ctx, StepKind::v_residual, lev, g, resid, wd);

    g.rv_norm = exact_norm_ext(rv);
    EspmvKernel restrict_k(L.r_dot, rv, L.m_r);
    BfpBlock rc = run_step(ctx, StepKind::v_restrict, lev, g, restrict_k, wd);

    BfpBlock d = vcycle(h, lev - 1, rc, ctx);

    g.y_norm = exact_norm_ext(y);
    g.d_norm = exact_norm_ext(d);
    EgemvKernel correct(L.p_dot, d, y, bfp_minus_one(), bfp_one(), L.m_p);
    y = run_step(ctx, StepKind::v_correct, lev, g, correct, wd);
  }
  return y;
}

IrResult ir(Hierarchy& h, int lev, const BfpBlock& x0, int max_iters, double tol,
            SolverContext& ctx, const IrObserver& after_correction) {
  LevelData& L = h.level(lev);
  if (ctx.last_res_norm.size() != static_cast<std::size_t>(h.levels()) + 1) ctx.reset(h.levels());
  IrResult out;
  out.x = x0;
  const ExtFloat tol_ext(tol, 64);
  for (int i = 1; i <= max_iters; ++i) {
    GammaContext g;
    g.ir_iter = i;
    g.norm_a_up = L.norm_a_up;
    g.x_norm = exact_norm_ext(out.x);
    g.b_norm = exact_norm_ext(L.b_check);
    if (i > 1) {
      g.r_norm = *ctx.last_res_norm[static_cast<std::size_t>(lev)];
    } else if (lev > 1 && ctx.last_res_norm[static_cast<std::size_t>(lev - 1)]) {
      g.has_coarse_residual = true;
      g.coarse_r_norm = *ctx.last_res_norm[static_cast<std::size_t>(lev - 1)];
    }
    EgemvKernel resid(L.a_check, out.x, L.b_check, bfp_one(), bfp_minus_one(), L.m_a);
    BfpBlock r = run_step(ctx, StepKind::ir_residual, lev, g, resid, L.wdot);

    ExtFloat rn = exact_norm_ext(r);
    ctx.last_res_norm[static_cast<std::size_t>(lev)] = rn;
    out.res_history.push_back(rn.to_double());
    out.iters = i;
    if (tol >= 0 && rn < tol_ext) {
      out.hit_tol = true;
      break;
    }

    BfpBlock y = vcycle(h, lev, r, ctx);

    g.y_norm = exact_norm_ext(y);
    EaxpbyKernel corr(out.x, y, bfp_one(), bfp_minus_one());
    out.x = run_step(ctx, StepKind::ir_correction, lev, g, corr, L.w);
    if (after_correction && after_correction(i, out.x)) {
      out.accepted = true;
      break;
    }
  }
  return out;
}

BfpBlock fmg(Hierarchy& h, int lev, int n_ir, SolverContext& ctx, const FmgObserver& obs) {
  if (ctx.last_res_norm.size() != static_cast<std::size_t>(h.levels()) + 1) ctx.reset(h.levels());
  LevelData& L = h.level(lev);
  BfpBlock x;
  if (lev == 1) {
    x = BfpBlock::zero_vec(L.a.rows, L.w);
  } else {
    BfpBlock xc = fmg(h, lev - 1, n_ir, ctx, obs);
    GammaContext g;
    g.x_norm = exact_norm_ext(xc);
    EspmvKernel prolong(L.p_w, xc, L.m_p);
    x = run_step(ctx, StepKind::fmg_prolong, lev, g, prolong, L.w);
  }
  for (int i = 0; i < n_ir; ++i) x = ir(h, lev, x, 1, -1.0, ctx).x;
  if (obs) obs(lev, x);
  return x;
}

int default_fmg_iters(Pde pde, int degree) {
  if (pde == Pde::poisson && degree >= 1 && degree <= 6) {
    static constexpr int n[] = {2, 1, 1, 3, 7, 15};
    return n[degree - 1];
  }
  if (pde == Pde::biharmonic && degree >= 3 && degree <= 6) {
    static constexpr int n[] = {2, 1, 2, 4};
    return n[degree - 3];
  }
  return 0;
}

// ---------------------------------------------------------------------------
// Convergence rate and precision estimation

ExtFloat rho_v_of_columns(const std::vector<VecX>& v_cols, const CsrExt& a_sym,
                          mpfr_prec_t prec) {
  const std::int64_t n = a_sym.rows;
  bool all_zero = true;
  for (const auto& c : v_cols)
    for (const auto& e : c) all_zero &= e.is_zero();
  if (all_zero) return ExtFloat(0, prec);

  BandedCholesky chol(a_sym, prec);
  VecX x = vecx(n, prec);
  for (std::int64_t i = 0; i < n; ++i)
    x[static_cast<std::size_t>(i)] = ExtFloat(1.0 + static_cast<double>(i % 7) / 8.0, prec);
  ExtFloat lam(prec), lam_prev(prec);
  const ExtFloat tol(1e-7, prec);
  for (int it = 0; it < 200; ++it) {
    VecX t = vecx(n, prec);
    for (std::int64_t jc = 0; jc < n; ++jc)
      axpy(t, x[static_cast<std::size_t>(jc)], v_cols[static_cast<std::size_t>(jc)]);
    VecX w = spmv(a_sym, t, prec);
    ExtFloat num = dot(t, w);
    ExtFloat den = quad_form(a_sym, x);
    lam = num / den;
    if (it > 2 && ext_abs(lam - lam_prev) <= tol * ext_abs(lam)) break;
    lam_prev = lam;
    VecX s = vecx(n, prec);
    for (std::int64_t jc = 0; jc < n; ++jc)
      s[static_cast<std::size_t>(jc)] = dot(v_cols[static_cast<std::size_t>(jc)], w);
    chol.solve(s);
    ExtFloat nrm = inf_norm(s);
    if (nrm.is_zero()) return ExtFloat(0, prec);
    for (auto& v : s) v /= nrm;
    x = std::move(s);
  }
  if (lam.sign() < 0) return ExtFloat(0, prec);
  return ext_sqrt(lam);
}

ExtFloat conv_rate_vcycle(Hierarchy& h, const PrecisionSchedule& s, int j, mpfr_prec_t eig_prec) {
  h.apply_schedule(s);
  LevelData& L = h.level(j);
  const std::int64_t n = L.a.rows;
  SolverContext ctx;  // normalized mode, no trace
  ctx.reset(h.levels());

  BfpBlock zero_b = BfpBlock::zero_vec(n, L.wcheck);
  std::vector<VecX> cols;
  cols.reserve(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    VecX unit = vecx(n, 64);
    unit[static_cast<std::size_t>(i)] = ExtFloat(1, 64);
    BfpBlock e_i = from_extfloat(unit, L.wdot);
    // One IR-V error-propagation step with b = 0: column = (I - B A) e_i.
    GammaContext g;
    g.ir_iter = 1;
    g.norm_a_up = L.norm_a_up;
    g.x_norm = ExtFloat(1, 64);
    g.b_norm = ExtFloat(0, 64);
    EgemvKernel resid(L.a_check, e_i, zero_b, bfp_one(), bfp_minus_one(), L.m_a);
    BfpBlock r = run_step(ctx, StepKind::ir_residual, j, g, resid, L.wdot);
    BfpBlock y = vcycle(h, j, r, ctx);
    g.y_norm = exact_norm_ext(y);
    EaxpbyKernel corr(e_i, y, bfp_one(), bfp_minus_one());
    BfpBlock xp = run_step(ctx, StepKind::ir_correction, j, g, corr, L.w);
    cols.push_back(to_extfloat_vec(xp, eig_prec));
  }
  return rho_v_of_columns(cols, L.a_sym, eig_prec);
}

double estimate_eta(Hierarchy& h, int probe_width, mpfr_prec_t eig_prec,
                    std::vector<double>* rates) {
  if (!h.scaled()) throw std::logic_error("estimate_eta: setup_scaling has not run");
  PrecisionSchedule probe =
      PrecisionSchedule::flat(h.levels(), probe_width, probe_width, probe_width);
  int best_i = 0;
  double best_rate = 0.0;
  for (int i = 0; i <= 100; ++i) {
    h.set_eta(static_cast<double>(i) / 100.0);
    double rate = conv_rate_vcycle(h, probe, h.l_est(), eig_prec).to_double();
    if (rates) rates->push_back(rate);
    if (i == 0 || rate < best_rate) {
      best_rate = rate;
      best_i = i;
    }
  }
  double eta = static_cast<double>(best_i) / 100.0;
  h.set_eta(eta);
  return eta;
}

namespace {

// Minimal q in [1, q_max] with pred(q) true, assuming a monotone predicate.
int binary_search_min_true(int q_max, const std::function<bool(int)>& pred, bool* saturated) {
  if (!pred(q_max)) {
    *saturated = true;
    return q_max;
  }
  *saturated = false;
  int lo = 0, hi = q_max;  // pred(lo) treated false, pred(hi) known true
  while (hi - lo > 1) {
    int mid = lo + (hi - lo) / 2;
    if (pred(mid))
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

std::vector<int> affine_widths(int levels, int slope, int q) {
  std::vector<int> w(static_cast<std::size_t>(levels) + 1, 0);
  for (int j = 1; j <= levels; ++j) w[static_cast<std::size_t>(j)] = slope * j + q;
  return w;
}

}  // namespace

PrecEstResult bfp_prec_est(Hierarchy& h, const std::vector<int>& w_sched, int j_c, int q_max,
                           double rho_thresh, mpfr_prec_t eig_prec) {
  j_c = std::min(j_c, h.levels());
  const int m = h.level(1).spec.order_m();
  const int k = h.level(1).spec.order_k();
  auto sched_of = [&](int q_check, int q_dot) {
    PrecisionSchedule s;
    s.wcheck = affine_widths(h.levels(), m + k, q_check);
    s.wdot = affine_widths(h.levels(), m, q_dot);
    s.w.assign(w_sched.begin(), w_sched.end());
    return s;
  };
  PrecEstResult out;
  out.rho_ref = conv_rate_vcycle(h, sched_of(q_max, q_max), j_c, eig_prec);
  const ExtFloat thresh(rho_thresh, 64);
  auto ok = [&](const ExtFloat& rate) { return rate / out.rho_ref < thresh; };
  out.q_check = binary_search_min_true(
      q_max, [&](int q) { return ok(conv_rate_vcycle(h, sched_of(q, q_max), j_c, eig_prec)); },
      &out.q_check_saturated);
  out.q_dot = binary_search_min_true(
      q_max,
      [&](int q) { return ok(conv_rate_vcycle(h, sched_of(out.q_check, q), j_c, eig_prec)); },
      &out.q_dot_saturated);
  return out;
}

WEstResult estimate_w(Hierarchy& h, int j_c, int q_max, int n_ir, int safe_width) {
  j_c = std::min(j_c, h.levels());
  const int k = h.level(1).spec.order_k();
  WEstResult out;
  auto pred = [&](int q) {
    PrecisionSchedule s;
    s.wcheck.assign(static_cast<std::size_t>(h.levels()) + 1, safe_width);
    s.wdot.assign(static_cast<std::size_t>(h.levels()) + 1, safe_width);
    s.w = affine_widths(h.levels(), k, q);
    h.apply_schedule(s);
    SolverContext ctx;
    ctx.reset(h.levels());
    BfpBlock x = fmg(h, j_c, n_ir, ctx);
    return h.error_ratio(j_c, x).to_double() <= 1.5;
  };
  out.q_w = binary_search_min_true(q_max, pred, &out.saturated);
  return out;
}

SchedulePlan estimate_schedules(Hierarchy& h, int j_c, int q_max, double rho_thresh, int n_ir,
                                int eta_probe_width, mpfr_prec_t eig_prec) {
  if (!h.scaled()) h.setup_scaling(std::min(5, h.levels()));
  SchedulePlan plan;
  plan.eta = estimate_eta(h, eta_probe_width, eig_prec);
  WEstResult we = estimate_w(h, j_c, q_max, n_ir);
  plan.q_w = we.q_w;
  const int m = h.level(1).spec.order_m();
  const int k = h.level(1).spec.order_k();
  PrecEstResult pe =
      bfp_prec_est(h, affine_widths(h.levels(), k, we.q_w), j_c, q_max, rho_thresh, eig_prec);
  plan.q_check = pe.q_check;
  plan.q_dot = pe.q_dot;
  plan.saturated = we.saturated || pe.q_check_saturated || pe.q_dot_saturated;
  plan.schedule = PrecisionSchedule::affine(h.levels(), m, k, pe.q_check, we.q_w, pe.q_dot);
  plan.schedule.validate();
  h.apply_schedule(plan.schedule);
  return plan;
}

}  // namespace bfpmg
