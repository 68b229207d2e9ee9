#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bfpmg/blas.hpp"
#include "bfpmg/fem.hpp"

namespace bfpmg {

/// Per-level mantissa widths, 1-based (index 0 unused): input/matrix width
/// wcheck, working width w, inner width wdot, with wcheck >= w >= wdot.
struct PrecisionSchedule {
  std::vector<int> wcheck, w, wdot;

  static PrecisionSchedule flat(int levels, int wc, int ww, int wd);
  /// wcheck_j = (m+k) j + q_check, w_j = k j + q_w, wdot_j = m j + q_dot,
  /// clamped so the ordering invariant holds at every level.
  static PrecisionSchedule affine(int levels, int m, int k, int q_check, int q_w, int q_dot);

  int levels() const { return static_cast<int>(w.size()) - 1; }
  void validate() const;
};

enum class NormMode { normalized, nonnormalized, hybrid };

enum class StepKind {
  ir_residual,
  ir_correction,
  v_relax,
  v_residual,
  v_restrict,
  v_correct,
  fmg_prolong,
};

const char* step_name(StepKind s);

/// Per-step gamma rule and extra temporary bits (Table-1 defaults), plus the
/// normalization mode. w_tmp = w_out + min(w_add, w_add_cap).
struct GammaPolicy {
  NormMode mode = NormMode::normalized;
  int w_add_cap = -1;  // -1 = unlimited
  int hybrid_qcomp_iters = 2;
  std::int64_t q_gamma = 16;

  static int default_w_add(StepKind s, int ir_iter);
  int w_tmp_for(StepKind s, int ir_iter, int w_out) const;
};

/// Norms and constants a gamma rule may consume.
struct GammaContext {
  int ir_iter = 1;
  bool has_coarse_residual = false;
  ExtFloat coarse_r_norm;  // ||r^(N)_{l-1}||
  ExtFloat r_norm;         // ||r^(i-1)|| resp. current V-cycle input
  ExtFloat rv_norm;        // ||r_v||
  ExtFloat x_norm, y_norm, d_norm, b_norm;
  ExtFloat c1, norm_r_up, norm_a_up;

  GammaContext()
      : coarse_r_norm(64), r_norm(64), rv_norm(64), x_norm(64), y_norm(64), d_norm(64),
        b_norm(64), c1(64), norm_r_up(64), norm_a_up(64) {}
};

/// Table-1 gamma (rounded upward into a normalized positive scalar) and the
/// temporary width for one solver step.
std::pair<BfpScalar, int> gamma_policy_eval(const GammaPolicy& policy, StepKind step,
                                            const GammaContext& ctx, int w_out);

struct TraceRecord {
  StepKind step;
  int level = 0;
  int w_out = 0;
  int w_tmp = 0;
  std::string gamma;
  bool overflow = false;
  bool underflow = false;
  bool recomputed = false;
  bool normalized_path = true;

  std::string to_line() const;
};

struct SolverTrace {
  std::vector<TraceRecord> records;
  void clear() { records.clear(); }
  std::int64_t recomputes_at_level(int level) const;
  std::int64_t calls_at_level(int level) const;
};

/// Exact closed form of the two-iteration Chebyshev coefficients.
struct ChebCoeffsQ {
  mpq_class alpha, c, beta, c1, c2;
};
ChebCoeffsQ chebyshev_coeffs_q(const mpq_class& rho, const mpq_class& eta);

struct ChebCoeffs {
  ExtFloat rho, eta, alpha, c, beta, c1, c2;
};
ChebCoeffs chebyshev_coeffs(const ExtFloat& rho, const ExtFloat& eta);

/// Upper bound on the largest eigenvalue of A x = lambda D x: power iteration
/// in ExtFloat times a 101/100 safety factor.
ExtFloat max_gen_eig_upper(const CsrExt& a, const VecX& d, mpfr_prec_t prec);

/// One refinement level: ExtFloat masters plus the BFP quantizations the
/// solver consumes.
struct LevelData {
  ProblemSpec spec;
  CsrExt a_sym;   // assembled SPD operator (energy norms, eigenproblems)
  VecX b_orig;    // assembled load
  CsrExt a;       // D^{-1} A after setup (unit diagonal)
  VecX b;         // D^{-1} b
  CsrExt p;       // prolongation master (level-1 -> level)
  CsrExt r;       // restriction master D_c^{-1} P^T D_f
  VecX diag;      // diag of a_sym (pre-scaling)
  ExtFloat norm_r_up{ExtFloat::kDefaultPrec};
  ExtFloat norm_a_up{ExtFloat::kDefaultPrec};
  std::int64_t m_a = 0, m_p = 0, m_r = 0;

  // Quantized operators at the current schedule widths.
  int wcheck = 0, w = 0, wdot = 0;
  BfpCsr a_check, a_dot, p_w, p_dot, r_dot;
  BfpBlock b_check;
  BfpScalar c1_dot, c2_dot;

  // Lazily computed reference data.
  std::optional<VecX> u_ref;
  std::optional<ExtFloat> disc_err;
};

class Hierarchy {
 public:
  /// Assembles masters for levels 1..finest.level (prolongations from 2).
  Hierarchy(const ProblemSpec& finest, mpfr_prec_t prec);

  int levels() const { return static_cast<int>(lv_.size()) - 1; }
  LevelData& level(int j) { return lv_[static_cast<std::size_t>(j)]; }
  const LevelData& level(int j) const { return lv_[static_cast<std::size_t>(j)]; }
  mpfr_prec_t prec() const { return prec_; }
  int l_est() const { return l_est_; }

  /// D = I scaling, restriction build, generalized-eigenvalue bound at the
  /// estimation level (min(5, levels) unless overridden).
  void setup_scaling(int l_est = 5);
  bool scaled() const { return scaled_; }

  /// Chebyshev coefficients for a given eta (requires setup_scaling).
  void set_eta(double eta);
  const ChebCoeffs& cheby() const { return cheby_; }
  const ExtFloat& rho() const { return rho_; }
  double eta() const { return eta_; }

  /// Quantize all operators at the given widths (levels 1..levels()).
  void apply_schedule(const PrecisionSchedule& s);
  const PrecisionSchedule& schedule() const { return sched_; }

  /// Reference Galerkin solution and discretization error at a level, lazily.
  const VecX& reference(int j);
  const ExtFloat& discretization_error(int j);
  /// ||u - x||_L / ||u - u_h||_L via the Galerkin identity.
  ExtFloat error_ratio(int j, const BfpBlock& x);
  ExtFloat algebraic_err(int j, const BfpBlock& x);

 private:
  mpfr_prec_t prec_;
  std::vector<LevelData> lv_;
  bool scaled_ = false;
  int l_est_ = 5;
  ExtFloat rho_{ExtFloat::kDefaultPrec};
  double eta_ = 0.0;
  ChebCoeffs cheby_{ExtFloat(0, 64), ExtFloat(0, 64), ExtFloat(0, 64), ExtFloat(0, 64),
                    ExtFloat(0, 64), ExtFloat(0, 64), ExtFloat(0, 64)};
  PrecisionSchedule sched_;
};

/// Runtime knobs shared by one solver run.
struct SolverContext {
  GammaPolicy policy;
  SolverTrace* trace = nullptr;
  /// Per-level ||r|| after the most recent IR iteration (exact, as ExtFloat).
  std::vector<std::optional<ExtFloat>> last_res_norm;

  void reset(int levels) { last_res_norm.assign(static_cast<std::size_t>(levels) + 1, std::nullopt); }
};

struct IrResult {
  BfpBlock x;
  std::vector<double> res_history;
  bool hit_tol = false;
  bool accepted = false;  // an observer stopped the iteration
  int iters = 0;
};

/// V(1,0)-cycle correction: relax, residual, restrict, recurse, correct.
BfpBlock vcycle(Hierarchy& h, int lev, const BfpBlock& r, SolverContext& ctx);

/// Called after each correction; returning true stops the iteration.
using IrObserver = std::function<bool(int iter, const BfpBlock& x)>;

/// Iterative refinement with the V-cycle inner solver. tol < 0 reproduces the
/// listed tol = -1 semantics: exactly max_iters corrections, no residual
/// stopping test.
IrResult ir(Hierarchy& h, int lev, const BfpBlock& x0, int max_iters, double tol,
            SolverContext& ctx, const IrObserver& after_correction = nullptr);

using FmgObserver = std::function<void(int level, const BfpBlock& x)>;

/// Full multigrid with n_ir IR-V iterations per level; the observer sees the
/// accepted iterate of every level.
BfpBlock fmg(Hierarchy& h, int lev, int n_ir, SolverContext& ctx,
             const FmgObserver& obs = nullptr);

/// FMG iteration counts from the reference study (poisson p = 1..6,
/// biharmonic p = 3..6); returns 0 when unknown.
int default_fmg_iters(Pde pde, int degree);

/// ||V||_A at level j for the given widths: V is built by applying one IR-V
/// error-propagation step to the canonical basis vectors in BFP arithmetic,
/// the generalized eigenproblem VT A V x = lambda A x is solved in ExtFloat.
ExtFloat conv_rate_vcycle(Hierarchy& h, const PrecisionSchedule& s, int j, mpfr_prec_t eig_prec);

/// rho_v = sqrt(lambda_max(VT A V, A)) for an explicitly given column set.
ExtFloat rho_v_of_columns(const std::vector<VecX>& v_cols, const CsrExt& a_sym,
                          mpfr_prec_t prec);

/// Empirical eta: argmin of the V-cycle rate over eta = i/100, i = 0..100,
/// ties toward smaller i; evaluated at flat probe widths.
double estimate_eta(Hierarchy& h, int probe_width, mpfr_prec_t eig_prec,
                    std::vector<double>* rates = nullptr);

struct PrecEstResult {
  int q_check = 0, q_dot = 0;
  bool q_check_saturated = false, q_dot_saturated = false;
  ExtFloat rho_ref{ExtFloat::kDefaultPrec};
};

/// Alg.-2 style estimation of the additive constants for wcheck and wdot by
/// binary search against a reference convergence rate.
PrecEstResult bfp_prec_est(Hierarchy& h, const std::vector<int>& w_sched, int j_c, int q_max,
                           double rho_thresh, mpfr_prec_t eig_prec);

struct WEstResult {
  int q_w = 0;
  bool saturated = false;
};

/// Surrogate for the working-width schedule: w_j = k j + q_w with q_w minimal
/// such that the FMG error ratio at level j_c stays <= 1.5.
WEstResult estimate_w(Hierarchy& h, int j_c, int q_max, int n_ir, int safe_width = 200);

/// Full schedule estimation: eta, w (surrogate), then Alg.-2 constants.
struct SchedulePlan {
  double eta = 0.0;
  int q_w = 0, q_check = 0, q_dot = 0;
  PrecisionSchedule schedule;
  bool saturated = false;
};
SchedulePlan estimate_schedules(Hierarchy& h, int j_c, int q_max, double rho_thresh, int n_ir,
                                int eta_probe_width, mpfr_prec_t eig_prec);

}  // namespace bfpmg
