#include "bfpmg/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "bfpmg/analysis.hpp"

namespace bfpmg {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

int to_int(const std::string& s) { return std::stoi(trim(s)); }

}  // namespace

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw std::runtime_error("bad config line: " + line);
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

int ExperimentConfig::fmg_iters(int degree) const {
  auto it = n_override.find(degree);
  if (it != n_override.end()) return it->second;
  int n = default_fmg_iters(pde, degree);
  if (n == 0)
    throw std::runtime_error("no FMG iteration count for degree " + std::to_string(degree) +
                             "; set n_override");
  return n;
}

ExperimentConfig resolve_config(std::map<std::string, std::string> kv) {
  ExperimentConfig c;
  auto take = [&](const char* key) -> std::optional<std::string> {
    auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    std::string v = it->second;
    kv.erase(it);
    return v;
  };
  if (auto v = take("pde")) {
    if (*v == "poisson")
      c.pde = Pde::poisson;
    else if (*v == "biharmonic")
      c.pde = Pde::biharmonic;
    else
      throw std::runtime_error("pde must be poisson or biharmonic");
  }
  if (auto v = take("dim")) c.dim = to_int(*v);
  if (auto v = take("p")) {
    c.degrees.clear();
    for (auto& t : split(*v, ',')) c.degrees.push_back(to_int(t));
  }
  if (auto v = take("levels")) {
    auto pos = v->find("..");
    if (pos == std::string::npos) {
      c.level_min = c.level_max = to_int(*v);
    } else {
      c.level_min = to_int(v->substr(0, pos));
      c.level_max = to_int(v->substr(pos + 2));
    }
  }
  if (auto v = take("schedule")) {
    if (*v == "minwidth")
      c.schedule = ScheduleMode::minwidth;
    else if (*v == "estimated")
      c.schedule = ScheduleMode::estimated;
    else if (*v == "fixed")
      c.schedule = ScheduleMode::fixed;
    else
      throw std::runtime_error("schedule must be minwidth, estimated, or fixed");
  }
  if (auto v = take("fixed_width")) c.fixed_width = to_int(*v);
  if (auto v = take("norm_mode")) {
    if (*v == "qcomp")
      c.norm_mode = NormMode::normalized;
    else if (*v == "nnqcomp")
      c.norm_mode = NormMode::nonnormalized;
    else if (*v == "hybrid")
      c.norm_mode = NormMode::hybrid;
    else
      throw std::runtime_error("norm_mode must be qcomp, nnqcomp, or hybrid");
  }
  if (auto v = take("n_override")) {
    for (auto& t : split(*v, ',')) {
      if (trim(t).empty()) continue;
      auto parts = split(t, ':');
      if (parts.size() != 2) throw std::runtime_error("n_override entries are p:N");
      c.n_override[to_int(parts[0])] = to_int(parts[1]);
    }
  }
  if (auto v = take("n_fixed")) c.n_fixed = to_int(*v);
  if (auto v = take("w_add_cap")) c.w_add_cap = (*v == "inf") ? -1 : to_int(*v);
  if (auto v = take("out")) c.out_dir = *v;
  if (auto v = take("ext_prec")) c.ext_prec = to_int(*v);
  if (auto v = take("eig_prec")) c.eig_prec = to_int(*v);
  if (auto v = take("eta_probe_width")) c.eta_probe_width = to_int(*v);
  if (auto v = take("j_c")) c.j_c = to_int(*v);
  if (auto v = take("l_est")) c.l_est = to_int(*v);
  if (auto v = take("q_max")) c.q_max = to_int(*v);
  if (auto v = take("rho_thresh")) c.rho_thresh = std::stod(*v);
  if (auto v = take("quant_widths")) {
    c.quant_widths.clear();
    for (auto& t : split(*v, ',')) c.quant_widths.push_back(to_int(t));
  }
  if (auto v = take("quant_eigs")) c.quant_eigs = to_int(*v);
  if (auto v = take("ir_cap")) c.ir_cap = to_int(*v);
  if (auto v = take("seed")) c.seed = std::stoull(*v);
  if (auto v = take("threads")) c.threads = to_int(*v);
  if (!kv.empty()) throw std::runtime_error("unknown config key: " + kv.begin()->first);

  if (c.level_min < 1 || c.level_max < c.level_min)
    throw std::runtime_error("bad level range");
  for (int p : c.degrees) {
    ProblemSpec probe{c.pde, c.dim, p, c.level_max};
    probe.validate();
  }

  std::ostringstream os;
  os << "dim=" << c.dim << '\n';
  os << "eig_prec=" << c.eig_prec << '\n';
  os << "eta_probe_width=" << c.eta_probe_width << '\n';
  os << "ext_prec=" << c.ext_prec << '\n';
  os << "fixed_width=" << c.fixed_width << '\n';
  os << "ir_cap=" << c.ir_cap << '\n';
  os << "j_c=" << c.j_c << '\n';
  os << "l_est=" << c.l_est << '\n';
  os << "levels=" << c.level_min << ".." << c.level_max << '\n';
  os << "n_fixed=" << c.n_fixed << '\n';
  os << "n_override=";
  for (auto& [p, n] : c.n_override) os << p << ':' << n << ',';
  os << '\n';
  os << "norm_mode="
     << (c.norm_mode == NormMode::normalized
             ? "qcomp"
             : (c.norm_mode == NormMode::nonnormalized ? "nnqcomp" : "hybrid"))
     << '\n';
  os << "out=" << c.out_dir << '\n';
  os << "p=";
  for (int p : c.degrees) os << p << ',';
  os << '\n';
  os << "pde=" << (c.pde == Pde::poisson ? "poisson" : "biharmonic") << '\n';
  os << "q_max=" << c.q_max << '\n';
  os << "quant_eigs=" << c.quant_eigs << '\n';
  os << "quant_widths=";
  for (int w : c.quant_widths) os << w << ',';
  os << '\n';
  os << "rho_thresh=" << fmt_double(c.rho_thresh) << '\n';
  os << "schedule="
     << (c.schedule == ScheduleMode::minwidth
             ? "minwidth"
             : (c.schedule == ScheduleMode::estimated ? "estimated" : "fixed"))
     << '\n';
  os << "seed=" << c.seed << '\n';
  os << "threads=" << c.threads << '\n';
  os << "w_add_cap=" << c.w_add_cap << '\n';
  c.echo = os.str();
  c.hash = fnv1a(c.echo);
  return c;
}

void run_tasks(std::vector<std::function<void()>> tasks, int threads) {
  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  if (threads < 1) threads = 1;
  threads = std::min<int>(threads, static_cast<int>(tasks.size()));
  if (threads <= 1) {
    for (auto& t : tasks) t();
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= tasks.size()) return;
        try {
          tasks[i]();
        } catch (...) {
          errors[static_cast<std::size_t>(w)] = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

namespace {

std::string csv_header(const char* cmd, const ExperimentConfig& cfg) {
  std::ostringstream os;
  char hex[32];
  std::snprintf(hex, sizeof hex, "%016" PRIx64, cfg.hash);
  os << "# bfpmg " << cmd << '\n';
  os << "# config_hash=" << hex << '\n';
  os << "# float_digits=17\n";
  return os.str();
}

}  // namespace

StudySetup make_estimated_setup(const ExperimentConfig& cfg, int degree, int levels) {
  StudySetup s;
  ProblemSpec spec{cfg.pde, cfg.dim, degree, levels};
  s.h = std::make_unique<Hierarchy>(spec, cfg.ext_prec);
  s.h->setup_scaling(cfg.l_est);
  s.n_ir = cfg.fmg_iters(degree);
  s.plan = estimate_schedules(*s.h, std::min(cfg.j_c, levels), cfg.q_max, cfg.rho_thresh, s.n_ir,
                              cfg.eta_probe_width, cfg.eig_prec);
  return s;
}

std::vector<FmgLevelRow> run_fmg_study(Hierarchy& h, const PrecisionSchedule& s, int n_ir,
                                       NormMode mode, int w_add_cap) {
  h.apply_schedule(s);
  SolverContext ctx;
  ctx.policy.mode = mode;
  ctx.policy.w_add_cap = w_add_cap;
  SolverTrace trace;
  ctx.trace = &trace;
  ctx.reset(h.levels());
  std::vector<FmgLevelRow> rows;
  auto obs = [&](int level, const BfpBlock& x) {
    FmgLevelRow row;
    row.level = level;
    row.ref_error = h.discretization_error(level).to_double();
    row.ratio = h.error_ratio(level, x).to_double();
    row.error = row.ratio * row.ref_error;
    rows.push_back(row);
  };
  fmg(h, h.levels(), n_ir, ctx, obs);
  for (auto& row : rows) {
    row.recompute_total = trace.recomputes_at_level(row.level);
    row.calls_total = trace.calls_at_level(row.level);
    for (const auto& r : trace.records)
      if (r.level == row.level && (r.overflow || r.underflow)) ++row.recomputes[r.step];
  }
  return rows;
}

MinWidthRow min_width_search(Hierarchy& h, int level, int ir_cap, int safe_width) {
  MinWidthRow out;
  out.level = level;
  // Initial guess: prolongated exact solution of the next coarser grid,
  // quantized at the run's working width; zero on the coarsest level.
  auto initial_guess = [&](int w_width) {
    if (level == 1) return BfpBlock::zero_vec(h.level(1).a.rows, w_width);
    VecX x0 = spmv(h.level(level).p, h.reference(level - 1), h.prec());
    return from_extfloat(x0, w_width);
  };
  auto accepted = [&](int wc, int ww, int wd) {
    PrecisionSchedule s = PrecisionSchedule::flat(h.levels(), wc, ww, wd);
    h.apply_schedule(s);
    SolverContext ctx;
    ctx.reset(h.levels());
    bool ok = false;
    auto check = [&](int, const BfpBlock& x) {
      ok = h.error_ratio(level, x).to_double() <= 1.5;
      return ok;
    };
    ir(h, level, initial_guess(ww), ir_cap, -1.0, ctx, check);
    return ok;
  };
  auto search = [&](auto&& try_width) {
    for (int cand = 1; cand <= safe_width; ++cand)
      if (try_width(cand)) return cand;
    throw std::runtime_error("min_width_search: no acceptable width below the safe width");
  };
  out.wcheck = search([&](int c) { return accepted(c, safe_width, safe_width); });
  out.w = search([&](int c) { return accepted(out.wcheck, c, safe_width); });
  out.wdot = search([&](int c) { return accepted(out.wcheck, out.w, c); });
  return out;
}

CommandResult cmd_quant_error(const ExperimentConfig& cfg) {
  CommandResult res;
  struct Row {
    int p, j, i, w;
    double e, bound;
  };
  struct Slot {
    std::vector<Row> rows;
  };
  std::vector<std::pair<int, int>> points;
  for (int p : cfg.degrees)
    for (int j = cfg.level_min; j <= cfg.level_max; ++j) points.emplace_back(p, j);
  std::vector<Slot> slots(points.size());
  std::vector<std::function<void()>> tasks;
  for (std::size_t t = 0; t < points.size(); ++t) {
    tasks.push_back([&, t] {
      auto [p, j] = points[t];
      ProblemSpec spec{cfg.pde, cfg.dim, p, j};
      auto d = assemble(spec, cfg.ext_prec);
      auto rep = smallest_eigpairs(d.a, cfg.quant_eigs, cfg.ext_prec);
      double sqrt_kappa = ext_sqrt(rep.kappa).to_double();
      for (int i = 0; i < cfg.quant_eigs; ++i)
        for (int w : cfg.quant_widths) {
          double eps = std::ldexp(1.0, 1 - w);
          double e = quant_error(rep.eigenvectors[static_cast<std::size_t>(i)], w, d.a,
                                 cfg.ext_prec)
                         .to_double();
          slots[t].rows.push_back(Row{p, j, i + 1, w, e, sqrt_kappa * eps});
        }
    });
  }
  run_tasks(std::move(tasks), cfg.threads);

  std::ostringstream os;
  os << csv_header("quant-error", cfg);
  os << "pde,p,j,i,w,E,sqrt_kappa_times_eps\n";
  const char* pde = cfg.pde == Pde::poisson ? "poisson" : "biharmonic";
  for (auto& slot : slots)
    for (auto& r : slot.rows) {
      os << pde << ',' << r.p << ',' << r.j << ',' << r.i << ',' << r.w << ',' << fmt_double(r.e)
         << ',' << fmt_double(r.bound) << '\n';
      if (r.e > 4.0 * r.bound) {
        res.checks_ok = false;
        res.notes.push_back("E exceeds 4 sqrt(kappa) eps at p=" + std::to_string(r.p) +
                            " j=" + std::to_string(r.j));
      }
    }
  res.csv = os.str();
  return res;
}

CommandResult cmd_min_width(const ExperimentConfig& cfg) {
  CommandResult res;
  struct Slot {
    MinWidthRow row;
  };
  std::vector<std::pair<int, int>> points;
  for (int p : cfg.degrees)
    for (int j = cfg.level_min; j <= cfg.level_max; ++j) points.emplace_back(p, j);
  std::vector<Slot> slots(points.size());
  std::vector<std::function<void()>> tasks;
  for (std::size_t t = 0; t < points.size(); ++t) {
    tasks.push_back([&, t] {
      auto [p, j] = points[t];
      ProblemSpec spec{cfg.pde, cfg.dim, p, j};
      Hierarchy h(spec, cfg.ext_prec);
      h.setup_scaling(cfg.l_est);
      estimate_eta(h, cfg.eta_probe_width, cfg.eig_prec);
      slots[t].row = min_width_search(h, j, cfg.ir_cap);
    });
  }
  run_tasks(std::move(tasks), cfg.threads);

  std::ostringstream os;
  os << csv_header("min-width", cfg);
  os << "pde,p,j,which,min_bits\n";
  const char* pde = cfg.pde == Pde::poisson ? "poisson" : "biharmonic";
  std::map<int, MinWidthRow> prev;  // per degree, previous level's row
  for (std::size_t t = 0; t < points.size(); ++t) {
    auto [p, j] = points[t];
    const MinWidthRow& r = slots[t].row;
    os << pde << ',' << p << ',' << j << ",wcheck," << r.wcheck << '\n';
    os << pde << ',' << p << ',' << j << ",w," << r.w << '\n';
    os << pde << ',' << p << ',' << j << ",wdot," << r.wdot << '\n';
    auto it = prev.find(p);
    if (it != prev.end() &&
        (r.wcheck < it->second.wcheck || r.w < it->second.w || r.wdot < it->second.wdot))
      res.notes.push_back("min_bits not monotone at p=" + std::to_string(p) +
                          " j=" + std::to_string(j));
    prev[p] = r;
  }
  res.csv = os.str();
  return res;
}

namespace {

void fmg_rows_to_csv(std::ostringstream& os, const ExperimentConfig& cfg, int p,
                     const char* mode_name, const PrecisionSchedule& s, int n_ir,
                     const std::vector<FmgLevelRow>& rows, int level_min) {
  const char* pde = cfg.pde == Pde::poisson ? "poisson" : "biharmonic";
  for (const auto& r : rows) {
    if (r.level < level_min) continue;
    auto ju = static_cast<std::size_t>(r.level);
    os << pde << ',' << p << ',' << r.level << ',' << mode_name << ',' << fmt_double(r.error)
       << ',' << fmt_double(r.ref_error) << ',' << fmt_double(r.ratio) << ',' << s.wcheck[ju]
       << ',' << s.w[ju] << ',' << s.wdot[ju] << ',' << n_ir << ',' << r.recompute_total << ','
       << r.calls_total;
    for (StepKind step : {StepKind::ir_residual, StepKind::ir_correction, StepKind::v_relax,
                          StepKind::v_residual, StepKind::v_restrict, StepKind::v_correct,
                          StepKind::fmg_prolong}) {
      auto it = r.recomputes.find(step);
      os << ',' << (it == r.recomputes.end() ? 0 : it->second);
    }
    os << '\n';
  }
}

constexpr const char* kFmgColumns =
    "pde,p,j,mode,error,ref_error,ratio,wcheck,w,wdot,N,recomputes,calls,"
    "rc_ir_residual,rc_ir_correction,rc_v_relax,rc_v_residual,rc_v_restrict,rc_v_correct,"
    "rc_fmg_prolong\n";

}  // namespace

CommandResult cmd_fmg(const ExperimentConfig& cfg) {
  CommandResult res;
  struct Slot {
    std::ostringstream os;
    bool ok = true;
    std::vector<std::string> notes;
  };
  std::vector<Slot> slots(cfg.degrees.size());
  std::vector<std::function<void()>> tasks;
  for (std::size_t t = 0; t < cfg.degrees.size(); ++t) {
    tasks.push_back([&, t] {
      int p = cfg.degrees[t];
      Slot& slot = slots[t];
      const char* mode_name = cfg.schedule == ScheduleMode::fixed
                                  ? "fixed"
                                  : (cfg.norm_mode == NormMode::normalized
                                         ? "progressive-qcomp"
                                         : (cfg.norm_mode == NormMode::nonnormalized
                                                ? "progressive-nnqcomp"
                                                : "progressive-hybrid"));
      if (cfg.schedule == ScheduleMode::fixed) {
        ProblemSpec spec{cfg.pde, cfg.dim, p, cfg.level_max};
        Hierarchy h(spec, cfg.ext_prec);
        h.setup_scaling(cfg.l_est);
        estimate_eta(h, cfg.eta_probe_width, cfg.eig_prec);
        PrecisionSchedule s = PrecisionSchedule::flat(cfg.level_max, cfg.fixed_width,
                                                      cfg.fixed_width, cfg.fixed_width);
        auto rows = run_fmg_study(h, s, cfg.n_fixed, cfg.norm_mode, cfg.w_add_cap);
        fmg_rows_to_csv(slot.os, cfg, p, mode_name, s, cfg.n_fixed, rows, cfg.level_min);
      } else {
        StudySetup setup = make_estimated_setup(cfg, p, cfg.level_max);
        auto rows = run_fmg_study(*setup.h, setup.plan.schedule, setup.n_ir, cfg.norm_mode,
                                  cfg.w_add_cap);
        fmg_rows_to_csv(slot.os, cfg, p, mode_name, setup.plan.schedule, setup.n_ir, rows,
                        cfg.level_min);
        for (const auto& r : rows)
          if (r.level >= cfg.level_min && r.ratio > 1.5) {
            slot.ok = false;
            slot.notes.push_back("ratio above 1.5 at p=" + std::to_string(p) +
                                 " j=" + std::to_string(r.level));
          }
      }
    });
  }
  run_tasks(std::move(tasks), cfg.threads);

  std::ostringstream os;
  os << csv_header("fmg", cfg) << kFmgColumns;
  for (auto& slot : slots) {
    os << slot.os.str();
    res.checks_ok &= slot.ok;
    res.notes.insert(res.notes.end(), slot.notes.begin(), slot.notes.end());
  }
  res.csv = os.str();
  return res;
}

CommandResult cmd_prec_est(const ExperimentConfig& cfg) {
  CommandResult res;
  struct Slot {
    std::ostringstream os;
    bool ok = true;
  };
  std::vector<Slot> slots(cfg.degrees.size());
  std::vector<std::function<void()>> tasks;
  for (std::size_t t = 0; t < cfg.degrees.size(); ++t) {
    tasks.push_back([&, t] {
      int p = cfg.degrees[t];
      Slot& slot = slots[t];
      StudySetup setup = make_estimated_setup(cfg, p, cfg.level_max);
      auto rows =
          run_fmg_study(*setup.h, setup.plan.schedule, setup.n_ir, cfg.norm_mode, cfg.w_add_cap);
      const char* pde = cfg.pde == Pde::poisson ? "poisson" : "biharmonic";
      for (const auto& r : rows) {
        if (r.level < cfg.level_min) continue;
        auto ju = static_cast<std::size_t>(r.level);
        const auto& s = setup.plan.schedule;
        if (!(s.wcheck[ju] >= s.w[ju] && s.w[ju] >= s.wdot[ju])) slot.ok = false;
        slot.os << pde << ',' << p << ',' << r.level << ',' << s.wcheck[ju] << ',' << s.w[ju]
                << ',' << s.wdot[ju] << ',' << fmt_double(setup.plan.eta) << ','
                << fmt_double(r.error) << ',' << fmt_double(r.ratio) << '\n';
      }
    });
  }
  run_tasks(std::move(tasks), cfg.threads);

  std::ostringstream os;
  os << csv_header("prec-est", cfg);
  os << "pde,p,j,wcheck,w,wdot,eta,error,ratio\n";
  for (auto& slot : slots) {
    os << slot.os.str();
    res.checks_ok &= slot.ok;
  }
  res.csv = os.str();
  return res;
}

CommandResult cmd_recompute_table(const ExperimentConfig& cfg) {
  CommandResult res;
  struct Slot {
    std::ostringstream os;
    bool ok = true;
    std::vector<std::string> notes;
  };
  std::vector<Slot> slots(cfg.degrees.size());
  std::vector<std::function<void()>> tasks;
  for (std::size_t t = 0; t < cfg.degrees.size(); ++t) {
    tasks.push_back([&, t] {
      int p = cfg.degrees[t];
      Slot& slot = slots[t];
      StudySetup setup = make_estimated_setup(cfg, p, cfg.level_max);
      const char* pde = cfg.pde == Pde::poisson ? "poisson" : "biharmonic";
      std::int64_t prev_count = -1;
      for (int cap : {-1, 4, 2, 0}) {
        auto rows =
            run_fmg_study(*setup.h, setup.plan.schedule, setup.n_ir, cfg.norm_mode, cap);
        const auto& top = rows.back();
        slot.os << pde << ',' << p << ',' << (cap < 0 ? std::string("inf") : std::to_string(cap))
                << ',' << top.recompute_total << ',' << top.calls_total << '\n';
        if (cap < 0 && cfg.pde == Pde::poisson && cfg.dim == 1 && top.recompute_total != 0) {
          slot.ok = false;
          slot.notes.push_back("recomputations at unlimited w_add for p=" + std::to_string(p));
        }
        if (prev_count >= 0 && top.recompute_total < prev_count)
          slot.notes.push_back("recompute counts not monotone in cap at p=" + std::to_string(p));
        prev_count = top.recompute_total;
      }
    });
  }
  run_tasks(std::move(tasks), cfg.threads);

  std::ostringstream os;
  os << csv_header("recompute-table", cfg);
  os << "pde,p,w_add_cap,recomputes,calls\n";
  for (auto& slot : slots) {
    os << slot.os.str();
    res.checks_ok &= slot.ok;
    res.notes.insert(res.notes.end(), slot.notes.begin(), slot.notes.end());
  }
  res.csv = os.str();
  return res;
}

}  // namespace bfpmg
