#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "bfpmg/multigrid.hpp"

namespace bfpmg {

enum class ScheduleMode { minwidth, estimated, fixed };

/// Resolved experiment configuration: flat key=value file plus command-line
/// overrides, no environment variables.
struct ExperimentConfig {
  Pde pde = Pde::poisson;
  int dim = 1;
  std::vector<int> degrees{1};
  int level_min = 1;
  int level_max = 8;
  ScheduleMode schedule = ScheduleMode::estimated;
  int fixed_width = 64;
  NormMode norm_mode = NormMode::normalized;
  std::map<int, int> n_override;  // degree -> N
  int n_fixed = 20;               // IR-V iterations per level for fixed-width FMG
  int w_add_cap = -1;
  std::string out_dir = ".";
  long ext_prec = 400;
  int eig_prec = 128;
  int eta_probe_width = 128;
  int j_c = 5;
  int l_est = 5;
  int q_max = 64;
  double rho_thresh = 1.05;
  std::vector<int> quant_widths{5, 10, 15};
  int quant_eigs = 8;
  int ir_cap = 50;  // iteration cap of the min-width protocol
  std::uint64_t seed = 1;
  int threads = 0;  // 0 = hardware concurrency

  std::string echo;    // canonical key=value lines
  std::uint64_t hash = 0;

  int fmg_iters(int degree) const;
};

std::map<std::string, std::string> read_config_file(const std::string& path);
ExperimentConfig resolve_config(std::map<std::string, std::string> kv);
std::uint64_t fnv1a(const std::string& s);

struct CommandResult {
  std::string csv;
  bool checks_ok = true;
  std::vector<std::string> notes;
};

CommandResult cmd_quant_error(const ExperimentConfig& cfg);
CommandResult cmd_min_width(const ExperimentConfig& cfg);
CommandResult cmd_fmg(const ExperimentConfig& cfg);
CommandResult cmd_prec_est(const ExperimentConfig& cfg);
CommandResult cmd_recompute_table(const ExperimentConfig& cfg);

/// Hierarchy plus estimated schedule for one (pde, dim, degree) case, shared
/// between commands and the acceptance suite.
struct StudySetup {
  std::unique_ptr<Hierarchy> h;
  SchedulePlan plan;
  int n_ir = 1;
};
StudySetup make_estimated_setup(const ExperimentConfig& cfg, int degree, int levels);

/// Per-level FMG outcome of one run.
struct FmgLevelRow {
  int level = 0;
  double error = 0.0;
  double ref_error = 0.0;
  double ratio = 0.0;
  std::map<StepKind, std::int64_t> recomputes;
  std::int64_t recompute_total = 0;
  std::int64_t calls_total = 0;
};
std::vector<FmgLevelRow> run_fmg_study(Hierarchy& h, const PrecisionSchedule& s, int n_ir,
                                       NormMode mode, int w_add_cap);

/// Staged minimum-width search of one (degree, level): returns the found
/// (wcheck, w, wdot).
struct MinWidthRow {
  int level = 0;
  int wcheck = 0, w = 0, wdot = 0;
};
MinWidthRow min_width_search(Hierarchy& h, int level, int ir_cap, int safe_width = 200);

void run_tasks(std::vector<std::function<void()>> tasks, int threads);

}  // namespace bfpmg
