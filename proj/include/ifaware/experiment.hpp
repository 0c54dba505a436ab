#pragma once

// Parameter sweep over path-navigation trials and the aggregate ordering
// report built from it.

#include <filesystem>
#include <map>
#include <vector>

#include "ifaware/env_sim.hpp"

namespace ifaware {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct SweepConfig {
  std::vector<int> n_turns{1, 2, 3};
  std::vector<AssistanceMode> assistance{AssistanceMode::Filter, AssistanceMode::Corrective,
                                         AssistanceMode::NoAssistance};
  std::vector<double> lambda_i{0.1, 0.3, 0.5, 0.7};
  std::vector<double> lambda_m{0.1, 0.3, 0.5, 0.7};
  int trials_per_cell = 500;
  double epsilon = kDefaultEntropyThreshold;
  double rho_user = 0.0;
  double rho_assumed = 0.0;
  std::uint64_t base_seed = 1;
  int segment_len = 4;
  int max_steps = kDefaultMaxSteps;
  bool record_traces = false;
  unsigned threads = 0;  // 0 picks the hardware concurrency

  /// Throws ConfigError.
  void validate() const;
  std::size_t cell_count() const {
    return n_turns.size() * assistance.size() * lambda_i.size() * lambda_m.size();
  }
};

struct CellParams {
  std::size_t index = 0;
  int n_turns = 0;
  AssistanceMode assistance = AssistanceMode::NoAssistance;
  double lambda_i = 0.0;
  double lambda_m = 0.0;
};

/// Cell `index` of the Cartesian product, ordered n_turns, assistance,
/// lambda_i, lambda_m from outermost to innermost.
CellParams cell_params(const SweepConfig& cfg, std::size_t index);

struct TrialRecord {
  std::size_t trial_id = 0;  // global, in cell order
  CellParams cell;
  std::uint64_t seed = 0;
  int optimal_steps = 0;
  int optimal_mode_switches = 0;
  TrialResult result;  // trace populated only when traces are recorded
  std::optional<PathTask> task;
};

struct SummaryStats {
  double mean = 0.0;
  double median = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 for a single value
};

SummaryStats summary_stats(std::vector<double> values);

struct SweepCellResult {
  CellParams cell;
  std::size_t trials = 0;
  SummaryStats steps;
  SummaryStats mode_switches;
  double success_rate = 0.0;
};

struct SweepOutput {
  std::vector<SweepCellResult> cells;
  std::vector<TrialRecord> trials;
};

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

/// Runs every cell. Tasks depend only on (base_seed, n_turns, trial index)
/// so all assistance and noise conditions see the same task set; the user's
/// noise stream is seeded per cell and trial.
SweepOutput run_sweep(const SweepConfig& cfg);

/// Groups trial records by cell index and recomputes the cell statistics.
std::vector<SweepCellResult> aggregate_cells(std::span<const TrialRecord> trials);

struct NoiseCellOrdering {
  double lambda_i = 0.0;
  double lambda_m = 0.0;
  std::map<AssistanceMode, double> mean_steps;  // pooled over n_turns
  std::vector<AssistanceMode> ranking;          // ascending mean steps
  bool expected_order = false;                  // Corrective < Filter < NoAssistance among present modes
  double gap_none_minus_corrective = 0.0;       // NaN when either mode is absent
};

struct GapTrend {
  double lambda_m = 0.0;
  double lambda_i_low = 0.0;
  double lambda_i_high = 0.0;
  double gap_low = 0.0;
  double gap_high = 0.0;
  bool shrinks = false;  // gap_high < gap_low
};

struct OrderingReport {
  std::vector<NoiseCellOrdering> cells;
  std::vector<GapTrend> gap_trends;
  bool ordering_holds_everywhere = false;
  bool gaps_shrink_everywhere = false;
};

OrderingReport summarize(std::span<const SweepCellResult> cells);

// ---------------------------------------------------------------------------
// Files

SweepConfig sweep_config_from_json(const nlohmann::json& j);
nlohmann::json to_json_value(const SweepConfig& cfg);
nlohmann::json to_json_value(const TrialRecord& r);
TrialRecord trial_record_from_json(const nlohmann::json& j);
nlohmann::json to_json_value(const OrderingReport& r);

/// Writes config.json, trials.jsonl, trials.csv and cells.csv into `dir`.
void write_sweep(const SweepConfig& cfg, const SweepOutput& out, const std::filesystem::path& dir);
std::vector<TrialRecord> read_trials_jsonl(const std::filesystem::path& path);

std::string format_number(double v);
std::string cells_csv(std::span<const SweepCellResult> cells);
std::string format_report(const OrderingReport& r);

}  // namespace ifaware
