#include "ifaware/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

namespace ifaware {

void SweepConfig::validate() const {
  if (n_turns.empty() || assistance.empty() || lambda_i.empty() || lambda_m.empty()) {
    throw ConfigError("sweep parameter lists must be non-empty");
  }
  if (trials_per_cell < 1) throw ConfigError("trials_per_cell must be >= 1");
  for (int n : n_turns) {
    if (n < 0) throw ConfigError("n_turns must be >= 0");
  }
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  for (double l : lambda_i) {
    if (!unit(l)) throw ConfigError("lambda_i values must be in [0, 1]");
  }
  for (double l : lambda_m) {
    if (!unit(l)) throw ConfigError("lambda_m values must be in [0, 1]");
  }
  if (!unit(epsilon)) throw ConfigError("epsilon must be in [0, 1]");
  if (!unit(rho_user) || !unit(rho_assumed)) throw ConfigError("rho values must be in [0, 1]");
  if (segment_len < 1) throw ConfigError("segment_len must be >= 1");
  if (max_steps < 1) throw ConfigError("max_steps must be >= 1");
}

CellParams cell_params(const SweepConfig& cfg, std::size_t index) {
  CellParams p;
  p.index = index;
  std::size_t rest = index;
  const std::size_t m = rest % cfg.lambda_m.size();
  rest /= cfg.lambda_m.size();
  const std::size_t i = rest % cfg.lambda_i.size();
  rest /= cfg.lambda_i.size();
  const std::size_t a = rest % cfg.assistance.size();
  rest /= cfg.assistance.size();
  p.n_turns = cfg.n_turns.at(rest);
  p.assistance = cfg.assistance[a];
  p.lambda_i = cfg.lambda_i[i];
  p.lambda_m = cfg.lambda_m[m];
  return p;
}

SummaryStats summary_stats(std::vector<double> values) {
  SummaryStats s;
  if (values.empty()) return s;
  const double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  s.median = values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / (n - 1.0));
  }
  return s;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t kTaskStream = 0x7461736bULL;

SweepCellResult cell_result(const CellParams& cell, std::span<const TrialRecord> trials) {
  SweepCellResult r;
  r.cell = cell;
  r.trials = trials.size();
  std::vector<double> steps;
  std::vector<double> switches;
  std::size_t ok = 0;
  for (const auto& t : trials) {
    steps.push_back(t.result.steps_total);
    switches.push_back(t.result.mode_switches);
    if (t.result.success) ++ok;
  }
  r.steps = summary_stats(std::move(steps));
  r.mode_switches = summary_stats(std::move(switches));
  r.success_rate = trials.empty() ? 0.0 : static_cast<double>(ok) / static_cast<double>(trials.size());
  return r;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(splitmix64(base) ^ a) ^ b);
}

SweepOutput run_sweep(const SweepConfig& cfg) {
  cfg.validate();
  const std::size_t n_cells = cfg.cell_count();
  const auto per_cell = static_cast<std::size_t>(cfg.trials_per_cell);
  const ControlMapping f = default_mapping();

  SweepOutput out;
  out.trials.resize(n_cells * per_cell);
  out.cells.resize(n_cells);

  auto run_cell = [&](std::size_t c) {
    const CellParams cell = cell_params(cfg, c);
    SimulatedUser user;
    user.tables = noise_tables(NoiseLevel(cell.lambda_i), NoiseLevel(cell.lambda_m), f);
    user.policy_noise = cfg.rho_user;
    user.rng_seed = derive_seed(cfg.base_seed, c);
    const AssistanceConfig assist(cell.assistance, cfg.epsilon);
    TrialOptions opts;
    opts.rho_assumed = cfg.rho_assumed;
    opts.record_trace = cfg.record_traces;

    for (std::size_t k = 0; k < per_cell; ++k) {
      Rng task_rng(derive_seed(cfg.base_seed ^ kTaskStream, static_cast<std::uint64_t>(cell.n_turns), k));
      const PathTask task = generate_task(cell.n_turns, cfg.segment_len, cfg.max_steps, task_rng);
      TrialRecord& rec = out.trials[c * per_cell + k];
      rec.trial_id = c * per_cell + k;
      rec.cell = cell;
      rec.seed = derive_seed(user.rng_seed, k);
      rec.optimal_steps = task.optimal_steps;
      rec.optimal_mode_switches = task.optimal_mode_switches;
      Rng rng(rec.seed);
      rec.result = run_trial(task, user, assist, f, rng, opts);
      if (cfg.record_traces) rec.task = task;
    }
    out.cells[c] = cell_result(cell, std::span(out.trials).subspan(c * per_cell, per_cell));
  };

  unsigned workers = cfg.threads != 0 ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n_cells));
  if (workers <= 1) {
    for (std::size_t c = 0; c < n_cells; ++c) run_cell(c);
    return out;
  }
  std::atomic<std::size_t> next{0};
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t c = next++; c < n_cells; c = next++) run_cell(c);
      });
    }
  }
  return out;
}

std::vector<SweepCellResult> aggregate_cells(std::span<const TrialRecord> trials) {
  std::map<std::size_t, std::vector<TrialRecord>> by_cell;
  for (const auto& t : trials) by_cell[t.cell.index].push_back(t);
  std::vector<SweepCellResult> cells;
  for (const auto& [index, group] : by_cell) {
    std::vector<TrialRecord> sorted = group;
    std::sort(sorted.begin(), sorted.end(),
              [](const TrialRecord& a, const TrialRecord& b) { return a.trial_id < b.trial_id; });
    cells.push_back(cell_result(sorted.front().cell, sorted));
  }
  return cells;
}

OrderingReport summarize(std::span<const SweepCellResult> cells) {
  struct Acc {
    double weighted = 0.0;
    double count = 0.0;
  };
  std::map<std::pair<double, double>, std::map<AssistanceMode, Acc>> pooled;
  for (const auto& c : cells) {
    auto& acc = pooled[{c.cell.lambda_i, c.cell.lambda_m}][c.cell.assistance];
    acc.weighted += c.steps.mean * static_cast<double>(c.trials);
    acc.count += static_cast<double>(c.trials);
  }

  constexpr std::array kExpected{AssistanceMode::Corrective, AssistanceMode::Filter, AssistanceMode::NoAssistance};
  OrderingReport report;
  report.ordering_holds_everywhere = true;
  for (const auto& [key, modes] : pooled) {
    NoiseCellOrdering row;
    row.lambda_i = key.first;
    row.lambda_m = key.second;
    for (const auto& [mode, acc] : modes) {
      row.mean_steps[mode] = acc.weighted / acc.count;
      row.ranking.push_back(mode);
    }
    std::stable_sort(row.ranking.begin(), row.ranking.end(), [&row](AssistanceMode a, AssistanceMode b) {
      return row.mean_steps[a] < row.mean_steps[b];
    });
    // Strict chain over the expected order, restricted to the modes present.
    row.expected_order = true;
    std::optional<double> prev;
    for (AssistanceMode m : kExpected) {
      auto it = row.mean_steps.find(m);
      if (it == row.mean_steps.end()) continue;
      if (prev && !(*prev < it->second)) row.expected_order = false;
      prev = it->second;
    }
    const bool has_gap =
        row.mean_steps.count(AssistanceMode::NoAssistance) && row.mean_steps.count(AssistanceMode::Corrective);
    row.gap_none_minus_corrective =
        has_gap ? row.mean_steps[AssistanceMode::NoAssistance] - row.mean_steps[AssistanceMode::Corrective]
                : std::numeric_limits<double>::quiet_NaN();
    report.ordering_holds_everywhere = report.ordering_holds_everywhere && row.expected_order;
    report.cells.push_back(std::move(row));
  }

  std::set<double> lambda_m_values;
  for (const auto& row : report.cells) lambda_m_values.insert(row.lambda_m);
  report.gaps_shrink_everywhere = true;
  for (double lm : lambda_m_values) {
    const NoiseCellOrdering* low = nullptr;
    const NoiseCellOrdering* high = nullptr;
    for (const auto& row : report.cells) {
      if (row.lambda_m != lm || std::isnan(row.gap_none_minus_corrective)) continue;
      if (low == nullptr || row.lambda_i < low->lambda_i) low = &row;
      if (high == nullptr || row.lambda_i > high->lambda_i) high = &row;
    }
    if (low == nullptr || low == high) continue;
    GapTrend g{lm, low->lambda_i, high->lambda_i, low->gap_none_minus_corrective, high->gap_none_minus_corrective,
               high->gap_none_minus_corrective < low->gap_none_minus_corrective};
    report.gaps_shrink_everywhere = report.gaps_shrink_everywhere && g.shrinks;
    report.gap_trends.push_back(g);
  }
  if (report.gap_trends.empty()) report.gaps_shrink_everywhere = false;
  return report;
}

// ---------------------------------------------------------------------------

namespace {

template <class T>
std::vector<T> list_field(const nlohmann::json& j, const char* key, std::vector<T> fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_array()) throw ConfigError(std::string(key) + " must be a list");
  return v.get<std::vector<T>>();
}

}  // namespace

SweepConfig sweep_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("sweep config must be a JSON object");
  static const std::set<std::string> kKnown{"n_turns",     "assistance",   "lambda_i",    "lambda_m",
                                            "trials_per_cell", "epsilon",  "rho_user",    "rho_assumed",
                                            "base_seed",   "segment_len",  "max_steps",   "record_traces",
                                            "threads"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!kKnown.count(it.key())) throw ConfigError("unknown sweep config field '" + it.key() + "'");
  }
  SweepConfig c;
  try {
    c.n_turns = list_field<int>(j, "n_turns", c.n_turns);
    c.assistance = list_field<AssistanceMode>(j, "assistance", c.assistance);
    c.lambda_i = list_field<double>(j, "lambda_i", c.lambda_i);
    c.lambda_m = list_field<double>(j, "lambda_m", c.lambda_m);
    c.trials_per_cell = j.value("trials_per_cell", c.trials_per_cell);
    c.epsilon = j.value("epsilon", c.epsilon);
    c.rho_user = j.value("rho_user", c.rho_user);
    c.rho_assumed = j.value("rho_assumed", c.rho_assumed);
    c.base_seed = j.value("base_seed", c.base_seed);
    c.segment_len = j.value("segment_len", c.segment_len);
    c.max_steps = j.value("max_steps", c.max_steps);
    c.record_traces = j.value("record_traces", c.record_traces);
    c.threads = j.value("threads", c.threads);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("bad sweep config: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::json to_json_value(const SweepConfig& c) {
  return {{"n_turns", c.n_turns},
          {"assistance", c.assistance},
          {"lambda_i", c.lambda_i},
          {"lambda_m", c.lambda_m},
          {"trials_per_cell", c.trials_per_cell},
          {"epsilon", c.epsilon},
          {"rho_user", c.rho_user},
          {"rho_assumed", c.rho_assumed},
          {"base_seed", c.base_seed},
          {"segment_len", c.segment_len},
          {"max_steps", c.max_steps},
          {"record_traces", c.record_traces}};
}

nlohmann::json to_json_value(const TrialRecord& r) {
  nlohmann::json j = {{"trial_id", r.trial_id},
                      {"cell", r.cell.index},
                      {"assistance", r.cell.assistance},
                      {"n_turns", r.cell.n_turns},
                      {"lambda_i", r.cell.lambda_i},
                      {"lambda_m", r.cell.lambda_m},
                      {"seed", r.seed},
                      {"optimal_steps", r.optimal_steps},
                      {"optimal_mode_switches", r.optimal_mode_switches}};
  j.update(nlohmann::json(r.result));
  if (r.task) j["task"] = *r.task;
  return j;
}

TrialRecord trial_record_from_json(const nlohmann::json& j) {
  TrialRecord r;
  r.trial_id = j.at("trial_id").get<std::size_t>();
  r.cell.index = j.at("cell").get<std::size_t>();
  r.cell.assistance = j.at("assistance").get<AssistanceMode>();
  r.cell.n_turns = j.at("n_turns").get<int>();
  r.cell.lambda_i = j.at("lambda_i").get<double>();
  r.cell.lambda_m = j.at("lambda_m").get<double>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.optimal_steps = j.at("optimal_steps").get<int>();
  r.optimal_mode_switches = j.at("optimal_mode_switches").get<int>();
  r.result.steps_total = j.at("steps").get<int>();
  r.result.mode_switches = j.at("mode_switches").get<int>();
  r.result.success = j.at("success").get<bool>();
  r.result.final_distance = {j.at("dist_xy").get<int>(), j.at("dist_theta").get<int>()};
  if (j.contains("trace")) r.result.trace = j.at("trace").get<std::vector<EnvStep>>();
  if (j.contains("task")) r.task = j.at("task").get<PathTask>();
  return r;
}

nlohmann::json to_json_value(const OrderingReport& r) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : r.cells) {
    nlohmann::json means = nlohmann::json::object();
    for (const auto& [m, v] : c.mean_steps) means[std::string(to_string(m))] = v;
    cells.push_back({{"lambda_i", c.lambda_i},
                     {"lambda_m", c.lambda_m},
                     {"mean_steps", means},
                     {"ranking", c.ranking},
                     {"expected_order", c.expected_order},
                     {"gap_none_minus_corrective",
                      std::isnan(c.gap_none_minus_corrective) ? nlohmann::json(nullptr)
                                                              : nlohmann::json(c.gap_none_minus_corrective)}});
  }
  nlohmann::json gaps = nlohmann::json::array();
  for (const auto& g : r.gap_trends) {
    gaps.push_back({{"lambda_m", g.lambda_m},
                    {"lambda_i_low", g.lambda_i_low},
                    {"lambda_i_high", g.lambda_i_high},
                    {"gap_low", g.gap_low},
                    {"gap_high", g.gap_high},
                    {"shrinks", g.shrinks}});
  }
  return {{"cells", cells},
          {"gap_trends", gaps},
          {"ordering_holds_everywhere", r.ordering_holds_everywhere},
          {"gaps_shrink_everywhere", r.gaps_shrink_everywhere}};
}

std::string format_number(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

std::string cells_csv(std::span<const SweepCellResult> cells) {
  std::ostringstream os;
  os << "cell,assistance,n_turns,lambda_i,lambda_m,trials,steps_mean,steps_median,steps_stddev,"
        "mode_switches_mean,mode_switches_median,mode_switches_stddev,success_rate\n";
  for (const auto& c : cells) {
    os << c.cell.index << ',' << to_string(c.cell.assistance) << ',' << c.cell.n_turns << ','
       << format_number(c.cell.lambda_i) << ',' << format_number(c.cell.lambda_m) << ',' << c.trials << ','
       << format_number(c.steps.mean) << ',' << format_number(c.steps.median) << ','
       << format_number(c.steps.stddev) << ',' << format_number(c.mode_switches.mean) << ','
       << format_number(c.mode_switches.median) << ',' << format_number(c.mode_switches.stddev) << ','
       << format_number(c.success_rate) << '\n';
  }
  return os.str();
}

void write_sweep(const SweepConfig& cfg, const SweepOutput& out, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&dir](const char* name) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
    return f;
  };
  open("config.json") << to_json_value(cfg).dump(2) << '\n';

  auto jsonl = open("trials.jsonl");
  auto csv = open("trials.csv");
  csv << "trial_id,assistance,n_turns,lambda_i,lambda_m,steps,mode_switches,success,dist_xy,dist_theta\n";
  for (const auto& t : out.trials) {
    jsonl << to_json_value(t).dump() << '\n';
    csv << t.trial_id << ',' << to_string(t.cell.assistance) << ',' << t.cell.n_turns << ','
        << format_number(t.cell.lambda_i) << ',' << format_number(t.cell.lambda_m) << ',' << t.result.steps_total
        << ',' << t.result.mode_switches << ',' << (t.result.success ? 1 : 0) << ',' << t.result.final_distance.xy
        << ',' << t.result.final_distance.theta << '\n';
  }
  open("cells.csv") << cells_csv(out.cells);
}

std::vector<TrialRecord> read_trials_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<TrialRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(trial_record_from_json(nlohmann::json::parse(line)));
  }
  return out;
}

std::string format_report(const OrderingReport& r) {
  std::ostringstream os;
  os << "lambda_i  lambda_m  ";
  std::set<AssistanceMode> modes;
  for (const auto& c : r.cells) {
    for (const auto& [m, v] : c.mean_steps) modes.insert(m);
  }
  for (AssistanceMode m : modes) os << to_string(m) << "  ";
  os << "ranking  order_ok\n";
  for (const auto& c : r.cells) {
    os << format_number(c.lambda_i) << "  " << format_number(c.lambda_m) << "  ";
    for (AssistanceMode m : modes) {
      auto it = c.mean_steps.find(m);
      os << (it == c.mean_steps.end() ? std::string("-") : format_number(std::round(it->second * 100) / 100))
         << "  ";
    }
    for (std::size_t i = 0; i < c.ranking.size(); ++i) os << (i ? "<" : "") << to_string(c.ranking[i]);
    os << "  " << (c.expected_order ? "yes" : "no") << '\n';
  }
  os << "gap (no_assistance - corrective) by lambda_m:\n";
  for (const auto& g : r.gap_trends) {
    os << "  lambda_m=" << format_number(g.lambda_m) << "  lambda_i=" << format_number(g.lambda_i_low) << ": "
       << format_number(std::round(g.gap_low * 100) / 100) << "  lambda_i=" << format_number(g.lambda_i_high)
       << ": " << format_number(std::round(g.gap_high * 100) / 100) << "  shrinks=" << (g.shrinks ? "yes" : "no")
       << '\n';
  }
  os << "ordering holds everywhere: " << (r.ordering_holds_everywhere ? "yes" : "no") << '\n';
  os << "gap shrinks everywhere: " << (r.gaps_shrink_everywhere ? "yes" : "no") << '\n';
  return os.str();
}

}  // namespace ifaware
