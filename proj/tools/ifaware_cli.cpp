// Command-line entry point: simulation sweeps, their summaries, offline
// calibration fitting, session replay and the live teleoperation server.

#include <csignal>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "ifaware/experiment.hpp"
#include "ifaware/teleop/server.hpp"

namespace {

using namespace ifaware;

constexpr int kExitConfigError = 2;

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

template <class T>
std::vector<T> parse_list(const std::string& csv, T (*parse)(const std::string&)) {
  std::vector<T> out;
  std::size_t start = 0;
  while (start <= csv.size()) {
    const auto end = csv.find(',', start);
    const auto item = csv.substr(start, end == std::string::npos ? std::string::npos : end - start);
    if (!item.empty()) out.push_back(parse(item));
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return out;
}

int to_int(const std::string& s) { return std::stoi(s); }
double to_double(const std::string& s) { return std::stod(s); }
AssistanceMode to_mode(const std::string& s) { return assistance_mode_from_string(s); }

struct SweepArgs {
  std::string config;
  std::string out;
  std::optional<int> trials;
  std::optional<std::uint64_t> seed;
  std::optional<double> epsilon;
  std::optional<double> rho_user;
  std::optional<double> rho_assumed;
  std::optional<int> segment_len;
  std::optional<int> max_steps;
  std::optional<unsigned> threads;
  std::string n_turns;
  std::string assistance;
  std::string lambda_i;
  std::string lambda_m;
  bool traces = false;
};

int run_sweep_command(const SweepArgs& a) {
  SweepConfig cfg = a.config.empty() ? SweepConfig{} : sweep_config_from_json(read_json_file(a.config));
  if (a.trials) cfg.trials_per_cell = *a.trials;
  if (a.seed) cfg.base_seed = *a.seed;
  if (a.epsilon) cfg.epsilon = *a.epsilon;
  if (a.rho_user) cfg.rho_user = *a.rho_user;
  if (a.rho_assumed) cfg.rho_assumed = *a.rho_assumed;
  if (a.segment_len) cfg.segment_len = *a.segment_len;
  if (a.max_steps) cfg.max_steps = *a.max_steps;
  if (a.threads) cfg.threads = *a.threads;
  if (a.traces) cfg.record_traces = true;
  try {
    if (!a.n_turns.empty()) cfg.n_turns = parse_list<int>(a.n_turns, to_int);
    if (!a.lambda_i.empty()) cfg.lambda_i = parse_list<double>(a.lambda_i, to_double);
    if (!a.lambda_m.empty()) cfg.lambda_m = parse_list<double>(a.lambda_m, to_double);
    if (!a.assistance.empty()) cfg.assistance = parse_list<AssistanceMode>(a.assistance, to_mode);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("bad list flag: ") + e.what());
  }
  cfg.validate();

  const SweepOutput out = run_sweep(cfg);
  write_sweep(cfg, out, a.out);
  std::cout << "wrote " << out.trials.size() << " trials in " << out.cells.size() << " cells to " << a.out << '\n';
  std::cout << format_report(summarize(out.cells));
  return 0;
}

int run_summarize_command(const std::string& dir, bool as_json) {
  const auto trials = read_trials_jsonl(std::filesystem::path(dir) / "trials.jsonl");
  const auto cells = aggregate_cells(trials);
  const OrderingReport report = summarize(cells);
  std::ofstream(std::filesystem::path(dir) / "summary.json") << to_json_value(report).dump(2) << '\n';
  if (as_json) {
    std::cout << to_json_value(report).dump(2) << '\n';
  } else {
    std::cout << format_report(report);
  }
  return 0;
}

int run_calibrate_fit(const std::string& phase1, const std::string& phase2, double alpha, const std::string& out) {
  const auto s1 = read_calibration_jsonl(phase1);
  const auto s2 = read_calibration_jsonl(phase2);
  const ControlMapping f = default_mapping();
  UserModelTables tables{estimate_internal_mapping(s1, alpha), estimate_distortion(s2, alpha)};
  nlohmann::json j = tables;
  j["alpha"] = alpha;
  j["accuracy"] = {{"phase1", calibration_accuracy(s1, f)}, {"phase2", calibration_accuracy(s2, f)}};
  std::ofstream file(out);
  if (!file) throw std::runtime_error("cannot write " + out);
  file << j.dump(2) << '\n';
  std::cout << "fitted tables from " << s1.size() << " + " << s2.size() << " samples -> " << out << '\n';
  return 0;
}

int run_replay(const std::string& path) {
  const auto report = teleop::replay_session_trace(path);
  std::cout << (report.identical ? "identical" : "MISMATCH") << " (" << report.events << " events)\n";
  if (report.final_state) std::cout << "final state: " << nlohmann::json(*report.final_state).dump() << '\n';
  if (!report.identical) std::cout << report.mismatch << '\n';
  return report.identical ? 0 : 1;
}

int run_serve(teleop::ServerOptions opts) {
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  teleop::TeleopServer server(std::move(opts));
  server.start();
  std::cout << "listening on port " << server.port() << std::endl;
  int sig = 0;
  sigwait(&signals, &sig);
  server.stop();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interface-aware assistance: simulation sweeps, calibration fitting and the teleop server"};
  app.require_subcommand(1);

  SweepArgs sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run the simulation parameter sweep");
  sweep_cmd->add_option("--config", sweep.config, "Sweep config JSON (defaults to the full grid)");
  sweep_cmd->add_option("--out", sweep.out, "Output directory")->required();
  sweep_cmd->add_option("--trials", sweep.trials, "Trials per cell");
  sweep_cmd->add_option("--seed", sweep.seed, "Base seed");
  sweep_cmd->add_option("--epsilon", sweep.epsilon, "Normalized entropy threshold");
  sweep_cmd->add_option("--rho-user", sweep.rho_user, "User policy noise");
  sweep_cmd->add_option("--rho-assumed", sweep.rho_assumed, "Autonomy's assumed policy noise");
  sweep_cmd->add_option("--segment-len", sweep.segment_len, "Cells per path segment");
  sweep_cmd->add_option("--max-steps", sweep.max_steps, "Step cap per trial");
  sweep_cmd->add_option("--threads", sweep.threads, "Worker threads (0 = all cores)");
  sweep_cmd->add_option("--n-turns", sweep.n_turns, "Comma-separated turn counts");
  sweep_cmd->add_option("--assistance", sweep.assistance, "Comma-separated assistance modes");
  sweep_cmd->add_option("--lambda-i", sweep.lambda_i, "Comma-separated internal-model noise levels");
  sweep_cmd->add_option("--lambda-m", sweep.lambda_m, "Comma-separated distortion noise levels");
  sweep_cmd->add_flag("--traces", sweep.traces, "Include full step traces in trials.jsonl");

  std::string summarize_in;
  bool summarize_json = false;
  auto* summarize_cmd = app.add_subcommand("summarize", "Rank assistance modes from a sweep directory");
  summarize_cmd->add_option("--in", summarize_in, "Sweep output directory")->required();
  summarize_cmd->add_flag("--json", summarize_json, "Print the report as JSON");

  std::string phase1, phase2, fit_out;
  double alpha = kDefaultSmoothing;
  auto* fit_cmd = app.add_subcommand("calibrate-fit", "Estimate user tables from calibration JSON-lines");
  fit_cmd->add_option("--phase1", phase1, "Phase 1 samples (task action prompts)")->required();
  fit_cmd->add_option("--phase2", phase2, "Phase 2 samples (interface action prompts)")->required();
  fit_cmd->add_option("--alpha", alpha, "Laplace smoothing pseudo-count");
  fit_cmd->add_option("--out", fit_out, "Output JSON")->required();

  std::string replay_path;
  auto* replay_cmd = app.add_subcommand("replay", "Re-derive a persisted session trace and compare it");
  replay_cmd->add_option("--trace", replay_path, "Session JSON-lines trace")->required();

  teleop::ServerOptions server;
  std::string static_dir;
  if (const char* env = std::getenv("IFAWARE_DATA_DIR")) server.data_dir = env;
  if (const char* env = std::getenv("IFAWARE_PORT")) server.port = static_cast<unsigned short>(std::atoi(env));
  auto* serve_cmd = app.add_subcommand("serve", "Run the teleoperation session server");
  serve_cmd->add_option("--address", server.address, "Listen address");
  serve_cmd->add_option("--port", server.port, "Listen port (env IFAWARE_PORT)");
  serve_cmd->add_option("--data-dir", server.data_dir, "Profiles and traces directory (env IFAWARE_DATA_DIR)");
  serve_cmd->add_option("--static-dir", static_dir, "Serve the browser UI from this directory");
  serve_cmd->add_option("--threads", server.threads, "I/O threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfigError;
  }

  try {
    if (*sweep_cmd) return run_sweep_command(sweep);
    if (*summarize_cmd) return run_summarize_command(summarize_in, summarize_json);
    if (*fit_cmd) return run_calibrate_fit(phase1, phase2, alpha, fit_out);
    if (*replay_cmd) return run_replay(replay_path);
    if (*serve_cmd) {
      if (!static_dir.empty()) server.static_dir = static_dir;
      return run_serve(server);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
