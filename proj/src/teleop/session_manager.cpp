#include "ifaware/teleop/session_manager.hpp"

#include <fstream>
#include <random>
#include <sstream>

#include "ifaware/experiment.hpp"

namespace ifaware::teleop {

namespace {

constexpr std::array<std::string_view, 3> kPhaseNames{"calibration1", "calibration2", "evaluation"};

ServiceError invalid_config(const std::string& what) { return ServiceError("invalid_phase_config", 400, what); }
ServiceError unknown_session(const std::string& id) {
  return ServiceError("unknown_session", 404, "unknown session '" + id + "'");
}
ServiceError phase_mismatch(const std::string& what) { return ServiceError("phase_mismatch", 409, what); }
ServiceError session_closed(const std::string& id) {
  return ServiceError("session_closed", 409, "session '" + id + "' is closed");
}

using Prompt = std::variant<TaskAction, InterfaceAction>;

nlohmann::json prompt_json(const Prompt& p) {
  return std::visit([](auto v) { return nlohmann::json(v); }, p);
}

std::string_view prompt_kind(const Prompt& p) {
  return std::holds_alternative<TaskAction>(p) ? "task_action" : "interface_action";
}

nlohmann::json optional_json(std::optional<double> v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

}  // namespace

std::string_view to_string(SessionPhase p) { return kPhaseNames[static_cast<std::size_t>(p)]; }

SessionPhase session_phase_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kPhaseNames.size(); ++i) {
    if (kPhaseNames[i] == name) return static_cast<SessionPhase>(i);
  }
  throw invalid_config("unknown phase '" + std::string(name) + "'");
}

SessionConfig session_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw invalid_config("session config must be a JSON object");
  SessionConfig c;
  try {
    c.profile_id = j.at("profile_id").get<std::string>();
    c.phase = session_phase_from_string(j.at("phase").get<std::string>());
    c.session_id = j.value("session_id", std::string());
    if (j.contains("assistance")) c.assistance = j.at("assistance").get<AssistanceMode>();
    if (j.contains("epsilon") && !j.at("epsilon").is_null()) c.epsilon = j.at("epsilon").get<double>();
    c.rho_assumed = j.value("rho_assumed", c.rho_assumed);
    c.n_turns = j.value("n_turns", c.n_turns);
    c.segment_len = j.value("segment_len", c.segment_len);
    c.max_steps = j.value("max_steps", c.max_steps);
    c.time_limit_s = j.value("time_limit_s", c.time_limit_s);
    c.blocks = j.value("blocks", c.blocks);
    c.prompt_timeout_s = j.value("prompt_timeout_s", c.prompt_timeout_s);
    c.proficiency_threshold = j.value("proficiency_threshold", c.proficiency_threshold);
    if (j.contains("seed") && !j.at("seed").is_null()) c.seed = j.at("seed").get<std::uint64_t>();
  } catch (const ServiceError&) {
    throw;
  } catch (const std::exception& e) {
    throw invalid_config(std::string("bad session config: ") + e.what());
  }
  return c;
}

nlohmann::json to_json_value(const SessionConfig& c) {
  return {{"profile_id", c.profile_id},
          {"phase", std::string(to_string(c.phase))},
          {"session_id", c.session_id},
          {"assistance", c.assistance},
          {"epsilon", optional_json(c.epsilon)},
          {"rho_assumed", c.rho_assumed},
          {"n_turns", c.n_turns},
          {"segment_len", c.segment_len},
          {"max_steps", c.max_steps},
          {"time_limit_s", c.time_limit_s},
          {"blocks", c.blocks},
          {"prompt_timeout_s", c.prompt_timeout_s},
          {"proficiency_threshold", c.proficiency_threshold},
          {"seed", c.seed ? nlohmann::json(*c.seed) : nlohmann::json(nullptr)}};
}

Clock steady_clock_seconds() {
  return [] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
  };
}

std::vector<Prompt> calibration_prompts(SessionPhase phase, int blocks, std::uint64_t seed) {
  if (phase == SessionPhase::Evaluation) throw invalid_config("evaluation sessions have no prompts");
  Rng rng(seed);
  std::vector<Prompt> out;
  for (int b = 0; b < blocks; ++b) {
    std::array<Prompt, kAlphabetSize> block;
    for (std::size_t k = 0; k < kAlphabetSize; ++k) {
      block[k] = phase == SessionPhase::Calibration1 ? Prompt(kTaskActions[k]) : Prompt(kPhysicalActions[k]);
    }
    // Fisher-Yates with the portable uniform draw.
    for (std::size_t i = kAlphabetSize - 1; i > 0; --i) {
      const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i + 1));
      std::swap(block[i], block[j]);
    }
    out.insert(out.end(), block.begin(), block.end());
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

struct EndResult {
  std::string reason;
  double elapsed_s = 0.0;
};

nlohmann::json evaluation_result(const WorldState& state, const PathTask& task, int mode_switches,
                                 const EndResult& end) {
  const GoalDistance d = goal_distance(state, task);
  return {{"reason", end.reason},
          {"success", is_complete(state, task)},
          {"steps", state.step_count},
          {"mode_switches", mode_switches},
          {"optimal_mode_switches", task.optimal_mode_switches},
          {"dist_xy", d.xy},
          {"dist_theta", d.theta},
          {"elapsed_s", end.elapsed_s}};
}

nlohmann::json step_record(double server_time, std::optional<double> client_ts, const nlohmann::json& outcome,
                           const EnvStep& s) {
  return {{"type", "step"},
          {"server_time", server_time},
          {"client_ts", optional_json(client_ts)},
          {"phi_m", s.phi_m},
          {"outcome", outcome},
          {"step", s}};
}

nlohmann::json sample_record(double server_time, std::optional<double> client_ts, std::size_t index,
                             const CalibrationSample& s) {
  return {{"type", "sample"},
          {"server_time", server_time},
          {"client_ts", optional_json(client_ts)},
          {"prompt_index", index},
          {"sample", to_json_value(s)}};
}

}  // namespace

struct SessionManager::Session {
  std::mutex mu;
  std::string id;
  SessionConfig cfg;
  UserProfile profile;
  double started_at = 0.0;
  bool live = true;
  std::ofstream log;
  std::map<std::uint64_t, Listener> listeners;
  std::uint64_t next_token = 1;

  // Calibration
  std::vector<Prompt> prompts;
  std::size_t next_prompt = 0;
  double shown_at = 0.0;
  std::vector<CalibrationSample> samples;
  bool fitted = false;

  // Evaluation
  AssistanceConfig assist;
  PathTask task;
  WorldState state;
  int mode_switches = 0;
  std::vector<EnvStep> trace;
  std::optional<AssistanceOutcome> last_outcome;

  bool calibration() const { return cfg.phase != SessionPhase::Evaluation; }
  bool prompts_exhausted() const { return next_prompt >= prompts.size(); }

  void persist(const nlohmann::json& rec) {
    log << rec.dump() << '\n';
    log.flush();
  }

  void emit(std::vector<nlohmann::json>& out, nlohmann::json msg) {
    const std::string line = msg.dump();
    for (auto& [token, l] : listeners) l(line);
    out.push_back(std::move(msg));
  }

  nlohmann::json prompt_message(double now) const {
    if (prompts_exhausted()) return nullptr;
    const double deadline = shown_at + cfg.prompt_timeout_s;
    return {{"index", next_prompt},
            {"total", prompts.size()},
            {"kind", prompt_kind(prompts[next_prompt])},
            {"value", prompt_json(prompts[next_prompt])},
            {"timeout_s", cfg.prompt_timeout_s},
            {"remaining_s", std::max(0.0, deadline - now)}};
  }

  nlohmann::json state_message(double now, bool with_task) const {
    nlohmann::json msg = {{"type", "state"}, {"session_id", id}, {"phase", std::string(to_string(cfg.phase))},
                          {"live", live}};
    if (calibration()) {
      std::size_t timeouts = 0;
      for (const auto& s : samples) timeouts += s.timed_out() ? 1 : 0;
      msg["world"] = nullptr;
      msg["prompt"] = prompt_message(now);
      msg["metrics"] = {{"answered", samples.size() - timeouts},
                        {"timeouts", timeouts},
                        {"remaining", prompts.size() - next_prompt}};
      if (!samples.empty()) {
        const auto& s = samples.back();
        msg["outcome"] = {{"response", s.response ? nlohmann::json(*s.response) : nlohmann::json("timeout")},
                          {"timed_out", s.timed_out()},
                          {"latency_s", s.latency_s}};
      }
    } else {
      const GoalDistance d = goal_distance(state, task);
      msg["world"] = state;
      msg["assistance"] = assist;
      msg["metrics"] = {{"steps", state.step_count},
                        {"mode_switches", mode_switches},
                        {"elapsed_s", now - started_at},
                        {"dist_xy", d.xy},
                        {"dist_theta", d.theta}};
      if (last_outcome) msg["outcome"] = *last_outcome;
      if (with_task) msg["task"] = task;
    }
    return msg;
  }

  void end_evaluation(std::vector<nlohmann::json>& out, double now, const std::string& reason) {
    live = false;
    const nlohmann::json result = evaluation_result(state, task, mode_switches, {reason, now - started_at});
    persist({{"type", "end"}, {"server_time", now - started_at}, {"result", result}});
    emit(out, {{"type", "end"}, {"session_id", id}, {"result", result}});
  }

  void end_calibration(std::vector<nlohmann::json>& out, double now) {
    live = false;
    std::size_t timeouts = 0;
    for (const auto& s : samples) timeouts += s.timed_out() ? 1 : 0;
    const nlohmann::json result = {{"samples", samples.size()},
                                   {"timeouts", timeouts},
                                   {"accuracy", calibration_accuracy(samples, profile.mapping)}};
    persist({{"type", "end"}, {"server_time", now - started_at}, {"result", result}});
    emit(out, {{"type", "end"}, {"session_id", id}, {"result", result}});
  }

  void record_sample(std::vector<nlohmann::json>& out, double now, std::optional<InterfaceAction> response,
                     double latency, std::optional<double> client_ts, double next_shown_at) {
    CalibrationSample s{prompts[next_prompt], response, latency};
    persist(sample_record(now - started_at, client_ts, next_prompt, s));
    samples.push_back(s);
    ++next_prompt;
    shown_at = next_shown_at;
    emit(out, state_message(now, false));
    if (prompts_exhausted()) end_calibration(out, now);
  }

  // Deadlines chain: a prompt that expires is replaced by the next one at
  // its deadline, so lazily expiring several prompts is deterministic.
  void expire(std::vector<nlohmann::json>& out, double now) {
    if (!live) return;
    if (calibration()) {
      while (live && !prompts_exhausted() && now > shown_at + cfg.prompt_timeout_s) {
        const double deadline = shown_at + cfg.prompt_timeout_s;
        record_sample(out, now, std::nullopt, cfg.prompt_timeout_s, std::nullopt, deadline);
      }
    } else if (now - started_at > cfg.time_limit_s) {
      end_evaluation(out, now, "time_limit");
    }
  }
};

SessionManager::SessionManager(std::filesystem::path data_dir, Clock clock)
    : data_dir_(std::move(data_dir)), clock_(std::move(clock)), profiles_(data_dir_ / "profiles") {
  std::filesystem::create_directories(data_dir_ / "sessions");
}

SessionManager::~SessionManager() = default;

std::filesystem::path SessionManager::trace_path(const std::string& session_id) const {
  return data_dir_ / "sessions" / (session_id + ".jsonl");
}

std::shared_ptr<SessionManager::Session> SessionManager::find(const std::string& id) {
  std::shared_lock lock(map_mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw unknown_session(id);
  return it->second;
}

std::string SessionManager::create_session(const SessionConfig& cfg_in) {
  SessionConfig cfg = cfg_in;
  const auto profile = profiles_.get(cfg.profile_id);
  if (!profile) throw unknown_profile(cfg.profile_id);
  if (cfg.epsilon && !(*cfg.epsilon >= 0.0 && *cfg.epsilon <= 1.0)) throw invalid_config("epsilon must be in [0, 1]");
  if (!(cfg.rho_assumed >= 0.0 && cfg.rho_assumed <= 1.0)) throw invalid_config("rho_assumed must be in [0, 1]");
  if (cfg.blocks < 1) throw invalid_config("blocks must be >= 1");
  if (!(cfg.prompt_timeout_s > 0.0)) throw invalid_config("prompt_timeout_s must be positive");
  if (!(cfg.time_limit_s > 0.0)) throw invalid_config("time_limit_s must be positive");
  if (cfg.n_turns < 0 || cfg.segment_len < 1 || cfg.max_steps < 1) throw invalid_config("invalid task size");
  if (!cfg.seed) cfg.seed = std::random_device{}() * 0x100000000ULL + std::random_device{}();
  if (!cfg.epsilon) cfg.epsilon = profile->epsilon;

  auto s = std::make_shared<Session>();
  s->cfg = cfg;
  s->profile = *profile;
  s->started_at = clock_();

  nlohmann::json header = {{"type", "header"},
                           {"profile_id", cfg.profile_id},
                           {"phase", std::string(to_string(cfg.phase))},
                           {"tables", profile->tables},
                           {"mapping", profile->mapping}};
  if (s->calibration()) {
    s->prompts = calibration_prompts(cfg.phase, cfg.blocks, *cfg.seed);
    s->shown_at = s->started_at;
    nlohmann::json prompts = nlohmann::json::array();
    for (const auto& p : s->prompts) prompts.push_back(prompt_json(p));
    header["prompts"] = prompts;
  } else {
    s->assist = AssistanceConfig(cfg.assistance, *cfg.epsilon);
    Rng rng(*cfg.seed);
    try {
      s->task = generate_task(cfg.n_turns, cfg.segment_len, cfg.max_steps, rng);
    } catch (const std::exception& e) {
      throw invalid_config(e.what());
    }
    s->state = advance_progress(s->task.start, s->task);
    header["task"] = s->task;
  }

  std::unique_lock lock(map_mu_);
  if (cfg.session_id.empty()) {
    do {
      std::ostringstream id;
      id << "s" << std::hex << (derive_seed(*cfg.seed, next_session_++) & 0xffffffffffULL);
      cfg.session_id = id.str();
    } while (sessions_.count(cfg.session_id) || std::filesystem::exists(trace_path(cfg.session_id)));
  } else {
    if (!valid_id(cfg.session_id)) throw invalid_config("invalid session id '" + cfg.session_id + "'");
    if (sessions_.count(cfg.session_id) || std::filesystem::exists(trace_path(cfg.session_id))) {
      throw invalid_config("session '" + cfg.session_id + "' already exists");
    }
  }
  s->id = cfg.session_id;
  s->cfg.session_id = cfg.session_id;
  header["session_id"] = s->id;
  header["config"] = to_json_value(s->cfg);
  s->log.open(trace_path(s->id), std::ios::binary | std::ios::trunc);
  if (!s->log) throw std::runtime_error("cannot write " + trace_path(s->id).string());
  s->persist(header);
  sessions_.emplace(s->id, s);
  return s->id;
}

std::vector<nlohmann::json> SessionManager::submit_action(const std::string& session_id, InterfaceAction phi_m,
                                                          std::optional<double> client_ts) {
  if (!is_physical(phi_m)) throw bad_request("action must be a physical interface action");
  auto s = find(session_id);
  std::lock_guard lock(s->mu);
  const double now = clock_();
  std::vector<nlohmann::json> out;
  s->expire(out, now);
  if (!s->live) throw session_closed(session_id);

  if (s->calibration()) {
    s->record_sample(out, now, phi_m, now - s->shown_at, client_ts, now);
    return out;
  }

  const ActionPrior prior = policy_prior(s->state, s->task, s->cfg.rho_assumed);
  AssistanceOutcome outcome;
  EnvStep step = execute_command(s->state, phi_m, s->task, s->assist, prior, s->profile.tables,
                                 s->profile.mapping, &outcome);
  if (step.a_applied && is_mode_switch(*step.a_applied)) ++s->mode_switches;
  s->persist(step_record(now - s->started_at, client_ts, outcome, step));
  s->state = step.state_after;
  s->trace.push_back(step);
  s->last_outcome = outcome;
  s->emit(out, s->state_message(now, false));
  if (is_complete(s->state, s->task)) {
    s->end_evaluation(out, now, "goal_reached");
  } else if (s->state.step_count >= s->task.max_steps) {
    s->end_evaluation(out, now, "step_limit");
  }
  return out;
}

CalibrationResult SessionManager::finish_calibration(const std::string& session_id, double alpha) {
  auto s = find(session_id);
  std::lock_guard lock(s->mu);
  if (!s->calibration()) throw phase_mismatch("session '" + session_id + "' is not a calibration session");
  std::vector<nlohmann::json> ignored;
  s->expire(ignored, clock_());
  if (!s->prompts_exhausted()) {
    throw phase_mismatch(std::to_string(s->prompts.size() - s->next_prompt) + " calibration prompts remain");
  }
  if (s->fitted) throw phase_mismatch("calibration already finished");
  if (!(alpha >= 0.0)) throw bad_request("alpha must be >= 0");

  CalibrationResult result;
  UserProfile updated;
  try {
    if (s->cfg.phase == SessionPhase::Calibration1) {
      const auto table = estimate_internal_mapping(s->samples, alpha);
      updated = profiles_.update(s->profile.id, [&](UserProfile& p) {
        p.tables.internal_mapping = table;
        p.internal_mapping_fitted = true;
      });
    } else {
      const auto table = estimate_distortion(s->samples, alpha);
      updated = profiles_.update(s->profile.id, [&](UserProfile& p) {
        p.tables.distortion = table;
        p.distortion_fitted = true;
      });
    }
  } catch (const EmptyDataError& e) {
    throw ServiceError("empty_data", 422, e.what());
  }
  s->fitted = true;
  result.tables = updated.tables;
  result.accuracy = calibration_accuracy(s->samples, s->profile.mapping);
  result.proficient = result.accuracy >= s->cfg.proficiency_threshold;
  if (!result.proficient) {
    std::ostringstream w;
    w << "accuracy " << result.accuracy * 100.0 << "% is below the proficiency threshold of "
      << s->cfg.proficiency_threshold * 100.0 << "%; repeat training and calibration";
    result.warning = w.str();
  }
  s->persist({{"type", "fit"},
              {"alpha", alpha},
              {"table", s->cfg.phase == SessionPhase::Calibration1 ? to_json_value(updated.tables.internal_mapping)
                                                                   : to_json_value(updated.tables.distortion)},
              {"accuracy", result.accuracy}});
  return result;
}

void SessionManager::tick() {
  std::vector<std::shared_ptr<Session>> all;
  {
    std::shared_lock lock(map_mu_);
    for (auto& [id, s] : sessions_) all.push_back(s);
  }
  for (auto& s : all) {
    std::lock_guard lock(s->mu);
    std::vector<nlohmann::json> out;
    s->expire(out, clock_());
  }
}

nlohmann::json SessionManager::snapshot(const std::string& session_id) {
  auto s = find(session_id);
  std::lock_guard lock(s->mu);
  return s->state_message(clock_(), true);
}

std::uint64_t SessionManager::subscribe(const std::string& session_id, Listener listener) {
  auto s = find(session_id);
  std::lock_guard lock(s->mu);
  const auto token = s->next_token++;
  // New subscribers start from the current state, including the task.
  listener(s->state_message(clock_(), true).dump());
  s->listeners.emplace(token, std::move(listener));
  return token;
}

void SessionManager::unsubscribe(const std::string& session_id, std::uint64_t token) {
  std::shared_ptr<Session> s;
  try {
    s = find(session_id);
  } catch (const ServiceError&) {
    return;
  }
  std::lock_guard lock(s->mu);
  s->listeners.erase(token);
}

bool SessionManager::is_live(const std::string& session_id) {
  auto s = find(session_id);
  std::lock_guard lock(s->mu);
  return s->live;
}

std::string SessionManager::trace(const std::string& session_id) const {
  if (!valid_id(session_id)) throw unknown_session(session_id);
  std::ifstream in(trace_path(session_id), std::ios::binary);
  if (!in) throw unknown_session(session_id);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// ---------------------------------------------------------------------------

ReplayReport replay_session_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) lines.push_back(line);
  }
  ReplayReport report;
  if (lines.empty()) {
    report.mismatch = "empty trace";
    return report;
  }
  const auto header = nlohmann::json::parse(lines.front());
  const SessionConfig cfg = session_config_from_json(header.at("config"));
  const UserModelTables tables = user_tables_from_json(header.at("tables"));
  const ControlMapping mapping = mapping_from_json(header.at("mapping"));

  auto mismatch = [&report](std::size_t i, const std::string& expected) {
    report.mismatch = "line " + std::to_string(i + 1) + ": expected " + expected;
    return report;
  };

  if (cfg.phase == SessionPhase::Evaluation) {
    PathTask task = header.at("task").get<PathTask>();
    Rng rng(cfg.seed.value());
    if (generate_task(cfg.n_turns, cfg.segment_len, cfg.max_steps, rng) != task) {
      return mismatch(0, "task regenerated from the session seed");
    }
    const AssistanceConfig assist(cfg.assistance, cfg.epsilon.value());
    WorldState state = advance_progress(task.start, task);
    int mode_switches = 0;
    for (std::size_t i = 1; i < lines.size(); ++i) {
      const auto rec = nlohmann::json::parse(lines[i]);
      const std::string type = rec.at("type").get<std::string>();
      nlohmann::json rebuilt;
      if (type == "step") {
        const auto phi_m = rec.at("phi_m").get<InterfaceAction>();
        const ActionPrior prior = policy_prior(state, task, cfg.rho_assumed);
        AssistanceOutcome outcome;
        const EnvStep s = execute_command(state, phi_m, task, assist, prior, tables, mapping, &outcome);
        if (s.a_applied && is_mode_switch(*s.a_applied)) ++mode_switches;
        std::optional<double> client_ts;
        if (!rec.at("client_ts").is_null()) client_ts = rec.at("client_ts").get<double>();
        rebuilt = step_record(rec.at("server_time").get<double>(), client_ts, outcome, s);
        state = s.state_after;
      } else if (type == "end") {
        const auto& recorded = rec.at("result");
        rebuilt = {{"type", "end"},
                   {"server_time", rec.at("server_time")},
                   {"result", evaluation_result(state, task, mode_switches,
                                                {recorded.at("reason").get<std::string>(),
                                                 recorded.at("elapsed_s").get<double>()})}};
      } else {
        return mismatch(i, "step or end record");
      }
      if (rebuilt.dump() != lines[i]) return mismatch(i, rebuilt.dump());
      ++report.events;
    }
    report.final_state = state;
  } else {
    const auto prompts = calibration_prompts(cfg.phase, cfg.blocks, cfg.seed.value());
    nlohmann::json prompt_names = nlohmann::json::array();
    for (const auto& p : prompts) prompt_names.push_back(prompt_json(p));
    if (prompt_names != header.at("prompts")) return mismatch(0, "prompt queue regenerated from the session seed");
    std::vector<CalibrationSample> samples;
    for (std::size_t i = 1; i < lines.size(); ++i) {
      const auto rec = nlohmann::json::parse(lines[i]);
      const std::string type = rec.at("type").get<std::string>();
      nlohmann::json rebuilt;
      if (type == "sample") {
        const std::size_t index = samples.size();
        if (index >= prompts.size()) return mismatch(i, "no more samples than prompts");
        const auto& recorded = rec.at("sample");
        CalibrationSample s{prompts[index], std::nullopt, recorded.at("latency_s").get<double>()};
        if (recorded.at("response").get<std::string>() != "timeout") {
          s.response = recorded.at("response").get<InterfaceAction>();
        }
        std::optional<double> client_ts;
        if (!rec.at("client_ts").is_null()) client_ts = rec.at("client_ts").get<double>();
        rebuilt = sample_record(rec.at("server_time").get<double>(), client_ts, index, s);
        samples.push_back(s);
      } else if (type == "end") {
        std::size_t timeouts = 0;
        for (const auto& s : samples) timeouts += s.timed_out() ? 1 : 0;
        rebuilt = {{"type", "end"},
                   {"server_time", rec.at("server_time")},
                   {"result",
                    {{"samples", samples.size()},
                     {"timeouts", timeouts},
                     {"accuracy", calibration_accuracy(samples, mapping)}}}};
      } else if (type == "fit") {
        const double alpha = rec.at("alpha").get<double>();
        const nlohmann::json table = cfg.phase == SessionPhase::Calibration1
                                         ? to_json_value(estimate_internal_mapping(samples, alpha))
                                         : to_json_value(estimate_distortion(samples, alpha));
        rebuilt = {{"type", "fit"},
                   {"alpha", rec.at("alpha")},
                   {"table", table},
                   {"accuracy", calibration_accuracy(samples, mapping)}};
      } else {
        return mismatch(i, "sample, end or fit record");
      }
      if (rebuilt.dump() != lines[i]) return mismatch(i, rebuilt.dump());
      ++report.events;
    }
  }
  report.identical = true;
  return report;
}

}  // namespace ifaware::teleop
