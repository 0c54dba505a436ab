#pragma once

// Live teleoperation and calibration sessions. The manager is transport
// agnostic: callers feed it actions and clock ticks and it returns (and
// broadcasts) the JSON messages the UI renders. All timing is server-side.

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <variant>
#include <vector>

#include "ifaware/env_sim.hpp"
#include "ifaware/teleop/profile_store.hpp"

namespace ifaware::teleop {

enum class SessionPhase : std::uint8_t { Calibration1, Calibration2, Evaluation };

std::string_view to_string(SessionPhase p);
SessionPhase session_phase_from_string(std::string_view name);

inline constexpr double kPromptTimeoutS = 5.0;
inline constexpr double kEvaluationTimeLimitS = 50.0;
inline constexpr int kCalibrationBlocks = 6;
inline constexpr double kProficiencyThreshold = 0.8;

struct SessionConfig {
  std::string profile_id;
  SessionPhase phase = SessionPhase::Evaluation;
  std::string session_id;  // generated when empty
  AssistanceMode assistance = AssistanceMode::NoAssistance;
  std::optional<double> epsilon;  // falls back to the profile's threshold
  double rho_assumed = 0.0;
  int n_turns = 3;
  int segment_len = 4;
  int max_steps = kDefaultMaxSteps;
  double time_limit_s = kEvaluationTimeLimitS;
  int blocks = kCalibrationBlocks;
  double prompt_timeout_s = kPromptTimeoutS;
  double proficiency_threshold = kProficiencyThreshold;
  std::optional<std::uint64_t> seed;
};

/// Throws ServiceError("invalid_phase_config") on bad values.
SessionConfig session_config_from_json(const nlohmann::json& j);
nlohmann::json to_json_value(const SessionConfig& c);

/// Monotonic seconds.
using Clock = std::function<double()>;
Clock steady_clock_seconds();

/// Receives every message a session emits, in order.
using Listener = std::function<void(const std::string&)>;

struct CalibrationResult {
  UserModelTables tables;
  double accuracy = 0.0;
  bool proficient = false;
  std::optional<std::string> warning;
};

/// `blocks` shuffled blocks containing each prompt of the phase once.
std::vector<std::variant<TaskAction, InterfaceAction>> calibration_prompts(SessionPhase phase, int blocks,
                                                                           std::uint64_t seed);

struct ReplayReport {
  bool identical = false;
  std::size_t events = 0;
  std::optional<WorldState> final_state;
  std::string mismatch;  // first differing line, if any
};

/// Re-derives every persisted event of a session trace file from its header
/// and recorded inputs and compares the re-serialized lines byte for byte.
ReplayReport replay_session_trace(const std::filesystem::path& path);

class SessionManager {
 public:
  SessionManager(std::filesystem::path data_dir, Clock clock = steady_clock_seconds());
  ~SessionManager();

  ProfileStore& profiles() { return profiles_; }

  /// Returns the new session id.
  std::string create_session(const SessionConfig& cfg);

  /// Applies one measured interface action. Returns the messages emitted.
  std::vector<nlohmann::json> submit_action(const std::string& session_id, InterfaceAction phi_m,
                                            std::optional<double> client_ts = std::nullopt);

  /// Fits the phase's table from the collected samples and stores it in the profile.
  CalibrationResult finish_calibration(const std::string& session_id, double alpha = kDefaultSmoothing);

  /// Expires overdue prompts and evaluation time limits for every live session.
  void tick();

  /// Current state message for a newly connected client.
  nlohmann::json snapshot(const std::string& session_id);

  /// Registers a listener for every message the session emits. The listener
  /// is called once immediately with a snapshot (the task included).
  std::uint64_t subscribe(const std::string& session_id, Listener listener);
  void unsubscribe(const std::string& session_id, std::uint64_t token);

  /// JSON-lines trace; served from disk so it outlives the process.
  std::string trace(const std::string& session_id) const;
  std::filesystem::path trace_path(const std::string& session_id) const;

  bool is_live(const std::string& session_id);

 private:
  struct Session;

  std::shared_ptr<Session> find(const std::string& id);

  std::filesystem::path data_dir_;
  Clock clock_;
  ProfileStore profiles_;
  std::shared_mutex map_mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t next_session_ = 1;
};

}  // namespace ifaware::teleop
