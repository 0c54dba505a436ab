#pragma once

// Discrete modal path-navigation world. The robot occupies integer grid
// cells with one of eight 45-degree headings, and a 1-DoF interface drives
// exactly one of x, y or theta at a time (the active mode).

#include <optional>
#include <vector>

#include "ifaware/assistance.hpp"
#include "ifaware/user_model.hpp"

namespace ifaware {

enum class Mode : std::uint8_t { X, Y, Theta };

inline constexpr int kHeadingBins = 8;
inline constexpr int kDefaultMaxSteps = 200;

std::string_view to_string(Mode m);
Mode mode_from_string(std::string_view name);

/// Clockwise cycle is X -> Y -> Theta -> X.
Mode rotate_cw(Mode m);
Mode rotate_ccw(Mode m);

struct Cell {
  int x = 0;
  int y = 0;
  bool operator==(const Cell&) const = default;
};

struct WorldState {
  int x = 0;
  int y = 0;
  int theta = 0;  // heading bin in [0, 8)
  Mode mode = Mode::X;
  int step_count = 0;
  int waypoints_reached = 0;  // path progress, advanced by advance_progress()

  Cell cell() const { return {x, y}; }
  bool operator==(const WorldState&) const = default;
};

/// Axis-alternating Manhattan path followed by a terminal rotation.
struct PathTask {
  WorldState start;
  std::vector<Cell> waypoints;  // visited in order after `start`
  int goal_theta = 0;
  int n_turns = 0;
  int max_steps = kDefaultMaxSteps;
  int optimal_mode_switches = 0;
  int optimal_steps = 0;

  /// Throws std::invalid_argument if the path shape is inconsistent.
  void validate() const;
  bool operator==(const PathTask&) const = default;
};

class TaskCompleteError : public std::logic_error {
 public:
  TaskCompleteError() : std::logic_error("task is already complete") {}
};

/// One interface action applied under the active mode. Null only consumes a
/// step. Path progress is left untouched.
WorldState apply(const WorldState& state, InterfaceAction phi, const ControlMapping& f);
WorldState apply_task_action(const WorldState& state, TaskAction a);

/// Marks the next waypoint reached when the robot stands on it.
WorldState advance_progress(WorldState state, const PathTask& task);

/// apply() followed by advance_progress().
WorldState step(const WorldState& state, InterfaceAction phi, const ControlMapping& f, const PathTask& task);

bool is_complete(const WorldState& state, const PathTask& task);

struct GoalDistance {
  int xy = 0;     // Manhattan cells to the final waypoint
  int theta = 0;  // heading bins along the shorter arc
  bool operator==(const GoalDistance&) const = default;
};

GoalDistance goal_distance(const WorldState& state, const PathTask& task);

/// Greedy shortest action toward the next unmet waypoint, then the goal
/// heading. Mode switches take the shorter way round the cycle, motion in
/// theta the shorter arc (positive on a tie).
TaskAction optimal_policy(const WorldState& state, const PathTask& task);

/// (1 - rho) on optimal_policy(state, task) plus rho spread uniformly.
ActionPrior policy_prior(const WorldState& state, const PathTask& task, double rho);

/// Zero-noise rollout of optimal_policy from the task start.
std::vector<TaskAction> optimal_rollout(const PathTask& task);

/// Random task with `n_turns` turns of `segment_len` cells each segment. The
/// start mode is the planar axis not used by the first segment and the goal
/// heading differs from the start heading.
PathTask generate_task(int n_turns, int segment_len, int max_steps, Rng& rng);

struct EnvStep {
  int t = 0;
  std::optional<TaskAction> a_intended;      // unknown for live human input
  std::optional<InterfaceAction> phi_i;      // unknown for live human input
  InterfaceAction phi_m = InterfaceAction::Null;
  InterfaceAction phi_out = InterfaceAction::Null;
  std::optional<TaskAction> a_applied;       // empty iff phi_out is Null
  WorldState state_after;
  OutcomeReason reason = OutcomeReason::NoAssist;
  bool intervened = false;
};

struct TrialResult {
  int steps_total = 0;
  int mode_switches = 0;
  bool success = false;
  GoalDistance final_distance;
  std::vector<EnvStep> trace;
};

struct TrialOptions {
  double rho_assumed = 0.0;  // mixture weight of the autonomy's policy prior
  bool record_trace = true;
};

/// Handles one measured command end to end: assistance, dynamics, bookkeeping.
EnvStep execute_command(const WorldState& state, InterfaceAction phi_m, const PathTask& task,
                        const AssistanceConfig& cfg, const ActionPrior& prior, const UserModelTables& tables,
                        const ControlMapping& f, AssistanceOutcome* outcome_out = nullptr);

/// Simulated trial: the user samples an intent around the optimal action,
/// emits a noisy physical action, the assistance filters or corrects it and
/// the world advances, until the task completes or max_steps is reached.
TrialResult run_trial(const PathTask& task, const SimulatedUser& user, const AssistanceConfig& cfg,
                      const ControlMapping& f, Rng& rng, const TrialOptions& opts = {});

void to_json(nlohmann::json& j, Mode m);
void from_json(const nlohmann::json& j, Mode& m);
void to_json(nlohmann::json& j, const WorldState& s);
void from_json(const nlohmann::json& j, WorldState& s);
void to_json(nlohmann::json& j, const PathTask& t);
void from_json(const nlohmann::json& j, PathTask& t);
void to_json(nlohmann::json& j, const EnvStep& s);
void from_json(const nlohmann::json& j, EnvStep& s);
void to_json(nlohmann::json& j, const TrialResult& r);

}  // namespace ifaware
