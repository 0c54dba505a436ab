#include "ifaware/env_sim.hpp"

#include <cstdlib>

namespace ifaware {

namespace {

constexpr std::array<std::string_view, 3> kModeNames{"x", "y", "theta"};

int wrap_heading(int theta) { return ((theta % kHeadingBins) + kHeadingBins) % kHeadingBins; }

int heading_arc(int from, int to) {
  const int d = wrap_heading(to - from);
  return std::min(d, kHeadingBins - d);
}

int mode_index(Mode m) { return static_cast<int>(m); }

}  // namespace

std::string_view to_string(Mode m) { return kModeNames[static_cast<std::size_t>(m)]; }

Mode mode_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kModeNames.size(); ++i) {
    if (kModeNames[i] == name) return static_cast<Mode>(i);
  }
  throw UnknownNameError("unknown mode '" + std::string(name) + "'");
}

Mode rotate_cw(Mode m) { return static_cast<Mode>((mode_index(m) + 1) % 3); }
Mode rotate_ccw(Mode m) { return static_cast<Mode>((mode_index(m) + 2) % 3); }

void PathTask::validate() const {
  if (waypoints.empty()) throw std::invalid_argument("task needs at least one waypoint");
  if (max_steps <= 0) throw std::invalid_argument("max_steps must be positive");
  if (goal_theta < 0 || goal_theta >= kHeadingBins) throw std::invalid_argument("goal heading out of range");
  if (start.theta < 0 || start.theta >= kHeadingBins) throw std::invalid_argument("start heading out of range");
  Cell prev = start.cell();
  int prev_axis = -1;
  int turns = 0;
  for (const Cell& c : waypoints) {
    const bool dx = c.x != prev.x;
    const bool dy = c.y != prev.y;
    if (dx == dy) throw std::invalid_argument("consecutive waypoints must differ along exactly one axis");
    const int axis = dx ? 0 : 1;
    if (prev_axis >= 0 && axis != prev_axis) ++turns;
    prev_axis = axis;
    prev = c;
  }
  if (turns != n_turns) throw std::invalid_argument("waypoint axis alternations do not match n_turns");
}

WorldState apply_task_action(const WorldState& state, TaskAction a) {
  WorldState next = state;
  ++next.step_count;
  switch (a) {
    case TaskAction::ModeSwitchCW:
      next.mode = rotate_cw(state.mode);
      break;
    case TaskAction::ModeSwitchCCW:
      next.mode = rotate_ccw(state.mode);
      break;
    case TaskAction::MotionPositive:
    case TaskAction::MotionNegative: {
      const int d = a == TaskAction::MotionPositive ? 1 : -1;
      switch (state.mode) {
        case Mode::X:
          next.x += d;
          break;
        case Mode::Y:
          next.y += d;
          break;
        case Mode::Theta:
          next.theta = wrap_heading(state.theta + d);
          break;
      }
      break;
    }
  }
  return next;
}

WorldState apply(const WorldState& state, InterfaceAction phi, const ControlMapping& f) {
  if (!is_physical(phi)) {
    WorldState next = state;
    ++next.step_count;
    return next;
  }
  return apply_task_action(state, f.inverse(phi));
}

WorldState advance_progress(WorldState state, const PathTask& task) {
  const int n = static_cast<int>(task.waypoints.size());
  while (state.waypoints_reached < n && task.waypoints[state.waypoints_reached] == state.cell()) {
    ++state.waypoints_reached;
  }
  return state;
}

WorldState step(const WorldState& state, InterfaceAction phi, const ControlMapping& f, const PathTask& task) {
  return advance_progress(apply(state, phi, f), task);
}

bool is_complete(const WorldState& state, const PathTask& task) {
  const WorldState s = advance_progress(state, task);
  return s.waypoints_reached == static_cast<int>(task.waypoints.size()) && s.theta == task.goal_theta;
}

GoalDistance goal_distance(const WorldState& state, const PathTask& task) {
  const Cell goal = task.waypoints.back();
  return {std::abs(goal.x - state.x) + std::abs(goal.y - state.y), heading_arc(state.theta, task.goal_theta)};
}

namespace {

// Mode switch that reaches `target` from `current` in the fewest switches.
TaskAction switch_toward(Mode current, Mode target) {
  const int cw = (mode_index(target) - mode_index(current) + 3) % 3;
  return cw <= 3 - cw ? TaskAction::ModeSwitchCW : TaskAction::ModeSwitchCCW;
}

int switch_count(Mode current, Mode target) {
  const int cw = (mode_index(target) - mode_index(current) + 3) % 3;
  return std::min(cw, 3 - cw);
}

TaskAction move_along(int delta) { return delta > 0 ? TaskAction::MotionPositive : TaskAction::MotionNegative; }

}  // namespace

TaskAction optimal_policy(const WorldState& raw, const PathTask& task) {
  const WorldState state = advance_progress(raw, task);
  const int n = static_cast<int>(task.waypoints.size());
  const Cell target = task.waypoints[static_cast<std::size_t>(std::min(state.waypoints_reached, n - 1))];
  const int dx = target.x - state.x;
  const int dy = target.y - state.y;

  if (dx != 0 || dy != 0) {
    if (state.mode == Mode::X && dx != 0) return move_along(dx);
    if (state.mode == Mode::Y && dy != 0) return move_along(dy);
    // Off the active axis: pick the needed planar axis closest in switches,
    // preferring the one reached clockwise.
    Mode best = dx != 0 ? Mode::X : Mode::Y;
    if (dx != 0 && dy != 0) {
      const int cx = switch_count(state.mode, Mode::X);
      const int cy = switch_count(state.mode, Mode::Y);
      if (cy < cx || (cy == cx && rotate_cw(state.mode) == Mode::Y)) best = Mode::Y;
    }
    return switch_toward(state.mode, best);
  }

  if (state.waypoints_reached == n && state.theta == task.goal_theta) throw TaskCompleteError();
  if (state.mode != Mode::Theta) return switch_toward(state.mode, Mode::Theta);
  const int ahead = wrap_heading(task.goal_theta - state.theta);
  return ahead <= kHeadingBins / 2 ? TaskAction::MotionPositive : TaskAction::MotionNegative;
}

ActionPrior policy_prior(const WorldState& state, const PathTask& task, double rho) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw std::out_of_range("policy noise must be in [0, 1]");
  return {Distribution<TaskAction>::delta_uniform_mixture(optimal_policy(state, task), rho)};
}

std::vector<TaskAction> optimal_rollout(const PathTask& task) {
  std::vector<TaskAction> actions;
  WorldState s = advance_progress(task.start, task);
  while (!is_complete(s, task)) {
    const TaskAction a = optimal_policy(s, task);
    actions.push_back(a);
    s = advance_progress(apply_task_action(s, a), task);
    if (actions.size() > 100000) throw std::logic_error("optimal rollout did not terminate");
  }
  return actions;
}

PathTask generate_task(int n_turns, int segment_len, int max_steps, Rng& rng) {
  if (n_turns < 0) throw std::out_of_range("n_turns must be >= 0");
  if (segment_len < 1) throw std::out_of_range("segment_len must be >= 1");
  if (max_steps < 1) throw std::out_of_range("max_steps must be >= 1");

  auto uniform_int = [&rng](int lo, int hi) {
    return lo + static_cast<int>(uniform01(rng) * static_cast<double>(hi - lo + 1));
  };

  PathTask task;
  task.n_turns = n_turns;
  task.max_steps = max_steps;
  const int span = 2 * segment_len * (n_turns + 1);
  task.start.x = uniform_int(0, span);
  task.start.y = uniform_int(0, span);
  task.start.theta = uniform_int(0, kHeadingBins - 1);
  task.goal_theta = wrap_heading(task.start.theta + uniform_int(1, kHeadingBins - 1));

  const bool first_is_x = uniform01(rng) < 0.5;
  task.start.mode = first_is_x ? Mode::Y : Mode::X;

  Cell c = task.start.cell();
  bool along_x = first_is_x;
  for (int seg = 0; seg <= n_turns; ++seg) {
    const int d = uniform01(rng) < 0.5 ? segment_len : -segment_len;
    if (along_x) {
      c.x += d;
    } else {
      c.y += d;
    }
    task.waypoints.push_back(c);
    along_x = !along_x;
  }

  const auto plan = optimal_rollout(task);
  task.optimal_steps = static_cast<int>(plan.size());
  task.optimal_mode_switches =
      static_cast<int>(std::count_if(plan.begin(), plan.end(), [](TaskAction a) { return is_mode_switch(a); }));
  task.validate();
  return task;
}

EnvStep execute_command(const WorldState& state, InterfaceAction phi_m, const PathTask& task,
                        const AssistanceConfig& cfg, const ActionPrior& prior, const UserModelTables& tables,
                        const ControlMapping& f, AssistanceOutcome* outcome_out) {
  AssistanceOutcome outcome = handle_command(phi_m, cfg, prior, tables, f);
  EnvStep s;
  s.t = state.step_count;
  s.phi_m = phi_m;
  s.phi_out = outcome.phi_out;
  if (is_physical(outcome.phi_out)) s.a_applied = f.inverse(outcome.phi_out);
  s.state_after = step(state, outcome.phi_out, f, task);
  s.reason = outcome.reason;
  s.intervened = outcome.intervened;
  if (outcome_out != nullptr) *outcome_out = std::move(outcome);
  return s;
}

TrialResult run_trial(const PathTask& task, const SimulatedUser& user, const AssistanceConfig& cfg,
                      const ControlMapping& f, Rng& rng, const TrialOptions& opts) {
  TrialResult result;
  WorldState state = advance_progress(task.start, task);
  while (!is_complete(state, task) && state.step_count < task.max_steps) {
    const TaskAction optimal = optimal_policy(state, task);
    const TaskAction intended = sample(Distribution<TaskAction>::delta_uniform_mixture(optimal, user.policy_noise), rng);
    const UserStep emitted = sample_user_step(intended, user, rng);
    const ActionPrior assumed{Distribution<TaskAction>::delta_uniform_mixture(optimal, opts.rho_assumed)};

    EnvStep s = execute_command(state, emitted.phi_m, task, cfg, assumed, user.tables, f);
    s.a_intended = intended;
    s.phi_i = emitted.phi_i;
    if (s.a_applied && is_mode_switch(*s.a_applied)) ++result.mode_switches;
    ++result.steps_total;
    state = s.state_after;
    if (opts.record_trace) result.trace.push_back(std::move(s));
  }
  result.success = is_complete(state, task);
  result.final_distance = goal_distance(state, task);
  return result;
}

void to_json(nlohmann::json& j, Mode m) { j = std::string(to_string(m)); }
void from_json(const nlohmann::json& j, Mode& m) { m = mode_from_string(j.get<std::string>()); }

void to_json(nlohmann::json& j, const WorldState& s) {
  j = {{"x", s.x},       {"y", s.y}, {"theta", s.theta}, {"mode", s.mode}, {"step_count", s.step_count},
       {"waypoints_reached", s.waypoints_reached}};
}

void from_json(const nlohmann::json& j, WorldState& s) {
  s.x = j.at("x").get<int>();
  s.y = j.at("y").get<int>();
  s.theta = j.at("theta").get<int>();
  s.mode = j.at("mode").get<Mode>();
  s.step_count = j.value("step_count", 0);
  s.waypoints_reached = j.value("waypoints_reached", 0);
}

void to_json(nlohmann::json& j, const PathTask& t) {
  nlohmann::json wps = nlohmann::json::array();
  for (const Cell& c : t.waypoints) wps.push_back({c.x, c.y});
  j = {{"start", t.start},
       {"waypoints", wps},
       {"goal_theta", t.goal_theta},
       {"n_turns", t.n_turns},
       {"max_steps", t.max_steps},
       {"optimal_mode_switches", t.optimal_mode_switches},
       {"optimal_steps", t.optimal_steps}};
}

void from_json(const nlohmann::json& j, PathTask& t) {
  t.start = j.at("start").get<WorldState>();
  t.waypoints.clear();
  for (const auto& c : j.at("waypoints")) t.waypoints.push_back({c.at(0).get<int>(), c.at(1).get<int>()});
  t.goal_theta = j.at("goal_theta").get<int>();
  t.n_turns = j.at("n_turns").get<int>();
  t.max_steps = j.at("max_steps").get<int>();
  t.optimal_mode_switches = j.value("optimal_mode_switches", 0);
  t.optimal_steps = j.value("optimal_steps", 0);
  t.validate();
}

void to_json(nlohmann::json& j, const EnvStep& s) {
  j = {{"t", s.t}, {"phi_m", s.phi_m}, {"phi_out", s.phi_out}};
  j["a_intended"] = s.a_intended ? nlohmann::json(*s.a_intended) : nlohmann::json(nullptr);
  j["phi_i"] = s.phi_i ? nlohmann::json(*s.phi_i) : nlohmann::json(nullptr);
  j["a_applied"] = s.a_applied ? nlohmann::json(*s.a_applied) : nlohmann::json(nullptr);
  j["state_after"] = s.state_after;
  j["reason"] = s.reason;
  j["intervened"] = s.intervened;
}

void from_json(const nlohmann::json& j, EnvStep& s) {
  s.t = j.at("t").get<int>();
  s.phi_m = j.at("phi_m").get<InterfaceAction>();
  s.phi_out = j.at("phi_out").get<InterfaceAction>();
  s.a_intended.reset();
  s.phi_i.reset();
  s.a_applied.reset();
  if (!j.at("a_intended").is_null()) s.a_intended = j.at("a_intended").get<TaskAction>();
  if (!j.at("phi_i").is_null()) s.phi_i = j.at("phi_i").get<InterfaceAction>();
  if (!j.at("a_applied").is_null()) s.a_applied = j.at("a_applied").get<TaskAction>();
  s.state_after = j.at("state_after").get<WorldState>();
  s.reason = j.at("reason").get<OutcomeReason>();
  s.intervened = j.at("intervened").get<bool>();
}

void to_json(nlohmann::json& j, const TrialResult& r) {
  j = {{"steps", r.steps_total},
       {"mode_switches", r.mode_switches},
       {"success", r.success},
       {"dist_xy", r.final_distance.xy},
       {"dist_theta", r.final_distance.theta}};
  if (!r.trace.empty()) j["trace"] = r.trace;
}

}  // namespace ifaware
