#include <doctest.h>

#include <fstream>
#include <map>
#include <set>

#include "ifaware/teleop/server.hpp"
#include "ifaware/teleop/session_manager.hpp"
#include "test_support.hpp"

using namespace ifaware;
using namespace ifaware::teleop;

namespace {

// Session manager over a temp directory with a hand-driven clock.
struct Fixture {
  std::filesystem::path dir = testsupport::temp_dir("teleop");
  double now = 1000.0;
  SessionManager sessions{dir, [this] { return now; }};

  Fixture() {
    UserProfile p;
    p.id = "alice";
    p.tables = default_profile_tables(p.mapping);
    sessions.profiles().create(p);
  }
  ~Fixture() { std::filesystem::remove_all(dir); }

  std::string calibration(SessionPhase phase, std::uint64_t seed = 4) {
    SessionConfig c;
    c.profile_id = "alice";
    c.phase = phase;
    c.seed = seed;
    return sessions.create_session(c);
  }

  std::string evaluation(AssistanceMode mode, double eps = 0.7, std::uint64_t seed = 8) {
    SessionConfig c;
    c.profile_id = "alice";
    c.phase = SessionPhase::Evaluation;
    c.assistance = mode;
    c.epsilon = eps;
    c.seed = seed;
    return sessions.create_session(c);
  }

  // Reads back the prompt currently shown for a calibration session.
  nlohmann::json prompt(const std::string& id) { return sessions.snapshot(id).at("prompt"); }
};

InterfaceAction correct_response(const nlohmann::json& prompt) {
  if (prompt.at("kind") == "task_action") return default_mapping().forward(prompt.at("value").get<TaskAction>());
  return prompt.at("value").get<InterfaceAction>();
}

ServiceError capture(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ServiceError& e) {
    return e;
  }
  FAIL("expected a ServiceError");
  return ServiceError("", 0, "");
}

}  // namespace

TEST_CASE("calibration prompts come in balanced shuffled blocks") {
  const auto prompts = calibration_prompts(SessionPhase::Calibration1, 6, 99);
  REQUIRE(prompts.size() == 24);
  std::map<TaskAction, int> counts;
  for (std::size_t b = 0; b < 6; ++b) {
    std::set<TaskAction> block;
    for (std::size_t k = 0; k < 4; ++k) block.insert(std::get<TaskAction>(prompts[b * 4 + k]));
    CHECK(block.size() == 4);
    for (TaskAction a : block) ++counts[a];
  }
  for (TaskAction a : kTaskActions) CHECK(counts[a] == 6);
  CHECK(calibration_prompts(SessionPhase::Calibration1, 6, 99) == prompts);
  CHECK(calibration_prompts(SessionPhase::Calibration1, 6, 100) != prompts);
  const auto p2 = calibration_prompts(SessionPhase::Calibration2, 2, 1);
  CHECK(std::holds_alternative<InterfaceAction>(p2[0]));
  CHECK_THROWS(calibration_prompts(SessionPhase::Evaluation, 1, 1));
}

TEST_CASE("session creation errors") {
  Fixture fx;
  SessionConfig c;
  c.profile_id = "bob";
  CHECK(capture([&] { fx.sessions.create_session(c); }).http_status() == 404);

  c.profile_id = "alice";
  c.session_id = "fixed";
  fx.sessions.create_session(c);
  const auto dup = capture([&] { fx.sessions.create_session(c); });
  CHECK(dup.code() == "invalid_phase_config");
  c.session_id = "../escape";
  CHECK(capture([&] { fx.sessions.create_session(c); }).code() == "invalid_phase_config");
  c.session_id.clear();
  c.epsilon = 2.0;
  CHECK(capture([&] { fx.sessions.create_session(c); }).code() == "invalid_phase_config");

  CHECK(capture([&] { fx.sessions.snapshot("nope"); }).code() == "unknown_session");
  CHECK_THROWS_AS(session_config_from_json(nlohmann::json{{"profile_id", "alice"}, {"phase", "phase9"}}), ServiceError);
  CHECK_THROWS_AS(session_config_from_json(nlohmann::json{{"phase", "evaluation"}}), ServiceError);
}

TEST_CASE("perfect calibration without smoothing stores delta tables") {
  Fixture fx;
  const auto id = fx.calibration(SessionPhase::Calibration1);
  CHECK(fx.prompt(id).at("total") == 24);
  for (int k = 0; k < 24; ++k) {
    fx.now += 0.5;
    fx.sessions.submit_action(id, correct_response(fx.prompt(id)), k * 1.0);
    if (k < 23) CHECK(fx.prompt(id).at("index") == k + 1);
  }
  CHECK_FALSE(fx.sessions.is_live(id));
  CHECK(fx.sessions.snapshot(id).at("prompt").is_null());
  const auto r = fx.sessions.finish_calibration(id, 0.0);
  CHECK(r.accuracy == 1.0);
  CHECK(r.proficient);
  CHECK_FALSE(r.warning);
  const auto stored = fx.sessions.profiles().get("alice");
  CHECK(stored->internal_mapping_fitted);
  CHECK(stored->tables.internal_mapping == internal_mapping_noise_table(NoiseLevel(0), default_mapping()));
  CHECK(capture([&] { fx.sessions.finish_calibration(id, 0.0); }).code() == "phase_mismatch");
  CHECK(replay_session_trace(fx.sessions.trace_path(id)).identical);
}

TEST_CASE("unanswered prompts time out after five seconds and chain") {
  Fixture fx;
  const auto id = fx.calibration(SessionPhase::Calibration2);
  std::vector<nlohmann::json> seen;
  fx.sessions.subscribe(id, [&](const std::string& m) { seen.push_back(nlohmann::json::parse(m)); });
  REQUIRE(seen.size() == 1);  // immediate snapshot
  CHECK(seen[0].at("prompt").at("remaining_s") == 5.0);

  fx.now += 4.9;
  fx.sessions.tick();
  CHECK(seen.size() == 1);
  fx.now += 0.2;  // 5.1 s after the first prompt
  fx.sessions.tick();
  REQUIRE(seen.size() == 2);
  CHECK(seen[1].at("outcome").at("timed_out") == true);
  CHECK(seen[1].at("prompt").at("index") == 1);
  // The second prompt was shown at the first deadline, not at the tick.
  CHECK(seen[1].at("prompt").at("remaining_s").get<double>() == doctest::Approx(4.9));

  fx.now += 10.0;  // two more deadlines pass before anyone looks
  fx.sessions.tick();
  CHECK(fx.prompt(id).at("index") == 3);
  CHECK(fx.sessions.snapshot(id).at("metrics").at("timeouts") == 3);

  // A response lands on the prompt that is current at arrival.
  const auto expected = fx.prompt(id).at("value");
  fx.sessions.submit_action(id, InterfaceAction::SoftPuff, 1.0);
  std::ifstream trace(fx.sessions.trace_path(id));
  std::string line, last;
  while (std::getline(trace, line)) last = line;
  const auto rec = nlohmann::json::parse(last);
  CHECK(rec.at("prompt_index") == 3);
  CHECK(rec.at("sample").at("prompt") == expected);
  CHECK(rec.at("sample").at("response") == "soft_puff");
}

TEST_CASE("all timeouts give uniform tables and a proficiency warning") {
  Fixture fx;
  const auto id = fx.calibration(SessionPhase::Calibration2);
  fx.now += 24 * 5.0 + 1.0;
  CHECK(capture([&] { fx.sessions.submit_action(id, InterfaceAction::HardPuff); }).code() == "session_closed");
  CHECK(capture([&] { fx.sessions.finish_calibration(id, 0.0); }).code() == "empty_data");
  const auto r = fx.sessions.finish_calibration(id, 1.0);
  CHECK(r.accuracy == 0.0);
  CHECK_FALSE(r.proficient);
  REQUIRE(r.warning);
  CHECK(r.tables.distortion == DistortionTable::uniform());
  CHECK(replay_session_trace(fx.sessions.trace_path(id)).identical);
}

TEST_CASE("finishing early or on the wrong phase is refused") {
  Fixture fx;
  const auto cal = fx.calibration(SessionPhase::Calibration1);
  CHECK(capture([&] { fx.sessions.finish_calibration(cal); }).code() == "phase_mismatch");
  const auto ev = fx.evaluation(AssistanceMode::NoAssistance);
  CHECK(capture([&] { fx.sessions.finish_calibration(ev); }).http_status() == 409);
  CHECK_THROWS_AS(fx.sessions.submit_action(ev, InterfaceAction::Null), ServiceError);
}

TEST_CASE("smoothed tables persist across a restart") {
  std::filesystem::path dir;
  UserModelTables fitted;
  {
    Fixture fx;
    dir = fx.dir;
    const auto id = fx.calibration(SessionPhase::Calibration1);
    for (int k = 0; k < 24; ++k) {
      fx.now += 0.1;
      const auto p = fx.prompt(id);
      // Mostly right, but ccw prompts get a hard puff.
      const auto a = p.at("value").get<TaskAction>();
      fx.sessions.submit_action(id, a == TaskAction::ModeSwitchCCW ? InterfaceAction::HardPuff : correct_response(p));
    }
    fitted = fx.sessions.finish_calibration(id, 1.0).tables;
    CHECK(fitted.internal_mapping(InterfaceAction::HardPuff, TaskAction::ModeSwitchCCW) == doctest::Approx(7.0 / 10.0));
    CHECK(fitted.internal_mapping(InterfaceAction::HardSip, TaskAction::ModeSwitchCCW) == doctest::Approx(1.0 / 10.0));

    SessionManager reopened(dir, [] { return 0.0; });
    CHECK(reopened.profiles().get("alice")->tables == fitted);
    CHECK(reopened.trace(id) == fx.sessions.trace(id));
    dir.clear();
  }
}

TEST_CASE("no assistance applies the measured command") {
  Fixture fx;
  const auto id = fx.evaluation(AssistanceMode::NoAssistance);
  const auto before = fx.sessions.snapshot(id).at("world").get<WorldState>();
  fx.now += 0.3;
  const auto msgs = fx.sessions.submit_action(id, InterfaceAction::SoftPuff, 12.5);
  REQUIRE_FALSE(msgs.empty());
  const auto& state = msgs[0];
  CHECK(state.at("type") == "state");
  CHECK(state.at("outcome").at("reason") == "no_assist");
  const auto after = state.at("world").get<WorldState>();
  const auto expected = apply(before, InterfaceAction::SoftPuff, default_mapping());
  CHECK(after.x == expected.x);
  CHECK(after.y == expected.y);
  CHECK(after.theta == expected.theta);
  CHECK(after.step_count == 1);
}

TEST_CASE("confident correction drives the optimal trajectory and ends the session") {
  Fixture fx;
  const auto id = fx.evaluation(AssistanceMode::Corrective, 1.0);
  const auto task = fx.sessions.snapshot(id).at("task").get<PathTask>();
  const auto plan = optimal_rollout(task);
  std::vector<nlohmann::json> msgs;
  for (std::size_t k = 0; k < plan.size(); ++k) {
    // The user keeps sending soft_sip; only motion_negative steps are right.
    fx.now += 0.2;
    msgs = fx.sessions.submit_action(id, InterfaceAction::SoftSip);
    const auto& outcome = msgs[0].at("outcome");
    CHECK(outcome.at("intervened") == (plan[k] != TaskAction::MotionNegative));
  }
  REQUIRE(msgs.size() == 2);
  CHECK(msgs[1].at("type") == "end");
  CHECK(msgs[1].at("result").at("reason") == "goal_reached");
  CHECK(msgs[1].at("result").at("success") == true);
  CHECK(msgs[1].at("result").at("mode_switches") == task.optimal_mode_switches);
  CHECK(capture([&] { fx.sessions.submit_action(id, InterfaceAction::SoftSip); }).code() == "session_closed");

  const auto report = replay_session_trace(fx.sessions.trace_path(id));
  CHECK(report.identical);
  CHECK(report.events == plan.size() + 1);
  REQUIRE(report.final_state);
  CHECK(is_complete(*report.final_state, task));
}

TEST_CASE("evaluation ends at the time limit") {
  Fixture fx;
  const auto id = fx.evaluation(AssistanceMode::Filter);
  std::vector<nlohmann::json> seen;
  fx.sessions.subscribe(id, [&](const std::string& m) { seen.push_back(nlohmann::json::parse(m)); });
  fx.sessions.submit_action(id, InterfaceAction::HardSip);
  fx.now += 50.5;
  fx.sessions.tick();
  REQUIRE_FALSE(seen.empty());
  CHECK(seen.back().at("type") == "end");
  CHECK(seen.back().at("result").at("reason") == "time_limit");
  CHECK(seen.back().at("result").at("success") == false);
  CHECK_FALSE(fx.sessions.is_live(id));
  CHECK(replay_session_trace(fx.sessions.trace_path(id)).identical);
}

TEST_CASE("replay detects a tampered trace") {
  Fixture fx;
  const auto id = fx.evaluation(AssistanceMode::Filter, 0.7, 21);
  for (int k = 0; k < 5; ++k) {
    fx.now += 0.4;
    fx.sessions.submit_action(id, kPhysicalActions[k % 4], k);
  }
  const auto path = fx.sessions.trace_path(id);
  REQUIRE(replay_session_trace(path).identical);

  std::vector<std::string> lines;
  {
    std::ifstream in(path);
    for (std::string l; std::getline(in, l);) lines.push_back(l);
  }
  auto rec = nlohmann::json::parse(lines[2]);
  rec["step"]["state_after"]["x"] = rec["step"]["state_after"]["x"].get<int>() + 5;
  lines[2] = rec.dump();
  const auto tampered = fx.dir / "tampered.jsonl";
  {
    std::ofstream out(tampered);
    for (const auto& l : lines) out << l << '\n';
  }
  const auto report = replay_session_trace(tampered);
  CHECK_FALSE(report.identical);
  CHECK(report.mismatch.rfind("line 3", 0) == 0);
}

TEST_CASE("HTTP routes") {
  Fixture fx;
  auto call = [&](const std::string& method, const std::string& target, const std::string& body = "") {
    return handle_http(fx.sessions, method, target, body);
  };
  auto r = call("POST", "/profiles", R"({"id":"bob","epsilon":0.5})");
  CHECK(r.status == 201);
  CHECK(nlohmann::json::parse(r.body).at("epsilon") == 0.5);
  CHECK(call("POST", "/profiles", R"({"id":"bob"})").status == 409);
  CHECK(call("POST", "/profiles", R"({"id":"bad id"})").status == 400);
  CHECK(call("POST", "/profiles", "{oops").status == 400);
  CHECK(call("GET", "/profiles/bob").status == 200);
  CHECK(call("GET", "/profiles/carol").status == 404);

  r = call("POST", "/sessions", R"({"profile_id":"bob","phase":"evaluation","assistance":"filter","seed":3})");
  REQUIRE(r.status == 201);
  const auto created = nlohmann::json::parse(r.body);
  const std::string id = created.at("session_id");
  CHECK(created.at("state").at("assistance").at("epsilon") == 0.5);  // falls back to the profile
  CHECK(call("GET", "/sessions/" + id).status == 200);
  CHECK(call("GET", "/sessions/zzz").status == 404);
  CHECK(call("POST", "/sessions", R"({"profile_id":"bob","phase":"warmup"})").status == 400);
  CHECK(call("POST", "/sessions", R"({"profile_id":"nobody","phase":"evaluation"})").status == 404);
  CHECK(nlohmann::json::parse(call("POST", "/sessions/" + id + "/finish", "{}").body).at("error") == "phase_mismatch");

  r = call("GET", "/sessions/" + id + "/trace");
  CHECK(r.status == 200);
  CHECK(r.content_type == "application/x-ndjson");
  CHECK(nlohmann::json::parse(r.body.substr(0, r.body.find('\n'))).at("type") == "header");
  CHECK(call("DELETE", "/profiles/bob").status == 404);

  r = call("POST", "/sessions", R"({"profile_id":"bob","phase":"calibration2","prompt_timeout_s":1,"blocks":1})");
  const std::string cal = nlohmann::json::parse(r.body).at("session_id");
  fx.now += 10;
  CHECK(nlohmann::json::parse(call("POST", "/sessions/" + cal + "/finish", R"({"alpha":"x"})").body).at("error") ==
        "bad_request");
  r = call("POST", "/sessions/" + cal + "/finish", R"({"alpha":1})");
  CHECK(r.status == 200);
  const auto fit = nlohmann::json::parse(r.body);
  CHECK(fit.at("proficient") == false);
  CHECK(fit.at("warning").is_string());
}
