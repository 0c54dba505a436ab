#include <regex>

#include "ifaware/teleop/server.hpp"

namespace ifaware::teleop {

namespace {

HttpReply json_reply(int status, const nlohmann::json& j) { return {status, "application/json", j.dump()}; }

HttpReply error_reply(int status, const std::string& code, const std::string& message) {
  return json_reply(status, {{"error", code}, {"message", message}});
}

nlohmann::json parse_body(const std::string& body) {
  if (body.empty()) return nlohmann::json::object();
  try {
    return nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw bad_request(std::string("malformed JSON body: ") + e.what());
  }
}

nlohmann::json calibration_json(const CalibrationResult& r) {
  return {{"tables", r.tables},
          {"accuracy", r.accuracy},
          {"proficient", r.proficient},
          {"warning", r.warning ? nlohmann::json(*r.warning) : nlohmann::json(nullptr)}};
}

}  // namespace

HttpReply handle_http(SessionManager& sessions, const std::string& method, const std::string& target,
                      const std::string& body) {
  static const std::regex kProfile(R"(^/profiles/([^/?]+)$)");
  static const std::regex kSession(R"(^/sessions/([^/?]+)$)");
  static const std::regex kFinish(R"(^/sessions/([^/?]+)/finish$)");
  static const std::regex kTrace(R"(^/sessions/([^/?]+)/trace$)");

  const std::string path = target.substr(0, target.find('?'));
  std::smatch m;
  try {
    if (path == "/profiles" && method == "POST") {
      const auto j = parse_body(body);
      UserProfile p;
      try {
        p = profile_from_json(j);
      } catch (const ServiceError&) {
        throw;
      } catch (const std::exception& e) {
        throw bad_request(std::string("invalid profile: ") + e.what());
      }
      return json_reply(201, to_json_value(sessions.profiles().create(std::move(p))));
    }
    if (std::regex_match(path, m, kProfile) && method == "GET") {
      const auto p = sessions.profiles().get(m[1]);
      if (!p) throw unknown_profile(m[1]);
      return json_reply(200, to_json_value(*p));
    }
    if (path == "/sessions" && method == "POST") {
      const std::string id = sessions.create_session(session_config_from_json(parse_body(body)));
      return json_reply(201, {{"session_id", id}, {"state", sessions.snapshot(id)}});
    }
    if (std::regex_match(path, m, kSession) && method == "GET") {
      return json_reply(200, sessions.snapshot(m[1]));
    }
    if (std::regex_match(path, m, kFinish) && method == "POST") {
      const auto j = parse_body(body);
      double alpha = kDefaultSmoothing;
      if (j.contains("alpha")) {
        if (!j.at("alpha").is_number()) throw bad_request("alpha must be a number");
        alpha = j.at("alpha").get<double>();
      }
      return json_reply(200, calibration_json(sessions.finish_calibration(m[1], alpha)));
    }
    if (std::regex_match(path, m, kTrace) && method == "GET") {
      return {200, "application/x-ndjson", sessions.trace(m[1])};
    }
    return error_reply(404, "not_found", method + " " + path);
  } catch (const ServiceError& e) {
    return error_reply(e.http_status(), e.code(), e.what());
  } catch (const std::exception& e) {
    return error_reply(500, "internal", e.what());
  }
}

}  // namespace ifaware::teleop
