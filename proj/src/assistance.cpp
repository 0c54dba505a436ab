#include "ifaware/assistance.hpp"

namespace ifaware {

namespace {

constexpr std::array<std::string_view, 3> kModeNames{"no_assistance", "filter", "corrective"};
constexpr std::array<std::string_view, 5> kReasonNames{"passed_consistent", "passed_uncertain", "filtered",
                                                       "corrected", "no_assist"};

}  // namespace

std::string_view to_string(AssistanceMode m) { return kModeNames[static_cast<std::size_t>(m)]; }
std::string_view to_string(OutcomeReason r) { return kReasonNames[static_cast<std::size_t>(r)]; }

AssistanceMode assistance_mode_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kModeNames.size(); ++i) {
    if (kModeNames[i] == name) return static_cast<AssistanceMode>(i);
  }
  throw UnknownNameError("unknown assistance mode '" + std::string(name) + "'");
}

OutcomeReason outcome_reason_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kReasonNames.size(); ++i) {
    if (kReasonNames[i] == name) return static_cast<OutcomeReason>(i);
  }
  throw UnknownNameError("unknown outcome reason '" + std::string(name) + "'");
}

AssistanceConfig::AssistanceConfig(AssistanceMode m, double eps) : mode(m), epsilon(eps) {
  if (!(eps >= 0.0 && eps <= 1.0)) throw std::out_of_range("entropy threshold must be in [0, 1]");
}

AssistanceOutcome handle_command(InterfaceAction phi_m, const AssistanceConfig& cfg, const ActionPrior& prior,
                                 const UserModelTables& tables, const ControlMapping& f) {
  if (!is_physical(phi_m)) throw NullActionError();
  AssistanceOutcome out;
  if (cfg.mode == AssistanceMode::NoAssistance) {
    out.phi_out = phi_m;
    out.reason = OutcomeReason::NoAssist;
    return out;
  }

  const auto& inf = out.inference.emplace(infer_intended_command(phi_m, prior, tables, f));
  if (inf.phi_inferred == phi_m) {
    out.phi_out = phi_m;
    out.reason = OutcomeReason::PassedConsistent;
  } else if (inf.entropy.normalized < cfg.epsilon) {
    out.intervened = true;
    if (cfg.mode == AssistanceMode::Filter) {
      out.phi_out = InterfaceAction::Null;
      out.reason = OutcomeReason::Filtered;
    } else {
      out.phi_out = inf.phi_inferred;
      out.reason = OutcomeReason::Corrected;
    }
  } else {
    out.phi_out = phi_m;
    out.reason = OutcomeReason::PassedUncertain;
  }
  return out;
}

void to_json(nlohmann::json& j, AssistanceMode m) { j = std::string(to_string(m)); }
void from_json(const nlohmann::json& j, AssistanceMode& m) { m = assistance_mode_from_string(j.get<std::string>()); }
void to_json(nlohmann::json& j, OutcomeReason r) { j = std::string(to_string(r)); }
void from_json(const nlohmann::json& j, OutcomeReason& r) { r = outcome_reason_from_string(j.get<std::string>()); }

void to_json(nlohmann::json& j, const AssistanceConfig& c) { j = {{"mode", c.mode}, {"epsilon", c.epsilon}}; }

AssistanceConfig assistance_config_from_json(const nlohmann::json& j) {
  return AssistanceConfig(j.at("mode").get<AssistanceMode>(), j.value("epsilon", kDefaultEntropyThreshold));
}

void to_json(nlohmann::json& j, const AssistanceOutcome& o) {
  j = {{"phi_out", o.phi_out}, {"intervened", o.intervened}, {"reason", o.reason}};
  if (o.inference) {
    j["posterior"] = to_json_value(o.inference->posterior);
    j["entropy_normalized"] = o.inference->entropy.normalized;
    j["a_inferred"] = o.inference->a_inferred;
    j["phi_inferred"] = o.inference->phi_inferred;
  } else {
    j["posterior"] = nullptr;
    j["entropy_normalized"] = nullptr;
  }
}

}  // namespace ifaware
