#pragma once

#include <optional>

#include "ifaware/inference.hpp"

namespace ifaware {

enum class AssistanceMode : std::uint8_t { NoAssistance, Filter, Corrective };

inline constexpr std::array<AssistanceMode, 3> kAssistanceModes{
    AssistanceMode::NoAssistance, AssistanceMode::Filter, AssistanceMode::Corrective};

/// Why a measured command was passed, blocked or replaced.
enum class OutcomeReason : std::uint8_t { PassedConsistent, PassedUncertain, Filtered, Corrected, NoAssist };

std::string_view to_string(AssistanceMode m);
std::string_view to_string(OutcomeReason r);
AssistanceMode assistance_mode_from_string(std::string_view name);
OutcomeReason outcome_reason_from_string(std::string_view name);

inline constexpr double kDefaultEntropyThreshold = 0.7;

struct AssistanceConfig {
  AssistanceMode mode = AssistanceMode::NoAssistance;
  /// Intervention requires normalized posterior entropy strictly below this.
  double epsilon = kDefaultEntropyThreshold;

  AssistanceConfig() = default;
  AssistanceConfig(AssistanceMode m, double eps);
};

struct AssistanceOutcome {
  InterfaceAction phi_out = InterfaceAction::Null;
  bool intervened = false;
  OutcomeReason reason = OutcomeReason::NoAssist;
  std::optional<InferenceResult> inference;  // absent under NoAssistance
};

/// Entropy-gated handling of one measured command.
///
/// NoAssistance returns phi_m untouched without running inference. Otherwise
/// the command is only touched when the inferred intended command differs
/// from phi_m and the posterior is confident; Filter then emits Null and
/// Corrective emits the inferred command.
AssistanceOutcome handle_command(InterfaceAction phi_m, const AssistanceConfig& cfg, const ActionPrior& prior,
                                 const UserModelTables& tables, const ControlMapping& f);

void to_json(nlohmann::json& j, AssistanceMode m);
void from_json(const nlohmann::json& j, AssistanceMode& m);
void to_json(nlohmann::json& j, OutcomeReason r);
void from_json(const nlohmann::json& j, OutcomeReason& r);
void to_json(nlohmann::json& j, const AssistanceConfig& c);
AssistanceConfig assistance_config_from_json(const nlohmann::json& j);
void to_json(nlohmann::json& j, const AssistanceOutcome& o);

}  // namespace ifaware
