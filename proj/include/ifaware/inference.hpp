#pragma once

#include "ifaware/core_model.hpp"

namespace ifaware {

using InternalMappingTable = ConditionalTable<TaskAction, InterfaceAction>;  // p(phi_i | a)
using DistortionTable = ConditionalTable<InterfaceAction, InterfaceAction>;  // p(phi_m | phi_i)

/// The two user-specific tables the posterior is built from.
struct UserModelTables {
  InternalMappingTable internal_mapping;
  DistortionTable distortion;

  bool operator==(const UserModelTables&) const = default;
};

/// Marginal belief p(a) over the user's next task-level action.
struct ActionPrior {
  Distribution<TaskAction> dist;
};

struct InferenceResult {
  Distribution<TaskAction> posterior;
  TaskAction a_inferred = TaskAction::ModeSwitchCW;
  InterfaceAction phi_inferred = InterfaceAction::HardPuff;
  Entropy entropy;
};

/// p(phi_m | a) = sum over phi_i of p(phi_m | phi_i) p(phi_i | a), for every a.
std::array<double, kAlphabetSize> measurement_likelihood(InterfaceAction phi_m, const UserModelTables& tables);

/// p(a | phi_m) proportional to p(a) p(phi_m | a). If the evidence gives zero
/// mass to every action the prior is returned unchanged.
Distribution<TaskAction> posterior(InterfaceAction phi_m, const ActionPrior& prior,
                                   const UserModelTables& tables);

/// Posterior, its argmax (ties broken in TaskAction declaration order), the
/// physical action that argmax maps to under `f`, and the posterior entropy.
InferenceResult infer_intended_command(InterfaceAction phi_m, const ActionPrior& prior,
                                       const UserModelTables& tables, const ControlMapping& f);

void to_json(nlohmann::json& j, const UserModelTables& t);
UserModelTables user_tables_from_json(const nlohmann::json& j);
void to_json(nlohmann::json& j, const InferenceResult& r);

}  // namespace ifaware
