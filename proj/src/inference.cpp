#include "ifaware/inference.hpp"

namespace ifaware {

std::array<double, kAlphabetSize> measurement_likelihood(InterfaceAction phi_m, const UserModelTables& tables) {
  const auto& measured_given_intended = tables.distortion;
  // Column phi_m of the distortion table, reused across all task actions.
  std::array<double, kAlphabetSize> column{};
  for (std::size_t k = 0; k < kAlphabetSize; ++k) {
    column[k] = measured_given_intended(phi_m, kPhysicalActions[k]);
  }
  std::array<double, kAlphabetSize> likelihood{};
  for (std::size_t i = 0; i < kAlphabetSize; ++i) {
    const auto& intended = tables.internal_mapping.rows()[i].probs();
    double acc = 0.0;
    for (std::size_t k = 0; k < kAlphabetSize; ++k) acc += column[k] * intended[k];
    likelihood[i] = acc;
  }
  return likelihood;
}

Distribution<TaskAction> posterior(InterfaceAction phi_m, const ActionPrior& prior,
                                   const UserModelTables& tables) {
  if (!is_physical(phi_m)) throw NullActionError();
  const auto likelihood = measurement_likelihood(phi_m, tables);
  Distribution<TaskAction>::Probs scores{};
  double total = 0.0;
  for (std::size_t i = 0; i < kAlphabetSize; ++i) {
    scores[i] = prior.dist.at(i) * likelihood[i];
    total += scores[i];
  }
  if (total <= 0.0) return prior.dist;
  for (double& s : scores) s /= total;
  return Distribution<TaskAction>(scores);
}

InferenceResult infer_intended_command(InterfaceAction phi_m, const ActionPrior& prior,
                                       const UserModelTables& tables, const ControlMapping& f) {
  InferenceResult r;
  r.posterior = posterior(phi_m, prior, tables);
  r.a_inferred = r.posterior.argmax();
  r.phi_inferred = f.forward(r.a_inferred);
  r.entropy = entropy(r.posterior);
  return r;
}

void to_json(nlohmann::json& j, const UserModelTables& t) {
  j = {{"internal_mapping", to_json_value(t.internal_mapping)}, {"distortion", to_json_value(t.distortion)}};
}

UserModelTables user_tables_from_json(const nlohmann::json& j) {
  return {table_from_json<TaskAction, InterfaceAction>(j.at("internal_mapping")),
          table_from_json<InterfaceAction, InterfaceAction>(j.at("distortion"))};
}

void to_json(nlohmann::json& j, const InferenceResult& r) {
  j = {{"posterior", to_json_value(r.posterior)},
       {"a_inferred", r.a_inferred},
       {"phi_inferred", r.phi_inferred},
       {"entropy_nats", r.entropy.nats},
       {"entropy_normalized", r.entropy.normalized}};
}

}  // namespace ifaware
