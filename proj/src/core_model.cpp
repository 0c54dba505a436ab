#include "ifaware/core_model.hpp"

namespace ifaware {

namespace {

constexpr std::array<std::string_view, 5> kInterfaceNames{"hard_puff", "soft_puff", "hard_sip",
                                                          "soft_sip", "null"};
constexpr std::array<std::string_view, 4> kTaskNames{"mode_switch_cw", "mode_switch_ccw",
                                                     "motion_positive", "motion_negative"};

}  // namespace

std::string_view to_string(InterfaceAction a) { return kInterfaceNames[static_cast<std::size_t>(a)]; }

std::string_view to_string(TaskAction a) { return kTaskNames[static_cast<std::size_t>(a)]; }

InterfaceAction interface_action_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kInterfaceNames.size(); ++i) {
    if (kInterfaceNames[i] == name) return static_cast<InterfaceAction>(i);
  }
  throw UnknownNameError("unknown interface action '" + std::string(name) + "'");
}

TaskAction task_action_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kTaskNames.size(); ++i) {
    if (kTaskNames[i] == name) return static_cast<TaskAction>(i);
  }
  throw UnknownNameError("unknown task action '" + std::string(name) + "'");
}

ControlMapping::ControlMapping(const std::array<InterfaceAction, kAlphabetSize>& forward)
    : forward_(forward) {
  std::array<bool, kAlphabetSize> hit{};
  for (std::size_t i = 0; i < kAlphabetSize; ++i) {
    if (!is_physical(forward_[i])) throw std::invalid_argument("control mapping cannot target null");
    const auto j = Alphabet<InterfaceAction>::index(forward_[i]);
    if (hit[j]) throw std::invalid_argument("control mapping must be a bijection");
    hit[j] = true;
    inverse_[j] = kTaskActions[i];
  }
}

ControlMapping default_mapping() {
  return ControlMapping({InterfaceAction::HardPuff, InterfaceAction::HardSip, InterfaceAction::SoftPuff,
                         InterfaceAction::SoftSip});
}

TaskAction map_inverse(const ControlMapping& m, InterfaceAction phi) { return m.inverse(phi); }

void to_json(nlohmann::json& j, InterfaceAction a) { j = std::string(to_string(a)); }
void from_json(const nlohmann::json& j, InterfaceAction& a) {
  a = interface_action_from_string(j.get<std::string>());
}
void to_json(nlohmann::json& j, TaskAction a) { j = std::string(to_string(a)); }
void from_json(const nlohmann::json& j, TaskAction& a) { a = task_action_from_string(j.get<std::string>()); }

void to_json(nlohmann::json& j, const ControlMapping& m) {
  j = nlohmann::json::object();
  for (TaskAction a : kTaskActions) j[std::string(to_string(a))] = m.forward(a);
}

ControlMapping mapping_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.size() != kAlphabetSize) {
    throw std::invalid_argument("mapping must be an object with one entry per task action");
  }
  std::array<InterfaceAction, kAlphabetSize> forward{};
  std::array<bool, kAlphabetSize> seen{};
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto i = Alphabet<TaskAction>::index(task_action_from_string(it.key()));
    forward[i] = it.value().get<InterfaceAction>();
    seen[i] = true;
  }
  for (bool s : seen) {
    if (!s) throw std::invalid_argument("mapping is missing a task action");
  }
  return ControlMapping(forward);
}

}  // namespace ifaware
