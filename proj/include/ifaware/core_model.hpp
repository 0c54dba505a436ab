#pragma once

// Shared vocabulary for interface-aware assistance: the interface-level and
// task-level action alphabets, the true control mapping between them, and
// finite distributions / conditional tables over those alphabets.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

namespace ifaware {

/// Interface-level physical action of a sip-n-puff. `Null` is the blocked
/// command emitted by filtering assistance; it is never a table outcome.
enum class InterfaceAction : std::uint8_t { HardPuff, SoftPuff, HardSip, SoftSip, Null };

/// Task-level action primitive.
enum class TaskAction : std::uint8_t { ModeSwitchCW, ModeSwitchCCW, MotionPositive, MotionNegative };

inline constexpr std::size_t kAlphabetSize = 4;

inline constexpr std::array<InterfaceAction, kAlphabetSize> kPhysicalActions{
    InterfaceAction::HardPuff, InterfaceAction::SoftPuff, InterfaceAction::HardSip,
    InterfaceAction::SoftSip};

inline constexpr std::array<TaskAction, kAlphabetSize> kTaskActions{
    TaskAction::ModeSwitchCW, TaskAction::ModeSwitchCCW, TaskAction::MotionPositive,
    TaskAction::MotionNegative};

class NullActionError : public std::invalid_argument {
 public:
  NullActionError() : std::invalid_argument("null interface action has no task-level meaning") {}
};

class DistributionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an enum name on the wire is not recognised.
class UnknownNameError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::string_view to_string(InterfaceAction a);
std::string_view to_string(TaskAction a);
InterfaceAction interface_action_from_string(std::string_view name);
TaskAction task_action_from_string(std::string_view name);

inline bool is_physical(InterfaceAction a) { return a != InterfaceAction::Null; }
inline bool is_mode_switch(TaskAction a) {
  return a == TaskAction::ModeSwitchCW || a == TaskAction::ModeSwitchCCW;
}

// Dense indexing for the two 4-symbol alphabets.
template <class X>
struct Alphabet;

template <>
struct Alphabet<TaskAction> {
  static constexpr const auto& values = kTaskActions;
  static std::size_t index(TaskAction a) { return static_cast<std::size_t>(a); }
  static TaskAction from_string(std::string_view s) { return task_action_from_string(s); }
};

template <>
struct Alphabet<InterfaceAction> {
  static constexpr const auto& values = kPhysicalActions;
  static std::size_t index(InterfaceAction a) {
    if (a == InterfaceAction::Null) throw NullActionError();
    return static_cast<std::size_t>(a);
  }
  static InterfaceAction from_string(std::string_view s) { return interface_action_from_string(s); }
};

/// Probability vector over a 4-symbol alphabet.
///
/// Construction renormalizes inputs whose total is within 1e-6 of one and
/// rejects anything else (negative or non-finite entries included). Totals
/// within 1e-9 of one are taken as they are.
template <class X>
class Distribution {
 public:
  using Probs = std::array<double, kAlphabetSize>;

  static constexpr double kSumTolerance = 1e-9;
  static constexpr double kRenormalizeTolerance = 1e-6;

  Distribution() : probs_(uniform_probs()) {}

  explicit Distribution(const Probs& probs) : probs_(probs) {
    double total = 0.0;
    for (double p : probs_) {
      if (!std::isfinite(p) || p < 0.0) throw DistributionError("probability must be finite and >= 0");
      total += p;
    }
    if (std::abs(total - 1.0) > kRenormalizeTolerance) {
      throw DistributionError("probabilities sum to " + std::to_string(total) + ", expected 1");
    }
    // Sums already within rounding of one are kept bit-exact so that a
    // distribution survives a serialization round trip unchanged.
    if (std::abs(total - 1.0) > kSumTolerance) {
      for (double& p : probs_) p /= total;
    }
  }

  static Distribution uniform() { return Distribution(uniform_probs()); }

  static Distribution delta(X x) {
    Probs p{};
    p[Alphabet<X>::index(x)] = 1.0;
    return Distribution(p);
  }

  /// (1 - weight) * delta(x) + weight * uniform.
  static Distribution delta_uniform_mixture(X x, double weight) {
    if (!(weight >= 0.0 && weight <= 1.0)) throw std::out_of_range("mixture weight must be in [0, 1]");
    Probs p;
    p.fill(weight / kAlphabetSize);
    p[Alphabet<X>::index(x)] += 1.0 - weight;
    return Distribution(p);
  }

  double operator[](X x) const { return probs_[Alphabet<X>::index(x)]; }
  double at(std::size_t i) const { return probs_.at(i); }
  const Probs& probs() const { return probs_; }

  /// Most probable element; ties resolve to the earliest declared symbol.
  X argmax() const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < kAlphabetSize; ++i) {
      if (probs_[i] > probs_[best]) best = i;
    }
    return Alphabet<X>::values[best];
  }

  bool operator==(const Distribution&) const = default;

 private:
  static Probs uniform_probs() {
    Probs p;
    p.fill(1.0 / kAlphabetSize);
    return p;
  }

  Probs probs_;
};

/// Row-stochastic table p(x | y): one Distribution<X> per element of Y.
template <class Y, class X>
class ConditionalTable {
 public:
  using Rows = std::array<Distribution<X>, kAlphabetSize>;

  ConditionalTable() = default;
  explicit ConditionalTable(const Rows& rows) : rows_(rows) {}

  static ConditionalTable uniform() { return ConditionalTable(); }

  const Distribution<X>& row(Y y) const { return rows_[Alphabet<Y>::index(y)]; }
  double operator()(X x, Y y) const { return row(y)[x]; }
  const Rows& rows() const { return rows_; }

  bool operator==(const ConditionalTable&) const = default;

 private:
  Rows rows_{};
};

/// Entropy in nats together with its value normalized by log |X|.
struct Entropy {
  double nats = 0.0;
  double normalized = 0.0;
};

template <class X>
Entropy entropy(const Distribution<X>& d) {
  double h = 0.0;
  for (double p : d.probs()) {
    if (p > 0.0) h -= p * std::log(p);
  }
  h = std::max(h, 0.0);
  const double normalized = std::clamp(h / std::log(static_cast<double>(kAlphabetSize)), 0.0, 1.0);
  return {h, normalized};
}

/// The true, deterministic control mapping f from task-level actions to
/// physical actions. Always a bijection onto the four physical actions.
class ControlMapping {
 public:
  /// `forward[i]` is the physical action for kTaskActions[i].
  explicit ControlMapping(const std::array<InterfaceAction, kAlphabetSize>& forward);

  InterfaceAction forward(TaskAction a) const { return forward_[Alphabet<TaskAction>::index(a)]; }

  /// Unique task action with forward(a) == phi. Throws NullActionError on Null.
  TaskAction inverse(InterfaceAction phi) const {
    return inverse_[Alphabet<InterfaceAction>::index(phi)];
  }

  bool operator==(const ControlMapping&) const = default;

 private:
  std::array<InterfaceAction, kAlphabetSize> forward_;
  std::array<TaskAction, kAlphabetSize> inverse_{};
};

/// Hard commands switch modes, soft commands drive motion; puff is the
/// clockwise / positive direction.
ControlMapping default_mapping();

TaskAction map_inverse(const ControlMapping& m, InterfaceAction phi);

// JSON wire format. Enum values are lower_snake_case names; tables and
// distributions are objects keyed by those names.
void to_json(nlohmann::json& j, InterfaceAction a);
void from_json(const nlohmann::json& j, InterfaceAction& a);
void to_json(nlohmann::json& j, TaskAction a);
void from_json(const nlohmann::json& j, TaskAction& a);
void to_json(nlohmann::json& j, const ControlMapping& m);
ControlMapping mapping_from_json(const nlohmann::json& j);

template <class X>
nlohmann::json to_json_value(const Distribution<X>& d) {
  nlohmann::json j = nlohmann::json::object();
  for (X x : Alphabet<X>::values) j[std::string(to_string(x))] = d[x];
  return j;
}

template <class X>
Distribution<X> distribution_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw DistributionError("distribution must be a JSON object");
  typename Distribution<X>::Probs p{};
  for (auto it = j.begin(); it != j.end(); ++it) {
    p[Alphabet<X>::index(Alphabet<X>::from_string(it.key()))] = it.value().template get<double>();
  }
  return Distribution<X>(p);
}

template <class Y, class X>
nlohmann::json to_json_value(const ConditionalTable<Y, X>& t) {
  nlohmann::json j = nlohmann::json::object();
  for (Y y : Alphabet<Y>::values) j[std::string(to_string(y))] = to_json_value(t.row(y));
  return j;
}

template <class Y, class X>
ConditionalTable<Y, X> table_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw DistributionError("table must be a JSON object");
  typename ConditionalTable<Y, X>::Rows rows{};
  std::array<bool, kAlphabetSize> seen{};
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto i = Alphabet<Y>::index(Alphabet<Y>::from_string(it.key()));
    rows[i] = distribution_from_json<X>(it.value());
    seen[i] = true;
  }
  for (bool s : seen) {
    if (!s) throw DistributionError("table is missing a row");
  }
  return ConditionalTable<Y, X>(rows);
}

}  // namespace ifaware
