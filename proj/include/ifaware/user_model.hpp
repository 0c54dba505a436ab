#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "ifaware/inference.hpp"

namespace ifaware {

using Rng = std::mt19937_64;

/// Uniform double in [0, 1) from the top 53 bits of one engine draw.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Inverse-CDF draw from a distribution; one engine draw per call.
template <class X>
X sample(const Distribution<X>& d, Rng& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < kAlphabetSize; ++i) {
    if (d.at(i) <= 0.0) continue;
    acc += d.at(i);
    last = i;
    if (u < acc) return Alphabet<X>::values[i];
  }
  return Alphabet<X>::values[last];
}

/// Scalar corruption level: 0 is a delta table, 1 is uniform.
class NoiseLevel {
 public:
  explicit NoiseLevel(double lambda);
  double value() const { return lambda_; }

 private:
  double lambda_;
};

/// Row y puts (1 - lambda) + lambda/4 on diag(y) and lambda/4 elsewhere.
template <class Y, class X, class Diag>
ConditionalTable<Y, X> noise_table(NoiseLevel lambda, Diag&& diag) {
  typename ConditionalTable<Y, X>::Rows rows;
  for (std::size_t i = 0; i < kAlphabetSize; ++i) {
    rows[i] = Distribution<X>::delta_uniform_mixture(diag(Alphabet<Y>::values[i]), lambda.value());
  }
  return ConditionalTable<Y, X>(rows);
}

/// p(phi_i | a) centred on the true mapping f.
InternalMappingTable internal_mapping_noise_table(NoiseLevel lambda, const ControlMapping& f);
/// p(phi_m | phi_i) centred on the identity.
DistortionTable distortion_noise_table(NoiseLevel lambda);
UserModelTables noise_tables(NoiseLevel lambda_i, NoiseLevel lambda_m, const ControlMapping& f);

struct SimulatedUser {
  UserModelTables tables;
  double policy_noise = 0.0;  // weight of the uniform component in the user's own action choice
  std::uint64_t rng_seed = 0;
};

struct UserStep {
  InterfaceAction phi_i;
  InterfaceAction phi_m;
};

InterfaceAction sample_distortion(InterfaceAction phi_i, const UserModelTables& tables, Rng& rng);
UserStep sample_user_step(TaskAction a, const SimulatedUser& user, Rng& rng);

// ---------------------------------------------------------------------------
// Calibration data

enum class CalibrationPhase : std::uint8_t { InternalMapping = 1, Distortion = 2 };

/// One prompted trial. Phase 1 prompts a task action, phase 2 a physical one.
/// An empty response is a timeout.
struct CalibrationSample {
  std::variant<TaskAction, InterfaceAction> prompt;
  std::optional<InterfaceAction> response;
  double latency_s = 0.0;

  CalibrationPhase phase() const {
    return std::holds_alternative<TaskAction>(prompt) ? CalibrationPhase::InternalMapping
                                                      : CalibrationPhase::Distortion;
  }
  bool timed_out() const { return !response.has_value(); }
};

class EmptyDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kDefaultSmoothing = 1.0;

/// Laplace-smoothed frequency table from phase 1 samples; timeouts are
/// ignored and rows without data come out uniform when alpha > 0.
InternalMappingTable estimate_internal_mapping(std::span<const CalibrationSample> samples,
                                               double alpha = kDefaultSmoothing);
/// Same estimator over phase 2 samples.
DistortionTable estimate_distortion(std::span<const CalibrationSample> samples, double alpha = kDefaultSmoothing);

/// Fraction of samples answered with the expected symbol (f(prompt) in phase
/// 1, the prompt itself in phase 2). Timeouts count as misses. Zero when empty.
double calibration_accuracy(std::span<const CalibrationSample> samples, const ControlMapping& f);

/// Synthetic calibration data: `per_prompt` trials for each of the four
/// prompts of the phase, responses drawn from the user's tables.
std::vector<CalibrationSample> generate_calibration_samples(CalibrationPhase phase, std::size_t per_prompt,
                                                            const SimulatedUser& user, Rng& rng);

// JSON-lines: {"phase":1|2,"prompt":name,"response":name|"timeout","latency_s":x}
nlohmann::json to_json_value(const CalibrationSample& s);
CalibrationSample calibration_sample_from_json(const nlohmann::json& j);
std::vector<CalibrationSample> read_calibration_jsonl(const std::filesystem::path& path);
void write_calibration_jsonl(const std::filesystem::path& path, std::span<const CalibrationSample> samples);

}  // namespace ifaware
