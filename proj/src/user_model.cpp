#include "ifaware/user_model.hpp"

#include <fstream>
#include <string>

namespace ifaware {

NoiseLevel::NoiseLevel(double lambda) : lambda_(lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::out_of_range("noise level must be in [0, 1]");
}

InternalMappingTable internal_mapping_noise_table(NoiseLevel lambda, const ControlMapping& f) {
  return noise_table<TaskAction, InterfaceAction>(lambda, [&f](TaskAction a) { return f.forward(a); });
}

DistortionTable distortion_noise_table(NoiseLevel lambda) {
  return noise_table<InterfaceAction, InterfaceAction>(lambda, [](InterfaceAction phi) { return phi; });
}

UserModelTables noise_tables(NoiseLevel lambda_i, NoiseLevel lambda_m, const ControlMapping& f) {
  return {internal_mapping_noise_table(lambda_i, f), distortion_noise_table(lambda_m)};
}

InterfaceAction sample_distortion(InterfaceAction phi_i, const UserModelTables& tables, Rng& rng) {
  return sample(tables.distortion.row(phi_i), rng);
}

UserStep sample_user_step(TaskAction a, const SimulatedUser& user, Rng& rng) {
  const InterfaceAction phi_i = sample(user.tables.internal_mapping.row(a), rng);
  return {phi_i, sample_distortion(phi_i, user.tables, rng)};
}

namespace {

template <class Y>
ConditionalTable<Y, InterfaceAction> estimate_rows(std::span<const CalibrationSample> samples, double alpha) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("smoothing must be >= 0");
  std::array<std::array<double, kAlphabetSize>, kAlphabetSize> counts{};
  for (const auto& s : samples) {
    const Y* prompt = std::get_if<Y>(&s.prompt);
    if (prompt == nullptr) throw std::invalid_argument("calibration sample belongs to the other phase");
    if (s.timed_out()) continue;
    counts[Alphabet<Y>::index(*prompt)][Alphabet<InterfaceAction>::index(*s.response)] += 1.0;
  }
  typename ConditionalTable<Y, InterfaceAction>::Rows rows;
  for (std::size_t y = 0; y < kAlphabetSize; ++y) {
    double total = 0.0;
    for (double c : counts[y]) total += c;
    const double denom = total + kAlphabetSize * alpha;
    if (denom == 0.0) {
      throw EmptyDataError("no responses for prompt '" + std::string(to_string(Alphabet<Y>::values[y])) +
                           "' and no smoothing");
    }
    typename Distribution<InterfaceAction>::Probs p;
    for (std::size_t x = 0; x < kAlphabetSize; ++x) p[x] = (counts[y][x] + alpha) / denom;
    rows[y] = Distribution<InterfaceAction>(p);
  }
  return ConditionalTable<Y, InterfaceAction>(rows);
}

}  // namespace

InternalMappingTable estimate_internal_mapping(std::span<const CalibrationSample> samples, double alpha) {
  return estimate_rows<TaskAction>(samples, alpha);
}

DistortionTable estimate_distortion(std::span<const CalibrationSample> samples, double alpha) {
  return estimate_rows<InterfaceAction>(samples, alpha);
}

double calibration_accuracy(std::span<const CalibrationSample> samples, const ControlMapping& f) {
  if (samples.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& s : samples) {
    if (s.timed_out()) continue;
    const InterfaceAction expected = std::visit(
        [&f](auto p) {
          if constexpr (std::is_same_v<decltype(p), TaskAction>) {
            return f.forward(p);
          } else {
            return p;
          }
        },
        s.prompt);
    if (*s.response == expected) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(samples.size());
}

std::vector<CalibrationSample> generate_calibration_samples(CalibrationPhase phase, std::size_t per_prompt,
                                                            const SimulatedUser& user, Rng& rng) {
  std::vector<CalibrationSample> out;
  out.reserve(per_prompt * kAlphabetSize);
  for (std::size_t n = 0; n < per_prompt; ++n) {
    for (std::size_t k = 0; k < kAlphabetSize; ++k) {
      if (phase == CalibrationPhase::InternalMapping) {
        const TaskAction a = kTaskActions[k];
        out.push_back({a, sample(user.tables.internal_mapping.row(a), rng), 0.0});
      } else {
        const InterfaceAction phi = kPhysicalActions[k];
        out.push_back({phi, sample_distortion(phi, user.tables, rng), 0.0});
      }
    }
  }
  return out;
}

nlohmann::json to_json_value(const CalibrationSample& s) {
  nlohmann::json j;
  j["phase"] = static_cast<int>(s.phase());
  std::visit([&j](auto p) { j["prompt"] = p; }, s.prompt);
  if (s.response) {
    j["response"] = *s.response;
  } else {
    j["response"] = "timeout";
  }
  j["latency_s"] = s.latency_s;
  return j;
}

CalibrationSample calibration_sample_from_json(const nlohmann::json& j) {
  CalibrationSample s;
  const int phase = j.at("phase").get<int>();
  const auto prompt = j.at("prompt").get<std::string>();
  if (phase == 1) {
    s.prompt = task_action_from_string(prompt);
  } else if (phase == 2) {
    s.prompt = interface_action_from_string(prompt);
  } else {
    throw std::invalid_argument("calibration phase must be 1 or 2");
  }
  const auto response = j.at("response").get<std::string>();
  if (response != "timeout") {
    s.response = interface_action_from_string(response);
    if (!is_physical(*s.response)) throw std::invalid_argument("calibration response must be physical");
  }
  s.latency_s = j.value("latency_s", 0.0);
  if (s.latency_s < 0.0) throw std::invalid_argument("latency must be >= 0");
  return s;
}

std::vector<CalibrationSample> read_calibration_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<CalibrationSample> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(calibration_sample_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw std::invalid_argument(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void write_calibration_jsonl(const std::filesystem::path& path, std::span<const CalibrationSample> samples) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& s : samples) out << to_json_value(s).dump() << '\n';
}

}  // namespace ifaware
