#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "ifaware/inference.hpp"
#include "ifaware/user_model.hpp"

namespace testsupport {

// Random probability vector; some entries are forced to zero so that
// sparse rows and priors get exercised too.
template <class X>
ifaware::Distribution<X> random_distribution(ifaware::Rng& rng, bool allow_zeros = true) {
  std::array<double, ifaware::kAlphabetSize> p{};
  double total = 0.0;
  for (double& v : p) {
    v = ifaware::uniform01(rng);
    if (allow_zeros && ifaware::uniform01(rng) < 0.15) v = 0.0;
    total += v;
  }
  if (total == 0.0) {
    p[rng() % ifaware::kAlphabetSize] = 1.0;
    total = 1.0;
  }
  for (double& v : p) v /= total;
  return ifaware::Distribution<X>(p);
}

template <class Y, class X>
ifaware::ConditionalTable<Y, X> random_table(ifaware::Rng& rng) {
  typename ifaware::ConditionalTable<Y, X>::Rows rows;
  for (auto& r : rows) r = random_distribution<X>(rng);
  return ifaware::ConditionalTable<Y, X>(rows);
}

inline ifaware::UserModelTables random_tables(ifaware::Rng& rng) {
  return {random_table<ifaware::TaskAction, ifaware::InterfaceAction>(rng),
          random_table<ifaware::InterfaceAction, ifaware::InterfaceAction>(rng)};
}

// Plain double loop over (a, phi_i), written independently of the library.
inline std::array<double, 4> brute_force_posterior(ifaware::InterfaceAction phi_m,
                                                   const ifaware::Distribution<ifaware::TaskAction>& prior,
                                                   const ifaware::UserModelTables& t) {
  std::array<double, 4> out{};
  double z = 0.0;
  for (std::size_t a = 0; a < 4; ++a) {
    double s = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
      s += t.distortion.rows()[i].at(static_cast<std::size_t>(phi_m)) * t.internal_mapping.rows()[a].at(i);
    }
    out[a] = prior.at(a) * s;
    z += out[a];
  }
  if (z == 0.0) return prior.probs();
  for (double& v : out) v /= z;
  return out;
}

// Fresh, empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("ifaware_test_" + name + "_" + std::to_string(std::random_device{}()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testsupport
