// Acceptance gate. Prints one PASS/FAIL line per criterion (with indented
// detail lines underneath) and exits non-zero if any criterion fails.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "ifaware/experiment.hpp"
#include "ifaware/teleop/session_manager.hpp"

using namespace ifaware;

namespace {

const ControlMapping f = default_mapping();

struct Verdict {
  bool pass = false;
  std::vector<std::string> details;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* pattern, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

Distribution<TaskAction> random_simplex(Rng& rng) {
  std::array<double, 4> p{};
  double z = 0.0;
  for (double& v : p) z += v = uniform01(rng) < 0.1 ? 0.0 : uniform01(rng);
  if (z == 0.0) return Distribution<TaskAction>::uniform();
  for (double& v : p) v /= z;
  return Distribution<TaskAction>(p);
}

template <class Y>
ConditionalTable<Y, InterfaceAction> random_rows(Rng& rng) {
  typename ConditionalTable<Y, InterfaceAction>::Rows rows;
  for (auto& r : rows) r = Distribution<InterfaceAction>(random_simplex(rng).probs());
  return ConditionalTable<Y, InterfaceAction>(rows);
}

// p(a | phi_m) by explicit summation over the intermediate physical action.
std::array<double, 4> reference_posterior(InterfaceAction phi_m, const Distribution<TaskAction>& prior,
                                          const UserModelTables& t) {
  std::array<double, 4> w{};
  double z = 0.0;
  for (std::size_t a = 0; a < 4; ++a) {
    double lik = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
      lik += t.distortion.rows()[i].at(static_cast<std::size_t>(phi_m)) * t.internal_mapping.rows()[a].at(i);
    }
    z += w[a] = prior.at(a) * lik;
  }
  if (z == 0.0) return prior.probs();
  for (double& v : w) v /= z;
  return w;
}

Verdict posterior_oracle() {
  Rng rng(20240601);
  constexpr int kCases = 5000;
  double worst = 0.0;
  const auto t0 = std::chrono::steady_clock::now();
  for (int k = 0; k < kCases; ++k) {
    const UserModelTables tables{random_rows<TaskAction>(rng), random_rows<InterfaceAction>(rng)};
    const auto prior = random_simplex(rng);
    const InterfaceAction phi = kPhysicalActions[rng() % 4];
    const auto got = posterior(phi, {prior}, tables);
    const auto want = reference_posterior(phi, prior, tables);
    for (std::size_t i = 0; i < 4; ++i) worst = std::max(worst, std::abs(got.at(i) - want[i]));
  }
  const double elapsed = seconds_since(t0);
  return {worst <= 1e-12 && elapsed < 1.0,
          {fmt("%d cases, max abs error %.3g, %.3f s", kCases, worst, elapsed)}};
}

Verdict decision_table() {
  std::size_t checked = 0;
  std::size_t wrong = 0;
  std::vector<std::string> details;
  std::vector<std::pair<std::string, Distribution<TaskAction>>> priors{{"uniform", Distribution<TaskAction>::uniform()}};
  for (TaskAction a : kTaskActions) {
    priors.emplace_back("delta:" + std::string(to_string(a)), Distribution<TaskAction>::delta(a));
  }
  for (double lam : {0.0, 0.2, 1.0}) {
    const auto tables = noise_tables(NoiseLevel(lam), NoiseLevel(lam), f);
    for (const auto& [prior_name, prior] : priors) {
      for (InterfaceAction phi : kPhysicalActions) {
        for (AssistanceMode mode : kAssistanceModes) {
          const AssistanceConfig cfg(mode, kDefaultEntropyThreshold);
          const auto out = handle_command(phi, cfg, {prior}, tables, f);

          // Expected post-condition, derived without the library's inference.
          const auto post = reference_posterior(phi, prior, tables);
          std::size_t best = 0;
          for (std::size_t i = 1; i < 4; ++i) best = post[i] > post[best] ? i : best;
          const InterfaceAction inferred = f.forward(kTaskActions[best]);
          double h = 0.0;
          for (double p : post) h -= p > 0.0 ? p * std::log(p) : 0.0;
          const bool confident = h / std::log(4.0) < cfg.epsilon;

          InterfaceAction want_phi = phi;
          OutcomeReason want_reason = OutcomeReason::NoAssist;
          if (mode != AssistanceMode::NoAssistance) {
            if (inferred == phi) {
              want_reason = OutcomeReason::PassedConsistent;
            } else if (!confident) {
              want_reason = OutcomeReason::PassedUncertain;
            } else if (mode == AssistanceMode::Filter) {
              want_phi = InterfaceAction::Null;
              want_reason = OutcomeReason::Filtered;
            } else {
              want_phi = inferred;
              want_reason = OutcomeReason::Corrected;
            }
          }
          const bool want_intervened = want_phi != phi;
          ++checked;
          if (out.phi_out != want_phi || out.reason != want_reason || out.intervened != want_intervened) {
            ++wrong;
            if (details.size() < 5) {
              details.push_back(fmt("mismatch: lambda=%g prior=%s phi_m=%s mode=%s", lam, prior_name.c_str(),
                                    std::string(to_string(phi)).c_str(), std::string(to_string(mode)).c_str()));
            }
          }
        }
      }
    }
  }
  details.insert(details.begin(), fmt("%zu combinations, %zu mismatches", checked, wrong));
  return {wrong == 0, details};
}

Verdict noise_endpoints() {
  const auto d0 = distortion_noise_table(NoiseLevel(0.0));
  const auto d1 = distortion_noise_table(NoiseLevel(1.0));
  const auto i0 = internal_mapping_noise_table(NoiseLevel(0.0), f);
  const auto i1 = internal_mapping_noise_table(NoiseLevel(1.0), f);
  bool ok = true;
  for (InterfaceAction x : kPhysicalActions) {
    for (InterfaceAction y : kPhysicalActions) {
      ok = ok && d0(y, x) == (x == y ? 1.0 : 0.0) && d1(y, x) == 0.25;
    }
    for (TaskAction a : kTaskActions) {
      ok = ok && i0(x, a) == (f.forward(a) == x ? 1.0 : 0.0) && i1(x, a) == 0.25;
    }
  }
  return {ok, {"lambda=0 delta and lambda=1 uniform, exact, for both tables"}};
}

Verdict simulation_ordering() {
  SweepConfig cfg;  // full grid, 500 trials per cell
  cfg.rho_assumed = 0.0;
  cfg.epsilon = 0.7;
  cfg.base_seed = 1;
  const auto t0 = std::chrono::steady_clock::now();
  const auto out = run_sweep(cfg);
  const double elapsed = seconds_since(t0);
  const OrderingReport report = summarize(out.cells);

  Verdict v;
  bool ordering = true;
  for (const auto& row : report.cells) {
    if (row.lambda_i != 0.1) continue;
    ordering = ordering && row.expected_order;
    v.details.push_back(fmt("lambda_i=0.1 lambda_m=%g: corrective %.2f  filter %.2f  no_assistance %.2f  %s",
                            row.lambda_m, row.mean_steps.at(AssistanceMode::Corrective),
                            row.mean_steps.at(AssistanceMode::Filter),
                            row.mean_steps.at(AssistanceMode::NoAssistance), row.expected_order ? "ok" : "VIOLATED"));
  }
  bool shrinks = true;
  for (const auto& g : report.gap_trends) {
    shrinks = shrinks && g.shrinks;
    v.details.push_back(fmt("lambda_m=%g: gap(no_assistance - corrective) %.2f at lambda_i=%g, %.2f at lambda_i=%g  %s",
                            g.lambda_m, g.gap_low, g.lambda_i_low, g.gap_high, g.lambda_i_high,
                            g.shrinks ? "shrinks" : "DOES NOT SHRINK"));
  }
  v.details.push_back(fmt("ordering at lambda_i=0.1: %s; gap shrinkage: %s; %zu trials in %.2f s",
                          ordering ? "pass" : "fail", shrinks ? "pass" : "fail", out.trials.size(), elapsed));
  v.pass = ordering && shrinks && elapsed < 120.0;
  return v;
}

// Trials with a delta assumed prior and epsilon = 1 under the given mode.
Verdict confident_assistance(AssistanceMode mode) {
  Rng setup(mode == AssistanceMode::Corrective ? 501 : 502);
  int good = 0;
  int successes = 0;
  for (int k = 0; k < 100; ++k) {
    const double li = 0.9 * uniform01(setup);
    const double lm = 0.99 * uniform01(setup);
    const PathTask task = generate_task(1 + k % 3, 4, kDefaultMaxSteps, setup);
    const SimulatedUser user{noise_tables(NoiseLevel(li), NoiseLevel(lm), f), 0.0, 0};
    Rng rng(derive_seed(77, static_cast<std::uint64_t>(mode), static_cast<std::uint64_t>(k)));
    const auto r = run_trial(task, user, {mode, 1.0}, f, rng, {0.0, false});
    successes += r.success ? 1 : 0;
    if (mode == AssistanceMode::Corrective) {
      good += r.success && r.steps_total == task.optimal_steps && r.mode_switches == task.optimal_mode_switches;
    } else {
      const bool switches_ok = !r.success || r.mode_switches == task.optimal_mode_switches;
      good += switches_ok && r.steps_total >= task.optimal_steps;
    }
  }
  return {good == 100, {fmt("%d/100 trials satisfy the condition (%d successful)", good, successes)}};
}

Verdict estimation_consistency() {
  const auto truth = noise_tables(NoiseLevel(0.2), NoiseLevel(0.2), f);
  const SimulatedUser user{truth, 0.0, 0};
  Rng rng(4242);
  // 10^4 samples per phase: 2500 per prompt.
  const auto p1 = generate_calibration_samples(CalibrationPhase::InternalMapping, 2500, user, rng);
  const auto p2 = generate_calibration_samples(CalibrationPhase::Distortion, 2500, user, rng);
  const auto im = estimate_internal_mapping(p1);
  const auto ds = estimate_distortion(p2);
  double worst_im = 0.0;
  double worst_ds = 0.0;
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t c = 0; c < 4; ++c) {
      worst_im = std::max(worst_im, std::abs(im.rows()[r].at(c) - truth.internal_mapping.rows()[r].at(c)));
      worst_ds = std::max(worst_ds, std::abs(ds.rows()[r].at(c) - truth.distortion.rows()[r].at(c)));
    }
  }
  return {worst_im <= 0.02 && worst_ds <= 0.02,
          {fmt("%zu + %zu samples; L-inf error %.4f (internal), %.4f (distortion)", p1.size(), p2.size(), worst_im,
               worst_ds)}};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Verdict replay_determinism() {
  Verdict v;
  const auto dir = std::filesystem::temp_directory_path() / ("ifaware_acceptance_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);

  SweepConfig cfg;
  cfg.trials_per_cell = 20;
  cfg.record_traces = true;
  cfg.threads = 1;
  write_sweep(cfg, run_sweep(cfg), dir / "a");
  cfg.threads = 3;
  write_sweep(cfg, run_sweep(cfg), dir / "b");
  bool sweep_same = true;
  for (const char* name : {"config.json", "trials.jsonl", "trials.csv", "cells.csv"}) {
    sweep_same = sweep_same && slurp(dir / "a" / name) == slurp(dir / "b" / name);
  }
  v.details.push_back(fmt("sweep rerun (1 vs 3 threads, traces on): %s", sweep_same ? "identical" : "DIFFERENT"));

  double now = 0.0;
  teleop::SessionManager sessions(dir / "data", [&now] { return now; });
  teleop::UserProfile profile;
  profile.id = "subject";
  profile.tables = teleop::default_profile_tables(profile.mapping);
  sessions.profiles().create(profile);

  bool sessions_same = true;
  Rng user_rng(9);
  const SimulatedUser user{profile.tables, 0.0, 0};
  for (auto phase : {teleop::SessionPhase::Calibration1, teleop::SessionPhase::Calibration2}) {
    teleop::SessionConfig c;
    c.profile_id = profile.id;
    c.phase = phase;
    c.seed = 31;
    const auto id = sessions.create_session(c);
    for (int k = 0; k < 24; ++k) {
      now += k % 7 == 0 ? 6.0 : 0.7;  // some prompts time out
      const auto snap = sessions.snapshot(id);
      if (!sessions.is_live(id) || snap.at("prompt").is_null()) break;
      const auto& p = snap.at("prompt");
      const InterfaceAction intended = p.at("kind") == "task_action" ? f.forward(p.at("value").get<TaskAction>())
                                                                      : p.at("value").get<InterfaceAction>();
      sessions.submit_action(id, sample_distortion(intended, user.tables, user_rng), now);
    }
    now += 200.0;
    sessions.tick();
    sessions.finish_calibration(id, 1.0);
    const auto report = teleop::replay_session_trace(sessions.trace_path(id));
    sessions_same = sessions_same && report.identical;
    v.details.push_back(fmt("%s trace: %zu events, %s", std::string(teleop::to_string(phase)).c_str(), report.events,
                            report.identical ? "identical" : report.mismatch.c_str()));
  }
  for (AssistanceMode mode : kAssistanceModes) {
    teleop::SessionConfig c;
    c.profile_id = profile.id;
    c.phase = teleop::SessionPhase::Evaluation;
    c.assistance = mode;
    c.seed = 40 + static_cast<std::uint64_t>(mode);
    c.rho_assumed = 0.1;
    const auto id = sessions.create_session(c);
    while (sessions.is_live(id)) {
      now += 0.3;
      const auto snap = sessions.snapshot(id);
      const auto task = snap.at("task").get<PathTask>();
      const auto a = optimal_policy(snap.at("world").get<WorldState>(), task);
      sessions.submit_action(id, sample_user_step(a, user, user_rng).phi_m, now);
    }
    const auto report = teleop::replay_session_trace(sessions.trace_path(id));
    sessions_same = sessions_same && report.identical;
    v.details.push_back(fmt("evaluation/%s trace: %zu events, %s", std::string(to_string(mode)).c_str(),
                            report.events, report.identical ? "identical" : report.mismatch.c_str()));
  }
  std::filesystem::remove_all(dir);
  v.pass = sweep_same && sessions_same;
  return v;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"posterior matches brute-force double loop (>=1000 cases, 1e-12, <1 s)", posterior_oracle},
      {"assistance decision table, exhaustive, exact", decision_table},
      {"noise table endpoints: delta at 0, uniform at 1", noise_endpoints},
      {"simulation: corrective < filter < no_assistance at lambda_i=0.1; gap shrinks at lambda_i=0.7",
       simulation_ordering},
      {"corrective with delta prior, eps=1: optimal steps and switches, 100/100",
       [] { return confident_assistance(AssistanceMode::Corrective); }},
      {"filter with delta prior, eps=1: optimal switches when successful, steps >= optimal, 100/100",
       [] { return confident_assistance(AssistanceMode::Filter); }},
      {"estimation from 10^4 samples within L-inf 0.02", estimation_consistency},
      {"replay determinism: sweeps and session traces byte-for-byte", replay_determinism},
  };

  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, {std::string("exception: ") + e.what()}};
    }
    failures += v.pass ? 0 : 1;
    std::cout << (v.pass ? "PASS  " : "FAIL  ") << name << '\n';
    for (const auto& d : v.details) std::cout << "      " << d << '\n';
    std::cout.flush();
  }
  std::cout << (criteria.size() - failures) << "/" << criteria.size() << " criteria passed\n";
  return failures == 0 ? 0 : 1;
}
