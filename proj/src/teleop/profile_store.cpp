#include "ifaware/teleop/profile_store.hpp"

#include <chrono>
#include <ctime>
#include <fstream>

#include "ifaware/user_model.hpp"

namespace ifaware::teleop {

ServiceError unknown_profile(const std::string& id) {
  return ServiceError("unknown_profile", 404, "unknown profile '" + id + "'");
}
ServiceError profile_exists(const std::string& id) {
  return ServiceError("profile_exists", 409, "profile '" + id + "' already exists");
}
ServiceError bad_request(const std::string& what) { return ServiceError("bad_request", 400, what); }

UserModelTables default_profile_tables(const ControlMapping& f) {
  return noise_tables(NoiseLevel(0.2), NoiseLevel(0.2), f);
}

bool valid_id(const std::string& id) {
  if (id.empty() || id.size() > 64) return false;
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
                    c == '-';
    if (!ok) return false;
  }
  return true;
}

std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

nlohmann::json to_json_value(const UserProfile& p) {
  return {{"id", p.id},
          {"tables", p.tables},
          {"mapping", p.mapping},
          {"epsilon", p.epsilon},
          {"internal_mapping_fitted", p.internal_mapping_fitted},
          {"distortion_fitted", p.distortion_fitted},
          {"created_at", p.created_at},
          {"updated_at", p.updated_at}};
}

UserProfile profile_from_json(const nlohmann::json& j) {
  UserProfile p;
  p.id = j.at("id").get<std::string>();
  if (j.contains("mapping")) p.mapping = mapping_from_json(j.at("mapping"));
  p.tables = j.contains("tables") ? user_tables_from_json(j.at("tables")) : default_profile_tables(p.mapping);
  p.epsilon = j.value("epsilon", kDefaultEntropyThreshold);
  if (!(p.epsilon >= 0.0 && p.epsilon <= 1.0)) throw std::invalid_argument("epsilon must be in [0, 1]");
  p.internal_mapping_fitted = j.value("internal_mapping_fitted", false);
  p.distortion_fitted = j.value("distortion_fitted", false);
  p.created_at = j.value("created_at", std::string());
  p.updated_at = j.value("updated_at", std::string());
  return p;
}

ProfileStore::ProfileStore(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
  for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
    if (entry.path().extension() != ".json") continue;
    std::ifstream in(entry.path());
    UserProfile p = profile_from_json(nlohmann::json::parse(in));
    profiles_.emplace(p.id, std::move(p));
  }
}

UserProfile ProfileStore::create(UserProfile profile) {
  if (!valid_id(profile.id)) throw bad_request("invalid profile id '" + profile.id + "'");
  std::lock_guard lock(mu_);
  if (profiles_.count(profile.id)) throw profile_exists(profile.id);
  profile.created_at = profile.updated_at = utc_timestamp();
  save(profile);
  profiles_.emplace(profile.id, profile);
  return profile;
}

std::optional<UserProfile> ProfileStore::get(const std::string& id) const {
  std::lock_guard lock(mu_);
  auto it = profiles_.find(id);
  if (it == profiles_.end()) return std::nullopt;
  return it->second;
}

UserProfile ProfileStore::update(const std::string& id, const std::function<void(UserProfile&)>& mutate) {
  std::lock_guard lock(mu_);
  auto it = profiles_.find(id);
  if (it == profiles_.end()) throw unknown_profile(id);
  UserProfile copy = it->second;
  mutate(copy);
  copy.id = id;
  copy.updated_at = utc_timestamp();
  save(copy);
  it->second = copy;
  return copy;
}

void ProfileStore::save(const UserProfile& p) const {
  const auto target = dir_ / (p.id + ".json");
  const auto tmp = dir_ / (p.id + ".json.tmp");
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << to_json_value(p).dump(2) << '\n';
  }
  std::filesystem::rename(tmp, target);
}

}  // namespace ifaware::teleop
