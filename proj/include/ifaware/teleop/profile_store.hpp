#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>

#include "ifaware/inference.hpp"
#include "ifaware/assistance.hpp"

namespace ifaware::teleop {

/// Error surfaced to clients with a stable code and an HTTP status.
class ServiceError : public std::runtime_error {
 public:
  ServiceError(std::string code, int http_status, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)), status_(http_status) {}
  const std::string& code() const { return code_; }
  int http_status() const { return status_; }

 private:
  std::string code_;
  int status_;
};

ServiceError unknown_profile(const std::string& id);
ServiceError profile_exists(const std::string& id);
ServiceError bad_request(const std::string& what);

struct UserProfile {
  std::string id;
  UserModelTables tables;
  ControlMapping mapping = default_mapping();
  double epsilon = kDefaultEntropyThreshold;
  bool internal_mapping_fitted = false;
  bool distortion_fitted = false;
  std::string created_at;  // ISO-8601 UTC
  std::string updated_at;
};

/// Tables used until a profile has been calibrated.
UserModelTables default_profile_tables(const ControlMapping& f);

nlohmann::json to_json_value(const UserProfile& p);
UserProfile profile_from_json(const nlohmann::json& j);

/// Profiles ids are 1-64 characters of [A-Za-z0-9_-].
bool valid_id(const std::string& id);

std::string utc_timestamp();

/// File-backed profile store: one JSON document per profile under
/// `<dir>/<id>.json`, written via rename so readers never see partial files.
class ProfileStore {
 public:
  explicit ProfileStore(std::filesystem::path dir);

  UserProfile create(UserProfile profile);
  std::optional<UserProfile> get(const std::string& id) const;
  /// Atomic read-modify-write; throws unknown_profile if absent.
  UserProfile update(const std::string& id, const std::function<void(UserProfile&)>& mutate);

 private:
  void save(const UserProfile& p) const;

  std::filesystem::path dir_;
  mutable std::mutex mu_;
  std::map<std::string, UserProfile> profiles_;
};

}  // namespace ifaware::teleop
