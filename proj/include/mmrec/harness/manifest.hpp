#pragma once

#include <chrono>
#include <string>
#include <vector>

#include "json.hpp"

namespace mmrec::harness {

/// Provenance record of one command. Written with status "running" before
/// any result, then finalized with status "complete".
class RunManifest {
 public:
  RunManifest(std::string path, std::string command, std::string resolved_config);

  void set(const std::string& key, nlohmann::json value);
  void add_artifact(const std::string& path, const std::string& kind);
  /// Seconds spent in a named stage; accumulates.
  void add_timing(const std::string& stage, double seconds);

  void write();
  void finalize();

  const nlohmann::json& json() const noexcept { return doc_; }
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
  nlohmann::json doc_;
  bool final_ = false;
};

/// Measures a stage and records it on destruction.
class StageTimer {
 public:
  StageTimer(RunManifest& m, std::string stage);
  ~StageTimer();
  StageTimer(const StageTimer&) = delete;
  StageTimer& operator=(const StageTimer&) = delete;

 private:
  RunManifest& manifest_;
  std::string stage_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace mmrec::harness
