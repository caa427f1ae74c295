#include "mmrec/harness/manifest.hpp"

#include <filesystem>
#include <fstream>

#include "mmrec/error.hpp"

#ifndef MMREC_VERSION
#define MMREC_VERSION "unknown"
#endif

namespace mmrec::harness {

RunManifest::RunManifest(std::string path, std::string command, std::string resolved_config) : path_(std::move(path)) {
  doc_ = {{"format", "mmrec-run-manifest"},
          {"version", 1},
          {"tool", "mmrec"},
          {"tool_version", MMREC_VERSION},
          {"command", std::move(command)},
          {"status", "running"},
          {"config", std::move(resolved_config)},
          {"artifacts", nlohmann::json::array()},
          {"timings", nlohmann::json::object()}};
}

void RunManifest::set(const std::string& key, nlohmann::json value) {
  if (final_) throw UsageError("manifest " + path_ + " is finalized");
  doc_[key] = std::move(value);
}

void RunManifest::add_artifact(const std::string& path, const std::string& kind) {
  if (final_) throw UsageError("manifest " + path_ + " is finalized");
  doc_["artifacts"].push_back({{"path", path}, {"kind", kind}});
}

void RunManifest::add_timing(const std::string& stage, double seconds) {
  if (final_) throw UsageError("manifest " + path_ + " is finalized");
  nlohmann::json& t = doc_["timings"];
  t[stage] = t.value(stage, 0.0) + seconds;
}

void RunManifest::write() {
  const std::filesystem::path p(path_);
  std::error_code ec;
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
  if (ec) throw IoError("cannot create " + p.parent_path().string() + ": " + ec.message());
  const std::string tmp = path_ + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write " + tmp);
    out << doc_.dump(2) << '\n';
    if (!out) throw IoError("failed writing " + tmp);
  }
  std::filesystem::rename(tmp, p, ec);
  if (ec) throw IoError("cannot move manifest into place at " + path_ + ": " + ec.message());
}

void RunManifest::finalize() {
  doc_["status"] = "complete";
  write();
  final_ = true;
}

StageTimer::StageTimer(RunManifest& m, std::string stage)
    : manifest_(m), stage_(std::move(stage)), start_(std::chrono::steady_clock::now()) {}

StageTimer::~StageTimer() {
  const std::chrono::duration<double> d = std::chrono::steady_clock::now() - start_;
  try {
    manifest_.add_timing(stage_, d.count());
  } catch (...) {
  }
}

}  // namespace mmrec::harness
