#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace eif::cli {

// Provenance record written as manifest.json beside every command's outputs.
// Only the timestamps vary between identical invocations.
class Manifest {
 public:
  explicit Manifest(std::string command);

  nlohmann::json& config() { return config_; }
  void set_seed(std::uint64_t seed) { seed_ = seed; }
  void add_input(const std::filesystem::path& p) { inputs_.push_back(p.string()); }
  void add_output(const std::filesystem::path& p) { outputs_.push_back(p.string()); }
  nlohmann::json& extra() { return extra_; }

  void write(const std::filesystem::path& dir) const;

 private:
  std::string command_;
  nlohmann::json config_ = nlohmann::json::object();
  nlohmann::json extra_ = nlohmann::json::object();
  std::uint64_t seed_ = 0;
  std::vector<std::string> inputs_, outputs_;
  std::chrono::system_clock::time_point started_;
};

std::string iso_utc(std::chrono::system_clock::time_point t);

}  // namespace eif::cli
