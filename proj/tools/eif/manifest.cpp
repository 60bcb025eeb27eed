#include "manifest.hpp"

#include <ctime>

#include "eif/util/binary_io.hpp"

namespace eif::cli {

std::string iso_utc(std::chrono::system_clock::time_point t) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Manifest::Manifest(std::string command)
    : command_(std::move(command)), started_(std::chrono::system_clock::now()) {}

void Manifest::write(const std::filesystem::path& dir) const {
  nlohmann::json j = {{"tool", "eif"},
                      {"version", EIF_VERSION},
                      {"command", command_},
                      {"config", config_},
                      {"seed", seed_},
                      {"inputs", inputs_},
                      {"outputs", outputs_},
                      {"started_at", iso_utc(started_)},
                      {"finished_at", iso_utc(std::chrono::system_clock::now())}};
  if (!extra_.empty()) j["details"] = extra_;
  write_file(dir / "manifest.json", j.dump(2) + "\n");
}

}  // namespace eif::cli
