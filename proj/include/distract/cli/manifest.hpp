#pragma once

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "distract/core/error.hpp"
#include "distract/version.hpp"

namespace distract::cli {

/// Writes `content` to `path` through a temporary file and a rename, so
/// readers never observe a half-written artifact.
inline void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw LoadError("cannot open '" + tmp + "' for writing");
    out << content;
    if (!out.flush()) throw LoadError("failed writing '" + tmp + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw LoadError("cannot move '" + tmp + "' to '" + path + "'");
}

/// Provenance record written next to every output artifact.
struct RunManifest {
  std::string command;
  std::string config;  // RunConfig::dump()
  std::string seed;
  std::vector<std::pair<std::string, std::string>> inputs;
  std::vector<std::pair<std::string, std::string>> outputs;
  std::chrono::system_clock::time_point started = std::chrono::system_clock::now();

  std::string render() const {
    std::string out;
    out += "command=" + command + "\n";
    out += "code_version=" + std::string(kVersion) + "\n";
    out += "seed=" + seed + "\n";
    for (const auto& [k, v] : inputs) out += "input." + k + "=" + v + "\n";
    for (const auto& [k, v] : outputs) out += "output." + k + "=" + v + "\n";
    const std::time_t t = std::chrono::system_clock::to_time_t(started);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    out += "started_utc=" + std::string(stamp) + "\n";
    const double secs =
        std::chrono::duration<double>(std::chrono::system_clock::now() - started).count();
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", secs);
    out += "wall_clock_seconds=" + std::string(buf) + "\n";
    std::size_t start = 0;
    while (start < config.size()) {
      const auto end = config.find('\n', start);
      out += "config." + config.substr(start, end - start) + "\n";
      if (end == std::string::npos) break;
      start = end + 1;
    }
    return out;
  }

  void write(const std::string& path) const { write_file_atomic(path, render()); }
};

}  // namespace distract::cli
