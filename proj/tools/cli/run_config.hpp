#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "coopnav/scenarios.hpp"

namespace coopnav::cli {

/// A config problem that can be pinned to one key of the file.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct RunConfig {
  scen::PipelineConfig pipeline;
  int runs = 100;
  int threads = 0;                 // 0: hardware concurrency
  std::vector<int> sweep;          // agent counts for the montecarlo N-sweep
  std::vector<double> influence_p = {1.0, 0.3};   // m^2, prior variance of the ranged difference
  std::filesystem::path out = "out";
};

/// key = value lines, '#' starts a comment. Unknown, duplicate and missing
/// required keys are errors naming the key.
RunConfig parse_config(std::istream& is, const std::string& source = "<config>");
RunConfig load_config(const std::filesystem::path& path);

/// Every key with its current value, one per line, in table order. Parsing
/// the output gives back an equal config.
void write_config(std::ostream& os, const RunConfig& cfg);

struct ConfigKey {
  std::string key;
  std::string doc;
  bool required = false;
};
const std::vector<ConfigKey>& config_keys();

}  // namespace coopnav::cli
