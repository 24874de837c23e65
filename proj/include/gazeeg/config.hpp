#pragma once

#include "gazeeg/eval.hpp"
#include "gazeeg/synth.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace gazeeg {

/// Every tunable of the pipeline. Text form is one `key = value` per line;
/// `#` starts a comment, lists are comma separated.
struct PipelineConfig {
  std::uint64_t seed = 1;
  int jobs = 0;  ///< 0 ⇒ all cores
  SynthConfig synth;
  PrepareConfig prepare;
  EvalConfig eval;
  std::vector<std::string> conditions;  ///< canonical names, all by default
  std::vector<FeatureSet> features = all_feature_sets();
  ReportOptions report;

  PipelineConfig();
  /// The generator config with the global seed applied.
  SynthConfig synth_config() const;
};

/// All accepted keys in dump order.
const std::vector<std::string>& config_keys();

/// Throws ConfigError on unknown keys or malformed values.
void set_config_value(PipelineConfig& cfg, const std::string& key, const std::string& value);
std::string get_config_value(const PipelineConfig& cfg, const std::string& key);

/// Applies the lines of `text` on top of `base`.
PipelineConfig parse_config(const std::string& text, PipelineConfig base = {});
PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base = {});

/// Throws ConfigError on out-of-range values.
void validate_config(const PipelineConfig& cfg);

/// Every key with its effective value; parse_config(dump_config(c)) == c.
std::string dump_config(const PipelineConfig& cfg);

}  // namespace gazeeg
