#pragma once

#include "gazeeg/config.hpp"
#include "gazeeg/learn.hpp"

#include <string>
#include <vector>

namespace gazeeg {

/// Entry point of the `gazeeg` executable. Returns 0 on success, 1 on
/// usage or validation errors, 2 on runtime errors.
int run(int argc, char** argv);
int run(const std::vector<std::string>& args);

/// Exit code for a library error.
int exit_code(ErrorCode code);

/// features.csv: participant_id,trial_id,scene_domain,label then the schema.
std::string features_csv(const FeatureTable& table);
FeatureTable read_features_csv(const std::string& text);

/// Participant directories named by `paths`: a path holding meta.json is a
/// participant, otherwise its immediate subdirectories that do are taken in
/// name order.
std::vector<std::filesystem::path> participant_dirs(const std::vector<std::filesystem::path>& paths);

/// Synthesis, preparation, evaluation and report writing under `out`
/// (data/ and report/). Returns the report rows.
std::vector<EvalRow> run_pipeline(const PipelineConfig& cfg, const std::filesystem::path& out);

}  // namespace gazeeg
