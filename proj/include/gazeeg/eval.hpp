#pragma once

#include "gazeeg/features.hpp"
#include "gazeeg/learn.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gazeeg {

// ---------------------------------------------------------------------------
// Ground truth

struct LabeledFixation {
  Fixation fixation;
  Label label = Label::NonTarget;
  std::string participant_id;
  int trial_id = -1;
  SceneDomain scene_domain = SceneDomain::Workshop;
  std::optional<int> object_count;
  int fixation_index = -1;  ///< position in the detector's fixation list
};

struct LabelOptions {
  /// Keep fixations of skipped / never-found trials as non-targets.
  bool unfound_as_nontarget = false;
};

/// Per clicked trial: the first fixation whose centroid lies in the target
/// box is the target, earlier ones are non-targets, later ones are dropped.
std::vector<LabeledFixation> label_fixations(std::span<const Fixation> fixations,
                                             std::span<const TrialEvent> events,
                                             const std::string& participant_id,
                                             const LabelOptions& opts = {});

/// Indices (ascending) of a balanced subset of `rows`: the larger class is
/// subsampled uniformly to the size of the smaller one.
std::vector<int> balance_indices(std::span<const Label> labels, std::span<const int> rows,
                                 std::uint64_t seed);

std::vector<LabeledFixation> balance(std::span<const LabeledFixation> labeled, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Conditions and splits

enum class Split { WithinUser, CrossUser };

std::string_view to_string(Split s);

struct DomainCondition {
  std::string name;
  bool train_workshop = true;
  bool train_desktop = true;
  std::optional<SceneDomain> test;  ///< empty ⇒ both domains

  bool admits_train(SceneDomain d) const {
    return d == SceneDomain::Workshop ? train_workshop : train_desktop;
  }
  bool admits_test(SceneDomain d) const { return !test || *test == d; }
  std::string train_label() const;
  std::string test_label() const;
};

/// both→both, W→W, D→W, W+D→W, D→D, W→D, W+D→D
const std::vector<DomainCondition>& canonical_conditions();
const DomainCondition& condition_by_name(const std::string& name);

enum class FeatureSet { Gaze, Pyeeg, Csp15, Srp, Fusion };

std::string_view to_string(FeatureSet f);
FeatureSet feature_set_from_string(const std::string& s);
const std::vector<FeatureSet>& all_feature_sets();

struct Condition {
  Split split = Split::CrossUser;
  DomainCondition domains;
  FeatureSet features = FeatureSet::Fusion;
};

struct SampleInfo {
  std::string participant_id;
  Label label = Label::NonTarget;
  SceneDomain scene_domain = SceneDomain::Workshop;
};

struct Fold {
  std::vector<int> train;  ///< balanced, ascending
  std::vector<int> test;   ///< balanced, ascending
  std::string participant_id;  ///< within-user only
};

struct SplitPlan {
  std::vector<Fold> folds;
  std::vector<std::string> skipped_participants;  ///< within-user: too few targets
};

/// within_user: stratified k folds inside each participant; cross_user:
/// participants shuffled into min(k, #participants) groups. Train rows are
/// restricted to the train domains and test rows to the test domain, then
/// each side is balanced on its own. Folds lacking a class on either side
/// are dropped.
SplitPlan make_splits(std::span<const SampleInfo> samples, Split split,
                      const DomainCondition& domains, int k, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Prepared data

struct PrepareConfig {
  IvtParams ivt;
  PreprocessConfig preprocess;
  PyeegConfig pyeeg;
  SrpConfig srp;
  LabelOptions labels;
  double srp_length_ms = 1000.0;
  double srp_max_lead_gap_ms = 100.0;
};

/// One participant after gaze detection, EEG cleaning, epoching and the
/// train-independent feature blocks. Rows are labeled fixations that have
/// both a fixation epoch and a saccade epoch.
struct ParticipantData {
  std::string participant_id;
  std::vector<std::string> channels;
  double fs_hz = 0.0;
  std::vector<LabeledFixation> labeled;
  std::vector<Epoch> frp;
  std::vector<Epoch> srp;
  Matrix gaze;   ///< rows x 1
  Matrix pyeeg;  ///< rows x 15·channels
  Matrix srp_features;
  std::vector<std::string> pyeeg_schema;
  std::vector<std::string> srp_schema;
  PreprocessReport preprocess;
  int n_fixations = 0;
  int n_labeled = 0;
  int skipped_frp = 0;
  int skipped_srp = 0;
};

ParticipantData prepare_participant(const Recording& rec, const PrepareConfig& cfg = {});

struct EvalDataset {
  std::vector<ParticipantData> participants;
  std::vector<SampleInfo> samples;
  std::vector<std::pair<int, int>> origin;  ///< (participant, row) per sample
};

EvalDataset prepare_dataset(std::span<const Recording> recordings, const PrepareConfig& cfg = {},
                            int jobs = 1);

EvalDataset assemble_dataset(std::vector<ParticipantData> participants);

/// Rebuilds a dataset from stored epochs: fixation and saccade epochs are
/// paired by (participant, source_index); unpaired ones are dropped.
EvalDataset dataset_from_epochs(std::span<const Epoch> epochs, const std::vector<std::string>& channels,
                                double fs_hz, const PrepareConfig& cfg = {});

/// Feature rows of `feature_set` for the given samples, with the CSP model
/// (when used) fitted on `fit_rows` only.
FeatureTable build_features(const EvalDataset& data, FeatureSet feature_set,
                            std::span<const int> rows, std::span<const int> fit_rows,
                            int csp_components = 15);

// ---------------------------------------------------------------------------
// Running and reporting

struct EvalConfig {
  int folds = 10;
  int inner_folds = 5;
  int csp_components = 15;
  std::vector<SvmSpec> grid = default_grid();
  SmoOptions smo;
};

struct EvalRow {
  Split split = Split::CrossUser;
  DomainCondition domains;
  FeatureSet features = FeatureSet::Fusion;
  std::vector<double> fold_accuracies;
  std::vector<std::string> fold_units;  ///< participant id (within) or fold id (cross)
  /// Means over which the CI is taken: participants (within) or folds (cross).
  std::vector<double> unit_means;
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  long n_train = 0;
  long n_test = 0;
  std::vector<std::string> chosen;  ///< selected grid cell per fold
  std::vector<std::string> skipped_participants;
  std::optional<double> published_reference;
  std::uint64_t seed = 0;
  /// object count → (correct, total) over all test predictions
  std::map<int, std::pair<long, long>> by_object_count;

  /// Most frequently chosen grid cell (first in fold order on ties).
  std::string modal_choice() const;
};

/// Published accuracy for a row, when one exists.
std::optional<double> published_reference(Split split, const DomainCondition& domains,
                                          FeatureSet features);

EvalRow run_condition(const EvalDataset& data, const Condition& condition, std::uint64_t seed,
                      const EvalConfig& cfg = {});

/// Every (condition, split, feature set) combination, in that nesting
/// order: condition outermost, feature set innermost.
std::vector<EvalRow> run_all(const EvalDataset& data, std::span<const DomainCondition> conditions,
                             std::span<const FeatureSet> features, std::uint64_t seed,
                             const EvalConfig& cfg = {}, int jobs = 1);

/// Majority-class predictor accuracy on every fold of a plan.
std::vector<double> majority_baseline(std::span<const SampleInfo> samples, const SplitPlan& plan);

struct ReportOptions {
  bool svg = false;
  bool object_count = false;
};

std::string report_csv(std::span<const EvalRow> rows);
std::string report_json(std::span<const EvalRow> rows);
std::string report_svg(std::span<const EvalRow> rows);
std::string object_count_csv(std::span<const EvalRow> rows);

/// Writes report.csv and report.json (plus the optional files) into `dir`.
/// Throws NothingToReport on an empty list.
void write_report(std::span<const EvalRow> rows, const std::filesystem::path& dir,
                  const ReportOptions& opts = {});

std::vector<EvalRow> read_report_json(const std::string& text);

}  // namespace gazeeg
