#pragma once

#include "gazeeg/dataset.hpp"

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace gazeeg {

struct SynthConfig {
  int n_participants = 10;
  int trials_per_participant = 60;
  double workshop_fraction = 0.5;
  int fixations_min = 3;  ///< non-target fixations before the target
  int fixations_max = 7;
  double skip_rate = 0.05;
  double post_target_rate = 0.3;

  double effect_uv = 4.0;
  bool duration_effect = true;
  double target_duration_ms = 280.0;
  double nontarget_duration_ms = 200.0;
  double duration_shape = 6.0;
  double effect_peak_ms = 350.0;
  double effect_width_ms = 300.0;
  double effect_latency_jitter_ms = 150.0;  ///< sd of the per-fixation peak latency

  int n_background_sources = 8;
  double source_noise_uv = 3.0;
  double effect_source_noise_uv = 1.0;  ///< background of the parietal effect source
  double sensor_noise_uv = 0.25;
  double line_noise_uv = 5.0;
  bool blinks = true;
  double blink_uv = 100.0;

  double jitter_deg = 0.15;
  double eye_distance_mm = 650.0;
  double eeg_rate_hz = 500.0;
  double gaze_rate_hz = 60.0;
  std::uint64_t seed = 1;

  /// Whether the fixation-duration class effect is active (it is tied to a > 0).
  bool duration_effect_active() const { return duration_effect && effect_uv > 0.0; }
  void validate() const;
};

enum class FixationRole { Iti, NonTarget, Target, PostTarget };

std::string_view to_string(FixationRole r);

/// One planted fixation: constant position over [onset, offset).
struct PlannedFixation {
  double onset_ms = 0.0;
  double offset_ms = 0.0;
  Eigen::Vector2d pos_px = Eigen::Vector2d::Zero();
  int trial_id = -1;
  FixationRole role = FixationRole::Iti;
};

struct Interval {
  double begin_ms = 0.0;
  double end_ms = 0.0;
};

enum class SaccadeProfile { MinimumJerk, Linear };

struct ScanpathPlan {
  std::vector<PlannedFixation> fixations;  ///< time-ordered, non-overlapping
  std::vector<Interval> invalid;           ///< tracker loss (blinks)
  double end_ms = 0.0;
  SaccadeProfile profile = SaccadeProfile::MinimumJerk;
};

/// Main-sequence saccade duration (ms) for an amplitude in degrees.
double saccade_duration_ms(double amplitude_deg);

/// Normalized position along a saccade at fraction tau in [0, 1].
double saccade_progress(double tau, SaccadeProfile profile);

/// Samples the plan at `rate_hz`: fixations hold their position plus
/// Gaussian AR(1) jitter (stationary σ in degrees, lag-one correlation 0.9),
/// gaps between fixations follow the saccade profile, invalid intervals
/// produce samples with both eyes invalid.
std::vector<GazeSample> render_scanpath(const ScanpathPlan& plan, const ScreenGeometry& screen,
                                        double rate_hz, double eye_distance_mm,
                                        double jitter_deg, std::mt19937_64& rng);

/// Pink (1/f power) noise with unit standard deviation.
Vector pink_noise(Eigen::Index n, std::mt19937_64& rng);

struct SynthTruth {
  std::vector<PlannedFixation> fixations;  ///< planted fixations split at blinks
  std::vector<std::string> source_names;
  Matrix leadfield;                        ///< channels x sources
  Matrix sources;                          ///< sources x frames (in memory only)
  std::vector<double> effect_onsets_ms;    ///< target fixation onsets
  std::vector<double> blink_onsets_ms;
  double effect_uv = 0.0;
  bool duration_effect = false;
};

struct SynthParticipant {
  Recording recording;
  SynthTruth truth;
};

/// Deterministic per (config.seed, index).
SynthParticipant generate_participant(const SynthConfig& cfg, int index);

std::string truth_to_json(const SynthTruth& truth, const std::string& participant_id);

/// Writes one dataset directory (plus truth.json) per participant under
/// `out_dir`; returns the directories in participant order.
std::vector<std::filesystem::path> generate(const SynthConfig& cfg,
                                            const std::filesystem::path& out_dir, int jobs = 1);

}  // namespace gazeeg
