#pragma once

#include "gazeeg/dataset.hpp"

#include <span>
#include <vector>

namespace gazeeg {

/// Velocity-threshold (I-VT) parameters. Defaults follow the Tobii I-VT filter.
struct IvtParams {
  double max_gap_ms = 75.0;
  int median_window_samples = 3;
  double velocity_window_ms = 20.0;
  double velocity_threshold_deg_s = 30.0;
  double merge_max_gap_ms = 75.0;
  double merge_max_angle_deg = 0.5;
  double min_fixation_ms = 60.0;

  void validate() const;
};

/// Single gaze position after eye selection, in screen pixels.
struct CyclopeanSample {
  double t_ms = 0.0;
  Eigen::Vector2d pos_px = Eigen::Vector2d::Zero();
  bool valid = false;
  double eye_distance_mm = 0.0;
};

struct Fixation {
  double onset_ms = 0.0;
  double duration_ms = 0.0;
  Eigen::Vector2d centroid_px = Eigen::Vector2d::Zero();
  int sample_count = 0;
  int trial_id = -1;
  double eye_distance_mm = 0.0;

  double end_ms() const { return onset_ms + duration_ms; }
};

struct Saccade {
  double onset_ms = 0.0;
  double offset_ms = 0.0;
  int trial_id = -1;

  double midpoint_ms() const { return 0.5 * (onset_ms + offset_ms); }
};

enum class SampleClass { Unclassified, Fixation, Saccade };

struct GazeEvents {
  std::vector<Fixation> fixations;
  std::vector<Saccade> saccades;
};

/// Linearly interpolates runs of invalid samples (per eye) whose missing span
/// is at most `max_gap_ms`. Runs without a valid flank on both sides stay invalid.
std::vector<GazeSample> fill_gaps(std::span<const GazeSample> samples, double max_gap_ms);

/// Averages both eyes when both are valid, otherwise takes the valid one.
/// Output positions are in pixels.
std::vector<CyclopeanSample> select_eye(std::span<const GazeSample> samples,
                                        const ScreenGeometry& screen);

/// Centered moving median per coordinate. Near the stream edges the window
/// shrinks symmetrically; invalid samples are excluded from every window.
std::vector<CyclopeanSample> smooth_median(std::span<const CyclopeanSample> samples, int window);

/// Angular velocity (deg/s) of each sample, measured between the endpoints of
/// a window of ~`window_ms`. Samples without a full window inside their valid
/// run take the nearest computable value; NaN marks samples with none.
std::vector<double> compute_velocity(std::span<const CyclopeanSample> samples,
                                     const ScreenGeometry& screen, double window_ms);

/// velocity < threshold is a fixation sample; NaN velocity stays unclassified.
std::vector<SampleClass> ivt_classify(std::span<const double> velocities, double threshold_deg_s);

/// Turns contiguous runs of equal class into events. A run covers
/// [t_first, t_next) where t_next is the following sample's time.
GazeEvents segment_runs(std::span<const CyclopeanSample> samples,
                        std::span<const SampleClass> classes);

/// Visual angle (deg) between two screen points seen from `eye_distance_mm`.
double visual_angle_deg(const Eigen::Vector2d& a_px, const Eigen::Vector2d& b_px,
                        const ScreenGeometry& screen, double eye_distance_mm);

/// Merges neighbours separated by at most `max_gap_ms` and `max_angle_deg`
/// until nothing changes. Centroids are pooled by sample count.
std::vector<Fixation> merge_fixations(std::span<const Fixation> fixations, double max_gap_ms,
                                      double max_angle_deg, const ScreenGeometry& screen);

/// Full chain: gap fill, eye selection, median denoise, velocity, I-VT,
/// merge, discard short. Fixations and saccades get the trial id of the
/// event window holding their onset (-1 outside every window).
GazeEvents detect_fixations(std::span<const GazeSample> samples, const IvtParams& params,
                            const ScreenGeometry& screen,
                            std::span<const TrialEvent> events = {});

}  // namespace gazeeg
