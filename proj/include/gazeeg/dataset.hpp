#pragma once

#include "gazeeg/common.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gazeeg {

/// One eye-tracker row. Positions are normalized screen coordinates with a
/// top-left origin; an eye's position is meaningless when its flag is false.
struct GazeSample {
  double t_ms = 0.0;
  Eigen::Vector2d left = Eigen::Vector2d::Zero();
  Eigen::Vector2d right = Eigen::Vector2d::Zero();
  bool left_valid = false;
  bool right_valid = false;
  double eye_distance_mm = 0.0;
};

/// Continuous multichannel EEG: one column per frame, one row per channel (µV).
struct EegStream {
  Vector t_ms;
  Matrix values;
  std::vector<std::string> channels;
  double rate_hz = 500.0;

  Eigen::Index n_channels() const { return values.rows(); }
  Eigen::Index n_frames() const { return values.cols(); }
};

struct ScreenGeometry {
  int width_px = 1920;
  int height_px = 1080;
  double width_mm = 0.0;
  double height_mm = 0.0;

  bool has_physical_size() const { return width_mm > 0.0 && height_mm > 0.0; }
  /// Screen-plane millimetres per pixel along x and y.
  Eigen::Vector2d mm_per_px() const {
    return {width_mm / width_px, height_mm / height_px};
  }
};

/// Closed pixel rectangle, buffer already included.
struct BBox {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  bool contains(const Eigen::Vector2d& p) const {
    return p.x() >= x0 && p.x() <= x1 && p.y() >= y0 && p.y() <= y1;
  }
};

enum class Outcome { Clicked, Skipped };

struct TrialEvent {
  int trial_id = 0;
  std::string scene_id;
  SceneDomain scene_domain = SceneDomain::Workshop;
  std::string target_id;
  BBox target_bbox;
  double search_onset_ms = 0.0;
  double search_end_ms = 0.0;
  Outcome outcome = Outcome::Clicked;
  std::optional<int> object_count;
};

using Montage = std::map<std::string, Eigen::Vector3d>;

/// Unit-sphere positions (x right, y nasion, z vertex) for the 20 electrodes
/// of the default 10-20 montage.
const Montage& default_montage();
const std::vector<std::string>& default_channels();

enum class GazeOrigin { TopLeft, TopRight };

struct Recording {
  std::string participant_id;
  ScreenGeometry screen;
  double gaze_rate_hz = 60.0;
  GazeOrigin source_origin = GazeOrigin::TopLeft;
  std::vector<GazeSample> gaze;
  EegStream eeg;
  std::vector<TrialEvent> events;
  Montage montage;
};

/// Reads meta.json, gaze.csv, eeg.csv and events.jsonl from `dir` and checks
/// every stream invariant. Gaze recorded with a top-right origin (declared
/// in meta.json) is flipped to top-left here, once.
Recording load_recording(const std::filesystem::path& dir);

/// Writes the four files of the directory format. Floats use 6 significant
/// digits, timestamps 3 decimals, so write(load(write(r))) is byte-stable.
void write_recording(const Recording& rec, const std::filesystem::path& dir);

/// Throws ClockError / SchemaError / CoverageError on invariant violations.
void validate_recording(const Recording& rec);

/// Samples with t0 <= t < t1, order preserved.
std::vector<GazeSample> slice_stream(std::span<const GazeSample> gaze, double t0_ms, double t1_ms);
EegStream slice_stream(const EegStream& eeg, double t0_ms, double t1_ms);

/// Half-open index range [first, last) of frames with t0 <= t < t1.
std::pair<Eigen::Index, Eigen::Index> frame_range(const Vector& t_ms, double t0_ms, double t1_ms);

}  // namespace gazeeg
