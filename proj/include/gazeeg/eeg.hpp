#pragma once

#include "gazeeg/dataset.hpp"
#include "gazeeg/gaze.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gazeeg {

/// Continuous EEG under processing; shares the stream layout.
using EegMatrix = EegStream;

struct FilterChainConfig {
  int order = 4;
  double highpass_hz = 1.0;
  double notch_low_hz = 48.0;
  double notch_high_hz = 52.0;
  double lowpass_hz = 40.0;
};

/// Zero-phase high-pass, band-stop and low-pass applied to every channel.
EegMatrix bandpass_chain(const EegMatrix& x, const FilterChainConfig& cfg = {});

struct BadChannelConfig {
  double correlation_threshold = 0.8;
  double window_s = 4.0;
  double bad_fraction = 0.5;
};

/// Indices of channels whose best |Pearson r| with any other channel stays
/// below the threshold in more than `bad_fraction` of the windows. Zero
/// variance counts as r = 0. Expects high-passed data.
std::vector<int> detect_bad_channels(const EegMatrix& x, const BadChannelConfig& cfg = {});

struct SplineConfig {
  int order = 4;
  int legendre_terms = 7;
  double ridge = 1e-5;
};

/// Spherical-spline replacement of the `bad` rows from the remaining channels.
EegMatrix interpolate_spherical(const EegMatrix& x, const std::vector<int>& bad,
                                const Montage& montage, const SplineConfig& cfg = {});

/// Subtracts the per-sample channel mean.
template <typename Derived>
Matrix common_average_reference(const Eigen::MatrixBase<Derived>& x) {
  return x.rowwise() - x.colwise().mean();
}

inline EegMatrix common_average_reference(const EegMatrix& x) {
  EegMatrix out = x;
  out.values = common_average_reference(x.values);
  return out;
}

struct SobiConfig {
  int n_lags = 50;
  double tolerance = 1e-8;
  int max_sweeps = 100;
  /// Whitening keeps eigen-directions above this fraction of the largest.
  double rank_tolerance = 1e-10;
};

struct SobiResult {
  Matrix unmixing;  ///< k x channels
  Matrix mixing;    ///< channels x k, pseudo-inverse of `unmixing`
  Matrix sources;   ///< k x samples
  Vector mean;      ///< per-channel mean removed before unmixing
  int sweeps = 0;
  bool converged = false;
  /// Off-diagonal mass after whitening (index 0) and after every sweep.
  std::vector<double> off_diagonal;
};

/// Second-order blind identification: whitening followed by approximate
/// joint diagonalization of lagged covariances with Jacobi rotations. On
/// hitting the sweep cap it still returns the last iterate with
/// `converged == false`.
SobiResult sobi_unmix(const Matrix& x, const SobiConfig& cfg = {});

/// Sum of squared off-diagonal entries across a set of square matrices.
double off_diagonal_mass(std::span<const Matrix> mats);

struct ArtifactConfig {
  double ocular_correlation = 0.7;
  double kurtosis = 15.0;
  std::vector<std::string> frontal_channels = {"Fp1", "Fp2"};
};

struct ArtifactResult {
  EegMatrix cleaned;
  std::vector<int> rejected;
};

/// Drops components that track the frontal (ocular) reference or are
/// spiky (excess kurtosis), then back-projects the rest.
ArtifactResult reject_artifact_components(const SobiResult& sobi, const EegMatrix& x,
                                          const ArtifactConfig& cfg = {});

struct PreprocessConfig {
  FilterChainConfig filter;
  BadChannelConfig bad;
  SplineConfig spline;
  bool run_ica = true;
  SobiConfig sobi;
  ArtifactConfig artifact;
};

struct PreprocessReport {
  std::vector<std::string> bad_channels;
  std::vector<int> rejected_components;
  int sobi_sweeps = 0;
  bool sobi_converged = true;
};

/// filters -> bad channels -> spherical interpolation -> CAR -> SOBI + rejection
EegMatrix preprocess(const EegMatrix& raw, const Montage& montage, const PreprocessConfig& cfg = {},
                     PreprocessReport* report = nullptr);

enum class EpochKind { Fixation, Saccade };

struct Epoch {
  Matrix data;  ///< channels x n_samples
  double onset_ms = 0.0;
  double duration_ms = 0.0;
  Label label = Label::NonTarget;
  int trial_id = -1;
  std::string participant_id;
  SceneDomain scene_domain = SceneDomain::Workshop;
  EpochKind kind = EpochKind::Fixation;
  /// Index of the fixation this epoch belongs to in the caller's list.
  int source_index = -1;

  Eigen::Index n_channels() const { return data.rows(); }
  Eigen::Index n_samples() const { return data.cols(); }
};

struct EpochSet {
  std::vector<Epoch> epochs;
  int skipped = 0;
};

/// One epoch per fixation covering [onset, onset + duration), i.e.
/// round(duration * fs / 1000) frames starting at the first frame >= onset.
/// Fixations not fully inside the EEG span are skipped and counted.
EpochSet epoch_fixations(const EegMatrix& x, std::span<const Fixation> fixations);

/// Fixed-length epochs starting at the temporal midpoint of the saccade that
/// leads into each fixation. A fixation without such a saccade (none ending
/// within `max_lead_gap_ms` before its onset) or whose window overruns the
/// stream is skipped and counted.
EpochSet epoch_srp(const EegMatrix& x, std::span<const Saccade> saccades,
                   std::span<const Fixation> fixations, double length_ms = 1000.0,
                   double max_lead_gap_ms = 100.0);

}  // namespace gazeeg
