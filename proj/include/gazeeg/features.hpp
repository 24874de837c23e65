#pragma once

#include "gazeeg/eeg.hpp"

#include <array>
#include <span>
#include <string>
#include <vector>

namespace gazeeg {

struct GroupKeys {
  std::string participant_id;
  int trial_id = -1;
  SceneDomain scene_domain = SceneDomain::Workshop;
};

/// Named, ordered real vector.
struct FeatureVector {
  Vector values;
  std::vector<std::string> schema;
  Label label = Label::NonTarget;
  GroupKeys keys;

  void check() const;
};

// ---------------------------------------------------------------------------
// Single-channel descriptors

struct Band {
  const char* name;
  double low_hz;
  double high_hz;
};

/// delta, theta, alpha, beta, gamma. The last band is closed at its top edge.
inline constexpr std::array<Band, 5> kBands = {{{"delta", 0.5, 4.0},
                                               {"theta", 4.0, 7.0},
                                               {"alpha", 7.0, 12.0},
                                               {"beta", 12.0, 30.0},
                                               {"gamma", 30.0, 40.0}}};

/// Share of FFT magnitude falling into each band, relative to the whole
/// 0.5-40 Hz mass. An input with no mass there yields 0.2 everywhere.
std::array<double, 5> band_power(const Eigen::Ref<const Vector>& x, double fs_hz);

/// Petrosian fractal dimension; Nδ counts sign changes of the first difference.
double petrosian_fd(const Eigen::Ref<const Vector>& x);

struct Hjorth {
  double mobility = 0.0;
  double complexity = 0.0;
};

/// Throws DegenerateSignal for constant input.
Hjorth hjorth(const Eigen::Ref<const Vector>& x);

/// Higuchi fractal dimension over k = 1..kmax (kmax >= 2).
double higuchi_fd(const Eigen::Ref<const Vector>& x, int kmax = 8);

/// Window sizes from 4 to N/4 (stretched towards N/2 for short inputs),
/// log-spaced, at most 10 distinct values.
std::vector<int> dfa_window_sizes(Eigen::Index n);

/// Detrended fluctuation analysis exponent (linear detrending, non-overlapping
/// windows). Needs at least 3 window sizes.
double dfa_alpha(const Eigen::Ref<const Vector>& x, std::span<const int> window_sizes);

struct Moments {
  double skewness = 0.0;
  double kurtosis = 0.0;  ///< excess
  double min = 0.0;
  double max = 0.0;
  double std = 0.0;  ///< population
};

Moments moments_minmaxstd(const Eigen::Ref<const Vector>& x);

// ---------------------------------------------------------------------------
// Epoch-level feature sets

struct PyeegConfig {
  int higuchi_kmax = 8;
  int min_samples = 16;
};

/// 15 descriptors per channel, channel-major: 5 band shares, PFD, Hjorth
/// mobility and complexity, Higuchi FD, DFA, skewness, kurtosis, min, max, std.
FeatureVector pyeeg_features(const Epoch& epoch, std::span<const std::string> channels,
                             double fs_hz, const PyeegConfig& cfg = {});

struct CspModel {
  Matrix filters;      ///< n_components x n_channels
  Vector eigenvalues;  ///< per kept filter, in (0, 1)
  int n_components = 0;
};

/// Common spatial patterns from trace-normalized per-epoch covariances.
/// Filters are ordered by max(λ, 1 − λ) and sign-normalized so that their
/// largest-magnitude coefficient is positive.
CspModel csp_fit(std::span<const Epoch> epochs, int n_components = 15);
CspModel csp_fit(std::span<const Epoch* const> epochs, int n_components = 15);

/// log variance of each spatially filtered signal, floored at log(1e-12).
FeatureVector csp_transform(const CspModel& model, const Epoch& epoch);

struct SrpConfig {
  double baseline_ms = 100.0;
  double rate_hz = 25.0;
};

/// Baseline-corrected, block-averaged waveform per channel.
FeatureVector srp_features(const Epoch& epoch, std::span<const std::string> channels,
                           double fs_hz, const SrpConfig& cfg = {});

FeatureVector gaze_feature(double fixation_duration_ms);

}  // namespace gazeeg
