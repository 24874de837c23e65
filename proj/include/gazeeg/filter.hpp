#pragma once

#include "gazeeg/common.hpp"

#include <complex>
#include <vector>

namespace gazeeg {

/// One second-order section, a0 normalized to 1.
struct Biquad {
  double b0 = 1, b1 = 0, b2 = 0;
  double a1 = 0, a2 = 0;
};

using SosFilter = std::vector<Biquad>;

/// Digital Butterworth designs (bilinear transform with pre-warping).
/// `order` is the analog prototype order; the band-stop design therefore has
/// 2*order poles. Cutoffs must lie strictly inside (0, fs/2).
SosFilter butter_lowpass(int order, double cutoff_hz, double fs_hz);
SosFilter butter_highpass(int order, double cutoff_hz, double fs_hz);
SosFilter butter_bandstop(int order, double low_hz, double high_hz, double fs_hz);

std::complex<double> frequency_response(const SosFilter& sos, double f_hz, double fs_hz);

/// Causal cascade filtering (transposed direct form II) from rest.
Vector sosfilt(const SosFilter& sos, const Eigen::Ref<const Vector>& x);

/// Zero-phase forward-backward filtering with odd extension at both ends and
/// steady-state initial conditions, so a constant input passes at its DC gain
/// from the first sample.
Vector sosfiltfilt(const SosFilter& sos, const Eigen::Ref<const Vector>& x);

/// Row-wise zero-phase filtering of a channels x samples matrix.
template <typename Derived>
Matrix sosfiltfilt_rows(const SosFilter& sos, const Eigen::MatrixBase<Derived>& x) {
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const Vector row = x.row(r).transpose();
    out.row(r) = sosfiltfilt(sos, row).transpose();
  }
  return out;
}

}  // namespace gazeeg
