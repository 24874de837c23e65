#pragma once

#include "gazeeg/common.hpp"

#include <cmath>
#include <span>
#include <vector>

namespace gazeeg {

/// Pearson correlation; 0 when either side has zero variance.
template <typename A, typename B>
double pearson(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  const auto ac = (a.array() - a.mean()).matrix();
  const auto bc = (b.array() - b.mean()).matrix();
  const double saa = ac.squaredNorm();
  const double sbb = bc.squaredNorm();
  if (!(saa > 0.0) || !(sbb > 0.0)) return 0.0;
  return ac.dot(bc) / std::sqrt(saa * sbb);
}

/// Excess (Fisher) kurtosis with population moments; 0 for constant input.
template <typename Derived>
double excess_kurtosis(const Eigen::MatrixBase<Derived>& x) {
  const auto c = (x.array() - x.mean());
  const double m2 = c.square().mean();
  if (!(m2 > 0.0)) return 0.0;
  const double m4 = c.square().square().mean();
  return m4 / (m2 * m2) - 3.0;
}

/// Least-squares slope of y on x.
inline double ls_slope(std::span<const double> x, std::span<const double> y) {
  const auto n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

struct MeanCi {
  double mean = 0.0;
  double sd = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

/// mean ± 1.96·sd/√k with the sample (k−1) standard deviation.
inline MeanCi mean_ci95(std::span<const double> v) {
  MeanCi r;
  if (v.empty()) return r;
  const auto k = static_cast<double>(v.size());
  for (double x : v) r.mean += x;
  r.mean /= k;
  if (v.size() > 1) {
    double ss = 0;
    for (double x : v) ss += (x - r.mean) * (x - r.mean);
    r.sd = std::sqrt(ss / (k - 1.0));
  }
  const double half = 1.96 * r.sd / std::sqrt(k);
  r.ci_low = r.mean - half;
  r.ci_high = r.mean + half;
  return r;
}

}  // namespace gazeeg
