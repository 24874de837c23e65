#include "gazeeg/filter.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace gazeeg {

using cplx = std::complex<double>;

namespace {

struct Zpk {
  std::vector<cplx> zeros;
  std::vector<cplx> poles;
};

void check_cutoff(double f, double fs) {
  if (!(fs > 0.0) || !(f > 0.0) || !(f < fs / 2.0)) {
    throw Error(ErrorCode::FilterDesignError,
                "cutoff " + std::to_string(f) + " Hz outside (0, " + std::to_string(fs / 2.0) +
                    ") Hz");
  }
}

std::vector<cplx> prototype_poles(int order) {
  if (order < 1) throw Error(ErrorCode::FilterDesignError, "filter order must be >= 1");
  std::vector<cplx> p;
  for (int k = 0; k < order; ++k) {
    const double theta = std::numbers::pi * (2.0 * k + order + 1) / (2.0 * order);
    p.push_back(std::polar(1.0, theta));
  }
  return p;
}

double prewarp(double f, double fs) { return 2.0 * fs * std::tan(std::numbers::pi * f / fs); }

cplx bilinear(cplx s, double fs) { return (2.0 * fs + s) / (2.0 * fs - s); }

// Groups roots into conjugate pairs (complex) or real pairs; returns
// (c1, c2) per section where the section polynomial is 1 + c1 z^-1 + c2 z^-2.
std::vector<std::pair<double, double>> pair_roots(std::vector<cplx> roots) {
  constexpr double tol = 1e-9;
  std::vector<std::pair<double, double>> out;
  std::vector<double> reals;
  std::vector<cplx> upper;
  for (const auto& r : roots) {
    if (std::abs(r.imag()) <= tol * std::max(1.0, std::abs(r))) {
      reals.push_back(r.real());
    } else if (r.imag() > 0) {
      upper.push_back(r);
    }
  }
  for (const auto& r : upper) out.emplace_back(-2.0 * r.real(), std::norm(r));
  std::sort(reals.begin(), reals.end());
  for (std::size_t i = 0; i + 1 < reals.size(); i += 2) {
    out.emplace_back(-(reals[i] + reals[i + 1]), reals[i] * reals[i + 1]);
  }
  if (reals.size() % 2) out.emplace_back(-reals.back(), 0.0);
  return out;
}

SosFilter to_sos(const Zpk& z, double ref_hz, double fs) {
  auto zs = pair_roots(z.zeros);
  auto ps = pair_roots(z.poles);
  SosFilter sos;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    Biquad b;
    b.a1 = ps[i].first;
    b.a2 = ps[i].second;
    if (i < zs.size()) {
      b.b0 = 1.0;
      b.b1 = zs[i].first;
      b.b2 = zs[i].second;
    }
    sos.push_back(b);
  }
  const double g = std::abs(frequency_response(sos, ref_hz, fs));
  if (!(g > 0.0) || !std::isfinite(g)) {
    throw Error(ErrorCode::FilterDesignError, "degenerate filter gain");
  }
  sos.front().b0 /= g;
  sos.front().b1 /= g;
  sos.front().b2 /= g;
  return sos;
}

}  // namespace

std::complex<double> frequency_response(const SosFilter& sos, double f_hz, double fs_hz) {
  const cplx zinv = std::polar(1.0, -2.0 * std::numbers::pi * f_hz / fs_hz);
  cplx h = 1.0;
  for (const auto& s : sos) {
    h *= (s.b0 + s.b1 * zinv + s.b2 * zinv * zinv) / (1.0 + s.a1 * zinv + s.a2 * zinv * zinv);
  }
  return h;
}

SosFilter butter_lowpass(int order, double cutoff_hz, double fs_hz) {
  check_cutoff(cutoff_hz, fs_hz);
  const double wc = prewarp(cutoff_hz, fs_hz);
  Zpk d;
  for (const auto& p : prototype_poles(order)) {
    d.poles.push_back(bilinear(wc * p, fs_hz));
    d.zeros.push_back(-1.0);
  }
  return to_sos(d, 0.0, fs_hz);
}

SosFilter butter_highpass(int order, double cutoff_hz, double fs_hz) {
  check_cutoff(cutoff_hz, fs_hz);
  const double wc = prewarp(cutoff_hz, fs_hz);
  Zpk d;
  for (const auto& p : prototype_poles(order)) {
    d.poles.push_back(bilinear(wc / p, fs_hz));
    d.zeros.push_back(1.0);
  }
  return to_sos(d, fs_hz / 2.0, fs_hz);
}

SosFilter butter_bandstop(int order, double low_hz, double high_hz, double fs_hz) {
  check_cutoff(low_hz, fs_hz);
  check_cutoff(high_hz, fs_hz);
  if (!(low_hz < high_hz)) throw Error(ErrorCode::FilterDesignError, "band edges inverted");
  const double w1 = prewarp(low_hz, fs_hz);
  const double w2 = prewarp(high_hz, fs_hz);
  const double w0 = std::sqrt(w1 * w2);
  const double bw = w2 - w1;
  Zpk d;
  const cplx zero = bilinear(cplx(0.0, w0), fs_hz);
  for (const auto& p : prototype_poles(order)) {
    const cplx half = bw / (2.0 * p);
    const cplx root = std::sqrt(half * half - w0 * w0);
    d.poles.push_back(bilinear(half + root, fs_hz));
    d.poles.push_back(bilinear(half - root, fs_hz));
    d.zeros.push_back(zero);
    d.zeros.push_back(std::conj(zero));
  }
  return to_sos(d, 0.0, fs_hz);
}

namespace {

// Steady-state section states for a unit step at the cascade input.
std::vector<std::array<double, 2>> steady_state(const SosFilter& sos) {
  std::vector<std::array<double, 2>> zi(sos.size());
  double u = 1.0;
  for (std::size_t i = 0; i < sos.size(); ++i) {
    const auto& s = sos[i];
    const double gain = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
    const double y = gain * u;
    zi[i] = {y - s.b0 * u, s.b2 * u - s.a2 * y};
    u = y;
  }
  return zi;
}

void run_cascade(const SosFilter& sos, std::vector<std::array<double, 2>> z, double* data,
                 Eigen::Index n) {
  for (std::size_t k = 0; k < sos.size(); ++k) {
    const auto& s = sos[k];
    double z1 = z[k][0], z2 = z[k][1];
    for (Eigen::Index i = 0; i < n; ++i) {
      const double x = data[i];
      const double y = s.b0 * x + z1;
      z1 = s.b1 * x - s.a1 * y + z2;
      z2 = s.b2 * x - s.a2 * y;
      data[i] = y;
    }
  }
}

}  // namespace

Vector sosfilt(const SosFilter& sos, const Eigen::Ref<const Vector>& x) {
  Vector y = x;
  run_cascade(sos, std::vector<std::array<double, 2>>(sos.size(), {0.0, 0.0}), y.data(), y.size());
  return y;
}

Vector sosfiltfilt(const SosFilter& sos, const Eigen::Ref<const Vector>& x) {
  const Eigen::Index n = x.size();
  if (n == 0) return Vector();
  const Eigen::Index pad =
      std::min<Eigen::Index>(n - 1, 3 * (2 * static_cast<Eigen::Index>(sos.size()) + 1));
  Vector ext(n + 2 * pad);
  for (Eigen::Index i = 0; i < pad; ++i) ext(i) = 2.0 * x(0) - x(pad - i);
  ext.segment(pad, n) = x;
  for (Eigen::Index i = 0; i < pad; ++i) ext(pad + n + i) = 2.0 * x(n - 1) - x(n - 2 - i);

  const auto zi = steady_state(sos);
  auto scaled = [&](double v) {
    auto z = zi;
    for (auto& s : z) {
      s[0] *= v;
      s[1] *= v;
    }
    return z;
  };
  run_cascade(sos, scaled(ext(0)), ext.data(), ext.size());
  ext.reverseInPlace();
  run_cascade(sos, scaled(ext(0)), ext.data(), ext.size());
  ext.reverseInPlace();
  return ext.segment(pad, n);
}

}  // namespace gazeeg
