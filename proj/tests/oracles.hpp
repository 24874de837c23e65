#pragma once

// Independent reference computations shared by the unit tests and the
// acceptance runner.

#include "gazeeg/eeg.hpp"
#include "gazeeg/features.hpp"
#include "gazeeg/learn.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

namespace oracle {

using gazeeg::Epoch;
using gazeeg::Label;
using gazeeg::Matrix;
using gazeeg::Vector;

inline Vector white_noise(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  Vector x(n);
  for (Eigen::Index i = 0; i < n; ++i) x(i) = nd(rng);
  return x;
}

inline Vector random_walk(Eigen::Index n, std::uint64_t seed) {
  Vector w = white_noise(n, seed);
  for (Eigen::Index i = 1; i < n; ++i) w(i) += w(i - 1);
  return w;
}

inline Vector sine(Eigen::Index n, double f_hz, double fs_hz, double phase = 0.0) {
  Vector x(n);
  for (Eigen::Index i = 0; i < n; ++i) x(i) = std::sin(2.0 * M_PI * f_hz * static_cast<double>(i) / fs_hz + phase);
  return x;
}

/// log10(N) / (log10(N) + log10(N / (N + 0.4 Nδ))) written out directly.
inline double petrosian(const Vector& x) {
  const auto n = static_cast<double>(x.size());
  int changes = 0;
  for (Eigen::Index i = 2; i < x.size(); ++i) {
    const double d0 = x(i - 1) - x(i - 2);
    const double d1 = x(i) - x(i - 1);
    if (d0 * d1 < 0) ++changes;
  }
  return std::log10(n) / (std::log10(n) + std::log10(n / (n + 0.4 * changes)));
}

/// Two-class epochs with channel-white noise; class-1 epochs carry an extra
/// source of standard deviation `extra_sd` along `direction`.
inline std::vector<Epoch> csp_toy(int per_class, const Vector& direction, Eigen::Index n_samples,
                                  double extra_sd, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  const Eigen::Index nch = direction.size();
  std::vector<Epoch> out;
  for (int cls = 0; cls < 2; ++cls) {
    for (int k = 0; k < per_class; ++k) {
      Epoch e;
      e.data.resize(nch, n_samples);
      for (Eigen::Index c = 0; c < nch; ++c) {
        for (Eigen::Index s = 0; s < n_samples; ++s) e.data(c, s) = nd(rng);
      }
      if (cls == 1) {
        for (Eigen::Index s = 0; s < n_samples; ++s) e.data.col(s) += extra_sd * nd(rng) * direction;
      }
      e.label = cls == 1 ? Label::Target : Label::NonTarget;
      out.push_back(std::move(e));
    }
  }
  return out;
}

struct BruteCsp {
  Matrix filters;  ///< columns, ordered by max(λ, 1 − λ)
  Vector lambda;
};

/// Class-mean trace-normalized covariances, whitening by the composite
/// covariance and an ordinary symmetric eigensolve.
inline BruteCsp brute_force_csp(const std::vector<Epoch>& epochs) {
  const Eigen::Index nch = epochs.front().n_channels();
  Matrix c[2] = {Matrix::Zero(nch, nch), Matrix::Zero(nch, nch)};
  int cnt[2] = {0, 0};
  for (const auto& e : epochs) {
    const Matrix xc = e.data.colwise() - e.data.rowwise().mean();
    const Matrix cov = xc * xc.transpose();
    const int k = e.label == Label::Target ? 1 : 0;
    c[k] += cov / cov.trace();
    ++cnt[k];
  }
  c[0] /= cnt[0];
  c[1] /= cnt[1];
  Eigen::SelfAdjointEigenSolver<Matrix> comp(c[0] + c[1]);
  const Matrix P = comp.eigenvectors() * comp.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() *
                   comp.eigenvectors().transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> es(P * c[1] * P);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(nch));
  for (Eigen::Index i = 0; i < nch; ++i) order[static_cast<std::size_t>(i)] = i;
  const Vector l = es.eigenvalues();
  std::sort(order.begin(), order.end(), [&](auto a, auto b) {
    return std::max(l(a), 1 - l(a)) > std::max(l(b), 1 - l(b));
  });
  BruteCsp out;
  out.filters.resize(nch, nch);
  out.lambda.resize(nch);
  for (Eigen::Index j = 0; j < nch; ++j) {
    out.filters.col(j) = P * es.eigenvectors().col(order[static_cast<std::size_t>(j)]);
    out.lambda(j) = l(order[static_cast<std::size_t>(j)]);
  }
  return out;
}

inline double abs_cosine(const Vector& a, const Vector& b) {
  return std::abs(a.dot(b)) / (a.norm() * b.norm());
}

struct DualSolution {
  Vector alpha;
  double b = 0.0;
  bool found = false;
};

/// Exhaustive solve of the soft-margin dual for tiny problems: every
/// assignment of each multiplier to {0, free, C} is tried, the free block is
/// solved from the KKT equalities, and the feasible candidate with the best
/// objective wins. The bias follows the usual convention: mean over free
/// multipliers, else the midpoint of the feasible interval.
inline DualSolution enumerate_dual(const Matrix& K, const Vector& y, double C) {
  const Eigen::Index n = y.size();
  const Matrix Q = y.asDiagonal() * K * y.asDiagonal();
  DualSolution best;
  double best_obj = -std::numeric_limits<double>::infinity();
  long total = 1;
  for (Eigen::Index i = 0; i < n; ++i) total *= 3;
  for (long code = 0; code < total; ++code) {
    std::vector<int> state(static_cast<std::size_t>(n));
    long c = code;
    for (Eigen::Index i = 0; i < n; ++i) {
      state[static_cast<std::size_t>(i)] = static_cast<int>(c % 3);
      c /= 3;
    }
    Vector alpha = Vector::Zero(n);
    std::vector<Eigen::Index> free;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (state[static_cast<std::size_t>(i)] == 2) alpha(i) = C;
      if (state[static_cast<std::size_t>(i)] == 1) free.push_back(i);
    }
    if (!free.empty()) {
      const auto f = static_cast<Eigen::Index>(free.size());
      Matrix A = Matrix::Zero(f + 1, f + 1);
      Vector rhs(f + 1);
      for (Eigen::Index a = 0; a < f; ++a) {
        double fixed = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) fixed += Q(free[a], j) * alpha(j);
        for (Eigen::Index b2 = 0; b2 < f; ++b2) A(a, b2) = Q(free[a], free[b2]);
        A(a, f) = y(free[a]);
        A(f, a) = y(free[a]);
        rhs(a) = 1.0 - fixed;
      }
      rhs(f) = -y.dot(alpha);
      const Eigen::FullPivLU<Matrix> lu(A);
      if (!lu.isInvertible()) continue;
      const Vector sol = lu.solve(rhs);
      for (Eigen::Index a = 0; a < f; ++a) alpha(free[a]) = sol(a);
    }
    bool feasible = std::abs(y.dot(alpha)) < 1e-9;
    for (Eigen::Index i = 0; i < n && feasible; ++i) feasible = alpha(i) > -1e-12 && alpha(i) < C + 1e-12;
    if (!feasible) continue;
    const double obj = alpha.sum() - 0.5 * alpha.dot(Q * alpha);
    if (obj > best_obj + 1e-12) {
      best_obj = obj;
      best.alpha = alpha.cwiseMax(0.0).cwiseMin(C);
      best.found = true;
    }
  }
  if (!best.found) return best;

  const Vector f_nob = K * best.alpha.cwiseProduct(y);
  const double eps = 1e-9;
  double sum = 0.0, lo = -std::numeric_limits<double>::infinity(), hi = std::numeric_limits<double>::infinity();
  int n_free = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double target = y(i) - f_nob(i);  // b making y_i f(x_i) = 1
    if (best.alpha(i) > eps && best.alpha(i) < C - eps) {
      sum += target;
      ++n_free;
    } else if (best.alpha(i) <= eps) {
      // y_i f >= 1
      if (y(i) > 0) lo = std::max(lo, target); else hi = std::min(hi, target);
    } else {
      if (y(i) > 0) hi = std::min(hi, target); else lo = std::max(lo, target);
    }
  }
  best.b = n_free > 0 ? sum / n_free : 0.5 * (lo + hi);
  return best;
}

/// AR(2) process x_t = a1 x_{t-1} + a2 x_{t-2} + e_t.
inline Vector ar2(Eigen::Index n, double a1, double a2, std::uint64_t seed) {
  const Vector e = white_noise(n, seed);
  Vector x = Vector::Zero(n);
  for (Eigen::Index t = 0; t < n; ++t) {
    x(t) = e(t);
    if (t >= 1) x(t) += a1 * x(t - 1);
    if (t >= 2) x(t) += a2 * x(t - 2);
  }
  return x;
}

}  // namespace oracle
