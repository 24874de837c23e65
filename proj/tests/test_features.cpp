#include "gazeeg/features.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>

using namespace gazeeg;

TEST_CASE("petrosian of a monotone ramp is exactly one") {
  Vector ramp = Vector::LinSpaced(500, 0.0, 10.0);
  CHECK(petrosian_fd(ramp) == 1.0);
}

TEST_CASE("petrosian of an alternating signal follows the formula") {
  Vector x(1000);
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = i % 2 ? -1.0 : 1.0;
  const double expected = oracle::petrosian(x);
  CHECK(petrosian_fd(x) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(1.05111).epsilon(1e-5));
}

TEST_CASE("hjorth mobility of a sampled sine") {
  const Vector x = oracle::sine(5000, 10.0, 500.0);
  const double expected = 2.0 * std::sin(M_PI / 50.0);
  const auto h = hjorth(x);
  CHECK(std::abs(h.mobility - expected) / expected < 0.01);
  CHECK(h.complexity == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("hjorth of a constant signal is degenerate") {
  const Vector x = Vector::Constant(100, 3.0);
  try {
    hjorth(x);
    FAIL("expected DegenerateSignal");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateSignal);
  }
}

TEST_CASE("a 10 Hz tone puts its band mass in alpha") {
  const auto bp = band_power(oracle::sine(1000, 10.0, 500.0), 500.0);
  CHECK(bp[2] >= 0.95);
  double total = 0;
  for (double v : bp) total += v;
  CHECK(total == doctest::Approx(1.0));
}

TEST_CASE("band shares of a signal without in-band mass are uniform") {
  const auto bp = band_power(Vector::Constant(500, 2.0), 500.0);
  for (double v : bp) CHECK(v == doctest::Approx(0.2));
}

TEST_CASE("higuchi dimension of white noise is near two") {
  CHECK(higuchi_fd(oracle::white_noise(5000, 3), 8) == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("higuchi dimension of a smooth line is near one") {
  CHECK(higuchi_fd(Vector::LinSpaced(1000, 0.0, 1.0), 8) == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("dfa exponent separates white noise from a random walk") {
  const auto sizes = dfa_window_sizes(5000);
  CHECK(sizes.size() >= 6);
  CHECK(std::is_sorted(sizes.begin(), sizes.end()));
  CHECK(sizes.front() == 4);
  CHECK(sizes.back() <= 1250);
  CHECK(dfa_alpha(oracle::white_noise(5000, 5), sizes) == doctest::Approx(0.5).epsilon(0.2));
  CHECK(dfa_alpha(oracle::random_walk(5000, 5), sizes) == doctest::Approx(1.5).epsilon(0.1));
}

TEST_CASE("moments of a known sample") {
  Vector x(4);
  x << 1, 2, 3, 10;
  const auto m = moments_minmaxstd(x);
  const double mean = 4.0;
  double m2 = 0, m3 = 0, m4 = 0;
  for (double v : {1.0, 2.0, 3.0, 10.0}) {
    m2 += std::pow(v - mean, 2) / 4;
    m3 += std::pow(v - mean, 3) / 4;
    m4 += std::pow(v - mean, 4) / 4;
  }
  CHECK(m.min == 1.0);
  CHECK(m.max == 10.0);
  CHECK(m.std == doctest::Approx(std::sqrt(m2)));
  CHECK(m.skewness == doctest::Approx(m3 / std::pow(m2, 1.5)));
  CHECK(m.kurtosis == doctest::Approx(m4 / (m2 * m2) - 3.0));
}

TEST_CASE("short inputs are rejected") {
  Vector x(2);
  x << 1, 2;
  CHECK_THROWS_AS(petrosian_fd(x), Error);
  CHECK_THROWS_AS(higuchi_fd(oracle::white_noise(10, 1), 8), Error);
  CHECK_THROWS_AS(moments_minmaxstd(Vector()), Error);
}

TEST_CASE("pyeeg feature vector layout") {
  Epoch e;
  e.data.resize(2, 200);
  e.data.row(0) = oracle::white_noise(200, 1).transpose();
  e.data.row(1) = oracle::sine(200, 10.0, 500.0).transpose();
  const std::vector<std::string> ch = {"Cz", "Pz"};
  const auto fv = pyeeg_features(e, ch, 500.0);
  CHECK(fv.values.size() == 30);
  CHECK(fv.schema.size() == 30);
  CHECK(fv.schema[0] == "Cz.delta_psi");
  CHECK(fv.schema[15 + 5] == "Pz.pfd");
  CHECK(fv.values.allFinite());

  e.data = e.data.leftCols(10).eval();
  CHECK_THROWS_AS(pyeeg_features(e, ch, 500.0), Error);
}

TEST_CASE("csp leading filter agrees with a brute-force eigensolve") {
  Vector dir(6);
  dir << 1, 0.5, -0.3, 0, 0.2, 0;
  dir.normalize();
  const auto epochs = oracle::csp_toy(150, dir, 120, 2.0, 42);
  const auto m = csp_fit(epochs, 6);
  const auto ref = oracle::brute_force_csp(epochs);
  CHECK(oracle::abs_cosine(m.filters.row(0).transpose(), ref.filters.col(0)) >= 0.95);
  CHECK(m.eigenvalues(0) == doctest::Approx(ref.lambda(0)).epsilon(1e-6));
  for (Eigen::Index j = 0; j < 6; ++j) {
    CHECK(m.eigenvalues(j) > 0.0);
    CHECK(m.eigenvalues(j) < 1.0);
  }
}

TEST_CASE("csp on identical class distributions stays near one half") {
  Vector dir = Vector::Zero(8);
  dir(0) = 1.0;
  const auto epochs = oracle::csp_toy(300, dir, 200, 0.0, 7);
  const auto m = csp_fit(epochs, 8);
  for (Eigen::Index j = 0; j < 8; ++j) {
    CHECK(m.eigenvalues(j) >= 0.45);
    CHECK(m.eigenvalues(j) <= 0.55);
  }
}

TEST_CASE("csp filters ignore epoch order and global scale") {
  Vector dir(5);
  dir << 0.2, 1, 0, -0.5, 0.1;
  auto epochs = oracle::csp_toy(80, dir, 100, 1.5, 9);
  const auto a = csp_fit(epochs, 5);
  std::mt19937_64 rng(1);
  std::shuffle(epochs.begin(), epochs.end(), rng);
  for (auto& e : epochs) e.data *= 37.0;
  const auto b = csp_fit(epochs, 5);
  for (Eigen::Index j = 0; j < 5; ++j) {
    CHECK(oracle::abs_cosine(a.filters.row(j).transpose(), b.filters.row(j).transpose()) ==
          doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("csp needs both classes") {
  Vector dir = Vector::Ones(3);
  auto epochs = oracle::csp_toy(10, dir, 20, 1.0, 1);
  epochs.resize(10);
  try {
    csp_fit(epochs, 3);
    FAIL("expected OneClassOnly");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::OneClassOnly);
  }
}

TEST_CASE("csp transform is a log-variance") {
  Vector dir = Vector::Ones(3);
  const auto epochs = oracle::csp_toy(20, dir, 50, 1.0, 3);
  const auto m = csp_fit(epochs, 2);
  const auto fv = csp_transform(m, epochs.front());
  const RowVector y = m.filters.row(0) * epochs.front().data;
  const double var = (y.array() - y.mean()).square().mean();
  CHECK(fv.values(0) == doctest::Approx(std::log(var)));
  CHECK(fv.schema[1] == "csp_01");
}

TEST_CASE("srp features are baseline-corrected block averages") {
  Epoch e;
  e.data.resize(1, 500);
  for (Eigen::Index s = 0; s < 500; ++s) e.data(0, s) = s < 10 ? 2.0 : 5.0;
  const std::vector<std::string> ch = {"Pz"};
  const auto fv = srp_features(e, ch, 500.0);
  CHECK(fv.values.size() == 25);
  const double baseline = (10 * 2.0 + 40 * 5.0) / 50;
  CHECK(fv.values(0) == doctest::Approx((10 * 2.0 + 10 * 5.0) / 20 - baseline));
  CHECK(fv.values(24) == doctest::Approx(5.0 - baseline));
  CHECK(fv.schema[1] == "Pz.srp_0040ms");
}

TEST_CASE("gaze feature is the duration") {
  const auto fv = gaze_feature(250.0);
  CHECK(fv.values.size() == 1);
  CHECK(fv.values(0) == 250.0);
}
