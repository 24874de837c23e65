#include "gazeeg/gaze.hpp"
#include "gazeeg/synth.hpp"

#include <doctest.h>

#include <cmath>

using namespace gazeeg;

namespace {

ScreenGeometry screen() {
  ScreenGeometry s;
  s.width_mm = 597.7;
  s.height_mm = 336.2;
  return s;
}

GazeSample sample(double t, double x, double y, bool valid = true) {
  GazeSample g;
  g.t_ms = t;
  g.left = g.right = Eigen::Vector2d(x, y);
  g.left_valid = g.right_valid = valid;
  g.eye_distance_mm = 650.0;
  return g;
}

}  // namespace

TEST_CASE("visual angle matches the screen-plane geometry") {
  const auto s = screen();
  const Eigen::Vector2d a(960, 540), b(1060, 540);
  const double dx_mm = 100 * s.width_mm / 1920;
  const double expected = 180.0 / M_PI * std::atan(dx_mm / 650.0);
  CHECK(visual_angle_deg(a, b, s, 650.0) == doctest::Approx(expected).epsilon(1e-3));
  CHECK(visual_angle_deg(a, a, s, 650.0) == 0.0);
}

TEST_CASE("short gaps are interpolated and long ones kept") {
  std::vector<GazeSample> g;
  for (int i = 0; i < 20; ++i) g.push_back(sample(i * 1000.0 / 60, 0.1 + 0.01 * i, 0.5));
  g[5].left_valid = g[5].right_valid = false;
  for (int i = 10; i < 16; ++i) g[i].left_valid = g[i].right_valid = false;
  const auto f = fill_gaps(g, 75.0);
  CHECK(f[5].left_valid);
  CHECK(f[5].left.x() == doctest::Approx(0.15));
  for (int i = 10; i < 16; ++i) CHECK_FALSE(f[i].left_valid);
}

TEST_CASE("eye selection averages two valid eyes and falls back to one") {
  auto g = sample(0, 0.5, 0.5);
  g.right = Eigen::Vector2d(0.6, 0.5);
  auto h = sample(10, 0.5, 0.5);
  h.left_valid = false;
  h.right = Eigen::Vector2d(0.25, 0.25);
  const std::vector<GazeSample> v = {g, h};
  const auto c = select_eye(v, screen());
  CHECK(c[0].pos_px.x() == doctest::Approx(0.55 * 1920));
  CHECK(c[1].pos_px.x() == doctest::Approx(0.25 * 1920));
  CHECK(c[1].pos_px.y() == doctest::Approx(0.25 * 1080));
}

TEST_CASE("median smoothing removes a single-sample spike") {
  std::vector<CyclopeanSample> v(9);
  for (int i = 0; i < 9; ++i) {
    v[i].t_ms = i;
    v[i].valid = true;
    v[i].pos_px = Eigen::Vector2d(100, 100);
  }
  v[4].pos_px = Eigen::Vector2d(900, 100);
  const auto s = smooth_median(v, 3);
  CHECK(s[4].pos_px.x() == 100.0);
  CHECK_THROWS_AS(smooth_median(v, 4), Error);
}

TEST_CASE("ivt threshold is strict") {
  const std::vector<double> v = {10.0, 30.0, 29.999, std::nan("")};
  const auto c = ivt_classify(v, 30.0);
  CHECK(c[0] == SampleClass::Fixation);
  CHECK(c[1] == SampleClass::Saccade);
  CHECK(c[2] == SampleClass::Fixation);
  CHECK(c[3] == SampleClass::Unclassified);
}

TEST_CASE("close fixations merge with pooled centroids") {
  Fixation a, b, c;
  a.onset_ms = 0;
  a.duration_ms = 100;
  a.centroid_px = {500, 500};
  a.sample_count = 6;
  a.eye_distance_mm = 650;
  b = a;
  b.onset_ms = 150;
  b.centroid_px = {503, 500};
  b.sample_count = 3;
  c = a;
  c.onset_ms = 300;
  c.centroid_px = {900, 500};
  const std::vector<Fixation> v = {a, b, c};
  const auto m = merge_fixations(v, 75.0, 0.5, screen());
  REQUIRE(m.size() == 2);
  CHECK(m[0].onset_ms == 0);
  CHECK(m[0].end_ms() == 250);
  CHECK(m[0].sample_count == 9);
  CHECK(m[0].centroid_px.x() == doctest::Approx(501.0));
}

TEST_CASE("two planted fixations are found") {
  std::vector<GazeSample> g;
  const double dt = 1000.0 / 60;
  for (int i = 0; i < 60; ++i) {
    const double t = i * dt;
    double x = 0.3;
    if (i >= 28 && i < 31) x = 0.3 + 0.4 * (i - 27) / 4.0;
    if (i >= 31) x = 0.7;
    g.push_back(sample(t, x, 0.5));
  }
  const auto ev = detect_fixations(g, IvtParams{}, screen());
  REQUIRE(ev.fixations.size() == 2);
  CHECK(ev.fixations[0].onset_ms == 0.0);
  CHECK(ev.fixations[0].centroid_px.x() == doctest::Approx(0.3 * 1920));
  CHECK(ev.fixations[1].centroid_px.x() == doctest::Approx(0.7 * 1920));
  REQUIRE(ev.saccades.size() == 1);
  CHECK(ev.saccades[0].onset_ms < ev.fixations[1].onset_ms);
}

TEST_CASE("invalid parameters and missing geometry are rejected") {
  IvtParams p;
  p.velocity_threshold_deg_s = 0;
  CHECK_THROWS_AS(p.validate(), Error);
  std::vector<GazeSample> g = {sample(0, 0.5, 0.5), sample(16.7, 0.5, 0.5)};
  try {
    detect_fixations(g, IvtParams{}, ScreenGeometry{});
    FAIL("expected GeometryError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::GeometryError);
  }
}

TEST_CASE("generated fixation samples stay below the velocity threshold") {
  SynthConfig cfg;
  cfg.trials_per_participant = 10;
  cfg.jitter_deg = 0.3;
  const auto p = generate_participant(cfg, 0);
  const auto& rec = p.recording;
  const auto cyc = smooth_median(select_eye(fill_gaps(rec.gaze, 75.0), rec.screen), 3);
  const auto vel = compute_velocity(cyc, rec.screen, 20.0);
  const double dt = 1000.0 / cfg.gaze_rate_hz;
  long inside = 0, slow = 0;
  for (const auto& f : p.truth.fixations) {
    for (std::size_t i = 0; i < cyc.size(); ++i) {
      if (cyc[i].t_ms >= f.onset_ms + 2 * dt && cyc[i].t_ms + 2 * dt < f.offset_ms && !std::isnan(vel[i])) {
        ++inside;
        slow += vel[i] < 30.0 ? 1 : 0;
      }
    }
  }
  REQUIRE(inside > 1000);
  CHECK(static_cast<double>(slow) / inside >= 0.995);
}
