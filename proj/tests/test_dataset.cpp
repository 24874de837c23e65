#include "gazeeg/dataset.hpp"
#include "gazeeg/synth.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>

using namespace gazeeg;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("gazeeg_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Recording small_recording() {
  SynthConfig cfg;
  cfg.n_participants = 1;
  cfg.trials_per_participant = 3;
  return generate_participant(cfg, 0).recording;
}

std::optional<ErrorCode> code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

}  // namespace

TEST_CASE("recording directories are byte-stable across a reload") {
  const auto rec = small_recording();
  const auto a = scratch("rt_a");
  const auto b = scratch("rt_b");
  write_recording(rec, a);
  const auto back = load_recording(a);
  write_recording(back, b);
  for (const char* f : {"meta.json", "gaze.csv", "eeg.csv", "events.jsonl"}) {
    CAPTURE(f);
    CHECK(slurp(a / f) == slurp(b / f));
  }
  CHECK(back.participant_id == rec.participant_id);
  CHECK(back.events.size() == rec.events.size());
  CHECK(back.eeg.channels == rec.eeg.channels);
  CHECK((back.eeg.values - rec.eeg.values).cwiseAbs().maxCoeff() <=
        1e-5 * rec.eeg.values.cwiseAbs().maxCoeff());
}

TEST_CASE("a missing directory is reported as a missing file") {
  CHECK(code_of([] { load_recording("/nonexistent/gazeeg"); }) == ErrorCode::MissingFile);
}

TEST_CASE("clock faults are detected") {
  auto rec = small_recording();
  std::swap(rec.gaze[10].t_ms, rec.gaze[11].t_ms);
  CHECK(code_of([&] { validate_recording(rec); }) == ErrorCode::ClockError);

  rec = small_recording();
  rec.gaze_rate_hz = 120.0;
  CHECK(code_of([&] { validate_recording(rec); }) == ErrorCode::ClockError);
}

TEST_CASE("trial windows must be covered by both streams") {
  auto rec = small_recording();
  rec.events.back().search_end_ms = rec.eeg.t_ms(rec.eeg.t_ms.size() - 1) + 5000.0;
  CHECK(code_of([&] { validate_recording(rec); }) == ErrorCode::CoverageError);
}

TEST_CASE("schema faults are detected") {
  auto rec = small_recording();
  rec.eeg.values(0, 5) = std::nan("");
  CHECK(code_of([&] { validate_recording(rec); }) == ErrorCode::SchemaError);
  rec = small_recording();
  rec.montage.erase("Pz");
  CHECK(code_of([&] { validate_recording(rec); }) == ErrorCode::SchemaError);

  const auto dir = scratch("bad_header");
  write_recording(small_recording(), dir);
  std::ofstream(dir / "gaze.csv") << "t,x\n1,2\n";
  CHECK(code_of([&] { load_recording(dir); }) == ErrorCode::SchemaError);
}

TEST_CASE("slices are half-open in time") {
  Vector t(5);
  t << 0, 2, 4, 6, 8;
  CHECK(frame_range(t, 2.0, 6.0) == std::pair<Eigen::Index, Eigen::Index>{1, 3});
  CHECK(frame_range(t, 1.0, 1.5).first == frame_range(t, 1.0, 1.5).second);
  CHECK(frame_range(t, -5.0, 100.0) == std::pair<Eigen::Index, Eigen::Index>{0, 5});

  EegStream e;
  e.t_ms = t;
  e.values = Matrix::Random(2, 5);
  e.channels = {"a", "b"};
  const auto s = slice_stream(e, 2.0, 6.0);
  CHECK(s.n_frames() == 2);
  CHECK(s.values.col(0) == e.values.col(1));

  std::vector<GazeSample> g(5);
  for (int i = 0; i < 5; ++i) g[i].t_ms = 2.0 * i;
  CHECK(slice_stream(g, 2.0, 6.0).size() == 2);
}
