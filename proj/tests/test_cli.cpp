#include "gazeeg/cli.hpp"
#include "gazeeg/epochs_io.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace gazeeg;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("gazeeg_cli_" + name);
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

int gz(std::vector<std::string> args) {
  args.insert(args.begin(), "gazeeg");
  return run(args);
}

}  // namespace

TEST_CASE("config text round trips through dump and parse") {
  PipelineConfig c;
  c.seed = 99;
  c.synth.trials_per_participant = 17;
  c.eval.folds = 4;
  c.prepare.ivt.velocity_threshold_deg_s = 42.5;
  c.conditions = {"W->W", "D->D"};
  c.features = {FeatureSet::Gaze, FeatureSet::Srp};
  const auto text = dump_config(c);
  const auto back = parse_config(text);
  CHECK(dump_config(back) == text);
  CHECK(get_config_value(back, "seed") == "99");
  CHECK(config_keys().size() > 20);
}

TEST_CASE("bad config input is a config error") {
  PipelineConfig c;
  auto code = [&](const std::string& text) -> std::optional<ErrorCode> {
    try {
      validate_config(parse_config(text));
    } catch (const Error& e) {
      return e.code();
    }
    return std::nullopt;
  };
  CHECK(code("no.such.key = 1") == ErrorCode::ConfigError);
  CHECK(code("seed = banana") == ErrorCode::ConfigError);
  CHECK(code("eval.folds = 1") == ErrorCode::ConfigError);
  CHECK(code("# only a comment\n\nseed = 3\n") == std::nullopt);
}

TEST_CASE("exit codes separate usage errors from runtime errors") {
  CHECK(gz({"--version"}) == 0);
  CHECK(gz({"--bogus"}) == 1);
  CHECK(gz({"gaze", "--in", "/nonexistent/p", "--out", "/tmp/x.csv"}) == 1);
  CHECK(gz({"--set", "nope=1", "synth", "--out", "/tmp/gazeeg_cli_never"}) == 1);
  CHECK(exit_code(ErrorCode::SchemaError) == 1);
  CHECK(exit_code(ErrorCode::NonConvergence) == 2);
  CHECK(exit_code(ErrorCode::IoError) == 2);
}

TEST_CASE("epoch containers round trip and detect truncation") {
  EpochFile f;
  f.channels = {"Cz", "Pz"};
  f.fs_hz = 500.0;
  f.provenance = {{"seed", "4"}};
  for (int i = 0; i < 3; ++i) {
    Epoch e;
    e.data = Matrix::Random(2, 10 + i);
    e.participant_id = "P01";
    e.trial_id = i;
    e.source_index = i;
    e.onset_ms = 100.5 * i;
    e.duration_ms = 20.0 + 2 * i;
    e.label = i == 1 ? Label::Target : Label::NonTarget;
    e.kind = i == 2 ? EpochKind::Saccade : EpochKind::Fixation;
    e.scene_domain = SceneDomain::Desktop;
    f.epochs.push_back(e);
  }
  const auto dir = scratch("epochs");
  write_epochs(f, dir / "e.bin");
  const auto back = read_epochs(dir / "e.bin");
  CHECK(back.channels == f.channels);
  CHECK(back.provenance == f.provenance);
  REQUIRE(back.epochs.size() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(back.epochs[i].data == f.epochs[i].data);
    CHECK(back.epochs[i].label == f.epochs[i].label);
    CHECK(back.epochs[i].kind == f.epochs[i].kind);
    CHECK(back.epochs[i].onset_ms == f.epochs[i].onset_ms);
    CHECK(back.epochs[i].scene_domain == SceneDomain::Desktop);
  }

  const auto bytes = slurp(dir / "e.bin");
  std::ofstream(dir / "short.bin", std::ios::binary) << bytes.substr(0, bytes.size() - 8);
  try {
    read_epochs(dir / "short.bin");
    FAIL("expected IoError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IoError);
  }
  std::ofstream(dir / "junk.bin", std::ios::binary) << "NOTEPOCHxxxxxxxxxxxx";
  CHECK_THROWS_AS(read_epochs(dir / "junk.bin"), Error);
  CHECK_THROWS_AS(read_epochs(dir / "absent.bin"), Error);
}

TEST_CASE("feature tables round trip through csv") {
  FeatureTable t;
  t.X.resize(2, 2);
  t.X << 0.1, -3e-7, 12345.678, 1.0 / 3.0;
  t.schema = {"a", "b"};
  t.labels = {Label::Target, Label::NonTarget};
  t.keys = {{"P01", 3, SceneDomain::Workshop}, {"P02", 4, SceneDomain::Desktop}};
  const auto text = features_csv(t);
  CHECK(text.rfind("participant_id,trial_id,scene_domain,label,a,b\n", 0) == 0);
  const auto back = read_features_csv(text);
  CHECK(back.X == t.X);
  CHECK(back.labels == t.labels);
  CHECK(back.schema == t.schema);
  CHECK(features_csv(back) == text);
}

TEST_CASE("stage commands chain from recordings to a model") {
  const auto dir = scratch("chain");
  const std::vector<std::string> sets = {"--set", "synth.n_participants=1", "--set",
                                         "synth.trials_per_participant=12", "--seed", "5"};
  auto with = [&](std::vector<std::string> tail) {
    auto a = sets;
    a.insert(a.end(), tail.begin(), tail.end());
    return gz(a);
  };
  REQUIRE(with({"synth", "--out", (dir / "data").string()}) == 0);
  const auto parts = participant_dirs({dir / "data"});
  REQUIRE(parts.size() == 1);
  CHECK(fs::exists(dir / "data" / "effective_config.txt"));

  REQUIRE(with({"gaze", "--in", parts[0].string(), "--out", (dir / "gaze" / "fixations.csv").string()}) == 0);
  const auto fix = slurp(dir / "gaze" / "fixations.csv");
  CHECK(fix.rfind("kind,onset_ms,offset_ms,duration_ms,x_px,y_px,sample_count,trial_id\n", 0) == 0);
  CHECK(fs::exists(dir / "gaze" / "effective_config.txt"));

  REQUIRE(with({"eeg", "--in", parts[0].string(), "--out", (dir / "eeg" / "epochs.bin").string()}) == 0);
  const auto ef = read_epochs(dir / "eeg" / "epochs.bin");
  CHECK(ef.channels.size() == 20);
  CHECK(ef.provenance.count("config") == 1);
  CHECK_FALSE(ef.epochs.empty());

  REQUIRE(with({"features", "--epochs", (dir / "eeg" / "epochs.bin").string(), "--set", "gaze", "--out",
                (dir / "feat" / "features.csv").string()}) == 0);
  const auto table = read_features_csv(slurp(dir / "feat" / "features.csv"));
  CHECK(table.schema == std::vector<std::string>{"fix_dur_ms"});

  REQUIRE(with({"train", "--features", (dir / "feat" / "features.csv").string(), "--out",
                (dir / "model" / "model.json").string()}) == 0);
  const auto model = model_from_json(slurp(dir / "model" / "model.json"));
  CHECK(model.schema == table.schema);
  CHECK(fs::exists(dir / "model" / "effective_config.txt"));

  CHECK(with({"features", "--epochs", (dir / "eeg" / "epochs.bin").string(), "--set", "nonsense", "--out",
              (dir / "feat" / "x.csv").string()}) == 1);
}
