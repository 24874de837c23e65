#include "gazeeg/cli.hpp"

#include "gazeeg/epochs_io.hpp"
#include "gazeeg/parallel.hpp"
#include "text_io.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <iostream>
#include <numeric>

namespace gazeeg {

namespace fs = std::filesystem;

namespace {

constexpr const char* kProvenanceFile = "effective_config.txt";

using Clock = std::chrono::steady_clock;

void log_stage(const char* stage, Clock::time_point t0, const std::string& extra = {}) {
  const double s = std::chrono::duration<double>(Clock::now() - t0).count();
  std::fprintf(stderr, "gazeeg stage=%s elapsed_s=%.3f%s%s\n", stage, s, extra.empty() ? "" : " ",
               extra.c_str());
}

fs::path dir_of(const fs::path& file) {
  return file.has_parent_path() ? file.parent_path() : fs::path(".");
}

void write_provenance(const fs::path& dir, const PipelineConfig& cfg) {
  fs::create_directories(dir);
  detail::write_file(dir / kProvenanceFile, dump_config(cfg));
}

std::string num(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string fixations_csv(const GazeEvents& ev) {
  struct Row {
    double onset;
    std::string text;
  };
  std::vector<Row> rows;
  for (const auto& f : ev.fixations) {
    rows.push_back({f.onset_ms, "fixation," + detail::fmt_fixed(f.onset_ms, 3) + "," +
                                    detail::fmt_fixed(f.end_ms(), 3) + "," +
                                    detail::fmt_fixed(f.duration_ms, 3) + "," +
                                    detail::fmt_fixed(f.centroid_px.x(), 3) + "," +
                                    detail::fmt_fixed(f.centroid_px.y(), 3) + "," +
                                    std::to_string(f.sample_count) + "," + std::to_string(f.trial_id)});
  }
  for (const auto& s : ev.saccades) {
    rows.push_back({s.onset_ms, "saccade," + detail::fmt_fixed(s.onset_ms, 3) + "," +
                                    detail::fmt_fixed(s.offset_ms, 3) + "," +
                                    detail::fmt_fixed(s.offset_ms - s.onset_ms, 3) + ",,,," +
                                    std::to_string(s.trial_id)});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.onset < b.onset; });
  std::string out = "kind,onset_ms,offset_ms,duration_ms,x_px,y_px,sample_count,trial_id\n";
  for (const auto& r : rows) out += r.text + "\n";
  return out;
}

std::vector<Recording> load_all(const std::vector<fs::path>& dirs, int jobs) {
  std::vector<Recording> recs(dirs.size());
  parallel_for(dirs.size(), jobs, [&](std::size_t i) { recs[i] = load_recording(dirs[i]); });
  return recs;
}

std::vector<EvalRow> evaluate(const PipelineConfig& cfg, const std::vector<fs::path>& dirs,
                              const fs::path& out) {
  auto t0 = Clock::now();
  const auto recs = load_all(dirs, cfg.jobs);
  log_stage("load", t0, "participants=" + std::to_string(recs.size()));

  t0 = Clock::now();
  const auto data = prepare_dataset(recs, cfg.prepare, cfg.jobs);
  log_stage("prepare", t0, "rows=" + std::to_string(data.samples.size()));

  std::vector<DomainCondition> conds;
  for (const auto& n : cfg.conditions) conds.push_back(condition_by_name(n));
  t0 = Clock::now();
  const auto rows = run_all(data, conds, cfg.features, cfg.seed, cfg.eval, cfg.jobs);
  log_stage("eval", t0, "report_rows=" + std::to_string(rows.size()));

  t0 = Clock::now();
  write_report(rows, out, cfg.report);
  write_provenance(out, cfg);
  log_stage("report", t0);
  return rows;
}

struct Options {
  std::string config;
  std::vector<std::string> overrides;
  std::uint64_t seed = 0;
  int jobs = 0;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* jobs_opt = nullptr;
};

PipelineConfig effective_config(const Options& o, const std::string& file) {
  PipelineConfig cfg;
  if (!file.empty()) cfg = load_config(file);
  for (const auto& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::ConfigError, "--set expects key=value, got '" + kv + "'");
    set_config_value(cfg, std::string(detail::trim(std::string_view(kv).substr(0, eq))), kv.substr(eq + 1));
  }
  if (o.seed_opt->count() > 0) cfg.seed = o.seed;
  if (o.jobs_opt->count() > 0) cfg.jobs = o.jobs;
  validate_config(cfg);
  return cfg;
}

}  // namespace

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingFile:
    case ErrorCode::SchemaError:
    case ErrorCode::ClockError:
    case ErrorCode::CoverageError:
    case ErrorCode::ConfigError:
    case ErrorCode::InvalidArgument:
    case ErrorCode::SchemaMismatch:
    case ErrorCode::DuplicateFeatureName:
      return 1;
    default:
      return 2;
  }
}

std::string features_csv(const FeatureTable& table) {
  std::string out = "participant_id,trial_id,scene_domain,label";
  for (const auto& s : table.schema) out += "," + s;
  out += "\n";
  for (Eigen::Index r = 0; r < table.rows(); ++r) {
    const auto& k = table.keys[static_cast<std::size_t>(r)];
    out += k.participant_id + "," + std::to_string(k.trial_id) + "," + std::string(to_string(k.scene_domain)) +
           "," + std::string(to_string(table.labels[static_cast<std::size_t>(r)]));
    for (Eigen::Index c = 0; c < table.X.cols(); ++c) out += "," + num(table.X(r, c));
    out += "\n";
  }
  return out;
}

FeatureTable read_features_csv(const std::string& text) {
  const auto lines = detail::lines(text);
  if (lines.empty()) throw Error(ErrorCode::SchemaError, "features.csv: empty");
  const auto head = detail::split(lines.front());
  if (head.size() < 5 || head[0] != "participant_id" || head[1] != "trial_id" || head[2] != "scene_domain" ||
      head[3] != "label") {
    throw Error(ErrorCode::SchemaError, "features.csv: unexpected header");
  }
  FeatureTable t;
  for (std::size_t i = 4; i < head.size(); ++i) t.schema.emplace_back(detail::trim(head[i]));
  std::vector<std::vector<double>> values;
  for (std::size_t l = 1; l < lines.size(); ++l) {
    if (detail::trim(lines[l]).empty()) continue;
    const auto f = detail::split(lines[l]);
    if (f.size() != head.size()) {
      throw Error(ErrorCode::SchemaError, "features.csv line " + std::to_string(l + 1) + ": wrong field count");
    }
    GroupKeys k;
    k.participant_id = std::string(detail::trim(f[0]));
    k.trial_id = static_cast<int>(detail::parse_int(f[1], "features.csv trial_id"));
    k.scene_domain = domain_from_string(detail::trim(f[2]));
    t.labels.push_back(label_from_string(detail::trim(f[3])));
    t.keys.push_back(k);
    std::vector<double> row;
    for (std::size_t i = 4; i < f.size(); ++i) row.push_back(detail::parse_double(f[i], "features.csv"));
    values.push_back(std::move(row));
  }
  t.X.resize(static_cast<Eigen::Index>(values.size()), static_cast<Eigen::Index>(t.schema.size()));
  for (std::size_t r = 0; r < values.size(); ++r) {
    for (std::size_t c = 0; c < values[r].size(); ++c) {
      t.X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = values[r][c];
    }
  }
  return t;
}

std::vector<fs::path> participant_dirs(const std::vector<fs::path>& paths) {
  std::vector<fs::path> out;
  for (const auto& p : paths) {
    if (!fs::is_directory(p)) throw Error(ErrorCode::MissingFile, p.string() + ": not a directory");
    if (fs::exists(p / "meta.json")) {
      out.push_back(p);
      continue;
    }
    std::vector<fs::path> sub;
    for (const auto& e : fs::directory_iterator(p)) {
      if (e.is_directory() && fs::exists(e.path() / "meta.json")) sub.push_back(e.path());
    }
    std::sort(sub.begin(), sub.end());
    out.insert(out.end(), sub.begin(), sub.end());
  }
  if (out.empty()) throw Error(ErrorCode::MissingFile, "no participant directories found");
  return out;
}

std::vector<EvalRow> run_pipeline(const PipelineConfig& cfg, const fs::path& out) {
  write_provenance(out, cfg);
  const auto t0 = Clock::now();
  const auto dirs = generate(cfg.synth_config(), out / "data", cfg.jobs);
  write_provenance(out / "data", cfg);
  log_stage("synth", t0, "participants=" + std::to_string(dirs.size()));
  return evaluate(cfg, dirs, out / "report");
}

int run(const std::vector<std::string>& args) {
  std::vector<char*> argv;
  std::vector<std::string> copy = args;
  for (auto& a : copy) argv.push_back(a.data());
  return run(static_cast<int>(argv.size()), argv.data());
}

int run(int argc, char** argv) {
  CLI::App app{"Classifies target vs. non-target fixations from eye tracking and EEG.", "gazeeg"};
  app.set_version_flag("--version", std::string(GAZEEG_VERSION));
  app.require_subcommand(1);
  app.fallthrough();

  Options o;
  app.add_option("--config", o.config, "Configuration file (key = value lines)");
  app.add_option("--set", o.overrides, "Override one config key: key=value (repeatable)");
  o.seed_opt = app.add_option("--seed", o.seed, "Master seed");
  o.jobs_opt = app.add_option("--jobs", o.jobs, "Worker threads (0 = all cores)");

  std::string out, in, params, epochs, set_name, features_path, grid = "default", conditions, feature_list;
  std::vector<std::string> data;
  bool svg = false, object_count = false;

  auto* synth = app.add_subcommand("synth", "Generate synthetic participant recordings");
  synth->add_option("--out", out, "Output directory")->required();

  auto* gaze = app.add_subcommand("gaze", "Detect fixations and saccades of one recording");
  gaze->add_option("--in", in, "Participant directory")->required();
  gaze->add_option("--params", params, "Configuration file");
  gaze->add_option("--out", out, "fixations.csv path")->required();

  auto* eeg = app.add_subcommand("eeg", "Clean EEG and cut labeled fixation and saccade epochs");
  eeg->add_option("--in", in, "Participant directory")->required();
  eeg->add_option("--out", out, "epochs.bin path")->required();

  auto* feat = app.add_subcommand("features", "Compute one feature set from stored epochs");
  feat->add_option("--epochs", epochs, "epochs.bin path")->required();
  feat->add_option("--set", set_name, "pyeeg, csp15, srp, gaze or fusion")->required();
  feat->add_option("--out", out, "features.csv path")->required();

  auto* train = app.add_subcommand("train", "Grid-search and fit an SVM on a feature table");
  train->add_option("--features", features_path, "features.csv path")->required();
  train->add_option("--grid", grid, "Hyperparameter grid (default)");
  train->add_option("--out", out, "model.json path")->required();

  auto* eval = app.add_subcommand("eval", "Run the domain-condition evaluation");
  eval->add_option("--data", data, "Participant directories or their parents")->required();
  eval->add_option("--conditions", conditions, "all or comma-separated condition names");
  eval->add_option("--features", feature_list, "all or comma-separated feature sets");
  eval->add_option("--out", out, "Report directory")->required();

  auto* report = app.add_subcommand("report", "Re-render a report from report.json");
  report->add_option("--in", in, "report.json path")->required();
  report->add_option("--out", out, "Output directory")->required();
  report->add_flag("--svg", svg, "Also write report.svg");
  report->add_flag("--object-count", object_count, "Also write object_count.csv");

  auto* all = app.add_subcommand("all", "synth, eval and report in one go");
  all->add_option("--out", out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "gazeeg: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    const auto t0 = Clock::now();
    if (synth->parsed()) {
      const auto cfg = effective_config(o, o.config);
      const auto dirs = generate(cfg.synth_config(), out, cfg.jobs);
      write_provenance(out, cfg);
      log_stage("synth", t0, "participants=" + std::to_string(dirs.size()));
    } else if (gaze->parsed()) {
      const auto cfg = effective_config(o, params.empty() ? o.config : params);
      const auto rec = load_recording(in);
      const auto ev = detect_fixations(rec.gaze, cfg.prepare.ivt, rec.screen, rec.events);
      fs::create_directories(dir_of(out));
      detail::write_file(out, fixations_csv(ev));
      write_provenance(dir_of(out), cfg);
      log_stage("gaze", t0,
                "fixations=" + std::to_string(ev.fixations.size()) + " saccades=" + std::to_string(ev.saccades.size()));
    } else if (eeg->parsed()) {
      const auto cfg = effective_config(o, o.config);
      const auto rec = load_recording(in);
      const auto pd = prepare_participant(rec, cfg.prepare);
      EpochFile ef;
      ef.channels = pd.channels;
      ef.fs_hz = pd.fs_hz;
      ef.epochs = pd.frp;
      ef.epochs.insert(ef.epochs.end(), pd.srp.begin(), pd.srp.end());
      std::string bad;
      for (const auto& b : pd.preprocess.bad_channels) bad += (bad.empty() ? "" : ",") + b;
      ef.provenance = {{"participant_id", pd.participant_id},
                       {"source", fs::absolute(in).string()},
                       {"seed", std::to_string(cfg.seed)},
                       {"version", GAZEEG_VERSION},
                       {"bad_channels", bad},
                       {"config", dump_config(cfg)}};
      fs::create_directories(dir_of(out));
      write_epochs(ef, out);
      write_provenance(dir_of(out), cfg);
      log_stage("eeg", t0, "epochs=" + std::to_string(ef.epochs.size()));
    } else if (feat->parsed()) {
      const auto cfg = effective_config(o, o.config);
      const auto fset = feature_set_from_string(set_name);
      const auto ef = read_epochs(epochs);
      const auto ds = dataset_from_epochs(ef.epochs, ef.channels, ef.fs_hz, cfg.prepare);
      std::vector<int> rows(ds.samples.size());
      std::iota(rows.begin(), rows.end(), 0);
      const auto table = build_features(ds, fset, rows, rows, cfg.eval.csp_components);
      fs::create_directories(dir_of(out));
      detail::write_file(out, features_csv(table));
      write_provenance(dir_of(out), cfg);
      log_stage("features", t0, "rows=" + std::to_string(table.rows()));
    } else if (train->parsed()) {
      const auto cfg = effective_config(o, o.config);
      if (grid != "default") throw Error(ErrorCode::ConfigError, "unknown grid '" + grid + "'");
      const auto table = read_features_csv(detail::read_file(features_path));
      const auto scaler = fit_scaler(table.X);
      const Matrix Xs = apply_scaler(scaler, table.X);
      const auto n_target = std::count(table.labels.begin(), table.labels.end(), Label::Target);
      const auto minority = std::min<long>(n_target, static_cast<long>(table.labels.size()) - n_target);
      const int inner = static_cast<int>(std::min<long>(cfg.eval.inner_folds, minority));
      SvmSpec best = cfg.eval.grid.front();
      if (inner >= 2) best = grid_search(Xs, table.labels, inner, cfg.seed, cfg.eval.grid, cfg.eval.smo).best;
      auto model = svm_fit(Xs, table.labels, best, cfg.eval.smo);
      model.scaler = scaler;
      model.schema = table.schema;
      fs::create_directories(dir_of(out));
      detail::write_file(out, model_to_json(model));
      write_provenance(dir_of(out), cfg);
      log_stage("train", t0, "model=" + best.to_string());
    } else if (eval->parsed()) {
      auto cfg = effective_config(o, o.config);
      if (!conditions.empty()) set_config_value(cfg, "eval.conditions", conditions);
      if (!feature_list.empty()) set_config_value(cfg, "eval.features", feature_list);
      std::vector<fs::path> paths(data.begin(), data.end());
      evaluate(cfg, participant_dirs(paths), out);
    } else if (report->parsed()) {
      const auto rows = read_report_json(detail::read_file(in));
      write_report(rows, out, ReportOptions{svg, object_count});
      log_stage("report", t0, "rows=" + std::to_string(rows.size()));
    } else if (all->parsed()) {
      const auto cfg = effective_config(o, o.config);
      run_pipeline(cfg, out);
      log_stage("all", t0);
    }
  } catch (const Error& e) {
    std::cerr << "gazeeg: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "gazeeg: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace gazeeg
