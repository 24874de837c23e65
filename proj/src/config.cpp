#include "gazeeg/config.hpp"

#include "text_io.hpp"

#include <charconv>
#include <functional>
#include <map>

namespace gazeeg {

PipelineConfig::PipelineConfig() {
  for (const auto& c : canonical_conditions()) conditions.push_back(c.name);
}

SynthConfig PipelineConfig::synth_config() const {
  SynthConfig s = synth;
  s.seed = seed;
  return s;
}

namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw Error(ErrorCode::ConfigError, "bad value '" + value + "' for " + key);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  const auto r = std::from_chars(v.data(), end, out);
  if (r.ec != std::errc() || r.ptr != end) bad_value(key, v);
  return out;
}

long long to_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto* end = v.data() + v.size();
  const auto r = std::from_chars(v.data(), end, out);
  if (r.ec != std::errc() || r.ptr != end) bad_value(key, v);
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, v);
}

std::vector<std::string> to_list(const std::string& v) {
  std::vector<std::string> out;
  for (auto& item : detail::split(v, ',')) {
    auto t = detail::trim(item);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

std::string from_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + v[i];
  return out;
}

struct Entry {
  std::function<void(PipelineConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

template <typename Field>
Entry real(Field f) {
  return {[f](PipelineConfig& c, const std::string& k, const std::string& v) { f(c) = to_double(k, v); },
          [f](const PipelineConfig& c) { return from_double(f(const_cast<PipelineConfig&>(c))); }};
}

template <typename Field>
Entry integer(Field f) {
  return {[f](PipelineConfig& c, const std::string& k, const std::string& v) {
            f(c) = static_cast<std::remove_reference_t<decltype(f(c))>>(to_int(k, v));
          },
          [f](const PipelineConfig& c) { return std::to_string(f(const_cast<PipelineConfig&>(c))); }};
}

template <typename Field>
Entry boolean(Field f) {
  return {[f](PipelineConfig& c, const std::string& k, const std::string& v) { f(c) = to_bool(k, v); },
          [f](const PipelineConfig& c) {
            return std::string(f(const_cast<PipelineConfig&>(c)) ? "true" : "false");
          }};
}

#define GZ_FIELD(expr) [](PipelineConfig& c) -> auto& { return c.expr; }

const std::vector<std::pair<std::string, Entry>>& table() {
  static const std::vector<std::pair<std::string, Entry>> kTable = [] {
    std::vector<std::pair<std::string, Entry>> t;
    t.emplace_back("seed", Entry{[](PipelineConfig& c, const std::string& k, const std::string& v) {
                                   const auto s = to_int(k, v);
                                   if (s < 0) bad_value(k, v);
                                   c.seed = static_cast<std::uint64_t>(s);
                                 },
                                 [](const PipelineConfig& c) { return std::to_string(c.seed); }});
    t.emplace_back("jobs", integer(GZ_FIELD(jobs)));

    t.emplace_back("synth.n_participants", integer(GZ_FIELD(synth.n_participants)));
    t.emplace_back("synth.trials_per_participant", integer(GZ_FIELD(synth.trials_per_participant)));
    t.emplace_back("synth.workshop_fraction", real(GZ_FIELD(synth.workshop_fraction)));
    t.emplace_back("synth.fixations_min", integer(GZ_FIELD(synth.fixations_min)));
    t.emplace_back("synth.fixations_max", integer(GZ_FIELD(synth.fixations_max)));
    t.emplace_back("synth.skip_rate", real(GZ_FIELD(synth.skip_rate)));
    t.emplace_back("synth.post_target_rate", real(GZ_FIELD(synth.post_target_rate)));
    t.emplace_back("synth.effect_uv", real(GZ_FIELD(synth.effect_uv)));
    t.emplace_back("synth.duration_effect", boolean(GZ_FIELD(synth.duration_effect)));
    t.emplace_back("synth.target_duration_ms", real(GZ_FIELD(synth.target_duration_ms)));
    t.emplace_back("synth.nontarget_duration_ms", real(GZ_FIELD(synth.nontarget_duration_ms)));
    t.emplace_back("synth.duration_shape", real(GZ_FIELD(synth.duration_shape)));
    t.emplace_back("synth.effect_peak_ms", real(GZ_FIELD(synth.effect_peak_ms)));
    t.emplace_back("synth.effect_width_ms", real(GZ_FIELD(synth.effect_width_ms)));
    t.emplace_back("synth.effect_latency_jitter_ms", real(GZ_FIELD(synth.effect_latency_jitter_ms)));
    t.emplace_back("synth.n_background_sources", integer(GZ_FIELD(synth.n_background_sources)));
    t.emplace_back("synth.source_noise_uv", real(GZ_FIELD(synth.source_noise_uv)));
    t.emplace_back("synth.effect_source_noise_uv", real(GZ_FIELD(synth.effect_source_noise_uv)));
    t.emplace_back("synth.sensor_noise_uv", real(GZ_FIELD(synth.sensor_noise_uv)));
    t.emplace_back("synth.line_noise_uv", real(GZ_FIELD(synth.line_noise_uv)));
    t.emplace_back("synth.blinks", boolean(GZ_FIELD(synth.blinks)));
    t.emplace_back("synth.blink_uv", real(GZ_FIELD(synth.blink_uv)));
    t.emplace_back("synth.jitter_deg", real(GZ_FIELD(synth.jitter_deg)));
    t.emplace_back("synth.eye_distance_mm", real(GZ_FIELD(synth.eye_distance_mm)));
    t.emplace_back("synth.eeg_rate_hz", real(GZ_FIELD(synth.eeg_rate_hz)));
    t.emplace_back("synth.gaze_rate_hz", real(GZ_FIELD(synth.gaze_rate_hz)));

    t.emplace_back("gaze.max_gap_ms", real(GZ_FIELD(prepare.ivt.max_gap_ms)));
    t.emplace_back("gaze.median_window_samples", integer(GZ_FIELD(prepare.ivt.median_window_samples)));
    t.emplace_back("gaze.velocity_window_ms", real(GZ_FIELD(prepare.ivt.velocity_window_ms)));
    t.emplace_back("gaze.velocity_threshold_deg_s", real(GZ_FIELD(prepare.ivt.velocity_threshold_deg_s)));
    t.emplace_back("gaze.merge_max_gap_ms", real(GZ_FIELD(prepare.ivt.merge_max_gap_ms)));
    t.emplace_back("gaze.merge_max_angle_deg", real(GZ_FIELD(prepare.ivt.merge_max_angle_deg)));
    t.emplace_back("gaze.min_fixation_ms", real(GZ_FIELD(prepare.ivt.min_fixation_ms)));

    t.emplace_back("eeg.filter_order", integer(GZ_FIELD(prepare.preprocess.filter.order)));
    t.emplace_back("eeg.highpass_hz", real(GZ_FIELD(prepare.preprocess.filter.highpass_hz)));
    t.emplace_back("eeg.notch_low_hz", real(GZ_FIELD(prepare.preprocess.filter.notch_low_hz)));
    t.emplace_back("eeg.notch_high_hz", real(GZ_FIELD(prepare.preprocess.filter.notch_high_hz)));
    t.emplace_back("eeg.lowpass_hz", real(GZ_FIELD(prepare.preprocess.filter.lowpass_hz)));
    t.emplace_back("eeg.bad_correlation", real(GZ_FIELD(prepare.preprocess.bad.correlation_threshold)));
    t.emplace_back("eeg.bad_window_s", real(GZ_FIELD(prepare.preprocess.bad.window_s)));
    t.emplace_back("eeg.bad_fraction", real(GZ_FIELD(prepare.preprocess.bad.bad_fraction)));
    t.emplace_back("eeg.spline_order", integer(GZ_FIELD(prepare.preprocess.spline.order)));
    t.emplace_back("eeg.spline_terms", integer(GZ_FIELD(prepare.preprocess.spline.legendre_terms)));
    t.emplace_back("eeg.spline_ridge", real(GZ_FIELD(prepare.preprocess.spline.ridge)));
    t.emplace_back("eeg.run_ica", boolean(GZ_FIELD(prepare.preprocess.run_ica)));
    t.emplace_back("eeg.sobi_lags", integer(GZ_FIELD(prepare.preprocess.sobi.n_lags)));
    t.emplace_back("eeg.sobi_tolerance", real(GZ_FIELD(prepare.preprocess.sobi.tolerance)));
    t.emplace_back("eeg.sobi_max_sweeps", integer(GZ_FIELD(prepare.preprocess.sobi.max_sweeps)));
    t.emplace_back("eeg.ocular_correlation", real(GZ_FIELD(prepare.preprocess.artifact.ocular_correlation)));
    t.emplace_back("eeg.kurtosis", real(GZ_FIELD(prepare.preprocess.artifact.kurtosis)));
    t.emplace_back("eeg.frontal_channels",
                   Entry{[](PipelineConfig& c, const std::string& k, const std::string& v) {
                           auto l = to_list(v);
                           if (l.empty()) bad_value(k, v);
                           c.prepare.preprocess.artifact.frontal_channels = l;
                         },
                         [](const PipelineConfig& c) { return join(c.prepare.preprocess.artifact.frontal_channels); }});
    t.emplace_back("eeg.srp_length_ms", real(GZ_FIELD(prepare.srp_length_ms)));
    t.emplace_back("eeg.srp_max_lead_gap_ms", real(GZ_FIELD(prepare.srp_max_lead_gap_ms)));

    t.emplace_back("features.higuchi_kmax", integer(GZ_FIELD(prepare.pyeeg.higuchi_kmax)));
    t.emplace_back("features.min_samples", integer(GZ_FIELD(prepare.pyeeg.min_samples)));
    t.emplace_back("features.srp_baseline_ms", real(GZ_FIELD(prepare.srp.baseline_ms)));
    t.emplace_back("features.srp_rate_hz", real(GZ_FIELD(prepare.srp.rate_hz)));
    t.emplace_back("features.csp_components", integer(GZ_FIELD(eval.csp_components)));

    t.emplace_back("learn.inner_folds", integer(GZ_FIELD(eval.inner_folds)));
    t.emplace_back("learn.tolerance", real(GZ_FIELD(eval.smo.tolerance)));
    t.emplace_back("learn.max_iterations", integer(GZ_FIELD(eval.smo.max_iterations)));
    t.emplace_back("learn.polish", boolean(GZ_FIELD(eval.smo.polish)));

    t.emplace_back("eval.folds", integer(GZ_FIELD(eval.folds)));
    t.emplace_back("eval.conditions",
                   Entry{[](PipelineConfig& c, const std::string& k, const std::string& v) {
                           std::vector<std::string> names;
                           if (v == "all") {
                             for (const auto& dc : canonical_conditions()) names.push_back(dc.name);
                           } else {
                             names = to_list(v);
                             for (const auto& n : names) condition_by_name(n);
                           }
                           if (names.empty()) bad_value(k, v);
                           c.conditions = names;
                         },
                         [](const PipelineConfig& c) { return join(c.conditions); }});
    t.emplace_back("eval.features",
                   Entry{[](PipelineConfig& c, const std::string& k, const std::string& v) {
                           std::vector<FeatureSet> fs;
                           if (v == "all") {
                             fs = all_feature_sets();
                           } else {
                             for (const auto& n : to_list(v)) fs.push_back(feature_set_from_string(n));
                           }
                           if (fs.empty()) bad_value(k, v);
                           c.features = fs;
                         },
                         [](const PipelineConfig& c) {
                           std::vector<std::string> names;
                           for (auto f : c.features) names.emplace_back(to_string(f));
                           return join(names);
                         }});
    t.emplace_back("eval.unfound_as_nontarget", boolean(GZ_FIELD(prepare.labels.unfound_as_nontarget)));
    t.emplace_back("report.svg", boolean(GZ_FIELD(report.svg)));
    t.emplace_back("report.object_count", boolean(GZ_FIELD(report.object_count)));
    return t;
  }();
  return kTable;
}

#undef GZ_FIELD

const Entry& lookup(const std::string& key) {
  for (const auto& [k, e] : table()) {
    if (k == key) return e;
  }
  throw Error(ErrorCode::ConfigError, "unknown config key '" + key + "'");
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> kKeys = [] {
    std::vector<std::string> k;
    for (const auto& [name, e] : table()) k.push_back(name);
    return k;
  }();
  return kKeys;
}

void set_config_value(PipelineConfig& cfg, const std::string& key, const std::string& value) {
  lookup(key).set(cfg, key, std::string(detail::trim(value)));
}

std::string get_config_value(const PipelineConfig& cfg, const std::string& key) {
  return lookup(key).get(cfg);
}

PipelineConfig parse_config(const std::string& text, PipelineConfig base) {
  int lineno = 0;
  for (const auto& raw : detail::lines(text)) {
    ++lineno;
    std::string line(raw);
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const auto t = detail::trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::ConfigError, "line " + std::to_string(lineno) + ": expected key = value");
    }
    set_config_value(base, std::string(detail::trim(t.substr(0, eq))), std::string(detail::trim(t.substr(eq + 1))));
  }
  validate_config(base);
  return base;
}

void validate_config(const PipelineConfig& cfg) {
  cfg.synth_config().validate();
  try {
    cfg.prepare.ivt.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
  if (cfg.eval.folds < 2 || cfg.eval.inner_folds < 2) {
    throw Error(ErrorCode::ConfigError, "fold counts must be >= 2");
  }
  if (cfg.eval.csp_components < 1) throw Error(ErrorCode::ConfigError, "csp_components must be >= 1");
  if (cfg.jobs < 0) throw Error(ErrorCode::ConfigError, "jobs must be >= 0");
}

PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base) {
  return parse_config(detail::read_file(path), std::move(base));
}

std::string dump_config(const PipelineConfig& cfg) {
  std::string out = "# gazeeg effective configuration\n";
  for (const auto& [k, e] : table()) out += k + " = " + e.get(cfg) + "\n";
  return out;
}

}  // namespace gazeeg
