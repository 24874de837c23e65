#include "gazeeg/synth.hpp"

#include "gazeeg/parallel.hpp"
#include "text_io.hpp"

#include <json.hpp>
#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

namespace gazeeg {

namespace fs = std::filesystem;
using json = nlohmann::json;

void SynthConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::ConfigError, "synth: " + msg); };
  if (n_participants < 1) fail("n_participants must be >= 1");
  if (trials_per_participant < 1) fail("trials_per_participant must be >= 1");
  if (workshop_fraction < 0.0 || workshop_fraction > 1.0) fail("workshop_fraction must lie in [0, 1]");
  if (fixations_min < 1 || fixations_max < fixations_min) fail("fixation range invalid");
  if (skip_rate < 0.0 || skip_rate >= 1.0) fail("skip_rate must lie in [0, 1)");
  if (post_target_rate < 0.0 || post_target_rate > 1.0) fail("post_target_rate must lie in [0, 1]");
  if (effect_uv < 0.0) fail("effect amplitude must be >= 0");
  if (!(target_duration_ms > 0 && nontarget_duration_ms > 0 && duration_shape > 0)) {
    fail("durations must be positive");
  }
  if (!(effect_peak_ms > 0 && effect_width_ms > 0)) fail("effect timing must be positive");
  if (effect_latency_jitter_ms < 0) fail("latency jitter must be >= 0");
  if (n_background_sources < 1) fail("need at least one background source");
  if (source_noise_uv < 0 || effect_source_noise_uv < 0 || sensor_noise_uv < 0 || line_noise_uv < 0 || blink_uv < 0) {
    fail("noise levels must be >= 0");
  }
  if (jitter_deg < 0) fail("jitter must be >= 0");
  if (!(eye_distance_mm > 0 && eeg_rate_hz > 0 && gaze_rate_hz > 0)) fail("rates and distances must be positive");
}

std::string_view to_string(FixationRole r) {
  switch (r) {
    case FixationRole::Iti: return "iti";
    case FixationRole::NonTarget: return "nontarget";
    case FixationRole::Target: return "target";
    case FixationRole::PostTarget: return "post_target";
  }
  return "?";
}

double saccade_duration_ms(double amplitude_deg) { return 2.2 * amplitude_deg + 21.0; }

double saccade_progress(double tau, SaccadeProfile profile) {
  tau = std::clamp(tau, 0.0, 1.0);
  if (profile == SaccadeProfile::Linear) return tau;
  const double t3 = tau * tau * tau;
  return t3 * (10.0 - 15.0 * tau + 6.0 * tau * tau);
}

namespace {

ScreenGeometry default_screen() {
  ScreenGeometry s;
  s.width_px = 1920;
  s.height_px = 1080;
  s.width_mm = 597.7;
  s.height_mm = 336.2;
  return s;
}

// Pixels per degree of visual angle along each axis at the screen centre.
Eigen::Vector2d px_per_deg(const ScreenGeometry& screen, double eye_distance_mm) {
  const double mm = eye_distance_mm * std::tan(std::numbers::pi / 180.0);
  return {mm / screen.mm_per_px().x(), mm / screen.mm_per_px().y()};
}

double amplitude_deg(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const ScreenGeometry& screen,
                     double eye_distance_mm) {
  const double chord = (b - a).cwiseProduct(screen.mm_per_px()).norm();
  return 2.0 * std::atan(chord / (2.0 * eye_distance_mm)) * 180.0 / std::numbers::pi;
}

}  // namespace

std::vector<GazeSample> render_scanpath(const ScanpathPlan& plan, const ScreenGeometry& screen,
                                        double rate_hz, double eye_distance_mm, double jitter_deg,
                                        std::mt19937_64& rng) {
  std::vector<GazeSample> out;
  if (plan.fixations.empty()) return out;
  const double dt = 1000.0 / rate_hz;
  const auto n = static_cast<std::size_t>(std::floor(plan.end_ms / dt)) + 1;
  const Eigen::Vector2d sd = jitter_deg * px_per_deg(screen, eye_distance_mm);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Eigen::Vector2d size(screen.width_px, screen.height_px);
  const Eigen::Vector2d eye_offset(0.001, 0.0);
  out.reserve(n);
  constexpr double kRho = 0.9;
  const double innovation = std::sqrt(1.0 - kRho * kRho);
  Eigen::Vector2d jitter(normal(rng), normal(rng));
  std::size_t k = 0;  // current/next fixation
  std::size_t b = 0;  // current/next invalid interval
  const auto& fx = plan.fixations;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * dt;
    while (k + 1 < fx.size() && t >= fx[k + 1].onset_ms) ++k;
    while (b < plan.invalid.size() && t >= plan.invalid[b].end_ms) ++b;
    GazeSample s;
    s.t_ms = t;
    s.eye_distance_mm = eye_distance_mm;
    Eigen::Vector2d p;
    if (t < fx[k].onset_ms) {
      p = fx[k].pos_px;
    } else if (t < fx[k].offset_ms || k + 1 == fx.size()) {
      p = fx[k].pos_px;
    } else {
      const double tau = (t - fx[k].offset_ms) / (fx[k + 1].onset_ms - fx[k].offset_ms);
      p = fx[k].pos_px + saccade_progress(tau, plan.profile) * (fx[k + 1].pos_px - fx[k].pos_px);
    }
    if (i > 0) {
      const double jx = normal(rng);
      const double jy = normal(rng);
      jitter = kRho * jitter + innovation * Eigen::Vector2d(jx, jy);
    }
    p += jitter.cwiseProduct(sd);
    const bool lost = b < plan.invalid.size() && t >= plan.invalid[b].begin_ms && t < plan.invalid[b].end_ms;
    if (!lost) {
      Eigen::Vector2d norm = p.cwiseQuotient(size);
      norm = norm.cwiseMax(-0.2).cwiseMin(1.2);
      s.left = (norm - eye_offset).cwiseMax(-0.2).cwiseMin(1.2);
      s.right = (norm + eye_offset).cwiseMax(-0.2).cwiseMin(1.2);
      s.left_valid = s.right_valid = true;
    }
    out.push_back(s);
  }
  return out;
}

Vector pink_noise(Eigen::Index n, std::mt19937_64& rng) {
  if (n <= 0) return Vector();
  std::size_t len = 1;
  while (len < static_cast<std::size_t>(n)) len <<= 1;
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> white(len);
  for (auto& w : white) w = normal(rng);
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spec;
  fft.fwd(spec, white);
  spec[0] = 0.0;
  for (std::size_t k = 1; k < len; ++k) {
    const std::size_t f = std::min(k, len - k);
    spec[k] /= std::sqrt(static_cast<double>(f));
  }
  std::vector<double> shaped;
  fft.inv(shaped, spec);
  Vector out = Eigen::Map<Vector>(shaped.data(), n);
  out.array() -= out.mean();
  const double sd = std::sqrt(out.squaredNorm() / static_cast<double>(n));
  if (sd > 0.0) out /= sd;
  return out;
}

namespace {

Eigen::Vector3d random_upper_direction(std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  while (true) {
    Eigen::Vector3d v(normal(rng), normal(rng), normal(rng));
    if (v.norm() < 1e-9) continue;
    v.normalize();
    if (v.z() >= 0.15) return v;
  }
}

Vector blob(const Montage& montage, const std::vector<std::string>& channels,
            const Eigen::Vector3d& center, double width_rad) {
  Vector l(static_cast<Eigen::Index>(channels.size()));
  for (std::size_t c = 0; c < channels.size(); ++c) {
    const double ang = std::acos(std::clamp(montage.at(channels[c]).dot(center), -1.0, 1.0));
    l(static_cast<Eigen::Index>(c)) = std::exp(-ang * ang / (2.0 * width_rad * width_rad));
  }
  return l;
}

void add_bump(Eigen::Ref<RowVector, 0, Eigen::InnerStride<>> signal, double rate_hz, double center_ms, double width_ms,
              double amplitude) {
  const double dt = 1000.0 / rate_hz;
  const auto first = std::max<Eigen::Index>(0, static_cast<Eigen::Index>(std::ceil((center_ms - width_ms / 2) / dt)));
  const auto last = std::min<Eigen::Index>(signal.size() - 1,
                                           static_cast<Eigen::Index>(std::floor((center_ms + width_ms / 2) / dt)));
  for (Eigen::Index i = first; i <= last; ++i) {
    const double t = static_cast<double>(i) * dt;
    signal(i) += amplitude * std::cos(std::numbers::pi * (t - center_ms) / width_ms);
  }
}

// Splits planted fixations around tracker-loss intervals.
std::vector<PlannedFixation> split_at(const std::vector<PlannedFixation>& fx,
                                      const std::vector<Interval>& invalid) {
  std::vector<PlannedFixation> out;
  for (const auto& f : fx) {
    std::vector<PlannedFixation> pieces{f};
    for (const auto& iv : invalid) {
      std::vector<PlannedFixation> next;
      for (const auto& p : pieces) {
        if (iv.end_ms <= p.onset_ms || iv.begin_ms >= p.offset_ms) {
          next.push_back(p);
          continue;
        }
        if (iv.begin_ms > p.onset_ms) {
          auto a = p;
          a.offset_ms = iv.begin_ms;
          next.push_back(a);
        }
        if (iv.end_ms < p.offset_ms) {
          auto b = p;
          b.onset_ms = iv.end_ms;
          next.push_back(b);
        }
      }
      pieces = std::move(next);
    }
    out.insert(out.end(), pieces.begin(), pieces.end());
  }
  return out;
}

}  // namespace

SynthParticipant generate_participant(const SynthConfig& cfg, int index) {
  cfg.validate();
  std::mt19937_64 rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(index)));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto uniform = [&](double a, double b) { return a + (b - a) * unif(rng); };

  SynthParticipant out;
  auto& rec = out.recording;
  char pid[16];
  std::snprintf(pid, sizeof pid, "P%02d", index + 1);
  rec.participant_id = pid;
  rec.screen = default_screen();
  rec.gaze_rate_hz = cfg.gaze_rate_hz;
  rec.montage = default_montage();
  rec.eeg.channels = default_channels();
  rec.eeg.rate_hz = cfg.eeg_rate_hz;

  const double eye_dist = cfg.eye_distance_mm + uniform(-30.0, 30.0);
  const Eigen::Vector2d center(rec.screen.width_px / 2.0, rec.screen.height_px / 2.0);
  const double W = rec.screen.width_px;
  const double H = rec.screen.height_px;

  const bool dur_effect = cfg.duration_effect_active();
  std::gamma_distribution<double> nt_dur(cfg.duration_shape, cfg.nontarget_duration_ms / cfg.duration_shape);
  std::gamma_distribution<double> tg_dur(
      cfg.duration_shape, (dur_effect ? cfg.target_duration_ms : cfg.nontarget_duration_ms) / cfg.duration_shape);
  auto clamp_dur = [](double d) { return std::clamp(d, 80.0, 1500.0); };

  // Scene bookkeeping: 8 scenes per domain, each with a fixed object count.
  std::vector<int> object_counts(16);
  for (auto& c : object_counts) c = 5 + static_cast<int>(unif(rng) * 21.0);
  const int n_trials = cfg.trials_per_participant;
  std::vector<SceneDomain> domains(static_cast<std::size_t>(n_trials), SceneDomain::Desktop);
  const auto n_workshop = static_cast<int>(std::lround(cfg.workshop_fraction * n_trials));
  for (int i = 0; i < n_workshop; ++i) domains[static_cast<std::size_t>(i)] = SceneDomain::Workshop;
  std::shuffle(domains.begin(), domains.end(), rng);

  ScanpathPlan plan;
  plan.fixations.push_back({0.0, 2000.0, center, -1, FixationRole::Iti});
  double t = 2000.0;
  Eigen::Vector2d cur = center;
  auto saccade_to = [&](const Eigen::Vector2d& p) {
    t += saccade_duration_ms(amplitude_deg(cur, p, rec.screen, eye_dist));
    cur = p;
  };
  auto far_enough = [&](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    return amplitude_deg(a, b, rec.screen, eye_dist) >= 3.0;
  };

  for (int trial = 1; trial <= n_trials; ++trial) {
    TrialEvent ev;
    ev.trial_id = trial;
    ev.scene_domain = domains[static_cast<std::size_t>(trial - 1)];
    const int scene = static_cast<int>(unif(rng) * 8.0);
    const int scene_index = (ev.scene_domain == SceneDomain::Workshop ? 0 : 8) + scene;
    char sid[32];
    std::snprintf(sid, sizeof sid, "%s_%02d", std::string(to_string(ev.scene_domain)).c_str(), scene + 1);
    ev.scene_id = sid;
    ev.object_count = object_counts[static_cast<std::size_t>(scene_index)];
    char tid[32];
    std::snprintf(tid, sizeof tid, "object_%02d", 1 + static_cast<int>(unif(rng) * 20.0));
    ev.target_id = tid;
    ev.search_onset_ms = t;
    const bool skipped = unif(rng) < cfg.skip_rate;
    ev.outcome = skipped ? Outcome::Skipped : Outcome::Clicked;

    Eigen::Vector2d target;
    do {
      target = {uniform(150.0, W - 150.0), uniform(150.0, H - 150.0)};
    } while (!far_enough(center, target));
    const double hw = uniform(30.0, 100.0);
    const double hh = uniform(30.0, 100.0);
    const Eigen::Vector2d box_c = target + Eigen::Vector2d(uniform(-0.5, 0.5) * hw, uniform(-0.5, 0.5) * hh);
    ev.target_bbox = {box_c.x() - hw - 10.0, box_c.y() - hh - 10.0, box_c.x() + hw + 10.0,
                      box_c.y() + hh + 10.0};
    const BBox keep_out{ev.target_bbox.x0 - 40.0, ev.target_bbox.y0 - 40.0, ev.target_bbox.x1 + 40.0,
                        ev.target_bbox.y1 + 40.0};

    auto random_distractor = [&]() {
      Eigen::Vector2d p;
      int guard = 0;
      do {
        p = {uniform(80.0, W - 80.0), uniform(80.0, H - 80.0)};
      } while ((keep_out.contains(p) || !far_enough(cur, p)) && ++guard < 10000);
      return p;
    };

    const int n_nt = cfg.fixations_min +
                     static_cast<int>(unif(rng) * (cfg.fixations_max - cfg.fixations_min + 1));
    for (int k = 0; k < n_nt; ++k) {
      const auto p = random_distractor();
      saccade_to(p);
      const double d = clamp_dur(nt_dur(rng));
      plan.fixations.push_back({t, t + d, p, trial, FixationRole::NonTarget});
      t += d;
    }
    if (!skipped) {
      if (!far_enough(cur, target)) {
        // Step away first so the target fixation is reached by a real saccade.
        const auto p = random_distractor();
        saccade_to(p);
        const double d = clamp_dur(nt_dur(rng));
        plan.fixations.push_back({t, t + d, p, trial, FixationRole::NonTarget});
        t += d;
      }
      saccade_to(target);
      const double d = clamp_dur(tg_dur(rng));
      plan.fixations.push_back({t, t + d, target, trial, FixationRole::Target});
      out.truth.effect_onsets_ms.push_back(t);
      t += d;
      if (unif(rng) < cfg.post_target_rate) {
        const auto p = random_distractor();
        saccade_to(p);
        const double d2 = clamp_dur(nt_dur(rng));
        plan.fixations.push_back({t, t + d2, p, trial, FixationRole::PostTarget});
        t += d2;
      }
    }
    ev.search_end_ms = t;
    rec.events.push_back(ev);

    saccade_to(center);
    const double iti = uniform(1900.0, 2400.0) + (trial == n_trials ? 1500.0 : 0.0);
    if (cfg.blinks && unif(rng) < 0.6) {
      // Mid inter-trial fixation, clear of every search epoch.
      plan.invalid.push_back({t + 1100.0, t + 1250.0});
      out.truth.blink_onsets_ms.push_back(t + 1100.0);
    }
    plan.fixations.push_back({t, t + iti, center, -1, FixationRole::Iti});
    t += iti;
  }
  plan.end_ms = t;
  rec.gaze = render_scanpath(plan, rec.screen, cfg.gaze_rate_hz, eye_dist, cfg.jitter_deg, rng);
  out.truth.fixations = split_at(plan.fixations, plan.invalid);

  // EEG forward model: spatially smooth source patterns on the unit sphere.
  const auto& chans = rec.eeg.channels;
  const auto nch = static_cast<Eigen::Index>(chans.size());
  const double dt = 1000.0 / cfg.eeg_rate_hz;
  const auto nfr = static_cast<Eigen::Index>(std::floor(t / dt)) + 1;
  const int n_bg = cfg.n_background_sources;
  const Eigen::Index n_src = n_bg + 1 + (cfg.blinks ? 1 : 0);
  Matrix lead(nch, n_src);
  Matrix src(n_src, nfr);
  // Background source sites are shared by all participants (drawn from the
  // master seed) and perturbed per participant.
  std::mt19937_64 site_rng(derive_seed(cfg.seed, 0x5173ULL << 32));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int s = 0; s < n_bg; ++s) {
    const Eigen::Vector3d site = random_upper_direction(site_rng);
    const double width = 0.7 + 0.3 * std::uniform_real_distribution<double>(0.0, 1.0)(site_rng);
    Eigen::Vector3d dir = site + 0.05 * Eigen::Vector3d(normal(rng), normal(rng), normal(rng));
    dir.z() = std::max(dir.z(), 0.15);
    lead.col(s) = blob(rec.montage, chans, dir.normalized(), width * uniform(0.95, 1.05));
    src.row(s) = cfg.source_noise_uv * pink_noise(nfr, rng).transpose();
    out.truth.source_names.push_back("background_" + std::to_string(s + 1));
  }
  const Eigen::Vector3d parietal = rec.montage.at("Pz");
  Vector pl = blob(rec.montage, chans, parietal, 0.45);
  lead.col(n_bg) = pl / pl.maxCoeff();
  src.row(n_bg) = cfg.effect_source_noise_uv * pink_noise(nfr, rng).transpose();
  for (double onset : out.truth.effect_onsets_ms) {
    const double latency = cfg.effect_peak_ms + cfg.effect_latency_jitter_ms * normal(rng);
    add_bump(src.row(n_bg), cfg.eeg_rate_hz, onset + latency, cfg.effect_width_ms, cfg.effect_uv);
  }
  out.truth.source_names.push_back("parietal_effect");
  if (cfg.blinks) {
    const Eigen::Vector3d frontal = Eigen::Vector3d(0.0, 1.0, 0.05).normalized();
    Vector bl = blob(rec.montage, chans, frontal, 0.35);
    lead.col(n_bg + 1) = bl / bl.maxCoeff();
    src.row(n_bg + 1).setZero();
    for (double b : out.truth.blink_onsets_ms) {
      add_bump(src.row(n_bg + 1), cfg.eeg_rate_hz, b + 75.0, 250.0, cfg.blink_uv);
    }
    out.truth.source_names.push_back("blink");
  }

  Matrix x = lead * src;
  for (Eigen::Index c = 0; c < nch; ++c) {
    const double phase = uniform(0.0, 2.0 * std::numbers::pi);
    const double offset = uniform(-20.0, 20.0);
    for (Eigen::Index i = 0; i < nfr; ++i) {
      const double ts = static_cast<double>(i) * dt / 1000.0;
      x(c, i) += cfg.sensor_noise_uv * normal(rng) +
                 cfg.line_noise_uv * std::sin(2.0 * std::numbers::pi * 50.0 * ts + phase) + offset;
    }
  }
  rec.eeg.values = std::move(x);
  rec.eeg.t_ms = Vector::LinSpaced(nfr, 0.0, static_cast<double>(nfr - 1) * dt);

  out.truth.leadfield = lead;
  out.truth.sources = std::move(src);
  out.truth.effect_uv = cfg.effect_uv;
  out.truth.duration_effect = dur_effect;
  return out;
}

std::string truth_to_json(const SynthTruth& truth, const std::string& participant_id) {
  json j;
  j["participant_id"] = participant_id;
  j["effect_uv"] = truth.effect_uv;
  j["duration_effect"] = truth.duration_effect;
  json fx = json::array();
  for (const auto& f : truth.fixations) {
    fx.push_back({{"onset_ms", f.onset_ms},
                  {"offset_ms", f.offset_ms},
                  {"x_px", f.pos_px.x()},
                  {"y_px", f.pos_px.y()},
                  {"trial_id", f.trial_id},
                  {"role", std::string(to_string(f.role))}});
  }
  j["fixations"] = fx;
  j["effect_onsets_ms"] = truth.effect_onsets_ms;
  j["blink_onsets_ms"] = truth.blink_onsets_ms;
  j["source_names"] = truth.source_names;
  json lf = json::array();
  for (Eigen::Index r = 0; r < truth.leadfield.rows(); ++r) {
    std::vector<double> row;
    for (Eigen::Index c = 0; c < truth.leadfield.cols(); ++c) row.push_back(truth.leadfield(r, c));
    lf.push_back(row);
  }
  j["leadfield"] = lf;
  return j.dump(1) + "\n";
}

std::vector<fs::path> generate(const SynthConfig& cfg, const fs::path& out_dir, int jobs) {
  cfg.validate();
  fs::create_directories(out_dir);
  std::vector<fs::path> dirs(static_cast<std::size_t>(cfg.n_participants));
  parallel_for(dirs.size(), jobs, [&](std::size_t i) {
    auto p = generate_participant(cfg, static_cast<int>(i));
    const auto dir = out_dir / p.recording.participant_id;
    write_recording(p.recording, dir);
    detail::write_file(dir / "truth.json", truth_to_json(p.truth, p.recording.participant_id));
    dirs[i] = dir;
  });
  return dirs;
}

}  // namespace gazeeg
