#include "gazeeg/dataset.hpp"

#include "text_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace gazeeg {

namespace fs = std::filesystem;
using json = nlohmann::json;
using detail::fmt_fixed;
using detail::fmt_g6;

namespace {

Eigen::Vector3d sph(double theta_deg, double phi_deg) {
  const double t = theta_deg * std::numbers::pi / 180.0;
  const double p = phi_deg * std::numbers::pi / 180.0;
  return {std::sin(t) * std::sin(p), std::sin(t) * std::cos(p), std::cos(t)};
}

constexpr const char* kGazeHeader = "t_ms,lx,ly,lvalid,rx,ry,rvalid,eye_dist_mm";

double median_interval(const std::vector<double>& t) {
  std::vector<double> d;
  d.reserve(t.size());
  for (std::size_t i = 1; i < t.size(); ++i) d.push_back(t[i] - t[i - 1]);
  if (d.empty()) return 0.0;
  auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  return *mid;
}

void check_rate(const std::vector<double>& t, double rate_hz, std::string_view stream) {
  if (t.size() < 2) return;
  const double nominal = 1000.0 / rate_hz;
  const double med = median_interval(t);
  if (std::abs(med - nominal) > 0.05 * nominal) {
    throw Error(ErrorCode::ClockError, std::string(stream) + ": median sample interval " +
                                           std::to_string(med) + " ms, expected " +
                                           std::to_string(nominal) + " ms");
  }
}

}  // namespace

const std::vector<std::string>& default_channels() {
  static const std::vector<std::string> names = {
      "Fp1", "Fp2", "F7", "F3", "Fz", "F4", "F8", "T7", "C3", "Cz",
      "C4",  "T8",  "P7", "P3", "Pz", "P4", "P8", "O1", "Oz", "O2"};
  return names;
}

const Montage& default_montage() {
  static const Montage m = {
      {"Fp1", sph(90, -18)}, {"Fp2", sph(90, 18)},  {"F7", sph(90, -54)},
      {"F3", sph(60, -39)},  {"Fz", sph(45, 0)},    {"F4", sph(60, 39)},
      {"F8", sph(90, 54)},   {"T7", sph(90, -90)},  {"C3", sph(45, -90)},
      {"Cz", sph(0, 0)},     {"C4", sph(45, 90)},   {"T8", sph(90, 90)},
      {"P7", sph(90, -126)}, {"P3", sph(60, -141)}, {"Pz", sph(45, 180)},
      {"P4", sph(60, 141)},  {"P8", sph(90, 126)},  {"O1", sph(90, -162)},
      {"Oz", sph(90, 180)},  {"O2", sph(90, 162)},
  };
  return m;
}

std::pair<Eigen::Index, Eigen::Index> frame_range(const Vector& t_ms, double t0_ms, double t1_ms) {
  const double* b = t_ms.data();
  const double* e = b + t_ms.size();
  const auto first = std::lower_bound(b, e, t0_ms) - b;
  const auto last = std::lower_bound(b, e, t1_ms) - b;
  return {first, last};
}

std::vector<GazeSample> slice_stream(std::span<const GazeSample> gaze, double t0_ms, double t1_ms) {
  if (!(t0_ms < t1_ms)) throw Error(ErrorCode::RangeError, "empty or inverted window");
  if (gaze.empty() || t0_ms < gaze.front().t_ms || t0_ms > gaze.back().t_ms) {
    throw Error(ErrorCode::RangeError, "window start outside gaze stream");
  }
  auto lo = std::lower_bound(gaze.begin(), gaze.end(), t0_ms,
                             [](const GazeSample& s, double t) { return s.t_ms < t; });
  auto hi = std::lower_bound(lo, gaze.end(), t1_ms,
                             [](const GazeSample& s, double t) { return s.t_ms < t; });
  return {lo, hi};
}

EegStream slice_stream(const EegStream& eeg, double t0_ms, double t1_ms) {
  if (!(t0_ms < t1_ms)) throw Error(ErrorCode::RangeError, "empty or inverted window");
  if (eeg.n_frames() == 0 || t0_ms < eeg.t_ms(0) || t0_ms > eeg.t_ms(eeg.n_frames() - 1)) {
    throw Error(ErrorCode::RangeError, "window start outside EEG stream");
  }
  const auto [first, last] = frame_range(eeg.t_ms, t0_ms, t1_ms);
  EegStream out;
  out.t_ms = eeg.t_ms.segment(first, last - first);
  out.values = eeg.values.middleCols(first, last - first);
  out.channels = eeg.channels;
  out.rate_hz = eeg.rate_hz;
  return out;
}

void validate_recording(const Recording& rec) {
  std::vector<double> tg;
  tg.reserve(rec.gaze.size());
  for (const auto& s : rec.gaze) {
    if (!tg.empty() && !(s.t_ms > tg.back())) {
      throw Error(ErrorCode::ClockError, "gaze timestamps not strictly increasing at t=" +
                                             std::to_string(s.t_ms));
    }
    tg.push_back(s.t_ms);
    auto in_range = [](const Eigen::Vector2d& p) {
      return p.x() >= -0.2 && p.x() <= 1.2 && p.y() >= -0.2 && p.y() <= 1.2;
    };
    if ((s.left_valid && !in_range(s.left)) || (s.right_valid && !in_range(s.right))) {
      throw Error(ErrorCode::SchemaError,
                  "gaze coordinate outside [-0.2, 1.2] at t=" + std::to_string(s.t_ms));
    }
  }
  check_rate(tg, rec.gaze_rate_hz, "gaze");

  const auto& eeg = rec.eeg;
  if (eeg.t_ms.size() != eeg.values.cols()) {
    throw Error(ErrorCode::SchemaError, "EEG time vector and frame count differ");
  }
  if (static_cast<std::size_t>(eeg.values.rows()) != eeg.channels.size()) {
    throw Error(ErrorCode::SchemaError, "EEG rows do not match channel list");
  }
  std::vector<double> te(eeg.t_ms.data(), eeg.t_ms.data() + eeg.t_ms.size());
  for (std::size_t i = 1; i < te.size(); ++i) {
    if (!(te[i] > te[i - 1])) {
      throw Error(ErrorCode::ClockError,
                  "EEG timestamps not strictly increasing at t=" + std::to_string(te[i]));
    }
  }
  check_rate(te, eeg.rate_hz, "eeg");
  if (!eeg.values.allFinite()) throw Error(ErrorCode::SchemaError, "non-finite EEG value");

  for (const auto& ch : eeg.channels) {
    if (!rec.montage.count(ch)) {
      throw Error(ErrorCode::SchemaError, "montage lacks channel " + ch);
    }
  }

  const double slack = 20.0;
  for (const auto& ev : rec.events) {
    if (!(ev.search_onset_ms < ev.search_end_ms)) {
      throw Error(ErrorCode::SchemaError,
                  "trial " + std::to_string(ev.trial_id) + ": onset not before end");
    }
    const auto& b = ev.target_bbox;
    if (b.x0 > b.x1 || b.y0 > b.y1 || b.x0 < -slack || b.y0 < -slack ||
        b.x1 > rec.screen.width_px + slack || b.y1 > rec.screen.height_px + slack) {
      throw Error(ErrorCode::SchemaError,
                  "trial " + std::to_string(ev.trial_id) + ": bbox outside screen");
    }
    const bool gaze_ok = !tg.empty() && ev.search_onset_ms >= tg.front() &&
                         ev.search_end_ms <= tg.back();
    const bool eeg_ok = !te.empty() && ev.search_onset_ms >= te.front() &&
                        ev.search_end_ms <= te.back();
    if (!gaze_ok || !eeg_ok) {
      throw Error(ErrorCode::CoverageError,
                  "trial " + std::to_string(ev.trial_id) + " window not covered by both streams");
    }
  }
}

namespace {

Recording read_meta(const fs::path& dir) {
  const auto meta_path = dir / "meta.json";
  if (!fs::exists(meta_path)) throw Error(ErrorCode::MissingFile, meta_path.string());
  json meta;
  try {
    meta = json::parse(detail::read_file(meta_path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaError, "meta.json: " + std::string(e.what()));
  }
  Recording rec;
  try {
    rec.participant_id = meta.at("participant_id").get<std::string>();
    const auto px = meta.at("screen_px");
    rec.screen.width_px = px.at(0).get<int>();
    rec.screen.height_px = px.at(1).get<int>();
    if (meta.contains("screen_mm")) {
      rec.screen.width_mm = meta["screen_mm"].at(0).get<double>();
      rec.screen.height_mm = meta["screen_mm"].at(1).get<double>();
    }
    rec.eeg.channels = meta.at("channels").get<std::vector<std::string>>();
    rec.gaze_rate_hz = meta.value("gaze_rate_hz", 60.0);
    rec.eeg.rate_hz = meta.value("eeg_rate_hz", 500.0);
    const auto origin = meta.value("gaze_origin", std::string("top_left"));
    if (origin == "top_right") {
      rec.source_origin = GazeOrigin::TopRight;
    } else if (origin != "top_left") {
      throw Error(ErrorCode::SchemaError, "meta.json: unknown gaze_origin " + origin);
    }
    rec.montage = default_montage();
    if (meta.contains("montage")) {
      for (const auto& [name, pos] : meta["montage"].items()) {
        Eigen::Vector3d p(pos.at(0).get<double>(), pos.at(1).get<double>(),
                          pos.at(2).get<double>());
        if (p.norm() == 0.0) throw Error(ErrorCode::SchemaError, "montage: zero position " + name);
        rec.montage[name] = std::abs(p.norm() - 1.0) > 1e-12 ? p.normalized() : p;
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaError, "meta.json: " + std::string(e.what()));
  }
  return rec;
}

void read_gaze(const fs::path& path, Recording& rec) {
  if (!fs::exists(path)) throw Error(ErrorCode::MissingFile, path.string());
  const auto text = detail::read_file(path);
  const auto rows = detail::lines(text);
  if (rows.empty() || detail::trim(rows[0]) != kGazeHeader) {
    throw Error(ErrorCode::SchemaError, "gaze.csv: header must be '" + std::string(kGazeHeader) + "'");
  }
  rec.gaze.clear();
  rec.gaze.reserve(rows.size());
  const bool flip = rec.source_origin == GazeOrigin::TopRight;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].empty()) continue;
    const auto f = detail::split(rows[i]);
    if (f.size() != 8) {
      throw Error(ErrorCode::SchemaError, "gaze.csv line " + std::to_string(i + 1) +
                                              ": expected 8 columns, got " +
                                              std::to_string(f.size()));
    }
    GazeSample s;
    s.t_ms = detail::parse_double(f[0], "gaze.csv t_ms");
    s.left = {detail::parse_double(f[1], "gaze.csv lx"), detail::parse_double(f[2], "gaze.csv ly")};
    s.left_valid = detail::parse_int(f[3], "gaze.csv lvalid") != 0;
    s.right = {detail::parse_double(f[4], "gaze.csv rx"), detail::parse_double(f[5], "gaze.csv ry")};
    s.right_valid = detail::parse_int(f[6], "gaze.csv rvalid") != 0;
    s.eye_distance_mm = detail::parse_double(f[7], "gaze.csv eye_dist_mm");
    if (flip) {
      if (s.left_valid) s.left.x() = 1.0 - s.left.x();
      if (s.right_valid) s.right.x() = 1.0 - s.right.x();
    }
    rec.gaze.push_back(s);
  }
}

void read_eeg(const fs::path& path, Recording& rec) {
  if (!fs::exists(path)) throw Error(ErrorCode::MissingFile, path.string());
  const auto text = detail::read_file(path);
  const auto rows = detail::lines(text);
  const auto& chans = rec.eeg.channels;
  std::string expected = "t_ms";
  for (const auto& c : chans) expected += "," + c;
  if (rows.empty() || detail::trim(rows[0]) != expected) {
    throw Error(ErrorCode::SchemaError, "eeg.csv: header must be '" + expected + "'");
  }
  const std::size_t n_cols = chans.size() + 1;
  std::vector<double> t;
  std::vector<double> v;
  t.reserve(rows.size());
  v.reserve(rows.size() * chans.size());
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].empty()) continue;
    const auto f = detail::split(rows[i]);
    if (f.size() != n_cols) {
      throw Error(ErrorCode::SchemaError, "eeg.csv line " + std::to_string(i + 1) +
                                              ": expected " + std::to_string(n_cols) +
                                              " columns, got " + std::to_string(f.size()));
    }
    t.push_back(detail::parse_double(f[0], "eeg.csv t_ms"));
    for (std::size_t c = 1; c < n_cols; ++c) v.push_back(detail::parse_double(f[c], "eeg.csv"));
  }
  const auto n = static_cast<Eigen::Index>(t.size());
  rec.eeg.t_ms = Eigen::Map<Vector>(t.data(), n);
  rec.eeg.values = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor>>(
      v.data(), static_cast<Eigen::Index>(chans.size()), n);
}

void read_events(const fs::path& path, Recording& rec) {
  if (!fs::exists(path)) throw Error(ErrorCode::MissingFile, path.string());
  const auto text = detail::read_file(path);
  const auto rows = detail::lines(text);
  rec.events.clear();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (detail::trim(rows[i]).empty()) continue;
    try {
      const auto j = json::parse(rows[i]);
      TrialEvent ev;
      ev.trial_id = j.at("trial_id").get<int>();
      ev.scene_id = j.at("scene_id").get<std::string>();
      ev.scene_domain = domain_from_string(j.at("scene_domain").get<std::string>());
      ev.target_id = j.at("target_id").get<std::string>();
      const auto& b = j.at("target_bbox");
      ev.target_bbox = {b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(),
                        b.at(3).get<double>()};
      ev.search_onset_ms = j.at("search_onset_ms").get<double>();
      ev.search_end_ms = j.at("search_end_ms").get<double>();
      const auto outcome = j.at("outcome").get<std::string>();
      if (outcome == "clicked") {
        ev.outcome = Outcome::Clicked;
      } else if (outcome == "skipped") {
        ev.outcome = Outcome::Skipped;
      } else {
        throw Error(ErrorCode::SchemaError, "unknown outcome " + outcome);
      }
      if (j.contains("object_count")) ev.object_count = j["object_count"].get<int>();
      rec.events.push_back(std::move(ev));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::SchemaError,
                  "events.jsonl line " + std::to_string(i + 1) + ": " + e.what());
    }
  }
}

}  // namespace

Recording load_recording(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::MissingFile, dir.string());
  for (const char* name : {"meta.json", "gaze.csv", "eeg.csv", "events.jsonl"}) {
    if (!fs::exists(dir / name)) throw Error(ErrorCode::MissingFile, (dir / name).string());
  }
  Recording rec = read_meta(dir);
  read_gaze(dir / "gaze.csv", rec);
  read_eeg(dir / "eeg.csv", rec);
  read_events(dir / "events.jsonl", rec);
  validate_recording(rec);
  return rec;
}

void write_recording(const Recording& rec, const fs::path& dir) {
  fs::create_directories(dir);

  json meta;
  meta["participant_id"] = rec.participant_id;
  meta["screen_px"] = {rec.screen.width_px, rec.screen.height_px};
  meta["screen_mm"] = {rec.screen.width_mm, rec.screen.height_mm};
  meta["channels"] = rec.eeg.channels;
  meta["gaze_rate_hz"] = rec.gaze_rate_hz;
  meta["eeg_rate_hz"] = rec.eeg.rate_hz;
  meta["gaze_origin"] = "top_left";
  json montage = json::object();
  for (const auto& ch : rec.eeg.channels) {
    const auto it = rec.montage.find(ch);
    if (it == rec.montage.end()) throw Error(ErrorCode::SchemaError, "montage lacks channel " + ch);
    montage[ch] = {it->second.x(), it->second.y(), it->second.z()};
  }
  meta["montage"] = montage;
  detail::write_file(dir / "meta.json", meta.dump(2) + "\n");

  std::string g;
  g.reserve(rec.gaze.size() * 64);
  g += kGazeHeader;
  g += '\n';
  for (const auto& s : rec.gaze) {
    g += fmt_fixed(s.t_ms, 3);
    g += ',';
    g += s.left_valid ? fmt_g6(s.left.x()) + "," + fmt_g6(s.left.y()) + ",1" : std::string("0,0,0");
    g += ',';
    g += s.right_valid ? fmt_g6(s.right.x()) + "," + fmt_g6(s.right.y()) + ",1" : std::string("0,0,0");
    g += ',';
    g += fmt_g6(s.eye_distance_mm);
    g += '\n';
  }
  detail::write_file(dir / "gaze.csv", g);

  std::string e;
  e.reserve(static_cast<std::size_t>(rec.eeg.n_frames()) * (rec.eeg.channels.size() + 1) * 10);
  e += "t_ms";
  for (const auto& c : rec.eeg.channels) e += "," + c;
  e += '\n';
  for (Eigen::Index j = 0; j < rec.eeg.n_frames(); ++j) {
    e += fmt_fixed(rec.eeg.t_ms(j), 3);
    for (Eigen::Index c = 0; c < rec.eeg.n_channels(); ++c) {
      e += ',';
      e += fmt_g6(rec.eeg.values(c, j));
    }
    e += '\n';
  }
  detail::write_file(dir / "eeg.csv", e);

  std::string ev_text;
  for (const auto& ev : rec.events) {
    json j;
    j["trial_id"] = ev.trial_id;
    j["scene_id"] = ev.scene_id;
    j["scene_domain"] = std::string(to_string(ev.scene_domain));
    j["target_id"] = ev.target_id;
    j["target_bbox"] = {ev.target_bbox.x0, ev.target_bbox.y0, ev.target_bbox.x1, ev.target_bbox.y1};
    j["search_onset_ms"] = ev.search_onset_ms;
    j["search_end_ms"] = ev.search_end_ms;
    j["outcome"] = ev.outcome == Outcome::Clicked ? "clicked" : "skipped";
    if (ev.object_count) j["object_count"] = *ev.object_count;
    ev_text += j.dump();
    ev_text += '\n';
  }
  detail::write_file(dir / "events.jsonl", ev_text);
}

}  // namespace gazeeg
