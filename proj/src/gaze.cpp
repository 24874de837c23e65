#include "gazeeg/gaze.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace gazeeg {

void IvtParams::validate() const {
  if (!(max_gap_ms > 0 && velocity_window_ms > 0 && velocity_threshold_deg_s > 0 &&
        merge_max_gap_ms > 0 && merge_max_angle_deg > 0 && min_fixation_ms > 0)) {
    throw Error(ErrorCode::InvalidArgument, "I-VT parameters must be positive");
  }
  if (median_window_samples < 1 || median_window_samples % 2 == 0) {
    throw Error(ErrorCode::InvalidArgument, "median window must be a positive odd count");
  }
}

namespace {

double median_dt(std::span<const double> t) {
  if (t.size() < 2) return 0.0;
  std::vector<double> d(t.size() - 1);
  for (std::size_t i = 1; i < t.size(); ++i) d[i - 1] = t[i] - t[i - 1];
  auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  return *mid;
}

template <typename Sample>
double median_dt_of(std::span<const Sample> s) {
  std::vector<double> t(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) t[i] = s[i].t_ms;
  return median_dt(t);
}

double median_of(std::vector<double>& v) {
  const auto n = v.size();
  std::sort(v.begin(), v.end());
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Interpolates one eye in place. `pos`/`valid` select the eye's members.
void fill_eye(std::vector<GazeSample>& out, double max_gap_ms, double dt,
              Eigen::Vector2d GazeSample::*pos, bool GazeSample::*valid) {
  const std::size_t n = out.size();
  std::size_t i = 0;
  while (i < n) {
    if (out[i].*valid) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    while (i < n && !(out[i].*valid)) ++i;
    if (start == 0 || i == n) continue;  // no flank on one side
    const auto& a = out[start - 1];
    const auto& b = out[i];
    const double missing_ms = (b.t_ms - a.t_ms) - dt;
    if (missing_ms > max_gap_ms + 1e-9) continue;
    const Eigen::Vector2d pa = a.*pos;
    const Eigen::Vector2d pb = b.*pos;
    const double span = b.t_ms - a.t_ms;
    for (std::size_t k = start; k < i; ++k) {
      const double w = (out[k].t_ms - a.t_ms) / span;
      out[k].*pos = pa + w * (pb - pa);
      out[k].*valid = true;
    }
  }
}

}  // namespace

std::vector<GazeSample> fill_gaps(std::span<const GazeSample> samples, double max_gap_ms) {
  std::vector<GazeSample> out(samples.begin(), samples.end());
  if (out.size() < 3) return out;
  const double dt = median_dt_of(samples);
  fill_eye(out, max_gap_ms, dt, &GazeSample::left, &GazeSample::left_valid);
  fill_eye(out, max_gap_ms, dt, &GazeSample::right, &GazeSample::right_valid);
  return out;
}

std::vector<CyclopeanSample> select_eye(std::span<const GazeSample> samples,
                                        const ScreenGeometry& screen) {
  const Eigen::Vector2d scale(screen.width_px, screen.height_px);
  std::vector<CyclopeanSample> out(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    auto& c = out[i];
    c.t_ms = s.t_ms;
    c.eye_distance_mm = s.eye_distance_mm;
    Eigen::Vector2d p;
    if (s.left_valid && s.right_valid) {
      p = 0.5 * (s.left + s.right);
    } else if (s.left_valid) {
      p = s.left;
    } else if (s.right_valid) {
      p = s.right;
    } else {
      continue;
    }
    c.valid = true;
    c.pos_px = p.cwiseProduct(scale);
  }
  return out;
}

std::vector<CyclopeanSample> smooth_median(std::span<const CyclopeanSample> samples, int window) {
  if (window < 1 || window % 2 == 0) {
    throw Error(ErrorCode::InvalidArgument, "median window must be a positive odd count");
  }
  const auto n = static_cast<std::ptrdiff_t>(samples.size());
  const std::ptrdiff_t h = window / 2;
  std::vector<CyclopeanSample> out(samples.begin(), samples.end());
  std::vector<double> xs, ys;
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    if (!samples[i].valid) continue;
    const std::ptrdiff_t half = std::min({h, i, n - 1 - i});
    xs.clear();
    ys.clear();
    for (std::ptrdiff_t k = i - half; k <= i + half; ++k) {
      if (!samples[k].valid) continue;
      xs.push_back(samples[k].pos_px.x());
      ys.push_back(samples[k].pos_px.y());
    }
    out[i].pos_px = {median_of(xs), median_of(ys)};
  }
  return out;
}

double visual_angle_deg(const Eigen::Vector2d& a_px, const Eigen::Vector2d& b_px,
                        const ScreenGeometry& screen, double eye_distance_mm) {
  const double chord_mm = (b_px - a_px).cwiseProduct(screen.mm_per_px()).norm();
  return 2.0 * std::atan(chord_mm / (2.0 * eye_distance_mm)) * 180.0 / std::numbers::pi;
}

std::vector<double> compute_velocity(std::span<const CyclopeanSample> samples,
                                     const ScreenGeometry& screen, double window_ms) {
  if (!screen.has_physical_size()) {
    throw Error(ErrorCode::GeometryError, "screen size in mm is required for velocities");
  }
  const auto n = static_cast<std::ptrdiff_t>(samples.size());
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> v(samples.size(), nan);
  if (n < 2) return v;
  const double dt = median_dt_of(samples);
  const auto span = std::max<std::ptrdiff_t>(1, std::lround(window_ms / dt));
  const std::ptrdiff_t back = (span + 1) / 2;
  const std::ptrdiff_t fwd = span / 2;

  std::ptrdiff_t i = 0;
  while (i < n) {
    if (!samples[i].valid) {
      ++i;
      continue;
    }
    const std::ptrdiff_t run_start = i;
    while (i < n && samples[i].valid) ++i;
    const std::ptrdiff_t run_end = i;  // exclusive

    std::ptrdiff_t first_ok = -1, last_ok = -1;
    for (std::ptrdiff_t k = run_start; k < run_end; ++k) {
      const std::ptrdiff_t a = k - back;
      const std::ptrdiff_t b = k + fwd;
      if (a < run_start || b >= run_end) continue;
      const auto& sa = samples[a];
      const auto& sb = samples[b];
      const double dist = 0.5 * (sa.eye_distance_mm + sb.eye_distance_mm);
      if (!(dist > 0.0)) {
        throw Error(ErrorCode::GeometryError, "eye distance must be positive");
      }
      const double angle = visual_angle_deg(sa.pos_px, sb.pos_px, screen, dist);
      v[k] = angle / ((sb.t_ms - sa.t_ms) / 1000.0);
      if (first_ok < 0) first_ok = k;
      last_ok = k;
    }
    if (first_ok < 0) continue;
    for (std::ptrdiff_t k = run_start; k < first_ok; ++k) v[k] = v[first_ok];
    for (std::ptrdiff_t k = last_ok + 1; k < run_end; ++k) v[k] = v[last_ok];
  }
  return v;
}

std::vector<SampleClass> ivt_classify(std::span<const double> velocities, double threshold_deg_s) {
  std::vector<SampleClass> out(velocities.size(), SampleClass::Unclassified);
  for (std::size_t i = 0; i < velocities.size(); ++i) {
    const double v = velocities[i];
    if (std::isnan(v)) continue;
    out[i] = v < threshold_deg_s ? SampleClass::Fixation : SampleClass::Saccade;
  }
  return out;
}

GazeEvents segment_runs(std::span<const CyclopeanSample> samples,
                        std::span<const SampleClass> classes) {
  GazeEvents ev;
  const std::size_t n = samples.size();
  if (n == 0) return ev;
  const double dt = n > 1 ? median_dt_of(samples) : 0.0;
  std::size_t i = 0;
  while (i < n) {
    const auto cls = classes[i];
    const std::size_t start = i;
    while (i < n && classes[i] == cls) ++i;
    if (cls == SampleClass::Unclassified) continue;
    const double t0 = samples[start].t_ms;
    const double t1 = i < n ? samples[i].t_ms : samples[n - 1].t_ms + dt;
    if (cls == SampleClass::Fixation) {
      Fixation f;
      f.onset_ms = t0;
      f.duration_ms = t1 - t0;
      f.sample_count = static_cast<int>(i - start);
      Eigen::Vector2d sum = Eigen::Vector2d::Zero();
      double dist = 0.0;
      for (std::size_t k = start; k < i; ++k) {
        sum += samples[k].pos_px;
        dist += samples[k].eye_distance_mm;
      }
      f.centroid_px = sum / f.sample_count;
      f.eye_distance_mm = dist / f.sample_count;
      ev.fixations.push_back(f);
    } else {
      ev.saccades.push_back({t0, t1, -1});
    }
  }
  return ev;
}

std::vector<Fixation> merge_fixations(std::span<const Fixation> fixations, double max_gap_ms,
                                      double max_angle_deg, const ScreenGeometry& screen) {
  std::vector<Fixation> cur(fixations.begin(), fixations.end());
  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<Fixation> next;
    next.reserve(cur.size());
    for (const auto& f : cur) {
      if (!next.empty()) {
        auto& p = next.back();
        const double gap = f.onset_ms - p.end_ms();
        const double dist = 0.5 * (p.eye_distance_mm + f.eye_distance_mm);
        if (gap <= max_gap_ms + 1e-9 && dist > 0.0 &&
            visual_angle_deg(p.centroid_px, f.centroid_px, screen, dist) <= max_angle_deg) {
          const int n = p.sample_count + f.sample_count;
          p.centroid_px = (p.centroid_px * p.sample_count + f.centroid_px * f.sample_count) / n;
          p.eye_distance_mm =
              (p.eye_distance_mm * p.sample_count + f.eye_distance_mm * f.sample_count) / n;
          p.duration_ms = f.end_ms() - p.onset_ms;
          p.sample_count = n;
          changed = true;
          continue;
        }
      }
      next.push_back(f);
    }
    cur = std::move(next);
  }
  return cur;
}

GazeEvents detect_fixations(std::span<const GazeSample> samples, const IvtParams& params,
                            const ScreenGeometry& screen, std::span<const TrialEvent> events) {
  params.validate();
  GazeEvents out;
  const bool any_valid = std::any_of(samples.begin(), samples.end(), [](const GazeSample& s) {
    return s.left_valid || s.right_valid;
  });
  if (!any_valid) return out;

  const auto filled = fill_gaps(samples, params.max_gap_ms);
  const auto cyc = select_eye(filled, screen);
  const auto smooth = smooth_median(cyc, params.median_window_samples);
  const auto vel = compute_velocity(smooth, screen, params.velocity_window_ms);
  const auto cls = ivt_classify(vel, params.velocity_threshold_deg_s);
  auto runs = segment_runs(smooth, cls);
  auto merged = merge_fixations(runs.fixations, params.merge_max_gap_ms,
                                params.merge_max_angle_deg, screen);

  // Saccades swallowed by a merge no longer exist.
  std::vector<Saccade> saccades;
  std::size_t fi = 0;
  for (const auto& s : runs.saccades) {
    while (fi < merged.size() && merged[fi].end_ms() <= s.onset_ms) ++fi;
    const bool inside = fi < merged.size() && merged[fi].onset_ms <= s.onset_ms &&
                        s.offset_ms <= merged[fi].end_ms();
    if (!inside) saccades.push_back(s);
  }

  for (const auto& f : merged) {
    if (f.duration_ms + 1e-9 >= params.min_fixation_ms) out.fixations.push_back(f);
  }
  out.saccades = std::move(saccades);

  auto trial_of = [&](double t) {
    for (const auto& e : events) {
      if (t >= e.search_onset_ms && t < e.search_end_ms) return e.trial_id;
    }
    return -1;
  };
  for (auto& f : out.fixations) f.trial_id = trial_of(f.onset_ms);
  for (auto& s : out.saccades) s.trial_id = trial_of(s.onset_ms);
  return out;
}

}  // namespace gazeeg
