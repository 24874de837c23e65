#include "gazeeg/eeg.hpp"

#include "gazeeg/filter.hpp"
#include "gazeeg/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace gazeeg {

EegMatrix bandpass_chain(const EegMatrix& x, const FilterChainConfig& cfg) {
  const double fs = x.rate_hz;
  if (fs < 200.0) {
    throw Error(ErrorCode::FilterDesignError, "sampling rate must be >= 200 Hz");
  }
  const auto hp = butter_highpass(cfg.order, cfg.highpass_hz, fs);
  const auto bs = butter_bandstop(cfg.order, cfg.notch_low_hz, cfg.notch_high_hz, fs);
  const auto lp = butter_lowpass(cfg.order, cfg.lowpass_hz, fs);
  EegMatrix out = x;
  for (Eigen::Index r = 0; r < x.values.rows(); ++r) {
    Vector row = x.values.row(r).transpose();
    row = sosfiltfilt(hp, row);
    row = sosfiltfilt(bs, row);
    row = sosfiltfilt(lp, row);
    out.values.row(r) = row.transpose();
  }
  return out;
}

std::vector<int> detect_bad_channels(const EegMatrix& x, const BadChannelConfig& cfg) {
  const Eigen::Index nch = x.values.rows();
  const Eigen::Index n = x.values.cols();
  std::vector<int> bad;
  if (nch == 0 || n == 0) return bad;
  const auto win = std::clamp<Eigen::Index>(std::llround(cfg.window_s * x.rate_hz), 2, n);
  const Eigen::Index n_windows = std::max<Eigen::Index>(1, n / win);
  std::vector<int> flagged(static_cast<std::size_t>(nch), 0);

  for (Eigen::Index w = 0; w < n_windows; ++w) {
    const Eigen::Index start = w * win;
    const Eigen::Index len = (w == n_windows - 1) ? n - start : win;
    Matrix seg = x.values.middleCols(start, len);
    seg.colwise() -= seg.rowwise().mean();
    const Vector norms = seg.rowwise().norm();
    const Matrix gram = seg * seg.transpose();
    for (Eigen::Index i = 0; i < nch; ++i) {
      double best = 0.0;
      for (Eigen::Index j = 0; j < nch; ++j) {
        if (i == j || !(norms(i) > 0.0) || !(norms(j) > 0.0)) continue;
        best = std::max(best, std::abs(gram(i, j)) / (norms(i) * norms(j)));
      }
      if (best < cfg.correlation_threshold) ++flagged[static_cast<std::size_t>(i)];
    }
  }
  for (Eigen::Index i = 0; i < nch; ++i) {
    if (flagged[static_cast<std::size_t>(i)] > cfg.bad_fraction * static_cast<double>(n_windows)) {
      bad.push_back(static_cast<int>(i));
    }
  }
  return bad;
}

namespace {

// Perrin et al. spherical spline kernel evaluated at cos(angle).
double spline_kernel(double cosang, int order, int terms) {
  cosang = std::clamp(cosang, -1.0, 1.0);
  double p_prev = 1.0;     // P0
  double p_cur = cosang;   // P1
  double sum = 0.0;
  for (int n = 1; n <= terms; ++n) {
    if (n > 1) {
      const double p_next = ((2.0 * n - 1.0) * cosang * p_cur - (n - 1.0) * p_prev) / n;
      p_prev = p_cur;
      p_cur = p_next;
    }
    const double nn = static_cast<double>(n);
    sum += (2.0 * nn + 1.0) / std::pow(nn * (nn + 1.0), order) * p_cur;
  }
  return sum / (4.0 * std::numbers::pi);
}

}  // namespace

EegMatrix interpolate_spherical(const EegMatrix& x, const std::vector<int>& bad,
                                const Montage& montage, const SplineConfig& cfg) {
  if (bad.empty()) return x;
  const auto nch = static_cast<int>(x.values.rows());
  std::vector<bool> is_bad(static_cast<std::size_t>(nch), false);
  for (int b : bad) {
    if (b < 0 || b >= nch) throw Error(ErrorCode::InvalidArgument, "bad channel index out of range");
    is_bad[static_cast<std::size_t>(b)] = true;
  }
  std::vector<int> good;
  for (int c = 0; c < nch; ++c) {
    if (!is_bad[static_cast<std::size_t>(c)]) good.push_back(c);
  }
  if (good.size() < 4) {
    throw Error(ErrorCode::TooFewChannels, "spherical interpolation needs >= 4 good channels");
  }
  auto pos = [&](int c) -> Eigen::Vector3d {
    const auto it = montage.find(x.channels[static_cast<std::size_t>(c)]);
    if (it == montage.end()) {
      throw Error(ErrorCode::SchemaError, "montage lacks channel " + x.channels[static_cast<std::size_t>(c)]);
    }
    return it->second.normalized();
  };
  const auto k = static_cast<Eigen::Index>(good.size());
  const auto nb = static_cast<Eigen::Index>(bad.size());

  // [G + ridge·I, 1; 1ᵀ, 0] [c; c0] = [v; 0]
  Matrix system = Matrix::Zero(k + 1, k + 1);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      system(i, j) = spline_kernel(pos(good[i]).dot(pos(good[j])), cfg.order, cfg.legendre_terms);
    }
    system(i, i) += cfg.ridge;
    system(i, k) = 1.0;
    system(k, i) = 1.0;
  }
  Matrix eval(nb, k + 1);
  for (Eigen::Index b = 0; b < nb; ++b) {
    for (Eigen::Index j = 0; j < k; ++j) {
      eval(b, j) = spline_kernel(pos(bad[b]).dot(pos(good[j])), cfg.order, cfg.legendre_terms);
    }
    eval(b, k) = 1.0;
  }
  // interp = eval · system⁻¹ restricted to the data columns.
  const Matrix weights =
      system.transpose().fullPivLu().solve(eval.transpose()).transpose().leftCols(k);

  Matrix good_data(k, x.values.cols());
  for (Eigen::Index j = 0; j < k; ++j) good_data.row(j) = x.values.row(good[j]);
  const Matrix filled = weights * good_data;
  EegMatrix out = x;
  for (Eigen::Index b = 0; b < nb; ++b) out.values.row(bad[b]) = filled.row(b);
  return out;
}

double off_diagonal_mass(std::span<const Matrix> mats) {
  double s = 0.0;
  for (const auto& m : mats) s += m.squaredNorm() - m.diagonal().squaredNorm();
  return s;
}

SobiResult sobi_unmix(const Matrix& x, const SobiConfig& cfg) {
  const Eigen::Index nch = x.rows();
  const Eigen::Index n = x.cols();
  if (nch < 1 || n <= cfg.n_lags + 1 || cfg.n_lags < 1) {
    throw Error(ErrorCode::InvalidArgument, "SOBI needs more samples than lags");
  }
  SobiResult r;
  r.mean = x.rowwise().mean();
  const Matrix xc = x.colwise() - r.mean;

  const Matrix cov = (xc * xc.transpose()) / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  const Vector evals = eig.eigenvalues();
  const double top = evals.maxCoeff();
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = nch - 1; i >= 0; --i) {
    if (evals(i) > cfg.rank_tolerance * top && evals(i) > 0.0) keep.push_back(i);
  }
  const auto k = static_cast<Eigen::Index>(keep.size());
  if (k == 0) throw Error(ErrorCode::DegenerateSignal, "SOBI input has zero variance");
  Matrix whitener(k, nch);
  Matrix dewhitener(nch, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const double s = std::sqrt(evals(keep[i]));
    whitener.row(i) = eig.eigenvectors().col(keep[i]).transpose() / s;
    dewhitener.col(i) = eig.eigenvectors().col(keep[i]) * s;
  }
  const Matrix z = whitener * xc;

  std::vector<Matrix> lagged;
  lagged.reserve(static_cast<std::size_t>(cfg.n_lags));
  for (int tau = 1; tau <= cfg.n_lags; ++tau) {
    const Eigen::Index m = n - tau;
    Matrix c = (z.leftCols(m) * z.rightCols(m).transpose()) / static_cast<double>(m);
    lagged.push_back(0.5 * (c + c.transpose()));
  }

  Matrix v = Matrix::Identity(k, k);
  double off = off_diagonal_mass(lagged);
  r.off_diagonal.push_back(off);
  r.converged = false;
  for (int sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
    bool rotated = false;
    for (Eigen::Index p = 0; p < k - 1; ++p) {
      for (Eigen::Index q = p + 1; q < k; ++q) {
        double g00 = 0, g01 = 0, g11 = 0;
        for (const auto& m : lagged) {
          const double h0 = m(p, p) - m(q, q);
          const double h1 = m(p, q) + m(q, p);
          g00 += h0 * h0;
          g01 += h0 * h1;
          g11 += h1 * h1;
        }
        const double ton = g00 - g11;
        const double toff = 2.0 * g01;
        const double theta = 0.5 * std::atan2(toff, ton + std::hypot(ton, toff));
        const double c = std::cos(theta);
        const double s = std::sin(theta);
        if (std::abs(s) < 1e-12) continue;
        rotated = true;
        for (auto& m : lagged) {
          const Vector rp = m.row(p);
          m.row(p) = c * rp.transpose() + s * m.row(q);
          m.row(q) = c * m.row(q) - s * rp.transpose();
          const Vector cp = m.col(p);
          m.col(p) = c * cp + s * m.col(q);
          m.col(q) = c * m.col(q) - s * cp;
        }
        const Vector vp = v.col(p);
        v.col(p) = c * vp + s * v.col(q);
        v.col(q) = c * v.col(q) - s * vp;
      }
    }
    r.sweeps = sweep + 1;
    const double new_off = off_diagonal_mass(lagged);
    r.off_diagonal.push_back(new_off);
    const double rel = off > 0.0 ? (off - new_off) / off : 0.0;
    off = new_off;
    if (!rotated || rel < cfg.tolerance) {
      r.converged = true;
      break;
    }
  }

  r.unmixing = v.transpose() * whitener;
  r.mixing = dewhitener * v;
  r.sources = r.unmixing * xc;
  return r;
}

ArtifactResult reject_artifact_components(const SobiResult& sobi, const EegMatrix& x,
                                          const ArtifactConfig& cfg) {
  std::vector<Eigen::Index> frontal;
  for (const auto& name : cfg.frontal_channels) {
    const auto it = std::find(x.channels.begin(), x.channels.end(), name);
    if (it != x.channels.end()) frontal.push_back(it - x.channels.begin());
  }
  Vector ocular;
  if (!frontal.empty()) {
    ocular = Vector::Zero(x.values.cols());
    for (auto c : frontal) ocular += x.values.row(c).transpose();
    ocular /= static_cast<double>(frontal.size());
  }

  const Eigen::Index k = sobi.sources.rows();
  std::vector<Eigen::Index> keep;
  ArtifactResult out;
  for (Eigen::Index i = 0; i < k; ++i) {
    const Vector s = sobi.sources.row(i).transpose();
    const bool eye = ocular.size() > 0 && std::abs(pearson(s, ocular)) > cfg.ocular_correlation;
    const bool spiky = excess_kurtosis(s) > cfg.kurtosis;
    if (eye || spiky) {
      out.rejected.push_back(static_cast<int>(i));
    } else {
      keep.push_back(i);
    }
  }
  if (keep.empty()) throw Error(ErrorCode::AllRejected, "every component met a rejection rule");

  Matrix a(sobi.mixing.rows(), static_cast<Eigen::Index>(keep.size()));
  Matrix s(static_cast<Eigen::Index>(keep.size()), sobi.sources.cols());
  for (std::size_t j = 0; j < keep.size(); ++j) {
    a.col(static_cast<Eigen::Index>(j)) = sobi.mixing.col(keep[j]);
    s.row(static_cast<Eigen::Index>(j)) = sobi.sources.row(keep[j]);
  }
  out.cleaned = x;
  out.cleaned.values = (a * s).colwise() + sobi.mean;
  return out;
}

EegMatrix preprocess(const EegMatrix& raw, const Montage& montage, const PreprocessConfig& cfg,
                     PreprocessReport* report) {
  EegMatrix x = bandpass_chain(raw, cfg.filter);
  const auto bad = detect_bad_channels(x, cfg.bad);
  x = interpolate_spherical(x, bad, montage, cfg.spline);
  x = common_average_reference(x);
  PreprocessReport rep;
  for (int b : bad) rep.bad_channels.push_back(x.channels[static_cast<std::size_t>(b)]);
  if (cfg.run_ica) {
    const auto sobi = sobi_unmix(x.values, cfg.sobi);
    rep.sobi_sweeps = sobi.sweeps;
    rep.sobi_converged = sobi.converged;
    auto cleaned = reject_artifact_components(sobi, x, cfg.artifact);
    rep.rejected_components = cleaned.rejected;
    x = std::move(cleaned.cleaned);
  }
  if (report) *report = std::move(rep);
  return x;
}

EpochSet epoch_fixations(const EegMatrix& x, std::span<const Fixation> fixations) {
  EpochSet out;
  const Eigen::Index n = x.n_frames();
  for (std::size_t i = 0; i < fixations.size(); ++i) {
    const auto& f = fixations[i];
    const auto len = static_cast<Eigen::Index>(std::llround(f.duration_ms * x.rate_hz / 1000.0));
    const Eigen::Index start = frame_range(x.t_ms, f.onset_ms, f.onset_ms).first;
    if (n == 0 || len < 1 || f.onset_ms < x.t_ms(0) || start + len > n) {
      ++out.skipped;
      continue;
    }
    Epoch e;
    e.data = x.values.middleCols(start, len);
    e.onset_ms = f.onset_ms;
    e.duration_ms = f.duration_ms;
    e.trial_id = f.trial_id;
    e.kind = EpochKind::Fixation;
    e.source_index = static_cast<int>(i);
    out.epochs.push_back(std::move(e));
  }
  return out;
}

EpochSet epoch_srp(const EegMatrix& x, std::span<const Saccade> saccades,
                   std::span<const Fixation> fixations, double length_ms, double max_lead_gap_ms) {
  EpochSet out;
  const Eigen::Index n = x.n_frames();
  const auto len = static_cast<Eigen::Index>(std::llround(length_ms * x.rate_hz / 1000.0));
  for (std::size_t i = 0; i < fixations.size(); ++i) {
    const auto& f = fixations[i];
    // Latest saccade ending at or before the fixation onset.
    const Saccade* lead = nullptr;
    for (const auto& s : saccades) {
      if (s.offset_ms <= f.onset_ms + 1e-6) {
        if (!lead || s.offset_ms > lead->offset_ms) lead = &s;
      }
    }
    if (!lead || f.onset_ms - lead->offset_ms > max_lead_gap_ms) {
      ++out.skipped;
      continue;
    }
    const double t0 = lead->midpoint_ms();
    const Eigen::Index start = frame_range(x.t_ms, t0, t0).first;
    if (n == 0 || t0 < x.t_ms(0) || start + len > n) {
      ++out.skipped;
      continue;
    }
    Epoch e;
    e.data = x.values.middleCols(start, len);
    e.onset_ms = t0;
    e.duration_ms = length_ms;
    e.trial_id = f.trial_id;
    e.kind = EpochKind::Saccade;
    e.source_index = static_cast<int>(i);
    out.epochs.push_back(std::move(e));
  }
  return out;
}

}  // namespace gazeeg
