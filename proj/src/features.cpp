#include "gazeeg/features.hpp"

#include "gazeeg/stats.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>

namespace gazeeg {

void FeatureVector::check() const {
  if (static_cast<std::size_t>(values.size()) != schema.size()) {
    throw Error(ErrorCode::SchemaMismatch, "feature values and schema differ in length");
  }
  if (!values.allFinite()) throw Error(ErrorCode::SchemaMismatch, "non-finite feature value");
}

std::array<double, 5> band_power(const Eigen::Ref<const Vector>& x, double fs_hz) {
  std::array<double, 5> shares{};
  const Eigen::Index n = x.size();
  if (n == 0) {
    shares.fill(0.2);
    return shares;
  }
  Eigen::FFT<double> fft;
  std::vector<double> in(x.data(), x.data() + n);
  std::vector<std::complex<double>> spec;
  fft.fwd(spec, in);
  double total = 0.0;
  for (Eigen::Index k = 0; k <= n / 2; ++k) {
    const double f = static_cast<double>(k) * fs_hz / static_cast<double>(n);
    const double mag = std::abs(spec[static_cast<std::size_t>(k)]);
    for (std::size_t b = 0; b < kBands.size(); ++b) {
      const bool last = b + 1 == kBands.size();
      if (f >= kBands[b].low_hz && (f < kBands[b].high_hz || (last && f <= kBands[b].high_hz))) {
        shares[b] += mag;
        total += mag;
        break;
      }
    }
  }
  if (!(total > 0.0)) {
    shares.fill(0.2);
    return shares;
  }
  for (auto& s : shares) s /= total;
  return shares;
}

double petrosian_fd(const Eigen::Ref<const Vector>& x) {
  const Eigen::Index n = x.size();
  if (n < 3) throw Error(ErrorCode::EpochTooShort, "Petrosian FD needs >= 3 samples");
  int changes = 0;
  for (Eigen::Index i = 2; i < n; ++i) {
    const double d0 = x(i - 1) - x(i - 2);
    const double d1 = x(i) - x(i - 1);
    if (d0 * d1 < 0.0) ++changes;
  }
  const double nn = static_cast<double>(n);
  const double ln = std::log10(nn);
  return ln / (ln + std::log10(nn / (nn + 0.4 * changes)));
}

Hjorth hjorth(const Eigen::Ref<const Vector>& x) {
  const Eigen::Index n = x.size();
  if (n < 3) throw Error(ErrorCode::EpochTooShort, "Hjorth parameters need >= 3 samples");
  auto var = [](const Vector& v) { return (v.array() - v.mean()).square().mean(); };
  const Vector d1 = x.tail(n - 1) - x.head(n - 1);
  const Vector d2 = d1.tail(n - 2) - d1.head(n - 2);
  const double v0 = var(x);
  if (!(v0 > 0.0)) throw Error(ErrorCode::DegenerateSignal, "Hjorth parameters of a constant signal");
  const double v1 = var(d1);
  const double v2 = var(d2);
  Hjorth h;
  h.mobility = std::sqrt(v1 / v0);
  h.complexity = v1 > 0.0 ? std::sqrt(v2 / v1) / h.mobility : 0.0;
  return h;
}

double higuchi_fd(const Eigen::Ref<const Vector>& x, int kmax) {
  if (kmax < 2) throw Error(ErrorCode::InvalidArgument, "Higuchi FD needs kmax >= 2");
  const Eigen::Index n = x.size();
  if (n < 2 * kmax) throw Error(ErrorCode::EpochTooShort, "Higuchi FD needs >= 2*kmax samples");
  std::vector<double> lx, ly;
  for (int k = 1; k <= kmax; ++k) {
    double lk = 0.0;
    int used = 0;
    for (int m = 0; m < k; ++m) {
      const Eigen::Index steps = (n - 1 - m) / k;
      if (steps < 1) continue;
      double len = 0.0;
      for (Eigen::Index i = 1; i <= steps; ++i) len += std::abs(x(m + i * k) - x(m + (i - 1) * k));
      lk += len * static_cast<double>(n - 1) / (static_cast<double>(steps) * k) / k;
      ++used;
    }
    lk /= used;
    if (!(lk > 0.0)) throw Error(ErrorCode::DegenerateSignal, "Higuchi FD of a constant signal");
    lx.push_back(std::log(1.0 / k));
    ly.push_back(std::log(lk));
  }
  return ls_slope(lx, ly);
}

std::vector<int> dfa_window_sizes(Eigen::Index n) {
  Eigen::Index hi = n / 4;
  if (hi < 9) hi = std::min<Eigen::Index>(n / 2, 9);
  std::vector<int> sizes;
  if (hi < 4) return sizes;
  if (hi - 4 + 1 <= 10) {
    for (Eigen::Index s = 4; s <= hi; ++s) sizes.push_back(static_cast<int>(s));
    return sizes;
  }
  const double l0 = std::log(4.0);
  const double l1 = std::log(static_cast<double>(hi));
  for (int i = 0; i < 10; ++i) {
    const int s = static_cast<int>(std::lround(std::exp(l0 + (l1 - l0) * i / 9.0)));
    if (sizes.empty() || s != sizes.back()) sizes.push_back(s);
  }
  return sizes;
}

double dfa_alpha(const Eigen::Ref<const Vector>& x, std::span<const int> window_sizes) {
  if (window_sizes.size() < 3) throw Error(ErrorCode::InvalidArgument, "DFA needs >= 3 window sizes");
  const Eigen::Index n = x.size();
  Vector y(n);
  const double mean = x.mean();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    acc += x(i) - mean;
    y(i) = acc;
  }
  std::vector<double> lx, ly;
  for (int w : window_sizes) {
    if (w < 2 || w > n) throw Error(ErrorCode::InvalidArgument, "DFA window size out of range");
    const Eigen::Index nw = n / w;
    const double tm = 0.5 * (w - 1);
    const double stt = static_cast<double>(w) * (static_cast<double>(w) * w - 1.0) / 12.0;
    double ss = 0.0;
    for (Eigen::Index b = 0; b < nw; ++b) {
      const auto seg = y.segment(b * w, w);
      const double ym = seg.mean();
      double sty = 0.0;
      for (int t = 0; t < w; ++t) sty += (t - tm) * (seg(t) - ym);
      const double slope = sty / stt;
      for (int t = 0; t < w; ++t) {
        const double r = seg(t) - (ym + slope * (t - tm));
        ss += r * r;
      }
    }
    const double f = std::sqrt(ss / static_cast<double>(nw * w));
    if (!(f > 0.0)) throw Error(ErrorCode::DegenerateSignal, "DFA fluctuation is zero");
    lx.push_back(std::log(static_cast<double>(w)));
    ly.push_back(std::log(f));
  }
  return ls_slope(lx, ly);
}

Moments moments_minmaxstd(const Eigen::Ref<const Vector>& x) {
  if (x.size() == 0) throw Error(ErrorCode::EpochTooShort, "moments of an empty signal");
  const auto c = x.array() - x.mean();
  const double m2 = c.square().mean();
  if (!(m2 > 0.0)) throw Error(ErrorCode::DegenerateSignal, "moments of a constant signal");
  const double m3 = c.cube().mean();
  const double m4 = c.square().square().mean();
  Moments m;
  m.skewness = m3 / std::pow(m2, 1.5);
  m.kurtosis = m4 / (m2 * m2) - 3.0;
  m.min = x.minCoeff();
  m.max = x.maxCoeff();
  m.std = std::sqrt(m2);
  return m;
}

FeatureVector pyeeg_features(const Epoch& epoch, std::span<const std::string> channels,
                             double fs_hz, const PyeegConfig& cfg) {
  const Eigen::Index nch = epoch.n_channels();
  if (static_cast<std::size_t>(nch) != channels.size()) {
    throw Error(ErrorCode::SchemaMismatch, "epoch rows do not match channel names");
  }
  if (epoch.n_samples() < cfg.min_samples) {
    throw Error(ErrorCode::EpochTooShort, "epoch has " + std::to_string(epoch.n_samples()) +
                                              " samples, needs " + std::to_string(cfg.min_samples));
  }
  static const char* kNames[] = {"delta_psi", "theta_psi",         "alpha_psi", "beta_psi",
                                 "gamma_psi", "pfd",               "hjorth_mobility",
                                 "hjorth_complexity",              "hfd",       "dfa",
                                 "skewness",  "kurtosis",          "min",       "max",
                                 "std"};
  constexpr int kPer = 15;
  FeatureVector fv;
  fv.values.resize(nch * kPer);
  fv.schema.reserve(static_cast<std::size_t>(nch * kPer));
  const auto sizes = dfa_window_sizes(epoch.n_samples());
  for (Eigen::Index c = 0; c < nch; ++c) {
    const Vector x = epoch.data.row(c).transpose();
    const auto bp = band_power(x, fs_hz);
    const auto hj = hjorth(x);
    const auto mo = moments_minmaxstd(x);
    const double vals[kPer] = {bp[0],          bp[1],         bp[2],
                               bp[3],          bp[4],         petrosian_fd(x),
                               hj.mobility,    hj.complexity, higuchi_fd(x, cfg.higuchi_kmax),
                               dfa_alpha(x, sizes), mo.skewness, mo.kurtosis,
                               mo.min,         mo.max,        mo.std};
    for (int k = 0; k < kPer; ++k) {
      fv.values(c * kPer + k) = vals[k];
      fv.schema.push_back(channels[static_cast<std::size_t>(c)] + "." + kNames[k]);
    }
  }
  fv.label = epoch.label;
  fv.keys = {epoch.participant_id, epoch.trial_id, epoch.scene_domain};
  return fv;
}

namespace {

Matrix normalized_covariance(const Matrix& data) {
  const Matrix xc = data.colwise() - data.rowwise().mean();
  Matrix c = xc * xc.transpose();
  const double tr = c.trace();
  if (!(tr > 0.0)) throw Error(ErrorCode::SingularCovariance, "epoch with zero variance");
  return c / tr;
}

}  // namespace

CspModel csp_fit(std::span<const Epoch> epochs, int n_components) {
  std::vector<const Epoch*> ptrs;
  ptrs.reserve(epochs.size());
  for (const auto& e : epochs) ptrs.push_back(&e);
  return csp_fit(std::span<const Epoch* const>(ptrs), n_components);
}

CspModel csp_fit(std::span<const Epoch* const> epochs, int n_components) {
  if (epochs.empty()) throw Error(ErrorCode::OneClassOnly, "no epochs");
  const Eigen::Index nch = epochs.front()->n_channels();
  if (n_components < 1 || n_components > nch) {
    throw Error(ErrorCode::InvalidArgument, "CSP components must lie in [1, n_channels]");
  }
  Matrix sum[2] = {Matrix::Zero(nch, nch), Matrix::Zero(nch, nch)};
  int count[2] = {0, 0};
  for (const Epoch* ep : epochs) {
    const Epoch& e = *ep;
    if (e.n_channels() != nch) throw Error(ErrorCode::SchemaMismatch, "epochs differ in channel count");
    if (e.n_samples() < nch) {
      throw Error(ErrorCode::EpochTooShort, "CSP epochs need at least n_channels samples");
    }
    const int cls = e.label == Label::Target ? 1 : 0;
    sum[cls] += normalized_covariance(e.data);
    ++count[cls];
  }
  if (count[0] == 0 || count[1] == 0) throw Error(ErrorCode::OneClassOnly, "CSP needs both classes");
  Matrix c1 = sum[1] / count[1];
  Matrix c0 = sum[0] / count[0];
  const double n = static_cast<double>(nch);
  c1 += 1e-10 * c1.trace() / n * Matrix::Identity(nch, nch);
  c0 += 1e-10 * c0.trace() / n * Matrix::Identity(nch, nch);
  const Matrix composite = c1 + c0;

  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ges(c1, composite);
  if (ges.info() != Eigen::Success) {
    throw Error(ErrorCode::SingularCovariance, "generalized eigensolve failed");
  }
  const Vector lambda = ges.eigenvalues();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(nch));
  for (Eigen::Index i = 0; i < nch; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return std::max(lambda(a), 1.0 - lambda(a)) > std::max(lambda(b), 1.0 - lambda(b));
  });

  CspModel m;
  m.n_components = n_components;
  m.filters.resize(n_components, nch);
  m.eigenvalues.resize(n_components);
  for (int j = 0; j < n_components; ++j) {
    const Eigen::Index idx = order[static_cast<std::size_t>(j)];
    Vector w = ges.eigenvectors().col(idx);
    Eigen::Index arg = 0;
    w.cwiseAbs().maxCoeff(&arg);
    if (w(arg) < 0.0) w = -w;
    m.filters.row(j) = w.transpose();
    m.eigenvalues(j) = lambda(idx);
  }
  return m;
}

FeatureVector csp_transform(const CspModel& model, const Epoch& epoch) {
  if (epoch.n_channels() != model.filters.cols()) {
    throw Error(ErrorCode::SchemaMismatch, "epoch channel count does not match CSP model");
  }
  const Matrix proj = model.filters * epoch.data;
  FeatureVector fv;
  fv.values.resize(model.n_components);
  for (int j = 0; j < model.n_components; ++j) {
    const auto row = proj.row(j).array();
    const double var = proj.cols() > 0 ? (row - row.mean()).square().mean() : 0.0;
    fv.values(j) = std::log(std::max(var, 1e-12));
    char name[16];
    std::snprintf(name, sizeof name, "csp_%02d", j);
    fv.schema.emplace_back(name);
  }
  fv.label = epoch.label;
  fv.keys = {epoch.participant_id, epoch.trial_id, epoch.scene_domain};
  return fv;
}

FeatureVector srp_features(const Epoch& epoch, std::span<const std::string> channels,
                           double fs_hz, const SrpConfig& cfg) {
  const Eigen::Index nch = epoch.n_channels();
  if (static_cast<std::size_t>(nch) != channels.size()) {
    throw Error(ErrorCode::SchemaMismatch, "epoch rows do not match channel names");
  }
  const auto base = std::max<Eigen::Index>(1, std::llround(cfg.baseline_ms * fs_hz / 1000.0));
  const auto block = std::max<Eigen::Index>(1, std::llround(fs_hz / cfg.rate_hz));
  const Eigen::Index points = epoch.n_samples() / block;
  if (epoch.n_samples() < base || points < 1) {
    throw Error(ErrorCode::EpochTooShort, "SRP epoch shorter than its baseline");
  }
  FeatureVector fv;
  fv.values.resize(nch * points);
  for (Eigen::Index c = 0; c < nch; ++c) {
    const double b = epoch.data.row(c).head(base).mean();
    for (Eigen::Index p = 0; p < points; ++p) {
      fv.values(c * points + p) = epoch.data.row(c).segment(p * block, block).mean() - b;
      char name[64];
      std::snprintf(name, sizeof name, "%s.srp_%04dms", channels[static_cast<std::size_t>(c)].c_str(),
                    static_cast<int>(std::lround(p * block * 1000.0 / fs_hz)));
      fv.schema.emplace_back(name);
    }
  }
  fv.label = epoch.label;
  fv.keys = {epoch.participant_id, epoch.trial_id, epoch.scene_domain};
  return fv;
}

FeatureVector gaze_feature(double fixation_duration_ms) {
  FeatureVector fv;
  fv.values = Vector::Constant(1, fixation_duration_ms);
  fv.schema = {"fix_dur_ms"};
  return fv;
}

}  // namespace gazeeg
