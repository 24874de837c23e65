#include "gazeeg/learn.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <sstream>

namespace gazeeg {

using json = nlohmann::json;

FeatureTable FeatureTable::from_vectors(std::span<const FeatureVector> vectors) {
  FeatureTable t;
  if (vectors.empty()) return t;
  t.schema = vectors.front().schema;
  const auto d = static_cast<Eigen::Index>(t.schema.size());
  t.X.resize(static_cast<Eigen::Index>(vectors.size()), d);
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    const auto& v = vectors[i];
    if (v.schema != t.schema) throw Error(ErrorCode::SchemaMismatch, "feature vectors differ in schema");
    v.check();
    t.X.row(static_cast<Eigen::Index>(i)) = v.values.transpose();
    t.labels.push_back(v.label);
    t.keys.push_back(v.keys);
  }
  return t;
}

FeatureTable FeatureTable::select(std::span<const int> rows) const {
  FeatureTable t;
  t.schema = schema;
  t.X.resize(static_cast<Eigen::Index>(rows.size()), X.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    t.X.row(static_cast<Eigen::Index>(i)) = X.row(rows[i]);
    t.labels.push_back(labels[static_cast<std::size_t>(rows[i])]);
    if (!keys.empty()) t.keys.push_back(keys[static_cast<std::size_t>(rows[i])]);
  }
  return t;
}

MinMaxScaler fit_scaler(const Matrix& train) {
  if (train.rows() == 0) throw Error(ErrorCode::TooFewSamples, "cannot fit a scaler on no rows");
  return {train.colwise().minCoeff().transpose(), train.colwise().maxCoeff().transpose()};
}

Vector apply_scaler(const MinMaxScaler& s, const Vector& v) {
  if (v.size() != s.min.size()) throw Error(ErrorCode::SchemaMismatch, "scaler width mismatch");
  Vector out(v.size());
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    const double range = s.max(j) - s.min(j);
    out(j) = range > 0.0 ? std::clamp((v(j) - s.min(j)) / range, -0.5, 1.5) : 0.0;
  }
  return out;
}

Matrix apply_scaler(const MinMaxScaler& s, const Matrix& X) {
  if (X.cols() != s.min.size()) throw Error(ErrorCode::SchemaMismatch, "scaler width mismatch");
  Matrix out(X.rows(), X.cols());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    out.row(i) = apply_scaler(s, Vector(X.row(i).transpose())).transpose();
  }
  return out;
}

namespace {

void check_unique(const std::vector<std::string>& names) {
  std::set<std::string> seen;
  for (const auto& n : names) {
    if (!seen.insert(n).second) throw Error(ErrorCode::DuplicateFeatureName, n);
  }
}

}  // namespace

FeatureVector fuse(std::span<const FeatureVector> blocks) {
  if (blocks.empty()) throw Error(ErrorCode::InvalidArgument, "nothing to fuse");
  FeatureVector out;
  out.label = blocks.front().label;
  out.keys = blocks.front().keys;
  Eigen::Index total = 0;
  for (const auto& b : blocks) total += b.values.size();
  out.values.resize(total);
  Eigen::Index at = 0;
  for (const auto& b : blocks) {
    out.values.segment(at, b.values.size()) = b.values;
    at += b.values.size();
    out.schema.insert(out.schema.end(), b.schema.begin(), b.schema.end());
  }
  check_unique(out.schema);
  return out;
}

FeatureTable fuse(std::span<const FeatureTable> blocks) {
  if (blocks.empty()) throw Error(ErrorCode::InvalidArgument, "nothing to fuse");
  FeatureTable out;
  out.labels = blocks.front().labels;
  out.keys = blocks.front().keys;
  Eigen::Index total = 0;
  for (const auto& b : blocks) {
    if (b.rows() != blocks.front().rows()) throw Error(ErrorCode::SchemaMismatch, "row counts differ");
    total += b.X.cols();
  }
  out.X.resize(blocks.front().rows(), total);
  Eigen::Index at = 0;
  for (const auto& b : blocks) {
    out.X.middleCols(at, b.X.cols()) = b.X;
    at += b.X.cols();
    out.schema.insert(out.schema.end(), b.schema.begin(), b.schema.end());
  }
  check_unique(out.schema);
  return out;
}

std::string to_string(Kernel k) {
  switch (k) {
    case Kernel::Linear: return "linear";
    case Kernel::Poly: return "poly";
    case Kernel::Rbf: return "rbf";
  }
  return "?";
}

Kernel kernel_from_string(const std::string& s) {
  if (s == "linear") return Kernel::Linear;
  if (s == "poly") return Kernel::Poly;
  if (s == "rbf") return Kernel::Rbf;
  throw Error(ErrorCode::SchemaError, "unknown kernel " + s);
}

std::string GammaSpec::to_string() const {
  switch (kind) {
    case Kind::Scale: return "scale";
    case Kind::Auto: return "auto";
    case Kind::Value: {
      std::ostringstream ss;
      ss << value;
      return ss.str();
    }
  }
  return "?";
}

GammaSpec gamma_from_string(const std::string& s) {
  if (s == "scale") return GammaSpec::scale();
  if (s == "auto") return GammaSpec::automatic();
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size() || !(v > 0.0)) throw std::invalid_argument(s);
    return GammaSpec::fixed(v);
  } catch (const std::exception&) {
    throw Error(ErrorCode::SchemaError, "bad gamma '" + s + "'");
  }
}

std::string SvmSpec::to_string() const {
  std::ostringstream ss;
  ss << gazeeg::to_string(kernel) << "(C=" << C;
  if (kernel != Kernel::Linear) ss << ",gamma=" << gamma.to_string();
  if (kernel == Kernel::Poly) ss << ",degree=" << degree;
  ss << ")";
  return ss.str();
}

double resolve_gamma(const GammaSpec& g, const Matrix& X) {
  const double d = static_cast<double>(std::max<Eigen::Index>(1, X.cols()));
  switch (g.kind) {
    case GammaSpec::Kind::Value:
      if (!(g.value > 0.0)) throw Error(ErrorCode::InvalidArgument, "gamma must be positive");
      return g.value;
    case GammaSpec::Kind::Auto: return 1.0 / d;
    case GammaSpec::Kind::Scale: {
      if (X.size() == 0) return 1.0 / d;
      const double var = (X.array() - X.mean()).square().mean();
      return var > 0.0 ? 1.0 / (d * var) : 1.0;
    }
  }
  return 1.0;
}

namespace {

Matrix kernel_from_gram(const Matrix& gram, const Vector& na, const Vector& nb, Kernel k,
                        double gamma, int degree, double coef0) {
  switch (k) {
    case Kernel::Linear: return gram;
    case Kernel::Poly: return (gamma * gram.array() + coef0).pow(degree).matrix();
    case Kernel::Rbf: {
      Matrix d2 = (-2.0 * gram).colwise() + na;
      d2.rowwise() += nb.transpose();
      return (-gamma * d2.array().max(0.0)).exp().matrix();
    }
  }
  return gram;
}

}  // namespace

Matrix kernel_matrix(const Matrix& A, const Matrix& B, Kernel k, double gamma, int degree,
                     double coef0) {
  const Matrix gram = A * B.transpose();
  return kernel_from_gram(gram, A.rowwise().squaredNorm(), B.rowwise().squaredNorm(), k, gamma,
                          degree, coef0);
}

double dual_objective(const Matrix& K, const Vector& y, const Vector& alpha) {
  const Vector ay = alpha.cwiseProduct(y);
  return alpha.sum() - 0.5 * ay.dot(K * ay);
}

namespace {

constexpr double kTau = 1e-12;

struct Violation {
  double gap = 0.0;
  int i = -1;
  int j = -1;
};

// Second-order working-set selection over gradient G of ½αᵀQα − eᵀα.
Violation select_working_set(const Matrix& K, const Vector& y, const Vector& alpha,
                             const Vector& G, double C) {
  const Eigen::Index n = y.size();
  double gmax = -std::numeric_limits<double>::infinity();
  int i = -1;
  for (Eigen::Index t = 0; t < n; ++t) {
    if (y(t) > 0) {
      if (alpha(t) < C && -G(t) >= gmax) {
        gmax = -G(t);
        i = static_cast<int>(t);
      }
    } else if (alpha(t) > 0 && G(t) >= gmax) {
      gmax = G(t);
      i = static_cast<int>(t);
    }
  }
  double gmax2 = -std::numeric_limits<double>::infinity();
  int j = -1;
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index t = 0; t < n; ++t) {
    if (y(t) > 0) {
      if (alpha(t) > 0) {
        const double diff = gmax + G(t);
        gmax2 = std::max(gmax2, G(t));
        if (i >= 0 && diff > 0) {
          double quad = K(i, i) + K(t, t) - 2.0 * y(i) * K(i, t);
          if (quad <= 0) quad = kTau;
          const double obj = -(diff * diff) / quad;
          if (obj <= best) {
            best = obj;
            j = static_cast<int>(t);
          }
        }
      }
    } else if (alpha(t) < C) {
      const double diff = gmax - G(t);
      gmax2 = std::max(gmax2, -G(t));
      if (i >= 0 && diff > 0) {
        double quad = K(i, i) + K(t, t) + 2.0 * y(i) * K(i, t);
        if (quad <= 0) quad = kTau;
        const double obj = -(diff * diff) / quad;
        if (obj <= best) {
          best = obj;
          j = static_cast<int>(t);
        }
      }
    }
  }
  return {gmax + gmax2, i, j};
}

double compute_rho(const Vector& y, const Vector& alpha, const Vector& G, double C) {
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  int n_free = 0;
  for (Eigen::Index t = 0; t < y.size(); ++t) {
    const double yg = y(t) * G(t);
    if (alpha(t) >= C) {
      if (y(t) < 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (alpha(t) <= 0) {
      if (y(t) > 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  return n_free > 0 ? sum_free / n_free : 0.5 * (ub + lb);
}

Vector gradient(const Matrix& K, const Vector& y, const Vector& alpha) {
  const Vector ay = alpha.cwiseProduct(y);
  return (y.asDiagonal() * (K * ay)) - Vector::Ones(y.size());
}

constexpr Eigen::Index kMaxPolish = 64;

// Solves the equality-constrained KKT system on the free set; keeps the
// result only if it stays inside the box and does not worsen the violation.
void polish(const Matrix& K, const Vector& y, double C, Vector& alpha, Vector& G, double tol) {
  const Eigen::Index n = y.size();
  const double eps = 1e-9 * C;
  std::vector<Eigen::Index> free;
  for (Eigen::Index t = 0; t < n; ++t) {
    if (alpha(t) > eps && alpha(t) < C - eps) free.push_back(t);
  }
  const auto f = static_cast<Eigen::Index>(free.size());
  if (f == 0 || f > kMaxPolish) return;
  Vector bound_alpha = alpha;
  for (auto t : free) bound_alpha(t) = 0.0;
  for (Eigen::Index t = 0; t < n; ++t) {
    if (bound_alpha(t) > 0.0) bound_alpha(t) = alpha(t) >= C - eps ? C : 0.0;
  }
  const Vector qb = y.asDiagonal() * (K * bound_alpha.cwiseProduct(y));

  Matrix sys = Matrix::Zero(f + 1, f + 1);
  Vector rhs(f + 1);
  for (Eigen::Index a = 0; a < f; ++a) {
    for (Eigen::Index b = 0; b < f; ++b) {
      sys(a, b) = y(free[a]) * y(free[b]) * K(free[a], free[b]);
    }
    sys(a, f) = -y(free[a]);
    sys(f, a) = y(free[a]);
    rhs(a) = 1.0 - qb(free[a]);
  }
  rhs(f) = -bound_alpha.dot(y);
  Eigen::FullPivLU<Matrix> lu(sys);
  if (lu.rank() < f + 1) return;
  const Vector sol = lu.solve(rhs);
  Vector cand = bound_alpha;
  for (Eigen::Index a = 0; a < f; ++a) {
    const double v = sol(a);
    if (!(v > 0.0) || !(v < C) || !std::isfinite(v)) return;
    cand(free[a]) = v;
  }
  const Vector g2 = gradient(K, y, cand);
  const double before = select_working_set(K, y, alpha, G, C).gap;
  const double after = select_working_set(K, y, cand, g2, C).gap;
  if (after <= std::max(before, tol) + 1e-12 &&
      dual_objective(K, y, cand) >= dual_objective(K, y, alpha) - 1e-12) {
    alpha = cand;
    G = g2;
  }
}

}  // namespace

SmoSolution solve_smo(const Matrix& K, const Vector& y, double C, const SmoOptions& opts) {
  const Eigen::Index n = y.size();
  if (K.rows() != n || K.cols() != n) throw Error(ErrorCode::InvalidArgument, "kernel size mismatch");
  if (!(C > 0.0)) throw Error(ErrorCode::InvalidArgument, "C must be positive");
  bool pos = false, neg = false;
  for (Eigen::Index t = 0; t < n; ++t) (y(t) > 0 ? pos : neg) = true;
  if (!pos || !neg) throw Error(ErrorCode::OneClassOnly, "SVM needs both classes");

  SmoSolution s;
  Vector alpha = Vector::Zero(n);
  Vector G = -Vector::Ones(n);
  if (opts.trace_objective) s.objective.push_back(0.0);
  s.converged = false;
  while (s.iterations < opts.max_iterations) {
    const auto ws = select_working_set(K, y, alpha, G, C);
    if (ws.gap < opts.tolerance || ws.j < 0) {
      s.converged = true;
      break;
    }
    const int i = ws.i;
    const int j = ws.j;
    const double old_i = alpha(i);
    const double old_j = alpha(j);
    const double qij = y(i) * y(j) * K(i, j);
    if (y(i) != y(j)) {
      double quad = K(i, i) + K(j, j) + 2.0 * qij;
      if (quad <= 0) quad = kTau;
      const double delta = (-G(i) - G(j)) / quad;
      const double diff = alpha(i) - alpha(j);
      alpha(i) += delta;
      alpha(j) += delta;
      if (diff > 0) {
        if (alpha(j) < 0) { alpha(j) = 0; alpha(i) = diff; }
      } else if (alpha(i) < 0) {
        alpha(i) = 0;
        alpha(j) = -diff;
      }
      if (diff > 0) {
        if (alpha(i) > C) { alpha(i) = C; alpha(j) = C - diff; }
      } else if (alpha(j) > C) {
        alpha(j) = C;
        alpha(i) = C + diff;
      }
    } else {
      double quad = K(i, i) + K(j, j) - 2.0 * qij;
      if (quad <= 0) quad = kTau;
      const double delta = (G(i) - G(j)) / quad;
      const double sum = alpha(i) + alpha(j);
      alpha(i) -= delta;
      alpha(j) += delta;
      if (sum > C) {
        if (alpha(i) > C) { alpha(i) = C; alpha(j) = sum - C; }
      } else if (alpha(j) < 0) {
        alpha(j) = 0;
        alpha(i) = sum;
      }
      if (sum > C) {
        if (alpha(j) > C) { alpha(j) = C; alpha(i) = sum - C; }
      } else if (alpha(i) < 0) {
        alpha(i) = 0;
        alpha(j) = sum;
      }
    }
    const double di = alpha(i) - old_i;
    const double dj = alpha(j) - old_j;
    G.array() += y.array() * (K.col(i).array() * (y(i) * di) + K.col(j).array() * (y(j) * dj));
    ++s.iterations;
    if (opts.trace_objective) s.objective.push_back(-0.5 * alpha.dot(G - Vector::Ones(n)));
  }
  if (opts.polish) {
    polish(K, y, C, alpha, G, opts.tolerance);
    if (opts.trace_objective) s.objective.push_back(-0.5 * alpha.dot(G - Vector::Ones(n)));
  }
  s.alpha = alpha;
  s.rho = compute_rho(y, alpha, G, C);
  return s;
}

double kkt_satisfied_fraction(const Vector& alpha, const Vector& y, const Vector& decision,
                              double C, double tol) {
  const Eigen::Index n = y.size();
  if (n == 0) return 1.0;
  int ok = 0;
  const double eps = 1e-9 * C;
  for (Eigen::Index t = 0; t < n; ++t) {
    const double m = y(t) * decision(t);
    bool good;
    if (alpha(t) <= eps) {
      good = m >= 1.0 - tol;
    } else if (alpha(t) >= C - eps) {
      good = m <= 1.0 + tol;
    } else {
      good = std::abs(m - 1.0) <= tol;
    }
    ok += good ? 1 : 0;
  }
  return static_cast<double>(ok) / static_cast<double>(n);
}

namespace {

Vector to_sign(std::span<const Label> labels) {
  Vector y(static_cast<Eigen::Index>(labels.size()));
  for (std::size_t i = 0; i < labels.size(); ++i) y(static_cast<Eigen::Index>(i)) = label_sign(labels[i]);
  return y;
}

FittedModel model_from_solution(const Matrix& X, const Vector& y, const SmoSolution& sol,
                                const SvmSpec& spec, double gamma) {
  FittedModel m;
  m.spec = spec;
  m.gamma = gamma;
  std::vector<Eigen::Index> sv;
  for (Eigen::Index t = 0; t < y.size(); ++t) {
    if (sol.alpha(t) > 0.0) sv.push_back(t);
  }
  m.support_vectors.resize(static_cast<Eigen::Index>(sv.size()), X.cols());
  m.dual_coef.resize(static_cast<Eigen::Index>(sv.size()));
  for (std::size_t k = 0; k < sv.size(); ++k) {
    m.support_vectors.row(static_cast<Eigen::Index>(k)) = X.row(sv[k]);
    m.dual_coef(static_cast<Eigen::Index>(k)) = sol.alpha(sv[k]) * y(sv[k]);
  }
  m.bias = -sol.rho;
  m.converged = sol.converged;
  m.iterations = sol.iterations;
  return m;
}

Vector raw_decision(const FittedModel& m, const Matrix& Xs) {
  if (m.support_vectors.rows() == 0) return Vector::Constant(Xs.rows(), m.bias);
  const Matrix k = kernel_matrix(Xs, m.support_vectors, m.spec.kernel, m.gamma, m.spec.degree,
                                 m.spec.coef0);
  return (k * m.dual_coef).array() + m.bias;
}

}  // namespace

FittedModel svm_fit(const Matrix& X, std::span<const Label> labels, const SvmSpec& spec,
                    const SmoOptions& opts) {
  if (static_cast<std::size_t>(X.rows()) != labels.size()) {
    throw Error(ErrorCode::InvalidArgument, "row and label counts differ");
  }
  const Vector y = to_sign(labels);
  const double gamma = spec.kernel == Kernel::Linear ? 0.0 : resolve_gamma(spec.gamma, X);
  const Matrix K = kernel_matrix(X, X, spec.kernel, gamma, spec.degree, spec.coef0);
  const auto sol = solve_smo(K, y, spec.C, opts);
  auto m = model_from_solution(X, y, sol, spec, gamma);
  m.scaler.min = Vector::Zero(X.cols());
  m.scaler.max = Vector::Ones(X.cols());
  return m;
}

FittedModel fit_model(const FeatureTable& train, const SvmSpec& spec, const SmoOptions& opts) {
  const auto scaler = fit_scaler(train.X);
  const Matrix Xs = apply_scaler(scaler, train.X);
  auto m = svm_fit(Xs, train.labels, spec, opts);
  m.scaler = scaler;
  m.schema = train.schema;
  return m;
}

Vector decision_function(const FittedModel& m, const Matrix& X) {
  return raw_decision(m, apply_scaler(m.scaler, X));
}

std::vector<Label> predict(const FittedModel& m, const Matrix& X) {
  const Vector d = decision_function(m, X);
  std::vector<Label> out(static_cast<std::size_t>(d.size()));
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    out[static_cast<std::size_t>(i)] = d(i) > 0.0 ? Label::Target : Label::NonTarget;
  }
  return out;
}

double accuracy(std::span<const Label> predicted, std::span<const Label> truth) {
  if (predicted.size() != truth.size()) throw Error(ErrorCode::InvalidArgument, "length mismatch");
  if (truth.empty()) return 0.0;
  std::size_t ok = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) ok += predicted[i] == truth[i] ? 1 : 0;
  return static_cast<double>(ok) / static_cast<double>(truth.size());
}

std::vector<SvmSpec> default_grid() {
  std::vector<SvmSpec> g;
  const double cs[] = {0.1, 1.0, 10.0};
  for (double c : cs) g.push_back({Kernel::Linear, c, GammaSpec::scale()});
  for (double c : cs) g.push_back({Kernel::Poly, c, GammaSpec::scale()});
  for (double c : cs) {
    for (const auto& gm : {GammaSpec::fixed(0.1), GammaSpec::fixed(1.0), GammaSpec::scale(),
                           GammaSpec::automatic()}) {
      g.push_back({Kernel::Rbf, c, gm});
    }
  }
  return g;
}

std::vector<int> stratified_folds(std::span<const Label> labels, int k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorCode::InvalidArgument, "need at least 2 folds");
  std::vector<int> fold(labels.size(), 0);
  std::mt19937_64 rng(seed);
  for (Label cls : {Label::NonTarget, Label::Target}) {
    std::vector<int> idx;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == cls) idx.push_back(static_cast<int>(i));
    }
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t r = 0; r < idx.size(); ++r) fold[static_cast<std::size_t>(idx[r])] = static_cast<int>(r % k);
  }
  return fold;
}

GridResult grid_search(const Matrix& X, std::span<const Label> labels, int folds,
                       std::uint64_t seed, const std::vector<SvmSpec>& grid,
                       const SmoOptions& opts) {
  if (grid.empty()) throw Error(ErrorCode::InvalidArgument, "empty grid");
  const Vector y = to_sign(labels);
  const auto fold_of = stratified_folds(labels, folds, seed);
  const Matrix gram = X * X.transpose();
  const Vector norms = X.rowwise().squaredNorm();

  GridResult res;
  for (const auto& spec : grid) {
    GridRow row;
    row.spec = spec;
    row.resolved_gamma = spec.kernel == Kernel::Linear ? 0.0 : resolve_gamma(spec.gamma, X);
    res.table.push_back(row);
  }

  for (int f = 0; f < folds; ++f) {
    std::vector<Eigen::Index> tr, va;
    for (std::size_t i = 0; i < fold_of.size(); ++i) {
      (fold_of[i] == f ? va : tr).push_back(static_cast<Eigen::Index>(i));
    }
    if (va.empty()) continue;
    const auto ntr = static_cast<Eigen::Index>(tr.size());
    const auto nva = static_cast<Eigen::Index>(va.size());
    Matrix g_tt(ntr, ntr), g_vt(nva, ntr), x_tr(ntr, X.cols());
    Vector n_t(ntr), n_v(nva), y_t(ntr);
    for (Eigen::Index a = 0; a < ntr; ++a) {
      for (Eigen::Index b = 0; b < ntr; ++b) g_tt(a, b) = gram(tr[a], tr[b]);
      n_t(a) = norms(tr[a]);
      y_t(a) = y(tr[a]);
      x_tr.row(a) = X.row(tr[a]);
    }
    for (Eigen::Index a = 0; a < nva; ++a) {
      for (Eigen::Index b = 0; b < ntr; ++b) g_vt(a, b) = gram(va[a], tr[b]);
      n_v(a) = norms(va[a]);
    }
    bool pos = false, neg = false;
    for (Eigen::Index a = 0; a < ntr; ++a) (y_t(a) > 0 ? pos : neg) = true;

    for (auto& row : res.table) {
      const auto& spec = row.spec;
      double acc;
      if (!pos || !neg) {
        // Degenerate inner split: constant prediction of the only class.
        const double only = pos ? 1.0 : -1.0;
        int ok = 0;
        for (auto v : va) ok += (y(v) == only) ? 1 : 0;
        acc = static_cast<double>(ok) / static_cast<double>(nva);
      } else {
        const double gamma = spec.kernel == Kernel::Linear ? 0.0 : resolve_gamma(spec.gamma, x_tr);
        const Matrix K = kernel_from_gram(g_tt, n_t, n_t, spec.kernel, gamma, spec.degree, spec.coef0);
        const auto sol = solve_smo(K, y_t, spec.C, opts);
        const Matrix Kv = kernel_from_gram(g_vt, n_v, n_t, spec.kernel, gamma, spec.degree, spec.coef0);
        const Vector dec = (Kv * sol.alpha.cwiseProduct(y_t)).array() - sol.rho;
        int ok = 0;
        for (Eigen::Index a = 0; a < nva; ++a) {
          const double pred = dec(a) > 0.0 ? 1.0 : -1.0;
          ok += pred == y(va[a]) ? 1 : 0;
        }
        acc = static_cast<double>(ok) / static_cast<double>(nva);
      }
      row.fold_accuracies.push_back(acc);
    }
  }

  for (auto& row : res.table) {
    double s = 0.0;
    for (double a : row.fold_accuracies) s += a;
    row.mean_accuracy = row.fold_accuracies.empty() ? 0.0 : s / static_cast<double>(row.fold_accuracies.size());
  }
  const GridRow* best = &res.table.front();
  for (const auto& row : res.table) {
    const double da = row.mean_accuracy - best->mean_accuracy;
    if (da > 1e-12) {
      best = &row;
      continue;
    }
    if (da < -1e-12) continue;
    if (row.spec.C != best->spec.C) {
      if (row.spec.C < best->spec.C) best = &row;
      continue;
    }
    if (row.spec.kernel != best->spec.kernel) {
      if (static_cast<int>(row.spec.kernel) < static_cast<int>(best->spec.kernel)) best = &row;
      continue;
    }
    if (row.resolved_gamma < best->resolved_gamma) best = &row;
  }
  res.best = best->spec;
  return res;
}

namespace {

json gamma_to_json(const GammaSpec& g) {
  if (g.kind == GammaSpec::Kind::Value) return g.value;
  return g.to_string();
}

GammaSpec gamma_from_json(const json& j) {
  if (j.is_number()) return GammaSpec::fixed(j.get<double>());
  return gamma_from_string(j.get<std::string>());
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

std::string model_to_json(const FittedModel& m) {
  json j;
  j["format"] = "gazeeg-svm/1";
  j["kernel"] = to_string(m.spec.kernel);
  j["C"] = m.spec.C;
  j["gamma_spec"] = gamma_to_json(m.spec.gamma);
  j["gamma"] = m.gamma;
  j["degree"] = m.spec.degree;
  j["coef0"] = m.spec.coef0;
  j["bias"] = m.bias;
  j["converged"] = m.converged;
  j["iterations"] = m.iterations;
  j["schema"] = m.schema;
  j["scaler"] = {{"min", to_std(m.scaler.min)}, {"max", to_std(m.scaler.max)}};
  j["dual_coef"] = to_std(m.dual_coef);
  json sv = json::array();
  for (Eigen::Index r = 0; r < m.support_vectors.rows(); ++r) {
    sv.push_back(to_std(m.support_vectors.row(r).transpose()));
  }
  j["support_vectors"] = sv;
  return j.dump(2) + "\n";
}

FittedModel model_from_json(const std::string& text) {
  FittedModel m;
  try {
    const auto j = json::parse(text);
    if (j.at("format").get<std::string>() != "gazeeg-svm/1") {
      throw Error(ErrorCode::SchemaError, "unsupported model format");
    }
    m.spec.kernel = kernel_from_string(j.at("kernel").get<std::string>());
    m.spec.C = j.at("C").get<double>();
    m.spec.gamma = gamma_from_json(j.at("gamma_spec"));
    m.gamma = j.at("gamma").get<double>();
    m.spec.degree = j.at("degree").get<int>();
    m.spec.coef0 = j.at("coef0").get<double>();
    m.bias = j.at("bias").get<double>();
    m.converged = j.value("converged", true);
    m.iterations = j.value("iterations", 0L);
    m.schema = j.at("schema").get<std::vector<std::string>>();
    const auto mn = j.at("scaler").at("min").get<std::vector<double>>();
    const auto mx = j.at("scaler").at("max").get<std::vector<double>>();
    m.scaler.min = Eigen::Map<const Vector>(mn.data(), static_cast<Eigen::Index>(mn.size()));
    m.scaler.max = Eigen::Map<const Vector>(mx.data(), static_cast<Eigen::Index>(mx.size()));
    const auto dc = j.at("dual_coef").get<std::vector<double>>();
    m.dual_coef = Eigen::Map<const Vector>(dc.data(), static_cast<Eigen::Index>(dc.size()));
    const auto& sv = j.at("support_vectors");
    m.support_vectors.resize(static_cast<Eigen::Index>(sv.size()), static_cast<Eigen::Index>(mn.size()));
    for (std::size_t r = 0; r < sv.size(); ++r) {
      const auto row = sv[r].get<std::vector<double>>();
      if (row.size() != mn.size()) throw Error(ErrorCode::SchemaError, "support vector width");
      for (std::size_t c = 0; c < row.size(); ++c) {
        m.support_vectors(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c];
      }
    }
    if (m.dual_coef.size() != m.support_vectors.rows()) {
      throw Error(ErrorCode::SchemaError, "dual_coef and support_vectors disagree");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("model.json: ") + e.what());
  }
  return m;
}

}  // namespace gazeeg
