#pragma once

#include "gazeeg/features.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace gazeeg {

/// Row-per-sample feature matrix with a shared schema.
struct FeatureTable {
  std::vector<std::string> schema;
  Matrix X;
  std::vector<Label> labels;
  std::vector<GroupKeys> keys;

  Eigen::Index rows() const { return X.rows(); }
  static FeatureTable from_vectors(std::span<const FeatureVector> vectors);
  FeatureTable select(std::span<const int> rows) const;
};

// ---------------------------------------------------------------------------
// Scaling and fusion

struct MinMaxScaler {
  Vector min;
  Vector max;
};

MinMaxScaler fit_scaler(const Matrix& train);

/// (v − min)/(max − min) per column; constant training columns map to 0 and
/// results are clipped to [−0.5, 1.5].
Matrix apply_scaler(const MinMaxScaler& s, const Matrix& X);
Vector apply_scaler(const MinMaxScaler& s, const Vector& v);

/// Concatenation of blocks; throws DuplicateFeatureName on schema collisions.
FeatureVector fuse(std::span<const FeatureVector> blocks);
FeatureTable fuse(std::span<const FeatureTable> blocks);

// ---------------------------------------------------------------------------
// SVM

enum class Kernel { Linear = 0, Poly = 1, Rbf = 2 };

struct GammaSpec {
  enum class Kind { Value, Scale, Auto };
  Kind kind = Kind::Scale;
  double value = 0.0;

  static GammaSpec fixed(double v) { return {Kind::Value, v}; }
  static GammaSpec scale() { return {Kind::Scale, 0.0}; }
  static GammaSpec automatic() { return {Kind::Auto, 0.0}; }
  std::string to_string() const;
};

struct SvmSpec {
  Kernel kernel = Kernel::Rbf;
  double C = 1.0;
  GammaSpec gamma = GammaSpec::scale();  ///< used by rbf and poly
  int degree = 3;
  double coef0 = 1.0;

  std::string to_string() const;
};

std::string to_string(Kernel k);
Kernel kernel_from_string(const std::string& s);
GammaSpec gamma_from_string(const std::string& s);

/// scale ⇒ 1/(d·Var(X)) over all entries (1 when Var is 0); auto ⇒ 1/d.
double resolve_gamma(const GammaSpec& g, const Matrix& X);

/// Kernel matrix between rows of A and rows of B.
Matrix kernel_matrix(const Matrix& A, const Matrix& B, Kernel k, double gamma, int degree,
                     double coef0);

struct SmoOptions {
  double tolerance = 1e-3;
  long max_iterations = 100000;
  bool polish = true;
  bool trace_objective = false;
};

struct SmoSolution {
  Vector alpha;
  double rho = 0.0;  ///< decision = Σ α_i y_i K(x_i, x) − rho
  long iterations = 0;
  bool converged = false;
  std::vector<double> objective;  ///< dual objective (maximization form) per iteration
};

/// Soft-margin dual by sequential minimal optimization with second-order
/// working-set selection. `y` holds ±1. A final active-set solve refines the
/// free multipliers when that keeps them feasible.
SmoSolution solve_smo(const Matrix& K, const Vector& y, double C, const SmoOptions& opts = {});

/// Dual objective Σα − ½ αᵀQα.
double dual_objective(const Matrix& K, const Vector& y, const Vector& alpha);

/// Fraction of points meeting KKT within `tol`, given decision values.
double kkt_satisfied_fraction(const Vector& alpha, const Vector& y, const Vector& decision,
                              double C, double tol);

struct FittedModel {
  SvmSpec spec;
  double gamma = 0.0;
  Matrix support_vectors;  ///< scaled feature space
  Vector dual_coef;        ///< α_i y_i
  double bias = 0.0;
  MinMaxScaler scaler;
  std::vector<std::string> schema;
  bool converged = true;
  long iterations = 0;
};

/// Trains on already-scaled rows; the returned model carries an identity
/// scaler unless the caller attaches one.
FittedModel svm_fit(const Matrix& X, std::span<const Label> labels, const SvmSpec& spec,
                    const SmoOptions& opts = {});

/// Fits the min-max scaler on `train`, then the SVM on the scaled rows.
FittedModel fit_model(const FeatureTable& train, const SvmSpec& spec, const SmoOptions& opts = {});

/// Raw (unscaled) inputs; the model applies its own scaler.
Vector decision_function(const FittedModel& m, const Matrix& X);

/// Positive decision ⇒ target; zero or negative ⇒ nontarget.
std::vector<Label> predict(const FittedModel& m, const Matrix& X);

double accuracy(std::span<const Label> predicted, std::span<const Label> truth);

/// 3 linear + 3 poly + 3×4 rbf cells in canonical order.
std::vector<SvmSpec> default_grid();

/// Stratified k-fold assignment: fold index per row.
std::vector<int> stratified_folds(std::span<const Label> labels, int k, std::uint64_t seed);

struct GridRow {
  SvmSpec spec;
  double resolved_gamma = 0.0;
  double mean_accuracy = 0.0;
  std::vector<double> fold_accuracies;
};

struct GridResult {
  SvmSpec best;
  std::vector<GridRow> table;
};

/// Cross-validated grid search on (already scaled) training rows. Ties on
/// mean accuracy go to lower C, then linear < poly < rbf, then smaller γ.
GridResult grid_search(const Matrix& X, std::span<const Label> labels, int folds,
                       std::uint64_t seed, const std::vector<SvmSpec>& grid = default_grid(),
                       const SmoOptions& opts = {});

/// model.json round trip.
std::string model_to_json(const FittedModel& m);
FittedModel model_from_json(const std::string& text);

}  // namespace gazeeg
