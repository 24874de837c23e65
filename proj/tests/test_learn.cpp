#include "gazeeg/learn.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <set>

using namespace gazeeg;

namespace {

std::vector<Label> labels_of(std::initializer_list<int> v) {
  std::vector<Label> out;
  for (int x : v) out.push_back(x ? Label::Target : Label::NonTarget);
  return out;
}

Vector signs(const std::vector<Label>& l) {
  Vector y(static_cast<Eigen::Index>(l.size()));
  for (std::size_t i = 0; i < l.size(); ++i) y(static_cast<Eigen::Index>(i)) = label_sign(l[i]);
  return y;
}

}  // namespace

TEST_CASE("min-max scaler maps the training range to the unit interval") {
  Matrix X(3, 2);
  X << 0, 5, 5, 5, 10, 5;
  const auto s = fit_scaler(X);
  const Matrix Y = apply_scaler(s, X);
  CHECK(Y(0, 0) == 0.0);
  CHECK(Y(1, 0) == 0.5);
  CHECK(Y(2, 0) == 1.0);
  CHECK(Y.col(1).isZero());
  Matrix Z(1, 2);
  Z << 100, 7;
  const Matrix Zs = apply_scaler(s, Z);
  CHECK(Zs(0, 0) == 1.5);
  CHECK(Zs(0, 1) == 0.0);
}

TEST_CASE("fusion rejects duplicate feature names") {
  FeatureVector a, b;
  a.values = Vector::Ones(1);
  a.schema = {"x"};
  b.values = Vector::Ones(2);
  b.schema = {"y", "x"};
  const std::vector<FeatureVector> blocks = {a, b};
  try {
    fuse(blocks);
    FAIL("expected DuplicateFeatureName");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DuplicateFeatureName);
  }
  b.schema = {"y", "z"};
  const std::vector<FeatureVector> ok = {a, b};
  const auto f = fuse(ok);
  CHECK(f.schema == std::vector<std::string>{"x", "y", "z"});
}

TEST_CASE("default grid has eighteen cells in canonical order") {
  const auto g = default_grid();
  REQUIRE(g.size() == 18);
  CHECK(g[0].kernel == Kernel::Linear);
  CHECK(g[3].kernel == Kernel::Poly);
  CHECK(g[6].kernel == Kernel::Rbf);
  std::set<std::string> names;
  for (const auto& s : g) names.insert(s.to_string());
  CHECK(names.size() == 18);
}

TEST_CASE("smo matches the enumerated dual on four-point problems") {
  Matrix X(4, 2);
  X << 0.1, 0.2, 0.9, 0.35, 0.3, 0.8, 0.75, 0.95;
  const auto labels = labels_of({0, 1, 0, 1});
  const Vector y = signs(labels);
  for (const auto& spec : default_grid()) {
    CAPTURE(spec.to_string());
    const auto model = svm_fit(X, labels, spec);
    const Matrix K = kernel_matrix(X, X, spec.kernel, model.gamma, spec.degree, spec.coef0);
    const auto ref = oracle::enumerate_dual(K, y, spec.C);
    REQUIRE(ref.found);
    const Vector expected = K * ref.alpha.cwiseProduct(y) + Vector::Constant(4, ref.b);
    const Vector got = decision_function(model, X);
    for (Eigen::Index i = 0; i < 4; ++i) CHECK(std::abs(got(i) - expected(i)) <= 1e-4);
    std::set<int> ref_sv, got_sv;
    for (Eigen::Index i = 0; i < 4; ++i) {
      if (ref.alpha(i) > 1e-8) ref_sv.insert(static_cast<int>(i));
      for (Eigen::Index r = 0; r < model.support_vectors.rows(); ++r) {
        if ((model.support_vectors.row(r) - X.row(i)).norm() < 1e-12) got_sv.insert(static_cast<int>(i));
      }
    }
    CHECK(ref_sv == got_sv);
  }
}

TEST_CASE("rbf separates xor") {
  Matrix X(4, 2);
  X << 0, 0, 1, 1, 0, 1, 1, 0;
  const auto labels = labels_of({0, 0, 1, 1});
  SvmSpec spec;
  spec.kernel = Kernel::Rbf;
  spec.C = 10;
  spec.gamma = GammaSpec::fixed(1.0);
  const auto m = svm_fit(X, labels, spec);
  CHECK(accuracy(predict(m, X), labels) == 1.0);
}

TEST_CASE("svm fitting is deterministic") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  Matrix X(40, 3);
  std::vector<Label> labels;
  for (int i = 0; i < 40; ++i) {
    for (int c = 0; c < 3; ++c) X(i, c) = nd(rng) + (i % 2 ? 0.8 : 0.0);
    labels.push_back(i % 2 ? Label::Target : Label::NonTarget);
  }
  SvmSpec spec;
  const auto a = svm_fit(X, labels, spec);
  const auto b = svm_fit(X, labels, spec);
  CHECK((decision_function(a, X) - decision_function(b, X)).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("smo reaches the kkt conditions") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  Matrix X(60, 2);
  Vector y(60);
  for (int i = 0; i < 60; ++i) {
    y(i) = i % 2 ? 1.0 : -1.0;
    X(i, 0) = nd(rng) + y(i);
    X(i, 1) = nd(rng);
  }
  const Matrix K = kernel_matrix(X, X, Kernel::Rbf, 0.5, 3, 1.0);
  const auto sol = solve_smo(K, y, 1.0);
  CHECK(sol.converged);
  const Vector dec = (K * sol.alpha.cwiseProduct(y)).array() - sol.rho;
  CHECK(kkt_satisfied_fraction(sol.alpha, y, dec, 1.0, 1e-2) == 1.0);
  CHECK(std::abs(sol.alpha.dot(y)) < 1e-9);
  CHECK(sol.alpha.minCoeff() >= 0.0);
  CHECK(sol.alpha.maxCoeff() <= 1.0);
}

TEST_CASE("one-class training is rejected") {
  Matrix X = Matrix::Random(5, 2);
  const auto labels = labels_of({1, 1, 1, 1, 1});
  try {
    svm_fit(X, labels, SvmSpec{});
    FAIL("expected OneClassOnly");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::OneClassOnly);
  }
}

TEST_CASE("stratified folds spread each class evenly") {
  std::vector<Label> labels;
  for (int i = 0; i < 53; ++i) labels.push_back(i < 20 ? Label::Target : Label::NonTarget);
  const auto folds = stratified_folds(labels, 5, 9);
  REQUIRE(folds.size() == labels.size());
  for (int f = 0; f < 5; ++f) {
    int t = 0, n = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (folds[i] != f) continue;
      (labels[i] == Label::Target ? t : n)++;
    }
    CHECK(t == 4);
    CHECK(n >= 6);
    CHECK(n <= 7);
  }
  CHECK(stratified_folds(labels, 5, 9) == folds);
}

TEST_CASE("grid search prefers the simplest cell on ties") {
  Matrix X(20, 1);
  std::vector<Label> labels;
  for (int i = 0; i < 20; ++i) {
    X(i, 0) = i < 10 ? 0.0 : 1.0;
    labels.push_back(i < 10 ? Label::NonTarget : Label::Target);
  }
  const auto g = grid_search(X, labels, 5, 1);
  CHECK(g.table.size() == 18);
  CHECK(g.best.kernel == Kernel::Linear);
  CHECK(g.best.C == 0.1);
}

TEST_CASE("model json round trip keeps the decision function") {
  Matrix X(6, 2);
  X << 0, 0, 1, 0, 0, 1, 3, 3, 4, 3, 3, 4;
  const auto labels = labels_of({0, 0, 0, 1, 1, 1});
  FeatureTable t;
  t.X = X;
  t.labels = labels;
  t.schema = {"a", "b"};
  auto m = fit_model(t, SvmSpec{});
  m.schema = t.schema;
  const auto back = model_from_json(model_to_json(m));
  CHECK(back.schema == m.schema);
  CHECK((decision_function(back, X) - decision_function(m, X)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(model_from_json("{\"format\": \"other\"}"), Error);
}
