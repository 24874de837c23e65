#include "gazeeg/eval.hpp"

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <random>
#include <set>

using namespace gazeeg;

namespace {

Fixation fix_at(double onset, double x, double y) {
  Fixation f;
  f.onset_ms = onset;
  f.duration_ms = 150.0;
  f.centroid_px = {x, y};
  return f;
}

TrialEvent trial(int id, double t0, double t1, Outcome outcome = Outcome::Clicked) {
  TrialEvent ev;
  ev.trial_id = id;
  ev.search_onset_ms = t0;
  ev.search_end_ms = t1;
  ev.target_bbox = {100, 100, 200, 200};
  ev.outcome = outcome;
  ev.scene_domain = id % 2 ? SceneDomain::Desktop : SceneDomain::Workshop;
  return ev;
}

/// Hand-built participant: `n` rows alternating class, 4-channel epochs of 60
/// frames. With `signal` the target epochs carry extra variance on channel 0
/// and longer durations.
ParticipantData fake_participant(const std::string& pid, int n, bool signal, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  ParticipantData pd;
  pd.participant_id = pid;
  pd.channels = {"Cz", "Pz", "O1", "O2"};
  pd.fs_hz = 500.0;
  pd.gaze.resize(n, 1);
  pd.pyeeg.resize(n, 2);
  pd.srp_features.resize(n, 2);
  pd.pyeeg_schema = {"Cz.a", "Cz.b"};
  pd.srp_schema = {"Cz.s0", "Cz.s1"};
  for (int i = 0; i < n; ++i) {
    LabeledFixation lf;
    lf.participant_id = pid;
    lf.trial_id = i / 2;
    lf.label = i % 2 ? Label::Target : Label::NonTarget;
    lf.scene_domain = (i / 2) % 2 ? SceneDomain::Desktop : SceneDomain::Workshop;
    lf.object_count = 3 + (i / 2) % 3;
    pd.labeled.push_back(lf);
    Epoch e;
    e.data.resize(4, 60);
    for (Eigen::Index c = 0; c < 4; ++c) {
      for (Eigen::Index s = 0; s < 60; ++s) e.data(c, s) = nd(rng);
    }
    const bool t = signal && lf.label == Label::Target;
    if (t) e.data.row(0) *= 3.0;
    e.label = lf.label;
    e.participant_id = pid;
    pd.frp.push_back(e);
    e.kind = EpochKind::Saccade;
    pd.srp.push_back(e);
    pd.gaze(i, 0) = 200.0 + 30.0 * nd(rng) + (t ? 80.0 : 0.0);
    pd.pyeeg.row(i) << nd(rng), nd(rng);
    pd.srp_features.row(i) << nd(rng) + (t ? 2.0 : 0.0), nd(rng);
  }
  pd.n_labeled = n;
  return pd;
}

EvalDataset fake_dataset(int participants, int rows, bool signal, std::uint64_t seed = 1) {
  std::vector<ParticipantData> parts;
  for (int p = 0; p < participants; ++p) {
    parts.push_back(fake_participant("P0" + std::to_string(p + 1), rows, signal, seed * 100 + p));
  }
  return assemble_dataset(std::move(parts));
}

EvalConfig small_eval() {
  EvalConfig cfg;
  cfg.folds = 3;
  cfg.inner_folds = 2;
  cfg.csp_components = 2;
  return cfg;
}

}  // namespace

TEST_CASE("labeling keeps fixations up to the first one in the box") {
  const std::vector<Fixation> fx = {fix_at(10, 500, 500), fix_at(120, 150, 150), fix_at(300, 150, 150),
                                    fix_at(1100, 500, 500), fix_at(2100, 50, 50), fix_at(2200, 150, 150)};
  const std::vector<TrialEvent> ev = {trial(0, 0, 1000), trial(1, 1000, 2000, Outcome::Skipped),
                                      trial(2, 2000, 3000)};
  const auto l = label_fixations(fx, ev, "P01");
  REQUIRE(l.size() == 4);
  CHECK(l[0].label == Label::NonTarget);
  CHECK(l[1].label == Label::Target);
  CHECK(l[1].fixation_index == 1);
  CHECK(l[2].trial_id == 2);
  CHECK(l[3].label == Label::Target);
  CHECK(l[3].scene_domain == SceneDomain::Workshop);

  LabelOptions keep;
  keep.unfound_as_nontarget = true;
  const auto k = label_fixations(fx, ev, "P01", keep);
  CHECK(k.size() == 5);
  CHECK(k[2].trial_id == 1);
  CHECK(k[2].label == Label::NonTarget);
}

TEST_CASE("balancing subsamples the larger class") {
  std::vector<Label> labels(30, Label::NonTarget);
  for (int i = 0; i < 8; ++i) labels[i * 3] = Label::Target;
  std::vector<int> rows(30);
  for (int i = 0; i < 30; ++i) rows[i] = i;
  const auto b = balance_indices(labels, rows, 5);
  CHECK(b.size() == 16);
  CHECK(std::is_sorted(b.begin(), b.end()));
  CHECK(std::count_if(b.begin(), b.end(), [&](int r) { return labels[r] == Label::Target; }) == 8);
  CHECK(balance_indices(labels, rows, 5) == b);
}

TEST_CASE("canonical conditions are the seven train/test pairs") {
  const auto& c = canonical_conditions();
  REQUIRE(c.size() == 7);
  CHECK(c[0].name == "both->both");
  CHECK_FALSE(c[0].test.has_value());
  std::set<std::string> names;
  for (const auto& d : c) names.insert(d.name);
  CHECK(names.size() == 7);
  CHECK_THROWS_AS(condition_by_name("nope"), Error);
}

TEST_CASE("splits respect participants and domains") {
  const auto data = fake_dataset(6, 40, false);
  for (const auto& dc : canonical_conditions()) {
    for (auto split : {Split::WithinUser, Split::CrossUser}) {
      CAPTURE(dc.name);
      CAPTURE(to_string(split));
      const auto plan = make_splits(data.samples, split, dc, 3, 11);
      REQUIRE_FALSE(plan.folds.empty());
      for (const auto& f : plan.folds) {
        std::set<std::string> tr_p, te_p;
        int tr_t = 0, te_t = 0;
        for (int r : f.train) {
          const auto& s = data.samples[r];
          tr_p.insert(s.participant_id);
          CHECK(dc.admits_train(s.scene_domain));
          tr_t += s.label == Label::Target;
        }
        for (int r : f.test) {
          const auto& s = data.samples[r];
          te_p.insert(s.participant_id);
          CHECK(dc.admits_test(s.scene_domain));
          te_t += s.label == Label::Target;
        }
        CHECK(2 * tr_t == static_cast<int>(f.train.size()));
        CHECK(2 * te_t == static_cast<int>(f.test.size()));
        std::vector<int> both;
        std::set_intersection(f.train.begin(), f.train.end(), f.test.begin(), f.test.end(),
                              std::back_inserter(both));
        CHECK(both.empty());
        if (split == Split::CrossUser) {
          for (const auto& p : te_p) CHECK(tr_p.count(p) == 0);
        } else {
          CHECK(tr_p == std::set<std::string>{f.participant_id});
          CHECK(te_p == std::set<std::string>{f.participant_id});
        }
      }
    }
  }
}

TEST_CASE("majority baseline on balanced folds is one half") {
  const auto data = fake_dataset(4, 30, false);
  const auto plan = make_splits(data.samples, Split::CrossUser, canonical_conditions()[0], 4, 3);
  for (double a : majority_baseline(data.samples, plan)) CHECK(a == 0.5);
}

TEST_CASE("test epochs never influence the csp features of training rows") {
  auto data = fake_dataset(3, 20, true);
  std::vector<int> train, test, all;
  for (int i = 0; i < static_cast<int>(data.samples.size()); ++i) {
    (data.samples[i].participant_id == "P03" ? test : train).push_back(i);
    all.push_back(i);
  }
  const auto a = build_features(data, FeatureSet::Fusion, all, train, 2);
  for (auto& e : data.participants[2].frp) e.data *= 50.0;
  const auto b = build_features(data, FeatureSet::Fusion, all, train, 2);
  const auto n = static_cast<Eigen::Index>(train.size());
  CHECK((a.X.topRows(n) - b.X.topRows(n)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.schema == std::vector<std::string>{"csp_00", "csp_01", "fix_dur_ms"});
}

TEST_CASE("permuting test labels leaves the trained model unchanged") {
  auto data = fake_dataset(4, 30, true, 4);
  const auto plan = make_splits(data.samples, Split::CrossUser, canonical_conditions()[0], 4, 8);
  REQUIRE_FALSE(plan.folds.empty());
  const auto& fold = plan.folds.front();
  auto fit = [&](const EvalDataset& d) {
    const auto t = build_features(d, FeatureSet::Fusion, fold.train, fold.train, 2);
    const auto scaler = fit_scaler(t.X);
    auto m = svm_fit(apply_scaler(scaler, t.X), t.labels, SvmSpec{});
    m.scaler = scaler;
    return m;
  };
  const auto before = fit(data);
  std::mt19937_64 rng(12);
  std::vector<Label> test_labels;
  for (int r : fold.test) test_labels.push_back(data.samples[r].label);
  std::shuffle(test_labels.begin(), test_labels.end(), rng);
  for (std::size_t k = 0; k < fold.test.size(); ++k) {
    const int r = fold.test[k];
    const auto [p, i] = data.origin[r];
    data.samples[r].label = test_labels[k];
    data.participants[p].labeled[i].label = test_labels[k];
    data.participants[p].frp[i].label = test_labels[k];
  }
  const auto after = fit(data);
  const auto probe = build_features(data, FeatureSet::Fusion, fold.test, fold.train, 2);
  CHECK((decision_function(before, probe.X) - decision_function(after, probe.X)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("permuted labels give chance accuracy") {
  auto data = fake_dataset(6, 60, true, 9);
  std::mt19937_64 rng(77);
  std::vector<Label> perm;
  for (const auto& s : data.samples) perm.push_back(s.label);
  std::shuffle(perm.begin(), perm.end(), rng);
  for (std::size_t i = 0; i < perm.size(); ++i) {
    data.samples[i].label = perm[i];
    const auto [p, r] = data.origin[i];
    data.participants[p].labeled[r].label = perm[i];
  }
  Condition c;
  c.split = Split::CrossUser;
  c.domains = canonical_conditions()[0];
  c.features = FeatureSet::Srp;
  const auto row = run_condition(data, c, 5, small_eval());
  CHECK(std::abs(row.mean - 0.5) <= 0.1);
}

TEST_CASE("a planted class difference is learned") {
  const auto data = fake_dataset(6, 60, true, 9);
  Condition c;
  c.split = Split::CrossUser;
  c.domains = canonical_conditions()[0];
  c.features = FeatureSet::Srp;
  const auto row = run_condition(data, c, 5, small_eval());
  CHECK(row.mean >= 0.75);
  CHECK(row.fold_accuracies.size() == 3);
  CHECK(row.ci_low <= row.mean);
  CHECK(row.ci_high >= row.mean);
}

TEST_CASE("run_all covers every combination and reports round trip") {
  const auto data = fake_dataset(4, 24, true, 2);
  const auto& conds = canonical_conditions();
  const auto rows = run_all(data, conds, all_feature_sets(), 3, small_eval());
  REQUIRE(rows.size() == 70);
  CHECK(rows[0].domains.name == "both->both");
  CHECK(rows[0].features == all_feature_sets()[0]);
  CHECK(rows[5].split != rows[0].split);

  const auto csv = report_csv(rows);
  const auto back = read_report_json(report_json(rows));
  REQUIRE(back.size() == rows.size());
  CHECK(report_csv(back) == csv);
  CHECK(run_all(data, conds, all_feature_sets(), 3, small_eval()).size() == 70);
  CHECK(report_csv(run_all(data, conds, all_feature_sets(), 3, small_eval())) == csv);

  const auto dir = std::filesystem::temp_directory_path() / "gazeeg_report_test";
  std::filesystem::remove_all(dir);
  ReportOptions opts;
  opts.svg = true;
  opts.object_count = true;
  write_report(rows, dir, opts);
  CHECK(std::filesystem::exists(dir / "report.csv"));
  CHECK(std::filesystem::exists(dir / "report.json"));
  try {
    write_report({}, dir);
    FAIL("expected NothingToReport");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NothingToReport);
  }
}

TEST_CASE("published reference values are attached to their rows") {
  const auto& bb = canonical_conditions()[0];
  CHECK(published_reference(Split::CrossUser, bb, FeatureSet::Fusion) == 0.836);
  CHECK(published_reference(Split::WithinUser, bb, FeatureSet::Gaze) == 0.708);
  CHECK_FALSE(published_reference(Split::CrossUser, canonical_conditions()[1], FeatureSet::Fusion).has_value());
}
