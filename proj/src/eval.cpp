#include "gazeeg/eval.hpp"

#include "gazeeg/parallel.hpp"
#include "gazeeg/stats.hpp"
#include "text_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace gazeeg {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::vector<LabeledFixation> label_fixations(std::span<const Fixation> fixations,
                                             std::span<const TrialEvent> events,
                                             const std::string& participant_id,
                                             const LabelOptions& opts) {
  std::vector<LabeledFixation> out;
  for (const auto& ev : events) {
    std::vector<int> in_trial;
    for (std::size_t i = 0; i < fixations.size(); ++i) {
      const double t = fixations[i].onset_ms;
      if (t >= ev.search_onset_ms && t < ev.search_end_ms) in_trial.push_back(static_cast<int>(i));
    }
    std::stable_sort(in_trial.begin(), in_trial.end(), [&](int a, int b) {
      return fixations[static_cast<std::size_t>(a)].onset_ms < fixations[static_cast<std::size_t>(b)].onset_ms;
    });
    int target = -1;
    if (ev.outcome == Outcome::Clicked) {
      for (std::size_t k = 0; k < in_trial.size(); ++k) {
        if (ev.target_bbox.contains(fixations[static_cast<std::size_t>(in_trial[k])].centroid_px)) {
          target = static_cast<int>(k);
          break;
        }
      }
    }
    if (target < 0 && !opts.unfound_as_nontarget) continue;
    const auto stop = target < 0 ? in_trial.size() : static_cast<std::size_t>(target) + 1;
    for (std::size_t k = 0; k < stop; ++k) {
      const int i = in_trial[k];
      LabeledFixation lf;
      lf.fixation = fixations[static_cast<std::size_t>(i)];
      lf.fixation.trial_id = ev.trial_id;
      lf.label = static_cast<int>(k) == target ? Label::Target : Label::NonTarget;
      lf.participant_id = participant_id;
      lf.trial_id = ev.trial_id;
      lf.scene_domain = ev.scene_domain;
      lf.object_count = ev.object_count;
      lf.fixation_index = i;
      out.push_back(std::move(lf));
    }
  }
  return out;
}

std::vector<int> balance_indices(std::span<const Label> labels, std::span<const int> rows,
                                 std::uint64_t seed) {
  std::vector<int> cls[2];
  for (int r : rows) cls[labels[static_cast<std::size_t>(r)] == Label::Target ? 1 : 0].push_back(r);
  const std::size_t n = std::min(cls[0].size(), cls[1].size());
  std::mt19937_64 rng(seed);
  for (auto& c : cls) {
    std::sort(c.begin(), c.end());
    if (c.size() > n) {
      std::shuffle(c.begin(), c.end(), rng);
      c.resize(n);
    }
  }
  std::vector<int> out;
  out.reserve(2 * n);
  out.insert(out.end(), cls[0].begin(), cls[0].end());
  out.insert(out.end(), cls[1].begin(), cls[1].end());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<LabeledFixation> balance(std::span<const LabeledFixation> labeled, std::uint64_t seed) {
  std::vector<Label> labels;
  std::vector<int> rows;
  for (std::size_t i = 0; i < labeled.size(); ++i) {
    labels.push_back(labeled[i].label);
    rows.push_back(static_cast<int>(i));
  }
  std::vector<LabeledFixation> out;
  for (int r : balance_indices(labels, rows, seed)) out.push_back(labeled[static_cast<std::size_t>(r)]);
  return out;
}

// ---------------------------------------------------------------------------

std::string_view to_string(Split s) { return s == Split::WithinUser ? "within_user" : "cross_user"; }

std::string DomainCondition::train_label() const {
  if (train_workshop && train_desktop) return "workshop+desktop";
  return train_workshop ? "workshop" : "desktop";
}

std::string DomainCondition::test_label() const {
  return test ? std::string(to_string(*test)) : "both";
}

const std::vector<DomainCondition>& canonical_conditions() {
  static const std::vector<DomainCondition> kConds = {
      {"both->both", true, true, std::nullopt},
      {"W->W", true, false, SceneDomain::Workshop},
      {"D->W", false, true, SceneDomain::Workshop},
      {"W+D->W", true, true, SceneDomain::Workshop},
      {"D->D", false, true, SceneDomain::Desktop},
      {"W->D", true, false, SceneDomain::Desktop},
      {"W+D->D", true, true, SceneDomain::Desktop},
  };
  return kConds;
}

const DomainCondition& condition_by_name(const std::string& name) {
  for (const auto& c : canonical_conditions()) {
    if (c.name == name) return c;
  }
  throw Error(ErrorCode::ConfigError, "unknown condition '" + name + "'");
}

std::string_view to_string(FeatureSet f) {
  switch (f) {
    case FeatureSet::Gaze: return "gaze";
    case FeatureSet::Pyeeg: return "pyeeg";
    case FeatureSet::Csp15: return "csp15";
    case FeatureSet::Srp: return "srp";
    case FeatureSet::Fusion: return "fusion";
  }
  return "?";
}

FeatureSet feature_set_from_string(const std::string& s) {
  for (auto f : all_feature_sets()) {
    if (to_string(f) == s) return f;
  }
  if (s == "fusion(csp15+gaze)") return FeatureSet::Fusion;
  throw Error(ErrorCode::ConfigError, "unknown feature set '" + s + "'");
}

const std::vector<FeatureSet>& all_feature_sets() {
  static const std::vector<FeatureSet> kAll = {FeatureSet::Gaze, FeatureSet::Pyeeg, FeatureSet::Csp15,
                                               FeatureSet::Srp, FeatureSet::Fusion};
  return kAll;
}

namespace {

std::vector<int> domain_filter(std::span<const SampleInfo> samples, std::span<const int> rows,
                               bool train_side, const DomainCondition& dc) {
  std::vector<int> out;
  for (int r : rows) {
    const auto d = samples[static_cast<std::size_t>(r)].scene_domain;
    if (train_side ? dc.admits_train(d) : dc.admits_test(d)) out.push_back(r);
  }
  return out;
}

bool has_both(std::span<const SampleInfo> samples, std::span<const int> rows) {
  bool seen[2] = {false, false};
  for (int r : rows) seen[samples[static_cast<std::size_t>(r)].label == Label::Target ? 1 : 0] = true;
  return seen[0] && seen[1];
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

SplitPlan make_splits(std::span<const SampleInfo> samples, Split split,
                      const DomainCondition& domains, int k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorCode::InvalidArgument, "need at least 2 folds");
  std::vector<Label> labels;
  labels.reserve(samples.size());
  for (const auto& s : samples) labels.push_back(s.label);
  std::vector<std::string> pids;
  for (const auto& s : samples) pids.push_back(s.participant_id);
  std::sort(pids.begin(), pids.end());
  pids.erase(std::unique(pids.begin(), pids.end()), pids.end());

  SplitPlan plan;
  auto emit = [&](std::vector<int> train, std::vector<int> test, std::string pid, std::uint64_t s) {
    train = domain_filter(samples, train, true, domains);
    test = domain_filter(samples, test, false, domains);
    Fold f;
    f.train = balance_indices(labels, train, derive_seed(s, 1));
    f.test = balance_indices(labels, test, derive_seed(s, 2));
    f.participant_id = std::move(pid);
    if (has_both(samples, f.train) && has_both(samples, f.test)) plan.folds.push_back(std::move(f));
  };

  if (split == Split::WithinUser) {
    for (std::size_t p = 0; p < pids.size(); ++p) {
      std::vector<int> rows;
      std::vector<Label> sub;
      for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples[i].participant_id == pids[p]) {
          rows.push_back(static_cast<int>(i));
          sub.push_back(samples[i].label);
        }
      }
      const auto targets = std::count(sub.begin(), sub.end(), Label::Target);
      if (targets < k) {
        plan.skipped_participants.push_back(pids[p]);
        continue;
      }
      const std::uint64_t ps = derive_seed(seed, fnv1a(pids[p]));
      const auto fold_of = stratified_folds(sub, k, ps);
      for (int f = 0; f < k; ++f) {
        std::vector<int> tr, te;
        for (std::size_t j = 0; j < rows.size(); ++j) (fold_of[j] == f ? te : tr).push_back(rows[j]);
        emit(std::move(tr), std::move(te), pids[p], derive_seed(ps, static_cast<std::uint64_t>(f) + 100));
      }
    }
    if (plan.folds.empty()) {
      throw Error(ErrorCode::TooFewSamples, "no participant has enough targets for within-user folds");
    }
  } else {
    if (pids.size() < 2) throw Error(ErrorCode::TooFewSamples, "cross-user evaluation needs >= 2 participants");
    const int keff = std::min<int>(k, static_cast<int>(pids.size()));
    std::vector<std::string> order = pids;
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    std::map<std::string, int> group;
    for (std::size_t r = 0; r < order.size(); ++r) group[order[r]] = static_cast<int>(r % static_cast<std::size_t>(keff));
    for (int f = 0; f < keff; ++f) {
      std::vector<int> tr, te;
      for (std::size_t i = 0; i < samples.size(); ++i) {
        (group[samples[i].participant_id] == f ? te : tr).push_back(static_cast<int>(i));
      }
      emit(std::move(tr), std::move(te), "fold" + std::to_string(f + 1),
           derive_seed(seed, static_cast<std::uint64_t>(f) + 100));
    }
    if (plan.folds.empty()) throw Error(ErrorCode::TooFewSamples, "no usable cross-user fold");
  }
  return plan;
}

// ---------------------------------------------------------------------------

namespace {

void stack(const std::vector<FeatureVector>& v, Matrix& m, std::vector<std::string>* schema) {
  if (v.empty()) {
    m.resize(0, 0);
    return;
  }
  m.resize(static_cast<Eigen::Index>(v.size()), v.front().values.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i].values.size() != m.cols()) throw Error(ErrorCode::SchemaMismatch, "feature length differs");
    m.row(static_cast<Eigen::Index>(i)) = v[i].values.transpose();
  }
  if (schema) *schema = v.front().schema;
}

void compute_blocks(ParticipantData& pd, const PrepareConfig& cfg) {
  std::vector<FeatureVector> gz, py, sr;
  for (std::size_t i = 0; i < pd.labeled.size(); ++i) {
    gz.push_back(gaze_feature(pd.labeled[i].fixation.duration_ms));
    py.push_back(pyeeg_features(pd.frp[i], pd.channels, pd.fs_hz, cfg.pyeeg));
    sr.push_back(srp_features(pd.srp[i], pd.channels, pd.fs_hz, cfg.srp));
  }
  stack(gz, pd.gaze, nullptr);
  stack(py, pd.pyeeg, &pd.pyeeg_schema);
  stack(sr, pd.srp_features, &pd.srp_schema);
}

}  // namespace

ParticipantData prepare_participant(const Recording& rec, const PrepareConfig& cfg) {
  ParticipantData pd;
  pd.participant_id = rec.participant_id;
  pd.channels = rec.eeg.channels;
  pd.fs_hz = rec.eeg.rate_hz;

  const auto events = detect_fixations(rec.gaze, cfg.ivt, rec.screen, rec.events);
  pd.n_fixations = static_cast<int>(events.fixations.size());
  auto labeled = label_fixations(events.fixations, rec.events, rec.participant_id, cfg.labels);
  pd.n_labeled = static_cast<int>(labeled.size());

  const EegMatrix clean = preprocess(rec.eeg, rec.montage, cfg.preprocess, &pd.preprocess);
  std::vector<Fixation> fx;
  fx.reserve(labeled.size());
  for (const auto& l : labeled) fx.push_back(l.fixation);
  auto frp = epoch_fixations(clean, fx);
  auto srp = epoch_srp(clean, events.saccades, fx, cfg.srp_length_ms, cfg.srp_max_lead_gap_ms);
  pd.skipped_frp = frp.skipped;
  pd.skipped_srp = srp.skipped;

  std::vector<const Epoch*> frp_of(labeled.size(), nullptr), srp_of(labeled.size(), nullptr);
  for (const auto& e : frp.epochs) frp_of[static_cast<std::size_t>(e.source_index)] = &e;
  for (const auto& e : srp.epochs) srp_of[static_cast<std::size_t>(e.source_index)] = &e;
  const auto min_samples = std::max<Eigen::Index>(cfg.pyeeg.min_samples, clean.n_channels());

  for (std::size_t i = 0; i < labeled.size(); ++i) {
    if (!frp_of[i] || !srp_of[i] || frp_of[i]->n_samples() < min_samples) continue;
    const auto& l = labeled[i];
    Epoch f = *frp_of[i];
    Epoch s = *srp_of[i];
    for (Epoch* e : {&f, &s}) {
      e->label = l.label;
      e->trial_id = l.trial_id;
      e->participant_id = l.participant_id;
      e->scene_domain = l.scene_domain;
      e->source_index = static_cast<int>(pd.labeled.size());
    }
    pd.labeled.push_back(l);
    pd.frp.push_back(std::move(f));
    pd.srp.push_back(std::move(s));
  }
  compute_blocks(pd, cfg);
  return pd;
}

EvalDataset assemble_dataset(std::vector<ParticipantData> participants) {
  std::sort(participants.begin(), participants.end(),
            [](const auto& a, const auto& b) { return a.participant_id < b.participant_id; });
  EvalDataset ds;
  ds.participants = std::move(participants);
  for (std::size_t p = 0; p < ds.participants.size(); ++p) {
    const auto& pd = ds.participants[p];
    for (std::size_t r = 0; r < pd.labeled.size(); ++r) {
      ds.samples.push_back({pd.participant_id, pd.labeled[r].label, pd.labeled[r].scene_domain});
      ds.origin.emplace_back(static_cast<int>(p), static_cast<int>(r));
    }
  }
  return ds;
}

EvalDataset prepare_dataset(std::span<const Recording> recordings, const PrepareConfig& cfg, int jobs) {
  std::vector<ParticipantData> parts(recordings.size());
  parallel_for(recordings.size(), jobs,
               [&](std::size_t i) { parts[i] = prepare_participant(recordings[i], cfg); });
  return assemble_dataset(std::move(parts));
}

EvalDataset dataset_from_epochs(std::span<const Epoch> epochs, const std::vector<std::string>& channels,
                                double fs_hz, const PrepareConfig& cfg) {
  std::map<std::string, std::map<int, std::pair<const Epoch*, const Epoch*>>> by_pid;
  for (const auto& e : epochs) {
    auto& slot = by_pid[e.participant_id][e.source_index];
    (e.kind == EpochKind::Fixation ? slot.first : slot.second) = &e;
  }
  std::vector<ParticipantData> parts;
  for (const auto& [pid, pairs] : by_pid) {
    ParticipantData pd;
    pd.participant_id = pid;
    pd.channels = channels;
    pd.fs_hz = fs_hz;
    for (const auto& [idx, pr] : pairs) {
      if (!pr.first || !pr.second) continue;
      LabeledFixation l;
      l.fixation.onset_ms = pr.first->onset_ms;
      l.fixation.duration_ms = pr.first->duration_ms;
      l.fixation.trial_id = pr.first->trial_id;
      l.label = pr.first->label;
      l.participant_id = pid;
      l.trial_id = pr.first->trial_id;
      l.scene_domain = pr.first->scene_domain;
      l.fixation_index = idx;
      pd.labeled.push_back(l);
      pd.frp.push_back(*pr.first);
      pd.srp.push_back(*pr.second);
    }
    pd.n_labeled = static_cast<int>(pd.labeled.size());
    compute_blocks(pd, cfg);
    parts.push_back(std::move(pd));
  }
  return assemble_dataset(std::move(parts));
}

FeatureTable build_features(const EvalDataset& data, FeatureSet feature_set, std::span<const int> rows,
                            std::span<const int> fit_rows, int csp_components) {
  FeatureTable t;
  const bool csp = feature_set == FeatureSet::Csp15 || feature_set == FeatureSet::Fusion;
  CspModel model;
  if (csp) {
    std::vector<const Epoch*> fit;
    fit.reserve(fit_rows.size());
    for (int r : fit_rows) {
      const auto [p, i] = data.origin[static_cast<std::size_t>(r)];
      fit.push_back(&data.participants[static_cast<std::size_t>(p)].frp[static_cast<std::size_t>(i)]);
    }
    model = csp_fit(std::span<const Epoch* const>(fit), csp_components);
  }
  const ParticipantData* first = data.participants.empty() ? nullptr : &data.participants.front();
  switch (feature_set) {
    case FeatureSet::Gaze: t.schema = {"fix_dur_ms"}; break;
    case FeatureSet::Pyeeg: t.schema = first ? first->pyeeg_schema : std::vector<std::string>{}; break;
    case FeatureSet::Srp: t.schema = first ? first->srp_schema : std::vector<std::string>{}; break;
    case FeatureSet::Csp15:
    case FeatureSet::Fusion:
      for (int j = 0; j < csp_components; ++j) {
        char name[16];
        std::snprintf(name, sizeof name, "csp_%02d", j);
        t.schema.emplace_back(name);
      }
      if (feature_set == FeatureSet::Fusion) t.schema.emplace_back("fix_dur_ms");
      break;
  }
  t.X.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(t.schema.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto [p, i] = data.origin[static_cast<std::size_t>(rows[k])];
    const auto& pd = data.participants[static_cast<std::size_t>(p)];
    const auto row = static_cast<Eigen::Index>(k);
    const auto& lf = pd.labeled[static_cast<std::size_t>(i)];
    switch (feature_set) {
      case FeatureSet::Gaze: t.X.row(row) = pd.gaze.row(i); break;
      case FeatureSet::Pyeeg: t.X.row(row) = pd.pyeeg.row(i); break;
      case FeatureSet::Srp: t.X.row(row) = pd.srp_features.row(i); break;
      case FeatureSet::Csp15:
      case FeatureSet::Fusion: {
        const auto fv = csp_transform(model, pd.frp[static_cast<std::size_t>(i)]);
        t.X.row(row).head(csp_components) = fv.values.transpose();
        if (feature_set == FeatureSet::Fusion) t.X(row, csp_components) = pd.gaze(i, 0);
        break;
      }
    }
    t.labels.push_back(lf.label);
    t.keys.push_back({lf.participant_id, lf.trial_id, lf.scene_domain});
  }
  return t;
}

// ---------------------------------------------------------------------------

std::string EvalRow::modal_choice() const {
  std::string best;
  std::size_t best_n = 0;
  for (const auto& c : chosen) {
    const auto n = static_cast<std::size_t>(std::count(chosen.begin(), chosen.end(), c));
    if (n > best_n) {
      best = c;
      best_n = n;
    }
  }
  return best;
}

std::optional<double> published_reference(Split split, const DomainCondition& domains, FeatureSet features) {
  if (domains.name != "both->both") return std::nullopt;
  if (split == Split::CrossUser) {
    if (features == FeatureSet::Fusion) return 0.836;
    if (features == FeatureSet::Srp) return 0.569;
    return std::nullopt;
  }
  switch (features) {
    case FeatureSet::Fusion: return 0.789;
    case FeatureSet::Gaze: return 0.708;
    case FeatureSet::Csp15: return 0.725;
    case FeatureSet::Pyeeg: return 0.521;
    default: return std::nullopt;
  }
}

namespace {

std::uint64_t row_seed(std::uint64_t seed, Split split, const DomainCondition& dc) {
  return derive_seed(seed, fnv1a(std::string(to_string(split)) + "|" + dc.name));
}

}  // namespace

EvalRow run_condition(const EvalDataset& data, const Condition& condition, std::uint64_t seed,
                      const EvalConfig& cfg) {
  EvalRow row;
  row.split = condition.split;
  row.domains = condition.domains;
  row.features = condition.features;
  row.published_reference = published_reference(condition.split, condition.domains, condition.features);
  row.seed = seed;
  const std::uint64_t rs = row_seed(seed, condition.split, condition.domains);
  const auto plan = make_splits(data.samples, condition.split, condition.domains, cfg.folds, rs);
  row.skipped_participants = plan.skipped_participants;

  for (std::size_t f = 0; f < plan.folds.size(); ++f) {
    const auto& fold = plan.folds[f];
    std::vector<int> all = fold.train;
    all.insert(all.end(), fold.test.begin(), fold.test.end());
    const auto table = build_features(data, condition.features, all, fold.train, cfg.csp_components);
    const auto ntr = static_cast<Eigen::Index>(fold.train.size());
    const Matrix Xtr = table.X.topRows(ntr);
    const Matrix Xte = table.X.bottomRows(table.X.rows() - ntr);
    const std::vector<Label> ytr(table.labels.begin(), table.labels.begin() + ntr);
    const std::vector<Label> yte(table.labels.begin() + ntr, table.labels.end());

    const auto scaler = fit_scaler(Xtr);
    const Matrix Xs = apply_scaler(scaler, Xtr);
    const auto per_class = static_cast<int>(ntr / 2);
    const int inner = std::min(cfg.inner_folds, per_class);
    SvmSpec best = cfg.grid.front();
    if (inner >= 2) {
      best = grid_search(Xs, ytr, inner, derive_seed(rs, f + 500), cfg.grid, cfg.smo).best;
    }
    auto model = svm_fit(Xs, ytr, best, cfg.smo);
    model.scaler = scaler;
    model.schema = table.schema;
    const auto pred = predict(model, Xte);
    row.fold_accuracies.push_back(accuracy(pred, yte));
    row.fold_units.push_back(fold.participant_id);
    row.chosen.push_back(best.to_string());
    row.n_train += static_cast<long>(fold.train.size());
    row.n_test += static_cast<long>(fold.test.size());
    for (std::size_t k = 0; k < fold.test.size(); ++k) {
      const auto [p, i] = data.origin[static_cast<std::size_t>(fold.test[k])];
      const auto& oc = data.participants[static_cast<std::size_t>(p)].labeled[static_cast<std::size_t>(i)].object_count;
      if (!oc) continue;
      auto& cell = row.by_object_count[*oc];
      cell.first += pred[k] == yte[k] ? 1 : 0;
      cell.second += 1;
    }
  }

  if (condition.split == Split::WithinUser) {
    std::vector<std::string> order;
    for (const auto& u : row.fold_units) {
      if (std::find(order.begin(), order.end(), u) == order.end()) order.push_back(u);
    }
    for (const auto& u : order) {
      double s = 0.0;
      int n = 0;
      for (std::size_t f = 0; f < row.fold_units.size(); ++f) {
        if (row.fold_units[f] == u) {
          s += row.fold_accuracies[f];
          ++n;
        }
      }
      row.unit_means.push_back(s / n);
    }
  } else {
    row.unit_means = row.fold_accuracies;
  }
  const auto ci = mean_ci95(row.unit_means);
  row.mean = ci.mean;
  row.ci_low = ci.ci_low;
  row.ci_high = ci.ci_high;
  return row;
}

std::vector<EvalRow> run_all(const EvalDataset& data, std::span<const DomainCondition> conditions,
                             std::span<const FeatureSet> features, std::uint64_t seed,
                             const EvalConfig& cfg, int jobs) {
  std::vector<Condition> work;
  for (const auto& dc : conditions) {
    for (Split s : {Split::WithinUser, Split::CrossUser}) {
      for (FeatureSet f : features) work.push_back({s, dc, f});
    }
  }
  std::vector<EvalRow> rows(work.size());
  parallel_for(work.size(), jobs, [&](std::size_t i) { rows[i] = run_condition(data, work[i], seed, cfg); });
  return rows;
}

std::vector<double> majority_baseline(std::span<const SampleInfo> samples, const SplitPlan& plan) {
  std::vector<double> out;
  for (const auto& f : plan.folds) {
    long n_target = 0;
    for (int r : f.train) n_target += samples[static_cast<std::size_t>(r)].label == Label::Target;
    const Label majority =
        2 * n_target > static_cast<long>(f.train.size()) ? Label::Target : Label::NonTarget;
    long ok = 0;
    for (int r : f.test) ok += samples[static_cast<std::size_t>(r)].label == majority;
    out.push_back(f.test.empty() ? 0.0 : static_cast<double>(ok) / static_cast<double>(f.test.size()));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reports

namespace {

std::string f4(double v) { return detail::fmt_fixed(v, 4); }

void require_rows(std::span<const EvalRow> rows) {
  if (rows.empty()) throw Error(ErrorCode::NothingToReport, "no evaluation rows");
}

}  // namespace

std::string report_csv(std::span<const EvalRow> rows) {
  require_rows(rows);
  std::ostringstream os;
  os << "split,condition,train_domains,test_domain,feature_set,mean_accuracy,ci_low,ci_high,n_units,"
        "n_folds,n_train,n_test,hyperparameters,fold_accuracies,published_reference,seed\n";
  for (const auto& r : rows) {
    os << to_string(r.split) << ',' << r.domains.name << ',' << r.domains.train_label() << ','
       << r.domains.test_label() << ',' << to_string(r.features) << ',' << f4(r.mean) << ','
       << f4(r.ci_low) << ',' << f4(r.ci_high) << ',' << r.unit_means.size() << ','
       << r.fold_accuracies.size() << ',' << r.n_train << ',' << r.n_test << ",\""
       << r.modal_choice() << "\",";
    for (std::size_t i = 0; i < r.fold_accuracies.size(); ++i) {
      os << (i ? ";" : "") << f4(r.fold_accuracies[i]);
    }
    os << ',' << (r.published_reference ? detail::fmt_fixed(*r.published_reference, 3) : "") << ','
       << r.seed << '\n';
  }
  return os.str();
}

std::string report_json(std::span<const EvalRow> rows) {
  require_rows(rows);
  json arr = json::array();
  for (const auto& r : rows) {
    json j;
    j["split"] = to_string(r.split);
    j["condition"] = r.domains.name;
    j["train_domains"] = r.domains.train_label();
    j["test_domain"] = r.domains.test_label();
    j["feature_set"] = to_string(r.features);
    j["mean_accuracy"] = r.mean;
    j["ci95"] = {r.ci_low, r.ci_high};
    j["fold_accuracies"] = r.fold_accuracies;
    j["fold_units"] = r.fold_units;
    j["unit_means"] = r.unit_means;
    j["n_train"] = r.n_train;
    j["n_test"] = r.n_test;
    j["hyperparameters"] = r.chosen;
    j["skipped_participants"] = r.skipped_participants;
    j["published_reference"] = r.published_reference ? json(*r.published_reference) : json(nullptr);
    j["seed"] = r.seed;
    json oc = json::array();
    for (const auto& [count, cell] : r.by_object_count) oc.push_back({count, cell.first, cell.second});
    j["by_object_count"] = oc;
    arr.push_back(j);
  }
  return json{{"format", "gazeeg-report/1"}, {"rows", arr}}.dump(1) + "\n";
}

std::vector<EvalRow> read_report_json(const std::string& text) {
  std::vector<EvalRow> rows;
  try {
    const auto doc = json::parse(text);
    for (const auto& j : doc.at("rows")) {
      EvalRow r;
      r.split = j.at("split").get<std::string>() == "within_user" ? Split::WithinUser : Split::CrossUser;
      r.domains = condition_by_name(j.at("condition").get<std::string>());
      r.features = feature_set_from_string(j.at("feature_set").get<std::string>());
      r.mean = j.at("mean_accuracy").get<double>();
      r.ci_low = j.at("ci95").at(0).get<double>();
      r.ci_high = j.at("ci95").at(1).get<double>();
      r.fold_accuracies = j.at("fold_accuracies").get<std::vector<double>>();
      r.fold_units = j.at("fold_units").get<std::vector<std::string>>();
      r.unit_means = j.at("unit_means").get<std::vector<double>>();
      r.n_train = j.at("n_train").get<long>();
      r.n_test = j.at("n_test").get<long>();
      r.chosen = j.at("hyperparameters").get<std::vector<std::string>>();
      r.skipped_participants = j.at("skipped_participants").get<std::vector<std::string>>();
      if (!j.at("published_reference").is_null()) r.published_reference = j.at("published_reference").get<double>();
      r.seed = j.at("seed").get<std::uint64_t>();
      for (const auto& c : j.at("by_object_count")) {
        r.by_object_count[c.at(0).get<int>()] = {c.at(1).get<long>(), c.at(2).get<long>()};
      }
      rows.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("report.json: ") + e.what());
  }
  return rows;
}

std::string report_svg(std::span<const EvalRow> rows) {
  require_rows(rows);
  // One panel per split; bars grouped by condition, one bar per feature set.
  std::vector<std::string> conds;
  std::vector<FeatureSet> feats;
  for (const auto& r : rows) {
    if (std::find(conds.begin(), conds.end(), r.domains.name) == conds.end()) conds.push_back(r.domains.name);
    if (std::find(feats.begin(), feats.end(), r.features) == feats.end()) feats.push_back(r.features);
  }
  static const char* kColors[] = {"#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3"};
  const double bar = 14.0, gap = 18.0, panel_h = 220.0, top = 30.0, left = 50.0;
  const double group_w = static_cast<double>(feats.size()) * bar + gap;
  const double width = left + static_cast<double>(conds.size()) * group_w + 140.0;
  const double height = 2.0 * (panel_h + 60.0) + 20.0;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" font-family=\"sans-serif\" font-size=\"10\">\n";
  int panel = 0;
  for (Split s : {Split::WithinUser, Split::CrossUser}) {
    const double y0 = top + panel * (panel_h + 60.0);
    const double base = y0 + panel_h;
    os << "<text x=\"" << left << "\" y=\"" << y0 - 10 << "\" font-size=\"12\">" << to_string(s) << "</text>\n";
    os << "<line x1=\"" << left << "\" y1=\"" << base << "\" x2=\"" << width - 140 << "\" y2=\"" << base
       << "\" stroke=\"black\"/>\n";
    for (double tick : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      const double y = base - tick * panel_h;
      os << "<text x=\"" << left - 30 << "\" y=\"" << y + 3 << "\">" << detail::fmt_fixed(tick, 2) << "</text>\n";
      os << "<line x1=\"" << left << "\" y1=\"" << y << "\" x2=\"" << width - 140 << "\" y2=\"" << y
         << "\" stroke=\"#ddd\"/>\n";
    }
    for (std::size_t c = 0; c < conds.size(); ++c) {
      const double gx = left + static_cast<double>(c) * group_w + gap / 2;
      os << "<text x=\"" << gx << "\" y=\"" << base + 14 << "\">" << conds[c] << "</text>\n";
      for (std::size_t f = 0; f < feats.size(); ++f) {
        const auto it = std::find_if(rows.begin(), rows.end(), [&](const EvalRow& r) {
          return r.split == s && r.domains.name == conds[c] && r.features == feats[f];
        });
        if (it == rows.end()) continue;
        const double x = gx + static_cast<double>(f) * bar;
        const double h = std::clamp(it->mean, 0.0, 1.0) * panel_h;
        os << "<rect x=\"" << x << "\" y=\"" << base - h << "\" width=\"" << bar - 2 << "\" height=\"" << h
           << "\" fill=\"" << kColors[f % 5] << "\"/>\n";
        const double lo = base - std::clamp(it->ci_low, 0.0, 1.0) * panel_h;
        const double hi = base - std::clamp(it->ci_high, 0.0, 1.0) * panel_h;
        const double cx = x + (bar - 2) / 2;
        os << "<line x1=\"" << cx << "\" y1=\"" << lo << "\" x2=\"" << cx << "\" y2=\"" << hi
           << "\" stroke=\"black\"/>\n";
      }
    }
    ++panel;
  }
  for (std::size_t f = 0; f < feats.size(); ++f) {
    const double y = top + 12.0 * static_cast<double>(f);
    os << "<rect x=\"" << width - 120 << "\" y=\"" << y << "\" width=\"10\" height=\"10\" fill=\""
       << kColors[f % 5] << "\"/><text x=\"" << width - 105 << "\" y=\"" << y + 9 << "\">"
       << to_string(feats[f]) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string object_count_csv(std::span<const EvalRow> rows) {
  require_rows(rows);
  std::ostringstream os;
  os << "split,condition,feature_set,object_count,correct,total,accuracy\n";
  for (const auto& r : rows) {
    for (const auto& [count, cell] : r.by_object_count) {
      os << to_string(r.split) << ',' << r.domains.name << ',' << to_string(r.features) << ',' << count
         << ',' << cell.first << ',' << cell.second << ','
         << f4(static_cast<double>(cell.first) / static_cast<double>(cell.second)) << '\n';
    }
  }
  return os.str();
}

void write_report(std::span<const EvalRow> rows, const fs::path& dir, const ReportOptions& opts) {
  require_rows(rows);
  fs::create_directories(dir);
  detail::write_file(dir / "report.csv", report_csv(rows));
  detail::write_file(dir / "report.json", report_json(rows));
  if (opts.svg) detail::write_file(dir / "report.svg", report_svg(rows));
  if (opts.object_count) detail::write_file(dir / "object_count.csv", object_count_csv(rows));
}

}  // namespace gazeeg
