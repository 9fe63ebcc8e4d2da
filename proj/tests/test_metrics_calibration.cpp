#include <gtest/gtest.h>

#include <cmath>

#include <nlohmann/json.hpp>

#include "ragaudit/calibration.hpp"
#include "ragaudit/errors.hpp"
#include "ragaudit/metrics.hpp"
#include "ragaudit/rng.hpp"
#include "support.hpp"

using namespace ragaudit;
using testsupport::brute_auc;

namespace {

std::vector<LabeledScore> labelled(std::vector<double> members, std::vector<double> non) {
  std::vector<LabeledScore> out;
  for (double m : members) out.push_back({m, Label::Member});
  for (double n : non) out.push_back({n, Label::NonMember});
  return out;
}

/// Average precision by walking distinct thresholds from the top.
double brute_ap(const std::vector<LabeledScore>& s) {
  std::vector<double> t;
  for (const auto& x : s) t.push_back(x.score);
  std::sort(t.begin(), t.end(), std::greater<>());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  double P = 0;
  for (const auto& x : s) P += x.label == Label::Member;
  double ap = 0.0, prev_recall = 0.0;
  for (double th : t) {
    double tp = 0, fp = 0;
    for (const auto& x : s)
      if (x.score >= th) (x.label == Label::Member ? tp : fp) += 1;
    double recall = tp / P;
    ap += (recall - prev_recall) * (tp / (tp + fp));
    prev_recall = recall;
  }
  return ap;
}

LabeledExam exam_with(const std::string& id, std::array<double, 4> acc, Label label) {
  LabeledExam e;
  e.graded.doc_id = id;
  e.graded.acc = acc;
  e.graded.counts = {7, 7, 7, 7};
  e.label = label;
  return e;
}

}  // namespace

TEST(Auc, DocumentedExamples) {
  EXPECT_DOUBLE_EQ(compute_auc_roc(labelled({0.9, 0.8}, {0.1, 0.2})), 1.0);
  EXPECT_DOUBLE_EQ(compute_auc_roc(labelled({5, 5, 5}, {5, 5})), 0.5);
  EXPECT_DOUBLE_EQ(compute_auc_roc(labelled({3, 1}, {2, 0})), 0.75);
  EXPECT_THROW(compute_auc_roc(labelled({1, 2}, {})), SingleClass);
}

TEST(Auc, MatchesBruteForceOnRandomFixtures) {
  Rng rng(99);
  for (int i = 0; i < 100; ++i) {
    auto s = testsupport::random_scores(rng);
    ASSERT_NEAR(compute_auc_roc(s), brute_auc(s), 1e-12) << "fixture " << i;
  }
}

TEST(Auc, NegatedScoresWithSwappedLabelsKeepAuc) {
  Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    auto s = testsupport::random_scores(rng);
    auto f = s;
    for (auto& x : f) {
      x.score = -x.score;
      x.label = x.label == Label::Member ? Label::NonMember : Label::Member;
    }
    ASSERT_NEAR(compute_auc_roc(f), compute_auc_roc(s), 1e-12);
  }
}

TEST(TprAtFpr, ExamplesAndBruteForce) {
  auto sep = labelled({70, 80, 90}, {10, 20});
  for (double b : kFprBudgets) EXPECT_DOUBLE_EQ(compute_tpr_at_fpr(sep, b), 1.0);
  // single non-member: the threshold has to sit above it
  EXPECT_DOUBLE_EQ(compute_tpr_at_fpr(labelled({10, 30, 50, 70}, {40}), 0.005), 0.5);
  Rng rng(17);
  for (int i = 0; i < 100; ++i) {
    auto s = testsupport::random_scores(rng);
    double prev = 0.0;
    for (double b : {0.005, 0.01, 0.05, 0.1, 0.3, 0.5}) {
      double t = compute_tpr_at_fpr(s, b);
      ASSERT_NEAR(t, testsupport::brute_tpr_at_fpr(s, b), 1e-12);
      ASSERT_GE(t, prev);
      prev = t;
    }
  }
}

TEST(TprAtFpr, EqualDistributionsTrackBudget) {
  Rng rng(2024);
  std::vector<LabeledScore> s;
  for (int i = 0; i < 10000; ++i) {
    s.push_back({rng.uniform() * 100.0, Label::Member});
    s.push_back({rng.uniform() * 100.0, Label::NonMember});
  }
  for (double b : kFprBudgets) EXPECT_NEAR(compute_tpr_at_fpr(s, b), b, 0.01);
}

TEST(AucPr, ExamplesAndBruteForce) {
  EXPECT_DOUBLE_EQ(compute_auc_pr(labelled({9, 8}, {1, 2})), 1.0);
  EXPECT_DOUBLE_EQ(compute_auc_pr(labelled({10}, {3, 2, 1})), 1.0);
  auto inverted = labelled({1, 2, 3}, {4, 5, 6});
  // hand: precision 1/4, 2/5, 3/6 at each member, averaged
  EXPECT_NEAR(compute_auc_pr(inverted), (0.25 + 0.4 + 0.5) / 3.0, 1e-12);
  EXPECT_NEAR(compute_auc_pr(inverted), brute_ap(inverted), 1e-12);
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    auto s = testsupport::random_scores(rng);
    ASSERT_NEAR(compute_auc_pr(s), brute_ap(s), 1e-12) << "fixture " << i;
  }
}

TEST(Kl, Examples) {
  std::vector<double> a = {10, 10, 60}, b = {10, 60, 60};
  EXPECT_DOUBLE_EQ(kl_divergence(a, a), 0.0);
  EXPECT_DOUBLE_EQ(kl_divergence(a, std::vector<double>{60, 10, 10}), 0.0);
  const double e = 1e-6, z = 1.0 + 20 * e;
  double p1 = (2.0 / 3 + e) / z, p2 = (1.0 / 3 + e) / z;
  double hand = p1 * std::log(p1 / p2) + p2 * std::log(p2 / p1);
  EXPECT_NEAR(kl_divergence(a, b), hand, 1e-12);
  double far = kl_divergence(std::vector<double>{0, 0, 0}, std::vector<double>{100, 100, 100});
  EXPECT_GT(far, 10.0);
  EXPECT_TRUE(std::isfinite(far));
  // 100 lands in the last bin, not past it
  EXPECT_DOUBLE_EQ(kl_divergence(std::vector<double>{100}, std::vector<double>{97}), 0.0);
}

TEST(Kl, NonNegativeOnRandomLists) {
  Rng rng(8);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> a(1 + rng.below(30)), b(1 + rng.below(30));
    for (auto& x : a) x = rng.uniform() * 100;
    for (auto& x : b) x = rng.uniform() * 100;
    ASSERT_GE(kl_divergence(a, b), 0.0);
  }
}

TEST(Metrics, BestAccuracyBeatsPrior) {
  Rng rng(12);
  for (int i = 0; i < 100; ++i) {
    auto s = testsupport::random_scores(rng);
    double m = 0;
    for (const auto& x : s) m += x.label == Label::Member;
    double prior = std::max(m, s.size() - m) / s.size();
    ASSERT_GE(best_accuracy(s).first, prior - 1e-12);
  }
}

TEST(Metrics, ReportExcludesIncompleteAndUnlabelled) {
  std::vector<AttackResult> r;
  auto add = [&](const std::string& id, double score, std::optional<Label> l, bool complete = true) {
    AttackResult a;
    a.doc_id = id;
    a.score = score;
    a.label = l;
    a.complete = complete;
    a.decision = decide(score, kDefaultTau);
    r.push_back(a);
  };
  add("m1", 90, Label::Member);
  add("m2", 70, Label::Member);
  add("m3", 40, Label::Member);
  add("n1", 10, Label::NonMember);
  add("n2", 65, Label::NonMember);
  add("x1", 99, Label::NonMember, false);
  add("u1", 50, std::nullopt);
  auto m = compute_metrics(r, kDefaultTau);
  EXPECT_EQ(m.n_members, 3u);
  EXPECT_EQ(m.n_nonmembers, 2u);
  EXPECT_EQ(m.n_incomplete, 1u);
  EXPECT_DOUBLE_EQ(m.accuracy, 3.0 / 5.0);
  EXPECT_NEAR(m.delta, 2.0 / 3.0 - 0.5, 1e-12);
  EXPECT_DOUBLE_EQ(m.auc_roc, 5.0 / 6.0);
  for (double t : m.tpr_at_fpr) EXPECT_GE(t, 0.0);
  auto back = nlohmann::json(m).get<MetricsReport>();
  EXPECT_DOUBLE_EQ(back.auc_roc, m.auc_roc);
  EXPECT_EQ(back.n_incomplete, 1u);
  auto header = metrics_csv_header();
  EXPECT_EQ(header.rfind("attack,acc,auc_roc,auc_pr,tpr_at_fpr_0.05,tpr_at_fpr_0.01,tpr_at_fpr_0.005,", 0), 0u) << header;
}

TEST(CalibrateWeights, FromKl) {
  EXPECT_EQ(weights_from_kl({2, 0, 0, 0}), (WeightVector{1, 0, 0, 0}));
  EXPECT_EQ(weights_from_kl({0.7, 0.7, 0.7, 0.7}), WeightVector::uniform());
  EXPECT_THROW(weights_from_kl({0, 0, 0, 0}), DegenerateDistribution);
}

TEST(CalibrateWeights, SeparableTypeGetsTheWeight) {
  std::vector<LabeledExam> dev;
  for (int i = 0; i < 10; ++i) {
    dev.push_back(exam_with("m" + std::to_string(i), {1.0, 0.5, 0.5, 0.5}, Label::Member));
    dev.push_back(exam_with("n" + std::to_string(i), {0.0, 0.5, 0.5, 0.5}, Label::NonMember));
  }
  auto c = calibrate_weights(dev);
  EXPECT_FALSE(c.degenerate);
  EXPECT_NEAR(c.weights.w_fb, 1.0, 1e-12);
  EXPECT_TRUE(c.weights.valid());
  for (auto& e : dev) e.graded.acc = {0.5, 0.5, 0.5, 0.5};
  c = calibrate_weights(dev);
  EXPECT_TRUE(c.degenerate);
  EXPECT_EQ(c.weights, WeightVector::uniform());
  dev[0].graded.counts[3] = 0;
  EXPECT_THROW(calibrate_weights(dev), ConfigInvalid);
}

TEST(CalibrateWeights, AlwaysValidOnRandomDevSets) {
  Rng rng(41);
  for (int i = 0; i < 50; ++i) {
    std::vector<LabeledExam> dev;
    for (int j = 0; j < 12; ++j) {
      std::array<double, 4> acc{};
      for (auto& a : acc) a = static_cast<double>(rng.below(8)) / 7.0;
      dev.push_back(exam_with("d" + std::to_string(j), acc, j % 2 ? Label::Member : Label::NonMember));
    }
    ASSERT_TRUE(calibrate_weights(dev).weights.valid());
  }
}

TEST(CalibrateThreshold, Examples) {
  EXPECT_DOUBLE_EQ(calibrate_threshold(labelled({80, 80, 80}, {20, 20})), 50.0);
  auto inter = labelled({10, 30, 50, 70}, {20, 40, 60, 80});
  double t = calibrate_threshold(inter);
  EXPECT_DOUBLE_EQ(balanced_accuracy(inter, t), 0.5);
  double best = 0;
  for (double c = -1; c <= 101; c += 0.5) best = std::max(best, testsupport::brute_balanced_accuracy(inter, c));
  EXPECT_DOUBLE_EQ(best, 0.5);
  t = calibrate_threshold(labelled({62.2}, {62.19}));
  EXPECT_LE(t, 62.2);
  EXPECT_GT(t, 62.19);
  EXPECT_EQ(decide(62.2, t), Label::Member);
  EXPECT_THROW(calibrate_threshold(labelled({}, {1})), SingleClass);
}

TEST(CalibrateThreshold, ReachesBruteForceOptimum) {
  Rng rng(77);
  for (int i = 0; i < 100; ++i) {
    auto s = testsupport::random_scores(rng, 60);
    double t = calibrate_threshold(s);
    double best = 0;
    for (const auto& x : s) best = std::max(best, testsupport::brute_balanced_accuracy(s, x.score));
    best = std::max(best, testsupport::brute_balanced_accuracy(s, 1e9));
    ASSERT_NEAR(balanced_accuracy(s, t), best, 1e-12) << "fixture " << i;
    ASSERT_GE(t, 0.0);
    ASSERT_LE(t, 100.0);
  }
}

TEST(Medoid, Examples) {
  TrialOutcome one;
  one.trial_id = "only";
  one.weights = WeightVector::published();
  auto p = medoid_params(std::span(&one, 1));
  EXPECT_EQ(p.weights, WeightVector::published());
  EXPECT_EQ(p.provenance, std::vector<std::string>{"only"});

  std::vector<TrialOutcome> line(3);
  const char* ids[] = {"a", "b", "c"};
  double taus[] = {40, 90, 60};
  for (int i = 0; i < 3; ++i) {
    line[i].trial_id = ids[i];
    line[i].weights = WeightVector::uniform();
    line[i].tau = taus[i];
  }
  EXPECT_EQ(medoid_params(line).provenance.front(), "c");
  EXPECT_DOUBLE_EQ(medoid_params(line).tau, 60.0);

  // two identical points: either is a medoid, the smaller id wins
  std::vector<TrialOutcome> tie(2);
  tie[0].trial_id = "z";
  tie[1].trial_id = "y";
  EXPECT_EQ(medoid_params(tie).provenance.front(), "y");
  EXPECT_THROW(medoid_params({}), std::invalid_argument);
}

TEST(Medoid, MatchesBruteForceAndIsObserved) {
  Rng rng(25);
  for (int r = 0; r < 20; ++r) {
    auto trials = testsupport::random_trials(rng);
    std::vector<std::array<double, 5>> pv;
    for (const auto& t : trials) pv.push_back(param_vector(t));
    auto p = medoid_params(trials);
    const auto& want = trials[testsupport::brute_medoid(pv)];
    EXPECT_EQ(p.provenance.front(), want.trial_id);
    EXPECT_EQ(p.weights, want.weights);
    EXPECT_EQ(p.tau, want.tau);
    EXPECT_EQ(p.provenance.size(), trials.size());
    auto back = nlohmann::json(p).get<CalibratedParams>();
    EXPECT_EQ(back.weights, p.weights);
  }
}
